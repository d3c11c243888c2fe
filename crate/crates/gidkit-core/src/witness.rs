//! Counterexample synthesis for failed identification queries.
//!
//! When [`crate::gid`] declares a query non-identifiable, this module makes
//! that answer checkable: it builds two discrete models that agree on every
//! input distribution in the collection (and are strictly positive
//! observationally) yet disagree on the target interventional quantity at a
//! concrete realization. The pair is verified exhaustively before being
//! returned, so a caller never has to trust the decision procedure alone.
//!
//! The construction works over a pruned subgraph assembled from rooted
//! c-forests, one per input set that contains the failing component. Inside
//! that subgraph, component variables carry a small modular alphabet and
//! everything else carries one parity bit per forest; a single straddling
//! latent is given an enlarged domain whose prior is then perturbed along a
//! direction orthogonal to every input's response — found by exact linear
//! algebra — so the inputs cannot see the change but the target can. Input
//! collections that never cover the component get a simpler parity
//! construction on the component alone.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gid::{failing_components, GivenCollection};
use crate::graph::{
    bidirected_spanning_tree, find_rooted_c_forest, CausalGraph, VarId, VarSet,
};
use crate::linalg::{solve_orthogonal, RowSpace};
use crate::rational::{rat, Rat};
use crate::sem::{canonical_parents, DiscreteSem};
use crate::table::DistTable;

/// Alphabet parameter for component variables: they take `KAPPA + 1`
/// values, and the modular message passed through the component survives
/// smoothing as long as the smoothing weight stays below `1 / KAPPA`.
pub const KAPPA: usize = 5;

/// How many times the smoothing weight is halved before the search gives
/// up. The first level almost always succeeds; the schedule exists so a
/// degenerate linear system at one level cannot sink the construction.
const MAX_EPSILON_STEPS: usize = 20;

/// Parameters of the linear (main-case) construction, recorded so a
/// witness bundle is reproducible and auditable.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessConstruction {
    /// Component alphabet parameter (alphabet size is `kappa + 1`).
    pub kappa: usize,
    /// Smoothing weight used in the component kernels.
    #[serde(with = "crate::rational::serde_rat")]
    pub epsilon: Rat,
    /// The straddling latent whose prior is perturbed.
    pub u0: String,
    /// The component-side child of `u0`.
    pub s0: VarId,
    /// Perturbation direction: orthogonal to every input response, with
    /// unit inner product against the target response at `v0`.
    #[serde(with = "crate::rational::serde_rat_vec")]
    pub beta: Vec<Rat>,
    /// The perturbed prior of `u0` used by the second model.
    #[serde(with = "crate::rational::serde_rat_vec")]
    pub p: Vec<Rat>,
}

/// A verified counterexample: two models over the original graph that the
/// input collection cannot tell apart, together with where they differ.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessPair {
    /// First model; strictly positive observationally.
    pub m1: DiscreteSem,
    /// Second model; agrees with `m1` on every input distribution.
    pub m2: DiscreteSem,
    /// The c-component of the query target that no input identifies.
    pub s: VarSet,
    /// The input collection the pair was built against.
    pub collection: GivenCollection,
    /// Full observed realization at which `Q[s]` differs between the models.
    pub v0: BTreeMap<VarId, usize>,
    /// Parameters of the linear construction; absent for the parity
    /// construction used when no input contains `s`.
    pub construction: Option<WitnessConstruction>,
}

/// Outcome of re-checking a [`WitnessPair`] by exhaustive enumeration.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationReport {
    /// Both models have strictly positive observational joints.
    pub positive: bool,
    /// Per input set, whether the two models induce identical tables.
    pub inputs_match: Vec<bool>,
    /// The target `Q[s]` tables differ at `v0`.
    pub target_differs: bool,
    /// Value of `Q[s]` at `v0` under the first model.
    #[serde(with = "crate::rational::serde_rat")]
    pub target_m1: Rat,
    /// Value of `Q[s]` at `v0` under the second model.
    #[serde(with = "crate::rational::serde_rat")]
    pub target_m2: Rat,
    /// All checks passed.
    pub ok: bool,
}

/// The spanning c-forest of `s` with no directed edges: vertex set `s`, a
/// spanning tree of the bidirected edges, every vertex a root.
///
/// Requires `s` to be a nonempty single c-component of `g`. This is the
/// shared sub-forest that every rooted c-forest in the construction is
/// required to agree on over `s`.
pub fn minimal_spanning_cforest(g: &CausalGraph, s: &VarSet) -> Result<CausalGraph> {
    if s.is_empty() {
        return Err(Error::InvalidArgument("S must be nonempty".into()));
    }
    if !g.is_single_c_component(s)? {
        return Err(Error::InvalidArgument(
            "S must be a single c-component".into(),
        ));
    }
    let tree = bidirected_spanning_tree(g, s, &std::collections::BTreeSet::new())?;
    CausalGraph::new(
        s.iter().cloned(),
        Vec::<(VarId, VarId)>::new(),
        tree.into_iter().collect::<Vec<_>>(),
    )
}

/// The pruned instance the main construction works on.
#[derive(Clone, Debug)]
pub struct ModifiedGraph {
    /// Union of the base forest and all rooted c-forests.
    pub g_prime: CausalGraph,
    /// One rooted c-forest per input set containing `s`, in scan order.
    pub forests: Vec<CausalGraph>,
    /// Every input set restricted to the pruned vertex set, reordered so
    /// the forest-bearing inputs come first. May contain duplicates or
    /// empty sets; order is what matters.
    pub a_prime: Vec<VarSet>,
    /// `a_prime[i]` came from `collection.get(order[i])`.
    pub order: Vec<usize>,
    /// Number of leading entries of `a_prime` that carry forests.
    pub qualifying: usize,
    /// The spanning c-forest over `s` itself.
    pub base_forest: CausalGraph,
}

/// Build the pruned instance for a failing component `s`: find a rooted
/// c-forest inside every input set that contains `s` (all of them must
/// yield one — `s` would not be failing otherwise), take their union as
/// the working graph, and restrict every input set to it.
pub fn modify_graph(
    g: &CausalGraph,
    s: &VarSet,
    collection: &GivenCollection,
) -> Result<ModifiedGraph> {
    let base_forest = minimal_spanning_cforest(g, s)?;
    let mut order: Vec<usize> = Vec::with_capacity(collection.len());
    for (i, a) in collection.iter().enumerate() {
        if s.is_subset(a) {
            order.push(i);
        }
    }
    let qualifying = order.len();
    for (i, a) in collection.iter().enumerate() {
        if !s.is_subset(a) {
            order.push(i);
        }
    }
    let mut forests = Vec::with_capacity(qualifying);
    for &i in &order[..qualifying] {
        let a = collection.get(i).expect("index from enumeration");
        if a == s {
            return Err(Error::InternalContradiction(format!(
                "component {s:?} equals an input set and should have been identified"
            )));
        }
        match find_rooted_c_forest(g, a, s, &base_forest)? {
            Some(f) => forests.push(f),
            None => {
                return Err(Error::InternalContradiction(format!(
                    "no rooted c-forest in input {a:?} although identification failed"
                )))
            }
        }
    }
    let mut g_prime = base_forest.clone();
    for f in &forests {
        g_prime = g_prime.union_with(f)?;
    }
    let a_prime: Vec<VarSet> = order
        .iter()
        .map(|&i| {
            collection
                .get(i)
                .expect("index from enumeration")
                .intersection(g_prime.observed())
                .cloned()
                .collect()
        })
        .collect();
    Ok(ModifiedGraph {
        g_prime,
        forests,
        a_prime,
        order,
        qualifying,
        base_forest,
    })
}

/// Everything about variable/latent typing in the pruned instance: which
/// forests each name belongs to, how vector values are encoded, and the
/// special roles (`u0`, its component-side child, per-forest boundary
/// vertices).
struct Scaffold {
    g_prime: CausalGraph,
    forests: Vec<CausalGraph>,
    s: VarSet,
    /// The straddling latent with the enlarged domain.
    u0: String,
    /// Component-side child of `u0`.
    s0: VarId,
    /// Per forest, the lexicographically smallest non-component vertex
    /// with a directed edge into the component.
    boundary: Vec<VarId>,
    /// Sorted forest indices per non-component observed vertex.
    obs_members: BTreeMap<VarId, Vec<usize>>,
    /// Sorted forest indices per bit-vector latent (everything except
    /// `u0` and the latents internal to the component).
    lat_members: BTreeMap<String, Vec<usize>>,
    /// Forests containing `u0` (always starts with 0).
    u0_members: Vec<usize>,
    /// Latents with both children in the component.
    u_s: std::collections::BTreeSet<String>,
    /// Pair behind every latent label of the pruned graph.
    lat_pairs: BTreeMap<String, (VarId, VarId)>,
}

impl Scaffold {
    fn new(modified: &ModifiedGraph, s: &VarSet) -> Result<Self> {
        let g_prime = modified.g_prime.clone();
        let forests = modified.forests.clone();
        if forests.is_empty() {
            return Err(Error::InternalContradiction(
                "linear construction requires at least one forest".into(),
            ));
        }
        let mut lat_pairs = BTreeMap::new();
        let mut u_s = std::collections::BTreeSet::new();
        for (label, (a, b)) in g_prime.latent_labels() {
            if s.contains(&a) && s.contains(&b) {
                u_s.insert(label.clone());
            }
            lat_pairs.insert(label, (a, b));
        }
        let u0 = forests[0]
            .latent_labels()
            .into_iter()
            .filter(|(_, (a, b))| s.contains(a) != s.contains(b))
            .map(|(label, _)| label)
            .min()
            .ok_or_else(|| {
                Error::InternalContradiction(
                    "first forest has no latent straddling the component".into(),
                )
            })?;
        let (ea, eb) = lat_pairs[&u0].clone();
        let s0 = if s.contains(&ea) { ea } else { eb };
        let mut boundary = Vec::with_capacity(forests.len());
        for f in &forests {
            let t = f
                .observed()
                .iter()
                .find(|v| !s.contains(*v) && !f.children_of(v).is_disjoint(s))
                .cloned()
                .ok_or_else(|| {
                    Error::InternalContradiction(
                        "forest has no vertex feeding the component".into(),
                    )
                })?;
            boundary.push(t);
        }
        let mut obs_members: BTreeMap<VarId, Vec<usize>> = BTreeMap::new();
        for v in g_prime.observed() {
            if s.contains(v) {
                continue;
            }
            let members: Vec<usize> = forests
                .iter()
                .enumerate()
                .filter(|(_, f)| f.contains(v))
                .map(|(i, _)| i)
                .collect();
            if members.is_empty() {
                return Err(Error::InternalContradiction(format!(
                    "vertex `{v}` belongs to no forest"
                )));
            }
            obs_members.insert(v.clone(), members);
        }
        let mut lat_members = BTreeMap::new();
        let mut u0_members = Vec::new();
        for (label, pair) in &lat_pairs {
            if u_s.contains(label) {
                continue;
            }
            let members: Vec<usize> = forests
                .iter()
                .enumerate()
                .filter(|(_, f)| f.bidirected_edges().contains(pair))
                .map(|(i, _)| i)
                .collect();
            if *label == u0 {
                u0_members = members;
            } else {
                if members.is_empty() {
                    return Err(Error::InternalContradiction(format!(
                        "latent `{label}` belongs to no forest"
                    )));
                }
                lat_members.insert(label.clone(), members);
            }
        }
        if u0_members.first() != Some(&0) {
            return Err(Error::InternalContradiction(
                "the straddling latent must belong to the first forest".into(),
            ));
        }
        Ok(Scaffold {
            g_prime,
            forests,
            s: s.clone(),
            u0,
            s0,
            boundary,
            obs_members,
            lat_members,
            u0_members,
            u_s,
            lat_pairs,
        })
    }

    /// Cardinality of the enlarged latent: `(KAPPA + 1) * 2^(members - 1)`.
    fn u0_card(&self) -> usize {
        (KAPPA + 1) << (self.u0_members.len() - 1)
    }

    /// The first (forest-0) component of `u0`, an integer in `0..=KAPPA`.
    fn u0_first(&self, value: usize) -> usize {
        value >> (self.u0_members.len() - 1)
    }

    /// The forest-`i` component of a vector-typed name, or `None` when the
    /// name does not belong to forest `i` (or is not vector-typed at all).
    /// For `u0` and forest 0 this is the full integer component; every
    /// other case is one bit, stored most-significant-first in membership
    /// order.
    fn component(&self, name: &str, value: usize, forest: usize) -> Option<usize> {
        if name == self.u0 {
            let pos = self.u0_members.iter().position(|&i| i == forest)?;
            if pos == 0 {
                return Some(self.u0_first(value));
            }
            return Some((value >> (self.u0_members.len() - 1 - pos)) & 1);
        }
        let members = self
            .obs_members
            .get(name)
            .or_else(|| self.lat_members.get(name))?;
        let pos = members.iter().position(|&i| i == forest)?;
        Some((value >> (members.len() - 1 - pos)) & 1)
    }

    fn domains(&self) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        for v in self.g_prime.observed() {
            let card = if self.s.contains(v) {
                KAPPA + 1
            } else {
                1 << self.obs_members[v].len()
            };
            out.insert(v.clone(), card);
        }
        for label in self.lat_pairs.keys() {
            let card = if self.u_s.contains(label) {
                KAPPA + 1
            } else if *label == self.u0 {
                self.u0_card()
            } else {
                1 << self.lat_members[label].len()
            };
            out.insert(label.clone(), card);
        }
        out
    }

    fn uniform_priors(&self, domains: &BTreeMap<String, usize>) -> BTreeMap<String, Vec<Rat>> {
        self.lat_pairs
            .keys()
            .map(|label| {
                let card = domains[label];
                (label.clone(), vec![rat(1, card as i64); card])
            })
            .collect()
    }

    /// Does the component-variable kernel flatten to uniform under this
    /// parent realization? True when any forest shows an "off-path" sign:
    /// its boundary vertex parenting the variable with component bit 0, any
    /// other forest member parenting it with component bit 1, or (for the
    /// child of `u0`) a set secondary bit of `u0`.
    fn flattened(&self, child: &str, parents: &[(String, usize)], vals: &[usize]) -> bool {
        for (i, f) in self.forests.iter().enumerate() {
            for ((pname, _), &pval) in parents.iter().zip(vals) {
                if *pname == self.u0 {
                    if child == self.s0
                        && i != 0
                        && self.component(pname, pval, i) == Some(1)
                    {
                        return true;
                    }
                    continue;
                }
                if self.u_s.contains(pname) {
                    continue;
                }
                let Some(comp) = self.component(pname, pval, i) else {
                    continue;
                };
                let in_forest = match self.lat_pairs.get(pname) {
                    Some(pair) => f.bidirected_edges().contains(pair),
                    None => f.contains(pname),
                };
                if !in_forest {
                    continue;
                }
                if *pname == self.boundary[i] {
                    if comp == 0 {
                        return true;
                    }
                } else if comp == 1 {
                    return true;
                }
            }
        }
        false
    }

    /// The modular message a component variable relays when not flattened:
    /// the sum of its component-internal latent parents, plus the integer
    /// component of `u0` for its child.
    fn message(&self, child: &str, parents: &[(String, usize)], vals: &[usize]) -> usize {
        let mut m = 0usize;
        for ((pname, _), &pval) in parents.iter().zip(vals) {
            if self.u_s.contains(pname) {
                m += pval;
            } else if *pname == self.u0 && child == self.s0 {
                m += self.u0_first(pval);
            }
        }
        m % (KAPPA + 1)
    }

    /// The deterministic value of a non-component vertex: per forest that
    /// contains it, the parity of its forest-parents' components.
    fn vector_value(&self, child: &VarId, parents: &[(String, usize)], vals: &[usize]) -> usize {
        let members = &self.obs_members[child];
        let mut code = 0usize;
        for (pos, &i) in members.iter().enumerate() {
            let f = &self.forests[i];
            let mut parity = 0usize;
            for ((pname, _), &pval) in parents.iter().zip(vals) {
                let in_forest = match self.lat_pairs.get(pname) {
                    Some(pair) => f.bidirected_edges().contains(pair),
                    None => f
                        .directed_edges()
                        .contains(&(pname.clone(), child.clone())),
                };
                if !in_forest {
                    continue;
                }
                let Some(comp) = self.component(pname, pval, i) else {
                    continue;
                };
                parity += comp;
            }
            if parity % 2 == 1 {
                code |= 1 << (members.len() - 1 - pos);
            }
        }
        code
    }

    fn build_m1(&self, epsilon: &Rat) -> Result<DiscreteSem> {
        let domains = self.domains();
        let priors = self.uniform_priors(&domains);
        let uniform = vec![rat(1, (KAPPA + 1) as i64); KAPPA + 1];
        let peak = Rat::one() - Rat::from_integer(KAPPA.into()) * epsilon;
        DiscreteSem::from_fn(&self.g_prime, &domains, &priors, |child, parents, vals| {
            if self.s.contains(child) {
                if self.flattened(child, parents, vals) {
                    return uniform.clone();
                }
                let m = self.message(child, parents, vals);
                let mut row = vec![epsilon.clone(); KAPPA + 1];
                row[m] = peak.clone();
                return row;
            }
            let value = self.vector_value(child, parents, vals);
            let card = domains[child];
            let mut row = vec![Rat::zero(); card];
            row[value] = Rat::one();
            row
        })
    }

    /// The realization the existence argument points at: component
    /// variables at 0, each boundary vertex carrying a 1 in its own
    /// forest's component, everything else 0.
    fn guided_candidate(&self) -> BTreeMap<VarId, usize> {
        let mut out = BTreeMap::new();
        for v in self.g_prime.observed() {
            if self.s.contains(v) {
                out.insert(v.clone(), 0usize);
                continue;
            }
            let members = &self.obs_members[v];
            let mut code = 0usize;
            for (pos, &i) in members.iter().enumerate() {
                if self.boundary[i] == *v {
                    code |= 1 << (members.len() - 1 - pos);
                }
            }
            out.insert(v.clone(), code);
        }
        out
    }
}

/// Build the first (unperturbed) model of the main construction over the
/// pruned graph, with smoothing weight `epsilon`.
pub fn construct_m1(
    modified: &ModifiedGraph,
    s: &VarSet,
    epsilon: &Rat,
) -> Result<DiscreteSem> {
    Scaffold::new(modified, s)?.build_m1(epsilon)
}

/// The exact linear system of the main construction: the response of every
/// restricted input to the sections of the enlarged latent, and the
/// response of the target component.
pub struct LinearSystem {
    /// Cardinality of the enlarged latent (row length).
    pub d: usize,
    /// Span of all input-response rows plus the all-ones row.
    pub omega: RowSpace,
    /// Target-response sections: `eta[j]` is `Q[s]` with the latent pinned
    /// to `j` (prior factor omitted).
    pub eta: Vec<DistTable>,
}

/// Collect the input-response rows of `m1` into a row space and the
/// target-response sections. `a_prime` are the restricted inputs with the
/// `qualifying` forest-bearing ones first; for those, the construction
/// guarantees (and this function checks) that the response cannot separate
/// the even integer components of `u0` with cleared secondary bits — the
/// slack the perturbation direction lives in.
pub fn build_linear_system(
    m1: &DiscreteSem,
    a_prime: &[VarSet],
    qualifying: usize,
    s: &VarSet,
    u0: &str,
) -> Result<LinearSystem> {
    let d = m1
        .card(u0)
        .ok_or_else(|| Error::InvalidVertex(u0.to_string()))?;
    let stride = 2 * d / (KAPPA + 1);
    let gamma: Vec<usize> = (0..=(KAPPA - 1) / 2).map(|x| x * stride).collect();
    let mut omega = RowSpace::new(d);
    omega.insert(&vec![Rat::one(); d]);
    for (i, a) in a_prime.iter().enumerate() {
        if a.is_empty() {
            // Q[∅] is identically 1; its response rows are all-ones rows,
            // which the space already contains.
            continue;
        }
        let sections = m1.q_eval_sections(a, u0)?;
        for t in 0..sections[0].len() {
            let row: Vec<Rat> = sections.iter().map(|tab| tab.values()[t].clone()).collect();
            if i < qualifying && gamma[1..].iter().any(|&gc| row[gc] != row[gamma[0]]) {
                return Err(Error::InternalContradiction(format!(
                    "input response separates the reserved sections of `{u0}`"
                )));
            }
            omega.insert(&row);
        }
    }
    let eta = m1.q_eval_sections(s, u0)?;
    Ok(LinearSystem { d, omega, eta })
}

/// Search for a realization whose target response escapes the span of the
/// input responses, and solve for the perturbation. Returns the
/// realization, the direction `beta`, and the perturbed prior `p`; `None`
/// when every realization's response is linearly dependent on the inputs'.
///
/// The `guided` realization is tried first; the scan then proceeds in
/// lexicographic order.
pub fn solve_witness_distribution(
    system: &LinearSystem,
    guided: &BTreeMap<VarId, usize>,
) -> Result<Option<(BTreeMap<VarId, usize>, Vec<Rat>, Vec<Rat>)>> {
    let d = system.d;
    let table = &system.eta[0];
    let codes: Vec<usize> = table
        .scope()
        .iter()
        .map(|v| {
            guided
                .get(v)
                .copied()
                .ok_or_else(|| Error::ScopeMismatch(format!("no guided value for `{v}`")))
        })
        .collect::<Result<_>>()?;
    let first = table.index_of(&codes)?;
    let candidates = std::iter::once(first).chain((0..table.len()).filter(move |&t| t != first));
    for t in candidates {
        let row: Vec<Rat> = system
            .eta
            .iter()
            .map(|tab| tab.values()[t].clone())
            .collect();
        let Some(beta) = solve_orthogonal(&system.omega, &row) else {
            continue;
        };
        let h = beta
            .iter()
            .map(|b| b.abs())
            .max()
            .expect("beta is nonempty");
        let scale = rat(2 * d as i64, 1) * &h;
        let base = rat(1, d as i64);
        let p: Vec<Rat> = beta.iter().map(|b| &base + b / &scale).collect();
        let v0 = table
            .scope()
            .iter()
            .cloned()
            .zip(table.decode(t))
            .collect();
        return Ok(Some((v0, beta, p)));
    }
    Ok(None)
}

/// Main-case driver: build the pruned instance once, then try successively
/// smaller smoothing weights until the linear system yields a perturbation.
fn linear_witness(
    g: &CausalGraph,
    s: &VarSet,
    collection: &GivenCollection,
) -> Result<(DiscreteSem, DiscreteSem, BTreeMap<VarId, usize>, WitnessConstruction)> {
    let modified = modify_graph(g, s, collection)?;
    let scaffold = Scaffold::new(&modified, s)?;
    let guided = scaffold.guided_candidate();
    for step in 0..MAX_EPSILON_STEPS {
        let epsilon = rat(1, (2 * KAPPA as i64) << step);
        let m1 = scaffold.build_m1(&epsilon)?;
        let system = build_linear_system(
            &m1,
            &modified.a_prime,
            modified.qualifying,
            s,
            &scaffold.u0,
        )?;
        if let Some((v0, beta, p)) = solve_witness_distribution(&system, &guided)? {
            let m2 = m1.with_latent_prior(&scaffold.u0, p.clone())?;
            let construction = WitnessConstruction {
                kappa: KAPPA,
                epsilon,
                u0: scaffold.u0.clone(),
                s0: scaffold.s0.clone(),
                beta,
                p,
            };
            return Ok((m1, m2, v0, construction));
        }
    }
    Err(Error::ConstructionFailed(
        "no distinguishing realization at any smoothing level".into(),
    ))
}

/// The parity construction for a component no input set contains: both
/// models live on the spanning c-forest of the component alone, every
/// variable and latent is binary, each variable noisily copies the XOR of
/// its incident tree latents, and the second model flips the equation of
/// the lexicographically smallest vertex. Every proper-subset input table
/// is exactly uniform in both models, while the full-component table
/// differs at the all-zeros realization (returned as the distinguishing
/// point).
pub fn special_case_witness(
    g: &CausalGraph,
    s: &VarSet,
) -> Result<(DiscreteSem, DiscreteSem, BTreeMap<VarId, usize>)> {
    let base = minimal_spanning_cforest(g, s)?;
    let epsilon = rat(1, 4);
    let domains: BTreeMap<String, usize> = base
        .observed()
        .iter()
        .map(|v| (v.clone(), 2usize))
        .chain(base.latent_labels().into_iter().map(|(l, _)| (l, 2usize)))
        .collect();
    let priors: BTreeMap<String, Vec<Rat>> = base
        .latent_labels()
        .into_iter()
        .map(|(l, _)| (l, vec![rat(1, 2), rat(1, 2)]))
        .collect();
    let lowest = s.iter().next().expect("component is nonempty").clone();
    let build = |flip_lowest: bool| {
        DiscreteSem::from_fn(&base, &domains, &priors, |child, parents, vals| {
            let mut xor = 0usize;
            for ((_, _), &pval) in parents.iter().zip(vals) {
                xor ^= pval & 1;
            }
            if flip_lowest && *child == lowest {
                xor ^= 1;
            }
            let mut row = vec![&epsilon / rat(2, 1); 2];
            row[xor] += Rat::one() - &epsilon;
            row
        })
    };
    let m1 = build(false)?;
    let m2 = build(true)?;
    let v0 = s.iter().map(|v| (v.clone(), 0usize)).collect();
    Ok((m1, m2, v0))
}

/// Replicate a model over the pruned graph onto the full graph: vertices
/// and latents outside the pruned instance get one-point domains, and the
/// kept kernels are replicated across any extra parent axes the full graph
/// adds. The distinguishing realization is extended with zeros.
fn lift_model(
    g: &CausalGraph,
    inner: &DiscreteSem,
    v0: &BTreeMap<VarId, usize>,
) -> Result<(DiscreteSem, BTreeMap<VarId, usize>)> {
    let gp = inner.graph();
    for v in gp.observed() {
        let inner_parents = canonical_parents(gp, v);
        let full: std::collections::BTreeSet<String> =
            canonical_parents(g, v).into_iter().collect();
        if !inner_parents.iter().all(|p| full.contains(p)) {
            return Err(Error::InternalContradiction(format!(
                "pruned parents of `{v}` are not a subset of its full parents"
            )));
        }
    }
    let mut domains: BTreeMap<String, usize> = g
        .observed()
        .iter()
        .map(|v| (v.clone(), inner.card(v).unwrap_or(1)))
        .collect();
    let mut priors = BTreeMap::new();
    for (label, _) in g.latent_labels() {
        match inner.latent_priors().get(&label) {
            Some(p) => {
                domains.insert(label.clone(), p.len());
                priors.insert(label, p.clone());
            }
            None => {
                domains.insert(label.clone(), 1);
                priors.insert(label, vec![Rat::one()]);
            }
        }
    }
    let lifted = DiscreteSem::from_fn(g, &domains, &priors, |child, parents, vals| {
        let Some(cpt) = inner.cpt(child) else {
            return vec![Rat::one()];
        };
        let projected: Vec<usize> = cpt
            .parents()
            .iter()
            .map(|p| {
                let k = parents
                    .iter()
                    .position(|(name, _)| name == p)
                    .expect("pruned parents are a subset of full parents");
                vals[k]
            })
            .collect();
        cpt.row_for(&projected)
            .expect("projected values are in range")
            .to_vec()
    })?;
    let v0_full = g
        .observed()
        .iter()
        .map(|v| (v.clone(), v0.get(v).copied().unwrap_or(0)))
        .collect();
    Ok((lifted, v0_full))
}

/// Build a verified counterexample for a non-identifiable query.
///
/// Finds the first c-component of the query target that the collection
/// fails to identify and constructs a model pair around it. Errors with
/// [`Error::InvalidArgument`] when the query is identifiable (there is
/// nothing to witness), and with [`Error::InternalContradiction`] if a
/// constructed pair ever fails its own verification.
pub fn build_witness(
    x: &VarSet,
    y: &VarSet,
    collection: &GivenCollection,
    g: &CausalGraph,
) -> Result<WitnessPair> {
    let failing = failing_components(x, y, collection, g)?;
    let Some(s) = failing.into_iter().next() else {
        return Err(Error::InvalidArgument(
            "query is identifiable; no counterexample exists".into(),
        ));
    };
    let covered = collection.iter().any(|a| s.is_subset(a));
    let (m1_inner, m2_inner, v0_inner, construction) = if covered {
        let (a, b, v0, c) = linear_witness(g, &s, collection)?;
        (a, b, v0, Some(c))
    } else {
        let (a, b, v0) = special_case_witness(g, &s)?;
        (a, b, v0, None)
    };
    let (m1, v0) = lift_model(g, &m1_inner, &v0_inner)?;
    let (m2, _) = lift_model(g, &m2_inner, &v0_inner)?;
    let pair = WitnessPair {
        m1,
        m2,
        s,
        collection: collection.clone(),
        v0,
        construction,
    };
    let report = verify_witness(&pair)?;
    if !report.ok {
        return Err(Error::InternalContradiction(format!(
            "constructed pair failed verification: {report:?}"
        )));
    }
    Ok(pair)
}

/// Re-check a witness pair by exhaustive enumeration: both models must be
/// strictly positive, must induce identical tables for every input set in
/// the collection, and must disagree on the component table at `v0`.
pub fn verify_witness(pair: &WitnessPair) -> Result<VerificationReport> {
    let positive = pair.m1.is_positive()? && pair.m2.is_positive()?;
    let mut inputs_match = Vec::with_capacity(pair.collection.len());
    for a in pair.collection.iter() {
        let t1 = pair.m1.q_eval(a)?;
        let t2 = pair.m2.q_eval(a)?;
        inputs_match.push(t1 == t2);
    }
    let q1 = pair.m1.q_eval(&pair.s)?;
    let q2 = pair.m2.q_eval(&pair.s)?;
    let target_m1 = q1.get(&pair.v0)?.clone();
    let target_m2 = q2.get(&pair.v0)?.clone();
    let target_differs = target_m1 != target_m2;
    let ok = positive && inputs_match.iter().all(|&b| b) && target_differs;
    Ok(VerificationReport {
        positive,
        inputs_match,
        target_differs,
        target_m1,
        target_m2,
        ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::varset;
    use crate::sem::builtin_models;
    use crate::testutil::{bow_graph, chain_confounded_graph, front_door_graph};

    fn coll(sets: &[&[&str]]) -> GivenCollection {
        GivenCollection::new(sets.iter().map(|s| varset(s.iter().copied())).collect())
            .unwrap()
    }

    #[test]
    fn spanning_cforest_shapes() {
        let g = chain_confounded_graph();
        let f = minimal_spanning_cforest(&g, &varset(["R"])).unwrap();
        assert_eq!(f.observed(), &varset(["R"]));
        assert!(f.bidirected_edges().is_empty());
        assert!(f.is_c_forest(&varset(["R"])));

        let f = minimal_spanning_cforest(&g, &varset(["R", "T2"])).unwrap();
        assert_eq!(f.bidirected_edges().len(), 1);
        assert!(f.is_c_forest(&varset(["R", "T2"])));
    }

    #[test]
    fn special_case_two_vertex_values() {
        let g = CausalGraph::new(
            ["A", "B"].map(String::from),
            Vec::<(String, String)>::new(),
            vec![("A".to_string(), "B".to_string())],
        )
        .unwrap();
        let s = varset(["A", "B"]);
        let (m1, m2, v0) = special_case_witness(&g, &s).unwrap();
        assert_eq!(v0, [("A".to_string(), 0), ("B".to_string(), 0)].into());
        let zeros: BTreeMap<VarId, usize> = v0.clone();
        assert_eq!(*m1.q_eval(&s).unwrap().get(&zeros).unwrap(), rat(25, 64));
        assert_eq!(*m2.q_eval(&s).unwrap().get(&zeros).unwrap(), rat(7, 64));
        // Every proper-subset table is exactly uniform in both models.
        for sub in [varset(["A"]), varset(["B"])] {
            for m in [&m1, &m2] {
                assert!(m.q_eval(&sub).unwrap().values().iter().all(|x| *x == rat(1, 2)));
            }
        }
    }

    #[test]
    fn special_case_three_path_values() {
        let g = CausalGraph::new(
            ["V1", "V2", "V3"].map(String::from),
            Vec::<(String, String)>::new(),
            vec![
                ("V1".to_string(), "V2".to_string()),
                ("V2".to_string(), "V3".to_string()),
            ],
        )
        .unwrap();
        let s = varset(["V1", "V2", "V3"]);
        let (m1, m2, v0) = special_case_witness(&g, &s).unwrap();
        assert_eq!(*m1.q_eval(&s).unwrap().get(&v0).unwrap(), rat(91, 512));
        assert_eq!(*m2.q_eval(&s).unwrap().get(&v0).unwrap(), rat(37, 512));
        let pair = varset(["V1", "V2"]);
        for m in [&m1, &m2] {
            assert!(m.q_eval(&pair).unwrap().values().iter().all(|x| *x == rat(1, 4)));
        }
    }

    #[test]
    fn bow_witness_end_to_end() {
        let g = bow_graph();
        let pair = build_witness(
            &varset(["X"]),
            &varset(["Y"]),
            &coll(&[&["X", "Y"]]),
            &g,
        )
        .unwrap();
        let c = pair.construction.as_ref().expect("main construction");
        assert_eq!(c.u0, "U(X,Y)");
        assert_eq!(c.s0, "Y");
        assert_eq!(c.kappa, KAPPA);
        assert_eq!(c.epsilon, rat(1, 10));
        assert_eq!(c.p.len(), 6);
        assert_eq!(
            pair.v0,
            [("X".to_string(), 1), ("Y".to_string(), 0)].into()
        );
        let report = verify_witness(&pair).unwrap();
        assert!(report.ok, "{report:?}");
        assert!(report.positive);
        assert_eq!(report.inputs_match, vec![true]);
    }

    #[test]
    fn chain_witness_end_to_end() {
        let g = chain_confounded_graph();
        let pair = build_witness(
            &varset(["T1", "T2", "T3"]),
            &varset(["R"]),
            &coll(&[&["R", "T1", "T2", "T3"]]),
            &g,
        )
        .unwrap();
        let c = pair.construction.as_ref().expect("main construction");
        assert_eq!(c.u0, "U(R,T2)");
        assert_eq!(c.s0, "R");
        assert_eq!(c.p.len(), 6);
        assert!(verify_witness(&pair).unwrap().ok);
    }

    #[test]
    fn uncovered_component_gets_parity_witness() {
        let g = bow_graph();
        let pair = build_witness(&varset(["X"]), &varset(["Y"]), &coll(&[&["X"]]), &g).unwrap();
        assert!(pair.construction.is_none());
        assert_eq!(pair.s, varset(["Y"]));
        let q1 = pair.m1.q_eval(&pair.s).unwrap();
        let q2 = pair.m2.q_eval(&pair.s).unwrap();
        assert_eq!(*q1.get(&pair.v0).unwrap(), rat(7, 8));
        assert_eq!(*q2.get(&pair.v0).unwrap(), rat(1, 8));
        assert!(verify_witness(&pair).unwrap().ok);
    }

    #[test]
    fn identifiable_query_is_refused() {
        let g = front_door_graph();
        let err = build_witness(
            &varset(["X"]),
            &varset(["Y"]),
            &coll(&[&["M", "X", "Y"]]),
            &g,
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)), "{err}");
    }

    #[test]
    fn identical_pair_fails_verification() {
        let g = bow_graph();
        let mut pair = build_witness(
            &varset(["X"]),
            &varset(["Y"]),
            &coll(&[&["X", "Y"]]),
            &g,
        )
        .unwrap();
        pair.m2 = pair.m1.clone();
        let report = verify_witness(&pair).unwrap();
        assert!(!report.target_differs);
        assert!(!report.ok);
    }

    #[test]
    fn verification_rejects_zero_cells() {
        // A hand-built pair with deterministic kernels: inputs match and
        // the target differs, but the joints have zero cells, so the pair
        // must be rejected.
        let (m1, m2) = builtin_models()["example2"].clone();
        let pair = WitnessPair {
            s: varset(["Y1", "Y2"]),
            collection: coll(&[&["X1", "X2", "Y1", "Y2"]]),
            v0: m1
                .graph()
                .observed()
                .iter()
                .map(|v| (v.clone(), 0usize))
                .collect(),
            m1,
            m2,
            construction: None,
        };
        let report = verify_witness(&pair).unwrap();
        assert!(!report.positive);
        assert!(!report.ok);
    }

    #[test]
    fn witness_pair_round_trips_as_json() {
        let g = bow_graph();
        let pair = build_witness(
            &varset(["X"]),
            &varset(["Y"]),
            &coll(&[&["X", "Y"]]),
            &g,
        )
        .unwrap();
        let json = serde_json::to_string(&pair).unwrap();
        let back: WitnessPair = serde_json::from_str(&json).unwrap();
        assert_eq!(back, pair);
    }
}
