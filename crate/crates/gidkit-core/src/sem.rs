//! Finite-domain structural equation models with exact rational CPTs.
//!
//! A [`DiscreteSem`] attaches, to each observed vertex of a
//! [`CausalGraph`], a conditional probability table over its observed
//! parents and incident latent variables, and to each latent a prior. All
//! distributions are exact rationals. The module enumerates joint
//! ([`DiscreteSem::joint`]), post-interventional
//! ([`DiscreteSem::intervene`]) and partially intervened
//! ([`DiscreteSem::q_eval`]) distributions by exhaustive summation over the
//! latent space — no sampling, no floats.
//!
//! Enumeration cost is the product of all domain sizes; calls refuse to run
//! past a state budget (default 10^7, overridable through the
//! `GIDKIT_MAX_STATES` environment variable).

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::graph::{CausalGraph, VarId, VarSet};
use crate::rational::{format_rat, parse_rat, rat, Rat};
use crate::table::DistTable;

/// Default ceiling on `|dom(scope)| × |dom(latents)|` per enumeration call.
pub const DEFAULT_MAX_STATES: u64 = 10_000_000;

/// Environment variable overriding [`DEFAULT_MAX_STATES`].
pub const MAX_STATES_ENV: &str = "GIDKIT_MAX_STATES";

fn max_states() -> u64 {
    parse_max_states(std::env::var(MAX_STATES_ENV).ok().as_deref())
}

fn parse_max_states(raw: Option<&str>) -> u64 {
    raw.and_then(|s| s.trim().parse::<u64>().ok())
        .filter(|v| *v > 0)
        .unwrap_or(DEFAULT_MAX_STATES)
}

/// A conditional probability table `P(child | parents)`.
///
/// Rows are indexed by the mixed-radix code of the parent realization
/// (parent order as listed, last parent fastest); each row is a distribution
/// over the child's domain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cpt {
    parents: Vec<String>,
    parent_cards: Vec<usize>,
    child_card: usize,
    rows: Vec<Vec<Rat>>,
}

impl Cpt {
    /// Validated constructor: every row must be a distribution (nonnegative,
    /// summing to exactly 1) of length `child_card`, and there must be one
    /// row per parent realization.
    pub fn new(
        parents: Vec<(String, usize)>,
        child_card: usize,
        rows: Vec<Vec<Rat>>,
    ) -> Result<Self> {
        if child_card == 0 {
            return Err(Error::InvalidArgument("zero child cardinality".into()));
        }
        let mut row_count: usize = 1;
        for (name, card) in &parents {
            if *card == 0 {
                return Err(Error::InvalidArgument(format!(
                    "zero cardinality for parent `{name}`"
                )));
            }
            row_count = row_count.checked_mul(*card).ok_or(Error::TooLarge {
                states: u64::MAX,
                limit: usize::MAX as u64,
            })?;
        }
        if rows.len() != row_count {
            return Err(Error::InvalidArgument(format!(
                "expected {row_count} CPT rows, got {}",
                rows.len()
            )));
        }
        for row in &rows {
            if row.len() != child_card {
                return Err(Error::InvalidArgument(format!(
                    "CPT row of length {}, expected {child_card}",
                    row.len()
                )));
            }
            if row.iter().any(|p| *p < Rat::zero()) {
                return Err(Error::InvalidArgument("negative CPT entry".into()));
            }
            if row.iter().sum::<Rat>() != Rat::one() {
                return Err(Error::InvalidArgument(
                    "CPT row does not sum to 1".into(),
                ));
            }
        }
        let (parents, parent_cards) = parents.into_iter().unzip();
        Ok(Cpt {
            parents,
            parent_cards,
            child_card,
            rows,
        })
    }

    /// Build row-by-row from a function of the parent realization.
    pub fn from_fn(
        parents: Vec<(String, usize)>,
        child_card: usize,
        mut f: impl FnMut(&[usize]) -> Vec<Rat>,
    ) -> Result<Self> {
        let cards: Vec<usize> = parents.iter().map(|(_, c)| *c).collect();
        let count = cards.iter().product::<usize>();
        let mut rows = Vec::with_capacity(count);
        let mut codes = vec![0usize; cards.len()];
        for flat in 0..count {
            decode_mixed(flat, &cards, &mut codes);
            rows.push(f(&codes));
        }
        Cpt::new(parents, child_card, rows)
    }

    /// Parent names, in row-index order.
    pub fn parents(&self) -> &[String] {
        &self.parents
    }

    /// Parent cardinalities, parallel to [`parents`](Self::parents).
    pub fn parent_cards(&self) -> &[usize] {
        &self.parent_cards
    }

    /// Cardinality of the child.
    pub fn child_card(&self) -> usize {
        self.child_card
    }

    /// All rows, in parent-code order.
    pub fn rows(&self) -> &[Vec<Rat>] {
        &self.rows
    }

    /// The distribution over the child given parent values.
    pub fn row_for(&self, parent_values: &[usize]) -> Result<&[Rat]> {
        if parent_values.len() != self.parent_cards.len() {
            return Err(Error::InvalidRealization(format!(
                "expected {} parent values, got {}",
                self.parent_cards.len(),
                parent_values.len()
            )));
        }
        let mut idx = 0usize;
        for (k, (&v, &c)) in parent_values.iter().zip(&self.parent_cards).enumerate() {
            if v >= c {
                return Err(Error::InvalidRealization(format!(
                    "value {v} out of range for parent `{}`",
                    self.parents[k]
                )));
            }
            idx = idx * c + v;
        }
        Ok(&self.rows[idx])
    }
}

fn decode_mixed(mut flat: usize, cards: &[usize], out: &mut [usize]) {
    for k in (0..cards.len()).rev() {
        out[k] = flat % cards[k];
        flat /= cards[k];
    }
}

/// The canonical CPT parent order for `v`: observed parents in
/// lexicographic order, then incident latent labels in lexicographic order.
pub fn canonical_parents(graph: &CausalGraph, v: &str) -> Vec<String> {
    let mut list: Vec<String> = graph.parents_of(v).into_iter().collect();
    for (label, (a, b)) in graph.latent_labels() {
        if a == v || b == v {
            list.push(label);
        }
    }
    list
}

/// A discrete structural equation model over a semi-Markovian graph.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SemWire", into = "SemWire")]
pub struct DiscreteSem {
    graph: CausalGraph,
    domains: BTreeMap<String, usize>,
    latent_priors: BTreeMap<String, Vec<Rat>>,
    cpts: BTreeMap<VarId, Cpt>,
}

impl DiscreteSem {
    /// Validated constructor.
    ///
    /// `domains` must assign a positive cardinality to every observed vertex
    /// and every latent label (and nothing else); `latent_priors` must give
    /// each latent an exact distribution; `cpts` must give each observed
    /// vertex a CPT whose parent axes are exactly [`canonical_parents`] with
    /// the cardinalities from `domains`.
    pub fn new(
        graph: CausalGraph,
        domains: BTreeMap<String, usize>,
        latent_priors: BTreeMap<String, Vec<Rat>>,
        cpts: BTreeMap<VarId, Cpt>,
    ) -> Result<Self> {
        let labels: Vec<String> = graph.latent_labels().into_iter().map(|(l, _)| l).collect();
        let mut expected_names: Vec<&String> = graph.observed().iter().collect();
        expected_names.extend(labels.iter());
        if domains.len() != expected_names.len()
            || !expected_names.iter().all(|n| domains.contains_key(*n))
        {
            return Err(Error::InvalidArgument(
                "domains must cover exactly the observed vertices and latent labels".into(),
            ));
        }
        if domains.values().any(|c| *c == 0) {
            return Err(Error::InvalidArgument("zero cardinality in domains".into()));
        }
        if latent_priors.len() != labels.len()
            || !labels.iter().all(|l| latent_priors.contains_key(l))
        {
            return Err(Error::InvalidArgument(
                "latent_priors must cover exactly the latent labels".into(),
            ));
        }
        for (label, prior) in &latent_priors {
            if prior.len() != domains[label] {
                return Err(Error::InvalidArgument(format!(
                    "prior for `{label}` has wrong length"
                )));
            }
            if prior.iter().any(|p| *p < Rat::zero()) {
                return Err(Error::InvalidArgument(format!(
                    "negative prior entry for `{label}`"
                )));
            }
            if prior.iter().sum::<Rat>() != Rat::one() {
                return Err(Error::InvalidArgument(format!(
                    "prior for `{label}` does not sum to 1"
                )));
            }
        }
        if cpts.len() != graph.observed().len()
            || !graph.observed().iter().all(|v| cpts.contains_key(v))
        {
            return Err(Error::InvalidArgument(
                "cpts must cover exactly the observed vertices".into(),
            ));
        }
        for (v, cpt) in &cpts {
            let expected = canonical_parents(&graph, v);
            if cpt.parents != expected {
                return Err(Error::InvalidArgument(format!(
                    "CPT for `{v}` lists parents {:?}, expected {expected:?}",
                    cpt.parents
                )));
            }
            let expected_cards: Vec<usize> =
                expected.iter().map(|p| domains[p]).collect();
            if cpt.parent_cards != expected_cards {
                return Err(Error::InvalidArgument(format!(
                    "CPT for `{v}` has parent cardinalities {:?}, expected {expected_cards:?}",
                    cpt.parent_cards
                )));
            }
            if cpt.child_card != domains[v] {
                return Err(Error::InvalidArgument(format!(
                    "CPT for `{v}` has child cardinality {}, expected {}",
                    cpt.child_card, domains[v]
                )));
            }
        }
        Ok(DiscreteSem {
            graph,
            domains,
            latent_priors,
            cpts,
        })
    }

    /// Build a model by generating each CPT row from
    /// `row_fn(child, parents_with_cards, parent_values)`.
    pub fn from_fn(
        graph: &CausalGraph,
        domains: &BTreeMap<String, usize>,
        latent_priors: &BTreeMap<String, Vec<Rat>>,
        mut row_fn: impl FnMut(&VarId, &[(String, usize)], &[usize]) -> Vec<Rat>,
    ) -> Result<Self> {
        let mut cpts = BTreeMap::new();
        for v in graph.observed() {
            let parents: Vec<(String, usize)> = canonical_parents(graph, v)
                .into_iter()
                .map(|p| {
                    let card = *domains.get(&p).ok_or_else(|| {
                        Error::InvalidArgument(format!("no domain for `{p}`"))
                    })?;
                    Ok((p, card))
                })
                .collect::<Result<_>>()?;
            let child_card = *domains
                .get(v)
                .ok_or_else(|| Error::InvalidArgument(format!("no domain for `{v}`")))?;
            let cpt = Cpt::from_fn(parents.clone(), child_card, |vals| {
                row_fn(v, &parents, vals)
            })?;
            cpts.insert(v.clone(), cpt);
        }
        DiscreteSem::new(
            graph.clone(),
            domains.clone(),
            latent_priors.clone(),
            cpts,
        )
    }

    /// The underlying graph.
    pub fn graph(&self) -> &CausalGraph {
        &self.graph
    }

    /// Cardinalities of all variables (observed and latent).
    pub fn domains(&self) -> &BTreeMap<String, usize> {
        &self.domains
    }

    /// Cardinality of one variable (observed or latent label).
    pub fn card(&self, name: &str) -> Option<usize> {
        self.domains.get(name).copied()
    }

    /// Latent priors by label.
    pub fn latent_priors(&self) -> &BTreeMap<String, Vec<Rat>> {
        &self.latent_priors
    }

    /// The CPT of an observed vertex.
    pub fn cpt(&self, v: &str) -> Option<&Cpt> {
        self.cpts.get(v)
    }

    /// Clone of this model with the prior of one latent replaced.
    pub fn with_latent_prior(&self, label: &str, prior: Vec<Rat>) -> Result<Self> {
        if !self.latent_priors.contains_key(label) {
            return Err(Error::InvalidVertex(label.to_string()));
        }
        let mut priors = self.latent_priors.clone();
        priors.insert(label.to_string(), prior);
        DiscreteSem::new(
            self.graph.clone(),
            self.domains.clone(),
            priors,
            self.cpts.clone(),
        )
    }

    fn observed_scope(&self) -> Vec<(VarId, usize)> {
        self.graph
            .observed()
            .iter()
            .map(|v| (v.clone(), self.domains[v]))
            .collect()
    }

    /// The joint observational distribution `P(V)`.
    pub fn joint(&self) -> Result<DistTable> {
        self.enumerate_table(
            self.observed_scope(),
            &BTreeMap::new(),
            &self.graph.observed().clone(),
            None,
        )
    }

    /// The post-interventional distribution over `V ∖ dom(x)` after forcing
    /// the variables in `x` to the given values.
    pub fn intervene(&self, x: &BTreeMap<VarId, usize>) -> Result<DistTable> {
        for (name, value) in x {
            let card = self
                .graph
                .contains(name)
                .then(|| self.domains[name])
                .ok_or_else(|| Error::InvalidVertex(name.clone()))?;
            if *value >= card {
                return Err(Error::InvalidRealization(format!(
                    "value {value} out of range for `{name}` (cardinality {card})"
                )));
            }
        }
        let scope: Vec<(VarId, usize)> = self
            .observed_scope()
            .into_iter()
            .filter(|(v, _)| !x.contains_key(v))
            .collect();
        let kept: VarSet = scope.iter().map(|(v, _)| v.clone()).collect();
        self.enumerate_table(scope, x, &kept, None)
    }

    /// The table `Q[S]` over the full observed domain:
    /// `Q[S](v) = P_{v∖s}(s)`, the probability of `S = s` when everything
    /// outside `S` is held fixed at `v`.
    pub fn q_eval(&self, s: &VarSet) -> Result<DistTable> {
        for v in s {
            if !self.graph.contains(v) {
                return Err(Error::InvalidVertex(v.clone()));
            }
        }
        self.enumerate_table(self.observed_scope(), &BTreeMap::new(), s, None)
    }

    /// Like [`q_eval`](Self::q_eval), but with one latent pinned to each of
    /// its values in turn instead of being summed out (and its prior factor
    /// omitted). Entry `j` of the result is the `Q[S]` sum with
    /// `latent = j`.
    pub fn q_eval_sections(&self, s: &VarSet, latent: &str) -> Result<Vec<DistTable>> {
        let card = self
            .latent_priors
            .contains_key(latent)
            .then(|| self.domains[latent])
            .ok_or_else(|| Error::InvalidVertex(latent.to_string()))?;
        (0..card)
            .map(|j| {
                self.enumerate_table(
                    self.observed_scope(),
                    &BTreeMap::new(),
                    s,
                    Some((latent, j)),
                )
            })
            .collect()
    }

    /// True iff every entry of the joint distribution is strictly positive.
    pub fn is_positive(&self) -> Result<bool> {
        Ok(self.joint()?.all_positive())
    }

    /// Shared enumeration kernel. Builds the table over `scope` whose entry
    /// at `w` is `Σ_latents Π priors Π_{X ∈ factor_children} P(x | pa(X))`,
    /// with parent/child values drawn from `w`, `fixed_obs`, and the latent
    /// assignment. `pinned_latent` fixes one latent's value and omits both
    /// its prior factor and its summation.
    fn enumerate_table(
        &self,
        scope: Vec<(VarId, usize)>,
        fixed_obs: &BTreeMap<VarId, usize>,
        factor_children: &VarSet,
        pinned_latent: Option<(&str, usize)>,
    ) -> Result<DistTable> {
        #[derive(Clone, Copy)]
        enum Src {
            Scope(usize),
            Lat(usize),
            Fixed(usize),
        }
        struct Factor<'a> {
            cpt: &'a Cpt,
            child: Src,
            parents: Vec<Src>,
        }

        if let Some((label, j)) = pinned_latent {
            let card = self
                .latent_priors
                .contains_key(label)
                .then(|| self.domains[label])
                .ok_or_else(|| Error::InvalidVertex(label.to_string()))?;
            if j >= card {
                return Err(Error::InvalidRealization(format!(
                    "value {j} out of range for latent `{label}`"
                )));
            }
        }

        // Latents that touch a factor child get summed over (all others
        // integrate to 1 and are skipped); the pinned one is excluded.
        let mut lat_names: Vec<String> = Vec::new();
        for (label, (a, b)) in self.graph.latent_labels() {
            if pinned_latent.is_some_and(|(p, _)| p == label) {
                continue;
            }
            if factor_children.contains(&a) || factor_children.contains(&b) {
                lat_names.push(label);
            }
        }
        let lat_cards: Vec<usize> = lat_names.iter().map(|l| self.domains[l]).collect();
        let priors: Vec<&[Rat]> = lat_names
            .iter()
            .map(|l| self.latent_priors[l].as_slice())
            .collect();

        let scope_total = scope
            .iter()
            .try_fold(1u64, |acc, (_, c)| acc.checked_mul(*c as u64));
        let lat_total = lat_cards
            .iter()
            .try_fold(1u64, |acc, c| acc.checked_mul(*c as u64));
        let limit = max_states();
        let states = scope_total
            .zip(lat_total)
            .and_then(|(a, b)| a.checked_mul(b))
            .unwrap_or(u64::MAX);
        if states > limit {
            return Err(Error::TooLarge { states, limit });
        }
        let scope_size = scope_total.expect("bounded by limit") as usize;
        let lat_size = lat_total.expect("bounded by limit") as usize;

        let scope_pos: BTreeMap<&VarId, usize> = scope
            .iter()
            .enumerate()
            .map(|(i, (v, _))| (v, i))
            .collect();
        let lat_pos: BTreeMap<&String, usize> = lat_names
            .iter()
            .enumerate()
            .map(|(i, l)| (l, i))
            .collect();
        let resolve = |name: &String| -> Result<Src> {
            if let Some(&i) = scope_pos.get(name) {
                Ok(Src::Scope(i))
            } else if let Some(&v) = fixed_obs.get(name) {
                Ok(Src::Fixed(v))
            } else if let Some(&i) = lat_pos.get(name) {
                Ok(Src::Lat(i))
            } else if let Some((p, j)) = pinned_latent {
                if p == name {
                    Ok(Src::Fixed(j))
                } else {
                    Err(Error::InternalContradiction(format!(
                        "unresolvable variable `{name}` in enumeration"
                    )))
                }
            } else {
                Err(Error::InternalContradiction(format!(
                    "unresolvable variable `{name}` in enumeration"
                )))
            }
        };

        let mut factors: Vec<Factor> = Vec::with_capacity(factor_children.len());
        for child in factor_children {
            let cpt = self.cpts.get(child).ok_or_else(|| {
                Error::InvalidVertex(child.clone())
            })?;
            factors.push(Factor {
                cpt,
                child: resolve(child)?,
                parents: cpt
                    .parents
                    .iter()
                    .map(resolve)
                    .collect::<Result<Vec<_>>>()?,
            });
        }

        let scope_cards: Vec<usize> = scope.iter().map(|(_, c)| *c).collect();
        let values = exec::map_indexed(scope_size, |flat| {
            let mut w = vec![0usize; scope_cards.len()];
            decode_mixed(flat, &scope_cards, &mut w);
            let mut lat = vec![0usize; lat_cards.len()];
            let mut acc = Rat::zero();
            for lflat in 0..lat_size {
                decode_mixed(lflat, &lat_cards, &mut lat);
                let read = |src: Src| -> usize {
                    match src {
                        Src::Scope(i) => w[i],
                        Src::Lat(i) => lat[i],
                        Src::Fixed(v) => v,
                    }
                };
                let mut term = Rat::one();
                for (p, &code) in priors.iter().zip(&lat) {
                    term *= &p[code];
                }
                for f in &factors {
                    if term.is_zero() {
                        break;
                    }
                    let mut row = 0usize;
                    for (src, &card) in f.parents.iter().zip(f.cpt.parent_cards()) {
                        row = row * card + read(*src);
                    }
                    term *= &f.cpt.rows[row][read(f.child)];
                }
                acc += term;
            }
            acc
        });
        DistTable::from_raw(scope, values)
    }
}

/// A model on `graph` with binary observed and latent domains and CPT rows
/// drawn as random strictly positive rationals; deterministic in `seed`.
/// The resulting joint distribution is strictly positive.
pub fn random_positive_sem(graph: &CausalGraph, seed: u64) -> DiscreteSem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut random_dist = move |k: usize| -> Vec<Rat> {
        let nums: Vec<i64> = (0..k).map(|_| rng.gen_range(1..=9)).collect();
        let den: i64 = nums.iter().sum();
        nums.into_iter().map(|n| rat(n, den)).collect()
    };
    let mut domains = BTreeMap::new();
    for v in graph.observed() {
        domains.insert(v.clone(), 2usize);
    }
    let mut priors = BTreeMap::new();
    for (label, _) in graph.latent_labels() {
        domains.insert(label.clone(), 2usize);
        priors.insert(label, random_dist(2));
    }
    DiscreteSem::from_fn(graph, &domains, &priors, |_, _, _| random_dist(2))
        .expect("generated model is valid by construction")
}

/// The two counterexample model pairs shipped with the library, keyed
/// `"example2"` (on the two-treatment/two-outcome graph) and `"thicket"`
/// (on the confounded chain into `R`). Each pair has identical joint
/// distributions but differing interventional behavior, and each violates
/// strict positivity — which is the point they make.
pub fn builtin_models() -> BTreeMap<String, (DiscreteSem, DiscreteSem)> {
    let mut out = BTreeMap::new();
    out.insert("example2".to_string(), example2_pair());
    out.insert("thicket".to_string(), thicket_pair());
    out
}

fn example2_pair() -> (DiscreteSem, DiscreteSem) {
    let graph = CausalGraph::new(
        ["X1", "X2", "Y1", "Y2"],
        [("X1".into(), "Y1".into()), ("X2".into(), "Y2".into())],
        [("X1".into(), "X2".into()), ("Y1".into(), "Y2".into())],
    )
    .expect("valid graph");
    let domains: BTreeMap<String, usize> = ["X1", "X2", "Y1", "Y2", "U(X1,X2)", "U(Y1,Y2)"]
        .into_iter()
        .map(|n| (n.to_string(), 2usize))
        .collect();
    let priors: BTreeMap<String, Vec<Rat>> = [
        ("U(X1,X2)".to_string(), vec![rat(1, 2), rat(1, 2)]),
        ("U(Y1,Y2)".to_string(), vec![rat(1, 2), rat(1, 2)]),
    ]
    .into_iter()
    .collect();

    // Each model: X1 = X2 = the X-side latent, deterministically. The
    // outcome CPTs mix the Y-side latent u and the observed parent x:
    // first model:  P(Y1 = u)     = 1/3,  P(Y2 = u ⊕ x2) = 1/3;
    // second model: P(Y1 = u ⊕ x1) = 2/3, P(Y2 = u)      = 2/3.
    let build = |m2: bool| {
        DiscreteSem::from_fn(&graph, &domains, &priors, |child, _, vals| {
            match child.as_str() {
                "X1" | "X2" => {
                    let u = vals[0];
                    (0..2).map(|x| rat((x == u) as i64, 1)).collect()
                }
                "Y1" => {
                    let (x1, u) = (vals[0], vals[1]);
                    let hit = if m2 { u ^ x1 } else { u };
                    let p_hit = if m2 { rat(2, 3) } else { rat(1, 3) };
                    (0..2)
                        .map(|y| {
                            if y == hit {
                                p_hit.clone()
                            } else {
                                rat(1, 1) - p_hit.clone()
                            }
                        })
                        .collect()
                }
                "Y2" => {
                    let (x2, u) = (vals[0], vals[1]);
                    let hit = if m2 { u } else { u ^ x2 };
                    let p_hit = if m2 { rat(2, 3) } else { rat(1, 3) };
                    (0..2)
                        .map(|y| {
                            if y == hit {
                                p_hit.clone()
                            } else {
                                rat(1, 1) - p_hit.clone()
                            }
                        })
                        .collect()
                }
                other => unreachable!("unknown vertex {other}"),
            }
        })
        .expect("valid model")
    };
    (build(false), build(true))
}

fn thicket_pair() -> (DiscreteSem, DiscreteSem) {
    let graph = CausalGraph::new(
        ["R", "T1", "T2", "T3"],
        [
            ("T3".into(), "T2".into()),
            ("T2".into(), "T1".into()),
            ("T1".into(), "R".into()),
        ],
        [
            ("R".into(), "T2".into()),
            ("T1".into(), "T3".into()),
            ("R".into(), "T3".into()),
        ],
    )
    .expect("valid graph");
    // T1 and T2 are two-bit vectors encoded as one variable each:
    // code = 2·(first component) + (second component).
    let domains: BTreeMap<String, usize> = [
        ("R", 2usize),
        ("T1", 4),
        ("T2", 4),
        ("T3", 2),
        ("U(R,T2)", 2),
        ("U(R,T3)", 2),
        ("U(T1,T3)", 2),
    ]
    .into_iter()
    .map(|(n, c)| (n.to_string(), c))
    .collect();
    let priors: BTreeMap<String, Vec<Rat>> = ["U(R,T2)", "U(R,T3)", "U(T1,T3)"]
        .into_iter()
        .map(|l| (l.to_string(), vec![rat(1, 2), rat(1, 2)]))
        .collect();

    let point_mass = |card: usize, at: usize| -> Vec<Rat> {
        (0..card).map(|v| rat((v == at) as i64, 1)).collect()
    };
    // All equations are deterministic. With u1 = U(R,T2), u2 = U(T1,T3),
    // u3 = U(R,T3):
    //   T3 = u2 ⊕ u3
    //   T2 = (T3, u1)
    //   T1 = (T2.0 ⊕ u2, T2.1)
    //   R  = 1{T1 = (0,0)} · 1{u3 = 1} · 1{u1 = 1}   (first model)
    //   R  = 0                                        (second model)
    let build = |m2: bool| {
        DiscreteSem::from_fn(&graph, &domains, &priors, |child, _, vals| {
            match child.as_str() {
                // parents: [U(R,T3), U(T1,T3)]
                "T3" => {
                    let (u3, u2) = (vals[0], vals[1]);
                    point_mass(2, u2 ^ u3)
                }
                // parents: [T3, U(R,T2)]
                "T2" => {
                    let (t3, u1) = (vals[0], vals[1]);
                    point_mass(4, 2 * t3 + u1)
                }
                // parents: [T2, U(T1,T3)]
                "T1" => {
                    let (t2, u2) = (vals[0], vals[1]);
                    let (t2a, t2b) = (t2 >> 1, t2 & 1);
                    point_mass(4, 2 * (t2a ^ u2) + t2b)
                }
                // parents: [T1, U(R,T2), U(R,T3)]
                "R" => {
                    let (t1, u1, u3) = (vals[0], vals[1], vals[2]);
                    let hit = if !m2 && t1 == 0 && u1 == 1 && u3 == 1 {
                        1
                    } else {
                        0
                    };
                    point_mass(2, hit)
                }
                other => unreachable!("unknown vertex {other}"),
            }
        })
        .expect("valid model")
    };
    (build(false), build(true))
}

/// JSON wire form with rationals as `"p/q"` strings.
#[derive(Serialize, Deserialize)]
struct SemWire {
    graph: CausalGraph,
    domains: BTreeMap<String, usize>,
    latent_priors: BTreeMap<String, Vec<String>>,
    cpts: BTreeMap<String, CptWire>,
}

#[derive(Serialize, Deserialize)]
struct CptWire {
    parents: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl TryFrom<SemWire> for DiscreteSem {
    type Error = Error;
    fn try_from(w: SemWire) -> Result<Self> {
        let mut priors = BTreeMap::new();
        for (label, row) in w.latent_priors {
            priors.insert(
                label,
                row.iter().map(|s| parse_rat(s)).collect::<Result<Vec<_>>>()?,
            );
        }
        let mut cpts = BTreeMap::new();
        for (child, cw) in w.cpts {
            let parents: Vec<(String, usize)> = cw
                .parents
                .into_iter()
                .map(|p| {
                    let card = *w.domains.get(&p).ok_or_else(|| {
                        Error::InvalidArgument(format!("no domain for CPT parent `{p}`"))
                    })?;
                    Ok((p, card))
                })
                .collect::<Result<_>>()?;
            let child_card = *w.domains.get(&child).ok_or_else(|| {
                Error::InvalidArgument(format!("no domain for CPT child `{child}`"))
            })?;
            let rows = cw
                .rows
                .iter()
                .map(|row| row.iter().map(|s| parse_rat(s)).collect::<Result<Vec<_>>>())
                .collect::<Result<Vec<_>>>()?;
            cpts.insert(child, Cpt::new(parents, child_card, rows)?);
        }
        DiscreteSem::new(w.graph, w.domains, priors, cpts)
    }
}

impl From<DiscreteSem> for SemWire {
    fn from(m: DiscreteSem) -> Self {
        SemWire {
            graph: m.graph,
            domains: m.domains,
            latent_priors: m
                .latent_priors
                .into_iter()
                .map(|(l, row)| (l, row.iter().map(format_rat).collect()))
                .collect(),
            cpts: m
                .cpts
                .into_iter()
                .map(|(v, c)| {
                    (
                        v,
                        CptWire {
                            parents: c.parents,
                            rows: c
                                .rows
                                .iter()
                                .map(|row| row.iter().map(format_rat).collect())
                                .collect(),
                        },
                    )
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::varset;

    fn realization(pairs: &[(&str, usize)]) -> BTreeMap<VarId, usize> {
        pairs.iter().map(|(n, v)| (n.to_string(), *v)).collect()
    }

    #[test]
    fn cpt_rows_must_be_distributions() {
        let bad = Cpt::new(
            vec![("A".into(), 2)],
            2,
            vec![vec![rat(1, 2), rat(1, 3)], vec![rat(1, 2), rat(1, 2)]],
        );
        assert!(bad.is_err());
        let bad = Cpt::new(
            vec![("A".into(), 2)],
            2,
            vec![vec![rat(3, 2), rat(-1, 2)], vec![rat(1, 2), rat(1, 2)]],
        );
        assert!(bad.is_err());
        let bad = Cpt::new(vec![("A".into(), 2)], 2, vec![vec![rat(1, 2), rat(1, 2)]]);
        assert!(bad.is_err());
    }

    #[test]
    fn sem_requires_canonical_parent_order() {
        let g = crate::testutil::bow_graph();
        let domains: BTreeMap<String, usize> = [("X", 2), ("Y", 2), ("U(X,Y)", 2)]
            .into_iter()
            .map(|(n, c)| (n.to_string(), c))
            .collect();
        let priors: BTreeMap<String, Vec<Rat>> =
            [("U(X,Y)".to_string(), vec![rat(1, 2), rat(1, 2)])]
                .into_iter()
                .collect();
        let uniform2 = vec![rat(1, 2), rat(1, 2)];
        let x_cpt = Cpt::new(
            vec![("U(X,Y)".into(), 2)],
            2,
            vec![uniform2.clone(), uniform2.clone()],
        )
        .unwrap();
        // Y's parents must be [X, U(X,Y)] — the reversed order is rejected.
        let y_bad = Cpt::new(
            vec![("U(X,Y)".into(), 2), ("X".into(), 2)],
            2,
            vec![uniform2.clone(); 4],
        )
        .unwrap();
        let res = DiscreteSem::new(
            g.clone(),
            domains.clone(),
            priors.clone(),
            [("X".to_string(), x_cpt.clone()), ("Y".to_string(), y_bad)]
                .into_iter()
                .collect(),
        );
        assert!(res.is_err());

        let y_good = Cpt::new(
            vec![("X".into(), 2), ("U(X,Y)".into(), 2)],
            2,
            vec![uniform2.clone(); 4],
        )
        .unwrap();
        let res = DiscreteSem::new(
            g,
            domains,
            priors,
            [("X".to_string(), x_cpt), ("Y".to_string(), y_good)]
                .into_iter()
                .collect(),
        );
        assert!(res.is_ok());
    }

    #[test]
    fn deterministic_chain_has_point_mass_joint() {
        let g = CausalGraph::new(
            ["A", "B"],
            [("A".into(), "B".into())],
            [],
        )
        .unwrap();
        let domains: BTreeMap<String, usize> =
            [("A".to_string(), 2), ("B".to_string(), 2)].into_iter().collect();
        let m = DiscreteSem::from_fn(&g, &domains, &BTreeMap::new(), |child, _, vals| {
            match child.as_str() {
                "A" => vec![rat(1, 1), rat(0, 1)],
                // B copies A.
                _ => (0..2).map(|b| rat((b == vals[0]) as i64, 1)).collect(),
            }
        })
        .unwrap();
        let joint = m.joint().unwrap();
        assert_eq!(*joint.value_at(&[0, 0]).unwrap(), rat(1, 1));
        assert_eq!(joint.sum(), rat(1, 1));
    }

    #[test]
    fn example2_models_agree_observationally_but_not_interventionally() {
        let pairs = builtin_models();
        let (m1, m2) = &pairs["example2"];
        let j1 = m1.joint().unwrap();
        let j2 = m2.joint().unwrap();
        assert_eq!(j1, j2);
        assert_eq!(j1.sum(), rat(1, 1));

        // The joint vanishes exactly when the two treatments disagree
        // (both copy the same latent), so the models violate positivity.
        for (codes, value) in j1.iter() {
            let (x1, x2) = (codes[0], codes[1]);
            assert_eq!(value.is_zero(), x1 != x2, "at {codes:?}");
        }
        assert!(!m1.is_positive().unwrap());

        let do_x = realization(&[("X1", 0), ("X2", 1)]);
        let p1 = m1.intervene(&do_x).unwrap();
        let p2 = m2.intervene(&do_x).unwrap();
        assert_eq!(p1.sum(), rat(1, 1));
        assert_eq!(p2.sum(), rat(1, 1));
        // Individual cells under do(x1=0, x2=1).
        assert_eq!(*p1.value_at(&[0, 0]).unwrap(), rat(2, 9));
        assert_eq!(*p1.value_at(&[0, 1]).unwrap(), rat(5, 18));
        assert_eq!(*p2.value_at(&[0, 0]).unwrap(), rat(5, 18));
        assert_eq!(*p2.value_at(&[0, 1]).unwrap(), rat(2, 9));
        // The headline disagreement, P(Y1 = Y2) under the intervention:
        // 4/9 in the first model vs 5/9 in the second.
        let agree1 = p1.value_at(&[0, 0]).unwrap() + p1.value_at(&[1, 1]).unwrap();
        let agree2 = p2.value_at(&[0, 0]).unwrap() + p2.value_at(&[1, 1]).unwrap();
        assert_eq!(agree1, rat(4, 9));
        assert_eq!(agree2, rat(5, 9));
    }

    #[test]
    fn thicket_models_agree_observationally_but_q_r_differs() {
        let pairs = builtin_models();
        let (m1, m2) = &pairs["thicket"];
        let j1 = m1.joint().unwrap();
        let j2 = m2.joint().unwrap();
        assert_eq!(j1, j2);

        // P(r, t1, t2, t3) = 0 whenever the first component of T2 differs
        // from T3 — the relaxed-positivity condition fails.
        for (codes, value) in j1.iter() {
            let (t2, t3) = (codes[2], codes[3]);
            if t2 >> 1 != t3 {
                assert!(value.is_zero(), "at {codes:?}");
            }
        }

        // Q[{R}] disagrees where the first model's indicator fires.
        let q1 = m1.q_eval(&varset(["R"])).unwrap();
        let q2 = m2.q_eval(&varset(["R"])).unwrap();
        let at = |q: &DistTable, r: usize| q.value_at(&[r, 0, 0, 0]).cloned().unwrap();
        assert_eq!(at(&q1, 1), rat(1, 4));
        assert_eq!(at(&q2, 1), rat(0, 1));
        assert_eq!(at(&q1, 0), rat(3, 4));
        assert_eq!(at(&q2, 0), rat(1, 1));
    }

    #[test]
    fn q_eval_of_all_vars_is_the_joint() {
        let (m1, _) = &builtin_models()["example2"];
        let q = m1.q_eval(m1.graph().observed()).unwrap();
        assert_eq!(q, m1.joint().unwrap());
    }

    #[test]
    fn q_eval_matches_intervene_sections() {
        let (m1, _) = &builtin_models()["thicket"];
        let s = varset(["R"]);
        let q = m1.q_eval(&s).unwrap();
        // Q[S](v) = P_{v∖s}(s), checked on a few realizations.
        for (r, t1, t2, t3) in [(1, 0, 0, 0), (0, 1, 2, 1), (1, 3, 1, 0)] {
            let p = m1
                .intervene(&realization(&[("T1", t1), ("T2", t2), ("T3", t3)]))
                .unwrap();
            assert_eq!(
                q.value_at(&[r, t1, t2, t3]).unwrap(),
                p.value_at(&[r]).unwrap()
            );
        }
    }

    #[test]
    fn empty_intervention_is_the_joint() {
        let (m1, _) = &builtin_models()["example2"];
        assert_eq!(m1.intervene(&BTreeMap::new()).unwrap(), m1.joint().unwrap());
    }

    #[test]
    fn uniform_model_is_positive() {
        let g = crate::testutil::bow_graph();
        let m = random_positive_sem(&g, 7);
        assert!(m.is_positive().unwrap());
        // Determinism in the seed.
        assert_eq!(random_positive_sem(&g, 7), m);
        assert_ne!(random_positive_sem(&g, 8), m);
    }

    #[test]
    fn state_budget_is_enforced() {
        // Six unconnected 16-ary variables: 16^6 ≈ 1.7·10^7 > 10^7.
        let names: Vec<String> = (0..6).map(|i| format!("V{i}")).collect();
        let g = CausalGraph::new(names.clone(), [], []).unwrap();
        let domains: BTreeMap<String, usize> =
            names.iter().map(|n| (n.clone(), 16usize)).collect();
        let m = DiscreteSem::from_fn(&g, &domains, &BTreeMap::new(), |_, _, _| {
            (0..16).map(|_| rat(1, 16)).collect()
        })
        .unwrap();
        match m.joint() {
            Err(Error::TooLarge { states, limit }) => {
                assert!(states > limit);
            }
            other => panic!("expected TooLarge, got {other:?}"),
        }
    }

    #[test]
    fn max_states_parsing() {
        assert_eq!(parse_max_states(None), DEFAULT_MAX_STATES);
        assert_eq!(parse_max_states(Some("123")), 123);
        assert_eq!(parse_max_states(Some(" 45 ")), 45);
        assert_eq!(parse_max_states(Some("0")), DEFAULT_MAX_STATES);
        assert_eq!(parse_max_states(Some("nope")), DEFAULT_MAX_STATES);
    }

    #[test]
    fn q_eval_sections_recombine_with_prior() {
        let (m1, _) = &builtin_models()["thicket"];
        let s = varset(["R", "T1"]);
        let q = m1.q_eval(&s).unwrap();
        let sections = m1.q_eval_sections(&s, "U(R,T3)").unwrap();
        let prior = &m1.latent_priors()["U(R,T3)"];
        for i in 0..q.len() {
            let codes = q.decode(i);
            let mixed: Rat = sections
                .iter()
                .zip(prior)
                .map(|(sec, p)| p * sec.value_at(&codes).unwrap())
                .sum();
            assert_eq!(mixed, *q.value_at(&codes).unwrap());
        }
    }

    #[test]
    fn json_round_trip() {
        let (m1, _) = &builtin_models()["example2"];
        let json = serde_json::to_string(m1).unwrap();
        assert!(json.contains("\"latent_priors\""));
        assert!(json.contains("1/2"));
        let back: DiscreteSem = serde_json::from_str(&json).unwrap();
        assert_eq!(&back, m1);
    }
}
