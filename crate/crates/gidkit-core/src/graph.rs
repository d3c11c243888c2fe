//! Semi-Markovian causal graphs and the structural primitives every
//! algorithm in this crate consumes.
//!
//! A [`CausalGraph`] has observed vertices, directed edges, and bidirected
//! edges. Each bidirected edge stands for one unobserved variable with
//! exactly two observed children; [`latent_label`] gives that variable a
//! stable synthetic name so other modules can address it individually.
//!
//! All returned collections are ordered (`BTreeSet`/sorted `Vec`), and all
//! tie-breaks are lexicographic on vertex names, so identical inputs always
//! produce identical outputs.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Name of an observed variable; unique within its graph.
pub type VarId = String;

/// A set of observed-variable names, lexicographically ordered.
pub type VarSet = BTreeSet<VarId>;

/// Build a [`VarSet`] from anything yielding string-likes. Test/construction
/// convenience.
pub fn varset<I, S>(names: I) -> VarSet
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    names.into_iter().map(Into::into).collect()
}

/// Synthetic name for the unobserved variable behind the bidirected edge
/// `{a, b}`: `"U(x,y)"` with `x < y` lexicographically.
pub fn latent_label(a: &str, b: &str) -> String {
    if a <= b {
        format!("U({a},{b})")
    } else {
        format!("U({b},{a})")
    }
}

/// A semi-Markovian causal graph: a DAG over observed vertices plus
/// bidirected edges encoding pairwise latent confounding.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GraphWire", into = "GraphWire")]
pub struct CausalGraph {
    observed: VarSet,
    directed: BTreeSet<(VarId, VarId)>,
    /// Stored with endpoints sorted (`.0 < .1`).
    bidirected: BTreeSet<(VarId, VarId)>,
}

/// JSON wire form: `{"observed": [...], "directed": [["a","b"],...],
/// "bidirected": [["a","b"],...]}`.
#[derive(Serialize, Deserialize)]
struct GraphWire {
    observed: Vec<String>,
    directed: Vec<(String, String)>,
    bidirected: Vec<(String, String)>,
}

impl TryFrom<GraphWire> for CausalGraph {
    type Error = Error;
    fn try_from(w: GraphWire) -> Result<Self> {
        CausalGraph::new(w.observed, w.directed, w.bidirected)
    }
}

impl From<CausalGraph> for GraphWire {
    fn from(g: CausalGraph) -> Self {
        GraphWire {
            observed: g.observed.iter().cloned().collect(),
            directed: g.directed.iter().cloned().collect(),
            bidirected: g.bidirected.iter().cloned().collect(),
        }
    }
}

impl std::fmt::Debug for CausalGraph {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CausalGraph")
            .field("observed", &self.observed)
            .field("directed", &self.directed)
            .field("bidirected", &self.bidirected)
            .finish()
    }
}

impl CausalGraph {
    /// Construct a validated graph.
    ///
    /// Rejects: empty or duplicate vertex names, edge endpoints not listed in
    /// `observed`, self-loops in either edge set, duplicate edges (bidirected
    /// pairs compare as unordered), and directed cycles.
    pub fn new<V, D, B>(observed: V, directed: D, bidirected: B) -> Result<Self>
    where
        V: IntoIterator,
        V::Item: Into<String>,
        D: IntoIterator<Item = (String, String)>,
        B: IntoIterator<Item = (String, String)>,
    {
        let names: Vec<String> = observed.into_iter().map(Into::into).collect();
        let mut obs = VarSet::new();
        for name in names {
            if name.is_empty() {
                return Err(Error::InvalidArgument("empty vertex name".into()));
            }
            if !obs.insert(name.clone()) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate vertex name `{name}`"
                )));
            }
        }

        let mut dir = BTreeSet::new();
        for (a, b) in directed {
            for end in [&a, &b] {
                if !obs.contains(end) {
                    return Err(Error::InvalidVertex(end.clone()));
                }
            }
            if a == b {
                return Err(Error::InvalidArgument(format!(
                    "directed self-loop on `{a}`"
                )));
            }
            if !dir.insert((a.clone(), b.clone())) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate directed edge `{a}` -> `{b}`"
                )));
            }
        }

        let mut bid = BTreeSet::new();
        for (a, b) in bidirected {
            for end in [&a, &b] {
                if !obs.contains(end) {
                    return Err(Error::InvalidVertex(end.clone()));
                }
            }
            if a == b {
                return Err(Error::InvalidArgument(format!(
                    "bidirected self-loop on `{a}`"
                )));
            }
            let pair = if a < b { (a, b) } else { (b, a) };
            if !bid.insert(pair.clone()) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate bidirected edge `{{{}, {}}}`",
                    pair.0, pair.1
                )));
            }
        }

        let g = CausalGraph {
            observed: obs,
            directed: dir,
            bidirected: bid,
        };
        if g.has_directed_cycle() {
            return Err(Error::InvalidArgument(
                "directed part contains a cycle".into(),
            ));
        }
        Ok(g)
    }

    fn has_directed_cycle(&self) -> bool {
        // Kahn's algorithm: a cycle exists iff not every vertex is drained.
        let mut indeg: BTreeMap<&VarId, usize> =
            self.observed.iter().map(|v| (v, 0)).collect();
        for (_, b) in &self.directed {
            *indeg.get_mut(b).expect("validated endpoint") += 1;
        }
        let mut queue: VecDeque<&VarId> = indeg
            .iter()
            .filter(|(_, d)| **d == 0)
            .map(|(v, _)| *v)
            .collect();
        let mut drained = 0usize;
        while let Some(v) = queue.pop_front() {
            drained += 1;
            for (a, b) in &self.directed {
                if a == v {
                    let d = indeg.get_mut(b).expect("validated endpoint");
                    *d -= 1;
                    if *d == 0 {
                        queue.push_back(b);
                    }
                }
            }
        }
        drained != self.observed.len()
    }

    /// The observed vertex set.
    pub fn observed(&self) -> &VarSet {
        &self.observed
    }

    /// Directed edges `(parent, child)`.
    pub fn directed_edges(&self) -> &BTreeSet<(VarId, VarId)> {
        &self.directed
    }

    /// Bidirected edges, endpoints sorted.
    pub fn bidirected_edges(&self) -> &BTreeSet<(VarId, VarId)> {
        &self.bidirected
    }

    /// True iff `v` is an observed vertex of this graph.
    pub fn contains(&self, v: &str) -> bool {
        self.observed.contains(v)
    }

    /// Synthetic labels for this graph's latent variables, sorted, with the
    /// two observed children of each.
    pub fn latent_labels(&self) -> Vec<(String, (VarId, VarId))> {
        self.bidirected
            .iter()
            .map(|(a, b)| (latent_label(a, b), (a.clone(), b.clone())))
            .collect()
    }

    /// Directed parents of `v`.
    pub fn parents_of(&self, v: &str) -> VarSet {
        self.directed
            .iter()
            .filter(|(_, b)| b == v)
            .map(|(a, _)| a.clone())
            .collect()
    }

    /// Directed children of `v`.
    pub fn children_of(&self, v: &str) -> VarSet {
        self.directed
            .iter()
            .filter(|(a, _)| a == v)
            .map(|(_, b)| b.clone())
            .collect()
    }

    fn check_subset(&self, x: &VarSet) -> Result<()> {
        for v in x {
            if !self.observed.contains(v) {
                return Err(Error::InvalidVertex(v.clone()));
            }
        }
        Ok(())
    }

    /// The induced subgraph over `x`: keeps exactly the edges (of both kinds)
    /// with both endpoints in `x`.
    pub fn induced_subgraph(&self, x: &VarSet) -> Result<CausalGraph> {
        self.check_subset(x)?;
        Ok(CausalGraph {
            observed: x.clone(),
            directed: self
                .directed
                .iter()
                .filter(|(a, b)| x.contains(a) && x.contains(b))
                .cloned()
                .collect(),
            bidirected: self
                .bidirected
                .iter()
                .filter(|(a, b)| x.contains(a) && x.contains(b))
                .cloned()
                .collect(),
        })
    }

    /// Reflexive-transitive closure of `x` over reversed directed edges.
    /// Bidirected edges are ignored.
    pub fn ancestors(&self, x: &VarSet) -> Result<VarSet> {
        self.check_subset(x)?;
        let mut closed = x.clone();
        let mut frontier: Vec<VarId> = x.iter().cloned().collect();
        while let Some(v) = frontier.pop() {
            for (a, b) in &self.directed {
                if *b == v && closed.insert(a.clone()) {
                    frontier.push(a.clone());
                }
            }
        }
        Ok(closed)
    }

    /// The partition of `x` into c-components: connected components of the
    /// bidirected edges inside the induced subgraph over `x`. Returned sorted
    /// by smallest member.
    pub fn c_components(&self, x: &VarSet) -> Result<Vec<VarSet>> {
        self.check_subset(x)?;
        let mut remaining = x.clone();
        let mut parts: Vec<VarSet> = Vec::new();
        while let Some(seed) = remaining.iter().next().cloned() {
            let mut part = VarSet::new();
            let mut frontier = vec![seed.clone()];
            part.insert(seed);
            while let Some(v) = frontier.pop() {
                for (a, b) in &self.bidirected {
                    if !x.contains(a) || !x.contains(b) {
                        continue;
                    }
                    let other = if *a == v {
                        b
                    } else if *b == v {
                        a
                    } else {
                        continue;
                    };
                    if part.insert(other.clone()) {
                        frontier.push(other.clone());
                    }
                }
            }
            for v in &part {
                remaining.remove(v);
            }
            parts.push(part);
        }
        // Seeds are taken in ascending order and components are disjoint, so
        // the list is already sorted by smallest member.
        Ok(parts)
    }

    /// The c-component of the induced subgraph over `x` that contains `v`.
    pub fn c_component_containing(&self, x: &VarSet, v: &VarId) -> Result<VarSet> {
        if !x.contains(v) {
            return Err(Error::InvalidVertex(v.clone()));
        }
        let parts = self.c_components(x)?;
        parts
            .into_iter()
            .find(|p| p.contains(v))
            .ok_or_else(|| Error::InternalContradiction("c-components do not cover x".into()))
    }

    /// True iff `x` induces a single c-component (all of `x` is connected by
    /// bidirected edges within the induced subgraph over `x`).
    pub fn is_single_c_component(&self, x: &VarSet) -> Result<bool> {
        Ok(self.c_components(x)?.len() == 1)
    }

    /// Observed vertices with no outgoing directed edge.
    pub fn root_set(&self) -> VarSet {
        let with_children: VarSet = self.directed.iter().map(|(a, _)| a.clone()).collect();
        self.observed
            .iter()
            .filter(|v| !with_children.contains(*v))
            .cloned()
            .collect()
    }

    /// True iff this graph is an `R`-rooted c-forest: its root set equals
    /// `r`, its bidirected edges connect all its vertices into a single
    /// c-component, and no vertex has more than one directed out-edge.
    pub fn is_c_forest(&self, r: &VarSet) -> bool {
        if self.root_set() != *r {
            return false;
        }
        for v in &self.observed {
            if self.children_of(v).len() > 1 {
                return false;
            }
        }
        match self.c_components(&self.observed) {
            Ok(parts) => parts.len() == 1,
            Err(_) => false,
        }
    }

    /// Union of this graph with `other`: union of vertex and edge sets.
    pub fn union_with(&self, other: &CausalGraph) -> Result<CausalGraph> {
        CausalGraph::new(
            self.observed.union(&other.observed).cloned(),
            self.directed
                .union(&other.directed)
                .cloned()
                .collect::<Vec<_>>(),
            self.bidirected
                .union(&other.bidirected)
                .cloned()
                .collect::<Vec<_>>(),
        )
    }
}

/// Greedy lexicographic Kruskal: a spanning tree of the bidirected edges of
/// `g` restricted to `vertices`, extending the `seed` edges (which must be
/// acyclic). Errors if the restriction is not connected.
pub(crate) fn bidirected_spanning_tree(
    g: &CausalGraph,
    vertices: &VarSet,
    seed: &BTreeSet<(VarId, VarId)>,
) -> Result<BTreeSet<(VarId, VarId)>> {
    let idx: BTreeMap<&VarId, usize> = vertices.iter().enumerate().map(|(i, v)| (v, i)).collect();
    let mut dsu: Vec<usize> = (0..vertices.len()).collect();
    fn find(dsu: &mut Vec<usize>, mut i: usize) -> usize {
        while dsu[i] != i {
            dsu[i] = dsu[dsu[i]];
            i = dsu[i];
        }
        i
    }
    let mut tree = BTreeSet::new();
    let try_add = |dsu: &mut Vec<usize>, a: &VarId, b: &VarId| -> bool {
        let (ia, ib) = (idx[a], idx[b]);
        let (ra, rb) = (find(dsu, ia), find(dsu, ib));
        if ra == rb {
            return false;
        }
        dsu[ra] = rb;
        true
    };
    for (a, b) in seed {
        if try_add(&mut dsu, a, b) {
            tree.insert((a.clone(), b.clone()));
        } else {
            return Err(Error::InvalidArgument(
                "seed edges for spanning tree contain a cycle".into(),
            ));
        }
    }
    for (a, b) in &g.bidirected {
        if vertices.contains(a) && vertices.contains(b) && try_add(&mut dsu, a, b) {
            tree.insert((a.clone(), b.clone()));
        }
    }
    if tree.len() + 1 != vertices.len() {
        return Err(Error::InvalidArgument(
            "bidirected edges do not connect the vertex set".into(),
        ));
    }
    Ok(tree)
}

/// Build an `S`-rooted c-forest from a vertex set `b` that satisfies the
/// failure-shape conditions (single c-component, all of `b` ancestors of `s`
/// inside the induced subgraph): seeded spanning tree plus one out-edge per
/// non-`s` vertex along a shortest directed path toward `s`.
fn forest_from_vertex_set(
    g: &CausalGraph,
    b: &VarSet,
    s: &VarSet,
    f_s: &CausalGraph,
) -> Result<CausalGraph> {
    let gb = g.induced_subgraph(b)?;
    let tree = bidirected_spanning_tree(&gb, b, &f_s.bidirected)?;

    // Shortest directed distance to s within g[b].
    let mut dist: BTreeMap<VarId, usize> = s.iter().map(|v| (v.clone(), 0)).collect();
    let mut queue: VecDeque<VarId> = s.iter().cloned().collect();
    while let Some(v) = queue.pop_front() {
        let dv = dist[&v];
        for (a, bb) in &gb.directed {
            if *bb == v && !dist.contains_key(a) {
                dist.insert(a.clone(), dv + 1);
                queue.push_back(a.clone());
            }
        }
    }

    let mut out_edges: Vec<(VarId, VarId)> = Vec::new();
    for v in b.difference(s) {
        let dv = *dist.get(v).ok_or_else(|| {
            Error::InvalidArgument(format!("`{v}` has no directed path to the root set"))
        })?;
        // Children are scanned in lexicographic order; the first one on a
        // shortest path wins.
        let child = gb
            .children_of(v)
            .into_iter()
            .find(|w| dist.get(w).is_some_and(|dw| dw + 1 == dv))
            .ok_or_else(|| {
                Error::InternalContradiction(format!("no shortest-path child under `{v}`"))
            })?;
        out_edges.push((v.clone(), child));
    }

    CausalGraph::new(
        b.iter().cloned(),
        out_edges,
        tree.into_iter().collect::<Vec<_>>(),
    )
}

/// Search for an `S`-rooted c-forest witnessing that `Q[S]` is not
/// identifiable from the induced subgraph over `a`.
///
/// Returns `None` iff `Q[S]` *is* identifiable from that subgraph. On
/// success the result `F` has observed vertices `B` with `S ⊊ B ⊆ a`, its
/// bidirected edges form a spanning tree over `B`, and `F[S] = f_s`.
///
/// Strategy: take the fixed-point set of the failed identification loop,
/// shrink it by deleting deletable vertices in lexicographic order (keeping
/// the failure shape: one c-component, everything an ancestor of `s`), then
/// assemble a spanning tree seeded with `f_s`'s edges and one shortest-path
/// out-edge per non-`s` vertex. The result is verified with
/// [`CausalGraph::is_c_forest`]; an exhaustive search over subsets is kept
/// as a fallback should verification ever fail.
pub fn find_rooted_c_forest(
    g: &CausalGraph,
    a: &VarSet,
    s: &VarSet,
    f_s: &CausalGraph,
) -> Result<Option<CausalGraph>> {
    g.check_subset(a)?;
    g.check_subset(s)?;
    if !s.is_subset(a) || s == a || s.is_empty() {
        return Err(Error::InvalidArgument(
            "need S to be a nonempty proper subset of A".into(),
        ));
    }
    if !g.is_single_c_component(s)? {
        return Err(Error::InvalidArgument(
            "S must be a single c-component".into(),
        ));
    }
    if *f_s.observed() != *s
        || !f_s.directed_edges().is_empty()
        || f_s.bidirected_edges().len() + 1 != s.len()
        || !f_s.is_single_c_component(s)?
    {
        return Err(Error::InvalidArgument(
            "F_S must be a spanning bidirected tree over S with no directed edges".into(),
        ));
    }

    let ga = g.induced_subgraph(a)?;
    let (identifiable, trace) = crate::id::id_single(s, &ga)?;
    if identifiable {
        return Ok(None);
    }
    let y_star = trace
        .steps
        .last()
        .map(|st| st.y_new.clone())
        .ok_or_else(|| Error::InternalContradiction("failed id_single with empty trace".into()))?;

    // Shape conditions a candidate vertex set must keep.
    let shape_ok = |b: &VarSet| -> Result<bool> {
        if !s.is_subset(b) || b == s {
            return Ok(false);
        }
        if !g.is_single_c_component(b)? {
            return Ok(false);
        }
        Ok(g.induced_subgraph(b)?.ancestors(s)? == *b)
    };

    // Delete deletable vertices in lexicographic order until a fixed point.
    let mut b = y_star.clone();
    loop {
        let mut deleted = false;
        for v in b.difference(s).cloned().collect::<Vec<_>>() {
            let mut candidate = b.clone();
            candidate.remove(&v);
            if shape_ok(&candidate)? {
                b = candidate;
                deleted = true;
            }
        }
        if !deleted {
            break;
        }
    }

    if let Ok(forest) = forest_from_vertex_set(g, &b, s, f_s) {
        if forest.is_c_forest(s) && forest.induced_subgraph(s)? == *f_s {
            return Ok(Some(forest));
        }
    }

    // Fallback: exhaustive scan over supersets of S inside the fixed point,
    // smallest first, lexicographic within a size.
    let extra: Vec<VarId> = y_star.difference(s).cloned().collect();
    for size in 1..=extra.len() {
        for mask in 0u64..(1u64 << extra.len()) {
            if mask.count_ones() as usize != size {
                continue;
            }
            let mut cand = s.clone();
            for (i, v) in extra.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    cand.insert(v.clone());
                }
            }
            if !shape_ok(&cand)? {
                continue;
            }
            if let Ok(forest) = forest_from_vertex_set(g, &cand, s, f_s) {
                if forest.is_c_forest(s) && forest.induced_subgraph(s)? == *f_s {
                    return Ok(Some(forest));
                }
            }
        }
    }
    Err(Error::InternalContradiction(
        "id_single failed but no rooted c-forest was found".into(),
    ))
}
