//! Identifiability of interventional distributions from the observational
//! joint, and the symbolic derivations behind positive answers.
//!
//! The workhorse is [`id_single`], the fixed-point loop deciding whether
//! `Q[S]` — the joint effect on a single c-component `S` — is computable
//! from `P(V)` in a given graph. [`id`] reduces a general `P_x(Y)` query to
//! `id_single` calls on the c-components of the ancestral set of `Y`.
//!
//! Positive decisions replay their trace through the two rewrite steps
//! ([`q_marginalize`] and [`ccomp_factorize`]) to produce an
//! [`Estimand`] ([`derive_estimand_single`]): each loop iteration
//! marginalizes the current Q-expression down to an ancestral set and
//! factorizes it along c-components, keeping the factor that contains `S`.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::estimand::{CondHint, Estimand};
use crate::graph::{CausalGraph, VarId, VarSet};

/// One iteration of the [`id_single`] loop: from the current candidate set
/// `y`, the ancestral set `a` of `S` within it, and the c-component `y_new`
/// of `a` containing `S`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdStep {
    pub y: VarSet,
    pub a: VarSet,
    pub y_new: VarSet,
}

/// The full run of the [`id_single`] loop. On failure, the last step has
/// `y_new == y` — the witness fixed point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdTrace {
    pub steps: Vec<IdStep>,
    pub identifiable: bool,
}

/// Decide whether `Q[S]` is identifiable from `P(V)` in `g`, returning the
/// decision together with the loop trace.
///
/// Requires `S` to be a nonempty single c-component of `g` (its vertices
/// connected by bidirected edges among themselves).
pub fn id_single(s: &VarSet, g: &CausalGraph) -> Result<(bool, IdTrace)> {
    for v in s {
        if !g.contains(v) {
            return Err(Error::InvalidVertex(v.clone()));
        }
    }
    if s.is_empty() {
        return Err(Error::InvalidArgument("S must be nonempty".into()));
    }
    if !g.is_single_c_component(s)? {
        return Err(Error::InvalidArgument(
            "S must be a single c-component".into(),
        ));
    }
    let anchor = s.iter().next().expect("nonempty").clone();
    let mut y = g.observed().clone();
    let mut steps = Vec::new();
    loop {
        if y == *s {
            return Ok((
                true,
                IdTrace {
                    steps,
                    identifiable: true,
                },
            ));
        }
        let a = g.induced_subgraph(&y)?.ancestors(s)?;
        let y_new = g.c_component_containing(&a, &anchor)?;
        let done = y_new == y;
        steps.push(IdStep {
            y: y.clone(),
            a,
            y_new: y_new.clone(),
        });
        if done {
            return Ok((
                false,
                IdTrace {
                    steps,
                    identifiable: false,
                },
            ));
        }
        y = y_new;
    }
}

/// Decide whether `P_x(Y)` is identifiable from `P(V)` in `g`.
///
/// `x` and `y` must be disjoint subsets of the observed vertices, `y`
/// nonempty. The query reduces to `Q[S_i]` identifiability for every
/// c-component `S_i` of the set of ancestors of `y` in the graph with `x`
/// removed.
pub fn id(x: &VarSet, y: &VarSet, g: &CausalGraph) -> Result<bool> {
    let s_total = query_target(x, y, g)?;
    for comp in g.c_components(&s_total)? {
        let (ok, _) = id_single(&comp, g)?;
        if !ok {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Shared query validation: the set `S` of ancestors of `y` in `g` minus
/// `x`, whose c-components drive both [`id`] and g-identification.
pub(crate) fn query_target(x: &VarSet, y: &VarSet, g: &CausalGraph) -> Result<VarSet> {
    for v in x.iter().chain(y.iter()) {
        if !g.contains(v) {
            return Err(Error::InvalidVertex(v.clone()));
        }
    }
    if y.is_empty() {
        return Err(Error::InvalidArgument("outcome set must be nonempty".into()));
    }
    if x.intersection(y).next().is_some() {
        return Err(Error::InvalidArgument(
            "treatment and outcome sets must be disjoint".into(),
        ));
    }
    let kept: VarSet = g.observed().difference(x).cloned().collect();
    g.induced_subgraph(&kept)?.ancestors(y)
}

/// Rewrite `Q[C]` (given as the expression `q`) into `Q[W]` by summing out
/// `C ∖ W`, which is sound only when `W` is ancestral in the induced
/// subgraph over `C`.
pub fn q_marginalize(
    q: Estimand,
    c: &VarSet,
    w: &VarSet,
    g: &CausalGraph,
) -> Result<Estimand> {
    if !w.is_subset(c) {
        return Err(Error::InvalidArgument("W must be a subset of C".into()));
    }
    let gc = g.induced_subgraph(c)?;
    if gc.ancestors(w)? != *w {
        return Err(Error::NotAncestral {
            set: format!("{w:?}"),
            context: format!("{c:?}"),
        });
    }
    Estimand::marginal(q, c.difference(w).cloned().collect())
}

/// Factorize `Q[H]` (given as the expression `q`) into `{H_j → Q[H_j]}`
/// over the c-components `H_j` of the induced subgraph over `h`.
///
/// Each `Q[H_j]` is the telescoping product of quotients of prefix
/// marginals of `q` along a topological order of `h` (lexicographic
/// tie-break). When `h` is a single c-component the factorization collapses
/// to `q` itself. When `q` is the bare given distribution over exactly `h`,
/// the quotients are genuine conditional probabilities and carry a
/// [`CondHint`].
pub fn ccomp_factorize(
    q: &Estimand,
    h: &VarSet,
    g: &CausalGraph,
) -> Result<BTreeMap<VarSet, Estimand>> {
    if h.is_empty() {
        return Err(Error::InvalidArgument("H must be nonempty".into()));
    }
    if !h.is_subset(&q.scope()) {
        return Err(Error::ScopeMismatch(
            "expression scope does not cover H".into(),
        ));
    }
    let comps = g.c_components(h)?;
    if comps.len() == 1 {
        let mut out = BTreeMap::new();
        out.insert(h.clone(), q.clone());
        return Ok(out);
    }

    let order = topo_order_lex(&g.induced_subgraph(h)?);
    let sugar = matches!(q, Estimand::Given { scope, .. } if scope == h);
    let comp_of = |v: &VarId| -> &VarSet {
        comps
            .iter()
            .find(|c| c.contains(v))
            .expect("components cover h")
    };

    let mut out = BTreeMap::new();
    for comp in &comps {
        let mut terms = Vec::new();
        let mut prefix = VarSet::new();
        for (i, v) in order.iter().enumerate() {
            if comp.contains(v) {
                let mut upto = prefix.clone();
                upto.insert(v.clone());
                let num =
                    Estimand::marginal(q.clone(), h.difference(&upto).cloned().collect())?;
                let term = if i == 0 {
                    // The denominator would be the sum over all of h — the
                    // constant 1 for a distribution — so it is omitted.
                    num
                } else {
                    let den = Estimand::marginal(
                        q.clone(),
                        h.difference(&prefix).cloned().collect(),
                    )?;
                    let cond = sugar.then(|| {
                        let same: Vec<VarId> = order[..i]
                            .iter()
                            .filter(|p| comp_of(p) == comp)
                            .cloned()
                            .collect();
                        let rest: Vec<VarId> = prefix
                            .iter()
                            .filter(|p| comp_of(p) != comp)
                            .cloned()
                            .collect();
                        CondHint {
                            target: vec![v.clone()],
                            given: same.into_iter().chain(rest).collect(),
                        }
                    });
                    Estimand::quotient(num, den, cond)?
                };
                terms.push(term);
            }
            prefix.insert(v.clone());
        }
        out.insert(comp.clone(), Estimand::product(terms)?);
    }
    Ok(out)
}

/// Topological order of the directed part of `g`, breaking ties by taking
/// the lexicographically smallest ready vertex.
fn topo_order_lex(g: &CausalGraph) -> Vec<VarId> {
    let mut indeg: BTreeMap<&VarId, usize> = g.observed().iter().map(|v| (v, 0)).collect();
    for (_, b) in g.directed_edges() {
        *indeg.get_mut(b).expect("endpoint") += 1;
    }
    let mut ready: std::collections::BTreeSet<&VarId> = indeg
        .iter()
        .filter(|(_, d)| **d == 0)
        .map(|(v, _)| *v)
        .collect();
    let mut order = Vec::with_capacity(g.observed().len());
    while let Some(v) = ready.iter().next().cloned() {
        ready.remove(v);
        order.push(v.clone());
        for (a, b) in g.directed_edges() {
            if a == v {
                let d = indeg.get_mut(b).expect("endpoint");
                *d -= 1;
                if *d == 0 {
                    ready.insert(b);
                }
            }
        }
    }
    order
}

/// Derive the estimand for an identifiable `Q[S]` by replaying the
/// [`id_single`] trace: each step marginalizes the current expression down
/// to the step's ancestral set and keeps the factor for the step's
/// c-component.
///
/// `source` is the expression denoting the distribution identification
/// starts from (normally a [`Estimand::Given`] leaf whose scope covers
/// `g`'s vertices). Fails with [`Error::NotIdentifiable`] when `Q[S]` is
/// not identifiable in `g`.
pub fn derive_estimand_single(
    s: &VarSet,
    g: &CausalGraph,
    source: Estimand,
) -> Result<Estimand> {
    if !g.observed().is_subset(&source.scope()) {
        return Err(Error::ScopeMismatch(
            "source scope does not cover the graph's vertices".into(),
        ));
    }
    let (ok, trace) = id_single(s, g)?;
    if !ok {
        return Err(Error::NotIdentifiable(format!(
            "Q[{s:?}] is not identifiable here"
        )));
    }
    let mut expr = source;
    for step in &trace.steps {
        if step.a != step.y {
            expr = q_marginalize(expr, &step.y, &step.a, g)?;
        }
        let mut parts = ccomp_factorize(&expr, &step.a, g)?;
        expr = parts.remove(&step.y_new).ok_or_else(|| {
            Error::InternalContradiction("factorization lost the target component".into())
        })?;
    }
    Ok(expr)
}
