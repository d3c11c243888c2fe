//! Identifiability from a collection of interventional inputs.
//!
//! Where [`crate::id`] asks whether `P_x(Y)` is computable from the
//! observational joint alone, [`gid`] asks whether it is computable from a
//! given ordered collection `Q[A_0], …, Q[A_m]` of interventional
//! distributions (each "intervene on everything outside `A_i`"), assuming
//! the observational distribution is strictly positive. The observational
//! input itself is just the member `A_i = V`.
//!
//! The reduction mirrors plain identification: split the ancestral closure
//! of the outcome into c-components and solve each from the *first* input
//! that can express it ([`gid_single`]).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimand::Estimand;
use crate::graph::{CausalGraph, VarSet};
use crate::id::{derive_estimand_single, id_single, query_target};

/// An ordered collection of input sets `A_0, …, A_m`, each standing for the
/// interventional distribution `Q[A_i]`.
///
/// Members must be distinct and nonempty; order matters, because
/// identification reports the first usable input.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<String>>", into = "Vec<Vec<String>>")]
pub struct GivenCollection {
    sets: Vec<VarSet>,
}

impl GivenCollection {
    /// Validated constructor: rejects duplicate members (the same `A_i`
    /// twice denotes the same input) and empty members (`Q[∅]` carries no
    /// information and its table would be degenerate).
    pub fn new(sets: Vec<VarSet>) -> Result<Self> {
        for (i, s) in sets.iter().enumerate() {
            if s.is_empty() {
                return Err(Error::InvalidArgument(format!(
                    "input set #{i} is empty"
                )));
            }
            if sets[..i].contains(s) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate input set {s:?}"
                )));
            }
        }
        Ok(GivenCollection { sets })
    }

    /// Number of input sets.
    pub fn len(&self) -> usize {
        self.sets.len()
    }

    /// True iff the collection has no members.
    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    /// The `i`-th input set.
    pub fn get(&self, i: usize) -> Option<&VarSet> {
        self.sets.get(i)
    }

    /// All input sets, in order.
    pub fn sets(&self) -> &[VarSet] {
        &self.sets
    }

    /// Iterate over the input sets in order.
    pub fn iter(&self) -> impl Iterator<Item = &VarSet> + '_ {
        self.sets.iter()
    }

    fn check_in(&self, g: &CausalGraph) -> Result<()> {
        for s in &self.sets {
            for v in s {
                if !g.contains(v) {
                    return Err(Error::InvalidVertex(v.clone()));
                }
            }
        }
        Ok(())
    }
}

impl TryFrom<Vec<Vec<String>>> for GivenCollection {
    type Error = Error;
    fn try_from(raw: Vec<Vec<String>>) -> Result<Self> {
        GivenCollection::new(raw.into_iter().map(|s| s.into_iter().collect()).collect())
    }
}

impl From<GivenCollection> for Vec<Vec<String>> {
    fn from(c: GivenCollection) -> Self {
        c.sets
            .into_iter()
            .map(|s| s.into_iter().collect())
            .collect()
    }
}

/// How one c-component of the query was identified: from which input, and
/// by what expression.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ComponentSource {
    /// The c-component `S_j`.
    pub component: VarSet,
    /// Index of the first input set that identifies it.
    pub source_index: usize,
    /// Expression computing `Q[S_j]` from `Q[A_{source_index}]`.
    pub estimand: Estimand,
}

/// Outcome of a [`gid`] query.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GidResult {
    /// True iff every c-component of the query target was identified.
    pub decision: bool,
    /// The identified components (all of them when `decision` holds;
    /// the identifiable subset otherwise).
    pub per_component: Vec<ComponentSource>,
    /// On success, the assembled expression for `P_x(Y)`: the product of
    /// the component estimands, marginalized down to the outcome set.
    pub final_estimand: Option<Estimand>,
}

/// Find the first input set from which `Q[S]` is identifiable, together
/// with the expression deriving it.
///
/// Scans `collection` in order; an input `A_i` qualifies when `S ⊆ A_i` and
/// `Q[S]` is identifiable from `Q[A_i]` in the induced subgraph over `A_i`.
/// Requires `S` to be a nonempty single c-component of `g`.
pub fn gid_single(
    s: &VarSet,
    collection: &GivenCollection,
    g: &CausalGraph,
) -> Result<Option<(usize, Estimand)>> {
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
    collection.check_in(g)?;
    for (i, a_i) in collection.iter().enumerate() {
        if !s.is_subset(a_i) {
            continue;
        }
        let gi = g.induced_subgraph(a_i)?;
        let (ok, _) = id_single(s, &gi)?;
        if ok {
            let source = Estimand::given(i, g.observed().clone());
            let est = derive_estimand_single(s, &gi, source)?;
            return Ok(Some((i, est)));
        }
    }
    Ok(None)
}

/// Decide whether `P_x(Y)` is identifiable from the input collection in
/// `g`, and assemble the estimand when it is.
///
/// The empty collection answers no queries: with nothing given, nothing is
/// identifiable.
pub fn gid(
    x: &VarSet,
    y: &VarSet,
    collection: &GivenCollection,
    g: &CausalGraph,
) -> Result<GidResult> {
    collection.check_in(g)?;
    let s_total = query_target(x, y, g)?;
    let mut per_component = Vec::new();
    let mut decision = true;
    for comp in g.c_components(&s_total)? {
        match gid_single(&comp, collection, g)? {
            Some((source_index, estimand)) => per_component.push(ComponentSource {
                component: comp,
                source_index,
                estimand,
            }),
            None => decision = false,
        }
    }
    let final_estimand = if decision {
        let product = Estimand::product(
            per_component.iter().map(|c| c.estimand.clone()).collect(),
        )?;
        Some(Estimand::marginal(
            product,
            s_total.difference(y).cloned().collect(),
        )?)
    } else {
        None
    };
    Ok(GidResult {
        decision,
        per_component,
        final_estimand,
    })
}

/// The c-components of the query target that no input identifies — the
/// obstructions a counterexample construction certifies.
pub fn failing_components(
    x: &VarSet,
    y: &VarSet,
    collection: &GivenCollection,
    g: &CausalGraph,
) -> Result<Vec<VarSet>> {
    collection.check_in(g)?;
    let s_total = query_target(x, y, g)?;
    let mut out = Vec::new();
    for comp in g.c_components(&s_total)? {
        if gid_single(&comp, collection, g)?.is_none() {
            out.push(comp);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    use crate::graph::{varset, VarId};
    use crate::id;
    use crate::sem::random_positive_sem;
    use crate::testutil::{bow_graph, chain_confounded_graph, pair_graph};

    fn coll(sets: &[&[&str]]) -> GivenCollection {
        GivenCollection::new(sets.iter().map(|s| varset(s.iter().copied())).collect())
            .unwrap()
    }

    #[test]
    fn collection_rejects_duplicates_and_empty_members() {
        assert!(GivenCollection::new(vec![varset(["A"]), varset(["A"])]).is_err());
        assert!(GivenCollection::new(vec![VarSet::new()]).is_err());
        assert!(GivenCollection::new(vec![]).is_ok());
    }

    #[test]
    fn empty_collection_is_negative() {
        let g = pair_graph();
        let res = gid(
            &varset(["X1", "X2"]),
            &varset(["Y1", "Y2"]),
            &coll(&[]),
            &g,
        )
        .unwrap();
        assert!(!res.decision);
        assert!(res.per_component.is_empty());
        assert!(res.final_estimand.is_none());
    }

    #[test]
    fn direct_input_identifies_immediately() {
        // Querying P_{t1,t2,t3}(R) with Q[{R}] itself given.
        let g = chain_confounded_graph();
        let res = gid(
            &varset(["T1", "T2", "T3"]),
            &varset(["R"]),
            &coll(&[&["R"]]),
            &g,
        )
        .unwrap();
        assert!(res.decision);
        assert_eq!(res.per_component.len(), 1);
        assert_eq!(res.per_component[0].source_index, 0);
        let final_est = res.final_estimand.unwrap();
        assert_eq!(final_est.render(), "Q0");
    }

    #[test]
    fn observational_member_recovers_plain_id() {
        let g = chain_confounded_graph();
        // Q[V] alone cannot identify P_{t}(R) — matches id().
        let res = gid(
            &varset(["T1", "T2", "T3"]),
            &varset(["R"]),
            &coll(&[&["R", "T1", "T2", "T3"]]),
            &g,
        )
        .unwrap();
        assert!(!res.decision);
        assert!(
            !id::id(&varset(["T1", "T2", "T3"]), &varset(["R"]), &g).unwrap()
        );

        let g = pair_graph();
        let res = gid(
            &varset(["X1", "X2"]),
            &varset(["Y1", "Y2"]),
            &coll(&[&["X1", "X2", "Y1", "Y2"]]),
            &g,
        )
        .unwrap();
        assert!(res.decision);
        let rendered = res.final_estimand.as_ref().unwrap().render();
        assert!(rendered.contains("P(y1|x1,x2)"), "{rendered}");
        assert!(rendered.contains("P(y2|y1,x1,x2)"), "{rendered}");
    }

    #[test]
    fn first_qualifying_index_wins() {
        let g = pair_graph();
        let s = varset(["Y1", "Y2"]);
        // Both inputs identify Q[S]; the scan must stop at index 0.
        let c = coll(&[&["X1", "Y1", "Y2"], &["X1", "X2", "Y1", "Y2"]]);
        let (idx, est) = gid_single(&s, &c, &g).unwrap().unwrap();
        assert_eq!(idx, 0);

        // And the derived expression is numerically right: evaluating it on
        // the table Q[A_0] reproduces the enumerated Q[S].
        let m = random_positive_sem(&g, 5);
        let table = m.q_eval(c.get(0).unwrap()).unwrap();
        let want = m.q_eval(&s).unwrap();
        for (codes, value) in want.iter() {
            let at: BTreeMap<VarId, usize> = table
                .scope()
                .iter()
                .cloned()
                .zip(codes.iter().copied())
                .collect();
            assert_eq!(
                est.evaluate(std::slice::from_ref(&table), &at).unwrap(),
                *value
            );
        }
    }

    #[test]
    fn sets_smaller_than_the_component_are_skipped() {
        let g = pair_graph();
        let s = varset(["Y1", "Y2"]);
        let c = coll(&[&["Y1"], &["Y2"]]);
        assert!(gid_single(&s, &c, &g).unwrap().is_none());
    }

    #[test]
    fn bow_is_unidentifiable_from_observation_but_direct_input_works() {
        let g = bow_graph();
        let x = varset(["X"]);
        let y = varset(["Y"]);
        let res = gid(&x, &y, &coll(&[&["X", "Y"]]), &g).unwrap();
        assert!(!res.decision);
        assert_eq!(
            failing_components(&x, &y, &coll(&[&["X", "Y"]]), &g).unwrap(),
            vec![varset(["Y"])]
        );

        let res = gid(&x, &y, &coll(&[&["X", "Y"], &["Y"]]), &g).unwrap();
        assert!(res.decision);
        assert_eq!(res.per_component[0].source_index, 1);
        assert!(failing_components(&x, &y, &coll(&[&["X", "Y"], &["Y"]]), &g)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn final_estimand_matches_enumerated_intervention() {
        let g = pair_graph();
        let x = varset(["X1", "X2"]);
        let y = varset(["Y1", "Y2"]);
        let c = coll(&[&["X1", "X2", "Y1", "Y2"]]);
        let res = gid(&x, &y, &c, &g).unwrap();
        let est = res.final_estimand.unwrap();
        for seed in [21u64, 22] {
            let m = random_positive_sem(&g, seed);
            let tables = vec![m.q_eval(c.get(0).unwrap()).unwrap()];
            for x1 in 0..2usize {
                for x2 in 0..2usize {
                    let px = m
                        .intervene(
                            &[("X1".to_string(), x1), ("X2".to_string(), x2)]
                                .into_iter()
                                .collect(),
                        )
                        .unwrap();
                    for (codes, value) in px.iter() {
                        let mut at: BTreeMap<VarId, usize> = px
                            .scope()
                            .iter()
                            .cloned()
                            .zip(codes.iter().copied())
                            .collect();
                        at.insert("X1".into(), x1);
                        at.insert("X2".into(), x2);
                        assert_eq!(est.evaluate(&tables, &at).unwrap(), *value);
                    }
                }
            }
        }
    }

    #[test]
    fn queries_are_validated() {
        let g = bow_graph();
        assert!(matches!(
            gid(&varset(["X"]), &varset(["X"]), &coll(&[]), &g),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            gid(&varset(["X"]), &varset(["Y"]), &coll(&[&["Z"]]), &g),
            Err(Error::InvalidVertex(_))
        ));
    }

    #[test]
    fn collection_round_trips_as_json() {
        let c = coll(&[&["A", "B"], &["B"]]);
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(json, r#"[["A","B"],["B"]]"#);
        let back: GivenCollection = serde_json::from_str(&json).unwrap();
        assert_eq!(back, c);
        assert!(serde_json::from_str::<GivenCollection>(r#"[["A"],["A"]]"#).is_err());
    }

    #[test]
    fn appending_inputs_preserves_the_decision() {
        let g = chain_confounded_graph();
        let x = varset(["T1", "T2", "T3"]);
        let y = varset(["R"]);
        let base = coll(&[&["R"]]);
        let more = coll(&[&["R"], &["R", "T1", "T2", "T3"]]);
        assert!(gid(&x, &y, &base, &g).unwrap().decision);
        assert!(gid(&x, &y, &more, &g).unwrap().decision);
    }
}
