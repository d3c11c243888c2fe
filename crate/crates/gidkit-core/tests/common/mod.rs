//! Shared graph corpus for the integration suites: a set of small
//! semi-Markovian graphs (hand-picked structures plus seeded random ones),
//! each with deterministic queries and input collections.

use gidkit_core::gid::GivenCollection;
use gidkit_core::graph::{varset, CausalGraph, VarId, VarSet};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// One corpus entry: a graph with ready-made queries and collections.
pub struct Case {
    pub name: String,
    pub graph: CausalGraph,
    /// `(treatment, outcome)` pairs, each valid for `graph`.
    pub queries: Vec<(VarSet, VarSet)>,
    /// Input collections to try against each query.
    pub collections: Vec<GivenCollection>,
}

fn g(
    observed: &[&str],
    directed: &[(&str, &str)],
    bidirected: &[(&str, &str)],
) -> CausalGraph {
    CausalGraph::new(
        observed.iter().map(|s| s.to_string()),
        directed
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect::<Vec<_>>(),
        bidirected
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect::<Vec<_>>(),
    )
    .expect("corpus graph is valid")
}

fn named_graphs() -> Vec<(String, CausalGraph)> {
    let entries: Vec<(&str, CausalGraph)> = vec![
        ("bow", g(&["X", "Y"], &[("X", "Y")], &[("X", "Y")])),
        (
            "pair",
            g(
                &["X1", "X2", "Y1", "Y2"],
                &[("X1", "Y1"), ("X2", "Y2")],
                &[("X1", "X2"), ("Y1", "Y2")],
            ),
        ),
        (
            "chain_confounded",
            g(
                &["R", "T1", "T2", "T3"],
                &[("T3", "T2"), ("T2", "T1"), ("T1", "R")],
                &[("R", "T2"), ("T1", "T3"), ("R", "T3")],
            ),
        ),
        (
            "front_door",
            g(&["M", "X", "Y"], &[("X", "M"), ("M", "Y")], &[("X", "Y")]),
        ),
        (
            "back_door",
            g(&["X", "Y", "Z"], &[("Z", "X"), ("Z", "Y"), ("X", "Y")], &[]),
        ),
        (
            "iv",
            g(&["X", "Y", "Z"], &[("Z", "X"), ("X", "Y")], &[("X", "Y")]),
        ),
        (
            "napkin",
            g(
                &["W", "X", "Y", "Z"],
                &[("W", "Z"), ("Z", "X"), ("X", "Y")],
                &[("W", "X"), ("W", "Y")],
            ),
        ),
        ("chain3", g(&["A", "B", "C"], &[("A", "B"), ("B", "C")], &[])),
        (
            "m_graph",
            g(&["X", "Y", "Z"], &[("X", "Y")], &[("X", "Z"), ("Z", "Y")]),
        ),
        (
            "double_bow",
            g(
                &["X", "Y", "Z"],
                &[("X", "Y"), ("Y", "Z")],
                &[("X", "Y"), ("Y", "Z")],
            ),
        ),
        (
            "triangle",
            g(
                &["A", "B", "C"],
                &[("A", "B"), ("A", "C"), ("B", "C")],
                &[("A", "C")],
            ),
        ),
        (
            "split",
            g(
                &["X", "Y1", "Y2"],
                &[("X", "Y1"), ("X", "Y2")],
                &[("Y1", "Y2")],
            ),
        ),
    ];
    entries
        .into_iter()
        .map(|(n, graph)| (n.to_string(), graph))
        .collect()
}

fn random_graph(seed: u64) -> CausalGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(0x9e37_79b9 ^ seed);
    let n = 3 + (seed as usize) % 4;
    let names: Vec<String> = (1..=n).map(|i| format!("V{i}")).collect();
    let mut directed = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.gen_bool(0.45) {
                directed.push((names[i].clone(), names[j].clone()));
            }
        }
    }
    let mut bidirected = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if bidirected.len() < 4 && rng.gen_bool(0.3) {
                bidirected.push((names[i].clone(), names[j].clone()));
            }
        }
    }
    CausalGraph::new(names, directed, bidirected).expect("generated graph is valid")
}

fn queries_for(graph: &CausalGraph) -> Vec<(VarSet, VarSet)> {
    let vs: Vec<&VarId> = graph.observed().iter().collect();
    let n = vs.len();
    let mut out = Vec::new();
    out.push((varset([vs[0].as_str()]), varset([vs[n - 1].as_str()])));
    if n >= 3 {
        out.push((
            varset([vs[0].as_str(), vs[1].as_str()]),
            varset([vs[n - 1].as_str()]),
        ));
    }
    if n >= 4 {
        out.push((
            varset([vs[0].as_str()]),
            varset([vs[n - 2].as_str(), vs[n - 1].as_str()]),
        ));
    }
    out
}

fn collections_for(graph: &CausalGraph) -> Vec<GivenCollection> {
    let all = graph.observed().clone();
    let vs: Vec<&VarId> = graph.observed().iter().collect();
    let n = vs.len();
    let mut out = vec![GivenCollection::new(vec![all.clone()]).expect("valid collection")];
    let mut without_first = all.clone();
    without_first.remove(vs[0]);
    out.push(
        GivenCollection::new(vec![without_first.clone(), all.clone()])
            .expect("valid collection"),
    );
    if n >= 3 {
        let mut sets: Vec<VarSet> = Vec::new();
        for cand in [
            varset([vs[0].as_str(), vs[1].as_str()]),
            varset([vs[n - 2].as_str(), vs[n - 1].as_str()]),
            without_first,
        ] {
            if !sets.contains(&cand) {
                sets.push(cand);
            }
        }
        out.push(GivenCollection::new(sets).expect("valid collection"));
    }
    out
}

/// The full corpus: hand-picked structures plus seeded random graphs, each
/// with its deterministic queries and collections. Stable across runs.
pub fn corpus() -> Vec<Case> {
    let mut graphs = named_graphs();
    for seed in 0..20u64 {
        graphs.push((format!("random_{seed:02}"), random_graph(seed)));
    }
    graphs
        .into_iter()
        .map(|(name, graph)| {
            let queries = queries_for(&graph);
            let collections = collections_for(&graph);
            Case {
                name,
                graph,
                queries,
                collections,
            }
        })
        .collect()
}
