//! Small graphs shared by unit tests across modules.

use crate::graph::CausalGraph;

/// X1 -> Y1, X2 -> Y2, X1 <-> X2, Y1 <-> Y2.
pub(crate) fn pair_graph() -> CausalGraph {
    CausalGraph::new(
        ["X1", "X2", "Y1", "Y2"],
        [("X1".into(), "Y1".into()), ("X2".into(), "Y2".into())],
        [("X1".into(), "X2".into()), ("Y1".into(), "Y2".into())],
    )
    .unwrap()
}

/// Chain T3 -> T2 -> T1 -> R with R <-> T2, T1 <-> T3, R <-> T3.
pub(crate) fn chain_confounded_graph() -> CausalGraph {
    CausalGraph::new(
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
    .unwrap()
}

/// X -> Y with X <-> Y.
pub(crate) fn bow_graph() -> CausalGraph {
    CausalGraph::new(
        ["X", "Y"],
        [("X".into(), "Y".into())],
        [("X".into(), "Y".into())],
    )
    .unwrap()
}

/// Front-door: X -> M -> Y with X <-> Y.
pub(crate) fn front_door_graph() -> CausalGraph {
    CausalGraph::new(
        ["M", "X", "Y"],
        [("X".into(), "M".into()), ("M".into(), "Y".into())],
        [("X".into(), "Y".into())],
    )
    .unwrap()
}
