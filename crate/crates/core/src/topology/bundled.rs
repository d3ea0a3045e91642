use super::{parse_edge_list_auto, Topology, TopologyError};

/// Topologies shipped with the crate, by name.
///
/// The four ISP maps are synthetic stand-ins sized after the Rocketfuel
/// Exodus, Sprint, AT&T and NTT maps (router, link and POP counts). They are
/// produced by `examples/synth_topologies.rs`. `path6` and `star` are small
/// graphs for hand-checkable scenarios.
pub const BUNDLED: &[(&str, &str)] = &[
    (
        "exodus-pop",
        include_str!("../../assets/topologies/exodus-pop.txt"),
    ),
    (
        "exodus-router",
        include_str!("../../assets/topologies/exodus-router.txt"),
    ),
    (
        "sprint-pop",
        include_str!("../../assets/topologies/sprint-pop.txt"),
    ),
    (
        "sprint-router",
        include_str!("../../assets/topologies/sprint-router.txt"),
    ),
    (
        "att-pop",
        include_str!("../../assets/topologies/att-pop.txt"),
    ),
    (
        "att-router",
        include_str!("../../assets/topologies/att-router.txt"),
    ),
    (
        "ntt-pop",
        include_str!("../../assets/topologies/ntt-pop.txt"),
    ),
    (
        "ntt-router",
        include_str!("../../assets/topologies/ntt-router.txt"),
    ),
    ("path6", include_str!("../../assets/topologies/path6.txt")),
    ("star", include_str!("../../assets/topologies/star.txt")),
];

pub fn bundled_names() -> impl Iterator<Item = &'static str> {
    BUNDLED.iter().map(|(name, _)| *name)
}

/// Loads a bundled topology by name, e.g. `sprint-pop`.
pub fn bundled(name: &str) -> Result<Topology, TopologyError> {
    let (_, source) = BUNDLED
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| TopologyError::UnknownBundled(name.to_string()))?;
    parse_edge_list_auto(source)
}
