//! Canonical figure configurations, compiled into the binary.

pub const NAMES: [&str; 6] = [
    "noon-phase",
    "noon-loss",
    "cs-loss",
    "cs-gaussian",
    "contour-loss",
    "contour-gaussian",
];

pub fn config_text(name: &str) -> Option<&'static str> {
    Some(match name {
        "noon-phase" => include_str!("noon-phase.toml"),
        "noon-loss" => include_str!("noon-loss.toml"),
        "cs-loss" => include_str!("cs-loss.toml"),
        "cs-gaussian" => include_str!("cs-gaussian.toml"),
        "contour-loss" => include_str!("contour-loss.toml"),
        "contour-gaussian" => include_str!("contour-gaussian.toml"),
        _ => return None,
    })
}
