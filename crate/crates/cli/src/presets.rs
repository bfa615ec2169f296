//! Built-in scenario configs, one per acceptance experiment.

/// `(name, config text)` pairs.
pub const PRESETS: &[(&str, &str)] = &[
    ("bootstrap_sweep", include_str!("../presets/bootstrap_sweep.toml")),
    ("cubic_limit", include_str!("../presets/cubic_limit.toml")),
    ("derivative_decay", include_str!("../presets/derivative_decay.toml")),
    ("free_decay_1d", include_str!("../presets/free_decay_1d.toml")),
    ("free_decay_2d", include_str!("../presets/free_decay_2d.toml")),
    ("free_decay_3d", include_str!("../presets/free_decay_3d.toml")),
    ("inequality_suite", include_str!("../presets/inequality_suite.toml")),
    ("large_data_gronwall", include_str!("../presets/large_data_gronwall.toml")),
    ("linear_dispersive", include_str!("../presets/linear_dispersive.toml")),
    ("small_data_cubic", include_str!("../presets/small_data_cubic.toml")),
    ("small_data_hartree", include_str!("../presets/small_data_hartree.toml")),
];

pub fn find(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}
