//! Benchmarks live in `benches/`. This library only holds shared fixtures.

use seqtpe::montecarlo::{run_experiment, DetectorModel, ExperimentConfig, TimeTag};
use seqtpe::protocol::CascadeParams;

pub fn dot_params(delta_t: f64) -> CascadeParams {
    CascadeParams::ideal(142.0, 187.0, delta_t).expect("valid parameters")
}

/// Tag stream from `n_cycles` ideal-detector cycles at Δt = 100 ps.
pub fn ideal_tags(n_cycles: u64) -> Vec<TimeTag> {
    let cfg = ExperimentConfig::new(dot_params(100.0), DetectorModel::ideal(), n_cycles, 1);
    run_experiment(&cfg, 1).expect("valid config").tags
}
