use rayon::prelude::*;

use super::detect::detect_raw;
use super::{
    apply_deadtime, cycle_rng, simulate_cycle, ChannelMap, CycleWindow, ExperimentConfig,
    PulseScheme, SimError, TagFile, TimeTag,
};

const CHUNK_CYCLES: u64 = 1 << 14;

/// Tag stream plus the configuration that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationRun {
    pub config: ExperimentConfig,
    pub tags: Vec<TimeTag>,
}

impl SimulationRun {
    pub fn n_cycles(&self) -> u64 {
        self.config.n_cycles
    }

    pub fn channel_map(&self) -> ChannelMap {
        self.config.detector.channel_map()
    }

    /// Tag file carrying the run metadata in its header.
    pub fn to_tag_file(&self) -> TagFile {
        let cfg = &self.config;
        let mut extra = vec![
            ("delta_t_ps".to_string(), cfg.params.delta_t().to_string()),
            (
                "pulses".to_string(),
                match cfg.model.scheme {
                    PulseScheme::Single => "1",
                    PulseScheme::Double => "2",
                }
                .to_string(),
            ),
            ("pulse_offset_ps".to_string(), cfg.pulse_offset.to_string()),
        ];
        extra.push(("tau_b_ps".to_string(), cfg.params.tau_b().to_string()));
        extra.push(("tau_x_ps".to_string(), cfg.params.tau_x().to_string()));
        extra.push((
            "prep_fidelity".to_string(),
            cfg.params.prep_fidelity().to_string(),
        ));
        let det = &cfg.detector;
        extra.extend([
            ("failed_pulse".to_string(), cfg.model.failed_pulse.as_str().to_string()),
            ("jitter_ps".to_string(), det.jitter_sigma.to_string()),
            ("deadtime_ps".to_string(), det.deadtime.to_string()),
            ("dark_rate_hz".to_string(), det.dark_rate.to_string()),
            ("efficiency_b".to_string(), format!("{},{}", det.b.efficiency[0], det.b.efficiency[1])),
            ("efficiency_x".to_string(), format!("{},{}", det.x.efficiency[0], det.x.efficiency[1])),
            ("split_ratio".to_string(), det.splitter_ratio.to_string()),
            ("polarization".to_string(), det.polarization_filter.as_str().to_string()),
        ]);
        TagFile::new(
            cfg.rep_period,
            cfg.n_cycles,
            self.channel_map(),
            Some(cfg.seed),
            extra,
            self.tags.clone(),
        )
    }
}

fn simulate_range(config: &ExperimentConfig, range: std::ops::Range<u64>) -> Vec<TimeTag> {
    let mut out = Vec::new();
    for cycle in range {
        let mut rng = cycle_rng(config.seed, cycle);
        let events = simulate_cycle(&config.params, &config.model, &mut rng);
        let window = CycleWindow {
            start: cycle * config.rep_period,
            period: config.rep_period,
            pulse_offset: config.pulse_offset,
        };
        out.extend(detect_raw(&events, &config.detector, window, &mut rng));
    }
    out
}

/// Simulates `n_cycles` laser cycles and returns the merged, sorted stream.
///
/// Dead time is enforced in one pass over the merged stream so it carries
/// across cycle boundaries. The output is identical for any `workers`.
pub fn run_experiment(config: &ExperimentConfig, workers: usize) -> Result<SimulationRun, SimError> {
    config.validate()?;
    let chunks: Vec<std::ops::Range<u64>> = (0..config.n_cycles)
        .step_by(CHUNK_CYCLES as usize)
        .map(|s| s..(s + CHUNK_CYCLES).min(config.n_cycles))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| SimError::InvalidConfig(format!("thread pool: {e}")))?;
    let parts: Vec<Vec<TimeTag>> = pool.install(|| {
        chunks
            .into_par_iter()
            .map(|r| simulate_range(config, r))
            .collect()
    });
    let mut tags: Vec<TimeTag> = parts.into_iter().flatten().collect();
    tags.sort_unstable();
    apply_deadtime(&mut tags, config.detector.deadtime);
    Ok(SimulationRun {
        config: config.clone(),
        tags,
    })
}
