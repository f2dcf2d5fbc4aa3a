//! Classical stochastic emulation of the experiment.
//!
//! Each laser cycle draws cascade emissions under the two-pulse protocol,
//! passes them through an imperfect detector model and yields time tags.
//! Cycles use independent counter-based random streams keyed by
//! `(seed, cycle index)`, so the merged tag stream does not depend on how the
//! cycles were scheduled across threads.

mod detect;
mod hom_stream;
mod run;
mod tags;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use thiserror::Error;

use crate::protocol::{CascadeParams, ProtocolError};

pub use detect::{apply_deadtime, detect, CycleWindow};
pub use hom_stream::{synth_hom_stream, HomDetector, HomStream, PhaseModel, HOM_CHANNEL_C, HOM_CHANNEL_D};
pub use run::{run_experiment, SimulationRun};
pub use tags::{
    read_tags, write_tags, ChannelLabel, ChannelMap, TagFile, TagIoError, TagIoErrorKind,
    TAG_FORMAT_MAGIC,
};

/// Twice the 6 ps pulse length; shorter delays would overlap the pulses.
pub const DEFAULT_MIN_DELTA_T: f64 = 12.0;
/// Laser repetition period in ps.
pub const DEFAULT_REP_PERIOD: u64 = 12_500;
/// Position of the first pulse inside each cycle, in ps.
pub const DEFAULT_PULSE_OFFSET: f64 = 500.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Polarization {
    H,
    V,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EmissionKind {
    B,
    X,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmissionEvent {
    pub kind: EmissionKind,
    /// 1 for the cascade started by the first pulse, 2 for re-excitation.
    pub cascade_index: u8,
    /// ps after the first pulse.
    pub time: f64,
    pub polarization: Polarization,
}

/// One detector click. Ordering is by time, then channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TimeTag {
    /// Absolute ps from the start of the experiment.
    pub time: u64,
    pub channel: u8,
}

impl TimeTag {
    pub fn new(channel: u8, time: u64) -> Self {
        Self { time, channel }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PulseScheme {
    /// Reference measurement with the first pulse only.
    Single,
    #[default]
    Double,
}

/// What the second pulse does when the first one failed to excite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FailedPulsePolicy {
    /// The emitter stays dark for the whole cycle. Gives `μ(0⁺) = 1 − F_prep`
    /// after normalizing to the single-pulse reference.
    #[default]
    Idle,
    /// The second pulse tries to excite the ground state with probability
    /// `F_prep`, like any other ground-state excitation.
    ReExcite,
}

impl FailedPulsePolicy {
    pub fn as_str(self) -> &'static str {
        match self {
            FailedPulsePolicy::Idle => "idle",
            FailedPulsePolicy::ReExcite => "re-excite",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EmissionModel {
    pub scheme: PulseScheme,
    pub failed_pulse: FailedPulsePolicy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolarizationFilter {
    H,
    V,
    None,
}

impl PolarizationFilter {
    pub fn as_str(self) -> &'static str {
        match self {
            PolarizationFilter::H => "h",
            PolarizationFilter::V => "v",
            PolarizationFilter::None => "none",
        }
    }

    pub fn passes(self, p: Polarization) -> bool {
        match self {
            PolarizationFilter::None => true,
            PolarizationFilter::H => p == Polarization::H,
            PolarizationFilter::V => p == Polarization::V,
        }
    }
}

/// Two detector channels fed by a fiber splitter for one energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelPair {
    pub channels: [u8; 2],
    pub efficiency: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorModel {
    pub b: ChannelPair,
    pub x: ChannelPair,
    /// Gaussian timing jitter σ in ps.
    pub jitter_sigma: f64,
    /// Per-channel dead time in ps.
    pub deadtime: f64,
    /// Dark counts per channel in Hz.
    pub dark_rate: f64,
    /// Probability of routing a photon to the first channel of its pair.
    pub splitter_ratio: f64,
    pub polarization_filter: PolarizationFilter,
}

impl DetectorModel {
    /// Lossless, noiseless, instantaneous detection on channels 1,2 (B) and 3,4 (X).
    pub fn ideal() -> Self {
        Self {
            b: ChannelPair {
                channels: [1, 2],
                efficiency: [1.0; 2],
            },
            x: ChannelPair {
                channels: [3, 4],
                efficiency: [1.0; 2],
            },
            jitter_sigma: 0.0,
            deadtime: 0.0,
            dark_rate: 0.0,
            splitter_ratio: 0.5,
            polarization_filter: PolarizationFilter::None,
        }
    }

    /// Setup-like defaults: 40 ps jitter, 100 ns dead time, 50 Hz dark counts,
    /// 80 % efficiency, one polarization detected.
    pub fn realistic() -> Self {
        Self {
            jitter_sigma: 40.0,
            deadtime: 100_000.0,
            dark_rate: 50.0,
            polarization_filter: PolarizationFilter::H,
            ..Self::ideal()
        }
        .with_efficiency(0.8)
    }

    pub fn with_efficiency(mut self, efficiency: f64) -> Self {
        self.b.efficiency = [efficiency; 2];
        self.x.efficiency = [efficiency; 2];
        self
    }

    pub fn pair(&self, kind: EmissionKind) -> &ChannelPair {
        match kind {
            EmissionKind::B => &self.b,
            EmissionKind::X => &self.x,
        }
    }

    pub fn channels(&self) -> [u8; 4] {
        [
            self.b.channels[0],
            self.b.channels[1],
            self.x.channels[0],
            self.x.channels[1],
        ]
    }

    pub fn channel_map(&self) -> ChannelMap {
        ChannelMap::new(vec![
            (self.b.channels[0], ChannelLabel::B),
            (self.b.channels[1], ChannelLabel::B),
            (self.x.channels[0], ChannelLabel::X),
            (self.x.channels[1], ChannelLabel::X),
        ])
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let ch = self.channels();
        for (i, c) in ch.iter().enumerate() {
            if ch[..i].contains(c) {
                return Err(SimError::InvalidConfig(format!("channel {c} used twice")));
            }
        }
        let effs = self.b.efficiency.iter().chain(&self.x.efficiency);
        if effs.clone().any(|e| !(0.0..=1.0).contains(e)) {
            return Err(SimError::InvalidConfig("efficiency outside [0, 1]".into()));
        }
        if !(0.0..=1.0).contains(&self.splitter_ratio) {
            return Err(SimError::InvalidConfig("splitter ratio outside [0, 1]".into()));
        }
        for (name, v) in [
            ("jitter", self.jitter_sigma),
            ("deadtime", self.deadtime),
            ("dark rate", self.dark_rate),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(SimError::InvalidConfig(format!("{name} must be >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub params: CascadeParams,
    pub detector: DetectorModel,
    pub model: EmissionModel,
    /// ps
    pub rep_period: u64,
    pub n_cycles: u64,
    pub seed: u64,
    /// ps from cycle start to the first pulse.
    pub pulse_offset: f64,
    /// Smallest accepted pulse delay in ps for the double-pulse scheme.
    pub min_delta_t: f64,
}

impl ExperimentConfig {
    pub fn new(params: CascadeParams, detector: DetectorModel, n_cycles: u64, seed: u64) -> Self {
        Self {
            params,
            detector,
            model: EmissionModel::default(),
            rep_period: DEFAULT_REP_PERIOD,
            n_cycles,
            seed,
            pulse_offset: DEFAULT_PULSE_OFFSET,
            min_delta_t: DEFAULT_MIN_DELTA_T,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        self.detector.validate()?;
        if self.rep_period == 0 {
            return Err(SimError::InvalidConfig("rep period must be positive".into()));
        }
        let dt = self.params.delta_t();
        if dt >= self.rep_period as f64 {
            return Err(SimError::InvalidConfig(format!(
                "pulse delay {dt} ps must be shorter than the rep period {} ps",
                self.rep_period
            )));
        }
        if self.model.scheme == PulseScheme::Double && dt < self.min_delta_t {
            return Err(SimError::InvalidConfig(format!(
                "pulse delay {dt} ps below the minimum {} ps",
                self.min_delta_t
            )));
        }
        if !(self.pulse_offset >= 0.0 && self.pulse_offset < self.rep_period as f64) {
            return Err(SimError::InvalidConfig(format!(
                "pulse offset {} ps outside the cycle",
                self.pulse_offset
            )));
        }
        Ok(())
    }
}

/// Random stream for one cycle: ChaCha8 keyed by `seed`, stream id = cycle.
pub fn cycle_rng(seed: u64, cycle: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(cycle);
    rng
}

fn polarization<R: Rng + ?Sized>(rng: &mut R) -> Polarization {
    if rng.gen_bool(0.5) {
        Polarization::H
    } else {
        Polarization::V
    }
}

fn push_cascade(
    events: &mut Vec<EmissionEvent>,
    cascade_index: u8,
    t_b: f64,
    t_x: f64,
    pol: Polarization,
) {
    events.push(EmissionEvent {
        kind: EmissionKind::B,
        cascade_index,
        time: t_b,
        polarization: pol,
    });
    events.push(EmissionEvent {
        kind: EmissionKind::X,
        cascade_index,
        time: t_x,
        polarization: pol,
    });
}

/// Emissions of one laser cycle, times relative to the first pulse.
pub fn simulate_cycle<R: Rng + ?Sized>(
    params: &CascadeParams,
    model: &EmissionModel,
    rng: &mut R,
) -> Vec<EmissionEvent> {
    let f = params.prep_fidelity();
    let dt = params.delta_t();
    let decay_b = Exp::new(params.rate_b()).expect("positive rate");
    let decay_x = Exp::new(params.rate_x()).expect("positive rate");
    let mut events = Vec::with_capacity(4);

    let excited = rng.gen_bool(f);
    if model.scheme == PulseScheme::Single {
        if excited {
            let t_b = decay_b.sample(rng);
            let t_x = t_b + decay_x.sample(rng);
            let pol = polarization(rng);
            push_cascade(&mut events, 1, t_b, t_x, pol);
        }
        return events;
    }

    if !excited {
        if model.failed_pulse == FailedPulsePolicy::ReExcite && rng.gen_bool(f) {
            let t_b = dt + decay_b.sample(rng);
            let t_x = t_b + decay_x.sample(rng);
            let pol = polarization(rng);
            push_cascade(&mut events, 2, t_b, t_x, pol);
        }
        return events;
    }

    let t_b = decay_b.sample(rng);
    let t_x = t_b + decay_x.sample(rng);
    let pol = polarization(rng);
    if t_b >= dt {
        // still in B: de-excited unless the second pulse fails
        if !rng.gen_bool(f) {
            push_cascade(&mut events, 1, t_b, t_x, pol);
        }
    } else if t_x >= dt {
        // in X: the second pulse is detuned
        push_cascade(&mut events, 1, t_b, t_x, pol);
    } else {
        push_cascade(&mut events, 1, t_b, t_x, pol);
        if rng.gen_bool(f) {
            let t_b2 = dt + decay_b.sample(rng);
            let t_x2 = t_b2 + decay_x.sample(rng);
            let pol2 = polarization(rng);
            push_cascade(&mut events, 2, t_b2, t_x2, pol2);
        }
    }
    events
}

/// Expected photons per energy of the two-pulse scheme over the single-pulse
/// reference, before detection. Reduces to `β² + 2γ²` for perfect pulses.
pub fn expected_emission_ratio(params: &CascadeParams, model: &EmissionModel) -> f64 {
    if model.scheme == PulseScheme::Single {
        return 1.0;
    }
    let f = params.prep_fidelity();
    let c = params.coefficients();
    let failed_first = match model.failed_pulse {
        FailedPulsePolicy::Idle => 0.0,
        FailedPulsePolicy::ReExcite => 1.0 - f,
    };
    c.alpha_sq * (1.0 - f) + c.beta_sq + c.gamma_sq * (1.0 + f) + failed_first
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dot(dt: f64, f: f64) -> CascadeParams {
        CascadeParams::new(142.0, 187.0, dt, f).unwrap()
    }

    #[test]
    fn emission_ratio_matches_sampling() {
        let n = 200_000u64;
        for policy in [FailedPulsePolicy::Idle, FailedPulsePolicy::ReExcite] {
            let p = dot(150.0, 0.8);
            let model = EmissionModel {
                scheme: PulseScheme::Double,
                failed_pulse: policy,
            };
            let b_count: usize = (0..n)
                .map(|c| {
                    simulate_cycle(&p, &model, &mut cycle_rng(11, c))
                        .iter()
                        .filter(|e| e.kind == EmissionKind::B)
                        .count()
                })
                .sum();
            // reference rate is exactly F photons per cycle
            let measured = b_count as f64 / n as f64 / 0.8;
            let expected = expected_emission_ratio(&p, &model);
            // per-cycle count is at most 2, so the variance is below 1
            let sigma = 1.0 / (n as f64).sqrt() / 0.8;
            assert!((measured - expected).abs() < 4.0 * sigma, "{policy:?}: {measured} vs {expected}");
        }
        let ideal = dot(100.0, 1.0);
        let mu = ideal.coefficients().mean_photon_number();
        assert!((expected_emission_ratio(&ideal, &EmissionModel::default()) - mu).abs() < 1e-15);
    }

    #[test]
    fn deterministic_double_excitation() {
        let p = dot(1e7, 1.0);
        let model = EmissionModel::default();
        for cycle in 0..200 {
            let ev = simulate_cycle(&p, &model, &mut cycle_rng(7, cycle));
            // t_X exceeding 1e7 ps is astronomically unlikely
            assert_eq!(ev.len(), 4);
        }
    }

    #[test]
    fn zero_delay_full_deexcitation() {
        let p = dot(0.0, 1.0);
        let model = EmissionModel::default();
        for cycle in 0..200 {
            assert!(simulate_cycle(&p, &model, &mut cycle_rng(7, cycle)).is_empty());
        }
    }

    #[test]
    fn ordering_invariants() {
        let p = dot(100.0, 0.8);
        for policy in [FailedPulsePolicy::Idle, FailedPulsePolicy::ReExcite] {
            let model = EmissionModel {
                scheme: PulseScheme::Double,
                failed_pulse: policy,
            };
            for cycle in 0..5000 {
                let ev = simulate_cycle(&p, &model, &mut cycle_rng(3, cycle));
                assert!(matches!(ev.len(), 0 | 2 | 4));
                for c in ev.chunks(2) {
                    assert_eq!(c[0].kind, EmissionKind::B);
                    assert_eq!(c[1].kind, EmissionKind::X);
                    assert!(c[1].time > c[0].time);
                    assert_eq!(c[0].polarization, c[1].polarization);
                    if c[0].cascade_index == 2 {
                        assert!(c[0].time >= 100.0);
                    }
                }
            }
        }
    }

    #[test]
    fn config_validation() {
        let mut cfg = ExperimentConfig::new(dot(100.0, 1.0), DetectorModel::ideal(), 10, 1);
        assert!(cfg.validate().is_ok());
        cfg.params = dot(12_500.0, 1.0);
        assert!(cfg.validate().is_err());
        cfg.params = dot(5.0, 1.0);
        assert!(cfg.validate().is_err());
        cfg.min_delta_t = 0.0;
        assert!(cfg.validate().is_ok());
        cfg.detector.x.channels = [1, 5];
        assert!(cfg.validate().is_err());
        let mut d = DetectorModel::ideal();
        d.splitter_ratio = 1.2;
        assert!(d.validate().is_err());
    }
}
