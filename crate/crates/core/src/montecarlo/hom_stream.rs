//! Synthetic two-output stream for phase-dependent HOM measurements.
//!
//! Every laser cycle draws a detected photon configuration from the exact
//! output distribution of two interfering copies of the protocol state.
//! Each photon is kept with probability `efficiency` and yields its own tag,
//! so zero-delay and side-peak coincidence counts estimate `⟨N_c N_d⟩` and
//! `⟨N_c⟩⟨N_d⟩` without bias at any efficiency. Cycles without a detection
//! are skipped geometrically, so the cost scales with the number of tags.

use rand::Rng;
use rand_distr::{Distribution, Exp, Geometric, Normal, Poisson};

use super::{ChannelMap, SimError, TagFile, TimeTag, DEFAULT_PULSE_OFFSET, DEFAULT_REP_PERIOD};
use crate::fock::{Energy, Spatial, TimeBin};
use crate::protocol::{hom_output_state, CascadeParams};

pub const HOM_CHANNEL_C: u8 = 1;
pub const HOM_CHANNEL_D: u8 = 2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhaseModel {
    Constant(f64),
    /// Uniform on [0, 2π), redrawn every `stability_interval_s` seconds.
    Random { stability_interval_s: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomDetector {
    /// Per-photon detection probability at each output.
    pub efficiency: f64,
    pub jitter_sigma: f64,
    pub dark_rate: f64,
    pub rep_period: u64,
    pub pulse_offset: f64,
}

impl Default for HomDetector {
    fn default() -> Self {
        Self {
            efficiency: 0.01,
            jitter_sigma: 40.0,
            dark_rate: 0.0,
            rep_period: DEFAULT_REP_PERIOD,
            pulse_offset: DEFAULT_PULSE_OFFSET,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomStream {
    pub tags: Vec<TimeTag>,
    /// `(first cycle, φ)` of every constant-phase segment.
    pub phases: Vec<(u64, f64)>,
    pub n_cycles: u64,
    pub rep_period: u64,
}

impl HomStream {
    pub fn to_tag_file(&self, seed: Option<u64>) -> TagFile {
        TagFile::new(
            self.rep_period,
            self.n_cycles,
            ChannelMap::hom(),
            seed,
            vec![],
            self.tags.clone(),
        )
    }
}

fn binomial_pmf(n: usize, k: usize, p: f64) -> f64 {
    let c = match (n, k) {
        (2, 1) => 2.0,
        _ => 1.0,
    };
    c * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32)
}

/// Distribution of detected occupation vectors for one phase.
struct DetectedDistribution {
    /// Probability that nothing is detected.
    empty: f64,
    /// Cumulative probabilities of the non-empty outcomes, with basis index.
    cumulative: Vec<(f64, usize)>,
}

fn detected_distribution(
    params: &CascadeParams,
    phi: f64,
    efficiency: f64,
) -> Result<(DetectedDistribution, Vec<(Energy, TimeBin, u8)>, Vec<usize>, usize), SimError> {
    let state = hom_output_state(params, phi)?;
    let reg = state.register().clone();
    let levels = reg.levels();
    let mut probs: Vec<f64> = state.amplitudes().iter().map(|a| a.norm_sqr()).collect();
    for pos in 0..reg.len() {
        let stride = levels.pow((reg.len() - 1 - pos) as u32);
        let mut thinned = vec![0.0; probs.len()];
        for (i, p) in probs.iter().enumerate() {
            if *p == 0.0 {
                continue;
            }
            let n = (i / stride) % levels;
            for k in 0..=n {
                thinned[i - (n - k) * stride] += p * binomial_pmf(n, k, efficiency);
            }
        }
        probs = thinned;
    }
    let mut cumulative = Vec::new();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate().skip(1) {
        if *p > 0.0 {
            acc += p;
            cumulative.push((acc, i));
        }
    }
    let modes = reg
        .modes()
        .iter()
        .map(|m| {
            let ch = if m.spatial == Spatial::C {
                HOM_CHANNEL_C
            } else {
                HOM_CHANNEL_D
            };
            (m.energy, m.bin, ch)
        })
        .collect();
    let strides = (0..reg.len())
        .map(|p| levels.pow((reg.len() - 1 - p) as u32))
        .collect();
    Ok((
        DetectedDistribution {
            empty: probs[0].clamp(0.0, 1.0),
            cumulative,
        },
        modes,
        strides,
        levels,
    ))
}

/// Synthesizes `duration_s` seconds of two-output HOM tags.
pub fn synth_hom_stream<R: Rng + ?Sized>(
    params: &CascadeParams,
    phase_model: &PhaseModel,
    detector: &HomDetector,
    duration_s: f64,
    rng: &mut R,
) -> Result<HomStream, SimError> {
    if !(0.0..=1.0).contains(&detector.efficiency) {
        return Err(SimError::InvalidConfig("efficiency outside [0, 1]".into()));
    }
    if !(duration_s >= 0.0 && duration_s.is_finite()) {
        return Err(SimError::InvalidConfig(format!("bad duration {duration_s} s")));
    }
    if detector.rep_period == 0 {
        return Err(SimError::InvalidConfig("rep period must be positive".into()));
    }
    if params.coefficients().mean_photon_number() <= crate::fock::UNDEFINED_THRESHOLD {
        return Err(SimError::Protocol(
            crate::protocol::ProtocolError::UndefinedCorrelation,
        ));
    }
    let rep = detector.rep_period;
    let n_cycles = (duration_s * 1e12 / rep as f64).round() as u64;
    let segment_cycles = match phase_model {
        PhaseModel::Constant(_) => n_cycles.max(1),
        PhaseModel::Random {
            stability_interval_s,
        } => {
            if !(*stability_interval_s > 0.0) {
                return Err(SimError::InvalidConfig("stability interval must be > 0".into()));
            }
            ((stability_interval_s * 1e12 / rep as f64).round() as u64).max(1)
        }
    };

    let decay_b = Exp::new(params.rate_b()).expect("positive rate");
    let decay_x = Exp::new(params.rate_x()).expect("positive rate");
    let jitter = (detector.jitter_sigma > 0.0)
        .then(|| Normal::new(0.0, detector.jitter_sigma).expect("finite sigma"));

    let mut tags = Vec::new();
    let mut phases = Vec::new();
    let mut seg_start = 0u64;
    while seg_start < n_cycles {
        let seg_end = (seg_start + segment_cycles).min(n_cycles);
        let phi = match phase_model {
            PhaseModel::Constant(phi) => *phi,
            PhaseModel::Random { .. } => rng.gen_range(0.0..std::f64::consts::TAU),
        };
        phases.push((seg_start, phi));
        let (dist, modes, strides, levels) =
            detected_distribution(params, phi, detector.efficiency)?;
        let total = dist.cumulative.last().map_or(0.0, |c| c.0);
        if total > 0.0 && dist.empty < 1.0 {
            let skip = Geometric::new(1.0 - dist.empty).expect("probability in (0, 1]");
            let mut cycle = seg_start;
            loop {
                cycle = cycle.saturating_add(skip.sample(rng));
                if cycle >= seg_end {
                    break;
                }
                let u = rng.gen::<f64>() * total;
                let pick = dist.cumulative.partition_point(|c| c.0 <= u);
                let index = dist.cumulative[pick.min(dist.cumulative.len() - 1)].1;
                let base = (cycle * rep) as f64 + detector.pulse_offset;
                for (pos, &(energy, bin, channel)) in modes.iter().enumerate() {
                    let k = (index / strides[pos]) % levels;
                    for _ in 0..k {
                        let mut t = base;
                        if bin == TimeBin::Late {
                            t += params.delta_t();
                        }
                        t += decay_b.sample(rng);
                        if energy == Energy::X {
                            t += decay_x.sample(rng);
                        }
                        if let Some(j) = &jitter {
                            t += j.sample(rng);
                        }
                        tags.push(TimeTag::new(channel, super::detect::to_tick(t)));
                    }
                }
                cycle += 1;
            }
        }
        seg_start = seg_end;
    }

    if detector.dark_rate > 0.0 && n_cycles > 0 {
        let dark = Poisson::new(detector.dark_rate * duration_s).expect("positive mean");
        let span = n_cycles * rep;
        for ch in [HOM_CHANNEL_C, HOM_CHANNEL_D] {
            let n = dark.sample(rng) as u64;
            for _ in 0..n {
                tags.push(TimeTag::new(ch, rng.gen_range(0..span)));
            }
        }
    }
    tags.sort_unstable();
    Ok(HomStream {
        tags,
        phases,
        n_cycles,
        rep_period: rep,
    })
}
