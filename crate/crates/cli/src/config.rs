//! Run configuration: defaults, then the TOML file, then command-line flags.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use seqtpe::montecarlo::{
    DetectorModel, EmissionModel, ExperimentConfig, FailedPulsePolicy, PolarizationFilter,
    PulseScheme, DEFAULT_MIN_DELTA_T, DEFAULT_PULSE_OFFSET, DEFAULT_REP_PERIOD,
};
use seqtpe::protocol::CascadeParams;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub tau_b: f64,
    pub tau_x: f64,
    pub dt: f64,
    pub fprep: f64,
    pub jitter: f64,
    pub deadtime: f64,
    pub dark_rate: f64,
    pub efficiency: f64,
    /// Fraction of emitted photons reaching the detector fibers.
    pub collection: f64,
    pub split_ratio: f64,
    pub polarization: String,
    pub ideal: bool,
    pub single_pulse: bool,
    pub failed_pulse: String,
    pub rep_period: u64,
    pub pulse_offset: f64,
    pub min_dt: f64,
    pub cycles: u64,
    pub seed: u64,
    pub bin_width: u64,
    pub window: f64,
    pub shift: f64,
    pub side_peaks: usize,
    pub min_side_coincidences: u64,
    pub phase: Option<f64>,
    pub stability: f64,
    pub duration: f64,
    pub hom_efficiency: f64,
    /// 0 picks the number of available cores. Never changes the output.
    pub workers: usize,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            tau_b: 142.0,
            tau_x: 187.0,
            dt: 100.0,
            fprep: 0.9,
            jitter: 40.0,
            deadtime: 100_000.0,
            dark_rate: 50.0,
            efficiency: 0.8,
            collection: 0.05,
            split_ratio: 0.5,
            polarization: "h".into(),
            ideal: false,
            single_pulse: false,
            failed_pulse: "idle".into(),
            rep_period: DEFAULT_REP_PERIOD,
            pulse_offset: DEFAULT_PULSE_OFFSET,
            min_dt: DEFAULT_MIN_DELTA_T,
            cycles: 1_000_000,
            seed: 1,
            bin_width: 25,
            window: 1.0,
            shift: 0.005,
            side_peaks: 6,
            min_side_coincidences: 10,
            phase: None,
            stability: 1.0,
            duration: 10.0,
            hom_efficiency: 0.002,
            workers: 0,
            out: None,
        }
    }
}

/// Flags shared by every subcommand. Unset flags keep the file or default value.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// TOML file with flat keys named like the long flags (underscores for dashes)
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Biexciton lifetime [ps]
    #[arg(long, global = true, value_name = "PS")]
    pub tau_b: Option<f64>,
    /// Exciton lifetime [ps]
    #[arg(long, global = true, value_name = "PS")]
    pub tau_x: Option<f64>,
    /// Delay between the two pulses [ps]
    #[arg(long, global = true, value_name = "PS")]
    pub dt: Option<f64>,
    /// Preparation fidelity of each pi-pulse [0-1]
    #[arg(long, global = true, value_name = "F")]
    pub fprep: Option<f64>,
    /// Gaussian timing jitter sigma [ps]
    #[arg(long, global = true, value_name = "PS")]
    pub jitter: Option<f64>,
    /// Per-channel dead time [ps]
    #[arg(long, global = true, value_name = "PS")]
    pub deadtime: Option<f64>,
    /// Dark counts per channel [Hz]
    #[arg(long, global = true, value_name = "HZ")]
    pub dark_rate: Option<f64>,
    /// Detection efficiency of every channel [0-1]
    #[arg(long, global = true, value_name = "ETA")]
    pub efficiency: Option<f64>,
    /// Fraction of emitted photons reaching the detector fibers [0-1]
    #[arg(long, global = true, value_name = "ETA")]
    pub collection: Option<f64>,
    /// Fraction of photons routed to the first channel of each energy [0-1]
    #[arg(long, global = true, value_name = "R")]
    pub split_ratio: Option<f64>,
    /// Polarization reaching the detectors: h, v or none (no filter)
    #[arg(long, global = true, value_name = "POL")]
    pub polarization: Option<String>,
    /// Lossless, noiseless, unfiltered detectors (ignores the detector flags)
    #[arg(long, global = true)]
    pub ideal: bool,
    /// Single-pulse reference run instead of the two-pulse protocol
    #[arg(long, global = true)]
    pub single_pulse: bool,
    /// Second-pulse action after the first pulse failed to excite: idle or re-excite
    #[arg(long, global = true, value_name = "POLICY")]
    pub failed_pulse: Option<String>,
    /// Laser repetition period [ps]
    #[arg(long, global = true, value_name = "PS")]
    pub rep_period: Option<u64>,
    /// Position of the first pulse in each cycle [ps]
    #[arg(long, global = true, value_name = "PS")]
    pub pulse_offset: Option<f64>,
    /// Smallest accepted pulse delay [ps]
    #[arg(long, global = true, value_name = "PS")]
    pub min_dt: Option<f64>,
    /// Number of laser cycles to simulate
    #[arg(long, global = true, value_name = "N")]
    pub cycles: Option<u64>,
    /// Random seed
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Histogram and map bin width [ps], must divide the rep period
    #[arg(long, global = true, value_name = "PS")]
    pub bin_width: Option<u64>,
    /// HOM analysis window [s]
    #[arg(long, global = true, value_name = "S")]
    pub window: Option<f64>,
    /// HOM window shift [s]
    #[arg(long, global = true, value_name = "S")]
    pub shift: Option<f64>,
    /// Side peaks used to normalize HOM g2
    #[arg(long, global = true, value_name = "N")]
    pub side_peaks: Option<usize>,
    /// HOM windows with fewer side-peak coincidences are dropped
    #[arg(long, global = true, value_name = "N")]
    pub min_side_coincidences: Option<u64>,
    /// Fixed HOM phase [rad]; random phase drift when unset
    #[arg(long, global = true, value_name = "RAD")]
    pub phase: Option<f64>,
    /// Interval over which the random HOM phase is constant [s]
    #[arg(long, global = true, value_name = "S")]
    pub stability: Option<f64>,
    /// Length of a synthesized HOM stream [s]
    #[arg(long, global = true, value_name = "S")]
    pub duration: Option<f64>,
    /// End-to-end detection efficiency of the HOM outputs [0-1]
    #[arg(long, global = true, value_name = "ETA")]
    pub hom_efficiency: Option<f64>,
    /// Worker threads, 0 = all cores; results never depend on it
    #[arg(long, global = true, value_name = "N")]
    pub workers: Option<usize>,
}

macro_rules! apply {
    ($cfg:ident, $ov:ident; $($field:ident),*) => {
        $(if let Some(v) = $ov.$field.clone() { $cfg.$field = v; })*
    };
}

impl RunConfig {
    pub fn load(ov: &Overrides) -> Result<Self, CliError> {
        let mut cfg = match &ov.config {
            Some(path) => Self::from_file(path)?,
            None => Self::default(),
        };
        apply!(cfg, ov; tau_b, tau_x, dt, fprep, jitter, deadtime, dark_rate, efficiency,
            collection, split_ratio, polarization, failed_pulse, rep_period, pulse_offset, min_dt, cycles,
            seed, bin_width, window, shift, side_peaks, min_side_coincidences, stability,
            duration, hom_efficiency, workers);
        if ov.phase.is_some() {
            cfg.phase = ov.phase;
        }
        cfg.ideal |= ov.ideal;
        cfg.single_pulse |= ov.single_pulse;
        Ok(cfg)
    }

    fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
    }

    pub fn workers(&self) -> usize {
        if self.workers > 0 {
            self.workers
        } else {
            std::thread::available_parallelism().map_or(1, |n| n.get())
        }
    }

    pub fn ideal_params(&self) -> Result<CascadeParams, CliError> {
        Ok(CascadeParams::ideal(self.tau_b, self.tau_x, self.dt)?)
    }

    pub fn detector(&self) -> Result<DetectorModel, CliError> {
        if self.ideal {
            return Ok(DetectorModel::ideal());
        }
        let polarization_filter = match self.polarization.to_ascii_lowercase().as_str() {
            "h" => PolarizationFilter::H,
            "v" => PolarizationFilter::V,
            "none" => PolarizationFilter::None,
            other => {
                return Err(CliError::Usage(format!(
                    "polarization must be h, v or none, got {other:?}"
                )))
            }
        };
        if !(0.0..=1.0).contains(&self.collection) {
            return Err(CliError::Usage(format!(
                "collection must lie in [0, 1], got {}",
                self.collection
            )));
        }
        Ok(DetectorModel {
            jitter_sigma: self.jitter,
            deadtime: self.deadtime,
            dark_rate: self.dark_rate,
            splitter_ratio: self.split_ratio,
            polarization_filter,
            ..DetectorModel::ideal()
        }
        .with_efficiency(self.efficiency * self.collection))
    }

    fn failed_pulse(&self) -> Result<FailedPulsePolicy, CliError> {
        match self.failed_pulse.as_str() {
            "idle" => Ok(FailedPulsePolicy::Idle),
            "re-excite" | "reexcite" => Ok(FailedPulsePolicy::ReExcite),
            other => Err(CliError::Usage(format!(
                "failed-pulse must be idle or re-excite, got {other:?}"
            ))),
        }
    }

    /// Simulator configuration at pulse delay `dt` (ignored for single pulses).
    pub fn experiment(&self, dt: f64, scheme: PulseScheme, seed: u64) -> Result<ExperimentConfig, CliError> {
        let params = CascadeParams::new(self.tau_b, self.tau_x, dt, self.fprep)?;
        let mut cfg = ExperimentConfig::new(params, self.detector()?, self.cycles, seed);
        cfg.model = EmissionModel {
            scheme,
            failed_pulse: self.failed_pulse()?,
        };
        cfg.rep_period = self.rep_period;
        cfg.pulse_offset = self.pulse_offset;
        cfg.min_delta_t = self.min_dt;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn scheme(&self) -> PulseScheme {
        if self.single_pulse {
            PulseScheme::Single
        } else {
            PulseScheme::Double
        }
    }

    /// Parameter set for manifests. The worker count and output path are
    /// left out because they never affect results.
    pub fn echo(&self) -> toml::Table {
        let mut t = toml::Table::try_from(self).expect("config serializes");
        t.remove("workers");
        t.remove("out");
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "dt = 50.0\nseed = 3\ncycles = 10\n").unwrap();
        let ov = Overrides {
            config: Some(path),
            seed: Some(4),
            ..Default::default()
        };
        let cfg = RunConfig::load(&ov).unwrap();
        assert_eq!(cfg.dt, 50.0);
        assert_eq!(cfg.seed, 4);
        assert_eq!(cfg.cycles, 10);
        assert_eq!(cfg.tau_b, 142.0);
    }

    #[test]
    fn unknown_key_is_a_data_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "tau = 1.0\n").unwrap();
        let ov = Overrides {
            config: Some(path),
            ..Default::default()
        };
        assert!(matches!(RunConfig::load(&ov), Err(CliError::Data(_))));
    }

    #[test]
    fn echo_round_trips() {
        let cfg = RunConfig {
            phase: Some(0.5),
            ..Default::default()
        };
        let text = toml::to_string(&cfg.echo()).unwrap();
        let back: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, RunConfig { workers: 0, ..cfg });
    }

    #[test]
    fn bad_polarization_is_usage() {
        let cfg = RunConfig {
            polarization: "d".into(),
            ..Default::default()
        };
        assert!(matches!(cfg.detector(), Err(CliError::Usage(_))));
    }
}
