//! Analysis of time-tag streams: folded arrival histograms, EMG arrival
//! fits, two-time correlation maps with quadrant normalization, mean photon
//! number ratios and windowed HOM correlations.

mod csv;
mod emg;
mod hom;
mod map;
mod mu;

use thiserror::Error;

use crate::montecarlo::TimeTag;

pub use csv::{
    write_hom_series_csv, write_hist_csv, write_map_csv, write_mu_csv, write_quadrant_csv,
    QuadrantRow,
};
pub use emg::{
    emg_cdf, emg_pdf, fit_emg, fit_emg_window, EMGFit, FitFailure, FIT_MAX_ITERATIONS,
    FIT_MAX_REDUCED_CHI2, FIT_TOLERANCE,
};
pub use hom::{hom_windowed_g2, HomWindowOptions, HomWindowResult};
pub use map::{
    quadrant_g2, two_time_map, CorrelationMap2D, Pairing, Quadrant, QuadrantResult, Quadrants,
};
pub use mu::{mean_photon_curve, MuPoint, TagRun};

/// Default map bin width in ps.
pub const DEFAULT_BIN_WIDTH: u64 = 25;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CorrelateError {
    #[error("channel set is empty")]
    EmptyChannelSet,
    #[error("bin width {bin_width} ps does not divide the period {period} ps")]
    BinWidth { bin_width: u64, period: u64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("histogram has {0} populated bins, at least 20 needed")]
    TooFewBins(usize),
    #[error("{0}")]
    Fit(Box<FitFailure>),
    #[error("correlation maps have different geometry")]
    GeometryMismatch,
    #[error("quadrant boundary {boundary} ps outside map extent {extent} ps")]
    BoundaryOutside { boundary: f64, extent: u64 },
    #[error("undefined: {0}")]
    Undefined(String),
    #[error("stream spans {span_s} s, shorter than the {window_s} s window")]
    ShortStream { span_s: f64, window_s: f64 },
}

impl CorrelateError {
    /// True for failures of a numerical procedure rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, CorrelateError::Fit(_) | CorrelateError::Undefined(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram1D {
    pub bin_width: u64,
    /// Left edge of the first bin, in ps.
    pub origin: u64,
    pub counts: Vec<u64>,
}

impl Histogram1D {
    pub fn new(bin_width: u64, origin: u64, n_bins: usize) -> Result<Self, CorrelateError> {
        if bin_width == 0 || n_bins == 0 {
            return Err(CorrelateError::InvalidParameter(
                "histogram needs positive bin width and at least one bin".into(),
            ));
        }
        Ok(Self {
            bin_width,
            origin,
            counts: vec![0; n_bins],
        })
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn bin_start(&self, i: usize) -> u64 {
        self.origin + i as u64 * self.bin_width
    }

    pub fn bin_center(&self, i: usize) -> f64 {
        self.bin_start(i) as f64 + 0.5 * self.bin_width as f64
    }

    /// Sum of counts over bins whose left edge lies in `[from, to)`.
    pub fn integral(&self, from: u64, to: u64) -> u64 {
        self.counts
            .iter()
            .enumerate()
            .filter(|(i, _)| (from..to).contains(&self.bin_start(*i)))
            .map(|(_, c)| c)
            .sum()
    }
}

pub(crate) fn check_channels(channels: &[u8]) -> Result<(), CorrelateError> {
    if channels.is_empty() {
        Err(CorrelateError::EmptyChannelSet)
    } else {
        Ok(())
    }
}

pub(crate) fn check_bin_width(bin_width: u64, period: u64) -> Result<(), CorrelateError> {
    if bin_width == 0 || period == 0 || period % bin_width != 0 {
        Err(CorrelateError::BinWidth { bin_width, period })
    } else {
        Ok(())
    }
}

/// Histogram of tag times modulo `rep_period` for tags on `channels`.
pub fn arrival_histogram(
    tags: &[TimeTag],
    channels: &[u8],
    rep_period: u64,
    bin_width: u64,
) -> Result<Histogram1D, CorrelateError> {
    check_channels(channels)?;
    check_bin_width(bin_width, rep_period)?;
    let mut hist = Histogram1D::new(bin_width, 0, (rep_period / bin_width) as usize)?;
    for tag in tags.iter().filter(|t| channels.contains(&t.channel)) {
        hist.counts[((tag.time % rep_period) / bin_width) as usize] += 1;
    }
    Ok(hist)
}
