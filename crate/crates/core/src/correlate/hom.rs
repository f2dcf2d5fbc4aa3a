//! Sliding-window HOM g² from two output channels.
//!
//! Every C–D pair within a few periods is assigned to a peak
//! `k = round(delay / period)`. The zero-delay peak holds pairs from the
//! same cycle and side peaks hold pairs from different cycles. Each window's
//! g² is the zero-peak count over the mean count of the nearest side peaks.

use super::CorrelateError;
use crate::montecarlo::{TimeTag, HOM_CHANNEL_C, HOM_CHANNEL_D};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomWindowOptions {
    pub window_s: f64,
    pub shift_s: f64,
    pub side_peaks: usize,
    /// Windows with fewer side-peak coincidences are excluded.
    pub min_side_coincidences: u64,
    pub channel_c: u8,
    pub channel_d: u8,
}

impl Default for HomWindowOptions {
    fn default() -> Self {
        Self {
            window_s: 1.0,
            shift_s: 0.005,
            side_peaks: 6,
            min_side_coincidences: 10,
            channel_c: HOM_CHANNEL_C,
            channel_d: HOM_CHANNEL_D,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomWindowResult {
    /// `(window index, g²)` for the windows kept.
    pub series: Vec<(usize, f64)>,
    pub mean: f64,
    /// Sample standard deviation across kept windows.
    pub std: f64,
    pub excluded: usize,
    /// Coincidence totals over the whole stream.
    pub zero_peak_total: u64,
    pub side_peak_total: u64,
}

impl HomWindowResult {
    /// g² from all coincidences pooled.
    pub fn pooled_g2(&self, side_peaks: usize) -> Option<f64> {
        (self.side_peak_total > 0)
            .then(|| self.zero_peak_total as f64 * side_peaks as f64 / self.side_peak_total as f64)
    }

    /// Poisson standard error of [`Self::pooled_g2`].
    pub fn pooled_sigma(&self, side_peaks: usize) -> Option<f64> {
        let g = self.pooled_g2(side_peaks)?;
        let z = self.zero_peak_total.max(1) as f64;
        Some(g * (1.0 / z + 1.0 / self.side_peak_total as f64).sqrt())
    }
}

/// Peak indices used for normalization: ±1, ±2, ... nearest first.
fn side_peak_set(n: usize) -> Vec<i64> {
    (1..)
        .flat_map(|k: i64| [k, -k])
        .take(n)
        .collect()
}

pub fn hom_windowed_g2(
    tags: &[TimeTag],
    rep_period: u64,
    opts: &HomWindowOptions,
) -> Result<HomWindowResult, CorrelateError> {
    if rep_period == 0 || opts.side_peaks == 0 {
        return Err(CorrelateError::InvalidParameter(
            "period and side-peak count must be positive".into(),
        ));
    }
    if !(opts.window_s > 0.0 && opts.shift_s > 0.0) {
        return Err(CorrelateError::InvalidParameter(
            "window and shift must be positive".into(),
        ));
    }
    let window = (opts.window_s * 1e12).round() as u64;
    let shift = ((opts.shift_s * 1e12).round() as u64).max(1);
    let span = tags.last().map_or(0, |t| t.time + 1);
    if span < window {
        return Err(CorrelateError::ShortStream {
            span_s: span as f64 * 1e-12,
            window_s: opts.window_s,
        });
    }

    let sides = side_peak_set(opts.side_peaks);
    let reach = sides.iter().map(|k| k.unsigned_abs()).max().unwrap_or(0);
    let max_delay = (reach * rep_period + rep_period / 2) as i64;
    let c: Vec<u64> = tags
        .iter()
        .filter(|t| t.channel == opts.channel_c)
        .map(|t| t.time)
        .collect();
    let d: Vec<u64> = tags
        .iter()
        .filter(|t| t.channel == opts.channel_d)
        .map(|t| t.time)
        .collect();

    // coincidence times (the C tag) per peak class, already sorted
    let mut zero = Vec::new();
    let mut side = Vec::new();
    let mut lo = 0;
    for &tc in &c {
        while lo < d.len() && (d[lo] as i64) - (tc as i64) < -max_delay {
            lo += 1;
        }
        for &td in &d[lo..] {
            let delay = td as i64 - tc as i64;
            if delay > max_delay {
                break;
            }
            let k = (delay as f64 / rep_period as f64).round() as i64;
            if k == 0 && delay.unsigned_abs() * 2 < rep_period {
                zero.push(tc);
            } else if sides.contains(&k) {
                side.push(tc);
            }
        }
    }

    let count = |v: &[u64], from: u64, to: u64| {
        v.partition_point(|&t| t < to) - v.partition_point(|&t| t < from)
    };
    let mut series = Vec::new();
    let mut excluded = 0;
    let n_windows = (span - window) / shift + 1;
    for w in 0..n_windows {
        let from = w * shift;
        let to = from + window;
        let s = count(&side, from, to) as u64;
        if s < opts.min_side_coincidences.max(1) {
            excluded += 1;
            continue;
        }
        let z = count(&zero, from, to) as f64;
        series.push((w as usize, z * opts.side_peaks as f64 / s as f64));
    }
    let n = series.len();
    let mean = series.iter().map(|p| p.1).sum::<f64>() / n.max(1) as f64;
    let std = if n > 1 {
        (series.iter().map(|p| (p.1 - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    if n == 0 {
        return Err(CorrelateError::Undefined(format!(
            "all {excluded} windows had too few side-peak coincidences"
        )));
    }
    Ok(HomWindowResult {
        series,
        mean,
        std,
        excluded,
        zero_peak_total: zero.len() as u64,
        side_peak_total: side.len() as u64,
    })
}
