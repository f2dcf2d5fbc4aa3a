//! Exponentially modified Gaussian fits of arrival-time histograms.
//!
//! The model is a one-sided exponential decay starting at `t0`, convolved
//! with a Gaussian response of width `sigma`. Each bin is compared with the
//! model integrated over that bin, so coarse bins do not bias `t0`. The
//! amplitude enters linearly and is solved in closed form at every step. The
//! remaining shape parameters `(t0, ln tau, ln sigma)` are searched by a
//! Nelder–Mead simplex seeded from a coarse grid over `t0`.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};
use std::fmt;

use libm::erfc;

use super::{CorrelateError, Histogram1D};

/// Stop when every simplex vertex agrees to this relative parameter change.
pub const FIT_TOLERANCE: f64 = 1e-6;
pub const FIT_MAX_ITERATIONS: usize = 4000;
/// Fits whose Poisson-weighted reduced chi-square exceeds this are rejected.
pub const FIT_MAX_REDUCED_CHI2: f64 = 25.0;

const MIN_POPULATED_BINS: usize = 20;
/// Below this width the response is treated as a delta function.
const SHARP_SIGMA: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EMGFit {
    pub t0: f64,
    pub tau: f64,
    pub sigma: f64,
    /// Total counts under the fitted curve.
    pub amplitude: f64,
    /// Euclidean norm of the count residuals.
    pub residual_norm: f64,
    pub reduced_chi2: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitFailure {
    pub reason: &'static str,
    pub best: EMGFit,
}

impl fmt::Display for FitFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "EMG fit failed ({}); best iterate t0={} tau={} sigma={} reduced_chi2={}",
            self.reason, self.best.t0, self.best.tau, self.best.sigma, self.best.reduced_chi2
        )
    }
}

/// `exp(z²) erfc(z)`, accurate for large positive `z`.
fn erfcx(z: f64) -> f64 {
    if z < 20.0 {
        return (z * z).exp() * erfc(z);
    }
    // continued fraction 1/(z + (1/2)/(z + 1/(z + (3/2)/(z + ...))))
    let mut tail = z;
    for k in (1..60).rev() {
        tail = z + (k as f64 / 2.0) / tail;
    }
    1.0 / (tail * PI.sqrt())
}

fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// `exp(σ²/2τ² − u/τ) · erfc(σ/(√2τ) − u/(√2σ)) / 2`, without overflow.
fn modified_tail(u: f64, tau: f64, sigma: f64) -> f64 {
    let z = (sigma / tau - u / sigma) / SQRT_2;
    if z > 5.0 {
        0.5 * (-0.5 * (u / sigma).powi(2)).exp() * erfcx(z)
    } else {
        0.5 * (0.5 * (sigma / tau).powi(2) - u / tau).exp() * erfc(z)
    }
}

/// Unit-area EMG density at `t`.
pub fn emg_pdf(t: f64, t0: f64, tau: f64, sigma: f64) -> f64 {
    let u = t - t0;
    if sigma <= SHARP_SIGMA {
        return if u >= 0.0 { (-u / tau).exp() / tau } else { 0.0 };
    }
    modified_tail(u, tau, sigma) / tau
}

/// Cumulative distribution of the unit-area EMG.
pub fn emg_cdf(t: f64, t0: f64, tau: f64, sigma: f64) -> f64 {
    let u = t - t0;
    if sigma <= SHARP_SIGMA {
        return if u > 0.0 { -(-u / tau).exp_m1() } else { 0.0 };
    }
    std_normal_cdf(u / sigma) - modified_tail(u, tau, sigma)
}

struct Problem<'a> {
    edges: Vec<f64>,
    counts: &'a [u64],
    fixed_sigma: Option<f64>,
}

impl Problem<'_> {
    fn unpack(&self, x: &[f64]) -> (f64, f64, f64) {
        let sigma = self.fixed_sigma.unwrap_or_else(|| x[2].exp());
        (x[0], x[1].exp(), sigma)
    }

    fn shape(&self, t0: f64, tau: f64, sigma: f64) -> Vec<f64> {
        let cdf: Vec<f64> = self
            .edges
            .iter()
            .map(|&e| emg_cdf(e, t0, tau, sigma))
            .collect();
        cdf.windows(2).map(|w| (w[1] - w[0]).max(0.0)).collect()
    }

    /// Optimal amplitude and the residual sum of squares.
    fn solve(&self, t0: f64, tau: f64, sigma: f64) -> (f64, f64) {
        let g = self.shape(t0, tau, sigma);
        let gg: f64 = g.iter().map(|v| v * v).sum();
        if gg <= 0.0 {
            let ss = self.counts.iter().map(|&c| (c as f64).powi(2)).sum();
            return (0.0, ss);
        }
        let gy: f64 = g.iter().zip(self.counts).map(|(v, &c)| v * c as f64).sum();
        let amp = (gy / gg).max(0.0);
        let ss = g
            .iter()
            .zip(self.counts)
            .map(|(v, &c)| (c as f64 - amp * v).powi(2))
            .sum();
        (amp, ss)
    }

    fn cost(&self, x: &[f64]) -> f64 {
        let (t0, tau, sigma) = self.unpack(x);
        self.solve(t0, tau, sigma).1
    }

    fn report(&self, x: &[f64], iterations: usize) -> EMGFit {
        let (t0, tau, sigma) = self.unpack(x);
        let (amplitude, ss) = self.solve(t0, tau, sigma);
        let g = self.shape(t0, tau, sigma);
        let chi2: f64 = g
            .iter()
            .zip(self.counts)
            .map(|(v, &c)| {
                let m = amplitude * v;
                (c as f64 - m).powi(2) / m.max(1.0)
            })
            .sum();
        let dof = self.counts.len().saturating_sub(x.len() + 1).max(1);
        EMGFit {
            t0,
            tau,
            sigma,
            amplitude,
            residual_norm: ss.sqrt(),
            reduced_chi2: chi2 / dof as f64,
            iterations,
        }
    }
}

fn converged(simplex: &[(Vec<f64>, f64)]) -> bool {
    let best = &simplex[0].0;
    let params_close = simplex[1..].iter().all(|(v, _)| {
        v.iter()
            .zip(best)
            .all(|(a, b)| (a - b).abs() <= FIT_TOLERANCE * b.abs().max(1.0))
    });
    let (lo, hi) = (simplex[0].1, simplex[simplex.len() - 1].1);
    params_close || (hi - lo).abs() <= 1e-15 * lo.abs().max(1e-300)
}

/// Minimizes `f` from `start` with per-coordinate initial steps.
fn nelder_mead(
    f: impl Fn(&[f64]) -> f64,
    start: &[f64],
    steps: &[f64],
) -> (Vec<f64>, usize, bool) {
    let n = start.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((start.to_vec(), f(start)));
    for i in 0..n {
        let mut v = start.to_vec();
        v[i] += steps[i];
        let fv = f(&v);
        simplex.push((v, fv));
    }
    let along = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> {
        a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
    };
    for iter in 0..FIT_MAX_ITERATIONS {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if converged(&simplex) {
            return (simplex.swap_remove(0).0, iter, true);
        }
        let mut centroid = vec![0.0; n];
        for (v, _) in &simplex[..n] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / n as f64;
            }
        }
        let worst = simplex[n].clone();
        let reflected = along(&centroid, &worst.0, -1.0);
        let fr = f(&reflected);
        if fr < simplex[0].1 {
            let expanded = along(&centroid, &worst.0, -2.0);
            let fe = f(&expanded);
            simplex[n] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (reflected, fr);
            continue;
        }
        let contracted = if fr < worst.1 {
            along(&centroid, &reflected, 0.5)
        } else {
            along(&centroid, &worst.0, 0.5)
        };
        let fc = f(&contracted);
        if fc < worst.1.min(fr) {
            simplex[n] = (contracted, fc);
            continue;
        }
        let best = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            vertex.0 = along(&best, &vertex.0, 0.5);
            vertex.1 = f(&vertex.0);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    (simplex.swap_remove(0).0, FIT_MAX_ITERATIONS, false)
}

/// Fits the whole histogram.
pub fn fit_emg(hist: &Histogram1D, fix_sigma: Option<f64>) -> Result<EMGFit, CorrelateError> {
    let end = hist.bin_start(hist.len());
    fit_emg_window(hist, fix_sigma, hist.origin, end)
}

/// Fits the bins whose left edge lies in `[from, to)`.
///
/// Errors carry the best iterate when the search does not converge within
/// [`FIT_MAX_ITERATIONS`], when the fitted decay is not contained in the
/// window (no decaying structure), or when the reduced chi-square exceeds
/// [`FIT_MAX_REDUCED_CHI2`].
pub fn fit_emg_window(
    hist: &Histogram1D,
    fix_sigma: Option<f64>,
    from: u64,
    to: u64,
) -> Result<EMGFit, CorrelateError> {
    if let Some(s) = fix_sigma {
        if !(s >= 0.0 && s.is_finite()) {
            return Err(CorrelateError::InvalidParameter(format!("sigma {s} ps")));
        }
    }
    let idx: Vec<usize> = (0..hist.len())
        .filter(|&i| (from..to).contains(&hist.bin_start(i)))
        .collect();
    let populated = idx.iter().filter(|&&i| hist.counts[i] > 0).count();
    if populated < MIN_POPULATED_BINS {
        return Err(CorrelateError::TooFewBins(populated));
    }
    let first = idx[0];
    let counts = &hist.counts[first..first + idx.len()];
    let w = hist.bin_width as f64;
    let lo = hist.bin_start(first) as f64;
    let span = idx.len() as f64 * w;
    let problem = Problem {
        edges: (0..=idx.len()).map(|k| lo + k as f64 * w).collect(),
        counts,
        fixed_sigma: fix_sigma,
    };

    // rough decay time from the mean delay after the peak
    let peak = (0..counts.len()).max_by_key(|&i| counts[i]).unwrap_or(0);
    let (mut s0, mut s1) = (0.0, 0.0);
    for (k, &c) in counts.iter().enumerate().skip(peak) {
        s0 += c as f64;
        s1 += c as f64 * (k - peak) as f64 * w;
    }
    let tau0 = (s1 / s0.max(1.0)).clamp(w, span);
    let sigma0 = fix_sigma.unwrap_or(w.max(tau0 / 4.0));
    let seed_from = peak.saturating_sub(40);
    let t0 = (seed_from..=(peak + 2).min(counts.len()))
        .map(|k| lo + k as f64 * w)
        .map(|t| (t, problem.solve(t, tau0, sigma0).1))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(t, _)| t)
        .unwrap_or(lo);

    let mut x = vec![t0, tau0.ln()];
    let mut steps = vec![2.0 * w, 0.3];
    if fix_sigma.is_none() {
        x.push(sigma0.ln());
        steps.push(0.5);
    }
    let cost = |v: &[f64]| problem.cost(v);
    let (mut best, mut iterations, mut ok) = nelder_mead(cost, &x, &steps);
    // one restart around the optimum guards against a collapsed simplex
    if ok {
        let small: Vec<f64> = steps.iter().map(|s| s * 0.1).collect();
        let (b2, it2, ok2) = nelder_mead(cost, &best, &small);
        best = b2;
        iterations += it2;
        ok = ok2;
    }
    let fit = problem.report(&best, iterations);
    let fail = |reason| {
        Err(CorrelateError::Fit(Box::new(FitFailure {
            reason,
            best: fit,
        })))
    };
    if !ok {
        return fail("iteration budget exhausted");
    }
    if !(fit.tau < span / 4.0
        && fit.sigma < span / 4.0
        && fit.t0 > lo - span && fit.t0 < lo + span && fit.amplitude > 0.0)
    {
        return fail("no decaying structure");
    }
    if fit.reduced_chi2 > FIT_MAX_REDUCED_CHI2 {
        return fail("reduced chi-square above threshold");
    }
    Ok(fit)
}
