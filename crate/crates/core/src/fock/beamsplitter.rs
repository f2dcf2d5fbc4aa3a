use num_complex::Complex64;

use super::{FockError, ModeLabel, PureState};

/// Inputs `(a, b)` mixed into fresh outputs `(c, d)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BeamsplitterPair {
    pub input_a: ModeLabel,
    pub input_b: ModeLabel,
    pub output_c: ModeLabel,
    pub output_d: ModeLabel,
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn binomial(n: usize, k: usize) -> f64 {
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// Output amplitudes `(p, q, amplitude)` of `|n_a, n_b⟩` under
/// `a† → t c† + r d†`, `b† → r c† − t d†`.
fn expand(na: usize, nb: usize, t: f64, r: f64) -> Vec<(usize, usize, f64)> {
    let total = na + nb;
    let mut coeff = vec![0.0; total + 1];
    for k in 0..=na {
        let ca = binomial(na, k) * t.powi(k as i32) * r.powi((na - k) as i32);
        for l in 0..=nb {
            let cb = binomial(nb, l) * r.powi(l as i32) * (-t).powi((nb - l) as i32);
            coeff[k + l] += ca * cb;
        }
    }
    let norm = (factorial(na) * factorial(nb)).sqrt();
    coeff
        .into_iter()
        .enumerate()
        .map(|(p, c)| {
            let q = total - p;
            (p, q, c * (factorial(p) * factorial(q)).sqrt() / norm)
        })
        .collect()
}

/// Applies one beamsplitter per pair with the same transmittance.
///
/// Creation operators map as `a† → √T c† + √(1−T) d†` and
/// `b† → √(1−T) c† − √T d†`; the matrix is real orthogonal and its own
/// inverse, so applying the same pairs with roles `(c, d) → (a, b)` undoes it.
pub fn beamsplitter(
    state: &PureState,
    pairs: &[BeamsplitterPair],
    transmittance: f64,
) -> Result<PureState, FockError> {
    if !(0.0..=1.0).contains(&transmittance) {
        return Err(FockError::Transmittance(transmittance));
    }
    let t = transmittance.sqrt();
    let r = (1.0 - transmittance).sqrt();
    let mut current = state.clone();
    for pair in pairs {
        current = apply_pair(&current, pair, t, r)?;
    }
    Ok(current)
}

fn apply_pair(
    state: &PureState,
    pair: &BeamsplitterPair,
    t: f64,
    r: f64,
) -> Result<PureState, FockError> {
    let (a, b) = (pair.input_a, pair.input_b);
    if a.energy != b.energy || a.bin != b.bin || a.spatial == b.spatial {
        return Err(FockError::MismatchedPair(a, b));
    }
    let reg = state.register();
    let pa = reg.position(a)?;
    let pb = reg.position(b)?;
    let out_reg = reg.relabel(a, pair.output_c)?.relabel(b, pair.output_d)?;
    let (sa, sb) = (reg.stride(pa), reg.stride(pb));
    let cutoff = reg.cutoff() as usize;
    let mut out = vec![Complex64::new(0.0, 0.0); reg.dimension()];
    for (i, amp) in state.amplitudes().iter().enumerate() {
        if amp.norm_sqr() == 0.0 {
            continue;
        }
        let na = reg.occupation_at(i, pa);
        let nb = reg.occupation_at(i, pb);
        let base = i - na * sa - nb * sb;
        for (p, q, c) in expand(na, nb, t, r) {
            if c.abs() < 1e-14 {
                continue;
            }
            if p > cutoff || q > cutoff {
                let (mode, occupation) = if p > cutoff {
                    (pair.output_c, p)
                } else {
                    (pair.output_d, q)
                };
                return Err(FockError::Truncation {
                    mode,
                    occupation,
                    cutoff: reg.cutoff(),
                });
            }
            out[base + p * sa + q * sb] += amp * c;
        }
    }
    Ok(PureState::from_parts(out_reg, out, state.is_normalized()))
}
