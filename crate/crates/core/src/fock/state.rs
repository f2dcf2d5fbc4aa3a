use std::fmt;

use num_complex::Complex64;

use super::{FockError, ModeLabel, ModeRegister, NORM_TOLERANCE, UNDEFINED_THRESHOLD};

/// Dense state vector over a [`ModeRegister`].
///
/// `normalized` records whether the vector is a physical state; ladder
/// operators produce unnormalized intermediates and clear the flag.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    register: ModeRegister,
    amplitudes: Vec<Complex64>,
    normalized: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ladder {
    Lower,
    Raise,
}

impl PureState {
    /// Builds a normalized state; fails if `Σ|amp|²` is not 1 within tolerance.
    pub fn new(register: ModeRegister, amplitudes: Vec<Complex64>) -> Result<Self, FockError> {
        let state = Self::unnormalized(register, amplitudes)?;
        let n = state.norm_sqr();
        if (n - 1.0).abs() > NORM_TOLERANCE {
            return Err(FockError::NotNormalized(n));
        }
        Ok(Self {
            normalized: true,
            ..state
        })
    }

    pub fn unnormalized(
        register: ModeRegister,
        amplitudes: Vec<Complex64>,
    ) -> Result<Self, FockError> {
        if amplitudes.len() != register.dimension() {
            return Err(FockError::Dimension {
                expected: register.dimension(),
                got: amplitudes.len(),
            });
        }
        Ok(Self {
            register,
            amplitudes,
            normalized: false,
        })
    }

    /// Superposition of occupation vectors; normalized on success.
    pub fn from_terms(
        register: ModeRegister,
        terms: &[(Vec<usize>, Complex64)],
    ) -> Result<Self, FockError> {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); register.dimension()];
        for (occ, amp) in terms {
            amplitudes[register.index_of(occ)?] += amp;
        }
        Self::new(register, amplitudes)
    }

    pub fn basis(register: ModeRegister, occupations: &[usize]) -> Result<Self, FockError> {
        Self::from_terms(register, &[(occupations.to_vec(), Complex64::new(1.0, 0.0))])
    }

    pub fn vacuum(register: ModeRegister) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); register.dimension()];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Self {
            register,
            amplitudes,
            normalized: true,
        }
    }

    pub fn register(&self) -> &ModeRegister {
        &self.register
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn amplitude(&self, occupations: &[usize]) -> Result<Complex64, FockError> {
        Ok(self.amplitudes[self.register.index_of(occupations)?])
    }

    /// Rescales to unit norm. A zero vector stays unnormalized.
    pub fn normalize(mut self) -> Result<Self, FockError> {
        let n = self.norm_sqr();
        if n <= UNDEFINED_THRESHOLD {
            return Err(FockError::NotNormalized(n));
        }
        let s = 1.0 / n.sqrt();
        self.amplitudes.iter_mut().for_each(|a| *a *= s);
        self.normalized = true;
        Ok(self)
    }

    /// Re-embeds the state in a register with a different cutoff.
    pub fn with_cutoff(&self, cutoff: u8) -> Result<Self, FockError> {
        let register = ModeRegister::new(self.register.modes().to_vec(), cutoff)?;
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); register.dimension()];
        for (i, a) in self.amplitudes.iter().enumerate() {
            if a.norm_sqr() == 0.0 {
                continue;
            }
            amplitudes[register.index_of(&self.register.occupations(i))?] = *a;
        }
        Ok(Self {
            register,
            amplitudes,
            normalized: self.normalized,
        })
    }

    /// Renames every mode through `f`; the basis ordering is unchanged.
    pub fn relabel(&self, f: impl Fn(ModeLabel) -> ModeLabel) -> Result<Self, FockError> {
        let modes = self.register.modes().iter().map(|m| f(*m)).collect();
        Ok(Self {
            register: ModeRegister::new(modes, self.register.cutoff())?,
            amplitudes: self.amplitudes.clone(),
            normalized: self.normalized,
        })
    }

    /// Multiplies each basis amplitude by `phase(occupations)`.
    pub fn map_amplitudes(&self, f: impl Fn(&[usize], Complex64) -> Complex64) -> Self {
        let amplitudes = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| f(&self.register.occupations(i), *a))
            .collect();
        Self {
            register: self.register.clone(),
            amplitudes,
            normalized: false,
        }
    }

    /// Total photon number of basis state `index`.
    pub fn total_occupation(&self, index: usize) -> usize {
        self.register.occupations(index).iter().sum()
    }

    pub(crate) fn from_parts(
        register: ModeRegister,
        amplitudes: Vec<Complex64>,
        normalized: bool,
    ) -> Self {
        Self {
            register,
            amplitudes,
            normalized,
        }
    }

    fn require_normalized(&self) -> Result<(), FockError> {
        if self.normalized {
            Ok(())
        } else {
            Err(FockError::NotNormalized(self.norm_sqr()))
        }
    }
}

/// Sorted `occupation-vector : amplitude` lines, zero amplitudes omitted.
impl fmt::Display for PureState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let modes: Vec<String> = self.register.modes().iter().map(|m| m.to_string()).collect();
        writeln!(f, "# modes: {}", modes.join(" "))?;
        for (i, a) in self.amplitudes.iter().enumerate() {
            if a.norm_sqr() < 1e-30 {
                continue;
            }
            let occ: Vec<String> = self
                .register
                .occupations(i)
                .iter()
                .map(|n| n.to_string())
                .collect();
            writeln!(f, "({}) : {:+.12e} {:+.12e}i", occ.join(","), a.re, a.im)?;
        }
        Ok(())
    }
}

pub fn tensor_product(s1: &PureState, s2: &PureState) -> Result<PureState, FockError> {
    if let Some(m) = s1
        .register
        .modes()
        .iter()
        .find(|m| s2.register.contains(**m))
    {
        return Err(FockError::OverlappingMode(*m));
    }
    let cutoff = s1.register.cutoff().max(s2.register.cutoff());
    let left = s1.with_cutoff(cutoff)?;
    let right = s2.with_cutoff(cutoff)?;
    let mut modes = left.register.modes().to_vec();
    modes.extend_from_slice(right.register.modes());
    let register = ModeRegister::new(modes, cutoff)?;
    let mut amplitudes = Vec::with_capacity(register.dimension());
    for a in &left.amplitudes {
        amplitudes.extend(right.amplitudes.iter().map(|b| a * b));
    }
    Ok(PureState {
        register,
        amplitudes,
        normalized: s1.normalized && s2.normalized,
    })
}

/// Applies `a` or `a†` to one mode. The result is always flagged unnormalized.
pub fn apply_ladder(
    state: &PureState,
    mode: ModeLabel,
    direction: Ladder,
) -> Result<PureState, FockError> {
    let reg = &state.register;
    let pos = reg.position(mode)?;
    let stride = reg.stride(pos);
    let cutoff = reg.cutoff() as usize;
    let mut out = vec![Complex64::new(0.0, 0.0); reg.dimension()];
    for (i, a) in state.amplitudes.iter().enumerate() {
        if a.norm_sqr() == 0.0 {
            continue;
        }
        let n = reg.occupation_at(i, pos);
        match direction {
            Ladder::Lower => {
                if n > 0 {
                    out[i - stride] += a * (n as f64).sqrt();
                }
            }
            Ladder::Raise => {
                if n == cutoff {
                    return Err(FockError::Truncation {
                        mode,
                        occupation: n + 1,
                        cutoff: reg.cutoff(),
                    });
                }
                out[i + stride] += a * ((n + 1) as f64).sqrt();
            }
        }
    }
    Ok(PureState {
        register: reg.clone(),
        amplitudes: out,
        normalized: false,
    })
}

/// `⟨a†a⟩ = Σ n |amp|²` for one mode.
pub fn number_expectation(state: &PureState, mode: ModeLabel) -> Result<f64, FockError> {
    state.require_normalized()?;
    let pos = state.register.position(mode)?;
    Ok(state
        .amplitudes
        .iter()
        .enumerate()
        .map(|(i, a)| state.register.occupation_at(i, pos) as f64 * a.norm_sqr())
        .sum())
}

/// Expectation of the composite number operator `Σ_{m ∈ modes} a_m† a_m`.
pub fn number_expectation_sum(state: &PureState, modes: &[ModeLabel]) -> Result<f64, FockError> {
    modes.iter().map(|m| number_expectation(state, *m)).sum()
}

/// `‖a_j a_i ψ‖² = ⟨a_i† a_j† a_j a_i⟩`, computed through the ladder operators.
fn pair_coincidence(state: &PureState, i: ModeLabel, j: ModeLabel) -> Result<f64, FockError> {
    let once = apply_ladder(state, i, Ladder::Lower)?;
    let twice = apply_ladder(&once, j, Ladder::Lower)?;
    Ok(twice.norm_sqr())
}

/// Normalized second-order correlation between two modes.
///
/// For `mode1 == mode2` this is `⟨a†a†aa⟩/⟨a†a⟩²`. A vanishing mean photon
/// number yields [`FockError::UndefinedCorrelation`], never zero.
pub fn g2_between(state: &PureState, mode1: ModeLabel, mode2: ModeLabel) -> Result<f64, FockError> {
    state.require_normalized()?;
    let p1 = state.register.position(mode1)?;
    let p2 = state.register.position(mode2)?;
    let (first, second) = if p1 <= p2 {
        (mode1, mode2)
    } else {
        (mode2, mode1)
    };
    let mean1 = number_expectation(state, first)?;
    let mean2 = number_expectation(state, second)?;
    if mean1 <= UNDEFINED_THRESHOLD || mean2 <= UNDEFINED_THRESHOLD {
        return Err(FockError::UndefinedCorrelation);
    }
    Ok(pair_coincidence(state, first, second)? / (mean1 * mean2))
}

/// Cross-correlation of two composite number operators,
/// `Σ_{i∈set1, j∈set2} ⟨a_i† a_j† a_j a_i⟩ / (⟨N_1⟩⟨N_2⟩)`.
pub fn g2_composite(
    state: &PureState,
    set1: &[ModeLabel],
    set2: &[ModeLabel],
) -> Result<f64, FockError> {
    state.require_normalized()?;
    let mean1 = number_expectation_sum(state, set1)?;
    let mean2 = number_expectation_sum(state, set2)?;
    if mean1 <= UNDEFINED_THRESHOLD || mean2 <= UNDEFINED_THRESHOLD {
        return Err(FockError::UndefinedCorrelation);
    }
    let mut numerator = 0.0;
    for &i in set1 {
        for &j in set2 {
            numerator += pair_coincidence(state, i, j)?;
        }
    }
    Ok(numerator / (mean1 * mean2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{Energy, Spatial, TimeBin};

    fn mode(e: Energy, b: TimeBin) -> ModeLabel {
        ModeLabel::local(e, b)
    }

    fn single(n: usize) -> PureState {
        let reg = ModeRegister::new(vec![mode(Energy::B, TimeBin::Early)], 2).unwrap();
        PureState::basis(reg, &[n]).unwrap()
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn lowering_rules() {
        let m = mode(Energy::B, TimeBin::Early);
        let out = apply_ladder(&single(1), m, Ladder::Lower).unwrap();
        assert_eq!(out.amplitude(&[0]).unwrap(), c(1.0));
        assert!(!out.is_normalized());

        let out = apply_ladder(&single(0), m, Ladder::Lower).unwrap();
        assert_eq!(out.norm_sqr(), 0.0);

        let out = apply_ladder(&single(2), m, Ladder::Lower).unwrap();
        assert!((out.amplitude(&[1]).unwrap() - c(2f64.sqrt())).norm() < 1e-15);
    }

    #[test]
    fn raise_beyond_cutoff_is_truncation() {
        let m = mode(Energy::B, TimeBin::Early);
        let err = apply_ladder(&single(2), m, Ladder::Raise).unwrap_err();
        assert!(matches!(err, FockError::Truncation { occupation: 3, .. }));
    }

    #[test]
    fn unknown_mode_rejected() {
        let other = mode(Energy::X, TimeBin::Late);
        assert_eq!(
            number_expectation(&single(1), other),
            Err(FockError::UnknownMode(other))
        );
        assert!(apply_ladder(&single(1), other, Ladder::Lower).is_err());
    }

    #[test]
    fn raise_after_lower_scales_by_n() {
        let m = mode(Energy::B, TimeBin::Early);
        for n in 0..=2 {
            let s = single(n);
            let lowered = apply_ladder(&s, m, Ladder::Lower).unwrap();
            let back = apply_ladder(&lowered, m, Ladder::Raise).unwrap();
            let amp = back.amplitude(&[n]).unwrap();
            assert!((amp - c(n as f64)).norm() < 1e-12, "n={n}: {amp}");
        }
    }

    #[test]
    fn number_expectation_basics() {
        let m = mode(Energy::B, TimeBin::Early);
        assert_eq!(number_expectation(&single(1), m).unwrap(), 1.0);
        assert_eq!(number_expectation(&single(0), m).unwrap(), 0.0);
    }

    #[test]
    fn vacuum_tensor_vacuum() {
        let r1 = ModeRegister::new(vec![mode(Energy::B, TimeBin::Early)], 1).unwrap();
        let r2 = ModeRegister::new(vec![mode(Energy::X, TimeBin::Early)], 1).unwrap();
        let t = tensor_product(&PureState::vacuum(r1), &PureState::vacuum(r2)).unwrap();
        assert_eq!(t.amplitude(&[0, 0]).unwrap(), c(1.0));
        assert!(t.is_normalized());
        assert!((t.norm_sqr() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn tensor_rejects_overlap() {
        let err = tensor_product(&single(1), &single(0)).unwrap_err();
        assert_eq!(
            err,
            FockError::OverlappingMode(mode(Energy::B, TimeBin::Early))
        );
    }

    #[test]
    fn tensor_mixes_cutoffs() {
        let r1 = ModeRegister::new(vec![mode(Energy::B, TimeBin::Early)], 1).unwrap();
        let s1 = PureState::basis(r1, &[1]).unwrap();
        let s2 = single(2).relabel(|m| m.with_spatial(Spatial::B)).unwrap();
        let t = tensor_product(&s1, &s2).unwrap();
        assert_eq!(t.register().cutoff(), 2);
        assert_eq!(t.amplitude(&[1, 2]).unwrap(), c(1.0));
    }

    #[test]
    fn g2_product_of_single_photons_is_one() {
        let a = mode(Energy::B, TimeBin::Early);
        let b = mode(Energy::X, TimeBin::Late);
        let reg = ModeRegister::new(vec![a, b], 2).unwrap();
        let s = PureState::basis(reg, &[1, 1]).unwrap();
        assert_eq!(g2_between(&s, a, b).unwrap(), 1.0);
        // single photon has no same-mode pairs
        assert_eq!(g2_between(&s, a, a).unwrap(), 0.0);
    }

    #[test]
    fn g2_undefined_for_empty_mode() {
        let a = mode(Energy::B, TimeBin::Early);
        let b = mode(Energy::X, TimeBin::Late);
        let reg = ModeRegister::new(vec![a, b], 2).unwrap();
        let s = PureState::basis(reg, &[1, 0]).unwrap();
        assert_eq!(g2_between(&s, a, b), Err(FockError::UndefinedCorrelation));
    }

    #[test]
    fn g2_two_photon_fock_state() {
        // ⟨a†a†aa⟩ = 2 for |2⟩, mean 2 → 1/2
        let m = mode(Energy::B, TimeBin::Early);
        assert!((g2_between(&single(2), m, m).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn display_lists_nonzero_terms() {
        let text = single(1).to_string();
        assert!(text.contains("(1) : +1.000000000000e0"));
        assert_eq!(text.lines().count(), 2);
    }

    #[test]
    fn from_terms_rejects_unnormalized() {
        let reg = ModeRegister::new(vec![mode(Energy::B, TimeBin::Early)], 1).unwrap();
        let err = PureState::from_terms(reg, &[(vec![0], c(1.0)), (vec![1], c(1.0))]);
        assert!(matches!(err, Err(FockError::NotNormalized(_))));
    }
}
