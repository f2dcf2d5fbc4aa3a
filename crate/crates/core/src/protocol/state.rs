use num_complex::Complex64;

use super::{CascadeParams, ProtocolError};
use crate::fock::{
    self, Energy, ModeLabel, ModeRegister, PureState, TimeBin, UNDEFINED_THRESHOLD,
};

/// Register order of the protocol state: B_e, X_e, B_l, X_l.
pub fn psi_modes() -> [ModeLabel; 4] {
    [
        ModeLabel::local(Energy::B, TimeBin::Early),
        ModeLabel::local(Energy::X, TimeBin::Early),
        ModeLabel::local(Energy::B, TimeBin::Late),
        ModeLabel::local(Energy::X, TimeBin::Late),
    ]
}

/// Both time bins of one energy.
pub fn energy_modes(energy: Energy) -> [ModeLabel; 2] {
    [
        ModeLabel::local(energy, TimeBin::Early),
        ModeLabel::local(energy, TimeBin::Late),
    ]
}

/// Both energies in one time bin.
pub fn bin_modes(bin: TimeBin) -> [ModeLabel; 2] {
    [
        ModeLabel::local(Energy::B, bin),
        ModeLabel::local(Energy::X, bin),
    ]
}

/// `α|0000⟩ + β|1001⟩ + γ|1111⟩` with real non-negative amplitudes.
pub fn build_psi(params: &CascadeParams) -> Result<PureState, ProtocolError> {
    let c = params.coefficients();
    let reg = ModeRegister::with_default_cutoff(psi_modes().to_vec())?;
    let amp = |p: f64| Complex64::new(p.sqrt(), 0.0);
    Ok(PureState::from_terms(
        reg,
        &[
            (vec![0, 0, 0, 0], amp(c.alpha_sq)),
            (vec![1, 0, 0, 1], amp(c.beta_sq)),
            (vec![1, 1, 1, 1], amp(c.gamma_sq)),
        ],
    )?)
}

/// `cos(θ/2)|0_B 0_X⟩ + sin(θ/2)|1_B 1_X⟩` from a single pulse of area θ.
pub fn single_pulse_state(theta: f64) -> Result<PureState, ProtocolError> {
    let reg = ModeRegister::with_default_cutoff(vec![
        ModeLabel::local(Energy::B, TimeBin::Early),
        ModeLabel::local(Energy::X, TimeBin::Early),
    ])?;
    let half = theta / 2.0;
    Ok(PureState::from_terms(
        reg,
        &[
            (vec![0, 0], Complex64::new(half.cos(), 0.0)),
            (vec![1, 1], Complex64::new(half.sin(), 0.0)),
        ],
    )?)
}

/// Closed-form mode-resolved g² of the protocol state.
///
/// Same mode → 0; {B_l, X_e} → 1/γ² (re-excitation only); any other pair →
/// 1/(β²+γ²). Undefined exactly when one of the two modes is empty.
pub fn analytic_g2(
    params: &CascadeParams,
    mode1: (Energy, TimeBin),
    mode2: (Energy, TimeBin),
) -> Result<f64, ProtocolError> {
    let c = params.coefficients();
    let mean = |m: (Energy, TimeBin)| match m {
        (Energy::B, TimeBin::Early) | (Energy::X, TimeBin::Late) => c.beta_sq + c.gamma_sq,
        (Energy::X, TimeBin::Early) | (Energy::B, TimeBin::Late) => c.gamma_sq,
    };
    if mean(mode1) <= UNDEFINED_THRESHOLD || mean(mode2) <= UNDEFINED_THRESHOLD {
        return Err(ProtocolError::UndefinedCorrelation);
    }
    if mode1 == mode2 {
        return Ok(0.0);
    }
    let reexcitation_only = [mode1, mode2].contains(&(Energy::B, TimeBin::Late))
        && [mode1, mode2].contains(&(Energy::X, TimeBin::Early));
    if reexcitation_only {
        Ok(1.0 / c.gamma_sq)
    } else {
        Ok(1.0 / (c.beta_sq + c.gamma_sq))
    }
}

/// One row of the bipartition table.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionEntry {
    pub part1: Vec<ModeLabel>,
    pub part2: Vec<ModeLabel>,
    pub bits: f64,
}

impl PartitionEntry {
    /// `B_e,B_l|X_e,X_l` style label.
    pub fn label(&self) -> String {
        let join = |ms: &[ModeLabel]| {
            ms.iter()
                .map(|m| m.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        format!("{}|{}", join(&self.part1), join(&self.part2))
    }
}

/// Mutual information for all seven bipartitions of the four modes.
///
/// The part containing B_e comes first; rows are ordered by the bitmask of
/// that part over the canonical mode order.
pub fn mutual_information_partitions(
    params: &CascadeParams,
) -> Result<Vec<PartitionEntry>, ProtocolError> {
    let psi = build_psi(params)?;
    let modes = psi_modes();
    (1u32..16)
        .step_by(2)
        .filter(|mask| *mask != 15)
        .map(|mask| {
            let (p1, p2): (Vec<_>, Vec<_>) =
                (0..4).partition(|i| mask & (1 << i) != 0);
            let part1: Vec<ModeLabel> = p1.into_iter().map(|i| modes[i]).collect();
            let part2: Vec<ModeLabel> = p2.into_iter().map(|i| modes[i]).collect();
            let bits = fock::mutual_information(&psi, &part1, &part2)?;
            Ok(PartitionEntry { part1, part2, bits })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{g2_between, number_expectation, number_expectation_sum};

    fn dot(dt: f64) -> CascadeParams {
        CascadeParams::ideal(142.0, 187.0, dt).unwrap()
    }

    #[test]
    fn psi_amplitudes() {
        let psi = build_psi(&dot(100.0)).unwrap();
        let a = |occ: &[usize]| psi.amplitude(occ).unwrap().re;
        assert!((a(&[0, 0, 0, 0]) - 0.703_200_883_609_912).abs() < 1e-9);
        assert!((a(&[1, 0, 0, 1]) - 0.616_019_629_552_54).abs() < 1e-9);
        assert!((a(&[1, 1, 1, 1]) - 0.355_004_694_752_322).abs() < 1e-9);
        assert!(psi.is_normalized());
    }

    #[test]
    fn psi_limits() {
        let vac = build_psi(&dot(0.0)).unwrap();
        assert_eq!(vac.amplitude(&[0, 0, 0, 0]).unwrap().re, 1.0);
        let full = build_psi(&dot(1e6)).unwrap();
        assert!((full.amplitude(&[1, 1, 1, 1]).unwrap().re - 1.0).abs() < 1e-6);
    }

    #[test]
    fn composite_means_match() {
        let p = dot(100.0);
        let psi = build_psi(&p).unwrap();
        let mu = super::super::mean_photon_number(&p);
        for modes in [
            energy_modes(Energy::B),
            energy_modes(Energy::X),
            bin_modes(TimeBin::Early),
            bin_modes(TimeBin::Late),
        ] {
            assert!((number_expectation_sum(&psi, &modes).unwrap() - mu).abs() < 1e-12);
        }
        let c = p.coefficients();
        let be = number_expectation(&psi, psi_modes()[0]).unwrap();
        assert!((be - (c.beta_sq + c.gamma_sq)).abs() < 1e-12);
    }

    #[test]
    fn closed_form_g2_matches_operator_route() {
        let modes = psi_modes();
        let keys = [
            (Energy::B, TimeBin::Early),
            (Energy::X, TimeBin::Early),
            (Energy::B, TimeBin::Late),
            (Energy::X, TimeBin::Late),
        ];
        for dt in [5.0, 100.0, 700.0] {
            let p = dot(dt);
            let psi = build_psi(&p).unwrap();
            for i in 0..4 {
                for j in i..4 {
                    let closed = analytic_g2(&p, keys[i], keys[j]).unwrap();
                    let op = g2_between(&psi, modes[i], modes[j]).unwrap();
                    assert!((closed - op).abs() < 1e-9, "{dt} {i} {j}: {closed} vs {op}");
                }
            }
        }
        let bl_xe = analytic_g2(&dot(100.0), keys[2], keys[1]).unwrap();
        assert!((bl_xe - 7.934_723_675_586_65).abs() < 1e-9);
        let be_xe = analytic_g2(&dot(100.0), keys[0], keys[1]).unwrap();
        assert!((be_xe - 1.978_206_035_697_416).abs() < 1e-9);
    }

    #[test]
    fn g2_undefined_without_delay() {
        assert_eq!(
            analytic_g2(&dot(0.0), (Energy::X, TimeBin::Early), (Energy::X, TimeBin::Early)),
            Err(ProtocolError::UndefinedCorrelation)
        );
    }

    #[test]
    fn single_pulse() {
        let b = ModeLabel::local(Energy::B, TimeBin::Early);
        let vac = single_pulse_state(0.0).unwrap();
        assert_eq!(number_expectation(&vac, b).unwrap(), 0.0);
        let pi = single_pulse_state(std::f64::consts::PI).unwrap();
        assert!((pi.amplitude(&[1, 1]).unwrap().re - 1.0).abs() < 1e-15);
        let half = single_pulse_state(std::f64::consts::FRAC_PI_2).unwrap();
        assert!((number_expectation(&half, b).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn partitions() {
        let rows = mutual_information_partitions(&dot(0.0)).unwrap();
        assert_eq!(rows.len(), 7);
        assert!(rows.iter().all(|r| r.bits.abs() < 1e-12));

        let p = dot(100.0);
        let rows = mutual_information_partitions(&p).unwrap();
        let energy_split = rows
            .iter()
            .find(|r| r.label() == "B_e,B_l|X_e,X_l")
            .unwrap();
        let expected = 2.0 * p.coefficients().shannon_entropy();
        assert!((energy_split.bits - expected).abs() < 1e-9);
        assert!((energy_split.bits - 2.818_933_382_728_76).abs() < 1e-9);
        let bound = 2.0 * 3f64.log2();
        assert!(rows.iter().all(|r| r.bits <= bound + 1e-12));
        assert_eq!(rows[0].label(), "B_e|X_e,B_l,X_l");
    }
}
