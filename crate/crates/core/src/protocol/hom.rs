use num_complex::Complex64;

use super::{build_psi, psi_modes, CascadeParams, ProtocolError};
use crate::fock::{
    beamsplitter, g2_composite, tensor_product, BeamsplitterPair, FockError, ModeLabel,
    PureState, Spatial,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomPrediction {
    pub phi: f64,
    pub g2: f64,
}

/// `|ψ⟩_a ⊗ |ψ(φ)⟩_b`, where every photon in port b picks up `e^{iφ}`.
pub fn hom_input_state(params: &CascadeParams, phi: f64) -> Result<PureState, ProtocolError> {
    let psi = build_psi(params)?;
    let port_a = psi.relabel(|m| m.with_spatial(Spatial::A))?;
    let port_b = psi
        .relabel(|m| m.with_spatial(Spatial::B))?
        .map_amplitudes(|occ, amp| {
            let k: usize = occ.iter().sum();
            amp * Complex64::from_polar(1.0, k as f64 * phi)
        });
    // phases are unimodular, the copy stays normalized
    let port_b = PureState::new(port_b.register().clone(), port_b.amplitudes().to_vec())?;
    Ok(tensor_product(&port_a, &port_b)?)
}

fn hom_pairs() -> Vec<BeamsplitterPair> {
    psi_modes()
        .iter()
        .map(|m| BeamsplitterPair {
            input_a: m.with_spatial(Spatial::A),
            input_b: m.with_spatial(Spatial::B),
            output_c: m.with_spatial(Spatial::C),
            output_d: m.with_spatial(Spatial::D),
        })
        .collect()
}

/// Balanced beamsplitter applied to each (energy, bin) pair of the input.
pub fn hom_output_state(params: &CascadeParams, phi: f64) -> Result<PureState, ProtocolError> {
    let input = hom_input_state(params, phi)?;
    Ok(beamsplitter(&input, &hom_pairs(), 0.5)?)
}

/// Closed-form cross-output correlation.
pub fn hom_g2_analytic(params: &CascadeParams, phi: f64) -> Result<f64, ProtocolError> {
    params.coefficients().hom_g2(phi)
}

/// Brute-force route: `Σ_{i∈c, j∈d} ⟨a_i† a_j† a_j a_i⟩ / (⟨N_c⟩⟨N_d⟩)` on the
/// eight-mode output state.
pub fn hom_g2_oracle(params: &CascadeParams, phi: f64) -> Result<f64, ProtocolError> {
    let out = hom_output_state(params, phi)?;
    let port = |s: Spatial| -> Vec<ModeLabel> {
        psi_modes().iter().map(|m| m.with_spatial(s)).collect()
    };
    match g2_composite(&out, &port(Spatial::C), &port(Spatial::D)) {
        Err(FockError::UndefinedCorrelation) => Err(ProtocolError::UndefinedCorrelation),
        other => Ok(other?),
    }
}

/// Closed-form HOM g² over a grid of phases.
pub fn hom_curve(params: &CascadeParams, phis: &[f64]) -> Result<Vec<HomPrediction>, ProtocolError> {
    let c = params.coefficients();
    phis.iter()
        .map(|&phi| Ok(HomPrediction { phi, g2: c.hom_g2(phi)? }))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::number_expectation_sum;
    use std::f64::consts::PI;

    fn dot(dt: f64) -> CascadeParams {
        CascadeParams::ideal(142.0, 187.0, dt).unwrap()
    }

    #[test]
    fn input_is_normalized_for_any_phase() {
        for phi in [0.0, 0.7, PI / 2.0, 3.0] {
            let s = hom_input_state(&dot(100.0), phi).unwrap();
            assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
            assert_eq!(s.register().len(), 8);
        }
    }

    #[test]
    fn zero_phase_is_plain_product() {
        let p = dot(100.0);
        let s = hom_input_state(&p, 0.0).unwrap();
        let psi = build_psi(&p).unwrap();
        let a = psi.amplitude(&[1, 0, 0, 1]).unwrap();
        let b = psi.amplitude(&[1, 1, 1, 1]).unwrap();
        let joint = s.amplitude(&[1, 0, 0, 1, 1, 1, 1, 1]).unwrap();
        assert!((joint - a * b).norm() < 1e-15);
    }

    #[test]
    fn output_conserves_photons() {
        let p = dot(100.0);
        let out = hom_output_state(&p, 0.4).unwrap();
        assert!((out.norm_sqr() - 1.0).abs() < 1e-10);
        let all: Vec<ModeLabel> = out.register().modes().to_vec();
        let total = number_expectation_sum(&out, &all).unwrap();
        assert!((total - 4.0 * super::super::mean_photon_number(&p)).abs() < 1e-10);
        let max_photons = (0..out.amplitudes().len())
            .filter(|&i| out.amplitudes()[i].norm_sqr() > 1e-20)
            .map(|i| out.total_occupation(i))
            .max()
            .unwrap();
        assert_eq!(max_photons, 8);
    }

    #[test]
    fn pair_branch_bunches_in_every_sector() {
        let out = hom_output_state(&dot(1e6), 1.1).unwrap();
        let reg = out.register();
        for sector in 0..4 {
            let c = reg.position(psi_modes()[sector].with_spatial(Spatial::C)).unwrap();
            let d = reg.position(psi_modes()[sector].with_spatial(Spatial::D)).unwrap();
            let coincident: f64 = (0..out.amplitudes().len())
                .filter(|&i| {
                    let occ = reg.occupations(i);
                    occ[c] == 1 && occ[d] == 1
                })
                .map(|i| out.amplitudes()[i].norm_sqr())
                .sum();
            assert!(coincident < 1e-20, "sector {sector}: {coincident}");
        }
    }

    #[test]
    fn vacuum_in_vacuum_out() {
        let out = hom_output_state(&dot(0.0), 0.3).unwrap();
        assert!((out.amplitudes()[0].norm() - 1.0).abs() < 1e-15);
        assert_eq!(hom_g2_oracle(&dot(0.0), 0.0), Err(ProtocolError::UndefinedCorrelation));
    }

    #[test]
    fn oracle_matches_closed_form() {
        for dt in [20.0, 100.0, 400.0] {
            for k in 0..5 {
                let phi = k as f64 * PI / 4.0;
                let a = hom_g2_analytic(&dot(dt), phi).unwrap();
                let o = hom_g2_oracle(&dot(dt), phi).unwrap();
                assert!((a - o).abs() < 1e-9, "dt {dt} phi {phi}: {a} vs {o}");
            }
        }
        assert!((hom_g2_oracle(&dot(1e6), 0.3).unwrap() - 0.75).abs() < 1e-9);
    }

    #[test]
    fn pi_periodic_and_ordered() {
        let p = dot(100.0);
        for phi in [0.0, 0.2, 1.3] {
            let a = hom_g2_analytic(&p, phi).unwrap();
            let b = hom_g2_analytic(&p, phi + PI).unwrap();
            assert!((a - b).abs() < 1e-14);
        }
        assert!(hom_g2_analytic(&p, PI / 2.0).unwrap() > hom_g2_analytic(&p, 0.0).unwrap());
        let curve = hom_curve(&p, &[0.0, PI / 2.0]).unwrap();
        assert_eq!(curve.len(), 2);
        assert_eq!(curve[1].phi, PI / 2.0);
    }
}
