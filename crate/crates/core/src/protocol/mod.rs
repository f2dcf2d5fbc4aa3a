//! Closed-form model of the two-pulse protocol.
//!
//! A first π-pulse prepares the biexciton; after a delay Δt a second pulse
//! de-excites it (still in B), does nothing (in X) or re-excites it (back in
//! the ground state). The three outcomes weight the photon-number state
//! `α|0000⟩ + β|1001⟩ + γ|1111⟩` over modes (B_e, X_e, B_l, X_l).

mod hom;
mod state;

use thiserror::Error;

use crate::fock::FockError;

pub use hom::{
    hom_curve, hom_g2_analytic, hom_g2_oracle, hom_input_state, hom_output_state, HomPrediction,
};
pub use state::{
    analytic_g2, bin_modes, build_psi, energy_modes, mutual_information_partitions,
    psi_modes, single_pulse_state, PartitionEntry,
};

/// Relative rate difference below which β² uses its equal-rate limit.
pub const DEGENERATE_RATE_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("undefined correlation: a mean photon number in the denominator vanishes")]
    UndefinedCorrelation,
    #[error(transparent)]
    Fock(#[from] FockError),
}

/// Lifetimes and pulse delay in picoseconds, preparation fidelity in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CascadeParams {
    tau_b: f64,
    tau_x: f64,
    delta_t: f64,
    prep_fidelity: f64,
}

fn invalid(name: &'static str, value: f64, reason: &'static str) -> ProtocolError {
    ProtocolError::InvalidParameter {
        name,
        value,
        reason,
    }
}

impl CascadeParams {
    pub fn new(
        tau_b: f64,
        tau_x: f64,
        delta_t: f64,
        prep_fidelity: f64,
    ) -> Result<Self, ProtocolError> {
        if !(tau_b > 0.0 && tau_b.is_finite()) {
            return Err(invalid("tau_b", tau_b, "lifetime must be positive and finite"));
        }
        if !(tau_x > 0.0 && tau_x.is_finite()) {
            return Err(invalid("tau_x", tau_x, "lifetime must be positive and finite"));
        }
        if !(delta_t >= 0.0) {
            return Err(invalid("delta_t", delta_t, "delay must be non-negative"));
        }
        if !(0.0..=1.0).contains(&prep_fidelity) {
            return Err(invalid("prep_fidelity", prep_fidelity, "must lie in [0, 1]"));
        }
        Ok(Self {
            tau_b,
            tau_x,
            delta_t,
            prep_fidelity,
        })
    }

    /// Perfect preparation, `F_prep = 1`.
    pub fn ideal(tau_b: f64, tau_x: f64, delta_t: f64) -> Result<Self, ProtocolError> {
        Self::new(tau_b, tau_x, delta_t, 1.0)
    }

    pub fn tau_b(&self) -> f64 {
        self.tau_b
    }

    pub fn tau_x(&self) -> f64 {
        self.tau_x
    }

    pub fn delta_t(&self) -> f64 {
        self.delta_t
    }

    pub fn prep_fidelity(&self) -> f64 {
        self.prep_fidelity
    }

    /// Γ_B in 1/ps.
    pub fn rate_b(&self) -> f64 {
        1.0 / self.tau_b
    }

    /// Γ_X in 1/ps.
    pub fn rate_x(&self) -> f64 {
        1.0 / self.tau_x
    }

    pub fn with_delta_t(&self, delta_t: f64) -> Result<Self, ProtocolError> {
        Self::new(self.tau_b, self.tau_x, delta_t, self.prep_fidelity)
    }

    pub fn with_prep_fidelity(&self, prep_fidelity: f64) -> Result<Self, ProtocolError> {
        Self::new(self.tau_b, self.tau_x, self.delta_t, prep_fidelity)
    }

    pub fn coefficients(&self) -> Coefficients {
        coefficients_from_rates(self.rate_b(), self.rate_x(), self.delta_t)
    }
}

/// Weights α², β², γ² of the three branches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    pub alpha_sq: f64,
    pub beta_sq: f64,
    pub gamma_sq: f64,
}

impl Coefficients {
    /// Mean photon number per energy mode (and per time-bin mode).
    pub fn mean_photon_number(&self) -> f64 {
        self.beta_sq + 2.0 * self.gamma_sq
    }

    /// Phase-dependent cross-output correlation behind a balanced beamsplitter
    /// for two copies of the state, spectral and temporal modes unresolved.
    pub fn hom_g2(&self, phi: f64) -> Result<f64, ProtocolError> {
        let (a, b, g) = (self.alpha_sq, self.beta_sq, self.gamma_sq);
        let mu = b + 2.0 * g;
        if mu <= crate::fock::UNDEFINED_THRESHOLD {
            return Err(ProtocolError::UndefinedCorrelation);
        }
        let denom = 4.0 * mu * mu;
        let constant = 2.0 * b * b + 13.0 * b * g + 12.0 * g * g + a * (b + 6.0 * g);
        Ok(constant / denom - b * (a + g) * (2.0 * phi).cos() / denom)
    }

    /// Shannon entropy of (α², β², γ²) in bits.
    pub fn shannon_entropy(&self) -> f64 {
        [self.alpha_sq, self.beta_sq, self.gamma_sq]
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|p| -p * p.log2())
            .sum()
    }
}

/// Branch weights for lifetimes `tau_b`, `tau_x` and delay `delta_t` (ps).
pub fn coefficients(tau_b: f64, tau_x: f64, delta_t: f64) -> Result<Coefficients, ProtocolError> {
    Ok(CascadeParams::ideal(tau_b, tau_x, delta_t)?.coefficients())
}

fn coefficients_from_rates(rate_b: f64, rate_x: f64, delta_t: f64) -> Coefficients {
    if delta_t.is_infinite() {
        return Coefficients {
            alpha_sq: 0.0,
            beta_sq: 0.0,
            gamma_sq: 1.0,
        };
    }
    let alpha_sq = (-rate_b * delta_t).exp();
    let beta_sq = if ((rate_x - rate_b) / rate_b).abs() < DEGENERATE_RATE_THRESHOLD {
        rate_b * delta_t * alpha_sq
    } else {
        rate_b * (alpha_sq - (-rate_x * delta_t).exp()) / (rate_x - rate_b)
    };
    let gamma_sq = (1.0 - alpha_sq - beta_sq).max(0.0);
    Coefficients {
        alpha_sq,
        beta_sq,
        gamma_sq,
    }
}

/// Upper bound on two-photon interference visibility set by the cascade,
/// `1 / (1 + τ_B/τ_X)`.
pub fn max_indistinguishability(tau_b: f64, tau_x: f64) -> Result<f64, ProtocolError> {
    let p = CascadeParams::ideal(tau_b, tau_x, 0.0)?;
    Ok(1.0 / (1.0 + p.tau_b / p.tau_x))
}

/// `β² + 2γ²`.
pub fn mean_photon_number(params: &CascadeParams) -> f64 {
    params.coefficients().mean_photon_number()
}
