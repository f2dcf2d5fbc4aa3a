//! Truncated Fock-space algebra over labeled bosonic modes.
//!
//! States live on a dense basis of occupation vectors, one integer per mode,
//! each bounded by the register cutoff. The sizes used here stay small (the
//! eight-mode beamsplitter output at cutoff 2 has 3^8 = 6561 amplitudes), so
//! there is no sparse machinery.

mod beamsplitter;
mod density;
mod state;

use std::fmt;

use thiserror::Error;

pub use beamsplitter::{beamsplitter, BeamsplitterPair};
pub use density::{entropy, mutual_information, partial_trace, DensityOperator, Traceable};
pub use state::{
    apply_ladder, g2_between, g2_composite, number_expectation, number_expectation_sum,
    tensor_product, Ladder, PureState,
};

/// Default per-mode cutoff: exact for every state built by this crate,
/// including two photons bunching at a beamsplitter output.
pub const DEFAULT_CUTOFF: u8 = 2;

/// Tolerance on `Σ|amp|² = 1` for states flagged as normalized.
pub const NORM_TOLERANCE: f64 = 1e-9;

/// Means below this are treated as zero when normalizing correlations.
pub const UNDEFINED_THRESHOLD: f64 = 1e-12;

/// Eigenvalues below this are dropped from entropy sums.
pub const EIGENVALUE_FLOOR: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FockError {
    #[error("mode {0} appears in both registers")]
    OverlappingMode(ModeLabel),
    #[error("mode {0} is not part of the register")]
    UnknownMode(ModeLabel),
    #[error("mode {0} listed twice")]
    DuplicateMode(ModeLabel),
    #[error("register must contain at least one mode")]
    EmptyRegister,
    #[error("cutoff must be at least 1")]
    ZeroCutoff,
    #[error("occupation {occupation} of mode {mode} exceeds cutoff {cutoff}")]
    Truncation {
        mode: ModeLabel,
        occupation: usize,
        cutoff: u8,
    },
    #[error("undefined correlation: a mean photon number in the denominator vanishes")]
    UndefinedCorrelation,
    #[error("state is not normalized (norm² = {0})")]
    NotNormalized(f64),
    #[error("keep-set must be a nonempty subset of the register")]
    EmptyKeepSet,
    #[error("parts do not form a bipartition of the register")]
    NotAPartition,
    #[error("beamsplitter pair {0} / {1} differs in energy or time bin")]
    MismatchedPair(ModeLabel, ModeLabel),
    #[error("transmittance {0} outside [0, 1]")]
    Transmittance(f64),
    #[error("amplitude vector length {got} does not match basis dimension {expected}")]
    Dimension { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Energy {
    B,
    X,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TimeBin {
    Early,
    Late,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Spatial {
    None,
    A,
    B,
    C,
    D,
}

/// One bosonic mode: energy × time bin × spatial port.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModeLabel {
    pub energy: Energy,
    pub bin: TimeBin,
    pub spatial: Spatial,
}

impl ModeLabel {
    pub const fn new(energy: Energy, bin: TimeBin, spatial: Spatial) -> Self {
        Self {
            energy,
            bin,
            spatial,
        }
    }

    /// Mode without a spatial label.
    pub const fn local(energy: Energy, bin: TimeBin) -> Self {
        Self::new(energy, bin, Spatial::None)
    }

    pub const fn with_spatial(self, spatial: Spatial) -> Self {
        Self { spatial, ..self }
    }
}

impl fmt::Display for ModeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let e = match self.energy {
            Energy::B => "B",
            Energy::X => "X",
        };
        let b = match self.bin {
            TimeBin::Early => "e",
            TimeBin::Late => "l",
        };
        write!(f, "{e}_{b}")?;
        match self.spatial {
            Spatial::None => Ok(()),
            Spatial::A => write!(f, "^a"),
            Spatial::B => write!(f, "^b"),
            Spatial::C => write!(f, "^c"),
            Spatial::D => write!(f, "^d"),
        }
    }
}

/// Ordered list of distinct modes sharing one occupation cutoff.
///
/// Basis index is mixed-radix with the first mode most significant, so basis
/// states sort lexicographically by occupation vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModeRegister {
    modes: Vec<ModeLabel>,
    cutoff: u8,
}

impl ModeRegister {
    pub fn new(modes: Vec<ModeLabel>, cutoff: u8) -> Result<Self, FockError> {
        if modes.is_empty() {
            return Err(FockError::EmptyRegister);
        }
        if cutoff == 0 {
            return Err(FockError::ZeroCutoff);
        }
        for (i, m) in modes.iter().enumerate() {
            if modes[..i].contains(m) {
                return Err(FockError::DuplicateMode(*m));
            }
        }
        Ok(Self { modes, cutoff })
    }

    pub fn with_default_cutoff(modes: Vec<ModeLabel>) -> Result<Self, FockError> {
        Self::new(modes, DEFAULT_CUTOFF)
    }

    pub fn modes(&self) -> &[ModeLabel] {
        &self.modes
    }

    pub fn cutoff(&self) -> u8 {
        self.cutoff
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// Levels per mode, `cutoff + 1`.
    pub fn levels(&self) -> usize {
        self.cutoff as usize + 1
    }

    pub fn dimension(&self) -> usize {
        self.levels().pow(self.modes.len() as u32)
    }

    pub fn position(&self, mode: ModeLabel) -> Result<usize, FockError> {
        self.modes
            .iter()
            .position(|m| *m == mode)
            .ok_or(FockError::UnknownMode(mode))
    }

    pub fn contains(&self, mode: ModeLabel) -> bool {
        self.modes.contains(&mode)
    }

    /// Place value of the mode at `position` in the basis index.
    pub(crate) fn stride(&self, position: usize) -> usize {
        self.levels().pow((self.modes.len() - 1 - position) as u32)
    }

    /// Occupation of the mode at `position` within basis index `index`.
    pub(crate) fn occupation_at(&self, index: usize, position: usize) -> usize {
        (index / self.stride(position)) % self.levels()
    }

    pub fn occupations(&self, index: usize) -> Vec<usize> {
        (0..self.modes.len())
            .map(|p| self.occupation_at(index, p))
            .collect()
    }

    pub fn index_of(&self, occupations: &[usize]) -> Result<usize, FockError> {
        if occupations.len() != self.modes.len() {
            return Err(FockError::Dimension {
                expected: self.modes.len(),
                got: occupations.len(),
            });
        }
        let levels = self.levels();
        let mut index = 0;
        for (mode, &n) in self.modes.iter().zip(occupations) {
            if n > self.cutoff as usize {
                return Err(FockError::Truncation {
                    mode: *mode,
                    occupation: n,
                    cutoff: self.cutoff,
                });
            }
            index = index * levels + n;
        }
        Ok(index)
    }

    pub(crate) fn relabel(&self, from: ModeLabel, to: ModeLabel) -> Result<Self, FockError> {
        let pos = self.position(from)?;
        let mut modes = self.modes.clone();
        modes[pos] = to;
        Self::new(modes, self.cutoff)
    }
}
