use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{FockError, ModeLabel, ModeRegister, PureState, EIGENVALUE_FLOOR, NORM_TOLERANCE};

const HERMITIAN_TOLERANCE: f64 = 1e-12;
const POSITIVITY_TOLERANCE: f64 = 1e-9;

/// Density matrix over the occupation basis of a register.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    register: ModeRegister,
    matrix: DMatrix<Complex64>,
}

impl DensityOperator {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(register: ModeRegister, matrix: DMatrix<Complex64>) -> Result<Self, FockError> {
        let dim = register.dimension();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(FockError::Dimension {
                expected: dim,
                got: matrix.nrows(),
            });
        }
        let rho = Self { register, matrix };
        rho.check_invariants()?;
        Ok(rho)
    }

    /// Rank-one projector `|ψ⟩⟨ψ|`.
    pub fn from_pure(state: &PureState) -> Self {
        let v = nalgebra::DVector::from_column_slice(state.amplitudes());
        Self {
            register: state.register().clone(),
            matrix: &v * v.adjoint(),
        }
    }

    pub fn register(&self) -> &ModeRegister {
        &self.register
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// Real eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self
            .matrix
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    fn check_invariants(&self) -> Result<(), FockError> {
        let n = self.matrix.nrows();
        for i in 0..n {
            for j in 0..=i {
                let d = self.matrix[(i, j)] - self.matrix[(j, i)].conj();
                if d.norm() > HERMITIAN_TOLERANCE {
                    return Err(FockError::NotNormalized(self.trace()));
                }
            }
        }
        if (self.trace() - 1.0).abs() > NORM_TOLERANCE {
            return Err(FockError::NotNormalized(self.trace()));
        }
        if self
            .eigenvalues()
            .first()
            .is_some_and(|&l| l < -POSITIVITY_TOLERANCE)
        {
            return Err(FockError::NotNormalized(self.trace()));
        }
        Ok(())
    }
}

/// Anything a reduced density operator can be taken from.
pub trait Traceable {
    fn partial_trace(&self, keep: &[ModeLabel]) -> Result<DensityOperator, FockError>;
}

/// Reduced operator on `keep`. Kept modes appear in register order, not in
/// the order given.
pub fn partial_trace<T: Traceable + ?Sized>(
    state: &T,
    keep: &[ModeLabel],
) -> Result<DensityOperator, FockError> {
    state.partial_trace(keep)
}

/// Splits every basis index of `register` into (kept index, traced index).
fn split_indices(
    register: &ModeRegister,
    keep: &[ModeLabel],
) -> Result<(ModeRegister, usize, Vec<(usize, usize)>), FockError> {
    if keep.is_empty() {
        return Err(FockError::EmptyKeepSet);
    }
    for m in keep {
        register.position(*m)?;
    }
    let kept_positions: Vec<usize> = (0..register.len())
        .filter(|p| keep.contains(&register.modes()[*p]))
        .collect();
    let kept_modes = kept_positions
        .iter()
        .map(|p| register.modes()[*p])
        .collect();
    let kept = ModeRegister::new(kept_modes, register.cutoff())?;
    let levels = register.levels();
    let traced_dim = levels.pow((register.len() - kept_positions.len()) as u32);
    let map = (0..register.dimension())
        .map(|i| {
            let (mut k, mut t) = (0, 0);
            for p in 0..register.len() {
                let n = register.occupation_at(i, p);
                if kept_positions.contains(&p) {
                    k = k * levels + n;
                } else {
                    t = t * levels + n;
                }
            }
            (k, t)
        })
        .collect();
    Ok((kept, traced_dim, map))
}

impl Traceable for PureState {
    fn partial_trace(&self, keep: &[ModeLabel]) -> Result<DensityOperator, FockError> {
        let (kept, traced_dim, map) = split_indices(self.register(), keep)?;
        let mut m = DMatrix::<Complex64>::zeros(kept.dimension(), traced_dim);
        for (i, (k, t)) in map.into_iter().enumerate() {
            m[(k, t)] = self.amplitudes()[i];
        }
        Ok(DensityOperator {
            register: kept,
            matrix: &m * m.adjoint(),
        })
    }
}

impl Traceable for DensityOperator {
    fn partial_trace(&self, keep: &[ModeLabel]) -> Result<DensityOperator, FockError> {
        let (kept, traced_dim, map) = split_indices(&self.register, keep)?;
        let mut groups: Vec<Vec<(usize, usize)>> = vec![Vec::new(); traced_dim];
        for (i, (k, t)) in map.into_iter().enumerate() {
            groups[t].push((i, k));
        }
        let mut out = DMatrix::<Complex64>::zeros(kept.dimension(), kept.dimension());
        for group in &groups {
            for &(i, ki) in group {
                for &(j, kj) in group {
                    out[(ki, kj)] += self.matrix[(i, j)];
                }
            }
        }
        Ok(DensityOperator {
            register: kept,
            matrix: out,
        })
    }
}

/// Von Neumann entropy in bits.
pub fn entropy(rho: &DensityOperator) -> f64 {
    let s: f64 = rho
        .eigenvalues()
        .into_iter()
        .filter(|&l| l > EIGENVALUE_FLOOR)
        .map(|l| -l * l.log2())
        .sum();
    s.max(0.0)
}

/// `S(ρ₁) + S(ρ₂) − S(ρ₁₂)` in bits for a bipartition of a pure state.
///
/// The joint state is pure, so `S(ρ₁₂) = 0`.
pub fn mutual_information(
    state: &PureState,
    part1: &[ModeLabel],
    part2: &[ModeLabel],
) -> Result<f64, FockError> {
    if !state.is_normalized() {
        return Err(FockError::NotNormalized(state.norm_sqr()));
    }
    let reg = state.register();
    let disjoint = part1.iter().all(|m| !part2.contains(m));
    let covers = reg
        .modes()
        .iter()
        .all(|m| part1.contains(m) || part2.contains(m));
    let inside = part1.iter().chain(part2).all(|m| reg.contains(*m));
    if !disjoint || !covers || !inside || part1.is_empty() || part2.is_empty() {
        return Err(FockError::NotAPartition);
    }
    let s1 = entropy(&state.partial_trace(part1)?);
    let s2 = entropy(&state.partial_trace(part2)?);
    Ok(s1 + s2)
}
