use num_complex::Complex64;

use super::eigen::hermitian_eigenvalues;
use super::matrix::ComplexMatrix;
use crate::error::{Error, Result};

/// Numerical tolerances used when validating states and spectra.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    /// Allowed deviation of a pure state's squared norm from 1.
    pub norm: f64,
    /// Max entrywise deviation from Hermiticity for density matrices.
    pub hermitian: f64,
    /// Allowed deviation of a density matrix trace from 1.
    pub trace: f64,
    /// Eigenvalues in `[-psd, 0)` are treated as zero; below that is an error.
    pub psd: f64,
    /// Hermiticity tolerance accepted by the eigen-solver.
    pub eigen_input: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            norm: 1e-12,
            hermitian: 1e-12,
            trace: 1e-10,
            psd: 1e-10,
            eigen_input: 1e-10,
        }
    }
}

/// Normalized state vector.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    amplitudes: Vec<Complex64>,
}

impl PureState {
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        Self::with_tolerance(amplitudes, Tolerances::default().norm)
    }

    pub fn with_tolerance(amplitudes: Vec<Complex64>, tol: f64) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
        if amplitudes.is_empty() || (norm - 1.0).abs() > tol {
            return Err(Error::NotNormalized { norm, tol });
        }
        Ok(Self { amplitudes })
    }

    /// Rescales `amplitudes` to unit norm; fails on the zero vector.
    pub fn normalized(amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::NotNormalized {
                norm,
                tol: Tolerances::default().norm,
            });
        }
        Ok(Self {
            amplitudes: amplitudes.into_iter().map(|z| z / norm).collect(),
        })
    }

    pub fn basis(dim: usize, k: usize) -> Self {
        assert!(k < dim, "basis index {k} out of range for dimension {dim}");
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[k] = Complex64::new(1.0, 0.0);
        Self { amplitudes }
    }

    pub(crate) fn from_raw(amplitudes: Vec<Complex64>) -> Self {
        Self { amplitudes }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// Entrywise conjugate in the computational basis.
    pub fn conj(&self) -> Self {
        Self {
            amplitudes: self.amplitudes.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn projector(&self) -> ComplexMatrix {
        ComplexMatrix::outer(&self.amplitudes, &self.amplitudes)
    }

    pub fn tensor(&self, other: &Self) -> Self {
        let amplitudes = self
            .amplitudes
            .iter()
            .flat_map(|a| other.amplitudes.iter().map(move |b| a * b))
            .collect();
        Self { amplitudes }
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix {
            matrix: self.projector(),
        }
    }
}

/// `⟨a|b⟩`, conjugating the first argument.
pub fn overlap(a: &PureState, b: &PureState) -> Result<Complex64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(a.amplitudes.iter().zip(&b.amplitudes).map(|(x, y)| x.conj() * y).sum())
}

/// Hermitian, unit-trace, positive-semidefinite operator.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        Self::with_tolerances(matrix, &Tolerances::default())
    }

    pub fn with_tolerances(matrix: ComplexMatrix, tol: &Tolerances) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::NotSquare {
                rows: matrix.rows(),
                cols: matrix.cols(),
            });
        }
        let deviation = matrix.hermitian_deviation();
        if deviation > tol.hermitian {
            return Err(Error::NotHermitian { deviation });
        }
        let trace = matrix.trace().re;
        if (trace - 1.0).abs() > tol.trace {
            return Err(Error::BadTrace { trace, tol: tol.trace });
        }
        let spectrum = hermitian_eigenvalues(&matrix, tol.eigen_input)?;
        if let Some(&min) = spectrum.last() {
            if min < -tol.psd {
                return Err(Error::NegativeEigenvalue { value: min });
            }
        }
        Ok(Self { matrix })
    }

    /// Symmetrizes and rescales to unit trace before validating.
    pub fn normalized(matrix: ComplexMatrix) -> Result<Self> {
        let herm = matrix.hermitian_part();
        let trace = herm.trace().re;
        if trace <= 0.0 || !trace.is_finite() {
            return Err(Error::BadTrace {
                trace,
                tol: Tolerances::default().trace,
            });
        }
        Self::new(herm.scale_real(1.0 / trace))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64),
        }
    }

    pub(crate) fn from_matrix_unchecked(matrix: ComplexMatrix) -> Self {
        Self { matrix }
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn purity(&self) -> f64 {
        self.matrix.as_slice().iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        hermitian_eigenvalues(&self.matrix, Tolerances::default().eigen_input)
    }

    pub fn tensor(&self, other: &Self) -> Self {
        Self {
            matrix: self.matrix.kron(&other.matrix),
        }
    }

    /// Real diagonal, i.e. probabilities in the computational basis.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.matrix[(i, i)].re).collect()
    }
}

/// Which tensor factor survives a partial trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Keep {
    First,
    Second,
}

/// Partial trace of a square matrix on `H_1 ⊗ H_2` with `dims = (d1, d2)`.
pub fn partial_trace_matrix(m: &ComplexMatrix, dims: (usize, usize), keep: Keep) -> Result<ComplexMatrix> {
    let (d1, d2) = dims;
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    if d1 * d2 != m.rows() {
        return Err(Error::DimensionMismatch {
            expected: m.rows(),
            found: d1 * d2,
        });
    }
    let out = match keep {
        Keep::First => ComplexMatrix::from_fn(d1, d1, |i, j| (0..d2).map(|k| m[(i * d2 + k, j * d2 + k)]).sum()),
        Keep::Second => ComplexMatrix::from_fn(d2, d2, |i, j| (0..d1).map(|k| m[(k * d2 + i, k * d2 + j)]).sum()),
    };
    Ok(out)
}

/// Reduced density matrix over the kept factor.
pub fn partial_trace(rho: &DensityMatrix, dims: (usize, usize), keep: Keep) -> Result<DensityMatrix> {
    partial_trace_matrix(&rho.matrix, dims, keep).map(DensityMatrix::from_matrix_unchecked)
}

/// Eigenvalues below this are eigensolver noise and contribute nothing.
const SPECTRUM_FLOOR: f64 = 1e-14;

/// `-Σ λ log₂ λ` over a spectrum; values in `[-clamp, 0)` count as zero.
pub fn entropy_of_spectrum(values: &[f64], clamp: f64) -> Result<f64> {
    let mut s = 0.0;
    for &lam in values {
        if lam < -clamp {
            return Err(Error::NegativeEigenvalue { value: lam });
        }
        if lam > SPECTRUM_FLOOR {
            s -= lam * lam.log2();
        }
    }
    Ok(s.max(0.0))
}

/// Von Neumann entropy in bits.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    let tol = Tolerances::default();
    let spectrum = hermitian_eigenvalues(&rho.matrix, tol.eigen_input)?;
    entropy_of_spectrum(&spectrum, tol.psd)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn bell() -> PureState {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        PureState::new(vec![c(h, 0.), c(0., 0.), c(0., 0.), c(h, 0.)]).unwrap()
    }

    #[test]
    fn overlaps_of_basis_states() {
        let z0 = PureState::basis(2, 0);
        let z1 = PureState::basis(2, 1);
        assert_eq!(overlap(&z0, &z0).unwrap(), c(1., 0.));
        assert_eq!(overlap(&z0, &z1).unwrap(), c(0., 0.));
        assert!(overlap(&z0, &PureState::basis(3, 0)).is_err());
    }

    #[test]
    fn overlap_conjugates_first_argument() {
        let a = PureState::new(vec![c(0., 1.), c(0., 0.)]).unwrap();
        let b = PureState::basis(2, 0);
        assert_eq!(overlap(&a, &b).unwrap(), c(0., -1.));
    }

    #[test]
    fn bell_reduction_is_maximally_mixed() {
        let rho = bell().to_density();
        let red = partial_trace(&rho, (2, 2), Keep::First).unwrap();
        assert!(red
            .matrix()
            .approx_eq(DensityMatrix::maximally_mixed(2).matrix(), 1e-15));
        assert!((von_neumann_entropy(&red).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn product_state_reduction() {
        let a = DensityMatrix::new(
            ComplexMatrix::from_vec(2, 2, vec![c(0.7, 0.), c(0.1, 0.2), c(0.1, -0.2), c(0.3, 0.)]).unwrap(),
        )
        .unwrap();
        let b = DensityMatrix::new(ComplexMatrix::from_real_diagonal(&[0.25, 0.25, 0.5])).unwrap();
        let ab = a.tensor(&b);
        let ra = partial_trace(&ab, (2, 3), Keep::First).unwrap();
        let rb = partial_trace(&ab, (2, 3), Keep::Second).unwrap();
        assert!(ra.matrix().approx_eq(a.matrix(), 1e-15));
        assert!(rb.matrix().approx_eq(b.matrix(), 1e-15));
        assert!(partial_trace(&ab, (2, 2), Keep::First).is_err());
    }

    #[test]
    fn entropy_reference_values() {
        assert!(von_neumann_entropy(&PureState::basis(3, 1).to_density()).unwrap().abs() < 1e-15);
        let half = DensityMatrix::maximally_mixed(2);
        assert!((von_neumann_entropy(&half).unwrap() - 1.0).abs() < 1e-15);
        let third = DensityMatrix::new(ComplexMatrix::from_real_diagonal(&[2.0 / 3.0, 1.0 / 3.0])).unwrap();
        assert!((von_neumann_entropy(&third).unwrap() - 0.918296).abs() < 1e-6);
    }

    #[test]
    fn entropy_clamps_small_negatives_only() {
        assert_eq!(entropy_of_spectrum(&[1.0, -5e-11], 1e-10).unwrap(), 0.0);
        assert!(entropy_of_spectrum(&[1.0, -1e-9], 1e-10).is_err());
    }

    #[test]
    fn density_validation() {
        let not_herm = ComplexMatrix::from_vec(2, 2, vec![c(0.5, 0.), c(0.1, 0.), c(0.0, 0.), c(0.5, 0.)]).unwrap();
        assert!(matches!(DensityMatrix::new(not_herm), Err(Error::NotHermitian { .. })));
        let bad_trace = ComplexMatrix::from_real_diagonal(&[0.5, 0.6]);
        assert!(matches!(DensityMatrix::new(bad_trace), Err(Error::BadTrace { .. })));
        let negative = ComplexMatrix::from_real_diagonal(&[1.1, -0.1]);
        assert!(matches!(
            DensityMatrix::new(negative),
            Err(Error::NegativeEigenvalue { .. })
        ));
    }

    #[test]
    fn pure_state_norm_check() {
        assert!(PureState::new(vec![c(1., 0.), c(1., 0.)]).is_err());
        let s = PureState::normalized(vec![c(1., 0.), c(0., 1.)]).unwrap();
        assert!((s.amplitudes()[1].im - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert!(PureState::normalized(vec![c(0., 0.)]).is_err());
    }
}
