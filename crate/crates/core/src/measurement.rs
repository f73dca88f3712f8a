//! Generalized measurements built from probe states, output states and
//! multiplicity weights.
//!
//! An entry `α` routes the amplitude `√ν_α ⟨α̃|ψ⟩` into the product state
//! `|ẽ_α⟩_A |α⟩_B`, where `|α⟩_B` is the computational basis of the meter
//! ordered by entry index. Joint object-meter indices are A-major:
//! `a * meter_dim + α`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::qstate::{overlap, ComplexMatrix, DensityMatrix, PureState};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Default completeness tolerance for discrete specifications.
pub const DISCRETE_COMPLETENESS_TOL: f64 = 1e-10;

/// One branch of a measurement: probe `|α̃⟩`, output `|ẽ_α⟩`, weight `ν_α`.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementEntry {
    pub probe: PureState,
    pub output: PureState,
    pub weight: f64,
}

impl MeasurementEntry {
    pub fn new(probe: PureState, output: PureState, weight: f64) -> Self {
        Self { probe, output, weight }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementSpec {
    object_dim: usize,
    entries: Vec<MeasurementEntry>,
}

impl MeasurementSpec {
    /// Validated constructor: dimensions, nonnegative weights and
    /// `Σ ν |α̃⟩⟨α̃| = I` within `tol`.
    pub fn new(object_dim: usize, entries: Vec<MeasurementEntry>, tol: f64) -> Result<Self> {
        let spec = Self::assemble(object_dim, entries)?;
        spec.check_completeness(tol)?;
        Ok(spec)
    }

    /// Checks dimensions and weights but not completeness. Used for
    /// quadrature-built specs whose completeness depends on resolution; call
    /// [`MeasurementSpec::completeness_deviation`] to inspect it.
    pub fn assemble(object_dim: usize, entries: Vec<MeasurementEntry>) -> Result<Self> {
        if object_dim == 0 {
            return Err(Error::InvalidParameter("object dimension must be positive".into()));
        }
        if entries.is_empty() {
            return Err(Error::InvalidParameter("measurement needs at least one entry".into()));
        }
        for (index, e) in entries.iter().enumerate() {
            for state in [&e.probe, &e.output] {
                if state.dim() != object_dim {
                    return Err(Error::DimensionMismatch {
                        expected: object_dim,
                        found: state.dim(),
                    });
                }
            }
            if e.weight < 0.0 || !e.weight.is_finite() {
                return Err(Error::NegativeWeight {
                    index,
                    weight: e.weight,
                });
            }
        }
        Ok(Self { object_dim, entries })
    }

    pub fn object_dim(&self) -> usize {
        self.object_dim
    }

    /// Number of entries, which is also the meter dimension.
    pub fn meter_dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[MeasurementEntry] {
        &self.entries
    }

    pub fn total_weight(&self) -> f64 {
        self.entries.iter().map(|e| e.weight).sum()
    }

    /// `Σ_α ν_α |α̃⟩⟨α̃|`.
    pub fn frame_operator(&self) -> ComplexMatrix {
        let d = self.object_dim;
        let mut s = ComplexMatrix::zeros(d, d);
        for e in self.entries.iter().filter(|e| e.weight > 0.0) {
            s.add_scaled(&e.probe.projector(), Complex64::new(e.weight, 0.0));
        }
        s
    }

    /// `‖Σ ν |α̃⟩⟨α̃| − I‖_max`.
    pub fn completeness_deviation(&self) -> f64 {
        self.frame_operator()
            .max_abs_diff(&ComplexMatrix::identity(self.object_dim))
    }

    pub fn check_completeness(&self, tol: f64) -> Result<()> {
        let deviation = self.completeness_deviation();
        if deviation > tol {
            return Err(Error::Completeness { deviation, tol });
        }
        Ok(())
    }

    fn check_input(&self, rho: &DensityMatrix) -> Result<()> {
        if rho.dim() != self.object_dim {
            return Err(Error::DimensionMismatch {
                expected: self.object_dim,
                found: rho.dim(),
            });
        }
        Ok(())
    }

    /// `K_{αβ} = √(ν_α ν_β) ⟨α̃|ρ|β̃⟩`.
    fn branch_amplitudes(&self, rho: &DensityMatrix) -> ComplexMatrix {
        let n = self.meter_dim();
        let rho_probes: Vec<Vec<Complex64>> = self
            .entries
            .iter()
            .map(|e| rho.matrix().apply(e.probe.amplitudes()).expect("dimension checked"))
            .collect();
        ComplexMatrix::from_fn(n, n, |a, b| {
            let ea = &self.entries[a];
            let eb = &self.entries[b];
            let w = (ea.weight * eb.weight).sqrt();
            if w == 0.0 {
                return ZERO;
            }
            let amp: Complex64 = ea
                .probe
                .amplitudes()
                .iter()
                .zip(&rho_probes[b])
                .map(|(p, r)| p.conj() * r)
                .sum();
            amp * w
        })
    }
}

/// Linear map `H_A → H_A ⊗ H_B` stored as an `out_dim × in_dim` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Isometry {
    object_dim: usize,
    meter_dim: usize,
    matrix: ComplexMatrix,
}

impl Isometry {
    /// Wraps `matrix` (shape `object_dim*meter_dim × object_dim`) after
    /// checking `V†V = I` within `tol`.
    pub fn new(matrix: ComplexMatrix, object_dim: usize, meter_dim: usize, tol: f64) -> Result<Self> {
        let v = Self::unchecked(matrix, object_dim, meter_dim)?;
        let check = check_isometry(&v, tol);
        if !check.passed {
            return Err(Error::Completeness {
                deviation: check.deviation,
                tol,
            });
        }
        Ok(v)
    }

    /// Wraps `matrix` checking only its shape.
    pub fn unchecked(matrix: ComplexMatrix, object_dim: usize, meter_dim: usize) -> Result<Self> {
        if matrix.cols() != object_dim || matrix.rows() != object_dim * meter_dim {
            return Err(Error::Shape {
                rows: matrix.rows(),
                cols: matrix.cols(),
                len: object_dim * object_dim * meter_dim,
            });
        }
        Ok(Self {
            object_dim,
            meter_dim,
            matrix,
        })
    }

    pub fn in_dim(&self) -> usize {
        self.matrix.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn object_dim(&self) -> usize {
        self.object_dim
    }

    pub fn meter_dim(&self) -> usize {
        self.meter_dim
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            matrix: self.matrix.scale_real(factor),
            ..self.clone()
        }
    }

    /// `V|ψ⟩` as a vector on `H_A ⊗ H_B`.
    pub fn apply_pure(&self, psi: &PureState) -> Result<Vec<Complex64>> {
        self.matrix.apply(psi.amplitudes())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IsometryCheck {
    pub deviation: f64,
    pub passed: bool,
}

/// `‖V†V − I‖_max`, classified against `tol`.
pub fn check_isometry(v: &Isometry, tol: f64) -> IsometryCheck {
    let gram = &v.matrix.adjoint() * &v.matrix;
    let deviation = gram.max_abs_diff(&ComplexMatrix::identity(v.in_dim()));
    IsometryCheck {
        deviation,
        passed: deviation <= tol,
    }
}

/// `V = Σ_α √ν_α |ẽ_α⟩_A |α⟩_B ⟨α̃|_A`; fails if completeness exceeds `tol`.
pub fn build_isometry(spec: &MeasurementSpec, tol: f64) -> Result<Isometry> {
    spec.check_completeness(tol)?;
    let d = spec.object_dim;
    let n = spec.meter_dim();
    let mut m = ComplexMatrix::zeros(d * n, d);
    for (alpha, e) in spec.entries.iter().enumerate() {
        let w = e.weight.sqrt();
        for a in 0..d {
            let out = e.output.amplitudes()[a] * w;
            for j in 0..d {
                m[(a * n + alpha, j)] += out * e.probe.amplitudes()[j].conj();
            }
        }
    }
    Ok(Isometry {
        object_dim: d,
        meter_dim: n,
        matrix: m,
    })
}

/// `VρV†` on `H_A ⊗ H_B`.
pub fn apply_coherent(v: &Isometry, rho: &DensityMatrix) -> Result<DensityMatrix> {
    if rho.dim() != v.in_dim() {
        return Err(Error::DimensionMismatch {
            expected: v.in_dim(),
            found: rho.dim(),
        });
    }
    let out = &(&v.matrix * rho.matrix()) * &v.matrix.adjoint();
    Ok(DensityMatrix::from_matrix_unchecked(out))
}

/// Unit-diagonal positive-semidefinite matrix `R_{αβ}` suppressing coherence
/// between measurement branches.
#[derive(Clone, Debug, PartialEq)]
pub struct DephasingMatrix {
    matrix: ComplexMatrix,
}

impl DephasingMatrix {
    /// Validates Hermiticity, unit diagonal and positive semidefiniteness
    /// (eigenvalues ≥ `-tol`). Diagonal entries within 1e-12 of 1 are set to
    /// exactly 1.
    pub fn new(matrix: ComplexMatrix, tol: f64) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::NotSquare {
                rows: matrix.rows(),
                cols: matrix.cols(),
            });
        }
        let dev = matrix.hermitian_deviation();
        if dev > tol {
            return Err(Error::InvalidDephasing(format!("not Hermitian (deviation {dev:.3e})")));
        }
        let mut matrix = matrix.hermitian_part();
        for i in 0..matrix.rows() {
            let d = matrix[(i, i)];
            if (d - Complex64::new(1.0, 0.0)).norm() > 1e-12 {
                return Err(Error::InvalidDephasing(format!(
                    "diagonal entry {i} is {d}, expected 1"
                )));
            }
            matrix[(i, i)] = Complex64::new(1.0, 0.0);
        }
        let spectrum = crate::qstate::hermitian_eigenvalues(&matrix, tol)?;
        if let Some(&min) = spectrum.last() {
            if min < -tol {
                return Err(Error::InvalidDephasing(format!(
                    "not positive semidefinite (min eigenvalue {min:.3e})"
                )));
            }
        }
        Ok(Self { matrix })
    }

    /// `R ≡ 1`: fully coherent measurement.
    pub fn coherent(size: usize) -> Self {
        Self {
            matrix: ComplexMatrix::from_fn(size, size, |_, _| Complex64::new(1.0, 0.0)),
        }
    }

    /// `R = δ_{αβ}`: complete dequantization.
    pub fn dequantizing(size: usize) -> Self {
        Self {
            matrix: ComplexMatrix::identity(size),
        }
    }

    /// Off-diagonal entries all equal to `r`; valid for `-1/(size-1) ≤ r ≤ 1`.
    pub fn uniform(size: usize, r: f64, tol: f64) -> Result<Self> {
        let m = ComplexMatrix::from_fn(size, size, |i, j| Complex64::new(if i == j { 1.0 } else { r }, 0.0));
        Self::new(m, tol)
    }

    pub fn size(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }
}

fn check_dephasing(spec: &MeasurementSpec, r: &DephasingMatrix) -> Result<()> {
    if r.size() != spec.meter_dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.meter_dim(),
            found: r.size(),
        });
    }
    Ok(())
}

/// `Mρ = Σ_{αβ} R_{αβ} √(ν_α ν_β) |ẽ_α⟩|α⟩⟨α̃|ρ|β̃⟩⟨β|⟨ẽ_β|`.
pub fn apply_dephased(spec: &MeasurementSpec, r: &DephasingMatrix, rho: &DensityMatrix) -> Result<DensityMatrix> {
    spec.check_input(rho)?;
    check_dephasing(spec, r)?;
    let d = spec.object_dim;
    let n = spec.meter_dim();
    let k = spec.branch_amplitudes(rho);
    let mut out = ComplexMatrix::zeros(d * n, d * n);
    for alpha in 0..n {
        let ea = spec.entries[alpha].output.amplitudes();
        for beta in 0..n {
            let c = r.matrix[(alpha, beta)] * k[(alpha, beta)];
            if c == ZERO {
                continue;
            }
            let eb = spec.entries[beta].output.amplitudes();
            for a in 0..d {
                let ca = c * ea[a];
                for b in 0..d {
                    out[(a * n + alpha, b * n + beta)] += ca * eb[b].conj();
                }
            }
        }
    }
    Ok(DensityMatrix::from_matrix_unchecked(out))
}

/// Rank-one POVM `Ê_α = ν_α |α̃⟩⟨α̃|`.
#[derive(Clone, Debug, PartialEq)]
pub struct Povm {
    elements: Vec<ComplexMatrix>,
}

impl Povm {
    pub fn elements(&self) -> &[ComplexMatrix] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn sum(&self) -> ComplexMatrix {
        let d = self.elements.first().map_or(0, |e| e.rows());
        let mut s = ComplexMatrix::zeros(d, d);
        for e in &self.elements {
            s.add_scaled(e, Complex64::new(1.0, 0.0));
        }
        s
    }

    pub fn completeness_deviation(&self) -> f64 {
        let s = self.sum();
        s.max_abs_diff(&ComplexMatrix::identity(s.rows()))
    }

    /// Most negative eigenvalue across all elements.
    pub fn min_eigenvalue(&self) -> Result<f64> {
        let mut min = f64::INFINITY;
        for e in &self.elements {
            let ev = crate::qstate::hermitian_eigenvalues(e, 1e-10)?;
            min = min.min(*ev.last().unwrap_or(&0.0));
        }
        Ok(min)
    }
}

pub fn povm_elements(spec: &MeasurementSpec) -> Povm {
    Povm {
        elements: spec
            .entries
            .iter()
            .map(|e| e.probe.projector().scale_real(e.weight))
            .collect(),
    }
}

/// `P(α) = Tr Ê_α ρ`.
pub fn outcome_distribution(spec: &MeasurementSpec, rho: &DensityMatrix) -> Result<Vec<f64>> {
    spec.check_input(rho)?;
    Ok(spec
        .entries
        .iter()
        .map(|e| {
            let rp = rho.matrix().apply(e.probe.amplitudes()).expect("dimension checked");
            let amp: Complex64 = e.probe.amplitudes().iter().zip(&rp).map(|(p, r)| p.conj() * r).sum();
            (e.weight * amp.re).max(0.0)
        })
        .collect())
}

/// `Q_{αβ} = ⟨ẽ_α|ẽ_β⟩`.
pub fn gram_matrix(spec: &MeasurementSpec) -> ComplexMatrix {
    let n = spec.meter_dim();
    ComplexMatrix::from_fn(n, n, |a, b| {
        overlap(&spec.entries[a].output, &spec.entries[b].output).expect("equal dimensions")
    })
}

/// Meter state `ρ_B = Tr_A Mρ`, computed directly:
/// `[ρ_B]_{αβ} = R_{αβ} √(ν_α ν_β) ⟨α̃|ρ|β̃⟩ ⟨ẽ_β|ẽ_α⟩`.
pub fn contract_to_meter(spec: &MeasurementSpec, r: &DephasingMatrix, rho: &DensityMatrix) -> Result<DensityMatrix> {
    spec.check_input(rho)?;
    check_dephasing(spec, r)?;
    let n = spec.meter_dim();
    let k = spec.branch_amplitudes(rho);
    let q = gram_matrix(spec);
    let out = ComplexMatrix::from_fn(n, n, |a, b| r.matrix[(a, b)] * k[(a, b)] * q[(b, a)]);
    Ok(DensityMatrix::from_matrix_unchecked(out))
}

/// Meter vectors `|k̃l⟩_B = Σ_α √ν_α ⟨α̃|l⟩ ⟨k|ẽ_α⟩ |α⟩_B` of the minimal-basis
/// form `V = Σ_{kl} |k⟩_A |k̃l⟩_B ⟨l|_A`, indexed `k * D + l`.
pub fn minimal_basis_states(spec: &MeasurementSpec) -> Vec<Vec<Complex64>> {
    let d = spec.object_dim;
    let mut out = Vec::with_capacity(d * d);
    for k in 0..d {
        for l in 0..d {
            out.push(
                spec.entries
                    .iter()
                    .map(|e| e.probe.amplitudes()[l].conj() * e.output.amplitudes()[k] * e.weight.sqrt())
                    .collect(),
            );
        }
    }
    out
}

/// Reassembles `V` from the minimal-basis vectors.
pub fn isometry_from_minimal_basis(d: usize, states: &[Vec<Complex64>]) -> Result<Isometry> {
    if states.len() != d * d {
        return Err(Error::DimensionMismatch {
            expected: d * d,
            found: states.len(),
        });
    }
    let n = states[0].len();
    let mut m = ComplexMatrix::zeros(d * n, d);
    for k in 0..d {
        for l in 0..d {
            for (alpha, &amp) in states[k * d + l].iter().enumerate() {
                m[(k * n + alpha, l)] = amp;
            }
        }
    }
    Isometry::unchecked(m, d, n)
}

/// Named special cases of the generalized measurement.
#[derive(Clone, Debug)]
pub enum Preset {
    /// Probes and outputs are the computational basis, unit weights. Pair with
    /// [`DephasingMatrix::dequantizing`] for the projective readout.
    Projective,
    /// Same isometry as `Projective`: `|k⟩ ↦ |k⟩_A |k⟩_B`, kept coherent.
    Entangling,
    /// Overcomplete probe set with weights; each output is the computational
    /// basis state with the largest overlap with its probe.
    Soft { probes: Vec<PureState>, weights: Vec<f64> },
    /// Orthogonal (computational-basis) probes with caller-chosen outputs.
    Selected { outputs: Vec<PureState> },
    /// Computational-basis probes, every output equal to `|0⟩`.
    CompleteTransfer,
    /// `N` orthonormal bases given as unitary column sets, weight `1/N` each.
    RotatedBases { bases: Vec<ComplexMatrix> },
}

pub fn preset(kind: &Preset, dim: usize) -> Result<MeasurementSpec> {
    let tol = DISCRETE_COMPLETENESS_TOL;
    let basis = |k| PureState::basis(dim, k);
    let entries: Vec<MeasurementEntry> = match kind {
        Preset::Projective | Preset::Entangling => (0..dim)
            .map(|k| MeasurementEntry::new(basis(k), basis(k), 1.0))
            .collect(),
        Preset::CompleteTransfer => (0..dim)
            .map(|k| MeasurementEntry::new(basis(k), basis(0), 1.0))
            .collect(),
        Preset::Selected { outputs } => {
            if outputs.len() != dim {
                return Err(Error::InvalidParameter(format!(
                    "selected measurement needs {dim} outputs, got {}",
                    outputs.len()
                )));
            }
            outputs
                .iter()
                .enumerate()
                .map(|(k, e)| MeasurementEntry::new(basis(k), e.clone(), 1.0))
                .collect()
        }
        Preset::Soft { probes, weights } => {
            if probes.len() != weights.len() {
                return Err(Error::InvalidParameter(format!(
                    "{} probes but {} weights",
                    probes.len(),
                    weights.len()
                )));
            }
            probes
                .iter()
                .zip(weights)
                .map(|(p, &w)| {
                    let k = p
                        .amplitudes()
                        .iter()
                        .enumerate()
                        .max_by(|a, b| a.1.norm_sqr().total_cmp(&b.1.norm_sqr()))
                        .map_or(0, |(k, _)| k);
                    MeasurementEntry::new(p.clone(), PureState::basis(p.dim(), k), w)
                })
                .collect()
        }
        Preset::RotatedBases { bases } => {
            if bases.is_empty() {
                return Err(Error::InvalidParameter("no bases given".into()));
            }
            let w = 1.0 / bases.len() as f64;
            let mut entries = Vec::with_capacity(bases.len() * dim);
            for u in bases {
                if u.rows() != dim || u.cols() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        found: u.rows(),
                    });
                }
                for k in 0..dim {
                    let state = PureState::with_tolerance(u.col(k), 1e-10)?;
                    entries.push(MeasurementEntry::new(state.clone(), state, w));
                }
            }
            entries
        }
    };
    MeasurementSpec::new(dim, entries, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{partial_trace, Keep};
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn plus() -> DensityMatrix {
        PureState::new(vec![c(FRAC_1_SQRT_2, 0.), c(FRAC_1_SQRT_2, 0.)])
            .unwrap()
            .to_density()
    }

    fn hadamard() -> ComplexMatrix {
        let h = FRAC_1_SQRT_2;
        ComplexMatrix::from_vec(2, 2, vec![c(h, 0.), c(h, 0.), c(h, 0.), c(-h, 0.)]).unwrap()
    }

    fn y_basis() -> ComplexMatrix {
        let h = FRAC_1_SQRT_2;
        ComplexMatrix::from_vec(2, 2, vec![c(h, 0.), c(h, 0.), c(0., h), c(0., -h)]).unwrap()
    }

    #[test]
    fn entangling_isometry_duplicates_basis() {
        let spec = preset(&Preset::Entangling, 2).unwrap();
        let v = build_isometry(&spec, 1e-10).unwrap();
        assert_eq!(v.out_dim(), 4);
        // |0⟩ ↦ |00⟩, |1⟩ ↦ |11⟩
        let mut expected = ComplexMatrix::zeros(4, 2);
        expected[(0, 0)] = c(1., 0.);
        expected[(3, 1)] = c(1., 0.);
        assert_eq!(v.matrix(), &expected);
        assert!(check_isometry(&v, 1e-14).deviation < 1e-14);
    }

    #[test]
    fn complete_transfer_isometry() {
        let spec = preset(&Preset::CompleteTransfer, 2).unwrap();
        let v = build_isometry(&spec, 1e-10).unwrap();
        let mut expected = ComplexMatrix::zeros(4, 2);
        expected[(0, 0)] = c(1., 0.);
        expected[(1, 1)] = c(1., 0.);
        assert_eq!(v.matrix(), &expected);
    }

    #[test]
    fn scaled_isometry_deviation() {
        let v = build_isometry(&preset(&Preset::Entangling, 2).unwrap(), 1e-10).unwrap();
        let check = check_isometry(&v.scaled(1.01), 1e-10);
        assert!((check.deviation - (1.01f64 * 1.01 - 1.0)).abs() < 1e-14);
        assert!(!check.passed);
    }

    #[test]
    fn three_bases_overcomplete() {
        let bases = vec![ComplexMatrix::identity(2), hadamard(), y_basis()];
        let spec = preset(&Preset::RotatedBases { bases }, 2).unwrap();
        assert_eq!(spec.meter_dim(), 6);
        let v = build_isometry(&spec, 1e-10).unwrap();
        assert!(check_isometry(&v, 1e-12).passed);
        let povm = povm_elements(&spec);
        assert_eq!(povm.len(), 6);
        for e in povm.elements() {
            assert!((e.trace().re - 1.0 / 3.0).abs() < 1e-15);
        }
        assert!(povm.completeness_deviation() < 1e-12);
    }

    #[test]
    fn incomplete_spec_rejected() {
        let entries = vec![MeasurementEntry::new(
            PureState::basis(2, 0),
            PureState::basis(2, 0),
            1.0,
        )];
        assert!(matches!(
            MeasurementSpec::new(2, entries.clone(), 1e-10),
            Err(Error::Completeness { .. })
        ));
        let spec = MeasurementSpec::assemble(2, entries).unwrap();
        assert!(build_isometry(&spec, 1e-10).is_err());
    }

    #[test]
    fn negative_weight_rejected() {
        let entries = vec![MeasurementEntry::new(
            PureState::basis(2, 0),
            PureState::basis(2, 0),
            -0.5,
        )];
        assert!(matches!(
            MeasurementSpec::assemble(2, entries),
            Err(Error::NegativeWeight { index: 0, .. })
        ));
    }

    #[test]
    fn entangling_on_plus_gives_bell_state() {
        let spec = preset(&Preset::Entangling, 2).unwrap();
        let v = build_isometry(&spec, 1e-10).unwrap();
        let out = apply_coherent(&v, &plus()).unwrap();
        let mut bell = ComplexMatrix::zeros(4, 4);
        for (i, j) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
            bell[(i, j)] = c(0.5, 0.);
        }
        assert!(out.matrix().approx_eq(&bell, 1e-15));
        assert!((out.purity() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn complete_transfer_moves_state_to_meter() {
        let spec = preset(&Preset::CompleteTransfer, 2).unwrap();
        let v = build_isometry(&spec, 1e-10).unwrap();
        let psi = PureState::normalized(vec![c(0.6, 0.1), c(-0.3, 0.7)])
            .unwrap()
            .to_density();
        let out = apply_coherent(&v, &psi).unwrap();
        let zero = PureState::basis(2, 0).to_density();
        assert!(out.matrix().approx_eq(zero.tensor(&psi).matrix(), 1e-15));
        let meter = contract_to_meter(&spec, &DephasingMatrix::coherent(2), &psi).unwrap();
        assert!(meter.matrix().approx_eq(psi.matrix(), 1e-15));
    }

    #[test]
    fn coherent_dephasing_matches_isometry() {
        let bases = vec![ComplexMatrix::identity(2), hadamard()];
        let spec = preset(&Preset::RotatedBases { bases }, 2).unwrap();
        let v = build_isometry(&spec, 1e-10).unwrap();
        let rho = plus();
        let a = apply_coherent(&v, &rho).unwrap();
        let b = apply_dephased(&spec, &DephasingMatrix::coherent(4), &rho).unwrap();
        assert!(a.matrix().approx_eq(b.matrix(), 1e-12));
    }

    #[test]
    fn complete_dequantization_is_classical() {
        let spec = preset(&Preset::Entangling, 2).unwrap();
        let rho = DensityMatrix::new(
            ComplexMatrix::from_vec(2, 2, vec![c(0.7, 0.), c(0.2, 0.1), c(0.2, -0.1), c(0.3, 0.)]).unwrap(),
        )
        .unwrap();
        let out = apply_dephased(&spec, &DephasingMatrix::dequantizing(2), &rho).unwrap();
        let expected = ComplexMatrix::from_real_diagonal(&[0.7, 0.0, 0.0, 0.3]);
        assert!(out.matrix().approx_eq(&expected, 1e-15));
    }

    #[test]
    fn outcome_distributions() {
        let proj = preset(&Preset::Projective, 2).unwrap();
        let p = outcome_distribution(&proj, &PureState::basis(2, 0).to_density()).unwrap();
        assert_eq!(p, vec![1.0, 0.0]);
        let p = outcome_distribution(&preset(&Preset::Entangling, 2).unwrap(), &plus()).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15);
        assert!(outcome_distribution(&proj, &DensityMatrix::maximally_mixed(3)).is_err());
    }

    #[test]
    fn entangling_meter_is_maximally_mixed() {
        let spec = preset(&Preset::Entangling, 2).unwrap();
        let meter = contract_to_meter(&spec, &DephasingMatrix::coherent(2), &plus()).unwrap();
        assert!(meter
            .matrix()
            .approx_eq(DensityMatrix::maximally_mixed(2).matrix(), 1e-15));
    }

    #[test]
    fn contraction_equals_partial_trace() {
        let bases = vec![ComplexMatrix::identity(2), hadamard(), y_basis()];
        let spec = preset(&Preset::RotatedBases { bases }, 2).unwrap();
        let r = DephasingMatrix::uniform(6, 0.4, 1e-10).unwrap();
        let rho = plus();
        let full = apply_dephased(&spec, &r, &rho).unwrap();
        let traced = partial_trace(&full, (2, 6), Keep::Second).unwrap();
        let direct = contract_to_meter(&spec, &r, &rho).unwrap();
        assert!(traced.matrix().approx_eq(direct.matrix(), 1e-12));
    }

    #[test]
    fn gram_matrix_cases() {
        let spec = preset(&Preset::Entangling, 3).unwrap();
        assert_eq!(gram_matrix(&spec), ComplexMatrix::identity(3));
        let spec = preset(&Preset::CompleteTransfer, 3).unwrap();
        assert_eq!(gram_matrix(&spec), ComplexMatrix::from_fn(3, 3, |_, _| c(1., 0.)));
    }

    #[test]
    fn minimal_basis_of_entangling_and_transfer() {
        let spec = preset(&Preset::Entangling, 2).unwrap();
        let states = minimal_basis_states(&spec);
        for k in 0..2 {
            for l in 0..2 {
                let expected: Vec<Complex64> = (0..2).map(|a| c(if k == l && a == k { 1. } else { 0. }, 0.)).collect();
                assert_eq!(states[k * 2 + l], expected);
            }
        }
        let spec = preset(&Preset::CompleteTransfer, 2).unwrap();
        let states = minimal_basis_states(&spec);
        assert!(states[2].iter().chain(&states[3]).all(|z| z.norm() == 0.0));
        assert!(states[0].iter().chain(&states[1]).any(|z| z.norm() > 0.0));
        let v = isometry_from_minimal_basis(2, &states).unwrap();
        let direct = build_isometry(&spec, 1e-10).unwrap();
        assert!(v.matrix().approx_eq(direct.matrix(), 1e-15));
    }

    #[test]
    fn dephasing_validation() {
        let mut m = ComplexMatrix::identity(2);
        m[(0, 0)] = c(0.9, 0.);
        assert!(DephasingMatrix::new(m, 1e-10).is_err());
        let bad = ComplexMatrix::from_vec(2, 2, vec![c(1., 0.), c(1.5, 0.), c(1.5, 0.), c(1., 0.)]).unwrap();
        assert!(DephasingMatrix::new(bad, 1e-10).is_err());
        assert!(DephasingMatrix::uniform(3, -0.5, 1e-10).is_ok());
        assert!(DephasingMatrix::uniform(3, -0.6, 1e-10).is_err());
        let spec = preset(&Preset::Entangling, 2).unwrap();
        let r = DephasingMatrix::coherent(3);
        assert!(apply_dephased(&spec, &r, &plus()).is_err());
    }

    #[test]
    fn preset_parameter_errors() {
        assert!(preset(
            &Preset::Selected {
                outputs: vec![PureState::basis(2, 0)]
            },
            2
        )
        .is_err());
        let probes = vec![PureState::basis(2, 0), PureState::basis(2, 0)];
        assert!(matches!(
            preset(
                &Preset::Soft {
                    probes,
                    weights: vec![1.0, 1.0]
                },
                2
            ),
            Err(Error::Completeness { .. })
        ));
    }

    #[test]
    fn soft_preset_assigns_nearest_basis_outputs() {
        let probes = vec![
            PureState::basis(2, 0),
            PureState::basis(2, 1),
            PureState::new(vec![c(0.6, 0.), c(0.0, 0.8)]).unwrap(),
        ];
        // zero weight keeps the frame complete
        let spec = preset(
            &Preset::Soft {
                probes,
                weights: vec![1.0, 1.0, 0.0],
            },
            2,
        )
        .unwrap();
        assert_eq!(spec.entries()[0].output, PureState::basis(2, 0));
        assert_eq!(spec.entries()[2].output, PureState::basis(2, 1));
    }

    #[test]
    fn selected_preset_keeps_outputs() {
        let e1 = PureState::normalized(vec![c(1., 0.), c(0.5, 0.)]).unwrap();
        let e2 = PureState::normalized(vec![c(0.2, 0.), c(1., 0.3)]).unwrap();
        let spec = preset(
            &Preset::Selected {
                outputs: vec![e1.clone(), e2.clone()],
            },
            2,
        )
        .unwrap();
        assert_eq!(spec.entries()[0].probe, PureState::basis(2, 0));
        assert_eq!(spec.entries()[1].probe, PureState::basis(2, 1));
        assert_eq!(spec.entries()[0].output, e1);
        assert_eq!(spec.entries()[1].output, e2);
    }
}
