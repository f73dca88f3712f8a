//! Independent cross-checks for the main computation paths.
//!
//! Nothing here reuses the quadrature or superoperator code it checks: the
//! Monte-Carlo estimate parameterizes the sphere itself, and the Choi matrix
//! is assembled from branch vectors instead of applying the dephased map.

use std::f64::consts::{PI, TAU};
use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bloch::{build_grid, CompressionMap};
use crate::error::{Error, Result};
use crate::information::{entanglement, holevo_pair, p1_closed_form, post_measurement_object_state};
use crate::measurement::MeasurementSpec;
use crate::qstate::{hermitian_eigenvalues, ComplexMatrix, DensityMatrix};

/// Largest number of measurement entries accepted by [`choi_cp_check`].
pub const CHOI_MAX_ENTRIES: usize = 8;

#[derive(Clone, Debug, PartialEq)]
pub struct OracleReport {
    pub quantity: String,
    pub main: f64,
    pub oracle: f64,
    pub abs_diff: f64,
    pub resolution: String,
    pub tolerance: f64,
    pub passed: bool,
}

impl OracleReport {
    pub fn new(
        quantity: impl Into<String>,
        main: f64,
        oracle: f64,
        resolution: impl Into<String>,
        tolerance: f64,
    ) -> Self {
        let abs_diff = (main - oracle).abs();
        Self {
            quantity: quantity.into(),
            main,
            oracle,
            abs_diff,
            resolution: resolution.into(),
            tolerance,
            passed: abs_diff <= tolerance,
        }
    }

    /// Replaces the tolerance and reclassifies.
    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self.passed = self.abs_diff <= tolerance;
        self
    }
}

impl fmt::Display for OracleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} main={:.12} oracle={:.12} diff={:.3e} tol={:.1e} [{}]",
            if self.passed { "PASS" } else { "FAIL" },
            self.quantity,
            self.main,
            self.oracle,
            self.abs_diff,
            self.tolerance,
            self.resolution
        )
    }
}

/// Monte-Carlo estimate of `ρ'_A` for the input at `(s, 0)`: samples are
/// uniform on the sphere (`cos θ` uniform in `[-1, 1]`, `φ` uniform), and
/// `ρ'_A = 2 E[|⟨α|ψ⟩|² |e_α⟩⟨e_α|]` with `e_α` at `(qθ, φ)`.
pub fn mc_integrate_rho(s: f64, q: f64, sample_count: usize, seed: u64) -> Result<DensityMatrix> {
    if sample_count < 10_000 {
        return Err(Error::InvalidParameter(format!(
            "Monte-Carlo needs at least 10^4 samples, got {sample_count}"
        )));
    }
    if !(0.0..=1.0).contains(&q) || !(0.0..=PI).contains(&s) {
        return Err(Error::InvalidParameter(format!("(s, q) = ({s}, {q}) out of range")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let psi = [(0.5 * s).cos(), (0.5 * s).sin()];
    let (mut m00, mut m11, mut m10) = (0.0, 0.0, Complex64::new(0.0, 0.0));
    for _ in 0..sample_count {
        let cos_t: f64 = rng.gen_range(-1.0..=1.0);
        let phi: f64 = rng.gen_range(0.0..TAU);
        let theta = cos_t.clamp(-1.0, 1.0).acos();
        // ⟨α|ψ⟩ with α = (cos θ/2, e^{iφ} sin θ/2) and real ψ
        let amp = Complex64::new((0.5 * theta).cos() * psi[0], 0.0)
            + Complex64::from_polar((0.5 * theta).sin() * psi[1], -phi);
        let weight = 2.0 * amp.norm_sqr();
        let (c, sn) = ((0.5 * q * theta).cos(), (0.5 * q * theta).sin());
        m00 += weight * c * c;
        m11 += weight * sn * sn;
        m10 += Complex64::from_polar(weight * c * sn, phi);
    }
    let n = sample_count as f64;
    let m = ComplexMatrix::from_vec(
        2,
        2,
        vec![
            Complex64::new(m00 / n, 0.0),
            (m10 / n).conj(),
            m10 / n,
            Complex64::new(m11 / n, 0.0),
        ],
    )?;
    DensityMatrix::normalized(m)
}

/// Builds the Choi matrix `Σ_{αβ} R_{αβ} |c_α⟩⟨c_β|` with
/// `|c_α⟩ = √ν_α |α̃*⟩ ⊗ |ẽ_α⟩ ⊗ |α⟩` and reports its smallest eigenvalue.
/// `r` is taken as given, so invalid dephasing matrices can be probed.
pub fn choi_matrix(spec: &MeasurementSpec, r: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = spec.meter_dim();
    if n > CHOI_MAX_ENTRIES {
        return Err(Error::DimensionOverflow {
            entries: n,
            limit: CHOI_MAX_ENTRIES,
        });
    }
    if r.rows() != n || r.cols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: r.rows(),
        });
    }
    let d = spec.object_dim();
    let dim = d * d * n;
    let branches: Vec<Vec<Complex64>> = spec
        .entries()
        .iter()
        .enumerate()
        .map(|(alpha, e)| {
            let w = e.weight.sqrt();
            let mut v = vec![Complex64::new(0.0, 0.0); dim];
            for (i, p) in e.probe.amplitudes().iter().enumerate() {
                for (a, o) in e.output.amplitudes().iter().enumerate() {
                    v[(i * d + a) * n + alpha] = p.conj() * o * w;
                }
            }
            v
        })
        .collect();
    let mut choi = ComplexMatrix::zeros(dim, dim);
    for alpha in 0..n {
        for beta in 0..n {
            let coeff = r[(alpha, beta)];
            if coeff.norm() == 0.0 {
                continue;
            }
            choi.add_scaled(&ComplexMatrix::outer(&branches[alpha], &branches[beta]), coeff);
        }
    }
    Ok(choi)
}

pub fn choi_cp_check(spec: &MeasurementSpec, r: &ComplexMatrix, tol: f64) -> Result<OracleReport> {
    let choi = choi_matrix(spec, r)?;
    let min = hermitian_eigenvalues(&choi, 1e-10)?.last().copied().unwrap_or(0.0);
    let mut report = OracleReport::new(
        "choi_min_eigenvalue",
        min,
        0.0,
        format!("D={} entries={}", spec.object_dim(), spec.meter_dim()),
        tol,
    );
    report.passed = min >= -tol;
    Ok(report)
}

/// Quantities certified by [`fine_grid_reference`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ReferenceQuantity {
    Entanglement {
        s: f64,
        q: f64,
    },
    HolevoObject {
        q: f64,
        s_nodes: usize,
    },
    HolevoMeter {
        q: f64,
        s_nodes: usize,
    },
    /// Quadrature `⟨0|ρ'_A|0⟩` at `s = π` against the closed form.
    P1 {
        q: f64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    /// Values at `base`, `2·base` and `4·base` θ-nodes.
    pub sequence: [f64; 3],
    pub theta_nodes: [usize; 3],
    pub extrapolated: f64,
    /// `main` is the finest value; `oracle` is the analytic reference when
    /// one exists, otherwise the extrapolation.
    pub report: OracleReport,
}

impl ConvergenceReport {
    /// Errors against the oracle value are nonincreasing along the sequence,
    /// up to `floor`.
    pub fn is_monotone(&self, floor: f64) -> bool {
        let errs: Vec<f64> = self.sequence.iter().map(|v| (v - self.report.oracle).abs()).collect();
        errs.windows(2).all(|w| w[1] <= w[0] + floor)
    }
}

/// Recomputes `quantity` at `base·k`, `2·base·k`, `4·base·k` θ-nodes
/// (`k = multiplier`, φ-nodes half of θ-nodes) and extrapolates.
pub fn fine_grid_reference(
    quantity: ReferenceQuantity,
    base_theta_nodes: usize,
    multiplier: usize,
    tol: f64,
) -> Result<ConvergenceReport> {
    if base_theta_nodes < 2 || multiplier == 0 {
        return Err(Error::InvalidParameter("resolution must be positive".into()));
    }
    let nodes = [1, 2, 4].map(|f| base_theta_nodes * multiplier * f);
    let mut sequence = [0.0; 3];
    for (slot, &nt) in sequence.iter_mut().zip(&nodes) {
        let grid = build_grid(nt, (nt / 2).max(2))?;
        *slot = match quantity {
            ReferenceQuantity::Entanglement { s, q } => entanglement(s, &CompressionMap::new(q)?, &grid)?,
            ReferenceQuantity::HolevoObject { q, s_nodes } => {
                holevo_pair(&CompressionMap::new(q)?, &grid, s_nodes)?.object
            }
            ReferenceQuantity::HolevoMeter { q, s_nodes } => {
                holevo_pair(&CompressionMap::new(q)?, &grid, s_nodes)?.meter
            }
            ReferenceQuantity::P1 { q } => {
                post_measurement_object_state(PI, &CompressionMap::new(q)?, &grid)?.matrix()[(0, 0)].re
            }
        };
    }
    // second-order Richardson on the two finest levels
    let extrapolated = sequence[2] + (sequence[2] - sequence[1]) / 3.0;
    let (name, oracle) = match quantity {
        ReferenceQuantity::Entanglement { s, q } => (format!("entanglement(s={s:.4},q={q:.4})"), extrapolated),
        ReferenceQuantity::HolevoObject { q, .. } => (format!("holevo_object(q={q:.4})"), extrapolated),
        ReferenceQuantity::HolevoMeter { q, .. } => (format!("holevo_meter(q={q:.4})"), extrapolated),
        ReferenceQuantity::P1 { q } => (format!("p1(q={q:.4})"), p1_closed_form(q)?),
    };
    let resolution = format!("theta_nodes={}/{}/{}", nodes[0], nodes[1], nodes[2]);
    Ok(ConvergenceReport {
        sequence,
        theta_nodes: nodes,
        extrapolated,
        report: OracleReport::new(name, sequence[2], oracle, resolution, tol),
    })
}

/// Seeded generators of random test objects.
pub mod random {
    use super::*;
    use crate::measurement::{DephasingMatrix, MeasurementEntry};
    use crate::qstate::{hermitian_eigh, PureState};

    fn gaussian_vector(rng: &mut impl Rng, dim: usize) -> Vec<Complex64> {
        (0..dim)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect()
    }

    pub fn pure_state(rng: &mut impl Rng, dim: usize) -> PureState {
        loop {
            if let Ok(s) = PureState::normalized(gaussian_vector(rng, dim)) {
                return s;
            }
        }
    }

    /// Mixture of `rank` random pure states with random weights.
    pub fn density_matrix(rng: &mut impl Rng, dim: usize, rank: usize) -> DensityMatrix {
        let mut m = ComplexMatrix::zeros(dim, dim);
        let weights: Vec<f64> = (0..rank).map(|_| rng.gen_range(0.05..1.0)).collect();
        let total: f64 = weights.iter().sum();
        for w in weights {
            m.add_scaled(&pure_state(rng, dim).projector(), Complex64::new(w / total, 0.0));
        }
        DensityMatrix::normalized(m).expect("valid mixture")
    }

    /// Unit-diagonal PSD matrix: normalized Gram matrix of random vectors in
    /// `C^rank`.
    pub fn dephasing(rng: &mut impl Rng, size: usize, rank: usize) -> DephasingMatrix {
        let vs: Vec<PureState> = (0..size).map(|_| pure_state(rng, rank)).collect();
        let m = ComplexMatrix::from_fn(size, size, |a, b| {
            crate::qstate::overlap(&vs[a], &vs[b]).expect("same dimension")
        });
        DephasingMatrix::new(m, 1e-10).expect("Gram matrices are valid")
    }

    /// Complete spec with `entries ≥ dim` random probes (frame-normalized)
    /// and random outputs.
    pub fn spec(rng: &mut impl Rng, dim: usize, entries: usize) -> MeasurementSpec {
        assert!(entries >= dim);
        loop {
            let raw: Vec<Vec<Complex64>> = (0..entries).map(|_| gaussian_vector(rng, dim)).collect();
            let mut frame = ComplexMatrix::zeros(dim, dim);
            for v in &raw {
                frame.add_scaled(&ComplexMatrix::outer(v, v), Complex64::new(1.0, 0.0));
            }
            let eig = hermitian_eigh(&frame, 1e-10).expect("Hermitian frame operator");
            if eig.values.last().copied().unwrap_or(0.0) < 1e-3 {
                continue;
            }
            let inv_sqrt = eig.map_spectrum(|x| 1.0 / x.sqrt());
            let built: Vec<MeasurementEntry> = raw
                .iter()
                .map(|v| {
                    let w = inv_sqrt.apply(v).expect("dimension");
                    let weight: f64 = w.iter().map(|z| z.norm_sqr()).sum();
                    let probe = PureState::normalized(w).expect("nonzero");
                    MeasurementEntry::new(probe, pure_state(rng, dim), weight)
                })
                .collect();
            return MeasurementSpec::new(dim, built, 1e-10).expect("frame-normalized spec");
        }
    }

    /// Haar-like unitary from Gram–Schmidt on random columns.
    pub fn unitary(rng: &mut impl Rng, dim: usize) -> ComplexMatrix {
        let mut cols: Vec<Vec<Complex64>> = Vec::with_capacity(dim);
        while cols.len() < dim {
            let mut v = gaussian_vector(rng, dim);
            for c in &cols {
                let proj: Complex64 = c.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (x, y) in v.iter_mut().zip(c) {
                    *x -= proj * y;
                }
            }
            let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm > 1e-6 {
                cols.push(v.into_iter().map(|z| z / norm).collect());
            }
        }
        ComplexMatrix::from_fn(dim, dim, |i, j| cols[j][i])
    }

    pub fn seeded(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::{preset, DephasingMatrix, Preset};

    #[test]
    fn mc_collapses_at_q0() {
        let rho = mc_integrate_rho(1.0, 0.0, 10_000, 3).unwrap();
        let expected = ComplexMatrix::from_real_diagonal(&[1.0, 0.0]);
        assert!(rho.matrix().approx_eq(&expected, 1e-15));
    }

    #[test]
    fn mc_is_deterministic_per_seed() {
        let a = mc_integrate_rho(2.0, 0.6, 20_000, 99).unwrap();
        let b = mc_integrate_rho(2.0, 0.6, 20_000, 99).unwrap();
        assert_eq!(a, b);
        let c = mc_integrate_rho(2.0, 0.6, 20_000, 100).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn mc_rejects_small_sample() {
        assert!(mc_integrate_rho(1.0, 0.5, 9_999, 0).is_err());
    }

    #[test]
    fn choi_of_valid_dephasings() {
        let spec = preset(&Preset::Entangling, 2).unwrap();
        for r in [DephasingMatrix::coherent(2), DephasingMatrix::dequantizing(2)] {
            let rep = choi_cp_check(&spec, r.matrix(), 1e-12).unwrap();
            assert!(rep.passed, "{rep}");
        }
    }

    #[test]
    fn choi_detects_invalid_dephasing() {
        let spec = preset(&Preset::Entangling, 2).unwrap();
        let bad = ComplexMatrix::from_vec(
            2,
            2,
            vec![
                Complex64::new(1.0, 0.0),
                Complex64::new(1.5, 0.0),
                Complex64::new(1.5, 0.0),
                Complex64::new(1.0, 0.0),
            ],
        )
        .unwrap();
        let rep = choi_cp_check(&spec, &bad, 1e-10).unwrap();
        assert!(!rep.passed);
        assert!((rep.main + 0.5).abs() < 1e-12);
    }

    #[test]
    fn choi_dimension_limit() {
        let mut rng = random::seeded(1);
        let spec = random::spec(&mut rng, 2, 9);
        let r = DephasingMatrix::coherent(9);
        assert!(matches!(
            choi_cp_check(&spec, r.matrix(), 1e-10),
            Err(Error::DimensionOverflow { entries: 9, .. })
        ));
    }

    #[test]
    fn p1_reference_matches_closed_form() {
        let rep = fine_grid_reference(ReferenceQuantity::P1 { q: 0.5 }, 32, 1, 1e-8).unwrap();
        assert_eq!(rep.theta_nodes, [32, 64, 128]);
        assert!(rep.report.passed, "{}", rep.report);
    }

    #[test]
    fn report_line_format() {
        let r = OracleReport::new("x", 1.0, 1.5, "n=1", 0.1);
        assert!(!r.passed);
        assert!(r.to_string().starts_with("FAIL x "));
        assert!(r.with_tolerance(1.0).passed);
    }
}
