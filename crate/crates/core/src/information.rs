//! Entropic quantities of the continual nonselected qubit measurement.
//!
//! For a probe `|α̃⟩` on the Bloch sphere the object keeps
//! `ρ_A(α) = (D/V) ∫ dV_β |⟨β̃|α̃⟩|² |ẽ_β⟩⟨ẽ_β|`, where `|ẽ_β⟩` sits at the
//! compressed point `(qθ_β, φ_β)`. Its entropy is the entanglement generated
//! by the coherent measurement of a pure input, and equals the entropy of the
//! meter state for the same input. Holevo information for the uniform
//! ensemble is evaluated on the object (`I_A`) and on the meter (`I_B`), the
//! latter through the embedded 4×4 representation
//! `ρ̃_B = (1/V) ∫ dV_β |β̃⟩|ẽ*_β⟩⟨ẽ*_β|⟨β̃|`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::bloch::{compress, polar_rule, state_from_bloch, BlochPoint, CompressionMap, QuadratureGrid};
use crate::error::{Error, Result};
use crate::qstate::{overlap, von_neumann_entropy, ComplexMatrix, DensityMatrix, Tolerances};

/// Default node count of the polar-angle average over the input ensemble.
pub const DEFAULT_ENSEMBLE_NODES: usize = 24;

/// Per-message channel outputs with their probabilities and the average state.
#[derive(Clone, Debug)]
pub struct EnsembleChannelOutputs {
    outputs: Vec<(DensityMatrix, f64)>,
    average: DensityMatrix,
}

impl EnsembleChannelOutputs {
    /// Computes the average from the members. Probabilities must sum to 1
    /// within 1e-10.
    pub fn new(outputs: Vec<(DensityMatrix, f64)>) -> Result<Self> {
        let dim = Self::check_members(&outputs)?;
        let mut avg = ComplexMatrix::zeros(dim, dim);
        for (rho, p) in &outputs {
            avg.add_scaled(rho.matrix(), Complex64::new(*p, 0.0));
        }
        Ok(Self {
            outputs,
            average: DensityMatrix::from_matrix_unchecked(avg),
        })
    }

    /// Uses a caller-supplied average, which must agree with the members
    /// within `tol`.
    pub fn with_average(outputs: Vec<(DensityMatrix, f64)>, average: DensityMatrix, tol: f64) -> Result<Self> {
        let computed = Self::new(outputs)?;
        let diff = computed.average.matrix().max_abs_diff(average.matrix());
        if diff > tol {
            return Err(Error::InvalidParameter(format!(
                "average inconsistent with members (max deviation {diff:.3e})"
            )));
        }
        Ok(Self {
            outputs: computed.outputs,
            average,
        })
    }

    fn check_members(outputs: &[(DensityMatrix, f64)]) -> Result<usize> {
        let dim = outputs
            .first()
            .map(|(rho, _)| rho.dim())
            .ok_or_else(|| Error::InvalidParameter("empty ensemble".into()))?;
        for (rho, p) in outputs {
            if rho.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: rho.dim(),
                });
            }
            if p.is_nan() || *p < 0.0 {
                return Err(Error::InvalidParameter(format!("negative probability {p}")));
            }
        }
        let total: f64 = outputs.iter().map(|(_, p)| p).sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidParameter(format!(
                "probabilities sum to {total}, expected 1"
            )));
        }
        Ok(dim)
    }

    pub fn outputs(&self) -> &[(DensityMatrix, f64)] {
        &self.outputs
    }

    pub fn average(&self) -> &DensityMatrix {
        &self.average
    }
}

/// `S[ρ̄] − Σ p_α S[ρ(α)]` in bits.
pub fn holevo(e: &EnsembleChannelOutputs) -> Result<f64> {
    let mut member = 0.0;
    for (rho, p) in &e.outputs {
        if *p > 0.0 {
            member += p * von_neumann_entropy(rho)?;
        }
    }
    Ok(clamp_roundoff(von_neumann_entropy(&e.average)? - member))
}

/// Holevo quantities are nonnegative; cancellation can leave `-1e-15`.
fn clamp_roundoff(x: f64) -> f64 {
    if x < 0.0 && x > -1e-12 {
        0.0
    } else {
        x
    }
}

/// Object state `ρ_A(α)` after the coherent measurement of the pure input at
/// `alpha`, traced over the meter.
pub fn channel_a_output(alpha: &BlochPoint, q: &CompressionMap, grid: &QuadratureGrid) -> DensityMatrix {
    let input = state_from_bloch(alpha);
    let scale = 2.0 / grid.total_volume();
    let mut m = ComplexMatrix::zeros(2, 2);
    for (beta, w) in grid.nodes() {
        let probe = state_from_bloch(beta);
        let amp = overlap(&probe, &input).expect("qubit states").norm_sqr();
        let out = state_from_bloch(&compress(beta, q));
        m.add_scaled(&out.projector(), Complex64::new(scale * w * amp, 0.0));
    }
    DensityMatrix::from_matrix_unchecked(m)
}

/// `ρ'_A` for the input at polar angle `s` and azimuth 0.
pub fn post_measurement_object_state(s: f64, q: &CompressionMap, grid: &QuadratureGrid) -> Result<DensityMatrix> {
    Ok(channel_a_output(&BlochPoint::new(s, 0.0)?, q, grid))
}

/// Entanglement `E(s, q) = S[ρ'_A]` in bits.
pub fn entanglement(s: f64, q: &CompressionMap, grid: &QuadratureGrid) -> Result<f64> {
    von_neumann_entropy(&post_measurement_object_state(s, q, grid)?)
}

/// Ensemble average `ρ_A = (1/V) ∫ dV |ẽ⟩⟨ẽ|`.
pub fn channel_a_average(q: &CompressionMap, grid: &QuadratureGrid) -> DensityMatrix {
    let scale = 1.0 / grid.total_volume();
    let mut m = ComplexMatrix::zeros(2, 2);
    for (beta, w) in grid.nodes() {
        let out = state_from_bloch(&compress(beta, q));
        m.add_scaled(&out.projector(), Complex64::new(scale * w, 0.0));
    }
    DensityMatrix::from_matrix_unchecked(m)
}

/// Average meter state embedded in `H_A ⊗ H_A`; the conjugate is taken in
/// the computational basis.
pub fn channel_b_average_embedded(q: &CompressionMap, grid: &QuadratureGrid) -> DensityMatrix {
    let scale = 1.0 / grid.total_volume();
    let mut m = ComplexMatrix::zeros(4, 4);
    for (beta, w) in grid.nodes() {
        let probe = state_from_bloch(beta);
        let out = state_from_bloch(&compress(beta, q)).conj();
        let v = probe.tensor(&out);
        m.add_scaled(&v.projector(), Complex64::new(scale * w, 0.0));
    }
    DensityMatrix::from_matrix_unchecked(m)
}

/// `p₁ = ⟨0|ρ'_A|0⟩` for the input at `s = π`, in closed form:
/// `(3 − 2q² + cos πq) / (4(1 − q²)) − (1 − cos πq) / (4(4 − q²))`.
///
/// The first term is 0/0 at `q = 1`; within 1e-6 of it a first-order
/// expansion about the limit `1/2` is used.
pub fn p1_closed_form(q: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidParameter(format!("q = {q} outside [0, 1]")));
    }
    if q == 1.0 {
        return Ok(1.0 / 3.0);
    }
    let second = (1.0 - (PI * q).cos()) / (4.0 * (4.0 - q * q));
    let eps = 1.0 - q;
    let first = if eps < 1e-6 {
        // f(1 - ε) = 1/2 + ε π²/16 + O(ε²)
        0.5 + eps * PI * PI / 16.0
    } else {
        (3.0 - 2.0 * q * q + (PI * q).cos()) / (4.0 * (1.0 - q * q))
    };
    Ok(first - second)
}

/// Average member entropy `⟨S⟩` of `ρ_A(α)` over the uniform ensemble. The
/// entropy depends only on the polar angle of `α`, so the average is a 1D
/// Gauss–Legendre rule in `θ` with density `sin θ / 2`.
pub fn mean_member_entropy(q: &CompressionMap, grid: &QuadratureGrid, s_nodes: usize) -> Result<f64> {
    let mut total = 0.0;
    for (theta, w) in polar_rule(s_nodes) {
        total += 0.5 * w * entanglement(theta, q, grid)?;
    }
    Ok(total)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HolevoPoint {
    pub q: f64,
    /// Information about the ensemble left in the object, bits.
    pub object: f64,
    /// Information transferred to the meter, bits.
    pub meter: f64,
}

/// `(I_A, I_B)` at one compression coefficient. Both channels share the
/// member-entropy average since `S[ρ_B(α)] = S[ρ_A(α)]`.
pub fn holevo_pair(q: &CompressionMap, grid: &QuadratureGrid, s_nodes: usize) -> Result<HolevoPoint> {
    if s_nodes < 8 {
        return Err(Error::InvalidParameter(format!(
            "ensemble average needs at least 8 nodes, got {s_nodes}"
        )));
    }
    let mean = mean_member_entropy(q, grid, s_nodes)?;
    let s_a = von_neumann_entropy(&channel_a_average(q, grid))?;
    let s_b = von_neumann_entropy(&channel_b_average_embedded(q, grid))?;
    Ok(HolevoPoint {
        q: q.q(),
        object: clamp_roundoff(s_a - mean),
        meter: clamp_roundoff(s_b - mean),
    })
}

/// Holevo pairs over a sequence of `q`, evaluated in parallel and returned in
/// input order.
pub fn holevo_curves(q_values: &[f64], grid: &QuadratureGrid, s_nodes: usize) -> Result<Vec<HolevoPoint>> {
    let maps = q_values
        .iter()
        .map(|&q| CompressionMap::new(q))
        .collect::<Result<Vec<_>>>()?;
    maps.par_iter().map(|m| holevo_pair(m, grid, s_nodes)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EntanglementPoint {
    pub s: f64,
    pub q: f64,
    pub bits: f64,
}

/// `E(s, q)` over the product grid, `s` outer, in parallel.
pub fn entanglement_surface(
    s_values: &[f64],
    q_values: &[f64],
    grid: &QuadratureGrid,
) -> Result<Vec<EntanglementPoint>> {
    let pairs: Vec<(f64, f64)> = s_values
        .iter()
        .flat_map(|&s| q_values.iter().map(move |&q| (s, q)))
        .collect();
    pairs
        .par_iter()
        .map(|&(s, q)| {
            let bits = entanglement(s, &CompressionMap::new(q)?, grid)?;
            Ok(EntanglementPoint { s, q, bits })
        })
        .collect()
}

/// Golden-section search for the maximum of `E(s, ·)` on `bracket`, refined to
/// `|Δq| < 1e-4`. Fails with [`Error::NotBracketed`] when the maximum lands on
/// an endpoint.
pub fn maximize_entanglement(s: f64, grid: &QuadratureGrid, bracket: (f64, f64)) -> Result<(f64, f64)> {
    const TOL: f64 = 1e-4;
    let (lo, hi) = bracket;
    let eval = |q: f64| -> Result<f64> { entanglement(s, &CompressionMap::new(q)?, grid) };
    if lo > hi {
        return Err(Error::InvalidParameter(format!("empty bracket [{lo}, {hi}]")));
    }
    if lo == hi {
        return Ok((lo, eval(lo)?));
    }
    CompressionMap::new(lo)?;
    CompressionMap::new(hi)?;

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = eval(c)?;
    let mut fd = eval(d)?;
    while b - a > TOL {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = eval(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = eval(d)?;
        }
    }
    let q_star = 0.5 * (a + b);
    if q_star - lo < TOL || hi - q_star < TOL {
        return Err(Error::NotBracketed { lo, hi });
    }
    Ok((q_star, eval(q_star)?))
}

/// Validates a channel output against the default density-matrix tolerances.
pub fn validate(rho: DensityMatrix) -> Result<DensityMatrix> {
    DensityMatrix::with_tolerances(rho.into_matrix(), &Tolerances::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bloch::build_grid;
    use crate::qstate::{partial_trace, Keep, PureState};

    fn cm(q: f64) -> CompressionMap {
        CompressionMap::new(q).unwrap()
    }

    #[test]
    fn depolarized_output_at_q1() {
        let grid = build_grid(48, 24).unwrap();
        for (s, phi) in [(0.4, 0.0), (2.0, 1.1), (PI, 0.0)] {
            let alpha = BlochPoint::new(s, phi).unwrap();
            let rho = channel_a_output(&alpha, &cm(1.0), &grid);
            let a = state_from_bloch(&alpha).projector();
            let expected = &a.scale_real(1.0 / 3.0) + &ComplexMatrix::identity(2).scale_real(1.0 / 3.0);
            assert!(rho.matrix().approx_eq(&expected, 1e-12));
        }
    }

    #[test]
    fn collapsed_output_at_q0() {
        let grid = build_grid(32, 16).unwrap();
        let rho = post_measurement_object_state(1.2, &cm(0.0), &grid).unwrap();
        assert!(rho.matrix().approx_eq(&PureState::basis(2, 0).projector(), 1e-12));
        assert!(entanglement(1.2, &cm(0.0), &grid).unwrap().abs() < 1e-10);
    }

    #[test]
    fn s_pi_state_is_diagonal() {
        let grid = build_grid(32, 4).unwrap();
        for q in [0.2, 0.5, 0.9] {
            let rho = post_measurement_object_state(PI, &cm(q), &grid).unwrap();
            assert!(rho.matrix()[(0, 1)].norm() < 1e-14);
            let p1 = p1_closed_form(q).unwrap();
            assert!((rho.matrix()[(0, 0)].re - p1).abs() < 1e-12);
        }
    }

    #[test]
    fn p1_anchor_values() {
        assert_eq!(p1_closed_form(0.0).unwrap(), 1.0);
        assert_eq!(p1_closed_form(1.0).unwrap(), 1.0 / 3.0);
        assert!((p1_closed_form(0.7978).unwrap() - 0.5).abs() < 2e-4);
        assert!(p1_closed_form(1.5).is_err());
        // the two branches meet continuously
        let a = p1_closed_form(1.0 - 1.0001e-6).unwrap();
        let b = p1_closed_form(1.0 - 0.9999e-6).unwrap();
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn holevo_reference_ensembles() {
        let z0 = PureState::basis(2, 0).to_density();
        let z1 = PureState::basis(2, 1).to_density();
        let e = EnsembleChannelOutputs::new(vec![(z0.clone(), 0.5), (z1, 0.5)]).unwrap();
        assert!((holevo(&e).unwrap() - 1.0).abs() < 1e-12);
        let e = EnsembleChannelOutputs::new(vec![(z0.clone(), 0.3), (z0.clone(), 0.7)]).unwrap();
        assert!(holevo(&e).unwrap().abs() < 1e-12);
        assert!(EnsembleChannelOutputs::new(vec![(z0.clone(), 0.3)]).is_err());
        let bad_avg = DensityMatrix::maximally_mixed(2);
        assert!(EnsembleChannelOutputs::with_average(vec![(z0, 1.0)], bad_avg, 1e-12).is_err());
    }

    #[test]
    fn uniform_pure_ensemble_identity_channel() {
        let grid = build_grid(16, 8).unwrap();
        let outputs: Vec<(DensityMatrix, f64)> = grid
            .nodes()
            .iter()
            .map(|(p, w)| (state_from_bloch(p).to_density(), w / grid.total_volume()))
            .collect();
        let e = EnsembleChannelOutputs::new(outputs).unwrap();
        assert!((holevo(&e).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn embedded_meter_limits() {
        let grid = build_grid(64, 32).unwrap();
        let rho = channel_b_average_embedded(&cm(0.0), &grid);
        let expected = DensityMatrix::maximally_mixed(2).tensor(&PureState::basis(2, 0).to_density());
        assert!(rho.matrix().approx_eq(expected.matrix(), 1e-12));
        assert!((von_neumann_entropy(&rho).unwrap() - 1.0).abs() < 1e-10);
        let rho1 = validate(channel_b_average_embedded(&cm(1.0), &grid)).unwrap();
        assert!((rho1.matrix().trace().re - 1.0).abs() < 1e-10);
        // the meter marginal of the embedding is ρ_A*, the object marginal is I/2
        let tr = partial_trace(&rho1, (2, 2), Keep::First).unwrap();
        assert!(tr.matrix().approx_eq(DensityMatrix::maximally_mixed(2).matrix(), 1e-12));
    }

    #[test]
    fn maximize_degenerate_bracket() {
        let grid = build_grid(24, 2).unwrap();
        let (q, e) = maximize_entanglement(PI, &grid, (0.6, 0.6)).unwrap();
        assert_eq!(q, 0.6);
        assert_eq!(e, entanglement(PI, &cm(0.6), &grid).unwrap());
        assert!(maximize_entanglement(PI, &grid, (0.9, 0.5)).is_err());
    }

    #[test]
    fn holevo_requires_enough_ensemble_nodes() {
        let grid = build_grid(8, 4).unwrap();
        assert!(holevo_pair(&cm(0.5), &grid, 4).is_err());
    }
}
