//! Bloch-sphere geometry for a qubit and the quadrature that discretizes the
//! continual nonselected measurement.
//!
//! States are parameterized as `cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩`. The
//! compression map sends `(θ, φ)` to `(qθ, φ)`, so at `q = 0` every output
//! collapses to `|0⟩`.
//!
//! The grid uses Gauss–Legendre nodes in `θ` on `[0, π]` with the `sin θ`
//! Jacobian folded into the weights, and a uniform periodic grid in `φ`.
//! Nodes never sit on the poles.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::measurement::{MeasurementEntry, MeasurementSpec};
use crate::qstate::PureState;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlochPoint {
    theta: f64,
    phi: f64,
}

impl BlochPoint {
    /// `theta` must lie in `[0, π]`; `phi` is reduced modulo `2π`.
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !(0.0..=PI).contains(&theta) {
            return Err(Error::InvalidParameter(format!("polar angle {theta} outside [0, π]")));
        }
        if !phi.is_finite() {
            return Err(Error::InvalidParameter(format!("azimuth {phi} is not finite")));
        }
        Ok(Self {
            theta,
            phi: phi.rem_euclid(TAU),
        })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// Unit vector `(sinθ cosφ, sinθ sinφ, cosθ)`.
    pub fn unit_vector(&self) -> [f64; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [st * cp, st * sp, ct]
    }

    /// Same point with `Δφ` added to the azimuth.
    pub fn rotated(&self, delta_phi: f64) -> Self {
        Self {
            theta: self.theta,
            phi: (self.phi + delta_phi).rem_euclid(TAU),
        }
    }
}

/// `θ → qθ` with `0 ≤ q ≤ 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CompressionMap {
    q: f64,
}

impl CompressionMap {
    pub fn new(q: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::InvalidParameter(format!(
                "compression coefficient {q} outside [0, 1]"
            )));
        }
        Ok(Self { q })
    }

    pub fn q(&self) -> f64 {
        self.q
    }
}

pub fn state_from_bloch(p: &BlochPoint) -> PureState {
    let (s, c) = (0.5 * p.theta).sin_cos();
    PureState::from_raw(vec![Complex64::new(c, 0.0), Complex64::from_polar(s, p.phi)])
}

pub fn compress(p: &BlochPoint, m: &CompressionMap) -> BlochPoint {
    BlochPoint {
        theta: m.q * p.theta,
        phi: p.phi,
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss–Legendre rule mapped to `[0, π]` in `θ` with weights `w_i sinθ_i`,
/// so that `Σ w f(θ)` approximates `∫₀^π f(θ) sinθ dθ`.
pub fn polar_rule(n: usize) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(n);
    x.iter()
        .zip(&w)
        .map(|(&xi, &wi)| {
            let theta = 0.5 * PI * (xi + 1.0);
            (theta, 0.5 * PI * wi * theta.sin())
        })
        .collect()
}

/// Weighted node set on the Bloch sphere; `Σ w = 4π`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureGrid {
    theta_nodes: usize,
    phi_nodes: usize,
    nodes: Vec<(BlochPoint, f64)>,
}

impl QuadratureGrid {
    pub fn theta_nodes(&self) -> usize {
        self.theta_nodes
    }

    pub fn phi_nodes(&self) -> usize {
        self.phi_nodes
    }

    pub fn nodes(&self) -> &[(BlochPoint, f64)] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Sphere area `V = 4π`.
    pub fn total_volume(&self) -> f64 {
        4.0 * PI
    }

    pub fn weight_sum(&self) -> f64 {
        self.nodes.iter().map(|(_, w)| w).sum()
    }

    /// `∫ f dV`.
    pub fn integrate(&self, f: impl Fn(&BlochPoint) -> f64) -> f64 {
        self.nodes.iter().map(|(p, w)| w * f(p)).sum()
    }

    /// Copy with every node's azimuth shifted by `delta_phi`.
    pub fn rotated(&self, delta_phi: f64) -> Self {
        Self {
            nodes: self.nodes.iter().map(|(p, w)| (p.rotated(delta_phi), *w)).collect(),
            ..self.clone()
        }
    }
}

pub fn build_grid(theta_nodes: usize, phi_nodes: usize) -> Result<QuadratureGrid> {
    if theta_nodes < 2 || phi_nodes < 1 {
        return Err(Error::InvalidParameter(format!(
            "grid needs theta_nodes >= 2 and phi_nodes >= 1, got {theta_nodes}x{phi_nodes}"
        )));
    }
    let dphi = TAU / phi_nodes as f64;
    let mut nodes = Vec::with_capacity(theta_nodes * phi_nodes);
    for (theta, wt) in polar_rule(theta_nodes) {
        for j in 0..phi_nodes {
            nodes.push((
                BlochPoint {
                    theta,
                    phi: j as f64 * dphi,
                },
                wt * dphi,
            ));
        }
    }
    Ok(QuadratureGrid {
        theta_nodes,
        phi_nodes,
        nodes,
    })
}

/// Discretized nonselected measurement: probes at each grid node, outputs at
/// the compressed node, weights `ν = D w / V`. Completeness holds only up to
/// the grid resolution; inspect [`MeasurementSpec::completeness_deviation`].
pub fn continuum_measurement(q: &CompressionMap, grid: &QuadratureGrid, dim: usize) -> Result<MeasurementSpec> {
    if dim != 2 {
        return Err(Error::InvalidParameter(format!(
            "Bloch-sphere grids exist only for D = 2, got {dim}"
        )));
    }
    let scale = dim as f64 / grid.total_volume();
    let entries = grid
        .nodes
        .iter()
        .map(|(p, w)| MeasurementEntry::new(state_from_bloch(p), state_from_bloch(&compress(p, q)), scale * w))
        .collect();
    MeasurementSpec::assemble(dim, entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::overlap;

    #[test]
    fn poles_map_to_basis_states() {
        let z0 = state_from_bloch(&BlochPoint::new(0.0, 1.3).unwrap());
        assert_eq!(z0.amplitudes()[0], Complex64::new(1.0, 0.0));
        assert_eq!(z0.amplitudes()[1].norm(), 0.0);
        let z1 = state_from_bloch(&BlochPoint::new(PI, 0.0).unwrap());
        assert!(z1.amplitudes()[0].norm() < 1e-16);
        assert!((z1.amplitudes()[1] - Complex64::new(1.0, 0.0)).norm() < 1e-16);
    }

    #[test]
    fn overlap_matches_angle_between_points() {
        let pts = [(0.3, 0.2, 2.1, 4.0), (1.0, 5.0, 1.0, 0.1), (PI, 0.0, 0.0, 0.0)];
        for (t1, p1, t2, p2) in pts {
            let a = BlochPoint::new(t1, p1).unwrap();
            let b = BlochPoint::new(t2, p2).unwrap();
            let (u, v) = (a.unit_vector(), b.unit_vector());
            let cos_angle: f64 = u.iter().zip(&v).map(|(x, y)| x * y).sum();
            let ov = overlap(&state_from_bloch(&a), &state_from_bloch(&b)).unwrap();
            assert!((ov.norm_sqr() - 0.5 * (1.0 + cos_angle)).abs() < 1e-14);
        }
    }

    #[test]
    fn invalid_points_and_maps() {
        assert!(BlochPoint::new(-0.1, 0.0).is_err());
        assert!(BlochPoint::new(3.5, 0.0).is_err());
        assert!((BlochPoint::new(1.0, -1.0).unwrap().phi() - (TAU - 1.0)).abs() < 1e-15);
        assert!(CompressionMap::new(1.01).is_err());
        assert!(CompressionMap::new(-0.01).is_err());
    }

    #[test]
    fn compression_examples() {
        let p = BlochPoint::new(PI, 0.7).unwrap();
        assert_eq!(compress(&p, &CompressionMap::new(1.0).unwrap()), p);
        let z = compress(&p, &CompressionMap::new(0.0).unwrap());
        assert_eq!((z.theta(), z.phi()), (0.0, 0.7));
        assert_eq!(compress(&p, &CompressionMap::new(0.5).unwrap()).theta(), PI / 2.0);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(5);
        // exact through degree 9
        for k in 0..10 {
            let approx: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(k)).sum();
            let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
            assert!((approx - exact).abs() < 1e-14, "degree {k}");
        }
        assert!(x.windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn grid_integrals() {
        let g = build_grid(16, 8).unwrap();
        assert!((g.integrate(|_| 1.0) - 4.0 * PI).abs() < 1e-12);
        assert!(g.integrate(|p| p.theta().cos()).abs() < 1e-12);
        let half = g.integrate(|p| (0.5 * p.theta()).cos().powi(2)) / g.total_volume();
        assert!((half - 0.5).abs() < 1e-12);
        assert!(g
            .nodes()
            .iter()
            .all(|(p, w)| *w >= 0.0 && p.theta() > 0.0 && p.theta() < PI));
    }

    #[test]
    fn grid_rejects_bad_counts() {
        assert!(build_grid(1, 4).is_err());
        assert!(build_grid(4, 0).is_err());
    }

    #[test]
    fn continuum_spec_weights_and_identity_map() {
        let grid = build_grid(64, 32).unwrap();
        let spec = continuum_measurement(&CompressionMap::new(1.0).unwrap(), &grid, 2).unwrap();
        assert!(spec.entries().iter().all(|e| e.probe == e.output));
        assert!((spec.total_weight() - 2.0).abs() < 1e-10);
        assert!(spec.completeness_deviation() < 1e-8);
        assert!(continuum_measurement(&CompressionMap::new(1.0).unwrap(), &grid, 3).is_err());
    }
}
