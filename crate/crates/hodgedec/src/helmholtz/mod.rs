//! Weighted Hodge-Helmholtz decomposition on truncated exterior shells.
//!
//! The domain is the shell `r0 < |x| < R` outside a ball obstacle, discretized
//! by a geometric radial grid (constant node ratio, so dyadic far-field radii
//! are resolved with few nodes) times a Gauss-Legendre-by-uniform angular
//! grid. Vector fields are stored in the Cartesian frame and differentiated
//! through the polar splits
//!
//! ```text
//! grad u = e_r du/dr + (1/r) grad_S u
//! div  v = e_r . dv/dr + (1/r) div_S v
//! curl v = e_r x dv/dr + (1/r) curl_S v
//! ```
//!
//! The decomposition itself solves the weak problem: find a potential `u`
//! vanishing on both boundary spheres (inner: the electric boundary
//! condition; outer: a truncation surrogate for decay) with
//! `<eps rho^{2s} grad u, grad phi> = <eps rho^{2s} F, grad phi>` for all test
//! potentials, then splits `F = grad u + (F - grad u)`. The remainder is
//! weighted-solenoidal in the discrete weak sense and the two parts are
//! orthogonal in the `<eps rho^{2s} ., .>` product up to the solver residual.
//!
//! For weights `s > 3/2` the plain split misses a finite-dimensional space;
//! the correction machinery in [`solve`] builds it from cut-off harmonic
//! potential towers and removes it first via duality pairing.

pub mod io;
pub mod ops;
pub mod solve;

pub use io::{read_scalar_csv, read_vector_csv, write_scalar_csv, write_vector_csv};
pub use ops::{
    discrete_curl, discrete_div, discrete_grad, grid_inner_scalar, grid_inner_vector,
    weighted_vector_inner, weighted_vector_norm,
};
pub use solve::{
    build_correction_basis, compute_dirichlet_field, cutoff_commutator_flux,
    decompose_with_correction, extract_correction_coefficients, growing_dirichlet_field,
    growing_dirichlet_indices, project_off_dirichlet, radial_dirichlet_oracle, weighted_decompose,
    CorrectionBasis,
};

use crate::geom::{Mat3, Vec3};
use crate::spaces::{self, SpaceError};
use crate::sphere::gauss_legendre;
use crate::sphere::{build_quadrature, Direction, SphereQuadrature};
use crate::towers::{TowerError, TowerIndex};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HelmholtzError {
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Tower(#[from] TowerError),
    #[error("invalid shell grid: {reason}")]
    InvalidGrid { reason: String },
    #[error("invalid cutoff: {reason}")]
    InvalidCutoff { reason: String },
    #[error("medium is not admissible: {reason}")]
    InadmissibleMedium { reason: String },
    #[error(
        "iterative solver exceeded {iterations} iterations (relative residual {residual:.3e})"
    )]
    SolverDiverged { iterations: usize, residual: f64 },
    #[error("correction basis at weight s = {s} is empty; use the plain decomposition")]
    EmptyBasis { s: f64 },
    #[error("correction Gram matrix is singular (basis/witness mismatch)")]
    SingularGram,
    #[error("field has {got} samples but the grid has {expected} nodes")]
    FieldSizeMismatch { expected: usize, got: usize },
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Truncated exterior shell `r0 < |x| < R` with a geometric radial grid and a
/// tensor angular grid matching [`build_quadrature`] of degree `n_ang`
/// (latitudes are Gauss-Legendre in `sin(theta)`, so no node touches a pole).
///
/// Node numbering: `index = ir * n_sphere + a` with `a = it * n_phi + ip`,
/// latitude-major, identical to the sphere quadrature's node order.
#[derive(Debug, Clone)]
pub struct ShellGrid {
    r0: f64,
    big_r: f64,
    n_r: usize,
    n_ang: u32,
    radii: Vec<f64>,
    radial_weights: Vec<f64>,
    thetas: Vec<f64>,
    phis: Vec<f64>,
    quad: SphereQuadrature,
}

impl ShellGrid {
    /// `n_ang` is the angular degree: `n_ang + 1` latitudes,
    /// `2 (n_ang + 1)` longitudes.
    pub fn new(r0: f64, big_r: f64, n_r: usize, n_ang: u32) -> Result<Self, HelmholtzError> {
        if !(r0 > 0.0 && r0.is_finite() && big_r.is_finite()) {
            return Err(HelmholtzError::InvalidGrid {
                reason: format!("need r0 > 0, got {r0}"),
            });
        }
        if big_r < 16.0 * r0 {
            return Err(HelmholtzError::InvalidGrid {
                reason: format!("need R >= 16 r0, got R = {big_r}, r0 = {r0}"),
            });
        }
        if n_r < 16 {
            return Err(HelmholtzError::InvalidGrid {
                reason: format!("need at least 16 radial nodes, got {n_r}"),
            });
        }
        if n_ang < 2 {
            return Err(HelmholtzError::InvalidGrid {
                reason: format!("need angular degree >= 2, got {n_ang}"),
            });
        }
        let ratio = (big_r / r0).powf(1.0 / (n_r as f64 - 1.0));
        let radii: Vec<f64> = (0..n_r).map(|i| r0 * ratio.powi(i as i32)).collect();
        // trapezoidal weights on the nonuniform radial nodes
        let mut radial_weights = vec![0.0; n_r];
        for i in 0..n_r {
            let lo = if i == 0 { radii[0] } else { radii[i - 1] };
            let hi = if i == n_r - 1 {
                radii[n_r - 1]
            } else {
                radii[i + 1]
            };
            radial_weights[i] = 0.5 * (hi - lo);
        }
        let quad = build_quadrature(n_ang);
        let n_theta = (n_ang + 1) as usize;
        let (ts, _) = gauss_legendre(n_theta);
        let thetas: Vec<f64> = ts.iter().map(|t| t.asin()).collect();
        let n_phi = 2 * n_theta;
        let phis: Vec<f64> = (0..n_phi)
            .map(|i| 2.0 * std::f64::consts::PI * i as f64 / n_phi as f64)
            .collect();
        Ok(ShellGrid {
            r0,
            big_r,
            n_r,
            n_ang,
            radii,
            radial_weights,
            thetas,
            phis,
            quad,
        })
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    pub fn outer_radius(&self) -> f64 {
        self.big_r
    }

    pub fn n_r(&self) -> usize {
        self.n_r
    }

    pub fn n_ang(&self) -> u32 {
        self.n_ang
    }

    pub fn n_theta(&self) -> usize {
        self.thetas.len()
    }

    pub fn n_phi(&self) -> usize {
        self.phis.len()
    }

    pub fn n_sphere(&self) -> usize {
        self.quad.nodes().len()
    }

    pub fn n_nodes(&self) -> usize {
        self.n_r * self.n_sphere()
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn phis(&self) -> &[f64] {
        &self.phis
    }

    pub fn quadrature(&self) -> &SphereQuadrature {
        &self.quad
    }

    /// Split a node index into (radial, latitude, longitude) components.
    pub fn split_index(&self, idx: usize) -> (usize, usize, usize) {
        let a = idx % self.n_sphere();
        (idx / self.n_sphere(), a / self.n_phi(), a % self.n_phi())
    }

    pub fn node_index(&self, ir: usize, it: usize, ip: usize) -> usize {
        (ir * self.n_theta() + it) * self.n_phi() + ip
    }

    pub fn node_direction(&self, idx: usize) -> &Direction {
        &self.quad.nodes()[idx % self.n_sphere()]
    }

    pub fn node_radius(&self, idx: usize) -> f64 {
        self.radii[idx / self.n_sphere()]
    }

    pub fn node_position(&self, idx: usize) -> Vec3 {
        self.node_radius(idx) * self.node_direction(idx).unit()
    }

    /// Volume quadrature weight of the node (trapezoidal in r, exact Gauss
    /// weights on the sphere): `sum_i node_weight(i) f(x_i) ~ int f dx`.
    pub fn node_weight(&self, idx: usize) -> f64 {
        let r = self.node_radius(idx);
        self.radial_weights[idx / self.n_sphere()]
            * r
            * r
            * self.quad.weights()[idx % self.n_sphere()]
    }
}

/// Scalar samples at every grid node.
#[derive(Debug, Clone, PartialEq)]
pub struct GridScalarField {
    values: Vec<f64>,
}

impl GridScalarField {
    pub fn zeros(grid: &ShellGrid) -> Self {
        GridScalarField {
            values: vec![0.0; grid.n_nodes()],
        }
    }

    pub fn from_fn(grid: &ShellGrid, f: impl Fn(Vec3) -> f64) -> Self {
        GridScalarField {
            values: (0..grid.n_nodes())
                .map(|i| f(grid.node_position(i)))
                .collect(),
        }
    }

    pub fn from_values(grid: &ShellGrid, values: Vec<f64>) -> Result<Self, HelmholtzError> {
        if values.len() != grid.n_nodes() {
            return Err(HelmholtzError::FieldSizeMismatch {
                expected: grid.n_nodes(),
                got: values.len(),
            });
        }
        Ok(GridScalarField { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn add_scaled(&mut self, c: f64, other: &GridScalarField) {
        assert_eq!(self.values.len(), other.values.len());
        for (a, b) in self.values.iter_mut().zip(other.values.iter()) {
            *a += c * b;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }
}

/// Cartesian-frame vector samples at every grid node.
#[derive(Debug, Clone, PartialEq)]
pub struct GridVectorField {
    values: Vec<Vec3>,
}

impl GridVectorField {
    pub fn zeros(grid: &ShellGrid) -> Self {
        GridVectorField {
            values: vec![Vec3::ZERO; grid.n_nodes()],
        }
    }

    pub fn from_fn(grid: &ShellGrid, f: impl Fn(Vec3) -> Vec3) -> Self {
        GridVectorField {
            values: (0..grid.n_nodes())
                .map(|i| f(grid.node_position(i)))
                .collect(),
        }
    }

    pub fn from_values(grid: &ShellGrid, values: Vec<Vec3>) -> Result<Self, HelmholtzError> {
        if values.len() != grid.n_nodes() {
            return Err(HelmholtzError::FieldSizeMismatch {
                expected: grid.n_nodes(),
                got: values.len(),
            });
        }
        Ok(GridVectorField { values })
    }

    pub fn values(&self) -> &[Vec3] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Vec3] {
        &mut self.values
    }

    pub fn add_scaled(&mut self, c: f64, other: &GridVectorField) {
        assert_eq!(self.values.len(), other.values.len());
        for (a, b) in self.values.iter_mut().zip(other.values.iter()) {
            *a += c * *b;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc.max(v.max_abs()))
    }
}

/// Radii of the cutoff transition zone; the profile is 0 below `r1` and 1
/// above `r2`. Valid against a grid when `r0 < r1 < r2 <= R/2`, which leaves
/// room between the transition zone and the truncation boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffSpec {
    pub r1: f64,
    pub r2: f64,
}

impl CutoffSpec {
    pub fn validate(&self, grid: &ShellGrid) -> Result<(), HelmholtzError> {
        if !(grid.r0() < self.r1 && self.r1 < self.r2 && self.r2 <= grid.outer_radius() / 2.0) {
            return Err(HelmholtzError::InvalidCutoff {
                reason: format!(
                    "need r0 < r1 < r2 <= R/2, got r0 = {}, r1 = {}, r2 = {}, R = {}",
                    grid.r0(),
                    self.r1,
                    self.r2,
                    grid.outer_radius()
                ),
            });
        }
        Ok(())
    }
}

/// C2 radial cutoff: quintic smoothstep `6u^5 - 15u^4 + 10u^3` in the
/// normalized variable `u = (r - r1)/(r2 - r1)`.
#[derive(Debug, Clone, Copy)]
pub struct Cutoff {
    r1: f64,
    r2: f64,
}

pub fn make_cutoff(spec: &CutoffSpec) -> Cutoff {
    assert!(spec.r2 > spec.r1, "cutoff radii must be ordered");
    Cutoff {
        r1: spec.r1,
        r2: spec.r2,
    }
}

impl Cutoff {
    /// `(eta, eta', eta'')` at radius `r`; identically `(0,0,0)` below `r1`
    /// and `(1,0,0)` above `r2`.
    pub fn eval(&self, r: f64) -> (f64, f64, f64) {
        if r <= self.r1 {
            return (0.0, 0.0, 0.0);
        }
        if r >= self.r2 {
            return (1.0, 0.0, 0.0);
        }
        let w = self.r2 - self.r1;
        let u = (r - self.r1) / w;
        let eta = ((6.0 * u - 15.0) * u + 10.0) * u * u * u;
        let d1 = ((30.0 * u - 60.0) * u + 30.0) * u * u;
        let d2 = ((120.0 * u - 180.0) * u + 60.0) * u;
        (eta, d1 / w, d2 / (w * w))
    }

    pub fn value(&self, r: f64) -> f64 {
        self.eval(r).0
    }

    pub fn r1(&self) -> f64 {
        self.r1
    }

    pub fn r2(&self) -> f64 {
        self.r2
    }
}

/// The medium tensor `eps`. All variants are symmetric and uniformly positive
/// definite on the shell; the perturbation decays like `r^{-tau}` and `tau`
/// must satisfy the weight-dependent admissibility inequalities.
#[derive(Clone)]
pub enum Medium {
    /// `eps = Id` (vacuum); admissible for every valid weight.
    Identity,
    /// `eps(x) = (1 + c (1 + r^2)^{-tau/2}) Id`.
    RadialIsotropic { c: f64, tau: f64 },
    /// Arbitrary symmetric positive definite tensor field; `tau` is the
    /// caller-declared decay rate of `eps - Id` used for admissibility.
    General {
        tensor: Arc<dyn Fn(Vec3) -> Mat3 + Send + Sync>,
        tau: f64,
    },
}

impl std::fmt::Debug for Medium {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Medium::Identity => write!(f, "Medium::Identity"),
            Medium::RadialIsotropic { c, tau } => {
                write!(f, "Medium::RadialIsotropic {{ c: {c}, tau: {tau} }}")
            }
            Medium::General { tau, .. } => write!(f, "Medium::General {{ tau: {tau}, .. }}"),
        }
    }
}

impl Medium {
    pub fn tensor_at(&self, x: Vec3) -> Mat3 {
        match self {
            Medium::Identity => Mat3::IDENTITY,
            Medium::RadialIsotropic { c, tau } => {
                Mat3::scale(1.0 + c * (1.0 + x.norm_squared()).powf(-tau / 2.0))
            }
            Medium::General { tensor, .. } => tensor(x),
        }
    }

    pub fn inverse_at(&self, x: Vec3) -> Mat3 {
        match self {
            Medium::Identity => Mat3::IDENTITY,
            Medium::RadialIsotropic { c, tau } => {
                Mat3::scale(1.0 / (1.0 + c * (1.0 + x.norm_squared()).powf(-tau / 2.0)))
            }
            Medium::General { tensor, .. } => tensor(x).inverse(),
        }
    }

    /// Declared decay rate of `eps - Id` (infinite for the identity).
    pub fn decay_rate(&self) -> f64 {
        match self {
            Medium::Identity => f64::INFINITY,
            Medium::RadialIsotropic { tau, .. } | Medium::General { tau, .. } => *tau,
        }
    }

    /// Check tau-admissibility at weight `s` plus uniform positivity on
    /// `r >= r0` (for the radial profile the minimum sits at `r0` when the
    /// amplitude is negative).
    pub fn validate(&self, s: f64, r0: f64) -> Result<(), HelmholtzError> {
        match self {
            Medium::Identity => Ok(()),
            Medium::RadialIsotropic { c, tau } => {
                if !spaces::check_admissibility(*tau, s, spaces::AdmissibilityRole::Epsilon) {
                    return Err(HelmholtzError::InadmissibleMedium {
                        reason: format!("decay rate tau = {tau} fails the weight-s = {s} bounds"),
                    });
                }
                let floor = 1.0 + c * (1.0 + r0 * r0).powf(-tau / 2.0);
                if floor.min(1.0) <= 1e-6 {
                    return Err(HelmholtzError::InadmissibleMedium {
                        reason: format!("radial profile not uniformly positive (min {floor:.3e})"),
                    });
                }
                Ok(())
            }
            Medium::General { tau, .. } => {
                if !spaces::check_admissibility(*tau, s, spaces::AdmissibilityRole::Epsilon) {
                    return Err(HelmholtzError::InadmissibleMedium {
                        reason: format!("decay rate tau = {tau} fails the weight-s = {s} bounds"),
                    });
                }
                Ok(())
            }
        }
    }
}

/// Coefficients and sampled field of the finite-dimensional correction part.
#[derive(Debug, Clone)]
pub struct CorrectionPart {
    pub indices: Vec<TowerIndex>,
    pub coefficients: Vec<f64>,
    pub field: GridVectorField,
}

/// Solver and consistency diagnostics of a decomposition run.
#[derive(Debug, Clone, Copy)]
pub struct Diagnostics {
    /// `|<eps rho^{2s} grad_part, sol_part>| / ||F||_s^2`.
    pub orthogonality_residual: f64,
    /// Relative weak-divergence residual of the weighted solenoidal part
    /// (the final solver residual).
    pub weak_divergence_residual: f64,
    /// Conjugate-gradient iterations used.
    pub iterations: usize,
    /// `max |grad + sol (+ correction) - F|`; zero by construction.
    pub reconstruction_error: f64,
}

/// Output of [`weighted_decompose`] / [`decompose_with_correction`]:
/// `F = grad_part + sol_part (+ correction.field)` exactly.
#[derive(Debug, Clone)]
pub struct DecompositionResult {
    pub grad_part: GridVectorField,
    pub sol_part: GridVectorField,
    pub correction: Option<CorrectionPart>,
    pub potential: GridScalarField,
    pub diagnostics: Diagnostics,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn grid_guards() {
        assert!(ShellGrid::new(1.0, 32.0, 32, 4).is_ok());
        assert!(matches!(
            ShellGrid::new(1.0, 8.0, 32, 4),
            Err(HelmholtzError::InvalidGrid { .. })
        ));
        assert!(matches!(
            ShellGrid::new(1.0, 32.0, 8, 4),
            Err(HelmholtzError::InvalidGrid { .. })
        ));
        assert!(matches!(
            ShellGrid::new(-1.0, 32.0, 32, 4),
            Err(HelmholtzError::InvalidGrid { .. })
        ));
    }

    #[test]
    fn grid_geometry() {
        let grid = ShellGrid::new(1.0, 32.0, 21, 3).unwrap();
        assert_eq!(grid.radii().first().copied(), Some(1.0));
        assert_relative_eq!(
            grid.radii().last().copied().unwrap(),
            32.0,
            max_relative = 1e-12
        );
        // constant node ratio
        let ratio = grid.radii()[1] / grid.radii()[0];
        for w in grid.radii().windows(2) {
            assert_relative_eq!(w[1] / w[0], ratio, max_relative = 1e-12);
        }
        // node order matches the sphere quadrature
        for idx in [0usize, 7, grid.n_sphere() + 3, 5 * grid.n_sphere() + 11] {
            let (ir, it, ip) = grid.split_index(idx);
            assert_eq!(grid.node_index(ir, it, ip), idx);
            let dir = grid.node_direction(idx);
            assert_relative_eq!(dir.theta(), grid.thetas()[it], max_relative = 1e-12);
            assert_relative_eq!(dir.phi(), grid.phis()[ip], max_relative = 1e-12);
        }
        // volume weights integrate the constant 1 to the shell volume
        let volume: f64 = (0..grid.n_nodes()).map(|i| grid.node_weight(i)).sum();
        let exact = 4.0 / 3.0 * std::f64::consts::PI * (32.0_f64.powi(3) - 1.0);
        // trapezoidal radial rule on 21 geometric nodes is crude but sane
        assert_relative_eq!(volume, exact, max_relative = 2e-2);
    }

    #[test]
    fn field_size_checks() {
        let grid = ShellGrid::new(1.0, 32.0, 16, 2).unwrap();
        assert!(GridScalarField::from_values(&grid, vec![0.0; 3]).is_err());
        let f = GridVectorField::from_fn(&grid, |x| x);
        assert_eq!(f.values().len(), grid.n_nodes());
    }

    #[test]
    fn cutoff_endpoints_and_symmetry() {
        let cut = make_cutoff(&CutoffSpec { r1: 2.0, r2: 8.0 });
        assert_eq!(cut.eval(1.0), (0.0, 0.0, 0.0));
        assert_eq!(cut.eval(2.0), (0.0, 0.0, 0.0));
        assert_eq!(cut.eval(8.0), (1.0, 0.0, 0.0));
        assert_eq!(cut.eval(10.0), (1.0, 0.0, 0.0));
        assert_relative_eq!(cut.value(5.0), 0.5, max_relative = 1e-14);
        // C2 matching at the seam: values just inside are tiny
        let (eta, d1, d2) = cut.eval(2.0 + 1e-6);
        assert!(eta < 1e-15 && d1 < 1e-9 && d2 < 1e-3);
    }

    #[test]
    fn cutoff_derivative_integrates_to_one() {
        let cut = make_cutoff(&CutoffSpec { r1: 2.0, r2: 8.0 });
        let (ts, ws) = crate::sphere::gauss_legendre(16);
        let (half, mid) = (3.0, 5.0);
        let integral: f64 = ts
            .iter()
            .zip(ws.iter())
            .map(|(t, w)| half * w * cut.eval(mid + half * t).1)
            .sum();
        assert_relative_eq!(integral, 1.0, max_relative = 1e-13);
        // second derivative integrates to zero over the transition zone
        let second: f64 = ts
            .iter()
            .zip(ws.iter())
            .map(|(t, w)| half * w * cut.eval(mid + half * t).2)
            .sum();
        assert!(second.abs() < 1e-13);
    }

    #[test]
    fn cutoff_spec_validation() {
        let grid = ShellGrid::new(1.0, 32.0, 16, 2).unwrap();
        assert!(CutoffSpec { r1: 2.0, r2: 8.0 }.validate(&grid).is_ok());
        assert!(CutoffSpec { r1: 0.5, r2: 8.0 }.validate(&grid).is_err());
        assert!(CutoffSpec { r1: 2.0, r2: 20.0 }.validate(&grid).is_err());
        assert!(CutoffSpec { r1: 8.0, r2: 2.0 }.validate(&grid).is_err());
    }

    #[test]
    fn medium_admissibility() {
        assert!(Medium::Identity.validate(3.0, 1.0).is_ok());
        let ok = Medium::RadialIsotropic { c: 0.5, tau: 2.0 };
        assert!(ok.validate(0.0, 1.0).is_ok());
        let slow = Medium::RadialIsotropic { c: 0.5, tau: 0.4 };
        assert!(matches!(
            slow.validate(1.0, 1.0),
            Err(HelmholtzError::InadmissibleMedium { .. })
        ));
        let negative = Medium::RadialIsotropic { c: -3.0, tau: 2.0 };
        assert!(matches!(
            negative.validate(0.0, 1.0),
            Err(HelmholtzError::InadmissibleMedium { .. })
        ));
        // tensor values
        let m = ok.tensor_at(Vec3::new(1.0, 0.0, 0.0));
        assert_relative_eq!(m.apply(Vec3::new(1.0, 0.0, 0.0)).x, 1.25);
        let inv = ok.inverse_at(Vec3::new(1.0, 0.0, 0.0));
        assert_relative_eq!(inv.apply(Vec3::new(1.0, 0.0, 0.0)).x, 0.8);
    }
}
