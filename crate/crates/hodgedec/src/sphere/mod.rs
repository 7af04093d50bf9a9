//! Real spherical harmonics, the polar orthonormal frame, surface
//! differential operators, and quadrature on the unit sphere.
//!
//! Coordinates are azimuth `phi` in `[0, 2 pi)` and *latitude* `theta` in
//! `(-pi/2, pi/2)`, so a unit vector is
//! `(cos phi cos theta, sin phi cos theta, sin theta)`. The poles are
//! excluded everywhere: the surface operators carry `1/cos(theta)` factors,
//! and all node sets used by quadratures and grids are interior in latitude.
//!
//! The harmonic basis is real and fully normalized over the sphere. Within
//! order `n` the intra-order index `m` runs from 1 to `2n+1` and maps to the
//! azimuthal structure as: `m = 1` zonal, `m = 2k` carries `cos(k phi)`,
//! `m = 2k+1` carries `sin(k phi)`, `k = 1..n`.

mod legendre;

pub use legendre::{eval_with_theta_derivative, gauss_legendre, normalized_assoc_legendre};

use crate::geom::Vec3;
use std::f64::consts::PI;
use thiserror::Error;

/// Minimum allowed latitude distance from a pole.
pub const POLE_MARGIN: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum SphereError {
    #[error("latitude {theta} is within {margin:e} of a coordinate pole")]
    PoleProximity { theta: f64, margin: f64 },
    #[error("direction is undefined at the origin")]
    OriginSingular,
    #[error("spherical-harmonic index m = {m} outside 1..=2n+1 for n = {n}")]
    InvalidIndex { n: u32, m: u32 },
    #[error("inner product requires operands of the same kind (scalar/scalar or tangent/tangent)")]
    KindMismatch,
}

/// A point on the unit sphere, pole-free by construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction {
    phi: f64,
    theta: f64,
}

impl Direction {
    /// Azimuth is wrapped into `[0, 2 pi)`; latitudes within [`POLE_MARGIN`]
    /// of a pole are rejected.
    pub fn new(phi: f64, theta: f64) -> Result<Self, SphereError> {
        if theta.abs() >= PI / 2.0 - POLE_MARGIN {
            return Err(SphereError::PoleProximity {
                theta,
                margin: POLE_MARGIN,
            });
        }
        let phi = phi.rem_euclid(2.0 * PI);
        Ok(Direction { phi, theta })
    }

    /// Direction and radius of a Cartesian point.
    pub fn from_cartesian(x: Vec3) -> Result<(Self, f64), SphereError> {
        let r = x.norm();
        if r == 0.0 {
            return Err(SphereError::OriginSingular);
        }
        let theta = (x.z / r).clamp(-1.0, 1.0).asin();
        let phi = x.y.atan2(x.x);
        Ok((Direction::new(phi, theta)?, r))
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// The unit vector `e_r` of this direction.
    pub fn unit(&self) -> Vec3 {
        let (sp, cp) = self.phi.sin_cos();
        let (st, ct) = self.theta.sin_cos();
        Vec3::new(cp * ct, sp * ct, st)
    }
}

/// Index of a real spherical harmonic: order `n >= 0`, intra-order
/// `m` in `1..=2n+1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SphHarmIndex {
    n: u32,
    m: u32,
}

/// Azimuthal structure of a harmonic within its order.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Azimuthal {
    Zonal,
    Cos(u32),
    Sin(u32),
}

impl SphHarmIndex {
    pub fn new(n: u32, m: u32) -> Result<Self, SphereError> {
        if m < 1 || m > 2 * n + 1 {
            return Err(SphereError::InvalidIndex { n, m });
        }
        Ok(SphHarmIndex { n, m })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    /// Eigenvalue of `-Delta_S` on this order: `lambda_n = n(n+1)`.
    pub fn eigenvalue(&self) -> f64 {
        f64::from(self.n) * f64::from(self.n + 1)
    }

    fn azimuthal(&self) -> Azimuthal {
        if self.m == 1 {
            Azimuthal::Zonal
        } else if self.m.is_multiple_of(2) {
            Azimuthal::Cos(self.m / 2)
        } else {
            Azimuthal::Sin(self.m / 2)
        }
    }

    /// All `2n+1` indices of one order.
    pub fn order(n: u32) -> impl Iterator<Item = SphHarmIndex> {
        (1..=2 * n + 1).map(move |m| SphHarmIndex { n, m })
    }
}

/// The orthonormal moving frame `(e_r, e_phi, e_theta)` at a direction.
/// Right-handed in the order `e_r x e_phi = e_theta`.
#[derive(Debug, Clone, Copy)]
pub struct Frame {
    pub e_r: Vec3,
    pub e_phi: Vec3,
    pub e_theta: Vec3,
}

/// Closed-form frame vectors.
pub fn frame(dir: &Direction) -> Frame {
    let (sp, cp) = dir.phi.sin_cos();
    let (st, ct) = dir.theta.sin_cos();
    Frame {
        e_r: Vec3::new(cp * ct, sp * ct, st),
        e_phi: Vec3::new(-sp, cp, 0.0),
        e_theta: Vec3::new(-st * cp, -st * sp, ct),
    }
}

/// Evaluate the real orthonormal spherical harmonic `y_{n,m}`.
pub fn eval_harmonic(idx: SphHarmIndex, dir: &Direction) -> f64 {
    let t = dir.theta.sin();
    match idx.azimuthal() {
        Azimuthal::Zonal => normalized_assoc_legendre(idx.n, 0, t),
        Azimuthal::Cos(k) => {
            let p = normalized_assoc_legendre(idx.n, k, t);
            std::f64::consts::SQRT_2 * p * (f64::from(k) * dir.phi).cos()
        }
        Azimuthal::Sin(k) => {
            let p = normalized_assoc_legendre(idx.n, k, t);
            std::f64::consts::SQRT_2 * p * (f64::from(k) * dir.phi).sin()
        }
    }
}

/// Surface gradient `Y_{n,m} = (1/cos theta) e_phi d_phi y + e_theta d_theta y`
/// as a Cartesian tangent vector. Orthogonal to `e_r` pointwise; its surface
/// norm satisfies `<Y, Y> = n(n+1)`.
pub fn surface_gradient(idx: SphHarmIndex, dir: &Direction) -> Vec3 {
    let t = dir.theta.sin();
    let cos_theta = dir.theta.cos();
    let fr = frame(dir);
    let (dphi_over_cos, dtheta) = match idx.azimuthal() {
        Azimuthal::Zonal => {
            let (_, dth) = eval_with_theta_derivative(idx.n, 0, t);
            (0.0, dth)
        }
        Azimuthal::Cos(k) => {
            let (p, dth) = eval_with_theta_derivative(idx.n, k, t);
            let kf = f64::from(k);
            let (skp, ckp) = (kf * dir.phi).sin_cos();
            (
                -std::f64::consts::SQRT_2 * kf * p * skp / cos_theta,
                std::f64::consts::SQRT_2 * dth * ckp,
            )
        }
        Azimuthal::Sin(k) => {
            let (p, dth) = eval_with_theta_derivative(idx.n, k, t);
            let kf = f64::from(k);
            let (skp, ckp) = (kf * dir.phi).sin_cos();
            (
                std::f64::consts::SQRT_2 * kf * p * ckp / cos_theta,
                std::f64::consts::SQRT_2 * dth * skp,
            )
        }
    };
    fr.e_phi * dphi_over_cos + fr.e_theta * dtheta
}

/// Residual of the eigen-relation `(Delta_S + n(n+1)) y_{n,m}` at `dir`,
/// with `Delta_S` applied by second-order central differences of step `h`
/// in `(phi, theta)`. Converges to zero at order `h^2`.
pub fn laplace_beltrami_residual(
    idx: SphHarmIndex,
    dir: &Direction,
    h: f64,
) -> Result<f64, SphereError> {
    assert!(h > 0.0 && h.is_finite());
    if dir.theta.abs() + 2.0 * h >= PI / 2.0 - POLE_MARGIN {
        return Err(SphereError::PoleProximity {
            theta: dir.theta,
            margin: 2.0 * h,
        });
    }
    let at = |phi: f64, theta: f64| -> f64 {
        eval_harmonic(idx, &Direction::new(phi, theta).expect("guarded above"))
    };
    let y0 = at(dir.phi, dir.theta);
    let d2_phi = (at(dir.phi + h, dir.theta) - 2.0 * y0 + at(dir.phi - h, dir.theta)) / (h * h);
    let d2_theta = (at(dir.phi, dir.theta + h) - 2.0 * y0 + at(dir.phi, dir.theta - h)) / (h * h);
    let d1_theta = (at(dir.phi, dir.theta + h) - at(dir.phi, dir.theta - h)) / (2.0 * h);
    let cos_theta = dir.theta.cos();
    let lap =
        d2_phi / (cos_theta * cos_theta) + d2_theta - (dir.theta.sin() / cos_theta) * d1_theta;
    Ok(lap + idx.eigenvalue() * y0)
}

/// Product quadrature on the unit sphere.
///
/// Gauss-Legendre in `t = sin(theta)` tensored with equispaced azimuths;
/// integrates harmonic products `y_{n,m} y_{n',m'}` exactly (to rounding)
/// whenever `n + n' <= exact_degree`.
#[derive(Debug, Clone)]
pub struct SphereQuadrature {
    nodes: Vec<Direction>,
    weights: Vec<f64>,
    exact_degree: u32,
}

impl SphereQuadrature {
    pub fn nodes(&self) -> &[Direction] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn exact_degree(&self) -> u32 {
        self.exact_degree
    }

    /// Weighted sum of a scalar sample function, fixed summation order.
    pub fn integrate(&self, mut f: impl FnMut(&Direction) -> f64) -> f64 {
        let mut acc = 0.0;
        for (dir, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(dir);
        }
        acc
    }
}

/// Build the product quadrature exact through harmonic-product degree
/// `2 n_max + 1`: `n_max + 1` Gauss-Legendre latitudes and `2 (n_max + 1)`
/// uniform azimuths.
pub fn build_quadrature(n_max: u32) -> SphereQuadrature {
    let n_t = (n_max + 1) as usize;
    let n_phi = 2 * n_t;
    let (t_nodes, t_weights) = gauss_legendre(n_t);
    let w_phi = 2.0 * PI / n_phi as f64;
    let mut nodes = Vec::with_capacity(n_t * n_phi);
    let mut weights = Vec::with_capacity(n_t * n_phi);
    for (t, wt) in t_nodes.iter().zip(&t_weights) {
        let theta = t.asin();
        for j in 0..n_phi {
            let phi = w_phi * j as f64;
            nodes.push(Direction::new(phi, theta).expect("Gauss nodes are interior"));
            weights.push(wt * w_phi);
        }
    }
    SphereQuadrature {
        nodes,
        weights,
        exact_degree: 2 * n_max + 1,
    }
}

/// A scalar- or tangent-vector-valued sample function on the sphere.
pub enum SurfaceField<'a> {
    Scalar(&'a dyn Fn(&Direction) -> f64),
    Tangent(&'a dyn Fn(&Direction) -> Vec3),
}

/// `L^2(S)` inner product of two surface fields of matching kind.
pub fn surface_inner_product(
    f: &SurfaceField,
    g: &SurfaceField,
    quad: &SphereQuadrature,
) -> Result<f64, SphereError> {
    match (f, g) {
        (SurfaceField::Scalar(f), SurfaceField::Scalar(g)) => {
            Ok(quad.integrate(|dir| f(dir) * g(dir)))
        }
        (SurfaceField::Tangent(f), SurfaceField::Tangent(g)) => {
            Ok(quad.integrate(|dir| f(dir).dot(g(dir))))
        }
        _ => Err(SphereError::KindMismatch),
    }
}
