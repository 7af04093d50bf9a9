//! Discrete vector calculus on the shell grid.
//!
//! Plain second-order finite differences, composed through the polar splits:
//! centered three-point stencils on the nonuniform radial and latitude axes,
//! one-sided second-order stencils at the radial ends and the extreme
//! latitudes (the grid never touches a pole), periodic centered differences
//! in longitude. This is **not** a mimetic discretization: discrete
//! `div(curl .)` is `O(h^2)`, not zero, so solenoidality claims elsewhere in
//! the crate are always weak-residual statements.

use super::{GridScalarField, GridVectorField, Medium, ShellGrid};
use crate::geom::Vec3;
use crate::sphere;

/// Value types the difference stencils act on (scalars and Cartesian
/// vectors, differentiated componentwise).
pub(crate) trait Samples: Copy {
    fn zero() -> Self;
    fn add_scaled(self, c: f64, other: Self) -> Self;
}

impl Samples for f64 {
    fn zero() -> Self {
        0.0
    }
    fn add_scaled(self, c: f64, other: Self) -> Self {
        self + c * other
    }
}

impl Samples for Vec3 {
    fn zero() -> Self {
        Vec3::ZERO
    }
    fn add_scaled(self, c: f64, other: Self) -> Self {
        self + c * other
    }
}

/// Centered second-order first-derivative weights on nodes
/// `x - h1, x, x + h2`.
pub(crate) fn centered3(h1: f64, h2: f64) -> (f64, f64, f64) {
    (
        -h2 / (h1 * (h1 + h2)),
        (h2 - h1) / (h1 * h2),
        h1 / (h2 * (h1 + h2)),
    )
}

/// One-sided second-order weights at the left end, nodes `x, x + h1, x + h1 + h2`.
pub(crate) fn left3(h1: f64, h2: f64) -> (f64, f64, f64) {
    (
        -(2.0 * h1 + h2) / (h1 * (h1 + h2)),
        (h1 + h2) / (h1 * h2),
        -h1 / (h2 * (h1 + h2)),
    )
}

/// One-sided second-order weights at the right end, nodes
/// `x - g1 - g2, x - g2, x` (returned in that order).
pub(crate) fn right3(g1: f64, g2: f64) -> (f64, f64, f64) {
    (
        g2 / (g1 * (g1 + g2)),
        -(g1 + g2) / (g1 * g2),
        (2.0 * g2 + g1) / (g2 * (g1 + g2)),
    )
}

/// Stencil along one axis at position `i` of an `n`-node nonuniform axis:
/// returns up to three `(node, weight)` pairs for the first derivative.
pub(crate) fn axis_stencil(coords: &[f64], i: usize) -> [(usize, f64); 3] {
    let n = coords.len();
    assert!(n >= 3, "axes need at least three nodes");
    if i == 0 {
        let (w0, w1, w2) = left3(coords[1] - coords[0], coords[2] - coords[1]);
        [(0, w0), (1, w1), (2, w2)]
    } else if i == n - 1 {
        let (w0, w1, w2) = right3(coords[n - 2] - coords[n - 3], coords[n - 1] - coords[n - 2]);
        [(n - 3, w0), (n - 2, w1), (n - 1, w2)]
    } else {
        let (wm, w0, wp) = centered3(coords[i] - coords[i - 1], coords[i + 1] - coords[i]);
        [(i - 1, wm), (i, w0), (i + 1, wp)]
    }
}

fn partial_r<T: Samples>(grid: &ShellGrid, values: &[T]) -> Vec<T> {
    let n_sphere = grid.n_sphere();
    let mut out = vec![T::zero(); values.len()];
    for ir in 0..grid.n_r() {
        let stencil = axis_stencil(grid.radii(), ir);
        for a in 0..n_sphere {
            let mut acc = T::zero();
            for (jr, w) in stencil {
                acc = acc.add_scaled(w, values[jr * n_sphere + a]);
            }
            out[ir * n_sphere + a] = acc;
        }
    }
    out
}

fn partial_theta<T: Samples>(grid: &ShellGrid, values: &[T]) -> Vec<T> {
    let (n_theta, n_phi) = (grid.n_theta(), grid.n_phi());
    let mut out = vec![T::zero(); values.len()];
    for ir in 0..grid.n_r() {
        for it in 0..n_theta {
            let stencil = axis_stencil(grid.thetas(), it);
            for ip in 0..n_phi {
                let mut acc = T::zero();
                for (jt, w) in stencil {
                    acc = acc.add_scaled(w, values[grid.node_index(ir, jt, ip)]);
                }
                out[grid.node_index(ir, it, ip)] = acc;
            }
        }
    }
    out
}

fn partial_phi<T: Samples>(grid: &ShellGrid, values: &[T]) -> Vec<T> {
    let (n_theta, n_phi) = (grid.n_theta(), grid.n_phi());
    let dphi = 2.0 * std::f64::consts::PI / n_phi as f64;
    let mut out = vec![T::zero(); values.len()];
    for ir in 0..grid.n_r() {
        for it in 0..n_theta {
            for ip in 0..n_phi {
                let prev = values[grid.node_index(ir, it, (ip + n_phi - 1) % n_phi)];
                let next = values[grid.node_index(ir, it, (ip + 1) % n_phi)];
                out[grid.node_index(ir, it, ip)] = T::zero()
                    .add_scaled(1.0 / (2.0 * dphi), next)
                    .add_scaled(-1.0 / (2.0 * dphi), prev);
            }
        }
    }
    out
}

/// `grad u = e_r du/dr + (1/r)(e_phi du/dphi / cos(theta) + e_theta du/dtheta)`.
pub fn discrete_grad(grid: &ShellGrid, u: &GridScalarField) -> GridVectorField {
    assert_eq!(u.values().len(), grid.n_nodes());
    let dr = partial_r(grid, u.values());
    let dphi = partial_phi(grid, u.values());
    let dtheta = partial_theta(grid, u.values());
    let mut out = GridVectorField::zeros(grid);
    for i in 0..grid.n_nodes() {
        let frame = sphere::frame(grid.node_direction(i));
        let r = grid.node_radius(i);
        let cos_t = grid.node_direction(i).theta().cos();
        out.values_mut()[i] =
            dr[i] * frame.e_r + (dphi[i] / cos_t * frame.e_phi + dtheta[i] * frame.e_theta) / r;
    }
    out
}

/// `div v = e_r . dv/dr + (1/r)(e_phi . dv/dphi / cos(theta) + e_theta . dv/dtheta)`
/// with `v` differentiated componentwise in the Cartesian frame.
pub fn discrete_div(grid: &ShellGrid, v: &GridVectorField) -> GridScalarField {
    assert_eq!(v.values().len(), grid.n_nodes());
    let dr = partial_r(grid, v.values());
    let dphi = partial_phi(grid, v.values());
    let dtheta = partial_theta(grid, v.values());
    let mut out = GridScalarField::zeros(grid);
    for i in 0..grid.n_nodes() {
        let frame = sphere::frame(grid.node_direction(i));
        let r = grid.node_radius(i);
        let cos_t = grid.node_direction(i).theta().cos();
        out.values_mut()[i] = frame.e_r.dot(dr[i])
            + (frame.e_phi.dot(dphi[i]) / cos_t + frame.e_theta.dot(dtheta[i])) / r;
    }
    out
}

/// `curl v = e_r x dv/dr + (1/r)(e_phi x dv/dphi / cos(theta) + e_theta x dv/dtheta)`.
pub fn discrete_curl(grid: &ShellGrid, v: &GridVectorField) -> GridVectorField {
    assert_eq!(v.values().len(), grid.n_nodes());
    let dr = partial_r(grid, v.values());
    let dphi = partial_phi(grid, v.values());
    let dtheta = partial_theta(grid, v.values());
    let mut out = GridVectorField::zeros(grid);
    for i in 0..grid.n_nodes() {
        let frame = sphere::frame(grid.node_direction(i));
        let r = grid.node_radius(i);
        let cos_t = grid.node_direction(i).theta().cos();
        out.values_mut()[i] = frame.e_r.cross(dr[i])
            + (frame.e_phi.cross(dphi[i]) / cos_t + frame.e_theta.cross(dtheta[i])) / r;
    }
    out
}

/// Plain grid inner product of scalars: `sum_i w_i f_i g_i ~ int f g dx`.
pub fn grid_inner_scalar(grid: &ShellGrid, f: &GridScalarField, g: &GridScalarField) -> f64 {
    assert_eq!(f.values().len(), grid.n_nodes());
    assert_eq!(g.values().len(), grid.n_nodes());
    let mut acc = 0.0;
    for i in 0..grid.n_nodes() {
        acc += grid.node_weight(i) * f.values()[i] * g.values()[i];
    }
    acc
}

/// Plain grid inner product of vector fields.
pub fn grid_inner_vector(grid: &ShellGrid, f: &GridVectorField, g: &GridVectorField) -> f64 {
    assert_eq!(f.values().len(), grid.n_nodes());
    assert_eq!(g.values().len(), grid.n_nodes());
    let mut acc = 0.0;
    for i in 0..grid.n_nodes() {
        acc += grid.node_weight(i) * f.values()[i].dot(g.values()[i]);
    }
    acc
}

/// Weighted medium inner product `<eps rho^{2s} f, g>` on the grid.
pub fn weighted_vector_inner(
    grid: &ShellGrid,
    s: f64,
    medium: &Medium,
    f: &GridVectorField,
    g: &GridVectorField,
) -> f64 {
    assert_eq!(f.values().len(), grid.n_nodes());
    assert_eq!(g.values().len(), grid.n_nodes());
    let mut acc = 0.0;
    for i in 0..grid.n_nodes() {
        let x = grid.node_position(i);
        let rho2s = (1.0 + x.norm_squared()).powf(s);
        let ef = medium.tensor_at(x).apply(f.values()[i]);
        acc += grid.node_weight(i) * rho2s * ef.dot(g.values()[i]);
    }
    acc
}

/// Weighted norm `||f||_s = <rho^{2s} f, f>^{1/2}` (identity medium).
pub fn weighted_vector_norm(grid: &ShellGrid, s: f64, f: &GridVectorField) -> f64 {
    weighted_vector_inner(grid, s, &Medium::Identity, f, f).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Vec3;
    use approx::assert_relative_eq;

    fn test_grid() -> ShellGrid {
        ShellGrid::new(1.0, 32.0, 48, 6).unwrap()
    }

    #[test]
    fn stencils_differentiate_quadratics_exactly() {
        let coords = [0.0, 0.7, 1.1, 2.4, 3.0];
        let f = |x: f64| 2.0 * x * x - 3.0 * x + 1.0;
        let df = |x: f64| 4.0 * x - 3.0;
        for i in 0..coords.len() {
            let mut acc = 0.0;
            for (j, w) in axis_stencil(&coords, i) {
                acc += w * f(coords[j]);
            }
            assert_relative_eq!(acc, df(coords[i]), max_relative = 1e-12);
        }
    }

    #[test]
    fn gradient_of_constant_vanishes() {
        let grid = test_grid();
        let u = GridScalarField::from_fn(&grid, |_| 3.5);
        let g = discrete_grad(&grid, &u);
        assert!(g.max_abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_analytic_radial_field() {
        let grid = test_grid();
        let u = GridScalarField::from_fn(&grid, |x| 1.0 / x.norm());
        let g = discrete_grad(&grid, &u);
        // compare to -e_r/r^2 in a relative weighted sense
        let exact = GridVectorField::from_fn(&grid, |x| {
            let r = x.norm();
            -1.0 * x / (r * r * r)
        });
        let mut diff = g.clone();
        diff.add_scaled(-1.0, &exact);
        let rel =
            weighted_vector_norm(&grid, 0.0, &diff) / weighted_vector_norm(&grid, 0.0, &exact);
        assert!(rel < 2e-2, "relative error {rel}");
    }

    #[test]
    fn gradient_of_pure_radius_is_frame_exact() {
        // u = r: grad = e_r. The radial stencil is exact on linear profiles
        // and the angular differences see a constant, so only rounding is left.
        let grid = test_grid();
        let u = GridScalarField::from_fn(&grid, |x| x.norm());
        let g = discrete_grad(&grid, &u);
        for i in 0..grid.n_nodes() {
            let e_r = grid.node_position(i).normalized();
            assert!((g.values()[i] - e_r).max_abs() < 1e-11, "node {i}");
        }
    }

    fn rel_grad_error(grid: &ShellGrid) -> f64 {
        // u = x1: exact gradient e_1; the angular stencils carry the usual
        // second-order trigonometric truncation error
        let u = GridScalarField::from_fn(grid, |x| x.x);
        let g = discrete_grad(grid, &u);
        let exact = GridVectorField::from_fn(grid, |_| Vec3::new(1.0, 0.0, 0.0));
        let mut diff = g;
        diff.add_scaled(-1.0, &exact);
        weighted_vector_norm(grid, 0.0, &diff) / weighted_vector_norm(grid, 0.0, &exact)
    }

    #[test]
    fn gradient_converges_at_second_order() {
        let coarse = rel_grad_error(&ShellGrid::new(1.0, 32.0, 48, 6).unwrap());
        let fine = rel_grad_error(&ShellGrid::new(1.0, 32.0, 96, 12).unwrap());
        assert!(coarse < 5e-2, "coarse error {coarse}");
        assert!(
            fine < 0.5 * coarse,
            "no second-order decay: {coarse} -> {fine}"
        );
    }

    #[test]
    fn divergence_and_curl_consistency() {
        let grid = test_grid();
        // v = grad(x1 x2): divergence = Laplacian(x1 x2) = 0, curl = 0;
        // residuals are pure angular truncation error
        let v = GridVectorField::from_fn(&grid, |x| Vec3::new(x.y, x.x, 0.0));
        let div = discrete_div(&grid, &v);
        let curl = discrete_curl(&grid, &v);
        assert!(div.max_abs() < 0.15, "max div {}", div.max_abs());
        assert!(curl.max_abs() < 0.15, "max curl {}", curl.max_abs());

        // radial inverse-square field: divergence- and curl-free off the
        // origin; the max-norm residual sits on the one-sided stencil at the
        // inner boundary, where h^2 u''' is largest
        let e = GridVectorField::from_fn(&grid, |x| {
            let r = x.norm();
            x / (r * r * r)
        });
        let div = discrete_div(&grid, &e);
        assert!(div.max_abs() < 0.1, "max div {}", div.max_abs());
        let curl = discrete_curl(&grid, &e);
        assert!(curl.max_abs() < 0.1, "max curl {}", curl.max_abs());

        // and the residuals shrink under refinement as h^2 would
        let fine = ShellGrid::new(1.0, 32.0, 96, 12).unwrap();
        let e_fine = GridVectorField::from_fn(&fine, |x| {
            let r = x.norm();
            x / (r * r * r)
        });
        let div_fine = discrete_div(&fine, &e_fine);
        assert!(div_fine.max_abs() < 0.5 * div.max_abs());
    }

    #[test]
    fn div_of_curl_is_small_but_not_zero() {
        // non-mimetic discretization: the composite is O(h^2), not exact
        let grid = test_grid();
        let a = GridVectorField::from_fn(&grid, |x| {
            let r2 = x.norm_squared();
            Vec3::new(0.0, 0.0, 1.0 / (1.0 + r2))
        });
        let curl = discrete_curl(&grid, &a);
        let div_curl = discrete_div(&grid, &curl);
        let scale = curl.max_abs();
        assert!(div_curl.max_abs() < 0.1 * scale);
        assert!(
            div_curl.max_abs() > 0.0,
            "exact zero would indicate a mimetic scheme"
        );
    }

    #[test]
    fn curl_of_rotation_field() {
        let grid = test_grid();
        // rigid rotation about e_3 has curl = 2 e_3 everywhere
        let v = GridVectorField::from_fn(&grid, |x| Vec3::new(-x.y, x.x, 0.0));
        let curl = discrete_curl(&grid, &v);
        let exact = Vec3::new(0.0, 0.0, 2.0);
        let worst = curl
            .values()
            .iter()
            .fold(0.0_f64, |acc, val| acc.max((*val - exact).max_abs()));
        assert!(worst < 0.15, "worst deviation {worst}");
        // refinement quarters the truncation error
        let fine = ShellGrid::new(1.0, 32.0, 96, 12).unwrap();
        let v_fine = GridVectorField::from_fn(&fine, |x| Vec3::new(-x.y, x.x, 0.0));
        let curl_fine = discrete_curl(&fine, &v_fine);
        let worst_fine = curl_fine
            .values()
            .iter()
            .fold(0.0_f64, |acc, val| acc.max((*val - exact).max_abs()));
        assert!(worst_fine < 0.5 * worst, "{worst} -> {worst_fine}");
    }

    #[test]
    fn weighted_inner_products() {
        let grid = test_grid();
        let e = GridVectorField::from_fn(&grid, |x| {
            let r = x.norm();
            x / (r * r * r)
        });
        // ||e_r/r^2||^2 over [1, R] is 4 pi (1 - 1/R)
        let norm2 = grid_inner_vector(&grid, &e, &e);
        let exact = 4.0 * std::f64::consts::PI * (1.0 - 1.0 / 32.0);
        assert_relative_eq!(norm2, exact, max_relative = 2e-2);
        // medium weighting scales the product pointwise
        let med = Medium::RadialIsotropic { c: 1.0, tau: 2.0 };
        let weighted = weighted_vector_inner(&grid, 0.0, &med, &e, &e);
        assert!(
            weighted > norm2,
            "positive perturbation increases the energy"
        );
    }
}
