//! Weighted square-integrability on exterior shells.
//!
//! The weight is `rho(x) = (1 + |x|^2)^{1/2}`; a field `F` belongs to the
//! weighted space with exponent `s` when `rho^s F` is square integrable.
//! Because every tower field is homogeneous, membership over an exterior
//! shell reduces to one power-counting inequality:
//!
//! ```text
//! integrable over {|x| > 1}  <=>  s < -degree - 3/2
//! ```
//!
//! where `degree` is the homogeneity degree of the field. The half-integer
//! thresholds are exactly the excluded weights, so the strict/non-strict
//! distinction never matters for a valid `s`. The classifier is cross-checked
//! by a quadrature oracle that integrates the actual field over nested shells
//! `[1, R]`, `[1, 2R]` and inspects the norm ratio.
//!
//! The module also carries the finite-dimension bookkeeping used by the
//! decomposition solver: the per-order dimension counts [`mu`], the Dirichlet
//! field dimension [`dirichlet_dim`], the basis enumerators for the
//! non-integrable tower spans, and the admissibility test for perturbed
//! media.

use crate::geom::Vec3;
use crate::special::binomial;
use crate::sphere::gauss_legendre;
use crate::sphere::SphereQuadrature;
use crate::towers::{self, PointField, Sign, TowerIndex};
use thiserror::Error;

/// Guard distance around the excluded weight set.
pub const WEIGHT_GUARD: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum SpaceError {
    #[error("weight s = {s} is within {WEIGHT_GUARD} of an excluded half-integer")]
    InvalidWeight { s: f64 },
    #[error("integrability classification applies to decaying towers only")]
    PositiveSignUnsupported,
    #[error("dimension count mu(sigma={sigma}, q={q}, N={n_dim}) did not reduce to an integer")]
    NonIntegralResult { sigma: u32, q: u32, n_dim: u32 },
    #[error("shell requires 0 < r_in < r_out, got [{r_in}, {r_out}]")]
    InvalidShell { r_in: f64, r_out: f64 },
}

/// Weight exponent plus ambient dimension (fixed at 3 here; carried so the
/// dimension formulas read like their general-N statements).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightContext {
    pub s: f64,
    pub n_dim: u32,
}

impl WeightContext {
    pub fn new(s: f64) -> Result<Self, SpaceError> {
        validate_weight(s)?;
        Ok(WeightContext { s, n_dim: 3 })
    }
}

/// Distance from `s` to the excluded set `{n + 1/2} ∪ {-n - 3/2}`, `n >= 0`.
pub fn excluded_set_distance(s: f64) -> f64 {
    // nearest point of { k + 1/2 : k integer >= 0 }
    let upper = (s - 0.5).round().max(0.0) + 0.5;
    // nearest point of { -k - 3/2 : k integer >= 0 }
    let lower = -((-s - 1.5).round().max(0.0) + 1.5);
    (s - upper).abs().min((s - lower).abs())
}

/// Reject weights within [`WEIGHT_GUARD`] of the excluded set. Every
/// weight-taking operation in the crate funnels through this guard instead of
/// computing near-degenerate answers.
pub fn validate_weight(s: f64) -> Result<(), SpaceError> {
    if !s.is_finite() || excluded_set_distance(s) <= WEIGHT_GUARD {
        return Err(SpaceError::InvalidWeight { s });
    }
    Ok(())
}

/// The radial weight `rho^s = (1 + |x|^2)^{s/2}`.
pub fn weight_value(point: Vec3, s: f64) -> f64 {
    (1.0 + point.norm_squared()).powf(s / 2.0)
}

/// Radial quadrature strategy for shell integrals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RadialRule {
    /// One Gauss-Legendre panel over `[r_in, r_out]`.
    GaussLegendre,
    /// Dyadic panels `[r_in, 2 r_in], [2 r_in, 4 r_in], ...` with
    /// `radial_nodes` Gauss-Legendre points per panel; the resolution per
    /// decade stays constant, which is what wide shells `[1, 10^4]` need.
    DyadicGaussLegendre,
}

/// A truncated exterior shell `r_in < |x| < r_out` plus its radial rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShellSpec {
    pub r_in: f64,
    pub r_out: f64,
    pub radial_nodes: u32,
    pub rule: RadialRule,
}

impl ShellSpec {
    pub fn new(
        r_in: f64,
        r_out: f64,
        radial_nodes: u32,
        rule: RadialRule,
    ) -> Result<Self, SpaceError> {
        if !(r_in > 0.0 && r_out > r_in && r_in.is_finite() && r_out.is_finite()) {
            return Err(SpaceError::InvalidShell { r_in, r_out });
        }
        assert!(radial_nodes >= 2, "radial rule needs at least two nodes");
        Ok(ShellSpec {
            r_in,
            r_out,
            radial_nodes,
            rule,
        })
    }

    /// Panel boundaries according to the rule (ascending, first = r_in,
    /// last = r_out).
    fn panels(&self) -> Vec<(f64, f64)> {
        match self.rule {
            RadialRule::GaussLegendre => vec![(self.r_in, self.r_out)],
            RadialRule::DyadicGaussLegendre => {
                let mut panels = Vec::new();
                let mut lo = self.r_in;
                while lo < self.r_out {
                    let hi = (2.0 * lo).min(self.r_out);
                    panels.push((lo, hi));
                    lo = hi;
                }
                panels
            }
        }
    }
}

/// Weighted L2 norm of a point field over the shell:
/// `( \int_shell rho^{2s} |F|^2 dx )^{1/2}`, computed as radial
/// Gauss-Legendre panels times the given sphere quadrature. Summation order
/// is fixed (panel-major, then radial node, then sphere node), so results are
/// bit-reproducible.
pub fn weighted_shell_norm(
    field: &PointField,
    s: f64,
    shell: &ShellSpec,
    quad: &SphereQuadrature,
) -> f64 {
    let (tt, ww) = gauss_legendre(shell.radial_nodes as usize);
    let mut total = 0.0_f64;
    for (lo, hi) in shell.panels() {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        for (t, wr) in tt.iter().zip(ww.iter()) {
            let r = mid + half * t;
            let jac = half * wr * r * r * weight_value(Vec3::new(r, 0.0, 0.0), 2.0 * s);
            let mut sphere_sum = 0.0_f64;
            for (dir, wo) in quad.nodes().iter().zip(quad.weights().iter()) {
                let x = r * dir.unit();
                let sq = match field {
                    PointField::Scalar(f) => {
                        let v = f(x);
                        v * v
                    }
                    PointField::Vector(f) => f(x).norm_squared(),
                };
                sphere_sum += wo * sq;
            }
            total += jac * sphere_sum;
        }
    }
    total.sqrt()
}

/// Power-counting membership test: does the (decaying) tower field lie in the
/// weighted space with exponent `s` over the exterior shell `{|x| > 1}`?
///
/// `true` iff `s < -degree - 3/2` with `degree` the homogeneity degree. For
/// the generic ladders at floor `l` on order `n` this is the familiar
/// `s < n - l - 1/2`; the exceptional ladder (degree `l - 1`) gives
/// `s < -l - 1/2`, which the quadrature oracle confirms (in particular the
/// exceptional floor-0 scalar `1/r` is **not** integrable at `s = 0`:
/// its norm over `[1, R]` grows like `R^{1/2}`).
pub fn is_integrable(idx: &TowerIndex, s: f64) -> Result<bool, SpaceError> {
    validate_weight(s)?;
    if idx.sign() == Sign::Growing {
        return Err(SpaceError::PositiveSignUnsupported);
    }
    let degree = towers::homogeneity_degree(idx);
    Ok(s < -f64::from(degree) - 1.5)
}

/// Quadrature cross-check for [`is_integrable`]: integrate the field itself
/// over `[1, R]` and `[1, 2R]` and classify by the norm ratio. A convergent
/// tail leaves the ratio within the 5% band around 1; a divergent field of
/// valid weight has ratio at least `sqrt(2)`. Uses the largest radius of
/// `radii` for the verdict; callers pass nested radii so the trend is visible
/// in diagnostics.
pub fn oracle_is_integrable(
    idx: &TowerIndex,
    s: f64,
    radii: &[f64],
    radial_nodes: u32,
    quad: &SphereQuadrature,
) -> Result<bool, SpaceError> {
    validate_weight(s)?;
    if idx.sign() == Sign::Growing {
        return Err(SpaceError::PositiveSignUnsupported);
    }
    let big_r = radii.iter().copied().fold(f64::NAN, f64::max);
    assert!(
        big_r.is_finite() && big_r > 1.0,
        "need a radius larger than the unit sphere"
    );
    let ratio = growth_ratio(idx, s, big_r, radial_nodes, quad)?;
    Ok((ratio - 1.0).abs() <= 0.05)
}

/// The raw growth ratio `norm over [1, 2R] / norm over [1, R]` for one tower.
pub fn growth_ratio(
    idx: &TowerIndex,
    s: f64,
    big_r: f64,
    radial_nodes: u32,
    quad: &SphereQuadrature,
) -> Result<f64, SpaceError> {
    let idx = *idx;
    let scalar = |p: Vec3| {
        towers::eval_tower(&idx, p)
            .expect("off-axis point")
            .as_scalar()
            .unwrap()
    };
    let vector = |p: Vec3| {
        towers::eval_tower(&idx, p)
            .expect("off-axis point")
            .as_vector()
            .unwrap()
    };
    let field = match idx.kind() {
        towers::ValueKind::Scalar => PointField::Scalar(&scalar),
        towers::ValueKind::Vector => PointField::Vector(&vector),
    };
    let inner = ShellSpec::new(1.0, big_r, radial_nodes, RadialRule::DyadicGaussLegendre)?;
    let outer = ShellSpec::new(
        1.0,
        2.0 * big_r,
        radial_nodes,
        RadialRule::DyadicGaussLegendre,
    )?;
    let norm_inner = weighted_shell_norm(&field, s, &inner, quad);
    let norm_outer = weighted_shell_norm(&field, s, &outer, quad);
    Ok(norm_outer / norm_inner)
}

/// Per-order dimension of the harmonic tower contribution, in exact integer
/// arithmetic:
///
/// ```text
/// mu(sigma, q) = C(N,q) C(N-1+sigma, sigma) q q' (N + 2 sigma)
///                / ( N (q + sigma) (q' + sigma) ),     q' = N - q,
/// ```
///
/// with the degenerate corners `q in {0, N}, sigma = 0` set to `C(N,q) = 1`.
/// Any non-integral reduction signals a formula bug and is reported as an
/// error rather than rounded.
pub fn mu(sigma: u32, q: u32, n_dim: u32) -> Result<u64, SpaceError> {
    assert!(q <= n_dim, "degree q must satisfy 0 <= q <= N");
    assert!(n_dim >= 1);
    let q_dual = n_dim - q;
    if sigma == 0 && (q == 0 || q == n_dim) {
        return Ok(1);
    }
    let numerator = binomial(n_dim as u64, q as u64)
        * binomial((n_dim - 1 + sigma) as u64, sigma as u64)
        * u128::from(q)
        * u128::from(q_dual)
        * u128::from(n_dim + 2 * sigma);
    let denominator = u128::from(n_dim) * u128::from(q + sigma) * u128::from(q_dual + sigma);
    if !numerator.is_multiple_of(denominator) {
        return Err(SpaceError::NonIntegralResult { sigma, q, n_dim });
    }
    u64::try_from(numerator / denominator).map_err(|_| SpaceError::NonIntegralResult {
        sigma,
        q,
        n_dim,
    })
}

/// Dimension of the weighted Dirichlet space of degree `q`:
/// the obstacle contribution `d_q` (a Betti number, supplied by the caller;
/// for the unit ball use `d_1 = 1`, `d_2 = 0`) plus one `mu` term for every
/// integer `sigma >= 0` with `sigma < -s - N/2`. A step function of `s`,
/// non-increasing, jumping exactly at `-N/2 - sigma`.
pub fn dirichlet_dim(s: f64, q: u32, d_q: u64, n_dim: u32) -> Result<u64, SpaceError> {
    validate_weight(s)?;
    let mut total = d_q;
    let bound = -s - f64::from(n_dim) / 2.0;
    let mut sigma = 0u32;
    while f64::from(sigma) < bound {
        total += mu(sigma, q, n_dim)?;
        sigma += 1;
    }
    Ok(total)
}

/// Which non-integrable tower span to enumerate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisFamily {
    /// Decaying curl-curl towers at a fixed floor.
    CurlTowers,
    /// Decaying div-grad towers at a fixed floor (orders `n >= 1`; the order-0
    /// column is the exceptional family below).
    GradTowers,
    /// Decaying harmonic potential fields (no floor parameter).
    PotentialFields,
    /// The single-order exceptional ladder at a fixed floor (0 or 1 entries).
    ExceptionalTowers,
}

/// Specification of one finite-dimensional tower span: the decaying members
/// of `family` (at floor `floor` where applicable) that are **not**
/// `s`-integrable. These are exactly the finite obstructions the
/// decomposition has to account for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceBasisSpec {
    pub family: BasisFamily,
    pub s: f64,
    /// Floor for the ladder families; ignored for `PotentialFields`.
    pub floor: i32,
}

/// Enumerate the span: every decaying index of the family that fails
/// [`is_integrable`] at weight `s`. Ordered by `(n, m)` ascending. The sets
/// are finite because integrability improves with the order `n`.
pub fn enumerate_basis(spec: &SpaceBasisSpec) -> Result<Vec<TowerIndex>, SpaceError> {
    validate_weight(spec.s)?;
    let mut out = Vec::new();
    match spec.family {
        BasisFamily::ExceptionalTowers => {
            if spec.floor >= -1 {
                let idx =
                    TowerIndex::exceptional(Sign::Decaying, spec.floor).expect("floor checked");
                if !is_integrable(&idx, spec.s)? {
                    out.push(idx);
                }
            }
        }
        _ => {
            let make = |n: u32, m: u32| -> Option<TowerIndex> {
                match spec.family {
                    BasisFamily::CurlTowers => {
                        TowerIndex::curl_curl(Sign::Decaying, spec.floor, n, m).ok()
                    }
                    BasisFamily::GradTowers => {
                        TowerIndex::div_grad(Sign::Decaying, spec.floor, n, m).ok()
                    }
                    BasisFamily::PotentialFields => {
                        TowerIndex::potential(Sign::Decaying, n, m).ok()
                    }
                    BasisFamily::ExceptionalTowers => unreachable!(),
                }
            };
            let mut n = 1u32;
            while let Some(probe) = make(n, 1) {
                if is_integrable(&probe, spec.s)? {
                    // integrability is monotone in n: all higher orders are in
                    break;
                }
                for m in 1..=(2 * n + 1) {
                    out.push(make(n, m).expect("validated order"));
                }
                n += 1;
            }
        }
    }
    Ok(out)
}

/// Role of a medium perturbation exponent in the admissibility conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdmissibilityRole {
    /// Coefficient multiplying the fields inside the bilinear form
    /// (epsilon-like): needs `tau > max(0, s + 1 - N/2)` and `tau >= -s - 1`.
    Epsilon,
    /// Zeroth-order coefficient (nu/mu-like): needs `tau > max(0, s - N/2)`
    /// and `tau >= -s`.
    LowerOrder,
}

/// Decay-rate admissibility of a perturbed medium `epsilon = (1 + O(r^{-tau})) Id`
/// at weight `s` in dimension `N = 3`.
pub fn check_admissibility(tau: f64, s: f64, role: AdmissibilityRole) -> bool {
    let n_half = 1.5;
    match role {
        AdmissibilityRole::Epsilon => tau > (s + 1.0 - n_half).max(0.0) && tau >= -s - 1.0,
        AdmissibilityRole::LowerOrder => tau > (s - n_half).max(0.0) && tau >= -s,
    }
}
