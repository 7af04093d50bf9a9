//! Explicit harmonic tower fields on the punctured space.
//!
//! Every tower is built on one real spherical harmonic `y_{n,m}` and one sign
//! choice. The sign fixes the radial exponent of the harmonic seed:
//! growing seeds are `r^n y_{n,m}` (exponent `theta = n`), decaying seeds are
//! `r^{-n-1} y_{n,m}` (`theta = -n-1`). On top of the seed sit the ladders:
//!
//! * Delta ladder (scalar): `z^k := xi^k r^{theta+2k} y_{n,m}` with the gamma
//!   ratio `xi^k` chosen so that `Delta z^k = z^{k-1}` on the nose
//!   (`z^{-1} := 0`).
//! * div-grad ladder: even floors `U^{2k} := z^k` (scalar), odd floors
//!   `U^{2k-1} := grad U^{2k}` (vector). Then `div U^{2k+1} = U^{2k}`,
//!   `curl U^{odd} = 0`, and the componentwise Laplacian descends two floors.
//! * curl-curl ladder: even floors `V^{2k} := x cross grad z^k` (tangent
//!   vector), odd floors `V^{2k-1} := -curl V^{2k}`. Then
//!   `curl V^{2k+1} = V^{2k}`, `div V^l = 0`, Laplacian descends two floors.
//! * potential fields `P`: the harmonic combination of the two floor-1 rungs
//!   (see below).
//! * exceptional ladder: the order-0 seed has no tangential structure
//!   (`V` vanishes identically), so its div-grad ladder is tracked separately
//!   with the radial closed forms `U^{2k} = xi^k r^{2k - d}`,
//!   `U^{2k-1} = xi^k (2k - d) r^{2k-1-d} e_r`, where `d = 1` for the
//!   decaying sign and `0` for the growing one.
//!
//! Ground identity. The two ladders meet at floor -1: `U^{-1}` and `V^{-1}`
//! span the same line. With the normalizations above the measured relation is
//!
//! ```text
//! V^{-1}_{n,m} = (theta + 1) * U^{-1}_{n,m}
//! ```
//!
//! (constant `-n` for decaying towers, `n+1` for growing ones), verified
//! against the finite-difference oracle; see [`ground_identity_constant`].
//! Consequently the harmonic potential field is the weighted combination
//!
//! ```text
//! P_{n,m} := (theta + 1) U^1_{n,m} - V^1_{n,m}
//!          = 2 xi^1 r^{theta+1} [ (theta+1) y e_r - Y ]
//! ```
//!
//! which satisfies `Delta P = 0`, `curl P = -V^0`, and
//! `div P = (theta+1) U^0`. (The unweighted difference `U^1 - V^1` would not
//! be harmonic, and harmonicity is what makes the cut-off correction fields
//! of the decomposition solver compactly supported.)
//!
//! All closed forms are homogeneous; [`homogeneity_degree`] returns the
//! degree, which also drives the integrability classifier in
//! [`crate::spaces`].

use crate::geom::Vec3;
use crate::special::ln_gamma_signed;
use crate::sphere::{self, Direction, SphHarmIndex, SphereError};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TowerError {
    #[error(transparent)]
    Sphere(#[from] SphereError),
    #[error("curl-curl and potential towers require n >= 1 (order 0 is the exceptional family)")]
    OrderZeroNotGeneric,
    #[error("floor {floor} lies below the tower ground at -1")]
    FloorBelowGround { floor: i32 },
    #[error("delta-ladder height must be non-negative, got {k}")]
    NegativeHeight { k: i32 },
    #[error("cannot evaluate a tower field at the origin")]
    OriginSingular,
    #[error("operator {op:?} does not apply to a {kind:?}-valued field")]
    KindMismatch { op: VectorOp, kind: ValueKind },
    #[error("finite-difference stencil (h = {h}) reaches too close to the origin (|x| = {r})")]
    OriginProximity { r: f64, h: f64 },
}

/// Radial behaviour of the harmonic seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    /// Seed `r^n y_{n,m}`; grows at infinity, singular nowhere but the ladder
    /// members still live on the punctured space.
    Growing,
    /// Seed `r^{-n-1} y_{n,m}`; decays at infinity, singular at the origin.
    Decaying,
}

impl Sign {
    /// Seed exponent `theta`: `n` for growing, `-n-1` for decaying.
    pub fn seed_degree(self, n: u32) -> i32 {
        match self {
            Sign::Growing => n as i32,
            Sign::Decaying => -(n as i32) - 1,
        }
    }

    fn signum(self) -> f64 {
        match self {
            Sign::Growing => 1.0,
            Sign::Decaying => -1.0,
        }
    }

    /// The `d` in the exceptional closed forms: 1 for decaying, 0 for growing.
    fn exceptional_shift(self) -> i32 {
        match self {
            Sign::Growing => 0,
            Sign::Decaying => 1,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Growing => "+",
            Sign::Decaying => "-",
        })
    }
}

/// Tower family tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// Scalar/vector ladder generated by grad and div (`U`).
    DivGrad,
    /// Tangential ladder generated by curl (`V`).
    CurlCurl,
    /// Harmonic potential fields `P` (no floor index).
    Potential,
    /// The scalar Delta-ladder `z^k` (height index `k >= 0`).
    Delta,
    /// Radial div-grad ladder on the order-0 harmonic.
    ExceptionalDivGrad,
}

/// Scalar-or-vector discriminant for tower values and operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueKind {
    Scalar,
    Vector,
}

/// Value of a tower field at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TowerValue {
    Scalar(f64),
    Vector(Vec3),
}

impl TowerValue {
    pub fn kind(&self) -> ValueKind {
        match self {
            TowerValue::Scalar(_) => ValueKind::Scalar,
            TowerValue::Vector(_) => ValueKind::Vector,
        }
    }

    pub fn zero(kind: ValueKind) -> TowerValue {
        match kind {
            ValueKind::Scalar => TowerValue::Scalar(0.0),
            ValueKind::Vector => TowerValue::Vector(Vec3::ZERO),
        }
    }

    pub fn as_scalar(&self) -> Option<f64> {
        match self {
            TowerValue::Scalar(v) => Some(*v),
            TowerValue::Vector(_) => None,
        }
    }

    pub fn as_vector(&self) -> Option<Vec3> {
        match self {
            TowerValue::Scalar(_) => None,
            TowerValue::Vector(v) => Some(*v),
        }
    }

    /// Magnitude regardless of kind.
    pub fn abs(&self) -> f64 {
        match self {
            TowerValue::Scalar(v) => v.abs(),
            TowerValue::Vector(v) => v.norm(),
        }
    }

    fn scaled_add(&mut self, c: f64, other: TowerValue) {
        match (self, other) {
            (TowerValue::Scalar(a), TowerValue::Scalar(b)) => *a += c * b,
            (TowerValue::Vector(a), TowerValue::Vector(b)) => *a += c * b,
            _ => panic!("mixed tower-value kinds in one expression"),
        }
    }
}

/// Identifies one tower field.
///
/// `level` is the floor `l >= -1` for the div-grad, curl-curl and exceptional
/// families, the height `k >= 0` for the Delta ladder, and fixed at 1 for
/// potential fields (their natural floor). Use the family constructors;
/// invalid combinations are rejected rather than silently mapped to zero
/// fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TowerIndex {
    family: Family,
    sign: Sign,
    level: i32,
    harmonic: SphHarmIndex,
}

impl TowerIndex {
    pub fn div_grad(sign: Sign, floor: i32, n: u32, m: u32) -> Result<Self, TowerError> {
        if floor < -1 {
            return Err(TowerError::FloorBelowGround { floor });
        }
        Ok(TowerIndex {
            family: Family::DivGrad,
            sign,
            level: floor,
            harmonic: SphHarmIndex::new(n, m)?,
        })
    }

    pub fn curl_curl(sign: Sign, floor: i32, n: u32, m: u32) -> Result<Self, TowerError> {
        if n == 0 {
            return Err(TowerError::OrderZeroNotGeneric);
        }
        if floor < -1 {
            return Err(TowerError::FloorBelowGround { floor });
        }
        Ok(TowerIndex {
            family: Family::CurlCurl,
            sign,
            level: floor,
            harmonic: SphHarmIndex::new(n, m)?,
        })
    }

    pub fn potential(sign: Sign, n: u32, m: u32) -> Result<Self, TowerError> {
        if n == 0 {
            return Err(TowerError::OrderZeroNotGeneric);
        }
        Ok(TowerIndex {
            family: Family::Potential,
            sign,
            level: 1,
            harmonic: SphHarmIndex::new(n, m)?,
        })
    }

    pub fn delta(sign: Sign, k: i32, n: u32, m: u32) -> Result<Self, TowerError> {
        if k < 0 {
            return Err(TowerError::NegativeHeight { k });
        }
        Ok(TowerIndex {
            family: Family::Delta,
            sign,
            level: k,
            harmonic: SphHarmIndex::new(n, m)?,
        })
    }

    pub fn exceptional(sign: Sign, floor: i32) -> Result<Self, TowerError> {
        if floor < -1 {
            return Err(TowerError::FloorBelowGround { floor });
        }
        Ok(TowerIndex {
            family: Family::ExceptionalDivGrad,
            sign,
            level: floor,
            harmonic: SphHarmIndex::new(0, 1).expect("(0,1) is valid"),
        })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn sign(&self) -> Sign {
        self.sign
    }

    /// Floor `l` (or height `k` for the Delta family).
    pub fn level(&self) -> i32 {
        self.level
    }

    pub fn harmonic(&self) -> SphHarmIndex {
        self.harmonic
    }

    pub fn n(&self) -> u32 {
        self.harmonic.n()
    }

    pub fn m(&self) -> u32 {
        self.harmonic.m()
    }

    /// Value kind of this field.
    pub fn kind(&self) -> ValueKind {
        match self.family {
            Family::Delta => ValueKind::Scalar,
            Family::Potential | Family::CurlCurl => ValueKind::Vector,
            Family::DivGrad | Family::ExceptionalDivGrad => {
                if self.level.rem_euclid(2) == 0 {
                    ValueKind::Scalar
                } else {
                    ValueKind::Vector
                }
            }
        }
    }

    /// Ladder height `k` reaching this floor: `l = 2k` or `l = 2k - 1`.
    fn height(&self) -> u32 {
        match self.family {
            Family::Delta => self.level as u32,
            Family::Potential => 1,
            _ => ((self.level + 1).div_euclid(2)) as u32,
        }
    }
}

impl fmt::Display for TowerIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (n, m) = (self.harmonic.n(), self.harmonic.m());
        match self.family {
            Family::DivGrad => write!(f, "U{}[n={n},m={m}]^{}", self.sign, self.level),
            Family::CurlCurl => write!(f, "V{}[n={n},m={m}]^{}", self.sign, self.level),
            Family::Potential => write!(f, "P{}[n={n},m={m}]", self.sign),
            Family::Delta => write!(f, "z{}[n={n},m={m}]^{}", self.sign, self.level),
            Family::ExceptionalDivGrad => write!(f, "Uexc{}^{}", self.sign, self.level),
        }
    }
}

/// Differential operators closed over the tower algebra.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VectorOp {
    Grad,
    Curl,
    Div,
    Laplacian,
}

impl VectorOp {
    fn result_kind(self, input: ValueKind) -> ValueKind {
        match self {
            VectorOp::Grad | VectorOp::Curl => ValueKind::Vector,
            VectorOp::Div => ValueKind::Scalar,
            VectorOp::Laplacian => input,
        }
    }
}

/// Normalization coefficient `xi^k` of the Delta ladder:
/// `Gamma(1 +- (n + 1/2)) / (4^k k! Gamma(k + 1 +- (n + 1/2)))`,
/// evaluated through sign-aware log-gamma. `xi^0 = 1` for both signs, and the
/// ratio `xi^{k-1} / xi^k = 4k (k +- (n + 1/2))` is exactly what makes the
/// Laplacian step down the ladder.
pub fn xi_coeff(sign: Sign, n: u32, k: u32) -> f64 {
    let half = sign.signum() * (f64::from(n) + 0.5);
    let (ln_top, sign_top) = ln_gamma_signed(1.0 + half);
    let (ln_bottom, sign_bottom) = ln_gamma_signed(f64::from(k) + 1.0 + half);
    let ln_k_fact = ln_gamma_signed(f64::from(k) + 1.0).0;
    let magnitude = (ln_top - ln_bottom - ln_k_fact - f64::from(k) * 4.0_f64.ln()).exp();
    sign_top * sign_bottom * magnitude
}

/// Homogeneity degree of the tower field: `eval(c x) = c^degree eval(x)`.
pub fn homogeneity_degree(idx: &TowerIndex) -> i32 {
    let theta = idx.sign.seed_degree(idx.harmonic.n());
    match idx.family {
        Family::DivGrad | Family::CurlCurl => theta + idx.level,
        Family::Potential => theta + 1,
        Family::Delta => theta + 2 * idx.level,
        Family::ExceptionalDivGrad => idx.level - idx.sign.exceptional_shift(),
    }
}

/// The measured constant `c` in the ground identity
/// `V^{-1}_{n,m} = c * U^{-1}_{n,m}`; equals `theta + 1`, i.e. `-n` for
/// decaying towers and `n + 1` for growing ones. Pinned by the
/// finite-difference oracle (the two floor-(-1) rungs are proportional, not
/// equal, under the normalizations used here).
pub fn ground_identity_constant(sign: Sign, n: u32) -> f64 {
    f64::from(sign.seed_degree(n) + 1)
}

/// Evaluate a tower field at a Cartesian point (closed forms only; no
/// numerical differentiation).
pub fn eval_tower(idx: &TowerIndex, point: Vec3) -> Result<TowerValue, TowerError> {
    if point == Vec3::ZERO {
        return Err(TowerError::OriginSingular);
    }
    let (dir, r) = Direction::from_cartesian(point)?;
    let theta = idx.sign.seed_degree(idx.harmonic.n()) as f64;
    let k = idx.height();
    let xi = xi_coeff(idx.sign, idx.harmonic.n(), k);
    let two_k = 2.0 * f64::from(k);

    match idx.family {
        Family::Delta => {
            let y = sphere::eval_harmonic(idx.harmonic, &dir);
            Ok(TowerValue::Scalar(xi * r.powf(theta + two_k) * y))
        }
        Family::DivGrad => {
            if idx.level % 2 == 0 {
                let y = sphere::eval_harmonic(idx.harmonic, &dir);
                Ok(TowerValue::Scalar(xi * r.powf(theta + two_k) * y))
            } else {
                // grad z^k = xi r^{theta+2k-1} [ (theta+2k) y e_r + Y ]
                let y = sphere::eval_harmonic(idx.harmonic, &dir);
                let big_y = sphere::surface_gradient(idx.harmonic, &dir);
                let radial = (theta + two_k) * y * dir.unit();
                Ok(TowerValue::Vector(
                    xi * r.powf(theta + two_k - 1.0) * (radial + big_y),
                ))
            }
        }
        Family::CurlCurl => {
            let big_y = sphere::surface_gradient(idx.harmonic, &dir);
            if idx.level % 2 == 0 {
                Ok(TowerValue::Vector(
                    xi * r.powf(theta + two_k) * dir.unit().cross(big_y),
                ))
            } else {
                // -curl V^{2k} = xi r^{theta+2k-1} [ n(n+1) y e_r + (theta+2k+1) Y ]
                let y = sphere::eval_harmonic(idx.harmonic, &dir);
                let lambda = idx.harmonic.eigenvalue();
                let radial = lambda * y * dir.unit();
                let tangential = (theta + two_k + 1.0) * big_y;
                Ok(TowerValue::Vector(
                    xi * r.powf(theta + two_k - 1.0) * (radial + tangential),
                ))
            }
        }
        Family::Potential => {
            // 2 xi^1 r^{theta+1} [ (theta+1) y e_r - Y ]
            let y = sphere::eval_harmonic(idx.harmonic, &dir);
            let big_y = sphere::surface_gradient(idx.harmonic, &dir);
            let combo = (theta + 1.0) * y * dir.unit() - big_y;
            Ok(TowerValue::Vector(2.0 * xi * r.powf(theta + 1.0) * combo))
        }
        Family::ExceptionalDivGrad => {
            let shift = idx.sign.exceptional_shift() as f64;
            if idx.level % 2 == 0 {
                Ok(TowerValue::Scalar(xi * r.powf(two_k - shift)))
            } else {
                let coef = two_k - shift;
                Ok(TowerValue::Vector(
                    xi * coef * r.powf(two_k - 1.0 - shift) * dir.unit(),
                ))
            }
        }
    }
}

/// A finite linear combination of tower fields, the closed result type of
/// [`apply_operator`]. Usually a single term with coefficient 1; the empty
/// combination is the zero field of the stated kind.
#[derive(Debug, Clone, PartialEq)]
pub struct TowerExpr {
    kind: ValueKind,
    terms: Vec<(f64, TowerIndex)>,
}

impl TowerExpr {
    fn zero(kind: ValueKind) -> Self {
        TowerExpr {
            kind,
            terms: Vec::new(),
        }
    }

    fn single(kind: ValueKind, coef: f64, idx: TowerIndex) -> Self {
        TowerExpr {
            kind,
            terms: vec![(coef, idx)],
        }
    }

    pub fn kind(&self) -> ValueKind {
        self.kind
    }

    pub fn terms(&self) -> &[(f64, TowerIndex)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, point: Vec3) -> Result<TowerValue, TowerError> {
        let mut acc = TowerValue::zero(self.kind);
        for (coef, idx) in &self.terms {
            acc.scaled_add(*coef, eval_tower(idx, point)?);
        }
        Ok(acc)
    }
}

/// The symbolic tower algebra: apply a differential operator to a tower index
/// and get the exact resulting combination. Every relation below is an
/// identity of the closed forms (the finite-difference oracle reproduces each
/// one to its truncation error):
///
/// * `grad U^{2k} = U^{2k-1}`, `div U^{2k+1} = U^{2k}`, `div U^{-1} = 0`,
///   `curl U^{odd} = 0`, `Delta U^l = U^{l-2}`;
/// * `curl V^{2k} = -V^{2k-1}`, `curl V^{2k+1} = V^{2k}`, `curl V^{-1} = 0`,
///   `div V^l = 0`, `Delta V^l = V^{l-2}`;
/// * `Delta z^k = z^{k-1}` (`z^{-1} = 0`), `grad z^k = U^{2k-1}`;
/// * `curl P = -V^0`, `div P = (theta+1) U^0`, `Delta P = 0`;
/// * the exceptional ladder mirrors the div-grad rules.
///
/// Floors below -1 are the zero field.
pub fn apply_operator(op: VectorOp, idx: &TowerIndex) -> Result<TowerExpr, TowerError> {
    let input_kind = idx.kind();
    let out = op.result_kind(input_kind);
    let mismatch = || TowerError::KindMismatch {
        op,
        kind: input_kind,
    };
    let step = |family_ctor: &dyn Fn(i32) -> TowerIndex, floor: i32| -> TowerExpr {
        if floor < -1 {
            TowerExpr::zero(out)
        } else {
            TowerExpr::single(out, 1.0, family_ctor(floor))
        }
    };

    match idx.family {
        Family::DivGrad => {
            let mk = |floor: i32| TowerIndex {
                level: floor,
                ..*idx
            };
            let even = idx.level % 2 == 0;
            match (op, even) {
                (VectorOp::Grad, true) => Ok(step(&mk, idx.level - 1)),
                (VectorOp::Laplacian, _) => Ok(step(&mk, idx.level - 2)),
                (VectorOp::Div, false) => Ok(step(&mk, idx.level - 1)),
                (VectorOp::Curl, false) => Ok(TowerExpr::zero(out)),
                _ => Err(mismatch()),
            }
        }
        Family::CurlCurl => {
            let mk = |floor: i32| TowerIndex {
                level: floor,
                ..*idx
            };
            let even = idx.level % 2 == 0;
            match (op, even) {
                (VectorOp::Curl, true) => {
                    // curl V^{2k} = -V^{2k-1}; the ground V^0 maps to -V^{-1}
                    Ok(TowerExpr::single(out, -1.0, mk(idx.level - 1)))
                }
                (VectorOp::Curl, false) => Ok(step(&mk, idx.level - 1)),
                (VectorOp::Div, _) => Ok(TowerExpr::zero(out)),
                (VectorOp::Laplacian, _) => Ok(step(&mk, idx.level - 2)),
                _ => Err(mismatch()),
            }
        }
        Family::Potential => {
            let theta = idx.sign.seed_degree(idx.harmonic.n()) as f64;
            match op {
                VectorOp::Curl => {
                    let v0 = TowerIndex {
                        family: Family::CurlCurl,
                        level: 0,
                        ..*idx
                    };
                    Ok(TowerExpr::single(out, -1.0, v0))
                }
                VectorOp::Div => {
                    let u0 = TowerIndex {
                        family: Family::DivGrad,
                        level: 0,
                        ..*idx
                    };
                    Ok(TowerExpr::single(out, theta + 1.0, u0))
                }
                VectorOp::Laplacian => Ok(TowerExpr::zero(out)),
                VectorOp::Grad => Err(mismatch()),
            }
        }
        Family::Delta => match op {
            VectorOp::Grad => {
                let u = TowerIndex {
                    family: Family::DivGrad,
                    level: 2 * idx.level - 1,
                    ..*idx
                };
                Ok(TowerExpr::single(out, 1.0, u))
            }
            VectorOp::Laplacian => {
                if idx.level == 0 {
                    Ok(TowerExpr::zero(out))
                } else {
                    Ok(TowerExpr::single(
                        out,
                        1.0,
                        TowerIndex {
                            level: idx.level - 1,
                            ..*idx
                        },
                    ))
                }
            }
            _ => Err(mismatch()),
        },
        Family::ExceptionalDivGrad => {
            let mk = |floor: i32| TowerIndex {
                level: floor,
                ..*idx
            };
            let even = idx.level % 2 == 0;
            match (op, even) {
                (VectorOp::Grad, true) => Ok(step(&mk, idx.level - 1)),
                (VectorOp::Laplacian, _) => Ok(step(&mk, idx.level - 2)),
                (VectorOp::Div, false) => Ok(step(&mk, idx.level - 1)),
                (VectorOp::Curl, false) => Ok(TowerExpr::zero(out)),
                _ => Err(mismatch()),
            }
        }
    }
}

/// Point-evaluable field handed to the finite-difference oracle.
pub enum PointField<'a> {
    Scalar(&'a dyn Fn(Vec3) -> f64),
    Vector(&'a dyn Fn(Vec3) -> Vec3),
}

impl PointField<'_> {
    fn kind(&self) -> ValueKind {
        match self {
            PointField::Scalar(_) => ValueKind::Scalar,
            PointField::Vector(_) => ValueKind::Vector,
        }
    }
}

/// Fourth-order central-difference oracle in Cartesian coordinates.
///
/// Exists to verify the symbolic tower algebra independently; production
/// evaluation always uses the closed forms. The stencil reaches `2h` along
/// each axis, so the point must keep distance greater than `4h` from the
/// origin.
pub fn fd_oracle(
    field: &PointField,
    op: VectorOp,
    point: Vec3,
    h: f64,
) -> Result<TowerValue, TowerError> {
    assert!(h > 0.0 && h.is_finite());
    let r = point.norm();
    if r <= 4.0 * h {
        return Err(TowerError::OriginProximity { r, h });
    }
    let axes = [
        Vec3::new(1.0, 0.0, 0.0),
        Vec3::new(0.0, 1.0, 0.0),
        Vec3::new(0.0, 0.0, 1.0),
    ];

    // 4th-order first derivative along axis i of a scalar sample
    let d1 = |f: &dyn Fn(Vec3) -> f64, i: usize| -> f64 {
        let e = axes[i];
        (-f(point + 2.0 * h * e) + 8.0 * f(point + h * e) - 8.0 * f(point - h * e)
            + f(point - 2.0 * h * e))
            / (12.0 * h)
    };
    // 4th-order second derivative along axis i
    let d2 = |f: &dyn Fn(Vec3) -> f64, i: usize| -> f64 {
        let e = axes[i];
        (-f(point + 2.0 * h * e) + 16.0 * f(point + h * e) - 30.0 * f(point)
            + 16.0 * f(point - h * e)
            - f(point - 2.0 * h * e))
            / (12.0 * h * h)
    };

    match (op, field) {
        (VectorOp::Grad, PointField::Scalar(f)) => {
            Ok(TowerValue::Vector(Vec3::new(d1(f, 0), d1(f, 1), d1(f, 2))))
        }
        (VectorOp::Laplacian, PointField::Scalar(f)) => {
            Ok(TowerValue::Scalar(d2(f, 0) + d2(f, 1) + d2(f, 2)))
        }
        (VectorOp::Div, PointField::Vector(f)) => {
            let fx = |p: Vec3| f(p).x;
            let fy = |p: Vec3| f(p).y;
            let fz = |p: Vec3| f(p).z;
            Ok(TowerValue::Scalar(d1(&fx, 0) + d1(&fy, 1) + d1(&fz, 2)))
        }
        (VectorOp::Curl, PointField::Vector(f)) => {
            let fx = |p: Vec3| f(p).x;
            let fy = |p: Vec3| f(p).y;
            let fz = |p: Vec3| f(p).z;
            Ok(TowerValue::Vector(Vec3::new(
                d1(&fz, 1) - d1(&fy, 2),
                d1(&fx, 2) - d1(&fz, 0),
                d1(&fy, 0) - d1(&fx, 1),
            )))
        }
        (VectorOp::Laplacian, PointField::Vector(f)) => {
            let comp = |pick: &dyn Fn(Vec3) -> f64| d2(pick, 0) + d2(pick, 1) + d2(pick, 2);
            let fx = |p: Vec3| f(p).x;
            let fy = |p: Vec3| f(p).y;
            let fz = |p: Vec3| f(p).z;
            Ok(TowerValue::Vector(Vec3::new(
                comp(&fx),
                comp(&fy),
                comp(&fz),
            )))
        }
        _ => Err(TowerError::KindMismatch {
            op,
            kind: field.kind(),
        }),
    }
}
