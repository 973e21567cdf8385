//! Benchmark contact problems: geometry, material law, loads, superpotentials
//! and the constraint masks that build the essential boundary conditions into
//! the trial field.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Point = [f64; 2];
pub type Vec2 = [f64; 2];
/// Row-major 2x2 matrix; for Jacobians `m[i][k] = ∂ v_i / ∂ x_k`.
pub type Mat2 = [[f64; 2]; 2];

/// Coordinate tolerance used to resolve boundary membership.
pub const GEOM_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum ProblemError {
    #[error("unknown problem {0:?} (available: bilateral, normal-compliance, manufactured)")]
    UnknownProblem(String),
    #[error("elasticity law is singular: {0}")]
    SingularLaw(String),
    #[error("point ({x}, {y}) does not lie on {region}")]
    RegionMismatch { x: f64, y: f64, region: String },
    #[error("invalid geometry: {0}")]
    Geometry(String),
}

/// Symmetric 2x2 tensor.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Sym2 {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl Sym2 {
    pub const IDENTITY: Sym2 = Sym2 { xx: 1.0, xy: 0.0, yy: 1.0 };

    pub fn new(xx: f64, xy: f64, yy: f64) -> Self {
        Self { xx, xy, yy }
    }

    /// Symmetric part of a Jacobian: `ε = ½(∇v + ∇vᵀ)`.
    pub fn strain(grad: &Mat2) -> Self {
        Self { xx: grad[0][0], xy: 0.5 * (grad[0][1] + grad[1][0]), yy: grad[1][1] }
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy
    }

    /// Full contraction `a : b`.
    pub fn ddot(&self, other: &Sym2) -> f64 {
        self.xx * other.xx + 2.0 * self.xy * other.xy + self.yy * other.yy
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { xx: c * self.xx, xy: c * self.xy, yy: c * self.yy }
    }

    pub fn add(&self, other: &Sym2) -> Self {
        Self { xx: self.xx + other.xx, xy: self.xy + other.xy, yy: self.yy + other.yy }
    }

    /// `σ ν` for a symmetric `σ`.
    pub fn apply(&self, v: Vec2) -> Vec2 {
        [self.xx * v[0] + self.xy * v[1], self.xy * v[0] + self.yy * v[1]]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    PlaneStress,
    PlaneStrain,
}

/// Isotropic law `σ = λ* tr(ε) I + E/(1+κ) ε`, with `λ* = Eκ/(1−κ²)` in plane
/// stress and `Eκ/((1+κ)(1−2κ))` in plane strain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElasticityLaw {
    pub young_modulus: f64,
    pub poisson_ratio: f64,
    pub regime: Regime,
}

impl ElasticityLaw {
    pub fn new(young_modulus: f64, poisson_ratio: f64, regime: Regime) -> Result<Self, ProblemError> {
        let law = Self { young_modulus, poisson_ratio, regime };
        law.coefficients()?;
        Ok(law)
    }

    /// `(trace coefficient, strain coefficient)`.
    pub fn coefficients(&self) -> Result<(f64, f64), ProblemError> {
        let (e, k) = (self.young_modulus, self.poisson_ratio);
        if !(e > 0.0) {
            return Err(ProblemError::SingularLaw(format!("Young modulus {e} must be positive")));
        }
        let trace = match self.regime {
            Regime::PlaneStress => {
                if !(k > -1.0 && k < 1.0) {
                    return Err(ProblemError::SingularLaw(format!("plane stress with κ = {k}")));
                }
                e * k / (1.0 - k * k)
            }
            Regime::PlaneStrain => {
                if !(k > -1.0 && k < 0.5) {
                    return Err(ProblemError::SingularLaw(format!("plane strain with κ = {k}")));
                }
                e * k / ((1.0 + k) * (1.0 - 2.0 * k))
            }
        };
        Ok((trace, e / (1.0 + k)))
    }

    pub fn apply(&self, eps: &Sym2) -> Result<Sym2, ProblemError> {
        let (lambda, mu) = self.coefficients()?;
        Ok(Self::apply_with(lambda, mu, eps))
    }

    fn apply_with(lambda: f64, mu: f64, eps: &Sym2) -> Sym2 {
        Sym2::IDENTITY.scaled(lambda * eps.trace()).add(&eps.scaled(mu))
    }
}

/// Free-function form of [`ElasticityLaw::apply`].
pub fn apply_elasticity(law: &ElasticityLaw, eps: &Sym2) -> Result<Sym2, ProblemError> {
    law.apply(eps)
}

/// `j_τ(z) = ∫₀^{|z|} 450 e^{−2000t} + 450 dt`, as a function of `r = |z|`.
pub fn j_tau_of_norm(r: f64) -> f64 {
    450.0 * r + 0.225 * (1.0 - (-2000.0 * r).exp())
}

pub fn j_tau_of_norm_derivative(r: f64) -> f64 {
    450.0 * (-2000.0 * r).exp() + 450.0
}

pub fn j_tau(z: Vec2) -> f64 {
    j_tau_of_norm(z[0].hypot(z[1]))
}

/// Piecewise-quadratic normal compliance superpotential.
pub fn j_nu(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else if u <= 0.1 {
        50.0 * u * u + 0.1 * u
    } else if u < 0.15 {
        20.1 * u - 50.0 * u * u - 1.0
    } else {
        200.0 * u * u - 54.9 * u + 4.625
    }
}

/// Derivative of [`j_nu`]; 0 on the left of the kink at the origin.
pub fn j_nu_derivative(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else if u <= 0.1 {
        100.0 * u + 0.1
    } else if u < 0.15 {
        20.1 - 100.0 * u
    } else {
        400.0 * u - 54.9
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuperPotential {
    None,
    /// `j_τ` of the tangential trace.
    TangentialFriction,
    /// `j_ν` of the normal trace.
    NormalCompliance,
}

/// Decomposes `φ` on a boundary with unit outward normal `ν` into
/// `φ_ν = φ·ν` and `φ_τ = φ − φ_ν ν`.
pub fn contact_traces(phi: Vec2, normal: Vec2) -> (f64, Vec2) {
    let n = phi[0] * normal[0] + phi[1] * normal[1];
    (n, [phi[0] - n * normal[0], phi[1] - n * normal[1]])
}

/// Smooth field `b` multiplied componentwise with the raw network output.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConstraintMask {
    /// Clamped at `x = length`, zero normal displacement at `y = 0`:
    /// `b = ((L − x)/L, (L − x) y / (2L))`.
    Cantilever { length: f64 },
    /// Clamped at `x = x0` and `x = x1`: `b_i = (x − x0)(x1 − x)`.
    ClampedSides { x0: f64, x1: f64 },
    Identity,
}

impl ConstraintMask {
    /// Mask values and Jacobian `db[i][k] = ∂ b_i / ∂ x_k`.
    pub fn eval(&self, p: Point) -> (Vec2, Mat2) {
        let [x, y] = p;
        match *self {
            ConstraintMask::Cantilever { length: l } => (
                [(l - x) / l, (l - x) * y / (2.0 * l)],
                [[-1.0 / l, 0.0], [-y / (2.0 * l), (l - x) / (2.0 * l)]],
            ),
            ConstraintMask::ClampedSides { x0, x1 } => {
                let b = (x - x0) * (x1 - x);
                let db = x0 + x1 - 2.0 * x;
                ([b, b], [[db, 0.0], [db, 0.0]])
            }
            ConstraintMask::Identity => ([1.0, 1.0], [[0.0, 0.0], [0.0, 0.0]]),
        }
    }
}

/// Axis-aligned rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: Point,
    pub max: Point,
}

impl Rect {
    pub fn new(min: Point, max: Point) -> Self {
        Self { min, max }
    }

    pub fn width(&self) -> f64 {
        self.max[0] - self.min[0]
    }

    pub fn height(&self) -> f64 {
        self.max[1] - self.min[1]
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    /// Closure membership with tolerance.
    pub fn contains(&self, p: Point, tol: f64) -> bool {
        p[0] >= self.min[0] - tol
            && p[0] <= self.max[0] + tol
            && p[1] >= self.min[1] - tol
            && p[1] <= self.max[1] + tol
    }
}

/// Straight boundary piece with its unit outward normal.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: Point,
    pub end: Point,
    pub normal: Vec2,
}

impl Segment {
    pub fn new(start: Point, end: Point, normal: Vec2) -> Self {
        Self { start, end, normal }
    }

    pub fn length(&self) -> f64 {
        (self.end[0] - self.start[0]).hypot(self.end[1] - self.start[1])
    }

    pub fn point_at(&self, t: f64) -> Point {
        [
            self.start[0] + t * (self.end[0] - self.start[0]),
            self.start[1] + t * (self.end[1] - self.start[1]),
        ]
    }

    /// Distance from `p` to the closed segment.
    pub fn distance(&self, p: Point) -> f64 {
        let d = [self.end[0] - self.start[0], self.end[1] - self.start[1]];
        let len2 = d[0] * d[0] + d[1] * d[1];
        let t = (((p[0] - self.start[0]) * d[0] + (p[1] - self.start[1]) * d[1]) / len2).clamp(0.0, 1.0);
        let q = self.point_at(t);
        (p[0] - q[0]).hypot(p[1] - q[1])
    }

    pub fn contains(&self, p: Point, tol: f64) -> bool {
        self.distance(p) <= tol
    }
}

pub type LoadFn = Arc<dyn Fn(Point) -> Vec2 + Send + Sync>;

/// A traction-loaded boundary piece.
#[derive(Clone)]
pub struct TractionSegment {
    pub segment: Segment,
    pub load: LoadFn,
}

/// Region tag used to look up loads.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Region {
    Domain,
    Dirichlet(usize),
    Traction(usize),
    Contact(usize),
}

/// Complete description of one contact problem.
#[derive(Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub domain: Rect,
    pub dirichlet: Vec<Segment>,
    pub traction: Vec<TractionSegment>,
    pub contact: Vec<Segment>,
    pub law: ElasticityLaw,
    pub body_force: LoadFn,
    pub potential: SuperPotential,
    pub mask: ConstraintMask,
    /// Informational only.
    pub units: &'static str,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("dirichlet", &self.dirichlet)
            .field("traction", &self.traction.iter().map(|t| t.segment).collect::<Vec<_>>())
            .field("contact", &self.contact)
            .field("law", &self.law)
            .field("potential", &self.potential)
            .field("mask", &self.mask)
            .finish()
    }
}

impl ProblemSpec {
    pub fn area(&self) -> f64 {
        self.domain.area()
    }

    pub fn traction_length(&self) -> f64 {
        self.traction.iter().map(|t| t.segment.length()).sum()
    }

    pub fn contact_length(&self) -> f64 {
        self.contact.iter().map(Segment::length).sum()
    }

    pub fn dirichlet_length(&self) -> f64 {
        self.dirichlet.iter().map(Segment::length).sum()
    }

    /// Body force in Ω or traction on a Γ_T piece.
    pub fn load(&self, p: Point, region: Region) -> Result<Vec2, ProblemError> {
        let mismatch = |region: String| ProblemError::RegionMismatch { x: p[0], y: p[1], region };
        match region {
            Region::Domain => {
                if !self.domain.contains(p, GEOM_TOL) {
                    return Err(mismatch("the domain".into()));
                }
                Ok((self.body_force)(p))
            }
            Region::Traction(i) => {
                let seg = self.traction.get(i).ok_or_else(|| mismatch(format!("traction segment {i}")))?;
                if !seg.segment.contains(p, GEOM_TOL) {
                    return Err(mismatch(format!("traction segment {i}")));
                }
                Ok((seg.load)(p))
            }
            Region::Dirichlet(_) | Region::Contact(_) => {
                Err(mismatch(format!("{region:?} (no prescribed load)")))
            }
        }
    }

    /// Checks disjointness and positive measures of the boundary pieces.
    pub fn validate(&self) -> Result<(), ProblemError> {
        self.law.coefficients()?;
        if self.dirichlet_length() <= 0.0 {
            return Err(ProblemError::Geometry("Γ_D must have positive length".into()));
        }
        if self.potential != SuperPotential::None && self.contact_length() <= 0.0 {
            return Err(ProblemError::Geometry("Γ_C must have positive length".into()));
        }
        let all: Vec<Segment> = self
            .dirichlet
            .iter()
            .copied()
            .chain(self.traction.iter().map(|t| t.segment))
            .chain(self.contact.iter().copied())
            .collect();
        for (i, a) in all.iter().enumerate() {
            for b in &all[i + 1..] {
                // pieces may share endpoints only
                let mid = a.point_at(0.5);
                if b.contains(mid, GEOM_TOL) {
                    return Err(ProblemError::Geometry("boundary pieces overlap".into()));
                }
            }
        }
        Ok(())
    }

    pub fn by_name(name: &str) -> Result<Self, ProblemError> {
        match name {
            "bilateral" => Ok(bilateral_contact()),
            "normal-compliance" | "compliance" => Ok(normal_compliance()),
            "manufactured" => Ok(manufactured_problem(Arc::new(ShearBubble))),
            other => Err(ProblemError::UnknownProblem(other.to_string())),
        }
    }
}

fn constant_load(v: Vec2) -> LoadFn {
    Arc::new(move |_| v)
}

/// Frictional bilateral contact on `(0,4)²`, plane stress, clamped at `x = 4`.
pub fn bilateral_contact() -> ProblemSpec {
    ProblemSpec {
        name: "bilateral".into(),
        domain: Rect::new([0.0, 0.0], [4.0, 4.0]),
        dirichlet: vec![Segment::new([4.0, 0.0], [4.0, 4.0], [1.0, 0.0])],
        traction: vec![
            TractionSegment {
                segment: Segment::new([0.0, 0.0], [0.0, 4.0], [-1.0, 0.0]),
                load: Arc::new(|p: Point| [200.0 * (5.0 - p[1]), -200.0]),
            },
            TractionSegment {
                segment: Segment::new([0.0, 4.0], [4.0, 4.0], [0.0, 1.0]),
                load: constant_load([0.0, 0.0]),
            },
        ],
        contact: vec![Segment::new([0.0, 0.0], [4.0, 0.0], [0.0, -1.0])],
        law: ElasticityLaw { young_modulus: 2000.0, poisson_ratio: 0.4, regime: Regime::PlaneStress },
        body_force: constant_load([0.0, 0.0]),
        potential: SuperPotential::TangentialFriction,
        mask: ConstraintMask::Cantilever { length: 4.0 },
        units: "daN/mm^2",
    }
}

/// Frictionless normal compliance contact on `(0,1)²`, clamped at both sides.
pub fn normal_compliance() -> ProblemSpec {
    ProblemSpec {
        name: "normal-compliance".into(),
        domain: Rect::new([0.0, 0.0], [1.0, 1.0]),
        dirichlet: vec![
            Segment::new([0.0, 0.0], [0.0, 1.0], [-1.0, 0.0]),
            Segment::new([1.0, 0.0], [1.0, 1.0], [1.0, 0.0]),
        ],
        traction: vec![TractionSegment {
            segment: Segment::new([0.0, 1.0], [1.0, 1.0], [0.0, 1.0]),
            load: constant_load([0.0, -52.0]),
        }],
        contact: vec![Segment::new([0.0, 0.0], [1.0, 0.0], [0.0, -1.0])],
        law: ElasticityLaw { young_modulus: 70.0, poisson_ratio: 0.3, regime: Regime::PlaneStrain },
        body_force: constant_load([0.0, 0.0]),
        potential: SuperPotential::NormalCompliance,
        mask: ConstraintMask::ClampedSides { x0: 0.0, x1: 1.0 },
        units: "GPa",
    }
}

/// Closed-form displacement with analytic first and second derivatives.
pub trait ManufacturedField: Send + Sync {
    fn value(&self, p: Point) -> Vec2;
    /// `g[i][k] = ∂ u_i / ∂ x_k`
    fn gradient(&self, p: Point) -> Mat2;
    /// `h[i][j][k] = ∂² u_i / ∂ x_j ∂ x_k`
    fn hessian(&self, p: Point) -> [Mat2; 2];
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroField;

impl ManufacturedField for ZeroField {
    fn value(&self, _: Point) -> Vec2 {
        [0.0; 2]
    }
    fn gradient(&self, _: Point) -> Mat2 {
        [[0.0; 2]; 2]
    }
    fn hessian(&self, _: Point) -> [Mat2; 2] {
        [[[0.0; 2]; 2]; 2]
    }
}

/// `u = (x(1−x) y, 0)` on the unit square.
#[derive(Clone, Copy, Debug, Default)]
pub struct ShearBubble;

impl ManufacturedField for ShearBubble {
    fn value(&self, [x, y]: Point) -> Vec2 {
        [x * (1.0 - x) * y, 0.0]
    }
    fn gradient(&self, [x, y]: Point) -> Mat2 {
        [[(1.0 - 2.0 * x) * y, x * (1.0 - x)], [0.0, 0.0]]
    }
    fn hessian(&self, [x, y]: Point) -> [Mat2; 2] {
        [[[-2.0 * y, 1.0 - 2.0 * x], [1.0 - 2.0 * x, 0.0]], [[0.0; 2]; 2]]
    }
}

/// Stress of a manufactured field under `law`.
pub fn manufactured_stress(law: &ElasticityLaw, field: &dyn ManufacturedField, p: Point) -> Sym2 {
    let (lambda, mu) = law.coefficients().expect("validated law");
    ElasticityLaw::apply_with(lambda, mu, &Sym2::strain(&field.gradient(p)))
}

/// `f₀ = −div σ(ε(u))` from the analytic Hessian.
pub fn manufactured_body_force(law: &ElasticityLaw, field: &dyn ManufacturedField, p: Point) -> Vec2 {
    let (lambda, mu) = law.coefficients().expect("validated law");
    let h = field.hessian(p);
    // ∂_i div u = Σ_k ∂_i ∂_k u_k
    let grad_div = [h[0][0][0] + h[1][1][0], h[0][0][1] + h[1][1][1]];
    let laplace = [h[0][0][0] + h[0][1][1], h[1][0][0] + h[1][1][1]];
    [0, 1].map(|i| -(lambda * grad_div[i] + 0.5 * mu * (laplace[i] + grad_div[i])))
}

/// Linear-elasticity problem on the unit square whose energy minimizer is
/// `field`: clamped at `x = 0, 1`, loaded by `f₀ = −div σ(u)` and by the
/// matching tractions `σ(u)ν` on the top and bottom edges. There is no
/// contact boundary and no superpotential.
pub fn manufactured_problem(field: Arc<dyn ManufacturedField>) -> ProblemSpec {
    let law = ElasticityLaw { young_modulus: 70.0, poisson_ratio: 0.3, regime: Regime::PlaneStrain };
    let traction = |segment: Segment| {
        let field = field.clone();
        TractionSegment {
            segment,
            load: Arc::new(move |p| manufactured_stress(&law, field.as_ref(), p).apply(segment.normal)),
        }
    };
    let body = field.clone();
    ProblemSpec {
        name: "manufactured".into(),
        domain: Rect::new([0.0, 0.0], [1.0, 1.0]),
        dirichlet: vec![
            Segment::new([0.0, 0.0], [0.0, 1.0], [-1.0, 0.0]),
            Segment::new([1.0, 0.0], [1.0, 1.0], [1.0, 0.0]),
        ],
        traction: vec![
            traction(Segment::new([0.0, 1.0], [1.0, 1.0], [0.0, 1.0])),
            traction(Segment::new([0.0, 0.0], [1.0, 0.0], [0.0, -1.0])),
        ],
        contact: vec![],
        law,
        body_force: Arc::new(move |p| manufactured_body_force(&law, body.as_ref(), p)),
        potential: SuperPotential::None,
        mask: ConstraintMask::ClampedSides { x0: 0.0, x1: 1.0 },
        units: "GPa",
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn elasticity_hand_values() {
        let ex1 = bilateral_contact().law;
        let s = ex1.apply(&Sym2::IDENTITY).unwrap();
        let expected = 2.0 * (2000.0 * 0.4 / 0.84) + 2000.0 / 1.4;
        assert!((s.xx - expected).abs() < 1e-9);
        assert!((s.xx - 3333.33).abs() < 0.01);
        assert_eq!(s.xy, 0.0);

        let ex2 = normal_compliance().law;
        let s = ex2.apply(&Sym2::IDENTITY).unwrap();
        assert!((s.xx - (2.0 * (21.0 / 0.52) + 70.0 / 1.3)).abs() < 1e-9);
        assert!((s.xx - 134.615).abs() < 1e-3);

        assert_eq!(ex1.apply(&Sym2::default()).unwrap(), Sym2::default());
    }

    #[test]
    fn plane_strain_at_half_is_singular() {
        assert!(matches!(
            ElasticityLaw::new(70.0, 0.5, Regime::PlaneStrain),
            Err(ProblemError::SingularLaw(_))
        ));
        assert!(ElasticityLaw::new(70.0, 0.5, Regime::PlaneStress).is_ok());
    }

    #[test]
    fn j_tau_values() {
        assert_eq!(j_tau([0.0, 0.0]), 0.0);
        let v = j_tau([0.001, 0.0]);
        assert!((v - (0.45 + 0.225 * (1.0 - (-2.0f64).exp()))).abs() < 1e-15);
        assert!((v - 0.64455).abs() < 1e-5);
        let (a, b) = (0.013, -0.004);
        assert_eq!(j_tau([a, b]), j_tau([b, a]));
        assert_eq!(j_tau([a, b]), j_tau([-a, b]));
    }

    #[test]
    fn j_nu_branches() {
        assert_eq!(j_nu(-1.0), 0.0);
        assert!((j_nu(0.1) - 0.51).abs() < 1e-12);
        assert!((20.1 * 0.1 - 50.0 * 0.01 - 1.0 - 0.51f64).abs() < 1e-12);
        assert!((j_nu(0.15) - 0.89).abs() < 1e-12);
        assert!((20.1 * 0.15 - 50.0 * 0.0225 - 1.0 - 0.89f64).abs() < 1e-12);
    }

    #[test]
    fn loads() {
        let ex1 = bilateral_contact();
        assert_eq!(ex1.load([0.0, 1.0], Region::Traction(0)).unwrap(), [800.0, -200.0]);
        assert_eq!(ex1.load([2.0, 4.0], Region::Traction(1)).unwrap(), [0.0, 0.0]);
        assert_eq!(ex1.load([1.3, 2.2], Region::Domain).unwrap(), [0.0, 0.0]);
        assert!(matches!(
            ex1.load([2.0, 2.0], Region::Traction(0)),
            Err(ProblemError::RegionMismatch { .. })
        ));
        assert!(ex1.load([5.0, 2.0], Region::Domain).is_err());

        let ex2 = normal_compliance();
        assert_eq!(ex2.load([0.5, 1.0], Region::Traction(0)).unwrap(), [0.0, -52.0]);
        assert_eq!(ex2.load([0.5, 0.5], Region::Domain).unwrap(), [0.0, 0.0]);
        for t in [0.1, 0.4, 0.9] {
            let f = ex2.load([t, 1.0], Region::Traction(0)).unwrap();
            assert_eq!(f[0].hypot(f[1]), 52.0);
        }
    }

    #[test]
    fn measures() {
        let ex1 = bilateral_contact();
        assert_eq!((ex1.area(), ex1.traction_length(), ex1.contact_length()), (16.0, 8.0, 4.0));
        let ex2 = normal_compliance();
        assert_eq!((ex2.area(), ex2.traction_length(), ex2.contact_length()), (1.0, 1.0, 1.0));
        for p in [bilateral_contact(), normal_compliance(), ProblemSpec::by_name("manufactured").unwrap()] {
            p.validate().unwrap();
        }
    }

    #[test]
    fn unknown_problem_name() {
        assert_eq!(
            ProblemSpec::by_name("nope").unwrap_err(),
            ProblemError::UnknownProblem("nope".into())
        );
    }

    #[test]
    fn masks_vanish_where_required() {
        let (b, _) = ConstraintMask::Cantilever { length: 4.0 }.eval([4.0, 2.0]);
        assert_eq!(b, [0.0, 0.0]);
        let (b, _) = ConstraintMask::Cantilever { length: 4.0 }.eval([1.0, 0.0]);
        assert_eq!(b[1], 0.0);
        assert!(b[0] > 0.0);
        let m = ConstraintMask::ClampedSides { x0: 0.0, x1: 1.0 };
        assert_eq!(m.eval([0.0, 0.3]).0, [0.0, 0.0]);
        assert_eq!(m.eval([1.0, 0.3]).0, [0.0, 0.0]);
    }

    #[test]
    fn mask_jacobian_matches_finite_differences() {
        let h = 1e-6;
        for mask in [
            ConstraintMask::Cantilever { length: 4.0 },
            ConstraintMask::ClampedSides { x0: 0.0, x1: 1.0 },
        ] {
            let p = [0.37, 0.81];
            let (_, db) = mask.eval(p);
            for k in 0..2 {
                let mut pp = p;
                let mut pm = p;
                pp[k] += h;
                pm[k] -= h;
                for i in 0..2 {
                    let fd = (mask.eval(pp).0[i] - mask.eval(pm).0[i]) / (2.0 * h);
                    assert!((fd - db[i][k]).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn contact_trace_decomposition() {
        let (n, t) = contact_traces([3.0, -2.0], [0.0, -1.0]);
        assert_eq!(n, 2.0);
        assert_eq!(t, [3.0, 0.0]);
        assert_eq!(contact_traces([0.0, 0.0], [0.0, -1.0]), (0.0, [0.0, 0.0]));
        let nu = [0.6, 0.8];
        let phi = [0.3, -1.7];
        let (n, t) = contact_traces(phi, nu);
        for i in 0..2 {
            assert!((n * nu[i] + t[i] - phi[i]).abs() <= 1e-15);
        }
    }

    #[test]
    fn zero_manufactured_field_has_no_loads() {
        let spec = manufactured_problem(Arc::new(ZeroField));
        assert_eq!((spec.body_force)([0.3, 0.4]), [0.0, 0.0]);
        assert_eq!(spec.load([0.5, 1.0], Region::Traction(0)).unwrap(), [0.0, 0.0]);
    }

    #[test]
    fn manufactured_body_force_matches_divergence_of_stress() {
        let law = normal_compliance().law;
        let field = ShearBubble;
        let h = 1e-5;
        for p in [[0.2, 0.7], [0.55, 0.1], [0.9, 0.45]] {
            let f0 = manufactured_body_force(&law, &field, p);
            // divergence by central differences of the stress
            let sx = |q: Point| manufactured_stress(&law, &field, q);
            let dx_p = sx([p[0] + h, p[1]]);
            let dx_m = sx([p[0] - h, p[1]]);
            let dy_p = sx([p[0], p[1] + h]);
            let dy_m = sx([p[0], p[1] - h]);
            let div = [
                (dx_p.xx - dx_m.xx) / (2.0 * h) + (dy_p.xy - dy_m.xy) / (2.0 * h),
                (dx_p.xy - dx_m.xy) / (2.0 * h) + (dy_p.yy - dy_m.yy) / (2.0 * h),
            ];
            for i in 0..2 {
                assert!((f0[i] + div[i]).abs() < 1e-6, "{:?} vs {:?}", f0, div);
            }
        }
    }

    #[test]
    fn j_tau_matches_adaptive_quadrature() {
        fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
            fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
                let m = 0.5 * (a + b);
                let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
                let (flm, frm) = (f(lm), f(rm));
                let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
                let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
                if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                    return left + right + (left + right - whole) / 15.0;
                }
                rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                    + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
            }
            let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
            rec(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 50)
        }
        let integrand = |t: f64| 450.0 * (-2000.0 * t).exp() + 450.0;
        for i in 0..50 {
            let r = (i as f64 * 0.618_033_988_7).fract();
            let q = simpson(&integrand, 0.0, r, 1e-10);
            assert!((q - j_tau_of_norm(r)).abs() < 1e-9, "r = {r}");
        }
    }

    proptest! {
        #[test]
        fn elasticity_is_linear_and_symmetric(
            a in prop::array::uniform3(-1.0f64..1.0),
            b in prop::array::uniform3(-1.0f64..1.0),
            c in -3.0f64..3.0,
        ) {
            for law in [bilateral_contact().law, normal_compliance().law] {
                let e1 = Sym2::new(a[0], a[1], a[2]);
                let e2 = Sym2::new(b[0], b[1], b[2]);
                let lhs = law.apply(&e1).unwrap().ddot(&e2);
                let rhs = law.apply(&e2).unwrap().ddot(&e1);
                prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
                let lin = law.apply(&e1.scaled(c).add(&e2)).unwrap();
                let sep = law.apply(&e1).unwrap().scaled(c).add(&law.apply(&e2).unwrap());
                prop_assert!((lin.xx - sep.xx).abs() <= 1e-9 * (1.0 + sep.xx.abs()));
                prop_assert!((lin.xy - sep.xy).abs() <= 1e-9 * (1.0 + sep.xy.abs()));
                // coercivity
                let (_, mu) = law.coefficients().unwrap();
                prop_assert!(law.apply(&e1).unwrap().ddot(&e1) >= mu * e1.ddot(&e1) - 1e-12);
            }
        }
    }
}
