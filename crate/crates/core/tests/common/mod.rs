//! Shared test oracles: quadrature, closed-form fields and frozen values.
#![allow(dead_code)]

use hvi::evaluation::{gauss_legendre, tensor_quadrature};
use hvi::problems::{ManufacturedField, Mat2, Point, ProblemSpec, Segment, Vec2};
use hvi::sampling::{RegionSamples, SampleBatch};

/// Energy of [`Quadratic`] on the manufactured problem, `8575/156`
/// (exact rational from symbolic integration).
pub const QUADRATIC_ENERGY: f64 = 8575.0 / 156.0;
/// Bulk part of the same energy, `14525/312`.
pub const QUADRATIC_BULK: f64 = 14525.0 / 312.0;
/// Traction work of the same field, `-875/104`.
pub const QUADRATIC_TRACTION: f64 = -875.0 / 104.0;
/// Minimum energy of the manufactured problem, `-665/117`.
pub const MANUFACTURED_MIN_ENERGY: f64 = -665.0 / 117.0;
/// Energy norm of the manufactured solution, `sqrt(8645)/39`.
pub const MANUFACTURED_NORM: f64 = 2.384_063_900_939_042_3;

/// `φ = (x² − xy + y²/2, x²/4 + xy − y²)`
pub struct Quadratic;

impl ManufacturedField for Quadratic {
    fn value(&self, [x, y]: Point) -> Vec2 {
        [x * x - x * y + 0.5 * y * y, 0.25 * x * x + x * y - y * y]
    }
    fn gradient(&self, [x, y]: Point) -> Mat2 {
        [[2.0 * x - y, -x + y], [0.5 * x + y, x - 2.0 * y]]
    }
    fn hessian(&self, _: Point) -> [Mat2; 2] {
        [[[2.0, -1.0], [-1.0, 1.0]], [[0.5, 1.0], [1.0, -2.0]]]
    }
}

/// Sum of two fields.
pub struct Sum<'a>(pub &'a dyn ManufacturedField, pub &'a dyn ManufacturedField);

impl ManufacturedField for Sum<'_> {
    fn value(&self, p: Point) -> Vec2 {
        let (a, b) = (self.0.value(p), self.1.value(p));
        [a[0] + b[0], a[1] + b[1]]
    }
    fn gradient(&self, p: Point) -> Mat2 {
        let (a, b) = (self.0.gradient(p), self.1.gradient(p));
        [[a[0][0] + b[0][0], a[0][1] + b[0][1]], [a[1][0] + b[1][0], a[1][1] + b[1][1]]]
    }
    fn hessian(&self, p: Point) -> [Mat2; 2] {
        let (a, b) = (self.0.hessian(p), self.1.hessian(p));
        let mut h = a;
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    h[i][j][k] += b[i][j][k];
                }
            }
        }
        h
    }
}

/// `δ = x(1−x)(a₀ + a₁x + a₂y, b₀ + b₁x + b₂y)`, vanishing at `x = 0, 1`.
pub struct Bump {
    pub a: [f64; 3],
    pub b: [f64; 3],
}

impl ManufacturedField for Bump {
    fn value(&self, [x, y]: Point) -> Vec2 {
        let m = x * (1.0 - x);
        [m * (self.a[0] + self.a[1] * x + self.a[2] * y), m * (self.b[0] + self.b[1] * x + self.b[2] * y)]
    }
    fn gradient(&self, [x, y]: Point) -> Mat2 {
        let m = x * (1.0 - x);
        let dm = 1.0 - 2.0 * x;
        let row = |c: &[f64; 3]| {
            let l = c[0] + c[1] * x + c[2] * y;
            [dm * l + m * c[1], m * c[2]]
        };
        [row(&self.a), row(&self.b)]
    }
    fn hessian(&self, [x, y]: Point) -> [Mat2; 2] {
        let m = x * (1.0 - x);
        let dm = 1.0 - 2.0 * x;
        let h = |c: &[f64; 3]| {
            let l = c[0] + c[1] * x + c[2] * y;
            let xx = -2.0 * l + 2.0 * dm * c[1];
            let xy = dm * c[2];
            [[xx, xy], [xy, 0.0 * m]]
        };
        [h(&self.a), h(&self.b)]
    }
}

fn segment_rule(segs: &[Segment], order: usize, pieces: usize) -> RegionSamples {
    let (gx, gw) = gauss_legendre(order);
    let mut out = RegionSamples::default();
    for (s, seg) in segs.iter().enumerate() {
        let len = seg.length();
        for c in 0..pieces {
            for (t, w) in gx.iter().zip(&gw) {
                let u = (c as f64 + 0.5 * (t + 1.0)) / pieces as f64;
                out.points.push(seg.point_at(u));
                out.segments.push(s);
                out.weights.push(0.5 * w * len / pieces as f64);
            }
        }
    }
    out
}

/// A deterministic "batch" whose weights are a composite Gauss rule, so the
/// stochastic energy becomes a quadrature of the exact energy.
pub fn quadrature_batch(spec: &ProblemSpec, cells: usize, order: usize) -> SampleBatch {
    let nodes = tensor_quadrature(&spec.domain, cells, order);
    let domain = RegionSamples {
        segments: vec![0; nodes.len()],
        points: nodes.iter().map(|n| n.0).collect(),
        weights: nodes.iter().map(|n| n.1).collect(),
    };
    let tsegs: Vec<Segment> = spec.traction.iter().map(|t| t.segment).collect();
    SampleBatch {
        domain,
        traction: segment_rule(&tsegs, order, cells),
        contact: segment_rule(&spec.contact, order, cells),
        measures: (spec.area(), spec.traction_length(), spec.contact_length()),
        level: None,
    }
}

/// Adaptive Simpson quadrature with Richardson correction.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    struct Panel {
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
    }
    fn rec(f: &dyn Fn(f64) -> f64, p: Panel, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (p.a + p.b);
        let (flm, frm) = (f(0.5 * (p.a + m)), f(0.5 * (m + p.b)));
        let left = (m - p.a) / 6.0 * (p.fa + 4.0 * flm + p.fm);
        let right = (p.b - m) / 6.0 * (p.fm + 4.0 * frm + p.fb);
        let delta = left + right - p.whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, Panel { a: p.a, b: m, fa: p.fa, fm: flm, fb: p.fm, whole: left }, tol / 2.0, depth - 1)
            + rec(f, Panel { a: m, b: p.b, fa: p.fm, fm: frm, fb: p.fb, whole: right }, tol / 2.0, depth - 1)
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    rec(f, Panel { a, b, fa, fm, fb, whole: (b - a) / 6.0 * (fa + 4.0 * fm + fb) }, tol, 50)
}

/// `max_i |a_i − b_i| / max_i |a_i|`
pub fn normwise_relative_error(a: &[f64], b: &[f64]) -> f64 {
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let diff = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    diff / scale
}
