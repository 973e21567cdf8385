//! Energy norm, relative error against a reference field, and CSV export.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::{masked_field_batch, NetworkArch, NetworkError, ParamVector};
use crate::problems::{contact_traces, ElasticityLaw, ManufacturedField, Mat2, Point, ProblemError, ProblemSpec, Rect, Sym2, Vec2, GEOM_TOL};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("reference csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("empty quadrature")]
    EmptyQuadrature,
    #[error("invalid reference: {0}")]
    InvalidReference(String),
    #[error("reference node ({x}, {y}) lies outside the domain")]
    OutsideDomain { x: f64, y: f64 },
    #[error("reference field has zero energy norm")]
    ZeroReference,
    #[error("resolution must be at least 2, got {0}")]
    Resolution(usize),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

/// One quadrature node of a reference field.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceNode {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub u1: f64,
    pub u2: f64,
    pub du1dx: f64,
    pub du1dy: f64,
    pub du2dx: f64,
    pub du2dy: f64,
}

impl ReferenceNode {
    pub fn point(&self) -> Point {
        [self.x, self.y]
    }

    pub fn value(&self) -> Vec2 {
        [self.u1, self.u2]
    }

    pub fn gradient(&self) -> Mat2 {
        [[self.du1dx, self.du1dy], [self.du2dx, self.du2dy]]
    }
}

/// Displacement and displacement gradient at weighted nodes. Leading `#`
/// lines of the file are kept as `key=value` metadata.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ReferenceSolution {
    pub nodes: Vec<ReferenceNode>,
    pub metadata: Vec<(String, String)>,
}

pub const REFERENCE_HEADER: [&str; 9] = ["x", "y", "w", "u1", "u2", "du1dx", "du1dy", "du2dx", "du2dy"];

impl ReferenceSolution {
    pub fn from_reader(reader: impl Read) -> Result<Self, EvalError> {
        let mut text = String::new();
        BufReader::new(reader).read_to_string(&mut text)?;
        let mut metadata = Vec::new();
        for line in text.lines().take_while(|l| l.starts_with('#')) {
            for pair in line.trim_start_matches('#').split_whitespace() {
                if let Some((k, v)) = pair.split_once('=') {
                    metadata.push((k.to_string(), v.to_string()));
                }
            }
        }
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes());
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != REFERENCE_HEADER {
            return Err(EvalError::InvalidReference(format!(
                "header must be `{}`, found `{}`",
                REFERENCE_HEADER.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let nodes = rdr.deserialize().collect::<Result<Vec<ReferenceNode>, _>>()?;
        Ok(Self { nodes, metadata })
    }

    pub fn from_csv(path: &Path) -> Result<Self, EvalError> {
        Self::from_reader(std::fs::File::open(path)?)
    }

    pub fn write_csv(&self, mut w: impl Write) -> Result<(), EvalError> {
        for (k, v) in &self.metadata {
            writeln!(w, "# {k}={v}")?;
        }
        let mut wr = csv::Writer::from_writer(w);
        for n in &self.nodes {
            wr.serialize(n)?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Samples a closed-form field at the given weighted nodes.
    pub fn from_field(field: &dyn ManufacturedField, nodes: &[(Point, f64)]) -> Self {
        let nodes = nodes
            .iter()
            .map(|&(p, w)| {
                let u = field.value(p);
                let g = field.gradient(p);
                ReferenceNode {
                    x: p[0],
                    y: p[1],
                    w,
                    u1: u[0],
                    u2: u[1],
                    du1dx: g[0][0],
                    du1dy: g[0][1],
                    du2dx: g[1][0],
                    du2dy: g[1][1],
                }
            })
            .collect();
        Self { nodes, metadata: vec![("method".into(), "closed-form".into())] }
    }

    /// Positive weights summing to `|Ω|` within 1e-8, all nodes in `Ω̄`.
    pub fn validate(&self, spec: &ProblemSpec) -> Result<(), EvalError> {
        if self.nodes.is_empty() {
            return Err(EvalError::EmptyQuadrature);
        }
        for n in &self.nodes {
            let finite = [n.x, n.y, n.w, n.u1, n.u2, n.du1dx, n.du1dy, n.du2dx, n.du2dy].iter().all(|v| v.is_finite());
            if !finite {
                return Err(EvalError::InvalidReference(format!("non-finite entry at ({}, {})", n.x, n.y)));
            }
            if n.w <= 0.0 {
                return Err(EvalError::InvalidReference(format!("non-positive weight {} at ({}, {})", n.w, n.x, n.y)));
            }
            if !spec.domain.contains(n.point(), GEOM_TOL) {
                return Err(EvalError::OutsideDomain { x: n.x, y: n.y });
            }
        }
        let total: f64 = self.nodes.iter().map(|n| n.w).sum();
        if (total - spec.area()).abs() > 1e-8 {
            return Err(EvalError::InvalidReference(format!("weights sum to {total}, domain area is {}", spec.area())));
        }
        Ok(())
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // three-term recurrence for P_n and its derivative
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Composite tensor Gauss rule: `cells × cells` sub-rectangles with `order²`
/// nodes each.
pub fn tensor_quadrature(rect: &Rect, cells: usize, order: usize) -> Vec<(Point, f64)> {
    let (gx, gw) = gauss_legendre(order);
    let hx = rect.width() / cells as f64;
    let hy = rect.height() / cells as f64;
    let mut out = Vec::with_capacity(cells * cells * order * order);
    for ci in 0..cells {
        for cj in 0..cells {
            let x0 = rect.min[0] + ci as f64 * hx;
            let y0 = rect.min[1] + cj as f64 * hy;
            for (a, wa) in gx.iter().zip(&gw) {
                for (b, wb) in gx.iter().zip(&gw) {
                    let p = [x0 + 0.5 * hx * (a + 1.0), y0 + 0.5 * hy * (b + 1.0)];
                    out.push((p, 0.25 * hx * hy * wa * wb));
                }
            }
        }
    }
    out
}

/// `‖v‖_E = (1/√2) (Σ_k w_k F(ε(v_k)) : ε(v_k))^{1/2}`.
pub fn energy_norm(law: &ElasticityLaw, grads: &[Mat2], weights: &[f64]) -> Result<f64, EvalError> {
    if grads.is_empty() || grads.len() != weights.len() {
        return Err(EvalError::EmptyQuadrature);
    }
    let mut sum = 0.0;
    for (g, w) in grads.iter().zip(weights) {
        let eps = Sym2::strain(g);
        sum += w * law.apply(&eps)?.ddot(&eps);
    }
    Ok((0.5 * sum.max(0.0)).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub energy_norm_ref: f64,
    pub energy_norm_diff: f64,
    pub relative_error: f64,
}

/// `‖u_θ − u_ref‖_E / ‖u_ref‖_E` with the reference's own nodes and weights.
pub fn relative_error(
    theta: &ParamVector,
    arch: &NetworkArch,
    spec: &ProblemSpec,
    reference: &ReferenceSolution,
) -> Result<ErrorReport, EvalError> {
    reference.validate(spec)?;
    let points: Vec<Point> = reference.nodes.iter().map(ReferenceNode::point).collect();
    let fields = masked_field_batch(arch, theta, &spec.mask, &points)?;
    let weights: Vec<f64> = reference.nodes.iter().map(|n| n.w).collect();
    let ref_grads: Vec<Mat2> = reference.nodes.iter().map(ReferenceNode::gradient).collect();
    let diff: Vec<Mat2> = fields
        .iter()
        .zip(&ref_grads)
        .map(|((_, g), r)| [[g[0][0] - r[0][0], g[0][1] - r[0][1]], [g[1][0] - r[1][0], g[1][1] - r[1][1]]])
        .collect();
    let energy_norm_ref = energy_norm(&spec.law, &ref_grads, &weights)?;
    if energy_norm_ref == 0.0 {
        return Err(EvalError::ZeroReference);
    }
    let energy_norm_diff = energy_norm(&spec.law, &diff, &weights)?;
    Ok(ErrorReport { energy_norm_ref, energy_norm_diff, relative_error: energy_norm_diff / energy_norm_ref })
}

/// Writes the masked field on a `resolution × resolution` grid over `Ω̄`
/// followed by `resolution` points per contact segment. Columns:
/// `section,x,y,u1,u2,u_nu` where `u_nu` is only filled on the contact rows.
pub fn export_field(
    theta: &ParamVector,
    arch: &NetworkArch,
    spec: &ProblemSpec,
    resolution: usize,
    out: impl Write,
) -> Result<(), EvalError> {
    if resolution < 2 {
        return Err(EvalError::Resolution(resolution));
    }
    let r = spec.domain;
    let t = |k: usize| k as f64 / (resolution - 1) as f64;
    let mut domain = Vec::with_capacity(resolution * resolution);
    for j in 0..resolution {
        for i in 0..resolution {
            domain.push([r.min[0] + t(i) * r.width(), r.min[1] + t(j) * r.height()]);
        }
    }
    let contact: Vec<(Point, Vec2)> = spec
        .contact
        .iter()
        .flat_map(|s| (0..resolution).map(move |k| (s.point_at(t(k)), s.normal)))
        .collect();

    let mut w = csv::Writer::from_writer(out);
    w.write_record(["section", "x", "y", "u1", "u2", "u_nu"])?;
    for (p, (u, _)) in domain.iter().zip(masked_field_batch(arch, theta, &spec.mask, &domain)?) {
        w.write_record(["domain".to_string(), p[0].to_string(), p[1].to_string(), u[0].to_string(), u[1].to_string(), String::new()])?;
    }
    let pts: Vec<Point> = contact.iter().map(|c| c.0).collect();
    for ((p, normal), (u, _)) in contact.iter().zip(masked_field_batch(arch, theta, &spec.mask, &pts)?) {
        let (u_nu, _) = contact_traces(u, *normal);
        w.write_record(["contact".to_string(), p[0].to_string(), p[1].to_string(), u[0].to_string(), u[1].to_string(), u_nu.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads back the rows of [`export_field`] as `(section, [x, y, u1, u2, u_nu])`.
pub fn read_export(reader: impl BufRead) -> Result<Vec<(String, [f64; 5])>, EvalError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let num = |i: usize| rec.get(i).and_then(|s| s.parse::<f64>().ok()).unwrap_or(f64::NAN);
        rows.push((rec[0].to_string(), [num(1), num(2), num(3), num(4), num(5)]));
    }
    Ok(rows)
}
