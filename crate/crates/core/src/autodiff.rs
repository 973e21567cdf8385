//! Nested automatic differentiation.
//!
//! A [`Tape`] records dense row-major tensors and the operations that produced
//! them; [`Tape::backward`] sweeps it in reverse to obtain the gradient of a
//! scalar node with respect to the registered parameter leaf.
//!
//! Spatial derivatives are carried in forward mode by [`Dual`], whose tangent
//! slots are themselves tape variables. Every strain term built from those
//! tangents is therefore differentiable with respect to the parameters,
//! without reverse-over-reverse machinery. A batch of `B` points is handled
//! as `B`-row tensors, so one forward/backward pass covers a whole batch.

use std::cell::{Cell, RefCell};
use std::ops::{Add, AddAssign, Deref, DerefMut, Div, Mul, Neg, Sub};
use std::rc::Rc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of spatial input directions carried by a [`Dual`].
pub const SPATIAL_DIM: usize = 2;

#[derive(Debug, Error, PartialEq)]
pub enum AutodiffError {
    #[error("backward needs a scalar node, got a {rows}x{cols} tensor")]
    NonScalar { rows: usize, cols: usize },
    #[error("the tape has no parameter leaf")]
    NoParameters,
    #[error("node {0} does not belong to this tape")]
    ForeignNode(usize),
}

/// Gradient of a scalar with respect to every entry of a parameter vector.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GradVector(pub Vec<f64>);

impl GradVector {
    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|g| g * g).sum::<f64>().sqrt()
    }
}

impl Deref for GradVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for GradVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl AddAssign<&GradVector> for GradVector {
    fn add_assign(&mut self, rhs: &GradVector) {
        assert_eq!(self.len(), rhs.len(), "gradient length mismatch");
        for (a, b) in self.0.iter_mut().zip(&rhs.0) {
            *a += b;
        }
    }
}

impl Add for GradVector {
    type Output = GradVector;
    fn add(mut self, rhs: GradVector) -> GradVector {
        self += &rhs;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Unary {
    Tanh,
    Exp,
    Sqrt,
    Square,
    Relu,
}

#[derive(Clone)]
enum Op {
    Leaf,
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Div(usize, usize),
    Neg(usize),
    Scale(usize, f64),
    Shift(usize),
    MulData(usize, Rc<[f64]>),
    AddRow(usize, usize),
    Unary(usize, Unary),
    Map(usize, fn(f64) -> f64),
    Hypot(usize, usize),
    MatMulT(usize, usize),
    Slice(usize, usize),
    Column(usize, usize),
    HCat(usize, usize),
    Sum(usize),
}

struct Node {
    value: Vec<f64>,
    rows: usize,
    cols: usize,
    op: Op,
}

/// Append-only record of tensor operations.
///
/// Parents always precede their children, so a single reverse pass over the
/// node list is a valid topological order.
#[derive(Default)]
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
    params: Cell<Option<usize>>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn push(&self, value: Vec<f64>, rows: usize, cols: usize, op: Op) -> Var<'_> {
        debug_assert_eq!(value.len(), rows * cols);
        let mut nodes = self.nodes.borrow_mut();
        let id = nodes.len();
        nodes.push(Node { value, rows, cols, op });
        Var { tape: self, id, rows, cols }
    }

    /// Non-differentiable leaf.
    pub fn constant(&self, values: Vec<f64>, rows: usize, cols: usize) -> Var<'_> {
        assert_eq!(values.len(), rows * cols, "constant shape mismatch");
        self.push(values, rows, cols, Op::Leaf)
    }

    pub fn scalar(&self, value: f64) -> Var<'_> {
        self.constant(vec![value], 1, 1)
    }

    pub fn filled(&self, value: f64, rows: usize, cols: usize) -> Var<'_> {
        self.constant(vec![value; rows * cols], rows, cols)
    }

    /// Registers the flat parameter vector as the differentiation target.
    ///
    /// A tape holds exactly one parameter leaf; registering a second one
    /// replaces the target of subsequent [`Tape::backward`] calls.
    pub fn params(&self, theta: &[f64]) -> Var<'_> {
        let var = self.push(theta.to_vec(), 1, theta.len(), Op::Leaf);
        self.params.set(Some(var.id));
        var
    }

    /// Reverse sweep from `loss`, returning the gradient with respect to the
    /// parameter leaf.
    pub fn backward(&self, loss: Var<'_>) -> Result<GradVector, AutodiffError> {
        if !std::ptr::eq(loss.tape, self) {
            return Err(AutodiffError::ForeignNode(loss.id));
        }
        if loss.rows * loss.cols != 1 {
            return Err(AutodiffError::NonScalar { rows: loss.rows, cols: loss.cols });
        }
        let param_id = self.params.get().ok_or(AutodiffError::NoParameters)?;
        let nodes = self.nodes.borrow();
        let mut adj: Vec<Option<Vec<f64>>> = vec![None; loss.id + 1];
        adj[loss.id] = Some(vec![1.0]);

        for id in (0..=loss.id).rev() {
            let Some(g) = adj[id].take() else { continue };
            if id == param_id {
                adj[id] = Some(g);
                continue;
            }
            let node = &nodes[id];
            match node.op {
                Op::Leaf => {}
                Op::Add(a, b) => {
                    accumulate(&mut adj, &nodes, a, |acc| axpy(acc, &g, 1.0));
                    accumulate(&mut adj, &nodes, b, |acc| axpy(acc, &g, 1.0));
                }
                Op::Sub(a, b) => {
                    accumulate(&mut adj, &nodes, a, |acc| axpy(acc, &g, 1.0));
                    accumulate(&mut adj, &nodes, b, |acc| axpy(acc, &g, -1.0));
                }
                Op::Mul(a, b) => {
                    let (va, vb) = (&nodes[a].value, &nodes[b].value);
                    accumulate(&mut adj, &nodes, a, |acc| {
                        for i in 0..acc.len() {
                            acc[i] += g[i] * vb[i];
                        }
                    });
                    accumulate(&mut adj, &nodes, b, |acc| {
                        for i in 0..acc.len() {
                            acc[i] += g[i] * va[i];
                        }
                    });
                }
                Op::Div(a, b) => {
                    let vb = &nodes[b].value;
                    let out = &node.value;
                    accumulate(&mut adj, &nodes, a, |acc| {
                        for i in 0..acc.len() {
                            acc[i] += g[i] / vb[i];
                        }
                    });
                    accumulate(&mut adj, &nodes, b, |acc| {
                        for i in 0..acc.len() {
                            acc[i] -= g[i] * out[i] / vb[i];
                        }
                    });
                }
                Op::Neg(a) => accumulate(&mut adj, &nodes, a, |acc| axpy(acc, &g, -1.0)),
                Op::Scale(a, c) => accumulate(&mut adj, &nodes, a, |acc| axpy(acc, &g, c)),
                Op::Shift(a) => accumulate(&mut adj, &nodes, a, |acc| axpy(acc, &g, 1.0)),
                Op::MulData(a, ref data) => accumulate(&mut adj, &nodes, a, |acc| {
                    for i in 0..acc.len() {
                        acc[i] += g[i] * data[i];
                    }
                }),
                Op::AddRow(a, b) => {
                    let cols = node.cols;
                    accumulate(&mut adj, &nodes, a, |acc| axpy(acc, &g, 1.0));
                    accumulate(&mut adj, &nodes, b, |acc| {
                        for row in g.chunks_exact(cols) {
                            for (s, r) in acc.iter_mut().zip(row) {
                                *s += r;
                            }
                        }
                    });
                }
                Op::Unary(a, kind) => {
                    let x = &nodes[a].value;
                    let y = &node.value;
                    accumulate(&mut adj, &nodes, a, |acc| {
                        for i in 0..acc.len() {
                            let d = match kind {
                                Unary::Tanh => 1.0 - y[i] * y[i],
                                Unary::Exp => y[i],
                                Unary::Sqrt => {
                                    if y[i] > 0.0 {
                                        0.5 / y[i]
                                    } else {
                                        0.0
                                    }
                                }
                                Unary::Square => 2.0 * x[i],
                                Unary::Relu => {
                                    if x[i] > 0.0 {
                                        1.0
                                    } else {
                                        0.0
                                    }
                                }
                            };
                            acc[i] += g[i] * d;
                        }
                    });
                }
                Op::Map(a, df) => {
                    let x = &nodes[a].value;
                    accumulate(&mut adj, &nodes, a, |acc| {
                        for i in 0..acc.len() {
                            acc[i] += g[i] * df(x[i]);
                        }
                    });
                }
                Op::Hypot(a, b) => {
                    let (va, vb, r) = (&nodes[a].value, &nodes[b].value, &node.value);
                    accumulate(&mut adj, &nodes, a, |acc| {
                        for i in 0..acc.len() {
                            if r[i] > 0.0 {
                                acc[i] += g[i] * va[i] / r[i];
                            }
                        }
                    });
                    accumulate(&mut adj, &nodes, b, |acc| {
                        for i in 0..acc.len() {
                            if r[i] > 0.0 {
                                acc[i] += g[i] * vb[i] / r[i];
                            }
                        }
                    });
                }
                Op::MatMulT(x, w) => {
                    // out (B x N) = x (B x K) * w^T, w is N x K
                    let (b_rows, n) = (node.rows, node.cols);
                    let k = nodes[x].cols;
                    let (vx, vw) = (&nodes[x].value, &nodes[w].value);
                    accumulate(&mut adj, &nodes, x, |acc| {
                        for r in 0..b_rows {
                            let gr = &g[r * n..(r + 1) * n];
                            let ar = &mut acc[r * k..(r + 1) * k];
                            for (j, &gj) in gr.iter().enumerate() {
                                if gj == 0.0 {
                                    continue;
                                }
                                let wj = &vw[j * k..(j + 1) * k];
                                for (a, &wv) in ar.iter_mut().zip(wj) {
                                    *a += gj * wv;
                                }
                            }
                        }
                    });
                    accumulate(&mut adj, &nodes, w, |acc| {
                        for r in 0..b_rows {
                            let gr = &g[r * n..(r + 1) * n];
                            let xr = &vx[r * k..(r + 1) * k];
                            for (j, &gj) in gr.iter().enumerate() {
                                if gj == 0.0 {
                                    continue;
                                }
                                let aj = &mut acc[j * k..(j + 1) * k];
                                for (a, &xv) in aj.iter_mut().zip(xr) {
                                    *a += gj * xv;
                                }
                            }
                        }
                    });
                }
                Op::Slice(src, offset) => {
                    let len = g.len();
                    accumulate(&mut adj, &nodes, src, |acc| {
                        axpy(&mut acc[offset..offset + len], &g, 1.0)
                    });
                }
                Op::Column(src, j) => {
                    let cols = nodes[src].cols;
                    accumulate(&mut adj, &nodes, src, |acc| {
                        for (r, gv) in g.iter().enumerate() {
                            acc[r * cols + j] += gv;
                        }
                    });
                }
                Op::HCat(a, b) => {
                    let (ca, cb) = (nodes[a].cols, nodes[b].cols);
                    let cols = ca + cb;
                    accumulate(&mut adj, &nodes, a, |acc| {
                        for (r, row) in acc.chunks_exact_mut(ca).enumerate() {
                            axpy(row, &g[r * cols..r * cols + ca], 1.0);
                        }
                    });
                    accumulate(&mut adj, &nodes, b, |acc| {
                        for (r, row) in acc.chunks_exact_mut(cb).enumerate() {
                            axpy(row, &g[r * cols + ca..(r + 1) * cols], 1.0);
                        }
                    });
                }
                Op::Sum(a) => {
                    let s = g[0];
                    accumulate(&mut adj, &nodes, a, |acc| acc.iter_mut().for_each(|v| *v += s));
                }
            }
        }

        let grad = adj[param_id]
            .take()
            .unwrap_or_else(|| vec![0.0; nodes[param_id].value.len()]);
        Ok(GradVector(grad))
    }
}

fn accumulate(
    adj: &mut [Option<Vec<f64>>],
    nodes: &[Node],
    id: usize,
    f: impl FnOnce(&mut [f64]),
) {
    let slot = adj[id].get_or_insert_with(|| vec![0.0; nodes[id].value.len()]);
    f(slot);
}

fn axpy(acc: &mut [f64], g: &[f64], c: f64) {
    for (a, b) in acc.iter_mut().zip(g) {
        *a += c * b;
    }
}

/// Handle to a tensor node on a [`Tape`].
#[derive(Clone, Copy)]
pub struct Var<'t> {
    tape: &'t Tape,
    id: usize,
    rows: usize,
    cols: usize,
}

impl std::fmt::Debug for Var<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Var#{}[{}x{}]", self.id, self.rows, self.cols)
    }
}

impl<'t> Var<'t> {
    pub fn tape(&self) -> &'t Tape {
        self.tape
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn value(&self) -> Vec<f64> {
        self.tape.nodes.borrow()[self.id].value.clone()
    }

    /// Value of a 1x1 node.
    pub fn scalar(&self) -> f64 {
        assert_eq!(self.rows * self.cols, 1, "scalar() on a {}x{} tensor", self.rows, self.cols);
        self.tape.nodes.borrow()[self.id].value[0]
    }

    fn map_value(self, op: Op, f: impl Fn(f64) -> f64) -> Self {
        let value: Vec<f64> = self.tape.nodes.borrow()[self.id].value.iter().map(|&v| f(v)).collect();
        self.tape.push(value, self.rows, self.cols, op)
    }

    fn zip_value(self, other: Self, op: Op, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.shape(), other.shape(), "elementwise shape mismatch");
        let value: Vec<f64> = {
            let nodes = self.tape.nodes.borrow();
            nodes[self.id]
                .value
                .iter()
                .zip(&nodes[other.id].value)
                .map(|(&a, &b)| f(a, b))
                .collect()
        };
        self.tape.push(value, self.rows, self.cols, op)
    }

    pub fn scale(self, c: f64) -> Self {
        self.map_value(Op::Scale(self.id, c), |v| c * v)
    }

    pub fn shift(self, c: f64) -> Self {
        self.map_value(Op::Shift(self.id), |v| v + c)
    }

    /// Elementwise product with non-differentiable data of the same shape.
    pub fn mul_data(self, data: &[f64]) -> Self {
        assert_eq!(data.len(), self.rows * self.cols, "data shape mismatch");
        let data: Rc<[f64]> = Rc::from(data);
        let value: Vec<f64> = self.tape.nodes.borrow()[self.id]
            .value
            .iter()
            .zip(data.iter())
            .map(|(v, d)| v * d)
            .collect();
        self.tape.push(value, self.rows, self.cols, Op::MulData(self.id, data))
    }

    pub fn tanh(self) -> Self {
        self.map_value(Op::Unary(self.id, Unary::Tanh), f64::tanh)
    }

    pub fn exp(self) -> Self {
        self.map_value(Op::Unary(self.id, Unary::Exp), f64::exp)
    }

    /// Square root; the derivative at 0 is taken as 0.
    pub fn sqrt(self) -> Self {
        self.map_value(Op::Unary(self.id, Unary::Sqrt), f64::sqrt)
    }

    pub fn square(self) -> Self {
        self.map_value(Op::Unary(self.id, Unary::Square), |v| v * v)
    }

    /// `max(x, 0)` with subgradient 0 at the kink.
    pub fn relu(self) -> Self {
        self.map_value(Op::Unary(self.id, Unary::Relu), |v| v.max(0.0))
    }

    /// Applies a scalar function elementwise with a user supplied derivative.
    pub fn map(self, f: fn(f64) -> f64, df: fn(f64) -> f64) -> Self {
        self.map_value(Op::Map(self.id, df), f)
    }

    /// Elementwise Euclidean norm of `(self, other)`, subgradient 0 at the origin.
    pub fn hypot(self, other: Self) -> Self {
        self.zip_value(other, Op::Hypot(self.id, other.id), f64::hypot)
    }

    /// `self * w^T` for `self: B x K`, `w: N x K`.
    pub fn matmul_t(self, w: Var<'t>) -> Self {
        let (b_rows, k) = self.shape();
        let (n, wk) = w.shape();
        assert_eq!(k, wk, "matmul_t inner dimension mismatch");
        let value = {
            let nodes = self.tape.nodes.borrow();
            let (vx, vw) = (&nodes[self.id].value, &nodes[w.id].value);
            let mut out = vec![0.0; b_rows * n];
            for r in 0..b_rows {
                let xr = &vx[r * k..(r + 1) * k];
                for j in 0..n {
                    let wj = &vw[j * k..(j + 1) * k];
                    out[r * n + j] = xr.iter().zip(wj).map(|(a, b)| a * b).sum();
                }
            }
            out
        };
        self.tape.push(value, b_rows, n, Op::MatMulT(self.id, w.id))
    }

    /// Adds a `1 x N` row to every row of a `B x N` tensor.
    pub fn add_row(self, row: Var<'t>) -> Self {
        assert_eq!(row.rows, 1, "add_row expects a single row");
        assert_eq!(row.cols, self.cols, "add_row width mismatch");
        let value = {
            let nodes = self.tape.nodes.borrow();
            let vr = &nodes[row.id].value;
            let mut out = nodes[self.id].value.clone();
            for chunk in out.chunks_exact_mut(self.cols) {
                for (o, r) in chunk.iter_mut().zip(vr) {
                    *o += r;
                }
            }
            out
        };
        self.tape.push(value, self.rows, self.cols, Op::AddRow(self.id, row.id))
    }

    /// Contiguous view of a flat tensor reshaped to `rows x cols`.
    pub fn slice(self, offset: usize, rows: usize, cols: usize) -> Self {
        let len = rows * cols;
        assert!(offset + len <= self.rows * self.cols, "slice out of range");
        let value = self.tape.nodes.borrow()[self.id].value[offset..offset + len].to_vec();
        self.tape.push(value, rows, cols, Op::Slice(self.id, offset))
    }

    pub fn column(self, j: usize) -> Self {
        assert!(j < self.cols, "column index out of range");
        let value: Vec<f64> = self.tape.nodes.borrow()[self.id]
            .value
            .chunks_exact(self.cols)
            .map(|row| row[j])
            .collect();
        self.tape.push(value, self.rows, 1, Op::Column(self.id, j))
    }

    pub fn hcat(self, other: Var<'t>) -> Self {
        assert_eq!(self.rows, other.rows, "hcat row mismatch");
        let cols = self.cols + other.cols;
        let value = {
            let nodes = self.tape.nodes.borrow();
            let (va, vb) = (&nodes[self.id].value, &nodes[other.id].value);
            let mut out = Vec::with_capacity(self.rows * cols);
            for r in 0..self.rows {
                out.extend_from_slice(&va[r * self.cols..(r + 1) * self.cols]);
                out.extend_from_slice(&vb[r * other.cols..(r + 1) * other.cols]);
            }
            out
        };
        self.tape.push(value, self.rows, cols, Op::HCat(self.id, other.id))
    }

    pub fn sum(self) -> Self {
        let s: f64 = self.tape.nodes.borrow()[self.id].value.iter().sum();
        self.tape.push(vec![s], 1, 1, Op::Sum(self.id))
    }
}

impl<'t> Add for Var<'t> {
    type Output = Var<'t>;
    fn add(self, rhs: Self) -> Self {
        self.zip_value(rhs, Op::Add(self.id, rhs.id), |a, b| a + b)
    }
}

impl<'t> Sub for Var<'t> {
    type Output = Var<'t>;
    fn sub(self, rhs: Self) -> Self {
        self.zip_value(rhs, Op::Sub(self.id, rhs.id), |a, b| a - b)
    }
}

impl<'t> Mul for Var<'t> {
    type Output = Var<'t>;
    fn mul(self, rhs: Self) -> Self {
        self.zip_value(rhs, Op::Mul(self.id, rhs.id), |a, b| a * b)
    }
}

impl<'t> Div for Var<'t> {
    type Output = Var<'t>;
    fn div(self, rhs: Self) -> Self {
        self.zip_value(rhs, Op::Div(self.id, rhs.id), |a, b| a / b)
    }
}

impl<'t> Neg for Var<'t> {
    type Output = Var<'t>;
    fn neg(self) -> Self {
        self.map_value(Op::Neg(self.id), |v| -v)
    }
}

impl<'t> Mul<f64> for Var<'t> {
    type Output = Var<'t>;
    fn mul(self, rhs: f64) -> Self {
        self.scale(rhs)
    }
}

/// Value plus first-order spatial tangents, all recorded on the tape.
#[derive(Clone, Copy, Debug)]
pub struct Dual<'t> {
    pub value: Var<'t>,
    pub tangents: [Var<'t>; SPATIAL_DIM],
}

impl<'t> Dual<'t> {
    /// A tensor with zero spatial tangents.
    pub fn constant(value: Var<'t>) -> Self {
        let (r, c) = value.shape();
        let zero = value.tape().filled(0.0, r, c);
        Self { value, tangents: [zero, zero] }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.value.shape()
    }

    pub fn tangent(&self, k: usize) -> Var<'t> {
        self.tangents[k]
    }

    fn map_tangents(self, value: Var<'t>, f: impl Fn(Var<'t>) -> Var<'t>) -> Self {
        Self { value, tangents: self.tangents.map(f) }
    }

    pub fn scale(self, c: f64) -> Self {
        self.map_tangents(self.value.scale(c), |t| t.scale(c))
    }

    pub fn shift(self, c: f64) -> Self {
        Self { value: self.value.shift(c), tangents: self.tangents }
    }

    pub fn matmul_t(self, w: Var<'t>) -> Self {
        self.map_tangents(self.value.matmul_t(w), |t| t.matmul_t(w))
    }

    pub fn add_row(self, row: Var<'t>) -> Self {
        Self { value: self.value.add_row(row), tangents: self.tangents }
    }

    pub fn column(self, j: usize) -> Self {
        self.map_tangents(self.value.column(j), |t| t.column(j))
    }

    pub fn hcat(self, other: Self) -> Self {
        Self {
            value: self.value.hcat(other.value),
            tangents: [
                self.tangents[0].hcat(other.tangents[0]),
                self.tangents[1].hcat(other.tangents[1]),
            ],
        }
    }

    pub fn tanh(self) -> Self {
        let s = self.value.tanh();
        let ds = (-s.square()).shift(1.0);
        self.map_tangents(s, |t| t * ds)
    }

    /// `(max(x, 0))^2` with derivative `2 max(x, 0)`.
    pub fn relu_squared(self) -> Self {
        let r = self.value.relu();
        let dr = r.scale(2.0);
        self.map_tangents(r.square(), |t| t * dr)
    }

    pub fn exp(self) -> Self {
        let e = self.value.exp();
        self.map_tangents(e, |t| t * e)
    }

    pub fn square(self) -> Self {
        let d = self.value.scale(2.0);
        self.map_tangents(self.value.square(), |t| t * d)
    }

    /// Product with a known field given by values and spatial gradients.
    pub fn mul_field(self, values: &[f64], grads: [&[f64]; SPATIAL_DIM]) -> Self {
        let value = self.value.mul_data(values);
        let tangents = [0, 1].map(|k| self.value.mul_data(grads[k]) + self.tangents[k].mul_data(values));
        Self { value, tangents }
    }

    pub fn sum(self) -> Self {
        self.map_tangents(self.value.sum(), |t| t.sum())
    }
}

impl<'t> Add for Dual<'t> {
    type Output = Dual<'t>;
    fn add(self, rhs: Self) -> Self {
        Self {
            value: self.value + rhs.value,
            tangents: [self.tangents[0] + rhs.tangents[0], self.tangents[1] + rhs.tangents[1]],
        }
    }
}

impl<'t> Sub for Dual<'t> {
    type Output = Dual<'t>;
    fn sub(self, rhs: Self) -> Self {
        Self {
            value: self.value - rhs.value,
            tangents: [self.tangents[0] - rhs.tangents[0], self.tangents[1] - rhs.tangents[1]],
        }
    }
}

impl<'t> Mul for Dual<'t> {
    type Output = Dual<'t>;
    fn mul(self, rhs: Self) -> Self {
        let value = self.value * rhs.value;
        let tangents = [0, 1].map(|k| self.value * rhs.tangents[k] + rhs.value * self.tangents[k]);
        Self { value, tangents }
    }
}

/// Seeds a single point as the pair of coordinate duals `x`, `y` with
/// tangent basis `e1`, `e2`.
pub fn seed_input<'t>(tape: &'t Tape, point: [f64; 2]) -> (Dual<'t>, Dual<'t>) {
    seed_inputs(tape, &[point])
}

/// Batched [`seed_input`]: each returned dual is a `B x 1` column.
pub fn seed_inputs<'t>(tape: &'t Tape, points: &[[f64; 2]]) -> (Dual<'t>, Dual<'t>) {
    let n = points.len();
    let xs = tape.constant(points.iter().map(|p| p[0]).collect(), n, 1);
    let ys = tape.constant(points.iter().map(|p| p[1]).collect(), n, 1);
    let ones = tape.filled(1.0, n, 1);
    let zeros = tape.filled(0.0, n, 1);
    (
        Dual { value: xs, tangents: [ones, zeros] },
        Dual { value: ys, tangents: [zeros, ones] },
    )
}

/// Central-difference gradient `(f(θ + h e_i) - f(θ - h e_i)) / 2h`.
///
/// Only evaluates `f`, so it stays independent of the reverse sweep it is
/// used to check.
pub fn finite_diff_gradient(f: impl Fn(&[f64]) -> f64, theta: &[f64], step: f64) -> GradVector {
    assert!(step > 0.0, "finite-difference step must be positive");
    let mut probe = theta.to_vec();
    let grad = (0..theta.len())
        .map(|i| {
            probe[i] = theta[i] + step;
            let fp = f(&probe);
            probe[i] = theta[i] - step;
            let fm = f(&probe);
            probe[i] = theta[i];
            (fp - fm) / (2.0 * step)
        })
        .collect();
    GradVector(grad)
}
