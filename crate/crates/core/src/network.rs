//! Residual network ansätze and the constraint-masked displacement field.

use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autodiff::{Dual, Tape, Var};
use crate::problems::{ConstraintMask, Mat2, Point, Vec2};

#[derive(Debug, Error, PartialEq)]
pub enum NetworkError {
    #[error("invalid architecture: {0}")]
    InvalidArch(String),
    #[error("parameter vector has length {got}, layout expects {expected}")]
    LayoutMismatch { expected: usize, got: usize },
    #[error("input has {got} columns, network expects {expected}")]
    InputMismatch { expected: usize, got: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
    /// `(max(x, 0))^2`
    ReluSquared,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::ReluSquared => {
                let r = x.max(0.0);
                r * r
            }
        }
    }

    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - x.tanh().powi(2),
            Activation::ReluSquared => 2.0 * x.max(0.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ArchKind {
    PlainResNet {
        depth: usize,
        width: usize,
    },
    BlockResNet {
        input_depth: usize,
        input_width: usize,
        blocks: usize,
        block_depth: usize,
        block_width: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkArch {
    #[serde(flatten)]
    pub kind: ArchKind,
    #[serde(default = "two")]
    pub input_dim: usize,
    #[serde(default = "two")]
    pub output_dim: usize,
    pub activation: Activation,
}

fn two() -> usize {
    2
}

impl NetworkArch {
    pub fn plain(depth: usize, width: usize, activation: Activation) -> Self {
        Self {
            kind: ArchKind::PlainResNet { depth, width },
            input_dim: 2,
            output_dim: 2,
            activation,
        }
    }

    pub fn block(
        (input_depth, input_width): (usize, usize),
        blocks: usize,
        (block_depth, block_width): (usize, usize),
        activation: Activation,
    ) -> Self {
        Self {
            kind: ArchKind::BlockResNet { input_depth, input_width, blocks, block_depth, block_width },
            input_dim: 2,
            output_dim: 2,
            activation,
        }
    }

    /// Depth 8, width 50.
    pub fn standard_plain(activation: Activation) -> Self {
        Self::plain(8, 50, activation)
    }

    /// Input block of depth 4 and width 50 feeding five parallel blocks of
    /// depth 4 and width 10.
    pub fn standard_block(activation: Activation) -> Self {
        Self::block((4, 50), 5, (4, 10), activation)
    }

    /// Number of parallel blocks (1 for a plain ResNet).
    pub fn blocks(&self) -> usize {
        match self.kind {
            ArchKind::PlainResNet { .. } => 1,
            ArchKind::BlockResNet { blocks, .. } => blocks,
        }
    }

    pub fn is_block(&self) -> bool {
        matches!(self.kind, ArchKind::BlockResNet { .. })
    }

    pub fn validate(&self) -> Result<(), NetworkError> {
        let positive = |name: &str, v: usize| {
            if v == 0 {
                Err(NetworkError::InvalidArch(format!("{name} must be positive")))
            } else {
                Ok(())
            }
        };
        positive("input_dim", self.input_dim)?;
        positive("output_dim", self.output_dim)?;
        match self.kind {
            ArchKind::PlainResNet { depth, width } => {
                positive("depth", depth)?;
                positive("width", width)
            }
            ArchKind::BlockResNet { input_depth, input_width, blocks, block_depth, block_width } => {
                positive("input_depth", input_depth)?;
                positive("input_width", input_width)?;
                positive("blocks", blocks)?;
                positive("block_depth", block_depth)?;
                positive("block_width", block_width)
            }
        }
    }
}

/// Which sub-network a parameter tensor belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BlockId {
    /// The single network of a plain ResNet.
    Main,
    Input,
    /// Zero-based parallel block index.
    Parallel(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TensorRole {
    /// Input projection.
    V,
    /// Hidden weight of a residual layer.
    W,
    /// Hidden bias of a residual layer.
    B,
    /// Output projection.
    A,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayoutEntry {
    pub block: BlockId,
    /// 1-based residual layer index; 0 for V and A.
    pub layer: usize,
    pub role: TensorRole,
    pub offset: usize,
    pub rows: usize,
    pub cols: usize,
    pub fan_in: usize,
}

impl LayoutEntry {
    pub fn range(&self) -> Range<usize> {
        self.offset..self.offset + self.rows * self.cols
    }
}

/// Geometry of one residual network inside the flat parameter vector.
#[derive(Clone, Debug, PartialEq)]
struct ResNetSegment {
    block: BlockId,
    in_dim: usize,
    width: usize,
    depth: usize,
    out_dim: Option<usize>,
    offset: usize,
}

impl ResNetSegment {
    fn len(&self) -> usize {
        self.width * self.in_dim
            + self.depth * (self.width * self.width + self.width)
            + self.out_dim.map_or(0, |m| m * self.width)
    }

    fn entries(&self) -> Vec<LayoutEntry> {
        let mut out = Vec::with_capacity(2 * self.depth + 2);
        let mut offset = self.offset;
        let mut push = |layer, role, rows, cols, fan_in| {
            out.push(LayoutEntry { block: self.block, layer, role, offset, rows, cols, fan_in });
            offset += rows * cols;
        };
        push(0, TensorRole::V, self.width, self.in_dim, self.in_dim);
        for l in 1..=self.depth {
            push(l, TensorRole::W, self.width, self.width, self.width);
            push(l, TensorRole::B, 1, self.width, self.width);
        }
        if let Some(m) = self.out_dim {
            push(0, TensorRole::A, m, self.width, self.width);
        }
        out
    }
}

/// Maps every parameter tensor to a contiguous slice of the flat vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Layout {
    segments: Vec<ResNetSegment>,
    entries: Vec<LayoutEntry>,
    len: usize,
}

impl Layout {
    pub fn of(arch: &NetworkArch) -> Result<Self, NetworkError> {
        arch.validate()?;
        let mut segments = Vec::new();
        match arch.kind {
            ArchKind::PlainResNet { depth, width } => segments.push(ResNetSegment {
                block: BlockId::Main,
                in_dim: arch.input_dim,
                width,
                depth,
                out_dim: Some(arch.output_dim),
                offset: 0,
            }),
            ArchKind::BlockResNet { input_depth, input_width, blocks, block_depth, block_width } => {
                segments.push(ResNetSegment {
                    block: BlockId::Input,
                    in_dim: arch.input_dim,
                    width: input_width,
                    depth: input_depth,
                    out_dim: None,
                    offset: 0,
                });
                segments.extend((0..blocks).map(|p| ResNetSegment {
                    block: BlockId::Parallel(p),
                    in_dim: input_width,
                    width: block_width,
                    depth: block_depth,
                    out_dim: Some(arch.output_dim),
                    offset: 0,
                }));
            }
        }
        let mut running = 0;
        for seg in &mut segments {
            seg.offset = running;
            running += seg.len();
        }
        let entries = segments.iter().flat_map(ResNetSegment::entries).collect();
        Ok(Self { segments, entries, len: running })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn entries(&self) -> &[LayoutEntry] {
        &self.entries
    }

    pub fn entry(&self, block: BlockId, layer: usize, role: TensorRole) -> Option<&LayoutEntry> {
        self.entries.iter().find(|e| e.block == block && e.layer == layer && e.role == role)
    }

    /// Contiguous range covering every tensor of `block`.
    pub fn block_range(&self, block: BlockId) -> Option<Range<usize>> {
        self.segments
            .iter()
            .find(|s| s.block == block)
            .map(|s| s.offset..s.offset + s.len())
    }

    fn segment(&self, block: BlockId) -> &ResNetSegment {
        self.segments.iter().find(|s| s.block == block).expect("block exists in layout")
    }
}

/// Exact parameter count of the layout.
///
/// A plain ResNet has `N d + L (N^2 + N) + N m` parameters.
pub fn param_count(arch: &NetworkArch) -> Result<usize, NetworkError> {
    Ok(Layout::of(arch)?.len())
}

/// Flat parameter storage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamVector(pub Vec<f64>);

impl ParamVector {
    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

/// Fills every tensor i.i.d. uniform on `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`.
pub fn init_params(arch: &NetworkArch, seed: u64) -> Result<ParamVector, NetworkError> {
    let layout = Layout::of(arch)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut theta = vec![0.0; layout.len()];
    for entry in layout.entries() {
        let bound = 1.0 / (entry.fan_in as f64).sqrt();
        for v in &mut theta[entry.range()] {
            *v = rng.random_range(-bound..=bound);
        }
    }
    Ok(ParamVector(theta))
}

/// Quantities that can flow through a residual network: plain tape values
/// for boundary evaluations, duals where spatial derivatives are needed.
pub trait Signal<'t>: Copy {
    fn matmul_t(self, w: Var<'t>) -> Self;
    fn add_row(self, row: Var<'t>) -> Self;
    fn plus(self, other: Self) -> Self;
    fn activate(self, activation: Activation) -> Self;
    fn column(self, j: usize) -> Self;
    fn rows_cols(&self) -> (usize, usize);
}

impl<'t> Signal<'t> for Var<'t> {
    fn matmul_t(self, w: Var<'t>) -> Self {
        Var::matmul_t(self, w)
    }
    fn add_row(self, row: Var<'t>) -> Self {
        Var::add_row(self, row)
    }
    fn plus(self, other: Self) -> Self {
        self + other
    }
    fn activate(self, activation: Activation) -> Self {
        match activation {
            Activation::Tanh => self.tanh(),
            Activation::ReluSquared => self.relu().square(),
        }
    }
    fn column(self, j: usize) -> Self {
        Var::column(self, j)
    }
    fn rows_cols(&self) -> (usize, usize) {
        self.shape()
    }
}

impl<'t> Signal<'t> for Dual<'t> {
    fn matmul_t(self, w: Var<'t>) -> Self {
        Dual::matmul_t(self, w)
    }
    fn add_row(self, row: Var<'t>) -> Self {
        Dual::add_row(self, row)
    }
    fn plus(self, other: Self) -> Self {
        self + other
    }
    fn activate(self, activation: Activation) -> Self {
        match activation {
            Activation::Tanh => self.tanh(),
            Activation::ReluSquared => self.relu_squared(),
        }
    }
    fn column(self, j: usize) -> Self {
        Dual::column(self, j)
    }
    fn rows_cols(&self) -> (usize, usize) {
        self.shape()
    }
}

fn tensor<'t>(theta: Var<'t>, entry: &LayoutEntry) -> Var<'t> {
    theta.slice(entry.offset, entry.rows, entry.cols)
}

/// `h_0 = V x`, `h_l = h_{l-1} + σ(W_l h_{l-1} + b_l)`; returns `h_L`.
fn resnet_hidden<'t, S: Signal<'t>>(
    layout: &Layout,
    block: BlockId,
    theta: Var<'t>,
    x: S,
    activation: Activation,
) -> S {
    let seg = layout.segment(block);
    let entries = seg.entries();
    let mut h = x.matmul_t(tensor(theta, &entries[0]));
    for l in 0..seg.depth {
        let w = tensor(theta, &entries[1 + 2 * l]);
        let b = tensor(theta, &entries[2 + 2 * l]);
        let g = h.matmul_t(w).add_row(b).activate(activation);
        h = h.plus(g);
    }
    h
}

fn resnet_output<'t, S: Signal<'t>>(
    layout: &Layout,
    block: BlockId,
    theta: Var<'t>,
    x: S,
    activation: Activation,
) -> S {
    let h = resnet_hidden(layout, block, theta, x, activation);
    let a = layout.entry(block, 0, TensorRole::A).expect("output block has A");
    h.matmul_t(tensor(theta, a))
}

/// Binds a parameter vector on a tape to an architecture.
#[derive(Clone, Copy)]
pub struct BoundNetwork<'a, 't> {
    pub arch: &'a NetworkArch,
    pub layout: &'a Layout,
    pub theta: Var<'t>,
}

impl<'a, 't> BoundNetwork<'a, 't> {
    pub fn new(arch: &'a NetworkArch, layout: &'a Layout, theta: Var<'t>) -> Result<Self, NetworkError> {
        let got = theta.shape().0 * theta.shape().1;
        if got != layout.len() {
            return Err(NetworkError::LayoutMismatch { expected: layout.len(), got });
        }
        Ok(Self { arch, layout, theta })
    }

    fn check_input<S: Signal<'t>>(&self, x: &S) -> Result<(), NetworkError> {
        let got = x.rows_cols().1;
        if got != self.arch.input_dim {
            return Err(NetworkError::InputMismatch { expected: self.arch.input_dim, got });
        }
        Ok(())
    }

    /// Plain ResNet forward: `a^T h_L`.
    pub fn resnet_forward<S: Signal<'t>>(&self, x: S) -> Result<S, NetworkError> {
        self.check_input(&x)?;
        match self.arch.kind {
            ArchKind::PlainResNet { .. } => {
                Ok(resnet_output(self.layout, BlockId::Main, self.theta, x, self.arch.activation))
            }
            ArchKind::BlockResNet { .. } => Err(NetworkError::InvalidArch(
                "resnet_forward called on a block architecture".into(),
            )),
        }
    }

    /// Final hidden state of the input block of a block ResNet.
    pub fn input_block_hidden<S: Signal<'t>>(&self, x: S) -> Result<S, NetworkError> {
        self.check_input(&x)?;
        if !self.arch.is_block() {
            return Err(NetworkError::InvalidArch("plain network has no input block".into()));
        }
        Ok(resnet_hidden(self.layout, BlockId::Input, self.theta, x, self.arch.activation))
    }

    /// Output of parallel block `p` applied to an input-block hidden state.
    pub fn parallel_block<S: Signal<'t>>(&self, p: usize, hidden: S) -> S {
        resnet_output(self.layout, BlockId::Parallel(p), self.theta, hidden, self.arch.activation)
    }

    /// Block ResNet forward: the sum over parallel blocks of `B_p(B_in(x))`.
    pub fn block_forward<S: Signal<'t>>(&self, x: S) -> Result<S, NetworkError> {
        let hidden = self.input_block_hidden(x)?;
        let mut out = self.parallel_block(0, hidden);
        for p in 1..self.arch.blocks() {
            out = out.plus(self.parallel_block(p, hidden));
        }
        Ok(out)
    }

    /// Raw network output ψ for either architecture.
    pub fn forward<S: Signal<'t>>(&self, x: S) -> Result<S, NetworkError> {
        if self.arch.is_block() {
            self.block_forward(x)
        } else {
            self.resnet_forward(x)
        }
    }
}

/// Precomputed mask values and gradients at a batch of points.
pub struct MaskSamples {
    pub values: [Vec<f64>; 2],
    /// `grads[i][k] = ∂ b_i / ∂ x_k`
    pub grads: [[Vec<f64>; 2]; 2],
}

impl MaskSamples {
    pub fn at(mask: &ConstraintMask, points: &[Point]) -> Self {
        let n = points.len();
        let mut values = [vec![0.0; n], vec![0.0; n]];
        let mut grads = [[vec![0.0; n], vec![0.0; n]], [vec![0.0; n], vec![0.0; n]]];
        for (r, p) in points.iter().enumerate() {
            let (b, db) = mask.eval(*p);
            for i in 0..2 {
                values[i][r] = b[i];
                for k in 0..2 {
                    grads[i][k][r] = db[i][k];
                }
            }
        }
        Self { values, grads }
    }
}

/// `φ_i = b_i ψ_i` with product-rule spatial tangents, for a batch of points.
pub fn masked_field_dual<'t>(
    net: &BoundNetwork<'_, 't>,
    mask: &ConstraintMask,
    points: &[Point],
) -> Result<[Dual<'t>; 2], NetworkError> {
    let tape = net.theta.tape();
    let (x, y) = crate::autodiff::seed_inputs(tape, points);
    let psi = net.forward(x.hcat(y))?;
    let m = MaskSamples::at(mask, points);
    Ok([0, 1].map(|i| {
        psi.column(i).mul_field(&m.values[i], [&m.grads[i][0], &m.grads[i][1]])
    }))
}

/// Value-only masked field for a batch of points.
pub fn masked_field_values<'t>(
    net: &BoundNetwork<'_, 't>,
    mask: &ConstraintMask,
    points: &[Point],
) -> Result<[Var<'t>; 2], NetworkError> {
    let tape = net.theta.tape();
    let n = points.len();
    let xy = tape.constant(points.iter().flat_map(|p| [p[0], p[1]]).collect(), n, 2);
    let psi = net.forward(xy)?;
    let m = MaskSamples::at(mask, points);
    Ok([0, 1].map(|i| psi.column(i).mul_data(&m.values[i])))
}

/// Masked field and its spatial Jacobian at one point, as plain numbers.
///
/// `grad[i][k] = ∂ φ_i / ∂ x_k`.
pub fn masked_field(
    arch: &NetworkArch,
    theta: &ParamVector,
    mask: &ConstraintMask,
    x: Point,
) -> Result<(Vec2, Mat2), NetworkError> {
    let fields = masked_field_batch(arch, theta, mask, &[x])?;
    Ok(fields[0])
}

/// Masked field values only, skipping the spatial derivatives.
pub fn masked_values_batch(
    arch: &NetworkArch,
    theta: &ParamVector,
    mask: &ConstraintMask,
    points: &[Point],
) -> Result<Vec<Vec2>, NetworkError> {
    let layout = Layout::of(arch)?;
    let tape = Tape::new();
    let net = BoundNetwork::new(arch, &layout, tape.constant(theta.0.clone(), 1, theta.len()))?;
    let [u, v] = masked_field_values(&net, mask, points)?.map(|c| c.value());
    Ok(u.into_iter().zip(v).map(|(a, b)| [a, b]).collect())
}

/// Batched [`masked_field`].
pub fn masked_field_batch(
    arch: &NetworkArch,
    theta: &ParamVector,
    mask: &ConstraintMask,
    points: &[Point],
) -> Result<Vec<(Vec2, Mat2)>, NetworkError> {
    let layout = Layout::of(arch)?;
    let tape = Tape::new();
    let net = BoundNetwork::new(arch, &layout, tape.constant(theta.0.clone(), 1, theta.len()))?;
    let phi = masked_field_dual(&net, mask, points)?;
    let vals = phi.map(|d| (d.value.value(), d.tangent(0).value(), d.tangent(1).value()));
    Ok((0..points.len())
        .map(|r| {
            (
                [vals[0].0[r], vals[1].0[r]],
                [[vals[0].1[r], vals[0].2[r]], [vals[1].1[r], vals[1].2[r]]],
            )
        })
        .collect())
}
