//! Monte Carlo estimate of the energy functional for a trial field.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autodiff::{AutodiffError, Dual, GradVector, Tape, Var};
use crate::network::{masked_field_dual, masked_field_values, BoundNetwork, Layout, NetworkArch, NetworkError};
use crate::problems::{
    j_nu, j_nu_derivative, j_tau_of_norm, j_tau_of_norm_derivative, ConstraintMask, ManufacturedField, Point,
    ProblemError, ProblemSpec, Region, SuperPotential,
};
use crate::sampling::{RegionSamples, SampleBatch};

/// Number of shards a batch is split into for gradient evaluation. Fixed so
/// results do not depend on the size of the thread pool.
pub const SHARDS: usize = 8;

#[derive(Debug, Error)]
pub enum LossError {
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
}

/// The three summands of the stochastic energy.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    /// Elastic energy minus body-force work.
    pub bulk: f64,
    /// Work of the surface tractions (enters the total with a minus sign).
    pub traction: f64,
    pub potential: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    pub fn new(bulk: f64, traction: f64, potential: f64) -> Self {
        Self { bulk, traction, potential, total: bulk - traction + potential }
    }

    pub fn is_finite(&self) -> bool {
        self.bulk.is_finite() && self.traction.is_finite() && self.potential.is_finite() && self.total.is_finite()
    }
}

impl std::ops::Add for EnergyBreakdown {
    type Output = EnergyBreakdown;
    fn add(self, rhs: Self) -> Self {
        EnergyBreakdown::new(self.bulk + rhs.bulk, self.traction + rhs.traction, self.potential + rhs.potential)
    }
}

/// Symmetric strain with a single shared off-diagonal entry.
#[derive(Clone, Copy, Debug)]
pub struct StrainTensor<'t> {
    pub xx: Var<'t>,
    pub xy: Var<'t>,
    pub yy: Var<'t>,
}

/// `ε = ½(∇φ + ∇φᵀ)` from `grad[i][k] = ∂φ_i/∂x_k`.
pub fn strain<'t>(grad: [[Var<'t>; 2]; 2]) -> StrainTensor<'t> {
    StrainTensor { xx: grad[0][0], xy: (grad[0][1] + grad[1][0]).scale(0.5), yy: grad[1][1] }
}

/// A displacement field that can be evaluated on a tape as a function of the
/// parameter leaf.
pub trait TrialField: Sync {
    /// Values with spatial tangents at interior points.
    fn duals<'t>(&self, theta: Var<'t>, points: &[Point]) -> Result<[Dual<'t>; 2], LossError>;

    /// Values only, at boundary points.
    fn values<'t>(&self, theta: Var<'t>, points: &[Point]) -> Result<[Var<'t>; 2], LossError>;
}

/// The masked network `φ = b ∗ ψ(·; θ)`.
#[derive(Clone, Debug)]
pub struct NetworkField {
    pub arch: NetworkArch,
    pub layout: Layout,
    pub mask: ConstraintMask,
}

impl NetworkField {
    pub fn new(arch: NetworkArch, mask: ConstraintMask) -> Result<Self, NetworkError> {
        let layout = Layout::of(&arch)?;
        Ok(Self { arch, layout, mask })
    }

    pub fn param_len(&self) -> usize {
        self.layout.len()
    }
}

impl TrialField for NetworkField {
    fn duals<'t>(&self, theta: Var<'t>, points: &[Point]) -> Result<[Dual<'t>; 2], LossError> {
        let net = BoundNetwork::new(&self.arch, &self.layout, theta)?;
        Ok(masked_field_dual(&net, &self.mask, points)?)
    }

    fn values<'t>(&self, theta: Var<'t>, points: &[Point]) -> Result<[Var<'t>; 2], LossError> {
        let net = BoundNetwork::new(&self.arch, &self.layout, theta)?;
        Ok(masked_field_values(&net, &self.mask, points)?)
    }
}

/// A closed-form field that ignores the parameters.
pub struct AnalyticField<'a>(pub &'a dyn ManufacturedField);

impl TrialField for AnalyticField<'_> {
    fn duals<'t>(&self, theta: Var<'t>, points: &[Point]) -> Result<[Dual<'t>; 2], LossError> {
        let tape = theta.tape();
        let n = points.len();
        Ok([0, 1].map(|i| {
            let value = tape.constant(points.iter().map(|&p| self.0.value(p)[i]).collect(), n, 1);
            let tangents = [0, 1].map(|k| tape.constant(points.iter().map(|&p| self.0.gradient(p)[i][k]).collect(), n, 1));
            Dual { value, tangents }
        }))
    }

    fn values<'t>(&self, theta: Var<'t>, points: &[Point]) -> Result<[Var<'t>; 2], LossError> {
        let tape = theta.tape();
        let n = points.len();
        Ok([0, 1].map(|i| tape.constant(points.iter().map(|&p| self.0.value(p)[i]).collect(), n, 1)))
    }
}

fn loads(spec: &ProblemSpec, samples: &RegionSamples, region: impl Fn(usize) -> Region) -> Result<[Vec<f64>; 2], LossError> {
    let mut out = [Vec::with_capacity(samples.len()), Vec::with_capacity(samples.len())];
    for (&p, &s) in samples.points.iter().zip(&samples.segments) {
        let f = spec.load(p, region(s))?;
        out[0].push(f[0]);
        out[1].push(f[1]);
    }
    Ok(out)
}

/// Energy terms of one batch as tape scalars `(bulk, traction, potential)`.
/// Per-point weights carry the `|region| / count` factors.
fn energy_terms<'t, F: TrialField + ?Sized>(
    field: &F,
    theta: Var<'t>,
    spec: &ProblemSpec,
    batch: &SampleBatch,
) -> Result<[Option<Var<'t>>; 3], LossError> {
    let (lambda, mu) = spec.law.coefficients()?;
    let mut terms = [None, None, None];

    if !batch.domain.is_empty() {
        let pts = &batch.domain.points;
        let phi = field.duals(theta, pts)?;
        let eps = strain([0, 1].map(|i| [phi[i].tangent(0), phi[i].tangent(1)]));
        let tr = eps.xx + eps.yy;
        let eps_sq = eps.xx.square() + eps.xy.square().scale(2.0) + eps.yy.square();
        // ½ σ:ε with σ = λ tr(ε) I + μ ε
        let density = (tr.square().scale(lambda) + eps_sq.scale(mu)).scale(0.5);
        let f0 = loads(spec, &batch.domain, |_| Region::Domain)?;
        let work = phi[0].value.mul_data(&f0[0]) + phi[1].value.mul_data(&f0[1]);
        terms[0] = Some((density - work).mul_data(&batch.domain.weights).sum());
    }

    if !batch.traction.is_empty() {
        let phi = field.values(theta, &batch.traction.points)?;
        let f2 = loads(spec, &batch.traction, Region::Traction)?;
        let work = phi[0].mul_data(&f2[0]) + phi[1].mul_data(&f2[1]);
        terms[1] = Some(work.mul_data(&batch.traction.weights).sum());
    }

    if spec.potential != SuperPotential::None && !batch.contact.is_empty() {
        let phi = field.values(theta, &batch.contact.points)?;
        let normals: [Vec<f64>; 2] =
            [0, 1].map(|k| batch.contact.segments.iter().map(|&s| spec.contact[s].normal[k]).collect());
        let phi_nu = phi[0].mul_data(&normals[0]) + phi[1].mul_data(&normals[1]);
        let j = match spec.potential {
            SuperPotential::NormalCompliance => phi_nu.map(j_nu, j_nu_derivative),
            SuperPotential::TangentialFriction => {
                let t0 = phi[0] - phi_nu.mul_data(&normals[0]);
                let t1 = phi[1] - phi_nu.mul_data(&normals[1]);
                t0.hypot(t1).map(j_tau_of_norm, j_tau_of_norm_derivative)
            }
            SuperPotential::None => unreachable!(),
        };
        terms[2] = Some(j.mul_data(&batch.contact.weights).sum());
    }
    Ok(terms)
}

/// `Ê = Σ_Ω w (½σ:ε − f₀·φ) − Σ_{Γ_T} w f₂·φ + Σ_{Γ_C} w j(trace)` on the
/// given tape. Returns the total as a scalar node plus its breakdown.
pub fn stochastic_energy<'t, F: TrialField + ?Sized>(
    field: &F,
    theta: Var<'t>,
    spec: &ProblemSpec,
    batch: &SampleBatch,
) -> Result<(Var<'t>, EnergyBreakdown), LossError> {
    let terms = energy_terms(field, theta, spec, batch)?;
    let tape = theta.tape();
    let [bulk, traction, potential] = terms.map(|t| t.unwrap_or_else(|| tape.scalar(0.0)));
    let total = bulk - traction + potential;
    Ok((total, EnergyBreakdown::new(bulk.scalar(), traction.scalar(), potential.scalar())))
}

fn shard(samples: &RegionSamples, k: usize, shards: usize) -> RegionSamples {
    let n = samples.len();
    samples.slice(n * k / shards..n * (k + 1) / shards)
}

fn shard_batch(batch: &SampleBatch, k: usize, shards: usize) -> SampleBatch {
    SampleBatch {
        domain: shard(&batch.domain, k, shards),
        traction: shard(&batch.traction, k, shards),
        contact: shard(&batch.contact, k, shards),
        measures: batch.measures,
        level: batch.level,
    }
}

/// Energy and its parameter gradient. The batch is split into [`SHARDS`]
/// contiguous pieces evaluated on independent tapes; partial results are
/// summed in shard order so the output is bit-reproducible.
pub fn energy_and_gradient<F: TrialField + ?Sized>(
    field: &F,
    theta: &[f64],
    spec: &ProblemSpec,
    batch: &SampleBatch,
) -> Result<(EnergyBreakdown, GradVector), LossError> {
    let parts: Vec<Result<(EnergyBreakdown, GradVector), LossError>> = (0..SHARDS)
        .into_par_iter()
        .map(|k| {
            let tape = Tape::new();
            let th = tape.params(theta);
            let (total, parts) = stochastic_energy(field, th, spec, &shard_batch(batch, k, SHARDS))?;
            let grad = tape.backward(total)?;
            Ok((parts, grad))
        })
        .collect();
    let mut energy = EnergyBreakdown::default();
    let mut grad = GradVector::zeros(theta.len());
    for part in parts {
        let (e, g) = part?;
        energy = energy + e;
        grad += &g;
    }
    Ok((energy, grad))
}

/// Value-only counterpart of [`energy_and_gradient`], with identical
/// summation order.
pub fn energy_value<F: TrialField + ?Sized>(
    field: &F,
    theta: &[f64],
    spec: &ProblemSpec,
    batch: &SampleBatch,
) -> Result<EnergyBreakdown, LossError> {
    let parts: Vec<Result<EnergyBreakdown, LossError>> = (0..SHARDS)
        .into_par_iter()
        .map(|k| {
            let tape = Tape::new();
            let th = tape.constant(theta.to_vec(), 1, theta.len());
            Ok(stochastic_energy(field, th, spec, &shard_batch(batch, k, SHARDS))?.1)
        })
        .collect();
    let mut energy = EnergyBreakdown::default();
    for part in parts {
        energy = energy + part?;
    }
    Ok(energy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::finite_diff_gradient;
    use crate::network::{init_params, Activation, ParamVector};
    use crate::problems::{bilateral_contact, manufactured_problem, normal_compliance, ZeroField};
    use crate::sampling::{sample_uniform, BatchSizes};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    struct Affine {
        grad: [[f64; 2]; 2],
    }

    impl ManufacturedField for Affine {
        fn value(&self, [x, y]: Point) -> [f64; 2] {
            [0, 1].map(|i| self.grad[i][0] * x + self.grad[i][1] * y)
        }
        fn gradient(&self, _: Point) -> [[f64; 2]; 2] {
            self.grad
        }
        fn hessian(&self, _: Point) -> [[[f64; 2]; 2]; 2] {
            [[[0.0; 2]; 2]; 2]
        }
    }

    fn small_batch(spec: &ProblemSpec, seed: u64) -> SampleBatch {
        let sizes = BatchSizes { domain: 64, traction: 16, contact: 16 };
        sample_uniform(spec, sizes, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
    }

    #[test]
    fn strain_symmetrizes() {
        let tape = Tape::new();
        let c = |v: f64| tape.scalar(v);
        let e = strain([[c(0.0), c(1.0)], [c(0.0), c(0.0)]]);
        assert_eq!((e.xx.scalar(), e.xy.scalar(), e.yy.scalar()), (0.0, 0.5, 0.0));
        let e = strain([[c(1.0), c(0.0)], [c(0.0), c(1.0)]]);
        assert_eq!((e.xx.scalar(), e.xy.scalar(), e.yy.scalar()), (1.0, 0.0, 1.0));
    }

    #[test]
    fn swapped_coordinates_have_unit_shear() {
        // φ = (y, x)
        let field = Affine { grad: [[0.0, 1.0], [1.0, 0.0]] };
        let tape = Tape::new();
        let th = tape.params(&[0.0]);
        let phi = AnalyticField(&field).duals(th, &[[0.3, 0.7], [0.9, 0.1]]).unwrap();
        let e = strain([0, 1].map(|i| [phi[i].tangent(0), phi[i].tangent(1)]));
        assert_eq!(e.xy.value(), vec![1.0, 1.0]);
    }

    #[test]
    fn zero_field_has_zero_energy() {
        for spec in [bilateral_contact(), normal_compliance()] {
            let field = NetworkField::new(NetworkArch::plain(2, 8, Activation::Tanh), spec.mask).unwrap();
            let theta = ParamVector::zeros(field.param_len());
            let e = energy_value(&field, &theta.0, &spec, &small_batch(&spec, 1)).unwrap();
            assert_eq!(e, EnergyBreakdown::new(0.0, 0.0, 0.0));
        }
    }

    #[test]
    fn constant_strain_energy_matches_closed_form() {
        // φ = (x, 0) on the unit square with the plane strain law: ½ F(ε):ε |Ω|
        let spec = normal_compliance();
        let field = Affine { grad: [[1.0, 0.0], [0.0, 0.0]] };
        let batch = small_batch(&spec, 2);
        let e = energy_value(&AnalyticField(&field), &[], &spec, &batch).unwrap();
        let (lambda, mu) = spec.law.coefficients().unwrap();
        assert!((e.bulk - 0.5 * (lambda + mu)).abs() < 1e-12);
        // traction (0, −52) does no work on a horizontal field
        assert_eq!(e.traction, 0.0);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for spec in [bilateral_contact(), normal_compliance()] {
            let act = if spec.potential == SuperPotential::NormalCompliance {
                Activation::ReluSquared
            } else {
                Activation::Tanh
            };
            let field = NetworkField::new(NetworkArch::plain(2, 8, act), spec.mask).unwrap();
            let theta = init_params(&field.arch, 3).unwrap();
            let batch = small_batch(&spec, 4);
            let (_, g) = energy_and_gradient(&field, &theta.0, &spec, &batch).unwrap();
            let fd = finite_diff_gradient(|t| energy_value(&field, t, &spec, &batch).unwrap().total, &theta.0, 1e-6);
            let scale = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for (a, b) in g.iter().zip(fd.iter()) {
                assert!((a - b).abs() <= 1e-5 * scale.max(1.0), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn repeated_evaluation_is_bit_identical() {
        let spec = bilateral_contact();
        let field = NetworkField::new(NetworkArch::plain(2, 8, Activation::Tanh), spec.mask).unwrap();
        let theta = init_params(&field.arch, 5).unwrap();
        let batch = small_batch(&spec, 6);
        let a = energy_and_gradient(&field, &theta.0, &spec, &batch).unwrap();
        let b = energy_and_gradient(&field, &theta.0, &spec, &batch).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
        assert_eq!(energy_value(&field, &theta.0, &spec, &batch).unwrap().total.to_bits(), a.0.total.to_bits());
    }

    #[test]
    fn doubling_loads_doubles_only_load_terms() {
        let spec = bilateral_contact();
        let mut doubled = spec.clone();
        let f0 = spec.body_force.clone();
        doubled.body_force = Arc::new(move |p| f0(p).map(|v| 2.0 * v + 1.0));
        let mut once = spec.clone();
        let f0 = spec.body_force.clone();
        once.body_force = Arc::new(move |p| f0(p).map(|v| v + 0.5));
        for (d, s) in doubled.traction.iter_mut().zip(&spec.traction) {
            let load = s.load.clone();
            d.load = Arc::new(move |p| load(p).map(|v| 2.0 * v));
        }
        let field = NetworkField::new(NetworkArch::plain(2, 8, Activation::Tanh), spec.mask).unwrap();
        let theta = init_params(&field.arch, 7).unwrap();
        let batch = small_batch(&spec, 8);
        let a = energy_value(&field, &theta.0, &once, &batch).unwrap();
        let b = energy_value(&field, &theta.0, &doubled, &batch).unwrap();
        let elastic = energy_value(&field, &theta.0, &spec, &batch).unwrap().bulk;
        assert!(((b.bulk - elastic) - 2.0 * (a.bulk - elastic)).abs() < 1e-9 * elastic.abs().max(1.0));
        assert!((b.traction - 2.0 * a.traction).abs() < 1e-9 * a.traction.abs().max(1.0));
        assert_eq!(a.potential, b.potential);
    }

    #[test]
    fn unloaded_elastic_energy_is_nonnegative() {
        let spec = manufactured_problem(Arc::new(ZeroField));
        let field = NetworkField::new(NetworkArch::plain(2, 8, Activation::Tanh), spec.mask).unwrap();
        for seed in 0..10 {
            let theta = init_params(&field.arch, seed).unwrap();
            let e = energy_value(&field, &theta.0, &spec, &small_batch(&spec, seed)).unwrap();
            assert!(e.bulk >= 0.0 && e.traction == 0.0 && e.potential == 0.0);
        }
    }
}
