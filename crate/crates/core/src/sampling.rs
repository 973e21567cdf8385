//! Training point sets: i.i.d. uniform batches and lattice-restricted
//! batches for the multigrid levels.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::problems::{Point, ProblemSpec, Segment, GEOM_TOL};

#[derive(Debug, Error, PartialEq)]
pub enum SamplingError {
    #[error("grid level {level} with step {step} has no interior points")]
    EmptyGrid { level: usize, step: f64 },
    #[error("invalid grid request: {0}")]
    InvalidLevel(String),
    #[error("batch sizes must be positive")]
    EmptyBatch,
}

/// Requested number of points per region.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchSizes {
    pub domain: usize,
    pub traction: usize,
    pub contact: usize,
}

impl Default for BatchSizes {
    fn default() -> Self {
        Self { domain: 1024, traction: 256, contact: 256 }
    }
}

/// Points of one region together with their quadrature weights and the
/// boundary piece each point was drawn from.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RegionSamples {
    pub points: Vec<Point>,
    pub segments: Vec<usize>,
    pub weights: Vec<f64>,
}

impl RegionSamples {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Contiguous sub-range, used for sharding.
    pub fn slice(&self, range: std::ops::Range<usize>) -> RegionSamples {
        RegionSamples {
            points: self.points[range.clone()].to_vec(),
            segments: self.segments[range.clone()].to_vec(),
            weights: self.weights[range].to_vec(),
        }
    }
}

/// A Monte Carlo batch over Ω, Γ_T and Γ_C.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SampleBatch {
    pub domain: RegionSamples,
    pub traction: RegionSamples,
    pub contact: RegionSamples,
    /// `(|Ω|, |Γ_T|, |Γ_C|)`
    pub measures: (f64, f64, f64),
    /// Lattice level the points were drawn from, if any.
    pub level: Option<usize>,
}

/// Splits `total` over pieces proportionally to `lengths` (largest remainder).
fn allocate(total: usize, lengths: &[f64]) -> Vec<usize> {
    let sum: f64 = lengths.iter().sum();
    if lengths.is_empty() || sum <= 0.0 {
        return vec![0; lengths.len()];
    }
    let exact: Vec<f64> = lengths.iter().map(|l| total as f64 * l / sum).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut rest = total - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..lengths.len()).collect();
    order.sort_by(|&a, &b| {
        let (fa, fb) = (exact[a] - exact[a].floor(), exact[b] - exact[b].floor());
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for &i in order.iter().cycle() {
        if rest == 0 {
            break;
        }
        counts[i] += 1;
        rest -= 1;
    }
    counts
}

fn boundary_samples<R: Rng + ?Sized>(
    segments: &[Segment],
    total: usize,
    rng: &mut R,
    mut draw: impl FnMut(usize, &mut R) -> Point,
) -> RegionSamples {
    let lengths: Vec<f64> = segments.iter().map(Segment::length).collect();
    let counts = allocate(total, &lengths);
    let mut out = RegionSamples::default();
    for (s, &n) in counts.iter().enumerate() {
        for _ in 0..n {
            out.points.push(draw(s, rng));
            out.segments.push(s);
            out.weights.push(lengths[s] / n as f64);
        }
    }
    out
}

/// i.i.d. uniform points in each region. Boundary points are allocated to
/// the pieces of Γ_T (or Γ_C) in proportion to their lengths.
pub fn sample_uniform<R: Rng + ?Sized>(
    spec: &ProblemSpec,
    sizes: BatchSizes,
    rng: &mut R,
) -> Result<SampleBatch, SamplingError> {
    if sizes.domain == 0 {
        return Err(SamplingError::EmptyBatch);
    }
    let rect = spec.domain;
    let w = rect.area() / sizes.domain as f64;
    let mut domain = RegionSamples::default();
    for _ in 0..sizes.domain {
        let x = rect.min[0] + rect.width() * rng.random::<f64>();
        let y = rect.min[1] + rect.height() * rng.random::<f64>();
        domain.points.push([x, y]);
        domain.segments.push(0);
        domain.weights.push(w);
    }
    let traction_segments: Vec<Segment> = spec.traction.iter().map(|t| t.segment).collect();
    let traction = boundary_samples(&traction_segments, sizes.traction, rng, |s, rng| {
        traction_segments[s].point_at(rng.random::<f64>())
    });
    let contact = boundary_samples(&spec.contact, sizes.contact, rng, |s, rng| {
        spec.contact[s].point_at(rng.random::<f64>())
    });
    Ok(SampleBatch {
        domain,
        traction,
        contact,
        measures: (spec.area(), spec.traction_length(), spec.contact_length()),
        level: None,
    })
}

/// Lattice points of one multigrid level.
#[derive(Clone, Debug, PartialEq)]
pub struct GridLevel {
    /// 1-based level index.
    pub level: usize,
    pub step: f64,
    pub interior: Vec<Point>,
    pub traction: Vec<Vec<Point>>,
    pub contact: Vec<Vec<Point>>,
}

/// Number of multiples `k·step`, `k ≥ 1`, strictly inside `(0, len)`.
fn interior_count(len: f64, step: f64) -> usize {
    let n = (len / step - 1e-9).floor();
    if n < 1.0 {
        0
    } else {
        n as usize
    }
}

fn segment_lattice(seg: &Segment, step: f64) -> Vec<Point> {
    let len = seg.length();
    (1..=interior_count(len, step)).map(|k| seg.point_at(k as f64 * step / len)).collect()
}

/// Lattice with step `2^{p−1} H` over Ω and over each boundary piece.
pub fn build_grid(spec: &ProblemSpec, level: usize, finest_step: f64, levels: usize) -> Result<GridLevel, SamplingError> {
    if level == 0 || level > levels {
        return Err(SamplingError::InvalidLevel(format!("level {level} outside 1..={levels}")));
    }
    if !(finest_step > 0.0) {
        return Err(SamplingError::InvalidLevel(format!("step {finest_step} must be positive")));
    }
    let step = finest_step * 2f64.powi(level as i32 - 1);
    let rect = spec.domain;
    let nx = interior_count(rect.width(), step);
    let ny = interior_count(rect.height(), step);
    if nx == 0 || ny == 0 {
        return Err(SamplingError::EmptyGrid { level, step });
    }
    let mut interior = Vec::with_capacity(nx * ny);
    for i in 1..=nx {
        for j in 1..=ny {
            interior.push([rect.min[0] + i as f64 * step, rect.min[1] + j as f64 * step]);
        }
    }
    Ok(GridLevel {
        level,
        step,
        interior,
        traction: spec.traction.iter().map(|t| segment_lattice(&t.segment, step)).collect(),
        contact: spec.contact.iter().map(|s| segment_lattice(s, step)).collect(),
    })
}

/// Uniform draws with replacement from the lattice point sets.
pub fn sample_from_grid<R: Rng + ?Sized>(
    grid: &GridLevel,
    spec: &ProblemSpec,
    sizes: BatchSizes,
    rng: &mut R,
) -> Result<SampleBatch, SamplingError> {
    if sizes.domain == 0 {
        return Err(SamplingError::EmptyBatch);
    }
    if grid.interior.is_empty() {
        return Err(SamplingError::EmptyGrid { level: grid.level, step: grid.step });
    }
    let w = spec.area() / sizes.domain as f64;
    let mut domain = RegionSamples::default();
    for _ in 0..sizes.domain {
        domain.points.push(grid.interior[rng.random_range(0..grid.interior.len())]);
        domain.segments.push(0);
        domain.weights.push(w);
    }
    let pick = |sets: &[Vec<Point>], segs: &[Segment], total: usize, rng: &mut R| {
        // pieces too short to hold a lattice point are skipped
        let lengths: Vec<f64> = segs
            .iter()
            .zip(sets)
            .map(|(s, pts)| if pts.is_empty() { 0.0 } else { s.length() })
            .collect();
        let counts = allocate(total, &lengths);
        let mut out = RegionSamples::default();
        for (s, &n) in counts.iter().enumerate() {
            for _ in 0..n {
                out.points.push(sets[s][rng.random_range(0..sets[s].len())]);
                out.segments.push(s);
                out.weights.push(segs[s].length() / n as f64);
            }
        }
        out
    };
    let traction_segments: Vec<Segment> = spec.traction.iter().map(|t| t.segment).collect();
    let traction = pick(&grid.traction, &traction_segments, sizes.traction, rng);
    let contact = pick(&grid.contact, &spec.contact, sizes.contact, rng);
    Ok(SampleBatch {
        domain,
        traction,
        contact,
        measures: (spec.area(), spec.traction_length(), spec.contact_length()),
        level: Some(grid.level),
    })
}

/// True when every point lies in its declared region within [`GEOM_TOL`].
pub fn batch_is_consistent(spec: &ProblemSpec, batch: &SampleBatch) -> bool {
    batch.domain.points.iter().all(|&p| spec.domain.contains(p, GEOM_TOL))
        && batch
            .traction
            .points
            .iter()
            .zip(&batch.traction.segments)
            .all(|(&p, &s)| spec.traction[s].segment.contains(p, GEOM_TOL))
        && batch
            .contact
            .points
            .iter()
            .zip(&batch.contact.segments)
            .all(|(&p, &s)| spec.contact[s].contains(p, GEOM_TOL))
}
