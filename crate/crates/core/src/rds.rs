//! Discrete-time cocycles driven by i.i.d. noise.
//!
//! [`RandomSystem`] is the interface every estimator in [`crate::analysis`]
//! is written against: a way to build a noise realization from
//! `(seed, stream)`, shift it in time, and materialize the one-step maps
//! `φ(1, θᵏω)` for `k = 0..n` as a [`RandomSystem::Segment`]. The i.i.d.
//! iterated function system [`IfsModel`] implements it directly; the SDE
//! flow implements it by sampling at integer times.

use serde::Serialize;
use thiserror::Error;

use crate::circle::{cyclic_order, d_plus_bits, Arc, CirclePoint, Orientation, Region, ALMOST_ONE, TURN};
use crate::homeo::{FixedPointSet, HomeoSpec};
use crate::noise::CounterStream;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("an IFS needs at least one generator")]
    NoGenerators,
    #[error("{generators} generators but {weights} weights")]
    WeightCount { generators: usize, weights: usize },
    #[error("weight {index} is {value}; weights must be strictly positive")]
    NonPositiveWeight { index: usize, value: f64 },
    #[error("weights sum to {0}, expected 1")]
    WeightSum(f64),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RdsError {
    #[error("{0} is not supported for this system")]
    Unsupported(&'static str),
    #[error("pullback depths must be strictly increasing")]
    DepthsNotIncreasing,
}

/// A random dynamical system on the circle in discrete time.
pub trait RandomSystem: Sync {
    type Noise: Clone + Send + Sync;
    type Segment: Send + Sync;

    /// The realization with the given key.
    fn realization(&self, seed: u64, stream: u64) -> Self::Noise;

    /// θᵗω; `t` may be negative.
    fn shift(&self, noise: &Self::Noise, t: i64) -> Self::Noise;

    /// The one-step maps φ(1, θᵏω) for `k = 0..steps`.
    fn segment(&self, noise: &Self::Noise, steps: usize) -> Self::Segment;

    /// Applies φ(1, θᵏω).
    fn step(&self, segment: &Self::Segment, k: usize, x: CirclePoint) -> CirclePoint;

    /// Applies φ(1, θᵏω)⁻¹.
    fn step_inverse(&self, _segment: &Self::Segment, _k: usize, _x: CirclePoint) -> Result<CirclePoint, RdsError> {
        Err(RdsError::Unsupported("inverse-time evolution"))
    }

    /// log of the derivative of φ(1, θᵏω) at `x`.
    fn step_log_derivative(&self, _segment: &Self::Segment, _k: usize, _x: CirclePoint) -> Result<f64, RdsError> {
        Err(RdsError::Unsupported("derivative evaluation"))
    }
}

/// A realization of i.i.d. map choices: a counter stream plus a time offset.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseRealization {
    stream: CounterStream,
    offset: i64,
}

impl NoiseRealization {
    pub fn new(seed: u64, stream: u64) -> Self {
        NoiseRealization {
            stream: CounterStream::new(seed, stream),
            offset: 0,
        }
    }

    /// θᵗω: index `i` of the result is index `i + t` of `self`.
    #[must_use]
    pub fn shift(&self, t: i64) -> Self {
        NoiseRealization {
            stream: self.stream.clone(),
            offset: self.offset + t,
        }
    }

    pub fn seed(&self) -> u64 {
        self.stream.seed()
    }

    pub fn stream_id(&self) -> u64 {
        self.stream.stream()
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    /// Uniform variate attached to time index `i`.
    pub fn uniform(&self, i: i64) -> f64 {
        self.stream.uniform(self.offset + i)
    }
}

/// An i.i.d. iterated function system: at each step one generator is chosen
/// with probability given by `weights`.
#[derive(Debug, Clone, PartialEq)]
pub struct IfsModel {
    generators: Vec<HomeoSpec>,
    weights: Vec<f64>,
    cumulative: Vec<f64>,
}

impl IfsModel {
    pub fn new(generators: Vec<HomeoSpec>, weights: Vec<f64>) -> Result<Self, ModelError> {
        if generators.is_empty() {
            return Err(ModelError::NoGenerators);
        }
        if generators.len() != weights.len() {
            return Err(ModelError::WeightCount {
                generators: generators.len(),
                weights: weights.len(),
            });
        }
        for (index, &value) in weights.iter().enumerate() {
            if !(value > 0.0) || !value.is_finite() {
                return Err(ModelError::NonPositiveWeight { index, value });
            }
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(ModelError::WeightSum(total));
        }
        let mut acc = 0.0;
        let cumulative = weights
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        Ok(IfsModel {
            generators,
            weights,
            cumulative,
        })
    }

    /// Equal weights.
    pub fn uniform(generators: Vec<HomeoSpec>) -> Result<Self, ModelError> {
        let n = generators.len();
        if n == 0 {
            return Err(ModelError::NoGenerators);
        }
        let mut weights = vec![1.0 / n as f64; n];
        // make the sum exactly representable
        let rest: f64 = weights[1..].iter().sum();
        weights[0] = 1.0 - rest;
        Self::new(generators, weights)
    }

    /// Deterministic dynamics: a single generator chosen with probability one.
    pub fn singleton(generator: HomeoSpec) -> Self {
        IfsModel {
            generators: vec![generator],
            weights: vec![1.0],
            cumulative: vec![1.0],
        }
    }

    pub fn generators(&self) -> &[HomeoSpec] {
        &self.generators
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Index of the generator f_i driving time index `i` of `noise`.
    pub fn generator_index(&self, noise: &NoiseRealization, i: i64) -> usize {
        if self.generators.len() == 1 {
            return 0;
        }
        let u = noise.uniform(i);
        self.cumulative
            .partition_point(|&c| c <= u)
            .min(self.generators.len() - 1)
    }

    /// The generator f_i.
    pub fn map_at(&self, noise: &NoiseRealization, i: i64) -> &HomeoSpec {
        &self.generators[self.generator_index(noise, i)]
    }

    /// Points fixed by every generator.
    pub fn deterministic_fixed_points(&self) -> FixedPointSet {
        let mut acc = FixedPointSet::All;
        for g in &self.generators {
            let fp = g.fixed_points();
            acc = match (acc, fp) {
                (FixedPointSet::All, other) => other,
                (FixedPointSet::Points(ours), _) => FixedPointSet::Points(
                    ours.into_iter()
                        .filter(|p| crate::circle::d(g.apply(p.point), p.point) < 1e-9)
                        .collect(),
                ),
                (FixedPointSet::Continuum, FixedPointSet::Points(theirs)) => FixedPointSet::Points(
                    theirs
                        .into_iter()
                        .filter(|p| {
                            self.generators
                                .iter()
                                .all(|h| crate::circle::d(h.apply(p.point), p.point) < 1e-9)
                        })
                        .collect(),
                ),
                (FixedPointSet::Continuum, _) => FixedPointSet::Continuum,
            };
        }
        acc
    }
}

impl RandomSystem for IfsModel {
    type Noise = NoiseRealization;
    type Segment = Vec<u32>;

    fn realization(&self, seed: u64, stream: u64) -> NoiseRealization {
        NoiseRealization::new(seed, stream)
    }

    fn shift(&self, noise: &NoiseRealization, t: i64) -> NoiseRealization {
        noise.shift(t)
    }

    fn segment(&self, noise: &NoiseRealization, steps: usize) -> Vec<u32> {
        (1..=steps as i64)
            .map(|i| self.generator_index(noise, i) as u32)
            .collect()
    }

    fn step(&self, segment: &Vec<u32>, k: usize, x: CirclePoint) -> CirclePoint {
        self.generators[segment[k] as usize].apply(x)
    }

    fn step_inverse(&self, segment: &Vec<u32>, k: usize, x: CirclePoint) -> Result<CirclePoint, RdsError> {
        Ok(self.generators[segment[k] as usize].apply_inverse(x))
    }

    fn step_log_derivative(&self, segment: &Vec<u32>, k: usize, x: CirclePoint) -> Result<f64, RdsError> {
        Ok(self.generators[segment[k] as usize].derivative(x).ln())
    }
}

/// Point positions over time: row `k` holds the points at time `k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    rows: Vec<Vec<CirclePoint>>,
}

impl Trajectory {
    pub fn rows(&self) -> &[Vec<CirclePoint>] {
        &self.rows
    }

    pub fn row(&self, k: usize) -> &[CirclePoint] {
        &self.rows[k]
    }

    pub fn last(&self) -> &[CirclePoint] {
        self.rows.last().expect("trajectory has at least the initial row")
    }

    /// Number of steps taken (rows minus one).
    pub fn steps(&self) -> usize {
        self.rows.len() - 1
    }

    pub fn column(&self, i: usize) -> Vec<CirclePoint> {
        self.rows.iter().map(|r| r[i]).collect()
    }
}

/// An arc carried along by a flow.
///
/// The image of an arc under a homeomorphism is the arc between the endpoint
/// images, but once the image is within rounding of the whole circle the two
/// endpoints can coincide or swap. The tracker resolves this by continuity:
/// a long arc whose endpoints meet becomes [`Region::FullCircle`], and a
/// short arc whose endpoints swap by rounding becomes degenerate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackedArc {
    start: CirclePoint,
    end: CirclePoint,
    full: bool,
}

/// Width of the band, in fixed-point units, within which an endpoint swap is
/// attributed to rounding (about 1e-12 of a turn).
const SWAP_BAND: u64 = 1 << 24;

impl TrackedArc {
    pub fn new(arc: Arc) -> Self {
        TrackedArc {
            start: arc.start,
            end: arc.end,
            full: false,
        }
    }

    pub fn start(&self) -> CirclePoint {
        self.start
    }

    pub fn end(&self) -> CirclePoint {
        self.end
    }

    pub fn is_full(&self) -> bool {
        self.full
    }

    pub fn region(&self) -> Region {
        if self.full {
            Region::FullCircle
        } else {
            Region::Arc(Arc {
                start: self.start,
                end: self.end,
            })
        }
    }

    /// Image length in `[0, 1)`; a saturated image reports [`ALMOST_ONE`].
    pub fn length(&self) -> f64 {
        if self.full {
            ALMOST_ONE
        } else {
            crate::circle::units_to_unit_interval(d_plus_bits(self.start, self.end))
        }
    }

    /// Length of the complementary arc, accurate when the image is long.
    pub fn complement_length(&self) -> f64 {
        if self.full {
            0.0
        } else {
            let c = d_plus_bits(self.end, self.start);
            if c == 0 {
                0.0
            } else {
                c as f64 / TURN
            }
        }
    }

    /// Moves both endpoints through `f`.
    pub fn map(&mut self, f: impl Fn(CirclePoint) -> CirclePoint) {
        let (start, end) = (f(self.start), f(self.end));
        self.advance_to(start, end);
    }

    /// Replaces the endpoints by their images under one homeomorphism.
    pub fn advance_to(&mut self, start: CirclePoint, end: CirclePoint) {
        let was_long = d_plus_bits(self.start, self.end) > (1 << 63);
        self.start = start;
        self.end = end;
        if self.full {
            return;
        }
        let after = d_plus_bits(start, end);
        if was_long && after < SWAP_BAND {
            self.full = true;
        } else if !was_long && after > u64::MAX - SWAP_BAND {
            // short arc whose endpoints crossed by rounding
            self.end = self.start;
        }
    }
}

/// The n-point motion together with tracked arcs, advanced one step at a time.
#[derive(Debug, Clone)]
pub struct CocycleState {
    pub elapsed: usize,
    pub points: Vec<CirclePoint>,
    pub arcs: Vec<TrackedArc>,
}

/// One row of an evolution: the step index, point values and arc lengths.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRecord {
    pub step: usize,
    pub points: Vec<CirclePoint>,
    pub arc_lengths: Vec<f64>,
}

impl CocycleState {
    pub fn new(points: Vec<CirclePoint>, arcs: Vec<Arc>) -> Self {
        CocycleState {
            elapsed: 0,
            points,
            arcs: arcs.into_iter().map(TrackedArc::new).collect(),
        }
    }

    /// Applies the map at segment position `k`.
    pub fn advance<S: RandomSystem + ?Sized>(&mut self, system: &S, segment: &S::Segment, k: usize) {
        for p in &mut self.points {
            *p = system.step(segment, k, *p);
        }
        for a in &mut self.arcs {
            a.map(|x| system.step(segment, k, x));
        }
        self.elapsed += 1;
    }

    pub fn record(&self) -> StepRecord {
        StepRecord {
            step: self.elapsed,
            points: self.points.clone(),
            arc_lengths: self.arcs.iter().map(TrackedArc::length).collect(),
        }
    }

    /// True if every consecutive triple of tracked points is positively ordered.
    pub fn order_preserved(&self) -> bool {
        let n = self.points.len();
        n < 3
            || (0..n).all(|i| {
                cyclic_order(self.points[i], self.points[(i + 1) % n], self.points[(i + 2) % n])
                    == Orientation::Positive
            })
    }
}

/// Streams the evolution of points and arcs under one realization. The first
/// record is time 0.
pub fn evolution<'a, S: RandomSystem>(
    system: &'a S,
    noise: &S::Noise,
    points: Vec<CirclePoint>,
    arcs: Vec<Arc>,
    steps: usize,
) -> impl Iterator<Item = StepRecord> + 'a {
    let segment = system.segment(noise, steps);
    let mut state = CocycleState::new(points, arcs);
    let mut started = false;
    std::iter::from_fn(move || {
        if !started {
            started = true;
            return Some(state.record());
        }
        if state.elapsed >= steps {
            return None;
        }
        let k = state.elapsed;
        state.advance(system, &segment, k);
        Some(state.record())
    })
}

/// φ(k, ω) applied to every point, for `k = 0..=steps`. All points share ω.
pub fn evolve<S: RandomSystem + ?Sized>(system: &S, noise: &S::Noise, points: &[CirclePoint], steps: usize) -> Trajectory {
    let segment = system.segment(noise, steps);
    evolve_segment(system, &segment, points, steps)
}

pub(crate) fn evolve_segment<S: RandomSystem + ?Sized>(
    system: &S,
    segment: &S::Segment,
    points: &[CirclePoint],
    steps: usize,
) -> Trajectory {
    let mut rows = Vec::with_capacity(steps + 1);
    let mut current = points.to_vec();
    rows.push(current.clone());
    for k in 0..steps {
        for p in &mut current {
            *p = system.step(segment, k, *p);
        }
        rows.push(current.clone());
    }
    Trajectory { rows }
}

/// Length of φ(k, ω)J for `k = 0..=steps`.
pub fn evolve_arc<S: RandomSystem + ?Sized>(system: &S, noise: &S::Noise, arc: Arc, steps: usize) -> Vec<f64> {
    let segment = system.segment(noise, steps);
    let mut tracked = TrackedArc::new(arc);
    let mut lengths = Vec::with_capacity(steps + 1);
    lengths.push(tracked.length());
    for k in 0..steps {
        tracked.map(|x| system.step(&segment, k, x));
        lengths.push(tracked.length());
    }
    lengths
}

/// Row `k` is f_k⁻¹ ∘ … ∘ f_1⁻¹ applied to each point.
pub fn inverse_evolve<S: RandomSystem + ?Sized>(
    system: &S,
    noise: &S::Noise,
    points: &[CirclePoint],
    steps: usize,
) -> Result<Trajectory, RdsError> {
    let segment = system.segment(noise, steps);
    let mut rows = Vec::with_capacity(steps + 1);
    let mut current = points.to_vec();
    rows.push(current.clone());
    for k in 0..steps {
        for p in &mut current {
            *p = system.step_inverse(&segment, k, *p)?;
        }
        rows.push(current.clone());
    }
    Ok(Trajectory { rows })
}

/// φ(m, θ⁻ᵐω)y for each depth `m`: the pullback sequence converging to the
/// random attractor a(ω) when the system synchronises.
pub fn pullback_point<S: RandomSystem + ?Sized>(
    system: &S,
    noise: &S::Noise,
    y: CirclePoint,
    depths: &[usize],
) -> Result<Vec<CirclePoint>, RdsError> {
    if depths.windows(2).any(|w| w[0] >= w[1]) {
        return Err(RdsError::DepthsNotIncreasing);
    }
    Ok(depths
        .iter()
        .map(|&m| {
            let past = system.shift(noise, -(m as i64));
            let segment = system.segment(&past, m);
            (0..m).fold(y, |x, k| system.step(&segment, k, x))
        })
        .collect())
}
