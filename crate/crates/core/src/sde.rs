//! The circle SDE `dX = b(X) dt + σ dW` with additive noise.
//!
//! Every tracked initial condition is driven by the same Brownian increments,
//! and integration happens on fixed-point lifts (64 fractional bits), so the
//! common noise term cancels exactly in every pairwise gap. The time-1 map of
//! the flow is exposed as a [`RandomSystem`], which lets every discrete-time
//! estimator run on the SDE unchanged.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::circle::{sin_cos_turns, Arc, CirclePoint, Lift, TURN};
use crate::noise::CounterStream;
use crate::rds::RandomSystem;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SdeError {
    #[error("noise intensity must be positive and finite, got {0}")]
    InvalidSigma(f64),
    #[error("step size must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error("step {h} exceeds the order-preservation bound 1/(4 L_b) = {max}")]
    StepGuard { h: f64, max: f64 },
    #[error("1/h must be an integer so that unit times fall on the grid, got h = {0}")]
    NonIntegralUnit(f64),
    #[error("time {t} is not a multiple of the step {h}")]
    StepAlignment { t: f64, h: f64 },
    #[error("path step {path} does not match model step {model}")]
    PathStepMismatch { path: f64, model: f64 },
    #[error("initial lifts must be strictly increasing with span below 1")]
    UnorderedLifts,
    #[error("lifts {index} and {next} crossed at step {step}")]
    OrderViolation { step: usize, index: usize, next: usize },
    #[error("drift table: {0}")]
    Table(String),
    #[error("unknown drift `{0}`; expected `sine:k` or `table:path.csv`")]
    UnknownDrift(String),
    #[error("drift is 1/{divisor}-periodic; no contraction witness exists")]
    PreconditionFailed { divisor: u32 },
    #[error("arc length must lie strictly between 0 and 1")]
    InvalidArc,
    #[error("no contraction before time 1 with eta = {eta}")]
    NoContraction { eta: f64 },
}

/// A 1-periodic Lipschitz drift.
#[derive(Debug, Clone, PartialEq)]
pub enum DriftSpec {
    /// `b(x) = sin(2πkx)`.
    Sine { k: u32 },
    /// Periodic linear interpolation of `values[j] = b(j / n)`.
    Tabulated { values: Vec<f64>, source: Option<String> },
}

impl DriftSpec {
    pub fn sine(k: u32) -> Result<Self, SdeError> {
        if k == 0 {
            return Err(SdeError::UnknownDrift("sine:0".into()));
        }
        Ok(DriftSpec::Sine { k })
    }

    pub fn tabulated(values: Vec<f64>) -> Result<Self, SdeError> {
        if values.is_empty() {
            return Err(SdeError::Table("no samples".into()));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(SdeError::Table(format!("non-finite sample {v}")));
        }
        Ok(DriftSpec::Tabulated { values, source: None })
    }

    /// Reads samples from CSV text: one sample per row, taken from the last
    /// column. A first row that does not parse is treated as a header.
    pub fn from_csv(text: &str) -> Result<Self, SdeError> {
        let mut values = Vec::new();
        for (line_no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cell = line.rsplit(',').next().unwrap_or("").trim();
            match cell.parse::<f64>() {
                Ok(v) => values.push(v),
                Err(_) if values.is_empty() && line_no == 0 => {}
                Err(_) => return Err(SdeError::Table(format!("line {}: cannot parse `{cell}`", line_no + 1))),
            }
        }
        Self::tabulated(values)
    }

    /// b at the point whose fixed-point fraction is `frac`.
    fn eval_units(&self, frac: u64) -> f64 {
        match self {
            DriftSpec::Sine { k } => {
                // the phase kx mod 1 is computed exactly, so b(x + j/k) = b(x) bit for bit
                let phase = (*k as u64).wrapping_mul(frac);
                sin_cos_turns(phase).0
            }
            DriftSpec::Tabulated { values, .. } => {
                let n = values.len();
                let pos = frac as f64 / TURN * n as f64;
                let j = (pos.floor() as usize).min(n - 1);
                let w = pos - j as f64;
                values[j] * (1.0 - w) + values[(j + 1) % n] * w
            }
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval_units(CirclePoint::new(x).to_bits())
    }

    /// A Lipschitz constant: `2πk` for sines, the largest slope for tables.
    pub fn lipschitz(&self) -> f64 {
        match self {
            DriftSpec::Sine { k } => TAU * *k as f64,
            DriftSpec::Tabulated { values, .. } => {
                let n = values.len();
                (0..n)
                    .map(|j| (values[(j + 1) % n] - values[j]).abs() * n as f64)
                    .fold(0.0, f64::max)
            }
        }
    }
}

impl fmt::Display for DriftSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DriftSpec::Sine { k } => write!(f, "sine:{k}"),
            DriftSpec::Tabulated { source: Some(path), .. } => write!(f, "table:{path}"),
            DriftSpec::Tabulated { values, source: None } => write!(f, "table[{} samples]", values.len()),
        }
    }
}

impl FromStr for DriftSpec {
    type Err = SdeError;

    /// Parses `sine:k`. Tables need file access and are loaded by the
    /// config layer.
    fn from_str(s: &str) -> Result<Self, SdeError> {
        match s.trim().strip_prefix("sine:") {
            Some(k) => k
                .trim()
                .parse::<u32>()
                .map_err(|_| SdeError::UnknownDrift(s.into()))
                .and_then(DriftSpec::sine),
            None => Err(SdeError::UnknownDrift(s.into())),
        }
    }
}

/// Grid size for period and witness searches.
const PERIOD_GRID: usize = 1 << 14;

/// Largest `n ≤ 64` such that `b` is `1/n`-periodic to within `tol` on a grid.
pub fn least_period_divisor(drift: &DriftSpec, tol: f64) -> u32 {
    (2..=64u32)
        .rev()
        .find(|&n| {
            let shift = CirclePoint::new(1.0 / n as f64).to_bits();
            (0..PERIOD_GRID).all(|j| {
                let x = (j as u64) << 50;
                (drift.eval_units(x.wrapping_add(shift)) - drift.eval_units(x)).abs() <= tol
            })
        })
        .unwrap_or(1)
}

fn to_units(x: f64) -> i128 {
    (x * TURN).round() as i128
}

/// The SDE with step size `h`.
#[derive(Debug, Clone, PartialEq)]
pub struct SdeModel {
    drift: DriftSpec,
    sigma: f64,
    h: f64,
    steps_per_unit: usize,
}

impl SdeModel {
    /// `h` must satisfy `h ≤ 1/(4 L_b)` and `1/h` must be an integer.
    pub fn new(drift: DriftSpec, sigma: f64, h: f64) -> Result<Self, SdeError> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(SdeError::InvalidSigma(sigma));
        }
        if !(h > 0.0) || !h.is_finite() {
            return Err(SdeError::InvalidStep(h));
        }
        let lip = drift.lipschitz();
        if lip > 0.0 && h > 1.0 / (4.0 * lip) {
            return Err(SdeError::StepGuard { h, max: 1.0 / (4.0 * lip) });
        }
        let n = (1.0 / h).round();
        if n < 1.0 || (n * h - 1.0).abs() > 1e-12 {
            return Err(SdeError::NonIntegralUnit(h));
        }
        Ok(SdeModel {
            drift,
            sigma,
            h,
            steps_per_unit: n as usize,
        })
    }

    pub fn drift(&self) -> &DriftSpec {
        &self.drift
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn steps_per_unit(&self) -> usize {
        self.steps_per_unit
    }

    /// A fresh Brownian path on this model's grid.
    pub fn path(&self, seed: u64, stream: u64) -> BrownianPath {
        BrownianPath::new(seed, stream, self.h)
    }

    fn drift_units(&self, frac: u64, dt: f64) -> i128 {
        to_units(dt * self.drift.eval_units(frac))
    }

    fn steps_for(&self, t: f64) -> Result<usize, SdeError> {
        let n = (t / self.h).round();
        if !(t >= 0.0) || (n * self.h - t).abs() > 1e-9 * t.max(1.0) {
            return Err(SdeError::StepAlignment { t, h: self.h });
        }
        Ok(n as usize)
    }

    /// Euler–Maruyama on lifts up to time `t`: row `k` holds the lifts at
    /// time `k h`. All lifts share the increments of `path`.
    pub fn integrate_flow(&self, path: &BrownianPath, lifts: &[Lift], t: f64) -> Result<Vec<Vec<Lift>>, SdeError> {
        let steps = self.prepare(path, lifts, t)?;
        let mut rows = Vec::with_capacity(steps + 1);
        let mut current = lifts.to_vec();
        rows.push(current.clone());
        for k in 0..steps {
            self.euler_step(&mut current, self.noise_units(path, k as i64 + 1));
            check_order(&current, k + 1)?;
            rows.push(current.clone());
        }
        Ok(rows)
    }

    /// Like [`SdeModel::integrate_flow`] but keeps only the final row.
    pub fn integrate_final(&self, path: &BrownianPath, lifts: &[Lift], t: f64) -> Result<Vec<Lift>, SdeError> {
        let steps = self.prepare(path, lifts, t)?;
        let mut current = lifts.to_vec();
        for k in 0..steps {
            self.euler_step(&mut current, self.noise_units(path, k as i64 + 1));
            check_order(&current, k + 1)?;
        }
        Ok(current)
    }

    fn prepare(&self, path: &BrownianPath, lifts: &[Lift], t: f64) -> Result<usize, SdeError> {
        if (path.h() - self.h).abs() > 1e-15 * self.h {
            return Err(SdeError::PathStepMismatch {
                path: path.h(),
                model: self.h,
            });
        }
        if check_order(lifts, 0).is_err() {
            return Err(SdeError::UnorderedLifts);
        }
        self.steps_for(t)
    }

    fn noise_units(&self, path: &BrownianPath, i: i64) -> i128 {
        to_units(self.sigma * path.increment(i))
    }

    fn euler_step(&self, lifts: &mut [Lift], noise: i128) {
        for x in lifts.iter_mut() {
            let drift = self.drift_units(x.base().to_bits(), self.h);
            *x = x.shift_bits(drift + noise);
        }
    }
}

/// Lifts must be strictly increasing and the last below the first plus one.
fn check_order(lifts: &[Lift], step: usize) -> Result<(), SdeError> {
    for i in 1..lifts.len() {
        if lifts[i] <= lifts[i - 1] {
            return Err(SdeError::OrderViolation { step, index: i - 1, next: i });
        }
    }
    if let (Some(first), Some(last)) = (lifts.first(), lifts.last()) {
        if lifts.len() > 1 && *last >= first.translate(1) {
            return Err(SdeError::OrderViolation {
                step,
                index: lifts.len() - 1,
                next: 0,
            });
        }
    }
    Ok(())
}

/// Two-sided Brownian increments on a grid of step `h`.
///
/// Increment `i` is `W(i h) − W((i − 1) h)`; indices `i ≤ 0` are the past.
/// A coarsened path sums consecutive fine increments, so paths at step `h`
/// and `2h` built from the same key are coupled.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianPath {
    stream: CounterStream,
    fine_h: f64,
    factor: i64,
    offset: i64,
}

impl BrownianPath {
    pub fn new(seed: u64, stream: u64, h: f64) -> Self {
        BrownianPath {
            stream: CounterStream::new(seed, stream),
            fine_h: h,
            factor: 1,
            offset: 0,
        }
    }

    pub fn h(&self) -> f64 {
        self.fine_h * self.factor as f64
    }

    pub fn seed(&self) -> u64 {
        self.stream.seed()
    }

    pub fn stream_id(&self) -> u64 {
        self.stream.stream()
    }

    /// The same Brownian motion sampled on a grid `m` times coarser.
    pub fn coarsened(&self, m: usize) -> Self {
        assert!(m >= 1);
        BrownianPath {
            factor: self.factor * m as i64,
            ..self.clone()
        }
    }

    /// θ^{n h}: the path seen from time `n h`.
    #[must_use]
    pub fn shift_steps(&self, n: i64) -> Self {
        BrownianPath {
            offset: self.offset + n * self.factor,
            ..self.clone()
        }
    }

    pub fn increment(&self, i: i64) -> f64 {
        let scale = self.fine_h.sqrt();
        let first = self.offset + (i - 1) * self.factor + 1;
        (first..first + self.factor)
            .map(|j| scale * self.stream.standard_normal(j))
            .sum()
    }
}

impl RandomSystem for SdeModel {
    type Noise = BrownianPath;
    /// Fixed-point noise increments `σ ΔW` for every sub-step.
    type Segment = Vec<i128>;

    fn realization(&self, seed: u64, stream: u64) -> BrownianPath {
        self.path(seed, stream)
    }

    fn shift(&self, noise: &BrownianPath, t: i64) -> BrownianPath {
        noise.shift_steps(t * self.steps_per_unit as i64)
    }

    fn segment(&self, noise: &BrownianPath, steps: usize) -> Vec<i128> {
        (1..=(steps * self.steps_per_unit) as i64)
            .map(|i| self.noise_units(noise, i))
            .collect()
    }

    fn step(&self, segment: &Vec<i128>, k: usize, x: CirclePoint) -> CirclePoint {
        let n = self.steps_per_unit;
        segment[k * n..(k + 1) * n].iter().fold(x, |x, &noise| {
            let drift = self.drift_units(x.to_bits(), self.h);
            x.offset_bits((drift + noise) as u64)
        })
    }
}

/// The deterministic driving path that contracts a given arc, with the
/// integrated endpoint motion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    /// Lift of the point the left endpoint is pushed to.
    pub anchor: f64,
    /// `b(anchor) − b(anchor + l(J))`.
    pub drift_gap: f64,
    /// End of the linear ramp.
    pub ramp_end: f64,
    /// First time the image arc is shorter than `J`.
    pub contraction_time: f64,
    /// Image length at `contraction_time`.
    pub achieved_length: f64,
    /// Smallest image length on `[0, 1]`.
    pub min_length: f64,
    /// `(t, length)` at every integration step.
    pub curve: Vec<(f64, f64)>,
}

const WITNESS_GRID: usize = 4096;
const RAMP_STEPS: usize = 64;

/// Builds the path `ω(t) = η t` up to the time `τ` at which the left endpoint
/// reaches the anchor, then holds it constant until time 1, and integrates
/// both endpoints of `J` along it.
pub fn witness_path(model: &SdeModel, arc: Arc, eta: f64) -> Result<Witness, SdeError> {
    let divisor = least_period_divisor(&model.drift, 1e-9);
    if divisor != 1 {
        return Err(SdeError::PreconditionFailed { divisor });
    }
    let l = arc.length();
    if !(l > 0.0 && l < 1.0) {
        return Err(SdeError::InvalidArc);
    }
    let c1 = arc.start.value();
    let b = |x: f64| model.drift.eval(x);
    let (anchor, drift_gap) = (1..=WITNESS_GRID)
        .map(|j| {
            let a = c1 + j as f64 / WITNESS_GRID as f64;
            (a, b(a) - b(a + l))
        })
        .fold((c1, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
    if drift_gap <= 0.0 {
        return Err(SdeError::PreconditionFailed { divisor });
    }
    let ramp_end = (anchor - c1) / (model.sigma * eta);
    if !(ramp_end < 1.0) {
        return Err(SdeError::NoContraction { eta });
    }

    let mut lo = Lift::new(c1);
    let mut hi = lo.shift(l);
    let mut t = 0.0;
    let mut curve = vec![(0.0, hi.gap(lo))];
    let advance = |dt: f64, noise: i128, lo: &mut Lift, hi: &mut Lift| {
        *lo = lo.shift_bits(model.drift_units(lo.base().to_bits(), dt) + noise);
        *hi = hi.shift_bits(model.drift_units(hi.base().to_bits(), dt) + noise);
    };

    let ramp_steps = RAMP_STEPS.max((ramp_end / model.h).ceil() as usize);
    let ramp_dt = ramp_end / ramp_steps as f64;
    let ramp_noise = to_units((anchor - c1) / ramp_steps as f64);
    for _ in 0..ramp_steps {
        advance(ramp_dt, ramp_noise, &mut lo, &mut hi);
        t += ramp_dt;
        curve.push((t, hi.gap(lo)));
    }
    let flat_dt = model.h.min(1.0 / 1024.0);
    let flat_steps = ((1.0 - ramp_end) / flat_dt).ceil() as usize;
    for _ in 0..flat_steps {
        let dt = flat_dt.min(1.0 - t);
        if dt <= 0.0 {
            break;
        }
        advance(dt, 0, &mut lo, &mut hi);
        t += dt;
        curve.push((t, hi.gap(lo)));
    }

    let (contraction_time, achieved_length) = curve
        .iter()
        .copied()
        .find(|&(_, len)| len < l)
        .ok_or(SdeError::NoContraction { eta })?;
    let min_length = curve.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
    Ok(Witness {
        anchor,
        drift_gap,
        ramp_end,
        contraction_time,
        achieved_length,
        min_length,
        curve,
    })
}
