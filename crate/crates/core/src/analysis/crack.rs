use serde::Serialize;

use super::{per_stream, EmpiricalMeasure};
use crate::circle::{d, Arc, CirclePoint, TURN};
use crate::rds::{RandomSystem, TrackedArc};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CrackStatus {
    Present,
    /// No arc from the base point contracted, or none expanded.
    Absent,
    /// Both behaviours occur but the band between them exceeds the budget.
    Inconclusive,
}

/// The point where arcs from a base point stop contracting and start
/// covering the circle.
///
/// With `J_v` the arc of length `v` from `base`, `lower` is the largest `v`
/// found with `l(φ(T,ω)J_v) < tol` and `upper` the smallest with
/// `l(φ(T,ω)J_v) > 1 − tol`. The estimate is the midpoint and
/// `bracket_width` is half the band plus the bisection resolution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrackEstimate {
    pub status: CrackStatus,
    pub base: CirclePoint,
    pub location: Option<CirclePoint>,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub bracket_width: f64,
    pub horizon: usize,
}

impl CrackEstimate {
    pub fn is_present(&self) -> bool {
        self.status == CrackStatus::Present
    }
}

const PROBES: u64 = 32;
/// Bisection stops at this many fixed-point units (about 3.6e-15 turns).
const RESOLUTION: u64 = 1 << 16;
/// Widest transition band accepted as a located crack point.
pub const BRACKET_BUDGET: f64 = 1e-6;

pub fn crack_point<S: RandomSystem>(
    system: &S,
    noise: &S::Noise,
    base: CirclePoint,
    horizon: usize,
    tol: f64,
) -> CrackEstimate {
    let segment = system.segment(noise, horizon);
    crack_on_segment(system, &segment, base, horizon, tol)
}

fn crack_on_segment<S: RandomSystem>(
    system: &S,
    segment: &S::Segment,
    base: CirclePoint,
    horizon: usize,
    tol: f64,
) -> CrackEstimate {
    let mut base_path = Vec::with_capacity(horizon + 1);
    base_path.push(base);
    for k in 0..horizon {
        base_path.push(system.step(segment, k, base_path[k]));
    }
    let image_length = |v: u64| {
        let mut arc = TrackedArc::new(Arc {
            start: base,
            end: base.offset_bits(v),
        });
        for k in 0..horizon {
            arc.advance_to(base_path[k + 1], system.step(segment, k, arc.end()));
            // full and collapsed arcs stay so under every later map
            if arc.is_full() || arc.start() == arc.end() {
                break;
            }
        }
        arc.length()
    };
    let small = |v: u64| image_length(v) < tol;
    let large = |v: u64| image_length(v) > 1.0 - tol;
    let floor = ((2.0 * tol * TURN) as u64).max(RESOLUTION);
    let absent = |status| CrackEstimate {
        status,
        base,
        location: None,
        lower: None,
        upper: None,
        bracket_width: 0.0,
        horizon,
    };

    let grid: Vec<u64> = (1..PROBES).map(|i| i << 59).collect();
    let is_small: Vec<bool> = grid.iter().map(|&v| small(v)).collect();
    let is_large: Vec<bool> = grid.iter().map(|&v| large(v)).collect();

    // bracket [a, b] with small(a) and !small(b)
    let small_bracket = match is_small.iter().rposition(|&s| s) {
        Some(i) if i + 1 < grid.len() => Some((grid[i], grid[i + 1])),
        Some(_) => Some((grid[grid.len() - 1], u64::MAX - floor)),
        None => {
            let mut v = grid[0];
            loop {
                let half = v / 2;
                if half < floor {
                    break None;
                }
                if small(half) {
                    break Some((half, v));
                }
                v = half;
            }
        }
    };
    // bracket [a, b] with !large(a) and large(b)
    let large_bracket = match is_large.iter().position(|&l| l) {
        Some(0) => Some((floor, grid[0])),
        Some(i) => Some((grid[i - 1], grid[i])),
        None => {
            let mut v = grid[grid.len() - 1];
            loop {
                let next = v + (u64::MAX - v) / 2;
                if u64::MAX - next < floor {
                    break None;
                }
                if large(next) {
                    break Some((v, next));
                }
                v = next;
            }
        }
    };
    let (Some((mut s_lo, mut s_hi)), Some((mut l_lo, mut l_hi))) = (small_bracket, large_bracket) else {
        return absent(CrackStatus::Absent);
    };
    if small(s_hi) || large(l_lo) {
        // a bracket end point fell outside the search floor; treat as unresolved
        return absent(CrackStatus::Inconclusive);
    }
    while s_hi - s_lo > RESOLUTION {
        let mid = s_lo + (s_hi - s_lo) / 2;
        if small(mid) {
            s_lo = mid;
        } else {
            s_hi = mid;
        }
    }
    while l_hi - l_lo > RESOLUTION {
        let mid = l_lo + (l_hi - l_lo) / 2;
        if large(mid) {
            l_hi = mid;
        } else {
            l_lo = mid;
        }
    }
    let lower = s_lo;
    let upper = l_hi.max(lower);
    let band = (upper - lower) as f64 / TURN;
    let c = lower + (upper - lower) / 2;
    let width = band / 2.0 + RESOLUTION as f64 / TURN;
    CrackEstimate {
        status: if band > BRACKET_BUDGET {
            CrackStatus::Inconclusive
        } else {
            CrackStatus::Present
        },
        base,
        location: Some(base.offset_bits(c)),
        lower: Some(lower as f64 / TURN),
        upper: Some(upper as f64 / TURN),
        bracket_width: width,
        horizon,
    }
}

/// Crack point of `θ^t ω` against the image of the crack point of `ω`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrackEquivariance {
    pub stream: u64,
    pub shift: usize,
    /// `d(r(θ^t ω), φ(t,ω) r(ω))`, when both crack points were found.
    pub residual: Option<f64>,
    /// Sum of the two bracket widths.
    pub bracket_width: f64,
}

impl CrackEquivariance {
    pub fn holds(&self, slack: f64) -> bool {
        self.residual.is_some_and(|r| r < self.bracket_width + slack)
    }
}

fn crack_with_fallback<S: RandomSystem>(system: &S, segment: &S::Segment, horizon: usize, tol: f64) -> (CrackEstimate, CrackEstimate) {
    let a = crack_on_segment(system, segment, CirclePoint::ZERO, horizon, tol);
    let b = crack_on_segment(system, segment, CirclePoint::new(0.5), horizon, tol);
    (a, b)
}

/// Checks `r(θ^t ω) = φ(t,ω) r(ω)` on realizations `0..N`.
pub fn crack_equivariance<S: RandomSystem>(
    system: &S,
    seed: u64,
    realizations: usize,
    shift: usize,
    horizon: usize,
    tol: f64,
) -> Vec<CrackEquivariance> {
    per_stream(realizations, |stream| {
        let noise = system.realization(seed, stream);
        let segment = system.segment(&noise, horizon + shift);
        let locate = |segment: &S::Segment| {
            let (a, b) = crack_with_fallback(system, segment, horizon, tol);
            if a.is_present() {
                Some(a)
            } else if b.is_present() {
                Some(b)
            } else {
                None
            }
        };
        let here = locate(&segment);
        let later = locate(&system.segment(&system.shift(&noise, shift as i64), horizon));
        match (here, later) {
            (Some(here), Some(later)) => {
                let moved = (0..shift).fold(here.location.unwrap(), |x, k| system.step(&segment, k, x));
                CrackEquivariance {
                    stream,
                    shift,
                    residual: Some(d(moved, later.location.unwrap())),
                    bracket_width: here.bracket_width + later.bracket_width,
                }
            }
            _ => CrackEquivariance {
                stream,
                shift,
                residual: None,
                bracket_width: 0.0,
            },
        }
    })
}

/// Distribution of crack points over realizations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrackLaw {
    pub seed: u64,
    pub realizations: usize,
    pub horizon: usize,
    pub bins: usize,
    pub present: usize,
    pub absent: usize,
    pub inconclusive: usize,
    /// Realizations where the estimates from the two base points disagree
    /// by more than their combined bracket widths.
    pub base_disagreements: usize,
    /// Crack location per realization, `None` when not present.
    pub locations: Vec<Option<CirclePoint>>,
    pub histogram: EmpiricalMeasure,
    pub max_bin_mass: f64,
    /// Three times the uniform bin mass.
    pub atom_threshold: f64,
    pub atomless: bool,
}

/// Estimates crack points from bases 0 and 1/2 for realizations `0..N`,
/// using base 0 when it succeeds and base 1/2 otherwise.
pub fn crack_law<S: RandomSystem>(
    system: &S,
    seed: u64,
    realizations: usize,
    horizon: usize,
    tol: f64,
    bins: usize,
) -> CrackLaw {
    let runs = per_stream(realizations, |stream| {
        let noise = system.realization(seed, stream);
        let segment = system.segment(&noise, horizon);
        let (a, b) = crack_with_fallback(system, &segment, horizon, tol);
        let disagree = match (a.is_present(), b.is_present()) {
            (true, true) => {
                d(a.location.unwrap(), b.location.unwrap()) > a.bracket_width + b.bracket_width + 1e-12
            }
            _ => false,
        };
        let chosen = if a.is_present() { a } else { b };
        (chosen, disagree)
    });
    let locations: Vec<Option<CirclePoint>> = runs
        .iter()
        .map(|(e, _)| if e.is_present() { e.location } else { None })
        .collect();
    let present = locations.iter().flatten().count();
    let inconclusive = runs.iter().filter(|(e, _)| e.status == CrackStatus::Inconclusive).count();
    let counts = EmpiricalMeasure::bin_counts(locations.iter().flatten().copied(), bins);
    let histogram = if present > 0 {
        EmpiricalMeasure::from_counts(&counts)
    } else {
        EmpiricalMeasure::uniform(bins)
    };
    let max_bin_mass = if present > 0 { histogram.max_bin_mass(bins) } else { 0.0 };
    let atom_threshold = 3.0 / bins as f64;
    CrackLaw {
        seed,
        realizations,
        horizon,
        bins,
        present,
        absent: realizations - present - inconclusive,
        inconclusive,
        base_disagreements: runs.iter().filter(|(_, x)| *x).count(),
        locations,
        histogram,
        max_bin_mass,
        atom_threshold,
        atomless: present > 0 && max_bin_mass <= atom_threshold,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homeo::HomeoSpec;
    use crate::rds::{IfsModel, NoiseRealization};

    fn p(x: f64) -> CirclePoint {
        CirclePoint::new(x)
    }

    #[test]
    fn deterministic_sine_cracks_at_repeller() {
        let m = IfsModel::singleton(HomeoSpec::sine(0.1).unwrap());
        let w = NoiseRealization::new(0, 0);
        for base in [0.25, 0.5, 0.9] {
            let c = crack_point(&m, &w, p(base), 400, 1e-4);
            assert!(c.is_present(), "{c:?}");
            assert!(d(c.location.unwrap(), p(0.0)) <= c.bracket_width + 1e-12, "{c:?}");
        }
    }

    #[test]
    fn rotations_have_no_crack() {
        let m = IfsModel::uniform(vec![HomeoSpec::rotation(0.3).unwrap(), HomeoSpec::rotation(0.61).unwrap()]).unwrap();
        let c = crack_point(&m, &NoiseRealization::new(0, 3), p(0.0), 200, 1e-4);
        assert_eq!(c.status, CrackStatus::Absent);
        assert!(c.location.is_none());
    }

    #[test]
    fn deterministic_crack_is_equivariant() {
        let m = IfsModel::singleton(HomeoSpec::sine(0.1).unwrap());
        for e in crack_equivariance(&m, 0, 2, 3, 300, 1e-4) {
            assert!(e.holds(1e-12), "{e:?}");
        }
    }

    #[test]
    fn deterministic_law_is_an_atom() {
        let m = IfsModel::singleton(HomeoSpec::sine(0.1).unwrap());
        let law = crack_law(&m, 0, 8, 400, 1e-4, 64);
        assert_eq!(law.present, 8);
        assert_eq!(law.max_bin_mass, 1.0);
        assert!(!law.atomless);
    }
}
