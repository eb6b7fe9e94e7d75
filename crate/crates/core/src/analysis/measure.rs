//! Probability measures on the circle estimated from samples.

use serde::Serialize;

use crate::circle::{d_plus_bits, Arc, CirclePoint, Region, TURN};

/// A probability measure on the circle, either as weighted atoms or as a
/// histogram with equal bins over `[0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EmpiricalMeasure {
    /// Atoms sorted by position; weights sum to one.
    Samples { points: Vec<CirclePoint>, weights: Vec<f64> },
    /// `masses[j]` is the mass of `[j/B, (j+1)/B)`, spread uniformly.
    Histogram { masses: Vec<f64> },
}

fn bin_of(p: CirclePoint, bins: usize) -> usize {
    ((p.to_bits() as u128 * bins as u128) >> 64) as usize
}

fn normalized(mut weights: Vec<f64>) -> Vec<f64> {
    let total: f64 = weights.iter().sum();
    assert!(total > 0.0, "measure with zero total mass");
    for w in &mut weights {
        *w /= total;
    }
    weights
}

impl EmpiricalMeasure {
    /// Equal-weight atoms.
    pub fn from_points(points: impl IntoIterator<Item = CirclePoint>) -> Self {
        let points: Vec<CirclePoint> = points.into_iter().collect();
        let n = points.len();
        Self::from_weighted(points, vec![1.0; n])
    }

    /// Weighted atoms; weights are normalized.
    pub fn from_weighted(points: Vec<CirclePoint>, weights: Vec<f64>) -> Self {
        assert_eq!(points.len(), weights.len());
        let mut pairs: Vec<(CirclePoint, f64)> = points.into_iter().zip(weights).collect();
        pairs.sort_by_key(|(p, _)| p.to_bits());
        let (points, weights) = pairs.into_iter().unzip();
        EmpiricalMeasure::Samples {
            points,
            weights: normalized(weights),
        }
    }

    pub fn dirac(p: CirclePoint) -> Self {
        EmpiricalMeasure::Samples {
            points: vec![p],
            weights: vec![1.0],
        }
    }

    /// Histogram from non-negative bin masses; masses are normalized.
    pub fn histogram(masses: Vec<f64>) -> Self {
        EmpiricalMeasure::Histogram {
            masses: normalized(masses),
        }
    }

    /// Histogram from integer bin counts.
    pub fn from_counts(counts: &[u64]) -> Self {
        let total: u64 = counts.iter().sum();
        assert!(total > 0, "histogram with no samples");
        EmpiricalMeasure::Histogram {
            masses: counts.iter().map(|&c| c as f64 / total as f64).collect(),
        }
    }

    /// Lebesgue measure as a `bins`-bin histogram.
    pub fn uniform(bins: usize) -> Self {
        EmpiricalMeasure::Histogram {
            masses: vec![1.0 / bins as f64; bins],
        }
    }

    /// Bins counts of points into `bins` equal bins.
    pub fn bin_counts(points: impl IntoIterator<Item = CirclePoint>, bins: usize) -> Vec<u64> {
        let mut counts = vec![0; bins];
        for p in points {
            counts[bin_of(p, bins)] += 1;
        }
        counts
    }

    pub fn bins(&self) -> Option<usize> {
        match self {
            EmpiricalMeasure::Histogram { masses } => Some(masses.len()),
            EmpiricalMeasure::Samples { .. } => None,
        }
    }

    pub fn total_mass(&self) -> f64 {
        match self {
            EmpiricalMeasure::Samples { weights, .. } => weights.iter().sum(),
            EmpiricalMeasure::Histogram { masses } => masses.iter().sum(),
        }
    }

    /// Re-bins into `bins` equal bins. Atoms go to the bin containing them;
    /// histogram mass is split by overlap.
    pub fn to_histogram(&self, bins: usize) -> Vec<f64> {
        match self {
            EmpiricalMeasure::Samples { points, weights } => {
                let mut out = vec![0.0; bins];
                for (p, w) in points.iter().zip(weights) {
                    out[bin_of(*p, bins)] += w;
                }
                out
            }
            EmpiricalMeasure::Histogram { masses } if masses.len() == bins => masses.clone(),
            EmpiricalMeasure::Histogram { .. } => (0..bins)
                .map(|j| self.window_mass(j as f64 / bins as f64, 1.0 / bins as f64))
                .collect(),
        }
    }

    /// Mass of the closed arc.
    pub fn arc_mass(&self, arc: &Arc) -> f64 {
        match self {
            EmpiricalMeasure::Samples { points, weights } => {
                let len = arc.length_bits();
                points
                    .iter()
                    .zip(weights)
                    .filter(|(p, _)| d_plus_bits(arc.start, **p) <= len)
                    .map(|(_, w)| w)
                    .sum()
            }
            EmpiricalMeasure::Histogram { .. } => self.window_mass(arc.start.value(), arc.length()),
        }
    }

    pub fn region_mass(&self, region: &Region) -> f64 {
        match region {
            Region::FullCircle => self.total_mass(),
            Region::Arc(arc) => self.arc_mass(arc),
        }
    }

    /// Histogram mass of `[start, start + len]` with proportional overlap.
    fn window_mass(&self, start: f64, len: f64) -> f64 {
        let EmpiricalMeasure::Histogram { masses } = self else {
            unreachable!("window_mass on samples")
        };
        let b = masses.len();
        let cdf = |x: f64| -> f64 {
            // mass of [0, x) for x in [0, 2]
            let turns = x.floor();
            let y = (x - turns) * b as f64;
            let j = (y.floor() as usize).min(b - 1);
            let below: f64 = masses[..j].iter().sum();
            turns + below + masses[j] * (y - j as f64)
        };
        (cdf(start + len) - cdf(start)).clamp(0.0, 1.0)
    }

    /// Largest single-bin mass after re-binning into `bins` bins.
    pub fn max_bin_mass(&self, bins: usize) -> f64 {
        self.to_histogram(bins).into_iter().fold(0.0, f64::max)
    }

    /// Total variation distance after binning both measures into `bins` bins.
    pub fn tv_distance(&self, other: &EmpiricalMeasure, bins: usize) -> f64 {
        let a = self.to_histogram(bins);
        let b = other.to_histogram(bins);
        0.5 * a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum::<f64>()
    }

    /// Kolmogorov–Smirnov distance to Lebesgue measure, with `[0, 1)` cut at 0.
    pub fn ks_to_uniform(&self) -> f64 {
        match self {
            EmpiricalMeasure::Samples { points, weights } => {
                let mut cum = 0.0;
                let mut worst: f64 = 0.0;
                for (p, w) in points.iter().zip(weights) {
                    let x = p.value();
                    worst = worst.max((cum - x).abs());
                    cum += w;
                    worst = worst.max((cum - x).abs());
                }
                worst
            }
            EmpiricalMeasure::Histogram { masses } => {
                let b = masses.len() as f64;
                let mut cum = 0.0;
                let mut worst: f64 = 0.0;
                for (j, m) in masses.iter().enumerate() {
                    cum += m;
                    worst = worst.max((cum - (j + 1) as f64 / b).abs());
                }
                worst
            }
        }
    }

    /// The push-forward under rotation by `delta`.
    pub fn rotated(&self, delta: f64) -> EmpiricalMeasure {
        match self {
            EmpiricalMeasure::Samples { points, weights } => {
                EmpiricalMeasure::from_weighted(points.iter().map(|p| p.offset(delta)).collect(), weights.clone())
            }
            EmpiricalMeasure::Histogram { masses } => {
                let b = masses.len();
                let steps = (delta * b as f64).round();
                assert!(
                    (delta * b as f64 - steps).abs() < 1e-9,
                    "histograms rotate only by whole bins"
                );
                let k = steps.rem_euclid(b as f64) as usize;
                let mut out = vec![0.0; b];
                for (j, m) in masses.iter().enumerate() {
                    out[(j + k) % b] = *m;
                }
                EmpiricalMeasure::Histogram { masses: out }
            }
        }
    }

    /// Largest mass carried by a closed arc of length at most `len` turns
    /// (`len` in fixed-point units).
    fn max_window_mass(&self, len: u64) -> f64 {
        match self {
            EmpiricalMeasure::Samples { points, weights } => {
                let n = points.len();
                let mut best: f64 = 0.0;
                let mut j = 0;
                let mut mass = 0.0;
                // window [i, i + len] over the doubled sequence
                for i in 0..n {
                    if j < i {
                        j = i;
                        mass = 0.0;
                    }
                    while j < i + n && d_plus_bits(points[i], points[j % n]) <= len {
                        mass += weights[j % n];
                        j += 1;
                    }
                    best = best.max(mass);
                    mass -= weights[i];
                }
                best
            }
            EmpiricalMeasure::Histogram { masses } => {
                let b = masses.len();
                let l = len as f64 / TURN;
                (0..b)
                    .flat_map(|j| {
                        let edge = j as f64 / b as f64;
                        [edge, edge - l + 1.0]
                    })
                    .map(|s| self.window_mass(s - s.floor(), l))
                    .fold(0.0, f64::max)
            }
        }
    }

    /// The spread: the least `v` such that a closed arc of length at most `v`
    /// carries mass at least `1 − v`. Zero exactly for a Dirac mass, at most
    /// one half for every measure.
    pub fn spread(&self) -> f64 {
        const SLACK: f64 = 1e-12;
        let feasible = |g: u64| self.max_window_mass(g) >= 1.0 - g as f64 / TURN - SLACK;
        if feasible(0) {
            return 0.0;
        }
        let (mut lo, mut hi) = (0u64, 1u64 << 63);
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if feasible(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi as f64 / TURN
    }

    /// Average of equally weighted measures of the same kind.
    pub fn mixture(parts: &[EmpiricalMeasure]) -> EmpiricalMeasure {
        assert!(!parts.is_empty());
        match &parts[0] {
            EmpiricalMeasure::Histogram { masses } => {
                let b = masses.len();
                let mut out = vec![0.0; b];
                for p in parts {
                    for (o, m) in out.iter_mut().zip(p.to_histogram(b)) {
                        *o += m;
                    }
                }
                EmpiricalMeasure::histogram(out)
            }
            EmpiricalMeasure::Samples { .. } => {
                let mut points = Vec::new();
                let mut weights = Vec::new();
                for p in parts {
                    let EmpiricalMeasure::Samples { points: ps, weights: ws } = p else {
                        panic!("cannot mix samples with histograms");
                    };
                    points.extend_from_slice(ps);
                    weights.extend_from_slice(ws);
                }
                EmpiricalMeasure::from_weighted(points, weights)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(x: f64) -> CirclePoint {
        CirclePoint::new(x)
    }

    #[test]
    fn arc_mass_of_samples_uses_closed_arcs() {
        let m = EmpiricalMeasure::from_points([p(0.1), p(0.2), p(0.9)]);
        assert!((m.arc_mass(&Arc::new(0.1, 0.2)) - 2.0 / 3.0).abs() < 1e-15);
        assert!((m.arc_mass(&Arc::new(0.85, 0.15)) - 2.0 / 3.0).abs() < 1e-15);
        assert!((m.arc_mass(&Arc::new(0.2, 0.2)) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(m.region_mass(&Region::FullCircle), 1.0);
    }

    #[test]
    fn histogram_arc_mass_is_proportional() {
        let h = EmpiricalMeasure::histogram(vec![1.0, 3.0]);
        assert!((h.arc_mass(&Arc::new(0.25, 0.75)) - 0.5).abs() < 1e-15);
        assert!((h.arc_mass(&Arc::new(0.75, 0.25)) - 0.5).abs() < 1e-15);
        assert!((h.arc_mass(&Arc::new(0.5, 0.0)) - 0.75).abs() < 1e-12);
        assert!((EmpiricalMeasure::uniform(64).total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn complementary_arcs_sum_to_one() {
        let h = EmpiricalMeasure::histogram((1..=16).map(|j| j as f64).collect());
        for (a, b) in [(0.1, 0.4), (0.7, 0.2), (0.33, 0.34)] {
            let arc = Arc::new(a, b);
            let total = h.arc_mass(&arc) + h.arc_mass(&arc.complement());
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn spread_examples() {
        assert_eq!(EmpiricalMeasure::dirac(p(0.3)).spread(), 0.0);
        assert_eq!(EmpiricalMeasure::from_points(vec![p(0.7); 5]).spread(), 0.0);
        let two = EmpiricalMeasure::from_points([p(0.0), p(0.5)]);
        assert!((two.spread() - 0.5).abs() < 1e-12);
        let u = EmpiricalMeasure::uniform(64);
        assert!((u.spread() - 0.5).abs() <= 1.0 / 64.0);
        // 0.9 of the mass on one atom: an arc of length 0 has mass 0.9 ≥ 1 − 0.1
        let heavy = EmpiricalMeasure::from_weighted(vec![p(0.2), p(0.6)], vec![0.9, 0.1]);
        assert!((heavy.spread() - 0.1).abs() < 1e-11);
    }

    #[test]
    fn ks_distances() {
        assert!(EmpiricalMeasure::uniform(32).ks_to_uniform() < 1e-12);
        let d = EmpiricalMeasure::dirac(p(0.5));
        assert!((d.ks_to_uniform() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn tv_and_rebinning() {
        let a = EmpiricalMeasure::from_points([p(0.1), p(0.6)]);
        let b = EmpiricalMeasure::histogram(vec![1.0, 1.0]);
        assert!(a.tv_distance(&b, 2) < 1e-15);
        assert!((a.tv_distance(&EmpiricalMeasure::dirac(p(0.1)), 2) - 0.5).abs() < 1e-15);
        let fine = EmpiricalMeasure::histogram(vec![1.0, 2.0, 3.0, 2.0]);
        let coarse = fine.to_histogram(2);
        assert!((coarse[0] - 3.0 / 8.0).abs() < 1e-12 && (coarse[1] - 5.0 / 8.0).abs() < 1e-12);
        assert_eq!(EmpiricalMeasure::bin_counts([p(0.0), p(0.5), p(0.99)], 2), vec![1, 2]);
    }

    #[test]
    fn mixture_averages() {
        let m = EmpiricalMeasure::mixture(&[
            EmpiricalMeasure::histogram(vec![1.0, 0.0]),
            EmpiricalMeasure::histogram(vec![0.0, 1.0]),
        ]);
        assert_eq!(m, EmpiricalMeasure::uniform(2));
    }

    /// Spread straight from its definition: the least grid value `v` such
    /// that some closed arc of length below `v` carries mass above `1 − v`,
    /// with arcs starting on a fine grid or at a sample.
    fn brute_force_spread(m: &EmpiricalMeasure, grid: usize) -> f64 {
        let starts: Vec<f64> = match m {
            EmpiricalMeasure::Samples { points, .. } => points.iter().map(|q| q.value()).collect(),
            EmpiricalMeasure::Histogram { .. } => (0..grid).map(|i| i as f64 / grid as f64).collect(),
        };
        (1..=grid / 2)
            .map(|i| i as f64 / grid as f64)
            .find(|&v| {
                (0..grid).any(|j| {
                    let len = v * j as f64 / grid as f64;
                    starts
                        .iter()
                        .any(|&s| m.arc_mass(&Arc::from_start(p(s), len)) > 1.0 - v)
                })
            })
            .unwrap_or(0.5)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(20))]

        #[test]
        fn spread_matches_brute_force(xs in prop::collection::vec(0.0f64..1.0, 1..12)) {
            let m = EmpiricalMeasure::from_points(xs.iter().map(|&x| p(x)));
            let grid = 200;
            let fast = m.spread();
            let slow = brute_force_spread(&m, grid);
            prop_assert!((fast - slow).abs() <= 2.0 / grid as f64, "fast {} slow {}", fast, slow);
        }

        #[test]
        fn spread_is_rotation_invariant(xs in prop::collection::vec(0.0f64..1.0, 1..30), delta in 0.0f64..1.0) {
            let m = EmpiricalMeasure::from_points(xs.iter().map(|&x| p(x)));
            let s = m.spread();
            prop_assert!((0.0..=0.5).contains(&s));
            prop_assert!((m.rotated(delta).spread() - s).abs() < 1e-12);
        }

        #[test]
        fn histogram_spread_matches_brute_force(ws in prop::collection::vec(0.0f64..1.0, 8)) {
            prop_assume!(ws.iter().sum::<f64>() > 0.1);
            let m = EmpiricalMeasure::histogram(ws);
            let grid = 160;
            prop_assert!((m.spread() - brute_force_spread(&m, grid)).abs() <= 2.0 / grid as f64);
        }
    }
}
