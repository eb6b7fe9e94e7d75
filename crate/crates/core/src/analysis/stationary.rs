use serde::Serialize;

use super::{for_each_step, per_stream, EmpiricalMeasure};
use crate::circle::{Arc, CirclePoint};
use crate::rds::{RandomSystem, RdsError, TrackedArc};

/// How an occupation-measure estimate samples the one-point chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OccupationParams {
    pub start: CirclePoint,
    pub burn_in: usize,
    /// Recorded steps per realization after burn-in.
    pub samples: usize,
    pub realizations: usize,
    pub bins: usize,
}

/// Occupation histogram of forward one-point trajectories after burn-in.
pub fn stationary_measure<S: RandomSystem>(system: &S, seed: u64, params: &OccupationParams) -> EmpiricalMeasure {
    occupation(system, seed, params, |segment, k, x| Ok(system.step(segment, k, x)))
        .expect("forward steps cannot fail")
}

/// Occupation histogram of trajectories of the inverse maps
/// `f_k⁻¹ ∘ … ∘ f_1⁻¹`; requires invertible steps.
pub fn reverse_stationary_measure<S: RandomSystem>(
    system: &S,
    seed: u64,
    params: &OccupationParams,
) -> Result<EmpiricalMeasure, RdsError> {
    occupation(system, seed, params, |segment, k, x| system.step_inverse(segment, k, x))
}

fn occupation<S: RandomSystem>(
    system: &S,
    seed: u64,
    params: &OccupationParams,
    step: impl Fn(&S::Segment, usize, CirclePoint) -> Result<CirclePoint, RdsError> + Sync + Send,
) -> Result<EmpiricalMeasure, RdsError> {
    let bins = params.bins;
    let runs = per_stream(params.realizations, |stream| -> Result<Vec<u64>, RdsError> {
        let noise = system.realization(seed, stream);
        let mut counts = vec![0u64; bins];
        let mut x = params.start;
        let mut elapsed = 0;
        let mut failure = None;
        for_each_step(system, &noise, params.burn_in + params.samples, |segment, k| {
            if failure.is_some() {
                return;
            }
            if elapsed >= params.burn_in {
                counts[((x.to_bits() as u128 * bins as u128) >> 64) as usize] += 1;
            }
            match step(segment, k, x) {
                Ok(y) => x = y,
                Err(e) => failure = Some(e),
            }
            elapsed += 1;
        });
        failure.map_or(Ok(counts), Err)
    });
    let mut total = vec![0u64; bins];
    for run in runs {
        for (t, c) in total.iter_mut().zip(run?) {
            *t += c;
        }
    }
    Ok(EmpiricalMeasure::from_counts(&total))
}

/// Conditional-expectation check of `h_t(ω) = ρ(φ(t,ω)J)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MartingaleCheck {
    pub s: usize,
    pub t: usize,
    pub prefixes: usize,
    pub continuations: usize,
    /// `|h_s − mean of h_{s+t}|` per prefix.
    pub deviations: Vec<f64>,
    pub max_deviation: f64,
    /// `3/√M`, plus two bin widths for histogram measures.
    pub bound: f64,
}

/// For `K` noise prefixes of length `s` (streams `0..K`), compares `h_s`
/// with the average of `h_{s+t}` over `M` independent continuations (streams
/// `K + kM + m`).
#[allow(clippy::too_many_arguments)]
pub fn martingale_check<S: RandomSystem>(
    system: &S,
    rho: &EmpiricalMeasure,
    arc: Arc,
    seed: u64,
    s: usize,
    t: usize,
    continuations: usize,
    prefixes: usize,
) -> MartingaleCheck {
    let deviations: Vec<f64> = (0..prefixes as u64)
        .map(|k| {
            let noise = system.realization(seed, k);
            let segment = system.segment(&noise, s);
            let mut prefix = TrackedArc::new(arc);
            for j in 0..s {
                prefix.map(|x| system.step(&segment, j, x));
            }
            let h_s = rho.region_mass(&prefix.region());
            let later = per_stream(continuations, |m| {
                let stream = prefixes as u64 + k * continuations as u64 + m;
                let noise = system.realization(seed, stream);
                let segment = system.segment(&noise, t);
                let mut tracked = prefix;
                for j in 0..t {
                    tracked.map(|x| system.step(&segment, j, x));
                }
                rho.region_mass(&tracked.region())
            });
            (later.iter().map(|h| h_s - h).sum::<f64>() / continuations.max(1) as f64).abs()
        })
        .collect();
    let binning = rho.bins().map_or(0.0, |b| 2.0 / b as f64);
    MartingaleCheck {
        s,
        t,
        prefixes,
        continuations,
        max_deviation: deviations.iter().copied().fold(0.0, f64::max),
        deviations,
        bound: 3.0 / (continuations as f64).sqrt() + binning,
    }
}

/// Empirical probability that an arc contracts, next to the prediction
/// `1 − ρ(J)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContractionProbability {
    pub arc: Arc,
    pub realizations: usize,
    pub horizon: usize,
    pub tol: f64,
    pub empirical: f64,
    pub predicted: f64,
    /// Fraction with image length strictly between `tol` and `1 − tol`.
    pub undecided: f64,
    /// Set when more than 1% of realizations are undecided.
    pub horizon_too_short: bool,
}

#[allow(clippy::too_many_arguments)]
pub fn lemma34_check<S: RandomSystem>(
    system: &S,
    rho: &EmpiricalMeasure,
    arc: Arc,
    seed: u64,
    realizations: usize,
    horizon: usize,
    tol: f64,
) -> ContractionProbability {
    let lengths = per_stream(realizations, |stream| {
        let noise = system.realization(seed, stream);
        let segment = system.segment(&noise, horizon);
        let mut tracked = TrackedArc::new(arc);
        for k in 0..horizon {
            tracked.map(|x| system.step(&segment, k, x));
        }
        tracked.length()
    });
    let n = realizations.max(1) as f64;
    let contracted = lengths.iter().filter(|&&l| l < tol).count() as f64;
    let undecided = lengths.iter().filter(|&&l| l >= tol && l <= 1.0 - tol).count() as f64 / n;
    ContractionProbability {
        arc,
        realizations,
        horizon,
        tol,
        empirical: contracted / n,
        predicted: 1.0 - rho.arc_mass(&arc),
        undecided,
        horizon_too_short: undecided > 0.01,
    }
}

/// Fraction of times `k ∈ [0, T)` with `φ(k,ω)x` in the closed arc.
pub fn birkhoff_average<S: RandomSystem>(
    system: &S,
    noise: &S::Noise,
    x: CirclePoint,
    arc: Arc,
    horizon: usize,
) -> f64 {
    birkhoff_running(system, noise, x, arc, horizon, horizon.max(1))
        .last()
        .map_or(0.0, |&(_, avg)| avg)
}

/// Running Birkhoff averages `(T', average over [0, T'))` at every multiple
/// of `every` up to `horizon`, and at `horizon` itself.
pub fn birkhoff_running<S: RandomSystem>(
    system: &S,
    noise: &S::Noise,
    x: CirclePoint,
    arc: Arc,
    horizon: usize,
    every: usize,
) -> Vec<(usize, f64)> {
    let every = every.max(1);
    let mut out = Vec::with_capacity(horizon / every + 1);
    let mut hits = 0usize;
    let mut y = x;
    let mut elapsed = 0usize;
    for_each_step(system, noise, horizon, |segment, k| {
        if arc.contains(y) {
            hits += 1;
        }
        y = system.step(segment, k, y);
        elapsed += 1;
        if elapsed.is_multiple_of(every) || elapsed == horizon {
            out.push((elapsed, hits as f64 / elapsed as f64));
        }
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homeo::HomeoSpec;
    use crate::rds::{IfsModel, NoiseRealization};

    fn p(x: f64) -> CirclePoint {
        CirclePoint::new(x)
    }

    fn params(start: f64) -> OccupationParams {
        OccupationParams {
            start: p(start),
            burn_in: 50,
            samples: 2000,
            realizations: 8,
            bins: 64,
        }
    }

    #[test]
    fn fixed_point_start_gives_single_bin() {
        let m = IfsModel::singleton(HomeoSpec::sine(0.1).unwrap());
        let rho = stationary_measure(&m, 0, &params(0.5));
        assert_eq!(rho.max_bin_mass(64), 1.0);
        assert_eq!(rho.to_histogram(64)[32], 1.0);
    }

    #[test]
    fn irrational_rotation_equidistributes() {
        let m = IfsModel::singleton(HomeoSpec::rotation(2f64.sqrt() - 1.0).unwrap());
        assert!(stationary_measure(&m, 0, &params(0.0)).ks_to_uniform() < 0.03);
        assert!(reverse_stationary_measure(&m, 0, &params(0.0)).unwrap().ks_to_uniform() < 0.03);
    }

    #[test]
    fn inverse_sine_concentrates_at_repeller() {
        let m = IfsModel::singleton(HomeoSpec::sine(0.1).unwrap());
        let rho = reverse_stationary_measure(&m, 0, &params(0.3)).unwrap();
        let h = rho.to_histogram(64);
        assert!(h[0] + h[63] > 0.95, "{h:?}");
    }

    #[test]
    fn martingale_with_no_time_step_is_exact() {
        let m = IfsModel::uniform(vec![HomeoSpec::rotation(0.618).unwrap(), HomeoSpec::sine(0.1).unwrap()]).unwrap();
        let rho = EmpiricalMeasure::histogram((1..=32).map(|j| j as f64).collect());
        let c = martingale_check(&m, &rho, Arc::new(0.1, 0.6), 0, 20, 0, 10, 3);
        assert_eq!(c.max_deviation, 0.0);
    }

    #[test]
    fn rotations_keep_lebesgue_mass() {
        let m = IfsModel::uniform(vec![HomeoSpec::rotation(0.3).unwrap(), HomeoSpec::rotation(0.71).unwrap()]).unwrap();
        let rho = EmpiricalMeasure::uniform(64);
        let c = martingale_check(&m, &rho, Arc::new(0.1, 0.6), 0, 5, 5, 50, 3);
        assert!(c.max_deviation < 1e-9, "{c:?}");
    }

    #[test]
    fn birkhoff_at_fixed_point_is_indicator() {
        let m = IfsModel::singleton(HomeoSpec::sine(0.1).unwrap());
        let w = NoiseRealization::new(0, 0);
        assert_eq!(birkhoff_average(&m, &w, p(0.5), Arc::new(0.4, 0.6), 1000), 1.0);
        assert_eq!(birkhoff_average(&m, &w, p(0.5), Arc::new(0.6, 0.4), 1000), 0.0);
        assert_eq!(birkhoff_average(&m, &w, p(0.0), Arc::new(0.9, 0.1), 1000), 1.0);
    }

    #[test]
    fn running_average_ends_at_full_average() {
        let m = IfsModel::uniform(vec![HomeoSpec::rotation(0.618).unwrap(), HomeoSpec::sine(0.1).unwrap()]).unwrap();
        let w = NoiseRealization::new(3, 1);
        let arc = Arc::new(0.0, 0.5);
        let run = birkhoff_running(&m, &w, p(0.2), arc, 5000, 1000);
        assert_eq!(run.iter().map(|r| r.0).collect::<Vec<_>>(), vec![1000, 2000, 3000, 4000, 5000]);
        assert_eq!(run[4].1, birkhoff_average(&m, &w, p(0.2), arc, 5000));
        assert_eq!(run[0].1, birkhoff_average(&m, &w, p(0.2), arc, 1000));
    }

    #[test]
    fn lemma34_on_deterministic_map() {
        let m = IfsModel::singleton(HomeoSpec::sine(0.1).unwrap());
        let rho = EmpiricalMeasure::dirac(p(0.0));
        let around_attractor = lemma34_check(&m, &rho, Arc::new(0.3, 0.7), 0, 4, 200, 1e-4);
        assert_eq!((around_attractor.empirical, around_attractor.predicted), (1.0, 1.0));
        let around_repeller = lemma34_check(&m, &rho, Arc::new(0.7, 0.3), 0, 4, 200, 1e-4);
        assert_eq!((around_repeller.empirical, around_repeller.predicted), (0.0, 0.0));
        assert!(!around_repeller.horizon_too_short);
    }
}
