use serde::Serialize;

use super::crack::crack_point;
use super::{for_each_step, per_stream, EmpiricalMeasure, ANCHOR_TOL, CONTRACT_TOL, CRACK_HORIZON};
use crate::circle::{d, CirclePoint};
use crate::rds::{pullback_point, RandomSystem, RdsError};

/// Settings for [`attractor_repeller`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairParams {
    pub realizations: usize,
    /// Increasing pullback depths; the last one gives the estimate.
    pub depths: Vec<usize>,
    pub anchors: [CirclePoint; 2],
    pub anchor_tol: f64,
    pub crack_horizon: usize,
    pub contract_tol: f64,
    /// Time at which the forward image of an evenly spaced cloud is measured.
    pub cloud_time: usize,
    pub cloud_points: usize,
}

impl Default for PairParams {
    fn default() -> Self {
        PairParams {
            realizations: 100,
            depths: vec![500, 1000, 2000],
            anchors: [CirclePoint::new(0.25), CirclePoint::new(0.75)],
            anchor_tol: ANCHOR_TOL,
            crack_horizon: CRACK_HORIZON,
            contract_tol: CONTRACT_TOL,
            cloud_time: 500,
            cloud_points: 256,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairRecord {
    pub stream: u64,
    /// Pullback from the first anchor at the deepest depth.
    pub attractor: CirclePoint,
    /// `d` between the two anchors' pullbacks at the deepest depth.
    pub residual: f64,
    /// `d` between the first anchor's pullbacks at each depth and the deepest.
    pub depth_residuals: Vec<f64>,
    pub converged: bool,
    pub repeller: Option<CirclePoint>,
    pub repeller_width: Option<f64>,
    pub pair_distance: Option<f64>,
    pub cloud_spread: f64,
}

/// Attractor and repeller random fixed points over many realizations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairEstimate {
    pub seed: u64,
    pub params: PairParams,
    pub records: Vec<PairRecord>,
    pub converged: usize,
    pub not_converged: usize,
    pub converged_fraction: f64,
    /// Converged realizations with no crack point found.
    pub missing_repeller: usize,
    /// Every converged pair satisfies `d(a, r) > 10 × residual`.
    pub separated: bool,
    pub min_pair_distance: Option<f64>,
    pub max_cloud_spread: f64,
}

/// The attractor `a(ω)` by pullback from two anchors, the repeller `r(ω)` as
/// the crack point of ω, and the spread of a forward-evolved cloud.
pub fn attractor_repeller<S: RandomSystem>(system: &S, seed: u64, params: &PairParams) -> Result<PairEstimate, RdsError> {
    let records = per_stream(params.realizations, |stream| -> Result<PairRecord, RdsError> {
        let noise = system.realization(seed, stream);
        let first = pullback_point(system, &noise, params.anchors[0], &params.depths)?;
        let second = pullback_point(system, &noise, params.anchors[1], &params.depths)?;
        let (Some(&a), Some(&a_alt)) = (first.last(), second.last()) else {
            return Err(RdsError::DepthsNotIncreasing);
        };
        let residual = d(a, a_alt);
        let converged = residual < params.anchor_tol;
        let crack = crack_point(system, &noise, CirclePoint::ZERO, params.crack_horizon, params.contract_tol);
        let crack = if crack.is_present() {
            crack
        } else {
            crack_point(system, &noise, CirclePoint::new(0.5), params.crack_horizon, params.contract_tol)
        };
        let repeller = if crack.is_present() { crack.location } else { None };

        let segment = system.segment(&noise, params.cloud_time);
        let n = params.cloud_points;
        let cloud: Vec<CirclePoint> = (0..n)
            .map(|i| {
                let x = CirclePoint::new(i as f64 / n as f64);
                (0..params.cloud_time).fold(x, |x, k| system.step(&segment, k, x))
            })
            .collect();

        Ok(PairRecord {
            stream,
            attractor: a,
            residual,
            depth_residuals: first.iter().map(|&q| d(q, a)).collect(),
            converged,
            repeller,
            repeller_width: repeller.map(|_| crack.bracket_width),
            pair_distance: repeller.map(|r| d(a, r)),
            cloud_spread: EmpiricalMeasure::from_points(cloud).spread(),
        })
    });
    let records = records.into_iter().collect::<Result<Vec<_>, _>>()?;
    let converged: Vec<&PairRecord> = records.iter().filter(|r| r.converged).collect();
    let separated = converged
        .iter()
        .all(|r| r.pair_distance.is_some_and(|dist| dist > 10.0 * r.residual));
    let min_pair_distance = converged
        .iter()
        .filter_map(|r| r.pair_distance)
        .min_by(f64::total_cmp);
    Ok(PairEstimate {
        seed,
        params: params.clone(),
        converged: converged.len(),
        not_converged: records.len() - converged.len(),
        converged_fraction: converged.len() as f64 / records.len().max(1) as f64,
        missing_repeller: converged.iter().filter(|r| r.repeller.is_none()).count(),
        separated,
        min_pair_distance,
        max_cloud_spread: records.iter().map(|r| r.cloud_spread).fold(0.0, f64::max),
        records,
    })
}

/// `d(a(θ^t ω), φ(t,ω) a(ω))` for realizations `0..N`, where `a` is the
/// pullback from the first anchor at the deepest depth.
pub fn attractor_equivariance<S: RandomSystem>(
    system: &S,
    seed: u64,
    params: &PairParams,
    shift: usize,
) -> Result<Vec<f64>, RdsError> {
    per_stream(params.realizations, |stream| {
        let noise = system.realization(seed, stream);
        let a = *pullback_point(system, &noise, params.anchors[0], &params.depths)?
            .last()
            .ok_or(RdsError::DepthsNotIncreasing)?;
        let later = system.shift(&noise, shift as i64);
        let a_later = *pullback_point(system, &later, params.anchors[0], &params.depths)?
            .last()
            .ok_or(RdsError::DepthsNotIncreasing)?;
        let segment = system.segment(&noise, shift);
        let moved = (0..shift).fold(a, |x, k| system.step(&segment, k, x));
        Ok(d(moved, a_later))
    })
    .into_iter()
    .collect()
}

/// `(1/T) Σ log f'_{k+1}(x_k)` along the trajectory of `x`.
pub fn lyapunov_exponent<S: RandomSystem>(
    system: &S,
    noise: &S::Noise,
    x: CirclePoint,
    horizon: usize,
) -> Result<f64, RdsError> {
    let mut sum = 0.0;
    let mut y = x;
    let mut failure = None;
    for_each_step(system, noise, horizon, |segment, k| {
        if failure.is_some() {
            return;
        }
        match system.step_log_derivative(segment, k, y) {
            Ok(l) => sum += l,
            Err(e) => failure = Some(e),
        }
        y = system.step(segment, k, y);
    });
    match failure {
        Some(e) => Err(e),
        None => Ok(sum / horizon.max(1) as f64),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homeo::HomeoSpec;
    use crate::rds::{IfsModel, NoiseRealization};

    #[test]
    fn deterministic_pair() {
        let m = IfsModel::singleton(HomeoSpec::sine(0.1).unwrap());
        let params = PairParams {
            realizations: 3,
            depths: vec![100, 200],
            crack_horizon: 300,
            cloud_time: 100,
            ..PairParams::default()
        };
        let est = attractor_repeller(&m, 0, &params).unwrap();
        assert_eq!(est.converged, 3);
        for r in &est.records {
            assert!(d(r.attractor, CirclePoint::new(0.5)) < 1e-12);
            assert!(d(r.repeller.unwrap(), CirclePoint::ZERO) < 1e-12);
        }
        assert!(est.separated);
        // the cloud point started on the repeller stays there
        assert!((est.max_cloud_spread - 1.0 / 256.0).abs() < 1e-9);
    }

    #[test]
    fn deterministic_attractor_is_equivariant() {
        let m = IfsModel::singleton(HomeoSpec::sine(0.1).unwrap());
        let params = PairParams {
            realizations: 2,
            depths: vec![200],
            ..PairParams::default()
        };
        for r in attractor_equivariance(&m, 0, &params, 2).unwrap() {
            assert!(r < 1e-12);
        }
    }

    #[test]
    fn rotation_exponent_is_zero() {
        let m = IfsModel::uniform(vec![HomeoSpec::rotation(0.3).unwrap(), HomeoSpec::rotation(0.8).unwrap()]).unwrap();
        let l = lyapunov_exponent(&m, &NoiseRealization::new(0, 0), CirclePoint::new(0.2), 1000).unwrap();
        assert_eq!(l, 0.0);
    }

    #[test]
    fn sine_exponent_matches_attractor_derivative() {
        let m = IfsModel::singleton(HomeoSpec::sine(0.1).unwrap());
        let l = lyapunov_exponent(&m, &NoiseRealization::new(0, 0), CirclePoint::new(0.25), 10_000).unwrap();
        let expected = (1.0 - 0.2 * std::f64::consts::PI).ln();
        assert!((l - expected).abs() < 1e-3, "{l} vs {expected}");
    }
}
