use serde::Serialize;

use super::{median, per_stream};
use crate::circle::{d, d_plus_bits, Arc, CirclePoint};
use crate::rds::{RandomSystem, TrackedArc};

/// Outcome of running a pair of points under many realizations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SyncVerdict {
    pub x: CirclePoint,
    pub y: CirclePoint,
    pub seed: u64,
    pub realizations: usize,
    pub horizon: usize,
    pub tol: f64,
    /// d(φ(T,ω)x, φ(T,ω)y) per realization.
    pub final_distances: Vec<f64>,
    pub synchronised: usize,
    pub fraction: f64,
    /// Median over realizations of d at each step `0..=T`.
    pub median_curve: Vec<f64>,
    /// Realizations in which the anticlockwise gap never changed, bit for bit.
    pub constant_gap_realizations: usize,
}

pub fn sync_test<S: RandomSystem>(
    system: &S,
    x: CirclePoint,
    y: CirclePoint,
    seed: u64,
    realizations: usize,
    horizon: usize,
    tol: f64,
) -> SyncVerdict {
    let runs = per_stream(realizations, |stream| {
        let noise = system.realization(seed, stream);
        let segment = system.segment(&noise, horizon);
        let gap0 = d_plus_bits(x, y);
        let (mut a, mut b) = (x, y);
        let mut curve = Vec::with_capacity(horizon + 1);
        let mut constant = true;
        curve.push(d(a, b));
        for k in 0..horizon {
            a = system.step(&segment, k, a);
            b = system.step(&segment, k, b);
            constant &= d_plus_bits(a, b) == gap0;
            curve.push(d(a, b));
        }
        (curve, constant)
    });
    let final_distances: Vec<f64> = runs.iter().map(|(c, _)| c[horizon]).collect();
    let synchronised = final_distances.iter().filter(|&&v| v < tol).count();
    let median_curve = (0..=horizon)
        .map(|k| median(&mut runs.iter().map(|(c, _)| c[k]).collect::<Vec<_>>()))
        .collect();
    SyncVerdict {
        x,
        y,
        seed,
        realizations,
        horizon,
        tol,
        synchronised,
        fraction: synchronised as f64 / realizations.max(1) as f64,
        final_distances,
        median_curve,
        constant_gap_realizations: runs.iter().filter(|(_, c)| *c).count(),
    }
}

/// Fraction of realizations contracting the arc of each radius around `x`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalStability {
    pub x: CirclePoint,
    pub radii: Vec<f64>,
    pub fractions: Vec<f64>,
    pub horizon: usize,
    pub tol: f64,
}

pub fn local_stability_test<S: RandomSystem>(
    system: &S,
    x: CirclePoint,
    seed: u64,
    realizations: usize,
    horizon: usize,
    radii: &[f64],
    tol: f64,
) -> LocalStability {
    let runs = per_stream(realizations, |stream| {
        let noise = system.realization(seed, stream);
        let segment = system.segment(&noise, horizon);
        let mut arcs: Vec<TrackedArc> = radii.iter().map(|&r| TrackedArc::new(Arc::centered(x, r))).collect();
        for k in 0..horizon {
            for a in &mut arcs {
                a.map(|p| system.step(&segment, k, p));
            }
        }
        arcs.iter().map(|a| a.length() < tol).collect::<Vec<bool>>()
    });
    let fractions = (0..radii.len())
        .map(|i| runs.iter().filter(|r| r[i]).count() as f64 / realizations.max(1) as f64)
        .collect();
    LocalStability {
        x,
        radii: radii.to_vec(),
        fractions,
        horizon,
        tol,
    }
}

/// The first realization and time at which an arc got strictly shorter.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompressibilityWitness {
    pub arc: Arc,
    pub found: bool,
    pub seed: u64,
    pub stream: Option<u64>,
    pub time: Option<usize>,
    pub length: Option<f64>,
    /// Number of (realization, time) pairs examined.
    pub probes: usize,
}

pub fn compressibility_test<S: RandomSystem>(
    system: &S,
    arcs: &[Arc],
    seed: u64,
    realizations: usize,
    horizon: usize,
) -> Vec<CompressibilityWitness> {
    let runs = per_stream(realizations, |stream| {
        let noise = system.realization(seed, stream);
        let segment = system.segment(&noise, horizon);
        arcs.iter()
            .map(|arc| {
                let original = arc.length_bits();
                let mut tracked = TrackedArc::new(*arc);
                (0..horizon).find_map(|k| {
                    tracked.map(|p| system.step(&segment, k, p));
                    let shorter = !tracked.is_full() && d_plus_bits(tracked.start(), tracked.end()) < original;
                    shorter.then(|| (k + 1, tracked.length()))
                })
            })
            .collect::<Vec<_>>()
    });
    arcs.iter()
        .enumerate()
        .map(|(i, arc)| {
            let hit = runs.iter().enumerate().find_map(|(s, r)| r[i].map(|(t, l)| (s as u64, t, l)));
            CompressibilityWitness {
                arc: *arc,
                found: hit.is_some(),
                seed,
                stream: hit.map(|h| h.0),
                time: hit.map(|h| h.1),
                length: hit.map(|h| h.2),
                probes: realizations * horizon,
            }
        })
        .collect()
}
