//! Diagnostics over many noise realizations.
//!
//! Every estimator is a map over realization streams `0..N` followed by an
//! order-preserving collect, so results depend only on `(seed, N)` and not on
//! how many worker threads rayon uses. Asymptotic statements are checked as
//! thresholds at a finite horizon.

mod crack;
mod measure;
mod minimality;
mod pair;
mod stationary;
mod sync;

use rayon::prelude::*;

use crate::rds::RandomSystem;

pub use crack::{crack_equivariance, crack_law, crack_point, CrackEquivariance, CrackEstimate, CrackLaw, CrackStatus, BRACKET_BUDGET};
pub use measure::EmpiricalMeasure;
pub use minimality::{minimality_check, Direction, MinimalityEvidence};
pub use pair::{attractor_equivariance, attractor_repeller, lyapunov_exponent, PairEstimate, PairParams, PairRecord};
pub use stationary::{
    birkhoff_average, birkhoff_running, lemma34_check, martingale_check, reverse_stationary_measure, stationary_measure,
    ContractionProbability, MartingaleCheck, OccupationParams,
};
pub use sync::{
    compressibility_test, local_stability_test, sync_test, CompressibilityWitness, LocalStability, SyncVerdict,
};

/// Arc lengths below this count as contracted.
pub const CONTRACT_TOL: f64 = 1e-4;
/// Pair distances below this count as synchronised.
pub const SYNC_TOL: f64 = 1e-6;
/// Pullbacks from two anchors agreeing within this count as converged.
pub const ANCHOR_TOL: f64 = 1e-8;
pub const SYNC_HORIZON: usize = 500;
pub const CRACK_HORIZON: usize = 2000;

/// Runs `f` on realization streams `0..n` in parallel, in stream order.
pub(crate) fn per_stream<T: Send>(n: usize, f: impl Fn(u64) -> T + Sync + Send) -> Vec<T> {
    (0..n as u64).into_par_iter().map(f).collect()
}

/// Steps per materialized segment in long runs.
const CHUNK: usize = 4096;

/// Calls `f(segment, k)` for each of `steps` consecutive steps of `noise`,
/// materializing the maps a chunk at a time.
pub(crate) fn for_each_step<S: RandomSystem + ?Sized>(
    system: &S,
    noise: &S::Noise,
    steps: usize,
    mut f: impl FnMut(&S::Segment, usize),
) {
    let mut done = 0;
    while done < steps {
        let n = CHUNK.min(steps - done);
        let segment = system.segment(&system.shift(noise, done as i64), n);
        for k in 0..n {
            f(&segment, k);
        }
        done += n;
    }
}

pub(crate) fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}
