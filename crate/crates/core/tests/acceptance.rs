//! Quantitative acceptance criteria, one line of output per criterion.
//!
//! Runs without the libtest harness so the verdict lines are always shown;
//! exits non-zero if any criterion fails.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use circle_rds::analysis::{
    attractor_equivariance, attractor_repeller, birkhoff_average, compressibility_test, crack_equivariance, crack_law,
    lemma34_check, local_stability_test, lyapunov_exponent, martingale_check, minimality_check,
    reverse_stationary_measure, stationary_measure, sync_test, Direction, EmpiricalMeasure, OccupationParams,
    PairParams,
};
use circle_rds::circle::{arc_diameter, cyclic_order, d, d_plus, Arc, CirclePoint, Lift, Orientation};
use circle_rds::homeo::HomeoSpec;
use circle_rds::presets::{preset, PRESETS};
use circle_rds::rds::{evolve, evolve_arc, IfsModel, NoiseRealization, RandomSystem};
use circle_rds::runner::run_with_workers;
use circle_rds::sde::{witness_path, DriftSpec, SdeModel};

const SEED: u64 = 1;

fn p(x: f64) -> CirclePoint {
    CirclePoint::new(x)
}

fn kn04() -> IfsModel {
    IfsModel::new(
        vec![HomeoSpec::rotation(0.6180339887).unwrap(), HomeoSpec::sine(0.1).unwrap()],
        vec![0.5, 0.5],
    )
    .unwrap()
}

fn families() -> Vec<HomeoSpec> {
    [
        "rotation(0.6180339887)",
        "sine(0.1)",
        "sine(-0.15)",
        "mobius(0.3, 0.5, 0.2)",
        "mobius(0.0, -0.7, 0.1)",
        "pwl[(0,0.1),(0.3,0.2),(0.6,0.8)]",
        "compose[rotation(0.95), sine(0.1), rotation(0.05)]",
    ]
    .iter()
    .map(|s| s.parse().unwrap())
    .collect()
}

fn inverse_tolerance(f: &HomeoSpec) -> f64 {
    match f {
        HomeoSpec::PiecewiseLinear(_) | HomeoSpec::Composition(_) => 1e-9,
        _ => 1e-12,
    }
}

/// Collects failure messages; a criterion passes when none were recorded.
#[derive(Default)]
struct Verdict(Vec<String>);

impl Verdict {
    fn require(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.0.push(what());
        }
    }
}

fn criterion_1() -> Verdict {
    let mut v = Verdict::default();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10_000 {
        let (x, y) = (p(rng.random()), p(rng.random()));
        if x == y {
            continue;
        }
        let sum = d_plus(x, y) + d_plus(y, x);
        v.require((sum - 1.0).abs() <= f64::EPSILON, || format!("d+ sum {sum} for {x}, {y}"));
        let expected = d_plus(x, y).min(1.0 - d_plus(x, y));
        v.require((d(x, y) - expected).abs() <= f64::EPSILON, || format!("d({x}, {y})"));
        let arc = Arc { start: x, end: y };
        v.require(arc_diameter(&arc) == arc.length().min(0.5), || format!("diameter of {arc:?}"));
    }

    let m = kn04();
    for _ in 0..100 {
        let (s, t) = (rng.random_range(0..200usize), rng.random_range(0..200usize));
        let w = NoiseRealization::new(rng.random(), rng.random_range(0..1000));
        let x = p(rng.random());
        let joint = evolve(&m, &w, &[x], s + t).last()[0];
        let head = evolve(&m, &w, &[x], s).last()[0];
        let split = evolve(&m, &m.shift(&w, s as i64), &[head], t).last()[0];
        v.require(joint == split, || format!("cocycle split s={s} t={t}"));

        let arc = Arc::new(rng.random::<f64>(), rng.random::<f64>());
        let lengths = evolve_arc(&m, &w, arc, 50);
        let ends = evolve(&m, &w, &[arc.start, arc.end], 50);
        for (k, l) in lengths.iter().enumerate() {
            let row = ends.row(k);
            v.require(*l == d_plus(row[0], row[1]), || format!("arc length at step {k}"));
        }
    }

    for f in families() {
        for _ in 0..1000 {
            let mut xs = [rng.random::<f64>(), rng.random(), rng.random()];
            xs.sort_by(f64::total_cmp);
            let [x, y, z] = xs.map(p);
            if cyclic_order(x, y, z) != Orientation::Positive {
                continue;
            }
            let image = cyclic_order(f.apply(x), f.apply(y), f.apply(z));
            v.require(image == Orientation::Positive, || format!("{f} reverses ({x}, {y}, {z})"));
            let a = Arc { start: x, end: z };
            let fa = f.apply_arc(&a);
            v.require(fa.length() == d_plus(f.apply(x), f.apply(z)), || format!("{f} image of {a:?}"));
            let back = f.apply_inverse(f.apply(x));
            v.require(d(back, x) <= inverse_tolerance(&f), || format!("{f} inverse at {x}"));
        }
    }
    v
}

fn criterion_2() -> Verdict {
    let mut v = Verdict::default();
    let m = kn04();
    v.require(m.deterministic_fixed_points().is_empty(), || "common fixed point".into());
    v.require(
        m.generators().iter().any(|g| g.classify_simple(1000, 1e-9).is_simple()),
        || "no simple generator".into(),
    );
    let arcs = [Arc::new(0.0, 0.5), Arc::new(0.2, 0.4), Arc::new(0.5, 0.9), Arc::new(0.7, 0.3), Arc::new(0.9, 0.85)];
    for w in compressibility_test(&m, &arcs, SEED, 100, 100) {
        v.require(w.found, || format!("no compressibility witness for {:?}", w.arc));
    }
    let reverse = minimality_check(&m, Direction::Reverse, 256, 4096);
    v.require(reverse.minimal, || format!("reverse minimality obstruction {:?}", reverse.obstruction));
    if !v.0.is_empty() {
        return v;
    }
    let sync = sync_test(&m, p(0.1), p(0.6), SEED, 500, 500, 1e-6);
    v.require(sync.fraction >= 0.95, || format!("sync fraction {}", sync.fraction));
    let stab = local_stability_test(&m, p(0.3), SEED, 500, 500, &[0.01], 1e-4);
    v.require(stab.fractions[0] >= 0.9, || format!("local stability {}", stab.fractions[0]));
    v
}

fn criterion_3() -> Verdict {
    let mut v = Verdict::default();
    let rot = IfsModel::uniform(vec![
        HomeoSpec::rotation(0.6180339887).unwrap(),
        HomeoSpec::rotation(0.4142135624).unwrap(),
    ])
    .unwrap();
    let witnesses = compressibility_test(&rot, &[Arc::new(0.1, 0.6)], SEED, 100, 100);
    v.require(witnesses[0].probes == 10_000 && !witnesses[0].found, || format!("{:?}", witnesses[0]));
    let sync = sync_test(&rot, p(0.1), p(0.35), SEED, 500, 500, 1e-6);
    v.require(sync.fraction == 0.0, || format!("rotation sync fraction {}", sync.fraction));
    v.require(sync.constant_gap_realizations == 500, || {
        format!("gap changed in {} realizations", 500 - sync.constant_gap_realizations)
    });

    let simple = IfsModel::singleton(HomeoSpec::sine(0.1).unwrap());
    for (x, y) in [(0.1, 0.3), (0.6, 0.9), (0.2, 0.8)] {
        let s = sync_test(&simple, p(x), p(y), SEED, 4, 500, 1e-6);
        v.require(s.fraction == 1.0, || format!("simple map pair ({x}, {y}) fraction {}", s.fraction));
    }
    let at_repeller = local_stability_test(&simple, p(0.0), SEED, 4, 500, &[0.01, 0.001], 1e-4);
    v.require(at_repeller.fractions.iter().all(|&f| f == 0.0), || {
        format!("stability at repeller {:?}", at_repeller.fractions)
    });
    v
}

fn criterion_4() -> Verdict {
    let mut v = Verdict::default();
    let h = 1.0 / 256.0;
    let sine1 = SdeModel::new(DriftSpec::sine(1).unwrap(), 1.0, h).unwrap();
    let s = sync_test(&sine1, p(0.1), p(0.6), SEED, 500, 50, 1e-4);
    v.require(s.fraction >= 0.95, || format!("sine:1 fraction {}", s.fraction));

    let sine2 = SdeModel::new(DriftSpec::sine(2).unwrap(), 1.0, h).unwrap();
    let lo = Lift::new(0.2);
    let hi = lo.shift(0.5);
    for stream in 0..20 {
        let rows = sine2.integrate_flow(&sine2.path(SEED, stream), &[lo, hi], 50.0).unwrap();
        let exact = rows.iter().all(|r| r[1].to_bits() - r[0].to_bits() == 1i128 << 63);
        v.require(exact, || format!("gap moved on path {stream}"));
    }

    let j = Arc::new(0.1, 0.4);
    match witness_path(&sine1, j, 100.0) {
        Ok(w) => v.require(w.achieved_length < j.length(), || format!("witness length {}", w.achieved_length)),
        Err(e) => v.require(false, || format!("witness: {e}")),
    }
    v
}

fn occupation(realizations: usize) -> OccupationParams {
    OccupationParams {
        start: p(0.123),
        burn_in: 100,
        samples: 1000,
        realizations,
        bins: 64,
    }
}

fn criterion_5(rho: &EmpiricalMeasure) -> Verdict {
    let mut v = Verdict::default();
    let m = kn04();
    let j = Arc::new(0.0, 0.5);
    let c = lemma34_check(&m, rho, j, SEED, 2000, 2000, 1e-4);
    v.require(!c.horizon_too_short, || format!("undecided {}", c.undecided));
    v.require((c.empirical - c.predicted).abs() < 0.05, || {
        format!("empirical {} predicted {}", c.empirical, c.predicted)
    });
    let other = lemma34_check(&m, rho, j.complement(), SEED, 10, 10, 1e-4);
    let sum = c.predicted + other.predicted;
    v.require((sum - 1.0).abs() <= 0.02, || format!("complement predictions sum to {sum}"));
    v
}

fn criterion_6(rho: &EmpiricalMeasure) -> Verdict {
    let mut v = Verdict::default();
    let c = martingale_check(&kn04(), rho, Arc::new(0.0, 0.5), SEED, 20, 20, 2000, 10);
    let bound = 3.0 / 2000f64.sqrt() + 2.0 / 64.0;
    v.require(c.max_deviation < bound, || format!("deviation {} bound {bound}", c.max_deviation));
    v
}

fn criterion_7() -> Verdict {
    let mut v = Verdict::default();
    let m = kn04();
    let law = crack_law(&m, SEED, 500, 2000, 1e-4, 64);
    v.require(law.present * 100 >= 99 * 500, || format!("crack present in {}/500", law.present));
    v.require(law.max_bin_mass <= 3.0 / 64.0, || format!("max bin mass {}", law.max_bin_mass));

    for e in crack_equivariance(&m, SEED, 50, 2, 2000, 1e-4) {
        v.require(e.holds(1e-6), || format!("crack equivariance {e:?}"));
    }

    let j = Arc::new(0.0, 0.5);
    let fixed = m.deterministic_fixed_points();
    v.require(
        fixed.points().iter().all(|q| q.point != j.start && q.point != j.end),
        || "arc endpoint is a deterministic fixed point".into(),
    );
    let target = stationary_measure(&m, SEED, &occupation(1000)).arc_mass(&j);
    let w = NoiseRealization::new(SEED, 0);
    for x in [0.1, 0.7] {
        let avg = birkhoff_average(&m, &w, p(x), j, 100_000);
        v.require((avg - target).abs() < 0.02, || format!("Birkhoff from {x}: {avg} vs {target}"));
    }
    v
}

fn criterion_8() -> Verdict {
    let mut v = Verdict::default();
    let m = kn04();
    let params = PairParams::default();
    let est = attractor_repeller(&m, SEED, &params).unwrap();
    v.require(est.converged_fraction >= 0.95, || format!("converged {}", est.converged_fraction));
    for r in est.records.iter().filter(|r| r.converged) {
        v.require(r.pair_distance.is_some_and(|x| x > 1e-3), || {
            format!("realization {}: d(a, r) = {:?}", r.stream, r.pair_distance)
        });
        v.require(r.cloud_spread < 1e-3, || format!("realization {}: spread {}", r.stream, r.cloud_spread));
    }
    let shifted = attractor_equivariance(&m, SEED, &params, 1).unwrap();
    for (r, residual) in est.records.iter().zip(shifted) {
        if r.converged {
            v.require(residual < 1e-6, || format!("realization {}: a(θω) residual {residual}", r.stream));
        }
    }
    v
}

/// Smallest grid value `k/grid` with an arc of that length holding at least
/// `1 − k/grid` of the mass, trying windows that start at every sample.
fn spread_oracle(points: &[f64], weights: &[f64], grid: usize) -> f64 {
    let total: f64 = weights.iter().sum();
    (0..=grid / 2)
        .map(|k| k as f64 / grid as f64)
        .find(|&g| {
            points.iter().any(|&s| {
                let arc = Arc::from_start(p(s), g);
                let mass: f64 = points
                    .iter()
                    .zip(weights)
                    .filter(|(x, _)| g > 0.0 && arc.contains(p(**x)) || p(**x) == p(s))
                    .map(|(_, w)| w)
                    .sum();
                mass / total >= 1.0 - g - 1e-12
            })
        })
        .unwrap_or(0.5)
}

/// Sign changes of the displacement `f(x) − x` on a grid of `2^14` cells.
fn fixed_point_oracle(f: &HomeoSpec) -> Vec<f64> {
    const N: usize = 1 << 14;
    let signed = |x: f64| {
        let s = d_plus(p(x), f.apply(p(x)));
        if s > 0.5 {
            s - 1.0
        } else {
            s
        }
    };
    let mut roots = Vec::new();
    for j in 0..N {
        let (a, b) = (j as f64 / N as f64, (j + 1) as f64 / N as f64);
        let (sa, sb) = (signed(a), signed(b % 1.0));
        if sa == 0.0 {
            roots.push(a);
        } else if sa * sb < 0.0 && sa.abs() < 0.25 && sb.abs() < 0.25 {
            roots.push(0.5 * (a + b));
        }
    }
    roots
}

fn criterion_9() -> Verdict {
    let mut v = Verdict::default();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let grid = 1024;
    for i in 0..20 {
        let n = rng.random_range(1..40);
        let points: Vec<f64> = (0..n).map(|_| rng.random()).collect();
        let weights: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
        let measure = EmpiricalMeasure::from_weighted(points.iter().map(|&x| p(x)).collect(), weights.clone());
        let (got, want) = (measure.spread(), spread_oracle(&points, &weights, grid));
        v.require((got - want).abs() <= 1.0 / grid as f64 + 1e-12, || format!("measure {i}: spread {got} vs oracle {want}"));
    }

    for f in families().into_iter().filter(|f| !f.is_rotation()) {
        let found: Vec<f64> = f.fixed_points().points().iter().map(|q| q.point.value()).collect();
        let oracle = fixed_point_oracle(&f);
        v.require(found.len() == oracle.len(), || format!("{f}: {found:?} vs oracle {oracle:?}"));
        for r in &oracle {
            v.require(found.iter().any(|x| d(p(*x), p(*r)) <= 1.0 / (1 << 14) as f64), || {
                format!("{f}: oracle root {r} not found in {found:?}")
            });
        }
    }

    let det = IfsModel::singleton(HomeoSpec::sine(0.1).unwrap());
    let l = lyapunov_exponent(&det, &NoiseRealization::new(SEED, 0), p(0.25), 10_000).unwrap();
    let expected = (1.0 - 0.2 * std::f64::consts::PI).ln();
    v.require((l - expected).abs() < 1e-3, || format!("Lyapunov {l} vs {expected}"));
    v
}

fn criterion_10() -> Verdict {
    let mut v = Verdict::default();
    for (name, _) in PRESETS {
        let config = preset(name).unwrap();
        let one = run_with_workers(&config, None, 1).unwrap();
        let eight = run_with_workers(&config, None, 8).unwrap();
        let csv = |r: &circle_rds::runner::RunReport| {
            (r.series.as_ref().map(|t| t.to_csv()), r.histogram.as_ref().map(|t| t.to_csv()))
        };
        v.require(one.series.is_some() || one.histogram.is_some(), || format!("{name}: no CSV output"));
        v.require(csv(&one) == csv(&eight), || format!("{name}: CSV differs between 1 and 8 workers"));
        v.require(one.summary_json() == eight.summary_json(), || format!("{name}: summary differs"));
        v.require(one.checks.iter().all(|c| c.passed), || format!("{name}: a precondition failed"));
    }
    v
}

type Criterion<'a> = (&'static str, Box<dyn Fn() -> Verdict + 'a>);

fn main() {
    let started = Instant::now();
    let rho = reverse_stationary_measure(&kn04(), SEED, &occupation(2000)).unwrap();
    let criteria: Vec<Criterion> = vec![
        ("exact identities", Box::new(criterion_1)),
        ("synchronisation when the conditions hold", Box::new(criterion_2)),
        ("no stable synchronisation when they fail", Box::new(criterion_3)),
        ("circle SDE", Box::new(criterion_4)),
        ("contraction probability", Box::new(|| criterion_5(&rho))),
        ("martingale", Box::new(|| criterion_6(&rho))),
        ("crack points", Box::new(criterion_7)),
        ("attractor and repeller", Box::new(criterion_8)),
        ("oracle equivalences", Box::new(criterion_9)),
        ("reproducibility across workers", Box::new(criterion_10)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let verdict = check();
        let status = if verdict.0.is_empty() { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {status} {name} ({:.1}s)", i + 1, t.elapsed().as_secs_f64());
        for msg in verdict.0.iter().take(5) {
            println!("    {msg}");
        }
        failed += usize::from(!verdict.0.is_empty());
    }
    println!("{} of {} criteria passed in {:.1}s", criteria.len() - failed, criteria.len(), started.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
