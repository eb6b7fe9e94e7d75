//! Runs an [`ExperimentConfig`] and writes its report.
//!
//! A report is `summary.json` (the resolved config, the precondition
//! outcomes and the estimator result), `series.csv` for estimators that
//! evolve in time (first column `step`) and `histogram.csv` for estimators
//! that produce a distribution (first column `bin`). Nothing in a report
//! depends on the number of worker threads.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::analysis::{
    attractor_equivariance, attractor_repeller, birkhoff_running, compressibility_test, crack_equivariance, crack_law,
    lemma34_check, local_stability_test, lyapunov_exponent, martingale_check, median, minimality_check, per_stream,
    reverse_stationary_measure, stationary_measure, sync_test, EmpiricalMeasure, OccupationParams, PairParams,
};
use crate::circle::{d_plus_bits, Arc, CirclePoint, Lift};
use crate::config::{CheckConfig, ConfigError, EstimatorConfig, ExperimentConfig, OccupationConfig, System};
use crate::homeo::SimpleClassification;
use crate::rds::{RandomSystem, TrackedArc};
use crate::sde::{least_period_divisor, witness_path, SdeModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Success,
    /// A precondition failed, or the estimator could not decide at this horizon.
    Inconclusive,
}

impl RunStatus {
    pub fn exit_code(self) -> i32 {
        match self {
            RunStatus::Success => 0,
            RunStatus::Inconclusive => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub kind: &'static str,
    pub passed: bool,
    pub evidence: Value,
}

/// A CSV table whose first column is an integer index.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub index: &'static str,
    pub columns: Vec<String>,
    pub rows: Vec<(u64, Vec<f64>)>,
}

impl Table {
    fn new(index: &'static str, columns: Vec<String>) -> Self {
        Table {
            index,
            columns,
            rows: Vec::new(),
        }
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|(_, r)| r[i]).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let header = std::iter::once(self.index.to_string()).chain(self.columns.iter().cloned());
        w.write_record(header).expect("in-memory write");
        for (i, row) in &self.rows {
            let record = std::iter::once(i.to_string()).chain(row.iter().map(|&v| format_number(v)));
            w.write_record(record).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory write")).expect("ascii output")
    }
}

/// Shortest round-trip decimal form.
fn format_number(v: f64) -> String {
    if v.is_finite() {
        serde_json::to_string(&v).expect("finite floats serialize")
    } else {
        v.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub status: RunStatus,
    pub checks: Vec<CheckOutcome>,
    pub result: Value,
    #[serde(skip)]
    pub series: Option<Table>,
    #[serde(skip)]
    pub histogram: Option<Table>,
}

impl RunReport {
    pub fn summary_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    /// Writes the report files into `dir`, creating it, and returns their paths.
    pub fn write_to(&self, dir: &Path) -> io::Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = vec![dir.join("summary.json")];
        fs::write(&written[0], self.summary_json())?;
        for (table, file) in [(&self.series, "series.csv"), (&self.histogram, "histogram.csv")] {
            if let Some(t) = table {
                let path = dir.join(file);
                fs::write(&path, t.to_csv())?;
                written.push(path);
            }
        }
        Ok(written)
    }

    /// `dir` if given, else the config's output directory, else `out/<name>`.
    pub fn output_dir(&self, dir: Option<&Path>) -> PathBuf {
        dir.map(Path::to_path_buf)
            .or_else(|| self.config.output.dir.clone())
            .unwrap_or_else(|| Path::new("out").join(&self.config.name))
    }
}

/// Runs preconditions and then the estimator. Table drifts are resolved
/// against `base_dir`.
pub fn run(config: &ExperimentConfig, base_dir: Option<&Path>) -> Result<RunReport, ConfigError> {
    config.validate()?;
    let system = config.system.build(base_dir)?;
    let checks: Vec<CheckOutcome> = config.checks.iter().map(|c| run_check(c, &system, config.seed)).collect();
    if checks.iter().any(|c| !c.passed) {
        return Ok(RunReport {
            config: config.clone(),
            status: RunStatus::Inconclusive,
            checks,
            result: json!({ "skipped": "a precondition check failed" }),
            series: None,
            histogram: None,
        });
    }
    let output = match (&system, &config.estimator) {
        (System::Sde(m), EstimatorConfig::Gap { x, gap }) => gap_estimate(m, config, *x, *gap),
        (System::Ifs(m), _) => estimate(m, config)?,
        (System::Sde(m), _) => estimate(m, config)?,
    };
    Ok(RunReport {
        config: config.clone(),
        status: output.status,
        checks,
        result: output.result,
        series: output.series,
        histogram: output.histogram,
    })
}

/// [`run`] on a dedicated pool of `workers` threads.
pub fn run_with_workers(config: &ExperimentConfig, base_dir: Option<&Path>, workers: usize) -> Result<RunReport, ConfigError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| ConfigError::invalid("workers", e))?;
    pool.install(|| run(config, base_dir))
}

fn run_check(check: &CheckConfig, system: &System, seed: u64) -> CheckOutcome {
    let (passed, evidence) = match (check, system) {
        (CheckConfig::NoDeterministicFixedPoint, System::Ifs(m)) => {
            let fixed = m.deterministic_fixed_points();
            (fixed.is_empty(), to_value(&fixed))
        }
        (
            CheckConfig::Minimality {
                direction,
                grid,
                word_length,
                expect,
            },
            System::Ifs(m),
        ) => {
            let ev = minimality_check(m, *direction, *grid, *word_length);
            (ev.minimal == *expect, to_value(&ev))
        }
        (
            CheckConfig::Compressibility {
                arcs,
                realizations,
                horizon,
                expect,
            },
            _,
        ) => {
            let witnesses = match system {
                System::Ifs(m) => compressibility_test(m, arcs, seed, *realizations, *horizon),
                System::Sde(m) => compressibility_test(m, arcs, seed, *realizations, *horizon),
            };
            let passed = witnesses.iter().all(|w| w.found == *expect);
            (passed, to_value(&witnesses))
        }
        (CheckConfig::SimpleGenerator { horizon, tol }, System::Ifs(m)) => {
            let verdicts: Vec<SimpleClassification> =
                m.generators().iter().map(|g| g.classify_simple(*horizon, *tol)).collect();
            let passed = verdicts.iter().any(|v| matches!(v, SimpleClassification::Simple { .. }));
            (passed, to_value(&verdicts))
        }
        (CheckConfig::InvariantArc { arc }, System::Ifs(m)) => {
            let images: Vec<Arc> = m.generators().iter().map(|g| g.apply_arc(arc)).collect();
            let passed = images.iter().all(|image| arc_inside(image, arc));
            (passed, json!({ "arc": arc, "images": images }))
        }
        (CheckConfig::BoundaryNotFixed { arc }, System::Ifs(m)) => {
            let fixed = m.deterministic_fixed_points();
            let passed = match &fixed {
                crate::homeo::FixedPointSet::Points(v) => {
                    v.iter().all(|p| p.point != arc.start && p.point != arc.end)
                }
                _ => false,
            };
            (passed, to_value(&fixed))
        }
        (CheckConfig::LeastPeriod { expect }, System::Sde(m)) => {
            let n = least_period_divisor(m.drift(), 1e-9);
            (n == *expect, json!({ "divisor": n }))
        }
        (CheckConfig::Witness { arc, eta }, System::Sde(m)) => match witness_path(m, *arc, *eta) {
            Ok(w) => (
                w.achieved_length < arc.length(),
                json!({
                    "anchor": w.anchor,
                    "drift_gap": w.drift_gap,
                    "ramp_end": w.ramp_end,
                    "contraction_time": w.contraction_time,
                    "achieved_length": w.achieved_length,
                    "min_length": w.min_length,
                }),
            ),
            Err(e) => (false, json!({ "error": e.to_string() })),
        },
        // validation rules these out
        _ => (false, json!({ "error": "check does not apply to this system" })),
    };
    CheckOutcome {
        kind: check.kind(),
        passed,
        evidence,
    }
}

fn arc_inside(inner: &Arc, outer: &Arc) -> bool {
    outer.contains(inner.start)
        && outer.contains(inner.end)
        && d_plus_bits(outer.start, inner.start) <= d_plus_bits(outer.start, inner.end)
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("diagnostics serialize")
}

struct Output {
    status: RunStatus,
    result: Value,
    series: Option<Table>,
    histogram: Option<Table>,
}

impl Output {
    fn success(result: Value) -> Self {
        Output {
            status: RunStatus::Success,
            result,
            series: None,
            histogram: None,
        }
    }
}

fn occupation(o: &OccupationConfig) -> OccupationParams {
    OccupationParams {
        start: o.start,
        burn_in: o.burn_in,
        samples: o.samples,
        realizations: o.realizations,
        bins: o.bins,
    }
}

fn histogram_table(measure: &EmpiricalMeasure, bins: usize) -> Table {
    let mut t = Table::new("bin", vec!["left".into(), "right".into(), "mass".into()]);
    for (i, m) in measure.to_histogram(bins).into_iter().enumerate() {
        t.rows
            .push((i as u64, vec![i as f64 / bins as f64, (i + 1) as f64 / bins as f64, m]));
    }
    t
}

fn estimate<S: RandomSystem>(system: &S, config: &ExperimentConfig) -> Result<Output, ConfigError> {
    let seed = config.seed;
    let n = config.realizations;
    let horizon = config.horizon;
    let out = match &config.estimator {
        EstimatorConfig::Sync { pairs, tol, stability } => {
            let verdicts: Vec<_> = pairs
                .iter()
                .map(|[x, y]| sync_test(system, *x, *y, seed, n, horizon, *tol))
                .collect();
            let mut series = Table::new(
                "step",
                (0..pairs.len()).map(|i| format!("median_distance_{i}")).collect(),
            );
            for k in 0..=horizon {
                series.rows.push((k as u64, verdicts.iter().map(|v| v.median_curve[k]).collect()));
            }
            let stability = stability
                .as_ref()
                .map(|s| local_stability_test(system, s.point, seed, n, horizon, &s.radii, s.tol));
            let pairs: Vec<Value> = verdicts
                .iter()
                .map(|v| {
                    json!({
                        "x": v.x,
                        "y": v.y,
                        "synchronised": v.synchronised,
                        "fraction": v.fraction,
                        "constant_gap_realizations": v.constant_gap_realizations,
                        "final_median_distance": v.median_curve[horizon],
                        "max_final_distance": v.final_distances.iter().copied().fold(0.0, f64::max),
                    })
                })
                .collect();
            Output {
                series: Some(series),
                ..Output::success(json!({ "tol": tol, "pairs": pairs, "stability": stability }))
            }
        }
        EstimatorConfig::Gap { .. } => unreachable!("gap runs on the sde directly"),
        EstimatorConfig::CrackLaw { tol, bins, equivariance } => {
            let law = crack_law(system, seed, n, horizon, *tol, *bins);
            let equivariance = equivariance.as_ref().map(|e| {
                let records = crack_equivariance(system, seed, e.realizations, e.shift, horizon, *tol);
                let residuals: Vec<f64> = records.iter().filter_map(|r| r.residual).collect();
                json!({
                    "realizations": e.realizations,
                    "shift": e.shift,
                    "located": residuals.len(),
                    "max_residual": residuals.iter().copied().fold(0.0, f64::max),
                    "max_bracket_width": records.iter().map(|r| r.bracket_width).fold(0.0, f64::max),
                    "holding": records.iter().filter(|r| r.holds(1e-6)).count(),
                })
            });
            let status = if law.inconclusive * 100 > n {
                RunStatus::Inconclusive
            } else {
                RunStatus::Success
            };
            Output {
                status,
                result: json!({
                    "realizations": n,
                    "horizon": horizon,
                    "present": law.present,
                    "absent": law.absent,
                    "inconclusive": law.inconclusive,
                    "base_disagreements": law.base_disagreements,
                    "max_bin_mass": law.max_bin_mass,
                    "atom_threshold": law.atom_threshold,
                    "atomless": law.atomless,
                    "equivariance": equivariance,
                }),
                series: None,
                histogram: Some(histogram_table(&law.histogram, *bins)),
            }
        }
        EstimatorConfig::Pair {
            depths,
            anchors,
            anchor_tol,
            contract_tol,
            cloud_time,
            cloud_points,
            equivariance_shift,
        } => {
            let params = PairParams {
                realizations: n,
                depths: depths.clone(),
                anchors: *anchors,
                anchor_tol: *anchor_tol,
                crack_horizon: horizon,
                contract_tol: *contract_tol,
                cloud_time: *cloud_time,
                cloud_points: *cloud_points,
            };
            let est = attractor_repeller(system, seed, &params).map_err(|e| ConfigError::invalid("estimator", e))?;
            let equivariance = equivariance_shift
                .map(|shift| attractor_equivariance(system, seed, &params, shift))
                .transpose()
                .map_err(|e| ConfigError::invalid("estimator", e))?
                .map(|residuals| {
                    let converged = residuals.iter().zip(&est.records).filter(|(_, r)| r.converged);
                    json!({
                        "shift": equivariance_shift,
                        "max_residual": converged.map(|(v, _)| *v).fold(0.0, f64::max),
                    })
                });
            let mut series = Table::new("step", vec!["median_residual".into(), "max_residual".into()]);
            for (i, depth) in depths.iter().enumerate() {
                let mut column: Vec<f64> = est.records.iter().map(|r| r.depth_residuals[i]).collect();
                let max = column.iter().copied().fold(0.0, f64::max);
                series.rows.push((*depth as u64, vec![median(&mut column), max]));
            }
            let records: Vec<Value> = est
                .records
                .iter()
                .map(|r| {
                    json!({
                        "stream": r.stream,
                        "attractor": r.attractor,
                        "residual": r.residual,
                        "converged": r.converged,
                        "repeller": r.repeller,
                        "pair_distance": r.pair_distance,
                        "cloud_spread": r.cloud_spread,
                    })
                })
                .collect();
            Output {
                status: if est.converged_fraction >= 0.95 {
                    RunStatus::Success
                } else {
                    RunStatus::Inconclusive
                },
                result: json!({
                    "converged": est.converged,
                    "not_converged": est.not_converged,
                    "converged_fraction": est.converged_fraction,
                    "missing_repeller": est.missing_repeller,
                    "separated": est.separated,
                    "min_pair_distance": est.min_pair_distance,
                    "max_cloud_spread": est.max_cloud_spread,
                    "equivariance": equivariance,
                    "records": records,
                }),
                series: Some(series),
                histogram: None,
            }
        }
        EstimatorConfig::Lemma34 {
            arcs,
            tol,
            stationary,
            martingale,
        } => {
            let rho = reverse_stationary_measure(system, seed, &occupation(stationary))
                .map_err(|e| ConfigError::invalid("estimator.kind", e))?;
            let checks: Vec<_> = arcs
                .iter()
                .map(|arc| lemma34_check(system, &rho, *arc, seed, n, horizon, *tol))
                .collect();
            let martingale = martingale.as_ref().map(|m| {
                martingale_check(system, &rho, m.arc, seed, m.s, m.t, m.continuations, m.prefixes)
            });
            let status = if checks.iter().any(|c| c.horizon_too_short) {
                RunStatus::Inconclusive
            } else {
                RunStatus::Success
            };
            Output {
                status,
                result: json!({
                    "checks": checks,
                    "predicted_sum": checks.iter().map(|c| c.predicted).sum::<f64>(),
                    "martingale": martingale.map(|m| json!({
                        "s": m.s,
                        "t": m.t,
                        "prefixes": m.prefixes,
                        "continuations": m.continuations,
                        "max_deviation": m.max_deviation,
                        "bound": m.bound,
                    })),
                }),
                series: Some(contraction_curves(system, arcs, seed, n, horizon, *tol)),
                histogram: Some(histogram_table(&rho, stationary.bins)),
            }
        }
        EstimatorConfig::Birkhoff {
            starts,
            arc,
            every,
            stationary,
        } => {
            let rho = stationary_measure(system, seed, &occupation(stationary));
            let stationary_mass = rho.arc_mass(arc);
            let runs: Vec<Vec<(usize, f64)>> = starts
                .iter()
                .flat_map(|x| {
                    per_stream(n, |stream| {
                        birkhoff_running(system, &system.realization(seed, stream), *x, *arc, horizon, *every)
                    })
                })
                .collect();
            let columns = starts
                .iter()
                .enumerate()
                .flat_map(|(i, _)| (0..n).map(move |r| format!("average_start{i}_realization{r}")))
                .collect();
            let mut series = Table::new("step", columns);
            for (j, &(step, _)) in runs[0].iter().enumerate() {
                series.rows.push((step as u64, runs.iter().map(|r| r[j].1).collect()));
            }
            let finals: Vec<f64> = runs.iter().map(|r| r.last().map_or(0.0, |v| v.1)).collect();
            let max_deviation = finals.iter().map(|f| (f - stationary_mass).abs()).fold(0.0, f64::max);
            Output {
                series: Some(series),
                histogram: Some(histogram_table(&rho, stationary.bins)),
                ..Output::success(json!({
                    "arc": arc,
                    "starts": starts,
                    "final_averages": finals,
                    "stationary_mass": stationary_mass,
                    "max_deviation": max_deviation,
                }))
            }
        }
        EstimatorConfig::SpreadDecay { points, every } => {
            let curves = per_stream(n, |stream| {
                let noise = system.realization(seed, stream);
                let segment = system.segment(&noise, horizon);
                let mut cloud: Vec<CirclePoint> =
                    (0..*points).map(|i| CirclePoint::new(i as f64 / *points as f64)).collect();
                let mut curve = vec![EmpiricalMeasure::from_points(cloud.clone()).spread()];
                for k in 0..horizon {
                    for x in &mut cloud {
                        *x = system.step(&segment, k, *x);
                    }
                    if (k + 1) % every == 0 || k + 1 == horizon {
                        curve.push(EmpiricalMeasure::from_points(cloud.clone()).spread());
                    }
                }
                curve
            });
            let steps: Vec<usize> = std::iter::once(0)
                .chain((1..=horizon).filter(|k| k % every == 0 || *k == horizon))
                .collect();
            let mut series = Table::new("step", vec!["median_spread".into(), "max_spread".into()]);
            for (j, step) in steps.iter().enumerate() {
                let mut column: Vec<f64> = curves.iter().map(|c| c[j]).collect();
                let max = column.iter().copied().fold(0.0, f64::max);
                series.rows.push((*step as u64, vec![median(&mut column), max]));
            }
            let last = series.rows.last().map(|r| r.1.clone()).unwrap_or_default();
            Output {
                series: Some(series),
                ..Output::success(json!({
                    "points": points,
                    "final_median_spread": last[0],
                    "final_max_spread": last[1],
                }))
            }
        }
        EstimatorConfig::Lyapunov { x } => {
            let values = per_stream(n, |stream| {
                lyapunov_exponent(system, &system.realization(seed, stream), *x, horizon)
            })
            .into_iter()
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|e| ConfigError::invalid("estimator.kind", e))?;
            let mean = values.iter().sum::<f64>() / n as f64;
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n.max(2) - 1) as f64;
            Output::success(json!({
                "x": x,
                "mean": mean,
                "std_error": (var / n as f64).sqrt(),
                "values": values,
            }))
        }
    };
    Ok(out)
}

/// Fractions of realizations in which each arc is contracted below `tol`
/// and covers all but `tol` of the circle, every 10 steps.
fn contraction_curves<S: RandomSystem>(system: &S, arcs: &[Arc], seed: u64, n: usize, horizon: usize, tol: f64) -> Table {
    const EVERY: usize = 10;
    let runs = per_stream(n, |stream| {
        let noise = system.realization(seed, stream);
        let segment = system.segment(&noise, horizon);
        let mut tracked: Vec<TrackedArc> = arcs.iter().map(|a| TrackedArc::new(*a)).collect();
        let mut rows = Vec::new();
        for k in 0..=horizon {
            if k > 0 {
                for t in &mut tracked {
                    t.map(|x| system.step(&segment, k - 1, x));
                }
            }
            if k % EVERY == 0 || k == horizon {
                rows.push(tracked.iter().map(|t| t.length()).collect::<Vec<f64>>());
            }
        }
        rows
    });
    let columns = (0..arcs.len())
        .flat_map(|i| [format!("contracted_{i}"), format!("covering_{i}")])
        .collect();
    let mut table = Table::new("step", columns);
    let steps = (0..=horizon).filter(|k| k % EVERY == 0 || *k == horizon);
    for (j, step) in steps.enumerate() {
        let row = (0..arcs.len())
            .flat_map(|i| {
                let small = runs.iter().filter(|r| r[j][i] < tol).count() as f64 / n as f64;
                let large = runs.iter().filter(|r| r[j][i] > 1.0 - tol).count() as f64 / n as f64;
                [small, large]
            })
            .collect();
        table.rows.push((step as u64, row));
    }
    table
}

fn gap_estimate(model: &SdeModel, config: &ExperimentConfig, x: f64, gap: f64) -> Output {
    let t = config.horizon as f64;
    let lo = Lift::new(x);
    let hi = lo.shift(gap);
    let initial = hi.to_bits() - lo.to_bits();
    let runs = per_stream(config.realizations, |stream| {
        let path = model.path(config.seed, stream);
        model
            .integrate_flow(&path, &[lo, hi], t)
            .map(|rows| rows.iter().map(|r| r[1].to_bits() - r[0].to_bits()).collect::<Vec<i128>>())
    });
    let errors: Vec<String> = runs.iter().filter_map(|r| r.as_ref().err().map(|e| e.to_string())).collect();
    let gaps: Vec<Vec<i128>> = runs.into_iter().filter_map(Result::ok).collect();
    let exact = gaps.iter().filter(|g| g.iter().all(|&v| v == initial)).count();
    let max_deviation = gaps
        .iter()
        .flatten()
        .map(|&v| Lift::from_bits(v - initial).value().abs())
        .fold(0.0, f64::max);
    let mut series = Table::new("step", vec!["time".into(), "min_gap".into(), "max_gap".into()]);
    if let Some(first) = gaps.first() {
        for k in 0..first.len() {
            let column = gaps.iter().map(|g| g[k]);
            let (min, max) = column.fold((i128::MAX, i128::MIN), |(a, b), v| (a.min(v), b.max(v)));
            series.rows.push((
                k as u64,
                vec![k as f64 * model.h(), Lift::from_bits(min).value(), Lift::from_bits(max).value()],
            ));
        }
    }
    Output {
        status: if errors.is_empty() {
            RunStatus::Success
        } else {
            RunStatus::Inconclusive
        },
        result: json!({
            "x": x,
            "gap": Lift::from_bits(initial).value(),
            "realizations": config.realizations,
            "exact_realizations": exact,
            "max_deviation": max_deviation,
            "errors": errors,
        }),
        series: Some(series),
        histogram: None,
    }
}
