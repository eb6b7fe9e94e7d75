//! Named scenarios, each a complete [`ExperimentConfig`].

use crate::analysis::{Direction, CONTRACT_TOL, SYNC_TOL};
use crate::circle::{Arc, CirclePoint};
use crate::config::{
    CheckConfig, ConfigError, EquivarianceConfig, EstimatorConfig, ExperimentConfig, MartingaleConfig,
    OccupationConfig, OutputConfig, StabilityConfig, SystemConfig,
};
use crate::homeo::HomeoSpec;

/// `(name, description)` for every preset.
pub const PRESETS: &[(&str, &str)] = &[
    ("kn04-sync", "rotation and sine map at equal weights: stable synchronisation"),
    ("rotations-nosync", "two irrational rotations: minimal but never synchronising"),
    ("sde-sine1", "circle SDE with drift sin(2πx): paths synchronise"),
    ("sde-sine2-gap", "circle SDE with drift sin(4πx): a gap of 1/2 never changes"),
    ("det-simple", "the sine map alone: synchronising, unstable at the repeller"),
    ("invariant-arc", "two sine maps sharing the invariant arc [0.25, 0.75]"),
    ("crack-law", "distribution of crack points for the rotation and sine model"),
    ("pair-estimate", "pullback attractor and repeller for the rotation and sine model"),
    ("lemma34", "contraction probabilities against the reverse-stationary measure"),
    ("birkhoff", "time averages against the stationary mass of an arc"),
    ("spread-decay", "spread of an evolved point cloud over time"),
];

fn p(x: f64) -> CirclePoint {
    CirclePoint::new(x)
}

fn g(text: &str) -> HomeoSpec {
    text.parse().expect("preset generators parse")
}

fn kn04() -> SystemConfig {
    SystemConfig::Ifs {
        generators: vec![g("rotation(0.6180339887)"), g("sine(0.1)")],
        weights: Some(vec![0.5, 0.5]),
    }
}

fn kn04_checks() -> Vec<CheckConfig> {
    vec![
        CheckConfig::NoDeterministicFixedPoint,
        CheckConfig::SimpleGenerator {
            horizon: 1000,
            tol: 1e-9,
        },
        CheckConfig::Minimality {
            direction: Direction::Reverse,
            grid: 256,
            word_length: 4096,
            expect: true,
        },
    ]
}

fn sde(drift: &str) -> SystemConfig {
    SystemConfig::Sde {
        drift: drift.into(),
        sigma: 1.0,
        h: 1.0 / 256.0,
    }
}

fn config(name: &str, seed: u64, realizations: usize, horizon: usize, system: SystemConfig, estimator: EstimatorConfig, checks: Vec<CheckConfig>) -> ExperimentConfig {
    ExperimentConfig {
        name: name.into(),
        seed,
        realizations,
        horizon,
        system,
        estimator,
        checks,
        output: OutputConfig::default(),
    }
}

fn stationary(realizations: usize) -> OccupationConfig {
    OccupationConfig {
        start: p(0.123),
        burn_in: 100,
        samples: 1000,
        realizations,
        bins: 64,
    }
}

pub fn preset(name: &str) -> Result<ExperimentConfig, ConfigError> {
    let c = match name {
        "kn04-sync" => {
            let mut checks = kn04_checks();
            checks.push(CheckConfig::Compressibility {
                arcs: vec![
                    Arc::new(0.0, 0.5),
                    Arc::new(0.2, 0.4),
                    Arc::new(0.5, 0.9),
                    Arc::new(0.7, 0.3),
                    Arc::new(0.9, 0.85),
                ],
                realizations: 100,
                horizon: 100,
                expect: true,
            });
            config(
                name,
                1,
                500,
                500,
                kn04(),
                EstimatorConfig::Sync {
                    pairs: vec![[p(0.1), p(0.6)]],
                    tol: SYNC_TOL,
                    stability: Some(StabilityConfig {
                        point: p(0.3),
                        radii: vec![0.1, 0.01, 0.001],
                        tol: CONTRACT_TOL,
                    }),
                },
                checks,
            )
        }
        "rotations-nosync" => config(
            name,
            1,
            500,
            500,
            SystemConfig::Ifs {
                generators: vec![g("rotation(0.6180339887)"), g("rotation(0.4142135624)")],
                weights: None,
            },
            EstimatorConfig::Sync {
                pairs: vec![[p(0.1), p(0.35)]],
                tol: SYNC_TOL,
                stability: None,
            },
            vec![
                CheckConfig::NoDeterministicFixedPoint,
                CheckConfig::Minimality {
                    direction: Direction::Reverse,
                    grid: 256,
                    word_length: 4096,
                    expect: true,
                },
                CheckConfig::Compressibility {
                    arcs: vec![Arc::new(0.1, 0.6)],
                    realizations: 100,
                    horizon: 100,
                    expect: false,
                },
            ],
        ),
        "sde-sine1" => config(
            name,
            1,
            500,
            50,
            sde("sine:1"),
            EstimatorConfig::Sync {
                pairs: vec![[p(0.1), p(0.6)]],
                tol: CONTRACT_TOL,
                stability: None,
            },
            vec![
                CheckConfig::LeastPeriod { expect: 1 },
                CheckConfig::Witness {
                    arc: Arc::new(0.1, 0.4),
                    eta: 100.0,
                },
            ],
        ),
        "sde-sine2-gap" => config(
            name,
            1,
            20,
            50,
            sde("sine:2"),
            EstimatorConfig::Gap { x: 0.2, gap: 0.5 },
            vec![CheckConfig::LeastPeriod { expect: 2 }],
        ),
        "det-simple" => config(
            name,
            1,
            4,
            500,
            SystemConfig::Ifs {
                generators: vec![g("sine(0.1)")],
                weights: None,
            },
            EstimatorConfig::Sync {
                pairs: vec![[p(0.1), p(0.3)], [p(0.6), p(0.9)], [p(0.2), p(0.8)]],
                tol: SYNC_TOL,
                stability: Some(StabilityConfig {
                    point: p(0.0),
                    radii: vec![0.01, 0.001],
                    tol: CONTRACT_TOL,
                }),
            },
            vec![CheckConfig::SimpleGenerator {
                horizon: 1000,
                tol: 1e-9,
            }],
        ),
        "invariant-arc" => config(
            name,
            1,
            500,
            500,
            SystemConfig::Ifs {
                generators: vec![g("sine(0.1)"), g("compose[rotation(0.95), sine(0.1), rotation(0.05)]")],
                weights: None,
            },
            EstimatorConfig::Sync {
                // pairs inside the arc first, then pairs reaching outside it
                pairs: vec![
                    [p(0.3), p(0.7)],
                    [p(0.26), p(0.74)],
                    [p(0.1), p(0.9)],
                    [p(0.02), p(0.6)],
                    [p(0.01), p(0.04)],
                ],
                tol: SYNC_TOL,
                stability: None,
            },
            vec![
                CheckConfig::InvariantArc {
                    arc: Arc::new(0.25, 0.75),
                },
                CheckConfig::NoDeterministicFixedPoint,
                CheckConfig::Compressibility {
                    arcs: vec![Arc::new(0.25, 0.75)],
                    realizations: 10,
                    horizon: 10,
                    expect: true,
                },
            ],
        ),
        "crack-law" => config(
            name,
            1,
            500,
            2000,
            kn04(),
            EstimatorConfig::CrackLaw {
                tol: CONTRACT_TOL,
                bins: 64,
                equivariance: Some(EquivarianceConfig {
                    realizations: 50,
                    shift: 2,
                }),
            },
            kn04_checks(),
        ),
        "pair-estimate" => config(
            name,
            1,
            100,
            2000,
            kn04(),
            EstimatorConfig::Pair {
                depths: vec![500, 1000, 2000],
                anchors: [p(0.25), p(0.75)],
                anchor_tol: 1e-8,
                contract_tol: CONTRACT_TOL,
                cloud_time: 500,
                cloud_points: 256,
                equivariance_shift: Some(1),
            },
            kn04_checks(),
        ),
        "lemma34" => config(
            name,
            1,
            2000,
            2000,
            kn04(),
            EstimatorConfig::Lemma34 {
                arcs: vec![Arc::new(0.0, 0.5), Arc::new(0.5, 0.0)],
                tol: CONTRACT_TOL,
                stationary: stationary(2000),
                martingale: Some(MartingaleConfig {
                    arc: Arc::new(0.0, 0.5),
                    s: 20,
                    t: 20,
                    continuations: 2000,
                    prefixes: 10,
                }),
            },
            kn04_checks(),
        ),
        "birkhoff" => {
            let mut checks = kn04_checks();
            checks.push(CheckConfig::BoundaryNotFixed {
                arc: Arc::new(0.0, 0.5),
            });
            config(
                name,
                1,
                1,
                100_000,
                kn04(),
                EstimatorConfig::Birkhoff {
                    starts: vec![p(0.1), p(0.7)],
                    arc: Arc::new(0.0, 0.5),
                    every: 1000,
                    stationary: stationary(1000),
                },
                checks,
            )
        }
        "spread-decay" => config(
            name,
            1,
            20,
            500,
            kn04(),
            EstimatorConfig::SpreadDecay { points: 256, every: 10 },
            kn04_checks(),
        ),
        other => return Err(ConfigError::UnknownPreset(other.into())),
    };
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_listed_preset_builds_and_round_trips() {
        for (name, _) in PRESETS {
            let c = preset(name).unwrap();
            assert_eq!(c.name, *name);
            c.validate().unwrap();
            assert_eq!(ExperimentConfig::from_toml(&c.to_toml()).unwrap(), c, "{name}");
        }
    }

    #[test]
    fn unknown_names_are_rejected() {
        assert!(matches!(preset("kn05"), Err(ConfigError::UnknownPreset(_))));
    }
}
