//! Fixed points and the simple-map classification.

use num_complex::Complex64;
use serde::Serialize;

use super::{signed_turns, HomeoSpec};
use crate::circle::{d, d_plus_bits, CirclePoint, TURN};

/// Fixed points separated by less than this are treated as one.
const MERGE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    Attracting,
    Repelling,
    Neutral,
}

impl Stability {
    fn from_slopes(left: f64, right: f64) -> Self {
        const EPS: f64 = 1e-12;
        if left < 1.0 - EPS && right < 1.0 - EPS {
            Stability::Attracting
        } else if left > 1.0 + EPS && right > 1.0 + EPS {
            Stability::Repelling
        } else {
            Stability::Neutral
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FixedPoint {
    pub point: CirclePoint,
    pub stability: Stability,
    /// Lift derivative at the point (right derivative for piecewise-linear maps).
    pub derivative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "points")]
pub enum FixedPointSet {
    /// The map is the identity.
    All,
    /// Some but not all points are fixed, and the fixed set is not discrete.
    Continuum,
    /// Isolated fixed points, sorted by position.
    Points(Vec<FixedPoint>),
}

impl FixedPointSet {
    pub fn points(&self) -> &[FixedPoint] {
        match self {
            FixedPointSet::Points(v) => v,
            _ => &[],
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, FixedPointSet::Points(v) if v.is_empty())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NotSimpleReason {
    /// The map has this many isolated fixed points instead of two.
    FixedPointCount(usize),
    NonIsolatedFixedPoints,
    /// Two fixed points, but orbits do not all converge to one of them.
    NoGlobalAttractor,
}

/// Outcome of [`HomeoSpec::classify_simple`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "verdict")]
pub enum SimpleClassification {
    Simple {
        repeller: CirclePoint,
        attractor: CirclePoint,
    },
    NotSimple {
        reason: NotSimpleReason,
    },
    /// Some test orbits had not settled by the horizon.
    Inconclusive {
        unconverged: usize,
    },
}

impl SimpleClassification {
    pub fn is_simple(&self) -> bool {
        matches!(self, SimpleClassification::Simple { .. })
    }

    pub fn repeller(&self) -> Option<CirclePoint> {
        match self {
            SimpleClassification::Simple { repeller, .. } => Some(*repeller),
            _ => None,
        }
    }

    pub fn attractor(&self) -> Option<CirclePoint> {
        match self {
            SimpleClassification::Simple { attractor, .. } => Some(*attractor),
            _ => None,
        }
    }
}

impl HomeoSpec {
    fn labelled(&self, point: CirclePoint) -> FixedPoint {
        let right = self.derivative(point);
        let left = self.left_derivative(point);
        FixedPoint {
            point,
            stability: Stability::from_slopes(left, right),
            derivative: right,
        }
    }

    /// All solutions of `f(x) = x`, labelled by the lift derivative.
    ///
    /// Closed forms are used for rotations, sine perturbations, Möbius maps
    /// and piecewise-linear maps. Compositions fall back to sign changes of
    /// the displacement on a 4096-cell grid refined by bisection, which can
    /// miss tangential fixed points.
    pub fn fixed_points(&self) -> FixedPointSet {
        let mut set = match self {
            HomeoSpec::Rotation(r) => {
                if r.units == 0 {
                    FixedPointSet::All
                } else {
                    FixedPointSet::Points(vec![])
                }
            }
            HomeoSpec::Sine(s) => {
                if s.eps == 0.0 {
                    FixedPointSet::All
                } else {
                    FixedPointSet::Points(
                        [0.0, 0.5]
                            .iter()
                            .map(|&x| self.labelled(CirclePoint::new(x)))
                            .collect(),
                    )
                }
            }
            HomeoSpec::Mobius(m) => self.mobius_fixed_points(m.alpha, m.re, m.im),
            HomeoSpec::PiecewiseLinear(_) => self.pwl_fixed_points(),
            HomeoSpec::Composition(_) => self.numeric_fixed_points(4096),
        };
        if let FixedPointSet::Points(v) = &mut set {
            v.sort_by_key(|f| f.point.to_bits());
            v.dedup_by(|a, b| d(a.point, b.point) < MERGE_TOL);
            if v.len() > 1 && d(v[0].point, v[v.len() - 1].point) < MERGE_TOL {
                v.pop();
            }
        }
        set
    }

    fn mobius_fixed_points(&self, alpha: f64, re: f64, im: f64) -> FixedPointSet {
        let a = Complex64::new(re, im);
        let e = Complex64::from_polar(1.0, std::f64::consts::TAU * alpha);
        if a.norm() == 0.0 {
            return if offset_is_zero(alpha) {
                FixedPointSet::All
            } else {
                FixedPointSet::Points(vec![])
            };
        }
        // e(z + a) = z(1 + āz)  ⇔  ā z² + (1 - e) z - e a = 0
        let qa = a.conj();
        let qb = Complex64::new(1.0, 0.0) - e;
        let qc = -e * a;
        let disc = (qb * qb - 4.0 * qa * qc).sqrt();
        let roots = [(-qb + disc) / (2.0 * qa), (-qb - disc) / (2.0 * qa)];
        let points = roots
            .iter()
            .filter(|z| (z.norm() - 1.0).abs() < 1e-7)
            .map(|z| {
                let guess = CirclePoint::new(z.arg() / std::f64::consts::TAU);
                self.labelled(self.newton_polish(guess))
            })
            .collect();
        FixedPointSet::Points(points)
    }

    fn pwl_fixed_points(&self) -> FixedPointSet {
        let HomeoSpec::PiecewiseLinear(p) = self else {
            unreachable!()
        };
        let k = p.widths.len();
        let mut points = Vec::new();
        let mut fixed_segments = 0;
        for i in 0..k {
            // On segment i, with t ∈ [0, w): F(x) - x ≡ shift + (s - 1) t (mod 1).
            let shift = signed_turns(d_plus_bits(p.inputs[i], p.outputs[i]));
            let w = p.widths[i] as f64 / TURN;
            let s = p.slope(i);
            if p.widths[i] == p.heights[i] {
                if d_plus_bits(p.inputs[i], p.outputs[i]) == 0 {
                    fixed_segments += 1;
                }
                continue;
            }
            let (lo, hi) = {
                let end = shift + (s - 1.0) * w;
                (shift.min(end), shift.max(end))
            };
            let mut m = lo.ceil();
            while m <= hi {
                let t = (m - shift) / (s - 1.0);
                if (0.0..w).contains(&t) {
                    points.push(self.labelled(p.inputs[i].offset(t)));
                }
                m += 1.0;
            }
        }
        if fixed_segments == k {
            FixedPointSet::All
        } else if fixed_segments > 0 {
            FixedPointSet::Continuum
        } else {
            FixedPointSet::Points(points)
        }
    }

    /// Signed wrapped displacement `f(x) - x` in (-1/2, 1/2].
    fn wrapped_displacement(&self, x: CirclePoint) -> f64 {
        signed_turns(d_plus_bits(x, self.apply(x)))
    }

    fn numeric_fixed_points(&self, grid: usize) -> FixedPointSet {
        let sample = |i: usize| CirclePoint::from_bits(((i as u128) << 64).div_euclid(grid as u128) as u64);
        let values: Vec<f64> = (0..grid).map(|i| self.wrapped_displacement(sample(i))).collect();
        if values.iter().all(|v| v.abs() < 1e-14) {
            return FixedPointSet::All;
        }
        let mut points = Vec::new();
        for i in 0..grid {
            let j = (i + 1) % grid;
            let (va, vb) = (values[i], values[j]);
            // Large jumps are the ±1/2 wrap, not a root.
            if va.abs() > 0.25 || vb.abs() > 0.25 {
                continue;
            }
            if va == 0.0 {
                points.push(self.labelled(sample(i)));
            } else if va.signum() != vb.signum() && vb != 0.0 {
                let mut lo = sample(i);
                let mut width = d_plus_bits(lo, sample(j));
                while width > 1 {
                    let mid = lo.offset_bits(width / 2);
                    if self.wrapped_displacement(mid).signum() == va.signum() {
                        lo = mid;
                        width -= width / 2;
                    } else {
                        width /= 2;
                    }
                }
                points.push(self.labelled(lo));
            }
        }
        FixedPointSet::Points(points)
    }

    fn newton_polish(&self, mut x: CirclePoint) -> CirclePoint {
        for _ in 0..4 {
            let g = self.wrapped_displacement(x);
            let slope = self.derivative(x) - 1.0;
            if g == 0.0 || slope.abs() < 1e-12 {
                break;
            }
            x = x.offset(-g / slope);
        }
        x
    }

    /// Three-valued test of the simple property: exactly two fixed points
    /// `r != a`, and a grid of 64 test points (excluding `r`) all within
    /// `tol` of `a` after `horizon` iterations.
    pub fn classify_simple(&self, horizon: usize, tol: f64) -> SimpleClassification {
        let points = match self.fixed_points() {
            FixedPointSet::Points(v) => v,
            _ => {
                return SimpleClassification::NotSimple {
                    reason: NotSimpleReason::NonIsolatedFixedPoints,
                }
            }
        };
        if points.len() != 2 {
            return SimpleClassification::NotSimple {
                reason: NotSimpleReason::FixedPointCount(points.len()),
            };
        }
        let mut fewest_unconverged = usize::MAX;
        for (r, a) in [(points[0].point, points[1].point), (points[1].point, points[0].point)] {
            let unconverged = (0..64)
                .filter(|i| {
                    let mut x = r.offset((*i as f64 + 0.5) / 64.0);
                    for _ in 0..horizon {
                        x = self.apply(x);
                    }
                    d(x, a) >= tol
                })
                .count();
            if unconverged == 0 {
                return SimpleClassification::Simple {
                    repeller: r,
                    attractor: a,
                };
            }
            fewest_unconverged = fewest_unconverged.min(unconverged);
        }
        let labels: Vec<Stability> = points.iter().map(|p| p.stability).collect();
        if labels.contains(&Stability::Attracting) && labels.contains(&Stability::Repelling) {
            SimpleClassification::Inconclusive {
                unconverged: fewest_unconverged,
            }
        } else if labels.iter().all(|s| *s != Stability::Neutral) {
            SimpleClassification::NotSimple {
                reason: NotSimpleReason::NoGlobalAttractor,
            }
        } else {
            SimpleClassification::Inconclusive {
                unconverged: fewest_unconverged,
            }
        }
    }
}

fn offset_is_zero(alpha: f64) -> bool {
    crate::circle::offset_units(alpha) == 0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64) -> CirclePoint {
        CirclePoint::new(x)
    }

    #[test]
    fn sine_fixed_points_and_stability() {
        let f = HomeoSpec::sine(0.1).unwrap();
        let fp = f.fixed_points();
        let pts = fp.points();
        assert_eq!(pts.len(), 2);
        assert_eq!(pts[0].point, p(0.0));
        assert_eq!(pts[0].stability, Stability::Repelling);
        assert!((pts[0].derivative - (1.0 + 0.2 * std::f64::consts::PI)).abs() < 1e-12);
        assert_eq!(pts[1].point, p(0.5));
        assert_eq!(pts[1].stability, Stability::Attracting);
    }

    #[test]
    fn rotation_fixed_points() {
        assert_eq!(HomeoSpec::rotation(0.3).unwrap().fixed_points(), FixedPointSet::Points(vec![]));
        assert_eq!(HomeoSpec::rotation(0.0).unwrap().fixed_points(), FixedPointSet::All);
        assert_eq!(HomeoSpec::rotation(1.0).unwrap().fixed_points(), FixedPointSet::All);
    }

    #[test]
    fn hyperbolic_mobius_has_attractor_and_repeller() {
        let f = HomeoSpec::mobius(0.0, 0.5, 0.0).unwrap();
        let fp = f.fixed_points();
        let pts = fp.points();
        assert_eq!(pts.len(), 2);
        // z ↦ (z + 1/2)/(1 + z/2) fixes ±1; +1 attracts.
        assert_eq!(pts[0].point, p(0.0));
        assert_eq!(pts[0].stability, Stability::Attracting);
        assert!(d(pts[1].point, p(0.5)) < 1e-14);
        assert_eq!(pts[1].stability, Stability::Repelling);
        for fp in pts {
            assert!(d(f.apply(fp.point), fp.point) < 1e-14);
        }
    }

    #[test]
    fn elliptic_mobius_has_no_fixed_points() {
        let f = HomeoSpec::mobius(0.3, 0.1, 0.0).unwrap();
        assert!(f.fixed_points().is_empty());
    }

    #[test]
    fn piecewise_linear_fixed_points() {
        // Slope 2 on [0, 1/4), slope 2/3 on [1/4, 1): only 0 is fixed.
        let f = HomeoSpec::piecewise_linear(vec![(0.0, 0.0), (0.25, 0.5)]).unwrap();
        let fp = f.fixed_points();
        let pts = fp.points();
        assert_eq!(pts.len(), 1);
        assert_eq!(pts[0].point, p(0.0));
        // left slope 2/3, right slope 2
        assert_eq!(pts[0].stability, Stability::Neutral);

        let g = HomeoSpec::piecewise_linear(vec![(0.1, 0.05), (0.6, 0.75)]).unwrap();
        for fp in g.fixed_points().points() {
            assert!(d(g.apply(fp.point), fp.point) < 1e-15);
        }
        assert_eq!(g.fixed_points().points().len(), 2);
    }

    #[test]
    fn identity_like_maps_fix_everything() {
        let f: HomeoSpec = "compose[rotation(0.25), rotation(0.75)]".parse().unwrap();
        assert_eq!(f.fixed_points(), FixedPointSet::All);
        let g = HomeoSpec::piecewise_linear(vec![(0.0, 0.0), (0.5, 0.5)]).unwrap();
        assert_eq!(g.fixed_points(), FixedPointSet::All);
        let h = HomeoSpec::piecewise_linear(vec![(0.0, 0.0), (0.25, 0.25), (0.5, 0.75)]).unwrap();
        assert_eq!(h.fixed_points(), FixedPointSet::Continuum);
    }

    #[test]
    fn composition_fixed_points_agree_with_conjugated_sine() {
        let f: HomeoSpec = "compose[rotation(0.95), sine(0.1), rotation(0.05)]".parse().unwrap();
        let fp = f.fixed_points();
        let pts = fp.points();
        assert_eq!(pts.len(), 2);
        assert!(d(pts[0].point, p(0.05)) < 1e-12);
        assert_eq!(pts[0].stability, Stability::Repelling);
        assert!(d(pts[1].point, p(0.55)) < 1e-12);
        assert_eq!(pts[1].stability, Stability::Attracting);
    }

    #[test]
    fn classify_simple_examples() {
        let s = HomeoSpec::sine(0.1).unwrap().classify_simple(1000, 1e-9);
        assert_eq!(
            s,
            SimpleClassification::Simple {
                repeller: p(0.0),
                attractor: p(0.5)
            }
        );
        assert_eq!(
            HomeoSpec::rotation(0.3).unwrap().classify_simple(1000, 1e-9),
            SimpleClassification::NotSimple {
                reason: NotSimpleReason::FixedPointCount(0)
            }
        );
        assert_eq!(
            HomeoSpec::rotation(0.0).unwrap().classify_simple(1000, 1e-9),
            SimpleClassification::NotSimple {
                reason: NotSimpleReason::NonIsolatedFixedPoints
            }
        );
        // Too short a horizon is not a claim of non-simplicity.
        assert!(matches!(
            HomeoSpec::sine(0.01).unwrap().classify_simple(3, 1e-9),
            SimpleClassification::Inconclusive { .. }
        ));
    }

    #[test]
    fn mobius_is_simple() {
        let c = HomeoSpec::mobius(0.0, 0.5, 0.0).unwrap().classify_simple(2000, 1e-9);
        assert!(c.is_simple());
        assert_eq!(c.attractor(), Some(p(0.0)));
    }
}
