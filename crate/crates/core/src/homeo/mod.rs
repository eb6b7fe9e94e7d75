//! Parametric orientation-preserving circle homeomorphisms.
//!
//! Every family is evaluated on fixed-point circle points (see
//! [`crate::circle`]) by adding a displacement to the input, so rotations are
//! exact and the image of an arc is the arc between the endpoint images.
//! Each family also exposes its lift displacement `F(x) - x`, a continuous
//! 1-periodic function, from which lifts and fixed points are derived.

mod fixed;
mod text;

use std::f64::consts::{PI, TAU};

use thiserror::Error;

use crate::circle::{d_plus_bits, offset_units, sin_cos_turns, CirclePoint};

pub use fixed::{FixedPoint, FixedPointSet, NotSimpleReason, SimpleClassification, Stability};
pub use text::ParseHomeoError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HomeoError {
    #[error("parameter `{name}` must be finite, got {value}")]
    NonFinite { name: &'static str, value: f64 },
    #[error("sine perturbation needs |eps| < 1/(2*pi), got {0}")]
    SineAmplitude(f64),
    #[error("Mobius parameter must satisfy |a| < 1, got |a| = {0}")]
    MobiusModulus(f64),
    #[error("piecewise-linear map needs at least two breakpoints, got {0}")]
    TooFewBreakpoints(usize),
    #[error("breakpoint {index}: {reason}")]
    Breakpoint { index: usize, reason: &'static str },
    #[error("composition must contain at least one map")]
    EmptyComposition,
}

fn finite(name: &'static str, value: f64) -> Result<f64, HomeoError> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(HomeoError::NonFinite { name, value })
    }
}

/// x ↦ x + α.
#[derive(Debug, Clone, PartialEq)]
pub struct Rotation {
    alpha: f64,
    units: u64,
}

impl Rotation {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// Lift F(x) = x + ε·sin(2πx).
#[derive(Debug, Clone, PartialEq)]
pub struct SinePerturbation {
    eps: f64,
}

impl SinePerturbation {
    pub fn eps(&self) -> f64 {
        self.eps
    }

    fn displacement(&self, x: f64) -> f64 {
        self.eps * sin_cos_turns(CirclePoint::new(x).to_bits()).0
    }

    fn derivative(&self, x: f64) -> f64 {
        1.0 + TAU * self.eps * sin_cos_turns(CirclePoint::new(x).to_bits()).1
    }

    fn point_displacement(&self, x: CirclePoint) -> f64 {
        self.eps * sin_cos_turns(x.to_bits()).0
    }

    /// Solves F(x) = y on the lift with x in `[y - |ε|, y + |ε|]`.
    fn solve(&self, y: f64) -> f64 {
        let e = self.eps.abs();
        let (mut lo, mut hi) = (y - e, y + e);
        let g = |x: f64| x + self.displacement(x) - y;
        // F is strictly increasing, so g(lo) <= 0 <= g(hi).
        for _ in 0..12 {
            let mid = 0.5 * (lo + hi);
            if g(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut x = 0.5 * (lo + hi);
        for _ in 0..8 {
            let step = g(x) / self.derivative(x);
            let next = (x - step).clamp(lo, hi);
            if next == x {
                break;
            }
            x = next;
        }
        x
    }
}

/// Boundary action of the disk automorphism z ↦ e^{2πiα}(z + a)/(1 + āz).
#[derive(Debug, Clone, PartialEq)]
pub struct Mobius {
    alpha: f64,
    alpha_units: u64,
    re: f64,
    im: f64,
}

impl Mobius {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn a(&self) -> (f64, f64) {
        (self.re, self.im)
    }

    /// arg(1 + c̄z) on the continuous branch, |c| < 1.
    fn half_turn_arg(re: f64, im: f64, x: f64) -> f64 {
        let (s, c) = sin_cos_turns(CirclePoint::new(x).to_bits());
        // c̄·z = (re - i·im)(cos + i·sin)
        let real = 1.0 + re * c + im * s;
        let imag = re * s - im * c;
        imag.atan2(real)
    }

    /// Displacement of the disk part only (without the rotation by α).
    fn disk_displacement(re: f64, im: f64, x: f64) -> f64 {
        -Self::half_turn_arg(re, im, x) / PI
    }

    fn derivative(&self, x: f64) -> f64 {
        let (s, c) = sin_cos_turns(CirclePoint::new(x).to_bits());
        let real = 1.0 + self.re * c + self.im * s;
        let imag = self.re * s - self.im * c;
        (1.0 - self.re * self.re - self.im * self.im) / (real * real + imag * imag)
    }
}

/// Circle map that is linear between consecutive breakpoints.
#[derive(Debug, Clone)]
pub struct PiecewiseLinear {
    breakpoints: Vec<(f64, f64)>,
    inputs: Vec<CirclePoint>,
    outputs: Vec<CirclePoint>,
    /// d₊(inputs[0], inputs[i]); strictly increasing.
    cum_in: Vec<u64>,
    /// d₊(outputs[0], outputs[i]); strictly increasing.
    cum_out: Vec<u64>,
    widths: Vec<u64>,
    heights: Vec<u64>,
}

impl PartialEq for PiecewiseLinear {
    fn eq(&self, other: &Self) -> bool {
        self.breakpoints == other.breakpoints
    }
}

impl PiecewiseLinear {
    fn new(breakpoints: Vec<(f64, f64)>) -> Result<Self, HomeoError> {
        let k = breakpoints.len();
        if k < 2 {
            return Err(HomeoError::TooFewBreakpoints(k));
        }
        for (index, &(x, y)) in breakpoints.iter().enumerate() {
            finite("breakpoint input", x)?;
            finite("breakpoint output", y)?;
            if !(0.0..1.0).contains(&x) || !(0.0..1.0).contains(&y) {
                return Err(HomeoError::Breakpoint {
                    index,
                    reason: "coordinates must lie in [0, 1)",
                });
            }
            if index > 0 && x <= breakpoints[index - 1].0 {
                return Err(HomeoError::Breakpoint {
                    index,
                    reason: "inputs must be strictly increasing",
                });
            }
        }
        let inputs: Vec<CirclePoint> = breakpoints.iter().map(|b| CirclePoint::new(b.0)).collect();
        let outputs: Vec<CirclePoint> = breakpoints.iter().map(|b| CirclePoint::new(b.1)).collect();
        let cum_in: Vec<u64> = inputs.iter().map(|&x| d_plus_bits(inputs[0], x)).collect();
        let cum_out: Vec<u64> = outputs.iter().map(|&y| d_plus_bits(outputs[0], y)).collect();
        for i in 1..k {
            if cum_in[i] <= cum_in[i - 1] {
                return Err(HomeoError::Breakpoint {
                    index: i,
                    reason: "inputs collide after projection",
                });
            }
            if cum_out[i] <= cum_out[i - 1] {
                return Err(HomeoError::Breakpoint {
                    index: i,
                    reason: "outputs are not in the same cyclic order as inputs",
                });
            }
        }
        let segment = |cum: &[u64], i: usize| {
            if i + 1 < k {
                cum[i + 1] - cum[i]
            } else {
                0u64.wrapping_sub(cum[i])
            }
        };
        let widths = (0..k).map(|i| segment(&cum_in, i)).collect();
        let heights = (0..k).map(|i| segment(&cum_out, i)).collect();
        Ok(PiecewiseLinear {
            breakpoints,
            inputs,
            outputs,
            cum_in,
            cum_out,
            widths,
            heights,
        })
    }

    pub fn breakpoints(&self) -> &[(f64, f64)] {
        &self.breakpoints
    }

    fn segment_of(cum: &[u64], t: u64) -> usize {
        cum.partition_point(|&c| c <= t) - 1
    }

    fn input_segment(&self, x: CirclePoint) -> (usize, u64) {
        let t = d_plus_bits(self.inputs[0], x);
        let i = Self::segment_of(&self.cum_in, t);
        (i, t - self.cum_in[i])
    }

    fn slope(&self, i: usize) -> f64 {
        self.heights[i] as f64 / self.widths[i] as f64
    }

    fn scale(t: u64, num: u64, den: u64) -> u64 {
        ((t as u128 * num as u128 + den as u128 / 2) / den as u128) as u64
    }

    fn apply(&self, x: CirclePoint) -> CirclePoint {
        let (i, t) = self.input_segment(x);
        self.outputs[i].offset_bits(Self::scale(t, self.heights[i], self.widths[i]))
    }

    fn apply_inverse(&self, y: CirclePoint) -> CirclePoint {
        let s = d_plus_bits(self.outputs[0], y);
        let i = Self::segment_of(&self.cum_out, s);
        let s = s - self.cum_out[i];
        self.inputs[i].offset_bits(Self::scale(s, self.widths[i], self.heights[i]))
    }

    /// Output lift offset at the first breakpoint, in (-1/2, 1/2].
    fn base_shift(&self) -> f64 {
        signed_turns(d_plus_bits(self.inputs[0], self.outputs[0]))
    }

    fn displacement(&self, x: CirclePoint) -> f64 {
        let (i, t) = self.input_segment(x);
        let out = self.cum_out[i] as f64 / crate::circle::TURN;
        let inp = self.cum_in[i] as f64 / crate::circle::TURN;
        let t = t as f64 / crate::circle::TURN;
        self.base_shift() + out - inp + (self.slope(i) - 1.0) * t
    }
}

/// Interprets a wrapping unit count as a signed fraction of a turn in (-1/2, 1/2].
pub(crate) fn signed_turns(units: u64) -> f64 {
    (units as i64) as f64 / crate::circle::TURN
}

/// An orientation-preserving circle homeomorphism from one of the supported
/// parametric families.
#[derive(Debug, Clone, PartialEq)]
pub enum HomeoSpec {
    Rotation(Rotation),
    Sine(SinePerturbation),
    Mobius(Mobius),
    PiecewiseLinear(PiecewiseLinear),
    /// Maps applied left to right.
    Composition(Vec<HomeoSpec>),
}

impl HomeoSpec {
    pub fn rotation(alpha: f64) -> Result<Self, HomeoError> {
        finite("alpha", alpha)?;
        Ok(HomeoSpec::Rotation(Rotation {
            alpha,
            units: offset_units(alpha),
        }))
    }

    pub fn sine(eps: f64) -> Result<Self, HomeoError> {
        finite("eps", eps)?;
        if eps.abs() >= 1.0 / TAU {
            return Err(HomeoError::SineAmplitude(eps));
        }
        Ok(HomeoSpec::Sine(SinePerturbation { eps }))
    }

    /// `a = re + i·im`.
    pub fn mobius(alpha: f64, re: f64, im: f64) -> Result<Self, HomeoError> {
        finite("alpha", alpha)?;
        finite("a.re", re)?;
        finite("a.im", im)?;
        let modulus = re.hypot(im);
        if modulus >= 1.0 {
            return Err(HomeoError::MobiusModulus(modulus));
        }
        Ok(HomeoSpec::Mobius(Mobius {
            alpha,
            alpha_units: offset_units(alpha),
            re,
            im,
        }))
    }

    /// Breakpoints `(input, output)`; inputs strictly increasing in `[0, 1)`,
    /// outputs in `[0, 1)` and in the same cyclic order.
    pub fn piecewise_linear(breakpoints: Vec<(f64, f64)>) -> Result<Self, HomeoError> {
        PiecewiseLinear::new(breakpoints).map(HomeoSpec::PiecewiseLinear)
    }

    pub fn compose(maps: Vec<HomeoSpec>) -> Result<Self, HomeoError> {
        if maps.is_empty() {
            return Err(HomeoError::EmptyComposition);
        }
        Ok(HomeoSpec::Composition(maps))
    }

    pub fn apply(&self, x: CirclePoint) -> CirclePoint {
        match self {
            HomeoSpec::Rotation(r) => x.offset_bits(r.units),
            HomeoSpec::Sine(s) => x.offset(s.point_displacement(x)),
            HomeoSpec::Mobius(m) => x
                .offset(Mobius::disk_displacement(m.re, m.im, x.value()))
                .offset_bits(m.alpha_units),
            HomeoSpec::PiecewiseLinear(p) => p.apply(x),
            HomeoSpec::Composition(maps) => maps.iter().fold(x, |acc, f| f.apply(acc)),
        }
    }

    pub fn apply_inverse(&self, y: CirclePoint) -> CirclePoint {
        match self {
            HomeoSpec::Rotation(r) => y.offset_bits(r.units.wrapping_neg()),
            HomeoSpec::Sine(s) => {
                let x = s.solve(y.value());
                y.offset(-s.displacement(x))
            }
            HomeoSpec::Mobius(m) => {
                // The inverse is the rotation by -α followed by the disk map with -a.
                let q = y.offset_bits(m.alpha_units.wrapping_neg());
                q.offset(Mobius::disk_displacement(-m.re, -m.im, q.value()))
            }
            HomeoSpec::PiecewiseLinear(p) => p.apply_inverse(y),
            HomeoSpec::Composition(maps) => maps.iter().rev().fold(y, |acc, f| f.apply_inverse(acc)),
        }
    }

    /// The lift displacement `F(x) - x` at `x`, continuous and 1-periodic.
    pub fn displacement(&self, x: CirclePoint) -> f64 {
        match self {
            HomeoSpec::Rotation(r) => r.alpha,
            HomeoSpec::Sine(s) => s.point_displacement(x),
            HomeoSpec::Mobius(m) => m.alpha + Mobius::disk_displacement(m.re, m.im, x.value()),
            HomeoSpec::PiecewiseLinear(p) => p.displacement(x),
            HomeoSpec::Composition(maps) => {
                let mut total = 0.0;
                let mut p = x;
                for f in maps {
                    total += f.displacement(p);
                    p = f.apply(p);
                }
                total
            }
        }
    }

    /// The lift F: ℝ → ℝ with the branch fixed by [`HomeoSpec::displacement`].
    pub fn lift(&self, x: f64) -> f64 {
        x + self.displacement(CirclePoint::new(x))
    }

    /// Derivative of the lift; right derivative at piecewise-linear breakpoints.
    pub fn derivative(&self, x: CirclePoint) -> f64 {
        match self {
            HomeoSpec::Rotation(_) => 1.0,
            HomeoSpec::Sine(s) => s.derivative(x.value()),
            HomeoSpec::Mobius(m) => m.derivative(x.value()),
            HomeoSpec::PiecewiseLinear(p) => p.slope(p.input_segment(x).0),
            HomeoSpec::Composition(maps) => {
                let mut slope = 1.0;
                let mut p = x;
                for f in maps {
                    slope *= f.derivative(p);
                    p = f.apply(p);
                }
                slope
            }
        }
    }

    pub(crate) fn left_derivative(&self, x: CirclePoint) -> f64 {
        match self {
            HomeoSpec::PiecewiseLinear(p) => {
                let (i, t) = p.input_segment(x);
                if t == 0 {
                    p.slope((i + p.widths.len() - 1) % p.widths.len())
                } else {
                    p.slope(i)
                }
            }
            _ => self.derivative(x),
        }
    }

    /// True when the map is an isometry (all derivatives are one).
    pub fn is_rotation(&self) -> bool {
        match self {
            HomeoSpec::Rotation(_) => true,
            HomeoSpec::Mobius(m) => m.re == 0.0 && m.im == 0.0,
            HomeoSpec::Sine(s) => s.eps == 0.0,
            HomeoSpec::PiecewiseLinear(p) => p.widths == p.heights,
            HomeoSpec::Composition(maps) => maps.iter().all(HomeoSpec::is_rotation),
        }
    }

    /// Image of an arc: the arc between the endpoint images.
    pub fn apply_arc(&self, arc: &crate::circle::Arc) -> crate::circle::Arc {
        crate::circle::Arc {
            start: self.apply(arc.start),
            end: self.apply(arc.end),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circle::{cyclic_order, d, d_plus, Arc, Orientation};
    use proptest::prelude::*;

    fn p(x: f64) -> CirclePoint {
        CirclePoint::new(x)
    }

    fn families() -> Vec<HomeoSpec> {
        vec![
            HomeoSpec::rotation(0.25).unwrap(),
            HomeoSpec::sine(0.1).unwrap(),
            HomeoSpec::sine(-0.15).unwrap(),
            HomeoSpec::mobius(0.0, 0.3, 0.1).unwrap(),
            HomeoSpec::mobius(0.37, -0.8, 0.2).unwrap(),
            HomeoSpec::piecewise_linear(vec![(0.0, 0.1), (0.5, 0.7)]).unwrap(),
            HomeoSpec::piecewise_linear(vec![(0.1, 0.9), (0.3, 0.95), (0.8, 0.4)]).unwrap(),
            "compose[sine(0.1), rotation(0.618), mobius(0.1, 0.2, -0.4)]".parse().unwrap(),
        ]
    }

    #[test]
    fn rotation_wraps() {
        let r = HomeoSpec::rotation(0.25).unwrap();
        assert!(d(r.apply(p(0.9)), p(0.15)) < 1e-15);
        assert!(d(r.apply_inverse(p(0.15)), p(0.9)) < 1e-15);
    }

    #[test]
    fn sine_fixes_zero_and_half() {
        let s = HomeoSpec::sine(0.1).unwrap();
        assert_eq!(s.apply(p(0.0)), p(0.0));
        assert!(d(s.apply(p(0.5)), p(0.5)) < 1e-16);
    }

    #[test]
    fn mobius_with_zero_a_is_rotation() {
        let m = HomeoSpec::mobius(0.3, 0.0, 0.0).unwrap();
        let r = HomeoSpec::rotation(0.3).unwrap();
        for i in 0..100 {
            let x = p(i as f64 / 100.0 + 0.003);
            assert_eq!(m.apply(x), r.apply(x));
        }
    }

    #[test]
    fn mobius_inverse_is_mobius_with_negated_a() {
        let m = HomeoSpec::mobius(0.0, 0.5, 0.0).unwrap();
        let inv = HomeoSpec::mobius(0.0, -0.5, 0.0).unwrap();
        let mut rng = 0x9e3779b97f4a7c15u64;
        for _ in 0..100 {
            rng = rng.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let y = CirclePoint::from_bits(rng);
            assert!(d(m.apply_inverse(y), inv.apply(y)) < 1e-14);
        }
    }

    #[test]
    fn mobius_matches_complex_formula() {
        use num_complex::Complex64;
        let (alpha, a) = (0.37, Complex64::new(-0.8, 0.2));
        let m = HomeoSpec::mobius(alpha, a.re, a.im).unwrap();
        for i in 0..50 {
            let x = i as f64 / 50.0 + 0.01;
            let z = Complex64::from_polar(1.0, TAU * x);
            let w = Complex64::from_polar(1.0, TAU * alpha) * (z + a) / (Complex64::new(1.0, 0.0) + a.conj() * z);
            let expected = p(w.arg() / TAU);
            assert!(d(m.apply(p(x)), expected) < 1e-13, "x = {x}");
        }
    }

    #[test]
    fn inverse_round_trips_for_every_family() {
        for f in families() {
            let x = p(0.37);
            assert!(d(f.apply_inverse(f.apply(x)), x) < 1e-12, "{f}");
        }
    }

    #[test]
    fn sine_derivative_matches_finite_differences() {
        let s = HomeoSpec::sine(0.1).unwrap();
        let h = 1e-6;
        for i in 0..256 {
            let x = i as f64 / 256.0;
            let numeric = (s.lift(x + h) - s.lift(x - h)) / (2.0 * h);
            assert!((numeric - (1.0 + TAU * 0.1 * (TAU * x).cos())).abs() < 1e-6);
            assert!((s.derivative(p(x)) - numeric).abs() < 1e-6);
        }
    }

    #[test]
    fn lift_derivatives_match_finite_differences() {
        let h = 1e-7;
        for f in families() {
            for i in 0..64 {
                let x = i as f64 / 64.0 + 0.0071;
                let numeric = (f.lift(x + h) - f.lift(x - h)) / (2.0 * h);
                assert!((numeric - f.derivative(p(x))).abs() < 1e-5, "{f} at {x}");
            }
        }
    }

    #[test]
    fn lift_is_consistent_with_apply() {
        for f in families() {
            for i in 0..64 {
                let x = i as f64 / 64.0 + 0.013;
                assert!(d(p(f.lift(x)), f.apply(p(x))) < 1e-12, "{f}");
            }
        }
    }

    #[test]
    fn piecewise_linear_example() {
        let f = HomeoSpec::piecewise_linear(vec![(0.0, 0.1), (0.5, 0.7)]).unwrap();
        assert!(d(f.apply(p(0.25)), p(0.4)) < 1e-15);
        assert!(d(f.apply(p(0.75)), p(0.9)) < 1e-15);
        assert!((f.derivative(p(0.25)) - 1.2).abs() < 1e-12);
        assert!((f.derivative(p(0.75)) - 0.8).abs() < 1e-12);
    }

    #[test]
    fn malformed_parameters_are_rejected() {
        assert!(matches!(HomeoSpec::mobius(0.0, 0.8, 0.8), Err(HomeoError::MobiusModulus(_))));
        assert!(matches!(HomeoSpec::sine(0.2), Err(HomeoError::SineAmplitude(_))));
        assert!(HomeoSpec::piecewise_linear(vec![(0.5, 0.1), (0.2, 0.7)]).is_err());
        // outputs out of cyclic order
        assert!(HomeoSpec::piecewise_linear(vec![(0.0, 0.1), (0.3, 0.7), (0.6, 0.5)]).is_err());
        assert!(HomeoSpec::compose(vec![]).is_err());
        assert!(HomeoSpec::rotation(f64::NAN).is_err());
    }

    #[test]
    fn composition_applies_left_to_right() {
        let f = HomeoSpec::sine(0.1).unwrap();
        let g = HomeoSpec::mobius(0.2, 0.4, 0.0).unwrap();
        let fg = HomeoSpec::compose(vec![f.clone(), g.clone()]).unwrap();
        for i in 0..100 {
            let x = p(i as f64 / 100.0);
            assert_eq!(fg.apply(x), g.apply(f.apply(x)));
        }
    }

    fn ordered_triple() -> impl Strategy<Value = (CirclePoint, CirclePoint, CirclePoint)> {
        (any::<u64>(), 1u64..u64::MAX / 3, 1u64..u64::MAX / 3).prop_map(|(x, a, b)| {
            let x = CirclePoint::from_bits(x);
            let y = CirclePoint::from_bits(x.to_bits().wrapping_add(a));
            let z = CirclePoint::from_bits(y.to_bits().wrapping_add(b));
            (x, y, z)
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn orientation_is_preserved((x, y, z) in ordered_triple(), which in 0usize..8) {
            // Triples are separated by at least 2^-44 so rounding cannot merge images.
            prop_assume!(d(x, y) > 1e-9 && d(y, z) > 1e-9 && d(x, z) > 1e-9);
            let f = &families()[which];
            prop_assert_eq!(cyclic_order(x, y, z), Orientation::Positive);
            prop_assert_eq!(cyclic_order(f.apply(x), f.apply(y), f.apply(z)), Orientation::Positive);
        }

        #[test]
        fn arc_image_length_is_endpoint_distance(start in any::<u64>(), len in 1e-6f64..0.999, which in 0usize..8) {
            let f = &families()[which];
            let arc = Arc::from_start(CirclePoint::from_bits(start), len);
            let image = f.apply_arc(&arc);
            prop_assert_eq!(image.length(), d_plus(f.apply(arc.start), f.apply(arc.end)));
            prop_assert!(image.length() > 0.0 && image.length() < 1.0);
            // interior points land inside the image arc
            prop_assert!(image.contains(f.apply(arc.midpoint())));
        }

        #[test]
        fn inverse_round_trip(x in any::<u64>(), which in 0usize..8) {
            let f = &families()[which];
            let x = CirclePoint::from_bits(x);
            let tol = match f {
                HomeoSpec::PiecewiseLinear(_) | HomeoSpec::Composition(_) => 1e-9,
                _ => 1e-12,
            };
            prop_assert!(d(f.apply_inverse(f.apply(x)), x) < tol);
            prop_assert!(d(f.apply(f.apply_inverse(x)), x) < tol);
        }
    }
}
