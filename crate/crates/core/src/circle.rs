//! Circle arithmetic on ℝ/ℤ.
//!
//! Points are stored as 64-bit fixed-point fractions of a full turn, so that
//! adding a constant is an exact isometry and the anticlockwise distance is a
//! single wrapping subtraction. Conversions to and from `f64` round to
//! nearest; a conversion that would produce exactly `1.0` produces `0.0`.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// 2^64 as a float; one full turn in fixed-point units.
pub(crate) const TURN: f64 = 18_446_744_073_709_551_616.0;

/// Largest `f64` strictly below one. Lengths of arcs whose image covers the
/// circle up to rounding are reported as this value.
pub const ALMOST_ONE: f64 = 1.0 - f64::EPSILON / 2.0;

/// Converts a real offset into fixed-point units modulo one turn.
pub(crate) fn offset_units(delta: f64) -> u64 {
    debug_assert!(delta.is_finite(), "non-finite circle offset {delta}");
    let reduced = delta - delta.round();
    ((reduced * TURN).round() as i128) as u64
}

/// Converts fixed-point units (as a fraction of a turn) to a float in `[0, 1)`.
pub(crate) fn units_to_unit_interval(units: u64) -> f64 {
    let v = units as f64 / TURN;
    if v >= 1.0 {
        ALMOST_ONE
    } else {
        v
    }
}

/// `(sin 2πx, cos 2πx)` for the point with fixed-point fraction `bits`.
///
/// The angle is reduced exactly to the nearest quarter turn first, so the
/// result vanishes exactly at multiples of a quarter turn.
pub(crate) fn sin_cos_turns(bits: u64) -> (f64, f64) {
    let q = (bits.wrapping_add(1 << 61) >> 62) & 3;
    let r = bits.wrapping_sub(q << 62) as i64 as f64 / TURN;
    let (s, c) = (std::f64::consts::TAU * r).sin_cos();
    match q {
        0 => (s, c),
        1 => (c, -s),
        2 => (-s, -c),
        _ => (-c, s),
    }
}

/// A point of the circle ℝ/ℤ.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct CirclePoint(u64);

impl CirclePoint {
    pub const ZERO: CirclePoint = CirclePoint(0);

    /// Projects a real number onto the circle.
    ///
    /// # Panics
    /// Panics if `x` is not finite.
    pub fn new(x: f64) -> Self {
        assert!(x.is_finite(), "cannot project non-finite value {x}");
        let frac = x - x.floor();
        let scaled = (frac * TURN).round();
        if scaled >= TURN {
            CirclePoint(0)
        } else {
            CirclePoint(scaled as u64)
        }
    }

    pub const fn from_bits(bits: u64) -> Self {
        CirclePoint(bits)
    }

    pub const fn to_bits(self) -> u64 {
        self.0
    }

    /// The representative in `[0, 1)`.
    pub fn value(self) -> f64 {
        let v = self.0 as f64 / TURN;
        if v >= 1.0 {
            0.0
        } else {
            v
        }
    }

    /// Moves the point anticlockwise by `delta` (clockwise if negative).
    #[must_use]
    pub fn offset(self, delta: f64) -> Self {
        CirclePoint(self.0.wrapping_add(offset_units(delta)))
    }

    #[must_use]
    pub(crate) fn offset_bits(self, units: u64) -> Self {
        CirclePoint(self.0.wrapping_add(units))
    }

    /// The point diametrically opposite.
    #[must_use]
    pub fn antipode(self) -> Self {
        CirclePoint(self.0.wrapping_add(1 << 63))
    }
}

impl fmt::Debug for CirclePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CirclePoint({})", self.value())
    }
}

impl fmt::Display for CirclePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.value(), f)
    }
}

impl From<f64> for CirclePoint {
    fn from(x: f64) -> Self {
        CirclePoint::new(x)
    }
}

impl Serialize for CirclePoint {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.value())
    }
}

impl<'de> Deserialize<'de> for CirclePoint {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let x = f64::deserialize(deserializer)?;
        if !x.is_finite() {
            return Err(serde::de::Error::custom("circle point must be finite"));
        }
        Ok(CirclePoint::new(x))
    }
}

/// Projection π: ℝ → ℝ/ℤ.
pub fn project(x: f64) -> CirclePoint {
    CirclePoint::new(x)
}

/// Anticlockwise distance in fixed-point units.
pub fn d_plus_bits(x: CirclePoint, y: CirclePoint) -> u64 {
    y.0.wrapping_sub(x.0)
}

/// Anticlockwise distance d₊(x, y) = min{r ≥ 0 : π(x' + r) = y}, in `[0, 1)`.
pub fn d_plus(x: CirclePoint, y: CirclePoint) -> f64 {
    units_to_unit_interval(d_plus_bits(x, y))
}

/// The circle metric, in `[0, 1/2]`.
pub fn d(x: CirclePoint, y: CirclePoint) -> f64 {
    let forward = d_plus_bits(x, y);
    let backward = d_plus_bits(y, x);
    forward.min(backward) as f64 / TURN
}

/// Orientation of an ordered triple of circle points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Positive,
    Degenerate,
    Negative,
}

/// Positive iff, travelling anticlockwise from `x`, one meets `y` strictly
/// before `z`.
pub fn cyclic_order(x: CirclePoint, y: CirclePoint, z: CirclePoint) -> Orientation {
    if x == y || y == z || x == z {
        return Orientation::Degenerate;
    }
    match d_plus_bits(x, y).cmp(&d_plus_bits(x, z)) {
        Ordering::Less => Orientation::Positive,
        _ => Orientation::Negative,
    }
}

/// A closed arc traversed anticlockwise from `start` to `end`.
///
/// An arc with `start == end` is degenerate (length zero). The whole circle is
/// not an arc; see [`Region::FullCircle`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Arc {
    pub start: CirclePoint,
    pub end: CirclePoint,
}

impl Arc {
    pub fn new(start: impl Into<CirclePoint>, end: impl Into<CirclePoint>) -> Self {
        Arc {
            start: start.into(),
            end: end.into(),
        }
    }

    /// The arc of the given length starting at `start`.
    pub fn from_start(start: CirclePoint, length: f64) -> Self {
        Arc {
            start,
            end: start.offset(length),
        }
    }

    /// The arc `[x - radius, x + radius]`.
    pub fn centered(x: CirclePoint, radius: f64) -> Self {
        Arc {
            start: x.offset(-radius),
            end: x.offset(radius),
        }
    }

    pub fn length(&self) -> f64 {
        d_plus(self.start, self.end)
    }

    pub fn length_bits(&self) -> u64 {
        d_plus_bits(self.start, self.end)
    }

    pub fn is_degenerate(&self) -> bool {
        self.start == self.end
    }

    /// Closed-arc membership.
    pub fn contains(&self, x: CirclePoint) -> bool {
        d_plus_bits(self.start, x) <= self.length_bits()
    }

    /// The closure of the complementary arc.
    pub fn complement(&self) -> Arc {
        Arc {
            start: self.end,
            end: self.start,
        }
    }

    pub fn midpoint(&self) -> CirclePoint {
        self.start.offset_bits(self.length_bits() / 2)
    }
}

/// diam J = min(l(J), 1/2).
pub fn arc_diameter(arc: &Arc) -> f64 {
    arc.length().min(0.5)
}

/// A connected subset of the circle: a proper arc or the whole circle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Arc(Arc),
    FullCircle,
}

impl Region {
    /// Length; the whole circle reports [`ALMOST_ONE`] so lengths stay in `[0, 1)`.
    pub fn length(&self) -> f64 {
        match self {
            Region::Arc(a) => a.length(),
            Region::FullCircle => ALMOST_ONE,
        }
    }

    pub fn contains(&self, x: CirclePoint) -> bool {
        match self {
            Region::Arc(a) => a.contains(x),
            Region::FullCircle => true,
        }
    }
}

/// A point of the universal cover ℝ, stored with 64 fractional bits.
///
/// Adding an integer changes only the winding, so `base()` is invariant
/// under integer translation bit for bit.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Lift(i128);

impl Lift {
    pub fn new(value: f64) -> Self {
        assert!(value.is_finite(), "cannot lift non-finite value {value}");
        Lift((value * TURN).round() as i128)
    }

    /// The lift of `base` with the given integer part.
    pub fn from_point(base: CirclePoint, winding: i64) -> Self {
        Lift(((winding as i128) << 64) + base.0 as i128)
    }

    pub const fn from_bits(bits: i128) -> Self {
        Lift(bits)
    }

    pub const fn to_bits(self) -> i128 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / TURN
    }

    /// π(value).
    pub fn base(self) -> CirclePoint {
        CirclePoint(self.0 as u64)
    }

    #[must_use]
    pub fn translate(self, k: i64) -> Self {
        Lift(self.0 + ((k as i128) << 64))
    }

    #[must_use]
    pub fn shift(self, delta: f64) -> Self {
        Lift(self.0 + (delta * TURN).round() as i128)
    }

    #[must_use]
    pub(crate) fn shift_bits(self, units: i128) -> Self {
        Lift(self.0 + units)
    }

    /// `self - other` as a real number.
    pub fn gap(self, other: Lift) -> f64 {
        (self.0 - other.0) as f64 / TURN
    }
}

impl fmt::Debug for Lift {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Lift({})", self.value())
    }
}
