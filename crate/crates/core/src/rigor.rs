//! Self-validated scalar arithmetic.
//!
//! Every value carries an explicit error budget counted in units of
//! [`EPS`] `= 3·2⁻⁵²`. A budget `(mult, abs)` on a computed value `v` asserts
//! that the exact quantity lies in `v·(1 ± mult·EPS) ± abs·EPS`.
//!
//! Transcendentals are evaluated with a ten-term Taylor series for `sin` on
//! `[0, π/2]` (ascending degree) and reflections; square roots use a Newton
//! iteration. Angles that are rational multiples of π ([`PiFraction`],
//! [`GridAngle`]) are reflected in exact integer arithmetic before being
//! converted to floating point.

use std::cmp::Ordering;
use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use thiserror::Error;

/// Unit rounding budget: `3·2⁻⁵²`.
pub const EPS: f64 = 3.0 * f64::EPSILON;

/// Largest operation count for which `(1 + 2·2⁻⁵²)^N ≤ 1 + N·EPS` is used.
pub const MAX_COMPOSED_OPS: u32 = 30_000;

/// Multiplicative budget of `sin` on an exactly represented argument.
pub const SIN_BASE_BUDGET: u32 = 250;

/// Extra multiplicative budget of `sin` per unit of argument budget.
pub const SIN_ARG_FACTOR: u32 = 100;

/// Multiplicative budget of converting `π·p/q` to a double.
pub const PI_FRACTION_BUDGET: u32 = 3;

/// Number of Taylor terms used for `sin` (degrees 1, 3, ..., 19).
pub const SIN_TAYLOR_TERMS: usize = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RigorError {
    #[error("{0} composed operations exceed the validity limit of {MAX_COMPOSED_OPS}")]
    BudgetOverflow(u64),
    #[error("argument {value} outside the domain {domain}")]
    Domain { value: f64, domain: &'static str },
    #[error("radicand {value} may be negative under its error budget")]
    NotWellDefined { value: f64 },
    #[error("value is not finite")]
    NonFinite,
    #[error("invalid angle {num}/{den}·π")]
    InvalidAngle { num: i64, den: i64 },
}

pub type Result<T> = std::result::Result<T, RigorError>;

/// Multiplicative error factor `1 + n·EPS` attached after `n` rounded
/// operations on nonnegative normal doubles in `[0, 2⁵⁰⁰]`.
pub fn compose_error(n_ops: u32) -> Result<f64> {
    if n_ops == 0 || n_ops > MAX_COMPOSED_OPS {
        return Err(RigorError::BudgetOverflow(n_ops as u64));
    }
    Ok(1.0 + n_ops as f64 * EPS)
}

fn checked_budget(n: u64) -> Result<u32> {
    if n > MAX_COMPOSED_OPS as u64 {
        Err(RigorError::BudgetOverflow(n))
    } else {
        Ok(n as u32)
    }
}

/// A double together with multiplicative and absolute error budgets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrValue {
    value: f64,
    mult: u32,
    abs: u32,
}

impl ErrValue {
    pub fn new(value: f64, mult: u32, abs: u32) -> Result<Self> {
        if !value.is_finite() {
            return Err(RigorError::NonFinite);
        }
        checked_budget(mult as u64)?;
        checked_budget(abs as u64)?;
        Ok(ErrValue { value, mult, abs })
    }

    /// A value known to be exactly representable.
    pub fn exact(value: f64) -> Result<Self> {
        Self::new(value, 0, 0)
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn mult_budget(&self) -> u32 {
        self.mult
    }

    pub fn abs_budget(&self) -> u32 {
        self.abs
    }

    /// Worst-case absolute deviation implied by the budgets.
    pub fn radius(&self) -> f64 {
        (self.mult as f64 * self.value.abs() + self.abs as f64) * EPS
    }

    /// Conservative enclosure `[lo, hi]` of the exact quantity.
    pub fn bounds(&self) -> (f64, f64) {
        let r = self.radius() * (1.0 + 4.0 * f64::EPSILON);
        (self.value - r, self.value + r)
    }

    pub fn contains(&self, x: f64) -> bool {
        let (lo, hi) = self.bounds();
        lo <= x && x <= hi
    }

    /// Re-express the budget absolutely, given `|exact| ≤ magnitude`.
    pub fn to_absolute(self, magnitude: f64) -> Result<Self> {
        let extra = (self.mult as f64 * magnitude).ceil() as u64;
        Ok(ErrValue {
            value: self.value,
            mult: 0,
            abs: checked_budget(self.abs as u64 + extra)?,
        })
    }

    pub fn neg(self) -> Self {
        ErrValue { value: -self.value, ..self }
    }

    pub fn mul(self, other: ErrValue) -> Result<Self> {
        let value = self.value * other.value;
        let cross = if self.mult > 0 && other.mult > 0 { 1 } else { 0 };
        let mult = self.mult as u64 + other.mult as u64 + 1 + cross;
        let abs = if self.abs == 0 && other.abs == 0 {
            0
        } else {
            let spread = self.abs as f64 * other.value.abs() * (1.0 + other.mult as f64 * EPS)
                + other.abs as f64 * self.value.abs() * (1.0 + self.mult as f64 * EPS)
                + self.abs as f64 * other.abs as f64 * EPS;
            spread.ceil() as u64 + 1
        };
        Self::from_parts(value, mult, abs)
    }

    /// Division by a value with a purely multiplicative budget.
    pub fn div(self, other: ErrValue) -> Result<Self> {
        if other.abs != 0 || other.value == 0.0 {
            return Err(RigorError::Domain {
                value: other.value,
                domain: "nonzero divisor with multiplicative budget",
            });
        }
        let value = self.value / other.value;
        // 1/(1 - kε) ≤ 1 + 2kε for kε ≤ 1/2.
        let mult = self.mult as u64 + 2 * other.mult as u64 + 1;
        let abs = if self.abs == 0 {
            0
        } else {
            (self.abs as f64 / other.value.abs() * (1.0 + 2.0 * other.mult as f64 * EPS)).ceil()
                as u64
                + 1
        };
        Self::from_parts(value, mult, abs)
    }

    /// Sum of two nonnegative values keeps a multiplicative budget.
    pub fn add(self, other: ErrValue) -> Result<Self> {
        let value = self.value + other.value;
        if self.value >= 0.0 && other.value >= 0.0 {
            let mult = self.mult.max(other.mult) as u64 + 1;
            Self::from_parts(value, mult, self.abs as u64 + other.abs as u64)
        } else {
            self.add_absolute(other, value)
        }
    }

    /// Difference; loss of significance forces an absolute budget.
    pub fn sub(self, other: ErrValue) -> Result<Self> {
        let value = self.value - other.value;
        self.add_absolute(other.neg(), value)
    }

    fn add_absolute(self, other: ErrValue, value: f64) -> Result<Self> {
        let a = self.to_absolute(self.value.abs() * (1.0 + f64::EPSILON))?;
        let b = other.to_absolute(other.value.abs() * (1.0 + f64::EPSILON))?;
        // One rounding of the result, bounded relative to its own magnitude.
        let round = (value.abs()).ceil() as u64;
        Self::from_parts(value, 0, a.abs as u64 + b.abs as u64 + round)
    }

    fn from_parts(value: f64, mult: u64, abs: u64) -> Result<Self> {
        if !value.is_finite() {
            return Err(RigorError::NonFinite);
        }
        Ok(ErrValue {
            value,
            mult: checked_budget(mult)?,
            abs: checked_budget(abs)?,
        })
    }
}

impl fmt::Display for ErrValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:e} (±{}ε·|v| ±{}ε)", self.value, self.mult, self.abs)
    }
}

/// An exact angle `π·num/den`.
#[derive(Debug, Clone, Copy)]
pub struct PiFraction {
    num: i64,
    den: i64,
}

impl PiFraction {
    pub fn new(num: i64, den: i64) -> Result<Self> {
        if den <= 0 {
            return Err(RigorError::InvalidAngle { num, den });
        }
        Ok(PiFraction { num, den })
    }

    pub fn num(&self) -> i64 {
        self.num
    }

    pub fn den(&self) -> i64 {
        self.den
    }

    /// `π/2 − self`, exactly.
    pub fn complement(&self) -> PiFraction {
        PiFraction { num: self.den - 2 * self.num, den: 2 * self.den }
    }

    /// `π − self`, exactly.
    pub fn supplement(&self) -> PiFraction {
        PiFraction { num: self.den - self.num, den: self.den }
    }

    pub fn is_negative(&self) -> bool {
        self.num < 0
    }

    pub fn abs(&self) -> PiFraction {
        PiFraction { num: self.num.abs(), den: self.den }
    }

    /// Nearest-double conversion with a `(1 + 3ε)` multiplicative budget.
    pub fn to_err(&self) -> ErrValue {
        let value = self.num as f64 * PI / self.den as f64;
        let mult = if self.num == 0 { 0 } else { PI_FRACTION_BUDGET };
        ErrValue { value, mult, abs: 0 }
    }

    pub fn to_f64(&self) -> f64 {
        self.to_err().value
    }
}

impl PartialEq for PiFraction {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for PiFraction {}

impl PartialOrd for PiFraction {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for PiFraction {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.num as i128 * other.den as i128).cmp(&(other.num as i128 * self.den as i128))
    }
}

/// Deepest net level whose numerators (and doubled numerators) are exact doubles.
pub const MAX_DEPTH: u32 = 13;

/// `10^(depth+2)`: the denominator of depth-`depth` net coordinates.
pub fn grid_denominator(depth: u32) -> i64 {
    10i64.pow(depth + 2)
}

/// A net coordinate `π·numerator/10^(depth+2)` with `0 ≤ numerator ≤ 10^(depth+2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridAngle {
    numerator: i64,
    depth: u32,
}

impl GridAngle {
    pub fn new(numerator: i64, depth: u32) -> Result<Self> {
        if depth > MAX_DEPTH || numerator < 0 || numerator > grid_denominator(depth) {
            return Err(RigorError::InvalidAngle {
                num: numerator,
                den: if depth > MAX_DEPTH { 0 } else { grid_denominator(depth) },
            });
        }
        Ok(GridAngle { numerator, depth })
    }

    pub fn numerator(&self) -> i64 {
        self.numerator
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn denominator(&self) -> i64 {
        grid_denominator(self.depth)
    }

    pub fn to_fraction(&self) -> PiFraction {
        PiFraction { num: self.numerator, den: self.denominator() }
    }

    /// `self + halves·π/(2·10^(depth+2))`, i.e. offset by a number of box radii.
    pub fn offset_radii(&self, halves: i64) -> PiFraction {
        PiFraction { num: 2 * self.numerator + halves, den: 2 * self.denominator() }
    }

    pub fn value(&self) -> f64 {
        self.to_fraction().to_f64()
    }
}

impl PartialOrd for GridAngle {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for GridAngle {
    fn cmp(&self, other: &Self) -> Ordering {
        if self.depth == other.depth {
            self.numerator.cmp(&other.numerator)
        } else {
            self.to_fraction().cmp(&other.to_fraction())
        }
    }
}

/// Ten-term Taylor polynomial of `sin` on `[0, π/2]`, ascending degree.
fn taylor_sin(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    for k in 1..SIN_TAYLOR_TERMS {
        let k = k as f64;
        term *= -x2 / ((2.0 * k) * (2.0 * k + 1.0));
        sum += term;
    }
    sum
}

fn sin_budget(arg_mult: u32) -> Result<u32> {
    checked_budget(SIN_BASE_BUDGET as u64 + SIN_ARG_FACTOR as u64 * arg_mult as u64)
}

/// Verified sine on `[0, π]`.
///
/// Arguments above `π/2` are reflected to `π − x` in floating point
/// (exact by Sterbenz); the representation error of π and the argument's own
/// budget then become an absolute budget of the reflected argument.
pub fn ver_sin(x: ErrValue) -> Result<ErrValue> {
    if !(0.0..=PI).contains(&x.value) {
        return Err(RigorError::Domain { value: x.value, domain: "[0, π]" });
    }
    if x.value <= FRAC_PI_2 {
        return Ok(ErrValue {
            value: taylor_sin(x.value),
            mult: sin_budget(x.mult)?,
            abs: x.abs,
        });
    }
    let reflected = PI - x.value;
    // |x|·kε with |x| ≤ π, plus the error of the stored π.
    let arg_abs = 4 * x.mult as u64 + x.abs as u64 + 1;
    Ok(ErrValue {
        value: taylor_sin(reflected),
        mult: SIN_BASE_BUDGET,
        abs: checked_budget(arg_abs)?,
    })
}

/// Verified sine of an exact angle in `[0, π]`; reflection is exact.
pub fn ver_sin_angle(x: PiFraction) -> Result<ErrValue> {
    let zero = PiFraction { num: 0, den: 1 };
    let pi = PiFraction { num: 1, den: 1 };
    if x < zero || x > pi {
        return Err(RigorError::Domain { value: x.to_f64(), domain: "[0, π]" });
    }
    let half = PiFraction { num: 1, den: 2 };
    let reduced = if x > half { x.supplement() } else { x };
    ver_sin(reduced.to_err())
}

/// Upper end of the cosine domain: `π − 1/2 + 2·10⁻²`.
pub const COS_DOMAIN_MAX: f64 = PI - 0.5 + 2e-2;

/// Verified cosine on `[0, π − 1/2 + 2·10⁻²]`, computed as `sin(π/2 − x)`.
pub fn ver_cos(x: ErrValue) -> Result<ErrValue> {
    if !(0.0..=COS_DOMAIN_MAX).contains(&x.value) {
        return Err(RigorError::Domain { value: x.value, domain: "[0, π − 1/2 + 2·10⁻²]" });
    }
    let y = FRAC_PI_2 - x.value;
    let arg_abs = checked_budget(3 * x.mult as u64 + x.abs as u64 + 1)?;
    let s = ErrValue { value: taylor_sin(y.abs()), mult: SIN_BASE_BUDGET, abs: arg_abs };
    Ok(if y < 0.0 { s.neg() } else { s })
}

/// Verified cosine of an exact angle; `π/2 − x` is formed exactly.
pub fn ver_cos_angle(x: PiFraction) -> Result<ErrValue> {
    let zero = PiFraction { num: 0, den: 1 };
    if x < zero || x.to_f64() > COS_DOMAIN_MAX {
        return Err(RigorError::Domain { value: x.to_f64(), domain: "[0, π − 1/2 + 2·10⁻²]" });
    }
    let y = x.complement();
    let s = ver_sin_angle(y.abs())?;
    Ok(if y.is_negative() { s.neg() } else { s })
}

/// Verified cosine of an arbitrary argument in `[0, π]`, used for the
/// cosine of computed square roots. The input budget must be absolute.
pub fn ver_cos_wide(x: ErrValue) -> Result<ErrValue> {
    if !(0.0..=PI).contains(&x.value) {
        return Err(RigorError::Domain { value: x.value, domain: "[0, π]" });
    }
    let y = FRAC_PI_2 - x.value;
    let arg_abs = checked_budget(4 * x.mult as u64 + x.abs as u64 + 1)?;
    let s = ErrValue { value: taylor_sin(y.abs()), mult: SIN_BASE_BUDGET, abs: arg_abs };
    Ok(if y < 0.0 { s.neg() } else { s })
}

/// Square root by Newton iteration on the mantissa.
pub fn newton_sqrt(a: f64) -> f64 {
    if a == 0.0 || !a.is_finite() || a < 0.0 {
        return if a == 0.0 { 0.0 } else { f64::NAN };
    }
    // a = m·4^e with m in [1, 4).
    let mut m = a;
    let mut scale = 1.0;
    while m >= 4.0 {
        m *= 0.25;
        scale *= 2.0;
    }
    while m < 1.0 {
        m *= 4.0;
        scale *= 0.5;
    }
    let mut r = 0.5 * (1.0 + m);
    for _ in 0..8 {
        r = 0.5 * (r + m / r);
    }
    // Settle a possible one-ulp oscillation towards the better residual.
    let up = f64::from_bits(r.to_bits() + 1);
    let down = f64::from_bits(r.to_bits() - 1);
    let mut best = r;
    for cand in [up, down] {
        if (cand * cand - m).abs() < (best * best - m).abs() {
            best = cand;
        }
    }
    best * scale
}

/// Verified square root.
///
/// Fails with [`RigorError::NotWellDefined`] when the radicand may be
/// negative under its own budget.
pub fn ver_sqrt(x: ErrValue) -> Result<ErrValue> {
    let (lo, _) = x.bounds();
    if x.value < 0.0 || lo < 0.0 {
        return Err(RigorError::NotWellDefined { value: x.value });
    }
    if x.value == 0.0 {
        return Ok(ErrValue { value: 0.0, mult: 0, abs: 0 });
    }
    let rel_from_abs = if x.abs == 0 { 0 } else { (x.abs as f64 / x.value).ceil() as u64 };
    let mult = x.mult as u64 + rel_from_abs + 1;
    ErrValue::from_parts(newton_sqrt(x.value), mult, 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ulps(a: f64, b: f64) -> u64 {
        (a.to_bits() as i64 - b.to_bits() as i64).unsigned_abs()
    }

    #[test]
    fn compose_error_examples() {
        assert_eq!(compose_error(1).unwrap(), 1.0 + 3.0 * f64::EPSILON);
        assert_eq!(compose_error(10).unwrap(), 1.0 + 30.0 * f64::EPSILON);
        assert_eq!(compose_error(30_000).unwrap(), 1.0 + 90_000.0 * f64::EPSILON);
        assert!(matches!(compose_error(30_001), Err(RigorError::BudgetOverflow(30_001))));
        assert!(compose_error(0).is_err());
    }

    #[test]
    fn compose_error_is_monotone() {
        let mut prev = compose_error(1).unwrap();
        for n in 2..=MAX_COMPOSED_OPS {
            let next = compose_error(n).unwrap();
            assert!(next >= prev);
            prev = next;
        }
    }

    #[test]
    fn err_value_rejects_bad_inputs() {
        assert_eq!(ErrValue::new(f64::NAN, 0, 0), Err(RigorError::NonFinite));
        assert_eq!(ErrValue::new(f64::INFINITY, 0, 0), Err(RigorError::NonFinite));
        assert!(ErrValue::new(1.0, 30_001, 0).is_err());
        assert!(ErrValue::new(1.0, 0, 30_001).is_err());
        assert!(ErrValue::new(1.0, 30_000, 30_000).is_ok());
    }

    #[test]
    fn sin_examples() {
        let z = ver_sin(ErrValue::exact(0.0).unwrap()).unwrap();
        assert_eq!(z.value(), 0.0);
        assert_eq!(z.mult_budget(), 250);

        let one = ver_sin_angle(PiFraction::new(1, 2).unwrap()).unwrap();
        assert!((one.value() - 1.0).abs() <= 250.0 * EPS);

        let s1 = ver_sin(ErrValue::exact(1.0).unwrap()).unwrap();
        assert!(ulps(s1.value(), 0.8414709848078965) <= 2);
        assert_eq!(s1.mult_budget(), 250);
    }

    #[test]
    fn sin_budget_grows_with_argument_budget() {
        let x = PiFraction::new(37, 100).unwrap().to_err();
        assert_eq!(x.mult_budget(), 3);
        assert_eq!(ver_sin(x).unwrap().mult_budget(), 550);
        assert!(ver_sin(ErrValue::new(0.5, 300, 0).unwrap()).is_err());
    }

    #[test]
    fn sin_domain_errors() {
        assert!(ver_sin(ErrValue::exact(-1e-9).unwrap()).is_err());
        assert!(ver_sin(ErrValue::exact(3.2).unwrap()).is_err());
        assert!(ver_sin_angle(PiFraction::new(101, 100).unwrap()).is_err());
    }

    #[test]
    fn reflection_is_exact_for_fractions() {
        let a = PiFraction::new(70, 100).unwrap();
        let b = PiFraction::new(30, 100).unwrap();
        assert_eq!(ver_sin_angle(a).unwrap(), ver_sin_angle(b).unwrap());
    }

    #[test]
    fn cos_examples() {
        let c0 = ver_cos_angle(PiFraction::new(0, 1).unwrap()).unwrap();
        assert!((c0.value() - 1.0).abs() <= 250.0 * EPS);

        let c90 = ver_cos_angle(PiFraction::new(1, 2).unwrap()).unwrap();
        assert_eq!(c90.value(), 0.0);
        assert!(c90.to_absolute(1.0).unwrap().abs_budget() <= 550);

        let theta = (-1.0f64 / 3.0).acos();
        assert_eq!(theta, 1.9106332362490186);
        let c = ver_cos(ErrValue::exact(theta).unwrap()).unwrap();
        let abs = c.to_absolute(1.0).unwrap();
        assert!(abs.abs_budget() <= 550);
        // The double nearest arccos(-1/3) is off by < 1e-16, so |Δcos| < 1e-16.
        assert!((c.value() + 1.0 / 3.0).abs() <= 550.0 * EPS + 1e-16);
    }

    #[test]
    fn cos_is_sin_of_complement() {
        for num in 0..=80 {
            let x = PiFraction::new(num, 100).unwrap();
            let y = x.complement();
            let lhs = ver_cos_angle(x).unwrap();
            let rhs = ver_sin_angle(y.abs()).unwrap();
            let rhs = if y.is_negative() { rhs.neg() } else { rhs };
            assert_eq!(lhs.value().to_bits(), rhs.value().to_bits());
        }
    }

    #[test]
    fn cos_domain_errors() {
        assert!(ver_cos(ErrValue::exact(COS_DOMAIN_MAX + 1e-3).unwrap()).is_err());
        assert!(ver_cos_angle(PiFraction::new(90, 100).unwrap()).is_err());
        assert!(ver_cos_angle(PiFraction::new(-1, 100).unwrap()).is_err());
    }

    #[test]
    fn sqrt_examples() {
        let two = ver_sqrt(ErrValue::exact(4.0).unwrap()).unwrap();
        assert_eq!(two.value(), 2.0);
        assert_eq!(two.mult_budget(), 1);
        assert_eq!(ver_sqrt(ErrValue::exact(0.0).unwrap()).unwrap().value(), 0.0);
        let r2 = ver_sqrt(ErrValue::exact(2.0).unwrap()).unwrap();
        assert!(ulps(r2.value(), std::f64::consts::SQRT_2) <= 1);
    }

    #[test]
    fn sqrt_of_possibly_negative_is_not_well_defined() {
        let x = ErrValue::new(1e-20, 0, 1).unwrap();
        assert!(matches!(ver_sqrt(x), Err(RigorError::NotWellDefined { .. })));
        assert!(ver_sqrt(ErrValue::exact(-1.0).unwrap()).is_err());
    }

    #[test]
    fn newton_sqrt_matches_hardware_within_one_ulp() {
        let mut x = 1e-300;
        while x < 1e300 {
            assert!(ulps(newton_sqrt(x), x.sqrt()) <= 1, "x = {x}");
            x *= 1.37;
        }
    }

    #[test]
    fn grid_angle_validation_and_order() {
        assert!(GridAngle::new(101, 0).is_err());
        assert!(GridAngle::new(-1, 0).is_err());
        let a = GridAngle::new(50, 0).unwrap();
        let b = GridAngle::new(500, 1).unwrap();
        let c = GridAngle::new(501, 1).unwrap();
        assert_eq!(a.cmp(&b), Ordering::Equal);
        assert!(a < c);
        assert_eq!(a.offset_radii(1).num(), 101);
        assert_eq!(a.offset_radii(1).den(), 200);
    }

    #[test]
    fn arithmetic_budgets_enclose_exact_results() {
        let third = ErrValue::new(1.0 / 3.0, 1, 0).unwrap();
        let p = third.mul(third).unwrap();
        assert!(p.contains(1.0 / 9.0));
        let d = ErrValue::exact(1.0).unwrap().sub(third).unwrap();
        assert!(d.contains(2.0 / 3.0));
        assert_eq!(d.mult_budget(), 0);
        let q = ErrValue::exact(1.0).unwrap().div(ErrValue::exact(3.0).unwrap()).unwrap();
        assert!(q.contains(1.0 / 3.0));
    }
}
