//! Non-rigorous reference computations used to test `propeller-core`.
//!
//! Nothing here is shared with the rigorous path: vectors are plain
//! `[f64; 3]`, transcendentals come from `astro-float` at [`HP_PRECISION`]
//! bits, and moments are computed by surface quadrature.

use std::cell::RefCell;
use std::f64::consts::PI;

use astro_float::{BigFloat, Consts, RoundingMode, Sign};
use thiserror::Error;

pub use astro_float;

pub type V3 = [f64; 3];

/// Working precision in bits.
pub const HP_PRECISION: usize = 256;
const RM: RoundingMode = RoundingMode::ToEven;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("degenerate triangle")]
    Degenerate,
    #[error("step {0} outside [1e-8, 1e-3]")]
    Step(f64),
    #[error("function undefined within one step of the point")]
    DomainBoundary,
    #[error("no sign change across the bracket")]
    Bracket,
}

thread_local! {
    static CONSTS: RefCell<Consts> = RefCell::new(Consts::new().expect("astro-float constants"));
}

fn with_consts<T>(f: impl FnOnce(&mut Consts) -> T) -> T {
    CONSTS.with(|c| f(&mut c.borrow_mut()))
}

pub fn hp(x: f64) -> BigFloat {
    BigFloat::from_f64(x, HP_PRECISION)
}

pub fn hp_pi() -> BigFloat {
    with_consts(|cc| cc.pi(HP_PRECISION, RM))
}

/// High-precision sine and cosine of a double.
#[derive(Debug, Clone)]
pub struct HpTrig {
    pub sin: BigFloat,
    pub cos: BigFloat,
}

pub fn hp_trig(x: f64) -> HpTrig {
    hp_trig_big(&hp(x))
}

pub fn hp_trig_big(x: &BigFloat) -> HpTrig {
    with_consts(|cc| HpTrig { sin: x.sin(HP_PRECISION, RM, cc), cos: x.cos(HP_PRECISION, RM, cc) })
}

/// `π·num/den` in high precision.
pub fn hp_pi_fraction(num: i64, den: i64) -> BigFloat {
    let n = BigFloat::from_i64(num, HP_PRECISION);
    let d = BigFloat::from_i64(den, HP_PRECISION);
    hp_pi().mul(&n, HP_PRECISION, RM).div(&d, HP_PRECISION, RM)
}

pub fn hp_acos(x: f64) -> BigFloat {
    hp_acos_big(&hp(x))
}

pub fn hp_acos_big(x: &BigFloat) -> BigFloat {
    with_consts(|cc| x.acos(HP_PRECISION, RM, cc))
}

/// Nearest double (round half to even).
pub fn to_f64(x: &BigFloat) -> f64 {
    if x.is_zero() {
        return 0.0;
    }
    let Some((words, _, sign, exp, _)) = x.as_raw_parts() else {
        return f64::NAN;
    };
    let top = *words.last().expect("nonempty mantissa");
    let sticky = words[..words.len() - 1].iter().any(|&w| w != 0);
    let mut m = top >> 11;
    let rest = top & 0x7ff;
    let half = 0x400;
    if rest > half || (rest == half && (sticky || m & 1 == 1)) {
        m += 1;
    }
    // value = 0.top × 2^exp = m × 2^(exp − 53)
    let k = exp - 53;
    let v = m as f64 * 2f64.powi(k / 2) * 2f64.powi(k - k / 2);
    if sign == Sign::Neg {
        -v
    } else {
        v
    }
}

/// `|approx − exact|` as a double.
pub fn abs_error(approx: f64, exact: &BigFloat) -> f64 {
    to_f64(&hp(approx).sub(exact, HP_PRECISION, RM)).abs()
}

/// `|approx − exact| / |exact|` as a double.
pub fn rel_error(approx: f64, exact: &BigFloat) -> f64 {
    let d = hp(approx).sub(exact, HP_PRECISION, RM);
    to_f64(&d.div(exact, HP_PRECISION, RM)).abs()
}

fn dot(a: V3, b: V3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: V3, b: V3) -> V3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn add(a: V3, b: V3) -> V3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn scale(a: V3, s: f64) -> V3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub fn normalize(a: V3) -> V3 {
    scale(a, 1.0 / dot(a, a).sqrt())
}

fn arc(a: V3, b: V3) -> f64 {
    let c = cross(a, b);
    dot(c, c).sqrt().atan2(dot(a, b))
}

/// Spherical excess by l'Huilier's formula.
pub fn spherical_area(a: V3, b: V3, c: V3) -> f64 {
    let (x, y, z) = (arc(b, c), arc(a, c), arc(a, b));
    let s = 0.5 * (x + y + z);
    let t = (0.5 * s).tan() * (0.5 * (s - x)).tan() * (0.5 * (s - y)).tan() * (0.5 * (s - z)).tan();
    4.0 * t.max(0.0).sqrt().atan()
}

/// Recursive geodesic midpoint subdivision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadratureSpec {
    pub level: u32,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { level: 6 }
    }
}

/// `∫_T x dσ` over the geodesic triangle `(v1, v2, v3)`.
///
/// Each leaf patch contributes its exact area times a second-order estimate
/// of the mean position, `¾·ĉ + ¼·(a+b+c)/3` with `ĉ` the normalized vertex
/// centroid; the curvature terms of the two estimates cancel.
pub fn quad_moment(v1: V3, v2: V3, v3: V3, spec: QuadratureSpec) -> Result<V3, OracleError> {
    let det = dot(v1, cross(v2, v3));
    if !(det > 1e-14) {
        return Err(OracleError::Degenerate);
    }
    let mut acc = [0.0; 3];
    subdivide(normalize(v1), normalize(v2), normalize(v3), spec.level, &mut acc);
    Ok(acc)
}

fn subdivide(a: V3, b: V3, c: V3, level: u32, acc: &mut V3) {
    if level == 0 {
        let area = spherical_area(a, b, c);
        let sum = add(add(a, b), c);
        let mean = add(scale(normalize(sum), 0.75), scale(sum, 0.25 / 3.0));
        *acc = add(*acc, scale(mean, area));
        return;
    }
    let ab = normalize(add(a, b));
    let bc = normalize(add(b, c));
    let ca = normalize(add(c, a));
    subdivide(a, ab, ca, level - 1, acc);
    subdivide(ab, b, bc, level - 1, acc);
    subdivide(ca, bc, c, level - 1, acc);
    subdivide(ab, bc, ca, level - 1, acc);
}

/// Central-difference gradient. `f` returns `None` outside its domain.
pub fn fd_gradient(f: impl Fn(V3) -> Option<f64>, point: V3, step: f64) -> Result<V3, OracleError> {
    if !(1e-8..=1e-3).contains(&step) {
        return Err(OracleError::Step(step));
    }
    let mut g = [0.0; 3];
    for k in 0..3 {
        let (mut p, mut m) = (point, point);
        p[k] += step;
        m[k] -= step;
        let (fp, fm) = (f(p).ok_or(OracleError::DomainBoundary)?, f(m).ok_or(OracleError::DomainBoundary)?);
        g[k] = (fp - fm) / (2.0 * step);
    }
    Ok(g)
}

/// Central-difference Hessian.
pub fn fd_hessian(f: impl Fn(V3) -> Option<f64>, point: V3, step: f64) -> Result<[[f64; 3]; 3], OracleError> {
    if !(1e-8..=1e-3).contains(&step) {
        return Err(OracleError::Step(step));
    }
    let eval = |di: [f64; 3]| f(add(point, di)).ok_or(OracleError::DomainBoundary);
    let unit = |k: usize, s: f64| {
        let mut u = [0.0; 3];
        u[k] = s;
        u
    };
    let mut h = [[0.0; 3]; 3];
    let f0 = eval([0.0; 3])?;
    for i in 0..3 {
        h[i][i] = (eval(unit(i, step))? - 2.0 * f0 + eval(unit(i, -step))?) / (step * step);
        for j in (i + 1)..3 {
            let pp = eval(add(unit(i, step), unit(j, step)))?;
            let pm = eval(add(unit(i, step), unit(j, -step)))?;
            let mp = eval(add(unit(i, -step), unit(j, step)))?;
            let mm = eval(add(unit(i, -step), unit(j, -step)))?;
            h[i][j] = (pp - pm - mp + mm) / (4.0 * step * step);
            h[j][i] = h[i][j];
        }
    }
    Ok(h)
}

/// Single-triangle objective from the spherical law of cosines, clamping
/// angle cosines into `[-1, 1]`. `None` outside `(0, π)³`.
pub fn plain_f0(t: V3) -> Option<f64> {
    if t.iter().any(|&x| !(x > 0.0 && x < PI)) {
        return None;
    }
    let [x, y, z] = t;
    let angle = |opp: f64, a: f64, b: f64| ((opp.cos() - a.cos() * b.cos()) / (a.sin() * b.sin())).clamp(-1.0, 1.0);
    Some(
        3.0 * (x * x + y * y + z * z)
            + 2.0 * x * y * angle(z, x, y)
            + 2.0 * x * z * angle(y, x, z)
            + 2.0 * y * z * angle(x, y, z),
    )
}

/// Sign-change bracket of the equilateral critical-point equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
    /// Quotient at `lo` times `(1 + 3000ε)`.
    pub guarded_lo: f64,
    /// Quotient at `hi` times `(1 − 3000ε)`.
    pub guarded_hi: f64,
}

pub const BRACKET_CENTER: f64 = 1.5379684120790425;
const EPS: f64 = 3.0 * f64::EPSILON;

/// Left over right side of `cos(√(2(2c+1)(1−c))·θ/sinθ) = −√(2c+1)/√3`,
/// `c = cos θ`, in double precision.
pub fn critical_quotient(theta: f64) -> f64 {
    let c = theta.cos();
    let lhs = ((2.0 * (2.0 * c + 1.0) * (1.0 - c)).sqrt() * theta / theta.sin()).cos();
    let rhs = -(2.0 * c + 1.0).sqrt() / 3f64.sqrt();
    lhs / rhs
}

/// The same quotient in high precision.
pub fn critical_quotient_hp(theta: f64) -> f64 {
    let p = HP_PRECISION;
    let t = hp(theta);
    let tr = hp_trig_big(&t);
    let one = hp(1.0);
    let two = hp(2.0);
    let k = two.mul(&tr.cos, p, RM).add(&one, p, RM);
    let r = two.mul(&k, p, RM).mul(&one.sub(&tr.cos, p, RM), p, RM).sqrt(p, RM);
    let arg = r.mul(&t, p, RM).div(&tr.sin, p, RM);
    let lhs = hp_trig_big(&arg).cos;
    let rhs = k.sqrt(p, RM).div(&hp(3.0).sqrt(p, RM), p, RM);
    let mut q = lhs.div(&rhs, p, RM);
    q.inv_sign();
    to_f64(&q)
}

/// Brackets the second equilateral root across `x ± 2000ε` with the guard
/// factors `(1 ± 3000ε)`: the guarded quotient is below 1 on the left and
/// above 1 on the right.
pub fn bracket_second_root() -> Result<Bracket, OracleError> {
    let lo = BRACKET_CENTER - 2000.0 * EPS;
    let hi = BRACKET_CENTER + 2000.0 * EPS;
    let guarded_lo = critical_quotient(lo) * (1.0 + 3000.0 * EPS);
    let guarded_hi = critical_quotient(hi) * (1.0 - 3000.0 * EPS);
    if guarded_lo < 1.0 && guarded_hi > 1.0 {
        Ok(Bracket { lo, hi, guarded_lo, guarded_hi })
    } else {
        Err(OracleError::Bracket)
    }
}
