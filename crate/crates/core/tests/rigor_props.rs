use std::cmp::Ordering;
use std::f64::consts::PI;

use num_bigint::BigInt;
use num_rational::BigRational;
use propeller_core::rigor::{
    compose_error, ver_cos, ver_cos_angle, ver_cos_wide, ver_sin, ver_sin_angle, ver_sqrt, ErrValue, GridAngle,
    PiFraction, COS_DOMAIN_MAX, EPS, MAX_DEPTH,
};
use propeller_oracle::astro_float::{BigFloat, RoundingMode::ToEven};
use propeller_oracle::{abs_error, rel_error, hp, hp_pi_fraction, hp_trig, hp_trig_big};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// Slack for the oracle's own rounding (256-bit `π`).
const ORACLE_SLACK: f64 = 1e-70;

fn assert_encloses(v: ErrValue, exact: &BigFloat) {
    let err = abs_error(v.value(), exact);
    assert!(err <= v.radius() + ORACLE_SLACK, "{v}: error {err:e} exceeds {:e}", v.radius());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn sin_within_budget(x in 0.0f64..=PI / 2.0) {
        let v = ver_sin(ErrValue::exact(x).unwrap()).unwrap();
        let s = hp_trig(x).sin;
        if x == 0.0 {
            prop_assert_eq!(v.value(), 0.0);
        } else {
            prop_assert!(rel_error(v.value(), &s) <= 250.0 * EPS);
        }
        assert_encloses(v, &s);
    }

    #[test]
    fn cos_within_budget(x in 0.0f64..=COS_DOMAIN_MAX) {
        let v = ver_cos(ErrValue::exact(x).unwrap()).unwrap();
        assert_encloses(v, &hp_trig(x).cos);
    }

    #[test]
    fn cos_wide_within_budget(x in 0.0f64..=PI) {
        let v = ver_cos_wide(ErrValue::exact(x).unwrap()).unwrap();
        assert_encloses(v, &hp_trig(x).cos);
    }

    #[test]
    fn grid_sin_cos_within_budget(depth in 0u32..=MAX_DEPTH, u in 0.0f64..=1.0) {
        let n = 10i64.pow(depth + 2);
        let a = ((n as f64) * u) as i64;
        let f = PiFraction::new(a, n).unwrap();
        let t = hp_trig_big(&hp_pi_fraction(a, n));
        assert_encloses(ver_sin_angle(f).unwrap(), &t.sin);
        if f.to_f64() <= COS_DOMAIN_MAX {
            assert_encloses(ver_cos_angle(f).unwrap(), &t.cos);
        }
    }

    #[test]
    fn sqrt_within_budget(x in 0.0f64..1e6) {
        let v = ver_sqrt(ErrValue::exact(x).unwrap()).unwrap();
        let exact = hp(x).sqrt(256, ToEven);
        assert_encloses(v, &exact);
    }

    #[test]
    fn arithmetic_encloses(x in -1e3f64..1e3, y in -1e3f64..1e3) {
        let (a, b) = (ErrValue::exact(x).unwrap(), ErrValue::exact(y).unwrap());
        let (hx, hy) = (hp(x), hp(y));
        assert_encloses(a.add(b).unwrap(), &hx.add(&hy, 256, ToEven));
        assert_encloses(a.sub(b).unwrap(), &hx.sub(&hy, 256, ToEven));
        assert_encloses(a.mul(b).unwrap(), &hx.mul(&hy, 256, ToEven));
        if y.abs() > 1e-3 {
            assert_encloses(a.div(b).unwrap(), &hx.div(&hy, 256, ToEven));
        }
    }

    #[test]
    fn compose_error_is_monotone(n1 in 0u32..30_000, n2 in 0u32..30_000) {
        let (lo, hi) = (n1.min(n2), n1.max(n2));
        prop_assert!(compose_error(lo).unwrap() <= compose_error(hi).unwrap());
    }

    #[test]
    fn cos_is_sin_of_exact_complement(u in 0.0f64..=0.5, den in 1i64..=100_000) {
        let f = PiFraction::new((u * den as f64) as i64, den).unwrap();
        let c = ver_cos_angle(f).unwrap();
        let s = ver_sin_angle(f.complement()).unwrap();
        prop_assert_eq!(c.value().to_bits(), s.value().to_bits());
    }
}

#[test]
fn grid_angle_order_matches_rationals() {
    let mut r = StdRng::seed_from_u64(21);
    let rational = |g: &GridAngle| BigRational::new(BigInt::from(g.numerator()), BigInt::from(g.denominator()));
    for i in 0..10_000 {
        let d1 = r.random_range(0..=MAX_DEPTH);
        let n1 = 10i64.pow(d1 + 2);
        let a = GridAngle::new(r.random_range(0..=n1), d1).unwrap();
        // Every third pair is a near tie: the same value one level deeper,
        // nudged by at most one.
        let b = if i % 3 == 0 && d1 < MAX_DEPTH {
            let k = 10 * a.numerator() + r.random_range(-1..=1);
            GridAngle::new(k.clamp(0, 10 * n1), d1 + 1).unwrap()
        } else {
            let d2 = r.random_range(0..=MAX_DEPTH);
            GridAngle::new(r.random_range(0..=10i64.pow(d2 + 2)), d2).unwrap()
        };
        let expect: Ordering = rational(&a).cmp(&rational(&b));
        assert_eq!(a.cmp(&b), expect, "{a:?} {b:?}");
        assert_eq!(a.to_fraction().cmp(&b.to_fraction()), expect);
    }
}
