#![allow(dead_code)]

use std::f64::consts::PI;

use propeller_core::constraints::{classify, Case, EliminationOutcome, SearchBox};
use propeller_core::geometry::{h_system, EdgeTriple};
use propeller_oracle::plain_f0;
use propeller_core::geometry::{det, UnitVec3};
use propeller_core::traversal::Domain;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub const REGULAR: f64 = 1.9106332362490186;
pub const SECOND: f64 = 1.5379684120790425;
/// `(9/4)π²`.
pub const PROPELLER: f64 = 2.25 * PI * PI;

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn random_unit(r: &mut StdRng) -> UnitVec3 {
    loop {
        let (x, y, z) = (r.random_range(-1.0..1.0), r.random_range(-1.0..1.0), r.random_range(-1.0..1.0));
        let n2: f64 = x * x + y * y + z * z;
        if n2 > 1e-2 && n2 <= 1.0 {
            return UnitVec3::new(x, y, z).unwrap();
        }
    }
}

/// Positively oriented triangle with all edges in `[lo, hi]`.
pub fn random_triangle(r: &mut StdRng, lo: f64, hi: f64) -> [UnitVec3; 3] {
    loop {
        let [a, mut b, mut c] = [random_unit(r), random_unit(r), random_unit(r)];
        let edges = [a.angle_to(b), a.angle_to(c), b.angle_to(c)];
        if edges.iter().any(|e| *e < lo || *e > hi) {
            continue;
        }
        let d = det(a.vec(), b.vec(), c.vec());
        if d.abs() < 1e-3 {
            continue;
        }
        if d < 0.0 {
            std::mem::swap(&mut b, &mut c);
        }
        return [a, b, c];
    }
}

/// Edge triple of a random genuine spherical triangle, edges in `[lo, hi]`.
pub fn random_edges(r: &mut StdRng, lo: f64, hi: f64) -> [f64; 3] {
    let [a, b, c] = random_triangle(r, lo, hi);
    [a.angle_to(b), a.angle_to(c), b.angle_to(c)]
}

/// Mixed-case domain near the regular simplex: cases II, III and IV at
/// depth 2 and one refined box.
pub fn mixed_domain() -> Domain {
    Domain::around_point([REGULAR; 3], 40, 2).unwrap()
}

/// Chooses `count` eliminated boxes from random depth-0..=3 centers, about
/// half of them near the regular simplex.
pub fn random_eliminated(r: &mut StdRng, count: usize) -> Vec<SearchBox> {
    let mut out = Vec::new();
    while out.len() < count {
        let b = if r.random_bool(0.5) {
            let depth = r.random_range(0..=3u32);
            let n = 10i64.pow(depth + 2);
            SearchBox::new(depth, [r.random_range(0..=n), r.random_range(0..=n), r.random_range(0..=n)]).unwrap()
        } else {
            let depth = r.random_range(1..=3u32);
            let n = 10f64.powi(depth as i32 + 2);
            let a = [0; 3].map(|_| ((REGULAR + r.random_range(-0.035..0.035)) / PI * n).round() as i64);
            SearchBox::new(depth, a).unwrap()
        };
        if classify(&b).case != Case::Unresolved {
            out.push(b);
        }
    }
    out
}

/// Children whose boxes lie inside the parent box.
pub fn inner_children(b: &SearchBox) -> Vec<SearchBox> {
    let a = b.numerators();
    b.children()
        .into_iter()
        .filter(|c| c.numerators().iter().zip(a).all(|(x, p)| (x - 10 * p).abs() <= 4))
        .collect()
}

/// Uniform random point in the closed box.
pub fn sample_in(r: &mut StdRng, b: &SearchBox) -> [f64; 3] {
    b.point_at([r.random_range(-1.0..=1.0), r.random_range(-1.0..=1.0), r.random_range(-1.0..=1.0)])
}

/// Checks sampled plain-float values against a recorded elimination.
pub fn spot_check(b: &SearchBox, o: EliminationOutcome, samples: usize, seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    match o.case {
        Case::III => {
            let k = (o.detail / 10) as usize - 1;
            let mut sign = 0.0;
            for _ in 0..samples {
                let p = sample_in(&mut r, b);
                let h = h_system(&EdgeTriple::from_array(p)).map_err(|e| format!("{b} at {p:?}: {e}"))?[k];
                if h == 0.0 || (sign != 0.0 && h.signum() != sign) {
                    return Err(format!("{b}: H{} = {h} at {p:?}", k + 1));
                }
                sign = h.signum();
            }
        }
        Case::IV => {
            for _ in 0..samples {
                let p = sample_in(&mut r, b);
                if let Some(f) = plain_f0(p) {
                    if !(f < PROPELLER) {
                        return Err(format!("{b}: F0 = {f} at {p:?}"));
                    }
                }
            }
        }
        _ => {}
    }
    Ok(())
}
