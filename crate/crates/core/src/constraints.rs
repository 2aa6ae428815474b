//! Conservative box-elimination tests.
//!
//! A [`SearchBox`] is a closed `ℓ∞` cube of radius `δ_j = π/(2·10^(j+2))`
//! around a depth-`j` net point. [`classify`] runs four tests in order and
//! stops at the first that eliminates the box:
//!
//! * (I) a perturbed feasibility constraint fails on the whole box;
//! * (II) the box lies close to one of the two known critical triangles;
//! * (III) some component `H_k` of the critical-point system cannot vanish;
//! * (IV) the single-triangle objective stays below `(9/4)π²`.
//!
//! Every test compares center values computed with the verified primitives
//! of [`crate::rigor`] against inequalities whose `ε` slack terms are fixed
//! constants from [`CONSTANTS`].

use std::f64::consts::PI;
use std::fmt;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::geometry::{modulus_edge_term, Corner, EdgeTrig, CORNERS};
use crate::rigor::{
    self, grid_denominator, newton_sqrt, ver_cos_angle, ver_cos_wide, ver_sin_angle, ErrValue,
    GridAngle, PiFraction, EPS, MAX_DEPTH,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConstraintError {
    #[error("box depth {0} exceeds the maximum {MAX_DEPTH}")]
    Depth(u32),
    #[error("center numerator {numerator} outside [0, {limit}] at depth {depth}")]
    Center { numerator: i64, limit: i64, depth: u32 },
}

/// Candidate critical edge lengths: the regular simplex and the second
/// equilateral solution.
pub const CANDIDATES: [f64; 2] = [1.9106332362490186, 1.5379684120790425];

// Step (i).
pub const ROW3_SLACK: f64 = 10.0;
pub const ROW4_HALF: f64 = 0.5;
pub const ROW5_SLACK: f64 = 7.0;
pub const ROW5_TARGET_SLACK: f64 = 5.0;
pub const ROW6_MIN_EDGE: f64 = 0.1;
pub const ROW6_SLACK: f64 = 7.0;
pub const ROW6_TARGET_SLACK: f64 = 1.0;
pub const ANGLE_SIN_SQUARED: f64 = 99.0;
pub const ANGLE_BOUND_SLACK: f64 = 1500.0;
pub const ANGLE_NUMERATOR_SLACK: f64 = 2000.0;
pub const LAMBDA_SLACK: f64 = 2e4;
pub const LAMBDA_MIN: f64 = 0.03293;
pub const LAMBDA_DELTA: f64 = 15.0;
// Step (ii).
pub const BALL_RADIUS: f64 = 1e-2;
pub const BALL_L2_SLACK: f64 = 40000.0;
pub const BALL_L1_SLACK: f64 = 6000.0;
pub const BALL_OUTER_SLACK: f64 = 20.0;
pub const BALL_TARGET_SLACK: f64 = 2.0;
// Step (iii).
pub const H_COS_SLACK: f64 = 25000.0;
pub const H_GAMMA_SLACK: f64 = 3000.0;
pub const H_MIN_SLACK: f64 = 3000.0;
pub const H_SQRT_SLACK: f64 = 5.0;
// Step (iv).
pub const F0_TARGET_SLACK: f64 = 5.0;
pub const F0_VALUE_SLACK: f64 = 5000.0;
pub const F0_GRAD_SLACK: f64 = 1e4;
pub const F0_ABS_SLACK: f64 = 100.0;
pub const F0_TAN_SLACK: f64 = 1200.0;

/// One entry of the audit listing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constant {
    pub name: &'static str,
    pub value: f64,
    pub location: &'static str,
}

/// Every constant the elimination tests depend on.
pub const CONSTANTS: &[Constant] = &[
    Constant { name: "eps", value: EPS, location: "unit rounding budget 3*2^-52" },
    Constant { name: "sin_base_budget", value: rigor::SIN_BASE_BUDGET as f64, location: "verified sine, exact argument" },
    Constant { name: "sin_arg_factor", value: rigor::SIN_ARG_FACTOR as f64, location: "verified sine, per unit of argument budget" },
    Constant { name: "max_composed_ops", value: rigor::MAX_COMPOSED_OPS as f64, location: "composition rule limit" },
    Constant { name: "cos_domain_max_offset", value: 2e-2, location: "cosine domain [0, pi - 1/2 + offset]" },
    Constant { name: "candidate_regular", value: CANDIDATES[0], location: "step ii, arccos(-1/3)" },
    Constant { name: "candidate_second", value: CANDIDATES[1], location: "step ii, second equilateral critical point" },
    Constant { name: "row3_slack", value: ROW3_SLACK, location: "step i, theta12 <= (2pi/3 + delta)(1 + c eps)" },
    Constant { name: "row4_half", value: ROW4_HALF, location: "step i, theta13 + c <= (pi + delta)(1 + 10 eps)" },
    Constant { name: "row5_slack", value: ROW5_SLACK, location: "step i, (delta + max theta)(1 + c eps)" },
    Constant { name: "row5_target_slack", value: ROW5_TARGET_SLACK, location: "step i, pi 3/(2 sqrt 14)(1 - c eps)" },
    Constant { name: "row6_min_edge", value: ROW6_MIN_EDGE, location: "step i, shortest admissible edge" },
    Constant { name: "row6_slack", value: ROW6_SLACK, location: "step i, (theta + delta)(1 + c eps)" },
    Constant { name: "row6_target_slack", value: ROW6_TARGET_SLACK, location: "step i, (1/10)(1 - c eps)" },
    Constant { name: "angle_sin_squared", value: ANGLE_SIN_SQUARED, location: "step i rows 7-8, sqrt(c)/10" },
    Constant { name: "angle_bound_slack", value: ANGLE_BOUND_SLACK, location: "step i rows 7-8, (1 + c eps)" },
    Constant { name: "angle_numerator_slack", value: ANGLE_NUMERATOR_SLACK, location: "steps i, iii, iv: angle cosine numerator +- c eps" },
    Constant { name: "angle_delta_slack", value: 3.0, location: "step i rows 7-8, c delta" },
    Constant { name: "lambda_slack", value: LAMBDA_SLACK, location: "steps i, iii: lambda +- c eps" },
    Constant { name: "lambda_min", value: LAMBDA_MIN, location: "step i row 9" },
    Constant { name: "lambda_delta", value: LAMBDA_DELTA, location: "step i row 9 and modulus bound, c delta" },
    Constant { name: "ball_radius", value: BALL_RADIUS, location: "step ii, excluded ball radius" },
    Constant { name: "ball_l2_slack", value: BALL_L2_SLACK, location: "step ii, d2^2 + c eps" },
    Constant { name: "ball_l1_slack", value: BALL_L1_SLACK, location: "step ii, d1 + c eps" },
    Constant { name: "ball_outer_slack", value: BALL_OUTER_SLACK, location: "step ii, (1 + c eps)" },
    Constant { name: "ball_target_slack", value: BALL_TARGET_SLACK, location: "step ii, (1 - c eps)" },
    Constant { name: "h_cos_slack", value: H_COS_SLACK, location: "step iii, cos(...) + c eps beta" },
    Constant { name: "h_gamma_slack", value: H_GAMMA_SLACK, location: "step iii, gamma + c eps rho" },
    Constant { name: "h_min_slack", value: H_MIN_SLACK, location: "step iii, min |E| (1 - c eps) and (1 + c eps) G" },
    Constant { name: "h_sqrt_slack", value: H_SQRT_SLACK, location: "step iii, (1 + c eps) sqrt(15 delta)" },
    Constant { name: "modulus_constant", value: 3.5, location: "modulus bound, leading term" },
    Constant { name: "f0_target_slack", value: F0_TARGET_SLACK, location: "step iv, (9/4)pi^2 (1 - c eps)" },
    Constant { name: "f0_value_slack", value: F0_VALUE_SLACK, location: "step iv, F0 (1 + c eps)" },
    Constant { name: "f0_grad_slack", value: F0_GRAD_SLACK, location: "step iv, delta sum G (1 + c eps)" },
    Constant { name: "f0_abs_slack", value: F0_ABS_SLACK, location: "step iv, + c eps" },
    Constant { name: "f0_tan_slack", value: F0_TAN_SLACK, location: "step iv, x/tan(x)(1 + c eps) + eps" },
    Constant { name: "f0_cross_coefficient", value: 4.0, location: "step iv, gradient bound sin-sin term" },
];

/// Canonical `name=value` listing (values as exact hexadecimal bit patterns).
pub fn constants_listing() -> String {
    let mut out = String::new();
    for c in CONSTANTS {
        out.push_str(&format!("{}={:016x} # {} ({})\n", c.name, c.value.to_bits(), c.value, c.location));
    }
    out
}

/// SHA-256 of [`constants_listing`], hex encoded.
pub fn constants_hash() -> String {
    hex::encode(Sha256::digest(constants_listing().as_bytes()))
}

fn sqrt99_over_10() -> f64 {
    newton_sqrt(ANGLE_SIN_SQUARED) / 10.0
}

fn row5_target() -> f64 {
    PI * 3.0 / (2.0 * newton_sqrt(14.0))
}

/// A closed `ℓ∞` cube around a net point. Ordered by `(depth, a₁, a₂, a₃)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SearchBox {
    depth: u32,
    center: [i64; 3],
}

impl SearchBox {
    pub fn new(depth: u32, center: [i64; 3]) -> Result<Self, ConstraintError> {
        if depth > MAX_DEPTH {
            return Err(ConstraintError::Depth(depth));
        }
        let limit = grid_denominator(depth);
        for &numerator in &center {
            if numerator < 0 || numerator > limit {
                return Err(ConstraintError::Center { numerator, limit, depth });
            }
        }
        Ok(SearchBox { depth, center })
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn numerators(&self) -> [i64; 3] {
        self.center
    }

    pub fn center(&self) -> [GridAngle; 3] {
        self.center.map(|a| GridAngle::new(a, self.depth).expect("validated"))
    }

    /// `N = 10^(depth+2)`.
    pub fn denominator(&self) -> i64 {
        grid_denominator(self.depth)
    }

    pub fn center_values(&self) -> [f64; 3] {
        self.center().map(|g| g.value())
    }

    /// `δ` as an exact multiple of π.
    pub fn radius_fraction(&self) -> PiFraction {
        PiFraction::new(1, 2 * self.denominator()).expect("positive denominator")
    }

    pub fn radius(&self) -> f64 {
        self.radius_fraction().to_f64()
    }

    /// Maps `u ∈ [-1, 1]³` to a point of the box.
    pub fn point_at(&self, u: [f64; 3]) -> [f64; 3] {
        let c = self.center_values();
        let d = self.radius();
        [c[0] + u[0] * d, c[1] + u[1] * d, c[2] + u[2] * d]
    }

    /// Net points one level deeper within `ℓ∞` distance `δ` of the center:
    /// numerators `b` with `|b − 10a| ≤ 5`, clipped to the domain.
    pub fn children(&self) -> Vec<SearchBox> {
        let depth = self.depth + 1;
        if depth > MAX_DEPTH {
            return Vec::new();
        }
        let limit = grid_denominator(depth);
        let range = |a: i64| (10 * a - 5).max(0)..=(10 * a + 5).min(limit);
        let mut out = Vec::new();
        for b1 in range(self.center[0]) {
            for b2 in range(self.center[1]) {
                for b3 in range(self.center[2]) {
                    out.push(SearchBox { depth, center: [b1, b2, b3] });
                }
            }
        }
        out
    }
}

impl fmt::Display for SearchBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} {}", self.depth, self.center[0], self.center[1], self.center[2])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Case {
    I,
    II,
    III,
    IV,
    Unresolved,
}

impl Case {
    pub fn as_str(&self) -> &'static str {
        match self {
            Case::I => "I",
            Case::II => "II",
            Case::III => "III",
            Case::IV => "IV",
            Case::Unresolved => "UNRESOLVED",
        }
    }

    pub fn parse(s: &str) -> Option<Case> {
        Some(match s {
            "I" => Case::I,
            "II" => Case::II,
            "III" => Case::III,
            "IV" => Case::IV,
            "UNRESOLVED" => Case::Unresolved,
            _ => return None,
        })
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Result of [`classify`].
///
/// `detail` identifies the test that fired:
/// * case I: `10·row + sub`, `row ∈ 1..=9`, `sub` the labeling, edge or vertex;
/// * case II: candidate `1` or `2`;
/// * case III: `10·component + test`, test `1` for the `G`-modulus bound and
///   `2` for the `√(15δ)` bound. A case III outcome implies all sixteen
///   sign choices gave the same sign;
/// * case IV and unresolved: `0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EliminationOutcome {
    pub case: Case,
    pub detail: u32,
}

impl EliminationOutcome {
    pub const UNRESOLVED: EliminationOutcome = EliminationOutcome { case: Case::Unresolved, detail: 0 };

    pub fn is_eliminated(&self) -> bool {
        self.case != Case::Unresolved
    }
}

/// Center trigonometry of a box, from the verified primitives. Cosines are
/// only formed once the domain rows of step (i) have passed.
#[derive(Debug, Clone, Copy)]
struct Center {
    a: [i64; 3],
    n: i64,
    theta: [f64; 3],
    delta: f64,
    sin: [f64; 3],
}

impl Center {
    fn new(b: &SearchBox) -> Self {
        let g = b.center();
        let sin = g.map(|x| ver_sin_angle(x.to_fraction()).expect("grid angles lie in [0, π]").value());
        Center {
            a: b.center,
            n: b.denominator(),
            theta: g.map(|x| x.value()),
            delta: b.radius(),
            sin,
        }
    }

    fn trig(&self, box_: &SearchBox) -> Option<EdgeTrig> {
        let mut cos = [0.0; 3];
        for (c, g) in cos.iter_mut().zip(box_.center()) {
            *c = ver_cos_angle(g.to_fraction()).ok()?.value();
        }
        Some(EdgeTrig { theta: self.theta, sin: self.sin, cos })
    }
}

/// Which row of step (i) failed first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RowFailure {
    pub row: u32,
    pub sub: u32,
}

impl RowFailure {
    pub fn detail(&self) -> u32 {
        10 * self.row + self.sub
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepIReport {
    pub failed: Option<RowFailure>,
    /// Rows `1..=9` fully checked before stopping.
    pub rows_held: u32,
    /// `λ` at the center, when it was reached.
    pub lambda: Option<f64>,
    trig: Option<EdgeTrig>,
}

impl StepIReport {
    pub fn eliminated(&self) -> bool {
        self.failed.is_some()
    }
}

fn step_i_report_inner(b: &SearchBox, c: &Center) -> StepIReport {
    let mut rep = StepIReport { failed: None, rows_held: 0, lambda: None, trig: None };
    let fail = |mut rep: StepIReport, row, sub| {
        rep.failed = Some(RowFailure { row, sub });
        rep
    };
    let a = c.a;
    let n = c.n as i128;
    let a128 = a.map(|x| x as i128);
    let (t, d) = (c.theta, c.delta);

    // Row 1: θ_ij + θ_jℓ + 3δ ≥ θ_iℓ, i.e. 2a_ij + 2a_jℓ + 3 ≥ 2a_iℓ.
    for k in 0..3 {
        let others: i128 = a128.iter().enumerate().filter(|(i, _)| *i != k).map(|(_, v)| v).sum();
        if 2 * others + 3 < 2 * a128[k] {
            return fail(rep, 1, k as u32);
        }
    }
    rep.rows_held = 1;
    // Row 2: Σθ ≤ 2π + 3δ.
    if 2 * a128.iter().sum::<i128>() > 4 * n + 3 {
        return fail(rep, 2, 0);
    }
    rep.rows_held = 2;
    // Row 3: θ₁₂ ≤ 2π/3 + δ, exactly in integers.
    if 6 * a128[0] > 4 * n + 3 {
        return fail(rep, 3, 0);
    }
    rep.rows_held = 3;
    // Row 4: θ₁₃ + 1/2, θ₂₃ + 1/2 ≤ (π + δ)(1 + 10ε).
    for (sub, &k) in [1usize, 2].iter().enumerate() {
        if !(t[k] + ROW4_HALF <= (PI + d) * (1.0 + ROW3_SLACK * EPS)) {
            return fail(rep, 4, sub as u32);
        }
    }
    rep.rows_held = 4;
    // Row 5.
    let tmax = t[0].max(t[1]).max(t[2]);
    if !((d + tmax) * (1.0 + ROW5_SLACK * EPS) >= row5_target() * (1.0 - ROW5_TARGET_SLACK * EPS)) {
        return fail(rep, 5, 0);
    }
    rep.rows_held = 5;
    // Row 6.
    for k in 0..3 {
        if !((t[k] + d) * (1.0 + ROW6_SLACK * EPS) >= ROW6_MIN_EDGE * (1.0 - ROW6_TARGET_SLACK * EPS)) {
            return fail(rep, 6, k as u32);
        }
    }
    rep.rows_held = 6;
    let trig = match c.trig(b) {
        Some(t) => t,
        // Unreachable after row 4; treated as outside the domain.
        None => return fail(rep, 4, 2),
    };
    rep.trig = Some(trig);
    // Rows 7 and 8: |sin Θ| ≥ 1/10 through the law of cosines.
    let r99 = sqrt99_over_10();
    let slack = ANGLE_NUMERATOR_SLACK * EPS;
    for (row, lower) in [(7, true), (8, false)] {
        for (k, corner) in CORNERS.iter().enumerate() {
            let num = trig.angle_numerator(*corner);
            let bound = (3.0 * d + r99 * (trig.angle_denominator(*corner) + 2.0 * d))
                * (1.0 + ANGLE_BOUND_SLACK * EPS);
            let holds = if lower { -bound <= num + slack } else { num - slack <= bound };
            if !holds {
                return fail(rep, row, k as u32);
            }
        }
        rep.rows_held = row;
    }
    // Row 9.
    let lambda = trig.lambda();
    rep.lambda = Some(lambda);
    if !(LAMBDA_DELTA * d + LAMBDA_SLACK * EPS + lambda >= LAMBDA_MIN) {
        return fail(rep, 9, 0);
    }
    rep.rows_held = 9;
    rep
}

/// Step (i): perturbed feasibility constraints, evaluated in order.
pub fn step_i_report(b: &SearchBox) -> StepIReport {
    step_i_report_inner(b, &Center::new(b))
}

/// `true` iff some perturbed constraint fails on the whole box.
pub fn step_i(b: &SearchBox) -> (bool, Option<RowFailure>) {
    let r = step_i_report(b);
    (r.eliminated(), r.failed)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateReport {
    pub candidate: f64,
    pub d2_squared: f64,
    pub d1: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// The ball inequality fails, so the box is inside the excluded ball.
    pub inside: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepIIReport {
    pub candidates: [CandidateReport; 2],
    /// 1-based index of the first candidate that eliminates the box.
    pub eliminated_by: Option<u32>,
}

fn step_ii_inner(c: &Center) -> StepIIReport {
    let d = c.delta;
    let rhs = BALL_RADIUS * BALL_RADIUS * (1.0 - BALL_TARGET_SLACK * EPS);
    let report = |x: f64| {
        let diffs = c.theta.map(|t| t - x);
        let d2_squared = diffs.iter().map(|v| v * v).sum::<f64>();
        let d1 = diffs.iter().map(|v| v.abs()).sum::<f64>();
        let lhs = (d2_squared + BALL_L2_SLACK * EPS + 2.0 * d * (d1 + BALL_L1_SLACK * EPS + 3.0 * d))
            * (1.0 + BALL_OUTER_SLACK * EPS);
        CandidateReport { candidate: x, d2_squared, d1, lhs, rhs, inside: !(lhs > rhs) }
    };
    let candidates = CANDIDATES.map(report);
    let eliminated_by = candidates.iter().position(|r| r.inside).map(|i| i as u32 + 1);
    StepIIReport { candidates, eliminated_by }
}

/// Step (ii): proximity to the two known critical triangles.
pub fn step_ii_report(b: &SearchBox) -> StepIIReport {
    step_ii_inner(&Center::new(b))
}

pub fn step_ii(b: &SearchBox) -> bool {
    step_ii_report(b).eliminated_by.is_some()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Inconclusive {
    /// A radicand was negative for some sign choice.
    Radicand,
    /// The square root passed to the cosine exceeded π.
    CosDomain,
    /// The sixteen values did not share one strict sign.
    SignChange,
    /// Step (i) had not produced trigonometric data.
    NoData,
    /// The box radius is too large for the modulus bounds.
    Coarse,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ComponentStatus {
    Inconclusive(Inconclusive),
    Evaluated {
        min_abs: f64,
        /// Left side `min|E|(1 − 3000ε)`.
        lhs: f64,
        /// Right side using the `G`-modulus bound, when `η − 15δ > 0`.
        rhs_modulus: Option<f64>,
        /// Right side using the `√(15δ)` bound.
        rhs_sqrt: f64,
        /// `1` or `2` if the respective test passed.
        passed: Option<u32>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComponentReport {
    pub component: u32,
    /// The sixteen extreme values, indexed by the bits `(α, β, ρ, σ)`.
    pub values: Option<[f64; 16]>,
    pub status: ComponentStatus,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepIIIReport {
    pub components: [ComponentReport; 3],
    /// `(component, test)` of the first component that eliminates the box.
    pub eliminated_by: Option<(u32, u32)>,
}

fn sign(bit: usize) -> f64 {
    if bit == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `sin(θ + δ)` for the three center edges.
fn offset_sines(b: &SearchBox) -> Option<[f64; 3]> {
    let mut out = [0.0; 3];
    for (o, g) in out.iter_mut().zip(b.center()) {
        *o = ver_sin_angle(g.offset_radii(1)).ok()?.value();
    }
    Some(out)
}

fn component_report(
    k: usize,
    corner: Corner,
    trig: &EdgeTrig,
    lambda: f64,
    delta: f64,
    sin_plus: Option<&[f64; 3]>,
) -> ComponentReport {
    let component = k as u32 + 1;
    let inconclusive =
        |why| ComponentReport { component, values: None, status: ComponentStatus::Inconclusive(why) };
    let (f1, f2) = corner.flank;
    let (a, b) = (trig.theta[f1], trig.theta[f2]);
    let num = trig.angle_numerator(corner);
    let den = trig.angle_denominator(corner);
    // cos(√(a² + b² + 2ab·ratio)) for α = ±1.
    let mut far_cos = [0.0; 2];
    for (i, fc) in far_cos.iter_mut().enumerate() {
        let ratio = (num + ANGLE_NUMERATOR_SLACK * EPS * sign(i)) / den;
        let r = a * a + b * b + 2.0 * a * b * ratio;
        if !(r >= 0.0) {
            return inconclusive(Inconclusive::Radicand);
        }
        let root = newton_sqrt(r);
        match ErrValue::exact(root).and_then(ver_cos_wide) {
            Ok(v) => *fc = v.value(),
            Err(_) => return inconclusive(Inconclusive::CosDomain),
        }
    }
    // √(λ − 2·10⁴εσ) for σ = ±1.
    let mut root_lambda = [0.0; 2];
    for (i, rl) in root_lambda.iter_mut().enumerate() {
        let r = lambda - LAMBDA_SLACK * EPS * sign(i);
        if !(r >= 0.0) {
            return inconclusive(Inconclusive::Radicand);
        }
        *rl = newton_sqrt(r);
    }
    let gamma = trig.gamma(corner);
    let mut values = [0.0; 16];
    for (idx, v) in values.iter_mut().enumerate() {
        let (alpha, beta, rho, sigma) = (idx >> 3 & 1, idx >> 2 & 1, idx >> 1 & 1, idx & 1);
        *v = (far_cos[alpha] + H_COS_SLACK * EPS * sign(beta)) * root_lambda[sigma]
            + (gamma + H_GAMMA_SLACK * EPS * sign(rho));
    }
    let positive = values.iter().all(|&v| v > 0.0);
    let negative = values.iter().all(|&v| v < 0.0);
    if !(positive || negative) {
        return ComponentReport {
            component,
            values: Some(values),
            status: ComponentStatus::Inconclusive(Inconclusive::SignChange),
        };
    }
    let min_abs = values.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    let lhs = min_abs * (1.0 - H_MIN_SLACK * EPS);

    let sp = match sin_plus {
        Some(s) => s,
        None => return inconclusive(Inconclusive::NoData),
    };
    let (ap, bp) = (a + delta, b + delta);
    let edge = modulus_edge_term(ap, bp, sp[f1], sp[f2]);
    let eta = lambda - LAMBDA_SLACK * EPS;
    let gap = eta - LAMBDA_DELTA * delta;
    let rhs_modulus = (gap > 0.0).then(|| {
        let g = delta * (3.5 + 15.0 / (2.0 * newton_sqrt(gap)) + 3.0 * edge);
        (1.0 + H_MIN_SLACK * EPS) * g
    });
    let rhs_sqrt = (1.0 + H_SQRT_SLACK * EPS) * newton_sqrt(LAMBDA_DELTA * delta)
        + delta * (1.0 + H_MIN_SLACK * EPS) * (3.5 + 3.0 * edge);
    let passed = if rhs_modulus.is_some_and(|r| lhs > r) {
        Some(1)
    } else if lhs > rhs_sqrt {
        Some(2)
    } else {
        None
    };
    ComponentReport {
        component,
        values: Some(values),
        status: ComponentStatus::Evaluated { min_abs, lhs, rhs_modulus, rhs_sqrt, passed },
    }
}

/// Steps (iii) and (iv) rely on modulus and gradient bounds stated for
/// `δ < 1/100`; coarser boxes are left to refinement.
fn bounds_apply(c: &Center) -> bool {
    c.delta < BALL_RADIUS
}

fn step_iii_inner(b: &SearchBox, c: &Center, trig: Option<EdgeTrig>) -> StepIIIReport {
    let empty = ComponentReport {
        component: 0,
        values: None,
        status: ComponentStatus::Inconclusive(Inconclusive::NoData),
    };
    let mut rep = StepIIIReport { components: [empty; 3], eliminated_by: None };
    let (trig, lambda) = match trig.filter(|_| bounds_apply(c)) {
        Some(t) => (t, t.lambda()),
        None => {
            let why = if bounds_apply(c) { Inconclusive::NoData } else { Inconclusive::Coarse };
            for (k, comp) in rep.components.iter_mut().enumerate() {
                comp.component = k as u32 + 1;
                comp.status = ComponentStatus::Inconclusive(why);
            }
            return rep;
        }
    };
    let sin_plus = offset_sines(b);
    for (k, corner) in CORNERS.iter().enumerate() {
        let r = component_report(k, *corner, &trig, lambda, c.delta, sin_plus.as_ref());
        if let ComponentStatus::Evaluated { passed: Some(test), .. } = r.status {
            if rep.eliminated_by.is_none() {
                rep.eliminated_by = Some((r.component, test));
            }
        }
        rep.components[k] = r;
    }
    rep
}

/// Step (iii): some `H_k` is bounded away from zero on the box.
pub fn step_iii_report(b: &SearchBox) -> StepIIIReport {
    let c = Center::new(b);
    step_iii_inner(b, &c, c.trig(b))
}

/// Returns the eliminating `(component, test)` if any.
pub fn step_iii(b: &SearchBox) -> Option<(u32, u32)> {
    step_iii_report(b).eliminated_by
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepIVReport {
    Inconclusive,
    Evaluated {
        f0: f64,
        /// `(9/4)π²(1 − 5ε) − F₀^ε(1 + 5000ε)`.
        margin: f64,
        /// `G₁₂^ε`, `G₁₃^ε`, `G₂₃^ε`.
        grad: [f64; 3],
        /// `δ·ΣG(1 + 10⁴ε) + 100ε`.
        rhs: f64,
        eliminated: bool,
    },
}

impl StepIVReport {
    pub fn eliminated(&self) -> bool {
        matches!(self, StepIVReport::Evaluated { eliminated: true, .. })
    }
}

fn step_iv_inner(b: &SearchBox, c: &Center, trig: Option<EdgeTrig>) -> StepIVReport {
    let trig = match trig.filter(|_| bounds_apply(c)) {
        Some(t) => t,
        None => return StepIVReport::Inconclusive,
    };
    let mut cosines = [0.0; 3];
    for (cs, corner) in cosines.iter_mut().zip(CORNERS) {
        *cs = (trig.angle_numerator(corner) + ANGLE_NUMERATOR_SLACK * EPS) / trig.angle_denominator(corner);
    }
    let f0 = trig.f0_with(cosines);

    let d = c.delta;
    let mut sin_p = [0.0; 3];
    let mut cot_p = [0.0; 3];
    for (k, g) in b.center().iter().enumerate() {
        let x = g.offset_radii(1);
        let (s, co) = match (ver_sin_angle(x), ver_cos_angle(x)) {
            (Ok(s), Ok(co)) => (s.value(), co.value()),
            _ => return StepIVReport::Inconclusive,
        };
        if !(s > 0.0) {
            return StepIVReport::Inconclusive;
        }
        sin_p[k] = s;
        cot_p[k] = co / s;
    }
    let t = c.theta;
    let mut grad = [0.0; 3];
    for (i, g) in grad.iter_mut().enumerate() {
        let (j, k) = match i {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        let (x, y, z) = (t[i] + d, t[j] + d, t[k] + d);
        *g = 6.0 * x
            + 4.0 * y * z / (sin_p[j] * sin_p[k])
            + 2.0 * x * y / sin_p[j]
            + 2.0 * x * z / sin_p[k]
            + 2.0 * (t[j] + t[k] + 2.0 * d) * (1.0 - (x * cot_p[i] * (1.0 + F0_TAN_SLACK * EPS) + EPS));
    }
    let margin = 2.25 * PI * PI * (1.0 - F0_TARGET_SLACK * EPS) - f0 * (1.0 + F0_VALUE_SLACK * EPS);
    let rhs = d * (grad[0] + grad[1] + grad[2]) * (1.0 + F0_GRAD_SLACK * EPS) + F0_ABS_SLACK * EPS;
    StepIVReport::Evaluated { f0, margin, grad, rhs, eliminated: margin > rhs }
}

/// Step (iv): the objective stays below `(9/4)π²` on the box.
pub fn step_iv_report(b: &SearchBox) -> StepIVReport {
    let c = Center::new(b);
    step_iv_inner(b, &c, c.trig(b))
}

pub fn step_iv(b: &SearchBox) -> bool {
    step_iv_report(b).eliminated()
}

/// All step reports, up to the eliminating step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifyReport {
    pub step_i: StepIReport,
    pub step_ii: Option<StepIIReport>,
    pub step_iii: Option<StepIIIReport>,
    pub step_iv: Option<StepIVReport>,
    pub outcome: EliminationOutcome,
}

pub fn classify_report(b: &SearchBox) -> ClassifyReport {
    let c = Center::new(b);
    let si = step_i_report_inner(b, &c);
    let mut rep = ClassifyReport {
        step_i: si,
        step_ii: None,
        step_iii: None,
        step_iv: None,
        outcome: EliminationOutcome::UNRESOLVED,
    };
    if let Some(f) = si.failed {
        rep.outcome = EliminationOutcome { case: Case::I, detail: f.detail() };
        return rep;
    }
    let sii = step_ii_inner(&c);
    rep.step_ii = Some(sii);
    if let Some(k) = sii.eliminated_by {
        rep.outcome = EliminationOutcome { case: Case::II, detail: k };
        return rep;
    }
    let siii = step_iii_inner(b, &c, si.trig);
    rep.step_iii = Some(siii);
    if let Some((k, test)) = siii.eliminated_by {
        rep.outcome = EliminationOutcome { case: Case::III, detail: 10 * k + test };
        return rep;
    }
    let siv = step_iv_inner(b, &c, si.trig);
    rep.step_iv = Some(siv);
    if siv.eliminated() {
        rep.outcome = EliminationOutcome { case: Case::IV, detail: 0 };
    }
    rep
}

/// Runs steps (i)–(iv) in order, stopping at the first elimination.
pub fn classify(b: &SearchBox) -> EliminationOutcome {
    let c = Center::new(b);
    let si = step_i_report_inner(b, &c);
    if let Some(f) = si.failed {
        return EliminationOutcome { case: Case::I, detail: f.detail() };
    }
    if let Some(k) = step_ii_inner(&c).eliminated_by {
        return EliminationOutcome { case: Case::II, detail: k };
    }
    if let Some((k, test)) = step_iii_inner(b, &c, si.trig).eliminated_by {
        return EliminationOutcome { case: Case::III, detail: 10 * k + test };
    }
    if step_iv_inner(b, &c, si.trig).eliminated() {
        return EliminationOutcome { case: Case::IV, detail: 0 };
    }
    EliminationOutcome::UNRESOLVED
}

/// Nearest depth-`depth` numerator to an angle in radians.
pub fn snap_to_grid(theta: f64, depth: u32) -> i64 {
    let n = grid_denominator(depth);
    ((theta / PI * n as f64).round() as i64).clamp(0, n)
}
