//! Closed-form spherical partition mathematics.
//!
//! Edge triples are ordered `(θ₁₂, θ₁₃, θ₂₃)`. Vertex `k` of the triangle is
//! flanked by two of these edges and faces the third; see [`CORNERS`].
//! Formulas are written once against [`EdgeTrig`] (edge lengths with their
//! sines and cosines) so that the plain-float path and the verified path in
//! [`crate::constraints`] evaluate the same expression tree.

use std::ops::{Add, Mul, Neg, Sub};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("edge length {0} outside (0, π)")]
    EdgeDomain(f64),
    #[error("flanking edge {0} makes the spherical angle singular")]
    Singular(f64),
    #[error("dihedral cosine {0} outside [-1, 1]")]
    NotTriangle(f64),
    #[error("vertices are not positively oriented (det = {0})")]
    Orientation(f64),
    #[error("degenerate configuration: {0}")]
    Degenerate(&'static str),
    #[error("radicand {0} is negative")]
    NegativeRadicand(f64),
    #[error("modulus bound inapplicable: eta - 15 delta = {0}")]
    InapplicableModulus(f64),
    #[error("radius {0} outside (0, 1/100)")]
    RadiusDomain(f64),
}

pub type Result<T> = std::result::Result<T, GeometryError>;

/// Below this length `sin(x)/x` is not evaluated on the plain path.
pub const MIN_PLAIN_EDGE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scale(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        self.scale(s)
    }
}

/// A point of S².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitVec3(Vec3);

impl UnitVec3 {
    /// Normalizes `v`; fails on the zero vector.
    pub fn normalize(v: Vec3) -> Result<Self> {
        let n = v.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(GeometryError::Degenerate("zero vector"));
        }
        Ok(UnitVec3(v.scale(1.0 / n)))
    }

    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        Self::normalize(Vec3::new(x, y, z))
    }

    pub fn vec(self) -> Vec3 {
        self.0
    }

    /// Geodesic distance, via `atan2(‖u×v‖, ⟨u,v⟩)`.
    pub fn angle_to(self, other: UnitVec3) -> f64 {
        self.0.cross(other.0).norm().atan2(self.0.dot(other.0))
    }
}

pub fn det(a: Vec3, b: Vec3, c: Vec3) -> f64 {
    a.dot(b.cross(c))
}

/// Edge lengths `(θ₁₂, θ₁₃, θ₂₃)` of one spherical triangle, in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeTriple {
    pub theta12: f64,
    pub theta13: f64,
    pub theta23: f64,
}

impl EdgeTriple {
    pub const fn new(theta12: f64, theta13: f64, theta23: f64) -> Self {
        EdgeTriple { theta12, theta13, theta23 }
    }

    pub const fn equilateral(theta: f64) -> Self {
        EdgeTriple::new(theta, theta, theta)
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.theta12, self.theta13, self.theta23]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        EdgeTriple::new(a[0], a[1], a[2])
    }

    fn check_open(&self) -> Result<()> {
        for t in self.as_array() {
            if !(t >= MIN_PLAIN_EDGE && t < std::f64::consts::PI) {
                return Err(GeometryError::EdgeDomain(t));
            }
        }
        Ok(())
    }
}

pub const E12: usize = 0;
pub const E13: usize = 1;
pub const E23: usize = 2;

/// A triangle vertex: the two edges meeting there and the opposite edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Corner {
    pub flank: (usize, usize),
    pub opposite: usize,
}

/// Vertices 1, 2, 3 in order; `H_k` and `γ_k` belong to vertex `k`.
pub const CORNERS: [Corner; 3] = [
    Corner { flank: (E12, E13), opposite: E23 },
    Corner { flank: (E12, E23), opposite: E13 },
    Corner { flank: (E13, E23), opposite: E12 },
];

/// Edge lengths with their sines and cosines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeTrig {
    pub theta: [f64; 3],
    pub sin: [f64; 3],
    pub cos: [f64; 3],
}

impl EdgeTrig {
    /// Plain-float trigonometry of an edge triple.
    pub fn plain(e: &EdgeTriple) -> Self {
        let theta = e.as_array();
        EdgeTrig {
            theta,
            sin: theta.map(f64::sin),
            cos: theta.map(f64::cos),
        }
    }

    pub fn sinc(&self, i: usize) -> f64 {
        self.sin[i] / self.theta[i]
    }

    /// λ, grouped as squares first, then the cosine cross terms.
    pub fn lambda(&self) -> f64 {
        let (s12, s13, s23) = (self.sinc(E12), self.sinc(E13), self.sinc(E23));
        let (c12, c13, c23) = (self.cos[E12], self.cos[E13], self.cos[E23]);
        (s23 * s23 + s13 * s13 + s12 * s12)
            + 2.0 * (s23 * s13 * c12 + s23 * s12 * c13 + s12 * s13 * c23)
    }

    /// `γ_k = sinc(f₂)cos(f₁) + sinc(opp) + sinc(f₁)cos(f₂)` at vertex `k`.
    pub fn gamma(&self, corner: Corner) -> f64 {
        let (f1, f2) = corner.flank;
        self.sinc(f2) * self.cos[f1] + self.sinc(corner.opposite) + self.sinc(f1) * self.cos[f2]
    }

    /// Numerator of the spherical law of cosines at a corner.
    pub fn angle_numerator(&self, corner: Corner) -> f64 {
        let (f1, f2) = corner.flank;
        self.cos[corner.opposite] - self.cos[f1] * self.cos[f2]
    }

    pub fn angle_denominator(&self, corner: Corner) -> f64 {
        let (f1, f2) = corner.flank;
        self.sin[f1] * self.sin[f2]
    }

    pub fn cos_angle(&self, corner: Corner) -> f64 {
        self.angle_numerator(corner) / self.angle_denominator(corner)
    }

    /// `θ_f₁² + θ_f₂² + 2θ_f₁θ_f₂·cosΘ`, the squared length of the edge from
    /// the corner to the fourth vertex.
    pub fn far_edge_radicand(&self, corner: Corner, cos_angle: f64) -> f64 {
        let (f1, f2) = corner.flank;
        let (a, b) = (self.theta[f1], self.theta[f2]);
        a * a + b * b + 2.0 * a * b * cos_angle
    }

    /// Single-triangle objective `3Σθ² + 2Σ cosΘ_k θ_f₁ θ_f₂`.
    pub fn f0_with(&self, cos_angles: [f64; 3]) -> f64 {
        let t = self.theta;
        let squares = 3.0 * (t[E12] * t[E12] + t[E23] * t[E23] + t[E13] * t[E13]);
        let mut cross = 0.0;
        for (corner, c) in CORNERS.iter().zip(cos_angles) {
            let (f1, f2) = corner.flank;
            cross += 2.0 * c * t[f1] * t[f2];
        }
        squares + cross
    }
}

pub fn lambda(e: &EdgeTriple) -> Result<f64> {
    e.check_open()?;
    Ok(EdgeTrig::plain(e).lambda())
}

/// `γ_i` for `i ∈ {1, 2, 3}`.
pub fn gamma_i(e: &EdgeTriple, i: usize) -> Result<f64> {
    e.check_open()?;
    let corner = corner(i)?;
    Ok(EdgeTrig::plain(e).gamma(corner))
}

fn corner(i: usize) -> Result<Corner> {
    CORNERS
        .get(i.wrapping_sub(1))
        .copied()
        .ok_or(GeometryError::Degenerate("vertex index must be 1, 2 or 3"))
}

/// Cosine of the spherical angle between edges `θ_ij` and `θ_jl`, facing `θ_il`.
pub fn cos_dihedral(theta_ij: f64, theta_jl: f64, theta_il: f64) -> Result<f64> {
    for t in [theta_ij, theta_jl] {
        if !(t > 0.0 && t < std::f64::consts::PI) {
            return Err(GeometryError::Singular(t));
        }
    }
    Ok((theta_il.cos() - theta_ij.cos() * theta_jl.cos()) / (theta_ij.sin() * theta_jl.sin()))
}

/// Residuals `(H₁, H₂, H₃)` of the critical-triangle system.
pub fn h_system(e: &EdgeTriple) -> Result<[f64; 3]> {
    e.check_open()?;
    let trig = EdgeTrig::plain(e);
    let root_lambda = trig.lambda().sqrt();
    let mut out = [0.0; 3];
    for (k, corner) in CORNERS.iter().enumerate() {
        let r = trig.far_edge_radicand(*corner, trig.cos_angle(*corner));
        if r < 0.0 {
            return Err(GeometryError::NegativeRadicand(r));
        }
        out[k] = root_lambda * r.sqrt().cos() + trig.gamma(*corner);
    }
    Ok(out)
}

pub fn f_sum_squares(edges: &[f64; 6]) -> f64 {
    edges.iter().map(|t| t * t).sum()
}

/// Single-triangle objective `F₀`; out-of-range angle cosines are an error.
pub fn f0(e: &EdgeTriple) -> Result<f64> {
    e.check_open()?;
    let trig = EdgeTrig::plain(e);
    let mut cosines = [0.0; 3];
    for (c, corner) in cosines.iter_mut().zip(CORNERS) {
        *c = trig.cos_angle(corner);
        if c.abs() > 1.0 {
            return Err(GeometryError::NotTriangle(*c));
        }
    }
    Ok(trig.f0_with(cosines))
}

/// Analytic gradient of `F₀` with respect to `(θ₁₂, θ₁₃, θ₂₃)`.
pub fn f0_gradient(e: &EdgeTriple) -> Result<[f64; 3]> {
    e.check_open()?;
    let t = e.as_array();
    let mut grad = [0.0; 3];
    for (i, g) in grad.iter_mut().enumerate() {
        let (j, k) = others(i);
        let (x, y, z) = (t[i], t[j], t[k]);
        let (sx, sy, sz) = (x.sin(), y.sin(), z.sin());
        let (cx, cy, cz) = (x.cos(), y.cos(), z.cos());
        let c_xy = (cz - cx * cy) / (sx * sy);
        let c_xz = (cy - cx * cz) / (sx * sz);
        *g = 6.0 * x + 2.0 * x * y * cy / sy + 2.0 * x * z * cz / sz - 2.0 * y * z * sx / (sy * sz)
            + 2.0 * (y * c_xy + z * c_xz) * (1.0 - x * cx / sx);
    }
    Ok(grad)
}

fn others(i: usize) -> (usize, usize) {
    match i {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    }
}

fn check_radius(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 0.01) {
        return Err(GeometryError::RadiusDomain(delta));
    }
    Ok(())
}

/// Upper bound on the `ℓ∞` modulus of continuity of `H_k` on a `δ`-ball,
/// given `λ > η` at the center. Component `k` uses its two flanking edges.
pub fn modulus_h(component: usize, delta: f64, e: &EdgeTriple, eta: f64) -> Result<f64> {
    if delta == 0.0 {
        return Ok(0.0);
    }
    check_radius(delta)?;
    let gap = eta - 15.0 * delta;
    if gap <= 0.0 {
        return Err(GeometryError::InapplicableModulus(gap));
    }
    let corner = corner(component)?;
    let t = e.as_array();
    let a = t[corner.flank.0] + delta;
    let b = t[corner.flank.1] + delta;
    let (sa, sb) = (a.sin(), b.sin());
    if sa <= 0.0 || sb <= 0.0 {
        return Err(GeometryError::Singular(if sa <= 0.0 { a } else { b }));
    }
    Ok(delta * (3.5 + 15.0 / (2.0 * gap.sqrt()) + 3.0 * modulus_edge_term(a, b, sa, sb)))
}

/// `2a + 2b + ab(2/sin a + 2/sin b + 1/(sin a sin b))` for already offset
/// flanking edges `a`, `b`, given their sines.
pub fn modulus_edge_term(a: f64, b: f64, sin_a: f64, sin_b: f64) -> f64 {
    2.0 * a + 2.0 * b + a * b * (2.0 / sin_a + 2.0 / sin_b + 1.0 / (sin_a * sin_b))
}

/// [`modulus_h`] for `H₁`.
pub fn modulus_h1(delta: f64, e: &EdgeTriple, eta: f64) -> Result<f64> {
    modulus_h(1, delta, e, eta)
}

/// Bounds on `|∂F₀/∂θ|` for each edge over the `δ`-ball; the `ℓ₁` gradient
/// bound is their sum.
pub fn grad_f0_bound(delta: f64, e: &EdgeTriple) -> Result<[f64; 3]> {
    check_radius(delta)?;
    let t = e.as_array();
    let mut out = [0.0; 3];
    for (i, o) in out.iter_mut().enumerate() {
        let (j, k) = others(i);
        let (x, y, z) = (t[i] + delta, t[j] + delta, t[k] + delta);
        let (sx, sy, sz) = (x.sin(), y.sin(), z.sin());
        if sx <= 0.0 || sy <= 0.0 || sz <= 0.0 {
            return Err(GeometryError::Singular(x.max(y).max(z)));
        }
        *o = 6.0 * x + 2.0 * y * z / (sy * sz) + 2.0 * x * y / sy + 2.0 * x * z / sz
            + 2.0 * (y + z) * (1.0 - x * x.cos() / sx);
    }
    Ok(out)
}

/// Moment `∫_T x dσ` of the spherical triangle `(v₁, v₂, v₃)`.
pub fn moment(v1: UnitVec3, v2: UnitVec3, v3: UnitVec3) -> Result<Vec3> {
    let d = det(v1.vec(), v2.vec(), v3.vec());
    if !(d > 0.0) {
        return Err(GeometryError::Orientation(d));
    }
    let term = |a: UnitVec3, b: UnitVec3| -> Result<Vec3> {
        let c = a.vec().cross(b.vec());
        let n = c.norm();
        if n == 0.0 {
            return Err(GeometryError::Degenerate("parallel vertices"));
        }
        Ok(c.scale(a.angle_to(b) / n))
    };
    let sum = term(v1, v2)? + term(v2, v3)? + term(v3, v1)?;
    Ok(sum.scale(0.5))
}

/// The fourth partition vertex determined by a positively oriented triangle.
pub fn fourth_vertex(v1: UnitVec3, v2: UnitVec3, v3: UnitVec3) -> Result<UnitVec3> {
    let d = det(v1.vec(), v2.vec(), v3.vec());
    if !(d > 0.0) {
        return Err(GeometryError::Orientation(d));
    }
    let sinc = |a: UnitVec3, b: UnitVec3| {
        let t = a.angle_to(b);
        t.sin() / t
    };
    let w = v1.vec() * sinc(v2, v3) + v2.vec() * sinc(v1, v3) + v3.vec() * sinc(v1, v2);
    if w.norm() == 0.0 {
        return Err(GeometryError::Degenerate("zero weight sum"));
    }
    UnitVec3::normalize(-w)
}

/// Edges `[θ₁₂, θ₁₃, θ₁₄, θ₂₃, θ₂₄, θ₃₄]`; returns
/// `(P₁₂,₃₄ − P₁₃,₂₄, P₁₃,₂₄ − P₁₄,₂₃)` with `P_ij,kl = sinc θ_ij · sinc θ_kl`.
pub fn opposite_edge_residual(edges: &[f64; 6]) -> (f64, f64) {
    let s = edges.map(|t| t.sin() / t);
    let [s12, s13, s14, s23, s24, s34] = s;
    let p1 = s12 * s34;
    let p2 = s13 * s24;
    let p3 = s14 * s23;
    (p1 - p2, p2 - p3)
}

/// Tangent vector at `v1` pointing towards `vj` with length `θ_1j`.
pub fn exp_inverse(v1: UnitVec3, vj: UnitVec3) -> Result<Vec3> {
    let a = v1.vec();
    let b = vj.vec();
    let perp = b - a * b.dot(a);
    let n = perp.norm();
    if n < 1e-12 {
        return Err(GeometryError::Degenerate("parallel or antipodal vertices"));
    }
    Ok(perp.scale(v1.angle_to(vj) / n))
}

/// The four vertices of a spherical partition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartitionData {
    vertices: [UnitVec3; 4],
}

impl PartitionData {
    pub fn new(vertices: [UnitVec3; 4]) -> Result<Self> {
        for i in 0..4 {
            for j in (i + 1)..4 {
                let c = vertices[i].vec().cross(vertices[j].vec()).norm();
                if c < 1e-12 {
                    return Err(GeometryError::Degenerate("equal or antipodal vertices"));
                }
            }
        }
        Ok(PartitionData { vertices })
    }

    /// Completes `(v₁, v₂, v₃)` with [`fourth_vertex`].
    pub fn from_triangle(v1: UnitVec3, v2: UnitVec3, v3: UnitVec3) -> Result<Self> {
        let v4 = fourth_vertex(v1, v2, v3)?;
        Self::new([v1, v2, v3, v4])
    }

    pub fn vertex(&self, i: usize) -> UnitVec3 {
        self.vertices[i]
    }

    /// `θ_ij` for 0-based vertex indices.
    pub fn edge(&self, i: usize, j: usize) -> f64 {
        self.vertices[i].angle_to(self.vertices[j])
    }

    /// `[θ₁₂, θ₁₃, θ₁₄, θ₂₃, θ₂₄, θ₃₄]`.
    pub fn edges(&self) -> [f64; 6] {
        [
            self.edge(0, 1),
            self.edge(0, 2),
            self.edge(0, 3),
            self.edge(1, 2),
            self.edge(1, 3),
            self.edge(2, 3),
        ]
    }

    pub fn sum_squares(&self) -> f64 {
        f_sum_squares(&self.edges())
    }
}

/// Sum of the tangent vectors from vertex `i` (0-based) to the other three.
pub fn stationarity_residual(p: &PartitionData, i: usize) -> Result<Vec3> {
    if i > 3 {
        return Err(GeometryError::Degenerate("vertex index must be below 4"));
    }
    let vi = p.vertex(i);
    let mut sum = Vec3::default();
    for j in (0..4).filter(|&j| j != i) {
        sum = sum + exp_inverse(vi, p.vertex(j))?;
    }
    Ok(sum)
}

/// Three unit vectors with pairwise angle `theta`, positively oriented and
/// symmetric about the `z` axis. Requires `0 < theta < 2π/3`.
pub fn equilateral_triangle(theta: f64) -> Result<[UnitVec3; 3]> {
    // Points at polar angle φ, azimuths 0, 2π/3, 4π/3: cosθ = cos²φ − sin²φ/2.
    let c = theta.cos();
    let cos2 = (1.0 + 2.0 * c) / 3.0;
    if !(cos2 > 0.0) {
        return Err(GeometryError::Degenerate("equilateral triangle needs theta < 2π/3"));
    }
    let (cphi, sphi) = (cos2.sqrt(), (1.0 - cos2).sqrt());
    let v = |k: f64| {
        let az = k * 2.0 * std::f64::consts::PI / 3.0;
        UnitVec3::new(sphi * az.cos(), sphi * az.sin(), cphi)
    };
    Ok([v(0.0)?, v(1.0)?, v(2.0)?])
}
