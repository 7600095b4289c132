// Copyright 2026 The chainlab authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Parametric symmetric convex bodies and ambient norms.
//!
//! A [`BodySpec`] describes a symmetric compact convex set `B ⊂ ℝ^d` for
//! which the gauge `‖x‖_B = inf{s ≥ 0 : x ∈ sB}`, the dual gauge
//! `‖z‖_B^* = sup_{x∈B} ⟨z,x⟩`, and norming subgradients are available in
//! closed form (or, for a general polytope, by a small linear program).
//! An [`AmbientNorm`] is the norm `‖·‖` that defines distances in all
//! covering and chaining computations; it is Euclidean or a coordinate
//! weighted ℓp norm, both of which are unconditional with constant 1.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};
use std::ops::Deref;

use crate::linalg::{self, dot, lp_norm, norm2, sign1};
use crate::{Error, Result};

/// Hard cap on ambient dimension; everything here is desk scale.
pub const MAX_DIM: usize = 4096;

// ---------------------------------------------------------------------------
// Point
// ---------------------------------------------------------------------------

/// A point of ℝ^d with finite coordinates, d ≥ 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidParameter("point must have dimension >= 1".into()));
        }
        if coords.len() > MAX_DIM {
            return Err(Error::InvalidParameter(format!(
                "dimension {} exceeds cap {MAX_DIM}",
                coords.len()
            )));
        }
        if coords.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("point has non-finite coordinate".into()));
        }
        Ok(Point(coords))
    }

    pub fn zeros(dim: usize) -> Self {
        Point(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for Point {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for Point {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Point::new(v)
    }
}

impl From<Point> for Vec<f64> {
    fn from(p: Point) -> Vec<f64> {
        p.0
    }
}

// ---------------------------------------------------------------------------
// Ambient norms
// ---------------------------------------------------------------------------

/// The norm defining distances, together with its dual.
///
/// `WeightedLp { p, w }` is `‖x‖ = (Σ (w_i |x_i|)^p)^{1/p}` with strictly
/// positive weights; its dual is `WeightedLp { p*, 1/w }` with
/// `1/p + 1/p* = 1`. The Euclidean norm is self-dual. Both families are
/// 1-unconditional in the standard basis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum AmbientNorm {
    Euclidean,
    WeightedLp { p: f64, w: Vec<f64> },
}

/// Dual exponent: 1/p + 1/p* = 1, with 1* = ∞ and ∞* = 1.
pub fn dual_exponent(p: f64) -> f64 {
    if p.is_infinite() {
        1.0
    } else if p <= 1.0 {
        f64::INFINITY
    } else {
        p / (p - 1.0)
    }
}

impl AmbientNorm {
    pub fn validate(&self) -> Result<()> {
        match self {
            AmbientNorm::Euclidean => Ok(()),
            AmbientNorm::WeightedLp { p, w } => {
                if !(*p >= 1.0) {
                    return Err(Error::InvalidParameter(format!("ambient p = {p} must be >= 1")));
                }
                if w.is_empty() || w.len() > MAX_DIM {
                    return Err(Error::InvalidParameter("ambient weights empty or oversized".into()));
                }
                if w.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
                    return Err(Error::InvalidParameter(
                        "ambient weights must be strictly positive and finite".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    pub(crate) fn check_dim(&self, d: usize) -> Result<()> {
        if let AmbientNorm::WeightedLp { w, .. } = self {
            if w.len() != d {
                return Err(Error::DimensionMismatch { expected: w.len(), got: d });
            }
        }
        Ok(())
    }

    pub fn norm(&self, x: &[f64]) -> f64 {
        match self {
            AmbientNorm::Euclidean => norm2(x),
            AmbientNorm::WeightedLp { p, w } => {
                debug_assert_eq!(w.len(), x.len());
                if p.is_infinite() {
                    return x.iter().zip(w).fold(0.0, |m, (v, wi)| m.max(wi * v.abs()));
                }
                let m = x.iter().zip(w).fold(0.0f64, |m, (v, wi)| m.max(wi * v.abs()));
                if m == 0.0 {
                    return 0.0;
                }
                let s: f64 = x.iter().zip(w).map(|(v, wi)| (wi * v.abs() / m).powf(*p)).sum();
                m * s.powf(1.0 / p)
            }
        }
    }

    /// `‖a − b‖` without allocating the difference.
    pub fn dist(&self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        match self {
            AmbientNorm::Euclidean => linalg::dist2(a, b),
            AmbientNorm::WeightedLp { p, w } => {
                if p.is_infinite() {
                    return a
                        .iter()
                        .zip(b)
                        .zip(w)
                        .fold(0.0, |m, ((x, y), wi)| m.max(wi * (x - y).abs()));
                }
                let m = a
                    .iter()
                    .zip(b)
                    .zip(w)
                    .fold(0.0f64, |m, ((x, y), wi)| m.max(wi * (x - y).abs()));
                if m == 0.0 {
                    return 0.0;
                }
                let s: f64 = a
                    .iter()
                    .zip(b)
                    .zip(w)
                    .map(|((x, y), wi)| (wi * (x - y).abs() / m).powf(*p))
                    .sum();
                m * s.powf(1.0 / p)
            }
        }
    }

    pub fn dual(&self) -> AmbientNorm {
        match self {
            AmbientNorm::Euclidean => AmbientNorm::Euclidean,
            AmbientNorm::WeightedLp { p, w } => AmbientNorm::WeightedLp {
                p: dual_exponent(*p),
                w: w.iter().map(|wi| 1.0 / wi).collect(),
            },
        }
    }

    pub fn dual_norm(&self, z: &[f64]) -> f64 {
        self.dual().norm(z)
    }

    /// Dual witness of Hölder equality: `z` with `⟨z,x⟩ = ‖x‖` and
    /// `‖z‖^* = 1`, for `x ≠ 0`.
    pub fn holder_witness(&self, x: &[f64]) -> Vec<f64> {
        match self {
            AmbientNorm::Euclidean => {
                let n = norm2(x);
                x.iter().map(|v| v / n).collect()
            }
            AmbientNorm::WeightedLp { p, w } => {
                let n = self.norm(x);
                if p.is_infinite() {
                    // Mass on one maximal coordinate.
                    let mut best = 0usize;
                    let mut bv = -1.0;
                    for (i, (v, wi)) in x.iter().zip(w).enumerate() {
                        let t = wi * v.abs();
                        if t > bv {
                            bv = t;
                            best = i;
                        }
                    }
                    let mut z = vec![0.0; x.len()];
                    z[best] = sign1(x[best]) * w[best];
                    z
                } else if *p == 1.0 {
                    x.iter()
                        .zip(w)
                        .map(|(v, wi)| if *v == 0.0 { 0.0 } else { sign1(*v) * wi })
                        .collect()
                } else {
                    x.iter()
                        .zip(w)
                        .map(|(v, wi)| sign1(*v) * wi * (wi * v.abs() / n).powf(p - 1.0))
                        .collect()
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Bodies
// ---------------------------------------------------------------------------

/// Parametric description of a symmetric compact convex body in ℝ^d.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum BodySpec {
    /// `‖x‖_B = [Σ (|x_i|/b_i)^q]^{1/q}` with `q > 1` and nonincreasing
    /// positive semiaxes `b`.
    LqEllipsoid { q: f64, b: Vec<f64> },
    /// `absconv{b_i e_i}`, the weighted cross-polytope; gauge `Σ |x_i|/b_i`.
    Octahedron { b: Vec<f64> },
    /// Euclidean ball of a given radius.
    EuclideanBall { radius: f64, dim: usize },
    /// `absconv{v_1, …, v_m}` for explicit vertices; gauge by linear
    /// programming over convex-combination coefficients.
    AbsConvPolytope { vertices: Vec<Point> },
    /// `absconv{x_i}` with `x_i = e_i + ε u`, `u = d^{-1/2} (1,…,1)`;
    /// gauge `‖V^{-1} x‖_1` with `V` the vertex matrix.
    PerturbedSimplex { d: usize, eps: f64 },
}

/// How [`sample_cloud`] places points relative to the body surface.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleMode {
    Boundary,
    Interior,
}

impl BodySpec {
    pub fn validate(&self) -> Result<()> {
        let check_axes = |b: &[f64]| -> Result<()> {
            if b.is_empty() || b.len() > MAX_DIM {
                return Err(Error::InvalidParameter(format!(
                    "semiaxis count {} outside 1..={MAX_DIM}",
                    b.len()
                )));
            }
            if b.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
                return Err(Error::InvalidParameter("semiaxes must be positive and finite".into()));
            }
            if b.windows(2).any(|w| w[0] < w[1]) {
                return Err(Error::InvalidParameter("semiaxes must be nonincreasing".into()));
            }
            Ok(())
        };
        match self {
            BodySpec::LqEllipsoid { q, b } => {
                if !(*q > 1.0) || !q.is_finite() {
                    return Err(Error::InvalidParameter(format!("ellipsoid q = {q} must be > 1")));
                }
                check_axes(b)
            }
            BodySpec::Octahedron { b } => check_axes(b),
            BodySpec::EuclideanBall { radius, dim } => {
                if !(*radius > 0.0) || !radius.is_finite() {
                    return Err(Error::InvalidParameter("ball radius must be positive".into()));
                }
                if *dim == 0 || *dim > MAX_DIM {
                    return Err(Error::InvalidParameter(format!("ball dim {dim} outside 1..={MAX_DIM}")));
                }
                Ok(())
            }
            BodySpec::AbsConvPolytope { vertices } => {
                if vertices.is_empty() {
                    return Err(Error::InvalidParameter("polytope needs at least one vertex".into()));
                }
                let d = vertices[0].dim();
                if d > MAX_DIM {
                    return Err(Error::InvalidParameter(format!("dimension {d} exceeds cap {MAX_DIM}")));
                }
                for v in vertices {
                    if v.dim() != d {
                        return Err(Error::DimensionMismatch { expected: d, got: v.dim() });
                    }
                }
                Ok(())
            }
            BodySpec::PerturbedSimplex { d, eps } => {
                if *d < 2 || *d > MAX_DIM {
                    return Err(Error::InvalidParameter(format!(
                        "perturbed simplex d = {d} outside 2..={MAX_DIM}"
                    )));
                }
                if !(*eps > 0.0 && *eps < 1.0) {
                    return Err(Error::InvalidParameter(format!("eps = {eps} outside (0,1)")));
                }
                Ok(())
            }
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            BodySpec::LqEllipsoid { b, .. } | BodySpec::Octahedron { b } => b.len(),
            BodySpec::EuclideanBall { dim, .. } => *dim,
            BodySpec::AbsConvPolytope { vertices } => vertices[0].dim(),
            BodySpec::PerturbedSimplex { d, .. } => *d,
        }
    }

    pub(crate) fn check_point(&self, x: &[f64]) -> Result<()> {
        let d = self.dim();
        if x.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: x.len() });
        }
        Ok(())
    }

    /// The dilated body `s·B`, `s > 0`.
    pub fn scaled(&self, s: f64) -> BodySpec {
        let sc = |b: &[f64]| b.iter().map(|v| v * s).collect::<Vec<_>>();
        match self {
            BodySpec::LqEllipsoid { q, b } => BodySpec::LqEllipsoid { q: *q, b: sc(b) },
            BodySpec::Octahedron { b } => BodySpec::Octahedron { b: sc(b) },
            BodySpec::EuclideanBall { radius, dim } => {
                BodySpec::EuclideanBall { radius: radius * s, dim: *dim }
            }
            BodySpec::AbsConvPolytope { vertices } => BodySpec::AbsConvPolytope {
                vertices: vertices.iter().map(|v| Point(linalg::scale(v, s))).collect(),
            },
            BodySpec::PerturbedSimplex { d, eps } => {
                // No closed-form dilation within the family; fall back to the
                // explicit vertex description.
                BodySpec::AbsConvPolytope {
                    vertices: perturbed_simplex_vertices(*d, *eps)
                        .into_iter()
                        .map(|v| Point(linalg::scale(&v, s)))
                        .collect(),
                }
            }
        }
    }

    /// Vertices of polytopal variants (`±` pairs are implied by symmetry).
    pub fn vertices(&self) -> Option<Vec<Vec<f64>>> {
        match self {
            BodySpec::Octahedron { b } => Some(
                b.iter()
                    .enumerate()
                    .map(|(i, bi)| {
                        let mut v = vec![0.0; b.len()];
                        v[i] = *bi;
                        v
                    })
                    .collect(),
            ),
            BodySpec::AbsConvPolytope { vertices } => {
                Some(vertices.iter().map(|v| v.as_slice().to_vec()).collect())
            }
            BodySpec::PerturbedSimplex { d, eps } => Some(perturbed_simplex_vertices(*d, *eps)),
            _ => None,
        }
    }

    /// `sup_{x ∈ B} ‖x‖_2`, closed form per variant.
    pub fn sup_euclidean_norm(&self) -> f64 {
        match self {
            BodySpec::LqEllipsoid { q, b } => {
                if *q <= 2.0 {
                    b[0]
                } else {
                    // max Σ b_i² u_i² over Σ u_i^q = 1.
                    let e = 2.0 * q / (q - 2.0);
                    lp_norm(b, e)
                }
            }
            BodySpec::Octahedron { b } => b[0],
            BodySpec::EuclideanBall { radius, .. } => *radius,
            BodySpec::AbsConvPolytope { vertices } => {
                vertices.iter().map(|v| norm2(v)).fold(0.0, f64::max)
            }
            BodySpec::PerturbedSimplex { d, eps } => {
                (1.0 + 2.0 * eps / (*d as f64).sqrt() + eps * eps).sqrt()
            }
        }
    }

    /// Euclidean diameter `= 2 sup_B ‖x‖_2` (the body is symmetric).
    pub fn diameter_euclidean(&self) -> f64 {
        2.0 * self.sup_euclidean_norm()
    }

    /// Upper bound on the ambient diameter, via the closed-form Euclidean
    /// diameter and the norm-equivalence factor of the ambient norm.
    pub fn diameter(&self, ambient: &AmbientNorm) -> f64 {
        match ambient {
            AmbientNorm::Euclidean => self.diameter_euclidean(),
            AmbientNorm::WeightedLp { p, w } => {
                let wmax = w.iter().fold(0.0f64, |m, v| m.max(*v));
                let d = self.dim() as f64;
                let fac = if *p < 2.0 { d.powf(1.0 / p - 0.5) } else { 1.0 };
                wmax * fac * self.diameter_euclidean()
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Gauge / dual gauge
// ---------------------------------------------------------------------------

/// The gauge (Minkowski functional) `‖x‖_B = inf{s ≥ 0 : x ∈ sB}`.
///
/// Returns `+∞` when `x` lies outside the span of a degenerate polytope.
pub fn gauge(body: &BodySpec, x: &[f64]) -> Result<f64> {
    body.check_point(x)?;
    Ok(match body {
        BodySpec::LqEllipsoid { q, b } => {
            let m = x.iter().zip(b).fold(0.0f64, |m, (v, bi)| m.max(v.abs() / bi));
            if m == 0.0 {
                0.0
            } else {
                let s: f64 = x.iter().zip(b).map(|(v, bi)| (v.abs() / bi / m).powf(*q)).sum();
                m * s.powf(1.0 / q)
            }
        }
        BodySpec::Octahedron { b } => x.iter().zip(b).map(|(v, bi)| v.abs() / bi).sum(),
        BodySpec::EuclideanBall { radius, .. } => norm2(x) / radius,
        BodySpec::AbsConvPolytope { vertices } => polytope_gauge(vertices, x)?,
        BodySpec::PerturbedSimplex { d, eps } => {
            let u = perturbed_simplex_solve(*d, *eps, x);
            u.iter().map(|v| v.abs()).sum()
        }
    })
}

/// The dual gauge (support function) `‖z‖_B^* = sup_{x∈B} ⟨z,x⟩`.
pub fn dual_gauge(body: &BodySpec, z: &[f64]) -> Result<f64> {
    body.check_point(z)?;
    Ok(match body {
        BodySpec::LqEllipsoid { q, b } => {
            let qs = dual_exponent(*q);
            let scaled: Vec<f64> = z.iter().zip(b).map(|(v, bi)| v * bi).collect();
            lp_norm(&scaled, qs)
        }
        BodySpec::Octahedron { b } => z.iter().zip(b).fold(0.0, |m, (v, bi)| m.max(bi * v.abs())),
        BodySpec::EuclideanBall { radius, .. } => radius * norm2(z),
        BodySpec::AbsConvPolytope { vertices } => {
            vertices.iter().map(|v| dot(z, v).abs()).fold(0.0, f64::max)
        }
        BodySpec::PerturbedSimplex { d, eps } => {
            // max_i |⟨z, x_i⟩| = ‖V z‖_∞ (V is symmetric).
            let vz = perturbed_simplex_apply(*d, *eps, z);
            vz.iter().fold(0.0f64, |m, v| m.max(v.abs()))
        }
    })
}

/// A norming functional for the gauge at `y`, with its ambient dual norm.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Subgradient {
    pub z: Vec<f64>,
    pub ambient_dual_norm: f64,
}

/// A subgradient `z ∈ ∂‖y‖_B`, i.e. `⟨z,y⟩ = ‖y‖_B` and `‖z‖_B^* ≤ 1`.
///
/// Among valid subgradients the returned one minimizes the ambient dual
/// norm for smooth bodies (where it is the unique gradient) and for the
/// octahedron (coordinatewise: off-support entries are zero). Polytopal
/// variants use the sign-vector construction `z = V^{-T} sign(V^{-1} y)`
/// with `sign(0) := 1` when the vertex matrix is square, and an optimal
/// dual-program vertex otherwise.
pub fn gauge_subgradient(body: &BodySpec, y: &[f64], ambient: &AmbientNorm) -> Result<Subgradient> {
    body.check_point(y)?;
    ambient.check_dim(y.len())?;
    let z = match body {
        BodySpec::LqEllipsoid { q, b } => {
            let g = gauge(body, y)?;
            if g == 0.0 {
                return Err(Error::NotDifferentiableAtOrigin);
            }
            y.iter()
                .zip(b)
                .map(|(v, bi)| {
                    if *v == 0.0 {
                        0.0
                    } else {
                        sign1(*v) * (v.abs() / bi / g).powf(q - 1.0) / bi
                    }
                })
                .collect::<Vec<f64>>()
        }
        BodySpec::EuclideanBall { radius, .. } => {
            let n = norm2(y);
            if n == 0.0 {
                return Err(Error::NotDifferentiableAtOrigin);
            }
            y.iter().map(|v| v / (n * radius)).collect()
        }
        BodySpec::Octahedron { b } => y
            .iter()
            .zip(b)
            .map(|(v, bi)| if *v == 0.0 { 0.0 } else { sign1(*v) / bi })
            .collect(),
        BodySpec::PerturbedSimplex { d, eps } => {
            let u = perturbed_simplex_solve(*d, *eps, y);
            let s: Vec<f64> = u.iter().map(|v| sign1(*v)).collect();
            perturbed_simplex_solve(*d, *eps, &s)
        }
        BodySpec::AbsConvPolytope { vertices } => polytope_subgradient(vertices, y)?,
    };
    let ambient_dual_norm = ambient.dual_norm(&z);
    Ok(Subgradient { z, ambient_dual_norm })
}

// ---------------------------------------------------------------------------
// Perturbed simplex linear algebra (Sherman–Morrison forms)
// ---------------------------------------------------------------------------

/// Vertices `x_i = e_i + ε d^{-1/2} (1,…,1)`.
pub(crate) fn perturbed_simplex_vertices(d: usize, eps: f64) -> Vec<Vec<f64>> {
    let c = eps / (d as f64).sqrt();
    (0..d)
        .map(|i| {
            let mut v = vec![c; d];
            v[i] += 1.0;
            v
        })
        .collect()
}

/// `V x` for `V = I + (ε/√d) 1 1ᵀ` (symmetric).
pub(crate) fn perturbed_simplex_apply(d: usize, eps: f64, x: &[f64]) -> Vec<f64> {
    let c = eps / (d as f64).sqrt();
    let s: f64 = x.iter().sum();
    x.iter().map(|v| v + c * s).collect()
}

/// `V^{-1} x = x − c/(1 + c d) (Σ x_i) 1`, exact by Sherman–Morrison;
/// `V` is invertible for every ε ∈ (0,1).
pub(crate) fn perturbed_simplex_solve(d: usize, eps: f64, x: &[f64]) -> Vec<f64> {
    let c = eps / (d as f64).sqrt();
    let s: f64 = x.iter().sum();
    let f = c / (1.0 + c * d as f64) * s;
    x.iter().map(|v| v - f).collect()
}

// ---------------------------------------------------------------------------
// General polytope gauge via linear programming
// ---------------------------------------------------------------------------

/// `min Σ (λ⁺ + λ⁻)` subject to `Σ v_j (λ⁺_j − λ⁻_j) = x`. Infeasible
/// means `x` is outside the span; the gauge is `+∞` there.
fn polytope_gauge(vertices: &[Point], x: &[f64]) -> Result<f64> {
    use minilp::{ComparisonOp, OptimizationDirection, Problem};
    let d = x.len();
    let m = vertices.len();
    let mut prob = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<_> = (0..2 * m).map(|_| prob.add_var(1.0, (0.0, f64::INFINITY))).collect();
    for i in 0..d {
        let mut expr = Vec::with_capacity(2 * m);
        for (j, v) in vertices.iter().enumerate() {
            expr.push((vars[j], v[i]));
            expr.push((vars[m + j], -v[i]));
        }
        prob.add_constraint(expr, ComparisonOp::Eq, x[i]);
    }
    match prob.solve() {
        Ok(sol) => Ok(sol.objective()),
        Err(minilp::Error::Infeasible) => Ok(f64::INFINITY),
        Err(e) => Err(Error::Unsupported(format!("polytope gauge LP failed: {e}"))),
    }
}

/// Norming functional by the dual program
/// `max ⟨z,x⟩ s.t. |⟨z,v_j⟩| ≤ 1`; strong LP duality gives
/// `⟨z,x⟩ = ‖x‖_B` and `‖z‖_B^* ≤ 1`.
fn polytope_subgradient(vertices: &[Point], x: &[f64]) -> Result<Vec<f64>> {
    let d = x.len();
    if vertices.len() == d {
        // Square vertex matrix: the sign-vector construction.
        let vt: Vec<Vec<f64>> = (0..d).map(|i| vertices.iter().map(|v| v[i]).collect()).collect();
        let cols: Vec<Vec<f64>> = vertices.iter().map(|v| v.as_slice().to_vec()).collect();
        if let Some(u) = solve_square(&cols, x) {
            let s: Vec<f64> = u.iter().map(|v| sign1(*v)).collect();
            if let Some(z) = solve_square(&vt, &s) {
                return Ok(z);
            }
        }
        // Singular vertex matrix: fall through to the LP.
    }
    use minilp::{ComparisonOp, OptimizationDirection, Problem};
    let mut prob = Problem::new(OptimizationDirection::Maximize);
    let vars: Vec<_> = x
        .iter()
        .map(|xi| prob.add_var(*xi, (f64::NEG_INFINITY, f64::INFINITY)))
        .collect();
    for v in vertices {
        let expr: Vec<_> = vars.iter().cloned().zip(v.iter().cloned()).collect();
        prob.add_constraint(expr.clone(), ComparisonOp::Le, 1.0);
        prob.add_constraint(expr, ComparisonOp::Ge, -1.0);
    }
    match prob.solve() {
        Ok(sol) => Ok(vars.iter().map(|v| sol[*v]).collect()),
        Err(e) => Err(Error::Unsupported(format!(
            "polytope norming LP failed (point outside span?): {e}"
        ))),
    }
}

/// Dense Gaussian elimination with partial pivoting; `cols` are the matrix
/// columns. Returns `None` if the matrix is numerically singular.
fn solve_square(cols: &[Vec<f64>], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = rhs.len();
    let mut a = vec![vec![0.0; n + 1]; n];
    for i in 0..n {
        for (j, col) in cols.iter().enumerate() {
            a[i][j] = col[i];
        }
        a[i][n] = rhs[i];
    }
    for k in 0..n {
        let piv = (k..n).max_by(|&i, &j| a[i][k].abs().partial_cmp(&a[j][k].abs()).unwrap())?;
        if a[piv][k].abs() < 1e-300 {
            return None;
        }
        a.swap(k, piv);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..=n {
                a[i][j] -= f * a[k][j];
            }
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let mut s = a[k][n];
        for j in k + 1..n {
            s -= a[k][j] * x[j];
        }
        x[k] = s / a[k][k];
    }
    Some(x)
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

/// Deterministic point cloud in or on the body.
///
/// `Boundary` points satisfy `|‖p‖_B − 1| ≤ 1e−9`; `Interior` points
/// satisfy `‖p‖_B ≤ 1 + 1e−9`. The sequence is a pure function of
/// `(body, count, seed, mode)`.
pub fn sample_cloud(
    body: &BodySpec,
    count: usize,
    seed: u64,
    mode: SampleMode,
) -> Result<Vec<Point>> {
    body.validate()?;
    if count == 0 {
        return Err(Error::InvalidParameter("count must be >= 1".into()));
    }
    let d = body.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let mut p = boundary_sample(body, d, &mut rng)?;
        if let SampleMode::Interior = mode {
            let u: f64 = rng.random::<f64>();
            let r = u.powf(1.0 / d as f64);
            for v in &mut p {
                *v *= r;
            }
        }
        out.push(Point(p));
    }
    Ok(out)
}

/// One point with gauge exactly 1, adapted to the body geometry so the
/// cloud spreads over the whole surface rather than concentrating.
fn boundary_sample(body: &BodySpec, d: usize, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    match body {
        BodySpec::EuclideanBall { radius, .. } => loop {
            let g: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
            let n = norm2(&g);
            if n > 0.0 {
                return Ok(g.iter().map(|v| radius * v / n).collect());
            }
        },
        BodySpec::LqEllipsoid { q, b } => {
            // u uniform-ish on the ℓq sphere via the q-generalized normal
            // (|t| ~ Gamma(1/q)^{1/q}), then stretch by the semiaxes.
            let gamma = Gamma::new(1.0 / q, 1.0)
                .map_err(|e| Error::InvalidParameter(format!("gamma sampler: {e}")))?;
            loop {
                let u: Vec<f64> = (0..d)
                    .map(|_| {
                        let g: f64 = gamma.sample(rng);
                        let s = if rng.random::<bool>() { 1.0 } else { -1.0 };
                        s * g.powf(1.0 / q)
                    })
                    .collect();
                let n = lp_norm(&u, *q);
                if n > 0.0 {
                    return Ok(u.iter().zip(b).map(|(v, bi)| bi * v / n).collect());
                }
            }
        }
        BodySpec::Octahedron { b } => loop {
            let e: Vec<f64> = (0..d).map(|_| Exp1.sample(rng)).collect();
            let s: f64 = e.iter().sum();
            if s > 0.0 {
                return Ok(e
                    .iter()
                    .zip(b)
                    .map(|(v, bi)| {
                        let sg = if rng.random::<bool>() { 1.0 } else { -1.0 };
                        sg * bi * v / s
                    })
                    .collect());
            }
        },
        BodySpec::PerturbedSimplex { .. } | BodySpec::AbsConvPolytope { .. } => {
            let verts = body.vertices().expect("polytopal body has vertices");
            loop {
                let e: Vec<f64> = (0..verts.len()).map(|_| Exp1.sample(rng)).collect();
                let tot: f64 = e.iter().sum();
                let mut p = vec![0.0; d];
                for (ej, v) in e.iter().zip(&verts) {
                    let sg = if rng.random::<bool>() { 1.0 } else { -1.0 };
                    let w = sg * ej / tot;
                    for (pi, vi) in p.iter_mut().zip(v) {
                        *pi += w * vi;
                    }
                }
                // Mixed signs can give a non-minimal representation; rescale
                // onto the true boundary.
                let g = gauge(body, &p)?;
                if g > 1e-12 && g.is_finite() {
                    return Ok(p.iter().map(|v| v / g).collect());
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(v: &[f64]) -> Vec<f64> {
        v.to_vec()
    }

    #[test]
    fn gauge_examples() {
        let e = BodySpec::LqEllipsoid { q: 2.0, b: vec![2.0, 1.0] };
        assert!((gauge(&e, &pt(&[2.0, 0.0])).unwrap() - 1.0).abs() < 1e-12);

        let o = BodySpec::Octahedron { b: vec![1.0, 1.0] };
        assert!((gauge(&o, &pt(&[0.5, 0.5])).unwrap() - 1.0).abs() < 1e-12);

        let ps = BodySpec::PerturbedSimplex { d: 2, eps: 0.5 };
        let u = 1.0 / 2f64.sqrt();
        let vertex = pt(&[1.0 + 0.5 * u, 0.5 * u]);
        assert!((gauge(&ps, &vertex).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dual_gauge_examples() {
        let e = BodySpec::LqEllipsoid { q: 2.0, b: vec![2.0, 1.0] };
        assert!((dual_gauge(&e, &pt(&[1.0, 0.0])).unwrap() - 2.0).abs() < 1e-12);
        assert!((dual_gauge(&e, &pt(&[1.0, 1.0])).unwrap() - 5f64.sqrt()).abs() < 1e-12);

        let o = BodySpec::Octahedron { b: vec![3.0, 1.0] };
        assert!((dual_gauge(&o, &pt(&[1.0, 1.0])).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn dual_gauge_matches_boundary_grid_maximization() {
        // Independent route: discretize the boundary of the ellipsoid and
        // maximize ⟨z, x⟩ directly.
        let e = BodySpec::LqEllipsoid { q: 2.0, b: vec![2.0, 1.0] };
        let z = pt(&[1.0, 1.0]);
        let mut best: f64 = 0.0;
        let n = 200_000;
        for k in 0..n {
            let th = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            let x = [2.0 * th.cos(), th.sin()];
            best = best.max(dot(&z, &x));
        }
        let dg = dual_gauge(&e, &z).unwrap();
        assert!((dg - best).abs() < 1e-6, "dg {dg} vs grid {best}");
        assert!((dg - 5f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn subgradient_unit_ball() {
        let b = BodySpec::EuclideanBall { radius: 1.0, dim: 2 };
        let s = gauge_subgradient(&b, &pt(&[0.6, 0.8]), &AmbientNorm::Euclidean).unwrap();
        assert!((s.z[0] - 0.6).abs() < 1e-12 && (s.z[1] - 0.8).abs() < 1e-12);
        assert!((s.ambient_dual_norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn subgradient_octahedron_minimal_norm() {
        // Free coordinate set to zero: minimal Euclidean dual norm is 1/2.
        let o = BodySpec::Octahedron { b: vec![2.0, 1.0] };
        let s = gauge_subgradient(&o, &pt(&[2.0, 0.0]), &AmbientNorm::Euclidean).unwrap();
        assert_eq!(s.z, vec![0.5, 0.0]);
        assert!((s.ambient_dual_norm - 0.5).abs() < 1e-12);
    }

    #[test]
    fn subgradient_matches_finite_differences() {
        let e = BodySpec::LqEllipsoid { q: 3.0, b: vec![1.0, 1.0] };
        let y = pt(&[1.0, 0.0]);
        let s = gauge_subgradient(&e, &y, &AmbientNorm::Euclidean).unwrap();
        let h = 1e-6;
        for k in 0..2 {
            let mut yp = y.clone();
            let mut ym = y.clone();
            yp[k] += h;
            ym[k] -= h;
            let fd = (gauge(&e, &yp).unwrap() - gauge(&e, &ym).unwrap()) / (2.0 * h);
            assert!((fd - s.z[k]).abs() < 1e-4, "coord {k}: fd {fd} vs {}", s.z[k]);
        }
        assert!((s.z[0] - 1.0).abs() < 1e-9 && s.z[1].abs() < 1e-12);
    }

    #[test]
    fn subgradient_is_norming_functional() {
        let bodies = [
            BodySpec::LqEllipsoid { q: 1.5, b: vec![2.0, 1.0, 0.5] },
            BodySpec::Octahedron { b: vec![2.0, 1.0, 0.5] },
            BodySpec::PerturbedSimplex { d: 3, eps: 0.25 },
        ];
        for body in &bodies {
            for p in sample_cloud(body, 50, 3, SampleMode::Interior).unwrap() {
                let g = gauge(body, &p).unwrap();
                if g < 1e-9 {
                    continue;
                }
                let s = gauge_subgradient(body, &p, &AmbientNorm::Euclidean).unwrap();
                assert!((dot(&s.z, &p) - g).abs() < 1e-9, "{body:?}");
                assert!(dual_gauge(body, &s.z).unwrap() <= 1.0 + 1e-9, "{body:?}");
            }
        }
    }

    #[test]
    fn polytope_gauge_lp_matches_octahedron() {
        let verts = vec![
            Point::new(vec![1.0, 0.0]).unwrap(),
            Point::new(vec![0.0, 0.5]).unwrap(),
        ];
        let p = BodySpec::AbsConvPolytope { vertices: verts };
        let o = BodySpec::Octahedron { b: vec![1.0, 0.5] };
        for x in [[0.3, -0.2], [1.0, 1.0], [-0.7, 0.1]] {
            let gp = gauge(&p, &x).unwrap();
            let go = gauge(&o, &x).unwrap();
            assert!((gp - go).abs() < 1e-7, "{gp} vs {go}");
        }
    }

    #[test]
    fn polytope_gauge_outside_span_is_infinite() {
        let verts = vec![Point::new(vec![1.0, 0.0]).unwrap()];
        let p = BodySpec::AbsConvPolytope { vertices: verts };
        assert!(gauge(&p, &[0.0, 1.0]).unwrap().is_infinite());
    }

    #[test]
    fn sample_cloud_deterministic_and_on_boundary() {
        let b = BodySpec::EuclideanBall { radius: 1.0, dim: 3 };
        let c1 = sample_cloud(&b, 3, 7, SampleMode::Boundary).unwrap();
        let c2 = sample_cloud(&b, 3, 7, SampleMode::Boundary).unwrap();
        assert_eq!(c1, c2);
        for p in &c1 {
            assert!((norm2(p) - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn sample_cloud_interior_members() {
        let o = BodySpec::Octahedron { b: vec![1.0, 1.0] };
        for p in sample_cloud(&o, 200, 5, SampleMode::Interior).unwrap() {
            assert!(gauge(&o, &p).unwrap() <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn sampled_support_maximum_approaches_dual_gauge() {
        let e = BodySpec::LqEllipsoid { q: 2.0, b: vec![2.0, 1.0] };
        let z = [1.0, 1.0];
        let cloud = sample_cloud(&e, 10_000, 1, SampleMode::Boundary).unwrap();
        let emp = cloud.iter().map(|p| dot(&z, p)).fold(f64::NEG_INFINITY, f64::max);
        let dg = dual_gauge(&e, &z).unwrap();
        assert!(emp <= dg + 1e-9);
        assert!(emp >= dg * 0.99, "empirical {emp} vs dual {dg}");
    }

    #[test]
    fn holder_equality_witness() {
        let amb = AmbientNorm::WeightedLp { p: 4.0, w: vec![1.0, 2.0, 4.0] };
        let x = [0.3, -1.2, 0.7];
        let z = amb.holder_witness(&x);
        assert!((dot(&z, &x) - amb.norm(&x)).abs() < 1e-9);
        assert!((amb.dual_norm(&z) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn weighted_lp_dual_roundtrip() {
        let amb = AmbientNorm::WeightedLp { p: 4.0, w: vec![1.0, 2.0] };
        let dual = amb.dual();
        match &dual {
            AmbientNorm::WeightedLp { p, w } => {
                assert!((p - 4.0 / 3.0).abs() < 1e-12);
                assert_eq!(w, &vec![1.0, 0.5]);
            }
            _ => panic!(),
        }
        let dd = dual.dual();
        match dd {
            AmbientNorm::WeightedLp { p, .. } => assert!((p - 4.0).abs() < 1e-12),
            _ => panic!(),
        }
    }

    #[test]
    fn dimension_cap_enforced() {
        let too_big = BodySpec::EuclideanBall { radius: 1.0, dim: MAX_DIM + 1 };
        assert!(too_big.validate().is_err());
    }

    #[test]
    fn body_json_roundtrip() {
        let b = BodySpec::LqEllipsoid { q: 2.0, b: vec![2.0, 1.0] };
        let s = serde_json::to_string(&b).unwrap();
        assert!(s.contains("\"kind\":\"lq_ellipsoid\""));
        let back: BodySpec = serde_json::from_str(&s).unwrap();
        assert_eq!(b, back);

        let a = AmbientNorm::WeightedLp { p: 4.0, w: vec![1.0, 2.0] };
        let s = serde_json::to_string(&a).unwrap();
        let back: AmbientNorm = serde_json::from_str(&s).unwrap();
        assert_eq!(a, back);
    }
}
