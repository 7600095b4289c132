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

//! Peetre's K-functional and the thin sets `B_t`.
//!
//! `K(t,x) = inf_y { ‖y‖_B + t ‖x−y‖ }` interpolates between the ambient
//! norm (small `t`) and the gauge of `B` (large `t`). Its minimizers
//! `π_t(x)` sweep out the sets
//!
//! `B_t = { y ∈ B : ∃ z, ⟨z,y⟩ = ‖y‖_B, ‖z‖_B^* ≤ 1, ‖z‖^* ≤ t }`,
//!
//! which is the dual description of `{π_t(x) : x ∈ B}`. Every value
//! returned by [`k_functional`] is certified: the primal candidate gives
//! an upper bound, a feasible dual point `z` gives the lower bound
//! `⟨z,x⟩`, and the gap between them is reported in the result.
//!
//! Solvers are specialized per body family so that profile-level
//! structure checks (concavity in `t`, displacement monotonicity) see
//! near machine-precision values: Euclidean balls are closed form,
//! `q = 2` ellipsoids reduce to a two-multiplier secular equation,
//! octahedra to a one-dimensional convex search with soft-thresholding,
//! polytopes to an ℓ1-synthesis problem solved by primal-dual splitting,
//! and the remaining (body, ambient) pairs to a separable
//! majorize-minimize scheme.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bodies::{
    self, perturbed_simplex_vertices, AmbientNorm, BodySpec,
};
use crate::linalg::{dist2, dot, golden_min, lp_norm, norm2, sign1};
use crate::{Error, Result};

/// Default relative gap tolerance for the iterative solvers.
pub const DEFAULT_TOL: f64 = 1e-6;

/// Iteration budget across the iterative solver paths.
pub const MAX_ITERS: usize = 100_000;

/// Value / minimizer / dual-certificate triple for `K(t, x)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KResult {
    pub t: f64,
    pub value: f64,
    pub gap: f64,
    pub minimizer: Vec<f64>,
    pub certificate: Vec<f64>,
    /// Two solver starts disagreed on the minimizer by more than 10×tol
    /// in ambient distance; the value itself is still certified.
    pub nonunique: bool,
}

impl KResult {
    /// Ambient displacement `‖x − π_t(x)‖` realized by the minimizer.
    pub fn displacement(&self, ambient: &AmbientNorm, x: &[f64]) -> f64 {
        ambient.dist(x, &self.minimizer)
    }
}

// ---------------------------------------------------------------------------
// K-functional
// ---------------------------------------------------------------------------

/// Compute `K(t,x)` with a certified primal-dual gap `≤ tol·(1+|value|)`.
pub fn k_functional(
    body: &BodySpec,
    ambient: &AmbientNorm,
    t: f64,
    x: &[f64],
    tol: f64,
) -> Result<KResult> {
    body.validate()?;
    ambient.validate()?;
    body.check_point(x)?;
    ambient.check_dim(x.len())?;
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidParameter(format!("t = {t} must be finite and >= 0")));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter("tol must be > 0".into()));
    }
    let d = x.len();
    if t == 0.0 || x.iter().all(|v| *v == 0.0) {
        // K(0, x) = 0 with minimizer 0; likewise K(t, 0) = 0.
        return Ok(KResult {
            t,
            value: 0.0,
            gap: 0.0,
            minimizer: vec![0.0; d],
            certificate: vec![0.0; d],
            nonunique: false,
        });
    }

    let solved = match (body, ambient) {
        (BodySpec::EuclideanBall { radius, .. }, AmbientNorm::Euclidean) => {
            solve_ball_euclidean(*radius, t, x)
        }
        (BodySpec::LqEllipsoid { q, b }, AmbientNorm::Euclidean) if *q == 2.0 => {
            solve_ellipsoid2_secular(b, t, x)
        }
        (BodySpec::Octahedron { b }, AmbientNorm::Euclidean) => solve_octahedron_euclidean(b, t, x),
        (
            BodySpec::PerturbedSimplex { .. } | BodySpec::AbsConvPolytope { .. },
            AmbientNorm::Euclidean,
        ) => solve_l1_synthesis(body, t, x, tol)?,
        _ => solve_separable_mm(body, ambient, t, x, tol)?,
    };

    finish(body, ambient, t, x, tol, solved)
}

/// Raw solver output before certification.
struct Solved {
    y: Vec<f64>,
    /// Dual point proposed by the solver, if it has one.
    z: Option<Vec<f64>>,
    nonunique: bool,
    iterations: usize,
}

/// Certify a solver output: compare primal candidates, synthesize a dual
/// feasible point, and enforce the gap tolerance.
fn finish(
    body: &BodySpec,
    ambient: &AmbientNorm,
    t: f64,
    x: &[f64],
    tol: f64,
    solved: Solved,
) -> Result<KResult> {
    let d = x.len();
    let primal =
        |y: &[f64]| -> Result<f64> { Ok(bodies::gauge(body, y)? + t * ambient.dist(x, y)) };

    // Primal side: the solver candidate against the two endpoint
    // candidates y = 0 and y = x (exact when x ∈ B_t).
    let mut best_y = solved.y;
    let mut best_v = primal(&best_y)?;
    let zero = vec![0.0; d];
    let v0 = t * ambient.norm(x);
    if v0 < best_v {
        best_v = v0;
        best_y = zero.clone();
    }
    let gx = bodies::gauge(body, x)?;
    if gx.is_finite() && gx < best_v {
        best_v = gx;
        best_y = x.to_vec();
    }

    // Dual side: scale every candidate into {‖z‖_B^* ≤ 1, ‖z‖^* ≤ t} and
    // keep the best ⟨z, x⟩.
    let mut best_dual = 0.0f64;
    let mut best_z = zero.clone();
    let mut consider = |z: &[f64]| -> Result<()> {
        let s = (bodies::dual_gauge(body, z)?)
            .max(ambient.dual_norm(z) / t)
            .max(1.0);
        let zs: Vec<f64> = z.iter().map(|v| v / s).collect();
        let val = dot(&zs, x);
        if val > best_dual {
            best_dual = val;
            best_z = zs;
        }
        Ok(())
    };
    if let Some(z) = &solved.z {
        consider(z)?;
    }
    // Norming functional at the minimizer.
    if best_y.iter().any(|v| *v != 0.0) {
        if let Ok(sg) = bodies::gauge_subgradient(body, &best_y, ambient) {
            consider(&sg.z)?;
        }
    }
    // Scaled ambient-norm subgradient at the residual.
    let resid_norm = ambient.dist(x, &best_y);
    if resid_norm > 1e-300 {
        let w: Vec<f64> = x.iter().zip(&best_y).map(|(a, b)| a - b).collect();
        let hw = ambient.holder_witness(&w);
        let zt: Vec<f64> = hw.iter().map(|v| t * v).collect();
        consider(&zt)?;
    }
    // Norming functional at x itself (exact when x ∈ B_t).
    if let Ok(sg) = bodies::gauge_subgradient(body, x, ambient) {
        consider(&sg.z)?;
    }

    let gap = (best_v - best_dual).max(0.0);
    if gap > tol * (1.0 + best_v.abs()) {
        return Err(Error::NonConvergence {
            gap,
            iterations: solved.iterations,
            primal: best_v,
            dual: best_dual,
        });
    }
    Ok(KResult {
        t,
        value: best_v,
        gap,
        minimizer: best_y,
        certificate: best_z,
        nonunique: solved.nonunique,
    })
}

/// K-profile over an increasing grid of `t` values.
///
/// Grid points are independent and evaluated in parallel; results are
/// assembled in grid order.
pub fn k_profile(
    body: &BodySpec,
    ambient: &AmbientNorm,
    x: &[f64],
    t_grid: &[f64],
    tol: f64,
) -> Result<Vec<KResult>> {
    if t_grid.is_empty() {
        return Err(Error::InvalidParameter("t_grid must be nonempty".into()));
    }
    if t_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("t_grid must be strictly increasing".into()));
    }
    t_grid
        .par_iter()
        .map(|t| k_functional(body, ambient, *t, x, tol))
        .collect()
}

// ---------------------------------------------------------------------------
// Per-family solvers
// ---------------------------------------------------------------------------

/// Ball with Euclidean ambient: `K(t,x) = min(1/r, t)·‖x‖`, minimizer at
/// an endpoint of the segment `[0, x]`.
fn solve_ball_euclidean(radius: f64, t: f64, x: &[f64]) -> Solved {
    let inv_r = 1.0 / radius;
    let n = norm2(x);
    let (y, nonunique) = if t < inv_r {
        (vec![0.0; x.len()], false)
    } else {
        (x.to_vec(), t == inv_r)
    };
    let c = inv_r.min(t);
    let z: Vec<f64> = x.iter().map(|v| c * v / n).collect();
    Solved { y, z: Some(z), nonunique, iterations: 0 }
}

/// `q = 2` ellipsoid with Euclidean ambient.
///
/// The dual problem `max{⟨z,x⟩ : ‖D z‖ ≤ 1, ‖z‖ ≤ t}` (`D = diag(b)`)
/// has Lagrangian solution `z_i = x_i/(μ + ν b_i²)`; the dual function
/// `g(μ,ν) = ½ Σ x_i²/(μ+ν b_i²) + ½ μ t² + ½ ν` is smooth and convex on
/// the quadrant, and exact coordinate descent on `(μ, ν)` converges to
/// machine precision. The primal minimizer is recovered as
/// `y_i = ν b_i² z_i`.
fn solve_ellipsoid2_secular(b: &[f64], t: f64, x: &[f64]) -> Solved {
    // S(μ) = Σ x²/(μ+νb²)², monotone decreasing; root of S = t² in μ.
    let mu_of = |nu: f64| -> f64 {
        let s = |mu: f64| -> f64 {
            x.iter()
                .zip(b)
                .map(|(xi, bi)| {
                    let den = mu + nu * bi * bi;
                    (xi / den) * (xi / den)
                })
                .sum()
        };
        if s(0.0) <= t * t {
            return 0.0;
        }
        let mut lo = 0.0;
        let mut hi = norm2(x) / t;
        for _ in 0..120 {
            let mid = 0.5 * (lo + hi);
            if s(mid) > t * t {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    // T(ν) = Σ b²x²/(μ+νb²)², root of T = 1 in ν.
    let nu_of = |mu: f64| -> f64 {
        let tt = |nu: f64| -> f64 {
            x.iter()
                .zip(b)
                .map(|(xi, bi)| {
                    let den = mu + nu * bi * bi;
                    let r = bi * xi / den;
                    r * r
                })
                .sum()
        };
        if tt(0.0) <= 1.0 {
            return 0.0;
        }
        let gauge2: f64 = x.iter().zip(b).map(|(xi, bi)| (xi / bi) * (xi / bi)).sum();
        let mut lo = 0.0;
        let mut hi = gauge2.sqrt();
        for _ in 0..120 {
            let mid = 0.5 * (lo + hi);
            if tt(mid) > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };

    let gauge0: f64 = x
        .iter()
        .zip(b)
        .map(|(xi, bi)| (xi / bi) * (xi / bi))
        .sum::<f64>()
        .sqrt();
    let mut nu = gauge0;
    let mut mu = 0.0;
    let mut iterations = 0;
    for _ in 0..200 {
        iterations += 1;
        let mu_new = mu_of(nu);
        let nu_new = nu_of(mu_new);
        let moved = (mu_new - mu).abs() + (nu_new - nu).abs();
        mu = mu_new;
        nu = nu_new;
        if moved <= 1e-15 * (1.0 + mu + nu) {
            break;
        }
    }
    let z: Vec<f64> = x
        .iter()
        .zip(b)
        .map(|(xi, bi)| {
            let den = mu + nu * bi * bi;
            if den > 0.0 {
                xi / den
            } else {
                0.0
            }
        })
        .collect();
    let y: Vec<f64> = z.iter().zip(b).map(|(zi, bi)| nu * bi * bi * zi).collect();
    Solved { y, z: Some(z), nonunique: false, iterations }
}

/// Octahedron with Euclidean ambient.
///
/// The minimizer is a coordinatewise soft threshold
/// `y_i(ρ) = sign(x_i) (|x_i| − ρ/(t b_i))_+` at the fixed point
/// `ρ = ‖x − y(ρ)‖`. The ratio `‖x − y(ρ)‖²/ρ²` is monotone in `ρ`, so
/// bisection recovers the fixed point (hence an exact primal-dual pair)
/// to machine precision; `ρ = 0` means `x` is its own minimizer.
fn solve_octahedron_euclidean(b: &[f64], t: f64, x: &[f64]) -> Solved {
    let shrink = |rho: f64| -> Vec<f64> {
        x.iter()
            .zip(b)
            .map(|(xi, bi)| {
                let thr = rho / (t * bi);
                sign1(*xi) * (xi.abs() - thr).max(0.0)
            })
            .collect()
    };
    // g(ρ) = Σ min(|x_i|/ρ, 1/(t b_i))² − 1, nonincreasing in ρ.
    let g = |rho: f64| -> f64 {
        x.iter()
            .zip(b)
            .map(|(xi, bi)| {
                let r = (xi.abs() / rho).min(1.0 / (t * bi));
                r * r
            })
            .sum::<f64>()
            - 1.0
    };
    let slope0: f64 = x
        .iter()
        .zip(b)
        .map(|(xi, bi)| if *xi != 0.0 { 1.0 / (t * bi * t * bi) } else { 0.0 })
        .sum();
    let rho = if slope0 <= 1.0 {
        0.0
    } else {
        let mut lo = norm2(x) * 1e-18;
        let mut hi = norm2(x);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if g(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let objective = |y: &[f64]| -> f64 {
        y.iter().zip(b).map(|(yi, bi)| yi.abs() / bi).sum::<f64>() + t * dist2(x, y)
    };
    let mut best_y = if rho > 0.0 { shrink(rho) } else { x.to_vec() };
    let mut best_v = objective(&best_y);
    // Exact endpoint candidates.
    for cand in [x.to_vec(), vec![0.0; x.len()]] {
        let v = objective(&cand);
        if v < best_v {
            best_v = v;
            best_y = cand;
        }
    }
    // Dual candidate from the residual direction, clipped into the box
    // {|z_i| ≤ 1/b_i} which is exactly the dual-gauge ball.
    let rn = dist2(x, &best_y);
    let z = if rn > 0.0 {
        x.iter()
            .zip(&best_y)
            .zip(b)
            .map(|((xi, yi), bi)| {
                let v = t * (xi - yi) / rn;
                v.clamp(-1.0 / bi, 1.0 / bi)
            })
            .collect()
    } else {
        best_y
            .iter()
            .zip(b)
            .map(|(yi, bi)| if *yi == 0.0 { 0.0 } else { sign1(*yi) / bi })
            .collect()
    };
    Solved { y: best_y, z: Some(z), nonunique: false, iterations: 200 }
}

/// Polytopal bodies with Euclidean ambient, in synthesis form:
/// `min_λ ‖λ‖₁ + t ‖x − V λ‖₂` over vertex coefficients, solved by
/// primal-dual splitting. The dual iterate doubles as the certificate.
fn solve_l1_synthesis(body: &BodySpec, t: f64, x: &[f64], tol: f64) -> Result<Solved> {
    let d = x.len();
    let (verts, opnorm) = match body {
        BodySpec::PerturbedSimplex { d: dd, eps } => {
            (perturbed_simplex_vertices(*dd, *eps), 1.0 + eps * (*dd as f64).sqrt())
        }
        BodySpec::AbsConvPolytope { vertices } => {
            let v: Vec<Vec<f64>> = vertices.iter().map(|p| p.as_slice().to_vec()).collect();
            let n = operator_norm(&v, d);
            (v, n)
        }
        _ => unreachable!("l1 synthesis is only used for polytopal bodies"),
    };
    let m = verts.len();
    let apply = |lam: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; d];
        for (lj, v) in lam.iter().zip(&verts) {
            if *lj != 0.0 {
                for (o, vi) in out.iter_mut().zip(v) {
                    *o += lj * vi;
                }
            }
        }
        out
    };
    let apply_t = |z: &[f64]| -> Vec<f64> { verts.iter().map(|v| dot(z, v)).collect() };

    let step = 0.99 / opnorm.max(1e-12);
    let run = |lam0: Vec<f64>| -> (Vec<f64>, Vec<f64>, usize) {
        let mut lam = lam0;
        let mut lam_bar = lam.clone();
        let mut z = vec![0.0; d];
        let mut best_syn = f64::INFINITY;
        let mut best_lam = lam.clone();
        let mut iters = 0;
        for k in 0..MAX_ITERS / 2 {
            iters = k + 1;
            let vl = apply(&lam_bar);
            for i in 0..d {
                z[i] += step * (x[i] - vl[i]);
            }
            let zn = norm2(&z);
            if zn > t {
                let s = t / zn;
                for zi in &mut z {
                    *zi *= s;
                }
            }
            let g = apply_t(&z);
            let mut lam_new = vec![0.0; m];
            for j in 0..m {
                let v = lam[j] + step * g[j];
                lam_new[j] = sign1(v) * (v.abs() - step).max(0.0);
            }
            for j in 0..m {
                lam_bar[j] = 2.0 * lam_new[j] - lam[j];
            }
            lam = lam_new;

            if k % 16 == 0 {
                let y = apply(&lam);
                let syn = lam.iter().map(|v| v.abs()).sum::<f64>() + t * dist2(x, &y);
                if syn < best_syn {
                    best_syn = syn;
                    best_lam = lam.clone();
                }
                // Gap estimate against the scaled dual iterate.
                let dg = apply_t(&z).iter().fold(0.0f64, |mm, v| mm.max(v.abs()));
                let zn2 = norm2(&z);
                let s = dg.max(zn2 / t).max(1.0);
                let dual = dot(&z, x) / s;
                if best_syn - dual <= 0.25 * tol * (1.0 + best_syn.abs()) {
                    break;
                }
            }
        }
        (best_lam, z, iters)
    };

    let (lam_a, z_a, it_a) = run(vec![0.0; m]);
    let y_a = apply(&lam_a);
    // Second start from a warm point, to flag non-unique minimizers.
    let warm: Vec<f64> = apply_t(x).iter().map(|v| 0.5 * v / opnorm).collect();
    let (lam_b, _, _) = run(warm);
    let y_b = apply(&lam_b);
    let nonunique = dist2(&y_a, &y_b) > 10.0 * tol;
    Ok(Solved { y: y_a, z: Some(z_a), nonunique, iterations: it_a })
}

fn operator_norm(cols: &[Vec<f64>], d: usize) -> f64 {
    // Power iteration on V Vᵀ with a deterministic start.
    let mut v: Vec<f64> = (0..d).map(|i| 1.0 + (i as f64) * 1e-3).collect();
    let mut norm = 0.0;
    for _ in 0..60 {
        let mut w = vec![0.0; d];
        for c in cols {
            let a = dot(&v, c);
            for (wi, ci) in w.iter_mut().zip(c) {
                *wi += a * ci;
            }
        }
        norm = norm2(&w);
        if norm == 0.0 {
            return 1.0;
        }
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / norm;
        }
    }
    norm.sqrt().max(1e-12)
}

/// Separable majorize-minimize for the remaining (body, ambient)
/// combinations. Variational upper bounds make both the gauge and the
/// ambient distance coordinatewise-separable, reducing each sweep to
/// monotone scalar root-finding.
fn solve_separable_mm(
    body: &BodySpec,
    ambient: &AmbientNorm,
    t: f64,
    x: &[f64],
    tol: f64,
) -> Result<Solved> {
    let d = x.len();
    // Body term: κ(σ₁)·|u|^γ per coordinate.
    let (gamma, base): (f64, Vec<f64>) = match body {
        BodySpec::LqEllipsoid { q, b } => (*q, b.iter().map(|bi| 1.0 / bi.powf(*q) / q).collect()),
        BodySpec::Octahedron { b } => (1.0, b.iter().map(|bi| 1.0 / bi).collect()),
        BodySpec::EuclideanBall { radius, .. } => (2.0, vec![0.5 / (radius * radius); d]),
        _ => {
            return Err(Error::Unsupported(
                "K-functional for polytopal bodies requires the Euclidean ambient norm".into(),
            ))
        }
    };
    let (p, w): (f64, Vec<f64>) = match ambient {
        AmbientNorm::Euclidean => (2.0, vec![1.0; d]),
        AmbientNorm::WeightedLp { p, w } => (*p, w.clone()),
    };
    if p.is_infinite() {
        return solve_box_linf(body, ambient, t, x);
    }

    let objective =
        |y: &[f64]| -> Result<f64> { Ok(bodies::gauge(body, y)? + t * ambient.dist(x, y)) };

    let run = |y0: Vec<f64>| -> Result<(Vec<f64>, usize)> {
        let mut y = y0;
        let mut best = objective(&y)?;
        let mut best_y = y.clone();
        let mut stall = 0;
        let mut iters = 0;
        for _ in 0..4000 {
            iters += 1;
            let sigma1 = bodies::gauge(body, &y)?.max(1e-12);
            let sigma2 = ambient.dist(x, &y).max(1e-12);
            // κ per coordinate (γ = 1 needs no σ₁).
            let kappa: Vec<f64> = if gamma == 1.0 {
                base.clone()
            } else {
                base.iter().map(|c| c / sigma1.powf(gamma - 1.0)).collect()
            };
            // Ambient factor e per coordinate (p = 1 needs no σ₂).
            let e: Vec<f64> = if p == 1.0 {
                w.iter().map(|wi| t * wi).collect()
            } else {
                w.iter().map(|wi| t * wi.powf(p) / (p * sigma2.powf(p - 1.0))).collect()
            };
            for i in 0..d {
                let bigx = x[i].abs();
                if bigx == 0.0 {
                    y[i] = 0.0;
                    continue;
                }
                let (k, ei) = (kappa[i], e[i]);
                let dphi = |u: f64| -> f64 {
                    let bt = if gamma == 1.0 { k } else { k * gamma * u.powf(gamma - 1.0) };
                    let at = if p == 1.0 { ei } else { ei * p * (bigx - u).powf(p - 1.0) };
                    bt - at
                };
                let u = if dphi(0.0) >= 0.0 {
                    0.0
                } else if dphi(bigx) <= 0.0 {
                    bigx
                } else {
                    let mut lo = 0.0;
                    let mut hi = bigx;
                    for _ in 0..80 {
                        let mid = 0.5 * (lo + hi);
                        if dphi(mid) <= 0.0 {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    0.5 * (lo + hi)
                };
                y[i] = sign1(x[i]) * u;
            }
            let v = objective(&y)?;
            if v < best - 1e-15 * (1.0 + best.abs()) {
                best = v;
                best_y = y.clone();
                stall = 0;
            } else {
                stall += 1;
                if stall >= 4 {
                    break;
                }
            }
        }
        Ok((best_y, iters))
    };

    let gx = bodies::gauge(body, x)?;
    let y0: Vec<f64> =
        if gx > 1.0 { x.iter().map(|v| v / gx).collect() } else { x.to_vec() };
    let (y_a, it_a) = run(y0)?;
    let (y_b, _) = run(vec![0.0; d])?;
    let va = objective(&y_a)?;
    let vb = objective(&y_b)?;
    let close = (va - vb).abs() <= 10.0 * tol * (1.0 + va.abs());
    let nonunique = close && ambient.dist(&y_a, &y_b) > 10.0 * tol;
    let y = if va <= vb { y_a } else { y_b };
    Ok(Solved { y, z: None, nonunique, iterations: it_a })
}

/// Weighted ℓ∞ ambient: parametrize by the sup term `m` and clip every
/// coordinate into the box `|x_i − y_i| ≤ m / w_i`; the value is convex
/// in `m`.
fn solve_box_linf(body: &BodySpec, ambient: &AmbientNorm, t: f64, x: &[f64]) -> Result<Solved> {
    let w = match ambient {
        AmbientNorm::WeightedLp { w, .. } => w.clone(),
        _ => unreachable!(),
    };
    let clip = |m: f64| -> Vec<f64> {
        x.iter()
            .zip(&w)
            .map(|(xi, wi)| {
                let slack = m / wi;
                sign1(*xi) * (xi.abs() - slack).max(0.0)
            })
            .collect()
    };
    let value = |m: f64| -> f64 {
        let y = clip(m);
        bodies::gauge(body, &y).unwrap_or(f64::INFINITY) + t * m
    };
    let hi = ambient.norm(x) * (1.0 + 1e-12);
    let m = golden_min(0.0, hi, value);
    let y = clip(m.max(0.0));
    Ok(Solved { y, z: None, nonunique: false, iterations: 200 })
}

// ---------------------------------------------------------------------------
// Membership in B_t
// ---------------------------------------------------------------------------

/// Outcome of a `B_t` membership test.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BtMembership {
    pub member: bool,
    /// Witness `z` with `⟨z,y⟩ = ‖y‖_B`, `‖z‖_B^* ≤ 1`, `‖z‖^* ≤ t`
    /// (present iff `member`).
    pub certificate: Option<Vec<f64>>,
    /// Ambient dual norm of the tested subgradient.
    pub witness_dual_norm: f64,
}

/// Decide `y ∈ B_t` via the subdifferential criterion
/// `inf_{z ∈ ∂‖y‖_B} ‖z‖^* ≤ t`.
///
/// Smooth bodies use the unique gradient, the octahedron its minimal
/// dual-norm subgradient, the perturbed simplex the sign-vector
/// certificate, and general polytopes a Dykstra feasibility program
/// (Euclidean ambient only). `y = 0` is always a member.
pub fn bt_member(
    body: &BodySpec,
    ambient: &AmbientNorm,
    t: f64,
    y: &[f64],
    tol: f64,
) -> Result<BtMembership> {
    body.validate()?;
    ambient.validate()?;
    body.check_point(y)?;
    ambient.check_dim(y.len())?;
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!("t = {t} must be >= 0")));
    }
    let g = bodies::gauge(body, y)?;
    if g > 1.0 + tol {
        return Err(Error::OutsideBody { gauge: g, tol });
    }
    if y.iter().all(|v| *v == 0.0) {
        return Ok(BtMembership {
            member: true,
            certificate: Some(vec![0.0; y.len()]),
            witness_dual_norm: 0.0,
        });
    }
    // Large-t shortcut: every point of B is in B_t once t dominates all
    // attainable subgradient norms; avoids pointless arithmetic at the
    // t → ∞ end (K(t, x) → ‖x‖_B).
    if t >= shortcut_threshold(body, ambient) {
        let sg = bodies::gauge_subgradient(body, y, ambient)?;
        return Ok(BtMembership {
            member: true,
            witness_dual_norm: sg.ambient_dual_norm,
            certificate: Some(sg.z),
        });
    }
    let slack = tol * (1.0 + t);
    match body {
        BodySpec::AbsConvPolytope { vertices } => {
            if !matches!(ambient, AmbientNorm::Euclidean) {
                return Err(Error::Unsupported(
                    "polytope B_t membership requires the Euclidean ambient norm".into(),
                ));
            }
            let verts: Vec<Vec<f64>> = vertices.iter().map(|p| p.as_slice().to_vec()).collect();
            let (z, zn, feasible) = dykstra_min_norm_certificate(&verts, y, g, tol);
            let member = feasible && zn <= t + slack;
            Ok(BtMembership { member, certificate: member.then_some(z), witness_dual_norm: zn })
        }
        _ => {
            let sg = bodies::gauge_subgradient(body, y, ambient)?;
            let member = sg.ambient_dual_norm <= t + slack;
            Ok(BtMembership {
                member,
                witness_dual_norm: sg.ambient_dual_norm,
                certificate: member.then_some(sg.z),
            })
        }
    }
}

fn shortcut_threshold(body: &BodySpec, ambient: &AmbientNorm) -> f64 {
    let d = body.dim() as f64;
    let base = match body {
        BodySpec::LqEllipsoid { b, .. } | BodySpec::Octahedron { b } => 1.0 / b[b.len() - 1],
        BodySpec::EuclideanBall { radius, .. } => 1.0 / radius,
        BodySpec::PerturbedSimplex { .. } | BodySpec::AbsConvPolytope { .. } => {
            let diam = body.diameter_euclidean().max(1e-12);
            2.0 / diam * d
        }
    };
    let wfac = match ambient {
        AmbientNorm::Euclidean => 1.0,
        AmbientNorm::WeightedLp { w, .. } => {
            let wmin = w.iter().fold(f64::INFINITY, |m, v| m.min(*v));
            1.0 / wmin * d
        }
    };
    1e6 * d.sqrt() * base * wfac
}

/// Minimum-Euclidean-norm `z` with `⟨z,y⟩ = ‖y‖_B` and `|⟨z,v_j⟩| ≤ 1`,
/// by Dykstra's alternating projections started at the origin. Returns
/// `(z, ‖z‖, feasibility)`.
fn dykstra_min_norm_certificate(
    verts: &[Vec<f64>],
    y: &[f64],
    gauge_y: f64,
    tol: f64,
) -> (Vec<f64>, f64, bool) {
    let d = y.len();
    let yn2 = dot(y, y);
    let vn2: Vec<f64> = verts.iter().map(|v| dot(v, v)).collect();
    let nsets = 1 + verts.len();
    let mut z = vec![0.0; d];
    let mut increments = vec![vec![0.0; d]; nsets];
    let mut prev = vec![0.0; d];
    for cycle in 0..20_000 {
        prev.copy_from_slice(&z);
        for (k, inc) in increments.iter_mut().enumerate() {
            let v: Vec<f64> = z.iter().zip(inc.iter()).map(|(a, b)| a + b).collect();
            let proj: Vec<f64> = if k == 0 {
                let delta = (gauge_y - dot(&v, y)) / yn2;
                v.iter().zip(y).map(|(vi, yi)| vi + delta * yi).collect()
            } else {
                let vert = &verts[k - 1];
                let ip = dot(&v, vert);
                let clipped = ip.clamp(-1.0, 1.0);
                if ip == clipped {
                    v.clone()
                } else {
                    v.iter()
                        .zip(vert)
                        .map(|(vi, wi)| vi - (ip - clipped) * wi / vn2[k - 1])
                        .collect()
                }
            };
            for i in 0..d {
                inc[i] = v[i] - proj[i];
                z[i] = proj[i];
            }
        }
        let moved = dist2(&prev, &z);
        if cycle > 10 && moved <= 1e-3 * tol * (1.0 + norm2(&z)) {
            break;
        }
    }
    let feas_plane = (dot(&z, y) - gauge_y).abs() <= 10.0 * tol * (1.0 + gauge_y);
    let feas_box = verts.iter().all(|v| dot(&z, v).abs() <= 1.0 + 10.0 * tol);
    let zn = norm2(&z);
    (z, zn, feas_plane && feas_box)
}

// ---------------------------------------------------------------------------
// Closed forms for B_t
// ---------------------------------------------------------------------------

/// Analytic description of `B_t` per body family.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum BtDescription {
    /// `B_t ⊆ t^{1/(q−1)}·C` where `C` is the ℓ_{2q−2} ellipsoid with
    /// semiaxes `c_i = b_i^{q/(q−1)}`.
    EllipsoidDilation { t: f64, c: Vec<f64>, exponent: f64, dilation: f64 },
    /// Exact description (Euclidean ambient): the sparse vectors
    /// `{y ∈ B : Σ_{y_i ≠ 0} w_i ≤ t²}` with `w_i = 1/b_i²`.
    SparsitySet { t: f64, weights: Vec<f64> },
    /// `B_t = B` for `t ≥ threshold` and `{0}` below it.
    WholeBodyAboveThreshold { threshold: f64 },
    /// A guaranteed subset of `B_t` (one-directional).
    Superset { description: String },
}

/// Closed-form description of `B_t` for the bodies that admit one.
pub fn bt_closed_form(body: &BodySpec, t: f64) -> Result<BtDescription> {
    body.validate()?;
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!("t = {t} must be >= 0")));
    }
    match body {
        BodySpec::LqEllipsoid { q, b } => {
            let power = q / (q - 1.0);
            Ok(BtDescription::EllipsoidDilation {
                t,
                c: b.iter().map(|bi| bi.powf(power)).collect(),
                exponent: 2.0 * q - 2.0,
                dilation: t.powf(1.0 / (q - 1.0)),
            })
        }
        BodySpec::Octahedron { b } => Ok(BtDescription::SparsitySet {
            t,
            weights: b.iter().map(|bi| 1.0 / (bi * bi)).collect(),
        }),
        BodySpec::EuclideanBall { radius, .. } => {
            Ok(BtDescription::WholeBodyAboveThreshold { threshold: 1.0 / radius })
        }
        BodySpec::PerturbedSimplex { d, eps } => {
            let thr = 1.0 / eps;
            Ok(BtDescription::Superset {
                description: if t >= thr {
                    format!(
                        "B_t contains conv(x_1..x_{d}) since t = {t} >= 1/eps = {thr}; \
                         witness v = u / (t (eps + d^-1/2))"
                    )
                } else {
                    format!(
                        "no guarantee: t = {t} < 1/eps = {thr} (the containment is one-directional)"
                    )
                },
            })
        }
        BodySpec::AbsConvPolytope { .. } => Err(Error::NoClosedForm),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bodies::{sample_cloud, SampleMode};

    const EU: AmbientNorm = AmbientNorm::Euclidean;

    #[test]
    fn k_at_zero_is_exactly_zero() {
        let b = BodySpec::Octahedron { b: vec![2.0, 1.0] };
        let r = k_functional(&b, &EU, 0.0, &[0.7, -0.3], 1e-9).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.minimizer, vec![0.0, 0.0]);
        assert_eq!(r.gap, 0.0);
    }

    #[test]
    fn k_ball_collinear_closed_form() {
        let b = BodySpec::EuclideanBall { radius: 1.0, dim: 2 };
        let r = k_functional(&b, &EU, 0.5, &[3.0, 0.0], 1e-9).unwrap();
        assert!((r.value - 1.5).abs() < 1e-12);
        assert_eq!(r.minimizer, vec![0.0, 0.0]);
        assert!(r.gap <= 1e-9 * 2.5);
    }

    #[test]
    fn k_ball_profile_values() {
        let b = BodySpec::EuclideanBall { radius: 1.0, dim: 2 };
        let x = [3.0, 0.0];
        let prof = k_profile(&b, &EU, &x, &[0.25, 0.5, 1.0, 2.0], 1e-9).unwrap();
        let vals: Vec<f64> = prof.iter().map(|r| r.value).collect();
        for (v, want) in vals.iter().zip([0.75, 1.5, 3.0, 3.0]) {
            assert!((v - want).abs() < 1e-10, "{vals:?}");
        }
    }

    /// Brute-force 2-D grid oracle for `min_y ‖y‖_B + t‖x − y‖₂`.
    fn grid_oracle(body: &BodySpec, t: f64, x: &[f64], lo: f64, hi: f64, step: f64) -> f64 {
        let n = ((hi - lo) / step).round() as usize;
        let mut best = f64::INFINITY;
        for i in 0..=n {
            let y0 = lo + i as f64 * step;
            for j in 0..=n {
                let y1 = lo + j as f64 * step;
                let y = [y0, y1];
                let v = bodies::gauge(body, &y).unwrap() + t * dist2(x, &y);
                if v < best {
                    best = v;
                }
            }
        }
        best
    }

    #[test]
    fn k_ellipsoid_q2_matches_grid_oracle() {
        let body = BodySpec::LqEllipsoid { q: 2.0, b: vec![2.0, 1.0] };
        let x = [1.0, 1.0];
        let r = k_functional(&body, &EU, 1.0, &x, 1e-9).unwrap();
        let coarse = grid_oracle(&body, 1.0, &x, -2.0, 2.0, 0.008);
        assert!((r.value - coarse).abs() < 1e-4, "k {} vs grid {}", r.value, coarse);
        assert!(r.gap <= 1e-9 * (1.0 + r.value));
    }

    #[test]
    fn k_octahedron_matches_grid_oracle() {
        let body = BodySpec::Octahedron { b: vec![1.5, 0.75] };
        let x = [0.9, -0.4];
        for t in [0.3, 0.8, 1.7] {
            let r = k_functional(&body, &EU, t, &x, 1e-10).unwrap();
            let grid = grid_oracle(&body, t, &x, -2.0, 2.0, 0.004);
            assert!(
                r.value <= grid + 1e-12 && grid - r.value < 4e-3,
                "t={t}: k {} vs grid {}",
                r.value,
                grid
            );
        }
    }

    #[test]
    fn k_general_q_ellipsoid_certified() {
        let body = BodySpec::LqEllipsoid { q: 3.0, b: vec![1.0, 0.5] };
        for t in [0.2, 0.9, 2.5] {
            let r = k_functional(&body, &EU, t, &[0.8, 0.6], 1e-6).unwrap();
            assert!(r.gap <= 1e-6 * (1.0 + r.value));
        }
    }

    #[test]
    fn k_weighted_ambient_certified() {
        let body = BodySpec::Octahedron { b: vec![1.0, 1.0, 1.0] };
        let amb = AmbientNorm::WeightedLp { p: 4.0, w: vec![1.0, 2.0, 4.0] };
        let r = k_functional(&body, &amb, 0.7, &[0.5, -0.4, 0.2], 1e-6).unwrap();
        assert!(r.gap <= 1e-6 * (1.0 + r.value));
        let r2 = k_functional(&body, &amb, 1.4, &[0.5, -0.4, 0.2], 1e-6).unwrap();
        assert!(r2.value >= r.value - 1e-9);
    }

    #[test]
    fn k_perturbed_simplex_certified() {
        let body = BodySpec::PerturbedSimplex { d: 3, eps: 0.25 };
        let r = k_functional(&body, &EU, 1.2, &[0.4, 0.1, -0.2], 1e-6).unwrap();
        assert!(r.gap <= 1e-6 * (1.0 + r.value));
    }

    #[test]
    fn profile_concave_nondecreasing_bounded() {
        let body = BodySpec::LqEllipsoid { q: 2.0, b: vec![2.0, 1.0] };
        let x = [1.0, 1.0];
        let grid: Vec<f64> = (1..40).map(|k| k as f64 * 0.25).collect();
        let prof = k_profile(&body, &EU, &x, &grid, 1e-9).unwrap();
        let g = bodies::gauge(&body, &x).unwrap();
        let scale = g.max(1.0);
        for w in prof.windows(2) {
            assert!(w[1].value >= w[0].value - 1e-9 * scale);
        }
        for w in prof.windows(3) {
            let second = w[2].value - 2.0 * w[1].value + w[0].value;
            assert!(second <= 1e-9 * scale, "second difference {second}");
        }
        assert!(prof.last().unwrap().value <= g + 1e-9);
    }

    #[test]
    fn displacement_nonincreasing_and_riemann_bound() {
        let body = BodySpec::LqEllipsoid { q: 2.0, b: vec![2.0, 1.0] };
        let x = [1.0, 1.0];
        let grid: Vec<f64> = (0..=12).map(|n| 0.1 * 2f64.powf(n as f64 / 2.0)).collect();
        let prof = k_profile(&body, &EU, &x, &grid, 1e-10).unwrap();
        let disp: Vec<f64> = prof.iter().map(|r| r.displacement(&EU, &x)).collect();
        for w in disp.windows(2) {
            assert!(w[1] <= w[0] + 1e-4, "{disp:?}");
        }
        // (1 − 2^{−1/2})·a·Σ 2^{n/2} d(x, π_{a 2^{n/2}}) ≤ ‖x‖_B + 1e−3.
        let a = 0.1;
        let sum: f64 = disp
            .iter()
            .enumerate()
            .map(|(n, dn)| 2f64.powf(n as f64 / 2.0) * dn)
            .sum();
        let lhs = (1.0 - 2f64.powf(-0.5)) * a * sum;
        let g = bodies::gauge(&body, &x).unwrap();
        assert!(lhs <= g + 1e-3, "lhs {lhs} vs gauge {g}");
    }

    #[test]
    fn bt_member_octahedron_sparsity() {
        let body = BodySpec::Octahedron { b: vec![1.0, 1.0, 1.0] };
        let m = bt_member(&body, &EU, 1.5, &[1.0, 0.0, 0.0], 1e-9).unwrap();
        assert!(m.member);
        // Two active coordinates need t² ≥ 2.
        let m2 = bt_member(&body, &EU, 1.3, &[0.5, 0.5, 0.0], 1e-9).unwrap();
        assert!(!m2.member);
        let m3 = bt_member(&body, &EU, 1.5, &[0.5, 0.5, 0.0], 1e-9).unwrap();
        assert!(m3.member);
    }

    #[test]
    fn bt_member_ball_gradient() {
        let body = BodySpec::EuclideanBall { radius: 1.0, dim: 2 };
        let m = bt_member(&body, &EU, 0.5, &[0.3, 0.0], 1e-9).unwrap();
        assert!(!m.member);
        let z = bt_member(&body, &EU, 0.5, &[0.0, 0.0], 1e-9).unwrap();
        assert!(z.member);
    }

    #[test]
    fn bt_member_perturbed_simplex_centroid() {
        let d = 8;
        let eps = 0.25;
        let body = BodySpec::PerturbedSimplex { d, eps };
        let verts = perturbed_simplex_vertices(d, eps);
        let mut centroid = vec![0.0; d];
        for v in &verts {
            for (c, vi) in centroid.iter_mut().zip(v) {
                *c += vi / d as f64;
            }
        }
        let m = bt_member(&body, &EU, 4.0, &centroid, 1e-9).unwrap();
        assert!(m.member);
        let cert = m.certificate.unwrap();
        assert!((dot(&cert, &centroid) - bodies::gauge(&body, &centroid).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn bt_member_rejects_outside_body() {
        let body = BodySpec::EuclideanBall { radius: 1.0, dim: 2 };
        assert!(matches!(
            bt_member(&body, &EU, 1.0, &[2.0, 0.0], 1e-9),
            Err(Error::OutsideBody { .. })
        ));
    }

    #[test]
    fn bt_fixed_point_and_gauge_contraction() {
        let body = BodySpec::LqEllipsoid { q: 2.0, b: vec![2.0, 1.0] };
        let cloud = sample_cloud(&body, 60, 11, SampleMode::Interior).unwrap();
        for p in &cloud {
            let t = 1.1;
            let mem = bt_member(&body, &EU, t, p, 1e-9).unwrap();
            let k = k_functional(&body, &EU, t, p, 1e-8).unwrap();
            let g = bodies::gauge(&body, p).unwrap();
            if mem.member {
                // π_t fixes B_t: K(t, y) = ‖y‖_B.
                assert!((k.value - g).abs() <= 1e-6 * (1.0 + g), "K {} vs g {}", k.value, g);
                // Norm bound on members: ‖y‖_B ≤ t ‖y‖.
                assert!(g <= t * norm2(p) + 1e-9);
            }
            // Gauge contraction along π_t.
            let gm = bodies::gauge(&body, &k.minimizer).unwrap();
            assert!(gm <= g + 1e-6, "gauge grew: {gm} vs {g}");
        }
    }

    #[test]
    fn bt_closed_forms() {
        let e = BodySpec::LqEllipsoid { q: 2.0, b: vec![3.0, 1.0] };
        match bt_closed_form(&e, 1.7).unwrap() {
            BtDescription::EllipsoidDilation { c, exponent, dilation, .. } => {
                assert_eq!(c, vec![9.0, 1.0]);
                assert!((exponent - 2.0).abs() < 1e-12);
                assert!((dilation - 1.7).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
        let o = BodySpec::Octahedron { b: vec![2.0, 1.0] };
        match bt_closed_form(&o, 0.0).unwrap() {
            BtDescription::SparsitySet { weights, t } => {
                assert_eq!(weights, vec![0.25, 1.0]);
                assert_eq!(t, 0.0);
            }
            other => panic!("{other:?}"),
        }
        let poly = BodySpec::AbsConvPolytope {
            vertices: vec![crate::Point::new(vec![1.0, 0.0]).unwrap()],
        };
        assert!(matches!(bt_closed_form(&poly, 1.0), Err(Error::NoClosedForm)));
    }

    #[test]
    fn bt_closed_form_containment_sampled() {
        // Members of B_t for the q=3 ellipsoid lie in the dilated ℓ4 set.
        let q = 3.0;
        let body = BodySpec::LqEllipsoid { q, b: vec![1.0, 0.5] };
        let t = 2.0;
        let (c, exponent, dilation) = match bt_closed_form(&body, t).unwrap() {
            BtDescription::EllipsoidDilation { c, exponent, dilation, .. } => {
                (c, exponent, dilation)
            }
            other => panic!("{other:?}"),
        };
        let cloud = sample_cloud(&body, 400, 9, SampleMode::Interior).unwrap();
        let mut accepted = 0;
        for p in &cloud {
            let m = bt_member(&body, &EU, t, p, 1e-9).unwrap();
            if m.member {
                accepted += 1;
                let scaled: Vec<f64> = p.iter().zip(&c).map(|(v, ci)| v / ci).collect();
                let norm_c = lp_norm(&scaled, exponent);
                assert!(norm_c <= dilation + 1e-6, "‖y‖_C = {norm_c} vs {dilation}");
            }
        }
        assert!(accepted > 0, "rejection sampling starved");
    }

    #[test]
    fn octahedron_bt_sparsity_formula_exhaustive() {
        // Exhaustive sign patterns against the Σ 1_{y_i≠0}/b_i² ≤ t² rule.
        let b = vec![1.5, 1.0, 0.5];
        let body = BodySpec::Octahedron { b: b.clone() };
        let t = 1.8;
        for mask in 0..27u32 {
            let digits = [mask % 3, mask / 3 % 3, mask / 9 % 3];
            let mut y = [0.0; 3];
            for (i, dg) in digits.iter().enumerate() {
                y[i] = match dg {
                    0 => 0.0,
                    1 => 0.3 * b[i],
                    _ => -0.3 * b[i],
                };
            }
            let expected: f64 = y
                .iter()
                .zip(&b)
                .map(|(yi, bi)| if *yi != 0.0 { 1.0 / (bi * bi) } else { 0.0 })
                .sum();
            let m = bt_member(&body, &EU, t, &y, 1e-12).unwrap();
            assert_eq!(m.member, expected.sqrt() <= t + 1e-12, "pattern {digits:?}");
        }
    }
}
