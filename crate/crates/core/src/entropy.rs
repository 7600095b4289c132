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

//! Two-sided entropy-number estimation on point clouds.
//!
//! The entropy number `e_n(A)` is the smallest radius at which `A` can be
//! covered by fewer than `2^{2^n}` balls. On a finite cloud we bracket it:
//!
//! - from above by a farthest-point greedy cover (with a local refinement
//!   pass, and with centers allowed outside the cloud — nets need not be
//!   subsets of the covered set);
//! - from below by a greedy max-min packing: `m+1` points with pairwise
//!   distance `> 2r` certify that no `m`-point net has radius `≤ r`.
//!
//! Levels are capped at `n = 4` (`2^{2^4} − 1 = 65535` centers); beyond
//! that only the dimensional [`volumetric_tail`] is available, which is
//! all the chaining sums need.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::BufRead;

use crate::bodies::{self, AmbientNorm, BodySpec, Point, SampleMode};
use crate::linalg::{lex_less, midpoint};
use crate::{Error, Result};

/// Largest level with explicit nets: `2^{2^4} = 65536`.
pub const MAX_LEVEL: u32 = 4;

// ---------------------------------------------------------------------------
// Point clouds
// ---------------------------------------------------------------------------

/// Where a cloud came from, for reproducibility records.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum Provenance {
    Explicit,
    Sampled { body: BodySpec, seed: u64, count: usize, mode: SampleMode },
}

/// A nonempty set of points of uniform dimension, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    dim: usize,
    data: Vec<f64>,
    pub provenance: Provenance,
}

impl PointCloud {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyCloud);
        }
        let dim = rows[0].len();
        if dim == 0 {
            return Err(Error::InvalidParameter("points must have dimension >= 1".into()));
        }
        let mut data = Vec::with_capacity(rows.len() * dim);
        for r in &rows {
            if r.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: r.len() });
            }
            data.extend_from_slice(r);
        }
        Ok(PointCloud { dim, data, provenance: Provenance::Explicit })
    }

    pub fn from_points(points: Vec<Point>) -> Result<Self> {
        Self::from_rows(points.into_iter().map(|p| p.into_vec()).collect())
    }

    /// Deterministic cloud sampled from a body, with provenance recorded.
    pub fn sampled(body: &BodySpec, count: usize, seed: u64, mode: SampleMode) -> Result<Self> {
        let pts = bodies::sample_cloud(body, count, seed, mode)?;
        let mut cloud = Self::from_points(pts)?;
        cloud.provenance =
            Provenance::Sampled { body: body.clone(), seed, count, mode };
        Ok(cloud)
    }

    /// One point per row, comma-separated.
    pub fn from_csv(reader: impl std::io::Read) -> Result<Self> {
        let mut rows = Vec::new();
        for (lineno, line) in std::io::BufReader::new(reader).lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            let row: std::result::Result<Vec<f64>, _> =
                trimmed.split(',').map(|f| f.trim().parse::<f64>()).collect();
            match row {
                Ok(r) => rows.push(r),
                Err(e) => {
                    return Err(Error::Parse(format!("csv line {}: {e}", lineno + 1)));
                }
            }
        }
        Self::from_rows(rows)
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.iter().map(|p| p.to_vec()).collect()
    }

    /// The dilated cloud `s·A`.
    pub fn scale(&self, s: f64) -> PointCloud {
        PointCloud {
            dim: self.dim,
            data: self.data.iter().map(|v| v * s).collect(),
            provenance: Provenance::Explicit,
        }
    }

    pub fn extend_rows(&mut self, rows: &[Vec<f64>]) -> Result<()> {
        for r in rows {
            if r.len() != self.dim {
                return Err(Error::DimensionMismatch { expected: self.dim, got: r.len() });
            }
            self.data.extend_from_slice(r);
        }
        Ok(())
    }
}

/// Max distance from any cloud point to the net (the covering radius).
pub fn covering_radius(cloud: &PointCloud, net: &[Vec<f64>], ambient: &AmbientNorm) -> f64 {
    if net.is_empty() {
        return f64::INFINITY;
    }
    cloud
        .iter()
        .par_bridge()
        .map(|p| {
            net.iter()
                .map(|c| ambient.dist(p, c))
                .fold(f64::INFINITY, f64::min)
        })
        .reduce(|| 0.0, f64::max)
}

// ---------------------------------------------------------------------------
// Greedy cover
// ---------------------------------------------------------------------------

/// Options for the greedy cover construction.
#[derive(Clone, Debug, Default)]
pub struct CoverOptions {
    /// Start from these centers (used to make per-level brackets monotone).
    pub seed_net: Vec<Vec<f64>>,
    /// Hard cap on the number of centers actually placed (a net with
    /// fewer centers than allowed is still a valid net).
    pub max_centers: Option<usize>,
    /// Run the local center-improvement pass (clusters re-pick their best
    /// center among cluster points and diametral midpoints).
    pub refine: bool,
}

/// Farthest-point greedy k-center cover of the cloud with at most `m`
/// centers, followed by a deterministic refinement pass.
///
/// Centers are drawn from the cloud plus midpoints of greedy pairs, not
/// from the cloud alone (a net need not be a subset of the covered set).
/// Fully deterministic: the first center is the ambient-norm-largest
/// point, ties broken lexicographically.
pub fn greedy_cover(
    cloud: &PointCloud,
    m: usize,
    ambient: &AmbientNorm,
) -> Result<(Vec<Vec<f64>>, f64)> {
    greedy_cover_opts(cloud, m, ambient, &CoverOptions { refine: true, ..Default::default() })
}

pub fn greedy_cover_opts(
    cloud: &PointCloud,
    m: usize,
    ambient: &AmbientNorm,
    opts: &CoverOptions,
) -> Result<(Vec<Vec<f64>>, f64)> {
    if m == 0 {
        return Err(Error::InvalidParameter("m must be >= 1".into()));
    }
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    ambient.check_dim(cloud.dim())?;
    let n = cloud.len();
    let m_eff = opts.max_centers.map_or(m, |cap| m.min(cap.max(1)));

    // Whole cloud fits in the cardinality budget: perfect cover.
    if m_eff >= n {
        let net = cloud.rows();
        return Ok((net, 0.0));
    }

    // Exhaustive 1-center over cloud ∪ all pair midpoints at small sizes.
    if m == 1 && n <= 256 {
        let mut cands = cloud.rows();
        for i in 0..n {
            for j in i + 1..n {
                cands.push(midpoint(cloud.point(i), cloud.point(j)));
            }
        }
        let mut best: Option<(f64, &Vec<f64>)> = None;
        for c in &cands {
            let r = cloud.iter().map(|p| ambient.dist(p, c)).fold(0.0, f64::max);
            let better = match &best {
                None => true,
                Some((br, bc)) => r < *br || (r == *br && lex_less(c, bc)),
            };
            if better {
                best = Some((r, c));
            }
        }
        let (r, c) = best.expect("nonempty candidates");
        return Ok((vec![c.clone()], r));
    }

    let (mut net, mut dist) = gonzalez(cloud, m_eff, ambient, &opts.seed_net);
    let mut radius = dist.iter().fold(0.0f64, |a, b| a.max(*b));

    if opts.refine && net.len() <= 256 {
        let (rnet, rrad) = refine_centers(cloud, &net, ambient, radius);
        if rrad < radius {
            net = rnet;
            radius = rrad;
            dist.clear();
        }
    }
    Ok((net, radius))
}

/// Plain farthest-point traversal. Returns the net and the final
/// min-distance array.
fn gonzalez(
    cloud: &PointCloud,
    m: usize,
    ambient: &AmbientNorm,
    seed_net: &[Vec<f64>],
) -> (Vec<Vec<f64>>, Vec<f64>) {
    let n = cloud.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut net: Vec<Vec<f64>> = Vec::with_capacity(m);
    for c in seed_net.iter().take(m) {
        update_dists(cloud, c, &mut dist, ambient);
        net.push(c.clone());
    }
    if net.is_empty() {
        let first = cloud
            .iter()
            .map(|p| ambient.norm(p))
            .enumerate()
            .fold((0usize, f64::NEG_INFINITY), |acc, (i, v)| {
                if v > acc.1 || (v == acc.1 && lex_less(cloud.point(i), cloud.point(acc.0))) {
                    (i, v)
                } else {
                    acc
                }
            })
            .0;
        let c = cloud.point(first).to_vec();
        update_dists(cloud, &c, &mut dist, ambient);
        net.push(c);
    }
    while net.len() < m {
        let far = argmax_lex(cloud, &dist);
        if dist[far] <= 0.0 {
            break;
        }
        let c = cloud.point(far).to_vec();
        update_dists(cloud, &c, &mut dist, ambient);
        net.push(c);
    }
    (net, dist)
}

fn update_dists(cloud: &PointCloud, center: &[f64], dist: &mut [f64], ambient: &AmbientNorm) {
    let dim = cloud.dim();
    let data = &cloud.data;
    if dist.len() * dim > 1 << 16 {
        dist.par_iter_mut().enumerate().for_each(|(i, d)| {
            let p = &data[i * dim..(i + 1) * dim];
            let v = ambient.dist(p, center);
            if v < *d {
                *d = v;
            }
        });
    } else {
        for (i, d) in dist.iter_mut().enumerate() {
            let p = &data[i * dim..(i + 1) * dim];
            let v = ambient.dist(p, center);
            if v < *d {
                *d = v;
            }
        }
    }
}

fn argmax_lex(cloud: &PointCloud, dist: &[f64]) -> usize {
    let mut best = 0usize;
    for i in 1..dist.len() {
        if dist[i] > dist[best]
            || (dist[i] == dist[best] && lex_less(cloud.point(i), cloud.point(best)))
        {
            best = i;
        }
    }
    best
}

/// Lloyd-style improvement for k-center: reassign, then let each cluster
/// pick the best center among its current center, a strided subsample,
/// and the midpoint of its (2-approximate) diametral pair.
fn refine_centers(
    cloud: &PointCloud,
    net: &[Vec<f64>],
    ambient: &AmbientNorm,
    mut radius: f64,
) -> (Vec<Vec<f64>>, f64) {
    let mut centers: Vec<Vec<f64>> = net.to_vec();
    let n = cloud.len();
    for _pass in 0..8 {
        // Assign points to nearest center (lowest index wins ties).
        let assign: Vec<usize> = (0..n)
            .into_par_iter()
            .map(|i| {
                let p = cloud.point(i);
                let mut bi = 0usize;
                let mut bd = f64::INFINITY;
                for (k, c) in centers.iter().enumerate() {
                    let dd = ambient.dist(p, c);
                    if dd < bd {
                        bd = dd;
                        bi = k;
                    }
                }
                bi
            })
            .collect();
        let mut clusters: Vec<Vec<usize>> = vec![Vec::new(); centers.len()];
        for (i, k) in assign.iter().enumerate() {
            clusters[*k].push(i);
        }
        let mut new_centers = centers.clone();
        for (k, cluster) in clusters.iter().enumerate() {
            if cluster.is_empty() {
                continue;
            }
            let maxdist_over = |c: &[f64]| -> f64 {
                cluster
                    .iter()
                    .map(|&i| ambient.dist(cloud.point(i), c))
                    .fold(0.0, f64::max)
            };
            // Diametral pair: farthest from center, then farthest from that.
            let far1 = *cluster
                .iter()
                .max_by(|&&a, &&b| {
                    ambient
                        .dist(cloud.point(a), &centers[k])
                        .partial_cmp(&ambient.dist(cloud.point(b), &centers[k]))
                        .unwrap()
                })
                .unwrap();
            let far2 = *cluster
                .iter()
                .max_by(|&&a, &&b| {
                    ambient
                        .dist(cloud.point(a), cloud.point(far1))
                        .partial_cmp(&ambient.dist(cloud.point(b), cloud.point(far1)))
                        .unwrap()
                })
                .unwrap();
            let mut cands: Vec<Vec<f64>> = vec![
                centers[k].clone(),
                midpoint(cloud.point(far1), cloud.point(far2)),
            ];
            let stride = (cluster.len() / 32).max(1);
            cands.extend(cluster.iter().step_by(stride).map(|&i| cloud.point(i).to_vec()));
            let mut best = (maxdist_over(&cands[0]), 0usize);
            for (j, c) in cands.iter().enumerate().skip(1) {
                let r = maxdist_over(c);
                if r < best.0 || (r == best.0 && lex_less(c, &cands[best.1])) {
                    best = (r, j);
                }
            }
            new_centers[k] = cands[best.1].clone();
        }
        let new_radius = covering_radius(cloud, &new_centers, ambient);
        if new_radius < radius {
            centers = new_centers;
            radius = new_radius;
        } else {
            break;
        }
    }
    (centers, radius)
}

// ---------------------------------------------------------------------------
// Packing lower bound
// ---------------------------------------------------------------------------

/// Largest `r` certified by a greedy max-min packing: the cloud contains
/// `m+1` points with pairwise distance `> 2r`, so no net of `m` points
/// covers at radius `r`. Returns 0 when the cloud has at most `m` points.
pub fn packing_bound(cloud: &PointCloud, m: usize, ambient: &AmbientNorm) -> Result<f64> {
    if m == 0 {
        return Err(Error::InvalidParameter("m must be >= 1".into()));
    }
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    ambient.check_dim(cloud.dim())?;
    let n = cloud.len();
    if n <= m {
        return Ok(0.0);
    }
    // The farthest-point traversal is simultaneously a max-min packing:
    // after inserting k points the min pairwise distance equals the last
    // insertion radius.
    let (chosen, delta) = gonzalez_with_radii(cloud, m + 1, ambient);
    if chosen.len() < m + 1 || delta <= 0.0 {
        return Ok(0.0);
    }
    // Greedy max-min is a 2-approximation; a coordinate-ascent pass on
    // the dispersion tightens it when the scan budget allows.
    let k = chosen.len();
    let budget = cloud.len() * k * k * cloud.dim();
    let delta = if k <= 64 && budget <= 200_000_000 {
        improve_packing(cloud, chosen, ambient, delta)
    } else {
        delta
    };
    Ok(0.5 * delta * (1.0 - 1e-12))
}

/// One-point-at-a-time ascent on the min pairwise distance of the chosen
/// set, scanning the whole cloud for each replacement.
fn improve_packing(
    cloud: &PointCloud,
    mut chosen: Vec<usize>,
    ambient: &AmbientNorm,
    mut best_min: f64,
) -> f64 {
    let k = chosen.len();
    for _pass in 0..32 {
        let mut improved = false;
        for slot in 0..k {
            let others: Vec<usize> =
                chosen.iter().enumerate().filter(|(s, _)| *s != slot).map(|(_, &i)| i).collect();
            let (best_j, best_d) = (0..cloud.len())
                .into_par_iter()
                .map(|j| {
                    let p = cloud.point(j);
                    let dmin = others
                        .iter()
                        .map(|&o| ambient.dist(p, cloud.point(o)))
                        .fold(f64::INFINITY, f64::min);
                    (j, dmin)
                })
                .reduce(
                    || (usize::MAX, f64::NEG_INFINITY),
                    |a, b| {
                        if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) {
                            b
                        } else {
                            a
                        }
                    },
                );
            let current = others
                .iter()
                .map(|&o| ambient.dist(cloud.point(chosen[slot]), cloud.point(o)))
                .fold(f64::INFINITY, f64::min);
            if best_d > current {
                chosen[slot] = best_j;
                improved = true;
            }
        }
        let mut min_pair = f64::INFINITY;
        for a in 0..k {
            for b in a + 1..k {
                min_pair = min_pair.min(ambient.dist(cloud.point(chosen[a]), cloud.point(chosen[b])));
            }
        }
        if min_pair > best_min {
            best_min = min_pair;
        }
        if !improved {
            break;
        }
    }
    best_min
}

/// Gonzalez traversal that reports the insertion radius of the last
/// center (the min pairwise distance of the selected set).
fn gonzalez_with_radii(cloud: &PointCloud, k: usize, ambient: &AmbientNorm) -> (Vec<usize>, f64) {
    let n = cloud.len();
    let mut dist = vec![f64::INFINITY; n];
    let first = cloud
        .iter()
        .map(|p| ambient.norm(p))
        .enumerate()
        .fold((0usize, f64::NEG_INFINITY), |acc, (i, v)| {
            if v > acc.1 || (v == acc.1 && lex_less(cloud.point(i), cloud.point(acc.0))) {
                (i, v)
            } else {
                acc
            }
        })
        .0;
    let mut chosen = vec![first];
    update_dists(cloud, cloud.point(first), &mut dist, ambient);
    let mut last_radius = f64::INFINITY;
    while chosen.len() < k {
        let far = argmax_lex(cloud, &dist);
        last_radius = dist[far];
        if last_radius <= 0.0 {
            return (chosen, 0.0);
        }
        chosen.push(far);
        update_dists(cloud, cloud.point(far), &mut dist, ambient);
    }
    (chosen, last_radius)
}

// ---------------------------------------------------------------------------
// Brackets
// ---------------------------------------------------------------------------

/// How an upper bracket was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BracketMethod {
    Exhaustive,
    GreedyPacking,
    Volumetric,
}

/// Two-sided numerical estimate of `e_n` on a cloud.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EntropyBracket {
    pub n: u32,
    pub lower: f64,
    pub upper: f64,
    /// `2^{2^n} − 1`, the largest admissible net size.
    pub cardinality_bound: u64,
    pub method: BracketMethod,
    /// Net achieving `upper` (at most `cardinality_bound` points).
    pub net: Vec<Vec<f64>>,
    /// Additive cloud-vs-body resolution, when the cloud stands in for a
    /// sampled body: max distance of fresh samples to the cloud.
    pub resolution: Option<f64>,
}

/// Admissible net cardinality at level `n`.
pub fn level_cardinality(n: u32) -> Result<u64> {
    if n > MAX_LEVEL {
        return Err(Error::LevelTooLarge { n });
    }
    Ok((1u64 << (1u32 << n)) - 1)
}

/// Options for bracket construction.
#[derive(Clone, Debug, Default)]
pub struct BracketOptions {
    pub max_centers: Option<usize>,
    pub seed_net: Vec<Vec<f64>>,
    pub refine: bool,
}

/// Bracket `e_n(cloud)`: greedy cover from above, packing from below.
pub fn entropy_bracket(
    cloud: &PointCloud,
    n: u32,
    ambient: &AmbientNorm,
) -> Result<EntropyBracket> {
    entropy_bracket_opts(cloud, n, ambient, &BracketOptions { refine: true, ..Default::default() })
}

pub fn entropy_bracket_opts(
    cloud: &PointCloud,
    n: u32,
    ambient: &AmbientNorm,
    opts: &BracketOptions,
) -> Result<EntropyBracket> {
    let card = level_cardinality(n)?;
    let m = card.min(usize::MAX as u64) as usize;
    let method = if m == 1 && cloud.len() <= 256 {
        BracketMethod::Exhaustive
    } else {
        BracketMethod::GreedyPacking
    };
    let cover_opts = CoverOptions {
        seed_net: opts.seed_net.clone(),
        max_centers: opts.max_centers,
        refine: opts.refine,
    };
    let (net, upper) = greedy_cover_opts(cloud, m, ambient, &cover_opts)?;
    let lower = packing_bound(cloud, m, ambient)?;
    Ok(EntropyBracket {
        n,
        lower,
        upper,
        cardinality_bound: card,
        method,
        net,
        resolution: None,
    })
}

/// Brackets for levels `0..=n_max`, each level's greedy seeded with the
/// previous net so that upper brackets are nonincreasing by construction.
pub fn entropy_profile_brackets(
    cloud: &PointCloud,
    n_max: u32,
    ambient: &AmbientNorm,
    opts: &BracketOptions,
) -> Result<Vec<EntropyBracket>> {
    let mut out: Vec<EntropyBracket> = Vec::with_capacity(n_max as usize + 1);
    for n in 0..=n_max {
        let mut level_opts = opts.clone();
        if let Some(prev) = out.last() {
            level_opts.seed_net = prev.net.clone();
        }
        let mut br = entropy_bracket_opts(cloud, n, ambient, &level_opts)?;
        if let Some(prev) = out.last() {
            // Seeding guarantees this up to roundoff; clamp the stray ulp.
            if br.upper > prev.upper {
                debug_assert!(br.upper <= prev.upper * (1.0 + 1e-12) + 1e-300);
                br.upper = prev.upper;
            }
        }
        out.push(br);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Volumetric tail
// ---------------------------------------------------------------------------

/// Dimensional covering bound `e_n ≤ 3·diam·2^{−2^n/d}`, valid for any
/// `d`-dimensional set of the given diameter. Only useful once
/// `2^n ≫ d`; used to close truncated chaining sums.
pub fn volumetric_tail(d: usize, diam: f64, n: u32) -> f64 {
    if n >= 1024 {
        return 0.0;
    }
    3.0 * diam * (-(2f64.powi(n as i32)) / d as f64).exp2()
}

// ---------------------------------------------------------------------------
// Carl-type diagnostic
// ---------------------------------------------------------------------------

/// Measured-vs-analytic comparison of the two sides of the entropy
/// equivalence for ℓ_r-ellipsoids:
/// `Σ_n (2^{n(1/s+1/r−1/2)} e_n(C))^u ≍ Σ_k (k^{1/s−1/u} c_k)^u`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CarlRatio {
    /// Left side from measured upper brackets plus the volumetric tail.
    pub lhs_upper: f64,
    /// Left side from certified lower brackets (truncated, no tail).
    pub lhs_lower: f64,
    /// Exact weighted right side.
    pub rhs: f64,
    /// `lhs_upper / rhs`.
    pub ratio: f64,
}

/// Compare both sides on a sampled ℓ_r-ellipsoid with semiaxes `c`.
///
/// Requires `1/s > (1/2 − 1/r)_+`, `u > 0`, `n_max ≤ 4`. The constant in
/// the equivalence is universal but unspecified, so callers can only
/// assert boundedness of the ratio over a family, not a specific value.
pub fn carl_ratio(
    c: &[f64],
    r: f64,
    s: f64,
    u: f64,
    n_max: u32,
    ambient: &AmbientNorm,
) -> Result<CarlRatio> {
    carl_ratio_with(c, r, s, u, n_max, ambient, 20_000, 0)
}

pub fn carl_ratio_with(
    c: &[f64],
    r: f64,
    s: f64,
    u: f64,
    n_max: u32,
    ambient: &AmbientNorm,
    samples: usize,
    seed: u64,
) -> Result<CarlRatio> {
    if c.is_empty() || c.iter().any(|v| !(*v > 0.0)) || c.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::InvalidParameter(
            "semiaxes must be positive and nonincreasing".into(),
        ));
    }
    if !(r > 0.0) || !(u > 0.0) {
        return Err(Error::InvalidParameter("need r > 0 and u > 0".into()));
    }
    if 1.0 / s <= (0.5 - 1.0 / r).max(0.0) {
        return Err(Error::InvalidParameter(format!(
            "need 1/s > (1/2 − 1/r)_+: s = {s}, r = {r}"
        )));
    }
    if n_max > MAX_LEVEL {
        return Err(Error::LevelTooLarge { n: n_max });
    }
    let d = c.len();
    let cloud = lr_ellipsoid_cloud(c, r, samples, seed)?;
    let opts = BracketOptions { refine: true, max_centers: Some(4096), ..Default::default() };
    let brackets = entropy_profile_brackets(&cloud, n_max, ambient, &opts)?;

    let alpha = 1.0 / s + 1.0 / r - 0.5;
    let mut lhs_upper = 0.0;
    let mut lhs_lower = 0.0;
    for br in &brackets {
        lhs_upper += (2f64.powf(br.n as f64 * alpha) * br.upper).powf(u);
        lhs_lower += (2f64.powf(br.n as f64 * alpha) * br.lower).powf(u);
    }
    let diam = lr_ellipsoid_diameter(c, r);
    let mut n = n_max + 1;
    loop {
        let term = (2f64.powf(n as f64 * alpha) * volumetric_tail(d, diam, n)).powf(u);
        lhs_upper += term;
        n += 1;
        if term < 1e-16 * (1.0 + lhs_upper) || n > 1024 {
            break;
        }
    }
    let rhs: f64 = c
        .iter()
        .enumerate()
        .map(|(k, ck)| (((k + 1) as f64).powf(1.0 / s - 1.0 / u) * ck).powf(u))
        .sum();
    Ok(CarlRatio { lhs_upper, lhs_lower, rhs, ratio: lhs_upper / rhs })
}

/// `sup ‖x‖₂` over the ℓ_r-ellipsoid, times two.
fn lr_ellipsoid_diameter(c: &[f64], r: f64) -> f64 {
    let sup = if r <= 2.0 {
        c[0]
    } else {
        crate::linalg::lp_norm(c, 2.0 * r / (r - 2.0))
    };
    2.0 * sup
}

/// Sampled ℓ_r-ellipsoid with the semiaxis vertices included (`r` may be
/// below 1; the set is then a quasinorm ball, which the covering
/// machinery does not care about).
fn lr_ellipsoid_cloud(c: &[f64], r: f64, samples: usize, seed: u64) -> Result<PointCloud> {
    use rand::Rng;
    use rand::SeedableRng;
    use rand_distr::Distribution;
    let d = c.len();
    let gamma = rand_distr::Gamma::new(1.0 / r, 1.0)
        .map_err(|e| Error::InvalidParameter(format!("gamma sampler: {e}")))?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(samples + 2 * d + 1);
    rows.push(vec![0.0; d]);
    for i in 0..d {
        let mut v = vec![0.0; d];
        v[i] = c[i];
        rows.push(v.clone());
        v[i] = -c[i];
        rows.push(v);
    }
    while rows.len() < samples + 2 * d + 1 {
        let g: Vec<f64> = (0..d)
            .map(|_| {
                let t: f64 = gamma.sample(&mut rng);
                let sg = if rng.random::<bool>() { 1.0 } else { -1.0 };
                sg * t.powf(1.0 / r)
            })
            .collect();
        let norm = crate::linalg::lp_norm(&g, r);
        if norm == 0.0 {
            continue;
        }
        let radial: f64 = rng.random::<f64>();
        let scale = radial.powf(1.0 / d as f64) / norm;
        rows.push(g.iter().zip(c).map(|(gi, ci)| ci * gi * scale).collect());
    }
    PointCloud::from_rows(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    const EU: AmbientNorm = AmbientNorm::Euclidean;

    fn two_points() -> PointCloud {
        PointCloud::from_rows(vec![vec![-1.0], vec![1.0]]).unwrap()
    }

    #[test]
    fn greedy_cover_midpoint_beats_cloud_centers() {
        let cloud = two_points();
        let (net, r) = greedy_cover(&cloud, 1, &EU).unwrap();
        assert_eq!(net.len(), 1);
        assert!((r - 1.0).abs() < 1e-12, "radius {r}");
        assert!(net[0][0].abs() < 1e-12);
    }

    #[test]
    fn greedy_cover_two_centers_zero_radius() {
        let cloud = two_points();
        let (_, r) = greedy_cover(&cloud, 2, &EU).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn greedy_cover_uniform_interval_three_centers() {
        // 1000 uniform grid points: optimal 3-cover of [−1,1] has radius 1/3.
        let rows: Vec<Vec<f64>> =
            (0..1000).map(|i| vec![-1.0 + 2.0 * i as f64 / 999.0]).collect();
        let cloud = PointCloud::from_rows(rows).unwrap();
        let (_, r) = greedy_cover(&cloud, 3, &EU).unwrap();
        assert!(r <= 1.0 / 3.0 + 0.01, "radius {r}");
    }

    #[test]
    fn packing_bound_examples() {
        let cloud = two_points();
        let r = packing_bound(&cloud, 1, &EU).unwrap();
        assert!(r < 1.0 && r > 1.0 - 1e-9, "r = {r}");
        assert_eq!(packing_bound(&cloud, 5, &EU).unwrap(), 0.0);

        let rows: Vec<Vec<f64>> =
            (0..1000).map(|i| vec![-1.0 + 2.0 * i as f64 / 999.0]).collect();
        let cloud = PointCloud::from_rows(rows).unwrap();
        let r = packing_bound(&cloud, 3, &EU).unwrap();
        assert!(r >= 1.0 / 3.0 - 0.01, "r = {r}");
    }

    #[test]
    fn bracket_two_points() {
        let cloud = two_points();
        let b0 = entropy_bracket(&cloud, 0, &EU).unwrap();
        assert!((b0.upper - 1.0).abs() < 1e-12);
        assert!(b0.lower <= b0.upper && b0.lower > 0.99);
        assert_eq!(b0.cardinality_bound, 1);
        let b1 = entropy_bracket(&cloud, 1, &EU).unwrap();
        assert_eq!(b1.upper, 0.0);
        assert_eq!(b1.cardinality_bound, 3);
    }

    #[test]
    fn bracket_circle_matches_arc_covering() {
        // Covering the unit circle with 3 balls: optimal radius is the
        // chord of a sixth of the circle, 2 sin(π/6)… for arcs of 2π/3 the
        // half-chord is sin(π/3).
        let n = 3000;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let th = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
                vec![th.cos(), th.sin()]
            })
            .collect();
        let cloud = PointCloud::from_rows(rows).unwrap();
        let exact = (std::f64::consts::PI / 3.0).sin();
        let b1 = entropy_bracket(&cloud, 1, &EU).unwrap();
        assert!(b1.upper <= exact * 1.25, "upper {} vs exact {exact}", b1.upper);
        assert!(b1.lower <= exact + 1e-9);
    }

    #[test]
    fn bracket_rejects_large_level() {
        let cloud = two_points();
        assert!(matches!(
            entropy_bracket(&cloud, 5, &EU),
            Err(Error::LevelTooLarge { n: 5 })
        ));
    }

    #[test]
    fn profile_upper_monotone_by_seeding() {
        let body = BodySpec::LqEllipsoid { q: 2.0, b: vec![1.0, 0.5, 0.25] };
        let cloud = PointCloud::sampled(&body, 2000, 3, SampleMode::Interior).unwrap();
        let opts = BracketOptions { refine: true, ..Default::default() };
        let brs = entropy_profile_brackets(&cloud, 3, &EU, &opts).unwrap();
        for w in brs.windows(2) {
            assert!(w[1].upper <= w[0].upper + 1e-12);
            assert!(w[1].lower <= w[1].upper);
        }
        // Net radii re-verified by direct scan.
        for br in &brs {
            let r = covering_radius(&cloud, &br.net, &EU);
            assert!((r - br.upper).abs() <= 1e-12 * (1.0 + br.upper));
            assert!(br.net.len() as u64 <= br.cardinality_bound);
        }
    }

    #[test]
    fn subset_upper_bracket_with_shared_pool() {
        let body = BodySpec::Octahedron { b: vec![1.0, 0.7, 0.4] };
        let big = PointCloud::sampled(&body, 1500, 5, SampleMode::Interior).unwrap();
        let small = PointCloud::from_rows(big.rows()[..700].to_vec()).unwrap();
        let b_big = entropy_bracket(&big, 1, &EU).unwrap();
        let opts = BracketOptions { seed_net: b_big.net.clone(), refine: true, ..Default::default() };
        let b_small = entropy_bracket_opts(&small, 1, &EU, &opts).unwrap();
        assert!(b_small.upper <= b_big.upper + 1e-12);
    }

    #[test]
    fn scaling_is_exact_for_power_of_two() {
        let body = BodySpec::EuclideanBall { radius: 1.0, dim: 2 };
        let cloud = PointCloud::sampled(&body, 500, 9, SampleMode::Boundary).unwrap();
        let doubled = cloud.scale(2.0);
        for n in 0..=2 {
            let a = entropy_bracket(&cloud, n, &EU).unwrap();
            let b = entropy_bracket(&doubled, n, &EU).unwrap();
            assert_eq!(2.0 * a.upper, b.upper, "n = {n}");
            assert_eq!(2.0 * a.lower, b.lower, "n = {n}");
        }
    }

    #[test]
    fn diameter_bounded_by_twice_top_bracket() {
        let body = BodySpec::Octahedron { b: vec![1.0, 1.0] };
        let cloud = PointCloud::sampled(&body, 400, 2, SampleMode::Boundary).unwrap();
        let b0 = entropy_bracket(&cloud, 0, &EU).unwrap();
        let mut diam: f64 = 0.0;
        for i in 0..cloud.len() {
            for j in i + 1..cloud.len() {
                diam = diam.max(EU.dist(cloud.point(i), cloud.point(j)));
            }
        }
        assert!(diam <= 2.0 * b0.upper + 1e-9);
    }

    #[test]
    fn volumetric_tail_values() {
        assert!((volumetric_tail(1, 2.0, 3) - 0.0234375).abs() < 1e-12);
        let v = volumetric_tail(2, 2.0, 0);
        assert!((v - 6.0 * 2f64.powf(-0.5)).abs() < 1e-12);
    }

    #[test]
    fn volumetric_tail_dominates_measured_disc() {
        let body = BodySpec::EuclideanBall { radius: 1.0, dim: 2 };
        let cloud = PointCloud::sampled(&body, 4000, 4, SampleMode::Interior).unwrap();
        let opts = BracketOptions { refine: true, max_centers: Some(4096), ..Default::default() };
        let brs = entropy_profile_brackets(&cloud, 4, &EU, &opts).unwrap();
        for n in 2..=4u32 {
            let bound = volumetric_tail(2, 2.0, n);
            assert!(
                brs[n as usize].upper <= bound,
                "n = {n}: measured {} vs volumetric {bound}",
                brs[n as usize].upper
            );
        }
    }

    #[test]
    fn carl_ratio_segment() {
        let r = carl_ratio(&[1.0], 2.0, 1.0, 1.0, 3, &EU).unwrap();
        assert!((r.rhs - 1.0).abs() < 1e-12);
        assert!(r.ratio > 0.1 && r.ratio < 10.0, "ratio {}", r.ratio);
        assert!(r.lhs_lower <= r.lhs_upper);
    }

    #[test]
    fn carl_ratio_scale_invariant() {
        let c = [1.0, 0.5, 0.25, 0.125];
        let a = carl_ratio_with(&c, 2.0, 1.0, 1.0, 2, &EU, 4000, 1).unwrap();
        let c2: Vec<f64> = c.iter().map(|v| 2.0 * v).collect();
        let b = carl_ratio_with(&c2, 2.0, 1.0, 1.0, 2, &EU, 4000, 1).unwrap();
        assert!((a.ratio / b.ratio - 1.0).abs() < 1e-6, "{} vs {}", a.ratio, b.ratio);
    }

    #[test]
    fn carl_ratio_banded_for_decaying_axes() {
        let c = [1.0, 0.5, 0.25, 0.125];
        let r = carl_ratio_with(&c, 2.0, 1.0, 1.0, 3, &EU, 20_000, 2).unwrap();
        assert!(r.ratio > 0.02 && r.ratio < 50.0, "ratio {}", r.ratio);
    }

    #[test]
    fn carl_ratio_rejects_bad_params() {
        assert!(carl_ratio(&[1.0], 10.0, 4.0, 1.0, 2, &EU).is_err());
        assert!(carl_ratio(&[1.0], 2.0, 1.0, -1.0, 2, &EU).is_err());
    }

    #[test]
    fn csv_roundtrip() {
        let csv = "1.0, 2.0\n-0.5,0.25\n\n3,4\n";
        let cloud = PointCloud::from_csv(csv.as_bytes()).unwrap();
        assert_eq!(cloud.len(), 3);
        assert_eq!(cloud.point(1), &[-0.5, 0.25]);
        assert!(PointCloud::from_csv("1.0,x\n".as_bytes()).is_err());
    }
}
