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

//! Small dense vector helpers shared by the geometry modules.

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

pub fn midpoint(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect()
}

/// `(Σ |x_i|^p)^{1/p}` evaluated with max-scaling so that very large or very
/// small entries do not overflow the intermediate powers.
pub fn lp_norm(x: &[f64], p: f64) -> f64 {
    debug_assert!(p >= 1.0 || p > 0.0);
    if p.is_infinite() {
        return x.iter().fold(0.0, |m, v| m.max(v.abs()));
    }
    let m = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if m == 0.0 {
        return 0.0;
    }
    let s: f64 = x.iter().map(|v| (v.abs() / m).powf(p)).sum();
    m * s.powf(1.0 / p)
}

/// Lexicographic comparison of coordinate vectors, used for deterministic
/// tie-breaking.
pub fn lex_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x < y {
            return true;
        }
        if x > y {
            return false;
        }
    }
    false
}

/// Sign with the convention `sign(0) := 1`.
pub fn sign1(v: f64) -> f64 {
    if v < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Bisection for a root of a nondecreasing function on `[lo, hi]` with
/// `f(lo) <= 0 <= f(hi)`. Runs to floating-point interval exhaustion.
pub fn bisect_increasing(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Golden-section minimization of a unimodal (convex) function on `[lo, hi]`.
/// Returns the argmin; the caller re-evaluates the objective if needed.
pub fn golden_min(lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut a = lo;
    let mut b = hi;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if b - a <= f64::EPSILON * (1.0 + a.abs() + b.abs()) {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lp_norm_matches_euclidean() {
        let x = [3.0, 4.0];
        assert!((lp_norm(&x, 2.0) - 5.0).abs() < 1e-12);
        assert!((lp_norm(&x, f64::INFINITY) - 4.0).abs() < 1e-12);
        assert!((lp_norm(&x, 1.0) - 7.0).abs() < 1e-12);
    }

    #[test]
    fn lp_norm_scaled_extremes() {
        let x = [1e200, 1e200];
        let v = lp_norm(&x, 2.0);
        assert!((v - 1e200 * 2f64.sqrt()).abs() / v < 1e-12);
    }

    #[test]
    fn golden_finds_quadratic_min() {
        let m = golden_min(-10.0, 10.0, |t| (t - 3.5) * (t - 3.5));
        assert!((m - 3.5).abs() < 1e-9);
    }

    #[test]
    fn bisect_finds_root() {
        let r = bisect_increasing(0.0, 10.0, |t| t * t - 2.0);
        assert!((r - 2f64.sqrt()).abs() < 1e-12);
    }
}
