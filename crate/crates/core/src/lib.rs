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

//! Numerical laboratory for chaining bounds on symmetric convex bodies.
//!
//! The library computes and cross-checks several upper bounds on the
//! γ_p-functional of a symmetric compact convex body `B ⊂ ℝ^d`:
//!
//! - the single-scale entropy bound `Σ_n 2^{n/p} e_n(B)` (Dudley),
//! - the interpolation bound `1/a + Σ_n 2^{n/p} e_n(B_{a 2^{n/p}})` built
//!   from the "thin" subsets `B_t` of near-minimizers of Peetre's
//!   K-functional,
//! - the q-convexity bound `[Σ_n (2^{n/p} e_n(B))^{q/(q-1)}]^{(q-1)/q}`,
//!
//! together with the trivial lower bound `sup_n 2^{n/p} e_n(B)` and a
//! Monte-Carlo estimate of `E sup_{x∈B} ⟨x, g⟩` that anchors everything to
//! the Gaussian-process side.
//!
//! Entropy numbers are estimated two-sidedly on point clouds (greedy
//! covers from above, greedy packings from below), so every reported bound
//! is a *measured* quantity with explicit provenance rather than an
//! asymptotic formula.
//!
//! Modules follow the pipeline: [`bodies`] (gauges, dual gauges,
//! subgradients, sampling) → [`kfun`] (K-functional, the sets `B_t`) →
//! [`entropy`] (covering/packing brackets) → [`chaining`] (the bounds and
//! geometric-principle checks) → [`gaussian`] (Monte-Carlo suprema).

pub mod bodies;
pub mod chaining;
pub mod entropy;
mod error;
pub mod gaussian;
pub mod kfun;
mod linalg;

pub use bodies::{AmbientNorm, BodySpec, Point, SampleMode};
pub use error::{Error, Result};
