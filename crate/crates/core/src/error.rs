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

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("gauge not differentiable at origin")]
    NotDifferentiableAtOrigin,

    #[error("point outside body: gauge {gauge} exceeds 1 + {tol}")]
    OutsideBody { gauge: f64, tol: f64 },

    #[error(
        "solver did not converge: gap {gap:.3e} after {iterations} iterations \
         (best primal {primal:.9e}, best dual {dual:.9e})"
    )]
    NonConvergence {
        gap: f64,
        iterations: usize,
        primal: f64,
        dual: f64,
    },

    #[error("no closed form for this body variant")]
    NoClosedForm,

    #[error("entropy level n = {n} needs 2^(2^n) centers; use volumetric_tail beyond n = 4")]
    LevelTooLarge { n: u32 },

    #[error("empty point cloud")]
    EmptyCloud,

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed input: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
