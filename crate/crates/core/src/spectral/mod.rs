//! Grids, transforms and norms on 𝕋² × 𝕋.
//!
//! Every function is represented as
//!
//! ```text
//! f(x, θ) = Σ_k Σ_ℓ f̂(k, ℓ) e^{i k·x} e^{i ℓ θ},
//! f̂(k, ℓ) = (2π)^{-3} ∫∫ f e^{-i k·x - i ℓ θ} dx dθ,
//! ```
//!
//! with x-collocation points on `[0, 2π)` and θ-collocation points on
//! `[-π, π)`. Coefficients are stored in FFT order: index `m` holds the
//! wavenumber `m` for `m ≤ n/2` and `m - n` otherwise.

mod fft;
mod field;
mod norms;
mod snapshot;

pub use fft::{AngularFft, Fft3};
pub use field::{convolve_xtheta, AngularProfile, ComplexProfile, KernelSpectrum, SpectralField};
pub use norms::NormKind;
pub use snapshot::{read_snapshot, write_snapshot, write_snapshot_file, Snapshot, SnapshotHeader};

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TWO_PI: f64 = 2.0 * PI;

/// Collocation grid on 𝕋² × 𝕋.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TorusGrid {
    pub n_x1: usize,
    pub n_x2: usize,
    pub n_theta: usize,
}

impl TorusGrid {
    pub fn new(n_x1: usize, n_x2: usize, n_theta: usize) -> Result<Self> {
        for (name, n) in [("n_x1", n_x1), ("n_x2", n_x2), ("n_theta", n_theta)] {
            check_count(name, n)?;
        }
        Ok(Self { n_x1, n_x2, n_theta })
    }

    /// Total number of collocation points.
    pub fn len(&self) -> usize {
        self.n_x1 * self.n_x2 * self.n_theta
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i1: usize, i2: usize, j: usize) -> usize {
        (i1 * self.n_x2 + i2) * self.n_theta + j
    }

    /// Offset of the contiguous θ-line belonging to x-index `(i1, i2)`.
    #[inline]
    pub fn line(&self, i1: usize, i2: usize) -> usize {
        (i1 * self.n_x2 + i2) * self.n_theta
    }

    pub fn x1(&self, i: usize) -> f64 {
        TWO_PI * i as f64 / self.n_x1 as f64
    }

    pub fn x2(&self, i: usize) -> f64 {
        TWO_PI * i as f64 / self.n_x2 as f64
    }

    pub fn theta(&self, j: usize) -> f64 {
        theta_point(j, self.n_theta)
    }

    /// Volume element of the trapezoidal rule.
    pub fn cell_volume(&self) -> f64 {
        TWO_PI.powi(3) / self.len() as f64
    }

    pub fn describe(&self) -> String {
        format!("{}x{}x{}", self.n_x1, self.n_x2, self.n_theta)
    }

    pub(crate) fn ensure_same(&self, other: &TorusGrid) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch {
                expected: self.describe(),
                found: other.describe(),
            });
        }
        Ok(())
    }
}

pub(crate) fn check_count(name: &str, n: usize) -> Result<()> {
    if n < 4 || !n.is_multiple_of(2) {
        return Err(Error::InvalidGrid(format!(
            "{name} = {n}; collocation counts must be even and at least 4"
        )));
    }
    Ok(())
}

/// θ_j = -π + 2πj/n.
#[inline]
pub fn theta_point(j: usize, n: usize) -> f64 {
    -PI + TWO_PI * j as f64 / n as f64
}

/// Signed wavenumber stored at FFT index `m` of an axis of length `n`.
#[inline]
pub fn wavenumber(m: usize, n: usize) -> i64 {
    if m <= n / 2 {
        m as i64
    } else {
        m as i64 - n as i64
    }
}

/// FFT index of the signed wavenumber `k` on an axis of length `n`.
#[inline]
pub fn fft_index(k: i64, n: usize) -> usize {
    k.rem_euclid(n as i64) as usize
}

/// Largest wavenumber kept by the 2/3 rule: products of two kept modes
/// never alias back onto a kept mode.
#[inline]
pub fn dealias_cutoff(n: usize) -> i64 {
    ((n - 1) / 3) as i64
}

/// Spectral θ-derivative multiplier; the Nyquist mode is dropped.
#[inline]
pub(crate) fn derivative_symbol(m: usize, n: usize) -> f64 {
    if m == n / 2 {
        0.0
    } else {
        wavenumber(m, n) as f64
    }
}

/// Wraps an angle into `[-π, π)`.
#[inline]
pub fn wrap_angle(theta: f64) -> f64 {
    let w = (theta + PI).rem_euclid(TWO_PI) - PI;
    if w >= PI {
        -PI
    } else {
        w
    }
}

/// Wraps a position coordinate into `[0, 2π)`.
#[inline]
pub fn wrap_position(x: f64) -> f64 {
    let w = x.rem_euclid(TWO_PI);
    if w >= TWO_PI {
        0.0
    } else {
        w
    }
}
