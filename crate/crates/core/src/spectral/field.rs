use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{derivative_symbol, fft_index, theta_point, wavenumber, AngularFft, Fft3, TorusGrid, TWO_PI};
use crate::error::{Error, Result};

/// Coefficients f̂(k₁, k₂, ℓ) of a function on 𝕋² × 𝕋.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    grid: TorusGrid,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: TorusGrid) -> Self {
        Self { grid, coeffs: vec![Complex64::default(); grid.len()] }
    }

    pub fn from_coeffs(grid: TorusGrid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "{} coefficients supplied for a {} grid",
                coeffs.len(),
                grid.describe()
            )));
        }
        Ok(Self { grid, coeffs })
    }

    /// Transforms real collocation values laid out as `[i1][i2][j]`.
    pub fn from_values(grid: TorusGrid, values: &[f64]) -> Result<Self> {
        Self::from_values_with(&Fft3::new(grid), values)
    }

    pub fn from_values_with(fft: &Fft3, values: &[f64]) -> Result<Self> {
        let grid = fft.grid();
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "{} values supplied for a {} grid",
                values.len(),
                grid.describe()
            )));
        }
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft.forward(&mut buf);
        Ok(Self { grid, coeffs: buf })
    }

    /// Samples `f(x1, x2, θ)` on the collocation grid.
    pub fn from_fn(grid: TorusGrid, f: impl Fn(f64, f64, f64) -> f64) -> Self {
        let values = sample(grid, f);
        Self::from_values(grid, &values).expect("sampled on the same grid")
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Coefficient at signed wavenumbers.
    pub fn coeff(&self, k1: i64, k2: i64, l: i64) -> Complex64 {
        let g = self.grid;
        self.coeffs[g.index(fft_index(k1, g.n_x1), fft_index(k2, g.n_x2), fft_index(l, g.n_theta))]
    }

    pub fn set_coeff(&mut self, k1: i64, k2: i64, l: i64, value: Complex64) {
        let g = self.grid;
        let idx = g.index(fft_index(k1, g.n_x1), fft_index(k2, g.n_x2), fft_index(l, g.n_theta));
        self.coeffs[idx] = value;
    }

    /// The θ-coefficients η̂_k(ℓ) of the x-mode `k`.
    pub fn mode(&self, k1: i64, k2: i64) -> &[Complex64] {
        let g = self.grid;
        let start = g.line(fft_index(k1, g.n_x1), fft_index(k2, g.n_x2));
        &self.coeffs[start..start + g.n_theta]
    }

    pub fn mode_mut(&mut self, k1: i64, k2: i64) -> &mut [Complex64] {
        let g = self.grid;
        let start = g.line(fft_index(k1, g.n_x1), fft_index(k2, g.n_x2));
        &mut self.coeffs[start..start + g.n_theta]
    }

    /// Real parts of the collocation values.
    pub fn to_values(&self) -> Vec<f64> {
        self.to_values_with(&Fft3::new(self.grid))
    }

    pub fn to_values_with(&self, fft: &Fft3) -> Vec<f64> {
        let mut buf = self.coeffs.clone();
        fft.inverse(&mut buf);
        buf.into_iter().map(|c| c.re).collect()
    }

    /// ∫∫ f dx dθ = (2π)³ f̂(0,0,0).
    pub fn mass(&self) -> f64 {
        TWO_PI.powi(3) * self.coeffs[0].re
    }

    /// ⟨f⟩(θ) = (2π)^{-2} ∫ f dx, i.e. the k = (0,0) slice.
    pub fn x_average(&self) -> AngularProfile {
        AngularProfile::from_coeffs(self.mode(0, 0))
    }

    /// f_≠ = f − ⟨f⟩.
    pub fn remainder(&self) -> SpectralField {
        let mut out = self.clone();
        out.mode_mut(0, 0).iter_mut().for_each(|c| *c = Complex64::default());
        out
    }

    /// Largest |f̂(−k,−ℓ) − conj f̂(k,ℓ)| relative to the largest coefficient.
    pub fn conjugate_asymmetry(&self) -> f64 {
        let g = self.grid;
        let scale = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for i1 in 0..g.n_x1 {
            for i2 in 0..g.n_x2 {
                for j in 0..g.n_theta {
                    let a = self.coeffs[g.index(i1, i2, j)];
                    let b = self.coeffs[g.index((g.n_x1 - i1) % g.n_x1, (g.n_x2 - i2) % g.n_x2, (g.n_theta - j) % g.n_theta)];
                    worst = worst.max((a - b.conj()).norm());
                }
            }
        }
        worst / scale
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn scale(&mut self, s: f64) {
        self.coeffs.iter_mut().for_each(|c| *c *= s);
    }

    pub fn axpy(&mut self, a: f64, other: &SpectralField) -> Result<()> {
        self.grid.ensure_same(&other.grid)?;
        for (c, o) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *c += a * o;
        }
        Ok(())
    }

    /// Largest coefficient-wise distance to `other`.
    pub fn max_coeff_distance(&self, other: &SpectralField) -> f64 {
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
}

pub(crate) fn sample(grid: TorusGrid, f: impl Fn(f64, f64, f64) -> f64) -> Vec<f64> {
    let mut values = Vec::with_capacity(grid.len());
    for i1 in 0..grid.n_x1 {
        let x1 = grid.x1(i1);
        for i2 in 0..grid.n_x2 {
            let x2 = grid.x2(i2);
            for j in 0..grid.n_theta {
                values.push(f(x1, x2, grid.theta(j)));
            }
        }
    }
    values
}

/// Real function g(θ) on 𝕋, held by its collocation values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngularProfile {
    values: Vec<f64>,
}

impl AngularProfile {
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        super::check_count("n_theta", values.len())?;
        Ok(Self { values })
    }

    pub fn from_fn(n_theta: usize, f: impl Fn(f64) -> f64) -> Self {
        Self { values: (0..n_theta).map(|j| f(theta_point(j, n_theta))).collect() }
    }

    /// Builds the profile from coefficients, keeping the real part.
    pub fn from_coeffs(coeffs: &[Complex64]) -> Self {
        Self { values: AngularFft::new(coeffs.len()).inverse_real(coeffs) }
    }

    pub fn constant(n_theta: usize, c: f64) -> Self {
        Self { values: vec![c; n_theta] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn theta(&self, j: usize) -> f64 {
        theta_point(j, self.values.len())
    }

    /// ĝ(ℓ) = (1/2π) ∫ g e^{-iℓθ} dθ, FFT order.
    pub fn coeffs(&self) -> Vec<Complex64> {
        AngularFft::new(self.values.len()).forward_real(&self.values)
    }

    /// ∫ g dθ by the trapezoidal rule (= 2π ĝ(0)).
    pub fn integral(&self) -> f64 {
        TWO_PI * self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// L² norm over 𝕋.
    pub fn l2_norm(&self) -> f64 {
        (TWO_PI * self.values.iter().map(|v| v * v).sum::<f64>() / self.values.len() as f64).sqrt()
    }

    /// ∫ e^{-iθ} g dθ.
    pub fn first_moment(&self) -> Complex64 {
        TWO_PI * self.coeffs()[1]
    }

    /// Spectral derivative ∂θ g.
    pub fn derivative(&self) -> AngularProfile {
        let n = self.values.len();
        let mut c = self.coeffs();
        for (m, v) in c.iter_mut().enumerate() {
            *v *= Complex64::new(0.0, derivative_symbol(m, n));
        }
        Self::from_coeffs(&c)
    }

    /// g(θ + φ) evaluated exactly through the Fourier series.
    pub fn rotated(&self, phi: f64) -> AngularProfile {
        let n = self.values.len();
        let mut c = self.coeffs();
        for (m, v) in c.iter_mut().enumerate() {
            let l = wavenumber(m, n);
            if m == n / 2 {
                // real Nyquist mode: keep it real
                *v *= (l as f64 * phi).cos();
            } else {
                *v *= Complex64::from_polar(1.0, l as f64 * phi);
            }
        }
        Self::from_coeffs(&c)
    }

    /// Largest |g(θ) − g(−θ)| over the grid.
    pub fn evenness_defect(&self) -> f64 {
        let n = self.values.len();
        (0..n)
            .map(|j| (self.values[j] - self.values[(n - j) % n]).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_distance(&self, other: &AngularProfile) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// Complex function on 𝕋 held by collocation values (per-mode states,
/// vector-field outputs).
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexProfile {
    pub values: Vec<Complex64>,
}

impl ComplexProfile {
    pub fn l2_norm(&self) -> f64 {
        (TWO_PI * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() / self.values.len() as f64).sqrt()
    }
}

/// Precomputed spectra of the product kernel Φ(x)Ψ(θ).
#[derive(Clone, Debug, PartialEq)]
pub struct KernelSpectrum {
    pub grid: TorusGrid,
    /// Φ̂(k), `[i1][i2]` in FFT order.
    pub phi_hat: Vec<Complex64>,
    /// Ψ̂(ℓ), FFT order.
    pub psi_hat: Vec<Complex64>,
}

impl KernelSpectrum {
    /// Multiplier m(k,ℓ) = (2π)³ Φ̂(−k) Ψ̂(−ℓ) of the alignment operator.
    pub fn multiplier(&self) -> Vec<Complex64> {
        let g = self.grid;
        let c = TWO_PI.powi(3);
        let mut out = Vec::with_capacity(g.len());
        for i1 in 0..g.n_x1 {
            for i2 in 0..g.n_x2 {
                let phi = self.phi_hat[((g.n_x1 - i1) % g.n_x1) * g.n_x2 + (g.n_x2 - i2) % g.n_x2];
                for j in 0..g.n_theta {
                    out.push(c * phi * self.psi_hat[(g.n_theta - j) % g.n_theta]);
                }
            }
        }
        out
    }
}

/// L[f](x,θ) = ∫∫ Φ(y−x) Ψ(η−θ) f(y,η) dy dη, evaluated as the coefficient
/// product (2π)³ Φ̂(−k) Ψ̂(−ℓ) f̂(k,ℓ).
pub fn convolve_xtheta(kernel: &KernelSpectrum, f: &SpectralField) -> Result<SpectralField> {
    kernel.grid.ensure_same(&f.grid)?;
    let m = kernel.multiplier();
    let coeffs = f.coeffs.iter().zip(&m).map(|(a, b)| a * b).collect();
    Ok(SpectralField { grid: f.grid, coeffs })
}
