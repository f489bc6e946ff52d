//! The influence pair (Φ, Ψ): analytic descriptions, their grid
//! realisation and a validator for the structural assumptions.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::homogeneous::bessel::i0e;
use crate::spectral::{
    derivative_symbol, fft_index, wavenumber, AngularFft, AngularProfile, KernelSpectrum, TorusGrid, TWO_PI,
};

/// Spatial influence function Φ on 𝕋².
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum SpatialKernel {
    /// Φ ≡ 1/(2π)².
    Uniform,
    /// Φ(x) = C exp((cos x₁ + cos x₂ − 2)/σ²) with ∫Φ = 1.
    PeriodicBump { sigma: f64 },
}

impl SpatialKernel {
    pub fn eval(&self, dx: [f64; 2]) -> f64 {
        match *self {
            SpatialKernel::Uniform => 1.0 / (TWO_PI * TWO_PI),
            SpatialKernel::PeriodicBump { sigma } => {
                let c = 1.0 / (sigma * sigma);
                let z = TWO_PI * i0e(c);
                ((dx[0].cos() + dx[1].cos() - 2.0) * c).exp() / (z * z)
            }
        }
    }

    pub fn max_value(&self) -> f64 {
        self.eval([0.0, 0.0])
    }
}

/// Angular influence function Ψ = sin·ψ with ψ even and non-negative.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum AngularKernel {
    /// Ψ = sin (ψ ≡ 1).
    Sine,
    /// ψ(θ) = (1 + cos θ)^power.
    RaisedCosine { power: u32 },
}

impl AngularKernel {
    /// The even factor ψ.
    pub fn psi_factor(&self, theta: f64) -> f64 {
        match *self {
            AngularKernel::Sine => 1.0,
            AngularKernel::RaisedCosine { power } => (1.0 + theta.cos()).powi(power as i32),
        }
    }

    /// Ψ(θ) = sin θ ψ(θ).
    pub fn eval(&self, theta: f64) -> f64 {
        theta.sin() * self.psi_factor(theta)
    }

    /// Upper bound of |Ψ|.
    pub fn max_abs(&self) -> f64 {
        match *self {
            AngularKernel::Sine => 1.0,
            AngularKernel::RaisedCosine { power } => {
                // |sin θ|(1+cos θ)^p peaks at cos θ = p/(p+1)
                let p = power as f64;
                let c = p / (p + 1.0);
                (1.0 - c * c).sqrt() * (1.0 + c).powf(p)
            }
        }
    }
}

/// Angular part of the influence pair on an n_θ grid: Ψ, ψ and the
/// primitive 𝕌(θ) = ∫_{−π}^θ Ψ.
#[derive(Clone, Debug, PartialEq)]
pub struct AngularInfluence {
    pub psi: AngularProfile,
    pub psi_factor: AngularProfile,
    pub u: AngularProfile,
    /// Ψ̂(ℓ) in FFT order.
    pub psi_hat: Vec<Complex64>,
    /// 𝕌̂(ℓ) of the periodic part of 𝕌, FFT order.
    pub u_hat: Vec<Complex64>,
}

impl AngularInfluence {
    pub fn from_kernel(n_theta: usize, kernel: AngularKernel) -> Self {
        Self::from_factor(AngularProfile::from_fn(n_theta, |t| kernel.psi_factor(t)))
    }

    /// Builds Ψ = sin·ψ from sampled ψ.
    pub fn from_factor(psi_factor: AngularProfile) -> Self {
        let n = psi_factor.len();
        let psi_vals: Vec<f64> = psi_factor
            .values()
            .iter()
            .enumerate()
            .map(|(j, v)| psi_factor.theta(j).sin() * v)
            .collect();
        let psi = AngularProfile::from_values(psi_vals).expect("same length as psi_factor");
        let fft = AngularFft::new(n);
        let psi_hat = fft.forward_real(psi.values());
        let mean = psi_hat[0].re;
        let mut u_hat = vec![Complex64::default(); n];
        let mut offset = Complex64::default();
        for (m, c) in psi_hat.iter().enumerate().skip(1) {
            let l = derivative_symbol(m, n);
            if l == 0.0 {
                continue;
            }
            let v = c / Complex64::new(0.0, l);
            u_hat[m] = v;
            // subtract the value at θ = −π so that 𝕌(−π) = 0
            let sign = if wavenumber(m, n) % 2 == 0 { 1.0 } else { -1.0 };
            offset += v * sign;
        }
        u_hat[0] = -offset;
        let mut u_vals = fft.inverse_real(&u_hat);
        for (j, v) in u_vals.iter_mut().enumerate() {
            *v += mean * (psi.theta(j) + PI);
        }
        let u = AngularProfile::from_values(u_vals).expect("same length as psi");
        Self { psi, psi_factor, u, psi_hat, u_hat }
    }

    pub fn n_theta(&self) -> usize {
        self.psi.len()
    }

    /// Û(ℓ) = ∫ 𝕌 e^{-iℓθ} dθ = 2π 𝕌̂(ℓ), the unnormalised transform.
    pub fn u_transform(&self, l: i64) -> Complex64 {
        TWO_PI * self.u_hat[fft_index(l, self.n_theta())]
    }
}

/// The pair (Φ, Ψ) realised on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct InfluencePair {
    grid: TorusGrid,
    /// Φ on the x-grid, `[i1][i2]`.
    phi: Vec<f64>,
    phi_hat: Vec<Complex64>,
    angular: AngularInfluence,
    spatial_kind: Option<SpatialKernel>,
    angular_kind: Option<AngularKernel>,
}

impl InfluencePair {
    /// Samples analytic kernels. Φ is rescaled so that the discrete
    /// integral is exactly one.
    pub fn new(grid: TorusGrid, spatial: SpatialKernel, angular: AngularKernel) -> Self {
        let mut phi = sample_x(grid, |x1, x2| spatial.eval([x1, x2]));
        let total: f64 = phi.iter().sum::<f64>() * TWO_PI * TWO_PI / (grid.n_x1 * grid.n_x2) as f64;
        phi.iter_mut().for_each(|v| *v /= total);
        let mut pair = Self::from_samples(grid, phi, AngularProfile::from_fn(grid.n_theta, |t| angular.psi_factor(t)))
            .expect("sampled on the grid");
        pair.spatial_kind = Some(spatial);
        pair.angular_kind = Some(angular);
        pair
    }

    /// Builds the pair from raw samples without any normalisation; run
    /// [`validate_kernels`] to check the assumptions.
    pub fn from_samples(grid: TorusGrid, phi: Vec<f64>, psi_factor: AngularProfile) -> Result<Self> {
        if phi.len() != grid.n_x1 * grid.n_x2 || psi_factor.len() != grid.n_theta {
            return Err(crate::Error::InvalidGrid(format!(
                "kernel samples do not match the {} grid",
                grid.describe()
            )));
        }
        let phi_hat = transform_x(grid, &phi);
        Ok(Self {
            grid,
            phi,
            phi_hat,
            angular: AngularInfluence::from_factor(psi_factor),
            spatial_kind: None,
            angular_kind: None,
        })
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn phi_hat(&self) -> &[Complex64] {
        &self.phi_hat
    }

    pub fn angular(&self) -> &AngularInfluence {
        &self.angular
    }

    pub fn spatial_kind(&self) -> Option<SpatialKernel> {
        self.spatial_kind
    }

    pub fn angular_kind(&self) -> Option<AngularKernel> {
        self.angular_kind
    }

    pub fn spectrum(&self) -> KernelSpectrum {
        KernelSpectrum { grid: self.grid, phi_hat: self.phi_hat.clone(), psi_hat: self.angular.psi_hat.clone() }
    }

    /// ∫ Φ dx on the grid.
    pub fn phi_integral(&self) -> f64 {
        TWO_PI * TWO_PI * self.phi_hat[0].re
    }

    /// sup |Φ| · sup |Ψ| on the grid.
    pub fn sup_product(&self) -> f64 {
        let phi = self.phi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        phi * self.angular.psi.max_abs()
    }
}

fn sample_x(grid: TorusGrid, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(grid.n_x1 * grid.n_x2);
    for i1 in 0..grid.n_x1 {
        for i2 in 0..grid.n_x2 {
            out.push(f(grid.x1(i1), grid.x2(i2)));
        }
    }
    out
}

/// Φ̂(k) = (2π)^{-2} ∫ Φ e^{-ik·x} dx on the x-grid.
fn transform_x(grid: TorusGrid, phi: &[f64]) -> Vec<Complex64> {
    let (n1, n2) = (grid.n_x1, grid.n_x2);
    let mut planner = FftPlanner::new();
    let (p1, p2) = (planner.plan_fft_forward(n1), planner.plan_fft_forward(n2));
    let mut buf: Vec<Complex64> = phi.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    p2.process(&mut buf);
    let mut col = vec![Complex64::default(); n1];
    for i2 in 0..n2 {
        for i1 in 0..n1 {
            col[i1] = buf[i1 * n2 + i2];
        }
        p1.process(&mut col);
        for i1 in 0..n1 {
            buf[i1 * n2 + i2] = col[i1];
        }
    }
    let s = 1.0 / (n1 * n2) as f64;
    buf.iter_mut().for_each(|c| *c *= s);
    buf
}

/// Outcome of one structural check.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelCheck {
    pub name: &'static str,
    pub violation: f64,
    pub tolerance: f64,
    pub location: Option<String>,
}

impl KernelCheck {
    pub fn passed(&self) -> bool {
        self.violation <= self.tolerance
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KernelReport {
    pub checks: Vec<KernelCheck>,
}

impl KernelReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(KernelCheck::passed)
    }

    pub fn failures(&self) -> Vec<&KernelCheck> {
        self.checks.iter().filter(|c| !c.passed()).collect()
    }

    pub fn check(&self, name: &str) -> Option<&KernelCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

const KERNEL_TOL: f64 = 1e-12;

/// Checks Φ(x) = Φ(−x), ∫Φ = 1, ψ ≥ 0, ψ even, ∫Ψ = 0 and 𝕌 ≤ 0. Never
/// fails; the report lists the worst violation of each.
pub fn validate_kernels(kernels: &InfluencePair) -> KernelReport {
    let g = kernels.grid;
    let (n1, n2) = (g.n_x1, g.n_x2);
    let phi_scale = kernels.phi.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let mut sym = (0.0f64, 0usize, 0usize);
    for i1 in 0..n1 {
        for i2 in 0..n2 {
            let a = kernels.phi[i1 * n2 + i2];
            let b = kernels.phi[((n1 - i1) % n1) * n2 + (n2 - i2) % n2];
            let d = (a - b).abs() / phi_scale;
            if d > sym.0 {
                sym = (d, i1, i2);
            }
        }
    }
    let ang = &kernels.angular;
    let psi_scale = ang.psi_factor.max_abs().max(f64::MIN_POSITIVE);
    let (min_j, min_psi) = ang
        .psi_factor
        .values()
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (j, v)| if v < acc.1 { (j, v) } else { acc });
    let (max_j, max_u) = ang
        .u
        .values()
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (j, v)| if v > acc.1 { (j, v) } else { acc });
    let u_scale = ang.u.max_abs().max(f64::MIN_POSITIVE);

    let checks = vec![
        KernelCheck {
            name: "phi_symmetric",
            violation: sym.0,
            tolerance: KERNEL_TOL,
            location: Some(format!("x = ({:.6}, {:.6})", g.x1(sym.1), g.x2(sym.2))),
        },
        KernelCheck {
            name: "phi_normalized",
            violation: (kernels.phi_integral() - 1.0).abs(),
            tolerance: KERNEL_TOL,
            location: None,
        },
        KernelCheck {
            name: "psi_factor_nonnegative",
            violation: (-min_psi).max(0.0) / psi_scale,
            tolerance: KERNEL_TOL,
            location: Some(format!("θ = {:.6}", ang.psi_factor.theta(min_j))),
        },
        KernelCheck {
            name: "psi_factor_even",
            violation: ang.psi_factor.evenness_defect() / psi_scale,
            tolerance: KERNEL_TOL,
            location: None,
        },
        KernelCheck {
            name: "psi_zero_mean",
            violation: ang.psi.integral().abs() / ang.psi.max_abs().max(f64::MIN_POSITIVE),
            tolerance: KERNEL_TOL,
            location: None,
        },
        KernelCheck {
            name: "primitive_nonpositive",
            violation: max_u.max(0.0) / u_scale,
            tolerance: KERNEL_TOL,
            location: Some(format!("θ = {:.6}", ang.u.theta(max_j))),
        },
    ];
    KernelReport { checks }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sine_kernel_passes_and_reproduces_primitive() {
        let grid = TorusGrid::new(16, 16, 64).unwrap();
        let pair = InfluencePair::new(grid, SpatialKernel::PeriodicBump { sigma: 0.7 }, AngularKernel::Sine);
        let report = validate_kernels(&pair);
        assert!(report.passed(), "{report:?}");
        let u = &pair.angular().u;
        for j in 0..64 {
            let t = u.theta(j);
            assert!((u.values()[j] - (-1.0 - t.cos())).abs() < 1e-12);
        }
        // Û₀(1) = ∫(−1 − cos θ)e^{−iθ} dθ = −π
        assert!((pair.angular().u_transform(1) - Complex64::new(-PI, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn shifted_phi_fails_symmetry_with_location() {
        let grid = TorusGrid::new(16, 16, 16).unwrap();
        let k = SpatialKernel::PeriodicBump { sigma: 0.5 };
        let mut phi = sample_x(grid, |x1, x2| k.eval([x1 - 0.4, x2]));
        let s: f64 = phi.iter().sum::<f64>() * TWO_PI * TWO_PI / 256.0;
        phi.iter_mut().for_each(|v| *v /= s);
        let pair = InfluencePair::from_samples(grid, phi, AngularProfile::constant(16, 1.0)).unwrap();
        let report = validate_kernels(&pair);
        assert!(!report.passed());
        let failed: Vec<_> = report.failures().iter().map(|c| c.name).collect();
        assert_eq!(failed, vec!["phi_symmetric"]);
        assert!(report.check("phi_symmetric").unwrap().location.is_some());
    }

    #[test]
    fn raised_cosine_squared_passes() {
        let grid = TorusGrid::new(8, 8, 64).unwrap();
        let pair = InfluencePair::new(grid, SpatialKernel::Uniform, AngularKernel::RaisedCosine { power: 2 });
        let report = validate_kernels(&pair);
        assert!(report.passed(), "{report:?}");
        // ∫Ψ = 0 by an independent midpoint quadrature
        let m = 10_000;
        let q: f64 = (0..m)
            .map(|i| {
                let t = -PI + (i as f64 + 0.5) * TWO_PI / m as f64;
                t.sin() * (1.0 + t.cos()).powi(2)
            })
            .sum::<f64>()
            * TWO_PI
            / m as f64;
        assert!(q.abs() < 1e-12);
        let max = AngularKernel::RaisedCosine { power: 2 }.max_abs();
        assert!(pair.angular().psi.max_abs() <= max + 1e-12);
    }

    #[test]
    fn negative_factor_is_flagged() {
        let grid = TorusGrid::new(8, 8, 32).unwrap();
        let phi = vec![1.0 / (TWO_PI * TWO_PI); 64];
        let pair = InfluencePair::from_samples(grid, phi, AngularProfile::from_fn(32, |t| t.cos())).unwrap();
        let report = validate_kernels(&pair);
        assert!(!report.check("psi_factor_nonnegative").unwrap().passed());
        assert!(report.check("phi_normalized").unwrap().passed());
    }

    #[test]
    fn bump_normalisation_is_analytic() {
        let k = SpatialKernel::PeriodicBump { sigma: 0.6 };
        let m = 400;
        let h = TWO_PI / m as f64;
        let mut s = 0.0;
        for i in 0..m {
            for j in 0..m {
                s += k.eval([i as f64 * h, j as f64 * h]);
            }
        }
        assert!((s * h * h - 1.0).abs() < 1e-12);
    }
}
