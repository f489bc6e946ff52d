//! The spatially homogeneous alignment equation
//!
//! ```text
//! ∂t g = κ ∂θ(g · Ψ*g) + ν ∂θ² g,   (Ψ*g)(θ) = ∫ Ψ(θ−η) g(η) dη
//! ```
//!
//! together with its free energy, Fisher information, linear stability
//! around the uniform state and the von Mises stationary family.

pub mod bessel;

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinetic::kernels::{AngularInfluence, AngularKernel};
use crate::spectral::{dealias_cutoff, derivative_symbol, wavenumber, AngularFft, AngularProfile, TWO_PI};

pub use bessel::{bessel_ratio, i0, i0e, i1e};

/// Smallest value kept when [`PositivityPolicy::Clamp`] is active.
pub const POSITIVITY_FLOOR: f64 = 1e-300;

/// How entropy-type functionals treat non-positive values of g.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum PositivityPolicy {
    #[default]
    Reject,
    Clamp,
}

/// A probability density g(θ) evolving under the homogeneous equation.
#[derive(Clone, Debug, PartialEq)]
pub struct HomogeneousState {
    pub g: AngularProfile,
    pub t: f64,
    pub kappa: f64,
    pub nu: f64,
    pub kernel: AngularInfluence,
}

impl HomogeneousState {
    pub fn new(g: AngularProfile, kappa: f64, nu: f64, kernel: AngularInfluence) -> Result<Self> {
        if kernel.n_theta() != g.len() {
            return Err(Error::GridMismatch {
                expected: format!("n_theta = {}", g.len()),
                found: format!("n_theta = {}", kernel.n_theta()),
            });
        }
        check_nonneg("kappa", kappa)?;
        if !(nu > 0.0) {
            return Err(Error::InvalidParameter { name: "nu", reason: format!("must be positive, got {nu}") });
        }
        Ok(Self { g, t: 0.0, kappa, nu, kernel })
    }

    /// State with Ψ = sin.
    pub fn with_sine(g: AngularProfile, kappa: f64, nu: f64) -> Result<Self> {
        let kernel = AngularInfluence::from_kernel(g.len(), AngularKernel::Sine);
        Self::new(g, kappa, nu, kernel)
    }

    pub fn mass(&self) -> f64 {
        self.g.integral()
    }

    /// m = ∫ e^{-iθ} g dθ.
    pub fn order_parameter(&self) -> Complex64 {
        self.g.first_moment()
    }

    pub fn free_energy(&self, policy: PositivityPolicy) -> f64 {
        free_energy(self, policy)
    }

    pub fn fisher_information(&self, policy: PositivityPolicy) -> Result<f64> {
        fisher_information(self, policy)
    }
}

fn check_nonneg(name: &'static str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name, reason: format!("must be finite and non-negative, got {v}") })
    }
}

/// Ψ*g as a profile.
pub fn psi_convolution(g: &AngularProfile, kernel: &AngularInfluence) -> AngularProfile {
    let c: Vec<Complex64> = g.coeffs().iter().zip(&kernel.psi_hat).map(|(a, p)| TWO_PI * p * a).collect();
    AngularProfile::from_coeffs(&c)
}

/// 𝕌*g as a profile.
fn u_convolution(g: &AngularProfile, kernel: &AngularInfluence) -> AngularProfile {
    let c: Vec<Complex64> = g.coeffs().iter().zip(kernel.u.coeffs()).map(|(a, u)| TWO_PI * u * a).collect();
    AngularProfile::from_coeffs(&c)
}

/// Full right-hand side κ∂θ(g Ψ*g) + ν∂θ²g, without dealiasing.
pub fn homogeneous_rhs(g: &AngularProfile, kernel: &AngularInfluence, kappa: f64, nu: f64) -> AngularProfile {
    let n = g.len();
    let conv = psi_convolution(g, kernel);
    let flux: Vec<f64> = g.values().iter().zip(conv.values()).map(|(a, b)| a * b).collect();
    let fc = AngularFft::new(n).forward_real(&flux);
    let gc = g.coeffs();
    let out: Vec<Complex64> = (0..n)
        .map(|m| {
            let l = derivative_symbol(m, n);
            let l2 = (wavenumber(m, n) as f64).powi(2);
            kappa * Complex64::new(0.0, l) * fc[m] - nu * l2 * gc[m]
        })
        .collect();
    AngularProfile::from_coeffs(&out)
}

/// L² norm of the right-hand side, i.e. how far g is from stationary.
pub fn stationary_residual(g: &AngularProfile, kernel: &AngularInfluence, kappa: f64, nu: f64) -> f64 {
    homogeneous_rhs(g, kernel, kappa, nu).l2_norm()
}

/// Largest dt accepted by the explicit alignment sub-step.
pub fn step_limit(kappa: f64, n_theta: usize, max_drift: f64) -> f64 {
    0.5 / (kappa * (n_theta / 2) as f64 * max_drift + 1.0)
}

/// Strang splitting integrator working in coefficient space.
#[derive(Clone, Debug)]
pub struct HomogeneousIntegrator {
    fft: AngularFft,
    kmax: i64,
    psi_hat: Vec<Complex64>,
}

impl HomogeneousIntegrator {
    pub fn new(kernel: &AngularInfluence) -> Self {
        let n = kernel.n_theta();
        Self { fft: AngularFft::new(n), kmax: dealias_cutoff(n), psi_hat: kernel.psi_hat.clone() }
    }

    /// κ∂θ(g Ψ*g) with both factors and the product truncated to
    /// |ℓ| ≤ (n−1)/3. Returns the coefficients and max|Ψ*g|.
    fn alignment(&self, c: &[Complex64], kappa: f64) -> (Vec<Complex64>, f64) {
        let n = c.len();
        let mut gt = c.to_vec();
        let mut lt = vec![Complex64::default(); n];
        for m in 0..n {
            if wavenumber(m, n).abs() > self.kmax {
                gt[m] = Complex64::default();
            } else {
                lt[m] = TWO_PI * self.psi_hat[m] * gt[m];
            }
        }
        let gv = self.fft.inverse_real(&gt);
        let lv = self.fft.inverse_real(&lt);
        let max_l = lv.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let prod: Vec<f64> = gv.iter().zip(&lv).map(|(a, b)| a * b).collect();
        let mut pc = self.fft.forward_real(&prod);
        for (m, v) in pc.iter_mut().enumerate() {
            let l = wavenumber(m, n);
            *v = if l.abs() > self.kmax { Complex64::default() } else { kappa * Complex64::new(0.0, l as f64) * *v };
        }
        (pc, max_l)
    }

    fn heun(&self, c: &mut [Complex64], kappa: f64, h: f64) -> f64 {
        let (k1, max_l) = self.alignment(c, kappa);
        let mid: Vec<Complex64> = c.iter().zip(&k1).map(|(a, k)| a + h * k).collect();
        let (k2, _) = self.alignment(&mid, kappa);
        for ((a, x), y) in c.iter_mut().zip(&k1).zip(&k2) {
            *a += 0.5 * h * (x + y);
        }
        max_l
    }

    /// Advances the state by one step of size dt.
    pub fn step(&self, s: &mut HomogeneousState, dt: f64) -> Result<()> {
        if !(dt > 0.0) {
            return Err(Error::InvalidParameter { name: "dt", reason: format!("must be positive, got {dt}") });
        }
        let n = s.g.len();
        let mut c = self.fft.forward_real(s.g.values());
        let conv = self.fft.inverse_real(&c.iter().zip(&self.psi_hat).map(|(a, p)| TWO_PI * p * a).collect::<Vec<_>>());
        let limit = step_limit(s.kappa, n, conv.iter().fold(0.0f64, |a, v| a.max(v.abs())));
        if dt > limit {
            return Err(Error::StepGuard { dt, limit });
        }
        if s.kappa != 0.0 {
            self.heun(&mut c, s.kappa, 0.5 * dt);
        }
        for (m, v) in c.iter_mut().enumerate() {
            let l = wavenumber(m, n) as f64;
            *v *= (-s.nu * l * l * dt).exp();
        }
        if s.kappa != 0.0 {
            self.heun(&mut c, s.kappa, 0.5 * dt);
        }
        let values = self.fft.inverse_real(&c);
        s.t += dt;
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { t: s.t, detail: format!("g(θ_{j}) after homogeneous step") });
        }
        s.g = AngularProfile::from_values(values)?;
        Ok(())
    }
}

/// Runs `n_steps` steps and returns every state, the initial one first.
pub fn evolve_homogeneous(s: &HomogeneousState, dt: f64, n_steps: usize) -> Result<Vec<HomogeneousState>> {
    let integ = HomogeneousIntegrator::new(&s.kernel);
    let mut out = Vec::with_capacity(n_steps + 1);
    let mut cur = s.clone();
    out.push(cur.clone());
    for _ in 0..n_steps {
        integ.step(&mut cur, dt)?;
        out.push(cur.clone());
    }
    Ok(out)
}

fn positive_values(g: &AngularProfile, policy: PositivityPolicy) -> Option<Vec<f64>> {
    match policy {
        PositivityPolicy::Reject if g.min() <= 0.0 => None,
        PositivityPolicy::Reject => Some(g.values().to_vec()),
        PositivityPolicy::Clamp => Some(g.values().iter().map(|v| v.max(POSITIVITY_FLOOR)).collect()),
    }
}

/// F[g] = ν∫ g log g + (κ/2) ∬ 𝕌(θ−w) g(θ) g(w). Returns +∞ when g is not
/// strictly positive under [`PositivityPolicy::Reject`].
pub fn free_energy(s: &HomogeneousState, policy: PositivityPolicy) -> f64 {
    let Some(vals) = positive_values(&s.g, policy) else {
        return f64::INFINITY;
    };
    let n = vals.len() as f64;
    let entropy = TWO_PI * vals.iter().map(|v| v * v.ln()).sum::<f64>() / n;
    let uc = u_convolution(&s.g, &s.kernel);
    let inter = TWO_PI * s.g.values().iter().zip(uc.values()).map(|(a, b)| a * b).sum::<f64>() / n;
    s.nu * entropy + 0.5 * s.kappa * inter
}

/// 𝒟[g] = ∫ g |ν ∂θ log g + κ Ψ*g|².
pub fn fisher_information(s: &HomogeneousState, policy: PositivityPolicy) -> Result<f64> {
    let vals = positive_values(&s.g, policy).ok_or(Error::NonPositive { min: s.g.min() })?;
    let dg = s.g.derivative();
    let conv = psi_convolution(&s.g, &s.kernel);
    let n = vals.len();
    let sum: f64 = (0..n)
        .map(|j| {
            let flux = s.nu * dg.values()[j] + s.kappa * vals[j] * conv.values()[j];
            flux * flux / vals[j]
        })
        .sum();
    Ok(TWO_PI * sum / n as f64)
}

/// Growth rates of the linearisation around g ≡ 1/(2π).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    /// (ℓ, σ_ℓ) for ℓ = 1..=l_max.
    pub rates: Vec<(i64, f64)>,
    pub stable: bool,
}

/// σ_ℓ = −ℓ²(ν + (κ/2π) Re Û(ℓ)) with Û(ℓ) = ∫ 𝕌 e^{-iℓθ} dθ.
pub fn linear_stability(kernel: &AngularInfluence, kappa: f64, nu: f64, l_max: usize) -> Result<StabilityReport> {
    let n = kernel.n_theta();
    if l_max == 0 || l_max >= n / 2 {
        return Err(Error::InvalidParameter {
            name: "l_max",
            reason: format!("must lie in 1..{} for n_theta = {n}", n / 2),
        });
    }
    let rates: Vec<(i64, f64)> = (1..=l_max as i64)
        .map(|l| {
            let u = kernel.u_transform(l).re;
            (l, -((l * l) as f64) * (nu + kappa / TWO_PI * u))
        })
        .collect();
    let stable = rates.iter().all(|&(_, s)| s < 0.0);
    Ok(StabilityReport { rates, stable })
}

/// g_s(θ) = exp(c|r| cos(θ + arg r)) / (2π I₀(c|r|)) with c = κ/ν.
pub fn von_mises_state(n_theta: usize, ratio: f64, r: Complex64) -> AngularProfile {
    let z = ratio * r.norm();
    let phase = r.arg();
    let norm = TWO_PI * i0e(z);
    AngularProfile::from_fn(n_theta, |t| (z * ((t + phase).cos() - 1.0)).exp() / norm)
}

/// Admissible order-parameter magnitudes of the stationary states.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationaryRoot {
    pub ratio: f64,
    pub roots: Vec<f64>,
    pub r2: Option<f64>,
}

const BISECTION_TOL: f64 = 1e-12;
const BISECTION_MAX_ITER: usize = 200;

/// Solves I₁(z)/I₀(z) = z/ratio for z > 0 and reports |r| = z/ratio.
pub fn solve_compatibility(ratio: f64) -> Result<StationaryRoot> {
    if !(ratio > 0.0) || !ratio.is_finite() {
        return Err(Error::InvalidParameter { name: "ratio", reason: format!("must be positive, got {ratio}") });
    }
    if ratio <= 2.0 {
        return Ok(StationaryRoot { ratio, roots: vec![0.0], r2: None });
    }
    let h = |z: f64| bessel_ratio(z) - z / ratio;
    let (mut lo, mut hi) = (1e-8, 10.0 * ratio);
    if !(h(lo) > 0.0 && h(hi) < 0.0) {
        return Err(Error::Bracketing(format!(
            "h({lo}) = {:e}, h({hi}) = {:e} for ratio {ratio}",
            h(lo),
            h(hi)
        )));
    }
    for _ in 0..BISECTION_MAX_ITER {
        if hi - lo <= BISECTION_TOL {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if h(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let r2 = 0.5 * (lo + hi) / ratio;
    Ok(StationaryRoot { ratio, roots: vec![0.0, r2], r2: Some(r2) })
}

/// The two evaluations of the alignment drift for Ψ = sin.
#[derive(Clone, Debug, PartialEq)]
pub struct FrouvelleLiu {
    /// −∇_p·((I − p⊗p) J[g] g) on the unit circle.
    pub sphere: AngularProfile,
    /// ∂θ(g · sin*g).
    pub angular: AngularProfile,
}

impl FrouvelleLiu {
    pub fn discrepancy(&self) -> f64 {
        self.sphere.max_distance(&self.angular)
    }
}

pub fn frouvelle_liu_rhs(g: &AngularProfile) -> FrouvelleLiu {
    let n = g.len();
    let n_f = n as f64;
    // J[g] = ∫ (cos θ', sin θ') g dθ'
    let (mut j1, mut j2) = (0.0, 0.0);
    for (k, v) in g.values().iter().enumerate() {
        let t = g.theta(k);
        j1 += t.cos() * v;
        j2 += t.sin() * v;
    }
    j1 *= TWO_PI / n_f;
    j2 *= TWO_PI / n_f;
    let mut f1 = Vec::with_capacity(n);
    let mut f2 = Vec::with_capacity(n);
    for (k, v) in g.values().iter().enumerate() {
        let (s, c) = g.theta(k).sin_cos();
        // (I − p⊗p) = [[s², −sc], [−sc, c²]]
        f1.push((s * s * j1 - s * c * j2) * v);
        f2.push((-s * c * j1 + c * c * j2) * v);
    }
    let d1 = AngularProfile::from_values(f1).expect("same length").derivative();
    let d2 = AngularProfile::from_values(f2).expect("same length").derivative();
    let sphere: Vec<f64> = (0..n)
        .map(|k| {
            let (s, c) = g.theta(k).sin_cos();
            -(-s * d1.values()[k] + c * d2.values()[k])
        })
        .collect();

    let kernel = AngularInfluence::from_kernel(n, AngularKernel::Sine);
    let conv = psi_convolution(g, &kernel);
    let flux: Vec<f64> = g.values().iter().zip(conv.values()).map(|(a, b)| a * b).collect();
    let angular = AngularProfile::from_values(flux).expect("same length").derivative();
    FrouvelleLiu { sphere: AngularProfile::from_values(sphere).expect("same length"), angular }
}

/// Uniform density 1/(2π).
pub fn uniform_profile(n_theta: usize) -> AngularProfile {
    AngularProfile::constant(n_theta, 1.0 / TWO_PI)
}

/// (1 + a cos θ)/(2π), a probability density for |a| < 1.
pub fn cosine_profile(n_theta: usize, a: f64) -> AngularProfile {
    AngularProfile::from_fn(n_theta, |t| (1.0 + a * t.cos()) / (2.0 * PI))
}
