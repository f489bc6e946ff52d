//! Per-x-mode passive scalar problem
//!
//! ```text
//! ∂t η + i v(t) |k| cos(θ − θ_k) η = ν ∂θ² η
//! ```
//!
//! with the hypocoercivity functional, its comparison bounds, rate
//! measurements and the J_k vector fields.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{fit_rate, FitMode, RateFit};
use crate::harness::csv::CsvWriter;
use crate::spectral::{check_count, theta_point, wavenumber, wrap_angle, AngularFft, ComplexProfile, TWO_PI};
use crate::speed::SpeedProfile;

/// State of a single x-Fourier mode η̂_k(θ, t), held by θ-coefficients.
#[derive(Clone, Debug)]
pub struct ModeState {
    pub k: [i64; 2],
    pub theta_k: f64,
    /// η̂_k(ℓ), FFT order.
    pub eta: Vec<Complex64>,
    pub t: f64,
    pub nu: f64,
    pub speed: SpeedProfile,
    /// When false the transport sub-step is skipped (pure heat flow).
    pub transport: bool,
    fft: AngularFft,
}

impl ModeState {
    pub fn new(k: [i64; 2], nu: f64, eta: Vec<Complex64>) -> Result<Self> {
        if k == [0, 0] {
            return Err(Error::InvalidParameter { name: "k", reason: "the zero mode carries no transport".into() });
        }
        if !(nu >= 0.0) || !nu.is_finite() {
            return Err(Error::InvalidParameter { name: "nu", reason: format!("must be non-negative, got {nu}") });
        }
        check_count("n_theta", eta.len())?;
        let theta_k = (k[1] as f64).atan2(k[0] as f64);
        let fft = AngularFft::new(eta.len());
        Ok(Self { k, theta_k, eta, t: 0.0, nu, speed: SpeedProfile::default(), transport: true, fft })
    }

    /// Samples η₀(θ) on `n_theta` points.
    pub fn from_fn(k: [i64; 2], nu: f64, n_theta: usize, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        check_count("n_theta", n_theta)?;
        let mut buf: Vec<Complex64> = (0..n_theta).map(|j| f(theta_point(j, n_theta))).collect();
        AngularFft::new(n_theta).forward(&mut buf);
        Self::new(k, nu, buf)
    }

    /// η₀ = cos θ.
    pub fn cosine(k: [i64; 2], nu: f64, n_theta: usize) -> Result<Self> {
        Self::from_fn(k, nu, n_theta, |t| Complex64::new(t.cos(), 0.0))
    }

    pub fn with_speed(mut self, speed: SpeedProfile) -> Self {
        self.speed = speed;
        self
    }

    pub fn without_transport(mut self) -> Self {
        self.transport = false;
        self
    }

    pub fn n_theta(&self) -> usize {
        self.eta.len()
    }

    pub fn k_norm(&self) -> f64 {
        ((self.k[0] * self.k[0] + self.k[1] * self.k[1]) as f64).sqrt()
    }

    /// Enhanced-dissipation time ν^{-1/2}|k|^{-1/2}.
    pub fn ed_time(&self) -> f64 {
        1.0 / (self.nu * self.k_norm()).sqrt()
    }

    /// ζ = min{1, ν^{1/2}|k|^{1/2} t}.
    pub fn zeta(&self) -> f64 {
        ((self.nu * self.k_norm()).sqrt() * self.t).min(1.0)
    }

    pub fn values(&self) -> ComplexProfile {
        let mut buf = self.eta.clone();
        self.fft.inverse(&mut buf);
        ComplexProfile { values: buf }
    }

    pub fn l2_norm(&self) -> f64 {
        (TWO_PI * self.eta.iter().map(|c| c.norm_sqr()).sum::<f64>()).sqrt()
    }

    /// ‖η̂_k‖ weighted by (|k|² + ℓ²)^{-1/2}.
    pub fn hm1_norm(&self) -> f64 {
        let n = self.n_theta();
        let k2 = self.k_norm().powi(2);
        let s: f64 = self
            .eta
            .iter()
            .enumerate()
            .map(|(m, c)| c.norm_sqr() / (k2 + (wavenumber(m, n) as f64).powi(2)))
            .sum();
        (TWO_PI * s).sqrt()
    }

    /// ‖η‖ + ‖∂θη‖.
    pub fn h1_norm(&self) -> f64 {
        self.l2_norm() + norm_sq(&derivative_coeffs(&self.eta)).sqrt()
    }

    fn transport_half(&mut self, dt: f64, t_mid: f64) {
        let n = self.n_theta();
        let a = self.speed.at(t_mid) * self.k_norm() * 0.5 * dt;
        self.fft.inverse(&mut self.eta);
        for (j, v) in self.eta.iter_mut().enumerate() {
            let phase = -a * (theta_point(j, n) - self.theta_k).cos();
            *v *= Complex64::from_polar(1.0, phase);
        }
        self.fft.forward(&mut self.eta);
    }

    /// One Strang step: transport dt/2, exact diffusion dt, transport dt/2.
    pub fn step(&mut self, dt: f64) {
        let n = self.n_theta();
        let t0 = self.t;
        if self.transport {
            self.transport_half(dt, t0 + 0.25 * dt);
        }
        for (m, c) in self.eta.iter_mut().enumerate() {
            let l = wavenumber(m, n) as f64;
            *c *= (-self.nu * l * l * dt).exp();
        }
        if self.transport {
            self.transport_half(dt, t0 + 0.75 * dt);
        }
        self.t = t0 + dt;
    }
}

/// Functional form of [`ModeState::step`].
pub fn step_mode(s: &ModeState, dt: f64) -> ModeState {
    let mut out = s.clone();
    out.step(dt);
    out
}

/// Signed wavenumbers in storage order, with the Nyquist slot read as +n/2.
fn signed_l(m: usize, n: usize) -> i64 {
    if m == n / 2 {
        (n / 2) as i64
    } else {
        wavenumber(m, n)
    }
}

/// Coefficients of ∂θη on the signed range, as (ℓ, value).
fn derivative_coeffs(eta: &[Complex64]) -> Vec<(i64, Complex64)> {
    let n = eta.len();
    (0..n)
        .map(|m| {
            let l = signed_l(m, n);
            (l, Complex64::new(0.0, l as f64) * eta[m])
        })
        .collect()
}

/// Coefficients of sin(θ − φ)η on ℓ ∈ [−n/2, n/2 + 1], computed exactly.
fn sine_product(eta: &[Complex64], phi: f64) -> Vec<(i64, Complex64)> {
    let n = eta.len();
    let half = (n / 2) as i64;
    let lo = -half + 1;
    let get = |l: i64| -> Complex64 {
        if l < lo || l > half {
            Complex64::default()
        } else {
            eta[l.rem_euclid(n as i64) as usize]
        }
    };
    // sin(θ−φ) = (e^{i(θ−φ)} − e^{−i(θ−φ)}) / 2i
    let ep = Complex64::from_polar(1.0, -phi);
    let em = Complex64::from_polar(1.0, phi);
    let inv2i = Complex64::new(0.0, -0.5);
    (lo - 1..=half + 1).map(|l| (l, inv2i * (ep * get(l - 1) - em * get(l + 1)))).collect()
}

fn norm_sq(c: &[(i64, Complex64)]) -> f64 {
    TWO_PI * c.iter().map(|(_, v)| v.norm_sqr()).sum::<f64>()
}

/// Weights of the hypocoercivity functional. β² = αγ by construction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypoWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

pub const MAX_BETA: f64 = 1.0 / 4096.0;

impl HypoWeights {
    pub fn new(beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta <= MAX_BETA) {
            return Err(Error::InvalidParameter { name: "beta", reason: format!("must lie in (0, 1/4096], got {beta}") });
        }
        Ok(Self { alpha: beta.sqrt() / 4.0, beta, gamma: 4.0 * beta.powf(1.5) })
    }
}

impl Default for HypoWeights {
    fn default() -> Self {
        Self::new(MAX_BETA).expect("largest admissible β")
    }
}

/// The four terms of F and their sum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypoTerms {
    pub l2: f64,
    pub gradient: f64,
    pub cross: f64,
    pub shear: f64,
}

impl HypoTerms {
    pub fn total(&self) -> f64 {
        self.l2 + self.gradient + self.cross + self.shear
    }
}

/// ```text
/// F = ‖η‖² + αζν^{1/2}|k|^{-1/2}‖∂θη‖² − βζ² Re⟨i sin(θ−θ_k)η, ∂θη⟩
///     + γζ³ν^{-1/2}|k|^{1/2}‖sin(θ−θ_k)η‖²
/// ```
/// Inner products are evaluated exactly in coefficient space.
pub fn hypo_functional(s: &ModeState, w: &HypoWeights) -> HypoTerms {
    let z = s.zeta();
    let l2 = s.l2_norm().powi(2);
    if z == 0.0 {
        return HypoTerms { l2, gradient: 0.0, cross: 0.0, shear: 0.0 };
    }
    let k = s.k_norm();
    let d = derivative_coeffs(&s.eta);
    let sp = sine_product(&s.eta, s.theta_k);
    // Re⟨i s, ∂η⟩ = 2π Re Σ ŝ(ℓ) ℓ conj(η̂(ℓ))
    let n = s.n_theta();
    let cross_ip: f64 = sp
        .iter()
        .filter(|(l, _)| *l > -((n / 2) as i64) && *l <= (n / 2) as i64)
        .map(|&(l, v)| (v * l as f64 * s.eta[l.rem_euclid(n as i64) as usize].conj()).re)
        .sum::<f64>()
        * TWO_PI;
    HypoTerms {
        l2,
        gradient: w.alpha * z * (s.nu / k).sqrt() * norm_sq(&d),
        cross: -w.beta * z * z * cross_ip,
        shear: w.gamma * z.powi(3) * (k / s.nu).sqrt() * norm_sq(&sp),
    }
}

/// Lower and upper comparison bounds around F.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sandwich {
    pub lower: f64,
    pub value: f64,
    pub upper: f64,
}

impl Sandwich {
    /// Smallest of F − lower and upper − F.
    pub fn margin(&self) -> f64 {
        (self.value - self.lower).min(self.upper - self.value)
    }
}

/// Round-off allowance for the sandwich, relative to F; the bounds can be
/// attained with equality.
pub const SANDWICH_TOL: f64 = 1e-12;

pub fn comparison_bounds(terms: &HypoTerms) -> Sandwich {
    let weighted = terms.gradient + terms.shear;
    Sandwich { lower: terms.l2 + 0.5 * weighted, value: terms.total(), upper: terms.l2 + 1.5 * weighted }
}

/// Evaluates (lower, F, upper) and fails if the ordering is violated.
pub fn comparison_sandwich(s: &ModeState, w: &HypoWeights) -> Result<Sandwich> {
    if w.beta * w.beta > w.alpha * w.gamma * (1.0 + 1e-12) {
        return Err(Error::InvalidParameter { name: "beta", reason: "β² > αγ".into() });
    }
    let b = comparison_bounds(&hypo_functional(s, w));
    if b.margin() < -SANDWICH_TOL * b.value.abs().max(f64::MIN_POSITIVE) {
        return Err(Error::Invariant(format!(
            "comparison bounds violated at t = {}: {} ≤ {} ≤ {}",
            s.t, b.lower, b.value, b.upper
        )));
    }
    Ok(b)
}

/// Outcome of an enhanced-dissipation run.
#[derive(Clone, Debug, PartialEq)]
pub struct RateMeasurement {
    /// λ = −slope of log‖η‖.
    pub rate: f64,
    pub fit: RateFit,
    pub series: Vec<(f64, f64)>,
}

/// Evolves `s` to `horizon` and fits log‖η(t)‖ on [ν^{-1/2}|k|^{-1/2}, horizon].
/// Samples below 1e-13 of the initial norm are dropped.
pub fn measure_ed_rate(s: &ModeState, horizon: f64, dt: f64) -> Result<RateMeasurement> {
    if !(s.nu > 0.0) {
        return Err(Error::InvalidParameter { name: "nu", reason: "rate measurement needs ν > 0".into() });
    }
    let start = if s.transport { s.ed_time() } else { 0.0 };
    let n_steps = (horizon / dt).round() as usize;
    let every = (n_steps / 400).max(1);
    let mut cur = s.clone();
    let n0 = cur.l2_norm();
    if n0 == 0.0 {
        return Err(Error::InvalidParameter { name: "eta0", reason: "initial mode is zero".into() });
    }
    let mut series = vec![(cur.t, n0)];
    for i in 1..=n_steps {
        cur.step(dt);
        if i % every == 0 {
            let v = cur.l2_norm();
            if v < 1e-13 * n0 {
                break;
            }
            series.push((cur.t, v));
        }
    }
    let fit = fit_rate(&series, (start, horizon + dt), FitMode::Exponential)?;
    Ok(RateMeasurement { rate: -fit.slope, fit, series })
}

/// A_k^± and B_k^± at time t, with s = √(ν|k|) t.
pub fn jk_coefficients(nu: f64, k_norm: f64, t: f64, sign: JSign) -> (Complex64, Complex64) {
    let s = (nu * k_norm).sqrt() * t;
    match sign {
        JSign::Plus => {
            let e = (Complex64::new(-2.0, 2.0) * s).exp();
            (0.5 * (1.0 + e), Complex64::new(1.0, 1.0) / 4.0 * (1.0 - e))
        }
        JSign::Minus => {
            let e = (Complex64::new(-2.0, -2.0) * s).exp();
            (0.5 * (1.0 + e), Complex64::new(-1.0, 1.0) / 4.0 * (1.0 - e))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum JSign {
    Plus,
    Minus,
}

#[derive(Clone, Debug, PartialEq)]
pub struct JkField {
    pub a: Complex64,
    pub b: Complex64,
    pub field: ComplexProfile,
}

/// J_k^±η = A ∂θη − i (ν/|k|)^{-1/2} B sin(θ − θ_k^±) η, with θ_k^− = θ_k + π.
/// Fails if the coefficient bounds 1/4 ≤ |A| ≤ 1, |B| ≤ ζ ≤ 8|B| break.
pub fn jk_fields(s: &ModeState, sign: JSign) -> Result<JkField> {
    let k = s.k_norm();
    let (a, b) = jk_coefficients(s.nu, k, s.t, sign);
    if s.t > 0.0 && s.nu > 0.0 {
        let z = s.zeta();
        let tol = 1e-12;
        if !(a.norm() >= 0.25 - tol && a.norm() <= 1.0 + tol && b.norm() <= z + tol && z <= 8.0 * b.norm() + tol) {
            return Err(Error::Invariant(format!("|A| = {}, |B| = {}, ζ = {z} at t = {}", a.norm(), b.norm(), s.t)));
        }
    }
    let n = s.n_theta();
    let phi = match sign {
        JSign::Plus => s.theta_k,
        JSign::Minus => s.theta_k + PI,
    };
    let weight = if s.nu > 0.0 { (k / s.nu).sqrt() } else { 0.0 };
    let mut d: Vec<Complex64> = derivative_coeffs(&s.eta).into_iter().map(|(_, v)| v).collect();
    s.fft.inverse(&mut d);
    let eta = s.values().values;
    let values = (0..n)
        .map(|j| {
            let sn = (theta_point(j, n) - phi).sin();
            a * d[j] - Complex64::i() * weight * b * sn * eta[j]
        })
        .collect();
    Ok(JkField { a, b, field: ComplexProfile { values } })
}

/// Smooth bump χ(θ) = exp(1 − 1/(1 − (Δ/w)²)) for |Δ| < w = 2π/3, Δ = θ − center.
pub fn cutoff(theta: f64, center: f64) -> f64 {
    let w = TWO_PI / 3.0;
    let d = wrap_angle(theta - center) / w;
    if d.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - d * d)).exp()
    }
}

/// Ḣ^{-1} samples of a mixing run and the power-law fit on [1, ν^{-1/2}].
#[derive(Clone, Debug, PartialEq)]
pub struct MixingCurve {
    pub series: Vec<(f64, f64)>,
    pub fit: RateFit,
}

pub fn mixing_curve(s: &ModeState, horizon: f64, dt: f64) -> Result<MixingCurve> {
    if !(s.nu > 0.0) {
        return Err(Error::InvalidParameter { name: "nu", reason: "mixing run needs ν > 0".into() });
    }
    let heat = 1.0 / s.nu.sqrt();
    if horizon > 2.0 * heat * (1.0 + 1e-12) {
        return Err(Error::InvalidParameter {
            name: "horizon",
            reason: format!("{horizon} exceeds 2ν^(-1/2) = {}", 2.0 * heat),
        });
    }
    let n_steps = (horizon / dt).round() as usize;
    let every = (n_steps / 1000).max(1);
    let mut cur = s.clone();
    let mut series = vec![(0.0, cur.hm1_norm())];
    for i in 1..=n_steps {
        cur.step(dt);
        if i % every == 0 {
            series.push((cur.t, cur.hm1_norm()));
        }
    }
    let fit = fit_rate(&series, (1.0, heat.min(horizon)), FitMode::PowerLaw)?;
    Ok(MixingCurve { series, fit })
}

/// Initial profile of a mode job.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum InitialMode {
    Cosine,
    /// e^{iℓθ}.
    Fourier(i64),
    /// Random coefficients on |ℓ| ≤ 8 decaying like 1/(1+ℓ²).
    Random { seed: u64 },
}

impl InitialMode {
    pub fn build(&self, k: [i64; 2], nu: f64, n_theta: usize) -> Result<ModeState> {
        match *self {
            InitialMode::Cosine => ModeState::cosine(k, nu, n_theta),
            InitialMode::Fourier(l) => ModeState::from_fn(k, nu, n_theta, |t| Complex64::from_polar(1.0, l as f64 * t)),
            InitialMode::Random { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                check_count("n_theta", n_theta)?;
                let mut eta = vec![Complex64::default(); n_theta];
                for l in -8i64..=8 {
                    let w = 1.0 / (1.0 + (l * l) as f64);
                    eta[l.rem_euclid(n_theta as i64) as usize] =
                        w * Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                }
                ModeState::new(k, nu, eta)
            }
        }
    }
}

/// One (k, ν) run for the parallel job map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeJob {
    pub k: [i64; 2],
    pub nu: f64,
    pub n_theta: usize,
    pub dt: f64,
    pub horizon: f64,
    pub sample_every: usize,
    pub initial: InitialMode,
    pub beta: f64,
}

impl ModeJob {
    /// File stem naming the job by its parameters.
    pub fn file_stem(&self) -> String {
        format!("mode_k{}_{}_nu{:e}", self.k[0], self.k[1], self.nu)
    }
}

/// One CSV row of a mode run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeSample {
    pub t: f64,
    pub norm_l2: f64,
    pub norm_hm1: f64,
    pub f_hypo: f64,
    pub f_lower: f64,
    pub f_upper: f64,
    pub zeta: f64,
}

pub const MODE_COLUMNS: [&str; 7] = ["t", "norm_L2", "norm_Hm1", "F_hypo", "F_lower", "F_upper", "zeta"];

impl ModeSample {
    pub fn row(&self) -> [f64; 7] {
        [self.t, self.norm_l2, self.norm_hm1, self.f_hypo, self.f_lower, self.f_upper, self.zeta]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModeRun {
    pub job: ModeJob,
    pub samples: Vec<ModeSample>,
}

fn sample_of(s: &ModeState, w: &HypoWeights) -> Result<ModeSample> {
    let b = comparison_sandwich(s, w)?;
    Ok(ModeSample {
        t: s.t,
        norm_l2: s.l2_norm(),
        norm_hm1: s.hm1_norm(),
        f_hypo: b.value,
        f_lower: b.lower,
        f_upper: b.upper,
        zeta: s.zeta(),
    })
}

/// Runs one job, checking the sandwich at every sample.
pub fn run_mode_job(job: &ModeJob) -> Result<ModeRun> {
    let w = HypoWeights::new(job.beta)?;
    let mut s = job.initial.build(job.k, job.nu, job.n_theta)?;
    let n_steps = (job.horizon / job.dt).round() as usize;
    let every = job.sample_every.max(1);
    let mut samples = vec![sample_of(&s, &w)?];
    for i in 1..=n_steps {
        s.step(job.dt);
        if i % every == 0 || i == n_steps {
            samples.push(sample_of(&s, &w)?);
        }
    }
    Ok(ModeRun { job: job.clone(), samples })
}

/// Runs independent jobs in parallel; results keep the input order.
pub fn run_mode_jobs(jobs: &[ModeJob]) -> Vec<Result<ModeRun>> {
    jobs.par_iter().map(run_mode_job).collect()
}

pub fn write_mode_csv(path: &Path, run: &ModeRun) -> Result<()> {
    let mut w = CsvWriter::create(path, &MODE_COLUMNS)?;
    for s in &run.samples {
        w.write_row(&s.row())?;
    }
    w.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inviscid_transport_is_isometric() {
        let mut s = InitialMode::Random { seed: 4 }.build([1, 2], 0.0, 128).unwrap();
        let n0 = s.l2_norm();
        for _ in 0..1000 {
            let before = s.l2_norm();
            s.step(0.05);
            assert!((s.l2_norm() - before).abs() < 1e-12 * n0);
        }
        assert!((s.l2_norm() - n0).abs() < 1e-12 * n0 * 10.0);
    }

    #[test]
    fn heat_flow_is_exact() {
        let nu = 0.02;
        let mut s = InitialMode::Fourier(3).build([1, 0], nu, 32).unwrap().without_transport();
        for _ in 0..100 {
            s.step(0.1);
        }
        let expect = (-nu * 9.0 * 10.0).exp();
        for (j, v) in s.values().values.iter().enumerate() {
            let t = theta_point(j, 32);
            assert!((v - expect * Complex64::from_polar(1.0, 3.0 * t)).norm() < 1e-14);
        }
    }

    #[test]
    fn full_step_contracts() {
        let mut s = InitialMode::Random { seed: 8 }.build([2, 1], 1e-2, 64).unwrap();
        for _ in 0..500 {
            let before = s.l2_norm();
            s.step(0.05);
            assert!(s.l2_norm() <= before * (1.0 + 1e-14));
        }
    }

    /// RK4 on the coupled coefficient system, ℓ ∈ [−L, L].
    fn dense_oracle(nu: f64, k: f64, l_max: i64, t_end: f64, dt: f64) -> Vec<Complex64> {
        let size = (2 * l_max + 1) as usize;
        let mut y = vec![Complex64::default(); size];
        y[(l_max + 1) as usize] = Complex64::new(0.5, 0.0);
        y[(l_max - 1) as usize] = Complex64::new(0.5, 0.0);
        let rhs = |y: &[Complex64]| -> Vec<Complex64> {
            (0..size)
                .map(|i| {
                    let l = i as i64 - l_max;
                    let lo = if i > 0 { y[i - 1] } else { Complex64::default() };
                    let hi = if i + 1 < size { y[i + 1] } else { Complex64::default() };
                    Complex64::new(0.0, -0.5 * k) * (lo + hi) - nu * (l * l) as f64 * y[i]
                })
                .collect()
        };
        let n = (t_end / dt).round() as usize;
        for _ in 0..n {
            let k1 = rhs(&y);
            let y2: Vec<_> = y.iter().zip(&k1).map(|(a, b)| a + 0.5 * dt * b).collect();
            let k2 = rhs(&y2);
            let y3: Vec<_> = y.iter().zip(&k2).map(|(a, b)| a + 0.5 * dt * b).collect();
            let k3 = rhs(&y3);
            let y4: Vec<_> = y.iter().zip(&k3).map(|(a, b)| a + dt * b).collect();
            let k4 = rhs(&y4);
            for i in 0..size {
                y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        y
    }

    #[test]
    fn matches_dense_coefficient_oracle() {
        let nu = 1e-3;
        let mut s = ModeState::cosine([1, 0], nu, 64).unwrap();
        for _ in 0..1000 {
            s.step(1e-3);
        }
        let l_max = 20;
        let y = dense_oracle(nu, 1.0, l_max, 1.0, 1e-5);
        let scale = y.iter().map(|c| c.norm()).fold(0.0, f64::max);
        for l in -l_max..=l_max {
            let a = s.eta[l.rem_euclid(64) as usize];
            let b = y[(l + l_max) as usize];
            assert!((a - b).norm() < 1e-6 * scale, "ℓ = {l}: {a} vs {b}");
        }
    }

    #[test]
    fn functional_reduces_at_zero_time() {
        let w = HypoWeights::default();
        let s = ModeState::cosine([1, 0], 1e-3, 64).unwrap();
        let f = hypo_functional(&s, &w);
        assert_eq!(f.total(), s.l2_norm().powi(2));
        let b = comparison_sandwich(&s, &w).unwrap();
        assert_eq!((b.lower, b.value), (b.value, b.upper));
        let zero = ModeState::new([1, 0], 1e-3, vec![Complex64::default(); 16]).unwrap();
        let z = comparison_sandwich(&zero, &w).unwrap();
        assert_eq!((z.lower, z.value, z.upper), (0.0, 0.0, 0.0));
    }

    #[test]
    fn functional_terms_match_quadrature() {
        let nu: f64 = 1e-3;
        let w = HypoWeights::default();
        let mut s = ModeState::cosine([1, 0], nu, 256).unwrap();
        let t_end = nu.powf(-0.5);
        let steps = 632;
        for _ in 0..steps {
            s.step(t_end / steps as f64);
        }
        let f = hypo_functional(&s, &w);
        // independent quadrature on a finer grid: the state is band-limited
        let n = 256;
        let m = 1024;
        let eval = |theta: f64| -> (Complex64, Complex64) {
            let mut v = Complex64::default();
            let mut d = Complex64::default();
            for (i, c) in s.eta.iter().enumerate() {
                let l = if i == n / 2 { 0.0 } else { wavenumber(i, n) as f64 };
                let e = Complex64::from_polar(1.0, l * theta);
                v += c * e;
                d += Complex64::new(0.0, l) * c * e;
            }
            (v, d)
        };
        let (mut a, mut b, mut c, mut e) = (0.0, 0.0, 0.0, 0.0);
        for j in 0..m {
            let th = -PI + TWO_PI * j as f64 / m as f64;
            let (v, d) = eval(th);
            let sn = th.sin();
            a += v.norm_sqr();
            b += d.norm_sqr();
            c += (Complex64::i() * sn * v * d.conj()).re;
            e += (sn * v).norm_sqr();
        }
        let h = TWO_PI / m as f64;
        let z = s.zeta();
        assert!(s.eta[n / 2].norm() < 1e-14);
        assert!((f.l2 - a * h).abs() < 1e-10 * f.l2);
        assert!((f.gradient - w.alpha * z * nu.sqrt() * b * h).abs() < 1e-10 * f.gradient);
        assert!((f.cross + w.beta * z * z * c * h).abs() < 1e-10 * f.l2);
        assert!((f.shear - w.gamma * z.powi(3) / nu.sqrt() * e * h).abs() < 1e-10 * f.shear);
    }

    #[test]
    fn weights_satisfy_equality() {
        let w = HypoWeights::default();
        assert_eq!(w.beta * w.beta, w.alpha * w.gamma);
        assert!(HypoWeights::new(1e-3).is_err());
        let small = HypoWeights::new(1e-5).unwrap();
        assert!((small.beta.powi(2) - small.alpha * small.gamma).abs() < 1e-25);
    }

    #[test]
    fn functional_is_monotone_after_ed_time() {
        let nu = 1e-3;
        let w = HypoWeights::default();
        let mut s = ModeState::cosine([1, 0], nu, 256).unwrap();
        let t_ed = s.ed_time();
        let dt = 0.05;
        let mut prev: Option<f64> = None;
        while s.t < 4.0 * t_ed {
            s.step(dt);
            if s.t >= t_ed {
                let f = hypo_functional(&s, &w).total();
                if let Some(p) = prev {
                    assert!(f <= p * (1.0 + 1e-10), "t = {}", s.t);
                }
                prev = Some(f);
            }
        }
    }

    #[test]
    fn heat_rate_is_nu() {
        let nu = 1e-2;
        let s = InitialMode::Fourier(1).build([1, 0], nu, 32).unwrap().without_transport();
        let m = measure_ed_rate(&s, 100.0, 0.1).unwrap();
        assert!((m.rate - nu).abs() < 0.01 * nu);
    }

    #[test]
    fn jk_limits_and_bounds() {
        let mut s = ModeState::cosine([1, 1], 1e-3, 128).unwrap();
        let j0 = jk_fields(&s, JSign::Plus).unwrap();
        assert_eq!((j0.a, j0.b), (Complex64::new(1.0, 0.0), Complex64::default()));
        let d = derivative_coeffs(&s.eta);
        let mut dv: Vec<Complex64> = d.into_iter().map(|(_, v)| v).collect();
        AngularFft::new(128).inverse(&mut dv);
        for (a, b) in j0.field.values.iter().zip(&dv) {
            assert!((a - b).norm() < 1e-15);
        }
        let (a, b) = jk_coefficients(1e-3, 2f64.sqrt(), 1e6, JSign::Plus);
        assert!((a - Complex64::new(0.5, 0.0)).norm() < 1e-15);
        assert!((b.norm() - 2f64.sqrt() / 4.0).abs() < 1e-15);
        let h1 = s.h1_norm();
        let mut worst: f64 = 0.0;
        for _ in 0..400 {
            s.step(0.5);
            for sign in [JSign::Plus, JSign::Minus] {
                let j = jk_fields(&s, sign).unwrap();
                let centre = if sign == JSign::Plus { s.theta_k } else { s.theta_k + PI };
                let weighted = ComplexProfile {
                    values: j
                        .field
                        .values
                        .iter()
                        .enumerate()
                        .map(|(i, v)| cutoff(theta_point(i, 128), centre) * v)
                        .collect(),
                };
                worst = worst.max(weighted.l2_norm() / h1);
            }
        }
        assert!(worst.is_finite() && worst < 10.0, "C = {worst}");
    }

    #[test]
    fn cutoff_shape() {
        assert_eq!(cutoff(0.3, 0.3), 1.0);
        assert_eq!(cutoff(0.3 + PI, 0.3), 0.0);
        assert!(cutoff(1.0, 0.0) > 0.0 && cutoff(1.0, 0.0) < 1.0);
        assert!((cutoff(1.0, 0.0) - cutoff(-1.0, 0.0)).abs() < 1e-15);
    }

    #[test]
    fn no_mixing_without_transport() {
        let nu = 1e-4;
        let s = ModeState::cosine([1, 0], nu, 128).unwrap().without_transport();
        let c = mixing_curve(&s, 100.0, 0.05).unwrap();
        assert!(c.fit.slope.abs() < 0.01);
        assert!((c.series[0].1 - s.hm1_norm()).abs() == 0.0);
    }

    #[test]
    fn job_map_keeps_order_and_writes_csv() {
        let jobs: Vec<ModeJob> = [1e-2, 1e-3]
            .iter()
            .map(|&nu| ModeJob {
                k: [1, 0],
                nu,
                n_theta: 64,
                dt: 0.1,
                horizon: 5.0,
                sample_every: 5,
                initial: InitialMode::Cosine,
                beta: MAX_BETA,
            })
            .collect();
        let runs = run_mode_jobs(&jobs);
        assert_eq!(runs[1].as_ref().unwrap().job.nu, 1e-3);
        let dir = tempfile::tempdir().unwrap();
        let run = runs[0].as_ref().unwrap();
        let path = dir.path().join(format!("{}.csv", run.job.file_stem()));
        write_mode_csv(&path, run).unwrap();
        let text = std::fs::read_to_string(path).unwrap();
        assert!(text.starts_with("t,norm_L2,norm_Hm1,F_hypo,F_lower,F_upper,zeta\n"));
        assert_eq!(text.lines().count(), 1 + run.samples.len());
    }
}
