//! Time stepping for ∂t f + v(t) p·∇ₓ f + κ ∂θ(f L[f]) = ν ∂θ² f.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kernels::InfluencePair;
use crate::error::{Error, Result};
use crate::spectral::{convolve_xtheta, dealias_cutoff, theta_point, wavenumber, Fft3, SpectralField, TorusGrid};
use crate::speed::SpeedProfile;

/// Physical and numerical parameters of a kinetic run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KineticParams {
    pub kappa: f64,
    pub nu: f64,
    pub speed: SpeedProfile,
    pub grid: TorusGrid,
    pub dt: f64,
    pub t_end: f64,
    pub seed: u64,
    /// γ̃ in the condition κ ≤ ν^{5/6+γ̃}.
    pub gamma_tilde: f64,
    /// C in the condition κ ≤ Cν.
    pub mixing_constant: f64,
}

impl KineticParams {
    pub fn new(kappa: f64, nu: f64, grid: TorusGrid, dt: f64, t_end: f64) -> Result<Self> {
        let p = Self {
            kappa,
            nu,
            speed: SpeedProfile::default(),
            grid,
            dt,
            t_end,
            seed: 0,
            gamma_tilde: 0.05,
            mixing_constant: 0.05,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name: &'static str, reason: String| Err(Error::InvalidParameter { name, reason });
        if !(0.0..=1.0).contains(&self.kappa) {
            return bad("kappa", format!("must lie in [0, 1], got {}", self.kappa));
        }
        if !(self.nu > 0.0 && self.nu <= 1.0) {
            return bad("nu", format!("must lie in (0, 1], got {}", self.nu));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt", format!("must be positive, got {}", self.dt));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad("t_end", format!("must be non-negative, got {}", self.t_end));
        }
        if !(self.gamma_tilde > 0.0) {
            return bad("gamma_tilde", format!("must be positive, got {}", self.gamma_tilde));
        }
        Ok(())
    }

    /// κ ≤ ν^{5/6+γ̃}.
    pub fn ed_regime(&self) -> bool {
        self.kappa <= self.nu.powf(5.0 / 6.0 + self.gamma_tilde)
    }

    /// κ ≤ C ν.
    pub fn mixing_regime(&self) -> bool {
        self.kappa <= self.mixing_constant * self.nu
    }

    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

/// L[f] = ∫∫ Φ(y−x) Ψ(η−θ) f(y,η) dy dη.
pub fn alignment_l(f: &SpectralField, kernels: &InfluencePair) -> Result<SpectralField> {
    convolve_xtheta(&kernels.spectrum(), f)
}

/// Largest dt accepted by the explicit alignment sub-step.
pub fn kinetic_step_limit(kappa: f64, n_theta: usize, max_l: f64) -> f64 {
    0.5 / (kappa * (n_theta / 2) as f64 * max_l + 1.0)
}

/// Reusable stepping context: transforms, multipliers and dealiasing mask.
#[derive(Clone, Debug)]
pub struct KineticSolver {
    params: KineticParams,
    fft: Fft3,
    multiplier: Vec<Complex64>,
    keep: Vec<bool>,
    cos_theta: Vec<f64>,
    sin_theta: Vec<f64>,
}

impl KineticSolver {
    pub fn new(params: KineticParams, kernels: &InfluencePair) -> Result<Self> {
        params.validate()?;
        params.grid.ensure_same(&kernels.grid())?;
        let g = params.grid;
        let (c1, c2, ct) = (dealias_cutoff(g.n_x1), dealias_cutoff(g.n_x2), dealias_cutoff(g.n_theta));
        let mut keep = Vec::with_capacity(g.len());
        for i1 in 0..g.n_x1 {
            let a = wavenumber(i1, g.n_x1).abs() <= c1;
            for i2 in 0..g.n_x2 {
                let b = a && wavenumber(i2, g.n_x2).abs() <= c2;
                for j in 0..g.n_theta {
                    keep.push(b && wavenumber(j, g.n_theta).abs() <= ct);
                }
            }
        }
        let n = g.n_theta;
        Ok(Self {
            fft: Fft3::new(g),
            multiplier: kernels.spectrum().multiplier(),
            keep,
            cos_theta: (0..n).map(|j| theta_point(j, n).cos()).collect(),
            sin_theta: (0..n).map(|j| theta_point(j, n).sin()).collect(),
            params,
        })
    }

    pub fn params(&self) -> &KineticParams {
        &self.params
    }

    pub fn fft(&self) -> &Fft3 {
        &self.fft
    }

    /// Exact transport over `h` with speed v, one θ-line per x-mode.
    fn transport(&self, c: &mut [Complex64], h: f64, v: f64) {
        let g = self.params.grid;
        let nt = g.n_theta;
        let ang = self.fft.angular();
        c.par_chunks_mut(nt).enumerate().for_each(|(line, eta)| {
            let k1 = wavenumber(line / g.n_x2, g.n_x1) as f64;
            let k2 = wavenumber(line % g.n_x2, g.n_x2) as f64;
            if k1 == 0.0 && k2 == 0.0 {
                return;
            }
            ang.inverse(eta);
            for (j, e) in eta.iter_mut().enumerate() {
                let phase = -v * h * (k1 * self.cos_theta[j] + k2 * self.sin_theta[j]);
                *e *= Complex64::from_polar(1.0, phase);
            }
            ang.forward(eta);
        });
    }

    /// −κ ∂θ(f L[f]) with 2/3 truncation of the factors and the product.
    /// Also returns max |L[f]| on the grid.
    pub fn alignment_rhs(&self, c: &[Complex64]) -> (Vec<Complex64>, f64) {
        let g = self.params.grid;
        let nt = g.n_theta;
        let mut ft: Vec<Complex64> = c.iter().zip(&self.keep).map(|(v, &k)| if k { *v } else { Complex64::default() }).collect();
        let mut lt: Vec<Complex64> = ft.iter().zip(&self.multiplier).map(|(a, m)| a * m).collect();
        self.fft.inverse(&mut ft);
        self.fft.inverse(&mut lt);
        let max_l = lt.par_iter().map(|v| v.re.abs()).reduce(|| 0.0, f64::max);
        let mut prod: Vec<Complex64> = ft.par_iter().zip(&lt).map(|(a, b)| Complex64::new(a.re * b.re, 0.0)).collect();
        self.fft.forward(&mut prod);
        let kappa = self.params.kappa;
        prod.par_chunks_mut(nt).enumerate().for_each(|(line, chunk)| {
            for (j, v) in chunk.iter_mut().enumerate() {
                *v = if self.keep[line * nt + j] {
                    -kappa * Complex64::new(0.0, wavenumber(j, nt) as f64) * *v
                } else {
                    Complex64::default()
                };
            }
        });
        (prod, max_l)
    }

    fn alignment_half(&self, c: &mut [Complex64], h: f64, check: bool) -> Result<()> {
        let (k1, max_l) = self.alignment_rhs(c);
        if check {
            let limit = kinetic_step_limit(self.params.kappa, self.params.grid.n_theta, max_l);
            if self.params.dt > limit {
                return Err(Error::StepGuard { dt: self.params.dt, limit });
            }
        }
        let mid: Vec<Complex64> = c.par_iter().zip(&k1).map(|(a, k)| a + h * k).collect();
        let (k2, _) = self.alignment_rhs(&mid);
        c.par_iter_mut().zip(k1.par_iter().zip(&k2)).for_each(|(a, (x, y))| *a += 0.5 * h * (x + y));
        Ok(())
    }

    fn diffusion(&self, c: &mut [Complex64], dt: f64) {
        let nt = self.params.grid.n_theta;
        let decay: Vec<f64> = (0..nt).map(|j| (-self.params.nu * (wavenumber(j, nt) as f64).powi(2) * dt).exp()).collect();
        c.par_chunks_mut(nt).for_each(|line| {
            for (v, d) in line.iter_mut().zip(&decay) {
                *v *= d;
            }
        });
    }

    /// Advances f from time t by one step of the configured dt.
    pub fn step(&self, f: &mut SpectralField, t: f64) -> Result<()> {
        self.params.grid.ensure_same(&f.grid())?;
        let dt = self.params.dt;
        let speed = self.params.speed;
        let align = self.params.kappa != 0.0;
        let c = f.coeffs_mut();
        self.transport(c, 0.5 * dt, speed.at(t + 0.25 * dt));
        if align {
            self.alignment_half(c, 0.5 * dt, true)?;
        }
        self.diffusion(c, dt);
        if align {
            self.alignment_half(c, 0.5 * dt, false)?;
        }
        self.transport(c, 0.5 * dt, speed.at(t + 0.75 * dt));
        if !f.is_finite() {
            let bad = f.coeffs().iter().filter(|v| !(v.re.is_finite() && v.im.is_finite())).count();
            return Err(Error::NonFinite {
                t: t + dt,
                detail: format!(
                    "{bad} non-finite coefficients on {} (κ = {}, ν = {}, dt = {dt})",
                    f.grid().describe(),
                    self.params.kappa,
                    self.params.nu
                ),
            });
        }
        Ok(())
    }
}

/// One step without a cached solver. Prefer [`KineticSolver`] in loops.
pub fn step_kinetic(f: &SpectralField, params: &KineticParams, kernels: &InfluencePair, t: f64) -> Result<SpectralField> {
    let solver = KineticSolver::new(params.clone(), kernels)?;
    let mut out = f.clone();
    solver.step(&mut out, t)?;
    Ok(out)
}
