//! Interacting agents
//!
//! ```text
//! dxⁱ = v(t) (cos θⁱ, sin θⁱ) dt
//! dθⁱ = (κ/N) Σⱼ Φ(xʲ − xⁱ) Ψ(θʲ − θⁱ) dt + √(2ν) dBⁱ
//! ```
//!
//! integrated by Euler–Maruyama with one random stream per agent.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::homogeneous::bessel::bessel_ratios_upto;
use crate::kinetic::kernels::{AngularKernel, SpatialKernel};
use crate::spectral::{wavenumber, wrap_angle, wrap_position, SpectralField, TorusGrid, TWO_PI};
use crate::speed::SpeedProfile;

/// Largest admissible dt·κ·sup Φ·sup |Ψ|.
pub const EM_GUARD: f64 = 0.1;

/// N agents with positions on 𝕋², headings on 𝕋 and private noise streams.
#[derive(Clone, Debug)]
pub struct AgentEnsemble {
    pub x: Vec<[f64; 2]>,
    pub theta: Vec<f64>,
    /// Identity of each agent; selects its noise stream.
    pub ids: Vec<u64>,
    pub t: f64,
    pub kappa: f64,
    pub nu: f64,
    pub speed: SpeedProfile,
    pub spatial: SpatialKernel,
    pub angular: AngularKernel,
    rngs: Vec<ChaCha8Rng>,
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(id);
    r
}

/// Stream used for initial sampling; agent streams use ids 0..N.
const SAMPLING_STREAM: u64 = u64::MAX;

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (TWO_PI * u2).cos()
}

impl AgentEnsemble {
    /// Builds an ensemble from explicit states; agent `i` gets stream `i`.
    pub fn new(x: Vec<[f64; 2]>, theta: Vec<f64>, kappa: f64, nu: f64, seed: u64) -> Result<Self> {
        if x.len() != theta.len() || x.is_empty() {
            return Err(Error::InvalidParameter {
                name: "n",
                reason: format!("{} positions and {} angles", x.len(), theta.len()),
            });
        }
        if !(kappa >= 0.0 && nu >= 0.0) {
            return Err(Error::InvalidParameter { name: "kappa/nu", reason: "must be non-negative".into() });
        }
        let n = x.len() as u64;
        let ids: Vec<u64> = (0..n).collect();
        let rngs = ids.iter().map(|&i| stream(seed, i)).collect();
        Ok(Self {
            x: x.into_iter().map(|p| [wrap_position(p[0]), wrap_position(p[1])]).collect(),
            theta: theta.into_iter().map(wrap_angle).collect(),
            ids,
            t: 0.0,
            kappa,
            nu,
            speed: SpeedProfile::default(),
            spatial: SpatialKernel::Uniform,
            angular: AngularKernel::Sine,
            rngs,
        })
    }

    /// Samples N agents from the density f(x₁, x₂, θ) bounded by `f_max`:
    /// θ by inverse transform of its marginal, then x by rejection.
    pub fn sample(
        n: usize,
        density: impl Fn(f64, f64, f64) -> f64,
        f_max: f64,
        kappa: f64,
        nu: f64,
        seed: u64,
    ) -> Result<Self> {
        let (x, theta) = sample_density(n, &density, f_max, seed)?;
        Self::new(x, theta, kappa, nu, seed)
    }

    pub fn with_kernels(mut self, spatial: SpatialKernel, angular: AngularKernel) -> Self {
        self.spatial = spatial;
        self.angular = angular;
        self
    }

    pub fn with_speed(mut self, speed: SpeedProfile) -> Self {
        self.speed = speed;
        self
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    /// Reorders agents (and their streams) by `perm`: new agent i is old agent perm[i].
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut out = self.clone();
        out.x = perm.iter().map(|&i| self.x[i]).collect();
        out.theta = perm.iter().map(|&i| self.theta[i]).collect();
        out.ids = perm.iter().map(|&i| self.ids[i]).collect();
        out.rngs = perm.iter().map(|&i| self.rngs[i].clone()).collect();
        out
    }

    /// (κ/N) Σⱼ Φ(xʲ − xⁱ) Ψ(θʲ − θⁱ) for every agent.
    pub fn drift(&self) -> Vec<f64> {
        let n = self.len() as f64;
        let kappa = self.kappa;
        if self.spatial == SpatialKernel::Uniform && self.angular == AngularKernel::Sine {
            // Σ sin(θʲ − θⁱ) = cos θⁱ Σ sin θʲ − sin θⁱ Σ cos θʲ
            let (s, c) = self.theta.iter().fold((0.0, 0.0), |(s, c), t| (s + t.sin(), c + t.cos()));
            let phi = SpatialKernel::Uniform.max_value();
            return self.theta.iter().map(|t| kappa / n * phi * (t.cos() * s - t.sin() * c)).collect();
        }
        (0..self.len())
            .into_par_iter()
            .map(|i| {
                let (xi, ti) = (self.x[i], self.theta[i]);
                let sum: f64 = self
                    .x
                    .iter()
                    .zip(&self.theta)
                    .map(|(xj, tj)| self.spatial.eval([xj[0] - xi[0], xj[1] - xi[1]]) * self.angular.eval(tj - ti))
                    .sum();
                kappa / n * sum
            })
            .collect()
    }

    /// Bound on dt from the drift guard.
    pub fn step_limit(&self) -> f64 {
        let s = self.kappa * self.spatial.max_value() * self.angular.max_abs();
        if s == 0.0 {
            f64::INFINITY
        } else {
            EM_GUARD / s
        }
    }

    /// One Euler–Maruyama step; the drift sees the state at the start of the step.
    pub fn em_step(&mut self, dt: f64) -> Result<()> {
        if !(dt > 0.0) {
            return Err(Error::InvalidParameter { name: "dt", reason: format!("must be positive, got {dt}") });
        }
        let limit = self.step_limit();
        if dt > limit {
            return Err(Error::StepGuard { dt, limit });
        }
        let drift = if self.kappa == 0.0 { vec![0.0; self.len()] } else { self.drift() };
        let v = self.speed.at(self.t);
        let noise = (2.0 * self.nu * dt).sqrt();
        let with_noise = self.nu > 0.0;
        self.x
            .par_iter_mut()
            .zip(self.theta.par_iter_mut())
            .zip(self.rngs.par_iter_mut())
            .zip(drift.par_iter())
            .for_each(|(((x, th), rng), d)| {
                let (s, c) = th.sin_cos();
                x[0] = wrap_position(x[0] + v * c * dt);
                x[1] = wrap_position(x[1] + v * s * dt);
                let mut next = *th + d * dt;
                if with_noise {
                    next += noise * standard_normal(rng);
                }
                *th = wrap_angle(next);
            });
        self.t += dt;
        Ok(())
    }

    /// (1/N) Σ e^{-iθⁱ}.
    pub fn order_parameter(&self) -> Complex64 {
        let n = self.len() as f64;
        self.theta.iter().map(|t| Complex64::from_polar(1.0, -t)).sum::<Complex64>() / n
    }
}

/// Functional form of [`AgentEnsemble::em_step`].
pub fn em_step(e: &AgentEnsemble, dt: f64) -> Result<AgentEnsemble> {
    let mut out = e.clone();
    out.em_step(dt)?;
    Ok(out)
}

pub fn order_parameter(e: &AgentEnsemble) -> Complex64 {
    e.order_parameter()
}

fn sample_density(
    n: usize,
    density: &impl Fn(f64, f64, f64) -> f64,
    f_max: f64,
    seed: u64,
) -> Result<(Vec<[f64; 2]>, Vec<f64>)> {
    const NT: usize = 1024;
    const NX: usize = 32;
    let h = TWO_PI / NT as f64;
    // θ marginal on cell midpoints, piecewise constant
    let mut cdf = vec![0.0; NT + 1];
    for j in 0..NT {
        let t = -std::f64::consts::PI + (j as f64 + 0.5) * h;
        let mut m = 0.0;
        for a in 0..NX {
            for b in 0..NX {
                m += density(TWO_PI * a as f64 / NX as f64, TWO_PI * b as f64 / NX as f64, t);
            }
        }
        if m < 0.0 {
            return Err(Error::InvalidParameter { name: "density", reason: format!("negative marginal at θ = {t}") });
        }
        cdf[j + 1] = cdf[j] + m;
    }
    let total = cdf[NT];
    if !(total > 0.0) {
        return Err(Error::InvalidParameter { name: "density", reason: "zero total mass".into() });
    }
    let mut rng = stream(seed, SAMPLING_STREAM);
    let mut x = Vec::with_capacity(n);
    let mut theta = Vec::with_capacity(n);
    for _ in 0..n {
        let u = rng.random::<f64>() * total;
        let j = cdf.partition_point(|&c| c <= u).clamp(1, NT) - 1;
        let w = cdf[j + 1] - cdf[j];
        let frac = if w > 0.0 { (u - cdf[j]) / w } else { 0.5 };
        let t = -std::f64::consts::PI + (j as f64 + frac) * h;
        let mut tries = 0usize;
        let p = loop {
            let p = [rng.random::<f64>() * TWO_PI, rng.random::<f64>() * TWO_PI];
            let f = density(p[0], p[1], t);
            if f > f_max * (1.0 + 1e-12) {
                return Err(Error::InvalidParameter { name: "f_max", reason: format!("density {f} exceeds bound {f_max}") });
            }
            if rng.random::<f64>() * f_max <= f {
                break p;
            }
            tries += 1;
            if tries > 1_000_000 {
                return Err(Error::InvalidParameter { name: "density", reason: format!("rejection stalled at θ = {t}") });
            }
        };
        x.push(p);
        theta.push(wrap_angle(t));
    }
    Ok((x, theta))
}

/// Largest discrepancy between the projection-form drift
/// −κ P(vⁱ)((1/N) Σⱼ Φ(xⁱ − xʲ)(vⁱ − vʲ) ψ(θⁱ − θʲ)) and the angular drift
/// mapped to the tangent vector (−sin θⁱ, cos θⁱ).
pub fn projection_drift_check(e: &AgentEnsemble) -> f64 {
    let angular = e.drift();
    let n = e.len() as f64;
    (0..e.len())
        .into_par_iter()
        .map(|i| {
            let (s, c) = e.theta[i].sin_cos();
            let mut acc = [0.0; 2];
            for j in 0..e.len() {
                let (sj, cj) = e.theta[j].sin_cos();
                let w = e.spatial.eval([e.x[i][0] - e.x[j][0], e.x[i][1] - e.x[j][1]])
                    * e.angular.psi_factor(e.theta[i] - e.theta[j]);
                acc[0] += w * (c - cj);
                acc[1] += w * (s - sj);
            }
            let a = [acc[0] / n, acc[1] / n];
            // P(v) = I − v⊗v
            let pa = [(1.0 - c * c) * a[0] - c * s * a[1], -s * c * a[0] + (1.0 - s * s) * a[1]];
            let proj = [-e.kappa * pa[0], -e.kappa * pa[1]];
            let ang = [-s * angular[i], c * angular[i]];
            ((proj[0] - ang[0]).powi(2) + (proj[1] - ang[1]).powi(2)).sqrt()
        })
        .reduce(|| 0.0, f64::max)
}

/// Kernel density estimate with periodic von Mises product kernels of
/// bandwidth h (concentration 1/h²), normalised to mass one.
pub fn empirical_density(e: &AgentEnsemble, grid: TorusGrid, h: f64) -> Result<SpectralField> {
    if !(h > 0.0) {
        return Err(Error::InvalidParameter { name: "bandwidth", reason: format!("must be positive, got {h}") });
    }
    let c = 1.0 / (h * h);
    let axis = |n: usize| -> Vec<(i64, f64)> {
        let w = bessel_ratios_upto(c, n / 2);
        (0..n)
            .map(|m| {
                let k = wavenumber(m, n);
                // the Nyquist mode is left empty to keep the field real
                if m == n / 2 {
                    (k, 0.0)
                } else {
                    (k, w[k.unsigned_abs() as usize] / TWO_PI)
                }
            })
            .collect()
    };
    let (a1, a2, at) = (axis(grid.n_x1), axis(grid.n_x2), axis(grid.n_theta));
    let n = e.len() as f64;
    let phases = |a: &[(i64, f64)], pos: f64| -> Vec<Complex64> {
        a.iter().map(|&(k, w)| Complex64::from_polar(w, -(k as f64) * pos)).collect()
    };
    // fixed chunking keeps the summation order independent of the thread count
    let chunk = 256.max(e.len() / 64);
    let starts: Vec<usize> = (0..e.len()).step_by(chunk).collect();
    let partials: Vec<Vec<Complex64>> = starts
        .par_iter()
        .map(|&start| {
            let mut acc = vec![Complex64::default(); grid.len()];
            for i in start..(start + chunk).min(e.len()) {
                let p1 = phases(&a1, e.x[i][0]);
                let p2 = phases(&a2, e.x[i][1]);
                let pt = phases(&at, e.theta[i]);
                let mut idx = 0;
                for u in &p1 {
                    for v in &p2 {
                        let uv = u * v;
                        for w in &pt {
                            acc[idx] += uv * w;
                            idx += 1;
                        }
                    }
                }
            }
            acc
        })
        .collect();
    let mut coeffs = vec![Complex64::default(); grid.len()];
    for part in &partials {
        coeffs.iter_mut().zip(part).for_each(|(x, y)| *x += y);
    }
    let coeffs = coeffs.into_iter().map(|v| v / n).collect();
    SpectralField::from_coeffs(grid, coeffs)
}

#[derive(Serialize)]
struct DumpHeader {
    n: usize,
    time: f64,
    columns: [&'static str; 3],
    dtype: &'static str,
}

/// Writes a JSON header line followed by N×3 little-endian float64 values
/// (x₁, x₂, θ per agent).
pub fn write_agent_dump(path: &Path, e: &AgentEnsemble) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    let header = DumpHeader { n: e.len(), time: e.t, columns: ["x1", "x2", "theta"], dtype: "float64 little-endian" };
    let json = serde_json::to_string(&header).map_err(|err| Error::Format(err.to_string()))?;
    out.write_all(json.as_bytes())?;
    out.write_all(b"\n")?;
    for (p, t) in e.x.iter().zip(&e.theta) {
        for v in [p[0], p[1], *t] {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}
