//! Kinetic runs with sampled diagnostics and optional snapshots.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::kernels::{AngularKernel, InfluencePair, SpatialKernel};
use super::solver::{KineticParams, KineticSolver};
use crate::error::{Error, Result};
use crate::spectral::{write_snapshot_file, NormKind, SpectralField, TorusGrid, TWO_PI};

/// Everything needed to reproduce a kinetic run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KineticConfig {
    pub params: KineticParams,
    pub spatial: SpatialKernel,
    pub angular: AngularKernel,
    /// Amplitude of the perturbation in the default initial datum.
    pub epsilon: f64,
    /// Diagnostics every this many steps (0 means only first and last).
    pub sample_every: usize,
    /// Snapshot every this many steps (0 disables snapshots).
    pub snapshot_every: usize,
}

impl KineticConfig {
    pub fn new(params: KineticParams) -> Self {
        Self {
            params,
            spatial: SpatialKernel::PeriodicBump { sigma: 0.5 },
            angular: AngularKernel::Sine,
            epsilon: 0.5 / TWO_PI.powi(3),
            sample_every: 10,
            snapshot_every: 0,
        }
    }

    pub fn kernels(&self) -> InfluencePair {
        InfluencePair::new(self.params.grid, self.spatial, self.angular)
    }
}

/// 1/(2π)³ + ε · (a fixed mixture of low x-θ cosines with weights summing to one).
pub fn default_initial(grid: TorusGrid, epsilon: f64) -> SpectralField {
    let base = 1.0 / TWO_PI.powi(3);
    SpectralField::from_fn(grid, |x1, x2, t| {
        base + epsilon
            * (0.4 * (x1 - t).cos() + 0.3 * (x2 + 2.0 * t).cos() + 0.2 * (x1 + x2).cos() * t.cos() + 0.1 * t.cos())
    })
}

/// Diagnostics recorded at one time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KineticSample {
    pub t: f64,
    pub remainder_l2: f64,
    pub remainder_hm1: f64,
    pub average_l2: f64,
    pub min_f: f64,
    pub mass: f64,
    /// m = (2π)² ∫ e^{-iθ} ⟨f⟩ dθ.
    pub order: Complex64,
}

pub const KINETIC_COLUMNS: [&str; 9] =
    ["t", "norm_rem_L2", "norm_rem_Hm1", "norm_avg_L2", "min_f", "mass", "m_re", "m_im", "m_abs"];

impl KineticSample {
    pub fn row(&self) -> [f64; 9] {
        [
            self.t,
            self.remainder_l2,
            self.remainder_hm1,
            self.average_l2,
            self.min_f,
            self.mass,
            self.order.re,
            self.order.im,
            self.order.norm(),
        ]
    }
}

/// Computes the diagnostics of f at time t.
pub fn diagnostics(f: &SpectralField, t: f64, solver: Option<&KineticSolver>) -> Result<KineticSample> {
    let rem = f.remainder();
    let values = match solver {
        Some(s) => f.to_values_with(s.fft()),
        None => f.to_values(),
    };
    let min_f = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max_f = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if min_f < -1e-8 * max_f.abs() {
        log::warn!("negative density at t = {t}: min f = {min_f:e}, max f = {max_f:e}");
    }
    let avg: f64 = f.mode(0, 0).iter().map(|c| c.norm_sqr()).sum();
    Ok(KineticSample {
        t,
        remainder_l2: rem.norm(NormKind::L2)?,
        remainder_hm1: rem.norm(NormKind::HMinus1NonZero)?,
        average_l2: (TWO_PI.powi(3) * avg).sqrt(),
        min_f,
        mass: f.mass(),
        order: TWO_PI * TWO_PI * f.x_average().first_moment(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct KineticRun {
    pub samples: Vec<KineticSample>,
    pub snapshots: Vec<PathBuf>,
    pub final_state: SpectralField,
}

/// Evolves `f0` (or the default datum) to `t_end`, sampling diagnostics and
/// writing snapshots into `snapshot_dir` when enabled.
pub fn run_experiment(config: &KineticConfig, f0: Option<SpectralField>, snapshot_dir: Option<&Path>) -> Result<KineticRun> {
    let kernels = config.kernels();
    let solver = KineticSolver::new(config.params.clone(), &kernels)?;
    let mut f = match f0 {
        Some(f) => {
            config.params.grid.ensure_same(&f.grid())?;
            f
        }
        None => default_initial(config.params.grid, config.epsilon),
    };
    if config.snapshot_every > 0 && snapshot_dir.is_none() {
        return Err(Error::InvalidParameter { name: "snapshot_every", reason: "snapshots need an output directory".into() });
    }
    let p = &config.params;
    let mut parameters = BTreeMap::new();
    parameters.insert("kappa".to_string(), p.kappa);
    parameters.insert("nu".to_string(), p.nu);
    parameters.insert("dt".to_string(), p.dt);

    let n_steps = p.n_steps();
    let mut samples = vec![diagnostics(&f, 0.0, Some(&solver))?];
    let mut snapshots = Vec::new();
    let snap = |f: &SpectralField, step: usize, t: f64, snapshots: &mut Vec<PathBuf>| -> Result<()> {
        if let Some(dir) = snapshot_dir {
            if config.snapshot_every > 0 && step.is_multiple_of(config.snapshot_every) {
                let path = dir.join(format!("snapshot_{step:08}.bin"));
                write_snapshot_file(&path, f, t, parameters.clone())?;
                snapshots.push(path);
            }
        }
        Ok(())
    };
    snap(&f, 0, 0.0, &mut snapshots)?;
    for step in 1..=n_steps {
        let t0 = (step - 1) as f64 * p.dt;
        solver.step(&mut f, t0)?;
        let t = step as f64 * p.dt;
        if (config.sample_every > 0 && step % config.sample_every == 0) || step == n_steps {
            samples.push(diagnostics(&f, t, Some(&solver))?);
        }
        snap(&f, step, t, &mut snapshots)?;
    }
    Ok(KineticRun { samples, snapshots, final_state: f })
}
