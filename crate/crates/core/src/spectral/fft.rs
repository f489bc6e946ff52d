use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use super::TorusGrid;

/// Normalised transform along θ on `[-π, π)`.
///
/// `forward` maps collocation values to coefficients ĝ(ℓ) = (1/2π)∫ g e^{-iℓθ},
/// `inverse` maps them back. Cloning shares the plans.
#[derive(Clone)]
pub struct AngularFft {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for AngularFft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AngularFft").field("n", &self.n).finish()
    }
}

impl AngularFft {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Values → coefficients, in place. `buf.len()` must be a multiple of `n`;
    /// every line is transformed.
    pub fn forward(&self, buf: &mut [Complex64]) {
        self.fwd.process(buf);
        let scale = 1.0 / self.n as f64;
        for line in buf.chunks_exact_mut(self.n) {
            // the grid starts at -π, so coefficient ℓ picks up e^{iℓπ} = (-1)^ℓ
            for (m, c) in line.iter_mut().enumerate() {
                *c *= if m % 2 == 0 { scale } else { -scale };
            }
        }
    }

    /// Coefficients → values, in place.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        for line in buf.chunks_exact_mut(self.n) {
            for c in line.iter_mut().skip(1).step_by(2) {
                *c = -*c;
            }
        }
        self.inv.process(buf);
    }

    pub fn forward_real(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward(&mut buf);
        buf
    }

    pub fn inverse_real(&self, coeffs: &[Complex64]) -> Vec<f64> {
        let mut buf = coeffs.to_vec();
        self.inverse(&mut buf);
        buf.into_iter().map(|c| c.re).collect()
    }
}

/// Three-dimensional transform for fields on a [`TorusGrid`].
#[derive(Clone)]
pub struct Fft3 {
    grid: TorusGrid,
    x1: (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>),
    x2: (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>),
    theta: AngularFft,
}

impl std::fmt::Debug for Fft3 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft3").field("grid", &self.grid).finish()
    }
}

impl Fft3 {
    pub fn new(grid: TorusGrid) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            grid,
            x1: (planner.plan_fft_forward(grid.n_x1), planner.plan_fft_inverse(grid.n_x1)),
            x2: (planner.plan_fft_forward(grid.n_x2), planner.plan_fft_inverse(grid.n_x2)),
            theta: AngularFft::new(grid.n_theta),
        }
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn angular(&self) -> &AngularFft {
        &self.theta
    }

    /// Collocation values → coefficients, in place.
    pub fn forward(&self, data: &mut [Complex64]) {
        let nt = self.grid.n_theta;
        data.par_chunks_mut(nt * 64).for_each(|c| self.theta.forward(c));
        self.x2_pass(data, true);
        self.x1_pass(data, true);
    }

    /// Coefficients → collocation values, in place.
    pub fn inverse(&self, data: &mut [Complex64]) {
        let nt = self.grid.n_theta;
        self.x1_pass(data, false);
        self.x2_pass(data, false);
        data.par_chunks_mut(nt * 64).for_each(|c| self.theta.inverse(c));
    }

    fn x2_pass(&self, data: &mut [Complex64], forward: bool) {
        let (n2, nt) = (self.grid.n_x2, self.grid.n_theta);
        let plan = if forward { &self.x2.0 } else { &self.x2.1 };
        let scale = if forward { 1.0 / n2 as f64 } else { 1.0 };
        data.par_chunks_mut(n2 * nt).for_each(|slab| {
            let mut t = transpose(slab, n2, nt);
            plan.process(&mut t);
            untranspose(&t, slab, n2, nt, scale);
        });
    }

    fn x1_pass(&self, data: &mut [Complex64], forward: bool) {
        let n1 = self.grid.n_x1;
        let rest = self.grid.n_x2 * self.grid.n_theta;
        let plan = if forward { &self.x1.0 } else { &self.x1.1 };
        let scale = if forward { 1.0 / n1 as f64 } else { 1.0 };
        let mut t = transpose(data, n1, rest);
        t.par_chunks_mut(n1 * 64).for_each(|c| plan.process(c));
        untranspose(&t, data, n1, rest, scale);
    }
}

/// `[rows][cols]` → `[cols][rows]`.
fn transpose(src: &[Complex64], rows: usize, cols: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::default(); rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = src[r * cols + c];
        }
    }
    out
}

fn untranspose(t: &[Complex64], dst: &mut [Complex64], rows: usize, cols: usize, scale: f64) {
    for r in 0..rows {
        for c in 0..cols {
            dst[r * cols + c] = t[c * rows + r] * scale;
        }
    }
}
