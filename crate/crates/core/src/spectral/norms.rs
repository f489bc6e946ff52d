use super::{wavenumber, SpectralField, TWO_PI};
use crate::error::{Error, Result};

/// Norms used by the diagnostics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NormKind {
    /// Trapezoidal quadrature of |f| on the collocation grid.
    L1,
    /// Parseval: ‖f‖² = (2π)³ Σ |f̂|².
    L2,
    /// Weights (1 + |k|² + ℓ²)^s.
    Hs(f64),
    /// Weights 1/(|k|² + ℓ²) over k ≠ 0 only.
    HMinus1NonZero,
}

/// Relative size of the k = 0 slice above which `HMinus1NonZero` refuses
/// the field.
const AVERAGE_CONTENT_TOL: f64 = 1e-12;

impl SpectralField {
    pub fn norm(&self, kind: NormKind) -> Result<f64> {
        let g = self.grid();
        let vol = TWO_PI.powi(3);
        match kind {
            NormKind::L1 => {
                let vals = self.to_values();
                Ok(g.cell_volume() * vals.iter().map(|v| v.abs()).sum::<f64>())
            }
            NormKind::L2 => Ok((vol * self.coeffs().iter().map(|c| c.norm_sqr()).sum::<f64>()).sqrt()),
            NormKind::Hs(s) => Ok((vol * self.weighted_sum(|k2, l2| (1.0 + k2 + l2).powf(s), true)).sqrt()),
            NormKind::HMinus1NonZero => {
                let avg: f64 = self.mode(0, 0).iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
                let total: f64 = self.coeffs().iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
                if avg > AVERAGE_CONTENT_TOL * total.max(f64::MIN_POSITIVE) {
                    return Err(Error::NonZeroAverage { content: avg });
                }
                Ok((vol * self.weighted_sum(|k2, l2| 1.0 / (k2 + l2), false)).sqrt())
            }
        }
    }

    /// Σ w(|k|², ℓ²) |f̂|², optionally including the k = 0 slice.
    fn weighted_sum(&self, w: impl Fn(f64, f64) -> f64, with_average: bool) -> f64 {
        let g = self.grid();
        let c = self.coeffs();
        let mut s = 0.0;
        for i1 in 0..g.n_x1 {
            let k1 = wavenumber(i1, g.n_x1) as f64;
            for i2 in 0..g.n_x2 {
                if !with_average && i1 == 0 && i2 == 0 {
                    continue;
                }
                let k2 = wavenumber(i2, g.n_x2) as f64;
                let ksq = k1 * k1 + k2 * k2;
                let line = g.line(i1, i2);
                for j in 0..g.n_theta {
                    let l = wavenumber(j, g.n_theta) as f64;
                    s += w(ksq, l * l) * c[line + j].norm_sqr();
                }
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::TorusGrid;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_field_l2() {
        let grid = TorusGrid::new(8, 8, 8).unwrap();
        let f = SpectralField::from_fn(grid, |_, _, _| -2.5);
        let expected = 2.5 * TWO_PI.powf(1.5);
        assert!((f.norm(NormKind::L2).unwrap() - expected).abs() < 1e-12 * expected);
        assert!((f.norm(NormKind::L1).unwrap() - 2.5 * TWO_PI.powi(3)).abs() < 1e-10);
    }

    #[test]
    fn single_unit_mode_hminus1_equals_l2() {
        let grid = TorusGrid::new(8, 8, 8).unwrap();
        let f = SpectralField::from_fn(grid, |x1, _, _| x1.cos());
        let a = f.norm(NormKind::HMinus1NonZero).unwrap();
        let b = f.norm(NormKind::L2).unwrap();
        assert!((a - b).abs() < 1e-13 * b);
    }

    #[test]
    fn hminus1_rejects_average_content() {
        let grid = TorusGrid::new(8, 8, 8).unwrap();
        let f = SpectralField::from_fn(grid, |x1, _, t| x1.cos() + t.cos());
        assert!(matches!(f.norm(NormKind::HMinus1NonZero), Err(Error::NonZeroAverage { .. })));
        assert!(f.remainder().norm(NormKind::HMinus1NonZero).is_ok());
    }

    #[test]
    fn parseval_matches_quadrature() {
        // band-limited: random coefficients on |k|,|ℓ| < n/2, conjugate-symmetrised
        let grid = TorusGrid::new(8, 8, 12).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut f = SpectralField::zeros(grid);
        for k1 in -3i64..=3 {
            for k2 in -3i64..=3 {
                for l in -5i64..=5 {
                    let c = num_complex::Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                    f.set_coeff(k1, k2, l, c);
                }
            }
        }
        let mut sym = f.clone();
        for k1 in -3i64..=3 {
            for k2 in -3i64..=3 {
                for l in -5i64..=5 {
                    let v = 0.5 * (f.coeff(k1, k2, l) + f.coeff(-k1, -k2, -l).conj());
                    sym.set_coeff(k1, k2, l, v);
                }
            }
        }
        let vals = sym.to_values();
        let quad = (grid.cell_volume() * vals.iter().map(|v| v * v).sum::<f64>()).sqrt();
        let pars = sym.norm(NormKind::L2).unwrap();
        assert!((quad - pars).abs() < 1e-11 * pars);
    }

    #[test]
    fn sobolev_weights_order() {
        let grid = TorusGrid::new(8, 8, 8).unwrap();
        let f = SpectralField::from_fn(grid, |x1, x2, t| (x1 + 2.0 * x2).sin() * t.cos());
        let l2 = f.norm(NormKind::L2).unwrap();
        let h1 = f.norm(NormKind::Hs(1.0)).unwrap();
        let h0 = f.norm(NormKind::Hs(0.0)).unwrap();
        assert!((h0 - l2).abs() < 1e-13 * l2);
        assert!((h1 - l2 * 7f64.sqrt()).abs() < 1e-12 * h1);
    }
}
