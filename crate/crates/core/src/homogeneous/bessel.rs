//! Modified Bessel functions of the first kind, I₀ and I₁, and their ratio.

use std::f64::consts::PI;

/// Below this argument the ratio is taken from the power series.
const RATIO_SERIES_LIMIT: f64 = 15.0;
/// Below this argument I₀, I₁ are summed from their power series.
const SERIES_LIMIT: f64 = 30.0;

/// e^{-z} I₀(z), z ≥ 0.
pub fn i0e(z: f64) -> f64 {
    if z < SERIES_LIMIT {
        series(z, 0) * (-z).exp()
    } else {
        asymptotic(z, 0)
    }
}

/// e^{-z} I₁(z), z ≥ 0.
pub fn i1e(z: f64) -> f64 {
    if z < SERIES_LIMIT {
        series(z, 1) * (-z).exp()
    } else {
        asymptotic(z, 1)
    }
}

pub fn i0(z: f64) -> f64 {
    i0e(z) * z.exp()
}

/// I₁(z)/I₀(z), z ≥ 0. Increasing from 0 towards 1 with slope 1/2 at the
/// origin.
pub fn bessel_ratio(z: f64) -> f64 {
    if z <= 0.0 {
        return 0.0;
    }
    if z <= RATIO_SERIES_LIMIT {
        series(z, 1) / series(z, 0)
    } else {
        ratio_continued_fraction(z)
    }
}

/// I_m(z)/I₀(z) for m = 0..=m_max, by backward recurrence on the ratios
/// I_ν/I_{ν−1}.
pub fn bessel_ratios_upto(z: f64, m_max: usize) -> Vec<f64> {
    let mut out = vec![1.0; m_max + 1];
    if m_max == 0 {
        return out;
    }
    if z <= 0.0 {
        out.iter_mut().skip(1).for_each(|v| *v = 0.0);
        return out;
    }
    let start = m_max + z.ceil() as usize + 20 * (z.sqrt().ceil() as usize) + 60;
    let mut rho = vec![0.0; m_max + 2];
    let mut next = 0.0;
    for nu in (1..=start).rev() {
        let r = 1.0 / (2.0 * nu as f64 / z + next);
        if nu <= m_max {
            rho[nu] = r;
        }
        next = r;
    }
    for m in 1..=m_max {
        out[m] = out[m - 1] * rho[m];
    }
    out
}

/// Σ (z/2)^{2k+ν} / (k! (k+ν)!) for ν ∈ {0, 1}.
fn series(z: f64, nu: u32) -> f64 {
    let q = 0.25 * z * z;
    let mut term = if nu == 0 { 1.0 } else { 0.5 * z };
    let mut sum = term;
    for k in 1..1000 {
        term *= q / (k as f64 * (k + nu as usize) as f64);
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum
}

/// Large-argument expansion of e^{-z} I_ν(z), truncated at its smallest term.
fn asymptotic(z: f64, nu: u32) -> f64 {
    let mu = 4.0 * (nu * nu) as f64;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..200 {
        let odd = (2 * k - 1) as f64;
        term *= -(mu - odd * odd) / (8.0 * k as f64 * z);
        if term.abs() >= last {
            break;
        }
        sum += term;
        last = term.abs();
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum / (2.0 * PI * z).sqrt()
}

/// I₁/I₀ = 1/(2/z + 1/(4/z + 1/(6/z + …))), modified Lentz.
fn ratio_continued_fraction(z: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut f = TINY;
    let mut c = f;
    let mut d = 0.0;
    for n in 1..100_000 {
        let b = 2.0 * n as f64 / z;
        d += b;
        if d == 0.0 {
            d = TINY;
        }
        c = b + 1.0 / c;
        if c == 0.0 {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    f
}
