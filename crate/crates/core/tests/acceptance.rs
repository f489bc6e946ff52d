//! End-to-end acceptance run: one line per criterion, non-zero exit if any
//! criterion fails. Every tolerance is a constant in this file.

use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vicsek_core::agents::{projection_drift_check, AgentEnsemble};
use vicsek_core::fit::{fit_rate, power_law_exponent, FitMode};
use vicsek_core::harness::{compare_order_parameters, phase_point};
use vicsek_core::homogeneous::{
    cosine_profile, frouvelle_liu_rhs, linear_stability, solve_compatibility, stationary_residual, von_mises_state,
    HomogeneousIntegrator, HomogeneousState, PositivityPolicy,
};
use vicsek_core::kinetic::{
    alignment_l, default_initial, run_experiment, AngularInfluence, AngularKernel, InfluencePair, KineticConfig,
    KineticParams, KineticSolver, SpatialKernel,
};
use vicsek_core::linear::{
    comparison_bounds, hypo_functional, measure_ed_rate, mixing_curve, HypoWeights, InitialMode, ModeState, MAX_BETA,
    SANDWICH_TOL,
};
use vicsek_core::spectral::{wavenumber, AngularProfile, SpectralField, TorusGrid, TWO_PI};

// 1
const ED_NUS: [f64; 4] = [1e-3, 3e-4, 1e-4, 3e-5];
const ED_N_THETA: usize = 512;
const ED_DT: f64 = 0.05;
const ED_HORIZON_FACTOR: f64 = 10.0;
const ED_SLOPE: f64 = 0.5;
const ED_SLOPE_TOL: f64 = 0.1;
// 2
const K_RATIO_NU: f64 = 1e-4;
const K_RATIO_REL_TOL: f64 = 0.15;
// 3
const SANDWICH_RUNS: usize = 50;
const SANDWICH_N_THETA: usize = 128;
// 4
const MIX_NU: f64 = 1e-4;
const MIX_SLOPE: f64 = -0.5;
const MIX_SLOPE_TOL: f64 = 0.15;
// 5
const NL_NU: f64 = 1e-2;
const NL_GRID: [usize; 3] = [32, 32, 128];
const NL_DT: f64 = 0.05;
const NL_T_END: f64 = 80.0;
const NL_RATE_FACTOR: f64 = 0.1;
const NL_PREFACTOR_MAX: f64 = 10.0;
// 6
const MASS_STEPS: usize = 10_000;
const MASS_TOL: f64 = 1e-12;
// 7
const FE_DT: f64 = 1e-4;
const FE_STEPS: usize = 400;
const FE_REL_TOL: f64 = 0.01;
// 8
const PD_NU: f64 = 0.1;
const PD_SUB_M_MAX: f64 = 1e-3;
const PD_SUPER_TOL: f64 = 1e-3;
// 9
const RESIDUAL_TOL: f64 = 1e-8;
// 10
const QUAD_TOL: f64 = 1e-10;
const FL_TOL: f64 = 1e-10;
const PROJ_TOL: f64 = 1e-12;
// 11
const PASSIVE_TOL: f64 = 1e-10;
const HOMOG_TOL: f64 = 1e-8;
// 12
const SDE_N: usize = 10_000;
const SDE_RATIO: f64 = 4.0;
const SDE_BAND: f64 = 0.05;
const SDE_CHECKPOINTS: usize = 10;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn judge(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn ed_rate(k: [i64; 2], nu: f64) -> f64 {
    let s = ModeState::cosine(k, nu, ED_N_THETA).unwrap();
    let kn = ((k[0] * k[0] + k[1] * k[1]) as f64).sqrt();
    let horizon = ED_HORIZON_FACTOR / (nu * kn).sqrt();
    measure_ed_rate(&s, horizon, ED_DT).unwrap().rate
}

fn c01_linear_ed_scaling() -> Outcome {
    let pts: Vec<(f64, f64)> = ED_NUS.iter().map(|&nu| (nu, ed_rate([1, 0], nu))).collect();
    let fit = power_law_exponent(&pts).map_err(|e| e.to_string())?;
    judge(
        (fit.slope - ED_SLOPE).abs() <= ED_SLOPE_TOL,
        format!("log-log slope of λ(ν) = {:.4} (target {ED_SLOPE} ± {ED_SLOPE_TOL})", fit.slope),
    )
}

fn c02_wavenumber_scaling() -> Outcome {
    let ratio = ed_rate([2, 0], K_RATIO_NU) / ed_rate([1, 0], K_RATIO_NU);
    let rel = (ratio / 2f64.sqrt() - 1.0).abs();
    judge(rel <= K_RATIO_REL_TOL, format!("λ(2,0)/λ(1,0) = {ratio:.4}, relative gap to √2 {rel:.3} (tol {K_RATIO_REL_TOL})"))
}

fn c03_sandwich() -> Outcome {
    let w = HypoWeights::new(MAX_BETA).map_err(|e| e.to_string())?;
    let ks = [[1, 0], [1, 1], [2, 1], [0, 3], [3, -2]];
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut checked, mut violations) = (0usize, 0usize);
    for run in 0..SANDWICH_RUNS {
        let k = ks[run % ks.len()];
        let nu = 10f64.powf(rng.random_range(-4.0..-2.0));
        let mut s = InitialMode::Random { seed: run as u64 }.build(k, nu, SANDWICH_N_THETA).unwrap();
        let horizon = 3.0 * s.ed_time();
        let steps = (horizon / ED_DT).round() as usize;
        for i in 0..=steps {
            if i > 0 {
                s.step(ED_DT);
            }
            if i % 5 == 0 {
                let b = comparison_bounds(&hypo_functional(&s, &w));
                checked += 1;
                if b.margin() < -SANDWICH_TOL * b.value.abs() {
                    violations += 1;
                }
            }
        }
    }
    judge(violations == 0, format!("{violations} violations in {checked} samples over {SANDWICH_RUNS} runs"))
}

fn c04_mixing() -> Outcome {
    let s = ModeState::cosine([1, 0], MIX_NU, ED_N_THETA).unwrap();
    let curve = mixing_curve(&s, MIX_NU.sqrt().recip(), ED_DT).map_err(|e| e.to_string())?;
    judge(
        (curve.fit.slope - MIX_SLOPE).abs() <= MIX_SLOPE_TOL,
        format!("Ḣ⁻¹ log-log slope on [1, ν^-1/2] = {:.4} (target {MIX_SLOPE} ± {MIX_SLOPE_TOL})", curve.fit.slope),
    )
}

fn c05_nonlinear_ed() -> Outcome {
    let kappa = NL_NU.powf(0.9);
    let grid = TorusGrid::new(NL_GRID[0], NL_GRID[1], NL_GRID[2]).unwrap();
    let params = KineticParams::new(kappa, NL_NU, grid, NL_DT, NL_T_END).map_err(|e| e.to_string())?;
    let mut cfg = KineticConfig::new(params);
    cfg.sample_every = 10;
    let run = run_experiment(&cfg, None, None).map_err(|e| e.to_string())?;
    let series: Vec<(f64, f64)> = run.samples.iter().map(|s| (s.t, s.remainder_l2)).collect();
    let fit = fit_rate(&series, (NL_NU.sqrt().recip(), NL_T_END), FitMode::Exponential).map_err(|e| e.to_string())?;
    let rate = -fit.slope;
    let floor = NL_RATE_FACTOR * NL_NU.sqrt();
    let avg0 = run.samples[0].average_l2;
    let envelope = (1.0 + avg0) * (1.0 + (kappa / NL_NU).sqrt());
    let prefactor = run.samples.iter().map(|s| s.average_l2).fold(0.0, f64::max) / envelope;
    judge(
        rate >= floor && prefactor <= NL_PREFACTOR_MAX,
        format!("remainder rate {rate:.4e} (floor {floor:.1e}), ⟨f⟩ prefactor {prefactor:.4} (max {NL_PREFACTOR_MAX})"),
    )
}

fn c06_mass() -> Outcome {
    let dt = 0.01;
    let grid = TorusGrid::new(8, 8, 32).unwrap();
    let params = KineticParams::new(0.5, 0.05, grid, dt, MASS_STEPS as f64 * dt).map_err(|e| e.to_string())?;
    let cfg = KineticConfig::new(params);
    let solver = KineticSolver::new(cfg.params.clone(), &cfg.kernels()).map_err(|e| e.to_string())?;
    let mut f = default_initial(grid, 0.9 / TWO_PI.powi(3));
    let m0 = f.mass();
    let mut drift = 0.0f64;
    for i in 0..MASS_STEPS {
        solver.step(&mut f, i as f64 * dt).map_err(|e| e.to_string())?;
        drift = drift.max((f.mass() - m0).abs() / m0);
    }
    judge(drift < MASS_TOL, format!("max relative mass drift over {MASS_STEPS} steps {drift:.2e} (tol {MASS_TOL:e})"))
}

fn c07_free_energy() -> Outcome {
    let mut worst_rise = f64::NEG_INFINITY;
    let mut worst_rel = 0.0f64;
    for ratio in [1.0, 4.0] {
        let nu = 0.1;
        let mut s = HomogeneousState::with_sine(cosine_profile(64, 0.6), ratio * nu, nu).unwrap();
        let integ = HomogeneousIntegrator::new(&s.kernel);
        let mut f = vec![s.free_energy(PositivityPolicy::Reject)];
        let mut d = vec![s.fisher_information(PositivityPolicy::Reject).unwrap()];
        for _ in 0..FE_STEPS {
            integ.step(&mut s, FE_DT).map_err(|e| e.to_string())?;
            f.push(s.free_energy(PositivityPolicy::Reject));
            d.push(s.fisher_information(PositivityPolicy::Reject).unwrap());
        }
        for w in f.windows(2) {
            worst_rise = worst_rise.max(w[1] - w[0]);
        }
        for i in 1..FE_STEPS {
            let dfdt = (f[i + 1] - f[i - 1]) / (2.0 * FE_DT);
            worst_rel = worst_rel.max((dfdt + d[i]).abs() / d[i]);
        }
    }
    judge(
        worst_rise <= 0.0 && worst_rel <= FE_REL_TOL,
        format!("largest step change of F {worst_rise:.2e} (must be ≤ 0), max |dF/dt + D|/D = {worst_rel:.2e} (tol {FE_REL_TOL})"),
    )
}

fn c08_phase_transition() -> Outcome {
    let sub = phase_point(1.5, PD_NU, 64, 0.01, 300.0, 0.2).map_err(|e| e.to_string())?;
    let sup = phase_point(4.0, PD_NU, 64, 0.01, 300.0, 0.2).map_err(|e| e.to_string())?;
    let r2 = solve_compatibility(4.0).map_err(|e| e.to_string())?.r2.unwrap_or(0.0);
    let kernel = AngularInfluence::from_kernel(64, AngularKernel::Sine);
    let verdict = |ratio: f64| linear_stability(&kernel, ratio * PD_NU, PD_NU, 1).unwrap().stable;
    let flips = verdict(2.0 - 1e-9) && !verdict(2.0 + 1e-9);
    let roots_flip =
        solve_compatibility(2.0).unwrap().r2.is_none() && solve_compatibility(2.0 + 1e-6).unwrap().r2.is_some();
    let gap = (sup.final_m - r2).abs();
    judge(
        sub.final_m < PD_SUB_M_MAX && gap <= PD_SUPER_TOL && flips && roots_flip,
        format!(
            "|m| at ratio 1.5: {:.2e} (< {PD_SUB_M_MAX:e}); ||m| − r₂| at ratio 4: {gap:.2e} (tol {PD_SUPER_TOL:e}); flips at 2: {}",
            sub.final_m,
            flips && roots_flip
        ),
    )
}

fn c09_stationary_residual() -> Outcome {
    let r2 = solve_compatibility(4.0).map_err(|e| e.to_string())?.r2.unwrap();
    let g = von_mises_state(256, 4.0, Complex64::from_polar(r2, 0.0));
    let kernel = AngularInfluence::from_kernel(256, AngularKernel::Sine);
    let res = stationary_residual(&g, &kernel, 0.4, 0.1);
    judge(res < RESIDUAL_TOL, format!("‖RHS(g_s)‖ = {res:.2e} (tol {RESIDUAL_TOL:e})"))
}

fn quadrature_gap() -> f64 {
    let n = 16;
    let g = TorusGrid::new(n, n, n).unwrap();
    let kernels =
        InfluencePair::new(g, SpatialKernel::PeriodicBump { sigma: 0.7 }, AngularKernel::RaisedCosine { power: 2 });
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let vals: Vec<f64> = (0..g.len()).map(|_| rng.random_range(0.0..1.0)).collect();
    let f = SpectralField::from_values(g, &vals).unwrap();
    let l = alignment_l(&f, &kernels).unwrap().to_values();
    let psi = kernels.angular().psi.values();
    let phi = kernels.phi();
    let scale = l.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut worst = 0.0f64;
    for a1 in 0..n {
        for a2 in 0..n {
            for b in 0..n {
                let mut s = 0.0;
                for c1 in 0..n {
                    for c2 in 0..n {
                        let p = phi[((c1 + n - a1) % n) * n + (c2 + n - a2) % n];
                        for d in 0..n {
                            s += p * psi[(d + n - b + n / 2) % n] * vals[g.index(c1, c2, d)];
                        }
                    }
                }
                worst = worst.max((s * g.cell_volume() - l[g.index(a1, a2, b)]).abs());
            }
        }
    }
    worst / scale
}

fn c10_oracles() -> Outcome {
    let quad = quadrature_gap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut fl = 0.0f64;
    for _ in 0..100 {
        let c: Vec<(f64, f64)> = (1..=6).map(|_| (rng.random_range(-0.1..0.1), rng.random_range(-0.1..0.1))).collect();
        let g = AngularProfile::from_fn(128, |t| {
            let wave: f64 = c
                .iter()
                .enumerate()
                .map(|(m, &(a, b))| a * ((m + 1) as f64 * t).cos() + b * ((m + 1) as f64 * t).sin())
                .sum();
            (1.0 + wave) / TWO_PI
        });
        fl = fl.max(frouvelle_liu_rhs(&g).discrepancy());
    }
    let mut proj = 0.0f64;
    for i in 0..100u64 {
        let n = rng.random_range(2..60);
        let x = (0..n).map(|_| [rng.random_range(0.0..TWO_PI), rng.random_range(0.0..TWO_PI)]).collect();
        let th = (0..n).map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI)).collect();
        let spatial = if i % 2 == 0 {
            SpatialKernel::Uniform
        } else {
            SpatialKernel::PeriodicBump { sigma: rng.random_range(0.3..1.5) }
        };
        let angular = if i % 3 == 0 { AngularKernel::Sine } else { AngularKernel::RaisedCosine { power: (i % 4) as u32 } };
        let e = AgentEnsemble::new(x, th, rng.random_range(0.0..2.0), 0.1, i).unwrap().with_kernels(spatial, angular);
        proj = proj.max(projection_drift_check(&e));
    }
    judge(
        quad < QUAD_TOL && fl < FL_TOL && proj < PROJ_TOL,
        format!(
            "quadrature {quad:.1e} (tol {QUAD_TOL:e}), Frouvelle-Liu {fl:.1e} (tol {FL_TOL:e}), projection {proj:.1e} (tol {PROJ_TOL:e})"
        ),
    )
}

fn c11_reductions() -> Outcome {
    // κ = 0: each x-mode evolves like the passive per-mode problem
    let (nu, dt, nt) = (0.02, 0.05, 32);
    let grid = TorusGrid::new(8, 8, nt).unwrap();
    let params = KineticParams::new(0.0, nu, grid, dt, 1.0).map_err(|e| e.to_string())?;
    let kernels = InfluencePair::new(grid, SpatialKernel::Uniform, AngularKernel::Sine);
    let solver = KineticSolver::new(params, &kernels).map_err(|e| e.to_string())?;
    let k = [2i64, -1];
    let mut mode = InitialMode::Random { seed: 3 }.build(k, nu, nt).unwrap();
    let mut f = SpectralField::zeros(grid);
    for (m, v) in mode.eta.clone().into_iter().enumerate() {
        let l = wavenumber(m, nt);
        f.set_coeff(k[0], k[1], l, v);
        f.set_coeff(-k[0], -k[1], -l, v.conj());
    }
    let mut passive = 0.0f64;
    for i in 0..200 {
        solver.step(&mut f, i as f64 * dt).map_err(|e| e.to_string())?;
        mode.step(dt);
        let gap = f.mode(k[0], k[1]).iter().zip(&mode.eta).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        passive = passive.max(gap);
    }

    // x-independent data: kinetic with uniform Φ against the homogeneous flow
    let (kappa, nu, dt) = (0.8, 0.1, 0.01);
    let params = KineticParams::new(kappa, nu, grid, dt, 1.0).map_err(|e| e.to_string())?;
    let solver = KineticSolver::new(params, &kernels).map_err(|e| e.to_string())?;
    let mut f = SpectralField::from_fn(grid, |_, _, t| (1.0 + 0.7 * t.cos()) / TWO_PI.powi(3));
    let mut h = HomogeneousState::with_sine(cosine_profile(nt, 0.7), kappa / (TWO_PI * TWO_PI), nu).unwrap();
    let integ = HomogeneousIntegrator::new(&h.kernel);
    let mut homog = 0.0f64;
    for i in 0..100 {
        solver.step(&mut f, i as f64 * dt).map_err(|e| e.to_string())?;
        integ.step(&mut h, dt).map_err(|e| e.to_string())?;
        let avg = f.x_average();
        let gap = avg
            .values()
            .iter()
            .zip(h.g.values())
            .map(|(a, b)| (TWO_PI * TWO_PI * a - b).abs())
            .fold(0.0, f64::max);
        homog = homog.max(gap);
    }
    judge(
        passive < PASSIVE_TOL && homog < HOMOG_TOL,
        format!(
            "κ = 0 vs per-mode {passive:.1e} (tol {PASSIVE_TOL:e}), x-independent vs homogeneous {homog:.1e} (tol {HOMOG_TOL:e})"
        ),
    )
}

fn c12_sde_pde() -> Outcome {
    let rows = compare_order_parameters(SDE_RATIO, 0.1, SDE_N, 64, 0.01, 60.0, SDE_CHECKPOINTS, 0.6, 7)
        .map_err(|e| e.to_string())?;
    let worst = rows[1..].iter().map(|r| (r.m_pde - r.m_agents).abs()).fold(0.0, f64::max);
    judge(
        worst <= SDE_BAND && rows.len() == SDE_CHECKPOINTS + 1,
        format!("max ||m_pde| − |m_N|| over {SDE_CHECKPOINTS} checkpoints = {worst:.4} (band {SDE_BAND})"),
    )
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("linear enhanced-dissipation scaling", c01_linear_ed_scaling),
        ("|k| scaling of the dissipation rate", c02_wavenumber_scaling),
        ("hypocoercivity sandwich", c03_sandwich),
        ("linear mixing", c04_mixing),
        ("nonlinear enhanced dissipation", c05_nonlinear_ed),
        ("mass conservation", c06_mass),
        ("free-energy dissipation", c07_free_energy),
        ("phase transition", c08_phase_transition),
        ("stationary residual", c09_stationary_residual),
        ("oracle equivalences", c10_oracles),
        ("reduction consistency", c11_reductions),
        ("SDE-PDE agreement", c12_sde_pde),
    ];
    // optional positional filters such as `C05`; libtest flags are ignored
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let tag = format!("C{:02}", i + 1);
        if !filter.is_empty() && !filter.iter().any(|f| tag.eq_ignore_ascii_case(f)) {
            continue;
        }
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("{tag} PASS {name}: {d} [{secs:.1}s]"),
            Err(d) => {
                failed += 1;
                println!("{tag} FAIL {name}: {d} [{secs:.1}s]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
