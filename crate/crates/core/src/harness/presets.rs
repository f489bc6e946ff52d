//! The seven presets. Each resolves its parameters, writes the manifest,
//! then its data, and records its checks in the report.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ExperimentConfig, Params, Preset};
use super::csv::CsvWriter;
use super::{write_manifest, HarnessError, RunReport};
use crate::agents::{projection_drift_check, write_agent_dump, AgentEnsemble};
use crate::error::Result;
use crate::fit::{fit_rate, power_law_exponent, FitMode};
use crate::homogeneous::{
    cosine_profile, linear_stability, solve_compatibility, HomogeneousIntegrator, HomogeneousState, PositivityPolicy,
};
use crate::kinetic::{run_experiment, AngularInfluence, AngularKernel, KineticConfig, KineticParams, SpatialKernel, KINETIC_COLUMNS};
use crate::linear::{run_mode_jobs, write_mode_csv, InitialMode, ModeJob, MAX_BETA};
use crate::spectral::TWO_PI;
use crate::speed::SpeedProfile;

pub(super) fn dispatch(config: &ExperimentConfig) -> Result<RunReport, HarnessError> {
    let p = Params::new(&config.params);
    match config.preset {
        Preset::LinearEd => linear_ed(config, p),
        Preset::Mixing => mixing(config, p),
        Preset::Kinetic => kinetic(config, p),
        Preset::Homogeneous => homogeneous(config, p),
        Preset::PhaseDiagram => phase_diagram(config, p),
        Preset::Agents => agents(config, p),
        Preset::Compare => compare(config, p),
    }
}

/// Resolves the remaining parameters and writes the manifest.
fn start(config: &ExperimentConfig, p: Params) -> Result<RunReport, HarnessError> {
    let resolved: BTreeMap<String, String> = p.finish()?;
    let mut report = RunReport::new(config.preset);
    report.files.push(write_manifest(&config.out_dir, config, &resolved)?);
    Ok(report)
}

fn steps(t_end: f64, dt: f64) -> Result<usize, HarnessError> {
    if !(dt > 0.0) || !(t_end >= 0.0) {
        return Err(HarnessError::Config(format!("need dt > 0 and t_end ≥ 0, got dt = {dt}, t_end = {t_end}")));
    }
    Ok((t_end / dt).round() as usize)
}

fn angular_kernel(power: i64) -> Result<AngularKernel, HarnessError> {
    match power {
        -1 => Ok(AngularKernel::Sine),
        p if (0..=16).contains(&p) => Ok(AngularKernel::RaisedCosine { power: p as u32 }),
        p => Err(HarnessError::Config(format!("psi_power: expected -1 (sine) or 0..=16, got {p}"))),
    }
}

fn spatial_kernel(sigma: f64) -> SpatialKernel {
    if sigma > 0.0 {
        SpatialKernel::PeriodicBump { sigma }
    } else {
        SpatialKernel::Uniform
    }
}

fn mode_jobs(p: &Params, nus: &[f64], horizon_of: impl Fn(f64, f64) -> f64) -> Result<Vec<ModeJob>, HarnessError> {
    let k = [p.i64("k1", 1)?, p.i64("k2", 0)?];
    if k == [0, 0] {
        return Err(HarnessError::Config("k1, k2: the mode k = 0 has no transport".into()));
    }
    let n_theta = p.usize("n_theta", 512)?;
    let dt = p.f64("dt", 0.05)?;
    let samples = p.usize("samples", 400)?.max(1);
    let beta = p.f64("beta", MAX_BETA)?;
    let kn = ((k[0] * k[0] + k[1] * k[1]) as f64).sqrt();
    nus.iter()
        .map(|&nu| {
            let horizon = horizon_of(nu, kn);
            let n = steps(horizon, dt)?;
            Ok(ModeJob {
                k,
                nu,
                n_theta,
                dt,
                horizon,
                sample_every: (n / samples).max(1),
                initial: InitialMode::Cosine,
                beta,
            })
        })
        .collect()
}

fn linear_ed(config: &ExperimentConfig, p: Params) -> Result<RunReport, HarnessError> {
    let nus = p.f64_list("nus", &[1e-3, 3e-4, 1e-4, 3e-5])?;
    let factor = p.f64("horizon_factor", 10.0)?;
    let jobs = mode_jobs(&p, &nus, |nu, kn| factor * (nu * kn).sqrt().recip())?;
    let band = config.tolerance("exponent", 0.05);
    let mut report = start(config, p)?;

    let runs = run_mode_jobs(&jobs);
    let mut rates = Vec::new();
    let mut sandwich_ok = true;
    let mut rates_csv = CsvWriter::create(&config.out_dir.join("rates.csv"), &["nu", "k1", "k2", "rate", "stderr"])?;
    for (job, run) in jobs.iter().zip(runs) {
        let run = match run {
            Ok(r) => r,
            Err(crate::Error::Invariant(msg)) => {
                sandwich_ok = false;
                report.check("sandwich", false, true, format!("{}: {msg}", job.file_stem()));
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let path = config.out_dir.join(format!("{}.csv", run.job.file_stem()));
        write_mode_csv(&path, &run)?;
        report.files.push(path);
        let series: Vec<(f64, f64)> = run.samples.iter().map(|s| (s.t, s.norm_l2)).collect();
        let kn = ((job.k[0] * job.k[0] + job.k[1] * job.k[1]) as f64).sqrt();
        let t_ed = 1.0 / (job.nu * kn).sqrt();
        let fit = fit_rate(&series, (t_ed, job.horizon + job.dt), FitMode::Exponential)?;
        rates_csv.write_row(&[job.nu, job.k[0] as f64, job.k[1] as f64, -fit.slope, fit.stderr])?;
        rates.push((job.nu, -fit.slope));
    }
    rates_csv.finish()?;
    report.files.push(config.out_dir.join("rates.csv"));
    if sandwich_ok {
        report.check("sandwich", true, true, format!("{} runs", jobs.len()));
    }
    if rates.len() >= 2 {
        let exp = power_law_exponent(&rates)?;
        report.check(
            "rate_exponent",
            (exp.slope - 0.5).abs() <= band,
            false,
            format!("λ ∝ ν^{:.4} (expected 1/2 ± {band})", exp.slope),
        );
    }
    Ok(report)
}

fn mixing(config: &ExperimentConfig, p: Params) -> Result<RunReport, HarnessError> {
    let nu = p.f64("nu", 1e-4)?;
    let jobs = mode_jobs(&p, &[nu], |nu, _| nu.sqrt().recip())?;
    let mut report = start(config, p)?;
    let run = match run_mode_jobs(&jobs).pop().expect("one job") {
        Ok(r) => r,
        Err(crate::Error::Invariant(msg)) => {
            report.check("sandwich", false, true, msg);
            return Ok(report);
        }
        Err(e) => return Err(e.into()),
    };
    report.check("sandwich", true, true, "1 run".into());
    let path = config.out_dir.join(format!("{}.csv", run.job.file_stem()));
    write_mode_csv(&path, &run)?;
    report.files.push(path);
    let series: Vec<(f64, f64)> = run.samples.iter().map(|s| (s.t, s.norm_hm1)).collect();
    let fit = fit_rate(&series, (1.0, nu.sqrt().recip()), FitMode::PowerLaw)?;
    report.check("mixing_exponent", fit.slope < 0.0, false, format!("‖η‖_H⁻¹ ∝ t^{:.4}", fit.slope));
    Ok(report)
}

fn kinetic(config: &ExperimentConfig, p: Params) -> Result<RunReport, HarnessError> {
    let grid = p.grid("grid", [32, 32, 64])?;
    let kappa = p.f64("kappa", 0.01)?;
    let nu = p.f64("nu", 0.01)?;
    let dt = p.f64("dt", 0.05)?;
    let t_end = p.f64("t_end", 50.0)?;
    let mut params = KineticParams::new(kappa, nu, grid, dt, t_end)?;
    params.seed = config.seed;
    let tau = p.f64("tau", 0.0)?;
    if tau > 0.0 {
        params.speed = SpeedProfile::Relaxing { tau };
    }
    let mut kc = KineticConfig::new(params);
    kc.spatial = spatial_kernel(p.f64("sigma", 0.5)?);
    kc.angular = angular_kernel(p.i64("psi_power", -1)?)?;
    kc.epsilon = p.f64("epsilon", kc.epsilon)?;
    kc.sample_every = p.usize("sample_every", 10)?;
    kc.snapshot_every = p.usize("snapshot_every", 0)?;
    let mass_tol = config.tolerance("mass", 1e-12);
    let mut report = start(config, p)?;

    let snap_dir = config.out_dir.join("snapshots");
    if kc.snapshot_every > 0 {
        std::fs::create_dir_all(&snap_dir)?;
    }
    let run = run_experiment(&kc, None, Some(&snap_dir))?;
    let path = config.out_dir.join("kinetic.csv");
    let mut w = CsvWriter::create(&path, &KINETIC_COLUMNS)?;
    for s in &run.samples {
        w.write_row(&s.row())?;
    }
    w.finish()?;
    report.files.push(path);
    report.files.extend(run.snapshots.iter().cloned());

    let m0 = run.samples[0].mass;
    let drift = run.samples.iter().map(|s| (s.mass - m0).abs()).fold(0.0, f64::max) / m0.abs();
    report.check("mass", drift <= mass_tol, true, format!("relative drift {drift:e} (tol {mass_tol:e})"));
    let min_f = run.samples.iter().map(|s| s.min_f).fold(f64::INFINITY, f64::min);
    report.check("positivity", min_f > 0.0, false, format!("min f = {min_f:e}"));
    let (r0, r1) = (run.samples[0].remainder_l2, run.samples.last().expect("samples").remainder_l2);
    report.check("remainder_decay", r1 <= r0, false, format!("‖f≠‖ {r0:e} → {r1:e}"));
    Ok(report)
}

/// Homogeneous trajectory from (1 + a₀cos θ)/(2π); `observe` sees every state.
#[allow(clippy::too_many_arguments)]
fn homogeneous_trajectory(
    kappa: f64,
    nu: f64,
    n_theta: usize,
    kernel: AngularKernel,
    a0: f64,
    dt: f64,
    n_steps: usize,
    mut observe: impl FnMut(usize, &HomogeneousState) -> Result<()>,
) -> Result<HomogeneousState> {
    let influence = AngularInfluence::from_kernel(n_theta, kernel);
    let mut s = HomogeneousState::new(cosine_profile(n_theta, a0), kappa, nu, influence)?;
    let integ = HomogeneousIntegrator::new(&s.kernel);
    observe(0, &s)?;
    for i in 1..=n_steps {
        integ.step(&mut s, dt)?;
        observe(i, &s)?;
    }
    Ok(s)
}

fn homogeneous(config: &ExperimentConfig, p: Params) -> Result<RunReport, HarnessError> {
    let kappa = p.f64("kappa", 0.4)?;
    let nu = p.f64("nu", 0.1)?;
    let n_theta = p.usize("n_theta", 64)?;
    let dt = p.f64("dt", 0.01)?;
    let t_end = p.f64("t_end", 60.0)?;
    let a0 = p.f64("a0", 0.6)?;
    let every = p.usize("sample_every", 10)?.max(1);
    let kernel = angular_kernel(p.i64("psi_power", -1)?)?;
    let policy = match p.string("positivity", "reject")?.as_str() {
        "reject" => PositivityPolicy::Reject,
        "clamp" => PositivityPolicy::Clamp,
        other => return Err(HarnessError::Config(format!("positivity: expected reject or clamp, got `{other}`"))),
    };
    let mass_tol = config.tolerance("mass", 1e-12);
    let energy_tol = config.tolerance("free_energy", 1e-12);
    let n = steps(t_end, dt)?;
    let mut report = start(config, p)?;

    let path = config.out_dir.join("homogeneous.csv");
    let mut w = CsvWriter::create(&path, &["t", "m_re", "m_im", "m_abs", "free_energy", "fisher", "mass"])?;
    let (mut mass0, mut mass_drift) = (0.0, 0.0f64);
    let (mut last_f, mut worst_rise) = (f64::INFINITY, 0.0f64);
    homogeneous_trajectory(kappa, nu, n_theta, kernel, a0, dt, n, |i, s| {
        let mass = s.mass();
        if i == 0 {
            mass0 = mass;
        }
        mass_drift = mass_drift.max((mass - mass0).abs() / mass0);
        let f = s.free_energy(policy);
        if last_f.is_finite() {
            worst_rise = worst_rise.max((f - last_f) / (1.0 + last_f.abs()));
        }
        last_f = f;
        if i % every == 0 || i == n {
            let m = s.order_parameter();
            let fisher = s.fisher_information(policy).unwrap_or(f64::NAN);
            w.write_row(&[s.t, m.re, m.im, m.norm(), f, fisher, mass])?;
        }
        Ok(())
    })?;
    w.finish()?;
    report.files.push(path);
    report.check("mass", mass_drift <= mass_tol, true, format!("relative drift {mass_drift:e} (tol {mass_tol:e})"));
    report.check(
        "free_energy_monotone",
        worst_rise <= energy_tol,
        true,
        format!("largest relative rise {worst_rise:e} (tol {energy_tol:e})"),
    );
    Ok(report)
}

/// One column of the phase diagram.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PhasePoint {
    pub ratio: f64,
    /// Non-trivial root |r₂|, zero when only the uniform state exists.
    pub r2: f64,
    pub final_m: f64,
    pub stable: bool,
    pub mass_drift: f64,
}

/// Solves the compatibility equation, the linear stability of the uniform
/// state, and evolves (1 + a₀cos θ)/(2π) to `t_end` at κ = ratio·ν.
pub fn phase_point(ratio: f64, nu: f64, n_theta: usize, dt: f64, t_end: f64, a0: f64) -> Result<PhasePoint> {
    let kappa = ratio * nu;
    let root = solve_compatibility(ratio)?;
    let influence = AngularInfluence::from_kernel(n_theta, AngularKernel::Sine);
    let stable = linear_stability(&influence, kappa, nu, 1)?.stable;
    let n = (t_end / dt).round() as usize;
    let mut mass0 = 0.0;
    let mut drift = 0.0f64;
    let end = homogeneous_trajectory(kappa, nu, n_theta, AngularKernel::Sine, a0, dt, n, |i, s| {
        if i == 0 {
            mass0 = s.mass();
        }
        drift = drift.max((s.mass() - mass0).abs() / mass0);
        Ok(())
    })?;
    Ok(PhasePoint { ratio, r2: root.r2.unwrap_or(0.0), final_m: end.order_parameter().norm(), stable, mass_drift: drift })
}

fn phase_diagram(config: &ExperimentConfig, p: Params) -> Result<RunReport, HarnessError> {
    let lo = p.f64("ratio_min", 0.5)?;
    let hi = p.f64("ratio_max", 6.0)?;
    let count = p.usize("ratio_steps", 23)?;
    let nu = p.f64("nu", 0.1)?;
    let n_theta = p.usize("n_theta", 64)?;
    let dt = p.f64("dt", 0.01)?;
    let t_end = p.f64("t_end", 300.0)?;
    let a0 = p.f64("a0", 0.2)?;
    if count == 0 || !(lo > 0.0 && hi >= lo) {
        return Err(HarnessError::Config(format!("need 0 < ratio_min ≤ ratio_max and ratio_steps ≥ 1, got {lo}, {hi}, {count}")));
    }
    if count == 1 && hi != lo {
        return Err(HarnessError::Config("ratio_steps = 1 needs ratio_min = ratio_max".into()));
    }
    steps(t_end, dt)?;
    let mass_tol = config.tolerance("mass", 1e-12);
    let mut report = start(config, p)?;

    let ratios: Vec<f64> = (0..count)
        .map(|i| if count == 1 { lo } else { lo + (hi - lo) * i as f64 / (count - 1) as f64 })
        .collect();
    let points: Vec<PhasePoint> = ratios
        .par_iter()
        .map(|&r| phase_point(r, nu, n_theta, dt, t_end, a0))
        .collect::<Result<_>>()?;

    let path = config.out_dir.join("phase_diagram.csv");
    let mut w = CsvWriter::create(&path, &["ratio", "r2", "final_m", "stable"])?;
    for pt in &points {
        w.write_row(&[pt.ratio, pt.r2, pt.final_m, if pt.stable { 1.0 } else { 0.0 }])?;
    }
    w.finish()?;
    report.files.push(path);

    // at ratio 2 exactly the linearisation is marginal and r₂ = 0
    let mismatched: Vec<f64> = points
        .iter()
        .filter(|pt| (pt.ratio - 2.0).abs() > 1e-12 && pt.stable != (pt.r2 == 0.0))
        .map(|pt| pt.ratio)
        .collect();
    report.check(
        "stability_dichotomy",
        mismatched.is_empty(),
        true,
        if mismatched.is_empty() { "r₂ = 0 exactly where the uniform state is stable".into() } else { format!("mismatch at {mismatched:?}") },
    );
    let drift = points.iter().map(|pt| pt.mass_drift).fold(0.0, f64::max);
    report.check("mass", drift <= mass_tol, true, format!("relative drift {drift:e} (tol {mass_tol:e})"));
    Ok(report)
}

fn sample_agents(n: usize, kappa: f64, nu: f64, a0: f64, seed: u64) -> Result<AgentEnsemble> {
    let norm = TWO_PI.powi(3);
    AgentEnsemble::sample(n, |_, _, t| (1.0 + a0 * t.cos()) / norm, (1.0 + a0.abs()) / norm, kappa, nu, seed)
}

fn agents(config: &ExperimentConfig, p: Params) -> Result<RunReport, HarnessError> {
    let n = p.usize("n", 10_000)?;
    let kappa = p.f64("kappa", 10.0)?;
    let nu = p.f64("nu", 0.1)?;
    let dt = p.f64("dt", 0.01)?;
    let t_end = p.f64("t_end", 10.0)?;
    let a0 = p.f64("a0", 0.6)?;
    let every = p.usize("sample_every", 10)?.max(1);
    let dump_every = p.usize("dump_every", 0)?;
    let spatial = spatial_kernel(p.f64("sigma", 0.0)?);
    let angular = angular_kernel(p.i64("psi_power", -1)?)?;
    let tau = p.f64("tau", 0.0)?;
    let steps_n = steps(t_end, dt)?;
    let projection_tol = config.tolerance("projection", 1e-12);
    let mut report = start(config, p)?;

    let mut e = sample_agents(n, kappa, nu, a0, config.seed)?.with_kernels(spatial, angular);
    if tau > 0.0 {
        e = e.with_speed(SpeedProfile::Relaxing { tau });
    }
    let gap = projection_drift_check(&e);
    report.check("projection_drift", gap <= projection_tol, true, format!("max gap {gap:e} (tol {projection_tol:e})"));

    let path = config.out_dir.join("agents.csv");
    let mut w = CsvWriter::create(&path, &["t", "m_re", "m_im", "m_abs"])?;
    let record = |e: &AgentEnsemble, step: usize, w: &mut CsvWriter, report: &mut RunReport| -> Result<()> {
        if step.is_multiple_of(every) || step == steps_n {
            let m = e.order_parameter();
            w.write_row(&[e.t, m.re, m.im, m.norm()])?;
        }
        if dump_every > 0 && step.is_multiple_of(dump_every) {
            let dump = config.out_dir.join(format!("agents_{step:08}.bin"));
            write_agent_dump(&dump, e)?;
            report.files.push(dump);
        }
        Ok(())
    };
    record(&e, 0, &mut w, &mut report)?;
    for step in 1..=steps_n {
        e.em_step(dt)?;
        record(&e, step, &mut w, &mut report)?;
    }
    w.finish()?;
    report.files.push(path);
    let in_range = e.theta.iter().all(|t| (-std::f64::consts::PI..std::f64::consts::PI).contains(t))
        && e.x.iter().all(|x| x.iter().all(|c| (0.0..TWO_PI).contains(c)));
    report.check("state_wrapped", in_range, true, "positions in [0,2π)², headings in [−π,π)".into());
    Ok(report)
}

/// One checkpoint of the mean-field comparison.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CompareRow {
    pub t: f64,
    pub m_pde: f64,
    pub m_agents: f64,
}

/// |m(t)| of the homogeneous equation at κ = ratio·ν next to N agents with
/// uniform Φ and effective strength ratio·ν, both started from
/// (1 + a₀cos θ)/(2π) and compared at `checkpoints` equally spaced times.
#[allow(clippy::too_many_arguments)]
pub fn compare_order_parameters(
    ratio: f64,
    nu: f64,
    n_agents: usize,
    n_theta: usize,
    dt: f64,
    t_end: f64,
    checkpoints: usize,
    a0: f64,
    seed: u64,
) -> Result<Vec<CompareRow>> {
    let n = (t_end / dt).round() as usize;
    let checkpoints = checkpoints.max(1);
    let at = |i: usize| i * n / checkpoints;
    let kappa = ratio * nu;

    let mut pde = vec![0.0; checkpoints + 1];
    homogeneous_trajectory(kappa, nu, n_theta, AngularKernel::Sine, a0, dt, n, |i, s| {
        if let Some(c) = (0..=checkpoints).find(|&c| at(c) == i) {
            pde[c] = s.order_parameter().norm();
        }
        Ok(())
    })?;

    let mut e = sample_agents(n_agents, kappa * TWO_PI * TWO_PI, nu, a0, seed)?;
    let mut m_agents = vec![e.order_parameter().norm()];
    for i in 1..=n {
        e.em_step(dt)?;
        if (1..=checkpoints).any(|c| at(c) == i) {
            m_agents.push(e.order_parameter().norm());
        }
    }
    Ok((0..=checkpoints)
        .map(|c| CompareRow { t: at(c) as f64 * dt, m_pde: pde[c], m_agents: m_agents[c] })
        .collect())
}

fn compare(config: &ExperimentConfig, p: Params) -> Result<RunReport, HarnessError> {
    let ratio = p.f64("ratio", 4.0)?;
    let nu = p.f64("nu", 0.1)?;
    let n = p.usize("n", 10_000)?;
    let n_theta = p.usize("n_theta", 64)?;
    let dt = p.f64("dt", 0.01)?;
    let t_end = p.f64("t_end", 60.0)?;
    let checkpoints = p.usize("checkpoints", 10)?;
    let a0 = p.f64("a0", 0.6)?;
    steps(t_end, dt)?;
    let band = config.tolerance("band", 0.05);
    let mut report = start(config, p)?;

    let rows = compare_order_parameters(ratio, nu, n, n_theta, dt, t_end, checkpoints, a0, config.seed)?;
    let path = config.out_dir.join("compare.csv");
    let mut w = CsvWriter::create(&path, &["t", "m_pde", "m_agents", "diff"])?;
    for r in &rows {
        w.write_row(&[r.t, r.m_pde, r.m_agents, (r.m_pde - r.m_agents).abs()])?;
    }
    w.finish()?;
    report.files.push(path);
    let worst = rows.iter().map(|r| (r.m_pde - r.m_agents).abs()).fold(0.0, f64::max);
    report.check("band", worst <= band, true, format!("max ||m_pde| − |m_agents|| = {worst:.4e} (band {band})"));
    Ok(report)
}

