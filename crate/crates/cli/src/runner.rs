//! Experiment execution: one function per subcommand, each writing its
//! artifacts under the output directory and printing a summary with one
//! PASS/FAIL line (and the measured margin) per theorem check.

use crate::config::*;
use anyhow::{bail, Context};
use massball::dynamics::{
    box_energy, conservation_report, orbital_distance, polish_on_box, transplant_radial,
    ObservableRow, Stepper, WaveState,
};
use massball::energy::{coercivity_bound, gn_check, GnData, MassSpec};
use massball::grid::{Domain, Field};
use massball::io::{field_to_csv, field_to_json, write_atomic};
use massball::nonlin::EtaSide;
use massball::rearrange::{merge_product_check, merge_star, schwarz, LayerCake};
use massball::solver::{
    minimize, scan_energy_map, subadditivity_check, verify_ground_state, InitStrategy,
    MinimizeOptions,
};
use massball::Error;
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::{Path, PathBuf};
use std::sync::Arc;

/// Exit statuses mirrored by the process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    /// All declared checks passed.
    Pass,
    /// Ran to completion but some check failed.
    ChecksFailed,
    /// A solver leg did not converge or refused to run.
    NotConverged,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Pass => 0,
            Outcome::ChecksFailed => 1,
            Outcome::NotConverged => 3,
        }
    }
}

pub struct RunContext {
    pub out_dir: PathBuf,
    pub seed: u64,
    pub threads: usize,
}

/// Tracks the worst verdict across the printed check lines.
struct Summary {
    failed: usize,
    checks: Vec<(String, bool, String)>,
}

impl Summary {
    fn new() -> Self {
        Summary {
            failed: 0,
            checks: Vec::new(),
        }
    }

    fn check(&mut self, name: &str, ok: bool, margin: String) {
        println!(
            "check {:<44} {}  ({margin})",
            name,
            if ok { "PASS" } else { "FAIL" }
        );
        if !ok {
            self.failed += 1;
        }
        self.checks.push((name.to_string(), ok, margin));
    }

    fn note(&self, line: &str) {
        println!("{line}");
    }

    fn outcome(&self) -> Outcome {
        if self.failed == 0 {
            Outcome::Pass
        } else {
            Outcome::ChecksFailed
        }
    }
}

fn write_json<S: serde::Serialize>(dir: &Path, name: &str, value: &S) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    write_atomic(&dir.join(name), text.as_bytes())?;
    Ok(())
}

fn is_convergence_failure(err: &Error) -> bool {
    matches!(
        err,
        Error::NotConverged(_)
            | Error::ThresholdViolated { .. }
            | Error::TrialIntervalEmpty { .. }
            | Error::TrialScanFailed { .. }
            | Error::BracketNotFound { .. }
    )
}

pub fn run(config: &ExperimentConfig, ctx: &RunContext) -> anyhow::Result<Outcome> {
    std::fs::create_dir_all(&ctx.out_dir)
        .with_context(|| format!("creating {}", ctx.out_dir.display()))?;
    let result = match config {
        ExperimentConfig::GnConst(c) => run_gn_const(c, ctx),
        ExperimentConfig::Minimize(c) => run_minimize(c, ctx, false),
        ExperimentConfig::Verify(c) => run_minimize(c, ctx, true),
        ExperimentConfig::ScanM(c) => run_scan(c, ctx),
        ExperimentConfig::Subadd(c) => run_subadd(c, ctx),
        ExperimentConfig::RearrangeTest(c) => run_rearrange(c, ctx),
        ExperimentConfig::EtaLimits(c) => run_eta(c, ctx),
        ExperimentConfig::Evolve(c) => run_evolve(c, ctx),
    };
    match result {
        Ok(outcome) => Ok(outcome),
        Err(err) => {
            if let Some(lib) = err.downcast_ref::<Error>() {
                if is_convergence_failure(lib) {
                    eprintln!("not converged: {lib}");
                    return Ok(Outcome::NotConverged);
                }
            }
            Err(err)
        }
    }
}

fn solver_opts(base: &MinimizeOptions, ctx: &RunContext) -> MinimizeOptions {
    let mut opts = base.clone();
    opts.seed = ctx.seed;
    opts
}

fn run_gn_const(cfg: &GnConstConfig, ctx: &RunContext) -> anyhow::Result<Outcome> {
    let gn = GnData::<f64>::solve(cfg.n_dim, &cfg.soliton)?;
    let summary = gn.summary();
    let q = gn.two_sharp();
    println!(
        "N = {}  2# = {}  w(0) = {:.8}  |w|_2^2 = {:.8}  C = {:.8}  C^2# = {:.8}",
        cfg.n_dim,
        q,
        gn.w0(),
        gn.mass_w(),
        gn.c_gn(),
        gn.c_gn().powf(q)
    );
    write_json(&ctx.out_dir, "gn_const.json", &summary)?;
    Ok(Outcome::Pass)
}

#[derive(serde::Serialize)]
struct MinimizeArtifact {
    energy: f64,
    lambda: Vec<f64>,
    pde_residual: f64,
    pohozaev: f64,
    saturation: Vec<bool>,
    attained_norms: Vec<f64>,
    iterations: usize,
    converged: bool,
    residual: f64,
    boundary_fraction: f64,
    init_used: String,
    schwarz_steps_accepted: usize,
    etas_ok: bool,
    etal_ok: bool,
    lhs_etas: f64,
    lhs_etal: f64,
    eta0: f64,
    eta_inf: f64,
}

fn run_minimize(cfg: &MinimizeConfig, ctx: &RunContext, verify: bool) -> anyhow::Result<Outcome> {
    let domain: Arc<Domain<f64>> = Arc::new(cfg.domain.clone().try_into()?);
    let gn = GnData::<f64>::solve(domain.n_dim(), &cfg.soliton)?;
    let a = MassSpec::new(cfg.mass.clone())?;
    let opts = solver_opts(&cfg.solver, ctx);
    let run = minimize(
        &cfg.nonlinearity,
        &a,
        &domain,
        &gn,
        InitStrategy::Auto,
        &opts,
    )?;

    let mut summary = Summary::new();
    summary.note(&format!(
        "m = {:.9}  iterations = {}  init = {}  boundary = {:.2e}",
        run.energy, run.iterations, run.init_used, run.boundary_fraction
    ));
    summary.note(&format!(
        "lambda = {:?}  |u_j|_2 = {:?}",
        run.lambda, run.attained_norms
    ));
    summary.check(
        "solver convergence",
        run.converged,
        format!("fixed-point residual {:.3e} vs tol {:.1e}", run.residual, opts.tol),
    );
    summary.check(
        "coercivity threshold (mass bound at infinity)",
        run.thresholds.etas_ok,
        format!("lhs {:.6} < 1", run.thresholds.lhs_etas),
    );
    summary.note(&format!(
        "negativity threshold lhs = {:.6} ({})",
        run.thresholds.lhs_etal,
        if run.thresholds.etal_ok { "> 1" } else { "<= 1, no negative-level guarantee" }
    ));
    summary.check(
        "equation residual",
        run.pde_residual <= cfg.pde_tol,
        format!("{:.3e} vs tol {:.1e}", run.pde_residual, cfg.pde_tol),
    );
    summary.check(
        "dilation (Pohozaev) identity",
        run.pohozaev.abs() <= 5e-3,
        format!("residual {:.3e} vs 5e-3", run.pohozaev),
    );

    if verify {
        let report = verify_ground_state(&a, &run, cfg.pde_tol, cfg.declare_strict_monotone);
        summary.check(
            "multipliers positive",
            report.lambda_all_positive,
            format!("min lambda {:.3e}", report.lambda.iter().cloned().fold(f64::INFINITY, f64::min)),
        );
        summary.check(
            "mass constraints saturated",
            report.all_saturated,
            format!(
                "worst norm gap {:.3e}",
                run.attained_norms
                    .iter()
                    .enumerate()
                    .map(|(j, n)| (a.get(j) - n).abs())
                    .fold(0.0, f64::max)
            ),
        );
        summary.check(
            "components single-signed",
            report.positive.iter().all(|p| *p),
            format!("{:?}", report.positive),
        );
        summary.check(
            "radially nonincreasing",
            report.monotonicity_violations.iter().all(|v| *v == 0),
            format!("violations {:?}", report.monotonicity_violations),
        );
        if let Some(strict) = &report.strictly_monotone {
            summary.check(
                "radially strictly decreasing (declared hypotheses)",
                strict.iter().all(|s| *s),
                format!("{strict:?}"),
            );
        }
        if run.u.m() == 1 {
            let ratio = gn_check(&gn, &run.u)?;
            summary.check(
                "interpolation inequality at the minimizer",
                ratio <= 1.0 + 1e-3,
                format!("ratio {ratio:.6} <= 1 + 1e-3"),
            );
        }
        if run.thresholds.etas_ok {
            let bound = coercivity_bound(&cfg.nonlinearity, &a, &gn, true)?;
            let lower = bound.kinetic_coeff * run.u.total_grad_norm_sq()
                - bound.c_eps * a.norm() * a.norm();
            summary.check(
                "coercivity lower bound at the minimizer",
                run.energy >= lower - 1e-9,
                format!("J {:.6} >= {:.6}", run.energy, lower),
            );
        }
        write_json(&ctx.out_dir, "verify_report.json", &report)?;
    }

    let artifact = MinimizeArtifact {
        energy: run.energy,
        lambda: run.lambda.clone(),
        pde_residual: run.pde_residual,
        pohozaev: run.pohozaev,
        saturation: run.saturation.clone(),
        attained_norms: run.attained_norms.clone(),
        iterations: run.iterations,
        converged: run.converged,
        residual: run.residual,
        boundary_fraction: run.boundary_fraction,
        init_used: run.init_used.clone(),
        schwarz_steps_accepted: run.schwarz_steps_accepted,
        etas_ok: run.thresholds.etas_ok,
        etal_ok: run.thresholds.etal_ok,
        lhs_etas: run.thresholds.lhs_etas,
        lhs_etal: run.thresholds.lhs_etal,
        eta0: run.thresholds.eta0,
        eta_inf: run.thresholds.eta_inf,
    };
    write_json(&ctx.out_dir, "minimize_result.json", &artifact)?;
    write_atomic(
        &ctx.out_dir.join("minimizer.json"),
        field_to_json(&run.u)?.as_bytes(),
    )?;
    write_atomic(
        &ctx.out_dir.join("minimizer.csv"),
        field_to_csv(&run.u).as_bytes(),
    )?;

    if !run.converged {
        return Ok(Outcome::NotConverged);
    }
    Ok(summary.outcome())
}

fn run_scan(cfg: &ScanConfig, ctx: &RunContext) -> anyhow::Result<Outcome> {
    let domain: Arc<Domain<f64>> = Arc::new(cfg.domain.clone().try_into()?);
    let gn = GnData::<f64>::solve(domain.n_dim(), &cfg.soliton)?;
    let opts = solver_opts(&cfg.solver, ctx);
    let grid: Vec<MassSpec<f64>> = cfg
        .mass_grid
        .iter()
        .map(|a| MassSpec::new(a.clone()))
        .collect::<Result<_, _>>()?;
    if grid.is_empty() {
        bail!(Error::Config("scan needs a nonempty mass grid".into()));
    }

    let records = if cfg.warm_start {
        scan_energy_map(&cfg.nonlinearity, &grid, &domain, &gn, &opts)?.0
    } else {
        // independent points may run in parallel; the output order is the
        // grid order either way
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(ctx.threads)
            .build()?;
        pool.install(|| {
            grid.par_iter()
                .map(|a| {
                    let run =
                        minimize(&cfg.nonlinearity, a, &domain, &gn, InitStrategy::Auto, &opts)?;
                    Ok(massball::EnergyMapRecord {
                        a: a.values().to_vec(),
                        m: run.energy,
                        converged: run.converged,
                        iterations: run.iterations,
                        init: run.init_used,
                        seed: opts.seed,
                    })
                })
                .collect::<Result<Vec<_>, Error>>()
        })?
    };

    let m_comp = grid[0].len();
    let mut csv = String::new();
    for j in 1..=m_comp {
        csv.push_str(&format!("a{j},"));
    }
    csv.push_str("m,converged\n");
    for rec in &records {
        for v in &rec.a {
            csv.push_str(&format!("{v},"));
        }
        csv.push_str(&format!("{},{}\n", rec.m, rec.converged));
    }
    write_atomic(&ctx.out_dir.join("scan.csv"), csv.as_bytes())?;
    write_json(&ctx.out_dir, "scan.json", &records)?;

    let mut summary = Summary::new();
    let all_converged = records.iter().all(|r| r.converged);
    summary.check(
        "all scan points converged",
        all_converged,
        format!("{}/{}", records.iter().filter(|r| r.converged).count(), records.len()),
    );
    // monotone map along a componentwise-ordered grid
    let ordered: Vec<&massball::EnergyMapRecord<f64>> = records.iter().collect();
    let mut monotone = true;
    let mut worst = 0.0f64;
    for w in ordered.windows(2) {
        if w[1].a.iter().zip(&w[0].a).all(|(x, y)| x >= y) {
            if w[1].m > w[0].m {
                monotone = false;
                worst = worst.max(w[1].m - w[0].m);
            }
        }
    }
    summary.check(
        "energy map nonincreasing along the grid",
        monotone,
        format!("worst increase {worst:.3e}"),
    );
    if !all_converged {
        return Ok(Outcome::NotConverged);
    }
    Ok(summary.outcome())
}

fn run_subadd(cfg: &SubaddConfig, ctx: &RunContext) -> anyhow::Result<Outcome> {
    let domain: Arc<Domain<f64>> = Arc::new(cfg.domain.clone().try_into()?);
    let gn = GnData::<f64>::solve(domain.n_dim(), &cfg.soliton)?;
    let opts = solver_opts(&cfg.solver, ctx);
    let mut summary = Summary::new();
    let mut reports = Vec::new();

    let mut pairs: Vec<(Vec<f64>, Vec<f64>)> = vec![(cfg.a.clone(), cfg.b.clone())];
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    for _ in 0..cfg.random_pairs {
        let a: Vec<f64> = cfg
            .a
            .iter()
            .map(|_| rng.gen_range(cfg.pair_range.0..cfg.pair_range.1))
            .collect();
        let b: Vec<f64> = cfg
            .b
            .iter()
            .map(|_| rng.gen_range(cfg.pair_range.0..cfg.pair_range.1))
            .collect();
        pairs.push((a, b));
    }

    for (idx, (a, b)) in pairs.iter().enumerate() {
        let rep = subadditivity_check(
            &cfg.nonlinearity,
            &MassSpec::new(a.clone())?,
            &MassSpec::new(b.clone())?,
            &domain,
            &gn,
            &opts,
            cfg.scaling_checks && idx == 0,
        )?;
        summary.check(
            &format!("subadditive slack >= 0 (pair {idx})"),
            rep.slack >= -1e-6,
            format!("slack {:.6e}", rep.slack),
        );
        if rep.both_saturated {
            summary.check(
                &format!("strict slack when both legs saturate (pair {idx})"),
                rep.slack > 0.0,
                format!("slack {:.6e}", rep.slack),
            );
        }
        for (s, m_sb, j_stretch) in &rep.scaling_checks {
            summary.check(
                &format!("dilation scaling bound at s = {s} (pair {idx})"),
                *m_sb <= *j_stretch + 1e-6,
                format!("m {:.6e} <= J {:.6e}", m_sb, j_stretch),
            );
        }
        reports.push(rep);
    }
    write_json(&ctx.out_dir, "subadd.json", &reports)?;
    Ok(summary.outcome())
}

fn run_rearrange(cfg: &RearrangeTestConfig, ctx: &RunContext) -> anyhow::Result<Outcome> {
    let domain: Arc<Domain<f64>> = Arc::new(cfg.domain.clone().try_into()?);
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let mut summary = Summary::new();

    let half = domain.extent() / 6.0;
    let bump_field = |m: usize, rng: &mut ChaCha8Rng, nonneg: bool| -> Field<f64> {
        let k = rng.gen_range(1..4usize);
        let bumps: Vec<(f64, f64, f64)> = (0..k * m)
            .map(|_| {
                let amp: f64 = if nonneg {
                    rng.gen_range(0.2..1.5)
                } else {
                    rng.gen_range(-1.5..1.5)
                };
                (amp, rng.gen_range(0.0..half), rng.gen_range(half * 0.2..half * 0.5))
            })
            .collect();
        Field::from_radial_fn(domain.clone(), m, move |j, r| {
            bumps[j * k..(j + 1) * k]
                .iter()
                .map(|&(a, c, w)| a * (-(r - c) * (r - c) / (2.0 * w * w)).exp())
                .sum()
        })
    };

    let cases = cfg.cases;
    let mut worst_equi = 0.0f64;
    let mut worst_ps = 0.0f64;
    let mut worst_additivity = 0.0f64;
    let mut worst_grad_sub = 0.0f64;
    let mut worst_merge_prod = f64::INFINITY;
    for _ in 0..cases {
        let u = bump_field(1, &mut rng, false);
        let s = schwarz(&u)?;
        for p in [2.0, 4.0] {
            let (lu, ls) = (u.lp_norm(p)?, s.lp_norm(p)?);
            worst_equi = worst_equi.max(((lu - ls) / lu).abs());
        }
        let upos = bump_field(1, &mut rng, true);
        let spos = schwarz(&upos)?;
        worst_ps = worst_ps.max(
            (spos.grad_norm_sq(0)? - upos.grad_norm_sq(0)?) / upos.grad_norm_sq(0)?,
        );

        let v = bump_field(1, &mut rng, false);
        let mrg = merge_star(&u, &v)?;
        for p in [2.0, 4.0] {
            let lhs = mrg.lp_norm(p)?.powf(p);
            let rhs = u.lp_norm(p)?.powf(p) + v.lp_norm(p)?.powf(p);
            worst_additivity = worst_additivity.max(((lhs - rhs) / rhs).abs());
        }
        let (upos2, vpos2) = (bump_field(1, &mut rng, true), bump_field(1, &mut rng, true));
        let m2 = merge_star(&upos2, &vpos2)?;
        worst_grad_sub = worst_grad_sub.max(
            (m2.grad_norm_sq(0)? - upos2.grad_norm_sq(0)? - vpos2.grad_norm_sq(0)?)
                / (upos2.grad_norm_sq(0)? + vpos2.grad_norm_sq(0)?),
        );

        let (pu, pv) = (bump_field(2, &mut rng, true), bump_field(2, &mut rng, true));
        worst_merge_prod = worst_merge_prod.min(merge_product_check(&pu, &pv)?);
    }
    summary.check(
        "rearrangement equimeasurability",
        worst_equi < 1e-4,
        format!("worst relative gap {worst_equi:.3e} vs 1e-4"),
    );
    summary.check(
        "gradient does not increase under rearrangement",
        worst_ps < 1e-3,
        format!("worst relative excess {worst_ps:.3e} vs 1e-3"),
    );
    summary.check(
        "merge mass additivity",
        worst_additivity < 1e-4,
        format!("worst relative gap {worst_additivity:.3e} vs 1e-4"),
    );
    summary.check(
        "merge gradient subadditivity",
        worst_grad_sub < 1e-3,
        format!("worst relative excess {worst_grad_sub:.3e} vs 1e-3"),
    );
    summary.check(
        "merged product bound",
        worst_merge_prod >= -1e-4,
        format!("worst gap {worst_merge_prod:.3e} >= -1e-4"),
    );

    // level-set bookkeeping on one deterministic pair
    let u = bump_field(1, &mut rng, true);
    let v = bump_field(1, &mut rng, true);
    let mrg = merge_star(&u, &v)?;
    let cu = LayerCake::from_scalar(domain.as_ref(), u.component(0)?)?;
    let cv = LayerCake::from_scalar(domain.as_ref(), v.component(0)?)?;
    let cm = LayerCake::from_scalar(mrg.domain(), mrg.component(0)?)?;
    let top = u.component(0)?.iter().fold(0.0f64, |a, &b| a.max(b));
    let w_max = domain.weight(domain.node_count() - 1);
    let mut worst_level = 0.0f64;
    for k in 0..100 {
        let t = top * (k as f64 + 0.5) / 100.0;
        worst_level = worst_level.max((cm.mu_of(t) - cu.mu_of(t) - cv.mu_of(t)).abs());
    }
    summary.check(
        "merge level-set measures add",
        worst_level <= 2.0 * w_max,
        format!("worst measure gap {worst_level:.3e} vs 2 cells {:.3e}", 2.0 * w_max),
    );

    #[derive(serde::Serialize)]
    struct RearrangeReport {
        cases: usize,
        worst_equimeasurability: f64,
        worst_gradient_excess: f64,
        worst_mass_additivity: f64,
        worst_gradient_subadditivity: f64,
        worst_merge_product_gap: f64,
        worst_levelset_gap: f64,
    }
    write_json(
        &ctx.out_dir,
        "rearrange_report.json",
        &RearrangeReport {
            cases,
            worst_equimeasurability: worst_equi,
            worst_gradient_excess: worst_ps,
            worst_mass_additivity: worst_additivity,
            worst_gradient_subadditivity: worst_grad_sub,
            worst_merge_product_gap: worst_merge_prod,
            worst_levelset_gap: worst_level,
        },
    )?;
    Ok(summary.outcome())
}

fn run_eta(cfg: &EtaLimitsConfig, ctx: &RunContext) -> anyhow::Result<Outcome> {
    let f = &cfg.nonlinearity;
    #[derive(serde::Serialize)]
    struct EtaReport {
        side: String,
        analytic: Option<f64>,
        estimate: f64,
        samples: Vec<(f64, f64)>,
    }
    let mut reports = Vec::new();
    let sides: Vec<EtaSide> = match cfg.side {
        EtaSides::Zero => vec![EtaSide::Zero],
        EtaSides::Infinity => vec![EtaSide::Infinity],
        EtaSides::Both => vec![EtaSide::Zero, EtaSide::Infinity],
    };
    for side in sides {
        let analytic = match side {
            EtaSide::Zero => f.eta0(),
            EtaSide::Infinity => f.eta_inf(),
        };
        let radii = cfg
            .radii
            .clone()
            .unwrap_or_else(|| f.default_radii(side));
        let est = f.eta_estimate(side, &radii)?;
        let name = match side {
            EtaSide::Zero => "eta_0",
            EtaSide::Infinity => "eta_inf",
        };
        match &analytic {
            Ok(v) => println!("{name}: analytic = {}  estimate = {}", v.as_f64(), est.value),
            Err(_) => println!("{name}: analytic unavailable  estimate = {}", est.value),
        }
        reports.push(EtaReport {
            side: name.into(),
            analytic: analytic.ok().map(|v| v.as_f64()),
            estimate: est.value,
            samples: est.samples,
        });
    }
    write_json(&ctx.out_dir, "eta.json", &reports)?;
    Ok(Outcome::Pass)
}

fn run_evolve(cfg: &EvolveConfig, ctx: &RunContext) -> anyhow::Result<Outcome> {
    let bx = Domain::periodic_box(cfg.box_length, cfg.n_points)?;
    let f = &cfg.nonlinearity;
    let m = f.m();
    let mut summary = Summary::new();

    let mut orbit_samples: Vec<Field<f64>> = Vec::new();
    let profile: Vec<Vec<f64>> = match &cfg.initial {
        InitialCondition::GroundState {
            mass,
            radial_r_max,
            radial_n_points,
            polish_iters,
        } => {
            let radial = Domain::<f64>::radial(1, *radial_r_max, *radial_n_points)?;
            let gn = GnData::<f64>::solve(1, &cfg.soliton)?;
            let a = MassSpec::new(mass.clone())?;
            let opts = solver_opts(&cfg.solver, ctx);
            let run = minimize(f, &a, &radial, &gn, InitStrategy::Auto, &opts)?;
            if !run.converged {
                bail!(Error::NotConverged("ground-state leg of evolve".into()));
            }
            let transplanted = transplant_radial(&run.u, &bx)?;
            let masses: Vec<f64> = mass.iter().map(|v| v * v).collect();
            let (polished, lambda) = polish_on_box(f, &bx, transplanted, &masses, *polish_iters)?;
            summary.note(&format!("standing-wave multipliers on the box: {lambda:?}"));
            orbit_samples.push(Field::new(bx.clone(), polished.clone())?);
            polished
        }
        InitialCondition::Gaussian { width, amplitude } => {
            let xs = bx.axis_nodes().to_vec();
            (0..m)
                .map(|_| {
                    xs.iter()
                        .map(|&x| amplitude * (-(x * x) / (2.0 * width * width)).exp())
                        .collect()
                })
                .collect()
        }
        InitialCondition::FieldJson { path } => {
            let text = std::fs::read_to_string(path)?;
            let field: Field<f64> = massball::io::field_from_json(&text)?;
            if field.domain().as_ref() != bx.as_ref() {
                bail!(Error::Config(
                    "initial field domain does not match the evolve box".into()
                ));
            }
            field.components().to_vec()
        }
    };

    let mut state = WaveState::from_real(bx.clone(), &profile)?;
    if let Some(pert) = &cfg.perturbation {
        let xs = bx.axis_nodes().to_vec();
        for c in state.components_mut() {
            for (z, &x) in c.iter_mut().zip(&xs) {
                match pert {
                    Perturbation::CosineModulation { amplitude, mode } => {
                        let phase =
                            2.0 * std::f64::consts::PI * (*mode as f64) * x / cfg.box_length;
                        *z = *z * Complex::new(1.0 + amplitude * phase.cos(), 0.0);
                    }
                    Perturbation::Bump {
                        amplitude,
                        center,
                        width,
                    } => {
                        *z = *z
                            + Complex::new(
                                amplitude
                                    * (-(x - center) * (x - center) / (2.0 * width * width)).exp(),
                                0.0,
                            );
                    }
                }
            }
        }
    }

    let stepper = Stepper::new(f, &bx, cfg.dt)?;
    let steps = (cfg.t_end / cfg.dt).round() as usize;
    let observe = |state: &WaveState<f64>| -> anyhow::Result<ObservableRow<f64>> {
        let dist = if orbit_samples.is_empty() {
            None
        } else {
            Some(orbital_distance(state, &orbit_samples)?)
        };
        Ok(ObservableRow {
            t: state.t,
            masses: state.masses(),
            energy: box_energy(f, state),
            orbital_distance: dist,
        })
    };
    let mut rows = vec![observe(&state)?];
    for k in 0..steps {
        stepper.step(&mut state);
        if (k + 1) % cfg.observe_every == 0 || k + 1 == steps {
            rows.push(observe(&state)?);
        }
    }

    let mut csv = String::from("t");
    for j in 1..=m {
        csv.push_str(&format!(",mass_{j}"));
    }
    csv.push_str(",energy,orbital_distance\n");
    for row in &rows {
        csv.push_str(&format!("{}", row.t));
        for v in &row.masses {
            csv.push_str(&format!(",{v}"));
        }
        csv.push_str(&format!(",{}", row.energy));
        match row.orbital_distance {
            Some(d) => csv.push_str(&format!(",{d}\n")),
            None => csv.push_str(",\n"),
        }
    }
    write_atomic(&ctx.out_dir.join("trajectory.csv"), csv.as_bytes())?;

    let report = conservation_report(&rows);
    write_json(&ctx.out_dir, "conservation.json", &report)?;
    let worst_mass = report.mass_drift.iter().cloned().fold(0.0f64, f64::max);
    summary.check(
        "mass conservation",
        worst_mass <= 1e-10,
        format!("worst relative drift {worst_mass:.3e} vs 1e-10"),
    );
    summary.note(&format!(
        "energy drift {:.3e} over T = {}",
        report.energy_drift, cfg.t_end
    ));
    if let Some(factor) = cfg.stability_factor {
        if !orbit_samples.is_empty() {
            let d0 = rows[0].orbital_distance.unwrap_or(0.0).max(1e-300);
            let sup = rows
                .iter()
                .filter_map(|r| r.orbital_distance)
                .fold(0.0f64, f64::max);
            summary.check(
                "orbital stability surrogate",
                sup <= factor * d0,
                format!("sup distance {sup:.6e} vs {factor} x initial {d0:.6e}"),
            );
        }
    }
    Ok(summary.outcome())
}
