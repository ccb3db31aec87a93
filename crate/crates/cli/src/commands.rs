//! The four batch commands. Exit-code policy: config/schema problems are
//! reported as `Failure::Config` (exit 1), solver divergence as
//! `Failure::Solver` (exit 2), and structural-hypothesis rejection as
//! `Failure::Validation` (exit 3).

use std::fmt::Write as _;
use std::sync::Arc;

use anyhow::anyhow;
use rayon::prelude::*;

use ellq_core::certify::{
    check_global_bound, check_local_bounds, check_omega_plus_reduction, local_bound_centers,
};
use ellq_core::continuation::{
    detect_fold, solutions_at, trace_branch, Branch, StepControls, StopReason,
};
use ellq_core::harnack::{
    boundary_weak_harnack, interior_weak_harnack, InequalityReport, SupersolutionGenerator,
    SupersolutionKind,
};
use ellq_core::{
    check_lower_solution, check_upper_solution, newton_solve, CoefficientSet, DiscreteField, Mesh,
    ProblemForm, ProblemSpec, Solution, SolverOptions, SolverVariable,
};

use crate::config::{RunConfig, VariableConfig};
use crate::output::{num, OutputWriter};
use crate::svg;

pub enum Failure {
    Config(anyhow::Error),
    Solver(anyhow::Error),
    Validation(anyhow::Error),
}

pub type CmdResult = Result<(), Failure>;

pub struct Ctx<'a> {
    pub cfg: &'a RunConfig,
    pub out: OutputWriter,
    pub seed: u64,
    pub verbose: bool,
    pub header: String,
}

impl Ctx<'_> {
    fn log(&self, msg: &str) {
        if self.verbose {
            eprintln!("[ellq] {msg}");
        }
    }
}

fn io_err(e: anyhow::Error) -> Failure {
    Failure::Config(e)
}

/// Builds the problem at the requested resolution and enforces the
/// structural hypothesis before any numerical work.
fn build(ctx: &Ctx) -> Result<(ProblemSpec, Arc<Mesh>, CoefficientSet), Failure> {
    let spec = ctx.cfg.problem_spec().map_err(Failure::Config)?;
    let resolution = ctx.cfg.resolution.unwrap_or(spec.default_resolution);
    let mesh = spec
        .mesh(resolution)
        .map_err(|e| Failure::Config(anyhow!(e)))?;
    let coeffs = spec
        .coefficients(&mesh)
        .map_err(|e| Failure::Config(anyhow!(e)))?;
    let report = coeffs.validate();
    if !report.all_pass() {
        return Err(Failure::Validation(anyhow!(
            "structural validation failed: {}",
            report.summary()
        )));
    }
    Ok((spec, mesh, coeffs))
}

fn solver_options(cfg: &RunConfig, form: ProblemForm) -> SolverOptions {
    SolverOptions {
        newton_tol: cfg.solve.newton_tol,
        max_iter: cfg.solve.max_iter,
        damping: cfg.solve.damping,
        variable: match cfg.solve.variable {
            VariableConfig::DirectU => SolverVariable::DirectU,
            VariableConfig::ColeHopf => SolverVariable::ColeHopf,
        },
        form,
    }
}

/// Newton from zero, then deterministic multistart sweeps on divergence.
fn solve_with_multistart(
    mesh: &Arc<Mesh>,
    coeffs: &CoefficientSet,
    lambda: f64,
    opts: &SolverOptions,
    attempts: usize,
) -> Result<Solution, Failure> {
    let mut last = String::new();
    for k in 0..=attempts {
        let start = if k == 0 {
            DiscreteField::zeros(mesh.clone())
        } else {
            // closed-form seeded sweep: alternating-sign bumps of growing size
            let amp = 0.25 * k as f64 * if k % 2 == 0 { 1.0 } else { -1.0 };
            let lo = mesh.lo();
            let hi = mesh.hi();
            let dim = mesh.dim();
            DiscreteField::from_fn(mesh.clone(), move |p| {
                let sx = (std::f64::consts::PI * (p[0] - lo[0]) / (hi[0] - lo[0])).sin();
                let sy = if dim == 2 {
                    (std::f64::consts::PI * (p[1] - lo[1]) / (hi[1] - lo[1])).sin()
                } else {
                    1.0
                };
                amp * sx * sy
            })
        };
        match newton_solve(&start, lambda, coeffs, opts) {
            Ok(sol) => return Ok(sol),
            Err(e) => last = e.to_string(),
        }
    }
    Err(Failure::Solver(anyhow!(
        "no convergence at lambda = {lambda} after {attempts} multistart attempts: {last}"
    )))
}

// ---------------------------------------------------------------------------

pub fn cmd_solve(ctx: &Ctx) -> CmdResult {
    let (_, mesh, coeffs) = build(ctx)?;
    let lambda = ctx.cfg.solve.lambda;
    let opts = solver_options(ctx.cfg, ProblemForm::Plain);
    let sol = solve_with_multistart(&mesh, &coeffs, lambda, &opts, ctx.cfg.solve.multistart)?;
    ctx.log(&format!(
        "solved at lambda = {lambda}: sup = {:.6e}, {} iterations",
        sol.sup_norm(),
        sol.newton_iterations
    ));
    ctx.out.write_field("solution.csv", &sol.u).map_err(io_err)?;

    let lower = check_lower_solution(&sol.u, lambda, &coeffs, 1e-8);
    let upper = check_upper_solution(&sol.u, lambda, &coeffs, 1e-8);
    let mut log = String::new();
    let _ = writeln!(log, "lambda = {}", num(lambda));
    let _ = writeln!(log, "newton_iterations = {}", sol.newton_iterations);
    let _ = writeln!(log, "residual_norm = {}", num(sol.residual_norm));
    let _ = writeln!(log, "sup_norm = {}", num(sol.sup_norm()));
    let _ = writeln!(log, "jacobian_signature = {}", sol.jacobian_signature);
    let _ = writeln!(log, "lower_solution = {}", lower.satisfied);
    let _ = writeln!(log, "upper_solution = {}", upper.satisfied);
    ctx.out.write_text("solver.log", &log).map_err(io_err)?;
    Ok(())
}

// ---------------------------------------------------------------------------

/// Traces the full continuum: the plain form to the left of zero, the
/// order-pinned modified form through the fold on the right.
pub fn trace_full_branch(
    cfg: &RunConfig,
    coeffs: &CoefficientSet,
    u0: &Solution,
) -> Result<(Branch, Branch), Failure> {
    let cc = &cfg.continuation;
    let left_controls = StepControls {
        initial_step: cc.initial_step,
        min_step: cc.min_step,
        max_step: cc.max_step,
        max_points: cc.max_points,
        lambda_min: cc.lambda_min,
        sup_norm_cap: cc.sup_norm_cap,
        newton_tol: cfg.solve.newton_tol,
        ..Default::default()
    };
    let left = trace_branch(u0, -1.0, coeffs, &ProblemForm::Plain, &left_controls)
        .map_err(|e| Failure::Solver(anyhow!(e)))?;
    let right_controls = StepControls {
        lambda_min: 0.0, // the upper branch recedes toward zero
        ..left_controls.clone()
    };
    let form = ProblemForm::Modified { u0: u0.u.clone() };
    let right = trace_branch(u0, 1.0, coeffs, &form, &right_controls)
        .map_err(|e| Failure::Solver(anyhow!(e)))?;
    Ok((left, right))
}

pub fn cmd_continue(ctx: &Ctx) -> CmdResult {
    let (spec, mesh, coeffs) = build(ctx)?;
    let opts = solver_options(ctx.cfg, ProblemForm::Plain);
    let u0 = solve_with_multistart(&mesh, &coeffs, 0.0, &opts, ctx.cfg.solve.multistart)?;
    let (left, right) = trace_full_branch(ctx.cfg, &coeffs, &u0)?;
    let glued = Branch::glue(left, right, &spec.name);
    ctx.out.write_branch("branch.csv", &glued).map_err(io_err)?;

    if ctx.cfg.output.write_fields {
        for (k, p) in glued.points.iter().enumerate() {
            ctx.out
                .write_field(&format!("point_{k:05}.csv", k = k), &p.u)
                .map_err(io_err)?;
        }
    }

    let fold = detect_fold(&glued);
    let mut log = String::new();
    let _ = writeln!(log, "problem = {}", spec.name);
    let _ = writeln!(log, "points = {}", glued.points.len());
    let (lo, hi) = glued.lambda_range();
    let _ = writeln!(log, "lambda_range = [{}, {}]", num(lo), num(hi));
    let _ = writeln!(log, "stop = {:?}", glued.stop);
    let truncated = glued.stop == StopReason::SupNormCap;
    let _ = writeln!(log, "truncated_at_cap = {truncated}");
    match &fold {
        Some(f) => {
            let _ = writeln!(log, "fold_lambda = {}", num(f.lambda_bar));
            let _ = writeln!(log, "fold_index = {}", f.index);
            let _ = writeln!(
                log,
                "fold_bracket = [{}, {}]",
                num(f.bracket.0),
                num(f.bracket.1)
            );
        }
        None => {
            let _ = writeln!(log, "fold_lambda = none");
        }
    }
    ctx.out.write_text("continue.log", &log).map_err(io_err)?;

    let series: Vec<(f64, f64)> =
        glued.points.iter().map(|p| (p.lambda, p.sup_norm)).collect();
    let marks: Vec<(f64, f64)> = glued
        .points
        .iter()
        .filter(|p| p.fold_flag)
        .map(|p| (p.lambda, p.sup_norm))
        .collect();
    let chart = svg::line_chart(
        &format!("solution branch: {}", spec.name),
        "lambda",
        "sup |u|",
        &series,
        &marks,
        &ctx.header,
    );
    ctx.out.write_text("diagram.svg", &chart).map_err(io_err)?;
    ctx.log(&format!("branch of {} points written", glued.points.len()));
    Ok(())
}

// ---------------------------------------------------------------------------

pub fn cmd_harnack(ctx: &Ctx) -> CmdResult {
    let (spec, _, _) = build(ctx)?;
    let hc = &ctx.cfg.harnack;
    let resolutions = if hc.resolutions.is_empty() {
        vec![ctx.cfg.resolution.unwrap_or(spec.default_resolution)]
    } else {
        hc.resolutions.clone()
    };
    let mut rows: Vec<(u64, InequalityReport)> = Vec::new();
    for &n in &resolutions {
        let mesh = spec.mesh(n).map_err(|e| Failure::Config(anyhow!(e)))?;
        let a = DiscreteField::constant(mesh.clone(), hc.a_const);
        let generator = SupersolutionGenerator::new(
            mesh.clone(),
            hc.p,
            a,
            SupersolutionKind::SolveWithSource,
        )
        .map_err(|e| Failure::Config(anyhow!(e)))?;
        let seeds: Vec<u64> = (0..hc.samples as u64).map(|k| ctx.seed.wrapping_add(k)).collect();
        let interior_center = [
            (mesh.lo()[0] + mesh.hi()[0]) / 2.0,
            (mesh.lo()[1] + mesh.hi()[1]) / 2.0,
        ];
        let interior_radius = mesh.distance_to_boundary(interior_center) / 4.2;
        let batch: Vec<Vec<(u64, InequalityReport)>> = seeds
            .par_iter()
            .map(|&s| {
                let mut out = Vec::new();
                let sample = match generator.sample(s) {
                    Ok(sample) => sample,
                    Err(e) => {
                        return vec![(
                            s,
                            InequalityReport {
                                id: format!("generation-failed: {e}"),
                                lhs: f64::NAN,
                                rhs: f64::NAN,
                                empirical_constant: f64::NAN,
                                params: vec![("n".into(), n as f64)],
                                verdict: false,
                            },
                        )]
                    }
                };
                for ineq in &hc.inequalities {
                    let rep = match ineq.as_str() {
                        "boundary" => boundary_weak_harnack(&sample, hc.x0, hc.radius, hc.epsilon),
                        "interior" => interior_weak_harnack(
                            &sample,
                            interior_center,
                            interior_radius,
                            hc.s,
                            None,
                            2.0,
                        ),
                        other => Err(ellq_core::Error::Hypothesis(format!(
                            "unknown inequality '{other}'"
                        ))),
                    };
                    match rep {
                        Ok(mut rep) => {
                            rep.params.push(("n".into(), n as f64));
                            out.push((s, rep));
                        }
                        Err(e) => out.push((
                            s,
                            InequalityReport {
                                id: format!("{ineq}-failed: {e}"),
                                lhs: f64::NAN,
                                rhs: f64::NAN,
                                empirical_constant: f64::NAN,
                                params: vec![("n".into(), n as f64)],
                                verdict: false,
                            },
                        )),
                    }
                }
                out
            })
            .collect();
        for b in batch {
            rows.extend(b);
        }
    }
    // reject the whole run if any row failed to evaluate
    if let Some((s, rep)) = rows.iter().find(|(_, r)| !r.lhs.is_finite() && !r.verdict) {
        return Err(Failure::Solver(anyhow!(
            "sample {s} failed: {id}",
            id = rep.id
        )));
    }
    ctx.out.write_reports("harnack.csv", &rows).map_err(io_err)?;

    let points: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|(_, r)| {
            let n = r.params.iter().find(|(k, _)| k == "n")?.1;
            r.empirical_constant.is_finite().then_some((n, r.empirical_constant))
        })
        .collect();
    let chart = svg::scatter_chart(
        "empirical constants vs mesh resolution",
        "nodes per axis",
        "constant",
        &points,
        &ctx.header,
    );
    ctx.out.write_text("harnack.svg", &chart).map_err(io_err)?;

    let mut summary = String::new();
    for &n in &resolutions {
        for ineq in &hc.inequalities {
            let id_prefix = match ineq.as_str() {
                "boundary" => "boundary-weak-harnack",
                _ => "interior-weak-harnack",
            };
            let min_c = rows
                .iter()
                .filter(|(_, r)| {
                    r.id == id_prefix
                        && r.params.iter().any(|(k, v)| k == "n" && *v == n as f64)
                })
                .map(|(_, r)| r.empirical_constant)
                .fold(f64::INFINITY, f64::min);
            let _ = writeln!(summary, "min_constant {id_prefix} n={n} = {}", num(min_c));
        }
    }
    ctx.out.write_text("harnack.log", &summary).map_err(io_err)?;
    ctx.log(&format!("{} report rows written", rows.len()));
    Ok(())
}

// ---------------------------------------------------------------------------

pub fn cmd_certify(ctx: &Ctx) -> CmdResult {
    let (spec, mesh, coeffs) = build(ctx)?;
    let opts = solver_options(ctx.cfg, ProblemForm::Plain);
    let u0 = solve_with_multistart(&mesh, &coeffs, 0.0, &opts, ctx.cfg.solve.multistart)?;
    let (_, right) = trace_full_branch(ctx.cfg, &coeffs, &u0)?;
    let lambda_max = right.lambda_range().1;
    let l1 = ctx.cfg.certify.lambda1.unwrap_or(0.1 * lambda_max);
    let l2 = ctx.cfg.certify.lambda2.unwrap_or(lambda_max);
    if !(l1 > 0.0 && l1 < l2) {
        return Err(Failure::Config(anyhow!(
            "certify interval [{l1}, {l2}] is invalid"
        )));
    }
    let form = ProblemForm::Modified { u0: u0.u.clone() };
    let mod_opts = SolverOptions { form: form.clone(), ..solver_options(ctx.cfg, form) };
    let cert = check_global_bound(&right, &coeffs, &mod_opts, l1, l2, ctx.cfg.certify.witnesses)
        .map_err(|e| Failure::Config(anyhow!(e)))?;

    // reduction checks for every witness against the reference state at 0
    let mut reductions_ok = true;
    let mut reduction_rows = String::from("lambda,sup_u,bound,reduction_ok\n");
    for k in 0..ctx.cfg.certify.witnesses.max(2) {
        let lambda = l1 + (l2 - l1) * k as f64 / (ctx.cfg.certify.witnesses.max(2) - 1) as f64;
        let sols = solutions_at(&right, lambda, &coeffs, &mod_opts)
            .map_err(|e| Failure::Solver(anyhow!(e)))?;
        for sol in sols {
            let red = check_omega_plus_reduction(&sol.u, &u0.u, &coeffs);
            reductions_ok &= red.all_ok();
            let _ = writeln!(
                reduction_rows,
                "{},{},{},{}",
                num(lambda),
                num(sol.u.max()),
                num(cert.bound),
                red.all_ok()
            );
        }
    }

    // localized transform pipeline at the midpoint of the window
    let lambda_mid = 0.5 * (l1 + l2);
    let local_reports = solutions_at(&right, lambda_mid, &coeffs, &mod_opts)
        .ok()
        .and_then(|sols| sols.into_iter().next())
        .map(|sol| {
            check_local_bounds(
                &sol.u,
                lambda_mid,
                &coeffs,
                (l1, l2),
                cert.bound,
                &local_bound_centers(&coeffs),
            )
        })
        .transpose()
        .map_err(|e| Failure::Solver(anyhow!(e)))?
        .unwrap_or_default();
    let locals_ok = local_reports.iter().all(|r| r.verdict);

    let mut text = String::new();
    let _ = writeln!(text, "problem = {}", spec.name);
    let _ = writeln!(text, "lambda_interval = [{}, {}]", num(l1), num(l2));
    let _ = writeln!(text, "bound = {}", num(cert.bound));
    let _ = writeln!(text, "witnesses = {}", cert.witnesses.len());
    let _ = writeln!(text, "bound_verdict = {}", cert.verdict);
    let _ = writeln!(text, "reduction_verdict = {reductions_ok}");
    let _ = writeln!(text, "local_centers = {}", local_reports.len());
    let _ = writeln!(text, "local_verdict = {locals_ok}");
    ctx.out.write_text("certificate.txt", &text).map_err(io_err)?;

    let mut wit = String::from("lambda,sup_u,bound,pass\n");
    for (lambda, sup_u) in &cert.witnesses {
        let _ = writeln!(
            wit,
            "{},{},{},{}",
            num(*lambda),
            num(*sup_u),
            num(cert.bound),
            *sup_u <= cert.bound
        );
    }
    ctx.out.write_text("witnesses.csv", &wit).map_err(io_err)?;
    ctx.out.write_text("reductions.csv", &reduction_rows).map_err(io_err)?;
    ctx.log(&format!(
        "certificate bound {} over [{}, {}]",
        cert.bound, l1, l2
    ));
    Ok(())
}
