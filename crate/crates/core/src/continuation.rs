//! Pseudo-arclength continuation of the solution branch in `lambda`:
//! secant/tangent predictor, bordered Newton corrector, fold flagging via
//! tangent reversal and Jacobian determinant sign, plus the eigenvalue-based
//! upper bound beyond which no solution can sit above the reference state.

use std::sync::Arc;

use crate::coefficients::CoefficientSet;
use crate::eigen::first_eigenpair;
use crate::error::{Error, Result};
use crate::field::DiscreteField;
use crate::mesh::{Mesh, Region};
use crate::solver::{newton_solve, Operator, ProblemForm, Solution, SolverOptions, SolverVariable};

/// One accepted continuation sample.
#[derive(Clone, Debug)]
pub struct BranchPoint {
    pub lambda: f64,
    pub u: DiscreteField,
    pub sup_norm: f64,
    /// Cumulative pseudo-arclength (RMS-weighted state plus lambda).
    pub arclength: f64,
    /// Determinant sign of the Jacobian at this point (0 if exactly singular).
    pub jacobian_signature: i8,
    /// Set where the tangent lambda-component or the signature flips.
    pub fold_flag: bool,
    pub residual_norm: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    LambdaBound,
    SupNormCap,
    StepCollapse,
    MaxPoints,
}

/// Step-size and stop-rule controls for a trace.
#[derive(Clone, Debug)]
pub struct StepControls {
    pub initial_step: f64,
    pub min_step: f64,
    pub max_step: f64,
    /// Double the step after this many consecutive easy corrector solves.
    pub grow_after: usize,
    pub max_points: usize,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub sup_norm_cap: f64,
    pub corrector_max_iter: usize,
    pub newton_tol: f64,
}

impl Default for StepControls {
    fn default() -> Self {
        StepControls {
            initial_step: 0.05,
            min_step: 1e-6,
            max_step: 1.0,
            grow_after: 4,
            max_points: 3000,
            lambda_min: f64::NEG_INFINITY,
            lambda_max: f64::INFINITY,
            sup_norm_cap: 1e3,
            corrector_max_iter: 12,
            newton_tol: 1e-10,
        }
    }
}

/// Ordered trace of branch points with its stop diagnosis.
#[derive(Clone, Debug)]
pub struct Branch {
    pub points: Vec<BranchPoint>,
    pub problem: String,
    pub stop: StopReason,
}

impl Branch {
    pub fn lambda_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for p in &self.points {
            lo = lo.min(p.lambda);
            hi = hi.max(p.lambda);
        }
        (lo, hi)
    }

    /// Glues a backward trace and a forward trace that share the start point
    /// into one ordered branch (left reversed, duplicate start dropped),
    /// recomputing cumulative arclength.
    pub fn glue(left: Branch, right: Branch, problem: &str) -> Branch {
        let mut points: Vec<BranchPoint> = left.points.into_iter().rev().collect();
        let mut it = right.points.into_iter();
        let _ = it.next();
        points.extend(it);
        let mut s = 0.0;
        for k in 0..points.len() {
            if k > 0 {
                let m = points[k].u.len() as f64;
                let du2: f64 = points[k]
                    .u
                    .iter()
                    .zip(points[k - 1].u.iter())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    / m;
                let dl = points[k].lambda - points[k - 1].lambda;
                s += (du2 + dl * dl).sqrt();
            }
            points[k].arclength = s;
        }
        Branch { points, problem: problem.into(), stop: right.stop }
    }
}

struct Weighted {
    m: f64,
}

impl Weighted {
    fn dot(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / self.m
    }

    fn norm(&self, a: &[f64], al: f64) -> f64 {
        (self.dot(a, a) + al * al).sqrt()
    }
}

fn interior_sup(mesh: &Mesh, f: &DiscreteField) -> f64 {
    (0..mesh.len())
        .filter(|&i| mesh.is_interior(i))
        .fold(0.0f64, |m, i| m.max(f[i].abs()))
}

/// Traces the branch through `start` in the given lambda direction (`+1.0`
/// or `-1.0`). The corrector works on the plain or modified form according
/// to `form`; folds are flagged as they are crossed.
pub fn trace_branch(
    start: &Solution,
    direction: f64,
    coeffs: &CoefficientSet,
    form: &ProblemForm,
    controls: &StepControls,
) -> Result<Branch> {
    let mesh = coeffs.mesh().clone();
    let op = Operator::new(coeffs, start.lambda, form, SolverVariable::DirectU)?;
    let nodes = op.map.nodes.clone();
    let m = nodes.len();
    let w = Weighted { m: m as f64 };

    let extract = |u: &DiscreteField| -> Vec<f64> { nodes.iter().map(|&i| u[i]).collect() };
    let inject = |vals: &[f64]| -> DiscreteField {
        let mut f = DiscreteField::zeros(mesh.clone());
        for (k, &i) in nodes.iter().enumerate() {
            f[i] = vals[k];
        }
        f
    };

    // tangent via one bordered solve: J t_u = -F_lambda * t_lambda
    let tangent_at = |u: &DiscreteField, lambda: f64, orient: &(Vec<f64>, f64)| -> Result<(Vec<f64>, f64)> {
        let op = Operator::new(coeffs, lambda, form, SolverVariable::DirectU)?;
        let lu = op.assemble_jacobian(u).factor()?;
        let flam = op.dresidual_dlambda(u);
        let rhs: Vec<f64> = nodes.iter().map(|&i| -flam[i]).collect();
        let a = lu.solve(&rhs); // du/dlambda
        let norm = w.norm(&a, 1.0);
        let mut tu: Vec<f64> = a.iter().map(|v| v / norm).collect();
        let mut tl = 1.0 / norm;
        let align = w.dot(&tu, &orient.0) + tl * orient.1;
        if align < 0.0 {
            for v in tu.iter_mut() {
                *v = -*v;
            }
            tl = -tl;
        }
        Ok((tu, tl))
    };

    let signature_of = |u: &DiscreteField, lambda: f64| -> Result<i8> {
        let op = Operator::new(coeffs, lambda, form, SolverVariable::DirectU)?;
        Ok(match op.assemble_jacobian(u).factor() {
            Ok(lu) => lu.det_sign(),
            Err(_) => 0,
        })
    };

    let mut u = start.u.clone();
    let mut lambda = start.lambda;
    let mut arclength = 0.0;
    let mut points = vec![BranchPoint {
        lambda,
        u: u.clone(),
        sup_norm: u.sup_norm(),
        arclength,
        jacobian_signature: signature_of(&u, lambda)?,
        fold_flag: false,
        residual_norm: start.residual_norm,
    }];

    let seed_orient = (vec![0.0; m], direction);
    let mut tangent = tangent_at(&u, lambda, &seed_orient)?;
    let mut step = controls.initial_step;
    let mut easy_streak = 0usize;
    let stop;

    'outer: loop {
        if points.len() >= controls.max_points {
            stop = StopReason::MaxPoints;
            break;
        }
        // predictor; shorten the step so lambda bounds are met, not overshot
        let mut step_eff = step;
        if tangent.1 != 0.0 {
            for bound in [controls.lambda_min, controls.lambda_max] {
                if bound.is_finite() {
                    let needed = (bound - lambda) / tangent.1;
                    if needed > 0.0 && needed < step_eff {
                        step_eff = needed * (1.0 + 1e-9) + 1e-12;
                    }
                }
            }
        }
        let u_vals = extract(&u);
        let pred_u: Vec<f64> =
            u_vals.iter().zip(&tangent.0).map(|(x, t)| x + step_eff * t).collect();
        let pred_l = lambda + step_eff * tangent.1;

        // corrector: Newton on (residual, tangent-plane constraint)
        let mut cu = pred_u.clone();
        let mut cl = pred_l;
        let mut converged = false;
        let mut iterations = 0;
        let mut last_norm = f64::INFINITY;
        for it in 0..controls.corrector_max_iter {
            iterations = it;
            let cu_field = inject(&cu);
            let op = Operator::new(coeffs, cl, form, SolverVariable::DirectU)?;
            let (res, scale) = op.residual_with_scale(&cu_field);
            let rnorm = interior_sup(&mesh, &res);
            let tol_eff = controls.newton_tol.max(32.0 * f64::EPSILON * scale);
            let diff_u: Vec<f64> =
                cu.iter().zip(&pred_u).map(|(a, b)| a - b).collect();
            let constraint = w.dot(&tangent.0, &diff_u) + tangent.1 * (cl - pred_l);
            if rnorm <= tol_eff && constraint.abs() <= 1e-10 * (1.0 + cl.abs()) {
                converged = true;
                last_norm = rnorm;
                break;
            }
            if !rnorm.is_finite() {
                break;
            }
            let lu = match op.assemble_jacobian(&cu_field).factor() {
                Ok(lu) => lu,
                Err(_) => break,
            };
            let neg_r: Vec<f64> = nodes.iter().map(|&i| -res[i]).collect();
            let a = lu.solve(&neg_r);
            let flam = op.dresidual_dlambda(&cu_field);
            let neg_fl: Vec<f64> = nodes.iter().map(|&i| -flam[i]).collect();
            let b = lu.solve(&neg_fl);
            let denom = w.dot(&tangent.0, &b) + tangent.1;
            if denom.abs() < 1e-14 {
                break;
            }
            let dl = -(constraint + w.dot(&tangent.0, &a)) / denom;
            for k in 0..m {
                cu[k] += a[k] + dl * b[k];
            }
            cl += dl;
            last_norm = rnorm;
        }
        let _ = last_norm;
        let _ = iterations;

        if !converged {
            if step <= controls.min_step {
                stop = StopReason::StepCollapse;
                break 'outer;
            }
            step = (step / 2.0).max(controls.min_step);
            easy_streak = 0;
            continue;
        }

        // guard against basin hops: a corrector landing far beyond the step
        // length left the local branch; retry with a shorter step
        let du: Vec<f64> = cu.iter().zip(&u_vals).map(|(a, b)| a - b).collect();
        let moved = w.norm(&du, cl - lambda);
        if moved > 3.0 * step_eff && step > controls.min_step {
            step = (step / 2.0).max(controls.min_step);
            easy_streak = 0;
            continue;
        }

        // accept the point
        let new_u = inject(&cu);
        let new_field = new_u.clone();
        let op = Operator::new(coeffs, cl, form, SolverVariable::DirectU)?;
        let rnorm = interior_sup(&mesh, &op.residual_with_scale(&new_field).0);
        arclength += moved;
        let new_tangent = match tangent_at(&new_u, cl, &tangent) {
            Ok(t) => t,
            Err(_) => {
                // exactly singular Jacobian: reuse the secant direction
                let mut su = du.clone();
                let sl = cl - lambda;
                let n = w.norm(&su, sl);
                for v in su.iter_mut() {
                    *v /= n;
                }
                (su, sl / n)
            }
        };
        let signature = signature_of(&new_u, cl)?;
        let prev_sig = points.last().map(|p| p.jacobian_signature).unwrap_or(0);
        let fold_flag = (new_tangent.1.signum() != tangent.1.signum()
            && tangent.1 != 0.0
            && new_tangent.1 != 0.0)
            || (signature != 0 && prev_sig != 0 && signature != prev_sig);
        let sup_norm = new_u.sup_norm();
        points.push(BranchPoint {
            lambda: cl,
            u: new_u.clone(),
            sup_norm,
            arclength,
            jacobian_signature: signature,
            fold_flag,
            residual_norm: rnorm,
        });

        u = new_u;
        lambda = cl;
        tangent = new_tangent;

        if lambda <= controls.lambda_min || lambda >= controls.lambda_max {
            stop = StopReason::LambdaBound;
            break;
        }
        if sup_norm >= controls.sup_norm_cap {
            stop = StopReason::SupNormCap;
            break;
        }

        easy_streak += 1;
        if easy_streak >= controls.grow_after {
            step = (step * 2.0).min(controls.max_step);
            easy_streak = 0;
        }
    }

    Ok(Branch { points, problem: String::new(), stop })
}

/// Fold location extracted from a traced branch.
#[derive(Clone, Debug)]
pub struct FoldReport {
    /// Refined estimate of the turning-point lambda.
    pub lambda_bar: f64,
    /// Index of the sampled point with maximal lambda.
    pub index: usize,
    /// The neighboring sampled lambdas bracketing the fold.
    pub bracket: (f64, f64),
}

/// Largest lambda over the branch with a quadratic refinement through its
/// neighbors; `None` when lambda is monotone along the branch (no turn).
/// A genuine turn requires lambda to recede on both sides of the maximum by
/// more than a rounding allowance, so a vertical asymptote is not a fold.
pub fn detect_fold(branch: &Branch) -> Option<FoldReport> {
    let n = branch.points.len();
    if n < 3 {
        return None;
    }
    let mut imax = 0;
    for (i, p) in branch.points.iter().enumerate() {
        if p.lambda > branch.points[imax].lambda {
            imax = i;
        }
    }
    if imax == 0 || imax == n - 1 {
        return None;
    }
    let lmax = branch.points[imax].lambda;
    let tol_turn = 1e-6 * (1.0 + lmax.abs());
    let drop_before = lmax
        - branch.points[..imax]
            .iter()
            .map(|p| p.lambda)
            .fold(f64::INFINITY, f64::min);
    let drop_after = lmax
        - branch.points[imax + 1..]
            .iter()
            .map(|p| p.lambda)
            .fold(f64::INFINITY, f64::min);
    if drop_before.min(drop_after) <= tol_turn {
        return None;
    }
    let p0 = &branch.points[imax - 1];
    let p1 = &branch.points[imax];
    let p2 = &branch.points[imax + 1];
    let (s0, f0) = (p0.arclength, p0.lambda);
    let (s1, f1) = (p1.arclength, p1.lambda);
    let (s2, f2) = (p2.arclength, p2.lambda);
    let d1 = (f1 - f0) / (s1 - s0);
    let d2 = (f2 - f1) / (s2 - s1);
    let a = (d2 - d1) / (s2 - s0);
    let lambda_bar = if a < 0.0 {
        let b = d1 - a * (s0 + s1);
        let c = f0 - a * s0 * s0 - b * s0;
        let s_star = -b / (2.0 * a);
        if s_star >= s0 && s_star <= s2 {
            a * s_star * s_star + b * s_star + c
        } else {
            f1
        }
    } else {
        f1
    };
    Some(FoldReport {
        lambda_bar: lambda_bar.max(f1),
        index: imax,
        bracket: (f0.max(f2), lambda_bar.max(f1)),
    })
}

/// All branch crossings of the given lambda, each re-converged by Newton
/// and deduplicated in sup-norm.
pub fn solutions_at(
    branch: &Branch,
    lambda: f64,
    coeffs: &CoefficientSet,
    opts: &SolverOptions,
) -> Result<Vec<Solution>> {
    let (lo, hi) = branch.lambda_range();
    let hi = detect_fold(branch).map(|f| f.lambda_bar).unwrap_or(hi).max(hi);
    if lambda < lo - 1e-12 || lambda > hi + 1e-12 {
        return Err(Error::LambdaOutsideBranch(lambda));
    }
    let mut found: Vec<Solution> = Vec::new();
    let mut failures = 0usize;
    let mut crossings = 0usize;
    for k in 0..branch.points.len().saturating_sub(1) {
        let a = &branch.points[k];
        let b = &branch.points[k + 1];
        let da = a.lambda - lambda;
        let db = b.lambda - lambda;
        if da * db > 0.0 {
            continue;
        }
        if db == 0.0 && k + 2 < branch.points.len() {
            // the node itself is a crossing; let the next segment own it
            continue;
        }
        crossings += 1;
        let theta = if (b.lambda - a.lambda).abs() < 1e-300 {
            0.0
        } else {
            (lambda - a.lambda) / (b.lambda - a.lambda)
        };
        let guess = a.u.add_scaled(theta, &b.u.add_scaled(-1.0, &a.u));
        match newton_solve(&guess, lambda, coeffs, opts) {
            Ok(sol) => {
                let tol = (10.0 * opts.newton_tol).max(1e-9);
                if !found.iter().any(|s| s.u.sup_distance(&sol.u) <= tol) {
                    found.push(sol);
                }
            }
            Err(_) => failures += 1,
        }
    }
    if crossings > 0 && found.is_empty() && failures == crossings {
        return Err(Error::CorrectorFailed(format!(
            "all {crossings} crossings failed to re-converge at lambda {lambda}"
        )));
    }
    found.sort_by(|a, b| a.sup_norm().partial_cmp(&b.sup_norm()).unwrap());
    Ok(found)
}

/// Outcome of the nonexistence-threshold computation.
#[derive(Clone, Debug)]
pub struct ThresholdReport {
    /// No solution with `u >= u0` on the ball can exist beyond this lambda.
    pub lambda_upper: f64,
    /// First eigenvalue of `-lap(phi) = gamma * min(c_plus, 1) * phi` on the ball.
    pub gamma1: f64,
    /// The positive eigenfunction (zero outside the ball), sup-normalized.
    pub phi: DiscreteField,
    /// Discrete boundary pairing of `u0` with the eigenfunction flux.
    pub boundary_term: f64,
    /// Weighted negative-source mass on the ball.
    pub h_minus_term: f64,
    /// `sum c_plus * phi * u0` over the ball (positive by hypothesis).
    pub pairing: f64,
}

/// Threshold from the first weighted eigenvalue on a ball where the data is
/// signed suitably: testing the equation against the eigenfunction bounds
/// every solution above `u0`, so the branch cannot extend past the result.
pub fn nonexistence_threshold(
    coeffs: &CoefficientSet,
    ball: &Region,
    u0: &DiscreteField,
) -> Result<ThresholdReport> {
    let mesh: &Arc<Mesh> = coeffs.mesh();
    let (center, radius) = match *ball {
        Region::Ball { center, radius } => (center, radius),
        _ => return Err(Error::Hypothesis("threshold needs an interior ball region".into())),
    };
    if !mesh.ball_inside(center, radius) {
        return Err(Error::Geometry(format!(
            "ball of radius {radius} at {center:?} is not inside the domain"
        )));
    }
    let nodes = mesh.region_indices(ball);
    if nodes.is_empty() {
        return Err(Error::Geometry("ball contains no mesh nodes".into()));
    }
    for &i in &nodes {
        if coeffs.c_minus[i] != 0.0 {
            return Err(Error::Hypothesis(format!("c_minus does not vanish at node {i}")));
        }
        if coeffs.mu[i] < 0.0 {
            return Err(Error::Hypothesis(format!("mu is negative at node {i}")));
        }
        if coeffs.c_plus[i] * u0[i] < -1e-12 {
            return Err(Error::Hypothesis(format!("c_plus*u0 is negative at node {i}")));
        }
    }

    let cbar = coeffs.c_plus.map(|v| v.min(1.0));
    let (gamma1, phi) = first_eigenpair(mesh, &nodes, &cbar)?;

    let pairing: f64 = nodes
        .iter()
        .map(|&i| coeffs.c_plus[i] * phi[i] * u0[i] * mesh.cell_volume(i))
        .sum();
    if !(pairing > 0.0) {
        return Err(Error::Hypothesis(format!(
            "the pairing sum c_plus*phi*u0 = {pairing:.3e} is not positive on the ball"
        )));
    }

    // discrete analogue of the boundary flux integral of u0 against phi
    let [nx, _] = mesh.shape();
    let hx = mesh.spacing()[0];
    let hy = mesh.spacing()[1];
    let in_ball = {
        let mut mask = vec![false; mesh.len()];
        for &i in &nodes {
            mask[i] = true;
        }
        mask
    };
    let mut boundary_term = 0.0;
    for &i in &nodes {
        let (ix, iy) = mesh.grid_coords(i);
        let vol = mesh.cell_volume(i);
        let mut pair = |j: usize, h: f64| {
            if !in_ball[j] {
                boundary_term -= u0[j] * phi[i] * vol / (h * h);
            }
        };
        if ix > 0 {
            pair(i - 1, hx);
        }
        if ix + 1 < nx {
            pair(i + 1, hx);
        }
        if mesh.dim() == 2 {
            let ny = mesh.shape()[1];
            if iy > 0 {
                pair(i - nx, hy);
            }
            if iy + 1 < ny {
                pair(i + nx, hy);
            }
        }
    }

    let h_minus_term: f64 = nodes
        .iter()
        .map(|&i| (-coeffs.h[i]).max(0.0) * phi[i] * mesh.cell_volume(i))
        .sum();
    let d_const = h_minus_term + boundary_term;
    let lambda_upper = gamma1 + d_const.max(0.0) / pairing;
    Ok(ThresholdReport { lambda_upper, gamma1, phi, boundary_term, h_minus_term, pairing })
}
