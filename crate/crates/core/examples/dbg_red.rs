use ellq_core::*;
use ellq_core::continuation::*;

fn main() {
    let spec = builtin("1d-basic").unwrap();
    let mesh = spec.mesh(257).unwrap();
    let coeffs = spec.coefficients(&mesh).unwrap();
    let u0 = newton_solve(&DiscreteField::zeros(mesh.clone()), 0.0, &coeffs, &SolverOptions::default()).unwrap();
    let form = ProblemForm::Modified { u0: u0.u.clone() };
    let controls = StepControls { lambda_min: -0.01, sup_norm_cap: 20.0, max_step: 0.5, max_points: 4000, ..Default::default() };
    let branch = trace_branch(&u0, 1.0, &coeffs, &form, &controls).unwrap();
    println!("points={} stop={:?} range={:?}", branch.points.len(), branch.stop, branch.lambda_range());
    let top = branch.lambda_range().1;
    for p in &branch.points {
        if p.lambda >= 0.1*top && p.lambda <= top {
            let red = certify::check_omega_plus_reduction(&p.u, &u0.u, &coeffs);
            if !red.all_ok() {
                println!("FAIL at lambda={:.4} sup={:.4} res={:.2e}: upper_ex={:.3e} lower_ex={:.3e} sup_plus={:.4} sup_minus={:.4}",
                    p.lambda, p.sup_norm, p.residual_norm, red.max_upper_excess, red.max_lower_excess,
                    red.sup_plus_on_support, red.sup_minus_on_support);
                // where is the global max/min?
                let mut imax = 0; let mut imin = 0;
                for i in 0..p.u.len() { if p.u[i] > p.u[imax] { imax = i; } if p.u[i] < p.u[imin] { imin = i; } }
                println!("  max u = {:.4} at x = {:.4}; min u = {:.4} at x = {:.4}",
                    p.u[imax], mesh.position(imax)[0], p.u[imin], mesh.position(imin)[0]);
                let r = residual_form(&p.u, p.lambda, &coeffs, &form);
                println!("  modified-form residual sup = {:.2e}; plain residual sup = {:.2e}",
                    r.sup_norm(), residual(&p.u, p.lambda, &coeffs).sup_norm());
                let below = u0.u.max_diff(&p.u);
                println!("  u0 - u max = {:.3e}", below);
                break;
            }
        }
    }
}
