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
    println!("points={} stop={:?}", branch.points.len(), branch.stop);
    let mut last_x = -1.0;
    for (k, p) in branch.points.iter().enumerate() {
        let mut imax = 0;
        for i in 0..p.u.len() { if p.u[i] > p.u[imax] { imax = i; } }
        let x = mesh.position(imax)[0];
        if (x - last_x).abs() > 0.02 || k + 3 > branch.points.len() || k % 25 == 0 {
            println!("{k:4}: lam={:10.4} sup={:8.4} argmax_x={:.4} s={:.3}", p.lambda, p.sup_norm, x, p.arclength);
            last_x = x;
        }
    }
}
