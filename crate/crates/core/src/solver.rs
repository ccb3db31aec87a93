//! Finite-difference discretization and damped Newton solvers for
//!
//! ```text
//! -lap(u) = (lambda*c_plus - c_minus)*u + mu*|grad u|^2 + h,   u = 0 on the boundary,
//! ```
//!
//! its order-preserving modification (the `(u - u0)^+ + u0` substitution with
//! the `+u`, `+1` shifts), the exponential change of variable
//! `w = (exp(mu2*u) - 1)/mu2`, and the conservative-flux p-Laplacian used by
//! the inequality suites.
//!
//! The Laplacian is the standard second-order stencil; `|grad u|^2` uses
//! centered differences at interior nodes (one-sided second-order stencils
//! fill in gradient values on the boundary itself).

use std::sync::Arc;

use crate::band::{BandLu, BandMatrix};
use crate::coefficients::CoefficientSet;
use crate::error::{Error, Result};
use crate::field::DiscreteField;
use crate::mesh::Mesh;

/// Width of the C^1 ramp smoothing the positive-part kink in the modified form.
pub const RAMP_WIDTH: f64 = 1e-6;
/// Armijo sufficient-decrease constant for the residual backtracking line search.
const ARMIJO: f64 = 1e-4;
/// Absolute tolerance for the discrete lower/upper-solution inequalities.
pub const ORDER_TOL: f64 = 1e-8;

/// Equation being solved: the original problem or the order-preserving
/// modification that pins solutions above `u0`.
#[derive(Clone, Debug)]
pub enum ProblemForm {
    Plain,
    Modified { u0: DiscreteField },
}

/// Iteration variable: the solution itself or its exponential transform.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverVariable {
    DirectU,
    ColeHopf,
}

#[derive(Clone, Debug)]
pub struct SolverOptions {
    /// Residual sup-norm threshold (absolute; scaled up only when the terms
    /// themselves dwarf it in floating point).
    pub newton_tol: f64,
    pub max_iter: usize,
    /// Backtracking factor in (0, 1).
    pub damping: f64,
    pub variable: SolverVariable,
    pub form: ProblemForm,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            newton_tol: 1e-10,
            max_iter: 50,
            damping: 0.5,
            variable: SolverVariable::DirectU,
            form: ProblemForm::Plain,
        }
    }
}

/// Converged state returned by the Newton drivers.
#[derive(Clone, Debug)]
pub struct Solution {
    pub u: DiscreteField,
    /// Transform iterate when solved in the Cole-Hopf variable.
    pub w: Option<DiscreteField>,
    pub lambda: f64,
    /// Sup-norm residual of the equation actually iterated (u-form or w-form).
    pub residual_norm: f64,
    pub newton_iterations: usize,
    /// Determinant sign of the final Jacobian; 0 when exactly singular.
    pub jacobian_signature: i8,
    pub variable: SolverVariable,
}

impl Solution {
    pub fn sup_norm(&self) -> f64 {
        self.u.sup_norm()
    }
}

// ---------------------------------------------------------------------------
// Dirichlet numbering and shared linear assembly

/// Maps a set of stencil unknowns (a subset of mesh nodes) to consecutive
/// indices; every node outside the set acts as homogeneous Dirichlet data.
#[derive(Clone, Debug)]
pub(crate) struct DirichletMap {
    pub nodes: Vec<usize>,
    pub unknown_of: Vec<i64>,
    pub bandwidth: usize,
}

impl DirichletMap {
    pub fn new(mesh: &Mesh, nodes: Vec<usize>) -> Self {
        let mut unknown_of = vec![-1i64; mesh.len()];
        for (k, &i) in nodes.iter().enumerate() {
            unknown_of[i] = k as i64;
        }
        let mut bandwidth = 0usize;
        let [nx, _] = mesh.shape();
        for (k, &i) in nodes.iter().enumerate() {
            for j in neighbor_nodes(mesh, i, nx) {
                let o = unknown_of[j];
                if o >= 0 {
                    bandwidth = bandwidth.max(k.abs_diff(o as usize));
                }
            }
        }
        DirichletMap { nodes, unknown_of, bandwidth }
    }

    pub fn interior(mesh: &Mesh) -> Self {
        Self::new(mesh, mesh.interior_indices())
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }
}

fn neighbor_nodes(mesh: &Mesh, i: usize, nx: usize) -> Vec<usize> {
    let (ix, iy) = mesh.grid_coords(i);
    let mut out = Vec::with_capacity(4);
    if ix > 0 {
        out.push(i - 1);
    }
    if ix + 1 < nx {
        out.push(i + 1);
    }
    if mesh.dim() == 2 {
        let ny = mesh.shape()[1];
        if iy > 0 {
            out.push(i - nx);
        }
        if iy + 1 < ny {
            out.push(i + nx);
        }
    }
    out
}

/// Assembles `-lap + diag(a)` over the unknowns of `map`.
pub(crate) fn assemble_reaction(
    mesh: &Mesh,
    map: &DirichletMap,
    a: impl Fn(usize) -> f64,
) -> BandMatrix {
    let [nx, _] = mesh.shape();
    let hx = mesh.spacing()[0];
    let hy = mesh.spacing()[1];
    let mut mat = BandMatrix::new(map.len(), map.bandwidth, map.bandwidth);
    for (k, &i) in map.nodes.iter().enumerate() {
        let mut diag = 2.0 / (hx * hx) + a(i);
        if mesh.dim() == 2 {
            diag += 2.0 / (hy * hy);
        }
        mat.set(k, k, diag);
        let (ix, iy) = mesh.grid_coords(i);
        let mut link = |j: usize, coeff: f64| {
            let o = map.unknown_of[j];
            if o >= 0 {
                mat.set(k, o as usize, coeff);
            }
        };
        if ix > 0 {
            link(i - 1, -1.0 / (hx * hx));
        }
        if ix + 1 < nx {
            link(i + 1, -1.0 / (hx * hx));
        }
        if mesh.dim() == 2 {
            let ny = mesh.shape()[1];
            if iy > 0 {
                link(i - nx, -1.0 / (hy * hy));
            }
            if iy + 1 < ny {
                link(i + nx, -1.0 / (hy * hy));
            }
        }
    }
    mat
}

/// Solves `(-lap + diag(a)) v = rhs` with `v = 0` outside `nodes`;
/// the returned field is zero there.
pub fn solve_linear_reaction(
    mesh: &Arc<Mesh>,
    nodes: &[usize],
    a: &DiscreteField,
    rhs: &DiscreteField,
) -> Result<DiscreteField> {
    let map = DirichletMap::new(mesh, nodes.to_vec());
    let mat = assemble_reaction(mesh, &map, |i| a[i]);
    let lu = mat.factor()?;
    let b: Vec<f64> = map.nodes.iter().map(|&i| rhs[i]).collect();
    let x = lu.solve(&b);
    let mut out = DiscreteField::zeros(mesh.clone());
    for (k, &i) in map.nodes.iter().enumerate() {
        out[i] = x[k];
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Gradients

#[inline]
fn centered_gradient(mesh: &Mesh, u: &DiscreteField, i: usize) -> (f64, f64) {
    let [nx, _] = mesh.shape();
    let hx = mesh.spacing()[0];
    let gx = (u[i + 1] - u[i - 1]) / (2.0 * hx);
    if mesh.dim() == 1 {
        (gx, 0.0)
    } else {
        let hy = mesh.spacing()[1];
        (gx, (u[i + nx] - u[i - nx]) / (2.0 * hy))
    }
}

fn one_sided_axis(u: &DiscreteField, i: usize, stride: usize, pos: usize, n: usize, h: f64) -> f64 {
    if pos == 0 {
        (-3.0 * u[i] + 4.0 * u[i + stride] - u[i + 2 * stride]) / (2.0 * h)
    } else if pos == n - 1 {
        (3.0 * u[i] - 4.0 * u[i - stride] + u[i - 2 * stride]) / (2.0 * h)
    } else {
        (u[i + stride] - u[i - stride]) / (2.0 * h)
    }
}

/// `|grad u|^2` nodewise: centered differences at interior nodes, one-sided
/// second-order stencils on the boundary.
pub fn gradient_squared(u: &DiscreteField) -> DiscreteField {
    let mesh = u.mesh().clone();
    let [nx, ny] = mesh.shape();
    let hx = mesh.spacing()[0];
    let hy = mesh.spacing()[1];
    DiscreteField::from_values(
        mesh.clone(),
        (0..mesh.len())
            .map(|i| {
                let (ix, iy) = mesh.grid_coords(i);
                let gx = one_sided_axis(u, i, 1, ix, nx, hx);
                let gy = if mesh.dim() == 2 {
                    one_sided_axis(u, i, nx, iy, ny, hy)
                } else {
                    0.0
                };
                gx * gx + gy * gy
            })
            .collect(),
    )
    .expect("sized to mesh")
}

// ---------------------------------------------------------------------------
// The discrete operator in both variables

fn ramp(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t < RAMP_WIDTH {
        t * t / (2.0 * RAMP_WIDTH)
    } else {
        t - RAMP_WIDTH / 2.0
    }
}

fn ramp_prime(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t < RAMP_WIDTH {
        t / RAMP_WIDTH
    } else {
        1.0
    }
}

pub(crate) struct Operator<'a> {
    pub coeffs: &'a CoefficientSet,
    pub lambda: f64,
    pub form: &'a ProblemForm,
    pub variable: SolverVariable,
    pub map: DirichletMap,
}

impl<'a> Operator<'a> {
    pub fn new(
        coeffs: &'a CoefficientSet,
        lambda: f64,
        form: &'a ProblemForm,
        variable: SolverVariable,
    ) -> Result<Self> {
        if variable == SolverVariable::ColeHopf {
            if let ProblemForm::Modified { .. } = form {
                return Err(Error::Hypothesis(
                    "the transform variable supports the plain form only".into(),
                ));
            }
            if !(coeffs.mu2 > 0.0) {
                return Err(Error::Hypothesis(format!(
                    "transform variable needs max mu > 0, got {}",
                    coeffs.mu2
                )));
            }
        }
        let map = DirichletMap::interior(coeffs.mesh());
        Ok(Operator { coeffs, lambda, form, variable, map })
    }

    fn mesh(&self) -> &Arc<Mesh> {
        self.coeffs.mesh()
    }

    /// True while the state stays in the operator's domain.
    pub fn admissible(&self, state: &DiscreteField) -> bool {
        match self.variable {
            SolverVariable::DirectU => true,
            SolverVariable::ColeHopf => {
                let mu2 = self.coeffs.mu2;
                state.iter().all(|&w| 1.0 + mu2 * w > 0.0)
            }
        }
    }

    /// Residual field (zero at boundary nodes) and the sup of the raw term
    /// magnitudes, used to detect when `newton_tol` sits below roundoff.
    pub fn residual_with_scale(&self, state: &DiscreteField) -> (DiscreteField, f64) {
        let mesh = self.mesh();
        let c = self.coeffs;
        let lam = self.lambda;
        let mut out = DiscreteField::zeros(mesh.clone());
        let mut scale = 0.0f64;
        let [nx, _] = mesh.shape();
        let hx = mesh.spacing()[0];
        let hy = mesh.spacing()[1];
        for &i in &self.map.nodes {
            let mut lap = (2.0 * state[i] - state[i - 1] - state[i + 1]) / (hx * hx);
            if mesh.dim() == 2 {
                lap += (2.0 * state[i] - state[i - nx] - state[i + nx]) / (hy * hy);
            }
            let (gx, gy) = centered_gradient(mesh, state, i);
            let grad2 = gx * gx + gy * gy;
            let (r, s) = match self.variable {
                SolverVariable::DirectU => {
                    let m = lam * c.c_plus[i] - c.c_minus[i];
                    match self.form {
                        ProblemForm::Plain => {
                            let r = lap - m * state[i] - c.mu[i] * grad2 - c.h[i];
                            let s = lap.abs()
                                + (m * state[i]).abs()
                                + (c.mu[i] * grad2).abs()
                                + c.h[i].abs();
                            (r, s)
                        }
                        ProblemForm::Modified { u0 } => {
                            let mbar = m + 1.0;
                            let shifted = ramp(state[i] - u0[i]) + u0[i];
                            let r = lap + state[i] - mbar * shifted - c.mu[i] * grad2 - c.h[i];
                            let s = lap.abs()
                                + state[i].abs()
                                + (mbar * shifted).abs()
                                + (c.mu[i] * grad2).abs()
                                + c.h[i].abs();
                            (r, s)
                        }
                    }
                }
                SolverVariable::ColeHopf => {
                    let mu2 = c.mu2;
                    let m = lam * c.c_plus[i] - c.c_minus[i];
                    let e = 1.0 + mu2 * state[i]; // = exp(mu2 u) > 0
                    let g = e.ln() / mu2; // back-transformed u
                    let q = (c.mu[i] - mu2) / e;
                    let r = lap - e * (m * g + c.h[i]) - q * grad2;
                    let s = lap.abs() + (e * (m * g + c.h[i])).abs() + (q * grad2).abs();
                    (r, s)
                }
            };
            out[i] = r;
            scale = scale.max(s);
        }
        (out, scale)
    }

    /// Exact Jacobian of the residual with respect to the interior unknowns.
    pub fn assemble_jacobian(&self, state: &DiscreteField) -> BandMatrix {
        let mesh = self.mesh();
        let c = self.coeffs;
        let lam = self.lambda;
        let [nx, _] = mesh.shape();
        let hx = mesh.spacing()[0];
        let hy = mesh.spacing()[1];
        let mut mat = BandMatrix::new(self.map.len(), self.map.bandwidth, self.map.bandwidth);
        for (k, &i) in self.map.nodes.iter().enumerate() {
            let (gx, gy) = centered_gradient(mesh, state, i);
            let grad2 = gx * gx + gy * gy;
            let mut lap_diag = 2.0 / (hx * hx);
            if mesh.dim() == 2 {
                lap_diag += 2.0 / (hy * hy);
            }
            // gradient coupling factor in front of `(grad state . grad delta)`
            let (diag_extra, grad_coeff) = match self.variable {
                SolverVariable::DirectU => {
                    let m = lam * c.c_plus[i] - c.c_minus[i];
                    match self.form {
                        ProblemForm::Plain => (-m, c.mu[i]),
                        ProblemForm::Modified { u0 } => {
                            let mbar = m + 1.0;
                            (1.0 - mbar * ramp_prime(state[i] - u0[i]), c.mu[i])
                        }
                    }
                }
                SolverVariable::ColeHopf => {
                    let mu2 = c.mu2;
                    let m = lam * c.c_plus[i] - c.c_minus[i];
                    let e = 1.0 + mu2 * state[i];
                    let g = e.ln() / mu2;
                    let d = -(mu2 * (m * g + c.h[i]) + m)
                        + mu2 * (c.mu[i] - mu2) * grad2 / (e * e);
                    (d, (c.mu[i] - mu2) / e)
                }
            };
            mat.set(k, k, lap_diag + diag_extra);
            let (ix, iy) = mesh.grid_coords(i);
            let mut link = |j: usize, v: f64| {
                let o = self.map.unknown_of[j];
                if o >= 0 {
                    mat.set(k, o as usize, v);
                }
            };
            // east/west: -1/hx^2 -+ grad_coeff*gx/hx (from d(grad2)/du)
            if ix > 0 {
                link(i - 1, -1.0 / (hx * hx) + grad_coeff * gx / hx);
            }
            if ix + 1 < nx {
                link(i + 1, -1.0 / (hx * hx) - grad_coeff * gx / hx);
            }
            if mesh.dim() == 2 {
                let ny = mesh.shape()[1];
                if iy > 0 {
                    link(i - nx, -1.0 / (hy * hy) + grad_coeff * gy / hy);
                }
                if iy + 1 < ny {
                    link(i + nx, -1.0 / (hy * hy) - grad_coeff * gy / hy);
                }
            }
        }
        mat
    }

    /// Derivative of the residual with respect to lambda.
    pub fn dresidual_dlambda(&self, state: &DiscreteField) -> DiscreteField {
        let mesh = self.mesh();
        let c = self.coeffs;
        let mut out = DiscreteField::zeros(mesh.clone());
        for &i in &self.map.nodes {
            out[i] = match self.variable {
                SolverVariable::DirectU => match self.form {
                    ProblemForm::Plain => -c.c_plus[i] * state[i],
                    ProblemForm::Modified { u0 } => {
                        -c.c_plus[i] * (ramp(state[i] - u0[i]) + u0[i])
                    }
                },
                SolverVariable::ColeHopf => {
                    let mu2 = c.mu2;
                    let e = 1.0 + mu2 * state[i];
                    -e * c.c_plus[i] * e.ln() / mu2
                }
            };
        }
        out
    }
}

fn interior_sup(mesh: &Mesh, f: &DiscreteField) -> f64 {
    (0..mesh.len())
        .filter(|&i| mesh.is_interior(i))
        .fold(0.0f64, |m, i| m.max(f[i].abs()))
}

// ---------------------------------------------------------------------------
// Public residual / Jacobian entry points (direct variable)

/// Residual of the plain problem at `u`; zero at boundary nodes.
pub fn residual(u: &DiscreteField, lambda: f64, coeffs: &CoefficientSet) -> DiscreteField {
    residual_form(u, lambda, coeffs, &ProblemForm::Plain)
}

pub fn residual_form(
    u: &DiscreteField,
    lambda: f64,
    coeffs: &CoefficientSet,
    form: &ProblemForm,
) -> DiscreteField {
    let op = Operator::new(coeffs, lambda, form, SolverVariable::DirectU)
        .expect("direct variable is always valid");
    op.residual_with_scale(u).0
}

/// Assembled Jacobian over the interior unknowns plus the node numbering.
pub struct JacobianOperator {
    pub matrix: BandMatrix,
    pub nodes: Vec<usize>,
    mesh: Arc<Mesh>,
}

impl JacobianOperator {
    /// Applies the Jacobian to a full-mesh field (boundary entries ignored).
    pub fn apply(&self, delta: &DiscreteField) -> DiscreteField {
        let x: Vec<f64> = self.nodes.iter().map(|&i| delta[i]).collect();
        let y = self.matrix.matvec(&x);
        let mut out = DiscreteField::zeros(self.mesh.clone());
        for (k, &i) in self.nodes.iter().enumerate() {
            out[i] = y[k];
        }
        out
    }

    pub fn factor(self) -> Result<BandLu> {
        self.matrix.factor()
    }
}

pub fn jacobian(u: &DiscreteField, lambda: f64, coeffs: &CoefficientSet) -> JacobianOperator {
    jacobian_form(u, lambda, coeffs, &ProblemForm::Plain)
}

pub fn jacobian_form(
    u: &DiscreteField,
    lambda: f64,
    coeffs: &CoefficientSet,
    form: &ProblemForm,
) -> JacobianOperator {
    let op = Operator::new(coeffs, lambda, form, SolverVariable::DirectU)
        .expect("direct variable is always valid");
    JacobianOperator {
        matrix: op.assemble_jacobian(u),
        nodes: op.map.nodes.clone(),
        mesh: coeffs.mesh().clone(),
    }
}

// ---------------------------------------------------------------------------
// Newton driver

struct NewtonOutcome {
    state: DiscreteField,
    residual_norm: f64,
    iterations: usize,
    signature: i8,
}

fn newton_iterate(op: &Operator, start: DiscreteField, opts: &SolverOptions) -> Result<NewtonOutcome> {
    let mesh = op.mesh().clone();
    let mut state = start.zero_boundary();
    if !op.admissible(&state) {
        let mu2 = op.coeffs.mu2;
        let bad: Vec<usize> =
            (0..state.len()).filter(|&i| 1.0 + mu2 * state[i] <= 0.0).collect();
        return Err(Error::TransformDomain { count: bad.len(), first: bad[0] });
    }
    let (mut res, mut scale) = op.residual_with_scale(&state);
    let mut norm = interior_sup(&mesh, &res);

    for iter in 0..opts.max_iter {
        // `newton_tol` is absolute; floating point caps what is achievable
        // once the individual terms are large, so loosen only past that cap.
        let tol_eff = opts.newton_tol.max(32.0 * f64::EPSILON * scale);
        if norm <= tol_eff {
            let signature = match op.assemble_jacobian(&state).factor() {
                Ok(lu) => lu.det_sign(),
                Err(_) => 0,
            };
            return Ok(NewtonOutcome { state, residual_norm: norm, iterations: iter, signature });
        }

        let lu = op.assemble_jacobian(&state).factor()?;
        let rhs: Vec<f64> = op.map.nodes.iter().map(|&i| -res[i]).collect();
        let step = lu.solve(&rhs);

        let mut t = 1.0;
        let mut accepted = false;
        while t >= 1e-14 {
            let mut candidate = state.clone();
            for (k, &i) in op.map.nodes.iter().enumerate() {
                candidate[i] += t * step[k];
            }
            if op.admissible(&candidate) {
                let (cres, cscale) = op.residual_with_scale(&candidate);
                let cnorm = interior_sup(&mesh, &cres);
                if cnorm <= (1.0 - ARMIJO * t) * norm {
                    state = candidate;
                    res = cres;
                    scale = cscale;
                    norm = cnorm;
                    accepted = true;
                    break;
                }
            }
            t *= opts.damping;
        }
        if !accepted {
            return Err(Error::LineSearchFailed { iteration: iter, residual: norm });
        }
    }

    let tol_eff = opts.newton_tol.max(32.0 * f64::EPSILON * scale);
    if norm <= tol_eff {
        let signature = match op.assemble_jacobian(&state).factor() {
            Ok(lu) => lu.det_sign(),
            Err(_) => 0,
        };
        return Ok(NewtonOutcome {
            state,
            residual_norm: norm,
            iterations: opts.max_iter,
            signature,
        });
    }
    Err(Error::NewtonDiverged { iterations: opts.max_iter, residual: norm })
}

/// Damped Newton for the nonlinear problem at parameter `lambda`.
///
/// Boundary values of `u0` are ignored; the solution carries homogeneous
/// Dirichlet data. In the transform variable the iteration runs on
/// `w = (exp(mu2*u) - 1)/mu2` and maps back.
pub fn newton_solve(
    u0: &DiscreteField,
    lambda: f64,
    coeffs: &CoefficientSet,
    opts: &SolverOptions,
) -> Result<Solution> {
    match opts.variable {
        SolverVariable::DirectU => {
            let op = Operator::new(coeffs, lambda, &opts.form, SolverVariable::DirectU)?;
            let out = newton_iterate(&op, u0.clone(), opts)?;
            Ok(Solution {
                u: out.state,
                w: None,
                lambda,
                residual_norm: out.residual_norm,
                newton_iterations: out.iterations,
                jacobian_signature: out.signature,
                variable: SolverVariable::DirectU,
            })
        }
        SolverVariable::ColeHopf => {
            let op = Operator::new(coeffs, lambda, &opts.form, SolverVariable::ColeHopf)?;
            let w0 = cole_hopf_forward(&u0.clone().zero_boundary(), coeffs.mu2)?;
            let out = newton_iterate(&op, w0, opts)?;
            let u = cole_hopf_inverse(&out.state, coeffs.mu2)?;
            Ok(Solution {
                u,
                w: Some(out.state),
                lambda,
                residual_norm: out.residual_norm,
                newton_iterations: out.iterations,
                jacobian_signature: out.signature,
                variable: SolverVariable::ColeHopf,
            })
        }
    }
}

// ---------------------------------------------------------------------------
// Exponential transform

/// `w = (exp(mu_i * u) - 1)/mu_i` nodewise; guards against overflow.
pub fn cole_hopf_forward(u: &DiscreteField, mu_i: f64) -> Result<DiscreteField> {
    if !(mu_i > 0.0) {
        return Err(Error::Hypothesis(format!("transform needs mu_i > 0, got {mu_i}")));
    }
    for (i, &v) in u.iter().enumerate() {
        if mu_i * v > 700.0 {
            return Err(Error::Hypothesis(format!(
                "transform overflow: mu_i*u = {:.3e} > 700 at node {i}",
                mu_i * v
            )));
        }
    }
    Ok(u.map(|v| ((mu_i * v).exp() - 1.0) / mu_i))
}

/// `u = ln(1 + mu_i * w)/mu_i` nodewise; every node must satisfy `1 + mu_i*w > 0`.
pub fn cole_hopf_inverse(w: &DiscreteField, mu_i: f64) -> Result<DiscreteField> {
    if !(mu_i > 0.0) {
        return Err(Error::Hypothesis(format!("transform needs mu_i > 0, got {mu_i}")));
    }
    let bad: Vec<usize> =
        (0..w.len()).filter(|&i| 1.0 + mu_i * w[i] <= 0.0).collect();
    if !bad.is_empty() {
        return Err(Error::TransformDomain { count: bad.len(), first: bad[0] });
    }
    Ok(w.map(|v| (1.0 + mu_i * v).ln() / mu_i))
}

// ---------------------------------------------------------------------------
// Discrete lower/upper solutions (testing against nonnegative nodal hats
// reduces the weak inequalities to pointwise residual signs)

#[derive(Clone, Debug)]
pub struct OrderedSolutionCheck {
    pub satisfied: bool,
    /// Interior nodes where the residual sign condition fails, with excess.
    pub interior_violations: Vec<(usize, f64)>,
    /// Boundary nodes with the wrong sign, with excess.
    pub boundary_violations: Vec<(usize, f64)>,
    pub tol: f64,
}

fn check_ordered(
    v: &DiscreteField,
    lambda: f64,
    coeffs: &CoefficientSet,
    tol: f64,
    lower: bool,
) -> OrderedSolutionCheck {
    let mesh = v.mesh().clone();
    let res = residual(v, lambda, coeffs);
    let mut interior_violations = Vec::new();
    let mut boundary_violations = Vec::new();
    for i in 0..mesh.len() {
        if mesh.is_interior(i) {
            let excess = if lower { res[i] } else { -res[i] };
            if excess > tol {
                interior_violations.push((i, excess));
            }
        } else {
            let excess = if lower { v[i] } else { -v[i] };
            if excess > tol {
                boundary_violations.push((i, excess));
            }
        }
    }
    OrderedSolutionCheck {
        satisfied: interior_violations.is_empty() && boundary_violations.is_empty(),
        interior_violations,
        boundary_violations,
        tol,
    }
}

/// Lower solution: residual <= tol at interior nodes and `alpha <= tol` on the boundary.
pub fn check_lower_solution(
    alpha: &DiscreteField,
    lambda: f64,
    coeffs: &CoefficientSet,
    tol: f64,
) -> OrderedSolutionCheck {
    check_ordered(alpha, lambda, coeffs, tol, true)
}

/// Upper solution: residual >= -tol at interior nodes and `beta >= -tol` on the boundary.
pub fn check_upper_solution(
    beta: &DiscreteField,
    lambda: f64,
    coeffs: &CoefficientSet,
    tol: f64,
) -> OrderedSolutionCheck {
    check_ordered(beta, lambda, coeffs, tol, false)
}

// ---------------------------------------------------------------------------
// Monotone iteration between an ordered pair

/// Newton iteration from both ends of a verified lower/upper pair with an
/// ordering projection; the two limits must agree.
pub fn monotone_iterate(
    alpha: &DiscreteField,
    beta: &DiscreteField,
    lambda: f64,
    coeffs: &CoefficientSet,
    opts: &SolverOptions,
) -> Result<Solution> {
    if lambda > 0.0 {
        return Err(Error::Hypothesis(format!(
            "monotone iteration applies for lambda <= 0, got {lambda}"
        )));
    }
    let gap = alpha.max_diff(beta);
    if gap > ORDER_TOL {
        return Err(Error::OrderingLost(format!(
            "alpha exceeds beta by {gap:.3e} before iterating"
        )));
    }
    let lower = check_lower_solution(alpha, lambda, coeffs, ORDER_TOL);
    if !lower.satisfied {
        return Err(Error::Hypothesis(format!(
            "alpha is not a lower solution ({} interior, {} boundary violations)",
            lower.interior_violations.len(),
            lower.boundary_violations.len()
        )));
    }
    let upper = check_upper_solution(beta, lambda, coeffs, ORDER_TOL);
    if !upper.satisfied {
        return Err(Error::Hypothesis(format!(
            "beta is not an upper solution ({} interior, {} boundary violations)",
            upper.interior_violations.len(),
            upper.boundary_violations.len()
        )));
    }

    let run_from = |start: &DiscreteField| -> Result<Solution> {
        // project the start into the sandwich, then solve
        let projected = start.clamp_between(alpha, beta).zero_boundary();
        newton_solve(&projected, lambda, coeffs, opts)
    };
    let from_beta = run_from(beta)?;
    let from_alpha = run_from(alpha)?;

    let split = from_alpha.u.sup_distance(&from_beta.u);
    let agree_tol = (100.0 * opts.newton_tol).max(1e-12 * (1.0 + beta.sup_norm()));
    if split > agree_tol {
        return Err(Error::OrderingLost(format!(
            "iterations from alpha and beta disagree by {split:.3e}"
        )));
    }
    let below = alpha.max_diff(&from_beta.u); // alpha - u <= tol
    let above = from_beta.u.max_diff(beta); // u - beta <= tol
    if below > ORDER_TOL || above > ORDER_TOL {
        return Err(Error::OrderingLost(format!(
            "solution escapes the sandwich (below by {below:.3e}, above by {above:.3e})"
        )));
    }
    Ok(from_beta)
}

// ---------------------------------------------------------------------------
// p-Laplacian residual and solves (conservative flux form)

#[inline]
fn flux(p: f64, d: f64) -> f64 {
    // |d|^(p-2) d = sign(d) |d|^(p-1); no singularity for p > 1
    d.signum() * d.abs().powf(p - 1.0)
}

#[inline]
fn weighted(p: f64, mag2: f64, d: f64) -> f64 {
    if mag2 == 0.0 {
        // |grad| = 0 forces d = 0; the flux vanishes for p > 1
        0.0
    } else {
        mag2.powf((p - 2.0) / 2.0) * d
    }
}

#[inline]
fn power_term(p: f64, u: f64) -> f64 {
    u.signum() * u.abs().powf(p - 1.0)
}

/// Residual of `-div(|grad u|^{p-2} grad u) + a |u|^{p-2} u - f` at interior
/// nodes (zero at boundary nodes), with face-centered flux weights.
/// An upper-solution check is `residual >= -tol` at every interior node.
pub fn p_laplacian_residual(
    u: &DiscreteField,
    p: f64,
    a: &DiscreteField,
    f: &DiscreteField,
) -> Result<DiscreteField> {
    if !(p > 1.0) {
        return Err(Error::Hypothesis(format!("p must exceed 1, got {p}")));
    }
    let mesh = u.mesh().clone();
    let [nx, _] = mesh.shape();
    let hx = mesh.spacing()[0];
    let hy = mesh.spacing()[1];
    let mut out = DiscreteField::zeros(mesh.clone());
    for i in 0..mesh.len() {
        if mesh.is_boundary(i) {
            continue;
        }
        let div = if mesh.dim() == 1 {
            let de = (u[i + 1] - u[i]) / hx;
            let dw = (u[i] - u[i - 1]) / hx;
            (flux(p, de) - flux(p, dw)) / hx
        } else {
            // x-faces: transverse derivative averaged over the face ends
            let face_x = |l: usize, r: usize| -> f64 {
                let dx = (u[r] - u[l]) / hx;
                let dy = (u[l + nx] - u[l - nx] + u[r + nx] - u[r - nx]) / (4.0 * hy);
                weighted(p, dx * dx + dy * dy, dx)
            };
            let face_y = |b: usize, t: usize| -> f64 {
                let dy = (u[t] - u[b]) / hy;
                let dx = (u[b + 1] - u[b - 1] + u[t + 1] - u[t - 1]) / (4.0 * hx);
                weighted(p, dx * dx + dy * dy, dy)
            };
            (face_x(i, i + 1) - face_x(i - 1, i)) / hx
                + (face_y(i, i + nx) - face_y(i - nx, i)) / hy
        };
        out[i] = -div + a[i] * power_term(p, u[i]) - f[i];
    }
    Ok(out)
}

/// Solves `-div(|grad u|^{p-2} grad u) + a |u|^{p-2} u = f` with zero
/// Dirichlet data. `p = 2` is a direct solve; in 1D the nonlinear case runs
/// damped Newton with a regularized tangent, and in 2D a lagged-diffusivity
/// fixed point (first order only, which is all the suites need there).
pub fn p_laplacian_solve(
    mesh: &Arc<Mesh>,
    p: f64,
    a: &DiscreteField,
    f: &DiscreteField,
    tol: f64,
) -> Result<DiscreteField> {
    if !(p > 1.0) {
        return Err(Error::Hypothesis(format!("p must exceed 1, got {p}")));
    }
    let interior = mesh.interior_indices();
    if (p - 2.0).abs() < 1e-14 {
        return solve_linear_reaction(mesh, &interior, a, f);
    }
    // start from the p = 2 solution
    let mut u = solve_linear_reaction(mesh, &interior, a, f)?;
    if mesh.dim() == 1 {
        p_newton_1d(mesh, p, a, f, &mut u, tol)?;
    } else {
        p_picard_2d(mesh, p, a, f, &mut u, tol)?;
    }
    Ok(u)
}

fn p_newton_1d(
    mesh: &Arc<Mesh>,
    p: f64,
    a: &DiscreteField,
    f: &DiscreteField,
    u: &mut DiscreteField,
    tol: f64,
) -> Result<()> {
    let h = mesh.spacing()[0];
    let n = mesh.len();
    let map = DirichletMap::interior(mesh);
    let eps2 = 1e-16; // tangent regularization only; the residual stays exact
    let dflux = |d: f64| (p - 1.0) * (d * d + eps2).powf((p - 2.0) / 2.0);
    let mut res = p_laplacian_residual(u, p, a, f)?;
    let mut norm = interior_sup(mesh, &res);
    for iter in 0..80 {
        if norm <= tol {
            return Ok(());
        }
        let mut mat = BandMatrix::new(map.len(), 1, 1);
        for (k, &i) in map.nodes.iter().enumerate() {
            let de = (u[i + 1] - u[i]) / h;
            let dw = (u[i] - u[i - 1]) / h;
            let ce = dflux(de) / (h * h);
            let cw = dflux(dw) / (h * h);
            let du =
                a[i] * (p - 1.0) * (u[i] * u[i] + eps2).powf((p - 2.0) / 2.0);
            mat.set(k, k, ce + cw + du);
            if i > 1 {
                mat.set(k, k - 1, -cw);
            }
            if i + 2 < n {
                mat.set(k, k + 1, -ce);
            }
        }
        let lu = mat.factor()?;
        let rhs: Vec<f64> = map.nodes.iter().map(|&i| -res[i]).collect();
        let step = lu.solve(&rhs);
        let mut t = 1.0;
        let mut accepted = false;
        while t >= 1e-14 {
            let mut cand = u.clone();
            for (k, &i) in map.nodes.iter().enumerate() {
                cand[i] += t * step[k];
            }
            let cres = p_laplacian_residual(&cand, p, a, f)?;
            let cnorm = interior_sup(mesh, &cres);
            if cnorm <= (1.0 - ARMIJO * t) * norm {
                *u = cand;
                res = cres;
                norm = cnorm;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            return Err(Error::LineSearchFailed { iteration: iter, residual: norm });
        }
    }
    Err(Error::NewtonDiverged { iterations: 80, residual: norm })
}

fn p_picard_2d(
    mesh: &Arc<Mesh>,
    p: f64,
    a: &DiscreteField,
    f: &DiscreteField,
    u: &mut DiscreteField,
    tol: f64,
) -> Result<()> {
    let [nx, _] = mesh.shape();
    let hx = mesh.spacing()[0];
    let hy = mesh.spacing()[1];
    let map = DirichletMap::interior(mesh);
    let eps2 = 1e-12;
    let mut last_norm = f64::INFINITY;
    for _ in 0..400 {
        let cur = u.clone();
        let wx = |l: usize, r: usize| -> f64 {
            let dx = (cur[r] - cur[l]) / hx;
            let dy = (cur[l + nx] - cur[l - nx] + cur[r + nx] - cur[r - nx]) / (4.0 * hy);
            (dx * dx + dy * dy + eps2).powf((p - 2.0) / 2.0)
        };
        let wy = |b: usize, t: usize| -> f64 {
            let dy = (cur[t] - cur[b]) / hy;
            let dx = (cur[b + 1] - cur[b - 1] + cur[t + 1] - cur[t - 1]) / (4.0 * hx);
            (dx * dx + dy * dy + eps2).powf((p - 2.0) / 2.0)
        };
        let mut mat = BandMatrix::new(map.len(), map.bandwidth, map.bandwidth);
        for (k, &i) in map.nodes.iter().enumerate() {
            let we = wx(i, i + 1);
            let ww = wx(i - 1, i);
            let wn = wy(i, i + nx);
            let ws = wy(i - nx, i);
            let ai = a[i] * (cur[i] * cur[i] + eps2).powf((p - 2.0) / 2.0);
            mat.set(k, k, (we + ww) / (hx * hx) + (wn + ws) / (hy * hy) + ai);
            let mut link = |j: usize, v: f64| {
                let o = map.unknown_of[j];
                if o >= 0 {
                    mat.set(k, o as usize, v);
                }
            };
            link(i + 1, -we / (hx * hx));
            link(i - 1, -ww / (hx * hx));
            link(i + nx, -wn / (hy * hy));
            link(i - nx, -ws / (hy * hy));
        }
        let lu = mat.factor()?;
        let rhs: Vec<f64> = map.nodes.iter().map(|&i| f[i]).collect();
        let x = lu.solve(&rhs);
        // mild relaxation keeps the degenerate cases from oscillating
        for (k, &i) in map.nodes.iter().enumerate() {
            u[i] = 0.5 * u[i] + 0.5 * x[k];
        }
        let res = p_laplacian_residual(u, p, a, f)?;
        let norm = interior_sup(mesh, &res);
        if norm <= tol {
            return Ok(());
        }
        if norm >= last_norm && norm < 1e-8 {
            return Ok(()); // stagnated at the scheme's accuracy floor
        }
        last_norm = norm;
    }
    let res = p_laplacian_residual(u, p, a, f)?;
    let norm = interior_sup(mesh, &res);
    if norm < 1e-7 {
        Ok(())
    } else {
        Err(Error::NewtonDiverged { iterations: 400, residual: norm })
    }
}
