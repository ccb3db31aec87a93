//! Problem data `(c_plus, c_minus, mu, h)` and the structural hypothesis
//! validation: sign conditions, disjoint supports, a thick zero collar of
//! `c_minus` around the support of `c_plus`, and `mu` bounded below there.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::{bump, Expr};
use crate::field::DiscreteField;
use crate::mesh::Mesh;

pub type ScalarFn = Arc<dyn Fn([f64; 2]) -> f64 + Send + Sync>;

/// Nodal samples of the four coefficient fields plus structural parameters.
#[derive(Clone, Debug)]
pub struct CoefficientSet {
    mesh: Arc<Mesh>,
    pub c_plus: DiscreteField,
    pub c_minus: DiscreteField,
    pub mu: DiscreteField,
    pub h: DiscreteField,
    /// Lower bound for `mu` on the collar around `supp(c_plus)`.
    pub mu1: f64,
    /// Largest nodal `mu` (the transform parameter for the second variable).
    pub mu2: f64,
    /// Width of the collar on which `c_minus` must vanish and `mu >= mu1`.
    pub buffer_epsilon: f64,
}

impl CoefficientSet {
    pub fn new(
        mesh: Arc<Mesh>,
        c_plus: DiscreteField,
        c_minus: DiscreteField,
        mu: DiscreteField,
        h: DiscreteField,
        mu1: f64,
        buffer_epsilon: f64,
    ) -> Result<Self> {
        for (name, f) in [("c_plus", &c_plus), ("c_minus", &c_minus), ("mu", &mu), ("h", &h)] {
            if f.len() != mesh.len() {
                return Err(Error::InvalidCoefficients(format!(
                    "{name} has {} values for a mesh of {} nodes",
                    f.len(),
                    mesh.len()
                )));
            }
        }
        if !(mu1 > 0.0) {
            return Err(Error::InvalidCoefficients(format!("mu1 must be positive, got {mu1}")));
        }
        if !(buffer_epsilon > 0.0) {
            return Err(Error::InvalidCoefficients(format!(
                "buffer_epsilon must be positive, got {buffer_epsilon}"
            )));
        }
        let mu2 = mu.max();
        Ok(CoefficientSet { mesh, c_plus, c_minus, mu, h, mu1, mu2, buffer_epsilon })
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    /// Nodes of the discrete support of `c_plus` (`c_plus > 0`).
    pub fn omega_plus_nodes(&self) -> Vec<usize> {
        (0..self.mesh.len()).filter(|&i| self.c_plus[i] > 0.0).collect()
    }

    /// Nodes within distance `buffer_epsilon` of the discrete support of
    /// `c_plus` (includes the support itself).
    pub fn collar_nodes(&self) -> Vec<usize> {
        let support = self.omega_plus_nodes();
        if support.is_empty() {
            return Vec::new();
        }
        let supp_pos: Vec<[f64; 2]> = support.iter().map(|&i| self.mesh.position(i)).collect();
        let eps = self.buffer_epsilon;
        (0..self.mesh.len())
            .filter(|&i| {
                let p = self.mesh.position(i);
                supp_pos.iter().any(|q| {
                    let dx = p[0] - q[0];
                    let dy = p[1] - q[1];
                    (dx * dx + dy * dy).sqrt() < eps
                })
            })
            .collect()
    }

    /// Checks the structural hypothesis nodewise and reports every violation.
    pub fn validate(&self) -> ValidationReport {
        let n = self.mesh.len();
        let mut sign_violations = Vec::new();
        let mut disjoint_violations = Vec::new();
        for i in 0..n {
            if self.c_plus[i] < 0.0 || self.c_minus[i] < 0.0 {
                sign_violations.push(i);
            }
            if self.c_plus[i] * self.c_minus[i] != 0.0 {
                disjoint_violations.push(i);
            }
        }
        let support = self.omega_plus_nodes();
        let omega_plus_measure = self.mesh.measure(&support);
        let collar = self.collar_nodes();
        let mut collar_mu_violations = Vec::new();
        let mut collar_cminus_violations = Vec::new();
        for &i in &collar {
            if self.mu[i] < self.mu1 {
                collar_mu_violations.push(i);
            }
            if self.c_minus[i] != 0.0 {
                collar_cminus_violations.push(i);
            }
        }
        ValidationReport {
            sign_violations,
            disjoint_violations,
            omega_plus_measure,
            collar_mu_violations,
            collar_cminus_violations,
        }
    }
}

/// Outcome of the structural validation; all-pass means the data is admissible.
#[derive(Clone, Debug)]
pub struct ValidationReport {
    pub sign_violations: Vec<usize>,
    pub disjoint_violations: Vec<usize>,
    pub omega_plus_measure: f64,
    pub collar_mu_violations: Vec<usize>,
    pub collar_cminus_violations: Vec<usize>,
}

impl ValidationReport {
    pub fn sign_ok(&self) -> bool {
        self.sign_violations.is_empty()
    }

    pub fn disjoint_ok(&self) -> bool {
        self.disjoint_violations.is_empty()
    }

    pub fn omega_plus_nonempty(&self) -> bool {
        self.omega_plus_measure > 0.0
    }

    pub fn collar_ok(&self) -> bool {
        self.collar_mu_violations.is_empty() && self.collar_cminus_violations.is_empty()
    }

    pub fn all_pass(&self) -> bool {
        self.sign_ok() && self.disjoint_ok() && self.omega_plus_nonempty() && self.collar_ok()
    }

    pub fn summary(&self) -> String {
        format!(
            "sign={} disjoint={} |omega+|={:.6e} collar_mu={} collar_cminus={}",
            self.sign_ok(),
            self.disjoint_ok(),
            self.omega_plus_measure,
            self.collar_mu_violations.is_empty(),
            self.collar_cminus_violations.is_empty()
        )
    }
}

/// Domain geometry of a problem specification.
#[derive(Clone, Debug, PartialEq)]
pub enum Domain {
    Interval { a: f64, b: f64 },
    Rectangle { corner0: [f64; 2], corner1: [f64; 2] },
}

impl Domain {
    pub fn dim(&self) -> usize {
        match self {
            Domain::Interval { .. } => 1,
            Domain::Rectangle { .. } => 2,
        }
    }
}

/// Closed-form problem definition, sampled onto meshes of any resolution so
/// refinement studies stay well-posed.
#[derive(Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub domain: Domain,
    pub c_plus: ScalarFn,
    pub c_minus: ScalarFn,
    pub mu: ScalarFn,
    pub h: ScalarFn,
    pub mu1: f64,
    pub buffer_epsilon: f64,
    pub default_resolution: usize,
}

impl std::fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("mu1", &self.mu1)
            .field("buffer_epsilon", &self.buffer_epsilon)
            .field("default_resolution", &self.default_resolution)
            .finish()
    }
}

impl ProblemSpec {
    /// Mesh with `resolution` nodes per axis.
    pub fn mesh(&self, resolution: usize) -> Result<Arc<Mesh>> {
        match self.domain {
            Domain::Interval { a, b } => Mesh::interval(a, b, resolution),
            Domain::Rectangle { corner0, corner1 } => {
                Mesh::rectangle(corner0, corner1, resolution, resolution)
            }
        }
    }

    /// Samples the coefficient expressions nodewise.
    pub fn coefficients(&self, mesh: &Arc<Mesh>) -> Result<CoefficientSet> {
        CoefficientSet::new(
            mesh.clone(),
            DiscreteField::from_fn(mesh.clone(), |p| (self.c_plus)(p)),
            DiscreteField::from_fn(mesh.clone(), |p| (self.c_minus)(p)),
            DiscreteField::from_fn(mesh.clone(), |p| (self.mu)(p)),
            DiscreteField::from_fn(mesh.clone(), |p| (self.h)(p)),
            self.mu1,
            self.buffer_epsilon,
        )
    }

    /// Mesh + coefficients at the catalog's default resolution.
    pub fn sample_default(&self) -> Result<(CoefficientSet, Arc<Mesh>)> {
        let mesh = self.mesh(self.default_resolution)?;
        Ok((self.coefficients(&mesh)?, mesh))
    }

    /// Builds a spec from expression strings (the CLI config path).
    #[allow(clippy::too_many_arguments)]
    pub fn from_expressions(
        name: &str,
        domain: Domain,
        c_plus: &str,
        c_minus: &str,
        mu: &str,
        h: &str,
        mu1: f64,
        buffer_epsilon: f64,
        default_resolution: usize,
    ) -> Result<ProblemSpec> {
        Ok(ProblemSpec {
            name: name.to_string(),
            domain,
            c_plus: Expr::parse(c_plus)?.into_fn(),
            c_minus: Expr::parse(c_minus)?.into_fn(),
            mu: Expr::parse(mu)?.into_fn(),
            h: Expr::parse(h)?.into_fn(),
            mu1,
            buffer_epsilon,
            default_resolution,
        })
    }
}

pub const BUILTIN_NAMES: [&str; 4] = ["1d-basic", "1d-signchanging-h", "2d-basic", "1d-mu-variable"];

/// Named reproducible test problems.
pub fn builtin(name: &str) -> Result<ProblemSpec> {
    let f = |g: fn([f64; 2]) -> f64| -> ScalarFn { Arc::new(g) };
    match name {
        "1d-basic" => Ok(ProblemSpec {
            name: name.into(),
            domain: Domain::Interval { a: 0.0, b: 1.0 },
            c_plus: f(|p| bump(p[0], 0.4, 0.6)),
            c_minus: f(|p| 0.8 * bump(p[0], 0.0, 0.15)),
            mu: f(|_| 1.0),
            h: f(|p| 0.5 * bump(p[0], 0.42, 0.58)),
            mu1: 1.0,
            buffer_epsilon: 0.1,
            default_resolution: 129,
        }),
        "1d-signchanging-h" => Ok(ProblemSpec {
            name: name.into(),
            domain: Domain::Interval { a: 0.0, b: 1.0 },
            c_plus: f(|p| bump(p[0], 0.4, 0.6)),
            c_minus: f(|p| 0.8 * bump(p[0], 0.0, 0.15)),
            mu: f(|_| 1.0),
            h: f(|p| 0.5 * bump(p[0], 0.42, 0.58) - 0.3 * bump(p[0], 0.72, 0.9)),
            mu1: 1.0,
            buffer_epsilon: 0.1,
            default_resolution: 129,
        }),
        "2d-basic" => Ok(ProblemSpec {
            name: name.into(),
            domain: Domain::Rectangle { corner0: [0.0, 0.0], corner1: [1.0, 1.0] },
            c_plus: f(|p| bump(p[0], 0.4, 0.6) * bump(p[1], 0.4, 0.6)),
            c_minus: f(|p| 0.8 * bump(p[0], 0.0, 0.15) * bump(p[1], 0.0, 0.15)),
            mu: f(|_| 1.0),
            h: f(|p| 0.5 * bump(p[0], 0.42, 0.58) * bump(p[1], 0.42, 0.58)),
            mu1: 1.0,
            buffer_epsilon: 0.1,
            default_resolution: 33,
        }),
        "1d-mu-variable" => Ok(ProblemSpec {
            name: name.into(),
            domain: Domain::Interval { a: 0.0, b: 1.0 },
            c_plus: f(|p| bump(p[0], 0.4, 0.6)),
            c_minus: f(|p| 0.8 * bump(p[0], 0.0, 0.15)),
            // >= mu1 on the 0.1-collar (0.3, 0.7) of supp(c_plus), small far away
            mu: f(|p| 0.25 + bump(p[0], 0.25, 0.75)),
            h: f(|p| 0.5 * bump(p[0], 0.42, 0.58)),
            mu1: 0.375,
            buffer_epsilon: 0.1,
            default_resolution: 129,
        }),
        _ => Err(Error::UnknownBenchmark(name.to_string())),
    }
}

/// Convenience wrapper: catalog lookup plus default-resolution sampling.
pub fn builtin_benchmark(name: &str) -> Result<(CoefficientSet, Arc<Mesh>)> {
    builtin(name)?.sample_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_benchmarks_pass_validation() {
        for name in BUILTIN_NAMES {
            let (coeffs, _mesh) = builtin_benchmark(name).unwrap();
            let report = coeffs.validate();
            assert!(report.all_pass(), "{name}: {}", report.summary());
        }
        assert!(matches!(builtin("no-such"), Err(Error::UnknownBenchmark(_))));
    }

    #[test]
    fn validation_is_refinement_stable() {
        for name in BUILTIN_NAMES {
            let spec = builtin(name).unwrap();
            let mesh = spec.mesh(2 * spec.default_resolution - 1).unwrap();
            let coeffs = spec.coefficients(&mesh).unwrap();
            assert!(coeffs.validate().all_pass(), "{name} fails at double resolution");
        }
    }

    #[test]
    fn disjointness_violation_detected() {
        let mesh = Mesh::interval(0.0, 1.0, 21).unwrap();
        let one = DiscreteField::constant(mesh.clone(), 1.0);
        let coeffs = CoefficientSet::new(
            mesh.clone(),
            one.clone(),
            one.clone(),
            one.clone(),
            DiscreteField::zeros(mesh.clone()),
            1.0,
            0.1,
        )
        .unwrap();
        let report = coeffs.validate();
        assert!(!report.disjoint_ok());
        assert_eq!(report.disjoint_violations.len(), mesh.len());
        assert!(report.sign_ok());
    }

    #[test]
    fn collar_mu_violation_detected() {
        // mu == 0 with nonempty supp(c_plus): collar condition fails
        let mesh = Mesh::interval(0.0, 1.0, 41).unwrap();
        let c_plus = DiscreteField::from_fn(mesh.clone(), |p| bump(p[0], 0.4, 0.6));
        let coeffs = CoefficientSet::new(
            mesh.clone(),
            c_plus,
            DiscreteField::zeros(mesh.clone()),
            DiscreteField::zeros(mesh.clone()),
            DiscreteField::zeros(mesh.clone()),
            1.0,
            0.1,
        )
        .unwrap();
        let report = coeffs.validate();
        assert!(!report.collar_ok());
        assert!(!report.collar_mu_violations.is_empty());
        assert!(report.omega_plus_nonempty());
    }

    #[test]
    fn gap_larger_than_epsilon_passes() {
        // c_plus on [0.4, 0.6], c_minus on [0, 0.2], gap 0.2 > eps = 0.1
        let mesh = Mesh::interval(0.0, 1.0, 41).unwrap();
        let coeffs = CoefficientSet::new(
            mesh.clone(),
            DiscreteField::from_fn(mesh.clone(), |p| {
                if p[0] > 0.4 && p[0] < 0.6 {
                    1.0
                } else {
                    0.0
                }
            }),
            DiscreteField::from_fn(mesh.clone(), |p| if p[0] < 0.2 { 1.0 } else { 0.0 }),
            DiscreteField::constant(mesh.clone(), 1.0),
            DiscreteField::zeros(mesh.clone()),
            1.0,
            0.1,
        )
        .unwrap();
        assert!(coeffs.validate().all_pass());
    }

    #[test]
    fn collar_cminus_zero_for_all_passing_reports() {
        for name in BUILTIN_NAMES {
            let (coeffs, _) = builtin_benchmark(name).unwrap();
            let report = coeffs.validate();
            if report.all_pass() {
                for &i in &coeffs.collar_nodes() {
                    assert_eq!(coeffs.c_minus[i], 0.0);
                }
            }
        }
    }
}
