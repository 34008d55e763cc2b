//! Stability of the solution map under canonical perturbations: a piecewise
//! Newton solver, an empirical calmness probe, and exact checks for isolated
//! calmness, robust isolated calmness and the Lipschitz-like property.

mod probe;
mod solver;

pub use probe::{
    calmness_probe, error_bound_residual, sample_ball, CalmnessProbeReport, InverseSubdifferential, ProbeConfig,
    ProbeVerdict, WitnessPath, DIVERGENCE_BOUND, STABILIZATION_FACTOR,
};
pub use solver::{
    solve_perturbed, solve_perturbed_from, Perturbation, PerturbedSolution, SkippedPattern, SolveReport, ACCEPT_TOL,
    MAX_ITER, RESIDUAL_TOL,
};

use crate::criticality::{
    classify_multiplier, nonzero_image, sosc_check, CriticalityError, Linearization, SoscVerdict, Status,
};
use crate::exact::enumerate_faces;
use crate::exact::poly::HPoly;
use crate::exact::rational::{unit, Rational};
use crate::varsys::{CompositeProblem, VariationalSystem, VarsysError};
use num_traits::Zero;

/// The linearized system admits only `(ξ, η) = (0, 0)` and `Λ(x̄) = {v̄}`.
pub fn isolated_calmness_check(
    vs: &VariationalSystem,
    x: &[Rational],
    v: &[Rational],
) -> Result<bool, CriticalityError> {
    let lin = Linearization::new(vs, x, v)?;
    if !vs.multiplier_set(x)?.is_singleton() {
        return Ok(false);
    }
    for face in enumerate_faces(&lin.k) {
        let (sys, xi_rows, eta_rows) = lin.face_system(&face.active_ineq_indices);
        let rows: Vec<_> = xi_rows.into_iter().chain(eta_rows).collect();
        if nonzero_image(&sys, &rows).is_some() {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustCalmnessReport {
    pub holds: bool,
    pub sosc: SoscVerdict,
    pub unique_multiplier: bool,
}

impl RobustCalmnessReport {
    /// Names of the failing clauses.
    pub fn failed(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if !self.sosc.holds {
            out.push("sosc");
        }
        if !self.unique_multiplier {
            out.push("unique multiplier");
        }
        out
    }
}

/// Second-order sufficiency together with uniqueness of the multiplier.
pub fn robust_isolated_calmness_check(
    cp: &CompositeProblem,
    x: &[Rational],
    v: &[Rational],
) -> Result<RobustCalmnessReport, CriticalityError> {
    let vs = cp.system()?;
    let sosc = sosc_check(&vs, x, v)?;
    let unique_multiplier = vs.multiplier_set(x)?.is_singleton();
    Ok(RobustCalmnessReport { holds: sosc.holds && unique_multiplier, sosc, unique_multiplier })
}

/// `∇ₓΨξ + ∇Φ*η = 0` with `η ∈ D*∂θ(z̄,v̄)(∇Φξ)` forces `(ξ, η) = 0`, checked
/// on every cone of the limiting normal cone to the graph.
pub fn lipschitz_like_check(cp: &CompositeProblem, x: &[Rational], v: &[Rational]) -> Result<bool, CriticalityError> {
    let vs = cp.system()?;
    lipschitz_like_system(&vs, x, v)
}

pub(crate) fn lipschitz_like_system(
    vs: &VariationalSystem,
    x: &[Rational],
    v: &[Rational],
) -> Result<bool, CriticalityError> {
    let lin = Linearization::new(vs, x, v)?;
    let p = vs.certified_point(x, v)?;
    let (n, m) = (vs.n, vs.m);
    let normal = vs.theta.limiting_normal_cone(&p.z, v).map_err(VarsysError::from)?;
    let dim = n + m;
    // variables (ξ, η); member constraints act on (η, −Jξ)
    let lift = |c: &[Rational]| {
        let mut r: Vec<Rational> = (0..n)
            .map(|col| -(c[m..].iter().zip(&lin.j).fold(Rational::zero(), |acc, (ci, row)| acc + ci * &row[col])))
            .collect();
        r.extend(c[..m].iter().cloned());
        r
    };
    let rows: Vec<Vec<Rational>> = (0..dim).map(|i| unit(dim, i)).collect();
    for cone in &normal.members {
        let mut sys = HPoly::universe(dim);
        for row in 0..n {
            let mut r = lin.h[row].clone();
            r.extend(lin.j.iter().map(|jr| jr[row].clone()));
            sys.add_eq(r, Rational::zero());
        }
        for c in &cone.ineqs {
            sys.add_ineq(lift(&c.normal), c.rhs.clone());
        }
        for c in &cone.eqs {
            sys.add_eq(lift(&c.normal), c.rhs.clone());
        }
        if nonzero_image(&sys, &rows).is_some() {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemiIsolatedSummary {
    pub isolated_calmness: bool,
    pub criticality: Status,
    pub probe: ProbeVerdict,
}

impl SemiIsolatedSummary {
    /// Isolated calmness implies noncriticality, and a critical multiplier
    /// never comes with a bounded probe.
    pub fn chain_holds(&self) -> bool {
        (!self.isolated_calmness || self.criticality == Status::Noncritical)
            && (self.criticality == Status::Noncritical || !matches!(self.probe, ProbeVerdict::Bounded(_)))
    }

    pub fn line(&self) -> String {
        let probe = match self.probe {
            ProbeVerdict::Bounded(l) => format!("Bounded({l:.3})"),
            ProbeVerdict::Diverging => "Diverging".to_string(),
            ProbeVerdict::Inconclusive => "Inconclusive".to_string(),
        };
        format!(
            "isolated calmness={} ⟹ {:?} ⟹ calmness probe {}; chain {}",
            self.isolated_calmness,
            self.criticality,
            probe,
            if self.chain_holds() { "consistent" } else { "VIOLATED" }
        )
    }
}

/// Isolated calmness, the criticality verdict and the probe verdict. Critical
/// multipliers are probed along their witness path.
pub fn semi_isolated_summary(
    vs: &VariationalSystem,
    x: &[Rational],
    v: &[Rational],
    cfg: &ProbeConfig,
) -> Result<SemiIsolatedSummary, CriticalityError> {
    let isolated_calmness = isolated_calmness_check(vs, x, v)?;
    let criticality = classify_multiplier(vs, x, v)?.status;
    let mut cfg = cfg.clone();
    cfg.path_witness |= criticality == Status::Critical;
    let probe = calmness_probe(vs, x, v, &cfg)?.verdict;
    Ok(SemiIsolatedSummary { isolated_calmness, criticality, probe })
}
