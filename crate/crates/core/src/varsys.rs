//! Variational systems `Ψ(x,v) = f(x) + ∇Φ(x)*v = 0, v ∈ ∂θ(Φ(x))`,
//! composite problems `min φ₀(x) + θ(Φ(x))`, and their multiplier sets.

use crate::cpwl::{CpwlError, CpwlFunction};
use crate::exact::dd::convert_rep;
use crate::exact::linalg::{linear_kernel, rank, transpose, Matrix};
use crate::exact::lp::is_feasible;
use crate::exact::poly::{HPoly, VPoly};
use crate::exact::rational::{sub, to_f64, zeros, Rational};
use crate::smooth::{eval_matrix, eval_matrix_f64, PolyExpr, PolyMap, PolyMatrix, SmoothError};
use num_traits::{One, Zero};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VarsysError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("Φ(x̄) is outside dom θ")]
    Domain,
    #[error("v is not in ∂θ(Φ(x))")]
    Membership,
    #[error("Ψ(x,v) ≠ 0")]
    NotStationary,
    #[error(transparent)]
    Smooth(#[from] SmoothError),
    #[error(transparent)]
    Cpwl(#[from] CpwlError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariationalSystem {
    pub n: usize,
    pub m: usize,
    pub f: PolyMap,
    pub phi: PolyMap,
    pub theta: CpwlFunction,
    jac_phi: PolyMatrix,
    hess_phi: Vec<PolyMatrix>,
    jac_f: PolyMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompositeProblem {
    pub phi0: PolyExpr,
    pub phi: PolyMap,
    pub theta: CpwlFunction,
}

impl CompositeProblem {
    pub fn new(phi0: PolyExpr, phi: PolyMap, theta: CpwlFunction) -> Result<Self, VarsysError> {
        let cp = CompositeProblem { phi0, phi, theta };
        cp.system()?;
        Ok(cp)
    }

    /// The KKT system, with `f = ∇φ₀` so that `Ψ = ∇ₓL`.
    pub fn system(&self) -> Result<VariationalSystem, VarsysError> {
        let f = PolyMap::new(self.phi0.nvars, self.phi0.gradient())?;
        VariationalSystem::new(f, self.phi.clone(), self.theta.clone())
    }

    pub fn n(&self) -> usize {
        self.phi0.nvars
    }

    pub fn objective(&self, x: &[Rational]) -> Result<Option<Rational>, VarsysError> {
        let z = self.phi.eval(x)?;
        let t = self.theta.eval_and_active(&z)?.0;
        Ok(t.finite().map(|t| self.phi0.eval(x).unwrap() + t))
    }
}

/// A primal-dual pair with `z = Φ(x)` and certified feasibility flags.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimalDualPoint {
    pub x: Vec<Rational>,
    pub v: Vec<Rational>,
    pub z: Vec<Rational>,
    pub in_domain: bool,
    pub subgradient: bool,
    pub stationary: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LagrangeSet {
    pub hpoly: HPoly,
    pub vertices: VPoly,
}

impl LagrangeSet {
    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn is_singleton(&self) -> bool {
        self.vertices.is_singleton()
    }
}

impl VariationalSystem {
    pub fn new(f: PolyMap, phi: PolyMap, theta: CpwlFunction) -> Result<Self, VarsysError> {
        let n = f.nvars;
        if f.dim_out() != n || phi.nvars != n || phi.dim_out() != theta.m {
            return Err(VarsysError::Dimension(format!(
                "f: R^{} → R^{}, Φ: R^{} → R^{}, θ on R^{}",
                f.nvars,
                f.dim_out(),
                phi.nvars,
                phi.dim_out(),
                theta.m
            )));
        }
        let (jac_phi, hess_phi) = phi.differentiate();
        let (jac_f, _) = f.differentiate();
        Ok(VariationalSystem { n, m: theta.m, f, phi, theta, jac_phi, hess_phi, jac_f })
    }

    pub fn jacobian_phi(&self, x: &[Rational]) -> Result<Matrix, VarsysError> {
        Ok(eval_matrix(&self.jac_phi, x)?)
    }

    pub fn jacobian_phi_f64(&self, x: &[f64]) -> Result<Vec<Vec<f64>>, VarsysError> {
        Ok(eval_matrix_f64(&self.jac_phi, x)?)
    }

    pub fn psi_eval(&self, x: &[Rational], v: &[Rational]) -> Result<Vec<Rational>, VarsysError> {
        self.check_v(v.len())?;
        let mut out = self.f.eval(x)?;
        let j = self.jacobian_phi(x)?;
        for (i, vi) in v.iter().enumerate() {
            for (o, jij) in out.iter_mut().zip(&j[i]) {
                *o += vi * jij;
            }
        }
        Ok(out)
    }

    pub fn psi_eval_f64(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>, VarsysError> {
        self.check_v(v.len())?;
        let mut out = self.f.eval_f64(x)?;
        let j = self.jacobian_phi_f64(x)?;
        for (i, vi) in v.iter().enumerate() {
            for (o, jij) in out.iter_mut().zip(&j[i]) {
                *o += vi * jij;
            }
        }
        Ok(out)
    }

    /// `∇ₓΨ(x,v) = ∇f(x) + Σ v_i ∇²Φ_i(x)`.
    pub fn psi_jacobian_x(&self, x: &[Rational], v: &[Rational]) -> Result<Matrix, VarsysError> {
        self.check_v(v.len())?;
        let mut h = eval_matrix(&self.jac_f, x)?;
        for (vi, hess) in v.iter().zip(&self.hess_phi) {
            if vi.is_zero() {
                continue;
            }
            let hv = eval_matrix(hess, x)?;
            for (row, hrow) in h.iter_mut().zip(&hv) {
                for (a, b) in row.iter_mut().zip(hrow) {
                    *a += vi * b;
                }
            }
        }
        Ok(h)
    }

    pub fn psi_jacobian_x_f64(&self, x: &[f64], v: &[f64]) -> Result<Vec<Vec<f64>>, VarsysError> {
        self.check_v(v.len())?;
        let mut h = eval_matrix_f64(&self.jac_f, x)?;
        for (vi, hess) in v.iter().zip(&self.hess_phi) {
            let hv = eval_matrix_f64(hess, x)?;
            for (row, hrow) in h.iter_mut().zip(&hv) {
                for (a, b) in row.iter_mut().zip(hrow) {
                    *a += vi * b;
                }
            }
        }
        Ok(h)
    }

    fn check_v(&self, len: usize) -> Result<(), VarsysError> {
        if len != self.m {
            return Err(VarsysError::Dimension(format!("v has length {len}, expected {}", self.m)));
        }
        Ok(())
    }

    /// Evaluates `z = Φ(x)` and the three feasibility conditions exactly.
    pub fn point(&self, x: &[Rational], v: &[Rational]) -> Result<PrimalDualPoint, VarsysError> {
        let z = self.phi.eval(x)?;
        self.check_v(v.len())?;
        let in_domain = self.theta.in_domain(&z);
        let subgradient = in_domain && self.theta.is_subgradient(&z, v)?;
        let stationary = self.psi_eval(x, v)?.iter().all(|p| p.is_zero());
        Ok(PrimalDualPoint { x: x.to_vec(), v: v.to_vec(), z, in_domain, subgradient, stationary })
    }

    /// Like [`point`](Self::point) but fails unless `v ∈ Λ(x)`.
    pub fn certified_point(&self, x: &[Rational], v: &[Rational]) -> Result<PrimalDualPoint, VarsysError> {
        let p = self.point(x, v)?;
        if !p.in_domain {
            return Err(VarsysError::Domain);
        }
        if !p.subgradient {
            return Err(VarsysError::Membership);
        }
        if !p.stationary {
            return Err(VarsysError::NotStationary);
        }
        Ok(p)
    }

    /// `Λ(x̄) = {v : ∇Φ(x̄)*v = −f(x̄)} ∩ ∂θ(Φ(x̄))`.
    pub fn multiplier_set(&self, x: &[Rational]) -> Result<LagrangeSet, VarsysError> {
        let z = self.phi.eval(x)?;
        if !self.theta.in_domain(&z) {
            return Err(VarsysError::Domain);
        }
        let mut h = self.theta.subdifferential_hpoly(&z)?;
        let jt = transpose(&self.jacobian_phi(x)?, self.n);
        let fx = self.f.eval(x)?;
        for (row, fi) in jt.into_iter().zip(fx) {
            h.add_eq(row, -fi);
        }
        let h = crate::exact::project::simplify(h);
        let vertices = convert_rep(&h).expect("well-formed");
        Ok(LagrangeSet { hpoly: h, vertices })
    }

    /// `Λ(x̄) ≠ ∅`, which implies the stationarity condition.
    pub fn check_stationarity(&self, x: &[Rational]) -> Result<bool, VarsysError> {
        let z = self.phi.eval(x)?;
        if !self.theta.in_domain(&z) {
            return Ok(false);
        }
        Ok(is_feasible(&self.multiplier_set(x)?.hpoly))
    }

    /// Direction space of `aff ∂θ(z̄)` intersected with `ker ∇Φ(x̄)*`;
    /// nondegenerate iff the intersection is `{0}`.
    pub fn nondegeneracy_check(&self, x: &[Rational]) -> Result<(bool, Vec<Vec<Rational>>), VarsysError> {
        let z = self.phi.eval(x)?;
        let act = self.theta.active(&z).map_err(|_| VarsysError::Domain)?;
        let k0 = *act.k.iter().next().unwrap();
        let mut dirs: Matrix = act
            .k
            .iter()
            .filter(|&&i| i != k0)
            .map(|&i| sub(&self.theta.pieces[i].a, &self.theta.pieces[k0].a))
            .collect();
        dirs.extend(act.i.iter().map(|&i| self.theta.domain[i].d.clone()));
        let jt = transpose(&self.jacobian_phi(x)?, self.n);
        let kernel = linear_kernel(&jt, self.m);
        let basis = subspace_intersection(&dirs, &kernel, self.m);
        Ok((basis.is_empty(), basis))
    }

    /// `cone{d_i : i ∈ I(z̄)} ∩ ker ∇Φ(x̄)* = {0}`.
    pub fn rcq_check(&self, x: &[Rational]) -> Result<bool, VarsysError> {
        let z = self.phi.eval(x)?;
        let act = self.theta.active(&z).map_err(|_| VarsysError::Domain)?;
        let ds: Vec<&Vec<Rational>> = act.i.iter().map(|&i| &self.theta.domain[i].d).collect();
        if ds.is_empty() {
            return Ok(true);
        }
        let j = self.jacobian_phi(x)?;
        let p = ds.len();
        // μ ≥ 0 with ∇Φ* D μ = 0; look for D μ ≠ 0
        let mut sys = HPoly::universe(p);
        for t in 0..p {
            let mut g = zeros(p);
            g[t] = -Rational::one();
            sys.add_ineq(g, Rational::zero());
        }
        for c in 0..self.n {
            let row: Vec<Rational> = ds
                .iter()
                .map(|d| d.iter().zip(&j).fold(Rational::zero(), |acc, (di, jrow)| acc + di * &jrow[c]))
                .collect();
            sys.add_eq(row, Rational::zero());
        }
        let maps: Vec<Vec<Rational>> = (0..self.m).map(|r| ds.iter().map(|d| d[r].clone()).collect()).collect();
        Ok(crate::criticality::nonzero_image(&sys, &maps).is_none())
    }

    pub fn f64_point(&self, p: &PrimalDualPoint) -> (Vec<f64>, Vec<f64>) {
        (p.x.iter().map(to_f64).collect(), p.v.iter().map(to_f64).collect())
    }
}

/// Basis of `span(a) ∩ span(b)`.
pub fn subspace_intersection(a: &[Vec<Rational>], b: &[Vec<Rational>], dim: usize) -> Vec<Vec<Rational>> {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    // solve Σ s_i a_i − Σ t_j b_j = 0
    let cols: Vec<&Vec<Rational>> = a.iter().chain(b.iter()).collect();
    let sys: Matrix = (0..dim)
        .map(|r| cols.iter().enumerate().map(|(c, v)| if c < a.len() { v[r].clone() } else { -v[r].clone() }).collect())
        .collect();
    let ker = linear_kernel(&sys, cols.len());
    let mut out: Matrix = Vec::new();
    for k in ker {
        let mut w = zeros(dim);
        for (s, v) in k.iter().zip(a) {
            for (wi, vi) in w.iter_mut().zip(v) {
                *wi += s * vi;
            }
        }
        let mut trial = out.clone();
        trial.push(w.clone());
        if rank(&trial, dim) > out.len() {
            out.push(crate::exact::rational::primitive_line(&w));
        }
    }
    out
}
