//! Newton solves of the canonically perturbed system
//! `Ψ(x,v) = p₁, v ∈ ∂θ(Φ(x) + p₂)`, one active pattern at a time.

use crate::cpwl::CpwlFunction;
use crate::exact::rational::{to_f64, vec_to_f64};
use crate::varsys::{PrimalDualPoint, VariationalSystem};
use nalgebra::{DMatrix, DVector};
use std::collections::BTreeSet;

pub const RESIDUAL_TOL: f64 = 1e-10;
pub const ACCEPT_TOL: f64 = 1e-9;
pub const MAX_ITER: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation {
    pub p1: Vec<f64>,
    pub p2: Vec<f64>,
}

impl Perturbation {
    pub fn zero(n: usize, m: usize) -> Self {
        Perturbation { p1: vec![0.0; n], p2: vec![0.0; m] }
    }

    pub fn norm(&self) -> f64 {
        norm(&self.p1) + norm(&self.p2)
    }

    pub fn is_finite(&self) -> bool {
        self.p1.iter().chain(&self.p2).all(|x| x.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbedSolution {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub pattern: (BTreeSet<usize>, BTreeSet<usize>),
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkippedPattern {
    pub pattern: (BTreeSet<usize>, BTreeSet<usize>),
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolveReport {
    pub solutions: Vec<PerturbedSolution>,
    pub skipped: Vec<SkippedPattern>,
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|t| t * t).sum::<f64>().sqrt()
}

fn dotf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Float copy of `θ`'s data.
#[derive(Debug, Clone)]
pub(crate) struct ThetaF64 {
    pub a: Vec<Vec<f64>>,
    pub alpha: Vec<f64>,
    pub d: Vec<Vec<f64>>,
    pub beta: Vec<f64>,
}

impl ThetaF64 {
    pub fn new(t: &CpwlFunction) -> Self {
        ThetaF64 {
            a: t.pieces.iter().map(|p| vec_to_f64(&p.a)).collect(),
            alpha: t.pieces.iter().map(|p| to_f64(&p.alpha)).collect(),
            d: t.domain.iter().map(|h| vec_to_f64(&h.d)).collect(),
            beta: t.domain.iter().map(|h| to_f64(&h.beta)).collect(),
        }
    }

    /// Largest violation of `P` being maximal and `Q` covering all tight
    /// rows at `z`, and of `λ, μ ≥ 0`.
    pub fn pattern_defect(&self, z: &[f64], p: &[usize], q: &[usize], lam: &[f64], mu: &[f64]) -> f64 {
        let s = p[0];
        let top = dotf(&self.a[s], z) - self.alpha[s];
        let mut worst: f64 = 0.0;
        for i in 0..self.a.len() {
            if !p.contains(&i) {
                worst = worst.max(dotf(&self.a[i], z) - self.alpha[i] - top);
            }
        }
        for j in 0..self.d.len() {
            if !q.contains(&j) {
                worst = worst.max(dotf(&self.d[j], z) - self.beta[j]);
            }
        }
        for x in lam.iter().chain(mu) {
            worst = worst.max(-x);
        }
        worst
    }
}

/// The square system of one pattern in unknowns `(x, λ_P, μ_Q)`.
struct PatternSystem<'a> {
    vs: &'a VariationalSystem,
    th: &'a ThetaF64,
    p: Vec<usize>,
    q: Vec<usize>,
    pert: &'a Perturbation,
}

impl PatternSystem<'_> {
    fn split<'u>(&self, u: &'u [f64]) -> (&'u [f64], &'u [f64], &'u [f64]) {
        let n = self.vs.n;
        let (x, rest) = u.split_at(n);
        let (lam, mu) = rest.split_at(self.p.len());
        (x, lam, mu)
    }

    fn multiplier(&self, lam: &[f64], mu: &[f64]) -> Vec<f64> {
        let mut v = vec![0.0; self.vs.m];
        for (l, &i) in lam.iter().zip(&self.p) {
            for (vi, ai) in v.iter_mut().zip(&self.th.a[i]) {
                *vi += l * ai;
            }
        }
        for (l, &j) in mu.iter().zip(&self.q) {
            for (vi, di) in v.iter_mut().zip(&self.th.d[j]) {
                *vi += l * di;
            }
        }
        v
    }

    fn shifted_z(&self, x: &[f64]) -> Vec<f64> {
        let z = self.vs.phi.eval_f64(x).expect("arity");
        z.iter().zip(&self.pert.p2).map(|(a, b)| a + b).collect()
    }

    fn rows(&self) -> Vec<(Vec<f64>, f64)> {
        let s = self.p[0];
        let mut out: Vec<(Vec<f64>, f64)> = self.p[1..]
            .iter()
            .map(|&i| {
                let n: Vec<f64> = self.th.a[i].iter().zip(&self.th.a[s]).map(|(x, y)| x - y).collect();
                (n, self.th.alpha[i] - self.th.alpha[s])
            })
            .collect();
        out.extend(self.q.iter().map(|&j| (self.th.d[j].clone(), self.th.beta[j])));
        out
    }

    fn residual(&self, u: &[f64]) -> DVector<f64> {
        let (x, lam, mu) = self.split(u);
        let v = self.multiplier(lam, mu);
        let mut r: Vec<f64> = self.vs.psi_eval_f64(x, &v).expect("arity");
        for (ri, pi) in r.iter_mut().zip(&self.pert.p1) {
            *ri -= pi;
        }
        r.push(lam.iter().sum::<f64>() - 1.0);
        let z = self.shifted_z(x);
        for (nrm, rhs) in self.rows() {
            r.push(dotf(&nrm, &z) - rhs);
        }
        DVector::from_vec(r)
    }

    fn jacobian(&self, u: &[f64]) -> DMatrix<f64> {
        let (n, m) = (self.vs.n, self.vs.m);
        let (x, lam, mu) = self.split(u);
        let v = self.multiplier(lam, mu);
        let h = self.vs.psi_jacobian_x_f64(x, &v).expect("arity");
        let j = self.vs.jacobian_phi_f64(x).expect("arity");
        let dim = u.len();
        let rows = self.rows();
        let mut out = DMatrix::zeros(n + 1 + rows.len(), dim);
        // J*c as a column over x
        let jt = |c: &[f64]| (0..n).map(|col| (0..m).map(|r| c[r] * j[r][col]).sum::<f64>()).collect::<Vec<_>>();
        for r in 0..n {
            for c in 0..n {
                out[(r, c)] = h[r][c];
            }
        }
        let gens = self.p.iter().map(|&i| &self.th.a[i]).chain(self.q.iter().map(|&j| &self.th.d[j]));
        for (t, g) in gens.enumerate() {
            for (r, val) in jt(g).into_iter().enumerate() {
                out[(r, n + t)] = val;
            }
        }
        for t in 0..self.p.len() {
            out[(n, n + t)] = 1.0;
        }
        for (k, (nrm, _)) in rows.iter().enumerate() {
            for (c, val) in jt(nrm).into_iter().enumerate() {
                out[(n + 1 + k, c)] = val;
            }
        }
        out
    }

    fn newton(&self, mut u: Vec<f64>) -> Result<(Vec<f64>, f64), String> {
        let mut r = self.residual(&u);
        for _ in 0..MAX_ITER {
            if r.norm() <= RESIDUAL_TOL * 1e-3 {
                break;
            }
            let jac = self.jacobian(&u);
            let svd = jac.svd(true, true);
            let smax = svd.singular_values.max();
            let step = svd.solve(&r, 1e-12 * smax.max(1.0)).map_err(|e| e.to_string())?;
            if !step.iter().all(|s| s.is_finite()) {
                return Err("non-finite step".into());
            }
            for (ui, si) in u.iter_mut().zip(step.iter()) {
                *ui -= si;
            }
            r = self.residual(&u);
            if step.norm() <= 1e-15 * (1.0 + norm(&u)) {
                break;
            }
        }
        let rn = r.norm();
        if !rn.is_finite() || rn > RESIDUAL_TOL {
            return Err(format!("residual {rn:.3e} after {MAX_ITER} iterations"));
        }
        Ok((u, rn))
    }
}

/// Patterns `J₁ ⊆ P ⊆ K`, `J₂ ⊆ Q ⊆ I` at the seed, each solved by
/// Gauss–Newton from the seed's decomposition.
pub fn solve_perturbed(vs: &VariationalSystem, p: &Perturbation, seed: &PrimalDualPoint, tol: f64) -> SolveReport {
    solve_perturbed_from(vs, p, seed, &vec_to_f64(&seed.x), tol)
}

/// As [`solve_perturbed`] with patterns taken at `seed` but Newton started
/// from the primal point `x0`.
pub fn solve_perturbed_from(
    vs: &VariationalSystem,
    p: &Perturbation,
    seed: &PrimalDualPoint,
    x0: &[f64],
    tol: f64,
) -> SolveReport {
    assert!(tol > 0.0);
    let th = ThetaF64::new(&vs.theta);
    let Ok(act) = vs.theta.active(&seed.z) else {
        return SolveReport::default();
    };
    let Ok(dec) = vs.theta.decompose_subgradient(&seed.z, &seed.v) else {
        return SolveReport::default();
    };
    let mut report = SolveReport::default();
    for pset in supersets(&dec.j1, &act.k) {
        for qset in supersets(&dec.j2, &act.i) {
            let sys = PatternSystem {
                vs,
                th: &th,
                p: pset.iter().cloned().collect(),
                q: qset.iter().cloned().collect(),
                pert: p,
            };
            let mut u0 = x0.to_vec();
            u0.extend(sys.p.iter().map(|&i| to_f64(&dec.lambda[i])));
            u0.extend(sys.q.iter().map(|&j| to_f64(&dec.mu[j])));
            let pattern = (pset.clone(), qset.clone());
            match sys.newton(u0) {
                Ok((u, rn)) => {
                    let (x, lam, mu) = sys.split(&u);
                    let defect = th.pattern_defect(&sys.shifted_z(x), &sys.p, &sys.q, lam, mu);
                    if defect > tol {
                        report.skipped.push(SkippedPattern { pattern, reason: format!("pattern defect {defect:.3e}") });
                        continue;
                    }
                    let sol =
                        PerturbedSolution { x: x.to_vec(), v: sys.multiplier(lam, mu), pattern, residual: rn + defect };
                    let dup =
                        report.solutions.iter().any(|s| norm(&diff(&s.x, &sol.x)) + norm(&diff(&s.v, &sol.v)) <= 1e-8);
                    if !dup {
                        report.solutions.push(sol);
                    }
                }
                Err(reason) => report.skipped.push(SkippedPattern { pattern, reason }),
            }
        }
    }
    report
}

pub(crate) fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn supersets(lo: &BTreeSet<usize>, hi: &BTreeSet<usize>) -> Vec<BTreeSet<usize>> {
    let free: Vec<usize> = hi.difference(lo).cloned().collect();
    (0..1usize << free.len())
        .map(|mask| {
            let mut s = lo.clone();
            s.extend(free.iter().enumerate().filter(|(b, _)| mask >> b & 1 == 1).map(|(_, &x)| x));
            s
        })
        .collect()
}
