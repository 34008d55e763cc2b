//! Critical and noncritical multipliers, and second-order sufficiency.
//!
//! A multiplier `v̄ ∈ Λ(x̄)` is critical when the linearized system
//!
//! ```text
//! ∇ₓΨ ξ + ∇Φ* η = 0,  ∇Φ ξ ∈ K,  η ∈ K*,  ⟨η, ∇Φ ξ⟩ = 0
//! ```
//!
//! has a solution with `ξ ≠ 0`, where `K = K(z̄, v̄)` is the critical cone.
//! The complementarity condition is linearized by enumerating faces.

use crate::exact::dd::cone_generators;
use crate::exact::faces::enumerate_faces;
use crate::exact::linalg::{inverse, mat_vec, transpose, Matrix};
use crate::exact::lp::{lp_feasible, lp_minimize, Feasibility, LpResult};
use crate::exact::poly::HPoly;
use crate::exact::project::project_out;
use crate::exact::rational::{dot, is_zero_vec, primitive, unit, zeros, Rational};
use crate::varsys::{VariationalSystem, VarsysError};
use num_traits::{One, Signed, Zero};
use std::collections::BTreeSet;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CriticalityError {
    #[error("v̄ is not a Lagrange multiplier at x̄: {0}")]
    Membership(VarsysError),
}

impl From<VarsysError> for CriticalityError {
    fn from(e: VarsysError) -> Self {
        CriticalityError::Membership(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Critical,
    Noncritical,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub xi: Vec<Rational>,
    pub eta: Vec<Rational>,
}

/// A face of one cone together with generators of the paired face of the
/// other.
#[derive(Debug, Clone, PartialEq)]
pub struct FacePair {
    pub face: BTreeSet<usize>,
    pub conjugate_rays: Vec<Vec<Rational>>,
    pub conjugate_lines: Vec<Vec<Rational>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalityVerdict {
    pub status: Status,
    pub witness: Option<Witness>,
    pub face_pair: Option<FacePair>,
    /// Faces on which the system was shown to force `ξ = 0`.
    pub certified_faces: Vec<BTreeSet<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SoscVerdict {
    pub holds: bool,
    pub violating_direction: Option<Vec<Rational>>,
}

/// Some `x ∈ cone` with `⟨row, x⟩ ≠ 0` for one of the rows, if any.
pub fn nonzero_image(cone: &HPoly, rows: &[Vec<Rational>]) -> Option<Vec<Rational>> {
    for row in rows {
        if is_zero_vec(row) {
            continue;
        }
        for s in [Rational::one(), -Rational::one()] {
            let mut sys = cone.clone();
            sys.add_eq(row.iter().map(|r| r * &s).collect(), Rational::one());
            if let Feasibility::Feasible(x) = lp_feasible(&sys).expect("well-formed") {
                return Some(x);
            }
        }
    }
    None
}

/// Data shared by every criticality computation at `(x̄, v̄)`.
pub(crate) struct Linearization {
    pub n: usize,
    pub m: usize,
    pub h: Matrix,
    pub j: Matrix,
    pub k: HPoly,
}

impl Linearization {
    pub fn new(vs: &VariationalSystem, x: &[Rational], v: &[Rational]) -> Result<Self, CriticalityError> {
        let p = vs.certified_point(x, v)?;
        let k = vs.theta.critical_cone(&p.z, v).map_err(VarsysError::from)?.hrep;
        Ok(Linearization { n: vs.n, m: vs.m, h: vs.psi_jacobian_x(x, v)?, j: vs.jacobian_phi(x)?, k })
    }

    /// `⟨c, J ξ⟩` as a row over `ξ`.
    fn pull(&self, c: &[Rational]) -> Vec<Rational> {
        (0..self.n)
            .map(|col| c.iter().zip(&self.j).fold(Rational::zero(), |acc, (ci, row)| acc + ci * &row[col]))
            .collect()
    }

    /// The system over `(ξ, λ, ν)` with `η = Σ λ_a g_a + Σ ν_e e_e` for a face
    /// of `K` with active rows `face`, and the rows expressing `ξ` and `η`.
    pub fn face_system(&self, face: &BTreeSet<usize>) -> (HPoly, Vec<Vec<Rational>>, Vec<Vec<Rational>>) {
        let n = self.n;
        let gens: Vec<&Vec<Rational>> =
            face.iter().map(|&i| &self.k.ineqs[i].normal).chain(self.k.eqs.iter().map(|c| &c.normal)).collect();
        let na = face.len();
        let dim = n + gens.len();
        let mut sys = HPoly::universe(dim);
        let ext = |xi_part: Vec<Rational>| {
            let mut r = xi_part;
            r.resize(dim, Rational::zero());
            r
        };
        // ∇ₓΨ ξ + J*η = 0
        for row in 0..n {
            let mut r = self.h[row].clone();
            for g in &gens {
                r.push(dot(g, &self.j.iter().map(|jr| jr[row].clone()).collect::<Vec<_>>()));
            }
            sys.add_eq(r, Rational::zero());
        }
        for (i, c) in self.k.ineqs.iter().enumerate() {
            let r = ext(self.pull(&c.normal));
            if face.contains(&i) {
                sys.add_eq(r, Rational::zero());
            } else {
                sys.add_ineq(r, Rational::zero());
            }
        }
        for c in &self.k.eqs {
            sys.add_eq(ext(self.pull(&c.normal)), Rational::zero());
        }
        for t in 0..na {
            sys.add_ineq(unit(dim, n + t).into_iter().map(|x| -x).collect(), Rational::zero());
        }
        let xi_rows = (0..n).map(|i| unit(dim, i)).collect();
        let eta_rows = (0..self.m)
            .map(|r| {
                let mut row = zeros(dim);
                for (t, g) in gens.iter().enumerate() {
                    row[n + t] = g[r].clone();
                }
                row
            })
            .collect();
        (sys, xi_rows, eta_rows)
    }

    fn eta_of(&self, eta_rows: &[Vec<Rational>], sol: &[Rational]) -> Vec<Rational> {
        eta_rows.iter().map(|r| dot(r, sol)).collect()
    }
}

/// Decides criticality by pairing faces of `K` with conjugate faces of `K*`.
pub fn classify_multiplier(
    vs: &VariationalSystem,
    x: &[Rational],
    v: &[Rational],
) -> Result<CriticalityVerdict, CriticalityError> {
    let lin = Linearization::new(vs, x, v)?;
    let mut certified = Vec::new();
    for face in enumerate_faces(&lin.k) {
        let a = face.active_ineq_indices;
        let (sys, xi_rows, eta_rows) = lin.face_system(&a);
        if let Some(sol) = nonzero_image(&sys, &xi_rows) {
            let xi = primitive(&sol[..lin.n]);
            let k = xi.iter().position(|c| !c.is_zero()).unwrap();
            let s = &xi[k] / &sol[k];
            let eta = lin.eta_of(&eta_rows, &sol).iter().map(|e| e * &s).collect();
            let conjugate_rays = a.iter().map(|&i| lin.k.ineqs[i].normal.clone()).collect();
            let conjugate_lines = lin.k.eqs.iter().map(|c| c.normal.clone()).collect();
            return Ok(CriticalityVerdict {
                status: Status::Critical,
                witness: Some(Witness { xi, eta }),
                face_pair: Some(FacePair { face: a, conjugate_rays, conjugate_lines }),
                certified_faces: certified,
            });
        }
        certified.push(a);
    }
    Ok(CriticalityVerdict { status: Status::Noncritical, witness: None, face_pair: None, certified_faces: certified })
}

/// Same decision through the regular normal cone `N̂` of the graph of `∂θ`:
/// `η ∈ D̂*∂θ(z̄,v̄)(−∇Φξ)` iff `(η, ∇Φξ) ∈ N̂`. Complementarity is handled by
/// faces `G` of the `η`-projection of `N̂`, with `∇Φξ ⊥ G`.
pub fn classify_multiplier_coderivative(
    vs: &VariationalSystem,
    x: &[Rational],
    v: &[Rational],
) -> Result<CriticalityVerdict, CriticalityError> {
    let lin = Linearization::new(vs, x, v)?;
    let z = vs.phi.eval(x).map_err(VarsysError::from)?;
    let (n, m) = (lin.n, lin.m);
    let normal = vs.theta.regular_normal_cone(&z, v).map_err(VarsysError::from)?;
    let eta_side = project_out(&normal, &(m..2 * m).collect());
    // variables (ξ, η)
    let dim = n + m;
    let mut base = HPoly::universe(dim);
    for row in 0..n {
        let mut r = lin.h[row].clone();
        r.extend(lin.j.iter().map(|jr| jr[row].clone()));
        base.add_eq(r, Rational::zero());
    }
    // (η, Jξ) ∈ N̂
    let lift = |c: &[Rational]| {
        let mut r = zeros(n);
        let y = lin.pull(&c[m..]);
        for (ri, yi) in r.iter_mut().zip(y) {
            *ri = yi;
        }
        r.extend(c[..m].iter().cloned());
        r
    };
    for c in &normal.ineqs {
        base.add_ineq(lift(&c.normal), c.rhs.clone());
    }
    for c in &normal.eqs {
        base.add_eq(lift(&c.normal), c.rhs.clone());
    }
    let xi_rows: Vec<Vec<Rational>> = (0..n).map(|i| unit(dim, i)).collect();
    let mut certified = Vec::new();
    for g in enumerate_faces(&eta_side) {
        let mut sys = base.clone();
        for c in g.carrier.ineqs.iter() {
            let mut r = zeros(n);
            r.extend(c.normal.iter().cloned());
            sys.add_ineq(r, c.rhs.clone());
        }
        for c in g.carrier.eqs.iter() {
            let mut r = zeros(n);
            r.extend(c.normal.iter().cloned());
            sys.add_eq(r, c.rhs.clone());
        }
        let (rays, lines) = cone_generators(
            m,
            &g.carrier.ineqs.iter().map(|c| c.normal.clone()).collect::<Vec<_>>(),
            &g.carrier.eqs.iter().map(|c| c.normal.clone()).collect::<Vec<_>>(),
        );
        for gen in rays.iter().chain(&lines) {
            let mut r = lin.pull(gen);
            r.resize(dim, Rational::zero());
            sys.add_eq(r, Rational::zero());
        }
        if let Some(sol) = nonzero_image(&sys, &xi_rows) {
            let lead = sol[..n].iter().find(|c| !c.is_zero()).unwrap().abs();
            let sol: Vec<Rational> = sol.iter().map(|c| c / &lead).collect();
            return Ok(CriticalityVerdict {
                status: Status::Critical,
                witness: Some(Witness { xi: sol[..n].to_vec(), eta: sol[n..].to_vec() }),
                face_pair: Some(FacePair { face: g.active_ineq_indices, conjugate_rays: rays, conjugate_lines: lines }),
                certified_faces: certified,
            });
        }
        certified.push(g.active_ineq_indices);
    }
    Ok(CriticalityVerdict { status: Status::Noncritical, witness: None, face_pair: None, certified_faces: certified })
}

/// Exact substitution of `(ξ, η)` into the four conditions, with `ξ ≠ 0`.
pub fn verify_witness(
    vs: &VariationalSystem,
    x: &[Rational],
    v: &[Rational],
    w: &Witness,
) -> Result<bool, CriticalityError> {
    let lin = Linearization::new(vs, x, v)?;
    if w.xi.len() != lin.n || w.eta.len() != lin.m || is_zero_vec(&w.xi) {
        return Ok(false);
    }
    let jxi = mat_vec(&lin.j, &w.xi);
    let hxi = mat_vec(&lin.h, &w.xi);
    let jt = transpose(&lin.j, lin.n);
    let jte = mat_vec(&jt, &w.eta);
    let eq_ok = hxi.iter().zip(&jte).all(|(a, b)| (a + b).is_zero());
    let in_k = lin.k.contains(&jxi);
    Ok(eq_ok && in_k && in_polar(&lin.k, &w.eta) && dot(&w.eta, &jxi).is_zero())
}

/// `η ∈ K*` checked against generators of `K`.
fn in_polar(k: &HPoly, eta: &[Rational]) -> bool {
    let (rays, lines) = cone_generators(
        k.dim,
        &k.ineqs.iter().map(|c| c.normal.clone()).collect::<Vec<_>>(),
        &k.eqs.iter().map(|c| c.normal.clone()).collect::<Vec<_>>(),
    );
    rays.iter().all(|r| dot(r, eta) <= Rational::zero()) && lines.iter().all(|l| dot(l, eta).is_zero())
}

/// Decides `⟨∇ₓΨ u, u⟩ > 0` for every `u ≠ 0` with `∇Φ u ∈ K`.
pub fn sosc_check(vs: &VariationalSystem, x: &[Rational], v: &[Rational]) -> Result<SoscVerdict, CriticalityError> {
    let lin = Linearization::new(vs, x, v)?;
    let c = lin.k.pullback(&lin.j, lin.n);
    let (rays, lines) = cone_generators(
        lin.n,
        &c.ineqs.iter().map(|k| k.normal.clone()).collect::<Vec<_>>(),
        &c.eqs.iter().map(|k| k.normal.clone()).collect::<Vec<_>>(),
    );
    let two = Rational::from_integer(2.into());
    let s: Matrix = (0..lin.n).map(|i| (0..lin.n).map(|j| (&lin.h[i][j] + &lin.h[j][i]) / &two).collect()).collect();
    Ok(strict_positivity(&s, &lines, &rays))
}

fn quad(s: &Matrix, a: &[Rational], b: &[Rational]) -> Rational {
    dot(a, &mat_vec(s, b))
}

fn combine(cols: &[Vec<Rational>], coef: &[Rational], dim: usize) -> Vec<Rational> {
    let mut out = zeros(dim);
    for (c, col) in coef.iter().zip(cols) {
        for (o, x) in out.iter_mut().zip(col) {
            *o += c * x;
        }
    }
    out
}

/// Strict positivity of `uᵀSu` on `span(lines) + cone(rays)` minus the origin,
/// with `rays` spanning a pointed cone complementary to the lines.
pub fn strict_positivity(s: &Matrix, lines: &[Vec<Rational>], rays: &[Vec<Rational>]) -> SoscVerdict {
    let dim = s.len();
    let l = lines.len();
    let q: Matrix = lines.iter().map(|a| lines.iter().map(|b| quad(s, a, b)).collect()).collect();
    // leading pivots of Q
    for k in 1..=l {
        let lead: Matrix = q[..k - 1].iter().map(|r| r[..k - 1].to_vec()).collect();
        let col: Vec<Rational> = q[..k - 1].iter().map(|r| r[k - 1].clone()).collect();
        let inv = inverse(&lead).expect("previous pivots positive");
        let y = mat_vec(&inv, &col);
        let pivot = &q[k - 1][k - 1] - dot(&col, &y);
        if !pivot.is_positive() {
            let mut alpha: Vec<Rational> = y.iter().map(|t| -t).collect();
            alpha.push(Rational::one());
            alpha.resize(l, Rational::zero());
            return SoscVerdict { holds: false, violating_direction: Some(primitive(&combine(lines, &alpha, dim))) };
        }
    }
    if rays.is_empty() {
        return SoscVerdict { holds: true, violating_direction: None };
    }
    // Schur complement over the rays after minimizing out the lines
    let qinv = inverse(&q).unwrap_or_default();
    let b: Matrix = lines.iter().map(|a| rays.iter().map(|r| quad(s, a, r)).collect()).collect();
    let r = rays.len();
    let mut mm: Matrix = rays.iter().map(|a| rays.iter().map(|c| quad(s, a, c)).collect()).collect();
    if l > 0 {
        let qb: Matrix = (0..l)
            .map(|i| (0..r).map(|j| (0..l).fold(Rational::zero(), |acc, t| acc + &qinv[i][t] * &b[t][j])).collect())
            .collect();
        for i in 0..r {
            for j in 0..r {
                let corr = (0..l).fold(Rational::zero(), |acc, t| acc + &b[t][i] * &qb[t][j]);
                mm[i][j] -= corr;
            }
        }
    }
    match copositive_min(&mm) {
        (min, _) if min.is_positive() => SoscVerdict { holds: true, violating_direction: None },
        (_, beta) => {
            let mut u = combine(rays, &beta, dim);
            if l > 0 {
                let bb: Vec<Rational> = (0..l).map(|t| dot(&b[t], &beta)).collect();
                let alpha: Vec<Rational> = mat_vec(&qinv, &bb).iter().map(|t| -t).collect();
                let ul = combine(lines, &alpha, dim);
                u = u.iter().zip(&ul).map(|(a, c)| a + c).collect();
            }
            SoscVerdict { holds: false, violating_direction: Some(primitive(&u)) }
        }
    }
}

/// Minimum of `βᵀMβ` over the standard simplex by enumerating supports, with
/// a minimizer.
pub fn copositive_min(mm: &Matrix) -> (Rational, Vec<Rational>) {
    let r = mm.len();
    let mut best: Option<(Rational, Vec<Rational>)> = None;
    for mask in 1u64..(1u64 << r) {
        let sup: Vec<usize> = (0..r).filter(|i| mask >> i & 1 == 1).collect();
        let k = sup.len();
        // variables (β_σ, μ); M_σσ β − μ 1 = 0, Σβ = 1, β ≥ 0
        let mut sys = HPoly::universe(k + 1);
        for &i in &sup {
            let mut row: Vec<Rational> = sup.iter().map(|&j| mm[i][j].clone()).collect();
            row.push(-Rational::one());
            sys.add_eq(row, Rational::zero());
        }
        let mut ones = vec![Rational::one(); k];
        ones.push(Rational::zero());
        sys.add_eq(ones, Rational::one());
        for t in 0..k {
            sys.add_ineq(unit(k + 1, t).into_iter().map(|x| -x).collect(), Rational::zero());
        }
        if let LpResult::Optimal { x, .. } = lp_minimize(&sys, &unit(k + 1, k)).expect("well-formed") {
            let mut beta = zeros(r);
            for (t, &i) in sup.iter().enumerate() {
                beta[i] = x[t].clone();
            }
            let val = quad(mm, &beta, &beta);
            if best.as_ref().is_none_or(|(b, _)| val < *b) {
                best = Some((val, beta));
            }
        }
    }
    best.expect("vertices of the simplex are always candidates")
}

#[cfg(test)]
mod tests;
