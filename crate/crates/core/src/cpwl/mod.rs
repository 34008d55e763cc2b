//! Convex piecewise-linear functions `θ(z) = max_i ⟨a_i,z⟩ − α_i` on the
//! polyhedral domain `{⟨d_i,z⟩ ≤ β_i}` and their first-order objects.

mod graph;

pub use graph::{ConeUnion, GraphPiece};

use crate::exact::dd::{cone_subset_of_union, convert_rep_v, hpoly_subset};
use crate::exact::lp::{is_feasible, lp_feasible, Feasibility};
use crate::exact::poly::{HPoly, VPoly};
use crate::exact::rational::{dot, sub, zeros, Rational};
use num_traits::{One, Signed, Zero};
use std::collections::BTreeSet;
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CpwlError {
    #[error("θ needs at least one affine piece")]
    NoPieces,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("dom θ is empty")]
    EmptyDomain,
    #[error("point is outside dom θ")]
    OutsideDomain,
    #[error("v is not a subgradient of θ at z")]
    NotSubgradient,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffinePiece {
    pub a: Vec<Rational>,
    pub alpha: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HalfSpace {
    pub d: Vec<Rational>,
    pub beta: Rational,
}

#[derive(Debug, Clone)]
pub struct CpwlFunction {
    pub m: usize,
    pub pieces: Vec<AffinePiece>,
    pub domain: Vec<HalfSpace>,
    cache: graph::PieceCache,
}

impl PartialEq for CpwlFunction {
    fn eq(&self, other: &Self) -> bool {
        self.m == other.m && self.pieces == other.pieces && self.domain == other.domain
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Extended {
    Finite(Rational),
    PlusInfinity,
}

impl Extended {
    pub fn finite(&self) -> Option<&Rational> {
        match self {
            Extended::Finite(r) => Some(r),
            Extended::PlusInfinity => None,
        }
    }
}

/// Indices (0-based) of maximizing pieces and of tight domain rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActiveSets {
    pub k: BTreeSet<usize>,
    pub i: BTreeSet<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubgradientDecomposition {
    pub v1: Vec<Rational>,
    pub v2: Vec<Rational>,
    pub lambda: Vec<Rational>,
    pub mu: Vec<Rational>,
    pub j1: BTreeSet<usize>,
    pub j2: BTreeSet<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CriticalCone {
    pub hrep: HPoly,
    pub generating_decomposition: SubgradientDecomposition,
}

impl CpwlFunction {
    pub fn new(m: usize, pieces: Vec<AffinePiece>, domain: Vec<HalfSpace>) -> Result<Self, CpwlError> {
        if pieces.is_empty() {
            return Err(CpwlError::NoPieces);
        }
        for len in pieces.iter().map(|p| p.a.len()).chain(domain.iter().map(|h| h.d.len())) {
            if len != m {
                return Err(CpwlError::Dimension { expected: m, found: len });
            }
        }
        let theta = CpwlFunction { m, pieces, domain, cache: Default::default() };
        if !is_feasible(&theta.domain_hpoly()) {
            return Err(CpwlError::EmptyDomain);
        }
        Ok(theta)
    }

    /// Indicator of the nonpositive orthant.
    pub fn indicator_nonpositive(m: usize) -> Self {
        let domain =
            (0..m).map(|i| HalfSpace { d: crate::exact::rational::unit(m, i), beta: Rational::zero() }).collect();
        Self::new(m, vec![AffinePiece { a: zeros(m), alpha: Rational::zero() }], domain).unwrap()
    }

    /// Indicator of the origin.
    pub fn indicator_zero(m: usize) -> Self {
        let mut domain = Vec::new();
        for i in 0..m {
            let e = crate::exact::rational::unit(m, i);
            domain.push(HalfSpace { d: e.iter().map(|x| -x).collect(), beta: Rational::zero() });
            domain.push(HalfSpace { d: e, beta: Rational::zero() });
        }
        Self::new(m, vec![AffinePiece { a: zeros(m), alpha: Rational::zero() }], domain).unwrap()
    }

    /// `max(z_1, …, z_m)`.
    pub fn max_of_coordinates(m: usize) -> Self {
        let pieces =
            (0..m).map(|i| AffinePiece { a: crate::exact::rational::unit(m, i), alpha: Rational::zero() }).collect();
        Self::new(m, pieces, vec![]).unwrap()
    }

    pub fn domain_hpoly(&self) -> HPoly {
        let mut p = HPoly::universe(self.m);
        for h in &self.domain {
            p.add_ineq(h.d.clone(), h.beta.clone());
        }
        p
    }

    fn piece_value(&self, i: usize, z: &[Rational]) -> Rational {
        dot(&self.pieces[i].a, z) - &self.pieces[i].alpha
    }

    fn check_dim(&self, z: &[Rational]) -> Result<(), CpwlError> {
        if z.len() != self.m {
            return Err(CpwlError::Dimension { expected: self.m, found: z.len() });
        }
        Ok(())
    }

    pub fn in_domain(&self, z: &[Rational]) -> bool {
        self.domain.iter().all(|h| dot(&h.d, z) <= h.beta)
    }

    pub fn eval_and_active(&self, z: &[Rational]) -> Result<(Extended, ActiveSets), CpwlError> {
        self.check_dim(z)?;
        let i: BTreeSet<usize> =
            (0..self.domain.len()).filter(|&j| dot(&self.domain[j].d, z) == self.domain[j].beta).collect();
        if !self.in_domain(z) {
            return Ok((Extended::PlusInfinity, ActiveSets { k: BTreeSet::new(), i }));
        }
        let vals: Vec<Rational> = (0..self.pieces.len()).map(|j| self.piece_value(j, z)).collect();
        let max = vals.iter().max().unwrap().clone();
        let k = (0..vals.len()).filter(|&j| vals[j] == max).collect();
        Ok((Extended::Finite(max), ActiveSets { k, i }))
    }

    pub fn active(&self, z: &[Rational]) -> Result<ActiveSets, CpwlError> {
        let (val, act) = self.eval_and_active(z)?;
        if val.finite().is_none() {
            return Err(CpwlError::OutsideDomain);
        }
        Ok(act)
    }

    /// Basic subdifferential `co{a_i : K} + cone{d_i : I}` and singular
    /// subdifferential `cone{d_i : I}`.
    pub fn subdifferentials(&self, z: &[Rational]) -> Result<(VPoly, VPoly), CpwlError> {
        let act = self.active(z)?;
        let rays: Vec<Vec<Rational>> = act.i.iter().map(|&j| self.domain[j].d.clone()).collect();
        let basic = VPoly {
            dim: self.m,
            points: act.k.iter().map(|&j| self.pieces[j].a.clone()).collect(),
            rays: rays.clone(),
            lines: vec![],
        };
        Ok((basic, VPoly::cone(self.m, rays, vec![])))
    }

    /// H-representation of `∂θ(z)`.
    pub fn subdifferential_hpoly(&self, z: &[Rational]) -> Result<HPoly, CpwlError> {
        let act = self.active(z)?;
        Ok(self.piece_vset(&act.k, &act.i))
    }

    pub(crate) fn piece_vset(&self, p: &BTreeSet<usize>, q: &BTreeSet<usize>) -> HPoly {
        let v = VPoly {
            dim: self.m,
            points: p.iter().map(|&j| self.pieces[j].a.clone()).collect(),
            rays: q.iter().map(|&j| self.domain[j].d.clone()).collect(),
            lines: vec![],
        };
        convert_rep_v(&v).expect("well-formed")
    }

    pub fn is_subgradient(&self, z: &[Rational], v: &[Rational]) -> Result<bool, CpwlError> {
        self.check_dim(v)?;
        Ok(self.subdifferential_hpoly(z)?.contains(v))
    }

    /// `T(z; dom θ) = {w : ⟨d_i,w⟩ ≤ 0, i ∈ I(z)}`.
    pub fn tangent_cone(&self, z: &[Rational]) -> Result<HPoly, CpwlError> {
        let act = self.active(z)?;
        Ok(HPoly::cone(self.m, act.i.iter().map(|&j| self.domain[j].d.clone()).collect(), vec![]))
    }

    pub fn directional_derivative(&self, z: &[Rational], w: &[Rational]) -> Result<Extended, CpwlError> {
        let act = self.active(z)?;
        self.check_dim(w)?;
        if act.i.iter().any(|&j| dot(&self.domain[j].d, w).is_positive()) {
            return Ok(Extended::PlusInfinity);
        }
        Ok(Extended::Finite(act.k.iter().map(|&j| dot(&self.pieces[j].a, w)).max().unwrap()))
    }

    /// Some `(λ, μ)` with `v = Σ λ_i a_i + Σ μ_i d_i`, supported on `K × I`:
    /// the basic solution reached by the exact simplex.
    pub fn decompose_subgradient(&self, z: &[Rational], v: &[Rational]) -> Result<SubgradientDecomposition, CpwlError> {
        self.check_dim(v)?;
        let act = self.active(z)?;
        let ks: Vec<usize> = act.k.iter().cloned().collect();
        let is: Vec<usize> = act.i.iter().cloned().collect();
        let n = ks.len() + is.len();
        let mut sys = HPoly::universe(n);
        for t in 0..n {
            let mut g = zeros(n);
            g[t] = -Rational::one();
            sys.add_ineq(g, Rational::zero());
        }
        for r in 0..self.m {
            let row: Vec<Rational> = ks
                .iter()
                .map(|&j| self.pieces[j].a[r].clone())
                .chain(is.iter().map(|&j| self.domain[j].d[r].clone()))
                .collect();
            sys.add_eq(row, v[r].clone());
        }
        let mut simplex = zeros(n);
        for s in simplex.iter_mut().take(ks.len()) {
            *s = Rational::one();
        }
        sys.add_eq(simplex, Rational::one());
        let Feasibility::Feasible(w) = lp_feasible(&sys).expect("well-formed") else {
            return Err(CpwlError::NotSubgradient);
        };
        let mut lambda = zeros(self.pieces.len());
        let mut mu = zeros(self.domain.len());
        for (t, &j) in ks.iter().enumerate() {
            lambda[j] = w[t].clone();
        }
        for (t, &j) in is.iter().enumerate() {
            mu[j] = w[ks.len() + t].clone();
        }
        Ok(self.decomposition_from(lambda, mu))
    }

    pub fn decomposition_from(&self, lambda: Vec<Rational>, mu: Vec<Rational>) -> SubgradientDecomposition {
        let mut v1 = zeros(self.m);
        let mut v2 = zeros(self.m);
        for (l, p) in lambda.iter().zip(&self.pieces) {
            for (x, a) in v1.iter_mut().zip(&p.a) {
                *x += l * a;
            }
        }
        for (u, h) in mu.iter().zip(&self.domain) {
            for (x, d) in v2.iter_mut().zip(&h.d) {
                *x += u * d;
            }
        }
        let j1 = (0..lambda.len()).filter(|&j| lambda[j].is_positive()).collect();
        let j2 = (0..mu.len()).filter(|&j| mu[j].is_positive()).collect();
        SubgradientDecomposition { v1, v2, lambda, mu, j1, j2 }
    }

    /// Critical cone assembled from a decomposition:
    /// equalities on `J₁` and `J₂`, inequalities on `K∖J₁` and `I∖J₂`.
    pub fn critical_cone(&self, z: &[Rational], v: &[Rational]) -> Result<CriticalCone, CpwlError> {
        let dec = self.decompose_subgradient(z, v)?;
        self.critical_cone_with(z, dec)
    }

    pub fn critical_cone_with(&self, z: &[Rational], dec: SubgradientDecomposition) -> Result<CriticalCone, CpwlError> {
        let act = self.active(z)?;
        let a = |i: usize| &self.pieces[i].a;
        let mut eqs = Vec::new();
        let mut ineqs = Vec::new();
        let j1: Vec<usize> = dec.j1.iter().cloned().collect();
        for (x, &i) in j1.iter().enumerate() {
            for &j in &j1[x + 1..] {
                eqs.push(sub(a(i), a(j)));
            }
        }
        for &i in act.k.difference(&dec.j1) {
            for &j in &j1 {
                ineqs.push(sub(a(i), a(j)));
            }
        }
        for &i in &dec.j2 {
            eqs.push(self.domain[i].d.clone());
        }
        for &i in act.i.difference(&dec.j2) {
            ineqs.push(self.domain[i].d.clone());
        }
        Ok(CriticalCone { hrep: HPoly::cone(self.m, ineqs, eqs), generating_decomposition: dec })
    }

    /// Critical cone straight from its definition
    /// `{w ∈ T(z; dom θ) : ⟨v,w⟩ = dθ(z)(w)}`, as a union over the piece `s`
    /// attaining the directional derivative.
    pub fn critical_cone_oracle(&self, z: &[Rational], v: &[Rational]) -> Result<ConeUnion, CpwlError> {
        if !self.is_subgradient(z, v)? {
            return Err(CpwlError::NotSubgradient);
        }
        let act = self.active(z)?;
        let members = act
            .k
            .iter()
            .map(|&s| {
                let mut ineqs: Vec<Vec<Rational>> = act.i.iter().map(|&j| self.domain[j].d.clone()).collect();
                ineqs.extend(act.k.iter().filter(|&&i| i != s).map(|&i| sub(&self.pieces[i].a, &self.pieces[s].a)));
                HPoly::cone(self.m, ineqs, vec![sub(v, &self.pieces[s].a)])
            })
            .collect();
        Ok(ConeUnion { dim: self.m, members })
    }

    pub(crate) fn cache(&self) -> &graph::PieceCache {
        &self.cache
    }

    /// All graph pieces containing `(z, v)`.
    pub fn pieces_at(&self, z: &[Rational], v: &[Rational]) -> Result<Vec<Arc<GraphPiece>>, CpwlError> {
        graph::pieces_at(self, z, v)
    }
}

impl ConeUnion {
    /// Exact set equality with a single convex cone.
    pub fn equals_cone(&self, c: &HPoly) -> bool {
        self.members.iter().all(|m| hpoly_subset(m, c)) && cone_subset_of_union(c, &self.members)
    }
}
