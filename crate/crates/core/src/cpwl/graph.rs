//! The graph of `∂θ` as a finite union of product polyhedra
//! `G_{P,Q} = Z_{P,Q} × V_{P,Q}`, and the generalized derivatives built on it.

use super::{CpwlError, CpwlFunction};
use crate::exact::dd::{convert_rep_v, dual_cone_h};
use crate::exact::lp::is_feasible;
use crate::exact::poly::{Constraint, HPoly, VPoly};
use crate::exact::project::project_out;
use crate::exact::rational::{dot, neg, primitive, primitive_line, sub, zeros, Rational};
use num_traits::{One, Zero};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::{Arc, RwLock};

/// Build-once, read-many store of graph pieces keyed by `(P, Q)`.
#[derive(Debug, Default)]
pub(crate) struct PieceCache(RwLock<HashMap<(Vec<usize>, Vec<usize>), Arc<GraphPiece>>>);

impl Clone for PieceCache {
    fn clone(&self) -> Self {
        PieceCache::default()
    }
}

/// `Z`: points whose maximizing pieces include `P` and tight rows include `Q`;
/// `V = co{a_i : P} + cone{d_i : Q}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphPiece {
    pub p: BTreeSet<usize>,
    pub q: BTreeSet<usize>,
    pub zset: HPoly,
    pub vset: HPoly,
}

/// A finite union of polyhedral cones of a common dimension.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConeUnion {
    pub dim: usize,
    pub members: Vec<HPoly>,
}

impl ConeUnion {
    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, x: &[Rational]) -> bool {
        self.members.iter().any(|m| m.contains(x))
    }

    fn push_unique(&mut self, c: HPoly) {
        let c = c.canonical();
        if !self.members.contains(&c) {
            self.members.push(c);
        }
    }
}

pub(crate) fn subsets(s: &BTreeSet<usize>) -> Vec<BTreeSet<usize>> {
    let items: Vec<usize> = s.iter().cloned().collect();
    (0..1usize << items.len())
        .map(|mask| items.iter().enumerate().filter(|(b, _)| mask >> b & 1 == 1).map(|(_, &x)| x).collect())
        .collect()
}

fn build_piece(theta: &CpwlFunction, p: &BTreeSet<usize>, q: &BTreeSet<usize>) -> GraphPiece {
    let m = theta.m;
    let s = *p.iter().next().expect("P nonempty");
    let a = |i: usize| &theta.pieces[i].a;
    let alpha = |i: usize| &theta.pieces[i].alpha;
    let mut zset = HPoly::universe(m);
    for i in 0..theta.pieces.len() {
        if i == s {
            continue;
        }
        let normal = sub(a(i), a(s));
        let rhs = alpha(i) - alpha(s);
        if p.contains(&i) {
            zset.add_eq(normal, rhs);
        } else {
            zset.add_ineq(normal, rhs);
        }
    }
    for (j, h) in theta.domain.iter().enumerate() {
        if q.contains(&j) {
            zset.add_eq(h.d.clone(), h.beta.clone());
        } else {
            zset.add_ineq(h.d.clone(), h.beta.clone());
        }
    }
    // lift (v, λ, μ): v = Σλa + Σμd, Σλ = 1, λ, μ ≥ 0; then drop (λ, μ)
    let (np, nq) = (p.len(), q.len());
    let n = m + np + nq;
    let mut lift = HPoly::universe(n);
    for r in 0..m {
        let mut row = zeros(n);
        row[r] = Rational::one();
        for (t, &i) in p.iter().enumerate() {
            row[m + t] = -a(i)[r].clone();
        }
        for (t, &j) in q.iter().enumerate() {
            row[m + np + t] = -theta.domain[j].d[r].clone();
        }
        lift.add_eq(row, Rational::zero());
    }
    let mut simplex = zeros(n);
    for x in simplex.iter_mut().skip(m).take(np) {
        *x = Rational::one();
    }
    lift.add_eq(simplex, Rational::one());
    for t in m..n {
        let mut g = zeros(n);
        g[t] = -Rational::one();
        lift.add_ineq(g, Rational::zero());
    }
    let vset = project_out(&lift, &(m..n).collect());
    GraphPiece { p: p.clone(), q: q.clone(), zset, vset }
}

fn piece(theta: &CpwlFunction, p: &BTreeSet<usize>, q: &BTreeSet<usize>) -> Arc<GraphPiece> {
    let key = (p.iter().cloned().collect::<Vec<_>>(), q.iter().cloned().collect::<Vec<_>>());
    if let Some(g) = theta.cache().0.read().unwrap().get(&key) {
        return g.clone();
    }
    let g = Arc::new(build_piece(theta, p, q));
    theta.cache().0.write().unwrap().entry(key).or_insert(g).clone()
}

pub(crate) fn pieces_at(
    theta: &CpwlFunction,
    z: &[Rational],
    v: &[Rational],
) -> Result<Vec<Arc<GraphPiece>>, CpwlError> {
    let act = theta.active(z)?;
    let mut out = Vec::new();
    for p in subsets(&act.k).into_iter().filter(|p| !p.is_empty()) {
        for q in subsets(&act.i) {
            let g = piece(theta, &p, &q);
            if g.vset.contains(v) {
                out.push(g);
            }
        }
    }
    if out.is_empty() {
        return Err(CpwlError::NotSubgradient);
    }
    Ok(out)
}

fn product(a: &HPoly, b: &HPoly) -> HPoly {
    let (da, db) = (a.dim, b.dim);
    let left = |c: &Constraint| {
        let mut n = c.normal.clone();
        n.extend(zeros(db));
        Constraint::new(n, c.rhs.clone())
    };
    let right = |c: &Constraint| {
        let mut n = zeros(da);
        n.extend(c.normal.iter().cloned());
        Constraint::new(n, c.rhs.clone())
    };
    HPoly {
        dim: da + db,
        ineqs: a.ineqs.iter().map(left).chain(b.ineqs.iter().map(right)).collect(),
        eqs: a.eqs.iter().map(left).chain(b.eqs.iter().map(right)).collect(),
    }
}

/// `{w : (w, y) ∈ C}` for a set `C` in the product space.
fn slice_second(c: &HPoly, y: &[Rational], first_dim: usize) -> HPoly {
    let cut = |k: &Constraint| Constraint::new(k.normal[..first_dim].to_vec(), &k.rhs - dot(&k.normal[first_dim..], y));
    HPoly { dim: first_dim, ineqs: c.ineqs.iter().map(cut).collect(), eqs: c.eqs.iter().map(cut).collect() }
}

impl CpwlFunction {
    /// Every graph piece with nonempty `Z`, over all index sets.
    pub fn all_graph_pieces(&self) -> Vec<Arc<GraphPiece>> {
        let all_p: BTreeSet<usize> = (0..self.pieces.len()).collect();
        let all_q: BTreeSet<usize> = (0..self.domain.len()).collect();
        let mut out = Vec::new();
        for p in subsets(&all_p).into_iter().filter(|p| !p.is_empty()) {
            for q in subsets(&all_q) {
                let g = piece(self, &p, &q);
                if is_feasible(&g.zset) {
                    out.push(g);
                }
            }
        }
        out
    }

    /// Tangent cones `T(z; Z) × T(v; V)` of the pieces containing `(z, v)`.
    pub fn graph_tangent_cones(&self, z: &[Rational], v: &[Rational]) -> Result<Vec<HPoly>, CpwlError> {
        let mut out: Vec<HPoly> = Vec::new();
        for g in self.pieces_at(z, v)? {
            let t = product(&g.zset.tangent_cone_at(z), &g.vset.tangent_cone_at(v)).canonical();
            if !out.contains(&t) {
                out.push(t);
            }
        }
        Ok(out)
    }

    /// Graphical derivative `(D∂θ)(z,v)(u)` from the tangent cone of the graph.
    pub fn graph_tangent_oracle(&self, z: &[Rational], v: &[Rational], u: &[Rational]) -> Result<ConeUnion, CpwlError> {
        let m = self.m;
        let mut out = ConeUnion { dim: m, members: vec![] };
        for g in self.pieces_at(z, v)? {
            if g.zset.tangent_cone_at(z).contains(u) {
                out.push_unique(g.vset.tangent_cone_at(v));
            }
        }
        Ok(out)
    }

    /// Regular coderivative by the closed form: the polar of the critical
    /// cone when `u ∈ −K`, empty otherwise.
    pub fn regular_coderivative(
        &self,
        z: &[Rational],
        v: &[Rational],
        u: &[Rational],
    ) -> Result<Option<VPoly>, CpwlError> {
        let k = self.critical_cone(z, v)?.hrep;
        if k.contains(&neg(u)) {
            Ok(Some(dual_cone_h(&k).expect("cone")))
        } else {
            Ok(None)
        }
    }

    /// Regular normal cone to the graph at `(z, v)`: the polar of the union
    /// of piece tangent cones.
    pub fn regular_normal_cone(&self, z: &[Rational], v: &[Rational]) -> Result<HPoly, CpwlError> {
        let mut n = HPoly::universe(2 * self.m);
        for t in self.graph_tangent_cones(z, v)? {
            n = n.intersect(&convert_rep_v(&dual_cone_h(&t).expect("cone")).expect("well-formed"));
        }
        Ok(n.canonical())
    }

    /// Regular coderivative straight from the regular normal cone.
    pub fn regular_coderivative_oracle(
        &self,
        z: &[Rational],
        v: &[Rational],
        u: &[Rational],
    ) -> Result<Option<HPoly>, CpwlError> {
        let n = self.regular_normal_cone(z, v)?;
        let s = slice_second(&n, &neg(u), self.m);
        Ok(if is_feasible(&s) { Some(s) } else { None })
    }

    /// Limiting normal cone to the graph at `(z, v)` as a union of cones.
    ///
    /// Near `(z, v)` the graph coincides with the union of its piece tangent
    /// cones. The arrangement of all their constraint hyperplanes splits
    /// space into relatively open cells on which the regular normal cone is
    /// constant; the union over cells lying in the graph is the limiting
    /// normal cone.
    pub fn limiting_normal_cone(&self, z: &[Rational], v: &[Rational]) -> Result<ConeUnion, CpwlError> {
        let dim = 2 * self.m;
        let cones = self.graph_tangent_cones(z, v)?;
        let mut planes: BTreeMap<Vec<Rational>, usize> = BTreeMap::new();
        let mut plane_list: Vec<Vec<Rational>> = Vec::new();
        // per cone: (plane, orientation) for inequalities, plane for equalities
        let mut shapes: Vec<(Vec<(usize, bool)>, Vec<usize>)> = Vec::new();
        let mut index = |n: &[Rational]| -> (usize, bool) {
            let key = primitive_line(n);
            let same = primitive(n) == key;
            let next = plane_list.len();
            let id = *planes.entry(key.clone()).or_insert_with(|| {
                plane_list.push(key);
                next
            });
            (id, same)
        };
        for c in &cones {
            let ineqs = c.ineqs.iter().map(|k| index(&k.normal)).collect();
            let eqs = c.eqs.iter().map(|k| index(&k.normal).0).collect();
            shapes.push((ineqs, eqs));
        }
        let mut out = ConeUnion { dim, members: vec![] };
        let mut signs: Vec<i8> = Vec::new();
        cells(&plane_list, &shapes, &mut signs, &HPoly::universe(dim), &mut |signs| {
            let mut n = HPoly::universe(dim);
            for (ineqs, eqs) in &shapes {
                if !inside(ineqs, eqs, signs) {
                    continue;
                }
                let rays = ineqs
                    .iter()
                    .filter(|(h, _)| signs[*h] == 0)
                    .map(|(h, same)| if *same { plane_list[*h].clone() } else { neg(&plane_list[*h]) })
                    .collect();
                let lines = eqs.iter().map(|&h| plane_list[h].clone()).collect();
                n = n.intersect(&convert_rep_v(&VPoly::cone(dim, rays, lines)).expect("well-formed"));
            }
            out.push_unique(n);
        });
        Ok(out)
    }

    /// Limiting coderivative `(D*∂θ)(z,v)(u) = {w : (w, −u) ∈ N}` as a union
    /// of polyhedra (cones when `u = 0`).
    pub fn limiting_coderivative(
        &self,
        z: &[Rational],
        v: &[Rational],
        u: &[Rational],
    ) -> Result<Vec<HPoly>, CpwlError> {
        let n = self.limiting_normal_cone(z, v)?;
        let nu = neg(u);
        let mut out: Vec<HPoly> = Vec::new();
        for c in &n.members {
            let s = slice_second(c, &nu, self.m);
            if is_feasible(&s) {
                let s = s.canonical();
                if !out.contains(&s) {
                    out.push(s);
                }
            }
        }
        Ok(out)
    }
}

fn inside(ineqs: &[(usize, bool)], eqs: &[usize], signs: &[i8]) -> bool {
    ineqs.iter().all(|&(h, same)| {
        let s = signs[h];
        if same {
            s <= 0
        } else {
            s >= 0
        }
    }) && eqs.iter().all(|&h| signs[h] == 0)
}

/// Could a cell extending the partial sign vector still lie in the cone?
fn maybe_inside(ineqs: &[(usize, bool)], eqs: &[usize], signs: &[i8]) -> bool {
    let assigned = |h: usize| h < signs.len();
    ineqs.iter().all(|&(h, same)| !assigned(h) || if same { signs[h] <= 0 } else { signs[h] >= 0 })
        && eqs.iter().all(|&h| !assigned(h) || signs[h] == 0)
}

fn cells(
    planes: &[Vec<Rational>],
    shapes: &[(Vec<(usize, bool)>, Vec<usize>)],
    signs: &mut Vec<i8>,
    sys: &HPoly,
    emit: &mut dyn FnMut(&[i8]),
) {
    if !shapes.iter().any(|(i, e)| maybe_inside(i, e, signs)) {
        return;
    }
    if signs.len() == planes.len() {
        emit(signs);
        return;
    }
    let h = &planes[signs.len()];
    for s in [-1i8, 0, 1] {
        let mut next = sys.clone();
        match s {
            0 => next.add_eq(h.clone(), Rational::zero()),
            -1 => next.add_ineq(h.clone(), -Rational::one()),
            _ => next.add_ineq(neg(h), -Rational::one()),
        }
        if is_feasible(&next) {
            signs.push(s);
            cells(planes, shapes, signs, &next, emit);
            signs.pop();
        }
    }
}
