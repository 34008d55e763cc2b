//! Built-in composite problems used by tests, benchmarks and the CLI corpus.

use crate::cpwl::{AffinePiece, CpwlFunction, HalfSpace};
use crate::exact::rational::{add, dot, rat, ratio, scale, zeros, Rational};
use crate::smooth::{PolyExpr, PolyMap};
use crate::varsys::CompositeProblem;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Polynomial from `(coefficient, exponents)` pairs.
pub fn poly(nvars: usize, terms: &[(Rational, &[u32])]) -> PolyExpr {
    PolyExpr::from_terms(nvars, terms.iter().map(|(c, e)| (c.clone(), e.to_vec()))).expect("consistent arity")
}

fn map(nvars: usize, comps: Vec<PolyExpr>) -> PolyMap {
    PolyMap::new(nvars, comps).expect("consistent arity")
}

/// `min −x₁ + 5/2 x₂² + x₃²` subject to `x₁ − x₂²/2 ≤ 0`, `x₁ − x₃²/2 ≤ 0`,
/// `−x₁ − x₂²/2 − x₃²/2 ≤ 0`.
pub fn quad3() -> CompositeProblem {
    let h = ratio(-1, 2);
    let phi0 = poly(3, &[(rat(-1), &[1, 0, 0]), (ratio(5, 2), &[0, 2, 0]), (rat(1), &[0, 0, 2])]);
    let phi = map(
        3,
        vec![
            poly(3, &[(rat(1), &[1, 0, 0]), (h.clone(), &[0, 2, 0])]),
            poly(3, &[(rat(1), &[1, 0, 0]), (h.clone(), &[0, 0, 2])]),
            poly(3, &[(rat(-1), &[1, 0, 0]), (h.clone(), &[0, 2, 0]), (h, &[0, 0, 2])]),
        ],
    );
    CompositeProblem::new(phi0, phi, CpwlFunction::indicator_nonpositive(3)).unwrap()
}

/// `min −x₁ + x₂²/2` subject to `x₁ + x₃² ≤ c`, `x₁ ≤ 0`.
fn quad2(c: i64) -> CompositeProblem {
    let phi0 = poly(3, &[(rat(-1), &[1, 0, 0]), (ratio(1, 2), &[0, 2, 0])]);
    let mut first = vec![(rat(1), &[1u32, 0, 0][..]), (rat(1), &[0, 0, 2][..])];
    if c != 0 {
        first.push((rat(-c), &[0, 0, 0][..]));
    }
    let phi = map(3, vec![poly(3, &first), poly(3, &[(rat(1), &[1, 0, 0])])]);
    CompositeProblem::new(phi0, phi, CpwlFunction::indicator_nonpositive(2)).unwrap()
}

/// Both constraints active at the origin.
pub fn quad2_active() -> CompositeProblem {
    quad2(0)
}

/// First constraint `x₁ + x₃² ≤ 4`, inactive at the origin.
pub fn quad2_inactive() -> CompositeProblem {
    quad2(4)
}

/// `min x₁ + x₂⁴` subject to `−x₁ ≤ 0`, `(x₁ − 2)² + x₂² ≤ 4`.
pub fn izmailov() -> CompositeProblem {
    let phi0 = poly(2, &[(rat(1), &[1, 0]), (rat(1), &[0, 4])]);
    let phi = map(
        2,
        vec![poly(2, &[(rat(-1), &[1, 0])]), poly(2, &[(rat(1), &[2, 0]), (rat(-4), &[1, 0]), (rat(1), &[0, 2])])],
    );
    CompositeProblem::new(phi0, phi, CpwlFunction::indicator_nonpositive(2)).unwrap()
}

/// `min (x − 1)²/2 + max(0, x)`, with KKT point `(0, 1)`.
pub fn onedim() -> CompositeProblem {
    let phi0 = poly(1, &[(ratio(1, 2), &[2]), (rat(-1), &[1]), (ratio(1, 2), &[0])]);
    let theta = CpwlFunction::new(
        1,
        vec![AffinePiece { a: zeros(1), alpha: rat(0) }, AffinePiece { a: vec![rat(1)], alpha: rat(0) }],
        vec![],
    )
    .unwrap();
    CompositeProblem::new(phi0, map(1, vec![PolyExpr::var(1, 0)]), theta).unwrap()
}

/// `min ½|x|² + ⟨c, x⟩` over `x ≥ 0` written as `−x ≤ 0`; linear-quadratic.
pub fn box_qp(c: &[i64]) -> CompositeProblem {
    let n = c.len();
    let mut phi0 = PolyExpr::zero(n);
    for (i, ci) in c.iter().enumerate() {
        let mut sq = vec![0u32; n];
        sq[i] = 2;
        let mut lin = vec![0u32; n];
        lin[i] = 1;
        phi0 = phi0.add(&poly(n, &[(ratio(1, 2), &sq), (rat(*ci), &lin)]));
    }
    let phi = map(n, (0..n).map(|i| PolyExpr::var(n, i).scale(&rat(-1))).collect());
    CompositeProblem::new(phi0, phi, CpwlFunction::indicator_nonpositive(n)).unwrap()
}

/// A CPWL function with a point `(z, v)` on the graph of its subdifferential.
#[derive(Debug, Clone)]
pub struct GraphPoint {
    pub theta: CpwlFunction,
    pub z: Vec<Rational>,
    pub v: Vec<Rational>,
}

fn small_vec(rng: &mut ChaCha8Rng, len: usize, lo: i64, hi: i64) -> Vec<Rational> {
    (0..len).map(|_| rat(rng.random_range(lo..=hi))).collect()
}

/// Random weights on `count` indices, at least one positive.
fn weights(rng: &mut ChaCha8Rng, count: usize) -> Vec<i64> {
    loop {
        let w: Vec<i64> = (0..count).map(|_| rng.random_range(0..=2)).collect();
        if count == 0 || w.iter().any(|&x| x > 0) {
            return w;
        }
    }
}

/// Seeded CPWL data with `m ≤ m_max`, `l ≤ l_max` pieces and `p ≤ p_max`
/// domain rows. Small integer offsets create ties at `z`, so active sets and
/// multiplier supports are often degenerate.
pub fn random_graph_point(seed: u64, m_max: usize, l_max: usize, p_max: usize) -> GraphPoint {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = rng.random_range(1..=m_max);
    let l = rng.random_range(1..=l_max);
    let p = rng.random_range(0..=p_max);
    let z = small_vec(&mut rng, m, -1, 1);
    let offsets: Vec<i64> = (0..l).map(|_| [0, 0, 1, 2][rng.random_range(0..4)]).collect();
    let low = *offsets.iter().min().unwrap();
    let pieces: Vec<AffinePiece> = offsets
        .iter()
        .map(|&o| {
            let a = small_vec(&mut rng, m, -2, 2);
            let alpha = dot(&a, &z) + rat(o - low);
            AffinePiece { a, alpha }
        })
        .collect();
    let mut domain = Vec::new();
    while domain.len() < p {
        let d = small_vec(&mut rng, m, -2, 2);
        if d.iter().all(|x| *x == rat(0)) {
            continue;
        }
        let slack = [0, 0, 1][rng.random_range(0..3)];
        let beta = dot(&d, &z) + rat(slack);
        domain.push(HalfSpace { d, beta });
    }
    let theta = CpwlFunction::new(m, pieces, domain).expect("z lies in the domain");
    let act = theta.active(&z).expect("z lies in the domain");
    let lam = weights(&mut rng, act.k.len());
    let total: i64 = lam.iter().sum();
    let mut v = zeros(m);
    for (&i, &w) in act.k.iter().zip(&lam) {
        v = add(&v, &scale(&theta.pieces[i].a, &ratio(w, total)));
    }
    for &i in &act.i {
        let mu = rng.random_range(0..=2);
        v = add(&v, &scale(&theta.domain[i].d, &rat(mu)));
    }
    GraphPoint { theta, z, v }
}

/// A composite problem with KKT point `(x̄, v̄) = (0, v)`.
#[derive(Debug, Clone)]
pub struct RandomKkt {
    pub problem: CompositeProblem,
    pub x: Vec<Rational>,
    pub v: Vec<Rational>,
}

/// Seeded composite problem over [`random_graph_point`] data: `Φ` is affine
/// plus diagonal quadratics with `Φ(0) = z`, and `φ₀` is chosen so that
/// `∇φ₀(0) + ∇Φ(0)*v = 0`. Integer curvature makes singular Hessians common.
pub fn random_kkt(seed: u64, n_max: usize, m_max: usize, l_max: usize, p_max: usize) -> RandomKkt {
    let g = random_graph_point(seed, m_max, l_max, p_max);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let n = rng.random_range(1..=n_max);
    let m = g.theta.m;
    let mut comps = Vec::with_capacity(m);
    let mut jac = Vec::with_capacity(m);
    for j in 0..m {
        let row = small_vec(&mut rng, n, -1, 1);
        let mut c = PolyExpr::constant(n, g.z[j].clone());
        for (k, a) in row.iter().enumerate() {
            c = c.add(&PolyExpr::var(n, k).scale(a));
            let q = rng.random_range(-1i64..=1);
            let mut e = vec![0u32; n];
            e[k] = 2;
            c.add_term(ratio(q, 2), e);
        }
        comps.push(c);
        jac.push(row);
    }
    let mut phi0 = PolyExpr::zero(n);
    for k in 0..n {
        let grad_k = jac.iter().zip(&g.v).fold(rat(0), |acc, (row, vj)| acc + &row[k] * vj);
        let mut lin = vec![0u32; n];
        lin[k] = 1;
        phi0.add_term(-grad_k, lin);
        let mut sq = vec![0u32; n];
        sq[k] = 2;
        phi0.add_term(ratio(rng.random_range(-1i64..=2), 2), sq);
    }
    if n >= 2 {
        let mut e = vec![0u32; n];
        e[0] = 1;
        e[1] = 1;
        phi0.add_term(rat(rng.random_range(-1i64..=1)), e);
    }
    let problem = CompositeProblem::new(phi0, map(n, comps), g.theta).expect("consistent arity");
    RandomKkt { problem, x: zeros(n), v: g.v }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_points_lie_on_the_graph() {
        for seed in 0..40 {
            let g = random_graph_point(seed, 3, 4, 3);
            assert!(g.theta.is_subgradient(&g.z, &g.v).unwrap(), "seed {seed}");
            let r = random_kkt(seed, 3, 3, 3, 2);
            let vs = r.problem.system().unwrap();
            assert!(vs.certified_point(&r.x, &r.v).is_ok(), "seed {seed}");
        }
    }
}
