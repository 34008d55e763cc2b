//! Double description: H/V conversion, polar cones, exact set relations.

use super::linalg::{inverse, linear_kernel, rank, Matrix};
use super::lp::{is_feasible, lp_feasible};
use super::poly::{Constraint, ExactError, HPoly, VPoly};
use super::rational::{dot, primitive, primitive_line, zeros, Rational};
use num_traits::{One, Signed, Zero};
use std::collections::BTreeSet;

/// Generators of `{x : G x ≤ 0, E x = 0}`: extreme rays of the pointed part
/// (taken inside the orthogonal complement of the lineality space) and a
/// basis of the lineality space.
pub fn cone_generators(
    dim: usize,
    ineqs: &[Vec<Rational>],
    eqs: &[Vec<Rational>],
) -> (Vec<Vec<Rational>>, Vec<Vec<Rational>>) {
    let mut all: Matrix = ineqs.to_vec();
    all.extend(eqs.iter().cloned());
    let lines = linear_kernel(&all, dim);
    let mut wsys: Matrix = eqs.to_vec();
    wsys.extend(lines.iter().cloned());
    let basis = linear_kernel(&wsys, dim);
    let k = basis.len();
    if k == 0 {
        return (vec![], lines);
    }
    // constraint rows in basis coordinates
    let m: Matrix = ineqs.iter().map(|g| basis.iter().map(|b| dot(g, b)).collect()).collect();
    let ys = pointed_rays(&m, k);
    let mut rays: Vec<Vec<Rational>> = ys
        .iter()
        .map(|y| {
            let mut x = zeros(dim);
            for (c, b) in y.iter().zip(&basis) {
                for (xi, bi) in x.iter_mut().zip(b) {
                    *xi += c * bi;
                }
            }
            primitive(&x)
        })
        .collect();
    rays.sort();
    rays.dedup();
    (rays, lines)
}

struct DdRay {
    r: Vec<Rational>,
    zero: BTreeSet<usize>,
}

/// Extreme rays of the pointed cone `{y ∈ R^k : M y ≤ 0}` (M has rank k).
fn pointed_rays(m: &Matrix, k: usize) -> Vec<Vec<Rational>> {
    // initial simplicial cone from k independent rows
    let mut chosen: Vec<usize> = Vec::new();
    let mut rows: Matrix = Vec::new();
    for (i, row) in m.iter().enumerate() {
        let mut trial = rows.clone();
        trial.push(row.clone());
        if rank(&trial, k) > rows.len() {
            rows = trial;
            chosen.push(i);
            if rows.len() == k {
                break;
            }
        }
    }
    assert_eq!(rows.len(), k, "cone is not pointed in its section");
    let inv = inverse(&rows).expect("independent rows");
    let mut rays: Vec<DdRay> = (0..k)
        .map(|j| {
            let r: Vec<Rational> = (0..k).map(|i| -inv[i][j].clone()).collect();
            let zero = chosen.iter().enumerate().filter(|&(t, _)| t != j).map(|(_, &c)| c).collect();
            DdRay { r: primitive(&r), zero }
        })
        .collect();
    for (idx, h) in m.iter().enumerate() {
        if chosen.contains(&idx) {
            continue;
        }
        let vals: Vec<Rational> = rays.iter().map(|r| dot(h, &r.r)).collect();
        let pos: Vec<usize> = (0..rays.len()).filter(|&i| vals[i].is_positive()).collect();
        let neg: Vec<usize> = (0..rays.len()).filter(|&i| vals[i].is_negative()).collect();
        if pos.is_empty() {
            for (r, v) in rays.iter_mut().zip(&vals) {
                if v.is_zero() {
                    r.zero.insert(idx);
                }
            }
            continue;
        }
        let mut next: Vec<DdRay> = Vec::new();
        for &p in &pos {
            for &n in &neg {
                let common: BTreeSet<usize> = rays[p].zero.intersection(&rays[n].zero).cloned().collect();
                if common.len() + 2 < k {
                    continue;
                }
                let adjacent = !rays.iter().enumerate().any(|(o, r)| o != p && o != n && common.is_subset(&r.zero));
                if !adjacent {
                    continue;
                }
                let r: Vec<Rational> =
                    rays[n].r.iter().zip(&rays[p].r).map(|(a, b)| &vals[p] * a - &vals[n] * b).collect();
                let mut zero = common;
                zero.insert(idx);
                next.push(DdRay { r: primitive(&r), zero });
            }
        }
        for (i, mut r) in rays.into_iter().enumerate() {
            if vals[i].is_zero() {
                r.zero.insert(idx);
                next.push(r);
            } else if vals[i].is_negative() {
                next.push(r);
            }
        }
        rays = next;
    }
    rays.into_iter().map(|r| r.r).collect()
}

/// H → V. An empty polyhedron yields a `VPoly` without points.
pub fn convert_rep(p: &HPoly) -> Result<VPoly, ExactError> {
    p.check()?;
    let d = p.dim;
    let lift = |c: &Constraint| {
        let mut n = c.normal.clone();
        n.push(-c.rhs.clone());
        n
    };
    let mut ineqs: Vec<Vec<Rational>> = p.ineqs.iter().map(lift).collect();
    let mut t = zeros(d + 1);
    t[d] = -Rational::one();
    ineqs.push(t);
    let eqs: Vec<Vec<Rational>> = p.eqs.iter().map(lift).collect();
    let (rays, lines) = cone_generators(d + 1, &ineqs, &eqs);
    let mut out = VPoly::empty(d);
    for r in rays {
        if r[d].is_zero() {
            out.rays.push(r[..d].to_vec());
        } else {
            let s = &r[d];
            out.points.push(r[..d].iter().map(|x| x / s).collect());
        }
    }
    if out.points.is_empty() {
        return Ok(VPoly::empty(d));
    }
    out.lines = lines.into_iter().map(|l| primitive_line(&l[..d])).collect();
    out.points.sort();
    out.rays.sort();
    out.lines.sort();
    Ok(out)
}

/// V → H. An empty `VPoly` yields the infeasible system `0 ≤ −1`.
pub fn convert_rep_v(v: &VPoly) -> Result<HPoly, ExactError> {
    let d = v.dim;
    for g in v.points.iter().chain(&v.rays).chain(&v.lines) {
        if g.len() != d {
            return Err(ExactError::DimensionMismatch { expected: d, found: g.len() });
        }
    }
    if v.points.is_empty() {
        return Ok(HPoly { dim: d, ineqs: vec![Constraint::new(zeros(d), -Rational::one())], eqs: vec![] });
    }
    let hom = |g: &Vec<Rational>, t: Rational| {
        let mut x = g.clone();
        x.push(t);
        x
    };
    let mut gens: Vec<Vec<Rational>> = v.points.iter().map(|p| hom(p, Rational::one())).collect();
    gens.extend(v.rays.iter().map(|r| hom(r, Rational::zero())));
    let lines: Vec<Vec<Rational>> = v.lines.iter().map(|l| hom(l, Rational::zero())).collect();
    let (prays, plines) = cone_generators(d + 1, &gens, &lines);
    let dehom = |g: &Vec<Rational>| Constraint::new(g[..d].to_vec(), -g[d].clone()).normalized();
    let mut ineqs: Vec<Constraint> =
        prays.iter().map(dehom).filter(|c| !c.normal.iter().all(|x| x.is_zero())).collect();
    let mut eqs: Vec<Constraint> = plines.iter().map(dehom).collect();
    ineqs.sort();
    eqs.sort();
    Ok(HPoly { dim: d, ineqs, eqs })
}

/// Polar `{y : ⟨y,x⟩ ≤ 0 ∀x ∈ C}` of a generated cone.
pub fn dual_cone(c: &VPoly) -> Result<HPoly, ExactError> {
    if !c.is_cone() {
        return Err(ExactError::NotACone);
    }
    Ok(HPoly::cone(c.dim, c.rays.clone(), c.lines.clone()))
}

/// Polar of `{x : G x ≤ 0, E x = 0}`, i.e. `cone(G rows) + span(E rows)`.
pub fn dual_cone_h(c: &HPoly) -> Result<VPoly, ExactError> {
    c.check()?;
    if !c.is_cone() {
        return Err(ExactError::NotACone);
    }
    Ok(VPoly::cone(
        c.dim,
        c.ineqs.iter().map(|g| g.normal.clone()).collect(),
        c.eqs.iter().map(|g| g.normal.clone()).collect(),
    ))
}

/// Every generator of `v` lies in `h`.
pub fn vpoly_in_hpoly(v: &VPoly, h: &HPoly) -> bool {
    let dir_ok = |r: &Vec<Rational>| {
        h.ineqs.iter().all(|c| !dot(&c.normal, r).is_positive()) && h.eqs.iter().all(|c| dot(&c.normal, r).is_zero())
    };
    let line_ok = |l: &Vec<Rational>| h.ineqs.iter().chain(&h.eqs).all(|c| dot(&c.normal, l).is_zero());
    v.points.iter().all(|p| h.contains(p)) && v.rays.iter().all(dir_ok) && v.lines.iter().all(line_ok)
}

pub fn hpoly_subset(a: &HPoly, b: &HPoly) -> bool {
    let v = convert_rep(a).expect("well-formed");
    vpoly_in_hpoly(&v, b)
}

pub fn hpoly_equal(a: &HPoly, b: &HPoly) -> bool {
    hpoly_subset(a, b) && hpoly_subset(b, a)
}

/// Exact membership of a point in `co(points) + cone(rays) + span(lines)`.
pub fn vpoly_contains(v: &VPoly, x: &[Rational]) -> bool {
    if v.is_empty() {
        return false;
    }
    let (np, nr, nl) = (v.points.len(), v.rays.len(), v.lines.len());
    let n = np + nr + nl;
    let mut sys = HPoly::universe(n);
    for i in 0..(np + nr) {
        let mut g = zeros(n);
        g[i] = -Rational::one();
        sys.add_ineq(g, Rational::zero());
    }
    for j in 0..v.dim {
        let row: Vec<Rational> = v.points.iter().chain(&v.rays).chain(&v.lines).map(|g| g[j].clone()).collect();
        sys.add_eq(row, x[j].clone());
    }
    let mut sum = zeros(n);
    for s in sum.iter_mut().take(np) {
        *s = Rational::one();
    }
    sys.add_eq(sum, Rational::one());
    lp_feasible(&sys).map(|f| f.is_feasible()).unwrap_or(false)
}

pub fn is_empty(p: &HPoly) -> bool {
    !is_feasible(p)
}

/// Exact test `A ⊆ B₁ ∪ … ∪ B_k` for polyhedral cones.
///
/// A point of `A` outside every `B_j` violates one constraint of each; by
/// homogeneity a strict violation can be normalised to `≥ 1`, so the test
/// enumerates violation choices with LP pruning.
pub fn cone_subset_of_union(a: &HPoly, bs: &[HPoly]) -> bool {
    fn choices(b: &HPoly) -> Vec<Vec<Rational>> {
        let mut out: Vec<Vec<Rational>> = b.ineqs.iter().map(|c| c.normal.clone()).collect();
        for c in &b.eqs {
            out.push(c.normal.clone());
            out.push(c.normal.iter().map(|x| -x).collect());
        }
        out
    }
    fn rec(sys: &HPoly, rest: &[Vec<Vec<Rational>>]) -> bool {
        if !is_feasible(sys) {
            return true;
        }
        let Some((first, tail)) = rest.split_first() else {
            return false;
        };
        first.iter().all(|g| {
            let mut s = sys.clone();
            s.add_ineq(g.iter().map(|x| -x).collect(), -Rational::one());
            rec(&s, tail)
        })
    }
    let all: Vec<Vec<Vec<Rational>>> = bs.iter().map(choices).collect();
    if all.iter().any(|c| c.is_empty()) {
        return true;
    }
    rec(a, &all)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rational::{rat, ratio, rvec};

    fn c(n: &[i64], r: i64) -> Constraint {
        Constraint::new(rvec(n), rat(r))
    }

    #[test]
    fn unit_square_has_four_vertices() {
        let sq = HPoly::new(2, vec![c(&[-1, 0], 0), c(&[0, -1], 0), c(&[1, 0], 1), c(&[0, 1], 1)], vec![]).unwrap();
        let v = convert_rep(&sq).unwrap();
        assert_eq!(v.points.len(), 4);
        assert!(v.rays.is_empty() && v.lines.is_empty());
        let back = convert_rep_v(&v).unwrap();
        assert!(hpoly_equal(&back, &sq));
    }

    #[test]
    fn simplex_h_rep() {
        let v = VPoly { dim: 2, points: vec![rvec(&[1, 0]), rvec(&[0, 1])], rays: vec![], lines: vec![] };
        let h = convert_rep_v(&v).unwrap();
        let expect = HPoly::new(2, vec![c(&[-1, 0], 0), c(&[0, -1], 0)], vec![c(&[1, 1], 1)]).unwrap();
        assert!(hpoly_equal(&h, &expect));
        assert_eq!(h.eqs.len(), 1);
        assert_eq!(h.ineqs.len(), 2);
    }

    #[test]
    fn critical_cone_of_orthant_example_is_a_ray() {
        let k = HPoly::cone(3, vec![rvec(&[0, 1, 0])], vec![rvec(&[1, 0, 0]), rvec(&[0, 0, 1])]);
        let v = convert_rep(&k).unwrap();
        assert_eq!(v.rays, vec![rvec(&[0, -1, 0])]);
        assert!(v.lines.is_empty());
        assert!(v.is_cone());
    }

    #[test]
    fn empty_input_gives_empty_result() {
        let p = HPoly::new(1, vec![c(&[1], -1), c(&[-1], -1)], vec![]).unwrap();
        assert!(convert_rep(&p).unwrap().is_empty());
        assert!(is_empty(&convert_rep_v(&VPoly::empty(2)).unwrap()));
    }

    #[test]
    fn polars() {
        let orth = VPoly::cone(2, vec![rvec(&[1, 0]), rvec(&[0, 1])], vec![]);
        let polar = dual_cone(&orth).unwrap();
        let expect = HPoly::cone(2, vec![rvec(&[1, 0]), rvec(&[0, 1])], vec![]);
        assert!(hpoly_equal(&polar, &expect));
        let polar_v = convert_rep(&polar).unwrap();
        assert_eq!(polar_v.rays, vec![rvec(&[-1, 0]), rvec(&[0, -1])]);
        let whole = VPoly::cone(2, vec![], vec![rvec(&[1, 0]), rvec(&[0, 1])]);
        let z = convert_rep(&dual_cone(&whole).unwrap()).unwrap();
        assert!(z.rays.is_empty() && z.lines.is_empty());
        // G = {u : <a2 - a1, u> <= 0}, a1 = e1, a2 = e2
        let g = HPoly::cone(2, vec![rvec(&[-1, 1])], vec![]);
        assert_eq!(dual_cone_h(&g).unwrap().rays, vec![rvec(&[-1, 1])]);
        assert!(dual_cone(&VPoly { dim: 1, points: vec![rvec(&[1])], rays: vec![], lines: vec![] }).is_err());
    }

    #[test]
    fn lines_survive_conversion() {
        let half = HPoly::cone(2, vec![rvec(&[0, 1])], vec![]);
        let v = convert_rep(&half).unwrap();
        assert_eq!(v.lines, vec![rvec(&[1, 0])]);
        assert_eq!(v.rays, vec![rvec(&[0, -1])]);
        assert!(vpoly_contains(&v, &[rat(-5), ratio(-1, 3)]));
        assert!(!vpoly_contains(&v, &[rat(0), rat(1)]));
    }

    #[test]
    fn union_cover() {
        let plane = HPoly::universe(2);
        let upper = HPoly::cone(2, vec![rvec(&[0, -1])], vec![]);
        let lower = HPoly::cone(2, vec![rvec(&[0, 1])], vec![]);
        assert!(cone_subset_of_union(&plane, &[upper.clone(), lower.clone()]));
        let q1 = HPoly::cone(2, vec![rvec(&[-1, 0]), rvec(&[0, -1])], vec![]);
        assert!(!cone_subset_of_union(&plane, &[upper, q1]));
    }
}
