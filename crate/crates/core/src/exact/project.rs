//! Fourier–Motzkin elimination with exact LP redundancy removal.

use super::linalg::rref;
use super::lp::{is_feasible, lp_maximize, LpResult};
use super::poly::{Constraint, HPoly};
use super::rational::{zeros, Rational};
use num_traits::{One, Signed, Zero};
use std::collections::BTreeSet;

/// Projection of `p` onto the coordinates not in `coords` (kept in order).
pub fn project_out(p: &HPoly, coords: &BTreeSet<usize>) -> HPoly {
    let d = p.dim;
    let mut ineqs = p.ineqs.clone();
    let mut eqs = p.eqs.clone();
    for &j in coords.iter().rev() {
        if let Some(k) = eqs.iter().position(|c| !c.normal[j].is_zero()) {
            let piv = eqs.remove(k);
            let elim = |c: &Constraint| {
                if c.normal[j].is_zero() {
                    return c.clone();
                }
                let f = &c.normal[j] / &piv.normal[j];
                Constraint::new(
                    c.normal.iter().zip(&piv.normal).map(|(a, b)| a - &f * b).collect(),
                    &c.rhs - &f * &piv.rhs,
                )
            };
            ineqs = ineqs.iter().map(elim).collect();
            eqs = eqs.iter().map(elim).collect();
        } else {
            let (mut pos, mut neg, mut keep) = (vec![], vec![], vec![]);
            for c in ineqs {
                if c.normal[j].is_positive() {
                    pos.push(c);
                } else if c.normal[j].is_negative() {
                    neg.push(c);
                } else {
                    keep.push(c);
                }
            }
            for a in &pos {
                for b in &neg {
                    let fa = -b.normal[j].clone();
                    let fb = a.normal[j].clone();
                    keep.push(Constraint::new(
                        a.normal.iter().zip(&b.normal).map(|(x, y)| &fa * x + &fb * y).collect(),
                        &fa * &a.rhs + &fb * &b.rhs,
                    ));
                }
            }
            ineqs = keep;
        }
        let reduced = simplify(HPoly { dim: d, ineqs, eqs });
        ineqs = reduced.ineqs;
        eqs = reduced.eqs;
    }
    let keep: Vec<usize> = (0..d).filter(|i| !coords.contains(i)).collect();
    let shrink = |c: &Constraint| Constraint::new(keep.iter().map(|&i| c.normal[i].clone()).collect(), c.rhs.clone());
    HPoly { dim: keep.len(), ineqs: ineqs.iter().map(shrink).collect(), eqs: eqs.iter().map(shrink).collect() }
}

/// Independent equalities, deduplicated inequalities, no LP-redundant rows.
pub fn simplify(p: HPoly) -> HPoly {
    let d = p.dim;
    let infeasible = || HPoly { dim: d, ineqs: vec![Constraint::new(zeros(d), -Rational::one())], eqs: vec![] };
    let aug: Vec<Vec<Rational>> = p
        .eqs
        .iter()
        .map(|c| {
            let mut r = c.normal.clone();
            r.push(c.rhs.clone());
            r
        })
        .collect();
    let (r, piv) = rref(&aug, d + 1);
    if piv.last() == Some(&d) {
        return infeasible();
    }
    let eqs: Vec<Constraint> = r
        .into_iter()
        .take(piv.len())
        .map(|mut row| {
            let rhs = row.pop().unwrap();
            Constraint::new(row, rhs)
        })
        .collect();
    let mut ineqs: Vec<Constraint> = Vec::new();
    for c in p.ineqs {
        if c.normal.iter().all(|x| x.is_zero()) {
            if c.rhs.is_negative() {
                return infeasible();
            }
            continue;
        }
        let n = c.normalized();
        if !ineqs.contains(&n) {
            ineqs.push(n);
        }
    }
    let mut out = HPoly { dim: d, ineqs, eqs };
    if !is_feasible(&out) {
        return infeasible();
    }
    let mut i = 0;
    while i < out.ineqs.len() {
        let row = out.ineqs.remove(i);
        let redundant = match lp_maximize(&out, &row.normal).expect("well-formed") {
            LpResult::Optimal { value, .. } => value <= row.rhs,
            _ => false,
        };
        if !redundant {
            out.ineqs.insert(i, row);
            i += 1;
        }
    }
    out
}
