//! Exact two-phase simplex (Bland's rule) with Farkas certificates.

use super::poly::{ExactError, HPoly};
use super::rational::{primitive, zeros, Rational};
use num_traits::{One, Signed, Zero};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Feasibility {
    Feasible(Vec<Rational>),
    /// Multipliers for `ineqs` (nonnegative) followed by `eqs` (free) whose
    /// combination reads `0 ≤ c` with `c < 0`.
    Infeasible(Vec<Rational>),
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Feasibility::Feasible(_))
    }

    pub fn witness(self) -> Option<Vec<Rational>> {
        match self {
            Feasibility::Feasible(x) => Some(x),
            Feasibility::Infeasible(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LpResult {
    Optimal { x: Vec<Rational>, value: Rational },
    Unbounded,
    Infeasible(Vec<Rational>),
}

/// Standard form `min cᵀx, A x = b, x ≥ 0`.
struct Standard {
    a: Vec<Vec<Rational>>,
    b: Vec<Rational>,
    c: Vec<Rational>,
}

enum StdOutcome {
    Optimal(Vec<Rational>),
    Unbounded,
    Infeasible(Vec<Rational>),
}

struct Tableau {
    rows: Vec<Vec<Rational>>,
    z: Vec<Rational>,
    basis: Vec<usize>,
    width: usize,
}

impl Tableau {
    fn rhs(&self) -> usize {
        self.width
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let inv = Rational::one() / &self.rows[r][c];
        for x in self.rows[r].iter_mut() {
            *x *= &inv;
        }
        let prow = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i != r && !row[c].is_zero() {
                let f = row[c].clone();
                for (x, y) in row.iter_mut().zip(&prow) {
                    if !y.is_zero() {
                        *x -= &f * y;
                    }
                }
            }
        }
        if !self.z[c].is_zero() {
            let f = self.z[c].clone();
            for (x, y) in self.z.iter_mut().zip(&prow) {
                if !y.is_zero() {
                    *x -= &f * y;
                }
            }
        }
        self.basis[r] = c;
    }

    /// Runs Bland's rule over columns `< allowed`; false when unbounded.
    fn optimize(&mut self, allowed: usize) -> bool {
        let rhs = self.rhs();
        loop {
            let Some(enter) = (0..allowed).find(|&j| self.z[j].is_negative()) else {
                return true;
            };
            let mut best: Option<(usize, Rational)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if row[enter].is_positive() {
                    let ratio = &row[rhs] / &row[enter];
                    let better = match &best {
                        None => true,
                        Some((bi, br)) => ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi]),
                    };
                    if better {
                        best = Some((i, ratio));
                    }
                }
            }
            match best {
                None => return false,
                Some((r, _)) => self.pivot(r, enter),
            }
        }
    }
}

fn solve_standard(lp: &Standard) -> StdOutcome {
    let m = lp.a.len();
    let n = lp.c.len();
    let mut sign = vec![Rational::one(); m];
    let mut rows = Vec::with_capacity(m);
    for i in 0..m {
        let flip = lp.b[i].is_negative();
        if flip {
            sign[i] = -Rational::one();
        }
        let mut row: Vec<Rational> = lp.a[i].iter().map(|x| if flip { -x } else { x.clone() }).collect();
        row.extend((0..m).map(|k| if k == i { Rational::one() } else { Rational::zero() }));
        row.push(if flip { -lp.b[i].clone() } else { lp.b[i].clone() });
        rows.push(row);
    }
    let width = n + m;
    // start from unit columns (slacks) where possible, artificials elsewhere
    let mut basis: Vec<usize> = (n..width).collect();
    let mut used = vec![false; n];
    for (i, b) in basis.iter_mut().enumerate() {
        let unit = (0..n).find(|&j| {
            !used[j] && rows[i][j].is_one() && rows.iter().enumerate().all(|(r, row)| r == i || row[j].is_zero())
        });
        if let Some(j) = unit {
            used[j] = true;
            *b = j;
        }
    }
    // phase one: minimise the sum of artificials
    let mut z = zeros(width + 1);
    for j in n..width {
        z[j] = Rational::one();
    }
    for (row, &b) in rows.iter().zip(&basis) {
        if b >= n {
            for (x, y) in z.iter_mut().zip(row) {
                *x -= y;
            }
        }
    }
    let mut t = Tableau { rows, z, basis, width };
    t.optimize(width);
    let value = -t.z[width].clone();
    if value.is_positive() {
        // y_i = c_B B^{-1} e_i, read off the artificial columns
        let y: Vec<Rational> = (0..m).map(|i| Rational::one() - &t.z[n + i]).collect();
        let cert: Vec<Rational> = y.iter().zip(&sign).map(|(yi, s)| -(yi * s)).collect();
        return StdOutcome::Infeasible(cert);
    }
    for r in 0..m {
        if t.basis[r] >= n {
            if let Some(c) = (0..n).find(|&j| !t.rows[r][j].is_zero()) {
                t.pivot(r, c);
            }
        }
    }
    let mut z = zeros(width + 1);
    z[..n].clone_from_slice(&lp.c);
    for (r, row) in t.rows.iter().enumerate() {
        let cb = if t.basis[r] < n { lp.c[t.basis[r]].clone() } else { Rational::zero() };
        if !cb.is_zero() {
            for (x, y) in z.iter_mut().zip(row) {
                *x -= &cb * y;
            }
        }
    }
    t.z = z;
    if !t.optimize(n) {
        return StdOutcome::Unbounded;
    }
    let mut x = zeros(n);
    for (r, &b) in t.basis.iter().enumerate() {
        if b < n {
            x[b] = t.rows[r][width].clone();
        }
    }
    StdOutcome::Optimal(x)
}

/// Free variables split as x⁺ − x⁻, one slack per inequality.
fn to_standard(p: &HPoly, objective: &[Rational]) -> Standard {
    let d = p.dim;
    let k = p.ineqs.len();
    let n = 2 * d + k;
    let mut a = Vec::new();
    let mut b = Vec::new();
    for (i, c) in p.ineqs.iter().enumerate() {
        let mut row = zeros(n);
        for j in 0..d {
            row[j] = c.normal[j].clone();
            row[d + j] = -c.normal[j].clone();
        }
        row[2 * d + i] = Rational::one();
        a.push(row);
        b.push(c.rhs.clone());
    }
    for c in &p.eqs {
        let mut row = zeros(n);
        for j in 0..d {
            row[j] = c.normal[j].clone();
            row[d + j] = -c.normal[j].clone();
        }
        a.push(row);
        b.push(c.rhs.clone());
    }
    let mut cost = zeros(n);
    for j in 0..d {
        cost[j] = objective[j].clone();
        cost[d + j] = -objective[j].clone();
    }
    Standard { a, b, c: cost }
}

fn normalize_certificate(cert: Vec<Rational>) -> Vec<Rational> {
    primitive(&cert)
}

/// Minimises `⟨objective, x⟩` over `p`.
pub fn lp_minimize(p: &HPoly, objective: &[Rational]) -> Result<LpResult, ExactError> {
    p.check()?;
    if objective.len() != p.dim {
        return Err(ExactError::DimensionMismatch { expected: p.dim, found: objective.len() });
    }
    let std = to_standard(p, objective);
    Ok(match solve_standard(&std) {
        StdOutcome::Infeasible(cert) => LpResult::Infeasible(normalize_certificate(cert)),
        StdOutcome::Unbounded => LpResult::Unbounded,
        StdOutcome::Optimal(xs) => {
            let d = p.dim;
            let x: Vec<Rational> = (0..d).map(|j| &xs[j] - &xs[d + j]).collect();
            let value = super::rational::dot(objective, &x);
            LpResult::Optimal { x, value }
        }
    })
}

pub fn lp_maximize(p: &HPoly, objective: &[Rational]) -> Result<LpResult, ExactError> {
    let neg: Vec<Rational> = objective.iter().map(|x| -x).collect();
    Ok(match lp_minimize(p, &neg)? {
        LpResult::Optimal { x, value } => LpResult::Optimal { x, value: -value },
        other => other,
    })
}

pub fn lp_feasible(p: &HPoly) -> Result<Feasibility, ExactError> {
    Ok(match lp_minimize(p, &zeros(p.dim))? {
        LpResult::Optimal { x, .. } => Feasibility::Feasible(x),
        LpResult::Infeasible(c) => Feasibility::Infeasible(c),
        LpResult::Unbounded => unreachable!("zero objective cannot be unbounded"),
    })
}

pub fn is_feasible(p: &HPoly) -> bool {
    lp_feasible(p).map(|f| f.is_feasible()).unwrap_or(false)
}

/// Exact re-check of a Farkas certificate against `p`.
pub fn verify_certificate(p: &HPoly, cert: &[Rational]) -> bool {
    let k = p.ineqs.len();
    if cert.len() != k + p.eqs.len() || cert[..k].iter().any(|x| x.is_negative()) {
        return false;
    }
    let mut combo = zeros(p.dim);
    let mut rhs = Rational::zero();
    for (c, y) in p.ineqs.iter().chain(&p.eqs).zip(cert) {
        for (s, a) in combo.iter_mut().zip(&c.normal) {
            *s += y * a;
        }
        rhs += y * &c.rhs;
    }
    combo.iter().all(|x| x.is_zero()) && rhs.is_negative()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::poly::Constraint;
    use crate::exact::rational::{rat, rvec};

    fn ineq(n: &[i64], r: i64) -> Constraint {
        Constraint::new(rvec(n), rat(r))
    }

    #[test]
    fn box_is_feasible_at_zero() {
        let p = HPoly::new(1, vec![ineq(&[-1], 0), ineq(&[1], 1)], vec![]).unwrap();
        assert_eq!(lp_feasible(&p).unwrap(), Feasibility::Feasible(rvec(&[0])));
    }

    #[test]
    fn contradictory_halfspaces_certificate() {
        let p = HPoly::new(1, vec![ineq(&[1], -1), ineq(&[-1], -1)], vec![]).unwrap();
        match lp_feasible(&p).unwrap() {
            Feasibility::Infeasible(c) => {
                assert_eq!(c, rvec(&[1, 1]));
                assert!(verify_certificate(&p, &c));
            }
            f => panic!("expected infeasible, got {f:?}"),
        }
    }

    #[test]
    fn equality_certificate() {
        let p = HPoly::new(2, vec![], vec![ineq(&[1, 1], 1), ineq(&[2, 2], 3)]).unwrap();
        match lp_feasible(&p).unwrap() {
            Feasibility::Infeasible(c) => assert!(verify_certificate(&p, &c)),
            f => panic!("{f:?}"),
        }
    }

    #[test]
    fn optimum_and_unbounded() {
        let p = HPoly::new(2, vec![ineq(&[1, 1], 4), ineq(&[-1, 0], 0), ineq(&[0, -1], 0), ineq(&[1, 0], 3)], vec![])
            .unwrap();
        match lp_maximize(&p, &rvec(&[2, 1])).unwrap() {
            LpResult::Optimal { value, x } => {
                assert_eq!(value, rat(7));
                assert_eq!(x, rvec(&[3, 1]));
            }
            r => panic!("{r:?}"),
        }
        let q = HPoly::new(1, vec![ineq(&[-1], 0)], vec![]).unwrap();
        assert_eq!(lp_maximize(&q, &rvec(&[1])).unwrap(), LpResult::Unbounded);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let p = HPoly { dim: 2, ineqs: vec![ineq(&[1], 0)], eqs: vec![] };
        assert!(lp_feasible(&p).is_err());
    }
}
