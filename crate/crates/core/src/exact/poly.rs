//! H- and V-representations of convex polyhedra.

use super::rational::{dot, primitive, to_f64, Rational};
use num_traits::{Signed, Zero};
use std::collections::BTreeSet;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExactError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("input is not a cone")]
    NotACone,
}

/// `⟨normal, z⟩ ≤ rhs` or `⟨normal, z⟩ = rhs` depending on where it is stored.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Constraint {
    pub normal: Vec<Rational>,
    pub rhs: Rational,
}

impl Constraint {
    pub fn new(normal: Vec<Rational>, rhs: Rational) -> Self {
        Constraint { normal, rhs }
    }

    pub fn homogeneous(normal: Vec<Rational>) -> Self {
        Constraint { normal, rhs: Rational::zero() }
    }

    pub fn value(&self, x: &[Rational]) -> Rational {
        dot(&self.normal, x)
    }

    /// Positive rescaling to integer coefficients.
    pub fn normalized(&self) -> Constraint {
        let mut all = self.normal.clone();
        all.push(self.rhs.clone());
        let mut p = primitive(&all);
        let rhs = p.pop().unwrap();
        Constraint { normal: p, rhs }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HPoly {
    pub dim: usize,
    pub ineqs: Vec<Constraint>,
    pub eqs: Vec<Constraint>,
}

impl HPoly {
    pub fn universe(dim: usize) -> Self {
        HPoly { dim, ineqs: vec![], eqs: vec![] }
    }

    pub fn new(dim: usize, ineqs: Vec<Constraint>, eqs: Vec<Constraint>) -> Result<Self, ExactError> {
        let p = HPoly { dim, ineqs, eqs };
        p.check()?;
        Ok(p)
    }

    /// Homogeneous cone `{x : G x ≤ 0, E x = 0}`.
    pub fn cone(dim: usize, ineq_normals: Vec<Vec<Rational>>, eq_normals: Vec<Vec<Rational>>) -> Self {
        HPoly {
            dim,
            ineqs: ineq_normals.into_iter().map(Constraint::homogeneous).collect(),
            eqs: eq_normals.into_iter().map(Constraint::homogeneous).collect(),
        }
    }

    pub fn check(&self) -> Result<(), ExactError> {
        for c in self.ineqs.iter().chain(&self.eqs) {
            if c.normal.len() != self.dim {
                return Err(ExactError::DimensionMismatch { expected: self.dim, found: c.normal.len() });
            }
        }
        Ok(())
    }

    pub fn add_ineq(&mut self, normal: Vec<Rational>, rhs: Rational) {
        self.ineqs.push(Constraint::new(normal, rhs));
    }

    pub fn add_eq(&mut self, normal: Vec<Rational>, rhs: Rational) {
        self.eqs.push(Constraint::new(normal, rhs));
    }

    pub fn is_cone(&self) -> bool {
        self.ineqs.iter().chain(&self.eqs).all(|c| c.rhs.is_zero())
    }

    pub fn contains(&self, x: &[Rational]) -> bool {
        self.ineqs.iter().all(|c| c.value(x) <= c.rhs) && self.eqs.iter().all(|c| c.value(x) == c.rhs)
    }

    pub fn contains_f64(&self, x: &[f64], tol: f64) -> bool {
        let val = |c: &Constraint| c.normal.iter().zip(x).map(|(a, b)| to_f64(a) * b).sum::<f64>();
        self.ineqs.iter().all(|c| val(c) <= to_f64(&c.rhs) + tol)
            && self.eqs.iter().all(|c| (val(c) - to_f64(&c.rhs)).abs() <= tol)
    }

    pub fn intersect(&self, other: &HPoly) -> HPoly {
        assert_eq!(self.dim, other.dim);
        let mut p = self.clone();
        p.ineqs.extend(other.ineqs.iter().cloned());
        p.eqs.extend(other.eqs.iter().cloned());
        p
    }

    /// Same set with the listed inequalities turned into equalities.
    pub fn tighten(&self, active: &BTreeSet<usize>) -> HPoly {
        let mut p = self.clone();
        for &i in active {
            p.eqs.push(self.ineqs[i].clone());
        }
        p
    }

    /// Indices of inequalities holding with equality at `x`.
    pub fn active_at(&self, x: &[Rational]) -> BTreeSet<usize> {
        self.ineqs.iter().enumerate().filter(|(_, c)| c.value(x) == c.rhs).map(|(i, _)| i).collect()
    }

    /// Tangent cone at a member point `x`.
    pub fn tangent_cone_at(&self, x: &[Rational]) -> HPoly {
        let act = self.active_at(x);
        HPoly::cone(
            self.dim,
            act.iter().map(|&i| self.ineqs[i].normal.clone()).collect(),
            self.eqs.iter().map(|c| c.normal.clone()).collect(),
        )
    }

    /// Pullback `{u : M u ∈ self}` for a linear map with `self.dim` rows.
    pub fn pullback(&self, m: &[Vec<Rational>], ncols: usize) -> HPoly {
        let map = |c: &Constraint| {
            let normal = (0..ncols)
                .map(|j| c.normal.iter().zip(m).fold(Rational::zero(), |acc, (a, row)| acc + a * &row[j]))
                .collect();
            Constraint::new(normal, c.rhs.clone())
        };
        HPoly { dim: ncols, ineqs: self.ineqs.iter().map(map).collect(), eqs: self.eqs.iter().map(map).collect() }
    }

    /// Normalized, deduplicated constraint lists in sorted order.
    pub fn canonical(&self) -> HPoly {
        let norm = |cs: &[Constraint], sign_free: bool| {
            let mut out: Vec<Constraint> = cs
                .iter()
                .map(|c| {
                    let mut n = c.normalized();
                    if sign_free {
                        let first = n.normal.iter().chain(std::iter::once(&n.rhs)).find(|x| !x.is_zero()).cloned();
                        if first.map(|f| f.is_negative()).unwrap_or(false) {
                            n.normal = n.normal.iter().map(|x| -x).collect();
                            n.rhs = -n.rhs;
                        }
                    }
                    n
                })
                .filter(|c| !(c.normal.iter().all(|x| x.is_zero()) && c.rhs.is_zero()))
                .collect();
            out.sort();
            out.dedup();
            out
        };
        HPoly { dim: self.dim, ineqs: norm(&self.ineqs, false), eqs: norm(&self.eqs, true) }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VPoly {
    pub dim: usize,
    pub points: Vec<Vec<Rational>>,
    pub rays: Vec<Vec<Rational>>,
    pub lines: Vec<Vec<Rational>>,
}

impl VPoly {
    pub fn empty(dim: usize) -> Self {
        VPoly { dim, points: vec![], rays: vec![], lines: vec![] }
    }

    /// `cone(rays) + span(lines)`.
    pub fn cone(dim: usize, rays: Vec<Vec<Rational>>, lines: Vec<Vec<Rational>>) -> Self {
        VPoly { dim, points: vec![vec![Rational::zero(); dim]], rays, lines }
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn is_cone(&self) -> bool {
        self.points.len() == 1 && self.points[0].iter().all(|x| x.is_zero())
    }

    pub fn is_singleton(&self) -> bool {
        self.points.len() == 1 && self.rays.is_empty() && self.lines.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Face {
    pub active_ineq_indices: BTreeSet<usize>,
    pub carrier: HPoly,
}
