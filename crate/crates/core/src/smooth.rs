//! Exact multivariate polynomials and their derivatives.

use crate::exact::rational::{to_f64, Rational};
use num_traits::{One, Zero};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SmoothError {
    #[error("arity mismatch: expected {expected} variables, got {found}")]
    Arity { expected: usize, found: usize },
}

/// Sum of `coeff · x^exponents`; zero coefficients are never stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolyExpr {
    pub nvars: usize,
    terms: BTreeMap<Vec<u32>, Rational>,
}

impl PolyExpr {
    pub fn zero(nvars: usize) -> Self {
        PolyExpr { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: Rational) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(c, vec![0; nvars]);
        p
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        let mut p = Self::zero(nvars);
        p.add_term(Rational::one(), e);
        p
    }

    pub fn from_terms(
        nvars: usize,
        terms: impl IntoIterator<Item = (Rational, Vec<u32>)>,
    ) -> Result<Self, SmoothError> {
        let mut p = Self::zero(nvars);
        for (c, e) in terms {
            if e.len() != nvars {
                return Err(SmoothError::Arity { expected: nvars, found: e.len() });
            }
            p.add_term(c, e);
        }
        Ok(p)
    }

    pub fn add_term(&mut self, c: Rational, e: Vec<u32>) {
        let entry = self.terms.entry(e).or_insert_with(Rational::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.retain(|_, v| !v.is_zero());
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &Rational)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &PolyExpr) -> PolyExpr {
        let mut p = self.clone();
        for (e, c) in &other.terms {
            p.add_term(c.clone(), e.clone());
        }
        p
    }

    pub fn scale(&self, s: &Rational) -> PolyExpr {
        let mut p = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            p.add_term(c * s, e.clone());
        }
        p
    }

    pub fn mul(&self, other: &PolyExpr) -> PolyExpr {
        let mut p = Self::zero(self.nvars);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                p.add_term(c1 * c2, e1.iter().zip(e2).map(|(a, b)| a + b).collect());
            }
        }
        p
    }

    pub fn derivative(&self, i: usize) -> PolyExpr {
        let mut p = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            if e[i] > 0 {
                let mut e2 = e.clone();
                e2[i] -= 1;
                p.add_term(c * Rational::from_integer(e[i].into()), e2);
            }
        }
        p
    }

    pub fn gradient(&self) -> Vec<PolyExpr> {
        (0..self.nvars).map(|i| self.derivative(i)).collect()
    }

    pub fn hessian(&self) -> Vec<Vec<PolyExpr>> {
        let g = self.gradient();
        (0..self.nvars).map(|i| (0..self.nvars).map(|j| g[i].derivative(j)).collect()).collect()
    }

    pub fn eval(&self, x: &[Rational]) -> Result<Rational, SmoothError> {
        self.check(x.len())?;
        Ok(self.terms.iter().fold(Rational::zero(), |acc, (e, c)| {
            let mut t = c.clone();
            for (xi, &k) in x.iter().zip(e) {
                for _ in 0..k {
                    t *= xi;
                }
            }
            acc + t
        }))
    }

    pub fn eval_f64(&self, x: &[f64]) -> Result<f64, SmoothError> {
        self.check(x.len())?;
        Ok(self
            .terms
            .iter()
            .map(|(e, c)| to_f64(c) * x.iter().zip(e).map(|(xi, &k)| xi.powi(k as i32)).product::<f64>())
            .sum())
    }

    fn check(&self, n: usize) -> Result<(), SmoothError> {
        if n != self.nvars {
            return Err(SmoothError::Arity { expected: self.nvars, found: n });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolyMap {
    pub nvars: usize,
    pub components: Vec<PolyExpr>,
}

pub type PolyMatrix = Vec<Vec<PolyExpr>>;

impl PolyMap {
    pub fn new(nvars: usize, components: Vec<PolyExpr>) -> Result<Self, SmoothError> {
        if let Some(c) = components.iter().find(|c| c.nvars != nvars) {
            return Err(SmoothError::Arity { expected: nvars, found: c.nvars });
        }
        Ok(PolyMap { nvars, components })
    }

    pub fn dim_out(&self) -> usize {
        self.components.len()
    }

    pub fn eval(&self, x: &[Rational]) -> Result<Vec<Rational>, SmoothError> {
        self.components.iter().map(|c| c.eval(x)).collect()
    }

    pub fn eval_f64(&self, x: &[f64]) -> Result<Vec<f64>, SmoothError> {
        self.components.iter().map(|c| c.eval_f64(x)).collect()
    }

    /// Jacobian rows are component gradients; Hessians are symmetric by construction.
    pub fn differentiate(&self) -> (PolyMatrix, Vec<PolyMatrix>) {
        let jac = self.components.iter().map(|c| c.gradient()).collect();
        let hess = self.components.iter().map(|c| c.hessian()).collect();
        (jac, hess)
    }
}

pub fn eval_matrix(m: &PolyMatrix, x: &[Rational]) -> Result<Vec<Vec<Rational>>, SmoothError> {
    m.iter().map(|row| row.iter().map(|p| p.eval(x)).collect()).collect()
}

pub fn eval_matrix_f64(m: &PolyMatrix, x: &[f64]) -> Result<Vec<Vec<f64>>, SmoothError> {
    m.iter().map(|row| row.iter().map(|p| p.eval_f64(x)).collect()).collect()
}

/// Largest deviation between central differences of `f` and its symbolic
/// Jacobian, and of the Jacobian and the symbolic Hessians.
pub fn fd_check(f: &PolyMap, x: &[f64], h: f64) -> Result<f64, SmoothError> {
    assert!(h > 0.0);
    let (jac, hess) = f.differentiate();
    let j0 = eval_matrix_f64(&jac, x)?;
    let mut worst: f64 = 0.0;
    for k in 0..f.nvars {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[k] += h;
        xm[k] -= h;
        let fp = f.eval_f64(&xp)?;
        let fm = f.eval_f64(&xm)?;
        let jp = eval_matrix_f64(&jac, &xp)?;
        let jm = eval_matrix_f64(&jac, &xm)?;
        for i in 0..f.dim_out() {
            worst = worst.max(((fp[i] - fm[i]) / (2.0 * h) - j0[i][k]).abs());
            let hi = eval_matrix_f64(&hess[i], x)?;
            for j in 0..f.nvars {
                worst = worst.max(((jp[i][j] - jm[i][j]) / (2.0 * h) - hi[j][k]).abs());
            }
        }
    }
    Ok(worst)
}
