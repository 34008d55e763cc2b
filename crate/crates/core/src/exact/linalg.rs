//! Dense exact linear algebra over the rationals.

use super::rational::{dot, primitive_line, zeros, Rational};
use num_traits::{One, Zero};

pub type Matrix = Vec<Vec<Rational>>;

/// Reduced row echelon form and pivot columns.
pub fn rref(a: &Matrix, ncols: usize) -> (Matrix, Vec<usize>) {
    let mut m: Matrix = a.clone();
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..ncols {
        if row >= m.len() {
            break;
        }
        let Some(p) = (row..m.len()).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(row, p);
        let inv = Rational::one() / &m[row][col];
        for x in m[row].iter_mut() {
            *x *= &inv;
        }
        let pivot_row = m[row].clone();
        for (r, line) in m.iter_mut().enumerate() {
            if r != row && !line[col].is_zero() {
                let f = line[col].clone();
                for (x, y) in line.iter_mut().zip(&pivot_row) {
                    *x -= &f * y;
                }
            }
        }
        pivots.push(col);
        row += 1;
    }
    (m, pivots)
}

pub fn rank(a: &Matrix, ncols: usize) -> usize {
    rref(a, ncols).1.len()
}

/// Basis of `{u : A u = 0}`; each vector has its first nonzero entry positive.
pub fn linear_kernel(a: &Matrix, ncols: usize) -> Vec<Vec<Rational>> {
    let (r, pivots) = rref(a, ncols);
    let free: Vec<usize> = (0..ncols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = zeros(ncols);
            v[f] = Rational::one();
            for (row, &pc) in pivots.iter().enumerate() {
                v[pc] = -r[row][f].clone();
            }
            primitive_line(&v)
        })
        .collect()
}

/// Some solution of `A x = b`, if the system is consistent.
pub fn solve(a: &Matrix, b: &[Rational], ncols: usize) -> Option<Vec<Rational>> {
    let aug: Matrix = a
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = row.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    let (r, pivots) = rref(&aug, ncols + 1);
    if pivots.last() == Some(&ncols) {
        return None;
    }
    let mut x = zeros(ncols);
    for (row, &pc) in pivots.iter().enumerate() {
        x[pc] = r[row][ncols].clone();
    }
    Some(x)
}

pub fn inverse(a: &Matrix) -> Option<Matrix> {
    let n = a.len();
    if n == 0 {
        return Some(vec![]);
    }
    let aug: Matrix = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { Rational::one() } else { Rational::zero() }));
            r
        })
        .collect();
    let (r, pivots) = rref(&aug, 2 * n);
    if pivots.len() < n || pivots[n - 1] != n - 1 {
        return None;
    }
    Some(r.into_iter().map(|row| row[n..].to_vec()).collect())
}

pub fn transpose(a: &Matrix, ncols: usize) -> Matrix {
    (0..ncols).map(|j| a.iter().map(|row| row[j].clone()).collect()).collect()
}

pub fn mat_vec(a: &Matrix, x: &[Rational]) -> Vec<Rational> {
    a.iter().map(|row| dot(row, x)).collect()
}

pub fn mat_mul(a: &Matrix, b: &Matrix, bcols: usize) -> Matrix {
    a.iter()
        .map(|row| {
            (0..bcols).map(|j| row.iter().zip(b).fold(Rational::zero(), |acc, (x, brow)| acc + x * &brow[j])).collect()
        })
        .collect()
}

pub fn identity(n: usize) -> Matrix {
    (0..n).map(|i| (0..n).map(|j| if i == j { Rational::one() } else { Rational::zero() }).collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rational::{rat, rvec};

    fn m(rows: &[&[i64]]) -> Matrix {
        rows.iter().map(|r| rvec(r)).collect()
    }

    #[test]
    fn kernel_examples() {
        assert!(linear_kernel(&identity(2), 2).is_empty());
        assert_eq!(linear_kernel(&m(&[&[0, 0, 0]]), 3).len(), 3);
        // adjoint of the Jacobian with rows (1,0,0),(1,0,0),(-1,0,0)
        let jt = transpose(&m(&[&[1, 0, 0], &[1, 0, 0], &[-1, 0, 0]]), 3);
        let k = linear_kernel(&jt, 3);
        assert_eq!(k, vec![rvec(&[1, -1, 0]), rvec(&[1, 0, 1])]);
    }

    #[test]
    fn solve_and_inverse() {
        let a = m(&[&[2, 1], &[1, 1]]);
        let x = solve(&a, &rvec(&[3, 2]), 2).unwrap();
        assert_eq!(x, rvec(&[1, 1]));
        let inv = inverse(&a).unwrap();
        assert_eq!(mat_mul(&a, &inv, 2), identity(2));
        assert!(solve(&m(&[&[1, 1], &[1, 1]]), &rvec(&[0, 1]), 2).is_none());
        assert!(inverse(&m(&[&[1, 2], &[2, 4]])).is_none());
        assert_eq!(rank(&m(&[&[1, 2], &[2, 4]]), 2), 1);
        let _ = rat(0);
    }
}
