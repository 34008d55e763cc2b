//! Euclidean distance to an exact polyhedron.
//!
//! The projection lies in the relative interior of a unique face, where it
//! coincides with the projection onto that face's affine hull. Each face's
//! affine projector is precomputed once; a query returns the smallest
//! distance among those projections that land in the polyhedron.

use super::faces::enumerate_faces;
use super::poly::HPoly;
use super::rational::to_f64;
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone)]
struct AffineProjector {
    m: DMatrix<f64>,
    r: DVector<f64>,
    pinv_mmt: DMatrix<f64>,
}

#[derive(Debug, Clone)]
pub struct PolyhedronProjector {
    dim: usize,
    ineqs: Vec<(Vec<f64>, f64)>,
    eqs: Vec<(Vec<f64>, f64)>,
    faces: Vec<AffineProjector>,
}

const MEMBER_TOL: f64 = 1e-9;

impl PolyhedronProjector {
    pub fn new(p: &HPoly) -> Self {
        let conv = |c: &super::poly::Constraint| (c.normal.iter().map(to_f64).collect::<Vec<_>>(), to_f64(&c.rhs));
        let faces = enumerate_faces(p)
            .into_iter()
            .map(|f| {
                let rows: Vec<(Vec<f64>, f64)> =
                    f.active_ineq_indices.iter().map(|&i| conv(&p.ineqs[i])).chain(p.eqs.iter().map(conv)).collect();
                let m = DMatrix::from_fn(rows.len(), p.dim, |i, j| rows[i].0[j]);
                let r = DVector::from_fn(rows.len(), |i, _| rows[i].1);
                let mmt = &m * m.transpose();
                let pinv_mmt =
                    if rows.is_empty() { DMatrix::zeros(0, 0) } else { mmt.pseudo_inverse(1e-12).expect("svd") };
                AffineProjector { m, r, pinv_mmt }
            })
            .collect();
        PolyhedronProjector {
            dim: p.dim,
            ineqs: p.ineqs.iter().map(conv).collect(),
            eqs: p.eqs.iter().map(conv).collect(),
            faces,
        }
    }

    fn member(&self, x: &DVector<f64>) -> bool {
        let scale = 1.0 + x.amax();
        let val = |(n, _): &(Vec<f64>, f64)| n.iter().zip(x.iter()).map(|(a, b)| a * b).sum::<f64>();
        self.ineqs.iter().all(|c| val(c) <= c.1 + MEMBER_TOL * scale)
            && self.eqs.iter().all(|c| (val(c) - c.1).abs() <= MEMBER_TOL * scale)
    }

    /// Nearest point and its distance; `None` for an empty polyhedron.
    pub fn project(&self, z: &[f64]) -> Option<(Vec<f64>, f64)> {
        assert_eq!(z.len(), self.dim);
        let zv = DVector::from_column_slice(z);
        let mut best: Option<(DVector<f64>, f64)> = None;
        for f in &self.faces {
            let x = if f.m.nrows() == 0 {
                zv.clone()
            } else {
                let resid = &f.m * &zv - &f.r;
                &zv - f.m.transpose() * (&f.pinv_mmt * resid)
            };
            if !self.member(&x) {
                continue;
            }
            let d = (&x - &zv).norm();
            if best.as_ref().map(|b| d < b.1).unwrap_or(true) {
                best = Some((x, d));
            }
        }
        best.map(|(x, d)| (x.iter().cloned().collect(), d))
    }

    pub fn distance(&self, z: &[f64]) -> f64 {
        self.project(z).map(|p| p.1).unwrap_or(f64::INFINITY)
    }
}

/// Distance from `z` to `p`; `+∞` when `p` is empty.
pub fn distance_point_polyhedron(z: &[f64], p: &HPoly) -> f64 {
    PolyhedronProjector::new(p).distance(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::poly::Constraint;
    use crate::exact::rational::{rat, rvec};

    #[test]
    fn halfplane_and_orthant() {
        let half = HPoly::cone(2, vec![rvec(&[1, 0])], vec![]);
        assert!((distance_point_polyhedron(&[2.0, 0.0], &half) - 2.0).abs() < 1e-12);
        assert_eq!(distance_point_polyhedron(&[-1.0, 5.0], &half), 0.0);
        let orth = HPoly::cone(2, vec![rvec(&[1, 0]), rvec(&[0, 1])], vec![]);
        assert!((distance_point_polyhedron(&[1.0, 1.0], &orth) - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn empty_is_infinite() {
        let p =
            HPoly::new(1, vec![Constraint::new(rvec(&[1]), rat(-1)), Constraint::new(rvec(&[-1]), rat(-1))], vec![])
                .unwrap();
        assert!(distance_point_polyhedron(&[0.0], &p).is_infinite());
    }

    #[test]
    fn segment_in_plane() {
        // {v ≥ 0 : v1 + v2 = 1}
        let p = HPoly::new(
            2,
            vec![Constraint::new(rvec(&[-1, 0]), rat(0)), Constraint::new(rvec(&[0, -1]), rat(0))],
            vec![Constraint::new(rvec(&[1, 1]), rat(1))],
        )
        .unwrap();
        assert!((distance_point_polyhedron(&[0.0, 0.0], &p) - 0.5f64.sqrt()).abs() < 1e-12);
        assert!((distance_point_polyhedron(&[3.0, 0.0], &p) - 2.0).abs() < 1e-12);
    }
}
