//! Josephy–Newton iterations on the KKT system of a composite problem and
//! classification of their local convergence rate.

use crate::exact::distance::PolyhedronProjector;
use crate::exact::rational::{vec_to_f64, Rational};
use crate::stability::{error_bound_residual, InverseSubdifferential};
use crate::varsys::{CompositeProblem, LagrangeSet, VariationalSystem, VarsysError};
use nalgebra::{DMatrix, DVector};

const SUBPROBLEM_TOL: f64 = 1e-9;

/// A distance at most this fraction of the largest one counts as converged.
pub const CONVERGED_FRACTION: f64 = 1e-10;
/// Number of trailing distances inspected by [`rate_classify`].
pub const TAIL_WINDOW: usize = 6;
/// Last tail ratio below which a decreasing tail is superlinear.
pub const SUPERLINEAR_RATIO: f64 = 1e-2;
/// Median tail ratio at or above which a run has stalled.
pub const STALL_RATIO: f64 = 1.0;

/// A KKT point `x̄` with its multiplier set, used to measure distances.
pub struct Target {
    pub x: Vec<f64>,
    pub lambda: LagrangeSet,
    projector: PolyhedronProjector,
}

impl Target {
    pub fn new(cp: &CompositeProblem, x: &[Rational]) -> Result<Self, VarsysError> {
        let lambda = cp.system()?.multiplier_set(x)?;
        let projector = PolyhedronProjector::new(&lambda.hpoly);
        Ok(Target { x: vec_to_f64(x), lambda, projector })
    }

    /// `‖x − x̄‖ + dist(v, Λ(x̄))`.
    pub fn distance(&self, x: &[f64], v: &[f64]) -> f64 {
        let dx: f64 = x.iter().zip(&self.x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        dx + self.projector.distance(v)
    }

    pub fn dual_distance(&self, v: &[f64]) -> f64 {
        self.projector.distance(v)
    }

    /// Nearest point of `Λ(x̄)` to `v`.
    pub fn nearest_multiplier(&self, v: &[f64]) -> Vec<f64> {
        self.projector.project(v).expect("nonempty multiplier set").0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub iterates: Vec<(Vec<f64>, Vec<f64>)>,
    pub residuals: Vec<f64>,
    /// Distances to the target, when one was given.
    pub distances: Vec<f64>,
    pub dual_distances: Vec<f64>,
    /// Why the run stopped early, if it did.
    pub diagnostic: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rate {
    Superlinear,
    Linear(f64),
    Stalled,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RateError {
    #[error("trajectory has {0} distances; at least 6 are needed unless it terminates")]
    TooShort(usize),
}

struct Data<'a> {
    vs: &'a VariationalSystem,
    a: Vec<Vec<f64>>,
    alpha: Vec<f64>,
    d: Vec<Vec<f64>>,
    beta: Vec<f64>,
}

fn dotf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl Data<'_> {
    /// Nearest solution `(x_k + Δx, v)` of the linearized system
    /// `Ψ_k + ∇ₓΨ_k Δx + ∇Φ_k*(v − v_k) = 0, v ∈ ∂θ(Φ_k + ∇Φ_k Δx)`.
    fn step(&self, x: &[f64], v: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
        let (n, m) = (self.vs.n, self.vs.m);
        let psi = self.vs.psi_eval_f64(x, v).ok()?;
        let h = self.vs.psi_jacobian_x_f64(x, v).ok()?;
        let j = self.vs.jacobian_phi_f64(x).ok()?;
        let phi = self.vs.phi.eval_f64(x).ok()?;
        let jt = |c: &[f64]| (0..n).map(|col| (0..m).map(|r| c[r] * j[r][col]).sum::<f64>()).collect::<Vec<f64>>();
        // ∇ₓΨ_k Δx + ∇Φ_k* v = −Ψ_k + ∇Φ_k* v_k
        let jtv = jt(v);
        let rhs0: Vec<f64> = psi.iter().zip(&jtv).map(|(p, q)| q - p).collect();
        let mut best: Option<(f64, Vec<f64>, Vec<f64>)> = None;
        let l = self.a.len();
        let p = self.d.len();
        for pmask in 1usize..(1 << l) {
            let pset: Vec<usize> = (0..l).filter(|i| pmask >> i & 1 == 1).collect();
            for qmask in 0usize..(1 << p) {
                let qset: Vec<usize> = (0..p).filter(|i| qmask >> i & 1 == 1).collect();
                let gens: Vec<&Vec<f64>> =
                    pset.iter().map(|&i| &self.a[i]).chain(qset.iter().map(|&i| &self.d[i])).collect();
                let dim = n + gens.len();
                let s = pset[0];
                let mut rows: Vec<Vec<f64>> = Vec::new();
                let mut rhs: Vec<f64> = Vec::new();
                for r in 0..n {
                    let mut row = h[r].clone();
                    row.extend(gens.iter().map(|g| jt(g)[r]));
                    rows.push(row);
                    rhs.push(rhs0[r]);
                }
                let mut simplex = vec![0.0; dim];
                for t in 0..pset.len() {
                    simplex[n + t] = 1.0;
                }
                rows.push(simplex);
                rhs.push(1.0);
                // ⟨c, Φ_k + ∇Φ_k Δx⟩ = rhs
                let mut tight = |c: &[f64], b: f64| {
                    let mut row = jt(c);
                    row.resize(dim, 0.0);
                    rows.push(row);
                    rhs.push(b - dotf(c, &phi));
                };
                for &i in &pset[1..] {
                    let c: Vec<f64> = self.a[i].iter().zip(&self.a[s]).map(|(x, y)| x - y).collect();
                    tight(&c, self.alpha[i] - self.alpha[s]);
                }
                for &i in &qset {
                    tight(&self.d[i], self.beta[i]);
                }
                let Some(u) = nearest(&rows, &rhs, dim, n, &gens, v) else { continue };
                let dx = &u[..n];
                let w = &u[n..];
                let mut vn = vec![0.0; m];
                for (wi, g) in w.iter().zip(&gens) {
                    for (vi, gi) in vn.iter_mut().zip(g.iter()) {
                        *vi += wi * gi;
                    }
                }
                let z: Vec<f64> = (0..m).map(|r| phi[r] + dotf(&j[r], dx)).collect();
                let scale = 1.0 + z.iter().chain(&vn).fold(0.0f64, |a, b| a.max(b.abs()));
                let tol = SUBPROBLEM_TOL * scale;
                let top = dotf(&self.a[s], &z) - self.alpha[s];
                let ok = w.iter().all(|&t| t >= -tol)
                    && (0..l).all(|i| pset.contains(&i) || dotf(&self.a[i], &z) - self.alpha[i] <= top + tol)
                    && (0..p).all(|i| qset.contains(&i) || dotf(&self.d[i], &z) <= self.beta[i] + tol);
                if !ok {
                    continue;
                }
                let cost = dotf(dx, dx) + vn.iter().zip(v).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
                if best.as_ref().is_none_or(|b| cost < b.0) {
                    let xn = x.iter().zip(dx).map(|(a, b)| a + b).collect();
                    best = Some((cost, xn, vn));
                }
            }
        }
        best.map(|(_, x, v)| (x, v))
    }
}

/// Solution of `rows·u = rhs` minimizing `‖Δx‖² + ‖Σ w_t g_t − v_k‖²`, or
/// `None` when the system is inconsistent.
fn nearest(rows: &[Vec<f64>], rhs: &[f64], dim: usize, n: usize, gens: &[&Vec<f64>], vk: &[f64]) -> Option<Vec<f64>> {
    // zero rows pad to a square system so the SVD yields a full right basis
    let nrows = rows.len().max(dim);
    let a = DMatrix::from_fn(nrows, dim, |i, j| if i < rows.len() { rows[i][j] } else { 0.0 });
    let mut b = DVector::zeros(nrows);
    for (i, r) in rhs.iter().enumerate() {
        b[i] = *r;
    }
    let svd = a.clone().svd(true, true);
    let eps = 1e-11 * svd.singular_values.max().max(1.0);
    let u0 = svd.solve(&b, eps).ok()?;
    if (&a * &u0 - &b).norm() > 1e-9 * (1.0 + b.norm()) {
        return None;
    }
    let vt = svd.v_t.as_ref()?;
    let null: Vec<DVector<f64>> =
        (0..dim).filter(|&i| svd.singular_values[i] <= eps).map(|i| vt.row(i).transpose()).collect();
    if null.is_empty() {
        return Some(u0.iter().cloned().collect());
    }
    // C u = (Δx, Σ w g) against (0, v_k)
    let m = vk.len();
    let c = DMatrix::from_fn(n + m, dim, |i, j| {
        if i < n {
            if i == j {
                1.0
            } else {
                0.0
            }
        } else if j >= n {
            gens[j - n][i - n]
        } else {
            0.0
        }
    });
    let mut target = DVector::zeros(n + m);
    for (i, x) in vk.iter().enumerate() {
        target[n + i] = *x;
    }
    let nm = DMatrix::from_columns(&null);
    let cn = &c * &nm;
    let y = cn.svd(true, true).solve(&(target - &c * &u0), 1e-12).ok()?;
    let u = u0 + nm * y;
    Some(u.iter().cloned().collect())
}

/// Josephy–Newton from `(x₀, v₀)`, stopping when the KKT residual drops to
/// `tol` or after `max_iter` steps.
pub fn newton_kkt_run(
    cp: &CompositeProblem,
    x0: &[f64],
    v0: &[f64],
    max_iter: usize,
    tol: f64,
    target: Option<&Target>,
) -> Result<Trajectory, VarsysError> {
    assert!(max_iter >= 1);
    let vs = cp.system()?;
    let data = Data {
        vs: &vs,
        a: vs.theta.pieces.iter().map(|p| vec_to_f64(&p.a)).collect(),
        alpha: vs.theta.pieces.iter().map(|p| crate::exact::rational::to_f64(&p.alpha)).collect(),
        d: vs.theta.domain.iter().map(|h| vec_to_f64(&h.d)).collect(),
        beta: vs.theta.domain.iter().map(|h| crate::exact::rational::to_f64(&h.beta)).collect(),
    };
    let inv = InverseSubdifferential::new(&vs);
    let mut t =
        Trajectory { iterates: vec![], residuals: vec![], distances: vec![], dual_distances: vec![], diagnostic: None };
    let record = |t: &mut Trajectory, x: Vec<f64>, v: Vec<f64>| -> f64 {
        let r = error_bound_residual(&vs, &inv, &x, &v);
        t.residuals.push(r);
        if let Some(tg) = target {
            t.distances.push(tg.distance(&x, &v));
            t.dual_distances.push(tg.dual_distance(&v));
        }
        t.iterates.push((x, v));
        r
    };
    let (mut x, mut v) = (x0.to_vec(), v0.to_vec());
    let mut r = record(&mut t, x.clone(), v.clone());
    for k in 0..max_iter {
        if r <= tol {
            break;
        }
        match data.step(&x, &v) {
            Some((xn, vn)) => {
                x = xn;
                v = vn;
                r = record(&mut t, x.clone(), v.clone());
            }
            None => {
                t.diagnostic = Some(format!("linearized subproblem infeasible at iteration {k}"));
                break;
            }
        }
    }
    Ok(t)
}

/// Local rate from a sequence of distances to the limit.
///
/// Tail ratios `d_{k+1}/d_k` over the last five steps decide: strictly
/// decreasing and ending below `1e-2` is superlinear, a median of at least
/// one is stalled, anything else is linear with the median ratio. A sequence
/// that reaches zero (relative to its largest entry) is superlinear at any length.
pub fn rate_classify(distances: &[f64]) -> Result<Rate, RateError> {
    let top = distances.iter().cloned().fold(0.0, f64::max);
    let cut = distances.iter().position(|&d| d <= CONVERGED_FRACTION * top);
    if let Some(end) = cut {
        if end >= 1 {
            return Ok(Rate::Superlinear);
        }
    }
    if distances.len() < TAIL_WINDOW {
        return Err(RateError::TooShort(distances.len()));
    }
    let tail = &distances[distances.len() - TAIL_WINDOW..];
    let ratios: Vec<f64> = tail.windows(2).map(|w| w[1] / w[0]).collect();
    let mut sorted = ratios.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = sorted[sorted.len() / 2];
    let decreasing = ratios.windows(2).all(|w| w[1] < w[0]);
    if decreasing && *ratios.last().unwrap() < SUPERLINEAR_RATIO {
        Ok(Rate::Superlinear)
    } else if median >= STALL_RATIO {
        Ok(Rate::Stalled)
    } else {
        Ok(Rate::Linear(median))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub start: (Vec<f64>, Vec<f64>),
    pub rate: Result<Rate, RateError>,
    pub iterations: usize,
    pub final_distance: f64,
    /// Smallest ratio `‖v_{k+1} − v*‖ / ‖v_k − v*‖` over the last five steps
    /// before the final iterate, `v*` the point of `Λ(x̄)` the run settles on.
    pub dual_tail_min_ratio: Option<f64>,
    pub diagnostic: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchConfig {
    pub starts: usize,
    pub ball: f64,
    pub rng_seed: u64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for BatchConfig {
    fn default() -> Self {
        BatchConfig { starts: 20, ball: 0.1, rng_seed: 0, max_iter: 60, tol: 1e-14 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchSummary {
    pub runs: Vec<RunSummary>,
    pub superlinear: usize,
    pub linear: usize,
    pub stalled: usize,
    pub unclassified: usize,
    /// Median over linear runs of their tail ratio.
    pub median_linear_ratio: Option<f64>,
}

impl BatchSummary {
    pub fn fraction_linear(&self) -> f64 {
        self.linear as f64 / self.runs.len().max(1) as f64
    }

    pub fn fraction_superlinear(&self) -> f64 {
        self.superlinear as f64 / self.runs.len().max(1) as f64
    }
}

fn median(mut xs: Vec<f64>) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Some(xs[xs.len() / 2])
}

/// Runs from seeded random starts in a ball around `(x̄, v̄)`.
pub fn run_batch(
    cp: &CompositeProblem,
    x: &[Rational],
    v: &[Rational],
    cfg: &BatchConfig,
) -> Result<BatchSummary, VarsysError> {
    use rand::SeedableRng;
    use rayon::prelude::*;
    let target = Target::new(cp, x)?;
    let (xf, vf) = (vec_to_f64(x), vec_to_f64(v));
    let n = xf.len();
    let runs: Vec<RunSummary> = (0..cfg.starts)
        .into_par_iter()
        .map(|k| {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.rng_seed);
            rng.set_stream(k as u64);
            let d = crate::stability::sample_ball(&mut rng, n + vf.len(), cfg.ball);
            let x0: Vec<f64> = xf.iter().zip(&d[..n]).map(|(a, b)| a + b).collect();
            let v0: Vec<f64> = vf.iter().zip(&d[n..]).map(|(a, b)| a + b).collect();
            let t = newton_kkt_run(cp, &x0, &v0, cfg.max_iter, cfg.tol, Some(&target)).expect("validated problem");
            // v* is the multiplier the run settles on; the final iterate only fixes it
            let vstar = target.nearest_multiplier(&t.iterates.last().unwrap().1);
            let dd: Vec<f64> = t.iterates[..t.iterates.len() - 1]
                .iter()
                .map(|(_, v)| v.iter().zip(&vstar).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
                .collect();
            let tail = &dd[dd.len().saturating_sub(6)..];
            let ratios: Vec<f64> = tail.windows(2).filter(|w| w[0] > 0.0).map(|w| w[1] / w[0]).collect();
            RunSummary {
                start: (x0, v0),
                rate: rate_classify(&t.distances),
                iterations: t.iterates.len() - 1,
                final_distance: *t.distances.last().unwrap(),
                dual_tail_min_ratio: (ratios.len() == 5).then(|| ratios.iter().cloned().fold(f64::INFINITY, f64::min)),
                diagnostic: t.diagnostic,
            }
        })
        .collect();
    let count = |f: &dyn Fn(&Rate) -> bool| runs.iter().filter(|r| r.rate.as_ref().is_ok_and(f)).count();
    let superlinear = count(&|r| *r == Rate::Superlinear);
    let linear = count(&|r| matches!(r, Rate::Linear(_)));
    let stalled = count(&|r| *r == Rate::Stalled);
    let unclassified = runs.len() - superlinear - linear - stalled;
    let median_linear_ratio = median(
        runs.iter()
            .filter_map(|r| match r.rate {
                Ok(Rate::Linear(q)) => Some(q),
                _ => None,
            })
            .collect(),
    );
    Ok(BatchSummary { runs, superlinear, linear, stalled, unclassified, median_linear_ratio })
}

#[cfg(test)]
mod tests;
