//! Empirical calmness of the perturbed solution map around `(x̄, v̄)`.

use super::solver::{diff, norm, solve_perturbed, solve_perturbed_from, Perturbation, PerturbedSolution, ACCEPT_TOL};
use crate::criticality::{classify_multiplier, CriticalityError, Status};
use crate::exact::distance::PolyhedronProjector;
use crate::exact::linalg::mat_vec;
use crate::exact::poly::HPoly;
use crate::exact::rational::{add, ratio, scale, sub, vec_to_f64, Rational};
use crate::varsys::{PrimalDualPoint, VariationalSystem, VarsysError};
use num_traits::Pow;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

/// Ratios above this along the witness path count as divergence.
pub const DIVERGENCE_BOUND: f64 = 1e3;
/// Per-radius maxima over the last three radii must agree within this factor.
pub const STABILIZATION_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeConfig {
    pub radii: Vec<f64>,
    pub samples_per_radius: usize,
    pub rng_seed: u64,
    /// Solutions farther than this from `(x̄, v̄)` are ignored.
    pub neighborhood: f64,
    pub path_witness: bool,
    /// Exponents `k` of the witness-path steps `t = 10⁻ᵏ`.
    pub path_exponents: Vec<u32>,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            radii: vec![1e-2, 1e-3, 1e-4, 1e-5, 1e-6],
            samples_per_radius: 64,
            rng_seed: 0,
            neighborhood: 0.5,
            path_witness: false,
            path_exponents: vec![1, 2, 3, 4],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProbeVerdict {
    Bounded(f64),
    Diverging,
    /// Sampling neither stabilized nor was a divergent path available.
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WitnessPath {
    pub ts: Vec<f64>,
    pub ratios: Vec<f64>,
    /// Largest ratio among solver solutions for the same perturbations.
    pub solver_ratios: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalmnessProbeReport {
    pub radii: Vec<f64>,
    pub empirical_moduli: Vec<f64>,
    /// Largest `(‖x−x̄‖ + dist(v,Λ)) / residual` seen at each radius.
    pub error_bound_moduli: Vec<f64>,
    pub skipped_samples: Vec<usize>,
    pub path: Option<WitnessPath>,
    pub verdict: ProbeVerdict,
    pub rng_seed: u64,
}

/// `(∂θ)⁻¹(v)` as a union of polyhedra with distance queries.
pub struct InverseSubdifferential {
    pieces: Vec<(HPoly, PolyhedronProjector)>,
}

impl InverseSubdifferential {
    pub fn new(vs: &VariationalSystem) -> Self {
        let pieces = vs
            .theta
            .all_graph_pieces()
            .into_iter()
            .map(|g| (g.vset.clone(), PolyhedronProjector::new(&g.zset)))
            .collect();
        InverseSubdifferential { pieces }
    }

    pub fn distance(&self, z: &[f64], v: &[f64]) -> f64 {
        self.pieces
            .iter()
            .filter(|(vset, _)| vset.contains_f64(v, ACCEPT_TOL))
            .map(|(_, proj)| proj.distance(z))
            .fold(f64::INFINITY, f64::min)
    }
}

/// `‖Ψ(x,v)‖ + dist(Φ(x), (∂θ)⁻¹(v))`.
pub fn error_bound_residual(vs: &VariationalSystem, inv: &InverseSubdifferential, x: &[f64], v: &[f64]) -> f64 {
    let psi = vs.psi_eval_f64(x, v).expect("arity");
    norm(&psi) + inv.distance(&vs.phi.eval_f64(x).expect("arity"), v)
}

struct Center {
    x: Vec<f64>,
    v: Vec<f64>,
    lambda: PolyhedronProjector,
}

impl Center {
    fn numerator(&self, x: &[f64], v: &[f64]) -> f64 {
        norm(&diff(x, &self.x)) + self.lambda.distance(v)
    }

    fn near(&self, s: &PerturbedSolution, radius: f64) -> bool {
        norm(&diff(&s.x, &self.x)) + norm(&diff(&s.v, &self.v)) <= radius
    }
}

/// Uniform direction on the sphere scaled by a uniform radius in `(0, r]`.
pub fn sample_ball(rng: &mut ChaCha8Rng, dim: usize, r: f64) -> Vec<f64> {
    let mut dir: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
    let len = norm(&dir);
    let rad = r * (1.0 - rng.random::<f64>());
    for d in dir.iter_mut() {
        *d *= rad / len;
    }
    dir
}

fn sample(rng: &mut ChaCha8Rng, n: usize, m: usize, r: f64) -> Perturbation {
    let mut dir = sample_ball(rng, n + m, r);
    let p2 = dir.split_off(n);
    Perturbation { p1: dir, p2 }
}

pub fn calmness_probe(
    vs: &VariationalSystem,
    x: &[Rational],
    v: &[Rational],
    cfg: &ProbeConfig,
) -> Result<CalmnessProbeReport, CriticalityError> {
    let seed = vs.certified_point(x, v)?;
    let lam = vs.multiplier_set(x)?;
    let center = Center { x: vec_to_f64(x), v: vec_to_f64(v), lambda: PolyhedronProjector::new(&lam.hpoly) };
    let inv = InverseSubdifferential::new(vs);
    let (n, m) = (vs.n, vs.m);
    let mut moduli = Vec::new();
    let mut eb_moduli = Vec::new();
    let mut skipped = Vec::new();
    for (ri, &r) in cfg.radii.iter().enumerate() {
        let results: Vec<Option<(f64, f64)>> = (0..cfg.samples_per_radius)
            .into_par_iter()
            .map(|si| {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
                rng.set_stream((ri * cfg.samples_per_radius + si) as u64);
                let p = sample(&mut rng, n, m, r);
                let sols = solve_perturbed(vs, &p, &seed, ACCEPT_TOL).solutions;
                let near: Vec<&PerturbedSolution> = sols.iter().filter(|s| center.near(s, cfg.neighborhood)).collect();
                if near.is_empty() {
                    return None;
                }
                let pn = p.norm();
                let ratio = near.iter().map(|s| center.numerator(&s.x, &s.v) / pn).fold(0.0, f64::max);
                let eb = near
                    .iter()
                    .filter_map(|s| {
                        let res = error_bound_residual(vs, &inv, &s.x, &s.v);
                        (res > 1e-13).then(|| center.numerator(&s.x, &s.v) / res)
                    })
                    .fold(0.0, f64::max);
                Some((ratio, eb))
            })
            .collect();
        skipped.push(results.iter().filter(|o| o.is_none()).count());
        let found = results.iter().flatten();
        moduli.push(found.clone().map(|t| t.0).fold(0.0, f64::max));
        eb_moduli.push(found.map(|t| t.1).fold(0.0, f64::max));
    }
    let path = if cfg.path_witness { witness_path(vs, &seed, &center, cfg)? } else { None };
    let verdict = decide(&moduli, path.as_ref());
    Ok(CalmnessProbeReport {
        radii: cfg.radii.clone(),
        empirical_moduli: moduli,
        error_bound_moduli: eb_moduli,
        skipped_samples: skipped,
        path,
        verdict,
        rng_seed: cfg.rng_seed,
    })
}

fn decide(moduli: &[f64], path: Option<&WitnessPath>) -> ProbeVerdict {
    if let Some(p) = path {
        if p.ratios.last().is_some_and(|&r| r > DIVERGENCE_BOUND) {
            return ProbeVerdict::Diverging;
        }
    }
    if moduli.len() < 3 {
        return ProbeVerdict::Inconclusive;
    }
    let tail = &moduli[moduli.len() - 3..];
    let hi = tail.iter().cloned().fold(0.0, f64::max);
    let lo = tail.iter().cloned().fold(f64::INFINITY, f64::min);
    if lo > 0.0 && hi.is_finite() && hi <= STABILIZATION_FACTOR * lo {
        ProbeVerdict::Bounded(hi)
    } else {
        ProbeVerdict::Inconclusive
    }
}

/// Ratios along `(x̄ + tξ, v̄ + tη)` with `p₁ = Ψ(x_t, v_t)` and
/// `p₂ = z̄ + t∇Φξ − Φ(x_t)` for a criticality witness `(ξ, η)`; `None` when
/// the multiplier is noncritical.
fn witness_path(
    vs: &VariationalSystem,
    seed: &PrimalDualPoint,
    center: &Center,
    cfg: &ProbeConfig,
) -> Result<Option<WitnessPath>, CriticalityError> {
    let verdict = classify_multiplier(vs, &seed.x, &seed.v)?;
    if verdict.status != Status::Critical {
        return Ok(None);
    }
    let w = verdict.witness.expect("critical verdicts carry a witness");
    let jxi = mat_vec(&vs.jacobian_phi(&seed.x)?, &w.xi);
    let mut out = WitnessPath { ts: vec![], ratios: vec![], solver_ratios: vec![] };
    for &k in &cfg.path_exponents {
        let t: Rational = ratio(1, 10).pow(k);
        let xt = add(&seed.x, &scale(&w.xi, &t));
        let vt = add(&seed.v, &scale(&w.eta, &t));
        let zt = add(&seed.z, &scale(&jxi, &t));
        if !vs.theta.in_domain(&zt) || !vs.theta.is_subgradient(&zt, &vt).map_err(VarsysError::from)? {
            continue;
        }
        let p1 = vs.psi_eval(&xt, &vt)?;
        let p2 = sub(&zt, &vs.phi.eval(&xt).map_err(VarsysError::from)?);
        let p = Perturbation { p1: vec_to_f64(&p1), p2: vec_to_f64(&p2) };
        let (xf, vf) = (vec_to_f64(&xt), vec_to_f64(&vt));
        let pn = p.norm();
        let num = center.numerator(&xf, &vf);
        out.ts.push(crate::exact::rational::to_f64(&t));
        out.ratios.push(if pn > 0.0 { num / pn } else { f64::INFINITY });
        // Newton cannot leave x̄ along directions where ∇Φ is flat, so start halfway
        let x0 = vec_to_f64(&add(&seed.x, &scale(&w.xi, &(&t / Rational::from_integer(2.into())))));
        let sols = solve_perturbed_from(vs, &p, seed, &x0, ACCEPT_TOL).solutions;
        let best = sols
            .iter()
            .filter(|s| center.near(s, cfg.neighborhood))
            .map(|s| if pn > 0.0 { center.numerator(&s.x, &s.v) / pn } else { f64::INFINITY })
            .fold(None, |acc: Option<f64>, r| Some(acc.map_or(r, |a| a.max(r))));
        out.solver_ratios.push(best);
    }
    Ok(Some(out))
}
