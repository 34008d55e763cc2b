use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use varcrit::convergence::{run_batch, BatchConfig, Rate};
use varcrit::cpwl::{AffinePiece, CpwlFunction};
use varcrit::criticality::{classify_multiplier, classify_multiplier_coderivative, sosc_check, verify_witness, Status};
use varcrit::exact::{rat, Rational};
use varcrit::instances::{random_kkt, RandomKkt};
use varcrit::smooth::{PolyExpr, PolyMap};
use varcrit::stability::{
    error_bound_residual, isolated_calmness_check, lipschitz_like_check, robust_isolated_calmness_check,
    solve_perturbed, InverseSubdifferential, Perturbation, ACCEPT_TOL,
};
use varcrit::varsys::CompositeProblem;

fn kkt(seed: u64) -> RandomKkt {
    random_kkt(seed, 3, 3, 3, 2)
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|t| t * t).sum::<f64>().sqrt()
}

/// `(cφ₀, Φ, cθ)` with multiplier `cv`.
fn scaled(r: &RandomKkt, c: &Rational) -> (CompositeProblem, Vec<Rational>) {
    let t = &r.problem.theta;
    let pieces =
        t.pieces.iter().map(|p| AffinePiece { a: p.a.iter().map(|x| x * c).collect(), alpha: &p.alpha * c }).collect();
    let theta = CpwlFunction::new(t.m, pieces, t.domain.clone()).unwrap();
    let cp = CompositeProblem::new(r.problem.phi0.scale(c), r.problem.phi.clone(), theta).unwrap();
    (cp, r.v.iter().map(|x| x * c).collect())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 50, ..ProptestConfig::default() })]

    #[test]
    fn both_routes_agree_and_witnesses_verify(seed in any::<u64>()) {
        let r = kkt(seed);
        let vs = r.problem.system().unwrap();
        let faces = classify_multiplier(&vs, &r.x, &r.v).unwrap();
        let coder = classify_multiplier_coderivative(&vs, &r.x, &r.v).unwrap();
        prop_assert_eq!(faces.status, coder.status);
        for verdict in [&faces, &coder] {
            match (&verdict.status, &verdict.witness) {
                (Status::Critical, Some(w)) => prop_assert!(verify_witness(&vs, &r.x, &r.v, w).unwrap()),
                (Status::Noncritical, None) => {}
                other => prop_assert!(false, "inconsistent verdict {:?}", other),
            }
        }
    }

    #[test]
    fn criticality_is_scale_invariant(seed in any::<u64>(), num in 1i64..=5, den in 1i64..=5) {
        let r = kkt(seed);
        let c = varcrit::exact::ratio(num, den);
        let (cp, v) = scaled(&r, &c);
        let before = classify_multiplier(&r.problem.system().unwrap(), &r.x, &r.v).unwrap().status;
        let after = classify_multiplier(&cp.system().unwrap(), &r.x, &v).unwrap().status;
        prop_assert_eq!(before, after);
    }

    #[test]
    fn stability_implications(seed in any::<u64>()) {
        let r = kkt(seed);
        let vs = r.problem.system().unwrap();
        let status = classify_multiplier(&vs, &r.x, &r.v).unwrap().status;
        let sosc = sosc_check(&vs, &r.x, &r.v).unwrap();
        let calm = isolated_calmness_check(&vs, &r.x, &r.v).unwrap();
        let robust = robust_isolated_calmness_check(&r.problem, &r.x, &r.v).unwrap();
        let lipschitz = lipschitz_like_check(&r.problem, &r.x, &r.v).unwrap();
        let lam = vs.multiplier_set(&r.x).unwrap();
        let (nondegenerate, _) = vs.nondegeneracy_check(&r.x).unwrap();
        if sosc.holds {
            prop_assert_eq!(status, Status::Noncritical);
            let noncritical_unique = lam.is_singleton() && status == Status::Noncritical;
            prop_assert_eq!(robust.holds, noncritical_unique);
            prop_assert_eq!(robust.holds, calm);
        } else {
            let d = sosc.violating_direction.expect("a direction when SOSC fails");
            prop_assert!(d.iter().any(|c| *c != rat(0)));
        }
        if calm {
            prop_assert_eq!(status, Status::Noncritical);
        }
        if lipschitz {
            prop_assert!(nondegenerate && status == Status::Noncritical && lam.is_singleton());
        }
        if nondegenerate {
            prop_assert!(lam.is_singleton());
        }
        if lam.is_singleton() {
            prop_assert!(vs.rcq_check(&r.x).unwrap());
        }
    }

    #[test]
    fn multiplier_set_vertices_are_multipliers(seed in any::<u64>()) {
        let r = kkt(seed);
        let vs = r.problem.system().unwrap();
        let lam = vs.multiplier_set(&r.x).unwrap();
        prop_assert!(lam.hpoly.contains(&r.v));
        for w in &lam.vertices.points {
            prop_assert!(vs.certified_point(&r.x, w).is_ok());
        }
    }

    #[test]
    fn unperturbed_solutions_are_multipliers(seed in any::<u64>()) {
        let r = kkt(seed);
        let vs = r.problem.system().unwrap();
        let start = vs.certified_point(&r.x, &r.v).unwrap();
        let dec = vs.theta.decompose_subgradient(&start.z, &start.v).unwrap();
        let rep = solve_perturbed(&vs, &Perturbation::zero(vs.n, vs.m), &start, ACCEPT_TOL);
        prop_assert!(rep.solutions.iter().any(|s| norm(&s.x) < 1e-8));
        let lam = vs.multiplier_set(&r.x).unwrap();
        for s in rep.solutions.iter().filter(|s| norm(&s.x) < 1e-8) {
            prop_assert!(lam.hpoly.contains_f64(&s.v, 1e-7));
        }
        // patterns dropping part of the seed support are never explored
        for s in &rep.solutions {
            prop_assert!(dec.j1.is_subset(&s.pattern.0) && dec.j2.is_subset(&s.pattern.1));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, ..ProptestConfig::default() })]

    #[test]
    fn nonpositive_orthant_residual_bounds_the_complementarity_gap(
        x in proptest::collection::vec(-1.0f64..1.0, 2),
        v in proptest::collection::vec(0.0f64..2.0, 2),
    ) {
        // φ₀ = x₀² + x₁², Φ = (x₀ − x₁², x₀ + x₁)
        let (x0, x1) = (PolyExpr::var(2, 0), PolyExpr::var(2, 1));
        let phi0 = x0.mul(&x0).add(&x1.mul(&x1));
        let phi = PolyMap::new(2, vec![x0.add(&x1.mul(&x1).scale(&rat(-1))), x0.add(&x1)]).unwrap();
        let cp = CompositeProblem::new(phi0, phi, CpwlFunction::indicator_nonpositive(2)).unwrap();
        let vs = cp.system().unwrap();
        let inv = InverseSubdifferential::new(&vs);
        let psi = vs.psi_eval_f64(&x, &v).unwrap();
        let z = vs.phi.eval_f64(&x).unwrap();
        let gap: Vec<f64> = v.iter().zip(&z).map(|(vi, zi)| vi.min(-zi)).collect();
        prop_assert!(norm(&psi) + norm(&gap) <= error_bound_residual(&vs, &inv, &x, &v) + 1e-12);
    }
}

#[test]
fn robust_instances_converge_superlinearly() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut found = 0;
    for _ in 0..400 {
        let r = kkt(rng.random());
        if !robust_isolated_calmness_check(&r.problem, &r.x, &r.v).unwrap().holds {
            continue;
        }
        found += 1;
        let cfg = BatchConfig { starts: 8, ball: 0.05, ..BatchConfig::default() };
        let b = run_batch(&r.problem, &r.x, &r.v, &cfg).unwrap();
        let fast = b.runs.iter().filter(|s| s.rate == Ok(Rate::Superlinear)).count();
        assert!(fast * 4 >= b.runs.len() * 3, "{:?}", b.runs.iter().map(|s| &s.rate).collect::<Vec<_>>());
        if found == 10 {
            break;
        }
    }
    assert_eq!(found, 10);
}
