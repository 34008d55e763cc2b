use proptest::prelude::*;
use std::collections::BTreeSet;
use varcrit::exact::faces::closure;
use varcrit::exact::lp::verify_certificate;
use varcrit::exact::{
    convert_rep, convert_rep_v, dual_cone, dual_cone_h, enumerate_faces, hpoly_equal, hpoly_subset, lp_feasible, ratio,
    rvec, vpoly_contains, Constraint, Feasibility, HPoly, Rational, VPoly,
};

fn int_vec(dim: usize) -> impl Strategy<Value = Vec<i64>> {
    proptest::collection::vec(-3i64..=3, dim)
}

fn hpoly_strategy(max_dim: usize, max_rows: usize) -> impl Strategy<Value = HPoly> {
    (1..=max_dim).prop_flat_map(move |dim| {
        proptest::collection::vec((int_vec(dim), -2i64..=3), 0..=max_rows).prop_map(move |rows| HPoly {
            dim,
            ineqs: rows.into_iter().map(|(n, r)| Constraint::new(rvec(&n), Rational::from_integer(r.into()))).collect(),
            eqs: vec![],
        })
    })
}

fn sub(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn farkas_pairing_of_pattern_cones(
        dim in 1usize..=4,
        seeds in proptest::collection::vec((int_vec(4), 0u8..3), 1..=4),
        rows in proptest::collection::vec((int_vec(4), 0u8..3), 0..=3),
    ) {
        let a: Vec<_> = seeds.iter().map(|(v, _)| rvec(&v[..dim])).collect();
        let d: Vec<_> = rows.iter().map(|(v, _)| rvec(&v[..dim])).collect();
        // label 2: in P, label 1: in Q \ P, label 0: outside Q
        let p1: Vec<usize> = (0..a.len()).filter(|&i| seeds[i].1 == 2).collect();
        let q1: Vec<usize> = (0..a.len()).filter(|&i| seeds[i].1 == 1).collect();
        let (mut eqs, mut ineqs) = (vec![], vec![]);
        for &i in &p1 {
            for &j in &p1 {
                if i < j {
                    eqs.push(sub(&a[i], &a[j]));
                }
            }
            for &k in &q1 {
                ineqs.push(sub(&a[k], &a[i]));
            }
        }
        for (i, di) in d.iter().enumerate() {
            match rows[i].1 {
                2 => eqs.push(di.clone()),
                1 => ineqs.push(di.clone()),
                _ => {}
            }
        }
        let g = HPoly::cone(dim, ineqs.clone(), eqs.clone());
        let f = VPoly::cone(dim, ineqs, eqs);
        let g_polar = convert_rep_v(&dual_cone_h(&g).unwrap()).unwrap();
        prop_assert!(hpoly_equal(&g_polar, &convert_rep_v(&f).unwrap()));
        prop_assert!(hpoly_equal(&dual_cone(&f).unwrap(), &g));
    }

    #[test]
    fn double_duality(
        dim in 1usize..=3,
        rays in proptest::collection::vec(int_vec(3), 0..=4),
        lines in proptest::collection::vec(int_vec(3), 0..=1),
    ) {
        let c = VPoly::cone(dim, rays.iter().map(|r| rvec(&r[..dim])).collect(), lines.iter().map(|l| rvec(&l[..dim])).collect());
        let back = dual_cone_h(&dual_cone(&c).unwrap()).unwrap();
        prop_assert!(hpoly_equal(&convert_rep_v(&back).unwrap(), &convert_rep_v(&c).unwrap()));
    }

    #[test]
    fn conversion_preserves_membership(p in hpoly_strategy(3, 5), pts in proptest::collection::vec((int_vec(3), 1i64..=3), 100)) {
        let v = convert_rep(&p).unwrap();
        for (num, den) in pts {
            let x: Vec<Rational> = num[..p.dim].iter().map(|&n| ratio(n, den)).collect();
            prop_assert_eq!(p.contains(&x), vpoly_contains(&v, &x));
        }
        prop_assert!(hpoly_equal(&convert_rep_v(&v).unwrap(), &p));
    }

    #[test]
    fn lp_answers_are_certified(p in hpoly_strategy(4, 6)) {
        match lp_feasible(&p).unwrap() {
            Feasibility::Feasible(w) => prop_assert!(p.contains(&w)),
            Feasibility::Infeasible(cert) => prop_assert!(verify_certificate(&p, &cert)),
        }
    }

    #[test]
    fn faces_match_subset_brute_force(p in hpoly_strategy(3, 5)) {
        let faces = enumerate_faces(&p);
        let mut brute: BTreeSet<BTreeSet<usize>> = BTreeSet::new();
        for mask in 0..1usize << p.ineqs.len() {
            let s: BTreeSet<usize> = (0..p.ineqs.len()).filter(|i| mask >> i & 1 == 1).collect();
            if let Some(c) = closure(&p, &s) {
                brute.insert(c);
            }
        }
        let found: BTreeSet<BTreeSet<usize>> = faces.iter().map(|f| f.active_ineq_indices.clone()).collect();
        prop_assert_eq!(found.len(), faces.len());
        prop_assert_eq!(found, brute);
        for f in &faces {
            prop_assert!(varcrit::exact::is_feasible(&f.carrier));
            prop_assert!(hpoly_subset(&f.carrier, &p));
        }
    }
}
