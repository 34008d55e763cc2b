use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::{Path, PathBuf};
use varcrit::exact::dd::cone_generators;
use varcrit::exact::{ratio, Rational};
use varcrit_cli::corpus::{builtin, run_corpus, BUILTIN};
use varcrit_cli::report::AnalysisReport;
use varcrit_cli::schema::{rational, rationals, strings, Problem};
use varcrit_cli::{cmd_analyze, run, Outcome};

fn varcrit(args: &[&str]) -> Outcome {
    run(std::iter::once("varcrit").chain(args.iter().copied()))
}

/// Writes `problem` with its points replaced and goldens dropped.
fn with_point(dir: &Path, problem: &str, x: &[&str], v: &[&str]) -> PathBuf {
    let mut value: serde_json::Value = serde_json::from_str(builtin(problem).unwrap()).unwrap();
    let obj = value.as_object_mut().unwrap();
    obj.remove("expect");
    obj.insert("points".into(), serde_json::json!([{ "name": "p", "x": x, "v": v }]));
    let path = dir.join(format!("{problem}.json"));
    std::fs::write(&path, serde_json::to_string_pretty(&value).unwrap()).unwrap();
    path
}

fn to_f64(x: &Rational) -> f64 {
    x.numer().to_string().parse::<f64>().unwrap() / x.denom().to_string().parse::<f64>().unwrap()
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(varcrit(&["analyze"]).code, 2);
    assert_eq!(varcrit(&["analyze", "no_such_problem"]).code, 2);
    assert_eq!(varcrit(&["analyze", "quad3", "--point", "missing"]).code, 2);
    assert_eq!(varcrit(&["perturb", "quad3", "--radii", ""]).code, 2);
    assert_eq!(varcrit(&["perturb", "quad3", "--radii", "1e-2,0"]).code, 2);
    assert_eq!(varcrit(&["perturb", "quad3", "--samples", "0"]).code, 2);
    assert_eq!(varcrit(&["converge", "quad3", "--starts", "0"]).code, 2);
    assert_eq!(varcrit(&["converge", "quad3", "--ball", "-1"]).code, 2);
    assert_eq!(varcrit(&["--help"]).code, 0);
}

#[test]
fn malformed_files_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = with_point(dir.path(), "quad3", &["1/0", "0", "0"], &["1", "0", "0"]);
    let out = varcrit(&["analyze", path.to_str().unwrap()]);
    assert_eq!(out.code, 2, "{}", out.stderr);
    let junk = dir.path().join("junk.json");
    std::fs::write(&junk, "{ \"name\": 1 }").unwrap();
    assert_eq!(varcrit(&["analyze", junk.to_str().unwrap()]).code, 2);
}

#[test]
fn converge_needs_an_objective() {
    let dir = tempfile::tempdir().unwrap();
    let mut value: serde_json::Value = serde_json::from_str(builtin("onedim").unwrap()).unwrap();
    let obj = value.as_object_mut().unwrap();
    // f = ∇φ₀ = x − 1
    obj.remove("phi0");
    obj.insert(
        "f".into(),
        serde_json::json!([[{ "coeff": "1", "exponents": [1] }, { "coeff": "-1", "exponents": [0] }]]),
    );
    obj.remove("expect");
    let path = dir.path().join("f_only.json");
    std::fs::write(&path, value.to_string()).unwrap();
    let path = path.to_str().unwrap();
    assert_eq!(varcrit(&["analyze", path]).code, 0);
    assert_eq!(varcrit(&["converge", path]).code, 2);
}

#[test]
fn infeasible_and_non_multiplier_points() {
    let dir = tempfile::tempdir().unwrap();
    let infeasible = with_point(dir.path(), "quad3", &["1", "0", "0"], &["1", "0", "0"]);
    let out = varcrit(&["analyze", infeasible.to_str().unwrap()]);
    assert_eq!(out.code, 3, "{}", out.stderr);
    let outside = with_point(dir.path(), "quad3", &["0", "0", "0"], &["-1", "0", "0"]);
    assert_eq!(varcrit(&["analyze", outside.to_str().unwrap()]).code, 4);
    // v = 0 lies in ∂θ but leaves Ψ ≠ 0
    let nonstationary = with_point(dir.path(), "quad3", &["0", "0", "0"], &["0", "0", "0"]);
    assert_eq!(varcrit(&["analyze", nonstationary.to_str().unwrap()]).code, 4);
    assert_eq!(varcrit(&["perturb", nonstationary.to_str().unwrap()]).code, 4);
}

#[test]
fn tampered_golden_is_reported_as_drift() {
    let dir = tempfile::tempdir().unwrap();
    for (name, text) in BUILTIN {
        std::fs::write(dir.path().join(format!("{name}.json")), text).unwrap();
    }
    let clean = varcrit(&["corpus", "--dir", dir.path().to_str().unwrap()]);
    assert_eq!(clean.code, 0, "{}", clean.stdout);
    let mut value: serde_json::Value = serde_json::from_str(builtin("quad3").unwrap()).unwrap();
    let eqs = &mut value["expect"]["multiplier_set"]["eqs"][0]["rhs"];
    assert_eq!(eqs.as_str(), Some("1"));
    *eqs = serde_json::json!("0");
    std::fs::write(dir.path().join("quad3.json"), value.to_string()).unwrap();
    let out = varcrit(&["corpus", "--dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.code, 1);
    assert!(out.stdout.contains("DRIFT"), "{}", out.stdout);
}

#[test]
fn corpus_listing_and_run() {
    let out = varcrit(&["corpus", "--list"]);
    assert_eq!(out.code, 0);
    assert_eq!(out.stdout.lines().filter(|l| !l.trim().is_empty()).count(), 9, "{}", out.stdout);
    let report = run_corpus(None).unwrap();
    assert_eq!(report.problems.len(), 9);
    assert_eq!(report.drift(), 0, "{}", report.render());
}

#[test]
fn outputs_are_deterministic() {
    for args in [
        &["analyze", "quad3", "--all-vertices", "--json"][..],
        &["perturb", "quad3", "--point", "crit", "--samples", "8", "--json"],
        &["converge", "quad3", "--point", "noncrit", "--starts", "6", "--json"],
        &["corpus", "--json"],
    ] {
        let a = varcrit(args);
        let b = varcrit(args);
        assert_eq!(a.code, 0, "{args:?}: {}", a.stderr);
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn analysis_json_round_trips() {
    for (name, _) in BUILTIN {
        let out = varcrit(&["analyze", name, "--json"]);
        assert_eq!(out.code, 0);
        let parsed: AnalysisReport = serde_json::from_str(&out.stdout).unwrap();
        assert_eq!(parsed, cmd_analyze(name, None, false).unwrap());
        assert_eq!(serde_json::to_string_pretty(&parsed).unwrap() + "\n", out.stdout);
    }
}

#[test]
fn implications_hold_across_the_corpus() {
    for (name, _) in BUILTIN {
        let report = cmd_analyze(name, None, true).unwrap();
        for p in &report.points {
            for imp in &p.implications {
                assert_ne!(imp.holds, Some(false), "{name}/{}: {}", p.name, imp.name);
            }
            assert!(!p.chain.contains("VIOLATED"), "{name}/{}", p.name);
        }
    }
}

/// `⟨Hu, u⟩` over 10⁴ sampled directions with `∇Φ u ∈ K`, against the exact
/// SOSC verdict.
#[test]
fn sosc_verdicts_agree_with_sampling() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (name, text) in BUILTIN {
        let problem = Problem::parse(text).unwrap();
        let vs = &problem.system;
        for pt in problem.points() {
            let report = cmd_analyze(name, Some(&pt.name), false).unwrap();
            let sosc = &report.points[0].sosc;
            let h = vs.psi_jacobian_x(&pt.x, &pt.v).unwrap();
            let j = vs.jacobian_phi(&pt.x).unwrap();
            let z = vs.phi.eval(&pt.x).unwrap();
            let k = vs.theta.critical_cone(&z, &pt.v).unwrap().hrep;
            let quad = |u: &[f64]| -> f64 {
                h.iter().zip(u).map(|(row, ui)| ui * row.iter().zip(u).map(|(a, b)| to_f64(a) * b).sum::<f64>()).sum()
            };
            if let Some(d) = &sosc.violating_direction {
                let d = rationals(d).unwrap();
                let jd: Vec<Rational> = j.iter().map(|row| row.iter().zip(&d).map(|(a, b)| a * b).sum()).collect();
                assert!(k.contains(&jd), "{name}/{}", pt.name);
                let df: Vec<f64> = d.iter().map(to_f64).collect();
                assert!(quad(&df) <= 1e-12, "{name}/{}", pt.name);
                continue;
            }
            assert!(sosc.holds);
            let c = k.pullback(&j, vs.n);
            let normals = |cs: &[varcrit::exact::Constraint]| cs.iter().map(|c| c.normal.clone()).collect::<Vec<_>>();
            let (rays, lines) = cone_generators(vs.n, &normals(&c.ineqs), &normals(&c.eqs));
            let gens: Vec<(Vec<f64>, bool)> = rays
                .iter()
                .map(|r| (r.iter().map(to_f64).collect(), false))
                .chain(lines.iter().map(|l| (l.iter().map(to_f64).collect(), true)))
                .collect();
            if gens.is_empty() {
                continue;
            }
            for _ in 0..10_000 {
                let mut u = vec![0.0; vs.n];
                for (g, line) in &gens {
                    let t: f64 = if *line { rng.random_range(-1.0..1.0) } else { rng.random_range(0.0..1.0) };
                    for (ui, gi) in u.iter_mut().zip(g) {
                        *ui += t * gi;
                    }
                }
                let nn: f64 = u.iter().map(|x| x * x).sum();
                if nn > 1e-12 {
                    assert!(quad(&u) > 0.0, "{name}/{}: {u:?}", pt.name);
                }
            }
        }
    }
}

#[test]
fn binary_runs_the_corpus() {
    let bin = env!("CARGO_BIN_EXE_varcrit");
    let out = std::process::Command::new(bin).arg("corpus").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("0 mismatches"), "{text}");
    let out = std::process::Command::new(bin).args(["analyze", "quad3", "--point", "nope"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

proptest! {
    #[test]
    fn rationals_round_trip(num in -10_000i64..10_000, den in 1i64..10_000) {
        let r = ratio(num, den);
        let s = strings(std::slice::from_ref(&r));
        prop_assert_eq!(rational(&s[0]).unwrap(), r);
    }

    #[test]
    fn nonpositive_radii_are_rejected(good in proptest::collection::vec(1e-6f64..1.0, 0..3), bad in -1.0f64..=0.0) {
        let mut radii: Vec<String> = good.iter().map(|r| r.to_string()).collect();
        radii.push(bad.to_string());
        let list = radii.join(",");
        let out = varcrit(&["perturb", "onedim", "--samples", "2", "--radii", &list]);
        prop_assert_eq!(out.code, 2);
    }
}
