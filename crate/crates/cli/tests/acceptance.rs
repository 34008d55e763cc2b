//! One PASS/FAIL line per acceptance criterion; exits nonzero on any failure.

use std::time::{Duration, Instant};
use varcrit::convergence::{run_batch, BatchConfig};
use varcrit::cpwl::{ConeUnion, CpwlFunction};
use varcrit::criticality::{classify_multiplier, classify_multiplier_coderivative, verify_witness, Status};
use varcrit::exact::dd::cone_generators;
use varcrit::exact::project::project_out;
use varcrit::exact::rational::{add, scale, sub, zeros};
use varcrit::exact::{
    cone_subset_of_union, convert_rep_v, dual_cone, dual_cone_h, fmt_rational, hpoly_equal, rat, rvec, Constraint,
    HPoly, Rational, VPoly,
};
use varcrit::instances::{onedim, quad2_active, quad3, random_graph_point, random_kkt, GraphPoint};
use varcrit::stability::{calmness_probe, semi_isolated_summary, ProbeConfig, ProbeVerdict};
use varcrit::varsys::VariationalSystem;
use varcrit_cli::corpus::BUILTIN;
use varcrit_cli::schema::Problem;
use varcrit_cli::{cmd_analyze, run};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check, Duration);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Debug>(e: E) -> String {
    format!("{e:?}")
}

fn is_zero_matrix(h: &[Vec<Rational>]) -> bool {
    h.iter().flatten().all(|x| *x == rat(0))
}

fn critical_with_witness(vs: &VariationalSystem, x: &[Rational], v: &[Rational]) -> Result<Vec<Rational>, String> {
    let verdict = classify_multiplier(vs, x, v).map_err(err)?;
    ensure(verdict.status == Status::Critical, || "not critical".into())?;
    let w = verdict.witness.ok_or("no witness")?;
    ensure(verify_witness(vs, x, v, &w).map_err(err)?, || format!("witness {w:?} fails substitution"))?;
    Ok(w.xi)
}

fn criterion_1() -> Check {
    let vs = quad3().system().map_err(err)?;
    let (x, v) = (rvec(&[0, 0, 0]), rvec(&[3, 0, 2]));
    let xi = critical_with_witness(&vs, &x, &v)?;
    let h = vs.psi_jacobian_x(&x, &v).map_err(err)?;
    ensure(is_zero_matrix(&h), || format!("Hessian {h:?}"))?;
    let xi: Vec<String> = xi.iter().map(fmt_rational).collect();
    Ok(format!("critical, witness ξ = ({}) verified, Hessian 0", xi.join(",")))
}

fn criterion_2() -> Check {
    let vs = quad2_active().system().map_err(err)?;
    let (x, v) = (rvec(&[0, 0, 0]), rvec(&[0, 1]));
    let xi = critical_with_witness(&vs, &x, &v)?;
    ensure(xi[0] == rat(0) && xi[1] == rat(0) && xi[2] != rat(0), || format!("ξ = {xi:?}"))?;
    let h = vs.psi_jacobian_x(&x, &v).map_err(err)?;
    let want = [rvec(&[0, 0, 0]), rvec(&[0, 1, 0]), rvec(&[0, 0, 0])];
    ensure(h == want, || format!("Hessian {h:?}"))?;
    Ok("critical, ξ ∝ (0,0,1), Hessian diag(0,1,0)".into())
}

fn graph_points() -> impl Iterator<Item = GraphPoint> {
    (0..50u64).map(|s| random_graph_point(1000 + s, 3, 4, 3))
}

fn criterion_3() -> Check {
    for (k, g) in graph_points().enumerate() {
        let formula = g.theta.critical_cone(&g.z, &g.v).map_err(err)?.hrep;
        let oracle = g.theta.critical_cone_oracle(&g.z, &g.v).map_err(err)?;
        ensure(oracle.equals_cone(&formula), || format!("instance {k}: formula and oracle differ"))?;
    }
    Ok("50 random instances, exact equality".into())
}

/// `F` as generators and `G` as constraints for index sets `P ⊂ Q`.
fn farkas_pair(t: &CpwlFunction, p1: &[usize], q1: &[usize], p2: &[usize], q2: &[usize]) -> (VPoly, HPoly) {
    let (mut lines, mut rays) = (vec![], vec![]);
    for &i in p1 {
        for &j in p1 {
            if i < j {
                lines.push(sub(&t.pieces[i].a, &t.pieces[j].a));
            }
        }
        for &k in q1.iter().filter(|k| !p1.contains(k)) {
            rays.push(sub(&t.pieces[k].a, &t.pieces[i].a));
        }
    }
    lines.extend(p2.iter().map(|&j| t.domain[j].d.clone()));
    rays.extend(q2.iter().filter(|j| !p2.contains(j)).map(|&j| t.domain[j].d.clone()));
    (VPoly::cone(t.m, rays.clone(), lines.clone()), HPoly::cone(t.m, rays, lines))
}

fn cone_samples(k: &HPoly) -> Vec<Vec<Rational>> {
    let normals = |cs: &[Constraint]| cs.iter().map(|c| c.normal.clone()).collect::<Vec<_>>();
    let (rays, lines) = cone_generators(k.dim, &normals(&k.ineqs), &normals(&k.eqs));
    let mut out = vec![zeros(k.dim)];
    out.extend(rays.iter().chain(&lines).cloned());
    let sum = rays.iter().fold(zeros(k.dim), |acc, r| add(&acc, r));
    out.push(lines.iter().fold(sum, |acc, l| add(&acc, &scale(l, &rat(2)))));
    out
}

fn criterion_4() -> Check {
    let (mut pairs, mut identities) = (0, 0);
    for (k, g) in graph_points().enumerate() {
        let t = &g.theta;
        let m = t.m;
        let act = t.active(&g.z).map_err(err)?;
        let q1: Vec<usize> = act.k.iter().cloned().collect();
        let q2: Vec<usize> = act.i.iter().cloned().collect();
        let pieces = t.pieces_at(&g.z, &g.v).map_err(err)?;
        for piece in &pieces {
            let p1: Vec<usize> = piece.p.iter().cloned().collect();
            let p2: Vec<usize> = piece.q.iter().cloned().collect();
            let (f, gc) = farkas_pair(t, &p1, &q1, &p2, &q2);
            let polar_g = convert_rep_v(&dual_cone_h(&gc).map_err(err)?).map_err(err)?;
            ensure(hpoly_equal(&polar_g, &convert_rep_v(&f).map_err(err)?), || format!("instance {k}: G* ≠ F"))?;
            ensure(hpoly_equal(&dual_cone(&f).map_err(err)?, &gc), || format!("instance {k}: F* ≠ G"))?;
            pairs += 1;
        }
        let kc = t.critical_cone(&g.z, &g.v).map_err(err)?.hrep;
        let dom = ConeUnion { dim: m, members: pieces.iter().map(|p| p.zset.tangent_cone_at(&g.z)).collect() };
        ensure(dom.equals_cone(&kc), || format!("instance {k}: dom DΘ ≠ K"))?;
        let normal = t.regular_normal_cone(&g.z, &g.v).map_err(err)?;
        ensure(hpoly_equal(&project_out(&normal, &(0..m).collect()), &kc), || {
            format!("instance {k}: normal projection ≠ K")
        })?;
        let polar = convert_rep_v(&dual_cone_h(&kc).map_err(err)?).map_err(err)?;
        for u in cone_samples(&kc) {
            let mut closed = polar.clone();
            closed.eqs.push(Constraint::homogeneous(u.clone()));
            ensure(t.graph_tangent_oracle(&g.z, &g.v, &u).map_err(err)?.equals_cone(&closed), || {
                format!("instance {k}: derivative at {u:?} ≠ K* ∩ u⊥")
            })?;
            let neg: Vec<Rational> = u.iter().map(|x| -x).collect();
            let mut coder =
                t.regular_coderivative_oracle(&g.z, &g.v, &neg).map_err(err)?.ok_or("empty coderivative")?;
            coder.eqs.push(Constraint::homogeneous(u));
            ensure(hpoly_equal(&coder, &closed), || format!("instance {k}: coderivative slice differs"))?;
            identities += 1;
        }
        let swap = |c: &Constraint| {
            let mut n: Vec<Rational> = c.normal[m..].iter().map(|x| -x).collect();
            n.extend(c.normal[..m].iter().cloned());
            Constraint::new(n, c.rhs.clone())
        };
        let lim = t.limiting_normal_cone(&g.z, &g.v).map_err(err)?;
        let lifted: Vec<HPoly> = lim
            .members
            .iter()
            .map(|c| HPoly {
                dim: 2 * m,
                ineqs: c.ineqs.iter().map(swap).collect(),
                eqs: c.eqs.iter().map(swap).collect(),
            })
            .collect();
        for tc in t.graph_tangent_cones(&g.z, &g.v).map_err(err)? {
            ensure(cone_subset_of_union(&tc, &lifted), || format!("instance {k}: D∂θ ⊄ D*∂θ"))?;
        }
    }
    // δ of R₋ at (0, 0): D∂θ(0) = R₊ is strictly inside D*∂θ(0) = R
    let t = CpwlFunction::indicator_nonpositive(1);
    let o = rvec(&[0]);
    let tangent = t.graph_tangent_oracle(&o, &o, &o).map_err(err)?;
    let limiting = t.limiting_coderivative(&o, &o, &o).map_err(err)?;
    let minus = rvec(&[-1]);
    ensure(tangent.contains(&rvec(&[1])) && !tangent.contains(&minus), || "graphical derivative at 0 ≠ R₊".into())?;
    ensure(limiting.iter().any(|c| c.contains(&minus)), || "limiting coderivative misses −1".into())?;
    Ok(format!("{pairs} Farkas pairs, {identities} derivative identities; strict inclusion R₊ ⊊ R for δ of R₋ at 0"))
}

fn corpus_points() -> Vec<(String, VariationalSystem, Vec<Rational>, Vec<Rational>)> {
    let mut out = vec![];
    for (name, text) in BUILTIN {
        let problem = Problem::parse(text).expect("corpus parses");
        for pt in problem.points() {
            let lam = problem.system.multiplier_set(&pt.x).expect("corpus points are feasible");
            for (k, w) in lam.vertices.points.iter().enumerate() {
                out.push((format!("{name}/{}:vertex{k}", pt.name), problem.system.clone(), pt.x.clone(), w.clone()));
            }
            out.push((format!("{name}/{}", pt.name), problem.system.clone(), pt.x, pt.v));
        }
    }
    out
}

fn criterion_5() -> Check {
    let mut count = 0;
    let random = (0..50u64).map(|s| {
        let r = random_kkt(2000 + s, 3, 3, 3, 2);
        (format!("random {s}"), r.problem.system().expect("valid"), r.x, r.v)
    });
    for (label, vs, x, v) in corpus_points().into_iter().chain(random) {
        let a = classify_multiplier(&vs, &x, &v).map_err(err)?.status;
        let b = classify_multiplier_coderivative(&vs, &x, &v).map_err(err)?.status;
        ensure(a == b, || format!("{label}: {a:?} vs {b:?}"))?;
        count += 1;
    }
    Ok(format!("{count} points, zero disagreements"))
}

fn criterion_6() -> Check {
    let mut checked = 0;
    for (name, _) in BUILTIN {
        let report = cmd_analyze(name, None, true).map_err(err)?;
        for p in &report.points {
            for imp in &p.implications {
                ensure(imp.holds != Some(false), || format!("{name}/{}: {} violated", p.name, imp.name))?;
                checked += usize::from(imp.holds.is_some());
            }
        }
    }
    let cfg = ProbeConfig { samples_per_radius: 16, ..ProbeConfig::default() };
    let mut chains = 0;
    for (label, vs, x, v) in corpus_points() {
        let s = semi_isolated_summary(&vs, &x, &v, &cfg).map_err(err)?;
        ensure(s.chain_holds(), || format!("{label}: {}", s.line()))?;
        chains += 1;
    }
    Ok(format!("{checked} implication checks, {chains} calmness chains, zero violations"))
}

fn criterion_7() -> Check {
    let vs = quad3().system().map_err(err)?;
    let x = rvec(&[0, 0, 0]);
    let cfg = ProbeConfig::default();
    let r = calmness_probe(&vs, &x, &rvec(&[1, 0, 0]), &cfg).map_err(err)?;
    let ProbeVerdict::Bounded(l) = r.verdict else { return Err(format!("noncritical vertex: {:?}", r.verdict)) };
    let tail = &r.empirical_moduli[r.empirical_moduli.len() - 3..];
    let (lo, hi) = tail.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    ensure(hi <= 10.0 * lo, || format!("last three maxima {tail:?}"))?;
    let r = calmness_probe(&vs, &x, &rvec(&[3, 0, 2]), &ProbeConfig { path_witness: true, ..cfg }).map_err(err)?;
    ensure(r.verdict == ProbeVerdict::Diverging, || format!("critical vertex: {:?}", r.verdict))?;
    let path = r.path.ok_or("no witness path")?;
    let at = path.ts.iter().position(|&t| (t - 1e-4).abs() < 1e-12).ok_or("t = 1e-4 not sampled")?;
    ensure(path.ratios[..=at].iter().any(|&q| q > 1e3), || format!("path ratios {:?}", path.ratios))?;
    Ok(format!("(1,0,0) Bounded({l:.3}); (3,0,2) Diverging, ratio {:.3e} at t = 1e-4", path.ratios[at]))
}

fn criterion_8() -> Check {
    let cfg = BatchConfig::default();
    let b = run_batch(&onedim(), &rvec(&[0]), &rvec(&[1]), &cfg).map_err(err)?;
    ensure(b.superlinear == b.runs.len(), || format!("1-D: {} of {} superlinear", b.superlinear, b.runs.len()))?;
    let b = run_batch(&quad3(), &rvec(&[0, 0, 0]), &rvec(&[3, 0, 2]), &cfg).map_err(err)?;
    let median = b.median_linear_ratio.unwrap_or(0.0);
    ensure(b.fraction_linear() >= 0.6 && median >= 0.2, || {
        format!("quad3: {:.0}% linear, median ratio {median:.3}", 100.0 * b.fraction_linear())
    })?;
    Ok(format!("1-D 100% superlinear; quad3 {:.0}% linear, median ratio {median:.3}", 100.0 * b.fraction_linear()))
}

fn criterion_9() -> Check {
    let out = run(["varcrit", "corpus"]);
    ensure(out.code == 0, || format!("exit {}: {}", out.code, out.stderr))?;
    for needle in ["v1 + v2 - v3 = 1", "active encoding", "inactive encoding"] {
        ensure(out.stdout.contains(needle), || format!("report lacks {needle:?}"))?;
    }
    Ok("exit 0, correction notes present".into())
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("quad3 critical vertex", criterion_1, Duration::from_secs(1)),
        ("quad2 active encoding", criterion_2, Duration::from_secs(1)),
        ("critical cone formula vs oracle", criterion_3, Duration::from_secs(60)),
        ("duality and derivative identities", criterion_4, Duration::from_secs(60)),
        ("criticality route agreement", criterion_5, Duration::MAX),
        ("implication suites", criterion_6, Duration::MAX),
        ("calmness probe", criterion_7, Duration::from_secs(120)),
        ("Newton convergence rates", criterion_8, Duration::from_secs(120)),
        ("corpus golden run", criterion_9, Duration::MAX),
    ];
    let mut failed = 0;
    for (k, (name, check, limit)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let result = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let took = start.elapsed();
        let result = result.and_then(|d| if took > limit { Err(format!("{d}; over {limit:?}")) } else { Ok(d) });
        match result {
            Ok(detail) => println!("criterion {}: PASS {name} ({detail}) [{:.2}s]", k + 1, took.as_secs_f64()),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL {name} ({detail}) [{:.2}s]", k + 1, took.as_secs_f64());
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
