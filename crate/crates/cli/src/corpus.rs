//! The built-in problem corpus and golden comparison.

use crate::report::{analyze_point, PointReport};
use crate::schema::{hpoly, rationals, PointExpectation, Problem};
use crate::CliError;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;
use varcrit::criticality::{verify_witness, Witness};
use varcrit::exact::{dd::hpoly_equal, rat, Rational};

pub const BUILTIN: &[(&str, &str)] = &[
    ("square_zero_indicator", include_str!("../corpus/square_zero_indicator.json")),
    ("two_piece_max", include_str!("../corpus/two_piece_max.json")),
    ("coordinate_max", include_str!("../corpus/coordinate_max.json")),
    ("orthant_kkt", include_str!("../corpus/orthant_kkt.json")),
    ("izmailov", include_str!("../corpus/izmailov.json")),
    ("quad3", include_str!("../corpus/quad3.json")),
    ("quad2_active", include_str!("../corpus/quad2_active.json")),
    ("quad2_inactive", include_str!("../corpus/quad2_inactive.json")),
    ("onedim", include_str!("../corpus/onedim.json")),
];

pub fn builtin(name: &str) -> Option<&'static str> {
    BUILTIN.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

/// `(label, text)` pairs: the built-in corpus, or every `*.json` in `dir`
/// sorted by file name.
pub fn sources(dir: Option<&Path>) -> Result<Vec<(String, String)>, CliError> {
    let Some(dir) = dir else {
        return Ok(BUILTIN.iter().map(|(n, t)| (n.to_string(), t.to_string())).collect());
    };
    let io = |e: std::io::Error| CliError::Usage(format!("cannot read {}: {e}", dir.display()));
    let mut paths: Vec<_> =
        std::fs::read_dir(dir).map_err(io)?.map(|e| e.map(|e| e.path())).collect::<Result<_, _>>().map_err(io)?;
    paths.retain(|p| p.extension().is_some_and(|e| e == "json"));
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let text = std::fs::read_to_string(&p).map_err(io)?;
            Ok((p.display().to_string(), text))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mismatch {
    pub point: Option<String>,
    pub field: String,
    pub expected: String,
    pub found: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemOutcome {
    pub name: String,
    pub notes: Vec<String>,
    pub points: Vec<PointReport>,
    pub checked: usize,
    pub mismatches: Vec<Mismatch>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusReport {
    pub schema_version: u32,
    pub tool: String,
    pub version: String,
    pub problems: Vec<ProblemOutcome>,
}

impl CorpusReport {
    pub fn drift(&self) -> usize {
        self.problems.iter().map(|p| p.mismatches.len()).sum()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {} (schema {}) corpus run", self.tool, self.version, self.schema_version);
        for p in &self.problems {
            let _ = writeln!(out, "== {} ==", p.name);
            for n in &p.notes {
                let _ = writeln!(out, "note: {n}");
            }
            for r in &p.points {
                let _ = writeln!(out, "  {}: {}", r.name, r.chain);
            }
            for m in &p.mismatches {
                let at = m.point.as_deref().map_or(String::new(), |s| format!("/{s}"));
                let _ = writeln!(out, "  DRIFT {}{at} {}: expected {}, found {}", p.name, m.field, m.expected, m.found);
            }
            let _ = writeln!(out, "  {} golden values checked, {} mismatches", p.checked, p.mismatches.len());
        }
        let points: usize = self.problems.iter().map(|p| p.points.len()).sum();
        let checked: usize = self.problems.iter().map(|p| p.checked).sum();
        let _ = writeln!(
            out,
            "corpus: {} problems, {points} points, {checked} golden values checked, {} mismatches",
            self.problems.len(),
            self.drift()
        );
        out
    }
}

struct Checker<'a> {
    point: Option<&'a str>,
    checked: usize,
    mismatches: Vec<Mismatch>,
}

impl Checker<'_> {
    fn check(&mut self, field: &str, expected: String, found: String, ok: bool) {
        self.checked += 1;
        if !ok {
            self.mismatches.push(Mismatch {
                point: self.point.map(str::to_string),
                field: field.to_string(),
                expected,
                found,
            });
        }
    }

    fn eq<T: PartialEq + std::fmt::Debug>(&mut self, field: &str, expected: &Option<T>, found: &T) {
        if let Some(e) = expected {
            self.check(field, format!("{e:?}"), format!("{found:?}"), e == found);
        }
    }
}

/// `a = s·b` for some rational `s > 0`.
fn positive_multiple(a: &[Rational], b: &[Rational]) -> bool {
    let zero = rat(0);
    if a.len() != b.len() {
        return false;
    }
    let Some(k) = b.iter().position(|x| *x != zero) else {
        return a.iter().all(|x| *x == zero);
    };
    let s = &a[k] / &b[k];
    s > zero && a.iter().zip(b).all(|(x, y)| *x == &s * y)
}

fn parse_or_drift(c: &mut Checker, field: &str, xs: &[String]) -> Option<Vec<Rational>> {
    match rationals(xs) {
        Ok(v) => Some(v),
        Err(e) => {
            c.check(field, "parseable golden".into(), e.to_string(), false);
            None
        }
    }
}

fn direction(c: &mut Checker, field: &str, expected: &Option<Vec<String>>, found: &Option<Vec<String>>) {
    let Some(exp) = expected else { return };
    let Some(e) = parse_or_drift(c, field, exp) else { return };
    let f = found.as_ref().map(|f| rationals(f).expect("reports hold valid rationals"));
    let ok = f.as_ref().is_some_and(|f| positive_multiple(f, &e));
    c.check(field, format!("positive multiple of {exp:?}"), format!("{found:?}"), ok);
}

fn check_point(problem: &Problem, r: &PointReport, exp: &PointExpectation, c: &mut Checker) {
    c.eq("criticality", &exp.criticality, &r.criticality.status);
    c.eq("sosc", &exp.sosc, &r.sosc.holds);
    c.eq("nondegenerate", &exp.nondegenerate, &r.nondegeneracy.holds);
    c.eq("rcq", &exp.rcq, &r.rcq);
    c.eq("isolated_calmness", &exp.isolated_calmness, &r.isolated_calmness);
    c.eq("multiplier_singleton", &exp.multiplier_singleton, &r.multiplier_set.singleton);
    if exp.robust_isolated_calmness.is_some() {
        let found = r.robust_isolated_calmness.as_ref().map(|x| x.holds);
        c.eq("robust_isolated_calmness", &exp.robust_isolated_calmness.map(Some), &found);
    }
    if exp.lipschitz_like.is_some() {
        c.eq("lipschitz_like", &exp.lipschitz_like.map(Some), &r.lipschitz_like);
    }
    if let Some(h) = &exp.hessian {
        let parsed: Option<Vec<Vec<Rational>>> = h.iter().map(|row| parse_or_drift(c, "hessian", row)).collect();
        if let Some(h) = parsed {
            let found: Vec<Vec<Rational>> = r.hessian.iter().map(|row| rationals(row).unwrap()).collect();
            c.check("hessian", format!("{:?}", exp.hessian.as_ref().unwrap()), format!("{:?}", r.hessian), h == found);
        }
    }
    let witness = r.criticality.witness.as_ref().map(|w| w.xi.clone());
    direction(c, "witness_xi", &exp.witness_xi, &witness);
    direction(c, "sosc_direction", &exp.sosc_direction, &r.sosc.violating_direction);
    // every reported witness must solve the linearized system exactly
    if let Some(w) = &r.criticality.witness {
        let x = rationals(&r.x).unwrap();
        let v = rationals(&r.v).unwrap();
        let w = Witness { xi: rationals(&w.xi).unwrap(), eta: rationals(&w.eta).unwrap() };
        let ok = verify_witness(&problem.system, &x, &v, &w).unwrap_or(false);
        c.check("witness verification", "exact".into(), if ok { "exact" } else { "fails" }.into(), ok);
    }
    for i in &r.implications {
        if i.holds.is_some() {
            c.check(&format!("implication {}", i.name), "holds".into(), "violated".into(), i.holds == Some(true));
        }
    }
}

/// Analyzes every point of `problem` and compares against its goldens.
pub fn run_problem(problem: &Problem) -> Result<ProblemOutcome, CliError> {
    let mut points = Vec::new();
    for p in problem.points() {
        points.push(analyze_point(problem, &p.name, &p.x, &p.v)?);
    }
    let mut c = Checker { point: None, checked: 0, mismatches: vec![] };
    let exp = problem.file.expect.clone().unwrap_or_default();
    if let (Some(lam), Some(first)) = (&exp.multiplier_set, problem.points().first()) {
        let expected = hpoly(lam, problem.system.m).map_err(CliError::from)?;
        let found = problem.system.multiplier_set(&first.x).map_err(|e| crate::report::point_error(&first.name, e))?;
        let ok = hpoly_equal(&expected, &found.hpoly);
        c.check("multiplier_set", format!("{lam:?}"), format!("{:?}", crate::schema::hpoly_record(&found.hpoly)), ok);
    }
    for r in &points {
        c.point = Some(&r.name);
        let e = exp.points.get(&r.name).cloned().unwrap_or_default();
        check_point(problem, r, &e, &mut c);
    }
    let (checked, mismatches) = (c.checked, c.mismatches);
    Ok(ProblemOutcome {
        name: problem.file.name.clone(),
        notes: problem.file.notes.clone(),
        points,
        checked,
        mismatches,
    })
}

pub fn run_corpus(dir: Option<&Path>) -> Result<CorpusReport, CliError> {
    let mut problems = Vec::new();
    for (label, text) in sources(dir)? {
        let problem = Problem::parse(&text).map_err(|e| CliError::Usage(format!("{label}: {e}")))?;
        problems.push(run_problem(&problem)?);
    }
    Ok(CorpusReport {
        schema_version: crate::report::SCHEMA_VERSION,
        tool: crate::report::TOOL.to_string(),
        version: crate::report::VERSION.to_string(),
        problems,
    })
}
