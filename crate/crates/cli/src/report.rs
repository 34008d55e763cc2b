//! Report records for the three commands, with a JSON machine form and a
//! plain-text rendering. Rationals are strings; non-finite floats are `null`.

use crate::schema::{hpoly_record, strings, HPolyRecord, Problem};
use crate::CliError;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use varcrit::convergence::{self, BatchConfig, BatchSummary, Rate, RateError};
use varcrit::criticality::{
    classify_multiplier, classify_multiplier_coderivative, sosc_check, CriticalityError, CriticalityVerdict, Status,
};
use varcrit::exact::Rational;
use varcrit::stability::{
    self, isolated_calmness_check, lipschitz_like_check, robust_isolated_calmness_check, CalmnessProbeReport,
    ProbeConfig, ProbeVerdict,
};
use varcrit::varsys::VarsysError;

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL: &str = "varcrit";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

fn finite_all(xs: &[f64]) -> Vec<Option<f64>> {
    xs.iter().map(|&x| finite(x)).collect()
}

fn opt_strings(xs: &Option<Vec<Rational>>) -> Option<Vec<String>> {
    xs.as_ref().map(|x| strings(x))
}

fn matrix_strings(m: &[Vec<Rational>]) -> Vec<Vec<String>> {
    m.iter().map(|r| strings(r)).collect()
}

fn sci(x: Option<f64>) -> String {
    x.map_or("inf".to_string(), |x| format!("{x:.3e}"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub newton_residual: f64,
    pub newton_accept: f64,
    pub newton_max_iter: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            newton_residual: stability::RESIDUAL_TOL,
            newton_accept: stability::ACCEPT_TOL,
            newton_max_iter: stability::MAX_ITER,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub schema_version: u32,
    pub tool: String,
    pub version: String,
    pub problem: String,
    pub tolerances: Tolerances,
    /// RNG seeds used; empty for purely exact reports.
    pub seeds: Vec<u64>,
}

impl Metadata {
    pub fn new(problem: &Problem, seeds: Vec<u64>) -> Self {
        Metadata {
            schema_version: SCHEMA_VERSION,
            tool: TOOL.to_string(),
            version: VERSION.to_string(),
            problem: problem.file.name.clone(),
            tolerances: Tolerances::default(),
            seeds,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Feasibility {
    pub in_domain: bool,
    pub subgradient: bool,
    pub stationary: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiplierSetRecord {
    pub hrep: HPolyRecord,
    pub vertices: Vec<Vec<String>>,
    pub rays: Vec<Vec<String>>,
    pub lines: Vec<Vec<String>>,
    pub singleton: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecompositionRecord {
    pub v1: Vec<String>,
    pub v2: Vec<String>,
    pub lambda: Vec<String>,
    pub mu: Vec<String>,
    pub j1: Vec<usize>,
    pub j2: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessRecord {
    pub xi: Vec<String>,
    pub eta: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FacePairRecord {
    pub face: Vec<usize>,
    pub conjugate_rays: Vec<Vec<String>>,
    pub conjugate_lines: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriticalityRecord {
    pub status: String,
    pub witness: Option<WitnessRecord>,
    pub face_pair: Option<FacePairRecord>,
    /// Faces of the critical cone on which only `ξ = 0` solves the system.
    pub certified_faces: Vec<Vec<usize>>,
    /// Verdict of the independent coderivative route.
    pub coderivative_status: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SoscRecord {
    pub holds: bool,
    pub violating_direction: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NondegeneracyRecord {
    pub holds: bool,
    /// Basis of `aff ∂θ(z̄) ∩ ker ∇Φ(x̄)*` directions; empty iff nondegenerate.
    pub intersection_basis: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RobustCalmnessRecord {
    pub holds: bool,
    pub failed: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImplicationRecord {
    pub name: String,
    /// `None` when an ingredient is unavailable, e.g. without `phi0`.
    pub holds: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointReport {
    pub name: String,
    pub x: Vec<String>,
    pub v: Vec<String>,
    pub z: Vec<String>,
    pub feasibility: Feasibility,
    pub multiplier_set: MultiplierSetRecord,
    pub decomposition: DecompositionRecord,
    pub critical_cone: HPolyRecord,
    pub hessian: Vec<Vec<String>>,
    pub criticality: CriticalityRecord,
    pub sosc: SoscRecord,
    pub nondegeneracy: NondegeneracyRecord,
    pub rcq: bool,
    pub isolated_calmness: bool,
    pub robust_isolated_calmness: Option<RobustCalmnessRecord>,
    pub lipschitz_like: Option<bool>,
    pub implications: Vec<ImplicationRecord>,
    pub chain: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub metadata: Metadata,
    pub notes: Vec<String>,
    pub points: Vec<PointReport>,
}

fn status_name(s: Status) -> String {
    match s {
        Status::Critical => "critical",
        Status::Noncritical => "noncritical",
    }
    .to_string()
}

fn criticality_record(v: &CriticalityVerdict, cod: Status) -> CriticalityRecord {
    CriticalityRecord {
        status: status_name(v.status),
        witness: v.witness.as_ref().map(|w| WitnessRecord { xi: strings(&w.xi), eta: strings(&w.eta) }),
        face_pair: v.face_pair.as_ref().map(|f| FacePairRecord {
            face: f.face.iter().cloned().collect(),
            conjugate_rays: matrix_strings(&f.conjugate_rays),
            conjugate_lines: matrix_strings(&f.conjugate_lines),
        }),
        certified_faces: v.certified_faces.iter().map(|f| f.iter().cloned().collect()).collect(),
        coderivative_status: status_name(cod),
    }
}

/// Maps point-level failures onto the CLI's error classes.
pub fn point_error(point: &str, e: VarsysError) -> CliError {
    match e {
        VarsysError::Domain => CliError::Infeasible(format!("point {point}: Φ(x) is outside dom θ")),
        VarsysError::Membership => CliError::Membership(format!("point {point}: v is not in ∂θ(Φ(x))")),
        VarsysError::NotStationary => CliError::Membership(format!("point {point}: Ψ(x,v) ≠ 0")),
        other => CliError::Usage(format!("point {point}: {other}")),
    }
}

fn crit_error(point: &str, e: CriticalityError) -> CliError {
    match e {
        CriticalityError::Membership(e) => point_error(point, e),
    }
}

fn implications(r: &PointReport) -> Vec<ImplicationRecord> {
    let noncritical = r.criticality.status == "noncritical";
    let singleton = r.multiplier_set.singleton;
    let imp = |name: &str, holds: Option<bool>| ImplicationRecord { name: name.to_string(), holds };
    let lip = r.lipschitz_like;
    let mut out = vec![
        imp("sosc => noncritical", Some(!r.sosc.holds || noncritical)),
        imp("isolated calmness => noncritical", Some(!r.isolated_calmness || noncritical)),
        imp("multiplier singleton => rcq", Some(!singleton || r.rcq)),
        imp("nondegenerate => multiplier singleton", Some(!r.nondegeneracy.holds || singleton)),
        imp(
            "lipschitz-like => nondegenerate and noncritical",
            lip.map(|l| !l || (r.nondegeneracy.holds && noncritical)),
        ),
        imp("lipschitz-like => unique noncritical multiplier", lip.map(|l| !l || (singleton && noncritical))),
        imp(
            "face-pair and coderivative verdicts agree",
            Some(r.criticality.status == r.criticality.coderivative_status),
        ),
    ];
    // with SOSC certifying local optimality the robust-calmness clauses coincide
    if let Some(robust) = &r.robust_isolated_calmness {
        if r.sosc.holds {
            let iii = singleton && noncritical;
            out.push(imp(
                "under sosc: robust calmness <=> unique noncritical multiplier <=> isolated calmness",
                Some(robust.holds == iii && iii == r.isolated_calmness),
            ));
        }
    }
    out
}

fn chain_line(r: &PointReport) -> String {
    let opt = |b: Option<bool>| b.map_or("n/a".to_string(), |b| b.to_string());
    let ok = r.implications.iter().filter(|i| i.holds == Some(true)).count();
    let bad = r.implications.iter().filter(|i| i.holds == Some(false)).count();
    format!(
        "sosc={} isolated_calmness={} {} nondegenerate={} singleton={} rcq={} lipschitz_like={}: {ok} implications hold, {bad} violated",
        r.sosc.holds,
        r.isolated_calmness,
        r.criticality.status,
        r.nondegeneracy.holds,
        r.multiplier_set.singleton,
        r.rcq,
        opt(r.lipschitz_like),
    )
}

pub fn analyze_point(problem: &Problem, name: &str, x: &[Rational], v: &[Rational]) -> Result<PointReport, CliError> {
    let vs = &problem.system;
    let p = vs.certified_point(x, v).map_err(|e| point_error(name, e))?;
    let e = |e: VarsysError| point_error(name, e);
    let lam = vs.multiplier_set(x).map_err(e)?;
    let dec = vs.theta.decompose_subgradient(&p.z, v).map_err(|c| e(c.into()))?;
    let cone = vs.theta.critical_cone_with(&p.z, dec.clone()).map_err(|c| e(c.into()))?;
    let hessian = vs.psi_jacobian_x(x, v).map_err(e)?;
    let ce = |c: CriticalityError| crit_error(name, c);
    let crit = classify_multiplier(vs, x, v).map_err(ce)?;
    let cod = classify_multiplier_coderivative(vs, x, v).map_err(ce)?;
    let sosc = sosc_check(vs, x, v).map_err(ce)?;
    let (nondeg, basis) = vs.nondegeneracy_check(x).map_err(e)?;
    let rcq = vs.rcq_check(x).map_err(e)?;
    let iso = isolated_calmness_check(vs, x, v).map_err(ce)?;
    let (robust, lip) = match &problem.composite {
        Some(cp) => {
            let r = robust_isolated_calmness_check(cp, x, v).map_err(ce)?;
            let robust =
                RobustCalmnessRecord { holds: r.holds, failed: r.failed().iter().map(|s| s.to_string()).collect() };
            (Some(robust), Some(lipschitz_like_check(cp, x, v).map_err(ce)?))
        }
        None => (None, None),
    };
    let mut report = PointReport {
        name: name.to_string(),
        x: strings(x),
        v: strings(v),
        z: strings(&p.z),
        feasibility: Feasibility { in_domain: p.in_domain, subgradient: p.subgradient, stationary: p.stationary },
        multiplier_set: MultiplierSetRecord {
            hrep: hpoly_record(&lam.hpoly),
            vertices: matrix_strings(&lam.vertices.points),
            rays: matrix_strings(&lam.vertices.rays),
            lines: matrix_strings(&lam.vertices.lines),
            singleton: lam.is_singleton(),
        },
        decomposition: DecompositionRecord {
            v1: strings(&dec.v1),
            v2: strings(&dec.v2),
            lambda: strings(&dec.lambda),
            mu: strings(&dec.mu),
            j1: dec.j1.iter().cloned().collect(),
            j2: dec.j2.iter().cloned().collect(),
        },
        critical_cone: hpoly_record(&cone.hrep),
        hessian: matrix_strings(&hessian),
        criticality: criticality_record(&crit, cod.status),
        sosc: SoscRecord { holds: sosc.holds, violating_direction: opt_strings(&sosc.violating_direction) },
        nondegeneracy: NondegeneracyRecord { holds: nondeg, intersection_basis: matrix_strings(&basis) },
        rcq,
        isolated_calmness: iso,
        robust_isolated_calmness: robust,
        lipschitz_like: lip,
        implications: vec![],
        chain: String::new(),
    };
    report.implications = implications(&report);
    report.chain = chain_line(&report);
    Ok(report)
}

fn join(xs: &[String]) -> String {
    format!("({})", xs.join(", "))
}

fn hpoly_text(h: &HPolyRecord, out: &mut String, indent: &str) {
    if h.ineqs.is_empty() && h.eqs.is_empty() {
        let _ = writeln!(out, "{indent}whole space");
    }
    for c in &h.eqs {
        let _ = writeln!(out, "{indent}{} · y = {}", join(&c.normal), c.rhs);
    }
    for c in &h.ineqs {
        let _ = writeln!(out, "{indent}{} · y <= {}", join(&c.normal), c.rhs);
    }
}

impl PointReport {
    pub fn render(&self, out: &mut String) {
        let _ =
            writeln!(out, "point {}: x = {}, v = {}, z = {}", self.name, join(&self.x), join(&self.v), join(&self.z));
        let _ = writeln!(out, "  multiplier set (singleton = {}):", self.multiplier_set.singleton);
        hpoly_text(&self.multiplier_set.hrep, out, "    ");
        let verts: Vec<String> = self.multiplier_set.vertices.iter().map(|v| join(v)).collect();
        let _ = writeln!(out, "    vertices: {}", verts.join(" "));
        for (label, gens) in [("rays", &self.multiplier_set.rays), ("lines", &self.multiplier_set.lines)] {
            if !gens.is_empty() {
                let g: Vec<String> = gens.iter().map(|v| join(v)).collect();
                let _ = writeln!(out, "    {label}: {}", g.join(" "));
            }
        }
        let d = &self.decomposition;
        let _ = writeln!(
            out,
            "  decomposition: v1 = {}, v2 = {}, lambda = {}, mu = {}",
            join(&d.v1),
            join(&d.v2),
            join(&d.lambda),
            join(&d.mu)
        );
        let _ = writeln!(out, "  critical cone:");
        hpoly_text(&self.critical_cone, out, "    ");
        let rows: Vec<String> = self.hessian.iter().map(|r| join(r)).collect();
        let _ = writeln!(out, "  hessian: [{}]", rows.join(", "));
        let c = &self.criticality;
        let _ = write!(out, "  criticality: {} (coderivative route: {})", c.status, c.coderivative_status);
        match &c.witness {
            Some(w) => {
                let _ = writeln!(out, ", witness xi = {}, eta = {}", join(&w.xi), join(&w.eta));
            }
            None => {
                let _ = writeln!(out, ", {} faces certified", c.certified_faces.len());
            }
        }
        let _ = write!(out, "  sosc: {}", self.sosc.holds);
        if let Some(u) = &self.sosc.violating_direction {
            let _ = write!(out, ", violating direction {}", join(u));
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "  nondegenerate: {}, rcq: {}", self.nondegeneracy.holds, self.rcq);
        let _ = write!(out, "  isolated calmness: {}", self.isolated_calmness);
        if let Some(r) = &self.robust_isolated_calmness {
            let _ = write!(out, ", robust isolated calmness: {}", r.holds);
            if !r.failed.is_empty() {
                let _ = write!(out, " (fails: {})", r.failed.join(", "));
            }
        }
        if let Some(l) = self.lipschitz_like {
            let _ = write!(out, ", lipschitz-like: {l}");
        }
        let _ = writeln!(out);
        for i in self.implications.iter().filter(|i| i.holds == Some(false)) {
            let _ = writeln!(out, "  VIOLATED: {}", i.name);
        }
        let _ = writeln!(out, "  chain: {}", self.chain);
    }
}

fn render_header(m: &Metadata, notes: &[String], out: &mut String) {
    let _ = writeln!(out, "{} {} (schema {}) problem {}", m.tool, m.version, m.schema_version, m.problem);
    for n in notes {
        let _ = writeln!(out, "note: {n}");
    }
}

impl AnalysisReport {
    pub fn render(&self) -> String {
        let mut out = String::new();
        render_header(&self.metadata, &self.notes, &mut out);
        for p in &self.points {
            p.render(&mut out);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictRecord {
    /// `bounded`, `diverging` or `inconclusive`.
    pub kind: String,
    pub modulus: Option<f64>,
}

impl From<ProbeVerdict> for VerdictRecord {
    fn from(v: ProbeVerdict) -> Self {
        match v {
            ProbeVerdict::Bounded(l) => VerdictRecord { kind: "bounded".into(), modulus: finite(l) },
            ProbeVerdict::Diverging => VerdictRecord { kind: "diverging".into(), modulus: None },
            ProbeVerdict::Inconclusive => VerdictRecord { kind: "inconclusive".into(), modulus: None },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeSettings {
    pub radii: Vec<f64>,
    pub samples_per_radius: usize,
    pub neighborhood: f64,
    pub path_witness: bool,
    pub path_exponents: Vec<u32>,
    pub divergence_bound: f64,
    pub stabilization_factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub ts: Vec<f64>,
    pub ratios: Vec<Option<f64>>,
    pub solver_ratios: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbReport {
    pub metadata: Metadata,
    pub notes: Vec<String>,
    pub point: String,
    pub settings: ProbeSettings,
    pub empirical_moduli: Vec<Option<f64>>,
    pub error_bound_moduli: Vec<Option<f64>>,
    pub skipped_samples: Vec<usize>,
    pub path: Option<PathRecord>,
    pub verdict: VerdictRecord,
}

impl PerturbReport {
    pub fn new(problem: &Problem, point: &str, cfg: &ProbeConfig, r: &CalmnessProbeReport) -> Self {
        PerturbReport {
            metadata: Metadata::new(problem, vec![r.rng_seed]),
            notes: problem.file.notes.clone(),
            point: point.to_string(),
            settings: ProbeSettings {
                radii: r.radii.clone(),
                samples_per_radius: cfg.samples_per_radius,
                neighborhood: cfg.neighborhood,
                path_witness: cfg.path_witness,
                path_exponents: cfg.path_exponents.clone(),
                divergence_bound: stability::DIVERGENCE_BOUND,
                stabilization_factor: stability::STABILIZATION_FACTOR,
            },
            empirical_moduli: finite_all(&r.empirical_moduli),
            error_bound_moduli: finite_all(&r.error_bound_moduli),
            skipped_samples: r.skipped_samples.clone(),
            path: r.path.as_ref().map(|p| PathRecord {
                ts: p.ts.clone(),
                ratios: finite_all(&p.ratios),
                solver_ratios: p.solver_ratios.iter().map(|r| r.and_then(finite)).collect(),
            }),
            verdict: r.verdict.into(),
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        render_header(&self.metadata, &self.notes, &mut out);
        let _ = writeln!(
            out,
            "calmness probe at {}: {} samples per radius, seed {}",
            self.point, self.settings.samples_per_radius, self.metadata.seeds[0]
        );
        let _ = writeln!(out, "  radius      modulus     error-bound  skipped");
        for (i, r) in self.settings.radii.iter().enumerate() {
            let _ = writeln!(
                out,
                "  {:<10.1e}  {:<10}  {:<11}  {}",
                r,
                sci(self.empirical_moduli[i]),
                sci(self.error_bound_moduli[i]),
                self.skipped_samples[i]
            );
        }
        if let Some(p) = &self.path {
            let _ = writeln!(out, "  witness path:");
            for (i, t) in p.ts.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "    t = {:<8.1e} ratio {}  solver {}",
                    t,
                    sci(p.ratios[i]),
                    p.solver_ratios[i].map_or("none".to_string(), |r| format!("{r:.3e}"))
                );
            }
        }
        let _ = match self.verdict.modulus {
            Some(l) => writeln!(out, "  verdict: {} (modulus {l:.3})", self.verdict.kind),
            None => writeln!(out, "  verdict: {}", self.verdict.kind),
        };
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRecord {
    /// `superlinear`, `linear`, `stalled` or `too_short`.
    pub kind: String,
    pub ratio: Option<f64>,
}

impl From<&Result<Rate, RateError>> for RateRecord {
    fn from(r: &Result<Rate, RateError>) -> Self {
        match r {
            Ok(Rate::Superlinear) => RateRecord { kind: "superlinear".into(), ratio: None },
            Ok(Rate::Linear(q)) => RateRecord { kind: "linear".into(), ratio: finite(*q) },
            Ok(Rate::Stalled) => RateRecord { kind: "stalled".into(), ratio: None },
            Err(RateError::TooShort(_)) => RateRecord { kind: "too_short".into(), ratio: None },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub start_x: Vec<f64>,
    pub start_v: Vec<f64>,
    pub rate: RateRecord,
    pub iterations: usize,
    pub final_distance: Option<f64>,
    pub dual_tail_min_ratio: Option<f64>,
    pub diagnostic: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateThresholds {
    pub converged_fraction: f64,
    pub tail_window: usize,
    pub superlinear_ratio: f64,
    pub stall_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergeSettings {
    pub starts: usize,
    pub ball: f64,
    pub max_iter: usize,
    pub tol: f64,
    pub thresholds: RateThresholds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergeReport {
    pub metadata: Metadata,
    pub notes: Vec<String>,
    pub point: String,
    pub settings: ConvergeSettings,
    pub runs: Vec<RunRecord>,
    pub superlinear: usize,
    pub linear: usize,
    pub stalled: usize,
    pub unclassified: usize,
    pub median_linear_ratio: Option<f64>,
}

impl ConvergeReport {
    pub fn new(problem: &Problem, point: &str, cfg: &BatchConfig, b: &BatchSummary) -> Self {
        ConvergeReport {
            metadata: Metadata::new(problem, vec![cfg.rng_seed]),
            notes: problem.file.notes.clone(),
            point: point.to_string(),
            settings: ConvergeSettings {
                starts: cfg.starts,
                ball: cfg.ball,
                max_iter: cfg.max_iter,
                tol: cfg.tol,
                thresholds: RateThresholds {
                    converged_fraction: convergence::CONVERGED_FRACTION,
                    tail_window: convergence::TAIL_WINDOW,
                    superlinear_ratio: convergence::SUPERLINEAR_RATIO,
                    stall_ratio: convergence::STALL_RATIO,
                },
            },
            runs: b
                .runs
                .iter()
                .map(|r| RunRecord {
                    start_x: r.start.0.clone(),
                    start_v: r.start.1.clone(),
                    rate: (&r.rate).into(),
                    iterations: r.iterations,
                    final_distance: finite(r.final_distance),
                    dual_tail_min_ratio: r.dual_tail_min_ratio.and_then(finite),
                    diagnostic: r.diagnostic.clone(),
                })
                .collect(),
            superlinear: b.superlinear,
            linear: b.linear,
            stalled: b.stalled,
            unclassified: b.unclassified,
            median_linear_ratio: b.median_linear_ratio.and_then(finite),
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        render_header(&self.metadata, &self.notes, &mut out);
        let n = self.runs.len().max(1) as f64;
        let _ = writeln!(
            out,
            "newton runs near {}: {} starts in a {} ball, seed {}",
            self.point, self.settings.starts, self.settings.ball, self.metadata.seeds[0]
        );
        for (k, r) in self.runs.iter().enumerate() {
            let _ = write!(
                out,
                "  run {k:>3}: {:<11} {:>3} iterations, final distance {}",
                r.rate.kind,
                r.iterations,
                sci(r.final_distance)
            );
            if let Some(q) = r.rate.ratio {
                let _ = write!(out, ", tail ratio {q:.3}");
            }
            if let Some(d) = &r.diagnostic {
                let _ = write!(out, " [{d}]");
            }
            let _ = writeln!(out);
        }
        let _ = writeln!(
            out,
            "  superlinear {} ({:.0}%), linear {} ({:.0}%), stalled {}, unclassified {}",
            self.superlinear,
            100.0 * self.superlinear as f64 / n,
            self.linear,
            100.0 * self.linear as f64 / n,
            self.stalled,
            self.unclassified
        );
        if let Some(q) = self.median_linear_ratio {
            let _ = writeln!(out, "  median linear tail ratio {q:.3}");
        }
        out
    }
}
