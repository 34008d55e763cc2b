//! JSON problem files. Rationals are strings `"p"` or `"p/q"`; polynomials
//! are lists of `{coeff, exponents}` terms.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use varcrit::cpwl::{AffinePiece, CpwlFunction, HalfSpace};
use varcrit::exact::{fmt_rational, parse_rational, Constraint, HPoly, Rational};
use varcrit::smooth::{PolyExpr, PolyMap};
use varcrit::varsys::{CompositeProblem, VariationalSystem};

#[derive(Debug, thiserror::Error)]
pub enum SchemaError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed problem file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid rational {0:?}")]
    Rational(String),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Term {
    pub coeff: String,
    pub exponents: Vec<u32>,
}

pub type PolyRecord = Vec<Term>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PieceRecord {
    pub a: Vec<String>,
    pub alpha: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HalfSpaceRecord {
    pub d: Vec<String>,
    pub beta: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThetaRecord {
    pub pieces: Vec<PieceRecord>,
    #[serde(default)]
    pub domain: Vec<HalfSpaceRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointRecord {
    pub name: String,
    pub x: Vec<String>,
    pub v: Vec<String>,
}

/// `normal · y ≤ rhs` (or `=`), in exact strings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintRecord {
    pub normal: Vec<String>,
    pub rhs: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct HPolyRecord {
    #[serde(default)]
    pub ineqs: Vec<ConstraintRecord>,
    #[serde(default)]
    pub eqs: Vec<ConstraintRecord>,
}

/// Golden values for one point; absent fields are not compared.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointExpectation {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub criticality: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sosc: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nondegenerate: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rcq: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub isolated_calmness: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub robust_isolated_calmness: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lipschitz_like: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub multiplier_singleton: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hessian: Option<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness_xi: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sosc_direction: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectations {
    /// Multiplier set at the points' common `x̄`, compared as sets.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub multiplier_set: Option<HPolyRecord>,
    #[serde(default)]
    pub points: BTreeMap<String, PointExpectation>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    /// Remarks carried into every report, such as deviations from a source.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    pub n: usize,
    pub m: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi0: Option<PolyRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<Vec<PolyRecord>>,
    #[serde(rename = "Phi")]
    pub phi: Vec<PolyRecord>,
    pub theta: ThetaRecord,
    pub points: Vec<PointRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<Expectations>,
}

/// A validated problem: a variational system, and the composite problem
/// behind it when `phi0` was given.
#[derive(Debug, Clone)]
pub struct Problem {
    pub file: ProblemFile,
    pub system: VariationalSystem,
    pub composite: Option<CompositeProblem>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub name: String,
    pub x: Vec<Rational>,
    pub v: Vec<Rational>,
}

pub fn rational(s: &str) -> Result<Rational, SchemaError> {
    parse_rational(s).map_err(|_| SchemaError::Rational(s.to_string()))
}

pub fn rationals(xs: &[String]) -> Result<Vec<Rational>, SchemaError> {
    xs.iter().map(|s| rational(s)).collect()
}

pub fn strings(xs: &[Rational]) -> Vec<String> {
    xs.iter().map(fmt_rational).collect()
}

fn check_len(what: &str, got: usize, want: usize) -> Result<(), SchemaError> {
    if got != want {
        return Err(SchemaError::Invalid(format!("{what} has length {got}, expected {want}")));
    }
    Ok(())
}

fn poly(rec: &PolyRecord, n: usize, what: &str) -> Result<PolyExpr, SchemaError> {
    let mut terms = Vec::with_capacity(rec.len());
    for t in rec {
        check_len(&format!("exponents in {what}"), t.exponents.len(), n)?;
        terms.push((rational(&t.coeff)?, t.exponents.clone()));
    }
    PolyExpr::from_terms(n, terms).map_err(|e| SchemaError::Invalid(e.to_string()))
}

pub fn hpoly(rec: &HPolyRecord, dim: usize) -> Result<HPoly, SchemaError> {
    let conv = |c: &ConstraintRecord| -> Result<Constraint, SchemaError> {
        check_len("constraint normal", c.normal.len(), dim)?;
        Ok(Constraint::new(rationals(&c.normal)?, rational(&c.rhs)?))
    };
    Ok(HPoly {
        dim,
        ineqs: rec.ineqs.iter().map(conv).collect::<Result<_, _>>()?,
        eqs: rec.eqs.iter().map(conv).collect::<Result<_, _>>()?,
    })
}

pub fn hpoly_record(p: &HPoly) -> HPolyRecord {
    let conv = |c: &Constraint| ConstraintRecord { normal: strings(&c.normal), rhs: fmt_rational(&c.rhs) };
    HPolyRecord { ineqs: p.ineqs.iter().map(conv).collect(), eqs: p.eqs.iter().map(conv).collect() }
}

impl ProblemFile {
    pub fn from_json(text: &str) -> Result<Self, SchemaError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn read(path: &std::path::Path) -> Result<Self, SchemaError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| SchemaError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }

    pub fn validate(self) -> Result<Problem, SchemaError> {
        let (n, m) = (self.n, self.m);
        check_len("Phi", self.phi.len(), m)?;
        let phi = PolyMap::new(
            n,
            self.phi.iter().enumerate().map(|(i, p)| poly(p, n, &format!("Phi[{i}]"))).collect::<Result<_, _>>()?,
        )
        .map_err(|e| SchemaError::Invalid(e.to_string()))?;
        let pieces = self
            .theta
            .pieces
            .iter()
            .map(|p| {
                check_len("piece slope", p.a.len(), m)?;
                Ok(AffinePiece { a: rationals(&p.a)?, alpha: rational(&p.alpha)? })
            })
            .collect::<Result<Vec<_>, SchemaError>>()?;
        let domain = self
            .theta
            .domain
            .iter()
            .map(|h| {
                check_len("domain normal", h.d.len(), m)?;
                Ok(HalfSpace { d: rationals(&h.d)?, beta: rational(&h.beta)? })
            })
            .collect::<Result<Vec<_>, SchemaError>>()?;
        let theta = CpwlFunction::new(m, pieces, domain).map_err(|e| SchemaError::Invalid(e.to_string()))?;
        let (system, composite) = match (&self.phi0, &self.f) {
            (Some(p0), None) => {
                let cp = CompositeProblem::new(poly(p0, n, "phi0")?, phi, theta)
                    .map_err(|e| SchemaError::Invalid(e.to_string()))?;
                (cp.system().map_err(|e| SchemaError::Invalid(e.to_string()))?, Some(cp))
            }
            (None, Some(f)) => {
                check_len("f", f.len(), n)?;
                let f = PolyMap::new(
                    n,
                    f.iter().enumerate().map(|(i, p)| poly(p, n, &format!("f[{i}]"))).collect::<Result<_, _>>()?,
                )
                .map_err(|e| SchemaError::Invalid(e.to_string()))?;
                (VariationalSystem::new(f, phi, theta).map_err(|e| SchemaError::Invalid(e.to_string()))?, None)
            }
            _ => return Err(SchemaError::Invalid("exactly one of phi0 and f is required".into())),
        };
        let mut seen = std::collections::BTreeSet::new();
        for p in &self.points {
            check_len(&format!("x of point {}", p.name), p.x.len(), n)?;
            check_len(&format!("v of point {}", p.name), p.v.len(), m)?;
            rationals(&p.x)?;
            rationals(&p.v)?;
            if !seen.insert(p.name.clone()) {
                return Err(SchemaError::Invalid(format!("duplicate point {}", p.name)));
            }
        }
        if let Some(exp) = &self.expect {
            if let Some(l) = &exp.multiplier_set {
                hpoly(l, m)?;
            }
            for name in exp.points.keys() {
                if !seen.contains(name) {
                    return Err(SchemaError::Invalid(format!("expectation for unknown point {name}")));
                }
            }
        }
        Ok(Problem { file: self, system, composite })
    }
}

impl Problem {
    pub fn parse(text: &str) -> Result<Self, SchemaError> {
        ProblemFile::from_json(text)?.validate()
    }

    pub fn points(&self) -> Vec<Point> {
        self.file
            .points
            .iter()
            .map(|p| Point { name: p.name.clone(), x: rationals(&p.x).unwrap(), v: rationals(&p.v).unwrap() })
            .collect()
    }

    pub fn point(&self, name: &str) -> Result<Point, SchemaError> {
        self.points()
            .into_iter()
            .find(|p| p.name == name)
            .ok_or_else(|| SchemaError::Invalid(format!("no point named {name:?} in {}", self.file.name)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TINY: &str = r#"{
        "name": "tiny", "n": 1, "m": 1,
        "phi0": [{"coeff": "1/2", "exponents": [2]}],
        "Phi": [[{"coeff": "1", "exponents": [1]}]],
        "theta": {"pieces": [{"a": ["0"], "alpha": "0"}], "domain": [{"d": ["1"], "beta": "0"}]},
        "points": [{"name": "origin", "x": ["0"], "v": ["0"]}]
    }"#;

    #[test]
    fn parses_and_round_trips() {
        let p = Problem::parse(TINY).unwrap();
        assert!(p.composite.is_some());
        assert_eq!(p.points().len(), 1);
        let again: ProblemFile = serde_json::from_str(&serde_json::to_string(&p.file).unwrap()).unwrap();
        assert_eq!(again, p.file);
    }

    #[test]
    fn rejects_bad_inputs() {
        let bad = TINY.replace("\"1/2\"", "\"1/0\"");
        assert!(matches!(Problem::parse(&bad), Err(SchemaError::Rational(_))));
        let bad = TINY.replace("\"exponents\": [2]", "\"exponents\": [2, 1]");
        assert!(matches!(Problem::parse(&bad), Err(SchemaError::Invalid(_))));
        let bad = TINY.replace("\"phi0\"", "\"psi0\"");
        assert!(matches!(Problem::parse(&bad), Err(SchemaError::Json(_))));
        assert!(Problem::parse(TINY).unwrap().point("nope").is_err());
    }
}
