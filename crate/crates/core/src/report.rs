//! Machine-readable reports and their text rendering.

use std::fmt::Write as _;

use num::complex::Complex64;
use serde::Serialize;

use crate::decide::{decide, DecisionOutcome, Tolerances};
use crate::error::{Error, Result};
use crate::exponents::{
    collect_exponents, exponent_sum, fuchs_inequalities, fuchs_relation, remark2_bound, Exponent, ExponentSource, InfinityPolicy,
};
use crate::formal::{formal_data, formal_residual, residual_scale, FormalData};
use crate::monodromy::{check_exponent_consistency, monodromy, LoopPlan, MonodromyOptions};
use crate::numkernel::{fmt17, ser_f64, MatrixC, Scalar};
use crate::quadrature::{base_point, default_samples, solve_triangular, verify_solution, QuadExpr};
use crate::system::{PointKind, PointRef, SystemSpec};
use crate::triangular::{apply_to_system, simultaneous_triangularize, FlagResult};
use crate::verdict::{ConditionId, ConditionVerdict, Status, Witness};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ToolInfo {
    pub name: &'static str,
    pub version: &'static str,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExponentsReport {
    pub source: ExponentSource,
    pub values: Vec<Exponent>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointReport {
    pub point: PointRef,
    pub location: String,
    pub rank: usize,
    pub kind: PointKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exponents: Option<ExponentsReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonodromyReport {
    pub plan: LoopPlan,
    /// `M_i` indexed like the finite points.
    pub matrices: Vec<MatrixC>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub at_infinity: Option<MatrixC>,
    pub loop_errors: Vec<String>,
    #[serde(serialize_with = "ser_f64")]
    pub product_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub consistency: Option<ConditionVerdict>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FormalReport {
    #[serde(flatten)]
    pub data: FormalData,
    #[serde(serialize_with = "ser_f64")]
    pub residual: f64,
    #[serde(serialize_with = "ser_f64")]
    pub scale: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolutionReport {
    /// Constant gauge `C` applied first; the trees solve `C B C^{-1}`, so a
    /// fundamental matrix of the input system is `C^{-1} Y`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gauge: Option<FlagResult>,
    pub base: String,
    pub entries: Vec<Vec<QuadExpr>>,
    pub samples: Vec<String>,
    pub check: ConditionVerdict,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub tool: ToolInfo,
    pub command: String,
    pub tolerances: Tolerances,
    pub dimension: usize,
    pub exact: bool,
    pub points: Vec<PointReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<ConditionVerdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decision: Option<DecisionOutcome>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub triangularization: Option<FlagResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub monodromy: Option<MonodromyReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub formal: Vec<FormalReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solution: Option<SolutionReport>,
}

fn c64_string(z: Complex64) -> String {
    Scalar::Float(z).report_string()
}

impl Report {
    /// Header and per-point classification; exponents wherever they are
    /// available without extra work (residues, asserted values, formal
    /// exponents at non-resonant irregular points).
    pub fn new(command: &str, spec: &SystemSpec, tol: &Tolerances) -> Result<Report> {
        let mut points = Vec::new();
        for pt in spec.singular_points() {
            let class = spec.classify(pt, tol.eig)?;
            let exponents = match (class.kind, spec.asserted_exponents(pt)) {
                (PointKind::Fuchsian, _) => Some(ExponentsReport {
                    source: ExponentSource::Residue,
                    values: crate::exponents::fuchsian_exponents(spec, pt, tol.eig)?,
                }),
                (_, Some(given)) => {
                    Some(ExponentsReport { source: ExponentSource::Asserted, values: given.iter().cloned().map(Exponent::split).collect() })
                }
                (PointKind::IrregularNonresonant, None) => {
                    let f = formal_data(spec, pt, 0, tol.eig)?;
                    Some(ExponentsReport { source: ExponentSource::Formal, values: f.lambda.into_iter().map(Exponent::split).collect() })
                }
                (PointKind::IrregularResonant, None) => None,
            };
            points.push(PointReport { point: pt, location: spec.point_label(pt), rank: class.rank, kind: class.kind, exponents });
        }
        Ok(Report {
            schema_version: SCHEMA_VERSION,
            tool: ToolInfo { name: "quadsolve", version: env!("CARGO_PKG_VERSION") },
            command: command.to_string(),
            tolerances: *tol,
            dimension: spec.dimension(),
            exact: spec.is_exact(),
            points,
            checks: vec![],
            decision: None,
            triangularization: None,
            monodromy: None,
            formal: vec![],
            solution: None,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}

/// Global relations between exponents, for systems whose points are all
/// regular (Fuchsian or with asserted exponents).
pub fn global_checks(spec: &SystemSpec, tol: &Tolerances) -> Result<Vec<ConditionVerdict>> {
    let points = spec.singular_points();
    let ranks = points.iter().map(|&pt| spec.poincare_rank(pt)).collect::<Result<Vec<usize>>>()?;
    let regular = points.iter().zip(&ranks).all(|(&pt, &r)| r == 0 || spec.asserted_exponents(pt).is_some());
    if points.is_empty() || !regular {
        return Ok(vec![]);
    }
    let mut out = Vec::new();
    if ranks.iter().all(|&r| r == 0) {
        out.push(fuchs_relation(spec, InfinityPolicy::Count)?);
    }
    let exps = collect_exponents(spec, tol.eig)?;
    let sum = exponent_sum(&exps);
    let p = spec.dimension();
    match fuchs_inequalities(&sum, &ranks, p) {
        Ok(v) => out.push(v),
        Err(Error::OutOfRange(msg)) => out.push(ConditionVerdict::new(
            ConditionId::FuchsIneq,
            None,
            vec![Witness::global(msg)],
            Status::Fails,
            format!("sum of exponents {}", sum),
        )),
        Err(e) => return Err(e),
    }
    if p >= 2 {
        out.push(remark2_bound(&ranks, p, p - 1)?);
    }
    Ok(out)
}

/// Full analysis. A system outside the scope of every criterion still gets
/// a report, with no decision and the reason returned alongside.
pub fn analyze(spec: &SystemSpec, tol: &Tolerances) -> Result<(Report, Option<Error>)> {
    let mut report = Report::new("analyze", spec, tol)?;
    report.checks = global_checks(spec, tol)?;
    match decide(spec, tol) {
        Ok(d) => report.decision = Some(d),
        Err(e @ Error::Unsupported(_)) => return Ok((report, Some(e))),
        Err(e) => return Err(e),
    }
    Ok((report, None))
}

pub fn monodromy_report(spec: &SystemSpec, tol: &Tolerances) -> Result<MonodromyReport> {
    let res = monodromy(spec, &MonodromyOptions { rtol: tol.rtol_ode, parallel: true })?;
    let at_infinity = match spec.infinity_rank() {
        Some(_) => Some(MatrixC::from_float(&res.at_infinity()?)),
        None => None,
    };
    let consistency = check_exponent_consistency(spec, &res, tol.eig, 1e-6)?;
    Ok(MonodromyReport {
        matrices: res.matrices.iter().map(MatrixC::from_float).collect(),
        at_infinity,
        loop_errors: res.loop_errors.iter().map(|&e| fmt17(e)).collect(),
        product_residual: res.product_residual,
        consistency: Some(consistency),
        plan: res.plan,
    })
}

/// Formal data at every irregular non-resonant point.
pub fn formal_reports(spec: &SystemSpec, tol: &Tolerances) -> Result<Vec<FormalReport>> {
    let k = tol.truncation_order;
    let mut out = Vec::new();
    for pt in spec.singular_points() {
        if spec.classify(pt, tol.eig)?.kind != PointKind::IrregularNonresonant {
            continue;
        }
        let data = formal_data(spec, pt, k, tol.eig)?;
        let residual = formal_residual(spec, &data, k)?;
        let scale = residual_scale(spec, pt, k)?;
        out.push(FormalReport { data, residual, scale });
    }
    if out.is_empty() {
        return Err(Error::Unsupported("no irregular non-resonant singular point".into()));
    }
    Ok(out)
}

/// Solution by quadratures, after a constant gauge when `B` is not already
/// upper-triangular, checked at five sample points.
pub fn solution_report(spec: &SystemSpec, tol: &Tolerances) -> Result<SolutionReport> {
    let (system, gauge) = match solve_triangular(spec) {
        Ok(_) => (spec.clone(), None),
        Err(Error::Unsupported(_)) => {
            let mut mats = spec.coefficient_matrices();
            if mats.is_empty() {
                mats.push(MatrixC::zeros(spec.dimension(), spec.dimension()));
            }
            let flag = simultaneous_triangularize(&mats, tol.rank)?;
            if !flag.success {
                return Err(Error::Unsupported("no constant gauge makes B upper-triangular".into()));
            }
            (apply_to_system(spec, &flag)?, Some(flag))
        }
        Err(e) => return Err(e),
    };
    let entries = solve_triangular(&system)?;
    let samples = default_samples(&system, 5)?;
    let check = verify_solution(&system, &entries, &samples, 1e-8)?;
    Ok(SolutionReport {
        gauge,
        base: c64_string(base_point(&system)?),
        entries,
        samples: samples.into_iter().map(c64_string).collect(),
        check,
    })
}

fn status_word(s: Status) -> &'static str {
    match s {
        Status::Holds => "holds",
        Status::Fails => "FAILS",
        Status::Ambiguous => "ambiguous",
    }
}

fn write_verdict(out: &mut String, v: &ConditionVerdict) {
    let id = serde_json::to_value(v.id).ok().and_then(|x| x.as_str().map(String::from)).unwrap_or_default();
    let _ = writeln!(out, "  [{}] {}: {}", status_word(v.status), id, v.detail);
    for w in &v.witnesses {
        let at = w.point.map(|p| format!(" at {}", p)).unwrap_or_default();
        let _ = writeln!(out, "      witness{}: {}", at, w.note);
    }
}

fn write_matrix(out: &mut String, indent: &str, m: &MatrixC) {
    for i in 0..m.rows() {
        let row: Vec<String> = m.row(i).iter().map(Scalar::report_string).collect();
        let _ = writeln!(out, "{}[{}]", indent, row.join(", "));
    }
}

fn write_flag(out: &mut String, title: &str, f: &FlagResult) {
    if f.success {
        let _ = writeln!(out, "{}: success (residual {})", title, fmt17(f.residual));
        if let Some(c) = &f.c {
            let _ = writeln!(out, "  C =");
            write_matrix(out, "    ", c);
        }
    } else if let Some(cert) = &f.failure {
        let _ = writeln!(out, "{}: no common eigenvector at stage {} ({} matrices)", title, cert.stage, cert.matrices.len());
    }
}

/// Text rendering of a report.
pub fn render_text(r: &Report) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} {}: {} (dimension {}, {} data)",
        r.tool.name,
        r.tool.version,
        r.command,
        r.dimension,
        if r.exact { "exact" } else { "float" }
    );
    if !r.points.is_empty() {
        let _ = writeln!(out, "singular points:");
    }
    for p in &r.points {
        let kind = serde_json::to_value(p.kind).ok().and_then(|x| x.as_str().map(String::from)).unwrap_or_default();
        let _ = write!(out, "  {:<12} rank {} {}", p.location, p.rank, kind);
        if let Some(e) = &p.exponents {
            let vals: Vec<String> = e.values.iter().map(|x| x.beta.report_string()).collect();
            let src = serde_json::to_value(e.source).ok().and_then(|x| x.as_str().map(String::from)).unwrap_or_default();
            let _ = write!(out, "  exponents ({}): {}", src, vals.join(", "));
        }
        let _ = writeln!(out);
    }
    if !r.checks.is_empty() {
        let _ = writeln!(out, "checks:");
        for v in &r.checks {
            write_verdict(&mut out, v);
        }
    }
    if let Some(d) = &r.decision {
        let route = serde_json::to_value(d.route).ok().and_then(|x| x.as_str().map(String::from)).unwrap_or_default();
        let _ = writeln!(out, "decision: {} (route: {})", d.decision, route);
        for v in &d.verdicts {
            write_verdict(&mut out, v);
        }
        if let Some(f) = &d.flag {
            write_flag(&mut out, "triangularization", f);
        }
        if let Some(b) = &d.block {
            write_flag(&mut out, &format!("block form k = {}", b.k), &b.flag);
        }
    }
    if let Some(f) = &r.triangularization {
        write_flag(&mut out, "triangularization", f);
    }
    if let Some(m) = &r.monodromy {
        let _ = writeln!(out, "monodromy (base point {}):", c64_string(m.plan.base));
        for (i, mat) in m.matrices.iter().enumerate() {
            let label = r.points.iter().find(|p| p.point == PointRef::Finite(i)).map_or(i.to_string(), |p| p.location.clone());
            let _ = writeln!(out, "  M at {} (error estimate {}):", label, m.loop_errors[i]);
            write_matrix(&mut out, "    ", mat);
        }
        let _ = writeln!(out, "  product residual {}", fmt17(m.product_residual));
        if let Some(v) = &m.consistency {
            write_verdict(&mut out, v);
        }
    }
    for f in &r.formal {
        let _ = writeln!(out, "formal data at {} (rank {}):", f.data.point, f.data.rank);
        let lam: Vec<String> = f.data.lambda.iter().map(Scalar::report_string).collect();
        let _ = writeln!(out, "  Lambda: {}", lam.join(", "));
        for (j, q) in f.data.q.iter().enumerate() {
            let terms: Vec<String> = q.iter().enumerate().map(|(m, c)| format!("({})*t^-{}", c.report_string(), m + 1)).collect();
            let _ = writeln!(out, "  q{}: {}", j + 1, terms.join(" + "));
        }
        let _ = writeln!(out, "  residual {} (scale {})", fmt17(f.residual), fmt17(f.scale));
    }
    if let Some(s) = &r.solution {
        if let Some(g) = &s.gauge {
            write_flag(&mut out, "gauge", g);
        }
        let _ = writeln!(out, "solution (base point {}):", s.base);
        for (j, row) in s.entries.iter().enumerate() {
            for (k, e) in row.iter().enumerate() {
                if !e.is_zero() {
                    let _ = writeln!(out, "  Y[{}][{}] = {}", j + 1, k + 1, e);
                }
            }
        }
        write_verdict(&mut out, &s.check);
    }
    out
}
