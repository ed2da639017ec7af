//! The solvability decision: pick the criterion that applies to the system
//! and run it.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exponents::{
    check_corollary1_exponents, check_ineq_small, check_pair_conditions, collect_exponents, single_exponent_everywhere, PointExponents,
    RationalPolicy,
};
use crate::formal::{check_theorem2, FormalData};
use crate::numkernel::{ser_f64, MatrixC};
use crate::system::{PointKind, PointRef, SystemSpec};
use crate::triangular::{block_form, simultaneous_triangularize, FlagResult};
use crate::verdict::{ConditionVerdict, Decision, Status};

/// Numerical policies shared by every analysis step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Tolerances {
    /// Eigenvalue clustering and float comparisons of exponents.
    #[serde(serialize_with = "ser_f64")]
    pub eig: f64,
    /// Rank and kernel decisions in triangularization.
    #[serde(serialize_with = "ser_f64")]
    pub rank: f64,
    /// Local relative tolerance of path integration.
    #[serde(serialize_with = "ser_f64")]
    pub rtol_ode: f64,
    /// Largest denominator a float may be recognised as rational with.
    pub rat_denominator_bound: u64,
    /// Truncation order of formal series.
    pub truncation_order: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { eig: 1e-9, rank: 1e-10, rtol_ode: 1e-11, rat_denominator_bound: 1_000_000, truncation_order: 8 }
    }
}

impl Tolerances {
    pub fn policy(&self) -> RationalPolicy {
        RationalPolicy { tol: self.eig, max_denominator: self.rat_denominator_bound }
    }
}

/// How a decision was reached.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    /// Dimension one: the scalar equation integrates directly.
    Scalar,
    /// `B` has no singular point at all.
    Trivial,
    /// Fuchsian with a single exponent per point: solvable iff the residues
    /// are simultaneously triangularizable.
    SingleExponent,
    /// Regular system with small exponents satisfying the pair rule:
    /// solvable iff the coefficients are simultaneously triangularizable.
    SmallExponents,
    /// Regular system whose exponents are small for some `k < p - 1`: no
    /// constant gauge gives an invariant `k`-flag, which rules out
    /// solvability.
    BlockForm,
    /// Irregular non-resonant points with small distinct formal exponents.
    FormalExponents,
    /// A constant gauge makes `B` upper-triangular, which suffices on its own.
    TriangularGauge,
    /// No criterion applies.
    NoCriterion,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlockCheck {
    pub k: usize,
    pub flag: FlagResult,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecisionOutcome {
    pub decision: Decision,
    pub route: Route,
    /// Hypothesis checks, in the order they were made.
    pub verdicts: Vec<ConditionVerdict>,
    /// Joint triangularization of every coefficient matrix.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flag: Option<FlagResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub block: Option<BlockCheck>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub formal: Vec<FormalData>,
}

impl DecisionOutcome {
    fn new(decision: Decision, route: Route, verdicts: Vec<ConditionVerdict>, flag: Option<FlagResult>) -> Self {
        DecisionOutcome { decision, route, verdicts, flag, block: None, formal: vec![] }
    }
}

fn joint_flag(spec: &SystemSpec, tol: f64) -> Result<FlagResult> {
    let mut mats = spec.coefficient_matrices();
    if mats.is_empty() {
        mats.push(MatrixC::zeros(spec.dimension(), spec.dimension()));
    }
    simultaneous_triangularize(&mats, tol)
}

fn verdict_for(flag: &FlagResult) -> Decision {
    if flag.success {
        Decision::Solvable
    } else {
        Decision::NotSolvable
    }
}

/// Whether a point is treated as regular singular: Fuchsian, or carrying
/// user-asserted exponents.
fn is_regular(spec: &SystemSpec, pt: PointRef) -> Result<bool> {
    Ok(spec.poincare_rank(pt)? == 0 || spec.asserted_exponents(pt).is_some())
}

/// Small-exponent hypotheses for flag depth `k`, with the pair rule.
fn small_exponents(points: &[PointExponents], p: usize, k: usize, policy: &RationalPolicy) -> Result<ConditionVerdict> {
    if k == p - 1 {
        return check_corollary1_exponents(points, p, policy);
    }
    let small = check_ineq_small(points, points.len(), p, k, policy)?;
    let mut v = small.clone();
    for pe in points {
        let pair = check_pair_conditions(pe.point, &pe.exponents, policy);
        v.status = v.status.and(pair.status);
        v.witnesses.extend(pair.witnesses);
    }
    v.holds = v.status == Status::Holds;
    Ok(v)
}

/// Decides solvability by quadratures where one of the implemented criteria
/// applies.
///
/// Fails with [`Error::Unsupported`] when the system mixes irregular points
/// with regular ones (or has resonant irregular points) and no constant gauge
/// triangularizes it.
pub fn decide(spec: &SystemSpec, tol: &Tolerances) -> Result<DecisionOutcome> {
    let p = spec.dimension();
    let points = spec.singular_points();
    if p == 1 {
        return Ok(DecisionOutcome::new(Decision::Solvable, Route::Scalar, vec![], Some(joint_flag(spec, tol.rank)?)));
    }
    if points.is_empty() {
        return Ok(DecisionOutcome::new(Decision::Solvable, Route::Trivial, vec![], Some(joint_flag(spec, tol.rank)?)));
    }
    let policy = tol.policy();
    let regular = points.iter().map(|&pt| is_regular(spec, pt)).collect::<Result<Vec<bool>>>()?;
    if regular.iter().all(|&r| r) {
        let exps = collect_exponents(spec, tol.eig)?;
        let fuchsian = points.iter().all(|&pt| spec.poincare_rank(pt).is_ok_and(|r| r == 0));
        let flag = joint_flag(spec, tol.rank)?;
        if fuchsian && single_exponent_everywhere(&exps) {
            return Ok(DecisionOutcome::new(verdict_for(&flag), Route::SingleExponent, vec![], Some(flag)));
        }
        let full = small_exponents(&exps, p, p - 1, &policy)?;
        if full.holds() {
            return Ok(DecisionOutcome::new(verdict_for(&flag), Route::SmallExponents, vec![full], Some(flag)));
        }
        let mut verdicts = vec![full];
        if flag.success {
            return Ok(DecisionOutcome::new(Decision::Solvable, Route::TriangularGauge, verdicts, Some(flag)));
        }
        for k in (1..p - 1).rev() {
            let v = small_exponents(&exps, p, k, &policy)?;
            let holds = v.holds();
            verdicts.push(v);
            if holds {
                let block = block_form(&spec.coefficient_matrices(), k, tol.rank)?;
                let decision = if block.success { Decision::Inconclusive } else { Decision::NotSolvable };
                let mut out = DecisionOutcome::new(decision, Route::BlockForm, verdicts, Some(flag));
                out.block = Some(BlockCheck { k, flag: block });
                return Ok(out);
            }
        }
        return Ok(DecisionOutcome::new(Decision::Inconclusive, Route::NoCriterion, verdicts, Some(flag)));
    }
    let all_nonresonant = points
        .iter()
        .zip(&regular)
        .all(|(&pt, &r)| !r && spec.classify(pt, tol.eig).is_ok_and(|c| c.kind == PointKind::IrregularNonresonant));
    if all_nonresonant {
        let t2 = check_theorem2(spec, tol.truncation_order, tol.eig, &policy)?;
        let mut out = match t2.decision {
            Decision::Inconclusive => {
                let flag = joint_flag(spec, tol.rank)?;
                if flag.success {
                    DecisionOutcome::new(Decision::Solvable, Route::TriangularGauge, t2.verdicts, Some(flag))
                } else {
                    DecisionOutcome::new(Decision::Inconclusive, Route::NoCriterion, t2.verdicts, Some(flag))
                }
            }
            d => DecisionOutcome::new(d, Route::FormalExponents, t2.verdicts, t2.flag),
        };
        out.formal = t2.formal;
        return Ok(out);
    }
    let flag = joint_flag(spec, tol.rank)?;
    if flag.success {
        return Ok(DecisionOutcome::new(Decision::Solvable, Route::TriangularGauge, vec![], Some(flag)));
    }
    Err(Error::Unsupported(
        "singular points mix irregular and regular kinds (or include resonant irregular points) and B is not triangularizable".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkernel::Scalar;
    use crate::system::parse_system;

    fn fixture(name: &str) -> SystemSpec {
        let path = format!("{}/../../fixtures/{}", env!("CARGO_MANIFEST_DIR"), name);
        parse_system(&std::fs::read_to_string(path).unwrap()).unwrap()
    }

    #[test]
    fn hidden_triangular_is_solvable() {
        let out = decide(&fixture("hidden_triangular_solvable.json"), &Tolerances::default()).unwrap();
        assert_eq!(out.decision, Decision::Solvable);
        assert_eq!(out.route, Route::SmallExponents);
        assert!(out.verdicts[0].holds());
        let flag = out.flag.unwrap();
        assert!(flag.success);
        assert_eq!(flag.residual, 0.0);
    }

    #[test]
    fn sl2_residues_not_solvable() {
        let out = decide(&fixture("sl2_not_solvable.json"), &Tolerances::default()).unwrap();
        assert_eq!(out.decision, Decision::NotSolvable);
        assert_eq!(out.route, Route::SmallExponents);
        let cert = out.flag.unwrap().failure.unwrap();
        assert_eq!(cert.stage, 0);
        assert!(crate::triangular::common_eigenvector(&cert.matrices, 1e-9).unwrap().is_none());
    }

    #[test]
    fn rational_pair_inconclusive() {
        let out = decide(&fixture("pair_rule_inconclusive.json"), &Tolerances::default()).unwrap();
        assert_eq!(out.decision, Decision::Inconclusive);
        assert_eq!(out.route, Route::NoCriterion);
        assert!(out.verdicts.iter().any(|v| !v.holds()));
    }

    #[test]
    fn scalar_and_trivial() {
        let s = SystemSpec::fuchsian(vec![(Scalar::zero(), MatrixC::from_ints(&[&[3]]))]).unwrap();
        assert_eq!(decide(&s, &Tolerances::default()).unwrap().route, Route::Scalar);
        let s = SystemSpec::new(2, vec![], vec![MatrixC::from_ints(&[&[0, 1], &[1, 0]])]).unwrap();
        let out = decide(&s, &Tolerances::default()).unwrap();
        assert_eq!((out.decision, out.route), (Decision::Solvable, Route::TriangularGauge));
        let s = SystemSpec::new(2, vec![], vec![]).unwrap();
        assert_eq!(decide(&s, &Tolerances::default()).unwrap().route, Route::Trivial);
    }

    #[test]
    fn single_exponent_route() {
        let e12 = MatrixC::from_ints(&[&[0, 1], &[0, 0]]);
        let e21 = MatrixC::from_ints(&[&[0, 0], &[1, 0]]);
        let s = SystemSpec::fuchsian(vec![(Scalar::zero(), e12.clone()), (Scalar::one(), e12.neg())]).unwrap();
        let out = decide(&s, &Tolerances::default()).unwrap();
        assert_eq!((out.decision, out.route), (Decision::Solvable, Route::SingleExponent));
        let s = SystemSpec::fuchsian(vec![
            (Scalar::zero(), e12.clone()),
            (Scalar::one(), e21.clone()),
            (Scalar::int(2), e12.add(&e21).unwrap().neg()),
        ])
        .unwrap();
        let out = decide(&s, &Tolerances::default()).unwrap();
        assert_ne!(out.route, Route::SingleExponent);
    }

    #[test]
    fn irregular_routes() {
        let tol = Tolerances::default();
        let out = decide(&fixture("irregular_diagonal.json"), &tol).unwrap();
        assert_eq!((out.decision, out.route), (Decision::Solvable, Route::FormalExponents));
        assert_eq!(out.formal.len(), 2);
        let out = decide(&fixture("irregular_not_triangularizable.json"), &tol).unwrap();
        assert_eq!((out.decision, out.route), (Decision::NotSolvable, Route::FormalExponents));
        let out = decide(&fixture("irregular_equal_exponents.json"), &tol).unwrap();
        assert_eq!((out.decision, out.route), (Decision::Solvable, Route::TriangularGauge));
        assert!(out.verdicts.iter().any(|v| v.id == crate::verdict::ConditionId::Distinct && !v.holds()));
    }

    #[test]
    fn mixed_kinds_unsupported() {
        let spec = fixture("irregular_eps.json");
        let mut pts = spec.finite_points().to_vec();
        pts.push(
            crate::system::SingularPoint::new(
                crate::system::Location::Finite(Scalar::one()),
                vec![MatrixC::from_ints(&[&[0, 0], &[1, 0]])],
            )
            .unwrap(),
        );
        let s = SystemSpec::new(2, pts, vec![]).unwrap();
        assert!(matches!(decide(&s, &Tolerances::default()), Err(Error::Unsupported(_))));
    }
}
