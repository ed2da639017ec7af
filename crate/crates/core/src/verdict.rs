//! Outcomes of condition checks.

use serde::Serialize;

use crate::numkernel::Scalar;
use crate::system::PointRef;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionId {
    /// `Re beta > -1/(nk)` at every point.
    Ineq1,
    /// The pair rule for exponents that are not congruent modulo the integers.
    Ineq2,
    /// `Re beta > -1/(n(p-1))` together with the pair rule.
    Ineq3,
    FuchsRelation,
    FuchsIneq,
    /// Compatibility of admissible exponent splittings with a zero exponent sum.
    FuchsCompatibility,
    Remark2,
    NResonance,
    /// Formal exponents pairwise distinct at a point.
    Distinct,
    ExponentConsistency,
    FormalMonodromy,
    SolutionCheck,
}

/// Three-valued outcome. `Ambiguous` is only produced in float mode when a
/// strict inequality cannot be certified within tolerance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Holds,
    Fails,
    Ambiguous,
}

impl Status {
    pub fn and(self, other: Status) -> Status {
        match (self, other) {
            (Status::Fails, _) | (_, Status::Fails) => Status::Fails,
            (Status::Ambiguous, _) | (_, Status::Ambiguous) => Status::Ambiguous,
            _ => Status::Holds,
        }
    }
}

/// A point and exponent indices that violate (or, for ambiguous outcomes,
/// sit on the boundary of) a condition.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub point: Option<PointRef>,
    pub indices: Vec<usize>,
    pub note: String,
}

impl Witness {
    pub fn at(point: PointRef, indices: Vec<usize>, note: impl Into<String>) -> Self {
        Witness { point: Some(point), indices, note: note.into() }
    }

    pub fn global(note: impl Into<String>) -> Self {
        Witness { point: None, indices: vec![], note: note.into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionVerdict {
    pub id: ConditionId,
    pub holds: bool,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<Scalar>,
    pub witnesses: Vec<Witness>,
    pub detail: String,
}

impl ConditionVerdict {
    /// A status other than `Holds` needs at least one witness.
    pub fn new(id: ConditionId, threshold: Option<Scalar>, witnesses: Vec<Witness>, status: Status, detail: impl Into<String>) -> Self {
        debug_assert!(status == Status::Holds || !witnesses.is_empty());
        ConditionVerdict { id, holds: status == Status::Holds, status, threshold, witnesses, detail: detail.into() }
    }

    pub fn holds(&self) -> bool {
        self.holds
    }
}

/// Outcome of a solvability decision.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Decision {
    Solvable,
    NotSolvable,
    /// The hypotheses of the applicable criterion are not met.
    Inconclusive,
}

impl std::fmt::Display for Decision {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Decision::Solvable => "SOLVABLE",
            Decision::NotSolvable => "NOT_SOLVABLE",
            Decision::Inconclusive => "INCONCLUSIVE",
        })
    }
}
