//! Exponents at singular points and the conditions built on them.

mod fuchs;

use std::f64::consts::PI;

use num::complex::Complex64;
use num::rational::BigRational;
use num::{ToPrimitive, Zero};
use serde::Serialize;

pub use fuchs::{
    admissible_splits, exponent_sum, fuchs_compatibility, fuchs_inequalities, fuchs_relation, remark2_bound, remark3_bounds,
    rho_from_monodromy, InfinityPolicy,
};

use crate::error::{Error, Result};
use crate::numkernel::{eigenvalues, rationalize, Scalar};
use crate::system::{PointRef, SystemSpec};
use crate::verdict::{ConditionId, ConditionVerdict, Status, Witness};

/// Float-mode policy for congruence, rationality and strict inequalities.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RationalPolicy {
    pub tol: f64,
    pub max_denominator: u64,
}

impl Default for RationalPolicy {
    fn default() -> Self {
        RationalPolicy { tol: 1e-9, max_denominator: 1_000_000 }
    }
}

/// An exponent `beta = phi + rho` with integer `phi` and `0 <= Re rho < 1`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Exponent {
    pub beta: Scalar,
    pub phi: i64,
    pub rho: Scalar,
}

impl Exponent {
    pub fn split(beta: Scalar) -> Exponent {
        match &beta {
            Scalar::Exact(z) => {
                let phi = z.re.floor();
                let rho = &beta - &Scalar::from_rational(phi.clone());
                let phi = phi.to_integer().to_i64().unwrap_or(if z.re.is_zero() { 0 } else { i64::MAX });
                Exponent { beta, phi, rho }
            }
            Scalar::Float(z) => {
                let nearest = z.re.round();
                let phi = if (z.re - nearest).abs() <= 1e-12 * z.re.abs().max(1.0) { nearest } else { z.re.floor() };
                let rho = Scalar::float((z.re - phi).max(0.0), z.im);
                Exponent { beta, phi: phi as i64, rho }
            }
        }
    }

    pub fn re(&self) -> f64 {
        self.beta.to_c64().re
    }
}

/// `exp(2 pi i beta)`, evaluated from the fractional part `rho`.
pub fn monodromy_eigenvalue(e: &Exponent) -> Complex64 {
    (Complex64::new(0.0, 2.0 * PI) * e.rho.to_c64()).exp()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExponentSource {
    /// Eigenvalues of the residue at a Fuchsian point.
    Residue,
    /// Supplied with the input.
    Asserted,
    /// Formal exponents at an irregular non-resonant point.
    Formal,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointExponents {
    pub point: PointRef,
    pub source: ExponentSource,
    pub exponents: Vec<Exponent>,
}

impl PointExponents {
    pub fn betas(&self) -> Vec<Scalar> {
        self.exponents.iter().map(|e| e.beta.clone()).collect()
    }
}

fn sort_exponents(v: &mut [Exponent]) {
    v.sort_by(|a, b| {
        let (x, y) = (a.beta.to_c64(), b.beta.to_c64());
        y.re.total_cmp(&x.re).then(y.im.total_cmp(&x.im))
    });
}

/// Exponents at a Fuchsian point: the eigenvalues of the residue, listed by
/// non-increasing real part.
pub fn fuchsian_exponents(spec: &SystemSpec, pt: PointRef, tol: f64) -> Result<Vec<Exponent>> {
    if spec.poincare_rank(pt)? != 0 {
        return Err(Error::WrongPointKind { point: spec.point_label(pt), expected: "Fuchsian" });
    }
    let residue = spec.leading_coefficient(pt)?;
    let mut out: Vec<Exponent> =
        eigenvalues(&residue, tol)?.iter().flat_map(|e| std::iter::repeat_n(e.scalar(), e.multiplicity)).map(Exponent::split).collect();
    sort_exponents(&mut out);
    Ok(out)
}

/// Exponents at every singular point: computed at Fuchsian points, taken from
/// the input elsewhere.
pub fn collect_exponents(spec: &SystemSpec, tol: f64) -> Result<Vec<PointExponents>> {
    spec.singular_points()
        .into_iter()
        .map(|pt| {
            if spec.poincare_rank(pt)? == 0 {
                return Ok(PointExponents { point: pt, source: ExponentSource::Residue, exponents: fuchsian_exponents(spec, pt, tol)? });
            }
            let given = spec.asserted_exponents(pt).ok_or_else(|| Error::MissingExponents(spec.point_label(pt)))?;
            let mut exponents: Vec<Exponent> = given.iter().cloned().map(Exponent::split).collect();
            sort_exponents(&mut exponents);
            Ok(PointExponents { point: pt, source: ExponentSource::Asserted, exponents })
        })
        .collect()
}

/// Decides `x > threshold` for a real value.
fn strictly_above(x: &Scalar, threshold: &BigRational, tol: f64) -> Status {
    match x.re() {
        Scalar::Exact(z) => {
            if z.re > *threshold {
                Status::Holds
            } else {
                Status::Fails
            }
        }
        Scalar::Float(z) => {
            let margin = z.re - threshold.to_f64().unwrap_or(f64::NAN);
            if margin > tol {
                Status::Holds
            } else if margin < -tol {
                Status::Fails
            } else {
                Status::Ambiguous
            }
        }
    }
}

fn lower_bound_verdict(id: ConditionId, points: &[PointExponents], threshold: BigRational, tol: f64) -> ConditionVerdict {
    let mut status = Status::Holds;
    let mut witnesses = Vec::new();
    for pe in points {
        for (j, e) in pe.exponents.iter().enumerate() {
            let s = strictly_above(&e.beta, &threshold, tol);
            if s != Status::Holds {
                let what = if s == Status::Fails { "below" } else { "within tolerance of" };
                witnesses.push(Witness::at(pe.point, vec![j], format!("Re beta = {} is {} the threshold", e.beta.re(), what)));
            }
            status = status.and(s);
        }
    }
    let threshold = Scalar::from_rational(threshold);
    let detail = format!("Re beta > {} at every point", threshold);
    ConditionVerdict::new(id, Some(threshold), witnesses, status, detail)
}

fn require_counts(points: &[PointExponents], p: usize) -> Result<()> {
    for pe in points {
        if pe.exponents.len() != p {
            return Err(Error::MissingExponents(format!("{} ({} of {} given)", pe.point, pe.exponents.len(), p)));
        }
    }
    Ok(())
}

/// `Re beta > -1/(nk)` for every exponent of every point.
pub fn check_ineq_small(points: &[PointExponents], n: usize, p: usize, k: usize, policy: &RationalPolicy) -> Result<ConditionVerdict> {
    if k == 0 || k >= p {
        return Err(Error::OutOfRange(format!("k = {} must lie in 1..={}", k, p.saturating_sub(1))));
    }
    if n == 0 {
        return Err(Error::OutOfRange("no singular points".into()));
    }
    require_counts(points, p)?;
    let threshold = BigRational::new((-1).into(), ((n * k) as i64).into());
    Ok(lower_bound_verdict(ConditionId::Ineq1, points, threshold, policy.tol))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairOutcome {
    /// The exponents differ by an integer; the rule does not apply.
    Exempt,
    Holds,
    Fails,
}

/// The pair rule: for `a - b` not an integer, either `Re a - Re b` is
/// irrational or the imaginary parts differ.
pub fn pair_rule(a: &Scalar, b: &Scalar, policy: &RationalPolicy) -> PairOutcome {
    let d = a - b;
    if let Scalar::Exact(z) = &d {
        return if z.im.is_zero() && z.re.is_integer() {
            PairOutcome::Exempt
        } else if !z.im.is_zero() {
            PairOutcome::Holds
        } else {
            PairOutcome::Fails
        };
    }
    let z = d.to_c64();
    if z.im.abs() <= policy.tol && (z.re - z.re.round()).abs() <= policy.tol {
        PairOutcome::Exempt
    } else if z.im.abs() > policy.tol || rationalize(z.re, policy.max_denominator, policy.tol).is_none() {
        PairOutcome::Holds
    } else {
        PairOutcome::Fails
    }
}

/// The pair rule over all exponent pairs at one point.
pub fn check_pair_conditions(point: PointRef, exps: &[Exponent], policy: &RationalPolicy) -> ConditionVerdict {
    let mut witnesses = Vec::new();
    for j in 0..exps.len() {
        for l in j + 1..exps.len() {
            if pair_rule(&exps[j].beta, &exps[l].beta, policy) == PairOutcome::Fails {
                witnesses.push(Witness::at(
                    point,
                    vec![j, l],
                    format!("{} and {} have rational real difference and equal imaginary parts", exps[j].beta, exps[l].beta),
                ));
            }
        }
    }
    let status = if witnesses.is_empty() { Status::Holds } else { Status::Fails };
    ConditionVerdict::new(ConditionId::Ineq2, None, witnesses, status, format!("pair rule at {}", point))
}

/// The small-exponent condition with `k = p - 1` plus the pair rule at every
/// point of an all-Fuchsian system (infinity included when singular).
pub fn check_corollary1(spec: &SystemSpec, tol: f64, policy: &RationalPolicy) -> Result<ConditionVerdict> {
    let p = spec.dimension();
    if p < 2 {
        return Err(Error::OutOfRange("the condition needs dimension at least 2".into()));
    }
    for pt in spec.singular_points() {
        if spec.poincare_rank(pt)? != 0 {
            return Err(Error::Unsupported(format!("point {} is not Fuchsian", spec.point_label(pt))));
        }
    }
    let points = collect_exponents(spec, tol)?;
    check_corollary1_exponents(&points, p, policy)
}

/// As [`check_corollary1`], from exponents already at hand.
pub fn check_corollary1_exponents(points: &[PointExponents], p: usize, policy: &RationalPolicy) -> Result<ConditionVerdict> {
    let n = points.len();
    let small = check_ineq_small(points, n, p, p - 1, policy)?;
    let mut status = small.status;
    let mut witnesses = small.witnesses;
    for pe in points {
        let pair = check_pair_conditions(pe.point, &pe.exponents, policy);
        status = status.and(pair.status);
        witnesses.extend(pair.witnesses);
    }
    let threshold = small.threshold;
    let detail = format!("Re beta > {} at {} points and the pair rule", threshold.as_ref().expect("set"), n);
    Ok(ConditionVerdict::new(ConditionId::Ineq3, threshold, witnesses, status, detail))
}

/// Two distinct eigenvalues with equal `N`-th powers, if any.
///
/// Equal moduli are tested relative to `tol`, arguments modulo `2 pi / N`
/// within `tol`.
pub fn is_n_resonant(eigs: &[Complex64], n_power: u32, tol: f64) -> Result<Option<(usize, usize)>> {
    if n_power < 2 {
        return Err(Error::OutOfRange(format!("N = {} must be at least 2", n_power)));
    }
    let step = 2.0 * PI / n_power as f64;
    for j in 0..eigs.len() {
        for l in j + 1..eigs.len() {
            let (a, b) = (eigs[j], eigs[l]);
            let scale = a.norm().max(b.norm()).max(1.0);
            if (a - b).norm() <= tol * scale {
                continue;
            }
            if (a.norm() - b.norm()).abs() > tol * scale || a.norm() == 0.0 {
                continue;
            }
            let d = (a / b).arg();
            let t = d / step;
            if (t - t.round()).abs() * step <= tol && (t.round() as i64).rem_euclid(n_power as i64) != 0 {
                return Ok(Some((j, l)));
            }
        }
    }
    Ok(None)
}

/// Non-resonance of a matrix spectrum for one `N`, as a verdict.
pub fn check_n_resonance(point: Option<PointRef>, eigs: &[Complex64], n_power: u32, tol: f64) -> Result<ConditionVerdict> {
    let hit = is_n_resonant(eigs, n_power, tol)?;
    let witnesses: Vec<Witness> = hit
        .into_iter()
        .map(|(j, l)| Witness { point, indices: vec![j, l], note: format!("{} and {} have equal {}-th powers", eigs[j], eigs[l], n_power) })
        .collect();
    let status = if witnesses.is_empty() { Status::Holds } else { Status::Fails };
    Ok(ConditionVerdict::new(ConditionId::NResonance, None, witnesses, status, format!("not {}-resonant", n_power)))
}

/// Whether `exp(2 pi i beta)` is non-resonant for every `N`, which the pair
/// rule guarantees.
pub fn nonresonant_all_n(exps: &[Exponent], policy: &RationalPolicy) -> bool {
    check_pair_conditions(PointRef::Finite(0), exps, policy).holds()
}

/// Whether every point carries a single exponent repeated `p` times.
pub fn single_exponent_everywhere(points: &[PointExponents]) -> bool {
    points.iter().all(|pe| pe.exponents.windows(2).all(|w| w[0].beta == w[1].beta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkernel::MatrixC;

    fn exps(v: &[Scalar]) -> Vec<Exponent> {
        v.iter().cloned().map(Exponent::split).collect()
    }

    #[test]
    fn splits() {
        let e = Exponent::split(Scalar::ratio(-1, 2));
        assert_eq!((e.phi, e.rho.clone()), (-1, Scalar::ratio(1, 2)));
        let e = Exponent::split(Scalar::int(2));
        assert_eq!((e.phi, e.rho.clone()), (2, Scalar::zero()));
        let e = Exponent::split(Scalar::float(-0.25, 1.0));
        assert_eq!(e.phi, -1);
        assert!((e.rho.to_c64() - Complex64::new(0.75, 1.0)).norm() < 1e-15);
        let e = Exponent::split(Scalar::float(3.0 - 1e-14, 0.0));
        assert_eq!(e.phi, 3);
    }

    #[test]
    fn fuchsian_exponents_of_examples() {
        let spec = SystemSpec::fuchsian(vec![
            (
                Scalar::zero(),
                MatrixC::from_rows(vec![vec![Scalar::ratio(1, 2), Scalar::one()], vec![Scalar::zero(), Scalar::ratio(-1, 2)]]).unwrap(),
            ),
            (Scalar::one(), MatrixC::diagonal(&[Scalar::int(1), Scalar::int(2)])),
        ])
        .unwrap();
        let e = fuchsian_exponents(&spec, PointRef::Finite(0), 1e-9).unwrap();
        assert_eq!(e.iter().map(|x| (x.phi, x.rho.clone())).collect::<Vec<_>>(), vec![(0, Scalar::ratio(1, 2)), (-1, Scalar::ratio(1, 2))]);
        let e = fuchsian_exponents(&spec, PointRef::Finite(1), 1e-9).unwrap();
        assert_eq!(e.iter().map(|x| x.phi).collect::<Vec<_>>(), vec![2, 1]);
        assert!(e.iter().all(|x| x.rho.is_zero()));
        let zero = SystemSpec::fuchsian(vec![(Scalar::zero(), MatrixC::zeros(2, 2).add(&MatrixC::unit(2, 0, 1)).unwrap())]).unwrap();
        let e = fuchsian_exponents(&zero, PointRef::Finite(0), 1e-9).unwrap();
        assert!(e.iter().all(|x| x.beta.is_zero() && x.phi == 0));
    }

    #[test]
    fn monodromy_eigenvalues() {
        assert!((monodromy_eigenvalue(&Exponent::split(Scalar::zero())) - 1.0).norm() < 1e-15);
        assert!((monodromy_eigenvalue(&Exponent::split(Scalar::ratio(1, 2))) + 1.0).norm() < 1e-15);
        let mu = monodromy_eigenvalue(&Exponent::split(Scalar::gauss(0, 1, 1, 10)));
        assert!((mu - Complex64::new((-PI / 5.0).exp(), 0.0)).norm() < 1e-15);
        assert!((mu.re - 0.5335).abs() < 1e-4);
    }

    fn at_points(n: usize, e: Vec<Exponent>) -> Vec<PointExponents> {
        (0..n).map(|i| PointExponents { point: PointRef::Finite(i), source: ExponentSource::Asserted, exponents: e.clone() }).collect()
    }

    #[test]
    fn ineq_small_examples() {
        let policy = RationalPolicy::default();
        let mut pts = at_points(4, exps(&vec![Scalar::zero(); 7]));
        pts[2].exponents[3] = Exponent::split(Scalar::ratio(-1, 24));
        let v = check_ineq_small(&pts, 4, 7, 6, &policy).unwrap();
        assert_eq!(v.threshold, Some(Scalar::ratio(-1, 24)));
        assert_eq!(v.status, Status::Fails);
        assert_eq!(v.witnesses[0].point, Some(PointRef::Finite(2)));
        let zeros = at_points(3, exps(&[Scalar::zero(), Scalar::zero()]));
        assert!(check_ineq_small(&zeros, 3, 2, 1, &policy).unwrap().holds());
        let single = at_points(3, exps(&[Scalar::float(-0.2, 0.0), Scalar::zero()]));
        assert!(check_ineq_small(&single, 3, 2, 1, &policy).unwrap().holds());
        assert!(matches!(check_ineq_small(&single, 3, 2, 2, &policy), Err(Error::OutOfRange(_))));
        assert!(matches!(check_ineq_small(&single, 3, 3, 1, &policy), Err(Error::MissingExponents(_))));
        let edge = at_points(3, exps(&[Scalar::float(-1.0 / 3.0, 0.0), Scalar::zero()]));
        assert_eq!(check_ineq_small(&edge, 3, 2, 1, &policy).unwrap().status, Status::Ambiguous);
    }

    #[test]
    fn pair_rule_examples() {
        let policy = RationalPolicy::default();
        let pt = PointRef::Finite(0);
        assert!(check_pair_conditions(pt, &exps(&[Scalar::gauss(0, 1, 1, 10), Scalar::gauss(0, 1, -1, 10)]), &policy).holds());
        let v = check_pair_conditions(pt, &exps(&[Scalar::zero(), Scalar::ratio(1, 3)]), &policy);
        assert!(!v.holds());
        assert_eq!(v.witnesses[0].indices, vec![0, 1]);
        assert!(check_pair_conditions(pt, &exps(&[Scalar::zero(), Scalar::one()]), &policy).holds());
        // Under the default policy sqrt(2) is indistinguishable from 47321/33461.
        let root2 = exps(&[Scalar::float(0.0, 0.0), Scalar::float(2f64.sqrt(), 0.0)]);
        assert!(!check_pair_conditions(pt, &root2, &policy).holds());
        let strict = RationalPolicy { tol: 1e-13, max_denominator: 1_000_000 };
        assert!(check_pair_conditions(pt, &root2, &strict).holds());
        assert!(check_pair_conditions(pt, &exps(&[Scalar::float(0.0, 0.0), Scalar::float(PI * 1e-7, 0.0)]), &policy).holds());
        assert!(!check_pair_conditions(pt, &exps(&[Scalar::float(0.0, 0.0), Scalar::float(0.25, 0.0)]), &policy).holds());
        assert!(check_pair_conditions(pt, &exps(&[Scalar::float(0.5, 0.0), Scalar::float(-0.5, 1e-12)]), &policy).holds());
    }

    #[test]
    fn corollary1_examples() {
        let policy = RationalPolicy::default();
        let s = Scalar::gauss(0, 1, 1, 10);
        let pts = vec![
            PointExponents {
                point: PointRef::Finite(0),
                source: ExponentSource::Residue,
                exponents: exps(&[Scalar::zero(), Scalar::zero()]),
            },
            PointExponents {
                point: PointRef::Finite(1),
                source: ExponentSource::Residue,
                exponents: exps(&[Scalar::zero(), Scalar::zero()]),
            },
            PointExponents { point: PointRef::Finite(2), source: ExponentSource::Residue, exponents: exps(&[s.clone(), -s.clone()]) },
        ];
        let v = check_corollary1_exponents(&pts, 2, &policy).unwrap();
        assert!(v.holds());
        assert_eq!(v.threshold, Some(Scalar::ratio(-1, 3)));
        let third = at_points(2, exps(&[Scalar::zero(), Scalar::ratio(1, 3)]));
        let v = check_corollary1_exponents(&third, 2, &policy).unwrap();
        assert_eq!(v.status, Status::Fails);
        assert_eq!(v.id, ConditionId::Ineq3);
        let seven = at_points(4, exps(&vec![Scalar::zero(); 7]));
        assert_eq!(check_corollary1_exponents(&seven, 7, &policy).unwrap().threshold, Some(Scalar::ratio(-1, 24)));
    }

    #[test]
    fn corollary1_rejects_irregular_points() {
        let lead = MatrixC::diagonal(&[Scalar::int(1), Scalar::int(2)]);
        let pt =
            crate::system::SingularPoint::new(crate::system::Location::Finite(Scalar::zero()), vec![MatrixC::zeros(2, 2), lead]).unwrap();
        let spec = SystemSpec::new(2, vec![pt], vec![]).unwrap();
        assert!(matches!(check_corollary1(&spec, 1e-9, &RationalPolicy::default()), Err(Error::Unsupported(_))));
    }

    #[test]
    fn resonance_examples() {
        let one = Complex64::new(1.0, 0.0);
        assert_eq!(is_n_resonant(&[one, -one], 2, 1e-9).unwrap(), Some((0, 1)));
        assert_eq!(is_n_resonant(&[one * 2.0, one * 3.0], 2, 1e-9).unwrap(), None);
        assert_eq!(is_n_resonant(&[one, Complex64::i()], 4, 1e-9).unwrap(), Some((0, 1)));
        assert_eq!(is_n_resonant(&[one, Complex64::i()], 3, 1e-9).unwrap(), None);
        assert_eq!(is_n_resonant(&[one, one], 5, 1e-9).unwrap(), None);
        assert!(is_n_resonant(&[one], 1, 1e-9).is_err());
        let v = check_n_resonance(Some(PointRef::Finite(1)), &[one, -one], 2, 1e-9).unwrap();
        assert!(!v.holds());
    }

    #[test]
    fn all_n_nonresonance() {
        let policy = RationalPolicy::default();
        let s = Scalar::gauss(0, 1, 1, 10);
        assert!(nonresonant_all_n(&exps(&[s.clone(), -s]), &policy));
        assert!(!nonresonant_all_n(&exps(&[Scalar::zero(), Scalar::ratio(1, 2)]), &policy));
        assert!(nonresonant_all_n(&exps(&vec![Scalar::ratio(2, 7); 4]), &policy));
    }
}
