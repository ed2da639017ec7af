//! Global relations between exponents: the Fuchs relation and inequalities,
//! and the bounds they imply.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use num::complex::Complex64;
use num::rational::BigRational;
use num::{BigInt, One, Signed, ToPrimitive, Zero};

use super::{Exponent, PointExponents};
use crate::error::{Error, Result};
use crate::numkernel::Scalar;
use crate::system::{PointRef, SystemSpec};
use crate::verdict::{ConditionId, ConditionVerdict, Status, Witness};

/// Whether infinity takes part in a global exponent count.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InfinityPolicy {
    Count,
    Omit,
}

fn big(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Sum of all exponents.
pub fn exponent_sum(points: &[PointExponents]) -> Scalar {
    points.iter().flat_map(|pe| pe.exponents.iter()).fold(Scalar::zero(), |acc, e| &acc + &e.beta)
}

/// The exponents of an all-Fuchsian system sum to zero. The sum is taken as
/// the sum of residue traces, exactly in exact mode and within `1e-10`
/// (relative to the summed trace magnitudes) otherwise.
pub fn fuchs_relation(spec: &SystemSpec, infinity: InfinityPolicy) -> Result<ConditionVerdict> {
    let mut total = Scalar::zero();
    let mut magnitude = 0.0f64;
    let mut terms = Vec::new();
    for pt in spec.singular_points() {
        if spec.poincare_rank(pt)? != 0 {
            return Err(Error::Unsupported(format!("point {} is not Fuchsian", spec.point_label(pt))));
        }
        if pt == PointRef::Infinity && infinity == InfinityPolicy::Omit {
            continue;
        }
        let tr = spec.leading_coefficient(pt)?.trace()?;
        magnitude += tr.abs();
        terms.push(format!("{}: {}", pt, tr));
        total = &total + &tr;
    }
    let status = if total.is_exact() {
        if total.is_zero() {
            Status::Holds
        } else {
            Status::Fails
        }
    } else if total.abs() <= 1e-10 * magnitude.max(1.0) {
        Status::Holds
    } else {
        Status::Fails
    };
    let witnesses = if status == Status::Holds { vec![] } else { vec![Witness::global(format!("exponent sum is {}", total))] };
    let detail = format!("sum of exponents = {} ({})", total, terms.join(", "));
    Ok(ConditionVerdict::new(ConditionId::FuchsRelation, Some(Scalar::zero()), witnesses, status, detail))
}

/// `-p(p-1)/2 * sum r <= sum beta <= -sum r` for an integer exponent sum.
pub fn fuchs_inequalities(sum: &Scalar, ranks: &[usize], p: usize) -> Result<ConditionVerdict> {
    let s: BigRational = match sum {
        Scalar::Exact(z) if z.im.is_zero() && z.re.is_integer() => z.re.clone(),
        Scalar::Float(z) if z.im.abs() <= 1e-9 && (z.re - z.re.round()).abs() <= 1e-9 => big(z.re.round() as i64),
        _ => return Err(Error::OutOfRange(format!("exponent sum {} is not an integer", sum))),
    };
    let r: i64 = ranks.iter().map(|&x| x as i64).sum();
    let p = p as i64;
    let lower = big(-(p * (p - 1) / 2) * r);
    let upper = big(-r);
    let status = if lower <= s && s <= upper { Status::Holds } else { Status::Fails };
    let witnesses =
        if status == Status::Holds { vec![] } else { vec![Witness::global(format!("sum {} outside [{}, {}]", s, lower, upper))] };
    let detail = format!("{} <= {} <= {}", lower, s, upper);
    Ok(ConditionVerdict::new(ConditionId::FuchsIneq, Some(Scalar::from_rational(upper)), witnesses, status, detail))
}

/// `sum r < p/k`.
pub fn remark2_bound(ranks: &[usize], p: usize, k: usize) -> Result<ConditionVerdict> {
    if k == 0 {
        return Err(Error::OutOfRange("k must be positive".into()));
    }
    let r: usize = ranks.iter().sum();
    let status = if r * k < p { Status::Holds } else { Status::Fails };
    let bound = Scalar::ratio(p as i64, k as i64);
    let witnesses =
        if status == Status::Holds { vec![] } else { vec![Witness::global(format!("sum of ranks {} is not below {}", r, bound))] };
    let detail = format!("sum of ranks {} < {}", r, bound);
    Ok(ConditionVerdict::new(ConditionId::Remark2, Some(bound), witnesses, status, detail))
}

/// Bounds on `Re beta` for an all-Fuchsian system meeting the `k = p - 1`
/// small-exponent condition: `-1/(n(p-1)) < Re beta < (np-1)/(n(p-1))`.
pub fn remark3_bounds(n: usize, p: usize) -> Result<(BigRational, BigRational)> {
    if n == 0 || p < 2 {
        return Err(Error::OutOfRange(format!("bounds need n >= 1 and p >= 2 (n = {}, p = {})", n, p)));
    }
    let d = (n * (p - 1)) as i64;
    Ok((BigRational::new((-1).into(), d.into()), BigRational::new(((n * p) as i64 - 1).into(), d.into())))
}

/// `rho` with `exp(2 pi i rho) = mu` and `0 <= Re rho < 1`; exact for the
/// fourth roots of unity.
pub fn rho_from_monodromy(mu: &Scalar) -> Result<Scalar> {
    if mu.is_zero() {
        return Err(Error::OutOfRange("monodromy eigenvalue 0".into()));
    }
    if mu.is_exact() {
        for (m, r) in [
            (Scalar::one(), Scalar::zero()),
            (Scalar::int(-1), Scalar::ratio(1, 2)),
            (Scalar::gauss(0, 1, 1, 1), Scalar::ratio(1, 4)),
            (Scalar::gauss(0, 1, -1, 1), Scalar::ratio(3, 4)),
        ] {
            if *mu == m {
                return Ok(r);
            }
        }
    }
    let l = mu.to_c64().ln() / Complex64::new(0.0, 2.0 * PI);
    let re = l.re - l.re.floor();
    Ok(Scalar::float(if re >= 1.0 { 0.0 } else { re }, l.im))
}

/// All splittings `phi + rho`, `rho` from `rhos`, that satisfy the bounds of
/// [`remark3_bounds`]. Exact input only.
pub fn admissible_splits(n: usize, p: usize, rhos: &[Scalar]) -> Result<Vec<Exponent>> {
    let (lower, upper) = remark3_bounds(n, p)?;
    let lo = lower.floor().to_integer().to_i64().unwrap_or(0) - 1;
    let hi = upper.ceil().to_integer().to_i64().unwrap_or(0) + 1;
    let mut out = Vec::new();
    for rho in rhos {
        let re = rho.re();
        let Some(re) = re.exact_real() else {
            return Err(Error::ExactRequired("admissible splittings"));
        };
        if re.is_negative() || *re >= BigRational::one() {
            return Err(Error::OutOfRange(format!("rho = {} outside [0, 1)", rho)));
        }
        for phi in lo..=hi {
            let b = big(phi) + re;
            if b > lower && b < upper {
                out.push(Exponent { beta: &Scalar::int(phi) + rho, phi, rho: rho.clone() });
            }
        }
    }
    Ok(out)
}

/// Whether some choice of admissible splittings gives exponent sum zero.
///
/// `allowed[e]` lists the possible `rho` of exponent `e` (there are `n * p`
/// exponents). With `marked`, only assignments using that `rho` at least once
/// are considered. The search runs over the full product of per-exponent
/// choices, aggregated by the reachable partial sums.
pub fn fuchs_compatibility(n: usize, p: usize, allowed: &[Vec<Scalar>], marked: Option<&Scalar>) -> Result<ConditionVerdict> {
    if allowed.len() != n * p {
        return Err(Error::DimensionMismatch(format!("{} exponent slots for n = {}, p = {}", allowed.len(), n, p)));
    }
    let mut states: BTreeSet<(BigRational, BigRational, bool)> = BTreeSet::new();
    states.insert((BigRational::zero(), BigRational::zero(), marked.is_none()));
    let mut combinations: u128 = 1;
    for rhos in allowed {
        let choices = admissible_splits(n, p, rhos)?;
        combinations = combinations.saturating_mul(choices.len() as u128);
        let mut next = BTreeSet::new();
        for (re, im, seen) in &states {
            for c in &choices {
                let Scalar::Exact(b) = &c.beta else { unreachable!("exact splits") };
                let hit = *seen || marked.is_some_and(|m| *m == c.rho);
                next.insert((re + &b.re, im + &b.im, hit));
            }
        }
        states = next;
    }
    let reachable: Vec<&(BigRational, BigRational, bool)> = states.iter().filter(|s| s.2).collect();
    let zero_reachable = reachable.iter().any(|(re, im, _)| re.is_zero() && im.is_zero());
    let min = reachable.iter().map(|s| s.0.clone()).min();
    let (lower, _) = remark3_bounds(n, p)?;
    let status = if zero_reachable { Status::Holds } else { Status::Fails };
    let summary = match &min {
        Some(m) => format!("{} assignments; smallest reachable exponent sum {}", combinations, m),
        None => format!("{} assignments; none admissible", combinations),
    };
    let witnesses = if zero_reachable { vec![] } else { vec![Witness::global(format!("no assignment has exponent sum 0: {}", summary))] };
    Ok(ConditionVerdict::new(ConditionId::FuchsCompatibility, Some(Scalar::from_rational(lower)), witnesses, status, summary))
}
