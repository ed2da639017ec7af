//! Monodromy matrices by numerical continuation along planned loops.
//!
//! Convention: for a path `g` starting at `z0`, `T_g` is `Y(end)` for the
//! solution with `Y(z0) = I`. The monodromy around `a_i` is `T` of its loop,
//! and transport composes as `T_{g h} = T_h T_g`.

mod integrate;
mod path;
mod plan;

use std::f64::consts::PI;

use num::complex::Complex64;

pub use integrate::{continue_along, OdeOptions, Transport};
pub use path::{Path, PathPiece};
pub use plan::{plan_for_points, plan_loops, LoopPlan, PlannedLoop};

use crate::error::{Error, Result};
use crate::exponents::{fuchsian_exponents, monodromy_eigenvalue, Exponent};
use crate::numkernel::{eigenvalues_f, expm, fnorm, multiset, CMat};
use crate::system::{PointRef, SystemSpec};
use crate::verdict::{ConditionId, ConditionVerdict, Status, Witness};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonodromyOptions {
    pub rtol: f64,
    /// Integrate the loops on separate threads.
    pub parallel: bool,
}

impl Default for MonodromyOptions {
    fn default() -> Self {
        MonodromyOptions { rtol: 1e-11, parallel: true }
    }
}

#[derive(Clone, Debug)]
pub struct MonodromyResult {
    pub plan: LoopPlan,
    /// `M_i` indexed like the finite points of the system.
    pub matrices: Vec<CMat>,
    /// Accumulated local error estimate per loop, indexed like `matrices`.
    pub loop_errors: Vec<f64>,
    /// Transport along the outer circle.
    pub outer: CMat,
    /// `M_{i_n} ... M_{i_1}` with the loops in plan order.
    pub product: CMat,
    /// What the product is compared against: `I` when infinity is a regular
    /// point, otherwise `outer`.
    pub expected: CMat,
    pub product_residual: f64,
}

impl MonodromyResult {
    /// Monodromy around infinity: transport along the outer circle run
    /// clockwise.
    pub fn at_infinity(&self) -> Result<CMat> {
        self.outer.clone().try_inverse().ok_or_else(|| Error::Numerical("singular transport along the outer circle".into()))
    }

    pub fn matrix(&self, pt: PointRef) -> Result<CMat> {
        match pt {
            PointRef::Finite(i) => self.matrices.get(i).cloned().ok_or(Error::UnknownPoint(pt.to_string())),
            PointRef::Infinity => self.at_infinity(),
        }
    }
}

fn transport_all(spec: &SystemSpec, paths: &[Path], opts: &OdeOptions, parallel: bool) -> Result<Vec<Transport>> {
    let eval = spec.evaluator();
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    if !parallel || paths.len() < 2 || cores < 2 {
        return paths.iter().map(|p| continue_along(&eval, p, opts)).collect();
    }
    std::thread::scope(|s| {
        let handles: Vec<_> = paths.iter().map(|p| s.spawn(|| continue_along(&eval, p, opts))).collect();
        handles.into_iter().map(|h| h.join().expect("continuation thread panicked")).collect()
    })
}

/// Monodromy matrices around every finite singular point.
pub fn monodromy(spec: &SystemSpec, opts: &MonodromyOptions) -> Result<MonodromyResult> {
    let plan = plan_loops(spec)?;
    monodromy_with_plan(spec, plan, opts)
}

pub fn monodromy_with_plan(spec: &SystemSpec, plan: LoopPlan, opts: &MonodromyOptions) -> Result<MonodromyResult> {
    let ode = OdeOptions { rtol: opts.rtol, max_step: plan.delta_min / 8.0, ..OdeOptions::default() };
    let mut paths: Vec<Path> = plan.loops.iter().map(PlannedLoop::path).collect();
    paths.push(plan.outer.clone());
    let mut transports = transport_all(spec, &paths, &ode, opts.parallel)?;
    let outer = transports.pop().expect("outer circle").value;
    let p = spec.dimension();
    let n = plan.loops.iter().map(|l| l.point + 1).max().unwrap_or(0).max(spec.finite_points().len());
    let mut matrices = vec![CMat::identity(p, p); n];
    let mut loop_errors = vec![0.0; n];
    let mut product = CMat::identity(p, p);
    for (l, t) in plan.loops.iter().zip(transports) {
        product = &t.value * &product;
        matrices[l.point] = t.value;
        loop_errors[l.point] = t.error_estimate;
    }
    let expected = if spec.infinity_rank().is_none() { CMat::identity(p, p) } else { outer.clone() };
    let product_residual = fnorm(&(&product - &expected));
    Ok(MonodromyResult { plan, matrices, loop_errors, outer, product, expected, product_residual })
}

/// Bottleneck assignment: the smallest `t` such that every row can be matched
/// to a distinct column with cost at most `t`, with the matching.
fn bottleneck_matching(cost: &[Vec<f64>]) -> (f64, Vec<usize>) {
    let n = cost.len();
    let mut levels: Vec<f64> = cost.iter().flatten().copied().collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let try_level = |t: f64| -> Option<Vec<usize>> {
        let mut owner: Vec<Option<usize>> = vec![None; n];
        fn augment(r: usize, t: f64, cost: &[Vec<f64>], seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
            for c in 0..cost.len() {
                if cost[r][c] <= t && !seen[c] {
                    seen[c] = true;
                    if owner[c].is_none_or(|o| augment(o, t, cost, seen, owner)) {
                        owner[c] = Some(r);
                        return true;
                    }
                }
            }
            false
        }
        for r in 0..n {
            let mut seen = vec![false; n];
            if !augment(r, t, cost, &mut seen, &mut owner) {
                return None;
            }
        }
        let mut rows = vec![0; n];
        for (c, o) in owner.iter().enumerate() {
            rows[o.expect("perfect matching")] = c;
        }
        Some(rows)
    };
    let (mut lo, mut hi) = (0, levels.len().saturating_sub(1));
    while lo < hi {
        let mid = (lo + hi) / 2;
        if try_level(levels[mid]).is_some() {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let t = levels.get(lo).copied().unwrap_or(0.0);
    (t, try_level(t).unwrap_or_default())
}

/// Distance between the spectrum of `m` and the predicted values.
///
/// Predicted values that coincide (within `tol`) form a group; the computed
/// eigenvalues matched to a group of size `k` may spread like `eps^(1/k)`
/// around a Jordan block, so the group is compared through its mean, with
/// each member allowed a spread of `tol^(1/k)`.
pub fn spectral_mismatch(m: &CMat, predicted: &[Complex64], tol: f64) -> Result<f64> {
    let computed = multiset(&eigenvalues_f(m, 0.0)?);
    if computed.len() != predicted.len() {
        return Err(Error::DimensionMismatch(format!("{} eigenvalues against {} predictions", computed.len(), predicted.len())));
    }
    let cost: Vec<Vec<f64>> = predicted.iter().map(|mu| computed.iter().map(|l| (l - mu).norm()).collect()).collect();
    let (_, rows) = bottleneck_matching(&cost);
    let mut done = vec![false; predicted.len()];
    let mut worst: f64 = 0.0;
    for i in 0..predicted.len() {
        if done[i] {
            continue;
        }
        let group: Vec<usize> = (i..predicted.len()).filter(|&j| !done[j] && (predicted[j] - predicted[i]).norm() <= tol).collect();
        let k = group.len();
        let mut mean_c = Complex64::new(0.0, 0.0);
        let mut mean_p = Complex64::new(0.0, 0.0);
        let mut spread: f64 = 0.0;
        for &j in &group {
            done[j] = true;
            mean_c += computed[rows[j]];
            mean_p += predicted[j];
            spread = spread.max(cost[j][rows[j]]);
        }
        let kf = k as f64;
        let mean_dev = ((mean_c - mean_p) / kf).norm();
        let allowed = tol.powf(1.0 / kf);
        // Report a spread beyond its allowance on the same scale as `tol`.
        let spread_dev = if spread <= allowed { 0.0 } else { spread.powf(kf) };
        worst = worst.max(mean_dev).max(spread_dev);
    }
    Ok(worst)
}

/// Checks that the spectrum of each monodromy matrix is `exp(2 pi i beta)`
/// over the exponents at that point. Points whose exponents are neither
/// computable nor asserted are skipped; infinity is included when singular.
pub fn check_exponent_consistency(spec: &SystemSpec, result: &MonodromyResult, eig_tol: f64, tol: f64) -> Result<ConditionVerdict> {
    let mut witnesses = Vec::new();
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for pt in spec.singular_points() {
        let exps: Vec<Exponent> = match collect_point(spec, pt, eig_tol) {
            Some(e) => e,
            None => continue,
        };
        let predicted: Vec<Complex64> = exps.iter().map(monodromy_eigenvalue).collect();
        let dev = spectral_mismatch(&result.matrix(pt)?, &predicted, tol)?;
        checked += 1;
        worst = worst.max(dev);
        if dev > tol {
            witnesses.push(Witness::at(pt, vec![], format!("spectrum off by {dev:.3e}")));
        }
    }
    let status = if witnesses.is_empty() { Status::Holds } else { Status::Fails };
    Ok(ConditionVerdict::new(
        ConditionId::ExponentConsistency,
        None,
        witnesses,
        status,
        format!("{checked} points checked, largest deviation {worst:.3e}"),
    ))
}

fn collect_point(spec: &SystemSpec, pt: PointRef, eig_tol: f64) -> Option<Vec<Exponent>> {
    if spec.poincare_rank(pt).ok()? == 0 {
        return fuchsian_exponents(spec, pt, eig_tol).ok();
    }
    spec.asserted_exponents(pt).map(|given| given.iter().cloned().map(Exponent::split).collect())
}

/// Checks `exp(2 pi i Lambda) = M C_1 ... C_N` and that each `C_j` is
/// unipotent.
pub fn verify_formal_monodromy(lambda: &CMat, m: &CMat, stokes: &[CMat], tol: f64) -> Result<ConditionVerdict> {
    let p = lambda.nrows();
    for (name, a) in std::iter::once(("Lambda", lambda)).chain(std::iter::once(("M", m))).chain(stokes.iter().map(|c| ("Stokes matrix", c)))
    {
        if a.nrows() != p || a.ncols() != p {
            return Err(Error::DimensionMismatch(format!("{name} is {}x{}, expected {p}x{p}", a.nrows(), a.ncols())));
        }
    }
    let lhs = expm(&(lambda * Complex64::new(0.0, 2.0 * PI)));
    let rhs = stokes.iter().fold(m.clone(), |acc, c| acc * c);
    let residual = fnorm(&(&lhs - &rhs));
    let mut witnesses = Vec::new();
    if residual > tol {
        witnesses.push(Witness::global(format!("||exp(2 pi i Lambda) - M C|| = {residual:.3e}")));
    }
    for (j, c) in stokes.iter().enumerate() {
        let eigs = multiset(&eigenvalues_f(c, 0.0)?);
        let off = eigs.iter().map(|l| (l - Complex64::new(1.0, 0.0)).norm()).fold(0.0, f64::max);
        if off > tol {
            witnesses.push(Witness {
                point: None,
                indices: vec![j],
                note: format!("Stokes matrix {j} has an eigenvalue {off:.3e} away from 1"),
            });
        }
    }
    let status = if witnesses.is_empty() { Status::Holds } else { Status::Fails };
    Ok(ConditionVerdict::new(ConditionId::FormalMonodromy, None, witnesses, status, format!("residual {residual:.3e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkernel::{MatrixC, Scalar};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn diag_spec(poles: &[(Scalar, &[Scalar])]) -> SystemSpec {
        SystemSpec::fuchsian(poles.iter().map(|(a, d)| (a.clone(), MatrixC::diagonal(d))).collect()).unwrap()
    }

    fn diag_closed_form(d: &[Scalar]) -> CMat {
        CMat::from_diagonal(&nalgebra::DVector::from_iterator(
            d.len(),
            d.iter().map(|x| (Complex64::new(0.0, 2.0 * PI) * x.to_c64()).exp()),
        ))
    }

    #[test]
    fn diagonal_residues() {
        let r0 = [Scalar::ratio(1, 3), Scalar::ratio(-1, 5)];
        let r1 = [Scalar::ratio(1, 7), Scalar::ratio(2, 9)];
        let ri = [Scalar::ratio(-1, 4), Scalar::ratio(1, 8)];
        let spec = diag_spec(&[(Scalar::zero(), &r0), (Scalar::one(), &r1), (Scalar::gauss(0, 1, 1, 1), &ri)]);
        let res = monodromy(&spec, &MonodromyOptions::default()).unwrap();
        for (i, r) in [&r0[..], &r1[..], &ri[..]].iter().enumerate() {
            assert!(fnorm(&(&res.matrices[i] - diag_closed_form(r))) < 1e-8, "point {i}");
        }
        assert!(res.product_residual < 1e-7);
        let v = check_exponent_consistency(&spec, &res, 1e-9, 1e-6).unwrap();
        assert!(v.holds(), "{}", v.detail);
    }

    #[test]
    fn zero_system() {
        let spec = SystemSpec::new(2, vec![], vec![]).unwrap();
        let plan = plan_for_points(&[c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        let res = monodromy_with_plan(&spec, plan, &MonodromyOptions::default()).unwrap();
        for m in &res.matrices {
            assert!(fnorm(&(m - CMat::identity(2, 2))) < 1e-12);
        }
    }

    #[test]
    fn euler_nilpotent() {
        let a = MatrixC::from_rows(vec![vec![Scalar::zero(), Scalar::one()], vec![Scalar::zero(), Scalar::zero()]]).unwrap();
        let spec = SystemSpec::fuchsian(vec![(Scalar::zero(), a.clone())]).unwrap();
        let res = monodromy(&spec, &MonodromyOptions::default()).unwrap();
        let expected = expm(&(a.to_float() * c(0.0, 2.0 * PI)));
        assert!((expected[(0, 1)] - c(0.0, 2.0 * PI)).norm() < 1e-12);
        assert!(fnorm(&(&res.matrices[0] - &expected)) < 1e-8);
        // Infinity is singular with residue -A, and the product matches the outer circle.
        assert!(res.product_residual < 1e-7);
        let v = check_exponent_consistency(&spec, &res, 1e-9, 1e-6).unwrap();
        assert!(v.holds(), "{}", v.detail);
    }

    fn generic_spec() -> SystemSpec {
        let m = |rows: [[(i64, i64); 2]; 2]| {
            MatrixC::from_rows(rows.iter().map(|r| r.iter().map(|&(n, d)| Scalar::ratio(n, d)).collect()).collect()).unwrap()
        };
        SystemSpec::fuchsian(vec![
            (Scalar::zero(), m([[(1, 5), (1, 3)], [(-1, 7), (0, 1)]])),
            (Scalar::one(), m([[(-1, 9), (1, 4)], [(1, 2), (1, 6)]])),
            (Scalar::gauss(1, 2, 1, 1), m([[(1, 8), (0, 1)], [(1, 3), (-1, 5)]])),
        ])
        .unwrap()
    }

    #[test]
    fn product_over_all_loops() {
        let spec = generic_spec();
        let res = monodromy(&spec, &MonodromyOptions::default()).unwrap();
        assert!(res.product_residual < 1e-7, "{}", res.product_residual);
        let v = check_exponent_consistency(&spec, &res, 1e-9, 1e-6).unwrap();
        assert!(v.holds(), "{}", v.detail);
        // Regular infinity: the outer circle is trivial as well.
        let balanced = SystemSpec::fuchsian(vec![
            (Scalar::zero(), MatrixC::diagonal(&[Scalar::ratio(1, 3), Scalar::ratio(1, 5)])),
            (Scalar::one(), MatrixC::diagonal(&[Scalar::ratio(-1, 3), Scalar::ratio(-1, 5)])),
        ])
        .unwrap();
        let res = monodromy(&balanced, &MonodromyOptions::default()).unwrap();
        assert!(fnorm(&(&res.outer - CMat::identity(2, 2))) < 1e-8);
        assert!(res.product_residual < 1e-8);
    }

    #[test]
    fn liouville_and_homotopy() {
        let spec = generic_spec();
        let res = monodromy(&spec, &MonodromyOptions::default()).unwrap();
        for (i, pt) in spec.finite_points().iter().enumerate() {
            let tr = pt.residue().to_float().trace();
            assert!((res.matrices[i].determinant() - (c(0.0, 2.0 * PI) * tr).exp()).norm() < 1e-8);
        }
        let mut plan = plan_loops(&spec).unwrap();
        for l in &mut plan.loops {
            l.radius *= 0.5;
            let start = l.approach.end().unwrap();
            let u = (start - l.center) / (start - l.center).norm();
            let shrunk = l.center + u * l.radius;
            let mut pieces = l.approach.pieces.clone();
            pieces.push(PathPiece::Segment { from: start, to: shrunk });
            l.approach = Path::new(pieces);
        }
        let small = monodromy_with_plan(&spec, plan, &MonodromyOptions::default()).unwrap();
        for i in 0..3 {
            assert!(fnorm(&(&res.matrices[i] - &small.matrices[i])) < 1e-7);
        }
    }

    #[test]
    fn sequential_matches_parallel() {
        let spec = generic_spec();
        let a = monodromy(&spec, &MonodromyOptions { parallel: true, ..Default::default() }).unwrap();
        let b = monodromy(&spec, &MonodromyOptions { parallel: false, ..Default::default() }).unwrap();
        assert_eq!(a.matrices, b.matrices);
    }

    #[test]
    fn formal_monodromy_examples() {
        let z = CMat::zeros(2, 2);
        let id = CMat::identity(2, 2);
        assert!(verify_formal_monodromy(&z, &id, &[], 1e-10).unwrap().holds());
        let lambda = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![c(0.5, 0.0), c(0.0, 0.0)]));
        let m = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![c(-1.0, 0.0), c(1.0, 0.0)]));
        assert!(verify_formal_monodromy(&lambda, &m, std::slice::from_ref(&id), 1e-10).unwrap().holds());
        let bad = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![c(2.0, 0.0), c(0.5, 0.0)]));
        let v = verify_formal_monodromy(&z, &bad, std::slice::from_ref(&bad), 1e-10).unwrap();
        assert!(!v.holds());
        assert!(v.witnesses.iter().any(|w| w.indices == vec![0]));
        assert!(verify_formal_monodromy(&z, &CMat::identity(3, 3), &[], 1e-10).is_err());
    }

    #[test]
    fn mismatch_tolerates_jordan_spread() {
        let eps = 1e-12;
        let m = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(eps, 0.0), c(1.0, 0.0)]);
        let dev = spectral_mismatch(&m, &[c(1.0, 0.0), c(1.0, 0.0)], 1e-6).unwrap();
        assert!(dev < 1e-9);
        let dev = spectral_mismatch(&m, &[c(1.0, 0.0), c(-1.0, 0.0)], 1e-6).unwrap();
        assert!(dev > 1.0);
    }
}
