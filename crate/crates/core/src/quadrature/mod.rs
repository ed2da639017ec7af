//! Explicit solutions of triangular systems by quadratures, and their
//! numerical verification.

mod eval;
mod expr;

use num::complex::Complex64;

pub use eval::{eval_matrix, eval_quad, Evaluation};
pub use expr::{solve_triangular, LaurentTerm, PowerFactor, QuadExpr};

use crate::error::Result;
use crate::monodromy::{continue_along, plan_loops, OdeOptions, Path};
use crate::numkernel::{fnorm, CMat};
use crate::system::SystemSpec;
use crate::verdict::{ConditionId, ConditionVerdict, Status, Witness};

/// Base point shared with the loop planner; the origin when there is no
/// finite singular point.
pub fn base_point(spec: &SystemSpec) -> Result<Complex64> {
    if spec.finite_points().is_empty() {
        return Ok(Complex64::new(0.0, 0.0));
    }
    Ok(plan_loops(spec)?.base)
}

/// Up to `count` sample points reachable from the base point by a straight
/// segment staying clear of the poles.
pub fn default_samples(spec: &SystemSpec, count: usize) -> Result<Vec<Complex64>> {
    let base = base_point(spec)?;
    let poles: Vec<Complex64> = spec.finite_points().iter().map(|p| p.finite_location().expect("finite").to_c64()).collect();
    let mut clearance = 0.25;
    for i in 0..poles.len() {
        for j in i + 1..poles.len() {
            clearance = f64::min(clearance, 0.25 * (poles[i] - poles[j]).norm());
        }
    }
    let scale = poles.iter().map(|a| a.norm()).fold(1.0, f64::max);
    let mut out = Vec::new();
    for radius in [0.5, 1.0, 1.5, 2.0] {
        for step in 0..12 {
            let z = base + Complex64::from_polar(radius * scale, 0.3 + step as f64 * std::f64::consts::PI / 6.0);
            let seg = Path::segment(base, z);
            if poles.iter().all(|&a| seg.distance_to(a) >= clearance) {
                out.push(z);
                if out.len() == count {
                    return Ok(out);
                }
            }
        }
    }
    Ok(out)
}

/// Checks at every sample that `Y' = B Y` holds within `rtol` (relative to
/// `||B Y||`) with `Y'` from the trees themselves, and that `Y` agrees with
/// numerical continuation of `Y(z0)` within `1e-7`.
pub fn verify_solution(spec: &SystemSpec, exprs: &[Vec<QuadExpr>], samples: &[Complex64], rtol: f64) -> Result<ConditionVerdict> {
    let base = base_point(spec)?;
    let y0 = eval_matrix(exprs, &Path::segment(base, base), 1e-13)?.value;
    let eval = spec.evaluator();
    let mut witnesses = Vec::new();
    let mut worst_ode: f64 = 0.0;
    let mut worst_cont: f64 = 0.0;
    for (i, &z) in samples.iter().enumerate() {
        let path = Path::segment(base, z);
        let ev = eval_matrix(exprs, &path, 1e-13)?;
        let by = eval.eval(z)? * &ev.value;
        let ode = fnorm(&(&ev.derivative - &by)) / fnorm(&by).max(f64::MIN_POSITIVE);
        let cont = continue_along(&eval, &path, &OdeOptions::default())?;
        let expected: CMat = &cont.value * &y0;
        let gap = fnorm(&(&ev.value - &expected)) / fnorm(&expected).max(1.0);
        worst_ode = worst_ode.max(ode);
        worst_cont = worst_cont.max(gap);
        if ode > rtol || gap > 1e-7 {
            witnesses.push(Witness {
                point: None,
                indices: vec![i],
                note: format!("at {z}: equation residual {ode:.3e}, continuation gap {gap:.3e}"),
            });
        }
    }
    let status = if witnesses.is_empty() { Status::Holds } else { Status::Fails };
    Ok(ConditionVerdict::new(
        ConditionId::SolutionCheck,
        None,
        witnesses,
        status,
        format!("{} samples, equation residual {worst_ode:.3e}, continuation gap {worst_cont:.3e}", samples.len()),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkernel::{eigenvalues_f, multiset, MatrixC, Scalar};
    use crate::system::{Location, SingularPoint};
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn fuchsian(poles: Vec<(Scalar, MatrixC)>) -> SystemSpec {
        SystemSpec::fuchsian(poles).unwrap()
    }

    #[test]
    fn constants_and_powers() {
        let k = QuadExpr::Const { value: Scalar::ratio(3, 4) };
        assert_eq!(eval_quad(&k, c(2.0, 1.0), c(1.0, 0.0), 1e-13).unwrap().0, c(0.75, 0.0));
        let root =
            QuadExpr::PowerProduct { powers: vec![PowerFactor { center: Scalar::zero(), exponent: Scalar::ratio(1, 2) }], exp: vec![] };
        let (v, _) = eval_quad(&root, c(4.0, 0.0), c(1.0, 0.0), 1e-13).unwrap();
        assert!((v - c(2.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn diagonal_residues() {
        let (al, be) = (Scalar::ratio(1, 3), Scalar::ratio(-1, 5));
        let spec = fuchsian(vec![(Scalar::zero(), MatrixC::diagonal(&[al, be]))]);
        let y = solve_triangular(&spec).unwrap();
        assert!(y[1][0].is_zero() && y[0][1].is_zero());
        assert_eq!(base_point(&spec).unwrap(), c(1.0, 0.0));
        let ev = eval_matrix(&y, &Path::segment(c(1.0, 0.0), c(2.0, 0.0)), 1e-13).unwrap();
        assert!((ev.value[(0, 0)] - c(2f64.powf(1.0 / 3.0), 0.0)).norm() < 1e-13);
        assert!((ev.value[(1, 1)] - c(2f64.powf(-0.2), 0.0)).norm() < 1e-13);
    }

    #[test]
    fn coupled_example() {
        let b = MatrixC::from_ints(&[&[0, 1], &[0, 1]]);
        let spec = fuchsian(vec![(Scalar::zero(), b)]);
        let y = solve_triangular(&spec).unwrap();
        // From the last equation: y_2 = z, then y_1' = y_2 / z = 1, so y_1 = z - z0.
        let ev = eval_matrix(&y, &Path::segment(c(1.0, 0.0), c(2.0, 0.0)), 1e-13).unwrap();
        let expected = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(2.0, 0.0)]);
        assert!(fnorm(&(&ev.value - &expected)) < 1e-13);
        let samples = default_samples(&spec, 5).unwrap();
        assert_eq!(samples.len(), 5);
        let v = verify_solution(&spec, &y, &samples, 1e-10).unwrap();
        assert!(v.holds(), "{}", v.detail);
    }

    #[test]
    fn irregular_scalar() {
        let b = Scalar::ratio(3, 2);
        let pt = SingularPoint::new(Location::Finite(Scalar::zero()), vec![MatrixC::zeros(1, 1), MatrixC::diagonal(&[b])]).unwrap();
        let spec = SystemSpec::new(1, vec![pt], vec![]).unwrap();
        let y = solve_triangular(&spec).unwrap();
        let z0 = base_point(&spec).unwrap();
        let z = c(0.7, 1.1);
        let (v, _) = eval_quad(&y[0][0], z, z0, 1e-13).unwrap();
        let expected = (-1.5 / z + 1.5 / z0).exp();
        assert!((v - expected).norm() < 1e-13 * expected.norm());
        let v = verify_solution(&spec, &y, &default_samples(&spec, 5).unwrap(), 1e-10).unwrap();
        assert!(v.holds(), "{}", v.detail);
    }

    fn three_by_three() -> SystemSpec {
        let r = |rows: [[i64; 3]; 3], den: i64| {
            MatrixC::from_rows(rows.iter().map(|row| row.iter().map(|&x| Scalar::ratio(x, den)).collect()).collect()).unwrap()
        };
        let p0 = SingularPoint::new(
            Location::Finite(Scalar::zero()),
            vec![r([[1, 2, -1], [0, -1, 3], [0, 0, 2]], 5), r([[1, 0, 1], [0, 2, 1], [0, 0, -1]], 4)],
        )
        .unwrap();
        let p1 = SingularPoint::new(Location::Finite(Scalar::gauss(1, 1, 1, 1)), vec![r([[-1, 1, 0], [0, 2, -2], [0, 0, 1]], 3)]).unwrap();
        SystemSpec::new(3, vec![p0, p1], vec![r([[0, 1, 0], [0, 0, 1], [0, 0, 0]], 7)]).unwrap()
    }

    #[test]
    fn irregular_three_by_three() {
        let spec = three_by_three();
        let y = solve_triangular(&spec).unwrap();
        for (j, row) in y.iter().enumerate() {
            assert!(row[..j].iter().all(QuadExpr::is_zero));
        }
        let v = verify_solution(&spec, &y, &default_samples(&spec, 5).unwrap(), 1e-9).unwrap();
        assert!(v.holds(), "{}", v.detail);
    }

    #[test]
    fn liouville_formula() {
        let spec = three_by_three();
        let y = solve_triangular(&spec).unwrap();
        let z0 = base_point(&spec).unwrap();
        let det0 = eval_matrix(&y, &Path::segment(z0, z0), 1e-13).unwrap().value.determinant();
        // int tr B along the segment, from the closed form of each partial fraction.
        let trace_integral = |z: Complex64| {
            let mut acc = c(0.0, 0.0);
            for pt in spec.finite_points() {
                let a = pt.finite_location().unwrap().to_c64();
                for (k, m) in pt.tail().iter().enumerate() {
                    let t = m.to_float().trace();
                    acc += if k == 0 {
                        t * ((z - a) / (z0 - a)).ln()
                    } else {
                        t * ((z - a).powi(-(k as i32)) - (z0 - a).powi(-(k as i32))) / -(k as f64)
                    };
                }
            }
            for (k, m) in spec.polynomial().iter().enumerate() {
                acc += m.to_float().trace() * (z.powi(k as i32 + 1) - z0.powi(k as i32 + 1)) / (k as f64 + 1.0);
            }
            acc
        };
        for z in default_samples(&spec, 5).unwrap() {
            let det = eval_matrix(&y, &Path::segment(z0, z), 1e-13).unwrap().value.determinant();
            let expected = det0 * trace_integral(z).exp();
            assert!((det - expected).norm() < 1e-8 * expected.norm().max(1.0), "{det} vs {expected}");
        }
    }

    #[test]
    fn monodromy_of_the_constructed_solution() {
        let r = |rows: [[i64; 2]; 2], den: i64| {
            MatrixC::from_rows(rows.iter().map(|row| row.iter().map(|&x| Scalar::ratio(x, den)).collect()).collect()).unwrap()
        };
        let spec = fuchsian(vec![
            (Scalar::zero(), r([[1, 3], [0, -2]], 5)),
            (Scalar::one(), r([[1, -1], [0, 1]], 3)),
            (Scalar::gauss(0, 1, 2, 1), r([[-1, 2], [0, 1]], 4)),
        ]);
        let y = solve_triangular(&spec).unwrap();
        let plan = plan_loops(&spec).unwrap();
        let y0 = eval_matrix(&y, &Path::segment(plan.base, plan.base), 1e-13).unwrap().value;
        let y0_inv = y0.clone().try_inverse().unwrap();
        for l in &plan.loops {
            let after = eval_matrix(&y, &l.path(), 1e-12).unwrap().value;
            let m = &y0_inv * after;
            let eigs = multiset(&eigenvalues_f(&m, 0.0).unwrap());
            let res = spec.finite_points()[l.point].residue().to_float();
            for j in 0..2 {
                let want = (c(0.0, 2.0 * PI) * res[(j, j)]).exp();
                assert!(eigs.iter().any(|e| (e - want).norm() < 1e-6), "{eigs:?} vs {want}");
            }
        }
    }

    #[test]
    fn rejects_non_triangular() {
        let spec = fuchsian(vec![(Scalar::zero(), MatrixC::from_ints(&[&[0, 0], &[1, 0]]))]);
        assert!(solve_triangular(&spec).is_err());
    }

    #[test]
    fn json_form() {
        let spec = fuchsian(vec![(Scalar::zero(), MatrixC::from_ints(&[&[0, 1], &[0, 1]]))]);
        let y = solve_triangular(&spec).unwrap();
        let v = serde_json::to_value(&y[0][1]).unwrap();
        assert_eq!(v["kind"], "product");
        assert_eq!(v["factors"][1]["terms"][0]["kind"], "integral");
        assert_eq!(serde_json::to_value(&y[1][0]).unwrap(), serde_json::json!({"kind": "const", "value": "0"}));
    }
}
