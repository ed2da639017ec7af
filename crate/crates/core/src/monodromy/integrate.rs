//! Adaptive Dormand–Prince 5(4) integration of `dY/dz = B(z) Y` along paths.

use num::complex::Complex64;

use super::path::{Path, PathPiece};
use crate::error::{Error, Result};
use crate::numkernel::{fnorm, CMat};
use crate::system::Evaluator;

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order weights minus the embedded fourth-order weights.
const E: [f64; 7] = [71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0];

/// Integration controls.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OdeOptions {
    /// Local relative tolerance.
    pub rtol: f64,
    /// Largest step measured along the path.
    pub max_step: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions { rtol: 1e-11, max_step: f64::INFINITY, max_steps: 2_000_000 }
    }
}

/// End value of a continuation with an accumulated local error estimate.
#[derive(Clone, Debug)]
pub struct Transport {
    pub value: CMat,
    pub error_estimate: f64,
    pub steps: usize,
}

struct Rhs<'a> {
    eval: &'a Evaluator,
    piece: &'a PathPiece,
    b: CMat,
}

impl Rhs<'_> {
    fn apply(&mut self, t: f64, y: &CMat, out: &mut CMat) -> Result<()> {
        self.eval.eval_into(self.piece.point(t), &mut self.b)?;
        let dz = self.piece.derivative(t);
        out.gemm(dz, &self.b, y, Complex64::new(0.0, 0.0));
        Ok(())
    }
}

fn integrate_piece(eval: &Evaluator, piece: &PathPiece, y: &mut CMat, opts: &OdeOptions, stats: &mut Transport) -> Result<()> {
    let p = y.nrows();
    let len = piece.length();
    if len == 0.0 {
        return Ok(());
    }
    let h_max = (opts.max_step / len).min(1.0);
    let mut rhs = Rhs { eval, piece, b: CMat::zeros(p, p) };
    let mut k: Vec<CMat> = (0..7).map(|_| CMat::zeros(y.nrows(), y.ncols())).collect();
    let mut stage = y.clone();
    let mut t = 0.0;
    let mut h = h_max.min(0.01);
    rhs.apply(0.0, y, &mut k[0])?;
    while t < 1.0 {
        if stats.steps >= opts.max_steps {
            return Err(Error::Numerical(format!("step limit {} reached", opts.max_steps)));
        }
        if h < 1e-14 {
            return Err(Error::StepUnderflow(t));
        }
        let last = t + h >= 1.0;
        if last {
            h = 1.0 - t;
        }
        for s in 1..7 {
            stage.copy_from(y);
            for (j, a) in A[s].iter().enumerate().take(s) {
                if *a != 0.0 {
                    stage.zip_apply(&k[j], |o, x| *o += x * (h * a));
                }
            }
            rhs.apply(t + C[s] * h, &stage, &mut k[s])?;
        }
        // The last stage was evaluated at the fifth-order solution.
        let mut err = CMat::zeros(y.nrows(), y.ncols());
        for (j, e) in E.iter().enumerate() {
            if *e != 0.0 {
                err.zip_apply(&k[j], |o, x| *o += x * (h * e));
            }
        }
        if !stage.iter().all(|z| z.is_finite()) {
            return Err(Error::NonFinite(format!("solution at path parameter {}", t)));
        }
        let scale = opts.rtol * (1.0 + fnorm(y).max(fnorm(&stage)));
        let ratio = fnorm(&err) / scale;
        if ratio <= 1.0 {
            stats.error_estimate += fnorm(&err);
            stats.steps += 1;
            t = if last { 1.0 } else { t + h };
            y.copy_from(&stage);
            k.swap(0, 6);
        }
        let factor = if ratio == 0.0 { 5.0 } else { (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0) };
        h = (h * factor).min(h_max);
    }
    Ok(())
}

/// Transports the identity along `path`: the returned matrix `Y(end)` solves
/// `Y' = B Y`, `Y(start) = I`.
pub fn continue_along(eval: &Evaluator, path: &Path, opts: &OdeOptions) -> Result<Transport> {
    let p = eval.dimension();
    let mut stats = Transport { value: CMat::identity(p, p), error_estimate: 0.0, steps: 0 };
    let mut y = CMat::identity(p, p);
    for piece in &path.pieces {
        integrate_piece(eval, piece, &mut y, opts, &mut stats)?;
    }
    stats.value = y;
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkernel::{expm, MatrixC, Scalar};
    use crate::system::SystemSpec;
    use std::f64::consts::PI;

    #[test]
    fn zero_system_gives_identity() {
        let spec = SystemSpec::new(2, vec![], vec![]).unwrap();
        let path = Path::segment(Complex64::new(0.0, 0.0), Complex64::new(1.0, 2.0));
        let t = continue_along(&spec.evaluator(), &path, &OdeOptions::default()).unwrap();
        assert!(fnorm(&(t.value - CMat::identity(2, 2))) < 1e-15);
    }

    #[test]
    fn constant_system_matches_exponential() {
        let a = MatrixC::from_rows(vec![vec![Scalar::ratio(1, 2), Scalar::one()], vec![Scalar::gauss(0, 1, 1, 3), Scalar::ratio(-1, 4)]])
            .unwrap();
        let spec = SystemSpec::new(2, vec![], vec![a.clone()]).unwrap();
        let (from, to) = (Complex64::new(0.3, -0.2), Complex64::new(1.5, 0.9));
        let t = continue_along(&spec.evaluator(), &Path::segment(from, to), &OdeOptions::default()).unwrap();
        let expected = expm(&(a.to_float() * (to - from)));
        assert!(fnorm(&(t.value - &expected)) < 1e-10 * fnorm(&expected));
    }

    #[test]
    fn half_integer_residue_around_zero() {
        let r = MatrixC::diagonal(&[Scalar::ratio(1, 2), Scalar::ratio(-1, 2)]);
        let spec = SystemSpec::fuchsian(vec![(Scalar::zero(), r)]).unwrap();
        let path = Path::new(vec![PathPiece::circle(Complex64::new(0.0, 0.0), 1.0, 0.0)]);
        let t = continue_along(&spec.evaluator(), &path, &OdeOptions::default()).unwrap();
        assert!(fnorm(&(t.value + CMat::identity(2, 2))) < 1e-9);
        let half = Path::new(vec![PathPiece::Arc { center: Complex64::new(0.0, 0.0), radius: 1.0, start: 0.0, sweep: PI }]);
        let t = continue_along(&spec.evaluator(), &half, &OdeOptions::default()).unwrap();
        assert!((t.value[(0, 0)] - Complex64::new(0.0, 1.0)).norm() < 1e-9);
    }

    #[test]
    fn stops_at_a_pole() {
        let spec = SystemSpec::fuchsian(vec![(Scalar::zero(), MatrixC::diagonal(&[Scalar::ratio(1, 2)]))]).unwrap();
        let path = Path::segment(Complex64::new(-1.0, 0.0), Complex64::new(1.0, 0.0));
        assert!(continue_along(&spec.evaluator(), &path, &OdeOptions::default()).is_err());
    }
}
