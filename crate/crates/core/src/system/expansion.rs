use super::{PointRef, SystemSpec};
use crate::error::{Error, Result};
use crate::numkernel::{MatrixC, Scalar};

/// Laurent expansion of `B` at a singular point in the local coordinate
/// `t = z - a` (or `w = 1/z` at infinity, where the system reads
/// `dy/dw = -B(1/w)/w^2 y`).
///
/// `coeffs[k]` multiplies `t^{k - rank - 1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalExpansion {
    pub rank: usize,
    pub coeffs: Vec<MatrixC>,
}

fn binomial(n: i64, k: i64) -> Scalar {
    if k < 0 || k > n {
        return Scalar::zero();
    }
    let mut acc = Scalar::one();
    for i in 0..k {
        acc = &(&acc * &Scalar::int(n - i)) / &Scalar::int(i + 1);
    }
    acc
}

impl SystemSpec {
    /// First `nterms` Laurent coefficients of `B` at `pt`, exact when the
    /// data is exact.
    pub fn local_expansion(&self, pt: PointRef, nterms: usize) -> Result<LocalExpansion> {
        let p = self.dimension();
        let rank = self.poincare_rank(pt)?;
        let lead_power = -(rank as i64) - 1;
        let mut coeffs = vec![MatrixC::zeros(p, p); nterms];
        let mut add = |power: i64, m: &MatrixC, s: &Scalar| {
            let k = power - lead_power;
            if k >= 0 && (k as usize) < nterms && !s.is_zero() {
                let slot = &mut coeffs[k as usize];
                *slot = slot.add(&m.scale(s)).expect("same size");
            }
        };
        match pt {
            PointRef::Finite(i) => {
                let here = self.finite_points()[i].finite_location().expect("finite").clone();
                for (j, other) in self.finite_points().iter().enumerate() {
                    if j == i {
                        for (k, m) in other.tail().iter().enumerate() {
                            add(-(k as i64) - 1, m, &Scalar::one());
                        }
                        continue;
                    }
                    // (t + d)^{-m} = sum_j (-1)^j C(m+j-1, j) d^{-m-j} t^j, d = a - c
                    let d = &here - other.finite_location().expect("finite");
                    for (k, m) in other.tail().iter().enumerate() {
                        let order = k as i64 + 1;
                        for jpow in 0..nterms as i64 {
                            let power = jpow;
                            if power - lead_power >= nterms as i64 {
                                break;
                            }
                            let sign = if jpow % 2 == 0 { Scalar::one() } else { Scalar::int(-1) };
                            let coef = &(&sign * &binomial(order + jpow - 1, jpow)) * &d.powi(-(order + jpow) as i32);
                            add(power, m, &coef);
                        }
                    }
                }
                // z^d = (a + t)^d
                for (deg, m) in self.polynomial().iter().enumerate() {
                    let deg = deg as i64;
                    for jpow in 0..=deg {
                        let coef = &binomial(deg, jpow) * &here.powi((deg - jpow) as i32);
                        add(jpow, m, &coef);
                    }
                }
            }
            PointRef::Infinity => {
                // c-tail of order m: -B sum_j C(m+j-1, j) c^j w^{m+j-2}
                for other in self.finite_points() {
                    let c = other.finite_location().expect("finite");
                    for (k, m) in other.tail().iter().enumerate() {
                        let order = k as i64 + 1;
                        for jpow in 0..nterms as i64 {
                            let power = order + jpow - 2;
                            if power - lead_power >= nterms as i64 {
                                break;
                            }
                            let coef = -(&binomial(order + jpow - 1, jpow) * &c.powi(jpow as i32));
                            add(power, m, &coef);
                        }
                    }
                }
                for (deg, m) in self.polynomial().iter().enumerate() {
                    add(-(deg as i64) - 2, m, &Scalar::int(-1));
                }
            }
        }
        if coeffs.first().is_some_and(MatrixC::is_zero) {
            return Err(Error::Numerical(format!("leading coefficient at {} vanished", pt)));
        }
        Ok(LocalExpansion { rank, coeffs })
    }
}
