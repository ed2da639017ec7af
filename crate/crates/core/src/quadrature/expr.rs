//! Closed-form solution trees for triangular systems.

use std::fmt;

use num::complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numkernel::{MatrixC, Scalar};
use crate::system::SystemSpec;

/// `coeff * (z - center)^power`, or `coeff * z^power` without a center.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LaurentTerm {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub center: Option<Scalar>,
    pub power: i64,
    pub coeff: Scalar,
}

impl LaurentTerm {
    fn base(&self, z: Complex64) -> Complex64 {
        match &self.center {
            Some(a) => z - a.to_c64(),
            None => z,
        }
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeff.to_c64() * self.base(z).powi(self.power as i32)
    }

    pub fn derivative(&self, z: Complex64) -> Complex64 {
        if self.power == 0 {
            return Complex64::new(0.0, 0.0);
        }
        self.coeff.to_c64() * self.power as f64 * self.base(z).powi(self.power as i32 - 1)
    }
}

/// `(z - center)^exponent` on the branch continued from the principal one
/// at the base point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PowerFactor {
    pub center: Scalar,
    pub exponent: Scalar,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QuadExpr {
    Const {
        value: Scalar,
    },
    /// `prod (z - a)^c * exp(E(z) - E(z0))` with `E` the sum of `exp`
    /// terms and `z0` the base point.
    PowerProduct {
        powers: Vec<PowerFactor>,
        exp: Vec<LaurentTerm>,
    },
    /// `int_{z0}^{z} factor(t) integrand(t) dt`, `factor` a rational
    /// function in partial fractions.
    Integral {
        factor: Vec<LaurentTerm>,
        integrand: Box<QuadExpr>,
    },
    Sum {
        terms: Vec<QuadExpr>,
    },
    Product {
        factors: Vec<QuadExpr>,
    },
}

impl QuadExpr {
    pub fn zero() -> Self {
        QuadExpr::Const { value: Scalar::zero() }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, QuadExpr::Const { value } if value.is_zero())
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        1 + match self {
            QuadExpr::Const { .. } | QuadExpr::PowerProduct { .. } => 0,
            QuadExpr::Integral { integrand, .. } => integrand.size(),
            QuadExpr::Sum { terms: v } | QuadExpr::Product { factors: v } => v.iter().map(QuadExpr::size).sum(),
        }
    }

    fn reciprocal_power_product(&self) -> QuadExpr {
        match self {
            QuadExpr::PowerProduct { powers, exp } => QuadExpr::PowerProduct {
                powers: powers.iter().map(|f| PowerFactor { center: f.center.clone(), exponent: -&f.exponent }).collect(),
                exp: exp.iter().map(|t| LaurentTerm { coeff: -&t.coeff, ..t.clone() }).collect(),
            },
            _ => unreachable!("only power products are inverted"),
        }
    }
}

fn fmt_base(f: &mut fmt::Formatter<'_>, center: Option<&Scalar>) -> fmt::Result {
    match center {
        Some(a) if a.is_zero() => write!(f, "z"),
        Some(a) if a.im().is_zero() && a.to_c64().re < 0.0 => write!(f, "(z + {})", -a),
        Some(a) if a.re().is_zero() || a.im().is_zero() => write!(f, "(z - {})", a),
        Some(a) => write!(f, "(z - ({}))", a),
        None => write!(f, "z"),
    }
}

fn fmt_terms(f: &mut fmt::Formatter<'_>, terms: &[LaurentTerm]) -> fmt::Result {
    for (i, t) in terms.iter().enumerate() {
        if i > 0 {
            write!(f, " + ")?;
        }
        write!(f, "({})*", t.coeff)?;
        fmt_base(f, t.center.as_ref())?;
        write!(f, "^{}", t.power)?;
    }
    Ok(())
}

impl fmt::Display for QuadExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QuadExpr::Const { value } => write!(f, "{}", value),
            QuadExpr::PowerProduct { powers, exp } => {
                if powers.is_empty() && exp.is_empty() {
                    return write!(f, "1");
                }
                for (i, p) in powers.iter().enumerate() {
                    if i > 0 {
                        write!(f, "*")?;
                    }
                    fmt_base(f, Some(&p.center))?;
                    write!(f, "^({})", p.exponent)?;
                }
                if !exp.is_empty() {
                    if !powers.is_empty() {
                        write!(f, "*")?;
                    }
                    write!(f, "exp[")?;
                    fmt_terms(f, exp)?;
                    write!(f, "]")?;
                }
                Ok(())
            }
            QuadExpr::Integral { factor, integrand } => {
                write!(f, "int[")?;
                fmt_terms(f, factor)?;
                write!(f, "]*[{}] dz", integrand)
            }
            QuadExpr::Sum { terms } => {
                write!(f, "(")?;
                for (i, t) in terms.iter().enumerate() {
                    if i > 0 {
                        write!(f, " + ")?;
                    }
                    write!(f, "{}", t)?;
                }
                write!(f, ")")
            }
            QuadExpr::Product { factors } => {
                for (i, t) in factors.iter().enumerate() {
                    if i > 0 {
                        write!(f, " * ")?;
                    }
                    write!(f, "{}", t)?;
                }
                Ok(())
            }
        }
    }
}

fn is_triangular(m: &MatrixC) -> bool {
    if m.is_exact() {
        return m.is_upper_triangular();
    }
    m.max_below_diagonal() <= 1e-12 * m.norm().max(f64::MIN_POSITIVE)
}

/// Entry `(j, l)` of `B(z)` as partial fractions.
fn entry_terms(spec: &SystemSpec, j: usize, l: usize) -> Vec<LaurentTerm> {
    let mut out = Vec::new();
    for pt in spec.finite_points() {
        let a = pt.finite_location().expect("finite");
        for (k, m) in pt.tail().iter().enumerate() {
            let c = m.get(j, l);
            if !c.is_zero() {
                out.push(LaurentTerm { center: Some(a.clone()), power: -(k as i64) - 1, coeff: c.clone() });
            }
        }
    }
    for (k, m) in spec.polynomial().iter().enumerate() {
        let c = m.get(j, l);
        if !c.is_zero() {
            out.push(LaurentTerm { center: None, power: k as i64, coeff: c.clone() });
        }
    }
    out
}

/// `exp` of an antiderivative of the diagonal entry `b_jj`.
fn diagonal_solution(spec: &SystemSpec, j: usize) -> QuadExpr {
    let mut powers = Vec::new();
    let mut exp = Vec::new();
    for term in entry_terms(spec, j, j) {
        if term.power == -1 {
            powers.push(PowerFactor { center: term.center.expect("poles have centers"), exponent: term.coeff });
        } else {
            let q = term.power + 1;
            exp.push(LaurentTerm { center: term.center, power: q, coeff: &term.coeff / &Scalar::int(q) });
        }
    }
    QuadExpr::PowerProduct { powers, exp }
}

/// Upper-triangular fundamental matrix of a triangular system, built from
/// the last equation upwards: `y_kk = exp(int b_kk)` and, above the
/// diagonal, `y_jk = y_jj * int (sum_l b_jl y_lk) / y_jj`.
pub fn solve_triangular(spec: &SystemSpec) -> Result<Vec<Vec<QuadExpr>>> {
    let p = spec.dimension();
    if !spec.coefficient_matrices().iter().all(is_triangular) {
        return Err(Error::Unsupported("the coefficient matrices are not upper-triangular".into()));
    }
    let diag: Vec<QuadExpr> = (0..p).map(|j| diagonal_solution(spec, j)).collect();
    let mut y = vec![vec![QuadExpr::zero(); p]; p];
    for k in 0..p {
        y[k][k] = diag[k].clone();
        for j in (0..k).rev() {
            let inverse = diag[j].reciprocal_power_product();
            let integrals: Vec<QuadExpr> = (j + 1..=k)
                .filter(|&l| !y[l][k].is_zero())
                .filter_map(|l| {
                    let factor = entry_terms(spec, j, l);
                    (!factor.is_empty()).then(|| QuadExpr::Integral {
                        factor,
                        integrand: Box::new(QuadExpr::Product { factors: vec![inverse.clone(), y[l][k].clone()] }),
                    })
                })
                .collect();
            if !integrals.is_empty() {
                y[j][k] = QuadExpr::Product { factors: vec![diag[j].clone(), QuadExpr::Sum { terms: integrals }] };
            }
        }
    }
    Ok(y)
}
