//! Univariate polynomials over the Gaussian rationals.
//!
//! Used to obtain exact characteristic polynomials and their square-free
//! factorisation, which fixes eigenvalue multiplicities without any
//! floating-point clustering.

use nalgebra::DMatrix;
use num::complex::{Complex, Complex64};
use num::rational::BigRational;
use num::{One, Zero};

use super::matrix::MatrixC;
use super::scalar::{gauss_to_c64, GaussRational, Scalar};

/// Coefficients from the constant term upwards; no trailing zeros.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly(pub Vec<GaussRational>);

fn trim(mut c: Vec<GaussRational>) -> Vec<GaussRational> {
    while c.last().is_some_and(Zero::is_zero) {
        c.pop();
    }
    c
}

impl Poly {
    pub fn new(c: Vec<GaussRational>) -> Self {
        Poly(trim(c))
    }

    pub fn degree(&self) -> Option<usize> {
        self.0.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn eval(&self, x: &GaussRational) -> GaussRational {
        self.0.iter().rev().fold(GaussRational::zero(), |acc, c| acc * x + c)
    }

    pub fn eval_c64(&self, x: Complex64) -> Complex64 {
        self.0.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * x + gauss_to_c64(c))
    }

    pub fn derivative(&self) -> Poly {
        Poly::new(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * Complex::new(BigRational::from_integer((k as i64).into()), BigRational::zero()))
                .collect(),
        )
    }

    pub fn monic(&self) -> Poly {
        match self.0.last() {
            Some(lead) => Poly(self.0.iter().map(|c| c / lead).collect()),
            None => self.clone(),
        }
    }

    /// Euclidean division, `self = q * d + r`.
    pub fn div_rem(&self, d: &Poly) -> (Poly, Poly) {
        let dd = d.degree().expect("division by the zero polynomial");
        let lead = d.0[dd].clone();
        let mut r = self.0.clone();
        let mut q = vec![GaussRational::zero(); self.0.len().saturating_sub(dd)];
        while r.len() > dd && !r.is_empty() {
            let k = r.len() - 1 - dd;
            let f = r.last().unwrap() / &lead;
            for (i, c) in d.0.iter().enumerate() {
                r[k + i] = &r[k + i] - &(&f * c);
            }
            q[k] = f;
            r.pop();
            r = trim(r);
        }
        (Poly::new(q), Poly::new(r))
    }

    pub fn gcd(a: &Poly, b: &Poly) -> Poly {
        let (mut a, mut b) = (a.clone(), b.clone());
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b);
            a = b;
            b = r.monic();
        }
        a.monic()
    }

    /// Yun's square-free factorisation: returns `(s_k, k)` with
    /// `self = lead * prod s_k^k`, each `s_k` square-free and monic.
    pub fn squarefree(&self) -> Vec<(Poly, usize)> {
        let mut out = Vec::new();
        if self.degree().unwrap_or(0) == 0 {
            return out;
        }
        let f = self.monic();
        let fp = f.derivative();
        let a = Poly::gcd(&f, &fp);
        let mut b = f.div_rem(&a).0;
        let mut c = fp.div_rem(&a).0;
        let mut d = sub(&c, &b.derivative());
        let mut k = 1;
        loop {
            let g = Poly::gcd(&b, &d);
            if g.degree().unwrap_or(0) > 0 {
                out.push((g.clone(), k));
            }
            b = b.div_rem(&g).0;
            if b.degree().unwrap_or(0) == 0 {
                break;
            }
            c = d.div_rem(&g).0;
            d = sub(&c, &b.derivative());
            k += 1;
        }
        out
    }

    /// Numerical roots (eigenvalues of the companion matrix, Newton polished).
    pub fn roots_c64(&self) -> Vec<Complex64> {
        let Some(n) = self.degree() else { return vec![] };
        if n == 0 {
            return vec![];
        }
        let m = self.monic();
        let coeffs: Vec<Complex64> = m.0.iter().map(gauss_to_c64).collect();
        let mut comp = DMatrix::<Complex64>::zeros(n, n);
        for i in 1..n {
            comp[(i, i - 1)] = Complex64::new(1.0, 0.0);
        }
        for i in 0..n {
            comp[(i, n - 1)] = -coeffs[i];
        }
        let roots = comp.schur().eigenvalues().map(|v| v.iter().copied().collect::<Vec<_>>()).unwrap_or_default();
        let dm = m.derivative();
        roots
            .into_iter()
            .map(|mut x| {
                for _ in 0..4 {
                    let fx = m.eval_c64(x);
                    let dfx = dm.eval_c64(x);
                    if dfx.norm() == 0.0 {
                        break;
                    }
                    let step = fx / dfx;
                    if !step.is_finite() {
                        break;
                    }
                    x -= step;
                }
                x
            })
            .collect()
    }
}

fn sub(a: &Poly, b: &Poly) -> Poly {
    let n = a.0.len().max(b.0.len());
    let z = GaussRational::zero();
    Poly::new((0..n).map(|i| a.0.get(i).unwrap_or(&z) - b.0.get(i).unwrap_or(&z)).collect())
}

/// Exact characteristic polynomial `det(x I - M)` via Faddeev-LeVerrier.
/// `None` when `m` has float entries.
pub fn char_poly(m: &MatrixC) -> Option<Poly> {
    if !m.is_exact() || !m.is_square() {
        return None;
    }
    let n = m.rows();
    let mut coeffs = vec![GaussRational::zero(); n + 1];
    coeffs[n] = GaussRational::one();
    let mut mk = MatrixC::zeros(n, n);
    for k in 1..=n {
        // M_k = A M_{k-1} + c_{n-k+1} I
        let mut next = m.mul(&mk).ok()?;
        let c_prev = Scalar::Exact(coeffs[n - k + 1].clone());
        for i in 0..n {
            next.set(i, i, next.get(i, i) + &c_prev);
        }
        let am = m.mul(&next).ok()?;
        let tr = am.trace().ok()?;
        let c = -(&tr / &Scalar::int(k as i64));
        coeffs[n - k] = c.as_exact()?.clone();
        mk = next;
    }
    Some(Poly::new(coeffs))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(n: i64) -> GaussRational {
        Complex::new(BigRational::from_integer(n.into()), BigRational::zero())
    }

    #[test]
    fn char_poly_of_triangular() {
        let m = MatrixC::from_ints(&[&[2, 1], &[0, 3]]);
        // (x-2)(x-3) = x^2 - 5x + 6
        assert_eq!(char_poly(&m).unwrap(), Poly::new(vec![g(6), g(-5), g(1)]));
    }

    #[test]
    fn squarefree_separates_multiplicities() {
        // (x-1)^2 (x+2)
        let p = Poly::new(vec![g(2), g(-3), g(0), g(1)]);
        let sf = p.squarefree();
        assert_eq!(sf.len(), 2);
        assert_eq!(sf[0], (Poly::new(vec![g(2), g(1)]), 1));
        assert_eq!(sf[1], (Poly::new(vec![g(-1), g(1)]), 2));
    }
}
