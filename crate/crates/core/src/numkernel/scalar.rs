use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num::bigint::BigInt;
use num::complex::{Complex, Complex64};
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Gaussian rational `a + b i` with `a, b` arbitrary-precision rationals.
pub type GaussRational = Complex<BigRational>;

/// A complex scalar, either exact (Gaussian rational) or binary64.
///
/// Arithmetic between two exact values stays exact. Mixing an exact and a
/// float operand yields a float. There is no float to exact conversion.
#[derive(Clone, Debug)]
pub enum Scalar {
    Exact(GaussRational),
    Float(Complex64),
}

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn rational_to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or_else(|| if q.is_negative() { f64::NEG_INFINITY } else { f64::INFINITY })
}

pub fn gauss_to_c64(z: &GaussRational) -> Complex64 {
    Complex64::new(rational_to_f64(&z.re), rational_to_f64(&z.im))
}

impl Scalar {
    pub fn zero() -> Self {
        Scalar::Exact(GaussRational::zero())
    }

    pub fn one() -> Self {
        Scalar::Exact(GaussRational::one())
    }

    pub fn int(n: i64) -> Self {
        Scalar::Exact(Complex::new(BigRational::from_integer(n.into()), BigRational::zero()))
    }

    pub fn ratio(n: i64, d: i64) -> Self {
        Scalar::Exact(Complex::new(rat(n, d), BigRational::zero()))
    }

    /// `(re_n/re_d) + (im_n/im_d) i`
    pub fn gauss(re_n: i64, re_d: i64, im_n: i64, im_d: i64) -> Self {
        Scalar::Exact(Complex::new(rat(re_n, re_d), rat(im_n, im_d)))
    }

    pub fn from_rational(q: BigRational) -> Self {
        Scalar::Exact(Complex::new(q, BigRational::zero()))
    }

    pub fn float(re: f64, im: f64) -> Self {
        Scalar::Float(Complex64::new(re, im))
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Scalar::Exact(_))
    }

    pub fn as_exact(&self) -> Option<&GaussRational> {
        match self {
            Scalar::Exact(z) => Some(z),
            Scalar::Float(_) => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Exact(z) => z.is_zero(),
            Scalar::Float(z) => z.re == 0.0 && z.im == 0.0,
        }
    }

    pub fn to_c64(&self) -> Complex64 {
        match self {
            Scalar::Exact(z) => gauss_to_c64(z),
            Scalar::Float(z) => *z,
        }
    }

    pub fn to_float(&self) -> Scalar {
        Scalar::Float(self.to_c64())
    }

    pub fn re(&self) -> Scalar {
        match self {
            Scalar::Exact(z) => Scalar::from_rational(z.re.clone()),
            Scalar::Float(z) => Scalar::float(z.re, 0.0),
        }
    }

    pub fn im(&self) -> Scalar {
        match self {
            Scalar::Exact(z) => Scalar::from_rational(z.im.clone()),
            Scalar::Float(z) => Scalar::float(z.im, 0.0),
        }
    }

    pub fn conj(&self) -> Scalar {
        match self {
            Scalar::Exact(z) => Scalar::Exact(z.conj()),
            Scalar::Float(z) => Scalar::Float(z.conj()),
        }
    }

    pub fn abs(&self) -> f64 {
        self.to_c64().norm()
    }

    /// `Some(q)` when the value is exact and purely real.
    pub fn exact_real(&self) -> Option<&BigRational> {
        match self {
            Scalar::Exact(z) if z.im.is_zero() => Some(&z.re),
            _ => None,
        }
    }

    pub fn is_real_integer(&self) -> Option<bool> {
        match self {
            Scalar::Exact(z) => Some(z.im.is_zero() && z.re.is_integer()),
            Scalar::Float(_) => None,
        }
    }

    pub fn checked_div(&self, rhs: &Scalar) -> Result<Scalar> {
        if rhs.is_zero() {
            return Err(Error::Numerical("division by zero".into()));
        }
        Ok(self / rhs)
    }

    pub fn powi(&self, n: i32) -> Scalar {
        if n < 0 {
            return &Scalar::one() / &self.powi(-n);
        }
        let mut acc = Scalar::one();
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    /// Parse an entry: `"p/q"`, `"0.125"`, `"a/b+c/d i"`, `"-i"`, `"1.5e-3"`.
    ///
    /// Integers, fractions and plain decimals are exact. Any literal using
    /// exponent notation (or `inf`/`nan`) makes the whole value a float.
    pub fn parse(text: &str) -> Result<Scalar> {
        let bad = |reason: &str| Error::BadEntry { text: text.to_string(), reason: reason.to_string() };
        let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        if s.is_empty() {
            return Err(bad("empty"));
        }
        let (re_txt, im_txt) = if let Some(body) = s.strip_suffix('i') {
            let body = body.strip_suffix('*').unwrap_or(body);
            let bytes = body.as_bytes();
            let split = (1..bytes.len()).rev().find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
            match split {
                Some(k) => (&body[..k], &body[k..]),
                None => ("", body),
            }
        } else {
            (s.as_str(), "0")
        };
        let im_txt = match im_txt {
            "" | "+" => "1",
            "-" => "-1",
            t => t,
        };
        let re = if re_txt.is_empty() {
            Real::Exact(BigRational::zero())
        } else {
            parse_real(re_txt).ok_or_else(|| bad("malformed real part"))?
        };
        let im = parse_real(im_txt).ok_or_else(|| bad("malformed imaginary part"))?;
        Ok(match (re, im) {
            (Real::Exact(a), Real::Exact(b)) => Scalar::Exact(Complex::new(a, b)),
            (a, b) => Scalar::float(a.to_f64(), b.to_f64()),
        })
    }
}

enum Real {
    Exact(BigRational),
    Float(f64),
}

impl Real {
    fn to_f64(&self) -> f64 {
        match self {
            Real::Exact(q) => rational_to_f64(q),
            Real::Float(x) => *x,
        }
    }
}

fn parse_int(s: &str) -> Option<BigInt> {
    let digits = s.strip_prefix(['+', '-']).unwrap_or(s);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.trim_start_matches('+').parse().ok()
}

fn parse_real(s: &str) -> Option<Real> {
    let lower = s.to_ascii_lowercase();
    if lower.contains('e') || lower.contains("inf") || lower.contains("nan") {
        return lower.parse::<f64>().ok().map(Real::Float);
    }
    if let Some((n, d)) = s.split_once('/') {
        let n = parse_int(n)?;
        let d = parse_int(d)?;
        if d.is_zero() {
            return None;
        }
        return Some(Real::Exact(BigRational::new(n, d)));
    }
    if let Some((int_part, frac)) = s.split_once('.') {
        if !frac.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let negative = int_part.starts_with('-');
        let int_digits = int_part.trim_start_matches(['+', '-']);
        if int_digits.is_empty() && frac.is_empty() {
            return None;
        }
        let whole: BigInt = if int_digits.is_empty() { BigInt::zero() } else { parse_int(int_digits)? };
        let frac_num: BigInt = if frac.is_empty() { BigInt::zero() } else { frac.parse().ok()? };
        let scale = num::pow(BigInt::from(10), frac.len());
        let mut q = BigRational::new(whole * &scale + frac_num, scale);
        if negative {
            q = -q;
        }
        return Some(Real::Exact(q));
    }
    parse_int(s).map(|n| Real::Exact(BigRational::from_integer(n)))
}

fn fmt_rational(q: &BigRational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// Formats a float with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    if x == 0.0 {
        return "0.0000000000000000e0".to_string();
    }
    format!("{:.16e}", x)
}

/// Serializes a float as its [`fmt17`] string.
pub fn ser_f64<S: serde::Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&fmt17(*x))
}

impl Scalar {
    /// Rendering used in reports: exact values as fractions, floats with 17
    /// significant digits.
    pub fn report_string(&self) -> String {
        match self {
            Scalar::Exact(_) => self.to_string(),
            Scalar::Float(z) => {
                join_parts(fmt17(z.re), z.im != 0.0, z.im < 0.0 || (z.im == 0.0 && z.im.is_sign_negative()), fmt17(z.im.abs()))
            }
        }
    }
}

fn join_parts(re: String, has_im: bool, im_negative: bool, im_abs: String) -> String {
    if !has_im {
        return re;
    }
    format!("{}{}{} i", re, if im_negative { "-" } else { "+" }, im_abs)
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Exact(z) => {
                if z.im.is_zero() {
                    write!(f, "{}", fmt_rational(&z.re))
                } else if z.re.is_zero() {
                    write!(f, "{} i", fmt_rational(&z.im))
                } else {
                    let sign = if z.im.is_negative() { "-" } else { "+" };
                    write!(f, "{}{}{} i", fmt_rational(&z.re), sign, fmt_rational(&z.im.abs()))
                }
            }
            Scalar::Float(z) => {
                // `{:e}` is the shortest representation that round-trips, and
                // keeps the exponent marker that identifies float entries.
                let s = join_parts(format!("{:e}", z.re), z.im != 0.0, z.im < 0.0, format!("{:e}", z.im.abs()));
                f.write_str(&s)
            }
        }
    }
}

impl PartialEq for Scalar {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => a == b,
            (Scalar::Float(a), Scalar::Float(b)) => a == b,
            _ => false,
        }
    }
}

impl From<Complex64> for Scalar {
    fn from(z: Complex64) -> Self {
        Scalar::Float(z)
    }
}

impl From<GaussRational> for Scalar {
    fn from(z: GaussRational) -> Self {
        Scalar::Exact(z)
    }
}

impl From<i64> for Scalar {
    fn from(n: i64) -> Self {
        Scalar::int(n)
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident) => {
        impl<'a> $trait<&'a Scalar> for &'a Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &'a Scalar) -> Scalar {
                match (self, rhs) {
                    (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::Exact(a.clone().$method(b.clone())),
                    (a, b) => Scalar::Float(a.to_c64().$method(b.to_c64())),
                }
            }
        }
        impl $trait<Scalar> for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: Scalar) -> Scalar {
                match (self, rhs) {
                    (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::Exact(a.$method(b)),
                    (a, b) => Scalar::Float(a.to_c64().$method(b.to_c64())),
                }
            }
        }
    };
}

binop!(Add, add);
binop!(Sub, sub);
binop!(Mul, mul);
binop!(Div, div);

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        match self {
            Scalar::Exact(a) => Scalar::Exact(-a),
            Scalar::Float(a) => Scalar::Float(-a),
        }
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        -(self.clone())
    }
}

/// Compares real parts: exactly when both operands are exact, otherwise in
/// floating point.
pub fn cmp_re(a: &Scalar, b: &Scalar) -> Ordering {
    match (a, b) {
        (Scalar::Exact(x), Scalar::Exact(y)) => x.re.cmp(&y.re),
        _ => a.to_c64().re.partial_cmp(&b.to_c64().re).unwrap_or(Ordering::Equal),
    }
}

impl serde::Serialize for Scalar {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.report_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_decimals_and_complex() {
        assert_eq!(Scalar::parse("1/2").unwrap(), Scalar::ratio(1, 2));
        assert_eq!(Scalar::parse("0.125").unwrap(), Scalar::ratio(1, 8));
        assert_eq!(Scalar::parse("-0.5").unwrap(), Scalar::ratio(-1, 2));
        assert_eq!(Scalar::parse("1/2-3/4 i").unwrap(), Scalar::gauss(1, 2, -3, 4));
        assert_eq!(Scalar::parse("i").unwrap(), Scalar::gauss(0, 1, 1, 1));
        assert_eq!(Scalar::parse("-i").unwrap(), Scalar::gauss(0, 1, -1, 1));
        assert_eq!(Scalar::parse("1/10 i").unwrap(), Scalar::gauss(0, 1, 1, 10));
        assert_eq!(Scalar::parse("2+i").unwrap(), Scalar::gauss(2, 1, 1, 1));
        let f = Scalar::parse("1.5e-3-2e0 i").unwrap();
        assert!(!f.is_exact());
        assert_eq!(f.to_c64(), Complex64::new(1.5e-3, -2.0));
        assert!(Scalar::parse("1/0").is_err());
        assert!(Scalar::parse("abc").is_err());
        assert!(Scalar::parse("").is_err());
    }

    #[test]
    fn display_round_trips() {
        for s in [
            Scalar::ratio(-3, 7),
            Scalar::gauss(1, 3, -1, 10),
            Scalar::gauss(0, 1, 5, 2),
            Scalar::float(0.1, -2.5e-7),
            Scalar::float(3.0, 0.0),
        ] {
            let back = Scalar::parse(&s.to_string()).unwrap();
            assert_eq!(back, s, "{}", s);
        }
    }

    #[test]
    fn exact_arithmetic_is_closed() {
        let a = Scalar::gauss(1, 2, 1, 3);
        let b = Scalar::ratio(2, 5);
        let c = &(&a * &b) / &b;
        assert_eq!(c, a);
        assert!((&a + &Scalar::float(1.0, 0.0)).as_exact().is_none());
    }

    #[test]
    fn fmt17_has_seventeen_digits() {
        assert_eq!(fmt17(1.0 / 3.0), "3.3333333333333331e-1");
    }
}
