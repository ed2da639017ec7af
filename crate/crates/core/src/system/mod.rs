//! The system `dy/dz = B(z) y`, stored as partial-fraction data: one Laurent
//! tail per finite pole plus a polynomial part.

mod document;
mod expansion;

use std::fmt;

use num::complex::Complex64;
use serde::Serialize;

pub use document::{parse_system, print_system};
pub use expansion::LocalExpansion;

use crate::error::{Error, Result};
use crate::numkernel::{eigenvalues, CMat, MatrixC, Scalar};

/// Where a singular point sits on the Riemann sphere.
#[derive(Clone, Debug, PartialEq)]
pub enum Location {
    Finite(Scalar),
    Infinity,
}

/// A pole of `B(z)` with its principal part.
///
/// `tail[k]` is the coefficient of `(z - a)^{-(k+1)}`; the last entry is the
/// leading coefficient and is non-zero. At infinity the tail is expressed in
/// the chart `w = 1/z`.
#[derive(Clone, Debug, PartialEq)]
pub struct SingularPoint {
    pub location: Location,
    tail: Vec<MatrixC>,
    /// Exponents supplied by the user for regular points that are not
    /// Fuchsian (they cannot be computed from the coefficient data alone).
    pub asserted_exponents: Option<Vec<Scalar>>,
}

impl SingularPoint {
    /// `tail[k]` multiplies `(z - a)^{-(k+1)}`.
    pub fn new(location: Location, tail: Vec<MatrixC>) -> Result<Self> {
        let Some(lead) = tail.last() else {
            return Err(Error::Schema("empty Laurent tail".into()));
        };
        if lead.is_zero() {
            return Err(Error::ZeroLeadingMatrix(0));
        }
        Ok(SingularPoint { location, tail, asserted_exponents: None })
    }

    pub fn with_exponents(mut self, exps: Vec<Scalar>) -> Self {
        self.asserted_exponents = Some(exps);
        self
    }

    /// Coefficient of `(z - a)^order`, `order` negative.
    pub fn coefficient(&self, order: i64) -> Option<&MatrixC> {
        if order >= 0 {
            return None;
        }
        self.tail.get((-order - 1) as usize)
    }

    pub fn tail(&self) -> &[MatrixC] {
        &self.tail
    }

    pub fn rank(&self) -> usize {
        self.tail.len() - 1
    }

    pub fn leading(&self) -> &MatrixC {
        self.tail.last().expect("non-empty tail")
    }

    pub fn residue(&self) -> &MatrixC {
        &self.tail[0]
    }

    pub fn finite_location(&self) -> Option<&Scalar> {
        match &self.location {
            Location::Finite(a) => Some(a),
            Location::Infinity => None,
        }
    }
}

/// Reference to a singular point of a [`SystemSpec`]: a finite pole by its
/// index, or the point at infinity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PointRef {
    Finite(usize),
    Infinity,
}

/// Finite points serialize as their index, infinity as `"infinity"`.
impl Serialize for PointRef {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            PointRef::Finite(i) => s.serialize_u64(*i as u64),
            PointRef::Infinity => s.serialize_str("infinity"),
        }
    }
}

impl fmt::Display for PointRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PointRef::Finite(i) => write!(f, "#{}", i),
            PointRef::Infinity => write!(f, "infinity"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PointKind {
    Fuchsian,
    IrregularNonresonant,
    IrregularResonant,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Classification {
    pub rank: usize,
    pub kind: PointKind,
}

/// The coefficient matrix `B(z)` of a linear system of dimension `p`.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemSpec {
    dimension: usize,
    points: Vec<SingularPoint>,
    infinity: Option<SingularPoint>,
    polynomial: Vec<MatrixC>,
}

impl SystemSpec {
    /// Builds and validates a system. `points` may contain at most one entry
    /// located at infinity; its tail must agree with the finite data.
    pub fn new(dimension: usize, points: Vec<SingularPoint>, polynomial: Vec<MatrixC>) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::Schema("dimension must be positive".into()));
        }
        let check = |m: &MatrixC, what: String| -> Result<()> {
            if m.rows() != dimension || m.cols() != dimension {
                return Err(Error::DimensionMismatch(format!(
                    "{} is {}x{}, expected {}x{}",
                    what,
                    m.rows(),
                    m.cols(),
                    dimension,
                    dimension
                )));
            }
            Ok(())
        };
        let mut finite = Vec::new();
        let mut infinity = None;
        for (idx, pt) in points.into_iter().enumerate() {
            for (k, m) in pt.tail.iter().enumerate() {
                check(m, format!("point {} order -{}", idx, k + 1))?;
            }
            if pt.leading().is_zero() {
                return Err(Error::ZeroLeadingMatrix(idx));
            }
            if let Some(e) = &pt.asserted_exponents {
                if e.len() != dimension {
                    return Err(Error::DimensionMismatch(format!("point {} asserts {} exponents, expected {}", idx, e.len(), dimension)));
                }
            }
            match &pt.location {
                Location::Infinity => {
                    if infinity.replace(pt).is_some() {
                        return Err(Error::DuplicatePoint("infinity".into()));
                    }
                }
                Location::Finite(a) => {
                    for other in &finite {
                        let b = SingularPoint::finite_location(other).expect("finite");
                        let same = match (a, b) {
                            (Scalar::Exact(x), Scalar::Exact(y)) => x == y,
                            _ => (a.to_c64() - b.to_c64()).norm() <= 1e-12,
                        };
                        if same {
                            return Err(Error::DuplicatePoint(a.to_string()));
                        }
                    }
                    finite.push(pt);
                }
            }
        }
        for (d, m) in polynomial.iter().enumerate() {
            check(m, format!("polynomial order {}", d))?;
        }
        let mut polynomial = polynomial;
        while polynomial.last().is_some_and(MatrixC::is_zero) {
            polynomial.pop();
        }
        let spec = SystemSpec { dimension, points: finite, infinity: None, polynomial };
        if let Some(decl) = infinity {
            spec.check_infinity_declaration(&decl)?;
            return Ok(SystemSpec { infinity: Some(decl), ..spec });
        }
        Ok(spec)
    }

    /// Fuchsian system `sum_i B_i / (z - a_i)`.
    pub fn fuchsian(poles: Vec<(Scalar, MatrixC)>) -> Result<Self> {
        let p = poles.first().map_or(0, |(_, m)| m.rows());
        let points = poles.into_iter().map(|(a, b)| SingularPoint::new(Location::Finite(a), vec![b])).collect::<Result<Vec<_>>>()?;
        SystemSpec::new(p, points, vec![])
    }

    fn check_infinity_declaration(&self, decl: &SingularPoint) -> Result<()> {
        let Some(rank) = self.infinity_rank() else {
            return Err(Error::InfinityMismatch("infinity is not a singular point".into()));
        };
        if rank != decl.rank() {
            return Err(Error::InfinityMismatch(format!("declared rank {} but the data gives {}", decl.rank(), rank)));
        }
        let exp = self.local_expansion(PointRef::Infinity, rank + 1)?;
        for k in 0..=rank {
            let computed = &exp.coeffs[rank - k];
            let declared = &decl.tail[k];
            let ok = if computed.is_exact() && declared.is_exact() {
                computed == declared
            } else {
                (computed.to_float() - declared.to_float()).norm() <= 1e-10 * (1.0 + computed.norm())
            };
            if !ok {
                return Err(Error::InfinityMismatch(format!("coefficient of w^-{} differs", k + 1)));
            }
        }
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn finite_points(&self) -> &[SingularPoint] {
        &self.points
    }

    pub fn declared_infinity(&self) -> Option<&SingularPoint> {
        self.infinity.as_ref()
    }

    pub fn polynomial(&self) -> &[MatrixC] {
        &self.polynomial
    }

    pub fn is_exact(&self) -> bool {
        self.points.iter().all(|p| p.tail.iter().all(MatrixC::is_exact) && p.finite_location().is_none_or(Scalar::is_exact))
            && self.polynomial.iter().all(MatrixC::is_exact)
    }

    pub fn location(&self, pt: PointRef) -> Result<Location> {
        match pt {
            PointRef::Finite(i) => self.points.get(i).map(|p| p.location.clone()).ok_or_else(|| Error::UnknownPoint(pt.to_string())),
            PointRef::Infinity => {
                if self.infinity_rank().is_some() {
                    Ok(Location::Infinity)
                } else {
                    Err(Error::UnknownPoint(pt.to_string()))
                }
            }
        }
    }

    /// Sum of all finite residues.
    pub fn residue_sum(&self) -> MatrixC {
        self.points.iter().fold(MatrixC::zeros(self.dimension, self.dimension), |acc, p| acc.add(p.residue()).expect("same size"))
    }

    /// Poincaré rank at infinity, `None` when infinity is not singular.
    pub fn infinity_rank(&self) -> Option<usize> {
        if !self.polynomial.is_empty() {
            return Some(self.polynomial.len());
        }
        if self.residue_sum().is_zero() {
            None
        } else {
            Some(0)
        }
    }

    /// All singular points: the finite poles, then infinity when singular.
    pub fn singular_points(&self) -> Vec<PointRef> {
        let mut v: Vec<PointRef> = (0..self.points.len()).map(PointRef::Finite).collect();
        if self.infinity_rank().is_some() {
            v.push(PointRef::Infinity);
        }
        v
    }

    pub fn poincare_rank(&self, pt: PointRef) -> Result<usize> {
        match pt {
            PointRef::Finite(i) => self.points.get(i).map(SingularPoint::rank).ok_or_else(|| Error::UnknownPoint(pt.to_string())),
            PointRef::Infinity => self.infinity_rank().ok_or_else(|| Error::UnknownPoint(pt.to_string())),
        }
    }

    /// Leading Laurent coefficient at a singular point.
    pub fn leading_coefficient(&self, pt: PointRef) -> Result<MatrixC> {
        Ok(self.local_expansion(pt, 1)?.coeffs.swap_remove(0))
    }

    /// Rank and resonance type of a singular point. Resonance means the
    /// leading coefficient has a repeated eigenvalue (clusters within
    /// `tol * ||leading||`).
    pub fn classify(&self, pt: PointRef, tol: f64) -> Result<Classification> {
        let rank = self.poincare_rank(pt)?;
        if rank == 0 {
            return Ok(Classification { rank, kind: PointKind::Fuchsian });
        }
        let lead = self.leading_coefficient(pt)?;
        let eigs = eigenvalues(&lead, tol)?;
        let kind = if eigs.iter().all(|e| e.multiplicity == 1) { PointKind::IrregularNonresonant } else { PointKind::IrregularResonant };
        Ok(Classification { rank, kind })
    }

    /// Residue of the system at infinity, `-sum_i B_{-1,i}`.
    ///
    /// Fails with [`Error::InfinityIrregular`] carrying the rank when a
    /// polynomial part is present.
    pub fn residue_at_infinity(&self) -> Result<MatrixC> {
        if !self.polynomial.is_empty() {
            return Err(Error::InfinityIrregular(self.polynomial.len()));
        }
        Ok(self.residue_sum().neg())
    }

    /// Exponents supplied in the input for a point, if any.
    pub fn asserted_exponents(&self, pt: PointRef) -> Option<&[Scalar]> {
        match pt {
            PointRef::Finite(i) => self.points.get(i)?.asserted_exponents.as_deref(),
            PointRef::Infinity => self.infinity.as_ref()?.asserted_exponents.as_deref(),
        }
    }

    /// Every partial-fraction coefficient (tails, then polynomial part).
    /// A constant conjugation makes `B(z)` upper-triangular iff it does so
    /// for each of these.
    pub fn coefficient_matrices(&self) -> Vec<MatrixC> {
        let mut v: Vec<MatrixC> = self.points.iter().flat_map(|p| p.tail.iter().cloned()).collect();
        v.extend(self.polynomial.iter().cloned());
        v
    }

    /// Applies `f` to every stored matrix (pole locations unchanged).
    pub fn map_matrices(&self, f: impl Fn(&MatrixC) -> Result<MatrixC>) -> Result<SystemSpec> {
        let map_point = |p: &SingularPoint| -> Result<SingularPoint> {
            Ok(SingularPoint {
                location: p.location.clone(),
                tail: p.tail.iter().map(&f).collect::<Result<_>>()?,
                asserted_exponents: p.asserted_exponents.clone(),
            })
        };
        Ok(SystemSpec {
            dimension: self.dimension,
            points: self.points.iter().map(map_point).collect::<Result<_>>()?,
            infinity: self.infinity.as_ref().map(map_point).transpose()?,
            polynomial: self.polynomial.iter().map(&f).collect::<Result<_>>()?,
        })
    }

    /// `B(z)` in floating point.
    pub fn evaluate(&self, z: Complex64) -> Result<MatrixC> {
        Ok(MatrixC::from_float(&self.evaluator().eval(z)?))
    }

    pub fn evaluator(&self) -> Evaluator {
        Evaluator {
            dimension: self.dimension,
            poles: self
                .points
                .iter()
                .map(|p| (p.finite_location().expect("finite").to_c64(), p.tail.iter().map(MatrixC::to_float).collect()))
                .collect(),
            polynomial: self.polynomial.iter().map(MatrixC::to_float).collect(),
        }
    }

    pub fn point_label(&self, pt: PointRef) -> String {
        match pt {
            PointRef::Finite(i) => match self.points.get(i).and_then(SingularPoint::finite_location) {
                Some(a) => a.to_string(),
                None => pt.to_string(),
            },
            PointRef::Infinity => "infinity".into(),
        }
    }
}

/// Float snapshot of `B(z)` for repeated evaluation.
#[derive(Clone, Debug)]
pub struct Evaluator {
    dimension: usize,
    poles: Vec<(Complex64, Vec<CMat>)>,
    polynomial: Vec<CMat>,
}

/// Minimum distance to a pole at which `B(z)` may be evaluated.
pub const POLE_GUARD: f64 = 1e-12;

impl Evaluator {
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn poles(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.poles.iter().map(|(a, _)| *a)
    }

    pub fn eval(&self, z: Complex64) -> Result<CMat> {
        let mut out = CMat::zeros(self.dimension, self.dimension);
        self.eval_into(z, &mut out)?;
        Ok(out)
    }

    pub fn eval_into(&self, z: Complex64, out: &mut CMat) -> Result<()> {
        out.fill(Complex64::new(0.0, 0.0));
        for (a, tail) in &self.poles {
            let d = z - a;
            if d.norm() <= POLE_GUARD {
                return Err(Error::NearPole(format!("{}", z)));
            }
            let inv = d.inv();
            let mut pw = inv;
            for m in tail {
                out.zip_apply(m, |o, x| *o += x * pw);
                pw *= inv;
            }
        }
        // Horner for the polynomial part.
        if !self.polynomial.is_empty() {
            let mut acc = CMat::zeros(self.dimension, self.dimension);
            for m in self.polynomial.iter().rev() {
                acc = acc * z + m;
            }
            *out += acc;
        }
        Ok(())
    }

    /// Trace of `B(z)`.
    pub fn trace(&self, z: Complex64) -> Result<Complex64> {
        Ok(self.eval(z)?.trace())
    }
}
