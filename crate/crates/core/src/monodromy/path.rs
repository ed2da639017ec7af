//! Piecewise-smooth paths in the complex plane.

use std::f64::consts::PI;

use num::complex::Complex64;
use serde::Serialize;

/// A straight segment or a circular arc, parametrised over `t in [0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PathPiece {
    Segment {
        #[serde(serialize_with = "ser_c64")]
        from: Complex64,
        #[serde(serialize_with = "ser_c64")]
        to: Complex64,
    },
    /// Points `center + radius * exp(i (start + t * sweep))`.
    Arc {
        #[serde(serialize_with = "ser_c64")]
        center: Complex64,
        radius: f64,
        start: f64,
        sweep: f64,
    },
}

pub(crate) fn ser_c64<S: serde::Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(2))?;
    seq.serialize_element(&crate::numkernel::fmt17(z.re))?;
    seq.serialize_element(&crate::numkernel::fmt17(z.im))?;
    seq.end()
}

impl PathPiece {
    pub fn circle(center: Complex64, radius: f64, start: f64) -> PathPiece {
        PathPiece::Arc { center, radius, start, sweep: 2.0 * PI }
    }

    pub fn point(&self, t: f64) -> Complex64 {
        match *self {
            PathPiece::Segment { from, to } => from + (to - from) * t,
            PathPiece::Arc { center, radius, start, sweep } => center + Complex64::from_polar(radius, start + t * sweep),
        }
    }

    /// `dz/dt`.
    pub fn derivative(&self, t: f64) -> Complex64 {
        match *self {
            PathPiece::Segment { from, to } => to - from,
            PathPiece::Arc { radius, start, sweep, .. } => Complex64::new(0.0, sweep) * Complex64::from_polar(radius, start + t * sweep),
        }
    }

    pub fn length(&self) -> f64 {
        match *self {
            PathPiece::Segment { from, to } => (to - from).norm(),
            PathPiece::Arc { radius, sweep, .. } => radius * sweep.abs(),
        }
    }

    pub fn start(&self) -> Complex64 {
        self.point(0.0)
    }

    pub fn end(&self) -> Complex64 {
        self.point(1.0)
    }

    pub fn reversed(&self) -> PathPiece {
        match *self {
            PathPiece::Segment { from, to } => PathPiece::Segment { from: to, to: from },
            PathPiece::Arc { center, radius, start, sweep } => PathPiece::Arc { center, radius, start: start + sweep, sweep: -sweep },
        }
    }

    /// Smallest distance from the piece to `a`.
    pub fn distance_to(&self, a: Complex64) -> f64 {
        match *self {
            PathPiece::Segment { from, to } => {
                let d = to - from;
                let len2 = d.norm_sqr();
                let t = if len2 == 0.0 { 0.0 } else { (((a - from) * d.conj()).re / len2).clamp(0.0, 1.0) };
                (from + d * t - a).norm()
            }
            PathPiece::Arc { .. } => {
                // Dense sampling is adequate for the planner's sanity checks.
                (0..=512).map(|k| (self.point(k as f64 / 512.0) - a).norm()).fold(f64::INFINITY, f64::min)
            }
        }
    }
}

/// A concatenation of pieces, each starting where the previous one ends.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Path {
    pub pieces: Vec<PathPiece>,
}

impl Path {
    pub fn new(pieces: Vec<PathPiece>) -> Path {
        Path { pieces }
    }

    pub fn segment(from: Complex64, to: Complex64) -> Path {
        Path { pieces: vec![PathPiece::Segment { from, to }] }
    }

    pub fn reversed(&self) -> Path {
        Path { pieces: self.pieces.iter().rev().map(PathPiece::reversed).collect() }
    }

    pub fn then(mut self, other: &Path) -> Path {
        self.pieces.extend_from_slice(&other.pieces);
        self
    }

    pub fn length(&self) -> f64 {
        self.pieces.iter().map(PathPiece::length).sum()
    }

    pub fn distance_to(&self, a: Complex64) -> f64 {
        self.pieces.iter().map(|p| p.distance_to(a)).fold(f64::INFINITY, f64::min)
    }

    pub fn start(&self) -> Option<Complex64> {
        self.pieces.first().map(PathPiece::start)
    }

    pub fn end(&self) -> Option<Complex64> {
        self.pieces.last().map(PathPiece::end)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pieces_join_up() {
        let arc = PathPiece::Arc { center: Complex64::new(1.0, 0.0), radius: 2.0, start: 0.0, sweep: PI };
        assert!((arc.start() - Complex64::new(3.0, 0.0)).norm() < 1e-15);
        assert!((arc.end() - Complex64::new(-1.0, 0.0)).norm() < 1e-14);
        let r = arc.reversed();
        assert!((r.start() - arc.end()).norm() < 1e-14);
        assert!((r.end() - arc.start()).norm() < 1e-14);
        assert!((arc.length() - 2.0 * PI).abs() < 1e-14);
        let seg = PathPiece::Segment { from: Complex64::new(0.0, 0.0), to: Complex64::new(2.0, 0.0) };
        assert!((seg.distance_to(Complex64::new(1.0, 1.0)) - 1.0).abs() < 1e-15);
        assert!((seg.distance_to(Complex64::new(3.0, 0.0)) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn arc_derivative_matches_difference_quotient() {
        let arc = PathPiece::Arc { center: Complex64::new(0.5, -1.0), radius: 0.7, start: 1.0, sweep: -2.0 };
        let h = 1e-6;
        let fd = (arc.point(0.3 + h) - arc.point(0.3 - h)) / (2.0 * h);
        assert!((fd - arc.derivative(0.3)).norm() < 1e-8);
    }
}
