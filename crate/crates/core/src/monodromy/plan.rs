//! Deterministic loop geometry around the finite singular points.

use std::f64::consts::PI;

use num::complex::Complex64;
use serde::Serialize;

use super::path::{ser_c64, Path, PathPiece};
use crate::error::{Error, Result};
use crate::system::SystemSpec;

/// A loop based at the plan's base point: out along `approach`, once around
/// the circle counterclockwise, and back.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlannedLoop {
    /// Index of the finite singular point.
    pub point: usize,
    #[serde(serialize_with = "ser_c64")]
    pub center: Complex64,
    pub radius: f64,
    pub approach: Path,
}

impl PlannedLoop {
    pub fn circle(&self) -> PathPiece {
        let start = self.approach.end().map_or(0.0, |s| (s - self.center).arg());
        PathPiece::circle(self.center, self.radius, start)
    }

    pub fn path(&self) -> Path {
        self.approach.clone().then(&Path::new(vec![self.circle()])).then(&self.approach.reversed())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LoopPlan {
    #[serde(serialize_with = "ser_c64")]
    pub base: Complex64,
    /// Every path stays at least this far from the singular points it does
    /// not encircle.
    pub delta_min: f64,
    /// Loops in composition order.
    pub loops: Vec<PlannedLoop>,
    /// Counterclockwise circle through the base point enclosing every
    /// finite singular point.
    pub outer: Path,
}

/// Plans loops around the finite singular points of `spec`.
pub fn plan_loops(spec: &SystemSpec) -> Result<LoopPlan> {
    let points: Vec<Complex64> = spec.finite_points().iter().map(|p| p.finite_location().expect("finite").to_c64()).collect();
    plan_for_points(&points)
}

/// Plans loops around the given points.
///
/// The base point is `1 + 2 max|a|` on the real axis. Loop radii are half the
/// distance to the nearest other point, capped at 1, and approach paths go
/// straight from the base point, swerving around points closer than
/// `0.45 d` (with `d` the smallest pairwise distance) along an arc of that
/// radius. An obstacle exactly on the line is passed with the obstacle on the
/// right. Loops are ordered by the argument of `a - base` in `[0, 2 pi)`, ties
/// by distance from the base point.
pub fn plan_for_points(points: &[Complex64]) -> Result<LoopPlan> {
    if points.is_empty() {
        return Err(Error::Unsupported("no finite singular point to encircle".into()));
    }
    let n = points.len();
    let mut d_min = f64::INFINITY;
    for i in 0..n {
        for j in i + 1..n {
            d_min = d_min.min((points[i] - points[j]).norm());
        }
    }
    let delta_min = if n == 1 { 0.25 } else { 0.25 * d_min };
    let max_abs = points.iter().map(|a| a.norm()).fold(0.0, f64::max);
    let mut base = Complex64::new(1.0 + 2.0 * max_abs, 0.0);
    if points.iter().any(|a| (a - base).norm() < delta_min) {
        base += Complex64::new(0.0, delta_min);
    }
    let swerve = 1.8 * delta_min;
    let mut loops = Vec::with_capacity(n);
    for (i, &a) in points.iter().enumerate() {
        let nearest = points.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, b)| (a - b).norm()).fold(f64::INFINITY, f64::min);
        let radius = (0.5 * nearest).min(1.0);
        let u = (base - a) / (base - a).norm();
        let start = a + u * radius;
        let obstacles: Vec<Complex64> = points.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, b)| *b).collect();
        let approach = approach_path(base, start, &obstacles, swerve)?;
        loops.push(PlannedLoop { point: i, center: a, radius, approach });
    }
    let key = |l: &PlannedLoop| {
        let w = l.center - base;
        let mut arg = w.im.atan2(w.re);
        if arg < 0.0 {
            arg += 2.0 * PI;
        }
        (arg, w.norm())
    };
    loops.sort_by(|x, y| {
        let (a1, d1) = key(x);
        let (a2, d2) = key(y);
        a1.total_cmp(&a2).then(d1.total_cmp(&d2)).then(x.point.cmp(&y.point))
    });
    let outer = Path::new(vec![PathPiece::circle(Complex64::new(0.0, 0.0), base.norm(), base.arg())]);
    let plan = LoopPlan { base, delta_min, loops, outer };
    check_clearance(&plan, points)?;
    Ok(plan)
}

/// Straight path from `from` to `to`, swerving around obstacles within
/// `swerve` of the line.
fn approach_path(from: Complex64, to: Complex64, obstacles: &[Complex64], swerve: f64) -> Result<Path> {
    let len = (to - from).norm();
    let u = (to - from) / len;
    let mut windows: Vec<(f64, f64, Complex64, f64)> = Vec::new();
    for &b in obstacles {
        let rel = (b - from) * u.conj();
        let (along, offset) = (rel.re, rel.im);
        if offset.abs() >= swerve || along <= 0.0 || along >= len {
            continue;
        }
        let half = (swerve * swerve - offset * offset).sqrt();
        windows.push((along - half, along + half, b, offset));
    }
    windows.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut pieces = Vec::new();
    let mut cursor = 0.0;
    for &(enter, leave, b, offset) in &windows {
        if enter < cursor || enter < 0.0 || leave > len {
            return Err(Error::Numerical("overlapping detours in loop planning".into()));
        }
        let p_in = from + u * enter;
        let p_out = from + u * leave;
        if enter > cursor {
            pieces.push(PathPiece::Segment { from: from + u * cursor, to: p_in });
        }
        // Pass on the side of the line away from the obstacle; an obstacle on
        // the line is kept on the right.
        let side = if offset > 0.0 { -Complex64::i() * u } else { Complex64::i() * u };
        let start = (p_in - b).arg();
        let end = (p_out - b).arg();
        let mut sweep = end - start;
        while sweep <= -PI {
            sweep += 2.0 * PI;
        }
        while sweep > PI {
            sweep -= 2.0 * PI;
        }
        let mid = b + Complex64::from_polar(swerve, start + 0.5 * sweep);
        if ((mid - b) * side.conj()).re < 0.0 {
            sweep -= sweep.signum() * 2.0 * PI;
            if sweep == 0.0 {
                sweep = 2.0 * PI;
            }
        }
        pieces.push(PathPiece::Arc { center: b, radius: swerve, start, sweep });
        cursor = leave;
    }
    if cursor < len {
        pieces.push(PathPiece::Segment { from: from + u * cursor, to });
    }
    Ok(Path::new(pieces))
}

fn check_clearance(plan: &LoopPlan, points: &[Complex64]) -> Result<()> {
    for l in &plan.loops {
        let path = l.path();
        for (j, &b) in points.iter().enumerate() {
            if j != l.point && path.distance_to(b) < plan.delta_min * (1.0 - 1e-9) {
                return Err(Error::Numerical(format!("loop around {} passes too close to {}", l.center, b)));
            }
        }
    }
    Ok(())
}
