//! Numerical evaluation of solution trees along a path.
//!
//! Every piece of the path is sampled at Chebyshev points; integrals are
//! evaluated at all samples at once by spectral indefinite integration, so
//! nested integrals cost no more than one level. The number of samples is
//! doubled until the end values settle.

use std::f64::consts::PI;

use num::complex::Complex64;

use super::expr::{LaurentTerm, QuadExpr};
use crate::error::{Error, Result};
use crate::monodromy::{Path, PathPiece};
use crate::numkernel::CMat;

const MIN_NODES: usize = 16;
const MAX_NODES: usize = 1024;

/// Values and `d/dz` at the end of a path, with the change between the last
/// two resolutions as an error estimate.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub value: CMat,
    pub derivative: CMat,
    pub error_estimate: f64,
    pub nodes: usize,
}

struct Chebyshev {
    n: usize,
    /// `cos(pi m / n)` for `m < 2n`.
    cos: Vec<f64>,
    /// Parameters in `[0, 1]`, increasing.
    s: Vec<f64>,
}

impl Chebyshev {
    fn new(n: usize) -> Self {
        let cos = (0..2 * n).map(|m| (PI * m as f64 / n as f64).cos()).collect();
        let s = (0..=n).map(|k| 0.5 * (1.0 - (PI * k as f64 / n as f64).cos())).collect();
        Chebyshev { n, cos, s }
    }

    fn c(&self, j: usize, k: usize) -> f64 {
        self.cos[(j * k) % (2 * self.n)]
    }

    /// `int_0^{s_k} g(s) ds` at every node.
    fn cumulative(&self, g: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        let half = |k: usize| if k == 0 || k == n { 0.5 } else { 1.0 };
        // g = sum_j a_j T_j(x), x = cos(pi k / n) = 1 - 2 s
        let mut a: Vec<Complex64> = (0..=n)
            .map(|j| {
                let sum: Complex64 = (0..=n).map(|k| g[k] * (half(k) * self.c(j, k))).sum();
                sum * (2.0 / n as f64)
            })
            .collect();
        a[0] *= 0.5;
        a[n] *= 0.5;
        a.extend([Complex64::new(0.0, 0.0); 2]);
        let mut b = vec![Complex64::new(0.0, 0.0); n + 2];
        b[1] = a[0] - a[2] * 0.5;
        for j in 2..n + 2 {
            b[j] = (a[j - 1] - a[j + 1]) / (2.0 * j as f64);
        }
        // ds = -dx/2 and s = 0 at x = 1, where every T_j is 1.
        (0..=n)
            .map(|k| {
                let f: Complex64 = (1..n + 2).map(|j| b[j] * (self.c(j, k) - 1.0)).sum();
                f * -0.5
            })
            .collect()
    }
}

struct Piece<'a> {
    grid: &'a Chebyshev,
    z: Vec<Complex64>,
    dz: Vec<Complex64>,
    base: Complex64,
    centers: &'a [Complex64],
    /// Continuous `log(z - center)` at every node, per center.
    logs: Vec<Vec<Complex64>>,
}

struct State {
    offsets: Vec<Complex64>,
    next: usize,
}

fn terms_at(terms: &[LaurentTerm], z: Complex64) -> (Complex64, Complex64) {
    terms.iter().fold((Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)), |(v, d), t| (v + t.eval(z), d + t.derivative(z)))
}

fn center_index(centers: &[Complex64], a: Complex64) -> usize {
    centers.iter().position(|&c| c == a).expect("collected center")
}

fn eval_node(e: &QuadExpr, piece: &Piece, state: &mut State) -> (Vec<Complex64>, Vec<Complex64>) {
    let n = piece.z.len();
    match e {
        QuadExpr::Const { value } => (vec![value.to_c64(); n], vec![Complex64::new(0.0, 0.0); n]),
        QuadExpr::PowerProduct { powers, exp } => {
            let (e0, _) = terms_at(exp, piece.base);
            let mut val = Vec::with_capacity(n);
            let mut der = Vec::with_capacity(n);
            for k in 0..n {
                let z = piece.z[k];
                let (ev, ed) = terms_at(exp, z);
                let mut log = ev - e0;
                let mut dlog = ed;
                for f in powers {
                    let a = f.center.to_c64();
                    let c = f.exponent.to_c64();
                    log += c * piece.logs[center_index(piece.centers, a)][k];
                    dlog += c / (z - a);
                }
                let v = log.exp();
                val.push(v);
                der.push(v * dlog);
            }
            (val, der)
        }
        QuadExpr::Integral { factor, integrand } => {
            let id = state.next;
            state.next += 1;
            if state.offsets.len() <= id {
                state.offsets.resize(id + 1, Complex64::new(0.0, 0.0));
            }
            let (inner, _) = eval_node(integrand, piece, state);
            let g: Vec<Complex64> = (0..n).map(|k| terms_at(factor, piece.z[k]).0 * inner[k]).collect();
            let gs: Vec<Complex64> = (0..n).map(|k| g[k] * piece.dz[k]).collect();
            let offset = state.offsets[id];
            let val: Vec<Complex64> = piece.grid.cumulative(&gs).into_iter().map(|v| v + offset).collect();
            state.offsets[id] = val[n - 1];
            (val, g)
        }
        QuadExpr::Sum { terms } => {
            let mut val = vec![Complex64::new(0.0, 0.0); n];
            let mut der = vec![Complex64::new(0.0, 0.0); n];
            for t in terms {
                let (v, d) = eval_node(t, piece, state);
                for k in 0..n {
                    val[k] += v[k];
                    der[k] += d[k];
                }
            }
            (val, der)
        }
        QuadExpr::Product { factors } => {
            let mut val = vec![Complex64::new(1.0, 0.0); n];
            let mut der = vec![Complex64::new(0.0, 0.0); n];
            for t in factors {
                let (v, d) = eval_node(t, piece, state);
                for k in 0..n {
                    der[k] = der[k] * v[k] + val[k] * d[k];
                    val[k] *= v[k];
                }
            }
            (val, der)
        }
    }
}

fn collect_centers(e: &QuadExpr, out: &mut Vec<Complex64>) {
    match e {
        QuadExpr::PowerProduct { powers, .. } => {
            for f in powers {
                let a = f.center.to_c64();
                if !out.contains(&a) {
                    out.push(a);
                }
            }
        }
        QuadExpr::Integral { integrand, .. } => collect_centers(integrand, out),
        QuadExpr::Sum { terms: v } | QuadExpr::Product { factors: v } => v.iter().for_each(|t| collect_centers(t, out)),
        QuadExpr::Const { .. } => {}
    }
}

fn collect_poles(e: &QuadExpr, out: &mut Vec<Complex64>) {
    let mut add = |terms: &[LaurentTerm]| {
        for t in terms {
            if let (Some(a), true) = (&t.center, t.power < 0) {
                out.push(a.to_c64());
            }
        }
    };
    match e {
        QuadExpr::PowerProduct { exp, .. } => add(exp),
        QuadExpr::Integral { factor, integrand } => {
            add(factor);
            collect_poles(integrand, out);
        }
        QuadExpr::Sum { terms: v } | QuadExpr::Product { factors: v } => v.iter().for_each(|t| collect_poles(t, out)),
        QuadExpr::Const { .. } => {}
    }
}

fn nearest(prev: Complex64, principal: Complex64) -> Complex64 {
    let turns = ((prev.im - principal.im) / (2.0 * PI)).round();
    Complex64::new(principal.re, principal.im + 2.0 * PI * turns)
}

fn eval_at(exprs: &[&QuadExpr], path: &Path, centers: &[Complex64], n: usize) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let grid = Chebyshev::new(n);
    let base = path.start().ok_or_else(|| Error::OutOfRange("empty path".into()))?;
    let mut logs_now: Vec<Complex64> = centers.iter().map(|&a| (base - a).ln()).collect();
    let mut state = State { offsets: vec![], next: 0 };
    let mut out = (vec![], vec![]);
    for piece in &path.pieces {
        let z: Vec<Complex64> = grid.s.iter().map(|&s| piece.point(s)).collect();
        let dz: Vec<Complex64> = grid.s.iter().map(|&s| piece.derivative(s)).collect();
        let mut logs = Vec::with_capacity(centers.len());
        for (c, &a) in centers.iter().enumerate() {
            let mut prev = logs_now[c];
            let track: Vec<Complex64> = z
                .iter()
                .map(|&zk| {
                    prev = nearest(prev, (zk - a).ln());
                    prev
                })
                .collect();
            logs_now[c] = prev;
            logs.push(track);
        }
        let ctx = Piece { grid: &grid, z, dz, base, centers, logs };
        state.next = 0;
        out = (vec![], vec![]);
        for e in exprs {
            let (v, d) = eval_node(e, &ctx, &mut state);
            out.0.push(*v.last().expect("nodes"));
            out.1.push(*d.last().expect("nodes"));
        }
    }
    Ok(out)
}

/// Evaluates a matrix of trees at the end of `path`; branches are principal
/// at the start of the path (the base point) and continued along it.
pub fn eval_matrix(exprs: &[Vec<QuadExpr>], path: &Path, rtol: f64) -> Result<Evaluation> {
    let rows = exprs.len();
    let cols = exprs.first().map_or(0, Vec::len);
    let flat: Vec<&QuadExpr> = exprs.iter().flatten().collect();
    let mut centers = Vec::new();
    let mut poles = Vec::new();
    for e in &flat {
        collect_centers(e, &mut centers);
        collect_poles(e, &mut poles);
    }
    poles.extend(centers.iter().copied());
    for &a in &poles {
        let d = path.distance_to(a);
        if d <= 1e-9 * (1.0 + a.norm()) {
            return Err(Error::NearPole(format!("{a} (distance {d:.3e})")));
        }
    }
    let mut prev = eval_at(&flat, path, &centers, MIN_NODES)?;
    let mut n = MIN_NODES;
    while n < MAX_NODES {
        n *= 2;
        let next = eval_at(&flat, path, &centers, n)?;
        let scale = next.0.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let diff = next.0.iter().zip(&prev.0).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        if next.0.iter().chain(&next.1).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("solution value along the path".into()));
        }
        prev = next;
        if diff <= rtol * scale.max(f64::MIN_POSITIVE) {
            return Ok(Evaluation {
                value: CMat::from_row_slice(rows, cols, &prev.0),
                derivative: CMat::from_row_slice(rows, cols, &prev.1),
                error_estimate: diff,
                nodes: n,
            });
        }
    }
    Err(Error::Numerical(format!("quadrature did not settle with {MAX_NODES} nodes per piece")))
}

/// Value of one tree at `z`, continued along the segment from `z0`.
pub fn eval_quad(expr: &QuadExpr, z: Complex64, z0: Complex64, rtol: f64) -> Result<(Complex64, f64)> {
    let path = Path::new(vec![PathPiece::Segment { from: z0, to: z }]);
    let ev = eval_matrix(&[vec![expr.clone()]], &path, rtol)?;
    Ok((ev.value[(0, 0)], ev.error_estimate))
}
