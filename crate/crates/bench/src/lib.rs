//! Inputs shared by the benchmarks.

use quadsolve::system::{Location, SingularPoint};
use quadsolve::{MatrixC, Scalar, SystemSpec};

/// `C U_k C^{-1}` for upper-triangular `U_k` with entries in `-2..=2`.
pub fn hidden_triangular(p: usize, count: usize) -> Vec<MatrixC> {
    let mut c = MatrixC::identity(p);
    for i in 0..p {
        for j in 0..p {
            if i != j {
                c.set(i, j, Scalar::int(((i * 3 + j * 5) % 3) as i64 - 1));
            }
        }
    }
    let c = if c.det().map(|d| d.is_zero()).unwrap_or(true) { MatrixC::identity(p) } else { c };
    let ci = c.inverse().expect("invertible");
    (0..count)
        .map(|k| {
            let mut u = MatrixC::zeros(p, p);
            for i in 0..p {
                for j in i..p {
                    u.set(i, j, Scalar::int(((i + 2 * j + 3 * k) % 5) as i64 - 2));
                }
            }
            u.conjugate(&c, &ci).expect("square")
        })
        .collect()
}

/// Fuchsian system with `n` poles on the unit circle and small rational
/// residues.
pub fn fuchsian_ring(p: usize, n: usize) -> SystemSpec {
    let locs = [Scalar::one(), Scalar::gauss(0, 1, 1, 1), Scalar::int(-1), Scalar::gauss(0, 1, -1, 1)];
    let poles = (0..n)
        .map(|k| {
            let mut m = MatrixC::zeros(p, p);
            for i in 0..p {
                for j in 0..p {
                    m.set(i, j, Scalar::ratio(((i + j + k) % 3) as i64 - 1, 5 + k as i64));
                }
            }
            (locs[k % locs.len()].clone(), m)
        })
        .collect();
    SystemSpec::fuchsian(poles).expect("distinct poles")
}

/// Irregular point of rank `r` at the origin with leading term
/// `diag(1, ..., p)`.
pub fn irregular(p: usize, r: usize) -> SystemSpec {
    let lead = MatrixC::diagonal(&(1..=p as i64).map(Scalar::int).collect::<Vec<_>>());
    let mut tail: Vec<MatrixC> = (0..r)
        .map(|k| {
            let mut m = MatrixC::zeros(p, p);
            for i in 0..p {
                for j in 0..p {
                    m.set(i, j, Scalar::ratio((i as i64 - j as i64 + k as i64) % 3, 7));
                }
            }
            m
        })
        .collect();
    tail.push(lead);
    let pt = SingularPoint::new(Location::Finite(Scalar::zero()), tail).expect("non-zero leading term");
    SystemSpec::new(p, vec![pt], vec![]).expect("valid system")
}

/// Upper-triangular system with an irregular pole, a Fuchsian pole and a
/// polynomial part.
pub fn triangular(p: usize) -> SystemSpec {
    let up = |seed: i64| {
        let mut m = MatrixC::zeros(p, p);
        for i in 0..p {
            for j in i..p {
                m.set(i, j, Scalar::ratio((seed + i as i64 + 2 * j as i64) % 4 - 1, 3));
            }
        }
        m
    };
    let mut lead = up(1);
    for i in 0..p {
        lead.set(i, i, Scalar::int(i as i64 + 1));
    }
    let a = SingularPoint::new(Location::Finite(Scalar::zero()), vec![up(0), lead]).expect("non-zero");
    let b = SingularPoint::new(Location::Finite(Scalar::int(2)), vec![up(2)]).expect("non-zero");
    SystemSpec::new(p, vec![a, b], vec![]).expect("valid system")
}
