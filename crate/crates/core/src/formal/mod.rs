//! Formal fundamental matrices `F(t) t^Lambda e^{Q(t)}` at irregular
//! non-resonant points, and the solvability criterion built on their
//! exponents.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exponents::{check_corollary1_exponents, Exponent, ExponentSource, PointExponents, RationalPolicy};
use crate::numkernel::{eigen_witness, eigenvalues, fnorm, kernel_basis, MatrixC, Scalar};
use crate::system::{PointKind, PointRef, SystemSpec};
use crate::triangular::{simultaneous_triangularize, FlagResult};
use crate::verdict::{ConditionId, ConditionVerdict, Decision, Status, Witness};

/// Formal data at one point, in the local coordinate `t` (`z - a`, or `1/z`
/// at infinity).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FormalData {
    pub point: PointRef,
    pub rank: usize,
    /// Eigenvalues `b^j` of the leading coefficient, sorted by (re, im).
    pub leading_eigenvalues: Vec<Scalar>,
    /// `T^{-1} B_lead T = diag(b)`.
    pub t: MatrixC,
    pub lambda: Vec<Scalar>,
    /// `q[j][m - 1]` is the coefficient of `t^{-m}` in `q^j`, `m = 1..=rank`.
    pub q: Vec<Vec<Scalar>>,
    /// `F_0 = T, F_1, ..., F_K`.
    pub fhat: Vec<MatrixC>,
}

impl FormalData {
    pub fn truncation(&self) -> usize {
        self.fhat.len() - 1
    }
}

fn sorted_leading(lead: &MatrixC, tol: f64) -> Result<Vec<Scalar>> {
    let mut b: Vec<Scalar> = eigenvalues(lead, tol)?.iter().map(|e| e.scalar()).collect();
    b.sort_by(|x, y| {
        let (x, y) = (x.to_c64(), y.to_c64());
        x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im))
    });
    Ok(b)
}

/// Eigenvector matrix of the leading coefficient: exact kernel vectors when
/// everything is exact, otherwise unit vectors whose largest entry is real
/// and positive.
fn diagonalizer(lead: &MatrixC, b: &[Scalar], tol: f64) -> Result<MatrixC> {
    let p = lead.rows();
    let mut cols: Vec<Vec<Scalar>> = Vec::with_capacity(p);
    for bj in b {
        let shifted = lead.sub(&MatrixC::identity(p).scale(bj))?;
        if shifted.is_exact() {
            let k = kernel_basis(&shifted, tol)?;
            if k.dim() != 1 {
                return Err(Error::Numerical(format!("eigenvalue {bj} has a kernel of dimension {}", k.dim())));
            }
            cols.push(k.basis()[0].clone());
        } else {
            let (v, _) = eigen_witness(&lead.to_float(), bj.to_c64())?;
            let big = v.iter().copied().max_by(|x, y| x.norm().total_cmp(&y.norm())).expect("nonempty");
            let phase = big.conj() / big.norm();
            cols.push(v.iter().map(|z| Scalar::Float(z * phase)).collect());
        }
    }
    Ok(MatrixC::from_rows(cols)?.transpose())
}

fn scale_columns(m: &MatrixC, d: &[Scalar]) -> MatrixC {
    let mut out = m.clone();
    for i in 0..m.rows() {
        for (j, dj) in d.iter().enumerate() {
            out.set(i, j, m.get(i, j) * dj);
        }
    }
    out
}

/// Coefficients `e_0 = 1, e_1, ..., e_k` of `exp(s)` for a series `s` with
/// zero constant term (`s[0]` is ignored).
fn exp_series(s: &[Scalar], k: usize) -> Vec<Scalar> {
    let mut e = vec![Scalar::one()];
    for n in 1..=k {
        let mut acc = Scalar::zero();
        for j in 1..=n.min(s.len().saturating_sub(1)) {
            acc = &acc + &(&(&Scalar::int(j as i64) * &s[j]) * &e[n - j]);
        }
        e.push(&acc / &Scalar::int(n as i64));
    }
    e
}

/// Formal data at `pt` with `F` truncated after `t^k`.
///
/// A formal gauge `H = I + H_1 t + ...` with zero diagonal in `H_m` splits
/// `T^{-1} B T` into a diagonal series `D_0 + D_1 t + ...` (scaled by
/// `t^{-r-1}`). Orders below `r` give `Q`, order `r` gives `Lambda`, and the
/// holomorphic rest integrates to a diagonal factor `E` with `E(0) = I`, so
/// that `F = T H E`.
pub fn formal_data(spec: &SystemSpec, pt: PointRef, k: usize, tol: f64) -> Result<FormalData> {
    let class = spec.classify(pt, tol)?;
    if class.kind != PointKind::IrregularNonresonant {
        return Err(Error::WrongPointKind { point: spec.point_label(pt), expected: "irregular non-resonant" });
    }
    let r = class.rank;
    let p = spec.dimension();
    let order = r + k;
    let mut coeffs = spec.local_expansion(pt, order + 1)?.coeffs;
    let b = sorted_leading(&coeffs[0], tol)?;
    let exact = b.iter().all(Scalar::is_exact) && coeffs.iter().all(MatrixC::is_exact);
    let b: Vec<Scalar> = if exact { b } else { b.iter().map(Scalar::to_float).collect() };
    if !exact {
        coeffs = coeffs.iter().map(MatrixC::to_float_mode).collect();
    }
    let t = diagonalizer(&coeffs[0], &b, tol)?;
    let t_inv = t.inverse()?;
    let a: Vec<MatrixC> = coeffs.iter().map(|c| t_inv.mul(c)?.mul(&t)).collect::<Result<_>>()?;
    let b: Vec<Scalar> = if exact { b } else { a[0].diagonal_entries() };

    let mut h = vec![MatrixC::identity(p)];
    let mut d: Vec<Vec<Scalar>> = vec![b.clone()];
    for m in 1..=order {
        let mut s = if m > r { h[m - r].scale(&Scalar::int((m - r) as i64)) } else { MatrixC::zeros(p, p) };
        for kk in 1..=m {
            s = s.sub(&a[kk].mul(&h[m - kk])?)?;
        }
        for kk in 1..m {
            s = s.add(&scale_columns(&h[m - kk], &d[kk]))?;
        }
        let mut hm = MatrixC::zeros(p, p);
        for i in 0..p {
            for j in 0..p {
                if i != j {
                    hm.set(i, j, s.get(i, j) / &(&b[i] - &b[j]));
                }
            }
        }
        d.push((0..p).map(|i| -s.get(i, i)).collect());
        h.push(hm);
    }

    let q: Vec<Vec<Scalar>> = (0..p).map(|j| (1..=r).map(|m| -(&d[r - m][j] / &Scalar::int(m as i64))).collect()).collect();
    let lambda = d[r].clone();
    let e: Vec<Vec<Scalar>> = (0..p)
        .map(|j| {
            let mut s = vec![Scalar::zero()];
            s.extend((1..=k).map(|i| &d[r + i][j] / &Scalar::int(i as i64)));
            exp_series(&s, k)
        })
        .collect();
    let mut fhat = Vec::with_capacity(k + 1);
    for m in 0..=k {
        let mut acc = MatrixC::zeros(p, p);
        for c in 0..=m {
            let ec: Vec<Scalar> = e.iter().map(|ej| ej[c].clone()).collect();
            acc = acc.add(&scale_columns(&h[m - c], &ec))?;
        }
        fhat.push(t.mul(&acc)?);
    }
    Ok(FormalData { point: pt, rank: r, leading_eigenvalues: b, t, lambda, q, fhat })
}

/// Largest Frobenius norm among the coefficients of `t^{m-r-1}`,
/// `m = 0..=k`, of `F' + F (Q' + Lambda/t) - B F`.
pub fn formal_residual(spec: &SystemSpec, data: &FormalData, k: usize) -> Result<f64> {
    if data.fhat.len() <= k {
        return Err(Error::OutOfRange(format!("F is known to order {}, not {}", data.truncation(), k)));
    }
    let r = data.rank;
    let p = spec.dimension();
    let a = spec.local_expansion(data.point, k + 1)?.coeffs;
    // (Q' + Lambda/t) t^{r+1} = sum_{j<r} -(r-j) q_{r-j} t^j + Lambda t^r
    let dhat: Vec<Vec<Scalar>> =
        (0..=r)
            .map(|j| {
                if j == r {
                    data.lambda.clone()
                } else {
                    (0..p).map(|i| -(&Scalar::int((r - j) as i64) * &data.q[i][r - j - 1])).collect()
                }
            })
            .collect();
    let f = &data.fhat;
    let mut worst: f64 = 0.0;
    for m in 0..=k {
        let mut res = if m > r { f[m - r].scale(&Scalar::int((m - r) as i64)) } else { MatrixC::zeros(p, p) };
        for j in 0..=m.min(r) {
            res = res.add(&scale_columns(&f[m - j], &dhat[j]))?;
        }
        for j in 0..=m {
            res = res.sub(&a[j].mul(&f[m - j])?)?;
        }
        worst = worst.max(fnorm(&res.to_float()));
    }
    Ok(worst)
}

/// Scale for [`formal_residual`]: `1 + max ||B_k||` over the coefficients used.
pub fn residual_scale(spec: &SystemSpec, pt: PointRef, k: usize) -> Result<f64> {
    let a = spec.local_expansion(pt, k + 1)?.coeffs;
    Ok(1.0 + a.iter().map(MatrixC::norm).fold(0.0, f64::max))
}

/// Pairwise distinctness of the formal exponents at a point.
pub fn check_distinct(point: PointRef, lambda: &[Scalar], tol: f64) -> ConditionVerdict {
    let mut witnesses = Vec::new();
    for j in 0..lambda.len() {
        for l in j + 1..lambda.len() {
            let same = match (&lambda[j], &lambda[l]) {
                (Scalar::Exact(x), Scalar::Exact(y)) => x == y,
                (x, y) => (x.to_c64() - y.to_c64()).norm() <= tol * (1.0 + x.abs().max(y.abs())),
            };
            if same {
                witnesses.push(Witness::at(point, vec![j, l], format!("formal exponents {} and {} coincide", lambda[j], lambda[l])));
            }
        }
    }
    let status = if witnesses.is_empty() { Status::Holds } else { Status::Fails };
    ConditionVerdict::new(ConditionId::Distinct, None, witnesses, status, format!("formal exponents distinct at {}", point))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Theorem2Outcome {
    pub decision: Decision,
    pub verdicts: Vec<ConditionVerdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flag: Option<FlagResult>,
    pub formal: Vec<FormalData>,
}

/// The criterion for systems whose singular points are all irregular and
/// non-resonant: under distinct, small formal exponents satisfying the pair
/// rule, solvability is equivalent to a constant gauge making `B(z)` upper
/// triangular, i.e. to joint triangularizability of every coefficient matrix.
pub fn check_theorem2(spec: &SystemSpec, k: usize, tol: f64, policy: &RationalPolicy) -> Result<Theorem2Outcome> {
    let points = spec.singular_points();
    for &pt in &points {
        if spec.classify(pt, tol)?.kind != PointKind::IrregularNonresonant {
            return Err(Error::WrongPointKind { point: spec.point_label(pt), expected: "irregular non-resonant" });
        }
    }
    let formal: Vec<FormalData> = points.iter().map(|&pt| formal_data(spec, pt, k, tol)).collect::<Result<_>>()?;
    let p = spec.dimension();
    let mut verdicts = Vec::new();
    if p >= 2 {
        let exps: Vec<PointExponents> = formal
            .iter()
            .map(|f| PointExponents {
                point: f.point,
                source: ExponentSource::Formal,
                exponents: f.lambda.iter().cloned().map(Exponent::split).collect(),
            })
            .collect();
        for f in &formal {
            verdicts.push(check_distinct(f.point, &f.lambda, policy.tol));
        }
        verdicts.push(check_corollary1_exponents(&exps, p, policy)?);
    }
    if verdicts.iter().any(|v| !v.holds()) {
        return Ok(Theorem2Outcome { decision: Decision::Inconclusive, verdicts, flag: None, formal });
    }
    let flag = simultaneous_triangularize(&spec.coefficient_matrices(), tol)?;
    let decision = if flag.success { Decision::Solvable } else { Decision::NotSolvable };
    Ok(Theorem2Outcome { decision, verdicts, flag: Some(flag), formal })
}
