//! Simultaneous triangularization of finite matrix sets by repeated
//! deflation along common eigenvectors.

use num::complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numkernel::{
    eigenvalues, eigenvalues_f, fnorm, intersect, intersect_f, kernel_basis, null_space, CMat, MatrixC, Scalar, Subspace, MAX_DIM,
};
use crate::system::SystemSpec;

/// A unit (float) or row-reduced (exact) vector `v` with `B_i v = lambda_i v`
/// for every input matrix.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CommonEigenvector {
    pub vector: Vec<Scalar>,
    pub eigenvalues: Vec<Scalar>,
}

/// The stage at which deflation stopped and the deflated matrices there,
/// which have no common eigenvector.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FailureCertificate {
    pub stage: usize,
    pub matrices: Vec<MatrixC>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlagResult {
    pub success: bool,
    /// `C` with every `C B C^{-1}` upper-triangular (in its leading `k`
    /// columns for a block form).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<MatrixC>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_inv: Option<MatrixC>,
    /// Dimensions of the invariant subspaces spanned by the leading columns
    /// of `C^{-1}`.
    pub flag_dims: Vec<usize>,
    /// Eigenvalue of each input matrix on each flag step.
    pub diagonal: Vec<Vec<Scalar>>,
    /// Largest below-diagonal entry of a conjugate relative to the norm of
    /// the input matrix (zero matrices skipped).
    #[serde(serialize_with = "crate::numkernel::ser_f64")]
    pub residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<FailureCertificate>,
}

fn validate(mats: &[MatrixC]) -> Result<usize> {
    let first = mats.first().ok_or_else(|| Error::OutOfRange("empty matrix set".into()))?;
    let p = first.rows();
    for m in mats {
        m.require_square("triangularization")?;
        if m.rows() != p {
            return Err(Error::DimensionMismatch(format!("matrices of size {} and {}", p, m.rows())));
        }
    }
    if p > MAX_DIM {
        return Err(Error::TooLarge(p));
    }
    Ok(p)
}

fn shifted(m: &MatrixC, lambda: &Scalar) -> MatrixC {
    let mut s = m.clone();
    for i in 0..m.rows() {
        s.set(i, i, m.get(i, i) - lambda);
    }
    s
}

/// Candidate eigenvalues per matrix; `None` when some matrix has an
/// eigenvalue that is not a Gaussian rational.
fn exact_spectra(mats: &[MatrixC], tol: f64) -> Result<Option<Vec<Vec<Scalar>>>> {
    let mut out = Vec::with_capacity(mats.len());
    for m in mats {
        if m.is_zero() {
            out.push(vec![Scalar::zero()]);
            continue;
        }
        let eigs = eigenvalues(m, tol)?;
        if eigs.iter().any(|e| e.exact.is_none()) {
            return Ok(None);
        }
        out.push(eigs.iter().map(|e| e.scalar()).collect());
    }
    Ok(Some(out))
}

fn exact_common(mats: &[MatrixC], spectra: &[Vec<Scalar>], tol: f64) -> Result<Option<CommonEigenvector>> {
    let p = mats[0].rows();
    let mut kernels = Vec::with_capacity(mats.len());
    for (m, spec) in mats.iter().zip(spectra) {
        let ks = spec.iter().map(|l| kernel_basis(&shifted(m, l), tol)).collect::<Result<Vec<Subspace>>>()?;
        kernels.push(ks);
    }
    let mut chosen = Vec::new();
    let found = dfs_exact(&kernels, 0, Subspace::full(p), &mut chosen, tol)?;
    Ok(found
        .map(|v| CommonEigenvector { vector: v, eigenvalues: chosen.iter().enumerate().map(|(i, &j)| spectra[i][j].clone()).collect() }))
}

fn dfs_exact(kernels: &[Vec<Subspace>], i: usize, w: Subspace, chosen: &mut Vec<usize>, tol: f64) -> Result<Option<Vec<Scalar>>> {
    if i == kernels.len() {
        return Ok(w.basis().first().cloned());
    }
    for (j, k) in kernels[i].iter().enumerate() {
        let next = intersect(&w, k, tol)?;
        if next.dim() == 0 {
            continue;
        }
        chosen.push(j);
        if let Some(v) = dfs_exact(kernels, i + 1, next, chosen, tol)? {
            return Ok(Some(v));
        }
        chosen.pop();
    }
    Ok(None)
}

/// Rayleigh quotients and the joint residual `max_i ||B_i v - l_i v|| / ||B_i||`.
fn joint_residual(mats: &[CMat], v: &CMat) -> (Vec<Complex64>, f64) {
    let mut lambdas = Vec::with_capacity(mats.len());
    let mut worst: f64 = 0.0;
    for m in mats {
        let l = (v.adjoint() * m * v)[(0, 0)];
        lambdas.push(l);
        let n = fnorm(m);
        if n > 0.0 {
            worst = worst.max(fnorm(&(m * v - v * l)) / n);
        }
    }
    (lambdas, worst)
}

/// Improves a candidate by alternating Rayleigh quotients with the smallest
/// right singular vector of the stacked shifted matrices.
fn refine(mats: &[CMat], v0: CMat) -> Result<(CMat, Vec<Complex64>, f64)> {
    let p = v0.nrows();
    let mut v = &v0 * Complex64::new(1.0 / v0.norm(), 0.0);
    let (mut lambdas, mut res) = joint_residual(mats, &v);
    for _ in 0..8 {
        let mut stacked = CMat::zeros(p * mats.len(), p);
        for (i, (m, l)) in mats.iter().zip(&lambdas).enumerate() {
            let scale = fnorm(m).max(f64::MIN_POSITIVE);
            let s = (m - CMat::identity(p, p) * *l) / Complex64::new(scale, 0.0);
            stacked.view_mut((i * p, 0), (p, p)).copy_from(&s);
        }
        let ns = null_space(&stacked, f64::INFINITY, true)?;
        let mut w = ns.columns(0, 1).into_owned();
        let phase = (w.adjoint() * &v)[(0, 0)];
        if phase.norm() > 0.0 {
            w *= phase / phase.norm();
        }
        let (l2, r2) = joint_residual(mats, &w);
        if r2 >= res {
            break;
        }
        v = w;
        lambdas = l2;
        res = r2;
    }
    Ok((v, lambdas, res))
}

/// Groups values (with multiplicity) whose single-linkage distance is at
/// most `radius`, in order of first appearance.
fn loose_clusters(eigs: &[crate::numkernel::Eigenvalue], radius: f64) -> Vec<Vec<Complex64>> {
    let values = crate::numkernel::multiset(eigs);
    let mut groups: Vec<Vec<Complex64>> = Vec::new();
    for v in values {
        let hits: Vec<usize> = (0..groups.len()).filter(|&g| groups[g].iter().any(|w| (w - v).norm() <= radius)).collect();
        let mut merged = vec![v];
        for &g in hits.iter().rev() {
            merged.extend(groups.remove(g));
        }
        let at = hits.first().copied().unwrap_or(groups.len());
        groups.insert(at.min(groups.len()), merged);
    }
    groups
}

struct FloatCandidates {
    mats: Vec<CMat>,
    kernels: Vec<Vec<(Complex64, CMat)>>,
}

impl FloatCandidates {
    fn new(mats: &[CMat], tol: f64) -> Result<Self> {
        let p = mats[0].nrows();
        let mut kernels = Vec::with_capacity(mats.len());
        for m in mats {
            if fnorm(m) == 0.0 {
                kernels.push(vec![(Complex64::new(0.0, 0.0), CMat::identity(p, p))]);
                continue;
            }
            let kernel = |l: Complex64| null_space(&(m - CMat::identity(p, p) * l), tol, false);
            let mut ks = Vec::new();
            for group in loose_clusters(&eigenvalues_f(m, tol)?, tol.sqrt() * fnorm(m)) {
                // A Jordan block splits into a cluster whose mean is accurate
                // while the individual values are not.
                if group.len() > 1 {
                    let mean = group.iter().sum::<Complex64>() / group.len() as f64;
                    let k = kernel(mean)?;
                    if k.ncols() > 0 {
                        ks.push((mean, k));
                        continue;
                    }
                }
                for l in group {
                    let k = kernel(l)?;
                    if k.ncols() > 0 {
                        ks.push((l, k));
                    }
                }
            }
            kernels.push(ks);
        }
        Ok(FloatCandidates { mats: mats.to_vec(), kernels })
    }

    fn search(&self, i: usize, w: &CMat, tol: f64) -> Result<Option<(CMat, Vec<Complex64>)>> {
        if i == self.kernels.len() {
            let (v, lambdas, res) = refine(&self.mats, w.columns(0, 1).into_owned())?;
            return Ok((res <= tol).then_some((v, lambdas)));
        }
        for (_, k) in &self.kernels[i] {
            let next = intersect_f(w, k, tol.sqrt())?;
            if next.ncols() == 0 {
                continue;
            }
            if let Some(hit) = self.search(i + 1, &next, tol)? {
                return Ok(Some(hit));
            }
        }
        Ok(None)
    }
}

fn float_common(mats: &[CMat], tol: f64) -> Result<Option<(CMat, Vec<Complex64>)>> {
    let p = mats[0].nrows();
    FloatCandidates::new(mats, tol)?.search(0, &CMat::identity(p, p), tol)
}

/// A common eigenvector of all matrices, searched over tuples of their
/// eigenvalues by intersecting the eigenspaces. Exact inputs whose spectra
/// are Gaussian rationals are handled exactly.
pub fn common_eigenvector(mats: &[MatrixC], tol: f64) -> Result<Option<CommonEigenvector>> {
    validate(mats)?;
    if mats.iter().all(MatrixC::is_exact) {
        if let Some(spectra) = exact_spectra(mats, tol)? {
            return exact_common(mats, &spectra, tol);
        }
    }
    let fm: Vec<CMat> = mats.iter().map(MatrixC::to_float).collect();
    Ok(float_common(&fm, tol)?.map(|(v, l)| CommonEigenvector {
        vector: v.iter().map(|z| Scalar::Float(*z)).collect(),
        eigenvalues: l.into_iter().map(Scalar::Float).collect(),
    }))
}

/// Householder reflector `H` (unitary and Hermitian) with `H e_1` parallel
/// to `v`.
fn reflector(v: &CMat) -> CMat {
    let n = v.nrows();
    let norm = v.norm();
    let x0 = v[(0, 0)];
    let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { Complex64::new(1.0, 0.0) };
    let mut w = v.clone();
    w[(0, 0)] += phase * norm;
    let wn = w.norm_squared();
    if wn == 0.0 {
        return CMat::identity(n, n);
    }
    CMat::identity(n, n) - (&w * w.adjoint()) * Complex64::new(2.0 / wn, 0.0)
}

/// `[v | e_j for j != pivot]`, invertible because `v[pivot] != 0`.
fn exact_completion(v: &[Scalar]) -> MatrixC {
    let n = v.len();
    let pivot = v.iter().position(|x| !x.is_zero()).expect("non-zero vector");
    let mut p = MatrixC::zeros(n, n);
    for (i, x) in v.iter().enumerate() {
        p.set(i, 0, x.clone());
    }
    for (col, j) in (0..n).filter(|&j| j != pivot).enumerate() {
        p.set(j, col + 1, Scalar::one());
    }
    p
}

fn lower_right(m: &MatrixC) -> MatrixC {
    let n = m.rows();
    let rows = (1..n).map(|i| (1..n).map(|j| m.get(i, j).clone()).collect()).collect();
    MatrixC::from_rows(rows).unwrap_or_else(|_| MatrixC::zeros(0, 0))
}

fn embed(p: &MatrixC, total: usize) -> MatrixC {
    let offset = total - p.rows();
    let mut out = MatrixC::identity(total);
    for i in 0..p.rows() {
        for j in 0..p.cols() {
            out.set(offset + i, offset + j, p.get(i, j).clone());
        }
    }
    out
}

fn lower_right_f(m: &CMat) -> CMat {
    let n = m.nrows();
    m.view((1, 1), (n - 1, n - 1)).into_owned()
}

fn embed_f(p: &CMat, total: usize) -> CMat {
    let offset = total - p.nrows();
    let mut out = CMat::identity(total, total);
    out.view_mut((offset, offset), (p.nrows(), p.ncols())).copy_from(p);
    out
}

enum Deflation {
    Done { basis: MatrixC, basis_inv: MatrixC, diagonal: Vec<Vec<Scalar>> },
    Stuck { stage: usize, matrices: Vec<MatrixC> },
}

/// Exact deflation; `None` when some deflated block has a spectrum outside
/// the Gaussian rationals.
fn deflate_exact(mats: &[MatrixC], depth: usize, tol: f64) -> Result<Option<Deflation>> {
    let p = mats[0].rows();
    let mut current: Vec<MatrixC> = mats.to_vec();
    let mut basis = MatrixC::identity(p);
    let mut diagonal = Vec::new();
    for stage in 0..depth {
        let Some(spectra) = exact_spectra(&current, tol)? else { return Ok(None) };
        let Some(ce) = exact_common(&current, &spectra, tol)? else {
            return Ok(Some(Deflation::Stuck { stage, matrices: current }));
        };
        diagonal.push(ce.eigenvalues);
        let step = exact_completion(&ce.vector);
        let step_inv = step.inverse()?;
        basis = basis.mul(&embed(&step, p))?;
        current = current.iter().map(|m| step_inv.mul(m)?.mul(&step).map(|t| lower_right(&t))).collect::<Result<_>>()?;
    }
    let basis_inv = basis.inverse()?;
    Ok(Some(Deflation::Done { basis, basis_inv, diagonal }))
}

fn deflate_float(mats: &[MatrixC], depth: usize, tol: f64) -> Result<Deflation> {
    let p = mats[0].rows();
    let mut current: Vec<CMat> = mats.iter().map(MatrixC::to_float).collect();
    let mut basis = CMat::identity(p, p);
    let mut diagonal = Vec::new();
    for stage in 0..depth {
        let Some((v, lambdas)) = float_common(&current, tol)? else {
            return Ok(Deflation::Stuck { stage, matrices: current.iter().map(MatrixC::from_float).collect() });
        };
        diagonal.push(lambdas.into_iter().map(Scalar::Float).collect());
        let h = reflector(&v);
        basis *= embed_f(&h, p);
        current = current.iter().map(|m| lower_right_f(&(&h * m * &h))).collect();
    }
    let basis_inv = basis.adjoint();
    Ok(Deflation::Done { basis: MatrixC::from_float(&basis), basis_inv: MatrixC::from_float(&basis_inv), diagonal })
}

/// Largest entry below the diagonal in the first `cols` columns, relative to
/// `scale`.
fn block_residual(t: &MatrixC, cols: usize, scale: f64) -> f64 {
    if scale == 0.0 {
        return 0.0;
    }
    let mut worst: f64 = 0.0;
    for j in 0..cols.min(t.cols()) {
        for i in j + 1..t.rows() {
            worst = worst.max(t.get(i, j).abs());
        }
    }
    worst / scale
}

fn triangularize_to_depth(mats: &[MatrixC], depth: usize, full: bool, tol: f64) -> Result<FlagResult> {
    let p = validate(mats)?;
    let deflation = match mats.iter().all(MatrixC::is_exact) {
        true => match deflate_exact(mats, depth, tol)? {
            Some(d) => d,
            None => deflate_float(mats, depth, tol)?,
        },
        false => deflate_float(mats, depth, tol)?,
    };
    match deflation {
        Deflation::Stuck { stage, matrices } => Ok(FlagResult {
            success: false,
            c: None,
            c_inv: None,
            flag_dims: (1..=stage).collect(),
            diagonal: vec![],
            residual: f64::NAN,
            failure: Some(FailureCertificate { stage, matrices }),
        }),
        Deflation::Done { basis, basis_inv, mut diagonal } => {
            let mut residual: f64 = 0.0;
            let mut last = Vec::new();
            for m in mats {
                let t = m.conjugate(&basis_inv, &basis)?;
                residual = residual.max(block_residual(&t, if full { p } else { depth }, m.norm()));
                last.push(t.get(p - 1, p - 1).clone());
            }
            if full {
                diagonal.push(last);
            }
            let dims = if full { p } else { depth };
            Ok(FlagResult {
                success: true,
                c: Some(basis_inv),
                c_inv: Some(basis),
                flag_dims: (1..=dims).collect(),
                diagonal,
                residual,
                failure: None,
            })
        }
    }
}

/// A constant `C` with every `C B_i C^{-1}` upper-triangular, or the stage at
/// which no common eigenvector exists.
pub fn simultaneous_triangularize(mats: &[MatrixC], tol: f64) -> Result<FlagResult> {
    let p = validate(mats)?;
    triangularize_to_depth(mats, p.saturating_sub(1), true, tol)
}

/// A constant `C` with every `C B_i C^{-1} = [[T, *], [0, *]]`, `T` upper-triangular
/// of size `k`.
pub fn block_form(mats: &[MatrixC], k: usize, tol: f64) -> Result<FlagResult> {
    let p = validate(mats)?;
    if k == 0 || k >= p {
        return Err(Error::OutOfRange(format!("k = {} must lie in 1..={}", k, p.saturating_sub(1))));
    }
    triangularize_to_depth(mats, k, false, tol)
}

/// The system `C B(z) C^{-1}`.
pub fn apply_to_system(spec: &SystemSpec, result: &FlagResult) -> Result<SystemSpec> {
    let (Some(c), Some(c_inv)) = (&result.c, &result.c_inv) else {
        return Err(Error::Unsupported("triangularization did not succeed".into()));
    };
    spec.map_matrices(|m| m.conjugate(c, c_inv))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e12() -> MatrixC {
        MatrixC::from_ints(&[&[0, 1], &[0, 0]])
    }

    fn e21() -> MatrixC {
        MatrixC::from_ints(&[&[0, 0], &[1, 0]])
    }

    #[test]
    fn common_eigenvector_examples() {
        let ce = common_eigenvector(&[e12()], 1e-9).unwrap().unwrap();
        assert_eq!(ce.vector, vec![Scalar::one(), Scalar::zero()]);
        assert_eq!(ce.eigenvalues, vec![Scalar::zero()]);
        assert!(common_eigenvector(&[e12(), e21()], 1e-9).unwrap().is_none());
        let d = [MatrixC::from_ints(&[&[1, 0], &[0, 2]]), MatrixC::from_ints(&[&[3, 0], &[0, 4]])];
        let ce = common_eigenvector(&d, 1e-9).unwrap().unwrap();
        assert_eq!(ce.eigenvalues, vec![Scalar::int(1), Scalar::int(3)]);
        let fl: Vec<MatrixC> = [e12(), e21()].iter().map(MatrixC::to_float_mode).collect();
        assert!(common_eigenvector(&fl, 1e-9).unwrap().is_none());
        let ce = common_eigenvector(&[e12().to_float_mode()], 1e-9).unwrap().unwrap();
        assert!((ce.vector[0].abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn size_mismatch() {
        assert!(matches!(common_eigenvector(&[e12(), MatrixC::identity(3)], 1e-9), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn single_matrix_always_triangularizes() {
        let m = MatrixC::from_ints(&[&[1, 2, 0], &[3, 4, 1], &[0, 1, 1]]);
        let r = simultaneous_triangularize(std::slice::from_ref(&m), 1e-9).unwrap();
        assert!(r.success);
        assert!(r.residual < 1e-12, "{}", r.residual);
        let r = simultaneous_triangularize(&[m.to_float_mode()], 1e-9).unwrap();
        assert!(r.success);
        assert!(r.residual < 1e-12, "{}", r.residual);
    }

    #[test]
    fn sl2_pair_fails_at_stage_zero() {
        let r = simultaneous_triangularize(&[e12(), e21()], 1e-9).unwrap();
        assert!(!r.success);
        let cert = r.failure.unwrap();
        assert_eq!(cert.stage, 0);
        assert!(common_eigenvector(&cert.matrices, 1e-9).unwrap().is_none());
        assert!(block_form(&[e12(), e21()], 1, 1e-9).unwrap().failure.is_some());
    }

    #[test]
    fn block_form_examples() {
        let d = MatrixC::from_ints(&[&[1, 0, 0], &[0, 2, 0], &[0, 0, 3]]);
        let r = block_form(std::slice::from_ref(&d), 2, 1e-9).unwrap();
        assert!(r.success);
        assert_eq!(r.flag_dims, vec![1, 2]);
        assert!(block_form(std::slice::from_ref(&d), 3, 1e-9).is_err());
        assert!(block_form(&[d], 0, 1e-9).is_err());
    }

    #[test]
    fn exact_conjugated_pair() {
        let r_mat = MatrixC::from_ints(&[&[1, 2, 0], &[0, 1, 1], &[1, 0, 1]]);
        let r_inv = r_mat.inverse().unwrap();
        let u1 = MatrixC::from_ints(&[&[1, 5, -2], &[0, 2, 3], &[0, 0, -1]]);
        let u2 = MatrixC::from_ints(&[&[0, 1, 1], &[0, 0, 4], &[0, 0, 7]]);
        let mats: Vec<MatrixC> = [u1, u2].iter().map(|u| u.conjugate(&r_mat, &r_inv).unwrap()).collect();
        let r = simultaneous_triangularize(&mats, 1e-9).unwrap();
        assert!(r.success);
        assert_eq!(r.residual, 0.0);
        let c = r.c.unwrap();
        let ci = r.c_inv.unwrap();
        for m in &mats {
            assert!(m.conjugate(&c, &ci).unwrap().is_upper_triangular());
        }
        let fl: Vec<MatrixC> = mats.iter().map(MatrixC::to_float_mode).collect();
        let r = simultaneous_triangularize(&fl, 1e-9).unwrap();
        assert!(r.success);
        assert!(r.residual < 1e-9, "{}", r.residual);
    }

    #[test]
    fn apply_permutation_to_diagonal_spec() {
        use crate::system::PointRef;
        let spec = SystemSpec::fuchsian(vec![
            (Scalar::zero(), MatrixC::from_ints(&[&[1, 0], &[0, 2]])),
            (Scalar::one(), MatrixC::from_ints(&[&[3, 0], &[0, 5]])),
        ])
        .unwrap();
        let perm = MatrixC::from_ints(&[&[0, 1], &[1, 0]]);
        let fr = FlagResult {
            success: true,
            c: Some(perm.clone()),
            c_inv: Some(perm),
            flag_dims: vec![1, 2],
            diagonal: vec![],
            residual: 0.0,
            failure: None,
        };
        let out = apply_to_system(&spec, &fr).unwrap();
        assert_eq!(out.leading_coefficient(PointRef::Finite(1)).unwrap(), MatrixC::from_ints(&[&[5, 0], &[0, 3]]));
        let id = FlagResult { c: Some(MatrixC::identity(2)), c_inv: Some(MatrixC::identity(2)), ..fr.clone() };
        assert_eq!(apply_to_system(&spec, &id).unwrap(), spec);
        let failed = FlagResult { success: false, c: None, c_inv: None, ..fr };
        assert!(apply_to_system(&spec, &failed).is_err());
    }
}
