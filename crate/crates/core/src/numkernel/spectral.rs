use num::complex::{Complex, Complex64};
use num::rational::BigRational;
use num::Zero;

use super::matrix::{fnorm, CMat, MatrixC};
use super::poly::char_poly;
use super::scalar::{GaussRational, Scalar};
use crate::error::{Error, Result};

/// Largest supported matrix dimension.
pub const MAX_DIM: usize = 16;

/// An eigenvalue cluster with its algebraic multiplicity.
#[derive(Clone, Debug, PartialEq)]
pub struct Eigenvalue {
    pub value: Complex64,
    pub multiplicity: usize,
    /// Exact value, when the eigenvalue is a verified Gaussian rational.
    pub exact: Option<GaussRational>,
}

impl Eigenvalue {
    pub fn scalar(&self) -> Scalar {
        match &self.exact {
            Some(z) => Scalar::Exact(z.clone()),
            None => Scalar::Float(self.value),
        }
    }
}

fn check_square(m: &MatrixC) -> Result<()> {
    m.require_square("eigenvalues")?;
    if m.rows() > MAX_DIM {
        return Err(Error::TooLarge(m.rows()));
    }
    Ok(())
}

/// Eigenvalues with multiplicity, sorted by (re, im).
///
/// Exact input goes through the exact characteristic polynomial: its
/// square-free factorisation fixes the multiplicities and the numerical roots
/// of each square-free factor are simple. Float input uses a complex Schur
/// form. In both cases values closer than `tol * ||M||` are merged.
pub fn eigenvalues(m: &MatrixC, tol: f64) -> Result<Vec<Eigenvalue>> {
    check_square(m)?;
    let scale = m.norm();
    let raw: Vec<(Complex64, usize, Option<GaussRational>)> = match char_poly(m) {
        Some(chi) => {
            let mut out = Vec::new();
            for (factor, mult) in chi.squarefree() {
                for root in factor.roots_c64() {
                    let exact = rationalize_c64(root, 1_000_000, 1e-9 * (1.0 + root.norm())).filter(|cand| factor.eval(cand).is_zero());
                    out.push((root, mult, exact));
                }
            }
            out
        }
        None => schur_eigenvalues(&m.to_float())?.into_iter().map(|z| (z, 1, None)).collect(),
    };
    Ok(cluster(raw, tol * scale))
}

/// Eigenvalues of a float matrix, clustered at `tol * ||M||`.
pub fn eigenvalues_f(m: &CMat, tol: f64) -> Result<Vec<Eigenvalue>> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch("eigenvalues needs a square matrix".into()));
    }
    let raw = schur_eigenvalues(m)?.into_iter().map(|z| (z, 1, None)).collect();
    Ok(cluster(raw, tol * fnorm(m)))
}

/// Flattened multiset of eigenvalues.
pub fn multiset(eigs: &[Eigenvalue]) -> Vec<Complex64> {
    eigs.iter().flat_map(|e| std::iter::repeat_n(e.value, e.multiplicity)).collect()
}

fn schur_eigenvalues(m: &CMat) -> Result<Vec<Complex64>> {
    if m.nrows() == 0 {
        return Ok(vec![]);
    }
    if !m.iter().all(|z| z.is_finite()) {
        return Err(Error::NonFinite("matrix entries".into()));
    }
    let schur = m.clone().try_schur(f64::EPSILON, 10_000).ok_or_else(|| Error::Numerical("Schur iteration did not converge".into()))?;
    let ev = schur.eigenvalues().ok_or_else(|| Error::Numerical("Schur form not triangular".into()))?;
    Ok(ev.iter().copied().collect())
}

fn cluster(raw: Vec<(Complex64, usize, Option<GaussRational>)>, threshold: f64) -> Vec<Eigenvalue> {
    let n = raw.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        p[i] = r;
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            if (raw[i].0 - raw[j].0).norm() <= threshold {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut root_slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if root_slot[r] == usize::MAX {
            root_slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[root_slot[r]].push(i);
    }
    let mut out: Vec<Eigenvalue> = groups
        .into_iter()
        .map(|g| {
            let mult: usize = g.iter().map(|&i| raw[i].1).sum();
            let sum = g.iter().fold(Complex64::new(0.0, 0.0), |acc, &i| acc + raw[i].0 * raw[i].1 as f64);
            let exact = if g.len() == 1 { raw[g[0]].2.clone() } else { None };
            let value = match &exact {
                Some(z) => super::scalar::gauss_to_c64(z),
                None => sum / mult as f64,
            };
            Eigenvalue { value, multiplicity: mult, exact }
        })
        .collect();
    out.sort_by(|a, b| a.value.re.total_cmp(&b.value.re).then(a.value.im.total_cmp(&b.value.im)));
    out
}

/// Unit vector `v` minimising `||M v - lambda v||`, and that residual.
pub fn eigen_witness(m: &CMat, lambda: Complex64) -> Result<(CMat, f64)> {
    let n = m.nrows();
    let shifted = m - CMat::identity(n, n) * lambda;
    let svd = shifted.try_svd(false, true, f64::EPSILON, 10_000).ok_or_else(|| Error::Numerical("SVD did not converge".into()))?;
    let v_t = svd.v_t.as_ref().expect("requested V");
    let (idx, sigma) = svd.singular_values.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).map(|(i, s)| (i, *s)).expect("non-empty");
    let v = v_t.row(idx).adjoint();
    Ok((CMat::from_column_slice(n, 1, v.as_slice()), sigma))
}

/// A linear subspace given by a basis of column vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct Subspace {
    ambient_dim: usize,
    basis: Vec<Vec<Scalar>>,
}

impl Subspace {
    pub fn zero(ambient_dim: usize) -> Self {
        Subspace { ambient_dim, basis: vec![] }
    }

    pub fn full(ambient_dim: usize) -> Self {
        let basis =
            (0..ambient_dim).map(|i| (0..ambient_dim).map(|j| if i == j { Scalar::one() } else { Scalar::zero() }).collect()).collect();
        Subspace { ambient_dim, basis }
    }

    /// Span of the given vectors (reduced to an independent set).
    pub fn span(ambient_dim: usize, vectors: Vec<Vec<Scalar>>, tol: f64) -> Result<Self> {
        if vectors.iter().any(|v| v.len() != ambient_dim) {
            return Err(Error::DimensionMismatch("vector length differs from ambient dimension".into()));
        }
        if vectors.is_empty() {
            return Ok(Subspace::zero(ambient_dim));
        }
        let exact = vectors.iter().flatten().all(Scalar::is_exact);
        if exact {
            let m = MatrixC::from_rows(vectors).expect("rectangular").transpose();
            return Ok(Subspace { ambient_dim, basis: column_space_exact(&m) });
        }
        let m = CMat::from_fn(ambient_dim, vectors.len(), |i, j| vectors[j][i].to_c64());
        Ok(Subspace::from_float(&orth(&m, tol)?))
    }

    pub fn from_float(cols: &CMat) -> Self {
        let basis = (0..cols.ncols()).map(|j| cols.column(j).iter().map(|z| Scalar::Float(*z)).collect()).collect();
        Subspace { ambient_dim: cols.nrows(), basis }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vec<Scalar>] {
        &self.basis
    }

    pub fn is_exact(&self) -> bool {
        self.basis.iter().flatten().all(Scalar::is_exact)
    }

    /// Orthonormal float basis as the columns of an `ambient x dim` matrix.
    pub fn orthonormal(&self) -> CMat {
        if self.basis.is_empty() {
            return CMat::zeros(self.ambient_dim, 0);
        }
        let m = CMat::from_fn(self.ambient_dim, self.dim(), |i, j| self.basis[j][i].to_c64());
        orth(&m, 1e-12).unwrap_or(m)
    }

    /// Orthogonal projector onto the subspace.
    pub fn projector(&self) -> CMat {
        let q = self.orthonormal();
        &q * q.adjoint()
    }
}

/// Orthonormal basis of the numerical kernel of `m`: right singular vectors
/// with singular value at most `tol * sigma_max` (absolute `tol` when
/// `absolute` is set).
pub fn null_space(m: &CMat, tol: f64, absolute: bool) -> Result<CMat> {
    let n = m.ncols();
    if n == 0 {
        return Ok(CMat::zeros(0, 0));
    }
    let padded;
    let a = if m.nrows() < n {
        padded = {
            let mut p = CMat::zeros(n, n);
            p.view_mut((0, 0), (m.nrows(), n)).copy_from(m);
            p
        };
        &padded
    } else {
        m
    };
    if !a.iter().all(|z| z.is_finite()) {
        return Err(Error::NonFinite("kernel input".into()));
    }
    let svd = a.clone().try_svd(false, true, f64::EPSILON, 10_000).ok_or_else(|| Error::Numerical("SVD did not converge".into()))?;
    let v_t = svd.v_t.as_ref().expect("requested V");
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let threshold = if absolute { tol } else { tol * smax };
    let mut cols: Vec<usize> = (0..svd.singular_values.len()).filter(|&i| smax == 0.0 || svd.singular_values[i] <= threshold).collect();
    cols.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]).then(a.cmp(&b)));
    let mut out = CMat::zeros(n, cols.len());
    for (k, &i) in cols.iter().enumerate() {
        out.set_column(k, &v_t.row(i).adjoint());
    }
    Ok(out)
}

/// Orthonormal basis for the column space of `m`.
pub fn orth(m: &CMat, tol: f64) -> Result<CMat> {
    if m.ncols() == 0 {
        return Ok(m.clone());
    }
    let svd = m.clone().try_svd(true, false, f64::EPSILON, 10_000).ok_or_else(|| Error::Numerical("SVD did not converge".into()))?;
    let u = svd.u.as_ref().expect("requested U");
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let mut idx: Vec<usize> = (0..svd.singular_values.len()).filter(|&i| smax > 0.0 && svd.singular_values[i] > tol * smax).collect();
    idx.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]).then(a.cmp(&b)));
    let mut out = CMat::zeros(m.nrows(), idx.len());
    for (k, &i) in idx.iter().enumerate() {
        out.set_column(k, &u.column(i));
    }
    Ok(out)
}

/// Reduced row echelon form over the Gaussian rationals; returns the pivot
/// columns.
fn rref(m: &mut MatrixC) -> Vec<usize> {
    let (rows, cols) = (m.rows(), m.cols());
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !m.get(i, c).is_zero()) else { continue };
        m.swap_rows(r, p);
        let pv = m.get(r, c).clone();
        for j in 0..cols {
            m.set(r, j, m.get(r, j) / &pv);
        }
        for i in 0..rows {
            if i != r && !m.get(i, c).is_zero() {
                let f = m.get(i, c).clone();
                for j in 0..cols {
                    m.set(i, j, m.get(i, j) - &(&f * m.get(r, j)));
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

fn kernel_exact(m: &MatrixC) -> Vec<Vec<Scalar>> {
    let mut a = m.clone();
    let pivots = rref(&mut a);
    let n = m.cols();
    let free: Vec<usize> = (0..n).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![Scalar::zero(); n];
            v[f] = Scalar::one();
            for (row, &pc) in pivots.iter().enumerate() {
                v[pc] = -a.get(row, f);
            }
            v
        })
        .collect()
}

fn column_space_exact(m: &MatrixC) -> Vec<Vec<Scalar>> {
    // Row-reduce the transpose: its non-zero rows span the column space.
    let mut t = m.transpose();
    let pivots = rref(&mut t);
    (0..pivots.len()).map(|i| t.row(i).to_vec()).collect()
}

/// Basis of the kernel of `m`: exact when `m` is exact, otherwise the
/// numerical kernel at relative threshold `tol`.
pub fn kernel_basis(m: &MatrixC, tol: f64) -> Result<Subspace> {
    let n = m.cols();
    if m.is_exact() {
        return Ok(Subspace { ambient_dim: n, basis: kernel_exact(m) });
    }
    Ok(Subspace::from_float(&null_space(&m.to_float(), tol, false)?))
}

/// Intersection `U ∩ V`.
pub fn intersect(u: &Subspace, v: &Subspace, tol: f64) -> Result<Subspace> {
    if u.ambient_dim != v.ambient_dim {
        return Err(Error::DimensionMismatch(format!("ambient {} vs {}", u.ambient_dim, v.ambient_dim)));
    }
    let n = u.ambient_dim;
    if u.dim() == 0 || v.dim() == 0 {
        return Ok(Subspace::zero(n));
    }
    if u.is_exact() && v.is_exact() {
        // Solve [U | -V] c = 0 and map back through U.
        let (a, b) = (u.dim(), v.dim());
        let mut m = MatrixC::zeros(n, a + b);
        for i in 0..n {
            for j in 0..a {
                m.set(i, j, u.basis[j][i].clone());
            }
            for j in 0..b {
                m.set(i, a + j, -&v.basis[j][i]);
            }
        }
        let vecs: Vec<Vec<Scalar>> = kernel_exact(&m)
            .into_iter()
            .map(|c| (0..n).map(|i| (0..a).fold(Scalar::zero(), |acc, j| acc + &c[j] * &u.basis[j][i])).collect())
            .collect();
        return Subspace::span(n, vecs, tol);
    }
    Ok(Subspace::from_float(&intersect_f(&u.orthonormal(), &v.orthonormal(), tol)?))
}

/// Intersection of two float subspaces given by orthonormal columns.
pub fn intersect_f(u: &CMat, v: &CMat, tol: f64) -> Result<CMat> {
    let n = u.nrows();
    if u.ncols() == 0 || v.ncols() == 0 {
        return Ok(CMat::zeros(n, 0));
    }
    let id = CMat::identity(n, n);
    let pu = &id - u * u.adjoint();
    let pv = &id - v * v.adjoint();
    let mut stacked = CMat::zeros(2 * n, n);
    stacked.view_mut((0, 0), (n, n)).copy_from(&pu);
    stacked.view_mut((n, 0), (n, n)).copy_from(&pv);
    // Projector complements have unit norm, so an absolute threshold is used.
    null_space(&stacked, tol, true)
}

/// Matrix exponential (scaling and squaring with Padé approximants).
pub fn matrix_exp(m: &MatrixC) -> Result<MatrixC> {
    m.require_square("matrix_exp")?;
    Ok(MatrixC::from_float(&expm(&m.to_float())))
}

pub fn expm(m: &CMat) -> CMat {
    m.clone().exp()
}

/// Best rational approximation of `x` by continued-fraction convergents with
/// denominator at most `max_den`, accepted when within `tol`.
pub fn rationalize(x: f64, max_den: u64, tol: f64) -> Option<BigRational> {
    if !x.is_finite() {
        return None;
    }
    let (mut h0, mut h1): (i128, i128) = (0, 1);
    let (mut k0, mut k1): (i128, i128) = (1, 0);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        if a.abs() > 1e18 {
            break;
        }
        let ai = a as i128;
        let h2 = ai.checked_mul(h1)?.checked_add(h0)?;
        let k2 = ai.checked_mul(k1)?.checked_add(k0)?;
        if k2 > max_den as i128 {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        if (x - h1 as f64 / k1 as f64).abs() <= tol {
            return Some(BigRational::new(h1.into(), k1.into()));
        }
        let frac = r - a;
        if frac == 0.0 {
            break;
        }
        r = 1.0 / frac;
    }
    None
}

pub fn rationalize_c64(z: Complex64, max_den: u64, tol: f64) -> Option<GaussRational> {
    let re = if z.re.abs() <= tol { BigRational::zero() } else { rationalize(z.re, max_den, tol)? };
    let im = if z.im.abs() <= tol { BigRational::zero() } else { rationalize(z.im, max_den, tol)? };
    Some(Complex::new(re, im))
}

/// Frobenius-norm distance between two orthogonal projectors.
pub fn projector_distance(a: &Subspace, b: &Subspace) -> f64 {
    fnorm(&(a.projector() - b.projector()))
}
