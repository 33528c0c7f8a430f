//! Complex matrix helpers shared by the whole crate.
//!
//! Everything here operates on dense `DMatrix<Complex64>` values. The
//! conventions that matter:
//!
//! - `vec` stacks columns (column-major), so `vec(A X B) = (Bᵀ ⊗ A) vec(X)`.
//! - Eigenvalues from [`herm_eig`] come back sorted in descending order.
//! - Rank decisions use a relative threshold against the largest singular
//!   value, never an absolute one.

use crate::error::{Error, Result};
use crate::{C64, CMat, CVec, RMat, RVec};

/// Relative singular-value cutoff used by [`pinv`], [`null_space`] and rank
/// queries when the caller does not supply one.
pub const DEFAULT_REL_TOL: f64 = 1e-10;

/// Condition numbers beyond this mark a matrix as numerically singular.
pub const COND_LIMIT: f64 = 1e12;

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Column-stacking vectorization: `vec(A)` is `A` read column by column.
pub fn vec(a: &CMat) -> CVec {
    CVec::from_column_slice(a.as_slice())
}

/// Inverse of [`vec`]: reshape a length `rows*cols` vector into a matrix,
/// filling column by column.
///
/// # Panics
/// Panics if `v.len() != rows * cols`.
pub fn unvec(v: &CVec, rows: usize, cols: usize) -> CMat {
    assert_eq!(v.len(), rows * cols, "unvec: length mismatch");
    CMat::from_column_slice(rows, cols, v.as_slice())
}

/// Commutation matrix `K_{m,n}` with `K_{m,n} vec(A) = vec(Aᵀ)` for `A`
/// of size `m × n`.
pub fn commutation_matrix(m: usize, n: usize) -> CMat {
    let mut k = CMat::zeros(m * n, m * n);
    for i in 0..m {
        for j in 0..n {
            // vec(A) index of A[i,j] is j*m + i; vec(Aᵀ) index is i*n + j.
            k[(i * n + j, j * m + i)] = C64::new(1.0, 0.0);
        }
    }
    k
}

/// Moore-Penrose pseudo-inverse via SVD. Singular values below
/// `rel_tol * σ_max` are treated as zero.
pub fn pinv(a: &CMat, rel_tol: f64) -> CMat {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return CMat::zeros(n, m);
    }
    let svd = a.clone().svd(true, true);
    let u = svd.u.as_ref().expect("svd: U requested");
    let vt = svd.v_t.as_ref().expect("svd: Vᵀ requested");
    let smax = svd.singular_values.max();
    let cut = rel_tol * smax;
    let k = svd.singular_values.len();
    let mut sinv = CMat::zeros(k, k);
    for i in 0..k {
        let s = svd.singular_values[i];
        if s > cut {
            sinv[(i, i)] = C64::new(1.0 / s, 0.0);
        }
    }
    vt.adjoint() * sinv * u.adjoint()
}

/// Orthonormal basis of the (right) null space of `a`, returned as the
/// columns of a matrix with `a.ncols()` rows. Directions whose singular
/// value falls below `rel_tol * σ_max` count as null.
///
/// Returns an `n × 0` matrix when the null space is trivial.
pub fn null_space(a: &CMat, rel_tol: f64) -> CMat {
    let (m, n) = a.shape();
    if n == 0 {
        return CMat::zeros(0, 0);
    }
    if m == 0 {
        return CMat::identity(n, n);
    }
    // nalgebra's SVD is thin: for a wide matrix it returns only the first
    // m right singular vectors, which is not enough to read off the null
    // space. Padding with zero rows makes the matrix square without
    // changing the row space, so the full V comes back.
    let work = if m < n {
        let mut padded = CMat::zeros(n, n);
        padded.view_mut((0, 0), (m, n)).copy_from(a);
        padded
    } else {
        a.clone()
    };
    let svd = work.svd(false, true);
    let vt = svd.v_t.as_ref().expect("svd: Vᵀ requested");
    let smax = svd.singular_values.max();
    let cut = if smax > 0.0 { rel_tol * smax } else { f64::MAX };
    let rank = svd.singular_values.iter().filter(|&&s| s > cut).count();
    let nullity = n - rank;
    let mut basis = CMat::zeros(n, nullity);
    for (j, row) in (rank..n).enumerate() {
        basis.set_column(j, &vt.row(row).transpose().map(|z| z.conj()));
    }
    basis
}

/// Inverse of a square matrix, rejecting condition numbers above
/// [`COND_LIMIT`] so degenerate channel draws surface as errors instead
/// of garbage downstream.
pub fn checked_inverse(a: &CMat, context: &'static str) -> Result<CMat> {
    assert_eq!(a.nrows(), a.ncols(), "checked_inverse: square input");
    let svd = a.clone().svd(false, false);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smin <= 0.0 || smax / smin > COND_LIMIT {
        return Err(Error::Singular { context, sigma_min: smin });
    }
    a.clone()
        .try_inverse()
        .ok_or(Error::Singular { context, sigma_min: smin })
}

/// Numerical rank with the same cutoff rule as [`null_space`].
pub fn rank(a: &CMat, rel_tol: f64) -> usize {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return 0;
    }
    let svd = a.clone().svd(false, false);
    let smax = svd.singular_values.max();
    if smax == 0.0 {
        return 0;
    }
    let cut = rel_tol * smax;
    svd.singular_values.iter().filter(|&&s| s > cut).count()
}

/// Eigendecomposition of a Hermitian matrix: returns `(values, vectors)`
/// with real eigenvalues sorted in descending order and the matching
/// orthonormal eigenvectors as columns, so `a = V diag(λ) Vᴴ`.
pub fn herm_eig(a: &CMat) -> (RVec, CMat) {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "herm_eig: matrix must be square");
    let eig = a.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .partial_cmp(&eig.eigenvalues[i])
            .expect("herm_eig: NaN eigenvalue")
    });
    let mut vals = RVec::zeros(n);
    let mut vecs = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vals[dst] = eig.eigenvalues[src];
        vecs.set_column(dst, &eig.eigenvectors.column(src));
    }
    (vals, vecs)
}

/// Hermitian part `(a + aᴴ)/2`, useful to scrub tiny asymmetries before
/// an eigendecomposition or Cholesky factorization.
pub fn hermitian_part(a: &CMat) -> CMat {
    (a + a.adjoint()) * C64::new(0.5, 0.0)
}

/// Selection matrices for the K-user neutralization constraints.
///
/// Working with `vec(S)` of a `k × k` matrix, `t` picks the `k² − k`
/// off-diagonal entries (scanning column by column, as `vec` does) and
/// `l` picks the `k` diagonal entries. Rows are 0/1 with a single 1 each,
/// and stacking them reorders `vec(S)` into (off-diagonal, diagonal).
pub fn selection_matrices(k: usize) -> (CMat, CMat) {
    let n = k * k;
    let one = C64::new(1.0, 0.0);
    let mut t = CMat::zeros(n - k, n);
    let mut l = CMat::zeros(k, n);
    let mut ti = 0;
    let mut li = 0;
    for c in 0..k {
        for r in 0..k {
            let idx = c * k + r;
            if r == c {
                l[(li, idx)] = one;
                li += 1;
            } else {
                t[(ti, idx)] = one;
                ti += 1;
            }
        }
    }
    (t, l)
}

/// Frobenius-norm relative error `‖a − b‖_F / max(‖b‖_F, 1)`, the metric
/// used by the algebraic-identity tests.
pub fn rel_err(a: &CMat, b: &CMat) -> f64 {
    (a - b).norm() / b.norm().max(1.0)
}

/// `aᴴ b` for vectors, as a scalar.
pub fn inner(a: &CVec, b: &CVec) -> C64 {
    a.dotc(b)
}

/// Embed a complex matrix into the real matrix `[[Re, −Im], [Im, Re]]`.
///
/// The map is a *-algebra homomorphism: it preserves products, adjoints
/// (as transposes) and positive semidefiniteness, and
/// `tr(embed(A) X̂) = 2 Re tr(A V)` when `X̂` embeds `V` the same way.
pub fn embed_real(a: &CMat) -> RMat {
    let (m, n) = a.shape();
    let mut out = RMat::zeros(2 * m, 2 * n);
    for j in 0..n {
        for i in 0..m {
            let z = a[(i, j)];
            out[(i, j)] = z.re;
            out[(i + m, j + n)] = z.re;
            out[(i, j + n)] = -z.im;
            out[(i + m, j)] = z.im;
        }
    }
    out
}

/// Recover the complex matrix `V = (X₁₁ + X₂₂)/2 + i (X₂₁ − X₁₂)/2` from
/// a real matrix partitioned into four `m × n` blocks. For `X̂` positive
/// semidefinite this is the compression `½ T X̂ Tᴴ` with `T = [I, iI]`, so
/// positive semidefiniteness carries over.
pub fn unembed_real(x: &RMat) -> CMat {
    let m = x.nrows() / 2;
    let n = x.ncols() / 2;
    assert_eq!(x.nrows(), 2 * m, "unembed_real: odd row count");
    assert_eq!(x.ncols(), 2 * n, "unembed_real: odd column count");
    let mut out = CMat::zeros(m, n);
    for j in 0..n {
        for i in 0..m {
            let re = 0.5 * (x[(i, j)] + x[(i + m, j + n)]);
            let im = 0.5 * (x[(i + m, j)] - x[(i, j + n)]);
            out[(i, j)] = C64::new(re, im);
        }
    }
    out
}
