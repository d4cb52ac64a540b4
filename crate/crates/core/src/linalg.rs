//! Dense complex matrix primitives used by the alternating solver.
//!
//! Everything here operates on small dense matrices (antenna counts), so the
//! implementations favor robustness and determinism over asymptotic speed.
//! Decompositions are delegated to nalgebra; the wrappers add the contracts
//! the solver relies on: internal symmetrization, ascending eigenvalue order,
//! a fixed eigenvector phase convention, and validated preconditions.

use nalgebra::{Complex, DMatrix};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Dense complex matrix with `f64` components.
pub type CMatrix = DMatrix<Complex<f64>>;

/// Threshold below which an eigenvalue disqualifies a matrix from being
/// treated as positive definite, relative to `max(1, ||A||_2)`.
const HPD_MIN_EIG_REL: f64 = 1e-12;

/// Full spectrum of a Hermitian matrix.
///
/// Eigenvalues are sorted ascending; column `i` of `eigenvectors` belongs to
/// `eigenvalues[i]`. Each eigenvector's phase is fixed so that its
/// largest-magnitude entry is real and non-negative, which makes repeated
/// decompositions of the same matrix bit-identical.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

/// Complex identity matrix.
pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Exact Hermitian part `(A + A^H) / 2`.
///
/// Idempotent at the bit level: applying it twice yields the same floats,
/// and the diagonal's imaginary part is exactly zero.
pub fn symmetrize(a: &CMatrix) -> CMatrix {
    let n = a.nrows();
    debug_assert_eq!(n, a.ncols());
    CMatrix::from_fn(n, n, |i, j| {
        let x = a[(i, j)];
        let y = a[(j, i)].conj();
        Complex::new(0.5 * (x.re + y.re), 0.5 * (x.im + y.im))
    })
}

fn all_finite(a: &CMatrix) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

fn require_square(a: &CMatrix, op: &str) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::Dimension(format!(
            "{op} expects a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(())
}

fn require_finite(a: &CMatrix, op: &str) -> Result<()> {
    if !all_finite(a) {
        return Err(Error::Validation(format!("{op}: matrix has non-finite entries")));
    }
    Ok(())
}

/// Rotate each column so its largest-magnitude entry is real non-negative.
fn fix_column_phases(u: &mut CMatrix) {
    for j in 0..u.ncols() {
        let mut best = 0usize;
        let mut best_mag = 0.0f64;
        for i in 0..u.nrows() {
            let mag = u[(i, j)].norm_sqr();
            if mag > best_mag {
                best_mag = mag;
                best = i;
            }
        }
        if best_mag > 0.0 {
            let z = u[(best, j)];
            let phase = z.conj() / z.norm();
            for i in 0..u.nrows() {
                u[(i, j)] *= phase;
            }
            // kill the residual imaginary dust on the anchor entry
            u[(best, j)] = Complex::new(u[(best, j)].re, 0.0);
        }
    }
}

/// Full eigendecomposition of a (numerically) Hermitian matrix.
///
/// The input is symmetrized internally, so assembled covariances that carry
/// rounding asymmetry are handled transparently.
pub fn hermitian_eig(a: &CMatrix) -> Result<HermitianEigen> {
    require_square(a, "hermitian_eig")?;
    require_finite(a, "hermitian_eig")?;
    let n = a.nrows();
    let sym = symmetrize(a);
    let eig = sym.symmetric_eigen();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());

    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut eigenvectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    fix_column_phases(&mut eigenvectors);

    Ok(HermitianEigen { eigenvalues, eigenvectors })
}

fn check_subspace_count(a: &CMatrix, b: usize, op: &str) -> Result<()> {
    if b < 1 || b > a.nrows() {
        return Err(Error::Validation(format!(
            "{op}: requested {b} eigenvectors from a {}x{} matrix",
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(())
}

/// Orthonormal basis of the invariant subspace of the `b` smallest eigenvalues.
pub fn v_min(a: &CMatrix, b: usize) -> Result<CMatrix> {
    check_subspace_count(a, b, "v_min")?;
    let eig = hermitian_eig(a)?;
    Ok(eig.eigenvectors.columns(0, b).into_owned())
}

/// Orthonormal basis of the invariant subspace of the `b` largest eigenvalues.
pub fn v_max(a: &CMatrix, b: usize) -> Result<CMatrix> {
    check_subspace_count(a, b, "v_max")?;
    let eig = hermitian_eig(a)?;
    let n = a.nrows();
    Ok(eig.eigenvectors.columns(n - b, b).into_owned())
}

/// Orthonormal basis of the subspace orthogonal to the columns of `u`.
///
/// `u` must be `n x m` with `m < n` and orthonormal columns. The result `c`
/// satisfies `u^H c = 0` and `[u | c]` unitary. An empty `u` (m = 0) yields
/// the identity basis.
pub fn orthonormal_complement(u: &CMatrix) -> Result<CMatrix> {
    let (n, m) = (u.nrows(), u.ncols());
    if m >= n {
        return Err(Error::Dimension(format!(
            "orthonormal_complement: no complement for {n}x{m} with m >= n"
        )));
    }
    require_finite(u, "orthonormal_complement")?;
    if m == 0 {
        return Ok(identity(n));
    }
    let gram_defect = (u.adjoint() * u - identity(m)).norm();
    if gram_defect > 1e-8 {
        return Err(Error::Validation(format!(
            "orthonormal_complement: input columns are not orthonormal (defect {gram_defect:.3e})"
        )));
    }
    // Eigenvectors of the complement projector I - U U^H with eigenvalue ~1.
    let projector = identity(n) - u * u.adjoint();
    v_max(&projector, n - m)
}

/// Haar-style random matrix with orthonormal columns.
///
/// Orthonormalizes an i.i.d. complex Gaussian draw via QR, with the R-diagonal
/// phase absorbed into Q so the distribution is uniform and the output is
/// fully determined by the generator state.
pub fn random_semi_unitary<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Result<CMatrix> {
    if cols > rows {
        return Err(Error::Dimension(format!(
            "random_semi_unitary: cols {cols} exceeds rows {rows}"
        )));
    }
    if cols == 0 {
        return Ok(CMatrix::zeros(rows, 0));
    }
    let mut g = CMatrix::zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            g[(i, j)] = Complex::new(re, im);
        }
    }
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..cols {
        let d = r[(j, j)];
        let mag = d.norm();
        if mag > 0.0 {
            let phase = d / mag;
            for i in 0..rows {
                q[(i, j)] *= phase;
            }
        }
    }
    Ok(q)
}

fn validate_hpd_spectrum(a: &CMatrix, op: &str) -> Result<CMatrix> {
    require_square(a, op)?;
    require_finite(a, op)?;
    let sym = symmetrize(a);
    let eig = sym.clone().symmetric_eigen();
    let min_eig = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_abs = eig.eigenvalues.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    if min_eig <= HPD_MIN_EIG_REL * max_abs.max(1.0) {
        return Err(Error::NotPositiveDefinite { min_eigenvalue: min_eig });
    }
    Ok(sym)
}

/// Base-2 log-determinant of a Hermitian positive definite matrix.
pub fn logdet_hpd(a: &CMatrix) -> Result<f64> {
    let sym = validate_hpd_spectrum(a, "logdet_hpd")?;
    let chol = sym
        .cholesky()
        .ok_or(Error::NotPositiveDefinite { min_eigenvalue: 0.0 })?;
    let l = chol.l();
    let mut acc = 0.0;
    for i in 0..l.nrows() {
        acc += l[(i, i)].re.log2();
    }
    Ok(2.0 * acc)
}

/// Solve `A X = B` for Hermitian positive definite `A`.
pub fn solve_hpd(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if a.nrows() != b.nrows() {
        return Err(Error::Dimension(format!(
            "solve_hpd: A is {}x{} but B has {} rows",
            a.nrows(),
            a.ncols(),
            b.nrows()
        )));
    }
    let sym = validate_hpd_spectrum(a, "solve_hpd")?;
    let chol = sym
        .cholesky()
        .ok_or(Error::NotPositiveDefinite { min_eigenvalue: 0.0 })?;
    Ok(chol.solve(b))
}
