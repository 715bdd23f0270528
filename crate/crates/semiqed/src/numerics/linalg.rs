//! Dense linear-algebra helpers shared by the Fock and frame layers.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eigh, UPLO};

use crate::error::{Error, Result};
use crate::{C64, CMat, CVec};

/// Kronecker product of two complex matrices (left factor slow index).
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ra, ca) = a.dim();
    let (rb, cb) = b.dim();
    let mut out = Array2::zeros((ra * rb, ca * cb));
    for i in 0..ra {
        for j in 0..ca {
            let aij = a[[i, j]];
            if aij == C64::new(0.0, 0.0) {
                continue;
            }
            let mut block = out.slice_mut(ndarray::s![i * rb..(i + 1) * rb, j * cb..(j + 1) * cb]);
            block.zip_mut_with(b, |o, &bkl| *o = aij * bkl);
        }
    }
    out
}

/// Complex identity matrix.
pub fn eye(n: usize) -> CMat {
    Array2::eye(n)
}

/// Hermitian conjugate.
pub fn dagger(a: &CMat) -> CMat {
    a.t().mapv(|v| v.conj())
}

/// Max-norm deviation from the identity of `A† A`.
pub fn unitarity_defect(a: &CMat) -> f64 {
    let g = dagger(a).dot(a);
    let n = g.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
            worst = worst.max((g[[i, j]] - target).norm());
        }
    }
    worst
}

/// Max-norm deviation from Hermitian symmetry.
pub fn hermiticity_defect(a: &CMat) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((a[[i, j]] - a[[j, i]].conj()).norm());
        }
    }
    worst
}

/// Entry-wise max norm.
pub fn max_norm(a: &CMat) -> f64 {
    a.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Frobenius norm.
pub fn fro_norm(a: &CMat) -> f64 {
    a.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// Operator (spectral) norm via the Hermitian eigenvalues of `A† A`.
pub fn spectral_norm(a: &CMat) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let g = dagger(a).dot(a);
    match g.eigh(UPLO::Lower) {
        Ok((evals, _)) => evals.iter().fold(0.0f64, |m, &v| m.max(v)).max(0.0).sqrt(),
        // Fall back to the Frobenius norm bound on a numerical failure.
        Err(_) => fro_norm(a),
    }
}

/// Eigendecomposition of a Hermitian matrix, ascending eigenvalues, with
/// the eigenvectors as columns of the returned matrix.
pub fn eigh_hermitian(a: &CMat) -> Result<(Array1<f64>, CMat)> {
    let (evals, raw) = a
        .eigh(UPLO::Lower)
        .map_err(|e| Error::Linalg(format!("hermitian eigendecomposition: {e}")))?;
    // ndarray-linalg 0.18 hands back the LAPACK data such that for complex
    // input the *conjugated* columns are the eigenvectors. Normalize to true
    // columns by comparing reconstruction residuals.
    let col = raw.column(0).to_owned();
    let resid = |v: &CVec| -> f64 {
        let av = a.dot(v);
        av.iter()
            .zip(v.iter())
            .map(|(x, y)| (x - y * C64::new(evals[0], 0.0)).norm_sqr())
            .sum::<f64>()
            .sqrt()
    };
    let conj_col = col.mapv(|v| v.conj());
    if resid(&conj_col) < resid(&col) {
        Ok((evals, raw.mapv(|v| v.conj())))
    } else {
        Ok((evals, raw))
    }
}

/// Unitary `exp(-i s H)` for Hermitian `H` given by its eigendecomposition.
pub fn unitary_from_eigh(evals: &Array1<f64>, evecs: &CMat, s: f64) -> CMat {
    let phases: Array1<C64> = evals.mapv(|l| C64::from_polar(1.0, -s * l));
    // V diag(phases) V†
    let mut scaled = evecs.clone();
    for (mut col, ph) in scaled.columns_mut().into_iter().zip(phases.iter()) {
        col.mapv_inplace(|v| v * ph);
    }
    scaled.dot(&dagger(evecs))
}

/// Matrix exponential `exp(-i s H)` of a Hermitian matrix.
pub fn expm_neg_i_hermitian(h: &CMat, s: f64) -> Result<CMat> {
    let (evals, evecs) = eigh_hermitian(h)?;
    Ok(unitary_from_eigh(&evals, &evecs, s))
}

/// Real symmetric eigendecomposition.
pub fn eigh_real(a: &Array2<f64>) -> Result<(Array1<f64>, Array2<f64>)> {
    a.eigh(UPLO::Lower)
        .map_err(|e| Error::Linalg(format!("symmetric eigendecomposition: {e}")))
}
