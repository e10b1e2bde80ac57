//! Small dense linear-algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::{FluxError, Result, C64};

/// Eigenvalues closer than this are treated as one degenerate block.
const DEGENERACY_TOL: f64 = 1e-10;

/// Sorted eigendecomposition of a real symmetric matrix.
///
/// Eigenvalues are ascending. Each eigenvector has its largest-magnitude
/// component positive (first such index on ties), which makes matrix
/// elements reproducible across runs and basis sizes.
#[derive(Debug, Clone)]
pub struct Eigh {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

pub fn eigh(m: &DMatrix<f64>) -> Result<Eigh> {
    let n = m.nrows();
    if n == 0 || m.ncols() != n {
        return Err(FluxError::invalid(format!("eigh needs a non-empty square matrix, got {}x{}", n, m.ncols())));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(FluxError::numerical("eigensolver input contains non-finite entries"));
    }
    let scale = m.amax().max(1.0);
    let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, 10_000).ok_or_else(|| {
        FluxError::numerical(format!("symmetric eigensolver did not converge (n = {n}, max|m| = {scale:e})"))
    })?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }

    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (values[end] - values[end - 1]).abs() < DEGENERACY_TOL * scale {
            end += 1;
        }
        if end - start > 1 {
            log::warn!("degenerate eigenvalues at {:.12} (block of {}), re-orthogonalizing", values[start], end - start);
            gram_schmidt(&mut vectors, start, end);
        }
        start = end;
    }
    for j in 0..n {
        fix_sign(&mut vectors, j);
    }
    Ok(Eigh { values, vectors })
}

fn gram_schmidt(v: &mut DMatrix<f64>, start: usize, end: usize) {
    for j in start..end {
        for k in start..j {
            let proj = v.column(k).dot(&v.column(j));
            let ck = v.column(k).clone_owned();
            let mut cj = v.column_mut(j);
            cj.axpy(-proj, &ck, 1.0);
        }
        let norm = v.column(j).norm();
        v.column_mut(j).unscale_mut(norm);
    }
}

fn fix_sign(v: &mut DMatrix<f64>, j: usize) {
    let col = v.column(j);
    let max = col.amax();
    let pivot = col.iter().position(|x| x.abs() >= max - 1e-12).unwrap_or(0);
    if col[pivot] < 0.0 {
        v.column_mut(j).neg_mut();
    }
}

/// Applies a scalar function to a real symmetric matrix through its
/// eigendecomposition.
pub fn symmetric_fn(m: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> Result<DMatrix<f64>> {
    let eig = eigh(m)?;
    let fv = eig.values.map(f);
    let scaled = DMatrix::from_fn(m.nrows(), m.ncols(), |r, c| eig.vectors[(r, c)] * fv[c]);
    Ok(&scaled * eig.vectors.transpose())
}

/// `exp(-i·tau·k)` for real symmetric `k`.
pub fn expm_neg_i(k: &DMatrix<f64>, tau: f64) -> Result<DMatrix<C64>> {
    let eig = eigh(k)?;
    let n = k.nrows();
    let phases: Vec<C64> = eig.values.iter().map(|&e| C64::from_polar(1.0, -tau * e)).collect();
    let mut out = DMatrix::<C64>::zeros(n, n);
    // out = V diag(phases) V^T, V real.
    for c in 0..n {
        for r in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            for (m, p) in phases.iter().enumerate() {
                acc += p * (eig.vectors[(r, m)] * eig.vectors[(c, m)]);
            }
            out[(r, c)] = acc;
        }
    }
    Ok(out)
}

pub fn to_complex(m: &DMatrix<f64>) -> DMatrix<C64> {
    m.map(|x| C64::new(x, 0.0))
}

pub fn max_abs_c(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `max |m - m†|`.
pub fn hermiticity_defect(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for r in 0..n {
        for c in 0..n {
            worst = worst.max((m[(r, c)] - m[(c, r)].conj()).norm());
        }
    }
    worst
}

pub fn symmetry_defect(m: &DMatrix<f64>) -> f64 {
    (m - m.transpose()).amax()
}

/// `max |u†u - I|`.
pub fn unitarity_defect(u: &DMatrix<C64>) -> f64 {
    let g = u.adjoint() * u;
    let n = g.nrows();
    max_abs_c(&(g - DMatrix::<C64>::identity(n, n)))
}

pub fn trace_c(m: &DMatrix<C64>) -> C64 {
    m.diagonal().iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigh_sorted_with_sign_convention() {
        let m = DMatrix::from_row_slice(3, 3, &[2.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 2.0]);
        let e = eigh(&m).unwrap();
        assert!(e.values[0] < e.values[1] && e.values[1] < e.values[2]);
        for j in 0..3 {
            let col = e.vectors.column(j);
            let max = col.amax();
            let pivot = col.iter().position(|x| x.abs() >= max - 1e-12).unwrap();
            assert!(col[pivot] > 0.0);
        }
        let recon = &e.vectors * DMatrix::from_diagonal(&e.values) * e.vectors.transpose();
        assert!((recon - m).amax() < 1e-13);
    }

    #[test]
    fn degenerate_block_stays_orthonormal() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, 3.0]));
        let e = eigh(&m).unwrap();
        let g = e.vectors.transpose() * &e.vectors;
        assert!((g - DMatrix::identity(3, 3)).amax() < 1e-14);
    }

    #[test]
    fn expm_matches_rotation() {
        // exp(-i t σx) = cos t - i sin t σx
        let sx = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let u = expm_neg_i(&sx, 0.3).unwrap();
        assert!((u[(0, 0)] - C64::new(0.3f64.cos(), 0.0)).norm() < 1e-14);
        assert!((u[(0, 1)] - C64::new(0.0, -0.3f64.sin())).norm() < 1e-14);
        assert!(unitarity_defect(&u) < 1e-14);
    }

    #[test]
    fn rejects_non_square() {
        assert!(matches!(eigh(&DMatrix::zeros(2, 3)), Err(FluxError::InvalidArgument(_))));
    }
}
