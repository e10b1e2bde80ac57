//! Process matrices in the two-qubit Pauli basis.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::linalg::{hermiticity_defect, trace_c};
use crate::{FluxError, Result, C64};

fn single_paulis() -> [DMatrix<C64>; 4] {
    let z = C64::new(0.0, 0.0);
    let o = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    [
        DMatrix::from_row_slice(2, 2, &[o, z, z, o]),
        DMatrix::from_row_slice(2, 2, &[z, o, o, z]),
        DMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
        DMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
    ]
}

/// `{I,X,Y,Z} ⊗ {I,X,Y,Z}` with qubit A as the first factor; entry
/// `4·a + b` is `σ_a ⊗ σ_b`.
pub fn pauli_basis() -> Vec<DMatrix<C64>> {
    let p = single_paulis();
    let mut out = Vec::with_capacity(16);
    for a in &p {
        for b in &p {
            out.push(a.kronecker(b));
        }
    }
    out
}

/// Process matrix `χ` with `E(ρ) = Σ χ_mn P_m ρ P_n`, normalized so that a
/// unitary channel has unit trace. A trace below one measures leakage.
#[derive(Debug, Clone, PartialEq)]
pub struct ChiMatrix {
    pub data: DMatrix<C64>,
}

impl ChiMatrix {
    /// Rank-one `χ` of conjugation by the 4×4 operator `u`.
    pub fn from_unitary(u: &DMatrix<C64>) -> Self {
        let coeffs: Vec<C64> = pauli_basis().iter().map(|p| trace_c(&(p.adjoint() * u)) / 4.0).collect();
        let data = DMatrix::from_fn(16, 16, |m, n| coeffs[m] * coeffs[n].conj());
        ChiMatrix { data }
    }

    pub fn trace(&self) -> f64 {
        trace_c(&self.data).re
    }

    /// `Tr(χ_self · χ_other)`.
    pub fn overlap(&self, other: &ChiMatrix) -> f64 {
        let mut acc = C64::new(0.0, 0.0);
        for m in 0..16 {
            for n in 0..16 {
                acc += self.data[(m, n)] * other.data[(n, m)];
            }
        }
        acc.re
    }

    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.data.clone()).eigenvalues.min()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        hermiticity_defect(&self.data)
    }

    pub fn scaled(&self, w: f64) -> ChiMatrix {
        ChiMatrix { data: &self.data * C64::new(w, 0.0) }
    }
}

/// Reconstructs `χ` by feeding the 16 operators `|i⟩⟨j|` through `channel`.
pub fn process_tomography<F>(channel: F) -> Result<ChiMatrix>
where
    F: Fn(&DMatrix<C64>) -> Result<DMatrix<C64>> + Sync,
{
    let inputs: Vec<(usize, usize)> = (0..4).flat_map(|i| (0..4).map(move |j| (i, j))).collect();
    let outputs: Vec<DMatrix<C64>> = inputs
        .par_iter()
        .map(|&(i, j)| {
            let mut e = DMatrix::<C64>::zeros(4, 4);
            e[(i, j)] = C64::new(1.0, 0.0);
            let out = channel(&e)?;
            if out.nrows() != 4 || out.ncols() != 4 {
                return Err(FluxError::invalid("channel must map 4x4 operators to 4x4 operators"));
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    // Choi matrix J[(k,i),(l,j)] = E(|i><j|)[k,l]
    let mut choi = DMatrix::<C64>::zeros(16, 16);
    for (idx, &(i, j)) in inputs.iter().enumerate() {
        let out = &outputs[idx];
        for k in 0..4 {
            for l in 0..4 {
                choi[(4 * k + i, 4 * l + j)] = out[(k, l)];
            }
        }
    }
    let defect = hermiticity_defect(&choi);
    if defect > 1e-9 {
        return Err(FluxError::numerical(format!("channel is not Hermiticity preserving (defect {defect:e})")));
    }
    let vecs: Vec<Vec<C64>> = pauli_basis()
        .iter()
        .map(|p| (0..16).map(|idx| p[(idx / 4, idx % 4)]).collect())
        .collect();
    let mut data = DMatrix::<C64>::zeros(16, 16);
    for m in 0..16 {
        for n in 0..16 {
            let mut acc = C64::new(0.0, 0.0);
            for r in 0..16 {
                let left = vecs[m][r].conj();
                if left == C64::new(0.0, 0.0) {
                    continue;
                }
                for c in 0..16 {
                    acc += left * choi[(r, c)] * vecs[n][c];
                }
            }
            data[(m, n)] = acc / 16.0;
        }
    }
    Ok(ChiMatrix { data })
}
