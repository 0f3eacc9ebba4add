//! Two-qubit Stokes parameters: `X = ¼ Σ S_{n,m} σ_n ⊗ σ_m` with
//! `S_{n,m} = Tr(X σ_n ⊗ σ_m)`, so a unit-trace operator has `S_{0,0} = 1`.

use serde::{Deserialize, Serialize};

use super::{c, hermitian_deviation, CMatrix, I, ONE, ZERO};
use crate::{Error, Result};

/// Imaginary parts of Stokes parameters above this reject the input.
const REAL_TOL: f64 = 1e-10;

/// Single-qubit Pauli matrix `σ_n`, `n ∈ {0, 1, 2, 3}` = `{I, X, Y, Z}`.
pub fn pauli(n: usize) -> CMatrix {
    match n {
        0 => CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, ONE]),
        1 => CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
        2 => CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]),
        3 => CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
        _ => panic!("Pauli index {n} out of range"),
    }
}

/// Real coefficients `S_{n,m}` of a Hermitian two-qubit operator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StokesTensor(pub [[f64; 4]; 4]);

impl StokesTensor {
    pub fn zeros() -> Self {
        Self([[0.0; 4]; 4])
    }

    pub fn get(&self, n: usize, m: usize) -> f64 {
        self.0[n][m]
    }

    pub fn set(&mut self, n: usize, m: usize, v: f64) {
        self.0[n][m] = v;
    }

    /// Flattened row-major, index `4n + m`.
    pub fn to_vec(&self) -> Vec<f64> {
        self.0.iter().flatten().copied().collect()
    }

    pub fn from_slice(v: &[f64]) -> Self {
        let mut s = Self::zeros();
        for n in 0..4 {
            for m in 0..4 {
                s.0[n][m] = v[4 * n + m];
            }
        }
        s
    }
}

fn pauli_pair(n: usize, m: usize) -> CMatrix {
    pauli(n).kronecker(&pauli(m))
}

pub fn pauli_expand(op: &CMatrix) -> Result<StokesTensor> {
    if op.nrows() != 4 || op.ncols() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, actual: op.nrows() });
    }
    let herm = hermitian_deviation(op);
    if herm > REAL_TOL {
        return Err(Error::NotHermitian(herm));
    }
    let mut s = StokesTensor::zeros();
    for n in 0..4 {
        for m in 0..4 {
            let v = (op * pauli_pair(n, m)).trace();
            if v.im.abs() > REAL_TOL {
                return Err(Error::NotHermitian(v.im.abs()));
            }
            s.0[n][m] = v.re;
        }
    }
    Ok(s)
}

pub fn pauli_assemble(s: &StokesTensor) -> CMatrix {
    let mut out = CMatrix::zeros(4, 4);
    for n in 0..4 {
        for m in 0..4 {
            if s.0[n][m] != 0.0 {
                out += pauli_pair(n, m) * c(s.0[n][m] / 4.0, 0.0);
            }
        }
    }
    out
}
