use super::{c, hermitian_deviation, CMatrix};
use crate::{Error, Result};

const HERMITIAN_INPUT_TOL: f64 = 1e-9;
/// Spectra with no eigenvalue below this are returned unchanged.
const PSD_TOL: f64 = 1e-12;

/// Closest positive semi-definite operator obtained by clipping negative
/// eigenvalues to zero and rescaling to the input trace.
///
/// Fails when the positive part is empty or the input trace is not positive,
/// since no PSD operator can then carry the input trace.
pub fn nearest_psd(op: &CMatrix) -> Result<CMatrix> {
    if op.nrows() != op.ncols() {
        return Err(Error::DimensionMismatch { expected: op.nrows(), actual: op.ncols() });
    }
    let herm = hermitian_deviation(op);
    if herm > HERMITIAN_INPUT_TOL {
        return Err(Error::NotHermitian(herm));
    }
    let h = (op + op.adjoint()) * c(0.5, 0.0);
    let eig = h.clone().symmetric_eigen();
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min >= -PSD_TOL {
        return Ok(h);
    }
    let trace: f64 = eig.eigenvalues.iter().sum();
    let clipped: Vec<f64> = eig.eigenvalues.iter().map(|e| e.max(0.0)).collect();
    let positive: f64 = clipped.iter().sum();
    if trace <= 0.0 || positive <= 0.0 {
        return Err(Error::Degenerate(format!(
            "cannot project spectrum with trace {trace:.3e} and positive mass {positive:.3e}"
        )));
    }
    let scale = trace / positive;
    log::debug!("nearest_psd: clipped min eigenvalue {min:.3e}, rescaled by {scale:.6}");
    let n = op.nrows();
    let mut out = CMatrix::zeros(n, n);
    for (k, lam) in clipped.iter().enumerate() {
        if *lam > 0.0 {
            let v = eig.eigenvectors.column(k);
            out += (v * v.adjoint()) * c(lam * scale, 0.0);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{min_eigenvalue, BellState};

    fn diag(v: &[f64]) -> CMatrix {
        let mut m = CMatrix::zeros(v.len(), v.len());
        for (i, x) in v.iter().enumerate() {
            m[(i, i)] = c(*x, 0.0);
        }
        m
    }

    #[test]
    fn psd_input_unchanged() {
        let p = BellState::PsiMinus.projector() * c(0.7, 0.0) + diag(&[0.1, 0.1, 0.05, 0.05]);
        assert!((nearest_psd(&p).unwrap() - &p).norm() < 1e-14);
    }

    #[test]
    fn clips_and_rescales_by_hand() {
        // spectrum (0.55, -0.05, 0.25, 0.25), trace 1; clipped mass 1.05
        let m = diag(&[1.1, -0.1, 0.5, 0.5]) * c(0.5, 0.0);
        let out = nearest_psd(&m).unwrap();
        let want = diag(&[0.55 / 1.05, 0.0, 0.25 / 1.05, 0.25 / 1.05]);
        assert!((out - want).norm() < 1e-14);
    }

    #[test]
    fn idempotent() {
        let mut m = BellState::PhiPlus.projector() * c(1.2, 0.0);
        m -= BellState::PsiPlus.projector() * c(0.2, 0.0);
        let once = nearest_psd(&m).unwrap();
        let twice = nearest_psd(&once).unwrap();
        assert!((once.clone() - twice).norm() < 1e-14);
        assert!(min_eigenvalue(&once) > -1e-14);
        assert!((once.trace().re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn all_negative_spectrum_is_degenerate() {
        let m = -CMatrix::identity(4, 4);
        assert!(matches!(nearest_psd(&m), Err(Error::Degenerate(_))));
    }

    #[test]
    fn non_hermitian_rejected() {
        let mut m = CMatrix::identity(2, 2);
        m[(0, 1)] = c(0.3, 0.0);
        assert!(matches!(nearest_psd(&m), Err(Error::NotHermitian(_))));
    }
}
