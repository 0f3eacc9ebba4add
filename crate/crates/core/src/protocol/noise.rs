//! Atom-only maps on the two-qubit space, as 16 × 16 superoperators.

use std::f64::consts::FRAC_PI_2;

use crate::qstate::{c, CMatrix, Superop, ONE, ZERO};
use crate::{Error, Result};

fn pauli_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
}

fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

fn local_pair(kraus: &[CMatrix]) -> Vec<CMatrix> {
    let id = CMatrix::identity(2, 2);
    let mut out = Vec::new();
    for k1 in kraus {
        for k2 in kraus {
            out.push(kron(k1, k2));
        }
    }
    if kraus.is_empty() {
        out.push(kron(&id, &id));
    }
    out
}

/// Phase damping on both atoms for a duration `t`: every `z`-basis
/// coherence of a single qubit decays by `exp(−t/T₂)`. An infinite `T₂`
/// gives the identity.
pub fn dephasing(t: f64, t2: f64) -> Superop {
    if t <= 0.0 || t2.is_infinite() {
        return Superop::identity(4);
    }
    let lambda = (-t / t2).exp();
    let q = (1.0 - lambda) / 2.0;
    let k = [CMatrix::identity(2, 2) * c((1.0 - q).sqrt(), 0.0), pauli_z() * c(q.sqrt(), 0.0)];
    Superop::from_kraus(4, &local_pair(&k))
}

/// Single-qubit depolarisation `ρ ↦ (1 − p)ρ + p·Tr(ρ)·I/2` on both atoms.
pub fn depolarizing(p: f64) -> Superop {
    if p <= 0.0 {
        return Superop::identity(4);
    }
    let x = CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]);
    let y = CMatrix::from_row_slice(2, 2, &[ZERO, c(0.0, -1.0), c(0.0, 1.0), ZERO]);
    let s = c((p / 4.0).sqrt(), 0.0);
    let k = [
        CMatrix::identity(2, 2) * c((1.0 - 3.0 * p / 4.0).sqrt(), 0.0),
        x * s,
        y * s,
        pauli_z() * s,
    ];
    Superop::from_kraus(4, &local_pair(&k))
}

/// `R_y(θ) = exp(−iθσ_y/2)` on a single qubit.
pub fn ry(theta: f64) -> CMatrix {
    let (s, co) = (theta / 2.0).sin_cos();
    CMatrix::from_row_slice(2, 2, &[c(co, 0.0), c(-s, 0.0), c(s, 0.0), c(co, 0.0)])
}

/// Simultaneous `R_y(angle)` on both atoms; `angle` must be `±π/2`.
pub fn rotation_unitary(angle: f64) -> Result<CMatrix> {
    if (angle.abs() - FRAC_PI_2).abs() > 1e-12 {
        return Err(Error::UnsupportedAngle(angle));
    }
    let r = ry(angle);
    Ok(kron(&r, &r))
}
