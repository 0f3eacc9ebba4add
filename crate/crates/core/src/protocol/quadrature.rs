use nalgebra::{DMatrix, SymmetricEigen};

/// Nodes and weights of a `k`-point Gauss–Hermite rule for the Gaussian
/// `N(0, σ²)`, with weights summing to 1. `σ = 0` or `k ≤ 1` collapses to the
/// single point `(0, 1)`.
pub fn gaussian_quadrature(k: usize, sigma: f64) -> Vec<(f64, f64)> {
    if k <= 1 || sigma == 0.0 {
        return vec![(0.0, 1.0)];
    }
    // Golub–Welsch on the Jacobi matrix of the physicists' Hermite polynomials.
    let mut j = DMatrix::<f64>::zeros(k, k);
    for i in 1..k {
        let b = (i as f64 / 2.0).sqrt();
        j[(i, i - 1)] = b;
        j[(i - 1, i)] = b;
    }
    let eig = SymmetricEigen::new(j);
    let mut pts: Vec<(f64, f64)> = (0..k)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (std::f64::consts::SQRT_2 * sigma * eig.eigenvalues[i], v0 * v0)
        })
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    pts
}
