//! Pauli matrices and their embeddings into the `N`-spin space `(C²)^{⊗N}`.

use ndarray::array;

use crate::numerics::linalg::{eye, kron};
use crate::{C64, CMat};

/// Pauli matrix `σ_{j+1}` for the Cartesian index `j ∈ {0, 1, 2}`.
pub fn sigma(j: usize) -> CMat {
    let z = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let i = C64::i();
    match j {
        0 => array![[z, one], [one, z]],
        1 => array![[z, -i], [i, z]],
        2 => array![[one, z], [z, -one]],
        _ => panic!("sigma: Cartesian index {j} out of range"),
    }
}

/// `σ_j^{[λ]}`: the Pauli matrix acting on spin `λ` (0-based) inside
/// `(C²)^{⊗N}`, identity elsewhere.
pub fn sigma_at(n_spins: usize, lambda: usize, j: usize) -> CMat {
    assert!(lambda < n_spins, "sigma_at: spin index out of range");
    let left = eye(1 << lambda);
    let right = eye(1 << (n_spins - lambda - 1));
    kron(&kron(&left, &sigma(j)), &right)
}

/// Identity on the `N`-spin space.
pub fn spin_identity(n_spins: usize) -> CMat {
    eye(1 << n_spins)
}

/// The constant-field term `Σ_λ Σ_j β_j σ_j^{[λ]}`.
pub fn constant_field_term(n_spins: usize, beta: [f64; 3]) -> CMat {
    let dim = 1 << n_spins;
    let mut out = CMat::zeros((dim, dim));
    for lam in 0..n_spins {
        for j in 0..3 {
            if beta[j] != 0.0 {
                out.scaled_add(C64::new(beta[j], 0.0), &sigma_at(n_spins, lam, j));
            }
        }
    }
    out
}
