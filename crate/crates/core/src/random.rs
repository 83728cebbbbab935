//! Random states, measurements and channels for initialization and testing.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::{
    inv_sqrt_psd, tensor_product, ComplexMatrix, DensityMatrix, KrausChannel, Povm,
    C64,
};

pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// Normalized complex Gaussian vector (Haar-distributed pure state).
pub fn random_pure_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<C64> {
    let v: Vec<C64> = (0..dim).map(|_| complex_gaussian(rng)).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}

pub fn random_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    gaussian_matrix(dim, dim, rng).hermitian_part()
}

/// `G G^dagger / Tr` with `G` a `dim x rank` Gaussian matrix.
pub fn random_density<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R) -> DensityMatrix {
    let g = gaussian_matrix(dim, rank.max(1), rng);
    let m = g.matmul(&g.adjoint());
    let tr = m.trace().re;
    DensityMatrix::new(m.scale_real(1.0 / tr)).expect("Wishart matrix is a valid state")
}

pub fn random_pure_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DensityMatrix {
    DensityMatrix::from_pure(&random_pure_vector(dim, rng)).expect("unit vector")
}

/// Random PSD effects `G_a` normalized as `S^{-1/2} G_a S^{-1/2}`, `S = Σ G_a`.
pub fn random_povm<R: Rng + ?Sized>(dim: usize, outcomes: usize, rng: &mut R) -> Povm {
    let raw: Vec<ComplexMatrix> = (0..outcomes)
        .map(|_| {
            let g = gaussian_matrix(dim, 1, rng);
            let mut e = g.matmul(&g.adjoint());
            // keep the sum invertible when outcomes < dim
            e.add_scaled(&ComplexMatrix::identity(dim), 1e-3);
            e
        })
        .collect();
    normalize_effects(raw).expect("random effects have full-rank sum")
}

/// Rescales PSD operators `E_a` to `S^{-1/2} E_a S^{-1/2}`, `S = Σ E_a`.
/// The map is repeated while round-off in an ill-conditioned `S` leaves a
/// visible completeness error.
pub fn normalize_effects(mut effects: Vec<ComplexMatrix>) -> crate::Result<Povm> {
    let dim = effects[0].rows();
    for _ in 0..4 {
        let mut total = ComplexMatrix::zeros(dim, dim);
        for e in &effects {
            total.add_scaled(e, 1.0);
        }
        if total.max_abs_diff(&ComplexMatrix::identity(dim)) < 1e-14 {
            break;
        }
        let s = inv_sqrt_psd(&total, 1e-14)?;
        effects = effects.iter().map(|e| s.conjugate(e).hermitian_part()).collect();
    }
    Povm::new(effects)
}

pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let g = gaussian_matrix(dim, dim, rng);
    let s = inv_sqrt_psd(&g.adjoint().matmul(&g), 1e-14).expect("Hermitian");
    g.matmul(&s)
}

/// Random channel from a Gaussian isometry `in_dim -> out_dim * n_kraus`.
pub fn random_channel<R: Rng + ?Sized>(
    in_dim: usize,
    out_dim: usize,
    n_kraus: usize,
    rng: &mut R,
) -> KrausChannel {
    let stacked = gaussian_matrix(out_dim * n_kraus, in_dim, rng);
    let s = inv_sqrt_psd(&stacked.adjoint().matmul(&stacked), 1e-14).expect("Hermitian");
    let iso = stacked.matmul(&s);
    let ops = (0..n_kraus)
        .map(|k| ComplexMatrix::from_fn(out_dim, in_dim, |r, c| iso[(k * out_dim + r, c)]))
        .collect();
    KrausChannel::new(ops).expect("isometry blocks form a channel")
}

/// Random product state `rho_A ⊗ rho_B`.
pub fn random_product_state<R: Rng + ?Sized>(dim_a: usize, dim_b: usize, rng: &mut R) -> DensityMatrix {
    let a = random_density(dim_a, dim_a, rng);
    let b = random_density(dim_b, dim_b, rng);
    DensityMatrix::new(tensor_product(a.matrix(), b.matrix())).expect("product of states")
}

