//! Recovers a hidden rotation from paired points with the orthogonal
//! Procrustes solution, then checks the Jacobi SVD it is built on.
//!
//! cargo run --release --example procrustes

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use xlingual::align::{orthogonality_error, procrustes, svd_small};
use xlingual::matrix::Matrix;

fn main() -> xlingual::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let d = 50;
    let random = |rng: &mut ChaCha8Rng, r, c| Matrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0));

    // an orthogonal Q from the left singular vectors of a random matrix
    let q = svd_small(&random(&mut rng, d, d))?.u;
    let x = random(&mut rng, d, 300);
    let y = q.matmul(&x);
    let w = procrustes(&x, &y)?;
    println!("|W - Q|_F = {:.3e}", w.matrix().sub(&q).frobenius_norm());
    println!("|W^T W - I|_max = {:.3e}", orthogonality_error(w.matrix()));

    let m = random(&mut rng, 6, 6);
    let svd = svd_small(&m)?;
    let s: Vec<String> = svd.s.iter().map(|v| format!("{v:.4}")).collect();
    println!("singular values of a 6x6 matrix: {}", s.join(" "));
    println!("reconstruction error {:.3e}", svd.reconstruct().sub(&m).frobenius_norm());
    Ok(())
}
