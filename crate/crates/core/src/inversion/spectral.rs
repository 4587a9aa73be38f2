//! Spectral probes of the restricted forward operator.
//!
//! Contraction and conditioning diagnostics need the extreme singular values
//! of moderately sized operators (tens of profile nodes). The probes
//! assemble the small Gram matrix column by column through forward/adjoint
//! applications, then run plain power iteration for the top eigenvalue and
//! inverse power iteration (through a Cholesky factorization) for the bottom
//! one. The iteration budget is fixed; runs that fail to settle within it
//! are flagged rather than silently trusted.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Iterations granted to each eigenvalue estimate.
pub const PROBE_ITERS: usize = 30;

/// Relative settling tolerance for the probe's eigenvalue sequence.
const SETTLE_RTOL: f64 = 1e-9;

/// Extreme singular values of an operator, with a convergence flag.
#[derive(Clone, Copy, Debug)]
pub struct SpectralEstimate {
    pub sigma_min: f64,
    pub sigma_max: f64,
    /// `sigma_max / sigma_min`; infinite when the bottom estimate is zero.
    pub condition: f64,
    /// False when either eigenvalue sequence failed to settle within the
    /// iteration budget, or the Gram factorization broke down.
    pub converged: bool,
}

/// Assembles the Gram matrix `BᵀB` (row-major `n × n`) of an operator given
/// by matrix-free closures, one column per forward/adjoint pair.
pub fn assemble_gram<F, G>(apply: F, applyt: G, n: usize) -> Vec<f64>
where
    F: Fn(&[f64]) -> Vec<f64>,
    G: Fn(&[f64]) -> Vec<f64>,
{
    let mut gram = vec![0.0; n * n];
    let mut e = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        let col = applyt(&apply(&e));
        e[j] = 0.0;
        for i in 0..n {
            gram[i * n + j] = col[i];
        }
    }
    // Symmetrize away the quadrature round-off so the eigen-iterations see an
    // exactly symmetric matrix.
    for i in 0..n {
        for j in 0..i {
            let m = 0.5 * (gram[i * n + j] + gram[j * n + i]);
            gram[i * n + j] = m;
            gram[j * n + i] = m;
        }
    }
    gram
}

fn matvec(a: &[f64], n: usize, v: &[f64]) -> Vec<f64> {
    (0..n)
        .map(|i| (0..n).map(|j| a[i * n + j] * v[j]).sum())
        .collect()
}

fn seeded_unit(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in &mut v {
        *x /= nv;
    }
    v
}

/// Largest eigenvalue of the symmetric matrix `a` by power iteration.
pub fn power_eig(a: &[f64], n: usize, iters: usize, seed: u64) -> (f64, bool) {
    let mut v = seeded_unit(n, seed);
    let mut lambda = 0.0;
    let mut settled = false;
    for _ in 0..iters {
        let w = matvec(a, n, &v);
        let nw = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if nw == 0.0 {
            return (0.0, true);
        }
        let lambda_new: f64 = v.iter().zip(&w).map(|(x, y)| x * y).sum();
        settled = (lambda_new - lambda).abs() <= SETTLE_RTOL * lambda_new.abs().max(1e-300);
        lambda = lambda_new;
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / nw;
        }
        if settled {
            break;
        }
    }
    (lambda, settled)
}

/// In-place Cholesky of a symmetric positive definite matrix; returns the
/// lower factor or `None` when a pivot fails.
fn cholesky(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i * n + j];
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if sum <= 0.0 {
                    return None;
                }
                l[i * n + i] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    Some(l)
}

fn cholesky_solve(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            y[i] -= l[i * n + k] * y[k];
        }
        y[i] /= l[i * n + i];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            y[i] -= l[k * n + i] * y[k];
        }
        y[i] /= l[i * n + i];
    }
    y
}

/// Smallest eigenvalue of the symmetric positive semidefinite matrix `a` by
/// inverse power iteration. A failed factorization reports `(0.0, false)`.
pub fn smallest_eig(a: &[f64], n: usize, iters: usize, seed: u64) -> (f64, bool) {
    let l = match cholesky(a, n) {
        Some(l) => l,
        None => return (0.0, false),
    };
    let mut v = seeded_unit(n, seed);
    let mut lambda = 0.0;
    let mut settled = false;
    for _ in 0..iters {
        let w = cholesky_solve(&l, n, &v);
        let nw = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if nw == 0.0 {
            return (0.0, false);
        }
        let v_new: Vec<f64> = w.iter().map(|x| x / nw).collect();
        let av = matvec(a, n, &v_new);
        let lambda_new: f64 = v_new.iter().zip(&av).map(|(x, y)| x * y).sum();
        settled = (lambda_new - lambda).abs() <= SETTLE_RTOL * lambda_new.abs().max(1e-300);
        lambda = lambda_new;
        v = v_new;
        if settled {
            break;
        }
    }
    (lambda, settled)
}

/// Extreme singular values of the operator behind `apply`/`applyt`.
pub fn spectral_probe<F, G>(apply: F, applyt: G, n: usize) -> SpectralEstimate
where
    F: Fn(&[f64]) -> Vec<f64>,
    G: Fn(&[f64]) -> Vec<f64>,
{
    let gram = assemble_gram(apply, applyt, n);
    let (top, ok_top) = power_eig(&gram, n, PROBE_ITERS, 0x5eed);
    let (bottom, ok_bottom) = smallest_eig(&gram, n, PROBE_ITERS, 0x5eed ^ 1);
    let sigma_max = top.max(0.0).sqrt();
    let sigma_min = bottom.max(0.0).sqrt();
    let condition = if sigma_min > 0.0 {
        sigma_max / sigma_min
    } else {
        f64::INFINITY
    };
    SpectralEstimate {
        sigma_min,
        sigma_max,
        condition,
        converged: ok_top && ok_bottom,
    }
}
