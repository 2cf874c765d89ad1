#![allow(dead_code)]

use faer::{c64, Mat, MatRef};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use tadi::linalg::{norm_fro, Arithmetic, Scalar};
use tadi::problem::{synth_typed, LyapunovProblem, SpectrumSpec};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gauss<T: Scalar>(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Mat<T> {
    Mat::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        match T::ARITHMETIC {
            Arithmetic::Real => T::from_real(re),
            Arithmetic::Complex => {
                let im: f64 = rng.sample(StandardNormal);
                T::from_c64(c64::new(re, im)).unwrap()
            }
        }
    })
}

/// Random Hermitian matrix with `negatives` negative and `m - negatives` positive eigenvalues.
pub fn indefinite<T: Scalar>(rng: &mut ChaCha8Rng, m: usize, negatives: usize) -> Mat<T> {
    let g = gauss::<T>(rng, m, m);
    let q = g.qr().compute_thin_Q();
    let s: Vec<f64> = (0..m)
        .map(|k| {
            let mag = rng.random_range(0.5..2.0);
            if k < negatives {
                -mag
            } else {
                mag
            }
        })
        .collect();
    let qs = Mat::from_fn(m, m, |i, j| q[(i, j)].scale(s[j]));
    hermitian_part((&qs * q.adjoint()).as_ref())
}

pub fn hermitian_part<T: Scalar>(m: MatRef<'_, T>) -> Mat<T> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| (m[(i, j)] + m[(j, i)].conj()).scale(0.5))
}

pub fn problem<T: Scalar>(n: usize, m: usize, negatives: usize, seed: u64) -> LyapunovProblem<T> {
    synth_typed::<T>(n, m, &SpectrumSpec::default().with_seed(seed), negatives).unwrap()
}

pub fn rel_diff<T: Scalar>(x: MatRef<'_, T>, y: MatRef<'_, T>) -> f64 {
    let d = x - y;
    let scale = norm_fro(y).max(norm_fro(x));
    if scale == 0.0 {
        0.0
    } else {
        norm_fro(d.as_ref()) / scale
    }
}

/// `W R W^H` evaluated densely.
pub fn dense_product<T: Scalar>(w: MatRef<'_, T>, r: MatRef<'_, T>) -> Mat<T> {
    let wr = w * r;
    &wr * w.adjoint()
}

/// Spectral norm of a Hermitian matrix.
pub fn spectral_norm<T: Scalar>(h: MatRef<'_, T>) -> f64 {
    let (_, s) = tadi::linalg::hermitian_eig(hermitian_part(h).as_ref()).unwrap();
    s.first().map_or(0.0, |x| x.abs())
}
