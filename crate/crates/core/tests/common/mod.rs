#![allow(dead_code)]

use jsymm::{SecantPair, SplitDims};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// `(M + J Mᵀ J) / 2`, the J-symmetric part of `m`.
pub fn j_symmetrize(m: &DMatrix<f64>, dims: SplitDims) -> DMatrix<f64> {
    let j = dims.j_matrix();
    (m + &j * m.transpose() * &j) * 0.5
}

pub struct Instance {
    pub dims: SplitDims,
    pub b: DMatrix<f64>,
    pub pair: SecantPair,
}

pub fn uniform_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
}

pub fn uniform_vector(rng: &mut ChaCha8Rng, len: usize) -> DVector<f64> {
    DVector::from_fn(len, |_, _| rng.random_range(-1.0..1.0))
}

/// Random J-symmetric `B` and secant pair with `n, m <= max_block`,
/// `n + m >= 1` and `‖s‖ >= 0.1`.
pub fn random_instance(seed: u64, max_block: usize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, m) = loop {
        let n = rng.random_range(0..=max_block);
        let m = rng.random_range(0..=max_block);
        if n + m > 0 {
            break (n, m);
        }
    };
    let dims = SplitDims::new(n, m).unwrap();
    let d = n + m;
    let b = j_symmetrize(&uniform_matrix(&mut rng, d, d), dims);
    let s = loop {
        let s = uniform_vector(&mut rng, d);
        if s.norm() >= 0.1 {
            break s;
        }
    };
    let y = uniform_vector(&mut rng, d) * 2.0;
    Instance {
        dims,
        b,
        pair: SecantPair::new(s, y).unwrap(),
    }
}

/// Like [`random_instance`] but with `B = 2I + small J-symmetric noise` and
/// `y = B s + small`, so that `B` and `B⁺` are well conditioned.
pub fn well_conditioned_instance(seed: u64, max_block: usize) -> Instance {
    let mut base = random_instance(seed, max_block);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let d = base.dims.total();
    base.b = DMatrix::identity(d, d) * 2.0
        + j_symmetrize(&uniform_matrix(&mut rng, d, d), base.dims) * 0.3;
    let s = base.pair.s().clone();
    let y = &base.b * &s + uniform_vector(&mut rng, d) * (0.3 * s.norm());
    base.pair = SecantPair::new(s, y).unwrap();
    base
}

pub fn frobenius(a: &DMatrix<f64>) -> f64 {
    a.norm()
}
