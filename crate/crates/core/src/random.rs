//! Seeded random generators for test inputs: Haar unitaries, states, channels.
//!
//! Every generator takes an explicit RNG so runs are reproducible from a seed.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::channels::Channel;
use crate::observables::Observable;
use crate::operators::{DensityOperator, Operator, StateVector, C64};

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standard complex Gaussian with `E|z|² = 1`.
pub fn complex_gaussian(rng: &mut impl Rng) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn ginibre(rows: usize, cols: usize, rng: &mut impl Rng) -> DMatrix<C64> {
    DMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// Haar-distributed unitary via QR of a Ginibre matrix with the phases of
/// `diag(R)` absorbed into `Q`.
pub fn haar_unitary(dim: usize, rng: &mut impl Rng) -> Operator {
    let qr = ginibre(dim, dim, rng).qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    Operator::from_matrix(q)
}

/// First `dim_in` columns of a Haar unitary on `C^dim_out`.
pub fn random_isometry(dim_in: usize, dim_out: usize, rng: &mut impl Rng) -> Operator {
    assert!(dim_in <= dim_out, "isometry needs dim_in <= dim_out");
    let u = haar_unitary(dim_out, rng);
    Operator::from_matrix(u.matrix().columns(0, dim_in).into_owned())
}

/// Uniformly distributed pure state.
pub fn random_state(dim: usize, rng: &mut impl Rng) -> StateVector {
    StateVector::normalized((0..dim).map(|_| complex_gaussian(rng)).collect())
        .expect("Gaussian vector is nonzero with probability one")
}

/// Random density operator of the given rank (induced measure).
pub fn random_density(dim: usize, rank: usize, rng: &mut impl Rng) -> DensityOperator {
    let g = ginibre(dim, rank.max(1), rng);
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    DensityOperator::new(Operator::from_matrix(m).scale_real(1.0 / tr), 1e-9)
        .expect("Gram matrix is a state")
}

/// Random Hermitian operator with Gaussian entries.
pub fn random_hermitian(dim: usize, rng: &mut impl Rng) -> Operator {
    let g = Operator::from_matrix(ginibre(dim, dim, rng));
    (&g + &g.adjoint()).scale_real(0.5)
}

pub fn random_operator(dim: usize, rng: &mut impl Rng) -> Operator {
    Operator::from_matrix(ginibre(dim, dim, rng))
}

/// Random channel with `n_kraus` Kraus operators read off a random Stinespring isometry.
pub fn random_channel(dim: usize, n_kraus: usize, rng: &mut impl Rng) -> Channel {
    let w = random_isometry(dim, dim * n_kraus, rng);
    let kraus = (0..n_kraus)
        .map(|a| Operator::from_fn(dim, dim, |i, j| w.get(i * n_kraus + a, j)))
        .collect();
    Channel::new(kraus).expect("isometry blocks form a channel")
}

/// Random (generally unsharp) observable from compressing a computational-basis
/// sharp observable through a random isometry.
pub fn random_observable(dim: usize, n_outcomes: usize, rng: &mut impl Rng) -> Observable {
    let w = random_isometry(dim, dim * n_outcomes, rng);
    let effects = (0..n_outcomes)
        .map(|x| {
            let block = Operator::from_fn(dim, dim, |i, j| w.get(x * dim + i, j));
            &block.adjoint() * &block
        })
        .collect();
    Observable::new(dim, numbered_labels(n_outcomes), effects)
        .expect("compressed projective measurement is an observable")
}

/// Random unit vector in `R^3`.
pub fn random_direction(rng: &mut impl Rng) -> [f64; 3] {
    loop {
        let v: [f64; 3] = [
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 1e-6 {
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}

pub(crate) fn numbered_labels(n: usize) -> Vec<String> {
    (1..=n).map(|i| i.to_string()).collect()
}
