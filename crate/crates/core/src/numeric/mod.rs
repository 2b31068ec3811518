//! Dense linear algebra, initialisation, activations, Adam and the
//! finite-difference oracle used by every gradient test.

mod adam;
mod dense;
mod finite_diff;

pub use adam::{AdamState, BETA1, BETA2, EPSILON};
pub use dense::Dense;
pub use finite_diff::finite_difference_gradient;

use rand::Rng;

/// Uniform Xavier/Glorot initialisation on `[-sqrt(6/(rows+cols)), +sqrt(6/(rows+cols))]`.
pub fn xavier_init<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Dense {
    assert!(rows >= 1 && cols >= 1, "xavier_init needs a non-empty shape");
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    let values = (0..rows * cols)
        .map(|_| rng.random_range(-bound..=bound))
        .collect();
    Dense::from_vec(rows, cols, values).expect("shape matches by construction")
}

pub fn relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

/// Derivative of ReLU, taking 0 at the kink.
pub fn relu_grad(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        0.0
    }
}

pub fn leaky_relu(x: f64, slope: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        slope * x
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `-ln(sigmoid(x))`, evaluated without overflow for large `|x|`.
pub fn neg_log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        (-x).exp().ln_1p()
    } else {
        -x + x.exp().ln_1p()
    }
}

/// Softmax with max-subtraction. Empty input gives an empty output.
pub fn softmax_vec(xs: &[f64]) -> Vec<f64> {
    if xs.is_empty() {
        return Vec::new();
    }
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = xs.iter().map(|&x| (x - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn l2_norm_sq(xs: &[f64]) -> f64 {
    xs.iter().map(|x| x * x).sum()
}

/// Deterministic 64-bit seed derived from a base seed and a sequence of
/// stream identifiers (splitmix64 finaliser applied per component).
pub fn derive_seed(base: u64, streams: &[u64]) -> u64 {
    let mut state = splitmix(base);
    for &s in streams {
        state = splitmix(state ^ splitmix(s.wrapping_add(0x9E37_79B9_7F4A_7C15)));
    }
    state
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
