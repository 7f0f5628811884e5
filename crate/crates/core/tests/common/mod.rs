//! Helpers shared by the integration tests. Formulas here are written out
//! independently of the library code they check.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use polnet::network::{
    build_blocked, build_distance_based, build_nearest_neighbor, build_wind, Generator, NetworkSpec,
    TimeVaryingSpec,
};
use rand::Rng;

/// `L - diag(delta)` assembled from the raw weights.
pub fn assemble_generator(weights: &DMatrix<f64>, decay: &[f64]) -> DMatrix<f64> {
    let n = weights.nrows();
    let mut g = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut outflow = 0.0;
        for i in 0..n {
            if i != j {
                g[(i, j)] = weights[(i, j)];
                outflow += weights[(i, j)];
            }
        }
        g[(j, j)] = -outflow - decay[j];
    }
    g
}

/// Objective transcribed from its definition.
#[allow(clippy::too_many_arguments)]
pub fn literal_objective(
    a_brown: f64,
    a_green: f64,
    eps: f64,
    gamma: f64,
    alpha: f64,
    cost: impl Fn(f64) -> f64,
    i: f64,
    r: f64,
) -> f64 {
    let c = (a_brown - 1.0) * i + (a_green - 1.0) * r;
    let u = if c > 0.0 {
        c.powf(1.0 - gamma) / (1.0 - gamma)
    } else if gamma > 1.0 {
        f64::NEG_INFINITY
    } else {
        0.0
    };
    u - alpha * (i + eps * r) - cost(r)
}

/// Optimal emissions of the economy without green capital.
pub fn brown_only_emission(alpha: f64, a_brown: f64, gamma: f64) -> f64 {
    ((a_brown - 1.0) / alpha).powf(1.0 / gamma) / (a_brown - 1.0)
}

/// A random network on `n >= 3` nodes from one of the four builders.
pub fn random_network(rng: &mut impl Rng, n: usize) -> NetworkSpec {
    match rng.gen_range(0..4) {
        0 => build_nearest_neighbor(n).unwrap(),
        1 => build_distance_based(n).unwrap(),
        2 => {
            let affected: Vec<usize> = (1..=n).filter(|_| rng.gen_bool(0.5)).collect();
            build_wind(n, rng.gen_range(0.0..0.49), &affected).unwrap()
        }
        _ => {
            let from: Vec<usize> = (1..=n).filter(|_| rng.gen_bool(0.4)).collect();
            let to: Vec<usize> = (1..=n).filter(|_| rng.gen_bool(0.4)).collect();
            let base = build_nearest_neighbor(n).unwrap();
            build_blocked(&base, rng.gen_range(0.0..2.0), &from, &to).unwrap()
        }
    }
}

/// Dense random weights with some zero entries.
pub fn random_weights(rng: &mut impl Rng, n: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| {
        if i == j || rng.gen_bool(0.3) {
            0.0
        } else {
            scale * rng.gen::<f64>()
        }
    })
}

pub fn random_autonomous(rng: &mut impl Rng, n: usize) -> (Generator, Vec<f64>) {
    let w = random_weights(rng, n, 1.0);
    let decay: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
    let spec = NetworkSpec::new(w).unwrap();
    (
        Generator::autonomous(&spec, &DVector::from_vec(decay.clone())).unwrap(),
        decay,
    )
}

/// `W(t) = W0 + W1 (1 + sin(f t)) / 2`, `delta_i(t) = d_i + a sin(t)`.
pub fn random_time_varying(rng: &mut impl Rng, n: usize) -> Generator {
    let w0 = random_weights(rng, n, 1.0);
    let w1 = random_weights(rng, n, 0.5);
    let freq = rng.gen_range(0.5..3.0);
    let base: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..1.0)).collect();
    let amp = rng.gen_range(0.0..0.1);
    let lo = base.iter().cloned().fold(f64::INFINITY, f64::min) - amp;
    let hi = base.iter().cloned().fold(0.0, f64::max) + amp;
    let beta = 2.0 * n as f64 * (0.5 * freq * w1.amax() + amp);
    let d = base.clone();
    let spec = TimeVaryingSpec::new(
        n,
        move |t| &w0 + &w1 * (0.5 * (1.0 + (freq * t).sin())),
        move |t| DVector::from_iterator(d.len(), d.iter().map(|x| x + amp * t.sin())),
        beta,
        (lo, hi),
    );
    Generator::time_varying(spec).unwrap()
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax()
}
