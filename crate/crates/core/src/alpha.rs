//! Shadow cost of emissions.
//!
//! `alpha(s) = int_s^inf exp(-rho (t - s)) Phi(t, s)^T omega dt` is the discounted
//! pollution disutility caused by one unit emitted at each node at time `s`.
//! With constant coefficients it solves `(rho I - G^T) alpha = omega`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::network::Generator;
use crate::ode::{simpson_weights, uniform_steps};
use crate::transition::{matrix_exponential, propagate, DEFAULT_STEP};

/// Quadrature settings for [`alpha_time_varying`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaQuadrature {
    /// Simpson step on the outer integral.
    pub step: f64,
    /// RK4 step used to advance `Phi(t, s)` between Simpson nodes.
    pub ode_step: f64,
    /// Largest acceptable truncation tail.
    pub tolerance: f64,
}

impl Default for AlphaQuadrature {
    fn default() -> Self {
        Self {
            step: 1e-2,
            ode_step: DEFAULT_STEP,
            tolerance: 1e-6,
        }
    }
}

/// Shadow costs at one evaluation time.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaField {
    pub values: DVector<f64>,
    pub s: f64,
    /// Length of the truncated integration window (infinite for the exact solve).
    pub horizon: f64,
    /// Upper bound on the neglected tail of the integral.
    pub tail_bound: f64,
}

fn check_inputs(gen: &Generator, omega: &DVector<f64>, rho: f64) -> Result<()> {
    if omega.len() != gen.n() {
        return Err(Error::InvalidParameter(format!(
            "omega has length {}, generator has {} nodes",
            omega.len(),
            gen.n()
        )));
    }
    if let Some(w) = omega.iter().find(|w| !w.is_finite() || **w < 0.0) {
        return Err(Error::InvalidParameter(format!(
            "awareness omega must be finite and nonnegative, got {w}"
        )));
    }
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::assumption("1(iii)", format!("rho must be > 0, got {rho}")));
    }
    Ok(())
}

/// Solves `(rho I - G^T) alpha = omega` for a constant generator.
pub fn alpha_autonomous(gen: &Generator, omega: &DVector<f64>, rho: f64) -> Result<DVector<f64>> {
    check_inputs(gen, omega, rho)?;
    let g = gen.constant_matrix().ok_or_else(|| {
        Error::InvalidParameter("alpha_autonomous needs a constant generator".into())
    })?;
    let n = gen.n();
    let system: DMatrix<f64> = DMatrix::identity(n, n) * rho - g.transpose();
    let alpha = system
        .clone()
        .lu()
        .solve(omega)
        .ok_or_else(|| Error::Singular("rho I - G^T".into()))?;
    let residual = (&system * &alpha - omega).amax();
    let scale = omega.norm().max(f64::MIN_POSITIVE);
    if residual > 1e-12 * scale.max(1.0) * 10.0 {
        return Err(Error::Singular(format!("alpha residual {residual:.3e} too large")));
    }
    Ok(alpha)
}

/// Truncation tail `exp(-(rho + d_min) T) max(omega) / (rho + d_min)`.
pub fn alpha_tail_bound(omega: &DVector<f64>, rho: f64, decay_min: f64, horizon: f64) -> f64 {
    let rate = rho + decay_min;
    (-rate * horizon).exp() * omega.max() / rate
}

/// Truncated quadrature of the defining integral on `[s, s + horizon]`.
///
/// `Phi(t, s)` is advanced forward and then transposed; `G^T` is never
/// integrated on its own, since its transition matrix differs from `Phi^T`
/// unless the generator commutes with itself over time.
pub fn alpha_time_varying(
    gen: &Generator,
    omega: &DVector<f64>,
    rho: f64,
    s: f64,
    horizon: f64,
    quad: AlphaQuadrature,
) -> Result<AlphaField> {
    check_inputs(gen, omega, rho)?;
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidParameter(format!("horizon must be positive, got {horizon}")));
    }
    if !(quad.step > 0.0 && quad.ode_step > 0.0) {
        return Err(Error::InvalidParameter("quadrature steps must be positive".into()));
    }
    let (decay_min, _) = gen.decay_bounds();
    let tail = alpha_tail_bound(omega, rho, decay_min, horizon);
    if tail > quad.tolerance {
        return Err(Error::InsufficientHorizon {
            achievable: tail,
            requested: quad.tolerance,
        });
    }

    let n = gen.n();
    let (m, h) = uniform_steps(s, s + horizon, quad.step);
    let weights = simpson_weights(m, h);
    let one_step = gen.constant_matrix().map(|g| matrix_exponential(g, h)).transpose()?;

    let mut phi = DMatrix::<f64>::identity(n, n);
    let mut acc = DVector::<f64>::zeros(n);
    for (k, w) in weights.iter().enumerate() {
        if k > 0 {
            let t_prev = s + (k - 1) as f64 * h;
            phi = match &one_step {
                Some(e) => e * &phi,
                None => propagate(gen, &phi, t_prev, t_prev + h, quad.ode_step),
            };
        }
        let discount = (-rho * k as f64 * h).exp();
        acc += phi.tr_mul(omega) * (w * discount);
    }
    Ok(AlphaField {
        values: acc,
        s,
        horizon,
        tail_bound: tail,
    })
}

/// Sandwich `(min omega / (rho + d_max), max omega / (rho + d_min))`.
///
/// Expects `rho > 0` and `0 < d_min <= d_max`.
pub fn alpha_bounds(omega: &DVector<f64>, rho: f64, decay_min: f64, decay_max: f64) -> (f64, f64) {
    debug_assert!(rho > 0.0 && decay_min > 0.0 && decay_min <= decay_max);
    (omega.min() / (rho + decay_max), omega.max() / (rho + decay_min))
}

/// Bounds for a generator, using its declared decay range.
pub fn alpha_bounds_for(gen: &Generator, omega: &DVector<f64>, rho: f64) -> (f64, f64) {
    let (lo, hi) = gen.decay_bounds();
    alpha_bounds(omega, rho, lo, hi)
}
