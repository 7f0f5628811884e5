//! State transition matrix `Phi(t, s)` of `dP/dt = G(t) P`.
//!
//! Autonomous generators go through the matrix exponential; time-varying ones
//! are integrated with fixed-step RK4. The Peano-Baker partial sums are kept
//! as an independent oracle and are not used on the production path.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::network::Generator;
use crate::ode::{rk4_step, uniform_steps};

/// Default RK4 step for non-autonomous transition matrices.
pub const DEFAULT_STEP: f64 = 1e-3;

// Degree-m Padé thresholds on the 1-norm and coefficients (Higham, 2005).
const THETA_3: f64 = 1.495585217958292e-2;
const THETA_5: f64 = 2.539_398_330_063_23e-1;
const THETA_7: f64 = 9.504178996162932e-1;
const THETA_9: f64 = 2.097847961257068;
const THETA_13: f64 = 5.371920351148152;

const PADE_3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE_5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE_7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const PADE_9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE_13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

fn one_norm(a: &DMatrix<f64>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Odd part `U` and even part `V` of a low-degree Padé approximant.
fn pade_low(a: &DMatrix<f64>, b: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let a2 = a * a;
    let mut power = DMatrix::identity(n, n);
    let mut odd = DMatrix::zeros(n, n);
    let mut even = DMatrix::zeros(n, n);
    for pair in b.chunks(2) {
        even += &power * pair[0];
        odd += &power * pair[1];
        power = &power * &a2;
    }
    (a * odd, even)
}

fn pade_13(a: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let b = &PADE_13;
    let n = a.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let inner_u = &a6 * b[13] + &a4 * b[11] + &a2 * b[9];
    let u = a * (&a6 * inner_u + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &id * b[1]);
    let inner_v = &a6 * b[12] + &a4 * b[10] + &a2 * b[8];
    let v = &a6 * inner_v + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &id * b[0];
    (u, v)
}

/// `exp(A t)` by scaling and squaring with a Padé approximant.
pub fn matrix_exponential(a: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>> {
    if a.nrows() != a.ncols() {
        return Err(Error::InvalidParameter(format!(
            "matrix exponential needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if !t.is_finite() || a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("matrix exponential argument".into()));
    }
    let at = a * t;
    let norm = one_norm(&at);
    let (u, v, squarings) = if norm <= THETA_3 {
        let (u, v) = pade_low(&at, &PADE_3);
        (u, v, 0)
    } else if norm <= THETA_5 {
        let (u, v) = pade_low(&at, &PADE_5);
        (u, v, 0)
    } else if norm <= THETA_7 {
        let (u, v) = pade_low(&at, &PADE_7);
        (u, v, 0)
    } else if norm <= THETA_9 {
        let (u, v) = pade_low(&at, &PADE_9);
        (u, v, 0)
    } else {
        let s = (norm / THETA_13).log2().ceil().max(0.0) as i32;
        let scaled = &at * 2f64.powi(-s);
        let (u, v) = pade_13(&scaled);
        (u, v, s as u32)
    };
    let numer = &v + &u;
    let denom = &v - &u;
    let mut result = denom
        .lu()
        .solve(&numer)
        .ok_or_else(|| Error::Singular("Padé denominator".into()))?;
    for _ in 0..squarings {
        result = &result * &result;
    }
    Ok(result)
}

/// `Phi(t, s)` together with the interval it spans.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    pub phi: DMatrix<f64>,
    pub s: f64,
    pub t: f64,
}

impl TransitionMatrix {
    pub fn column_sums(&self) -> Vec<f64> {
        self.phi.column_iter().map(|c| c.sum()).collect()
    }

    /// Largest singular value.
    pub fn spectral_norm(&self) -> f64 {
        self.phi
            .singular_values()
            .iter()
            .cloned()
            .fold(0.0, f64::max)
    }

    /// Induced 1-norm (maximum absolute column sum).
    pub fn one_norm(&self) -> f64 {
        one_norm(&self.phi)
    }

    pub fn min_entry(&self) -> f64 {
        self.phi.min()
    }
}

fn check_interval(s: f64, t: f64) -> Result<()> {
    if !s.is_finite() || !t.is_finite() {
        return Err(Error::NonFinite(format!("interval [{s}, {t}]")));
    }
    if t < s {
        return Err(Error::Domain(format!("transition requires t >= s, got s={s}, t={t}")));
    }
    Ok(())
}

/// Advances `X(s) = x0` to `X(t)` under `dX/dt = G(t) X` with RK4.
pub fn propagate(
    gen: &Generator,
    x0: &DMatrix<f64>,
    s: f64,
    t: f64,
    step: f64,
) -> DMatrix<f64> {
    let (m, h) = uniform_steps(s, t, step);
    let mut x = x0.clone();
    for k in 0..m {
        let tk = s + k as f64 * h;
        x = rk4_step(|tau, y: &DMatrix<f64>| gen.eval(tau) * y, tk, &x, h);
    }
    x
}

/// State transition matrix over `[s, t]`.
///
/// Autonomous generators use `exp(G (t - s))`; otherwise RK4 with the given step.
pub fn transition_matrix(gen: &Generator, s: f64, t: f64, step: f64) -> Result<TransitionMatrix> {
    check_interval(s, t)?;
    let n = gen.n();
    let phi = if s == t {
        DMatrix::identity(n, n)
    } else if let Some(g) = gen.constant_matrix() {
        matrix_exponential(g, t - s)?
    } else {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidParameter(format!("step must be positive, got {step}")));
        }
        propagate(gen, &DMatrix::identity(n, n), s, t, step)
    };
    Ok(TransitionMatrix { phi, s, t })
}

/// Cumulative integrals of uniformly sampled matrices with local cubic interpolation.
///
/// Returns `C_k = int_{x_0}^{x_k} g`. Needs at least three intervals.
fn cumulative_integral(samples: &[DMatrix<f64>], h: f64) -> Vec<DMatrix<f64>> {
    let m = samples.len() - 1;
    debug_assert!(m >= 3);
    let mut out = Vec::with_capacity(m + 1);
    let mut acc = DMatrix::zeros(samples[0].nrows(), samples[0].ncols());
    out.push(acc.clone());
    for i in 0..m {
        let piece = if i == 0 {
            &samples[0] * 9.0 + &samples[1] * 19.0 - &samples[2] * 5.0 + &samples[3]
        } else if i == m - 1 {
            &samples[m - 3] - &samples[m - 2] * 5.0 + &samples[m - 1] * 19.0 + &samples[m] * 9.0
        } else {
            (&samples[i] + &samples[i + 1]) * 13.0 - &samples[i - 1] - &samples[i + 2]
        };
        acc += piece * (h / 24.0);
        out.push(acc.clone());
    }
    out
}

/// Partial sum `I + M_1 + ... + M_terms` of the Peano-Baker series at `t`,
/// where `M_k(tau) = int_s^tau G(u) M_{k-1}(u) du` on `quad_points` uniform nodes.
pub fn peano_baker(
    gen: &Generator,
    s: f64,
    t: f64,
    terms: usize,
    quad_points: usize,
) -> Result<DMatrix<f64>> {
    check_interval(s, t)?;
    if terms == 0 {
        return Err(Error::InvalidParameter("Peano-Baker needs terms >= 1".into()));
    }
    if quad_points < 4 {
        return Err(Error::InvalidParameter(
            "Peano-Baker needs at least 4 quadrature points".into(),
        ));
    }
    let n = gen.n();
    let id = DMatrix::<f64>::identity(n, n);
    if s == t {
        return Ok(id);
    }
    let m = quad_points - 1;
    let h = (t - s) / m as f64;
    let gens: Vec<DMatrix<f64>> = (0..=m).map(|k| gen.eval(s + k as f64 * h)).collect();

    let mut current: Vec<DMatrix<f64>> = vec![id.clone(); m + 1];
    let mut total = id;
    for _ in 0..terms {
        let integrand: Vec<DMatrix<f64>> =
            gens.iter().zip(&current).map(|(g, c)| g * c).collect();
        current = cumulative_integral(&integrand, h);
        total += &current[m];
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{build_nearest_neighbor, NetworkSpec, TimeVaryingSpec};
    use nalgebra::DVector;

    fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        (a - b).abs().max()
    }

    fn power_series(a: &DMatrix<f64>, t: f64, terms: usize) -> DMatrix<f64> {
        let n = a.nrows();
        let at = a * t;
        let mut term = DMatrix::identity(n, n);
        let mut sum = term.clone();
        for k in 1..=terms {
            term = &term * &at / k as f64;
            sum += &term;
        }
        sum
    }

    fn ring_generator(n: usize, d: f64) -> Generator {
        Generator::autonomous(
            &build_nearest_neighbor(n).unwrap(),
            &DVector::from_element(n, d),
        )
        .unwrap()
    }

    #[test]
    fn expm_zero_is_identity() {
        let e = matrix_exponential(&DMatrix::zeros(4, 4), 2.0).unwrap();
        assert_eq!(e, DMatrix::identity(4, 4));
    }

    #[test]
    fn expm_scaled_identity() {
        for &(d, t) in &[(0.3, 0.01), (0.4, 1.0), (2.0, 3.0), (1.5, 30.0)] {
            let e = matrix_exponential(&(DMatrix::identity(3, 3) * -d), t).unwrap();
            let want = (-d * t).exp();
            for i in 0..3 {
                assert!(((e[(i, i)] - want) / want).abs() < 1e-13, "d={d} t={t}");
            }
        }
    }

    #[test]
    fn expm_matches_power_series_on_ring() {
        let gen = ring_generator(5, 0.4);
        let a = gen.constant_matrix().unwrap();
        let e = matrix_exponential(a, 1.0).unwrap();
        assert!(max_abs_diff(&e, &power_series(a, 1.0, 40)) < 1e-10);
    }

    #[test]
    fn expm_all_pade_branches() {
        // nilpotent-free rotation generator: exp of [[0, -w], [w, 0]] is a rotation
        for &w in &[1e-3, 0.1, 0.5, 1.0, 2.0, 10.0, 40.0] {
            let a = DMatrix::from_row_slice(2, 2, &[0.0, -w, w, 0.0]);
            let e = matrix_exponential(&a, 1.0).unwrap();
            let want = DMatrix::from_row_slice(2, 2, &[w.cos(), -w.sin(), w.sin(), w.cos()]);
            assert!(max_abs_diff(&e, &want) < 1e-12, "w={w}");
        }
    }

    #[test]
    fn expm_rejects_non_finite() {
        let mut a = DMatrix::zeros(2, 2);
        a[(0, 1)] = f64::NAN;
        assert!(matches!(matrix_exponential(&a, 1.0), Err(Error::NonFinite(_))));
    }

    #[test]
    fn transition_identity_at_equal_times() {
        let gen = ring_generator(6, 0.4);
        let tm = transition_matrix(&gen, 3.7, 3.7, DEFAULT_STEP).unwrap();
        assert_eq!(tm.phi, DMatrix::identity(6, 6));
    }

    #[test]
    fn transition_autonomous_is_expm() {
        let gen = ring_generator(6, 0.4);
        let tm = transition_matrix(&gen, 0.0, 2.0, DEFAULT_STEP).unwrap();
        let e = matrix_exponential(gen.constant_matrix().unwrap(), 2.0).unwrap();
        assert_eq!(tm.phi, e);
    }

    #[test]
    fn transition_rejects_reversed_interval() {
        let gen = ring_generator(4, 0.4);
        assert!(matches!(
            transition_matrix(&gen, 1.0, 0.5, DEFAULT_STEP),
            Err(Error::Domain(_))
        ));
    }

    fn sine_decay_generator(n: usize) -> Generator {
        let spec = TimeVaryingSpec::new(
            n,
            move |_| DMatrix::zeros(n, n),
            move |t| DVector::from_element(n, 1.0 + 0.5 * t.sin()),
            0.5,
            (0.5, 1.5),
        );
        Generator::time_varying(spec).unwrap()
    }

    #[test]
    fn transition_scalar_time_varying_matches_analytic() {
        // int_0^1 (1 + 0.5 sin u) du = 1 + 0.5 (1 - cos 1)
        let gen = sine_decay_generator(3);
        let step = 1e-2;
        let tm = transition_matrix(&gen, 0.0, 1.0, step).unwrap();
        let want = (-(1.0 + 0.5 * (1.0 - 1f64.cos()))).exp();
        for i in 0..3 {
            assert!((tm.phi[(i, i)] - want).abs() < 10.0 * step.powi(4));
            for j in 0..3 {
                if i != j {
                    assert_eq!(tm.phi[(i, j)], 0.0);
                }
            }
        }
    }

    #[test]
    fn peano_baker_first_term() {
        let gen = sine_decay_generator(2);
        let pb = peano_baker(&gen, 0.0, 1.0, 1, 201).unwrap();
        let integral = -(1.0 + 0.5 * (1.0 - 1f64.cos()));
        let want = DMatrix::identity(2, 2) * (1.0 + integral);
        assert!(max_abs_diff(&pb, &want) < 1e-10);
    }

    #[test]
    fn peano_baker_autonomous_matches_expm() {
        let gen = ring_generator(5, 0.4);
        // ||G|| = 2.4 in the 1-norm, interval length 2 keeps ||G (t-s)|| <= 5
        let pb = peano_baker(&gen, 0.0, 2.0, 30, 2001).unwrap();
        let e = matrix_exponential(gen.constant_matrix().unwrap(), 2.0).unwrap();
        assert!(max_abs_diff(&pb, &e) < 1e-8);
    }

    #[test]
    fn peano_baker_commuting_family() {
        // G(t) = a(t) M with a(t) = 1 + 0.3 cos t commutes with itself.
        let spec = build_nearest_neighbor(4).unwrap();
        let base = Generator::autonomous(&spec, &DVector::from_element(4, 0.4)).unwrap();
        let m_mat = base.constant_matrix().unwrap().clone();
        let w = spec.weights().clone();
        let tv = TimeVaryingSpec::new(
            4,
            move |t| &w * (1.0 + 0.3 * t.cos()),
            move |t| DVector::from_element(4, 0.4 * (1.0 + 0.3 * t.cos())),
            1.0,
            (0.28, 0.52),
        );
        let gen = Generator::time_varying(tv).unwrap();
        let (s, t) = (0.5f64, 2.0f64);
        let integral_a = (t - s) + 0.3 * (t.sin() - s.sin());
        let want = matrix_exponential(&m_mat, integral_a).unwrap();
        let pb = peano_baker(&gen, s, t, 25, 1001).unwrap();
        assert!(max_abs_diff(&pb, &want) < 1e-8);
        let tm = transition_matrix(&gen, s, t, DEFAULT_STEP).unwrap();
        assert!(max_abs_diff(&tm.phi, &want) < 1e-10);
    }

    #[test]
    fn peano_baker_rejects_zero_terms() {
        let gen = ring_generator(3, 0.4);
        assert!(peano_baker(&gen, 0.0, 1.0, 0, 10).is_err());
        assert!(peano_baker(&gen, 0.0, 1.0, 3, 3).is_err());
    }

    #[test]
    fn decoupled_nodes_decay_independently() {
        let spec = NetworkSpec::disconnected(3).unwrap();
        let decay = DVector::from_vec(vec![0.3, 0.4, 0.5]);
        let gen = Generator::autonomous(&spec, &decay).unwrap();
        let tm = transition_matrix(&gen, 0.0, 2.0, DEFAULT_STEP).unwrap();
        for i in 0..3 {
            assert!((tm.phi[(i, i)] - (-2.0 * decay[i]).exp()).abs() < 1e-14);
        }
    }
}
