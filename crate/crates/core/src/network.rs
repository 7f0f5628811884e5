//! Weighted pollution-transport networks.
//!
//! `w_ij` is the intensity of the connection carrying pollution from node `j`
//! into node `i`. The graph operator `L` keeps those weights off the diagonal
//! and puts the negated outflow of node `j` on `L_jj`, so every column of `L`
//! sums to zero. The generator of the pollution dynamics is `L - diag(delta)`.
//!
//! Node labels are 1-based at the API boundary (builders, config, CSV) and
//! 0-based in matrix indices.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Column sums of a constructed operator must vanish to this tolerance.
pub const COLUMN_SUM_TOL: f64 = 1e-12;

/// Validated nonnegative weight matrix without self-loops.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    weights: DMatrix<f64>,
}

impl NetworkSpec {
    pub fn new(weights: DMatrix<f64>) -> Result<Self> {
        let n = weights.nrows();
        if weights.ncols() != n {
            return Err(Error::InvalidParameter(format!(
                "weight matrix must be square, got {}x{}",
                n,
                weights.ncols()
            )));
        }
        if n < 2 {
            return Err(Error::InvalidSize { n, min: 2 });
        }
        validate_weights(&weights)?;
        Ok(Self { weights })
    }

    /// Nodes with no connections at all.
    pub fn disconnected(n: usize) -> Result<Self> {
        Self::new(DMatrix::zeros(n, n))
    }

    pub fn n(&self) -> usize {
        self.weights.nrows()
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    /// Weight carrying pollution from node `from` into node `to` (1-based labels).
    pub fn weight(&self, to: usize, from: usize) -> f64 {
        self.weights[(to - 1, from - 1)]
    }

    pub fn operator(&self) -> GraphOperator {
        GraphOperator::from_weights(&self.weights)
    }
}

fn validate_weights(w: &DMatrix<f64>) -> Result<()> {
    for j in 0..w.ncols() {
        for i in 0..w.nrows() {
            let v = w[(i, j)];
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("weight w[{},{}]", i + 1, j + 1)));
            }
            if v < 0.0 {
                return Err(Error::assumption(
                    "1(i)",
                    format!("negative weight w[{},{}] = {v}", i + 1, j + 1),
                ));
            }
            if i == j && v != 0.0 {
                return Err(Error::assumption(
                    "1(i)",
                    format!("self-loop at node {} (w = {v})", i + 1),
                ));
            }
        }
    }
    Ok(())
}

/// The operator `L`: off-diagonal weights, diagonal equal to minus the column outflow.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphOperator {
    matrix: DMatrix<f64>,
}

impl GraphOperator {
    pub fn from_weights(w: &DMatrix<f64>) -> Self {
        let n = w.nrows();
        let mut matrix = w.clone();
        for j in 0..n {
            matrix[(j, j)] = 0.0;
            let outflow: f64 = (0..n).filter(|&k| k != j).map(|k| w[(k, j)]).sum();
            matrix[(j, j)] = -outflow;
        }
        Self { matrix }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    pub fn column_sums(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.matrix.ncols(),
            self.matrix.column_iter().map(|c| c.sum()),
        )
    }
}

fn ring_index(i: usize, offset: isize, n: usize) -> usize {
    (i as isize + offset).rem_euclid(n as isize) as usize
}

fn check_ring_size(n: usize) -> Result<()> {
    if n < 3 {
        Err(Error::InvalidSize { n, min: 3 })
    } else {
        Ok(())
    }
}

fn check_labels(n: usize, nodes: &[usize], what: &str) -> Result<()> {
    match nodes.iter().find(|&&k| k == 0 || k > n) {
        Some(k) => Err(Error::InvalidParameter(format!(
            "{what} node {k} outside 1..={n}"
        ))),
        None => Ok(()),
    }
}

/// Ring with periodic boundary where each node exchanges 1/2 with both neighbours.
pub fn build_nearest_neighbor(n: usize) -> Result<NetworkSpec> {
    check_ring_size(n)?;
    let mut w = DMatrix::zeros(n, n);
    for i in 0..n {
        // n = 3: both neighbours of i are distinct, so assignment (not +=) is right.
        w[(i, ring_index(i, 1, n))] = 0.5;
        w[(i, ring_index(i, -1, n))] = 0.5;
    }
    NetworkSpec::new(w)
}

/// All-to-all ring network weighted by the reciprocal circular distance.
pub fn build_distance_based(n: usize) -> Result<NetworkSpec> {
    check_ring_size(n)?;
    let w = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else {
            let d = i.abs_diff(j);
            1.0 / d.min(n - d) as f64
        }
    });
    NetworkSpec::new(w)
}

/// Nearest-neighbour ring distorted by a wind on the `affected` nodes (1-based).
///
/// On an affected row `i` the inflow from `i+1` becomes `1/2 + wind` and the
/// inflow from `i-1` becomes `1/2 - wind`, with periodic wraparound.
pub fn build_wind(n: usize, wind: f64, affected: &[usize]) -> Result<NetworkSpec> {
    check_ring_size(n)?;
    if !wind.is_finite() || !(0.0..0.5).contains(&wind) {
        return Err(Error::InvalidParameter(format!(
            "wind must lie in [0, 1/2), got {wind}"
        )));
    }
    check_labels(n, affected, "wind-affected")?;
    let base = build_nearest_neighbor(n)?;
    let mut w = base.weights;
    for &label in affected {
        let i = label - 1;
        w[(i, ring_index(i, 1, n))] = 0.5 + wind;
        w[(i, ring_index(i, -1, n))] = 0.5 - wind;
    }
    NetworkSpec::new(w)
}

/// Scales the inflow into each `from_nodes` node coming from each `to_nodes` node by `zeta`.
///
/// Mirrors `l_ij -> zeta * l_ij` for `i` in `from_nodes`, `j` in `to_nodes`;
/// the diagonal is recomputed so columns still sum to zero.
pub fn build_blocked(
    base: &NetworkSpec,
    zeta: f64,
    from_nodes: &[usize],
    to_nodes: &[usize],
) -> Result<NetworkSpec> {
    if !zeta.is_finite() || zeta < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "zeta must be finite and >= 0, got {zeta}"
        )));
    }
    let n = base.n();
    check_labels(n, from_nodes, "from")?;
    check_labels(n, to_nodes, "to")?;
    let mut w = base.weights.clone();
    for &i in from_nodes {
        for &j in to_nodes {
            if i != j {
                w[(i - 1, j - 1)] *= zeta;
            }
        }
    }
    NetworkSpec::new(w)
}

type MatrixFn = Arc<dyn Fn(f64) -> DMatrix<f64> + Send + Sync>;
type VectorFn = Arc<dyn Fn(f64) -> DVector<f64> + Send + Sync>;

/// Time-dependent ingredients of a non-autonomous generator.
#[derive(Clone)]
pub struct TimeVaryingSpec {
    pub n: usize,
    /// Weight matrix `W(t)`.
    pub weights: MatrixFn,
    /// Decay rates `delta(t)`.
    pub decay: VectorFn,
    /// Declared bound on `||d/dt (L(t) - delta(t))||`.
    pub derivative_bound: f64,
    /// Declared `(inf, sup)` of all decay rates over time.
    pub decay_bounds: (f64, f64),
    /// Times on which the declared properties are checked at construction.
    pub check_times: Vec<f64>,
}

impl TimeVaryingSpec {
    pub fn new(
        n: usize,
        weights: impl Fn(f64) -> DMatrix<f64> + Send + Sync + 'static,
        decay: impl Fn(f64) -> DVector<f64> + Send + Sync + 'static,
        derivative_bound: f64,
        decay_bounds: (f64, f64),
    ) -> Self {
        Self {
            n,
            weights: Arc::new(weights),
            decay: Arc::new(decay),
            derivative_bound,
            decay_bounds,
            check_times: (0..=200).map(|k| 0.05 * k as f64).collect(),
        }
    }

    pub fn with_check_times(mut self, times: Vec<f64>) -> Self {
        self.check_times = times;
        self
    }
}

#[derive(Clone)]
enum GeneratorKind {
    Constant {
        matrix: DMatrix<f64>,
        decay: DVector<f64>,
    },
    TimeVarying(TimeVaryingSpec),
}

/// The drift `L(t) - diag(delta(t))` of the pollution equation.
#[derive(Clone)]
pub struct Generator {
    n: usize,
    kind: GeneratorKind,
}

impl fmt::Debug for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            GeneratorKind::Constant { matrix, .. } => f
                .debug_struct("Generator")
                .field("n", &self.n)
                .field("matrix", matrix)
                .finish(),
            GeneratorKind::TimeVarying(spec) => f
                .debug_struct("Generator")
                .field("n", &self.n)
                .field("derivative_bound", &spec.derivative_bound)
                .field("decay_bounds", &spec.decay_bounds)
                .finish_non_exhaustive(),
        }
    }
}

fn check_decay(decay: &DVector<f64>, at: Option<f64>) -> Result<()> {
    for (i, &d) in decay.iter().enumerate() {
        let when = at.map(|t| format!(" at t = {t}")).unwrap_or_default();
        if !d.is_finite() {
            return Err(Error::assumption(
                "1(ii)",
                format!("decay rate delta at node {} is not finite{when}", i + 1),
            ));
        }
        if d <= 0.0 {
            return Err(Error::assumption(
                "1(ii)",
                format!(
                    "decay rate delta must be strictly positive, node {} has {d}{when}",
                    i + 1
                ),
            ));
        }
    }
    Ok(())
}

impl Generator {
    /// Constant generator from a fixed network and constant decay rates.
    pub fn autonomous(spec: &NetworkSpec, decay: &DVector<f64>) -> Result<Self> {
        let n = spec.n();
        if decay.len() != n {
            return Err(Error::InvalidParameter(format!(
                "decay has length {}, network has {n} nodes",
                decay.len()
            )));
        }
        check_decay(decay, None)?;
        let mut matrix = spec.operator().into_matrix();
        for i in 0..n {
            matrix[(i, i)] -= decay[i];
        }
        Ok(Self {
            n,
            kind: GeneratorKind::Constant {
                matrix,
                decay: decay.clone(),
            },
        })
    }

    /// Time-varying generator; declared properties are verified on `spec.check_times`.
    pub fn time_varying(spec: TimeVaryingSpec) -> Result<Self> {
        let n = spec.n;
        if n < 2 {
            return Err(Error::InvalidSize { n, min: 2 });
        }
        if !spec.derivative_bound.is_finite() || spec.derivative_bound < 0.0 {
            return Err(Error::assumption(
                "1(v)",
                "a finite nonnegative derivative bound beta must be declared",
            ));
        }
        let (lo, hi) = spec.decay_bounds;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::assumption(
                "1(ii)",
                format!("declared decay bounds ({lo}, {hi}) must satisfy 0 < lo <= hi < inf"),
            ));
        }
        for &t in &spec.check_times {
            let w = (spec.weights)(t);
            if w.nrows() != n || w.ncols() != n {
                return Err(Error::InvalidParameter(format!(
                    "W({t}) has shape {}x{}, expected {n}x{n}",
                    w.nrows(),
                    w.ncols()
                )));
            }
            validate_weights(&w)?;
            let d = (spec.decay)(t);
            if d.len() != n {
                return Err(Error::InvalidParameter(format!(
                    "delta({t}) has length {}, expected {n}",
                    d.len()
                )));
            }
            check_decay(&d, Some(t))?;
            if let Some(v) = d.iter().find(|&&v| v < lo || v > hi) {
                return Err(Error::InvalidParameter(format!(
                    "delta({t}) = {v} escapes the declared bounds ({lo}, {hi})"
                )));
            }
        }
        Ok(Self {
            n,
            kind: GeneratorKind::TimeVarying(spec),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_autonomous(&self) -> bool {
        matches!(self.kind, GeneratorKind::Constant { .. })
    }

    /// The constant matrix, when autonomous.
    pub fn constant_matrix(&self) -> Option<&DMatrix<f64>> {
        match &self.kind {
            GeneratorKind::Constant { matrix, .. } => Some(matrix),
            GeneratorKind::TimeVarying(_) => None,
        }
    }

    pub fn eval(&self, t: f64) -> DMatrix<f64> {
        match &self.kind {
            GeneratorKind::Constant { matrix, .. } => matrix.clone(),
            GeneratorKind::TimeVarying(spec) => {
                let mut m = GraphOperator::from_weights(&(spec.weights)(t)).into_matrix();
                let d = (spec.decay)(t);
                for i in 0..self.n {
                    m[(i, i)] -= d[i];
                }
                m
            }
        }
    }

    pub fn decay_at(&self, t: f64) -> DVector<f64> {
        match &self.kind {
            GeneratorKind::Constant { decay, .. } => decay.clone(),
            GeneratorKind::TimeVarying(spec) => (spec.decay)(t),
        }
    }

    /// `(inf, sup)` of the decay rates over nodes and time.
    pub fn decay_bounds(&self) -> (f64, f64) {
        match &self.kind {
            GeneratorKind::Constant { decay, .. } => (decay.min(), decay.max()),
            GeneratorKind::TimeVarying(spec) => spec.decay_bounds,
        }
    }

    pub fn derivative_bound(&self) -> f64 {
        match &self.kind {
            GeneratorKind::Constant { .. } => 0.0,
            GeneratorKind::TimeVarying(spec) => spec.derivative_bound,
        }
    }

    /// Largest real part among the eigenvalues of the constant generator.
    pub fn spectral_abscissa(&self) -> Option<f64> {
        self.constant_matrix().map(|m| {
            m.complex_eigenvalues()
                .iter()
                .map(|z| z.re)
                .fold(f64::NEG_INFINITY, f64::max)
        })
    }
}
