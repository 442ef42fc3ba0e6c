//! Linear time-invariant dynamics on a time scale.
//!
//! ```text
//! x^Δ(t) = A x(t) + B u(t) + G w(t)
//! y(t)   = C x(t) + D + v(t)
//! ```
//!
//! Truth trajectories are stepped with the same first-order delta form the
//! filter uses, `x(σ) = x + μ (A x + B u + G w)`, so both sides share one
//! time discretization.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::linalg;
use crate::timescale::GridPoint;

const SYM_TOL: f64 = 1e-12;
const EIG_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("{0} contains non-finite entries")]
    NonFinite(&'static str),
    #[error("{0} must be symmetric positive semidefinite")]
    NotPsd(&'static str),
    #[error("{0} must be symmetric positive definite")]
    NotPd(&'static str),
    #[error("grid is empty")]
    EmptyGrid,
}

pub type Result<T> = std::result::Result<T, ModelError>;

/// Raw matrices for [`StateSpaceModel::new`].
#[derive(Debug, Clone, PartialEq)]
pub struct ModelMatrices {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DVector<f64>,
    pub g: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub x0_mean: DVector<f64>,
    pub p0: DMatrix<f64>,
}

/// Validated model: dimensions agree, `Q` and `P0` are PSD and `R` is PD.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceModel {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    d: DVector<f64>,
    g: DMatrix<f64>,
    q: DMatrix<f64>,
    r: DMatrix<f64>,
    x0_mean: DVector<f64>,
    p0: DMatrix<f64>,
}

fn expect_shape(name: &str, m: &DMatrix<f64>, rows: usize, cols: usize) -> Result<()> {
    if m.nrows() != rows || m.ncols() != cols {
        return Err(ModelError::DimensionMismatch(format!(
            "{name} is {}x{}, expected {rows}x{cols}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

impl StateSpaceModel {
    pub fn new(m: ModelMatrices) -> Result<Self> {
        let n = m.a.nrows();
        if n == 0 {
            return Err(ModelError::DimensionMismatch("A must be nonempty".into()));
        }
        expect_shape("A", &m.a, n, n)?;
        let inputs = m.b.ncols();
        expect_shape("B", &m.b, n, inputs)?;
        let outputs = m.c.nrows();
        if outputs == 0 {
            return Err(ModelError::DimensionMismatch("C must have at least one row".into()));
        }
        expect_shape("C", &m.c, outputs, n)?;
        if m.d.len() != outputs {
            return Err(ModelError::DimensionMismatch(format!(
                "D has length {}, expected {outputs}",
                m.d.len()
            )));
        }
        let noises = m.g.ncols();
        expect_shape("G", &m.g, n, noises)?;
        expect_shape("Q", &m.q, noises, noises)?;
        expect_shape("R", &m.r, outputs, outputs)?;
        if m.x0_mean.len() != n {
            return Err(ModelError::DimensionMismatch(format!(
                "x0_mean has length {}, expected {n}",
                m.x0_mean.len()
            )));
        }
        expect_shape("P0", &m.p0, n, n)?;

        for (name, mat) in [
            ("A", &m.a),
            ("B", &m.b),
            ("C", &m.c),
            ("G", &m.g),
            ("Q", &m.q),
            ("R", &m.r),
            ("P0", &m.p0),
        ] {
            if !linalg::is_finite(mat) {
                return Err(ModelError::NonFinite(name));
            }
        }
        if m.d.iter().chain(m.x0_mean.iter()).any(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite("D/x0_mean"));
        }
        if !linalg::is_psd(&m.q, SYM_TOL, EIG_TOL) {
            return Err(ModelError::NotPsd("Q"));
        }
        if !linalg::is_psd(&m.p0, SYM_TOL, EIG_TOL) {
            return Err(ModelError::NotPsd("P0"));
        }
        if linalg::asymmetry(&m.r) > SYM_TOL * m.r.amax().max(1.0) || linalg::cholesky(&m.r).is_none() {
            return Err(ModelError::NotPd("R"));
        }

        Ok(StateSpaceModel {
            a: m.a,
            b: m.b,
            c: m.c,
            d: m.d,
            g: m.g,
            q: m.q,
            r: m.r,
            x0_mean: m.x0_mean,
            p0: m.p0,
        })
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }
    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }
    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }
    pub fn d(&self) -> &DVector<f64> {
        &self.d
    }
    pub fn g(&self) -> &DMatrix<f64> {
        &self.g
    }
    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }
    pub fn r(&self) -> &DMatrix<f64> {
        &self.r
    }
    pub fn x0_mean(&self) -> &DVector<f64> {
        &self.x0_mean
    }
    pub fn p0(&self) -> &DMatrix<f64> {
        &self.p0
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }
    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }
    pub fn output_dim(&self) -> usize {
        self.c.nrows()
    }
    pub fn noise_dim(&self) -> usize {
        self.g.ncols()
    }

    pub fn matrices(&self) -> ModelMatrices {
        ModelMatrices {
            a: self.a.clone(),
            b: self.b.clone(),
            c: self.c.clone(),
            d: self.d.clone(),
            g: self.g.clone(),
            q: self.q.clone(),
            r: self.r.clone(),
            x0_mean: self.x0_mean.clone(),
            p0: self.p0.clone(),
        }
    }

    /// Same dynamics with a different initial belief.
    pub fn with_initial_belief(&self, x0_mean: DVector<f64>, p0: DMatrix<f64>) -> Result<Self> {
        StateSpaceModel::new(ModelMatrices {
            x0_mean,
            p0,
            ..self.matrices()
        })
    }
}

/// `y = C x + D + noise`.
pub fn measure(
    model: &StateSpaceModel,
    x: &DVector<f64>,
    noise_draw: &DVector<f64>,
) -> Result<DVector<f64>> {
    if x.len() != model.state_dim() || noise_draw.len() != model.output_dim() {
        return Err(ModelError::DimensionMismatch(format!(
            "measure: x has length {}, noise has length {} (model is n={}, p={})",
            x.len(),
            noise_draw.len(),
            model.state_dim(),
            model.output_dim()
        )));
    }
    Ok(model.c() * x + model.d() + noise_draw)
}

type InputFn = dyn Fn(f64) -> DVector<f64> + Send + Sync;

/// Deterministic input `u(t)`; identically zero by default.
#[derive(Clone, Default)]
pub struct InputSignal(Option<Arc<InputFn>>);

impl InputSignal {
    pub fn zero() -> Self {
        InputSignal(None)
    }

    pub fn from_fn(f: impl Fn(f64) -> DVector<f64> + Send + Sync + 'static) -> Self {
        InputSignal(Some(Arc::new(f)))
    }

    pub fn at(&self, t: f64, dim: usize) -> DVector<f64> {
        match &self.0 {
            Some(f) => f(t),
            None => DVector::zeros(dim),
        }
    }
}

impl fmt::Debug for InputSignal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(_) => write!(f, "InputSignal(fn)"),
            None => write!(f, "InputSignal(zero)"),
        }
    }
}

/// How process noise enters a step of length μ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseScaling {
    /// `x(σ) = x + μ(Ax + Bu + Gw)` with `w ~ N(0, Q)` drawn once per grid point.
    #[default]
    PerPoint,
    /// `x(σ) = x + μ(Ax + Bu) + √μ G w`, i.e. increment covariance `μ G Q Gᵀ`.
    SqrtMu,
}

/// Optional confinement of the true state to a window, applied to every
/// state component after each step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum TruthBoundary {
    #[default]
    Free,
    Reflect { lo: f64, hi: f64 },
    Clamp { lo: f64, hi: f64 },
}

impl TruthBoundary {
    pub fn apply(&self, x: f64) -> f64 {
        match *self {
            TruthBoundary::Free => x,
            TruthBoundary::Clamp { lo, hi } => x.clamp(lo, hi),
            TruthBoundary::Reflect { lo, hi } => {
                if !x.is_finite() {
                    return x;
                }
                let width = hi - lo;
                if width <= 0.0 {
                    return lo;
                }
                let y = (x - lo).rem_euclid(2.0 * width);
                if y <= width {
                    lo + y
                } else {
                    lo + 2.0 * width - y
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SimulationOptions {
    pub noise_scaling: NoiseScaling,
    /// Draw `x(t0) ~ N(x0_mean, P0)` instead of starting at `x0_mean`.
    pub random_init: bool,
    pub boundary: TruthBoundary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub mu: Option<f64>,
    pub x: DVector<f64>,
    pub w: DVector<f64>,
    pub y: DVector<f64>,
    pub v: DVector<f64>,
}

/// Truth and measurements aligned one-to-one with a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub points: Vec<TrajectoryPoint>,
}

/// Random stream used by [`simulate_truth`].
///
/// Draw order: `n` standard normals for the initial state (only with
/// `random_init`), then for every grid point `q` normals for `w` followed by
/// `p` normals for `v`.
pub fn noise_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn standard_normals(rng: &mut ChaCha8Rng, len: usize) -> DVector<f64> {
    DVector::from_iterator(len, (0..len).map(|_| rng.sample::<f64, _>(StandardNormal)))
}

pub fn simulate_truth(
    model: &StateSpaceModel,
    grid: &[GridPoint],
    input: &InputSignal,
    seed: u64,
    options: &SimulationOptions,
) -> Result<Trajectory> {
    if grid.is_empty() {
        return Err(ModelError::EmptyGrid);
    }
    let n = model.state_dim();
    let q_factor = linalg::psd_factor(model.q());
    let r_factor = linalg::psd_factor(model.r());
    let mut rng = noise_rng(seed);

    let mut x = model.x0_mean().clone();
    if options.random_init {
        let z = standard_normals(&mut rng, n);
        x += linalg::psd_factor(model.p0()) * z;
    }
    x.apply(|v| *v = options.boundary.apply(*v));

    let mut points = Vec::with_capacity(grid.len());
    for gp in grid {
        let w = &q_factor * standard_normals(&mut rng, model.noise_dim());
        let v = &r_factor * standard_normals(&mut rng, model.output_dim());
        let y = measure(model, &x, &v)?;
        let next = gp.mu.map(|mu| {
            let u = input.at(gp.t, model.input_dim());
            if u.len() != model.input_dim() {
                return Err(ModelError::DimensionMismatch(format!(
                    "input has length {}, expected {}",
                    u.len(),
                    model.input_dim()
                )));
            }
            let drift = model.a() * &x + model.b() * u;
            let mut next = match options.noise_scaling {
                NoiseScaling::PerPoint => &x + (drift + model.g() * &w) * mu,
                NoiseScaling::SqrtMu => &x + drift * mu + model.g() * &w * mu.sqrt(),
            };
            next.apply(|v| *v = options.boundary.apply(*v));
            Ok(next)
        });
        let next = next.transpose()?;
        points.push(TrajectoryPoint {
            t: gp.t,
            mu: gp.mu,
            x: std::mem::replace(&mut x, next.unwrap_or_else(|| DVector::zeros(0))),
            w,
            y,
            v,
        });
    }
    Ok(Trajectory { points })
}
