//! Kalman filter on an arbitrary time scale.
//!
//! One step from `t` to `σ(t) = t + μ` uses
//!
//! ```text
//! K(t)   = (I + μA) P Cᵀ (R + μ C P Cᵀ)⁻¹
//! P^Δ(t) = A P + (I + μA) P Aᵀ + G Q Gᵀ
//!          − (I + μA) P Cᵀ (R + μ C P Cᵀ)⁻¹ C P (I + μA)ᵀ
//! x̂^Δ(t) = A x̂ + B u + K (y − C x̂ − D)
//! ```
//!
//! followed by `x̂(σ) = x̂ + μ x̂^Δ` and `P(σ) = P + μ P^Δ`. The innovation
//! covariance is factored with Cholesky and never inverted explicitly, and
//! `P` is re-symmetrized after every step.
//!
//! No gain limiting is applied across large jumps: the error spikes that
//! follow a long gap are a property of the recursion itself.

use std::fmt::Write as _;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use thiserror::Error;

use crate::linalg;
use crate::linsys::{InputSignal, StateSpaceModel, Trajectory};
use crate::timescale::{GridOrigin, GridPoint};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FilterError {
    #[error("innovation covariance R + μCPCᵀ is not positive definite (μ = {mu})")]
    SingularInnovationCovariance { mu: f64 },
    #[error("graininess must be positive for a filter step, got {0}")]
    NonPositiveMu(f64),
    #[error("grid and trajectory are not aligned: {0}")]
    GridTrajectoryMismatch(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("numeric divergence at t = {t} (μ = {mu})")]
    NumericDivergence { t: f64, mu: f64 },
}

pub type Result<T> = std::result::Result<T, FilterError>;

/// Pieces shared by the gain and covariance expressions for one `(P, μ)`.
struct Innovation {
    /// `(I + μA) P Cᵀ`, n×p.
    jump_cross: DMatrix<f64>,
    /// Cholesky factor of `R + μ C P Cᵀ`.
    chol: Cholesky<f64, Dyn>,
}

fn innovation(
    a: &DMatrix<f64>,
    c: &DMatrix<f64>,
    r: &DMatrix<f64>,
    p: &DMatrix<f64>,
    mu: f64,
) -> Result<Innovation> {
    let n = a.nrows();
    if p.nrows() != n || p.ncols() != n || c.ncols() != n || r.nrows() != c.nrows() {
        return Err(FilterError::DimensionMismatch(format!(
            "A {}x{}, C {}x{}, R {}x{}, P {}x{}",
            a.nrows(),
            a.ncols(),
            c.nrows(),
            c.ncols(),
            r.nrows(),
            r.ncols(),
            p.nrows(),
            p.ncols()
        )));
    }
    let pct = p * c.transpose();
    let s = linalg::symmetrize(&(r + (c * &pct) * mu));
    let chol = linalg::cholesky(&s).ok_or(FilterError::SingularInnovationCovariance { mu })?;
    let jump = DMatrix::identity(n, n) + a * mu;
    Ok(Innovation {
        jump_cross: jump * pct,
        chol,
    })
}

impl Innovation {
    fn gain(&self) -> DMatrix<f64> {
        self.chol.solve(&self.jump_cross.transpose()).transpose()
    }

    /// `M S⁻¹ Mᵀ` evaluated as `WᵀW` with `W = L⁻¹ Mᵀ`, exactly symmetric.
    fn correction(&self) -> DMatrix<f64> {
        let w = self
            .chol
            .l_dirty()
            .solve_lower_triangular(&self.jump_cross.transpose())
            .expect("Cholesky factor has a nonzero diagonal");
        w.transpose() * w
    }
}

/// Kalman gain `K = (I + μA) P Cᵀ (R + μ C P Cᵀ)⁻¹`.
pub fn gain(
    a: &DMatrix<f64>,
    c: &DMatrix<f64>,
    r: &DMatrix<f64>,
    p: &DMatrix<f64>,
    mu: f64,
) -> Result<DMatrix<f64>> {
    Ok(innovation(a, c, r, p, mu)?.gain())
}

/// Right-hand side `P^Δ` of the covariance dynamic equation.
pub fn covariance_delta(
    a: &DMatrix<f64>,
    c: &DMatrix<f64>,
    g: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    p: &DMatrix<f64>,
    mu: f64,
) -> Result<DMatrix<f64>> {
    let inn = innovation(a, c, r, p, mu)?;
    Ok(delta_from(&inn, a, g, q, p, mu))
}

fn delta_from(
    inn: &Innovation,
    a: &DMatrix<f64>,
    g: &DMatrix<f64>,
    q: &DMatrix<f64>,
    p: &DMatrix<f64>,
    mu: f64,
) -> DMatrix<f64> {
    let n = a.nrows();
    let jump = DMatrix::identity(n, n) + a * mu;
    a * p + jump * p * a.transpose() + g * q * g.transpose() - inn.correction()
}

/// Belief at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterState {
    pub t: f64,
    pub x_hat: DVector<f64>,
    pub p: DMatrix<f64>,
}

impl FilterState {
    pub fn initial(model: &StateSpaceModel, t0: f64) -> Self {
        FilterState {
            t: t0,
            x_hat: model.x0_mean().clone(),
            p: model.p0().clone(),
        }
    }
}

/// Result of advancing the filter across one grid gap.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub next: FilterState,
    pub gain: DMatrix<f64>,
    pub innovation: DVector<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FilterOptions {
    /// Cap on the graininess fed to the filter. Off by default.
    pub clamp_mu: Option<f64>,
}

/// Advances `state` from `t` to `t + μ` using the measurement taken at `t`.
pub fn filter_step(
    model: &StateSpaceModel,
    state: &FilterState,
    y: &DVector<f64>,
    u: &DVector<f64>,
    mu: f64,
) -> Result<StepOutcome> {
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(FilterError::NonPositiveMu(mu));
    }
    if y.len() != model.output_dim() || u.len() != model.input_dim() {
        return Err(FilterError::DimensionMismatch(format!(
            "y has length {}, u has length {} (model is p={}, m={})",
            y.len(),
            u.len(),
            model.output_dim(),
            model.input_dim()
        )));
    }
    let (a, c) = (model.a(), model.c());
    let inn = innovation(a, c, model.r(), &state.p, mu)?;
    let k = inn.gain();
    let residual = y - c * &state.x_hat - model.d();
    let rate = a * &state.x_hat + model.b() * u + &k * &residual;
    let x_hat = &state.x_hat + rate * mu;
    let p_delta = delta_from(&inn, a, model.g(), model.q(), &state.p, mu);
    let p = linalg::symmetrize(&(&state.p + p_delta * mu));
    let t = state.t + mu;
    if !linalg::is_finite(&p) || x_hat.iter().any(|v| !v.is_finite()) {
        return Err(FilterError::NumericDivergence { t: state.t, mu });
    }
    Ok(StepOutcome {
        next: FilterState { t, x_hat, p },
        gain: k,
        innovation: residual,
    })
}

/// Everything known about one grid point after filtering.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterStepRecord {
    pub t: f64,
    pub mu: Option<f64>,
    pub origin: GridOrigin,
    pub y: DVector<f64>,
    /// Gain used to leave this point; `None` on the final point.
    pub gain: Option<DMatrix<f64>>,
    /// `y − C x̂ − D`.
    pub innovation: DVector<f64>,
    /// Estimate and covariance held at `t`, before `y(t)` is consumed.
    pub x_hat: DVector<f64>,
    pub p: DMatrix<f64>,
    /// Estimate and covariance at `σ(t)`.
    pub x_hat_post: Option<DVector<f64>>,
    pub p_post: Option<DMatrix<f64>>,
    /// `x_true − x̂`.
    pub est_error: DVector<f64>,
    /// `C (x_true − x̂)`, the estimation error seen through the sensor.
    pub output_error: DVector<f64>,
    /// `y − C x_true − D`.
    pub meas_error: DVector<f64>,
}

impl FilterStepRecord {
    /// Magnitude of the estimation error in measurement units.
    pub fn est_error_abs(&self) -> f64 {
        self.output_error.norm()
    }

    pub fn meas_error_abs(&self) -> f64 {
        self.meas_error.norm()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterTrace {
    pub records: Vec<FilterStepRecord>,
    pub scenario: Option<String>,
    pub seed: Option<u64>,
}

impl FilterTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t).collect()
    }

    pub fn mean_est_error(&self) -> f64 {
        mean(self.records.iter().map(FilterStepRecord::est_error_abs))
    }

    pub fn mean_meas_error(&self) -> f64 {
        mean(self.records.iter().map(FilterStepRecord::meas_error_abs))
    }

    pub fn max_est_error(&self) -> f64 {
        self.records
            .iter()
            .map(FilterStepRecord::est_error_abs)
            .fold(0.0, f64::max)
    }

    pub fn max_meas_error(&self) -> f64 {
        self.records
            .iter()
            .map(FilterStepRecord::meas_error_abs)
            .fold(0.0, f64::max)
    }

    /// CSV export; see `docs/formats.md` for the column layout.
    pub fn to_csv(&self) -> String {
        let Some(first) = self.records.first() else {
            return String::new();
        };
        let (n, p) = (first.x_hat.len(), first.y.len());
        let mut header = vec!["t".to_string(), "mu".to_string()];
        header.extend((0..p).map(|i| format!("y_{i}")));
        header.extend((0..n).map(|i| format!("x_hat_{i}")));
        header.extend((0..n).flat_map(|i| (0..n).map(move |j| format!("P_{i}_{j}"))));
        header.extend((0..n).flat_map(|i| (0..p).map(move |j| format!("K_{i}_{j}"))));
        header.extend((0..n).map(|i| format!("est_error_{i}")));
        header.extend((0..p).map(|i| format!("meas_error_{i}")));
        header.extend(["abs_est_error".to_string(), "abs_meas_error".to_string()]);
        header.push("origin".to_string());

        let mut out = header.join(",");
        out.push('\n');
        for rec in &self.records {
            let mut row: Vec<String> = vec![fmt_num(rec.t), rec.mu.map(fmt_num).unwrap_or_default()];
            row.extend(rec.y.iter().copied().map(fmt_num));
            row.extend(rec.x_hat.iter().copied().map(fmt_num));
            row.extend(row_major(&rec.p));
            match &rec.gain {
                Some(k) => row.extend(row_major(k)),
                None => row.extend(std::iter::repeat_n(String::new(), n * p)),
            }
            row.extend(rec.est_error.iter().copied().map(fmt_num));
            row.extend(rec.meas_error.iter().copied().map(fmt_num));
            row.push(fmt_num(rec.est_error_abs()));
            row.push(fmt_num(rec.meas_error_abs()));
            row.push(rec.origin.as_str().to_string());
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }
}

fn row_major(m: &DMatrix<f64>) -> impl Iterator<Item = String> + '_ {
    (0..m.nrows()).flat_map(move |i| (0..m.ncols()).map(move |j| fmt_num(m[(i, j)])))
}

/// Shortest round-trip decimal, switching to exponent form for very small or
/// large magnitudes.
pub fn fmt_num(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-4..1e15).contains(&a) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn mean(it: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = it.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    if count == 0 {
        f64::NAN
    } else {
        sum / count as f64
    }
}

/// Runs the filter over a grid, consuming the trajectory's measurements.
pub fn run_filter(
    model: &StateSpaceModel,
    grid: &[GridPoint],
    trajectory: &Trajectory,
    input: &InputSignal,
) -> Result<FilterTrace> {
    run_filter_with(model, grid, trajectory, input, &FilterOptions::default())
}

pub fn run_filter_with(
    model: &StateSpaceModel,
    grid: &[GridPoint],
    trajectory: &Trajectory,
    input: &InputSignal,
    options: &FilterOptions,
) -> Result<FilterTrace> {
    if grid.len() != trajectory.points.len() {
        return Err(FilterError::GridTrajectoryMismatch(format!(
            "grid has {} points, trajectory has {}",
            grid.len(),
            trajectory.points.len()
        )));
    }
    if let Some((i, _)) = grid
        .iter()
        .zip(&trajectory.points)
        .enumerate()
        .find(|(_, (g, p))| g.t != p.t || g.mu != p.mu)
    {
        return Err(FilterError::GridTrajectoryMismatch(format!(
            "point {i} differs (grid t = {}, trajectory t = {})",
            grid[i].t, trajectory.points[i].t
        )));
    }
    let Some(first) = grid.first() else {
        return Ok(FilterTrace {
            records: Vec::new(),
            scenario: None,
            seed: None,
        });
    };

    let (c, d) = (model.c(), model.d());
    let mut state = FilterState::initial(model, first.t);
    let mut records = Vec::with_capacity(grid.len());
    for (gp, truth) in grid.iter().zip(&trajectory.points) {
        let est_error = &truth.x - &state.x_hat;
        let output_error = c * &est_error;
        let meas_error = &truth.y - c * &truth.x - d;
        let innovation = &truth.y - c * &state.x_hat - d;
        let mut rec = FilterStepRecord {
            t: gp.t,
            mu: gp.mu,
            origin: gp.origin,
            y: truth.y.clone(),
            gain: None,
            innovation,
            x_hat: state.x_hat.clone(),
            p: state.p.clone(),
            x_hat_post: None,
            p_post: None,
            est_error,
            output_error,
            meas_error,
        };
        if let Some(mu) = gp.mu {
            let step_mu = options.clamp_mu.map_or(mu, |cap| mu.min(cap));
            let u = input.at(gp.t, model.input_dim());
            let out = filter_step(model, &state, &truth.y, &u, step_mu).map_err(|e| match e {
                FilterError::NumericDivergence { .. } => FilterError::NumericDivergence { t: gp.t, mu },
                other => other,
            })?;
            rec.gain = Some(out.gain);
            rec.x_hat_post = Some(out.next.x_hat.clone());
            rec.p_post = Some(out.next.p.clone());
            state = FilterState {
                t: gp.t + mu,
                ..out.next
            };
        }
        records.push(rec);
    }
    Ok(FilterTrace {
        records,
        scenario: None,
        seed: None,
    })
}
