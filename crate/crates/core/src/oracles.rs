//! Independent reference computations used to check the time-scale filter.
//!
//! * [`discrete_kf_equivalent`]: the textbook discrete filter in
//!   predicted-covariance form under `Φ = I + cA`, `Q_d = c G Q Gᵀ`,
//!   `R_d = R / c`. It uses an LU inverse rather than the filter's Cholesky
//!   path.
//! * [`riccati_ode_reference`]: RK4 integration of
//!   `P' = AP + PAᵀ + GQGᵀ − PCᵀR⁻¹CP`.
//! * [`estimate_graininess_bound`]: bisection on a constant graininess for
//!   the onset of covariance divergence.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::kalman::{self, FilterError};
use crate::linalg;
use crate::linsys::StateSpaceModel;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("graininess must be positive, got {0}")]
    NonPositiveMu(f64),
    #[error("ODE step must be positive and smaller than the span")]
    BadOdeStep,
    #[error("innovation covariance is singular at step {0}")]
    SingularInnovation(usize),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("numeric overflow at t = {0}")]
    Overflow(f64),
    #[error("horizon_steps must be at least {MIN_HORIZON}, got {0}")]
    HorizonTooShort(usize),
    #[error("invalid search range ({lo}, {hi})")]
    BadRange { lo: f64, hi: f64 },
    #[error(
        "no sign change in ({lo}, {hi}): lower end divergent = {lo_divergent}, \
         upper end divergent = {hi_divergent}; widen the bracket"
    )]
    NoSignChange {
        lo: f64,
        hi: f64,
        lo_divergent: bool,
        hi_divergent: bool,
    },
    #[error(transparent)]
    Filter(#[from] FilterError),
}

pub type Result<T> = std::result::Result<T, OracleError>;

/// Classical discrete system matching a constant graininess `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteEquivalent {
    pub c: f64,
    pub phi: DMatrix<f64>,
    pub b_d: DMatrix<f64>,
    pub q_d: DMatrix<f64>,
    pub r_d: DMatrix<f64>,
}

impl DiscreteEquivalent {
    pub fn new(model: &StateSpaceModel, c: f64) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(OracleError::NonPositiveMu(c));
        }
        let n = model.state_dim();
        Ok(DiscreteEquivalent {
            c,
            phi: DMatrix::identity(n, n) + model.a() * c,
            b_d: model.b() * c,
            q_d: model.g() * model.q() * model.g().transpose() * c,
            r_d: model.r() / c,
        })
    }
}

/// Runs the classical predicted-covariance filter for `steps` steps.
///
/// Returns `steps + 1` pairs `(x̂_k, P_k)` starting with the initial belief.
/// `measurements[k]` and `inputs[k]` are consumed on step `k`; `inputs` may
/// be empty for a zero input.
pub fn discrete_kf_equivalent(
    model: &StateSpaceModel,
    c: f64,
    steps: usize,
    measurements: &[DVector<f64>],
    inputs: &[DVector<f64>],
) -> Result<Vec<(DVector<f64>, DMatrix<f64>)>> {
    let eq = DiscreteEquivalent::new(model, c)?;
    if measurements.len() < steps || (!inputs.is_empty() && inputs.len() < steps) {
        return Err(OracleError::DimensionMismatch(format!(
            "{steps} steps need {steps} measurements/inputs, got {}/{}",
            measurements.len(),
            inputs.len()
        )));
    }
    let (cm, d) = (model.c(), model.d());
    let zero_u = DVector::zeros(model.input_dim());
    let mut x = model.x0_mean().clone();
    let mut p = model.p0().clone();
    let mut out = Vec::with_capacity(steps + 1);
    out.push((x.clone(), p.clone()));
    for k in 0..steps {
        let u = inputs.get(k).unwrap_or(&zero_u);
        let s = cm * &p * cm.transpose() + &eq.r_d;
        let s_inv = s.lu().try_inverse().ok_or(OracleError::SingularInnovation(k))?;
        let gain = &eq.phi * &p * cm.transpose() * &s_inv;
        let innov = &measurements[k] - cm * &x - d;
        x = &eq.phi * &x + &eq.b_d * u + &gain * innov;
        p = &eq.phi * &p * eq.phi.transpose() + &eq.q_d
            - &eq.phi * &p * cm.transpose() * &s_inv * cm * &p * eq.phi.transpose();
        out.push((x.clone(), p.clone()));
    }
    Ok(out)
}

fn riccati_rhs(model: &StateSpaceModel, r_inv: &DMatrix<f64>, p: &DMatrix<f64>) -> DMatrix<f64> {
    let (a, c, g) = (model.a(), model.c(), model.g());
    a * p + p * a.transpose() + g * model.q() * g.transpose() - p * c.transpose() * r_inv * c * p
}

/// RK4 solution of the Riccati ODE on `[t0, t1]`.
///
/// Returns `(t, P)` at `t0`, every full step and `t1` (last step shortened).
pub fn riccati_ode_reference(
    model: &StateSpaceModel,
    t_span: (f64, f64),
    p0: &DMatrix<f64>,
    ode_step: f64,
) -> Result<Vec<(f64, DMatrix<f64>)>> {
    let (t0, t1) = t_span;
    if !(ode_step > 0.0) || !(t1 > t0) || ode_step > t1 - t0 {
        return Err(OracleError::BadOdeStep);
    }
    let n = model.state_dim();
    if p0.nrows() != n || p0.ncols() != n {
        return Err(OracleError::DimensionMismatch(format!(
            "P0 is {}x{}, expected {n}x{n}",
            p0.nrows(),
            p0.ncols()
        )));
    }
    let r_inv = model
        .r()
        .clone()
        .lu()
        .try_inverse()
        .ok_or(OracleError::SingularInnovation(0))?;
    let f = |p: &DMatrix<f64>| riccati_rhs(model, &r_inv, p);

    let full_steps = ((t1 - t0) / ode_step * (1.0 + 1e-12)).floor() as usize;
    let mut out = Vec::with_capacity(full_steps + 2);
    let mut p = p0.clone();
    out.push((t0, p.clone()));
    let mut k = 0usize;
    loop {
        let t = t0 + k as f64 * ode_step;
        let remaining = t1 - t;
        if remaining <= ode_step * 1e-9 {
            break;
        }
        let h = ode_step.min(remaining);
        let k1 = f(&p);
        let k2 = f(&(&p + &k1 * (h / 2.0)));
        let k3 = f(&(&p + &k2 * (h / 2.0)));
        let k4 = f(&(&p + &k3 * h));
        p = linalg::symmetrize(&(&p + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)));
        k += 1;
        let t_next = if h < ode_step { t1 } else { t0 + k as f64 * ode_step };
        if !linalg::is_finite(&p) {
            return Err(OracleError::Overflow(t_next));
        }
        out.push((t_next.min(t1), p.clone()));
    }
    Ok(out)
}

pub const MIN_HORIZON: usize = 500;

/// Rule used to call a constant graininess divergent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundOptions {
    pub horizon_steps: usize,
    pub resolution: f64,
    /// Ceiling is `ceiling_factor × trace(P0)`.
    pub ceiling_factor: f64,
    /// Fraction of the horizon at the end that must not be strictly
    /// increasing in trace.
    pub tail_fraction: f64,
}

impl Default for BoundOptions {
    fn default() -> Self {
        BoundOptions {
            horizon_steps: 1000,
            resolution: 0.05,
            ceiling_factor: 1e8,
            tail_fraction: 0.1,
        }
    }
}

impl BoundOptions {
    pub fn criterion(&self) -> String {
        format!(
            "trace-ceiling: trace(P) > {:e} * trace(P0) or non-finite within {} steps; \
             tail-monotone: trace(P) strictly increasing over the final {}% of the horizon",
            self.ceiling_factor,
            self.horizon_steps,
            self.tail_fraction * 100.0
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundEstimate {
    pub mu_bar: f64,
    pub criterion: String,
    pub bracket: (f64, f64),
    /// Every probed graininess with its verdict, in probe order.
    pub probes: Vec<(f64, bool)>,
}

/// Outcome of iterating the covariance recursion at one constant graininess.
#[derive(Debug, Clone, PartialEq)]
pub struct Probe {
    pub c: f64,
    pub divergent: bool,
    /// Step at which the ceiling was crossed, if it was.
    pub ceiling_step: Option<usize>,
    pub tail_monotone: bool,
    pub final_trace: f64,
}

/// Iterates `P ← P + c P^Δ` from `P0` and applies the divergence rule.
pub fn probe_divergence(model: &StateSpaceModel, c: f64, opts: &BoundOptions) -> Result<Probe> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(OracleError::NonPositiveMu(c));
    }
    let tr0 = model.p0().trace();
    let ceiling = opts.ceiling_factor * if tr0 > 0.0 { tr0 } else { 1.0 };
    let tail_len = ((opts.horizon_steps as f64 * opts.tail_fraction).ceil() as usize).max(2);
    let mut traces = Vec::with_capacity(opts.horizon_steps + 1);
    let mut p = model.p0().clone();
    traces.push(p.trace());
    for k in 1..=opts.horizon_steps {
        let delta = kalman::covariance_delta(model.a(), model.c(), model.g(), model.q(), model.r(), &p, c);
        let next = match delta {
            Ok(d) => linalg::symmetrize(&(&p + d * c)),
            Err(FilterError::SingularInnovationCovariance { .. }) => {
                return Ok(Probe {
                    c,
                    divergent: true,
                    ceiling_step: Some(k),
                    tail_monotone: false,
                    final_trace: f64::NAN,
                })
            }
            Err(e) => return Err(e.into()),
        };
        p = next;
        let tr = p.trace();
        if !tr.is_finite() || tr > ceiling {
            return Ok(Probe {
                c,
                divergent: true,
                ceiling_step: Some(k),
                tail_monotone: false,
                final_trace: tr,
            });
        }
        traces.push(tr);
    }
    let tail = &traces[traces.len() - tail_len..];
    let tail_monotone = tail.windows(2).all(|w| w[1] > w[0]);
    Ok(Probe {
        c,
        divergent: tail_monotone,
        ceiling_step: None,
        tail_monotone,
        final_trace: *traces.last().unwrap(),
    })
}

/// Bisects `mu_range` for the largest constant graininess that keeps the
/// covariance recursion bounded.
pub fn estimate_graininess_bound(
    model: &StateSpaceModel,
    mu_range: (f64, f64),
    opts: &BoundOptions,
) -> Result<BoundEstimate> {
    let (mut lo, mut hi) = mu_range;
    if !(lo > 0.0) || !(hi > lo) || !hi.is_finite() || !(opts.resolution > 0.0) {
        return Err(OracleError::BadRange { lo, hi });
    }
    if opts.horizon_steps < MIN_HORIZON {
        return Err(OracleError::HorizonTooShort(opts.horizon_steps));
    }
    let mut probes = Vec::new();
    let verdict = |c: f64, probes: &mut Vec<(f64, bool)>| -> Result<bool> {
        let d = probe_divergence(model, c, opts)?.divergent;
        probes.push((c, d));
        Ok(d)
    };
    let lo_div = verdict(lo, &mut probes)?;
    let hi_div = verdict(hi, &mut probes)?;
    if lo_div || !hi_div {
        return Err(OracleError::NoSignChange {
            lo,
            hi,
            lo_divergent: lo_div,
            hi_divergent: hi_div,
        });
    }
    while hi - lo > opts.resolution {
        let mid = 0.5 * (lo + hi);
        if verdict(mid, &mut probes)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(BoundEstimate {
        mu_bar: 0.5 * (lo + hi),
        criterion: opts.criterion(),
        bracket: (lo, hi),
        probes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kalman::{run_filter, FilterState};
    use crate::linsys::{simulate_truth, InputSignal, ModelMatrices};
    use crate::owc::reference_model;
    use crate::timescale::{SamplingPolicy, ScaleSpec};

    fn scalar(a: f64, c: f64, g: f64, q: f64, r: f64, p0: f64) -> StateSpaceModel {
        let s = |v| DMatrix::from_element(1, 1, v);
        StateSpaceModel::new(ModelMatrices {
            a: s(a),
            b: s(0.0),
            c: s(c),
            d: DVector::zeros(1),
            g: s(g),
            q: s(q),
            r: s(r),
            x0_mean: DVector::zeros(1),
            p0: s(p0),
        })
        .unwrap()
    }

    #[test]
    fn first_step_matches_filter() {
        let m = reference_model();
        let seq = discrete_kf_equivalent(&m, 2.0, 1, &[DVector::from_element(1, 0.3)], &[]).unwrap();
        let pd = kalman::covariance_delta(m.a(), m.c(), m.g(), m.q(), m.r(), m.p0(), 2.0).unwrap();
        let p_sigma = m.p0() + pd * 2.0;
        assert!((&seq[1].1 - p_sigma).amax() < 1e-12);

        let out = kalman::filter_step(
            &m,
            &FilterState::initial(&m, 0.0),
            &DVector::from_element(1, 0.3),
            &DVector::zeros(1),
            2.0,
        )
        .unwrap();
        assert!((&seq[1].0 - out.next.x_hat).amax() < 1e-12);
    }

    #[test]
    fn matches_filter_on_lattice() {
        let m = reference_model();
        for &c in &[0.1, 0.5, 2.0] {
            let grid = ScaleSpec::Uniform { c, end: 200.0 * c }
                .build()
                .unwrap()
                .sample_grid(SamplingPolicy::default())
                .unwrap();
            let traj = simulate_truth(&m, &grid, &InputSignal::zero(), 3, &Default::default()).unwrap();
            let trace = run_filter(&m, &grid, &traj, &InputSignal::zero()).unwrap();
            let ys: Vec<_> = traj.points.iter().map(|p| p.y.clone()).collect();
            let seq = discrete_kf_equivalent(&m, c, 200, &ys, &[]).unwrap();
            for (rec, (x, p)) in trace.records.iter().zip(&seq) {
                assert!((&rec.x_hat - x).amax() < 1e-9);
                assert!((&rec.p - p).amax() < 1e-9);
            }
        }
    }

    #[test]
    fn unobserved_noiseless_closed_form() {
        let m = StateSpaceModel::new(ModelMatrices {
            c: DMatrix::zeros(1, 2),
            q: DMatrix::zeros(1, 1),
            ..reference_model().matrices()
        })
        .unwrap();
        let c = 0.3;
        let seq = discrete_kf_equivalent(&m, c, 10, &vec![DVector::zeros(1); 10], &[]).unwrap();
        let phi = DMatrix::identity(2, 2) + m.a() * c;
        let mut expected = m.p0().clone();
        for (_, p) in &seq {
            assert!((p - &expected).amax() < 1e-12);
            expected = &phi * expected * phi.transpose();
        }
    }

    #[test]
    fn scalar_steady_state() {
        let (q, r) = (2.0, 3.0);
        let m = scalar(0.0, 1.0, 1.0, q, r, 1.0);
        let seq = discrete_kf_equivalent(&m, 1.0, 300, &vec![DVector::zeros(1); 300], &[]).unwrap();
        let p_inf = (q + (q * q + 4.0 * q * r).sqrt()) / 2.0;
        assert!((seq.last().unwrap().1[(0, 0)] - p_inf).abs() < 1e-10);
    }

    #[test]
    fn ode_examples() {
        let m = scalar(0.0, 0.0, 1.0, 1.0, 1.0, 0.5);
        let sol = riccati_ode_reference(&m, (0.0, 3.0), m.p0(), 0.1).unwrap();
        assert_eq!(sol.len(), 31);
        for (t, p) in &sol {
            assert!((p[(0, 0)] - (0.5 + t)).abs() < 1e-12);
        }
        let (q, r) = (2.0, 0.5);
        let m = scalar(0.0, 1.0, 1.0, q, r, 5.0);
        let sol = riccati_ode_reference(&m, (0.0, 20.0), m.p0(), 0.01).unwrap();
        assert!((sol.last().unwrap().1[(0, 0)] - (q * r).sqrt()).abs() < 1e-10);
        assert_eq!(sol.last().unwrap().0, 20.0);
    }

    #[test]
    fn ode_short_last_step() {
        let m = scalar(0.0, 0.0, 1.0, 1.0, 1.0, 0.0);
        let sol = riccati_ode_reference(&m, (0.0, 1.05), m.p0(), 0.1).unwrap();
        assert_eq!(sol.len(), 12);
        assert_eq!(sol.last().unwrap().0, 1.05);
        assert!((sol.last().unwrap().1[(0, 0)] - 1.05).abs() < 1e-12);
        assert_eq!(
            riccati_ode_reference(&m, (0.0, 1.0), m.p0(), 0.0).unwrap_err(),
            OracleError::BadOdeStep
        );
    }

    #[test]
    fn rk4_self_convergence() {
        // Scalar A=0, C=1: P(t) = s (P0 + s tanh(kt)) / (s + P0 tanh(kt)), s = √(qr), k = √(q/r).
        let (q, r, p0) = (1.0, 1.0, 4.0);
        let m = scalar(0.0, 1.0, 1.0, q, r, p0);
        let s = (q * r).sqrt();
        let k = (q / r).sqrt();
        let t1 = 2.0;
        let th = (k * t1).tanh();
        let exact = s * (p0 + s * th) / (s + p0 * th);
        let err = |h: f64| {
            let sol = riccati_ode_reference(&m, (0.0, t1), m.p0(), h).unwrap();
            (sol.last().unwrap().1[(0, 0)] - exact).abs()
        };
        let (e1, e2, e3) = (err(0.1), err(0.05), err(0.025));
        let r1 = e1 / e2;
        let r2 = e2 / e3;
        assert!((12.0..=20.0).contains(&r1), "ratio {r1}");
        assert!((12.0..=20.0).contains(&r2), "ratio {r2}");
    }

    #[test]
    fn stable_scalar_has_no_transition() {
        let m = scalar(-1.0, 1.0, 0.0, 0.0, 1.0, 1.0);
        let err = estimate_graininess_bound(&m, (0.1, 1.9), &BoundOptions::default()).unwrap_err();
        assert!(matches!(
            err,
            OracleError::NoSignChange {
                lo_divergent: false,
                hi_divergent: false,
                ..
            }
        ));
    }

    #[test]
    fn unstable_unobserved_scalar_has_a_bound() {
        // A=-3, C=0: P ← (1-3c)² P + c q, bounded iff |1-3c| < 1, i.e. c < 2/3.
        let m = scalar(-3.0, 0.0, 1.0, 1.0, 1.0, 1.0);
        let est = estimate_graininess_bound(&m, (0.1, 1.5), &BoundOptions::default()).unwrap();
        assert!((est.mu_bar - 2.0 / 3.0).abs() <= 0.05, "{est:?}");
        assert!(est.bracket.1 - est.bracket.0 <= 0.05);
        assert!(est.bracket.0 <= est.mu_bar && est.mu_bar <= est.bracket.1);
        assert!(est.criterion.contains("trace-ceiling"));
    }

    #[test]
    fn bad_arguments() {
        let m = reference_model();
        assert!(matches!(
            discrete_kf_equivalent(&m, 0.0, 1, &[DVector::zeros(1)], &[]).unwrap_err(),
            OracleError::NonPositiveMu(_)
        ));
        let short = BoundOptions {
            horizon_steps: 10,
            ..Default::default()
        };
        assert_eq!(
            estimate_graininess_bound(&m, (1.0, 2.0), &short).unwrap_err(),
            OracleError::HorizonTooShort(10)
        );
    }
}
