//! Intermittent optical-wireless link scenario and spike analysis.
//!
//! The misalignment angle follows `x^Δ = x + ω` and the photodetector reads
//! `y = −637.35 x + 511.97 + υ` (mW) over the linear fit window
//! `[0.4141, 0.6729]` rad. Dropouts in the received signal give the time
//! scale `T_d`; the filter's error spikes right after each long dropout.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::kalman::FilterTrace;
use crate::linsys::{ModelMatrices, StateSpaceModel};
use crate::timescale::{ScaleSpec, TimeScale, MEMBERSHIP_TOL};

/// Linear received-power map `P(θ) = slope·θ + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OwcLinearFit {
    /// mW per radian.
    pub slope: f64,
    /// mW.
    pub intercept: f64,
    /// Radians.
    pub valid_angle_range: (f64, f64),
}

impl Default for OwcLinearFit {
    fn default() -> Self {
        OwcLinearFit {
            slope: -637.35,
            intercept: 511.97,
            valid_angle_range: (0.4141, 0.6729),
        }
    }
}

/// Received power together with whether the angle was inside the fit window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerReading {
    pub mw: f64,
    pub in_fit_window: bool,
}

impl OwcLinearFit {
    pub fn power_from_angle(&self, theta: f64) -> PowerReading {
        let (lo, hi) = self.valid_angle_range;
        PowerReading {
            mw: self.slope * theta + self.intercept,
            in_fit_window: (lo..=hi).contains(&theta),
        }
    }

    pub fn angle_from_power(&self, mw: f64) -> f64 {
        (mw - self.intercept) / self.slope
    }

    /// Angle at which the linear map reaches zero power.
    pub fn zero_power_angle(&self) -> f64 {
        self.intercept / -self.slope
    }

    pub fn window_midpoint(&self) -> f64 {
        0.5 * (self.valid_angle_range.0 + self.valid_angle_range.1)
    }
}

fn scalar(v: f64) -> DMatrix<f64> {
    DMatrix::from_element(1, 1, v)
}

/// Scalar OWC model with initial belief `x̂0 = 0.5`, `P0 = 0.01`.
pub fn owc_model() -> StateSpaceModel {
    let fit = OwcLinearFit::default();
    StateSpaceModel::new(ModelMatrices {
        a: scalar(1.0),
        b: scalar(0.0),
        c: scalar(fit.slope),
        d: DVector::from_element(1, fit.intercept),
        g: scalar(1.0),
        q: scalar(1.0),
        r: scalar(100.0),
        x0_mean: DVector::from_element(1, 0.5),
        p0: scalar(0.01),
    })
    .expect("OWC model is valid")
}

/// Two-state reference system: `A = [[0,1],[-1,-2]]`, `G = [0;1]`,
/// `C = [1,0]`, `Q = 1`, `R = 2`, `x0 = [1;1]`, `P0 = diag(2,3)`, `B = 0`.
pub fn reference_model() -> StateSpaceModel {
    StateSpaceModel::new(ModelMatrices {
        a: DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, -2.0]),
        b: DMatrix::zeros(2, 1),
        c: DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
        d: DVector::zeros(1),
        g: DMatrix::from_row_slice(2, 1, &[0.0, 1.0]),
        q: scalar(1.0),
        r: scalar(2.0),
        x0_mean: DVector::from_vec(vec![1.0, 1.0]),
        p0: DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 3.0])),
    })
    .expect("reference model is valid")
}

/// The experimentally derived OWC time scale over `[1, 300]`.
pub fn td_timescale() -> TimeScale {
    ScaleSpec::Td.build().expect("T_d is a valid time scale")
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpikeError {
    #[error("trace does not match the time scale: {0}")]
    TraceScaleMismatch(String),
    #[error("spike factor must exceed 1, got {0}")]
    BadSpikeFactor(f64),
    #[error("no traces to analyze")]
    NoTraces,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpikeOptions {
    pub spike_factor: f64,
    /// Gaps strictly longer than this count as jumps.
    pub jump_threshold: f64,
}

impl Default for SpikeOptions {
    fn default() -> Self {
        SpikeOptions {
            spike_factor: 3.0,
            jump_threshold: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpikeEntry {
    pub t_successor: f64,
    /// Jump length in seconds.
    pub j: f64,
    /// Mean over traces of `|C e|` at the successor.
    pub abs_est_error: f64,
    /// Mean over traces of `|v|` at the successor.
    pub abs_meas_error: f64,
    /// `abs_est_error / baseline_median_error`.
    pub ratio: f64,
    pub flagged: bool,
    /// Grid points from the successor until the mean error drops below
    /// `spike_factor × median`; `None` if it never does.
    pub recovery_steps: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpikeReport {
    pub entries: Vec<SpikeEntry>,
    pub baseline_median_error: f64,
    /// Spearman correlation between `J` and `abs_est_error`; NaN with fewer
    /// than two entries or constant ranks.
    pub rank_correlation_j_vs_error: f64,
    pub replicates: usize,
    pub spike_factor: f64,
}

impl SpikeReport {
    pub fn flagged(&self) -> impl Iterator<Item = &SpikeEntry> {
        self.entries.iter().filter(|e| e.flagged)
    }

    pub fn largest(&self) -> Option<&SpikeEntry> {
        self.entries
            .iter()
            .max_by(|a, b| a.abs_est_error.total_cmp(&b.abs_est_error))
    }
}

/// Per-grid-point mean of `|C e|` and `|v|` across traces on one grid.
pub fn mean_errors(traces: &[FilterTrace]) -> Result<(Vec<f64>, Vec<f64>), SpikeError> {
    let first = traces.first().ok_or(SpikeError::NoTraces)?;
    let n = first.len();
    let mut est = vec![0.0; n];
    let mut meas = vec![0.0; n];
    for (k, tr) in traces.iter().enumerate() {
        if tr.len() != n || tr.records.iter().zip(&first.records).any(|(a, b)| a.t != b.t) {
            return Err(SpikeError::TraceScaleMismatch(format!(
                "trace {k} is on a different grid"
            )));
        }
        for (i, rec) in tr.records.iter().enumerate() {
            est[i] += rec.est_error_abs();
            meas[i] += rec.meas_error_abs();
        }
    }
    let count = traces.len() as f64;
    est.iter_mut().chain(meas.iter_mut()).for_each(|v| *v /= count);
    Ok((est, meas))
}

/// Locates every jump successor and compares its Monte Carlo mean error
/// with the median over all other grid points.
pub fn analyze_spikes(
    traces: &[FilterTrace],
    ts: &TimeScale,
    opts: &SpikeOptions,
) -> Result<SpikeReport, SpikeError> {
    if !(opts.spike_factor > 1.0) {
        return Err(SpikeError::BadSpikeFactor(opts.spike_factor));
    }
    let (est, meas) = mean_errors(traces)?;
    let times = traces[0].times();
    if let Some(t) = times.iter().find(|&&t| !ts.contains(t)) {
        return Err(SpikeError::TraceScaleMismatch(format!("t = {t} is not in the time scale")));
    }
    if (times[0] - ts.min_time()).abs() > MEMBERSHIP_TOL
        || (times[times.len() - 1] - ts.max_time()).abs() > MEMBERSHIP_TOL
    {
        return Err(SpikeError::TraceScaleMismatch(format!(
            "trace covers [{}, {}], time scale covers [{}, {}]",
            times[0],
            times[times.len() - 1],
            ts.min_time(),
            ts.max_time()
        )));
    }

    let find = |t: f64| times.iter().position(|&s| (s - t).abs() <= MEMBERSHIP_TOL);
    let mut successors = Vec::new();
    for gap in ts.jumps(opts.jump_threshold) {
        let (Some(i_from), Some(i_to)) = (find(gap.from), find(gap.to)) else {
            return Err(SpikeError::TraceScaleMismatch(format!(
                "jump ({}, {}) endpoints are not grid points",
                gap.from, gap.to
            )));
        };
        if i_to != i_from + 1 {
            return Err(SpikeError::TraceScaleMismatch(format!(
                "grid has points inside the jump ({}, {})",
                gap.from, gap.to
            )));
        }
        successors.push((i_to, gap.len()));
    }

    let mut baseline: Vec<f64> = est
        .iter()
        .enumerate()
        .filter(|(i, _)| !successors.iter().any(|(s, _)| s == i))
        .map(|(_, &e)| e)
        .collect();
    let median = median(&mut baseline);
    let threshold = opts.spike_factor * median;

    let entries: Vec<SpikeEntry> = successors
        .iter()
        .map(|&(i, j)| SpikeEntry {
            t_successor: times[i],
            j,
            abs_est_error: est[i],
            abs_meas_error: meas[i],
            ratio: est[i] / median,
            flagged: est[i] >= threshold,
            recovery_steps: est[i..].iter().position(|&e| e < threshold),
        })
        .collect();
    let js: Vec<f64> = entries.iter().map(|e| e.j).collect();
    let errs: Vec<f64> = entries.iter().map(|e| e.abs_est_error).collect();
    Ok(SpikeReport {
        rank_correlation_j_vs_error: spearman(&js, &errs),
        entries,
        baseline_median_error: median,
        replicates: traces.len(),
        spike_factor: opts.spike_factor,
    })
}

fn median(v: &mut [f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Ranks starting at 1, ties sharing their average rank.
pub fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && v[idx[end]] == v[idx[start]] {
            end += 1;
        }
        let avg = (start + end + 1) as f64 / 2.0;
        for &k in &idx[start..end] {
            ranks[k] = avg;
        }
        start = end;
    }
    ranks
}

/// Spearman rank correlation (Pearson correlation of average ranks).
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    if x.len() != y.len() || x.len() < 2 {
        return f64::NAN;
    }
    let (rx, ry) = (average_ranks(x), average_ranks(y));
    let n = rx.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kalman::run_filter;
    use crate::linsys::{simulate_truth, InputSignal, SimulationOptions, TruthBoundary};
    use crate::timescale::{SamplingPolicy, TimeSegment};

    #[test]
    fn power_examples() {
        let fit = OwcLinearFit::default();
        let lo = fit.power_from_angle(0.4141);
        assert!((lo.mw - 248.043365).abs() < 1e-9 && lo.in_fit_window);
        let hi = fit.power_from_angle(0.6729);
        assert!((hi.mw - 83.09).abs() < 0.01 && hi.in_fit_window);
        assert!(fit.power_from_angle(fit.zero_power_angle()).mw.abs() < 1e-12);
        assert!((fit.zero_power_angle() - 0.8032792).abs() < 1e-6);
        assert!(!fit.power_from_angle(0.9).in_fit_window);
        for k in 0..=100 {
            let theta = 0.4141 + (0.6729 - 0.4141) * k as f64 / 100.0;
            let p = fit.power_from_angle(theta).mw;
            assert!((0.0..=270.0).contains(&p));
            assert!((fit.angle_from_power(p) - theta).abs() < 1e-12);
            assert!(fit.power_from_angle(theta + 1e-6).mw < p);
        }
    }

    #[test]
    fn owc_model_shape() {
        let m = owc_model();
        assert_eq!(
            (m.state_dim(), m.input_dim(), m.output_dim(), m.noise_dim()),
            (1, 1, 1, 1)
        );
        let y = m.c() * DVector::from_element(1, 0.5) + m.d();
        assert!((y[0] - 193.295).abs() < 1e-9);
        assert_eq!((m.x0_mean()[0], m.p0()[(0, 0)]), (0.5, 0.01));
    }

    #[test]
    fn td_examples() {
        let ts = td_timescale();
        assert_eq!(ts.graininess(30.0).unwrap(), 2.0);
        assert_eq!(ts.max_graininess(), 6.0);
        assert!(!ts.contains(127.0));
        assert!(ts.contains(128.0));
        let grid = ts.sample_grid(SamplingPolicy::default()).unwrap();
        let total: f64 = grid.iter().filter_map(|g| g.mu).sum();
        assert!((total - 299.0).abs() < 1e-9);
    }

    #[test]
    fn ranks_and_correlation() {
        assert_eq!(average_ranks(&[2.0, 2.0, 4.0, 3.0, 6.0]), vec![1.5, 1.5, 4.0, 3.0, 5.0]);
        assert!((spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]) - 1.0).abs() < 1e-15);
        assert!((spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]) + 1.0).abs() < 1e-15);
        assert!(spearman(&[1.0], &[1.0]).is_nan());
    }

    fn owc_traces(h: f64, seeds: std::ops::Range<u64>) -> (TimeScale, Vec<FilterTrace>) {
        let m = owc_model();
        let ts = td_timescale();
        let grid = ts.sample_grid(SamplingPolicy { h }).unwrap();
        let (lo, hi) = OwcLinearFit::default().valid_angle_range;
        let opts = SimulationOptions {
            boundary: TruthBoundary::Reflect { lo, hi },
            ..Default::default()
        };
        let traces = seeds
            .map(|s| {
                let traj = simulate_truth(&m, &grid, &InputSignal::zero(), s, &opts).unwrap();
                run_filter(&m, &grid, &traj, &InputSignal::zero()).unwrap()
            })
            .collect();
        (ts, traces)
    }

    #[test]
    fn owc_spikes_at_jump_successors() {
        let (ts, traces) = owc_traces(0.5, 0..40);
        let report = analyze_spikes(&traces, &ts, &SpikeOptions::default()).unwrap();
        let ts_succ: Vec<f64> = report.entries.iter().map(|e| e.t_successor).collect();
        assert_eq!(ts_succ, vec![32.0, 128.0, 135.0, 212.0, 224.0]);
        let js: Vec<f64> = report.entries.iter().map(|e| e.j).collect();
        assert_eq!(js, vec![2.0, 2.0, 4.0, 3.0, 6.0]);
        assert!(report.entries.iter().all(|e| e.flagged));
        assert_eq!(report.largest().unwrap().t_successor, 224.0);
    }

    #[test]
    fn successors_do_not_depend_on_h() {
        for h in [0.05, 0.25, 1.0] {
            let (ts, traces) = owc_traces(h, 0..2);
            let report = analyze_spikes(&traces, &ts, &SpikeOptions::default()).unwrap();
            let succ: Vec<f64> = report.entries.iter().map(|e| e.t_successor).collect();
            assert_eq!(succ, vec![32.0, 128.0, 135.0, 212.0, 224.0]);
        }
    }

    #[test]
    fn no_jumps_no_entries() {
        let m = reference_model();
        let ts = TimeScale::canonicalize(&[TimeSegment::interval(0.0, 10.0)]).unwrap();
        let grid = ts.sample_grid(SamplingPolicy::default()).unwrap();
        let traj = simulate_truth(&m, &grid, &InputSignal::zero(), 1, &Default::default()).unwrap();
        let trace = run_filter(&m, &grid, &traj, &InputSignal::zero()).unwrap();
        let report = analyze_spikes(&[trace], &ts, &SpikeOptions::default()).unwrap();
        assert!(report.entries.is_empty());
        assert!(report.baseline_median_error > 0.0);
    }

    #[test]
    fn mismatched_scale_is_rejected() {
        let (_, traces) = owc_traces(0.5, 0..1);
        let other = TimeScale::canonicalize(&[TimeSegment::interval(0.0, 10.0)]).unwrap();
        assert!(matches!(
            analyze_spikes(&traces, &other, &SpikeOptions::default()).unwrap_err(),
            SpikeError::TraceScaleMismatch(_)
        ));
        assert_eq!(
            analyze_spikes(&[], &other, &SpikeOptions::default()).unwrap_err(),
            SpikeError::NoTraces
        );
    }
}
