//! Subcommand implementations.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use tskf::kalman::{fmt_num, run_filter_with, FilterError, FilterTrace};
use tskf::linsys::{simulate_truth, InputSignal, ModelMatrices, StateSpaceModel};
use tskf::oracles::{
    discrete_kf_equivalent, estimate_graininess_bound, probe_divergence, riccati_ode_reference,
    BoundOptions, OracleError,
};
use tskf::owc::{analyze_spikes, mean_errors, SpikeReport};
use tskf::timescale::{
    extract_from_measurements, ExtractParams, GridOrigin, SamplingPolicy, ScaleSpec, TimeScale,
    TimeSegment,
};

use crate::artifacts::{output_dir, ArtifactWriter};
use crate::config::{load_scenario, read_validity_csv, ConfigError, PlotFormat, PlotMode, ResolvedScenario};
use crate::plot::{self, PlotData};
use crate::CliError;

fn filter_error(e: FilterError, replicate: Option<usize>) -> CliError {
    let prefix = replicate.map(|r| format!("replicate {r}: ")).unwrap_or_default();
    match e {
        FilterError::NumericDivergence { .. } | FilterError::SingularInnovationCovariance { .. } => {
            CliError::Divergence(format!("{prefix}{e}"))
        }
        other => CliError::Other(format!("{prefix}{other}")),
    }
}

/// Simulates truth and filters it for one seed.
pub fn simulate_one(sc: &ResolvedScenario, seed: u64, replicate: Option<usize>) -> Result<FilterTrace, CliError> {
    let input = InputSignal::zero();
    let traj = simulate_truth(&sc.model, &sc.grid, &input, seed, &sc.simulation)
        .map_err(|e| CliError::Other(e.to_string()))?;
    let mut trace = run_filter_with(&sc.model, &sc.grid, &traj, &input, &sc.filter)
        .map_err(|e| filter_error(e, replicate))?;
    trace.scenario = Some(sc.config.label().to_string());
    trace.seed = Some(seed);
    Ok(trace)
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ErrorSummary {
    pub points: usize,
    pub replicates: usize,
    pub mean_abs_est_error: f64,
    pub mean_abs_meas_error: f64,
    pub max_abs_est_error: f64,
    pub max_abs_meas_error: f64,
    /// `mean_abs_meas_error − mean_abs_est_error`.
    pub margin: f64,
    pub est_below_meas: bool,
}

impl ErrorSummary {
    pub fn from_traces(traces: &[FilterTrace]) -> Self {
        let points = traces.first().map_or(0, FilterTrace::len);
        let count = traces.iter().map(FilterTrace::len).sum::<usize>() as f64;
        let sum = |f: fn(&tskf::kalman::FilterStepRecord) -> f64| {
            traces.iter().flat_map(|t| t.records.iter()).map(f).sum::<f64>()
        };
        let mean_est = sum(|r| r.est_error_abs()) / count;
        let mean_meas = sum(|r| r.meas_error_abs()) / count;
        ErrorSummary {
            points,
            replicates: traces.len(),
            mean_abs_est_error: mean_est,
            mean_abs_meas_error: mean_meas,
            max_abs_est_error: traces.iter().map(FilterTrace::max_est_error).fold(0.0, f64::max),
            max_abs_meas_error: traces.iter().map(FilterTrace::max_meas_error).fold(0.0, f64::max),
            margin: mean_meas - mean_est,
            est_below_meas: mean_est < mean_meas,
        }
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SpikeRow {
    pub t_successor: f64,
    pub j: f64,
    pub abs_est_error: f64,
    pub abs_meas_error: f64,
    pub ratio: f64,
    pub flagged: bool,
    pub recovery_steps: Option<usize>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SpikeSummary {
    pub spike_factor: f64,
    pub jump_threshold: f64,
    pub baseline_median_error: f64,
    pub rank_correlation_j_vs_error: f64,
    pub flagged_count: usize,
    pub entries: Vec<SpikeRow>,
}

impl SpikeSummary {
    fn new(report: &SpikeReport, jump_threshold: f64) -> Self {
        SpikeSummary {
            spike_factor: report.spike_factor,
            jump_threshold,
            baseline_median_error: report.baseline_median_error,
            rank_correlation_j_vs_error: report.rank_correlation_j_vs_error,
            flagged_count: report.flagged().count(),
            entries: report
                .entries
                .iter()
                .map(|e| SpikeRow {
                    t_successor: e.t_successor,
                    j: e.j,
                    abs_est_error: e.abs_est_error,
                    abs_meas_error: e.abs_meas_error,
                    ratio: e.ratio,
                    flagged: e.flagged,
                    recovery_steps: e.recovery_steps,
                })
                .collect(),
        }
    }

    fn to_csv(&self) -> String {
        let mut s = String::from("t_successor,j,abs_est_error,abs_meas_error,ratio,flagged,recovery_steps\n");
        for e in &self.entries {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                fmt_num(e.t_successor),
                fmt_num(e.j),
                fmt_num(e.abs_est_error),
                fmt_num(e.abs_meas_error),
                fmt_num(e.ratio),
                e.flagged,
                e.recovery_steps.map(|r| r.to_string()).unwrap_or_default()
            );
        }
        s
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Summary {
    pub scenario: String,
    pub command: String,
    pub seeds: SeedInfo,
    pub timescale: String,
    pub h: f64,
    pub x0_mean: Vec<f64>,
    pub p0: Vec<Vec<f64>>,
    pub errors: ErrorSummary,
    pub spikes: SpikeSummary,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SeedInfo {
    pub base: u64,
    pub count: usize,
    pub same_seed: bool,
}

fn timescale_label(sc: &ResolvedScenario) -> String {
    match (&sc.config.timescale.spec, &sc.config.timescale.validity_csv) {
        (Some(s), _) => s.clone(),
        (None, Some(p)) => format!("extracted from {}", p.display()),
        _ => String::new(),
    }
}

fn summary(sc: &ResolvedScenario, command: &str, traces: &[FilterTrace], seeds: SeedInfo) -> Result<Summary, CliError> {
    let report = analyze_spikes(traces, &sc.timescale, &sc.spikes).map_err(|e| CliError::Other(e.to_string()))?;
    Ok(Summary {
        scenario: sc.config.label().to_string(),
        command: command.to_string(),
        seeds,
        timescale: timescale_label(sc),
        h: sc.config.sampling.h,
        x0_mean: sc.model.x0_mean().iter().copied().collect(),
        p0: sc.model.p0().row_iter().map(|r| r.iter().copied().collect()).collect(),
        errors: ErrorSummary::from_traces(traces),
        spikes: SpikeSummary::new(&report, sc.spikes.jump_threshold),
    })
}

fn resolve(scenario: &str, overrides: &[String]) -> Result<ResolvedScenario, CliError> {
    let (cfg, base) = load_scenario(scenario, overrides)?;
    Ok(cfg.resolve(base.as_deref())?)
}

pub struct RunArgs {
    pub scenario: String,
    pub seed: Option<u64>,
    pub overrides: Vec<String>,
    pub out: Option<PathBuf>,
}

pub struct CommandOutcome {
    pub dir: PathBuf,
    pub summary: serde_json::Value,
}

pub fn run(args: &RunArgs) -> Result<CommandOutcome, CliError> {
    let mut overrides = args.overrides.clone();
    if let Some(seed) = args.seed {
        overrides.push(format!("run.seed={seed}"));
    }
    let sc = resolve(&args.scenario, &overrides)?;
    let seed = sc.config.run.seed;
    let trace = simulate_one(&sc, seed, None)?;

    let mut w = ArtifactWriter::create(output_dir(args.out.as_deref(), &sc.config, "run"))?;
    w.write("trace.csv", trace.to_csv().as_bytes())?;
    let traces = [trace];
    let summary = summary(
        &sc,
        "run",
        &traces,
        SeedInfo {
            base: seed,
            count: 1,
            same_seed: false,
        },
    )?;
    w.write("spikes.csv", summary.spikes.to_csv().as_bytes())?;
    w.write_json("summary.json", &summary)?;
    let data = trace_plot_data(&traces[0], sc.config.label());
    w.emit_plots("trace", &data, &sc.config)?;
    let dir = w.dir().to_path_buf();
    w.finish("run", &sc.config, vec![seed])?;
    Ok(CommandOutcome {
        dir,
        summary: serde_json::to_value(&summary).map_err(|e| CliError::Other(e.to_string()))?,
    })
}

fn trace_plot_data(trace: &FilterTrace, label: &str) -> PlotData {
    PlotData {
        title: format!("{label}: absolute errors"),
        t: trace.times(),
        origin: trace.records.iter().map(|r| r.origin).collect(),
        series: vec![
            ("|est error|".into(), trace.records.iter().map(|r| r.est_error_abs()).collect()),
            ("|meas error|".into(), trace.records.iter().map(|r| r.meas_error_abs()).collect()),
        ],
    }
}

pub struct McArgs {
    pub scenario: String,
    pub replicates: Option<usize>,
    pub seed: Option<u64>,
    pub same_seed: bool,
    pub keep_traces: bool,
    pub overrides: Vec<String>,
    pub out: Option<PathBuf>,
}

/// Runs replicates in parallel; results come back in replicate order.
pub fn monte_carlo_traces(
    sc: &ResolvedScenario,
    replicates: usize,
    base_seed: u64,
    same_seed: bool,
) -> Result<Vec<FilterTrace>, CliError> {
    let results: Vec<_> = (0..replicates)
        .into_par_iter()
        .map(|i| {
            let seed = if same_seed { base_seed } else { base_seed.wrapping_add(i as u64) };
            simulate_one(sc, seed, Some(i))
        })
        .collect();
    results.into_iter().collect()
}

pub fn monte_carlo(args: &McArgs) -> Result<CommandOutcome, CliError> {
    let mut overrides = args.overrides.clone();
    if let Some(seed) = args.seed {
        overrides.push(format!("run.seed={seed}"));
    }
    if let Some(n) = args.replicates {
        overrides.push(format!("run.replicates={n}"));
    }
    let sc = resolve(&args.scenario, &overrides)?;
    let (n, base) = (sc.config.run.replicates, sc.config.run.seed);
    if n < 2 {
        return Err(ConfigError::Invalid {
            field: "run.replicates".into(),
            reason: "Monte Carlo needs at least 2 replicates".into(),
        }
        .into());
    }
    let traces = monte_carlo_traces(&sc, n, base, args.same_seed)?;

    let mut w = ArtifactWriter::create(output_dir(args.out.as_deref(), &sc.config, "mc"))?;
    let (mean_est, mean_meas) = mean_errors(&traces).map_err(|e| CliError::Other(e.to_string()))?;
    let std = |f: fn(&tskf::kalman::FilterStepRecord) -> f64, means: &[f64]| -> Vec<f64> {
        (0..means.len())
            .map(|i| {
                let var = traces.iter().map(|t| (f(&t.records[i]) - means[i]).powi(2)).sum::<f64>()
                    / (traces.len() - 1) as f64;
                var.sqrt()
            })
            .collect()
    };
    let std_est = std(|r| r.est_error_abs(), &mean_est);
    let std_meas = std(|r| r.meas_error_abs(), &mean_meas);
    let mut agg = String::from(
        "t,mu,origin,mean_abs_est_error,std_abs_est_error,mean_abs_meas_error,std_abs_meas_error\n",
    );
    for (i, rec) in traces[0].records.iter().enumerate() {
        let _ = writeln!(
            agg,
            "{},{},{},{},{},{},{}",
            fmt_num(rec.t),
            rec.mu.map(fmt_num).unwrap_or_default(),
            rec.origin.as_str(),
            fmt_num(mean_est[i]),
            fmt_num(std_est[i]),
            fmt_num(mean_meas[i]),
            fmt_num(std_meas[i])
        );
    }
    w.write("aggregate.csv", agg.as_bytes())?;
    if args.keep_traces {
        for (i, t) in traces.iter().enumerate() {
            w.write(&format!("replicate_{i:04}.csv"), t.to_csv().as_bytes())?;
        }
    }
    let seeds: Vec<u64> = traces.iter().map(|t| t.seed.unwrap_or(base)).collect();
    let summary = summary(
        &sc,
        "mc",
        &traces,
        SeedInfo {
            base,
            count: n,
            same_seed: args.same_seed,
        },
    )?;
    w.write("spikes.csv", summary.spikes.to_csv().as_bytes())?;
    w.write_json("summary.json", &summary)?;
    let data = PlotData {
        title: format!("{}: Monte Carlo mean absolute errors ({n} replicates)", sc.config.label()),
        t: traces[0].times(),
        origin: traces[0].records.iter().map(|r| r.origin).collect(),
        series: vec![
            ("mean |est error|".into(), mean_est),
            ("mean |meas error|".into(), mean_meas),
        ],
    };
    w.emit_plots("aggregate", &data, &sc.config)?;
    let dir = w.dir().to_path_buf();
    w.finish("mc", &sc.config, seeds)?;
    Ok(CommandOutcome {
        dir,
        summary: serde_json::to_value(&summary).map_err(|e| CliError::Other(e.to_string()))?,
    })
}

pub struct SweepArgs {
    pub scenario: String,
    pub lo: f64,
    pub hi: f64,
    pub resolution: f64,
    pub horizon: usize,
    pub ceiling_factor: f64,
    pub overrides: Vec<String>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeRow {
    pub c: f64,
    pub divergent: bool,
    pub ceiling_step: Option<usize>,
    pub tail_monotone: bool,
    pub final_trace: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub scenario: String,
    pub status: String,
    pub criterion: String,
    pub mu_range: (f64, f64),
    pub resolution: f64,
    pub horizon_steps: usize,
    pub mu_bar: Option<f64>,
    pub bracket: Option<(f64, f64)>,
    pub probes: Vec<ProbeRow>,
}

pub fn sweep(args: &SweepArgs) -> Result<CommandOutcome, CliError> {
    let sc = resolve(&args.scenario, &args.overrides)?;
    let opts = BoundOptions {
        horizon_steps: args.horizon,
        resolution: args.resolution,
        ceiling_factor: args.ceiling_factor,
        ..BoundOptions::default()
    };
    let result = estimate_graininess_bound(&sc.model, (args.lo, args.hi), &opts);
    let probe_cs: Vec<f64> = match &result {
        Ok(est) => est.probes.iter().map(|p| p.0).collect(),
        Err(OracleError::NoSignChange { lo, hi, .. }) => vec![*lo, *hi],
        Err(e) => return Err(CliError::Other(e.to_string())),
    };
    let probes = probe_cs
        .par_iter()
        .map(|&c| {
            probe_divergence(&sc.model, c, &opts)
                .map(|p| ProbeRow {
                    c,
                    divergent: p.divergent,
                    ceiling_step: p.ceiling_step,
                    tail_monotone: p.tail_monotone,
                    final_trace: p.final_trace,
                })
                .map_err(|e| CliError::Other(e.to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let report = BoundReport {
        scenario: sc.config.label().to_string(),
        status: if result.is_ok() { "ok" } else { "no_sign_change" }.into(),
        criterion: opts.criterion(),
        mu_range: (args.lo, args.hi),
        resolution: args.resolution,
        horizon_steps: args.horizon,
        mu_bar: result.as_ref().ok().map(|e| e.mu_bar),
        bracket: result.as_ref().ok().map(|e| e.bracket),
        probes,
    };
    let mut w = ArtifactWriter::create(output_dir(args.out.as_deref(), &sc.config, "sweep"))?;
    w.write_json("bound.json", &report)?;
    let mut csv = String::from("c,divergent,ceiling_step,tail_monotone,final_trace\n");
    for p in &report.probes {
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            fmt_num(p.c),
            p.divergent,
            p.ceiling_step.map(|s| s.to_string()).unwrap_or_default(),
            p.tail_monotone,
            fmt_num(p.final_trace)
        );
    }
    w.write("bound.csv", csv.as_bytes())?;
    let dir = w.dir().to_path_buf();
    match result {
        Ok(_) => {
            w.finish("sweep", &sc.config, vec![])?;
            Ok(CommandOutcome {
                dir,
                summary: serde_json::to_value(&report).map_err(|e| CliError::Other(e.to_string()))?,
            })
        }
        Err(e) => Err(CliError::Other(format!("{e} (report written to {})", dir.display()))),
    }
}

pub struct OracleArgs {
    pub scenario: String,
    pub graininess: Vec<f64>,
    pub steps: usize,
    pub tolerance: f64,
    pub ode_tolerance: f64,
    pub overrides: Vec<String>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DiscreteCheck {
    pub c: f64,
    pub steps: usize,
    pub max_abs_diff_x: f64,
    pub max_abs_diff_p: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct OdeCheck {
    pub t_span: (f64, f64),
    pub h: f64,
    pub max_rel_error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub scenario: String,
    pub tolerance: f64,
    pub discrete: Vec<DiscreteCheck>,
    pub ode: OdeCheck,
    pub pass: bool,
}

/// Filter on the lattice `cℤ` versus the discrete oracle.
pub fn discrete_check(
    model: &StateSpaceModel,
    c: f64,
    steps: usize,
    seed: u64,
    tol: f64,
) -> Result<DiscreteCheck, CliError> {
    let grid = ScaleSpec::Uniform { c, end: steps as f64 * c }
        .build()
        .and_then(|ts| ts.sample_grid(SamplingPolicy::default()))
        .map_err(|e| CliError::Other(e.to_string()))?;
    let input = InputSignal::zero();
    let traj = simulate_truth(model, &grid, &input, seed, &Default::default())
        .map_err(|e| CliError::Other(e.to_string()))?;
    let trace = tskf::kalman::run_filter(model, &grid, &traj, &input).map_err(|e| filter_error(e, None))?;
    let ys: Vec<_> = traj.points.iter().map(|p| p.y.clone()).collect();
    let seq = discrete_kf_equivalent(model, c, grid.len() - 1, &ys, &[]).map_err(|e| CliError::Other(e.to_string()))?;
    let (mut dx, mut dp) = (0.0f64, 0.0f64);
    for (rec, (x, p)) in trace.records.iter().zip(&seq) {
        dx = dx.max((&rec.x_hat - x).amax());
        dp = dp.max((&rec.p - p).amax());
    }
    Ok(DiscreteCheck {
        c,
        steps: grid.len() - 1,
        max_abs_diff_x: dx,
        max_abs_diff_p: dp,
        pass: dx <= tol && dp <= tol,
    })
}

/// Filter covariance on an interval sampled at `h` versus RK4; returns the
/// largest entrywise error relative to the largest reference entry.
pub fn ode_covariance_error(model: &StateSpaceModel, t_span: (f64, f64), h: f64) -> Result<f64, CliError> {
    let ts = TimeScale::canonicalize(&[TimeSegment::interval(t_span.0, t_span.1)])
        .map_err(|e| CliError::Other(e.to_string()))?;
    let grid = ts.sample_grid(SamplingPolicy { h }).map_err(|e| CliError::Other(e.to_string()))?;
    let quiet = StateSpaceModel::new(ModelMatrices {
        q: model.q() * 0.0,
        ..model.matrices()
    })
    .map_err(|e| CliError::Other(e.to_string()))?;
    let input = InputSignal::zero();
    let traj = simulate_truth(&quiet, &grid, &input, 0, &Default::default()).map_err(|e| CliError::Other(e.to_string()))?;
    // Noise-free truth, but the filter keeps the model's Q.
    let trace = tskf::kalman::run_filter(model, &grid, &traj, &input).map_err(|e| filter_error(e, None))?;
    let reference = riccati_ode_reference(model, t_span, model.p0(), h).map_err(|e| CliError::Other(e.to_string()))?;
    if reference.len() != trace.len() {
        return Err(CliError::Other(format!(
            "ODE reference has {} points, grid has {}",
            reference.len(),
            trace.len()
        )));
    }
    let scale = reference.iter().map(|(_, p)| p.amax()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let err = trace
        .records
        .iter()
        .zip(&reference)
        .map(|(rec, (_, p))| (&rec.p - p).amax())
        .fold(0.0, f64::max);
    Ok(err / scale)
}

pub fn oracle_check(args: &OracleArgs) -> Result<CommandOutcome, CliError> {
    let sc = resolve(&args.scenario, &args.overrides)?;
    let seed = sc.config.run.seed;
    let discrete = args
        .graininess
        .iter()
        .map(|&c| discrete_check(&sc.model, c, args.steps, seed, args.tolerance))
        .collect::<Result<Vec<_>, _>>()?;
    let (span, h) = ((0.0, 5.0), 1e-3);
    let rel = ode_covariance_error(&sc.model, span, h)?;
    let ode = OdeCheck {
        t_span: span,
        h,
        max_rel_error: rel,
        tolerance: args.ode_tolerance,
        pass: rel <= args.ode_tolerance,
    };
    let pass = ode.pass && discrete.iter().all(|d| d.pass);
    let report = OracleReport {
        scenario: sc.config.label().to_string(),
        tolerance: args.tolerance,
        discrete,
        ode,
        pass,
    };
    let mut w = ArtifactWriter::create(output_dir(args.out.as_deref(), &sc.config, "oracle-check"))?;
    w.write_json("oracle_report.json", &report)?;
    let dir = w.dir().to_path_buf();
    if !pass {
        let mut diff = String::new();
        for d in report.discrete.iter().filter(|d| !d.pass) {
            let _ = write!(
                diff,
                "c = {}: max |dx| = {:e}, max |dP| = {:e} (tol {:e}); ",
                d.c, d.max_abs_diff_x, d.max_abs_diff_p, args.tolerance
            );
        }
        if !report.ode.pass {
            let _ = write!(
                diff,
                "ODE relative error {:e} exceeds {:e}",
                report.ode.max_rel_error, report.ode.tolerance
            );
        }
        return Err(CliError::OracleMismatch(diff));
    }
    w.finish("oracle-check", &sc.config, vec![seed])?;
    Ok(CommandOutcome {
        dir,
        summary: serde_json::to_value(&report).map_err(|e| CliError::Other(e.to_string()))?,
    })
}

/// Extracts a time scale from a validity CSV and renders it as a spec string.
pub fn extract_ts(csv: &Path, min_continuous_run: usize) -> Result<(String, TimeScale), CliError> {
    let samples = read_validity_csv(csv)?;
    let ts = extract_from_measurements(&samples, ExtractParams { min_continuous_run })
        .map_err(|e| CliError::Config(ConfigError::Invalid {
            field: format!("validity csv {}", csv.display()),
            reason: e.to_string(),
        }))?;
    let spec = ScaleSpec::Explicit(ts.segments().to_vec()).to_string();
    Ok((spec, ts))
}

/// Reads a trace or aggregate CSV back into plot data.
pub fn read_plot_csv(path: &Path) -> Result<PlotData, CliError> {
    let io = |e: csv::Error| CliError::Other(format!("{}: {e}", path.display()));
    let mut reader = csv::Reader::from_path(path).map_err(io)?;
    let headers = reader.headers().map_err(io)?.clone();
    let col = |names: &[&'static str]| -> Result<(usize, &'static str), CliError> {
        names
            .iter()
            .find_map(|n| headers.iter().position(|h| h == *n).map(|i| (i, *n)))
            .ok_or_else(|| CliError::Other(format!("{}: missing column {}", path.display(), names.join(" or "))))
    };
    let (ti, _) = col(&["t"])?;
    let (oi, _) = col(&["origin"])?;
    let (ei, en) = col(&["abs_est_error", "mean_abs_est_error"])?;
    let (mi, mn) = col(&["abs_meas_error", "mean_abs_meas_error"])?;
    let mut data = PlotData {
        title: path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
        t: Vec::new(),
        origin: Vec::new(),
        series: vec![(en.replace('_', " "), Vec::new()), (mn.replace('_', " "), Vec::new())],
    };
    for (k, rec) in reader.records().enumerate() {
        let rec = rec.map_err(io)?;
        let num = |i: usize| -> Result<f64, CliError> {
            rec.get(i)
                .unwrap_or("")
                .parse()
                .map_err(|_| CliError::Other(format!("{}: bad number on row {}", path.display(), k + 2)))
        };
        data.t.push(num(ti)?);
        data.origin.push(
            rec.get(oi)
                .unwrap_or("")
                .parse::<GridOrigin>()
                .map_err(|e| CliError::Other(e.to_string()))?,
        );
        data.series[0].1.push(num(ei)?);
        data.series[1].1.push(num(mi)?);
    }
    if data.t.is_empty() {
        return Err(CliError::Other(format!("{}: no rows to plot", path.display())));
    }
    Ok(data)
}

/// Renders a trace/aggregate CSV; returns the written paths.
pub fn plot_file(input: &Path, mode: PlotMode, format: PlotFormat, out_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let data = read_plot_csv(input)?;
    std::fs::create_dir_all(out_dir).map_err(|source| CliError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let stem = data.title.clone();
    let mut written = Vec::new();
    match format {
        PlotFormat::Svg => {
            let p = out_dir.join(format!("{stem}_{}.svg", mode.as_str()));
            crate::artifacts::write_atomic(&p, plot::render_svg(&data, mode).as_bytes())?;
            written.push(p);
        }
        PlotFormat::Data => {
            for (k, (name, _)) in data.series.iter().enumerate() {
                let p = out_dir.join(format!("{stem}_{}_{}.csv", mode.as_str(), plot::slug(name)));
                crate::artifacts::write_atomic(&p, plot::render_data(&data, mode, k).as_bytes())?;
                written.push(p);
            }
        }
    }
    Ok(written)
}
