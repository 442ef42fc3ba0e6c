//! Time scales: finite unions of closed intervals and discrete points.
//!
//! A [`TimeScale`] is always held in canonical form: segments are sorted,
//! pairwise disjoint, abutting or overlapping intervals are merged and
//! points that touch an interval are absorbed into it. Maximal runs of
//! isolated points between two intervals are grouped into one
//! [`TimeSegment::Points`] segment, which makes the canonical form unique.
//!
//! Continuous portions are realized numerically by [`TimeScale::sample_grid`],
//! which steps through every interval at a fixed step `h` (shortening the last
//! sub-step so the right endpoint is hit exactly) and keeps every discrete
//! point verbatim.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Absolute tolerance (seconds) for membership and merge decisions.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TimeScaleError {
    #[error("a time scale needs at least one segment")]
    EmptyInput,
    #[error("non-finite bound {0}")]
    NonFinite(f64),
    #[error("invalid segment: {0}")]
    InvalidSegment(String),
    #[error("t = {0} is not a member of the time scale")]
    NotInTimeScale(f64),
    #[error("sampling step {h} exceeds the shortest interval length {shortest}")]
    StepTooLarge { h: f64, shortest: f64 },
    #[error("sampling step must be positive and finite, got {0}")]
    BadStep(f64),
    #[error("unknown time scale name `{0}`")]
    UnknownName(String),
    #[error("bad parameter for `{name}`: {reason}")]
    BadParameter { name: String, reason: String },
    #[error("cannot parse scale spec: {0}")]
    Parse(String),
    #[error("no valid samples in the measurement series")]
    NoValidSamples,
    #[error("timestamps must be strictly increasing (at index {0})")]
    NonMonotoneTimestamps(usize),
}

pub type Result<T> = std::result::Result<T, TimeScaleError>;

/// Building block of a time scale.
#[derive(Debug, Clone, PartialEq)]
pub enum TimeSegment {
    /// Closed interval `[lo, hi]`.
    Interval { lo: f64, hi: f64 },
    /// Strictly increasing, nonempty set of isolated instants.
    Points(Vec<f64>),
}

impl TimeSegment {
    pub fn interval(lo: f64, hi: f64) -> Self {
        TimeSegment::Interval { lo, hi }
    }

    /// Unit-spaced run `{first, first + 1, ..., last}`.
    pub fn integer_run(first: i64, last: i64) -> Self {
        TimeSegment::Points((first..=last).map(|k| k as f64).collect())
    }

    pub fn first(&self) -> f64 {
        match self {
            TimeSegment::Interval { lo, .. } => *lo,
            TimeSegment::Points(p) => p[0],
        }
    }

    pub fn last(&self) -> f64 {
        match self {
            TimeSegment::Interval { hi, .. } => *hi,
            TimeSegment::Points(p) => p[p.len() - 1],
        }
    }
}

/// Where a grid point comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridOrigin {
    IntervalSample,
    IntervalEndpoint,
    DiscretePoint,
}

impl GridOrigin {
    pub fn as_str(self) -> &'static str {
        match self {
            GridOrigin::IntervalSample => "interval",
            GridOrigin::IntervalEndpoint => "endpoint",
            GridOrigin::DiscretePoint => "discrete",
        }
    }

    pub fn is_interval(self) -> bool {
        !matches!(self, GridOrigin::DiscretePoint)
    }
}

impl FromStr for GridOrigin {
    type Err = TimeScaleError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "interval" => Ok(GridOrigin::IntervalSample),
            "endpoint" => Ok(GridOrigin::IntervalEndpoint),
            "discrete" => Ok(GridOrigin::DiscretePoint),
            other => Err(TimeScaleError::Parse(format!("unknown grid origin `{other}`"))),
        }
    }
}

/// One evaluation instant of a finite grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub t: f64,
    /// Gap to the next grid point; `None` on the final point.
    pub mu: Option<f64>,
    pub origin: GridOrigin,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingPolicy {
    pub h: f64,
}

impl Default for SamplingPolicy {
    fn default() -> Self {
        SamplingPolicy { h: 0.05 }
    }
}

/// A right-scattered instant together with its forward jump.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gap {
    pub from: f64,
    pub to: f64,
}

impl Gap {
    pub fn len(&self) -> f64 {
        self.to - self.from
    }
}

/// Canonical, nonempty, closed union of intervals and points.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeScale {
    segments: Vec<TimeSegment>,
    max_graininess: f64,
}

fn check_finite(v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(TimeScaleError::NonFinite(v))
    }
}

impl TimeScale {
    /// Brings an arbitrary collection of segments into canonical form.
    pub fn canonicalize(segments: &[TimeSegment]) -> Result<TimeScale> {
        if segments.is_empty() {
            return Err(TimeScaleError::EmptyInput);
        }
        let mut intervals: Vec<(f64, f64)> = Vec::new();
        let mut points: Vec<f64> = Vec::new();
        for seg in segments {
            match seg {
                TimeSegment::Interval { lo, hi } => {
                    let (lo, hi) = (check_finite(*lo)?, check_finite(*hi)?);
                    if lo > hi {
                        return Err(TimeScaleError::InvalidSegment(format!(
                            "interval [{lo}, {hi}] has lo > hi"
                        )));
                    }
                    if hi - lo <= MEMBERSHIP_TOL {
                        points.push(lo);
                    } else {
                        intervals.push((lo, hi));
                    }
                }
                TimeSegment::Points(ps) => {
                    if ps.is_empty() {
                        return Err(TimeScaleError::InvalidSegment("empty point set".into()));
                    }
                    for &p in ps {
                        points.push(check_finite(p)?);
                    }
                }
            }
        }

        intervals.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(intervals.len());
        for (lo, hi) in intervals {
            match merged.last_mut() {
                Some(last) if lo <= last.1 + MEMBERSHIP_TOL => last.1 = last.1.max(hi),
                _ => merged.push((lo, hi)),
            }
        }

        points.sort_by(|a, b| a.total_cmp(b));
        points.dedup_by(|b, a| (*b - *a).abs() <= MEMBERSHIP_TOL);
        points.retain(|&p| {
            let idx = merged.partition_point(|iv| iv.0 <= p + MEMBERSHIP_TOL);
            idx == 0 || p > merged[idx - 1].1 + MEMBERSHIP_TOL
        });

        let mut out = Vec::new();
        let mut run: Vec<f64> = Vec::new();
        let mut pi = points.into_iter().peekable();
        for (lo, hi) in merged {
            while let Some(&p) = pi.peek() {
                if p < lo {
                    run.push(p);
                    pi.next();
                } else {
                    break;
                }
            }
            if !run.is_empty() {
                out.push(TimeSegment::Points(std::mem::take(&mut run)));
            }
            out.push(TimeSegment::Interval { lo, hi });
        }
        run.extend(pi);
        if !run.is_empty() {
            out.push(TimeSegment::Points(run));
        }

        let mut max_graininess = 0.0_f64;
        let mut prev: Option<f64> = None;
        for seg in &out {
            if let Some(p) = prev {
                max_graininess = max_graininess.max(seg.first() - p);
            }
            if let TimeSegment::Points(ps) = seg {
                for w in ps.windows(2) {
                    max_graininess = max_graininess.max(w[1] - w[0]);
                }
            }
            prev = Some(seg.last());
        }

        Ok(TimeScale {
            segments: out,
            max_graininess,
        })
    }

    pub fn segments(&self) -> &[TimeSegment] {
        &self.segments
    }

    pub fn min_time(&self) -> f64 {
        self.segments[0].first()
    }

    pub fn max_time(&self) -> f64 {
        self.segments[self.segments.len() - 1].last()
    }

    /// Largest graininess over `[min_time, max_time)`.
    pub fn max_graininess(&self) -> f64 {
        self.max_graininess
    }

    pub fn span(&self) -> f64 {
        self.max_time() - self.min_time()
    }

    /// Index of the segment containing `t`, plus the point index for point segments.
    fn locate(&self, t: f64) -> Option<(usize, Option<usize>)> {
        if !t.is_finite() {
            return None;
        }
        let idx = self
            .segments
            .partition_point(|s| s.first() <= t + MEMBERSHIP_TOL);
        if idx == 0 {
            return None;
        }
        let i = idx - 1;
        match &self.segments[i] {
            TimeSegment::Interval { hi, .. } => {
                (t <= hi + MEMBERSHIP_TOL).then_some((i, None))
            }
            TimeSegment::Points(ps) => {
                let j = ps.partition_point(|&p| p <= t + MEMBERSHIP_TOL);
                (j > 0 && (t - ps[j - 1]).abs() <= MEMBERSHIP_TOL).then_some((i, Some(j - 1)))
            }
        }
    }

    pub fn contains(&self, t: f64) -> bool {
        self.locate(t).is_some()
    }

    /// Forward jump operator. The maximum maps to itself.
    pub fn sigma(&self, t: f64) -> Result<f64> {
        let (i, j) = self.locate(t).ok_or(TimeScaleError::NotInTimeScale(t))?;
        let next_segment = || {
            self.segments
                .get(i + 1)
                .map(TimeSegment::first)
                .unwrap_or(t)
        };
        Ok(match (&self.segments[i], j) {
            (TimeSegment::Interval { hi, .. }, _) => {
                if t < hi - MEMBERSHIP_TOL {
                    t
                } else {
                    next_segment()
                }
            }
            (TimeSegment::Points(ps), Some(j)) => match ps.get(j + 1) {
                Some(&p) => p,
                None => next_segment(),
            },
            (TimeSegment::Points(_), None) => unreachable!("point lookup always yields an index"),
        })
    }

    pub fn graininess(&self, t: f64) -> Result<f64> {
        Ok(self.sigma(t)? - t)
    }

    pub fn is_right_dense(&self, t: f64) -> Result<bool> {
        Ok(self.graininess(t)? == 0.0)
    }

    /// All right-scattered instants except the maximum, in ascending order.
    pub fn gaps(&self) -> Vec<Gap> {
        let mut out = Vec::new();
        let mut prev: Option<f64> = None;
        for seg in &self.segments {
            if let Some(p) = prev {
                out.push(Gap {
                    from: p,
                    to: seg.first(),
                });
            }
            if let TimeSegment::Points(ps) = seg {
                out.extend(ps.windows(2).map(|w| Gap {
                    from: w[0],
                    to: w[1],
                }));
            }
            prev = Some(seg.last());
        }
        out
    }

    /// Gaps strictly longer than `threshold` (time jumps of an intermittent signal).
    pub fn jumps(&self, threshold: f64) -> Vec<Gap> {
        self.gaps()
            .into_iter()
            .filter(|g| g.len() > threshold + MEMBERSHIP_TOL)
            .collect()
    }

    pub fn shortest_interval(&self) -> Option<f64> {
        self.segments
            .iter()
            .filter_map(|s| match s {
                TimeSegment::Interval { lo, hi } => Some(hi - lo),
                _ => None,
            })
            .reduce(f64::min)
    }

    /// Materializes the finite evaluation grid used by simulation and filtering.
    pub fn sample_grid(&self, policy: SamplingPolicy) -> Result<Vec<GridPoint>> {
        let h = policy.h;
        if !(h.is_finite() && h > 0.0) {
            return Err(TimeScaleError::BadStep(h));
        }
        if let Some(shortest) = self.shortest_interval() {
            if h > shortest + MEMBERSHIP_TOL {
                return Err(TimeScaleError::StepTooLarge { h, shortest });
            }
        }

        let mut ts: Vec<(f64, GridOrigin)> = Vec::new();
        for seg in &self.segments {
            match seg {
                TimeSegment::Interval { lo, hi } => {
                    let n = ((hi - lo) / h - MEMBERSHIP_TOL).ceil().max(1.0) as usize;
                    ts.push((*lo, GridOrigin::IntervalEndpoint));
                    for k in 1..n {
                        let t = lo + k as f64 * h;
                        if t < hi - MEMBERSHIP_TOL {
                            ts.push((t, GridOrigin::IntervalSample));
                        }
                    }
                    ts.push((*hi, GridOrigin::IntervalEndpoint));
                }
                TimeSegment::Points(ps) => {
                    ts.extend(ps.iter().map(|&p| (p, GridOrigin::DiscretePoint)));
                }
            }
        }

        let n = ts.len();
        Ok(ts
            .iter()
            .enumerate()
            .map(|(i, &(t, origin))| GridPoint {
                t,
                mu: (i + 1 < n).then(|| ts[i + 1].0 - t),
                origin,
            })
            .collect())
    }
}

/// Parameters for turning a validity series into a time scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtractParams {
    /// Valid runs with at least this many samples become intervals.
    pub min_continuous_run: usize,
}

impl Default for ExtractParams {
    fn default() -> Self {
        ExtractParams {
            min_continuous_run: 3,
        }
    }
}

/// Dense valid runs become intervals, sparse valid runs become points and
/// invalid runs become time jumps.
pub fn extract_from_measurements(
    samples: &[(f64, bool)],
    params: ExtractParams,
) -> Result<TimeScale> {
    for (i, w) in samples.windows(2).enumerate() {
        if !(w[1].0 > w[0].0) {
            return Err(TimeScaleError::NonMonotoneTimestamps(i + 1));
        }
    }
    if let Some(&(t, _)) = samples.iter().find(|s| !s.0.is_finite()) {
        return Err(TimeScaleError::NonFinite(t));
    }
    let min_run = params.min_continuous_run.max(1);
    let mut segments = Vec::new();
    for run in samples.split(|s| !s.1).filter(|r| !r.is_empty()) {
        if run.len() >= min_run && run.len() > 1 {
            segments.push(TimeSegment::interval(run[0].0, run[run.len() - 1].0));
        } else {
            segments.push(TimeSegment::Points(run.iter().map(|s| s.0).collect()));
        }
    }
    if segments.is_empty() {
        return Err(TimeScaleError::NoValidSamples);
    }
    TimeScale::canonicalize(&segments)
}

/// Named constructions from the scale-spec grammar.
#[derive(Debug, Clone, PartialEq)]
pub enum ScaleSpec {
    /// `c·ℤ ∩ [0, end]`.
    Uniform { c: f64, end: f64 },
    /// `{H_0, ..., H_n}` with `H_k = Σ_{i≤k} 1/i`.
    Harmonic { n: usize },
    /// `⋃_{k=0..=k_max} [k(a+b), k(a+b)+a]`.
    Pab { a: f64, b: f64, k: usize },
    /// `2ℤ ∩ [0, 8]` followed by `8 + H_n` up to `end`.
    HybridT3 { end: f64 },
    /// The experimentally derived OWC time scale over `[1, 300]`.
    Td,
    Explicit(Vec<TimeSegment>),
}

fn bad(name: &str, reason: impl Into<String>) -> TimeScaleError {
    TimeScaleError::BadParameter {
        name: name.to_string(),
        reason: reason.into(),
    }
}

fn harmonic_numbers(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(acc);
    for k in 1..=n {
        acc += 1.0 / k as f64;
        out.push(acc);
    }
    out
}

/// Switch instant of the hybrid scale.
pub const HYBRID_SWITCH: f64 = 8.0;

/// The twenty pieces of the experimentally derived OWC scale, with every
/// interval stored closed at both ends.
pub fn td_segments() -> Vec<TimeSegment> {
    use TimeSegment as S;
    vec![
        S::interval(1.0, 15.0),
        S::integer_run(15, 21),
        S::interval(21.0, 30.0),
        S::interval(32.0, 62.0),
        S::integer_run(62, 67),
        S::interval(67.0, 75.0),
        S::integer_run(75, 81),
        S::interval(81.0, 83.0),
        S::integer_run(83, 86),
        S::interval(86.0, 126.0),
        S::interval(128.0, 131.0),
        S::integer_run(135, 154),
        S::interval(154.0, 173.0),
        S::integer_run(173, 204),
        S::interval(204.0, 209.0),
        S::interval(212.0, 218.0),
        S::integer_run(224, 238),
        S::interval(238.0, 273.0),
        S::integer_run(273, 285),
        S::interval(285.0, 300.0),
    ]
}

impl ScaleSpec {
    pub fn build(&self) -> Result<TimeScale> {
        match self {
            ScaleSpec::Uniform { c, end } => {
                if !(*c > 0.0) || !c.is_finite() {
                    return Err(bad("uniform", "c must be positive"));
                }
                if !(*end >= 0.0) || !end.is_finite() {
                    return Err(bad("uniform", "end must be nonnegative"));
                }
                let count = (end / c + MEMBERSHIP_TOL).floor() as usize;
                let pts = (0..=count).map(|k| k as f64 * c).collect();
                TimeScale::canonicalize(&[TimeSegment::Points(pts)])
            }
            ScaleSpec::Harmonic { n } => {
                TimeScale::canonicalize(&[TimeSegment::Points(harmonic_numbers(*n))])
            }
            ScaleSpec::Pab { a, b, k } => {
                if !(*a > 0.0 && *b > 0.0) || !a.is_finite() || !b.is_finite() {
                    return Err(bad("pab", "a and b must be positive"));
                }
                let period = a + b;
                let segs: Vec<_> = (0..=*k)
                    .map(|i| {
                        let lo = i as f64 * period;
                        TimeSegment::interval(lo, lo + a)
                    })
                    .collect();
                TimeScale::canonicalize(&segs)
            }
            ScaleSpec::HybridT3 { end } => {
                if !(*end >= HYBRID_SWITCH) || !end.is_finite() {
                    return Err(bad("hybrid_t3", "end must be at least 8"));
                }
                let mut pts: Vec<f64> = (0..=4).map(|k| 2.0 * k as f64).collect();
                let mut acc = 0.0;
                for k in 1.. {
                    acc += 1.0 / k as f64;
                    let t = HYBRID_SWITCH + acc;
                    if t > end + MEMBERSHIP_TOL {
                        break;
                    }
                    pts.push(t);
                }
                TimeScale::canonicalize(&[TimeSegment::Points(pts)])
            }
            ScaleSpec::Td => TimeScale::canonicalize(&td_segments()),
            ScaleSpec::Explicit(segs) => TimeScale::canonicalize(segs),
        }
    }
}

/// Shorthand for [`ScaleSpec::build`].
pub fn build_named_timescale(spec: &ScaleSpec) -> Result<TimeScale> {
    spec.build()
}

impl fmt::Display for ScaleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScaleSpec::Uniform { c, end } => write!(f, "uniform(c={c}, end={end})"),
            ScaleSpec::Harmonic { n } => write!(f, "harmonic(n={n})"),
            ScaleSpec::Pab { a, b, k } => write!(f, "pab(a={a}, b={b}, k={k})"),
            ScaleSpec::HybridT3 { end } => write!(f, "hybrid_t3(end={end})"),
            ScaleSpec::Td => write!(f, "td"),
            ScaleSpec::Explicit(segs) => {
                write!(f, "explicit: [")?;
                for (i, s) in segs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    match s {
                        TimeSegment::Interval { lo, hi } => write!(f, "[{lo}, {hi}]")?,
                        TimeSegment::Points(ps) => {
                            write!(f, "{{")?;
                            for (j, p) in ps.iter().enumerate() {
                                if j > 0 {
                                    write!(f, ", ")?;
                                }
                                write!(f, "{p}")?;
                            }
                            write!(f, "}}")?;
                        }
                    }
                }
                write!(f, "]")
            }
        }
    }
}

fn parse_args(name: &str, body: &str) -> Result<Vec<(String, String)>> {
    body.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|kv| {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| TimeScaleError::Parse(format!("{name}: expected key=value, got `{kv}`")))?;
            Ok((k.trim().to_string(), v.trim().to_string()))
        })
        .collect()
}

fn take<T: FromStr>(name: &str, args: &[(String, String)], key: &str) -> Result<T> {
    let raw = args
        .iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| v)
        .ok_or_else(|| TimeScaleError::Parse(format!("{name}: missing `{key}`")))?;
    raw.parse()
        .map_err(|_| TimeScaleError::Parse(format!("{name}: cannot parse `{key}={raw}`")))
}

fn check_keys(name: &str, args: &[(String, String)], allowed: &[&str]) -> Result<()> {
    match args.iter().find(|(k, _)| !allowed.contains(&k.as_str())) {
        Some((k, _)) => Err(TimeScaleError::Parse(format!("{name}: unknown key `{k}`"))),
        None => Ok(()),
    }
}

fn parse_number(s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| TimeScaleError::Parse(format!("not a number: `{}`", s.trim())))
}

fn parse_explicit(body: &str) -> Result<Vec<TimeSegment>> {
    let body = body.trim();
    let inner = body
        .strip_prefix('[')
        .and_then(|b| b.strip_suffix(']'))
        .ok_or_else(|| TimeScaleError::Parse("explicit list must be wrapped in [...]".into()))?;
    let mut segs = Vec::new();
    let mut rest = inner.trim();
    while !rest.is_empty() {
        let (close, open) = match rest.as_bytes()[0] {
            b'[' => (']', '['),
            b'{' => ('}', '{'),
            _ => return Err(TimeScaleError::Parse(format!("unexpected input `{rest}`"))),
        };
        let end = rest
            .find(close)
            .ok_or_else(|| TimeScaleError::Parse(format!("unclosed `{open}`")))?;
        let item = &rest[1..end];
        if open == '[' {
            let (lo, hi) = item
                .split_once(',')
                .ok_or_else(|| TimeScaleError::Parse(format!("interval `[{item}]` needs two bounds")))?;
            segs.push(TimeSegment::interval(parse_number(lo)?, parse_number(hi)?));
        } else if let Some((a, b)) = item.split_once("..") {
            let (a, b) = (parse_number(a)?, parse_number(b)?);
            if a.fract() != 0.0 || b.fract() != 0.0 || b < a {
                return Err(TimeScaleError::Parse(format!("bad integer run `{{{item}}}`")));
            }
            segs.push(TimeSegment::integer_run(a as i64, b as i64));
        } else {
            let pts = item.split(',').map(parse_number).collect::<Result<Vec<_>>>()?;
            segs.push(TimeSegment::Points(pts));
        }
        rest = rest[end + 1..].trim_start();
        rest = rest.strip_prefix(',').unwrap_or(rest).trim_start();
    }
    Ok(segs)
}

impl FromStr for ScaleSpec {
    type Err = TimeScaleError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "td" {
            return Ok(ScaleSpec::Td);
        }
        if let Some(body) = s.strip_prefix("explicit:") {
            return Ok(ScaleSpec::Explicit(parse_explicit(body)?));
        }
        let (name, body) = s
            .split_once('(')
            .and_then(|(n, b)| Some((n.trim(), b.strip_suffix(')')?)))
            .ok_or_else(|| TimeScaleError::UnknownName(s.to_string()))?;
        let args = parse_args(name, body)?;
        match name {
            "uniform" => {
                check_keys(name, &args, &["c", "end"])?;
                Ok(ScaleSpec::Uniform {
                    c: take(name, &args, "c")?,
                    end: take(name, &args, "end")?,
                })
            }
            "harmonic" => {
                check_keys(name, &args, &["n"])?;
                Ok(ScaleSpec::Harmonic {
                    n: take(name, &args, "n")?,
                })
            }
            "pab" => {
                check_keys(name, &args, &["a", "b", "k"])?;
                Ok(ScaleSpec::Pab {
                    a: take(name, &args, "a")?,
                    b: take(name, &args, "b")?,
                    k: take(name, &args, "k")?,
                })
            }
            "hybrid_t3" => {
                check_keys(name, &args, &["end"])?;
                Ok(ScaleSpec::HybridT3 {
                    end: take(name, &args, "end")?,
                })
            }
            other => Err(TimeScaleError::UnknownName(other.to_string())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(lo: f64, hi: f64) -> TimeSegment {
        TimeSegment::interval(lo, hi)
    }

    #[test]
    fn abutting_intervals_merge() {
        let ts = TimeScale::canonicalize(&[iv(0.0, 2.0), iv(2.0, 5.0)]).unwrap();
        assert_eq!(ts.segments(), &[iv(0.0, 5.0)]);
    }

    #[test]
    fn point_inside_interval_is_absorbed() {
        let ts = TimeScale::canonicalize(&[TimeSegment::Points(vec![3.0]), iv(1.0, 4.0)]).unwrap();
        assert_eq!(ts.segments(), &[iv(1.0, 4.0)]);
        let ts = TimeScale::canonicalize(&[TimeSegment::Points(vec![4.0]), iv(1.0, 4.0)]).unwrap();
        assert_eq!(ts.segments(), &[iv(1.0, 4.0)]);
    }

    #[test]
    fn degenerate_interval_becomes_point() {
        let ts = TimeScale::canonicalize(&[iv(2.0, 2.0), iv(5.0, 6.0)]).unwrap();
        assert_eq!(
            ts.segments(),
            &[TimeSegment::Points(vec![2.0]), iv(5.0, 6.0)]
        );
        assert_eq!(ts.graininess(2.0).unwrap(), 3.0);
    }

    #[test]
    fn canonicalize_errors() {
        assert_eq!(
            TimeScale::canonicalize(&[]).unwrap_err(),
            TimeScaleError::EmptyInput
        );
        assert!(matches!(
            TimeScale::canonicalize(&[iv(0.0, f64::INFINITY)]).unwrap_err(),
            TimeScaleError::NonFinite(_)
        ));
        assert!(matches!(
            TimeScale::canonicalize(&[TimeSegment::Points(vec![1.0, f64::NAN])]).unwrap_err(),
            TimeScaleError::NonFinite(_)
        ));
        assert!(matches!(
            TimeScale::canonicalize(&[iv(3.0, 1.0)]).unwrap_err(),
            TimeScaleError::InvalidSegment(_)
        ));
    }

    #[test]
    fn sigma_examples() {
        let lattice = ScaleSpec::Uniform { c: 2.0, end: 20.0 }.build().unwrap();
        assert_eq!(lattice.sigma(4.0).unwrap(), 6.0);
        let unit = TimeScale::canonicalize(&[iv(0.0, 1.0)]).unwrap();
        assert_eq!(unit.sigma(0.5).unwrap(), 0.5);
        assert_eq!(unit.sigma(1.0).unwrap(), 1.0);
        assert_eq!(
            unit.sigma(1.5).unwrap_err(),
            TimeScaleError::NotInTimeScale(1.5)
        );
    }

    #[test]
    fn graininess_examples() {
        let h = ScaleSpec::Harmonic { n: 10 }.build().unwrap();
        assert!((h.graininess(1.0).unwrap() - 0.5).abs() < 1e-15);
        let p = ScaleSpec::Pab { a: 1.0, b: 2.0, k: 5 }.build().unwrap();
        for k in 0..5 {
            let base = 3.0 * k as f64;
            assert_eq!(p.graininess(base + 1.0).unwrap(), 2.0);
            assert_eq!(p.graininess(base + 0.5).unwrap(), 0.0);
            assert_eq!(p.graininess(base).unwrap(), 0.0);
        }
    }

    #[test]
    fn unit_interval_grid() {
        let ts = TimeScale::canonicalize(&[iv(0.0, 1.0)]).unwrap();
        let g = ts.sample_grid(SamplingPolicy { h: 0.5 }).unwrap();
        let got: Vec<_> = g.iter().map(|p| (p.t, p.mu)).collect();
        assert_eq!(got, vec![(0.0, Some(0.5)), (0.5, Some(0.5)), (1.0, None)]);
    }

    #[test]
    fn pab_grid_by_hand() {
        // P_{1,2} ∩ [0,4] = [0,1] ∪ [3,4]
        let ts = ScaleSpec::Pab { a: 1.0, b: 2.0, k: 1 }.build().unwrap();
        let g = ts.sample_grid(SamplingPolicy { h: 0.5 }).unwrap();
        let got: Vec<_> = g.iter().map(|p| (p.t, p.mu)).collect();
        assert_eq!(
            got,
            vec![
                (0.0, Some(0.5)),
                (0.5, Some(0.5)),
                (1.0, Some(2.0)),
                (3.0, Some(0.5)),
                (3.5, Some(0.5)),
                (4.0, None)
            ]
        );
    }

    #[test]
    fn partial_last_substep() {
        let ts = TimeScale::canonicalize(&[iv(0.0, 1.0)]).unwrap();
        let g = ts.sample_grid(SamplingPolicy { h: 0.3 }).unwrap();
        let t: Vec<_> = g.iter().map(|p| p.t).collect();
        assert_eq!(t.len(), 5);
        assert_eq!(*t.last().unwrap(), 1.0);
        assert!((g[3].mu.unwrap() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn lattice_grid_constant_mu() {
        let ts = ScaleSpec::Uniform { c: 2.0, end: 8.0 }.build().unwrap();
        for h in [0.01, 0.5, 3.0] {
            let g = ts.sample_grid(SamplingPolicy { h }).unwrap();
            assert_eq!(g.len(), 5);
            assert!(g[..4].iter().all(|p| p.mu == Some(2.0)));
        }
    }

    #[test]
    fn step_too_large_is_reported() {
        let ts = ScaleSpec::Pab { a: 1.0, b: 2.0, k: 2 }.build().unwrap();
        assert!(matches!(
            ts.sample_grid(SamplingPolicy { h: 1.5 }).unwrap_err(),
            TimeScaleError::StepTooLarge { .. }
        ));
        assert!(matches!(
            ts.sample_grid(SamplingPolicy { h: 0.0 }).unwrap_err(),
            TimeScaleError::BadStep(_)
        ));
    }

    #[test]
    fn named_scales() {
        let h = ScaleSpec::Harmonic { n: 3 }.build().unwrap();
        let TimeSegment::Points(ps) = &h.segments()[0] else {
            panic!("harmonic scale must be discrete")
        };
        assert_eq!(ps.len(), 4);
        assert_eq!(&ps[..3], &[0.0, 1.0, 1.5]);
        assert!((ps[3] - 11.0 / 6.0).abs() < 1e-15);

        let p = ScaleSpec::Pab { a: 1.0, b: 2.0, k: 2 }.build().unwrap();
        assert_eq!(p.segments(), &[iv(0.0, 1.0), iv(3.0, 4.0), iv(6.0, 7.0)]);

        let t3 = ScaleSpec::HybridT3 { end: 10.0 }.build().unwrap();
        assert_eq!(t3.graininess(6.0).unwrap(), 2.0);
        assert_eq!(t3.graininess(8.0).unwrap(), 1.0);
        assert!((t3.graininess(9.0).unwrap() - 0.5).abs() < 1e-15);

        assert!(matches!(
            ScaleSpec::Pab { a: 0.0, b: 2.0, k: 2 }.build().unwrap_err(),
            TimeScaleError::BadParameter { .. }
        ));
        assert!(matches!(
            ScaleSpec::Uniform { c: -1.0, end: 2.0 }.build().unwrap_err(),
            TimeScaleError::BadParameter { .. }
        ));
    }

    #[test]
    fn td_structure() {
        let td = ScaleSpec::Td.build().unwrap();
        assert_eq!(td.min_time(), 1.0);
        assert_eq!(td.max_time(), 300.0);
        assert_eq!(td.max_graininess(), 6.0);
        assert_eq!(td.graininess(30.0).unwrap(), 2.0);
        assert_eq!(td.sigma(30.0).unwrap(), 32.0);
        assert_eq!(td.graininess(218.0).unwrap(), 6.0);
        assert!(!td.contains(127.0));
        assert!(td.contains(128.0));
        let jumps: Vec<_> = td.jumps(1.0).iter().map(|g| (g.from, g.to)).collect();
        assert_eq!(
            jumps,
            vec![(30.0, 32.0), (126.0, 128.0), (131.0, 135.0), (209.0, 212.0), (218.0, 224.0)]
        );
    }

    #[test]
    fn extraction_examples() {
        let all: Vec<_> = (0..=10).map(|t| (t as f64, true)).collect();
        let ts = extract_from_measurements(&all, ExtractParams::default()).unwrap();
        assert_eq!(ts.segments(), &[iv(0.0, 10.0)]);

        let mixed: Vec<_> = (0..=12).map(|t| (t as f64, !(6..=7).contains(&t))).collect();
        let ts = extract_from_measurements(&mixed, ExtractParams::default()).unwrap();
        assert_eq!(ts.segments(), &[iv(0.0, 5.0), iv(8.0, 12.0)]);
        assert_eq!(ts.graininess(5.0).unwrap(), 3.0);

        let sparse = [(0.0, true), (1.0, false), (2.0, true), (3.0, true), (4.0, false)];
        let ts = extract_from_measurements(&sparse, ExtractParams::default()).unwrap();
        assert_eq!(ts.segments(), &[TimeSegment::Points(vec![0.0, 2.0, 3.0])]);
    }

    #[test]
    fn extraction_errors() {
        let none = [(0.0, false), (1.0, false)];
        assert_eq!(
            extract_from_measurements(&none, ExtractParams::default()).unwrap_err(),
            TimeScaleError::NoValidSamples
        );
        let back = [(0.0, true), (2.0, true), (1.0, true)];
        assert_eq!(
            extract_from_measurements(&back, ExtractParams::default()).unwrap_err(),
            TimeScaleError::NonMonotoneTimestamps(2)
        );
    }

    #[test]
    fn spec_strings_round_trip() {
        for s in [
            "uniform(c=2, end=40)",
            "harmonic(n=200)",
            "pab(a=1, b=2, k=10)",
            "hybrid_t3(end=20)",
            "td",
            "explicit: [[1, 15], {16, 17, 18}, [20.5, 21]]",
        ] {
            let spec: ScaleSpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
            assert_eq!(spec.to_string().parse::<ScaleSpec>().unwrap(), spec);
        }
        let spec: ScaleSpec = "explicit: [[1,15], {15..21}, [21,30]]".parse().unwrap();
        assert_eq!(
            spec.build().unwrap().segments(),
            &[iv(1.0, 15.0), TimeSegment::integer_run(16, 20), iv(21.0, 30.0)]
        );
        assert!(matches!(
            "fibonacci(n=3)".parse::<ScaleSpec>().unwrap_err(),
            TimeScaleError::UnknownName(_)
        ));
        assert!("harmonic(m=3)".parse::<ScaleSpec>().is_err());
    }
}
