//! Subcommands: argument definitions and their execution.

use std::fmt::Display;
use std::str::FromStr;

use clap::{Args, Subcommand, ValueEnum};
use phi_core::asymptotics::{
    ellipsoid_rho, imap, level_set_search, map_estimate, ratio_error_slope, verify_theorem10, verify_theorem8,
    AsymptoticRow, LevelObjective, PointEstimate,
};
use phi_core::loss::{verify_offline_additivity, verify_theorem5, verify_theorem6, LossContext, LossSpec, Method, Mode, Which};
use phi_core::models::exact::{self, ExactDistance};
use phi_core::models::{Bernoulli, CountSummary, Hypothesis, Prior, Sample, ThetaDistribution};
use phi_core::scalar::Field;
use phi_core::selector::{map_select, map_select_by_mass, ml_select, phi_select, ArgmaxReport, HypothesisClass};
use phi_core::smf::{smf_select, verify_theorem12, ScaledClass, SmfTolerances, Survivors};
use phi_core::{Distance, Rational};
use serde_json::{json, Map, Value};

use crate::input::{self, ParseError};
use crate::report::{fmt_float, fmt_opt, number, Report};

/// Largest `n + m` accepted by `loss --exact`.
pub const EXACT_LIMIT: u64 = 40;

/// Why a command did not produce a report.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Failure {
    /// Malformed or unsupported arguments (exit code 2).
    Usage(String),
    /// A numeric or evaluation failure (exit code 3).
    Eval(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Usage(_) => 2,
            Self::Eval(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Self::Usage(m) | Self::Eval(m) => m,
        }
    }
}

impl From<ParseError> for Failure {
    fn from(e: ParseError) -> Self {
        Self::Usage(e.0)
    }
}

fn eval(e: impl Display) -> Failure {
    Failure::Eval(e.to_string())
}

/// A rendered result and whether every check it reports passed.
pub struct Outcome {
    pub report: Report,
    pub passed: bool,
}

impl From<Report> for Outcome {
    fn from(report: Report) -> Self {
        Self { report, passed: true }
    }
}

fn parse_with<T: FromStr>(s: &str) -> Result<T, String>
where
    T::Err: Display,
{
    s.parse::<T>().map_err(|e| e.to_string())
}

fn parse_class(s: &str) -> Result<HypothesisClass, String> {
    input::parse_class(s).map_err(|e| e.0)
}

// ---------------------------------------------------------------------------
// Shared arguments
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Observations as a 0/1 string, or counts such as `n1=2,n0=2`.
    #[arg(long)]
    pub data: Option<String>,
    /// Counts `n1=..,n0=..`; must agree with `--data` when both are given.
    #[arg(long)]
    pub counts: Option<String>,
    /// `uniform`, `jeffreys` or `beta:a,b`.
    #[arg(long, default_value = "uniform", value_parser = parse_with::<Prior>)]
    pub prior: Prior,
    #[arg(long, default_value = "bernoulli", value_parser = ["bernoulli"])]
    pub model: String,
}

impl DataArgs {
    fn given(&self) -> bool {
        self.data.is_some() || self.counts.is_some()
    }

    fn resolve(&self) -> Result<CountSummary, Failure> {
        Ok(input::resolve_data(self.data.as_deref(), self.counts.as_deref())?)
    }

    /// The given data, or `fallback` when neither flag is present.
    fn resolve_or(&self, fallback: CountSummary) -> Result<CountSummary, Failure> {
        if self.given() {
            self.resolve()
        } else {
            Ok(fallback)
        }
    }

    fn context(&self, data: CountSummary) -> Map<String, Value> {
        let mut m = Map::new();
        m.insert("model".into(), json!(self.model));
        m.insert("prior".into(), json!(self.prior.to_string()));
        m.insert("data".into(), json!({"n1": data.ones, "n0": data.zeros}));
        m
    }
}

#[derive(Debug, Clone, Args)]
pub struct LossArgs {
    /// `abs`, `hellinger`, `chi2`, `kl`, `rkl`, `sq` or `alpha:<value>`.
    #[arg(long = "d", visible_alias = "distance", default_value = "abs", value_parser = parse_with::<Distance>)]
    pub d: Distance,
    /// Number of future observations.
    #[arg(long, default_value_t = 1)]
    pub m: u64,
    /// `hat` or `tilde`.
    #[arg(long, default_value = "hat", value_parser = parse_with::<Which>)]
    pub which: Which,
    /// `batch` or `offline`.
    #[arg(long, default_value = "batch", value_parser = parse_with::<Mode>)]
    pub mode: Mode,
    /// `auto`, `brute_force`, `sufficient_stat` or `hellinger_closed_form`.
    #[arg(long, default_value = "auto", value_parser = parse_with::<Method>)]
    pub method: Method,
}

impl LossArgs {
    fn spec(&self) -> Result<LossSpec, Failure> {
        let spec = LossSpec::new(self.which, self.m, self.d)
            .with_mode(self.mode)
            .with_method(self.method);
        spec.validate().map_err(|e| Failure::Usage(e.to_string()))?;
        Ok(spec)
    }

    fn describe(&self, m: &mut Map<String, Value>) {
        m.insert("distance".into(), json!(self.d.name()));
        m.insert("m".into(), json!(self.m));
        m.insert("which".into(), json!(self.which.to_string()));
        m.insert("mode".into(), json!(self.mode.to_string()));
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the loss of one or more hypotheses.
    Loss(LossCmd),
    /// Select the best member of a hypothesis class.
    Select(SelectCmd),
    /// Point, interval and moment-fitting estimates.
    Estimate(EstimateCmd),
    /// Run a numeric verification suite; exits 3 when a check fails.
    Verify(VerifyCmd),
    /// Reproduce the reference tables.
    PaperTables(TablesCmd),
}

pub fn run(command: &Command) -> Result<Outcome, Failure> {
    match command {
        Command::Loss(c) => c.run().map(Outcome::from),
        Command::Select(c) => c.run().map(Outcome::from),
        Command::Estimate(c) => c.run().map(Outcome::from),
        Command::Verify(c) => c.run(),
        Command::PaperTables(c) => c.run().map(Outcome::from),
    }
}

// ---------------------------------------------------------------------------
// loss
// ---------------------------------------------------------------------------

#[derive(Debug, Args)]
pub struct LossCmd {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub loss: LossArgs,
    /// Hypothesis such as `point:0.5`, `interval:0.2,0.6` or
    /// `mixture:0.3@0.2,0.7@0.8`; repeatable.
    #[arg(long = "hyp", required = true)]
    pub hyp: Vec<String>,
    /// Exact rational hat loss (uniform prior, batch mode, abs, sq or chi2,
    /// a point or a single interval, `n + m <= 40`).
    #[arg(long)]
    pub exact: bool,
}

impl LossCmd {
    fn run(&self) -> Result<Report, Failure> {
        let data = self.data.resolve()?;
        if self.exact {
            return self.run_exact(data);
        }
        let spec = self.loss.spec()?;
        let hyps = self
            .hyp
            .iter()
            .map(|s| input::parse_hypothesis(s))
            .collect::<Result<Vec<_>, _>>()?;
        let sample: Sample = data.into();
        let ctx = LossContext::new(&Bernoulli, &self.data.prior, &sample).map_err(eval)?;
        let mut results = Vec::new();
        let mut report_rows = Vec::new();
        for h in &hyps {
            let e = ctx.evaluate(h, &spec).map_err(|e| Failure::Eval(format!("{h}: {e}")))?;
            results.push(json!({
                "hypothesis": h.to_string(),
                "loss": number(e.value),
                "method": e.method.to_string(),
                "error_bound": e.error_bound.map_or(Value::Null, number),
            }));
            report_rows.push(vec![h.to_string(), fmt_float(e.value), e.method.to_string(), fmt_opt(e.error_bound)]);
        }
        let mut m = self.data.context(data);
        self.loss.describe(&mut m);
        m.insert("results".into(), Value::Array(results));
        let mut report = Report::new(Value::Object(m), &["hypothesis", "loss", "method", "error_bound"]);
        report_rows.into_iter().for_each(|r| report.row(r));
        Ok(report)
    }

    fn run_exact(&self, data: CountSummary) -> Result<Report, Failure> {
        let usage = |m: &str| Err(Failure::Usage(format!("--exact {m}")));
        if self.data.prior != Prior::Uniform {
            return usage("requires the uniform prior");
        }
        if self.loss.which != Which::Hat || self.loss.mode != Mode::Batch {
            return usage("evaluates the batch hat loss only");
        }
        let Some(dist) = ExactDistance::from_name(&self.loss.d.name()) else {
            return usage("supports the abs, sq and chi2 distances");
        };
        if self.loss.m < 1 {
            return usage("needs m >= 1");
        }
        if data.total() + self.loss.m > EXACT_LIMIT {
            return usage(&format!("supports n + m <= {EXACT_LIMIT}"));
        }
        let mut results = Vec::new();
        let mut rows = Vec::new();
        for s in &self.hyp {
            let h = input::parse_exact_hypothesis(s)?;
            let v: Rational = exact::hat_loss(&h, data, self.loss.m, dist);
            results.push(json!({
                "hypothesis": h.to_string(),
                "loss": v.to_string(),
                "value": number(Field::to_f64(&v)),
                "method": "exact",
            }));
            rows.push(vec![h.to_string(), v.to_string(), "exact".into()]);
        }
        let mut m = self.data.context(data);
        self.loss.describe(&mut m);
        m.insert("results".into(), Value::Array(results));
        let mut report = Report::new(Value::Object(m), &["hypothesis", "loss", "method"]);
        rows.into_iter().for_each(|r| report.row(r));
        Ok(report)
    }
}

// ---------------------------------------------------------------------------
// select
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Selector {
    /// Smallest predictive loss.
    Phi,
    /// Posterior density for points, posterior mass for interval unions.
    Map,
    /// Posterior mass for every member.
    MapMass,
    /// Largest composite likelihood.
    Ml,
}

#[derive(Debug, Args)]
pub struct SelectCmd {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub loss: LossArgs,
    /// `a|b|c`, `points:N`, `intervals:CENTERS,WIDTHS,MIN_WIDTH` or
    /// `mixtures:L,N`.
    #[arg(long, value_parser = parse_class)]
    pub class: HypothesisClass,
    #[arg(long, value_enum, default_value_t = Selector::Phi)]
    pub by: Selector,
}

fn selection_mark(h: &Hypothesis, winner: &Hypothesis, ties: &[Hypothesis]) -> String {
    if h == winner {
        "winner".into()
    } else if ties.contains(h) {
        "tie".into()
    } else {
        String::new()
    }
}

impl SelectCmd {
    fn run(&self) -> Result<Report, Failure> {
        let data = self.data.resolve()?;
        let sample: Sample = data.into();
        let prior = &self.data.prior;
        let mut m = self.data.context(data);
        m.insert("class".into(), json!(self.class.to_string()));
        if self.by == Selector::Phi {
            let spec = self.loss.spec()?;
            let r = phi_select(&Bernoulli, prior, &sample, &self.class, &spec).map_err(eval)?;
            self.loss.describe(&mut m);
            m.insert("by".into(), json!("phi"));
            m.insert("winner".into(), json!(r.winner.to_string()));
            m.insert("winner_loss".into(), number(r.winner_loss));
            m.insert("method".into(), json!(r.method.to_string()));
            m.insert(
                "losses".into(),
                r.losses
                    .iter()
                    .map(|(h, v)| json!({"hypothesis": h.to_string(), "loss": number(*v)}))
                    .collect(),
            );
            m.insert("ties".into(), r.ties.iter().map(|h| json!(h.to_string())).collect());
            let mut report = Report::new(Value::Object(m), &["hypothesis", "loss", "selected"]);
            for (h, v) in &r.losses {
                report.row(vec![h.to_string(), fmt_float(*v), selection_mark(h, &r.winner, &r.ties)]);
            }
            report.note(format!("winner: {}", r.winner));
            return Ok(report);
        }
        let (name, r): (&str, Result<ArgmaxReport, _>) = match self.by {
            Selector::Map => ("map", map_select(&Bernoulli, prior, &sample, &self.class)),
            Selector::MapMass => ("map-mass", map_select_by_mass(&Bernoulli, prior, &sample, &self.class)),
            _ => ("ml", ml_select(&Bernoulli, prior, &sample, &self.class)),
        };
        let r = r.map_err(eval)?;
        m.insert("by".into(), json!(name));
        m.insert("winner".into(), json!(r.winner.to_string()));
        m.insert(
            "scores".into(),
            r.scores
                .iter()
                .map(|(h, v)| json!({"hypothesis": h.to_string(), "ln_score": number(*v)}))
                .collect(),
        );
        m.insert("ties".into(), r.ties.iter().map(|h| json!(h.to_string())).collect());
        let mut report = Report::new(Value::Object(m), &["hypothesis", "ln_score", "selected"]);
        for (h, v) in &r.scores {
            report.row(vec![h.to_string(), fmt_float(*v), selection_mark(h, &r.winner, &r.ties)]);
        }
        report.note(format!("winner: {}", r.winner));
        Ok(report)
    }
}

// ---------------------------------------------------------------------------
// estimate
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Estimator {
    /// `argmax p(θ|D)/√I(θ)`.
    Imap,
    /// `n1/n`.
    Ml,
    /// The posterior mode.
    Map,
    /// The posterior mean.
    Laplace,
    /// The best likelihood level set.
    Levelset,
    /// Sequential moment fitting.
    Smf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Objective {
    Mlmap,
    Hellinger,
}

#[derive(Debug, Args)]
pub struct EstimateCmd {
    #[arg(value_enum)]
    pub estimator: Estimator,
    #[command(flatten)]
    pub data: DataArgs,
    /// Number of levels swept by `levelset`.
    #[arg(long, default_value_t = 200)]
    pub resolution: usize,
    /// Objective maximized by `levelset`.
    #[arg(long, value_enum, default_value_t = Objective::Mlmap)]
    pub objective: Objective,
    /// Class fitted by `smf`; `all-intervals` or any `select` class.
    #[arg(long, default_value = "all-intervals", value_parser = parse_class)]
    pub class: HypothesisClass,
    /// Highest moment order fitted by `smf`.
    #[arg(long = "k-max", default_value_t = 6)]
    pub k_max: usize,
}

fn point_report(mut m: Map<String, Value>, name: &str, theta: f64, extra: Option<PointEstimate>) -> Report {
    m.insert("estimator".into(), json!(name));
    m.insert("estimate".into(), number(theta));
    let mut rows = vec![vec!["estimate".to_string(), fmt_float(theta)]];
    if let Some(p) = extra {
        m.insert("ln_objective".into(), number(p.ln_objective));
        m.insert("at_boundary".into(), json!(p.at_boundary));
        rows.push(vec!["ln_objective".into(), fmt_float(p.ln_objective)]);
        rows.push(vec!["at_boundary".into(), p.at_boundary.to_string()]);
    }
    let mut report = Report::new(Value::Object(m), &["quantity", "value"]);
    rows.into_iter().for_each(|r| report.row(r));
    report
}

fn pieces_json(h: &Hypothesis) -> Value {
    match h {
        Hypothesis::IntervalUnion(p) => p.iter().map(|&(a, b)| json!([number(a), number(b)])).collect(),
        _ => Value::Array(Vec::new()),
    }
}

impl EstimateCmd {
    fn run(&self) -> Result<Report, Failure> {
        let data = self.data.resolve()?;
        let sample: Sample = data.into();
        let prior = &self.data.prior;
        let mut m = self.data.context(data);
        match self.estimator {
            Estimator::Imap => {
                let p = imap(&Bernoulli, prior, &sample).map_err(eval)?;
                Ok(point_report(m, "imap", p.theta, Some(p)))
            }
            Estimator::Map => {
                let p = map_estimate(&Bernoulli, prior, &sample).map_err(eval)?;
                Ok(point_report(m, "map", p.theta, Some(p)))
            }
            Estimator::Ml => {
                let t = data
                    .ml_estimate()
                    .ok_or_else(|| Failure::Eval("the ML estimate needs at least one observation".into()))?;
                Ok(point_report(m, "ml", t, None))
            }
            Estimator::Laplace => {
                let t = ThetaDistribution::posterior(&Bernoulli, prior, &sample)
                    .and_then(|p| p.mean())
                    .map_err(eval)?;
                Ok(point_report(m, "laplace", t, None))
            }
            Estimator::Levelset => {
                let kind = match self.objective {
                    Objective::Mlmap => LevelObjective::MlMap,
                    Objective::Hellinger => LevelObjective::HellingerAsymptotic,
                };
                let r = level_set_search(&Bernoulli, prior, &sample, self.resolution, kind).map_err(eval)?;
                let objective = match self.objective {
                    Objective::Mlmap => "mlmap",
                    Objective::Hellinger => "hellinger",
                };
                m.insert("estimator".into(), json!("levelset"));
                m.insert("objective_kind".into(), json!(objective));
                m.insert("set".into(), json!(r.set.to_string()));
                m.insert("pieces".into(), pieces_json(&r.set));
                m.insert("objective".into(), number(r.objective));
                m.insert("ln_objective".into(), number(r.ln_objective));
                m.insert("ln_gamma".into(), number(r.ln_gamma));
                m.insert("plateau".into(), json!(r.plateau));
                let mut report = Report::new(Value::Object(m), &["quantity", "value"]);
                if let Hypothesis::IntervalUnion(p) = &r.set {
                    for (i, &(a, b)) in p.iter().enumerate() {
                        report.row(vec![format!("piece {}", i + 1), format!("[{}, {}]", fmt_float(a), fmt_float(b))]);
                    }
                }
                report.row(vec!["set".into(), r.set.to_string()]);
                report.row(vec!["objective".into(), fmt_float(r.objective)]);
                report.row(vec!["ln_gamma".into(), fmt_float(r.ln_gamma)]);
                report.row(vec!["plateau".into(), r.plateau.to_string()]);
                Ok(report)
            }
            Estimator::Smf => self.run_smf(m, &sample),
        }
    }

    fn run_smf(&self, mut m: Map<String, Value>, sample: &Sample) -> Result<Report, Failure> {
        let trace = smf_select(
            &Bernoulli,
            &self.data.prior,
            sample,
            &self.class,
            self.k_max,
            SmfTolerances::default(),
        )
        .map_err(eval)?;
        let mut levels = Vec::new();
        let mut report_rows = Vec::new();
        for l in &trace.levels {
            let (survivors, shown) = match &l.survivors {
                Survivors::Members(ms) => (
                    ms.iter()
                        .map(|(h, v)| json!({"hypothesis": h.to_string(), "moment": number(*v)}))
                        .collect(),
                    format!("{} members", ms.len()),
                ),
                Survivors::CenteredIntervals { center, max_half_width } => (
                    json!({"center": number(*center), "max_half_width": number(*max_half_width)}),
                    format!("intervals centred at {}", fmt_float(*center)),
                ),
            };
            levels.push(json!({
                "k": l.k,
                "target": number(l.target),
                "residual": number(l.residual),
                "survivors": survivors,
            }));
            report_rows.push(vec![l.k.to_string(), fmt_float(l.target), fmt_float(l.residual), shown]);
        }
        let selected: Vec<String> = trace.selected.iter().map(|h| h.to_string()).collect();
        m.insert("estimator".into(), json!("smf"));
        m.insert("class".into(), json!(self.class.to_string()));
        m.insert("levels".into(), Value::Array(levels));
        m.insert("k_star".into(), trace.k_star.map_or(Value::Null, |k| json!(k)));
        m.insert("k_max".into(), json!(trace.k_max));
        m.insert("winner".into(), trace.winner().map_or(Value::Null, |h| json!(h.to_string())));
        m.insert("selected".into(), json!(selected));
        let mut report = Report::new(Value::Object(m), &["k", "target", "residual", "survivors"]);
        report_rows.into_iter().for_each(|r| report.row(r));
        report.note(format!(
            "k* = {}",
            trace.k_star.map_or_else(|| format!("none (all orders up to {} fitted)", trace.k_max), |k| k.to_string())
        ));
        report.note(format!("selected: {}", selected.join(" | ")));
        Ok(report)
    }
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Check {
    /// Sufficient-statistic losses equal brute-force enumeration.
    Thm5,
    /// `Loss - L̃oss` is constant across hypotheses for sq and rkl.
    Thm6,
    /// Large-`m` expansion of the point Hellinger loss.
    Thm8,
    /// Large-`m` expansion of the composite Hellinger loss.
    Thm10,
    /// Offline tilde loss equals `m` times the one-step loss.
    Prop13,
    /// Decay of the moment-fitting winner's loss with `n`.
    Thm12,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScaledKind {
    /// All intervals.
    Intervals,
    /// All points.
    Points,
}

#[derive(Debug, Args)]
pub struct VerifyCmd {
    #[arg(value_enum)]
    pub check: Check,
    #[command(flatten)]
    pub data: DataArgs,
    /// Restrict to one distance (thm5, prop13) or choose it (thm6, thm12).
    #[arg(long = "d", visible_alias = "distance", value_parser = parse_with::<Distance>)]
    pub d: Option<Distance>,
    /// Horizon: largest `m` (thm5), `m` (thm6, prop13, thm12).
    #[arg(long)]
    pub m: Option<u64>,
    /// Point of the expansion (thm8).
    #[arg(long)]
    pub theta: Option<f64>,
    /// Interval union of the expansion (thm10).
    #[arg(long = "hyp")]
    pub hyp: Option<String>,
    /// Class of the decay check (thm12).
    #[arg(long, value_enum, default_value_t = ScaledKind::Intervals)]
    pub class: ScaledKind,
    /// Seed of the synthetic data (thm12).
    #[arg(long, default_value_t = 12)]
    pub seed: u64,
}

/// One line of a verification report.
struct CheckRow {
    name: String,
    measured: Value,
    shown: String,
    requirement: String,
    passed: Option<bool>,
}

impl CheckRow {
    fn new(name: impl Into<String>, value: f64, requirement: impl Into<String>, passed: Option<bool>) -> Self {
        Self {
            name: name.into(),
            measured: number(value),
            shown: fmt_float(value),
            requirement: requirement.into(),
            passed,
        }
    }

    fn flag(name: impl Into<String>, value: bool, passed: bool) -> Self {
        Self {
            name: name.into(),
            measured: json!(value),
            shown: value.to_string(),
            requirement: "true".into(),
            passed: Some(passed),
        }
    }
}

fn verdict(p: Option<bool>) -> &'static str {
    match p {
        Some(true) => "PASS",
        Some(false) => "FAIL",
        None => "",
    }
}

fn verify_report(mut m: Map<String, Value>, check: &str, rows: Vec<CheckRow>, passed: bool) -> Outcome {
    m.insert("check".into(), json!(check));
    m.insert("passed".into(), json!(passed));
    m.insert(
        "rows".into(),
        rows.iter()
            .map(|r| {
                json!({
                    "name": r.name,
                    "measured": r.measured,
                    "requirement": r.requirement,
                    "passed": r.passed,
                })
            })
            .collect(),
    );
    let mut report = Report::new(Value::Object(m), &["check", "measured", "requirement", "verdict"]);
    for r in &rows {
        report.row(vec![r.name.clone(), r.shown.clone(), r.requirement.clone(), verdict(r.passed).into()]);
    }
    report.note(format!("{check}: {}", if passed { "PASS" } else { "FAIL" }));
    Outcome { report, passed }
}

/// A fixed spread of points, intervals, unions and mixtures.
fn probe_hypotheses(count: usize) -> Result<Vec<Hypothesis>, Failure> {
    (0..count)
        .map(|i| {
            let s = (i / 4) as f64 / (count.div_ceil(4)) as f64;
            match i % 4 {
                0 => Hypothesis::point(0.05 + 0.9 * s),
                1 => Hypothesis::interval(0.6 * s, 0.6 * s + 0.3),
                2 => Hypothesis::interval_union(vec![(0.5 * s, 0.5 * s + 0.1), (0.7, 0.75 + 0.2 * s)]),
                _ => Hypothesis::mixture(vec![(0.3, 0.1 + 0.5 * s), (0.7, 0.9 - 0.3 * s)]),
            }
            .map_err(eval)
        })
        .collect()
}

fn asymptotic_rows(rows: &[AsymptoticRow]) -> Vec<CheckRow> {
    rows.iter()
        .map(|r| CheckRow::new(format!("ratio at m={}", r.m), r.ratio, "", None))
        .collect()
}

impl VerifyCmd {
    fn distances(&self) -> Vec<Distance> {
        self.d.map_or_else(|| Distance::catalog(0.5).to_vec(), |d| vec![d])
    }

    fn run(&self) -> Result<Outcome, Failure> {
        let prior = &self.data.prior;
        let name = self.check.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default();
        match self.check {
            Check::Thm5 => {
                let data = self.data.resolve_or(CountSummary::new(3, 2))?;
                let max_m = self.m.unwrap_or(8);
                let ms: Vec<u64> = (1..=max_m).collect();
                let r = verify_theorem5(&Bernoulli, prior, &data.into(), &probe_hypotheses(8)?, &self.distances(), &ms)
                    .map_err(eval)?;
                let mut m = self.data.context(data);
                m.insert("cases".into(), json!(r.cases));
                let rows = vec![CheckRow::new(
                    format!("sufficient statistic vs enumeration ({} cases)", r.cases),
                    r.max_deviation,
                    format!("<= {}", fmt_float(r.tolerance)),
                    Some(r.passed),
                )];
                Ok(verify_report(m, &name, rows, r.passed))
            }
            Check::Thm6 => {
                let data = self.data.resolve_or(CountSummary::new(4, 7))?;
                let d = self.d.unwrap_or(Distance::Squared);
                let horizon = self.m.unwrap_or(5);
                let r = verify_theorem6(&Bernoulli, prior, &data.into(), &probe_hypotheses(20)?, d, horizon)
                    .map_err(eval)?;
                let mut m = self.data.context(data);
                m.insert("distance".into(), json!(d.name()));
                m.insert("m".into(), json!(horizon));
                let sd_ok = r.std_dev < 1e-8;
                let rows = vec![
                    CheckRow::new("std dev of hat - tilde", r.std_dev, "< 1e-8", Some(sd_ok)),
                    CheckRow::flag("argmin agreement", r.argmin_agreement, r.argmin_agreement),
                ];
                Ok(verify_report(m, &name, rows, r.passed))
            }
            Check::Thm8 => {
                let data = self.data.resolve_or(CountSummary::new(5, 5))?;
                let theta = self.theta.unwrap_or(0.5);
                let ms = [100, 1_000, 10_000, 1_000_000];
                let r = verify_theorem8(&Bernoulli, prior, &data.into(), theta, &ms).map_err(eval)?;
                let at = r.iter().find(|x| x.m == 10_000).map_or(f64::NAN, |x| x.ratio);
                let slope = ratio_error_slope(&r).unwrap_or(f64::NAN);
                let at_ok = (at - 1.0).abs() <= 0.05;
                let slope_ok = (-0.7..=-0.3).contains(&slope);
                let mut rows = asymptotic_rows(&r);
                rows.push(CheckRow::new("|ratio - 1| at m=10000", (at - 1.0).abs(), "<= 0.05", Some(at_ok)));
                rows.push(CheckRow::new("log-log slope of |ratio - 1|", slope, "in [-0.7, -0.3]", Some(slope_ok)));
                let mut m = self.data.context(data);
                m.insert("theta".into(), number(theta));
                Ok(verify_report(m, &name, rows, at_ok && slope_ok))
            }
            Check::Thm10 => {
                let data = self.data.resolve_or(CountSummary::new(10, 10))?;
                let h = input::parse_hypothesis(self.hyp.as_deref().unwrap_or("interval:0.4,0.6"))?;
                let Hypothesis::IntervalUnion(pieces) = &h else {
                    return Err(Failure::Usage(format!("thm10 needs an interval union, got '{h}'")));
                };
                let r = verify_theorem10(&Bernoulli, prior, &data.into(), pieces, &[100, 10_000, 1_000_000])
                    .map_err(eval)?;
                let last = r.last().map_or(f64::NAN, |x| x.ratio);
                let ok = (last - 1.0).abs() <= 0.10;
                let mut rows = asymptotic_rows(&r);
                rows.push(CheckRow::new("|ratio - 1| at m=1000000", (last - 1.0).abs(), "<= 0.1", Some(ok)));
                let mut m = self.data.context(data);
                m.insert("hypothesis".into(), json!(h.to_string()));
                Ok(verify_report(m, &name, rows, ok))
            }
            Check::Prop13 => {
                let data = self.data.resolve_or(CountSummary::new(2, 3))?;
                let horizon = self.m.unwrap_or(3);
                let hs = vec![
                    Hypothesis::Simple(0.5),
                    Hypothesis::interval(0.2, 0.7).map_err(eval)?,
                    Hypothesis::uniform_mixture(&[0.3, 0.8]).map_err(eval)?,
                ];
                let r = verify_offline_additivity(&Bernoulli, prior, &data.into(), &hs, &self.distances(), &[horizon])
                    .map_err(eval)?;
                let mut m = self.data.context(data);
                m.insert("m".into(), json!(horizon));
                let rows = vec![CheckRow::new(
                    format!("max |offline - {horizon} x one-step| ({} cases)", r.cases),
                    r.max_deviation,
                    format!("<= {}", fmt_float(r.tolerance)),
                    Some(r.passed),
                )];
                Ok(verify_report(m, &name, rows, r.passed))
            }
            Check::Thm12 => {
                let d = self.d.unwrap_or(Distance::Absolute);
                let horizon = self.m.unwrap_or(3);
                let theta = self.theta.unwrap_or(0.3);
                let class = match self.class {
                    ScaledKind::Intervals => ScaledClass::Intervals,
                    ScaledKind::Points => ScaledClass::AllPoints,
                };
                let r = verify_theorem12(&Bernoulli, prior, &class, d, horizon, &[100, 1_000, 10_000], theta, self.seed)
                    .map_err(eval)?;
                let mut rows: Vec<CheckRow> = r
                    .rows
                    .iter()
                    .map(|x| {
                        let k = x.k_star.map_or_else(|| "-".into(), |k| k.to_string());
                        CheckRow::new(format!("loss at n={} ({}, k*={k})", x.n, x.winner), x.loss, "", None)
                    })
                    .collect();
                let slope = r.slope.unwrap_or(f64::NAN);
                rows.push(CheckRow::new(
                    "log-log slope of the loss",
                    slope,
                    format!("<= {}", fmt_float(r.bound)),
                    Some(r.passed),
                ));
                let mut m = Map::new();
                m.insert("prior".into(), json!(prior.to_string()));
                m.insert("distance".into(), json!(d.name()));
                m.insert("m".into(), json!(horizon));
                m.insert("theta".into(), number(theta));
                m.insert("seed".into(), json!(self.seed));
                Ok(verify_report(m, &name, rows, r.passed))
            }
        }
    }
}

// ---------------------------------------------------------------------------
// paper-tables
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Table {
    /// Two-step predictive table of the fair point and the vague interval.
    #[value(name = "err-table", alias = "err_table")]
    Err,
    /// Radius of the optimal credible ellipsoid by dimension.
    #[value(name = "rho-table", alias = "rho_table")]
    Rho,
    /// Fair-versus-vague winner over sample size and horizon.
    #[value(name = "regime-table", alias = "regime_table")]
    Regime,
}

#[derive(Debug, Args)]
pub struct TablesCmd {
    #[arg(value_enum)]
    pub table: Table,
}

pub const RHO_DIMENSIONS: [u32; 7] = [1, 2, 3, 4, 5, 10, 100];
pub const REGIME_HALF_SIZES: [u64; 7] = [0, 1, 2, 4, 8, 16, 32];
pub const REGIME_HORIZONS: [u64; 8] = [1, 2, 3, 4, 6, 8, 12, 16];

impl TablesCmd {
    fn run(&self) -> Result<Report, Failure> {
        match self.table {
            Table::Err => Ok(err_table()),
            Table::Rho => rho_table(),
            Table::Regime => Ok(regime_table()),
        }
    }
}

fn err_table() -> Report {
    let header = ["D", "p(00)", "p(01|10)", "p(11)", "Err(H_f)", "Err(H_v)", "conclusion"];
    let table: Vec<exact::ErrRow<Rational>> = exact::err_table();
    let cells: [[Rational; 3]; 2] = exact::hypothesis_cells();
    let strs = |c: &[Rational; 3]| c.iter().map(|v| v.to_string()).collect::<Vec<_>>();
    let rows: Vec<Value> = table
        .iter()
        .map(|r| {
            json!({
                "data": r.label,
                "n1": r.data.ones,
                "n0": r.data.zeros,
                "cells": strs(&r.cells),
                "err_fair": r.err_fair.to_string(),
                "err_vague": r.err_vague.to_string(),
                "conclusion": r.verdict.to_string(),
            })
        })
        .collect();
    let doc = json!({
        "table": "err_table",
        "distance": "abs",
        "m": 2,
        "prior": "uniform",
        "rows": rows,
        "hypotheses": {"fair": strs(&cells[0]), "vague": strs(&cells[1])},
    });
    let mut report = Report::new(doc, &header);
    for r in &table {
        let mut row = vec![r.label.clone()];
        row.extend(strs(&r.cells));
        row.extend([r.err_fair.to_string(), r.err_vague.to_string(), r.verdict.to_string()]);
        report.row(row);
    }
    for (label, c) in [("H_f", &cells[0]), ("H_v", &cells[1])] {
        let mut row = vec![label.to_string()];
        row.extend(strs(c));
        row.extend(["-".to_string(), "-".to_string(), "-".to_string()]);
        report.row(row);
    }
    report
}

fn rho_table() -> Result<Report, Failure> {
    let mut rows = Vec::new();
    let mut report_rows = Vec::new();
    for d in RHO_DIMENSIONS {
        let (rho, scaled) = ellipsoid_rho(d).map_err(eval)?;
        rows.push(json!({"d": d, "rho": number(rho), "rho_over_sqrt_d": number(scaled)}));
        report_rows.push(vec![d.to_string(), fmt_float(rho), fmt_float(scaled)]);
    }
    let mut report = Report::new(json!({"table": "rho_table", "rows": rows}), &["d", "rho", "rho/sqrt(d)"]);
    report_rows.into_iter().for_each(|r| report.row(r));
    Ok(report)
}

fn regime_table() -> Report {
    let fair = exact::fair::<Rational>();
    let vague = exact::vague::<Rational>();
    let mut rows = Vec::new();
    let mut report = Report::new(Value::Null, &["n1", "n0", "m", "err_fair", "err_vague", "winner"]);
    let mut map = Vec::new();
    for half in REGIME_HALF_SIZES {
        let data = CountSummary::new(half, half);
        let mut line = format!("n={:<3}", 2 * half);
        for m in REGIME_HORIZONS {
            let f: Rational = exact::hat_loss(&fair, data, m, ExactDistance::Absolute);
            let v: Rational = exact::hat_loss(&vague, data, m, ExactDistance::Absolute);
            let (winner, mark) = if f < v {
                ("fair", 'F')
            } else if v < f {
                ("don't know", 'V')
            } else {
                ("tie", '=')
            };
            rows.push(json!({
                "n1": half,
                "n0": half,
                "m": m,
                "err_fair": f.to_string(),
                "err_vague": v.to_string(),
                "winner": winner,
            }));
            report.row(vec![
                half.to_string(),
                half.to_string(),
                m.to_string(),
                fmt_float(Field::to_f64(&f)),
                fmt_float(Field::to_f64(&v)),
                winner.into(),
            ]);
            line.push_str(&format!(" {mark:>3}"));
        }
        map.push(line);
    }
    report.json = json!({"table": "regime_table", "distance": "abs", "prior": "uniform", "rows": rows});
    let ms: String = REGIME_HORIZONS.iter().map(|m| format!(" {m:>3}")).collect();
    report.note("");
    report.note(format!("m:   {ms}"));
    map.into_iter().for_each(|l| report.note(l));
    report.note("F = fair point wins, V = vague interval wins, = = tie");
    report
}
