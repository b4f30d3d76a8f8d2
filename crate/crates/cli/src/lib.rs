//! Command-line front end: fit, goodness of fit, distribution evaluation and
//! Monte Carlo studies. JSON is the canonical output; CSV is a flat view.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use brbs_core::estimate::{ci_mm, ci_rho, ci_wald_ml, fit_ml, fit_mm};
use brbs_core::gof::{gof_report, pp_data, ttt_data, GofReport, PpData};
use brbs_core::io::read_sample_csv;
use brbs_core::simlab::{run_study_sharded, SimConfig, SimReport, Study};
use brbs_core::{
    BivariateSample, BrbsError, BrbsParams, Equilibrium, FitReport, Method, MlOptions, ModeResult,
    QuadratureSpec, SeededStream, Technique,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_ESTIMATION: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Debug, Parser)]
#[command(name = "brbs", version, about = "Bivariate Birnbaum-Saunders toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    pub format: Format,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Ml,
    Mm,
    Both,
}

impl MethodArg {
    fn methods(self) -> Vec<Method> {
        match self {
            MethodArg::Ml => vec![Method::Ml],
            MethodArg::Mm => vec![Method::Mm],
            MethodArg::Both => vec![Method::Ml, Method::Mm],
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the model to a two-column CSV file.
    Fit(FitArgs),
    /// Mahalanobis-distance KS test, PP/QQ and TTT data for a fitted model.
    Gof(GofArgs),
    /// Evaluate distribution functions for given parameters.
    Dist(DistArgs),
    /// Run a bias/MSE or coverage Monte Carlo study.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// CSV file with two positive numeric columns and an optional header.
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = MethodArg::Both)]
    pub method: MethodArg,
    /// Confidence levels for the intervals.
    #[arg(long, value_delimiter = ',', default_value = "0.95")]
    pub level: Vec<f64>,
    /// Monte Carlo size for the KX interval of ρ; 0 skips it.
    #[arg(long, default_value_t = 50_000)]
    pub kx_reps: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct GofArgs {
    pub input: PathBuf,
    /// Estimator whose fit is checked.
    #[arg(long, value_enum, default_value_t = MethodArg::Ml)]
    pub method: MethodArg,
    /// Level of the PP acceptance bands.
    #[arg(long, default_value_t = 0.95)]
    pub band_level: f64,
}

#[derive(Debug, Args)]
pub struct DistArgs {
    /// Means of the two margins.
    #[arg(long, value_delimiter = ',', num_args = 1, required = true)]
    pub mu: Vec<f64>,
    /// Precisions of the two margins.
    #[arg(long, value_delimiter = ',', num_args = 1, required = true)]
    pub delta: Vec<f64>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub rho: f64,
    /// Evaluation point t1,t2; repeatable.
    #[arg(long, value_delimiter = ',')]
    pub at: Vec<f64>,
    /// Square grid lo1,hi1,lo2,hi2,n evaluated at n×n points.
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<f64>>,
    #[arg(long)]
    pub pdf: bool,
    #[arg(long)]
    pub cdf: bool,
    #[arg(long)]
    pub sf: bool,
    #[arg(long)]
    pub hazard: bool,
    /// Local dependence function.
    #[arg(long)]
    pub ldf: bool,
    /// Equilibrium density S(t1,t2)/E[T1 T2].
    #[arg(long)]
    pub equilibrium: bool,
    /// Critical point of the joint density along (cβ1, cβ2).
    #[arg(long)]
    pub mode: bool,
    /// Stress-strength reliability P(T1 < T2).
    #[arg(long)]
    pub reliability: bool,
    /// Product moment, covariance and correlation.
    #[arg(long)]
    pub moments: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StudyArg {
    BiasMse,
    Coverage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// μ = 2, δ = 0.25
    LowPrecision,
    /// μ = 2, δ = 2
    HighPrecision,
    /// μ = 1, δ = 0.5 with all interval techniques
    Coverage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TechniqueArg {
    Wald,
    Mm,
    Fi,
    Kx,
}

impl From<TechniqueArg> for Technique {
    fn from(t: TechniqueArg) -> Self {
        match t {
            TechniqueArg::Wald => Technique::Wald,
            TechniqueArg::Mm => Technique::Mm,
            TechniqueArg::Fi => Technique::Fi,
            TechniqueArg::Kx => Technique::Kx,
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value_t = StudyArg::BiasMse)]
    pub study: StudyArg,
    /// Base grid; defaults to low-precision for bias/MSE and coverage for coverage studies.
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// JSON file with a full configuration; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long = "n", value_delimiter = ',')]
    pub n_values: Option<Vec<usize>>,
    #[arg(long = "rho", value_delimiter = ',', allow_hyphen_values = true)]
    pub rho_values: Option<Vec<f64>>,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub replications: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    #[arg(long, value_enum, value_delimiter = ',')]
    pub technique: Option<Vec<TechniqueArg>>,
    #[arg(long, value_delimiter = ',')]
    pub level: Option<Vec<f64>>,
    #[arg(long)]
    pub kx_reps: Option<usize>,
    /// Split each cell's replications into this many blocks; results do not depend on it.
    #[arg(long, default_value_t = 1)]
    pub shards: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl CliError {
    fn config(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }
}

pub fn exit_code(e: &BrbsError) -> i32 {
    match e {
        BrbsError::Domain(_) | BrbsError::Parse { .. } | BrbsError::Io(_) => EXIT_CONFIG,
        BrbsError::Degenerate(_)
        | BrbsError::SampleTooSmall { .. }
        | BrbsError::NonConvergence { .. }
        | BrbsError::IntervalUnavailable(_) => EXIT_ESTIMATION,
        BrbsError::Numerical { .. } | BrbsError::Inconsistent(_) => EXIT_NUMERICAL,
    }
}

impl From<BrbsError> for CliError {
    fn from(e: BrbsError) -> Self {
        Self {
            code: exit_code(&e),
            message: e.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Input problems are configuration errors whatever their core kind.
pub fn ingest_csv(path: &Path) -> CliResult<BivariateSample> {
    read_sample_csv(path).map_err(|e| match e {
        BrbsError::Io(_) => CliError::config(e.to_string()),
        _ => CliError::config(format!("{}: {e}", path.display())),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitOutput {
    pub input: String,
    pub fits: Vec<FitReport>,
}

pub fn cmd_fit(args: &FitArgs) -> CliResult<FitOutput> {
    let sample = ingest_csv(&args.input)?;
    let mut fits = Vec::new();
    for m in args.method.methods() {
        fits.push(fit_with_intervals(&sample, m, args)?);
    }
    Ok(FitOutput {
        input: args.input.display().to_string(),
        fits,
    })
}

fn fit_with_intervals(sample: &BivariateSample, m: Method, args: &FitArgs) -> CliResult<FitReport> {
    for &l in &args.level {
        if !(l > 0.0 && l < 1.0) {
            return Err(CliError::config(format!(
                "level must lie in (0, 1), got {l}"
            )));
        }
    }
    let mut fit = match m {
        Method::Ml => fit_ml(sample, &MlOptions::default())?,
        Method::Mm => fit_mm(sample)?,
    };
    let mut intervals = Vec::new();
    let mut warnings = Vec::new();
    match m {
        Method::Ml => {
            for &l in &args.level {
                match ci_wald_ml(&fit, l) {
                    Ok(iv) => intervals.extend(iv),
                    Err(e) => warnings.push(format!("Wald intervals at level {l}: {e}")),
                }
            }
        }
        Method::Mm => {
            for &l in &args.level {
                match ci_mm(&fit, l) {
                    Ok(iv) => intervals.extend(iv),
                    Err(e) => warnings.push(format!("moment intervals at level {l}: {e}")),
                }
            }
            let kx = (args.kx_reps > 0).then(|| (args.kx_reps, SeededStream::new(args.seed, 0)));
            match ci_rho(&fit, &args.level, kx) {
                Ok(iv) => intervals.extend(iv),
                Err(e @ BrbsError::Domain(_)) => return Err(e.into()),
                Err(e) => warnings.push(format!("correlation intervals: {e}")),
            }
        }
    }
    fit.intervals = intervals;
    fit.warnings.extend(warnings);
    Ok(fit)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GofOutput {
    pub method: Method,
    pub params: BrbsParams,
    pub report: GofReport,
    /// PP/QQ data per margin.
    pub pp: [PpData; 2],
    /// Scaled TTT curve per column.
    pub ttt: [Vec<(f64, f64)>; 2],
}

pub fn cmd_gof(args: &GofArgs) -> CliResult<GofOutput> {
    let sample = ingest_csv(&args.input)?;
    let method = match args.method {
        MethodArg::Ml => Method::Ml,
        MethodArg::Mm => Method::Mm,
        MethodArg::Both => return Err(CliError::config("gof checks one fit; choose ml or mm")),
    };
    let fit = match method {
        Method::Ml => fit_ml(&sample, &MlOptions::default())?,
        Method::Mm => fit_mm(&sample)?,
    };
    let theta = fit.estimates;
    let c1: Vec<f64> = sample.rows().iter().map(|r| r.0).collect();
    let c2: Vec<f64> = sample.rows().iter().map(|r| r.1).collect();
    Ok(GofOutput {
        method,
        params: theta,
        report: gof_report(&theta, &sample)?,
        pp: [
            pp_data(theta.margin1(), &c1, args.band_level)?,
            pp_data(theta.margin2(), &c2, args.band_level)?,
        ],
        ttt: [ttt_data(&c1)?, ttt_data(&c2)?],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointValues {
    pub t1: f64,
    pub t2: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pdf: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cdf: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sf: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hazard: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ldf: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub equilibrium: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Moments {
    pub product_moment: f64,
    pub covariance: f64,
    pub correlation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistOutput {
    pub params: BrbsParams,
    pub points: Vec<PointValues>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<ModeResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reliability: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub moments: Option<Moments>,
}

fn pair(v: &[f64], name: &str) -> CliResult<(f64, f64)> {
    match *v {
        [a] => Ok((a, a)),
        [a, b] => Ok((a, b)),
        _ => Err(CliError::config(format!(
            "--{name} takes one or two values"
        ))),
    }
}

fn dist_points(args: &DistArgs) -> CliResult<Vec<(f64, f64)>> {
    if !args.at.len().is_multiple_of(2) {
        return Err(CliError::config("--at takes pairs t1,t2"));
    }
    let mut pts: Vec<(f64, f64)> = args.at.chunks(2).map(|c| (c[0], c[1])).collect();
    if let Some(g) = &args.grid {
        let [lo1, hi1, lo2, hi2, n] = g[..] else {
            return Err(CliError::config("--grid takes lo1,hi1,lo2,hi2,n"));
        };
        if !(n >= 2.0 && n.fract() == 0.0 && n <= 1000.0) {
            return Err(CliError::config(
                "grid size must be an integer in [2, 1000]",
            ));
        }
        let n = n as usize;
        let step = |lo: f64, hi: f64, i: usize| lo + (hi - lo) * i as f64 / (n - 1) as f64;
        for i in 0..n {
            for j in 0..n {
                pts.push((step(lo1, hi1, i), step(lo2, hi2, j)));
            }
        }
    }
    Ok(pts)
}

pub fn cmd_dist(args: &DistArgs) -> CliResult<DistOutput> {
    let (mu1, mu2) = pair(&args.mu, "mu")?;
    let (d1, d2) = pair(&args.delta, "delta")?;
    let params = BrbsParams::new(mu1, mu2, d1, d2, args.rho)?;
    let spec = QuadratureSpec::default();
    let pts = dist_points(args)?;
    let any_fn = args.pdf || args.cdf || args.sf || args.hazard || args.ldf || args.equilibrium;
    let want_pdf = args.pdf || !any_fn;
    let eq = if args.equilibrium {
        Some(Equilibrium::new(params, &spec)?)
    } else {
        None
    };
    let eval = |on: bool, f: &dyn Fn() -> brbs_core::Result<f64>| -> CliResult<Option<f64>> {
        Ok(if on { Some(f()?) } else { None })
    };
    let mut points = Vec::with_capacity(pts.len());
    for (t1, t2) in pts {
        points.push(PointValues {
            t1,
            t2,
            pdf: eval(want_pdf, &|| params.pdf(t1, t2))?,
            cdf: eval(args.cdf, &|| params.cdf(t1, t2))?,
            sf: eval(args.sf, &|| params.sf(t1, t2))?,
            hazard: eval(args.hazard, &|| params.hazard(t1, t2))?,
            ldf: eval(args.ldf, &|| params.ldf(t1, t2))?,
            equilibrium: match &eq {
                Some(e) => Some(e.pdf(t1, t2)?),
                None => None,
            },
        });
    }
    let moments = if args.moments {
        Some(Moments {
            product_moment: params.product_moment(&spec)?,
            covariance: params.covariance(&spec)?,
            correlation: params.correlation(&spec)?,
        })
    } else {
        None
    };
    Ok(DistOutput {
        params,
        points,
        mode: if args.mode {
            Some(params.mode_find()?)
        } else {
            None
        },
        reliability: if args.reliability {
            Some(params.reliability(&spec)?)
        } else {
            None
        },
        moments,
    })
}

pub fn sim_config(args: &SimulateArgs) -> CliResult<SimConfig> {
    let mut c = match (&args.config, args.preset) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?
        }
        (None, Some(Preset::LowPrecision)) => SimConfig::low_precision(),
        (None, Some(Preset::HighPrecision)) => SimConfig::high_precision(),
        (None, Some(Preset::Coverage)) => SimConfig::coverage_grid(),
        (None, None) => match args.study {
            StudyArg::BiasMse => SimConfig::low_precision(),
            StudyArg::Coverage => SimConfig::coverage_grid(),
        },
    };
    if let Some(v) = &args.n_values {
        c.n_values = v.clone();
    }
    if let Some(v) = &args.rho_values {
        c.rho_values = v.clone();
    }
    if let Some(v) = args.mu {
        c.mu = v;
    }
    if let Some(v) = args.delta {
        c.delta = v;
    }
    if let Some(v) = args.replications {
        c.replications = v;
    }
    if let Some(v) = args.seed {
        c.seed = v;
    }
    if let Some(m) = args.method {
        c.methods = m.methods();
    }
    if let Some(t) = &args.technique {
        c.techniques = t.iter().map(|&t| t.into()).collect();
    }
    if let Some(v) = &args.level {
        c.levels = v.clone();
    }
    if let Some(v) = args.kx_reps {
        c.kx_reps = v;
    }
    c.validate().map_err(|e| CliError::config(e.to_string()))?;
    Ok(c)
}

pub fn cmd_simulate(args: &SimulateArgs) -> CliResult<SimReport> {
    let config = sim_config(args)?;
    let study = match args.study {
        StudyArg::BiasMse => Study::BiasMse,
        StudyArg::Coverage => Study::Coverage,
    };
    Ok(run_study_sharded(&config, study, args.shards)?)
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("output types serialize");
    s.push('\n');
    s
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| x.to_string())
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::Ml => "ml",
        Method::Mm => "mm",
    }
}

fn serde_name<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default()
}

fn fit_csv(out: &FitOutput) -> String {
    let mut s = String::from("method,param,estimate,std_error,technique,level,lower,upper\n");
    for f in &out.fits {
        let est = f.estimates.to_array();
        let se = f.std_errors.to_array();
        for p in brbs_core::Param::ALL {
            let i = p.index();
            let base = format!(
                "{},{},{},{}",
                method_name(f.method),
                serde_name(&p),
                est[i],
                opt(se[i])
            );
            let ivs: Vec<_> = f.intervals.iter().filter(|iv| iv.param == p).collect();
            if ivs.is_empty() {
                let _ = writeln!(s, "{base},,,,");
            }
            for iv in ivs {
                let _ = writeln!(
                    s,
                    "{base},{},{},{},{}",
                    serde_name(&iv.technique),
                    iv.level,
                    iv.lower,
                    iv.upper
                );
            }
        }
    }
    s
}

fn gof_csv(out: &GofOutput) -> String {
    let mut s = String::from("index,distance,transformed\n");
    for (i, (d, z)) in out
        .report
        .distances
        .iter()
        .zip(&out.report.transformed)
        .enumerate()
    {
        let _ = writeln!(s, "{},{d},{z}", i + 1);
    }
    let _ = writeln!(
        s,
        "# ks_statistic={} ks_pvalue={}",
        out.report.ks_statistic, out.report.ks_pvalue
    );
    s
}

type Column = (&'static str, fn(&PointValues) -> Option<f64>);

fn dist_csv(out: &DistOutput) -> String {
    let p = &out.points;
    let cols: [Column; 6] = [
        ("pdf", |v| v.pdf),
        ("cdf", |v| v.cdf),
        ("sf", |v| v.sf),
        ("hazard", |v| v.hazard),
        ("ldf", |v| v.ldf),
        ("equilibrium", |v| v.equilibrium),
    ];
    let used: Vec<_> = cols
        .iter()
        .filter(|(_, g)| p.iter().any(|v| g(v).is_some()))
        .collect();
    let mut s = String::from("t1,t2");
    for (name, _) in &used {
        s.push(',');
        s.push_str(name);
    }
    s.push('\n');
    for v in p {
        let _ = write!(s, "{},{}", v.t1, v.t2);
        for (_, g) in &used {
            let _ = write!(s, ",{}", opt(g(v)));
        }
        s.push('\n');
    }
    if let Some(m) = &out.mode {
        let _ = writeln!(s, "# mode c={} t1={} t2={}", m.c, m.t1, m.t2);
    }
    if let Some(r) = out.reliability {
        let _ = writeln!(s, "# reliability={r}");
    }
    if let Some(m) = &out.moments {
        let _ = writeln!(
            s,
            "# product_moment={} covariance={} correlation={}",
            m.product_moment, m.covariance, m.correlation
        );
    }
    s
}

fn sim_csv(r: &SimReport) -> String {
    let mut s = String::new();
    match r.study {
        Study::BiasMse => {
            s.push_str("n,rho,mu,delta,method,param,bias,mse,successes,degraded\n");
            for c in &r.cells {
                for e in &c.bias_mse {
                    let _ = writeln!(
                        s,
                        "{},{},{},{},{},{},{},{},{},{}",
                        c.n,
                        c.rho,
                        c.mu,
                        c.delta,
                        method_name(e.method),
                        serde_name(&e.param),
                        e.bias,
                        e.mse,
                        e.successes,
                        c.degraded
                    );
                }
            }
        }
        Study::Coverage => {
            s.push_str("n,rho,mu,delta,method,technique,param,level,coverage,trials,degraded\n");
            for c in &r.cells {
                for e in &c.coverage {
                    let _ = writeln!(
                        s,
                        "{},{},{},{},{},{},{},{},{},{},{}",
                        c.n,
                        c.rho,
                        c.mu,
                        c.delta,
                        method_name(e.method),
                        serde_name(&e.technique),
                        serde_name(&e.param),
                        e.level,
                        e.coverage,
                        e.trials,
                        c.degraded
                    );
                }
            }
        }
    }
    for w in &r.warnings {
        let _ = writeln!(s, "# warning: {w}");
    }
    s
}

/// Runs a parsed command and returns the rendered output.
pub fn run(cli: &Cli) -> CliResult<String> {
    let csv = cli.format == Format::Csv;
    Ok(match &cli.command {
        Command::Fit(a) => {
            let out = cmd_fit(a)?;
            if csv {
                fit_csv(&out)
            } else {
                json(&out)
            }
        }
        Command::Gof(a) => {
            let out = cmd_gof(a)?;
            if csv {
                gof_csv(&out)
            } else {
                json(&out)
            }
        }
        Command::Dist(a) => {
            let out = cmd_dist(a)?;
            if csv {
                dist_csv(&out)
            } else {
                json(&out)
            }
        }
        Command::Simulate(a) => {
            let out = cmd_simulate(a)?;
            if csv {
                sim_csv(&out)
            } else {
                json(&out)
            }
        }
    })
}

/// Runs and writes the output; returns the process exit code.
pub fn main_with(cli: &Cli) -> i32 {
    let text = match run(cli) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return e.code;
        }
    };
    let written = match &cli.output {
        Some(path) => std::fs::write(path, &text).map_err(|e| format!("{}: {e}", path.display())),
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| e.to_string())
        }
    };
    match written {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
    }
}
