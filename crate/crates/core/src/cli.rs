//! Command-line front end.
//!
//! Every run is described by a [`RunConfig`], built from an optional JSON
//! file and then overridden by flags. Reports are rendered in full before a
//! single write, so parallel trials never interleave output.

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

use crate::algebra::AlgElement;
use crate::error::{Error, Result};
use crate::exec::{configure_threads, threads_from_env, Execution};
use crate::harness::{run_cell, write_csv, Direction, Experiment, ModularVariant, RatioReport};
use crate::independence::EnsembleSpec;
use crate::oracle::{self, OracleCheck, OracleReport};
use crate::spaces::{split_spec_list, NormSpec, OrliczFunction};

/// Upper limit on trials per cell.
pub const MAX_TRIALS: usize = 1_000_000;

#[derive(Parser, Debug)]
#[command(name = "ncfa", version, about = "Singular value functions, symmetric norms and moment inequalities on finite tracial algebras")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run theorem drivers and fail on any hard-bound violation.
    Verify(RunArgs),
    /// Like verify, but defaults to CSV and skips cells whose hypotheses fail.
    Sweep(RunArgs),
    /// Run exact-identity suites.
    Oracle(OracleArgs),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Args, Debug, Default)]
pub struct RunArgs {
    /// Theorem ids, comma separated or repeated.
    #[arg(long = "theorem", value_delimiter = ',')]
    pub theorems: Vec<String>,
    /// Ensembles such as `classical:K=4,n=2`; repeat the flag for several.
    #[arg(long = "ensemble")]
    pub ensembles: Vec<String>,
    /// Norm specs, e.g. `"Lp(1.5),Lp(3)"`.
    #[arg(long = "spec")]
    pub specs: Vec<String>,
    /// Rosenthal exponents.
    #[arg(long = "p", value_delimiter = ',')]
    pub p: Vec<f64>,
    /// Exponents for the lemma bounds.
    #[arg(long = "q", value_delimiter = ',')]
    pub q: Vec<f64>,
    /// Orlicz functions such as `M:2,4`; repeat the flag for several.
    #[arg(long = "phi")]
    pub phi: Vec<String>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// JSON config file; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Skip hypothesis checks and label the reports exploratory.
    #[arg(long)]
    pub exploratory: bool,
    /// Run trials on one thread.
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Args, Debug)]
pub struct OracleArgs {
    /// Checks to run (default: l2-orthogonality, rank-one, duality).
    #[arg(long = "check", value_delimiter = ',')]
    pub checks: Vec<OracleCheck>,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Matrix JSON for the `mu` check.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub sequential: bool,
}

/// A complete run description, also the schema of `--config` files.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub theorems: Vec<String>,
    pub specs: Vec<String>,
    pub ensembles: Vec<String>,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub phi: Vec<String>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub exploratory: bool,
}

impl RunConfig {
    /// Reads `--config` if given, then applies every flag that was set.
    pub fn from_args(args: &RunArgs) -> Result<Self> {
        let mut cfg = match &args.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
                serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
            }
            None => RunConfig::default(),
        };
        fn set<T: Clone>(dst: &mut Vec<T>, src: &[T]) {
            if !src.is_empty() {
                *dst = src.to_vec();
            }
        }
        set(&mut cfg.theorems, &args.theorems);
        set(&mut cfg.specs, &args.specs);
        set(&mut cfg.ensembles, &args.ensembles);
        set(&mut cfg.p, &args.p);
        set(&mut cfg.q, &args.q);
        set(&mut cfg.phi, &args.phi);
        cfg.trials = args.trials.or(cfg.trials);
        cfg.seed = args.seed.or(cfg.seed);
        cfg.out = args.out.clone().or(cfg.out);
        cfg.format = args.format.or(cfg.format);
        cfg.exploratory |= args.exploratory;
        Ok(cfg)
    }

    pub fn parsed_specs(&self) -> Result<Vec<NormSpec>> {
        self.specs.iter().flat_map(|s| split_spec_list(s)).map(|s| NormSpec::parse(&s)).collect()
    }

    pub fn parsed_ensembles(&self) -> Result<Vec<EnsembleSpec>> {
        self.ensembles.iter().map(|s| s.parse()).collect()
    }

    pub fn parsed_phis(&self) -> Result<Vec<OrliczFunction>> {
        self.phi.iter().map(|s| OrliczFunction::parse(s)).collect()
    }

    /// Expands theorem ids into concrete experiments.
    pub fn experiments(&self) -> Result<Vec<Experiment>> {
        if self.theorems.is_empty() {
            return Err(Error::Config("at least one --theorem is required".into()));
        }
        let specs = self.parsed_specs()?;
        let phis = self.parsed_phis()?;
        let need_specs = || {
            if specs.is_empty() {
                Err(Error::Config("this theorem needs at least one --spec".into()))
            } else {
                Ok(specs.clone())
            }
        };
        let need_phis = || {
            if phis.is_empty() {
                Err(Error::Config("this theorem needs at least one --phi".into()))
            } else {
                Ok(phis.clone())
            }
        };
        let ps = if self.p.is_empty() { vec![4.0] } else { self.p.clone() };
        let qs = if self.q.is_empty() { vec![2.0, 4.0, 8.0] } else { self.q.clone() };
        let mut out = Vec::new();
        for id in &self.theorems {
            let id = id.trim();
            let (base, direction) = match id.rsplit_once('-') {
                Some((b, "upper")) => (b, Direction::Upper),
                Some((b, "lower")) => (b, Direction::Lower),
                _ => (id, Direction::Both),
            };
            match base {
                "rosenthal" => out.extend(ps.iter().map(|&p| Experiment::Rosenthal { p })),
                "js" => out.extend(need_specs()?.into_iter().map(|spec| Experiment::Js { spec, direction })),
                "js-positive" => out.extend(need_specs()?.into_iter().map(|spec| Experiment::JsPositive { spec, direction })),
                "khinchine" => out.extend(need_specs()?.into_iter().map(|spec| Experiment::Khinchine { spec })),
                "khinchine-adjoint" => out.extend(need_specs()?.into_iter().map(|spec| Experiment::KhinchineAdjoint { spec })),
                "modular" | "modular-positive" | "modular-mean-zero" | "modular-khinchine" => {
                    let variants: &[ModularVariant] = match base {
                        "modular-positive" => &[ModularVariant::Positive],
                        "modular-mean-zero" => &[ModularVariant::MeanZero],
                        "modular-khinchine" => &[ModularVariant::Khinchine],
                        _ => &ModularVariant::ALL,
                    };
                    for phi in need_phis()? {
                        out.extend(variants.iter().map(|&variant| Experiment::Modular { phi: phi.clone(), variant }));
                    }
                }
                "lemma-rademacher" => out.extend(qs.iter().map(|&q| Experiment::Rademacher { q })),
                "lemma-cap" => out.extend((1..=3).map(|n| Experiment::CapLemma { n })),
                "lemma-l-contraction" => out.extend(qs.iter().filter(|&&q| q >= 2.0).map(|&q| Experiment::LContraction { q })),
                "lemmas" => {
                    out.extend(qs.iter().map(|&q| Experiment::Rademacher { q }));
                    out.extend((1..=3).map(|n| Experiment::CapLemma { n }));
                    out.extend(qs.iter().filter(|&&q| q >= 2.0).map(|&q| Experiment::LContraction { q }));
                }
                other => return Err(Error::Config(format!("unknown theorem id '{other}'"))),
            }
        }
        Ok(out)
    }

    pub fn trials(&self) -> Result<usize> {
        match self.trials.unwrap_or(100) {
            0 => Err(Error::Config("trials must be at least 1".into())),
            t if t > MAX_TRIALS => Err(Error::Budget(format!("{t} trials exceed the limit of {MAX_TRIALS}"))),
            t => Ok(t),
        }
    }
}

/// Rendered output plus the hard-assertion failures to enumerate.
#[derive(Debug)]
pub struct RunOutcome {
    pub output: String,
    pub failures: Vec<String>,
    pub notes: Vec<String>,
}

#[derive(Serialize)]
struct ReportFile<'a, T> {
    command: &'a str,
    reports: &'a [T],
}

/// Runs `verify` (or `sweep` when `sweep` is true).
pub fn run(cfg: &RunConfig, sweep: bool, exec: Execution) -> Result<RunOutcome> {
    let experiments = cfg.experiments()?;
    let ensembles = cfg.parsed_ensembles()?;
    if ensembles.is_empty() {
        return Err(Error::Config("at least one --ensemble is required".into()));
    }
    let trials = cfg.trials()?;
    let seed = cfg.seed.unwrap_or(0);
    let mut reports = Vec::new();
    let mut notes = Vec::new();
    for exp in &experiments {
        for ens in &ensembles {
            match run_cell(exp, ens, trials, seed, exec, cfg.exploratory) {
                Ok(r) => reports.push(r),
                Err(Error::Hypothesis(msg)) if sweep => notes.push(format!("skipped {} on {ens}: {msg}", exp.theorem_id())),
                Err(e) => return Err(e),
            }
        }
    }
    let failures = hard_failures(&reports);
    let format = cfg.format.unwrap_or(if sweep { Format::Csv } else { Format::Json });
    let command = if sweep { "sweep" } else { "verify" };
    let output = match format {
        Format::Json => serde_json::to_string_pretty(&ReportFile { command, reports: &reports })? + "\n",
        Format::Csv => {
            let mut buf = Vec::new();
            write_csv(&reports, &mut buf)?;
            String::from_utf8(buf).map_err(|e| Error::Config(e.to_string()))?
        }
    };
    Ok(RunOutcome { output, failures, notes })
}

fn hard_failures(reports: &[RatioReport]) -> Vec<String> {
    let mut out = Vec::new();
    for r in reports {
        for &t in &r.violations {
            out.push(format!(
                "{} {} on {}:K={},n={} seed {} trial {}: lhs {:e} > {} * rhs {:e}",
                r.theorem_id,
                r.spec,
                r.ensemble.kind,
                r.ensemble.count,
                r.ensemble.n,
                r.ensemble.seed,
                t,
                r.lhs[t],
                r.hard_bound.unwrap_or(f64::NAN),
                r.rhs[t]
            ));
        }
    }
    out
}

/// Runs the requested oracle suites.
pub fn run_oracle(args: &OracleArgs, exec: Execution) -> Result<RunOutcome> {
    if args.trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    if args.trials > MAX_TRIALS {
        return Err(Error::Budget(format!("{} trials exceed the limit of {MAX_TRIALS}", args.trials)));
    }
    let checks = if args.checks.is_empty() {
        let mut c = vec![OracleCheck::L2Orthogonality, OracleCheck::RankOne, OracleCheck::Duality];
        if args.input.is_some() {
            c.push(OracleCheck::Mu);
        }
        c
    } else {
        args.checks.clone()
    };
    let mut reports: Vec<OracleReport> = Vec::new();
    for check in checks {
        reports.push(match check {
            OracleCheck::L2Orthogonality => oracle::l2_orthogonality(args.trials, args.seed, exec)?,
            OracleCheck::RankOne => oracle::rank_one(&[2, 4, 8], &[2.0, 4.0])?,
            OracleCheck::Duality => oracle::duality(args.trials, args.seed, exec)?,
            OracleCheck::Mu => {
                let path = args.input.as_ref().ok_or_else(|| Error::Config("the mu check needs --input".into()))?;
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
                let x = AlgElement::from_json(&text).map_err(|e| match e {
                    Error::Json(j) => Error::Config(format!("{}: {j}", path.display())),
                    other => other,
                })?;
                oracle::mu_check(&x)?
            }
        });
    }
    let failures = reports.iter().flat_map(|r| r.failures.iter().map(move |f| format!("{}: {f}", r.check))).collect();
    let output = serde_json::to_string_pretty(&ReportFile { command: "oracle", reports: &reports })? + "\n";
    Ok(RunOutcome { output, failures, notes: Vec::new() })
}

/// Exit status for an error: 3 for budget, 2 for bad input, 1 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Budget(_) => 3,
        Error::Config(_)
        | Error::MalformedSpec(_)
        | Error::InvalidOrlicz(_)
        | Error::Hypothesis(_)
        | Error::Json(_)
        | Error::InvalidAlgebra(_)
        | Error::ShapeMismatch(_)
        | Error::NotHermitian { .. } => 2,
        _ => 1,
    }
}

fn emit(outcome: &RunOutcome, out: Option<&PathBuf>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, &outcome.output)?,
        None => print!("{}", outcome.output),
    }
    for n in &outcome.notes {
        eprintln!("note: {n}");
    }
    Ok(())
}

/// Parses `args`, runs, and returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    configure_threads(threads_from_env());
    let result = match &cli.command {
        Command::Verify(a) | Command::Sweep(a) => {
            let sweep = matches!(cli.command, Command::Sweep(_));
            let exec = if a.sequential { Execution::Sequential } else { Execution::Parallel };
            RunConfig::from_args(a).and_then(|cfg| {
                let outcome = run(&cfg, sweep, exec)?;
                emit(&outcome, cfg.out.as_ref())?;
                Ok(outcome)
            })
        }
        Command::Oracle(a) => {
            let exec = if a.sequential { Execution::Sequential } else { Execution::Parallel };
            run_oracle(a, exec).and_then(|outcome| {
                emit(&outcome, a.out.as_ref())?;
                Ok(outcome)
            })
        }
    };
    match result {
        Ok(outcome) if outcome.failures.is_empty() => 0,
        Ok(outcome) => {
            eprintln!("{} hard assertion(s) failed:", outcome.failures.len());
            for f in &outcome.failures {
                eprintln!("  {f}");
            }
            1
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
