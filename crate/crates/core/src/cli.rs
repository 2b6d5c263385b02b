//! Command-line surface: `rates`, `run`, `audit` and `matrix`.
//!
//! Exit codes: 0 on success, 1 on validation or I/O errors, 2 when a run or
//! audit does not pass.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num::{BigRational, ToPrimitive};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::audit::{audit_privacy, chi_square_audit, verify_correctness, AuditParams, AuditReport, PlanSampler};
use crate::error::{PirError, Result};
use crate::exec::{decode, lifted_message_len, run, schedule_from_plan, LiftedBuilder, Transcript};
use crate::gf::{FieldSpec, DEFAULT_PRIME};
use crate::lift::{int, lifted_rate, lifted_rate_rational, replicated_capacity, SymbolicMatrix};
use crate::oneshot::one_shot_rate;
use crate::plan::{Mutated, Mutation, SchemeBuilder};
use crate::refine::refined_rate;
use crate::storage::{Database, StorageConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_FAILED: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum SchemeKind {
    /// Reed-Solomon one-shot scheme, refined and lifted.
    RsLifted,
    /// Shamir sharing over replicated storage (K = 1), refined and lifted.
    SecretSharingLifted,
}

/// Parameters shared by `run` and `audit`, loadable from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub n: usize,
    pub k: usize,
    pub t: usize,
    pub m: usize,
    pub prime: u64,
    pub seed: u64,
    pub scheme: SchemeKind,
    pub out: Option<PathBuf>,
    pub transcript: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n: 4,
            k: 2,
            t: 2,
            m: 3,
            prime: DEFAULT_PRIME,
            seed: 42,
            scheme: SchemeKind::RsLifted,
            out: None,
            transcript: None,
        }
    }
}

impl RunConfig {
    pub fn storage(&self) -> Result<StorageConfig> {
        if self.scheme == SchemeKind::SecretSharingLifted && self.k != 1 {
            return Err(PirError::InvalidParameters(
                "secret_sharing_lifted needs replicated storage (K=1)".into(),
            ));
        }
        if self.n == 0 || self.k == 0 || self.m == 0 {
            return Err(PirError::InvalidParameters("N, K and M must be positive".into()));
        }
        let field = FieldSpec::new(self.prime)?;
        StorageConfig::new(self.n, self.k, self.t, self.m, lifted_message_len(self.n, self.k, self.m), field)
    }

    pub fn builder(&self) -> Result<LiftedBuilder> {
        LiftedBuilder::new(self.storage()?)
    }
}

#[derive(Debug, Parser)]
#[command(name = "liftpir", version, about = "Lifted private information retrieval simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact rate table over a parameter grid, as CSV.
    Rates(RatesArgs),
    /// Encode random messages, retrieve each once and report.
    Run(RunArgs),
    /// Algebraic privacy audit plus a correctness pass; optional chi-square.
    Audit(AuditArgs),
    /// Print a symbolic matrix.
    Matrix(MatrixArgs),
}

#[derive(Debug, Args)]
pub struct ParamArgs {
    /// JSON file with any RunConfig fields; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub t: Option<usize>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub prime: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub scheme: Option<SchemeKind>,
    /// Where to write the JSON report (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl ParamArgs {
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)?,
            None => RunConfig::default(),
        };
        macro_rules! over {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { cfg.$f = v; } )* };
        }
        over!(n, k, t, m, prime, seed, scheme);
        if self.out.is_some() {
            cfg.out = self.out.clone();
        }
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    /// Also dump schedules' transcripts as JSON.
    #[arg(long)]
    pub transcript: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    /// Add the chi-square audit (needs --prime <= 7).
    #[arg(long)]
    pub stat: bool,
    /// Inject a privacy-breaking edit.
    #[arg(long, value_parser = parse_mutation)]
    pub mutate: Option<Mutation>,
    /// Trials per message for --stat.
    #[arg(long, default_value_t = crate::audit::MIN_TRIALS)]
    pub trials: usize,
}

#[derive(Debug, Args)]
pub struct RatesArgs {
    /// Server counts: `4`, `2-8` or `2,3,5`.
    #[arg(long, default_value = "2-8")]
    pub n: String,
    #[arg(long, default_value = "1-3")]
    pub k: String,
    #[arg(long, default_value = "1-3")]
    pub t: String,
    #[arg(long, default_value = "2-4")]
    pub m: String,
    /// Print decimals (6 significant digits) instead of fractions.
    #[arg(long)]
    pub decimal: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MatrixArgs {
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    #[arg(long, default_value_t = 3)]
    pub r: usize,
    #[arg(long, default_value_t = 3)]
    pub m: usize,
    /// Print JSON with lineage groups instead of text.
    #[arg(long)]
    pub json: bool,
    /// Also write the JSON form here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_mutation(s: &str) -> std::result::Result<Mutation, String> {
    Mutation::parse(s).map_err(|e| e.to_string())
}

/// `4`, `2-8`, `2,3,5` or mixes like `2-4,7`.
pub fn parse_range(s: &str) -> Result<Vec<usize>> {
    let bad = || PirError::InvalidParameters(format!("cannot parse range '{s}'"));
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.split_once('-') {
            Some((a, b)) => {
                let a: usize = a.trim().parse().map_err(|_| bad())?;
                let b: usize = b.trim().parse().map_err(|_| bad())?;
                if a > b {
                    return Err(bad());
                }
                out.extend(a..=b);
            }
            None => out.push(part.parse().map_err(|_| bad())?),
        }
    }
    if out.is_empty() {
        return Err(bad());
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// One row of the rate table. Every rate is exact.
#[derive(Debug, Clone, PartialEq)]
pub struct RateRow {
    pub n: usize,
    pub k: usize,
    pub t: usize,
    pub m: usize,
    pub r: usize,
    pub one_shot: BigRational,
    pub refined: BigRational,
    /// Lifted rate with `r = K + T - 1`.
    pub lifted: BigRational,
    /// Lifted rate with `r = (NK - N + T) / K`.
    pub lifted_coded: BigRational,
    /// `(N + T)(NK)^{M-1} / ((NK)^M - (NK - N + T)^M)`, kept for comparison.
    pub lifted_coded_literal: BigRational,
    pub capacity: Option<BigRational>,
    pub equal: bool,
    pub note: String,
}

pub fn rate_row(n: usize, k: usize, t: usize, m: usize) -> Result<RateRow> {
    if k == 0 || t == 0 || m == 0 || k >= n || t > n - k {
        return Err(PirError::InvalidParameters(format!(
            "need 1 <= K < N, 1 <= T <= N-K, M >= 1; got N={n} K={k} T={t} M={m}"
        )));
    }
    let r = k + t - 1;
    let nk = int(n * k);
    let r_coded = (int(n * k) - int(n) + int(t)) / int(k);
    let lifted = lifted_rate(n, r, m)?;
    let lifted_coded = lifted_rate_rational(&int(n), &r_coded, m);
    let lifted_coded_literal = (int(n) + int(t)) * num::pow::pow(nk.clone(), m - 1)
        / (num::pow::pow(nk.clone(), m) - num::pow::pow(nk - int(n) + int(t), m));
    let mut note = String::new();
    if !r_coded.is_integer() {
        note = format!("non-integer co-dimension {r_coded}");
    }
    Ok(RateRow {
        n,
        k,
        t,
        m,
        r,
        one_shot: one_shot_rate(n, r)?,
        refined: refined_rate(n, r)?,
        equal: lifted_coded == lifted,
        lifted,
        lifted_coded,
        lifted_coded_literal,
        capacity: (k == 1).then(|| replicated_capacity(n, t, m)),
        note,
    })
}

/// Rows for every valid combination, in `N, K, T, M` order.
pub fn rate_table(ns: &[usize], ks: &[usize], ts: &[usize], ms: &[usize]) -> Result<Vec<RateRow>> {
    let mut rows = Vec::new();
    for &n in ns {
        for &k in ks {
            for &t in ts {
                for &m in ms {
                    if k >= 1 && t >= 1 && m >= 1 && k < n && t <= n - k {
                        rows.push(rate_row(n, k, t, m)?);
                    }
                }
            }
        }
    }
    Ok(rows)
}

/// Six significant digits.
pub fn decimal(x: &BigRational) -> String {
    let v = x.to_f64().unwrap_or(f64::NAN);
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let digits = (5 - v.abs().log10().floor() as i32).max(0) as usize;
    format!("{v:.digits$}")
}

pub const RATE_HEADER: &str = "N,K,T,M,r,one_shot,refined,lifted_eq5,lifted_eq4_corrected,capacity_k1,equality_flag,lifted_eq4_literal,note";

pub fn rates_csv(rows: &[RateRow], as_decimal: bool) -> String {
    let fmt = |x: &BigRational| if as_decimal { decimal(x) } else { x.to_string() };
    let mut out = String::from(RATE_HEADER);
    out.push('\n');
    for r in rows {
        let cap = r.capacity.as_ref().map(fmt).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.n,
            r.k,
            r.t,
            r.m,
            r.r,
            fmt(&r.one_shot),
            fmt(&r.refined),
            fmt(&r.lifted),
            fmt(&r.lifted_coded),
            cap,
            r.equal,
            fmt(&r.lifted_coded_literal),
            r.note
        ));
    }
    out
}

pub fn cmd_rates(args: &RatesArgs) -> Result<String> {
    let rows = rate_table(
        &parse_range(&args.n)?,
        &parse_range(&args.k)?,
        &parse_range(&args.t)?,
        &parse_range(&args.m)?,
    )?;
    Ok(rates_csv(&rows, args.decimal))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalRecord {
    pub desired: usize,
    pub correct: bool,
    pub download_count: usize,
    pub rate: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scheme: SchemeKind,
    pub params: AuditParams,
    pub seed: u64,
    pub r: usize,
    pub expected_rate: String,
    pub retrievals: Vec<RetrievalRecord>,
    pub pass: bool,
}

/// Everything `run` produces; the report is deterministic in the config.
pub struct RunOutcome {
    pub report: RunReport,
    pub transcripts: Vec<Transcript>,
}

pub fn cmd_run(config: &RunConfig) -> Result<RunOutcome> {
    let builder = config.builder()?;
    let storage = builder.config().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let db = Database::random(&storage, &mut rng)?;
    let expected = lifted_rate(storage.n, builder.r(), storage.m)?;
    let mut retrievals = Vec::new();
    let mut transcripts = Vec::new();
    for desired in 1..=storage.m {
        let plan = builder.plan(desired)?;
        let schedule = schedule_from_plan(&plan, config.seed.wrapping_add(desired as u64))?;
        let transcript = run(&schedule, &db)?;
        let message = decode(&transcript, &schedule)?;
        let rate = int(storage.l) / int(transcript.download_count);
        retrievals.push(RetrievalRecord {
            desired,
            correct: message == *db.message(desired) && rate == expected,
            download_count: transcript.download_count,
            rate: rate.to_string(),
        });
        transcripts.push(transcript);
    }
    let pass = retrievals.iter().all(|r| r.correct);
    Ok(RunOutcome {
        report: RunReport {
            scheme: config.scheme,
            params: AuditParams {
                n: storage.n,
                k: storage.k,
                t: storage.t,
                m: storage.m,
                l: storage.l,
                prime: storage.field.modulus(),
            },
            seed: config.seed,
            r: builder.r(),
            expected_rate: expected.to_string(),
            retrievals,
            pass,
        },
        transcripts,
    })
}

fn audit_with<B: SchemeBuilder>(builder: &B, config: &RunConfig, stat: bool, trials: usize) -> Result<AuditReport> {
    let mut report = audit_privacy(builder)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let db = Database::random(builder.config(), &mut rng)?;
    report = report.merge(verify_correctness(builder, &db, 1, config.seed)?);
    if stat {
        let sampler = PlanSampler::new(builder)?;
        report = report.merge(chi_square_audit(&sampler, trials, config.seed)?);
    }
    Ok(report)
}

pub fn cmd_audit(config: &RunConfig, stat: bool, mutate: Option<Mutation>, trials: usize) -> Result<AuditReport> {
    let builder = config.builder()?;
    match mutate {
        None => audit_with(&builder, config, stat, trials),
        Some(mutation) => audit_with(&Mutated { inner: builder, mutation }, config, stat, trials),
    }
}

pub fn cmd_matrix(n: usize, r: usize, m: usize) -> Result<SymbolicMatrix> {
    SymbolicMatrix::for_messages(n, r, m)
}

fn emit(out: &mut dyn Write, path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Runs a parsed command, writing results to `out`; returns the exit code.
pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<i32> {
    match &cli.command {
        Command::Rates(args) => {
            emit(out, args.out.as_deref(), &cmd_rates(args)?)?;
            Ok(EXIT_OK)
        }
        Command::Run(args) => {
            let mut config = args.params.resolve()?;
            if args.transcript.is_some() {
                config.transcript = args.transcript.clone();
            }
            let outcome = cmd_run(&config)?;
            let mut json = serde_json::to_string_pretty(&outcome.report)?;
            json.push('\n');
            emit(out, config.out.as_deref(), &json)?;
            if let Some(path) = &config.transcript {
                std::fs::write(path, serde_json::to_string(&outcome.transcripts)?)?;
            }
            Ok(if outcome.report.pass { EXIT_OK } else { EXIT_FAILED })
        }
        Command::Audit(args) => {
            let config = args.params.resolve()?;
            let report = cmd_audit(&config, args.stat, args.mutate, args.trials)?;
            let mut json = report.to_json()?;
            json.push('\n');
            emit(out, config.out.as_deref(), &json)?;
            Ok(if report.pass { EXIT_OK } else { EXIT_FAILED })
        }
        Command::Matrix(args) => {
            let s = cmd_matrix(args.n, args.r, args.m)?;
            let json = s.to_json()?;
            if let Some(p) = &args.out {
                std::fs::write(p, &json)?;
            }
            if args.json {
                out.write_all(json.as_bytes())?;
                out.write_all(b"\n")?;
            } else {
                out.write_all(s.render_text().as_bytes())?;
            }
            Ok(EXIT_OK)
        }
    }
}

/// Entry point for the binary.
pub fn main() -> i32 {
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match execute(&cli, &mut lock) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INVALID
        }
    }
}
