use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use zeckvec::analytics::{check_with, gaussian_diagnostics, summand_distribution, MinimalityOracle, SampleMode};
use zeckvec::bridge::{ball_coverage, region_d, DEFAULT_CAP};
use zeckvec::export::{diagnostics_json, region_csv, region_svg, stats_csv, trace_jsonl};
use zeckvec::normalize::{decompose_traced, probe_termination, spanning_probe, ProbeOutcome};
use zeckvec::recurrence::parse_coeffs;
use zeckvec::representation::{classify, evaluate, SrKind};
use zeckvec::{CoefficientString, Error, LatticeVector, Mode, RecurrenceVector, ScalarSequence, VectorSequence};

#[derive(Parser)]
#[command(name = "zeckvec", version, about = "Zeckendorf-style representations of lattice points")]
struct Cli {
    /// Enumeration cap; overrides ZECKVEC_CAP.
    #[arg(long, global = true)]
    cap: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Strict,
    Relaxed,
}

#[derive(Args)]
struct Rec {
    /// Recurrence coefficients, e.g. 2,1,1.
    #[arg(long = "c", value_name = "C1,..,CK")]
    coeffs: String,
    /// Constructor checks applied to --c (default depends on the command).
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
}

impl Rec {
    fn build(&self, default: Mode) -> Result<RecurrenceVector> {
        let mode = match self.mode {
            Some(ModeArg::Strict) => Mode::Strict,
            Some(ModeArg::Relaxed) => Mode::Relaxed,
            None => default,
        };
        let coeffs = parse_coeffs(&self.coeffs)?;
        Ok(RecurrenceVector::new(coeffs, mode)?)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Scalar terms X_n, one per line.
    Seq {
        #[command(flatten)]
        rec: Rec,
        #[arg(long, allow_hyphen_values = true)]
        from: i64,
        #[arg(long, allow_hyphen_values = true)]
        to: i64,
    },
    /// Vector terms X⃗_n as tuples, one per line.
    Vec {
        #[command(flatten)]
        rec: Rec,
        #[arg(long, allow_hyphen_values = true)]
        from: i64,
        #[arg(long, allow_hyphen_values = true)]
        to: i64,
    },
    /// Satisfying representation of a lattice vector.
    Decompose {
        #[command(flatten)]
        rec: Rec,
        #[arg(long, allow_hyphen_values = true)]
        v: String,
        /// Write the normalization trace as JSON lines.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Classify a coefficient string and print its value.
    Verify {
        #[command(flatten)]
        rec: Rec,
        #[arg(long)]
        a: String,
    },
    /// Export the region D_n.
    Regions {
        #[command(flatten)]
        rec: Rec,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Summand count statistics over [X_n, X_{n+1}).
    Stats {
        #[command(flatten)]
        rec: Rec,
        #[arg(long)]
        n_min: usize,
        #[arg(long)]
        n_max: usize,
        /// Sample size; exact enumeration when omitted.
        #[arg(long)]
        sample: Option<u64>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        json: Option<PathBuf>,
        /// (n, mean, variance) series.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Compare SR summand counts with a breadth-first minimum over D_n.
    Minimality {
        #[command(flatten)]
        rec: Rec,
        #[arg(long)]
        n: usize,
        /// Support bound for the search; defaults to n + k.
        #[arg(long)]
        bound: Option<usize>,
        #[arg(long, default_value_t = zeckvec::analytics::DEFAULT_NODE_CAP)]
        node_cap: usize,
    },
    /// Run normalization on a string with a step budget.
    Probe {
        #[command(flatten)]
        rec: Rec,
        #[arg(long)]
        a: String,
        #[arg(long, default_value_t = zeckvec::normalize::DEFAULT_BUDGET)]
        budget: usize,
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Smallest n with the sup-norm ball of radius r inside D_n.
    Cover {
        #[command(flatten)]
        rec: Rec,
        #[arg(long)]
        r: u64,
    },
    /// Check that every point of a ball has some bounded representation.
    Span {
        #[command(flatten)]
        rec: Rec,
        #[arg(long)]
        r: u64,
        #[arg(long)]
        bound: usize,
    },
}

fn cap(cli: &Cli) -> Result<u64> {
    if let Some(c) = cli.cap {
        return Ok(c);
    }
    match std::env::var("ZECKVEC_CAP") {
        Ok(s) => s.trim().parse().with_context(|| format!("ZECKVEC_CAP={s:?} is not an integer")),
        Err(_) => Ok(DEFAULT_CAP),
    }
}

/// Writes through a sibling temporary file so readers never see a partial file.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path.file_name().context("output path has no file name")?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    let res = (|| -> std::io::Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if res.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    res.with_context(|| format!("writing {}", path.display()))
}

fn parse_vector(s: &str) -> Result<LatticeVector> {
    Ok(s.parse::<LatticeVector>()?)
}

fn parse_string(s: &str) -> Result<CoefficientString> {
    Ok(s.parse::<CoefficientString>()?)
}

fn run(cli: &Cli) -> Result<()> {
    let out = &mut std::io::stdout().lock();
    match &cli.command {
        Command::Seq { rec, from, to } => {
            let c = rec.build(Mode::Relaxed)?;
            let mut seq = ScalarSequence::new(&c);
            for n in *from..=*to {
                writeln!(out, "{}", seq.term(n))?;
            }
        }
        Command::Vec { rec, from, to } => {
            let c = rec.build(Mode::Relaxed)?;
            let mut seq = VectorSequence::new(&c);
            for n in *from..=*to {
                writeln!(out, "{}", seq.get(n))?;
            }
        }
        Command::Decompose { rec, v, trace } => {
            let c = rec.build(Mode::Strict)?;
            let v = parse_vector(v)?;
            let (a, t) = decompose_traced(&c, &v)?;
            writeln!(out, "{a}")?;
            if let Some(p) = trace {
                write_atomic(p, trace_jsonl(&t).as_bytes())?;
            }
        }
        Command::Verify { rec, a } => {
            let c = rec.build(Mode::Relaxed)?;
            let a = parse_string(a)?;
            let cls = classify(&c, &a);
            let kind = match cls.kind {
                SrKind::Sr => "SR".to_string(),
                SrKind::Nsr { witness } => format!("NSR (decrementing position {witness} gives an SR)"),
                SrKind::Other => "Other".to_string(),
            };
            writeln!(out, "{kind}")?;
            if let Some(p) = cls.first_overfilled {
                writeln!(out, "not SR: element too large at position {p}")?;
            }
            writeln!(out, "value {}", evaluate(&c, &a))?;
        }
        Command::Regions { rec, n, csv, svg } => {
            let c = rec.build(Mode::Strict)?;
            let set = region_d(&c, *n, cap(cli)?)?;
            writeln!(out, "|D_{n}| = {}", set.len())?;
            if let Some(p) = csv {
                write_atomic(p, region_csv(&set, c.dim())?.as_bytes())?;
            }
            if let Some(p) = svg {
                if c.dim() == 2 {
                    write_atomic(p, region_svg(&set, c.dim())?.as_bytes())?;
                } else {
                    eprintln!("notice: SVG needs k = 3; skipped {} (use --csv)", p.display());
                }
            }
        }
        Command::Stats { rec, n_min, n_max, sample, seed, json, csv } => {
            let c = rec.build(Mode::Strict)?;
            if n_min > n_max {
                bail!("--n-min {n_min} exceeds --n-max {n_max}");
            }
            let mode = match sample {
                Some(size) => SampleMode::Sampled { size: *size, seed: *seed },
                None => SampleMode::Exact,
            };
            let cap = cap(cli)?;
            let stats = (*n_min..=*n_max)
                .map(|n| summand_distribution(&c, n, mode, cap))
                .collect::<zeckvec::Result<Vec<_>>>()?;
            writeln!(out, "n\tmean\tvariance\tskewness\texcess_kurtosis")?;
            for s in &stats {
                writeln!(
                    out,
                    "{}\t{}\t{}\t{}\t{}",
                    s.n,
                    fmt6(s.mean),
                    fmt6(s.variance),
                    fmt6(s.skewness),
                    fmt6(s.excess_kurtosis)
                )?;
            }
            let report = (stats.len() >= 3).then(|| gaussian_diagnostics(&stats)).transpose()?;
            if let Some(r) = &report {
                writeln!(
                    out,
                    "mean fit: slope {} intercept {} R^2 {}",
                    fmt6(r.mean_fit.slope),
                    fmt6(r.mean_fit.intercept),
                    fmt6(r.mean_fit.r_squared)
                )?;
                writeln!(
                    out,
                    "variance fit: slope {} intercept {} R^2 {}",
                    fmt6(r.variance_fit.slope),
                    fmt6(r.variance_fit.intercept),
                    fmt6(r.variance_fit.r_squared)
                )?;
                if let Some(l) = &r.lekkerkerker {
                    writeln!(
                        out,
                        "Lekkerkerker: fitted {} target {} deviation {}",
                        fmt6(l.fitted_slope),
                        fmt6(l.target),
                        fmt6(l.deviation)
                    )?;
                }
            }
            if let Some(p) = json {
                let value = match &report {
                    Some(r) => diagnostics_json(&stats, r),
                    None => serde_json::Value::Array(stats.iter().map(zeckvec::export::stats_json).collect()),
                };
                let mut text = serde_json::to_string_pretty(&value)?;
                text.push('\n');
                write_atomic(p, text.as_bytes())?;
            }
            if let Some(p) = csv {
                write_atomic(p, stats_csv(&stats).as_bytes())?;
            }
        }
        Command::Minimality { rec, n, bound, node_cap } => {
            let c = rec.build(Mode::Strict)?;
            let bound = bound.unwrap_or(n + c.k());
            let set = region_d(&c, *n, cap(cli)?)?;
            let mut oracle = MinimalityOracle::new(&c, bound, *node_cap);
            let mut points: Vec<&LatticeVector> = set.members.iter().map(|m| &m.point).collect();
            points.sort();
            let mut bad = 0;
            for v in &points {
                let r = check_with(&c, v, &mut oracle)?;
                if !r.minimal {
                    bad += 1;
                }
                let verdict = if r.minimal { "ok" } else { "NOT MINIMAL" };
                writeln!(out, "{v}\tSR {}\tmin {}\t{verdict}", r.sr_count, r.oracle_min)?;
            }
            writeln!(out, "{} vectors, {} minimal, {bad} not minimal", points.len(), points.len() - bad)?;
        }
        Command::Probe { rec, a, budget, trace } => {
            let c = rec.build(Mode::Relaxed)?;
            let a = parse_string(a)?;
            let report = probe_termination(&c, &a, *budget)?;
            match &report.outcome {
                ProbeOutcome::Terminated { result, steps } => {
                    writeln!(out, "Terminated after {steps} steps")?;
                    writeln!(out, "result {result}")?;
                }
                ProbeOutcome::BudgetExceeded { reason, max_support, steps } => {
                    writeln!(
                        out,
                        "BudgetExceeded ({reason:?}) after {steps} of {} steps, max support {max_support}",
                        report.budget
                    )?;
                }
            }
            for (i, s) in report.trace.strings().take(5).enumerate() {
                writeln!(out, "step {}: {s}", i + 1)?;
            }
            if let Some(r) = &report.recurring_suffix {
                let suffix: Vec<String> = r.suffix.iter().map(u64::to_string).collect();
                writeln!(
                    out,
                    "recurring suffix ({}) at chunk starts {} and {}",
                    suffix.join(","),
                    r.first_start,
                    r.repeat_start
                )?;
            }
            if let Some(p) = trace {
                write_atomic(p, trace_jsonl(&report.trace).as_bytes())?;
            }
        }
        Command::Cover { rec, r } => {
            let c = rec.build(Mode::Strict)?;
            writeln!(out, "{}", ball_coverage(&c, *r, cap(cli)?)?)?;
        }
        Command::Span { rec, r, bound } => {
            let c = rec.build(Mode::Relaxed)?;
            let report = spanning_probe(&c, *r, *bound)?;
            if report.all_representable {
                writeln!(out, "all points of radius {r} representable")?;
            } else {
                writeln!(out, "{} points not representable with support <= {bound}", report.failures.len())?;
                for v in &report.failures {
                    writeln!(out, "{v}")?;
                }
            }
        }
    }
    Ok(())
}

fn fmt6(x: f64) -> String {
    format!("{}", zeckvec::analytics::sig6(x))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let limit = matches!(
                e.downcast_ref::<Error>(),
                Some(Error::CapExceeded { .. } | Error::OracleExhausted(_) | Error::NonTermination(_))
            );
            ExitCode::from(if limit { 2 } else { 1 })
        }
    }
}
