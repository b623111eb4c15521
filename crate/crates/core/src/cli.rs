//! Command-line front end.
//!
//! Exit codes: 0 success, 1 simulation or verification failure, 2 usage error.

use std::ffi::OsString;
use std::io::Write;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::bsa::{Analyzer, BellLabel, ClassificationTable, ORACLE_SEED, ORACLE_VECTORS, SUPPORT_TOL, CHECK_TOL};
use crate::circuit::{assemble_unitary, builtin, parse_circuit, validate, Circuit};
use crate::error::Error;
use crate::gates::Implementation;
use crate::measurement::OutcomeRecord;
use crate::state::AmplitudeMap;

#[derive(Debug, Parser)]
#[command(name = "hyperbsa", version, about = "Polarization Bell-state analyzer simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ImplArg {
    Canonical,
    Decomposed,
}

impl From<ImplArg> for Implementation {
    fn from(i: ImplArg) -> Self {
        match i {
            ImplArg::Canonical => Implementation::Canonical,
            ImplArg::Decomposed => Implementation::Decomposed,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Circuit file, or `builtin:fig2`.
    #[arg(long, default_value = "builtin:fig2")]
    pub circuit: String,
    /// Implementation of composite stages.
    #[arg(long = "impl", value_enum)]
    pub implementation: Option<ImplArg>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Override the OAM truncation bound.
    #[arg(long, value_parser = clap::value_parser!(i32).range(1..=64))]
    pub lmax: Option<i32>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the coincidence distribution for one input state.
    Run {
        #[arg(long, value_parser = parse_label)]
        input: BellLabel,
        #[command(flatten)]
        common: Common,
    },
    /// Check deterministic discrimination end to end.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Seed for the random-vector oracle comparison.
        #[arg(long, default_value_t = ORACLE_SEED)]
        seed: u64,
        /// Relabel one table entry (fault injection).
        #[arg(long, hide = true)]
        tamper: Option<usize>,
    },
    /// Dump the state after each analyzer stage with its reference fidelity.
    Stages {
        #[arg(long, value_parser = parse_label)]
        input: BellLabel,
        #[command(flatten)]
        common: Common,
    },
    /// Print a circuit in canonical form with validation notes.
    Describe {
        #[command(flatten)]
        common: Common,
    },
    /// Print the pattern-to-state classification table.
    ExportTable {
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Compare sparse propagation with the dense matrix oracle.
    Oracle {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = ORACLE_SEED)]
        seed: u64,
    },
}

fn parse_label(s: &str) -> Result<BellLabel, String> {
    s.parse()
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
    /// Report text that still belongs on stdout.
    pub output: Option<String>,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
            output: None,
        }
    }

    fn domain(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: message.into(),
            output: None,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::domain(e.to_string())
    }
}

fn measurement_error(e: Error) -> Failure {
    match e {
        Error::UnsortableOam { .. } | Error::LeakedAmplitude(_) => {
            Failure::domain(format!("detection (sppm): {e}"))
        }
        other => other.into(),
    }
}

fn load_circuit(common: &Common) -> Result<Circuit, Failure> {
    let text = match common.circuit.strip_prefix("builtin:") {
        Some(name) => builtin(name)
            .ok_or_else(|| Failure::usage(format!("unknown built-in circuit `{name}` (available: fig2)")))?
            .to_string(),
        None => std::fs::read_to_string(&common.circuit)
            .map_err(|e| Failure::usage(format!("cannot read `{}`: {e}", common.circuit)))?,
    };
    let mut c = parse_circuit(&text).map_err(|e| Failure::domain(format!("{}: {e}", common.circuit)))?;
    if let Some(i) = common.implementation {
        c = c.with_impl(i.into());
    }
    if let Some(l) = common.lmax {
        c = c.with_lmax(l);
    }
    Ok(c)
}

fn analyzer(common: &Common) -> Result<Analyzer, Failure> {
    Ok(Analyzer::new(load_circuit(common)?, ClassificationTable::published()?))
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

/// Fixed-point with 12 decimals, never printing `-0`.
fn fixed(x: f64) -> String {
    let s = format!("{x:+.12}");
    if s == "-0.000000000000" {
        "+0.000000000000".into()
    } else {
        s
    }
}

#[derive(Serialize)]
struct RunDocument<'a> {
    input: BellLabel,
    circuit: &'a str,
    implementation: Option<Implementation>,
    lmax: i32,
    total_probability: f64,
    outcomes: Vec<OutcomeRecord>,
}

fn cmd_run(input: BellLabel, common: &Common) -> Result<String, Failure> {
    let an = analyzer(common)?;
    let state = an.prepare_input(input)?;
    let out = crate::circuit::propagate(&an.circuit, &state)?;
    let (oa, ob) = an.origins();
    let dist = crate::measurement::sppm_project(&out, &oa, &ob).map_err(measurement_error)?;
    Ok(match common.format {
        Format::Text => dist.to_text(SUPPORT_TOL),
        Format::Json => json(&RunDocument {
            input,
            circuit: &common.circuit,
            implementation: common.implementation.map(Into::into),
            lmax: an.circuit.lmax,
            total_probability: dist.total(),
            outcomes: dist.records(),
        }),
    })
}

fn cmd_verify(common: &Common, seed: u64, tamper: Option<usize>) -> Result<String, Failure> {
    let modes: Vec<Implementation> = match common.implementation {
        Some(i) => vec![i.into()],
        None => vec![Implementation::Canonical, Implementation::Decomposed],
    };
    let base = Common {
        implementation: None,
        ..common.clone()
    };
    let mut reports = Vec::new();
    for mode in modes {
        let mut an = analyzer(&base)?;
        an.circuit = an.circuit.with_impl(mode);
        if let Some(i) = tamper {
            an.table = an.table.tampered(i).0;
        }
        reports.push(an.verify_seeded(seed)?);
    }
    let text = match common.format {
        Format::Text => reports.iter().map(|r| r.to_text()).collect::<Vec<_>>().join("\n"),
        Format::Json => json(&reports),
    };
    let failed: Vec<String> = reports
        .iter()
        .flat_map(|r| {
            r.failed_checks()
                .map(move |c| format!("{} [{}]: {}", c.name, r.implementation, c.detail))
        })
        .collect();
    if failed.is_empty() {
        Ok(text)
    } else {
        Err(Failure {
            output: Some(text),
            ..Failure::domain(format!("verification failed: {}", failed.join(" | ")))
        })
    }
}

#[derive(Serialize)]
struct StageDocument {
    checkpoint: String,
    stage: usize,
    fidelity: f64,
    amplitudes: Vec<AmplitudeRecord>,
}

#[derive(Serialize)]
struct AmplitudeRecord {
    a: String,
    b: String,
    re: f64,
    im: f64,
}

fn cmd_stages(input: BellLabel, common: &Common) -> Result<String, Failure> {
    let an = analyzer(common)?;
    let space = an.space()?;
    let snaps = an.stage_states(input)?;
    let mut blocks = Vec::new();
    let mut worst: f64 = 1.0;
    for s in &snaps {
        let reference = crate::bsa::reference_state(input, s.checkpoint, &space)?;
        let f = crate::state::fidelity(&s.state, &reference)?;
        worst = worst.min(f);
        let amplitudes = s
            .state
            .amplitudes()
            .iter()
            .map(|((a, b), c)| AmplitudeRecord {
                a: a.to_string(),
                b: b.to_string(),
                re: c.re,
                im: c.im,
            })
            .collect();
        blocks.push(StageDocument {
            checkpoint: s.checkpoint.title().to_string(),
            stage: s.stage_number,
            fidelity: f,
            amplitudes,
        });
    }
    let text = match common.format {
        Format::Json => json(&blocks),
        Format::Text => {
            let mut t = String::new();
            for b in &blocks {
                t.push_str(&format!(
                    "stage {} ({}): fidelity {:.12}\n",
                    b.stage, b.checkpoint, b.fidelity
                ));
                for r in &b.amplitudes {
                    t.push_str(&format!("  {}{}i  {} ⊗ {}\n", fixed(r.re), fixed(r.im), r.a, r.b));
                }
            }
            t
        }
    };
    if worst < 1.0 - CHECK_TOL {
        Err(Failure::domain(format!("{text}stage fidelity {worst:.12} below 1 - 1e-10")))
    } else {
        Ok(text)
    }
}

fn cmd_describe(common: &Common) -> Result<String, Failure> {
    let c = load_circuit(common)?;
    let report = validate(&c);
    let mut t = c.to_string();
    for line in report.to_string().lines() {
        t.push_str("# ");
        t.push_str(line);
        t.push('\n');
    }
    if report.is_ok() {
        Ok(t)
    } else {
        Err(Failure::domain(format!("{t}circuit has validation errors")))
    }
}

fn cmd_export_table(format: Format) -> Result<String, Failure> {
    let t = ClassificationTable::published()?;
    Ok(match format {
        Format::Json => {
            let mut s = t.to_json();
            s.push('\n');
            s
        }
        Format::Text => t
            .rows()
            .iter()
            .map(|r| format!("{}  {}\n", r.pattern, r.label))
            .collect(),
    })
}

#[derive(Serialize)]
struct OracleDocument {
    total_variation: f64,
    random_vectors: usize,
    seed: u64,
    random_vector_residual: f64,
    unitarity_residual: f64,
    passed: bool,
}

fn cmd_oracle(common: &Common, seed: u64) -> Result<String, Failure> {
    let an = analyzer(common)?;
    let u = assemble_unitary(&an.circuit)?;
    let mut tv: f64 = 0.0;
    for label in BellLabel::ALL {
        let sparse = an.analyze(label).map_err(measurement_error)?;
        let dense = an.analyze_dense(label, &u).map_err(measurement_error)?;
        tv = tv.max(sparse.total_variation(&dense)?);
    }
    let rv = an.random_vector_check(&u, seed, ORACLE_VECTORS)?;
    let ur = u.max_stage_residual();
    let doc = OracleDocument {
        total_variation: tv,
        random_vectors: ORACLE_VECTORS,
        seed,
        random_vector_residual: rv,
        unitarity_residual: ur,
        passed: tv <= CHECK_TOL && rv <= CHECK_TOL && ur <= CHECK_TOL,
    };
    let text = match common.format {
        Format::Json => json(&doc),
        Format::Text => format!(
            "total_variation: {:.3e}\nrandom_vectors: {} (seed {})\nrandom_vector_residual: {:.3e}\nunitarity_residual: {:.3e}\nresult: {}\n",
            doc.total_variation,
            doc.random_vectors,
            doc.seed,
            doc.random_vector_residual,
            doc.unitarity_residual,
            if doc.passed { "PASS" } else { "FAIL" }
        ),
    };
    if doc.passed {
        Ok(text)
    } else {
        Err(Failure::domain(format!("{text}oracle disagreement above 1e-10")))
    }
}

pub fn execute(cli: &Cli) -> Result<String, Failure> {
    match &cli.command {
        Command::Run { input, common } => cmd_run(*input, common),
        Command::Verify { common, seed, tamper } => cmd_verify(common, *seed, *tamper),
        Command::Stages { input, common } => cmd_stages(*input, common),
        Command::Describe { common } => cmd_describe(common),
        Command::ExportTable { format } => cmd_export_table(*format),
        Command::Oracle { common, seed } => cmd_oracle(common, *seed),
    }
}

/// Parses `args` (including the program name), runs the command and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            if code == 0 {
                let _ = out.write_all(text.as_bytes());
            } else {
                let _ = err.write_all(text.as_bytes());
            }
            return code;
        }
    };
    match execute(&cli) {
        Ok(text) => {
            let _ = out.write_all(text.as_bytes());
            0
        }
        Err(f) => {
            if let Some(text) = &f.output {
                let _ = out.write_all(text.as_bytes());
            }
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}
