// SPDX-License-Identifier: Apache-2.0

//! `spectra-lab`: instrument, run, diagnose and report.
//!
//! Exit codes: 0 success, 1 internal error, 2 usage, 3 parse, 4 I/O,
//! 5 already instrumented, 6 scenario validation, 7 empty selector.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Parser, Subcommand};
use spectra_lab::diagnosis::{
    accuracy, load_delta, parse_truth, render_report, suspects, window_mean, DiagnosisError, EpochSelector,
};
use spectra_lab::instrument::{instrument, InstrumentError, Manifest, Scope};
use spectra_lab::minic::{parse, print};
use spectra_lab::sim::{events_to_string, load_to_csv, parse_load_csv, run_scenario, Scenario, SimError};
use spectra_lab::spectrum::SpectraLog;
use spectra_lab::vm::CostModel;

const USAGE: u8 = 2;
const PARSE: u8 = 3;
const IO: u8 = 4;
const ALREADY_INSTRUMENTED: u8 = 5;
const SCENARIO: u8 = 6;
const EMPTY_SELECTOR: u8 = 7;
const INTERNAL: u8 = 1;

#[derive(Parser)]
#[command(name = "spectra-lab", version, about = "Program-spectra fault diagnosis lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Insert probes into a Mini-C program and write its manifest.
    Instrument {
        input: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value = "all")]
        scope: Scope,
        /// Handler names, one per line, in registration order (dispatch scope).
        #[arg(long)]
        handlers: Option<PathBuf>,
    },
    /// Simulate a scenario and write spectra, load and event logs.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        program: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        spectra: PathBuf,
        #[arg(long)]
        load: PathBuf,
        #[arg(long)]
        events: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        capacity: Option<usize>,
        /// Line speed in bits per second (10 bits per byte on the wire).
        #[arg(long)]
        baud: Option<u32>,
    },
    /// Compare pass and fail spectra.
    Diagnose {
        #[arg(long)]
        spectra: PathBuf,
        #[arg(long)]
        pass: EpochSelector,
        #[arg(long)]
        fail: EpochSelector,
        /// Faulty function names, one per line.
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Names for the report; ids print as `f<id>` without it.
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Gnuplot table of a load CSV plus plateau means.
    Report {
        #[arg(long)]
        load: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Named window of seconds, e.g. `TV1=10..59`. Repeatable.
        #[arg(long = "window")]
        windows: Vec<Window>,
    },
}

#[derive(Debug, Clone)]
struct Window {
    name: String,
    seconds: RangeInclusive<u32>,
}

impl FromStr for Window {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("expected name=a..b, got `{s}`");
        let (name, range) = s.split_once('=').ok_or_else(bad)?;
        let (a, b) = range.split_once("..").ok_or_else(bad)?;
        let a: u32 = a.trim().parse().map_err(|_| bad())?;
        let b: u32 = b.trim().parse().map_err(|_| bad())?;
        if name.is_empty() || a > b {
            return Err(bad());
        }
        Ok(Window { name: name.to_string(), seconds: a..=b })
    }
}

struct Failure {
    code: u8,
    message: String,
}

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure { code, message: message.into() }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| fail(IO, format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| fail(IO, format!("{}: {e}", path.display())))
}

fn parse_program(path: &Path) -> Result<spectra_lab::minic::Program, Failure> {
    parse(&read(path)?).map_err(|e| fail(PARSE, format!("{}:{e}", path.display())))
}

fn parse_manifest(path: &Path) -> Result<Manifest, Failure> {
    Manifest::parse(&read(path)?).map_err(|e| fail(PARSE, format!("{}: {e}", path.display())))
}

fn cmd_instrument(
    input: &Path,
    out: &Path,
    manifest: &Path,
    scope: Scope,
    handlers: Option<&Path>,
) -> Result<(), Failure> {
    let program = parse_program(input)?;
    let names: Vec<String> = match (scope, handlers) {
        (Scope::DispatchEntry, Some(h)) => read(h)?
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_string)
            .collect(),
        (Scope::DispatchEntry, None) => return Err(fail(USAGE, "--scope dispatch needs --handlers <file>")),
        (Scope::AllCalls, Some(_)) => return Err(fail(USAGE, "--handlers only applies to --scope dispatch")),
        (Scope::AllCalls, None) => Vec::new(),
    };
    let (program, m) = instrument(program, scope, &names).map_err(|e| match e {
        InstrumentError::AlreadyInstrumented(_) => fail(ALREADY_INSTRUMENTED, format!("{}:{e}", input.display())),
        other => fail(PARSE, other.to_string()),
    })?;
    write(out, &print(&program))?;
    write(manifest, &m.to_file_string())?;
    println!("instrumented {} functions ({scope} scope)", m.n_funcs());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_run(
    scenario: &Path,
    program: &Path,
    manifest: &Path,
    spectra: &Path,
    load: &Path,
    events: Option<&Path>,
    seed: Option<u64>,
    capacity: Option<usize>,
    baud: Option<u32>,
) -> Result<(), Failure> {
    let outputs: Vec<&Path> = [Some(spectra), Some(load), events].into_iter().flatten().collect();
    let inputs = [scenario, program, manifest];
    let distinct: BTreeSet<&Path> = outputs.iter().chain(&inputs).copied().collect();
    if distinct.len() != outputs.len() + inputs.len() {
        return Err(fail(USAGE, "input and output paths must all be distinct"));
    }
    let mut sc =
        Scenario::parse(&read(scenario)?).map_err(|e| fail(SCENARIO, format!("{}: {e}", scenario.display())))?;
    if let Some(s) = seed {
        sc.seed = s;
    }
    if let Some(c) = capacity {
        sc.capacity = c;
    }
    if let Some(b) = baud {
        sc.bytes_per_second = b / 10;
    }
    let program = parse_program(program)?;
    let manifest = parse_manifest(manifest)?;
    let out = run_scenario(&program, &sc, &manifest, CostModel::default(), true).map_err(|e| match e {
        SimError::Spectrum(_) | SimError::Codec(_) | SimError::Reassembly(_) => fail(INTERNAL, e.to_string()),
        other => fail(SCENARIO, other.to_string()),
    })?;
    write(spectra, &out.spectra.to_log_string())?;
    write(load, &load_to_csv(&out.load))?;
    if let Some(events) = events {
        write(events, &events_to_string(&out.events))?;
    }
    println!("{}", out.summary);
    Ok(())
}

fn cmd_diagnose(
    spectra: &Path,
    pass: &EpochSelector,
    fail_sel: &EpochSelector,
    truth: Option<&Path>,
    manifest: Option<&Path>,
    out: &Path,
) -> Result<(), Failure> {
    let log = SpectraLog::parse(&read(spectra)?).map_err(|e| fail(PARSE, format!("{}: {e}", spectra.display())))?;
    let manifest = manifest.map(parse_manifest).transpose()?;
    let report = suspects(&pass.resolve(&log), &fail_sel.resolve(&log)).map_err(|e| match e {
        DiagnosisError::EmptySet(_) => fail(EMPTY_SELECTOR, e.to_string()),
        other => fail(PARSE, other.to_string()),
    })?;
    let acc = match truth {
        Some(t) => {
            let ids =
                parse_truth(&read(t)?, manifest.as_ref()).map_err(|e| fail(PARSE, format!("{}: {e}", t.display())))?;
            Some(accuracy(&report, &ids))
        }
        None => None,
    };
    let text = render_report(&report, manifest.as_ref(), pass, fail_sel, acc);
    write(out, &text)?;
    for line in text.lines().filter(|l| !l.starts_with('#')) {
        println!("{line}");
    }
    Ok(())
}

fn default_windows() -> Vec<Window> {
    vec![
        Window { name: "TV1".into(), seconds: spectra_lab::replica::TV1_SECONDS },
        Window { name: "TV2".into(), seconds: spectra_lab::replica::TV2_SECONDS },
    ]
}

fn cmd_report(load: &Path, out: Option<&Path>, windows: Vec<Window>) -> Result<(), Failure> {
    let series = parse_load_csv(&read(load)?).map_err(|e| fail(PARSE, format!("{}: {e}", load.display())))?;
    if series.is_empty() {
        return Err(fail(IO, format!("{}: no load samples", load.display())));
    }
    let windows = if windows.is_empty() { default_windows() } else { windows };
    let mut summary = String::new();
    for w in &windows {
        let mean = window_mean(&series, &w.seconds)
            .ok_or_else(|| fail(USAGE, format!("window {} selects no samples", w.name)))?;
        let _ = writeln!(summary, "{} mean={mean:.4}", w.name);
    }
    if let [first, .., last] = windows.as_slice() {
        let d =
            load_delta(&series, first.seconds.clone(), last.seconds.clone()).map_err(|e| fail(USAGE, e.to_string()))?;
        let _ = writeln!(summary, "delta={:.2} points ({} - {})", d.delta_points, last.name, first.name);
    }
    let mut table = String::from("# second load\n");
    for (s, l) in &series {
        let _ = writeln!(table, "{s} {l:.3}");
    }
    for line in summary.lines() {
        let _ = writeln!(table, "# {line}");
    }
    match out {
        Some(path) => {
            write(path, &table)?;
            print!("{summary}");
        }
        None => print!("{table}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Instrument { input, out, manifest, scope, handlers } => {
            cmd_instrument(&input, &out, &manifest, scope, handlers.as_deref())
        }
        Command::Run { scenario, program, manifest, spectra, load, events, seed, capacity, baud } => {
            cmd_run(&scenario, &program, &manifest, &spectra, &load, events.as_deref(), seed, capacity, baud)
        }
        Command::Diagnose { spectra, pass, fail, truth, manifest, out } => {
            cmd_diagnose(&spectra, &pass, &fail, truth.as_deref(), manifest.as_deref(), &out)
        }
        Command::Report { load, out, windows } => cmd_report(&load, out.as_deref(), windows),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("spectra-lab: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
