use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use omega_core::config::ExperimentConfig;
use omega_core::consensus::OmegaConsensus;
use omega_core::extractor::{run_reduction, ProbeRecord, ReductionProcess, ReductionVerdict};
use omega_core::sim::{write_jsonl, System};
use omega_core::suites::{extract_batch, run_suite, Suite};
use omega_core::ProcessId;
use serde::Serialize;

/// Extract an eventual leader from a consensus-solving failure detector,
/// on a deterministic shared-memory simulator.
#[derive(Parser)]
#[command(name = "omega", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One end-to-end reduction run.
    Run(ExperimentArgs),
    /// A named property suite.
    Suite {
        /// sa | consensus | dag | simulation | bg | replay | extract
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// The same experiment over consecutive seeds; reports the pass rate.
    Batch {
        #[arg(long, default_value_t = 50)]
        seeds: u64,
        #[command(flatten)]
        experiment: ExperimentArgs,
    },
    /// Re-executes the run dumped in a directory and diffs its trace.
    Replay {
        /// Directory written by `run --out`.
        dir: PathBuf,
    },
}

/// Flags mirror the config-file keys and override the file.
#[derive(Args, Clone, Default)]
struct ExperimentArgs {
    /// Config file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    /// Crash as pN@T; repeatable.
    #[arg(long)]
    crash: Vec<String>,
    #[arg(long)]
    detector: Option<String>,
    #[arg(long)]
    t_stab: Option<u64>,
    #[arg(long)]
    leader: Option<String>,
    #[arg(long)]
    noise_seed: Option<u64>,
    /// random | round-robin
    #[arg(long)]
    scheduler: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long)]
    tail_window: Option<usize>,
    #[arg(long)]
    explore_ratio: Option<u32>,
    #[arg(long)]
    probe_tail: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl ExperimentArgs {
    fn resolve(&self) -> omega_core::Result<ExperimentConfig> {
        let mut config = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| omega_core::Error::Config(format!("{}: {e}", path.display())))?;
                ExperimentConfig::parse(&text)?
            }
            None => ExperimentConfig::default(),
        };
        let mut set = |key: &str, value: Option<String>| match value {
            Some(v) => config.set(key, &v),
            None => Ok(()),
        };
        set("n", self.n.map(|v| v.to_string()))?;
        for c in &self.crash {
            set("crash", Some(c.clone()))?;
        }
        set("detector", self.detector.clone())?;
        set("t_stab", self.t_stab.map(|v| v.to_string()))?;
        set("leader", self.leader.clone())?;
        set("noise_seed", self.noise_seed.map(|v| v.to_string()))?;
        set("scheduler", self.scheduler.clone())?;
        set("seed", self.seed.map(|v| v.to_string()))?;
        set("budget", self.budget.map(|v| v.to_string()))?;
        set("tail_window", self.tail_window.map(|v| v.to_string()))?;
        set("explore_ratio", self.explore_ratio.map(|v| v.to_string()))?;
        set("probe_tail", self.probe_tail.map(|v| v.to_string()))?;
        set("out", self.out.as_ref().map(|p| p.display().to_string()))?;
        config.validate()?;
        Ok(config)
    }
}

/// A run of equal outputs in one process's extracted Ω stream.
#[derive(Serialize)]
struct Segment {
    proc: ProcessId,
    start: usize,
    len: usize,
    out: ProcessId,
}

fn segments(proc: ProcessId, outputs: &[ProcessId]) -> Vec<Segment> {
    let mut segs: Vec<Segment> = Vec::new();
    for (i, &out) in outputs.iter().enumerate() {
        match segs.last_mut() {
            Some(s) if s.out == out => s.len += 1,
            _ => segs.push(Segment { proc, start: i, len: 1, out }),
        }
    }
    segs
}

fn create(dir: &Path, name: &str) -> anyhow::Result<BufWriter<File>> {
    let path = dir.join(name);
    Ok(BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?))
}

fn write_trace(system: &System<ReductionProcess<OmegaConsensus>>, out: impl Write) -> anyhow::Result<()> {
    write_jsonl(out, system.steps())?;
    Ok(())
}

fn verdict_line(v: &ReductionVerdict) -> String {
    match v.leader {
        Some(l) if v.ok() => format!(
            "PASS stabilized leader {l} after {} steps; probes converged at {:?}",
            v.steps, v.converged
        ),
        _ => {
            let mut s = format!("FAIL no stabilized leader after {} steps", v.steps);
            if v.simulated_safety_violations > 0 || !v.dag_safety {
                s.push_str("; SAFETY VIOLATION");
            }
            if let Some(d) = v.longest_prefix() {
                s.push_str(&format!(
                    "; longest prefix at {}: J={:?} |σ|={} σ={}",
                    d.proc, d.j, d.sigma_len, d.sigma_head
                ));
            }
            s
        }
    }
}

fn cmd_run(args: &ExperimentArgs) -> anyhow::Result<bool> {
    let config = args.resolve()?;
    let reduction = config.reduction(config.out.is_some())?;
    let run = run_reduction(OmegaConsensus::new(config.n), &reduction)?;
    println!("{}", verdict_line(&run.verdict));
    if let Some(dir) = &config.out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        fs::write(dir.join("config.txt"), config.to_text())?;
        write_trace(&run.system, create(dir, "trace.jsonl")?)?;
        let probes: Vec<ProbeRecord> = run.system.procs().iter().flat_map(|p| p.probe_tail().iter().cloned()).collect();
        write_jsonl(create(dir, "probes.jsonl")?, &probes)?;
        let streams: Vec<Segment> = run
            .system
            .procs()
            .iter()
            .enumerate()
            .flat_map(|(i, p)| segments(ProcessId::from_index(i), p.outputs()))
            .collect();
        write_jsonl(create(dir, "streams.jsonl")?, &streams)?;
        let mut v = create(dir, "verdict.json")?;
        serde_json::to_writer_pretty(&mut v, &run.verdict)?;
        v.write_all(b"\n")?;
        v.flush()?;
    }
    Ok(run.verdict.ok())
}

fn cmd_suite(name: &str, out: Option<&Path>) -> anyhow::Result<bool> {
    let suite: Suite = name.parse()?;
    let outcome = run_suite(suite)?;
    let verdict = if outcome.pass { "PASS" } else { "FAIL" };
    println!("{verdict} {suite}: {}", outcome.summary);
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        let mut v = create(dir, "verdict.json")?;
        serde_json::to_writer_pretty(&mut v, &outcome)?;
        v.write_all(b"\n")?;
        v.flush()?;
    }
    Ok(outcome.pass)
}

#[derive(Serialize)]
struct BatchSummary<'a> {
    first_seed: u64,
    seeds: u64,
    stable: u64,
    converged: u64,
    safe: u64,
    pass_rate: f64,
    pass: bool,
    config: &'a str,
}

fn cmd_batch(seeds: u64, args: &ExperimentArgs) -> anyhow::Result<bool> {
    let config = args.resolve()?;
    let first = config.seed;
    let report = extract_batch(&config, first..first + seeds)?;
    println!("{} {}", if report.ok() { "PASS" } else { "FAIL" }, report.summary());
    let text = config.to_text();
    let summary = BatchSummary {
        first_seed: first,
        seeds,
        stable: report.stable,
        converged: report.converged,
        safe: report.safe,
        pass_rate: report.stable_rate(),
        pass: report.ok(),
        config: &text,
    };
    println!("{}", serde_json::to_string(&summary)?);
    if let Some(dir) = &config.out {
        fs::create_dir_all(dir)?;
        let mut v = create(dir, "verdict.json")?;
        serde_json::to_writer_pretty(&mut v, &report)?;
        v.write_all(b"\n")?;
        v.flush()?;
    }
    Ok(report.ok())
}

fn cmd_replay(dir: &Path) -> anyhow::Result<bool> {
    let text = fs::read_to_string(dir.join("config.txt")).with_context(|| format!("reading {}/config.txt", dir.display()))?;
    let config = ExperimentConfig::parse(&text)?;
    let recorded = BufReader::new(File::open(dir.join("trace.jsonl")).context("opening trace.jsonl")?);
    let run = run_reduction(OmegaConsensus::new(config.n), &config.reduction(true)?)?;
    let mut fresh = Vec::new();
    write_trace(&run.system, &mut fresh)?;
    let mut fresh_lines = fresh.split(|&b| b == b'\n').filter(|l| !l.is_empty());
    let mut count = 0usize;
    for line in recorded.lines() {
        let line = line?;
        count += 1;
        match fresh_lines.next() {
            Some(f) if f == line.as_bytes() => {}
            Some(f) => {
                println!("FAIL trace differs at line {count}:\n  recorded: {line}\n  replayed: {}", String::from_utf8_lossy(f));
                return Ok(false);
            }
            None => {
                println!("FAIL replay ended after {} steps, recording has more", count - 1);
                return Ok(false);
            }
        }
    }
    if fresh_lines.next().is_some() {
        println!("FAIL replay ran past the recorded {count} steps");
        return Ok(false);
    }
    if count == 0 {
        bail!("trace.jsonl is empty");
    }
    println!("PASS replay reproduced all {count} steps; {}", verdict_line(&run.verdict));
    Ok(true)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Suite { name, out } => cmd_suite(name, out.as_deref()),
        Command::Batch { seeds, experiment } => cmd_batch(*seeds, experiment),
        Command::Replay { dir } => cmd_replay(dir),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            let usage = matches!(
                e.downcast_ref::<omega_core::Error>(),
                Some(omega_core::Error::Config(_) | omega_core::Error::InvalidPattern(_) | omega_core::Error::InvalidDetector(_))
            );
            ExitCode::from(if usage { 2 } else { 1 })
        }
    }
}
