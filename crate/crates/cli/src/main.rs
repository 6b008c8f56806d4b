use std::io::{self, BufRead, Write};
use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;
use sarv_cli::args::{Cli, Command};
use sarv_cli::commands;
use sarv_cli::{CliError, RunConfig};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(e.downcast_ref::<CliError>().map_or(2, CliError::exit_code))
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let cfg = RunConfig::resolve(&cli.run.into())?;
    let out = io::stdout();
    let mut out = out.lock();
    match cli.command {
        Command::Preprocess => {
            let p = commands::preprocess(&cfg)?;
            for m in &p.summary.malformed {
                eprintln!("warning: skipped line {}: {}", m.line, m.reason);
            }
            if p.summary.records == 0 {
                eprintln!("warning: corpus holds no usable records");
            }
            writeln!(out, "encoded {} records into {}", p.summary.records, cfg.out_dir().display())?;
            writeln!(
                out,
                "sentences with at most {} tokens: {:.2}%",
                p.summary.max_len,
                p.summary.within_max_len * 100.0
            )?;
        }
        Command::Shard => {
            let s = commands::shard(&cfg)?;
            for (name, m) in [("train", &s.train), ("test", &s.test)] {
                writeln!(
                    out,
                    "{name}: {} records in {} shards, classes {:?}, manifest {}",
                    m.total,
                    m.shards.len(),
                    m.class_histogram,
                    m.hash()
                )?;
            }
        }
        Command::Train => {
            let t = commands::train(&cfg)?;
            write!(out, "{}", t.report.to_text())?;
            eprintln!("trained in {:.1}s", t.report.wall_time_secs);
        }
        Command::Eval { checkpoint, manifest } => {
            let r = commands::eval(&cfg, checkpoint.as_deref(), manifest.as_deref())?;
            write!(out, "{}", r.to_text())?;
        }
        Command::Predict { checkpoint, input } => {
            let lines: Vec<String> = match &input {
                Some(p) => std::fs::read_to_string(p)
                    .with_context(|| format!("reading {}", p.display()))
                    .map_err(|e| CliError::Usage(format!("{e:#}")))?
                    .lines()
                    .map(str::to_owned)
                    .collect(),
                None => io::stdin().lock().lines().collect::<io::Result<_>>()?,
            };
            for p in commands::predict(&cfg, checkpoint.as_deref(), &lines)? {
                writeln!(out, "{}", serde_json::to_string(&p)?)?;
            }
        }
        Command::Stats => {
            let s = commands::stats(&cfg)?;
            for m in &s.malformed {
                eprintln!("warning: skipped line {}: {}", m.line, m.reason);
            }
            write!(out, "{}", s.table.to_tsv())?;
        }
    }
    Ok(())
}
