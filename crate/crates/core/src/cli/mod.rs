//! Command-line front end.

pub mod config;
pub mod svg;

use std::ffi::OsString;
use std::io::Write;

use clap::{Parser, Subcommand};

use crate::pipeline::{self, AnalysisConfig, PipelineError, Setup};
use crate::tracker::track_loop_traced;
use crate::verdict::{fmt_complex, render_text};
use config::{Format, Options, Settings};

#[derive(Debug, Parser)]
#[command(name = "galois-scope", version, about = "Numerical monodromy evidence for solvability of f(x) = a")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Full pipeline with verdict; exit code 0/1/2 for solvable/unsolvable/inconclusive
    Analyze {
        expr: String,
        #[command(flatten)]
        opts: Options,
    },
    /// Loop generators in cycle notation
    Monodromy {
        expr: String,
        #[command(flatten)]
        opts: Options,
    },
    /// Continuation records along one loop
    Trace {
        expr: String,
        #[arg(long = "loop", value_name = "INDEX")]
        loop_index: usize,
        #[command(flatten)]
        opts: Options,
    },
    /// SVG of the a-plane
    Render {
        expr: String,
        #[command(flatten)]
        opts: Options,
    },
}

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 4 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(rendered.as_bytes())
            } else {
                out.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    match dispatch(&cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn opts_of(cmd: &Command) -> &Options {
    match cmd {
        Command::Analyze { opts, .. }
        | Command::Monodromy { opts, .. }
        | Command::Trace { opts, .. }
        | Command::Render { opts, .. } => opts,
    }
}

fn dispatch(cmd: &Command, out: &mut dyn Write) -> Result<i32, PipelineError> {
    let settings = opts_of(cmd).resolve()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(settings.jobs)
        .build()
        .map_err(|e| PipelineError::Config(e.to_string()))?;
    let mut buf: Vec<u8> = Vec::new();
    let code = pool.install(|| match cmd {
        Command::Analyze { expr, .. } => analyze(expr, &settings, &mut buf),
        Command::Monodromy { expr, .. } => monodromy(expr, &settings, &mut buf),
        Command::Trace { expr, loop_index, .. } => trace(expr, *loop_index, &settings, &mut buf),
        Command::Render { expr, .. } => render(expr, &settings, &mut buf),
    })?;
    out.write_all(&buf)?;
    Ok(code)
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

fn write_extras(setup: &Setup, settings: &Settings) -> Result<(), PipelineError> {
    let cfg = &settings.analysis;
    if let Some(path) = &settings.svg {
        std::fs::write(path, svg::render(setup, &setup.loop_specs(cfg), &cfg.image))?;
    }
    if let Some(path) = &settings.dump {
        std::fs::write(path, dump_all(setup, cfg))?;
    }
    Ok(())
}

/// Records for every loop, each block headed by a `#` comment line.
fn dump_all(setup: &Setup, cfg: &AnalysisConfig) -> String {
    let mut s = String::new();
    for (i, (kind, spec)) in setup.loop_specs(cfg).iter().enumerate() {
        s.push_str(&format!("# loop {i} {kind:?} center {}\n", fmt_complex(spec.center)));
        match track_loop_traced(&setup.expr, &setup.roots, spec, &cfg.tolerances) {
            Ok((_, records)) => s.push_str(&pipeline::format_trace(&records)),
            Err(e) => s.push_str(&format!("# failed: {e}\n")),
        }
    }
    s
}

fn analyze(expr: &str, settings: &Settings, out: &mut Vec<u8>) -> Result<i32, PipelineError> {
    let report = pipeline::analyze(expr, &settings.analysis)?;
    let text = match settings.format {
        Format::Json => to_json(&report),
        Format::Text => render_text(&report.verdict, &report.evidence()),
    };
    out.write_all(text.as_bytes())?;
    write_extras(&report.monodromy.setup, settings)?;
    Ok(report.verdict.status.exit_code())
}

fn monodromy(expr: &str, settings: &Settings, out: &mut Vec<u8>) -> Result<i32, PipelineError> {
    let report = pipeline::monodromy(expr, &settings.analysis)?;
    let text = match settings.format {
        Format::Json => to_json(&report),
        Format::Text => {
            let mut s = format!(
                "base point {} with {} roots\n",
                fmt_complex(report.setup.base_point),
                report.setup.roots.len()
            );
            for (i, g) in report.generators.iter().enumerate() {
                s.push_str(&format!(
                    "g{i} {:?} around {}: {} escaped {:?} match {:.3e} residual {:.3e}\n",
                    g.kind,
                    fmt_complex(g.center),
                    g.cycles,
                    g.escaped,
                    g.max_match_distance,
                    g.max_residual
                ));
            }
            for f in &report.failures {
                s.push_str(&format!("failed {:?} around {}: {}\n", f.kind, fmt_complex(f.center), f.error));
            }
            s
        }
    };
    out.write_all(text.as_bytes())?;
    write_extras(&report.setup, settings)?;
    Ok(0)
}

fn trace(expr: &str, index: usize, settings: &Settings, out: &mut Vec<u8>) -> Result<i32, PipelineError> {
    let (_, _, records) = pipeline::trace(expr, &settings.analysis, index)?;
    let text = pipeline::format_trace(&records);
    match &settings.dump {
        Some(path) => std::fs::write(path, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(0)
}

fn render(expr: &str, settings: &Settings, out: &mut Vec<u8>) -> Result<i32, PipelineError> {
    let cfg = &settings.analysis;
    let setup = pipeline::setup(expr, cfg)?;
    let doc = svg::render(&setup, &setup.loop_specs(cfg), &cfg.image);
    match &settings.svg {
        Some(path) => std::fs::write(path, doc)?,
        None => out.write_all(doc.as_bytes())?,
    }
    Ok(0)
}
