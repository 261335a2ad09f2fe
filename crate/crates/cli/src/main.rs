use std::fs;
use std::io::{self, IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use creative_petri::dynamics::Simulator;
use creative_petri::textio::render_net;
use creative_petri::{defuse, export_dot, parse_net, render_canonical, CpnFile, StepMode};

#[derive(Parser)]
#[command(name = "cpn", version, about = "Check, simulate, defuse and export creative Petri nets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a net; silent on success.
    Check { file: PathBuf },
    /// Simulate a net, writing a JSON-lines trace and the final net.
    Run {
        file: PathBuf,
        #[arg(long, default_value_t = 100)]
        steps: usize,
        #[arg(long, default_value = "sequential", value_parser = ["greedy", "sequential"])]
        mode: String,
        /// Write the trace here instead of stdout.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Write `<file>.<step>.dot` every K steps (0 = never).
        #[arg(long, default_value_t = 0)]
        dot_every: usize,
    },
    /// Split a net into units, or split off the units leaving one node.
    Defuse {
        file: PathBuf,
        #[arg(long)]
        at: Option<String>,
    },
    /// Export Graphviz DOT.
    Dot {
        file: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Run the randomized property suites.
    #[command(hide = true)]
    Selftest {
        #[arg(long, default_value_t = 1000)]
        cases: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

enum Failure {
    /// Bad input: syntax, semantics, unknown names. Exit code 1.
    Input(String),
    /// Filesystem trouble. Exit code 2.
    Io(String),
}

fn io_error(path: &Path, e: io::Error) -> Failure {
    Failure::Io(format!("{}: {e}", path.display()))
}

fn color_enabled() -> bool {
    std::env::var_os("CPN_NO_COLOR").is_none() && io::stderr().is_terminal()
}

fn load(path: &Path) -> Result<CpnFile, Failure> {
    let src = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    let name = path.display().to_string();
    let color = color_enabled();
    match parse_net(&src) {
        Ok(file) => {
            for w in &file.warnings {
                eprint!("{}", w.render(&name, &src, color));
            }
            Ok(file)
        }
        Err(diags) => {
            let text: String = diags.iter().map(|d| d.render(&name, &src, color)).collect();
            Err(Failure::Input(text.trim_end().to_string()))
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| io_error(path, e))
}

fn run_cmd(file: &Path, steps: usize, mode: StepMode, trace: Option<&Path>, dot_every: usize) -> Result<(), Failure> {
    let cpn = load(file)?;
    let mut sim = Simulator::new(cpn.net, cpn.rules.clone(), mode);
    let mut lines = String::new();
    for _ in 0..steps {
        let Some(event) = sim.step() else { break };
        lines.push_str(&event.to_json_lines());
        if dot_every > 0 && event.step % dot_every == 0 {
            let mut name = file.as_os_str().to_owned();
            name.push(format!(".{}.dot", event.step));
            write_file(Path::new(&name), &export_dot(sim.net()))?;
        }
    }
    let mut text = match trace {
        Some(path) => {
            write_file(path, &lines)?;
            String::new()
        }
        None => lines,
    };
    text.push_str("---\n");
    text.push_str(&render_canonical(sim.net(), &cpn.rules));
    print_out(&text)
}

fn print_out(text: &str) -> Result<(), Failure> {
    io::stdout()
        .write_all(text.as_bytes())
        .map_err(|e| Failure::Io(format!("stdout: {e}")))
}

fn defuse_cmd(file: &Path, at: Option<&str>) -> Result<(), Failure> {
    let cpn = load(file)?;
    let parts = defuse(&cpn.net, at).map_err(|e| Failure::Input(e.to_string()))?;
    let text: String = parts.fragments().map(|f| render_net(f) + "\n").collect();
    print_out(&text)
}

fn dot_cmd(file: &Path, out: Option<&Path>) -> Result<(), Failure> {
    let cpn = load(file)?;
    let dot = export_dot(&cpn.net);
    match out {
        Some(path) => write_file(path, &dot),
        None => print_out(&dot),
    }
}

fn selftest_cmd(cases: usize, seed: u64) -> Result<(), Failure> {
    let mut failed = false;
    for rep in creative_petri::testkit::run_selftest(cases, seed) {
        let status = if rep.passed() { "ok" } else { "FAILED" };
        println!("{:<14} {:>8} cases  {status}", rep.name, rep.cases);
        for f in &rep.failures {
            println!("    {f}");
        }
        failed |= !rep.passed();
    }
    if failed {
        Err(Failure::Input("selftest failed".into()))
    } else {
        Ok(())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Check { file } => load(file).map(|_| ()),
        Command::Run {
            file,
            steps,
            mode,
            trace,
            dot_every,
        } => run_cmd(file, *steps, mode.parse().expect("validated by clap"), trace.as_deref(), *dot_every),
        Command::Defuse { file, at } => defuse_cmd(file, at.as_deref()),
        Command::Dot { file, out } => dot_cmd(file, out.as_deref()),
        Command::Selftest { cases, seed } => selftest_cmd(*cases, *seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(1)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
