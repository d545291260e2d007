use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use hitting_core::dynamics::{evolve_to, PulseSchedule, SparseState};
use hitting_core::hitting::{fidelity_trace, trace_csv, uhit_semidecide, HitReport, InstanceDescriptor};
use hitting_core::machine::parse_machine;
use hitting_core::protocol::{adversarial_sweep, ProtocolBudget};
use hitting_core::rational::{exact_decimal, format_rational, parse_rational};
use hitting_core::reduction::{bundled_corpus, encode, load_manifest, verify_corpus, VerifyConfig};
use hitting_core::reversible::{BeaconStep, ClockMode, TargetMode};
use hitting_core::Rational;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

const EXHAUSTED: u8 = 2;

#[derive(Parser)]
#[command(
    name = "hitting",
    version,
    about = "Hitting times of pulse-lifted reversible machines"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the instance JSON for a machine.
    Compile(MachineArgs),
    /// Evolve the initial state to time `--time` and print the sparse state.
    Evolve {
        #[command(flatten)]
        args: MachineArgs,
        #[arg(long, value_parser = rational_arg)]
        time: Rational,
    },
    /// Semi-decide the hitting time; exit 2 when the horizon is exhausted.
    Hit(MachineArgs),
    /// Fidelity at every grid time.
    Trace(MachineArgs),
    /// Check a corpus manifest (the bundled corpus by default).
    Verify {
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[command(flatten)]
        params: Params,
    },
    /// Find misclassified late halters for each observation budget.
    Sweep {
        #[arg(long, value_delimiter = ',', default_value = "10,100,1000")]
        budgets: Vec<u64>,
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Args)]
struct MachineArgs {
    /// Machine description file.
    machine: PathBuf,
    #[command(flatten)]
    params: Params,
}

#[derive(Args)]
struct Params {
    #[arg(long, value_parser = rational_arg, default_value = "1/4")]
    epsilon: Rational,
    #[arg(long, value_parser = rational_arg, default_value = "1/2")]
    delta: Rational,
    #[arg(long, default_value_t = 10_000)]
    horizon: u64,
    /// Samples per pulse; chosen from ε and the clock when omitted.
    #[arg(long)]
    grid: Option<u32>,
    #[arg(long, default_value = "unbounded")]
    clock: ClockMode,
    /// `beacon` or `exact:<hex label>`.
    #[arg(long, default_value = "beacon")]
    target: TargetMode,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct Output {
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

fn rational_arg(s: &str) -> Result<Rational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

impl Params {
    fn verify_config(&self) -> VerifyConfig {
        VerifyConfig {
            epsilon: self.epsilon,
            delta: self.delta,
            mode: self.clock,
            target: self.target.clone(),
            horizon: self.horizon,
            grid: self.grid,
        }
    }
}

impl MachineArgs {
    fn instance(&self) -> Result<InstanceDescriptor> {
        let text =
            std::fs::read_to_string(&self.machine).with_context(|| format!("reading {}", self.machine.display()))?;
        let machine = parse_machine(&text).with_context(|| format!("parsing {}", self.machine.display()))?;
        let p = &self.params;
        let inst = encode(machine, p.epsilon, p.delta, p.clock, p.target.clone(), p.horizon)?;
        Ok(match p.grid {
            None => inst,
            Some(g) => InstanceDescriptor::new(
                inst.machine().clone(),
                p.epsilon,
                *inst.schedule(),
                p.target.clone(),
                p.horizon,
                g,
            )?,
        })
    }
}

impl Output {
    fn format(&self, default: Format, allowed: &[Format]) -> Result<Format> {
        let f = self.format.unwrap_or(default);
        if !allowed.contains(&f) {
            bail!("this command does not support the requested format");
        }
        Ok(f)
    }

    fn emit(&self, text: &str) -> Result<()> {
        match &self.out {
            Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
            None => {
                std::io::stdout().write_all(text.as_bytes())?;
                Ok(())
            }
        }
    }
}

fn json_line(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string(v).expect("values serialize");
    s.push('\n');
    s
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Compile(args) => {
            args.params.output.format(Format::Json, &[Format::Json])?;
            let inst = args.instance()?;
            args.params.output.emit(&json_line(&inst.to_json()))?;
            Ok(0)
        }
        Command::Evolve { args, time } => {
            args.params.output.format(Format::Json, &[Format::Json])?;
            let inst = args.instance()?;
            let step = BeaconStep::new(inst.machine().clone(), args.params.clock);
            let sched = PulseSchedule::new(args.params.delta, args.params.clock)?;
            let state = evolve_to(&step, &sched, SparseState::basis(step.initial_state()), time)?;
            let v = serde_json::json!({
                "t": format_rational(&state.time_tag()),
                "exact": state.is_exact(),
                "entries": state.to_json(),
            });
            args.params.output.emit(&json_line(&v))?;
            Ok(0)
        }
        Command::Hit(args) => {
            args.params.output.format(Format::Json, &[Format::Json])?;
            let report = uhit_semidecide(&args.instance()?)?;
            args.params.output.emit(&json_line(&report.to_json()))?;
            Ok(match report {
                HitReport::Hit { .. } => 0,
                HitReport::Exhausted { .. } => EXHAUSTED,
            })
        }
        Command::Trace(args) => {
            let format = args.params.output.format(Format::Csv, &[Format::Csv, Format::Json])?;
            let trace = fidelity_trace(&args.instance()?)?;
            let text = match format {
                Format::Csv => trace_csv(&trace),
                Format::Json => {
                    let rows: Vec<_> = trace
                        .iter()
                        .map(|(t, f)| serde_json::json!({ "t": exact_decimal(t), "fidelity": f }))
                        .collect();
                    json_line(&serde_json::Value::Array(rows))
                }
            };
            args.params.output.emit(&text)?;
            Ok(0)
        }
        Command::Verify { manifest, params } => {
            params.output.format(Format::Json, &[Format::Json])?;
            let corpus = match &manifest {
                Some(p) => load_manifest(p)?,
                None => bundled_corpus(),
            };
            let reports = verify_corpus(&corpus, &params.verify_config())?;
            let text: String = reports.iter().map(|r| json_line(&r.to_json())).collect();
            params.output.emit(&text)?;
            let bad: Vec<_> = reports
                .iter()
                .filter(|r| !r.agrees())
                .map(|r| r.entry.as_str())
                .collect();
            if !bad.is_empty() {
                bail!("disagreement on {}", bad.join(", "));
            }
            Ok(0)
        }
        Command::Sweep { budgets, output } => {
            output.format(Format::Json, &[Format::Json])?;
            let budgets = budgets
                .into_iter()
                .map(ProtocolBudget::time_only)
                .collect::<Result<Vec<_>, _>>()?;
            let witnesses = adversarial_sweep(&budgets)?;
            let text: String = witnesses.iter().map(|w| json_line(&w.to_json())).collect();
            output.emit(&text)?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // usage errors share the generic error code; 2 means "exhausted"
            return if e.use_stderr() {
                ExitCode::FAILURE
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
