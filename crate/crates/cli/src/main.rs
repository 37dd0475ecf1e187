use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use cpi_core::game::{build_game_board, solve_board, DEFAULT_NODE_CAP};
use cpi_core::oracle::{
    bounds_around, brute_force_expected_impacts, decide_strategy_exists, random_instance, GeneratorParams,
    DEFAULT_ASSIGNMENT_CAP,
};
use cpi_core::parser::{parse_process, process_to_dot};
use cpi_core::process::validate_sese;
use cpi_core::spin::{spin_to_dot, translate_to_spin, validate_structured_acyclic};
use cpi_cli::api::{serve, AppState};
use cpi_cli::run::{board_dot, load, parse_bound, report_human, report_json, synthesize, AppError, Engine};

#[derive(Parser)]
#[command(name = "cpi", version, about = "Strategy synthesis for processes with choices, probabilities and impacts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Input {
    /// Model file, or `-` for standard input.
    #[arg(required_unless_present = "text")]
    file: Option<PathBuf>,
    /// Model text given inline.
    #[arg(long, conflicts_with = "file")]
    text: Option<String>,
}

impl Input {
    fn read(&self) -> anyhow::Result<String> {
        if let Some(t) = &self.text {
            return Ok(t.clone());
        }
        let path = self.file.as_ref().expect("clap enforces an input");
        if path.as_os_str() == "-" {
            let mut s = String::new();
            std::io::stdin().read_to_string(&mut s)?;
            return Ok(s);
        }
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Game,
    Recursive,
    Brute,
    All,
}

impl From<EngineArg> for Engine {
    fn from(e: EngineArg) -> Self {
        match e {
            EngineArg::Game => Engine::Game,
            EngineArg::Recursive => Engine::Recursive,
            EngineArg::Brute => Engine::Brute,
            EngineArg::All => Engine::All,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Human,
    Json,
    Dot,
}

#[derive(Subcommand)]
enum Command {
    /// Check a model against the diagram and net well-formedness rules.
    Validate {
        #[command(flatten)]
        input: Input,
    },
    /// Print a model as Graphviz; `--spin` and `--board` pick the derived views.
    Dot {
        #[command(flatten)]
        input: Input,
        #[arg(long, conflicts_with = "board")]
        spin: bool,
        #[arg(long)]
        board: bool,
        #[arg(long, default_value_t = DEFAULT_NODE_CAP)]
        node_cap: usize,
    },
    /// Search for a strategy whose expected impact stays within the bound.
    Synthesize {
        #[command(flatten)]
        input: Input,
        /// Comma separated bound, e.g. `155,7.5` or `1/2,3`.
        #[arg(long, allow_hyphen_values = true)]
        bound: String,
        #[arg(long, value_enum, default_value = "game")]
        engine: EngineArg,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[arg(long, default_value_t = DEFAULT_NODE_CAP)]
        node_cap: usize,
    },
    /// Decide existence with the recursive engine only.
    Decide {
        #[command(flatten)]
        input: Input,
        #[arg(long, allow_hyphen_values = true)]
        bound: String,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Cross-check all engines on seeded random models.
    Bench {
        #[arg(long, default_value_t = 100)]
        seeds: u64,
        #[arg(long, default_value_t = 0)]
        first_seed: u64,
        #[arg(long, default_value_t = 20)]
        bounds: usize,
        #[arg(long, default_value_t = 5)]
        max_tasks: usize,
        #[arg(long)]
        loops: bool,
    },
    /// Serve the JSON API on localhost.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value_t = DEFAULT_NODE_CAP)]
        node_cap: usize,
        /// Simultaneous board constructions; defaults to the processor count.
        #[arg(long)]
        max_concurrent: Option<usize>,
    },
}

fn fail(e: &AppError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code())
}

fn verdict(exists: bool) -> ExitCode {
    if exists {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn validate(text: &str) -> ExitCode {
    let process = match parse_process(text) {
        Ok(p) => p,
        Err(e) => return fail(&AppError::Parse(e)),
    };
    let sese = validate_sese(process.diagram());
    for v in &sese.violations {
        println!("diagram: {v}");
    }
    if !sese.is_ok() {
        return ExitCode::from(2);
    }
    let net = match translate_to_spin(&process) {
        Ok((net, _)) => net,
        Err(e) => return fail(&AppError::Invalid(e.to_string())),
    };
    let report = validate_structured_acyclic(&net);
    for v in &report.violations {
        println!("net: {v}");
    }
    if !report.is_ok() {
        return ExitCode::from(2);
    }
    println!(
        "ok: {} diagram nodes, {} places, {} transitions, {} impact components",
        process.diagram().node_count(),
        net.place_count(),
        net.transition_count(),
        net.impact_dim()
    );
    ExitCode::SUCCESS
}

fn bench(seeds: std::ops::Range<u64>, bounds: usize, params: &GeneratorParams) -> Result<ExitCode, AppError> {
    let (mut checks, mut positive, mut disagreements) = (0usize, 0usize, 0usize);
    let started = std::time::Instant::now();
    for seed in seeds.clone() {
        let inst = random_instance(seed, params);
        let (net, _) = translate_to_spin(&inst.process).map_err(|e| AppError::Invalid(e.to_string()))?;
        let board = build_game_board(&net, DEFAULT_NODE_CAP)?;
        let values: Vec<_> =
            brute_force_expected_impacts(&net, DEFAULT_ASSIGNMENT_CAP)?.into_iter().map(|o| o.expected_impact).collect();
        for bound in bounds_around(&values, seed, bounds) {
            let brute = values.iter().any(|v| v.le(&bound));
            let game = solve_board(&board, &bound).0.is_some();
            let recursive = decide_strategy_exists(&net, &bound)?.exists;
            checks += 1;
            positive += usize::from(brute);
            if game != brute || recursive != brute {
                disagreements += 1;
                println!("seed {seed} bound {bound}: game {game}, recursive {recursive}, brute force {brute}\n  {}", inst.text);
            }
        }
    }
    println!(
        "{} instances, {checks} bounds ({positive} positive), {disagreements} disagreements in {:.2?}",
        seeds.end - seeds.start,
        started.elapsed()
    );
    Ok(if disagreements == 0 { ExitCode::SUCCESS } else { ExitCode::from(4) })
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let code = match cli.command {
        Command::Validate { input } => validate(&input.read()?),
        Command::Dot { input, spin, board, node_cap } => {
            let loaded = match load(&input.read()?) {
                Ok(l) => l,
                Err(e) => return Ok(fail(&e)),
            };
            let out = if spin {
                spin_to_dot(&loaded.net)
            } else if board {
                match board_dot(&loaded, None, node_cap) {
                    Ok(d) => d,
                    Err(e) => return Ok(fail(&e)),
                }
            } else {
                process_to_dot(&loaded.process)
            };
            print!("{out}");
            ExitCode::SUCCESS
        }
        Command::Synthesize { input, bound, engine, format, node_cap } => {
            let result = load(&input.read()?).and_then(|loaded| {
                let bound = parse_bound(&bound)?;
                let outcome = synthesize(&loaded, &bound, engine.into(), node_cap)?;
                let text = match format {
                    Format::Json => report_json(&outcome.report) + "\n",
                    Format::Human => report_human(&outcome.report),
                    Format::Dot => board_dot(&loaded, Some(&bound), node_cap)?,
                };
                Ok((outcome.report.exists, text))
            });
            match result {
                Ok((exists, text)) => {
                    print!("{text}");
                    verdict(exists)
                }
                Err(e) => fail(&e),
            }
        }
        Command::Decide { input, bound, format } => {
            let result = load(&input.read()?).and_then(|loaded| {
                let bound = parse_bound(&bound)?;
                synthesize(&loaded, &bound, Engine::Recursive, DEFAULT_NODE_CAP)
            });
            match result {
                Ok(outcome) => {
                    match format {
                        Format::Human => print!("{}", report_human(&outcome.report)),
                        _ => println!("{}", report_json(&outcome.report)),
                    }
                    verdict(outcome.report.exists)
                }
                Err(e) => fail(&e),
            }
        }
        Command::Bench { seeds, first_seed, bounds, max_tasks, loops } => {
            let params = GeneratorParams { max_tasks, loops, ..GeneratorParams::default() };
            match bench(first_seed..first_seed + seeds, bounds, &params) {
                Ok(code) => code,
                Err(e) => fail(&e),
            }
        }
        Command::Serve { port, node_cap, max_concurrent } => {
            let workers = max_concurrent
                .unwrap_or_else(|| std::thread::available_parallelism().map(usize::from).unwrap_or(1));
            let runtime = tokio::runtime::Runtime::new()?;
            eprintln!("listening on http://127.0.0.1:{port}");
            runtime.block_on(serve(port, AppState::new(node_cap, workers)))?;
            ExitCode::SUCCESS
        }
    };
    Ok(code)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
