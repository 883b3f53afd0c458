//! `lifting`: experiments for lifting randomized query complexity to
//! communication complexity with the index gadget.

mod config;
mod convert;
mod partition;
mod refine;
mod report;
mod rng;
mod simulate;
mod sweep;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::ExperimentConfig;
use report::Report;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
    Core(lifting::Error),
}

impl From<lifting::Error> for CliError {
    fn from(e: lifting::Error) -> Self {
        CliError::Core(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(s) => write!(f, "config error: {s}"),
            CliError::Io(s) => write!(f, "io error: {s}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(lifting::Error::Resource { .. }) => 3,
            _ => 2,
        }
    }
}

#[derive(Parser)]
#[command(name = "lifting", version, about = "Query-to-communication lifting experiments")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// TOML file with experiment settings; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for summary.json and the CSV tables.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Sampled walks per component and z.
    #[arg(long, global = true)]
    samples: Option<u64>,
    /// Largest enumerated |X|·|Y|.
    #[arg(long, global = true)]
    budget: Option<u64>,
}

#[derive(Args, Default)]
struct Instance {
    #[arg(long)]
    n: Option<usize>,
    /// Alice's block size (a power of two).
    #[arg(long)]
    m: Option<u32>,
}

#[derive(Args, Default)]
struct Source {
    /// Protocol file.
    #[arg(long)]
    protocol: Option<PathBuf>,
    /// Bundled protocol: one_bit, bottom, and_third, family, or a family member.
    #[arg(long)]
    fixture: Option<String>,
}

#[derive(Args, Default)]
struct Walk {
    /// Density rate in (0, 1), e.g. 9/10.
    #[arg(long)]
    delta: Option<String>,
    /// Deficiency cap in bits for the strict mode.
    #[arg(long)]
    deficiency_cap: Option<String>,
    #[arg(long)]
    query_cap: Option<usize>,
    #[arg(long)]
    strict_zpp: bool,
    /// Restrict to one z, as a 0/1 string.
    #[arg(long)]
    z: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Density-restoring partitions of random sets, checked against the lemma.
    Partition {
        /// Number of random sets.
        #[arg(long)]
        count: Option<u64>,
        /// Coordinates per set (random in 1..=3 if unset).
        #[arg(long)]
        coords: Option<usize>,
        /// Alphabet size per coordinate (random in {2, 4, 8} if unset).
        #[arg(long)]
        m: Option<u32>,
        #[arg(long)]
        delta: Option<String>,
    },
    /// Builds the refined protocol and checks it against the original.
    Refine {
        #[command(flatten)]
        instance: Instance,
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        delta: Option<String>,
    },
    /// Exact and sampled walks of the simulation.
    Simulate {
        #[command(flatten)]
        instance: Instance,
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        walk: Walk,
    },
    /// Closeness of the walk to the true transcript law, plus batteries.
    Verify {
        #[command(flatten)]
        instance: Instance,
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        walk: Walk,
        /// Cases per Fourier and norm battery.
        #[arg(long)]
        count: Option<u64>,
        /// Largest coordinate count in the Fourier battery (default n).
        #[arg(long)]
        fourier_coords: Option<usize>,
    },
    /// Exact closeness curve over m for the bundled affine family.
    Sweep {
        #[arg(long)]
        n: Option<usize>,
        /// Ascending block sizes, comma separated.
        #[arg(long, value_delimiter = ',')]
        ms: Option<Vec<u32>>,
        /// Restrict to one family member.
        #[arg(long)]
        fixture: Option<String>,
        #[command(flatten)]
        walk: Walk,
    },
    /// Decision tree to protocol and back.
    Convert {
        #[command(flatten)]
        instance: Instance,
        /// Decision-tree file; random trees if unset.
        #[arg(long)]
        tree: Option<PathBuf>,
        /// Outer-function truth table file.
        #[arg(long)]
        function: Option<PathBuf>,
        /// and_third for the bundled AND example.
        #[arg(long)]
        fixture: Option<String>,
        /// Random trees to draw when no tree is given.
        #[arg(long)]
        count: Option<u64>,
        #[command(flatten)]
        walk: Walk,
    },
}

impl Walk {
    fn apply(self, c: &mut ExperimentConfig) {
        c.delta = self.delta;
        c.deficiency_cap = self.deficiency_cap;
        c.query_cap = self.query_cap;
        c.strict_zpp = self.strict_zpp.then_some(true);
        c.z = self.z;
    }
}

impl Cli {
    /// The command-line layer of the configuration.
    fn overrides(self) -> (&'static str, Option<PathBuf>, ExperimentConfig) {
        let g = self.global;
        let mut c = ExperimentConfig {
            seed: g.seed,
            out: g.out,
            samples: g.samples,
            budget: g.budget,
            ..Default::default()
        };
        let put = |c: &mut ExperimentConfig, i: Instance| {
            c.n = i.n;
            c.m = i.m;
        };
        let src = |c: &mut ExperimentConfig, s: Source| {
            c.protocol = s.protocol;
            c.fixture = s.fixture;
        };
        let command = match self.command {
            Command::Partition { count, coords, m, delta } => {
                c.count = count;
                c.coords = coords;
                c.m = m;
                c.delta = delta;
                "partition"
            }
            Command::Refine { instance, source, delta } => {
                put(&mut c, instance);
                src(&mut c, source);
                c.delta = delta;
                "refine"
            }
            Command::Simulate { instance, source, walk } => {
                put(&mut c, instance);
                src(&mut c, source);
                walk.apply(&mut c);
                "simulate"
            }
            Command::Verify {
                instance,
                source,
                walk,
                count,
                fourier_coords,
            } => {
                put(&mut c, instance);
                src(&mut c, source);
                walk.apply(&mut c);
                c.count = count;
                c.fourier_coords = fourier_coords;
                "verify"
            }
            Command::Sweep { n, ms, fixture, walk } => {
                c.n = n;
                c.ms = ms;
                c.fixture = fixture;
                walk.apply(&mut c);
                "sweep"
            }
            Command::Convert {
                instance,
                tree,
                function,
                fixture,
                count,
                walk,
            } => {
                put(&mut c, instance);
                c.tree = tree;
                c.function = function;
                c.fixture = fixture;
                c.count = count;
                walk.apply(&mut c);
                "convert"
            }
        };
        (command, g.config, c)
    }
}

fn run(command: &str, cfg: &ExperimentConfig) -> Result<Report, CliError> {
    match command {
        "partition" => partition::run(cfg),
        "refine" => refine::run(cfg),
        "simulate" => simulate::run(cfg),
        "verify" => verify::run(cfg),
        "sweep" => sweep::run(cfg),
        "convert" => convert::run(cfg),
        _ => unreachable!("clap rejects unknown commands"),
    }
}

fn main() -> ExitCode {
    let (command, file, flags) = Cli::parse().overrides();
    let result = (|| {
        let base = file.as_deref().map(ExperimentConfig::load).transpose()?.unwrap_or_default();
        let cfg = flags.over(base);
        let report = run(command, &cfg)?;
        let dir = cfg.out_dir();
        report.write(&dir)?;
        Ok::<_, CliError>((report, dir, cfg.seed))
    })();
    match result {
        Err(e) => {
            eprintln!("lifting: {e}");
            ExitCode::from(e.exit_code())
        }
        Ok((report, dir, seed)) => match report.first_failure() {
            None => {
                println!("ok: {} assertions passed; wrote {}", report.assertions.len(), dir.display());
                ExitCode::SUCCESS
            }
            Some(a) => {
                let seed = seed.map_or("none".to_string(), |s| s.to_string());
                eprintln!(
                    "lifting: invariant {} failed in {} of {} cases (seed {seed}); first: {}",
                    a.invariant,
                    a.failures,
                    a.checked,
                    a.first_failures.first().map_or("", String::as_str)
                );
                ExitCode::from(1)
            }
        },
    }
}
