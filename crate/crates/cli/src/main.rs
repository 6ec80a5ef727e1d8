use std::path::PathBuf;
use std::process::ExitCode;

use centlab::instances::corpus;
use centlab::notions::Notion;
use centlab::reductions::Theorem;
use centlab::serial::parse_rational;
use centlab::simkit::Attempts;
use centlab_cli::config::{parse_family, InstanceRef};
use centlab_cli::{CliError, ExperimentConfig, Format, Outcome};
use clap::{Args, Parser, Subcommand};

/// Exact verification harness for computational-entropy notions on toy
/// instances.
///
/// Exit codes: 0 ok, 1 invalid config or input, 2 a verified identity or
/// inequality failed, 3 the enumeration budget was exceeded.
#[derive(Parser)]
#[command(name = "centlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct Common {
    /// TOML or JSON experiment config (`.json` selects JSON); flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Corpus instance name.
    #[arg(long, global = true)]
    instance: Option<String>,
    /// Directory for report.json and the CSV tables; stdout otherwise.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Build rejection simulators from a tampered generator table.
    #[arg(long, global = true)]
    fault_injection: bool,
    #[arg(long, global = true, value_parser = parse_rational_arg)]
    eps: Option<centlab::Prob>,
    #[arg(long, global = true, value_parser = parse_rational_arg)]
    delta: Option<centlab::Prob>,
    /// Slack Δ′ in bits.
    #[arg(long, global = true, value_parser = parse_rational_arg)]
    delta_prime: Option<centlab::Prob>,
    /// Markov level δ′.
    #[arg(long, global = true, value_parser = parse_rational_arg)]
    delta_markov: Option<centlab::Prob>,
    /// Attempt budget T (integer or `inf`).
    #[arg(long, global = true)]
    attempts: Option<Attempts>,
    #[arg(long, global = true)]
    ell: Option<u8>,
    #[arg(long, global = true)]
    m: Option<u32>,
    #[arg(long, global = true)]
    t: Option<f64>,
    /// Hypothesis-side entropy bound Δ in bits.
    #[arg(long, global = true)]
    hardness: Option<f64>,
    #[arg(long, global = true)]
    n: Option<u32>,
}

#[derive(Subcommand)]
enum Command {
    /// Run every verifier on the given instances (default: the whole corpus).
    VerifyAll {
        #[command(flatten)]
        common: Common,
        /// Extra instances; `--instance` may be combined with these.
        instances: Vec<String>,
    },
    /// Evaluate a notion for the honest (or configured) adversary.
    Compute {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        notion: Option<Notion>,
    },
    /// Minimise a notion over a generator family.
    BruteForce {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        notion: Option<Notion>,
        /// Seed widths per block, `w1,w2,...[/canonical|/full]`.
        #[arg(long)]
        family: Option<String>,
        #[arg(long)]
        cap: Option<u64>,
        /// Seeded random search when the family exceeds the cap.
        #[arg(long)]
        random_seed: Option<u64>,
        #[arg(long)]
        random_samples: Option<u64>,
        #[arg(long)]
        parallel: bool,
    },
    /// Sweep the attempt budget and tabulate the rejection error.
    Tradeoff {
        #[command(flatten)]
        common: Common,
        /// `T=a..b` or `T=v1,v2,...` (`inf` allowed).
        #[arg(long, default_value = "T=1..64")]
        sweep: String,
    },
    /// Conclusion-side parameters of a theorem (`all` for every one).
    Params {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "all")]
        theorem: String,
    },
}

fn parse_rational_arg(s: &str) -> Result<centlab::Prob, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

impl Common {
    fn resolve(&self) -> Result<ExperimentConfig, CliError> {
        let mut c = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(i) = &self.instance {
            c.instance = Some(InstanceRef::Named(i.clone()));
        }
        if let Some(d) = &self.out {
            c.output.dir = Some(d.clone());
        }
        if let Some(f) = self.format {
            c.output.format = f;
        }
        c.fault_injection |= self.fault_injection;
        let b = &mut c.budget;
        macro_rules! set {
            ($($field:ident),*) => { $(if let Some(v) = &self.$field { b.$field = v.clone(); })* };
        }
        set!(eps, delta, delta_prime, delta_markov, attempts, ell, m, t, hardness, n);
        Ok(c)
    }
}

fn emit(o: &Outcome, cfg: &ExperimentConfig) -> Result<(), CliError> {
    match &cfg.output.dir {
        Some(dir) => {
            o.write(dir, cfg.output.format)?;
            println!("{} written to {}", if o.failed { "FAIL" } else { "ok" }, dir.display());
        }
        None if cfg.output.format == Format::Json => print!("{}", o.json()),
        None => {
            for t in &o.tables {
                print!("{}", t.to_csv()?);
            }
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    let (cfg, outcome) = match cli.command {
        Command::VerifyAll { common, instances } => {
            let cfg = common.resolve()?;
            cfg.validate()?;
            let mut entries = Vec::new();
            if let Some(i) = &cfg.instance {
                entries.push(i.resolve()?);
            }
            for name in &instances {
                entries.push(InstanceRef::Named(name.clone()).resolve()?);
            }
            if entries.is_empty() {
                entries = corpus();
            }
            let o = centlab_cli::verify_all(&cfg, &entries)?;
            (cfg, o)
        }
        Command::Compute { common, notion } => {
            let mut cfg = common.resolve()?;
            cfg.notion = notion.or(cfg.notion);
            cfg.validate()?;
            let o = centlab_cli::compute(&cfg)?;
            (cfg, o)
        }
        Command::BruteForce { common, notion, family, cap, random_seed, random_samples, parallel } => {
            let mut cfg = common.resolve()?;
            cfg.notion = notion.or(cfg.notion);
            if let Some(spec) = family {
                let (widths, mode) = parse_family(&spec)?;
                cfg.family.seed_widths = Some(widths);
                cfg.family.mode = mode.or(cfg.family.mode);
            }
            cfg.family.cap = cap.or(cfg.family.cap);
            cfg.family.random_seed = random_seed.or(cfg.family.random_seed);
            cfg.family.random_samples = random_samples.or(cfg.family.random_samples);
            cfg.family.parallel |= parallel;
            cfg.validate()?;
            let o = centlab_cli::brute_force(&cfg)?;
            (cfg, o)
        }
        Command::Tradeoff { common, sweep } => {
            let cfg = common.resolve()?;
            cfg.validate()?;
            let o = centlab_cli::tradeoff(&cfg, &centlab_cli::parse_sweep(&sweep)?)?;
            (cfg, o)
        }
        Command::Params { common, theorem } => {
            let cfg = common.resolve()?;
            cfg.validate()?;
            let theorems = if theorem == "all" {
                Theorem::ALL.to_vec()
            } else {
                vec![theorem.parse::<Theorem>().map_err(|e| CliError::Config(format!("--theorem: {e}")))?]
            };
            let o = centlab_cli::params(&cfg, &theorems)?;
            (cfg, o)
        }
    };
    emit(&outcome, &cfg)?;
    Ok(outcome)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(o) => {
            if o.failed {
                eprintln!("a verified identity or inequality failed");
            }
            ExitCode::from(o.exit_code())
        }
        Err(e) => {
            eprintln!("centlab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
