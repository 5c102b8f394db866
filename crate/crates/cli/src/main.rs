use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use bpriv_cli::config::{RunConfig, StrategySet};
use bpriv_cli::ingest::{ingest, IngestOptions, Mode, Proposal};
use bpriv_cli::{pipeline, report, synth};
use bpriv_core::calibrate_noise;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use tracing_subscriber::EnvFilter;

#[derive(Parser)]
#[command(name = "bpriv", version, about = "Ballot privacy and bribery resistance of weighted-voting tallies")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "BPRIV_THREADS")]
    threads: Option<usize>,
    /// Emit logs as JSON lines on stderr.
    #[arg(long, global = true)]
    log_json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML or JSON run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Input {
    /// NDJSON file or directory of `.ndjson`/`.jsonl` files.
    input: PathBuf,
    /// Decimal places of the weights.
    #[arg(long)]
    scale: Option<u32>,
    /// Choice index treated as abstention; those voters are dropped.
    #[arg(long)]
    abstain_choice: Option<usize>,
}

#[derive(Args)]
struct Noise {
    /// Tally perturbation: noise stays within d*W with frequency q.
    #[arg(long)]
    d: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
}

#[derive(Args)]
struct Game {
    #[arg(long)]
    target_p: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    /// Monte Carlo samples per estimate.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    escalated_samples: Option<usize>,
    #[arg(long, value_enum)]
    strategies: Option<StrategySet>,
    /// Proposals with more voters are skipped.
    #[arg(long)]
    max_voters: Option<usize>,
    #[arg(long)]
    max_budget: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Cohort {
    Mixed,
    Whale,
    Dispersed,
}

#[derive(Subcommand)]
enum Command {
    /// Whale and subset-sum attacks on exact raw tallies.
    Attack {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        input: Input,
        /// Largest residual voter count the subset-sum stage attempts.
        #[arg(long)]
        cap: Option<usize>,
    },
    /// Whale attack on corrected noised tallies.
    AttackNoised {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        noise: Noise,
        /// Independent noise draws per proposal.
        #[arg(long)]
        trials: Option<usize>,
    },
    /// B-privacy under full disclosure, corrected noised and winner-only tallies.
    Bprivacy {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        noise: Noise,
        #[command(flatten)]
        game: Game,
    },
    /// B-privacy across several perturbations.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        noise: Noise,
        #[command(flatten)]
        game: Game,
        /// Comma-separated perturbations.
        #[arg(long, value_delimiter = ',')]
        d_values: Option<Vec<f64>>,
    },
    /// Laplace scale for a tally perturbation.
    Calibrate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        noise: Noise,
        #[arg(long)]
        total_weight: f64,
    },
    /// Minimum decisive coalition of every binary proposal.
    Mdc {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        input: Input,
    },
    /// Writes a synthetic binary corpus.
    Synth {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output NDJSON file.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 20)]
        proposals: usize,
        #[arg(long, default_value_t = 20)]
        min_voters: usize,
        #[arg(long, default_value_t = 200)]
        max_voters: usize,
        #[arg(long, value_enum, default_value_t = Cohort::Mixed)]
        cohort: Cohort,
    },
}

fn base_config(common: &Common) -> Result<RunConfig> {
    let mut c = RunConfig::load(common.config.as_deref())?;
    if let Some(s) = common.seed {
        c.seed = s;
    }
    Ok(c)
}

fn apply_input(c: &mut RunConfig, input: &Input) {
    if let Some(s) = input.scale {
        c.scale = s;
    }
    if input.abstain_choice.is_some() {
        c.abstain_choice = input.abstain_choice;
    }
}

fn apply_noise(c: &mut RunConfig, noise: &Noise) {
    if let Some(d) = noise.d {
        c.perturbation_d = d;
    }
    if let Some(q) = noise.q {
        c.frequency_q = q;
    }
}

fn apply_game(c: &mut RunConfig, g: &Game) {
    if let Some(v) = g.target_p {
        c.target_p = v;
    }
    if let Some(v) = g.sigma {
        c.sigma = v;
    }
    if let Some(v) = g.samples {
        c.mc_samples = v;
    }
    if let Some(v) = g.escalated_samples {
        c.escalated_samples = v;
    }
    if let Some(v) = g.strategies {
        c.strategy_set = v;
    }
    if let Some(v) = g.max_voters {
        c.max_voters = v;
    }
    if let Some(v) = g.max_budget {
        c.max_budget = v;
    }
}

fn out_dir(common: &Common) -> PathBuf {
    common.out.clone().unwrap_or_else(|| PathBuf::from("bpriv-out"))
}

fn load(input: &Path, config: &RunConfig, mode: Mode) -> Result<(Vec<Proposal>, bpriv_cli::ingest::IngestReport)> {
    let (proposals, rep) = ingest(
        input,
        &IngestOptions {
            scale: config.scale,
            abstain_choice: config.abstain_choice,
            mode,
        },
    )?;
    tracing::info!(?rep, "ingested");
    Ok((proposals, rep))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Attack { common, input, cap } => {
            let mut c = base_config(&common)?;
            apply_input(&mut c, &input);
            if let Some(cap) = cap {
                c.subset_sum_cap = cap;
            }
            c.validate()?;
            let (ps, rep) = load(&input.input, &c, Mode::Attack)?;
            let rows = pipeline::run_attacks(&ps, &c);
            report::write_attack_report(&out_dir(&common), "attack", &c, &rep, &rows)
        }
        Command::AttackNoised {
            common,
            input,
            noise,
            trials,
        } => {
            let mut c = base_config(&common)?;
            apply_input(&mut c, &input);
            apply_noise(&mut c, &noise);
            if let Some(t) = trials {
                c.noised_trials = t;
            }
            c.validate()?;
            let (ps, rep) = load(&input.input, &c, Mode::Attack)?;
            let rows = pipeline::run_attacks_noised(&ps, &c);
            report::write_attack_report(&out_dir(&common), "attack-noised", &c, &rep, &rows)
        }
        Command::Bprivacy {
            common,
            input,
            noise,
            game,
        } => {
            let mut c = base_config(&common)?;
            apply_input(&mut c, &input);
            apply_noise(&mut c, &noise);
            apply_game(&mut c, &game);
            c.validate()?;
            let (ps, rep) = load(&input.input, &c, Mode::BPrivacy { max_voters: c.max_voters })?;
            let rows = pipeline::run_bprivacy(&ps, &c, &[c.perturbation_d]);
            report::write_bprivacy_report(&out_dir(&common), "bprivacy", &c, &rep, &rows)
        }
        Command::Sweep {
            common,
            input,
            noise,
            game,
            d_values,
        } => {
            let mut c = base_config(&common)?;
            apply_input(&mut c, &input);
            apply_noise(&mut c, &noise);
            apply_game(&mut c, &game);
            if let Some(d) = d_values {
                c.sweep_d = d;
            }
            c.validate()?;
            let (ps, rep) = load(&input.input, &c, Mode::BPrivacy { max_voters: c.max_voters })?;
            let rows = pipeline::run_bprivacy(&ps, &c, &c.sweep_d);
            report::write_bprivacy_report(&out_dir(&common), "sweep", &c, &rep, &rows)
        }
        Command::Calibrate {
            common,
            noise,
            total_weight,
        } => {
            let mut c = base_config(&common)?;
            apply_noise(&mut c, &noise);
            let spec = calibrate_noise(c.perturbation_d, c.frequency_q, total_weight)?;
            let summary = json!({
                "command": "calibrate",
                "perturbation_d": c.perturbation_d,
                "frequency_q": c.frequency_q,
                "total_weight": total_weight,
                "laplace_scale": spec.scale(),
                "bound": c.perturbation_d * total_weight,
                "prob_within_bound": spec.prob_within(c.perturbation_d * total_weight),
            });
            let text = serde_json::to_string_pretty(&summary)?;
            println!("{text}");
            if let Some(out) = &common.out {
                std::fs::create_dir_all(out)?;
                std::fs::write(out.join("summary.json"), text + "\n")?;
            }
            Ok(())
        }
        Command::Mdc { common, input } => {
            let mut c = base_config(&common)?;
            apply_input(&mut c, &input);
            let (ps, rep) = load(&input.input, &c, Mode::Attack)?;
            let rows = pipeline::run_mdc(&ps);
            report::write_mdc_report(&out_dir(&common), &c, &rep, &rows)
        }
        Command::Synth {
            seed,
            out,
            proposals,
            min_voters,
            max_voters,
            cohort,
        } => {
            anyhow::ensure!(min_voters >= 1 && min_voters <= max_voters, "need 1 <= min-voters <= max-voters");
            let records = match cohort {
                Cohort::Mixed => synth::mixed_corpus(seed, proposals, min_voters, max_voters),
                Cohort::Whale | Cohort::Dispersed => (0..proposals)
                    .map(|i| {
                        let s = bpriv_core::rng::derive_seed(seed, i as u64);
                        let n = min_voters + i % (max_voters - min_voters + 1);
                        let id = format!("syn-{i:04}");
                        match cohort {
                            Cohort::Whale => synth::whale_proposal(s, &id, "whale", n),
                            _ => synth::dispersed_proposal(s, &id, "dispersed", n),
                        }
                    })
                    .collect(),
            };
            let mut f = std::io::BufWriter::new(
                std::fs::File::create(&out).with_context(|| format!("creating {}", out.display()))?,
            );
            for r in &records {
                serde_json::to_writer(&mut f, r)?;
                writeln!(f)?;
            }
            f.flush()?;
            Ok(())
        }
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let filter = EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info"));
    if cli.log_json {
        tracing_subscriber::fmt()
            .json()
            .with_env_filter(filter)
            .with_writer(std::io::stderr)
            .init();
    } else {
        tracing_subscriber::fmt()
            .with_env_filter(filter)
            .with_writer(std::io::stderr)
            .init();
    }
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    run(cli)
}
