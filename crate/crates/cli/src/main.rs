use std::fs::{self, File};
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use bida::data::parse_cards_json;
use bida::effects::posterior_effect_summary;
use bida::harness::{self, ExperimentConfig, IdaOptions, IdaVariant, Metric, DEFAULT_EXTENSION_CAP};
use bida::posterior::{bida_mixture, DEFAULT_CELL_CAP};
use bida::structlearn::{all_adjustment_posteriors, exact_dag_posterior, pc_cpdag, structure_mcmc, DagSample, McmcConfig};
use bida::{AdjustmentKind, CptNetwork, Dataset, EffectKind, EffectTable, Pdag};

/// Bayesian intervention-distribution estimation for categorical data.
#[derive(Parser)]
#[command(name = "bida", version)]
struct Cli {
    /// Seed for every random step. Overrides the seed of an experiment config.
    #[arg(long, global = true, env = bida::rng::SEED_ENV)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a random network with flat-Dirichlet CPTs.
    RandomNetwork {
        #[arg(long)]
        nodes: usize,
        #[arg(long, default_value_t = 2.0)]
        expected_neighbors: f64,
        /// One cardinality for all nodes, or a comma-separated list.
        #[arg(long, value_delimiter = ',', default_value = "2")]
        states: Vec<usize>,
        #[arg(short, long, default_value = "-")]
        out: PathBuf,
    },
    /// Forward-sample a dataset from a network.
    SampleData {
        #[arg(long)]
        network: PathBuf,
        #[arg(long)]
        samples: usize,
        #[arg(short, long, default_value = "-")]
        out: PathBuf,
        /// Also write the cardinality sidecar here.
        #[arg(long)]
        cards_out: Option<PathBuf>,
    },
    /// Exact intervention tables and effects of a network.
    TrueEffects {
        #[arg(long)]
        network: PathBuf,
        #[arg(long, default_value = "jsd")]
        effect: EffectKind,
        #[arg(short, long, default_value = "-")]
        out: PathBuf,
    },
    /// Estimate a CPDAG with the PC algorithm.
    Pc {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// Largest conditioning set; unlimited by default.
        #[arg(long)]
        max_cond: Option<usize>,
        #[arg(short, long, default_value = "-")]
        out: PathBuf,
    },
    /// Sample the DAG posterior, exactly (up to 5 nodes) or by MCMC.
    Learn {
        method: LearnMethod,
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = 1.0)]
        ess: f64,
        #[arg(long, default_value_t = 5)]
        max_parents: usize,
        #[arg(long, default_value_t = 100_000)]
        iters: usize,
        #[arg(long, default_value_t = 10_000)]
        burnin: usize,
        #[arg(long, default_value_t = 100)]
        thin: usize,
        #[arg(long, default_value_t = 1)]
        chains: usize,
        /// Restrict MCMC edges to the adjacencies of this PDAG (JSON).
        #[arg(long)]
        skeleton: Option<PathBuf>,
        /// Restrict MCMC edges to the PC skeleton at this level instead.
        #[arg(long, conflicts_with = "skeleton")]
        alpha: Option<f64>,
        /// DAGs, one JSON object per line.
        #[arg(short, long, default_value = "-")]
        out: PathBuf,
        /// Weights, one per line (exact posteriors).
        #[arg(long)]
        weights_out: Option<PathBuf>,
    },
    /// BIDA posterior summaries of every pairwise effect.
    Bida {
        #[command(flatten)]
        data: DataArgs,
        /// DAG sample written by `learn`.
        #[arg(long)]
        dags: PathBuf,
        #[arg(long)]
        weights: Option<PathBuf>,
        #[arg(long, default_value = "pa")]
        adjustment: AdjustmentKind,
        #[arg(long, default_value_t = 1.0)]
        ess: f64,
        #[arg(long, default_value_t = 1000)]
        draws: usize,
        #[arg(long, default_value = "jsd")]
        effect: EffectKind,
        #[arg(short, long, default_value = "-")]
        out: PathBuf,
    },
    /// IDA point estimates over a PDAG.
    Ida {
        #[command(flatten)]
        data: DataArgs,
        /// PDAG JSON, e.g. from `pc`.
        #[arg(long)]
        pdag: PathBuf,
        #[arg(long, default_value = "pa")]
        variant: IdaVariant,
        #[arg(long, default_value_t = 1.0)]
        ess: f64,
        #[arg(long, default_value = "jsd")]
        effect: EffectKind,
        #[arg(long, default_value_t = DEFAULT_EXTENSION_CAP)]
        extension_cap: usize,
        #[arg(short, long, default_value = "-")]
        out: PathBuf,
    },
    /// Compare an effect table with the truth.
    Eval {
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        estimate: PathBuf,
        #[arg(long, default_value = "jsd")]
        effect: EffectKind,
    },
    /// Run a simulation experiment from a JSON or TOML config.
    Experiment {
        config: PathBuf,
        /// Overrides the config's output directory.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum LearnMethod {
    Exact,
    Mcmc,
}

#[derive(Args)]
struct DataArgs {
    /// Dataset CSV with a header row and integer category codes.
    #[arg(long)]
    data: PathBuf,
    /// Cardinality sidecar (`{"cards": [...]}`); inferred from the data otherwise.
    #[arg(long)]
    cards: Option<PathBuf>,
}

impl DataArgs {
    fn load(&self) -> Result<Dataset> {
        let cards = match &self.cards {
            Some(p) => Some(parse_cards_json(&read(p)?).with_context(|| format!("reading {}", p.display()))?),
            None => None,
        };
        let f = File::open(&self.data).with_context(|| format!("opening {}", self.data.display()))?;
        Dataset::from_csv(BufReader::new(f), cards.as_deref()).with_context(|| format!("reading {}", self.data.display()))
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn output(path: &Path) -> Result<Box<dyn Write>> {
    if path == Path::new("-") {
        Ok(Box::new(io::stdout().lock()))
    } else {
        let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        Ok(Box::new(io::BufWriter::new(f)))
    }
}

fn load_network(path: &Path) -> Result<CptNetwork> {
    CptNetwork::from_json(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let seed = cli.seed.unwrap_or(1);
    match cli.command {
        Command::RandomNetwork {
            nodes,
            expected_neighbors,
            states,
            out,
        } => {
            let cards = match states.as_slice() {
                [r] => vec![*r; nodes],
                list => list.to_vec(),
            };
            let net = CptNetwork::random(nodes, expected_neighbors, &cards, seed)?;
            writeln!(output(&out)?, "{}", net.to_json())?;
        }
        Command::SampleData {
            network,
            samples,
            out,
            cards_out,
        } => {
            let data = load_network(&network)?.forward_sample(samples, seed);
            data.write_csv(output(&out)?)?;
            if let Some(p) = cards_out {
                fs::write(&p, data.cards_json()).with_context(|| format!("writing {}", p.display()))?;
            }
        }
        Command::TrueEffects { network, effect, out } => {
            let net = load_network(&network)?;
            let table = EffectTable::from_ipts(net.all_interventions(bida::catbn::DEFAULT_STATE_CAP)?, effect)?;
            table.write_csv(output(&out)?)?;
        }
        Command::Pc {
            data,
            alpha,
            max_cond,
            out,
        } => {
            let pdag = pc_cpdag(&data.load()?, alpha, max_cond.unwrap_or(usize::MAX))?;
            writeln!(output(&out)?, "{}", pdag.to_json())?;
        }
        Command::Learn {
            method,
            data,
            ess,
            max_parents,
            iters,
            burnin,
            thin,
            chains,
            skeleton,
            alpha,
            out,
            weights_out,
        } => {
            let data = data.load()?;
            let sample = match method {
                LearnMethod::Exact => exact_dag_posterior(&data, ess, max_parents)?,
                LearnMethod::Mcmc => {
                    let skeleton = match (skeleton, alpha) {
                        (Some(p), _) => Some(Pdag::from_json(&read(&p)?)?),
                        (None, Some(a)) => Some(pc_cpdag(&data, a, usize::MAX)?),
                        (None, None) => None,
                    };
                    let config = McmcConfig {
                        iters,
                        burnin,
                        thin,
                        max_parents,
                        chains,
                        seed,
                        skeleton,
                    };
                    structure_mcmc(&data, ess, &config)?
                }
            };
            sample.write_dags(output(&out)?)?;
            if let Some(p) = weights_out {
                sample.write_weights(output(&p)?)?;
            }
        }
        Command::Bida {
            data,
            dags,
            weights,
            adjustment,
            ess,
            draws,
            effect,
            out,
        } => {
            let data = data.load()?;
            let dag_file = BufReader::new(File::open(&dags).with_context(|| format!("opening {}", dags.display()))?);
            let weight_file = match &weights {
                Some(p) => Some(BufReader::new(File::open(p).with_context(|| format!("opening {}", p.display()))?)),
                None => None,
            };
            let sample = DagSample::read(dag_file, weight_file)?;
            if sample.n() != data.n_vars() {
                bail!("DAGs have {} nodes but the data has {} variables", sample.n(), data.n_vars());
            }
            let mixtures = all_adjustment_posteriors(&sample, adjustment)?
                .iter()
                .map(|p| bida_mixture(&data, p, ess, DEFAULT_CELL_CAP))
                .collect::<bida::Result<Vec<_>>>()?;
            let (_, summary) = posterior_effect_summary(data.n_vars(), &mixtures, draws, effect, seed)?;
            summary.to_table().write_csv(output(&out)?)?;
        }
        Command::Ida {
            data,
            pdag,
            variant,
            ess,
            effect,
            extension_cap,
            out,
        } => {
            let data = data.load()?;
            let pdag = Pdag::from_json(&read(&pdag)?)?;
            let opts = IdaOptions {
                ess,
                kind: effect,
                extension_cap,
                cell_cap: DEFAULT_CELL_CAP,
            };
            let (effects, ipts) = harness::ida_estimate(&data, &pdag, variant, &opts)?;
            EffectTable {
                effects,
                ipts,
                mean_rank: None,
                prob_zero: None,
            }
            .write_csv(output(&out)?)?;
        }
        Command::Eval {
            truth,
            estimate,
            effect,
        } => {
            let open = |p: &Path| -> Result<EffectTable> {
                let f = File::open(p).with_context(|| format!("opening {}", p.display()))?;
                EffectTable::read_csv(BufReader::new(f)).with_context(|| format!("reading {}", p.display()))
            };
            let metrics = harness::evaluate(&open(&estimate)?, &open(&truth)?, effect)?;
            let mut out = io::stdout().lock();
            writeln!(out, "metric,value")?;
            for (m, v) in metrics {
                writeln!(out, "{m},{v}")?;
            }
        }
        Command::Experiment { config, output_dir } => {
            let mut cfg = ExperimentConfig::from_path(&config).with_context(|| format!("loading {}", config.display()))?;
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            if output_dir.is_some() {
                cfg.output_dir = output_dir;
            }
            let report = harness::run_experiment(&cfg)?;
            for f in &report.failures {
                eprintln!(
                    "failed: {} n={} replicate={} {}: {}",
                    f.network, f.n_samples, f.replicate, f.method, f.message
                );
            }
            let mut out = io::stdout().lock();
            if cfg.output_dir.is_none() {
                report.write_csv(&mut out)?;
            } else {
                report.write_summary_csv(&mut out)?;
            }
            let failed = report.rows.iter().filter(|r| r.metric == Metric::Failed).count();
            if failed > 0 {
                eprintln!("{failed} run(s) failed");
            }
        }
    }
    Ok(())
}
