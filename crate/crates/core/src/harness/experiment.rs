//! Simulation experiments: random or fixed networks, sampled data, every
//! configured method, and a long-format report of metrics.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::baselines::{ida_estimate, naive_estimate, IdaOptions, IdaVariant, NaiveKind, DEFAULT_EXTENSION_CAP};
use super::metrics::{auc_pr, mse_pi, mse_tau, nonzero_labels, top_fraction_labels};
use crate::catbn::{CptNetwork, DEFAULT_STATE_CAP};
use crate::data::Dataset;
use crate::effects::{posterior_effect_summary, EffectKind, EffectTable};
use crate::error::{Error, Result};
use crate::graph::{AdjustmentKind, Pdag};
use crate::posterior::{bida_mixture, DEFAULT_CELL_CAP};
use crate::rng;
use crate::structlearn::{all_adjustment_posteriors, exact_dag_posterior, pc_cpdag, structure_mcmc, DagSample, McmcConfig, MAX_EXACT_NODES};

/// Fraction of nonzero true effects labelled strong.
pub const STRONG_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Bida(AdjustmentKind),
    Ida(IdaVariant),
    Naive(NaiveKind),
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::Bida(AdjustmentKind::Parent),
        Method::Bida(AdjustmentKind::MinimalParent),
        Method::Bida(AdjustmentKind::OSet),
        Method::Bida(AdjustmentKind::MinimalOSet),
        Method::Ida(IdaVariant::Parent),
        Method::Ida(IdaVariant::Optimal),
        Method::Naive(NaiveKind::Conditional),
        Method::Naive(NaiveKind::Marginal),
    ];

    fn code(self) -> u64 {
        Method::ALL.iter().position(|&m| m == self).unwrap_or(0) as u64
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Bida(k) => write!(f, "bida-{k}"),
            Method::Ida(v) => write!(f, "ida-{v}"),
            Method::Naive(NaiveKind::Conditional) => f.write_str("naive-conditional"),
            Method::Naive(NaiveKind::Marginal) => f.write_str("naive-marginal"),
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .iter()
            .copied()
            .find(|m| m.to_string() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown method `{s}`")))
    }
}

impl Serialize for Method {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Method {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Cardinalities of a random network: one value for every node, or a list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum States {
    Same(usize),
    PerNode(Vec<usize>),
}

impl Default for States {
    fn default() -> Self {
        States::Same(2)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum NetworkSource {
    /// A fresh random network per replicate.
    Random {
        nodes: usize,
        expected_neighbors: f64,
        #[serde(default)]
        states: States,
    },
    /// The same network (JSON) for every replicate.
    File(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StructureSource {
    /// Exact enumeration up to the exact-node limit, MCMC beyond it.
    #[default]
    Auto,
    Exact,
    Mcmc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McmcSettings {
    pub iters: usize,
    pub burnin: usize,
    pub thin: usize,
    pub max_parents: usize,
    pub chains: usize,
    /// Restrict edges to the PC skeleton of the same data.
    pub restrict_to_skeleton: bool,
}

impl Default for McmcSettings {
    fn default() -> Self {
        let d = McmcConfig::default();
        McmcSettings {
            iters: d.iters,
            burnin: d.burnin,
            thin: d.thin,
            max_parents: d.max_parents,
            chains: d.chains,
            restrict_to_skeleton: false,
        }
    }
}

fn default_ess() -> f64 {
    1.0
}
fn default_alpha() -> f64 {
    0.05
}
fn default_draws() -> usize {
    1000
}
fn default_cap() -> usize {
    DEFAULT_EXTENSION_CAP
}
fn default_name() -> String {
    "net".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub network: NetworkSource,
    /// Label used in the report and in output file names.
    #[serde(default = "default_name")]
    pub name: String,
    pub sample_sizes: Vec<usize>,
    pub replicates: usize,
    pub methods: Vec<Method>,
    #[serde(default = "default_ess")]
    pub ess: f64,
    #[serde(default)]
    pub structure: StructureSource,
    #[serde(default)]
    pub mcmc: McmcSettings,
    #[serde(default = "default_alpha")]
    pub pc_alpha: f64,
    /// Largest PC conditioning set; unlimited when absent.
    #[serde(default)]
    pub pc_max_cond: Option<usize>,
    #[serde(default)]
    pub effect: EffectKind,
    #[serde(default = "default_draws")]
    pub draws: usize,
    #[serde(default = "default_cap")]
    pub ida_extension_cap: usize,
    pub seed: u64,
    /// Where per-run effect CSVs and the report go; nothing is written when
    /// absent.
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Adds wall-clock seconds per run. Off by default so reports are
    /// reproducible byte for byte.
    #[serde(default)]
    pub timings: bool,
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let c: ExperimentConfig = serde_json::from_str(s)?;
        c.validate()?;
        Ok(c)
    }

    pub fn from_toml(s: &str) -> Result<Self> {
        let c: ExperimentConfig = toml::from_str(s)?;
        c.validate()?;
        Ok(c)
    }

    /// Reads TOML for `.toml` files and JSON otherwise. A relative network
    /// file path is taken relative to the config file.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let mut c = if path.extension().is_some_and(|e| e == "toml") {
            Self::from_toml(&text)?
        } else {
            Self::from_json(&text)?
        };
        if let NetworkSource::File(p) = &mut c.network {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.into()));
        if self.sample_sizes.is_empty() {
            return bad("sample_sizes is empty");
        }
        if self.replicates == 0 {
            return bad("replicates must be positive");
        }
        if self.methods.is_empty() {
            return bad("methods is empty");
        }
        if self.draws == 0 {
            return bad("draws must be positive");
        }
        if !(self.ess > 0.0 && self.ess.is_finite()) {
            return bad("ess must be positive");
        }
        if !(self.pc_alpha > 0.0 && self.pc_alpha < 1.0) {
            return bad("pc_alpha must lie in (0, 1)");
        }
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return bad("name must be non-empty and free of path separators");
        }
        let m = &self.mcmc;
        if m.iters <= m.burnin || m.thin == 0 || m.chains == 0 {
            return bad("mcmc needs iters > burnin and positive thin and chains");
        }
        if let NetworkSource::Random { nodes, states, .. } = &self.network {
            if *nodes == 0 {
                return bad("random network needs at least one node");
            }
            if let States::PerNode(v) = states {
                if v.len() != *nodes {
                    return bad("states list length differs from node count");
                }
            }
        }
        Ok(())
    }

    fn mcmc_config(&self, seed: u64, skeleton: Option<Pdag>) -> McmcConfig {
        McmcConfig {
            iters: self.mcmc.iters,
            burnin: self.mcmc.burnin,
            thin: self.mcmc.thin,
            max_parents: self.mcmc.max_parents,
            chains: self.mcmc.chains,
            seed,
            skeleton,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Metric {
    MseTau,
    MsePi,
    AucPrNonzero,
    AucPrTop,
    /// AUC-PR with posterior mean ranks as scores (BIDA only).
    AucPrNonzeroRank,
    AucPrTopRank,
    Seconds,
    Failed,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::MseTau => "mse_tau",
            Metric::MsePi => "mse_pi",
            Metric::AucPrNonzero => "auc_pr_nonzero",
            Metric::AucPrTop => "auc_pr_top20",
            Metric::AucPrNonzeroRank => "auc_pr_nonzero_rank",
            Metric::AucPrTopRank => "auc_pr_top20_rank",
            Metric::Seconds => "seconds",
            Metric::Failed => "failed",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub network: String,
    pub n_samples: usize,
    pub replicate: usize,
    pub method: Method,
    pub metric: Metric,
    pub value: f64,
}

impl ReportRow {
    fn key(&self) -> (&str, usize, usize, Method, Metric) {
        (&self.network, self.n_samples, self.replicate, self.method, self.metric)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunFailure {
    pub network: String,
    pub n_samples: usize,
    pub replicate: usize,
    pub method: Method,
    pub message: String,
}

/// Long-format results. Rows are sorted by network, sample size,
/// replicate, method and metric, so the order of computation never shows.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalReport {
    pub rows: Vec<ReportRow>,
    pub failures: Vec<RunFailure>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub network: String,
    pub n_samples: usize,
    pub method: Method,
    pub metric: Metric,
    pub median: f64,
    pub runs: usize,
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        (v[k / 2 - 1] + v[k / 2]) / 2.0
    }
}

impl EvalReport {
    fn sort(&mut self) {
        self.rows.sort_by(|a, b| a.key().cmp(&b.key()).then(a.value.total_cmp(&b.value)));
        self.failures.sort_by(|a, b| {
            (&a.network, a.n_samples, a.replicate, a.method)
                .cmp(&(&b.network, b.n_samples, b.replicate, b.method))
                .then_with(|| a.message.cmp(&b.message))
        });
    }

    /// Rows matching a method and metric, in report order.
    pub fn values(&self, method: Method, metric: Metric) -> Vec<&ReportRow> {
        self.rows.iter().filter(|r| r.method == method && r.metric == metric).collect()
    }

    /// Median over replicates for each (network, N, method, metric).
    pub fn medians(&self) -> Vec<SummaryRow> {
        let mut groups: BTreeMap<(&str, usize, Method, Metric), Vec<f64>> = BTreeMap::new();
        for r in &self.rows {
            groups.entry((&r.network, r.n_samples, r.method, r.metric)).or_default().push(r.value);
        }
        groups
            .into_iter()
            .map(|((network, n_samples, method, metric), mut v)| SummaryRow {
                network: network.to_string(),
                n_samples,
                method,
                metric,
                runs: v.len(),
                median: median(&mut v),
            })
            .collect()
    }

    /// CSV `network,n,replicate,method,metric,value`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["network", "n", "replicate", "method", "metric", "value"])?;
        for r in &self.rows {
            w.write_record([
                r.network.clone(),
                r.n_samples.to_string(),
                r.replicate.to_string(),
                r.method.to_string(),
                r.metric.to_string(),
                r.value.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_failures_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["network", "n", "replicate", "method", "message"])?;
        for f in &self.failures {
            w.write_record([
                f.network.clone(),
                f.n_samples.to_string(),
                f.replicate.to_string(),
                f.method.to_string(),
                f.message.clone(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_summary_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["network", "n", "method", "metric", "median", "runs"])?;
        for s in self.medians() {
            w.write_record([
                s.network,
                s.n_samples.to_string(),
                s.method.to_string(),
                s.metric.to_string(),
                s.median.to_string(),
                s.runs.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Metrics of one estimate table against the truth. AUC-PR rows are left
/// out when the truth has no positives under that label definition.
pub fn evaluate(estimate: &EffectTable, truth: &EffectTable, kind: EffectKind) -> Result<Vec<(Metric, f64)>> {
    let mut out = vec![
        (Metric::MseTau, mse_tau(&estimate.effects, &truth.effects)?),
        (Metric::MsePi, mse_pi(&estimate.ipts, &truth.ipts)?),
    ];
    let nonzero = nonzero_labels(&truth.effects, kind);
    let top = top_fraction_labels(&truth.effects, kind, STRONG_FRACTION);
    let scores: Vec<f64> = estimate.effects.off_diagonal().iter().map(|&t| kind.strength(t)).collect();
    let ranks = estimate.mean_rank.as_ref().map(|m| m.off_diagonal());
    let mut push_auc = |metric: Metric, scores: &[f64], labels: &[bool]| -> Result<()> {
        match auc_pr(scores, labels) {
            Ok(v) => out.push((metric, v)),
            Err(Error::NoPositives) => {}
            Err(e) => return Err(e),
        }
        Ok(())
    };
    push_auc(Metric::AucPrNonzero, &scores, &nonzero)?;
    push_auc(Metric::AucPrTop, &scores, &top)?;
    if let Some(r) = &ranks {
        push_auc(Metric::AucPrNonzeroRank, r, &nonzero)?;
        push_auc(Metric::AucPrTopRank, r, &top)?;
    }
    Ok(out)
}

/// Shared inputs of every method for one (replicate, sample size).
struct RunInputs {
    data: Dataset,
    pdag: Option<Result<Pdag>>,
    dags: Option<Result<DagSample>>,
}

const TAG_NETWORK: u64 = 1;
const TAG_DATA: u64 = 2;
const TAG_STRUCTURE: u64 = 3;
const TAG_METHOD: u64 = 4;

fn upstream(stage: &'static str, e: &Error) -> Error {
    Error::Upstream {
        stage,
        message: e.to_string(),
    }
}

/// BIDA posterior means, IDA or naive estimates for one method.
pub fn estimate_method(
    method: Method,
    data: &Dataset,
    dags: Option<&DagSample>,
    pdag: Option<&Pdag>,
    config: &ExperimentConfig,
    seed: u64,
) -> Result<EffectTable> {
    let n = data.n_vars();
    let missing = |what: &str| Error::InvalidArgument(format!("{method} needs a {what}"));
    match method {
        Method::Bida(kind) => {
            let dags = dags.ok_or_else(|| missing("DAG sample"))?;
            let mixtures = all_adjustment_posteriors(dags, kind)?
                .par_iter()
                .map(|p| bida_mixture(data, p, config.ess, DEFAULT_CELL_CAP))
                .collect::<Result<Vec<_>>>()?;
            let (_, summary) = posterior_effect_summary(n, &mixtures, config.draws, config.effect, seed)?;
            Ok(summary.to_table())
        }
        Method::Ida(variant) => {
            let pdag = pdag.ok_or_else(|| missing("PC graph"))?;
            let opts = IdaOptions {
                ess: config.ess,
                kind: config.effect,
                extension_cap: config.ida_extension_cap,
                cell_cap: DEFAULT_CELL_CAP,
            };
            let (effects, ipts) = ida_estimate(data, pdag, variant, &opts)?;
            Ok(EffectTable {
                effects,
                ipts,
                mean_rank: None,
                prob_zero: None,
            })
        }
        Method::Naive(kind) => EffectTable::from_ipts(naive_estimate(data, kind, config.ess)?, config.effect),
    }
}

fn effects_dir(config: &ExperimentConfig) -> Option<PathBuf> {
    config.output_dir.as_ref().map(|d| d.join("effects"))
}

fn write_table(dir: &Path, file: &str, table: &EffectTable) -> Result<()> {
    table.write_csv(fs::File::create(dir.join(file))?)
}

/// Runs the whole experiment. Per-run failures are recorded in the report
/// (and as `failed` rows) rather than aborting; configuration and output
/// errors abort.
pub fn run_experiment(config: &ExperimentConfig) -> Result<EvalReport> {
    config.validate()?;
    let fixed = match &config.network {
        NetworkSource::File(p) => Some(CptNetwork::from_json(&fs::read_to_string(p)?)?),
        NetworkSource::Random { .. } => None,
    };
    let dir = effects_dir(config);
    if let Some(d) = &dir {
        fs::create_dir_all(d)?;
    }
    let mut methods = config.methods.clone();
    methods.sort();
    methods.dedup();
    let name = config.name.as_str();

    // Networks and exact truths per replicate.
    let truths: Vec<Result<(CptNetwork, EffectTable)>> = (0..config.replicates)
        .into_par_iter()
        .map(|rep| {
            let net = match (&fixed, &config.network) {
                (Some(net), _) => net.clone(),
                (None, NetworkSource::Random { nodes, expected_neighbors, states }) => {
                    let cards = match states {
                        States::Same(r) => vec![*r; *nodes],
                        States::PerNode(v) => v.clone(),
                    };
                    CptNetwork::random(*nodes, *expected_neighbors, &cards, rng::mix(&[config.seed, rep as u64, TAG_NETWORK]))?
                }
                (None, NetworkSource::File(_)) => unreachable!("file networks are loaded up front"),
            };
            let truth = EffectTable::from_ipts(net.all_interventions(DEFAULT_STATE_CAP)?, config.effect)?;
            if let Some(d) = &dir {
                write_table(d, &format!("{name}_r{rep}_truth.csv"), &truth)?;
            }
            Ok((net, truth))
        })
        .collect();

    let tasks: Vec<(usize, usize)> = (0..config.replicates)
        .flat_map(|rep| config.sample_sizes.iter().map(move |&n| (rep, n)))
        .collect();
    let needs_dags = methods.iter().any(|m| matches!(m, Method::Bida(_)));
    let needs_pdag = config.mcmc.restrict_to_skeleton || methods.iter().any(|m| matches!(m, Method::Ida(_)));

    let per_task: Vec<Result<EvalReport>> = tasks
        .par_iter()
        .map(|&(rep, n_samples)| {
            let mut report = EvalReport::default();
            let fail = |report: &mut EvalReport, method: Method, e: &Error| {
                report.failures.push(RunFailure {
                    network: name.to_string(),
                    n_samples,
                    replicate: rep,
                    method,
                    message: e.to_string(),
                });
                report.rows.push(ReportRow {
                    network: name.to_string(),
                    n_samples,
                    replicate: rep,
                    method,
                    metric: Metric::Failed,
                    value: 1.0,
                });
            };
            let (net, truth) = match &truths[rep] {
                Ok(t) => t,
                Err(e) => {
                    for &m in &methods {
                        fail(&mut report, m, e);
                    }
                    return Ok(report);
                }
            };
            let data = net.forward_sample(n_samples, rng::mix(&[config.seed, rep as u64, TAG_DATA, n_samples as u64]));
            let mut inputs = RunInputs {
                data,
                pdag: None,
                dags: None,
            };
            if needs_pdag {
                inputs.pdag = Some(pc_cpdag(&inputs.data, config.pc_alpha, config.pc_max_cond.unwrap_or(usize::MAX)));
            }
            if needs_dags {
                let seed = rng::mix(&[config.seed, rep as u64, TAG_STRUCTURE, n_samples as u64]);
                let exact = match config.structure {
                    StructureSource::Exact => true,
                    StructureSource::Mcmc => false,
                    StructureSource::Auto => net.n() <= MAX_EXACT_NODES,
                };
                inputs.dags = Some(if exact {
                    exact_dag_posterior(&inputs.data, config.ess, config.mcmc.max_parents)
                } else {
                    let skeleton = match (&inputs.pdag, config.mcmc.restrict_to_skeleton) {
                        (Some(Ok(p)), true) => Ok(Some(p.clone())),
                        (Some(Err(e)), true) => Err(upstream("PC", e)),
                        _ => Ok(None),
                    };
                    skeleton.and_then(|s| structure_mcmc(&inputs.data, config.ess, &config.mcmc_config(seed, s)))
                });
            }

            let results: Vec<(Method, Result<(EffectTable, f64)>)> = methods
                .par_iter()
                .map(|&method| {
                    let start = Instant::now();
                    let seed = rng::mix(&[config.seed, rep as u64, TAG_METHOD, n_samples as u64, method.code()]);
                    let dags = match &inputs.dags {
                        Some(Ok(d)) => Some(d),
                        Some(Err(e)) if matches!(method, Method::Bida(_)) => return (method, Err(upstream("structure learning", e))),
                        _ => None,
                    };
                    let pdag = match &inputs.pdag {
                        Some(Ok(p)) => Some(p),
                        Some(Err(e)) if matches!(method, Method::Ida(_)) => return (method, Err(upstream("PC", e))),
                        _ => None,
                    };
                    let r = estimate_method(method, &inputs.data, dags, pdag, config, seed)
                        .map(|t| (t, start.elapsed().as_secs_f64()));
                    (method, r)
                })
                .collect();

            for (method, r) in results {
                let outcome = r.and_then(|(table, secs)| {
                    if let Some(d) = &dir {
                        write_table(d, &format!("{name}_r{rep}_n{n_samples}_{method}.csv"), &table)?;
                    }
                    Ok((evaluate(&table, truth, config.effect)?, secs))
                });
                match outcome {
                    Ok((metrics, secs)) => {
                        let row = |metric, value| ReportRow {
                            network: name.to_string(),
                            n_samples,
                            replicate: rep,
                            method,
                            metric,
                            value,
                        };
                        report.rows.extend(metrics.into_iter().map(|(m, v)| row(m, v)));
                        if config.timings {
                            report.rows.push(row(Metric::Seconds, secs));
                        }
                    }
                    Err(Error::Io(e)) => return Err(Error::Io(e)),
                    Err(e) => fail(&mut report, method, &e),
                }
            }
            Ok(report)
        })
        .collect();

    let mut report = EvalReport::default();
    for r in per_task {
        let r = r?;
        report.rows.extend(r.rows);
        report.failures.extend(r.failures);
    }
    report.sort();
    if let Some(out) = &config.output_dir {
        report.write_csv(fs::File::create(out.join("report.csv"))?)?;
        report.write_summary_csv(fs::File::create(out.join("summary.csv"))?)?;
        if !report.failures.is_empty() {
            report.write_failures_csv(fs::File::create(out.join("failures.csv"))?)?;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config(methods: &[&str]) -> ExperimentConfig {
        let methods = methods.iter().map(|m| format!("\"{m}\"")).collect::<Vec<_>>().join(",");
        ExperimentConfig::from_json(&format!(
            r#"{{
                "network": {{"random": {{"nodes": 4, "expected_neighbors": 2.0}}}},
                "sample_sizes": [50, 200],
                "replicates": 2,
                "methods": [{methods}],
                "draws": 50,
                "seed": 5
            }}"#
        ))
        .unwrap()
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.to_string().parse::<Method>().unwrap(), m);
        }
        assert_eq!(Method::Bida(AdjustmentKind::MinimalOSet).to_string(), "bida-o-min");
        assert!("bida-x".parse::<Method>().is_err());
    }

    #[test]
    fn config_formats_agree() {
        let json = small_config(&["bida-pa", "ida-o"]);
        let toml = ExperimentConfig::from_toml(
            r#"
            sample_sizes = [50, 200]
            replicates = 2
            methods = ["bida-pa", "ida-o"]
            draws = 50
            seed = 5
            [network.random]
            nodes = 4
            expected_neighbors = 2.0
            "#,
        )
        .unwrap();
        assert_eq!(json, toml);
        assert_eq!(json.ess, 1.0);
        assert_eq!(json.pc_alpha, 0.05);
        assert_eq!(json.effect, EffectKind::Jsd);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut c = small_config(&["naive-marginal"]);
        c.methods.clear();
        assert!(c.validate().is_err());
        let mut c = small_config(&["naive-marginal"]);
        c.replicates = 0;
        assert!(c.validate().is_err());
        assert!(ExperimentConfig::from_json(r#"{"network": {"file": "x"}, "sample_sizes": [], "replicates": 1, "methods": ["ida-pa"], "seed": 1}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"network": {"file": "x"}, "sample_sizes": [1], "replicates": 1, "methods": ["ida-pa"], "seed": 1, "bogus": 2}"#).is_err());
    }

    #[test]
    fn marginal_reference_error_is_mean_squared_truth() {
        let config = small_config(&["naive-marginal"]);
        let report = run_experiment(&config).unwrap();
        assert!(report.failures.is_empty());
        for rep in 0..2 {
            let net = CptNetwork::random(4, 2.0, &[2; 4], rng::mix(&[5, rep as u64, TAG_NETWORK])).unwrap();
            let truth = net.true_effects(EffectKind::Jsd).unwrap();
            let want = truth.off_diagonal().iter().map(|t| t * t).sum::<f64>() / 12.0;
            for r in report.values(Method::Naive(NaiveKind::Marginal), Metric::MseTau) {
                if r.replicate == rep {
                    assert!((r.value - want).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn reports_are_reproducible() {
        let config = small_config(&["bida-pa-min", "ida-pa", "naive-conditional"]);
        let render = |r: &EvalReport| {
            let mut buf = Vec::new();
            r.write_csv(&mut buf).unwrap();
            buf
        };
        let a = run_experiment(&config).unwrap();
        let b = run_experiment(&config).unwrap();
        assert_eq!(render(&a), render(&b));
        // Method order in the config does not matter.
        let mut shuffled = config.clone();
        shuffled.methods.reverse();
        assert_eq!(render(&a), render(&run_experiment(&shuffled).unwrap()));
        assert!(a.rows.iter().all(|r| r.value.is_finite()));
        let medians = a.medians();
        assert!(medians.iter().all(|m| m.runs == 2));
    }

    #[test]
    fn run_failures_are_recorded() {
        // ATE on ternary variables fails at the truth stage of every run.
        let mut config = small_config(&["naive-conditional"]);
        config.effect = EffectKind::Ate;
        config.network = NetworkSource::Random {
            nodes: 3,
            expected_neighbors: 1.0,
            states: States::Same(3),
        };
        let report = run_experiment(&config).unwrap();
        assert_eq!(report.failures.len(), 4);
        assert!(report.rows.iter().all(|r| r.metric == Metric::Failed));
    }

    #[test]
    fn writes_effect_files() {
        let dir = std::env::temp_dir().join(format!("bida-exp-{}", std::process::id()));
        let mut config = small_config(&["naive-conditional"]);
        config.output_dir = Some(dir.clone());
        config.replicates = 1;
        config.sample_sizes = vec![30];
        run_experiment(&config).unwrap();
        let est = EffectTable::read_csv(fs::File::open(dir.join("effects/net_r0_n30_naive-conditional.csv")).unwrap()).unwrap();
        let truth = EffectTable::read_csv(fs::File::open(dir.join("effects/net_r0_truth.csv")).unwrap()).unwrap();
        assert_eq!(est.n(), 4);
        assert_eq!(truth.n(), 4);
        assert!(dir.join("report.csv").exists());
        fs::remove_dir_all(dir).unwrap();
    }
}
