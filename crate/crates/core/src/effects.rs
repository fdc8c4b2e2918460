//! Causal-effect contrasts of IPTs and posterior summaries of effects.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catbn::{EffectMatrix, Ipt, IptMatrix};
use crate::error::{Error, Result};
use crate::posterior::BidaMixture;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EffectKind {
    /// Jensen-Shannon divergence of the intervention distributions with
    /// uniform weights, in nats.
    #[default]
    Jsd,
    /// `P(Y = 1 | do(X = 1)) - P(Y = 1 | do(X = 0))` for binary pairs.
    Ate,
}

impl EffectKind {
    /// Value used for ranking: JSD as is, ATE by magnitude.
    pub fn strength(self, value: f64) -> f64 {
        match self {
            EffectKind::Jsd => value,
            EffectKind::Ate => value.abs(),
        }
    }
}

impl fmt::Display for EffectKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EffectKind::Jsd => "jsd",
            EffectKind::Ate => "ate",
        })
    }
}

impl FromStr for EffectKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jsd" => Ok(EffectKind::Jsd),
            "ate" => Ok(EffectKind::Ate),
            _ => Err(Error::InvalidArgument(format!("unknown effect kind `{s}`"))),
        }
    }
}

pub fn effect_of_ipt(ipt: &Ipt, kind: EffectKind) -> Result<f64> {
    match kind {
        EffectKind::Jsd => Ok(jsd(ipt)),
        EffectKind::Ate => {
            if ipt.r_cause() != 2 || ipt.r_effect() != 2 {
                return Err(Error::NotBinary);
            }
            Ok(ipt.get(1, 1) - ipt.get(0, 1))
        }
    }
}

/// Uniform-weight JSD. Identical rows give exactly zero; `0 log 0 = 0`.
pub fn jsd(ipt: &Ipt) -> f64 {
    let (rx, ry) = (ipt.r_cause(), ipt.r_effect());
    if (1..rx).all(|x| ipt.row(x) == ipt.row(0)) {
        return 0.0;
    }
    let w = 1.0 / rx as f64;
    let mut total = 0.0;
    for y in 0..ry {
        let m: f64 = (0..rx).map(|x| ipt.get(x, y)).sum::<f64>() * w;
        if m <= 0.0 {
            continue;
        }
        for x in 0..rx {
            let p = ipt.get(x, y);
            if p > 0.0 {
                total += w * p * (p / m).ln();
            }
        }
    }
    total.max(0.0)
}

/// Effect draws for a list of pairs, all with the same number of draws.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectDraws {
    pairs: Vec<(usize, usize)>,
    values: Vec<Vec<f64>>,
}

impl EffectDraws {
    pub fn new(pairs: Vec<(usize, usize)>, values: Vec<Vec<f64>>) -> Result<Self> {
        if pairs.len() != values.len() {
            return Err(Error::ShapeMismatch(format!("{} pairs, {} draw vectors", pairs.len(), values.len())));
        }
        if let Some(first) = values.first() {
            if let Some(bad) = values.iter().position(|v| v.len() != first.len()) {
                return Err(Error::ShapeMismatch(format!(
                    "pair {bad} has {} draws, expected {}",
                    values[bad].len(),
                    first.len()
                )));
            }
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite effect draw".into()));
        }
        Ok(EffectDraws { pairs, values })
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn draws(&self, k: usize) -> &[f64] {
        &self.values[k]
    }

    pub fn n_draws(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }
}

/// Average over draws of the tie-aware rank `R_ij = #{(l,k) : t_ij >= t_lk}`
/// taken over all listed pairs, self-comparison included.
pub fn posterior_mean_rank(draws: &EffectDraws) -> Vec<f64> {
    let p = draws.pairs.len();
    let m = draws.n_draws();
    let mut ranks = vec![0.0; p];
    if m == 0 {
        return ranks;
    }
    let mut col = vec![0.0; p];
    let mut sorted = vec![0.0; p];
    for d in 0..m {
        for (k, c) in col.iter_mut().enumerate() {
            *c = draws.values[k][d];
        }
        sorted.copy_from_slice(&col);
        sorted.sort_by(f64::total_cmp);
        for (r, &v) in ranks.iter_mut().zip(&col) {
            *r += sorted.partition_point(|&w| w <= v) as f64;
        }
    }
    ranks.iter_mut().for_each(|r| *r /= m as f64);
    ranks
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairSummary {
    pub cause: usize,
    pub effect: usize,
    /// Posterior mean of the effect, estimated from the draws.
    pub mean: f64,
    pub mean_rank: f64,
    /// Fraction of draws with an effect of exactly zero.
    pub prob_zero: f64,
    /// Closed-form posterior mean of the IPT.
    pub ipt_mean: Ipt,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EffectSummary {
    pub n: usize,
    pub kind: EffectKind,
    pub pairs: Vec<PairSummary>,
}

/// Draws `draws` effects per pair from the mixtures and summarizes them.
/// Each pair gets its own random stream keyed by `(seed, pair)`. Ranks use
/// [`EffectKind::strength`].
pub fn posterior_effect_summary(
    n: usize,
    mixtures: &[BidaMixture],
    draws: usize,
    kind: EffectKind,
    seed: u64,
) -> Result<(EffectDraws, EffectSummary)> {
    if draws == 0 {
        return Err(Error::InvalidArgument("need at least one draw".into()));
    }
    let values: Vec<Vec<f64>> = mixtures
        .par_iter()
        .map(|mix| {
            let mut rng = rng::stream(seed, (mix.cause * n + mix.effect) as u64);
            (0..draws)
                .map(|_| effect_of_ipt(&mix.sample(&mut rng), kind))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let pairs: Vec<(usize, usize)> = mixtures.iter().map(|m| (m.cause, m.effect)).collect();
    let strength = EffectDraws::new(
        pairs.clone(),
        values
            .iter()
            .map(|v| v.iter().map(|&t| kind.strength(t)).collect())
            .collect(),
    )?;
    let ranks = posterior_mean_rank(&strength);
    let summaries = mixtures
        .iter()
        .zip(&values)
        .zip(ranks)
        .map(|((mix, v), rank)| PairSummary {
            cause: mix.cause,
            effect: mix.effect,
            mean: v.iter().sum::<f64>() / draws as f64,
            mean_rank: rank,
            prob_zero: v.iter().filter(|&&t| t == 0.0).count() as f64 / draws as f64,
            ipt_mean: mix.ipt_mean(),
        })
        .collect();
    Ok((
        EffectDraws::new(pairs, values)?,
        EffectSummary {
            n,
            kind,
            pairs: summaries,
        },
    ))
}

impl EffectSummary {
    pub fn to_table(&self) -> EffectTable {
        let mut t = EffectTable::new(self.n);
        let mut rank = EffectMatrix::zeros(self.n);
        let mut zero = EffectMatrix::zeros(self.n);
        for p in &self.pairs {
            t.effects.set(p.cause, p.effect, p.mean);
            t.ipts[p.cause][p.effect] = Some(p.ipt_mean.clone());
            rank.set(p.cause, p.effect, p.mean_rank);
            zero.set(p.cause, p.effect, p.prob_zero);
        }
        t.mean_rank = Some(rank);
        t.prob_zero = Some(zero);
        t
    }
}

/// Per-pair effect estimates (or truths) with their IPTs, as written to and
/// read from effect CSV files.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectTable {
    pub effects: EffectMatrix,
    pub ipts: IptMatrix,
    pub mean_rank: Option<EffectMatrix>,
    pub prob_zero: Option<EffectMatrix>,
}

impl EffectTable {
    pub fn new(n: usize) -> Self {
        EffectTable {
            effects: EffectMatrix::zeros(n),
            ipts: vec![vec![None; n]; n],
            mean_rank: None,
            prob_zero: None,
        }
    }

    /// Effects of every IPT in `ipts`.
    pub fn from_ipts(ipts: IptMatrix, kind: EffectKind) -> Result<Self> {
        let n = ipts.len();
        let mut effects = EffectMatrix::zeros(n);
        for (i, row) in ipts.iter().enumerate() {
            if row.len() != n {
                return Err(Error::ShapeMismatch(format!("IPT row {i} has {} entries for {n} nodes", row.len())));
            }
            for (j, ipt) in row.iter().enumerate() {
                if let Some(ipt) = ipt {
                    effects.set(i, j, effect_of_ipt(ipt, kind)?);
                }
            }
        }
        Ok(EffectTable {
            effects,
            ipts,
            mean_rank: None,
            prob_zero: None,
        })
    }

    pub fn n(&self) -> usize {
        self.effects.n()
    }

    /// CSV with columns `i, j, effect`, then `mean_rank` and `prob_zero` when
    /// present, then `pi_<x>_<y>` cells row-major up to the largest
    /// cardinality. Cells outside a pair's table are empty.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let rmax = self
            .ipts
            .iter()
            .flatten()
            .flatten()
            .map(|t| t.r_cause().max(t.r_effect()))
            .max()
            .unwrap_or(0);
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = vec!["i".into(), "j".into(), "effect".into()];
        if self.mean_rank.is_some() {
            header.push("mean_rank".into());
        }
        if self.prob_zero.is_some() {
            header.push("prob_zero".into());
        }
        for x in 0..rmax {
            for y in 0..rmax {
                header.push(format!("pi_{x}_{y}"));
            }
        }
        w.write_record(&header)?;
        for (i, j) in self.effects.pairs() {
            let mut rec = vec![i.to_string(), j.to_string(), self.effects.get(i, j).to_string()];
            for m in [&self.mean_rank, &self.prob_zero].into_iter().flatten() {
                rec.push(m.get(i, j).to_string());
            }
            let ipt = self.ipts.get(i).and_then(|r| r.get(j)).and_then(Option::as_ref);
            for x in 0..rmax {
                for y in 0..rmax {
                    rec.push(match ipt {
                        Some(t) if x < t.r_cause() && y < t.r_effect() => t.get(x, y).to_string(),
                        _ => String::new(),
                    });
                }
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the format of [`EffectTable::write_csv`]. The node count is one
    /// more than the largest index; pairs that are not listed get a zero
    /// effect and no IPT. IPT shapes are inferred from the filled cells.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header = r.headers()?.clone();
        let col = |name: &str| header.iter().position(|h| h == name);
        let bad = |msg: String| Error::InvalidData(msg);
        let ci = col("i").ok_or_else(|| bad("missing column `i`".into()))?;
        let cj = col("j").ok_or_else(|| bad("missing column `j`".into()))?;
        let ce = col("effect").ok_or_else(|| bad("missing column `effect`".into()))?;
        let cr = col("mean_rank");
        let cz = col("prob_zero");
        let mut cells = Vec::new();
        for (k, h) in header.iter().enumerate() {
            if let Some(rest) = h.strip_prefix("pi_") {
                let (x, y) = rest
                    .split_once('_')
                    .and_then(|(x, y)| Some((x.parse::<usize>().ok()?, y.parse::<usize>().ok()?)))
                    .ok_or_else(|| bad(format!("bad IPT column `{h}`")))?;
                if x >= MAX_TABLE_STATES || y >= MAX_TABLE_STATES {
                    return Err(bad(format!("IPT column `{h}` out of range")));
                }
                cells.push((k, x, y));
            }
        }
        struct Row {
            i: usize,
            j: usize,
            effect: f64,
            rank: Option<f64>,
            zero: Option<f64>,
            ipt: Option<Ipt>,
        }
        let num = |s: &str, what: &str| -> Result<f64> {
            let v: f64 = s.parse().map_err(|_| bad(format!("bad {what} `{s}`")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(bad(format!("non-finite {what}")))
            }
        };
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let field = |c: usize| rec.get(c).unwrap_or("");
            let idx = |c: usize| -> Result<usize> {
                let v: usize = field(c).parse().map_err(|_| bad(format!("bad node index `{}`", field(c))))?;
                if v >= MAX_TABLE_NODES {
                    return Err(bad(format!("node index {v} too large")));
                }
                Ok(v)
            };
            let (i, j) = (idx(ci)?, idx(cj)?);
            if i == j {
                return Err(Error::SamePair(i));
            }
            let mut filled = Vec::new();
            for &(c, x, y) in &cells {
                if !field(c).is_empty() {
                    filled.push((x, y, num(field(c), "probability")?));
                }
            }
            let ipt = if filled.is_empty() {
                None
            } else {
                let rx = filled.iter().map(|c| c.0).max().unwrap_or(0) + 1;
                let ry = filled.iter().map(|c| c.1).max().unwrap_or(0) + 1;
                if filled.len() != rx * ry {
                    return Err(bad(format!("pair ({i}, {j}) has a ragged IPT")));
                }
                let mut t = vec![0.0; rx * ry];
                for (x, y, v) in filled {
                    t[x * ry + y] = v;
                }
                Some(Ipt::new(rx, ry, t)?)
            };
            rows.push(Row {
                i,
                j,
                effect: num(field(ce), "effect")?,
                rank: cr.map(|c| num(field(c), "mean rank")).transpose()?,
                zero: cz.map(|c| num(field(c), "zero probability")).transpose()?,
                ipt,
            });
        }
        let n = rows.iter().map(|r| r.i.max(r.j) + 1).max().unwrap_or(0);
        let mut t = EffectTable::new(n);
        if cr.is_some() {
            t.mean_rank = Some(EffectMatrix::zeros(n));
        }
        if cz.is_some() {
            t.prob_zero = Some(EffectMatrix::zeros(n));
        }
        for row in rows {
            t.effects.set(row.i, row.j, row.effect);
            if let (Some(m), Some(v)) = (t.mean_rank.as_mut(), row.rank) {
                m.set(row.i, row.j, v);
            }
            if let (Some(m), Some(v)) = (t.prob_zero.as_mut(), row.zero) {
                m.set(row.i, row.j, v);
            }
            t.ipts[row.i][row.j] = row.ipt;
        }
        Ok(t)
    }
}

// Guards against allocating huge tables from hostile input.
const MAX_TABLE_NODES: usize = 4096;
const MAX_TABLE_STATES: usize = 256;

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn ipt(rx: usize, ry: usize, rows: &[f64]) -> Ipt {
        Ipt::new(rx, ry, rows.to_vec()).unwrap()
    }

    #[test]
    fn jsd_examples() {
        assert_eq!(jsd(&ipt(2, 2, &[0.3, 0.7, 0.3, 0.7])), 0.0);
        assert_abs_diff_eq!(jsd(&ipt(2, 2, &[1.0, 0.0, 0.0, 1.0])), 2f64.ln(), epsilon = 1e-15);
        // ln 2 - H(0.8, 0.2), with H in nats.
        let h = -(0.8f64 * 0.8f64.ln() + 0.2 * 0.2f64.ln());
        let v = jsd(&ipt(2, 2, &[0.8, 0.2, 0.2, 0.8]));
        assert_abs_diff_eq!(v, 2f64.ln() - h, epsilon = 1e-15);
        assert_abs_diff_eq!(v, 0.192_745, epsilon = 1e-6);
    }

    #[test]
    fn ate_examples() {
        let t = ipt(2, 2, &[0.7, 0.3, 0.3, 0.7]);
        assert_abs_diff_eq!(effect_of_ipt(&t, EffectKind::Ate).unwrap(), 0.4, epsilon = 1e-15);
        assert!(effect_of_ipt(&ipt(3, 2, &[0.5; 6]), EffectKind::Ate).is_err());
    }

    #[test]
    fn mean_rank_examples() {
        let d = EffectDraws::new(vec![(0, 1), (1, 0)], vec![vec![0.5, 0.4], vec![0.1, 0.2]]).unwrap();
        assert_eq!(posterior_mean_rank(&d), vec![2.0, 1.0]);

        let d = EffectDraws::new(
            vec![(0, 1), (0, 2), (1, 0), (1, 2)],
            vec![vec![0.0], vec![0.0], vec![0.3], vec![0.0]],
        )
        .unwrap();
        assert_eq!(posterior_mean_rank(&d), vec![3.0, 3.0, 4.0, 3.0]);

        let d = EffectDraws::new(vec![(0, 1), (1, 0), (0, 2)], vec![vec![0.2]; 3]).unwrap();
        assert_eq!(posterior_mean_rank(&d), vec![3.0; 3]);
    }

    #[test]
    fn mismatched_draw_counts_are_rejected() {
        assert!(EffectDraws::new(vec![(0, 1), (1, 0)], vec![vec![0.1], vec![0.1, 0.2]]).is_err());
        assert!(EffectDraws::new(vec![(0, 1)], vec![vec![f64::NAN]]).is_err());
    }

    #[test]
    fn kind_parses() {
        assert_eq!("jsd".parse::<EffectKind>().unwrap(), EffectKind::Jsd);
        assert_eq!("ate".parse::<EffectKind>().unwrap(), EffectKind::Ate);
        assert!("mi".parse::<EffectKind>().is_err());
    }

    #[test]
    fn effect_table_round_trips() {
        let mut ipts: IptMatrix = vec![vec![None; 3]; 3];
        ipts[0][1] = Some(ipt(2, 3, &[0.2, 0.3, 0.5, 0.1, 0.1, 0.8]));
        ipts[1][0] = Some(ipt(3, 2, &[0.5, 0.5, 0.25, 0.75, 1.0, 0.0]));
        ipts[2][0] = Some(ipt(2, 2, &[0.5, 0.5, 0.5, 0.5]));
        let mut t = EffectTable::from_ipts(ipts, EffectKind::Jsd).unwrap();
        t.mean_rank = Some(EffectMatrix::zeros(3));
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let back = EffectTable::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, t);
        assert!(EffectTable::read_csv("i,j\n0,1\n".as_bytes()).is_err());
        assert!(EffectTable::read_csv("i,j,effect,pi_0_0,pi_1_1\n0,1,0.1,0.5,0.5\n".as_bytes()).is_err());
        assert!(EffectTable::read_csv("i,j,effect\n1,1,0.1\n".as_bytes()).is_err());
    }
}
