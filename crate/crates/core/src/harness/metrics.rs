//! Error and ranking metrics against known true effects.

use crate::catbn::{EffectMatrix, IptMatrix};
use crate::effects::EffectKind;
use crate::error::{Error, Result};

/// Tolerance below which a true effect counts as zero.
pub const ZERO_EFFECT_TOL: f64 = 1e-9;

/// Mean squared error of effects over the off-diagonal pairs.
pub fn mse_tau(est: &EffectMatrix, truth: &EffectMatrix) -> Result<f64> {
    if est.n() != truth.n() {
        return Err(Error::ShapeMismatch(format!("{} vs {} nodes", est.n(), truth.n())));
    }
    let n = est.n();
    if n < 2 {
        return Ok(0.0);
    }
    let sum: f64 = est.pairs().map(|(i, j)| (est.get(i, j) - truth.get(i, j)).powi(2)).sum();
    Ok(sum / (n * (n - 1)) as f64)
}

/// Cell-averaged squared IPT error per pair, averaged over off-diagonal
/// pairs. Diagonal entries are ignored.
pub fn mse_pi(est: &IptMatrix, truth: &IptMatrix) -> Result<f64> {
    let n = truth.len();
    if est.len() != n {
        return Err(Error::ShapeMismatch(format!("{} vs {n} IPT rows", est.len())));
    }
    if n < 2 {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for i in 0..n {
        if est[i].len() != n || truth[i].len() != n {
            return Err(Error::ShapeMismatch(format!("IPT row {i} length differs from {n}")));
        }
        for j in (0..n).filter(|&j| j != i) {
            let (Some(e), Some(t)) = (&est[i][j], &truth[i][j]) else {
                return Err(Error::ShapeMismatch(format!("missing IPT for pair ({i}, {j})")));
            };
            if e.r_cause() != t.r_cause() || e.r_effect() != t.r_effect() {
                return Err(Error::ShapeMismatch(format!("IPT shapes differ for pair ({i}, {j})")));
            }
            let cells = e.as_slice().len() as f64;
            total += e.as_slice().iter().zip(t.as_slice()).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / cells;
        }
    }
    Ok(total / (n * (n - 1)) as f64)
}

/// Average precision of the score-descending ranking. Tied scores form one
/// block: the block's positives all get the precision reached at the end of
/// the block, so the result does not depend on tie order.
pub fn auc_pr(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::ShapeMismatch(format!("{} scores, {} labels", scores.len(), labels.len())));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidArgument("NaN score".into()));
    }
    let positives = labels.iter().filter(|&&l| l).count();
    if positives == 0 {
        return Err(Error::NoPositives);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let (mut seen, mut hits, mut sum) = (0usize, 0usize, 0.0);
    let mut k = 0;
    while k < order.len() {
        let mut end = k;
        while end < order.len() && scores[order[end]] == scores[order[k]] {
            end += 1;
        }
        let block_hits = order[k..end].iter().filter(|&&o| labels[o]).count();
        seen += end - k;
        hits += block_hits;
        let precision = hits as f64 / seen as f64;
        if block_hits == positives {
            // All positives in one block: skip the round trip through `sum`.
            return Ok(precision);
        }
        sum += block_hits as f64 * precision;
        k = end;
    }
    Ok(sum / positives as f64)
}

/// Off-diagonal pairs whose true effect strength exceeds the zero tolerance.
pub fn nonzero_labels(truth: &EffectMatrix, kind: EffectKind) -> Vec<bool> {
    truth
        .off_diagonal()
        .iter()
        .map(|&t| kind.strength(t) > ZERO_EFFECT_TOL)
        .collect()
}

/// Pairs among the `ceil(fraction * k)` strongest of the `k` nonzero true
/// effects; pairs tied with the weakest selected one are included too.
pub fn top_fraction_labels(truth: &EffectMatrix, kind: EffectKind, fraction: f64) -> Vec<bool> {
    let strengths: Vec<f64> = truth.off_diagonal().iter().map(|&t| kind.strength(t)).collect();
    let mut nonzero: Vec<f64> = strengths.iter().copied().filter(|&s| s > ZERO_EFFECT_TOL).collect();
    if nonzero.is_empty() {
        return vec![false; strengths.len()];
    }
    nonzero.sort_by(|a, b| b.total_cmp(a));
    let take = ((fraction * nonzero.len() as f64).ceil() as usize).clamp(1, nonzero.len());
    let cutoff = nonzero[take - 1];
    strengths.iter().map(|&s| s > ZERO_EFFECT_TOL && s >= cutoff).collect()
}
