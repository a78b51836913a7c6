//! Classification metrics and the summary statistics used in reports.

use crate::error::{Error, Result};

/// Confusion counts for a binary classifier (label 1 = positive).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }

    /// Accuracy derived from the counts; exact, no rounding beyond the division.
    pub fn accuracy(&self) -> f64 {
        (self.tp + self.tn) as f64 / self.total() as f64
    }
}

fn check_lengths(preds: &[u8], truth: &[u8]) -> Result<()> {
    if preds.is_empty() {
        return Err(Error::InvalidArg("accuracy over empty sequences".into()));
    }
    if preds.len() != truth.len() {
        return Err(Error::DimMismatch {
            context: "predictions vs truth",
            expected: truth.len(),
            actual: preds.len(),
        });
    }
    Ok(())
}

/// Fraction of positions where `preds` equals `truth`.
pub fn accuracy(preds: &[u8], truth: &[u8]) -> Result<f64> {
    check_lengths(preds, truth)?;
    let hits = preds.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / preds.len() as f64)
}

pub fn confusion(preds: &[u8], truth: &[u8]) -> Result<ConfusionMatrix> {
    check_lengths(preds, truth)?;
    let mut cm = ConfusionMatrix {
        tp: 0,
        tn: 0,
        fp: 0,
        fn_: 0,
    };
    for (&p, &t) in preds.iter().zip(truth) {
        match (p, t) {
            (1, 1) => cm.tp += 1,
            (0, 0) => cm.tn += 1,
            (1, 0) => cm.fp += 1,
            (0, 1) => cm.fn_ += 1,
            _ => {
                return Err(Error::InvalidArg(format!(
                    "labels must be 0 or 1, got pred={p} truth={t}"
                )))
            }
        }
    }
    Ok(cm)
}

/// Arithmetic mean and population (1/N) standard deviation.
pub fn mean_std(xs: &[f64]) -> Result<(f64, f64)> {
    if xs.is_empty() {
        return Err(Error::InvalidArg("mean_std over empty sequence".into()));
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    Ok((mean, var.sqrt()))
}
