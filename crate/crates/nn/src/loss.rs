use crate::NnError;

/// Mean masked cross-entropy over `rows` rows of `vocab` logits, and its
/// gradient with respect to the logits.
pub fn cross_entropy(
    logits: &[f64],
    vocab: usize,
    targets: &[usize],
    mask: &[bool],
) -> Result<(f64, Vec<f64>), NnError> {
    let rows = targets.len();
    if logits.len() != rows * vocab || mask.len() != rows {
        return Err(NnError::Shape(format!(
            "cross_entropy: {} logits, {} targets, {} mask entries, vocab {vocab}",
            logits.len(),
            rows,
            mask.len()
        )));
    }
    let count = mask.iter().filter(|&&m| m).count();
    if count == 0 {
        return Err(NnError::EmptyMask);
    }
    let mut grad = vec![0.0; logits.len()];
    let mut loss = 0.0;
    for r in 0..rows {
        if !mask[r] {
            continue;
        }
        let target = targets[r];
        if target >= vocab {
            return Err(NnError::TargetOutOfRange { target, vocab });
        }
        let row = &logits[r * vocab..(r + 1) * vocab];
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = row.iter().map(|x| (x - max).exp()).sum();
        let log_z = max + sum.ln();
        loss += log_z - row[target];
        let g = &mut grad[r * vocab..(r + 1) * vocab];
        for (gi, x) in g.iter_mut().zip(row) {
            *gi = (x - log_z).exp() / count as f64;
        }
        g[target] -= 1.0 / count as f64;
    }
    Ok((loss / count as f64, grad))
}

/// Numerically stable softmax of one row.
pub fn softmax(row: &[f64]) -> Vec<f64> {
    let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = row.iter().map(|x| (x - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Mean squared error and its gradient with respect to `prediction`.
pub fn mse(prediction: &[f64], target: &[f64]) -> Result<(f64, Vec<f64>), NnError> {
    if prediction.len() != target.len() {
        return Err(NnError::Shape(format!(
            "mse: prediction {} vs target {}",
            prediction.len(),
            target.len()
        )));
    }
    if prediction.is_empty() {
        return Ok((0.0, vec![]));
    }
    let n = prediction.len() as f64;
    let mut loss = 0.0;
    let grad = prediction
        .iter()
        .zip(target)
        .map(|(p, t)| {
            let d = p - t;
            loss += d * d;
            2.0 * d / n
        })
        .collect();
    Ok((loss / n, grad))
}
