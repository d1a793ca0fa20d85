use std::collections::BTreeMap;

use crate::SeqError;

/// Add-k smoothed n-gram model that backs off to the longest context it has seen.
#[derive(Clone, Debug, PartialEq)]
pub struct NGram {
    pub order: usize,
    pub k: f64,
    pub vocab: usize,
    /// `tables[n]` maps length-`n` contexts to next-token counts.
    tables: Vec<BTreeMap<Vec<u32>, BTreeMap<u32, u64>>>,
}

impl NGram {
    pub fn fit(corpus: &[Vec<u32>], order: usize, vocab: usize, k: f64) -> Result<NGram, SeqError> {
        if order == 0 {
            return Err(SeqError::Spec("n-gram order must be at least 1".into()));
        }
        if corpus.iter().all(|s| s.len() < 2) {
            return Err(SeqError::EmptyCorpus);
        }
        let mut tables = vec![BTreeMap::new(); order];
        for seq in corpus {
            for i in 1..seq.len() {
                let next = seq[i];
                if next as usize >= vocab {
                    return Err(SeqError::TokenOutOfRegion { position: i, token: next });
                }
                for (n, table) in tables.iter_mut().enumerate() {
                    if n > i {
                        break;
                    }
                    let ctx = seq[i - n..i].to_vec();
                    *table.entry(ctx).or_insert_with(BTreeMap::new).entry(next).or_insert(0) += 1;
                }
            }
        }
        Ok(NGram { order, k, vocab, tables })
    }

    /// Length of the context actually used for `context`.
    pub fn backoff_len(&self, context: &[u32]) -> usize {
        let longest = (self.order - 1).min(context.len());
        (0..=longest)
            .rev()
            .find(|&n| self.tables[n].contains_key(&context[context.len() - n..]))
            .unwrap_or(0)
    }

    pub fn next(&self, context: &[u32]) -> Vec<f64> {
        let n = self.backoff_len(context);
        let counts = self.tables[n].get(&context[context.len() - n..]);
        let mut dist = vec![self.k; self.vocab];
        let mut total = self.k * self.vocab as f64;
        if let Some(c) = counts {
            for (&t, &c) in c {
                dist[t as usize] += c as f64;
                total += c as f64;
            }
        }
        if total == 0.0 {
            return vec![1.0 / self.vocab as f64; self.vocab];
        }
        dist.iter_mut().for_each(|p| *p /= total);
        dist
    }

    /// Same counts truncated to a lower order.
    pub fn truncated(&self, order: usize) -> NGram {
        let order = order.clamp(1, self.order);
        NGram {
            order,
            k: self.k,
            vocab: self.vocab,
            tables: self.tables[..order].to_vec(),
        }
    }
}
