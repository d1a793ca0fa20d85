//! Finite scalar quantization: each dimension is squashed with a shifted tanh
//! and rounded to one of `L` levels; the codebook is the product lattice.

use serde::{Deserialize, Serialize};

use crate::NnError;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FsqSpec {
    pub levels: Vec<u32>,
}

/// How the forward pass treats rounding.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FsqMode {
    /// Round to the lattice; backward is straight-through.
    Quantize,
    /// Skip rounding (smooth surrogate used for gradient checks).
    Relaxed,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FsqOutput {
    /// Lattice values (or bounded values in relaxed mode), centred on zero.
    pub code: Vec<f64>,
    /// Derivative of the bound w.r.t. its input, per dimension.
    pub dcode_dz: Vec<f64>,
    pub index: usize,
}

impl Default for FsqSpec {
    fn default() -> Self {
        FsqSpec {
            levels: vec![8, 8, 8, 5, 5, 5],
        }
    }
}

impl FsqSpec {
    pub fn new(levels: Vec<u32>) -> Result<FsqSpec, NnError> {
        if levels.is_empty() || levels.iter().any(|&l| l < 2) {
            return Err(NnError::Config(format!("FSQ levels must all be >= 2: {levels:?}")));
        }
        Ok(FsqSpec { levels })
    }

    pub fn dim(&self) -> usize {
        self.levels.len()
    }

    pub fn codebook_size(&self) -> usize {
        self.levels.iter().map(|&l| l as usize).product()
    }

    fn half(l: u32) -> f64 {
        (l as f64 - 1.0) / 2.0
    }

    fn offset(l: u32) -> f64 {
        if l % 2 == 0 {
            0.5
        } else {
            0.0
        }
    }

    /// Bounded value and its derivative for one dimension.
    pub fn bound(&self, i: usize, z: f64) -> (f64, f64) {
        let l = self.levels[i];
        let (half, offset) = (Self::half(l), Self::offset(l));
        let shift = (offset / half).atanh();
        let t = (z + shift).tanh();
        (t * half - offset, (1.0 - t * t) * half)
    }

    pub fn quantize(&self, z: &[f64], mode: FsqMode) -> Result<FsqOutput, NnError> {
        if z.len() != self.dim() {
            return Err(NnError::Shape(format!("FSQ expects {} dims, got {}", self.dim(), z.len())));
        }
        let mut code = Vec::with_capacity(z.len());
        let mut dcode_dz = Vec::with_capacity(z.len());
        for (i, &zi) in z.iter().enumerate() {
            let (b, db) = self.bound(i, zi);
            code.push(match mode {
                FsqMode::Quantize => b.round(),
                FsqMode::Relaxed => b,
            });
            dcode_dz.push(db);
        }
        let index = match mode {
            FsqMode::Quantize => self.code_to_index(&code)?,
            FsqMode::Relaxed => {
                let rounded: Vec<f64> = code.iter().map(|c| c.round()).collect();
                self.code_to_index(&rounded)?
            }
        };
        Ok(FsqOutput { code, dcode_dz, index })
    }

    /// Mixed-radix index; the first dimension is the least significant digit.
    pub fn code_to_index(&self, code: &[f64]) -> Result<usize, NnError> {
        if code.len() != self.dim() {
            return Err(NnError::Shape(format!("FSQ expects {} dims, got {}", self.dim(), code.len())));
        }
        let mut index = 0usize;
        let mut radix = 1usize;
        for (&c, &l) in code.iter().zip(&self.levels) {
            let digit = c as i64 + (l / 2) as i64;
            if !(0..l as i64).contains(&digit) || c.fract() != 0.0 {
                return Err(NnError::Config(format!("{c} is not a level of an {l}-level dimension")));
            }
            index += digit as usize * radix;
            radix *= l as usize;
        }
        Ok(index)
    }

    pub fn index_to_code(&self, index: usize) -> Result<Vec<f64>, NnError> {
        if index >= self.codebook_size() {
            return Err(NnError::CodeOutOfRange {
                index,
                size: self.codebook_size(),
            });
        }
        let mut rest = index;
        Ok(self
            .levels
            .iter()
            .map(|&l| {
                let digit = rest % l as usize;
                rest /= l as usize;
                digit as f64 - (l / 2) as f64
            })
            .collect())
    }

    /// Code scaled to roughly [-1, 1] per dimension, the form fed to decoders.
    pub fn normalize(&self, code: &[f64]) -> Vec<f64> {
        code.iter()
            .zip(&self.levels)
            .map(|(c, &l)| c / (l / 2) as f64)
            .collect()
    }

    pub fn normalize_scale(&self) -> Vec<f64> {
        self.levels.iter().map(|&l| 1.0 / (l / 2) as f64).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_codebook() {
        assert_eq!(FsqSpec::default().codebook_size(), 64_000);
    }

    #[test]
    fn centre_and_saturation() {
        let s = FsqSpec::new(vec![5]).unwrap();
        let out = s.quantize(&[0.0], FsqMode::Quantize).unwrap();
        assert_eq!((out.code[0], out.index), (0.0, 2));
        let out = s.quantize(&[10.0], FsqMode::Quantize).unwrap();
        assert_eq!((out.code[0], out.index), (2.0, 4));
        let out = s.quantize(&[-10.0], FsqMode::Quantize).unwrap();
        assert_eq!(out.index, 0);
    }

    #[test]
    fn even_levels_cover_all_digits() {
        let s = FsqSpec::new(vec![8]).unwrap();
        let mut seen: Vec<usize> = (-60..=60)
            .map(|i| s.quantize(&[i as f64 / 10.0], FsqMode::Quantize).unwrap().index)
            .collect();
        seen.sort();
        seen.dedup();
        assert_eq!(seen, (0..8).collect::<Vec<_>>());
        assert_eq!(s.quantize(&[0.0], FsqMode::Quantize).unwrap().code[0], 0.0);
    }

    #[test]
    fn rejects_bad_levels() {
        assert!(FsqSpec::new(vec![8, 1]).is_err());
        assert!(FsqSpec::default().quantize(&[0.0; 3], FsqMode::Quantize).is_err());
    }
}
