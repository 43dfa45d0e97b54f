use std::path::Path;

use crate::error::{Error, Result};

/// Largest number of variables accepted for a truth table.
pub const MAX_TABLE_VARS: usize = 24;

/// Packed truth table over `vars` variables.
///
/// Entry `idx` is the output on the configuration whose bit `i` equals bit
/// `vars - 1 - i` of `idx`; bit 0 of a configuration is the most significant
/// bit of the table index.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TruthTable {
    vars: usize,
    words: Vec<u64>,
}

impl TruthTable {
    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        let len = bits.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(len));
        }
        let vars = len.trailing_zeros() as usize;
        if vars > MAX_TABLE_VARS {
            return Err(Error::ArityTooLarge {
                arity: vars,
                limit: MAX_TABLE_VARS,
            });
        }
        let mut words = vec![0u64; len.div_ceil(64)];
        for (idx, &b) in bits.iter().enumerate() {
            match b {
                0 => {}
                1 => words[idx / 64] |= 1 << (idx % 64),
                other => {
                    return Err(Error::Parse(format!(
                        "truth table entry {idx} is {other}, expected 0 or 1"
                    )))
                }
            }
        }
        Ok(Self { vars, words })
    }

    /// Parses a string of '0'/'1' characters; whitespace is ignored.
    pub fn parse_str(text: &str) -> Result<Self> {
        let mut bits = Vec::with_capacity(text.len());
        for ch in text.chars() {
            match ch {
                '0' => bits.push(0),
                '1' => bits.push(1),
                c if c.is_whitespace() => {}
                c => return Err(Error::Parse(format!("unexpected character {c:?} in truth table"))),
            }
        }
        Self::from_bits(&bits)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| {
            Error::Parse(format!("cannot read {}: {e}", path.as_ref().display()))
        })?;
        Self::parse_str(&text)
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    pub fn len(&self) -> usize {
        1 << self.vars
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn get(&self, idx: usize) -> bool {
        (self.words[idx / 64] >> (idx % 64)) & 1 == 1
    }

    /// Table index of a configuration.
    pub fn index_of(&self, bits: &[u8]) -> usize {
        bits.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize)
    }

    pub fn to_bit_string(&self) -> String {
        (0..self.len())
            .map(|i| if self.get(i) { '1' } else { '0' })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn msb_first_indexing() {
        // f(x0, x1) = x0 AND NOT x1: only index 0b10 is set.
        let t = TruthTable::parse_str("0010").unwrap();
        assert_eq!(t.vars(), 2);
        assert_eq!(t.index_of(&[1, 0]), 2);
        assert!(t.get(t.index_of(&[1, 0])));
        assert!(!t.get(t.index_of(&[0, 1])));
    }

    #[test]
    fn rejects_bad_lengths() {
        assert_eq!(TruthTable::parse_str("011"), Err(Error::NotPowerOfTwo(3)));
        assert_eq!(TruthTable::from_bits(&[]), Err(Error::NotPowerOfTwo(0)));
        assert!(TruthTable::parse_str("01x1").is_err());
    }
}
