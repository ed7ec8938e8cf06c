//! Finite symbol alphabets and lexicographic word indexing.
//!
//! Every matrix in this crate is indexed by the fixed symbol order of its
//! alphabets; words over an alphabet are ranked lexicographically with the
//! leftmost position most significant, so results are bit-reproducible
//! across runs.

use crate::error::{Error, Result};

/// A word over some alphabet, as symbol indices.
pub type Word = Vec<usize>;

/// An ordered finite set of distinct symbol labels.
///
/// The order is part of the value: it fixes row/column indices everywhere.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    symbols: Vec<String>,
}

impl Alphabet {
    /// Labels must be non-empty, pairwise distinct and free of commas
    /// (the separator used when labelling product alphabets).
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let symbols: Vec<String> = labels.into_iter().map(Into::into).collect();
        if symbols.is_empty() {
            return Err(Error::InvalidAlphabet("no symbols".into()));
        }
        for (i, s) in symbols.iter().enumerate() {
            if s.is_empty() {
                return Err(Error::InvalidAlphabet(format!("symbol {i} is empty")));
            }
            if s.contains(',') {
                return Err(Error::InvalidAlphabet(format!(
                    "symbol {s:?} contains a comma"
                )));
            }
            if symbols[..i].contains(s) {
                return Err(Error::InvalidAlphabet(format!("duplicate symbol {s:?}")));
            }
        }
        Ok(Alphabet { symbols })
    }

    /// Binary alphabet `0, 1`.
    pub fn binary() -> Self {
        Alphabet::new(["0", "1"]).expect("static labels")
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbol(&self, index: usize) -> &str {
        &self.symbols[index]
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.symbols.iter().position(|s| s == label)
    }

    /// The alphabet of length-`n` words, in lexicographic order.
    ///
    /// Labels are concatenated when every base label is a single character
    /// (`"01"`, `"ab"`), comma-joined otherwise. Callers materializing
    /// matrices over the result are responsible for budget checks.
    pub fn power(&self, n: usize) -> Result<Alphabet> {
        if n == 0 {
            return Err(Error::InvalidParameter("word length must be >= 1".into()));
        }
        let total = checked_word_count(self.len(), n).ok_or_else(|| {
            Error::InvalidParameter(format!("{}^{} words overflow", self.len(), n))
        })?;
        let concat = self.symbols.iter().all(|s| s.chars().count() == 1);
        let mut labels = Vec::with_capacity(total);
        for word in words(self.len(), n) {
            let parts: Vec<&str> = word.iter().map(|&i| self.symbol(i)).collect();
            labels.push(if concat {
                parts.concat()
            } else {
                parts.join(",")
            });
        }
        Ok(Alphabet { symbols: labels })
    }
}

/// `size^len` as `usize`, or `None` on overflow.
pub fn checked_word_count(size: usize, len: usize) -> Option<usize> {
    let mut acc: usize = 1;
    for _ in 0..len {
        acc = acc.checked_mul(size)?;
    }
    Some(acc)
}

/// Lexicographic rank of a word (leftmost symbol most significant).
pub fn word_index(word: &[usize], size: usize) -> usize {
    word.iter().fold(0, |acc, &s| acc * size + s)
}

/// Inverse of [`word_index`].
pub fn word_from_index(index: usize, size: usize, len: usize) -> Word {
    let mut rem = index;
    let mut out = vec![0; len];
    for slot in out.iter_mut().rev() {
        *slot = rem % size;
        rem /= size;
    }
    out
}

/// All length-`len` words over `size` symbols, in lexicographic order.
pub fn words(size: usize, len: usize) -> impl Iterator<Item = Word> {
    let total = checked_word_count(size, len).expect("word count overflows usize");
    (0..total).map(move |i| word_from_index(i, size, len))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_labels() {
        assert!(Alphabet::new(Vec::<String>::new()).is_err());
        assert!(Alphabet::new(["a", "a"]).is_err());
        assert!(Alphabet::new(["a", ""]).is_err());
        assert!(Alphabet::new(["a,b"]).is_err());
    }

    #[test]
    fn word_index_round_trip() {
        for (rank, w) in words(3, 2).enumerate() {
            assert_eq!(word_index(&w, 3), rank);
            assert_eq!(word_from_index(rank, 3, 2), w);
        }
    }

    #[test]
    fn power_labels_are_lexicographic() {
        let a = Alphabet::new(["0", "a", "b"]).unwrap();
        let p = a.power(2).unwrap();
        assert_eq!(p.len(), 9);
        assert_eq!(p.symbol(0), "00");
        assert_eq!(p.symbol(1), "0a");
        assert_eq!(p.symbol(5), "ab");
        assert_eq!(p.symbol(8), "bb");
    }

    #[test]
    fn power_of_multichar_labels_joins_with_commas() {
        let a = Alphabet::new(["s1", "s2"]).unwrap();
        let p = a.power(2).unwrap();
        assert_eq!(p.symbol(1), "s1,s2");
    }
}
