//! Nucleotide sequences over the four-letter DNA and RNA alphabets.
//!
//! A [`Sequence`] is always validated: every symbol belongs to its alphabet and
//! is stored uppercase. The alphabet is a type parameter, so transcription is
//! a conversion between [`DnaSeq`] and [`RnaSeq`] rather than a runtime check.

mod fasta;

use std::fmt;
use std::marker::PhantomData;
use std::ops::Range;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use thiserror::Error;

use crate::rng::RandomSource;

pub use fasta::{parse_fasta, read_fasta_file, write_fasta, FastaRecord, FASTA_LINE_WIDTH};

#[derive(Debug, Error, PartialEq)]
pub enum SeqError {
    #[error("invalid {alphabet} symbol {symbol:?} at position {position}")]
    InvalidSymbol {
        alphabet: &'static str,
        symbol: char,
        position: usize,
    },
    #[error("line {line}: invalid nucleotide {symbol:?}")]
    FastaSymbol { line: usize, symbol: char },
    #[error("line {line}: sequence data before the first '>' header")]
    FastaMissingHeader { line: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("mutation rate {0} is outside [0, 1]")]
    InvalidRate(f64),
    #[error("fragment length {frag_len} exceeds sequence length {seq_len}")]
    FragmentTooLong { frag_len: usize, seq_len: usize },
    #[error("{0} must be positive")]
    NotPositive(&'static str),
    #[error("similarity of two empty sequences is undefined")]
    EmptyComparison,
    #[error("i/o error: {0}")]
    Io(String),
}

/// A four-letter nucleotide alphabet. Symbols are indexed by a 2-bit code
/// (A=0, C=1, G=2, T/U=3) shared between DNA and RNA.
pub trait Alphabet: Copy + fmt::Debug + PartialEq + Eq + Send + Sync + 'static {
    const NAME: &'static str;
    const SYMBOLS: [u8; 4];

    fn code(symbol: u8) -> Option<u8> {
        Self::SYMBOLS.iter().position(|&s| s == symbol).map(|c| c as u8)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dna;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rna;

impl Alphabet for Dna {
    const NAME: &'static str = "DNA";
    const SYMBOLS: [u8; 4] = *b"ACGT";

    #[inline]
    fn code(symbol: u8) -> Option<u8> {
        match symbol {
            b'A' => Some(0),
            b'C' => Some(1),
            b'G' => Some(2),
            b'T' => Some(3),
            _ => None,
        }
    }
}

impl Alphabet for Rna {
    const NAME: &'static str = "RNA";
    const SYMBOLS: [u8; 4] = *b"ACGU";

    #[inline]
    fn code(symbol: u8) -> Option<u8> {
        match symbol {
            b'A' => Some(0),
            b'C' => Some(1),
            b'G' => Some(2),
            b'U' => Some(3),
            _ => None,
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Sequence<A: Alphabet> {
    bases: Vec<u8>,
    alphabet: PhantomData<A>,
}

pub type DnaSeq = Sequence<Dna>;
pub type RnaSeq = Sequence<Rna>;

impl<A: Alphabet> Sequence<A> {
    pub fn empty() -> Self {
        Self::from_validated(Vec::new())
    }

    /// Validates `bytes`, accepting lowercase input and normalizing it.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, SeqError> {
        let mut bases = Vec::with_capacity(bytes.len());
        for (position, &b) in bytes.iter().enumerate() {
            let up = b.to_ascii_uppercase();
            if A::code(up).is_none() {
                return Err(SeqError::InvalidSymbol {
                    alphabet: A::NAME,
                    symbol: b as char,
                    position,
                });
            }
            bases.push(up);
        }
        Ok(Self::from_validated(bases))
    }

    /// Builds a sequence from 2-bit codes; values are taken modulo 4.
    pub fn from_codes(codes: impl IntoIterator<Item = u8>) -> Self {
        Self::from_validated(
            codes
                .into_iter()
                .map(|c| A::SYMBOLS[(c & 3) as usize])
                .collect(),
        )
    }

    pub(crate) fn from_validated(bases: Vec<u8>) -> Self {
        debug_assert!(bases.iter().all(|&b| A::code(b).is_some()));
        Self {
            bases,
            alphabet: PhantomData,
        }
    }

    pub fn len(&self) -> usize {
        self.bases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bases.is_empty()
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bases
    }

    pub fn as_str(&self) -> &str {
        // Validated symbols are ASCII.
        std::str::from_utf8(&self.bases).expect("sequence symbols are ASCII")
    }

    pub fn codes(&self) -> impl DoubleEndedIterator<Item = u8> + ExactSizeIterator + '_ {
        self.bases
            .iter()
            .map(|&b| A::code(b).expect("validated symbol"))
    }

    pub fn subseq(&self, range: Range<usize>) -> Self {
        Self::from_validated(self.bases[range].to_vec())
    }

    pub fn concat<'a>(parts: impl IntoIterator<Item = &'a Self>) -> Self {
        let mut bases = Vec::new();
        for p in parts {
            bases.extend_from_slice(&p.bases);
        }
        Self::from_validated(bases)
    }

    pub fn hamming_distance(&self, other: &Self) -> Result<usize, SeqError> {
        if self.len() != other.len() {
            return Err(SeqError::LengthMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        Ok(self
            .bases
            .iter()
            .zip(&other.bases)
            .filter(|(a, b)| a != b)
            .count())
    }
}

impl<A: Alphabet> fmt::Display for Sequence<A> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl<A: Alphabet> fmt::Debug for Sequence<A> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.len() <= 64 {
            write!(f, "{}({})", A::NAME, self.as_str())
        } else {
            write!(f, "{}({}… {} nt)", A::NAME, &self.as_str()[..32], self.len())
        }
    }
}

impl<A: Alphabet> FromStr for Sequence<A> {
    type Err = SeqError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::from_bytes(s.as_bytes())
    }
}

/// DNA to RNA: T becomes U, everything else is unchanged.
pub fn transcribe(dna: &DnaSeq) -> RnaSeq {
    RnaSeq::from_validated(
        dna.as_bytes()
            .iter()
            .map(|&b| if b == b'T' { b'U' } else { b })
            .collect(),
    )
}

/// RNA to DNA: U becomes T.
pub fn back_transcribe(rna: &RnaSeq) -> DnaSeq {
    DnaSeq::from_validated(
        rna.as_bytes()
            .iter()
            .map(|&b| if b == b'U' { b'T' } else { b })
            .collect(),
    )
}

pub fn reverse_complement(dna: &DnaSeq) -> DnaSeq {
    DnaSeq::from_codes(dna.codes().rev().map(|c| 3 - c).collect::<Vec<_>>())
}

/// Number of positions a mutation at `rate` changes in a sequence of `len`
/// nucleotides (rounded half-up).
pub fn mutation_count(rate: f64, len: usize) -> usize {
    ((rate * len as f64).round() as usize).min(len)
}

/// Point-mutates exactly `round(rate * len)` distinct positions, each to one
/// of the three other nucleotides chosen uniformly.
pub fn mutate(seq: &DnaSeq, rate: f64, rng: &mut RandomSource) -> Result<DnaSeq, SeqError> {
    if !(0.0..=1.0).contains(&rate) || rate.is_nan() {
        return Err(SeqError::InvalidRate(rate));
    }
    let n = mutation_count(rate, seq.len());
    let mut codes: Vec<u8> = seq.codes().collect();
    for pos in index::sample(rng, seq.len(), n) {
        let shift: u8 = rng.random_range(1..4);
        codes[pos] = (codes[pos] + shift) & 3;
    }
    Ok(DnaSeq::from_codes(codes))
}

/// Draws `count` windows of `frag_len` nt with start positions uniform over
/// `[0, len - frag_len]`, with replacement and no wrap-around.
pub fn sample_fragments(
    seq: &DnaSeq,
    count: usize,
    frag_len: usize,
    rng: &mut RandomSource,
) -> Result<Vec<DnaSeq>, SeqError> {
    if count == 0 {
        return Err(SeqError::NotPositive("fragment count"));
    }
    if frag_len == 0 {
        return Err(SeqError::NotPositive("fragment length"));
    }
    if frag_len > seq.len() {
        return Err(SeqError::FragmentTooLong {
            frag_len,
            seq_len: seq.len(),
        });
    }
    let last = seq.len() - frag_len;
    Ok((0..count)
        .map(|_| {
            let start = rng.random_range(0..=last);
            seq.subseq(start..start + frag_len)
        })
        .collect())
}

/// Fraction of positions at which `a` and `b` agree.
pub fn similarity<A: Alphabet>(a: &Sequence<A>, b: &Sequence<A>) -> Result<f64, SeqError> {
    let d = a.hamming_distance(b)?;
    if a.is_empty() {
        return Err(SeqError::EmptyComparison);
    }
    Ok((a.len() - d) as f64 / a.len() as f64)
}

/// Largest mismatch count that still meets a similarity `threshold` over
/// `len` symbols, i.e. `floor((1 - threshold) * len)`.
pub fn max_mismatches(threshold: f64, len: usize) -> usize {
    // The epsilon absorbs representation error such as (1 - 0.9) * 10 = 0.999….
    (((1.0 - threshold) * len as f64) + 1e-9).floor().max(0.0) as usize
}
