//! The CRISPR locus: a leader followed by repeat-delimited spacers.
//!
//! Spacers are kept as records with provenance; the nucleotide form
//! `leader · repeat · (spacer · repeat)*` is produced on demand by
//! [`CrisprLocus::flatten`].
//!
//! # File format
//!
//! Line-oriented UTF-8 text. `#` starts a comment only on the first column of
//! lines after the magic line; blank lines are ignored.
//!
//! ```text
//! CRISPR-LOCUS v1
//! leader <DNA or ->
//! repeat <DNA>
//! spacer-length <n>
//! insertion <leader|distal>
//! epoch <n>
//! spacer <naive|primed> <acquired_at> <DNA>
//! ```
//!
//! The header keys appear once each, in this order, before any `spacer` line.
//! Spacer lines are listed in locus order (index 0 first). `-` stands for an
//! empty leader.

use std::collections::VecDeque;
use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seq::DnaSeq;

/// The Type I-E repeat placed between spacers (29 nt).
pub const DEFAULT_REPEAT: &str = "GAGTTCCCCGCGCGAGCGGGGATAAACCG";

/// Fixed 100-nt placeholder leader. Nothing is ever matched against the
/// leader, so its content does not affect simulation outcomes.
pub const DEFAULT_LEADER: &str =
    "ACGACCCCTAAGCCAGGCACTTCTACACAGACCAAGGTAGCAACTTATCACCGCTGCCCGAAGTGTGACGAATGTTATAGCGAGTCGCCTATTTAGGGCA";

pub const DEFAULT_SPACER_LEN: usize = 32;

const MAGIC: &str = "CRISPR-LOCUS v1";

#[derive(Debug, Error, PartialEq)]
pub enum LocusError {
    #[error("repeat sequence must not be empty")]
    EmptyRepeat,
    #[error("spacer length must be positive")]
    ZeroSpacerLength,
    #[error("spacer is {actual} nt, locus expects {expected} nt")]
    SpacerLength { expected: usize, actual: usize },
    #[error("locus file line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Naive,
    Primed,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Origin::Naive => "naive",
            Origin::Primed => "primed",
        })
    }
}

impl FromStr for Origin {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "naive" => Ok(Origin::Naive),
            "primed" => Ok(Origin::Primed),
            other => Err(format!("unknown origin {other:?}")),
        }
    }
}

/// Where newly acquired spacers go.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InsertPosition {
    /// Index 0, next to the leader.
    #[default]
    Leader,
    /// After the last spacer.
    Distal,
}

impl fmt::Display for InsertPosition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InsertPosition::Leader => "leader",
            InsertPosition::Distal => "distal",
        })
    }
}

impl FromStr for InsertPosition {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "leader" => Ok(InsertPosition::Leader),
            "distal" => Ok(InsertPosition::Distal),
            other => Err(format!("unknown insertion mode {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpacerRecord {
    pub sequence: DnaSeq,
    pub origin: Origin,
    /// Value of the locus epoch when the spacer was inserted.
    pub acquired_at: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrisprLocus {
    leader: DnaSeq,
    repeat: DnaSeq,
    spacer_len: usize,
    insertion: InsertPosition,
    epoch: u64,
    spacers: VecDeque<SpacerRecord>,
}

impl Default for CrisprLocus {
    fn default() -> Self {
        Self::new(
            DEFAULT_LEADER.parse().expect("default leader is valid DNA"),
            DEFAULT_REPEAT.parse().expect("default repeat is valid DNA"),
        )
        .expect("default repeat is non-empty")
    }
}

impl CrisprLocus {
    /// An empty locus with the default 32-nt spacer length.
    pub fn new(leader: DnaSeq, repeat: DnaSeq) -> Result<Self, LocusError> {
        Self::with_spacer_len(leader, repeat, DEFAULT_SPACER_LEN)
    }

    pub fn with_spacer_len(leader: DnaSeq, repeat: DnaSeq, spacer_len: usize) -> Result<Self, LocusError> {
        if repeat.is_empty() {
            return Err(LocusError::EmptyRepeat);
        }
        if spacer_len == 0 {
            return Err(LocusError::ZeroSpacerLength);
        }
        Ok(Self {
            leader,
            repeat,
            spacer_len,
            insertion: InsertPosition::Leader,
            epoch: 0,
            spacers: VecDeque::new(),
        })
    }

    pub fn with_insertion(mut self, insertion: InsertPosition) -> Self {
        self.insertion = insertion;
        self
    }

    pub fn leader(&self) -> &DnaSeq {
        &self.leader
    }

    pub fn repeat(&self) -> &DnaSeq {
        &self.repeat
    }

    pub fn spacer_len(&self) -> usize {
        self.spacer_len
    }

    pub fn insertion(&self) -> InsertPosition {
        self.insertion
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    /// Sets the counter stamped on subsequently inserted spacers.
    pub fn set_epoch(&mut self, epoch: u64) {
        self.epoch = epoch;
    }

    pub fn spacer_count(&self) -> usize {
        self.spacers.len()
    }

    pub fn spacers(&self) -> impl ExactSizeIterator<Item = &SpacerRecord> {
        self.spacers.iter()
    }

    pub fn spacer(&self, index: usize) -> Option<&SpacerRecord> {
        self.spacers.get(index)
    }

    pub fn contains_spacer(&self, seq: &DnaSeq) -> bool {
        self.spacers.iter().any(|r| r.sequence == *seq)
    }

    pub fn insert_spacer(&mut self, spacer: DnaSeq, origin: Origin) -> Result<(), LocusError> {
        if spacer.len() != self.spacer_len {
            return Err(LocusError::SpacerLength {
                expected: self.spacer_len,
                actual: spacer.len(),
            });
        }
        let record = SpacerRecord {
            sequence: spacer,
            origin,
            acquired_at: self.epoch,
        };
        match self.insertion {
            InsertPosition::Leader => self.spacers.push_front(record),
            InsertPosition::Distal => self.spacers.push_back(record),
        }
        Ok(())
    }

    /// Length of [`flatten`](Self::flatten) without building it.
    pub fn flat_len(&self) -> usize {
        self.leader.len() + self.repeat.len() + self.spacers.len() * (self.spacer_len + self.repeat.len())
    }

    /// `leader · repeat · (spacer · repeat)*` in index order.
    pub fn flatten(&self) -> DnaSeq {
        let mut parts: Vec<&DnaSeq> = vec![&self.leader, &self.repeat];
        for r in &self.spacers {
            parts.push(&r.sequence);
            parts.push(&self.repeat);
        }
        DnaSeq::concat(parts)
    }

    pub fn save<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{MAGIC}")?;
        let leader = if self.leader.is_empty() {
            "-"
        } else {
            self.leader.as_str()
        };
        writeln!(out, "leader {leader}")?;
        writeln!(out, "repeat {}", self.repeat)?;
        writeln!(out, "spacer-length {}", self.spacer_len)?;
        writeln!(out, "insertion {}", self.insertion)?;
        writeln!(out, "epoch {}", self.epoch)?;
        for r in &self.spacers {
            writeln!(out, "spacer {} {} {}", r.origin, r.acquired_at, r.sequence)?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.save(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("locus text is ASCII")
    }

    pub fn load(text: &str) -> Result<Self, LocusError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim_end()))
            .filter(|(i, l)| *i == 1 || !(l.is_empty() || l.starts_with('#')));

        let err = |line: usize, message: String| LocusError::Parse { line, message };

        match lines.next() {
            Some((_, MAGIC)) => {}
            Some((line, other)) => return Err(err(line, format!("expected {MAGIC:?}, found {other:?}"))),
            None => return Err(err(1, "empty file".into())),
        }

        let mut header = |key: &str| -> Result<(usize, String), LocusError> {
            let (line, text) = lines
                .next()
                .ok_or_else(|| err(text.lines().count() + 1, format!("missing {key:?} line")))?;
            let value = text
                .strip_prefix(key)
                .and_then(|v| v.strip_prefix(' '))
                .ok_or_else(|| err(line, format!("expected {key:?}, found {text:?}")))?;
            Ok((line, value.to_string()))
        };

        let (line, leader) = header("leader")?;
        let leader = if leader == "-" {
            DnaSeq::empty()
        } else {
            leader.parse().map_err(|e| err(line, format!("leader: {e}")))?
        };
        let (line, repeat) = header("repeat")?;
        let repeat: DnaSeq = repeat.parse().map_err(|e| err(line, format!("repeat: {e}")))?;
        let (line, spacer_len) = header("spacer-length")?;
        let spacer_len: usize = spacer_len
            .parse()
            .map_err(|_| err(line, format!("bad spacer length {spacer_len:?}")))?;
        let (line, insertion) = header("insertion")?;
        let insertion: InsertPosition = insertion.parse().map_err(|e| err(line, e))?;
        let (line, epoch) = header("epoch")?;
        let epoch: u64 = epoch.parse().map_err(|_| err(line, format!("bad epoch {epoch:?}")))?;

        let mut locus = Self::with_spacer_len(leader, repeat, spacer_len)
            .map_err(|e| err(line, e.to_string()))?
            .with_insertion(insertion);
        locus.epoch = epoch;

        for (line, text) in lines {
            let mut fields = text.split(' ');
            if fields.next() != Some("spacer") {
                return Err(err(line, format!("expected a spacer record, found {text:?}")));
            }
            let (Some(origin), Some(at), Some(seq), None) =
                (fields.next(), fields.next(), fields.next(), fields.next())
            else {
                return Err(err(line, "spacer record needs origin, epoch and sequence".into()));
            };
            let origin: Origin = origin.parse().map_err(|e| err(line, e))?;
            let acquired_at: u64 = at.parse().map_err(|_| err(line, format!("bad epoch {at:?}")))?;
            let sequence: DnaSeq = seq.parse().map_err(|e| err(line, format!("spacer: {e}")))?;
            if sequence.len() != spacer_len {
                return Err(err(
                    line,
                    format!("spacer is {} nt, expected {spacer_len}", sequence.len()),
                ));
            }
            locus.spacers.push_back(SpacerRecord {
                sequence,
                origin,
                acquired_at,
            });
        }
        Ok(locus)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomSource;
    use proptest::prelude::*;
    use rand::Rng;

    fn random_dna(rng: &mut RandomSource, n: usize) -> DnaSeq {
        DnaSeq::from_codes((0..n).map(|_| rng.random_range(0..4u8)))
    }

    #[test]
    fn defaults() {
        let l = CrisprLocus::default();
        assert_eq!(l.repeat().len(), 29);
        assert_eq!(l.leader().len(), 100);
        assert_eq!(l.spacer_count(), 0);
        assert_eq!(l.spacer_len(), 32);
    }

    #[test]
    fn empty_locus_flattens_to_leader_and_repeat() {
        let l = CrisprLocus::default();
        let expected = format!("{DEFAULT_LEADER}{DEFAULT_REPEAT}");
        assert_eq!(l.flatten().as_str(), expected);
    }

    #[test]
    fn empty_repeat_is_rejected() {
        let leader: DnaSeq = "ACGT".parse().unwrap();
        assert_eq!(
            CrisprLocus::new(leader, DnaSeq::empty()),
            Err(LocusError::EmptyRepeat)
        );
    }

    #[test]
    fn insertion_is_leader_proximal() {
        let mut rng = RandomSource::new(1);
        let (s1, s2) = (random_dna(&mut rng, 32), random_dna(&mut rng, 32));
        let mut l = CrisprLocus::default();
        l.insert_spacer(s1.clone(), Origin::Naive).unwrap();
        l.insert_spacer(s2.clone(), Origin::Primed).unwrap();
        let order: Vec<_> = l.spacers().map(|r| r.sequence.clone()).collect();
        assert_eq!(order, vec![s2.clone(), s1.clone()]);
        let flat = l.flatten();
        let expected = format!("{DEFAULT_LEADER}{DEFAULT_REPEAT}{s2}{DEFAULT_REPEAT}{s1}{DEFAULT_REPEAT}");
        assert_eq!(flat.as_str(), expected);

        let mut d = CrisprLocus::default().with_insertion(InsertPosition::Distal);
        d.insert_spacer(s1.clone(), Origin::Naive).unwrap();
        d.insert_spacer(s2.clone(), Origin::Naive).unwrap();
        assert_eq!(d.spacer(0).unwrap().sequence, s1);
    }

    #[test]
    fn single_spacer_structure() {
        let mut rng = RandomSource::new(2);
        let s = random_dna(&mut rng, 32);
        let mut l = CrisprLocus::default();
        l.insert_spacer(s.clone(), Origin::Naive).unwrap();
        assert_eq!(
            l.flatten().as_str(),
            format!("{DEFAULT_LEADER}{DEFAULT_REPEAT}{s}{DEFAULT_REPEAT}")
        );
    }

    #[test]
    fn wrong_spacer_length_is_rejected() {
        let mut rng = RandomSource::new(3);
        let mut l = CrisprLocus::default();
        assert_eq!(
            l.insert_spacer(random_dna(&mut rng, 31), Origin::Naive),
            Err(LocusError::SpacerLength {
                expected: 32,
                actual: 31
            })
        );
    }

    #[test]
    fn two_spacer_length_arithmetic() {
        let mut rng = RandomSource::new(4);
        let mut l = CrisprLocus::default();
        l.insert_spacer(random_dna(&mut rng, 32), Origin::Naive).unwrap();
        l.insert_spacer(random_dna(&mut rng, 32), Origin::Naive).unwrap();
        assert_eq!(l.flatten().len(), 251);
        assert_eq!(l.flat_len(), 251);
    }

    #[test]
    fn save_load_round_trip() {
        let mut rng = RandomSource::new(5);
        let mut l = CrisprLocus::default();
        for (i, origin) in [Origin::Naive, Origin::Primed, Origin::Naive].into_iter().enumerate() {
            l.set_epoch(i as u64 * 3);
            l.insert_spacer(random_dna(&mut rng, 32), origin).unwrap();
        }
        let text = l.to_text();
        assert_eq!(CrisprLocus::load(&text).unwrap(), l);
    }

    #[test]
    fn empty_leader_round_trips() {
        let l = CrisprLocus::new(DnaSeq::empty(), DEFAULT_REPEAT.parse().unwrap()).unwrap();
        assert_eq!(CrisprLocus::load(&l.to_text()).unwrap(), l);
    }

    #[test]
    fn load_errors() {
        assert!(matches!(
            CrisprLocus::load(""),
            Err(LocusError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            CrisprLocus::load("CRISPR-LOCUS v9\n"),
            Err(LocusError::Parse { line: 1, .. })
        ));
        let good = CrisprLocus::default().to_text();
        let truncated: String = good.lines().take(3).map(|l| format!("{l}\n")).collect();
        assert!(matches!(
            CrisprLocus::load(&truncated),
            Err(LocusError::Parse { .. })
        ));
        let bad = format!("{good}spacer naive 0 ACGT\n");
        assert!(matches!(
            CrisprLocus::load(&bad),
            Err(LocusError::Parse { line: 7, .. })
        ));
    }

    proptest! {
        #[test]
        fn flatten_length_formula(n in 0usize..30, seed in any::<u64>(), distal in any::<bool>()) {
            let mut rng = RandomSource::new(seed);
            let mut l = CrisprLocus::default();
            if distal {
                l = l.with_insertion(InsertPosition::Distal);
            }
            for i in 0..n {
                let origin = if i % 2 == 0 { Origin::Naive } else { Origin::Primed };
                l.insert_spacer(random_dna(&mut rng, 32), origin).unwrap();
            }
            prop_assert_eq!(l.spacer_count(), n);
            prop_assert_eq!(l.flatten().len(), 100 + 29 + n * 61);
            let back = CrisprLocus::load(&l.to_text()).unwrap();
            prop_assert_eq!(back, l);
        }
    }
}
