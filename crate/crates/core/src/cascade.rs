//! Expression and interference.
//!
//! Spacers are drawn from the locus with a leader-biased geometric
//! distribution, transcribed and wrapped in repeat-derived handles to form
//! crRNAs. Each crRNA is searched against a target genome; the PAM following
//! the matched window, together with the match quality, decides between
//! interference, primed adaptation and no action.

use std::fmt;
use std::str::FromStr;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::locus::CrisprLocus;
use crate::matcher::{Hit, NucleotideText, Pattern, SeedIndex};
use crate::rng::RandomSource;
use crate::seq::{back_transcribe, reverse_complement, transcribe, DnaSeq, RnaSeq};

/// The 8 repeat-derived nucleotides preceding the spacer in a mature crRNA.
pub const FIVE_PRIME_HANDLE: &str = "AUAAACCG";
/// The repeat-derived 3' flank, as printed in the model description.
pub const THREE_PRIME_HANDLE: &str = "GAGUCCCCGCGCGAGCGGGG";

pub const DEFAULT_MAX_MISMATCHES: u32 = 3;
pub const DEFAULT_BIAS: f64 = 0.99;

#[derive(Debug, Error, PartialEq)]
pub enum CascadeError {
    #[error("cannot transcribe an empty locus")]
    EmptyLocus,
    #[error("crRNA count must be positive")]
    ZeroCount,
    #[error("leader bias {0} is outside (0, 1]")]
    InvalidBias(f64),
    #[error("PAM must be 3 nt, got {0}")]
    PamLength(usize),
    #[error("invalid PAM {0:?}")]
    InvalidPam(String),
    #[error("PAM {0} is assigned to more than one class")]
    DuplicatePam(Pam),
    #[error("PAM {0} is not assigned to any class")]
    UnassignedPam(Pam),
    #[error("PAM table line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrrnaHandles {
    pub five_prime: RnaSeq,
    pub three_prime: RnaSeq,
}

impl Default for CrrnaHandles {
    fn default() -> Self {
        Self {
            five_prime: FIVE_PRIME_HANDLE.parse().expect("valid RNA"),
            three_prime: THREE_PRIME_HANDLE.parse().expect("valid RNA"),
        }
    }
}

/// A mature crRNA: 5' handle, transcribed spacer, 3' handle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Crrna {
    pub five_prime_handle: RnaSeq,
    pub spacer: RnaSeq,
    pub three_prime_handle: RnaSeq,
    pub source_spacer_index: usize,
}

impl Crrna {
    pub fn from_spacer(spacer: &DnaSeq, source_spacer_index: usize, handles: &CrrnaHandles) -> Self {
        Self {
            five_prime_handle: handles.five_prime.clone(),
            spacer: transcribe(spacer),
            three_prime_handle: handles.three_prime.clone(),
            source_spacer_index,
        }
    }

    pub fn len(&self) -> usize {
        self.five_prime_handle.len() + self.spacer.len() + self.three_prime_handle.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_rna(&self) -> RnaSeq {
        RnaSeq::concat([&self.five_prime_handle, &self.spacer, &self.three_prime_handle])
    }

    /// The DNA the spacer was copied from; windows are compared against this.
    pub fn protospacer(&self) -> DnaSeq {
        back_transcribe(&self.spacer)
    }

    fn pattern(&self) -> Pattern<2> {
        Pattern::new(NucleotideText::from_codes(&self.spacer.codes().collect::<Vec<_>>()))
    }
}

/// Selects `n` spacers with probability proportional to `bias^index` and
/// turns each into a crRNA.
pub fn transcribe_locus(
    locus: &CrisprLocus,
    n: usize,
    rng: &mut RandomSource,
    bias: f64,
    handles: &CrrnaHandles,
) -> Result<Vec<Crrna>, CascadeError> {
    if locus.spacer_count() == 0 {
        return Err(CascadeError::EmptyLocus);
    }
    if n == 0 {
        return Err(CascadeError::ZeroCount);
    }
    if !(bias > 0.0 && bias <= 1.0) {
        return Err(CascadeError::InvalidBias(bias));
    }
    let weights = leader_weights(locus.spacer_count(), bias);
    let dist = WeightedIndex::new(&weights).expect("leader weight is positive");
    Ok((0..n)
        .map(|_| {
            let i = dist.sample(rng);
            let record = locus.spacer(i).expect("index within locus");
            Crrna::from_spacer(&record.sequence, i, handles)
        })
        .collect())
}

/// Unnormalized selection weights `bias^i`.
pub fn leader_weights(count: usize, bias: f64) -> Vec<f64> {
    let mut w = Vec::with_capacity(count);
    let mut x = 1.0f64;
    for _ in 0..count {
        w.push(x);
        x *= bias;
    }
    w
}

/// A trinucleotide, stored as its 6-bit code (first base most significant).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pam(u8);

impl Pam {
    pub fn from_code(code: u8) -> Self {
        assert!(code < 64);
        Pam(code)
    }

    pub fn code(self) -> u8 {
        self.0
    }

    pub fn from_seq(seq: &DnaSeq) -> Result<Self, CascadeError> {
        if seq.len() != 3 {
            return Err(CascadeError::PamLength(seq.len()));
        }
        Ok(Pam(seq.codes().fold(0, |acc, c| (acc << 2) | c)))
    }

    pub fn all() -> impl Iterator<Item = Pam> {
        (0..64).map(Pam)
    }

    pub fn to_seq(self) -> DnaSeq {
        DnaSeq::from_codes([self.0 >> 4, self.0 >> 2, self.0])
    }
}

impl fmt::Display for Pam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.to_seq().as_str())
    }
}

impl FromStr for Pam {
    type Err = CascadeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let seq: DnaSeq = s.parse().map_err(|_| CascadeError::InvalidPam(s.to_string()))?;
        Pam::from_seq(&seq)
    }
}

impl Serialize for Pam {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PamClass {
    Stable,
    Interfering,
    Intermediate,
}

impl PamClass {
    pub const ALL: [PamClass; 3] = [PamClass::Stable, PamClass::Interfering, PamClass::Intermediate];

    pub fn name(self) -> &'static str {
        match self {
            PamClass::Stable => "stable",
            PamClass::Interfering => "interfering",
            PamClass::Intermediate => "intermediate",
        }
    }
}

impl fmt::Display for PamClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

const NORMAL_STABLE: [&str; 36] = [
    "ACA", "ACC", "ACT", "AGT", "CAC", "CAT", "CCA", "CCC", "CCG", "CCT", "CGA", "CGC", "CGG", "CGT",
    "CTA", "CTC", "CTT", "GAT", "GCA", "GCC", "GCG", "GCT", "GGA", "GGC", "GGT", "GTC", "GTT", "TCA",
    "TCC", "TCG", "TCT", "TGA", "TGC", "TGT", "TTC", "TTT",
];
const NORMAL_INTERFERING: [&str; 17] = [
    "AAA", "AAC", "AAG", "AAT", "AGG", "ATA", "ATC", "ATG", "CAG", "GAA", "GAG", "GGG", "GTG", "TAA",
    "TAG", "TGG", "TTG",
];
const NORMAL_INTERMEDIATE: [&str; 11] = [
    "ACG", "AGA", "AGC", "ATT", "CAA", "CTG", "GAC", "GTA", "TAC", "TAT", "TTA",
];

/// The PAM kept stable under the modified sets: the locus's own motif.
pub const SELF_PAM: &str = "CCG";

/// A partition of all 64 trinucleotides into the three PAM classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PamTable {
    classes: [PamClass; 64],
}

impl PamTable {
    /// Fails unless the three lists partition the 64 trinucleotides.
    pub fn from_sets<S: AsRef<str>>(
        stable: &[S],
        interfering: &[S],
        intermediate: &[S],
    ) -> Result<Self, CascadeError> {
        let mut slots: [Option<PamClass>; 64] = [None; 64];
        for (class, list) in [
            (PamClass::Stable, stable),
            (PamClass::Interfering, interfering),
            (PamClass::Intermediate, intermediate),
        ] {
            for s in list {
                let pam: Pam = s.as_ref().parse()?;
                let slot = &mut slots[pam.code() as usize];
                if slot.is_some() {
                    return Err(CascadeError::DuplicatePam(pam));
                }
                *slot = Some(class);
            }
        }
        let mut classes = [PamClass::Stable; 64];
        for (code, slot) in slots.iter().enumerate() {
            classes[code] = slot.ok_or(CascadeError::UnassignedPam(Pam(code as u8)))?;
        }
        Ok(Self { classes })
    }

    /// The E. coli sets: 36 stable, 17 interfering, 11 intermediate.
    pub fn normal() -> Self {
        Self::from_sets(&NORMAL_STABLE, &NORMAL_INTERFERING, &NORMAL_INTERMEDIATE)
            .expect("built-in PAM sets partition the trinucleotides")
    }

    /// Every stable PAM except CCG moved to the intermediate set.
    pub fn modified() -> Self {
        let mut table = Self::normal();
        let keep = Pam::from_str(SELF_PAM).expect("valid PAM");
        for pam in Pam::all() {
            if pam != keep && table.classify(pam) == PamClass::Stable {
                table.classes[pam.code() as usize] = PamClass::Intermediate;
            }
        }
        table
    }

    #[inline]
    pub fn classify(&self, pam: Pam) -> PamClass {
        self.classes[pam.code() as usize]
    }

    pub fn members(&self, class: PamClass) -> Vec<Pam> {
        Pam::all().filter(|&p| self.classify(p) == class).collect()
    }

    pub fn size(&self, class: PamClass) -> usize {
        self.classes.iter().filter(|&&c| c == class).count()
    }

    /// Parses the PAM table config format: one class name per line followed
    /// by whitespace-separated trinucleotides. A class may span several lines;
    /// `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, CascadeError> {
        let mut lists: [Vec<String>; 3] = Default::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut words = line.split_whitespace();
            let name = words.next().unwrap_or_default().trim_end_matches(':');
            let slot = match name.to_ascii_lowercase().as_str() {
                "stable" => 0,
                "interfering" => 1,
                "intermediate" => 2,
                other => {
                    return Err(CascadeError::Parse {
                        line: i + 1,
                        message: format!("unknown PAM class {other:?}"),
                    })
                }
            };
            lists[slot].extend(words.map(|w| w.trim_matches(|c| c == ',' || c == '\'').to_string()));
        }
        Self::from_sets(&lists[0], &lists[1], &lists[2])
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for class in PamClass::ALL {
            out.push_str(class.name());
            for pam in self.members(class) {
                out.push(' ');
                out.push_str(&pam.to_string());
            }
            out.push('\n');
        }
        out
    }
}

/// Classifies a 3-nt sequence.
pub fn classify_pam(pam: &DnaSeq, table: &PamTable) -> Result<PamClass, CascadeError> {
    Ok(table.classify(Pam::from_seq(pam)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchKind {
    Complementary,
    NearComplementary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strand {
    Forward,
    /// Coordinates refer to the reverse complement of the target.
    Reverse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TargetHit {
    /// 0-based offset of the window in the scanned strand.
    pub position: usize,
    pub mismatches: u32,
    pub kind: MatchKind,
    /// The 3 nt after the window; `None` when fewer than 3 remain.
    pub pam: Option<Pam>,
    pub strand: Strand,
}

fn to_target_hits(hits: Vec<Hit>, text: &NucleotideText, m: usize, strand: Strand) -> Vec<TargetHit> {
    hits.into_iter()
        .map(|h| {
            let end = h.offset + m;
            let pam = (end + 3 <= text.len()).then(|| Pam(text.kmer(end, 3) as u8));
            TargetHit {
                position: h.offset,
                mismatches: h.mismatches,
                kind: if h.mismatches == 0 {
                    MatchKind::Complementary
                } else {
                    MatchKind::NearComplementary
                },
                pam,
                strand,
            }
        })
        .collect()
}

/// Every forward-strand window within `max_mismatches` of the crRNA's
/// protospacer, in position order.
pub fn find_targets(crrna: &Crrna, target: &DnaSeq, max_mismatches: u32) -> Vec<TargetHit> {
    let text = NucleotideText::from_codes(&target.codes().collect::<Vec<_>>());
    let hits = crate::matcher::scan(&crrna.pattern(), &text, max_mismatches);
    to_target_hits(hits, &text, crrna.spacer.len(), Strand::Forward)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Interference,
    PrimedAdaptation,
    NoAction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CascadeOutcome {
    pub action: Action,
    pub hit: Option<TargetHit>,
}

/// The Cascade decision table.
pub fn cascade_action(hit: Option<&TargetHit>, table: &PamTable) -> CascadeOutcome {
    let action = match hit {
        None => Action::NoAction,
        Some(h) => match h.pam.map(|p| table.classify(p)) {
            None | Some(PamClass::Stable) => Action::NoAction,
            Some(PamClass::Interfering) => Action::Interference,
            Some(PamClass::Intermediate) => match h.kind {
                MatchKind::Complementary => Action::Interference,
                MatchKind::NearComplementary => Action::PrimedAdaptation,
            },
        },
    };
    CascadeOutcome {
        action,
        hit: hit.copied(),
    }
}

/// Which hit decides a crRNA's outcome when several windows qualify.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HitPolicy {
    /// The first hit in position order (forward strand before reverse).
    #[default]
    First,
    /// Fewest mismatches, ties broken by position.
    Best,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanOptions {
    pub max_mismatches: u32,
    pub policy: HitPolicy,
    pub both_strands: bool,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            max_mismatches: DEFAULT_MAX_MISMATCHES,
            policy: HitPolicy::First,
            both_strands: false,
        }
    }
}

struct StrandIndex {
    seq: DnaSeq,
    index: SeedIndex,
}

impl StrandIndex {
    fn new(seq: DnaSeq) -> Self {
        let text = NucleotideText::from_codes(&seq.codes().collect::<Vec<_>>());
        Self {
            seq,
            index: SeedIndex::new(text),
        }
    }
}

/// A genome prepared for repeated crRNA searches.
pub struct IndexedGenome {
    forward: StrandIndex,
    reverse: Option<StrandIndex>,
}

impl IndexedGenome {
    pub fn new(genome: &DnaSeq, both_strands: bool) -> Self {
        Self {
            forward: StrandIndex::new(genome.clone()),
            reverse: both_strands.then(|| StrandIndex::new(reverse_complement(genome))),
        }
    }

    pub fn len(&self) -> usize {
        self.forward.seq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sequence(&self) -> &DnaSeq {
        &self.forward.seq
    }

    /// All hits for one crRNA: forward strand first, then (if indexed and
    /// requested) the reverse strand, each in position order.
    pub fn find_targets(&self, crrna: &Crrna, max_mismatches: u32, both_strands: bool) -> Vec<TargetHit> {
        let pattern = crrna.pattern();
        let m = pattern.len();
        let mut hits = to_target_hits(
            self.forward.index.search(&pattern, max_mismatches),
            self.forward.index.text(),
            m,
            Strand::Forward,
        );
        if both_strands {
            if let Some(rev) = &self.reverse {
                hits.extend(to_target_hits(
                    rev.index.search(&pattern, max_mismatches),
                    rev.index.text(),
                    m,
                    Strand::Reverse,
                ));
            }
        }
        hits
    }

    fn window(&self, hit: &TargetHit, len: usize) -> DnaSeq {
        let strand = match hit.strand {
            Strand::Forward => &self.forward,
            Strand::Reverse => self.reverse.as_ref().expect("reverse strand indexed"),
        };
        strand.seq.subseq(hit.position..hit.position + len)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub interference: u64,
    pub primed: u64,
    pub no_action: u64,
}

impl Tally {
    pub fn record(&mut self, action: Action) {
        match action {
            Action::Interference => self.interference += 1,
            Action::PrimedAdaptation => self.primed += 1,
            Action::NoAction => self.no_action += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.interference + self.primed + self.no_action
    }

    pub fn merge(&mut self, other: &Tally) {
        self.interference += other.interference;
        self.primed += other.primed;
        self.no_action += other.no_action;
    }

    /// `(interference, primed, no_action)` fractions of the total.
    pub fn ratios(&self) -> (f64, f64, f64) {
        let t = self.total() as f64;
        if t == 0.0 {
            return (0.0, 0.0, 0.0);
        }
        (
            self.interference as f64 / t,
            self.primed as f64 / t,
            self.no_action as f64 / t,
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScanResult {
    pub tally: Tally,
    pub outcomes: Vec<CascadeOutcome>,
    /// Target windows flagged for primed adaptation, deduplicated, in crRNA
    /// order.
    pub primed_protospacers: Vec<DnaSeq>,
}

/// Resolves one outcome per crRNA against `genome`. crRNAs are processed in
/// parallel; the result does not depend on the number of workers.
pub fn scan_genome(
    crrnas: &[Crrna],
    genome: &IndexedGenome,
    table: &PamTable,
    options: &ScanOptions,
) -> ScanResult {
    let outcomes: Vec<CascadeOutcome> = crrnas
        .par_iter()
        .map(|c| {
            let hits = genome.find_targets(c, options.max_mismatches, options.both_strands);
            let chosen = match options.policy {
                HitPolicy::First => hits.first(),
                HitPolicy::Best => hits.iter().min_by_key(|h| h.mismatches),
            };
            cascade_action(chosen, table)
        })
        .collect();

    let mut result = ScanResult::default();
    for (crrna, outcome) in crrnas.iter().zip(&outcomes) {
        result.tally.record(outcome.action);
        if outcome.action == Action::PrimedAdaptation {
            let hit = outcome.hit.as_ref().expect("primed outcome carries a hit");
            let proto = genome.window(hit, crrna.spacer.len());
            if !result.primed_protospacers.contains(&proto) {
                result.primed_protospacers.push(proto);
            }
        }
    }
    result.outcomes = outcomes;
    result
}
