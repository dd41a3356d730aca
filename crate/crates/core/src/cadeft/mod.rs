//! Signature-locus Trojan detection over configuration bitstreams.
//!
//! Packets play the role of protospacers and each packet's register address
//! plays the role of the PAM: a [`MarkerTable`] maps addresses to
//! [`Marker::Benign`], [`Marker::Alert`] or [`Marker::Learn`], mirroring the
//! Stable / Interfering / Intermediate classes of the biological model.
//!
//! | marker | exact match  | fuzzy match ( 1..=k mismatches ) |
//! |--------|--------------|----------------------------------|
//! | Benign | Ignored      | Ignored                          |
//! | Alert  | ExactAlert   | FuzzyAlert                       |
//! | Learn  | ExactAlert   | Learned (window joins the locus) |
//!
//! `k = floor((1 - θ) · L)`. A fuzzy window that is bit-identical to some
//! signature in the locus produces no fuzzy event, since that signature
//! reports it exactly.

mod store;

pub use store::{load_signature_locus, save_signature_locus, StoreError, LOCUS_MAGIC};

use std::collections::{BTreeMap, HashSet};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bitfmt::{Bitstream, ConfigPacket};
use crate::matcher::{scan_many, BinaryText, PackedBits, Pattern};
use crate::rng::RandomSource;
use crate::seq::max_mismatches;

pub const DEFAULT_SIGNATURE_LEN: usize = 64;
pub const DEFAULT_THRESHOLD: f64 = 0.90;
pub const MIN_SIGNATURE_LEN: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CadeftError {
    #[error("signature length {0} is below the minimum of {MIN_SIGNATURE_LEN}")]
    SignatureLength(usize),
    #[error("similarity threshold {0} is outside (0.5, 1]")]
    Threshold(f64),
    #[error("expected {expected} bits, got {actual}")]
    Length { expected: usize, actual: usize },
    #[error("the signature locus is empty")]
    EmptyLocus,
    #[error("signature id {0:?} already exists")]
    DuplicateId(String),
    #[error("signature bits duplicate existing signature {0:?}")]
    DuplicateBits(String),
    #[error("invalid signature id {0:?}")]
    InvalidId(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Marker {
    Benign,
    #[default]
    Alert,
    Learn,
}

impl Marker {
    pub fn name(self) -> &'static str {
        match self {
            Marker::Benign => "benign",
            Marker::Alert => "alert",
            Marker::Learn => "learn",
        }
    }
}

impl fmt::Display for Marker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Marker {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "benign" => Ok(Marker::Benign),
            "alert" => Ok(Marker::Alert),
            "learn" => Ok(Marker::Learn),
            other => Err(format!("unknown marker {other:?}")),
        }
    }
}

/// Register address to marker class. Unmapped addresses get `default`, which
/// is [`Marker::Alert`] unless changed.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MarkerTable {
    pub default: Marker,
    entries: BTreeMap<u16, Marker>,
}

impl MarkerTable {
    pub fn new(default: Marker) -> Self {
        Self {
            default,
            entries: BTreeMap::new(),
        }
    }

    pub fn get(&self, address: u16) -> Marker {
        self.entries.get(&address).copied().unwrap_or(self.default)
    }

    pub fn set(&mut self, address: u16, marker: Marker) {
        self.entries.insert(address, marker);
    }

    pub fn with(mut self, address: u16, marker: Marker) -> Self {
        self.set(address, marker);
        self
    }

    pub fn entries(&self) -> impl Iterator<Item = (u16, Marker)> + '_ {
        self.entries.iter().map(|(&a, &m)| (a, m))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignatureOrigin {
    Seeded,
    Learned,
}

impl SignatureOrigin {
    pub fn name(self) -> &'static str {
        match self {
            SignatureOrigin::Seeded => "seeded",
            SignatureOrigin::Learned => "learned",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Signature {
    pub id: String,
    pub bits: PackedBits,
    pub origin: SignatureOrigin,
    pub note: String,
}

impl Signature {
    pub fn seeded(id: impl Into<String>, bits: PackedBits, note: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            bits,
            origin: SignatureOrigin::Seeded,
            note: note.into(),
        }
    }

    /// A seeded signature of `len` uniformly random bits.
    pub fn random(id: impl Into<String>, len: usize, rng: &mut RandomSource) -> Self {
        let mut words = vec![0u32; len.div_ceil(32)];
        for w in &mut words {
            *w = rng.next_u32();
        }
        let bits = PackedBits::from_u32_words(&words).slice(0, len);
        Self::seeded(id, bits, "")
    }
}

fn valid_id(id: &str) -> bool {
    !id.is_empty() && !id.chars().any(|c| c.is_whitespace() || c.is_control())
}

fn clean_note(note: &str) -> String {
    note.chars()
        .map(|c| if c.is_control() { ' ' } else { c })
        .collect::<String>()
        .trim()
        .to_string()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LearnOutcome {
    Inserted(String),
    /// The bits were already present under this id; nothing changed.
    Duplicate(String),
}

impl LearnOutcome {
    pub fn id(&self) -> &str {
        match self {
            LearnOutcome::Inserted(id) | LearnOutcome::Duplicate(id) => id,
        }
    }
}

/// The persistent memory of known and learned signatures. Index 0 is the
/// most recently learned entry; seeded signatures are appended.
#[derive(Debug, Clone, PartialEq)]
pub struct SignatureLocus {
    signatures: Vec<Signature>,
    length: usize,
    threshold: f64,
    markers: MarkerTable,
    version: u64,
    learned_counter: u64,
}

impl Default for SignatureLocus {
    fn default() -> Self {
        Self::new(DEFAULT_SIGNATURE_LEN, DEFAULT_THRESHOLD).expect("defaults are valid")
    }
}

impl SignatureLocus {
    pub fn new(length: usize, threshold: f64) -> Result<Self, CadeftError> {
        if length < MIN_SIGNATURE_LEN {
            return Err(CadeftError::SignatureLength(length));
        }
        if !(threshold > 0.5 && threshold <= 1.0) {
            return Err(CadeftError::Threshold(threshold));
        }
        Ok(Self {
            signatures: Vec::new(),
            length,
            threshold,
            markers: MarkerTable::default(),
            version: 0,
            learned_counter: 0,
        })
    }

    pub fn with_markers(mut self, markers: MarkerTable) -> Self {
        self.markers = markers;
        self
    }

    pub fn signatures(&self) -> &[Signature] {
        &self.signatures
    }

    pub fn len(&self) -> usize {
        self.signatures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signatures.is_empty()
    }

    pub fn signature_len(&self) -> usize {
        self.length
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn max_mismatches(&self) -> u32 {
        max_mismatches(self.threshold, self.length) as u32
    }

    pub fn markers(&self) -> &MarkerTable {
        &self.markers
    }

    pub fn markers_mut(&mut self) -> &mut MarkerTable {
        &mut self.markers
    }

    /// Incremented by every scan commit that learns at least one signature
    /// and by every explicit [`add_signature`](Self::add_signature) or
    /// [`learn`](Self::learn) that changes the locus.
    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn get(&self, id: &str) -> Option<&Signature> {
        self.signatures.iter().find(|s| s.id == id)
    }

    pub fn find_bits(&self, bits: &PackedBits) -> Option<&Signature> {
        self.signatures.iter().find(|s| s.bits == *bits)
    }

    fn check(&self, sig: &Signature) -> Result<(), CadeftError> {
        if !valid_id(&sig.id) {
            return Err(CadeftError::InvalidId(sig.id.clone()));
        }
        if sig.bits.len() != self.length {
            return Err(CadeftError::Length {
                expected: self.length,
                actual: sig.bits.len(),
            });
        }
        if self.get(&sig.id).is_some() {
            return Err(CadeftError::DuplicateId(sig.id.clone()));
        }
        if let Some(s) = self.find_bits(&sig.bits) {
            return Err(CadeftError::DuplicateBits(s.id.clone()));
        }
        Ok(())
    }

    /// Appends a signature after all existing ones.
    pub fn add_signature(&mut self, mut sig: Signature) -> Result<(), CadeftError> {
        sig.note = clean_note(&sig.note);
        self.check(&sig)?;
        self.signatures.push(sig);
        self.version += 1;
        Ok(())
    }

    fn learn_inner(&mut self, bits: &PackedBits, note: &str) -> Result<LearnOutcome, CadeftError> {
        if bits.len() != self.length {
            return Err(CadeftError::Length {
                expected: self.length,
                actual: bits.len(),
            });
        }
        if let Some(s) = self.find_bits(bits) {
            return Ok(LearnOutcome::Duplicate(s.id.clone()));
        }
        let id = loop {
            self.learned_counter += 1;
            let id = format!("learned-{}", self.learned_counter);
            if self.get(&id).is_none() {
                break id;
            }
        };
        self.signatures.insert(
            0,
            Signature {
                id: id.clone(),
                bits: bits.clone(),
                origin: SignatureOrigin::Learned,
                note: clean_note(note),
            },
        );
        Ok(LearnOutcome::Inserted(id))
    }

    /// Inserts `bits` at index 0 as a learned signature. Learning bits that
    /// are already present is a no-op reported as [`LearnOutcome::Duplicate`].
    pub fn learn(&mut self, bits: &PackedBits, note: &str) -> Result<LearnOutcome, CadeftError> {
        let out = self.learn_inner(bits, note)?;
        if matches!(out, LearnOutcome::Inserted(_)) {
            self.version += 1;
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    ExactAlert,
    FuzzyAlert,
    Learned,
    Ignored,
}

impl EventKind {
    pub fn name(self) -> &'static str {
        match self {
            EventKind::ExactAlert => "exact_alert",
            EventKind::FuzzyAlert => "fuzzy_alert",
            EventKind::Learned => "learned",
            EventKind::Ignored => "ignored",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectionEvent {
    pub kind: EventKind,
    pub packet_index: usize,
    pub register_address: u16,
    pub marker: Marker,
    /// Byte of the encoded file holding the window's first bit.
    pub absolute_byte_offset: usize,
    /// Bit offset of the window in the encoded file, MSB of byte 0 is bit 0.
    pub absolute_bit_offset: usize,
    pub bit_offset_in_payload: usize,
    pub signature_id: String,
    pub mismatch_count: u32,
    /// Hex of the matched window, for fuzzy and learned events.
    pub observed_bits: Option<String>,
    /// Id under which a learned window was stored.
    pub learned_id: Option<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventCounters {
    pub exact_alert: usize,
    pub fuzzy_alert: usize,
    pub learned: usize,
    pub ignored: usize,
}

impl EventCounters {
    fn record(&mut self, kind: EventKind) {
        match kind {
            EventKind::ExactAlert => self.exact_alert += 1,
            EventKind::FuzzyAlert => self.fuzzy_alert += 1,
            EventKind::Learned => self.learned += 1,
            EventKind::Ignored => self.ignored += 1,
        }
    }

    pub fn alerts(&self) -> usize {
        self.exact_alert + self.fuzzy_alert
    }

    /// Alerts plus learned events.
    pub fn detections(&self) -> usize {
        self.alerts() + self.learned
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScanConfig {
    /// Report every qualifying window instead of resuming `L` bits after
    /// each event.
    pub overlapping: bool,
    /// Also learn fuzzy windows found in Alert packets.
    pub learn_on_alert: bool,
    /// Emit `Ignored` events for matches in Benign packets.
    pub report_ignored: bool,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            overlapping: false,
            learn_on_alert: false,
            report_ignored: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanEcho {
    pub signature_len: usize,
    pub threshold: f64,
    pub max_mismatches: u32,
    pub signatures: usize,
    pub packets: usize,
    #[serde(flatten)]
    pub config: ScanConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub events: Vec<DetectionEvent>,
    pub counters: EventCounters,
    pub locus_version_before: u64,
    pub locus_version_after: u64,
    pub scan: ScanEcho,
}

impl DetectionReport {
    pub fn has_detections(&self) -> bool {
        self.counters.detections() > 0
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let c = &self.counters;
        let _ = writeln!(
            out,
            "scanned {} packets against {} signatures (L={}, max mismatches {})",
            self.scan.packets, self.scan.signatures, self.scan.signature_len, self.scan.max_mismatches
        );
        let _ = writeln!(
            out,
            "exact_alert={} fuzzy_alert={} learned={} ignored={}",
            c.exact_alert, c.fuzzy_alert, c.learned, c.ignored
        );
        let _ = writeln!(
            out,
            "locus version {} -> {}",
            self.locus_version_before, self.locus_version_after
        );
        if self.events.is_empty() {
            return out;
        }
        let _ = writeln!(
            out,
            "{:<12} {:>6} {:>6} {:>10} {:>12} {:>8} {:>4}  signature",
            "kind", "packet", "addr", "byte", "bit", "pbit", "mm"
        );
        for e in &self.events {
            let _ = write!(
                out,
                "{:<12} {:>6} {:>#6x} {:>10} {:>12} {:>8} {:>4}  {}",
                e.kind.name(),
                e.packet_index,
                e.register_address,
                e.absolute_byte_offset,
                e.absolute_bit_offset,
                e.bit_offset_in_payload,
                e.mismatch_count,
                e.signature_id
            );
            if let Some(id) = &e.learned_id {
                let _ = write!(out, " -> {id}");
            }
            out.push('\n');
        }
        out
    }
}

struct Candidate {
    event: DetectionEvent,
    learn: Option<PackedBits>,
}

struct ScanContext<'a> {
    locus: &'a SignatureLocus,
    patterns: Vec<Pattern<1>>,
    known: HashSet<&'a PackedBits>,
    k: u32,
    config: &'a ScanConfig,
}

impl ScanContext<'_> {
    fn scan_packet(&self, index: usize, packet: &ConfigPacket, payload_byte_offset: usize) -> Vec<Candidate> {
        let len = self.locus.length;
        if packet.payload_bits() < len {
            return Vec::new();
        }
        let marker = self.locus.markers.get(packet.register_address);
        if marker == Marker::Benign && !self.config.report_ignored {
            return Vec::new();
        }
        let text = BinaryText::from_bits(packet.payload_bitvec());
        let refs: Vec<&Pattern<1>> = self.patterns.iter().collect();
        let hits = scan_many(&refs, &text, self.k);

        let mut out: Vec<(usize, Candidate)> = Vec::new();
        for (si, list) in hits.iter().enumerate() {
            let sig = &self.locus.signatures[si];
            let mut resume = 0;
            for h in list {
                if !self.config.overlapping && h.offset < resume {
                    continue;
                }
                let window = (h.mismatches > 0).then(|| text.bits().slice(h.offset, len));
                if window.as_ref().is_some_and(|w| self.known.contains(w)) {
                    continue;
                }
                let kind = match (marker, h.mismatches == 0) {
                    (Marker::Benign, _) => EventKind::Ignored,
                    (_, true) => EventKind::ExactAlert,
                    (Marker::Alert, false) => EventKind::FuzzyAlert,
                    (Marker::Learn, false) => EventKind::Learned,
                };
                let learn = match kind {
                    EventKind::Learned => window.clone(),
                    EventKind::FuzzyAlert if self.config.learn_on_alert => window.clone(),
                    _ => None,
                };
                out.push((
                    si,
                    Candidate {
                        event: DetectionEvent {
                            kind,
                            packet_index: index,
                            register_address: packet.register_address,
                            marker,
                            absolute_byte_offset: payload_byte_offset + h.offset / 8,
                            absolute_bit_offset: payload_byte_offset * 8 + h.offset,
                            bit_offset_in_payload: h.offset,
                            signature_id: sig.id.clone(),
                            mismatch_count: h.mismatches,
                            observed_bits: window.as_ref().map(PackedBits::to_hex),
                            learned_id: None,
                        },
                        learn,
                    },
                ));
                resume = h.offset + len;
            }
        }
        out.sort_by_key(|(si, c)| (c.event.bit_offset_in_payload, c.event.mismatch_count, *si));

        // One learning candidate per window: the closest signature keeps it.
        let mut learned_at = HashSet::new();
        let mut kept = Vec::with_capacity(out.len());
        for (_, mut c) in out {
            if c.learn.is_some() && !learned_at.insert(c.event.bit_offset_in_payload) {
                if c.event.kind == EventKind::Learned {
                    continue;
                }
                c.learn = None;
            }
            kept.push(c);
        }
        kept
    }
}

/// Scans every packet payload against every signature and returns the
/// report together with the locus after learning. The input locus is not
/// modified; the caller decides whether to keep the returned one.
pub fn scan(
    bitstream: &Bitstream,
    locus: &SignatureLocus,
    config: &ScanConfig,
) -> Result<(DetectionReport, SignatureLocus), CadeftError> {
    if locus.is_empty() {
        return Err(CadeftError::EmptyLocus);
    }
    let ctx = ScanContext {
        locus,
        patterns: locus
            .signatures
            .iter()
            .map(|s| Pattern::new(BinaryText::from_bits(s.bits.clone())))
            .collect(),
        known: locus.signatures.iter().map(|s| &s.bits).collect(),
        k: locus.max_mismatches(),
        config,
    };
    let per_packet: Vec<Vec<Candidate>> = bitstream
        .packets()
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let off = bitstream.payload_byte_offset(i).expect("packet offset");
            ctx.scan_packet(i, p, off)
        })
        .collect();

    // Serialized commit in (packet, offset) order.
    let mut updated = locus.clone();
    let mut inserted = false;
    let mut events = Vec::new();
    let mut counters = EventCounters::default();
    for cand in per_packet.into_iter().flatten() {
        let mut event = cand.event;
        if let Some(bits) = cand.learn {
            let note = format!(
                "packet {} bit {} near {}",
                event.packet_index, event.bit_offset_in_payload, event.signature_id
            );
            let out = updated.learn_inner(&bits, &note)?;
            inserted |= matches!(out, LearnOutcome::Inserted(_));
            event.learned_id = Some(out.id().to_string());
        }
        counters.record(event.kind);
        events.push(event);
    }
    if inserted {
        updated.version += 1;
    }

    let report = DetectionReport {
        events,
        counters,
        locus_version_before: locus.version,
        locus_version_after: updated.version,
        scan: ScanEcho {
            signature_len: locus.length,
            threshold: locus.threshold,
            max_mismatches: ctx.k,
            signatures: locus.len(),
            packets: bitstream.packets().len(),
            config: *config,
        },
    };
    Ok((report, updated))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitfmt::{build_bitstream, BitstreamSpec, PacketSpec, PayloadSpec};
    use rand::Rng;

    const ALERT: u16 = 0x010;
    const LEARN: u16 = 0x020;
    const BENIGN: u16 = 0x030;

    fn markers() -> MarkerTable {
        MarkerTable::new(Marker::Alert)
            .with(LEARN, Marker::Learn)
            .with(BENIGN, Marker::Benign)
    }

    fn corpus(addresses: &[u16], words: usize, seed: u64) -> Bitstream {
        let spec = BitstreamSpec {
            packets: addresses
                .iter()
                .map(|&a| PacketSpec {
                    opcode: 2,
                    register_address: a,
                    payload: PayloadSpec::Random(words),
                })
                .collect(),
            ..BitstreamSpec::default()
        };
        build_bitstream(&spec, &mut RandomSource::new(seed)).unwrap()
    }

    fn locus_with(sig: &Signature) -> SignatureLocus {
        let mut l = SignatureLocus::default().with_markers(markers());
        l.add_signature(sig.clone()).unwrap();
        l
    }

    fn flip(bits: &PackedBits, positions: &[usize]) -> PackedBits {
        let mut b = bits.clone();
        for &p in positions {
            b.flip(p);
        }
        b
    }

    #[test]
    fn default_threshold_allows_six() {
        assert_eq!(SignatureLocus::default().max_mismatches(), 6);
        assert!(SignatureLocus::new(7, 0.9).is_err());
        assert!(SignatureLocus::new(64, 0.5).is_err());
        assert!(SignatureLocus::new(64, 1.0).is_ok());
    }

    #[test]
    fn verbatim_in_alert_packet() {
        let mut rng = RandomSource::new(1);
        let sig = Signature::random("t1", 64, &mut rng);
        let locus = locus_with(&sig);
        let mut bs = corpus(&[ALERT, ALERT], 16, 2);
        bs.inject_signature(&sig.bits, 1, 77).unwrap();
        let (report, after) = scan(&bs, &locus, &ScanConfig::default()).unwrap();
        assert_eq!(report.counters.exact_alert, 1);
        assert_eq!(report.events.len(), 1);
        let e = &report.events[0];
        assert_eq!((e.kind, e.packet_index, e.bit_offset_in_payload, e.mismatch_count), (EventKind::ExactAlert, 1, 77, 0));
        let bytes = bs.to_bytes();
        assert_eq!(PackedBits::from_bytes(&bytes).slice(e.absolute_bit_offset, 64), sig.bits);
        assert_eq!(e.absolute_byte_offset, e.absolute_bit_offset / 8);
        assert_eq!(after, locus);
    }

    #[test]
    fn fuzzy_in_learn_packet_converges() {
        let mut rng = RandomSource::new(3);
        let sig = Signature::random("t1", 64, &mut rng);
        let locus = locus_with(&sig);
        let variant = flip(&sig.bits, &[0, 9, 20, 33, 47, 63]);
        let mut bs = corpus(&[ALERT, LEARN], 16, 4);
        bs.inject_signature(&variant, 1, 100).unwrap();

        let (r1, l1) = scan(&bs, &locus, &ScanConfig::default()).unwrap();
        assert_eq!(r1.counters.learned, 1);
        assert_eq!(r1.counters.alerts(), 0);
        assert_eq!(r1.events[0].mismatch_count, 6);
        assert_eq!(l1.len(), 2);
        assert_eq!(l1.signatures()[0].bits, variant);
        assert_eq!(l1.signatures()[0].origin, SignatureOrigin::Learned);
        assert_eq!(r1.locus_version_after, r1.locus_version_before + 1);

        let (r2, l2) = scan(&bs, &l1, &ScanConfig::default()).unwrap();
        assert_eq!(r2.counters.exact_alert, 1);
        assert_eq!(r2.counters.learned, 0);
        assert_eq!(r2.counters.fuzzy_alert, 0);
        assert_eq!(l2, l1);
    }

    #[test]
    fn seven_flips_are_missed() {
        let mut rng = RandomSource::new(5);
        let sig = Signature::random("t1", 64, &mut rng);
        let locus = locus_with(&sig);
        let variant = flip(&sig.bits, &[1, 2, 3, 4, 5, 6, 7]);
        let mut bs = corpus(&[LEARN], 8, 6);
        bs.inject_signature(&variant, 0, 0).unwrap();
        let (r, _) = scan(&bs, &locus, &ScanConfig::default()).unwrap();
        assert!(r.events.iter().all(|e| e.bit_offset_in_payload != 0));
    }

    #[test]
    fn fuzzy_in_alert_packet_is_not_learned_by_default() {
        let mut rng = RandomSource::new(7);
        let sig = Signature::random("t1", 64, &mut rng);
        let locus = locus_with(&sig);
        let mut bs = corpus(&[ALERT], 8, 8);
        bs.inject_signature(&flip(&sig.bits, &[5, 6]), 0, 40).unwrap();
        let (r, l) = scan(&bs, &locus, &ScanConfig::default()).unwrap();
        assert_eq!(r.counters.fuzzy_alert, 1);
        assert_eq!(l.len(), 1);
        let cfg = ScanConfig {
            learn_on_alert: true,
            ..ScanConfig::default()
        };
        let (r, l) = scan(&bs, &locus, &cfg).unwrap();
        assert_eq!(r.counters.fuzzy_alert, 1);
        assert_eq!(l.len(), 2);
        assert!(r.events[0].learned_id.is_some());
    }

    #[test]
    fn benign_packets_never_alert() {
        let mut rng = RandomSource::new(9);
        let sig = Signature::random("t1", 64, &mut rng);
        let locus = locus_with(&sig);
        let mut bs = corpus(&[BENIGN, BENIGN], 8, 10);
        bs.inject_signature(&sig.bits, 0, 3).unwrap();
        bs.inject_signature(&flip(&sig.bits, &[7]), 1, 3).unwrap();
        let (r, l) = scan(&bs, &locus, &ScanConfig::default()).unwrap();
        assert_eq!(r.counters.detections(), 0);
        assert_eq!(r.counters.ignored, 2);
        assert_eq!(l, locus);
        let quiet = ScanConfig {
            report_ignored: false,
            ..ScanConfig::default()
        };
        assert!(scan(&bs, &locus, &quiet).unwrap().0.events.is_empty());
    }

    #[test]
    fn unmapped_address_defaults_to_alert() {
        let mut rng = RandomSource::new(11);
        let sig = Signature::random("t1", 64, &mut rng);
        let locus = locus_with(&sig);
        let mut bs = corpus(&[0x777], 4, 12);
        bs.inject_signature(&sig.bits, 0, 0).unwrap();
        let (r, _) = scan(&bs, &locus, &ScanConfig::default()).unwrap();
        assert_eq!(r.events[0].marker, Marker::Alert);
        assert_eq!(r.counters.exact_alert, 1);
    }

    #[test]
    fn non_overlapping_versus_overlapping() {
        // An all-zero payload matches an all-zero signature at every offset.
        let sig = Signature::seeded("z", PackedBits::zeros(64), "");
        let locus = locus_with(&sig);
        let bs = Bitstream::new(
            0,
            crate::bitfmt::DEFAULT_SYNC_WORD,
            vec![ConfigPacket::new(1, ALERT, vec![0; 8])],
        )
        .unwrap();
        let (r, _) = scan(&bs, &locus, &ScanConfig::default()).unwrap();
        let offsets: Vec<usize> = r.events.iter().map(|e| e.bit_offset_in_payload).collect();
        assert_eq!(offsets, vec![0, 64, 128, 192]);
        let all = ScanConfig {
            overlapping: true,
            ..ScanConfig::default()
        };
        assert_eq!(scan(&bs, &locus, &all).unwrap().0.events.len(), 256 - 64 + 1);
    }

    #[test]
    fn empty_locus_and_short_packets() {
        let bs = corpus(&[ALERT], 1, 1);
        assert_eq!(
            scan(&bs, &SignatureLocus::default(), &ScanConfig::default()).unwrap_err(),
            CadeftError::EmptyLocus
        );
        let locus = locus_with(&Signature::random("a", 64, &mut RandomSource::new(1)));
        let (r, _) = scan(&bs, &locus, &ScanConfig::default()).unwrap();
        assert!(r.events.is_empty());
    }

    #[test]
    fn learn_is_idempotent() {
        let mut rng = RandomSource::new(13);
        let mut locus = SignatureLocus::default();
        let bits = Signature::random("x", 64, &mut rng).bits;
        let a = locus.learn(&bits, "first").unwrap();
        let b = locus.learn(&bits, "again").unwrap();
        assert!(matches!(a, LearnOutcome::Inserted(_)));
        assert_eq!(b, LearnOutcome::Duplicate(a.id().to_string()));
        assert_eq!(locus.len(), 1);
        assert_eq!(
            locus.learn(&bits.slice(0, 63), ""),
            Err(CadeftError::Length {
                expected: 64,
                actual: 63
            })
        );
    }

    #[test]
    fn learned_then_exact_in_alert_packet() {
        let mut rng = RandomSource::new(14);
        let bits = Signature::random("x", 64, &mut rng).bits;
        let mut locus = SignatureLocus::default();
        locus.learn(&bits, "").unwrap();
        let mut bs = corpus(&[ALERT], 8, 15);
        bs.inject_signature(&bits, 0, 31).unwrap();
        let (r, _) = scan(&bs, &locus, &ScanConfig::default()).unwrap();
        assert_eq!(r.counters.exact_alert, 1);
    }

    #[test]
    fn add_signature_validation() {
        let mut rng = RandomSource::new(16);
        let mut locus = SignatureLocus::default();
        let s = Signature::random("a", 64, &mut rng);
        locus.add_signature(s.clone()).unwrap();
        assert_eq!(locus.add_signature(s.clone()), Err(CadeftError::DuplicateId("a".into())));
        let mut s2 = s.clone();
        s2.id = "b".into();
        assert_eq!(locus.add_signature(s2), Err(CadeftError::DuplicateBits("a".into())));
        let bad = Signature::seeded("has space", PackedBits::zeros(64), "");
        assert!(matches!(locus.add_signature(bad), Err(CadeftError::InvalidId(_))));
    }

    #[test]
    fn two_signatures_one_learned_window() {
        let mut rng = RandomSource::new(17);
        let a = Signature::random("a", 64, &mut rng);
        let b = Signature::seeded("b", flip(&a.bits, &[0, 1, 2, 3]), "");
        let mut locus = locus_with(&a);
        locus.add_signature(b.clone()).unwrap();
        let window = flip(&a.bits, &[0, 1, 40]);
        let mut bs = corpus(&[LEARN], 8, 18);
        bs.inject_signature(&window, 0, 10).unwrap();
        let (r, l) = scan(&bs, &locus, &ScanConfig::default()).unwrap();
        let learned: Vec<_> = r.events.iter().filter(|e| e.kind == EventKind::Learned).collect();
        assert_eq!(learned.len(), 1);
        assert_eq!(learned[0].signature_id, "a");
        assert_eq!(l.len(), 3);
    }

    #[test]
    fn report_renders() {
        let mut rng = RandomSource::new(19);
        let sig = Signature::random("t1", 64, &mut rng);
        let locus = locus_with(&sig);
        let mut bs = corpus(&[ALERT], 8, 20);
        let at = rng.random_range(0..8 * 32 - 64);
        bs.inject_signature(&sig.bits, 0, at).unwrap();
        let (r, _) = scan(&bs, &locus, &ScanConfig::default()).unwrap();
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["counters"]["exact_alert"], 1);
        let back: DetectionReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
        assert!(r.to_text().contains("exact_alert"));
    }
}
