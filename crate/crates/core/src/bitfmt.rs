//! A small synthetic FPGA configuration bitstream format.
//!
//! Real vendor formats are undocumented, so corpora use this stand-in. All
//! words are 32-bit big-endian and the file length is a multiple of 4.
//!
//! ```text
//! offset 0        dummy words, each 0xFFFFFFFF (any number, may be zero)
//!                 sync word (default 0xAA995566); its first occurrence ends the header
//!                 packets, repeated until end of input or a terminator:
//!                     header word   bits 31..28 opcode
//!                                   bits 27..16 register address
//!                                   bits 15..0  word count n
//!                     n payload words
//!                 optional terminator 0xFFFFFFFF, followed by trailer bytes
//! ```
//!
//! The header word `0xFFFFFFFF` is reserved for the terminator, so a packet
//! with opcode 0xF, address 0xFFF and 65535 payload words cannot be encoded.
//! Trailer bytes are kept verbatim and never scanned.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matcher::PackedBits;
use crate::rng::RandomSource;

pub const DUMMY_WORD: u32 = 0xFFFF_FFFF;
pub const DEFAULT_SYNC_WORD: u32 = 0xAA99_5566;
pub const TERMINATOR_WORD: u32 = 0xFFFF_FFFF;
pub const MAX_WORD_COUNT: usize = 0xFFFF;
pub const MAX_REGISTER_ADDRESS: u16 = 0x0FFF;
pub const MAX_OPCODE: u8 = 0x0F;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BitfmtError {
    #[error("bitstream is {0} bytes; at least one word is required")]
    TooShort(usize),
    #[error("bitstream length {0} is not a multiple of 4")]
    Unaligned(usize),
    #[error("no sync word found")]
    NoSync,
    #[error("non-dummy word 0x{word:08X} before sync at byte {offset}")]
    MalformedHeader { offset: usize, word: u32 },
    #[error("packet {index} declares {expected} payload words but only {actual} remain")]
    TruncatedPacket {
        index: usize,
        expected: usize,
        actual: usize,
    },
    #[error("packet {index}: word count {word_count} exceeds {MAX_WORD_COUNT}")]
    WordCount { index: usize, word_count: usize },
    #[error("packet {index}: opcode {opcode} exceeds 4 bits")]
    Opcode { index: usize, opcode: u8 },
    #[error("packet {index}: register address 0x{address:X} exceeds 12 bits")]
    Address { index: usize, address: u16 },
    #[error("packet {index} would encode to the reserved terminator word")]
    ReservedHeader { index: usize },
    #[error("trailer of {0} bytes is not word aligned")]
    TrailerAlignment(usize),
    #[error("packet index {index} out of range ({count} packets)")]
    PacketIndex { index: usize, count: usize },
    #[error("bits [{offset}, {end}) do not fit in a {payload_bits}-bit payload", end = offset + len)]
    BitRange {
        offset: usize,
        len: usize,
        payload_bits: usize,
    },
    #[error("bit {0} is not inside a packet payload")]
    NotInPayload(usize),
}

/// Opcode, register address and word count packed into one word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PacketHeader {
    pub opcode: u8,
    pub register_address: u16,
    pub word_count: u16,
}

impl PacketHeader {
    pub fn decode(word: u32) -> Self {
        Self {
            opcode: (word >> 28) as u8,
            register_address: ((word >> 16) & 0x0FFF) as u16,
            word_count: word as u16,
        }
    }

    pub fn encode(self) -> u32 {
        (u32::from(self.opcode & MAX_OPCODE) << 28)
            | (u32::from(self.register_address & MAX_REGISTER_ADDRESS) << 16)
            | u32::from(self.word_count)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigPacket {
    pub opcode: u8,
    pub register_address: u16,
    pub payload: Vec<u32>,
}

impl ConfigPacket {
    pub fn new(opcode: u8, register_address: u16, payload: Vec<u32>) -> Self {
        Self {
            opcode,
            register_address,
            payload,
        }
    }

    pub fn word_count(&self) -> usize {
        self.payload.len()
    }

    pub fn payload_bits(&self) -> usize {
        self.payload.len() * 32
    }

    pub fn payload_bitvec(&self) -> PackedBits {
        PackedBits::from_u32_words(&self.payload)
    }

    fn header(&self, index: usize) -> Result<PacketHeader, BitfmtError> {
        if self.opcode > MAX_OPCODE {
            return Err(BitfmtError::Opcode {
                index,
                opcode: self.opcode,
            });
        }
        if self.register_address > MAX_REGISTER_ADDRESS {
            return Err(BitfmtError::Address {
                index,
                address: self.register_address,
            });
        }
        if self.payload.len() > MAX_WORD_COUNT {
            return Err(BitfmtError::WordCount {
                index,
                word_count: self.payload.len(),
            });
        }
        let h = PacketHeader {
            opcode: self.opcode,
            register_address: self.register_address,
            word_count: self.payload.len() as u16,
        };
        if h.encode() == TERMINATOR_WORD {
            return Err(BitfmtError::ReservedHeader { index });
        }
        Ok(h)
    }
}

/// A parsed or constructed bitstream. Packet byte offsets are derived from
/// the layout and kept in sync by every mutating method.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bitstream {
    header: Vec<u32>,
    sync: u32,
    packets: Vec<ConfigPacket>,
    /// `Some` when a terminator word follows the packets.
    trailer: Option<Vec<u8>>,
    payload_offsets: Vec<usize>,
}

impl Bitstream {
    /// A stream with `dummy_words` dummies, the given sync word and packets,
    /// and no terminator.
    pub fn new(dummy_words: usize, sync: u32, packets: Vec<ConfigPacket>) -> Result<Self, BitfmtError> {
        for (i, p) in packets.iter().enumerate() {
            p.header(i)?;
        }
        let mut bs = Self {
            header: vec![DUMMY_WORD; dummy_words],
            sync,
            packets,
            trailer: None,
            payload_offsets: Vec::new(),
        };
        bs.relayout();
        Ok(bs)
    }

    /// Appends a terminator and the given trailer bytes.
    pub fn with_trailer(mut self, trailer: Vec<u8>) -> Result<Self, BitfmtError> {
        if trailer.len() % 4 != 0 {
            return Err(BitfmtError::TrailerAlignment(trailer.len()));
        }
        self.trailer = Some(trailer);
        Ok(self)
    }

    fn relayout(&mut self) {
        let mut at = 4 * (self.header.len() + 1);
        self.payload_offsets = self
            .packets
            .iter()
            .map(|p| {
                let off = at + 4;
                at = off + 4 * p.payload.len();
                off
            })
            .collect();
    }

    pub fn header_words(&self) -> &[u32] {
        &self.header
    }

    pub fn sync_word(&self) -> u32 {
        self.sync
    }

    /// Byte offset of the first word after the sync word.
    pub fn body_offset(&self) -> usize {
        4 * (self.header.len() + 1)
    }

    pub fn packets(&self) -> &[ConfigPacket] {
        &self.packets
    }

    pub fn packet(&self, index: usize) -> Option<&ConfigPacket> {
        self.packets.get(index)
    }

    pub fn is_terminated(&self) -> bool {
        self.trailer.is_some()
    }

    pub fn trailer(&self) -> &[u8] {
        self.trailer.as_deref().unwrap_or(&[])
    }

    /// Byte offset of packet `index`'s first payload word in the encoded file.
    pub fn payload_byte_offset(&self, index: usize) -> Option<usize> {
        self.payload_offsets.get(index).copied()
    }

    pub fn word_count(&self) -> usize {
        self.header.len()
            + 1
            + self.packets.iter().map(|p| 1 + p.payload.len()).sum::<usize>()
            + self.trailer.as_ref().map_or(0, |t| 1 + t.len() / 4)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(4 * self.word_count());
        let mut put = |w: u32| out.extend_from_slice(&w.to_be_bytes());
        for &w in &self.header {
            put(w);
        }
        put(self.sync);
        for (i, p) in self.packets.iter().enumerate() {
            put(p.header(i).expect("packets validated on construction").encode());
            for &w in &p.payload {
                put(w);
            }
        }
        if let Some(t) = &self.trailer {
            put(TERMINATOR_WORD);
            out.extend_from_slice(t);
        }
        out
    }

    /// Overwrites payload bits `[bit_offset, bit_offset + len)` of one packet.
    pub fn inject_signature(
        &mut self,
        signature: &PackedBits,
        packet_index: usize,
        bit_offset: usize,
    ) -> Result<(), BitfmtError> {
        let count = self.packets.len();
        let packet = self
            .packets
            .get_mut(packet_index)
            .ok_or(BitfmtError::PacketIndex {
                index: packet_index,
                count,
            })?;
        let payload_bits = packet.payload_bits();
        if bit_offset + signature.len() > payload_bits {
            return Err(BitfmtError::BitRange {
                offset: bit_offset,
                len: signature.len(),
                payload_bits,
            });
        }
        let mut bits = packet.payload_bitvec();
        bits.splice(bit_offset, signature);
        packet.payload = bits.to_u32_words();
        Ok(())
    }

    /// Locates the payload containing absolute file bit `abs_bit` and returns
    /// `(packet_index, bit_offset_in_payload)`.
    pub fn locate_bit(&self, abs_bit: usize) -> Option<(usize, usize)> {
        let byte = abs_bit / 8;
        let i = self.payload_offsets.partition_point(|&o| o <= byte).checked_sub(1)?;
        let rel = abs_bit - 8 * self.payload_offsets[i];
        (rel < self.packets[i].payload_bits()).then_some((i, rel))
    }

    /// [`inject_signature`](Self::inject_signature) addressed by absolute file
    /// bit. The whole signature must lie inside one payload; header, sync and
    /// packet header bits are rejected.
    pub fn inject_at_bit(&mut self, signature: &PackedBits, abs_bit: usize) -> Result<(usize, usize), BitfmtError> {
        let (index, offset) = self.locate_bit(abs_bit).ok_or(BitfmtError::NotInPayload(abs_bit))?;
        self.inject_signature(signature, index, offset)?;
        Ok((index, offset))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParseOptions {
    pub sync_word: u32,
    /// Reject non-dummy words before the sync word.
    pub strict_header: bool,
}

impl Default for ParseOptions {
    fn default() -> Self {
        Self {
            sync_word: DEFAULT_SYNC_WORD,
            strict_header: true,
        }
    }
}

pub fn parse_bitstream(bytes: &[u8]) -> Result<Bitstream, BitfmtError> {
    parse_bitstream_with(bytes, &ParseOptions::default())
}

pub fn parse_bitstream_with(bytes: &[u8], options: &ParseOptions) -> Result<Bitstream, BitfmtError> {
    if bytes.len() < 4 {
        return Err(BitfmtError::TooShort(bytes.len()));
    }
    if bytes.len() % 4 != 0 {
        return Err(BitfmtError::Unaligned(bytes.len()));
    }
    let words: Vec<u32> = bytes
        .chunks_exact(4)
        .map(|c| u32::from_be_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    let sync_at = words
        .iter()
        .position(|&w| w == options.sync_word)
        .ok_or(BitfmtError::NoSync)?;
    let header = words[..sync_at].to_vec();
    if options.strict_header {
        if let Some(j) = header.iter().position(|&w| w != DUMMY_WORD) {
            return Err(BitfmtError::MalformedHeader {
                offset: 4 * j,
                word: header[j],
            });
        }
    }

    let mut packets = Vec::new();
    let mut trailer = None;
    let mut pos = sync_at + 1;
    while pos < words.len() {
        let w = words[pos];
        if w == TERMINATOR_WORD {
            trailer = Some(bytes[4 * (pos + 1)..].to_vec());
            break;
        }
        let h = PacketHeader::decode(w);
        let expected = h.word_count as usize;
        let actual = words.len() - pos - 1;
        if expected > actual {
            return Err(BitfmtError::TruncatedPacket {
                index: packets.len(),
                expected,
                actual,
            });
        }
        packets.push(ConfigPacket::new(
            h.opcode,
            h.register_address,
            words[pos + 1..pos + 1 + expected].to_vec(),
        ));
        pos += 1 + expected;
    }

    let mut bs = Bitstream {
        header,
        sync: options.sync_word,
        packets,
        trailer,
        payload_offsets: Vec::new(),
    };
    bs.relayout();
    Ok(bs)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PayloadSpec {
    /// `n` uniformly random words.
    Random(usize),
    Fixed(Vec<u32>),
}

impl PayloadSpec {
    pub fn word_count(&self) -> usize {
        match self {
            PayloadSpec::Random(n) => *n,
            PayloadSpec::Fixed(w) => w.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PacketSpec {
    pub opcode: u8,
    pub register_address: u16,
    pub payload: PayloadSpec,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BitstreamSpec {
    pub dummy_words: usize,
    pub sync_word: u32,
    pub packets: Vec<PacketSpec>,
    /// Trailer bytes after a terminator; `None` for no terminator.
    pub trailer: Option<Vec<u8>>,
}

impl Default for BitstreamSpec {
    fn default() -> Self {
        Self {
            dummy_words: 4,
            sync_word: DEFAULT_SYNC_WORD,
            packets: Vec::new(),
            trailer: None,
        }
    }
}

impl BitstreamSpec {
    /// True if `bs` has this spec's layout and every fixed payload.
    pub fn describes(&self, bs: &Bitstream) -> bool {
        bs.header.len() == self.dummy_words
            && bs.header.iter().all(|&w| w == DUMMY_WORD)
            && bs.sync == self.sync_word
            && bs.trailer == self.trailer
            && bs.packets.len() == self.packets.len()
            && bs.packets.iter().zip(&self.packets).all(|(p, s)| {
                p.opcode == s.opcode
                    && p.register_address == s.register_address
                    && p.payload.len() == s.payload.word_count()
                    && match &s.payload {
                        PayloadSpec::Fixed(w) => &p.payload == w,
                        PayloadSpec::Random(_) => true,
                    }
            })
    }
}

/// Materializes a spec, drawing random payload words from `rng`.
pub fn build_bitstream(spec: &BitstreamSpec, rng: &mut RandomSource) -> Result<Bitstream, BitfmtError> {
    let mut packets = Vec::with_capacity(spec.packets.len());
    for (index, p) in spec.packets.iter().enumerate() {
        let n = p.payload.word_count();
        if n > MAX_WORD_COUNT {
            return Err(BitfmtError::WordCount { index, word_count: n });
        }
        let payload = match &p.payload {
            PayloadSpec::Random(n) => (0..*n).map(|_| rng.random::<u32>()).collect(),
            PayloadSpec::Fixed(w) => w.clone(),
        };
        packets.push(ConfigPacket::new(p.opcode, p.register_address, payload));
    }
    let bs = Bitstream::new(spec.dummy_words, spec.sync_word, packets)?;
    match &spec.trailer {
        Some(t) => bs.with_trailer(t.clone()),
        None => Ok(bs),
    }
}

pub fn generate_bitstream(spec: &BitstreamSpec, rng: &mut RandomSource) -> Result<Vec<u8>, BitfmtError> {
    Ok(build_bitstream(spec, rng)?.to_bytes())
}

/// Parameters for [`random_spec`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusParams {
    pub packets: usize,
    pub min_words: usize,
    pub max_words: usize,
    pub dummy_words: usize,
    /// Register addresses assigned round-robin to packets.
    pub addresses: Vec<u16>,
    pub opcode: u8,
}

impl Default for CorpusParams {
    fn default() -> Self {
        Self {
            packets: 16,
            min_words: 8,
            max_words: 64,
            dummy_words: 4,
            addresses: vec![0x001, 0x002, 0x003],
            opcode: 0x3,
        }
    }
}

/// A spec with random word counts in `[min_words, max_words]` and random payloads.
pub fn random_spec(params: &CorpusParams, rng: &mut RandomSource) -> BitstreamSpec {
    let addresses = if params.addresses.is_empty() {
        vec![0]
    } else {
        params.addresses.clone()
    };
    let hi = params.max_words.max(params.min_words);
    BitstreamSpec {
        dummy_words: params.dummy_words,
        sync_word: DEFAULT_SYNC_WORD,
        packets: (0..params.packets)
            .map(|i| PacketSpec {
                opcode: params.opcode,
                register_address: addresses[i % addresses.len()],
                payload: PayloadSpec::Random(rng.random_range(params.min_words..=hi)),
            })
            .collect(),
        trailer: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn words(ws: &[u32]) -> Vec<u8> {
        ws.iter().flat_map(|w| w.to_be_bytes()).collect()
    }

    fn hdr(addr: u16, wc: u16) -> u32 {
        PacketHeader {
            opcode: 3,
            register_address: addr,
            word_count: wc,
        }
        .encode()
    }

    #[test]
    fn minimal_stream() {
        let bs = parse_bitstream(&words(&[DUMMY_WORD, DEFAULT_SYNC_WORD])).unwrap();
        assert_eq!(bs.packets().len(), 0);
        assert_eq!(bs.header_words().len(), 1);
    }

    #[test]
    fn one_packet() {
        let bs = parse_bitstream(&words(&[DEFAULT_SYNC_WORD, hdr(5, 2), 0x1111, 0x2222])).unwrap();
        assert_eq!(bs.packets().len(), 1);
        assert_eq!(bs.packets()[0].payload, vec![0x1111, 0x2222]);
        assert_eq!(bs.packets()[0].register_address, 5);
        assert_eq!(bs.payload_byte_offset(0), Some(8));
    }

    #[test]
    fn errors() {
        assert_eq!(
            parse_bitstream(&words(&[DUMMY_WORD, 0xDEADBEEF])),
            Err(BitfmtError::NoSync)
        );
        assert_eq!(
            parse_bitstream(&words(&[DUMMY_WORD, 0x1234, DEFAULT_SYNC_WORD])),
            Err(BitfmtError::MalformedHeader {
                offset: 4,
                word: 0x1234
            })
        );
        assert_eq!(
            parse_bitstream(&words(&[DEFAULT_SYNC_WORD, hdr(1, 3), 7])),
            Err(BitfmtError::TruncatedPacket {
                index: 0,
                expected: 3,
                actual: 1
            })
        );
        assert_eq!(parse_bitstream(&[0, 1]), Err(BitfmtError::TooShort(2)));
        assert_eq!(parse_bitstream(&[0; 6]), Err(BitfmtError::Unaligned(6)));
    }

    #[test]
    fn lenient_header_keeps_words() {
        let bytes = words(&[0x1234, DEFAULT_SYNC_WORD, hdr(1, 0)]);
        let opts = ParseOptions {
            strict_header: false,
            ..ParseOptions::default()
        };
        let bs = parse_bitstream_with(&bytes, &opts).unwrap();
        assert_eq!(bs.header_words(), &[0x1234]);
        assert_eq!(bs.to_bytes(), bytes);
    }

    #[test]
    fn custom_sync_word() {
        let bytes = words(&[DUMMY_WORD, 0x0102_0304, hdr(2, 1), 9]);
        let opts = ParseOptions {
            sync_word: 0x0102_0304,
            ..ParseOptions::default()
        };
        assert_eq!(parse_bitstream(&bytes), Err(BitfmtError::NoSync));
        let bs = parse_bitstream_with(&bytes, &opts).unwrap();
        assert_eq!(bs.packets()[0].payload, vec![9]);
        assert_eq!(bs.to_bytes(), bytes);
    }

    #[test]
    fn terminator_and_trailer() {
        let bytes = words(&[DEFAULT_SYNC_WORD, hdr(1, 1), 5, TERMINATOR_WORD, 0xA, 0xB]);
        let bs = parse_bitstream(&bytes).unwrap();
        assert!(bs.is_terminated());
        assert_eq!(bs.packets().len(), 1);
        assert_eq!(bs.trailer(), &words(&[0xA, 0xB])[..]);
        assert_eq!(bs.to_bytes(), bytes);
    }

    #[test]
    fn empty_spec_is_header_and_sync() {
        let spec = BitstreamSpec {
            dummy_words: 2,
            ..BitstreamSpec::default()
        };
        let bytes = generate_bitstream(&spec, &mut RandomSource::new(1)).unwrap();
        assert_eq!(bytes, words(&[DUMMY_WORD, DUMMY_WORD, DEFAULT_SYNC_WORD]));
    }

    #[test]
    fn oversize_and_reserved_packets_rejected() {
        let mut spec = BitstreamSpec::default();
        spec.packets.push(PacketSpec {
            opcode: 1,
            register_address: 1,
            payload: PayloadSpec::Random(65_536),
        });
        assert!(matches!(
            generate_bitstream(&spec, &mut RandomSource::new(1)),
            Err(BitfmtError::WordCount { index: 0, .. })
        ));
        assert!(matches!(
            Bitstream::new(0, DEFAULT_SYNC_WORD, vec![ConfigPacket::new(0xF, 0xFFF, vec![0; 0xFFFF])]),
            Err(BitfmtError::ReservedHeader { index: 0 })
        ));
        assert!(matches!(
            Bitstream::new(0, DEFAULT_SYNC_WORD, vec![ConfigPacket::new(0x10, 1, vec![])]),
            Err(BitfmtError::Opcode { .. })
        ));
        assert!(matches!(
            Bitstream::new(0, DEFAULT_SYNC_WORD, vec![ConfigPacket::new(1, 0x1000, vec![])]),
            Err(BitfmtError::Address { .. })
        ));
    }

    #[test]
    fn inject_and_extract() {
        let mut rng = RandomSource::new(2);
        let spec = random_spec(&CorpusParams::default(), &mut rng);
        let mut bs = build_bitstream(&spec, &mut rng).unwrap();
        let sig = PackedBits::from_u64(0xDEAD_BEEF_0BAD_F00D, 64);
        bs.inject_signature(&sig, 2, 13).unwrap();
        assert_eq!(bs.packets()[2].payload_bitvec().slice(13, 64), sig);

        let bytes = bs.to_bytes();
        let abs = 8 * bs.payload_byte_offset(2).unwrap() + 13;
        assert_eq!(PackedBits::from_bytes(&bytes).slice(abs, 64), sig);
        assert_eq!(bs.locate_bit(abs), Some((2, 13)));
    }

    #[test]
    fn inject_rejections() {
        let mut rng = RandomSource::new(3);
        let mut bs = build_bitstream(
            &BitstreamSpec {
                dummy_words: 3,
                packets: vec![PacketSpec {
                    opcode: 1,
                    register_address: 1,
                    payload: PayloadSpec::Random(4),
                }],
                ..BitstreamSpec::default()
            },
            &mut rng,
        )
        .unwrap();
        let sig = PackedBits::from_u64(u64::MAX, 64);
        assert!(matches!(
            bs.inject_signature(&sig, 1, 0),
            Err(BitfmtError::PacketIndex { .. })
        ));
        assert!(matches!(
            bs.inject_signature(&sig, 0, 65),
            Err(BitfmtError::BitRange { .. })
        ));
        // dummy words, sync word and the packet header word are not payload
        for abs in [0, 8, 32 * 3, 32 * 4 + 5] {
            assert_eq!(bs.inject_at_bit(&sig, abs), Err(BitfmtError::NotInPayload(abs)));
        }
        assert_eq!(bs.inject_at_bit(&sig, 32 * 5), Ok((0, 0)));
    }

    #[test]
    fn word_count_identity() {
        let mut rng = RandomSource::new(4);
        let spec = random_spec(&CorpusParams::default(), &mut rng);
        let bs = build_bitstream(&spec, &mut rng).unwrap();
        assert_eq!(bs.to_bytes().len(), 4 * bs.word_count());
        let expected: usize =
            spec.packets.iter().map(|p| 1 + p.payload.word_count()).sum::<usize>() + spec.dummy_words + 1;
        assert_eq!(bs.word_count(), expected);
    }

    fn arb_spec() -> impl Strategy<Value = BitstreamSpec> {
        let packet = (0u8..=0xE, 0u16..=0xFFF, prop_oneof![
            (0usize..40).prop_map(PayloadSpec::Random),
            prop::collection::vec(any::<u32>(), 0..40).prop_map(PayloadSpec::Fixed),
        ])
            .prop_map(|(opcode, register_address, payload)| PacketSpec {
                opcode,
                register_address,
                payload,
            });
        (
            0usize..8,
            prop::collection::vec(packet, 0..12),
            prop::option::of(prop::collection::vec(any::<u32>(), 0..4)),
        )
            .prop_map(|(dummy_words, packets, trailer)| BitstreamSpec {
                dummy_words,
                sync_word: DEFAULT_SYNC_WORD,
                packets,
                trailer: trailer.map(|t| words(&t)),
            })
    }

    proptest! {
        #[test]
        fn parse_generate_round_trip(spec in arb_spec(), seed in any::<u64>()) {
            let mut rng = RandomSource::new(seed);
            let bytes = generate_bitstream(&spec, &mut rng).unwrap();
            let bs = parse_bitstream(&bytes).unwrap();
            prop_assert!(spec.describes(&bs));
            prop_assert_eq!(bs.to_bytes(), bytes);
        }

        #[test]
        fn parser_total_on_random_bytes(bytes in prop::collection::vec(any::<u8>(), 0..256)) {
            if let Ok(bs) = parse_bitstream_with(&bytes, &ParseOptions { strict_header: false, ..ParseOptions::default() }) {
                prop_assert_eq!(bs.to_bytes(), bytes);
            }
        }
    }
}
