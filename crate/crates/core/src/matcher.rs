//! k-mismatch search shared by the genome scanner and the bitstream detector.
//!
//! Texts and patterns are stored as bit planes: one plane for raw binary data,
//! two planes (high and low bit of the 2-bit code) for nucleotides. A symbol
//! mismatches when any plane differs, so the Hamming distance of a window is
//! `popcount(OR over planes of (text ^ pattern))`, computed 64 symbols at a
//! time.
//!
//! [`SeedIndex`] adds a pigeonhole filter for long nucleotide texts: a window
//! with at most `k` mismatches contains at least one of `k + 1` disjoint
//! pattern blocks verbatim, so only windows sharing an exact block with the
//! pattern are verified.

use std::fmt;

/// A bit vector packed most-significant-bit first: bit 0 is the MSB of the
/// first word. One zero word of padding follows the data so unaligned
/// 64-bit reads never go out of bounds, and bits past `len` are always zero.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PackedBits {
    words: Vec<u64>,
    len: usize,
}

impl PackedBits {
    pub fn zeros(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(64) + 1],
            len,
        }
    }

    pub fn from_fn(len: usize, mut f: impl FnMut(usize) -> bool) -> Self {
        let mut bits = Self::zeros(len);
        for i in 0..len {
            if f(i) {
                bits.words[i / 64] |= 1 << (63 - i % 64);
            }
        }
        bits
    }

    /// Bytes read MSB-first.
    pub fn from_bytes(bytes: &[u8]) -> Self {
        let mut bits = Self::zeros(bytes.len() * 8);
        for (i, chunk) in bytes.chunks(8).enumerate() {
            let mut buf = [0u8; 8];
            buf[..chunk.len()].copy_from_slice(chunk);
            bits.words[i] = u64::from_be_bytes(buf);
        }
        bits
    }

    /// 32-bit words, each MSB-first, in order.
    pub fn from_u32_words(words: &[u32]) -> Self {
        let mut bits = Self::zeros(words.len() * 32);
        for (i, pair) in words.chunks(2).enumerate() {
            let hi = pair[0] as u64;
            let lo = pair.get(1).copied().unwrap_or(0) as u64;
            bits.words[i] = (hi << 32) | lo;
        }
        bits
    }

    /// The low `width` bits of `value`, MSB first.
    pub fn from_u64(value: u64, width: usize) -> Self {
        assert!(width <= 64);
        let mut bits = Self::zeros(width);
        if width > 0 {
            bits.words[0] = value << (64 - width);
        }
        bits
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit {i} out of range {}", self.len);
        self.words[i / 64] >> (63 - i % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit {i} out of range {}", self.len);
        let mask = 1u64 << (63 - i % 64);
        if value {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn flip(&mut self, i: usize) {
        let v = self.get(i);
        self.set(i, !v);
    }

    /// Bits `[offset, offset + width)` right-aligned in a `u64`.
    /// Bits past the end read as zero.
    #[inline]
    pub fn window(&self, offset: usize, width: usize) -> u64 {
        debug_assert!((1..=64).contains(&width));
        debug_assert!(offset + width <= self.len);
        let w = offset / 64;
        let s = offset % 64;
        let mut v = self.words[w] << s;
        if s != 0 {
            v |= self.words[w + 1] >> (64 - s);
        }
        v >> (64 - width)
    }

    pub fn slice(&self, offset: usize, len: usize) -> Self {
        assert!(offset + len <= self.len);
        let mut out = Self::zeros(len);
        let mut done = 0;
        while done < len {
            let width = (len - done).min(64);
            out.words[done / 64] = self.window(offset + done, width) << (64 - width);
            done += width;
        }
        out
    }

    /// Overwrites bits `[offset, offset + src.len())` with `src`.
    pub fn splice(&mut self, offset: usize, src: &PackedBits) {
        assert!(offset + src.len() <= self.len);
        for i in 0..src.len() {
            self.set(offset + i, src.get(i));
        }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn hamming(&self, other: &Self) -> usize {
        assert_eq!(self.len, other.len);
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    /// Big-endian 32-bit words; the final word is zero-padded.
    pub fn to_u32_words(&self) -> Vec<u32> {
        let n = self.len.div_ceil(32);
        (0..n)
            .map(|i| {
                let w = self.words[i / 2];
                if i % 2 == 0 {
                    (w >> 32) as u32
                } else {
                    w as u32
                }
            })
            .collect()
    }

    /// Lowercase hex, MSB first, `ceil(len / 4)` digits, zero-padded.
    pub fn to_hex(&self) -> String {
        let digits = self.len.div_ceil(4);
        let mut s = String::with_capacity(digits);
        for d in 0..digits {
            let nibble = (self.words[d / 16] >> (60 - 4 * (d % 16))) & 0xF;
            s.push(char::from_digit(nibble as u32, 16).unwrap());
        }
        s
    }

    /// Inverse of [`to_hex`](Self::to_hex). Padding bits must be zero.
    pub fn from_hex(hex: &str, len: usize) -> Option<Self> {
        if hex.len() != len.div_ceil(4) {
            return None;
        }
        let mut bits = Self::zeros(len);
        for (d, ch) in hex.chars().enumerate() {
            let nibble = ch.to_digit(16)? as u64;
            bits.words[d / 16] |= nibble << (60 - 4 * (d % 16));
        }
        let tail = bits.len % 64;
        let last = bits.len / 64;
        let spill = if tail == 0 {
            bits.words[last]
        } else {
            bits.words[last] & (u64::MAX >> tail)
        };
        if spill != 0 {
            return None;
        }
        Some(bits)
    }
}

impl fmt::Debug for PackedBits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PackedBits({}b, 0x{})", self.len, self.to_hex())
    }
}

/// A text or pattern over a `2^P`-letter alphabet, stored as `P` bit planes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Planes<const P: usize> {
    planes: [PackedBits; P],
    len: usize,
}

pub type BinaryText = Planes<1>;
pub type NucleotideText = Planes<2>;

impl Planes<1> {
    pub fn from_bits(bits: PackedBits) -> Self {
        let len = bits.len();
        Self {
            planes: [bits],
            len,
        }
    }

    pub fn bits(&self) -> &PackedBits {
        &self.planes[0]
    }
}

impl Planes<2> {
    /// From 2-bit symbol codes (only the low two bits of each are used).
    pub fn from_codes(codes: &[u8]) -> Self {
        let hi = PackedBits::from_fn(codes.len(), |i| codes[i] & 2 != 0);
        let lo = PackedBits::from_fn(codes.len(), |i| codes[i] & 1 != 0);
        Self {
            planes: [hi, lo],
            len: codes.len(),
        }
    }

    #[inline]
    pub fn code_at(&self, i: usize) -> u8 {
        ((self.planes[0].get(i) as u8) << 1) | self.planes[1].get(i) as u8
    }

    /// 2-bit codes of `k <= 32` symbols starting at `offset`, packed with the
    /// first symbol most significant.
    pub fn kmer(&self, offset: usize, k: usize) -> u64 {
        let hi = self.planes[0].window(offset, k);
        let lo = self.planes[1].window(offset, k);
        let mut code = 0u64;
        for j in (0..k).rev() {
            code = (code << 2) | ((hi >> j & 1) << 1) | (lo >> j & 1);
        }
        code
    }
}

impl<const P: usize> Planes<P> {
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Mismatching symbols between `pattern` and the window at `offset`, or
    /// `None` as soon as the count exceeds `limit`.
    #[inline]
    pub fn mismatches_at(&self, pattern: &Pattern<P>, offset: usize, limit: u32) -> Option<u32> {
        debug_assert!(offset + pattern.len <= self.len);
        let mut total = 0u32;
        for (c, chunk) in pattern.chunks.iter().enumerate() {
            let width = pattern.width(c);
            let base = offset + 64 * c;
            let mut diff = 0u64;
            for p in 0..P {
                diff |= self.planes[p].window(base, width) ^ chunk[p];
            }
            total += diff.count_ones();
            if total > limit {
                return None;
            }
        }
        Some(total)
    }
}

/// A search pattern pre-split into 64-symbol chunks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pattern<const P: usize> {
    source: Planes<P>,
    chunks: Vec<[u64; P]>,
    len: usize,
}

impl<const P: usize> Pattern<P> {
    pub fn new(source: Planes<P>) -> Self {
        let len = source.len;
        let chunks = (0..len.div_ceil(64))
            .map(|c| {
                let width = (len - 64 * c).min(64);
                std::array::from_fn(|p| source.planes[p].window(64 * c, width))
            })
            .collect();
        Self {
            source,
            chunks,
            len,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn planes(&self) -> &Planes<P> {
        &self.source
    }

    #[inline]
    fn width(&self, chunk: usize) -> usize {
        (self.len - 64 * chunk).min(64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Hit {
    pub offset: usize,
    pub mismatches: u32,
}

/// Every window of `text` within `max_mismatches` of `pattern`, in offset
/// order. An empty pattern or one longer than the text yields no hits.
pub fn scan<const P: usize>(pattern: &Pattern<P>, text: &Planes<P>, max_mismatches: u32) -> Vec<Hit> {
    if pattern.is_empty() || pattern.len > text.len {
        return Vec::new();
    }
    (0..=text.len - pattern.len)
        .filter_map(|offset| {
            text.mismatches_at(pattern, offset, max_mismatches)
                .map(|mismatches| Hit { offset, mismatches })
        })
        .collect()
}

/// [`scan`] for several equal-length patterns at once; the text windows are
/// extracted once per offset. Returns one hit list per pattern.
pub fn scan_many<const P: usize>(
    patterns: &[&Pattern<P>],
    text: &Planes<P>,
    max_mismatches: u32,
) -> Vec<Vec<Hit>> {
    let mut out = vec![Vec::new(); patterns.len()];
    let Some(first) = patterns.first() else {
        return out;
    };
    let m = first.len;
    assert!(patterns.iter().all(|p| p.len == m), "patterns differ in length");
    if m == 0 || m > text.len {
        return out;
    }
    let nchunks = first.chunks.len();
    let mut windows = vec![[0u64; P]; nchunks];
    for offset in 0..=text.len - m {
        for (c, w) in windows.iter_mut().enumerate() {
            let width = first.width(c);
            for p in 0..P {
                w[p] = text.planes[p].window(offset + 64 * c, width);
            }
        }
        for (pi, pat) in patterns.iter().enumerate() {
            let mut total = 0u32;
            for (w, chunk) in windows.iter().zip(&pat.chunks) {
                let mut diff = 0u64;
                for p in 0..P {
                    diff |= w[p] ^ chunk[p];
                }
                total += diff.count_ones();
                if total > max_mismatches {
                    break;
                }
            }
            if total <= max_mismatches {
                out[pi].push(Hit {
                    offset,
                    mismatches: total,
                });
            }
        }
    }
    out
}

/// Seed length used by [`SeedIndex::new`]: four 8-mer blocks cover a 32-nt
/// spacer at up to 3 mismatches.
pub const DEFAULT_SEED_LEN: usize = 8;

/// Exact k-mer index over a nucleotide text for pigeonhole-filtered search.
#[derive(Clone, Debug)]
pub struct SeedIndex {
    text: NucleotideText,
    seed_len: usize,
    /// CSR bucket boundaries: positions of k-mer `c` are
    /// `positions[starts[c]..starts[c + 1]]`.
    starts: Vec<u32>,
    positions: Vec<u32>,
}

impl SeedIndex {
    pub fn new(text: NucleotideText) -> Self {
        Self::with_seed_len(text, DEFAULT_SEED_LEN)
    }

    pub fn with_seed_len(text: NucleotideText, seed_len: usize) -> Self {
        assert!((1..=12).contains(&seed_len), "seed length must be 1..=12");
        assert!(text.len() < u32::MAX as usize);
        let buckets = 1usize << (2 * seed_len);
        let mut counts = vec![0u32; buckets + 1];
        let kmers: Vec<u32> = if text.len() >= seed_len {
            let mask = (buckets - 1) as u64;
            let mut code = 0u64;
            let mut out = Vec::with_capacity(text.len() - seed_len + 1);
            for i in 0..text.len() {
                code = ((code << 2) | text.code_at(i) as u64) & mask;
                if i + 1 >= seed_len {
                    out.push(code as u32);
                }
            }
            out
        } else {
            Vec::new()
        };
        for &k in &kmers {
            counts[k as usize + 1] += 1;
        }
        for i in 1..counts.len() {
            counts[i] += counts[i - 1];
        }
        let starts = counts.clone();
        let mut fill = counts;
        let mut positions = vec![0u32; kmers.len()];
        for (pos, &k) in kmers.iter().enumerate() {
            let slot = &mut fill[k as usize];
            positions[*slot as usize] = pos as u32;
            *slot += 1;
        }
        Self {
            text,
            seed_len,
            starts,
            positions,
        }
    }

    pub fn text(&self) -> &NucleotideText {
        &self.text
    }

    pub fn seed_len(&self) -> usize {
        self.seed_len
    }

    fn bucket(&self, code: u64) -> &[u32] {
        let c = code as usize;
        &self.positions[self.starts[c] as usize..self.starts[c + 1] as usize]
    }

    /// Same result as [`scan`] over the indexed text. Falls back to a linear
    /// scan when `max_mismatches + 1` seeds do not fit in the pattern.
    pub fn search(&self, pattern: &Pattern<2>, max_mismatches: u32) -> Vec<Hit> {
        let m = pattern.len();
        let n = self.text.len();
        if m == 0 || m > n {
            return Vec::new();
        }
        let blocks = max_mismatches as usize + 1;
        if blocks * self.seed_len > m {
            return scan(pattern, &self.text, max_mismatches);
        }
        let mut candidates = Vec::new();
        for b in 0..blocks {
            let block_offset = b * self.seed_len;
            let code = pattern.planes().kmer(block_offset, self.seed_len);
            for &pos in self.bucket(code) {
                let pos = pos as usize;
                if pos >= block_offset && pos - block_offset + m <= n {
                    candidates.push(pos - block_offset);
                }
            }
        }
        candidates.sort_unstable();
        candidates.dedup();
        candidates
            .into_iter()
            .filter_map(|offset| {
                self.text
                    .mismatches_at(pattern, offset, max_mismatches)
                    .map(|mismatches| Hit { offset, mismatches })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Symbol-by-symbol reference scan.
    fn naive(pattern: &[u8], text: &[u8], k: u32) -> Vec<Hit> {
        if pattern.is_empty() || pattern.len() > text.len() {
            return Vec::new();
        }
        (0..=text.len() - pattern.len())
            .filter_map(|o| {
                let d = pattern
                    .iter()
                    .zip(&text[o..])
                    .filter(|(a, b)| a != b)
                    .count() as u32;
                (d <= k).then_some(Hit {
                    offset: o,
                    mismatches: d,
                })
            })
            .collect()
    }

    #[test]
    fn window_reads_across_words() {
        let bits = PackedBits::from_u32_words(&[0x0000_0001, 0x8000_0000, 0xFFFF_FFFF]);
        assert_eq!(bits.window(31, 2), 0b11);
        assert_eq!(bits.window(30, 3), 0b011);
        assert_eq!(bits.window(64, 32), 0xFFFF_FFFF);
        assert_eq!(bits.window(32, 64), 0x8000_0000_FFFF_FFFF);
    }

    #[test]
    fn hex_round_trip_and_padding() {
        let bits = PackedBits::from_fn(10, |i| i % 3 == 0);
        let hex = bits.to_hex();
        assert_eq!(hex.len(), 3);
        assert_eq!(PackedBits::from_hex(&hex, 10), Some(bits));
        // 0x3ff: the last nibble's low two bits are padding and must be zero
        assert_eq!(PackedBits::from_hex("3ff", 10), None);
        assert_eq!(PackedBits::from_hex("3fc", 10).unwrap().count_ones(), 8);
    }

    #[test]
    fn slice_and_splice() {
        let mut bits = PackedBits::from_fn(200, |i| i % 5 == 0);
        let s = bits.slice(63, 70);
        for i in 0..70 {
            assert_eq!(s.get(i), (63 + i) % 5 == 0);
        }
        let ones = PackedBits::from_fn(70, |_| true);
        bits.splice(100, &ones);
        assert_eq!(bits.slice(100, 70), ones);
        assert!(!bits.get(99) && bits.get(95));
    }

    #[test]
    fn seed_index_finds_exact_and_fuzzy() {
        let codes: Vec<u8> = (0..500u32).map(|i| (i.wrapping_mul(2654435761) >> 7) as u8 & 3).collect();
        let text = NucleotideText::from_codes(&codes);
        let mut pat = codes[100..132].to_vec();
        pat[3] ^= 1;
        pat[20] ^= 2;
        let pattern = Pattern::new(NucleotideText::from_codes(&pat));
        let idx = SeedIndex::new(text.clone());
        let hits = idx.search(&pattern, 3);
        assert!(hits.contains(&Hit {
            offset: 100,
            mismatches: 2
        }));
        assert_eq!(hits, naive(&pat, &codes, 3));
        assert_eq!(scan(&pattern, &text, 3), hits);
    }

    proptest! {
        #[test]
        fn dna_scan_matches_naive(
            text in proptest::collection::vec(0u8..4, 0..400),
            pat in proptest::collection::vec(0u8..4, 1..80),
            k in 0u32..6,
        ) {
            let expected = naive(&pat, &text, k);
            let t = NucleotideText::from_codes(&text);
            let p = Pattern::new(NucleotideText::from_codes(&pat));
            prop_assert_eq!(&scan(&p, &t, k), &expected);
            prop_assert_eq!(&SeedIndex::with_seed_len(t.clone(), 3).search(&p, k), &expected);
        }

        #[test]
        fn binary_scan_many_matches_naive(
            text in proptest::collection::vec(0u8..2, 0..600),
            pats in (1usize..140).prop_flat_map(|m| proptest::collection::vec(proptest::collection::vec(0u8..2, m), 1..4)),
            k in 0u32..20,
        ) {
            let t = BinaryText::from_bits(PackedBits::from_fn(text.len(), |i| text[i] == 1));
            let compiled: Vec<Pattern<1>> = pats
                .iter()
                .map(|p| Pattern::new(BinaryText::from_bits(PackedBits::from_fn(p.len(), |i| p[i] == 1))))
                .collect();
            let refs: Vec<&Pattern<1>> = compiled.iter().collect();
            let many = scan_many(&refs, &t, k);
            for (i, p) in pats.iter().enumerate() {
                let expected = naive(p, &text, k);
                prop_assert_eq!(&scan(&compiled[i], &t, k), &expected);
                prop_assert_eq!(&many[i], &expected);
            }
        }

        #[test]
        fn hex_round_trips(bits in proptest::collection::vec(any::<bool>(), 0..300)) {
            let b = PackedBits::from_fn(bits.len(), |i| bits[i]);
            prop_assert_eq!(PackedBits::from_hex(&b.to_hex(), b.len()), Some(b));
        }
    }
}
