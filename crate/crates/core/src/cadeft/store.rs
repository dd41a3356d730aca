//! Text formats for signature loci and marker tables.
//!
//! ```text
//! CADEFT-LOCUS v1
//! length 64
//! threshold 0.9
//! version 3
//! learned-counter 1
//! marker default alert
//! marker 0x010 learn
//! signature learned-1 learned 5f0c...e1 packet 2 bit 100 near t1
//! signature t1 seeded 5f0c...a1 free-text note
//! ```
//!
//! Header keys come first, in this order. `marker` lines follow, then one
//! `signature <id> <origin> <hex> [note]` line per signature in locus order.
//! Hex is MSB first, `ceil(L/4)` digits. Blank lines and lines starting with
//! `#` are skipped.
//!
//! A standalone marker table uses the same `marker` line bodies without the
//! keyword: `default <class>` and `<address> <class>`, address in decimal or
//! `0x` hex.

use std::fmt::Write as _;

use thiserror::Error;

use super::{CadeftError, Marker, MarkerTable, Signature, SignatureLocus, SignatureOrigin};
use crate::matcher::PackedBits;

pub const LOCUS_MAGIC: &str = "CADEFT-LOCUS";
const LOCUS_VERSION: &str = "v1";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StoreError {
    #[error("not a signature locus file (missing {LOCUS_MAGIC} header)")]
    Magic,
    #[error("unsupported locus file version {0:?}")]
    Version(String),
    #[error("byte {position}: {message}")]
    Parse { position: usize, message: String },
}

struct Lines<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Lines<'a> {
    /// Next non-blank, non-comment line with its starting byte offset.
    fn next(&mut self) -> Option<(usize, &'a str)> {
        while self.pos < self.text.len() {
            let start = self.pos;
            let rest = &self.text[start..];
            let end = rest.find('\n').map_or(rest.len(), |i| i + 1);
            self.pos += end;
            let line = rest[..end].trim_end_matches(['\n', '\r']);
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            return Some((start, line));
        }
        None
    }

    fn peek(&self) -> Option<(usize, &'a str)> {
        Lines {
            text: self.text,
            pos: self.pos,
        }
        .next()
    }
}

fn err(position: usize, message: impl Into<String>) -> StoreError {
    StoreError::Parse {
        position,
        message: message.into(),
    }
}

fn parse_address(s: &str) -> Option<u16> {
    let v = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(h) => u16::from_str_radix(h, 16).ok()?,
        None => s.parse().ok()?,
    };
    (v <= crate::bitfmt::MAX_REGISTER_ADDRESS).then_some(v)
}

fn apply_marker_line(table: &mut MarkerTable, pos: usize, body: &str) -> Result<(), StoreError> {
    let mut parts = body.split_whitespace();
    let (Some(key), Some(class), None) = (parts.next(), parts.next(), parts.next()) else {
        return Err(err(pos, "expected `<address|default> <class>`"));
    };
    let marker: Marker = class.parse().map_err(|m: String| err(pos, m))?;
    if key == "default" {
        table.default = marker;
    } else {
        let addr = parse_address(key).ok_or_else(|| err(pos, format!("invalid register address {key:?}")))?;
        table.set(addr, marker);
    }
    Ok(())
}

fn marker_lines(table: &MarkerTable) -> Vec<String> {
    let mut v = vec![format!("default {}", table.default)];
    v.extend(table.entries().map(|(a, m)| format!("0x{a:03x} {m}")));
    v
}

impl MarkerTable {
    pub fn parse(text: &str) -> Result<Self, StoreError> {
        let mut table = MarkerTable::default();
        let mut lines = Lines { text, pos: 0 };
        while let Some((pos, line)) = lines.next() {
            apply_marker_line(&mut table, pos, line)?;
        }
        Ok(table)
    }

    pub fn to_text(&self) -> String {
        marker_lines(self).into_iter().map(|l| l + "\n").collect()
    }
}

fn header_value<'a>(lines: &mut Lines<'a>, key: &str, eof: usize) -> Result<(usize, &'a str), StoreError> {
    let (pos, line) = lines.next().ok_or_else(|| err(eof, format!("missing `{key}`")))?;
    let value = line
        .strip_prefix(key)
        .filter(|r| r.starts_with(' '))
        .ok_or_else(|| err(pos, format!("expected `{key}`")))?;
    Ok((pos, value.trim()))
}

fn parse_num<T: std::str::FromStr>(pos: usize, key: &str, v: &str) -> Result<T, StoreError> {
    v.parse().map_err(|_| err(pos, format!("invalid {key} {v:?}")))
}

pub fn load_signature_locus(text: &str) -> Result<SignatureLocus, StoreError> {
    let eof = text.len();
    let mut lines = Lines { text, pos: 0 };
    let (_, magic) = lines.next().ok_or(StoreError::Magic)?;
    let mut parts = magic.split_whitespace();
    if parts.next() != Some(LOCUS_MAGIC) {
        return Err(StoreError::Magic);
    }
    match parts.next() {
        Some(LOCUS_VERSION) => {}
        other => return Err(StoreError::Version(other.unwrap_or("").to_string())),
    }

    let (pos, v) = header_value(&mut lines, "length", eof)?;
    let length: usize = parse_num(pos, "length", v)?;
    let (tpos, v) = header_value(&mut lines, "threshold", eof)?;
    let threshold: f64 = parse_num(tpos, "threshold", v)?;
    let mut locus = SignatureLocus::new(length, threshold).map_err(|e| err(pos.min(tpos), e.to_string()))?;
    let (pos, v) = header_value(&mut lines, "version", eof)?;
    let version: u64 = parse_num(pos, "version", v)?;
    let (pos, v) = header_value(&mut lines, "learned-counter", eof)?;
    locus.learned_counter = parse_num(pos, "learned-counter", v)?;

    while let Some((pos, line)) = lines.peek() {
        let Some(body) = line.strip_prefix("marker ") else { break };
        lines.next();
        apply_marker_line(&mut locus.markers, pos, body)?;
    }

    while let Some((pos, line)) = lines.next() {
        let body = line
            .strip_prefix("signature ")
            .ok_or_else(|| err(pos, "expected `signature`"))?;
        let mut parts = body.splitn(4, ' ');
        let (Some(id), Some(origin), Some(hex)) = (parts.next(), parts.next(), parts.next()) else {
            return Err(err(pos, "expected `signature <id> <origin> <hex> [note]`"));
        };
        let note = parts.next().unwrap_or("").trim();
        let origin = match origin {
            "seeded" => SignatureOrigin::Seeded,
            "learned" => SignatureOrigin::Learned,
            other => return Err(err(pos, format!("unknown origin {other:?}"))),
        };
        let bits = PackedBits::from_hex(hex, length)
            .ok_or_else(|| err(pos, format!("signature {id:?}: expected {} hex digits", length.div_ceil(4))))?;
        locus
            .add_signature(Signature {
                id: id.to_string(),
                bits,
                origin,
                note: note.to_string(),
            })
            .map_err(|e: CadeftError| err(pos, e.to_string()))?;
    }
    locus.version = version;
    Ok(locus)
}

pub fn save_signature_locus(locus: &SignatureLocus) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{LOCUS_MAGIC} {LOCUS_VERSION}");
    let _ = writeln!(out, "length {}", locus.length);
    let _ = writeln!(out, "threshold {}", locus.threshold);
    let _ = writeln!(out, "version {}", locus.version);
    let _ = writeln!(out, "learned-counter {}", locus.learned_counter);
    for l in marker_lines(&locus.markers) {
        let _ = writeln!(out, "marker {l}");
    }
    for s in &locus.signatures {
        let _ = write!(out, "signature {} {} {}", s.id, s.origin.name(), s.bits.to_hex());
        if !s.note.is_empty() {
            let _ = write!(out, " {}", s.note);
        }
        out.push('\n');
    }
    out
}
