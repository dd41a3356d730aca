//! Minimal FASTA reader and writer for DNA records.

use std::io::{self, Write};
use std::path::Path;

use super::{Alphabet, Dna, DnaSeq, SeqError};

/// Sequence lines are wrapped at this width on output.
pub const FASTA_LINE_WIDTH: usize = 70;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FastaRecord {
    /// First whitespace-delimited token of the header line.
    pub id: String,
    /// Remainder of the header line, if any.
    pub description: Option<String>,
    pub seq: DnaSeq,
}

impl FastaRecord {
    pub fn new(id: impl Into<String>, seq: DnaSeq) -> Self {
        Self {
            id: id.into(),
            description: None,
            seq,
        }
    }
}

/// Parses FASTA text. Sequence lines are concatenated and uppercased;
/// whitespace inside them is ignored and any other non-ACGT symbol is an error
/// carrying its 1-based line number.
pub fn parse_fasta(text: &str) -> Result<Vec<FastaRecord>, SeqError> {
    let mut records = Vec::new();
    let mut current: Option<(String, Option<String>, Vec<u8>)> = None;

    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if let Some(header) = line.strip_prefix('>') {
            if let Some((id, description, bases)) = current.take() {
                records.push(FastaRecord {
                    id,
                    description,
                    seq: DnaSeq::from_validated(bases),
                });
            }
            let header = header.trim();
            let (id, description) = match header.split_once(char::is_whitespace) {
                Some((id, rest)) => (id.to_string(), Some(rest.trim().to_string())),
                None => (header.to_string(), None),
            };
            current = Some((id, description, Vec::new()));
            continue;
        }

        let Some((_, _, bases)) = current.as_mut() else {
            if line.trim().is_empty() {
                continue;
            }
            return Err(SeqError::FastaMissingHeader { line: line_no });
        };
        for ch in line.chars() {
            if ch.is_whitespace() {
                continue;
            }
            let up = ch.to_ascii_uppercase();
            if !up.is_ascii() || Dna::code(up as u8).is_none() {
                return Err(SeqError::FastaSymbol {
                    line: line_no,
                    symbol: ch,
                });
            }
            bases.push(up as u8);
        }
    }
    if let Some((id, description, bases)) = current {
        records.push(FastaRecord {
            id,
            description,
            seq: DnaSeq::from_validated(bases),
        });
    }
    Ok(records)
}

pub fn read_fasta_file(path: impl AsRef<Path>) -> Result<Vec<FastaRecord>, SeqError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| SeqError::Io(format!("{}: {e}", path.display())))?;
    parse_fasta(&text)
}

pub fn write_fasta<W: Write>(records: &[FastaRecord], mut out: W) -> io::Result<()> {
    for r in records {
        match &r.description {
            Some(d) => writeln!(out, ">{} {}", r.id, d)?,
            None => writeln!(out, ">{}", r.id)?,
        }
        for chunk in r.seq.as_bytes().chunks(FASTA_LINE_WIDTH) {
            out.write_all(chunk)?;
            out.write_all(b"\n")?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn concatenates_lines() {
        let recs = parse_fasta(">x\nGATT\nACA\n").unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].id, "x");
        assert_eq!(recs[0].seq.as_str(), "GATTACA");
    }

    #[test]
    fn multiple_records() {
        let recs = parse_fasta(">a\nAC\n>b\nGT\n").unwrap();
        let got: Vec<_> = recs.iter().map(|r| (r.id.as_str(), r.seq.as_str())).collect();
        assert_eq!(got, vec![("a", "AC"), ("b", "GT")]);
    }

    #[test]
    fn rejects_ambiguity_codes_with_line() {
        assert_eq!(
            parse_fasta(">x\nGAN T\n"),
            Err(SeqError::FastaSymbol {
                line: 2,
                symbol: 'N'
            })
        );
    }

    #[test]
    fn lowercase_and_descriptions() {
        let recs = parse_fasta(">NC_1 some phage, complete\nacgt\n\n").unwrap();
        assert_eq!(recs[0].id, "NC_1");
        assert_eq!(recs[0].description.as_deref(), Some("some phage, complete"));
        assert_eq!(recs[0].seq.as_str(), "ACGT");
    }

    #[test]
    fn empty_input_is_empty() {
        assert!(parse_fasta("").unwrap().is_empty());
        assert_eq!(
            parse_fasta("ACGT\n"),
            Err(SeqError::FastaMissingHeader { line: 1 })
        );
    }

    #[test]
    fn wraps_at_seventy() {
        let seq = DnaSeq::from_codes((0..150).map(|i| (i % 4) as u8));
        let mut buf = Vec::new();
        write_fasta(&[FastaRecord::new("s", seq)], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lens: Vec<_> = text.lines().map(str::len).collect();
        assert_eq!(lens, vec![2, 70, 70, 10]);
    }

    proptest! {
        #[test]
        fn write_then_parse_round_trips(
            recs in proptest::collection::vec(
                ("[A-Za-z0-9_.]{1,12}", proptest::option::of("[a-z ,]{0,20}[a-z]"), proptest::collection::vec(0u8..4, 0..300)),
                0..5,
            )
        ) {
            let records: Vec<FastaRecord> = recs
                .into_iter()
                .map(|(id, description, codes)| FastaRecord {
                    id,
                    description: description.map(|d| d.trim().to_string()).filter(|d| !d.is_empty()),
                    seq: DnaSeq::from_codes(codes),
                })
                .collect();
            let mut buf = Vec::new();
            write_fasta(&records, &mut buf).unwrap();
            let back = parse_fasta(std::str::from_utf8(&buf).unwrap()).unwrap();
            prop_assert_eq!(back, records);
        }
    }
}
