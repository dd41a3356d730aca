//! `cadeft`: CRISPR-Cas simulation and bitstream Trojan scanning.
//!
//! Exit status: 0 on success with no detections, 1 when `scan` reports an
//! alert or learned event, 2 on usage, input or I/O errors.

mod config;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use cadeft_core::bitfmt::{self, parse_bitstream_with, random_spec, Bitstream, ParseOptions};
use cadeft_core::cadeft::{
    load_signature_locus, save_signature_locus, scan, Marker, MarkerTable, Signature, SignatureLocus,
};
use cadeft_core::experiments::{
    emit_stats, load_genome, run_mutation_sweep_modes, run_priming_experiment, synthetic_genome, ExperimentConfig,
    PamMode, Source, StatsFormat,
};
use cadeft_core::matcher::PackedBits;
use cadeft_core::rng::{RandomSource, StreamTag};
use cadeft_core::seq::DnaSeq;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng;
use serde::Deserialize;

use config::FileConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Text,
}

#[derive(Parser)]
#[command(name = "cadeft", version, about = "CRISPR-Cas simulation and bitstream Trojan detection")]
struct Cli {
    /// RNG seed [default: 20210614]
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// TOML config file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file (stdout if omitted)
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run simulations
    #[command(subcommand)]
    Sim(SimCommand),
    /// Scan a bitstream against a signature locus
    Scan(ScanArgs),
    /// Generate or modify bitstream corpora
    #[command(subcommand)]
    Corpus(CorpusCommand),
    /// Manage signature loci
    #[command(subcommand)]
    Locus(LocusCommand),
}

#[derive(Subcommand)]
enum SimCommand {
    /// Priming experiment: naive spacers from one genome scanned against it
    Prime(PrimeArgs),
    /// Mutation sweep against mutated phage variants
    Sweep(SweepArgs),
}

#[derive(Args, Clone)]
struct ExperimentArgs {
    #[arg(long)]
    fragments: Option<usize>,
    #[arg(long)]
    fragment_len: Option<usize>,
    #[arg(long)]
    crrnas: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    /// Leader bias of spacer selection, in (0, 1]
    #[arg(long)]
    bias: Option<f64>,
    #[arg(long)]
    max_mismatches: Option<u32>,
    /// Search both strands of the target
    #[arg(long)]
    both_strands: bool,
    /// Reuse one fragment set for every iteration
    #[arg(long)]
    reuse_fragments: bool,
    /// Use a uniform random genome of this length instead of FASTA input
    #[arg(long, value_name = "LEN")]
    synthetic: Option<usize>,
}

#[derive(Args)]
struct PrimeArgs {
    #[arg(long, value_enum)]
    source: SourceArg,
    #[arg(long)]
    host: Option<PathBuf>,
    #[arg(long)]
    phage: Option<PathBuf>,
    #[arg(long, value_enum)]
    pam: Option<PamArg>,
    #[command(flatten)]
    common: ExperimentArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    phage: Option<PathBuf>,
    /// Comma-separated mutation rates in [0, 1]
    #[arg(long, value_delimiter = ',', value_parser = parse_rate)]
    rates: Option<Vec<f64>>,
    /// Comma-separated PAM modes
    #[arg(long, value_enum, value_delimiter = ',')]
    pam: Option<Vec<PamArg>>,
    #[arg(long)]
    variants: Option<usize>,
    /// Do not insert primed spacers during the sweep
    #[arg(long)]
    no_adaptive: bool,
    #[command(flatten)]
    common: ExperimentArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum SourceArg {
    Host,
    Phage,
}

#[derive(Clone, Copy, ValueEnum)]
enum PamArg {
    Normal,
    Modified,
}

impl From<PamArg> for PamMode {
    fn from(p: PamArg) -> Self {
        match p {
            PamArg::Normal => PamMode::Normal,
            PamArg::Modified => PamMode::Modified,
        }
    }
}

fn parse_rate(s: &str) -> Result<f64, String> {
    let r: f64 = s.trim().parse().map_err(|_| format!("{s:?} is not a number"))?;
    if (0.0..=1.0).contains(&r) {
        Ok(r)
    } else {
        Err(format!("rate {r} is outside [0, 1]"))
    }
}

fn parse_word(s: &str) -> Result<u32, String> {
    let h = s.trim_start_matches("0x").trim_start_matches("0X");
    u32::from_str_radix(h, 16).map_err(|e| format!("{s:?}: {e}"))
}

fn parse_address(s: &str) -> Result<u16, String> {
    let v = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(h) => u16::from_str_radix(h, 16).map_err(|e| e.to_string())?,
        None => s.parse().map_err(|e: std::num::ParseIntError| e.to_string())?,
    };
    if v > bitfmt::MAX_REGISTER_ADDRESS {
        return Err(format!("address {s} exceeds 12 bits"));
    }
    Ok(v)
}

#[derive(Args)]
struct ParseArgs {
    /// Sync word in hex
    #[arg(long, value_parser = parse_word, default_value = "AA995566")]
    sync: u32,
    /// Accept non-dummy words before the sync word
    #[arg(long)]
    lenient_header: bool,
}

impl ParseArgs {
    fn options(&self) -> ParseOptions {
        ParseOptions {
            sync_word: self.sync,
            strict_header: !self.lenient_header,
        }
    }
}

#[derive(Args)]
struct ScanArgs {
    #[arg(long)]
    bitstream: PathBuf,
    #[arg(long)]
    locus: PathBuf,
    /// Persist learned signatures back to the locus file
    #[arg(long)]
    learn: bool,
    /// Report file (falls back to --output, then stdout)
    #[arg(long)]
    report: Option<PathBuf>,
    /// Report every qualifying window, not only non-overlapping ones
    #[arg(long)]
    overlapping: bool,
    /// Also learn fuzzy matches found in alert packets
    #[arg(long)]
    learn_on_alert: bool,
    #[command(flatten)]
    parse: ParseArgs,
}

#[derive(Subcommand)]
enum CorpusCommand {
    /// Write a random bitstream
    Gen(GenArgs),
    /// Plant a signature into a bitstream
    Inject(InjectArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    packets: Option<usize>,
    #[arg(long)]
    min_words: Option<usize>,
    #[arg(long)]
    max_words: Option<usize>,
    #[arg(long)]
    dummies: Option<usize>,
    /// Comma-separated register addresses, assigned round-robin
    #[arg(long, value_delimiter = ',', value_parser = parse_address)]
    addresses: Option<Vec<u16>>,
}

#[derive(Args)]
struct InjectArgs {
    #[arg(long)]
    input: PathBuf,
    /// Signature bits as hex
    #[arg(long, conflicts_with = "id")]
    hex: Option<String>,
    /// Signature id to take from --locus
    #[arg(long, requires = "locus")]
    id: Option<String>,
    #[arg(long)]
    locus: Option<PathBuf>,
    /// Signature length in bits for --hex
    #[arg(long, default_value_t = 64)]
    length: usize,
    #[arg(long, requires = "bit")]
    packet: Option<usize>,
    /// Bit offset inside the packet payload
    #[arg(long, requires = "packet")]
    bit: Option<usize>,
    /// Absolute bit offset in the file
    #[arg(long, conflicts_with_all = ["packet", "bit"])]
    abs_bit: Option<usize>,
    /// Flip this many distinct random bits of the signature first
    #[arg(long, default_value_t = 0)]
    flip: usize,
    #[command(flatten)]
    parse: ParseArgs,
}

#[derive(Subcommand)]
enum LocusCommand {
    /// Create an empty signature locus
    Init(InitArgs),
    /// Add a seeded signature
    Add(AddArgs),
    /// List signatures
    List(ListArgs),
}

#[derive(Args)]
struct InitArgs {
    /// Locus file to create (falls back to --output, then stdout)
    path: Option<PathBuf>,
    #[arg(long, default_value_t = cadeft_core::cadeft::DEFAULT_SIGNATURE_LEN)]
    length: usize,
    #[arg(long, default_value_t = cadeft_core::cadeft::DEFAULT_THRESHOLD)]
    threshold: f64,
    /// Marker table file
    #[arg(long)]
    markers: Option<PathBuf>,
    /// Marker for unmapped register addresses
    #[arg(long, value_parser = parse_marker)]
    default_marker: Option<Marker>,
    /// ADDR=CLASS marker entries, e.g. 0x010=learn
    #[arg(long = "mark", value_parser = parse_mark)]
    marks: Vec<(u16, Marker)>,
}

fn parse_marker(s: &str) -> Result<Marker, String> {
    s.parse()
}

fn parse_mark(s: &str) -> Result<(u16, Marker), String> {
    let (a, m) = s.split_once('=').ok_or_else(|| format!("{s:?} is not ADDR=CLASS"))?;
    Ok((parse_address(a)?, m.parse()?))
}

#[derive(Args)]
struct AddArgs {
    #[arg(long)]
    locus: PathBuf,
    #[arg(long)]
    id: String,
    #[arg(long, required_unless_present = "random")]
    hex: Option<String>,
    /// Draw the bits from the seeded RNG
    #[arg(long)]
    random: bool,
    #[arg(long, default_value = "")]
    note: String,
}

#[derive(Args)]
struct ListArgs {
    #[arg(long)]
    locus: PathBuf,
}

struct Ctx {
    seed: u64,
    output: Option<PathBuf>,
    format: Option<Format>,
    file: FileConfig,
}

impl Ctx {
    fn emit(&self, target: Option<&Path>, bytes: &[u8]) -> Result<()> {
        match target.or(self.output.as_deref()) {
            Some(p) => write_atomic(p, bytes),
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(bytes)?;
                out.flush()?;
                Ok(())
            }
        }
    }
}

/// Writes through a temporary file in the same directory and renames it
/// into place, so readers never see a partial file.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("creating temp file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).with_context(|| format!("reading {}", path.display()))
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_locus(path: &Path) -> Result<SignatureLocus> {
    load_signature_locus(&read_text(path)?).with_context(|| format!("loading locus {}", path.display()))
}

fn experiment_config(ctx: &Ctx, a: &ExperimentArgs) -> ExperimentConfig {
    let mut c = ctx.file.experiment.clone();
    c.seed = ctx.seed;
    macro_rules! set {
        ($($f:ident => $g:ident),*) => { $( if let Some(v) = a.$f { c.$g = v; } )* };
    }
    set!(fragments => fragments, fragment_len => fragment_len, crrnas => crrnas,
         iterations => iterations, bias => bias, max_mismatches => max_mismatches);
    c.both_strands |= a.both_strands;
    if a.reuse_fragments {
        c.regenerate_fragments = false;
    }
    c
}

fn genome(cfg: &ExperimentConfig, source: Source, synthetic: Option<usize>, flag: &str) -> Result<DnaSeq> {
    if let Some(len) = synthetic {
        let mut rng = RandomSource::substream(cfg.seed, StreamTag::Corpus, source as u64 + 1);
        return Ok(synthetic_genome(len, &mut rng));
    }
    let path = cfg
        .genome_path(source)
        .ok_or_else(|| anyhow!("missing {flag} (or --synthetic LEN)"))?;
    Ok(load_genome(path)?)
}

fn stats_format(ctx: &Ctx) -> Result<StatsFormat> {
    match ctx.format {
        None | Some(Format::Csv) => Ok(StatsFormat::Csv),
        Some(Format::Json) => Ok(StatsFormat::Json),
        Some(Format::Text) => bail!("simulation output supports csv or json"),
    }
}

fn sim_prime(ctx: &Ctx, a: PrimeArgs) -> Result<ExitCode> {
    let mut cfg = experiment_config(ctx, &a.common);
    if let Some(p) = a.host {
        cfg.host = Some(p);
    }
    if let Some(p) = a.phage {
        cfg.phage = Some(p);
    }
    if let Some(p) = a.pam {
        cfg.pam_mode = p.into();
    }
    cfg.validate()?;
    let format = stats_format(ctx)?;
    let source = match a.source {
        SourceArg::Host => Source::Host,
        SourceArg::Phage => Source::Phage,
    };
    let flag = if source == Source::Host { "--host" } else { "--phage" };
    let g = genome(&cfg, source, a.common.synthetic, flag)?;
    let stats = run_priming_experiment(&cfg, source, &g)?;
    let mut buf = Vec::new();
    emit_stats(&[stats], &cfg, format, &mut buf)?;
    ctx.emit(None, &buf)?;
    Ok(ExitCode::SUCCESS)
}

fn sim_sweep(ctx: &Ctx, a: SweepArgs) -> Result<ExitCode> {
    let mut cfg = experiment_config(ctx, &a.common);
    if let Some(p) = a.phage {
        cfg.phage = Some(p);
    }
    if let Some(r) = a.rates {
        cfg.rates = r;
    }
    if let Some(v) = a.variants {
        cfg.variants = v;
    }
    if a.no_adaptive {
        cfg.adaptive = false;
    }
    let modes: Vec<PamMode> = match a.pam {
        Some(p) => p.into_iter().map(Into::into).collect(),
        None => vec![cfg.pam_mode],
    };
    cfg.pam_mode = modes[0];
    cfg.validate()?;
    let format = stats_format(ctx)?;
    let g = genome(&cfg, Source::Phage, a.common.synthetic, "--phage")?;
    let cells = run_mutation_sweep_modes(&cfg, &g, &modes)?;
    let mut buf = Vec::new();
    emit_stats(&cells, &cfg, format, &mut buf)?;
    ctx.emit(None, &buf)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_scan(ctx: &Ctx, a: ScanArgs) -> Result<ExitCode> {
    let bytes = read(&a.bitstream)?;
    let bs = parse_bitstream_with(&bytes, &a.parse.options())
        .with_context(|| format!("parsing {}", a.bitstream.display()))?;
    let locus = load_locus(&a.locus)?;
    let mut scan_cfg = ctx.file.scan;
    scan_cfg.overlapping |= a.overlapping;
    scan_cfg.learn_on_alert |= a.learn_on_alert;
    let (report, updated) = scan(&bs, &locus, &scan_cfg)?;
    let rendered = match ctx.format {
        Some(Format::Json) => report.to_json(),
        None | Some(Format::Text) => report.to_text(),
        Some(Format::Csv) => bail!("scan reports support text or json"),
    };
    ctx.emit(a.report.as_deref(), rendered.as_bytes())?;
    if a.learn && updated != locus {
        write_atomic(&a.locus, save_signature_locus(&updated).as_bytes())?;
    }
    Ok(if report.has_detections() {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}

fn corpus_gen(ctx: &Ctx, a: GenArgs) -> Result<ExitCode> {
    let mut p = ctx.file.corpus.clone();
    macro_rules! set {
        ($($f:ident => $g:ident),*) => { $( if let Some(v) = a.$f { p.$g = v; } )* };
    }
    set!(packets => packets, min_words => min_words, max_words => max_words, dummies => dummy_words);
    if let Some(v) = a.addresses {
        p.addresses = v;
    }
    if p.min_words > p.max_words {
        bail!("--min-words exceeds --max-words");
    }
    let mut rng = RandomSource::substream(ctx.seed, StreamTag::Corpus, 0);
    let spec = random_spec(&p, &mut rng);
    let bytes = bitfmt::generate_bitstream(&spec, &mut rng)?;
    ctx.emit(None, &bytes)?;
    Ok(ExitCode::SUCCESS)
}

fn signature_bits(a: &InjectArgs) -> Result<PackedBits> {
    if let Some(h) = &a.hex {
        return PackedBits::from_hex(&h.to_ascii_lowercase(), a.length)
            .ok_or_else(|| anyhow!("--hex must be {} hex digits for {} bits", a.length.div_ceil(4), a.length));
    }
    if let (Some(id), Some(path)) = (&a.id, &a.locus) {
        let locus = load_locus(path)?;
        let sig = locus.get(id).ok_or_else(|| anyhow!("no signature {id:?} in {}", path.display()))?;
        return Ok(sig.bits.clone());
    }
    bail!("give --hex or --id with --locus")
}

fn corpus_inject(ctx: &Ctx, a: InjectArgs) -> Result<ExitCode> {
    let bytes = read(&a.input)?;
    let mut bs: Bitstream = parse_bitstream_with(&bytes, &a.parse.options())
        .with_context(|| format!("parsing {}", a.input.display()))?;
    let mut bits = signature_bits(&a)?;
    let mut rng = RandomSource::substream(ctx.seed, StreamTag::Injection, 0);
    if a.flip > bits.len() {
        bail!("--flip {} exceeds the {}-bit signature", a.flip, bits.len());
    }
    for i in rand::seq::index::sample(&mut rng, bits.len(), a.flip) {
        bits.flip(i);
    }
    let (packet, offset) = match (a.packet, a.bit, a.abs_bit) {
        (Some(p), Some(o), _) => {
            bs.inject_signature(&bits, p, o)?;
            (p, o)
        }
        (_, _, Some(abs)) => bs.inject_at_bit(&bits, abs)?,
        _ => {
            let fits: Vec<usize> = (0..bs.packets().len())
                .filter(|&i| bs.packets()[i].payload_bits() >= bits.len())
                .collect();
            if fits.is_empty() {
                bail!("no packet payload holds {} bits", bits.len());
            }
            let p = fits[rng.random_range(0..fits.len())];
            let o = rng.random_range(0..=bs.packets()[p].payload_bits() - bits.len());
            bs.inject_signature(&bits, p, o)?;
            (p, o)
        }
    };
    let abs = 8 * bs.payload_byte_offset(packet).expect("packet exists") + offset;
    eprintln!("injected {} bits at packet {packet} bit {offset} (file bit {abs}, byte {})", bits.len(), abs / 8);
    ctx.emit(None, &bs.to_bytes())?;
    Ok(ExitCode::SUCCESS)
}

fn locus_init(ctx: &Ctx, a: InitArgs) -> Result<ExitCode> {
    let mut markers = match &a.markers {
        Some(p) => MarkerTable::parse(&read_text(p)?).with_context(|| format!("parsing {}", p.display()))?,
        None => MarkerTable::default(),
    };
    if let Some(m) = a.default_marker {
        markers.default = m;
    }
    for (addr, m) in a.marks {
        markers.set(addr, m);
    }
    let locus = SignatureLocus::new(a.length, a.threshold)?.with_markers(markers);
    ctx.emit(a.path.as_deref(), save_signature_locus(&locus).as_bytes())?;
    Ok(ExitCode::SUCCESS)
}

fn locus_add(ctx: &Ctx, a: AddArgs) -> Result<ExitCode> {
    let mut locus = load_locus(&a.locus)?;
    let len = locus.signature_len();
    let sig = if a.random {
        let index = locus.len() as u64;
        let mut rng = RandomSource::substream(ctx.seed, StreamTag::Signature, index);
        let mut s = Signature::random(a.id, len, &mut rng);
        s.note = a.note;
        s
    } else {
        let hex = a.hex.unwrap_or_default().to_ascii_lowercase();
        let bits = PackedBits::from_hex(&hex, len)
            .ok_or_else(|| anyhow!("--hex must be {} hex digits for this {len}-bit locus", len.div_ceil(4)))?;
        Signature::seeded(a.id, bits, a.note)
    };
    locus.add_signature(sig)?;
    write_atomic(&a.locus, save_signature_locus(&locus).as_bytes())?;
    Ok(ExitCode::SUCCESS)
}

fn locus_list(ctx: &Ctx, a: ListArgs) -> Result<ExitCode> {
    let locus = load_locus(&a.locus)?;
    let out = match ctx.format {
        Some(Format::Json) => {
            let rows: Vec<_> = locus
                .signatures()
                .iter()
                .map(|s| {
                    serde_json::json!({
                        "id": s.id, "origin": s.origin.name(), "bits": s.bits.to_hex(), "note": s.note,
                    })
                })
                .collect();
            let doc = serde_json::json!({
                "length": locus.signature_len(),
                "threshold": locus.threshold(),
                "max_mismatches": locus.max_mismatches(),
                "version": locus.version(),
                "signatures": rows,
            });
            serde_json::to_string_pretty(&doc)? + "\n"
        }
        Some(Format::Csv) => {
            let mut s = String::from("index,id,origin,bits,note\n");
            for (i, sig) in locus.signatures().iter().enumerate() {
                s += &format!("{i},{},{},{},{}\n", sig.id, sig.origin.name(), sig.bits.to_hex(), sig.note.replace(',', ";"));
            }
            s
        }
        None | Some(Format::Text) => {
            let mut s = format!(
                "L={} threshold={} max_mismatches={} version={} signatures={}\n",
                locus.signature_len(),
                locus.threshold(),
                locus.max_mismatches(),
                locus.version(),
                locus.len()
            );
            if !locus.is_empty() {
                s += &format!("{:>5}  {:<20} {:<8} note\n", "index", "id", "origin");
            }
            for (i, sig) in locus.signatures().iter().enumerate() {
                s += &format!("{i:>5}  {:<20} {:<8} {}\n", sig.id, sig.origin.name(), sig.note);
            }
            s
        }
    };
    ctx.emit(None, out.as_bytes())?;
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode> {
    let file = FileConfig::load(cli.config.as_deref())?;
    let ctx = Ctx {
        seed: cli.seed.or(file.seed).unwrap_or(file.experiment.seed),
        output: cli.output,
        format: cli.format.or(file.format),
        file,
    };
    match cli.command {
        Command::Sim(SimCommand::Prime(a)) => sim_prime(&ctx, a),
        Command::Sim(SimCommand::Sweep(a)) => sim_sweep(&ctx, a),
        Command::Scan(a) => cmd_scan(&ctx, a),
        Command::Corpus(CorpusCommand::Gen(a)) => corpus_gen(&ctx, a),
        Command::Corpus(CorpusCommand::Inject(a)) => corpus_inject(&ctx, a),
        Command::Locus(LocusCommand::Init(a)) => locus_init(&ctx, a),
        Command::Locus(LocusCommand::Add(a)) => locus_add(&ctx, a),
        Command::Locus(LocusCommand::List(a)) => locus_list(&ctx, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use cadeft_core::bitfmt::DEFAULT_SYNC_WORD;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn rate_parser_bounds() {
        assert_eq!(parse_rate("0.02"), Ok(0.02));
        assert!(parse_rate("1.5").is_err());
        assert!(parse_rate("-0.1").is_err());
        assert!(parse_rate("x").is_err());
    }

    #[test]
    fn mark_parser() {
        assert_eq!(parse_mark("0x010=learn"), Ok((0x10, Marker::Learn)));
        assert!(parse_mark("0x1000=alert").is_err());
        assert!(parse_mark("16").is_err());
    }

    #[test]
    fn default_sync_word_flag() {
        assert_eq!(parse_word("AA995566"), Ok(DEFAULT_SYNC_WORD));
    }
}
