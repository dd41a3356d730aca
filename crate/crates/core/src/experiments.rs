//! Monte Carlo harness for the priming experiment and the mutation sweeps.
//!
//! Every random draw comes from a substream keyed by `(seed, purpose, index)`,
//! so iterations can run in parallel and a `(config, seed)` pair fully
//! determines the output.
//!
//! # Stats schema
//!
//! CSV output has one row per cell with the fixed header [`CSV_HEADER`].
//! Ratios are per-iteration ratios averaged over the batch; counts are
//! batch totals. JSON output is an object `{ "seed", "config", "cells" }`
//! where each cell carries the same summary plus its per-iteration tallies.

use std::io::{self, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cascade::{
    scan_genome, transcribe_locus, CascadeError, CrrnaHandles, HitPolicy, IndexedGenome, PamTable,
    ScanOptions, Tally, DEFAULT_BIAS, DEFAULT_MAX_MISMATCHES,
};
use crate::locus::{CrisprLocus, LocusError, Origin, DEFAULT_SPACER_LEN};
use crate::rng::{RandomSource, StreamTag, DEFAULT_SEED};
use crate::seq::{mutate, read_fasta_file, sample_fragments, DnaSeq, SeqError};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid experiment config: {0}")]
    Config(String),
    #[error("genome {path}: {source}")]
    Genome { path: PathBuf, source: SeqError },
    #[error("genome {0} contains no sequence")]
    EmptyGenome(PathBuf),
    #[error(transparent)]
    Seq(#[from] SeqError),
    #[error(transparent)]
    Cascade(#[from] CascadeError),
    #[error(transparent)]
    Locus(#[from] LocusError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PamMode {
    #[default]
    Normal,
    Modified,
}

impl PamMode {
    pub fn table(self) -> PamTable {
        match self {
            PamMode::Normal => PamTable::normal(),
            PamMode::Modified => modified_pam_table(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PamMode::Normal => "normal",
            PamMode::Modified => "modified",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Host,
    Phage,
}

impl Source {
    pub fn name(self) -> &'static str {
        match self {
            Source::Host => "host",
            Source::Phage => "phage",
        }
    }
}

/// Normal PAM sets with every stable PAM but CCG moved to intermediate.
pub fn modified_pam_table() -> PamTable {
    PamTable::modified()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub host: Option<PathBuf>,
    pub phage: Option<PathBuf>,
    pub fragments: usize,
    pub fragment_len: usize,
    pub crrnas: usize,
    pub iterations: usize,
    pub rates: Vec<f64>,
    pub variants: usize,
    pub pam_mode: PamMode,
    pub max_mismatches: u32,
    pub bias: f64,
    /// Draw a fresh fragment set each iteration instead of one shared set.
    pub regenerate_fragments: bool,
    /// Insert primed protospacers into the locus during a sweep.
    pub adaptive: bool,
    pub both_strands: bool,
    pub hit_policy: HitPolicy,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            host: None,
            phage: None,
            fragments: 1000,
            fragment_len: DEFAULT_SPACER_LEN,
            crrnas: 100,
            iterations: 20,
            rates: vec![0.005, 0.01, 0.02],
            variants: 50,
            pam_mode: PamMode::Normal,
            max_mismatches: DEFAULT_MAX_MISMATCHES,
            bias: DEFAULT_BIAS,
            regenerate_fragments: true,
            adaptive: true,
            both_strands: false,
            hit_policy: HitPolicy::First,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: &str| Err(ExperimentError::Config(m.to_string()));
        if self.iterations == 0 {
            return bad("iterations must be at least 1");
        }
        if self.fragments == 0 || self.fragment_len == 0 || self.crrnas == 0 {
            return bad("fragment count, fragment length and crRNA count must be positive");
        }
        if self.variants == 0 {
            return bad("variants per rate must be at least 1");
        }
        if let Some(r) = self.rates.iter().find(|r| !(0.0..=1.0).contains(*r)) {
            return Err(ExperimentError::Config(format!("mutation rate {r} is outside [0, 1]")));
        }
        if !(self.bias > 0.0 && self.bias <= 1.0) {
            return Err(ExperimentError::Config(format!("bias {} is outside (0, 1]", self.bias)));
        }
        Ok(())
    }

    fn scan_options(&self) -> ScanOptions {
        ScanOptions {
            max_mismatches: self.max_mismatches,
            policy: self.hit_policy,
            both_strands: self.both_strands,
        }
    }

    pub fn genome_path(&self, source: Source) -> Option<&Path> {
        match source {
            Source::Host => self.host.as_deref(),
            Source::Phage => self.phage.as_deref(),
        }
    }
}

/// Reads a FASTA genome; multiple records are concatenated in file order.
pub fn load_genome(path: &Path) -> Result<DnaSeq, ExperimentError> {
    let records = read_fasta_file(path).map_err(|source| ExperimentError::Genome {
        path: path.to_path_buf(),
        source,
    })?;
    let seq = DnaSeq::concat(records.iter().map(|r| &r.seq));
    if seq.is_empty() {
        return Err(ExperimentError::EmptyGenome(path.to_path_buf()));
    }
    Ok(seq)
}

/// A uniform i.i.d. genome, the analytic baseline for interference ratios.
pub fn synthetic_genome(len: usize, rng: &mut RandomSource) -> DnaSeq {
    use rand::Rng;
    DnaSeq::from_codes((0..len).map(|_| rng.random_range(0..4u8)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationStats {
    pub tally: Tally,
    pub interference_ratio: f64,
    pub primed_ratio: f64,
    pub no_action_ratio: f64,
    pub primed_acquisitions: u64,
}

impl IterationStats {
    fn new(tally: Tally, primed_acquisitions: u64) -> Self {
        let (i, p, n) = tally.ratios();
        Self {
            tally,
            interference_ratio: i,
            primed_ratio: p,
            no_action_ratio: n,
            primed_acquisitions,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchStats {
    /// `prime` or `sweep`.
    pub experiment: String,
    pub source: Source,
    pub pam_mode: PamMode,
    /// Mutation rate for sweep cells.
    pub rate: Option<f64>,
    pub interference_ratio: f64,
    pub primed_ratio: f64,
    pub no_action_ratio: f64,
    pub tally: Tally,
    pub primed_acquisitions: u64,
    pub iterations: Vec<IterationStats>,
}

impl BatchStats {
    fn aggregate(experiment: &str, source: Source, pam_mode: PamMode, rate: Option<f64>, its: Vec<IterationStats>) -> Self {
        let n = its.len() as f64;
        let mean = |f: fn(&IterationStats) -> f64| its.iter().map(f).sum::<f64>() / n;
        let mut tally = Tally::default();
        for it in &its {
            tally.merge(&it.tally);
        }
        Self {
            experiment: experiment.to_string(),
            source,
            pam_mode,
            rate,
            interference_ratio: mean(|s| s.interference_ratio),
            primed_ratio: mean(|s| s.primed_ratio),
            no_action_ratio: mean(|s| s.no_action_ratio),
            tally,
            primed_acquisitions: its.iter().map(|s| s.primed_acquisitions).sum(),
            iterations: its,
        }
    }
}

fn fresh_locus(cfg: &ExperimentConfig) -> Result<CrisprLocus, ExperimentError> {
    let base = CrisprLocus::default();
    Ok(CrisprLocus::with_spacer_len(
        base.leader().clone(),
        base.repeat().clone(),
        cfg.fragment_len,
    )?)
}

fn primed_locus(
    cfg: &ExperimentConfig,
    genome: &DnaSeq,
    shared: Option<&[DnaSeq]>,
    rng: &mut RandomSource,
) -> Result<CrisprLocus, ExperimentError> {
    let drawn;
    let fragments = match shared {
        Some(f) => f,
        None => {
            drawn = sample_fragments(genome, cfg.fragments, cfg.fragment_len, rng)?;
            &drawn[..]
        }
    };
    let mut locus = fresh_locus(cfg)?;
    for f in fragments {
        locus.insert_spacer(f.clone(), Origin::Naive)?;
    }
    Ok(locus)
}

fn shared_fragments(cfg: &ExperimentConfig, genome: &DnaSeq) -> Result<Option<Vec<DnaSeq>>, ExperimentError> {
    if cfg.regenerate_fragments {
        return Ok(None);
    }
    let mut rng = RandomSource::substream(cfg.seed, StreamTag::Corpus, 0);
    Ok(Some(sample_fragments(genome, cfg.fragments, cfg.fragment_len, &mut rng)?))
}

/// Naively primes a fresh locus from `genome` each iteration and scans the
/// same genome with crRNAs expressed from it.
pub fn run_priming_experiment(
    cfg: &ExperimentConfig,
    source: Source,
    genome: &DnaSeq,
) -> Result<BatchStats, ExperimentError> {
    cfg.validate()?;
    let table = cfg.pam_mode.table();
    let handles = CrrnaHandles::default();
    let options = cfg.scan_options();
    let indexed = IndexedGenome::new(genome, cfg.both_strands);
    let shared = shared_fragments(cfg, genome)?;

    let iterations = (0..cfg.iterations)
        .into_par_iter()
        .map(|it| {
            let mut rng = RandomSource::substream(cfg.seed, StreamTag::Iteration, it as u64);
            let locus = primed_locus(cfg, genome, shared.as_deref(), &mut rng)?;
            let crrnas = transcribe_locus(&locus, cfg.crrnas, &mut rng, cfg.bias, &handles)?;
            let result = scan_genome(&crrnas, &indexed, &table, &options);
            let new = result
                .primed_protospacers
                .iter()
                .filter(|p| !locus.contains_spacer(p))
                .count() as u64;
            Ok(IterationStats::new(result.tally, new))
        })
        .collect::<Result<Vec<_>, ExperimentError>>()?;
    Ok(BatchStats::aggregate("prime", source, cfg.pam_mode, None, iterations))
}

/// Mutation sweep for `cfg.pam_mode`: one cell per rate.
pub fn run_mutation_sweep(cfg: &ExperimentConfig, phage: &DnaSeq) -> Result<Vec<BatchStats>, ExperimentError> {
    run_mutation_sweep_modes(cfg, phage, &[cfg.pam_mode])
}

/// Mutation sweep over several PAM modes; cells are ordered rate-major.
///
/// Variants for a rate depend only on `(seed, rate index)` and iteration
/// streams only on `(seed, iteration)`, so the modes are compared on the same
/// mutated genomes and the same initial loci.
pub fn run_mutation_sweep_modes(
    cfg: &ExperimentConfig,
    phage: &DnaSeq,
    modes: &[PamMode],
) -> Result<Vec<BatchStats>, ExperimentError> {
    cfg.validate()?;
    let handles = CrrnaHandles::default();
    let options = cfg.scan_options();
    let shared = shared_fragments(cfg, phage)?;
    let mut cells = Vec::with_capacity(cfg.rates.len() * modes.len());

    for (ri, &rate) in cfg.rates.iter().enumerate() {
        let variants = (0..cfg.variants)
            .into_par_iter()
            .map(|v| {
                let index = ((ri as u64) << 32) | v as u64;
                let mut rng = RandomSource::substream(cfg.seed, StreamTag::Variants, index);
                Ok(IndexedGenome::new(&mutate(phage, rate, &mut rng)?, cfg.both_strands))
            })
            .collect::<Result<Vec<_>, ExperimentError>>()?;

        for &mode in modes {
            let table = mode.table();
            let iterations = (0..cfg.iterations)
                .into_par_iter()
                .map(|it| {
                    let mut rng = RandomSource::substream(cfg.seed, StreamTag::Iteration, it as u64);
                    let mut locus = primed_locus(cfg, phage, shared.as_deref(), &mut rng)?;
                    let mut tally = Tally::default();
                    let mut acquired = 0u64;
                    for (epoch, variant) in variants.iter().enumerate() {
                        locus.set_epoch(epoch as u64 + 1);
                        let crrnas = transcribe_locus(&locus, cfg.crrnas, &mut rng, cfg.bias, &handles)?;
                        let result = scan_genome(&crrnas, variant, &table, &options);
                        tally.merge(&result.tally);
                        for proto in result.primed_protospacers {
                            if locus.contains_spacer(&proto) {
                                continue;
                            }
                            acquired += 1;
                            if cfg.adaptive {
                                locus.insert_spacer(proto, Origin::Primed)?;
                            }
                        }
                    }
                    Ok(IterationStats::new(tally, acquired))
                })
                .collect::<Result<Vec<_>, ExperimentError>>()?;
            cells.push(BatchStats::aggregate("sweep", Source::Phage, mode, Some(rate), iterations));
        }
    }
    Ok(cells)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StatsFormat {
    Csv,
    Json,
}

pub const CSV_HEADER: &str = "experiment,source,pam_mode,rate,seed,iterations,fragments,fragment_len,\
crrnas,variants,max_mismatches,bias,interference_ratio,primed_ratio,no_action_ratio,\
interference,primed,no_action,primed_acquisitions";

#[derive(Serialize)]
struct StatsDocument<'a> {
    seed: u64,
    config: &'a ExperimentConfig,
    cells: &'a [BatchStats],
}

pub fn emit_stats<W: Write>(
    stats: &[BatchStats],
    cfg: &ExperimentConfig,
    format: StatsFormat,
    mut sink: W,
) -> io::Result<()> {
    match format {
        StatsFormat::Csv => {
            writeln!(sink, "{CSV_HEADER}")?;
            for s in stats {
                let rate = s.rate.map(|r| r.to_string()).unwrap_or_default();
                writeln!(
                    sink,
                    "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                    s.experiment,
                    s.source.name(),
                    s.pam_mode.name(),
                    rate,
                    cfg.seed,
                    cfg.iterations,
                    cfg.fragments,
                    cfg.fragment_len,
                    cfg.crrnas,
                    cfg.variants,
                    cfg.max_mismatches,
                    cfg.bias,
                    s.interference_ratio,
                    s.primed_ratio,
                    s.no_action_ratio,
                    s.tally.interference,
                    s.tally.primed,
                    s.tally.no_action,
                    s.primed_acquisitions,
                )?;
            }
        }
        StatsFormat::Json => {
            let doc = StatsDocument {
                seed: cfg.seed,
                config: cfg,
                cells: stats,
            };
            serde_json::to_writer_pretty(&mut sink, &doc)?;
            writeln!(sink)?;
        }
    }
    sink.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cascade::PamClass;

    fn small_cfg() -> ExperimentConfig {
        ExperimentConfig {
            fragments: 200,
            crrnas: 50,
            iterations: 4,
            variants: 5,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn modified_table_sizes() {
        let t = modified_pam_table();
        assert_eq!(t.size(PamClass::Stable), 1);
        assert_eq!(t.size(PamClass::Intermediate), 46);
        assert_eq!(t.size(PamClass::Interfering), 17);
    }

    #[test]
    fn config_validation() {
        assert!(ExperimentConfig::default().validate().is_ok());
        let mut c = ExperimentConfig::default();
        c.iterations = 0;
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::default();
        c.rates = vec![0.01, 1.5];
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::default();
        c.bias = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn missing_genome_file() {
        let err = load_genome(Path::new("/nonexistent/genome.fa")).unwrap_err();
        assert!(matches!(err, ExperimentError::Genome { .. }));
    }

    #[test]
    fn priming_ratios_partition_one_and_no_priming() {
        let mut rng = RandomSource::new(3);
        let genome = synthetic_genome(20_000, &mut rng);
        let cfg = small_cfg();
        let s = run_priming_experiment(&cfg, Source::Phage, &genome).unwrap();
        assert_eq!(s.iterations.len(), 4);
        let sum = s.interference_ratio + s.primed_ratio + s.no_action_ratio;
        assert!((sum - 1.0).abs() < 1e-9);
        assert_eq!(s.primed_ratio, 0.0);
        assert_eq!(s.tally.total(), 200);
    }

    #[test]
    fn priming_is_deterministic() {
        let mut rng = RandomSource::new(4);
        let genome = synthetic_genome(10_000, &mut rng);
        let cfg = small_cfg();
        let a = run_priming_experiment(&cfg, Source::Host, &genome).unwrap();
        let b = run_priming_experiment(&cfg, Source::Host, &genome).unwrap();
        assert_eq!(a, b);
        let shared = ExperimentConfig {
            regenerate_fragments: false,
            ..cfg
        };
        let c = run_priming_experiment(&shared, Source::Host, &genome).unwrap();
        assert_eq!(c, run_priming_experiment(&shared, Source::Host, &genome).unwrap());
    }

    #[test]
    fn sweep_rate_zero_never_primes() {
        let mut rng = RandomSource::new(5);
        let phage = synthetic_genome(10_000, &mut rng);
        let cfg = ExperimentConfig {
            rates: vec![0.0],
            ..small_cfg()
        };
        let cells = run_mutation_sweep_modes(&cfg, &phage, &[PamMode::Normal, PamMode::Modified]).unwrap();
        assert_eq!(cells.len(), 2);
        for c in cells {
            assert_eq!(c.primed_acquisitions, 0);
            assert_eq!(c.tally.primed, 0);
        }
    }

    #[test]
    fn sweep_modified_primes_more() {
        let mut rng = RandomSource::new(6);
        let phage = synthetic_genome(10_000, &mut rng);
        let cfg = ExperimentConfig {
            rates: vec![0.02],
            ..small_cfg()
        };
        let cells = run_mutation_sweep_modes(&cfg, &phage, &[PamMode::Normal, PamMode::Modified]).unwrap();
        assert!(cells[1].primed_acquisitions > cells[0].primed_acquisitions);
        for c in &cells {
            let sum = c.interference_ratio + c.primed_ratio + c.no_action_ratio;
            assert!((sum - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn csv_and_json_output() {
        let mut rng = RandomSource::new(7);
        let genome = synthetic_genome(5_000, &mut rng);
        let cfg = small_cfg();
        let s = run_priming_experiment(&cfg, Source::Phage, &genome).unwrap();

        let mut csv = Vec::new();
        emit_stats(std::slice::from_ref(&s), &cfg, StatsFormat::Csv, &mut csv).unwrap();
        let csv = String::from_utf8(csv).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row.len(), CSV_HEADER.split(',').count());
        assert_eq!(row[0], "prime");
        assert_eq!(row[4], cfg.seed.to_string());

        let mut json = Vec::new();
        emit_stats(std::slice::from_ref(&s), &cfg, StatsFormat::Json, &mut json).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&json).unwrap();
        assert_eq!(v["seed"], cfg.seed);
        assert_eq!(v["cells"][0]["iterations"].as_array().unwrap().len(), 4);
        let back: Vec<BatchStats> = serde_json::from_value(v["cells"].clone()).unwrap();
        assert_eq!(back, vec![s]);
        let cfg_back: ExperimentConfig = serde_json::from_value(v["config"].clone()).unwrap();
        assert_eq!(cfg_back, cfg);
    }
}
