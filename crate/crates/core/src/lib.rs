//! CRISPR-Cas information-flow simulation and a CRISPR-inspired bitstream
//! Trojan detector built on the same approximate matching core.
//!
//! The biological side ([`seq`], [`locus`], [`cascade`], [`experiments`])
//! models Type I-E adaptation, expression and PAM-gated interference. The
//! hardware side ([`bitfmt`], [`cadeft`]) treats configuration packets as
//! spacers and their register addresses as PAM analogs, scanning a persistent
//! signature locus against bitstream payloads and learning near-matches.

pub mod bitfmt;
pub mod cadeft;
pub mod cascade;
pub mod experiments;
pub mod locus;
pub mod matcher;
pub mod rng;
pub mod seq;

pub use rng::RandomSource;
