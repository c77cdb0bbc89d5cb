//! Regenerate the shipped synthetic fixture corpus.
//!
//! Usage: cargo run --example gen_fixture [-- <output path>]

use std::path::PathBuf;

use kpaug::synth::{raw_jsonl, SynthConfig};

fn main() -> std::io::Result<()> {
    let out = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| {
            PathBuf::from(concat!(
                env!("CARGO_MANIFEST_DIR"),
                "/fixtures/synthetic.jsonl"
            ))
        });
    std::fs::write(&out, raw_jsonl(&SynthConfig::fixture()))?;
    eprintln!("wrote {}", out.display());
    Ok(())
}
