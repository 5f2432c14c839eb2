//! Writes the synthetic corpus, its keyed scripts and a batch manifest to a
//! directory so the CLI can be driven against it.

use scenaug::corpus::{synthetic_corpus, write_corpus, BATCH_MANIFEST};
use std::path::PathBuf;

fn main() -> std::io::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("scenaug-corpus"));
    let corpus = synthetic_corpus();
    write_corpus(&dir, &corpus)?;
    println!("{} scenes written; run: scenaug batch --manifest {}", corpus.len(), dir.join(BATCH_MANIFEST).display());
    Ok(())
}
