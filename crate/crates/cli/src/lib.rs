//! Command-line front end: simulate, build, eval, bench.

pub mod args;
pub mod commands;
mod exit;

pub use exit::exit_code;

pub use exit::Exit;

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use anyhow::Context;

pub(crate) fn open(path: &Path) -> anyhow::Result<BufReader<File>> {
    let f = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(BufReader::new(f))
}
