use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use vodcache::io::Header;
use vodcache::Result;

/// Uses `seed` or draws a fresh one, printing it either way.
pub fn resolve_seed(seed: Option<u64>) -> u64 {
    let seed = seed.unwrap_or_else(rand::random);
    println!("seed={seed}");
    seed
}

pub fn create(path: &Path) -> Result<Box<dyn Write>> {
    if path == Path::new("-") {
        return Ok(Box::new(BufWriter::new(io::stdout().lock())));
    }
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(Box::new(BufWriter::new(File::create(path)?)))
}

/// Writes a file through `body` and flushes it.
pub fn write_file(path: &Path, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let mut w = create(path)?;
    body(&mut w)?;
    w.flush()?;
    if path != Path::new("-") {
        println!("wrote {}", path.display());
    }
    Ok(())
}

pub fn system_header(kind: &str, params: &vodcache::experiment::SystemParams, seed: u64) -> Header {
    Header::new(kind)
        .with("caches", params.caches)
        .with("peers", params.peers)
        .with("degree", params.degree)
        .with("videos", params.videos)
        .with("zipf", params.zipf_exponent)
        .with("budget", params.budget)
        .with("seed", seed)
}
