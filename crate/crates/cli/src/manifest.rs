use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use sha2::{Digest, Sha256};

use crate::config::PipelineConfig;

pub const MANIFEST: &str = "manifest.txt";

fn walk(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    for entry in fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))? {
        let path = entry?.path();
        if path.is_dir() {
            walk(&path, out)?;
        } else {
            out.push(path);
        }
    }
    Ok(())
}

/// Config lines, then `file<TAB>path<TAB>sha256` for every output file in sorted
/// order. No timestamps, so identical runs give identical manifests.
pub fn render(cfg: &PipelineConfig, stage: &str) -> Result<String> {
    let mut files = Vec::new();
    if cfg.out_dir.exists() {
        walk(&cfg.out_dir, &mut files)?;
    }
    let mut rel: Vec<(String, PathBuf)> = files
        .into_iter()
        .filter_map(|p| {
            let r = p.strip_prefix(&cfg.out_dir).ok()?.to_string_lossy().replace('\\', "/");
            (r != MANIFEST).then_some((r, p))
        })
        .collect();
    rel.sort();
    let mut s = format!("stage={stage}\n");
    for (k, v) in cfg.to_kv() {
        s.push_str(&format!("{k}={v}\n"));
    }
    for (name, path) in rel {
        let bytes = fs::read(&path).with_context(|| format!("hashing {}", path.display()))?;
        s.push_str(&format!("file\t{name}\t{}\n", hex::encode(Sha256::digest(&bytes))));
    }
    Ok(s)
}

pub fn write(cfg: &PipelineConfig, stage: &str) -> Result<()> {
    let text = render(cfg, stage)?;
    fs::create_dir_all(&cfg.out_dir)?;
    fs::write(cfg.out_dir.join(MANIFEST), text).context("writing manifest")
}
