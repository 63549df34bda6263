//! Memoised kernel matrices, optionally persisted to disk.
//!
//! On-disk format: the magic bytes `QKM1`, then `u64` mode count, rows and cols,
//! the target radii, and each mode's entries in row-major order, all little-endian.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use sha2::{Digest, Sha256};

use super::{assemble_mode_kernels, KernelMatrix, KernelOptions, KernelVariant};
use crate::error::{Error, Result};
use crate::quadrature::RadialGrid;

const MAGIC: &[u8; 4] = b"QKM1";

#[derive(Debug, Default)]
pub struct KernelCache {
    memory: HashMap<String, Arc<Vec<KernelMatrix>>>,
    dir: Option<PathBuf>,
    hits: usize,
}

impl KernelCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Cache that also reads and writes matrix files under `dir`.
    pub fn with_dir(dir: impl Into<PathBuf>) -> Self {
        Self { dir: Some(dir.into()), ..Self::default() }
    }

    pub fn hits(&self) -> usize {
        self.hits
    }

    pub fn get(
        &mut self,
        grid: &RadialGrid,
        targets: &[f64],
        n: u32,
        l_max: usize,
        variant: KernelVariant,
        options: &KernelOptions,
    ) -> Result<Arc<Vec<KernelMatrix>>> {
        let key = cache_key(grid, targets, n, l_max, variant, options);
        if let Some(m) = self.memory.get(&key) {
            self.hits += 1;
            return Ok(m.clone());
        }
        if let Some(dir) = &self.dir {
            let path = dir.join(format!("{key}.qkm"));
            if path.exists() {
                if let Ok(m) = read_matrices(&path, n, variant) {
                    if m.len() == l_max + 1 && m[0].targets == targets && m[0].cols == grid.len() {
                        self.hits += 1;
                        let m = Arc::new(m);
                        self.memory.insert(key, m.clone());
                        return Ok(m);
                    }
                }
                log::warn!("ignoring unreadable kernel cache file {}", path.display());
            }
        }
        let mats = assemble_mode_kernels(grid, targets, n, l_max, variant, options)?;
        if let Some(dir) = &self.dir {
            std::fs::create_dir_all(dir)?;
            write_matrices(&dir.join(format!("{key}.qkm")), &mats)?;
        }
        let m = Arc::new(mats);
        self.memory.insert(key, m.clone());
        Ok(m)
    }
}

fn cache_key(
    grid: &RadialGrid,
    targets: &[f64],
    n: u32,
    l_max: usize,
    variant: KernelVariant,
    options: &KernelOptions,
) -> String {
    let mut h = Sha256::new();
    h.update(grid.fingerprint().as_bytes());
    for t in targets {
        h.update(t.to_le_bytes());
    }
    h.update(n.to_le_bytes());
    h.update((l_max as u64).to_le_bytes());
    h.update([matches!(variant, KernelVariant::Normal) as u8]);
    h.update((options.angular_order as u64).to_le_bytes());
    h.update((options.correction_order as u64).to_le_bytes());
    hex::encode(h.finalize())
}

pub fn write_matrices(path: &Path, mats: &[KernelMatrix]) -> Result<()> {
    let first = mats.first().ok_or_else(|| Error::Usage("no matrices to write".into()))?;
    let mut buf = Vec::with_capacity(28 + 8 * (first.rows + mats.len() * first.entries.len()));
    buf.extend_from_slice(MAGIC);
    for v in [mats.len(), first.rows, first.cols] {
        buf.extend_from_slice(&(v as u64).to_le_bytes());
    }
    for t in &first.targets {
        buf.extend_from_slice(&t.to_le_bytes());
    }
    for m in mats {
        for x in &m.entries {
            buf.extend_from_slice(&x.to_le_bytes());
        }
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(&buf)?;
    Ok(())
}

pub fn read_matrices(path: &Path, n: u32, variant: KernelVariant) -> Result<Vec<KernelMatrix>> {
    let mut buf = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut buf)?;
    let bad = || Error::Io(format!("{} is not a kernel matrix file", path.display()));
    if buf.len() < 28 || &buf[..4] != MAGIC {
        return Err(bad());
    }
    let word = |i: usize| u64::from_le_bytes(buf[4 + 8 * i..12 + 8 * i].try_into().unwrap()) as usize;
    let (modes, rows, cols) = (word(0), word(1), word(2));
    let floats = rows
        .checked_mul(cols)
        .and_then(|e| e.checked_mul(modes))
        .and_then(|e| e.checked_add(rows))
        .ok_or_else(bad)?;
    if buf.len() != 28 + 8 * floats {
        return Err(bad());
    }
    let vals: Vec<f64> = buf[28..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let targets = vals[..rows].to_vec();
    Ok((0..modes)
        .map(|l| {
            let start = rows + l * rows * cols;
            KernelMatrix {
                rows,
                cols,
                entries: vals[start..start + rows * cols].to_vec(),
                targets: targets.clone(),
                n,
                variant,
                mode: l,
            }
        })
        .collect())
}
