//! Atomic file output. Every file gets a `<name>.meta.json` sidecar holding the
//! resolved configuration it was produced from.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::Config;

pub struct Sink {
    dir: PathBuf,
    command: &'static str,
    config: Value,
    pub written: Vec<PathBuf>,
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = path.with_file_name(format!(".{name}.{}.tmp", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.with_context(|| format!("writing {}", path.display()))
}

impl Sink {
    pub fn new(dir: &Path, command: &'static str, config: &Config) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self { dir: dir.to_path_buf(), command, config: serde_json::to_value(config)?, written: Vec::new() })
    }

    fn emit(&mut self, name: &str, bytes: &[u8], extra: Value) -> Result<()> {
        let path = self.dir.join(name);
        write_atomic(&path, bytes)?;
        let meta = json!({
            "file": name,
            "command": self.command,
            "version": env!("CARGO_PKG_VERSION"),
            "config": self.config,
            "details": extra,
        });
        let sidecar = self.dir.join(format!("{name}.meta.json"));
        write_atomic(&sidecar, serde_json::to_string_pretty(&meta)?.as_bytes())?;
        self.written.push(path);
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.emit(name, text.as_bytes(), Value::Null)
    }

    /// RFC 4180 CSV; `header` may be empty for bare matrices.
    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<f64>], extra: Value) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        if !header.is_empty() {
            w.write_record(header)?;
        }
        for r in rows {
            w.write_record(r.iter().map(|v| format!("{v:e}")))?;
        }
        let bytes = w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?;
        self.emit(name, &bytes, extra)
    }
}

/// Reads x,re,im samples (with a header row).
pub fn read_samples(path: &Path) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let headers = r.headers()?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h == name).with_context(|| format!("{}: no `{name}` column", path.display()))
    };
    let (ix, ire, iim) = (col("x")?, col("re")?, col("im")?);
    let (mut x, mut re, mut im) = (Vec::new(), Vec::new(), Vec::new());
    for rec in r.records() {
        let rec = rec?;
        let get = |i: usize| -> Result<f64> { Ok(rec.get(i).unwrap_or("").trim().parse()?) };
        x.push(get(ix)?);
        re.push(get(ire)?);
        im.push(get(iim)?);
    }
    Ok((x, re, im))
}
