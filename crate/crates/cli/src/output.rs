use std::fs;
use std::path::{Path, PathBuf};

use kdv_actions::format::{write_potential, KeyValues, Table};
use kdv_actions::TrigPotential;
use serde::Serialize;

pub const VERSION: &str = concat!("kdv-actions ", env!("CARGO_PKG_VERSION"));

/// Writes result files under one directory, each starting with the same provenance header.
/// Only the first line of every file, the timestamp, differs between reruns.
pub struct Writer {
    dir: PathBuf,
    timestamp: String,
    command: String,
    config: KeyValues,
    written: Vec<PathBuf>,
}

impl Writer {
    pub fn new(dir: &Path, command: &str, config: &KeyValues) -> std::io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Writer {
            dir: dir.to_path_buf(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            command: command.to_string(),
            config: config.clone(),
            written: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    fn header(&self) -> Vec<String> {
        let mut h = vec![
            format!("created {}", self.timestamp),
            format!("version {VERSION}"),
            format!("command {}", self.command),
            "config:".to_string(),
        ];
        h.extend(self.config.render().lines().map(|l| format!("  {l}")));
        h
    }

    fn put(&mut self, name: &str, text: String) -> std::io::Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, text)?;
        self.written.push(path);
        Ok(())
    }

    pub fn table(&mut self, name: &str, mut table: Table, meta: &[String]) -> std::io::Result<()> {
        let mut all = self.header();
        all.extend(meta.iter().cloned());
        table.meta = all;
        self.put(name, table.render())
    }

    pub fn potential(&mut self, name: &str, psi: &TrigPotential) -> std::io::Result<()> {
        let text = write_potential(psi, &self.header());
        self.put(name, text)
    }

    /// `key = value` summary below `#` header lines.
    pub fn summary(&mut self, name: &str, kv: &KeyValues) -> std::io::Result<()> {
        let mut text: String = self.header().iter().map(|l| format!("# {l}\n")).collect();
        text.push_str(&kv.render());
        self.put(name, text)
    }

    /// JSON lines: a timestamp record, a provenance record, then one record per item.
    pub fn jsonl<T: Serialize>(&mut self, name: &str, items: &[T]) -> std::io::Result<()> {
        let mut text = serde_json::json!({ "created": self.timestamp }).to_string();
        text.push('\n');
        let prov = serde_json::json!({
            "version": VERSION,
            "command": self.command,
            "config": self.config.entries,
        });
        text.push_str(&prov.to_string());
        text.push('\n');
        for it in items {
            text.push_str(&serde_json::to_string(it).map_err(std::io::Error::other)?);
            text.push('\n');
        }
        self.put(name, text)
    }

    pub fn text(&mut self, name: &str, body: &str) -> std::io::Result<()> {
        let mut text: String = self.header().iter().map(|l| format!("# {l}\n")).collect();
        text.push_str(body);
        self.put(name, text)
    }
}

/// `{:e}` formatting, exact on reparse.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}
