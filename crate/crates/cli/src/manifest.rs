//! Run manifest: what was run, with which resolved configuration, on which
//! inputs, producing which outputs. Written as `key = value` lines so it can
//! be read back, including as a config file.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};
use crate::settings::{Settings, Source};

/// Manifest keys that are not configuration values.
pub const RESERVED: &[&str] = &["subcommand", "input", "output", "wall_time_s", "status"];

pub const FILE_NAME: &str = "manifest.txt";

#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub subcommand: String,
    pub config: Vec<(String, String, Source)>,
    /// `(path, sha256 hex)` per input file.
    pub inputs: Vec<(PathBuf, String)>,
    pub outputs: Vec<PathBuf>,
    pub wall_time_s: f64,
    /// `ok`, or a description of the failure.
    pub status: String,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| CliError::input(path, e.to_string()))?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    }))
}

impl RunManifest {
    pub fn new(subcommand: &str, settings: &Settings) -> Self {
        RunManifest {
            subcommand: subcommand.to_string(),
            config: settings
                .entries()
                .map(|(k, v, s)| (k.to_string(), v.to_string(), s))
                .collect(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            wall_time_s: 0.0,
            status: "ok".into(),
        }
    }

    pub fn add_input(&mut self, path: &Path) -> Result<()> {
        let digest = sha256_file(path)?;
        self.inputs.push((path.to_path_buf(), digest));
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# pcflow run manifest\n");
        let _ = writeln!(out, "subcommand = {}", self.subcommand);
        for (k, v, s) in &self.config {
            let _ = writeln!(out, "config.{k} = {v} # {s}");
        }
        for (p, d) in &self.inputs {
            let _ = writeln!(out, "input = {d} {}", p.display());
        }
        for p in &self.outputs {
            let _ = writeln!(out, "output = {}", p.display());
        }
        let _ = writeln!(out, "wall_time_s = {}", self.wall_time_s);
        let _ = writeln!(out, "status = {}", self.status.replace('\n', " "));
        out
    }

    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        let mut m = RunManifest {
            subcommand: String::new(),
            config: Vec::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            wall_time_s: 0.0,
            status: String::new(),
        };
        for (n, line) in text.lines().enumerate() {
            if line.trim_start().starts_with('#') || line.trim().is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once(" = ")
                .ok_or_else(|| format!("line {}: expected `key = value`", n + 1))?;
            let key = key.trim();
            match key {
                "subcommand" => m.subcommand = value.to_string(),
                "input" => {
                    let (d, p) = value
                        .split_once(' ')
                        .ok_or_else(|| format!("line {}: expected `digest path`", n + 1))?;
                    m.inputs.push((PathBuf::from(p), d.to_string()));
                }
                "output" => m.outputs.push(PathBuf::from(value)),
                "wall_time_s" => {
                    m.wall_time_s = value
                        .parse()
                        .map_err(|_| format!("line {}: bad wall time", n + 1))?
                }
                "status" => m.status = value.to_string(),
                _ => {
                    let k = key
                        .strip_prefix("config.")
                        .ok_or_else(|| format!("line {}: unknown key `{key}`", n + 1))?;
                    let (v, s) = value
                        .rsplit_once(" # ")
                        .ok_or_else(|| format!("line {}: missing source", n + 1))?;
                    m.config.push((k.to_string(), v.to_string(), s.parse()?));
                }
            }
        }
        Ok(m)
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(FILE_NAME);
        std::fs::write(&path, self.to_text()).map_err(|e| CliError::input(&path, e.to_string()))?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let mut s = Settings::default();
        s.set("alpha_in", "12.5", Source::Flag).unwrap();
        let mut m = RunManifest::new("flow", &s);
        m.inputs.push((PathBuf::from("a dir/frame 0.pgm"), "ab".repeat(32)));
        m.outputs.push(PathBuf::from("out/flow.fgrid"));
        m.wall_time_s = 0.125;
        m.status = "failed at frame 3: structure 1 vanished".into();
        let back = RunManifest::parse(&m.to_text()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.config.len(), Settings::keys().count());
    }

    #[test]
    fn manifest_reads_back_as_config() {
        let mut s = Settings::default();
        s.set("mode", "global", Source::Flag).unwrap();
        s.set("beta", "7", Source::File).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = RunManifest::new("track", &s).write(dir.path()).unwrap();
        let mut replay = Settings::default();
        replay.apply_file(&path).unwrap();
        for ((k, a, _), (_, b, _)) in s.entries().zip(replay.entries()) {
            assert_eq!(a, b, "{k}");
        }
    }

    #[test]
    fn digest_of_known_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("abc");
        std::fs::write(&p, b"abc").unwrap();
        assert_eq!(
            sha256_file(&p).unwrap(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
