//! Resolved run configuration: built-in defaults, then a `key = value`
//! file, then command-line flags, each value remembering where it came from.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use pcflow::flow::{Mode, DEFAULT_CG_REL_TOL};
use pcflow::synth::SynthSpec;
use pcflow::tracker::{TrackConfig, TRACK_CG_REL_TOL};
use pcflow::{SolverConfig, Vec2};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Default,
    File,
    Flag,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Default => "default",
            Source::File => "file",
            Source::Flag => "flag",
        })
    }
}

impl FromStr for Source {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "default" => Ok(Source::Default),
            "file" => Ok(Source::File),
            "flag" => Ok(Source::Flag),
            _ => Err(format!("unknown source `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Kind {
    Positive,
    Real,
    Count,
    Seed,
    Flag,
    Mode,
    /// `auto` or a positive count.
    AutoCount,
    /// `auto` or a positive real.
    AutoPositive,
}

/// Every configurable key, its default and its type.
const KEYS: &[(&str, &str, Kind)] = &[
    ("alpha_in", "3", Kind::Positive),
    ("alpha_out", "3", Kind::Positive),
    ("beta", "100", Kind::Positive),
    ("mode", "hard", Kind::Mode),
    ("cg_tol", "auto", Kind::AutoPositive),
    ("cg_max_iter", "auto", Kind::AutoCount),
    ("dt", "0.5", Kind::Positive),
    ("max_iters", "200", Kind::Count),
    ("converge_tol", "0.5", Kind::Positive),
    ("topology", "true", Kind::Flag),
    ("reinit_every", "10", Kind::Count),
    ("seed", "1", Kind::Seed),
    ("width", "128", Kind::Count),
    ("height", "128", Kind::Count),
    ("center_x", "64", Kind::Real),
    ("center_y", "64", Kind::Real),
    ("radius", "30", Kind::Positive),
    ("contraction", "0.97", Kind::Positive),
    ("rotation_in", "3", Kind::Real),
    ("rotation_out", "-3", Kind::Real),
    ("frames", "10", Kind::Count),
    ("smoothing", "2", Kind::Real),
    ("texture_passes", "3", Kind::Count),
    ("flow_color_max", "auto", Kind::AutoPositive),
];

fn check(key: &str, kind: Kind, value: &str) -> std::result::Result<(), String> {
    let real = || value.parse::<f64>().ok().filter(|v| v.is_finite());
    let ok = match kind {
        Kind::Positive => real().is_some_and(|v| v > 0.0),
        Kind::Real => real().is_some(),
        Kind::Count => value.parse::<usize>().is_ok(),
        Kind::Seed => value.parse::<u64>().is_ok(),
        Kind::Flag => value.parse::<bool>().is_ok(),
        Kind::Mode => value.parse::<Mode>().is_ok(),
        Kind::AutoCount => value == "auto" || value.parse::<usize>().is_ok_and(|v| v > 0),
        Kind::AutoPositive => value == "auto" || real().is_some_and(|v| v > 0.0),
    };
    if ok {
        Ok(())
    } else {
        Err(format!("invalid value `{value}` for `{key}` ({kind:?})"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, (String, Source)>,
}

impl Default for Settings {
    fn default() -> Self {
        let values = KEYS
            .iter()
            .map(|(k, v, _)| (k.to_string(), (v.to_string(), Source::Default)))
            .collect();
        Settings { values }
    }
}

impl Settings {
    pub fn keys() -> impl Iterator<Item = &'static str> {
        KEYS.iter().map(|(k, _, _)| *k)
    }

    pub fn set(&mut self, key: &str, value: &str, source: Source) -> Result<()> {
        let &(_, _, kind) = KEYS
            .iter()
            .find(|(k, _, _)| *k == key)
            .ok_or_else(|| CliError::Usage(format!("unknown configuration key `{key}`")))?;
        check(key, kind, value).map_err(CliError::Usage)?;
        self.values.insert(key.to_string(), (value.to_string(), source));
        Ok(())
    }

    /// Applies a config file. Lines are `key = value`; `#` starts a comment.
    /// Keys may carry a `config.` prefix, and other manifest lines are
    /// skipped, so a run manifest can be fed back as a config file.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::input(path, e.to_string()))?;
        for (n, line) in text.lines().enumerate() {
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body
                .split_once('=')
                .ok_or_else(|| CliError::input(path, format!("line {}: expected `key = value`", n + 1)))?;
            let key = key.trim();
            let value = value.trim();
            if crate::manifest::RESERVED.contains(&key) {
                continue;
            }
            let key = key.strip_prefix("config.").unwrap_or(key);
            self.set(key, value, Source::File)
                .map_err(|e| CliError::input(path, format!("line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &str, Source)> {
        Self::keys().map(|k| {
            let (v, s) = &self.values[k];
            (k, v.as_str(), *s)
        })
    }

    pub fn raw(&self, key: &str) -> &str {
        &self.values[key].0
    }

    pub fn source(&self, key: &str) -> Source {
        self.values[key].1
    }

    fn get<T: FromStr>(&self, key: &str) -> T {
        self.raw(key)
            .parse()
            .unwrap_or_else(|_| panic!("`{key}` was validated on insertion"))
    }

    fn auto<T: FromStr>(&self, key: &str) -> Option<T> {
        match self.raw(key) {
            "auto" => None,
            _ => Some(self.get(key)),
        }
    }

    /// Solver settings for a single flow solve; `cg_tol = auto` is the
    /// standalone default.
    pub fn solver(&self) -> Result<SolverConfig> {
        self.solver_with_tol(DEFAULT_CG_REL_TOL)
    }

    fn solver_with_tol(&self, auto_tol: f64) -> Result<SolverConfig> {
        let tol = self.auto("cg_tol").unwrap_or(auto_tol);
        let cfg = SolverConfig::new(self.get("mode"), self.get("alpha_in"), self.get("alpha_out"), self.get("beta"))?
            .with_cg(tol, self.auto("cg_max_iter"));
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn track(&self) -> Result<TrackConfig> {
        let cfg = TrackConfig {
            solver: self.solver_with_tol(TRACK_CG_REL_TOL)?,
            dt: self.get("dt"),
            max_inner_iters: self.get("max_iters"),
            converge_tol: self.get("converge_tol"),
            topology_preserve: self.get("topology"),
            reinit_every: self.get("reinit_every"),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn synth(&self) -> Result<SynthSpec> {
        let spec = SynthSpec {
            width: self.get("width"),
            height: self.get("height"),
            disc_center: Vec2::new(self.get("center_x"), self.get("center_y")),
            disc_radius: self.get("radius"),
            contraction_per_frame: self.get("contraction"),
            rotation_inside_deg: self.get("rotation_in"),
            rotation_outside_deg: self.get("rotation_out"),
            frames: self.get("frames"),
            texture_seed: self.get("seed"),
            texture_smoothing: self.get("smoothing"),
            texture_passes: self.get("texture_passes"),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn flow_color_max(&self) -> Option<f64> {
        self.auto("flow_color_max")
    }
}
