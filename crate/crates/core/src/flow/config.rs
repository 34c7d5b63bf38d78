use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Which motion operator to assemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Within-region smoothing, interface normals matched exactly.
    Hard,
    /// Within-region smoothing, normal mismatch penalized with weight β.
    Soft,
    /// Classical Horn–Schunck over the whole grid with `alpha_in`.
    Global,
    /// Independent per-region solves, Neumann at the interface.
    RegionOnly,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Hard, Mode::Soft, Mode::Global, Mode::RegionOnly];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Hard => "hard",
            Mode::Soft => "soft",
            Mode::Global => "global",
            Mode::RegionOnly => "region-only",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hard" => Ok(Mode::Hard),
            "soft" => Ok(Mode::Soft),
            "global" => Ok(Mode::Global),
            "region-only" | "region_only" => Ok(Mode::RegionOnly),
            other => Err(Error::InvalidConfig(format!(
                "unknown mode `{other}` (expected hard, soft, global or region-only)"
            ))),
        }
    }
}

pub const DEFAULT_CG_REL_TOL: f64 = 1e-8;
const CG_ITER_CAP: usize = 2000;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Smoothness weight inside structures (labels ≥ 1).
    pub alpha_in: f64,
    /// Smoothness weight of the background (label 0).
    pub alpha_out: f64,
    /// Interface penalty weight, soft mode only.
    pub beta: f64,
    pub mode: Mode,
    pub cg_rel_tol: f64,
    /// `None` picks `10·√unknowns`, capped at 2000.
    pub cg_max_iter: Option<usize>,
    /// Per-label weights overriding `alpha_in`/`alpha_out`; index = label.
    pub label_alphas: Vec<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            alpha_in: 3.0,
            alpha_out: 3.0,
            beta: 100.0,
            mode: Mode::Hard,
            cg_rel_tol: DEFAULT_CG_REL_TOL,
            cg_max_iter: None,
            label_alphas: Vec::new(),
        }
    }
}

impl SolverConfig {
    pub fn new(mode: Mode, alpha_in: f64, alpha_out: f64, beta: f64) -> Result<Self> {
        let cfg = SolverConfig {
            alpha_in,
            alpha_out,
            beta,
            mode,
            ..SolverConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_alphas(mut self, alpha_in: f64, alpha_out: f64) -> Self {
        self.alpha_in = alpha_in;
        self.alpha_out = alpha_out;
        self
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn with_cg(mut self, rel_tol: f64, max_iter: Option<usize>) -> Self {
        self.cg_rel_tol = rel_tol;
        self.cg_max_iter = max_iter;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!(
                    "{name} must be positive, got {v}"
                )))
            }
        };
        positive("alpha_in", self.alpha_in)?;
        positive("alpha_out", self.alpha_out)?;
        positive("cg_rel_tol", self.cg_rel_tol)?;
        for (label, &a) in self.label_alphas.iter().enumerate() {
            positive(&format!("alpha for label {label}"), a)?;
        }
        if self.cg_max_iter == Some(0) {
            return Err(Error::InvalidConfig(
                "cg_max_iter must be at least 1".into(),
            ));
        }
        if self.mode == Mode::Soft {
            positive("beta", self.beta)?;
            let b2 = self.beta * self.beta;
            if (b2 - self.alpha_in * self.alpha_out).abs() <= 1e-9 * b2.max(1.0) {
                return Err(Error::InvalidConfig(format!(
                    "beta^2 = {b2} coincides with alpha_in*alpha_out"
                )));
            }
        }
        Ok(())
    }

    /// Smoothness weight for pixels carrying `label`.
    pub fn alpha_for(&self, label: u8) -> f64 {
        if self.mode == Mode::Global {
            return self.alpha_in;
        }
        match self.label_alphas.get(label as usize) {
            Some(&a) => a,
            None if label == 0 => self.alpha_out,
            None => self.alpha_in,
        }
    }

    pub fn max_iter_for(&self, unknowns: usize) -> usize {
        self.cg_max_iter.unwrap_or_else(|| {
            ((10.0 * (unknowns as f64).sqrt()).ceil() as usize).clamp(1, CG_ITER_CAP)
        })
    }
}
