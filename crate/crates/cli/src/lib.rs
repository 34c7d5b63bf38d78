//! Library side of the `pcflow` binary, so the integration tests can drive
//! the same code paths.

pub mod commands;
pub mod error;
pub mod manifest;
pub mod settings;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

pub use error::{CliError, Result};
use manifest::RunManifest;
use settings::{Settings, Source};

#[derive(Debug, Parser)]
#[command(name = "pcflow", version, about = "Piecewise-continuous optical flow and region tracking")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the synthetic contracting-disc sequence with ground truth.
    Synth {
        #[command(flatten)]
        common: Common,
    },
    /// Solve for the velocity between two frames.
    Flow {
        #[arg(default_value = "synth/frame_0000.pgm")]
        frame0: PathBuf,
        #[arg(default_value = "synth/frame_0001.pgm")]
        frame1: PathBuf,
        #[arg(default_value = "synth/gt_mask_0000.pgm")]
        mask: PathBuf,
        /// Ground-truth forward flow (FGRID) for an endpoint-error report.
        #[arg(long)]
        gt: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Track the initial mask through a frame sequence.
    Track {
        /// Glob matching the frames; matches are taken in sorted order.
        #[arg(value_name = "FRAMES", default_value = "synth/frame_*.pgm")]
        pattern: String,
        #[arg(default_value = "synth/gt_mask_0000.pgm")]
        mask: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Score a tracking result directory against ground truth.
    Eval {
        #[arg(default_value = "track")]
        result: PathBuf,
        #[arg(default_value = "synth")]
        gt: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Default, Args)]
pub struct Common {
    /// Output directory (defaults to the subcommand name).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// `key = value` config file; flags override it. A run manifest works too.
    #[arg(long)]
    pub config: Option<PathBuf>,

    #[arg(long, help_heading = "Solver")]
    pub alpha_in: Option<String>,
    #[arg(long, help_heading = "Solver")]
    pub alpha_out: Option<String>,
    #[arg(long, help_heading = "Solver")]
    pub beta: Option<String>,
    /// hard, soft, region-only or global.
    #[arg(long, help_heading = "Solver")]
    pub mode: Option<String>,
    /// Relative CG tolerance, or `auto`.
    #[arg(long, help_heading = "Solver")]
    pub cg_tol: Option<String>,
    #[arg(long, help_heading = "Solver")]
    pub cg_max_iter: Option<String>,

    #[arg(long, help_heading = "Tracking")]
    pub dt: Option<String>,
    #[arg(long, help_heading = "Tracking")]
    pub max_iters: Option<String>,
    #[arg(long, help_heading = "Tracking")]
    pub converge_tol: Option<String>,
    /// Let regions split or merge.
    #[arg(long, help_heading = "Tracking")]
    pub no_topology: bool,
    #[arg(long, help_heading = "Tracking")]
    pub reinit_every: Option<String>,

    #[arg(long, help_heading = "Synthetic sequence")]
    pub seed: Option<String>,
    #[arg(long, help_heading = "Synthetic sequence")]
    pub width: Option<String>,
    #[arg(long, help_heading = "Synthetic sequence")]
    pub height: Option<String>,
    #[arg(long, help_heading = "Synthetic sequence")]
    pub center_x: Option<String>,
    #[arg(long, help_heading = "Synthetic sequence")]
    pub center_y: Option<String>,
    #[arg(long, help_heading = "Synthetic sequence")]
    pub radius: Option<String>,
    #[arg(long, help_heading = "Synthetic sequence")]
    pub contraction: Option<String>,
    #[arg(long, help_heading = "Synthetic sequence", allow_hyphen_values = true)]
    pub rotation_in: Option<String>,
    #[arg(long, help_heading = "Synthetic sequence", allow_hyphen_values = true)]
    pub rotation_out: Option<String>,
    #[arg(long, help_heading = "Synthetic sequence")]
    pub frames: Option<String>,
    #[arg(long, help_heading = "Synthetic sequence")]
    pub smoothing: Option<String>,
    #[arg(long, help_heading = "Synthetic sequence")]
    pub texture_passes: Option<String>,

    /// Flow magnitude mapped to full saturation, or `auto`.
    #[arg(long, help_heading = "Output")]
    pub flow_color_max: Option<String>,
}

impl Common {
    fn flags(&self) -> Vec<(&'static str, &str)> {
        let pairs: [(&'static str, &Option<String>); 23] = [
            ("alpha_in", &self.alpha_in),
            ("alpha_out", &self.alpha_out),
            ("beta", &self.beta),
            ("mode", &self.mode),
            ("cg_tol", &self.cg_tol),
            ("cg_max_iter", &self.cg_max_iter),
            ("dt", &self.dt),
            ("max_iters", &self.max_iters),
            ("converge_tol", &self.converge_tol),
            ("reinit_every", &self.reinit_every),
            ("seed", &self.seed),
            ("width", &self.width),
            ("height", &self.height),
            ("center_x", &self.center_x),
            ("center_y", &self.center_y),
            ("radius", &self.radius),
            ("contraction", &self.contraction),
            ("rotation_in", &self.rotation_in),
            ("rotation_out", &self.rotation_out),
            ("frames", &self.frames),
            ("smoothing", &self.smoothing),
            ("texture_passes", &self.texture_passes),
            ("flow_color_max", &self.flow_color_max),
        ];
        let mut out: Vec<_> = pairs
            .into_iter()
            .filter_map(|(k, v)| v.as_deref().map(|v| (k, v)))
            .collect();
        if self.no_topology {
            out.push(("topology", "false"));
        }
        out
    }

    pub fn settings(&self) -> Result<Settings> {
        let mut s = Settings::default();
        if let Some(path) = &self.config {
            s.apply_file(path)?;
        }
        for (k, v) in self.flags() {
            s.set(k, v, Source::Flag)?;
        }
        Ok(s)
    }
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Synth { .. } => "synth",
            Command::Flow { .. } => "flow",
            Command::Track { .. } => "track",
            Command::Eval { .. } => "eval",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::Synth { common }
            | Command::Flow { common, .. }
            | Command::Track { common, .. }
            | Command::Eval { common, .. } => common,
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        self.common()
            .out
            .clone()
            .unwrap_or_else(|| PathBuf::from(self.name()))
    }
}

fn dispatch(cmd: &Command, settings: &Settings, out: &Path, manifest: &mut RunManifest) -> Result<()> {
    match cmd {
        Command::Synth { .. } => commands::synth(settings, out, manifest),
        Command::Flow {
            frame0,
            frame1,
            mask,
            gt,
            ..
        } => commands::flow(settings, [frame0, frame1, mask], gt.as_deref(), out, manifest),
        Command::Track { pattern, mask, .. } => commands::track(settings, pattern, mask, out, manifest),
        Command::Eval { result, gt, .. } => {
            let table = commands::eval(result, gt, out, manifest)?;
            print!("{table}");
            Ok(())
        }
    }
}

/// Runs one subcommand and writes its manifest, also when the run fails
/// after the output directory exists.
pub fn run(cli: &Cli) -> Result<()> {
    let cmd = &cli.command;
    let settings = cmd.common().settings()?;
    let out = cmd.out_dir();
    let mut manifest = RunManifest::new(cmd.name(), &settings);
    let start = Instant::now();
    let result = dispatch(cmd, &settings, &out, &mut manifest);
    manifest.wall_time_s = start.elapsed().as_secs_f64();
    if let Err(e) = &result {
        if manifest.status == "ok" {
            manifest.status = format!("error: {e}");
        }
    }
    if out.is_dir() {
        manifest.write(&out)?;
    }
    result
}

#[cfg(test)]
mod tests {
    use clap::CommandFactory;

    use super::*;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn flags_override_defaults() {
        let cli = Cli::try_parse_from(["pcflow", "track", "--no-topology", "--rotation-in", "-2", "--out", "x"]).unwrap();
        let s = cli.command.common().settings().unwrap();
        assert_eq!(s.raw("topology"), "false");
        assert_eq!(s.raw("rotation_in"), "-2");
        assert_eq!(s.source("rotation_in"), Source::Flag);
        assert_eq!(s.source("beta"), Source::Default);
        assert_eq!(cli.command.out_dir(), PathBuf::from("x"));
    }
}
