//! Command-line options, the JSON config file that mirrors them, and the
//! resolved run configuration.

use std::f64::consts::FRAC_PI_4;
use std::path::{Path, PathBuf};

use bclab_core::factory::{ReferenceKind, MAX_DIM};
use bclab_core::profile::{Family, ProfileState, DEFAULT_SAMPLES};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::output::{sha256_hex, to_json};

#[derive(Debug, Parser)]
#[command(name = "bclab", version, about = "Biconservative hypersurface construction and verification")]
pub struct Cli {
    /// JSON file with the same keys as the long flags; flags win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Generate,
    Verify,
    Classify,
    ScanLambda,
    Report,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate a profile and write its CSV, a manifest and optionally an OBJ mesh.
    Generate(Options),
    /// Run the verification suites and write JSON and CSV reports.
    Verify(Options),
    /// Classify principal-curvature spectra over the grid.
    Classify(Options),
    /// Scan `lambda = s1^2 - 2 s2 + (Delta s1)/s1` for constancy.
    ScanLambda(Options),
    /// Write curvature plot data and optionally a mesh.
    Report(Options),
}

impl Command {
    pub fn split(self) -> (CommandKind, Options) {
        match self {
            Command::Generate(o) => (CommandKind::Generate, o),
            Command::Verify(o) => (CommandKind::Verify, o),
            Command::Classify(o) => (CommandKind::Classify, o),
            Command::ScanLambda(o) => (CommandKind::ScanLambda, o),
            Command::Report(o) => (CommandKind::Report, o),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyArg {
    Rotational,
    Cylinder,
    Sphere,
    RoundCylinder,
    Plane,
    Ellipsoid,
    Torus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Suite {
    HCondition,
    Codazzi,
    StructuralIdentity,
    SliceSphericity,
    UnitSpeed,
}

impl Suite {
    pub const ALL: [Suite; 5] =
        [Suite::HCondition, Suite::Codazzi, Suite::StructuralIdentity, Suite::SliceSphericity, Suite::UnitSpeed];

    pub fn name(self) -> &'static str {
        match self {
            Suite::HCondition => "h_condition",
            Suite::Codazzi => "codazzi",
            Suite::StructuralIdentity => "structural_identity",
            Suite::SliceSphericity => "slice_sphericity",
            Suite::UnitSpeed => "unit_speed",
        }
    }
}

/// Every flag is optional so that a config file can supply it.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct Options {
    #[arg(long, value_enum)]
    pub family: Option<FamilyArg>,
    /// Dimension of the first (spherical) block.
    #[arg(long)]
    pub p: Option<usize>,
    /// Dimension of the second block.
    #[arg(long)]
    pub q: Option<usize>,
    /// Sphere or plane dimension.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub psi0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub phi0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub theta0: Option<f64>,
    #[arg(long)]
    pub s_max: Option<f64>,
    #[arg(long)]
    pub local_tol: Option<f64>,
    /// Profile samples (at least 200).
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long)]
    pub major: Option<f64>,
    #[arg(long)]
    pub minor: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub semi_axes: Option<Vec<f64>>,
    /// Existing manifest; replaces the surface flags.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Chebyshev nodes per leading axis, e.g. `20,5`.
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',', value_enum)]
    pub suites: Option<Vec<Suite>>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub mesh: Option<bool>,
    #[arg(long)]
    pub mesh_res: Option<usize>,
    #[arg(long)]
    pub h_tol: Option<f64>,
    #[arg(long)]
    pub codazzi_tol: Option<f64>,
    #[arg(long)]
    pub structural_tol: Option<f64>,
    #[arg(long)]
    pub slice_tol: Option<f64>,
    #[arg(long)]
    pub unit_speed_tol: Option<f64>,
}

macro_rules! overlay {
    ($flags:expr, $file:expr, $($f:ident),*) => {
        Options { $($f: $flags.$f.or($file.$f),)* }
    };
}

impl Options {
    /// Flags first, then the file.
    pub fn overlay(self, file: Options) -> Options {
        overlay!(
            self, file, family, p, q, n, psi0, phi0, theta0, s_max, local_tol, samples, radius, major, minor,
            semi_axes, manifest, out, grid, suites, mesh, mesh_res, h_tol, codazzi_tol, structural_tol,
            slice_tol, unit_speed_tol
        )
    }
}

pub fn read_config_file(path: &Path) -> CliResult<Options> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("config {}: {e}", path.display())))
}

/// Profile integration request.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileSpec {
    pub family: Family,
    pub p: usize,
    pub q: usize,
    pub initial: ProfileState,
    pub s_max: f64,
    pub local_tol: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum SurfaceSpec {
    Profile(ProfileSpec),
    Reference { reference: ReferenceKind },
}

/// Per-suite pass thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuiteTolerances {
    pub h_condition: f64,
    pub codazzi: f64,
    pub structural_identity: f64,
    pub slice_sphericity: f64,
    pub unit_speed: f64,
}

impl Default for SuiteTolerances {
    fn default() -> Self {
        Self { h_condition: 1e-6, codazzi: 1e-4, structural_identity: 1e-6, slice_sphericity: 1e-8, unit_speed: 1e-8 }
    }
}

impl SuiteTolerances {
    pub fn get(&self, suite: Suite) -> f64 {
        match suite {
            Suite::HCondition => self.h_condition,
            Suite::Codazzi => self.codazzi,
            Suite::StructuralIdentity => self.structural_identity,
            Suite::SliceSphericity => self.slice_sphericity,
            Suite::UnitSpeed => self.unit_speed,
        }
    }
}

/// Fully resolved configuration. Output locations are not part of it, so
/// its digest depends only on what is computed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: CommandKind,
    pub surface: SurfaceSpec,
    /// Digest of the manifest the surface came from, if any.
    pub manifest_digest: Option<String>,
    pub grid: Vec<usize>,
    pub suites: Vec<Suite>,
    pub suite_tolerances: SuiteTolerances,
    pub mesh: bool,
    pub mesh_res: usize,
}

impl RunConfig {
    pub fn digest(&self) -> String {
        sha256_hex(to_json(self).as_bytes())
    }
}

pub const DEFAULT_GRID: [usize; 2] = [20, 5];
pub const DEFAULT_MESH_RES: usize = 32;

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}

fn check_positive(name: &str, v: f64) -> CliResult<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(bad(format!("{name} must be positive, got {v}")))
    }
}

fn check_blocks(p: usize, q: usize) -> CliResult<()> {
    if p < 1 {
        return Err(bad("p must be ≥ 1"));
    }
    if q < 1 {
        return Err(bad("q must be ≥ 1"));
    }
    if p + q + 1 > MAX_DIM {
        return Err(bad(format!("p + q + 1 must be ≤ {MAX_DIM}, got {}", p + q + 1)));
    }
    Ok(())
}

/// Surface description from the flags alone.
pub fn surface_from_options(o: &Options) -> CliResult<SurfaceSpec> {
    let family = o.family.ok_or_else(|| bad("--family or --manifest is required"))?;
    let profile = |family: Family| -> CliResult<SurfaceSpec> {
        let (p, q) = (o.p.unwrap_or(2), o.q.unwrap_or(2));
        check_blocks(p, q)?;
        let initial = ProfileState::new(o.psi0.unwrap_or(1.0), o.phi0.unwrap_or(1.0), o.theta0.unwrap_or(FRAC_PI_4));
        if ![initial.psi, initial.phi, initial.theta].iter().all(|v| v.is_finite()) {
            return Err(bad("initial data must be finite"));
        }
        let s_max = check_positive("s-max", o.s_max.unwrap_or(0.5))?;
        let local_tol = o.local_tol.unwrap_or(1e-10);
        if !(1e-12..=1e-6).contains(&local_tol) {
            return Err(bad(format!("local-tol must lie in [1e-12, 1e-6], got {local_tol:e}")));
        }
        let samples = o.samples.unwrap_or(DEFAULT_SAMPLES);
        if samples < 200 {
            return Err(bad(format!("samples must be ≥ 200, got {samples}")));
        }
        Ok(SurfaceSpec::Profile(ProfileSpec { family, p, q, initial, s_max, local_tol, samples }))
    };
    let reference = |kind: ReferenceKind| Ok(SurfaceSpec::Reference { reference: kind });
    match family {
        FamilyArg::Rotational => profile(Family::Rotational),
        FamilyArg::Cylinder => profile(Family::Cylinder),
        FamilyArg::Sphere => reference(ReferenceKind::Sphere {
            n: o.n.unwrap_or(4),
            radius: check_positive("radius", o.radius.unwrap_or(1.0))?,
        }),
        FamilyArg::RoundCylinder => {
            let (p, q) = (o.p.unwrap_or(2), o.q.unwrap_or(2));
            check_blocks(p, q)?;
            reference(ReferenceKind::RoundCylinder { p, q, radius: check_positive("radius", o.radius.unwrap_or(1.0))? })
        }
        FamilyArg::Plane => reference(ReferenceKind::Plane { n: o.n.unwrap_or(3) }),
        FamilyArg::Ellipsoid => {
            let semi_axes = o.semi_axes.clone().unwrap_or_else(|| vec![1.0, 1.3, 1.7]);
            for &a in &semi_axes {
                check_positive("semi-axis", a)?;
            }
            reference(ReferenceKind::Ellipsoid { semi_axes })
        }
        FamilyArg::Torus => reference(ReferenceKind::Torus {
            p: o.p.unwrap_or(2),
            major: check_positive("major", o.major.unwrap_or(2.0))?,
            minor: check_positive("minor", o.minor.unwrap_or(0.7))?,
        }),
    }
}

/// Resolves everything except the surface, which may come from a manifest.
pub fn resolve(command: CommandKind, o: &Options, surface: SurfaceSpec, manifest_digest: Option<String>) -> CliResult<RunConfig> {
    let grid = o.grid.clone().unwrap_or_else(|| DEFAULT_GRID.to_vec());
    if grid.is_empty() || grid.iter().any(|&c| c == 0) {
        return Err(bad("grid counts must be positive"));
    }
    let mut suites = o.suites.clone().unwrap_or_else(|| Suite::ALL.to_vec());
    suites.sort();
    suites.dedup();
    let d = SuiteTolerances::default();
    let suite_tolerances = SuiteTolerances {
        h_condition: check_positive("h-tol", o.h_tol.unwrap_or(d.h_condition))?,
        codazzi: check_positive("codazzi-tol", o.codazzi_tol.unwrap_or(d.codazzi))?,
        structural_identity: check_positive("structural-tol", o.structural_tol.unwrap_or(d.structural_identity))?,
        slice_sphericity: check_positive("slice-tol", o.slice_tol.unwrap_or(d.slice_sphericity))?,
        unit_speed: check_positive("unit-speed-tol", o.unit_speed_tol.unwrap_or(d.unit_speed))?,
    };
    let mesh_res = o.mesh_res.unwrap_or(DEFAULT_MESH_RES);
    if mesh_res < 2 {
        return Err(bad("mesh-res must be ≥ 2"));
    }
    Ok(RunConfig {
        command,
        surface,
        manifest_digest,
        grid,
        suites,
        suite_tolerances,
        mesh: o.mesh.unwrap_or(false),
        mesh_res,
    })
}
