//! The five subcommands.

use std::collections::BTreeMap;
use std::ops::Range;
use std::path::PathBuf;

use bclab_core::analysis::{
    codazzi_report, curvature_derivatives, h_condition_report, null2type_lambda_scan, slice_sphericity_check,
    structural_identity_check, sweep, Null2TypeScan, SliceModel,
};
use bclab_core::factory::ReferenceKind;
use bclab_core::grid::tensor_grid;
use bclab_core::profile::{unit_speed_report, Family, ProfileCurve};
use bclab_core::report::ResidualReport;
use bclab_core::tolerances::{ToleranceSet, GRAD_FLOOR};
use serde::Serialize;

use crate::config::{resolve, surface_from_options, CommandKind, Options, RunConfig, Suite, SuiteTolerances, SurfaceSpec};
use crate::error::{CliError, CliResult, EXIT_OK, EXIT_VERIFY};
use crate::mesh::obj_slice;
use crate::output::{csv, to_json, write_atomic};
use crate::surfaces::{build, read_manifest, rebuild, Built, Manifest, ProfileSummary, MANIFEST_FORMAT};

/// What a command wrote and how the process should exit.
#[derive(Debug, Clone, Serialize)]
pub struct Outcome {
    pub command: CommandKind,
    pub code: i32,
    pub files: Vec<PathBuf>,
}

pub const DEFAULT_OUT: &str = "bclab-out";

struct Context {
    config: RunConfig,
    digest: String,
    built: Built,
    out: PathBuf,
    files: Vec<PathBuf>,
}

impl Context {
    fn write(&mut self, name: &str, contents: &str) -> CliResult<()> {
        let path = self.out.join(name);
        write_atomic(&path, contents.as_bytes())?;
        self.files.push(path);
        Ok(())
    }

    fn grid(&self) -> Vec<Vec<f64>> {
        tensor_grid(&self.built.surface, &self.config.grid)
    }

    fn finish(self, code: i32) -> Outcome {
        Outcome { command: self.config.command, code, files: self.files }
    }
}

fn context(command: CommandKind, o: &Options) -> CliResult<Context> {
    let (surface, manifest_digest, built) = match &o.manifest {
        Some(path) => {
            let (manifest, digest) = read_manifest(path)?;
            let built = rebuild(&manifest)?;
            (manifest.surface, Some(digest), built)
        }
        None => {
            let spec = surface_from_options(o)?;
            let built = build(&spec)?;
            (spec, None, built)
        }
    };
    let config = resolve(command, o, surface, manifest_digest)?;
    let digest = config.digest();
    let out = o.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    Ok(Context { config, digest, built, out, files: Vec::new() })
}

pub fn run(command: CommandKind, o: &Options) -> CliResult<Outcome> {
    if command == CommandKind::Generate && o.manifest.is_some() {
        return Err(CliError::Input("generate takes surface flags, not --manifest".into()));
    }
    let cx = context(command, o)?;
    match command {
        CommandKind::Generate => generate(cx),
        CommandKind::Verify => verify(cx),
        CommandKind::Classify => classify(cx),
        CommandKind::ScanLambda => scan_lambda(cx),
        CommandKind::Report => report(cx),
    }
}

fn generate(mut cx: Context) -> CliResult<Outcome> {
    let profile = match &cx.built.profile {
        Some(curve) => {
            let text = curve.to_csv();
            let summary = ProfileSummary::new(curve, "profile.csv", &text);
            cx.write("profile.csv", &text)?;
            Some(summary)
        }
        None => None,
    };
    let mesh = if cx.config.mesh {
        let obj = obj_slice(&cx.built.surface, cx.config.mesh_res)?;
        cx.write("mesh.obj", &obj)?;
        Some("mesh.obj".to_string())
    } else {
        None
    };
    let manifest = Manifest {
        format: MANIFEST_FORMAT.into(),
        name: cx.built.surface.name().to_string(),
        surface: cx.config.surface.clone(),
        n: cx.built.surface.dim_domain(),
        ambient: cx.built.surface.dim_ambient(),
        profile,
        mesh,
        config_digest: cx.digest.clone(),
        tolerances: ToleranceSet::default(),
    };
    cx.write("manifest.json", &to_json(&manifest))?;
    Ok(cx.finish(EXIT_OK))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SuiteStatus {
    Pass,
    Fail,
    Skipped,
    Error,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteOutcome {
    pub name: &'static str,
    pub status: SuiteStatus,
    pub tolerance: f64,
    pub points: usize,
    pub max: Option<f64>,
    pub mean: Option<f64>,
    pub argmax: Option<Vec<f64>>,
    pub note: Option<String>,
    pub csv: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
struct VerifyReport<'a> {
    command: CommandKind,
    surface: &'a str,
    config_digest: &'a str,
    tolerances: ToleranceSet,
    suite_tolerances: SuiteTolerances,
    grid: &'a [usize],
    suites: Vec<SuiteOutcome>,
    pass: bool,
}

/// Slice fitted for one coordinate block.
enum SliceExpect {
    /// Round sphere of the given radius at a base point.
    Radius(Box<dyn Fn(&[f64]) -> CliResult<f64>>),
    Flat,
}

fn profile_radius(curve: &ProfileCurve, second: bool) -> SliceExpect {
    let curve = curve.clone();
    SliceExpect::Radius(Box::new(move |u| {
        let st = curve.state_at(u[0])?;
        Ok(if second { st.phi } else { st.psi })
    }))
}

fn slice_blocks(spec: &SurfaceSpec, profile: Option<&ProfileCurve>) -> Option<Vec<(Range<usize>, SliceExpect)>> {
    match spec {
        SurfaceSpec::Profile(ps) => {
            let curve = profile?;
            let first = (1..ps.p + 1, profile_radius(curve, false));
            let second = match ps.family {
                Family::Rotational => profile_radius(curve, true),
                Family::Cylinder => SliceExpect::Flat,
            };
            Some(vec![first, (ps.p + 1..ps.p + ps.q + 1, second)])
        }
        SurfaceSpec::Reference { reference } => match reference.clone() {
            ReferenceKind::Sphere { n, radius } => {
                Some(vec![(0..n, SliceExpect::Radius(Box::new(move |_| Ok(radius))))])
            }
            ReferenceKind::RoundCylinder { p, q, radius } => Some(vec![
                (0..p, SliceExpect::Radius(Box::new(move |_| Ok(radius)))),
                (p..p + q, SliceExpect::Flat),
            ]),
            ReferenceKind::Plane { n } => Some(vec![(0..n, SliceExpect::Flat)]),
            ReferenceKind::Torus { p, major, minor } => Some(vec![(
                1..p + 1,
                SliceExpect::Radius(Box::new(move |u| Ok(major + minor * u[0].cos()))),
            )]),
            ReferenceKind::Ellipsoid { .. } => None,
        },
    }
}

const MAX_SLICE_BASES: usize = 10;

fn nodes_per_axis(m: usize) -> usize {
    match m {
        0..=2 => 6,
        3 => 4,
        _ => 3,
    }
}

/// Per base point: the worst of the fit residual and the radius error.
fn slice_suite(cx: &Context, grid: &[Vec<f64>], tol: f64) -> CliResult<Option<ResidualReport>> {
    let Some(blocks) = slice_blocks(&cx.config.surface, cx.built.profile.as_ref()) else {
        return Ok(None);
    };
    let stride = grid.len().div_ceil(MAX_SLICE_BASES).max(1);
    let bases: Vec<Vec<f64>> = grid.iter().step_by(stride).cloned().collect();
    let surface = &cx.built.surface;
    let mut values = Vec::with_capacity(bases.len());
    for base in &bases {
        let mut worst = 0.0_f64;
        for (block, expect) in &blocks {
            let m = block.len();
            let model = match expect {
                SliceExpect::Radius(_) => SliceModel::Sphere,
                SliceExpect::Flat => SliceModel::Plane,
            };
            let fit = slice_sphericity_check(surface, base, block.clone(), nodes_per_axis(m), model, tol)?;
            worst = worst.max(fit.report.max);
            if let (SliceExpect::Radius(r), Some(radius)) = (expect, fit.radius) {
                worst = worst.max((radius - r(base)?).abs());
            }
        }
        values.push(worst);
    }
    Ok(Some(ResidualReport::new("slice_sphericity", bases, values, tol)))
}

fn run_suite(cx: &Context, suite: Suite, grid: &[Vec<f64>]) -> CliResult<Option<ResidualReport>> {
    let tol = cx.config.suite_tolerances.get(suite);
    let surface = &cx.built.surface;
    Ok(match suite {
        Suite::HCondition => Some(h_condition_report(surface, grid, tol)?),
        Suite::Codazzi => Some(codazzi_report(surface, grid, tol)?),
        Suite::StructuralIdentity => Some(structural_identity_check(surface, grid, tol)?),
        Suite::SliceSphericity => slice_suite(cx, grid, tol)?,
        Suite::UnitSpeed => match &cx.built.profile {
            Some(curve) => {
                let r = unit_speed_report(curve)?;
                Some(ResidualReport::new("unit_speed", r.grid, r.values, tol))
            }
            None => None,
        },
    })
}

fn residual_csv(r: &ResidualReport) -> String {
    let dim = r.grid.first().map_or(0, Vec::len);
    let mut header: Vec<String> = (0..dim).map(|i| format!("u{i}")).collect();
    header.push("residual".into());
    let rows: Vec<Vec<f64>> = r
        .grid
        .iter()
        .zip(&r.values)
        .map(|(u, v)| u.iter().copied().chain(std::iter::once(*v)).collect())
        .collect();
    csv(&header, &rows)
}

fn verify(mut cx: Context) -> CliResult<Outcome> {
    let grid = cx.grid();
    let mut outcomes = Vec::new();
    for &suite in &cx.config.suites.clone() {
        let tolerance = cx.config.suite_tolerances.get(suite);
        let blank = SuiteOutcome {
            name: suite.name(),
            status: SuiteStatus::Skipped,
            tolerance,
            points: 0,
            max: None,
            mean: None,
            argmax: None,
            note: None,
            csv: None,
        };
        let outcome = match run_suite(&cx, suite, &grid) {
            Ok(Some(r)) => {
                let name = format!("verify_{}.csv", suite.name());
                cx.write(&name, &residual_csv(&r))?;
                SuiteOutcome {
                    status: if r.pass { SuiteStatus::Pass } else { SuiteStatus::Fail },
                    points: r.values.len(),
                    max: Some(r.max),
                    mean: Some(r.mean),
                    argmax: Some(r.argmax.clone()),
                    note: r.note.clone(),
                    csv: Some(name),
                    ..blank
                }
            }
            Ok(None) => SuiteOutcome { note: Some("not applicable to this surface".into()), ..blank },
            Err(CliError::Geom(e)) => SuiteOutcome { status: SuiteStatus::Error, note: Some(e.to_string()), ..blank },
            Err(e) => return Err(e),
        };
        outcomes.push(outcome);
    }
    let pass = outcomes.iter().all(|o| matches!(o.status, SuiteStatus::Pass | SuiteStatus::Skipped));
    let report = VerifyReport {
        command: CommandKind::Verify,
        surface: cx.built.surface.name(),
        config_digest: &cx.digest,
        tolerances: ToleranceSet::default(),
        suite_tolerances: cx.config.suite_tolerances,
        grid: &cx.config.grid,
        suites: outcomes,
        pass,
    };
    let text = to_json(&report);
    cx.write("verify.json", &text)?;
    Ok(cx.finish(if pass { EXIT_OK } else { EXIT_VERIFY }))
}

#[derive(Debug, Clone, Serialize)]
struct ClassifiedPoint {
    u: Vec<f64>,
    curvatures: Vec<f64>,
    multiplicities: Vec<usize>,
    s1: f64,
    grad_norm: f64,
    h_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
struct ClassifyReport<'a> {
    command: CommandKind,
    surface: &'a str,
    config_digest: &'a str,
    tolerances: ToleranceSet,
    suite_tolerances: SuiteTolerances,
    /// Number of grid points per count of distinct principal curvatures.
    distinct_counts: BTreeMap<usize, usize>,
    h_condition_max: f64,
    label: &'static str,
    points: Vec<ClassifiedPoint>,
}

const FLAT_CURVATURE: f64 = 1e-8;

fn label(points: &[ClassifiedPoint], h_max: f64, h_tol: f64) -> &'static str {
    let all = |f: &dyn Fn(&ClassifiedPoint) -> bool| points.iter().all(f);
    if all(&|p| p.multiplicities.len() == 1) {
        return "umbilical";
    }
    if all(&|p| p.grad_norm <= GRAD_FLOOR) {
        return "constant_mean_curvature";
    }
    if h_max < h_tol && all(&|p| p.multiplicities.len() == 3) {
        let has_flat_block = all(&|p| p.curvatures.iter().filter(|k| k.abs() < FLAT_CURVATURE).count() >= 1);
        return if has_flat_block { "h_hypersurface_cylinder_type" } else { "h_hypersurface_rotational_type" };
    }
    if h_max < h_tol {
        return "h_hypersurface";
    }
    "generic"
}

fn classify(mut cx: Context) -> CliResult<Outcome> {
    let grid = cx.grid();
    let surface = &cx.built.surface;
    let points = sweep(&grid, |u| {
        let cd = curvature_derivatives(surface, u)?;
        let pg = &cd.geometry;
        let s1 = pg.s1();
        Ok(ClassifiedPoint {
            u: u.to_vec(),
            curvatures: pg.spectrum.eigenvalues.clone(),
            multiplicities: pg.spectrum.multiplicities(),
            s1,
            grad_norm: cd.grad_norm,
            h_residual: cd.h_defect(),
        })
    })?;
    let mut distinct_counts = BTreeMap::new();
    for p in &points {
        *distinct_counts.entry(p.multiplicities.len()).or_insert(0) += 1;
    }
    let h_condition_max = points.iter().map(|p| p.h_residual).fold(0.0, f64::max);
    let h_tol = cx.config.suite_tolerances.h_condition;
    let report = ClassifyReport {
        command: CommandKind::Classify,
        surface: surface.name(),
        config_digest: &cx.digest,
        tolerances: ToleranceSet::default(),
        suite_tolerances: cx.config.suite_tolerances,
        distinct_counts,
        h_condition_max,
        label: label(&points, h_condition_max, h_tol),
        points,
    };
    let text = to_json(&report);
    cx.write("classify.json", &text)?;
    Ok(cx.finish(EXIT_OK))
}

#[derive(Debug, Clone, Serialize)]
struct ScanReport<'a> {
    command: CommandKind,
    surface: &'a str,
    config_digest: &'a str,
    tolerances: ToleranceSet,
    /// Constant `lambda` is necessary, not sufficient, for null 2-type.
    scan: Null2TypeScan,
}

fn scan_lambda(mut cx: Context) -> CliResult<Outcome> {
    let grid = cx.grid();
    let scan = null2type_lambda_scan(&cx.built.surface, &grid)?;
    let report = ScanReport {
        command: CommandKind::ScanLambda,
        surface: cx.built.surface.name(),
        config_digest: &cx.digest,
        tolerances: ToleranceSet::default(),
        scan,
    };
    let text = to_json(&report);
    cx.write("scan_lambda.json", &text)?;
    Ok(cx.finish(EXIT_OK))
}

#[derive(Debug, Clone, Serialize)]
struct PlotReport<'a> {
    command: CommandKind,
    surface: &'a str,
    config_digest: &'a str,
    tolerances: ToleranceSet,
    n: usize,
    ambient: usize,
    grid: &'a [usize],
    points: usize,
    s1_min: f64,
    s1_max: f64,
    files: Vec<String>,
}

fn report(mut cx: Context) -> CliResult<Outcome> {
    let grid = cx.grid();
    let surface = &cx.built.surface;
    let n = surface.dim_domain();
    let rows = sweep(&grid, |u| {
        let cd = curvature_derivatives(surface, u)?;
        let pg = &cd.geometry;
        let (s1, s2) = pg.mean_curvatures();
        let mut row = u.to_vec();
        row.extend(&pg.spectrum.eigenvalues);
        row.extend([s1, s2, cd.h_defect(), cd.grad_norm]);
        Ok(row)
    })?;
    let mut header: Vec<String> = (0..n).map(|i| format!("u{i}")).collect();
    header.extend((1..=n).map(|i| format!("k{i}")));
    header.extend(["s1", "s2", "h_residual", "grad_s1_norm"].map(String::from));
    let s1: Vec<f64> = rows.iter().map(|r| r[2 * n]).collect();
    let mut names = vec!["curvature.csv".to_string()];
    cx.write("curvature.csv", &csv(&header, &rows))?;
    if let Some(curve) = &cx.built.profile {
        let text = curve.to_csv();
        cx.write("profile.csv", &text)?;
        names.push("profile.csv".into());
    }
    if cx.config.mesh {
        let obj = obj_slice(&cx.built.surface, cx.config.mesh_res)?;
        cx.write("mesh.obj", &obj)?;
        names.push("mesh.obj".into());
    }
    let summary = PlotReport {
        command: CommandKind::Report,
        surface: cx.built.surface.name(),
        config_digest: &cx.digest,
        tolerances: ToleranceSet::default(),
        n,
        ambient: cx.built.surface.dim_ambient(),
        grid: &cx.config.grid,
        points: rows.len(),
        s1_min: s1.iter().copied().fold(f64::INFINITY, f64::min),
        s1_max: s1.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        files: names,
    };
    let text = to_json(&summary);
    cx.write("report.json", &text)?;
    Ok(cx.finish(EXIT_OK))
}
