//! Surfaces from configuration, and the manifest that records them.

use std::path::Path;

use bclab_core::factory::{generalized_cylinder, generalized_rotational, reference_surface};
use bclab_core::profile::{integrate_profile_sampled, Family, ProfileCurve};
use bclab_core::surface::ParametricHypersurface;
use bclab_core::tolerances::ToleranceSet;
use serde::{Deserialize, Serialize};

use crate::config::{ProfileSpec, SurfaceSpec};
use crate::error::{CliError, CliResult};
use crate::output::sha256_hex;

pub struct Built {
    pub profile: Option<ProfileCurve>,
    pub surface: ParametricHypersurface,
}

pub fn integrate(spec: &ProfileSpec) -> CliResult<ProfileCurve> {
    Ok(integrate_profile_sampled(spec.family, spec.p, spec.q, spec.initial, spec.s_max, spec.local_tol, spec.samples)?)
}

pub fn build(spec: &SurfaceSpec) -> CliResult<Built> {
    match spec {
        SurfaceSpec::Profile(ps) => {
            let curve = integrate(ps)?;
            let surface = match ps.family {
                Family::Rotational => generalized_rotational(&curve, ps.p, ps.q)?,
                Family::Cylinder => generalized_cylinder(&curve, ps.p, ps.q)?,
            };
            Ok(Built { profile: Some(curve), surface })
        }
        SurfaceSpec::Reference { reference } => Ok(Built { profile: None, surface: reference_surface(reference)? }),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSummary {
    pub csv: String,
    pub samples: usize,
    pub s_end: f64,
    pub halted_early: bool,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    /// SHA-256 of the profile CSV.
    pub samples_digest: String,
}

impl ProfileSummary {
    pub fn new(curve: &ProfileCurve, csv_name: &str, csv: &str) -> Self {
        Self {
            csv: csv_name.to_string(),
            samples: curve.samples.len(),
            s_end: curve.s_range().1,
            halted_early: curve.halted_early,
            accepted_steps: curve.accepted_steps,
            rejected_steps: curve.rejected_steps,
            samples_digest: sha256_hex(csv.as_bytes()),
        }
    }
}

pub const MANIFEST_FORMAT: &str = "bclab-manifest/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub name: String,
    pub surface: SurfaceSpec,
    /// Hypersurface dimension.
    pub n: usize,
    pub ambient: usize,
    pub profile: Option<ProfileSummary>,
    pub mesh: Option<String>,
    pub config_digest: String,
    pub tolerances: ToleranceSet,
}

/// Reads a manifest and returns it with the digest of its bytes.
pub fn read_manifest(path: &Path) -> CliResult<(Manifest, String)> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    let manifest: Manifest = serde_json::from_slice(&bytes)
        .map_err(|e| CliError::Input(format!("manifest {}: {e}", path.display())))?;
    if manifest.format != MANIFEST_FORMAT {
        return Err(CliError::Input(format!("unsupported manifest format {:?}", manifest.format)));
    }
    Ok((manifest, sha256_hex(&bytes)))
}

/// Rebuilds the surface of a manifest and checks the profile digest.
pub fn rebuild(manifest: &Manifest) -> CliResult<Built> {
    let built = build(&manifest.surface)?;
    if let (Some(curve), Some(summary)) = (&built.profile, &manifest.profile) {
        let digest = sha256_hex(curve.to_csv().as_bytes());
        if digest != summary.samples_digest {
            return Err(CliError::Precondition(format!(
                "regenerated profile digest {digest} differs from the manifest ({})",
                summary.samples_digest
            )));
        }
    }
    Ok(built)
}
