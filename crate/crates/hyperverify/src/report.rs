//! Batch job configuration, validation, execution, and serialization.
//!
//! A [`JobConfig`] is a schema-versioned, fail-closed description of a
//! list of verification jobs (unknown fields are errors, because a
//! silently ignored λ or N would change the mathematical claim being
//! tested). Validation resolves every job against the catalogue gates
//! *before* execution; execution runs the jobs in a work-stealing pool
//! and collects results **in input order**, so serial and parallel runs
//! serialize to byte-identical JSON.

use crate::geometry::Dimension;
use crate::identities::{self, IdentityId, IdentityReport, ProfileInput, Verdict};
use crate::modes::{self, ModeExpansion, ModeFunction};
use crate::pairs::{self, PairError};
use crate::profiles::{make_bump, PolyBridge, ProfileError, RadialProfile, SineBump};
use crate::sharpness::{self, HpwReport, HpwVariant, OperatorFlavor, ScanId, ScanReport};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use thiserror::Error;

/// Schema version stamped into configs and reports.
pub const SCHEMA_VERSION: u32 = 1;

/// Configuration errors (CLI exit code 2).
#[derive(Debug, Error)]
pub enum ConfigError {
    /// Config file could not be read.
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    /// Config file is not valid JSON for the schema (unknown fields
    /// included — the schema is fail-closed).
    #[error("config parse error: {0}")]
    Parse(#[from] serde_json::Error),
    /// Wrong or missing schema version.
    #[error("unsupported schema_version {got}; this build reads {want}")]
    SchemaVersion {
        /// Version in the file.
        got: u32,
        /// Version this build understands.
        want: u32,
    },
    /// Unknown identity string.
    #[error("unknown identity {0:?}")]
    UnknownIdentity(String),
    /// Unknown scan / variant / flavor / profile-family string.
    #[error("unknown {what} {got:?}")]
    UnknownName {
        /// What kind of name was expected.
        what: &'static str,
        /// The string that did not resolve.
        got: String,
    },
    /// Dimension outside the supported range.
    #[error("dimension N={0} outside supported range 2..=64")]
    InvalidDimension(u32),
    /// The identity's dimension gate rejects this N.
    #[error("{id} requires N >= {min}, got N={got}")]
    DimensionGate {
        /// The identity.
        id: IdentityId,
        /// Its gate.
        min: u32,
        /// The configured dimension.
        got: u32,
    },
    /// λ given to an identity with a built-in λ.
    #[error("{0} has a built-in lambda; remove the lambda field")]
    LambdaNotAccepted(IdentityId),
    /// λ outside `[0, λ₁]`.
    #[error("invalid lambda: {0}")]
    InvalidLambda(#[from] PairError),
    /// Mode input given to a radial-only identity.
    #[error("{0} is stated for radial functions only; remove the modes field")]
    RadialOnly(IdentityId),
    /// Profile parameters rejected.
    #[error("invalid profile: {0}")]
    Profile(#[from] ProfileError),
    /// Mode expansion rejected (duplicate degrees, empty).
    #[error("invalid mode list: {0}")]
    Modes(#[from] modes::ModeError),
    /// Free-form validation failure.
    #[error("{0}")]
    Invalid(String),
}

/// λ grid specification.
///
/// `List` is explicit; `EndpointsPlusUniform(k)` expands to
/// `{0, λ₁}` plus `k` uniformly spaced interior points, with λ₁ computed
/// from N internally so no user-side rounding can shift the endpoint.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaGrid {
    /// Explicit λ values.
    List(Vec<f64>),
    /// `{0, interior ticks, λ₁}` with this many interior ticks.
    EndpointsPlusUniform(u32),
}

impl LambdaGrid {
    /// Expands the grid for dimension `dim`.
    pub fn realize(&self, dim: Dimension) -> Vec<f64> {
        match self {
            LambdaGrid::List(v) => v.clone(),
            LambdaGrid::EndpointsPlusUniform(k) => {
                let l1 = dim.lambda1();
                let mut out = vec![0.0];
                for j in 1..=*k {
                    out.push(l1 * f64::from(j) / f64::from(k + 1));
                }
                out.push(l1);
                out
            }
        }
    }
}

/// Trial-profile specification.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    /// Family name: "bump", "poly" or "sine".
    #[serde(default = "default_family")]
    pub family: String,
    /// Left support endpoint.
    #[serde(default = "default_a")]
    pub a: f64,
    /// Right support endpoint.
    #[serde(default = "default_b")]
    pub b: f64,
    /// Peak amplitude.
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
}

fn default_family() -> String {
    "bump".to_string()
}
fn default_a() -> f64 {
    0.5
}
fn default_b() -> f64 {
    2.5
}
fn default_amplitude() -> f64 {
    1.0
}

impl Default for ProfileSpec {
    fn default() -> Self {
        ProfileSpec {
            family: default_family(),
            a: default_a(),
            b: default_b(),
            amplitude: default_amplitude(),
        }
    }
}

impl ProfileSpec {
    /// Builds the described profile.
    pub fn build(&self) -> Result<Box<dyn RadialProfile>, ConfigError> {
        Ok(match self.family.as_str() {
            "bump" => Box::new(make_bump(self.a, self.b, self.amplitude)?),
            "poly" => Box::new(PolyBridge::new(self.a, self.b, self.amplitude)?),
            "sine" => Box::new(SineBump::new(self.a, self.b, self.amplitude)?),
            other => {
                return Err(ConfigError::UnknownName {
                    what: "profile family",
                    got: other.to_string(),
                })
            }
        })
    }

    /// Named family with that family's default window.
    pub fn named(family: &str) -> ProfileSpec {
        let (a, b, amplitude) = match family {
            "sine" => (0.8, 3.0, 0.6),
            "poly" => (0.5, 3.0, 1.0),
            _ => (default_a(), default_b(), default_amplitude()),
        };
        ProfileSpec {
            family: family.to_string(),
            a,
            b,
            amplitude,
        }
    }
}

/// One component of a mode-expansion input.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    /// Spherical degree.
    pub degree: u32,
    /// Radial factor.
    #[serde(default)]
    pub profile: ProfileSpec,
}

/// One requested job.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "snake_case")]
pub enum JobSpec {
    /// Verify one catalogue identity (per λ when a grid is given).
    Verify {
        /// Identity id string.
        identity: String,
        /// Dimension.
        dim: u32,
        /// λ grid for λ-family identities; omit for fixed-λ ones.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lambda: Option<LambdaGrid>,
        /// Radial trial profile (ignored when `modes` is given).
        #[serde(default)]
        profile: ProfileSpec,
        /// Mode-expansion input for mode-capable identities.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        modes: Option<Vec<ModeSpec>>,
    },
    /// Uncertainty-product check.
    Hpw {
        /// Variant name: plain | improved | stringent | abstract.
        variant: String,
        /// Operator flavor: full | radial.
        #[serde(default = "default_flavor")]
        flavor: String,
        /// Dimension.
        dim: u32,
        /// λ (required by plain/improved/abstract, rejected by stringent).
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lambda: Option<f64>,
        /// Radial trial profile (ignored when `modes` is given).
        #[serde(default)]
        profile: ProfileSpec,
        /// Mode-expansion input.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        modes: Option<Vec<ModeSpec>>,
    },
    /// Sharp-constant saturation scan.
    Sharpness {
        /// Scan id string.
        scan: String,
        /// Dimension.
        dim: u32,
        /// Scan parameters (ε or L); empty selects the defaults.
        #[serde(default)]
        params: Vec<f64>,
    },
    /// Residual certificate for the companion-weight differential
    /// equation of the canonical pair family.
    OdeCheck {
        /// Dimension.
        dim: u32,
        /// Number of λ grid points in `[0, λ₁]`.
        #[serde(default = "default_lambda_points")]
        lambda_points: u32,
        /// Number of deterministic log-spaced radii.
        #[serde(default = "default_r_points")]
        r_points: u32,
    },
    /// Spherical-mode spectrum table with its telescoping checksum.
    Modes {
        /// Dimension.
        dim: u32,
        /// Largest degree tabulated.
        #[serde(default = "default_max_degree")]
        max_degree: u32,
    },
}

fn default_flavor() -> String {
    "radial".to_string()
}
fn default_lambda_points() -> u32 {
    21
}
fn default_r_points() -> u32 {
    200
}
fn default_max_degree() -> u32 {
    8
}

/// A batch of jobs with execution settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    /// Must equal [`SCHEMA_VERSION`].
    pub schema_version: u32,
    /// Verification tolerance (relative, against each check's scale).
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Seed for the randomized sample radii of residual certificates.
    #[serde(default)]
    pub seed: u64,
    /// The jobs, in execution (and output) order.
    #[serde(default)]
    pub jobs: Vec<JobSpec>,
}

fn default_tol() -> f64 {
    1e-8
}

impl JobConfig {
    /// Empty batch.
    pub fn new() -> Self {
        JobConfig {
            schema_version: SCHEMA_VERSION,
            tol: default_tol(),
            seed: 0,
            jobs: Vec::new(),
        }
    }

    /// Parses a config from JSON, fail-closed.
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: JobConfig = serde_json::from_str(text)?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(ConfigError::SchemaVersion {
                got: cfg.schema_version,
                want: SCHEMA_VERSION,
            });
        }
        Ok(cfg)
    }
}

impl Default for JobConfig {
    fn default() -> Self {
        Self::new()
    }
}

/// One executed job's outcome.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum JobResult {
    /// An identity verification.
    Identity(IdentityReport),
    /// An uncertainty-product check.
    Hpw(HpwReport),
    /// A sharpness scan.
    Scan(ScanReport),
    /// A differential-equation residual certificate.
    OdeCert(OdeCertReport),
    /// A mode-spectrum table.
    Spectrum(SpectrumReport),
    /// The job errored at run time (post-validation).
    Error {
        /// What was being run.
        label: String,
        /// The error rendered as text.
        message: String,
    },
}

impl JobResult {
    /// Whether this result counts as a pass.
    pub fn passed(&self) -> bool {
        match self {
            JobResult::Identity(r) => r.verdict == Verdict::Pass,
            JobResult::Hpw(r) => r.satisfied,
            JobResult::Scan(r) => r.satisfied,
            JobResult::OdeCert(r) => r.passed,
            JobResult::Spectrum(r) => r.partial_sum_identity,
            JobResult::Error { .. } => false,
        }
    }

    /// Short label for tables.
    pub fn label(&self) -> String {
        match self {
            JobResult::Identity(r) => match r.lambda {
                Some(l) => format!("{} N={} λ={:.6}", r.identity_id, r.dim, l),
                None => format!("{} N={}", r.identity_id, r.dim),
            },
            JobResult::Hpw(r) => match r.lambda {
                Some(l) => format!("hpw {} ({}) N={} λ={:.6}", r.variant, r.flavor, r.dim, l),
                None => format!("hpw {} ({}) N={}", r.variant, r.flavor, r.dim),
            },
            JobResult::Scan(r) => format!("scan {} N={}", r.scan_id, r.dim),
            JobResult::OdeCert(r) => format!("ode-check N={}", r.dim),
            JobResult::Spectrum(r) => format!("modes N={} L={}", r.dim, r.max_degree),
            JobResult::Error { label, .. } => label.clone(),
        }
    }
}

/// Result of the companion-weight differential-equation certificate:
/// the canonical pair `(1, W_λ, Ψ_λ)` must satisfy its defining
/// second-order equation to near round-off at every sampled `(λ, r)`.
#[derive(Debug, Clone, Serialize)]
pub struct OdeCertReport {
    /// Dimension.
    pub dim: u32,
    /// Number of λ samples in `[0, λ₁]`.
    pub lambda_points: u32,
    /// Number of radii per λ (deterministic log grid plus seeded draws).
    pub r_points: u32,
    /// Largest normalized residual `|Σ terms| / max|term|` seen.
    pub max_residual: f64,
    /// λ attaining the maximum.
    pub worst_lambda: f64,
    /// Radius attaining the maximum.
    pub worst_r: f64,
    /// Threshold the certificate was checked against.
    pub threshold: f64,
    /// `max_residual <= threshold`.
    pub passed: bool,
}

/// Mode-spectrum table plus its telescoping checksum.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumReport {
    /// Dimension.
    pub dim: u32,
    /// Largest tabulated degree.
    pub max_degree: u32,
    /// Rows `(degree, eigenvalue, multiplicity)`.
    pub rows: Vec<SpectrumRow>,
    /// Whether `Σ multiplicities` equals the closed form for the
    /// dimension of harmonics of degree ≤ `max_degree`.
    pub partial_sum_identity: bool,
}

/// One spectrum row.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumRow {
    /// Degree.
    pub degree: u32,
    /// Eigenvalue `n(n+N−2)`.
    pub eigenvalue: u64,
    /// Multiplicity of the eigenspace.
    pub multiplicity: u128,
}

/// Full batch outcome.
#[derive(Debug, Serialize)]
pub struct RunReport {
    /// Schema version of this report.
    pub schema_version: u32,
    /// Crate version that produced it.
    pub tool_version: String,
    /// The configuration that was run (resolved echo).
    pub config: JobConfig,
    /// One result per job, in input order.
    pub results: Vec<JobResult>,
    /// Number of passing results.
    pub passed: usize,
    /// Number of failing results.
    pub failed: usize,
    /// Wall-clock duration; text output only, excluded from JSON so that
    /// repeated and parallel runs serialize identically.
    #[serde(skip)]
    pub wall_time_ms: u128,
}

impl RunReport {
    /// Whether every job passed.
    pub fn all_passed(&self) -> bool {
        self.failed == 0
    }
}

/// A fully validated, ready-to-run unit of work.
enum Unit {
    Identity {
        id: IdentityId,
        dim: Dimension,
        lambda: Option<f64>,
        profile: ProfileSpec,
        modes: Option<Vec<ModeSpec>>,
    },
    Hpw {
        variant: HpwVariant,
        flavor: OperatorFlavor,
        dim: Dimension,
        lambda: Option<f64>,
        profile: ProfileSpec,
        modes: Option<Vec<ModeSpec>>,
    },
    Scan {
        id: ScanId,
        dim: Dimension,
        params: Vec<f64>,
    },
    OdeCert {
        dim: Dimension,
        lambda_points: u32,
        r_points: u32,
    },
    Spectrum {
        dim: Dimension,
        max_degree: u32,
    },
}

fn parse_dim(n: u32) -> Result<Dimension, ConfigError> {
    Dimension::new(n).map_err(|_| ConfigError::InvalidDimension(n))
}

fn build_input(
    profile: &ProfileSpec,
    modes: &Option<Vec<ModeSpec>>,
    dim: Dimension,
) -> Result<ProfileInput, ConfigError> {
    match modes {
        None => Ok(ProfileInput::Radial(profile.build()?)),
        Some(list) => {
            let mut comps = Vec::with_capacity(list.len());
            for m in list {
                comps.push(ModeFunction::new(m.degree, m.profile.build()?));
            }
            Ok(ProfileInput::Modes(ModeExpansion::new(dim, comps)?))
        }
    }
}

/// Validates one job into executable units (a λ grid fans out to one
/// unit per λ). All catalogue gates are enforced here, before anything
/// runs.
fn validate_job(job: &JobSpec) -> Result<Vec<Unit>, ConfigError> {
    match job {
        JobSpec::Verify {
            identity,
            dim,
            lambda,
            profile,
            modes,
        } => {
            let d = parse_dim(*dim)?;
            let id: IdentityId = identity
                .parse()
                .map_err(|_| ConfigError::UnknownIdentity(identity.clone()))?;
            if d.get() < id.min_dim() {
                return Err(ConfigError::DimensionGate {
                    id,
                    min: id.min_dim(),
                    got: d.get(),
                });
            }
            if modes.is_some() && !id.mode_capable() {
                return Err(ConfigError::RadialOnly(id));
            }
            // Probe the input construction once so bad profiles fail at
            // validation, not mid-run.
            build_input(profile, modes, d)?;
            let lambdas: Vec<Option<f64>> = if id.accepts_lambda() {
                let grid = lambda
                    .clone()
                    .unwrap_or(LambdaGrid::List(vec![0.0]))
                    .realize(d);
                for &l in &grid {
                    pairs::lambda_params(d, l)?;
                }
                grid.into_iter().map(Some).collect()
            } else {
                if lambda.is_some() {
                    return Err(ConfigError::LambdaNotAccepted(id));
                }
                vec![None]
            };
            Ok(lambdas
                .into_iter()
                .map(|l| Unit::Identity {
                    id,
                    dim: d,
                    lambda: l,
                    profile: profile.clone(),
                    modes: modes.clone(),
                })
                .collect())
        }
        JobSpec::Hpw {
            variant,
            flavor,
            dim,
            lambda,
            profile,
            modes,
        } => {
            let d = parse_dim(*dim)?;
            let v: HpwVariant = variant.parse().map_err(|_| ConfigError::UnknownName {
                what: "variant",
                got: variant.clone(),
            })?;
            let f: OperatorFlavor = flavor.parse().map_err(|_| ConfigError::UnknownName {
                what: "flavor",
                got: flavor.clone(),
            })?;
            let min = match f {
                OperatorFlavor::Full => 5,
                OperatorFlavor::RadialOp => 2,
            };
            if d.get() < min {
                return Err(ConfigError::Invalid(format!(
                    "hpw with the {} flavor requires N >= {min}, got N={}",
                    f.as_str(),
                    d.get()
                )));
            }
            match v {
                HpwVariant::Stringent => {
                    if lambda.is_some() {
                        return Err(ConfigError::Invalid(
                            "the stringent variant has a built-in lambda; remove the lambda field"
                                .to_string(),
                        ));
                    }
                }
                _ => {
                    let l = lambda.ok_or_else(|| {
                        ConfigError::Invalid(format!("variant {} needs a lambda field", v.as_str()))
                    })?;
                    pairs::lambda_params(d, l)?;
                }
            }
            build_input(profile, modes, d)?;
            Ok(vec![Unit::Hpw {
                variant: v,
                flavor: f,
                dim: d,
                lambda: *lambda,
                profile: profile.clone(),
                modes: modes.clone(),
            }])
        }
        JobSpec::Sharpness { scan, dim, params } => {
            let d = parse_dim(*dim)?;
            let id: ScanId = scan.parse().map_err(|_| ConfigError::UnknownName {
                what: "scan",
                got: scan.clone(),
            })?;
            if d.get() < id.min_dim() {
                return Err(ConfigError::Invalid(format!(
                    "scan {} requires N >= {}, got N={}",
                    id.as_str(),
                    id.min_dim(),
                    d.get()
                )));
            }
            for &p in params {
                let ok = if id.concentrating() {
                    p > 0.0 && p < 0.5
                } else {
                    p >= 9.0
                };
                if !ok {
                    return Err(ConfigError::Invalid(format!(
                        "invalid scan parameter {p} for {}",
                        id.as_str()
                    )));
                }
            }
            Ok(vec![Unit::Scan {
                id,
                dim: d,
                params: params.clone(),
            }])
        }
        JobSpec::OdeCheck {
            dim,
            lambda_points,
            r_points,
        } => {
            let d = parse_dim(*dim)?;
            if *lambda_points < 2 || *r_points < 2 {
                return Err(ConfigError::Invalid(
                    "ode-check needs at least 2 lambda points and 2 radii".to_string(),
                ));
            }
            Ok(vec![Unit::OdeCert {
                dim: d,
                lambda_points: *lambda_points,
                r_points: *r_points,
            }])
        }
        JobSpec::Modes { dim, max_degree } => {
            let d = parse_dim(*dim)?;
            if *max_degree > 64 {
                return Err(ConfigError::Invalid(format!(
                    "max_degree {max_degree} too large (limit 64)"
                )));
            }
            Ok(vec![Unit::Spectrum {
                dim: d,
                max_degree: *max_degree,
            }])
        }
    }
}

fn run_unit(unit: &Unit, tol: f64, seed: u64) -> JobResult {
    match unit {
        Unit::Identity {
            id,
            dim,
            lambda,
            profile,
            modes,
        } => {
            let label = format!("{} N={}", id.as_str(), dim.get());
            let input = match build_input(profile, modes, *dim) {
                Ok(i) => i,
                Err(e) => {
                    return JobResult::Error {
                        label,
                        message: e.to_string(),
                    }
                }
            };
            match identities::verify_identity(*id, *dim, *lambda, &input, tol) {
                Ok(rep) => JobResult::Identity(rep),
                Err(e) => JobResult::Error {
                    label,
                    message: e.to_string(),
                },
            }
        }
        Unit::Hpw {
            variant,
            flavor,
            dim,
            lambda,
            profile,
            modes,
        } => {
            let label = format!("hpw {} N={}", variant.as_str(), dim.get());
            let input = match build_input(profile, modes, *dim) {
                Ok(i) => i,
                Err(e) => {
                    return JobResult::Error {
                        label,
                        message: e.to_string(),
                    }
                }
            };
            match sharpness::hpw_check(*variant, *flavor, *dim, *lambda, &input, tol) {
                Ok(rep) => JobResult::Hpw(rep),
                Err(e) => JobResult::Error {
                    label,
                    message: e.to_string(),
                },
            }
        }
        Unit::Scan { id, dim, params } => {
            match sharpness::sharpness_scan(*id, *dim, params, tol.min(1e-10)) {
                Ok(rep) => JobResult::Scan(rep),
                Err(e) => JobResult::Error {
                    label: format!("scan {} N={}", id.as_str(), dim.get()),
                    message: e.to_string(),
                },
            }
        }
        Unit::OdeCert {
            dim,
            lambda_points,
            r_points,
        } => match ode_certificate(*dim, *lambda_points, *r_points, seed, tol) {
            Ok(rep) => JobResult::OdeCert(rep),
            Err(e) => JobResult::Error {
                label: format!("ode-check N={}", dim.get()),
                message: e.to_string(),
            },
        },
        Unit::Spectrum { dim, max_degree } => {
            JobResult::Spectrum(spectrum_report(*dim, *max_degree))
        }
    }
}

/// Certifies the canonical companion pair against its defining equation:
/// for each λ on a uniform grid in `[0, λ₁]`, the normalized residual of
/// `(r^(N−1)·V·Ψ')' + r^(N−1)·W·Ψ = 0` is evaluated on a deterministic
/// log-spaced radius grid in `[1e−3, 20]` plus `r_points/2` seeded
/// log-uniform random radii, and the worst case is compared against the
/// threshold.
pub fn ode_certificate(
    dim: Dimension,
    lambda_points: u32,
    r_points: u32,
    seed: u64,
    threshold: f64,
) -> Result<OdeCertReport, PairError> {
    let mut radii = pairs::log_grid(1e-3, 20.0, r_points as usize);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (ln_lo, ln_hi) = (1e-3f64.ln(), 20.0f64.ln());
    for _ in 0..(r_points / 2) {
        let t: f64 = rng.random();
        radii.push((ln_lo + t * (ln_hi - ln_lo)).exp());
    }

    let mut max_residual = 0.0f64;
    let mut worst_lambda = 0.0;
    let mut worst_r = 0.0;
    for &lam in &pairs::lambda_grid(dim, lambda_points as usize) {
        let params = pairs::lambda_params(dim, lam)?;
        let pair = pairs::BesselPair::canonical(params);
        for &r in &radii {
            let res = pair.ode_residual_normalized(r)?;
            if res > max_residual {
                max_residual = res;
                worst_lambda = lam;
                worst_r = r;
            }
        }
    }
    Ok(OdeCertReport {
        dim: dim.get(),
        lambda_points,
        r_points,
        max_residual,
        worst_lambda,
        worst_r,
        threshold,
        passed: max_residual <= threshold,
    })
}

/// Builds the spectrum table and checks its telescoping identity.
pub fn spectrum_report(dim: Dimension, max_degree: u32) -> SpectrumReport {
    let rows: Vec<SpectrumRow> = modes::mode_spectrum(dim, max_degree)
        .into_iter()
        .map(|m| SpectrumRow {
            degree: m.n,
            eigenvalue: m.eigenvalue_num,
            multiplicity: m.multiplicity,
        })
        .collect();
    let total: u128 = rows.iter().map(|r| r.multiplicity).sum();
    SpectrumReport {
        dim: dim.get(),
        max_degree,
        rows,
        partial_sum_identity: total == modes::cumulative_multiplicity(dim, max_degree),
    }
}

/// Validates and executes a batch.
///
/// `worker_threads = 0` uses the default pool width. Results are
/// collected in input order regardless of scheduling, so the serialized
/// report is identical for any worker count.
pub fn execute(config: &JobConfig, worker_threads: usize) -> Result<RunReport, ConfigError> {
    let started = std::time::Instant::now();
    let mut units = Vec::new();
    for job in &config.jobs {
        units.extend(validate_job(job)?);
    }

    let tol = config.tol;
    let seed = config.seed;
    let run_all =
        || -> Vec<JobResult> { units.par_iter().map(|u| run_unit(u, tol, seed)).collect() };
    let results = if worker_threads == 0 {
        run_all()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(worker_threads)
            .build()
            .map_err(|e| ConfigError::Invalid(format!("cannot build worker pool: {e}")))?;
        pool.install(run_all)
    };

    let passed = results.iter().filter(|r| r.passed()).count();
    let failed = results.len() - passed;
    Ok(RunReport {
        schema_version: SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        results,
        passed,
        failed,
        wall_time_ms: started.elapsed().as_millis(),
    })
}

// ---------------------------------------------------------------------------
// Serialization.
// ---------------------------------------------------------------------------

/// Serializes the report as pretty JSON (deterministic for a fixed
/// config: field order is declaration order, floats use shortest
/// round-trip formatting, and results are in input order).
pub fn emit_json(report: &RunReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serialization is infallible");
    s.push('\n');
    s
}

/// Serializes per-term rows as CSV with the stable header
/// `identity,N,lambda,term_label,value,residual`.
///
/// Identity reports emit one row per displayed term (the report-level
/// residual repeats on each row); uncertainty checks emit their product
/// sides and gap; scans emit one row per sample with the quotient as the
/// value and the relative gap to target as the residual; certificates
/// and spectra emit their summary numbers.
pub fn emit_csv(report: &RunReport) -> Result<String, std::io::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["identity", "N", "lambda", "term_label", "value", "residual"])?;
    let fmt = |x: f64| format!("{x}");
    let opt = |x: Option<f64>| x.map(|v| format!("{v}")).unwrap_or_default();
    for res in &report.results {
        match res {
            JobResult::Identity(r) => {
                for t in &r.terms {
                    w.write_record([
                        r.identity_id.clone(),
                        r.dim.to_string(),
                        opt(r.lambda),
                        t.label.clone(),
                        fmt(t.value),
                        fmt(r.residual),
                    ])?;
                }
            }
            JobResult::Hpw(r) => {
                for (label, value) in [
                    ("lhs_product", r.lhs_product),
                    ("rhs_square", r.rhs_square),
                    ("gap", r.gap),
                ] {
                    w.write_record([
                        format!("HPW_{}", r.variant.to_uppercase()),
                        r.dim.to_string(),
                        opt(r.lambda),
                        label.to_string(),
                        fmt(value),
                        fmt(r.gap),
                    ])?;
                }
            }
            JobResult::Scan(r) => {
                for s in &r.samples {
                    w.write_record([
                        format!("SCAN_{}", r.scan_id.to_uppercase()),
                        r.dim.to_string(),
                        opt(r.lambda),
                        format!("q({})", s.param),
                        fmt(s.quotient),
                        fmt(r.rel_gap),
                    ])?;
                }
            }
            JobResult::OdeCert(r) => {
                w.write_record([
                    "ODE_RESIDUAL".to_string(),
                    r.dim.to_string(),
                    String::new(),
                    "max_residual".to_string(),
                    fmt(r.max_residual),
                    fmt(r.max_residual),
                ])?;
            }
            JobResult::Spectrum(r) => {
                for row in &r.rows {
                    w.write_record([
                        "MODE_SPECTRUM".to_string(),
                        r.dim.to_string(),
                        String::new(),
                        format!("multiplicity({})", row.degree),
                        row.multiplicity.to_string(),
                        "0".to_string(),
                    ])?;
                }
            }
            JobResult::Error { label, .. } => {
                w.write_record([
                    label.clone(),
                    String::new(),
                    String::new(),
                    "error".to_string(),
                    "NaN".to_string(),
                    "NaN".to_string(),
                ])?;
            }
        }
    }
    let bytes = w.into_inner().map_err(std::io::Error::other)?;
    Ok(String::from_utf8(bytes).expect("csv writer produces UTF-8"))
}

/// Per-sample CSV for sharpness scans: `epsilon,quotient,extrapolation`.
///
/// Used by the dedicated scan subcommand; extrapolants align with the
/// sample that completes each successive pair (the first row has none).
pub fn emit_scan_csv(scans: &[&ScanReport]) -> Result<String, std::io::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["epsilon", "quotient", "extrapolation"])?;
    for scan in scans {
        for (i, s) in scan.samples.iter().enumerate() {
            let extr = if i == 0 {
                String::new()
            } else {
                scan.extrapolants
                    .get(i - 1)
                    .map(|e| format!("{e}"))
                    .unwrap_or_default()
            };
            w.write_record([format!("{}", s.param), format!("{}", s.quotient), extr])?;
        }
    }
    let bytes = w.into_inner().map_err(std::io::Error::other)?;
    Ok(String::from_utf8(bytes).expect("csv writer produces UTF-8"))
}

/// Renders the human-readable table (residuals in scientific notation
/// with three significant digits).
pub fn emit_text(report: &RunReport) -> String {
    let mut out = String::new();
    let push = |out: &mut String, line: &str| {
        out.push_str(line);
        out.push('\n');
    };
    push(
        &mut out,
        &format!(
            "hyperverify v{} — {} job(s), {} passed, {} failed, {} ms",
            report.tool_version,
            report.results.len(),
            report.passed,
            report.failed,
            report.wall_time_ms
        ),
    );
    for res in &report.results {
        let status = if res.passed() { "PASS" } else { "FAIL" };
        match res {
            JobResult::Identity(r) => {
                push(
                    &mut out,
                    &format!(
                        "[{status}] {:<40} residual {:.2e}  (budget {:.2e})",
                        res.label(),
                        r.residual,
                        r.quadrature_error_budget
                    ),
                );
                push(&mut out, &format!("       lhs = {:.12e}", r.lhs));
                for t in &r.terms {
                    push(
                        &mut out,
                        &format!("       {:<24} {:.12e}", t.label, t.value),
                    );
                }
                if let Some(g) = r.gap {
                    push(&mut out, &format!("       {:<24} {:.12e}", "gap", g));
                }
            }
            JobResult::Hpw(r) => {
                push(
                    &mut out,
                    &format!(
                        "[{status}] {:<40} gap {:.2e} (lhs {:.6e}, rhs {:.6e})",
                        res.label(),
                        r.gap,
                        r.lhs_product,
                        r.rhs_square
                    ),
                );
                if let Some(c) = r.implied_constant {
                    push(&mut out, &format!("       implied constant {c:.6}"));
                }
            }
            JobResult::Scan(r) => {
                push(
                    &mut out,
                    &format!(
                        "[{status}] {:<40} target {:.6} limit {:.6} (rel gap {:.2e})",
                        res.label(),
                        r.target,
                        r.limit_estimate,
                        r.rel_gap
                    ),
                );
                for s in &r.samples {
                    push(
                        &mut out,
                        &format!("       q({:<8}) = {:.10}", s.param, s.quotient),
                    );
                }
            }
            JobResult::OdeCert(r) => {
                push(
                    &mut out,
                    &format!(
                        "[{status}] {:<40} max residual {:.2e} at λ={:.6}, r={:.4}",
                        res.label(),
                        r.max_residual,
                        r.worst_lambda,
                        r.worst_r
                    ),
                );
            }
            JobResult::Spectrum(r) => {
                push(&mut out, &format!("[{status}] {}", res.label()));
                for row in &r.rows {
                    push(
                        &mut out,
                        &format!(
                            "       n={:<3} eigenvalue={:<8} multiplicity={}",
                            row.degree, row.eigenvalue, row.multiplicity
                        ),
                    );
                }
            }
            JobResult::Error { label, message } => {
                push(&mut out, &format!("[FAIL] {label:<40} error: {message}"));
            }
        }
    }
    out
}

/// Writes `text` to the path, creating parent directories as needed.
pub fn write_output(path: &std::path::Path, text: &str) -> std::io::Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(text.as_bytes())
}
