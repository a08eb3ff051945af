//! Batch verification CLI.
//!
//! Every subcommand is compiled into a [`JobConfig`] batch, validated
//! against the catalogue gates (bad requests exit 2 before anything
//! runs), executed on a worker pool, and rendered as a text table plus
//! optional JSON / CSV files. Exit code 0 means every check passed, 1
//! means at least one verification failed, 2 means the request itself
//! was invalid.

use clap::{Parser, Subcommand};
use hyperverify::identities::IdentityId;
use hyperverify::report::{
    self, ConfigError, JobConfig, JobResult, JobSpec, LambdaGrid, ModeSpec, ProfileSpec,
};
use hyperverify::sharpness::ScanId;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "hyperverify",
    version,
    about = "Numerical verification of weighted integral identities on hyperbolic space",
    propagate_version = true
)]
struct Cli {
    /// Relative verification tolerance.
    #[arg(long, global = true, default_value_t = 1e-8)]
    tol: f64,

    /// Worker threads (0 = automatic). The report is byte-identical for
    /// any worker count.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,

    /// Write the full report as JSON to this path.
    #[arg(long, global = true, value_name = "PATH")]
    json_out: Option<PathBuf>,

    /// Write result rows as CSV to this path (scan samples for the
    /// sharpness subcommand, per-term rows otherwise).
    #[arg(long, global = true, value_name = "PATH")]
    csv_out: Option<PathBuf>,

    /// Seed for the randomized sample radii of residual certificates.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Verify catalogue identities term by term on trial profiles.
    Verify {
        /// Identity id, or "all" for every identity applicable at each
        /// requested dimension.
        #[arg(long, default_value = "all")]
        identity: String,

        /// Comma-separated dimensions.
        #[arg(long, default_value = "5")]
        dim: String,

        /// Comma-separated spectral parameters (identities from the
        /// one-parameter family only; the fixed-parameter identities
        /// always run at their built-in value).
        #[arg(long)]
        lambda: Option<String>,

        /// Trial profile family: bump | poly | sine.
        #[arg(long, default_value = "bump")]
        profile: String,

        /// Mode-expansion input as "degree[:family],degree[:family]"
        /// (e.g. "0:bump,2:sine"); restricts "all" to the identities
        /// stated for non-radial functions.
        #[arg(long)]
        modes: Option<String>,
    },

    /// Sweep one identity of the one-parameter family across a λ grid.
    ScanLambda {
        /// Identity id (must accept a spectral parameter).
        #[arg(long)]
        identity: String,

        /// Comma-separated dimensions.
        #[arg(long, default_value = "5")]
        dim: String,

        /// Number of uniform interior grid points between the λ
        /// endpoints 0 and λ₁ (both endpoints are always included).
        #[arg(long, default_value_t = 9)]
        grid: u32,

        /// Trial profile family: bump | poly | sine.
        #[arg(long, default_value = "bump")]
        profile: String,
    },

    /// Certify the companion-weight differential equation to round-off.
    OdeCheck {
        /// Comma-separated dimensions.
        #[arg(long, default_value = "2,3,5,6,8")]
        dim: String,

        /// λ grid points in [0, λ₁].
        #[arg(long, default_value_t = 21)]
        lambda_points: u32,

        /// Deterministic log-spaced radii per λ (plus half as many
        /// seeded random radii).
        #[arg(long, default_value_t = 200)]
        r_points: u32,
    },

    /// Tabulate the spherical-mode spectrum with its checksum.
    Modes {
        /// Comma-separated dimensions.
        #[arg(long, default_value = "5")]
        dim: String,

        /// Largest degree tabulated.
        #[arg(long, default_value_t = 8)]
        max_degree: u32,
    },

    /// Uncertainty-product (Heisenberg-type) checks.
    Hpw {
        /// Variant: plain | improved | stringent | abstract.
        #[arg(long)]
        variant: String,

        /// Operator flavor: full | radial.
        #[arg(long, default_value = "radial")]
        flavor: String,

        /// Comma-separated dimensions.
        #[arg(long, default_value = "5")]
        dim: String,

        /// Spectral parameter (required by plain/improved/abstract,
        /// rejected by stringent).
        #[arg(long)]
        lambda: Option<f64>,

        /// Trial profile family: bump | poly | sine.
        #[arg(long, default_value = "bump")]
        profile: String,
    },

    /// One-sided sharp-constant saturation scans.
    Sharpness {
        /// Scan id: hardy_rellich | joint_csch | rellich | lambda1 |
        /// lambda1_sq.
        #[arg(long)]
        scan: String,

        /// Comma-separated dimensions.
        #[arg(long, default_value = "5")]
        dim: String,

        /// Comma-separated scan parameters (ε for concentrating scans,
        /// window length L for spreading ones); empty = defaults.
        #[arg(long)]
        params: Option<String>,
    },

    /// Run a JSON job-configuration file (tol and seed come from the
    /// file).
    Report {
        /// Path to the configuration.
        #[arg(long)]
        config: PathBuf,
    },
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>, ConfigError> {
    let mut out = Vec::new();
    for tok in text.split(',') {
        let tok = tok.trim();
        if tok.is_empty() {
            continue;
        }
        out.push(
            tok.parse::<T>()
                .map_err(|_| ConfigError::Invalid(format!("cannot parse {what} {tok:?}")))?,
        );
    }
    if out.is_empty() {
        return Err(ConfigError::Invalid(format!("empty {what} list")));
    }
    Ok(out)
}

fn parse_modes(text: &str) -> Result<Vec<ModeSpec>, ConfigError> {
    let mut out = Vec::new();
    for tok in text.split(',') {
        let tok = tok.trim();
        if tok.is_empty() {
            continue;
        }
        let (deg, family) = match tok.split_once(':') {
            Some((d, f)) => (d, f),
            None => (tok, "bump"),
        };
        let degree: u32 = deg
            .parse()
            .map_err(|_| ConfigError::Invalid(format!("cannot parse mode degree {deg:?}")))?;
        out.push(ModeSpec {
            degree,
            profile: ProfileSpec::named(family),
        });
    }
    if out.is_empty() {
        return Err(ConfigError::Invalid("empty mode list".to_string()));
    }
    Ok(out)
}

/// Compiles the CLI request into a job batch. Returns the batch plus a
/// flag selecting the scan-sample CSV layout.
fn build_config(cli: &Cli) -> Result<(JobConfig, bool), ConfigError> {
    let mut cfg = JobConfig::new();
    cfg.tol = cli.tol;
    cfg.seed = cli.seed;
    let mut scan_csv = false;

    match &cli.command {
        Command::Verify {
            identity,
            dim,
            lambda,
            profile,
            modes,
        } => {
            let dims: Vec<u32> = parse_list(dim, "dimension")?;
            let lambdas: Option<Vec<f64>> = lambda
                .as_deref()
                .map(|s| parse_list(s, "lambda"))
                .transpose()?;
            let mode_spec: Option<Vec<ModeSpec>> = modes.as_deref().map(parse_modes).transpose()?;
            let ids: Vec<IdentityId> = if identity == "all" {
                IdentityId::all().to_vec()
            } else {
                vec![identity
                    .parse()
                    .map_err(|_| ConfigError::UnknownIdentity(identity.clone()))?]
            };
            let filter = identity == "all";
            for &n in &dims {
                for &id in &ids {
                    if filter {
                        // "all" means "all that apply here": skip
                        // identities gated away from this dimension or
                        // not stated for the requested input kind.
                        if n < id.min_dim() {
                            continue;
                        }
                        if mode_spec.is_some() && !id.mode_capable() {
                            continue;
                        }
                    }
                    let grid = if id.accepts_lambda() {
                        lambdas.clone().map(LambdaGrid::List)
                    } else if filter {
                        None
                    } else {
                        // Explicit fixed-λ identity: forward the λ so
                        // validation rejects it loudly instead of
                        // silently dropping a user-supplied parameter.
                        lambdas.clone().map(LambdaGrid::List)
                    };
                    cfg.jobs.push(JobSpec::Verify {
                        identity: id.as_str().to_string(),
                        dim: n,
                        lambda: grid,
                        profile: ProfileSpec::named(profile),
                        modes: mode_spec.clone(),
                    });
                }
            }
        }
        Command::ScanLambda {
            identity,
            dim,
            grid,
            profile,
        } => {
            let id: IdentityId = identity
                .parse()
                .map_err(|_| ConfigError::UnknownIdentity(identity.clone()))?;
            if !id.accepts_lambda() {
                return Err(ConfigError::Invalid(format!(
                    "{id} has a built-in lambda; scan-lambda needs an identity from the \
                     one-parameter family"
                )));
            }
            for n in parse_list::<u32>(dim, "dimension")? {
                cfg.jobs.push(JobSpec::Verify {
                    identity: id.as_str().to_string(),
                    dim: n,
                    lambda: Some(LambdaGrid::EndpointsPlusUniform(*grid)),
                    profile: ProfileSpec::named(profile),
                    modes: None,
                });
            }
        }
        Command::OdeCheck {
            dim,
            lambda_points,
            r_points,
        } => {
            for n in parse_list::<u32>(dim, "dimension")? {
                cfg.jobs.push(JobSpec::OdeCheck {
                    dim: n,
                    lambda_points: *lambda_points,
                    r_points: *r_points,
                });
            }
        }
        Command::Modes { dim, max_degree } => {
            for n in parse_list::<u32>(dim, "dimension")? {
                cfg.jobs.push(JobSpec::Modes {
                    dim: n,
                    max_degree: *max_degree,
                });
            }
        }
        Command::Hpw {
            variant,
            flavor,
            dim,
            lambda,
            profile,
        } => {
            for n in parse_list::<u32>(dim, "dimension")? {
                cfg.jobs.push(JobSpec::Hpw {
                    variant: variant.clone(),
                    flavor: flavor.clone(),
                    dim: n,
                    lambda: *lambda,
                    profile: ProfileSpec::named(profile),
                    modes: None,
                });
            }
        }
        Command::Sharpness { scan, dim, params } => {
            scan_csv = true;
            // Resolve the id here so an unknown scan name is reported as
            // such rather than as a parameter problem.
            let id: ScanId = scan.parse().map_err(|_| ConfigError::UnknownName {
                what: "scan",
                got: scan.clone(),
            })?;
            let p: Vec<f64> = params
                .as_deref()
                .map(|s| parse_list(s, "scan parameter"))
                .transpose()?
                .unwrap_or_default();
            for n in parse_list::<u32>(dim, "dimension")? {
                cfg.jobs.push(JobSpec::Sharpness {
                    scan: id.as_str().to_string(),
                    dim: n,
                    params: p.clone(),
                });
            }
        }
        Command::Report { config } => {
            let text = std::fs::read_to_string(config)?;
            cfg = JobConfig::from_json(&text)?;
        }
    }
    Ok((cfg, scan_csv))
}

fn run(cli: &Cli) -> Result<bool, ConfigError> {
    let (config, scan_csv) = build_config(cli)?;
    let rep = report::execute(&config, cli.jobs)?;
    print!("{}", report::emit_text(&rep));
    if let Some(path) = &cli.json_out {
        report::write_output(path, &report::emit_json(&rep))?;
    }
    if let Some(path) = &cli.csv_out {
        let text = if scan_csv {
            let scans: Vec<_> = rep
                .results
                .iter()
                .filter_map(|r| match r {
                    JobResult::Scan(s) => Some(s),
                    _ => None,
                })
                .collect();
            report::emit_scan_csv(&scans)?
        } else {
            report::emit_csv(&rep)?
        };
        report::write_output(path, &text)?;
    }
    Ok(rep.all_passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("configuration error: {e}");
            ExitCode::from(2)
        }
    }
}
