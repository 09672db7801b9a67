//! `ahmass`: mass vectors, decay validation, neck thresholds and hypothesis
//! checks for asymptotically hyperbolic ends.
//!
//! Exit codes: 0 ok, 1 usage or data error, 2 mass undefined, 3 a validation
//! or hypothesis check failed, 4 a potential profile failed verification.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use ahmass_core::curvature::{CurvatureMethod, HYPOTHESIS_TOLERANCE};
use ahmass_core::mass::MassConfig;
use ahmass_core::metric_models::{AngularMode, Component, DecaySpec, Interpolation, RadialProfile};
use ahmass_core::pipeline::{
    run, BoostSpec, CurvatureSource, Family, HypothesisRun, MassRun, ModelSpec, NeckRun, NeckSpec, RunConfig,
    ValidateRun, EXIT_OK, EXIT_USAGE,
};
use ahmass_core::quadrature::QuadSpec;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "ahmass", version, about = "Mass functional and hypothesis checks for asymptotically hyperbolic ends")]
struct Cli {
    /// Write the JSON report here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Directory for CSV tables (created if missing).
    #[arg(long, global = true)]
    csv_dir: Option<PathBuf>,
    /// Also write the resolved run configuration as JSON.
    #[arg(long, global = true)]
    save_config: Option<PathBuf>,
    /// Worker threads; overrides AHMASS_THREADS. Default: all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Mass vector (m(V_0), ..., m(V_n)), its eta-norm and causal class.
    Mass(MassArgs),
    /// Decay validation, curvature sampling and the L1 density check.
    Validate(ValidateArgs),
    /// Threshold Psi(d, l), potential profiles and the mean-curvature check.
    Neck(NeckArgs),
    /// Pointwise hypothesis functionals for a chart and a neck potential.
    Hypothesis(HypothesisArgs),
    /// Replay a saved run configuration.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FamilyArg {
    Hyperbolic,
    Sads,
    Perturbation,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Symmetric,
    Dipole,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ComponentArg {
    Nn,
    Aa,
    Mixed,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ProfileArg {
    Power,
    Regularized,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MethodArg {
    Auto,
    Analytic,
    Fd,
}

#[derive(Args, Debug)]
struct ModelArgs {
    #[arg(long, value_enum, default_value = "hyperbolic")]
    family: FamilyArg,
    #[arg(long, default_value_t = 3)]
    n: usize,
    /// Schwarzschild-AdS mass parameter.
    #[arg(long, default_value_t = 1.0)]
    m: f64,
    /// Perturbation amplitude A.
    #[arg(long, default_value_t = 0.1, allow_negative_numbers = true)]
    amplitude: f64,
    /// Perturbation decay exponent p.
    #[arg(long, default_value_t = 3.0)]
    exponent: f64,
    #[arg(long, value_enum, default_value = "symmetric")]
    mode: ModeArg,
    #[arg(long, value_enum, default_value = "nn")]
    component: ComponentArg,
    #[arg(long, value_enum, default_value = "power")]
    profile: ProfileArg,
    #[arg(long)]
    r_min: Option<f64>,
    /// Sampled metric file; overrides --family.
    #[arg(long)]
    grid: Option<PathBuf>,
    /// Radial interpolation order of grid data, 1 or 3.
    #[arg(long, default_value_t = 3)]
    order: u8,
    /// Boost axis 1..=n.
    #[arg(long)]
    boost_axis: Option<usize>,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    boost_rapidity: f64,
}

impl ModelArgs {
    fn spec(&self) -> Result<ModelSpec, String> {
        let family = if let Some(path) = &self.grid {
            let order = match self.order {
                1 => Interpolation::Linear,
                3 => Interpolation::Cubic,
                o => return Err(format!("--order must be 1 or 3, got {o}")),
            };
            Family::Grid { path: path.clone(), order, r_min: self.r_min }
        } else {
            match self.family {
                FamilyArg::Hyperbolic => Family::Hyperbolic { n: self.n, r_min: self.r_min },
                FamilyArg::Sads => Family::Sads { n: self.n, m: self.m, r_min: self.r_min },
                FamilyArg::Perturbation => Family::Perturbation {
                    n: self.n,
                    amplitude: self.amplitude,
                    exponent: self.exponent,
                    mode: match self.mode {
                        ModeArg::Symmetric => AngularMode::Symmetric,
                        ModeArg::Dipole => AngularMode::Dipole,
                    },
                    component: match self.component {
                        ComponentArg::Nn => Component::Nn,
                        ComponentArg::Aa => Component::Aa,
                        ComponentArg::Mixed => Component::Mixed,
                    },
                    profile: match self.profile {
                        ProfileArg::Power => RadialProfile::Power,
                        ProfileArg::Regularized => RadialProfile::Regularized,
                    },
                    r_min: self.r_min,
                },
            }
        };
        let boost = self.boost_axis.map(|axis| BoostSpec { axis, rapidity: self.boost_rapidity });
        Ok(ModelSpec { family, boost })
    }
}

fn quad(polar: Option<usize>, azimuth: Option<usize>, n: usize) -> Option<QuadSpec> {
    if polar.is_none() && azimuth.is_none() {
        return None;
    }
    let d = QuadSpec::default_for(n);
    Some(QuadSpec { polar: polar.unwrap_or(d.polar), azimuth: azimuth.unwrap_or(d.azimuth) })
}

#[derive(Args, Debug)]
struct MassArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Comma-separated radii; default max(4 r_min, 10)·2^k, k = 0..4.
    #[arg(long, value_delimiter = ',')]
    radii: Option<Vec<f64>>,
    /// Gauss-Legendre nodes per polar angle (default 32 / 16 / 10 for n = 3 / 4 / ≥5).
    #[arg(long)]
    polar: Option<usize>,
    /// Azimuthal nodes (default 64 / 32 / 20).
    #[arg(long)]
    azimuth: Option<usize>,
    /// Relative spread below which a sequence counts as constant.
    #[arg(long, default_value_t = 1e-9)]
    noise_rel: f64,
    /// Classification tolerance (default max(1e-9, 3·|err|)).
    #[arg(long)]
    eps: Option<f64>,
    /// Required excess of the fitted decay exponent over n/2.
    #[arg(long, default_value_t = 0.1)]
    decay_margin: f64,
    /// Compute the mass even if decay validation fails.
    #[arg(long)]
    skip_decay_check: bool,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, value_delimiter = ',')]
    radii: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.1)]
    decay_margin: f64,
    /// Outer radius of the L1 integral (default: the last radius).
    #[arg(long)]
    l1_r_max: Option<f64>,
}

#[derive(Args, Debug)]
struct NeckArgs {
    #[arg(long, default_value_t = 3)]
    n: usize,
    #[arg(long)]
    kappa: f64,
    #[arg(long)]
    d: f64,
    #[arg(long)]
    l: f64,
    /// Profile smoothing width (default min(0.05, 0.1·(−t0 − d))).
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, default_value_t = 2001)]
    grid_size: usize,
    /// Boundary mean-curvature samples, comma-separated.
    #[arg(long = "H", value_delimiter = ',', allow_negative_numbers = true)]
    h: Vec<f64>,
    /// d values of the threshold table (default k·(−t0)/10, k = 1..15).
    #[arg(long, value_delimiter = ',')]
    d_values: Option<Vec<f64>>,
    /// l values of the threshold table (default 0, 0.05, ..., 0.5).
    #[arg(long, value_delimiter = ',')]
    l_values: Option<Vec<f64>>,
}

#[derive(Args, Debug)]
struct HypothesisArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Neck κ; without it ψ ≡ 0.
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    d: f64,
    #[arg(long, default_value_t = 0.0)]
    l: f64,
    /// Width of the p ramp (default d; required when d ≥ −t0).
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, default_value_t = 401)]
    grid_size: usize,
    /// Use a prescribed scalar curvature instead of the chart's.
    #[arg(long, allow_negative_numbers = true)]
    synthetic_r: Option<f64>,
    /// Prescribed curvature on the neck shell (with --synthetic-r).
    #[arg(long, allow_negative_numbers = true)]
    neck_r: Option<f64>,
    #[arg(long, value_enum, default_value = "auto")]
    method: MethodArg,
    /// Boundary radius (default: the chart's inner radius).
    #[arg(long)]
    r_boundary: Option<f64>,
    /// Boundary mean-curvature samples, comma-separated.
    #[arg(long = "H", value_delimiter = ',', allow_negative_numbers = true)]
    h: Vec<f64>,
    /// Verdict tolerance on the functionals.
    #[arg(long, default_value_t = HYPOTHESIS_TOLERANCE)]
    tolerance: f64,
}

fn decay_spec(n: usize, margin: f64) -> Option<DecaySpec> {
    let d = DecaySpec::default_for(n);
    (margin != d.margin).then_some(DecaySpec { margin, ..d })
}

fn build_config(cmd: Cmd) -> Result<RunConfig, String> {
    Ok(match cmd {
        Cmd::Mass(a) => {
            let n = a.model.n;
            RunConfig::Mass(MassRun {
                model: a.model.spec()?,
                settings: MassConfig {
                    radii: a.radii,
                    quadrature: quad(a.polar, a.azimuth, n),
                    noise_rel: a.noise_rel,
                    skip_decay_check: a.skip_decay_check,
                    decay: decay_spec(n, a.decay_margin),
                    eps: a.eps,
                },
            })
        }
        Cmd::Validate(a) => RunConfig::Validate(ValidateRun {
            decay: decay_spec(a.model.n, a.decay_margin),
            model: a.model.spec()?,
            radii: a.radii,
            l1: None,
            l1_r_max: a.l1_r_max,
        }),
        Cmd::Neck(a) => RunConfig::Neck(NeckRun {
            n: a.n,
            kappa: a.kappa,
            d: a.d,
            l: a.l,
            epsilon: a.epsilon,
            grid_size: a.grid_size,
            h_samples: a.h,
            d_values: a.d_values,
            l_values: a.l_values,
        }),
        Cmd::Hypothesis(a) => {
            let neck = a.kappa.map(|kappa| NeckSpec {
                kappa,
                d: a.d,
                l: a.l,
                delta: a.delta,
                epsilon: a.epsilon,
                grid_size: a.grid_size,
            });
            let curvature = match a.synthetic_r {
                Some(base) => CurvatureSource::Synthetic { base, neck: a.neck_r },
                None => CurvatureSource::Chart {
                    method: match a.method {
                        MethodArg::Auto => CurvatureMethod::Auto,
                        MethodArg::Analytic => CurvatureMethod::AnalyticRadial,
                        MethodArg::Fd => CurvatureMethod::FiniteDifference,
                    },
                },
            };
            RunConfig::Hypothesis(HypothesisRun {
                model: a.model.spec()?,
                neck,
                curvature,
                r_boundary: a.r_boundary,
                h_samples: a.h,
                tolerance: a.tolerance,
                directions: QuadSpec { polar: 2, azimuth: 4 },
                end_radii: 8,
            })
        }
        Cmd::Run { config } => {
            let text = fs::read_to_string(&config).map_err(|e| format!("{}: {e}", config.display()))?;
            serde_json::from_str(&text).map_err(|e| format!("{}: {e}", config.display()))?
        }
    })
}

fn configure_threads(flag: Option<usize>) -> Result<(), String> {
    let threads = match flag {
        Some(t) => Some(t),
        None => match std::env::var("AHMASS_THREADS") {
            Ok(v) => Some(v.trim().parse::<usize>().map_err(|_| format!("AHMASS_THREADS: not a count: {v:?}"))?),
            Err(_) => None,
        },
    };
    if let Some(t) = threads {
        if t == 0 {
            return Err("thread count must be positive".into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<i32, String> {
    configure_threads(cli.threads)?;
    let config = build_config(cli.command)?;
    if let Some(path) = &cli.save_config {
        let text = serde_json::to_string_pretty(&config).map_err(|e| e.to_string())?;
        fs::write(path, text + "\n").map_err(|e| format!("{}: {e}", path.display()))?;
    }
    let outcome = run(&config).map_err(|e| e.to_string())?;
    match &cli.out {
        Some(path) => fs::write(path, &outcome.json).map_err(|e| format!("{}: {e}", path.display()))?,
        None => std::io::stdout().write_all(outcome.json.as_bytes()).map_err(|e| e.to_string())?,
    }
    if let Some(dir) = &cli.csv_dir {
        fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
        for (name, body) in &outcome.csv {
            let path = dir.join(name);
            fs::write(&path, body).map_err(|e| format!("{}: {e}", path.display()))?;
        }
    }
    Ok(outcome.exit_code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match execute(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE as u8)
        }
    }
}
