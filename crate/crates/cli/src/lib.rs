//! Scenario dispatch and reproducible output for the `mbq` command.

pub mod config;
mod output;

use std::path::PathBuf;
use std::time::Instant;

use clap::ValueEnum;
use mbq::experiments::{self, ScanResult};

pub use config::{ConfigError, RunConfig, Source};
pub use output::{write_outputs, OutputError, Written, MANIFEST};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Scenario {
    Spectrum,
    Iv,
    Flux,
    Temperature,
    Transient,
    Dephasing,
    Correlation,
    Psd,
    NgMap,
    Detuning,
    LiouvillianSpectrum,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Spectrum => "spectrum",
            Scenario::Iv => "iv",
            Scenario::Flux => "flux",
            Scenario::Temperature => "temperature",
            Scenario::Transient => "transient",
            Scenario::Dephasing => "dephasing",
            Scenario::Correlation => "correlation",
            Scenario::Psd => "psd",
            Scenario::NgMap => "ng-map",
            Scenario::Detuning => "detuning",
            Scenario::LiouvillianSpectrum => "liouvillian-spectrum",
        }
    }
}

pub mod exit {
    pub const SUCCESS: u8 = 0;
    pub const USAGE: u8 = 2;
    pub const NUMERICAL: u8 = 3;
    pub const IO: u8 = 4;
}

/// Runs the configured scenario. Errors here are numerical or domain
/// failures of the runner itself.
pub fn run_scenario(cfg: &RunConfig) -> Result<ScanResult, RunError> {
    let p = cfg.params()?;
    let s = cfg.scenario;
    let r = match s {
        Scenario::Spectrum => experiments::run_spectrum(&p, &cfg.grid("phi")?.values()),
        Scenario::Iv => experiments::run_iv_narrow(&p, &cfg.grid("mu2")?.values(), cfg.float_value("iv.window")),
        Scenario::Flux => experiments::run_flux_sweep(&p, &cfg.grid("phi")?.values(), &cfg.list("flux.lambda0")),
        Scenario::Temperature => {
            experiments::run_temperature_sweep(&p, &cfg.grid("phi")?.values(), &cfg.list("temperature.values"))
        }
        Scenario::Transient => experiments::run_readout_transient(&p, &cfg.grid("t")?.values()),
        Scenario::Dephasing => experiments::run_dephasing(&p, &cfg.grid("t")?.values(), &cfg.list("dephasing.lambda0")),
        Scenario::Correlation => experiments::run_correlation(&p, &cfg.grid("t")?.values(), &cfg.noise_variants()),
        Scenario::Psd => experiments::run_psd(&p, &cfg.grid("omega")?.values(), &cfg.noise_variants()),
        Scenario::NgMap => experiments::run_ng_flux_map(&p, &cfg.grid("ng")?.values(), &cfg.grid("phi")?.values()),
        Scenario::Detuning => experiments::run_dot_detuning(&p, &cfg.grid("eps")?.values(), cfg.pattern()),
        Scenario::LiouvillianSpectrum => experiments::run_liouvillian_spectrum(&p),
    };
    Ok(r?)
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Numerics(#[from] mbq::Error),
}

/// Outcome of a complete invocation.
#[derive(Debug)]
pub struct Outcome {
    pub dir: PathBuf,
    pub written: Written,
    pub exit_code: u8,
}

/// Runs `cfg` and writes its outputs into `dir`. Tolerance failures and
/// runner errors still produce a manifest; data files then carry the
/// `.partial` suffix.
pub fn execute(cfg: &RunConfig, dir: PathBuf, jobs: Option<usize>) -> Result<Outcome, OutputError> {
    let start = Instant::now();
    let result = match jobs {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| run_scenario(cfg)),
            Err(e) => return Err(OutputError::Pool(e.to_string())),
        },
        None => run_scenario(cfg),
    };
    let elapsed = start.elapsed().as_secs_f64();
    let threads = jobs.unwrap_or_else(rayon::current_num_threads);
    let written = write_outputs(cfg, &dir, &result, elapsed, threads)?;
    let exit_code = if written.failures.is_empty() && result.is_ok() {
        exit::SUCCESS
    } else {
        exit::NUMERICAL
    };
    Ok(Outcome {
        dir,
        written,
        exit_code,
    })
}

/// Output directory: `--out`, else `$MBQ_OUT/<scenario>`, else
/// `out/<scenario>`.
pub fn output_dir(out: Option<PathBuf>, env_root: Option<PathBuf>, scenario: Scenario) -> PathBuf {
    out.unwrap_or_else(|| env_root.unwrap_or_else(|| PathBuf::from("out")).join(scenario.name()))
}
