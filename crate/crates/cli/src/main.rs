use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use mbq_cli::{execute, exit, output_dir, RunConfig, Scenario};

/// Lindblad transport simulator for a Majorana box qubit.
#[derive(Parser, Debug)]
#[command(name = "mbq", version = env!("MBQ_VERSION"))]
struct Args {
    /// Scenario to run.
    scenario: Scenario,
    /// JSON file of dotted keys (a run manifest also works).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one key, e.g. `--set params.lambda0=0.02`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory [default: $MBQ_OUT/<scenario> or out/<scenario>].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for grid points.
    #[arg(long, value_parser = clap::value_parser!(u16).range(1..))]
    jobs: Option<u16>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::USAGE } else { exit::SUCCESS });
        }
    };

    let mut cfg = RunConfig::defaults(args.scenario);
    let loaded = args
        .config
        .as_deref()
        .map_or(Ok(()), |p| cfg.apply_file(p))
        .and_then(|()| args.set.iter().try_for_each(|s| cfg.apply_override(s)))
        .and_then(|()| cfg.params().map(drop));
    if let Err(e) = loaded {
        eprintln!("error: {e}");
        return ExitCode::from(exit::USAGE);
    }

    let dir = output_dir(args.out, std::env::var_os("MBQ_OUT").map(PathBuf::from), args.scenario);
    log::info!("running {} into {}", args.scenario, dir.display());
    match execute(&cfg, dir, args.jobs.map(usize::from)) {
        Ok(o) => {
            for f in &o.written.failures {
                eprintln!("failure: {f}");
            }
            if o.exit_code == exit::SUCCESS {
                log::info!("wrote {} files to {}", o.written.files.len(), o.dir.display());
            } else {
                eprintln!(
                    "{} tolerance failure(s); outputs kept with .partial suffix in {}",
                    o.written.failures.len(),
                    o.dir.display()
                );
            }
            ExitCode::from(o.exit_code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit::IO)
        }
    }
}
