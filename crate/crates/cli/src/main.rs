use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use magband::Error;

mod commands;
mod config;
mod output;

use config::{Command, RunConfig, UsageError};

#[derive(Parser)]
#[command(
    name = "magband",
    version,
    about = "Flux sweeps and band-edge probes for magnetic lattice operators"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand)]
enum Cmd {
    /// Full spectrum over a flux grid
    Butterfly,
    /// Band edges with Lipschitz and Hausdorff probes
    Edges,
    /// Track a spectral gap and cross-check its edges with projectors
    Gaptrack,
    /// Run the identity and inequality suite
    Verify,
    /// Heat-kernel identities
    Heatcheck,
    /// Weighted resolvent decay near the top of the spectrum
    Resolventdecay,
    /// Lowest band of the discretized continuum operator
    Continuum,
}

/// Every flag maps to the configuration key of the same name with `-`
/// replaced by `_`, and is parsed by [`RunConfig::set`].
#[derive(Args)]
struct Flags {
    /// Flat key=value file applied before the flags
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// harper, expdecay, powerdecay, staggered or bdependent
    #[arg(long, global = true)]
    model: Option<String>,
    /// Base family of a bdependent model
    #[arg(long, global = true)]
    base: Option<String>,
    #[arg(long, global = true)]
    mass: Option<String>,
    #[arg(long, global = true)]
    rate: Option<String>,
    #[arg(long, global = true)]
    exponent: Option<String>,
    #[arg(long, global = true)]
    modulation_scale: Option<String>,
    #[arg(long, global = true)]
    n_side: Option<String>,
    /// Deformation amplitude; positive values use the deformed lattice
    #[arg(long, global = true)]
    amplitude: Option<String>,
    #[arg(long, global = true)]
    seed: Option<String>,
    /// linear or geometric
    #[arg(long, global = true)]
    grid: Option<String>,
    #[arg(long, global = true)]
    flux_min: Option<String>,
    #[arg(long, global = true)]
    flux_max: Option<String>,
    #[arg(long, global = true)]
    flux_steps: Option<String>,
    #[arg(long, global = true)]
    b0: Option<String>,
    #[arg(long, global = true)]
    geometric_k_min: Option<String>,
    #[arg(long, global = true)]
    geometric_k_max: Option<String>,
    /// Minimum gap width, or "none" for the default
    #[arg(long, global = true)]
    gap_min_width: Option<String>,
    #[arg(long, global = true)]
    bound_factor: Option<String>,
    #[arg(long, global = true)]
    quadrature_nodes: Option<String>,
    #[arg(long, global = true)]
    grid_n: Option<String>,
    #[arg(long, global = true)]
    spacing: Option<String>,
    #[arg(long, global = true)]
    strength: Option<String>,
    #[arg(long, global = true)]
    period: Option<String>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<String>,
    /// SVG scatter of the sweep
    #[arg(long, global = true)]
    svg: Option<String>,
}

impl Flags {
    fn pairs(&self) -> Vec<(&'static str, &Option<String>)> {
        vec![
            ("model", &self.model),
            ("base", &self.base),
            ("mass", &self.mass),
            ("rate", &self.rate),
            ("exponent", &self.exponent),
            ("modulation_scale", &self.modulation_scale),
            ("n_side", &self.n_side),
            ("amplitude", &self.amplitude),
            ("seed", &self.seed),
            ("grid", &self.grid),
            ("flux_min", &self.flux_min),
            ("flux_max", &self.flux_max),
            ("flux_steps", &self.flux_steps),
            ("b0", &self.b0),
            ("geometric_k_min", &self.geometric_k_min),
            ("geometric_k_max", &self.geometric_k_max),
            ("gap_min_width", &self.gap_min_width),
            ("bound_factor", &self.bound_factor),
            ("quadrature_nodes", &self.quadrature_nodes),
            ("grid_n", &self.grid_n),
            ("spacing", &self.spacing),
            ("strength", &self.strength),
            ("period", &self.period),
            ("out", &self.out),
            ("svg", &self.svg),
        ]
    }
}

fn resolve(cli: &Cli) -> Result<RunConfig, UsageError> {
    let command = match cli.command {
        Cmd::Butterfly => Command::Butterfly,
        Cmd::Edges => Command::Edges,
        Cmd::Gaptrack => Command::Gaptrack,
        Cmd::Verify => Command::Verify,
        Cmd::Heatcheck => Command::Heatcheck,
        Cmd::Resolventdecay => Command::Resolventdecay,
        Cmd::Continuum => Command::Continuum,
    };
    let mut cfg = RunConfig::defaults(command);
    if let Some(path) = &cli.flags.config {
        cfg.apply_file(path)?;
    }
    for (key, value) in cli.flags.pairs() {
        if let Some(v) = value {
            cfg.set(key, v)?;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn artifact_name(cfg: &RunConfig, ext: &str) -> PathBuf {
    let name = serde_json::to_value(cfg.command).expect("enum serializes");
    cfg.out
        .join(format!("{}.{ext}", name.as_str().expect("string")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match resolve(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let outcome = match commands::run(&cfg) {
        Ok(o) => o,
        Err(e @ Error::InvalidParameter(_)) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let pass = outcome.reports.iter().all(|r| r.is_ok());

    let mut files = vec![(
        artifact_name(&cfg, "json"),
        output::run_json(&cfg, &outcome.reports, pass),
    )];
    if let Some(table) = &outcome.table {
        files.push((artifact_name(&cfg, "csv"), table.to_csv(&cfg)));
    }
    if let (Some(path), Some(sweep)) = (&cfg.svg, &outcome.sweep) {
        files.push((path.clone(), output::scatter_svg(sweep)));
    }
    for (path, contents) in &files {
        if let Err(e) = output::write(path, contents) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return ExitCode::from(1);
        }
    }

    for r in &outcome.reports {
        let status = if r.pass {
            "pass"
        } else if r.report_only {
            "fail (report only)"
        } else {
            "FAIL"
        };
        println!("{:<32} {status}", r.probe);
    }
    for r in outcome.reports.iter().filter(|r| !r.is_ok()) {
        eprintln!(
            "{}",
            serde_json::to_string_pretty(r).expect("report serializes")
        );
    }
    if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
