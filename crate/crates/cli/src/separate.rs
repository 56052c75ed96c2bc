use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Result;
use clap::Args;
use mdiica::density::GridConfig;
use mdiica::study::Method;
use mdiica::{fit_whitening, recover_sources, SolverConfig};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::io::{matrix_csv, read_matrix, write_atomic};

#[derive(Debug, Args)]
pub struct SeparateArgs {
    /// CSV matrix, rows are samples and columns are channels
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_parser = parse_method)]
    method: Method,
    /// Seed for the random initial rotation
    #[arg(long, env = "MDIICA_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Histogram bins
    #[arg(long, default_value_t = GridConfig::default().bins)]
    grid_l: usize,
    /// Histogram half-width; the grid covers (-r, r]
    #[arg(long, default_value_t = GridConfig::default().half_width)]
    grid_range: f64,
    #[arg(long, default_value_t = SolverConfig::default().tol)]
    tol: f64,
    #[arg(long, default_value_t = SolverConfig::default().max_outer_iters)]
    max_iters: usize,
}

fn parse_method(s: &str) -> Result<Method, String> {
    Method::from_name(s).map_err(|e| e.to_string())
}

/// Everything needed to reproduce `sources.csv` from the input.
#[derive(Debug, Serialize, Deserialize)]
pub struct Sidecar {
    pub method: Method,
    pub seed: u64,
    pub n_samples: usize,
    /// Unmixing matrix in whitened coordinates, row-major.
    pub w: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
    pub whitener: Vec<Vec<f64>>,
    pub dewhitener: Vec<Vec<f64>>,
    pub basis: Vec<String>,
    /// Tilt coefficients per component; empty for FastICA.
    pub betas: Vec<Vec<f64>>,
    pub kl_initial: f64,
    pub kl_trace: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub wall_time_ms: f64,
}

fn rows(a: &DMatrix<f64>) -> Vec<Vec<f64>> {
    a.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub fn run(args: SeparateArgs) -> Result<ExitCode> {
    let input = read_matrix(&args.input)?;
    let cfg = SolverConfig {
        max_outer_iters: args.max_iters,
        tol: args.tol,
        grid: GridConfig {
            bins: args.grid_l,
            half_width: args.grid_range,
            ..GridConfig::default()
        },
        seed: args.seed,
        ..SolverConfig::default()
    };

    let start = Instant::now();
    let t = fit_whitening(&input.data)?;
    let whitened = t.apply(&input.data)?;
    let result = args.method.run(&whitened, &cfg)?;
    let sources = recover_sources(&result.w, &t, &input.data)?;
    let wall_time_ms = start.elapsed().as_secs_f64() * 1e3;

    let header = input
        .header
        .as_ref()
        .map(|_| (1..=t.dim()).map(|i| format!("s{i}")).collect::<Vec<_>>());
    write_atomic(&args.out.join("sources.csv"), matrix_csv(sources.values(), header.as_deref()).as_bytes())?;

    let basis = match result.tilts.first() {
        Some(tilt) => tilt.basis.functions().iter().map(|g| g.name().to_string()).collect(),
        None => Vec::new(),
    };
    let sidecar = Sidecar {
        method: args.method,
        seed: args.seed,
        n_samples: input.data.n_samples(),
        w: rows(result.w.matrix()),
        mean: t.mean.iter().copied().collect(),
        whitener: rows(&t.whitener),
        dewhitener: rows(&t.dewhitener),
        basis,
        betas: result.tilts.iter().map(|tilt| tilt.beta.clone()).collect(),
        kl_initial: result.kl_initial,
        kl_trace: result.kl_trace.clone(),
        converged: result.converged,
        iterations: result.iterations,
        wall_time_ms,
    };
    write_atomic(&args.out.join("model.json"), serde_json::to_string_pretty(&sidecar)?.as_bytes())?;

    if result.converged {
        eprintln!("{}: converged after {} iterations", args.method, result.iterations);
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("{}: no convergence within {} iterations", args.method, result.iterations);
        Ok(ExitCode::from(2))
    }
}
