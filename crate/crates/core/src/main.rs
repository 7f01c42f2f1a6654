use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use convexbp::cli::{self, DataSet, RunConfig, Sampling};
use convexbp::inversion::Formula;
use convexbp::{io, Error};

#[derive(Parser)]
#[command(name = "convexbp", version, about = "Back-projection inversion on convex domains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate circular means and wave traces (means.bser, wave.bser)
    Simulate(Common),
    /// Reconstruct from data files (recon.grid2, metrics.json)
    Reconstruct {
        #[command(flatten)]
        common: Common,
        /// Means data file [default: OUT/means.bser]
        #[arg(long, value_name = "FILE")]
        means: Option<PathBuf>,
        /// Wave data file [default: OUT/wave.bser]
        #[arg(long, value_name = "FILE")]
        wave: Option<PathBuf>,
        /// Also reconstruct with this formula and report the difference
        #[arg(long, value_name = "FORMULA")]
        compare: Option<Formula>,
        /// Exit with code 1 when the error against the phantom exceeds this
        #[arg(long, value_name = "TOL")]
        max_rel_l2: Option<f64>,
    },
    /// Compare f - BP f with the smoothing operator (kernel_field.grid2, residual.grid2, gap.json)
    Kernel {
        #[command(flatten)]
        common: Common,
        /// Relative offset step of the kernel profiles
        #[arg(long, value_name = "F", default_value_t = 1e-3)]
        da_rel: f64,
        /// Number of cached profile directions
        #[arg(long, value_name = "N", default_value_t = 1024)]
        n_dirs: usize,
        /// Write kernel profiles as text tables into DIR
        #[arg(long, value_name = "DIR")]
        dump_profiles: Option<PathBuf>,
        /// Dump every N-th cached direction
        #[arg(long, value_name = "N", default_value_t = 16)]
        dump_stride: usize,
        /// Exit with code 1 when the relative gap exceeds this
        #[arg(long, value_name = "TOL")]
        max_gap: Option<f64>,
    },
    /// Write the phantom (phantom.txt, phantom.grid2)
    Phantom(Common),
    /// Simulate, reconstruct and score in one run
    Roundtrip {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "FORMULA")]
        compare: Option<Formula>,
        #[arg(long, value_name = "TOL")]
        max_rel_l2: Option<f64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SampleArg {
    Exact,
    Grid,
}

#[derive(Args)]
struct Common {
    /// Domain spec file (`disc cx cy r`, `ellipse cx cy a b`, `superellipse cx cy a b p`)
    #[arg(long, value_name = "FILE")]
    domain: PathBuf,
    /// Phantom file with `bump cx cy rho amp` lines [default: random bumps from --seed]
    #[arg(long, value_name = "FILE")]
    phantom: Option<PathBuf>,
    #[arg(long, default_value = "wave-b", value_name = "wave-a|wave-b|means-a|means-b")]
    formula: Formula,
    /// Boundary nodes
    #[arg(long, default_value_t = 256)]
    nb: usize,
    /// Radii of the circular means
    #[arg(long, default_value_t = 1024)]
    nr: usize,
    /// Time samples
    #[arg(long, default_value_t = 2048)]
    nt: usize,
    /// Angular nodes per circular mean
    #[arg(long, default_value_t = 512)]
    nang: usize,
    /// Image size (N x N)
    #[arg(long, default_value_t = 128)]
    grid: usize,
    /// T_max as a multiple of the domain diameter
    #[arg(long, default_value_t = 8.0)]
    tmax_factor: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Worker threads [default: all cores]
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, default_value = "out", value_name = "DIR")]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "exact")]
    sample: SampleArg,
}

impl Common {
    fn config(&self) -> convexbp::Result<RunConfig> {
        let domain = io::read_domain_spec(&self.domain)?;
        let mut cfg = RunConfig::new(domain, self.out.clone());
        cfg.phantom = self.phantom.as_deref().map(io::read_phantom).transpose()?;
        cfg.formula = self.formula;
        cfg.n_boundary = self.nb;
        cfg.n_radii = self.nr;
        cfg.n_times = self.nt;
        cfg.n_angles = self.nang;
        cfg.grid = self.grid;
        cfg.tmax_factor = self.tmax_factor;
        cfg.seed = self.seed;
        cfg.threads = self.threads;
        cfg.sample = match self.sample {
            SampleArg::Exact => Sampling::Exact,
            SampleArg::Grid => Sampling::Grid,
        };
        Ok(cfg)
    }
}

enum Failure {
    Lib(Error),
    Tolerance(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn check_tol(what: &str, value: f64, tol: Option<f64>) -> Result<(), Failure> {
    match tol {
        Some(t) if !(value <= t) => Err(Failure::Tolerance(format!("{what} = {value:.3e} exceeds {t:.3e}"))),
        _ => Ok(()),
    }
}

fn with_threads<T>(cfg: &RunConfig, job: impl FnOnce() -> T + Send) -> Result<T, Failure>
where
    T: Send,
{
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Error::Config(e.to_string()))?;
    Ok(pool.install(job))
}

fn run(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Simulate(common) => {
            let cfg = common.config()?;
            cfg.validate()?;
            let sim = with_threads(&cfg, || cli::cmd_simulate(&cfg))??;
            println!("wrote {} means and wave traces to {}", sim.means.n_centers(), cfg.out.display());
        }
        Command::Reconstruct { common, means, wave, compare, max_rel_l2 } => {
            let cfg = common.config()?;
            cfg.validate()?;
            let means = means.unwrap_or_else(|| cfg.out.join("means.bser"));
            let wave = wave.unwrap_or_else(|| cfg.out.join("wave.bser"));
            let formulas: Vec<Formula> = std::iter::once(cfg.formula).chain(compare).collect();
            let data = DataSet::load(&means, &wave, &formulas)?;
            let (_, report) = with_threads(&cfg, || cli::cmd_reconstruct(&cfg, &data, cfg.phantom.as_ref(), compare))??;
            print_report(&report);
            if let Some(m) = &report.metrics {
                check_tol("rel_l2", m.rel_l2, max_rel_l2)?;
            }
        }
        Command::Roundtrip { common, compare, max_rel_l2 } => {
            let cfg = common.config()?;
            cfg.validate()?;
            let (_, report) = with_threads(&cfg, || cli::cmd_roundtrip(&cfg, compare))??;
            print_report(&report);
            if let Some(m) = &report.metrics {
                check_tol("rel_l2", m.rel_l2, max_rel_l2)?;
            }
        }
        Command::Kernel { common, da_rel, n_dirs, dump_profiles, dump_stride, max_gap } => {
            let mut cfg = common.config()?;
            cfg.kernel.da_rel = da_rel;
            cfg.kernel.n_dirs = n_dirs;
            cfg.validate()?;
            let dump = dump_profiles.as_deref().map(|d| (d, dump_stride));
            let report = with_threads(&cfg, || cli::cmd_kernel(&cfg, dump))??;
            println!(
                "rel_gap {:.4e}  |f - BP f|/|f| {:.4e}  |K f|/|f| {:.4e}",
                report.rel_gap, report.residual_rel_l2, report.kernel_rel_l2
            );
            check_tol("rel_gap", report.rel_gap, max_gap)?;
        }
        Command::Phantom(common) => {
            let cfg = common.config()?;
            cfg.validate()?;
            let p = with_threads(&cfg, || cli::cmd_phantom(&cfg))??;
            println!("wrote {} bumps to {}", p.bumps.len(), cfg.out.display());
        }
    }
    Ok(())
}

fn print_report(report: &cli::ReconstructReport) {
    print!("{}", report.formula);
    if let Some(m) = &report.metrics {
        print!("  rel_l2 {:.4e}  rel_linf {:.4e}", m.rel_l2, m.rel_linf);
    }
    if let Some((other, d)) = report.cross_difference {
        print!("  vs {other}: {d:.4e}");
    }
    println!();
}

fn main() -> ExitCode {
    // clap exits with code 2 on usage errors
    let args = Cli::parse();
    match run(args.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(cli::exit_code(&e) as u8)
        }
        Err(Failure::Tolerance(msg)) => {
            eprintln!("check failed: {msg}");
            ExitCode::from(1)
        }
    }
}
