//! Command implementations behind the `convexbp` binary. Argument parsing
//! lives in `main.rs`; everything here takes a validated [`RunConfig`].

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::forward::{MeansData, WaveData};
use crate::geometry::ConvexDomain;
use crate::grid::GridImage;
use crate::inversion::{self, Formula, InversionConfig, SimConfig, Targets};
use crate::io::{self, DomainSpec};
use crate::metrics::{error_metrics, ErrorMetrics};
use crate::phantom::{Field2, Phantom};
use crate::radon_hilbert::{KernelCache, KernelConfig, KernelProfile};

pub const METADATA_FILE: &str = "run.jsonl";

/// Where the forward simulator takes `f` from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Sampling {
    /// evaluate the bump phantom pointwise
    Exact,
    /// rasterize on the image grid first, then sample bilinearly
    Grid,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub domain: DomainSpec,
    /// written to `phantom.txt` instead
    #[serde(skip)]
    pub phantom: Option<Phantom>,
    pub n_boundary: usize,
    pub n_radii: usize,
    pub n_times: usize,
    pub n_angles: usize,
    pub grid: usize,
    pub tmax_factor: f64,
    pub formula: Formula,
    pub seed: u64,
    /// bumps drawn when no phantom is given
    pub random_bumps: usize,
    pub sample: Sampling,
    pub out: PathBuf,
    #[serde(skip)]
    pub threads: Option<usize>,
    pub kernel: KernelConfig,
    pub inversion: InversionConfig,
}

impl RunConfig {
    pub fn new(domain: DomainSpec, out: PathBuf) -> Self {
        let sim = SimConfig::default();
        Self {
            domain,
            phantom: None,
            n_boundary: 256,
            n_radii: sim.n_r,
            n_times: sim.n_t,
            n_angles: sim.n_ang,
            grid: 128,
            tmax_factor: sim.tmax_factor,
            formula: Formula::WaveB,
            seed: crate::phantom::DEFAULT_SEED,
            random_bumps: 3,
            sample: Sampling::Exact,
            out,
            threads: None,
            kernel: KernelConfig::default(),
            inversion: InversionConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("boundary nodes", self.n_boundary),
            ("radii", self.n_radii),
            ("times", self.n_times),
            ("angles", self.n_angles),
            ("grid", self.grid),
        ];
        for (what, n) in counts {
            if n < 8 {
                return Err(Error::Config(format!("{what} must be at least 8, got {n}")));
            }
        }
        if !(self.tmax_factor >= 2.0 && self.tmax_factor.is_finite()) {
            return Err(Error::Config(format!("T_max factor must be at least 2, got {}", self.tmax_factor)));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("thread count must be positive".into()));
        }
        Ok(())
    }

    pub fn sim(&self) -> SimConfig {
        SimConfig { n_r: self.n_radii, n_t: self.n_times, n_ang: self.n_angles, tmax_factor: self.tmax_factor }
    }

    pub fn build_domain(&self) -> Result<ConvexDomain> {
        self.domain.build(self.n_boundary)
    }

    pub fn targets(&self, domain: &ConvexDomain) -> Result<Targets> {
        Targets::covering(domain, self.grid, self.inversion.margin_pixels)
    }

    /// The configured phantom, or `random_bumps` random bumps drawn from `seed`.
    pub fn resolve_phantom(&self, domain: &ConvexDomain, targets: &Targets) -> Result<Phantom> {
        match &self.phantom {
            Some(p) => Ok(p.clone()),
            None => Phantom::random(domain, self.random_bumps, self.seed, targets.margin),
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

/// Process exit code for an error: 1 numeric, 2 usage/config, 3 I/O.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) => 3,
        Error::DegeneratePair { .. }
        | Error::RootFindFailure { .. }
        | Error::OutOfValidRange { .. }
        | Error::BadDistance { .. } => 1,
        Error::InvalidDomain(_)
        | Error::NonConvex(_)
        | Error::SupportViolation(_)
        | Error::LatticeMismatch(_)
        | Error::Config(_)
        | Error::Format { .. } => 2,
    }
}

#[derive(Serialize)]
struct Record<'a, T: Serialize> {
    command: &'a str,
    config: &'a RunConfig,
    #[serde(flatten)]
    extra: T,
}

fn log_run(cfg: &RunConfig, command: &str, extra: impl Serialize) -> Result<()> {
    io::append_json_line(&cfg.path(METADATA_FILE), &Record { command, config: cfg, extra })
}

fn prepare_out(cfg: &RunConfig) -> Result<()> {
    fs::create_dir_all(&cfg.out)?;
    Ok(())
}

/// `f` as seen by the simulator, per the sampling mode.
fn field_for(cfg: &RunConfig, phantom: &Phantom, domain: &ConvexDomain, targets: &Targets) -> Result<Box<dyn Field2>> {
    phantom.check_support(domain, targets.margin)?;
    Ok(match cfg.sample {
        Sampling::Exact => Box::new(phantom.clone()),
        Sampling::Grid => Box::new(phantom.rasterize(targets.lattice)),
    })
}

#[derive(Serialize)]
struct SimMeta {
    t_max: f64,
    r_max: f64,
    diameter: f64,
}

pub struct Simulated {
    pub means: MeansData,
    pub wave: WaveData,
    pub phantom: Phantom,
}

/// Forward data for the configured phantom; writes `means.bser`,
/// `wave.bser` and `phantom.txt`.
pub fn cmd_simulate(cfg: &RunConfig) -> Result<Simulated> {
    prepare_out(cfg)?;
    let domain = cfg.build_domain()?;
    let targets = cfg.targets(&domain)?;
    let phantom = cfg.resolve_phantom(&domain, &targets)?;
    let f = field_for(cfg, &phantom, &domain, &targets)?;
    let (means, wave) = inversion::simulate(f.as_ref(), &domain, &cfg.sim())?;
    io::write_means(&means, &cfg.path("means.bser"))?;
    io::write_wave(&wave, &cfg.path("wave.bser"))?;
    io::write_phantom(&phantom, &cfg.path("phantom.txt"))?;
    let meta = SimMeta { t_max: wave.t_max(), r_max: means.r_max(), diameter: domain.diameter() };
    log_run(cfg, "simulate", meta)?;
    Ok(Simulated { means, wave, phantom })
}

#[derive(Clone, Debug, Serialize)]
pub struct ReconstructReport {
    pub formula: Formula,
    pub metrics: Option<ErrorMetrics>,
    /// relative L2 difference to a second formula on the same data
    pub cross_difference: Option<(Formula, f64)>,
    pub margin: f64,
    pub n_targets: usize,
}

/// Data for one reconstruction; whichever table the formula needs must be present.
pub struct DataSet {
    pub means: Option<MeansData>,
    pub wave: Option<WaveData>,
}

impl DataSet {
    /// Reads the files the given formulas need.
    pub fn load(means: &Path, wave: &Path, formulas: &[Formula]) -> Result<Self> {
        let need_means = formulas.iter().any(|f| f.uses_means());
        let need_wave = formulas.iter().any(|f| !f.uses_means());
        Ok(Self {
            means: if need_means { Some(io::read_means(means)?) } else { None },
            wave: if need_wave { Some(io::read_wave(wave)?) } else { None },
        })
    }
}

fn reconstruct_with(cfg: &RunConfig, domain: &ConvexDomain, targets: &Targets, data: &DataSet, formula: Formula) -> Result<GridImage> {
    inversion::back_project(domain, formula, data.wave.as_ref(), data.means.as_ref(), targets, &cfg.inversion)
}

/// Back-projection with `cfg.formula`; writes `recon.grid2` and
/// `metrics.json`. With a reference phantom the errors are reported, with
/// `compare` also the difference to a second formula.
pub fn cmd_reconstruct(
    cfg: &RunConfig,
    data: &DataSet,
    reference: Option<&Phantom>,
    compare: Option<Formula>,
) -> Result<(GridImage, ReconstructReport)> {
    prepare_out(cfg)?;
    let domain = cfg.build_domain()?;
    let targets = cfg.targets(&domain)?;
    let recon = reconstruct_with(cfg, &domain, &targets, data, cfg.formula)?;
    io::write_grid2(&recon, &cfg.path("recon.grid2"))?;
    let metrics = match reference {
        Some(p) => {
            let truth = p.rasterize(targets.lattice);
            Some(error_metrics(&recon, &truth, Some(&targets.mask))?)
        }
        None => None,
    };
    let cross_difference = match compare {
        Some(other) => {
            let alt = reconstruct_with(cfg, &domain, &targets, data, other)?;
            Some((other, inversion::cross_difference(&recon, &alt, &targets)?))
        }
        None => None,
    };
    let report = ReconstructReport {
        formula: cfg.formula,
        metrics,
        cross_difference,
        margin: targets.margin,
        n_targets: targets.mask.iter().filter(|&&m| m).count(),
    };
    io::write_json(&cfg.path("metrics.json"), &report)?;
    log_run(cfg, "reconstruct", &report)?;
    Ok((recon, report))
}

/// Simulate, reconstruct and score in one pass.
pub fn cmd_roundtrip(cfg: &RunConfig, compare: Option<Formula>) -> Result<(GridImage, ReconstructReport)> {
    let sim = cmd_simulate(cfg)?;
    let data = DataSet { means: Some(sim.means), wave: Some(sim.wave) };
    cmd_reconstruct(cfg, &data, Some(&sim.phantom), compare)
}

#[derive(Clone, Debug, Serialize)]
pub struct GapReport {
    pub rel_gap: f64,
    pub residual_rel_l2: f64,
    pub kernel_rel_l2: f64,
    pub da_rel: f64,
    pub n_dirs: usize,
}

/// `f - BP f` against `K f` on the image grid; writes
/// `kernel_field.grid2`, `residual.grid2` and `gap.json`.
pub fn cmd_kernel(cfg: &RunConfig, dump_profiles: Option<(&Path, usize)>) -> Result<GapReport> {
    prepare_out(cfg)?;
    let domain = cfg.build_domain()?;
    let targets = cfg.targets(&domain)?;
    let phantom = cfg.resolve_phantom(&domain, &targets)?;
    let f = field_for(cfg, &phantom, &domain, &targets)?;
    let f_grid = phantom.rasterize(targets.lattice);
    let rep =
        inversion::residual_vs_kernel(&domain, f.as_ref(), &f_grid, &targets, &cfg.sim(), &cfg.inversion, cfg.kernel)?;
    io::write_grid2(&rep.kernel_field, &cfg.path("kernel_field.grid2"))?;
    io::write_grid2(&rep.residual, &cfg.path("residual.grid2"))?;
    let norm_f = masked_norm(&f_grid, &targets.mask).max(f64::MIN_POSITIVE);
    let report = GapReport {
        rel_gap: rep.rel_gap,
        residual_rel_l2: masked_norm(&rep.residual, &targets.mask) / norm_f,
        kernel_rel_l2: masked_norm(&rep.kernel_field, &targets.mask) / norm_f,
        da_rel: cfg.kernel.da_rel,
        n_dirs: cfg.kernel.n_dirs,
    };
    io::write_json(&cfg.path("gap.json"), &report)?;
    if let Some((dir, stride)) = dump_profiles {
        dump_kernel_profiles(&domain, cfg.kernel, dir, stride)?;
    }
    log_run(cfg, "kernel", &report)?;
    Ok(report)
}

fn masked_norm(img: &GridImage, mask: &[bool]) -> f64 {
    img.values.iter().zip(mask).filter(|(_, &m)| m).map(|(v, _)| v * v).sum::<f64>().sqrt()
}

/// Writes every `stride`-th cached kernel profile as a text matrix with
/// columns `a`, `H R χ`, `∂_a² H R χ`, `valid` (1 inside the trusted range).
pub fn dump_kernel_profiles(domain: &ConvexDomain, kernel: KernelConfig, dir: &Path, stride: usize) -> Result<usize> {
    fs::create_dir_all(dir)?;
    let cache = KernelCache::new(domain, kernel)?;
    let stride = stride.max(1);
    let mut written = 0;
    for k in (0..kernel.n_dirs).step_by(stride) {
        let p = cache.profile(k)?;
        fs::write(dir.join(format!("profile_{k:04}.txt")), format_profile(p))?;
        written += 1;
    }
    Ok(written)
}

fn format_profile(p: &KernelProfile) -> String {
    let mut s = String::new();
    writeln!(s, "# n = ({:.16e}, {:.16e})", p.n.x, p.n.y).unwrap();
    writeln!(s, "# valid_range = [{:.16e}, {:.16e}]", p.valid_range.0, p.valid_range.1).unwrap();
    writeln!(s, "# a hilbert d2 valid").unwrap();
    for k in 0..p.table.len() {
        let a = p.table.node(k);
        let valid = a >= p.valid_range.0 && a <= p.valid_range.1;
        writeln!(s, "{a:.16e} {:.16e} {:.16e} {}", p.hilbert.values[k], p.table.values[k], valid as u8).unwrap();
    }
    s
}

/// Writes the resolved phantom as `phantom.txt` and its raster as `phantom.grid2`.
pub fn cmd_phantom(cfg: &RunConfig) -> Result<Phantom> {
    prepare_out(cfg)?;
    let domain = cfg.build_domain()?;
    let targets = cfg.targets(&domain)?;
    let phantom = cfg.resolve_phantom(&domain, &targets)?;
    let img = phantom.rasterize_checked(&domain, targets.lattice, targets.margin)?;
    io::write_phantom(&phantom, &cfg.path("phantom.txt"))?;
    io::write_grid2(&img, &cfg.path("phantom.grid2"))?;
    log_run(cfg, "phantom", SimMeta { t_max: cfg.sim().t_max(&domain), r_max: domain.diameter(), diameter: domain.diameter() })?;
    Ok(phantom)
}

/// `wave-b` style names of all formulas, for help texts.
pub fn formula_names() -> String {
    Formula::ALL.iter().map(|f| f.as_str()).collect::<Vec<_>>().join("|")
}
