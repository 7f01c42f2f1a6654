//! Python bindings. Images and boundary tables cross the boundary as plain
//! lists so the module has no dependency on numpy.

use std::str::FromStr;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use convexbp::forward::{BoundaryTable, MeansData, WaveData};
use convexbp::inversion::{self, Formula, InversionConfig, SimConfig, Targets};
use convexbp::radon_hilbert::{self, KernelCache, KernelConfig};
use convexbp::{io, metrics, Bump, DirOffset, Error, Field2, GridImage, Point2};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io(_) => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn pt((x, y): (f64, f64)) -> Point2 {
    Point2::new(x, y)
}

#[pyclass(name = "ConvexDomain", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyDomain(convexbp::ConvexDomain);

#[pymethods]
impl PyDomain {
    #[staticmethod]
    #[pyo3(signature = (center, radius, n_nodes = 256))]
    fn disc(center: (f64, f64), radius: f64, n_nodes: usize) -> PyResult<Self> {
        convexbp::ConvexDomain::disc(pt(center), radius, n_nodes).map(Self).map_err(py_err)
    }

    #[staticmethod]
    #[pyo3(signature = (center, a, b, n_nodes = 256))]
    fn ellipse(center: (f64, f64), a: f64, b: f64, n_nodes: usize) -> PyResult<Self> {
        convexbp::ConvexDomain::ellipse(pt(center), (a, b), n_nodes).map(Self).map_err(py_err)
    }

    #[staticmethod]
    #[pyo3(signature = (center, a, b, p, n_nodes = 256))]
    fn superellipse(center: (f64, f64), a: f64, b: f64, p: f64, n_nodes: usize) -> PyResult<Self> {
        convexbp::ConvexDomain::superellipse(pt(center), a, b, p, n_nodes).map(Self).map_err(py_err)
    }

    /// Reads a one-line domain spec file.
    #[staticmethod]
    #[pyo3(signature = (path, n_nodes = 256))]
    fn from_file(path: &str, n_nodes: usize) -> PyResult<Self> {
        let spec = io::read_domain_spec(path.as_ref()).map_err(py_err)?;
        spec.build(n_nodes).map(Self).map_err(py_err)
    }

    #[getter]
    fn diameter(&self) -> f64 {
        self.0.diameter()
    }

    #[getter]
    fn area(&self) -> f64 {
        self.0.area()
    }

    #[getter]
    fn n_nodes(&self) -> usize {
        self.0.nodes().len()
    }

    fn nodes(&self) -> Vec<(f64, f64)> {
        self.0.nodes().iter().map(|n| (n.point.x, n.point.y)).collect()
    }

    fn contains(&self, p: (f64, f64)) -> bool {
        self.0.contains(pt(p))
    }

    fn support(&self, alpha: f64) -> f64 {
        self.0.support(Point2::from_angle(alpha))
    }

    /// Length of the chord `{x : x . n(alpha) = a}`.
    fn chord_length(&self, alpha: f64, a: f64) -> PyResult<f64> {
        self.0.chord_length(DirOffset { n: Point2::from_angle(alpha), a }).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!("ConvexDomain({:?}, n_nodes={})", self.0.kind(), self.0.nodes().len())
    }
}

#[pyclass(name = "Image", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyImage(GridImage);

#[pymethods]
impl PyImage {
    #[getter]
    fn shape(&self) -> (usize, usize) {
        (self.0.ny, self.0.nx)
    }

    #[getter]
    fn origin(&self) -> (f64, f64) {
        (self.0.origin.x, self.0.origin.y)
    }

    #[getter]
    fn spacing(&self) -> (f64, f64) {
        self.0.spacing
    }

    /// Row-major values, rows ordered by increasing `y`.
    fn values(&self) -> Vec<Vec<f64>> {
        self.0.values.chunks(self.0.nx).map(|r| r.to_vec()).collect()
    }

    fn max_abs(&self) -> f64 {
        self.0.max_abs()
    }

    fn save(&self, path: &str) -> PyResult<()> {
        io::write_grid2(&self.0, path.as_ref()).map_err(py_err)
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        io::read_grid2(path.as_ref()).map(Self).map_err(py_err)
    }
}

#[pyclass(name = "Phantom", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyPhantom(convexbp::Phantom);

#[pymethods]
impl PyPhantom {
    /// `bumps` is a list of `(cx, cy, radius, amplitude)`.
    #[new]
    fn new(bumps: Vec<(f64, f64, f64, f64)>) -> PyResult<Self> {
        if bumps.iter().any(|b| !(b.2 > 0.0)) {
            return Err(PyValueError::new_err("bump radius must be positive"));
        }
        let bumps = bumps.into_iter().map(|(x, y, r, a)| Bump { center: Point2::new(x, y), radius: r, amplitude: a });
        Ok(Self(convexbp::Phantom::new(bumps.collect())))
    }

    #[staticmethod]
    #[pyo3(signature = (domain, count = 3, seed = 42, margin = 0.0))]
    fn random(domain: &PyDomain, count: usize, seed: u64, margin: f64) -> PyResult<Self> {
        convexbp::Phantom::random(&domain.0, count, seed, margin).map(Self).map_err(py_err)
    }

    #[staticmethod]
    fn three_bumps(b: f64) -> Self {
        Self(convexbp::Phantom::three_bumps(b))
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        io::read_phantom(path.as_ref()).map(Self).map_err(py_err)
    }

    fn bumps(&self) -> Vec<(f64, f64, f64, f64)> {
        self.0.bumps.iter().map(|b| (b.center.x, b.center.y, b.radius, b.amplitude)).collect()
    }

    fn eval(&self, p: (f64, f64)) -> f64 {
        self.0.eval(pt(p))
    }

    fn circle_mean(&self, center: (f64, f64), r: f64, n_ang: usize) -> f64 {
        self.0.circle_mean(pt(center), r, n_ang)
    }

    /// Samples the phantom on the `n x n` lattice covering `domain`.
    fn rasterize(&self, domain: &PyDomain, n: usize) -> PyResult<PyImage> {
        let lat = convexbp::Lattice::covering(&domain.0, n).map_err(py_err)?;
        Ok(PyImage(self.0.rasterize(lat)))
    }
}

/// Circular means (`kind == "means"`, step in radius) or wave traces
/// (`kind == "wave"`, step in time) at the boundary nodes.
#[pyclass(name = "BoundaryData", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyBoundaryData {
    kind: io::BserKind,
    table: BoundaryTable,
}

#[pymethods]
impl PyBoundaryData {
    #[getter]
    fn kind(&self) -> &'static str {
        match self.kind {
            io::BserKind::Means => "means",
            io::BserKind::Wave => "wave",
        }
    }

    #[getter]
    fn step(&self) -> f64 {
        self.table.step
    }

    #[getter]
    fn n_samples(&self) -> usize {
        self.table.n_samples
    }

    fn centers(&self) -> Vec<(f64, f64)> {
        self.table.centers.iter().map(|c| (c.x, c.y)).collect()
    }

    fn row(&self, i: usize) -> PyResult<Vec<f64>> {
        if i >= self.table.n_centers() {
            return Err(PyValueError::new_err(format!("row {i} out of range")));
        }
        Ok(self.table.row(i).to_vec())
    }

    fn save(&self, path: &str) -> PyResult<()> {
        std::fs::write(path, io::format_bser(&self.table, self.kind)).map_err(|e| PyIOError::new_err(e.to_string()))
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let (kind, table) = io::read_bser(path.as_ref()).map_err(py_err)?;
        Ok(Self { kind, table })
    }
}

/// Returns `(means, wave)` for the phantom sampled at the boundary nodes.
#[pyfunction]
#[pyo3(signature = (phantom, domain, n_r = 1024, n_t = 2048, n_ang = 512, tmax_factor = 8.0))]
fn simulate(
    py: Python<'_>,
    phantom: &PyPhantom,
    domain: &PyDomain,
    n_r: usize,
    n_t: usize,
    n_ang: usize,
    tmax_factor: f64,
) -> PyResult<(PyBoundaryData, PyBoundaryData)> {
    let sim = SimConfig { n_r, n_t, n_ang, tmax_factor };
    let (m, w) = py.detach(|| inversion::simulate(&phantom.0, &domain.0, &sim)).map_err(py_err)?;
    Ok((PyBoundaryData { kind: io::BserKind::Means, table: m.0 }, PyBoundaryData { kind: io::BserKind::Wave, table: w.0 }))
}

/// Back-projection onto the `grid x grid` lattice covering `domain` with one
/// of `wave-a`, `wave-b`, `means-a`, `means-b`.
#[pyfunction]
#[pyo3(signature = (domain, formula, data, grid = 128, margin_pixels = 2.0))]
fn reconstruct(
    py: Python<'_>,
    domain: &PyDomain,
    formula: &str,
    data: &PyBoundaryData,
    grid: usize,
    margin_pixels: f64,
) -> PyResult<PyImage> {
    let formula = Formula::from_str(formula).map_err(py_err)?;
    let targets = Targets::covering(&domain.0, grid, margin_pixels).map_err(py_err)?;
    let cfg = InversionConfig { margin_pixels, ..Default::default() };
    let (wave, means) = match data.kind {
        io::BserKind::Wave => (Some(WaveData(data.table.clone())), None),
        io::BserKind::Means => (None, Some(MeansData(data.table.clone()))),
    };
    py.detach(|| inversion::back_project(&domain.0, formula, wave.as_ref(), means.as_ref(), &targets, &cfg))
        .map(PyImage)
        .map_err(py_err)
}

/// Relative L2 and L-infinity errors of `recon` against `reference`,
/// restricted to the admissible targets of `domain` when it is given.
#[pyfunction]
#[pyo3(signature = (recon, reference, domain = None, margin_pixels = 2.0))]
fn error_metrics(
    recon: &PyImage,
    reference: &PyImage,
    domain: Option<&PyDomain>,
    margin_pixels: f64,
) -> PyResult<(f64, f64)> {
    let mask = domain.map(|d| Targets::new(&d.0, recon.0.lattice(), margin_pixels).mask);
    let m = metrics::error_metrics(&recon.0, &reference.0, mask.as_deref()).map_err(py_err)?;
    Ok((m.rel_l2, m.rel_linf))
}

/// The smoothing kernel `K(x1, x0)`; zero on discs and ellipses.
#[pyfunction]
#[pyo3(signature = (domain, x1, x0, n_dirs = 1024))]
fn kernel_weight(domain: &PyDomain, x1: (f64, f64), x0: (f64, f64), n_dirs: usize) -> PyResult<f64> {
    let cache = KernelCache::new(&domain.0, KernelConfig { n_dirs, ..Default::default() }).map_err(py_err)?;
    radon_hilbert::kernel_weight(&cache, pt(x1), pt(x0)).map_err(py_err)
}

/// `(rel_gap, residual, kernel_field)` comparing `f - BP f` with `K f`.
#[pyfunction]
#[pyo3(signature = (phantom, domain, grid = 64, n_dirs = 1024))]
fn residual_vs_kernel(
    py: Python<'_>,
    phantom: &PyPhantom,
    domain: &PyDomain,
    grid: usize,
    n_dirs: usize,
) -> PyResult<(f64, PyImage, PyImage)> {
    let inv = InversionConfig::default();
    let targets = Targets::covering(&domain.0, grid, inv.margin_pixels).map_err(py_err)?;
    let f_grid = phantom.0.rasterize(targets.lattice);
    let kernel = KernelConfig { n_dirs, ..Default::default() };
    let r = py
        .detach(|| {
            inversion::residual_vs_kernel(&domain.0, &phantom.0, &f_grid, &targets, &SimConfig::default(), &inv, kernel)
        })
        .map_err(py_err)?;
    Ok((r.rel_gap, PyImage(r.residual), PyImage(r.kernel_field)))
}

#[pymodule]
#[pyo3(name = "convexbp")]
fn convexbp_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDomain>()?;
    m.add_class::<PyImage>()?;
    m.add_class::<PyPhantom>()?;
    m.add_class::<PyBoundaryData>()?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(reconstruct, m)?)?;
    m.add_function(wrap_pyfunction!(error_metrics, m)?)?;
    m.add_function(wrap_pyfunction!(kernel_weight, m)?)?;
    m.add_function(wrap_pyfunction!(residual_vs_kernel, m)?)?;
    m.add("FORMULAS", Formula::ALL.iter().map(|f| f.as_str()).collect::<Vec<_>>())?;
    Ok(())
}
