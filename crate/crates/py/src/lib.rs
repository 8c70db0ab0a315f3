//! Python bindings. Rasters cross the boundary as nested lists of floats
//! (row-major), so any 2-D sequence, numpy arrays included, is accepted.

use num_complex::Complex64;
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use lpradon::container::{read_container as read_lpt, ContainerError, ContainerKind};
use lpradon::em::em_run;
use lpradon::filters::{fbp as fbp_op, FilterKind};
use lpradon::geometry::{default_n_theta, sampling_plan_with, GeometryPlan, GridKind, GridSpec};
use lpradon::lp_ops::{adjoint_gap, fast_backprojection, fast_radon, Execution, RadonPlan};
use lpradon::oracle;
use lpradon::raster::Raster;

type Rows = Vec<Vec<f64>>;

fn err(e: lpradon::Error) -> PyErr {
    match e {
        lpradon::Error::Container(ContainerError::Io(io)) => PyIOError::new_err(io.to_string()),
        e => PyValueError::new_err(e.to_string()),
    }
}

fn to_raster(rows: Rows, grid: GridSpec) -> PyResult<Raster> {
    if rows.len() != grid.rows || rows.iter().any(|r| r.len() != grid.cols) {
        return Err(PyValueError::new_err(format!(
            "expected a {}x{} array",
            grid.rows, grid.cols
        )));
    }
    Raster::from_vec(grid, rows.concat()).map_err(err)
}

fn to_rows(r: &Raster) -> Rows {
    r.data.chunks(r.cols()).map(<[f64]>::to_vec).collect()
}

/// Sinogram lattice `theta_l = l pi / rows`, `s_k = -1 + 2k / cols`.
fn sinogram_grid(rows: usize, cols: usize) -> GridSpec {
    GridSpec {
        kind: GridKind::Polar,
        rows,
        cols,
        origin: [0.0, -1.0],
        spacing: [std::f64::consts::PI / rows as f64, 2.0 / cols as f64],
    }
}

fn shape(r: &Rows) -> (usize, usize) {
    (r.len(), r.first().map_or(0, Vec::len))
}

fn geometry(n: usize, sectors: usize, n_theta: Option<usize>) -> PyResult<GeometryPlan> {
    sampling_plan_with(
        n,
        sectors,
        n_theta.unwrap_or_else(|| default_n_theta(n, sectors)),
    )
    .map_err(err)
}

/// Precomputed geometry, kernel spectra and FFT plans for one image size.
#[pyclass(module = "lpradon_py")]
struct Plan {
    inner: RadonPlan,
}

#[pymethods]
impl Plan {
    #[new]
    #[pyo3(signature = (n, sectors = 3, n_theta = None, sequential = false))]
    fn new(
        py: Python<'_>,
        n: usize,
        sectors: usize,
        n_theta: Option<usize>,
        sequential: bool,
    ) -> PyResult<Self> {
        let g = geometry(n, sectors, n_theta)?;
        let exec = if sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        };
        Ok(Self {
            inner: py.detach(|| RadonPlan::new(g).with_execution(exec)),
        })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.geometry.n
    }

    #[getter]
    fn sectors(&self) -> usize {
        self.inner.geometry.sectors
    }

    #[getter]
    fn n_theta(&self) -> usize {
        self.inner.geometry.n_theta
    }

    #[getter]
    fn n_s(&self) -> usize {
        self.inner.geometry.n_s
    }

    #[getter]
    fn n_rho(&self) -> usize {
        self.inner.geometry.n_rho
    }

    /// FFT calls since construction or the last reset.
    #[getter]
    fn fft_count(&self) -> usize {
        self.inner.fft_count()
    }

    fn reset_fft_count(&self) {
        self.inner.reset_fft_count();
    }

    /// Seconds per stage of the last transform.
    fn last_timings(&self) -> (f64, f64, f64, f64) {
        let t = self.inner.last_timings();
        (t.prefilter, t.resample, t.fft, t.assemble)
    }

    fn radon(&self, py: Python<'_>, image: Rows) -> PyResult<Rows> {
        let img = to_raster(image, self.inner.geometry.image_grid())?;
        let s = py.detach(|| fast_radon(&img, &self.inner)).map_err(err)?;
        Ok(to_rows(&s))
    }

    fn backproject(&self, py: Python<'_>, sinogram: Rows) -> PyResult<Rows> {
        let s = to_raster(sinogram, self.inner.geometry.sinogram_grid())?;
        let img = py
            .detach(|| fast_backprojection(&s, &self.inner))
            .map_err(err)?;
        Ok(to_rows(&img))
    }

    #[pyo3(signature = (sinogram, filter = "cosine"))]
    fn fbp(&self, py: Python<'_>, sinogram: Rows, filter: &str) -> PyResult<Rows> {
        let kind: FilterKind = filter.parse().map_err(err)?;
        let s = to_raster(sinogram, self.inner.geometry.sinogram_grid())?;
        let img = py.detach(|| fbp_op(&s, kind, &self.inner)).map_err(err)?;
        Ok(to_rows(&img))
    }

    /// EM reconstruction; returns the estimate and the log-likelihood trace.
    #[pyo3(signature = (sinogram, iters = 50, initial = None))]
    fn em(
        &self,
        py: Python<'_>,
        sinogram: Rows,
        iters: usize,
        initial: Option<Rows>,
    ) -> PyResult<(Rows, Vec<f64>)> {
        let s = to_raster(sinogram, self.inner.geometry.sinogram_grid())?;
        let f0 = initial
            .map(|r| to_raster(r, self.inner.geometry.image_grid()))
            .transpose()?;
        let st = py
            .detach(|| em_run(&s, &self.inner, iters, f0))
            .map_err(err)?;
        Ok((to_rows(&st.estimate), st.loglik_history))
    }

    #[pyo3(signature = (trials = 5, seed = 0))]
    fn adjoint_gap(&self, py: Python<'_>, trials: usize, seed: u64) -> PyResult<f64> {
        py.detach(|| adjoint_gap(&self.inner, trials, seed))
            .map_err(err)
    }

    /// Kernel Fourier coefficients in FFT order, `kind` "radon" or "backprojection".
    fn kernel_spectrum(&self, kind: &str) -> PyResult<Vec<Vec<Complex64>>> {
        let spec = match kind {
            "radon" => &self.inner.zeta,
            "backprojection" => &self.inner.zeta_bp,
            _ => return Err(PyValueError::new_err(format!("unknown kernel '{kind}'"))),
        };
        Ok(spec
            .coeffs
            .chunks(spec.cols)
            .map(<[Complex64]>::to_vec)
            .collect())
    }

    fn __repr__(&self) -> String {
        let g = &self.inner.geometry;
        format!(
            "Plan(n={}, sectors={}, n_theta={}, n_rho={})",
            g.n, g.sectors, g.n_theta, g.n_rho
        )
    }
}

/// The modified Shepp-Logan phantom on an `n x n` grid.
#[pyfunction]
fn phantom(n: usize) -> PyResult<Rows> {
    Ok(to_rows(&oracle::phantom_image(n).map_err(err)?))
}

/// Analytic sinogram of the phantom.
#[pyfunction]
#[pyo3(signature = (n, sectors = 3, n_theta = None))]
fn phantom_sinogram(n: usize, sectors: usize, n_theta: Option<usize>) -> PyResult<Rows> {
    let g = geometry(n, sectors, n_theta)?;
    Ok(to_rows(&oracle::phantom_sinogram(
        &oracle::shepp_logan(),
        g.sinogram_grid(),
    )))
}

/// Reference Radon transform by line quadrature.
#[pyfunction]
#[pyo3(signature = (image, n_theta = None))]
fn direct_radon(py: Python<'_>, image: Rows, n_theta: Option<usize>) -> PyResult<Rows> {
    let n = image.len();
    let img = to_raster(image, oracle::image_grid(n))?;
    let grid = sinogram_grid(n_theta.unwrap_or_else(|| default_n_theta(n, 3)), n);
    Ok(to_rows(&py.detach(|| oracle::direct_radon(&img, grid))))
}

/// Reference back-projection with linear interpolation in `s`.
#[pyfunction]
fn direct_backprojection(py: Python<'_>, sinogram: Rows) -> PyResult<Rows> {
    let (rows, cols) = shape(&sinogram);
    let s = to_raster(sinogram, sinogram_grid(rows, cols))?;
    Ok(to_rows(&py.detach(|| {
        oracle::direct_backprojection(&s, oracle::image_grid(cols))
    })))
}

#[pyfunction]
fn add_poisson_noise(sinogram: Rows, dose: f64, seed: u64) -> PyResult<Rows> {
    let (rows, cols) = shape(&sinogram);
    let s = to_raster(sinogram, sinogram_grid(rows, cols))?;
    Ok(to_rows(
        &oracle::add_poisson_noise(&s, dose, seed).map_err(err)?,
    ))
}

/// Reads an image or sinogram container; returns `(kind, rows, meta_json)`.
#[pyfunction]
fn read_container(path: &str) -> PyResult<(String, Rows, String)> {
    let c = read_lpt(path).map_err(|e| err(e.into()))?;
    let kind = c.header.kind;
    let name = match kind {
        ContainerKind::Image => "image",
        ContainerKind::Sinogram => "sinogram",
        ContainerKind::Spectrum => {
            return Err(PyValueError::new_err(
                "spectrum containers hold complex data",
            ))
        }
    };
    let r = c.to_raster(kind).map_err(|e| err(e.into()))?;
    let meta =
        serde_json::to_string(&c.header.meta).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok((name.to_string(), to_rows(&r), meta))
}

#[pymodule]
fn lpradon_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Plan>()?;
    m.add_function(wrap_pyfunction!(phantom, m)?)?;
    m.add_function(wrap_pyfunction!(phantom_sinogram, m)?)?;
    m.add_function(wrap_pyfunction!(direct_radon, m)?)?;
    m.add_function(wrap_pyfunction!(direct_backprojection, m)?)?;
    m.add_function(wrap_pyfunction!(add_poisson_noise, m)?)?;
    m.add_function(wrap_pyfunction!(read_container, m)?)?;
    Ok(())
}
