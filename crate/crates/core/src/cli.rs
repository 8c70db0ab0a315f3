//! Command-line front end. Every subcommand reads and writes `LPT1` files.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{CommandFactory, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::container::{read_container, write_container, Container, ContainerKind};
use crate::em::{default_initial, em_run};
use crate::error::{Error, Result};
use crate::filters::{fbp, fbp_direct, FilterKind};
use crate::geometry::{default_n_theta, sampling_plan_with, GeometryPlan};
use crate::kernel::{plan_spectrum, KernelKind, KernelMethod};
use crate::lp_ops::{fast_backprojection, fast_radon, RadonPlan, StageTimings};
use crate::oracle::{add_poisson_noise, direct_backprojection, direct_radon, phantom_image};
use crate::raster::{Image, Raster, Sinogram};

#[derive(Debug, Parser)]
#[command(
    name = "lpradon",
    version,
    about = "Log-polar Radon transform, back-projection and reconstruction"
)]
struct Cli {
    /// Upper bound on worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Method {
    Logpolar,
    Direct,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FilterArg {
    Ramp,
    SheppLogan,
    Cosine,
}

impl From<FilterArg> for FilterKind {
    fn from(f: FilterArg) -> Self {
        match f {
            FilterArg::Ramp => FilterKind::Ramp,
            FilterArg::SheppLogan => FilterKind::SheppLogan,
            FilterArg::Cosine => FilterKind::Cosine,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KernelArg {
    Radon,
    Backprojection,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Rasterize the modified Shepp-Logan phantom.
    Phantom {
        #[arg(long)]
        size: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Project an image to a sinogram.
    Radon {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "logpolar")]
        method: Method,
        #[arg(long)]
        sectors: Option<usize>,
        /// Number of projection angles; defaults to about 3N/2.
        #[arg(long)]
        ntheta: Option<usize>,
        /// Replace the projections by Poisson counts of this mean scale.
        #[arg(long)]
        dose: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Back-project a sinogram.
    Backproject {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "logpolar")]
        method: Method,
        #[arg(long)]
        sectors: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Filtered back-projection.
    Fbp {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "cosine")]
        filter: FilterArg,
        #[arg(long, value_enum, default_value = "logpolar")]
        method: Method,
        #[arg(long)]
        sectors: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Maximum-likelihood EM reconstruction.
    Em {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 50)]
        iters: usize,
        /// Start from a randomly perturbed disc instead of the flat disc.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        sectors: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the Fourier coefficients of a convolution kernel.
    KernelDump {
        #[arg(long)]
        size: usize,
        #[arg(long, default_value_t = 3)]
        sectors: usize,
        #[arg(long)]
        ntheta: Option<usize>,
        #[arg(long, value_enum)]
        kind: KernelArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Time both transforms over a list of sizes.
    Bench {
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 3)]
        sectors: usize,
        #[arg(long, default_value_t = 3)]
        reps: usize,
        #[arg(long)]
        json: PathBuf,
    },
}

/// Runs the tool on `args` (program name first) and returns the exit code.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if !e.use_stderr() {
                let _ = e.print();
                return 0;
            }
            let text = e.render().to_string();
            eprint!("{text}");
            if !text.contains("Usage:") {
                eprintln!("\n{}", Cli::command().render_usage());
            }
            return 2;
        }
    };
    let result = match cli.threads {
        Some(0) => Err(Error::InvalidParameter(
            "--threads must be at least 1".into(),
        )),
        Some(t) => match rayon::ThreadPoolBuilder::new().num_threads(t).build() {
            Ok(pool) => pool.install(|| run(cli.command)),
            Err(e) => Err(Error::InvalidParameter(format!(
                "cannot build thread pool: {e}"
            ))),
        },
        None => run(cli.command),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn meta_usize(c: &Container, key: &str) -> Option<usize> {
    c.header
        .meta
        .get(key)
        .and_then(Value::as_u64)
        .map(|v| v as usize)
}

fn load(path: &Path, kind: ContainerKind) -> Result<(Container, Raster)> {
    let c = read_container(path)?;
    let r = c.to_raster(kind)?;
    Ok((c, r))
}

fn save(path: &Path, kind: ContainerKind, r: &Raster, meta: Map<String, Value>) -> Result<()> {
    Ok(write_container(
        path,
        &Container::from_raster(kind, r, meta),
    )?)
}

fn geometry_meta(g: &GeometryPlan) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("n".into(), g.n.into());
    m.insert("sectors".into(), g.sectors.into());
    m.insert("n_theta".into(), g.n_theta.into());
    m
}

/// Geometry of a stored sinogram: `N` from its width, `N_theta` from its height.
fn sinogram_geometry(c: &Container, sectors: Option<usize>) -> Result<GeometryPlan> {
    let m = sectors.or_else(|| meta_usize(c, "sectors")).unwrap_or(3);
    let g = sampling_plan_with(c.header.cols, m, c.header.rows)?;
    c.to_raster(ContainerKind::Sinogram)?
        .check_grid(&g.sinogram_grid())?;
    Ok(g)
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Phantom { size, out } => {
            let img = phantom_image(size)?;
            let mut meta = Map::new();
            meta.insert("phantom".into(), "shepp-logan-modified".into());
            save(&out, ContainerKind::Image, &img, meta)
        }
        Command::Radon {
            input,
            method,
            sectors,
            ntheta,
            dose,
            seed,
            out,
        } => {
            let (_, img) = load(&input, ContainerKind::Image)?;
            let n = img.rows();
            let m = sectors.unwrap_or(3);
            let g = sampling_plan_with(n, m, ntheta.unwrap_or_else(|| default_n_theta(n, m)))?;
            img.check_grid(&g.image_grid())?;
            let mut sino = match method {
                Method::Logpolar => fast_radon(&img, &RadonPlan::new(g.clone()))?,
                Method::Direct => direct_radon(&img, g.sinogram_grid()),
            };
            let mut meta = geometry_meta(&g);
            if let Some(d) = dose {
                // counts of the slightly negative ripple bins are zero
                sino.data.iter_mut().for_each(|v| *v = v.max(0.0));
                sino = add_poisson_noise(&sino, d, seed)?;
                meta.insert("dose".into(), d.into());
                meta.insert("seed".into(), seed.into());
            }
            save(&out, ContainerKind::Sinogram, &sino, meta)
        }
        Command::Backproject {
            input,
            method,
            sectors,
            out,
        } => {
            let c = read_container(&input)?;
            let g = sinogram_geometry(&c, sectors)?;
            let sino = c.to_raster(ContainerKind::Sinogram)?;
            let img = match method {
                Method::Logpolar => fast_backprojection(&sino, &RadonPlan::new(g.clone()))?,
                Method::Direct => direct_backprojection(&sino, g.image_grid()),
            };
            save(&out, ContainerKind::Image, &img, geometry_meta(&g))
        }
        Command::Fbp {
            input,
            filter,
            method,
            sectors,
            out,
        } => {
            let c = read_container(&input)?;
            let g = sinogram_geometry(&c, sectors)?;
            let sino = c.to_raster(ContainerKind::Sinogram)?;
            let kind = FilterKind::from(filter);
            let img = match method {
                Method::Logpolar => fbp(&sino, kind, &RadonPlan::new(g.clone()))?,
                Method::Direct => fbp_direct(&sino, kind, g.image_grid())?,
            };
            let mut meta = geometry_meta(&g);
            meta.insert("filter".into(), kind.name().into());
            save(&out, ContainerKind::Image, &img, meta)
        }
        Command::Em {
            input,
            iters,
            seed,
            sectors,
            out,
        } => {
            let c = read_container(&input)?;
            let g = sinogram_geometry(&c, sectors)?;
            let mut sino = c.to_raster(ContainerKind::Sinogram)?;
            // interpolation ripple in noise-free projections dips slightly below zero
            let clamped = sino.data.iter().filter(|v| **v < 0.0).count();
            sino.data.iter_mut().for_each(|v| *v = v.max(0.0));
            let plan = RadonPlan::new(g.clone());
            let f0 = seed.map(|s| perturbed_start(&plan, s));
            let state = em_run(&sino, &plan, iters, f0)?;
            let mut meta = geometry_meta(&g);
            meta.insert("iterations".into(), iters.into());
            meta.insert("clamped_bins".into(), clamped.into());
            meta.insert("loglik".into(), state.loglik_history.clone().into());
            save(&out, ContainerKind::Image, &state.estimate, meta)
        }
        Command::KernelDump {
            size,
            sectors,
            ntheta,
            kind,
            out,
        } => {
            let g = sampling_plan_with(
                size,
                sectors,
                ntheta.unwrap_or_else(|| default_n_theta(size, sectors)),
            )?;
            let k = match kind {
                KernelArg::Radon => KernelKind::Radon,
                KernelArg::Backprojection => KernelKind::Backprojection,
            };
            let spec = plan_spectrum(&g, k, KernelMethod::default());
            let c = Container::from_spectrum(&spec, g.sector_grid(), geometry_meta(&g));
            Ok(write_container(&out, &c)?)
        }
        Command::Bench {
            sizes,
            sectors,
            reps,
            json,
        } => {
            let report = bench(&sizes, sectors, reps.max(1))?;
            let text = serde_json::to_string_pretty(&report)
                .map_err(|e| Error::InvalidParameter(e.to_string()))?;
            std::fs::write(&json, text).map_err(|e| Error::Container(e.into()))?;
            Ok(())
        }
    }
}

/// The disc indicator scaled pixelwise by uniform factors in `[0.5, 1.5)`.
fn perturbed_start(plan: &RadonPlan, seed: u64) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = default_initial(plan);
    for v in f.data.iter_mut() {
        *v *= rng.random_range(0.5..1.5);
    }
    f
}

#[derive(Debug, Serialize)]
pub struct BenchEntry {
    pub n: usize,
    pub n_theta: usize,
    pub n_rho: usize,
    pub sectors: usize,
    pub plan_seconds: f64,
    /// Median over the repetitions.
    pub radon_seconds: f64,
    pub backprojection_seconds: f64,
    pub radon_fft_count: usize,
    pub backprojection_fft_count: usize,
    pub expected_fft_count: usize,
    pub radon_stages: StageTimings,
    pub backprojection_stages: StageTimings,
}

#[derive(Debug, Serialize)]
pub struct BenchReport {
    pub threads: usize,
    pub reps: usize,
    pub results: Vec<BenchEntry>,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    v[v.len() / 2]
}

pub fn bench(sizes: &[usize], sectors: usize, reps: usize) -> Result<BenchReport> {
    let mut results = Vec::new();
    for &n in sizes {
        let t0 = Instant::now();
        let g = sampling_plan_with(n, sectors, default_n_theta(n, sectors))?;
        let plan = RadonPlan::new(g.clone());
        let plan_seconds = t0.elapsed().as_secs_f64();
        let img = phantom_image(n)?;
        let sino: Sinogram = fast_radon(&img, &plan)?;
        let (mut tr, mut tb) = (Vec::new(), Vec::new());
        let (mut cr, mut cb) = (0, 0);
        let (mut sr, mut sb) = (StageTimings::default(), StageTimings::default());
        for _ in 0..reps {
            plan.reset_fft_count();
            let t = Instant::now();
            fast_radon(&img, &plan)?;
            tr.push(t.elapsed().as_secs_f64());
            cr = plan.fft_count();
            sr = plan.last_timings();
            plan.reset_fft_count();
            let t = Instant::now();
            fast_backprojection(&sino, &plan)?;
            tb.push(t.elapsed().as_secs_f64());
            cb = plan.fft_count();
            sb = plan.last_timings();
        }
        results.push(BenchEntry {
            n,
            n_theta: g.n_theta,
            n_rho: g.n_rho,
            sectors,
            plan_seconds,
            radon_seconds: median(tr),
            backprojection_seconds: median(tb),
            radon_fft_count: cr,
            backprojection_fft_count: cb,
            expected_fft_count: 2 * sectors,
            radon_stages: sr,
            backprojection_stages: sb,
        });
    }
    Ok(BenchReport {
        threads: rayon::current_num_threads(),
        reps,
        results,
    })
}
