//! Maximum-likelihood EM reconstruction with the fast operator pair.

use crate::error::{Error, Result};
use crate::lp_ops::{fast_backprojection, fast_radon, RadonPlan};
use crate::raster::{Image, Raster, Sinogram};

/// Relative floor applied to the sensitivity image and to projections.
pub const EM_EPS: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct EmState {
    pub estimate: Image,
    pub iteration: usize,
    /// `R# chi_C`, unclamped.
    pub sensitivity: Image,
    /// Poisson log-likelihood after each step.
    pub loglik_history: Vec<f64>,
    projection: Option<Sinogram>,
}

/// Back-projection of the indicator of lines meeting the unit disc.
pub fn sensitivity_image(plan: &RadonPlan) -> Result<Image> {
    let chi = Raster::filled(plan.geometry.sinogram_grid(), 1.0);
    fast_backprojection(&chi, plan)
}

/// 1 on the unit disc, 0 elsewhere.
pub fn default_initial(plan: &RadonPlan) -> Image {
    Raster::from_fn(plan.geometry.image_grid(), |x2, x1| {
        if x1 * x1 + x2 * x2 <= 1.0 {
            1.0
        } else {
            0.0
        }
    })
}

/// `sum g log(p) - p` over the bins with `p > eps`.
pub fn poisson_loglik(g: &Sinogram, p: &Sinogram, eps: f64) -> f64 {
    g.data
        .iter()
        .zip(&p.data)
        .filter(|(_, &pv)| pv > eps)
        .map(|(&gv, &pv)| if gv > 0.0 { gv * pv.ln() - pv } else { -pv })
        .sum()
}

fn check_finite(r: &Raster, what: &str, iteration: usize) -> Result<()> {
    if let Some(i) = r.data.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!(
            "{what} has a non-finite value at index {i} in iteration {iteration}"
        )));
    }
    Ok(())
}

impl EmState {
    pub fn new(plan: &RadonPlan, f0: Image) -> Result<Self> {
        f0.check_grid(&plan.geometry.image_grid())?;
        if f0.data.iter().any(|&v| v < 0.0 || !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "initial estimate must be finite and nonnegative".into(),
            ));
        }
        Ok(Self {
            estimate: f0,
            iteration: 0,
            sensitivity: sensitivity_image(plan)?,
            loglik_history: Vec::new(),
            projection: None,
        })
    }
}

/// One multiplicative update `f <- f R#(g / R f) / R# chi_C`.
///
/// Negative values produced by interpolation ripple are set to zero.
pub fn em_step(mut state: EmState, g: &Sinogram, plan: &RadonPlan) -> Result<EmState> {
    g.check_grid(&plan.geometry.sinogram_grid())?;
    if g.data.iter().any(|&v| v < 0.0 || !v.is_finite()) {
        return Err(Error::InvalidParameter(
            "data sinogram must be finite and nonnegative".into(),
        ));
    }
    let eps = EM_EPS * g.max().max(0.0);
    let proj = match state.projection.take() {
        Some(p) => p,
        None => fast_radon(&state.estimate, plan)?,
    };
    let mut ratio = proj;
    for (r, &gv) in ratio.data.iter_mut().zip(&g.data) {
        *r = if *r >= eps && *r > 0.0 { gv / *r } else { 0.0 };
    }
    let back = fast_backprojection(&ratio, plan)?;
    let floor = EM_EPS * state.sensitivity.max();
    for ((f, &b), &s) in state
        .estimate
        .data
        .iter_mut()
        .zip(&back.data)
        .zip(&state.sensitivity.data)
    {
        *f = (*f * b / s.max(floor)).max(0.0);
    }
    state.iteration += 1;
    check_finite(&state.estimate, "estimate", state.iteration)?;
    let p = fast_radon(&state.estimate, plan)?;
    check_finite(&p, "projection", state.iteration)?;
    state.loglik_history.push(poisson_loglik(g, &p, eps));
    state.projection = Some(p);
    Ok(state)
}

/// `iters` EM steps from `f0` (the disc indicator when `None`).
pub fn em_run(g: &Sinogram, plan: &RadonPlan, iters: usize, f0: Option<Image>) -> Result<EmState> {
    let f0 = f0.unwrap_or_else(|| default_initial(plan));
    let mut state = EmState::new(plan, f0)?;
    for _ in 0..iters {
        state = em_step(state, g, plan)?;
    }
    Ok(state)
}
