//! Model definition: configuration, latent state, joint density, and
//! forward simulation (prior draws and a ground-truth synthetic generator).

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::data::{MultiViewDataset, ViewMatrix};
use crate::error::{GfaError, Result};
use crate::real::{ln_two_pi, Real};

/// Standard deviation of the slab Gaussians used by [`generate_synthetic`].
const GENERATOR_SLAB_SD: f64 = 2.0;

/// Variance of the initial loading entries in [`initialize_state`].
const INIT_LOADING_VAR: f64 = 0.01;

/// Component budget and prior hyperparameters.
///
/// Gamma hyperparameters are in the shape/rate parameterization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ModelConfig<R: Real> {
    /// Upper bound K on the number of components.
    pub k: usize,
    pub a_pi: R,
    pub b_pi: R,
    pub a_alpha: R,
    pub b_alpha: R,
    pub a_tau: R,
    pub b_tau: R,
    pub center_columns: bool,
    pub scale_columns: bool,
}

impl<R: Real> Default for ModelConfig<R> {
    fn default() -> Self {
        ModelConfig {
            k: 80,
            a_pi: R::one(),
            b_pi: R::one(),
            a_alpha: R::of(1e-3),
            b_alpha: R::of(1e-3),
            a_tau: R::of(1e-3),
            b_tau: R::of(1e-3),
            center_columns: true,
            scale_columns: false,
        }
    }
}

impl<R: Real> ModelConfig<R> {
    pub fn with_k(k: usize) -> Self {
        ModelConfig {
            k,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(GfaError::invalid("component budget K must be at least 1"));
        }
        let hypers = [
            ("a_pi", self.a_pi),
            ("b_pi", self.b_pi),
            ("a_alpha", self.a_alpha),
            ("b_alpha", self.b_alpha),
            ("a_tau", self.a_tau),
            ("b_tau", self.b_tau),
        ];
        for (name, v) in hypers {
            if !(v.is_finite() && v > R::zero()) {
                return Err(GfaError::invalid(format!(
                    "hyperparameter {name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// One full assignment of the latent variables.
///
/// Gate semantics: `h[[m, k]] == false` means component k is switched off in
/// view m and the corresponding loading column is exactly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState<R: Real> {
    /// N×K factor scores.
    pub z: Array2<R>,
    /// Per-view D_m×K loading matrices.
    pub w: Vec<Array2<R>>,
    /// M×K group activity gates.
    pub h: Array2<bool>,
    /// Per-component activation probabilities, each in (0, 1).
    pub pi: Vec<R>,
    /// Per-view D_m×K ARD precisions, strictly positive.
    pub alpha: Vec<Array2<R>>,
    /// Per-view length-D_m noise precisions, strictly positive.
    pub tau: Vec<Array1<R>>,
}

impl<R: Real> ModelState<R> {
    pub fn n_samples(&self) -> usize {
        self.z.nrows()
    }

    pub fn n_components(&self) -> usize {
        self.z.ncols()
    }

    pub fn n_views(&self) -> usize {
        self.w.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.w.iter().map(|w| w.nrows()).collect()
    }

    /// Checks all structural invariants: consistent shapes, strict
    /// positivity of precision parameters, probabilities inside (0, 1), and
    /// spike consistency (gate off ⇔ loading column exactly zero).
    pub fn validate(&self) -> Result<()> {
        let (n, k) = self.z.dim();
        let m = self.w.len();
        if self.h.dim() != (m, k) {
            return Err(GfaError::invalid(format!(
                "activity gates have shape {:?}, expected ({m}, {k})",
                self.h.dim()
            )));
        }
        if self.pi.len() != k || self.alpha.len() != m || self.tau.len() != m {
            return Err(GfaError::invalid("state field lengths are inconsistent"));
        }
        if n < 1 || k < 1 || m < 1 {
            return Err(GfaError::invalid("state has an empty dimension"));
        }
        for (mi, w) in self.w.iter().enumerate() {
            let d = w.nrows();
            if w.ncols() != k || self.alpha[mi].dim() != (d, k) || self.tau[mi].len() != d {
                return Err(GfaError::invalid(format!(
                    "view {mi}: loading/ARD/noise shapes disagree"
                )));
            }
            for kk in 0..k {
                let col_zero = w.column(kk).iter().all(|v| *v == R::zero());
                if self.h[[mi, kk]] && col_zero {
                    return Err(GfaError::invalid(format!(
                        "view {mi} component {kk}: gate on but loading column is all zero"
                    )));
                }
                if !self.h[[mi, kk]] && !col_zero {
                    return Err(GfaError::invalid(format!(
                        "view {mi} component {kk}: gate off but loading column is not zero"
                    )));
                }
            }
            if self.alpha[mi].iter().any(|a| a.is_nan() || *a <= R::zero()) {
                return Err(GfaError::invalid(format!(
                    "view {mi}: ARD precisions must be strictly positive"
                )));
            }
            if self.tau[mi].iter().any(|t| t.is_nan() || *t <= R::zero()) {
                return Err(GfaError::invalid(format!(
                    "view {mi}: noise precisions must be strictly positive"
                )));
            }
        }
        if self
            .pi
            .iter()
            .any(|p| !(*p > R::zero() && *p < R::one()))
        {
            return Err(GfaError::invalid(
                "activation probabilities must lie strictly inside (0, 1)",
            ));
        }
        Ok(())
    }

    fn check_against(&self, dataset: &MultiViewDataset<R>) -> Result<()> {
        if self.n_views() != dataset.n_views() {
            return Err(GfaError::invalid(format!(
                "state has {} views, dataset has {}",
                self.n_views(),
                dataset.n_views()
            )));
        }
        if self.n_samples() != dataset.n_samples() {
            return Err(GfaError::invalid(format!(
                "state has {} samples, dataset has {}",
                self.n_samples(),
                dataset.n_samples()
            )));
        }
        for (mi, (w, view)) in self.w.iter().zip(&dataset.views).enumerate() {
            if w.nrows() != view.n_features() {
                return Err(GfaError::invalid(format!(
                    "view {mi}: state has {} features, dataset has {}",
                    w.nrows(),
                    view.n_features()
                )));
            }
        }
        Ok(())
    }
}

/// Generating state plus the ground-truth activity pattern, kept for
/// recovery checks against a fitted model.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticTruth<R: Real> {
    pub state: ModelState<R>,
    pub activity: Array2<bool>,
}

/// Additive pieces of the joint log density. The joint is their sum;
/// keeping them apart makes the decomposition testable and lets numerical
/// failures name the term that produced them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityParts<R: Real> {
    pub likelihood: R,
    pub z_prior: R,
    pub w_prior: R,
    pub h_prior: R,
    pub pi_prior: R,
    pub alpha_prior: R,
    pub tau_prior: R,
}

impl<R: Real> DensityParts<R> {
    pub fn total(&self) -> R {
        self.likelihood
            + self.z_prior
            + self.w_prior
            + self.h_prior
            + self.pi_prior
            + self.alpha_prior
            + self.tau_prior
    }
}

fn ln_gamma_pdf<R: Real>(x: R, shape: R, rate: R) -> R {
    shape * rate.ln() - shape.ln_gamma() + (shape - R::one()) * x.ln() - rate * x
}

fn ln_beta_pdf<R: Real>(x: R, a: R, b: R) -> R {
    let ln_beta_fn = a.ln_gamma() + b.ln_gamma() - (a + b).ln_gamma();
    (a - R::one()) * x.ln() + (b - R::one()) * (R::one() - x).ln() - ln_beta_fn
}

/// Builds the starting state for a Gibbs chain: all gates open, standard
/// normal scores, small random loadings, and prior means for the remaining
/// parameters. An all-open start lets every component compete for data from
/// sweep one.
pub fn initialize_state<R: Real>(
    config: &ModelConfig<R>,
    dataset: &MultiViewDataset<R>,
    seed: u64,
) -> Result<ModelState<R>> {
    config.validate()?;
    dataset.validate()?;
    let n = dataset.n_samples();
    let k = config.k;
    let m = dataset.n_views();
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);

    let z = Array2::from_shape_fn((n, k), |_| R::standard_normal(&mut rng));
    let init_sd = R::of(INIT_LOADING_VAR.sqrt());
    let mut w = Vec::with_capacity(m);
    let mut alpha = Vec::with_capacity(m);
    let mut tau = Vec::with_capacity(m);
    let alpha_mean = config.a_alpha / config.b_alpha;
    let tau_mean = config.a_tau / config.b_tau;
    for view in &dataset.views {
        let d = view.n_features();
        w.push(Array2::from_shape_fn((d, k), |_| {
            R::normal_draw(&mut rng, R::zero(), init_sd)
        }));
        alpha.push(Array2::from_elem((d, k), alpha_mean));
        tau.push(Array1::from_elem(d, tau_mean));
    }
    let state = ModelState {
        z,
        w,
        h: Array2::from_elem((m, k), true),
        pi: vec![config.a_pi / (config.a_pi + config.b_pi); k],
        alpha,
        tau,
    };
    state.validate()?;
    Ok(state)
}

/// Joint log density of data and latent state.
///
/// Inactive gate entries contribute `ln(1 − π_k)` and no Gaussian term for
/// their (point-mass) loading columns.
pub fn joint_log_density<R: Real>(
    state: &ModelState<R>,
    dataset: &MultiViewDataset<R>,
    config: &ModelConfig<R>,
) -> Result<R> {
    Ok(joint_log_density_parts(state, dataset, config)?.total())
}

/// As [`joint_log_density`], split into its additive terms.
pub fn joint_log_density_parts<R: Real>(
    state: &ModelState<R>,
    dataset: &MultiViewDataset<R>,
    config: &ModelConfig<R>,
) -> Result<DensityParts<R>> {
    config.validate()?;
    state.check_against(dataset)?;
    if state.n_components() != config.k {
        return Err(GfaError::invalid(format!(
            "state has {} components, config has K={}",
            state.n_components(),
            config.k
        )));
    }
    let ln2pi = ln_two_pi::<R>();
    let half = R::of(0.5);

    let mut likelihood = R::zero();
    for (mi, view) in dataset.views.iter().enumerate() {
        let predicted = state.z.dot(&state.w[mi].t());
        let residual = &view.values - &predicted;
        for (d, tau_d) in state.tau[mi].iter().enumerate() {
            let rss: R = residual.column(d).iter().map(|r| *r * *r).sum();
            let n_r = R::of(view.n_samples() as f64);
            likelihood += half * n_r * (tau_d.ln() - ln2pi) - half * *tau_d * rss;
        }
    }

    let z_prior: R = state
        .z
        .iter()
        .map(|z| -half * (ln2pi + *z * *z))
        .sum();

    let mut w_prior = R::zero();
    let mut h_prior = R::zero();
    for mi in 0..state.n_views() {
        for k in 0..state.n_components() {
            if state.h[[mi, k]] {
                h_prior += state.pi[k].ln();
                for (w, a) in state.w[mi].column(k).iter().zip(state.alpha[mi].column(k)) {
                    w_prior += half * (a.ln() - ln2pi) - half * *a * *w * *w;
                }
            } else {
                h_prior += (R::one() - state.pi[k]).ln();
            }
        }
    }

    let pi_prior: R = state
        .pi
        .iter()
        .map(|p| ln_beta_pdf(*p, config.a_pi, config.b_pi))
        .sum();
    let alpha_prior: R = state
        .alpha
        .iter()
        .flat_map(|a| a.iter())
        .map(|a| ln_gamma_pdf(*a, config.a_alpha, config.b_alpha))
        .sum();
    let tau_prior: R = state
        .tau
        .iter()
        .flat_map(|t| t.iter())
        .map(|t| ln_gamma_pdf(*t, config.a_tau, config.b_tau))
        .sum();

    let parts = DensityParts {
        likelihood,
        z_prior,
        w_prior,
        h_prior,
        pi_prior,
        alpha_prior,
        tau_prior,
    };
    for (name, value) in [
        ("likelihood", parts.likelihood),
        ("z prior", parts.z_prior),
        ("loading prior", parts.w_prior),
        ("gate prior", parts.h_prior),
        ("pi prior", parts.pi_prior),
        ("ard prior", parts.alpha_prior),
        ("noise prior", parts.tau_prior),
    ] {
        if !value.is_finite() {
            return Err(GfaError::numerical(
                format!("joint log density, {name} term"),
                format!("non-finite value {value}"),
            ));
        }
    }
    Ok(parts)
}

/// Sum over views of the squared Frobenius contribution of each component,
/// `Σ_m ‖Z_{:,k} W^{(m)ᵀ}_{:,k}‖²`. Used to order components by how much
/// variation they capture.
pub fn variance_explained<R: Real>(
    state: &ModelState<R>,
    dataset: &MultiViewDataset<R>,
) -> Result<Vec<R>> {
    state.check_against(dataset)?;
    let k = state.n_components();
    let mut out = Vec::with_capacity(k);
    for kk in 0..k {
        let z_sq: R = state.z.column(kk).iter().map(|z| *z * *z).sum();
        let w_sq: R = state
            .w
            .iter()
            .map(|w| w.column(kk).iter().map(|v| *v * *v).sum::<R>())
            .sum();
        out.push(z_sq * w_sq);
    }
    Ok(out)
}

fn synthetic_sample_ids(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("s{:06}", i + 1)).collect()
}

/// Draws a paired dataset from a planted factor model together with the
/// generating state, for recovery testing.
///
/// Scores are standard normal; active loading columns are element-wise
/// Gaussian with standard deviation 2; inactive columns are exactly zero.
/// Per-view noise variance is set to (mean signal variance) / snr, so the
/// ratio of signal to noise variance within each view is approximately
/// `snr`. Views with no active component fall back to unit noise variance.
pub fn generate_synthetic<R: Real>(
    config: &ModelConfig<R>,
    n: usize,
    dims: &[usize],
    activity: &Array2<bool>,
    snr: R,
    seed: u64,
) -> Result<(MultiViewDataset<R>, SyntheticTruth<R>)> {
    config.validate()?;
    let m = dims.len();
    let k = config.k;
    if m < 2 {
        return Err(GfaError::invalid("need at least 2 views"));
    }
    if n < 2 {
        return Err(GfaError::invalid("need at least 2 samples"));
    }
    if let Some(d) = dims.iter().find(|d| **d == 0) {
        return Err(GfaError::invalid(format!("degenerate view width {d}")));
    }
    if activity.dim() != (m, k) {
        return Err(GfaError::invalid(format!(
            "activity pattern has shape {:?}, expected ({m}, {k})",
            activity.dim()
        )));
    }
    if snr.is_nan() || snr <= R::zero() {
        return Err(GfaError::invalid(format!("snr must be positive, got {snr}")));
    }

    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let slab_sd = R::of(GENERATOR_SLAB_SD);

    let z = Array2::from_shape_fn((n, k), |_| R::standard_normal(&mut rng));
    let mut w = Vec::with_capacity(m);
    for (mi, d) in dims.iter().enumerate() {
        let mut wm = Array2::from_elem((*d, k), R::zero());
        for kk in 0..k {
            if activity[[mi, kk]] {
                for v in wm.column_mut(kk).iter_mut() {
                    *v = R::normal_draw(&mut rng, R::zero(), slab_sd);
                }
            }
        }
        w.push(wm);
    }

    let sample_ids = synthetic_sample_ids(n);
    let mut views = Vec::with_capacity(m);
    let mut tau = Vec::with_capacity(m);
    for (mi, d) in dims.iter().enumerate() {
        let signal = z.dot(&w[mi].t());
        let total_w_sq: R = w[mi].iter().map(|v| *v * *v).sum();
        let mean_signal_var = total_w_sq / R::of(*d as f64);
        let noise_var = if mean_signal_var > R::zero() {
            mean_signal_var / snr
        } else {
            R::one()
        };
        let noise_sd = noise_var.sqrt();
        let values =
            signal.mapv_into(|s| s + R::normal_draw(&mut rng, R::zero(), noise_sd));
        let name = format!("view{}", mi + 1);
        let feature_names = (0..*d)
            .map(|j| format!("{}_f{:04}", name, j + 1))
            .collect();
        views.push(ViewMatrix::new(
            name,
            values,
            feature_names,
            sample_ids.clone(),
        )?);
        tau.push(Array1::from_elem(*d, noise_var.recip()));
    }

    // Truth-state bookkeeping: ARD precisions at the slab precision, and a
    // smoothed activation rate so pi stays inside (0, 1).
    let alpha = dims
        .iter()
        .map(|d| Array2::from_elem((*d, k), (slab_sd * slab_sd).recip()))
        .collect();
    let pi = (0..k)
        .map(|kk| {
            let active = (0..m).filter(|mi| activity[[*mi, kk]]).count();
            R::of((active as f64 + 1.0) / (m as f64 + 2.0))
        })
        .collect();
    let state = ModelState {
        z,
        w,
        h: activity.clone(),
        pi,
        alpha,
        tau,
    };
    state.validate()?;
    let dataset = MultiViewDataset::new(views)?;
    Ok((
        dataset,
        SyntheticTruth {
            state,
            activity: activity.clone(),
        },
    ))
}

/// Draws a complete latent state from the prior. Together with
/// [`draw_observations`] this yields forward joint simulations, the
/// reference side of simulation-based sampler checks.
pub fn draw_state_from_prior<R: Real, G: Rng + ?Sized>(
    config: &ModelConfig<R>,
    n: usize,
    dims: &[usize],
    rng: &mut G,
) -> Result<ModelState<R>> {
    config.validate()?;
    if n < 1 || dims.is_empty() {
        return Err(GfaError::invalid("need at least one sample and one view"));
    }
    let k = config.k;
    let m = dims.len();
    let pi: Vec<R> = (0..k)
        .map(|_| R::beta_draw(rng, config.a_pi, config.b_pi))
        .collect();
    let mut h = Array2::from_elem((m, k), false);
    for mi in 0..m {
        for kk in 0..k {
            h[[mi, kk]] = R::uniform(rng) < pi[kk];
        }
    }
    let mut w = Vec::with_capacity(m);
    let mut alpha = Vec::with_capacity(m);
    let mut tau = Vec::with_capacity(m);
    for d in dims {
        let a = Array2::from_shape_fn((*d, k), |_| {
            R::gamma_draw(rng, config.a_alpha, config.b_alpha)
        });
        alpha.push(a);
        tau.push(Array1::from_shape_fn(*d, |_| {
            R::gamma_draw(rng, config.a_tau, config.b_tau)
        }));
        w.push(Array2::from_elem((*d, k), R::zero()));
    }
    for mi in 0..m {
        for kk in 0..k {
            if h[[mi, kk]] {
                for d in 0..dims[mi] {
                    let sd = alpha[mi][[d, kk]].sqrt().recip();
                    w[mi][[d, kk]] = R::normal_draw(rng, R::zero(), sd);
                }
            }
        }
    }
    let z = Array2::from_shape_fn((n, k), |_| R::standard_normal(rng));
    let state = ModelState {
        z,
        w,
        h,
        pi,
        alpha,
        tau,
    };
    state.validate()?;
    Ok(state)
}

/// Draws observations `X = Z Wᵀ + ε` from a state's likelihood.
pub fn draw_observations<R: Real, G: Rng + ?Sized>(
    state: &ModelState<R>,
    rng: &mut G,
) -> Result<MultiViewDataset<R>> {
    let sample_ids = synthetic_sample_ids(state.n_samples());
    let mut views = Vec::with_capacity(state.n_views());
    for (mi, w) in state.w.iter().enumerate() {
        let d = w.nrows();
        let mut values = state.z.dot(&w.t());
        for (col, tau_d) in state.tau[mi].iter().enumerate() {
            let sd = tau_d.sqrt().recip();
            for v in values.column_mut(col).iter_mut() {
                *v += R::normal_draw(rng, R::zero(), sd);
            }
        }
        let name = format!("view{}", mi + 1);
        let feature_names = (0..d).map(|j| format!("{}_f{:04}", name, j + 1)).collect();
        views.push(ViewMatrix::new(
            name,
            values,
            feature_names,
            sample_ids.clone(),
        )?);
    }
    MultiViewDataset::new(views)
}

/// Overwrites `dataset` values with a fresh likelihood draw, keeping names
/// and ids. Used by successive-conditional simulation loops.
pub fn resample_observations<R: Real, G: Rng + ?Sized>(
    state: &ModelState<R>,
    dataset: &mut MultiViewDataset<R>,
    rng: &mut G,
) -> Result<()> {
    state.check_against(dataset)?;
    for (mi, w) in state.w.iter().enumerate() {
        let mut values = state.z.dot(&w.t());
        for (col, tau_d) in state.tau[mi].iter().enumerate() {
            let sd = tau_d.sqrt().recip();
            for v in values.column_mut(col).iter_mut() {
                *v += R::normal_draw(rng, R::zero(), sd);
            }
        }
        dataset.views[mi].values = values;
    }
    Ok(())
}
