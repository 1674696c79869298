//! Gibbs sampler: exact conjugate conditional updates, full sweeps, the
//! multi-chain schedule, chain selection, and posterior-mean summaries.
//!
//! The gate update is collapsed: the loading column is integrated out
//! analytically before the Bernoulli draw, then redrawn from its conditional
//! when the gate lands on. A naive gate-given-loadings update could never
//! leave the spike state.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::MultiViewDataset;
use crate::error::{GfaError, Result};
use crate::model::{initialize_state, joint_log_density, ModelConfig, ModelState};
use crate::real::Real;

/// Multi-chain sampling schedule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingSchedule {
    pub n_chains: usize,
    pub burn_in: usize,
    pub n_samples: usize,
    pub thinning: usize,
    pub seed: u64,
}

impl Default for SamplingSchedule {
    fn default() -> Self {
        SamplingSchedule {
            n_chains: 10,
            burn_in: 5000,
            n_samples: 1000,
            thinning: 5,
            seed: 0,
        }
    }
}

impl SamplingSchedule {
    pub fn validate(&self) -> Result<()> {
        if self.n_chains < 1 || self.n_samples < 1 || self.thinning < 1 {
            return Err(GfaError::invalid(
                "n_chains, n_samples and thinning must all be at least 1",
            ));
        }
        Ok(())
    }

    /// Number of states a single chain retains.
    pub fn retained(&self) -> usize {
        self.n_samples / self.thinning
    }
}

/// Output of one chain: thinned post-burn-in states plus the joint log
/// density of every sweep, burn-in included.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainTrace<R: Real> {
    pub states: Vec<ModelState<R>>,
    pub log_densities: Vec<R>,
    pub seed: u64,
    pub chain_index: usize,
    pub burn_in: usize,
}

impl<R: Real> ChainTrace<R> {
    /// Mean joint log density over the post-burn-in sweeps.
    pub fn retained_phase_mean(&self) -> R {
        let tail = &self.log_densities[self.burn_in..];
        tail.iter().copied().sum::<R>() / R::of(tail.len() as f64)
    }
}

/// Element-wise posterior means over the retained states.
///
/// `mean_state` is mean-valued; its gates are `activity_mean` thresholded at
/// 0.5 and its loading means are left as-is, so the spike identity that
/// holds for every sampled state is not enforced here.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSummary<R: Real> {
    pub mean_state: ModelState<R>,
    pub activity_mean: Array2<R>,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Deterministic derivation of an independent seed stream from a base seed.
pub fn derive_stream_seed(seed: u64, stream: u64) -> u64 {
    splitmix64(seed.wrapping_add(splitmix64(stream)))
}

/// Deterministic per-chain seed derivation.
pub fn derive_chain_seed(seed: u64, chain_index: usize) -> u64 {
    derive_stream_seed(seed, chain_index as u64 + 1)
}

// ── Small dense Cholesky kernel ─────────────────────────────────────────────

/// Lower Cholesky factor of a symmetric positive definite matrix.
fn cholesky<R: Real>(a: &Array2<R>) -> Result<Array2<R>> {
    let n = a.nrows();
    let mut l = Array2::from_elem((n, n), R::zero());
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[[i, j]];
            for p in 0..j {
                s -= l[[i, p]] * l[[j, p]];
            }
            if i == j {
                if s.is_nan() || s <= R::zero() {
                    return Err(GfaError::numerical(
                        "cholesky factorization",
                        format!("pivot {s} at row {i} is not positive"),
                    ));
                }
                l[[i, i]] = s.sqrt();
            } else {
                l[[i, j]] = s / l[[j, j]];
            }
        }
    }
    Ok(l)
}

/// Solves `L Lᵀ x = b` in place.
fn chol_solve<R: Real>(l: &Array2<R>, b: &mut [R]) {
    let n = b.len();
    for i in 0..n {
        let mut s = b[i];
        for p in 0..i {
            s -= l[[i, p]] * b[p];
        }
        b[i] = s / l[[i, i]];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for p in (i + 1)..n {
            s -= l[[p, i]] * b[p];
        }
        b[i] = s / l[[i, i]];
    }
}

/// Solves `Lᵀ x = b` in place (used to turn iid normals into draws with
/// covariance `(L Lᵀ)⁻¹`).
fn solve_transposed<R: Real>(l: &Array2<R>, b: &mut [R]) {
    let n = b.len();
    for i in (0..n).rev() {
        let mut s = b[i];
        for p in (i + 1)..n {
            s -= l[[p, i]] * b[p];
        }
        b[i] = s / l[[i, i]];
    }
}

// ── Conditional updates ─────────────────────────────────────────────────────

/// Redraws every score row from its Gaussian full conditional with precision
/// `I + Σ_m W^{(m)ᵀ} diag(τ^{(m)}) W^{(m)}`; rows are conditionally
/// independent.
pub fn sample_latents<R: Real, G: Rng + ?Sized>(
    state: &mut ModelState<R>,
    dataset: &MultiViewDataset<R>,
    rng: &mut G,
) -> Result<()> {
    let n = state.n_samples();
    let k = state.n_components();

    let mut precision = Array2::from_shape_fn((k, k), |(i, j)| {
        if i == j {
            R::one()
        } else {
            R::zero()
        }
    });
    for (mi, w) in state.w.iter().enumerate() {
        let tau = &state.tau[mi];
        // Wᵀ diag(τ) W, accumulated feature by feature.
        for d in 0..w.nrows() {
            let td = tau[d];
            for i in 0..k {
                let wi = w[[d, i]];
                if wi == R::zero() {
                    continue;
                }
                for j in 0..k {
                    precision[[i, j]] += td * wi * w[[d, j]];
                }
            }
        }
    }
    let l = cholesky(&precision).map_err(|_| {
        GfaError::numerical(
            "latent score conditional",
            "conditional precision is not positive definite",
        )
    })?;

    // B = Σ_m (X^{(m)} ⊙ τ) W^{(m)}, one row of coefficients per sample.
    let mut b = Array2::from_elem((n, k), R::zero());
    for (mi, view) in dataset.views.iter().enumerate() {
        let tau_row = &state.tau[mi];
        let scaled = &view.values * &tau_row.view().insert_axis(ndarray::Axis(0));
        b += &scaled.dot(&state.w[mi]);
    }

    let mut row = vec![R::zero(); k];
    let mut noise = vec![R::zero(); k];
    for i in 0..n {
        for (j, r) in row.iter_mut().enumerate() {
            *r = b[[i, j]];
        }
        chol_solve(&l, &mut row);
        for e in noise.iter_mut() {
            *e = R::standard_normal(rng);
        }
        solve_transposed(&l, &mut noise);
        for j in 0..k {
            state.z[[i, j]] = row[j] + noise[j];
        }
    }
    Ok(())
}

/// Per-feature slab conditional for one loading entry: precision
/// `α + τ Σ_n z², mean τ · (residual correlation) / precision`.
#[inline]
fn loading_conditional<R: Real>(alpha: R, tau: R, s_kk: R, c_tilde: R) -> (R, R) {
    let lambda = alpha + tau * s_kk;
    (tau * c_tilde / lambda, lambda)
}

/// Collapsed log odds of switching a gate on, with the loading column
/// integrated out. Computed entirely in log space.
fn collapsed_log_odds<R: Real>(
    pi_k: R,
    alpha_col: &[R],
    tau: &Array1<R>,
    s_kk: R,
    c_tilde: &[R],
) -> R {
    let half = R::of(0.5);
    let mut lo = pi_k.ln() - (R::one() - pi_k).ln();
    for (d, (a, c)) in alpha_col.iter().zip(c_tilde).enumerate() {
        let lambda = *a + tau[d] * s_kk;
        let tc = tau[d] * *c;
        lo += half * (a.ln() - lambda.ln()) + tc * tc / (R::of(2.0) * lambda);
    }
    lo
}

/// Stable Bernoulli draw from a log-odds value.
pub(crate) fn bernoulli_from_log_odds<R: Real, G: Rng + ?Sized>(
    log_odds: R,
    rng: &mut G,
) -> Result<bool> {
    if !log_odds.is_finite() && !(log_odds == R::infinity() || log_odds == R::neg_infinity()) {
        return Err(GfaError::numerical(
            "gate conditional",
            format!("non-finite log odds {log_odds}"),
        ));
    }
    let p = if log_odds >= R::zero() {
        R::one() / (R::one() + (-log_odds).exp())
    } else {
        let e = log_odds.exp();
        e / (R::one() + e)
    };
    Ok(R::uniform(rng) < p)
}

fn residual<R: Real>(state: &ModelState<R>, dataset: &MultiViewDataset<R>, mi: usize) -> Array2<R> {
    &dataset.views[mi].values - &state.z.dot(&state.w[mi].t())
}

fn score_column_sq<R: Real>(state: &ModelState<R>, k: usize) -> R {
    state.z.column(k).iter().map(|z| *z * *z).sum()
}

/// Residual correlation of score column k against every feature of view mi,
/// with component k's own contribution added back:
/// `C̃ = R_{-k}ᵀ z_k` where `R_{-k} = X − Z Wᵀ + z_k w_kᵀ`.
fn residual_correlation<R: Real>(
    res: &Array2<R>,
    w: &Array2<R>,
    z_col: ndarray::ArrayView1<R>,
    k: usize,
    s_kk: R,
) -> Vec<R> {
    let d = res.ncols();
    let mut c = vec![R::zero(); d];
    for (i, z) in z_col.iter().enumerate() {
        if *z == R::zero() {
            continue;
        }
        for (j, cj) in c.iter_mut().enumerate() {
            *cj += *z * res[[i, j]];
        }
    }
    for (j, cj) in c.iter_mut().enumerate() {
        *cj += w[[j, k]] * s_kk;
    }
    c
}

fn apply_column_update<R: Real>(
    res: &mut Array2<R>,
    w: &mut Array2<R>,
    z_col: ndarray::ArrayView1<R>,
    k: usize,
    new_col: &[R],
) {
    for (j, nw) in new_col.iter().enumerate() {
        let delta = w[[j, k]] - *nw;
        if delta != R::zero() {
            for (i, z) in z_col.iter().enumerate() {
                res[[i, j]] += *z * delta;
            }
        }
        w[[j, k]] = *nw;
    }
}

/// Redraws all loading entries whose gate is on from their exact Gaussian
/// conditionals; gated-off entries stay exactly zero.
#[allow(clippy::needless_range_loop)]
pub fn sample_loadings<R: Real, G: Rng + ?Sized>(
    state: &mut ModelState<R>,
    dataset: &MultiViewDataset<R>,
    rng: &mut G,
) -> Result<()> {
    let k = state.n_components();
    let s_diag: Vec<R> = (0..k).map(|kk| score_column_sq(state, kk)).collect();
    for mi in 0..state.n_views() {
        let mut res = residual(state, dataset, mi);
        let mut w = std::mem::replace(&mut state.w[mi], Array2::from_elem((0, 0), R::zero()));
        for kk in 0..k {
            if !state.h[[mi, kk]] {
                continue;
            }
            let z_col = state.z.column(kk);
            let c_tilde = residual_correlation(&res, &w, z_col, kk, s_diag[kk]);
            let new_col: Vec<R> = c_tilde
                .iter()
                .enumerate()
                .map(|(d, c)| {
                    let (mean, lambda) = loading_conditional(
                        state.alpha[mi][[d, kk]],
                        state.tau[mi][d],
                        s_diag[kk],
                        *c,
                    );
                    R::normal_draw(rng, mean, lambda.sqrt().recip())
                })
                .collect();
            apply_column_update(&mut res, &mut w, z_col, kk, &new_col);
        }
        state.w[mi] = w;
    }
    Ok(())
}

/// Collapsed gate update. For every (view, component) pair the gate is drawn
/// with the loading column integrated out; a gate landing on redraws its
/// column from the loading conditional, a gate landing off zeroes it.
#[allow(clippy::needless_range_loop)]
pub fn sample_activity<R: Real, G: Rng + ?Sized>(
    state: &mut ModelState<R>,
    dataset: &MultiViewDataset<R>,
    rng: &mut G,
) -> Result<()> {
    let k = state.n_components();
    let s_diag: Vec<R> = (0..k).map(|kk| score_column_sq(state, kk)).collect();
    for mi in 0..state.n_views() {
        let mut res = residual(state, dataset, mi);
        let mut w = std::mem::replace(&mut state.w[mi], Array2::from_elem((0, 0), R::zero()));
        let d = w.nrows();
        for kk in 0..k {
            let z_col = state.z.column(kk);
            let c_tilde = residual_correlation(&res, &w, z_col, kk, s_diag[kk]);
            let alpha_col: Vec<R> = state.alpha[mi].column(kk).to_vec();
            let log_odds =
                collapsed_log_odds(state.pi[kk], &alpha_col, &state.tau[mi], s_diag[kk], &c_tilde);
            let on = bernoulli_from_log_odds(log_odds, rng)?;
            let new_col: Vec<R> = if on {
                c_tilde
                    .iter()
                    .enumerate()
                    .map(|(di, c)| {
                        let (mean, lambda) = loading_conditional(
                            alpha_col[di],
                            state.tau[mi][di],
                            s_diag[kk],
                            *c,
                        );
                        R::normal_draw(rng, mean, lambda.sqrt().recip())
                    })
                    .collect()
            } else {
                vec![R::zero(); d]
            };
            state.h[[mi, kk]] = on;
            apply_column_update(&mut res, &mut w, z_col, kk, &new_col);
        }
        state.w[mi] = w;
    }
    Ok(())
}

/// Beta–Bernoulli conjugate update: `π_k ~ Beta(a + s_k, b + M − s_k)` with
/// `s_k` the number of views the component is active in.
pub fn sample_pi<R: Real, G: Rng + ?Sized>(
    state: &mut ModelState<R>,
    config: &ModelConfig<R>,
    rng: &mut G,
) -> Result<()> {
    let m = R::of(state.n_views() as f64);
    for kk in 0..state.n_components() {
        let s = R::of(
            state
                .h
                .column(kk)
                .iter()
                .filter(|&&on| on)
                .count() as f64,
        );
        state.pi[kk] = R::beta_draw(rng, config.a_pi + s, config.b_pi + m - s);
    }
    Ok(())
}

/// ARD conditional: active entries get `Gamma(a + ½, b + w²/2)`, entries
/// under the spike fall back to their prior.
pub fn sample_ard<R: Real, G: Rng + ?Sized>(
    state: &mut ModelState<R>,
    config: &ModelConfig<R>,
    rng: &mut G,
) -> Result<()> {
    let half = R::of(0.5);
    for mi in 0..state.n_views() {
        for kk in 0..state.n_components() {
            let active = state.h[[mi, kk]];
            for d in 0..state.w[mi].nrows() {
                state.alpha[mi][[d, kk]] = if active {
                    let w = state.w[mi][[d, kk]];
                    R::gamma_draw(rng, config.a_alpha + half, config.b_alpha + half * w * w)
                } else {
                    R::gamma_draw(rng, config.a_alpha, config.b_alpha)
                };
            }
        }
    }
    Ok(())
}

/// Noise precision conditional: `τ_d ~ Gamma(a + N/2, b + ½ Σ_n r_{nd}²)`.
pub fn sample_noise<R: Real, G: Rng + ?Sized>(
    state: &mut ModelState<R>,
    dataset: &MultiViewDataset<R>,
    config: &ModelConfig<R>,
    rng: &mut G,
) -> Result<()> {
    let half = R::of(0.5);
    let n_half = half * R::of(state.n_samples() as f64);
    for mi in 0..state.n_views() {
        let res = residual(state, dataset, mi);
        for d in 0..res.ncols() {
            let rss: R = res.column(d).iter().map(|r| *r * *r).sum();
            state.tau[mi][d] =
                R::gamma_draw(rng, config.a_tau + n_half, config.b_tau + half * rss);
        }
    }
    Ok(())
}

/// One full Gibbs sweep, in fixed order: scores → gates → loadings → ARD →
/// activation probabilities → noise precisions.
pub fn sweep<R: Real, G: Rng + ?Sized>(
    state: &mut ModelState<R>,
    dataset: &MultiViewDataset<R>,
    config: &ModelConfig<R>,
    rng: &mut G,
) -> Result<()> {
    sample_latents(state, dataset, rng)?;
    sample_activity(state, dataset, rng)?;
    sample_loadings(state, dataset, rng)?;
    sample_ard(state, config, rng)?;
    sample_pi(state, config, rng)?;
    sample_noise(state, dataset, config, rng)?;
    debug_assert!(state.validate().is_ok());
    Ok(())
}

/// Runs one chain: `burn_in` discarded sweeps, then `n_samples` sweeps
/// keeping every `thinning`-th state. The joint log density is recorded for
/// every sweep, burn-in included.
pub fn run_chain<R: Real>(
    dataset: &MultiViewDataset<R>,
    config: &ModelConfig<R>,
    schedule: &SamplingSchedule,
    chain_index: usize,
) -> Result<ChainTrace<R>> {
    schedule.validate()?;
    let chain_seed = derive_chain_seed(schedule.seed, chain_index);
    let mut state = initialize_state(config, dataset, chain_seed)?;
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(splitmix64(chain_seed));

    let total = schedule.burn_in + schedule.n_samples;
    let mut log_densities = Vec::with_capacity(total);
    let mut states = Vec::with_capacity(schedule.retained());
    for t in 0..total {
        sweep(&mut state, dataset, config, &mut rng)?;
        log_densities.push(joint_log_density(&state, dataset, config)?);
        if t >= schedule.burn_in {
            let kept = t - schedule.burn_in + 1;
            if kept.is_multiple_of(schedule.thinning) {
                states.push(state.clone());
            }
        }
    }
    Ok(ChainTrace {
        states,
        log_densities,
        seed: chain_seed,
        chain_index,
        burn_in: schedule.burn_in,
    })
}

/// Runs all chains of the schedule, at most `jobs` at a time (`0` uses all
/// cores). A failed chain is reported in its slot, never dropped.
pub fn run_chains<R: Real>(
    dataset: &MultiViewDataset<R>,
    config: &ModelConfig<R>,
    schedule: &SamplingSchedule,
    jobs: usize,
) -> Vec<Result<ChainTrace<R>>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .expect("failed to build chain thread pool");
    pool.install(|| {
        (0..schedule.n_chains)
            .into_par_iter()
            .map(|i| run_chain(dataset, config, schedule, i))
            .collect()
    })
}

fn median_of_sorted<R: Real>(sorted: &[R]) -> R {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / R::of(2.0)
    }
}

/// Picks the chain whose mean post-burn-in log density is closest to the
/// mean over non-outlier chains. Outliers deviate from the median by more
/// than 3 median absolute deviations. Ties go to the lowest chain index.
pub fn select_chain<R: Real>(traces: &[Result<ChainTrace<R>>]) -> Result<usize> {
    select_chain_excluding(traces, usize::MAX)
}

/// As [`select_chain`] over the chains other than `excluded`; used to find
/// the runner-up chain for the cross-chain reproducibility check.
pub fn select_runner_up<R: Real>(
    traces: &[Result<ChainTrace<R>>],
    selected: usize,
) -> Result<usize> {
    select_chain_excluding(traces, selected)
}

fn select_chain_excluding<R: Real>(
    traces: &[Result<ChainTrace<R>>],
    excluded: usize,
) -> Result<usize> {
    let scored: Vec<(usize, R)> = traces
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != excluded)
        .filter_map(|(i, t)| t.as_ref().ok().map(|t| (i, t.retained_phase_mean())))
        .collect();
    if scored.is_empty() {
        return Err(GfaError::no_result("all chains failed"));
    }
    let mut values: Vec<R> = scored.iter().map(|(_, v)| *v).collect();
    values.sort_by(|a, b| a.partial_cmp(b).expect("log densities are finite"));
    let median = median_of_sorted(&values);
    let mut abs_dev: Vec<R> = scored.iter().map(|(_, v)| (*v - median).abs()).collect();
    abs_dev.sort_by(|a, b| a.partial_cmp(b).expect("deviations are finite"));
    let mad = median_of_sorted(&abs_dev);
    let keep: Vec<(usize, R)> = scored
        .iter()
        .copied()
        .filter(|(_, v)| (*v - median).abs() <= R::of(3.0) * mad)
        .collect();
    let target =
        keep.iter().map(|(_, v)| *v).sum::<R>() / R::of(keep.len() as f64);
    let (best, _) = keep
        .iter()
        .copied()
        .min_by(|(ia, va), (ib, vb)| {
            (*va - target)
                .abs()
                .partial_cmp(&(*vb - target).abs())
                .expect("finite")
                .then(ia.cmp(ib))
        })
        .expect("at least one non-outlier chain");
    Ok(best)
}

/// Element-wise means over the retained states; gates are the mean activity
/// thresholded at 0.5 (ties round to active).
pub fn posterior_summary<R: Real>(trace: &ChainTrace<R>) -> Result<PosteriorSummary<R>> {
    let states = &trace.states;
    let first = states
        .first()
        .ok_or_else(|| GfaError::no_result("trace holds no retained states"))?;
    let count = R::of(states.len() as f64);
    let m = first.n_views();
    let k = first.n_components();

    let mut z = first.z.clone();
    let mut w: Vec<Array2<R>> = first.w.clone();
    let mut alpha: Vec<Array2<R>> = first.alpha.clone();
    let mut tau: Vec<Array1<R>> = first.tau.clone();
    let mut pi: Vec<R> = first.pi.clone();
    let mut activity = Array2::from_shape_fn((m, k), |(mi, kk)| {
        if first.h[[mi, kk]] {
            R::one()
        } else {
            R::zero()
        }
    });
    for s in &states[1..] {
        z += &s.z;
        for mi in 0..m {
            w[mi] += &s.w[mi];
            alpha[mi] += &s.alpha[mi];
            tau[mi] += &s.tau[mi];
        }
        for (p, sp) in pi.iter_mut().zip(&s.pi) {
            *p += *sp;
        }
        for mi in 0..m {
            for kk in 0..k {
                if s.h[[mi, kk]] {
                    activity[[mi, kk]] += R::one();
                }
            }
        }
    }
    z.mapv_inplace(|v| v / count);
    for mi in 0..m {
        w[mi].mapv_inplace(|v| v / count);
        alpha[mi].mapv_inplace(|v| v / count);
        tau[mi].mapv_inplace(|v| v / count);
    }
    for p in pi.iter_mut() {
        *p /= count;
    }
    activity.mapv_inplace(|v| v / count);

    let half = R::of(0.5);
    let h = Array2::from_shape_fn((m, k), |(mi, kk)| activity[[mi, kk]] >= half);
    Ok(PosteriorSummary {
        mean_state: ModelState {
            z,
            w,
            h,
            pi,
            alpha,
            tau,
        },
        activity_mean: activity,
    })
}
