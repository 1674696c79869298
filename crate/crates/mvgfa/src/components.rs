//! Interpretation of a fitted model: activity matrix, shared/specific
//! classification, variance ordering, permutation-test q-values, top
//! loadings, and cross-chain reproducibility.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{GfaError, Result};
use crate::gibbs::PosteriorSummary;
use crate::real::Real;

pub const DEFAULT_ACTIVITY_THRESHOLD: f64 = 0.5;
pub const DEFAULT_TOP_LOADINGS: usize = 30;
pub const DEFAULT_Q_THRESHOLD: f64 = 0.05;
pub const DEFAULT_N_PERMUTATIONS: usize = 10_000;
pub const DEFAULT_MATCH_THRESHOLD: f64 = 0.8;

/// One role label per view, e.g. "chemistry" / "biology".
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ViewRoleMap {
    roles: Vec<String>,
}

impl ViewRoleMap {
    pub fn new(roles: Vec<String>) -> Result<Self> {
        if roles.is_empty() {
            return Err(GfaError::invalid("role map must cover at least one view"));
        }
        if roles.iter().any(|r| r.trim().is_empty()) {
            return Err(GfaError::invalid("empty role label"));
        }
        Ok(ViewRoleMap { roles })
    }

    /// Same role for every view.
    pub fn uniform(n_views: usize, role: &str) -> Result<Self> {
        Self::new(vec![role.to_string(); n_views])
    }

    pub fn n_views(&self) -> usize {
        self.roles.len()
    }

    pub fn role(&self, view: usize) -> &str {
        &self.roles[view]
    }

    pub fn roles(&self) -> &[String] {
        &self.roles
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ComponentKind {
    /// Active in views of at least two distinct roles.
    Shared,
    /// Active in one or more views of a single role.
    ViewSpecific { role: String },
    Inactive,
}

impl std::fmt::Display for ComponentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ComponentKind::Shared => write!(f, "shared"),
            ComponentKind::ViewSpecific { role } => write!(f, "view-specific:{role}"),
            ComponentKind::Inactive => write!(f, "inactive"),
        }
    }
}

/// Thresholds the posterior activation means into a binary M×K activity
/// matrix; ties at the threshold round to active.
pub fn activity_matrix<R: Real>(
    summary: &PosteriorSummary<R>,
    threshold: R,
) -> Result<Array2<bool>> {
    if !(threshold >= R::zero() && threshold <= R::one()) {
        return Err(GfaError::invalid(format!(
            "activity threshold must lie in [0, 1], got {threshold}"
        )));
    }
    Ok(summary.activity_mean.mapv(|a| a >= threshold))
}

/// Classifies each component from its binary activity pattern and the view
/// roles: inactive when nothing is on, shared when at least two distinct
/// roles are covered, view-specific (with its single role) otherwise.
pub fn classify_components(
    activity: &Array2<bool>,
    roles: &ViewRoleMap,
) -> Result<Vec<ComponentKind>> {
    let (m, k) = activity.dim();
    if roles.n_views() != m {
        return Err(GfaError::invalid(format!(
            "role map covers {} views, activity matrix has {m}",
            roles.n_views()
        )));
    }
    let mut kinds = Vec::with_capacity(k);
    for kk in 0..k {
        let active: Vec<usize> = (0..m).filter(|mi| activity[[*mi, kk]]).collect();
        if active.is_empty() {
            kinds.push(ComponentKind::Inactive);
            continue;
        }
        let mut distinct: Vec<&str> = active.iter().map(|mi| roles.role(*mi)).collect();
        distinct.sort_unstable();
        distinct.dedup();
        if distinct.len() >= 2 {
            kinds.push(ComponentKind::Shared);
        } else {
            kinds.push(ComponentKind::ViewSpecific {
                role: distinct[0].to_string(),
            });
        }
    }
    Ok(kinds)
}

/// Label assigned by [`order_components`].
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentLabel {
    pub component: usize,
    /// "1", "2", … for shared components, "SP1", "SP2", … for view-specific
    /// ones, both in decreasing order of variance captured.
    pub label: String,
    /// 1-based rank within the component's own group.
    pub rank: usize,
}

/// Numbers shared components 1..n and view-specific components SP1..SPm by
/// descending variance captured. Inactive components receive no label.
/// Equal variances keep component-index order.
pub fn order_components<R: Real>(
    variance: &[R],
    kinds: &[ComponentKind],
) -> Result<Vec<ComponentLabel>> {
    if variance.len() != kinds.len() {
        return Err(GfaError::invalid(format!(
            "{} variances for {} component kinds",
            variance.len(),
            kinds.len()
        )));
    }
    let ranked = |want_shared: bool, prefix: &str| -> Vec<ComponentLabel> {
        let mut group: Vec<usize> = (0..kinds.len())
            .filter(|k| match kinds[*k] {
                ComponentKind::Shared => want_shared,
                ComponentKind::ViewSpecific { .. } => !want_shared,
                ComponentKind::Inactive => false,
            })
            .collect();
        group.sort_by(|a, b| {
            variance[*b]
                .partial_cmp(&variance[*a])
                .expect("variances are finite")
                .then(a.cmp(b))
        });
        group
            .into_iter()
            .enumerate()
            .map(|(i, component)| ComponentLabel {
                component,
                label: format!("{prefix}{}", i + 1),
                rank: i + 1,
            })
            .collect()
    };
    let mut out = ranked(true, "");
    out.extend(ranked(false, "SP"));
    Ok(out)
}

/// Per-sample outcome of the activation permutation test.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSignificance<R: Real> {
    pub index: usize,
    pub score: R,
    pub q_value: R,
}

/// Permutation test for the samples activating a component.
///
/// The null pool is built from `n_permutations` sign-flip-and-permute draws
/// of the score column: each draw shuffles the magnitudes and assigns every
/// one a fresh random sign, so the pool depends on the scores only through
/// the magnitudes `|z|` (which makes the result invariant under sign flips
/// and positive rescaling of the input). Per-sample
/// `p = (1 + #{null ≥ |z_n|}) / (n_permutations·N + 1)` over the pooled
/// null, q-values are Benjamini–Hochberg, and samples with `q < q_threshold`
/// are returned sorted by decreasing |score|.
pub fn significant_samples<R: Real, G: Rng + ?Sized>(
    scores: &[R],
    n_permutations: usize,
    q_threshold: R,
    rng: &mut G,
) -> Result<Vec<ScoreSignificance<R>>> {
    if n_permutations < 100 {
        return Err(GfaError::invalid(format!(
            "need at least 100 permutations, got {n_permutations}"
        )));
    }
    if !(q_threshold >= R::zero() && q_threshold <= R::one()) {
        return Err(GfaError::invalid(format!(
            "q threshold must lie in [0, 1], got {q_threshold}"
        )));
    }
    let n = scores.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(GfaError::invalid("scores contain non-finite values"));
    }

    // positive_hits[j] counts, across draws, how often the magnitude of
    // score j entered the pool with a positive sign.
    let mut positive_hits = vec![0u64; n];
    let mut perm: Vec<usize> = (0..n).collect();
    for _ in 0..n_permutations {
        perm.shuffle(rng);
        for slot in 0..n {
            let positive = R::uniform(rng) < R::of(0.5);
            if positive {
                positive_hits[perm[slot]] += 1;
            }
        }
    }

    // #{null ≥ |z_n|} = Σ over scores with |z_j| ≥ |z_n| of their positive
    // hits; prefix sums over the magnitudes sorted descending.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|a, b| {
        scores[*b]
            .abs()
            .partial_cmp(&scores[*a].abs())
            .expect("finite")
            .then(a.cmp(b))
    });
    let mut ge_counts = vec![0u64; n];
    let mut running = 0u64;
    let mut i = 0;
    while i < n {
        // Advance over ties so every tied sample sees the full tie block.
        let mut j = i;
        while j < n && scores[order[j]].abs() == scores[order[i]].abs() {
            running += positive_hits[order[j]];
            j += 1;
        }
        for item in &order[i..j] {
            ge_counts[*item] = running;
        }
        i = j;
    }

    let denom = R::of((n_permutations * n + 1) as f64);
    let p_values: Vec<R> = ge_counts
        .iter()
        .map(|c| (R::one() + R::of(*c as f64)) / denom)
        .collect();
    let q_values = benjamini_hochberg(&p_values);

    let mut hits: Vec<ScoreSignificance<R>> = (0..n)
        .filter(|idx| q_values[*idx] < q_threshold)
        .map(|idx| ScoreSignificance {
            index: idx,
            score: scores[idx],
            q_value: q_values[idx],
        })
        .collect();
    hits.sort_by(|a, b| {
        b.score
            .abs()
            .partial_cmp(&a.score.abs())
            .expect("finite")
            .then(a.index.cmp(&b.index))
    });
    Ok(hits)
}

/// Benjamini–Hochberg adjusted q-values: `q_(i) = min_{j ≥ i} p_(j)·N/j`,
/// capped at 1. Monotone non-decreasing in the p-value rank.
pub fn benjamini_hochberg<R: Real>(p_values: &[R]) -> Vec<R> {
    let n = p_values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|a, b| p_values[*a].partial_cmp(&p_values[*b]).expect("finite"));
    let mut q = vec![R::zero(); n];
    let mut running_min = R::one();
    let n_r = R::of(n as f64);
    for (rank, idx) in order.iter().enumerate().rev() {
        let candidate = p_values[*idx] * n_r / R::of((rank + 1) as f64);
        running_min = running_min.min(candidate);
        q[*idx] = running_min.min(R::one());
    }
    q
}

/// Top-n features of one loading column by absolute weight, signed weights
/// kept. Asking for more features than exist returns them all. The result
/// is flagged degenerate when every weight is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct TopLoadings<R: Real> {
    pub entries: Vec<(String, R)>,
    pub degenerate: bool,
}

pub fn top_loadings<R: Real>(
    column: &[R],
    feature_names: &[String],
    n: usize,
) -> Result<TopLoadings<R>> {
    if n < 1 {
        return Err(GfaError::invalid("need at least one loading"));
    }
    if column.len() != feature_names.len() {
        return Err(GfaError::invalid(format!(
            "{} weights for {} feature names",
            column.len(),
            feature_names.len()
        )));
    }
    let mut order: Vec<usize> = (0..column.len()).collect();
    order.sort_by(|a, b| {
        column[*b]
            .abs()
            .partial_cmp(&column[*a].abs())
            .expect("finite")
            .then(a.cmp(b))
    });
    let take = n.min(column.len());
    let entries: Vec<(String, R)> = order[..take]
        .iter()
        .map(|i| (feature_names[*i].clone(), column[*i]))
        .collect();
    Ok(TopLoadings {
        degenerate: column.iter().all(|w| *w == R::zero()),
        entries,
    })
}

/// Absolute Pearson correlation; zero-variance vectors correlate with
/// nothing and score 0.
fn abs_pearson<R: Real>(a: &[R], b: &[R]) -> R {
    let n = R::of(a.len() as f64);
    let mean_a = a.iter().copied().sum::<R>() / n;
    let mean_b = b.iter().copied().sum::<R>() / n;
    let mut cov = R::zero();
    let mut var_a = R::zero();
    let mut var_b = R::zero();
    for (x, y) in a.iter().zip(b) {
        let da = *x - mean_a;
        let db = *y - mean_b;
        cov += da * db;
        var_a += da * da;
        var_b += db * db;
    }
    if var_a == R::zero() || var_b == R::zero() {
        return R::zero();
    }
    (cov / (var_a * var_b).sqrt()).abs()
}

fn concatenated_loadings<R: Real>(summary: &PosteriorSummary<R>, k: usize) -> Vec<R> {
    summary
        .mean_state
        .w
        .iter()
        .flat_map(|w| w.column(k).to_vec())
        .collect()
}

/// Fraction of A's shared components reproduced in B.
///
/// Components are matched greedily on the absolute Pearson correlation of
/// their concatenated per-view loading vectors (largest correlation first,
/// each component used at most once); a shared component of A counts as
/// reproduced when its match reaches `match_threshold`. Permutations and
/// sign flips of either summary do not change the result.
pub fn chain_similarity<R: Real>(
    a: &PosteriorSummary<R>,
    b: &PosteriorSummary<R>,
    roles: &ViewRoleMap,
    match_threshold: R,
) -> Result<R> {
    if a.activity_mean.dim() != b.activity_mean.dim() {
        return Err(GfaError::invalid("summaries have different shapes"));
    }
    for (wa, wb) in a.mean_state.w.iter().zip(&b.mean_state.w) {
        if wa.dim() != wb.dim() {
            return Err(GfaError::invalid("summaries have different loading shapes"));
        }
    }
    let activity = activity_matrix(a, R::of(DEFAULT_ACTIVITY_THRESHOLD))?;
    let kinds = classify_components(&activity, roles)?;
    let shared: Vec<usize> = kinds
        .iter()
        .enumerate()
        .filter(|(_, k)| matches!(k, ComponentKind::Shared))
        .map(|(i, _)| i)
        .collect();
    if shared.is_empty() {
        return Err(GfaError::no_result("no shared components to compare"));
    }

    let k_total = b.activity_mean.ncols();
    let a_vecs: Vec<Vec<R>> = shared
        .iter()
        .map(|k| concatenated_loadings(a, *k))
        .collect();
    let b_vecs: Vec<Vec<R>> = (0..k_total).map(|k| concatenated_loadings(b, k)).collect();

    let mut pairs: Vec<(R, usize, usize)> = Vec::with_capacity(shared.len() * k_total);
    for (ai, av) in a_vecs.iter().enumerate() {
        for (bi, bv) in b_vecs.iter().enumerate() {
            pairs.push((abs_pearson(av, bv), ai, bi));
        }
    }
    pairs.sort_by(|x, y| {
        y.0.partial_cmp(&x.0)
            .expect("correlations are finite")
            .then(x.1.cmp(&y.1))
            .then(x.2.cmp(&y.2))
    });
    let mut a_used = vec![false; shared.len()];
    let mut b_used = vec![false; k_total];
    let mut reproduced = 0usize;
    for (corr, ai, bi) in pairs {
        if a_used[ai] || b_used[bi] {
            continue;
        }
        a_used[ai] = true;
        b_used[bi] = true;
        if corr >= match_threshold {
            reproduced += 1;
        }
    }
    Ok(R::of(reproduced as f64) / R::of(shared.len() as f64))
}

/// Everything the reporting layer needs about one component.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentReport<R: Real> {
    pub component_id: usize,
    /// Per-view activity flags.
    pub activity: Vec<bool>,
    pub kind: ComponentKind,
    /// Variance-rank label ("1", "SP2", …); inactive components have none.
    pub label: Option<String>,
    pub variance: R,
    /// (sample id, score, q-value), sorted by decreasing |score|.
    pub significant_samples: Vec<(String, R, R)>,
    /// Per active view: (view name, top loadings).
    pub top_loadings: Vec<(String, TopLoadings<R>)>,
}

pub struct ReportOptions<R: Real> {
    pub activity_threshold: R,
    pub n_top_loadings: usize,
    pub q_threshold: R,
    pub n_permutations: usize,
}

impl<R: Real> Default for ReportOptions<R> {
    fn default() -> Self {
        ReportOptions {
            activity_threshold: R::of(DEFAULT_ACTIVITY_THRESHOLD),
            n_top_loadings: DEFAULT_TOP_LOADINGS,
            q_threshold: R::of(DEFAULT_Q_THRESHOLD),
            n_permutations: DEFAULT_N_PERMUTATIONS,
        }
    }
}

/// Builds the full per-component report set from a posterior summary:
/// thresholded activity, classification, variance ordering, activation
/// q-values from the mean scores, and top loadings per active view.
#[allow(clippy::too_many_arguments)]
pub fn build_component_reports<R: Real, G: Rng + ?Sized>(
    summary: &PosteriorSummary<R>,
    roles: &ViewRoleMap,
    sample_ids: &[String],
    feature_names: &[Vec<String>],
    view_names: &[String],
    variance: &[R],
    options: &ReportOptions<R>,
    rng: &mut G,
) -> Result<Vec<ComponentReport<R>>> {
    let k_total = summary.activity_mean.ncols();
    let m = summary.activity_mean.nrows();
    if sample_ids.len() != summary.mean_state.n_samples() {
        return Err(GfaError::invalid("sample id count does not match summary"));
    }
    if feature_names.len() != m || view_names.len() != m {
        return Err(GfaError::invalid("per-view name lists do not match summary"));
    }
    if variance.len() != k_total {
        return Err(GfaError::invalid("variance vector does not match summary"));
    }
    let activity = activity_matrix(summary, options.activity_threshold)?;
    let kinds = classify_components(&activity, roles)?;
    let labels = order_components(variance, &kinds)?;
    let mut label_of: Vec<Option<String>> = vec![None; k_total];
    for l in labels {
        label_of[l.component] = Some(l.label);
    }

    let mut reports = Vec::with_capacity(k_total);
    for kk in 0..k_total {
        let active: Vec<bool> = (0..m).map(|mi| activity[[mi, kk]]).collect();
        let kind = kinds[kk].clone();
        let (sig, tops) = if matches!(kind, ComponentKind::Inactive) {
            (Vec::new(), Vec::new())
        } else {
            let scores: Vec<R> = summary.mean_state.z.column(kk).to_vec();
            let sig = significant_samples(
                &scores,
                options.n_permutations,
                options.q_threshold,
                rng,
            )?
            .into_iter()
            .map(|s| (sample_ids[s.index].clone(), s.score, s.q_value))
            .collect();
            let mut tops = Vec::new();
            for mi in 0..m {
                if !activity[[mi, kk]] {
                    continue;
                }
                let column: Vec<R> = summary.mean_state.w[mi].column(kk).to_vec();
                tops.push((
                    view_names[mi].clone(),
                    top_loadings(&column, &feature_names[mi], options.n_top_loadings)?,
                ));
            }
            (sig, tops)
        };
        reports.push(ComponentReport {
            component_id: kk,
            activity: active,
            kind,
            label: label_of[kk].clone(),
            variance: variance[kk],
            significant_samples: sig,
            top_loadings: tops,
        });
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelState;
    use ndarray::{array, Array1};
    use rand::SeedableRng;
    use rand_xoshiro::Xoshiro256PlusPlus;

    fn rng(seed: u64) -> Xoshiro256PlusPlus {
        Xoshiro256PlusPlus::seed_from_u64(seed)
    }

    fn summary_from(w: Vec<Array2<f64>>, activity_mean: Array2<f64>) -> PosteriorSummary<f64> {
        let k = activity_mean.ncols();
        let h = activity_mean.mapv(|a| a >= 0.5);
        PosteriorSummary {
            mean_state: ModelState {
                z: Array2::from_elem((4, k), 0.1),
                h,
                pi: vec![0.5; k],
                alpha: w.iter().map(|wm| Array2::from_elem(wm.dim(), 1.0)).collect(),
                tau: w.iter().map(|wm| Array1::from_elem(wm.nrows(), 1.0)).collect(),
                w,
            },
            activity_mean,
        }
    }

    #[test]
    fn activity_matrix_thresholding() {
        let s = summary_from(
            vec![Array2::from_elem((2, 2), 1.0), Array2::from_elem((3, 2), 1.0)],
            array![[1.0, 0.5], [0.49, 0.0]],
        );
        let a = activity_matrix(&s, 0.5).unwrap();
        assert_eq!(a, array![[true, true], [false, false]]);
        // Monotonicity: raising the threshold never activates an entry.
        let strict = activity_matrix(&s, 0.8).unwrap();
        for (lo, hi) in a.iter().zip(strict.iter()) {
            assert!(*lo || !*hi);
        }
        assert!(activity_matrix(&s, 1.5).is_err());
    }

    #[test]
    fn classification_follows_roles() {
        let roles = ViewRoleMap::new(vec![
            "chemistry".into(),
            "biology".into(),
            "biology".into(),
            "biology".into(),
        ])
        .unwrap();
        let activity = array![
            [true, false, false],
            [true, true, false],
            [false, true, false],
            [false, true, false]
        ];
        let kinds = classify_components(&activity, &roles).unwrap();
        assert_eq!(kinds[0], ComponentKind::Shared);
        assert_eq!(
            kinds[1],
            ComponentKind::ViewSpecific {
                role: "biology".into()
            }
        );
        assert_eq!(kinds[2], ComponentKind::Inactive);
    }

    #[test]
    fn ordering_labels_by_variance() {
        let kinds = vec![
            ComponentKind::Shared,
            ComponentKind::Shared,
            ComponentKind::ViewSpecific { role: "x".into() },
            ComponentKind::Inactive,
        ];
        let ve = [5.0, 9.0, 1.0, 100.0];
        let labels = order_components(&ve, &kinds).unwrap();
        assert_eq!(labels.len(), 3);
        assert_eq!((labels[0].component, labels[0].label.as_str()), (1, "1"));
        assert_eq!((labels[1].component, labels[1].label.as_str()), (0, "2"));
        assert_eq!((labels[2].component, labels[2].label.as_str()), (2, "SP1"));

        // Equal variances keep index order.
        let kinds = vec![ComponentKind::Shared, ComponentKind::Shared];
        let labels = order_components(&[3.0, 3.0], &kinds).unwrap();
        assert_eq!(labels[0].component, 0);
        assert_eq!(labels[1].component, 1);
    }

    #[test]
    fn significance_on_uniform_scores() {
        let mut r = rng(1);
        // All scores equal: the pooled null makes every p identical and
        // nothing passes an ordinary threshold.
        let scores = vec![2.5; 40];
        let hits = significant_samples(&scores, 500, 0.05, &mut r).unwrap();
        assert!(hits.is_empty());

        // Constant zero column: empty result, no error.
        let zeros = vec![0.0; 40];
        let hits = significant_samples(&zeros, 500, 0.05, &mut rng(2)).unwrap();
        assert!(hits.is_empty());

        assert!(significant_samples(&scores, 50, 0.05, &mut rng(3)).is_err());
    }

    /// One huge score among standard normal noise: that sample gets the
    /// smallest q-value and leads the returned list. Verified against a
    /// brute-force recount of the pooled null using the same seeded draws.
    #[test]
    fn significance_flags_planted_outlier() {
        let n = 50usize;
        let n_perm = 400usize;
        let seed = 77u64;
        let mut scores = vec![0.0f64; n];
        let mut noise_rng = rng(5);
        for s in scores.iter_mut().skip(1) {
            *s = f64::standard_normal(&mut noise_rng);
        }
        scores[0] = 100.0;

        let hits = significant_samples(&scores, n_perm, 1.0, &mut rng(seed)).unwrap();
        assert!(!hits.is_empty());
        assert_eq!(hits[0].index, 0, "outlier must lead the report");
        let min_q = hits.iter().map(|h| h.q_value).fold(f64::INFINITY, f64::min);
        assert_eq!(hits[0].q_value, min_q);

        // Brute-force oracle: replay the identical draw sequence and count
        // the pooled null directly, one comparison at a time.
        let mut r = rng(seed);
        let mut perm: Vec<usize> = (0..n).collect();
        let mut null_pool: Vec<f64> = Vec::with_capacity(n * n_perm);
        for _ in 0..n_perm {
            perm.shuffle(&mut r);
            for slot in 0..n {
                let positive = f64::uniform(&mut r) < 0.5;
                let magnitude = scores[perm[slot]].abs();
                null_pool.push(if positive { magnitude } else { -magnitude });
            }
        }
        let brute_p: Vec<f64> = scores
            .iter()
            .map(|z| {
                let count = null_pool.iter().filter(|v| **v >= z.abs()).count();
                (1.0 + count as f64) / ((n_perm * n + 1) as f64)
            })
            .collect();
        let brute_q = benjamini_hochberg(&brute_p);
        for h in &hits {
            assert!(
                (h.q_value - brute_q[h.index]).abs() < 1e-12,
                "q mismatch at {}",
                h.index
            );
        }
    }

    #[test]
    fn significance_invariances() {
        let base: Vec<f64> = (0..30).map(|i| (i as f64 - 14.0) / 3.0).collect();
        let flipped: Vec<f64> = base.iter().map(|v| -v).collect();
        let scaled: Vec<f64> = base.iter().map(|v| 7.5 * v).collect();
        let a = significant_samples(&base, 300, 1.0, &mut rng(9)).unwrap();
        let b = significant_samples(&flipped, 300, 1.0, &mut rng(9)).unwrap();
        let c = significant_samples(&scaled, 300, 1.0, &mut rng(9)).unwrap();
        let qs = |v: &[ScoreSignificance<f64>]| -> Vec<(usize, f64)> {
            v.iter().map(|s| (s.index, s.q_value)).collect()
        };
        assert_eq!(qs(&a), qs(&b));
        assert_eq!(qs(&a), qs(&c));
    }

    #[test]
    fn bh_is_monotone_in_rank() {
        let p = vec![0.01, 0.4, 0.03, 0.9, 0.05];
        let q = benjamini_hochberg(&p);
        let mut order: Vec<usize> = (0..p.len()).collect();
        order.sort_by(|a, b| p[*a].partial_cmp(&p[*b]).unwrap());
        for pair in order.windows(2) {
            assert!(q[pair[0]] <= q[pair[1]]);
        }
        assert!(q.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn top_loadings_examples() {
        let names: Vec<String> = vec!["a".into(), "b".into(), "c".into()];
        let t = top_loadings(&[-5.0, 2.0, 0.0], &names, 2).unwrap();
        assert_eq!(t.entries, vec![("a".to_string(), -5.0), ("b".to_string(), 2.0)]);
        assert!(!t.degenerate);

        // Asking for more than exist returns everything.
        let t = top_loadings(&[-5.0, 2.0, 0.0], &names, 30).unwrap();
        assert_eq!(t.entries.len(), 3);

        let t = top_loadings(&[0.0, 0.0, 0.0], &names, 2).unwrap();
        assert!(t.degenerate);
        assert_eq!(t.entries.len(), 2);
        assert!(top_loadings(&[1.0], &names[..1], 0).is_err());
    }

    fn structured_summary(seed: u64) -> PosteriorSummary<f64> {
        let mut r = rng(seed);
        let mut w1 = Array2::from_shape_fn((6, 3), |_| f64::standard_normal(&mut r));
        let w2 = Array2::from_shape_fn((5, 3), |_| f64::standard_normal(&mut r));
        // Component 2 inactive in view 1.
        w1.column_mut(2).fill(0.0);
        summary_from(
            vec![w1, w2],
            array![[1.0, 1.0, 0.0], [1.0, 1.0, 1.0]],
        )
    }

    #[test]
    fn chain_similarity_self_and_transformed() {
        let roles = ViewRoleMap::new(vec!["chemistry".into(), "biology".into()]).unwrap();
        let a = structured_summary(31);
        assert_eq!(chain_similarity(&a, &a, &roles, 0.8).unwrap(), 1.0);

        // Permute components and flip signs: still fully reproduced.
        let mut b = a.clone();
        let k = a.activity_mean.ncols();
        for w in b.mean_state.w.iter_mut() {
            let original = w.clone();
            for kk in 0..k {
                let src = (kk + 1) % k;
                let sign = if kk % 2 == 0 { -1.0 } else { 1.0 };
                w.column_mut(kk).assign(&original.column(src).mapv(|v| sign * v));
            }
        }
        assert_eq!(chain_similarity(&a, &b, &roles, 0.8).unwrap(), 1.0);
    }

    #[test]
    fn chain_similarity_rejects_noise_and_empty() {
        let roles = ViewRoleMap::new(vec!["chemistry".into(), "biology".into()]).unwrap();
        let a = structured_summary(32);
        let mut r = rng(33);
        let mut b = a.clone();
        for w in b.mean_state.w.iter_mut() {
            for v in w.iter_mut() {
                *v = f64::standard_normal(&mut r);
            }
        }
        let frac = chain_similarity(&a, &b, &roles, 0.8).unwrap();
        assert_eq!(frac, 0.0);

        // No shared components at all.
        let lonely = summary_from(
            vec![Array2::from_elem((2, 1), 1.0), Array2::from_elem((2, 1), 0.0)],
            array![[1.0], [0.0]],
        );
        assert!(matches!(
            chain_similarity(&lonely, &lonely, &roles, 0.8),
            Err(GfaError::NoResult(_))
        ));
    }

    #[test]
    fn reports_cover_all_components() {
        let roles = ViewRoleMap::new(vec!["chemistry".into(), "biology".into()]).unwrap();
        let summary = structured_summary(41);
        let sample_ids: Vec<String> = (0..4).map(|i| format!("s{i}")).collect();
        let feature_names = vec![
            (0..6).map(|i| format!("c{i}")).collect::<Vec<_>>(),
            (0..5).map(|i| format!("g{i}")).collect::<Vec<_>>(),
        ];
        let view_names = vec!["chem".to_string(), "expr".to_string()];
        let variance = vec![3.0, 5.0, 1.0];
        let reports = build_component_reports(
            &summary,
            &roles,
            &sample_ids,
            &feature_names,
            &view_names,
            &variance,
            &ReportOptions {
                n_permutations: 200,
                ..ReportOptions::default()
            },
            &mut rng(55),
        )
        .unwrap();
        assert_eq!(reports.len(), 3);
        assert_eq!(reports[0].label.as_deref(), Some("2"));
        assert_eq!(reports[1].label.as_deref(), Some("1"));
        assert_eq!(reports[2].label.as_deref(), Some("SP1"));
        assert_eq!(reports[2].kind, ComponentKind::ViewSpecific { role: "biology".into() });
        // Component 2 is inactive in view 0: loadings only for the active view.
        assert_eq!(reports[2].top_loadings.len(), 1);
        assert_eq!(reports[2].top_loadings[0].0, "expr");
    }
}
