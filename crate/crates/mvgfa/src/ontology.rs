//! Ontology-graph validation: inverse-path-distance similarity of component
//! member sets against size-matched random baselines, across a range of
//! path-length thresholds.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use rand::Rng;

use crate::error::{GfaError, Result};
use crate::real::Real;

pub const DEFAULT_N_DRAWS: usize = 1000;

/// Path-length thresholds 2..=16.
pub fn default_lengths() -> Vec<usize> {
    (2..=16).collect()
}

const UNREACHABLE: u32 = u32::MAX;

/// Undirected, unweighted, simple graph over labeled nodes (compounds plus
/// ontology terms), with all compound-to-compound shortest path distances
/// precomputed by BFS.
#[derive(Debug, Clone)]
pub struct OntologyGraph {
    labels: Vec<String>,
    index: HashMap<String, usize>,
    adjacency: Vec<Vec<u32>>,
    /// Node indices of the compounds, in input order (first occurrence).
    compounds: Vec<u32>,
    /// compound node index → position in `compounds`.
    compound_pos: HashMap<usize, usize>,
    /// Pairwise compound distances, `UNREACHABLE` when no path exists.
    distances: Vec<Vec<u32>>,
}

fn bfs_distances(adjacency: &[Vec<u32>], start: usize) -> Vec<u32> {
    let mut dist = vec![UNREACHABLE; adjacency.len()];
    dist[start] = 0;
    let mut queue = VecDeque::from([start]);
    while let Some(u) = queue.pop_front() {
        let du = dist[u];
        for v in &adjacency[u] {
            let v = *v as usize;
            if dist[v] == UNREACHABLE {
                dist[v] = du + 1;
                queue.push_back(v);
            }
        }
    }
    dist
}

/// Builds a validated graph from an edge list. Duplicate edges collapse to
/// one; self-loops are rejected; every compound id must appear as a node.
/// Duplicate compound ids are kept once.
pub fn build_graph(edges: &[(String, String)], compound_ids: &[String]) -> Result<OntologyGraph> {
    if edges.is_empty() {
        return Err(GfaError::invalid("edge list is empty"));
    }
    let mut labels: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut intern = |label: &str, labels: &mut Vec<String>| -> Result<usize> {
        if label.is_empty() {
            return Err(GfaError::invalid("empty node label"));
        }
        Ok(*index.entry(label.to_string()).or_insert_with(|| {
            labels.push(label.to_string());
            labels.len() - 1
        }))
    };
    let mut edge_set: BTreeSet<(usize, usize)> = BTreeSet::new();
    for (a, b) in edges {
        let ia = intern(a, &mut labels)?;
        let ib = intern(b, &mut labels)?;
        if ia == ib {
            return Err(GfaError::invalid(format!("self-loop at node '{a}'")));
        }
        edge_set.insert((ia.min(ib), ia.max(ib)));
    }
    let mut adjacency = vec![Vec::new(); labels.len()];
    for (a, b) in &edge_set {
        adjacency[*a].push(*b as u32);
        adjacency[*b].push(*a as u32);
    }

    let mut compounds: Vec<u32> = Vec::new();
    let mut compound_pos: HashMap<usize, usize> = HashMap::new();
    for id in compound_ids {
        let node = *index.get(id).ok_or_else(|| {
            GfaError::invalid(format!("compound id '{id}' is not a node of the graph"))
        })?;
        if let std::collections::hash_map::Entry::Vacant(e) = compound_pos.entry(node) {
            e.insert(compounds.len());
            compounds.push(node as u32);
        }
    }
    if compounds.is_empty() {
        return Err(GfaError::invalid("no compound ids supplied"));
    }

    let mut distances = Vec::with_capacity(compounds.len());
    for c in &compounds {
        let all = bfs_distances(&adjacency, *c as usize);
        distances.push(compounds.iter().map(|o| all[*o as usize]).collect());
    }
    Ok(OntologyGraph {
        labels,
        index,
        adjacency,
        compounds,
        compound_pos,
        distances,
    })
}

/// Result of averaging pair similarities over one member set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SetSimilarity<R: Real> {
    pub value: R,
    /// Members found among the graph's compounds.
    pub retained: usize,
    /// Members silently absent from the graph.
    pub dropped: usize,
}

impl OntologyGraph {
    pub fn n_nodes(&self) -> usize {
        self.labels.len()
    }

    pub fn n_compounds(&self) -> usize {
        self.compounds.len()
    }

    pub fn n_edges(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn is_compound(&self, label: &str) -> bool {
        self.index
            .get(label)
            .is_some_and(|i| self.compound_pos.contains_key(i))
    }

    /// Shortest-path distance between two compounds; `None` when they are
    /// disconnected.
    pub fn compound_distance(&self, u: &str, v: &str) -> Result<Option<usize>> {
        let pu = self.compound_position(u)?;
        let pv = self.compound_position(v)?;
        let d = self.distances[pu][pv];
        Ok((d != UNREACHABLE).then_some(d as usize))
    }

    fn compound_position(&self, label: &str) -> Result<usize> {
        let node = self
            .index
            .get(label)
            .ok_or_else(|| GfaError::invalid(format!("unknown node '{label}'")))?;
        self.compound_pos
            .get(node)
            .copied()
            .ok_or_else(|| GfaError::invalid(format!("node '{label}' is not a compound")))
    }

    /// Inverse path distance `1/d(u, v)`, zero beyond `max_len` or for
    /// disconnected pairs. The two compounds must be distinct.
    pub fn pair_similarity<R: Real>(&self, u: &str, v: &str, max_len: usize) -> Result<R> {
        let pu = self.compound_position(u)?;
        let pv = self.compound_position(v)?;
        if pu == pv {
            return Err(GfaError::invalid(
                "pair similarity of a compound with itself is undefined",
            ));
        }
        Ok(self.similarity_from_distance(self.distances[pu][pv], max_len))
    }

    fn similarity_from_distance<R: Real>(&self, d: u32, max_len: usize) -> R {
        if d == UNREACHABLE || d as usize > max_len || d == 0 {
            R::zero()
        } else {
            R::of(1.0 / d as f64)
        }
    }

    /// Average pair similarity over all unordered distinct pairs of the
    /// retained members (those present among the compounds, deduplicated).
    /// Fewer than two retained members is a no-result.
    pub fn set_similarity<R: Real>(
        &self,
        members: &[String],
        max_len: usize,
    ) -> Result<SetSimilarity<R>> {
        let mut retained: Vec<usize> = Vec::new();
        let mut seen = BTreeSet::new();
        let mut dropped = 0usize;
        for m in members {
            match self.compound_position(m) {
                Ok(pos) => {
                    if seen.insert(pos) {
                        retained.push(pos);
                    }
                }
                Err(_) => dropped += 1,
            }
        }
        if retained.len() < 2 {
            return Err(GfaError::no_result(format!(
                "set has {} member(s) in the graph, need at least 2",
                retained.len()
            )));
        }
        let value = self.mean_pair_similarity(&retained, max_len);
        Ok(SetSimilarity {
            value,
            retained: retained.len(),
            dropped,
        })
    }

    fn mean_pair_similarity<R: Real>(&self, positions: &[usize], max_len: usize) -> R {
        let mut total = R::zero();
        let mut pairs = 0usize;
        for i in 0..positions.len() {
            for j in (i + 1)..positions.len() {
                total +=
                    self.similarity_from_distance(self.distances[positions[i]][positions[j]], max_len);
                pairs += 1;
            }
        }
        total / R::of(pairs as f64)
    }

    /// Mean set similarity across all evaluable member sets, one value per
    /// threshold. Sets with fewer than two retained members are skipped; no
    /// evaluable set at all is a no-result.
    pub fn component_curve<R: Real>(
        &self,
        member_sets: &[Vec<String>],
        lengths: &[usize],
    ) -> Result<Vec<R>> {
        validate_lengths(lengths)?;
        let mut evaluable: Vec<Vec<usize>> = Vec::new();
        for set in member_sets {
            let mut retained: Vec<usize> = Vec::new();
            let mut seen = BTreeSet::new();
            for m in set {
                if let Ok(pos) = self.compound_position(m) {
                    if seen.insert(pos) {
                        retained.push(pos);
                    }
                }
            }
            if retained.len() >= 2 {
                evaluable.push(retained);
            }
        }
        if evaluable.is_empty() {
            return Err(GfaError::no_result("no member set is evaluable"));
        }
        let n_sets = R::of(evaluable.len() as f64);
        Ok(lengths
            .iter()
            .map(|len| {
                evaluable
                    .iter()
                    .map(|set| self.mean_pair_similarity::<R>(set, *len))
                    .sum::<R>()
                    / n_sets
            })
            .collect())
    }

    /// Sizes of the evaluable member sets (retained members, deduplicated),
    /// in input order. These are the sizes `random_baseline` should match.
    pub fn evaluable_set_sizes(&self, member_sets: &[Vec<String>]) -> Vec<usize> {
        member_sets
            .iter()
            .filter_map(|set| {
                let mut seen = BTreeSet::new();
                for m in set {
                    if let Ok(pos) = self.compound_position(m) {
                        seen.insert(pos);
                    }
                }
                (seen.len() >= 2).then_some(seen.len())
            })
            .collect()
    }

    /// Null curve from `n_draws` collections of uniformly drawn compound
    /// sets matching the observed set sizes. Returns the per-threshold mean
    /// and sample standard deviation over draws.
    pub fn random_baseline<R: Real, G: Rng + ?Sized>(
        &self,
        set_sizes: &[usize],
        lengths: &[usize],
        n_draws: usize,
        rng: &mut G,
    ) -> Result<(Vec<R>, Vec<R>)> {
        validate_lengths(lengths)?;
        if n_draws < 2 {
            return Err(GfaError::invalid("need at least 2 baseline draws"));
        }
        if set_sizes.is_empty() {
            return Err(GfaError::invalid("no set sizes supplied"));
        }
        for s in set_sizes {
            if *s < 2 {
                return Err(GfaError::invalid(format!("set size {s} is below 2")));
            }
            if *s > self.n_compounds() {
                return Err(GfaError::invalid(format!(
                    "set size {s} exceeds the {} compounds in the graph",
                    self.n_compounds()
                )));
            }
        }
        let n_sets = R::of(set_sizes.len() as f64);
        let mut curves: Vec<Vec<R>> = Vec::with_capacity(n_draws);
        let mut pool: Vec<usize> = (0..self.n_compounds()).collect();
        for _ in 0..n_draws {
            let mut curve = vec![R::zero(); lengths.len()];
            for size in set_sizes {
                let sample = partial_shuffle(&mut pool, *size, rng);
                for (li, len) in lengths.iter().enumerate() {
                    curve[li] += self.mean_pair_similarity::<R>(&sample, *len);
                }
            }
            for v in curve.iter_mut() {
                *v /= n_sets;
            }
            curves.push(curve);
        }
        let n_r = R::of(n_draws as f64);
        let mut means = vec![R::zero(); lengths.len()];
        for curve in &curves {
            for (mi, v) in means.iter_mut().zip(curve) {
                *mi += *v;
            }
        }
        for v in means.iter_mut() {
            *v /= n_r;
        }
        let mut stds = vec![R::zero(); lengths.len()];
        for curve in &curves {
            for ((s, v), m) in stds.iter_mut().zip(curve).zip(&means) {
                let d = *v - *m;
                *s += d * d;
            }
        }
        for s in stds.iter_mut() {
            *s = (*s / (n_r - R::one())).sqrt();
        }
        Ok((means, stds))
    }
}

/// Draws `size` distinct items from the pool by partial Fisher–Yates.
fn partial_shuffle<G: Rng + ?Sized>(pool: &mut [usize], size: usize, rng: &mut G) -> Vec<usize> {
    let n = pool.len();
    for i in 0..size {
        let j = i + rng.random_range(0..(n - i));
        pool.swap(i, j);
    }
    pool[..size].to_vec()
}

fn validate_lengths(lengths: &[usize]) -> Result<()> {
    if lengths.is_empty() {
        return Err(GfaError::invalid("no path-length thresholds supplied"));
    }
    if lengths.windows(2).any(|w| w[0] >= w[1]) {
        return Err(GfaError::invalid(
            "path-length thresholds must be strictly increasing",
        ));
    }
    Ok(())
}

/// Observed curve and its random baseline, one row per threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityCurve<R: Real> {
    pub lengths: Vec<usize>,
    pub values: Vec<R>,
    pub baseline_mean: Vec<R>,
    pub baseline_std: Vec<R>,
}

impl<R: Real> SimilarityCurve<R> {
    pub fn new(
        lengths: Vec<usize>,
        values: Vec<R>,
        baseline_mean: Vec<R>,
        baseline_std: Vec<R>,
    ) -> Result<Self> {
        validate_lengths(&lengths)?;
        if values.len() != lengths.len()
            || baseline_mean.len() != lengths.len()
            || baseline_std.len() != lengths.len()
        {
            return Err(GfaError::invalid("curve columns have unequal lengths"));
        }
        if values.iter().any(|v| *v < R::zero()) {
            return Err(GfaError::invalid("similarity values must be nonnegative"));
        }
        Ok(SimilarityCurve {
            lengths,
            values,
            baseline_mean,
            baseline_std,
        })
    }
}

/// Convenience wrapper: observed component curve plus size-matched baseline
/// in a single [`SimilarityCurve`].
pub fn build_similarity_curve<R: Real, G: Rng + ?Sized>(
    graph: &OntologyGraph,
    member_sets: &[Vec<String>],
    lengths: &[usize],
    n_draws: usize,
    rng: &mut G,
) -> Result<SimilarityCurve<R>> {
    let values = graph.component_curve::<R>(member_sets, lengths)?;
    let sizes = graph.evaluable_set_sizes(member_sets);
    let (baseline_mean, baseline_std) = graph.random_baseline(&sizes, lengths, n_draws, rng)?;
    SimilarityCurve::new(lengths.to_vec(), values, baseline_mean, baseline_std)
}

/// Summary of how member sets map into the graph, for run logs.
pub fn membership_report(graph: &OntologyGraph, member_sets: &[Vec<String>]) -> BTreeMap<usize, (usize, usize)> {
    member_sets
        .iter()
        .enumerate()
        .map(|(i, set)| {
            let mut seen = BTreeSet::new();
            let mut dropped = 0usize;
            for m in set {
                if let Ok(pos) = graph.compound_position(m) {
                    seen.insert(pos);
                } else {
                    dropped += 1;
                }
            }
            (i, (seen.len(), dropped))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_xoshiro::Xoshiro256PlusPlus;

    fn edges(list: &[(&str, &str)]) -> Vec<(String, String)> {
        list.iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect()
    }

    fn strs(list: &[&str]) -> Vec<String> {
        list.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn two_compounds_via_one_term() {
        let g = build_graph(
            &edges(&[("c1", "t"), ("c2", "t")]),
            &strs(&["c1", "c2"]),
        )
        .unwrap();
        assert_eq!(g.compound_distance("c1", "c2").unwrap(), Some(2));
        assert_eq!(g.pair_similarity::<f64>("c1", "c2", 2).unwrap(), 0.5);
        assert_eq!(g.pair_similarity::<f64>("c1", "c2", 1).unwrap(), 0.0);
    }

    #[test]
    fn duplicate_edges_collapse_and_self_loops_fail() {
        let g = build_graph(
            &edges(&[("a", "b"), ("b", "a"), ("a", "b")]),
            &strs(&["a", "b"]),
        )
        .unwrap();
        assert_eq!(g.n_edges(), 1);
        assert!(build_graph(&edges(&[("a", "a")]), &strs(&["a"])).is_err());
        assert!(build_graph(&edges(&[("a", "b")]), &strs(&["zzz"])).is_err());
    }

    #[test]
    fn disconnected_pairs_score_zero() {
        let g = build_graph(
            &edges(&[("c1", "t1"), ("c2", "t2")]),
            &strs(&["c1", "c2"]),
        )
        .unwrap();
        assert_eq!(g.compound_distance("c1", "c2").unwrap(), None);
        assert_eq!(g.pair_similarity::<f64>("c1", "c2", 100).unwrap(), 0.0);
    }

    #[test]
    fn pair_similarity_is_symmetric_and_rejects_self() {
        let g = build_graph(
            &edges(&[("c1", "t"), ("t", "u"), ("u", "c2")]),
            &strs(&["c1", "c2"]),
        )
        .unwrap();
        let a: f64 = g.pair_similarity("c1", "c2", 16).unwrap();
        let b: f64 = g.pair_similarity("c2", "c1", 16).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, 1.0 / 3.0);
        assert!(g.pair_similarity::<f64>("c1", "c1", 16).is_err());
        assert!(g.pair_similarity::<f64>("c1", "t", 16).is_err());
        assert!(g.pair_similarity::<f64>("c1", "nope", 16).is_err());
    }

    /// Star graph: three compounds all at distance 2 through a shared term.
    #[test]
    fn set_similarity_examples() {
        let g = build_graph(
            &edges(&[("c1", "t"), ("c2", "t"), ("c3", "t")]),
            &strs(&["c1", "c2", "c3"]),
        )
        .unwrap();
        let s: SetSimilarity<f64> = g
            .set_similarity(&strs(&["c1", "c2", "c3"]), 16)
            .unwrap();
        assert_eq!(s.value, 0.5);
        assert_eq!((s.retained, s.dropped), (3, 0));

        // Distances {2, 4, 4} → (1/2 + 1/4 + 1/4)/3 = 1/3.
        let g = build_graph(
            &edges(&[
                ("c1", "t1"),
                ("c2", "t1"),
                ("c1", "u1"),
                ("u1", "u2"),
                ("u2", "u3"),
                ("u3", "c3"),
                ("c2", "v1"),
                ("v1", "v2"),
                ("v2", "v3"),
                ("v3", "c3"),
            ]),
            &strs(&["c1", "c2", "c3"]),
        )
        .unwrap();
        assert_eq!(g.compound_distance("c1", "c3").unwrap(), Some(4));
        assert_eq!(g.compound_distance("c2", "c3").unwrap(), Some(4));
        let s: SetSimilarity<f64> = g
            .set_similarity(&strs(&["c1", "c2", "c3"]), 16)
            .unwrap();
        assert!((s.value - 1.0 / 3.0).abs() < 1e-15);

        // Members absent from the graph are dropped; too few is a no-result.
        let s: SetSimilarity<f64> = g
            .set_similarity(&strs(&["c1", "c2", "ghost"]), 16)
            .unwrap();
        assert_eq!((s.retained, s.dropped), (2, 1));
        assert!(matches!(
            g.set_similarity::<f64>(&strs(&["ghost", "phantom"]), 16),
            Err(GfaError::NoResult(_))
        ));
    }

    #[test]
    fn curve_is_monotone_in_threshold() {
        let g = build_graph(
            &edges(&[
                ("c1", "t1"),
                ("c2", "t1"),
                ("c3", "t2"),
                ("t1", "t2"),
                ("c4", "t3"),
                ("t2", "t3"),
            ]),
            &strs(&["c1", "c2", "c3", "c4"]),
        )
        .unwrap();
        let lengths = default_lengths();
        let sets = vec![strs(&["c1", "c2", "c3"]), strs(&["c2", "c3", "c4"])];
        let curve: Vec<f64> = g.component_curve(&sets, &lengths).unwrap();
        for w in curve.windows(2) {
            assert!(w[1] >= w[0]);
        }
        // Single evaluable set: curve equals that set's own values.
        let single: Vec<f64> = g
            .component_curve(&[strs(&["c1", "c2", "c3"])], &lengths)
            .unwrap();
        for (li, len) in lengths.iter().enumerate() {
            let s: SetSimilarity<f64> = g.set_similarity(&strs(&["c1", "c2", "c3"]), *len).unwrap();
            assert_eq!(single[li], s.value);
        }
        assert!(matches!(
            g.component_curve::<f64>(&[strs(&["ghost"])], &lengths),
            Err(GfaError::NoResult(_))
        ));
    }

    /// Complete graph on compounds: every pair at distance 1, baseline mean
    /// exactly 1 with zero spread.
    #[test]
    fn baseline_on_complete_graph_is_degenerate() {
        let names = ["k1", "k2", "k3", "k4"];
        let mut e = Vec::new();
        for i in 0..names.len() {
            for j in (i + 1)..names.len() {
                e.push((names[i].to_string(), names[j].to_string()));
            }
        }
        let g = build_graph(&e, &strs(&names)).unwrap();
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(5);
        let (mean, std) = g
            .random_baseline::<f64, _>(&[2, 3], &[1, 2, 3], 50, &mut rng)
            .unwrap();
        assert!(mean.iter().all(|m| (*m - 1.0).abs() < 1e-15));
        assert!(std.iter().all(|s| *s == 0.0));
    }

    #[test]
    fn baseline_is_deterministic_and_validates() {
        let g = build_graph(
            &edges(&[("c1", "t"), ("c2", "t"), ("c3", "t"), ("c4", "u"), ("t", "u")]),
            &strs(&["c1", "c2", "c3", "c4"]),
        )
        .unwrap();
        let lengths = [2usize, 4];
        let mut r1 = Xoshiro256PlusPlus::seed_from_u64(9);
        let mut r2 = Xoshiro256PlusPlus::seed_from_u64(9);
        let a = g.random_baseline::<f64, _>(&[2, 2], &lengths, 100, &mut r1).unwrap();
        let b = g.random_baseline::<f64, _>(&[2, 2], &lengths, 100, &mut r2).unwrap();
        assert_eq!(a, b);
        assert!(g
            .random_baseline::<f64, _>(&[9], &lengths, 100, &mut r1)
            .is_err());
        assert!(g
            .random_baseline::<f64, _>(&[2], &lengths, 1, &mut r1)
            .is_err());
        assert!(g.random_baseline::<f64, _>(&[1], &lengths, 10, &mut r1).is_err());
    }

    /// BFS distances against a brute-force Floyd–Warshall oracle on random
    /// graphs.
    #[test]
    fn bfs_matches_floyd_warshall() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(31);
        for _ in 0..10 {
            let n = 3 + rng.random_range(0..40usize);
            let mut e = Vec::new();
            for i in 0..n {
                for j in (i + 1)..n {
                    if rng.random_range(0..100u32) < 12 {
                        e.push((format!("n{i}"), format!("n{j}")));
                    }
                }
            }
            if e.is_empty() {
                e.push(("n0".into(), "n1".into()));
            }
            let labels: Vec<String> = (0..n).map(|i| format!("n{i}")).collect();
            let present: Vec<String> = labels
                .iter()
                .filter(|l| e.iter().any(|(a, b)| a == *l || b == *l))
                .cloned()
                .collect();
            let g = build_graph(&e, &present).unwrap();

            // Floyd–Warshall over the same node set.
            let nn = g.n_nodes();
            let big = usize::MAX / 4;
            let mut fw = vec![vec![big; nn]; nn];
            for (i, row) in fw.iter_mut().enumerate() {
                row[i] = 0;
            }
            for (a, b) in &e {
                let ia = g.index[a];
                let ib = g.index[b];
                fw[ia][ib] = 1;
                fw[ib][ia] = 1;
            }
            for k in 0..nn {
                for i in 0..nn {
                    for j in 0..nn {
                        let via = fw[i][k] + fw[k][j];
                        if via < fw[i][j] {
                            fw[i][j] = via;
                        }
                    }
                }
            }
            for u in &present {
                for v in &present {
                    if u == v {
                        continue;
                    }
                    let got = g.compound_distance(u, v).unwrap();
                    let want = fw[g.index[u]][g.index[v]];
                    match got {
                        Some(d) => assert_eq!(d, want, "{u} → {v}"),
                        None => assert!(want >= big, "{u} → {v}"),
                    }
                }
            }
        }
    }

    /// Planted clique: members pairwise at distance 2 through a hub term
    /// while the bulk of compounds sit farther away. The component curve at
    /// L = 2 must clear the baseline by more than two standard deviations.
    #[test]
    fn planted_clique_beats_baseline() {
        let mut e = Vec::new();
        for i in 0..6 {
            e.push((format!("m{i}"), "hub".to_string()));
        }
        // A long chain of background compounds hanging off the hub.
        let mut prev = "hub".to_string();
        for i in 0..40 {
            let t = format!("chain{i}");
            e.push((prev.clone(), t.clone()));
            let c = format!("bg{i}");
            e.push((t.clone(), c));
            prev = t;
        }
        let mut compounds: Vec<String> = (0..6).map(|i| format!("m{i}")).collect();
        compounds.extend((0..40).map(|i| format!("bg{i}")));
        let g = build_graph(&e, &compounds).unwrap();
        let members: Vec<String> = (0..6).map(|i| format!("m{i}")).collect();
        let lengths = default_lengths();
        let curve: Vec<f64> = g
            .component_curve(std::slice::from_ref(&members), &lengths)
            .unwrap();
        let sizes = g.evaluable_set_sizes(&[members]);
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(17);
        let (mean, std) = g
            .random_baseline::<f64, _>(&sizes, &lengths, DEFAULT_N_DRAWS, &mut rng)
            .unwrap();
        assert!(
            curve[0] > mean[0] + 2.0 * std[0],
            "clique {} vs baseline {} ± {}",
            curve[0],
            mean[0],
            std[0]
        );
    }
}
