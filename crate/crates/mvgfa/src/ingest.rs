//! Loading and preprocessing of view tables: replicate merging, top-N
//! up/down thresholding, pairing by row-id intersection, centering and
//! scaling.
//!
//! View file format: UTF-8 TSV, first row a header whose first field labels
//! the id column and whose remaining fields are the feature names; every
//! data row starts with the sample id. Strict parse: ragged rows, empty
//! files and non-finite values are errors.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use ndarray::{Array1, Array2};

use crate::data::{MultiViewDataset, ViewMatrix};
use crate::error::{GfaError, Result};
use crate::real::Real;

pub const DEFAULT_TOP_UP: usize = 2000;
pub const DEFAULT_TOP_DOWN: usize = 2000;

/// A raw profile table: rows may repeat (technical replicates).
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileTable<R: Real> {
    pub values: Array2<R>,
    pub row_ids: Vec<String>,
    pub feature_names: Vec<String>,
}

impl<R: Real> ProfileTable<R> {
    pub fn new(
        values: Array2<R>,
        row_ids: Vec<String>,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        let t = ProfileTable {
            values,
            row_ids,
            feature_names,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.values.ncols()
    }

    pub fn validate(&self) -> Result<()> {
        let (r, d) = self.values.dim();
        if self.row_ids.len() != r {
            return Err(GfaError::invalid(format!(
                "{} row ids for {r} rows",
                self.row_ids.len()
            )));
        }
        if self.feature_names.len() != d {
            return Err(GfaError::invalid(format!(
                "{} feature names for {d} columns",
                self.feature_names.len()
            )));
        }
        let mut seen = HashSet::new();
        for f in &self.feature_names {
            if !seen.insert(f.as_str()) {
                return Err(GfaError::invalid(format!("duplicate feature name '{f}'")));
            }
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(GfaError::invalid("table contains non-finite values"));
        }
        Ok(())
    }
}

/// Averages replicate rows (equal row ids) into one row each, keeping
/// first-appearance order. Idempotent.
pub fn merge_replicates<R: Real>(table: &ProfileTable<R>) -> ProfileTable<R> {
    let d = table.n_features();
    let mut order: Vec<&str> = Vec::new();
    let mut groups: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, id) in table.row_ids.iter().enumerate() {
        groups
            .entry(id.as_str())
            .or_insert_with(|| {
                order.push(id.as_str());
                Vec::new()
            })
            .push(i);
    }
    let mut values = Array2::from_elem((order.len(), d), R::zero());
    for (out_row, id) in order.iter().enumerate() {
        let rows = &groups[id];
        let count = R::of(rows.len() as f64);
        for r in rows {
            for c in 0..d {
                values[[out_row, c]] += table.values[[*r, c]];
            }
        }
        for c in 0..d {
            values[[out_row, c]] /= count;
        }
    }
    ProfileTable {
        values,
        row_ids: order.into_iter().map(String::from).collect(),
        feature_names: table.feature_names.clone(),
    }
}

/// Keeps the `n_up` largest positive and `n_down` most negative entries of
/// a row, zeroing everything else. Ties at either cutoff keep the lower
/// feature index; zeros are never kept as signal.
pub fn threshold_top_genes<R: Real>(row: &[R], n_up: usize, n_down: usize) -> Vec<R> {
    let mut out = vec![R::zero(); row.len()];
    let mut positives: Vec<usize> = (0..row.len()).filter(|i| row[*i] > R::zero()).collect();
    positives.sort_by(|a, b| {
        row[*b]
            .partial_cmp(&row[*a])
            .expect("finite values")
            .then(a.cmp(b))
    });
    for i in positives.into_iter().take(n_up) {
        out[i] = row[i];
    }
    let mut negatives: Vec<usize> = (0..row.len()).filter(|i| row[*i] < R::zero()).collect();
    negatives.sort_by(|a, b| {
        row[*a]
            .partial_cmp(&row[*b])
            .expect("finite values")
            .then(a.cmp(b))
    });
    for i in negatives.into_iter().take(n_down) {
        out[i] = row[i];
    }
    out
}

/// Applies [`threshold_top_genes`] to every row of a table.
pub fn threshold_table<R: Real>(
    table: &ProfileTable<R>,
    n_up: usize,
    n_down: usize,
) -> ProfileTable<R> {
    let mut values = table.values.clone();
    for mut row in values.rows_mut() {
        let thinned = threshold_top_genes(&row.to_vec(), n_up, n_down);
        for (v, t) in row.iter_mut().zip(thinned) {
            *v = t;
        }
    }
    ProfileTable {
        values,
        row_ids: table.row_ids.clone(),
        feature_names: table.feature_names.clone(),
    }
}

/// Rows dropped per view while pairing, in view order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssembleReport {
    pub dropped_rows: Vec<(String, usize)>,
    pub n_samples: usize,
}

/// Pairs the views on the intersection of their row ids (sorted
/// lexicographically), optionally centering each column to zero mean and
/// scaling to unit variance. Columns that are constant after centering stay
/// at zero; nothing is ever divided by zero.
pub fn assemble_dataset<R: Real>(
    views: &[(String, ProfileTable<R>)],
    center: bool,
    scale: bool,
) -> Result<(MultiViewDataset<R>, AssembleReport)> {
    if views.len() < 2 {
        return Err(GfaError::invalid(format!(
            "need at least 2 views, got {}",
            views.len()
        )));
    }
    for (name, table) in views {
        table.validate()?;
        let mut seen = HashSet::new();
        for id in &table.row_ids {
            if !seen.insert(id.as_str()) {
                return Err(GfaError::invalid(format!(
                    "view '{name}' has duplicate row id '{id}'; merge replicates first"
                )));
            }
        }
    }

    let mut shared: HashSet<&str> = views[0].1.row_ids.iter().map(String::as_str).collect();
    for (_, table) in &views[1..] {
        let ids: HashSet<&str> = table.row_ids.iter().map(String::as_str).collect();
        shared.retain(|id| ids.contains(id));
    }
    if shared.is_empty() {
        return Err(GfaError::invalid("the views share no row ids"));
    }
    let mut sample_ids: Vec<String> = shared.into_iter().map(String::from).collect();
    sample_ids.sort();

    let mut out_views = Vec::with_capacity(views.len());
    let mut dropped_rows = Vec::with_capacity(views.len());
    for (name, table) in views {
        let by_id: HashMap<&str, usize> = table
            .row_ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), i))
            .collect();
        let d = table.n_features();
        let mut values = Array2::from_elem((sample_ids.len(), d), R::zero());
        for (out_row, id) in sample_ids.iter().enumerate() {
            let src = by_id[id.as_str()];
            for c in 0..d {
                values[[out_row, c]] = table.values[[src, c]];
            }
        }
        if center {
            for mut col in values.columns_mut() {
                let mean = col.iter().copied().sum::<R>() / R::of(col.len() as f64);
                col.mapv_inplace(|v| v - mean);
            }
        }
        if scale {
            for mut col in values.columns_mut() {
                let n = R::of(col.len() as f64);
                let mean = col.iter().copied().sum::<R>() / n;
                let var = col
                    .iter()
                    .map(|v| (*v - mean) * (*v - mean))
                    .sum::<R>()
                    / (n - R::one());
                if var > R::zero() {
                    let sd = var.sqrt();
                    col.mapv_inplace(|v| v / sd);
                }
            }
        }
        dropped_rows.push((name.clone(), table.n_rows() - sample_ids.len()));
        out_views.push(ViewMatrix::new(
            name.clone(),
            values,
            table.feature_names.clone(),
            sample_ids.clone(),
        )?);
    }
    let dataset = MultiViewDataset::new(out_views)?;
    Ok((
        dataset,
        AssembleReport {
            dropped_rows,
            n_samples: sample_ids.len(),
        },
    ))
}

fn parse_error(path: &Path, line: usize, msg: impl Into<String>) -> GfaError {
    GfaError::Parse {
        path: path.display().to_string(),
        line,
        msg: msg.into(),
    }
}

/// Strict TSV reader for a profile table.
pub fn load_view<R: Real>(path: impl AsRef<Path>) -> Result<ProfileTable<R>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| {
        GfaError::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })?;
    if text.trim().is_empty() {
        return Err(parse_error(path, 1, "file is empty"));
    }
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().expect("non-empty file has a header line");
    let header_fields: Vec<&str> = header.trim_end_matches('\r').split('\t').collect();
    if header_fields.len() < 2 {
        return Err(parse_error(
            path,
            1,
            "header needs an id column and at least one feature",
        ));
    }
    let feature_names: Vec<String> = header_fields[1..].iter().map(|s| s.to_string()).collect();
    let d = feature_names.len();

    let mut row_ids = Vec::new();
    let mut rows: Vec<R> = Vec::new();
    for (i, raw) in lines {
        let line_no = i + 1;
        let line = raw.trim_end_matches('\r');
        if line.is_empty() {
            return Err(parse_error(path, line_no, "blank line"));
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != d + 1 {
            return Err(parse_error(
                path,
                line_no,
                format!("ragged row: {} fields, expected {}", fields.len(), d + 1),
            ));
        }
        row_ids.push(fields[0].to_string());
        for f in &fields[1..] {
            let v: f64 = f.parse().map_err(|_| {
                parse_error(path, line_no, format!("cannot parse '{f}' as a number"))
            })?;
            if !v.is_finite() {
                return Err(parse_error(path, line_no, format!("non-finite value '{f}'")));
            }
            rows.push(R::of(v));
        }
    }
    if row_ids.is_empty() {
        return Err(parse_error(path, 1, "no data rows"));
    }
    let values = Array2::from_shape_vec((row_ids.len(), d), rows)
        .expect("row-major buffer matches dimensions");
    ProfileTable::new(values, row_ids, feature_names)
}

/// Writes a table in the TSV format accepted by [`load_view`]; a save/load
/// round trip reproduces the table exactly.
pub fn save_view<R: Real>(table: &ProfileTable<R>, path: impl AsRef<Path>) -> Result<()> {
    table.validate()?;
    let mut out = String::new();
    out.push_str("sample_id");
    for f in &table.feature_names {
        out.push('\t');
        out.push_str(f);
    }
    out.push('\n');
    for (i, id) in table.row_ids.iter().enumerate() {
        out.push_str(id);
        for v in table.values.row(i) {
            let _ = write!(out, "\t{v}");
        }
        out.push('\n');
    }
    let path = path.as_ref();
    std::fs::write(path, out).map_err(|e| {
        GfaError::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })?;
    Ok(())
}

/// Centers (and optionally scales) already-paired view matrices in place,
/// matching `assemble_dataset`'s column rules.
pub fn center_scale_view<R: Real>(values: &mut Array2<R>, center: bool, scale: bool) {
    if center {
        for mut col in values.columns_mut() {
            let mean = col.iter().copied().sum::<R>() / R::of(col.len() as f64);
            col.mapv_inplace(|v| v - mean);
        }
    }
    if scale {
        for mut col in values.columns_mut() {
            let n = R::of(col.len() as f64);
            let mean = col.iter().copied().sum::<R>() / n;
            let var = col.iter().map(|v| (*v - mean) * (*v - mean)).sum::<R>() / (n - R::one());
            if var > R::zero() {
                let sd = var.sqrt();
                col.mapv_inplace(|v| v / sd);
            }
        }
    }
}

/// Column mean of a paired view, used by tests and reports.
pub fn column_means<R: Real>(values: &Array2<R>) -> Array1<R> {
    let n = R::of(values.nrows() as f64);
    Array1::from_iter(values.columns().into_iter().map(|c| c.sum() / n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    fn strs(list: &[&str]) -> Vec<String> {
        list.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn merge_takes_the_mean_in_first_appearance_order() {
        let t = ProfileTable::new(
            array![[1.0, 3.0], [7.0, 7.0], [3.0, 5.0]],
            strs(&["a", "b", "a"]),
            strs(&["f1", "f2"]),
        )
        .unwrap();
        let merged = merge_replicates(&t);
        assert_eq!(merged.row_ids, strs(&["a", "b"]));
        assert_eq!(merged.values, array![[2.0, 4.0], [7.0, 7.0]]);

        // No duplicates: identity. Merging again: no-op.
        let again = merge_replicates(&merged);
        assert_eq!(again, merged);

        // Three replicates {0, 3, 6} → 3.
        let t = ProfileTable::new(
            array![[0.0], [3.0], [6.0]],
            strs(&["x", "x", "x"]),
            strs(&["f"]),
        )
        .unwrap();
        assert_eq!(merge_replicates(&t).values, array![[3.0]]);
    }

    #[test]
    fn threshold_examples() {
        let row = [5.0, -3.0, 1.0, -7.0, 0.0];
        assert_eq!(
            threshold_top_genes(&row, 1, 1),
            vec![5.0, 0.0, 0.0, -7.0, 0.0]
        );
        assert_eq!(
            threshold_top_genes(&[0.0, 0.0], 3, 3),
            vec![0.0, 0.0]
        );
        // Ties at the cutoff keep the lower feature index.
        assert_eq!(
            threshold_top_genes(&[2.0, 2.0, 2.0], 2, 0),
            vec![2.0, 2.0, 0.0]
        );
        // Fewer positives than requested keeps all of them.
        assert_eq!(
            threshold_top_genes(&[1.0, -1.0], 5, 0),
            vec![1.0, 0.0]
        );
        assert_eq!(DEFAULT_TOP_UP, 2000);
        assert_eq!(DEFAULT_TOP_DOWN, 2000);
    }

    proptest! {
        /// Thresholding keeps at most n_up positives and n_down negatives,
        /// and every surviving entry is unchanged from the input.
        #[test]
        fn threshold_invariants(
            row in proptest::collection::vec(-100.0f64..100.0, 1..40),
            n_up in 0usize..10,
            n_down in 0usize..10,
        ) {
            let out = threshold_top_genes(&row, n_up, n_down);
            prop_assert_eq!(out.len(), row.len());
            prop_assert!(out.iter().filter(|v| **v > 0.0).count() <= n_up);
            prop_assert!(out.iter().filter(|v| **v < 0.0).count() <= n_down);
            for (o, i) in out.iter().zip(&row) {
                prop_assert!(*o == 0.0 || o == i);
            }
        }

        /// Merging replicates is idempotent.
        #[test]
        fn merge_is_idempotent(
            ids in proptest::collection::vec(0u8..4, 2..12),
            seed in 0u64..1000,
        ) {
            let mut rng = <rand_xoshiro::Xoshiro256PlusPlus as rand::SeedableRng>::seed_from_u64(seed);
            let values = Array2::from_shape_fn((ids.len(), 3), |_| f64::standard_normal(&mut rng));
            let t = ProfileTable::new(
                values,
                ids.iter().map(|i| format!("id{i}")).collect(),
                strs(&["a", "b", "c"]),
            ).unwrap();
            let once = merge_replicates(&t);
            let twice = merge_replicates(&once);
            prop_assert_eq!(once, twice);
        }
    }

    #[test]
    fn assemble_intersects_and_sorts() {
        let v1 = ProfileTable::new(
            array![[1.0], [2.0], [3.0]],
            strs(&["a", "b", "c"]),
            strs(&["f"]),
        )
        .unwrap();
        let v2 = ProfileTable::new(array![[30.0], [10.0]], strs(&["c", "a"]), strs(&["g"]))
            .unwrap();
        let (dataset, report) = assemble_dataset(
            &[("x".to_string(), v1), ("y".to_string(), v2)],
            false,
            false,
        )
        .unwrap();
        assert_eq!(dataset.sample_ids, strs(&["a", "c"]));
        assert_eq!(dataset.views[0].values, array![[1.0], [3.0]]);
        assert_eq!(dataset.views[1].values, array![[10.0], [30.0]]);
        assert_eq!(report.dropped_rows, vec![("x".to_string(), 1), ("y".to_string(), 0)]);
    }

    #[test]
    fn assemble_centers_and_handles_constant_columns() {
        let v1 = ProfileTable::new(
            array![[1.0, 4.0], [3.0, 4.0]],
            strs(&["a", "b"]),
            strs(&["f1", "f2"]),
        )
        .unwrap();
        let v2 = ProfileTable::new(array![[0.0], [2.0]], strs(&["a", "b"]), strs(&["g"]))
            .unwrap();
        let (dataset, _) = assemble_dataset(
            &[("x".to_string(), v1), ("y".to_string(), v2)],
            true,
            true,
        )
        .unwrap();
        // Column [1, 3] centers to [−1, 1] and scales to unit variance.
        let col0: Vec<f64> = dataset.views[0].values.column(0).to_vec();
        let expected = 1.0 / 2.0f64.sqrt();
        assert!((col0[0] + expected).abs() < 1e-12);
        assert!((col0[1] - expected).abs() < 1e-12);
        // Constant column becomes all zeros without erroring.
        assert!(dataset.views[0].values.column(1).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn assemble_is_idempotent_given_same_flags() {
        let v1 = ProfileTable::new(
            array![[1.0, 4.0], [3.0, -4.0], [0.5, 0.0]],
            strs(&["a", "b", "c"]),
            strs(&["f1", "f2"]),
        )
        .unwrap();
        let v2 = ProfileTable::new(
            array![[0.0], [2.0], [9.0]],
            strs(&["a", "b", "c"]),
            strs(&["g"]),
        )
        .unwrap();
        let views = vec![("x".to_string(), v1), ("y".to_string(), v2)];
        let (first, _) = assemble_dataset(&views, true, true).unwrap();
        let views2: Vec<(String, ProfileTable<f64>)> = first
            .views
            .iter()
            .map(|v| {
                (
                    v.name.clone(),
                    ProfileTable::new(
                        v.values.clone(),
                        v.sample_ids.clone(),
                        v.feature_names.clone(),
                    )
                    .unwrap(),
                )
            })
            .collect();
        let (second, _) = assemble_dataset(&views2, true, true).unwrap();
        for (a, b) in first.views.iter().zip(&second.views) {
            for (x, y) in a.values.iter().zip(b.values.iter()) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn assemble_rejects_disjoint_and_duplicates() {
        let v1 = ProfileTable::new(array![[1.0], [2.0]], strs(&["a", "b"]), strs(&["f"]))
            .unwrap();
        let v2 = ProfileTable::new(array![[1.0], [2.0]], strs(&["c", "d"]), strs(&["g"]))
            .unwrap();
        assert!(assemble_dataset(
            &[("x".to_string(), v1.clone()), ("y".to_string(), v2)],
            false,
            false
        )
        .is_err());
        let dup = ProfileTable::new(array![[1.0], [2.0]], strs(&["a", "a"]), strs(&["g"]))
            .unwrap();
        let err = assemble_dataset(
            &[("x".to_string(), v1), ("y".to_string(), dup)],
            false,
            false,
        )
        .unwrap_err();
        assert!(err.to_string().contains("duplicate row id"));
    }

    #[test]
    fn view_round_trip_and_parse_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("view.tsv");
        let t = ProfileTable::new(
            array![[1.5, -2.25], [0.1, 1e-12], [1234.5678, -0.0]],
            strs(&["s1", "s2", "s3"]),
            strs(&["f1", "f2"]),
        )
        .unwrap();
        save_view(&t, &path).unwrap();
        let back: ProfileTable<f64> = load_view(&path).unwrap();
        assert_eq!(back, t);

        let ragged = dir.path().join("ragged.tsv");
        std::fs::write(&ragged, "sample_id\tf1\tf2\ns1\t1.0\n").unwrap();
        match load_view::<f64>(&ragged) {
            Err(GfaError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }

        let empty = dir.path().join("empty.tsv");
        std::fs::write(&empty, "").unwrap();
        assert!(matches!(
            load_view::<f64>(&empty),
            Err(GfaError::Parse { .. })
        ));

        let na = dir.path().join("na.tsv");
        std::fs::write(&na, "sample_id\tf1\ns1\tNA\n").unwrap();
        assert!(matches!(load_view::<f64>(&na), Err(GfaError::Parse { line, .. }) if line == 2));

        let inf = dir.path().join("inf.tsv");
        std::fs::write(&inf, "sample_id\tf1\ns1\tinf\n").unwrap();
        assert!(load_view::<f64>(&inf).is_err());
    }
}
