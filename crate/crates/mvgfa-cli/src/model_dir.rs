//! Model directory layout: TSV matrices, per-chain traces, component
//! reports and a checksum index, all diff-friendly and regenerable from the
//! manifest plus inputs.
//!
//! ```text
//! out/
//!   manifest.json
//!   run_log.txt
//!   checksums.json
//!   chains/chain_00/log_density.tsv
//!   summary/selected_chain.txt
//!   summary/activity_mean.tsv      (rows = views, columns = components)
//!   summary/activity.tsv           (thresholded 0/1)
//!   summary/pi_mean.tsv
//!   summary/z_mean.tsv             (rows = samples)
//!   summary/w_mean_<view>.tsv      (rows = features)
//!   summary/tau_mean_<view>.tsv
//!   components/components.tsv
//!   components/significant_samples.tsv
//!   components/top_loadings.tsv
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use mvgfa::components::{ComponentKind, ComponentReport};
use mvgfa::gibbs::{ChainTrace, PosteriorSummary};
use mvgfa::model::ModelState;
use mvgfa::{GfaError, Result};
use ndarray::{Array1, Array2};

use crate::manifest::{sha256_bytes, sha256_file, RunManifest};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const CHECKSUMS_FILE: &str = "checksums.json";
pub const RUN_LOG_FILE: &str = "run_log.txt";
pub const INCOMPLETE_MARKER: &str = "RUN_INCOMPLETE";

/// Tracks files written into the model directory and their digests.
pub struct DirWriter {
    root: PathBuf,
    checksums: BTreeMap<String, String>,
}

impl DirWriter {
    pub fn create(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root)?;
        std::fs::write(root.join(INCOMPLETE_MARKER), "run did not finish\n")?;
        Ok(DirWriter {
            root: root.to_path_buf(),
            checksums: BTreeMap::new(),
        })
    }

    /// Reopens an existing directory to rewrite parts of it (keeps the
    /// checksums of files that stay untouched).
    pub fn reopen(root: &Path) -> Result<Self> {
        let checksums = read_checksums(root)?;
        std::fs::write(root.join(INCOMPLETE_MARKER), "update did not finish\n")?;
        Ok(DirWriter {
            root: root.to_path_buf(),
            checksums,
        })
    }

    pub fn write(&mut self, rel: &str, contents: &str) -> Result<()> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&path, contents)?;
        self.checksums
            .insert(rel.to_string(), sha256_bytes(contents.as_bytes()));
        Ok(())
    }

    /// Writes the checksum index and clears the incomplete marker.
    pub fn finish(self) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.checksums)
            .map_err(|e| GfaError::invalid(format!("cannot serialize checksums: {e}")))?;
        std::fs::write(self.root.join(CHECKSUMS_FILE), text + "\n")?;
        std::fs::remove_file(self.root.join(INCOMPLETE_MARKER))?;
        Ok(())
    }
}

pub fn read_checksums(root: &Path) -> Result<BTreeMap<String, String>> {
    let path = root.join(CHECKSUMS_FILE);
    let text = std::fs::read_to_string(&path).map_err(|_| {
        GfaError::Integrity(format!(
            "{} is missing; not a completed model directory",
            path.display()
        ))
    })?;
    serde_json::from_str(&text)
        .map_err(|e| GfaError::Integrity(format!("unreadable checksum index: {e}")))
}

/// Verifies a model-directory file against the checksum index before use.
pub fn verified_path(root: &Path, rel: &str, checksums: &BTreeMap<String, String>) -> Result<PathBuf> {
    let path = root.join(rel);
    if std::fs::metadata(root.join(INCOMPLETE_MARKER)).is_ok() {
        return Err(GfaError::Integrity(format!(
            "model directory {} is marked incomplete; re-run fit",
            root.display()
        )));
    }
    let expected = checksums.get(rel).ok_or_else(|| {
        GfaError::Integrity(format!("{rel} is not listed in the checksum index"))
    })?;
    let actual = sha256_file(&path)?;
    if actual != *expected {
        return Err(GfaError::Integrity(format!(
            "{rel} does not match its recorded checksum; the model directory is corrupt"
        )));
    }
    Ok(path)
}

// ── TSV rendering ───────────────────────────────────────────────────────────

fn component_headers(k: usize) -> Vec<String> {
    (0..k).map(|i| format!("k{i}")).collect()
}

pub fn matrix_tsv(id_column: &str, row_ids: &[String], col_ids: &[String], m: &Array2<f64>) -> String {
    let mut out = String::new();
    out.push_str(id_column);
    for c in col_ids {
        let _ = write!(out, "\t{c}");
    }
    out.push('\n');
    for (i, id) in row_ids.iter().enumerate() {
        out.push_str(id);
        for v in m.row(i) {
            let _ = write!(out, "\t{v}");
        }
        out.push('\n');
    }
    out
}

fn vector_tsv(id_column: &str, value_column: &str, ids: &[String], v: &Array1<f64>) -> String {
    let mut out = format!("{id_column}\t{value_column}\n");
    for (id, x) in ids.iter().zip(v) {
        let _ = writeln!(out, "{id}\t{x}");
    }
    out
}

fn bool_matrix_tsv(id_column: &str, row_ids: &[String], col_ids: &[String], m: &Array2<bool>) -> String {
    let as_f = m.mapv(|b| if b { 1.0 } else { 0.0 });
    matrix_tsv(id_column, row_ids, col_ids, &as_f)
}

/// Writes the selected-chain summary matrices.
pub fn write_summary(
    w: &mut DirWriter,
    selected: usize,
    summary: &PosteriorSummary<f64>,
    activity: &Array2<bool>,
    sample_ids: &[String],
    view_names: &[String],
    feature_names: &[Vec<String>],
) -> Result<()> {
    let state = &summary.mean_state;
    let k = state.n_components();
    let comp = component_headers(k);
    let views: Vec<String> = view_names.to_vec();

    w.write("summary/selected_chain.txt", &format!("{selected}\n"))?;
    w.write(
        "summary/activity_mean.tsv",
        &matrix_tsv("view", &views, &comp, &summary.activity_mean),
    )?;
    w.write(
        "summary/activity.tsv",
        &bool_matrix_tsv("view", &views, &comp, activity),
    )?;
    w.write(
        "summary/pi_mean.tsv",
        &vector_tsv("component", "pi", &comp, &Array1::from_vec(state.pi.clone())),
    )?;
    w.write(
        "summary/z_mean.tsv",
        &matrix_tsv("sample_id", sample_ids, &comp, &state.z),
    )?;
    for (mi, name) in view_names.iter().enumerate() {
        w.write(
            &format!("summary/w_mean_{name}.tsv"),
            &matrix_tsv("feature", &feature_names[mi], &comp, &state.w[mi]),
        )?;
        w.write(
            &format!("summary/tau_mean_{name}.tsv"),
            &vector_tsv("feature", "tau", &feature_names[mi], &state.tau[mi]),
        )?;
    }
    Ok(())
}

pub fn write_chain_traces(w: &mut DirWriter, traces: &[mvgfa::Result<ChainTrace<f64>>]) -> Result<()> {
    for (i, outcome) in traces.iter().enumerate() {
        let rel = format!("chains/chain_{i:02}/log_density.tsv");
        match outcome {
            Ok(trace) => {
                let mut out = String::from("sweep\tphase\tlog_density\n");
                for (t, d) in trace.log_densities.iter().enumerate() {
                    let phase = if t < trace.burn_in { "burnin" } else { "sample" };
                    let _ = writeln!(out, "{t}\t{phase}\t{d}");
                }
                w.write(&rel, &out)?;
            }
            Err(e) => {
                w.write(&format!("chains/chain_{i:02}/FAILED.txt"), &format!("{e}\n"))?;
            }
        }
    }
    Ok(())
}

fn kind_cell(kind: &ComponentKind) -> String {
    kind.to_string()
}

pub fn components_tsv(reports: &[ComponentReport<f64>], view_names: &[String]) -> String {
    let mut out = String::from(
        "component_id\tlabel\tkind\tvariance\tactive_views\tn_significant_samples\n",
    );
    for r in reports {
        let active: Vec<&str> = r
            .activity
            .iter()
            .enumerate()
            .filter(|(_, a)| **a)
            .map(|(i, _)| view_names[i].as_str())
            .collect();
        let active = if active.is_empty() {
            "-".to_string()
        } else {
            active.join(";")
        };
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}",
            r.component_id,
            r.label.as_deref().unwrap_or("-"),
            kind_cell(&r.kind),
            r.variance,
            active,
            r.significant_samples.len()
        );
    }
    out
}

pub fn significant_samples_tsv(reports: &[ComponentReport<f64>]) -> String {
    let mut out = String::from("component_id\tlabel\tsample_id\tscore\tq_value\n");
    for r in reports {
        for (id, score, q) in &r.significant_samples {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}",
                r.component_id,
                r.label.as_deref().unwrap_or("-"),
                id,
                score,
                q
            );
        }
    }
    out
}

pub fn top_loadings_tsv(reports: &[ComponentReport<f64>]) -> String {
    let mut out = String::from("component_id\tlabel\tview\trank\tfeature\tweight\tdegenerate\n");
    for r in reports {
        for (view, tops) in &r.top_loadings {
            for (rank, (feature, weight)) in tops.entries.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                    r.component_id,
                    r.label.as_deref().unwrap_or("-"),
                    view,
                    rank + 1,
                    feature,
                    weight,
                    if tops.degenerate { 1 } else { 0 }
                );
            }
        }
    }
    out
}

pub fn write_component_reports(
    w: &mut DirWriter,
    reports: &[ComponentReport<f64>],
    view_names: &[String],
) -> Result<()> {
    w.write("components/components.tsv", &components_tsv(reports, view_names))?;
    w.write(
        "components/significant_samples.tsv",
        &significant_samples_tsv(reports),
    )?;
    w.write("components/top_loadings.tsv", &top_loadings_tsv(reports))?;
    Ok(())
}

// ── Reading a model directory back ──────────────────────────────────────────

pub struct StoredSummary {
    pub manifest: RunManifest,
    pub summary: PosteriorSummary<f64>,
    pub activity: Array2<bool>,
    pub sample_ids: Vec<String>,
    pub view_names: Vec<String>,
    pub feature_names: Vec<Vec<String>>,
    pub selected_chain: usize,
}

fn load_matrix(path: &Path) -> Result<(Vec<String>, Vec<String>, Array2<f64>)> {
    let table: mvgfa::Table = mvgfa::ingest::load_view(path)?;
    Ok((table.row_ids, table.feature_names, table.values))
}

/// Reads the summary matrices back, verifying checksums first.
pub fn read_summary(root: &Path) -> Result<StoredSummary> {
    let checksums = read_checksums(root)?;
    let manifest = RunManifest::load(&verified_path(root, MANIFEST_FILE, &checksums)?)?;
    let view_names: Vec<String> = manifest.views.iter().map(|v| v.name.clone()).collect();

    let (sample_ids, _, z) = load_matrix(&verified_path(root, "summary/z_mean.tsv", &checksums)?)?;
    let (_, _, activity_mean) =
        load_matrix(&verified_path(root, "summary/activity_mean.tsv", &checksums)?)?;
    let (_, _, activity_f) = load_matrix(&verified_path(root, "summary/activity.tsv", &checksums)?)?;
    let activity = activity_f.mapv(|v| v != 0.0);

    let selected_text =
        std::fs::read_to_string(verified_path(root, "summary/selected_chain.txt", &checksums)?)?;
    let selected_chain: usize = selected_text
        .trim()
        .parse()
        .map_err(|_| GfaError::Integrity("unreadable selected_chain.txt".to_string()))?;

    let pi_path = verified_path(root, "summary/pi_mean.tsv", &checksums)?;
    let (_, _, pi_col) = load_matrix(&pi_path)?;
    let pi: Vec<f64> = pi_col.column(0).to_vec();

    let mut w = Vec::new();
    let mut tau = Vec::new();
    let mut feature_names = Vec::new();
    for name in &view_names {
        let (features, _, wm) =
            load_matrix(&verified_path(root, &format!("summary/w_mean_{name}.tsv"), &checksums)?)?;
        let (_, _, tau_col) =
            load_matrix(&verified_path(root, &format!("summary/tau_mean_{name}.tsv"), &checksums)?)?;
        tau.push(Array1::from_vec(tau_col.column(0).to_vec()));
        w.push(wm);
        feature_names.push(features);
    }

    let k = z.ncols();
    let m = view_names.len();
    if activity.dim() != (m, k) || activity_mean.dim() != (m, k) || pi.len() != k {
        return Err(GfaError::Integrity(
            "summary matrices have inconsistent shapes".to_string(),
        ));
    }
    let alpha = w
        .iter()
        .map(|wm| Array2::from_elem(wm.dim(), 1.0))
        .collect();
    let summary = PosteriorSummary {
        mean_state: ModelState {
            z,
            w,
            h: activity.clone(),
            pi,
            alpha,
            tau,
        },
        activity_mean,
    };
    Ok(StoredSummary {
        manifest,
        summary,
        activity,
        sample_ids,
        view_names,
        feature_names,
        selected_chain,
    })
}

/// Reads the stored significant-sample sets, one per component id.
pub fn read_significant_sets(root: &Path) -> Result<BTreeMap<usize, Vec<String>>> {
    let checksums = read_checksums(root)?;
    let path = verified_path(root, "components/significant_samples.tsv", &checksums)?;
    let text = std::fs::read_to_string(&path)?;
    let mut sets: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 5 {
            return Err(GfaError::Parse {
                path: path.display().to_string(),
                line: i + 1,
                msg: format!("expected 5 fields, got {}", fields.len()),
            });
        }
        let component: usize = fields[0].parse().map_err(|_| GfaError::Parse {
            path: path.display().to_string(),
            line: i + 1,
            msg: "unreadable component id".to_string(),
        })?;
        sets.entry(component).or_default().push(fields[2].to_string());
    }
    Ok(sets)
}

