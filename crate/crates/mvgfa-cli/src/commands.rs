//! The five batch commands: generate, preprocess, fit, summarize, validate.

use std::fmt::Write as _;
use std::path::Path;

use mvgfa::components::{
    build_component_reports, ReportOptions, DEFAULT_N_PERMUTATIONS, DEFAULT_Q_THRESHOLD,
    DEFAULT_TOP_LOADINGS,
};
use mvgfa::gibbs::{posterior_summary, run_chains, select_chain, select_runner_up};
use mvgfa::ingest::{
    assemble_dataset, load_view, merge_replicates, save_view, threshold_table,
};
use mvgfa::model::{generate_synthetic, variance_explained};
use mvgfa::ontology::{build_similarity_curve, build_graph, membership_report, SimilarityCurve};
use mvgfa::{GfaError, Result, Table};
use ndarray::Array2;
use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::manifest::{report_seed, validation_seed, RunManifest, TOOL_VERSION};
use crate::model_dir::{self, DirWriter, MANIFEST_FILE, RUN_LOG_FILE};

// ── generate ────────────────────────────────────────────────────────────────

pub struct GenerateArgs {
    pub out: std::path::PathBuf,
    pub n: usize,
    pub dims: Vec<usize>,
    pub k: usize,
    pub snr: f64,
    pub seed: u64,
    pub activity: Option<std::path::PathBuf>,
}

/// Writes synthetic views plus the generating truth (activity, scores,
/// loadings) for benchmarking.
pub fn cmd_generate(args: &GenerateArgs) -> Result<()> {
    let m = args.dims.len();
    let activity = match &args.activity {
        Some(path) => read_activity(path, m, args.k)?,
        None => Array2::from_elem((m, args.k), true),
    };
    let config = mvgfa::model::ModelConfig::<f64>::with_k(args.k);
    let (dataset, truth) =
        generate_synthetic(&config, args.n, &args.dims, &activity, args.snr, args.seed)?;

    std::fs::create_dir_all(args.out.join("truth"))?;
    for view in &dataset.views {
        let table = Table::new(
            view.values.clone(),
            view.sample_ids.clone(),
            view.feature_names.clone(),
        )?;
        save_view(&table, args.out.join(format!("{}.tsv", view.name)))?;
    }
    let comp: Vec<String> = (0..args.k).map(|i| format!("k{i}")).collect();
    let view_names = dataset.view_names();
    let activity_f = truth.activity.mapv(|b| if b { 1.0 } else { 0.0 });
    std::fs::write(
        args.out.join("truth/activity.tsv"),
        model_dir::matrix_tsv("view", &view_names, &comp, &activity_f),
    )?;
    std::fs::write(
        args.out.join("truth/z.tsv"),
        model_dir::matrix_tsv("sample_id", &dataset.sample_ids, &comp, &truth.state.z),
    )?;
    for (mi, name) in view_names.iter().enumerate() {
        std::fs::write(
            args.out.join(format!("truth/w_{name}.tsv")),
            model_dir::matrix_tsv(
                "feature",
                &dataset.views[mi].feature_names,
                &comp,
                &truth.state.w[mi],
            ),
        )?;
    }
    println!(
        "wrote {} views ({} samples) and ground truth under {}",
        m,
        args.n,
        args.out.display()
    );
    Ok(())
}

fn read_activity(path: &Path, m: usize, k: usize) -> Result<Array2<bool>> {
    let table: Table = load_view(path)?;
    if table.n_rows() != m || table.n_features() != k {
        return Err(GfaError::invalid(format!(
            "activity file is {}×{}, expected {m}×{k} (views × components)",
            table.n_rows(),
            table.n_features()
        )));
    }
    Ok(table.values.mapv(|v| v != 0.0))
}

// ── preprocess ──────────────────────────────────────────────────────────────

pub struct PreprocessArgs {
    pub input: std::path::PathBuf,
    pub output: std::path::PathBuf,
    pub merge: bool,
    pub top_up: Option<usize>,
    pub top_down: Option<usize>,
}

/// Replicate merging, then top-N thresholding, in that order.
pub fn cmd_preprocess(args: &PreprocessArgs) -> Result<()> {
    let mut table: Table = load_view(&args.input)?;
    let before = table.n_rows();
    if args.merge {
        table = merge_replicates(&table);
    }
    if args.top_up.is_some() || args.top_down.is_some() {
        table = threshold_table(
            &table,
            args.top_up.unwrap_or(usize::MAX),
            args.top_down.unwrap_or(usize::MAX),
        );
    }
    save_view(&table, &args.output)?;
    println!(
        "{} rows in, {} rows out, {} features",
        before,
        table.n_rows(),
        table.n_features()
    );
    Ok(())
}

// ── fit ─────────────────────────────────────────────────────────────────────

pub struct FitArgs {
    pub manifest: RunManifest,
    /// Directory the manifest's relative view paths resolve against.
    pub base_dir: std::path::PathBuf,
    pub out: std::path::PathBuf,
    pub jobs: usize,
}

/// Full pipeline: ingest → chains → selection → summary → reports.
pub fn cmd_fit(args: &FitArgs) -> Result<()> {
    let mut manifest = args.manifest.clone();
    manifest.tool_version = TOOL_VERSION.to_string();
    manifest.validate()?;
    manifest.check_input_hashes(&args.base_dir)?;

    let mut log = String::new();

    // Ingest.
    let mut named: Vec<(String, Table)> = Vec::with_capacity(manifest.views.len());
    for view in &manifest.views {
        let path = manifest.resolve_view_path(&args.base_dir, view);
        let mut table: Table = load_view(&path)?;
        if manifest.preprocessing.merge_replicates {
            table = merge_replicates(&table);
        }
        if manifest.preprocessing.top_up.is_some() || manifest.preprocessing.top_down.is_some() {
            table = threshold_table(
                &table,
                manifest.preprocessing.top_up.unwrap_or(usize::MAX),
                manifest.preprocessing.top_down.unwrap_or(usize::MAX),
            );
        }
        named.push((view.name.clone(), table));
    }
    let (dataset, report) = assemble_dataset(
        &named,
        manifest.model.center_columns,
        manifest.model.scale_columns,
    )?;
    let _ = writeln!(log, "samples after pairing: {}", report.n_samples);
    for ((name, dropped), view) in report.dropped_rows.iter().zip(&dataset.views) {
        let _ = writeln!(
            log,
            "view {name}: {} features, dropped {dropped} unpaired rows",
            view.n_features()
        );
    }

    // Chains.
    let traces = run_chains(&dataset, &manifest.model, &manifest.schedule, args.jobs);
    for (i, t) in traces.iter().enumerate() {
        match t {
            Ok(trace) => {
                let _ = writeln!(
                    log,
                    "chain {i:02}: ok, retained {} states, mean log density {}",
                    trace.states.len(),
                    trace.retained_phase_mean()
                );
            }
            Err(e) => {
                let _ = writeln!(log, "chain {i:02}: FAILED: {e}");
            }
        }
    }
    let selected = select_chain(&traces)?;
    let _ = writeln!(log, "selected chain: {selected}");
    let summary = posterior_summary(traces[selected].as_ref().expect("selected chain is ok"))?;
    let activity = mvgfa::components::activity_matrix(&summary, manifest.activity_threshold)?;

    // Reproducibility check against the runner-up chain: how many of the
    // selected chain's shared components reappear there.
    let roles = manifest.roles()?;
    if let Ok(second) = select_runner_up(&traces, selected) {
        let second_summary =
            posterior_summary(traces[second].as_ref().expect("runner-up chain is ok"))?;
        match mvgfa::components::chain_similarity(
            &summary,
            &second_summary,
            &roles,
            mvgfa::components::DEFAULT_MATCH_THRESHOLD,
        ) {
            Ok(frac) => {
                let _ = writeln!(
                    log,
                    "shared components reproduced in chain {second}: {:.1}%",
                    100.0 * frac
                );
            }
            Err(GfaError::NoResult(_)) => {
                let _ = writeln!(log, "no shared components to compare against chain {second}");
            }
            Err(e) => return Err(e),
        }
    }

    // Reports.
    let ve = variance_explained(&summary.mean_state, &dataset)?;
    let feature_names: Vec<Vec<String>> = dataset
        .views
        .iter()
        .map(|v| v.feature_names.clone())
        .collect();
    let view_names = dataset.view_names();
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(report_seed(manifest.schedule.seed));
    let reports = build_component_reports(
        &summary,
        &roles,
        &dataset.sample_ids,
        &feature_names,
        &view_names,
        &ve,
        &ReportOptions {
            activity_threshold: manifest.activity_threshold,
            n_top_loadings: DEFAULT_TOP_LOADINGS,
            q_threshold: DEFAULT_Q_THRESHOLD,
            n_permutations: DEFAULT_N_PERMUTATIONS,
        },
        &mut rng,
    )?;
    let shared = reports
        .iter()
        .filter(|r| matches!(r.kind, mvgfa::components::ComponentKind::Shared))
        .count();
    let specific = reports
        .iter()
        .filter(|r| matches!(r.kind, mvgfa::components::ComponentKind::ViewSpecific { .. }))
        .count();
    let _ = writeln!(
        log,
        "components: {shared} shared, {specific} view-specific, {} inactive",
        reports.len() - shared - specific
    );

    // Model directory.
    let mut writer = DirWriter::create(&args.out)?;
    let manifest_text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| GfaError::invalid(format!("cannot serialize manifest: {e}")))?;
    writer.write(MANIFEST_FILE, &(manifest_text + "\n"))?;
    model_dir::write_chain_traces(&mut writer, &traces)?;
    model_dir::write_summary(
        &mut writer,
        selected,
        &summary,
        &activity,
        &dataset.sample_ids,
        &view_names,
        &feature_names,
    )?;
    model_dir::write_component_reports(&mut writer, &reports, &view_names)?;
    writer.write(RUN_LOG_FILE, &log)?;
    writer.finish()?;
    println!("model directory written to {}", args.out.display());
    Ok(())
}

// ── summarize ───────────────────────────────────────────────────────────────

pub struct SummarizeArgs {
    pub model_dir: std::path::PathBuf,
    pub n_top_loadings: usize,
    pub q_threshold: f64,
    pub n_permutations: usize,
    pub seed: Option<u64>,
}

/// Recomputes the component reports from the stored summary matrices.
pub fn cmd_summarize(args: &SummarizeArgs) -> Result<()> {
    let stored = model_dir::read_summary(&args.model_dir)?;
    let roles = stored.manifest.roles()?;
    // Variance explained needs only the mean scores and loadings, both of
    // which the directory stores.
    let ve = variance_explained_from_means(&stored.summary.mean_state);
    let seed = args
        .seed
        .unwrap_or_else(|| report_seed(stored.manifest.schedule.seed));
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let reports = build_component_reports(
        &stored.summary,
        &roles,
        &stored.sample_ids,
        &stored.feature_names,
        &stored.view_names,
        &ve,
        &ReportOptions {
            activity_threshold: stored.manifest.activity_threshold,
            n_top_loadings: args.n_top_loadings,
            q_threshold: args.q_threshold,
            n_permutations: args.n_permutations,
        },
        &mut rng,
    )?;
    let mut writer = DirWriter::reopen(&args.model_dir)?;
    model_dir::write_component_reports(&mut writer, &reports, &stored.view_names)?;
    writer.finish()?;
    println!(
        "component reports for chain {} rewritten under {}",
        stored.selected_chain,
        args.model_dir.join("components").display()
    );
    Ok(())
}

fn variance_explained_from_means(state: &mvgfa::State) -> Vec<f64> {
    let k = state.n_components();
    (0..k)
        .map(|kk| {
            let z_sq: f64 = state.z.column(kk).iter().map(|z| z * z).sum();
            let w_sq: f64 = state
                .w
                .iter()
                .map(|w| w.column(kk).iter().map(|v| v * v).sum::<f64>())
                .sum();
            z_sq * w_sq
        })
        .collect()
}

// ── validate ────────────────────────────────────────────────────────────────

pub struct ValidateArgs {
    pub model_dir: std::path::PathBuf,
    pub edges: std::path::PathBuf,
    pub compounds: std::path::PathBuf,
    pub min_len: usize,
    pub max_len: usize,
    pub n_draws: usize,
    pub seed: Option<u64>,
    pub out: Option<std::path::PathBuf>,
}

/// Ontology validation of the shared components' significant-sample sets.
pub fn cmd_validate(args: &ValidateArgs) -> Result<()> {
    if args.min_len < 1 || args.min_len > args.max_len {
        return Err(GfaError::invalid(format!(
            "path length range {}..{} is empty",
            args.min_len, args.max_len
        )));
    }
    let stored = model_dir::read_summary(&args.model_dir)?;
    let sets_by_component = model_dir::read_significant_sets(&args.model_dir)?;

    let roles = stored.manifest.roles()?;
    let kinds = mvgfa::components::classify_components(&stored.activity, &roles)?;
    let shared: Vec<usize> = kinds
        .iter()
        .enumerate()
        .filter(|(_, kind)| matches!(kind, mvgfa::components::ComponentKind::Shared))
        .map(|(id, _)| id)
        .collect();
    if shared.is_empty() {
        return Err(GfaError::no_result(
            "the fitted model has no shared components to validate",
        ));
    }
    let member_sets: Vec<Vec<String>> = shared
        .iter()
        .map(|id| sets_by_component.get(id).cloned().unwrap_or_default())
        .collect();

    let (edges, compounds) = read_graph_inputs(&args.edges, &args.compounds)?;
    let graph = build_graph(&edges, &compounds)?;
    let lengths: Vec<usize> = (args.min_len..=args.max_len).collect();
    let seed = args
        .seed
        .unwrap_or_else(|| validation_seed(stored.manifest.schedule.seed));
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let curve: SimilarityCurve<f64> =
        build_similarity_curve(&graph, &member_sets, &lengths, args.n_draws, &mut rng)?;

    let mut out = String::from("length\tvalue\tbaseline_mean\tbaseline_std\n");
    for (i, len) in curve.lengths.iter().enumerate() {
        let _ = writeln!(
            out,
            "{len}\t{}\t{}\t{}",
            curve.values[i], curve.baseline_mean[i], curve.baseline_std[i]
        );
    }
    let out_path = args
        .out
        .clone()
        .unwrap_or_else(|| args.model_dir.join("validation").join("curve.tsv"));
    if let Some(parent) = out_path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(&out_path, out)?;

    let membership = membership_report(&graph, &member_sets);
    let mut dropped_total = 0usize;
    let mut evaluable = 0usize;
    for (set_idx, (retained, dropped)) in &membership {
        dropped_total += dropped;
        if *retained >= 2 {
            evaluable += 1;
        } else {
            eprintln!(
                "note: shared component {} has only {} member(s) in the graph; skipped",
                shared[*set_idx], retained
            );
        }
    }
    println!(
        "curve over {} thresholds written to {} ({evaluable}/{} sets evaluable, {dropped_total} members outside the graph)",
        curve.lengths.len(),
        out_path.display(),
        member_sets.len()
    );
    Ok(())
}

type GraphInputs = (Vec<(String, String)>, Vec<String>);

fn read_graph_inputs(edges_path: &Path, compounds_path: &Path) -> Result<GraphInputs> {
    let text = std::fs::read_to_string(edges_path).map_err(|e| {
        GfaError::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", edges_path.display()),
        ))
    })?;
    let mut edges = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 2 {
            return Err(GfaError::Parse {
                path: edges_path.display().to_string(),
                line: i + 1,
                msg: format!("expected 2 tab-separated labels, got {}", fields.len()),
            });
        }
        edges.push((fields[0].to_string(), fields[1].to_string()));
    }
    let text = std::fs::read_to_string(compounds_path).map_err(|e| {
        GfaError::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", compounds_path.display()),
        ))
    })?;
    let compounds: Vec<String> = text
        .lines()
        .map(|l| l.trim_end_matches('\r'))
        .filter(|l| !l.is_empty())
        .map(String::from)
        .collect();
    Ok((edges, compounds))
}
