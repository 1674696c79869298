mod commands;
mod manifest;
mod model_dir;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mvgfa::GfaError;

use crate::commands::{
    cmd_fit, cmd_generate, cmd_preprocess, cmd_summarize, cmd_validate, FitArgs, GenerateArgs,
    PreprocessArgs, SummarizeArgs, ValidateArgs,
};
use crate::manifest::{Preprocessing, RunManifest, ViewSpec};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

/// Multi-view group factor analysis: sparse Bayesian decomposition of
/// paired data matrices, fit by Gibbs sampling.
#[derive(Parser)]
#[command(name = "mvgfa", version, disable_help_subcommand = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a synthetic multi-view dataset with known structure.
    Generate(GenerateCli),
    /// Merge replicates and threshold a single view file.
    Preprocess(PreprocessCli),
    /// Run the full pipeline and write a model directory.
    Fit(FitCli),
    /// Recompute component reports from a model directory.
    Summarize(SummarizeCli),
    /// Score shared components against an ontology graph.
    Validate(ValidateCli),
}

#[derive(Args)]
struct GenerateCli {
    /// Output directory for the views and ground truth.
    #[arg(long)]
    out: PathBuf,
    /// Number of samples (paired rows).
    #[arg(long, default_value_t = 200)]
    n: usize,
    /// Comma-separated feature counts, one per view.
    #[arg(long, value_delimiter = ',', required = true)]
    dims: Vec<usize>,
    /// Number of latent components to plant.
    #[arg(long, default_value_t = 8)]
    k: usize,
    /// Signal-to-noise variance ratio per view.
    #[arg(long, default_value_t = 1.0)]
    snr: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Optional activity pattern file (views × components, 0/1 TSV);
    /// defaults to everything active.
    #[arg(long)]
    activity: Option<PathBuf>,
}

#[derive(Args)]
struct PreprocessCli {
    /// Input view TSV.
    #[arg(long)]
    input: PathBuf,
    /// Output view TSV.
    #[arg(long)]
    out: PathBuf,
    /// Merge replicate rows (same sample id) by their mean.
    #[arg(long)]
    merge: bool,
    /// Keep the N largest positive entries per row, zero the rest.
    #[arg(long)]
    top_up: Option<usize>,
    /// Keep the N most negative entries per row, zero the rest.
    #[arg(long)]
    top_down: Option<usize>,
}

#[derive(Args)]
struct FitCli {
    /// Run manifest (JSON). Alternative to the inline --view/--role flags.
    #[arg(long, conflicts_with_all = ["view", "role"])]
    manifest: Option<PathBuf>,
    /// View as name=path; repeat once per view.
    #[arg(long)]
    view: Vec<String>,
    /// Role as name=role; repeat once per view.
    #[arg(long)]
    role: Vec<String>,
    /// Output model directory.
    #[arg(long)]
    out: PathBuf,
    /// Concurrent chains (0 = all cores).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Component budget K.
    #[arg(long, default_value_t = 80)]
    k: usize,
    #[arg(long, default_value_t = 10)]
    chains: usize,
    #[arg(long, default_value_t = 5000)]
    burn_in: usize,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 5)]
    thinning: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    a_pi: f64,
    #[arg(long, default_value_t = 1.0)]
    b_pi: f64,
    #[arg(long, default_value_t = 1e-3)]
    a_alpha: f64,
    #[arg(long, default_value_t = 1e-3)]
    b_alpha: f64,
    #[arg(long, default_value_t = 1e-3)]
    a_tau: f64,
    #[arg(long, default_value_t = 1e-3)]
    b_tau: f64,
    /// Posterior activation probability needed to call a gate active.
    #[arg(long, default_value_t = 0.5)]
    activity_threshold: f64,
    /// Merge replicate rows before fitting.
    #[arg(long)]
    merge_replicates: bool,
    #[arg(long)]
    top_up: Option<usize>,
    #[arg(long)]
    top_down: Option<usize>,
    /// Column centering (on by default; disable with =false).
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    center: bool,
    /// Scale columns to unit variance.
    #[arg(long, default_value_t = false, action = clap::ArgAction::Set)]
    scale: bool,
}

#[derive(Args)]
struct SummarizeCli {
    /// Fitted model directory.
    #[arg(long)]
    model_dir: PathBuf,
    /// Loadings to keep per component and view.
    #[arg(long, default_value_t = 30)]
    top: usize,
    #[arg(long, default_value_t = 0.05)]
    q_threshold: f64,
    #[arg(long, default_value_t = 10000)]
    n_permutations: usize,
    /// Permutation seed; defaults to a stream derived from the run seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct ValidateCli {
    #[arg(long)]
    model_dir: PathBuf,
    /// Two-column TSV of undirected edges between node labels.
    #[arg(long)]
    edges: PathBuf,
    /// One compound id per line (subset of the node labels).
    #[arg(long)]
    compounds: PathBuf,
    #[arg(long, default_value_t = 2)]
    min_len: usize,
    #[arg(long, default_value_t = 16)]
    max_len: usize,
    /// Random baseline draws.
    #[arg(long, default_value_t = 1000)]
    n_draws: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Curve output path (defaults to MODEL_DIR/validation/curve.tsv).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn usage_error(msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_USAGE)
}

fn run(cli: Cli) -> Result<(), GfaError> {
    match cli.command {
        Command::Generate(g) => cmd_generate(&GenerateArgs {
            out: g.out,
            n: g.n,
            dims: g.dims,
            k: g.k,
            snr: g.snr,
            seed: g.seed,
            activity: g.activity,
        }),
        Command::Preprocess(p) => cmd_preprocess(&PreprocessArgs {
            input: p.input,
            output: p.out,
            merge: p.merge,
            top_up: p.top_up,
            top_down: p.top_down,
        }),
        Command::Fit(f) => {
            let (manifest, base_dir) = match &f.manifest {
                Some(path) => {
                    let manifest = RunManifest::load(path)?;
                    let base = path
                        .parent()
                        .map(|p| p.to_path_buf())
                        .unwrap_or_else(|| PathBuf::from("."));
                    (manifest, base)
                }
                None => (build_inline_manifest(&f)?, PathBuf::from(".")),
            };
            cmd_fit(&FitArgs {
                manifest,
                base_dir,
                out: f.out,
                jobs: f.jobs,
            })
        }
        Command::Summarize(s) => cmd_summarize(&SummarizeArgs {
            model_dir: s.model_dir,
            n_top_loadings: s.top,
            q_threshold: s.q_threshold,
            n_permutations: s.n_permutations,
            seed: s.seed,
        }),
        Command::Validate(v) => cmd_validate(&ValidateArgs {
            model_dir: v.model_dir,
            edges: v.edges,
            compounds: v.compounds,
            min_len: v.min_len,
            max_len: v.max_len,
            n_draws: v.n_draws,
            seed: v.seed,
            out: v.out,
        }),
    }
}

fn build_inline_manifest(f: &FitCli) -> Result<RunManifest, GfaError> {
    if f.view.is_empty() {
        return Err(GfaError::invalid(
            "either --manifest or at least two --view name=path flags are required",
        ));
    }
    let mut roles: std::collections::BTreeMap<String, String> = std::collections::BTreeMap::new();
    for r in &f.role {
        let (name, role) = r.split_once('=').ok_or_else(|| {
            GfaError::invalid(format!("--role '{r}' is not of the form name=role"))
        })?;
        roles.insert(name.to_string(), role.to_string());
    }
    let mut views = Vec::new();
    for v in &f.view {
        let (name, path) = v.split_once('=').ok_or_else(|| {
            GfaError::invalid(format!("--view '{v}' is not of the form name=path"))
        })?;
        let role = roles.get(name).cloned().ok_or_else(|| {
            GfaError::invalid(format!("view '{name}' has no --role name=role flag"))
        })?;
        views.push(ViewSpec {
            name: name.to_string(),
            path: path.to_string(),
            role,
        });
    }
    Ok(RunManifest {
        tool_version: String::new(),
        views,
        preprocessing: Preprocessing {
            merge_replicates: f.merge_replicates,
            top_up: f.top_up,
            top_down: f.top_down,
        },
        model: mvgfa::model::ModelConfig {
            k: f.k,
            a_pi: f.a_pi,
            b_pi: f.b_pi,
            a_alpha: f.a_alpha,
            b_alpha: f.b_alpha,
            a_tau: f.a_tau,
            b_tau: f.b_tau,
            center_columns: f.center,
            scale_columns: f.scale,
        },
        schedule: mvgfa::gibbs::SamplingSchedule {
            n_chains: f.chains,
            burn_in: f.burn_in,
            n_samples: f.samples,
            thinning: f.thinning,
            seed: f.seed,
        },
        activity_threshold: f.activity_threshold,
        input_hashes: Default::default(),
        output_dir: None,
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are not errors.
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprint!("{e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };

    // Flag-level sanity checks that are usage errors, not data errors.
    if let Command::Generate(g) = &cli.command {
        if !(g.snr > 0.0 && g.snr.is_finite()) {
            return usage_error("--snr must be a positive number");
        }
        if g.k < 1 {
            return usage_error("--k must be at least 1");
        }
        if g.dims.len() < 2 {
            return usage_error("--dims must list at least two views");
        }
    }

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                GfaError::Numerical { .. } => ExitCode::from(EXIT_NUMERICAL),
                _ => ExitCode::from(EXIT_DATA),
            }
        }
    }
}
