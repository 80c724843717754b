//! Command-line surface: dataset statistics, synthetic data generation,
//! cross-validation, hyperparameter sweeps, and ranked prediction export.
//!
//! Configuration comes from an optional flat key=value file whose keys
//! mirror the config struct field names; command-line flags override file
//! values, and unknown file keys are errors. Every run logs its fully
//! resolved configuration to stderr, and stdout ends with one
//! machine-readable summary line.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::data::{
    dataset_stats, filter_dataset, load_descriptors, load_interactions, save_descriptors,
    save_ground_truth, save_interactions, DescriptorTable, InteractionDataset, SyntheticSpec,
};
use crate::error::{AdrnetError, Result};
use crate::harness::{
    cross_validate, grid_search, run_training, MetricReport, TrainConfig, DEFAULT_GRID_KS,
};
use crate::models::{score_cells, ModelConfig, ModelKind};
use crate::neural::InitScheme;
use crate::params_io::{load_params, save_params};

#[derive(Parser, Debug)]
#[command(
    name = "adrnet",
    version,
    about = "Drug-reaction prediction: latent-factor baselines and a descriptor-tower network, \
             with exact ranking metrics and a cross-validation harness"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Print dataset statistics, optionally after degree filtering.
    Stats {
        /// Interaction pair file (drug<TAB>reaction per line).
        #[arg(long)]
        interactions: PathBuf,
        /// Keep reactions observed for strictly more than this many drugs,
        /// then drop drugs left without interactions (repeats to a fixed
        /// point). Prints statistics before and after.
        #[arg(long)]
        min_drugs_per_adr: Option<usize>,
    },
    /// Generate a synthetic dataset from a key=value spec file.
    Synth {
        /// Spec file; keys m, n, k_true, d, noise,
        /// descriptor_informativeness, positive_rate, seed.
        #[arg(long)]
        spec: PathBuf,
        /// Output directory for interactions.tsv, descriptors.tsv,
        /// ground_truth.tsv.
        #[arg(long)]
        out: PathBuf,
    },
    /// k-fold cross-validation for one model configuration.
    Cv {
        #[arg(long)]
        interactions: PathBuf,
        /// Descriptor part files; the first file is the structural part.
        #[arg(long, num_args = 1..)]
        descriptors: Vec<PathBuf>,
        /// mf | gmf | mlp | nmf | adrnet | adrnet-noshare
        #[arg(long)]
        model: String,
        /// key=value config file (field names of the training config).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Where to write the per-fold CSV.
        #[arg(long)]
        out: Option<PathBuf>,
        /// After validation, retrain on every cell and save the parameters.
        #[arg(long)]
        save: Option<PathBuf>,
        /// Record measured wall-clock seconds instead of zeros.
        #[arg(long)]
        timings: bool,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        weight_decay: Option<f64>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        folds: Option<usize>,
    },
    /// Cross-validated sweep over embedding sizes, learning rates, and
    /// weight decays (widths follow the per-K defaults).
    Grid {
        #[arg(long)]
        interactions: PathBuf,
        #[arg(long, num_args = 1..)]
        descriptors: Vec<PathBuf>,
        /// mf | gmf | mlp | nmf | adrnet | adrnet-noshare
        #[arg(long)]
        model: String,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Sweep CSV output path.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        timings: bool,
        /// Embedding sizes to sweep (default: the built-in grid).
        #[arg(long, value_delimiter = ',')]
        ks: Vec<usize>,
        /// Learning rates to sweep (default: the configured one).
        #[arg(long, value_delimiter = ',')]
        lrs: Vec<f64>,
        /// Weight decays to sweep (default: the configured one).
        #[arg(long, value_delimiter = ',')]
        wds: Vec<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        folds: Option<usize>,
    },
    /// Rank reactions per drug from saved parameters.
    Predict {
        #[arg(long)]
        interactions: PathBuf,
        #[arg(long, num_args = 1..)]
        descriptors: Vec<PathBuf>,
        /// Parameter file written by cv --save.
        #[arg(long)]
        params: PathBuf,
        /// Lines per drug.
        #[arg(long)]
        top: i64,
        /// Output path for drug<TAB>reaction<TAB>score lines.
        #[arg(long)]
        out: PathBuf,
    },
}

/// Parsed key=value config file with line tracking. Keys are consumed as
/// they are resolved; whatever remains at the end is an unknown-key error.
#[derive(Debug)]
struct FileConfig {
    path: String,
    entries: HashMap<String, (usize, String)>,
}

impl FileConfig {
    fn empty() -> Self {
        FileConfig {
            path: String::new(),
            entries: HashMap::new(),
        }
    }

    fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| AdrnetError::Parse {
            path: path.display().to_string(),
            line: 0,
            msg: format!("cannot read file: {e}"),
        })?;
        let mut entries = HashMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let lineno = idx + 1;
            let Some((key, value)) = line.split_once('=') else {
                return Err(AdrnetError::Parse {
                    path: path.display().to_string(),
                    line: lineno,
                    msg: format!("expected key=value, got {line:?}"),
                });
            };
            let key = key.trim().to_string();
            if entries
                .insert(key.clone(), (lineno, value.trim().to_string()))
                .is_some()
            {
                return Err(AdrnetError::Parse {
                    path: path.display().to_string(),
                    line: lineno,
                    msg: format!("duplicate key {key}"),
                });
            }
        }
        Ok(FileConfig {
            path: path.display().to_string(),
            entries,
        })
    }

    fn load_opt(path: Option<&Path>) -> Result<Self> {
        match path {
            Some(p) => Self::load(p),
            None => Ok(Self::empty()),
        }
    }

    fn take<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.entries.remove(key) {
            None => Ok(None),
            Some((line, value)) => value.parse().map(Some).map_err(|_| AdrnetError::Parse {
                path: self.path.clone(),
                line,
                msg: format!("bad value for {key}: {value:?}"),
            }),
        }
    }

    fn take_widths(&mut self, key: &str) -> Result<Option<Vec<usize>>> {
        match self.entries.remove(key) {
            None => Ok(None),
            Some((line, value)) => value
                .split(',')
                .map(|tok| tok.trim().parse::<usize>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map(Some)
                .map_err(|_| AdrnetError::Parse {
                    path: self.path.clone(),
                    line,
                    msg: format!("bad width list for {key}: {value:?}"),
                }),
        }
    }

    fn take_init(&mut self) -> Result<Option<InitScheme>> {
        match self.entries.remove("init") {
            None => Ok(None),
            Some((line, value)) => match InitScheme::parse(&value) {
                Some(scheme) => Ok(Some(scheme)),
                None => Err(AdrnetError::Parse {
                    path: self.path.clone(),
                    line,
                    msg: format!("unknown init scheme {value:?}"),
                }),
            },
        }
    }

    fn reject_unknown(self) -> Result<()> {
        if self.entries.is_empty() {
            return Ok(());
        }
        let mut keys: Vec<&String> = self.entries.keys().collect();
        keys.sort();
        let listed: Vec<String> = keys
            .iter()
            .map(|k| format!("{k} (line {})", self.entries[*k].0))
            .collect();
        Err(AdrnetError::Config(format!(
            "unknown config keys in {}: {}",
            self.path,
            listed.join(", ")
        )))
    }
}

/// CLI spellings for model kinds; the ablation is spelled with a hyphen.
pub fn parse_cli_kind(s: &str) -> Result<ModelKind> {
    match s {
        "mf" => Ok(ModelKind::Mf),
        "gmf" => Ok(ModelKind::Gmf),
        "mlp" | "mlp_cf" => Ok(ModelKind::MlpCf),
        "nmf" => Ok(ModelKind::Nmf),
        "adrnet" => Ok(ModelKind::Adrnet),
        "adrnet-noshare" | "adrnet_noshare" => Ok(ModelKind::AdrnetNoshare),
        other => Err(AdrnetError::Config(format!(
            "unknown model {other:?} (expected mf, gmf, mlp, nmf, adrnet, adrnet-noshare)"
        ))),
    }
}

struct CvFlags {
    k: Option<usize>,
    lr: Option<f64>,
    weight_decay: Option<f64>,
    epochs: Option<usize>,
    batch_size: Option<usize>,
    seed: Option<u64>,
    folds: Option<usize>,
}

/// Defaults, overridden by the config file, overridden by flags.
/// Width keys apply only when the embedding size is not being swept.
fn resolve_train_config(
    kind: ModelKind,
    descriptor_dim: usize,
    file: &mut FileConfig,
    flags: &CvFlags,
    allow_widths: bool,
) -> Result<(TrainConfig, usize)> {
    let k = flags
        .k
        .or(file.take::<usize>("k")?)
        .unwrap_or(16);
    let seed = flags.seed.or(file.take::<u64>("seed")?).unwrap_or(0);
    let mut model = ModelConfig::defaults(kind, k, descriptor_dim, seed);
    if allow_widths {
        if let Some(w) = file.take_widths("deep_widths")? {
            model.deep_widths = w;
        }
        if let Some(w) = file.take_widths("shallow_widths")? {
            model.shallow_widths = w;
        }
    }
    if let Some(init) = file.take_init()? {
        model.init = init;
    }

    let mut cfg = TrainConfig::new(model);
    cfg.seed = seed;
    if let Some(v) = file.take::<f64>("learning_rate")? {
        cfg.adam.learning_rate = v;
    }
    if let Some(v) = flags.lr {
        cfg.adam.learning_rate = v;
    }
    if let Some(v) = file.take::<f64>("weight_decay")? {
        cfg.adam.weight_decay = v;
    }
    if let Some(v) = flags.weight_decay {
        cfg.adam.weight_decay = v;
    }
    if let Some(v) = file.take::<f64>("beta1")? {
        cfg.adam.beta1 = v;
    }
    if let Some(v) = file.take::<f64>("beta2")? {
        cfg.adam.beta2 = v;
    }
    if let Some(v) = file.take::<f64>("epsilon")? {
        cfg.adam.epsilon = v;
    }
    if let Some(v) = flags.epochs.or(file.take::<usize>("epochs")?) {
        cfg.epochs = v;
    }
    if let Some(v) = flags.batch_size.or(file.take::<usize>("batch_size")?) {
        cfg.batch_size = v;
    }
    cfg.neg_subsample_ratio = file.take::<f64>("neg_subsample_ratio")?;
    if let Some(v) = file.take::<usize>("eval_every")? {
        cfg.eval_every = v;
    }
    let folds = flags.folds.or(file.take::<usize>("folds")?).unwrap_or(10);
    Ok((cfg, folds))
}

fn load_table(paths: &[PathBuf], ds: &InteractionDataset) -> Result<Option<DescriptorTable>> {
    if paths.is_empty() {
        return Ok(None);
    }
    let refs: Vec<&Path> = paths.iter().map(|p| p.as_path()).collect();
    load_descriptors(&refs, ds).map(Some)
}

fn require_descriptors<'t>(
    kind: ModelKind,
    table: Option<&'t DescriptorTable>,
) -> Result<Option<&'t DescriptorTable>> {
    if kind.uses_deep() && table.is_none() {
        return Err(AdrnetError::Config(format!(
            "model {} needs --descriptors",
            kind.name()
        )));
    }
    Ok(table)
}

fn stats_line(ds: &InteractionDataset) -> String {
    let s = dataset_stats(ds);
    format!(
        "drugs={} adrs={} interactions={}",
        s.n_drugs, s.n_adrs, s.interactions
    )
}

fn human_stats(label: &str, ds: &InteractionDataset) -> String {
    let s = dataset_stats(ds);
    format!(
        "{label}: drugs={} adrs={} interactions={} density={:.6}",
        s.n_drugs, s.n_adrs, s.interactions, s.density
    )
}

fn cmd_stats(interactions: &Path, min_drugs_per_adr: Option<usize>) -> Result<()> {
    let ds = load_interactions(interactions)?;
    match min_drugs_per_adr {
        None => {
            println!("{}", human_stats("dataset", &ds));
            println!("{}", stats_line(&ds));
        }
        Some(threshold) => {
            println!("{}", human_stats("before", &ds));
            let filtered = filter_dataset(&ds, threshold)?;
            println!(
                "{}",
                human_stats(&format!("after(min_drugs_per_adr={threshold})"), &filtered)
            );
            println!("{}", stats_line(&filtered));
        }
    }
    Ok(())
}

fn cmd_synth(spec_path: &Path, out_dir: &Path) -> Result<()> {
    let mut file = FileConfig::load(spec_path)?;
    let spec = SyntheticSpec {
        m: file.take("m")?.unwrap_or(100),
        n: file.take("n")?.unwrap_or(150),
        k_true: file.take("k_true")?.unwrap_or(8),
        d: file.take("d")?.unwrap_or(64),
        noise: file.take("noise")?.unwrap_or(0.0),
        descriptor_informativeness: file.take("descriptor_informativeness")?.unwrap_or(1.0),
        positive_rate: file.take("positive_rate")?.unwrap_or(0.1),
        seed: file.take("seed")?.unwrap_or(0),
    };
    file.reject_unknown()?;
    eprintln!(
        "resolved: m={} n={} k_true={} d={} noise={} descriptor_informativeness={} positive_rate={} seed={}",
        spec.m, spec.n, spec.k_true, spec.d, spec.noise, spec.descriptor_informativeness,
        spec.positive_rate, spec.seed
    );

    let (ds, table, truth) = crate::data::synth_generate(&spec)?;
    std::fs::create_dir_all(out_dir).map_err(|e| {
        AdrnetError::Io(format!("cannot create {}: {e}", out_dir.display()))
    })?;
    save_interactions(&ds, &out_dir.join("interactions.tsv"))?;
    save_descriptors(&table, &[&out_dir.join("descriptors.tsv")])?;
    save_ground_truth(&truth.factors, &out_dir.join("ground_truth.tsv"))?;
    println!(
        "wrote=interactions.tsv,descriptors.tsv,ground_truth.tsv dir={} {}",
        out_dir.display(),
        stats_line(&ds)
    );
    Ok(())
}

/// Paper-style mean ± sd on the 10^-2 scale.
fn scaled(label: &str, mean: f64, sd: f64) -> String {
    format!("{label} {:.2} ± {:.2}", mean * 100.0, sd * 100.0)
}

fn write_report_csv(report: &MetricReport, out: Option<&Path>, timings: bool) -> Result<()> {
    if let Some(path) = out {
        std::fs::write(path, report.to_csv(timings))
            .map_err(|e| AdrnetError::Io(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_cv(
    interactions: &Path,
    descriptors: &[PathBuf],
    model: &str,
    config: Option<&Path>,
    out: Option<&Path>,
    save: Option<&Path>,
    timings: bool,
    flags: CvFlags,
) -> Result<()> {
    let kind = parse_cli_kind(model)?;
    let ds = load_interactions(interactions)?;
    let table = load_table(descriptors, &ds)?;
    let table = require_descriptors(kind, table.as_ref())?;
    let dim = table.map_or(0, |t| t.dim());

    let mut file = FileConfig::load_opt(config)?;
    let (cfg, folds) = resolve_train_config(kind, dim, &mut file, &flags, true)?;
    file.reject_unknown()?;
    eprintln!("resolved: {}", cfg.config_hash(folds));

    let report = cross_validate(&ds, table, &cfg, folds)?;
    write_report_csv(&report, out, timings)?;

    if let Some(params_path) = save {
        let all_cells: Vec<(usize, usize)> = (0..ds.n_drugs())
            .flat_map(|i| (0..ds.n_adrs()).map(move |j| (i, j)))
            .collect();
        let (params, _) = run_training(&ds, table, &all_cells, &cfg)?;
        save_params(&params, params_path)?;
        eprintln!("saved full-data parameters to {}", params_path.display());
    }

    println!("{}", scaled("AUC", report.mean_auc, report.sd_auc));
    println!("{}", scaled("AUPR", report.mean_aupr, report.sd_aupr));
    println!("{}", report.to_json(timings));
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_grid(
    interactions: &Path,
    descriptors: &[PathBuf],
    model: &str,
    config: Option<&Path>,
    out: Option<&Path>,
    timings: bool,
    ks: &[usize],
    lrs: &[f64],
    wds: &[f64],
    seed: Option<u64>,
    folds: Option<usize>,
) -> Result<()> {
    let kind = parse_cli_kind(model)?;
    let ds = load_interactions(interactions)?;
    let table = load_table(descriptors, &ds)?;
    let table = require_descriptors(kind, table.as_ref())?;
    let dim = table.map_or(0, |t| t.dim());

    let mut file = FileConfig::load_opt(config)?;
    let flags = CvFlags {
        k: None,
        lr: None,
        weight_decay: None,
        epochs: None,
        batch_size: None,
        seed,
        folds,
    };
    let (base, k_folds) = resolve_train_config(kind, dim, &mut file, &flags, false)?;
    file.reject_unknown()?;

    let ks: Vec<usize> = if ks.is_empty() { DEFAULT_GRID_KS.to_vec() } else { ks.to_vec() };
    let lrs: Vec<f64> = if lrs.is_empty() { vec![base.adam.learning_rate] } else { lrs.to_vec() };
    let wds: Vec<f64> = if wds.is_empty() { vec![base.adam.weight_decay] } else { wds.to_vec() };

    let mut grid = Vec::new();
    for &k in &ks {
        for &lr in &lrs {
            for &wd in &wds {
                let mut cfg = base.clone();
                cfg.model = ModelConfig::defaults(kind, k, dim, base.seed);
                cfg.model.init = base.model.init;
                cfg.adam.learning_rate = lr;
                cfg.adam.weight_decay = wd;
                grid.push(cfg);
            }
        }
    }
    for cfg in &grid {
        eprintln!("resolved: {}", cfg.config_hash(k_folds));
    }

    let reports = grid_search(&ds, table, &grid, k_folds)?;

    let mut csv = String::from(
        "model,K,lr,weight_decay,mean_auc,sd_auc,mean_aupr,sd_aupr,undefined_folds,config\n",
    );
    let cell = |v: f64| if v.is_nan() { "nan".to_string() } else { format!("{v}") };
    for r in &reports {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.model,
            r.k,
            r.learning_rate,
            r.weight_decay,
            cell(r.mean_auc),
            cell(r.sd_auc),
            cell(r.mean_aupr),
            cell(r.sd_aupr),
            r.undefined_folds,
            r.config_hash,
        ));
    }
    if let Some(path) = out {
        std::fs::write(path, &csv)
            .map_err(|e| AdrnetError::Io(format!("cannot write {}: {e}", path.display())))?;
    }
    let _ = timings;

    let best = &reports[0];
    println!(
        "reports={} best_model={} best_K={} best_lr={} best_wd={} best_mean_auc={}",
        reports.len(),
        best.model,
        best.k,
        best.learning_rate,
        best.weight_decay,
        cell(best.mean_auc),
    );
    Ok(())
}

fn cmd_predict(
    interactions: &Path,
    descriptors: &[PathBuf],
    params_path: &Path,
    top: i64,
    out: &Path,
) -> Result<()> {
    if top <= 0 {
        return Err(AdrnetError::Config(format!(
            "--top must be positive, got {top}"
        )));
    }
    let top = top as usize;
    let ds = load_interactions(interactions)?;
    let params = load_params(params_path)?;
    if params.n_drugs() != ds.n_drugs() || params.n_adrs() != ds.n_adrs() {
        return Err(AdrnetError::Dim(format!(
            "parameters are {}x{} but dataset is {}x{}",
            params.n_drugs(),
            params.n_adrs(),
            ds.n_drugs(),
            ds.n_adrs()
        )));
    }
    let table = load_table(descriptors, &ds)?;
    let table = require_descriptors(params.kind, table.as_ref())?;
    eprintln!(
        "resolved: model={} K={} drugs={} adrs={} top={}",
        params.kind.name(),
        params.k,
        ds.n_drugs(),
        ds.n_adrs(),
        top
    );

    let mut lines = 0usize;
    let mut text = String::new();
    for i in 0..ds.n_drugs() {
        let cells: Vec<(usize, usize)> = (0..ds.n_adrs()).map(|j| (i, j)).collect();
        let scores = score_cells(&params, &cells, table)?;
        let mut order: Vec<usize> = (0..ds.n_adrs()).collect();
        // Descending score; reaction index breaks ties so output is total.
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        for &j in order.iter().take(top) {
            text.push_str(&format!(
                "{}\t{}\t{}\n",
                ds.drug_ids()[i],
                ds.adr_ids()[j],
                scores[j]
            ));
            lines += 1;
        }
    }
    std::fs::write(out, text)
        .map_err(|e| AdrnetError::Io(format!("cannot write {}: {e}", out.display())))?;
    println!(
        "drugs={} top={} lines={} out={}",
        ds.n_drugs(),
        top,
        lines,
        out.display()
    );
    Ok(())
}

/// Dispatches one parsed invocation.
pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Stats {
            interactions,
            min_drugs_per_adr,
        } => cmd_stats(&interactions, min_drugs_per_adr),
        Command::Synth { spec, out } => cmd_synth(&spec, &out),
        Command::Cv {
            interactions,
            descriptors,
            model,
            config,
            out,
            save,
            timings,
            k,
            lr,
            weight_decay,
            epochs,
            batch_size,
            seed,
            folds,
        } => cmd_cv(
            &interactions,
            &descriptors,
            &model,
            config.as_deref(),
            out.as_deref(),
            save.as_deref(),
            timings,
            CvFlags {
                k,
                lr,
                weight_decay,
                epochs,
                batch_size,
                seed,
                folds,
            },
        ),
        Command::Grid {
            interactions,
            descriptors,
            model,
            config,
            out,
            timings,
            ks,
            lrs,
            wds,
            seed,
            folds,
        } => cmd_grid(
            &interactions,
            &descriptors,
            &model,
            config.as_deref(),
            out.as_deref(),
            timings,
            &ks,
            &lrs,
            &wds,
            seed,
            folds,
        ),
        Command::Predict {
            interactions,
            descriptors,
            params,
            top,
            out,
        } => cmd_predict(&interactions, &descriptors, &params, top, &out),
    }
}
