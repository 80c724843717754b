//! Experiment driver: seeded training runs, k-fold cross-validation, and
//! hyperparameter sweeps, with CSV / JSON report emission.
//!
//! Everything downstream of a (dataset, config, seed) triple is
//! deterministic; wall-clock timings are the one exception and are excluded
//! from the determinism contract.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::data::dataset::InteractionDataset;
use crate::data::descriptors::DescriptorTable;
use crate::data::folds::{make_folds, FoldPlan};
use crate::error::{AdrnetError, Result};
use crate::metrics::{auc, aupr, paired_t_test, ScoredLabels, TTestResult};
use crate::models::{build_model, score_cells, train_step, ADRNetParams, ModelConfig};
use crate::neural::AdamConfig;

/// Grid defaults for hyperparameter sweeps.
pub const DEFAULT_GRID_LRS: [f64; 4] = [0.001, 0.005, 0.01, 0.05];
pub const DEFAULT_GRID_WDS: [f64; 4] = [1e-6, 1e-5, 1e-4, 1e-3];
pub const DEFAULT_GRID_KS: [usize; 7] = [16, 32, 64, 128, 256, 512, 1024];

/// One training run's full recipe. `seed` drives model initialization,
/// epoch shuffles, negative sampling, and fold assignment; `model.seed` is
/// only honored when a model is built outside the harness.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub model: ModelConfig,
    pub adam: AdamConfig,
    pub epochs: usize,
    pub batch_size: usize,
    /// When set, each epoch trains on all positive cells plus
    /// ratio x positives freshly sampled negative cells; when unset, every
    /// training cell participates in every epoch.
    pub neg_subsample_ratio: Option<f64>,
    pub eval_every: usize,
    pub seed: u64,
}

impl TrainConfig {
    pub fn new(model: ModelConfig) -> Self {
        TrainConfig {
            model,
            adam: AdamConfig::default(),
            epochs: 50,
            batch_size: 256,
            neg_subsample_ratio: None,
            eval_every: 10,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.adam.validate()?;
        if self.epochs == 0 {
            return Err(AdrnetError::Config("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(AdrnetError::Config("batch_size must be at least 1".into()));
        }
        if self.eval_every == 0 {
            return Err(AdrnetError::Config("eval_every must be at least 1".into()));
        }
        if let Some(r) = self.neg_subsample_ratio {
            if !(r > 0.0) {
                return Err(AdrnetError::Config(format!(
                    "neg_subsample_ratio must be positive, got {r}"
                )));
            }
        }
        Ok(())
    }

    /// Canonical key for this configuration plus the fold count. A short
    /// content digest is appended, but the readable prefix (with zero-padded
    /// K) comes first, so keys sort by kind, then embedding size, and so on.
    pub fn config_hash(&self, k_folds: usize) -> String {
        let widths = |w: &[usize]| {
            if w.is_empty() {
                "none".to_string()
            } else {
                w.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("-")
            }
        };
        let neg = match self.neg_subsample_ratio {
            Some(r) => r.to_string(),
            None => "none".to_string(),
        };
        let key = format!(
            "model={} K={:06} deep={} shallow={} lr={} wd={} epochs={} batch={} neg={} seed={} folds={}",
            self.model.kind.name(),
            self.model.k,
            widths(&self.model.deep_widths),
            widths(&self.model.shallow_widths),
            self.adam.learning_rate,
            self.adam.weight_decay,
            self.epochs,
            self.batch_size,
            neg,
            self.seed,
            k_folds,
        );
        let digest = Sha256::digest(key.as_bytes());
        let hex: String = digest[..4].iter().map(|b| format!("{b:02x}")).collect();
        format!("{key} #{hex}")
    }
}

/// One fold's outcome. `metrics` is `None` when the held-out cells were
/// single-class, which leaves ranking metrics undefined.
#[derive(Debug, Clone)]
pub struct FoldRow {
    pub fold: usize,
    pub metrics: Option<(f64, f64)>,
    pub final_loss: f64,
    pub epochs_run: usize,
    pub wall_seconds: f64,
}

impl FoldRow {
    pub fn auc(&self) -> Option<f64> {
        self.metrics.map(|(a, _)| a)
    }

    pub fn aupr(&self) -> Option<f64> {
        self.metrics.map(|(_, p)| p)
    }
}

/// Cross-validation summary. Means and standard deviations cover the folds
/// whose metrics were defined; `undefined_folds` counts the excluded ones.
/// With no defined fold the aggregates are NaN.
#[derive(Debug, Clone)]
pub struct MetricReport {
    pub model: String,
    pub k: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub per_fold: Vec<FoldRow>,
    pub mean_auc: f64,
    pub sd_auc: f64,
    pub mean_aupr: f64,
    pub sd_aupr: f64,
    pub undefined_folds: usize,
    pub config_hash: String,
    pub seed: u64,
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
        / (values.len() - 1) as f64;
    (mean, var.sqrt())
}

fn float_cell(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v}")
    }
}

impl MetricReport {
    fn aggregate(&mut self) {
        let aucs: Vec<f64> = self.per_fold.iter().filter_map(|r| r.auc()).collect();
        let auprs: Vec<f64> = self.per_fold.iter().filter_map(|r| r.aupr()).collect();
        self.undefined_folds = self.per_fold.len() - aucs.len();
        (self.mean_auc, self.sd_auc) = mean_sd(&aucs);
        (self.mean_aupr, self.sd_aupr) = mean_sd(&auprs);
    }

    /// Defined fold AUCs in fold order.
    pub fn fold_aucs(&self) -> Vec<f64> {
        self.per_fold.iter().filter_map(|r| r.auc()).collect()
    }

    /// Per-fold CSV with a fixed column order. `include_wall` keeps the
    /// measured timings; otherwise the column is written as 0.000 so equal
    /// runs emit byte-identical files.
    pub fn to_csv(&self, include_wall: bool) -> String {
        let mut out =
            String::from("fold,model,K,lr,weight_decay,auc,aupr,final_loss,epochs,wall_seconds\n");
        for row in &self.per_fold {
            let wall = if include_wall { row.wall_seconds } else { 0.0 };
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{:.3}\n",
                row.fold,
                self.model,
                self.k,
                self.learning_rate,
                self.weight_decay,
                float_cell(row.auc().unwrap_or(f64::NAN)),
                float_cell(row.aupr().unwrap_or(f64::NAN)),
                row.final_loss,
                row.epochs_run,
                wall,
            ));
        }
        out
    }

    /// Structured single-object summary (valid JSON; undefined metrics are
    /// null).
    pub fn to_json(&self, include_wall: bool) -> String {
        let opt = |v: Option<f64>| match v {
            Some(x) if x.is_finite() => format!("{x}"),
            _ => "null".to_string(),
        };
        let agg = |x: f64| opt(Some(x));
        let folds: Vec<String> = self
            .per_fold
            .iter()
            .map(|r| {
                let wall = if include_wall { r.wall_seconds } else { 0.0 };
                format!(
                    "{{\"fold\":{},\"auc\":{},\"aupr\":{},\"final_loss\":{},\"epochs\":{},\"wall_seconds\":{:.3}}}",
                    r.fold,
                    opt(r.auc()),
                    opt(r.aupr()),
                    r.final_loss,
                    r.epochs_run,
                    wall,
                )
            })
            .collect();
        format!(
            "{{\"model\":\"{}\",\"K\":{},\"lr\":{},\"weight_decay\":{},\"seed\":{},\"config\":\"{}\",\"mean_auc\":{},\"sd_auc\":{},\"mean_aupr\":{},\"sd_aupr\":{},\"undefined_folds\":{},\"folds\":[{}]}}",
            self.model,
            self.k,
            self.learning_rate,
            self.weight_decay,
            self.seed,
            self.config_hash,
            agg(self.mean_auc),
            agg(self.sd_auc),
            agg(self.mean_aupr),
            agg(self.sd_aupr),
            self.undefined_folds,
            folds.join(","),
        )
    }
}

fn epoch_cells(
    all: &[(usize, usize)],
    ds: &InteractionDataset,
    ratio: Option<f64>,
    rng: &mut ChaCha8Rng,
) -> Vec<(usize, usize)> {
    let mut cells: Vec<(usize, usize)> = match ratio {
        None => all.to_vec(),
        Some(r) => {
            let mut positives = Vec::new();
            let mut negatives = Vec::new();
            for &(i, j) in all {
                if ds.label(i, j) == 1 {
                    positives.push((i, j));
                } else {
                    negatives.push((i, j));
                }
            }
            let want = ((positives.len() as f64) * r).round() as usize;
            let take = want.min(negatives.len());
            let (sampled, _) = negatives.partial_shuffle(rng, take);
            positives.extend_from_slice(sampled);
            positives
        }
    };
    cells.shuffle(rng);
    cells
}

/// Trains an existing model in place. Epoch order, batching, and negative
/// sampling are driven by `rng`; the returned trace holds each epoch's mean
/// per-cell loss.
pub fn run_training_with(
    params: &mut ADRNetParams,
    ds: &InteractionDataset,
    descriptors: Option<&DescriptorTable>,
    train_cells: &[(usize, usize)],
    cfg: &TrainConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    if train_cells.is_empty() {
        return Err(AdrnetError::Data("no training cells".into()));
    }
    if params.n_drugs() != ds.n_drugs() || params.n_adrs() != ds.n_adrs() {
        return Err(AdrnetError::Dim(format!(
            "model is {}x{} but dataset is {}x{}",
            params.n_drugs(),
            params.n_adrs(),
            ds.n_drugs(),
            ds.n_adrs()
        )));
    }
    if params.kind.uses_deep() && descriptors.is_none() {
        return Err(AdrnetError::Config(format!(
            "{} training needs drug descriptors",
            params.kind.name()
        )));
    }

    let mut trace = Vec::with_capacity(cfg.epochs);
    let mut batch_buf: Vec<(usize, usize, u8)> = Vec::with_capacity(cfg.batch_size);
    for _ in 0..cfg.epochs {
        let cells = epoch_cells(train_cells, ds, cfg.neg_subsample_ratio, rng);
        let mut loss_sum = 0.0;
        for chunk in cells.chunks(cfg.batch_size) {
            batch_buf.clear();
            batch_buf.extend(chunk.iter().map(|&(i, j)| (i, j, ds.label(i, j))));
            loss_sum += train_step(params, &batch_buf, descriptors, &cfg.adam)?;
        }
        trace.push(loss_sum / cells.len() as f64);
    }
    Ok(trace)
}

/// Builds a fresh model from `cfg.seed` and trains it on the given cells.
/// Two calls with equal inputs produce bit-identical parameters and traces.
pub fn run_training(
    ds: &InteractionDataset,
    descriptors: Option<&DescriptorTable>,
    train_cells: &[(usize, usize)],
    cfg: &TrainConfig,
) -> Result<(ADRNetParams, Vec<f64>)> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = build_model(&cfg.model, ds.n_drugs(), ds.n_adrs(), &mut rng)?;
    let trace = run_training_with(&mut params, ds, descriptors, train_cells, cfg, &mut rng)?;
    Ok((params, trace))
}

fn fold_metrics(
    params: &ADRNetParams,
    ds: &InteractionDataset,
    descriptors: Option<&DescriptorTable>,
    cells: &[(usize, usize)],
) -> Result<Option<(f64, f64)>> {
    let scores = score_cells(params, cells, descriptors)?;
    let labels: Vec<u8> = cells.iter().map(|&(i, j)| ds.label(i, j)).collect();
    let scored = ScoredLabels::new(scores, labels)?;
    match auc(&scored) {
        Ok(a) => Ok(Some((a, aupr(&scored)?))),
        Err(AdrnetError::MetricUndefined(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Cross-validation over a prepared fold plan. Every fold trains a fresh
/// model seeded with `cfg.seed XOR fold` on the out-of-fold cells, then
/// scores the held-out cells.
pub fn cross_validate_plan(
    ds: &InteractionDataset,
    descriptors: Option<&DescriptorTable>,
    cfg: &TrainConfig,
    plan: &FoldPlan,
) -> Result<MetricReport> {
    cfg.validate()?;
    let mut per_fold = Vec::with_capacity(plan.k());
    for fold in 0..plan.k() {
        let start = Instant::now();
        let train = plan.train_cells(fold);
        let test = plan.test_cells(fold);
        let fold_cfg = TrainConfig {
            seed: cfg.seed ^ fold as u64,
            ..cfg.clone()
        };
        let (params, trace) = run_training(ds, descriptors, &train, &fold_cfg)?;
        let metrics = fold_metrics(&params, ds, descriptors, &test)?;
        per_fold.push(FoldRow {
            fold,
            metrics,
            final_loss: *trace.last().expect("epochs >= 1"),
            epochs_run: cfg.epochs,
            wall_seconds: start.elapsed().as_secs_f64(),
        });
    }
    let mut report = MetricReport {
        model: cfg.model.kind.name().to_string(),
        k: cfg.model.k,
        learning_rate: cfg.adam.learning_rate,
        weight_decay: cfg.adam.weight_decay,
        per_fold,
        mean_auc: f64::NAN,
        sd_auc: f64::NAN,
        mean_aupr: f64::NAN,
        sd_aupr: f64::NAN,
        undefined_folds: 0,
        config_hash: cfg.config_hash(plan.k()),
        seed: cfg.seed,
    };
    report.aggregate();
    Ok(report)
}

/// k-fold cross-validation with folds drawn from `cfg.seed`.
pub fn cross_validate(
    ds: &InteractionDataset,
    descriptors: Option<&DescriptorTable>,
    cfg: &TrainConfig,
    k: usize,
) -> Result<MetricReport> {
    let plan = make_folds(ds.n_drugs(), ds.n_adrs(), k, cfg.seed)?;
    cross_validate_plan(ds, descriptors, cfg, &plan)
}

/// One cross-validation per grid point, returned sorted by mean AUC
/// (best first; NaN means sort last; equal means keep grid order).
pub fn grid_search(
    ds: &InteractionDataset,
    descriptors: Option<&DescriptorTable>,
    grid: &[TrainConfig],
    k: usize,
) -> Result<Vec<MetricReport>> {
    if grid.is_empty() {
        return Err(AdrnetError::Config("empty hyperparameter grid".into()));
    }
    let mut reports = Vec::with_capacity(grid.len());
    for cfg in grid {
        reports.push(cross_validate(ds, descriptors, cfg, k)?);
    }
    reports.sort_by(|a, b| {
        let key = |r: &MetricReport| if r.mean_auc.is_nan() { f64::NEG_INFINITY } else { r.mean_auc };
        key(b).total_cmp(&key(a))
    });
    Ok(reports)
}

/// Embedding-size curve: for each K in the reports, the best mean AUC and
/// its AUPR, sorted by K ascending.
pub fn embedding_size_curve(reports: &[MetricReport]) -> Vec<(usize, f64, f64)> {
    let mut best: Vec<(usize, f64, f64)> = Vec::new();
    for r in reports {
        match best.iter_mut().find(|(k, _, _)| *k == r.k) {
            Some(entry) => {
                if r.mean_auc > entry.1 || entry.1.is_nan() {
                    *entry = (r.k, r.mean_auc, r.mean_aupr);
                }
            }
            None => best.push((r.k, r.mean_auc, r.mean_aupr)),
        }
    }
    best.sort_by_key(|&(k, _, _)| k);
    best
}

/// Paired t-test over the fold AUCs of two reports from the same fold plan.
pub fn compare_fold_aucs(a: &MetricReport, b: &MetricReport) -> Result<TTestResult> {
    let xs = a.fold_aucs();
    let ys = b.fold_aucs();
    if xs.len() != ys.len() {
        return Err(AdrnetError::Data(format!(
            "fold AUC counts differ: {} vs {} (were both runs on the same folds?)",
            xs.len(),
            ys.len()
        )));
    }
    paired_t_test(&xs, &ys)
}
