//! Batched scoring and training over (drug, reaction, label) cells.
//!
//! One forward pass evaluates the descriptor tower once per distinct drug in
//! the batch (cells of the same drug share the representation), the latent
//! tower once per cell, and the product head once per cell. The backward
//! pass accumulates into each block's gradient buffer with `+=`, so the
//! shared Q receives the sum of its latent-tower and product-head
//! contributions before the optimizer runs.

use std::collections::HashMap;

use crate::data::descriptors::DescriptorTable;
use crate::error::{AdrnetError, Result};
use crate::neural::gradcheck::GradCheckTarget;
use crate::neural::matrix::Matrix;
use crate::neural::ops::{
    affine_backward, affine_forward, bce_backward, bce_loss, elementwise_product,
    elementwise_product_backward, multihot_affine_backward, multihot_affine_forward, relu,
    relu_backward, sigmoid_backward, sigmoid_slice, AffineCache,
};
use crate::neural::{adam_step, AdamConfig, ParamBlock};

use super::{dot, ADRNetParams};

struct DeepRun {
    /// Distinct batch drugs in first-occurrence order.
    uniq_drugs: Vec<usize>,
    /// Cell index to position in `uniq_drugs`.
    slot_of_cell: Vec<usize>,
    /// Pre-activation of every layer, each `uniq x width`.
    pres: Vec<Matrix>,
    /// Affine caches for layers after the multi-hot input layer.
    caches: Vec<AffineCache>,
    /// Final post-activation drug representations, `uniq x k`.
    phi: Matrix,
}

struct ShallowRun {
    pres: Vec<Matrix>,
    caches: Vec<AffineCache>,
    /// Tower output, `batch x k`.
    out: Matrix,
}

struct DcfRun {
    /// Head inputs (tower representation or latent drug row), `batch x k`.
    x: Matrix,
    /// Reaction embeddings the head read, `batch x k`.
    q_rows: Matrix,
    /// Element-wise products, `batch x k`.
    e: Matrix,
}

struct Forward {
    y_hat: Vec<f64>,
    deep: Option<DeepRun>,
    shallow: Option<ShallowRun>,
    dcf: Option<DcfRun>,
}

fn add_scaled(dst: &mut [f64], src: &[f64], s: f64) {
    for (d, &v) in dst.iter_mut().zip(src.iter()) {
        *d = s.mul_add(v, *d);
    }
}

fn gather_rows(source: &Matrix, rows: impl Iterator<Item = usize>, cols: usize) -> Matrix {
    let indices: Vec<usize> = rows.collect();
    let mut out = Matrix::zeros(indices.len(), cols);
    for (r, &idx) in indices.iter().enumerate() {
        out.row_mut(r).copy_from_slice(source.row(idx));
    }
    out
}

fn check_cells(params: &ADRNetParams, cells: &[(usize, usize)]) -> Result<()> {
    let (m, n) = (params.n_drugs(), params.n_adrs());
    for &(i, j) in cells {
        if i >= m || j >= n {
            return Err(AdrnetError::Dim(format!(
                "cell ({i}, {j}) outside {m}x{n} matrix"
            )));
        }
    }
    Ok(())
}

fn batched_forward(
    params: &ADRNetParams,
    cells: &[(usize, usize)],
    descriptors: Option<&DescriptorTable>,
) -> Result<Forward> {
    check_cells(params, cells)?;
    let kind = params.kind;
    let k = params.k;
    let b = cells.len();

    let deep = if kind.uses_deep() {
        let table = descriptors.ok_or_else(|| {
            AdrnetError::Config(format!("{} needs drug descriptors", kind.name()))
        })?;
        let mut uniq_drugs = Vec::new();
        let mut slot_by_drug: HashMap<usize, usize> = HashMap::new();
        let mut slot_of_cell = Vec::with_capacity(b);
        for &(i, _) in cells {
            let slot = *slot_by_drug.entry(i).or_insert_with(|| {
                uniq_drugs.push(i);
                uniq_drugs.len() - 1
            });
            slot_of_cell.push(slot);
        }
        for &i in &uniq_drugs {
            if i >= table.n_drugs() {
                return Err(AdrnetError::Dim(format!(
                    "drug index {i} outside descriptor table of {} rows",
                    table.n_drugs()
                )));
            }
        }
        let rows_bits: Vec<&[usize]> = uniq_drugs.iter().map(|&i| table.bits(i)).collect();
        let (w0, b0) = &params.deep_tower[0];
        let pre0 = multihot_affine_forward(w0, b0, &rows_bits)?;
        let mut act = relu(&pre0);
        let mut pres = vec![pre0];
        let mut caches = Vec::new();
        for (w, bb) in &params.deep_tower[1..] {
            let (pre, cache) = affine_forward(w, bb, &act)?;
            act = relu(&pre);
            pres.push(pre);
            caches.push(cache);
        }
        Some(DeepRun {
            uniq_drugs,
            slot_of_cell,
            pres,
            caches,
            phi: act,
        })
    } else {
        None
    };

    let shallow = if kind.uses_shallow() {
        let mut z1 = Matrix::zeros(b, 2 * k);
        for (r, &(i, j)) in cells.iter().enumerate() {
            let row = z1.row_mut(r);
            row[..k].copy_from_slice(params.latents.p.value.row(i));
            row[k..].copy_from_slice(params.latents.q.value.row(j));
        }
        let mut act = z1;
        let mut pres = Vec::new();
        let mut caches = Vec::new();
        for (w, bb) in &params.shallow_tower {
            let (pre, cache) = affine_forward(w, bb, &act)?;
            act = relu(&pre);
            pres.push(pre);
            caches.push(cache);
        }
        Some(ShallowRun {
            pres,
            caches,
            out: act,
        })
    } else {
        None
    };

    let dcf = if kind.uses_dcf() {
        let x = if kind.dcf_reads_phi() {
            let run = deep.as_ref().expect("phi source requires the deep tower");
            gather_rows(&run.phi, run.slot_of_cell.iter().copied(), k)
        } else {
            gather_rows(&params.latents.p.value, cells.iter().map(|&(i, _)| i), k)
        };
        let q_source = if kind.dcf_reads_q_alt() {
            &params.latents.q_alt.as_ref().expect("noshare allocates Q_alt").value
        } else {
            &params.latents.q.value
        };
        let q_rows = gather_rows(q_source, cells.iter().map(|&(_, j)| j), k);
        let e = elementwise_product(&x, &q_rows)?;
        Some(DcfRun { x, q_rows, e })
    } else {
        None
    };

    let mut logits = vec![0.0; b];
    if let (Some(run), Some(h_d)) = (deep.as_ref(), params.h_d.as_ref()) {
        let h = h_d.value.values();
        for (logit, &slot) in logits.iter_mut().zip(run.slot_of_cell.iter()) {
            *logit += dot(h, run.phi.row(slot));
        }
    }
    if let (Some(run), Some(h_cf)) = (shallow.as_ref(), params.h_cf.as_ref()) {
        let h = h_cf.value.values();
        for (r, logit) in logits.iter_mut().enumerate() {
            *logit += dot(h, run.out.row(r));
        }
    }
    if let (Some(run), Some(h_dcf)) = (dcf.as_ref(), params.h_dcf.as_ref()) {
        let h = h_dcf.value.values();
        for (r, logit) in logits.iter_mut().enumerate() {
            *logit += dot(h, run.e.row(r));
        }
    }
    if kind.uses_raw_inner_product() {
        for (logit, &(i, j)) in logits.iter_mut().zip(cells.iter()) {
            *logit += dot(params.latents.p.value.row(i), params.latents.q.value.row(j));
        }
    }

    let y_hat = sigmoid_slice(&logits);
    Ok(Forward {
        y_hat,
        deep,
        shallow,
        dcf,
    })
}

/// Scores a batch of cells, sharing the descriptor tower across repeated
/// drugs. Agrees with per-cell `predict` on every cell.
pub fn score_cells(
    params: &ADRNetParams,
    cells: &[(usize, usize)],
    descriptors: Option<&DescriptorTable>,
) -> Result<Vec<f64>> {
    if cells.is_empty() {
        return Ok(Vec::new());
    }
    Ok(batched_forward(params, cells, descriptors)?.y_hat)
}

fn accumulate_grads(
    params: &mut ADRNetParams,
    cells: &[(usize, usize)],
    descriptors: Option<&DescriptorTable>,
    fwd: &Forward,
    dlogit: &[f64],
) -> Result<()> {
    let k = params.k;

    // Upstream gradient for the drug representations, summed across every
    // cell and head that read them.
    let mut d_phi = fwd
        .deep
        .as_ref()
        .map(|run| Matrix::zeros(run.uniq_drugs.len(), k));

    if let Some(run) = fwd.dcf.as_ref() {
        let h_dcf = params.h_dcf.as_mut().expect("product kinds allocate h_DCF");
        // dL/de_row = dlogit * h_DCF; dL/dh_DCF += dlogit * e_row.
        let mut de = Matrix::zeros(cells.len(), k);
        for (r, &g) in dlogit.iter().enumerate() {
            add_scaled(de.row_mut(r), h_dcf.value.values(), g);
            add_scaled(h_dcf.grad.row_mut(0), run.e.row(r), g);
        }
        let (dx, dq) = elementwise_product_backward(&run.x, &run.q_rows, &de)?;
        if params.kind.dcf_reads_phi() {
            let deep_run = fwd.deep.as_ref().expect("phi source requires the deep tower");
            let d_phi = d_phi.as_mut().unwrap();
            for (r, &slot) in deep_run.slot_of_cell.iter().enumerate() {
                add_scaled(d_phi.row_mut(slot), dx.row(r), 1.0);
            }
        } else {
            for (r, &(i, _)) in cells.iter().enumerate() {
                add_scaled(params.latents.p.grad.row_mut(i), dx.row(r), 1.0);
            }
        }
        let q_target = if params.kind.dcf_reads_q_alt() {
            params.latents.q_alt.as_mut().expect("noshare allocates Q_alt")
        } else {
            &mut params.latents.q
        };
        for (r, &(_, j)) in cells.iter().enumerate() {
            add_scaled(q_target.grad.row_mut(j), dq.row(r), 1.0);
        }
    }

    if let Some(run) = fwd.deep.as_ref() {
        let h_d = params.h_d.as_mut().expect("deep kinds allocate h_D");
        let d_phi = d_phi.as_mut().unwrap();
        for (r, &g) in dlogit.iter().enumerate() {
            let slot = run.slot_of_cell[r];
            add_scaled(h_d.grad.row_mut(0), run.phi.row(slot), g);
            add_scaled(d_phi.row_mut(slot), h_d.value.values(), g);
        }
        let table = descriptors.expect("forward already required descriptors");
        let rows_bits: Vec<&[usize]> = run.uniq_drugs.iter().map(|&i| table.bits(i)).collect();
        let mut d_act = d_phi.clone();
        for l in (0..params.deep_tower.len()).rev() {
            let d_pre = relu_backward(&run.pres[l], &d_act)?;
            let (w, bb) = &mut params.deep_tower[l];
            if l == 0 {
                multihot_affine_backward(w, bb, &rows_bits, &d_pre)?;
            } else {
                d_act = affine_backward(w, bb, &run.caches[l - 1], &d_pre)?;
            }
        }
    }

    if let Some(run) = fwd.shallow.as_ref() {
        let h_cf = params.h_cf.as_mut().expect("shallow kinds allocate h_CF");
        let mut d_act = Matrix::zeros(cells.len(), k);
        for (r, &g) in dlogit.iter().enumerate() {
            add_scaled(h_cf.grad.row_mut(0), run.out.row(r), g);
            add_scaled(d_act.row_mut(r), h_cf.value.values(), g);
        }
        for l in (0..params.shallow_tower.len()).rev() {
            let d_pre = relu_backward(&run.pres[l], &d_act)?;
            let (w, bb) = &mut params.shallow_tower[l];
            d_act = affine_backward(w, bb, &run.caches[l], &d_pre)?;
        }
        // d_act is now the gradient of [p_i; q_j] per cell.
        for (r, &(i, j)) in cells.iter().enumerate() {
            let row = d_act.row(r);
            add_scaled(params.latents.p.grad.row_mut(i), &row[..k], 1.0);
            add_scaled(params.latents.q.grad.row_mut(j), &row[k..], 1.0);
        }
    }

    if params.kind.uses_raw_inner_product() {
        for (r, &(i, j)) in cells.iter().enumerate() {
            let g = dlogit[r];
            let q_row: Vec<f64> = params.latents.q.value.row(j).to_vec();
            let p_row: Vec<f64> = params.latents.p.value.row(i).to_vec();
            add_scaled(params.latents.p.grad.row_mut(i), &q_row, g);
            add_scaled(params.latents.q.grad.row_mut(j), &p_row, g);
        }
    }
    Ok(())
}

/// Forward and backward over one labeled batch. Accumulates gradients into
/// the parameter blocks (without touching values) and returns the summed
/// binary cross-entropy of the batch as scored by the current parameters.
pub fn forward_backward(
    params: &mut ADRNetParams,
    batch: &[(usize, usize, u8)],
    descriptors: Option<&DescriptorTable>,
) -> Result<f64> {
    if batch.is_empty() {
        return Err(AdrnetError::Data("empty training batch".into()));
    }
    let cells: Vec<(usize, usize)> = batch.iter().map(|&(i, j, _)| (i, j)).collect();
    let ys: Vec<f64> = batch.iter().map(|&(_, _, y)| y as f64).collect();
    let fwd = batched_forward(params, &cells, descriptors)?;
    let loss = bce_loss(&fwd.y_hat, &ys)?;
    if !loss.is_finite() {
        let (i, j, _) = batch[0];
        return Err(AdrnetError::Numeric(format!(
            "non-finite loss {loss} for {} on a batch of {} cells (first cell ({i}, {j}))",
            params.kind.name(),
            batch.len()
        )));
    }
    let d_yhat = bce_backward(&fwd.y_hat, &ys)?;
    let dlogit: Vec<f64> = fwd
        .y_hat
        .iter()
        .zip(d_yhat.iter())
        .map(|(&p, &g)| sigmoid_backward(p, g))
        .collect();
    accumulate_grads(params, &cells, descriptors, &fwd, &dlogit)?;
    Ok(loss)
}

/// One optimizer step on a labeled batch: zero gradients, accumulate the
/// batch gradient, then one Adam update per allocated block. Returns the
/// batch loss measured before the update.
pub fn train_step(
    params: &mut ADRNetParams,
    batch: &[(usize, usize, u8)],
    descriptors: Option<&DescriptorTable>,
    adam: &AdamConfig,
) -> Result<f64> {
    adam.validate()?;
    params.zero_grads();
    let loss = forward_backward(params, batch, descriptors)?;
    for block in params.blocks_mut() {
        adam_step(block, adam)?;
    }
    Ok(loss)
}

/// Adapter exposing a (model, batch) pair to the finite-difference checker.
pub struct ModelGradTarget<'a> {
    pub params: &'a mut ADRNetParams,
    pub batch: &'a [(usize, usize, u8)],
    pub descriptors: Option<&'a DescriptorTable>,
}

impl GradCheckTarget for ModelGradTarget<'_> {
    fn param_count(&self) -> usize {
        self.params.block_count()
    }

    fn param_mut(&mut self, idx: usize) -> &mut ParamBlock {
        self.params
            .blocks_mut()
            .into_iter()
            .nth(idx)
            .expect("block index within block_count")
    }

    fn loss(&mut self) -> Result<f64> {
        let cells: Vec<(usize, usize)> = self.batch.iter().map(|&(i, j, _)| (i, j)).collect();
        let ys: Vec<f64> = self.batch.iter().map(|&(_, _, y)| y as f64).collect();
        let y_hat = score_cells(self.params, &cells, self.descriptors)?;
        bce_loss(&y_hat, &ys)
    }

    fn backward(&mut self) -> Result<()> {
        self.params.zero_grads();
        forward_backward(self.params, self.batch, self.descriptors)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::tests::{small_config, small_table};
    use crate::models::{build_model, mf_predict, predict, ModelConfig, ModelKind};
    use crate::neural::gradcheck::grad_check;
    use crate::neural::init::InitScheme;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn labeled_batch(m: usize, n: usize, seed: u64) -> Vec<(usize, usize, u8)> {
        let mut r = rng(seed);
        let mut batch = Vec::new();
        for i in 0..m {
            for j in 0..n {
                batch.push((i, j, r.gen_bool(0.3) as u8));
            }
        }
        batch
    }

    /// Finite differences disagree with the ReLU subgradient exactly at a
    /// kink, and zero-initialised biases can park a dead row there (an
    /// all-negative layer makes the next pre-activation equal its bias).
    /// Jittering biases moves the check to a generic point.
    fn jitter_biases(params: &mut crate::models::ADRNetParams, seed: u64) {
        let mut r = rng(seed);
        for (_, b) in params
            .deep_tower
            .iter_mut()
            .chain(params.shallow_tower.iter_mut())
        {
            for v in b.value.values_mut() {
                *v = r.gen_range(0.05..0.25);
            }
        }
    }

    #[test]
    fn saturated_correct_batch_leaves_parameters_unchanged() {
        // sigma(40) rounds to 1.0, which the loss clamp maps into its flat
        // region: loss ~ 0, gradient exactly 0, Adam moves nothing.
        let cfg = small_config(ModelKind::Mf, 1, 0);
        let mut params = build_model(&cfg, 1, 1, &mut rng(0)).unwrap();
        params.latents.p.value.set(0, 0, 40.0);
        params.latents.q.value.set(0, 0, 1.0);
        let before = params.clone();
        let adam = AdamConfig::default();
        let loss = train_step(&mut params, &[(0, 0, 1)], None, &adam).unwrap();
        assert!(loss.abs() < 1e-9, "loss {loss}");
        assert_eq!(params.latents.p.value, before.latents.p.value);
        assert_eq!(params.latents.q.value, before.latents.q.value);
    }

    #[test]
    fn train_step_returns_pre_update_loss() {
        let cfg = small_config(ModelKind::Gmf, 3, 0);
        let mut params = build_model(&cfg, 4, 5, &mut rng(1)).unwrap();
        let batch = labeled_batch(4, 5, 2);
        let cells: Vec<(usize, usize)> = batch.iter().map(|&(i, j, _)| (i, j)).collect();
        let ys: Vec<f64> = batch.iter().map(|&(_, _, y)| y as f64).collect();
        let expected = bce_loss(&score_cells(&params, &cells, None).unwrap(), &ys).unwrap();
        let reported = train_step(&mut params, &batch, None, &AdamConfig::default()).unwrap();
        assert_eq!(reported, expected);
    }

    #[test]
    fn fifty_repeated_steps_do_not_increase_the_loss() {
        let cfg = small_config(ModelKind::Adrnet, 3, 8);
        let table = small_table(4, 8, 3);
        let mut params = build_model(&cfg, 4, 5, &mut rng(4)).unwrap();
        let batch = labeled_batch(4, 5, 5);
        let adam = AdamConfig {
            learning_rate: 0.001,
            ..AdamConfig::default()
        };
        let mut losses = Vec::new();
        for _ in 0..50 {
            losses.push(train_step(&mut params, &batch, Some(&table), &adam).unwrap());
        }
        for pair in losses.windows(2) {
            assert!(
                pair[1] <= pair[0] + 1e-9,
                "loss increased: {} -> {}",
                pair[0],
                pair[1]
            );
        }
        assert!(losses.last().unwrap() < &losses[0]);
    }

    #[test]
    fn shared_q_gradient_equals_sum_of_split_copies() {
        let cfg = small_config(ModelKind::Adrnet, 4, 10);
        let table = small_table(5, 10, 6);
        let mut shared = build_model(&cfg, 5, 6, &mut rng(7)).unwrap();
        let mut split = shared.tied_noshare_twin().unwrap();
        let batch = labeled_batch(5, 6, 8);

        shared.zero_grads();
        forward_backward(&mut shared, &batch, Some(&table)).unwrap();
        split.zero_grads();
        forward_backward(&mut split, &batch, Some(&table)).unwrap();

        let q_alt = split.latents.q_alt.as_ref().unwrap();
        for idx in 0..shared.latents.q.grad.len() {
            let fused = shared.latents.q.grad.values()[idx];
            let summed = split.latents.q.grad.values()[idx] + q_alt.grad.values()[idx];
            assert!(
                (fused - summed).abs() < 1e-12,
                "entry {idx}: {fused} vs {summed}"
            );
        }
    }

    #[test]
    fn batched_scores_match_per_cell_predict() {
        let table = small_table(5, 10, 9);
        for kind in [
            ModelKind::Mf,
            ModelKind::Gmf,
            ModelKind::MlpCf,
            ModelKind::Nmf,
            ModelKind::Adrnet,
            ModelKind::AdrnetNoshare,
        ] {
            let cfg = small_config(kind, 4, 10);
            let params = build_model(&cfg, 5, 6, &mut rng(10)).unwrap();
            let cells: Vec<(usize, usize)> =
                (0..5).flat_map(|i| (0..6).map(move |j| (i, j))).collect();
            let batched = score_cells(&params, &cells, Some(&table)).unwrap();
            for (&(i, j), &score) in cells.iter().zip(batched.iter()) {
                let single = predict(&params, i, j, Some(&table)).unwrap();
                assert!(
                    (single - score).abs() < 1e-12,
                    "{} cell ({i},{j}): {single} vs {score}",
                    kind.name()
                );
            }
        }
    }

    #[test]
    fn mf_gradient_matches_closed_form() {
        // For one cell, d loss / d p_i = (sigma(p q) - y) q.
        let cfg = small_config(ModelKind::Mf, 3, 0);
        let mut params = build_model(&cfg, 2, 2, &mut rng(11)).unwrap();
        let (i, j, y) = (1, 0, 1u8);
        params.zero_grads();
        forward_backward(&mut params, &[(i, j, y)], None).unwrap();
        let y_hat = mf_predict(&params, i, j).unwrap();
        for kk in 0..3 {
            let expect_p = (y_hat - y as f64) * params.latents.q.value.get(j, kk);
            let expect_q = (y_hat - y as f64) * params.latents.p.value.get(i, kk);
            assert!((params.latents.p.grad.get(i, kk) - expect_p).abs() < 1e-12);
            assert!((params.latents.q.grad.get(j, kk) - expect_q).abs() < 1e-12);
        }
    }

    #[test]
    fn full_model_gradient_passes_finite_difference_check() {
        let cfg = ModelConfig {
            kind: ModelKind::Adrnet,
            k: 3,
            deep_widths: vec![8, 5, 3],
            shallow_widths: vec![6, 3],
            descriptor_dim: 8,
            init: InitScheme::UniformScaled,
            seed: 0,
        };
        let table = small_table(4, 8, 12);
        let mut params = build_model(&cfg, 4, 4, &mut rng(13)).unwrap();
        jitter_biases(&mut params, 113);
        let batch = labeled_batch(4, 4, 14);
        let mut target = ModelGradTarget {
            params: &mut params,
            batch: &batch,
            descriptors: Some(&table),
        };
        let report = grad_check(&mut target, 1e-5).unwrap();
        assert!(
            report.max_rel_error < 1e-4,
            "max rel error {} at {:?}",
            report.max_rel_error,
            report.worst
        );
    }

    #[test]
    fn latent_only_gradients_pass_finite_difference_check() {
        for kind in [ModelKind::Mf, ModelKind::Gmf, ModelKind::MlpCf, ModelKind::Nmf] {
            let cfg = small_config(kind, 3, 0);
            let mut params = build_model(&cfg, 3, 4, &mut rng(15)).unwrap();
            jitter_biases(&mut params, 115);
            let batch = labeled_batch(3, 4, 16);
            let mut target = ModelGradTarget {
                params: &mut params,
                batch: &batch,
                descriptors: None,
            };
            let report = grad_check(&mut target, 1e-5).unwrap();
            assert!(
                report.max_rel_error < 1e-4,
                "{}: max rel error {}",
                kind.name(),
                report.max_rel_error
            );
        }
    }

    #[test]
    fn non_finite_forward_reports_batch_diagnostics() {
        let cfg = small_config(ModelKind::Mf, 2, 0);
        let mut params = build_model(&cfg, 2, 2, &mut rng(17)).unwrap();
        params.latents.p.value.set(0, 0, f64::NAN);
        let err = train_step(&mut params, &[(0, 1, 1)], None, &AdamConfig::default()).unwrap_err();
        assert!(matches!(err, AdrnetError::Numeric(_)), "{err}");
        assert!(err.to_string().contains("batch"), "{err}");
    }

    #[test]
    fn empty_batch_is_rejected() {
        let cfg = small_config(ModelKind::Mf, 2, 0);
        let mut params = build_model(&cfg, 2, 2, &mut rng(18)).unwrap();
        let err = train_step(&mut params, &[], None, &AdamConfig::default()).unwrap_err();
        assert!(matches!(err, AdrnetError::Data(_)));
    }

    #[test]
    fn descent_beats_constant_predictor_on_separable_labels() {
        // Labels follow a planted rank-1 structure; a trained MF must beat
        // the base-rate loss that a constant predictor would achieve.
        let mut r = rng(19);
        let (m, n) = (6, 8);
        let mut batch = Vec::new();
        for i in 0..m {
            for j in 0..n {
                batch.push((i, j, ((i + j) % 2 == 0) as u8));
            }
        }
        let cfg = small_config(ModelKind::Mf, 4, 0);
        let mut params = build_model(&cfg, m, n, &mut r).unwrap();
        let adam = AdamConfig {
            learning_rate: 0.05,
            ..AdamConfig::default()
        };
        let mut last = f64::INFINITY;
        for _ in 0..200 {
            last = train_step(&mut params, &batch, None, &adam).unwrap();
        }
        let base_rate_loss = (m * n) as f64 * f64::ln(2.0);
        assert!(
            last < 0.2 * base_rate_loss,
            "final loss {last} vs constant-predictor loss {base_rate_loss}"
        );
    }
}
