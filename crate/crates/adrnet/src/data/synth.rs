//! Synthetic interaction data with planted low-rank structure and
//! descriptor-correlated signal, for end-to-end recovery checks.
//!
//! Labels are Bernoulli draws from σ(p*ᵀq* + β), where β is found by
//! bisection so the mean probability hits the requested positive rate. The
//! `noise` field mixes that probability toward the base rate:
//! prob = (1 − noise)·σ(score) + noise·positive_rate, which blurs the signal
//! while keeping the marginal rate fixed. Descriptor bit b of drug i is
//! [w_b · p*_i > 0] for a random hyperplane w_b, independently replaced by a
//! fair coin with probability (1 − descriptor_informativeness).
//!
//! Factor entries have unit marginal variance; only the shape of their
//! distribution is structured. Drug factors are drawn around a small set of
//! prototypes (drug families, dealt balanced sizes), p*_i = a·c_{z_i} + b·ε_i
//! with a² + b² = 1. Families are what make the descriptors worth reading:
//! family members share most hyperplane bits, so a descriptor model can pool
//! their labels, while a pure latent factorization must estimate every drug
//! from its own row alone. Reaction factors are a row-level scale mixture: a
//! fixed share of strong rows yields columns crisp enough to recover from
//! one Bernoulli label per cell, which sets how close a trained model can
//! get to the planted scores at desk scale.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::data::dataset::InteractionDataset;
use crate::data::descriptors::DescriptorTable;
use crate::error::{AdrnetError, Result};
use crate::neural::matrix::Matrix;
use crate::neural::ops::sigmoid;

/// Number of drug-family prototypes in `synth_generate`.
pub const DRUG_CLUSTERS: usize = 12;

/// Within-family standard deviation of drug factors; the prototype mixing
/// weight is √(1 − spread²) so each factor entry keeps unit variance.
pub const FAMILY_SPREAD: f64 = 0.05;

/// A fixed CRISP_SHARE of reaction rows get row scale CRISP_HI (strong,
/// nearly deterministic columns), the rest a narrow scale topping entry
/// variance up to 1. Strong columns are what a learner can pin down from
/// ninety-odd labels each.
const CRISP_SHARE: f64 = 0.25;
const CRISP_HI: f64 = 1.7;

/// Draws `count` distinct indices from 0..size, uniformly.
fn sample_indices(rng: &mut ChaCha8Rng, size: usize, count: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..size).collect();
    for pick in 0..count.min(size) {
        let swap = rng.gen_range(pick..size);
        idx.swap(pick, swap);
    }
    idx.truncate(count.min(size));
    idx
}

/// Row-scale-mixture matrix with an exact CRISP_SHARE of strong rows and
/// unit entry variance.
fn crisp_row_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    let n_crisp = ((CRISP_SHARE * rows as f64).round() as usize).min(rows);
    let frac = n_crisp as f64 / rows as f64;
    let lo = if n_crisp == rows {
        1.0
    } else {
        ((1.0 - frac * CRISP_HI * CRISP_HI) / (1.0 - frac)).sqrt()
    };
    let crisp_rows = sample_indices(rng, rows, n_crisp);
    let mut m = Matrix::zeros(rows, cols);
    for j in 0..rows {
        let scale = if crisp_rows.contains(&j) { CRISP_HI } else { lo };
        for k in 0..cols {
            m.set(j, k, scale * rng.sample::<f64, _>(StandardNormal));
        }
    }
    m
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub m: usize,
    pub n: usize,
    pub k_true: usize,
    pub d: usize,
    pub noise: f64,
    pub descriptor_informativeness: f64,
    pub positive_rate: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 || self.k_true == 0 || self.d == 0 {
            return Err(AdrnetError::Config(format!(
                "synthetic spec requires positive sizes, got m={} n={} k_true={} d={}",
                self.m, self.n, self.k_true, self.d
            )));
        }
        if !(0.0..1.0).contains(&self.noise) {
            return Err(AdrnetError::Config(format!(
                "noise {} outside [0,1)",
                self.noise
            )));
        }
        if !(0.0..=1.0).contains(&self.descriptor_informativeness) {
            return Err(AdrnetError::Config(format!(
                "descriptor informativeness {} outside [0,1]",
                self.descriptor_informativeness
            )));
        }
        if !(self.positive_rate > 0.0 && self.positive_rate < 1.0) {
            return Err(AdrnetError::Config(format!(
                "positive rate {} outside (0,1)",
                self.positive_rate
            )));
        }
        Ok(())
    }
}

/// The planted factors: enough to reproduce every cell's Bayes score.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthFactors {
    /// M×K_true drug factors.
    pub p: Matrix,
    /// N×K_true reaction factors.
    pub q: Matrix,
    pub bias: f64,
}

impl GroundTruthFactors {
    /// Logit-scale Bayes score p*_i · q*_j + β.
    pub fn score(&self, drug: usize, adr: usize) -> f64 {
        let pk = self.p.row(drug);
        let qk = self.q.row(adr);
        let mut acc = self.bias;
        for (a, b) in pk.iter().zip(qk.iter()) {
            acc = a.mul_add(*b, acc);
        }
        acc
    }
}

/// Factors plus the descriptor hyperplanes (D×K_true), kept in memory for
/// diagnostics; only the factors go to the sidecar file.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticTruth {
    pub factors: GroundTruthFactors,
    pub hyperplanes: Matrix,
}

fn normal_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    let values = (0..rows * cols)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect();
    Matrix::from_vec(rows, cols, values).expect("length matches by construction")
}

/// Bisects β so that mean σ(score + β) lands within 1e-3 of `target`.
fn find_bias(scores: &[f64], target: f64) -> Result<f64> {
    let mean_prob = |beta: f64| {
        scores.iter().map(|&s| sigmoid(s + beta)).sum::<f64>() / scores.len() as f64
    };
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = scores.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut lo = -max - 40.0;
    let mut hi = -min + 40.0;
    if mean_prob(lo) > target || mean_prob(hi) < target {
        return Err(AdrnetError::Config(format!(
            "bias search cannot bracket positive rate {target}"
        )));
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if mean_prob(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let bias = 0.5 * (lo + hi);
    let achieved = mean_prob(bias);
    if (achieved - target).abs() > 1e-3 {
        return Err(AdrnetError::Config(format!(
            "bias search reached rate {achieved}, target {target}"
        )));
    }
    Ok(bias)
}

/// Samples labels, descriptors, and ids given already-drawn factors,
/// consuming the provided stream for every random choice.
fn generate_given_factors(
    spec: &SyntheticSpec,
    p: Matrix,
    q: Matrix,
    rng: &mut ChaCha8Rng,
) -> Result<(InteractionDataset, DescriptorTable, SyntheticTruth)> {
    let (m, n) = (spec.m, spec.n);
    let mut scores = vec![0.0; m * n];
    for i in 0..m {
        for j in 0..n {
            let mut acc = 0.0;
            for (a, b) in p.row(i).iter().zip(q.row(j).iter()) {
                acc = a.mul_add(*b, acc);
            }
            scores[i * n + j] = acc;
        }
    }
    let bias = find_bias(&scores, spec.positive_rate)?;

    let prob = |flat: usize| {
        (1.0 - spec.noise) * sigmoid(scores[flat] + bias) + spec.noise * spec.positive_rate
    };
    let mut y: Vec<u8> = (0..m * n).map(|c| u8::from(rng.gen::<f64>() < prob(c))).collect();

    // Guarantee no empty row or column so the matrix shape survives a
    // save/load round trip of the pair format: force the most probable cell
    // of any empty line to 1 (deterministic argmax, earliest index on ties).
    for i in 0..m {
        if y[i * n..(i + 1) * n].iter().all(|&v| v == 0) {
            let best = (0..n)
                .max_by(|&a, &b| prob(i * n + a).total_cmp(&prob(i * n + b)))
                .expect("n > 0");
            y[i * n + best] = 1;
        }
    }
    for j in 0..n {
        if (0..m).all(|i| y[i * n + j] == 0) {
            let best = (0..m)
                .max_by(|&a, &b| prob(a * n + j).total_cmp(&prob(b * n + j)))
                .expect("m > 0");
            y[best * n + j] = 1;
        }
    }

    let hyperplanes = normal_matrix(rng, spec.d, spec.k_true);
    let mut rows: Vec<Vec<usize>> = Vec::with_capacity(m);
    for i in 0..m {
        let mut bits = Vec::new();
        for b in 0..spec.d {
            let mut proj = 0.0;
            for (w, x) in hyperplanes.row(b).iter().zip(p.row(i).iter()) {
                proj = w.mul_add(*x, proj);
            }
            let mut bit = proj > 0.0;
            if rng.gen::<f64>() < 1.0 - spec.descriptor_informativeness {
                bit = rng.gen::<bool>();
            }
            if bit {
                bits.push(b);
            }
        }
        rows.push(bits);
    }

    let drug_ids: Vec<String> = (0..m).map(|i| format!("drug_{i:05}")).collect();
    let adr_ids: Vec<String> = (0..n).map(|j| format!("adr_{j:05}")).collect();
    let ds = InteractionDataset::new(drug_ids.clone(), adr_ids, y)?;
    let table = DescriptorTable::new(drug_ids, vec![spec.d], rows)?;
    let truth = SyntheticTruth {
        factors: GroundTruthFactors { p, q, bias },
        hyperplanes,
    };
    Ok((ds, table, truth))
}

/// Draws unit-variance factors (clustered drug side, i.i.d. reaction side)
/// and generates a dataset.
pub fn synth_generate(
    spec: &SyntheticSpec,
) -> Result<(InteractionDataset, DescriptorTable, SyntheticTruth)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let prototypes = normal_matrix(&mut rng, DRUG_CLUSTERS, spec.k_true);
    let proto_weight = (1.0 - FAMILY_SPREAD * FAMILY_SPREAD).sqrt();
    // Balanced family sizes: a shuffled deal, so no family is starved of
    // members by assignment luck.
    let deal = sample_indices(&mut rng, spec.m, spec.m);
    let mut family_of = vec![0usize; spec.m];
    for (pos, &drug) in deal.iter().enumerate() {
        family_of[drug] = pos % DRUG_CLUSTERS;
    }
    let mut p = Matrix::zeros(spec.m, spec.k_true);
    for i in 0..spec.m {
        for k in 0..spec.k_true {
            let eps: f64 = rng.sample(StandardNormal);
            p.set(
                i,
                k,
                proto_weight * prototypes.get(family_of[i], k) + FAMILY_SPREAD * eps,
            );
        }
    }
    let q = crisp_row_matrix(&mut rng, spec.n, spec.k_true);
    generate_given_factors(spec, p, q, &mut rng)
}

/// Generates from caller-supplied factors (labels, descriptors, and the
/// bias search proceed as in `synth_generate`). Lets tests plant factor
/// structure the normal draw would not produce, such as strongly separated
/// clusters.
pub fn synth_from_factors(
    spec: &SyntheticSpec,
    p: Matrix,
    q: Matrix,
) -> Result<(InteractionDataset, DescriptorTable, SyntheticTruth)> {
    spec.validate()?;
    if p.rows() != spec.m || p.cols() != spec.k_true || q.rows() != spec.n || q.cols() != spec.k_true
    {
        return Err(AdrnetError::Dim(format!(
            "factor shapes {}x{} / {}x{} do not match spec {}x{} / {}x{}",
            p.rows(),
            p.cols(),
            q.rows(),
            q.cols(),
            spec.m,
            spec.k_true,
            spec.n,
            spec.k_true
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    generate_given_factors(spec, p, q, &mut rng)
}

/// Writes the factors sidecar: a bias line plus one
/// `drug/adr<TAB>index<TAB>k<TAB>value` triple per factor entry. Values use
/// the shortest f64 representation, which reparses to the identical bits.
pub fn save_ground_truth(factors: &GroundTruthFactors, path: &std::path::Path) -> Result<()> {
    use std::fmt::Write as _;
    let mut out = String::new();
    let _ = writeln!(out, "# planted factors; indices refer to generation order");
    let _ = writeln!(out, "bias={}", factors.bias);
    for i in 0..factors.p.rows() {
        for k in 0..factors.p.cols() {
            let _ = writeln!(out, "drug\t{i}\t{k}\t{}", factors.p.get(i, k));
        }
    }
    for j in 0..factors.q.rows() {
        for k in 0..factors.q.cols() {
            let _ = writeln!(out, "adr\t{j}\t{k}\t{}", factors.q.get(j, k));
        }
    }
    std::fs::write(path, out)
        .map_err(|e| AdrnetError::Io(format!("cannot write {}: {e}", path.display())))
}

pub fn load_ground_truth(path: &std::path::Path) -> Result<GroundTruthFactors> {
    let text = std::fs::read_to_string(path).map_err(|e| AdrnetError::Parse {
        path: path.display().to_string(),
        line: 0,
        msg: format!("cannot read file: {e}"),
    })?;
    let perr = |line: usize, msg: String| AdrnetError::Parse {
        path: path.display().to_string(),
        line,
        msg,
    };

    let mut bias: Option<f64> = None;
    let mut drug_entries: Vec<(usize, usize, f64)> = Vec::new();
    let mut adr_entries: Vec<(usize, usize, f64)> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        let lineno = lineno + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(value) = line.strip_prefix("bias=") {
            if bias.is_some() {
                return Err(perr(lineno, "duplicate bias line".into()));
            }
            bias = Some(
                value
                    .parse()
                    .map_err(|_| perr(lineno, format!("bad bias value {value:?}")))?,
            );
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(perr(
                lineno,
                format!("expected `drug/adr<TAB>index<TAB>k<TAB>value`, got {line:?}"),
            ));
        }
        let index: usize = fields[1]
            .parse()
            .map_err(|_| perr(lineno, format!("bad index {:?}", fields[1])))?;
        let k: usize = fields[2]
            .parse()
            .map_err(|_| perr(lineno, format!("bad factor column {:?}", fields[2])))?;
        let value: f64 = fields[3]
            .parse()
            .map_err(|_| perr(lineno, format!("bad value {:?}", fields[3])))?;
        match fields[0] {
            "drug" => drug_entries.push((index, k, value)),
            "adr" => adr_entries.push((index, k, value)),
            other => return Err(perr(lineno, format!("unknown record type {other:?}"))),
        }
    }

    let bias = bias.ok_or_else(|| AdrnetError::Data("ground truth missing bias line".into()))?;
    let build = |entries: &[(usize, usize, f64)], what: &str| -> Result<Matrix> {
        if entries.is_empty() {
            return Err(AdrnetError::Data(format!("ground truth has no {what} rows")));
        }
        let rows = entries.iter().map(|e| e.0).max().unwrap() + 1;
        let cols = entries.iter().map(|e| e.1).max().unwrap() + 1;
        let mut filled = vec![false; rows * cols];
        let mut m = Matrix::zeros(rows, cols);
        for &(i, k, v) in entries {
            if filled[i * cols + k] {
                return Err(AdrnetError::Data(format!(
                    "duplicate {what} factor entry ({i}, {k})"
                )));
            }
            filled[i * cols + k] = true;
            m.set(i, k, v);
        }
        if !filled.iter().all(|&f| f) {
            return Err(AdrnetError::Data(format!(
                "incomplete {what} factor grid ({rows}x{cols})"
            )));
        }
        Ok(m)
    };
    Ok(GroundTruthFactors {
        p: build(&drug_entries, "drug")?,
        q: build(&adr_entries, "adr")?,
        bias,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{auc, ScoredLabels};

    fn base_spec() -> SyntheticSpec {
        SyntheticSpec {
            m: 30,
            n: 40,
            k_true: 4,
            d: 16,
            noise: 0.0,
            descriptor_informativeness: 1.0,
            positive_rate: 0.2,
            seed: 7,
        }
    }

    #[test]
    fn spec_validation_rejects_bad_fields() {
        let mut s = base_spec();
        s.m = 0;
        assert!(s.validate().is_err());
        let mut s = base_spec();
        s.noise = 1.0;
        assert!(s.validate().is_err());
        let mut s = base_spec();
        s.descriptor_informativeness = 1.1;
        assert!(s.validate().is_err());
        let mut s = base_spec();
        s.positive_rate = 0.0;
        assert!(s.validate().is_err());
        let mut s = base_spec();
        s.positive_rate = 1.0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn generation_is_deterministic_per_seed() {
        let spec = base_spec();
        let (ds1, t1, gt1) = synth_generate(&spec).unwrap();
        let (ds2, t2, gt2) = synth_generate(&spec).unwrap();
        assert_eq!(ds1, ds2);
        assert_eq!(t1, t2);
        assert_eq!(gt1, gt2);
        let other = SyntheticSpec {
            seed: 8,
            ..base_spec()
        };
        let (ds3, _, _) = synth_generate(&other).unwrap();
        assert_ne!(ds1, ds3);
    }

    #[test]
    fn full_informativeness_bits_are_hyperplane_signs() {
        let spec = base_spec();
        let (_, table, truth) = synth_generate(&spec).unwrap();
        for i in 0..spec.m {
            for b in 0..spec.d {
                let mut proj = 0.0;
                for (w, x) in truth
                    .hyperplanes
                    .row(b)
                    .iter()
                    .zip(truth.factors.p.row(i).iter())
                {
                    proj += w * x;
                }
                let expect = proj > 0.0;
                let got = table.bits(i).contains(&b);
                assert_eq!(got, expect, "drug {i} bit {b}");
            }
        }
    }

    #[test]
    fn factor_entries_have_unit_marginal_variance() {
        let spec = SyntheticSpec {
            m: 400,
            n: 400,
            k_true: 6,
            ..base_spec()
        };
        let (_, _, truth) = synth_generate(&spec).unwrap();
        let second_moment = |m: &Matrix| {
            m.values().iter().map(|v| v * v).sum::<f64>() / m.values().len() as f64
        };
        // Drug rows share family prototypes, so their sample variance has
        // heavier tails than an i.i.d. draw; the tolerance reflects that.
        let pv = second_moment(&truth.factors.p);
        let qv = second_moment(&truth.factors.q);
        assert!((pv - 1.0).abs() < 0.35, "drug factor variance {pv}");
        assert!((qv - 1.0).abs() < 0.10, "reaction factor variance {qv}");
    }

    #[test]
    fn drug_factors_form_families() {
        // Nearest-neighbour distance within the drug rows should be far
        // smaller than for the i.i.d. reaction rows: family members differ
        // only by the within-family spread.
        let spec = SyntheticSpec {
            m: 60,
            n: 60,
            k_true: 8,
            ..base_spec()
        };
        let (_, _, truth) = synth_generate(&spec).unwrap();
        let mean_nn = |m: &Matrix| {
            let mut total = 0.0;
            for i in 0..m.rows() {
                let mut best = f64::INFINITY;
                for j in 0..m.rows() {
                    if i == j {
                        continue;
                    }
                    let d2: f64 = m
                        .row(i)
                        .iter()
                        .zip(m.row(j).iter())
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum();
                    best = best.min(d2.sqrt());
                }
                total += best;
            }
            total / m.rows() as f64
        };
        let drug_nn = mean_nn(&truth.factors.p);
        let adr_nn = mean_nn(&truth.factors.q);
        assert!(
            drug_nn < 0.5 * adr_nn,
            "drug nn {drug_nn} vs reaction nn {adr_nn}"
        );
    }

    #[test]
    fn zero_informativeness_bits_are_fair_coins() {
        let spec = SyntheticSpec {
            m: 50,
            d: 64,
            descriptor_informativeness: 0.0,
            ..base_spec()
        };
        let (_, table, _) = synth_generate(&spec).unwrap();
        let active: usize = (0..spec.m).map(|i| table.bits(i).len()).sum();
        let frac = active as f64 / (spec.m * spec.d) as f64;
        assert!((frac - 0.5).abs() < 0.03, "active fraction {frac}");
    }

    #[test]
    fn bias_hits_requested_rate() {
        let spec = base_spec();
        let (_, _, truth) = synth_generate(&spec).unwrap();
        let mut mean = 0.0;
        for i in 0..spec.m {
            for j in 0..spec.n {
                mean += sigmoid(truth.factors.score(i, j));
            }
        }
        mean /= (spec.m * spec.n) as f64;
        assert!(
            (mean - spec.positive_rate).abs() <= 1e-3,
            "mean prob {mean}"
        );
    }

    #[test]
    fn realized_rate_close_to_target_at_scale() {
        let spec = SyntheticSpec {
            m: 100,
            n: 150,
            k_true: 8,
            d: 32,
            noise: 0.0,
            descriptor_informativeness: 1.0,
            positive_rate: 0.05,
            seed: 11,
        };
        let (ds, _, _) = synth_generate(&spec).unwrap();
        let realized = ds.interaction_count() as f64 / (spec.m * spec.n) as f64;
        assert!((realized - 0.05).abs() < 0.01, "realized rate {realized}");
    }

    #[test]
    fn no_empty_rows_or_columns() {
        let spec = SyntheticSpec {
            m: 12,
            n: 9,
            positive_rate: 0.03,
            ..base_spec()
        };
        let (ds, _, _) = synth_generate(&spec).unwrap();
        for i in 0..ds.n_drugs() {
            assert!(ds.drug_degree(i) >= 1, "drug {i} empty");
        }
        for j in 0..ds.n_adrs() {
            assert!(ds.adr_degree(j) >= 1, "reaction {j} empty");
        }
    }

    #[test]
    fn separable_rank_one_factors_give_high_bayes_auc() {
        // Rank-1 instance with well separated score clusters: the planted
        // probabilities sit near 0 or 1, so scoring cells by the generator's
        // own logits nearly reproduces the labels.
        let spec = SyntheticSpec {
            m: 100,
            n: 150,
            k_true: 1,
            d: 16,
            noise: 0.0,
            descriptor_informativeness: 1.0,
            positive_rate: 0.1,
            seed: 5,
        };
        // High-score cluster mass equals the positive rate: all drugs sit at
        // +4, a tenth of reactions at +4 and the rest at -4, so planted
        // probabilities land near 1 on agreeing pairs and near 0 elsewhere.
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let jitter = |rng: &mut ChaCha8Rng| 0.1 * rng.sample::<f64, _>(StandardNormal);
        let p_vals: Vec<f64> = (0..spec.m).map(|_| 4.0 + jitter(&mut rng)).collect();
        let q_vals: Vec<f64> = (0..spec.n)
            .map(|_| {
                let sign = if rng.gen::<f64>() < spec.positive_rate {
                    4.0
                } else {
                    -4.0
                };
                sign + jitter(&mut rng)
            })
            .collect();
        let p = Matrix::from_vec(spec.m, 1, p_vals).unwrap();
        let q = Matrix::from_vec(spec.n, 1, q_vals).unwrap();
        let (ds, _, truth) = synth_from_factors(&spec, p, q).unwrap();

        let mut scores = Vec::new();
        let mut labels = Vec::new();
        for i in 0..spec.m {
            for j in 0..spec.n {
                scores.push(truth.factors.score(i, j));
                labels.push(ds.label(i, j));
            }
        }
        let bayes = auc(&ScoredLabels::new(scores, labels).unwrap()).unwrap();
        assert!(bayes >= 0.95, "bayes auc {bayes}");
    }

    #[test]
    fn ground_truth_sidecar_round_trips_exactly() {
        let spec = base_spec();
        let (_, _, truth) = synth_generate(&spec).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("truth.tsv");
        save_ground_truth(&truth.factors, &path).unwrap();
        let loaded = load_ground_truth(&path).unwrap();
        assert_eq!(truth.factors, loaded);
    }

    #[test]
    fn ground_truth_parse_errors_carry_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.tsv");
        std::fs::write(&path, "bias=0.5\ndrug\t0\t0\tnot_a_number\n").unwrap();
        match load_ground_truth(&path).unwrap_err() {
            AdrnetError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other}"),
        }

        std::fs::write(&path, "drug\t0\t0\t1.5\nadr\t0\t0\t0.25\n").unwrap();
        assert!(matches!(
            load_ground_truth(&path).unwrap_err(),
            AdrnetError::Data(_)
        ));
    }

    #[test]
    fn ground_truth_incomplete_grid_is_a_data_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("gap.tsv");
        // 2x2 drug grid missing entry (1,1).
        std::fs::write(
            &path,
            "bias=0\ndrug\t0\t0\t1\ndrug\t0\t1\t2\ndrug\t1\t0\t3\nadr\t0\t0\t1\n",
        )
        .unwrap();
        assert!(matches!(
            load_ground_truth(&path).unwrap_err(),
            AdrnetError::Data(_)
        ));
    }
}
