//! Model family: an asymmetric two-tower network over drug descriptors and
//! latent factors, plus the latent-only baselines it generalizes.
//!
//! Every kind scores a (drug, reaction) cell as σ(sum of its active logits):
//!
//! - `Mf`: inner product p_i·q_j.
//! - `Gmf`: weighted element-wise product h_DCF·(p_i ⊙ q_j).
//! - `MlpCf`: shallow tower over [p_i; q_j] with head h_CF.
//! - `Nmf`: MlpCf logit + Gmf logit.
//! - `Adrnet`: deep descriptor tower logit + shallow tower logit + a
//!   drug-CF logit h_DCF·(φ_i ⊙ q_j), where φ_i is the tower's drug
//!   representation and q_j is the same storage the shallow tower reads.
//! - `AdrnetNoshare`: ablation with an independent Q_alt feeding the
//!   drug-CF head.
//!
//! The logit sum equals one fully connected layer over the concatenated
//! parts, since the concatenated head weights are exactly [h_D; h_CF; h_DCF].

pub mod train;

use rand_chacha::ChaCha8Rng;

use crate::data::descriptors::DescriptorTable;
use crate::error::{AdrnetError, Result};
use crate::neural::init::{init_params, InitScheme};
use crate::neural::matrix::Matrix;
use crate::neural::ops::{affine_forward, multihot_affine_forward, relu, sigmoid};
use crate::neural::ParamBlock;

pub use train::{forward_backward, score_cells, train_step, ModelGradTarget};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Mf,
    Gmf,
    MlpCf,
    Nmf,
    Adrnet,
    AdrnetNoshare,
}

impl ModelKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "mf" => Ok(Self::Mf),
            "gmf" => Ok(Self::Gmf),
            "mlp_cf" => Ok(Self::MlpCf),
            "nmf" => Ok(Self::Nmf),
            "adrnet" => Ok(Self::Adrnet),
            "adrnet_noshare" => Ok(Self::AdrnetNoshare),
            other => Err(AdrnetError::Config(format!(
                "unknown model kind {other:?} (expected mf, gmf, mlp_cf, nmf, adrnet, adrnet_noshare)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Mf => "mf",
            Self::Gmf => "gmf",
            Self::MlpCf => "mlp_cf",
            Self::Nmf => "nmf",
            Self::Adrnet => "adrnet",
            Self::AdrnetNoshare => "adrnet_noshare",
        }
    }

    /// Deep descriptor tower present.
    pub fn uses_deep(&self) -> bool {
        matches!(self, Self::Adrnet | Self::AdrnetNoshare)
    }

    /// Shallow latent tower present.
    pub fn uses_shallow(&self) -> bool {
        matches!(self, Self::MlpCf | Self::Nmf | Self::Adrnet | Self::AdrnetNoshare)
    }

    /// Element-wise-product head present.
    pub fn uses_dcf(&self) -> bool {
        matches!(self, Self::Gmf | Self::Nmf | Self::Adrnet | Self::AdrnetNoshare)
    }

    /// Whether the product head consumes the tower representation φ_i
    /// (otherwise it consumes the latent row p_i).
    pub fn dcf_reads_phi(&self) -> bool {
        self.uses_deep()
    }

    /// Whether the product head reads reaction embeddings from Q_alt
    /// instead of the shared Q.
    pub fn dcf_reads_q_alt(&self) -> bool {
        matches!(self, Self::AdrnetNoshare)
    }

    pub fn uses_raw_inner_product(&self) -> bool {
        matches!(self, Self::Mf)
    }
}

/// Latent factor storage. For `Adrnet` the same `q` block backs both the
/// shallow tower and the product head, so its gradient buffer accumulates
/// both paths; `q_alt` exists only for `AdrnetNoshare`.
#[derive(Debug, Clone)]
pub struct LatentFactors {
    pub p: ParamBlock,
    pub q: ParamBlock,
    pub q_alt: Option<ParamBlock>,
}

/// Full parameter set for one model instance. Tower lists hold (weights,
/// bias) pairs; absent parts are empty or `None` depending on the kind.
#[derive(Debug, Clone)]
pub struct ADRNetParams {
    pub kind: ModelKind,
    pub k: usize,
    pub descriptor_dim: usize,
    pub latents: LatentFactors,
    pub deep_tower: Vec<(ParamBlock, ParamBlock)>,
    pub shallow_tower: Vec<(ParamBlock, ParamBlock)>,
    pub h_d: Option<ParamBlock>,
    pub h_cf: Option<ParamBlock>,
    pub h_dcf: Option<ParamBlock>,
}

impl ADRNetParams {
    pub fn n_drugs(&self) -> usize {
        self.latents.p.value.rows()
    }

    pub fn n_adrs(&self) -> usize {
        self.latents.q.value.rows()
    }

    /// Every allocated block, in a fixed order (latents, towers, heads).
    pub fn blocks_mut(&mut self) -> Vec<&mut ParamBlock> {
        let mut blocks: Vec<&mut ParamBlock> = vec![&mut self.latents.p, &mut self.latents.q];
        if let Some(q_alt) = self.latents.q_alt.as_mut() {
            blocks.push(q_alt);
        }
        for (w, b) in self.deep_tower.iter_mut().chain(self.shallow_tower.iter_mut()) {
            blocks.push(w);
            blocks.push(b);
        }
        for head in [self.h_d.as_mut(), self.h_cf.as_mut(), self.h_dcf.as_mut()]
            .into_iter()
            .flatten()
        {
            blocks.push(head);
        }
        blocks
    }

    /// Number of allocated blocks; indexes agree with `blocks_mut` order.
    pub fn block_count(&self) -> usize {
        2 + self.latents.q_alt.is_some() as usize
            + 2 * (self.deep_tower.len() + self.shallow_tower.len())
            + self.h_d.is_some() as usize
            + self.h_cf.is_some() as usize
            + self.h_dcf.is_some() as usize
    }

    pub fn zero_grads(&mut self) {
        for block in self.blocks_mut() {
            block.zero_grad();
        }
    }

    /// Shared-to-split ablation twin: same values, kind flipped to
    /// `AdrnetNoshare`, with `q_alt` cloned from `q` so both heads start
    /// from identical reaction embeddings.
    pub fn tied_noshare_twin(&self) -> Result<ADRNetParams> {
        if self.kind != ModelKind::Adrnet {
            return Err(AdrnetError::Config(format!(
                "tied twin requires an adrnet instance, got {}",
                self.kind.name()
            )));
        }
        let mut twin = self.clone();
        twin.kind = ModelKind::AdrnetNoshare;
        let mut q_alt = self.latents.q.clone();
        q_alt.name = "Q_alt".into();
        twin.latents.q_alt = Some(q_alt);
        Ok(twin)
    }

    fn check_cell(&self, drug: usize, adr: usize) -> Result<()> {
        if drug >= self.n_drugs() || adr >= self.n_adrs() {
            return Err(AdrnetError::Dim(format!(
                "cell ({drug}, {adr}) outside {}x{} matrix",
                self.n_drugs(),
                self.n_adrs()
            )));
        }
        Ok(())
    }
}

/// Construction-time description of one model instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub k: usize,
    /// Deep tower widths including input and output: [D, d1, ..., K].
    /// Empty for kinds without the descriptor tower.
    pub deep_widths: Vec<usize>,
    /// Shallow tower widths including input and output: [2K, s1, ..., K].
    /// Empty for kinds without the latent tower.
    pub shallow_widths: Vec<usize>,
    pub descriptor_dim: usize,
    pub init: InitScheme,
    pub seed: u64,
}

impl ModelConfig {
    /// Sensible widths per kind: deep [D, 512, 128, K] with hidden layers
    /// trimmed to fit between D and K (at least one always remains, so the
    /// deep tower stays deeper than the shallow one), shallow [2K, K].
    pub fn defaults(kind: ModelKind, k: usize, descriptor_dim: usize, seed: u64) -> Self {
        let deep_widths = if kind.uses_deep() {
            let mut widths = vec![descriptor_dim];
            for w in [512usize, 128] {
                if w < descriptor_dim && w > k {
                    widths.push(w);
                }
            }
            if widths.len() == 1 {
                widths.push(((descriptor_dim + k + 1) / 2).max(1));
            }
            widths.push(k);
            widths
        } else {
            Vec::new()
        };
        let shallow_widths = if kind.uses_shallow() {
            vec![2 * k, k]
        } else {
            Vec::new()
        };
        Self {
            kind,
            k,
            deep_widths,
            shallow_widths,
            descriptor_dim: if kind.uses_deep() { descriptor_dim } else { 0 },
            init: InitScheme::UniformScaled,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(AdrnetError::Config("embedding size must be positive".into()));
        }
        if self.kind.uses_deep() {
            if self.descriptor_dim == 0 {
                return Err(AdrnetError::Config(format!(
                    "{} needs a positive descriptor dimension",
                    self.kind.name()
                )));
            }
            if self.deep_widths.len() < 2 {
                return Err(AdrnetError::Config(
                    "deep tower needs at least input and output widths".into(),
                ));
            }
            if self.deep_widths[0] != self.descriptor_dim {
                return Err(AdrnetError::Config(format!(
                    "deep tower input width {} must equal descriptor dimension {}",
                    self.deep_widths[0], self.descriptor_dim
                )));
            }
            if *self.deep_widths.last().unwrap() != self.k {
                return Err(AdrnetError::Config(format!(
                    "deep tower output width {} must equal embedding size {}",
                    self.deep_widths.last().unwrap(),
                    self.k
                )));
            }
        } else if !self.deep_widths.is_empty() {
            return Err(AdrnetError::Config(format!(
                "{} does not use a deep tower but widths were given",
                self.kind.name()
            )));
        }
        if self.kind.uses_shallow() {
            if self.shallow_widths.len() < 2 {
                return Err(AdrnetError::Config(
                    "shallow tower needs at least input and output widths".into(),
                ));
            }
            if self.shallow_widths[0] != 2 * self.k {
                return Err(AdrnetError::Config(format!(
                    "shallow tower input width {} must equal twice the embedding size ({})",
                    self.shallow_widths[0],
                    2 * self.k
                )));
            }
            if *self.shallow_widths.last().unwrap() != self.k {
                return Err(AdrnetError::Config(format!(
                    "shallow tower output width {} must equal embedding size {}",
                    self.shallow_widths.last().unwrap(),
                    self.k
                )));
            }
        } else if !self.shallow_widths.is_empty() {
            return Err(AdrnetError::Config(format!(
                "{} does not use a shallow tower but widths were given",
                self.kind.name()
            )));
        }
        if self.kind.uses_deep() {
            let deep_depth = self.deep_widths.len() - 1;
            let shallow_depth = self.shallow_widths.len() - 1;
            if deep_depth <= shallow_depth {
                return Err(AdrnetError::Config(format!(
                    "deep tower depth {deep_depth} must exceed shallow depth {shallow_depth}"
                )));
            }
        }
        if self
            .deep_widths
            .iter()
            .chain(self.shallow_widths.iter())
            .any(|&w| w == 0)
        {
            return Err(AdrnetError::Config("tower widths must be positive".into()));
        }
        Ok(())
    }
}

/// Allocates and initializes every block the kind uses. Draw order is fixed
/// (P, Q, Q_alt, deep pairs, shallow pairs, heads), so a given (config, rng
/// state) always yields the same parameters.
pub fn build_model(
    cfg: &ModelConfig,
    m: usize,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Result<ADRNetParams> {
    cfg.validate()?;
    if m == 0 || n == 0 {
        return Err(AdrnetError::Config(format!(
            "model needs positive matrix sizes, got {m}x{n}"
        )));
    }
    let k = cfg.k;
    let p = init_params("P", m, k, cfg.init, rng);
    let q = init_params("Q", n, k, cfg.init, rng);
    let q_alt = cfg
        .kind
        .dcf_reads_q_alt()
        .then(|| init_params("Q_alt", n, k, cfg.init, rng));

    let mut tower = |widths: &[usize], prefix: &str| -> Vec<(ParamBlock, ParamBlock)> {
        widths
            .windows(2)
            .enumerate()
            .map(|(l, pair)| {
                let w = init_params(&format!("{prefix}.W{}", l + 1), pair[0], pair[1], cfg.init, rng);
                let b = ParamBlock::zeros(&format!("{prefix}.b{}", l + 1), 1, pair[1]);
                (w, b)
            })
            .collect()
    };
    let deep_tower = if cfg.kind.uses_deep() {
        tower(&cfg.deep_widths, "deep")
    } else {
        Vec::new()
    };
    let shallow_tower = if cfg.kind.uses_shallow() {
        tower(&cfg.shallow_widths, "shallow")
    } else {
        Vec::new()
    };

    let mut head =
        |name: &str, wanted: bool| wanted.then(|| init_params(name, 1, k, cfg.init, rng));
    let h_d = head("h_D", cfg.kind.uses_deep());
    let h_cf = head("h_CF", cfg.kind.uses_shallow());
    let h_dcf = head("h_DCF", cfg.kind.uses_dcf());

    Ok(ADRNetParams {
        kind: cfg.kind,
        k,
        descriptor_dim: cfg.descriptor_dim,
        latents: LatentFactors { p, q, q_alt },
        deep_tower,
        shallow_tower,
        h_d,
        h_cf,
        h_dcf,
    })
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b.iter()) {
        acc = x.mul_add(*y, acc);
    }
    acc
}

/// σ(p_i·q_j). The inner product is sigmoid-wrapped so every kind shares the
/// probability codomain; the wrap is monotone, so rankings are unchanged.
pub fn mf_predict(params: &ADRNetParams, drug: usize, adr: usize) -> Result<f64> {
    params.check_cell(drug, adr)?;
    Ok(sigmoid(dot(
        params.latents.p.value.row(drug),
        params.latents.q.value.row(adr),
    )))
}

/// Runs the descriptor tower on one drug's active-bit set.
/// Returns (φ, logit) where φ is the final post-activation representation
/// and logit = h_D·φ. The result depends only on the drug, never on a
/// reaction index.
pub fn deep_drug_forward(params: &ADRNetParams, bits: &[usize]) -> Result<(Vec<f64>, f64)> {
    if !params.kind.uses_deep() {
        return Err(AdrnetError::Config(format!(
            "{} has no descriptor tower",
            params.kind.name()
        )));
    }
    let (w0, b0) = &params.deep_tower[0];
    let mut act = relu(&multihot_affine_forward(w0, b0, &[bits])?);
    for (w, b) in &params.deep_tower[1..] {
        let (pre, _) = affine_forward(w, b, &act)?;
        act = relu(&pre);
    }
    let h_d = params.h_d.as_ref().expect("deep kinds allocate h_D");
    let logit = dot(h_d.value.values(), act.row(0));
    Ok((act.values().to_vec(), logit))
}

/// Runs the latent tower on [p_i; q_j].
/// Returns (z_S, logit) where z_S is the tower output and logit = h_CF·z_S.
pub fn shallow_cf_forward(params: &ADRNetParams, drug: usize, adr: usize) -> Result<(Vec<f64>, f64)> {
    if !params.kind.uses_shallow() {
        return Err(AdrnetError::Config(format!(
            "{} has no latent tower",
            params.kind.name()
        )));
    }
    params.check_cell(drug, adr)?;
    let mut z: Vec<f64> = Vec::with_capacity(2 * params.k);
    z.extend_from_slice(params.latents.p.value.row(drug));
    z.extend_from_slice(params.latents.q.value.row(adr));
    let mut act = Matrix::row_vector(z);
    for (w, b) in &params.shallow_tower {
        let (pre, _) = affine_forward(w, b, &act)?;
        act = relu(&pre);
    }
    let h_cf = params.h_cf.as_ref().expect("shallow kinds allocate h_CF");
    let logit = dot(h_cf.value.values(), act.row(0));
    Ok((act.values().to_vec(), logit))
}

/// Product head: logit = h_DCF·(x ⊙ q_j), with q_j taken from Q_alt for the
/// unshared ablation and from the shared Q otherwise. `x` is the tower
/// representation φ_i or the latent row p_i depending on the kind.
pub fn dcf_forward(params: &ADRNetParams, x: &[f64], adr: usize) -> Result<f64> {
    if !params.kind.uses_dcf() {
        return Err(AdrnetError::Config(format!(
            "{} has no product head",
            params.kind.name()
        )));
    }
    if x.len() != params.k {
        return Err(AdrnetError::Dim(format!(
            "product head input length {} vs embedding size {}",
            x.len(),
            params.k
        )));
    }
    if adr >= params.n_adrs() {
        return Err(AdrnetError::Dim(format!(
            "reaction index {adr} outside {}",
            params.n_adrs()
        )));
    }
    let q = if params.kind.dcf_reads_q_alt() {
        params.latents.q_alt.as_ref().expect("noshare allocates Q_alt")
    } else {
        &params.latents.q
    };
    let h = params.h_dcf.as_ref().expect("product kinds allocate h_DCF");
    let q_row = q.value.row(adr);
    let mut acc = 0.0;
    // Fused accumulate keeps the unit-head case bitwise equal to a plain
    // inner product.
    for ((hv, xv), qv) in h.value.values().iter().zip(x.iter()).zip(q_row.iter()) {
        acc = (hv * xv).mul_add(*qv, acc);
    }
    Ok(acc)
}

/// Scores one cell as σ(sum of the kind's logits). Descriptor-tower kinds
/// require the descriptor table.
pub fn predict(
    params: &ADRNetParams,
    drug: usize,
    adr: usize,
    descriptors: Option<&DescriptorTable>,
) -> Result<f64> {
    params.check_cell(drug, adr)?;
    let mut logit = 0.0;
    let mut phi: Option<Vec<f64>> = None;
    if params.kind.uses_deep() {
        let table = descriptors.ok_or_else(|| {
            AdrnetError::Config(format!(
                "{} needs drug descriptors for prediction",
                params.kind.name()
            ))
        })?;
        let (phi_d, logit_d) = deep_drug_forward(params, table.bits(drug))?;
        logit += logit_d;
        phi = Some(phi_d);
    }
    if params.kind.uses_shallow() {
        let (_, logit_cf) = shallow_cf_forward(params, drug, adr)?;
        logit += logit_cf;
    }
    if params.kind.uses_dcf() {
        let x: &[f64] = match phi.as_deref() {
            Some(phi_d) => phi_d,
            None => params.latents.p.value.row(drug),
        };
        logit += dcf_forward(params, x, adr)?;
    }
    if params.kind.uses_raw_inner_product() {
        return mf_predict(params, drug, adr);
    }
    Ok(sigmoid(logit))
}
