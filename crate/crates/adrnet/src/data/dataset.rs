//! Interaction matrix: loading, saving, filtering, and summary stats.
//!
//! The on-disk format is UTF-8 text, one `drug_id<TAB>adr_id` pair per line,
//! with '#' comment lines and blank lines skipped. Loading sorts ids
//! lexicographically, so the matrix layout is independent of line order and
//! load→save→load is byte-stable.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{AdrnetError, Result};

/// Binary drug × adverse-reaction interaction matrix with string ids.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionDataset {
    drug_ids: Vec<String>,
    adr_ids: Vec<String>,
    /// Row-major M×N entries in {0,1}.
    y: Vec<u8>,
}

impl InteractionDataset {
    /// Builds a dataset from parallel id lists and a row-major 0/1 matrix.
    pub fn new(drug_ids: Vec<String>, adr_ids: Vec<String>, y: Vec<u8>) -> Result<Self> {
        if y.len() != drug_ids.len() * adr_ids.len() {
            return Err(AdrnetError::Dim(format!(
                "interaction matrix length {} does not equal {} drugs x {} reactions",
                y.len(),
                drug_ids.len(),
                adr_ids.len()
            )));
        }
        if let Some(bad) = y.iter().find(|&&v| v > 1) {
            return Err(AdrnetError::Data(format!(
                "interaction entry {bad} outside {{0,1}}"
            )));
        }
        for (name, ids) in [("drug", &drug_ids), ("adr", &adr_ids)] {
            let mut seen = HashMap::new();
            for id in ids.iter() {
                if seen.insert(id.as_str(), ()).is_some() {
                    return Err(AdrnetError::Data(format!("duplicate {name} id: {id}")));
                }
            }
        }
        Ok(Self {
            drug_ids,
            adr_ids,
            y,
        })
    }

    pub fn n_drugs(&self) -> usize {
        self.drug_ids.len()
    }

    pub fn n_adrs(&self) -> usize {
        self.adr_ids.len()
    }

    pub fn drug_ids(&self) -> &[String] {
        &self.drug_ids
    }

    pub fn adr_ids(&self) -> &[String] {
        &self.adr_ids
    }

    pub fn label(&self, drug: usize, adr: usize) -> u8 {
        self.y[drug * self.adr_ids.len() + adr]
    }

    pub fn interaction_count(&self) -> usize {
        self.y.iter().filter(|&&v| v == 1).count()
    }

    /// Number of interacting drugs for one reaction column.
    pub fn adr_degree(&self, adr: usize) -> usize {
        (0..self.n_drugs())
            .filter(|&i| self.label(i, adr) == 1)
            .count()
    }

    /// Number of interactions for one drug row.
    pub fn drug_degree(&self, drug: usize) -> usize {
        let n = self.n_adrs();
        self.y[drug * n..(drug + 1) * n]
            .iter()
            .filter(|&&v| v == 1)
            .count()
    }
}

/// Reads pair records. Every distinct drug/reaction id becomes a row/column,
/// sorted lexicographically; duplicate pairs collapse to a single 1.
pub fn load_interactions(path: &Path) -> Result<InteractionDataset> {
    let text = std::fs::read_to_string(path).map_err(|e| AdrnetError::Parse {
        path: path.display().to_string(),
        line: 0,
        msg: format!("cannot read file: {e}"),
    })?;
    let mut pairs: Vec<(String, String)> = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split('\t');
        match (fields.next(), fields.next(), fields.next()) {
            (Some(d), Some(a), None) if !d.is_empty() && !a.is_empty() => {
                pairs.push((d.to_string(), a.to_string()));
            }
            _ => {
                return Err(AdrnetError::Parse {
                    path: path.display().to_string(),
                    line: lineno + 1,
                    msg: format!("expected `drug_id<TAB>adr_id`, got {line:?}"),
                })
            }
        }
    }

    if pairs.is_empty() {
        return Err(AdrnetError::Data(format!(
            "no interaction records in {}",
            path.display()
        )));
    }
    let mut drug_ids: Vec<String> = pairs.iter().map(|(d, _)| d.clone()).collect();
    drug_ids.sort();
    drug_ids.dedup();
    let mut adr_ids: Vec<String> = pairs.iter().map(|(_, a)| a.clone()).collect();
    adr_ids.sort();
    adr_ids.dedup();
    let drug_index: HashMap<&str, usize> = drug_ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    let adr_index: HashMap<&str, usize> = adr_ids
        .iter()
        .enumerate()
        .map(|(j, id)| (id.as_str(), j))
        .collect();
    let n = adr_ids.len();
    let mut y = vec![0u8; drug_ids.len() * n];
    for (d, a) in &pairs {
        y[drug_index[d.as_str()] * n + adr_index[a.as_str()]] = 1;
    }
    InteractionDataset::new(drug_ids, adr_ids, y)
}

/// Writes the pair records of all 1-entries in row-major order.
pub fn save_interactions(ds: &InteractionDataset, path: &Path) -> Result<()> {
    let mut out = String::new();
    for i in 0..ds.n_drugs() {
        for j in 0..ds.n_adrs() {
            if ds.label(i, j) == 1 {
                let _ = writeln!(out, "{}\t{}", ds.drug_ids[i], ds.adr_ids[j]);
            }
        }
    }
    std::fs::write(path, out)
        .map_err(|e| AdrnetError::Io(format!("cannot write {}: {e}", path.display())))
}

/// Keeps reactions observed on strictly more than `min_drugs_per_adr` drugs,
/// then drops drugs left without any interaction, repeating until stable.
/// Surviving ids keep their relative order.
pub fn filter_dataset(
    ds: &InteractionDataset,
    min_drugs_per_adr: usize,
) -> Result<InteractionDataset> {
    let mut keep_drugs: Vec<bool> = vec![true; ds.n_drugs()];
    let mut keep_adrs: Vec<bool> = vec![true; ds.n_adrs()];
    loop {
        let mut changed = false;
        for j in 0..ds.n_adrs() {
            if !keep_adrs[j] {
                continue;
            }
            let degree = (0..ds.n_drugs())
                .filter(|&i| keep_drugs[i] && ds.label(i, j) == 1)
                .count();
            if degree <= min_drugs_per_adr {
                keep_adrs[j] = false;
                changed = true;
            }
        }
        for i in 0..ds.n_drugs() {
            if !keep_drugs[i] {
                continue;
            }
            let degree = (0..ds.n_adrs())
                .filter(|&j| keep_adrs[j] && ds.label(i, j) == 1)
                .count();
            if degree == 0 {
                keep_drugs[i] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    let drug_ids: Vec<String> = ds
        .drug_ids
        .iter()
        .zip(keep_drugs.iter())
        .filter(|(_, &k)| k)
        .map(|(id, _)| id.clone())
        .collect();
    let adr_ids: Vec<String> = ds
        .adr_ids
        .iter()
        .zip(keep_adrs.iter())
        .filter(|(_, &k)| k)
        .map(|(id, _)| id.clone())
        .collect();
    if adr_ids.is_empty() {
        return Err(AdrnetError::Data(format!(
            "filter with threshold {min_drugs_per_adr} removed every reaction"
        )));
    }
    let old_drugs: Vec<usize> = (0..ds.n_drugs()).filter(|&i| keep_drugs[i]).collect();
    let old_adrs: Vec<usize> = (0..ds.n_adrs()).filter(|&j| keep_adrs[j]).collect();
    let mut y = vec![0u8; drug_ids.len() * adr_ids.len()];
    for (new_i, &old_i) in old_drugs.iter().enumerate() {
        for (new_j, &old_j) in old_adrs.iter().enumerate() {
            y[new_i * adr_ids.len() + new_j] = ds.label(old_i, old_j);
        }
    }
    InteractionDataset::new(drug_ids, adr_ids, y)
}

/// Restricts the dataset to an explicit drug allow-list (exact id match),
/// keeping relative order. Reactions are untouched; combine with
/// [`filter_dataset`] to drop columns that fall below threshold afterwards.
pub fn restrict_drugs(ds: &InteractionDataset, allowed: &[String]) -> Result<InteractionDataset> {
    let allowed: std::collections::HashSet<&str> = allowed.iter().map(|s| s.as_str()).collect();
    let keep: Vec<usize> = (0..ds.n_drugs())
        .filter(|&i| allowed.contains(ds.drug_ids[i].as_str()))
        .collect();
    if keep.is_empty() {
        return Err(AdrnetError::Data(
            "drug allow-list matches no dataset drug".into(),
        ));
    }
    let drug_ids: Vec<String> = keep.iter().map(|&i| ds.drug_ids[i].clone()).collect();
    let n = ds.n_adrs();
    let mut y = vec![0u8; drug_ids.len() * n];
    for (new_i, &old_i) in keep.iter().enumerate() {
        for j in 0..n {
            y[new_i * n + j] = ds.label(old_i, j);
        }
    }
    InteractionDataset::new(drug_ids, ds.adr_ids.clone(), y)
}

/// Loads one id per line, '#' comments and blank lines skipped.
pub fn load_id_list(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| AdrnetError::Parse {
        path: path.display().to_string(),
        line: 0,
        msg: format!("cannot read file: {e}"),
    })?;
    Ok(text
        .lines()
        .map(|l| l.trim_end_matches('\r').trim())
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.to_string())
        .collect())
}

/// Summary counts for reporting and for checking published dataset sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetStats {
    pub n_drugs: usize,
    pub n_adrs: usize,
    pub interactions: usize,
    pub density: f64,
    /// histogram[d] = number of reactions observed on exactly d drugs,
    /// indexed 0..=M.
    pub adr_degree_histogram: Vec<usize>,
}

pub fn dataset_stats(ds: &InteractionDataset) -> DatasetStats {
    let mut histogram = vec![0usize; ds.n_drugs() + 1];
    for j in 0..ds.n_adrs() {
        histogram[ds.adr_degree(j)] += 1;
    }
    let cells = ds.n_drugs() * ds.n_adrs();
    let interactions = ds.interaction_count();
    DatasetStats {
        n_drugs: ds.n_drugs(),
        n_adrs: ds.n_adrs(),
        interactions,
        density: if cells == 0 {
            0.0
        } else {
            interactions as f64 / cells as f64
        },
        adr_degree_histogram: histogram,
    }
}
