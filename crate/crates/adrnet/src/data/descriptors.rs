//! Binary drug descriptors stored as sparse active-bit index lists.
//!
//! A descriptor table is assembled from one or more part files (typically a
//! structural-fingerprint part plus a biological part). Each part file
//! declares its own width in a `#dims=<D>` header; parts concatenate in the
//! order given, part p's bits offset by the widths of parts before it.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::data::dataset::InteractionDataset;
use crate::error::{AdrnetError, Result};

/// Per-drug active-bit sets over the concatenated descriptor space.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorTable {
    drug_ids: Vec<String>,
    part_dims: Vec<usize>,
    /// rows[i] holds strictly increasing global bit indices in [0, dim()).
    rows: Vec<Vec<usize>>,
}

impl DescriptorTable {
    pub fn new(drug_ids: Vec<String>, part_dims: Vec<usize>, rows: Vec<Vec<usize>>) -> Result<Self> {
        if rows.len() != drug_ids.len() {
            return Err(AdrnetError::Dim(format!(
                "{} descriptor rows for {} drugs",
                rows.len(),
                drug_ids.len()
            )));
        }
        let dim: usize = part_dims.iter().sum();
        if dim == 0 {
            return Err(AdrnetError::Data("descriptor table with zero bits".into()));
        }
        for (id, row) in drug_ids.iter().zip(rows.iter()) {
            for pair in row.windows(2) {
                if pair[0] >= pair[1] {
                    return Err(AdrnetError::Data(format!(
                        "descriptor row for {id} is not strictly increasing"
                    )));
                }
            }
            if let Some(&last) = row.last() {
                if last >= dim {
                    return Err(AdrnetError::Data(format!(
                        "descriptor bit {last} for {id} outside dimension {dim}"
                    )));
                }
            }
        }
        Ok(Self {
            drug_ids,
            part_dims,
            rows,
        })
    }

    /// Total bit width across all parts.
    pub fn dim(&self) -> usize {
        self.part_dims.iter().sum()
    }

    /// Width of the first (structural) part.
    pub fn pc_dim(&self) -> usize {
        self.part_dims[0]
    }

    /// Combined width of every part after the first.
    pub fn bio_dim(&self) -> usize {
        self.dim() - self.pc_dim()
    }

    pub fn part_dims(&self) -> &[usize] {
        &self.part_dims
    }

    pub fn drug_ids(&self) -> &[String] {
        &self.drug_ids
    }

    pub fn n_drugs(&self) -> usize {
        self.drug_ids.len()
    }

    /// Active global bit indices for one drug row.
    pub fn bits(&self, drug: usize) -> &[usize] {
        &self.rows[drug]
    }
}

struct ParsedPart {
    dims: usize,
    rows: HashMap<String, Vec<usize>>,
}

fn parse_part(path: &Path) -> Result<ParsedPart> {
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

    let mut dims: Option<usize> = None;
    let mut rows: HashMap<String, Vec<usize>> = HashMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        let lineno = lineno + 1;
        if let Some(decl) = line.strip_prefix("#dims=") {
            if dims.is_some() {
                return Err(perr(lineno, "duplicate #dims header".into()));
            }
            let d: usize = decl
                .trim()
                .parse()
                .map_err(|_| perr(lineno, format!("bad #dims value {decl:?}")))?;
            if d == 0 {
                return Err(perr(lineno, "#dims must be positive".into()));
            }
            dims = Some(d);
            continue;
        }
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let Some(d) = dims else {
            return Err(perr(lineno, "data line before #dims header".into()));
        };
        let Some((id, list)) = line.split_once('\t') else {
            return Err(perr(
                lineno,
                format!("expected `drug_id<TAB>i1,i2,...`, got {line:?}"),
            ));
        };
        if id.is_empty() {
            return Err(perr(lineno, "empty drug id".into()));
        }
        let mut bits: Vec<usize> = Vec::new();
        if !list.is_empty() {
            for token in list.split(',') {
                let bit: usize = token
                    .trim()
                    .parse()
                    .map_err(|_| perr(lineno, format!("bad bit index {token:?}")))?;
                if bit >= d {
                    return Err(perr(
                        lineno,
                        format!("bit index {bit} outside declared dims {d}"),
                    ));
                }
                if let Some(&prev) = bits.last() {
                    if bit <= prev {
                        return Err(perr(
                            lineno,
                            format!("bit indices must be strictly increasing, {prev} then {bit}"),
                        ));
                    }
                }
                bits.push(bit);
            }
        }
        if rows.insert(id.to_string(), bits).is_some() {
            return Err(perr(lineno, format!("duplicate descriptor row for {id}")));
        }
    }
    let dims = dims.ok_or_else(|| perr(0, "missing #dims header".into()))?;
    Ok(ParsedPart { dims, rows })
}

/// Loads and concatenates descriptor part files, aligned to the dataset's
/// drug order. Every dataset drug must appear in every part; descriptor rows
/// for drugs outside the dataset are ignored.
pub fn load_descriptors(paths: &[&Path], dataset: &InteractionDataset) -> Result<DescriptorTable> {
    if paths.is_empty() {
        return Err(AdrnetError::Config(
            "at least one descriptor file required".into(),
        ));
    }
    let parts: Vec<ParsedPart> = paths.iter().map(|p| parse_part(p)).collect::<Result<_>>()?;

    let mut missing: Vec<String> = Vec::new();
    for id in dataset.drug_ids() {
        if parts.iter().any(|p| !p.rows.contains_key(id)) {
            missing.push(id.clone());
        }
    }
    if !missing.is_empty() {
        return Err(AdrnetError::Data(format!(
            "{} drugs lack descriptor rows: {}",
            missing.len(),
            missing.join(", ")
        )));
    }

    let part_dims: Vec<usize> = parts.iter().map(|p| p.dims).collect();
    let mut rows: Vec<Vec<usize>> = Vec::with_capacity(dataset.n_drugs());
    for id in dataset.drug_ids() {
        let mut bits: Vec<usize> = Vec::new();
        let mut offset = 0usize;
        for part in &parts {
            bits.extend(part.rows[id].iter().map(|&b| b + offset));
            offset += part.dims;
        }
        rows.push(bits);
    }
    DescriptorTable::new(dataset.drug_ids().to_vec(), part_dims, rows)
}

/// Writes each part to its own file, inverting the load-time offsets.
pub fn save_descriptors(table: &DescriptorTable, paths: &[&Path]) -> Result<()> {
    if paths.len() != table.part_dims.len() {
        return Err(AdrnetError::Config(format!(
            "{} output paths for {} descriptor parts",
            paths.len(),
            table.part_dims.len()
        )));
    }
    let mut offset = 0usize;
    for (part, path) in table.part_dims.iter().zip(paths.iter()) {
        let mut out = String::new();
        let _ = writeln!(out, "#dims={part}");
        for (id, row) in table.drug_ids.iter().zip(table.rows.iter()) {
            let local: Vec<String> = row
                .iter()
                .filter(|&&b| b >= offset && b < offset + part)
                .map(|&b| (b - offset).to_string())
                .collect();
            let _ = writeln!(out, "{id}\t{}", local.join(","));
        }
        std::fs::write(path, out)
            .map_err(|e| AdrnetError::Io(format!("cannot write {}: {e}", path.display())))?;
        offset += part;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::io::Write;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    fn two_drug_dataset() -> InteractionDataset {
        InteractionDataset::new(
            vec!["d1".into(), "d2".into()],
            vec!["a1".into()],
            vec![1, 1],
        )
        .unwrap()
    }

    #[test]
    fn concatenates_pc_and_bio_parts() {
        let ds = two_drug_dataset();
        let pc = write_temp("#dims=881\nd1\t0,880\nd2\t5\n");
        let bio = write_temp("#dims=6712\nd1\t0\nd2\t6711\n");
        let table = load_descriptors(&[pc.path(), bio.path()], &ds).unwrap();
        assert_eq!(table.dim(), 7593);
        assert_eq!(table.pc_dim(), 881);
        assert_eq!(table.bio_dim(), 6712);
        // Bio bits shift by the pc width.
        assert_eq!(table.bits(0), &[0, 880, 881]);
        assert_eq!(table.bits(1), &[5, 881 + 6711]);
    }

    #[test]
    fn empty_rows_are_accepted() {
        let ds = two_drug_dataset();
        let f = write_temp("#dims=10\nd1\t\nd2\t3\n");
        let table = load_descriptors(&[f.path()], &ds).unwrap();
        assert!(table.bits(0).is_empty());
        assert_eq!(table.bits(1), &[3]);
        assert_eq!(table.bio_dim(), 0);
    }

    #[test]
    fn out_of_range_bit_is_a_parse_error() {
        let ds = two_drug_dataset();
        let f = write_temp("#dims=10\nd1\t10\nd2\t\n");
        let err = load_descriptors(&[f.path()], &ds).unwrap_err();
        match err {
            AdrnetError::Parse { line, msg, .. } => {
                assert_eq!(line, 2);
                assert!(msg.contains("10"), "{msg}");
            }
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn unsorted_or_duplicate_bits_rejected() {
        let ds = two_drug_dataset();
        let unsorted = write_temp("#dims=10\nd1\t5,3\nd2\t\n");
        assert!(load_descriptors(&[unsorted.path()], &ds).is_err());
        let dup = write_temp("#dims=10\nd1\t3,3\nd2\t\n");
        assert!(load_descriptors(&[dup.path()], &ds).is_err());
    }

    #[test]
    fn header_rules_enforced() {
        let ds = two_drug_dataset();
        let missing = write_temp("d1\t0\nd2\t\n");
        assert!(matches!(
            load_descriptors(&[missing.path()], &ds),
            Err(AdrnetError::Parse { .. })
        ));
        let late = write_temp("d1\t0\n#dims=10\nd2\t\n");
        assert!(load_descriptors(&[late.path()], &ds).is_err());
        let dup = write_temp("#dims=10\n#dims=10\nd1\t0\nd2\t\n");
        assert!(load_descriptors(&[dup.path()], &ds).is_err());
    }

    #[test]
    fn missing_coverage_lists_drug_ids() {
        let ds = two_drug_dataset();
        let f = write_temp("#dims=4\nd1\t0\n");
        let err = load_descriptors(&[f.path()], &ds).unwrap_err();
        match err {
            AdrnetError::Data(msg) => assert!(msg.contains("d2"), "{msg}"),
            other => panic!("expected data error, got {other}"),
        }
    }

    #[test]
    fn rows_for_unknown_drugs_are_ignored() {
        let ds = two_drug_dataset();
        let f = write_temp("#dims=4\nd1\t0\nd2\t1\nsomething_else\t2\n");
        let table = load_descriptors(&[f.path()], &ds).unwrap();
        assert_eq!(table.n_drugs(), 2);
    }

    #[test]
    fn save_load_round_trip_is_byte_stable() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let ds = InteractionDataset::new(
            (0..5).map(|i| format!("d{i}")).collect(),
            vec!["a0".into()],
            vec![1; 5],
        )
        .unwrap();
        let dims = [7usize, 12];
        let rows: Vec<Vec<usize>> = (0..5)
            .map(|_| {
                (0..19)
                    .filter(|_| rng.gen_bool(0.3))
                    .collect()
            })
            .collect();
        let table = DescriptorTable::new(ds.drug_ids().to_vec(), dims.to_vec(), rows).unwrap();

        let dir = tempfile::tempdir().unwrap();
        let first: Vec<std::path::PathBuf> =
            (0..2).map(|p| dir.path().join(format!("p{p}.tsv"))).collect();
        let second: Vec<std::path::PathBuf> =
            (0..2).map(|p| dir.path().join(format!("q{p}.tsv"))).collect();
        let first_refs: Vec<&Path> = first.iter().map(|p| p.as_path()).collect();
        let second_refs: Vec<&Path> = second.iter().map(|p| p.as_path()).collect();

        save_descriptors(&table, &first_refs).unwrap();
        let reloaded = load_descriptors(&first_refs, &ds).unwrap();
        assert_eq!(table, reloaded);
        save_descriptors(&reloaded, &second_refs).unwrap();
        for (a, b) in first.iter().zip(second.iter()) {
            assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
        }
    }

    #[test]
    fn single_part_table_has_zero_bio_dim() {
        let ds = two_drug_dataset();
        let f = write_temp("#dims=5\nd1\t0,4\nd2\t2\n");
        let table = load_descriptors(&[f.path()], &ds).unwrap();
        assert_eq!(table.pc_dim(), 5);
        assert_eq!(table.bio_dim(), 0);
        assert_eq!(table.dim(), 5);
    }
}
