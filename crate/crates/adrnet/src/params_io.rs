//! Exact text persistence for trained model parameters.
//!
//! Values are written with `f64`'s shortest-round-trip formatting, so a
//! save/load cycle reproduces every bit. Only parameter values travel;
//! optimizer moments are deliberately not persisted, so a reloaded model
//! predicts identically but restarts optimization fresh.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{AdrnetError, Result};
use crate::models::{ADRNetParams, LatentFactors, ModelKind};
use crate::neural::{Matrix, ParamBlock};

const HEADER: &str = "adrnet-params v1";

/// Serializes kind, shapes, and every allocated block.
pub fn save_params(params: &ADRNetParams, path: &Path) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "{HEADER}");
    let _ = writeln!(out, "kind={}", params.kind.name());
    let _ = writeln!(out, "k={}", params.k);
    let _ = writeln!(out, "m={}", params.n_drugs());
    let _ = writeln!(out, "n={}", params.n_adrs());
    let _ = writeln!(out, "descriptor_dim={}", params.descriptor_dim);

    let mut blocks: Vec<(&str, &Matrix)> = vec![
        ("P", &params.latents.p.value),
        ("Q", &params.latents.q.value),
    ];
    let mut names: Vec<String> = Vec::new();
    if let Some(q_alt) = params.latents.q_alt.as_ref() {
        blocks.push(("Q_alt", &q_alt.value));
    }
    for (idx, (w, b)) in params.deep_tower.iter().enumerate() {
        names.push(format!("deep.W{}", idx + 1));
        names.push(format!("deep.b{}", idx + 1));
        blocks.push(("", &w.value));
        blocks.push(("", &b.value));
    }
    for (idx, (w, b)) in params.shallow_tower.iter().enumerate() {
        names.push(format!("shallow.W{}", idx + 1));
        names.push(format!("shallow.b{}", idx + 1));
        blocks.push(("", &w.value));
        blocks.push(("", &b.value));
    }
    for (name, head) in [
        ("h_D", params.h_d.as_ref()),
        ("h_CF", params.h_cf.as_ref()),
        ("h_DCF", params.h_dcf.as_ref()),
    ] {
        if let Some(h) = head {
            blocks.push((name, &h.value));
        }
    }

    let mut tower_name = names.iter();
    let _ = writeln!(out, "blocks={}", blocks.len());
    for (name, value) in &blocks {
        let label: &str = if name.is_empty() {
            tower_name.next().expect("one queued name per tower block")
        } else {
            name
        };
        let (rows, cols) = value.shape();
        let _ = writeln!(out, "block {label} {rows} {cols}");
        for r in 0..rows {
            let line = value
                .row(r)
                .iter()
                .map(|v| {
                    if !v.is_finite() {
                        return Err(AdrnetError::Numeric(format!(
                            "non-finite value in block {label}"
                        )));
                    }
                    Ok(format!("{v}"))
                })
                .collect::<Result<Vec<_>>>()?
                .join(" ");
            let _ = writeln!(out, "{line}");
        }
    }

    std::fs::write(path, out).map_err(|e| {
        AdrnetError::Io(format!("cannot write parameters to {}: {e}", path.display()))
    })
}

struct LineReader<'a> {
    lines: std::str::Lines<'a>,
    path: String,
    lineno: usize,
}

impl<'a> LineReader<'a> {
    fn next(&mut self) -> Result<&'a str> {
        self.lineno += 1;
        self.lines.next().ok_or_else(|| AdrnetError::Parse {
            path: self.path.clone(),
            line: self.lineno,
            msg: "unexpected end of file".into(),
        })
    }

    fn err(&self, msg: String) -> AdrnetError {
        AdrnetError::Parse {
            path: self.path.clone(),
            line: self.lineno,
            msg,
        }
    }

    fn key_value(&mut self, key: &str) -> Result<&'a str> {
        let line = self.next()?;
        line.strip_prefix(key)
            .and_then(|rest| rest.strip_prefix('='))
            .ok_or_else(|| self.err(format!("expected {key}=..., got {line:?}")))
    }

    fn parse_usize(&self, s: &str, what: &str) -> Result<usize> {
        s.parse()
            .map_err(|_| self.err(format!("bad {what}: {s:?}")))
    }
}

/// Loads a parameter file written by `save_params`. Gradients and moments
/// start at zero.
pub fn load_params(path: &Path) -> Result<ADRNetParams> {
    let text = std::fs::read_to_string(path).map_err(|e| AdrnetError::Parse {
        path: path.display().to_string(),
        line: 0,
        msg: format!("cannot read file: {e}"),
    })?;
    let mut r = LineReader {
        lines: text.lines(),
        path: path.display().to_string(),
        lineno: 0,
    };

    let header = r.next()?;
    if header != HEADER {
        return Err(r.err(format!("expected header {HEADER:?}, got {header:?}")));
    }
    let kind = ModelKind::parse(r.key_value("kind")?)?;
    let k = {
        let s = r.key_value("k")?;
        r.parse_usize(s, "k")?
    };
    let m = {
        let s = r.key_value("m")?;
        r.parse_usize(s, "m")?
    };
    let n = {
        let s = r.key_value("n")?;
        r.parse_usize(s, "n")?
    };
    let descriptor_dim = {
        let s = r.key_value("descriptor_dim")?;
        r.parse_usize(s, "descriptor_dim")?
    };
    let block_count = {
        let s = r.key_value("blocks")?;
        r.parse_usize(s, "blocks")?
    };

    let mut named: Vec<(String, Matrix)> = Vec::with_capacity(block_count);
    for _ in 0..block_count {
        let line = r.next()?;
        let mut parts = line.split_whitespace();
        let (tag, name, rows, cols) = (
            parts.next().unwrap_or(""),
            parts.next().unwrap_or(""),
            parts.next().unwrap_or(""),
            parts.next().unwrap_or(""),
        );
        if tag != "block" || parts.next().is_some() {
            return Err(r.err(format!("expected 'block <name> <rows> <cols>', got {line:?}")));
        }
        let rows = r.parse_usize(rows, "block rows")?;
        let cols = r.parse_usize(cols, "block cols")?;
        let mut values = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let row = r.next()?;
            let before = values.len();
            for tok in row.split_whitespace() {
                let v: f64 = tok
                    .parse()
                    .map_err(|_| r.err(format!("bad value {tok:?}")))?;
                if !v.is_finite() {
                    return Err(r.err(format!("non-finite value {tok:?}")));
                }
                values.push(v);
            }
            if values.len() - before != cols {
                return Err(r.err(format!(
                    "row has {} values, expected {cols}",
                    values.len() - before
                )));
            }
        }
        named.push((name.to_string(), Matrix::from_vec(rows, cols, values)?));
    }
    if let Ok(line) = r.next() {
        if !line.trim().is_empty() {
            return Err(r.err(format!("trailing content: {line:?}")));
        }
    }

    assemble(kind, k, m, n, descriptor_dim, named, &path.display().to_string())
}

type BlockMap = std::collections::HashMap<String, Matrix>;

fn take_block(map: &mut BlockMap, name: &str, rows: usize, cols: usize, path: &str) -> Result<ParamBlock> {
    let value = map.remove(name).ok_or_else(|| AdrnetError::Parse {
        path: path.to_string(),
        line: 0,
        msg: format!("missing block {name}"),
    })?;
    if value.shape() != (rows, cols) {
        return Err(AdrnetError::Dim(format!(
            "block {name} is {}x{}, expected {rows}x{cols}",
            value.rows(),
            value.cols()
        )));
    }
    Ok(ParamBlock::from_value(name, value))
}

fn take_tower(
    map: &mut BlockMap,
    prefix: &str,
    input_dim: usize,
    path: &str,
) -> Result<Vec<(ParamBlock, ParamBlock)>> {
    let mut layers = Vec::new();
    let mut in_dim = input_dim;
    for l in 1.. {
        let w_name = format!("{prefix}.W{l}");
        let Some(w) = map.remove(&w_name) else { break };
        if w.rows() != in_dim {
            return Err(AdrnetError::Dim(format!(
                "block {w_name} has {} input rows, expected {in_dim}",
                w.rows()
            )));
        }
        let out_dim = w.cols();
        let b_name = format!("{prefix}.b{l}");
        let b = map.remove(&b_name).ok_or_else(|| AdrnetError::Parse {
            path: path.to_string(),
            line: 0,
            msg: format!("missing block {b_name}"),
        })?;
        if b.shape() != (1, out_dim) {
            return Err(AdrnetError::Dim(format!(
                "block {b_name} is {}x{}, expected 1x{out_dim}",
                b.rows(),
                b.cols()
            )));
        }
        layers.push((
            ParamBlock::from_value(&w_name, w),
            ParamBlock::from_value(&b_name, b),
        ));
        in_dim = out_dim;
    }
    Ok(layers)
}

fn assemble(
    kind: ModelKind,
    k: usize,
    m: usize,
    n: usize,
    descriptor_dim: usize,
    named: Vec<(String, Matrix)>,
    path: &str,
) -> Result<ADRNetParams> {
    let mut map: BlockMap = named.into_iter().collect();

    let p = take_block(&mut map, "P", m, k, path)?;
    let q = take_block(&mut map, "Q", n, k, path)?;
    let q_alt = if kind.dcf_reads_q_alt() {
        Some(take_block(&mut map, "Q_alt", n, k, path)?)
    } else {
        None
    };

    let deep_tower = if kind.uses_deep() {
        let t = take_tower(&mut map, "deep", descriptor_dim, path)?;
        if t.is_empty() || t.last().unwrap().0.value.cols() != k {
            return Err(AdrnetError::Dim(format!(
                "deep tower must end at width {k}"
            )));
        }
        t
    } else {
        Vec::new()
    };
    let shallow_tower = if kind.uses_shallow() {
        let t = take_tower(&mut map, "shallow", 2 * k, path)?;
        if t.is_empty() || t.last().unwrap().0.value.cols() != k {
            return Err(AdrnetError::Dim(format!(
                "shallow tower must end at width {k}"
            )));
        }
        t
    } else {
        Vec::new()
    };

    let h_d = if kind.uses_deep() {
        Some(take_block(&mut map, "h_D", 1, k, path)?)
    } else {
        None
    };
    let h_cf = if kind.uses_shallow() {
        Some(take_block(&mut map, "h_CF", 1, k, path)?)
    } else {
        None
    };
    let h_dcf = if kind.uses_dcf() {
        Some(take_block(&mut map, "h_DCF", 1, k, path)?)
    } else {
        None
    };

    if let Some(extra) = map.keys().next() {
        return Err(AdrnetError::Parse {
            path: path.to_string(),
            line: 0,
            msg: format!("unexpected block {extra} for kind {}", kind.name()),
        });
    }

    Ok(ADRNetParams {
        kind,
        k,
        descriptor_dim,
        latents: LatentFactors { p, q, q_alt },
        deep_tower,
        shallow_tower,
        h_d,
        h_cf,
        h_dcf,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_model, predict, ModelConfig, ModelKind};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use tempfile::tempdir;

    fn build(kind: ModelKind, seed: u64) -> ADRNetParams {
        let cfg = ModelConfig::defaults(kind, 4, 10, seed);
        build_model(&cfg, 5, 6, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
    }

    #[test]
    fn round_trip_is_exact_for_every_kind() {
        let dir = tempdir().unwrap();
        for kind in [
            ModelKind::Mf,
            ModelKind::Gmf,
            ModelKind::MlpCf,
            ModelKind::Nmf,
            ModelKind::Adrnet,
            ModelKind::AdrnetNoshare,
        ] {
            let params = build(kind, 1);
            let path = dir.path().join(format!("{}.params", kind.name()));
            save_params(&params, &path).unwrap();
            let loaded = load_params(&path).unwrap();
            assert_eq!(loaded.kind, kind);
            assert_eq!(loaded.latents.p.value, params.latents.p.value);
            assert_eq!(loaded.latents.q.value, params.latents.q.value);
            assert_eq!(
                loaded.latents.q_alt.as_ref().map(|b| &b.value),
                params.latents.q_alt.as_ref().map(|b| &b.value)
            );
            assert_eq!(loaded.deep_tower.len(), params.deep_tower.len());
            for (a, b) in loaded.deep_tower.iter().zip(params.deep_tower.iter()) {
                assert_eq!(a.0.value, b.0.value);
                assert_eq!(a.1.value, b.1.value);
            }
            for (a, b) in loaded.shallow_tower.iter().zip(params.shallow_tower.iter()) {
                assert_eq!(a.0.value, b.0.value);
                assert_eq!(a.1.value, b.1.value);
            }
        }
    }

    fn bit_table(m: usize, d: usize, seed: u64) -> crate::data::descriptors::DescriptorTable {
        use rand::Rng;
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        crate::data::descriptors::DescriptorTable::new(
            (0..m).map(|i| format!("d{i}")).collect(),
            vec![d],
            (0..m)
                .map(|_| (0..d).filter(|_| r.gen_bool(0.4)).collect())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn reloaded_model_predicts_identically() {
        let dir = tempdir().unwrap();
        let params = build(ModelKind::Adrnet, 7);
        let table = bit_table(5, 10, 7);
        let path = dir.path().join("model.params");
        save_params(&params, &path).unwrap();
        let loaded = load_params(&path).unwrap();
        for i in 0..5 {
            for j in 0..6 {
                assert_eq!(
                    predict(&params, i, j, Some(&table)).unwrap(),
                    predict(&loaded, i, j, Some(&table)).unwrap()
                );
            }
        }
    }

    #[test]
    fn awkward_floats_survive_the_text_format() {
        let dir = tempdir().unwrap();
        let mut params = build(ModelKind::Mf, 3);
        params.latents.p.value.set(0, 0, f64::MIN_POSITIVE);
        params.latents.p.value.set(0, 1, -1.0 / 3.0);
        params.latents.p.value.set(1, 0, 1e300);
        params.latents.p.value.set(1, 1, -4.9e-324);
        let path = dir.path().join("mf.params");
        save_params(&params, &path).unwrap();
        let loaded = load_params(&path).unwrap();
        assert_eq!(loaded.latents.p.value, params.latents.p.value);
    }

    #[test]
    fn corrupted_files_give_line_numbered_errors() {
        let dir = tempdir().unwrap();
        let params = build(ModelKind::Mf, 4);
        let path = dir.path().join("mf.params");
        save_params(&params, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();

        let bad_header = text.replacen(HEADER, "something else", 1);
        let p1 = dir.path().join("bad1.params");
        std::fs::write(&p1, bad_header).unwrap();
        let err = load_params(&p1).unwrap_err();
        assert!(matches!(err, AdrnetError::Parse { line: 1, .. }), "{err}");

        let bad_value = text.replacen("block P 5 4\n", "block P 5 4\nx y z w\n", 1);
        let p2 = dir.path().join("bad2.params");
        std::fs::write(&p2, bad_value).unwrap();
        assert!(load_params(&p2).is_err());
    }

    #[test]
    fn missing_block_is_reported_by_name() {
        let dir = tempdir().unwrap();
        let params = build(ModelKind::Gmf, 5);
        let path = dir.path().join("gmf.params");
        save_params(&params, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        // Drop the head block but keep the count honest.
        let start = text.find("block h_DCF").unwrap();
        let truncated = text[..start].replacen("blocks=3", "blocks=2", 1);
        let p = dir.path().join("missing.params");
        std::fs::write(&p, truncated).unwrap();
        let err = load_params(&p).unwrap_err();
        assert!(err.to_string().contains("h_DCF"), "{err}");
    }

    #[test]
    fn non_finite_values_refuse_to_save() {
        let dir = tempdir().unwrap();
        let mut params = build(ModelKind::Mf, 6);
        params.latents.q.value.set(0, 0, f64::INFINITY);
        let err = save_params(&params, &dir.path().join("inf.params")).unwrap_err();
        assert!(matches!(err, AdrnetError::Numeric(_)), "{err}");
    }
}
