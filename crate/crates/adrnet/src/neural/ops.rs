//! Forward/backward pairs for the fixed computation graph.
//!
//! Every forward that needs state for its backward returns a cache value, so
//! a backward call without a prior forward is unrepresentable. Parameter
//! gradients accumulate with `+=`; input gradients are returned.
//!
//! Convention: a batch is a `(batch x features)` matrix, weights are
//! `(in_dim x out_dim)`, and the affine map is `z W + b` per row, i.e. the
//! transposed-weight column convention applied row-wise.

use crate::error::{AdrnetError, Result};
use crate::neural::adam::ParamBlock;
use crate::neural::matrix::Matrix;

/// Clamp bound for probabilities entering a logarithm or a logit.
pub const EPS_LOGIT: f64 = 1e-12;

// ---------------------------------------------------------------------------
// affine
// ---------------------------------------------------------------------------

/// Input snapshot needed by [`affine_backward`].
#[derive(Debug, Clone)]
pub struct AffineCache {
    input: Matrix,
}

/// `out[r] = W^T z[r] + b` for every batch row.
pub fn affine_forward(w: &ParamBlock, b: &ParamBlock, z: &Matrix) -> Result<(Matrix, AffineCache)> {
    let (in_dim, out_dim) = w.shape();
    if z.cols() != in_dim {
        return Err(AdrnetError::Dim(format!(
            "affine: input {}x{} does not match weight {}x{}",
            z.rows(),
            z.cols(),
            in_dim,
            out_dim
        )));
    }
    if b.value.len() != out_dim {
        return Err(AdrnetError::Dim(format!(
            "affine: bias length {} does not match output dim {}",
            b.value.len(),
            out_dim
        )));
    }
    let mut out = z.matmul(&w.value)?;
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        for (o, &bias) in row.iter_mut().zip(b.value.values().iter()) {
            *o += bias;
        }
    }
    Ok((
        out,
        AffineCache {
            input: z.clone(),
        },
    ))
}

/// Accumulates into `w.grad` and `b.grad`; returns the gradient w.r.t. the input.
pub fn affine_backward(
    w: &mut ParamBlock,
    b: &mut ParamBlock,
    cache: &AffineCache,
    upstream: &Matrix,
) -> Result<Matrix> {
    let (in_dim, out_dim) = w.shape();
    if upstream.cols() != out_dim || upstream.rows() != cache.input.rows() {
        return Err(AdrnetError::Dim(format!(
            "affine backward: upstream {}x{} vs output {}x{}",
            upstream.rows(),
            upstream.cols(),
            cache.input.rows(),
            out_dim
        )));
    }
    // dW = z^T * upstream, accumulated.
    for r in 0..cache.input.rows() {
        let z_row = cache.input.row(r);
        let u_row = upstream.row(r);
        for (i, &zi) in z_row.iter().enumerate() {
            if zi == 0.0 {
                continue;
            }
            let g_row = w.grad.row_mut(i);
            for (g, &u) in g_row.iter_mut().zip(u_row.iter()) {
                *g = zi.mul_add(u, *g);
            }
        }
    }
    // db = column sums of upstream.
    for r in 0..upstream.rows() {
        let u_row = upstream.row(r);
        for (g, &u) in b.grad.values_mut().iter_mut().zip(u_row.iter()) {
            *g += u;
        }
    }
    // dz = upstream * W^T.
    let mut dz = Matrix::zeros(cache.input.rows(), in_dim);
    for r in 0..upstream.rows() {
        let u_row = upstream.row(r);
        let d_row = dz.row_mut(r);
        for (i, d) in d_row.iter_mut().enumerate() {
            let w_row = w.value.row(i);
            let mut acc = 0.0;
            for (&u, &wv) in u_row.iter().zip(w_row.iter()) {
                acc = u.mul_add(wv, acc);
            }
            *d = acc;
        }
    }
    Ok(dz)
}

// ---------------------------------------------------------------------------
// multi-hot affine (sparse first layer of the descriptor tower)
// ---------------------------------------------------------------------------

/// Affine layer over binary multi-hot inputs given as active-bit index lists:
/// `out[r] = sum over active bits of W rows + b`. Equivalent to the dense map
/// on a 0/1 vector, skipping inactive bits.
pub fn multihot_affine_forward(
    w: &ParamBlock,
    b: &ParamBlock,
    rows_bits: &[&[usize]],
) -> Result<Matrix> {
    let (in_dim, out_dim) = w.shape();
    if b.value.len() != out_dim {
        return Err(AdrnetError::Dim(format!(
            "multihot affine: bias length {} vs output dim {}",
            b.value.len(),
            out_dim
        )));
    }
    let mut out = Matrix::zeros(rows_bits.len(), out_dim);
    for (r, bits) in rows_bits.iter().enumerate() {
        let out_row = out.row_mut(r);
        out_row.copy_from_slice(b.value.values());
        for &bit in bits.iter() {
            if bit >= in_dim {
                return Err(AdrnetError::Dim(format!(
                    "multihot affine: bit {} out of range for input dim {}",
                    bit, in_dim
                )));
            }
            let w_row = w.value.row(bit);
            for (o, &wv) in out_row.iter_mut().zip(w_row.iter()) {
                *o += wv;
            }
        }
    }
    Ok(out)
}

/// Backward of the multi-hot affine. Accumulates into `w.grad` (active rows
/// only) and `b.grad`. The input is binary data, so no input gradient exists.
pub fn multihot_affine_backward(
    w: &mut ParamBlock,
    b: &mut ParamBlock,
    rows_bits: &[&[usize]],
    upstream: &Matrix,
) -> Result<()> {
    let (_, out_dim) = w.shape();
    if upstream.cols() != out_dim || upstream.rows() != rows_bits.len() {
        return Err(AdrnetError::Dim(format!(
            "multihot affine backward: upstream {}x{} vs {} rows x {} cols",
            upstream.rows(),
            upstream.cols(),
            rows_bits.len(),
            out_dim
        )));
    }
    for (r, bits) in rows_bits.iter().enumerate() {
        let u_row = upstream.row(r);
        for &bit in bits.iter() {
            let g_row = w.grad.row_mut(bit);
            for (g, &u) in g_row.iter_mut().zip(u_row.iter()) {
                *g += u;
            }
        }
        for (g, &u) in b.grad.values_mut().iter_mut().zip(u_row.iter()) {
            *g += u;
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// relu
// ---------------------------------------------------------------------------

/// Entrywise max(0, x).
pub fn relu(z: &Matrix) -> Matrix {
    z.map(|v| if v > 0.0 { v } else { 0.0 })
}

/// Passes upstream where the forward input was strictly positive; the
/// subgradient at exactly zero is taken as zero.
pub fn relu_backward(input: &Matrix, upstream: &Matrix) -> Result<Matrix> {
    input.check_same_shape(upstream, "relu backward")?;
    let mut out = upstream.clone();
    for (o, &x) in out.values_mut().iter_mut().zip(input.values().iter()) {
        if x <= 0.0 {
            *o = 0.0;
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// sigmoid / logit
// ---------------------------------------------------------------------------

/// Numerically stable sigmoid: branches on the sign so exp never overflows.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn sigmoid_slice(xs: &[f64]) -> Vec<f64> {
    xs.iter().map(|&x| sigmoid(x)).collect()
}

/// d sigmoid / dx expressed through the forward output: y (1 - y).
#[inline]
pub fn sigmoid_backward(output: f64, upstream: f64) -> f64 {
    upstream * output * (1.0 - output)
}

/// ln(y / (1 - y)). Inputs inside [0,1] are clamped to
/// [EPS_LOGIT, 1 - EPS_LOGIT] first; inputs outside [0,1] are domain errors.
pub fn logit(y: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&y) {
        return Err(AdrnetError::Numeric(format!(
            "logit domain error: {y} outside [0,1]"
        )));
    }
    let y = y.clamp(EPS_LOGIT, 1.0 - EPS_LOGIT);
    Ok((y / (1.0 - y)).ln())
}

// ---------------------------------------------------------------------------
// concat
// ---------------------------------------------------------------------------

/// Column-wise concatenation of two batches: row r becomes [a_r ; b_r].
pub fn concat(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.rows() != b.rows() {
        return Err(AdrnetError::Dim(format!(
            "concat: batch sizes {} vs {}",
            a.rows(),
            b.rows()
        )));
    }
    let mut out = Matrix::zeros(a.rows(), a.cols() + b.cols());
    for r in 0..a.rows() {
        let row = out.row_mut(r);
        row[..a.cols()].copy_from_slice(a.row(r));
        row[a.cols()..].copy_from_slice(b.row(r));
    }
    Ok(out)
}

/// Splits the upstream gradient of a concat back into the two input slices.
pub fn concat_backward(upstream: &Matrix, a_cols: usize) -> Result<(Matrix, Matrix)> {
    if a_cols > upstream.cols() {
        return Err(AdrnetError::Dim(format!(
            "concat backward: split at {} exceeds width {}",
            a_cols,
            upstream.cols()
        )));
    }
    let b_cols = upstream.cols() - a_cols;
    let mut ga = Matrix::zeros(upstream.rows(), a_cols);
    let mut gb = Matrix::zeros(upstream.rows(), b_cols);
    for r in 0..upstream.rows() {
        let row = upstream.row(r);
        ga.row_mut(r).copy_from_slice(&row[..a_cols]);
        gb.row_mut(r).copy_from_slice(&row[a_cols..]);
    }
    Ok((ga, gb))
}

// ---------------------------------------------------------------------------
// elementwise product
// ---------------------------------------------------------------------------

pub fn elementwise_product(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    a.check_same_shape(b, "elementwise product")?;
    let mut out = a.clone();
    for (o, &bv) in out.values_mut().iter_mut().zip(b.values().iter()) {
        *o *= bv;
    }
    Ok(out)
}

/// Backward of a ⊙ b: (upstream ⊙ b, upstream ⊙ a).
pub fn elementwise_product_backward(
    a: &Matrix,
    b: &Matrix,
    upstream: &Matrix,
) -> Result<(Matrix, Matrix)> {
    a.check_same_shape(b, "elementwise product backward")?;
    a.check_same_shape(upstream, "elementwise product backward upstream")?;
    Ok((elementwise_product(upstream, b)?, elementwise_product(upstream, a)?))
}

// ---------------------------------------------------------------------------
// binary cross entropy
// ---------------------------------------------------------------------------

/// BCE summed over the batch (not averaged): -sum y log yhat + (1-y) log(1-yhat).
/// Predictions are clamped to [EPS_LOGIT, 1 - EPS_LOGIT] before the logs.
pub fn bce_loss(y_hat: &[f64], y: &[f64]) -> Result<f64> {
    if y_hat.len() != y.len() {
        return Err(AdrnetError::Dim(format!(
            "bce: {} predictions vs {} labels",
            y_hat.len(),
            y.len()
        )));
    }
    let mut loss = 0.0;
    for (&p, &label) in y_hat.iter().zip(y.iter()) {
        let p = p.clamp(EPS_LOGIT, 1.0 - EPS_LOGIT);
        loss -= label * p.ln() + (1.0 - label) * (1.0 - p).ln();
    }
    Ok(loss)
}

/// d loss / d y_hat per element. Predictions at or beyond the clamp bounds
/// sit on the flat part of the clamped loss, so their gradient is zero.
pub fn bce_backward(y_hat: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    if y_hat.len() != y.len() {
        return Err(AdrnetError::Dim(format!(
            "bce backward: {} predictions vs {} labels",
            y_hat.len(),
            y.len()
        )));
    }
    Ok(y_hat
        .iter()
        .zip(y.iter())
        .map(|(&p, &label)| {
            if p <= EPS_LOGIT || p >= 1.0 - EPS_LOGIT {
                0.0
            } else {
                (p - label) / (p * (1.0 - p))
            }
        })
        .collect())
}
