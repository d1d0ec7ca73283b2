//! Forward kernels and their hand-written gradients.
//!
//! Convolution uses cross-correlation semantics (no kernel flip). Each output
//! element accumulates contributions in `(channel, kernel-row, kernel-col)`
//! order starting from the bias, which keeps results reproducible across
//! refactors and identical to a naive nested-loop evaluation.

use super::{Tensor, TensorError};

/// Output spatial dims for a convolution: `floor((in + 2*pad - k)/stride) + 1`.
pub fn conv2d_output_dims(
    in_h: usize,
    in_w: usize,
    kh: usize,
    kw: usize,
    stride: usize,
    pad: usize,
) -> Result<(usize, usize), TensorError> {
    if stride == 0 {
        return Err(TensorError::InvalidArgument {
            op: "conv2d",
            detail: "stride must be positive".into(),
        });
    }
    if kh > in_h + 2 * pad || kw > in_w + 2 * pad {
        return Err(TensorError::InvalidArgument {
            op: "conv2d",
            detail: format!(
                "kernel {}x{} larger than padded input {}x{}",
                kh,
                kw,
                in_h + 2 * pad,
                in_w + 2 * pad
            ),
        });
    }
    Ok((
        (in_h + 2 * pad - kh) / stride + 1,
        (in_w + 2 * pad - kw) / stride + 1,
    ))
}

fn expect_rank(t: &Tensor, op: &'static str, rank: usize) -> Result<(), TensorError> {
    if t.shape().len() != rank {
        return Err(TensorError::Rank {
            op,
            expected: rank,
            got: t.shape().to_vec(),
        });
    }
    Ok(())
}

/// Cross-correlation of `[N,Cin,H,W]` with `[Cout,Cin,kh,kw]` plus a per-channel bias.
pub fn conv2d(
    input: &Tensor,
    weight: &Tensor,
    bias: &Tensor,
    stride: usize,
    pad: usize,
) -> Result<Tensor, TensorError> {
    expect_rank(input, "conv2d", 4)?;
    expect_rank(weight, "conv2d", 4)?;
    expect_rank(bias, "conv2d", 1)?;
    let (n, cin, h, w) = (
        input.shape()[0],
        input.shape()[1],
        input.shape()[2],
        input.shape()[3],
    );
    let (cout, wcin, kh, kw) = (
        weight.shape()[0],
        weight.shape()[1],
        weight.shape()[2],
        weight.shape()[3],
    );
    if wcin != cin {
        return Err(TensorError::DimMismatch {
            op: "conv2d",
            dimension: "in_channels",
            expected: cin,
            got: wcin,
        });
    }
    if bias.shape()[0] != cout {
        return Err(TensorError::DimMismatch {
            op: "conv2d",
            dimension: "bias",
            expected: cout,
            got: bias.shape()[0],
        });
    }
    let (oh, ow) = conv2d_output_dims(h, w, kh, kw, stride, pad)?;
    let mut out = Tensor::zeros(&[n, cout, oh, ow]);
    let x = input.data();
    let wt = weight.data();
    let b = bias.data();
    let o = out.data_mut();
    for ni in 0..n {
        for (co, &bias_v) in b.iter().enumerate() {
            for oy in 0..oh {
                let orow = ((ni * cout + co) * oh + oy) * ow;
                o[orow..orow + ow].fill(bias_v);
                for ci in 0..cin {
                    for ky in 0..kh {
                        let iy = (oy * stride + ky) as isize - pad as isize;
                        if iy < 0 || iy >= h as isize {
                            continue;
                        }
                        let irow = ((ni * cin + ci) * h + iy as usize) * w;
                        let wrow = ((co * cin + ci) * kh + ky) * kw;
                        for kx in 0..kw {
                            let wv = wt[wrow + kx];
                            let (ox_lo, ox_hi) = valid_ox_range(kx, pad, stride, w, ow);
                            if ox_lo >= ox_hi {
                                continue;
                            }
                            let shift = kx as isize - pad as isize;
                            let ibase = (irow as isize + ox_lo as isize * stride as isize + shift)
                                as usize;
                            let dst = &mut o[orow + ox_lo..orow + ox_hi];
                            if stride == 1 {
                                let src = &x[ibase..ibase + dst.len()];
                                for (d, &s) in dst.iter_mut().zip(src) {
                                    *d += wv * s;
                                }
                            } else {
                                let src = &x[ibase..];
                                for (i, d) in dst.iter_mut().enumerate() {
                                    *d += wv * src[i * stride];
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Output-column range whose input column `ox*stride + kx - pad` is in `[0, w)`.
#[inline]
fn valid_ox_range(kx: usize, pad: usize, stride: usize, w: usize, ow: usize) -> (usize, usize) {
    let shift = kx as isize - pad as isize;
    let lo = if shift >= 0 {
        0
    } else {
        ((-shift) as usize).div_ceil(stride)
    };
    // Largest ox with ox*stride + shift <= w - 1.
    let hi_num = w as isize - 1 - shift;
    let hi = if hi_num < 0 {
        0
    } else {
        (hi_num as usize / stride + 1).min(ow)
    };
    (lo.min(ow), hi)
}

/// Gradients of [`conv2d`] w.r.t. input, weight, and bias.
///
/// `need_input`/`need_weight` skip the corresponding loops when a branch of
/// the network is frozen.
pub fn conv2d_grads(
    input: &Tensor,
    weight: &Tensor,
    grad_out: &Tensor,
    stride: usize,
    pad: usize,
    need_input: bool,
    need_weight: bool,
) -> (Option<Tensor>, Option<Tensor>, Tensor) {
    let (n, cin, h, w) = (
        input.shape()[0],
        input.shape()[1],
        input.shape()[2],
        input.shape()[3],
    );
    let (cout, _, kh, kw) = (
        weight.shape()[0],
        weight.shape()[1],
        weight.shape()[2],
        weight.shape()[3],
    );
    let (oh, ow) = (grad_out.shape()[2], grad_out.shape()[3]);
    let x = input.data();
    let wt = weight.data();
    let g = grad_out.data();

    let mut gb = Tensor::zeros(&[cout]);
    {
        let gbd = gb.data_mut();
        let plane = oh * ow;
        for ni in 0..n {
            for (co, acc) in gbd.iter_mut().enumerate() {
                let base = (ni * cout + co) * plane;
                *acc += g[base..base + plane].iter().sum::<f64>();
            }
        }
    }

    let mut gi = need_input.then(|| Tensor::zeros(&[n, cin, h, w]));
    let mut gw = need_weight.then(|| Tensor::zeros(&[cout, cin, kh, kw]));

    if let Some(gi) = gi.as_mut() {
        let gid = gi.data_mut();
        for ni in 0..n {
            for co in 0..cout {
                for oy in 0..oh {
                    let orow = ((ni * cout + co) * oh + oy) * ow;
                    for ci in 0..cin {
                        for ky in 0..kh {
                            let iy = (oy * stride + ky) as isize - pad as isize;
                            if iy < 0 || iy >= h as isize {
                                continue;
                            }
                            let irow = ((ni * cin + ci) * h + iy as usize) * w;
                            let wrow = ((co * cin + ci) * kh + ky) * kw;
                            for kx in 0..kw {
                                let wv = wt[wrow + kx];
                                let (ox_lo, ox_hi) = valid_ox_range(kx, pad, stride, w, ow);
                                if ox_lo >= ox_hi {
                                    continue;
                                }
                                let shift = kx as isize - pad as isize;
                                let ibase = (irow as isize
                                    + ox_lo as isize * stride as isize
                                    + shift) as usize;
                                let src = &g[orow + ox_lo..orow + ox_hi];
                                if stride == 1 {
                                    let dst = &mut gid[ibase..ibase + src.len()];
                                    for (d, &s) in dst.iter_mut().zip(src) {
                                        *d += wv * s;
                                    }
                                } else {
                                    let dst = &mut gid[ibase..];
                                    for (i, &s) in src.iter().enumerate() {
                                        dst[i * stride] += wv * s;
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    if let Some(gw) = gw.as_mut() {
        let gwd = gw.data_mut();
        for ni in 0..n {
            for co in 0..cout {
                for oy in 0..oh {
                    let orow = ((ni * cout + co) * oh + oy) * ow;
                    for ci in 0..cin {
                        for ky in 0..kh {
                            let iy = (oy * stride + ky) as isize - pad as isize;
                            if iy < 0 || iy >= h as isize {
                                continue;
                            }
                            let irow = ((ni * cin + ci) * h + iy as usize) * w;
                            let wrow = ((co * cin + ci) * kh + ky) * kw;
                            for kx in 0..kw {
                                let (ox_lo, ox_hi) = valid_ox_range(kx, pad, stride, w, ow);
                                if ox_lo >= ox_hi {
                                    continue;
                                }
                                let shift = kx as isize - pad as isize;
                                let ibase = (irow as isize
                                    + ox_lo as isize * stride as isize
                                    + shift) as usize;
                                let gout = &g[orow + ox_lo..orow + ox_hi];
                                let mut acc = 0.0;
                                if stride == 1 {
                                    let src = &x[ibase..ibase + gout.len()];
                                    for (&gv, &s) in gout.iter().zip(src) {
                                        acc += gv * s;
                                    }
                                } else {
                                    let src = &x[ibase..];
                                    for (i, &gv) in gout.iter().enumerate() {
                                        acc += gv * src[i * stride];
                                    }
                                }
                                gwd[wrow + kx] += acc;
                            }
                        }
                    }
                }
            }
        }
    }
    (gi, gw, gb)
}

pub fn relu(x: &Tensor) -> Tensor {
    x.map(|v| v.max(0.0))
}

pub fn relu_grad(x: &Tensor, grad_out: &Tensor) -> Tensor {
    let data = x
        .data()
        .iter()
        .zip(grad_out.data())
        .map(|(&v, &g)| if v > 0.0 { g } else { 0.0 })
        .collect();
    Tensor::new(x.shape(), data).expect("same shape")
}

/// Windowed max over `[N,C,H,W]`; returns the pooled tensor and the flat index
/// of the element each output came from. Ties go to the first element in
/// row-major order so gradient routing stays deterministic.
pub fn maxpool2d(x: &Tensor, k: usize, stride: usize) -> Result<(Tensor, Vec<usize>), TensorError> {
    expect_rank(x, "maxpool2d", 4)?;
    let (n, c, h, w) = (x.shape()[0], x.shape()[1], x.shape()[2], x.shape()[3]);
    if k == 0 || stride == 0 || k > h || k > w {
        return Err(TensorError::InvalidArgument {
            op: "maxpool2d",
            detail: format!("window {k} stride {stride} on {h}x{w} input"),
        });
    }
    let oh = (h - k) / stride + 1;
    let ow = (w - k) / stride + 1;
    let mut out = Tensor::zeros(&[n, c, oh, ow]);
    let mut argmax = vec![0usize; n * c * oh * ow];
    let xd = x.data();
    let od = out.data_mut();
    for ni in 0..n {
        for ci in 0..c {
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut best = f64::NEG_INFINITY;
                    let mut best_idx = 0usize;
                    for ky in 0..k {
                        for kx in 0..k {
                            let idx = ((ni * c + ci) * h + oy * stride + ky) * w
                                + ox * stride
                                + kx;
                            if xd[idx] > best {
                                best = xd[idx];
                                best_idx = idx;
                            }
                        }
                    }
                    let oidx = ((ni * c + ci) * oh + oy) * ow + ox;
                    od[oidx] = best;
                    argmax[oidx] = best_idx;
                }
            }
        }
    }
    Ok((out, argmax))
}

pub fn maxpool2d_grad(in_shape: &[usize], argmax: &[usize], grad_out: &Tensor) -> Tensor {
    let mut gi = Tensor::zeros(in_shape);
    let gid = gi.data_mut();
    for (o, &src) in argmax.iter().enumerate() {
        gid[src] += grad_out.data()[o];
    }
    gi
}

/// Affine map `x W^T + b` for `[N,D]` input and `[K,D]` weight.
pub fn linear(x: &Tensor, weight: &Tensor, bias: &Tensor) -> Result<Tensor, TensorError> {
    expect_rank(x, "linear", 2)?;
    expect_rank(weight, "linear", 2)?;
    expect_rank(bias, "linear", 1)?;
    let (n, d) = (x.shape()[0], x.shape()[1]);
    let (k, wd) = (weight.shape()[0], weight.shape()[1]);
    if wd != d {
        return Err(TensorError::DimMismatch {
            op: "linear",
            dimension: "in_features",
            expected: d,
            got: wd,
        });
    }
    if bias.shape()[0] != k {
        return Err(TensorError::DimMismatch {
            op: "linear",
            dimension: "bias",
            expected: k,
            got: bias.shape()[0],
        });
    }
    let mut out = Tensor::zeros(&[n, k]);
    let od = out.data_mut();
    for ni in 0..n {
        let xrow = &x.data()[ni * d..(ni + 1) * d];
        for ki in 0..k {
            let wrow = &weight.data()[ki * d..(ki + 1) * d];
            let mut acc = bias.data()[ki];
            for i in 0..d {
                acc += xrow[i] * wrow[i];
            }
            od[ni * k + ki] = acc;
        }
    }
    Ok(out)
}

pub fn linear_grads(
    x: &Tensor,
    weight: &Tensor,
    grad_out: &Tensor,
    need_input: bool,
    need_weight: bool,
) -> (Option<Tensor>, Option<Tensor>, Tensor) {
    let (n, d) = (x.shape()[0], x.shape()[1]);
    let k = weight.shape()[0];
    let g = grad_out.data();
    let mut gb = Tensor::zeros(&[k]);
    for ni in 0..n {
        for ki in 0..k {
            gb.data_mut()[ki] += g[ni * k + ki];
        }
    }
    let gi = need_input.then(|| {
        let mut gi = Tensor::zeros(&[n, d]);
        let gid = gi.data_mut();
        for ni in 0..n {
            for ki in 0..k {
                let gv = g[ni * k + ki];
                let wrow = &weight.data()[ki * d..(ki + 1) * d];
                for i in 0..d {
                    gid[ni * d + i] += gv * wrow[i];
                }
            }
        }
        gi
    });
    let gw = need_weight.then(|| {
        let mut gw = Tensor::zeros(&[k, d]);
        let gwd = gw.data_mut();
        for ni in 0..n {
            let xrow = &x.data()[ni * d..(ni + 1) * d];
            for ki in 0..k {
                let gv = g[ni * k + ki];
                for i in 0..d {
                    gwd[ki * d + i] += gv * xrow[i];
                }
            }
        }
        gw
    });
    (gi, gw, gb)
}

/// Source coordinate and blend weight for one output position under the
/// half-pixel-center convention: `src = (dst + 0.5) * scale - 0.5`, clamped.
#[inline]
pub(crate) fn bilinear_axis(dst: usize, scale: f64, in_len: usize) -> (usize, usize, f64) {
    let src = (dst as f64 + 0.5) * scale - 0.5;
    let src = src.clamp(0.0, (in_len - 1) as f64);
    let i0 = src.floor() as usize;
    let i1 = (i0 + 1).min(in_len - 1);
    (i0, i1, src - i0 as f64)
}

/// Bilinear upsample of a single-channel `[N,1,h,w]` map to `[N,1,outH,outW]`.
pub fn bilinear_upsample(x: &Tensor, out_h: usize, out_w: usize) -> Result<Tensor, TensorError> {
    expect_rank(x, "bilinear_upsample", 4)?;
    let (n, c, h, w) = (x.shape()[0], x.shape()[1], x.shape()[2], x.shape()[3]);
    if c != 1 {
        return Err(TensorError::DimMismatch {
            op: "bilinear_upsample",
            dimension: "channels",
            expected: 1,
            got: c,
        });
    }
    if out_h < h || out_w < w {
        return Err(TensorError::InvalidArgument {
            op: "bilinear_upsample",
            detail: format!("output {out_h}x{out_w} smaller than input {h}x{w}"),
        });
    }
    let sy = h as f64 / out_h as f64;
    let sx = w as f64 / out_w as f64;
    let mut out = Tensor::zeros(&[n, 1, out_h, out_w]);
    let od = out.data_mut();
    let xd = x.data();
    for ni in 0..n {
        for oy in 0..out_h {
            let (y0, y1, fy) = bilinear_axis(oy, sy, h);
            for ox in 0..out_w {
                let (x0, x1, fx) = bilinear_axis(ox, sx, w);
                let base = ni * h * w;
                let v = xd[base + y0 * w + x0] * (1.0 - fy) * (1.0 - fx)
                    + xd[base + y0 * w + x1] * (1.0 - fy) * fx
                    + xd[base + y1 * w + x0] * fy * (1.0 - fx)
                    + xd[base + y1 * w + x1] * fy * fx;
                od[ni * out_h * out_w + oy * out_w + ox] = v;
            }
        }
    }
    Ok(out)
}

pub fn bilinear_upsample_grad(in_h: usize, in_w: usize, grad_out: &Tensor) -> Tensor {
    let (n, out_h, out_w) = (
        grad_out.shape()[0],
        grad_out.shape()[2],
        grad_out.shape()[3],
    );
    let sy = in_h as f64 / out_h as f64;
    let sx = in_w as f64 / out_w as f64;
    let mut gi = Tensor::zeros(&[n, 1, in_h, in_w]);
    let gid = gi.data_mut();
    let g = grad_out.data();
    for ni in 0..n {
        for oy in 0..out_h {
            let (y0, y1, fy) = bilinear_axis(oy, sy, in_h);
            for ox in 0..out_w {
                let (x0, x1, fx) = bilinear_axis(ox, sx, in_w);
                let gv = g[ni * out_h * out_w + oy * out_w + ox];
                let base = ni * in_h * in_w;
                gid[base + y0 * in_w + x0] += gv * (1.0 - fy) * (1.0 - fx);
                gid[base + y0 * in_w + x1] += gv * (1.0 - fy) * fx;
                gid[base + y1 * in_w + x0] += gv * fy * (1.0 - fx);
                gid[base + y1 * in_w + x1] += gv * fy * fx;
            }
        }
    }
    gi
}

/// Spatial mean over `[N,C,H,W]`, producing `[N,C]`.
pub fn global_avg_pool(x: &Tensor) -> Result<Tensor, TensorError> {
    expect_rank(x, "global_avg_pool", 4)?;
    let (n, c, h, w) = (x.shape()[0], x.shape()[1], x.shape()[2], x.shape()[3]);
    let mut out = Tensor::zeros(&[n, c]);
    let inv = 1.0 / (h * w) as f64;
    for ni in 0..n {
        for ci in 0..c {
            let base = (ni * c + ci) * h * w;
            out.data_mut()[ni * c + ci] = x.data()[base..base + h * w].iter().sum::<f64>() * inv;
        }
    }
    Ok(out)
}

pub fn global_avg_pool_grad(in_shape: &[usize], grad_out: &Tensor) -> Tensor {
    let (n, c, h, w) = (in_shape[0], in_shape[1], in_shape[2], in_shape[3]);
    let inv = 1.0 / (h * w) as f64;
    let mut gi = Tensor::zeros(in_shape);
    for ni in 0..n {
        for ci in 0..c {
            let gv = grad_out.data()[ni * c + ci] * inv;
            let base = (ni * c + ci) * h * w;
            for v in &mut gi.data_mut()[base..base + h * w] {
                *v = gv;
            }
        }
    }
    gi
}

/// Row-wise softmax of `[N,K]` logits, computed with max subtraction.
pub fn softmax(logits: &Tensor) -> Result<Tensor, TensorError> {
    expect_rank(logits, "softmax", 2)?;
    let (n, k) = (logits.shape()[0], logits.shape()[1]);
    let mut out = Tensor::zeros(&[n, k]);
    for ni in 0..n {
        let row = &logits.data()[ni * k..(ni + 1) * k];
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for (i, &v) in row.iter().enumerate() {
            let e = (v - max).exp();
            out.data_mut()[ni * k + i] = e;
            sum += e;
        }
        for v in &mut out.data_mut()[ni * k..(ni + 1) * k] {
            *v /= sum;
        }
    }
    Ok(out)
}

/// Mean over the batch of `-log softmax(logits)[label]`.
pub fn softmax_cross_entropy(logits: &Tensor, labels: &[usize]) -> Result<f64, TensorError> {
    expect_rank(logits, "softmax_cross_entropy", 2)?;
    let (n, k) = (logits.shape()[0], logits.shape()[1]);
    if labels.len() != n {
        return Err(TensorError::DimMismatch {
            op: "softmax_cross_entropy",
            dimension: "labels",
            expected: n,
            got: labels.len(),
        });
    }
    let mut loss = 0.0;
    for (ni, &label) in labels.iter().enumerate() {
        if label >= k {
            return Err(TensorError::LabelOutOfRange {
                index: ni,
                label,
                classes: k,
            });
        }
        let row = &logits.data()[ni * k..(ni + 1) * k];
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let logsum = row.iter().map(|&v| (v - max).exp()).sum::<f64>().ln();
        loss += -(row[label] - max - logsum);
    }
    Ok(loss / n as f64)
}

/// Gradient of [`softmax_cross_entropy`] w.r.t. the logits:
/// `(softmax - onehot) / N`.
pub fn softmax_cross_entropy_grad(
    logits: &Tensor,
    labels: &[usize],
) -> Result<Tensor, TensorError> {
    let (n, k) = (logits.shape()[0], logits.shape()[1]);
    let mut grad = softmax(logits)?;
    let inv = 1.0 / n as f64;
    for (ni, &label) in labels.iter().enumerate() {
        grad.data_mut()[ni * k + label] -= 1.0;
    }
    Ok(grad.scale(inv))
}
