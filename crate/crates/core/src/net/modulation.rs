//! The modulation layer: feature maps reweighted by a single-channel
//! saliency map with a skip connection, `out = R * S + R`.
//!
//! `S` broadcasts over the channel axis, so `S = 0` leaves the features
//! bit-identical (the skip-connection identity the rest of the design
//! leans on).

use crate::tensor::{Tape, Tensor, TensorError, Var};

fn check_shapes(r: &Tensor, s: &Tensor) -> Result<(), TensorError> {
    if r.shape().len() != 4 {
        return Err(TensorError::Rank {
            op: "modulate",
            expected: 4,
            got: r.shape().to_vec(),
        });
    }
    if s.shape().len() != 4 {
        return Err(TensorError::Rank {
            op: "modulate",
            expected: 4,
            got: s.shape().to_vec(),
        });
    }
    if s.shape()[1] != 1 {
        return Err(TensorError::DimMismatch {
            op: "modulate",
            dimension: "saliency_channels",
            expected: 1,
            got: s.shape()[1],
        });
    }
    if r.shape()[0] != s.shape()[0] {
        return Err(TensorError::DimMismatch {
            op: "modulate",
            dimension: "batch",
            expected: r.shape()[0],
            got: s.shape()[0],
        });
    }
    if r.shape()[2] != s.shape()[2] {
        return Err(TensorError::DimMismatch {
            op: "modulate",
            dimension: "height",
            expected: r.shape()[2],
            got: s.shape()[2],
        });
    }
    if r.shape()[3] != s.shape()[3] {
        return Err(TensorError::DimMismatch {
            op: "modulate",
            dimension: "width",
            expected: r.shape()[3],
            got: s.shape()[3],
        });
    }
    Ok(())
}

/// `out[n,c,y,x] = r[n,c,y,x] * s[n,0,y,x] + r[n,c,y,x]`.
pub fn modulate(r: &Tensor, s: &Tensor) -> Result<Tensor, TensorError> {
    check_shapes(r, s)?;
    let (n, c, h, w) = (r.shape()[0], r.shape()[1], r.shape()[2], r.shape()[3]);
    let plane = h * w;
    let mut out = Tensor::zeros(r.shape());
    let od = out.data_mut();
    let rd = r.data();
    let sd = s.data();
    for ni in 0..n {
        let srow = &sd[ni * plane..(ni + 1) * plane];
        for ci in 0..c {
            let base = (ni * c + ci) * plane;
            for i in 0..plane {
                let rv = rd[base + i];
                od[base + i] = rv * srow[i] + rv;
            }
        }
    }
    Ok(out)
}

/// Gradients of [`modulate`]: `dR = g * (S + 1)`, `dS = sum_C g * R`.
pub fn modulate_grads(
    r: &Tensor,
    s: &Tensor,
    grad_out: &Tensor,
    need_r: bool,
    need_s: bool,
) -> (Option<Tensor>, Option<Tensor>) {
    let (n, c, h, w) = (r.shape()[0], r.shape()[1], r.shape()[2], r.shape()[3]);
    let plane = h * w;
    let g = grad_out.data();
    let gr = need_r.then(|| {
        let mut gr = Tensor::zeros(r.shape());
        let grd = gr.data_mut();
        for ni in 0..n {
            let srow = &s.data()[ni * plane..(ni + 1) * plane];
            for ci in 0..c {
                let base = (ni * c + ci) * plane;
                for i in 0..plane {
                    grd[base + i] = g[base + i] * (srow[i] + 1.0);
                }
            }
        }
        gr
    });
    let gs = need_s.then(|| {
        let mut gs = Tensor::zeros(s.shape());
        let gsd = gs.data_mut();
        for ni in 0..n {
            for ci in 0..c {
                let base = (ni * c + ci) * plane;
                for i in 0..plane {
                    gsd[ni * plane + i] += g[base + i] * r.data()[base + i];
                }
            }
        }
        gs
    });
    (gr, gs)
}

/// Records a modulation node on the tape.
pub fn modulate_op(tape: &mut Tape, r: Var, s: Var) -> Result<Var, TensorError> {
    let value = modulate(tape.value(r), tape.value(s))?;
    Ok(tape.push_op(
        value,
        vec![r, s],
        Box::new(|ctx| {
            let (gr, gs) = modulate_grads(
                ctx.parents[0],
                ctx.parents[1],
                ctx.grad,
                ctx.needs[0],
                ctx.needs[1],
            );
            vec![gr, gs]
        }),
    ))
}
