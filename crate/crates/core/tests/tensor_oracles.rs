//! Forward kernels against independent naive-loop oracles.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use saliency_core::tensor::{
    bilinear_upsample, conv2d, finite_diff_grad, linear, maxpool2d, relu, sgd_step,
    softmax_cross_entropy, Parameter, Tensor,
};

fn rand_tensor(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor {
    let data = (0..shape.iter().product::<usize>())
        .map(|_| rng.gen_range(-1.0..1.0))
        .collect();
    Tensor::new(shape, data).unwrap()
}

/// Direct six-nested-loop convolution, accumulating bias then
/// (channel, kernel-row, kernel-col) contributions per output element.
fn conv2d_oracle(
    input: &Tensor,
    weight: &Tensor,
    bias: &Tensor,
    stride: usize,
    pad: usize,
) -> Tensor {
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
    let oh = (h + 2 * pad - kh) / stride + 1;
    let ow = (w + 2 * pad - kw) / stride + 1;
    let mut out = Tensor::zeros(&[n, cout, oh, ow]);
    for ni in 0..n {
        for co in 0..cout {
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut acc = bias.data()[co];
                    for ci in 0..cin {
                        for ky in 0..kh {
                            for kx in 0..kw {
                                let iy = (oy * stride + ky) as isize - pad as isize;
                                let ix = (ox * stride + kx) as isize - pad as isize;
                                if iy < 0 || ix < 0 || iy >= h as isize || ix >= w as isize {
                                    continue;
                                }
                                let xv = input.data()
                                    [((ni * cin + ci) * h + iy as usize) * w + ix as usize];
                                let wv = weight.data()[((co * cin + ci) * kh + ky) * kw + kx];
                                acc += wv * xv;
                            }
                        }
                    }
                    out.data_mut()[((ni * cout + co) * oh + oy) * ow + ox] = acc;
                }
            }
        }
    }
    out
}

#[test]
fn conv_all_ones_sums_window() {
    let input = Tensor::full(&[1, 1, 3, 3], 1.0);
    let weight = Tensor::full(&[1, 1, 3, 3], 1.0);
    let bias = Tensor::zeros(&[1]);
    let out = conv2d(&input, &weight, &bias, 1, 0).unwrap();
    assert_eq!(out.shape(), &[1, 1, 1, 1]);
    assert_eq!(out.data()[0], 9.0);
}

#[test]
fn conv_zero_kernel_gives_bias() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let input = rand_tensor(&mut rng, &[2, 3, 6, 6]);
    let weight = Tensor::zeros(&[4, 3, 3, 3]);
    let bias = Tensor::new(&[4], vec![0.5, -1.0, 2.0, 0.0]).unwrap();
    let out = conv2d(&input, &weight, &bias, 1, 1).unwrap();
    for co in 0..4 {
        for i in 0..36 {
            assert_eq!(out.data()[(co * 36) + i], bias.data()[co]);
            assert_eq!(out.data()[(4 + co) * 36 + i], bias.data()[co]);
        }
    }
}

#[test]
fn conv_matches_naive_oracle_bit_identical() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    // The spec's fixed case first.
    let input = rand_tensor(&mut rng, &[1, 2, 5, 5]);
    let weight = rand_tensor(&mut rng, &[3, 2, 3, 3]);
    let bias = rand_tensor(&mut rng, &[3]);
    let got = conv2d(&input, &weight, &bias, 2, 1).unwrap();
    let want = conv2d_oracle(&input, &weight, &bias, 2, 1);
    assert_eq!(got, want);

    for case in 0..120 {
        let n = rng.gen_range(1..=2);
        let cin = rng.gen_range(1..=3);
        let cout = rng.gen_range(1..=3);
        let k = rng.gen_range(1..=3);
        let stride = rng.gen_range(1..=2);
        let pad = rng.gen_range(0..=1);
        let h = rng.gen_range(k..=7);
        let w = rng.gen_range(k..=7);
        let input = rand_tensor(&mut rng, &[n, cin, h, w]);
        let weight = rand_tensor(&mut rng, &[cout, cin, k, k]);
        let bias = rand_tensor(&mut rng, &[cout]);
        let got = conv2d(&input, &weight, &bias, stride, pad).unwrap();
        let want = conv2d_oracle(&input, &weight, &bias, stride, pad);
        assert_eq!(got, want, "case {case} diverged from the loop oracle");
    }
}

#[test]
fn conv_rejects_mismatched_channels() {
    let input = Tensor::zeros(&[1, 2, 4, 4]);
    let weight = Tensor::zeros(&[1, 3, 3, 3]);
    let bias = Tensor::zeros(&[1]);
    let err = conv2d(&input, &weight, &bias, 1, 0).unwrap_err();
    assert!(err.to_string().contains("in_channels"), "got: {err}");
}

#[test]
fn relu_definition_and_identity_region() {
    let x = Tensor::new(&[3], vec![-1.0, 0.0, 2.0]).unwrap();
    assert_eq!(relu(&x).data(), &[0.0, 0.0, 2.0]);
    let y = Tensor::new(&[4], vec![0.0, 1.0, 2.5, 0.1]).unwrap();
    assert_eq!(relu(&y), y);
}

fn maxpool_oracle(x: &Tensor, k: usize, stride: usize) -> Tensor {
    let (n, c, h, w) = (x.shape()[0], x.shape()[1], x.shape()[2], x.shape()[3]);
    let oh = (h - k) / stride + 1;
    let ow = (w - k) / stride + 1;
    let mut out = Tensor::zeros(&[n, c, oh, ow]);
    for ni in 0..n {
        for ci in 0..c {
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut best = f64::NEG_INFINITY;
                    for ky in 0..k {
                        for kx in 0..k {
                            let v = x.data()
                                [((ni * c + ci) * h + oy * stride + ky) * w + ox * stride + kx];
                            if v > best {
                                best = v;
                            }
                        }
                    }
                    out.data_mut()[((ni * c + ci) * oh + oy) * ow + ox] = best;
                }
            }
        }
    }
    out
}

#[test]
fn maxpool_trivial_and_oracle() {
    let x = Tensor::new(&[1, 1, 2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
    let (out, _) = maxpool2d(&x, 2, 2).unwrap();
    assert_eq!(out.data(), &[4.0]);

    let c = Tensor::full(&[1, 2, 4, 4], 0.7);
    let (out, _) = maxpool2d(&c, 2, 2).unwrap();
    assert!(out.data().iter().all(|&v| v == 0.7));

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..120 {
        let k = rng.gen_range(1..=3);
        let stride = rng.gen_range(1..=3);
        let h = rng.gen_range(k..=8);
        let w = rng.gen_range(k..=8);
        let x = rand_tensor(&mut rng, &[1, 2, h, w]);
        let (got, _) = maxpool2d(&x, k, stride).unwrap();
        assert_eq!(got, maxpool_oracle(&x, k, stride));
    }
    let x6 = rand_tensor(&mut rng, &[1, 1, 6, 6]);
    let (got, _) = maxpool2d(&x6, 3, 3).unwrap();
    assert_eq!(got, maxpool_oracle(&x6, 3, 3));
}

fn linear_oracle(x: &Tensor, w: &Tensor, b: &Tensor) -> Tensor {
    let (n, d) = (x.shape()[0], x.shape()[1]);
    let k = w.shape()[0];
    let mut out = Tensor::zeros(&[n, k]);
    for ni in 0..n {
        for ki in 0..k {
            let mut acc = b.data()[ki];
            for i in 0..d {
                acc += x.data()[ni * d + i] * w.data()[ki * d + i];
            }
            out.data_mut()[ni * k + ki] = acc;
        }
    }
    out
}

#[test]
fn linear_identity_zero_and_oracle() {
    let x = Tensor::new(&[2, 3], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
    let eye = Tensor::new(
        &[3, 3],
        vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
    )
    .unwrap();
    let zero_bias = Tensor::zeros(&[3]);
    assert_eq!(linear(&x, &eye, &zero_bias).unwrap(), x);

    let zero_w = Tensor::zeros(&[2, 3]);
    let b = Tensor::new(&[2], vec![0.25, -0.5]).unwrap();
    let out = linear(&x, &zero_w, &b).unwrap();
    assert_eq!(out.data(), &[0.25, -0.5, 0.25, -0.5]);

    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..120 {
        let n = rng.gen_range(1..=4);
        let d = rng.gen_range(1..=6);
        let k = rng.gen_range(1..=5);
        let x = rand_tensor(&mut rng, &[n, d]);
        let w = rand_tensor(&mut rng, &[k, d]);
        let b = rand_tensor(&mut rng, &[k]);
        assert_eq!(
            linear(&x, &w, &b).unwrap(),
            linear_oracle(&x, &w, &b)
        );
    }
    // The spec's 2x3 by 4x3 case.
    let x = rand_tensor(&mut rng, &[2, 3]);
    let w = rand_tensor(&mut rng, &[4, 3]);
    let b = rand_tensor(&mut rng, &[4]);
    assert_eq!(linear(&x, &w, &b).unwrap(), linear_oracle(&x, &w, &b));
}

#[test]
fn bilinear_constant_and_single_pixel() {
    let c = Tensor::full(&[1, 1, 3, 3], 0.4);
    let up = bilinear_upsample(&c, 9, 7).unwrap();
    assert!(up.data().iter().all(|&v| v == 0.4));

    let single = Tensor::full(&[1, 1, 1, 1], 0.9);
    let up = bilinear_upsample(&single, 4, 4).unwrap();
    assert_eq!(up.shape(), &[1, 1, 4, 4]);
    assert!(up.data().iter().all(|&v| v == 0.9));
}

#[test]
fn bilinear_half_pixel_convention_hand_case() {
    // 2x2 [[0,1],[0,1]] -> each 4x4 row is [0, 0.25, 0.75, 1].
    let x = Tensor::new(&[1, 1, 2, 2], vec![0.0, 1.0, 0.0, 1.0]).unwrap();
    let up = bilinear_upsample(&x, 4, 4).unwrap();
    for row in 0..4 {
        let r = &up.data()[row * 4..(row + 1) * 4];
        assert!((r[0] - 0.0).abs() < 1e-12);
        assert!((r[1] - 0.25).abs() < 1e-12);
        assert!((r[2] - 0.75).abs() < 1e-12);
        assert!((r[3] - 1.0).abs() < 1e-12);
    }
}

#[test]
fn bilinear_stays_within_input_range() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..50 {
        let h = rng.gen_range(1..=5);
        let w = rng.gen_range(1..=5);
        let x = rand_tensor(&mut rng, &[1, 1, h, w]);
        let oh = rng.gen_range(h..=2 * h + 3);
        let ow = rng.gen_range(w..=2 * w + 3);
        let up = bilinear_upsample(&x, oh, ow).unwrap();
        let (lo, hi) = (
            x.data().iter().cloned().fold(f64::INFINITY, f64::min),
            x.data().iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        );
        for &v in up.data() {
            assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
        }
    }
}

#[test]
fn cross_entropy_uniform_saturated_and_formula() {
    let logits = Tensor::full(&[2, 4], 0.3);
    let loss = softmax_cross_entropy(&logits, &[0, 3]).unwrap();
    assert!((loss - 4.0f64.ln()).abs() < 1e-12);

    let mut hot = Tensor::zeros(&[1, 5]);
    hot.data_mut()[2] = 30.0;
    let loss = softmax_cross_entropy(&hot, &[2]).unwrap();
    assert!(loss < 1e-9);

    // Direct formula oracle on random 3x5 logits.
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let logits = rand_tensor(&mut rng, &[3, 5]);
    let labels = [4usize, 0, 2];
    let got = softmax_cross_entropy(&logits, &labels).unwrap();
    let mut want = 0.0;
    for (ni, &label) in labels.iter().enumerate() {
        let row = &logits.data()[ni * 5..(ni + 1) * 5];
        let denom: f64 = row.iter().map(|&v| v.exp()).sum();
        want += -(row[label].exp() / denom).ln();
    }
    want /= 3.0;
    assert!((got - want).abs() < 1e-12, "got {got}, want {want}");
}

#[test]
fn cross_entropy_rejects_out_of_range_label() {
    let logits = Tensor::zeros(&[2, 3]);
    let err = softmax_cross_entropy(&logits, &[0, 3]).unwrap_err();
    assert!(err.to_string().contains("out of range"));
}

#[test]
fn sgd_step_cases() {
    // Zero grads and lr=0 leave values unchanged.
    let mut p = Parameter::new("p", Tensor::new(&[3], vec![1.0, -2.0, 0.5]).unwrap());
    let before = p.value.clone();
    sgd_step(&mut [&mut p], 0.1);
    assert_eq!(p.value, before);

    let mut q = Parameter::new("q", before.clone());
    q.grad = Tensor::new(&[3], vec![1.0, 1.0, 1.0]).unwrap();
    sgd_step(&mut [&mut q], 0.0);
    assert_eq!(q.value, before);
    assert!(q.grad.data().iter().all(|&g| g == 0.0));

    // One step on f(x) = x^2 at x=3 with lr 0.1: x' = 3 - 0.1*6 = 2.4.
    let mut r = Parameter::new("r", Tensor::scalar(3.0));
    r.grad = Tensor::scalar(6.0);
    sgd_step(&mut [&mut r], 0.1);
    assert!((r.value.item() - 2.4).abs() < 1e-15);
}

#[test]
fn finite_diff_sanity() {
    let x = Tensor::new(&[4], vec![0.3, -0.2, 0.9, 0.0]).unwrap();
    let g = finite_diff_grad(&mut |t| t.sum(), &x, 1e-5);
    for &v in g.data() {
        assert!((v - 1.0).abs() < 1e-9);
    }
    let x3 = Tensor::scalar(3.0);
    let g = finite_diff_grad(&mut |t| t.item() * t.item(), &x3, 1e-5);
    assert!((g.item() - 6.0).abs() < 1e-8);
}

#[test]
fn ops_are_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let x = rand_tensor(&mut rng, &[1, 2, 6, 6]);
    let w = rand_tensor(&mut rng, &[3, 2, 3, 3]);
    let b = rand_tensor(&mut rng, &[3]);
    let a = conv2d(&x, &w, &b, 1, 1).unwrap();
    let b2 = conv2d(&x, &w, &b, 1, 1).unwrap();
    assert_eq!(a, b2);
}
