//! 3×3 cross-correlation via im2col and GEMM. The column matrix built in the
//! forward pass is the backward pass's cache.

use crate::tensor::{gemm_a_bt_acc, gemm_acc, gemm_at_b_acc, Scalar, Tensor};
use crate::ShapeMismatch;

pub const KERNEL: usize = 3;

/// Output spatial size for kernel 3: floor((n + 2·pad − 3)/stride) + 1.
pub fn conv_out(n: usize, stride: usize, pad: usize) -> usize {
    (n + 2 * pad - KERNEL) / stride + 1
}

/// im2col matrix: K = C_in·9 rows, N = Ho·Wo columns; out-of-bounds taps
/// read as zero padding.
pub struct Col<S> {
    pub data: Vec<S>,
    pub k: usize,
    pub n: usize,
    pub c_in: usize,
    pub h: usize,
    pub w: usize,
    pub stride: usize,
    pub pad: usize,
}

fn build_col<S: Scalar>(
    input: &[S],
    c_in: usize,
    h: usize,
    w: usize,
    stride: usize,
    pad: usize,
) -> Col<S> {
    let (ho, wo) = (conv_out(h, stride, pad), conv_out(w, stride, pad));
    let (k, n) = (c_in * KERNEL * KERNEL, ho * wo);
    let mut data = vec![S::ZERO; k * n];
    for c in 0..c_in {
        let plane = &input[c * h * w..(c + 1) * h * w];
        for ky in 0..KERNEL {
            for kx in 0..KERNEL {
                let row = &mut data[(c * KERNEL * KERNEL + ky * KERNEL + kx) * n..][..n];
                for oy in 0..ho {
                    let iy = (oy * stride + ky) as isize - pad as isize;
                    if iy < 0 || iy >= h as isize {
                        continue;
                    }
                    for ox in 0..wo {
                        let ix = (ox * stride + kx) as isize - pad as isize;
                        if ix >= 0 && ix < w as isize {
                            row[oy * wo + ox] = plane[iy as usize * w + ix as usize];
                        }
                    }
                }
            }
        }
    }
    Col { data, k, n, c_in, h, w, stride, pad }
}

/// Forward cross-correlation. `input` is (C_in, H, W), `weight` is
/// (C_out, C_in, 3, 3); returns the (C_out, Ho, Wo) output and the column
/// cache for the backward pass.
pub fn conv2d_fwd<S: Scalar>(
    input: &Tensor<S>,
    weight: &Tensor<S>,
    stride: usize,
    pad: usize,
) -> Result<(Tensor<S>, Col<S>), ShapeMismatch> {
    let [c_in, h, w]: [usize; 3] = input.shape.clone().try_into().map_err(|_| ShapeMismatch {
        context: format!("conv input must be rank 3, got {:?}", input.shape),
    })?;
    if weight.shape.len() != 4
        || weight.shape[1] != c_in
        || weight.shape[2] != KERNEL
        || weight.shape[3] != KERNEL
    {
        return Err(ShapeMismatch {
            context: format!(
                "conv weight {:?} incompatible with input {:?}",
                weight.shape, input.shape
            ),
        });
    }
    let c_out = weight.shape[0];
    let col = build_col(&input.data, c_in, h, w, stride, pad);
    let mut out = Tensor::zeros(vec![c_out, conv_out(h, stride, pad), conv_out(w, stride, pad)]);
    gemm_acc(c_out, col.k, col.n, &weight.data, &col.data, &mut out.data);
    out.assert_finite("conv2d_fwd");
    Ok((out, col))
}

/// Backward pass: gradients w.r.t. input and weight from the output grad and
/// the forward column cache.
pub fn conv2d_bwd<S: Scalar>(
    col: &Col<S>,
    weight: &Tensor<S>,
    dout: &Tensor<S>,
) -> (Tensor<S>, Tensor<S>) {
    let c_out = weight.shape[0];
    assert_eq!(dout.numel(), c_out * col.n, "conv2d_bwd grad shape");

    let mut dweight = Tensor::zeros(weight.shape.clone());
    gemm_a_bt_acc(c_out, col.n, col.k, &dout.data, &col.data, &mut dweight.data);

    // dcol = Wᵀ · dout, then scatter-add back through the padding pattern.
    let mut dcol = vec![S::ZERO; col.k * col.n];
    gemm_at_b_acc(col.k, c_out, col.n, &weight.data, &dout.data, &mut dcol);

    let (ho, wo) = (conv_out(col.h, col.stride, col.pad), conv_out(col.w, col.stride, col.pad));
    let mut dinput = Tensor::zeros(vec![col.c_in, col.h, col.w]);
    for c in 0..col.c_in {
        let plane = &mut dinput.data[c * col.h * col.w..(c + 1) * col.h * col.w];
        for ky in 0..KERNEL {
            for kx in 0..KERNEL {
                let row = &dcol[(c * KERNEL * KERNEL + ky * KERNEL + kx) * col.n..][..col.n];
                for oy in 0..ho {
                    let iy = (oy * col.stride + ky) as isize - col.pad as isize;
                    if iy < 0 || iy >= col.h as isize {
                        continue;
                    }
                    for ox in 0..wo {
                        let ix = (ox * col.stride + kx) as isize - col.pad as isize;
                        if ix >= 0 && ix < col.w as isize {
                            plane[iy as usize * col.w + ix as usize] += row[oy * wo + ox];
                        }
                    }
                }
            }
        }
    }
    (dinput, dweight)
}
