use super::{join, kaiming_uniform, NamedTensor, Parameterized};
use crate::error::{shape_err, Result};
use crate::tensor::{axpy, dot, Element, Tensor};

/// Stride-1 cross-correlation with zero "same" padding of `(k-1)/2` on both
/// sides, so the time extent is preserved.
///
/// Shapes: `x [N × C_in × T]`, `weight [C_out × C_in × k]`, `bias [C_out]`.
pub fn conv1d_same<T: Element>(x: &Tensor<T>, weight: &Tensor<T>, bias: &Tensor<T>) -> Result<Tensor<T>> {
    let (xs, ws) = (x.shape(), weight.shape());
    if xs.len() != 3 || ws.len() != 3 {
        return shape_err(format!("conv1d expects x [N, C, T] and weight [O, C, k], got {xs:?} and {ws:?}"));
    }
    let (n, cin, t) = (xs[0], xs[1], xs[2]);
    let (cout, wcin, k) = (ws[0], ws[1], ws[2]);
    if wcin != cin {
        return shape_err(format!("conv1d input has {cin} channels, kernel expects {wcin}"));
    }
    if k % 2 == 0 {
        return shape_err(format!("conv1d same padding needs an odd kernel, got {k}"));
    }
    if bias.shape() != [cout] {
        return shape_err(format!("conv1d bias must be [{cout}], got {:?}", bias.shape()));
    }
    let pad = (k - 1) / 2;
    let geom = Geometry { n, cin, cout, t, k, pad };

    let mut out = vec![T::zero(); n * cout * t];
    {
        let (xd, wd, bd) = (x.data(), weight.data(), bias.data());
        for ni in 0..n {
            for o in 0..cout {
                let row = &mut out[(ni * cout + o) * t..(ni * cout + o + 1) * t];
                row.iter_mut().for_each(|v| *v = bd[o]);
                for c in 0..cin {
                    let xrow = &xd[(ni * cin + c) * t..(ni * cin + c + 1) * t];
                    for j in 0..k {
                        let (dst, src) = geom.tap(j);
                        axpy(wd[(o * cin + c) * k + j], &xrow[src], &mut row[dst]);
                    }
                }
            }
        }
    }

    Ok(Tensor::from_op(
        vec![n, cout, t],
        out,
        "conv1d_same",
        vec![x.clone(), weight.clone(), bias.clone()],
        move |g, ps| {
            let Geometry { n, cin, cout, t, k, .. } = geom;
            let (px, pw, pb) = (&ps[0], &ps[1], &ps[2]);
            let gx = px.requires_grad().then(|| {
                let wd = pw.data();
                let mut gx = vec![T::zero(); n * cin * t];
                for ni in 0..n {
                    for o in 0..cout {
                        let grow = &g[(ni * cout + o) * t..(ni * cout + o + 1) * t];
                        for c in 0..cin {
                            let dst_row = &mut gx[(ni * cin + c) * t..(ni * cin + c + 1) * t];
                            for j in 0..k {
                                let (out_range, in_range) = geom.tap(j);
                                axpy(wd[(o * cin + c) * k + j], &grow[out_range], &mut dst_row[in_range]);
                            }
                        }
                    }
                }
                gx
            });
            let gw = pw.requires_grad().then(|| {
                let xd = px.data();
                let mut gw = vec![T::zero(); cout * cin * k];
                for ni in 0..n {
                    for o in 0..cout {
                        let grow = &g[(ni * cout + o) * t..(ni * cout + o + 1) * t];
                        for c in 0..cin {
                            let xrow = &xd[(ni * cin + c) * t..(ni * cin + c + 1) * t];
                            for j in 0..k {
                                let (out_range, in_range) = geom.tap(j);
                                gw[(o * cin + c) * k + j] += dot(&grow[out_range], &xrow[in_range]);
                            }
                        }
                    }
                }
                gw
            });
            let gb = pb.requires_grad().then(|| {
                let mut gb = vec![T::zero(); cout];
                for ni in 0..n {
                    for (o, acc) in gb.iter_mut().enumerate() {
                        *acc += g[(ni * cout + o) * t..(ni * cout + o + 1) * t].iter().copied().sum::<T>();
                    }
                }
                gb
            });
            vec![gx, gw, gb]
        },
    ))
}

#[derive(Clone, Copy)]
struct Geometry {
    n: usize,
    cin: usize,
    cout: usize,
    t: usize,
    k: usize,
    pad: usize,
}

impl Geometry {
    /// For kernel tap `j`: the output positions it contributes to and the
    /// matching input positions (`input = output + j - pad`).
    fn tap(&self, j: usize) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
        let shift = j as isize - self.pad as isize;
        let t = self.t as isize;
        let lo = (-shift).max(0);
        let hi = (t - shift).min(t);
        if lo >= hi {
            return (0..0, 0..0);
        }
        (lo as usize..hi as usize, (lo + shift) as usize..(hi + shift) as usize)
    }
}

/// 1-D convolution layer with odd kernel width and same padding.
#[derive(Debug, Clone)]
pub struct Conv1dLayer<T: Element> {
    /// `[out_ch × in_ch × k]`
    pub weight: Tensor<T>,
    /// `[out_ch]`
    pub bias: Tensor<T>,
}

impl<T: Element> Conv1dLayer<T> {
    /// Kaiming-uniform kernels with `fan_in = in_ch · k`, zero bias.
    pub fn new(in_channels: usize, out_channels: usize, kernel: usize, seed: u64) -> Result<Self> {
        if kernel % 2 == 0 {
            return shape_err(format!("conv kernel width must be odd, got {kernel}"));
        }
        let shape = [out_channels, in_channels, kernel];
        let w = kaiming_uniform(&shape, in_channels * kernel, seed);
        Ok(Self {
            weight: Tensor::parameter(&shape, w)?,
            bias: Tensor::parameter(&[out_channels], vec![T::zero(); out_channels])?,
        })
    }

    pub fn in_channels(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn out_channels(&self) -> usize {
        self.weight.shape()[0]
    }

    pub fn kernel(&self) -> usize {
        self.weight.shape()[2]
    }

    pub fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        conv1d_same(x, &self.weight, &self.bias)
    }
}

impl<T: Element> Parameterized<T> for Conv1dLayer<T> {
    fn collect_parameters(&self, prefix: &str, out: &mut Vec<NamedTensor<T>>) {
        out.push(NamedTensor { name: join(prefix, "weight"), tensor: self.weight.clone() });
        out.push(NamedTensor { name: join(prefix, "bias"), tensor: self.bias.clone() });
    }
}
