use super::{axpy, dot, Element, Tensor};
use crate::error::{shape_err, Result};

/// Index plan for a binary op where `b` is broadcast against `a`.
///
/// `a` is viewed as `rows × inner` (inner = last axis). Row `r` of `a` pairs
/// with `b[row_offsets[r] + j * inner_stride]`.
struct Broadcast {
    rows: usize,
    inner: usize,
    row_offsets: Vec<usize>,
    inner_stride: usize,
}

impl Broadcast {
    fn plan(a: &[usize], b: &[usize]) -> Result<Self> {
        let numel: usize = a.iter().product();
        let inner = a.last().copied().unwrap_or(1);
        let rows = numel / inner;
        let b_numel: usize = b.iter().product();
        if b_numel == 1 {
            return Ok(Self { rows, inner, row_offsets: vec![0; rows], inner_stride: 0 });
        }
        let compatible = a.len() == b.len() && a.iter().zip(b).all(|(&da, &db)| db == da || db == 1);
        if !compatible {
            return shape_err(format!("cannot broadcast {b:?} against {a:?}"));
        }
        let rank = a.len();
        let mut strides = vec![0usize; rank];
        let mut acc = 1;
        for d in (0..rank).rev() {
            strides[d] = if b[d] == 1 { 0 } else { acc };
            acc *= b[d];
        }
        let mut row_offsets = Vec::with_capacity(rows);
        let mut idx = vec![0usize; rank.saturating_sub(1)];
        for _ in 0..rows {
            row_offsets.push(idx.iter().zip(&strides).map(|(i, s)| i * s).sum());
            for d in (0..idx.len()).rev() {
                idx[d] += 1;
                if idx[d] < a[d] {
                    break;
                }
                idx[d] = 0;
            }
        }
        Ok(Self { rows, inner, row_offsets, inner_stride: strides[rank - 1] })
    }

    fn zip<E: Copy>(&self, a: &[E], b: &[E], f: impl Fn(E, E) -> E) -> Vec<E> {
        let mut out = Vec::with_capacity(a.len());
        for r in 0..self.rows {
            let ar = &a[r * self.inner..(r + 1) * self.inner];
            let off = self.row_offsets[r];
            if self.inner_stride == 1 {
                let br = &b[off..off + self.inner];
                out.extend(ar.iter().zip(br).map(|(&x, &y)| f(x, y)));
            } else {
                let y = b[off];
                out.extend(ar.iter().map(|&x| f(x, y)));
            }
        }
        out
    }

    /// Sums `vals(i)` (indexed over `a`) back into the shape of `b`.
    fn reduce<T: Element>(&self, b_len: usize, vals: impl Fn(usize) -> T) -> Vec<T> {
        let mut out = vec![T::zero(); b_len];
        for r in 0..self.rows {
            let off = self.row_offsets[r];
            let base = r * self.inner;
            if self.inner_stride == 1 {
                for j in 0..self.inner {
                    out[off + j] += vals(base + j);
                }
            } else {
                let mut s = T::zero();
                for j in 0..self.inner {
                    s += vals(base + j);
                }
                out[off] += s;
            }
        }
        out
    }
}

#[derive(Clone, Copy)]
enum Binary {
    Add,
    Sub,
    Mul,
}

fn binary<T: Element>(a: &Tensor<T>, b: &Tensor<T>, kind: Binary) -> Result<Tensor<T>> {
    let plan = match Broadcast::plan(a.shape(), b.shape()) {
        Ok(plan) => plan,
        // the smaller operand is on the left
        Err(e) => match (kind, Broadcast::plan(b.shape(), a.shape())) {
            (Binary::Add | Binary::Mul, Ok(_)) => return binary(b, a, kind),
            (Binary::Sub, Ok(_)) => return Ok(binary(b, a, kind)?.scale(-1.0)),
            _ => return Err(e),
        },
    };
    let out = {
        let (ad, bd) = (a.data(), b.data());
        match kind {
            Binary::Add => plan.zip(&ad, &bd, |x, y| x + y),
            Binary::Sub => plan.zip(&ad, &bd, |x, y| x - y),
            Binary::Mul => plan.zip(&ad, &bd, |x, y| x * y),
        }
    };
    let name = match kind {
        Binary::Add => "add",
        Binary::Sub => "sub",
        Binary::Mul => "mul",
    };
    let b_len = b.numel();
    Ok(Tensor::from_op(a.shape().to_vec(), out, name, vec![a.clone(), b.clone()], move |g, ps| {
        let (pa, pb) = (&ps[0], &ps[1]);
        let ga = pa.requires_grad().then(|| match kind {
            Binary::Add | Binary::Sub => g.to_vec(),
            Binary::Mul => plan.zip(g, &pb.data(), |gi, y| gi * y),
        });
        let gb = pb.requires_grad().then(|| match kind {
            Binary::Add => plan.reduce(b_len, |i| g[i]),
            Binary::Sub => plan.reduce(b_len, |i| -g[i]),
            Binary::Mul => {
                let ad = pa.data();
                plan.reduce(b_len, |i| g[i] * ad[i])
            }
        });
        vec![ga, gb]
    }))
}

impl<T: Element> Tensor<T> {
    /// Elementwise sum. Either operand may be a one-element tensor or have
    /// the same rank as the other with extent-1 axes, which are broadcast.
    pub fn add(&self, other: &Tensor<T>) -> Result<Tensor<T>> {
        binary(self, other, Binary::Add)
    }

    pub fn sub(&self, other: &Tensor<T>) -> Result<Tensor<T>> {
        binary(self, other, Binary::Sub)
    }

    pub fn mul(&self, other: &Tensor<T>) -> Result<Tensor<T>> {
        binary(self, other, Binary::Mul)
    }

    /// Multiplies every element by a constant.
    pub fn scale(&self, factor: f64) -> Tensor<T> {
        let s = T::of(factor);
        let out = self.data().iter().map(|&x| x * s).collect();
        Tensor::from_op(self.shape().to_vec(), out, "scale", vec![self.clone()], move |g, _| {
            vec![Some(g.iter().map(|&x| x * s).collect())]
        })
    }

    /// `[M×K] · [K×P] → [M×P]`
    pub fn matmul(&self, other: &Tensor<T>) -> Result<Tensor<T>> {
        let (sa, sb) = (self.shape(), other.shape());
        if sa.len() != 2 || sb.len() != 2 {
            return shape_err(format!("matmul needs rank-2 operands, got {sa:?} and {sb:?}"));
        }
        let (m, k, p) = (sa[0], sa[1], sb[1]);
        if sb[0] != k {
            return shape_err(format!("matmul inner extents differ: {sa:?} · {sb:?}"));
        }
        let out = matmul_kernel(&self.data(), &other.data(), m, k, p);
        Ok(Tensor::from_op(vec![m, p], out, "matmul", vec![self.clone(), other.clone()], move |g, ps| {
            let (a, b) = (&ps[0], &ps[1]);
            // dA = dC · Bᵀ
            let ga = a.requires_grad().then(|| {
                let bd = b.data();
                let mut ga = vec![T::zero(); m * k];
                for i in 0..m {
                    let gi = &g[i * p..(i + 1) * p];
                    for kk in 0..k {
                        ga[i * k + kk] = dot(gi, &bd[kk * p..(kk + 1) * p]);
                    }
                }
                ga
            });
            // dB = Aᵀ · dC
            let gb = b.requires_grad().then(|| {
                let ad = a.data();
                let mut gb = vec![T::zero(); k * p];
                for i in 0..m {
                    let gi = &g[i * p..(i + 1) * p];
                    for kk in 0..k {
                        axpy(ad[i * k + kk], gi, &mut gb[kk * p..(kk + 1) * p]);
                    }
                }
                gb
            });
            vec![ga, gb]
        }))
    }

    /// Transpose of a rank-2 tensor.
    pub fn transpose2d(&self) -> Result<Tensor<T>> {
        if self.rank() != 2 {
            return shape_err(format!("transpose2d needs rank 2, got {:?}", self.shape()));
        }
        self.transpose_last2()
    }

    /// Swaps the last two axes; leading axes are treated as a batch.
    pub fn transpose_last2(&self) -> Result<Tensor<T>> {
        let rank = self.rank();
        if rank < 2 {
            return shape_err(format!("transpose needs rank >= 2, got {:?}", self.shape()));
        }
        let (r, c) = (self.shape()[rank - 2], self.shape()[rank - 1]);
        let batch = self.numel() / (r * c);
        let out = transpose_kernel(&self.data(), batch, r, c);
        let mut shape = self.shape().to_vec();
        shape.swap(rank - 2, rank - 1);
        Ok(Tensor::from_op(shape, out, "transpose", vec![self.clone()], move |g, _| {
            vec![Some(transpose_kernel(g, batch, c, r))]
        }))
    }

    pub fn reshape(&self, shape: &[usize]) -> Result<Tensor<T>> {
        let numel: usize = shape.iter().product();
        if numel != self.numel() || shape.iter().any(|&d| d == 0) {
            return shape_err(format!("cannot reshape {:?} into {shape:?}", self.shape()));
        }
        Ok(Tensor::from_op(shape.to_vec(), self.to_vec(), "reshape", vec![self.clone()], |g, _| {
            vec![Some(g.to_vec())]
        }))
    }

    /// Arithmetic mean along `axis`; the axis is removed from the shape.
    pub fn mean_axis(&self, axis: usize) -> Result<Tensor<T>> {
        let shape = self.shape();
        if axis >= shape.len() {
            return shape_err(format!("axis {axis} out of range for shape {shape:?}"));
        }
        let outer: usize = shape[..axis].iter().product();
        let ext = shape[axis];
        let inner: usize = shape[axis + 1..].iter().product();
        let inv = T::one() / T::of(ext as f64);
        let mut out = vec![T::zero(); outer * inner];
        {
            let d = self.data();
            for o in 0..outer {
                let dst = &mut out[o * inner..(o + 1) * inner];
                for e in 0..ext {
                    let src = &d[(o * ext + e) * inner..(o * ext + e + 1) * inner];
                    dst.iter_mut().zip(src).for_each(|(a, &b)| *a += b);
                }
                dst.iter_mut().for_each(|a| *a *= inv);
            }
        }
        let mut out_shape = shape.to_vec();
        out_shape.remove(axis);
        Ok(Tensor::from_op(out_shape, out, "mean_axis", vec![self.clone()], move |g, _| {
            let mut gx = vec![T::zero(); outer * ext * inner];
            for o in 0..outer {
                let src = &g[o * inner..(o + 1) * inner];
                for e in 0..ext {
                    let dst = &mut gx[(o * ext + e) * inner..(o * ext + e + 1) * inner];
                    dst.iter_mut().zip(src).for_each(|(a, &b)| *a = b * inv);
                }
            }
            vec![Some(gx)]
        }))
    }

    /// Sum of all elements as a rank-0 tensor.
    pub fn sum(&self) -> Tensor<T> {
        let s = self.data().iter().copied().sum();
        let n = self.numel();
        Tensor::from_op(Vec::new(), vec![s], "sum", vec![self.clone()], move |g, _| vec![Some(vec![g[0]; n])])
    }

    /// Mean of all elements as a rank-0 tensor.
    pub fn mean(&self) -> Tensor<T> {
        self.sum().scale(1.0 / self.numel() as f64)
    }
}

pub(crate) fn matmul_kernel<T: Element>(a: &[T], b: &[T], m: usize, k: usize, p: usize) -> Vec<T> {
    let mut out = vec![T::zero(); m * p];
    for i in 0..m {
        let row = &mut out[i * p..(i + 1) * p];
        for kk in 0..k {
            axpy(a[i * k + kk], &b[kk * p..(kk + 1) * p], row);
        }
    }
    out
}

fn transpose_kernel<T: Element>(src: &[T], batch: usize, r: usize, c: usize) -> Vec<T> {
    let mut out = vec![T::zero(); src.len()];
    for bi in 0..batch {
        let s = &src[bi * r * c..(bi + 1) * r * c];
        let d = &mut out[bi * r * c..(bi + 1) * r * c];
        for i in 0..r {
            for j in 0..c {
                d[j * r + i] = s[i * c + j];
            }
        }
    }
    out
}
