use crate::error::{shape_err, Result};
use crate::tensor::{Element, Tensor};

/// Non-overlapping average pooling over the last axis with window and stride
/// `k`. A trailing remainder of `T mod k` samples is dropped.
pub fn avg_pool1d<T: Element>(x: &Tensor<T>, k: usize) -> Result<Tensor<T>> {
    let Some(&t) = x.shape().last() else {
        return shape_err("avg_pool1d needs rank >= 1");
    };
    if k == 0 || t < k {
        return shape_err(format!("avg_pool1d window {k} does not fit length {t}"));
    }
    let l = t / k;
    let rows = x.numel() / t;
    let inv = T::one() / T::of(k as f64);
    let mut out = Vec::with_capacity(rows * l);
    {
        let d = x.data();
        for r in 0..rows {
            let row = &d[r * t..(r + 1) * t];
            out.extend(row.chunks_exact(k).map(|w| w.iter().copied().sum::<T>() * inv));
        }
    }
    let mut shape = x.shape().to_vec();
    *shape.last_mut().unwrap() = l;
    Ok(Tensor::from_op(shape, out, "avg_pool1d", vec![x.clone()], move |g, _| {
        let mut gx = vec![T::zero(); rows * t];
        for r in 0..rows {
            for j in 0..l {
                let v = g[r * l + j] * inv;
                gx[r * t + j * k..r * t + (j + 1) * k].iter_mut().for_each(|e| *e = v);
            }
        }
        vec![Some(gx)]
    }))
}
