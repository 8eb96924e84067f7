use super::{join, kaiming_uniform, NamedTensor, Parameterized};
use crate::error::{shape_err, Result};
use crate::tensor::{Element, Tensor};

/// Affine map `y = x Wᵀ + b` over the last axis.
#[derive(Debug, Clone)]
pub struct LinearLayer<T: Element> {
    /// `[out × in]`
    pub weight: Tensor<T>,
    /// `[out]`
    pub bias: Tensor<T>,
}

impl<T: Element> LinearLayer<T> {
    /// Kaiming-uniform weights with `fan_in = in_features`, zero bias.
    pub fn new(in_features: usize, out_features: usize, seed: u64) -> Self {
        let w = kaiming_uniform(&[out_features, in_features], in_features, seed);
        Self::from_parts(in_features, out_features, w, vec![T::zero(); out_features])
            .expect("consistent shapes")
    }

    pub fn from_parts(in_features: usize, out_features: usize, weight: Vec<T>, bias: Vec<T>) -> Result<Self> {
        Ok(Self {
            weight: Tensor::parameter(&[out_features, in_features], weight)?,
            bias: Tensor::parameter(&[out_features], bias)?,
        })
    }

    pub fn in_features(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn out_features(&self) -> usize {
        self.weight.shape()[0]
    }

    pub fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let (fin, fout) = (self.in_features(), self.out_features());
        let Some(&last) = x.shape().last() else {
            return shape_err("linear layer input must have rank >= 1");
        };
        if last != fin {
            return shape_err(format!("linear layer expects last extent {fin}, got {:?}", x.shape()));
        }
        let rows = x.numel() / fin;
        let y = x
            .reshape(&[rows, fin])?
            .matmul(&self.weight.transpose2d()?)?
            .add(&self.bias.reshape(&[1, fout])?)?;
        let mut out_shape = x.shape().to_vec();
        *out_shape.last_mut().unwrap() = fout;
        y.reshape(&out_shape)
    }
}

impl<T: Element> Parameterized<T> for LinearLayer<T> {
    fn collect_parameters(&self, prefix: &str, out: &mut Vec<NamedTensor<T>>) {
        out.push(NamedTensor { name: join(prefix, "weight"), tensor: self.weight.clone() });
        out.push(NamedTensor { name: join(prefix, "bias"), tensor: self.bias.clone() });
    }
}
