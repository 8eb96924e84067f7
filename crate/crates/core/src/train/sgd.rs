use crate::error::{contract_err, Result};
use crate::nn::NamedTensor;
use crate::tensor::Element;

/// Heavy-ball SGD: `v ← μ·v + g`, `θ ← θ − lr·v`. No dampening, no
/// Nesterov, no weight decay.
#[derive(Debug, Clone)]
pub struct SgdMomentum<T: Element> {
    velocity: Vec<Vec<T>>,
}

impl<T: Element> SgdMomentum<T> {
    /// Zero velocity for each parameter, in the given order.
    pub fn new(params: &[NamedTensor<T>]) -> Self {
        Self { velocity: params.iter().map(|p| vec![T::zero(); p.tensor.numel()]).collect() }
    }

    pub fn velocity(&self) -> &[Vec<T>] {
        &self.velocity
    }

    /// One update from the accumulated gradients, which are cleared after.
    /// Every parameter must carry a gradient.
    pub fn step(&mut self, params: &[NamedTensor<T>], lr: f64, momentum: f64) -> Result<()> {
        if params.len() != self.velocity.len() {
            return contract_err(format!("optimizer tracks {} tensors, got {}", self.velocity.len(), params.len()));
        }
        if let Some(p) = params.iter().find(|p| !p.tensor.has_grad()) {
            return contract_err(format!("parameter `{}` has no gradient", p.name));
        }
        let (lr, mu) = (T::of(lr), T::of(momentum));
        for (p, v) in params.iter().zip(&mut self.velocity) {
            let g = p.tensor.grad().expect("checked above");
            if g.len() != v.len() {
                return contract_err(format!("parameter `{}` changed size", p.name));
            }
            let mut theta = p.tensor.data_mut();
            for ((vi, gi), ti) in v.iter_mut().zip(&g).zip(theta.iter_mut()) {
                *vi = mu * *vi + *gi;
                *ti -= lr * *vi;
            }
            drop(theta);
            p.tensor.zero_grad();
        }
        Ok(())
    }
}
