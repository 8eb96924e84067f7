use crate::tensor::{Element, Tensor};

/// `x` where `x >= 0`, `slope * x` elsewhere. The derivative at 0 is taken as 1.
pub fn leaky_relu<T: Element>(x: &Tensor<T>, slope: f64) -> Tensor<T> {
    let s = T::of(slope);
    let out = x.data().iter().map(|&v| if v >= T::zero() { v } else { s * v }).collect();
    Tensor::from_op(x.shape().to_vec(), out, "leaky_relu", vec![x.clone()], move |g, ps| {
        let xd = ps[0].data();
        let gx = g
            .iter()
            .zip(xd.iter())
            .map(|(&gi, &v)| if v >= T::zero() { gi } else { gi * s })
            .collect();
        vec![Some(gx)]
    })
}
