use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::model::{CamlpNet, ModelConfig};
use crate::nn::{softmax_cross_entropy, Parameterized};
use crate::tensor::{no_grad, Tensor};

const STEP: f64 = 1e-5;
const BATCH: usize = 2;
/// Denominator floor of the relative error. Entries whose true gradient is
/// zero (conv biases ahead of batch norm) are then judged by absolute error
/// against a difference quotient whose roundoff is about 1e-11.
const REL_FLOOR: f64 = 1e-6;

/// Largest discrepancy between analytic and numerical gradients within one
/// parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupCheck {
    pub name: String,
    pub size: usize,
    pub max_rel_err: f64,
    pub max_abs_err: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub tolerance: f64,
    pub loss: f64,
    pub groups: Vec<GroupCheck>,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.groups.iter().all(|g| g.passed)
    }

    pub fn failures(&self) -> Vec<&str> {
        self.groups.iter().filter(|g| !g.passed).map(|g| g.name.as_str()).collect()
    }
}

impl fmt::Display for GradCheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for g in &self.groups {
            let verdict = if g.passed { "PASS" } else { "FAIL" };
            writeln!(f, "{verdict}  {:<32} n={:<5} max_rel={:.3e} max_abs={:.3e}", g.name, g.size, g.max_rel_err, g.max_abs_err)?;
        }
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        write!(f, "{verdict}  {} groups, tolerance {:.0e}", self.groups.len(), self.tolerance)
    }
}

/// Compares the analytic gradient of the cross-entropy loss with central
/// differences (step 1e-5) for every trainable tensor of a 64-bit net built
/// from `config`, on a random batch drawn from `seed`.
pub fn grad_check(config: &ModelConfig, tolerance: f64, seed: u64) -> Result<GradCheckReport> {
    grad_check_with(config, tolerance, seed, |_, _| {})
}

/// As [`grad_check`], but `tamper` may alter each analytic gradient (by
/// parameter name) before comparison.
pub fn grad_check_with(
    config: &ModelConfig,
    tolerance: f64,
    seed: u64,
    tamper: impl Fn(&str, &mut Vec<f64>),
) -> Result<GradCheckReport> {
    let net = CamlpNet::<f64>::new(config.clone(), seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let shape = [BATCH, config.channels, config.samples];
    let x: Vec<f64> = (0..shape.iter().product()).map(|_| rng.sample(StandardNormal)).collect();
    let x = Tensor::constant(&shape, x)?;
    let targets: Vec<usize> = (0..BATCH).map(|_| rng.random_range(0..config.num_classes)).collect();
    let loss_at = |net: &CamlpNet<f64>| -> Result<f64> { Ok(softmax_cross_entropy(&net.forward(&x)?, &targets)?.item()) };

    let params = net.parameters();
    let loss = softmax_cross_entropy(&net.forward(&x)?, &targets)?;
    loss.backward()?;
    let mut groups = Vec::with_capacity(params.len());
    for p in &params {
        let mut analytic = p.tensor.grad().unwrap_or_else(|| vec![0.0; p.tensor.numel()]);
        tamper(&p.name, &mut analytic);
        let (mut max_rel, mut max_abs) = (0.0f64, 0.0f64);
        for (i, &a) in analytic.iter().enumerate() {
            let orig = p.tensor.data()[i];
            let numeric = no_grad(|| -> Result<f64> {
                p.tensor.data_mut()[i] = orig + STEP;
                let up = loss_at(&net)?;
                p.tensor.data_mut()[i] = orig - STEP;
                let down = loss_at(&net)?;
                p.tensor.data_mut()[i] = orig;
                Ok((up - down) / (2.0 * STEP))
            })?;
            let abs = (a - numeric).abs();
            max_abs = max_abs.max(abs);
            max_rel = max_rel.max(abs / a.abs().max(numeric.abs()).max(REL_FLOOR));
        }
        groups.push(GroupCheck {
            name: p.name.clone(),
            size: analytic.len(),
            max_rel_err: max_rel,
            max_abs_err: max_abs,
            passed: max_rel < tolerance,
        });
    }
    Ok(GradCheckReport { tolerance, loss: loss.item(), groups })
}
