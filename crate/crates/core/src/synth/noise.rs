use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;

use super::rng::PixelRng;
use crate::error::{Error, Result};
use crate::eval::{LabelImage, UNKNOWN};
use crate::fusion::ProbabilityImage;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseKind {
    /// With probability `epsilon` the argmax moves to a uniformly drawn wrong
    /// class. The argmax class gets `confidence`, the rest share the remainder.
    Flip { epsilon: f64, confidence: f64 },
    /// Dirichlet draw with concentration `1 + kappa` on the true class and 1
    /// elsewhere.
    Dirichlet { kappa: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    pub seed: u64,
}

impl NoiseModel {
    pub fn flip(epsilon: f64, confidence: f64, seed: u64) -> Self {
        Self {
            kind: NoiseKind::Flip { epsilon, confidence },
            seed,
        }
    }

    pub fn dirichlet(kappa: f64, seed: u64) -> Self {
        Self {
            kind: NoiseKind::Dirichlet { kappa },
            seed,
        }
    }

    pub fn validate(&self, classes: usize) -> Result<()> {
        match self.kind {
            NoiseKind::Flip { epsilon, confidence } => {
                if !(0.0..1.0).contains(&epsilon) {
                    return Err(Error::config(format!("flip epsilon {epsilon} not in [0, 1)")));
                }
                if !(confidence > 1.0 / classes as f64 && confidence <= 1.0) {
                    return Err(Error::config(format!(
                        "flip confidence {confidence} not in (1/{classes}, 1]"
                    )));
                }
            }
            NoiseKind::Dirichlet { kappa } => {
                if !(kappa > 0.0 && kappa.is_finite()) {
                    return Err(Error::config(format!("dirichlet kappa {kappa} must be positive")));
                }
            }
        }
        Ok(())
    }
}

/// Noisy network output for a ground-truth label image.
///
/// Every covered pixel draws independently from its own stream keyed by
/// `(seed, frame_id, pixel index)`; uncovered pixels become uniform.
pub fn corrupt(gt: &LabelImage, model: &NoiseModel, classes: usize, frame_id: u32) -> Result<ProbabilityImage> {
    if classes < 2 {
        return Err(Error::config(format!("need at least 2 classes, got {classes}")));
    }
    model.validate(classes)?;
    if let Some(bad) = gt.labels().iter().find(|&&l| l != UNKNOWN && l as usize >= classes) {
        return Err(Error::data(format!("ground-truth class {bad} out of range for {classes} classes")));
    }
    let c = classes;
    let uniform = 1.0 / c as f32;
    let gamma_true;
    let gamma_rest;
    match model.kind {
        NoiseKind::Dirichlet { kappa } => {
            gamma_true = Some(Gamma::new(1.0 + kappa, 1.0).map_err(|e| Error::config(e.to_string()))?);
            gamma_rest = Some(Gamma::new(1.0, 1.0).expect("unit shape"));
        }
        NoiseKind::Flip { .. } => {
            gamma_true = None;
            gamma_rest = None;
        }
    }
    let mut data = vec![0f32; gt.labels().len() * c];
    data.par_chunks_mut(c)
        .zip(gt.labels().par_iter())
        .enumerate()
        .for_each(|(k, (out, &label))| {
            if label == UNKNOWN {
                out.fill(uniform);
                return;
            }
            let truth = label as usize;
            let mut rng = PixelRng::for_pixel(model.seed, frame_id, k as u64);
            match model.kind {
                NoiseKind::Flip { epsilon, confidence } => {
                    let chosen = if rng.next_f64() < epsilon {
                        (truth + 1 + rng.below(c as u32 - 1) as usize) % c
                    } else {
                        truth
                    };
                    out.fill(((1.0 - confidence) / (c - 1) as f64) as f32);
                    out[chosen] = confidence as f32;
                }
                NoiseKind::Dirichlet { .. } => {
                    let (gt_dist, rest) = (gamma_true.as_ref().unwrap(), gamma_rest.as_ref().unwrap());
                    let mut draws = [0f64; 64];
                    let mut heap;
                    let g: &mut [f64] = if c <= draws.len() {
                        &mut draws[..c]
                    } else {
                        heap = vec![0f64; c];
                        &mut heap
                    };
                    for (i, x) in g.iter_mut().enumerate() {
                        *x = if i == truth { gt_dist.sample(&mut rng) } else { rest.sample(&mut rng) };
                    }
                    let total: f64 = g.iter().sum();
                    if total > 0.0 {
                        for (o, x) in out.iter_mut().zip(g.iter()) {
                            *o = (x / total) as f32;
                        }
                    } else {
                        out.fill(0.0);
                        out[truth] = 1.0;
                    }
                }
            }
        });
    ProbabilityImage::new(gt.width(), gt.height(), c, data)
}
