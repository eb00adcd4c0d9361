//! Generic minibatch regression loop shared by the trainable models.
//!
//! Epoch structure: draw the epoch's samples, shuffle, accumulate gradients
//! over minibatches, apply one optimizer step per batch, then score the fixed
//! validation set with plain MSE. The returned network is the snapshot with
//! the strictly lowest validation loss seen, not the final-epoch weights.

use super::{backward, forward, mse_loss, Gradients, Mlp, NnError, SgdMomentum, TrainConfig};
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, serde::Serialize)]
pub struct FitReport {
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    pub best_epoch: usize,
    pub best_val_loss: f64,
}

#[derive(Debug, Clone)]
pub struct Fitted {
    pub net: Mlp,
    pub report: FitReport,
}

/// Train `net` on samples drawn afresh each epoch by `epoch_samples`.
///
/// `epoch_samples` may apply per-epoch randomness (augmentation, dropout of
/// inputs) through the supplied RNG; the validation set is fixed and scored
/// without it. Aborts on a non-finite loss rather than training on garbage.
pub fn fit_regression<F>(
    net: Mlp,
    config: &TrainConfig,
    rng: &mut ChaCha8Rng,
    mut epoch_samples: F,
    val_samples: &[(Vec<f64>, Vec<f64>)],
) -> Result<Fitted, NnError>
where
    F: FnMut(&mut ChaCha8Rng) -> Vec<(Vec<f64>, Vec<f64>)>,
{
    config.validate()?;
    let mut current = net;
    let mut opt = SgdMomentum::new(&current, config.learning_rate, config.momentum);

    let mut best = current.clone();
    let mut best_val = f64::INFINITY;
    let mut best_epoch = 0;
    let mut train_curve = Vec::with_capacity(config.epochs);
    let mut val_curve = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        let mut samples = epoch_samples(rng);
        if samples.is_empty() {
            return Err(NnError::Checkpoint("epoch produced no samples".into()));
        }
        samples.shuffle(rng);

        let mut epoch_loss = 0.0;
        for batch in samples.chunks(config.batch_size) {
            let mut grads = Gradients::zeros_like(&current);
            for (input, target) in batch {
                let (pred, trace) = forward(&current, input)?;
                let (loss, loss_grad) = mse_loss(&pred, target)?;
                if !loss.is_finite() {
                    return Err(NnError::NonFinite("training loss"));
                }
                epoch_loss += loss;
                let (sample_grads, _) = backward(&current, &trace, &loss_grad)?;
                grads.accumulate(&sample_grads);
            }
            grads.scale(1.0 / batch.len() as f64);
            opt.step(&mut current, &grads)?;
        }
        train_curve.push(epoch_loss / samples.len() as f64);

        let val = validation_loss(&current, val_samples)?;
        val_curve.push(val);
        if val < best_val {
            best_val = val;
            best = current.clone();
            best_epoch = epoch;
        }
    }

    Ok(Fitted {
        net: best,
        report: FitReport {
            train_loss: train_curve,
            val_loss: val_curve,
            best_epoch,
            best_val_loss: best_val,
        },
    })
}

pub(crate) fn validation_loss(
    net: &Mlp,
    samples: &[(Vec<f64>, Vec<f64>)],
) -> Result<f64, NnError> {
    if samples.is_empty() {
        return Err(NnError::Checkpoint("validation set is empty".into()));
    }
    let mut total = 0.0;
    for (input, target) in samples {
        let (pred, _) = forward(net, input)?;
        total += mse_loss(&pred, target)?.0;
    }
    Ok(total / samples.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Activation;
    use rand::{Rng, SeedableRng};

    /// A solvable linear problem: learn y = A x with a 4 -> 2 identity layer.
    fn linear_problem(seed: u64) -> (Vec<(Vec<f64>, Vec<f64>)>, Vec<(Vec<f64>, Vec<f64>)>) {
        let a = [
            [0.5, -0.25, 0.1, 0.0],
            [0.0, 0.75, -0.5, 0.2],
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut gen = |n: usize| {
            (0..n)
                .map(|_| {
                    let x: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    let y = a
                        .iter()
                        .map(|row| row.iter().zip(&x).map(|(r, v)| r * v).sum())
                        .collect();
                    (x, y)
                })
                .collect::<Vec<_>>()
        };
        (gen(128), gen(32))
    }

    #[test]
    fn loss_descends_at_least_100x_on_linear_fit() {
        let (train, val) = linear_problem(3);
        let net = Mlp::seeded(&[4, 2], &[Activation::Identity], 8);
        let initial = validation_loss(&net, &val).unwrap();
        let config = TrainConfig {
            epochs: 50,
            learning_rate: 0.1,
            momentum: 0.9,
            batch_size: 16,
            seed: 0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let fitted = fit_regression(net, &config, &mut rng, |_| train.clone(), &val).unwrap();
        assert!(
            fitted.report.best_val_loss < initial / 100.0,
            "initial {initial}, best {}",
            fitted.report.best_val_loss
        );
    }

    #[test]
    fn returns_best_validation_snapshot_not_last() {
        let (train, val) = linear_problem(5);
        let net = Mlp::seeded(&[4, 2], &[Activation::Identity], 1);
        // A learning rate this high diverges after improving early on.
        let config = TrainConfig {
            epochs: 20,
            learning_rate: 0.9,
            momentum: 0.95,
            batch_size: 128,
            seed: 0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        match fit_regression(net, &config, &mut rng, |_| train.clone(), &val) {
            Ok(fitted) => {
                let returned = validation_loss(&fitted.net, &val).unwrap();
                assert!((returned - fitted.report.best_val_loss).abs() < 1e-12);
                assert!(fitted.report.best_val_loss <= *fitted.report.val_loss.last().unwrap());
            }
            // Divergence tripping the non-finite guard is also acceptable
            // behavior for this deliberately unstable setup.
            Err(NnError::NonFinite(_)) => {}
            Err(other) => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn training_is_bit_deterministic_for_fixed_seed() {
        let run = || {
            let (train, val) = linear_problem(9);
            let net = Mlp::seeded(&[4, 2], &[Activation::Identity], 2);
            let config = TrainConfig {
                epochs: 10,
                learning_rate: 0.05,
                momentum: 0.9,
                batch_size: 8,
                seed: 77,
            };
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            fit_regression(net, &config, &mut rng, |_| train.clone(), &val).unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a.net, b.net);
        for (x, y) in a.net.layers[0].weights.iter().zip(&b.net.layers[0].weights) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        assert_eq!(a.report.val_loss, b.report.val_loss);
    }

    #[test]
    fn rejects_empty_validation_set() {
        let (train, _) = linear_problem(1);
        let net = Mlp::seeded(&[4, 2], &[Activation::Identity], 0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let err = fit_regression(
            net,
            &TrainConfig::default(),
            &mut rng,
            |_| train.clone(),
            &[],
        );
        assert!(err.is_err());
    }

    #[test]
    fn rejects_invalid_config() {
        let bad = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = TrainConfig {
            momentum: 1.0,
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
