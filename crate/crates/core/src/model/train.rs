use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    evaluate, forward, forward_on_tape, initial_transform_on_tape, propagate_stack, ForwardOptions,
    ModelState, PropagationStack,
};
use crate::config::ExperimentConfig;
use crate::data::{Dataset, Features};
use crate::energy::score_matching_with_grad;
use crate::error::{Error, Result};
use crate::graph::{perturbation_delta, Graph};
use crate::kernel::{logsumexp_rows, Matrix, Tape, Var};
use crate::seed;

const TAG_TRAIN: u64 = 0x7A;
const TAG_EVAL: u64 = 0xE7;
const TAG_CALIBRATE: u64 = 0xCA;

pub const CURVE_HEADER: &str =
    "epoch,train_loss,val_acc,test_acc,sm_loss,edges_removed_per_layer,edges_added_per_layer";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_acc: f64,
    pub test_acc: f64,
    /// Last applied calibration loss of the epoch.
    pub sm_loss: Option<f64>,
    pub removed: Vec<usize>,
    pub added: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters at the best validation epoch.
    pub model: ModelState,
    pub curve: Vec<EpochRecord>,
    /// 0 when no epoch improved on the initial parameters.
    pub best_epoch: usize,
    pub train_accuracy: f64,
    pub val_accuracy: f64,
    pub test_accuracy: f64,
    /// Inference stack of the best parameters.
    pub stack: PropagationStack,
    pub logits: Matrix,
}

/// Energies of both perturbed copies of the stack, held fixed during a step.
#[derive(Debug, Clone)]
pub struct CalibrationTargets {
    pub perturbed_a: Vec<f64>,
    pub perturbed_b: Vec<f64>,
    pub seeds: (u64, u64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationStep {
    /// Loss at the parameters before the update.
    pub loss: f64,
    pub clamp_count: usize,
    /// False when the loss or gradient was not finite and nothing changed.
    pub applied: bool,
}

fn node_energies(logits: &Matrix) -> Result<Vec<f64>> {
    Ok(logsumexp_rows(logits)?.as_slice().iter().map(|v| -v).collect())
}

/// Perturb every layer of `stack` twice with independent edge edits of
/// `cfg.calibration_perturb` and record the resulting node energies.
pub fn calibration_targets(
    model: &ModelState,
    x: &Features,
    graph: &Graph,
    stack: &PropagationStack,
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<CalibrationTargets> {
    let f = cfg.calibration_perturb;
    let seeds = (seed::derive(seed, &[1]), seed::derive(seed, &[2]));
    // Parameters are shared by both branches, so H⁰ is computed once.
    let mut tape = Tape::new();
    let theta = tape.constant(model.theta.clone());
    let h0v = initial_transform_on_tape(&mut tape, x, theta, cfg.dropout, false, 0)?;
    let h0 = tape.value(h0v);
    let energies = |s: u64| -> Result<Vec<f64>> {
        let delta = perturbation_delta(graph, f, f, s)?;
        let logits = propagate_stack(h0, &model.phi, &stack.perturbed(&delta)?, cfg.alpha)?;
        node_energies(&logits)
    };
    Ok(CalibrationTargets { perturbed_a: energies(seeds.0)?, perturbed_b: energies(seeds.1)?, seeds })
}

/// Score-matching loss over the frozen `stack`, differentiable through the
/// clean energies only.
#[allow(clippy::too_many_arguments)]
pub fn sm_objective_on_tape(
    tape: &mut Tape,
    theta: Var,
    phi: Var,
    x: &Features,
    graph: &Graph,
    stack: &PropagationStack,
    cfg: &ExperimentConfig,
    targets: &CalibrationTargets,
) -> Result<(Var, usize)> {
    let out = forward_on_tape(tape, theta, phi, x, graph, cfg, &ForwardOptions::inference(), Some(stack))?;
    let lse = tape.logsumexp_rows(out.logits)?;
    let clean: Vec<f64> = tape.value(lse).as_slice().iter().map(|v| -v).collect();
    let sm = score_matching_with_grad(&clean, &targets.perturbed_a, &targets.perturbed_b)?;
    // E = -lse, so dL/dlse = -dL/dE.
    let grad: Vec<f64> = sm.grad.iter().map(|g| -g).collect();
    let loss = tape.custom_scalar(lse, sm.loss, Matrix::column(&grad))?;
    Ok((loss, sm.clamp_count))
}

/// One optimizer step on the calibration loss. A non-finite loss or
/// gradient leaves the model untouched and reports `applied = false`.
pub fn calibrate_step(
    model: &mut ModelState,
    x: &Features,
    graph: &Graph,
    stack: &PropagationStack,
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<CalibrationStep> {
    let targets = calibration_targets(model, x, graph, stack, cfg, seed)?;
    let mut tape = Tape::new();
    let theta = tape.leaf(model.theta.clone());
    let phi = tape.leaf(model.phi.clone());
    let (loss, clamp_count) =
        match sm_objective_on_tape(&mut tape, theta, phi, x, graph, stack, cfg, &targets) {
            Ok(v) => v,
            Err(Error::NonFinite(msg)) => {
                log::warn!("calibration skipped: {msg}");
                return Ok(CalibrationStep { loss: f64::NAN, clamp_count: 0, applied: false });
            }
            Err(e) => return Err(e),
        };
    let value = tape.scalar(loss);
    if !value.is_finite() {
        log::warn!("calibration skipped: loss {value}");
        return Ok(CalibrationStep { loss: value, clamp_count, applied: false });
    }
    let grads = tape.backward(loss)?;
    let gt = grads.get_or_zeros(theta, &model.theta);
    let gp = grads.get_or_zeros(phi, &model.phi);
    if !gt.is_finite() || !gp.is_finite() {
        log::warn!("calibration skipped: non-finite gradient");
        return Ok(CalibrationStep { loss: value, clamp_count, applied: false });
    }
    model.optimizer.step(&mut [&mut model.theta, &mut model.phi], &[&gt, &gp])?;
    Ok(CalibrationStep { loss: value, clamp_count, applied: true })
}

/// Train on `dataset.splits` and keep the parameters with the best
/// validation accuracy (first epoch wins ties).
pub fn train(dataset: &Dataset, cfg: &ExperimentConfig, seed: u64) -> Result<TrainOutcome> {
    cfg.validate()?;
    let splits = &dataset.splits;
    if splits.train.is_empty() {
        return Err(Error::parameter("training split is empty"));
    }
    let x = &dataset.features;
    let graph = &dataset.graph;
    let labels = &dataset.labels;
    let mut model = ModelState::for_config(dataset.num_features(), dataset.num_classes, cfg, seed)?;

    let score = |logits: &Matrix, idx: &[usize]| -> Result<f64> {
        if idx.is_empty() {
            Ok(f64::NAN)
        } else {
            Ok(evaluate(logits, labels, idx)?.accuracy)
        }
    };
    let (logits, stack) = forward(x, graph, &model, cfg, false, seed::derive(seed, &[TAG_EVAL, 0]))?;
    let mut best = (0usize, score(&logits, &splits.val)?, model.clone(), stack, logits);
    let mut curve = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        let mut tape = Tape::new();
        let theta = tape.leaf(model.theta.clone());
        let phi = tape.leaf(model.phi.clone());
        let opts = ForwardOptions {
            training: true,
            seed: seed::derive(seed, &[TAG_TRAIN, epoch as u64]),
            trace: false,
        };
        let out = forward_on_tape(&mut tape, theta, phi, x, graph, cfg, &opts, None)?;
        let loss = tape.softmax_xent(out.logits, labels, &splits.train)?;
        let train_loss = tape.scalar(loss);
        if !train_loss.is_finite() {
            return Err(Error::NonFinite(format!(
                "training loss {train_loss} at epoch {epoch}; |Θ|max={:.3e}, |Φ|max={:.3e}, layers={:?}",
                model.theta.max_abs(),
                model.phi.max_abs(),
                out.stack.summaries
            )));
        }
        let grads = tape.backward(loss)?;
        let gt = grads.get_or_zeros(theta, &model.theta);
        let gp = grads.get_or_zeros(phi, &model.phi);
        model.optimizer.step(&mut [&mut model.theta, &mut model.phi], &[&gt, &gp])?;
        let train_stack = out.stack;
        drop(tape);

        let mut sm_loss = None;
        for step in 0..cfg.calibration_steps {
            let s = seed::derive(seed, &[TAG_CALIBRATE, epoch as u64, step as u64]);
            let r = calibrate_step(&mut model, x, graph, &train_stack, cfg, s)?;
            log::debug!("calibration epoch={epoch} step={step} loss={} clamps={}", r.loss, r.clamp_count);
            if !r.applied {
                break;
            }
            sm_loss = Some(r.loss);
        }
        if !model.is_finite() {
            return Err(Error::NonFinite(format!("parameters after epoch {epoch}")));
        }
        model.epoch = epoch;

        let (logits, stack) =
            forward(x, graph, &model, cfg, false, seed::derive(seed, &[TAG_EVAL, epoch as u64]))?;
        let val_acc = score(&logits, &splits.val)?;
        let test_acc = score(&logits, &splits.test)?;
        curve.push(EpochRecord {
            epoch,
            train_loss,
            val_acc,
            test_acc,
            sm_loss,
            removed: train_stack.summaries.iter().map(|s| s.removed).collect(),
            added: train_stack.summaries.iter().map(|s| s.added).collect(),
        });
        if val_acc > best.1 || (best.1.is_nan() && epoch == cfg.epochs) {
            best = (epoch, val_acc, model.clone(), stack, logits);
        }
    }

    let (best_epoch, val_accuracy, model, stack, logits) = best;
    Ok(TrainOutcome {
        train_accuracy: score(&logits, &splits.train)?,
        test_accuracy: score(&logits, &splits.test)?,
        val_accuracy,
        best_epoch,
        model,
        curve,
        stack,
        logits,
    })
}

pub fn write_curve_csv(curve: &[EpochRecord], path: &Path) -> Result<()> {
    let join = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(";");
    let mut s = String::from(CURVE_HEADER);
    s.push('\n');
    for r in curve {
        let sm = r.sm_loss.map(|v| v.to_string()).unwrap_or_default();
        writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.epoch,
            r.train_loss,
            r.val_acc,
            r.test_acc,
            sm,
            join(&r.removed),
            join(&r.added)
        )
        .unwrap();
    }
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_sbm, SbmParams};
    use crate::torque::Variant;

    fn toy() -> Dataset {
        generate_sbm(&SbmParams { n: 40, classes: 2, p_in: 0.2, p_out: 0.02, dim: 6, seed: 3 }).unwrap()
    }

    fn small_cfg(variant: Variant) -> ExperimentConfig {
        ExperimentConfig {
            variant,
            layers: 2,
            hidden: 8,
            epochs: 3,
            lr: 0.01,
            dropout: 0.1,
            candidates: 2,
            seeds: vec![0],
            ..Default::default()
        }
    }

    #[test]
    fn zero_epochs_keeps_initial_model() {
        let d = toy();
        let cfg = ExperimentConfig { epochs: 0, ..small_cfg(Variant::MThr) };
        let out = train(&d, &cfg, 4).unwrap();
        let init = ModelState::for_config(6, 2, &cfg, 4).unwrap();
        assert_eq!(out.model.theta, init.theta);
        assert_eq!(out.best_epoch, 0);
        assert!(out.curve.is_empty());
    }

    #[test]
    fn reproducible_runs() {
        let d = toy();
        let cfg = small_cfg(Variant::MThr);
        let a = train(&d, &cfg, 1).unwrap();
        let b = train(&d, &cfg, 1).unwrap();
        assert_eq!(a.curve, b.curve);
        assert_eq!(a.test_accuracy.to_bits(), b.test_accuracy.to_bits());
        assert_eq!(a.curve.len(), 3);
    }

    #[test]
    fn no_calibration_steps_leaves_sm_empty() {
        let d = toy();
        let cfg = ExperimentConfig { calibration_steps: 0, ..small_cfg(Variant::None) };
        let out = train(&d, &cfg, 0).unwrap();
        assert!(out.curve.iter().all(|r| r.sm_loss.is_none()));
    }

    #[test]
    fn curve_csv_layout() {
        let d = toy();
        let out = train(&d, &small_cfg(Variant::RThr), 2).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("curve.csv");
        write_curve_csv(&out.curve, &p).unwrap();
        let text = std::fs::read_to_string(p).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CURVE_HEADER);
        assert_eq!(lines.len(), 4);
        assert!(lines[1..].iter().all(|l| l.split(',').count() == 7));
    }
}
