//! Dataset construction from oracle solutions, supervised training with
//! early stopping, and the DLTS optimality-gap report.

use std::collections::HashMap;
use std::io::Write;
use std::time::Duration;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encoding::{decode_bay, extract_examples, masked_policy, PolicyExample, ValueExample};
use crate::error::{Error, Result};
use crate::model::{Instance, Solution};
use crate::nn::{backward_and_step, loss_cce, AdamConfig, AdamState, Head, Network, Target};
use crate::oracle::OracleResult;
use crate::search::{search, Models, PolicyModel, SearchConfig, SearchResult, ValueModel};

pub const TRAIN_REPORT_SCHEMA: &str = "train-report/1";

/// Reference solution for one instance.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Label {
    pub solution: Option<Solution>,
    pub proven: bool,
}

impl From<&OracleResult> for Label {
    fn from(r: &OracleResult) -> Self {
        Label {
            solution: r.solution.clone(),
            proven: r.proven_optimal,
        }
    }
}

/// Examples of one split together with the instances they came from.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Split {
    pub ids: Vec<String>,
    pub proven: Vec<bool>,
    pub policy: Vec<PolicyExample>,
    pub value: Vec<ValueExample>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub stacks: usize,
    pub tiers: usize,
    /// Input scaling constant: the largest group value over all instances.
    pub scale: f64,
    pub train: Split,
    pub validation: Split,
    /// Instances without a reference solution.
    pub skipped: usize,
}

/// Extracts examples from every labelled instance and splits by instance:
/// a seeded shuffle, then the first `round(ratio * n)` go to training.
pub fn build_dataset(
    instances: &[Instance],
    labels: &[Label],
    train_ratio: f64,
    seed: u64,
) -> Result<Dataset> {
    if instances.len() != labels.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} instances but {} labels",
            instances.len(),
            labels.len()
        )));
    }
    if !(0.0..=1.0).contains(&train_ratio) {
        return Err(Error::Config(format!(
            "split ratio {train_ratio} is outside [0, 1]"
        )));
    }
    let Some(first) = instances.first() else {
        return Err(Error::EmptyDataset);
    };
    let (stacks, tiers) = (first.bay.stacks(), first.bay.tiers());
    if let Some(other) = instances
        .iter()
        .find(|i| i.bay.stacks() != stacks || i.bay.tiers() != tiers)
    {
        return Err(Error::ShapeMismatch(format!(
            "{} is {}x{}, expected {stacks}x{tiers}",
            other.id,
            other.bay.stacks(),
            other.bay.tiers()
        )));
    }
    let scale = instances
        .iter()
        .map(|i| i.bay.max_group())
        .max()
        .unwrap_or(0)
        .max(1) as f64;

    let extracted: Vec<Option<(Vec<PolicyExample>, Vec<ValueExample>)>> = instances
        .par_iter()
        .zip(labels)
        .map(|(inst, label)| {
            label
                .solution
                .as_ref()
                .map(|sol| extract_examples(inst, sol, scale))
                .transpose()
        })
        .collect::<Result<_>>()?;

    let mut solved: Vec<usize> = (0..instances.len())
        .filter(|&i| extracted[i].is_some())
        .collect();
    let skipped = instances.len() - solved.len();
    solved.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = (train_ratio * solved.len() as f64).round() as usize;

    let mut extracted = extracted;
    let mut fill = |split: &mut Split, idx: &[usize]| {
        for &i in idx {
            let (p, v) = extracted[i].take().expect("solved instance");
            split.ids.push(instances[i].id.clone());
            split.proven.push(labels[i].proven);
            split.policy.extend(p);
            split.value.extend(v);
        }
    };
    let mut train = Split::default();
    let mut validation = Split::default();
    fill(&mut train, &solved[..n_train]);
    fill(&mut validation, &solved[n_train..]);
    Ok(Dataset {
        stacks,
        tiers,
        scale,
        train,
        validation,
        skipped,
    })
}

pub fn policy_pairs(examples: &[PolicyExample]) -> Vec<(&[f64], Target)> {
    examples
        .iter()
        .map(|e| (e.input.as_slice(), Target::Class(e.target)))
        .collect()
}

pub fn value_pairs(examples: &[ValueExample]) -> Vec<(&[f64], Target)> {
    examples
        .iter()
        .map(|e| (e.input.as_slice(), Target::Value(e.target)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Epochs without validation improvement tolerated before stopping.
    pub patience: usize,
    pub minibatch: usize,
    pub adam: AdamConfig,
    /// Seeds the per-epoch shuffles.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 500,
            patience: 50,
            minibatch: 64,
            adam: AdamConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    /// Cross-entropy (policy) or squared error (value).
    pub val_loss: f64,
    /// Accuracy of the raw argmax (policy) or mean absolute error (value).
    pub val_metric: f64,
    /// Accuracy of the argmax over legal moves only (policy).
    pub val_masked_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub head: Head,
    pub epochs: Vec<EpochRecord>,
    /// 1-based epoch whose snapshot was returned.
    pub best_epoch: usize,
    pub stopped_epoch: usize,
}

impl TrainReport {
    pub fn best(&self) -> &EpochRecord {
        &self.epochs[self.best_epoch - 1]
    }

    /// `epoch,train_loss,val_loss,val_accuracy_or_mae,val_masked_accuracy`
    /// after a schema comment line.
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut out = out;
        writeln!(out, "#schema={TRAIN_REPORT_SCHEMA}")?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "epoch",
            "train_loss",
            "val_loss",
            "val_accuracy_or_mae",
            "val_masked_accuracy",
        ])?;
        for r in &self.epochs {
            w.write_record([
                r.epoch.to_string(),
                r.train_loss.to_string(),
                r.val_loss.to_string(),
                r.val_metric.to_string(),
                r.val_masked_accuracy
                    .map(|a| a.to_string())
                    .unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Validation loss and metrics of `network` on `examples`.
pub fn evaluate(
    network: &Network,
    examples: &[(&[f64], Target)],
) -> Result<(f64, f64, Option<f64>)> {
    if examples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = examples.len() as f64;
    let (mut loss, mut metric, mut masked) = (0.0, 0.0, 0.0);
    for &(input, target) in examples {
        let out = network.forward(input)?;
        match (network.head(), target) {
            (Head::Policy, Target::Class(c)) if c < out.len() => {
                loss += -out[c].max(crate::nn::PROB_FLOOR).ln();
                if argmax(&out) == c {
                    metric += 1.0;
                }
                let bay = decode_bay(input, network.stacks(), network.tiers(), network.scale())?;
                if let Ok(ranked) = masked_policy(&out, &bay, None) {
                    if crate::encoding::move_index(ranked[0].0, network.stacks()) == c {
                        masked += 1.0;
                    }
                }
            }
            (Head::Value, Target::Value(y)) => {
                let d = out[0] - y;
                loss += d * d;
                metric += d.abs();
            }
            (head, target) => {
                return Err(Error::ShapeMismatch(format!(
                    "target {target:?} for a {head:?} head"
                )))
            }
        }
    }
    let masked = (network.head() == Head::Policy).then_some(masked / n);
    Ok((loss / n, metric / n, masked))
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// Minibatch Adam with early stopping on validation loss; returns the
/// snapshot with the lowest validation loss.
pub fn train(
    network: Network,
    train_set: &[(&[f64], Target)],
    validation: &[(&[f64], Target)],
    config: &TrainConfig,
) -> Result<(Network, TrainReport)> {
    train_observed(network, train_set, validation, config, |_, _| {})
}

/// [`train`] calling `observe` with each epoch's record and the network at
/// the end of that epoch.
pub fn train_observed(
    mut network: Network,
    train_set: &[(&[f64], Target)],
    validation: &[(&[f64], Target)],
    config: &TrainConfig,
    mut observe: impl FnMut(&EpochRecord, &Network),
) -> Result<(Network, TrainReport)> {
    if train_set.is_empty() || validation.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if config.minibatch == 0 || config.epochs == 0 {
        return Err(Error::Config(
            "epochs and minibatch size must be positive".into(),
        ));
    }
    let mut adam = AdamState::new(&network, config.adam);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut batch = Vec::with_capacity(config.minibatch);
    let mut records = Vec::new();
    let mut best: Option<(usize, f64, Network)> = None;

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(config.minibatch) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| train_set[i]));
            total += backward_and_step(&mut network, &mut adam, &batch)? * chunk.len() as f64;
        }
        let (val_loss, val_metric, val_masked_accuracy) = evaluate(&network, validation)?;
        let record = EpochRecord {
            epoch,
            train_loss: total / train_set.len() as f64,
            val_loss,
            val_metric,
            val_masked_accuracy,
        };
        observe(&record, &network);
        records.push(record);
        match &best {
            Some((_, loss, _)) if val_loss >= *loss => {}
            _ => best = Some((epoch, val_loss, network.clone())),
        }
        let best_epoch = best.as_ref().map_or(epoch, |b| b.0);
        if epoch - best_epoch > config.patience {
            break;
        }
    }
    let (best_epoch, _, snapshot) = best.expect("at least one epoch ran");
    let report = TrainReport {
        head: network.head(),
        stopped_epoch: records.len(),
        epochs: records,
        best_epoch,
    };
    Ok((snapshot, report))
}

/// Trains on the split matching the network's head.
pub fn train_on_dataset(
    network: Network,
    dataset: &Dataset,
    config: &TrainConfig,
) -> Result<(Network, TrainReport)> {
    network.check_dims(dataset.stacks, dataset.tiers)?;
    if (network.scale() - dataset.scale).abs() > 0.0 {
        return Err(Error::ShapeMismatch(format!(
            "network scales inputs by {}, dataset by {}",
            network.scale(),
            dataset.scale
        )));
    }
    match network.head() {
        Head::Policy => train(
            network,
            &policy_pairs(&dataset.train.policy),
            &policy_pairs(&dataset.validation.policy),
            config,
        ),
        Head::Value => train(
            network,
            &value_pairs(&dataset.train.value),
            &value_pairs(&dataset.validation.value),
            config,
        ),
    }
}

/// Mean cross-entropy of a policy over examples; used to rank checkpoints.
pub fn policy_cce(network: &Network, examples: &[PolicyExample]) -> Result<f64> {
    if examples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut total = 0.0;
    for ex in examples {
        total += loss_cce(&network.forward(&ex.input)?, &ex.one_hot())?;
    }
    Ok(total / examples.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstanceOutcome {
    pub id: String,
    pub optimal: usize,
    pub moves: Option<usize>,
    pub nodes_opened: u64,
    pub wall_time: Duration,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapReport {
    pub solved: usize,
    /// Instances without a DLTS solution; excluded from the totals.
    pub unsolved: Vec<String>,
    pub dlts_moves: usize,
    pub optimal_moves: usize,
    pub gap_percent: f64,
    pub mean_time: Duration,
    pub outcomes: Vec<InstanceOutcome>,
}

impl GapReport {
    pub fn from_outcomes(outcomes: Vec<InstanceOutcome>) -> Self {
        let mut unsolved = Vec::new();
        let (mut dlts, mut opt) = (0, 0);
        for o in &outcomes {
            match o.moves {
                Some(m) => {
                    dlts += m;
                    opt += o.optimal;
                }
                None => unsolved.push(o.id.clone()),
            }
        }
        let mean_time = if outcomes.is_empty() {
            Duration::ZERO
        } else {
            outcomes.iter().map(|o| o.wall_time).sum::<Duration>() / outcomes.len() as u32
        };
        GapReport {
            solved: outcomes.len() - unsolved.len(),
            unsolved,
            dlts_moves: dlts,
            optimal_moves: opt,
            gap_percent: gap_percent(dlts, opt),
            mean_time,
            outcomes,
        }
    }
}

/// `100 * (dlts / optimal - 1)`; 0 when both totals are 0.
pub fn gap_percent(dlts_moves: usize, optimal_moves: usize) -> f64 {
    if optimal_moves == 0 {
        return if dlts_moves == 0 { 0.0 } else { f64::INFINITY };
    }
    100.0 * (dlts_moves as f64 / optimal_moves as f64 - 1.0)
}

/// Runs DLTS on every instance (in parallel) and compares against the
/// reference lengths.
pub fn validate_dlts(
    policy: &dyn PolicyModel,
    value: Option<&dyn ValueModel>,
    instances: &[Instance],
    optimal: &HashMap<String, usize>,
    config: &SearchConfig,
) -> Result<GapReport> {
    let models = Models::new(policy, value);
    let results: Vec<(usize, SearchResult)> = instances
        .par_iter()
        .map(|inst| {
            let opt = *optimal
                .get(&inst.id)
                .ok_or_else(|| Error::MissingReference(inst.id.clone()))?;
            Ok((opt, search(&inst.bay, models, config)?))
        })
        .collect::<Result<_>>()?;
    let outcomes = instances
        .iter()
        .zip(results)
        .map(|(inst, (optimal, res))| InstanceOutcome {
            id: inst.id.clone(),
            optimal,
            moves: res.ub(),
            nodes_opened: res.nodes_opened,
            wall_time: res.wall_time,
        })
        .collect();
    Ok(GapReport::from_outcomes(outcomes))
}
