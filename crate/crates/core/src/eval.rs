//! Evaluation harness: seeded missing-data injection, trial execution and
//! metric computation.
//!
//! A trial clones the model, nulls a fraction of each target attribute's
//! non-null cells chosen through a seeded shuffle, runs the configured
//! repair strategy and scores the fill log against the recorded originals.
//! Imputation rate is replaced over missing, accuracy is correct over
//! replaced; the missing count is observed on the injected tables, so
//! cells that were already null before injection count as missing but can
//! never be scored correct or incorrect.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fill::{DonorMode, DonorPolicy, FillRecord, ValueEq};
use crate::pipeline::{run_strategy, Strategy};
use crate::schema::{Dimension, WarehouseModel};
use crate::table::CellAddress;

/// The missing-rate grid used throughout the benchmark protocol.
pub const DEFAULT_RATES: [f64; 7] = [0.01, 0.05, 0.10, 0.20, 0.30, 0.40, 0.50];
pub const DEFAULT_TRIALS: usize = 20;

/// True when the attribute can be completed at all: a parameter at level 2
/// or higher of some hierarchy, or a weak attribute of a parameter at level
/// 1 or higher. Identifier values are unique, so nothing below those levels
/// ever finds a donor.
pub fn is_eligible(dim: &Dimension, attribute: &str) -> bool {
    dim.hierarchies.iter().any(|h| {
        if let Some(idx) = h.index_of(attribute) {
            idx >= 2
        } else {
            h.weak.iter().any(|(param, weaks)| {
                weaks.iter().any(|w| w == attribute)
                    && h.index_of(param).is_some_and(|idx| idx >= 1)
            })
        }
    })
}

/// Original values of the injected cells, keyed by address. Every recorded
/// address was non-null before injection and null after.
#[derive(Debug, Clone, Default)]
pub struct GroundTruth {
    pub entries: BTreeMap<CellAddress, String>,
}

impl GroundTruth {
    pub fn merge(&mut self, other: GroundTruth) {
        self.entries.extend(other.entries);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Nulls `floor(rate * non_null_count)` cells of one attribute, picked by a
/// seeded shuffle of the row indices. Rows that are already null are
/// skipped and the next rows in shuffle order are taken; the table's
/// physical row order never changes.
pub fn inject(
    dim: &mut Dimension,
    attribute: &str,
    rate: f64,
    seed: u64,
) -> Result<GroundTruth> {
    if !(rate > 0.0 && rate <= 1.0) {
        return Err(Error::RateOutOfRange { rate });
    }
    if !is_eligible(dim, attribute) {
        return Err(Error::IneligibleAttribute {
            dimension: dim.name.clone(),
            attribute: attribute.to_string(),
        });
    }
    let col = dim.table.column_of(attribute)?;
    let non_null = dim.table.non_null_count(col);
    // the epsilon guards against decimal rates that sit just below their
    // binary representation (0.3 * 10 = 2.999…)
    let quota = ((rate * non_null as f64) + 1e-9).floor() as usize;

    let mut order: Vec<usize> = (0..dim.table.row_count()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let mut truth = GroundTruth::default();
    let mut nulled = 0usize;
    for &row in &order {
        if nulled == quota {
            break;
        }
        if let Some(value) = dim.table.get(row, col) {
            truth.entries.insert(
                CellAddress {
                    dimension: dim.name.clone(),
                    row,
                    attribute: attribute.to_string(),
                },
                value.to_string(),
            );
            dim.table.set(row, col, None);
            nulled += 1;
        }
    }
    Ok(truth)
}

/// One injection round over several target attributes. Per-target seeds are
/// drawn from a stream seeded with the plan seed, so plans are deterministic
/// and independent across seeds.
#[derive(Debug, Clone)]
pub struct InjectionPlan {
    /// (dimension, attribute) pairs; every attribute must be eligible.
    pub targets: Vec<(String, String)>,
    pub rate: f64,
    pub seed: u64,
}

impl InjectionPlan {
    pub fn execute(&self, model: &mut WarehouseModel) -> Result<GroundTruth> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut truth = GroundTruth::default();
        for (dim_name, attribute) in &self.targets {
            let target_seed = rng.next_u64();
            let dim = model.dimension_mut(dim_name)?;
            truth.merge(inject(dim, attribute, self.rate, target_seed)?);
        }
        Ok(truth)
    }
}

/// Counts for one attribute within one trial.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AttributeScore {
    pub missing: usize,
    pub replaced: usize,
    pub correct: usize,
}

impl AttributeScore {
    pub fn imputation_rate(&self) -> Option<f64> {
        (self.missing > 0).then(|| self.replaced as f64 / self.missing as f64)
    }

    /// `None` when nothing was replaced; accuracy is then undefined and
    /// must not skew averages.
    pub fn accuracy(&self) -> Option<f64> {
        (self.replaced > 0).then(|| self.correct as f64 / self.replaced as f64)
    }
}

/// Per-attribute scores for one trial, keyed by (dimension, attribute).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ScoreReport {
    pub per_attribute: BTreeMap<(String, String), AttributeScore>,
}

impl ScoreReport {
    /// Count-weighted combination of the per-attribute scores.
    pub fn pooled(&self) -> AttributeScore {
        let mut total = AttributeScore::default();
        for s in self.per_attribute.values() {
            total.missing += s.missing;
            total.replaced += s.replaced;
            total.correct += s.correct;
        }
        total
    }
}

/// Scores a fill log against ground truth alone: the missing count per
/// attribute is the number of injected cells. A fill at an address that was
/// never injected is a protocol violation — the imputer touched a cell the
/// harness did not null.
pub fn score(fills: &[FillRecord], truth: &GroundTruth, equality: ValueEq) -> Result<ScoreReport> {
    let mut report = ScoreReport::default();
    for address in truth.entries.keys() {
        report
            .per_attribute
            .entry((address.dimension.clone(), address.attribute.clone()))
            .or_default()
            .missing += 1;
    }
    score_fills(&mut report, fills, truth, equality)?;
    Ok(report)
}

/// Scores against ground truth with observed missing counts: `missing` maps
/// (dimension, attribute) to the number of null cells at imputation start,
/// which includes cells that were already null before injection.
pub fn score_with_missing(
    fills: &[FillRecord],
    truth: &GroundTruth,
    missing: &BTreeMap<(String, String), usize>,
    equality: ValueEq,
) -> Result<ScoreReport> {
    let mut report = ScoreReport::default();
    for (key, count) in missing {
        report.per_attribute.entry(key.clone()).or_default().missing = *count;
    }
    score_fills(&mut report, fills, truth, equality)?;
    Ok(report)
}

fn score_fills(
    report: &mut ScoreReport,
    fills: &[FillRecord],
    truth: &GroundTruth,
    equality: ValueEq,
) -> Result<()> {
    for fill in fills {
        let Some(original) = truth.entries.get(&fill.target) else {
            return Err(Error::ProtocolViolation {
                address: fill.target.clone(),
            });
        };
        let entry = report
            .per_attribute
            .entry((fill.target.dimension.clone(), fill.target.attribute.clone()))
            .or_default();
        entry.replaced += 1;
        if equality.eq(&fill.value, original) {
            entry.correct += 1;
        }
    }
    Ok(())
}

/// Outcome of one trial: the scores plus the wall-clock time of the
/// imputation call alone (injection, cloning and scoring excluded).
#[derive(Debug, Clone)]
pub struct TrialReport {
    pub scores: ScoreReport,
    pub runtime: Duration,
}

#[derive(Debug, Clone)]
pub struct EvalOptions {
    /// Missing rates as fractions in (0, 1].
    pub rates: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub strategy: Strategy,
    pub policy: DonorPolicy,
    pub match_config: crate::matcher::MatchConfig,
    pub passes: usize,
    /// Worker threads for trials; 1 keeps runtime curves reproducible.
    pub jobs: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            rates: DEFAULT_RATES.to_vec(),
            trials: DEFAULT_TRIALS,
            seed: 42,
            strategy: Strategy::Intra,
            policy: DonorPolicy::first(),
            match_config: crate::matcher::MatchConfig::default(),
            passes: 1,
            jobs: 1,
        }
    }
}

/// Per-attribute averages across the trials of one rate.
#[derive(Debug, Clone, Default)]
pub struct AttributeSummary {
    pub mean_missing: f64,
    pub mean_replaced: f64,
    pub mean_imputation_rate: Option<f64>,
    pub mean_accuracy: Option<f64>,
}

/// Averages across the trials of one rate. Accuracy pools only trials where
/// at least one fill happened; with zero such trials it is undefined.
#[derive(Debug, Clone)]
pub struct RateSummary {
    pub rate: f64,
    pub trials: usize,
    pub mean_imputation_rate: Option<f64>,
    pub mean_accuracy: Option<f64>,
    pub mean_runtime_s: f64,
    pub per_attribute: BTreeMap<(String, String), AttributeSummary>,
}

/// Runs one trial: clone, inject every target, impute, score with observed
/// missing counts.
pub fn run_single_trial(
    model: &WarehouseModel,
    targets: &[(String, String)],
    rate: f64,
    trial_seed: u64,
    opts: &EvalOptions,
) -> Result<TrialReport> {
    let mut working = model.clone();
    let plan = InjectionPlan {
        targets: targets.to_vec(),
        rate,
        seed: trial_seed,
    };
    let truth = plan.execute(&mut working)?;

    let mut missing: BTreeMap<(String, String), usize> = BTreeMap::new();
    for (dim_name, attribute) in targets {
        let dim = working.dimension(dim_name)?;
        let col = dim.table.column_of(attribute)?;
        missing.insert(
            (dim_name.clone(), attribute.clone()),
            dim.table.missing_rows(col).len(),
        );
    }

    let start = Instant::now();
    let fills = run_strategy(
        &mut working,
        opts.strategy,
        &opts.match_config,
        opts.policy,
        opts.passes,
    )?;
    let runtime = start.elapsed();

    let scores = score_with_missing(&fills, &truth, &missing, opts.policy.equality)?;
    Ok(TrialReport { scores, runtime })
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

/// Per-attribute series collected across trials: missing, replaced,
/// imputation rates, accuracies.
type AttributeSeries = (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>);

fn summarize(rate: f64, trials: &[TrialReport]) -> RateSummary {
    let mut pooled_rates = Vec::new();
    let mut pooled_accuracies = Vec::new();
    let mut runtimes = Vec::new();
    let mut per_attr: BTreeMap<(String, String), AttributeSeries> = BTreeMap::new();

    for trial in trials {
        let pooled = trial.scores.pooled();
        if let Some(r) = pooled.imputation_rate() {
            pooled_rates.push(r);
        }
        if let Some(a) = pooled.accuracy() {
            pooled_accuracies.push(a);
        }
        runtimes.push(trial.runtime.as_secs_f64());
        for (key, s) in &trial.scores.per_attribute {
            let slot = per_attr.entry(key.clone()).or_default();
            slot.0.push(s.missing as f64);
            slot.1.push(s.replaced as f64);
            if let Some(r) = s.imputation_rate() {
                slot.2.push(r);
            }
            if let Some(a) = s.accuracy() {
                slot.3.push(a);
            }
        }
    }

    RateSummary {
        rate,
        trials: trials.len(),
        mean_imputation_rate: mean(&pooled_rates),
        mean_accuracy: mean(&pooled_accuracies),
        mean_runtime_s: mean(&runtimes).unwrap_or(0.0),
        per_attribute: per_attr
            .into_iter()
            .map(|(key, (missing, replaced, rates, accuracies))| {
                (
                    key,
                    AttributeSummary {
                        mean_missing: mean(&missing).unwrap_or(0.0),
                        mean_replaced: mean(&replaced).unwrap_or(0.0),
                        mean_imputation_rate: mean(&rates),
                        mean_accuracy: mean(&accuracies),
                    },
                )
            })
            .collect(),
    }
}

/// Runs `opts.trials` independent trials per rate (trial `i` uses seed
/// `opts.seed + i`) and averages imputation rate, accuracy and runtime.
/// With `jobs > 1`, trials of a rate run on worker threads; results are
/// merged in trial order so the output is identical to a sequential run.
pub fn run_trials(
    model: &WarehouseModel,
    targets: &[(String, String)],
    opts: &EvalOptions,
) -> Result<Vec<RateSummary>> {
    if opts.trials == 0 {
        return Err(Error::SyntheticSpec {
            message: "trials must be at least 1".into(),
        });
    }
    for (dim_name, attribute) in targets {
        let dim = model.dimension(dim_name)?;
        if !is_eligible(dim, attribute) {
            return Err(Error::IneligibleAttribute {
                dimension: dim_name.clone(),
                attribute: attribute.clone(),
            });
        }
    }

    // trial-major execution order: transient machine noise spreads evenly
    // over all rates instead of landing on one rate's whole trial block,
    // which keeps the measured runtime curve honest
    let runs: Vec<(usize, f64, u64)> = (0..opts.trials)
        .flat_map(|trial| {
            let seed = opts.seed.wrapping_add(trial as u64);
            opts.rates
                .iter()
                .enumerate()
                .map(move |(rate_idx, &rate)| (rate_idx, rate, seed))
        })
        .collect();

    let reports: Vec<Result<TrialReport>> = if opts.jobs <= 1 {
        runs.iter()
            .map(|&(_, rate, seed)| run_single_trial(model, targets, rate, seed, opts))
            .collect()
    } else {
        let mut slots: Vec<Option<Result<TrialReport>>> = Vec::new();
        slots.resize_with(runs.len(), || None);
        let chunk = runs.len().div_ceil(opts.jobs);
        std::thread::scope(|scope| {
            for (slot_chunk, run_chunk) in slots.chunks_mut(chunk).zip(runs.chunks(chunk)) {
                scope.spawn(move || {
                    for (slot, &(_, rate, seed)) in slot_chunk.iter_mut().zip(run_chunk) {
                        *slot = Some(run_single_trial(model, targets, rate, seed, opts));
                    }
                });
            }
        });
        slots.into_iter().map(|s| s.expect("trial ran")).collect()
    };

    let mut per_rate: Vec<Vec<TrialReport>> = vec![Vec::new(); opts.rates.len()];
    for (&(rate_idx, _, _), report) in runs.iter().zip(reports) {
        per_rate[rate_idx].push(report?);
    }
    Ok(opts
        .rates
        .iter()
        .zip(per_rate)
        .map(|(&rate, trials)| summarize(rate, &trials))
        .collect())
}

fn fmt_opt(value: Option<f64>) -> String {
    match value {
        Some(v) => format!("{v:.6}"),
        None => "n/a".to_string(),
    }
}

/// Writes the per-rate results table:
/// `rate,trials,imputation_rate,accuracy,runtime_s,strategy,policy`.
pub fn write_results_csv(
    summaries: &[RateSummary],
    strategy: Strategy,
    policy: DonorPolicy,
    path: &Path,
) -> Result<()> {
    let mut out = String::from("rate,trials,imputation_rate,accuracy,runtime_s,strategy,policy\n");
    let policy_name = match policy.mode {
        DonorMode::First => "first",
        DonorMode::Majority => "majority",
    };
    for s in summaries {
        out.push_str(&format!(
            "{},{},{},{},{:.3},{},{}\n",
            s.rate,
            s.trials,
            fmt_opt(s.mean_imputation_rate),
            fmt_opt(s.mean_accuracy),
            s.mean_runtime_s,
            strategy,
            policy_name,
        ));
    }
    std::fs::write(path, out).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

/// Optional per-attribute breakdown, one row per (rate, dimension,
/// attribute).
pub fn write_breakdown_csv(summaries: &[RateSummary], path: &Path) -> Result<()> {
    let mut out =
        String::from("rate,dimension,attribute,mean_missing,mean_replaced,imputation_rate,accuracy\n");
    for s in summaries {
        for ((dim, attr), a) in &s.per_attribute {
            out.push_str(&format!(
                "{},{},{},{:.3},{:.3},{},{}\n",
                s.rate,
                dim,
                attr,
                a.mean_missing,
                a.mean_replaced,
                fmt_opt(a.mean_imputation_rate),
                fmt_opt(a.mean_accuracy),
            ));
        }
    }
    std::fs::write(path, out).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}
