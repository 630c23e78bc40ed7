//! The four evaluation protocols: data removal, point addition, ranking
//! stability, and timing.

use std::time::Instant;

use serde_json::json;

use crate::data::{shuffled_indices, EmbeddingDataset};
use crate::error::{EvError, Result};
use crate::scalar::{to_f64, Real};
use crate::valuers::{evaluate, train_softmax};

use super::config::ProtocolConfig;
use super::report::{ExperimentReport, MetricPoint, SeedEntry};

/// Indices ordered by descending score, ties broken by ascending index.
fn rank_order<T: Real>(scores: &[T]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .expect("finite scores")
            .then(a.cmp(&b))
    });
    order
}

fn config_echo(cfg: &ProtocolConfig, extra: serde_json::Value) -> serde_json::Value {
    json!({ "protocol_config": cfg, "inputs": extra })
}

fn dataset_echo<T: Real>(name: &str, ds: &EmbeddingDataset<T>) -> serde_json::Value {
    json!({
        "name": name,
        "n": ds.n(),
        "d": ds.d(),
        "classes": ds.num_classes(),
        "domain_tag": ds.domain_tag(),
    })
}

/// Data-removal protocol: score the training points, drop the top
/// `removal_fraction` by value, train on the remainder, and report accuracy
/// on the shifted test set. Lower accuracy means the valuer flagged
/// genuinely informative points.
pub fn run_removal<T: Real>(
    train: &EmbeddingDataset<T>,
    val: Option<&EmbeddingDataset<T>>,
    ood_test: &EmbeddingDataset<T>,
    cfg: &ProtocolConfig,
) -> Result<ExperimentReport> {
    cfg.validate()?;
    if train.d() != ood_test.d() {
        return Err(EvError::DimensionMismatch {
            expected: train.d(),
            got: ood_test.d(),
        });
    }
    let mut per_seed = Vec::new();
    let mut flags = Vec::new();
    for &seed in &cfg.seeds {
        let subset;
        let scored_train = match cfg.sample_train {
            Some(m) => {
                if m == 0 || m > train.n() {
                    return Err(EvError::invalid(format!(
                        "sample_train {m} out of range for {} points",
                        train.n()
                    )));
                }
                let mut idx = shuffled_indices(train.n(), seed)[..m].to_vec();
                idx.sort_unstable();
                subset = train.subset(&idx)?;
                &subset
            }
            None => train,
        };
        let scored = cfg.valuer.score(scored_train, val, seed)?;
        for note in scored.notes {
            let tagged = format!("seed {seed}: {note}");
            if !flags.contains(&tagged) {
                flags.push(tagged);
            }
        }
        let order = rank_order(&scored.values.scores);
        let drop = (scored_train.n() as f64 * cfg.removal_fraction).floor() as usize;
        let mut kept: Vec<usize> = order[drop..].to_vec();
        kept.sort_unstable();
        let remainder = scored_train.subset(&kept)?;
        let model = train_softmax(&remainder, cfg.classifier.epochs, cfg.classifier.lr)?;
        let accuracy = to_f64(evaluate(&model, ood_test)?);
        per_seed.push(SeedEntry {
            seed,
            metrics: vec![
                MetricPoint {
                    metric: "ood_accuracy".into(),
                    step: None,
                    value: accuracy,
                },
                MetricPoint {
                    metric: "kept_points".into(),
                    step: None,
                    value: kept.len() as f64,
                },
            ],
        });
    }
    ExperimentReport::assemble(
        "removal",
        config_echo(
            cfg,
            json!({
                "train": dataset_echo("train", train),
                "val": val.map(|v| dataset_echo("val", v)),
                "ood_test": dataset_echo("ood_test", ood_test),
            }),
        ),
        per_seed,
        flags,
    )
}

/// Point-addition protocol: rank the candidate pool by value and grow the
/// training set by the highest-valued prefix at each configured step,
/// retraining and re-evaluating on the shifted test set.
pub fn run_addition<T: Real>(
    initial: &EmbeddingDataset<T>,
    pool: &EmbeddingDataset<T>,
    val: Option<&EmbeddingDataset<T>>,
    ood_test: &EmbeddingDataset<T>,
    cfg: &ProtocolConfig,
) -> Result<ExperimentReport> {
    cfg.validate()?;
    for &step in &cfg.addition_steps {
        if step > pool.n() {
            return Err(EvError::StepExceedsPool {
                step,
                pool: pool.n(),
            });
        }
    }
    let mut per_seed = Vec::new();
    let mut flags = Vec::new();
    for &seed in &cfg.seeds {
        let scored = cfg.valuer.score(pool, val, seed)?;
        for note in scored.notes {
            let tagged = format!("seed {seed}: {note}");
            if !flags.contains(&tagged) {
                flags.push(tagged);
            }
        }
        let order = rank_order(&scored.values.scores);
        let mut metrics = Vec::new();
        for &step in &cfg.addition_steps {
            let training = if step == 0 {
                initial.clone()
            } else {
                let added = pool.subset(&order[..step])?;
                EmbeddingDataset::concat(initial, &added)?
            };
            let model = train_softmax(&training, cfg.classifier.epochs, cfg.classifier.lr)?;
            metrics.push(MetricPoint {
                metric: "ood_accuracy".into(),
                step: Some(step as u64),
                value: to_f64(evaluate(&model, ood_test)?),
            });
        }
        per_seed.push(SeedEntry { seed, metrics });
    }
    ExperimentReport::assemble(
        "addition",
        config_echo(
            cfg,
            json!({
                "initial": dataset_echo("initial", initial),
                "pool": dataset_echo("pool", pool),
                "val": val.map(|v| dataset_echo("val", v)),
                "ood_test": dataset_echo("ood_test", ood_test),
            }),
        ),
        per_seed,
        flags,
    )
}

/// Ranking-stability protocol: value a pool whose fixed core stays pinned
/// while a small block is freshly drawn each repeat, then report the mean
/// standard deviation of the fixed points' ranks across repeats.
pub fn run_stability<T: Real>(
    source: &EmbeddingDataset<T>,
    val: Option<&EmbeddingDataset<T>>,
    cfg: &ProtocolConfig,
) -> Result<ExperimentReport> {
    cfg.validate()?;
    let st = cfg.stability;
    let varied = st.pool - st.fixed;
    // Replacement blocks are drawn without reuse across repeats, past the
    // initial pool.
    let needed = st.pool + varied * st.repeats;
    if source.n() < needed {
        return Err(EvError::InsufficientSource {
            needed,
            available: source.n(),
        });
    }
    let mut per_seed = Vec::new();
    let mut flags = Vec::new();
    for &meta_seed in &cfg.seeds {
        let layout = shuffled_indices(source.n(), meta_seed);
        let fixed = &layout[..st.fixed];
        // ranks[r][p]: rank of fixed point p in repeat r (1-based position).
        let mut ranks = vec![vec![0usize; st.fixed]; st.repeats];
        for r in 0..st.repeats {
            let block = &layout[st.pool + r * varied..st.pool + (r + 1) * varied];
            let mut indices = fixed.to_vec();
            indices.extend_from_slice(block);
            let set = source.subset(&indices)?;
            let valuer_seed = meta_seed.wrapping_mul(1_000_003).wrapping_add(r as u64);
            let scored = cfg.valuer.score(&set, val, valuer_seed)?;
            for note in scored.notes {
                let tagged = format!("meta-seed {meta_seed} repeat {r}: {note}");
                if !flags.contains(&tagged) {
                    flags.push(tagged);
                }
            }
            let order = rank_order(&scored.values.scores);
            // position -> rank
            let mut rank_of = vec![0usize; set.n()];
            for (rank, &pos) in order.iter().enumerate() {
                rank_of[pos] = rank + 1;
            }
            for p in 0..st.fixed {
                ranks[r][p] = rank_of[p];
            }
        }
        let repeats = st.repeats as f64;
        let mut total_std = 0.0;
        for p in 0..st.fixed {
            let mean = (0..st.repeats).map(|r| ranks[r][p] as f64).sum::<f64>() / repeats;
            let var = (0..st.repeats)
                .map(|r| (ranks[r][p] as f64 - mean).powi(2))
                .sum::<f64>()
                / repeats;
            total_std += var.sqrt();
        }
        per_seed.push(SeedEntry {
            seed: meta_seed,
            metrics: vec![MetricPoint {
                metric: "mean_rank_std".into(),
                step: None,
                value: total_std / st.fixed as f64,
            }],
        });
    }
    ExperimentReport::assemble(
        "stability",
        config_echo(
            cfg,
            json!({
                "source": dataset_echo("source", source),
                "val": val.map(|v| dataset_echo("val", v)),
            }),
        ),
        per_seed,
        flags,
    )
}

/// Wall-clock comparison of the valuers on one training set.
///
/// Each valuer runs 3 warmup plus 5 measured repetitions on a monotonic
/// clock; the median is reported together with the exact/approximate ratio.
/// The neighbor-based valuer scores against a seeded half of the training
/// set, which is fine for timing purposes.
pub fn run_timing<T: Real>(
    train: &EmbeddingDataset<T>,
    cfg: &ProtocolConfig,
) -> Result<ExperimentReport> {
    cfg.validate()?;
    if train.n() < 100 {
        return Err(EvError::invalid(format!(
            "timing needs at least 100 points, got {}",
            train.n()
        )));
    }
    let seed = cfg.seeds[0];
    let half: Vec<usize> = shuffled_indices(train.n(), seed)[..train.n() / 2].to_vec();
    let knn_val = train.subset(&half)?;

    use super::config::{ValuerKind, ValuerSpec};
    let specs: Vec<(ValuerKind, Option<&EmbeddingDataset<T>>)> = vec![
        (ValuerKind::EvApprox, None),
        (ValuerKind::EvExact, None),
        (ValuerKind::Random, None),
        (ValuerKind::KnnShapley, Some(&knn_val)),
        (ValuerKind::DataOob, None),
    ];

    let mut metrics = Vec::new();
    let mut medians = Vec::new();
    for (kind, val) in specs {
        let spec = ValuerSpec {
            kind,
            weight_w: 0.0,
            ..cfg.valuer.clone()
        };
        let mut reps = Vec::with_capacity(5);
        for rep in 0..8 {
            let start = Instant::now();
            let _ = spec.score(train, val, seed)?;
            let elapsed = start.elapsed().as_secs_f64();
            if rep >= 3 {
                reps.push(elapsed);
            }
        }
        let name = kind.name().replace('-', "_");
        for (i, &t) in reps.iter().enumerate() {
            metrics.push(MetricPoint {
                metric: format!("time_secs_{name}"),
                step: Some(i as u64),
                value: t,
            });
        }
        let mut sorted = reps.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));
        let median = sorted[sorted.len() / 2];
        metrics.push(MetricPoint {
            metric: format!("time_median_secs_{name}"),
            step: None,
            value: median,
        });
        medians.push((kind, median));
    }

    let approx = medians
        .iter()
        .find(|(k, _)| *k == ValuerKind::EvApprox)
        .expect("approx timed")
        .1;
    let exact = medians
        .iter()
        .find(|(k, _)| *k == ValuerKind::EvExact)
        .expect("exact timed")
        .1;
    metrics.push(MetricPoint {
        metric: "time_ratio_exact_over_approx".into(),
        step: None,
        value: exact / approx,
    });

    ExperimentReport::assemble(
        "timing",
        config_echo(cfg, json!({ "train": dataset_echo("train", train) })),
        vec![SeedEntry { seed, metrics }],
        Vec::new(),
    )
}
