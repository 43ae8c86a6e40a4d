#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use ruleboost::*;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs())
}

/// A small random learning problem together with first-round statistics
/// at random predictions.
pub struct Instance {
    pub ds: Dataset,
    pub props: PropositionSet,
    pub loss: Loss,
    pub stats: GradientStats,
    pub ctx: ObjectiveContext,
}

/// Up to 64 rows and at most 12 propositions: three integer-valued
/// features, optionally one of them categorical.
pub fn random_dataset(rng: &mut ChaCha8Rng, n: usize, classification: bool) -> Dataset {
    let categorical = rng.gen_bool(0.3);
    let mut columns = Vec::new();
    for j in 0..3 {
        let levels = rng.gen_range(2..=5);
        let raw: Vec<u32> = (0..n).map(|_| rng.gen_range(0..levels)).collect();
        let data = if categorical && j == 2 {
            let names: Vec<String> = raw.iter().map(|v| ["a", "b"][(*v % 2) as usize].to_string()).collect();
            ColumnData::categorical(&names)
        } else {
            ColumnData::Numeric(raw.iter().map(|&v| v as f64).collect())
        };
        columns.push(Column { name: format!("x{j}"), data });
    }
    let (target, task) = if classification {
        let y = (0..n).map(|_| if rng.gen_bool(0.5) { 1.0 } else { -1.0 }).collect();
        (y, Task::Classification)
    } else {
        let y = (0..n).map(|_| 3.0 * rng.sample::<f64, _>(StandardNormal)).collect();
        (y, Task::Regression)
    };
    Dataset::new(columns, target, "y", task).unwrap()
}

pub fn random_instance(seed: u64) -> Instance {
    let mut r = rng(seed);
    let n = r.gen_range(4..=64);
    let classification = r.gen_bool(0.5);
    let ds = random_dataset(&mut r, n, classification);
    let props = build_propositions(&ds, Some(2)).unwrap();
    assert!(props.len() <= 12);
    let loss = if classification { Loss::Logistic } else { Loss::Squared };
    let f: Vec<f64> = (0..n).map(|_| r.sample::<f64, _>(StandardNormal)).collect();
    let stats = gradient_stats(loss, ds.target(), &f).unwrap();
    let lambda = [0.0, 0.1, 1.0][r.gen_range(0..3)];
    let ctx = ObjectiveContext::new(lambda, n).unwrap();
    Instance { ds, props, loss, stats, ctx }
}

pub fn gain(sg: f64, sh: f64, ctx: &ObjectiveContext) -> f64 {
    if sg == 0.0 {
        0.0
    } else {
        ctx.gain(sg, sh).unwrap()
    }
}

pub fn mask_of(extent: &[usize]) -> u64 {
    extent.iter().fold(0, |m, &i| m | 1 << i)
}

pub fn mask_gain(mask: u64, stats: &GradientStats, ctx: &ObjectiveContext) -> f64 {
    let (mut sg, mut sh) = (0.0, 0.0);
    for i in 0..stats.n() {
        if mask >> i & 1 == 1 {
            sg += stats.g()[i];
            sh += stats.h()[i];
        }
    }
    gain(sg, sh, ctx)
}

/// All conjunction extents (including the empty conjunction) as bitmasks.
pub fn all_extents(props: &PropositionSet) -> BTreeSet<u64> {
    assert!(props.n() <= 64);
    let full = if props.n() == 64 { u64::MAX } else { (1u64 << props.n()) - 1 };
    let masks: Vec<u64> = (0..props.len()).map(|j| mask_of(props.extent(j))).collect();
    (0u64..1 << props.len())
        .map(|s| (0..props.len()).filter(|&j| s >> j & 1 == 1).fold(full, |m, j| m & masks[j]))
        .collect()
}

pub fn exhaustive_max(props: &PropositionSet, stats: &GradientStats, ctx: &ObjectiveContext) -> f64 {
    all_extents(props).into_iter().map(|m| mask_gain(m, stats, ctx)).fold(0.0, f64::max)
}
