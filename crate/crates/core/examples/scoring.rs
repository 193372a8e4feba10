//! pass@k, judge rubric normalization and original-vs-variant deltas.
//!
//! cargo run --example scoring

use std::collections::{BTreeMap, BTreeSet};

use nameobf::evalrunner::{delta_report, judge_aggregate, pass_at_k, ScoreSlice};
use nameobf::strategies::StrategyTag;

fn main() {
    println!("pass@k with n = 5 samples:");
    for c in 0..=5 {
        let row: Vec<String> = (1..=5).map(|k| format!("{:.3}", pass_at_k(5, c, k).unwrap())).collect();
        println!("  c={c}: {}", row.join("  "));
    }

    let ratings = [[5.0, 4.0, 4.0, 3.0, 4.0], [3.0, 3.0, 2.0, 4.0, 3.0]];
    println!("judge score: {:.1}", judge_aggregate(&ratings).unwrap());

    let tasks: BTreeSet<String> = (0..37).map(|i| format!("ClassEval_{i}")).collect();
    let slice = |score| ScoreSlice {
        tasks: tasks.clone(),
        score,
    };
    let variants: BTreeMap<StrategyTag, ScoreSlice> = StrategyTag::ALL
        .iter()
        .zip([80.2, 76.1, 78.4, 70.3])
        .map(|(&t, s)| (t, slice(s)))
        .collect();
    let d = delta_report(&slice(85.7), &variants).unwrap();
    for (tag, v) in &d.per_strategy {
        println!("delta {tag:<12} {v:.1}");
    }
    println!("min {:.1} max {:.1} avg {:.2}", d.min, d.max, d.avg);
}
