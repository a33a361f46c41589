//! Scratch harness for inspecting benchmark behaviour across seeds.

use flowlab::bench::{
    default_method_configs, default_pretrain_config, run_comparison, tau_ablation, BenchmarkSpec,
};
use flowlab::train::Method;

fn main() {
    let spec_template = BenchmarkSpec::default();
    println!("defaults: {spec_template:?}");
    let mut mean: std::collections::BTreeMap<String, (f64, f64, f64)> = Default::default();
    let seeds = 5;
    let t0 = std::time::Instant::now();
    for seed in 0..seeds {
        let spec = BenchmarkSpec {
            seed,
            ..spec_template.clone()
        };
        let report = run_comparison(
            &spec,
            &default_pretrain_config(seed),
            &default_method_configs(seed),
        )
        .unwrap();
        println!(
            "seed {seed}: pretrained task-A acc {:.4}  ({:.1?})",
            report.pretrained_task_a_acc,
            t0.elapsed()
        );
        for row in &report.rows {
            println!(
                "  {:<16} pre {:.4} tgt {:.4} avg {:.4} hard {:.4}",
                row.method, row.pretrain_acc, row.target_acc, row.average, row.hard_acc
            );
            let e = mean.entry(row.method.clone()).or_default();
            e.0 += row.pretrain_acc / seeds as f64;
            e.1 += row.target_acc / seeds as f64;
            e.2 += row.hard_acc / seeds as f64;
        }
    }
    println!("\nmeans over {seeds} seeds:");
    for (m, (p, t, h)) in &mean {
        println!(
            "  {:<16} pre {:.4} tgt {:.4} avg {:.4} hard {:.4}",
            m,
            p,
            t,
            (p + t) / 2.0,
            h
        );
    }

    println!("\ntau ablation:");
    let percentiles = [10.0, 30.0, 50.0, 70.0, 90.0];
    let mut abl_mean = vec![(0.0, 0.0); percentiles.len()];
    for seed in 0..seeds {
        let spec = BenchmarkSpec {
            seed,
            ..spec_template.clone()
        };
        let flow_cfg = default_method_configs(seed)
            .into_iter()
            .find(|c| matches!(c.method, Method::Flow))
            .unwrap();
        let rows = tau_ablation(
            &spec,
            &default_pretrain_config(seed),
            &flow_cfg,
            &percentiles,
        )
        .unwrap();
        for (i, r) in rows.iter().enumerate() {
            abl_mean[i].0 += r.pretrain_acc / seeds as f64;
            abl_mean[i].1 += r.target_acc / seeds as f64;
        }
    }
    for (p, (pre, tgt)) in percentiles.iter().zip(&abl_mean) {
        println!("  p={p:>4}: pre {pre:.4} tgt {tgt:.4}");
    }
    println!("total {:?}", t0.elapsed());
}
