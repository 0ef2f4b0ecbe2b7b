//! Criterion 4 (Theorem-2 trend) and criterion 8 (SO3 Fig-4 trend) calibration.
use mfsync::groupsync::*;
use mfsync::models::*;
use mfsync::rng::{mix_seed, seeded};
use mfsync::sync::*;

fn main() {
    match std::env::args().nth(1).as_deref() {
        Some("thm2") => thm2(),
        Some("so3") => so3(),
        _ => eprintln!("usage: calibrate9 thm2|so3"),
    }
}

fn thm2() {
    let n = 100;
    let sigma = 0.5 * (n as f64 / (n as f64).ln()).sqrt();
    println!("sigma = {sigma:.4}");
    let t0 = std::time::Instant::now();
    let mut meds = vec![];
    for k_max in [8usize, 16, 32, 64] {
        let mut errs: Vec<f64> = (0..20u64)
            .map(|trial| {
                let mut rng = seeded(mix_seed(1337, &[k_max as u64, trial]));
                let truth = sample_ground_truth(n, &mut rng);
                let graph = ObservationGraph::complete(n);
                let stack = additive_gaussian_stack(&truth, &graph, sigma, k_max, &mut rng).unwrap();
                let r = ppe_spc(&stack, 4096).unwrap();
                1.0 - correlation(&r.estimate, &truth).unwrap()
            })
            .collect();
        errs.sort_by(f64::total_cmp);
        let med = (errs[9] + errs[10]) / 2.0;
        println!("k_max {k_max}: median err {med:.3e}  ({:.1}s)", t0.elapsed().as_secs_f64());
        meds.push((k_max as f64, med));
    }
    // least-squares log-log slope
    let xs: Vec<f64> = meds.iter().map(|(k, _)| k.ln()).collect();
    let ys: Vec<f64> = meds.iter().map(|(_, e)| e.ln()).collect();
    let xm = xs.iter().sum::<f64>() / 4.0;
    let ym = ys.iter().sum::<f64>() / 4.0;
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum::<f64>()
        / xs.iter().map(|x| (x - xm) * (x - xm)).sum::<f64>();
    println!("log-log slope = {slope:.3}");
}

fn so3() {
    let n = 50;
    let t0 = std::time::Instant::now();
    for lambda in [1.0f64, 1.5] {
        let mut line = format!("lambda {lambda}:");
        for k_max in [1usize, 2, 4, 8] {
            let mut corrs: Vec<f64> = (0..10u64)
                .map(|trial| {
                    let mut rng = seeded(mix_seed(888, &[lambda.to_bits(), k_max as u64, trial]));
                    let truth: Vec<Rotation> = (0..n).map(|_| sample_rotation(&mut rng)).collect();
                    let stack = group_stack_gaussian(&truth, &vec![lambda; k_max], &mut rng).unwrap();
                    let est = group_ppe(&stack, 1000, &mut rng).unwrap();
                    group_correlation(&est, &truth).unwrap()
                })
                .collect();
            corrs.sort_by(f64::total_cmp);
            let med = (corrs[4] + corrs[5]) / 2.0;
            line += &format!(" k{k_max}={med:.3}");
            eprintln!("  ... k{k_max} done {:.1}s", t0.elapsed().as_secs_f64());
        }
        println!("{line}");
    }
    println!("total {:.1}s", t0.elapsed().as_secs_f64());
}
