//! Scratch calibration for the reference-run thresholds.
use mfsync::models::*;
use mfsync::rng::{mix_seed, seeded};
use mfsync::sync::*;

fn main() {
    let what = std::env::args().nth(1).unwrap_or_else(|| "fig1".into());
    match what.as_str() {
        "fig1" => fig1(),
        "fig3" => fig3(),
        _ => eprintln!("unknown"),
    }
}

// Criterion 6: r = 0.1, n = 100, k_max = 32, 20 seeds, identical inits.
fn fig1() {
    let n = 100;
    let k_max = 32;
    let mut wins = 0;
    let mut gpm_corrs = vec![];
    let mut mf_corrs = vec![];
    let t0 = std::time::Instant::now();
    for trial in 0..20u64 {
        let mut rng = seeded(mix_seed(4242, &[trial]));
        let truth = sample_ground_truth(n, &mut rng);
        let graph = ObservationGraph::complete(n);
        let stack = random_corruption_stack(&truth, &graph, 0.1, k_max, &mut rng).unwrap();
        let init = sample_ground_truth(n, &mut rng);
        let g = gpm(stack.channel(1), &init, 200).unwrap();
        let m = mfgpm(&stack, &init, &ThresholdSchedule::default(), 50, 4096).unwrap();
        let gc = correlation(&g.phases, &truth).unwrap();
        let mc = correlation(&m.phases, &truth).unwrap();
        if mc >= gc { wins += 1; }
        gpm_corrs.push(gc);
        mf_corrs.push(mc);
        println!("trial {trial}: gpm {gc:.4} mfgpm {mc:.4}");
    }
    gpm_corrs.sort_by(f64::total_cmp);
    mf_corrs.sort_by(f64::total_cmp);
    println!("wins {wins}/20; gpm median {:.4}, mfgpm median {:.4}; elapsed {:.1}s",
        (gpm_corrs[9]+gpm_corrs[10])/2.0, (mf_corrs[9]+mf_corrs[10])/2.0, t0.elapsed().as_secs_f64());
}

// Criterion 5: lambda = 0.9 (r = 0.09), n = 100: spectral k=1 vs PPE-SPC k_max=256.
fn fig3() {
    let n = 100;
    let t0 = std::time::Instant::now();
    let mut spec_corrs = vec![];
    let mut ppe_corrs = vec![];
    for trial in 0..20u64 {
        let mut rng = seeded(mix_seed(909, &[trial]));
        let truth = sample_ground_truth(n, &mut rng);
        let graph = ObservationGraph::complete(n);
        let stack = random_corruption_stack(&truth, &graph, 0.09, 256, &mut rng).unwrap();
        let s = spectral_sync(stack.channel(1)).unwrap();
        let sc = correlation(&s.phases, &truth).unwrap();
        let p = ppe_spc(&stack, 4096).unwrap();
        let pc = correlation(&p.estimate, &truth).unwrap();
        spec_corrs.push(sc);
        ppe_corrs.push(pc);
        println!("trial {trial}: spectral {sc:.4} ppe256 {pc:.4} ({:.1}s)", t0.elapsed().as_secs_f64());
    }
    spec_corrs.sort_by(f64::total_cmp);
    ppe_corrs.sort_by(f64::total_cmp);
    println!("spectral median {:.4}, ppe median {:.4}; total {:.1}s",
        (spec_corrs[9]+spec_corrs[10])/2.0, (ppe_corrs[9]+ppe_corrs[10])/2.0, t0.elapsed().as_secs_f64());
}
