//! Acceptance suite: one test per criterion, each printing a pass/fail line.
//!
//! Run with `cargo test -p polymer-core --test acceptance -- --nocapture`
//! to see the per-criterion lines and timings.

use polymer_core::dist::special::{chi_square_sf, normal_cdf};
use polymer_core::dist::{airy_ai, ks_test, tw2_build, TwTable};
use polymer_core::engine::{
    self, digest64, records_to_csv, Checkpoint, ExperimentConfig, ExperimentKind, FamilySpec,
    FluctuationsParams,
};
use polymer_core::lattice::{
    lindeberg_sweep, DisorderField, FreeEnergySample, LindebergConfig, StripSpec, TestFn,
};
use polymer_core::paths::{
    binomial, bridge_local_time_stats, bridge_replace_max_ratio, first_meeting_tail,
    platonov_deviation, triple_local_time_stats,
};
use polymer_core::rng::{mix2, SplitMix64};
use polymer_core::weights::{
    exponent_report, family_centering, strip_s_threshold, theta_match, BaseNoise, PolymerParams,
    WeightFamily,
};
use std::time::Instant;

fn verdict(criterion: &str, pass: bool, detail: &str, started: Instant) {
    println!(
        "[{criterion}] {} — {detail} ({:.1?})",
        if pass { "PASS" } else { "FAIL" },
        started.elapsed()
    );
}

#[test]
fn criterion_01_oracle_equivalence() {
    let t0 = Instant::now();
    let families = [
        WeightFamily::standard(BaseNoise::gaussian(0.0, 1.0)),
        WeightFamily::log_gamma(12.0),
        WeightFamily::linear(BaseNoise::uniform_centered(1.0)),
    ];
    let mut worst: f64 = 0.0;
    let mut rng = SplitMix64::new(0xACCE_0001);
    for family in &families {
        for _ in 0..100 {
            let n = 1 + rng.next_u64() % 8; // 2n <= 16
            let field = DisorderField::with_beta(n, 0.4, *family, rng.next_u64());
            let dp = field.log_partition();
            let oracle = field.enumerate_partition().expect("within guard");
            worst = worst.max((dp - oracle).abs() / oracle.abs().max(1.0));
        }
    }
    let pass = worst <= 1e-10;
    verdict(
        "criterion 1",
        pass,
        &format!("log_partition vs enumeration: worst rel diff {worst:.2e} (tol 1e-10), 100 fields x 3 families"),
        t0,
    );
    assert!(pass);
}

#[test]
fn criterion_02_degenerate_exactness() {
    let t0 = Instant::now();
    let family = WeightFamily::standard(BaseNoise::gaussian(0.0, 1.0));
    let mut worst: f64 = 0.0;
    let mut strip_exact = true;
    for n in 1..=10u64 {
        let field = DisorderField::with_beta(n, 0.0, family, n);
        let expect = (binomial(2 * n, n) as f64).ln();
        worst = worst.max((field.log_partition() - expect).abs() / expect);
        if 2 * n >= 2 {
            let strip = StripSpec::new(0, 2 * n, 2 * n).expect("valid strip");
            let (_, log_zmu) = field.strip_partition(&strip).expect("strip ok");
            strip_exact &= log_zmu == 0.0;
        }
    }
    let pass = worst <= 1e-12 && strip_exact;
    verdict(
        "criterion 2",
        pass,
        &format!("unit weights: worst rel error {worst:.2e} vs log C(2n,n); strip Zmu exactly 1: {strip_exact}"),
        t0,
    );
    assert!(pass);
}

#[test]
fn criterion_03_replica_identities() {
    let t0 = Instant::now();
    let noise = BaseNoise::gaussian(0.0, 1.0);
    // alpha = 0.35 puts beta ~ 0.23 at n = 64 (moderate rho2 for both arms)
    let configs = [("standard-gaussian", false), ("log-gamma-matched", true)];
    let mut all_pass = true;
    let mut lines = Vec::new();
    for (label, matched) in configs {
        for (n, order) in [(64u64, 2u32), (32, 3)] {
            let params = PolymerParams::new(n, 0.35).expect("params");
            let family = if matched {
                WeightFamily::log_gamma(theta_match(&noise, params.beta).expect("theta"))
            } else {
                WeightFamily::standard(noise)
            };
            let field = DisorderField::new(&params, family, 0xACCE_0003);
            let n0 = 16.min(2 * n);
            let a = n - n0 / 2;
            let strip = StripSpec::new(a, a + n0, 2 * n).expect("strip");
            let mut rng = SplitMix64::new(mix2(0xACCE_0003, n * u64::from(order)));
            let id = polymer_core::lattice::replica_moment_identity(
                &field, &strip, order, 100_000, 100_000, &mut rng,
            )
            .expect("identity runs");
            let sigma = id.discrepancy_sigmas();
            all_pass &= sigma <= 3.0;
            lines.push(format!("{label} order {order} n={n}: {sigma:.2} sigma"));
        }
    }
    verdict("criterion 3", all_pass, &lines.join("; "), t0);
    assert!(all_pass);
}

#[test]
fn criterion_04_tw_evaluator() {
    let t0 = Instant::now();
    let grid = polymer_core::dist::default_grid();
    let coarse = tw2_build(40, 16.0, &grid).expect("order 40 builds");
    let fine = tw2_build(80, 16.0, &grid).expect("order 80 builds");
    let max_diff = coarse
        .cdf_values()
        .iter()
        .zip(fine.cdf_values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    let (mean, var) = fine.mean_variance();
    let mean_ok = (mean - (-1.7711)).abs() <= 1e-3;
    let var_ok = (var - 0.8132).abs() <= 1e-3;

    // Ai'' = x Ai under central differences at 100 random abscissas
    let mut rng = SplitMix64::new(0xACCE_0004);
    let h = 5e-4;
    let mut worst_resid: f64 = 0.0;
    for _ in 0..100 {
        let x = -5.0 + 10.0 * rng.next_f64();
        let second = (airy_ai(x + h) - 2.0 * airy_ai(x) + airy_ai(x - h)) / (h * h);
        worst_resid = worst_resid.max((second - x * airy_ai(x)).abs());
    }
    let pass = max_diff <= 1e-8 && mean_ok && var_ok && worst_resid <= 1e-6;
    verdict(
        "criterion 4",
        pass,
        &format!(
            "40-vs-80 refinement {max_diff:.2e} (tol 1e-8); mean {mean:.5} var {var:.5} (targets -1.7711/0.8132 +- 1e-3); Ai ODE residual {worst_resid:.2e} (tol 1e-6)"
        ),
        t0,
    );
    assert!(pass);
}

#[test]
fn criterion_05_bridge_lemma_suite() {
    let t0 = Instant::now();
    let mut lines = Vec::new();
    let mut all = true;

    // (a) half-path replacement ratio at n = 200, exact scan
    let sup = bridge_replace_max_ratio(200, 0.25, 0.75);
    let a_ok = sup <= 2.0;
    all &= a_ok;
    lines.push(format!("(a) replace sup {sup:.4} <= 2: {a_ok}"));

    // (b) local-CLT constant bounded by 0.1 across the grid
    let mut b_max: f64 = 0.0;
    for &n in &[100u64, 1000, 10_000] {
        for &p in &[0.25, 0.5, 0.75] {
            b_max = b_max.max(platonov_deviation(n, p).scaled);
        }
    }
    let b_ok = b_max <= 0.1;
    all &= b_ok;
    lines.push(format!("(b) platonov constant {b_max:.4} <= 0.1: {b_ok}"));

    // (c) meeting-tail lower bound across n in {2^6..2^12} and a 3x3 slope grid
    let slopes = [0.25, 0.5, 0.75];
    let mut c_min = f64::INFINITY;
    for e in 6..=12u32 {
        let n = 1u64 << e;
        for (i, &p1) in slopes.iter().enumerate() {
            for (j, &p2) in slopes.iter().enumerate() {
                let mut rng = SplitMix64::new(mix2(0xACCE_0005, mix2(n, (i * 3 + j) as u64)));
                let tail = first_meeting_tail(p1, p2, n, 100_000, &mut rng);
                let q = p1 * (1.0 - p2) + (1.0 - p1) * p2;
                c_min = c_min.min((n as f64).sqrt() * tail.estimate / q);
            }
        }
    }
    let c_ok = c_min >= 0.5;
    all &= c_ok;
    lines.push(format!(
        "(c) min scaled meeting tail {c_min:.3} >= 0.5: {c_ok}"
    ));

    // (d)(f) pairwise local-time moments and the domination MGF statistic
    let mut d_ok = true;
    let mut f_max: f64 = 0.0;
    for &n in &[64u64, 256, 1024, 4096] {
        let mut rng = SplitMix64::new(mix2(0xACCE_0006, n));
        let s = bridge_local_time_stats(n, (0.5, 0.5), &[1, 4], 20_000, 1.0, 0.1, &mut rng)
            .expect("stats");
        let e1 = s.moments[0].normalized;
        let e4 = s.moments[1].normalized;
        d_ok &= (1.4..=2.2).contains(&e1) && (1.8..=2.9).contains(&e4);
        f_max = f_max.max(s.mgf_statistic);
    }
    all &= d_ok;
    lines.push(format!(
        "(d) E[L]/sqrt(n) in [1.4,2.2], E[L^4]^(1/4)/sqrt(n) in [1.8,2.9]: {d_ok}"
    ));
    let f_ok = f_max <= 5e6;
    all &= f_ok;
    lines.push(format!("(f) mgf statistic max {f_max:.3e} <= 5e6: {f_ok}"));

    // (e) triple coincidence second moment against log^2 n
    let mut e_max: f64 = 0.0;
    for &n in &[64u64, 256, 1024, 4096] {
        let mut rng = SplitMix64::new(mix2(0xACCE_0007, n));
        let s = triple_local_time_stats(n, (0.5, 0.5, 0.5), 20_000, &mut rng).expect("stats");
        e_max = e_max.max(s.e_l3_sq / (n as f64).ln().powi(2));
    }
    let e_ok = e_max <= 2.5;
    all &= e_ok;
    lines.push(format!("(e) E[L3^2]/log^2 max {e_max:.3} <= 2.5: {e_ok}"));

    verdict("criterion 5", all, &lines.join("; "), t0);
    assert!(all);
}

fn fluctuation_stats(n: u64, alpha: f64, samples: u64, seed: u64) -> Vec<f64> {
    let params = PolymerParams::new(n, alpha).expect("params");
    let family = WeightFamily::log_gamma(1.0 / (params.beta * params.beta));
    polymer_core::lattice::free_energy_ensemble(&params, &family, seed, samples)
        .expect("ensemble")
        .into_iter()
        .map(|s| s.centered_scaled)
        .collect()
}

#[test]
fn criterion_06_fluctuation_convergence() {
    // Property-based stand-in for the Tracy-Widom limit: log-gamma family,
    // alpha = 0.22, 4e3 samples per n. The first clause demands a strictly
    // decreasing KS distance of centered_scaled to TW over n in {64, 256,
    // 1024}; the second that at n = 1024 the TW distance beats the best-fit
    // normal distance. Both are asserted as stated. See the shape
    // diagnostics printed below for the convergence that is measurable at
    // these sizes, and the decisions ledger for why the literal statistic
    // stalls: the asymptotic centering carries no log-level terms, and the
    // neglected -(1/2) log(pi n) path-count correction plus an O(1)
    // crossover offset dominate the n^(1/3 - 4 alpha/3) fluctuation scale
    // until astronomically large n.
    let t0 = Instant::now();
    let tw = TwTable::embedded();
    let mut ks_tw = Vec::new();
    let mut ks_tw_fit = Vec::new();
    let mut ks_norm_fit = Vec::new();
    let mut shape_lines = Vec::new();
    let (tw_mean, tw_var) = tw.mean_variance();
    for &n in &[64u64, 256, 1024] {
        let stats = fluctuation_stats(n, 0.22, 4000, mix2(0xACCE_0008, n));
        let m = stats.len() as f64;
        let mean = stats.iter().sum::<f64>() / m;
        let sd = (stats.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / m).sqrt();
        let skew = stats.iter().map(|x| ((x - mean) / sd).powi(3)).sum::<f64>() / m;
        ks_tw.push(ks_test(&stats, |x| tw.cdf(x)).expect("ks").statistic);
        // location-scale standardized comparisons (shape only)
        let tw_sd = tw_var.sqrt();
        ks_tw_fit.push(
            ks_test(&stats, |x| tw.cdf((x - mean) / sd * tw_sd + tw_mean))
                .expect("ks")
                .statistic,
        );
        ks_norm_fit.push(
            ks_test(&stats, |x| normal_cdf((x - mean) / sd))
                .expect("ks")
                .statistic,
        );
        shape_lines.push(format!("n={n}: mean {mean:.3}, sd {sd:.3}, skew {skew:.3}"));
    }
    println!(
        "[criterion 6] diagnostics: {}; TW skew 0.224; shape-fitted ks_tw {:?} vs ks_normal {:?}",
        shape_lines.join("; "),
        ks_tw_fit
            .iter()
            .map(|d| format!("{d:.4}"))
            .collect::<Vec<_>>(),
        ks_norm_fit
            .iter()
            .map(|d| format!("{d:.4}"))
            .collect::<Vec<_>>(),
    );
    let decreasing = ks_tw[1] < ks_tw[0] && ks_tw[2] < ks_tw[1];
    let tw_beats_normal = ks_tw[2] < ks_norm_fit[2];
    let pass = decreasing && tw_beats_normal;
    verdict(
        "criterion 6",
        pass,
        &format!(
            "ks_tw over n in {{64,256,1024}}: {:.4}, {:.4}, {:.4} (strictly decreasing: {decreasing}); at n=1024 ks_tw {:.4} < ks_normal_fit {:.4}: {tw_beats_normal}",
            ks_tw[0], ks_tw[1], ks_tw[2], ks_tw[2], ks_norm_fit[2]
        ),
        t0,
    );
    assert!(
        decreasing,
        "KS-to-TW not strictly decreasing: {ks_tw:?} — the asymptotic centering's \
         neglected log-level terms dominate at desk scale (see decisions ledger)"
    );
    assert!(
        tw_beats_normal,
        "KS-to-TW {} not below best-fit-normal {} at n=1024",
        ks_tw[2], ks_norm_fit[2]
    );
}

#[test]
fn criterion_07_gaussian_regime_control() {
    let t0 = Instant::now();
    let params = PolymerParams::new(1024, 0.35).expect("params");
    let family = WeightFamily::standard(BaseNoise::gaussian(0.0, 1.0));
    let stats: Vec<f64> =
        polymer_core::lattice::free_energy_ensemble(&params, &family, 0xACCE_0009, 2000)
            .expect("ensemble")
            .into_iter()
            .map(|s| s.centered_scaled)
            .collect();
    let m = stats.len() as f64;
    let mean = stats.iter().sum::<f64>() / m;
    let sd = (stats.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / m).sqrt();
    let tw = TwTable::embedded();
    let ks_tw = ks_test(&stats, |x| tw.cdf(x)).expect("ks").statistic;
    let ks_norm = ks_test(&stats, |x| normal_cdf((x - mean) / sd))
        .expect("ks")
        .statistic;
    let pass = ks_norm < ks_tw;
    verdict(
        "criterion 7",
        pass,
        &format!("alpha=0.35, n=1024: ks_normal_fit {ks_norm:.4} < ks_tw {ks_tw:.4}: {pass}"),
        t0,
    );
    assert!(pass);
}

#[test]
fn criterion_08_lindeberg_swap() {
    let t0 = Instant::now();
    let params = PolymerParams::new(256, 0.22).expect("params");
    let noise = BaseNoise::gaussian(0.0, 1.0);
    let theta = theta_match(&noise, params.beta).expect("theta");
    let cfg = LindebergConfig {
        params,
        family_a: WeightFamily::standard(noise),
        family_b: WeightFamily::log_gamma(theta),
        mask_fractions: vec![0.25, 0.5, 1.0],
        samples: 6000,
        master_seed: 0xACCE_000A,
        control_family: Some(WeightFamily::log_gamma(theta * 0.5)),
        strip_len: None,
    };
    let report = lindeberg_sweep(&cfg, &TestFn::BATTERY).expect("sweep");
    let mut lines = Vec::new();
    let mut matched_ok = true;
    for arm in ["hybrid_0.25", "hybrid_0.50", "pure_b"] {
        let d = report.diff(arm, "tanh").expect("diff");
        matched_ok &= d.sigmas() <= 3.0;
        lines.push(format!("{arm}: {:.2} sigma", d.sigmas()));
    }
    let control = report.diff("control", "tanh").expect("control diff");
    let control_ok = control.sigmas() >= 5.0;
    lines.push(format!("control: {:.1} sigma", control.sigmas()));
    let pass = matched_ok && control_ok;
    verdict(
        "criterion 8",
        pass,
        &format!(
            "matched arms <= 3 sigma in E tanh: {matched_ok}; control >= 5 sigma: {control_ok} ({})",
            lines.join(", ")
        ),
        t0,
    );
    assert!(pass);
}

#[test]
fn criterion_09_exponent_arithmetic() {
    let t0 = Instant::now();
    let r = exponent_report(0.22, 0.01, 0.8, 2).expect("report");
    let lambda_ok = (r.lambda - (-0.546154)).abs() <= 1e-6;
    let root = exponent_report(2.0 / 17.0, 0.0, 0.5, 2).expect("report");
    let root_ok = root.lambda == 0.0;
    // feasibility boundary at alpha = 1/5 from the s-scan
    let mut boundary_ok = true;
    for &delta in &[1e-4, 1e-3, 1e-2] {
        let feasible = |alpha: f64| {
            (1..100).any(|i| {
                exponent_report(alpha, delta, i as f64 / 100.0, 2)
                    .expect("report")
                    .strip_feasible
            })
        };
        boundary_ok &= feasible(0.21) && !feasible(0.19);
        boundary_ok &=
            (strip_s_threshold(0.21, delta) < 1.0) && (strip_s_threshold(0.19, delta) > 1.0);
    }
    let pass = lambda_ok && root_ok && boundary_ok;
    verdict(
        "criterion 9",
        pass,
        &format!(
            "lambda(0.22, 0.01) = {:.6} (+-1e-6: {lambda_ok}); lambda(2/17, 0) = {} ({root_ok}); strip boundary at 1/5: {boundary_ok}",
            r.lambda, root.lambda
        ),
        t0,
    );
    assert!(pass);
}

#[test]
fn criterion_10_engineering() {
    let t0 = Instant::now();
    let base = std::env::temp_dir().join(format!("polymer-acc10-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&base);
    std::fs::create_dir_all(&base).expect("tmpdir");

    let make_config = |workers: usize, outdir: &str| ExperimentConfig {
        kind: ExperimentKind::Fluctuations,
        master_seed: 0xACCE_000B,
        workers,
        output_dir: base.join(outdir).to_string_lossy().into_owned(),
        checkpoint_interval: 32,
        fluctuations: Some(FluctuationsParams {
            family: FamilySpec::log_gamma_inverse_beta_sq(),
            n_list: vec![16, 32],
            alpha: 0.22,
            samples: 256,
            spread_paths: 0,
            spread_samples: 0,
        }),
        lindeberg: None,
        localtime: None,
        validity: None,
        exponents: None,
        tw: None,
        checks: vec![],
    };

    // workers 1 vs 8: byte-identical sample CSVs and canonical records
    let c1 = make_config(1, "w1");
    let c8 = make_config(8, "w8");
    let r1 = engine::run(&c1).expect("run w1");
    let r8 = engine::run(&c8).expect("run w8");
    let mut workers_ok = records_to_csv(&r1.records, true) == records_to_csv(&r8.records, true);
    for n in [16u64, 32] {
        let f1 =
            std::fs::read(base.join("w1").join(format!("fluctuations_n{n}.csv"))).expect("csv");
        let f8 =
            std::fs::read(base.join("w8").join(format!("fluctuations_n{n}.csv"))).expect("csv");
        workers_ok &= f1 == f8;
    }

    // kill-and-resume: truncate one checkpoint to a prefix, rerun, compare
    let ckpt_path = base.join("w1").join("fluctuations_n32.ckpt");
    let full_csv = std::fs::read(base.join("w1").join("fluctuations_n32.csv")).expect("full csv");
    let text = std::fs::read_to_string(&ckpt_path).expect("checkpoint");
    let prefix: Vec<&str> = text.lines().take(3).collect();
    std::fs::write(&ckpt_path, prefix.join("\n") + "\n").expect("truncate");
    let r1b = engine::run(&c1).expect("resume");
    let resumed_csv =
        std::fs::read(base.join("w1").join("fluctuations_n32.csv")).expect("resumed csv");
    let resume_ok = full_csv == resumed_csv
        && records_to_csv(&r1b.records, true) == records_to_csv(&r1.records, true);

    // sanity: the checkpoint digest keys the resume to the exact config
    let other = Checkpoint::new(&ckpt_path, digest64("unrelated"));
    let digest_ok = other
        .load::<FreeEnergySample>()
        .map(|m| m.is_empty())
        .unwrap_or(false);

    let pass = workers_ok && resume_ok && digest_ok;
    verdict(
        "criterion 10",
        pass,
        &format!("workers 1 vs 8 byte-identical: {workers_ok}; kill-and-resume identical: {resume_ok}; digest keying: {digest_ok}"),
        t0,
    );
    let _ = std::fs::remove_dir_all(&base);
    assert!(pass);
}

#[test]
fn bridge_uniformity_property() {
    // chi-square uniformity of the bridge sampler across every spec with at
    // most 70 paths, 1e5 draws each (supporting property for the suite)
    let t0 = Instant::now();
    let mut rng = SplitMix64::new(0xACCE_000C);
    let mut min_p = f64::INFINITY;
    for len in 1..=8i64 {
        for k in 0..=len {
            let spec = polymer_core::paths::BridgeSpec::new(0, len, 0, k).expect("spec");
            let cells = spec.count() as u64;
            if cells > 70 || cells == 1 {
                continue;
            }
            let draws = 100_000u64;
            let mut counts = std::collections::HashMap::new();
            for _ in 0..draws {
                let p = polymer_core::paths::sample_bridge(&spec, &mut rng);
                *counts.entry(p.steps().to_vec()).or_insert(0u64) += 1;
            }
            let expect = draws as f64 / cells as f64;
            let stat: f64 = counts
                .values()
                .map(|&c| (c as f64 - expect).powi(2) / expect)
                .sum();
            min_p = min_p.min(chi_square_sf(stat, cells - 1));
        }
    }
    let pass = min_p > 0.001;
    verdict(
        "bridge uniformity",
        pass,
        &format!("min chi-square p-value {min_p:.4} > 0.001"),
        t0,
    );
    assert!(pass);
}

#[test]
fn centering_cross_check() {
    // the family centering formulas agree with direct evaluation of the
    // stored-beta expressions (reference values pinned from the formulas)
    let t0 = Instant::now();
    let params = PolymerParams::new(1024, 0.22).expect("params");
    let cs = family_centering(
        &WeightFamily::standard(BaseNoise::gaussian(0.0, 1.0)),
        &params,
    )
    .expect("centering");
    let psi = (0.5 * params.beta * params.beta).exp();
    let direct = 2048.0 * (psi.ln() + std::f64::consts::LN_2 - params.beta.powi(4) / 3.0)
        - 2049.0 * psi.ln();
    let pass = (cs.a_n - direct).abs() < 1e-9 && (cs.scale - 2.0953).abs() < 2e-3;
    verdict(
        "centering",
        pass,
        &format!("normalized a_n {:.4}, scale {:.4}", cs.a_n, cs.scale),
        t0,
    );
    assert!(pass);
}
