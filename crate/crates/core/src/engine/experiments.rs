//! The experiment drivers behind `engine::run`: each takes the declarative
//! config, produces result records, and writes its data files.

use crate::dist::{ks_test, normal_cdf, TwTable};
use crate::engine::{
    params_string, run_samples, Aggregate, Checkpoint, EngineError, ExperimentConfig, ResultRecord,
};
use crate::lattice::{
    lindeberg_sweep, midpoint_spread, DisorderField, FreeEnergySample, LindebergConfig, TestFn,
};
use crate::paths::{
    bridge_local_time_stats, bridge_replace_max_ratio, first_meeting_tail, platonov_deviation,
    triple_local_time_stats,
};
use crate::rng::{mix2, SplitMix64};
use crate::weights::{
    check_validity, exponent_report, family_centering, strip_s_threshold, theta_match,
    PolymerParams, WeightFamily,
};
use std::path::Path;
use std::time::Instant;

fn record(
    experiment: &str,
    params: String,
    statistic: &str,
    estimate: f64,
    stderr: f64,
    sample_count: u64,
    started: Instant,
) -> ResultRecord {
    ResultRecord {
        experiment: experiment.into(),
        params,
        statistic: statistic.into(),
        estimate,
        stderr,
        sample_count,
        wall_time_s: started.elapsed().as_secs_f64(),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), EngineError> {
    std::fs::write(path, contents).map_err(|e| EngineError::Io(e.to_string()))
}

pub fn run_fluctuations(
    config: &ExperimentConfig,
    outdir: &Path,
) -> Result<Vec<ResultRecord>, EngineError> {
    let p = config
        .fluctuations
        .as_ref()
        .ok_or_else(|| EngineError::Config("missing [fluctuations] section".into()))?;
    let tw = TwTable::embedded();
    let mut records = Vec::new();

    for &n in &p.n_list {
        let started = Instant::now();
        let params = PolymerParams::new(n, p.alpha)?;
        let family = p.family.build(params.beta)?;
        let cs = family_centering(&family, &params)?;
        let seed_n = mix2(config.master_seed, n);
        let ckpt_digest = crate::engine::digest64(&format!("{}::n={n}", config.canonical_string()));
        let ckpt = Checkpoint::new(&outdir.join(format!("fluctuations_n{n}.ckpt")), ckpt_digest);

        let samples: Vec<FreeEnergySample> = run_samples(
            p.samples,
            config.checkpoint_interval,
            config.workers,
            seed_n,
            Some(&ckpt),
            |idx, seed| {
                let field = DisorderField::new(&params, family, seed);
                let log_z = field.log_partition();
                FreeEnergySample {
                    seed_index: idx,
                    log_z,
                    centered_scaled: (log_z - cs.a_n) / cs.scale,
                }
            },
        )?;

        let mut csv = String::from("seed_index,log_z,centered_scaled\n");
        for s in &samples {
            csv.push_str(&format!(
                "{},{:.17e},{:.17e}\n",
                s.seed_index, s.log_z, s.centered_scaled
            ));
        }
        write_file(&outdir.join(format!("fluctuations_n{n}.csv")), &csv)?;

        let stats: Vec<f64> = samples.iter().map(|s| s.centered_scaled).collect();
        let agg = Aggregate::from_slice(&stats);
        let var = agg.variance()?;
        let m = agg.count();
        let ptuple = params_string(&[("n", n.to_string()), ("alpha", format!("{}", p.alpha))]);

        let ks_tw = ks_test(&stats, |x| tw.cdf(x))?;
        let (fit_m, fit_s) = (agg.mean(), var.sqrt());
        let ks_norm = ks_test(&stats, |x| normal_cdf((x - fit_m) / fit_s))?;

        records.push(record(
            "fluctuations",
            ptuple.clone(),
            "mean",
            agg.mean(),
            agg.stderr()?,
            m,
            started,
        ));
        records.push(record(
            "fluctuations",
            ptuple.clone(),
            "variance",
            var,
            var * (2.0 / (m as f64 - 1.0)).sqrt(),
            m,
            started,
        ));
        records.push(record(
            "fluctuations",
            ptuple.clone(),
            "ks_tw",
            ks_tw.statistic,
            0.0,
            m,
            started,
        ));
        records.push(record(
            "fluctuations",
            ptuple.clone(),
            "ks_tw_p",
            ks_tw.p_value,
            0.0,
            m,
            started,
        ));
        records.push(record(
            "fluctuations",
            ptuple.clone(),
            "ks_normal_fit",
            ks_norm.statistic,
            0.0,
            m,
            started,
        ));

        if p.spread_paths > 0 && p.spread_samples > 0 {
            let sp = midpoint_spread(
                &params,
                &family,
                mix2(seed_n, 0x5052_4541),
                p.spread_samples,
                p.spread_paths,
            )?;
            records.push(record(
                "fluctuations",
                ptuple,
                "midpoint_spread",
                sp.rms,
                sp.stderr,
                p.spread_samples,
                started,
            ));
        }
    }
    Ok(records)
}

pub fn run_lindeberg(
    config: &ExperimentConfig,
    outdir: &Path,
) -> Result<Vec<ResultRecord>, EngineError> {
    let p = config
        .lindeberg
        .as_ref()
        .ok_or_else(|| EngineError::Config("missing [lindeberg] section".into()))?;
    let started = Instant::now();
    let params = PolymerParams::new(p.n, p.alpha)?;
    let family_a = p.family_a.build(params.beta)?;
    let noise = p.family_a.noise()?;
    let theta = theta_match(&noise, params.beta)?;
    let cfg = LindebergConfig {
        params,
        family_a,
        family_b: WeightFamily::log_gamma(theta),
        mask_fractions: p.mask_fractions.clone(),
        samples: p.samples,
        master_seed: config.master_seed,
        control_family: p
            .control_theta_factor
            .map(|f| WeightFamily::log_gamma(theta * f)),
        strip_len: p.strip_len,
    };
    let report = lindeberg_sweep(&cfg, &TestFn::BATTERY)?;
    write_file(
        &outdir.join("swap_report.json"),
        &serde_json::to_string_pretty(&report).expect("report serializes"),
    )?;

    let mut records = Vec::new();
    for arm in &report.arms {
        for (test, mean, se) in &arm.means {
            let ptuple = params_string(&[
                ("n", p.n.to_string()),
                ("arm", arm.label.clone()),
                ("test", test.clone()),
            ]);
            records.push(record(
                "lindeberg",
                ptuple,
                "mean",
                *mean,
                *se,
                arm.samples,
                started,
            ));
        }
    }
    for d in &report.diffs {
        let ptuple = params_string(&[
            ("n", p.n.to_string()),
            ("arm", d.arm.clone()),
            ("test", d.test.clone()),
        ]);
        records.push(record(
            "lindeberg",
            ptuple.clone(),
            "delta_vs_pure_a",
            d.delta,
            d.combined_stderr,
            p.samples,
            started,
        ));
        records.push(record(
            "lindeberg",
            ptuple,
            "delta_sigmas",
            d.sigmas(),
            0.0,
            p.samples,
            started,
        ));
    }
    Ok(records)
}

pub fn run_localtime(
    config: &ExperimentConfig,
    outdir: &Path,
) -> Result<Vec<ResultRecord>, EngineError> {
    let p = config
        .localtime
        .as_ref()
        .ok_or_else(|| EngineError::Config("missing [localtime] section".into()))?;
    if p.slopes.len() < 2 {
        return Err(EngineError::Config("need at least two slopes".into()));
    }
    let (p1, p2) = (p.slopes[0], p.slopes[1]);
    let p3 = p.slopes.get(2).copied().unwrap_or(p2);
    let mut records = Vec::new();
    let mut csv = String::from("n,p1,p2,m,estimate,stderr,normalized\n");

    for &n in &p.n_list {
        let started = Instant::now();
        let mut rng = SplitMix64::new(mix2(config.master_seed, mix2(0x4c54, n)));
        let stats = bridge_local_time_stats(
            n,
            (p1, p2),
            &p.m_list,
            p.trials,
            p.mgf_a,
            p.mgf_delta,
            &mut rng,
        )?;
        csv.push_str(&stats.csv_rows());
        let ptuple = params_string(&[
            ("n", n.to_string()),
            ("p1", format!("{p1}")),
            ("p2", format!("{p2}")),
        ]);
        for m in &stats.moments {
            records.push(record(
                "localtime",
                ptuple.clone(),
                &format!("L_moment_{}_normalized", m.order),
                m.normalized,
                m.stderr / (n as f64).sqrt(),
                p.trials,
                started,
            ));
        }
        records.push(record(
            "localtime",
            ptuple.clone(),
            "mgf_statistic",
            stats.mgf_statistic,
            stats.mgf_stderr,
            p.trials,
            started,
        ));

        let triple = triple_local_time_stats(n, (p1, p2, p3), p.trials, &mut rng)?;
        let logn2 = (n as f64).ln().powi(2);
        records.push(record(
            "localtime",
            ptuple.clone(),
            "L3_sq_over_log2",
            triple.e_l3_sq / logn2,
            triple.e_l3_sq_stderr / logn2,
            p.trials,
            started,
        ));

        let tail = first_meeting_tail(p1, p2, n, p.meeting_trials, &mut rng);
        let q = p1 * (1.0 - p2) + (1.0 - p1) * p2;
        records.push(record(
            "localtime",
            ptuple.clone(),
            "meeting_tail_scaled",
            (n as f64).sqrt() * tail.estimate / q,
            (n as f64).sqrt() * tail.stderr / q,
            p.meeting_trials,
            started,
        ));

        if n % 2 == 0 {
            let sup = bridge_replace_max_ratio(n, 0.25, 0.75);
            records.push(record(
                "localtime",
                ptuple.clone(),
                "bridge_replace_sup",
                sup,
                0.0,
                1,
                started,
            ));
        }
        for &slope in &p.slopes {
            if slope > 0.0 && slope < 1.0 {
                let dev = platonov_deviation(n, slope);
                let ptuple2 = params_string(&[("n", n.to_string()), ("p", format!("{slope}"))]);
                records.push(record(
                    "localtime",
                    ptuple2,
                    "platonov_constant",
                    dev.scaled,
                    0.0,
                    1,
                    started,
                ));
            }
        }
    }
    write_file(&outdir.join("localtime.csv"), &csv)?;
    Ok(records)
}

pub fn run_validity(
    config: &ExperimentConfig,
    outdir: &Path,
) -> Result<Vec<ResultRecord>, EngineError> {
    let p = config
        .validity
        .as_ref()
        .ok_or_else(|| EngineError::Config("missing [validity] section".into()))?;
    let started = Instant::now();
    let mut rng = SplitMix64::new(mix2(config.master_seed, 0x5641_4c49));

    // the family may be beta-parametrized (log-gamma rules), so the grid is
    // checked point by point and the per-condition results combined
    let mut reports = Vec::new();
    for &beta in &p.beta_grid {
        let family = p.family.build(beta)?;
        reports.push(check_validity(
            &family,
            &[beta],
            &p.k_list,
            p.s,
            p.samples_per_point,
            &mut rng,
        )?);
    }
    let mut records = Vec::new();
    let mut c_k = vec![0.0f64; p.k_list.len()];
    let mut mean_error = 0.0f64;
    let mut min_weight = f64::INFINITY;
    let mut rejections = 0u64;
    let mut all_ok = [true; 4];
    let mut tail_rows = Vec::new();
    for rep in &reports {
        for (j, &(_, c)) in rep.c_k.iter().enumerate() {
            c_k[j] = c_k[j].max(c);
        }
        mean_error = mean_error.max(rep.mean_error);
        min_weight = min_weight.min(rep.min_weight);
        rejections += rep.rejections;
        all_ok[0] &= rep.positivity_ok;
        all_ok[1] &= rep.unit_mean_ok;
        all_ok[2] &= rep.moments_bounded_ok;
        all_ok[3] &= rep.tail_ok;
        tail_rows.extend(rep.tail_table.iter().copied());
    }
    write_file(
        &outdir.join("validity_report.json"),
        &serde_json::to_string_pretty(&reports).expect("reports serialize"),
    )?;

    let ptuple = params_string(&[
        ("family", p.family.variant.clone()),
        ("s", format!("{}", p.s)),
    ]);
    for (j, &k) in p.k_list.iter().enumerate() {
        records.push(record(
            "validity",
            ptuple.clone(),
            &format!("c_{k}"),
            c_k[j],
            0.0,
            p.samples_per_point,
            started,
        ));
    }
    records.push(record(
        "validity",
        ptuple.clone(),
        "mean_error",
        mean_error,
        0.0,
        p.samples_per_point,
        started,
    ));
    records.push(record(
        "validity",
        ptuple.clone(),
        "min_weight",
        min_weight,
        0.0,
        p.samples_per_point,
        started,
    ));
    records.push(record(
        "validity",
        ptuple.clone(),
        "rejections",
        rejections as f64,
        0.0,
        p.samples_per_point,
        started,
    ));
    let names = [
        "positivity_ok",
        "unit_mean_ok",
        "moments_bounded_ok",
        "tail_ok",
    ];
    for (name, ok) in names.iter().zip(all_ok) {
        records.push(record(
            "validity",
            ptuple.clone(),
            name,
            f64::from(u8::from(ok)),
            0.0,
            p.samples_per_point,
            started,
        ));
    }
    let mut tail_csv = String::from("beta_pow_s_minus_1,observed_tail\n");
    for (x, obs) in tail_rows {
        tail_csv.push_str(&format!("{x:.8e},{obs:.8e}\n"));
    }
    write_file(&outdir.join("validity_tail.csv"), &tail_csv)?;
    Ok(records)
}

pub fn run_exponents(
    config: &ExperimentConfig,
    outdir: &Path,
) -> Result<Vec<ResultRecord>, EngineError> {
    let p = config
        .exponents
        .as_ref()
        .ok_or_else(|| EngineError::Config("missing [exponents] section".into()))?;
    let started = Instant::now();
    let mut records = Vec::new();
    let mut csv =
        String::from("alpha,delta,s,k,lambda,strip_feasible,alpha_floor_conjectured,s_threshold\n");
    for &alpha in &p.alpha_list {
        for &delta in &p.delta_list {
            for &s in &p.s_list {
                for &k in &p.k_list {
                    let rep = exponent_report(alpha, delta, s, k)?;
                    let thresh = strip_s_threshold(alpha, delta);
                    csv.push_str(&format!(
                        "{alpha},{delta},{s},{k},{:.9e},{},{:.9e},{:.9e}\n",
                        rep.lambda,
                        u8::from(rep.strip_feasible),
                        rep.alpha_floor_conjectured,
                        thresh
                    ));
                    let ptuple = params_string(&[
                        ("alpha", format!("{alpha}")),
                        ("delta", format!("{delta}")),
                        ("s", format!("{s}")),
                        ("k", format!("{k}")),
                    ]);
                    records.push(record(
                        "exponents",
                        ptuple.clone(),
                        "lambda",
                        rep.lambda,
                        0.0,
                        1,
                        started,
                    ));
                    records.push(record(
                        "exponents",
                        ptuple,
                        "strip_feasible",
                        f64::from(u8::from(rep.strip_feasible)),
                        0.0,
                        1,
                        started,
                    ));
                }
            }
        }
    }
    write_file(&outdir.join("exponents.csv"), &csv)?;
    Ok(records)
}

pub fn run_tw_build(
    config: &ExperimentConfig,
    outdir: &Path,
) -> Result<Vec<ResultRecord>, EngineError> {
    let p = config
        .tw
        .as_ref()
        .ok_or_else(|| EngineError::Config("missing [tw] section".into()))?;
    let started = Instant::now();
    if p.grid_step <= 0.0 || p.grid_hi <= p.grid_lo {
        return Err(EngineError::Config("invalid tw grid".into()));
    }
    let steps = ((p.grid_hi - p.grid_lo) / p.grid_step).round() as usize;
    let grid: Vec<f64> = (0..=steps)
        .map(|i| p.grid_lo + p.grid_step * i as f64)
        .collect();

    let (table, max_diff) = if p.refine_check {
        let (t, d) = crate::dist::tw2_build_checked(p.order, p.tail_cut, &grid, 1e-8)?;
        (t, Some(d))
    } else {
        (crate::dist::tw2_build(p.order, p.tail_cut, &grid)?, None)
    };
    write_file(&outdir.join("tw_gue_cdf.csv"), &table.to_csv())?;

    let (mean, var) = table.mean_variance();
    let ptuple = params_string(&[
        ("order", p.order.to_string()),
        ("tail_cut", format!("{}", p.tail_cut)),
    ]);
    let mut records = vec![
        record(
            "tw_build",
            ptuple.clone(),
            "mean",
            mean,
            0.0,
            grid.len() as u64,
            started,
        ),
        record(
            "tw_build",
            ptuple.clone(),
            "variance",
            var,
            0.0,
            grid.len() as u64,
            started,
        ),
    ];
    if let Some(d) = max_diff {
        records.push(record(
            "tw_build",
            ptuple,
            "refine_max_diff",
            d,
            0.0,
            grid.len() as u64,
            started,
        ));
    }
    Ok(records)
}
