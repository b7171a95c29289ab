//! Acceptance suite: prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::OnceLock;
use std::time::Instant;

use commentvol::corpus::{write_corpus, Corpus};
use commentvol::eval::{
    ablation_suite, cross_validate, mae, r_squared, stepwise_forward_select, AblationConfig,
    SelectionConfig, Setting,
};
use commentvol::features::{extract_features, FeatureSet, FeatureTable};
use commentvol::learn::{fit_ols, ModelFile, ModelSpec, DEFAULT_RIDGE};
use commentvol::matrix::Matrix;
use commentvol::ratemodel::{
    alpha_sweep, compare_lines, fit_rate_line, qq_normal, rate_points, t_quantile, write_fits_csv,
    write_qq_csv, Grouping, RateFit, Relation, DEFAULT_SLOPE_TOL,
};
use commentvol::synth::{
    default_config, generate_corpus, generate_provenance, overall_config,
    write_provenance_csv, Provenance, SynthConfig,
};
use commentvol::taxonomy::{categorize_all, categorize_topic, write_assignments_csv, Category};
use commentvol::text::Providers;
use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

const SWEEP: [usize; 5] = [5, 10, 15, 20, 50];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn main() {
    let criteria: [fn() -> Outcome; 12] = [
        metric_oracles,
        formula_oracles,
        ols_oracle,
        rate_line_recovery,
        ci_coverage,
        rate_dominance,
        rate_only_calibration,
        line_comparison,
        log_normality,
        taxonomy_oracle,
        determinism,
        alpha_sweep_shape,
    ];
    let mut failed = 0;
    for (i, check) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        failed += usize::from(!o.pass);
        println!(
            "criterion {}: {} ({}; {:.1}s)",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            start.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} of 12 criteria failed");
        std::process::exit(1);
    }
    println!("all 12 criteria passed");
}

fn metric_oracles() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let n = rng.random_range(2..500);
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-50.0..50.0)).collect();
        let scale = rng.random_range(-1.0..2.0);
        let p: Vec<f64> = y
            .iter()
            .map(|v| scale * v + rng.random_range(-20.0..20.0))
            .collect();
        worst = worst.max((r_squared(&y, &p).unwrap() - brute_r2(&y, &p)).abs());
        worst = worst.max((mae(&y, &p).unwrap() - brute_mae(&y, &p)).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-12 && secs < 1.0,
        format!("1000 pairs, max deviation {worst:.1e}, {secs:.3}s"),
    )
}

fn formula_oracles() -> Outcome {
    let start = Instant::now();
    let providers = Providers::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut mismatches = Vec::new();
    for i in 0..200 {
        let alpha = if i % 2 == 0 { 10 } else { 5 };
        let n = alpha + rng.random_range(0..30);
        let reply_p = rng.random_range(0.0..0.9);
        let mut a = random_thread(&mut rng, &format!("f{i}"), n, reply_p);
        a.body = random_text(&mut rng, 40);
        let fv = extract_features(&a, alpha, &providers).unwrap();
        let first = &a.comments[..alpha];
        let ts: Vec<i64> = first.iter().map(|c| c.timestamp).collect();
        let texts: Vec<&str> = first.iter().map(|c| c.text.as_str()).collect();
        let (depth, width) = brute_depth_width(&a.comments, alpha);
        let surfaces = |t: &str| -> Vec<String> {
            providers
                .ner
                .entities(t)
                .unwrap()
                .into_iter()
                .map(|e| e.surface.to_lowercase())
                .collect()
        };
        let com: Vec<String> = texts.iter().flat_map(|t| surfaces(t)).collect();
        let (ia, ic) = brute_overlap(&surfaces(&a.body), &com);
        let close = |got: f64, want: f64| (got - want).abs() <= 1e-12 * (1.0 + want.abs());
        let checks = [
            (
                "rate",
                close(fv.get("rate").unwrap(), brute_rate(&ts, alpha)),
            ),
            (
                "complexity",
                close(fv.get("complexity").unwrap(), brute_complexity(&texts)),
            ),
            ("depth", fv.get("depth").unwrap() == depth as f64),
            ("width", fv.get("width").unwrap() == width as f64),
            ("inter_art", close(fv.get("inter_art").unwrap(), ia)),
            ("inter_com", close(fv.get("inter_com").unwrap(), ic)),
        ];
        mismatches.extend(
            checks
                .iter()
                .filter(|c| !c.1)
                .map(|c| format!("{}:{}", a.id, c.0)),
        );
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        mismatches.is_empty() && secs < 5.0,
        format!("200 fixtures, mismatches {:?}, {secs:.2}s", mismatches),
    )
}

fn ols_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for i in 0..100 {
        let p = 1 + i % 5;
        let n = 20 + 3 * i;
        let beta: Vec<f64> = (0..p).map(|_| rng.random_range(-2.0..2.0)).collect();
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                (0..p)
                    .map(|j| rng.random_range(-1.0..1.0) + j as f64)
                    .collect()
            })
            .collect();
        let y: Vec<f64> = rows
            .iter()
            .map(|r| {
                0.5 + r.iter().zip(&beta).map(|(x, b)| x * b).sum::<f64>()
                    + rng.random_range(-0.5..0.5)
            })
            .collect();
        let m = fit_ols(&Matrix::from_rows(&rows).unwrap(), &y, DEFAULT_RIDGE).unwrap();
        let (b0, b) = normal_equations(&rows, &y);
        worst = worst.max((m.intercept - b0).abs());
        for (g, w) in m.coefficients.iter().zip(&b) {
            worst = worst.max((g - w).abs());
        }
        // Simple regression through fit_rate_line on the same first column.
        let pts: Vec<(f64, f64)> = rows
            .iter()
            .zip(&y)
            .map(|(r, v)| (10f64.powf(r[0]), 10f64.powf(*v)))
            .collect();
        let fit = fit_rate_line(&pts).unwrap();
        let xs: Vec<Vec<f64>> = pts.iter().map(|p| vec![p.0.log10()]).collect();
        let ys: Vec<f64> = pts.iter().map(|p| p.1.log10()).collect();
        let (a1, b1) = normal_equations(&xs, &ys);
        worst = worst
            .max((fit.intercept - a1).abs())
            .max((fit.slope - b1[0]).abs());
    }
    let x: Vec<f64> = (0..40).map(|i| -2.0 + 0.07 * i as f64).collect();
    let exact: Vec<(f64, f64)> = x
        .iter()
        .map(|v| (10f64.powf(*v), 10f64.powf(0.963 * v + 3.201)))
        .collect();
    let fit = fit_rate_line(&exact).unwrap();
    let line_err = (fit.slope - 0.963).abs().max((fit.intercept - 3.201).abs());
    let rows: Vec<Vec<f64>> = x.iter().map(|v| vec![*v]).collect();
    let ys: Vec<f64> = x.iter().map(|v| 0.963 * v + 3.201).collect();
    let m = fit_ols(&Matrix::from_rows(&rows).unwrap(), &ys, DEFAULT_RIDGE).unwrap();
    let ols_err = (m.coefficients[0] - 0.963)
        .abs()
        .max((m.intercept - 3.201).abs());
    outcome(
        worst <= 1e-8 && line_err <= 1e-9 && ols_err <= 1e-9,
        format!("100 instances max deviation {worst:.1e}; exact line {line_err:.1e} (rate fit), {ols_err:.1e} (ols)"),
    )
}

fn outlet_fits(prov: &[Provenance]) -> BTreeMap<String, RateFit<f64>> {
    let mut pts: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for p in prov {
        if let Some(r) = p.rate {
            pts.entry(p.outlet.clone())
                .or_default()
                .push((r, p.volume as f64));
        }
    }
    pts.into_iter()
        .map(|(k, v)| (k, fit_rate_line(&v).unwrap()))
        .collect()
}

/// Slope and intercept per group for the six outlets and the pooled config.
fn recovery_run(seed: u64) -> BTreeMap<String, (f64, f64)> {
    let mut out = BTreeMap::new();
    for cfg in [default_config(), overall_config()] {
        for (k, f) in outlet_fits(&generate_provenance(&cfg.with_seed(seed)).unwrap()) {
            out.insert(k, (f.slope, f.intercept));
        }
    }
    out
}

struct OutletRun {
    name: String,
    provenance_matches: bool,
    rate_r2: f64,
    target_r2: f64,
    secs: f64,
}

/// Full-size single-outlet corpora: materialized rate points against the
/// provenance, and rate-only forest R² under cross-validation.
fn outlet_runs() -> &'static Vec<OutletRun> {
    static RUNS: OnceLock<Vec<OutletRun>> = OnceLock::new();
    RUNS.get_or_init(|| {
        default_config()
            .outlets
            .into_iter()
            .map(|o| {
                let start = Instant::now();
                let target_r2 = o.implied_r2();
                let cfg = SynthConfig::new(vec![o]);
                let out = generate_corpus(&cfg).unwrap();
                let from_corpus: Vec<(f64, f64)> = rate_points(&out.corpus, cfg.alpha)
                    .unwrap()
                    .iter()
                    .map(|p| (p.rate, p.volume as f64))
                    .collect();
                let from_plan: Vec<(f64, f64)> = out
                    .provenance
                    .iter()
                    .filter_map(|p| p.rate.map(|r| (r, p.volume as f64)))
                    .collect();
                let table =
                    FeatureTable::build(&out.corpus, cfg.alpha, &Providers::default()).unwrap();
                drop(out);
                let dm = table
                    .design::<f64>(&FeatureSet::Rate, &Default::default())
                    .unwrap();
                let rep =
                    cross_validate(&dm, &ModelSpec::forest(100, 0), 5, 0, Setting::Global).unwrap();
                OutletRun {
                    name: cfg.outlets[0].name.clone(),
                    provenance_matches: from_corpus == from_plan
                        && generate_provenance(&cfg).unwrap().len() == cfg.outlets[0].n,
                    rate_r2: rep.r2,
                    target_r2,
                    secs: start.elapsed().as_secs_f64(),
                }
            })
            .collect()
    })
}

fn rate_line_recovery() -> Outcome {
    let target: BTreeMap<String, (f64, f64)> = default_config()
        .outlets
        .iter()
        .chain(&overall_config().outlets)
        .map(|o| (o.name.clone(), (o.slope, o.intercept)))
        .collect();
    let reference: Vec<BTreeMap<String, (f64, f64)>> = (10_000..11_000).map(recovery_run).collect();
    let mut slowest = 0.0f64;
    let scored: Vec<BTreeMap<String, (f64, f64)>> = (0..20)
        .map(|seed| {
            let t = Instant::now();
            let r = recovery_run(seed);
            slowest = slowest.max(t.elapsed().as_secs_f64());
            r
        })
        .collect();
    let mut pass = true;
    let mut parts = Vec::new();
    for (group, &(b, a)) in &target {
        let sd = |f: fn(&(f64, f64)) -> f64| {
            let v: Vec<f64> = reference.iter().map(|r| f(&r[group])).collect();
            sample_var(&v).sqrt()
        };
        let (sd_b, sd_a) = (sd(|p| p.0), sd(|p| p.1));
        let hits_b = scored
            .iter()
            .filter(|r| (r[group].0 - b).abs() <= 1.96 * sd_b)
            .count();
        let hits_a = scored
            .iter()
            .filter(|r| (r[group].1 - a).abs() <= 1.96 * sd_a)
            .count();
        pass &= hits_b >= 18 && hits_a >= 18;
        parts.push(format!("{group} {hits_b}/{hits_a}"));
    }
    let runs = outlet_runs();
    let same = runs.iter().all(|r| r.provenance_matches);
    outcome(
        pass && same && slowest < 30.0,
        format!(
            "slope/intercept hits of 20: {}; full-size corpora match provenance: {same}; slowest run {slowest:.2}s",
            parts.join(", ")
        ),
    )
}

fn ci_coverage() -> Outcome {
    let start = Instant::now();
    let (b, a) = (0.7, 2.7);
    let x = Normal::new(-0.8, 0.6).unwrap();
    let e = Normal::new(0.0, 0.3).unwrap();
    let covered = (0..500u64)
        .filter(|&seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pts: Vec<(f64, f64)> = (0..300)
                .map(|_| {
                    let lr = x.sample(&mut rng);
                    (10f64.powf(lr), 10f64.powf(b * lr + a + e.sample(&mut rng)))
                })
                .collect();
            let f = fit_rate_line(&pts).unwrap();
            f.slope_ci.0 <= b && b <= f.slope_ci.1
        })
        .count();
    let secs = start.elapsed().as_secs_f64();
    let pct = covered as f64 / 5.0;
    outcome(
        (93.0..=97.0).contains(&pct) && secs < 60.0,
        format!("{covered}/500 intervals cover the slope ({pct:.1}%)"),
    )
}

fn overall_3000(seed: u64) -> FeatureTable {
    let cfg = overall_config().scaled(3000.0 / 19433.0).with_seed(seed);
    let corpus = generate_corpus(&cfg).unwrap().corpus;
    FeatureTable::build(
        &corpus,
        cfg.alpha,
        &Providers::default().with_timezones(cfg.timezones()),
    )
    .unwrap()
}

fn rate_dominance() -> Outcome {
    let start = Instant::now();
    let table = overall_3000(0);
    let rate_only = FeatureSet::AllExcept(vec!["rate".into()]);
    let cfg = AblationConfig {
        models: vec![ModelSpec::forest(100, 0)],
        sets: vec![
            FeatureSet::All,
            FeatureSet::Rate,
            FeatureSet::Art,
            rate_only,
        ],
        local: false,
        ..Default::default()
    };
    let r: Vec<f64> = ablation_suite::<f64>(&table, &cfg)
        .unwrap()
        .iter()
        .map(|r| r.r2)
        .collect();
    let (all, rate, art, no_rate) = (r[0], r[1], r[2], r[3]);
    let ablation_ok = (rate - all).abs() <= 0.05 && art < 0.10 && all - no_rate >= 0.30;
    let first_picks: Vec<String> = (0..20)
        .map(|seed| {
            let t = if seed == 0 {
                table.clone()
            } else {
                overall_3000(seed)
            };
            let sel = SelectionConfig {
                seed,
                max_steps: Some(1),
                ..Default::default()
            };
            let trace =
                stepwise_forward_select::<f64>(&t, &ModelSpec::forest(20, seed), &sel).unwrap();
            trace.chosen.first().cloned().unwrap_or_default()
        })
        .collect();
    let rate_first = first_picks.iter().filter(|c| *c == "rate").count();
    let secs = start.elapsed().as_secs_f64();
    outcome(
        ablation_ok && rate_first >= 19 && secs < 300.0,
        format!(
            "n={} R² ALL {all:.3}, RATE {rate:.3}, ART {art:.3}, ALL-{{rate}} {no_rate:.3}; rate first in {rate_first}/20 seeds",
            table.len()
        ),
    )
}

fn rate_only_calibration() -> Outcome {
    let runs = outlet_runs();
    let secs: f64 = runs.iter().map(|r| r.secs).sum();
    let ok = runs.iter().all(|r| (r.rate_r2 - r.target_r2).abs() <= 0.07);
    let parts: Vec<String> = runs
        .iter()
        .map(|r| format!("{} {:.3} vs {:.3}", r.name, r.rate_r2, r.target_r2))
        .collect();
    outcome(
        ok && secs < 120.0,
        format!("{}; corpora and CV {secs:.1}s", parts.join(", ")),
    )
}

fn compare_outlets() -> (Relation, Relation, f64, f64) {
    let prov = generate_provenance(&default_config().scaled(20.0)).unwrap();
    let fits = outlet_fits(&prov);
    let fg = compare_lines("FN", &fits["FN"], "Gd", &fits["Gd"], DEFAULT_SLOPE_TOL);
    let dn = compare_lines("DM", &fits["DM"], "NYT", &fits["NYT"], DEFAULT_SLOPE_TOL);
    let gap = |r: f64| {
        fits["FN"].predict_log_volume(r.log10()) - fits["Gd"].predict_log_volume(r.log10())
    };
    (fg.relation, dn.relation, gap(0.769), gap(0.092))
}

fn line_comparison() -> Outcome {
    let first = compare_outlets();
    let again = compare_outlets();
    let (fg, dn, hi_gap, lo_gap) = &first;
    let crossing = match fg {
        Relation::Crossing {
            above, below, rate, ..
        } => Some((above == "FN" && below == "Gd", *rate)),
        Relation::Parallel { .. } => None,
    };
    let nyt_higher = *dn
        == Relation::Parallel {
            higher: Some("NYT".into()),
        };
    let ok = crossing.is_some_and(|c| c.0) && nyt_higher && *hi_gap > 0.0 && first == again;
    outcome(
        ok,
        format!(
            "FN/Gd {}; DM/NYT {:?}; FN minus Gd log-volume at rate 0.769: {hi_gap:+.3}, at 0.092: {lo_gap:+.3}; repeat identical: {}",
            crossing.map_or("not crossing".into(), |c| format!("crossing at rate {:.4}, FN above: {}", c.1, c.0)),
            dn,
            first == again
        ),
    )
}

fn log_normality() -> Outcome {
    let start = Instant::now();
    let mut cfg = default_config();
    cfg.outlets.extend(overall_config().outlets);
    let prov = generate_provenance(&cfg).unwrap();
    let mut worst = f64::INFINITY;
    let mut parts = Vec::new();
    for o in &cfg.outlets {
        let v: Vec<f64> = prov
            .iter()
            .filter(|p| p.outlet == o.name)
            .map(|p| (p.volume as f64).log10())
            .collect();
        let c = qq_normal(&v).unwrap().correlation;
        worst = worst.min(c);
        parts.push(format!("{} {c:.4}", o.name));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let uniform: Vec<f64> = (0..1000).map(|_| rng.random::<f64>()).collect();
    let control = qq_normal(&uniform).unwrap().correlation;
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst >= 0.99 && control < 0.99 && secs < 5.0,
        format!("{}; uniform control {control:.4}", parts.join(", ")),
    )
}

fn taxonomy_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut mismatches = 0;
    let mut topics = 0;
    for _ in 0..50 {
        let corpus = random_labeled_corpus(&mut rng, 80, 6);
        for t in 0..6 {
            let topic = format!("topic{t}");
            let got = categorize_topic(&topic, &corpus);
            let pairs: Vec<(String, usize)> = got
                .categories
                .iter()
                .map(|(c, n)| (c.to_string(), *n))
                .collect();
            let (want, labeled) = brute_topic_counts(&corpus, &topic);
            mismatches += usize::from(pairs != want || got.labeled != labeled);
            topics += 1;
        }
    }
    let fixture = |counts: &[(&str, usize)]| {
        let arts = counts
            .iter()
            .flat_map(|&(c, n)| (0..n).map(move |i| (c, i)))
            .map(|(c, i)| {
                let mut a = article(&format!("{c}{i}"), "X", 0, vec![]);
                a.categories = vec![c.to_string()];
                a
            })
            .collect();
        let got = categorize_topic("t", &Corpus::new(arts).unwrap());
        got.categories.iter().map(|c| c.0).collect::<Vec<_>>()
    };
    let top3 = fixture(&[("Politics", 5), ("US", 3), ("World", 2), ("Health", 1)]);
    let ties = fixture(&[("World", 1), ("Business", 1), ("US", 1), ("Health", 1)]);
    let top_ok = top3 == [Category::Politics, Category::US, Category::World];
    let tie_ok = ties == [Category::Business, Category::Health, Category::US];
    let secs = start.elapsed().as_secs_f64();
    outcome(
        mismatches == 0 && top_ok && tie_ok && secs < 5.0,
        format!("{topics} topics over 50 corpora, {mismatches} mismatches; truncation {top_ok}, tie-break {tie_ok}"),
    )
}

/// Bytes produced by each pipeline stage on a small generated corpus.
fn pipeline_outputs() -> Vec<(&'static str, Vec<u8>)> {
    let cfg = default_config().scaled(0.02).with_seed(11);
    let out = generate_corpus(&cfg).unwrap();
    let mut stages = Vec::new();
    let mut buf = Vec::new();
    write_corpus(&out.corpus, &mut buf).unwrap();
    stages.push(("corpus", buf));
    let mut buf = Vec::new();
    write_provenance_csv(&out.provenance, &mut buf).unwrap();
    stages.push(("provenance", buf));

    let providers = Providers::default().with_timezones(cfg.timezones());
    let table = FeatureTable::build(&out.corpus, cfg.alpha, &providers).unwrap();
    let dm = table
        .design::<f64>(&FeatureSet::All, &Default::default())
        .unwrap();
    let mut buf = Vec::new();
    dm.write_csv(&mut buf).unwrap();
    stages.push(("features", buf));

    for spec in [
        ModelSpec::forest(30, 5),
        ModelSpec::linear(),
        ModelSpec::from_name("mlp").unwrap(),
    ] {
        let rep = cross_validate(&dm, &spec, 5, 5, Setting::Global).unwrap();
        stages.push(("cv report", serde_json::to_vec(&rep).unwrap()));
        let model = spec.fit(&dm.x, &dm.y).unwrap();
        let file = ModelFile::new(
            spec,
            cfg.alpha,
            dm.feature_set.clone(),
            dm.columns.clone(),
            model,
        );
        stages.push(("model", file.to_json().unwrap().into_bytes()));
    }
    let sel = SelectionConfig {
        max_steps: Some(2),
        ..Default::default()
    };
    let trace = stepwise_forward_select::<f64>(&table, &ModelSpec::forest(10, 1), &sel).unwrap();
    stages.push(("selection", serde_json::to_vec(&trace).unwrap()));

    let fits = alpha_sweep::<f64>(&out.corpus, &SWEEP, Grouping::Outlet, 5).unwrap();
    let mut buf = Vec::new();
    write_fits_csv(&fits, &mut buf).unwrap();
    stages.push(("rate fits", buf));
    let logs: Vec<f64> = out
        .provenance
        .iter()
        .map(|p| (p.volume as f64).log10())
        .collect();
    let mut buf = Vec::new();
    write_qq_csv(&qq_normal(&logs).unwrap(), &mut buf).unwrap();
    stages.push(("qq", buf));
    let mut buf = Vec::new();
    write_assignments_csv(&categorize_all(&out.corpus), &mut buf).unwrap();
    stages.push(("taxonomy", buf));
    stages
}

fn determinism() -> Outcome {
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(pipeline_outputs)
    };
    let a = run(4);
    let b = run(4);
    let c = run(1);
    let differing: BTreeSet<&str> = a
        .iter()
        .zip(&b)
        .zip(&c)
        .filter(|((x, y), z)| x.1 != y.1 || x.1 != z.1)
        .map(|((x, _), _)| x.0)
        .collect();
    outcome(
        differing.is_empty() && a.len() == b.len() && a.len() == c.len(),
        format!("{} stage outputs compared across 2 runs on 4 threads and 1 run on 1 thread; differing: {differing:?}", a.len()),
    )
}

fn alpha_sweep_shape() -> Outcome {
    let corpus = generate_corpus(&default_config().scaled(0.1))
        .unwrap()
        .corpus;
    let rows = alpha_sweep::<f64>(&corpus, &SWEEP, Grouping::Outlet, 30).unwrap();
    let keys: Vec<(usize, String)> = rows.iter().map(|r| (r.alpha, r.group.clone())).collect();
    let outlets: BTreeSet<&str> = corpus.outlets();
    let expected: Vec<(usize, String)> = SWEEP
        .iter()
        .flat_map(|&a| outlets.iter().map(move |o| (a, o.to_string())))
        .collect();
    let layout_ok = keys == expected && rows.iter().all(|r| r.fit.is_some());

    // Per-alpha recovery on full-size data, with intervals holding jointly
    // over every (outlet, alpha) row.
    let base = default_config();
    let family = (SWEEP.len() * base.outlets.len()) as f64;
    let (mut joint, mut marginal, mut total) = (0, 0, 0);
    for &alpha in &SWEEP {
        let cfg = base.at_alpha(alpha);
        let fits = outlet_fits(&generate_provenance(&cfg).unwrap());
        for o in &cfg.outlets {
            let f = &fits[&o.name];
            let miss = (f.slope - o.slope).abs();
            let df = f.n as f64 - 2.0;
            joint += usize::from(miss <= t_quantile(1.0 - 0.025 / family, df) * f.slope_se);
            marginal += usize::from(f.slope_ci.0 <= o.slope && o.slope <= f.slope_ci.1);
            total += 1;
        }
    }
    outcome(
        layout_ok && joint == total,
        format!(
            "{} rows ordered by (alpha, outlet); slopes inside joint 95% intervals {joint}/{total}, inside per-row 95% intervals {marginal}/{total}",
            rows.len()
        ),
    )
}
