//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! fails. Every derived value is checked against an oracle written here.

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use cdp_cli::config::ScenarioField;
use cdp_cli::{cmd_run, RawConfig};
use cdp_core::acc::{calibrate_cdp_acc, shortest_covering_interval, AccConfig, ConditionalHistogram};
use cdp_core::baselines::{calibrate_cqr, gaussian_z, predict_qr_raw};
use cdp_core::metrics::picp;
use cdp_core::synth::{exchangeable_split, generate_scenario, quantile_records, ScenarioSpec, SCENARIOS};
use cdp_core::{calibrate_cdp, conformal_quantile, erf, inverse_erf, Alpha, Interval, PredictionRecord, TargetBounds};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn alpha(a: f64) -> Alpha {
    Alpha::new(a).unwrap()
}

fn split_scenario(
    name: &str,
    n_cal: usize,
    n_test: usize,
    seed: u64,
) -> (Vec<PredictionRecord>, Vec<PredictionRecord>) {
    let spec = ScenarioSpec::named(name, n_cal + n_test, seed).unwrap();
    let recs = generate_scenario(&spec).unwrap();
    exchangeable_split(&recs, n_cal as f64 / (n_cal + n_test) as f64, seed ^ 0xa5a5).unwrap()
}

fn labels(recs: &[PredictionRecord]) -> Vec<f64> {
    recs.iter().map(|r| r.y_true).collect()
}

fn band(a: f64) -> (f64, f64) {
    (1.0 - a - 0.01, 1.0 - a + 1.0 / 1001.0 + 0.01)
}

fn coverage(intervals: &[Interval], y: &[f64]) -> f64 {
    let hit = intervals.iter().zip(y).filter(|(iv, &v)| iv.lo() <= v && v <= iv.hi()).count();
    hit as f64 / y.len() as f64
}

// ---------------------------------------------------------------------------

fn marginal_band() -> Outcome {
    let start = Instant::now();
    let mut worst = String::new();
    let mut ok = true;
    for &a in &[0.05, 0.1, 0.2] {
        for name in SCENARIOS {
            let mean = (0..50u64)
                .map(|t| {
                    let (cal, test) = split_scenario(name, 1000, 5000, 1000 + t);
                    let c = calibrate_cdp(&cal, alpha(a), None).unwrap();
                    let iv: Vec<_> = test.iter().map(|r| c.predict(r.y_pred).unwrap()).collect();
                    coverage(&iv, &labels(&test))
                })
                .sum::<f64>()
                / 50.0;
            let (lo, hi) = band(a);
            if !(lo <= mean && mean <= hi) {
                ok = false;
                worst = format!("{worst} {name}@{a}={mean:.4}");
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(ok && secs < 60.0, format!("12 family/alpha cells, 50 trials each, {secs:.1}s{worst}"))
}

fn per_bin_coverage() -> Outcome {
    let (cal, test) = split_scenario("heteroscedastic-v1", 5000, 10_000, 77);
    let a = alpha(0.1);
    let cfg = AccConfig { range: Some((0.0, 63.0)), ..AccConfig::default() };
    let calib = calibrate_cdp_acc(&cal, a, &cfg, Some(TargetBounds::bdi())).unwrap();
    let mut hits = [0usize; 14];
    let mut counts = [0usize; 14];
    for r in &test {
        let m = ((r.y_pred / 4.5).floor() as isize).clamp(0, 13) as usize;
        let iv = calib.predict(r.y_pred).unwrap();
        counts[m] += 1;
        hits[m] += usize::from(iv.lo() <= r.y_true && r.y_true <= iv.hi());
    }
    let mut worst = f64::INFINITY;
    let mut checked = 0;
    for m in 0..14 {
        if counts[m] >= 200 {
            checked += 1;
            worst = worst.min(hits[m] as f64 / counts[m] as f64);
        }
    }
    check(checked > 0 && worst >= 0.85, format!("{checked} bins with >=200 test points, min coverage {worst:.4}"))
}

fn adaptivity_direction() -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    for name in ["heteroscedastic-v1", "imbalanced-skew-v1"] {
        let (mut narrower, mut ssc_ok) = (0, 0);
        for seed in 1..=10u64 {
            let base = RawConfig {
                scenario: Some(ScenarioField::Named(name.into())),
                seed: Some(seed),
                bdi: Some(true),
                n_cal: Some(5000),
                n_test: Some(20_000),
                ..Default::default()
            };
            let run = |m: &str| {
                let cfg = RawConfig { method: Some(m.into()), ..base.clone() }.resolve().unwrap();
                cdp_cli::run(&cfg).unwrap().report
            };
            let (cdp, acc) = (run("cdp"), run("cdp-acc"));
            narrower += usize::from(acc.mpiw < cdp.mpiw);
            ssc_ok += usize::from(acc.ssc >= cdp.ssc - 0.01);
        }
        ok &= narrower >= 9 && ssc_ok >= 9;
        detail.push(format!("{name}: narrower {narrower}/10, ssc {ssc_ok}/10"));
    }
    check(ok, detail.join("; "))
}

/// Exhaustive search over edge index pairs `(a, b)` with
/// `edges[a] <= y <= edges[b]` and integer mass at least `tau * total`.
fn enumerate_shortest(edges: &[f64], counts: &[u64], tau: f64, y: f64) -> (usize, usize) {
    let k = counts.len();
    let total: u64 = counts.iter().sum();
    let mut best = (0, k);
    let mut best_width = usize::MAX;
    for a in 0..k {
        for b in a + 1..=k {
            if !(edges[a] <= y && y <= edges[b]) {
                continue;
            }
            let mass: u64 = counts[a..b].iter().sum();
            if (mass as f64) < tau * total as f64 - 1e-9 {
                continue;
            }
            if b - a < best_width {
                best_width = b - a;
                best = (a, b);
            }
        }
    }
    best
}

fn interval_search_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let taus = [0.5, 0.8, 0.9, 0.95];
    for case in 0..1000 {
        let k = rng.random_range(1..=32usize);
        let mut counts: Vec<u64> =
            (0..k).map(|_| if rng.random_bool(0.25) { 0 } else { rng.random_range(1..20) }).collect();
        if counts.iter().all(|&c| c == 0) {
            counts[0] = 1;
        }
        let lo = rng.random_range(-10.0..10.0);
        let hi = lo + rng.random_range(0.5..40.0);
        let hist = ConditionalHistogram::from_counts(lo, hi, &counts).unwrap();
        let edges = hist.edges().to_vec();
        let tau = taus[case % 4];
        let y = if case % 7 == 0 { edges[rng.random_range(0..=k)] } else { rng.random_range(lo..=hi) };
        let (a, b) = enumerate_shortest(&edges, &counts, tau, y);
        let got = shortest_covering_interval(&hist, tau, y).unwrap();
        if got.lo() != edges[a] || got.hi() != edges[b] {
            return Err(format!(
                "case {case}: counts {counts:?} tau {tau} y {y}: got [{}, {}], oracle [{}, {}]",
                got.lo(),
                got.hi(),
                edges[a],
                edges[b]
            ));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(secs < 10.0, format!("1000 histograms match enumeration, {secs:.2}s"))
}

fn quantile_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for case in 0..1000 {
        let n = rng.random_range(1..=500usize);
        // coarse values force ties
        let scores: Vec<f64> = (0..n).map(|_| (rng.random_range(0.0..50.0f64) * 4.0).round() / 4.0).collect();
        let per_mille = rng.random_range(1..1000u64);
        let a = alpha(per_mille as f64 / 1000.0);
        // k = ceil((n + 1)(1000 - p) / 1000) in integers
        let num = (n as u64 + 1) * (1000 - per_mille);
        let k = num.div_ceil(1000) as usize;
        let mut sorted = scores.clone();
        sorted.sort_by(f64::total_cmp);
        let expected = if k > n { f64::INFINITY } else { sorted[k - 1] };
        let got = conformal_quantile(&scores, a).unwrap();
        if got.to_bits() != expected.to_bits() {
            return Err(format!("case {case}: n={n} alpha={} got {got} expected {expected}", a.value()));
        }
    }
    Ok("1000 vectors, lengths 1-500, exact".into())
}

/// erf(x) = 2/sqrt(pi) * exp(-x^2) * sum_n 2^n x^(2n+1) / (2n+1)!!, all
/// terms positive.
fn erf_oracle(x: f64) -> f64 {
    let ax = x.abs();
    let mut term = ax;
    let mut sum = ax;
    let mut n = 0.0;
    while term > 1e-18 * sum {
        n += 1.0;
        term *= 2.0 * ax * ax / (2.0 * n + 1.0);
        sum += term;
    }
    (2.0 / std::f64::consts::PI.sqrt() * (-ax * ax).exp() * sum).copysign(x)
}

fn z_oracle(a: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 10.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if erf_oracle(mid / std::f64::consts::SQRT_2) < 1.0 - a {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn gaussian_accuracy() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut worst_oracle: f64 = 0.0;
    for i in -999..=999 {
        let x = i as f64 / 1000.0;
        let v = inverse_erf(x).unwrap();
        worst = worst.max((erf(v) - x).abs());
        worst_oracle = worst_oracle.max((erf_oracle(v) - x).abs());
    }
    let z = gaussian_z(alpha(0.1));
    let zo = z_oracle(0.1);
    check(
        worst < 1e-9 && worst_oracle < 1e-9 && (z - 1.644854).abs() < 1e-5 && (z - zo).abs() < 1e-9,
        format!("max residual {worst:.2e} (independent erf {worst_oracle:.2e}); z={z:.7}, bisection {zo:.7}"),
    )
}

/// Straight-line CDP-ACC: bins, jittered histograms, brute-force shortest
/// covering widths, per-bin rank threshold, hull of qualifying cells.
/// Returns per bin `(n, interval)` with `None` for fallback bins.
fn acc_reference(
    cal: &[PredictionRecord],
    a: f64,
    m_bins: usize,
    k: usize,
    seed: u64,
    noise: f64,
) -> Vec<(usize, Option<(f64, f64)>)> {
    let lo_p = cal.iter().map(|r| r.y_pred).fold(f64::INFINITY, f64::min);
    let hi_p = cal.iter().map(|r| r.y_pred).fold(f64::NEG_INFINITY, f64::max);
    let step = (hi_p - lo_p) / m_bins as f64;
    let mut groups = vec![Vec::new(); m_bins];
    for r in cal {
        let mut m = 0;
        while m + 1 < m_bins && r.y_pred >= lo_p + step * (m + 1) as f64 {
            m += 1;
        }
        groups[m].push(r.y_true);
    }
    let tau = 1.0 - a;
    let mut out = Vec::new();
    for (m, ys) in groups.iter().enumerate() {
        let n = ys.len();
        if n < 10 {
            out.push((n, None));
            continue;
        }
        let lo = ys.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let w = (hi - lo) / k as f64;
        let edge = |j: usize| if j == k { hi } else { lo + (hi - lo) * j as f64 / k as f64 };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(m as u64);
        let t = noise * (hi - lo);
        let mut counts = vec![0u64; k];
        for &y in ys {
            let v = (y + t * (2.0 * rng.random::<f64>() - 1.0)).clamp(lo, hi);
            let mut j = 0;
            while j + 1 < k && v >= edge(j + 1) {
                j += 1;
            }
            counts[j] += 1;
        }
        let width_at = |y: f64| {
            let mut best = k;
            for a in 0..k {
                for b in a + 1..=k {
                    let mass: u64 = counts[a..b].iter().sum();
                    if edge(a) <= y && y <= edge(b) && mass as f64 / n as f64 >= tau - 1e-12 {
                        best = best.min(b - a);
                    }
                }
            }
            best as f64 * w
        };
        let mut scores: Vec<f64> = ys.iter().map(|&y| width_at(y)).collect();
        scores.sort_by(f64::total_cmp);
        let rank = ((n + 1) as f64 * tau - 1e-9).ceil() as usize;
        if rank > n {
            out.push((n, None));
            continue;
        }
        let s_hat = scores[rank - 1];
        let ok: Vec<usize> = (0..k).filter(|&j| width_at(0.5 * (edge(j) + edge(j + 1))) <= s_hat).collect();
        let iv = match (ok.first(), ok.last()) {
            (Some(&f), Some(&l)) => (edge(f), edge(l + 1)),
            _ => (lo, hi),
        };
        out.push((n, Some(iv)));
    }
    out
}

fn end_to_end_oracle() -> Outcome {
    let spec = ScenarioSpec::named("heteroscedastic-v1", 200, 7).unwrap();
    let cal = generate_scenario(&spec).unwrap();
    let cfg = AccConfig { bins: 4, hist_bins: 16, seed: 7, ..AccConfig::default() };
    let calib = calibrate_cdp_acc(&cal, alpha(0.1), &cfg, None).unwrap();
    let reference = acc_reference(&cal, 0.1, 4, 16, 7, cfg.tie_noise);
    for (m, (bin, (n, iv))) in calib.bins.iter().zip(&reference).enumerate() {
        if bin.n != *n {
            return Err(format!("bin {m}: n {} vs {n}", bin.n));
        }
        let same = match (bin.interval, iv) {
            (None, None) => true,
            (Some(got), Some((lo, hi))) => (got.lo() - lo).abs() < 1e-9 && (got.hi() - hi).abs() < 1e-9,
            _ => false,
        };
        if !same {
            return Err(format!("bin {m}: {:?} vs {iv:?}", bin.interval));
        }
    }
    let shown: Vec<String> = reference
        .iter()
        .map(|(n, iv)| match iv {
            Some((lo, hi)) => format!("n={n} [{lo:.3}, {hi:.3}]"),
            None => format!("n={n} fallback"),
        })
        .collect();
    Ok(format!("4 bins match: {}", shown.join(", ")))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut compared = 0;
    for method in ["cdp", "cdp-acc", "cqr"] {
        let outs: Vec<_> = (0..2)
            .map(|i| {
                let out = dir.path().join(format!("{method}-{i}"));
                let cfg = RawConfig {
                    method: Some(method.into()),
                    scenario: Some(ScenarioField::Named("imbalanced-skew-v1".into())),
                    seed: Some(13),
                    bdi: Some(true),
                    out: Some(out.clone()),
                    ..Default::default()
                }
                .resolve()
                .unwrap();
                cmd_run(&cfg).unwrap();
                out
            })
            .collect();
        for f in ["report.csv", "groups.csv", "intervals.csv", "calibration.txt"] {
            let (x, y) = (fs::read(outs[0].join(f)).unwrap(), fs::read(outs[1].join(f)).unwrap());
            if x != y {
                return Err(format!("{method}: {f} differs"));
            }
            compared += 1;
        }
    }
    Ok(format!("{compared} output files byte-identical across two runs"))
}

fn cqr_validity() -> Outcome {
    let a = alpha(0.1);
    let (mut cqr_sum, mut qr_sum) = (0.0, 0.0);
    for t in 0..50u64 {
        let spec = ScenarioSpec::named("heteroscedastic-v1", 6000, 500 + t).unwrap();
        let recs = generate_scenario(&spec).unwrap();
        let (cal, test) = exchangeable_split(&recs, 1000.0 / 6000.0, t).unwrap();
        let cal_q = quantile_records(&spec, &cal, a, 0.5).unwrap();
        let test_q = quantile_records(&spec, &test, a, 0.5).unwrap();
        let c = calibrate_cqr(&cal_q, a, None).unwrap();
        let y = labels(&test);
        let cqr: Vec<_> = test_q.iter().map(|r| c.predict(r.q_lo, r.q_hi).unwrap()).collect();
        let qr: Vec<_> = test_q.iter().map(|r| predict_qr_raw(r, None).0).collect();
        cqr_sum += picp(&cqr, &y).unwrap();
        qr_sum += coverage(&qr, &y);
    }
    let (cqr, qr) = (cqr_sum / 50.0, qr_sum / 50.0);
    let (lo, hi) = band(0.1);
    check(lo <= cqr && cqr <= hi && qr < 0.8, format!("mean CQR PICP {cqr:.4}, raw QR PICP {qr:.4}"))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("marginal coverage band", marginal_band),
        ("per-bin conditional coverage", per_bin_coverage),
        ("adaptivity direction", adaptivity_direction),
        ("interval-search oracle", interval_search_oracle),
        ("quantile oracle", quantile_oracle),
        ("gaussian quantile accuracy", gaussian_accuracy),
        ("end-to-end reference", end_to_end_oracle),
        ("determinism", determinism),
        ("CQR validity", cqr_validity),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("criterion {} {name}: PASS ({detail})", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({detail})", i + 1);
            }
        }
    }
    println!("acceptance: {}/{} passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
