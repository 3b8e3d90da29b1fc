//! End-to-end acceptance checks. Runs as a plain binary so every check
//! reports, even after an earlier one fails.

use std::f64::consts::PI;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use squint_core::array::{
    array_gain_closed_form, bsr_closed_form, bsr_numerical, dirichlet_kernel, normalized_array_gain,
    steering_vector, ArrayGeometry, Direction, FrequencyGrid, SpatialFreq,
};
use squint_core::channel::{frequency_channel, sample_paths, DelayProfile};
use squint_core::hbf::{spectral_efficiency, waterfill, CombinerScope, LinkConfig, PrecoderStage};
use squint_core::{CMat, C64};
use squint_sim::config::{Algorithm, ExperimentConfig};
use squint_sim::gain_map::{gain_cut, Cut};
use squint_sim::sweep::{run_bandwidth_sweep, run_rsi_sweep, run_snr_sweep, summary_of, SweepResult};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn bsr_golden_values() -> Outcome {
    let cases = [
        ((160, 80), 1.0),
        ((16, 16), 0.1),
        ((16, 1), 0.1),
    ];
    let mut worst: f64 = 0.0;
    for ((h, v), expected) in cases {
        let geom = ArrayGeometry::half_wavelength(h, v).unwrap();
        worst = worst.max((bsr_closed_form(&geom, 0.1) - expected).abs());
    }
    check(worst <= 1e-12, format!("max abs error {worst:.1e}"))
}

fn bsr_numerical_convergence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let (n_h, n_v) = loop {
            let h = rng.random_range(1..=200);
            let v = rng.random_range(1..=200);
            if h * v <= 10_000 {
                break (h, v);
            }
        };
        let spacing = rng.random_range(0.2..1.0);
        let geom = ArrayGeometry::uniform(n_h, n_v, spacing).unwrap();
        for b in [0.05, 0.1, 0.2] {
            let grid = FrequencyGrid::new(300e9, 300e9 * b, 128).unwrap();
            let closed = bsr_closed_form(&geom, b);
            worst = worst.max((bsr_numerical(&geom, &grid) - closed).abs() / closed);
        }
    }
    check(worst < 0.01, format!("max relative error {worst:.2e}"))
}

fn ratio_law() -> Outcome {
    let mut worst: f64 = 0.0;
    for n in [16usize, 64, 256, 1024] {
        let root = (n as f64).sqrt() as usize;
        let square = ArrayGeometry::half_wavelength(root, root).unwrap();
        let line = ArrayGeometry::half_wavelength(n, 1).unwrap();
        let ratio = bsr_closed_form(&square, 0.1) / bsr_closed_form(&line, 0.1);
        worst = worst.max((ratio - 1.0 / root as f64).abs());
    }
    check(worst <= 1e-12, format!("max abs error {worst:.1e}"))
}

fn gain_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let fc = 300e9;
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let geom = ArrayGeometry::uniform(
            rng.random_range(1..=32),
            rng.random_range(1..=32),
            rng.random_range(0.1..1.0),
        )
        .unwrap();
        let dir = Direction::new(rng.random_range(-PI..PI), rng.random_range(-PI / 2.0..PI / 2.0));
        let xi = rng.random_range(-0.05..=0.05);
        let w = steering_vector(&geom, dir, fc, fc);
        let direct = normalized_array_gain(&w, dir, fc * (1.0 + xi), &geom, fc).unwrap();
        worst = worst.max((direct - array_gain_closed_form(&geom, dir, xi)).abs());
    }
    check(worst <= 1e-9, format!("max abs error {worst:.1e} over 1000 tuples"))
}

/// Half-power interval and peak of the main lobe of a cut, searched on a
/// fine grid around `centre`.
fn half_power_lobe(geom: &ArrayGeometry, matched: SpatialFreq, ratio: f64, cut: Cut, centre: f64) -> (f64, f64, f64) {
    let step = 1e-6;
    let coords: Vec<f64> = (0..=100_000).map(|i| centre - 0.05 + i as f64 * step).collect();
    let g = gain_cut(geom, matched, ratio, cut, &coords);
    let peak = (0..g.len()).max_by(|&a, &b| g[a].total_cmp(&g[b])).unwrap();
    let level = g[peak] / 2f64.sqrt();
    let mut lo = peak;
    while lo > 0 && g[lo - 1] >= level {
        lo -= 1;
    }
    let mut hi = peak;
    while hi + 1 < g.len() && g[hi + 1] >= level {
        hi += 1;
    }
    (coords[lo], coords[peak], coords[hi])
}

fn band_edge_separation() -> Outcome {
    let geom = ArrayGeometry::half_wavelength(160, 80).unwrap();
    let grid = FrequencyGrid::new(300e9, 30e9, 128).unwrap();
    let matched = SpatialFreq::new(0.5, 0.5);
    let r_max = grid.max_hz() / grid.carrier_hz();
    let r_min = grid.min_hz() / grid.carrier_hz();
    let leak = dirichlet_kernel(geom.n_h(), geom.spacing_h() * (r_max * matched.h - matched.h)).abs();
    let mut ok = leak < 0.05;
    let mut detail = format!("horizontal gain at f_max {leak:.4}");
    for (cut, name) in [(Cut::Horizontal, "h"), (Cut::Vertical, "v")] {
        let (c_lo, _, c_hi) = half_power_lobe(&geom, matched, 1.0, cut, 0.5);
        for (r, edge) in [(r_min, "f_min"), (r_max, "f_max")] {
            let (lo, peak, hi) = half_power_lobe(&geom, matched, r, cut, 0.5 / r);
            let separated = hi < c_lo || lo > c_hi;
            let outside = peak < c_lo || peak > c_hi;
            ok &= separated && outside;
            detail.push_str(&format!("; {name} {edge} peak {:+.4}", peak - 0.5));
        }
        detail.push_str(&format!(" (f_c half-power {:+.4}..{:+.4})", c_lo - 0.5, c_hi - 0.5));
    }
    check(ok, detail)
}

fn series(rows: &[SweepResult], name: &str, alg: Algorithm) -> Vec<(f64, f64, f64)> {
    let mut values: Vec<f64> = Vec::new();
    for r in rows.iter().filter(|r| r.sweep_name == name) {
        if !values.contains(&r.sweep_value) {
            values.push(r.sweep_value);
        }
    }
    values
        .into_iter()
        .map(|v| {
            let xs: Vec<f64> = rows
                .iter()
                .filter(|r| r.sweep_name == name && r.sweep_value == v && r.algorithm == alg)
                .map(|r| r.normalized_se)
                .collect();
            let s = summary_of(&xs);
            (v, s.mean, s.std_error)
        })
        .collect()
}

fn shape_trend() -> Outcome {
    let cfg = ExperimentConfig::default();
    let rows = run_rsi_sweep(&cfg).map_err(|e| e.to_string())?;
    let prop = series(&rows, "rsi", Algorithm::Proposed);
    let mut ok = true;
    for w in prop.windows(2) {
        let tol = (w[0].2.powi(2) + w[1].2.powi(2)).sqrt();
        ok &= w[1].1 >= w[0].1 - tol;
    }
    let last = prop.last().unwrap();
    ok &= last.0 == 1.0 && last.1 >= 0.90;
    let mut bsr: Vec<f64> = rows.iter().map(|r| r.bsr_closed_form).collect();
    bsr.dedup();
    ok &= bsr.iter().zip([1.6, 0.8, 0.4, 0.2, 0.1]).all(|(a, b)| (a - b).abs() < 1e-12);
    let means: Vec<String> = prop.iter().map(|p| format!("{:.3}", p.1)).collect();
    check(ok, format!("proposed means by RSI [{}]", means.join(", ")))
}

fn dominance(snr_rows: &[SweepResult], bw_rows: &[SweepResult]) -> Outcome {
    let mut points = 0;
    let mut below = Vec::new();
    let mut overlaps = Vec::new();
    let named = [("snr", snr_rows), ("bandwidth_d0.5", bw_rows), ("bandwidth_d0.25", bw_rows)];
    for (name, rows) in named {
        let prop = series(rows, name, Algorithm::Proposed);
        let dcf = series(rows, name, Algorithm::Dcf);
        for (p, d) in prop.iter().zip(&dcf) {
            points += 1;
            if p.1 < d.1 {
                below.push(format!("{name}@{}", p.0));
            }
            if p.1 - p.2 < d.1 + d.2 {
                overlaps.push(format!("{name}@{}", p.0));
            }
        }
    }
    check(
        below.is_empty() && overlaps.len() <= 1,
        format!(
            "{points} points, proposed below baseline at {:?}, overlapping at {:?}",
            below, overlaps
        ),
    )
}

fn spacing_effect(bw_rows: &[SweepResult]) -> Outcome {
    let bsr_of = |name: &str| -> Vec<(f64, f64)> {
        let mut v: Vec<(f64, f64)> = bw_rows
            .iter()
            .filter(|r| r.sweep_name == name)
            .map(|r| (r.sweep_value, r.bsr_closed_form))
            .collect();
        v.dedup();
        v
    };
    let half = bsr_of("bandwidth_d0.25");
    let full = bsr_of("bandwidth_d0.5");
    let exact = half.len() == full.len() && half.iter().zip(&full).all(|(h, f)| h.0 == f.0 && h.1 * 2.0 == f.1);
    let at = |name: &str| {
        series(bw_rows, name, Algorithm::Proposed)
            .into_iter()
            .find(|p| p.0 == 45e9)
            .map(|p| p.1)
            .unwrap()
    };
    let (coarse, fine) = (at("bandwidth_d0.5"), at("bandwidth_d0.25"));
    let gain = fine / coarse - 1.0;
    check(
        exact && gain >= 0.05,
        format!(
            "squint ratio halved exactly: {exact}; at 45 GHz {coarse:.4} -> {fine:.4} ({:+.2}%, need >= +5%)",
            100.0 * gain
        ),
    )
}

fn grid_optimum(gains: &[f64], budget: f64, noise_var: f64, steps: usize) -> f64 {
    let table = |g: f64| -> Vec<f64> {
        (0..=steps)
            .map(|j| (1.0 + g * budget * j as f64 / steps as f64 / noise_var).log2())
            .collect()
    };
    let mut acc = table(gains[0]);
    for &g in &gains[1..] {
        let t = table(g);
        acc = (0..=steps)
            .map(|s| (0..=s).map(|i| acc[i] + t[s - i]).fold(f64::NEG_INFINITY, f64::max))
            .collect();
    }
    acc[steps]
}

fn waterfilling_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let gains: Vec<f64> = (0..4).map(|_| rng.random_range(0.01..10.0)).collect();
        let noise = rng.random_range(0.05..5.0);
        let budget = rng.random_range(0.1..10.0);
        let p = waterfill(&gains, budget, noise).map_err(|e| e.to_string())?;
        let rate: f64 = gains.iter().zip(&p).map(|(g, p)| (1.0 + g * p / noise).log2()).sum();
        worst = worst.max((rate - grid_optimum(&gains, budget, noise, 10_000)).abs());
    }
    check(worst < 1e-3, format!("max gap {worst:.2e} bits over 100 instances"))
}

fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| {
        C64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    })
}

fn structural_invariants() -> Outcome {
    let mut violations = [0usize; 5];
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let cases = 1000;
    for _ in 0..cases {
        let rx = ArrayGeometry::half_wavelength(rng.random_range(2..=4), rng.random_range(2..=4)).unwrap();
        let tx = ArrayGeometry::half_wavelength(2, 2).unwrap();
        let grid = FrequencyGrid::new(300e9, rng.random_range(1e9..60e9), 8).unwrap();
        let profile = DelayProfile::for_grid(&grid, 1.0).unwrap();
        let l_p = rng.random_range(1..=4);
        let paths = sample_paths(&mut rng, l_p, profile.taps, profile.sampling_period_s).unwrap();
        let channel = frequency_channel(&paths, &rx, &tx, &grid, &profile);
        let n_s = rng.random_range(1..=3);
        let n_rf = rng.random_range(n_s..=4);
        let link = LinkConfig::from_snr_db(n_s, n_rf, rng.random_range(-10.0..20.0)).unwrap();
        let stage = PrecoderStage::new(&channel, &link).map_err(|e| e.to_string())?;
        let opt = stage.optimal().average_se;
        for f in stage.precoders() {
            if (f.norm_squared() - link.power()).abs() > 1e-9 {
                violations[0] += 1;
            }
        }
        for scope in [CombinerScope::AllSubcarriers, CombinerScope::CentralSubcarrier] {
            let out = stage.finish(&channel, &link, scope).map_err(|e| e.to_string())?;
            let bf = &out.beamformers;
            let target = 1.0 / (rx.len() as f64).sqrt();
            if bf.analog_combiner.iter().any(|z| (z.norm() - target).abs() > 1e-12) {
                violations[1] += 1;
            }
            if out.average_se > opt + 1e-9 || out.average_se < 0.0 {
                violations[2] += 1;
            }
            let k = rng.random_range(0..grid.n_subcarriers());
            let h = channel.subcarrier(k + 1);
            let f = &bf.precoders[k];
            let w_bb = &bf.digital_combiners[k];
            for _ in 0..5 {
                let scale = 10f64.powf(rng.random_range(-4.0..0.0)) * w_bb.norm().max(1e-3);
                let e = gaussian(&mut rng, w_bb.nrows(), w_bb.ncols()) * C64::new(scale, 0.0);
                let se = spectral_efficiency(h, f, &(&bf.analog_combiner * (w_bb + e)), link.noise_var())
                    .map_err(|e| e.to_string())?;
                if se > out.per_subcarrier_se[k] + 1e-9 {
                    violations[3] += 1;
                }
            }
            let active: Vec<usize> = (0..f.ncols()).filter(|&j| f.column(j).norm() > 0.0).collect();
            let w = bf.combiner(k).select_columns(&active);
            let q = gaussian(&mut rng, active.len(), active.len());
            let moved = spectral_efficiency(h, &f.select_columns(&active), &(w * q), link.noise_var())
                .map_err(|e| e.to_string())?;
            if (moved - out.per_subcarrier_se[k]).abs() > 1e-9 {
                violations[4] += 1;
            }
        }
    }
    check(
        violations.iter().all(|&v| v == 0),
        format!(
            "{cases} cases; violations power {} modulus {} bound {} mmse {} invariance {}",
            violations[0], violations[1], violations[2], violations[3], violations[4]
        ),
    )
}

fn main() {
    let mut failures = 0;
    let mut report = |n: usize, name: &str, run: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        if outcome.is_err() {
            failures += 1;
        }
        println!("criterion {n:>2} {tag} {name}: {detail} [{secs:.1}s]");
    };

    report(1, "squint ratio golden values", &mut bsr_golden_values);
    report(2, "numerical squint ratio convergence", &mut bsr_numerical_convergence);
    report(3, "square to linear ratio law", &mut ratio_law);
    report(4, "closed-form gain equivalence", &mut gain_equivalence);
    report(5, "band-edge mainlobe separation", &mut band_edge_separation);
    report(6, "array shape trend", &mut shape_trend);

    let cfg = ExperimentConfig::default();
    let snr_rows = run_snr_sweep(&cfg);
    let bw_rows = run_bandwidth_sweep(&cfg);
    match (&snr_rows, &bw_rows) {
        (Ok(snr), Ok(bw)) => {
            report(7, "hybrid design dominance", &mut || dominance(snr, bw));
            report(8, "antenna spacing effect", &mut || spacing_effect(bw));
        }
        _ => {
            let err = snr_rows.err().or(bw_rows.err()).unwrap().to_string();
            report(7, "hybrid design dominance", &mut || Err(err.clone()));
            report(8, "antenna spacing effect", &mut || Err(err.clone()));
        }
    }

    report(9, "water-filling oracle", &mut waterfilling_oracle);
    report(10, "structural invariants", &mut structural_invariants);

    if failures > 0 {
        println!("{failures} of 10 criteria failed");
        std::process::exit(1);
    }
    println!("all 10 criteria passed");
}
