//! Acceptance suite: one test per criterion, each asserting its stated
//! tolerances and runtime budget and printing a PASS line (visible with
//! `cargo test --test acceptance -- --nocapture`).

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use carpet_recur::boxcount::{estimate_dimension, PointCloud};
use carpet_recur::dimtheory::{
    entropies, lower_objective, maximize_objective, recurrent_set_dimension, DimCase, MaximizeOpts,
    ProbabilityVector,
};
use carpet_recur::rate::Tau;
use carpet_recur::recur::{
    fixed_point_rect, is_recurrent_at, verify_covering, CoverBudget, Recurrence,
};
use carpet_recur::sampler::{
    cylinder_mass, derive_seed, make_schedule, make_schedule_from, sample_cloud,
    sample_point_seeded, SampleConfig,
};
use carpet_recur::{Carpet, Coord, CylinderWord, RateFunction, SymbolicPoint};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_carpet-recur")
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("carpet-recur-acc-{}", std::process::id()));
    std::fs::create_dir_all(&dir).expect("tmp dir");
    dir.join(name)
}

fn cantor_product() -> Carpet {
    Carpet::new(3, 4, &[(0, 0), (0, 1), (0, 3), (2, 0), (2, 1), (2, 3)]).unwrap()
}

fn uniform23() -> Carpet {
    Carpet::new(2, 3, &[(0, 0), (0, 2), (1, 0), (1, 2)]).unwrap()
}

fn linked(c: &Carpet, t1: f64) -> (Tau, Tau) {
    let theta = f64::from(c.m1()).ln() / f64::from(c.m2()).ln();
    (Tau::Finite(t1), Tau::Finite(t1 * theta))
}

fn pass(criterion: &str, t0: Instant, budget: Duration) {
    let elapsed = t0.elapsed();
    println!("[acceptance] {criterion}: PASS in {elapsed:.2?} (budget {budget:.0?})");
    assert!(
        elapsed < budget,
        "{criterion} exceeded its runtime budget: {elapsed:.2?} >= {budget:.0?}"
    );
}

#[test]
fn criterion_01_reference_fixtures() {
    let t0 = Instant::now();

    let out = Command::new(bin())
        .args(["dim", fixture("cantor.carpet").to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let fields: Vec<&str> = text.split_whitespace().collect();
    assert_eq!(fields[0], "hausdorff");
    assert_eq!(fields[2], "box");
    let hausdorff: f64 = fields[1].parse().unwrap();
    let boxdim: f64 = fields[3].parse().unwrap();
    let target = 1.423411004f64;
    assert!((hausdorff - target).abs() < 1e-9, "dim_H {hausdorff}");
    assert!((boxdim - target).abs() < 1e-9, "dim_B {boxdim}");
    assert_eq!(fields[5], "true");

    // Full torus at tau1 = 0: dimension 2 exactly.
    let torus = Carpet::full(2, 2).unwrap();
    let rep = recurrent_set_dimension(&torus, Tau::Finite(0.0), Tau::Finite(0.0)).unwrap();
    assert_eq!(rep.value, 2.0);

    pass("criterion 1 (reference fixtures)", t0, Duration::from_secs(1));
}

#[test]
fn criterion_02_theorem_formula_suite() {
    let t0 = Instant::now();
    let c = cantor_product();

    // Nonincreasing over a 200-point grid, dim_H at tau1 = 0.
    let mut last = f64::INFINITY;
    for k in 0..200 {
        let t1 = 10.0 * k as f64 / 199.0;
        let (a, b) = linked(&c, t1);
        let v = recurrent_set_dimension(&c, a, b).unwrap().value;
        assert!(v <= last + 1e-12, "not monotone at tau1 = {t1}");
        last = v;
        if k == 0 {
            assert!((v - c.hausdorff_dimension()).abs() < 1e-12);
        }
    }
    // Tends to zero; the infinite edge is exactly zero.
    assert!(last < 0.2);
    let rep = recurrent_set_dimension(&c, Tau::Infinite, Tau::Infinite).unwrap();
    assert_eq!(rep.value, 0.0);
    assert_eq!(rep.case, DimCase::EdgeInfiniteTau);

    // Case formulas agree at the boundary 1 + tau1 = log_m1 m2 to 1e-9.
    let t_star = 4f64.ln() / 3f64.ln() - 1.0;
    let (a, b) = linked(&c, t_star);
    let at_boundary = recurrent_set_dimension(&c, a, b).unwrap();
    assert_eq!(at_boundary.case, DimCase::Case2);
    let (a_eps, _) = linked(&c, t_star - 1e-12);
    let below = carpet_recur::dimtheory::recurrent_set_dimension_unlinked(
        &c,
        a_eps.finite().unwrap(),
        b.finite().unwrap(),
    )
    .unwrap();
    assert_eq!(below.case, DimCase::Case1);
    assert!((at_boundary.value - below.value).abs() < 1e-9);
    // Shared first expression is active there; both case-specific second
    // expressions coincide at log_m2 M + log_m2 N.
    assert!((at_boundary.value - 1.1787899809895965).abs() < 1e-9);
    let second_common = 2f64.ln() / 4f64.ln() + 3f64.ln() / 4f64.ln();
    assert!((at_boundary.expressions[1].value - second_common).abs() < 1e-9);
    assert!((below.expressions[1].value - second_common).abs() < 1e-9);

    pass(
        "criterion 2 (theorem formula suite)",
        t0,
        Duration::from_secs(1),
    );
}

fn random_uniform_fibre_carpet<R: Rng>(rng: &mut R) -> Carpet {
    loop {
        let m1 = rng.gen_range(2..=6u32);
        let m2 = rng.gen_range(m1..=6u32);
        let m = rng.gen_range(1..=m1);
        let max_n = (12 / m).min(m2);
        if max_n == 0 {
            continue;
        }
        let n = rng.gen_range(1..=max_n);
        // M distinct columns.
        let mut cols: Vec<u32> = (0..m1).collect();
        for i in (1..cols.len()).rev() {
            cols.swap(i, rng.gen_range(0..=i));
        }
        cols.truncate(m as usize);
        let mut pairs = Vec::new();
        for &a1 in &cols {
            let mut rows: Vec<u32> = (0..m2).collect();
            for i in (1..rows.len()).rev() {
                rows.swap(i, rng.gen_range(0..=i));
            }
            rows.truncate(n as usize);
            for &a2 in &rows {
                pairs.push((a1, a2));
            }
        }
        return Carpet::new(m1, m2, &pairs).unwrap();
    }
}

#[test]
fn criterion_03_lower_bound_tightness() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let opts = MaximizeOpts::default();
    for trial in 0..20 {
        let c = random_uniform_fibre_carpet(&mut rng);
        for t in [0.0, 0.3, 1.0, 3.0] {
            let (a, b) = linked(&c, t);
            let thm = recurrent_set_dimension(&c, a, b).unwrap().value;
            let (_, v) = maximize_objective(&c, a, b, &opts).unwrap();
            assert!(
                (v - thm).abs() <= 1e-4,
                "trial {trial} tau1 {t}: maximized {v} vs theorem {thm} for {c:?}"
            );
            let uniform = ProbabilityVector::uniform(&c);
            let at_uniform = lower_objective(&c, &uniform, a, b).unwrap();
            assert!(
                (at_uniform - thm).abs() <= 1e-12,
                "trial {trial} tau1 {t}: uniform {at_uniform} vs theorem {thm}"
            );
        }
    }
    pass(
        "criterion 3 (lower-bound tightness)",
        t0,
        Duration::from_secs(60),
    );
}

#[test]
fn criterion_04_entropy_identities() {
    let t0 = Instant::now();
    let carpets = [
        cantor_product(),
        Carpet::full(2, 2).unwrap(),
        uniform23(),
        Carpet::new(2, 3, &[(0, 0), (0, 2), (1, 1)]).unwrap(),
        Carpet::full(5, 6).unwrap(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for c in &carpets {
        for _ in 0..1000 {
            let p = ProbabilityVector::random(c, &mut rng);
            let (h, h1, h2) = entropies(c, &p);
            assert!((h - (h1 + h2)).abs() <= 1e-12);
        }
    }
    pass(
        "criterion 4 (entropy identities)",
        t0,
        Duration::from_secs(30),
    );
}

#[test]
fn criterion_05_rate_linkage() {
    let t0 = Instant::now();
    for (m1, m2) in [(2u32, 3u32), (3, 4), (2, 8), (5, 5), (4, 6)] {
        for t in [0.0, 0.1, 0.3, 0.5, 1.0, 2.7] {
            let r = RateFunction::power_exp(m1, m2, t, 0.0, 1.0).unwrap();
            let t1 = r.tau(Coord::X).finite().unwrap();
            let t2 = r.tau(Coord::Y).finite().unwrap();
            let expected = t1 * f64::from(m1).ln() / f64::from(m2).ln();
            assert!((t2 - expected).abs() <= 1e-12);
        }
    }

    // Exact-integer boundaries l in {1, 2, 3} resolve without rounding
    // up: t = 0.5 at n = 2, 4, 6 and t = 1 at n = 1, 2, 3.
    let half = RateFunction::power_exp(3, 4, 0.5, 0.0, 1.0).unwrap();
    for (n, want) in [(2u64, 1u64), (4, 2), (6, 3)] {
        assert_eq!(half.hat_ell(Coord::X, n).unwrap(), want);
    }
    let one = RateFunction::power_exp(2, 3, 1.0, 0.0, 1.0).unwrap();
    for (n, want) in [(1u64, 1u64), (2, 2), (3, 3)] {
        assert_eq!(one.hat_ell(Coord::X, n).unwrap(), want);
    }
    // Dyadic table entries 2^{-l}, l in {1, 2, 3}, base 2.
    let mut vals = std::collections::BTreeMap::new();
    for n in 1u64..=3 {
        vals.insert(
            n,
            num_rational::BigRational::new(1.into(), (1i64 << n).into()),
        );
    }
    let tab = RateFunction::table(2, 4, vals).unwrap();
    for n in 1u64..=3 {
        assert_eq!(tab.hat_ell(Coord::X, n).unwrap(), n);
    }

    pass("criterion 5 (rate linkage)", t0, Duration::from_secs(10));
}

#[test]
fn criterion_06_covering_verification() {
    let t0 = Instant::now();
    let budget = CoverBudget::default();
    for carpet in [uniform23(), cantor_product()] {
        for t in [0.5, 1.0] {
            let r = RateFunction::power_exp(carpet.m1(), carpet.m2(), t, 0.0, 1.0).unwrap();
            for coord in [Coord::X, Coord::Y] {
                let reports = verify_covering(&carpet, &r, 1..=4, coord, &budget).unwrap();
                for rep in &reports {
                    assert!(
                        rep.satisfied(),
                        "({}, {}) t = {t}, i = {}, n = {}: count {} > bound {}",
                        carpet.m1(),
                        carpet.m2(),
                        rep.coord.index(),
                        rep.n,
                        rep.exact_count,
                        rep.bound
                    );
                }
            }
        }
    }
    pass(
        "criterion 6 (covering verification)",
        t0,
        Duration::from_secs(120),
    );
}

#[test]
fn criterion_07_diameter_estimate() {
    let t0 = Instant::now();
    let c = uniform23();
    let r = RateFunction::power_exp(2, 3, 0.5, 0.0, 1.0).unwrap();
    let alphabet = c.alphabet().to_vec();
    let depth = 10usize;

    for n in [2usize, 3] {
        // Every region sits inside the covering rectangle of size
        // 4 psi(n) m_i^{-n}.
        let mut idx = vec![0usize; n];
        loop {
            let pairs: Vec<(u32, u32)> = idx.iter().map(|&i| alphabet[i]).collect();
            let w = CylinderWord::from_pairs(2, 3, &pairs).unwrap();
            let fp = fixed_point_rect(&w, &r).unwrap();
            assert!(fp.contained_in_covering_rect());
            let mut pos = idx.len();
            let mut done = false;
            loop {
                if pos == 0 {
                    done = true;
                    break;
                }
                pos -= 1;
                idx[pos] += 1;
                if idx[pos] < alphabet.len() {
                    break;
                }
                idx[pos] = 0;
            }
            if done {
                break;
            }
        }

        // Grid enumeration at depth 10: every certainly-recurrent grid
        // point lies in the region of its length-n prefix. Chunked by
        // the first 5 positions for parallelism.
        let chunk_positions = 5usize;
        let chunks = alphabet.len().pow(chunk_positions as u32);
        let tails = alphabet.len().pow((depth - chunk_positions) as u32);
        let (yes_count, violations) = (0..chunks)
            .into_par_iter()
            .map(|chunk| {
                let mut pairs = vec![(0u32, 0u32); depth];
                let mut tmp = chunk;
                for p in pairs.iter_mut().take(chunk_positions) {
                    *p = alphabet[tmp % alphabet.len()];
                    tmp /= alphabet.len();
                }
                let mut yes = 0u64;
                let mut bad = 0u64;
                for tail in 0..tails {
                    let mut tmp = tail;
                    for p in pairs.iter_mut().skip(chunk_positions) {
                        *p = alphabet[tmp % alphabet.len()];
                        tmp /= alphabet.len();
                    }
                    let x = SymbolicPoint::from_pairs(2, 3, &pairs).unwrap();
                    if is_recurrent_at(&x, n as u64, &r).unwrap() == Recurrence::Yes {
                        yes += 1;
                        let w = CylinderWord::from_pairs(2, 3, &pairs[..n]).unwrap();
                        let fp = fixed_point_rect(&w, &r).unwrap();
                        if !fp.contains(&x.coding_point()).unwrap() {
                            bad += 1;
                        }
                    }
                }
                (yes, bad)
            })
            .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
        assert!(yes_count > 0, "no recurrent grid points at n = {n}");
        assert_eq!(violations, 0, "points escaped their region at n = {n}");
    }

    pass(
        "criterion 7 (diameter estimate)",
        t0,
        Duration::from_secs(60),
    );
}

#[test]
fn criterion_08_sampler_soundness() {
    let t0 = Instant::now();

    // 10^3 sampled points on the Cantor product, t = 0.5, depth 80:
    // recurrent (or boundary-unknown) at every scheduled time.
    let carpet = cantor_product();
    let rate = RateFunction::power_exp(3, 4, 0.5, 0.0, 1.0).unwrap();
    let schedule = make_schedule(&rate, 80, 2).unwrap();
    assert_eq!(schedule.entries(), &[6, 48]);
    let p = ProbabilityVector::uniform(&carpet);
    let cfg = SampleConfig::new(carpet, p, rate, schedule, 80, 31415).unwrap();
    let mut unknowns = 0u64;
    for i in 0..1000u64 {
        let x = sample_point_seeded(&cfg, derive_seed(cfg.seed(), i));
        for &n in cfg.certified_times() {
            match is_recurrent_at(&x, n, cfg.rate()).unwrap() {
                Recurrence::Yes => {}
                Recurrence::Unknown => unknowns += 1,
                Recurrence::No => panic!("sampled point {i} fails recurrence at n = {n}"),
            }
        }
    }
    println!("[acceptance]   sampler self-check: {unknowns} boundary-unknowns out of 2000 checks");

    // Cylinder masses at length n_1 + hl1(n_1) sum to exactly 1 on the
    // full (2,2) torus (dyadic masses, no rounding).
    let torus = Carpet::full(2, 2).unwrap();
    let rate = RateFunction::power_exp(2, 2, 0.5, 0.0, 1.0).unwrap();
    let schedule = make_schedule(&rate, 60, 2).unwrap();
    let p = ProbabilityVector::uniform(&torus);
    let cfg = SampleConfig::new(torus.clone(), p, rate, schedule, 60, 0).unwrap();
    let len = 9usize;
    let alphabet = torus.alphabet().to_vec();
    let mut idx = vec![0usize; len];
    let mut sum = 0.0f64;
    'outer: loop {
        let pairs: Vec<(u32, u32)> = idx.iter().map(|&i| alphabet[i]).collect();
        let w = CylinderWord::from_pairs(2, 2, &pairs).unwrap();
        sum += cylinder_mass(&cfg, &w).unwrap();
        let mut pos = idx.len();
        loop {
            if pos == 0 {
                break 'outer;
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < alphabet.len() {
                break;
            }
            idx[pos] = 0;
        }
    }
    assert_eq!(sum, 1.0, "masses must sum to exactly 1");

    pass(
        "criterion 8 (sampler soundness)",
        t0,
        Duration::from_secs(60),
    );
}

fn uniform_cloud(carpet: &Carpet, depth: u64, count: usize, seed: u64) -> PointCloud {
    let rate = RateFunction::power_exp(carpet.m1(), carpet.m2(), 0.0, 0.0, 1.0).unwrap();
    let schedule = make_schedule(&rate, depth, 2).unwrap();
    let p = ProbabilityVector::uniform(carpet);
    let cfg = SampleConfig::new(carpet.clone(), p, rate, schedule, depth, seed).unwrap();
    sample_cloud(&cfg, count)
}

#[test]
fn criterion_09_empirical_dimension() {
    let t0 = Instant::now();

    // Uniform-measure cloud on the Cantor product: slope within 0.05 of
    // dim_H = 1.4234 over levels 3..7 (saturated top levels are dropped
    // by the estimator and flagged).
    let cantor = cantor_product();
    let cloud = uniform_cloud(&cantor, 12, 100_000, 71);
    let est = estimate_dimension(&cloud, 3..=7).unwrap();
    println!(
        "[acceptance]   cantor slope {:.6} (r2 {:.6}, saturation warning {})",
        est.slope, est.r_squared, est.saturation_warning
    );
    assert!(
        (est.slope - 1.4234).abs() <= 0.05,
        "cantor slope {} not within 0.05 of 1.4234",
        est.slope
    );

    // Full square: slope 2.0 within 0.01.
    let torus = Carpet::full(2, 2).unwrap();
    let cloud = uniform_cloud(&torus, 12, 100_000, 72);
    let est = estimate_dimension(&cloud, 3..=7).unwrap();
    println!("[acceptance]   full-square slope {:.6}", est.slope);
    assert!((est.slope - 2.0).abs() <= 0.01);

    // Qualitative check: sampler clouds at t = 0.5 estimate strictly
    // below t = 0 clouds (one-sided, 3 sigma over paired replicates).
    // Schedule starts at n_1 = 2 so the repetition constraint bites
    // inside the level window.
    let make_slope = |t: f64, seed: u64| -> f64 {
        let rate = RateFunction::power_exp(3, 4, t, 0.0, 1.0).unwrap();
        let schedule = make_schedule_from(&rate, 30, 2, 2).unwrap();
        let p = ProbabilityVector::uniform(&cantor);
        let cfg = SampleConfig::new(cantor.clone(), p, rate, schedule, 30, seed).unwrap();
        let cloud = sample_cloud(&cfg, 200_000);
        estimate_dimension(&cloud, 2..=6).unwrap().slope
    };
    let replicates = 5;
    let diffs: Vec<f64> = (0..replicates)
        .map(|r| {
            let s0 = make_slope(0.0, 1000 + r);
            let s05 = make_slope(0.5, 2000 + r);
            s0 - s05
        })
        .collect();
    let mean = diffs.iter().sum::<f64>() / replicates as f64;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (replicates - 1) as f64;
    let se = (var / replicates as f64).sqrt();
    println!("[acceptance]   slope drop t=0 vs t=0.5: mean {mean:.4}, se {se:.6}");
    assert!(diffs.iter().all(|&d| d > 0.0), "diffs {diffs:?}");
    if se > 0.0 {
        assert!(mean / se >= 3.0, "one-sided 3-sigma failed: {mean} / {se}");
    }

    pass(
        "criterion 9 (empirical dimension)",
        t0,
        Duration::from_secs(300),
    );
}

#[test]
fn criterion_10_determinism() {
    let t0 = Instant::now();

    let sample_args = |out: &Path| {
        vec![
            "sample".to_string(),
            fixture("cantor.carpet").to_str().unwrap().to_string(),
            "--rate".into(),
            "powexp t=0.5".into(),
            "--depth".into(),
            "60".into(),
            "--count".into(),
            "20000".into(),
            "--seed".into(),
            "12345".into(),
            "--out".into(),
            out.to_str().unwrap().to_string(),
        ]
    };
    let run_with = |threads: &str, args: Vec<String>| {
        let status = Command::new(bin())
            .arg("--threads")
            .arg(threads)
            .args(args)
            .status()
            .unwrap();
        assert!(status.success());
    };
    let a = tmp("c10-a.csv");
    let b = tmp("c10-b.csv");
    run_with("1", sample_args(&a));
    run_with("4", sample_args(&b));
    let bytes_a = std::fs::read(&a).unwrap();
    assert_eq!(bytes_a, std::fs::read(&b).unwrap(), "sample outputs differ");

    // Estimate and covering reports are byte-identical too.
    let e1 = tmp("c10-e1.csv");
    let e2 = tmp("c10-e2.csv");
    for (threads, out) in [("1", &e1), ("3", &e2)] {
        let status = Command::new(bin())
            .args([
                "--threads",
                threads,
                "estimate",
                a.to_str().unwrap(),
                "--levels",
                "2..5",
                "--out",
                out.to_str().unwrap(),
            ])
            .status()
            .unwrap();
        assert!(status.success());
    }
    assert_eq!(std::fs::read(&e1).unwrap(), std::fs::read(&e2).unwrap());

    let v1 = tmp("c10-v1.csv");
    let v2 = tmp("c10-v2.csv");
    for (threads, out) in [("2", &v1), ("1", &v2)] {
        let status = Command::new(bin())
            .args([
                "--threads",
                threads,
                "verify-cover",
                fixture("cantor.carpet").to_str().unwrap(),
                "--rate",
                "powexp t=0.5",
                "--n-range",
                "1..3",
                "--coord",
                "2",
                "--out",
                out.to_str().unwrap(),
            ])
            .status()
            .unwrap();
        assert!(status.success());
    }
    assert_eq!(std::fs::read(&v1).unwrap(), std::fs::read(&v2).unwrap());

    pass("criterion 10 (determinism)", t0, Duration::from_secs(60));
}
