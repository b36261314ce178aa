//! Acceptance suite: one line per criterion, `PASS` or `FAIL`, with the
//! measured values. Tolerances are fixed here and never adjusted to make a
//! run pass. Exit status is nonzero when any criterion fails.
//!
//! Run a subset with `cargo test --test acceptance -- 3 7`.

use dlab_core::abscissa::{self, CoefficientEnsemble};
use dlab_core::bohr;
use dlab_core::extremal::{self, GapParams, MassSchedule};
use dlab_core::norms::{self, HpSampler};
use dlab_core::prime_index::PrimeTable;
use dlab_core::series::{abel_residual, AbelIdentity};
use dlab_core::{rng, Coefficient, CoefficientSpaceSpec, DirichletTruncation, NormTag, Samplers, C64};
use rand::Rng;
use std::error::Error;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

type Check = Result<(bool, String), Box<dyn Error>>;

const SEED: u64 = 20_240_601;

fn main() {
    let criteria: [(u32, &str, fn() -> Check); 13] = [
        (1, "zeta series, l1 growth", c01_zeta),
        (2, "alternating series, c growth and l1/c strip", c02_alternating),
        (3, "summation-by-parts identities", c03_abel),
        (4, "H_p abscissas agree for p = 1, 2, 4", c04_hp_equality),
        (5, "radial contraction on the circle", c05_weissler),
        (6, "one-variable multiplier bound", c06_tr_bound),
        (7, "weak vs plain H_2 growth", c07_weak_h2_gap),
        (8, "plain vs weak c and D_inf abscissas", c08_weak_equals_plain),
        (9, "extremal construction", c09_extremal),
        (10, "strip exponent l1 vs D_inf and H_2", c10_strip_exponent),
        (11, "admissible norms", c11_admissibility),
        (12, "Bohr transform", c12_bohr),
        (13, "CLI determinism", c13_determinism),
    ];
    let filters: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = Vec::new();
    for (id, name, check) in criteria {
        if !filters.is_empty() && !filters.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let (pass, detail) = check().unwrap_or_else(|e| (false, format!("error: {e}")));
        let secs = start.elapsed().as_secs_f64();
        println!(
            "criterion {id:>2} {} {name}: {detail} [{secs:.1}s]",
            if pass { "PASS" } else { "FAIL" }
        );
        if !pass {
            failed.push(id);
        }
    }
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}

fn ones(n: u64) -> DirichletTruncation {
    DirichletTruncation::scalar_from_fn(n, |_| C64::new(1.0, 0.0)).unwrap()
}

fn within(x: f64, lo: f64, hi: f64) -> bool {
    (lo..=hi).contains(&x)
}

fn c01_zeta() -> Check {
    let start = Instant::now();
    let d = ones(100_000);
    let est = abscissa::bohr_cahen(&d, NormTag::ELL1, &abscissa::dyadic_schedule(17, d.n_max()), &Samplers::default())?;
    let elapsed = start.elapsed();
    Ok((
        (est.value - 1.0).abs() <= 0.05 && elapsed < Duration::from_secs(5),
        format!("sigma = {:.4} (want 1 +- 0.05), runtime {:.2}s (< 5s)", est.value, elapsed.as_secs_f64()),
    ))
}

fn c02_alternating() -> Check {
    let d = DirichletTruncation::scalar_from_fn(100_000, |n| C64::new(if n % 2 == 0 { 1.0 } else { -1.0 }, 0.0))?;
    let schedule = abscissa::dyadic_schedule(17, d.n_max());
    let samplers = Samplers::default();
    let c = abscissa::bohr_cahen(&d, NormTag::CSUP, &schedule, &samplers)?;
    let strip = abscissa::strip_report(&d, NormTag::ELL1, NormTag::CSUP, &schedule, &samplers)?;
    Ok((
        c.value.abs() <= 0.05 && within(strip.width, 0.9, 1.1),
        format!("sigma_c = {:.4} (want 0 +- 0.05), width = {:.4} (want [0.9, 1.1])", c.value, strip.width),
    ))
}

fn c03_abel() -> Check {
    let mut worst = 0.0f64;
    for i in 0..100u64 {
        let mut r = rng::stream(SEED, i);
        let d = if i % 2 == 0 {
            DirichletTruncation::scalar_from_fn(200, |_| rng::complex_gaussian(&mut r))?
        } else {
            let space = CoefficientSpaceSpec::lq(4, [1.0, 2.0, 3.0][(i / 2 % 3) as usize])?;
            let mut d = DirichletTruncation::new(space, 200)?;
            for n in 1..=200 {
                let v: Vec<C64> = (0..4).map(|_| rng::complex_gaussian(&mut r)).collect();
                d.insert(n, Coefficient::from_dense(&v))?;
            }
            d
        };
        let s = C64::new(r.random_range(-0.5..1.5), r.random_range(-50.0..50.0));
        let m = r.random_range(1..100u64);
        let identities = [
            (AbelIdentity::Shifted { sigma: r.random_range(0.0..1.0), eps: r.random_range(0.05..1.0) }, m),
            (AbelIdentity::Unshifted { exponent: r.random_range(0.05..2.0) }, m),
            (AbelIdentity::Recentered { sigma0: r.random_range(-1.0..1.0) }, 1),
        ];
        for (id, m) in identities {
            worst = worst.max(abel_residual(&d, id, m, 200, s)?.relative());
        }
    }
    Ok((worst < 1e-12, format!("worst relative residual {worst:.2e} over 300 checks (want < 1e-12)")))
}

fn c04_hp_equality() -> Check {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut values = Vec::new();
    for i in 0..10u64 {
        let mut r = rng::stream(SEED + 4, i);
        let d = DirichletTruncation::scalar_from_fn(1 << 12, |n| C64::new(rng::sign(&mut r) / (n as f64).sqrt(), 0.0))?;
        let schedule = abscissa::dyadic_schedule(12, d.n_max());
        let mut est = Vec::new();
        for p in [1.0, 2.0, 4.0] {
            let samplers = Samplers {
                hp: HpSampler { mc_samples: 10_000, seed: rng::derive(SEED, i) },
                ..Samplers::default()
            };
            est.push(abscissa::bohr_cahen(&d, NormTag::hp(p)?, &schedule, &samplers)?.value);
        }
        for a in 0..3 {
            for b in a + 1..3 {
                worst = worst.max((est[a] - est[b]).abs());
            }
        }
        values.push(est);
    }
    let elapsed = start.elapsed();
    Ok((
        worst <= 0.1 && elapsed < Duration::from_secs(120),
        format!(
            "largest pairwise gap {worst:.4} (want <= 0.1); first series (H1, H2, H4) = ({:.3}, {:.3}, {:.3}); runtime {:.1}s (< 120s)",
            values[0][0], values[0][1], values[0][2], elapsed.as_secs_f64()
        ),
    ))
}

/// `(E|1 + r e^{it}|^4)^{1/4} / sqrt 2` by the trapezoid rule, which is exact
/// for trigonometric polynomials of degree below the node count.
fn witness_ratio(r: f64) -> f64 {
    let m = 64;
    let mean = (0..m)
        .map(|k| {
            let t = std::f64::consts::TAU * k as f64 / m as f64;
            (1.0 + 2.0 * r * t.cos() + r * r).powi(2)
        })
        .sum::<f64>()
        / m as f64;
    mean.powf(0.25) / 2f64.sqrt()
}

fn c05_weissler() -> Check {
    let rep = bohr::weissler_check(2.0, 4.0, 0.5f64.sqrt(), 100, 10_000, SEED)?;
    let violations = usize::from(rep.violation.is_some());
    let witness = bohr::weissler_check(2.0, 4.0, 0.9, 1, 10_000, SEED)?;
    let oracle = witness_ratio(0.9);
    Ok((
        violations == 0 && rep.max_ratio <= 1.0 + 3.0 * rep.max_ratio_se + 1e-12 && witness.max_ratio >= 1.04,
        format!(
            "r = 1/sqrt2: max ratio {:.6} (se {:.1e}), {violations} violations; r = 0.9: 1+z ratio {:.4} (>= 1.04, quadrature {oracle:.4})",
            rep.max_ratio, rep.max_ratio_se, witness.max_ratio
        ),
    ))
}

fn c06_tr_bound() -> Check {
    let mut ok = true;
    let mut parts = Vec::new();
    for (p, q) in [(2.0, 2.0), (1.0, 4.0), (2.0, 4.0), (3.0, 1.5)] {
        let rep = bohr::one_var_tr_norm_bound(0.5, p, q, 100, 10_000, SEED)?;
        let bound = 1.0 / (1.0 - 0.5);
        ok &= rep.within_bound && rep.max_ratio <= bound + 3.0 * rep.max_ratio_se;
        parts.push(format!("(p,q)=({p},{q}): {:.4}", rep.max_ratio));
    }
    Ok((ok, format!("max ratios {} (bound 2 + 3 se)", parts.join(", "))))
}

fn c07_weak_h2_gap() -> Check {
    let n = 1u64 << 14;
    let space = CoefficientSpaceSpec::lq(n as usize, 1.0)?;
    let mut d = DirichletTruncation::new(space, n)?;
    for k in 1..=n {
        d.insert(k, Coefficient::basis(k as usize - 1, C64::new(1.0, 0.0)))?;
    }
    let schedule = abscissa::dyadic_schedule(14, n);
    let samplers = Samplers::default().seeded(SEED);
    let h2 = NormTag::hp(2.0)?;
    let weak = abscissa::weak_abscissa(&d, h2, &samplers, &schedule)?.value;
    let plain = abscissa::bohr_cahen(&d, h2, &schedule, &samplers)?.value;
    Ok((
        (weak - 0.5).abs() <= 0.1 && (plain - 1.0).abs() <= 0.1 && (plain - weak).abs() >= 0.35,
        format!("weak {weak:.4} (0.5 +- 0.1), plain {plain:.4} (1 +- 0.1), difference {:.4} (>= 0.35)", plain - weak),
    ))
}

/// Series `sum u_n n^{-sigma} n^{-s}` in `l_2^8`: entries of `u_n` uniform in
/// `[0, 1]` (`gaussian = false`) or standard complex Gaussian.
fn random_l2_series(i: u64, gaussian: bool) -> Result<DirichletTruncation, Box<dyn Error>> {
    let mut r = rng::stream(SEED + 8, i);
    let sigma = if gaussian { r.random_range(0.0..0.5) } else { r.random_range(0.0..1.5) };
    let mut d = DirichletTruncation::new(CoefficientSpaceSpec::lq(8, 2.0)?, 1 << 10)?;
    for n in 1..=d.n_max() {
        let w = (n as f64).powf(-sigma);
        let v: Vec<C64> = (0..8)
            .map(|_| if gaussian { rng::complex_gaussian(&mut r) * w } else { C64::new(r.random::<f64>() * w, 0.0) })
            .collect();
        d.insert(n, Coefficient::from_dense(&v))?;
    }
    Ok(d)
}

fn plain_weak_gap(d: &DirichletTruncation, tag: NormTag, seed: u64) -> Result<f64, Box<dyn Error>> {
    let schedule = abscissa::dyadic_schedule(10, d.n_max());
    let samplers = Samplers::default().seeded(seed);
    let plain = abscissa::bohr_cahen(d, tag, &schedule, &samplers)?.value;
    let weak = abscissa::weak_abscissa(d, tag, &samplers, &schedule)?.value;
    Ok((plain - weak).abs())
}

/// Judged on the uniform ensemble, whose growth comes from coefficient decay.
/// The Gaussian line is informational: each scalar projection is a random
/// walk whose fitted slope is noisy at this length, and the sup over
/// functionals picks up that noise.
fn c08_weak_equals_plain() -> Check {
    let (mut worst_c, mut worst_d, mut gaussian_c) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..10u64 {
        let d = random_l2_series(i, false)?;
        worst_c = worst_c.max(plain_weak_gap(&d, NormTag::CSUP, rng::derive(SEED, i))?);
        worst_d = worst_d.max(plain_weak_gap(&d, NormTag::DINF, rng::derive(SEED, i))?);
        gaussian_c = gaussian_c.max(plain_weak_gap(&random_l2_series(i, true)?, NormTag::CSUP, rng::derive(SEED, i))?);
    }
    Ok((
        worst_c <= 0.1 && worst_d <= 0.15,
        format!(
            "largest |plain - weak|: c {worst_c:.4} (<= 0.1), D_inf {worst_d:.4} (<= 0.15); Gaussian ensemble c {gaussian_c:.4} (not judged)"
        ),
    ))
}

/// Primes by trial division, independent of the sieve.
fn primes_by_trial_division(limit: u64) -> Vec<u64> {
    (2..=limit)
        .filter(|&n| (2..).take_while(|k| k * k <= n).all(|k| n % k != 0))
        .collect()
}

fn c09_extremal() -> Check {
    let start = Instant::now();
    let q = [1.0, 1.5, 1.75];
    let plan = extremal::build_blocks(&q, 10_000, &MassSchedule::PerBlock(vec![1.0, 1.0, 0.44]))?;

    // clause oracle: recompute all three conditions from an independent prime list
    let primes = primes_by_trial_division(10_000);
    let mut clauses_ok = true;
    let mut prev_max = 0u64;
    for (m, (block, &qm)) in plan.blocks.iter().zip(&q).enumerate() {
        let m = m as f64 + 1.0;
        clauses_ok &= block.iter().all(|p| primes.binary_search(p).is_ok());
        clauses_ok &= block.windows(2).all(|w| primes.binary_search(&w[1]).unwrap() == primes.binary_search(&w[0]).unwrap() + 1);
        clauses_ok &= block[0] > prev_max;
        prev_max = *block.last().unwrap();
        let decay: f64 = block.iter().map(|&p| (p as f64).powf(-(1.0 + qm / m))).sum();
        clauses_ok &= decay < 2f64.powf(-qm / m);
        clauses_ok &= block.iter().map(|&p| 1.0 / p as f64).sum::<f64>() >= plan.mass_targets[m as usize - 1];
    }
    clauses_ok &= plan.blocks[0] == [2, 3, 5];

    let space = CoefficientSpaceSpec::lq(extremal::required_dim(1.0, &plan), 1.0)?;
    let d = extremal::build_eco(&space, &plan)?;
    let gap = extremal::verify_gap(&d, &plan, &GapParams { seed: SEED, ..GapParams::default() })?;
    let (a, u) = (gap.sigma_a_est.value, gap.sigma_unc_est.value);
    let elapsed = start.elapsed();
    Ok((
        clauses_ok && within(a, 0.35, 0.55) && u <= 0.15 && elapsed < Duration::from_secs(180),
        format!(
            "blocks of sizes {:?} up to {}, mass targets {:?}, clauses {}; sigma_a {a:.4} ([0.35, 0.55], predicted {}), sigma_unc {u:.4} (<= 0.15); runtime {:.1}s",
            plan.blocks.iter().map(Vec::len).collect::<Vec<_>>(),
            prev_max,
            plan.mass_targets,
            if clauses_ok { "verified" } else { "VIOLATED" },
            gap.predicted_gap,
            elapsed.as_secs_f64()
        ),
    ))
}

fn c10_strip_exponent() -> Check {
    let n_list: Vec<u64> = (6..=12).map(|k| 1u64 << k).collect();
    let samplers = Samplers::default();
    let dinf = abscissa::strip_exponent(NormTag::ELL1, NormTag::DINF, &n_list, 50, SEED, CoefficientEnsemble::Signs, &samplers)?;
    let h2 = abscissa::strip_exponent(NormTag::ELL1, NormTag::hp(2.0)?, &n_list, 50, SEED, CoefficientEnsemble::Signs, &samplers)?;
    // ||P||_inf >= sum over primes |a_p| for +-1 coefficients, so the ratio is
    // at most N / pi(N); this caps any faithful D_inf exponent.
    let table = PrimeTable::global();
    let x: Vec<f64> = n_list.iter().map(|&n| (n as f64).ln()).collect();
    let y: Vec<f64> = n_list.iter().map(|&n| (n as f64 / table.range(2, n).len() as f64).ln()).collect();
    let (cap, _) = abscissa::ls_slope(&x, &y);
    Ok((
        within(dinf.exponent, 0.35, 0.6) && (h2.exponent - 0.5).abs() <= 0.05,
        format!(
            "D_inf exponent {:.4} (want [0.35, 0.6]; slope of N/pi(N) caps it at {cap:.4}), H_2 exponent {:.4} (0.5 +- 0.05)",
            dinf.exponent, h2.exponent
        ),
    ))
}

fn c11_admissibility() -> Check {
    let tags = [NormTag::ELL1, NormTag::ELLINF, NormTag::CSUP, NormTag::DINF, NormTag::hp(1.0)?, NormTag::hp(2.0)?, NormTag::hp(4.0)?];
    let spaces = [CoefficientSpaceSpec::scalar(), CoefficientSpaceSpec::lq(3, 1.0)?, CoefficientSpaceSpec::lq(3, 2.5)?];
    let samplers = Samplers {
        hp: HpSampler { mc_samples: 2048, seed: 0 },
        ..Samplers::default()
    };
    let mut violations = Vec::new();
    let (mut c1, mut c2) = (f64::INFINITY, 0.0f64);
    for tag in tags {
        for space in spaces {
            match norms::admissibility_check(tag, space, 200, SEED, &samplers) {
                Ok((a, b)) => {
                    c1 = c1.min(a);
                    c2 = c2.max(b);
                }
                Err(e) => violations.push(format!("{tag}: {e}")),
            }
        }
    }
    Ok((
        violations.is_empty(),
        format!(
            "{} violations over 7 norms x 3 spaces x 200 polynomials; min ||D||/sup||a_n|| = {c1:.3} (>= 1/2), max ||D||/sum||a_n|| = {c2:.3} (<= 1){}",
            violations.len(),
            violations.first().map_or(String::new(), |v| format!("; first: {v}"))
        ),
    ))
}

fn c12_bohr() -> Check {
    let mut mismatches = 0;
    let mut worst = 0.0f64;
    for i in 0..1000u64 {
        let mut r = rng::stream(SEED + 12, i);
        let n_max = r.random_range(1..=10_000u64);
        let mut d = DirichletTruncation::new(CoefficientSpaceSpec::scalar(), n_max)?;
        for _ in 0..r.random_range(1..=40) {
            d.insert(r.random_range(1..=n_max), Coefficient::scalar(rng::complex_gaussian(&mut r)))?;
        }
        let back = bohr::bohr_project(&bohr::bohr_lift(&d)?)?;
        if !d.iter().eq(back.iter()) {
            mismatches += 1;
        }
        let eps = r.random_range(0.01..2.0);
        let via_lift = bohr::apply_m_eps(&d, eps)?;
        for (n, c) in d.translate(eps).iter() {
            let a = c.as_scalar();
            let b = via_lift.get(n).map_or(C64::default(), |x| x.as_scalar());
            worst = worst.max((a - b).norm() / a.norm());
        }
    }
    Ok((
        mismatches == 0 && worst < 1e-12,
        format!("{mismatches} round-trip mismatches in 1000; worst relative M_eps vs translate {worst:.2e} (< 1e-12)"),
    ))
}

fn run_twice(dir: &Path, args: &[&str]) -> Result<bool, Box<dyn Error>> {
    let exe = env!("CARGO_BIN_EXE_dlab");
    let mut snapshots = Vec::new();
    for _ in 0..2 {
        let out = Command::new(exe).args(args).arg("--no-cache").current_dir(dir).output()?;
        if !out.status.success() {
            return Err(format!("{args:?} failed: {}", String::from_utf8_lossy(&out.stderr)).into());
        }
        let mut snap = out.stdout;
        for f in ["record.json", "table.csv", "plot.csv"] {
            snap.extend(std::fs::read(dir.join("out").join(f))?);
        }
        snapshots.push(snap);
    }
    Ok(snapshots[0] == snapshots[1])
}

fn c13_determinism() -> Check {
    let tmp = tempfile::TempDir::new()?;
    let dir = tmp.path();
    let mut series = String::from("{\"kind\":\"vector\",\"dim\":3,\"q\":2,\"n_max\":512}\n");
    let mut r = rng::stream(SEED + 13, 0);
    for n in 1..=512 {
        let v: Vec<C64> = (0..3).map(|_| rng::complex_gaussian(&mut r)).collect();
        series.push_str(&format!(
            "{{\"n\":{n},\"re\":[{},{},{}],\"im\":[{},{},{}]}}\n",
            v[0].re, v[1].re, v[2].re, v[0].im, v[1].im, v[2].im
        ));
    }
    std::fs::write(dir.join("vec.jsonl"), series)?;
    let jobs: [&[&str]; 10] = [
        &["estimate", "vec.jsonl", "--norm", "dinf", "--grid-points", "32", "--out", "out"],
        &["estimate", "vec.jsonl", "--norm", "hp", "--p", "1.5", "--mc-samples", "512", "--out", "out"],
        &["estimate", "vec.jsonl", "--norm", "csup", "--method", "bisection", "--iters", "8", "--out", "out"],
        &["weak", "vec.jsonl", "--norm", "hp(3)", "--mc-samples", "256", "--dual-samples", "8", "--out", "out"],
        &["unconditional", "vec.jsonl", "--trials", "8", "--out", "out"],
        &["strip", "vec.jsonl", "--norm-a", "ell1", "--norm-b", "csup", "--out", "out"],
        &["strip", "--norm-b", "dinf", "--n-list", "16,32,64", "--trials", "4", "--grid-points", "32", "--out", "out"],
        &["eco", "--blocks", "3", "--out", "out"],
        &["weissler", "--p", "1.5", "--q", "3", "--trials", "10", "--mc-samples", "2000", "--out", "out"],
        &["moin", "--p", "1", "--q", "3", "--n-list", "2,4", "--iters", "20", "--out", "out"],
    ];
    let mut differing = Vec::new();
    for job in jobs {
        if !run_twice(dir, job)? {
            differing.push(job[0]);
        }
    }
    let exe = env!("CARGO_BIN_EXE_dlab");
    let mut outputs = Vec::new();
    for args in [&["ingest", "vec.jsonl"][..], &["report", "out/record.json"][..]] {
        let a = Command::new(exe).args(args).current_dir(dir).output()?;
        let b = Command::new(exe).args(args).current_dir(dir).output()?;
        if a.stdout != b.stdout || !a.status.success() {
            differing.push(args[0]);
        }
        outputs.push(a.stdout);
    }
    Ok((
        differing.is_empty(),
        format!("{} commands rerun with the same seed; differing: {differing:?}", jobs.len() + 2),
    ))
}
