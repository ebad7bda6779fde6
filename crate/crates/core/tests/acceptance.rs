//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any failed.

use std::collections::HashMap;
use std::process::Command;
use std::time::Instant;

use oblisort::analysis::{
    approx_const_routing, chi_square_uniform, epsilon_bound, model_ratio, overflow_monte_carlo,
    per_bucket_bound,
};
use oblisort::bin_assign::{merge_split, merge_split_bitonic, random_bin_assignment};
use oblisort::bitonic::{bitonic_schedule, bitonic_sort, comparator_count, concurrent_bitonic};
use oblisort::cli::synthetic_input;
use oblisort::element::{from_keys, Element};
use oblisort::memory::{Memory, MemoryConfig};
use oblisort::orp::{bucket_orp, bucket_orp_with, with_retry, OrpOptions};
use oblisort::osort::{bitonic_baseline, bucket_osort_with, merge_sort_baseline_with};
use oblisort::rng::{RngStream, StreamTag};
use oblisort::trace::trace_equal;
use oblisort::{derive_params, ClientMode, Engine};
use rand::{Rng, RngCore};

type Outcome = (bool, String);
type Criterion = (&'static str, fn() -> Outcome);

/// 0.999 quantiles of chi-square, from an independent statistics package.
const CHI2_DF23: f64 = 49.7282;
const CHI2_DF119: f64 = 172.4177;
/// P[Bin(96, 1/16) > 12], same source.
const FINAL_BUCKET_ORACLE_96_12: f64 = 0.006802;

fn rng(i: u64) -> RngStream {
    RngStream::new(0xacce, StreamTag::trial(i))
}

fn random_keys(n: usize, r: &mut RngStream) -> Vec<Element> {
    (0..n)
        .map(|_| Element::real(r.gen_range(0..1000)))
        .collect()
}

fn obliviousness() -> Outcome {
    let mut checked = 0;
    for (n, z) in [(16usize, 16usize), (256, 64), (4096, 512)] {
        for mode in [ClientMode::BucketClient, ClientMode::ConstClient] {
            let params = derive_params(n, z, mode, 0x5eed, None).unwrap();
            let mut r = rng(n as u64);
            for _ in 0..50 {
                let (x, y) = (random_keys(n, &mut r), random_keys(n, &mut r));
                let ba = random_bin_assignment(&x, &params).unwrap();
                let bb = random_bin_assignment(&y, &params).unwrap();
                if let oblisort::trace::TraceComparison::Diverges(i) =
                    trace_equal(&ba.trace, &bb.trace)
                {
                    return (
                        false,
                        format!("bin assignment n={n} {mode}: traces diverge at event {i}"),
                    );
                }
                drop((ba, bb));
                let oa = bucket_orp(&x, &params).unwrap();
                let ob = bucket_orp(&y, &params).unwrap();
                if let oblisort::trace::TraceComparison::Diverges(i) =
                    trace_equal(&oa.trace, &ob.trace)
                {
                    return (
                        false,
                        format!("orp n={n} {mode}: traces diverge at event {i}"),
                    );
                }
                checked += 1;
            }
        }
    }
    (
        true,
        format!("{checked} input pairs, bin assignment and orp traces identical"),
    )
}

fn permutation_chi_square(n: usize, runs: u64) -> f64 {
    let keys: Vec<u64> = (0..n as u64).collect();
    let input = from_keys(&keys);
    let options = OrpOptions {
        record: false,
        ..OrpOptions::default()
    };
    let mut counts: HashMap<Vec<u64>, u64> = HashMap::new();
    let mut seeds = RngStream::new(n as u64, StreamTag::trial(0));
    let mut done = 0;
    while done < runs {
        let params = derive_params(n, 4, ClientMode::BucketClient, seeds.next_u64(), None).unwrap();
        match bucket_orp_with(&input, &params, &options) {
            Ok(out) => {
                *counts
                    .entry(out.output.iter().map(|e| e.sort_key).collect())
                    .or_default() += 1;
                done += 1;
            }
            // The distribution is conditioned on no overflow.
            Err(e) if e.is_overflow() => {}
            Err(e) => panic!("{e}"),
        }
    }
    let cells = (1..=n).product();
    chi_square_uniform(counts.into_values(), cells)
}

fn orp_uniformity() -> Outcome {
    let c4 = permutation_chi_square(4, 120_000);
    let c5 = permutation_chi_square(5, 600_000);
    (
        c4 < CHI2_DF23 && c5 < CHI2_DF119,
        format!("n=4 chi2={c4:.2} (< {CHI2_DF23}), n=5 chi2={c5:.2} (< {CHI2_DF119})"),
    )
}

fn overflow_lemma() -> Outcome {
    let trials = 100_000;
    let mut worst = (0.0f64, 0usize, 0usize);
    for lg in 8..=12 {
        for z in [16usize, 24, 32] {
            let n = 1usize << lg;
            let s = overflow_monte_carlo(n, z, trials, 0x0f10).unwrap();
            let bound = per_bucket_bound(z);
            let rate = s.max_bucket_rate();
            if rate > bound {
                return (false, format!("n={n} Z={z}: bucket rate {rate} > {bound}"));
            }
            let eps = epsilon_bound(n, z).value;
            if eps < 1.0 && s.any_rate() > eps {
                return (
                    false,
                    format!("n={n} Z={z}: run rate {} > epsilon {eps}", s.any_rate()),
                );
            }
            if rate / bound > worst.0 {
                worst = (rate / bound, n, z);
            }
        }
    }
    let s = overflow_monte_carlo(96, 12, trials, 0x0f10).unwrap();
    let spot = s.final_bucket_rate();
    // Four standard errors of a mean over 16 buckets of 1e5 trials each.
    let se = (FINAL_BUCKET_ORACLE_96_12 * (1.0 - FINAL_BUCKET_ORACLE_96_12)
        / (16.0 * trials as f64))
        .sqrt();
    let spot_ok =
        (spot - FINAL_BUCKET_ORACLE_96_12).abs() < 4.0 * se && spot <= per_bucket_bound(12);
    (
        spot_ok,
        format!(
            "grid within e^(-Z/6) (worst rate/bound {:.3} at n={} Z={}); n=96 Z=12 final bucket rate {spot:.5} vs oracle {FINAL_BUCKET_ORACLE_96_12} and bound {:.4}",
            worst.0,
            worst.1,
            worst.2,
            per_bucket_bound(12)
        ),
    )
}

fn exact_costs() -> Outcome {
    let mut notes = Vec::new();
    for lg in [10u32, 14, 18] {
        let n = 1usize << lg;
        let params = derive_params(n, 512, ClientMode::BucketClient, 1, None).unwrap();
        let out = bucket_orp_with(
            &from_keys(&vec![0; n]),
            &params,
            &OrpOptions {
                record: false,
                ..OrpOptions::default()
            },
        );
        let routing = match out {
            Ok(o) => o.phases.routing.accesses(),
            Err(e) => return (false, format!("n=2^{lg}: {e}")),
        };
        let want = 4 * n as u64 * params.levels() as u64;
        if routing != want {
            return (false, format!("routing n=2^{lg}: {routing} != {want}"));
        }
        notes.push(format!("routing 2^{lg}={routing}"));
    }
    for lg in [1u32, 4, 10, 14] {
        let n = 1usize << lg;
        let keys: Vec<u64> = (0..n as u64).rev().collect();
        let r = merge_sort_baseline_with(&from_keys(&keys), None, false).unwrap();
        let want = 2 * n as u64 * u64::from(lg);
        if r.accesses != want {
            return (
                false,
                format!("merge sort n=2^{lg}: {} != {want}", r.accesses),
            );
        }
    }
    notes.push("merge 2n log n".into());
    for m in [4usize, 8, 16, 1024] {
        let lg = m.trailing_zeros() as u64;
        let want = (m as u64 / 4) * lg * (lg + 1);
        let enumerated = bitonic_schedule(m).unwrap().comparators().count() as u64;
        let mut mem = Memory::new(MemoryConfig::new(2, ClientMode::ConstClient).counting_only());
        let a = mem.load(from_keys(&vec![1; m]), 0);
        bitonic_sort(&mut mem, a, 0, m, |e| e.sort_key).unwrap();
        let measured = mem.counters().comparisons;
        if enumerated != want || measured != want || comparator_count(m) != want {
            return (
                false,
                format!("bitonic m={m}: {enumerated}/{measured} != {want}"),
            );
        }
    }
    notes.push("bitonic comparators".into());
    (true, notes.join(", "))
}

fn headline_ratio() -> Outcome {
    let n = 1usize << 16;
    let input = synthetic_input(n, 0x7ab1e);
    let params = derive_params(n, 512, ClientMode::BucketClient, 0x7ab1e, None).unwrap();
    let options = OrpOptions {
        record: false,
        ..OrpOptions::default()
    };
    let bucket = bucket_osort_with(&input, &params, &options).unwrap();
    let bitonic = bitonic_baseline(&input, false).unwrap();
    let ratio = bitonic.accesses as f64 / bucket.accesses as f64;
    let target = 16.0 / 6.0;
    let within = (ratio / target - 1.0).abs() <= 0.15;
    let ceiling = bucket.accesses < 6 * n as u64 * 16;
    let extrapolated = model_ratio(30, 512);
    (
        within && ceiling && extrapolated > 5.0,
        format!(
            "bitonic {} / bucket {} = {ratio:.3} (target {target:.3} +-15%), bucket < 6n log n: {ceiling}, model ratio at 2^30 = {extrapolated:.3}",
            bitonic.accesses, bucket.accesses
        ),
    )
}

fn epsilon_at_scale() -> Outcome {
    let e = epsilon_bound(1 << 20, 512);
    (
        e.log2_raw < -80.0,
        format!("log2 epsilon(2^20, 512) = {:.2}", e.log2_raw),
    )
}

fn const_client_equivalence() -> Outcome {
    let mut r = rng(7);
    let mut pairs = 0;
    for z in [4usize, 16, 64] {
        for _ in 0..1000 {
            let label_bits = 6;
            let level = r.gen_range(0..label_bits as usize);
            let fill = r.gen_range(0.0..0.75);
            let mut bucket = || -> Vec<Element> {
                (0..z)
                    .map(|_| {
                        if r.gen_bool(fill) {
                            Element {
                                routing_label: r.gen_range(0..64),
                                ..Element::real(r.gen_range(0..100))
                            }
                        } else {
                            Element::dummy()
                        }
                    })
                    .collect()
            };
            let (a0, a1) = (bucket(), bucket());
            let direct = merge_split(&a0, &a1, level, label_bits);
            let network = merge_split_bitonic(&a0, &a1, level, label_bits);
            let same = match (&direct, &network) {
                (Ok((d0, d1)), Ok((b0, b1))) => d0
                    .iter()
                    .chain(d1)
                    .zip(b0.iter().chain(b1))
                    .all(|(x, y)| x.value() == y.value()),
                (Err(x), Err(y)) => x.is_overflow() && y.is_overflow(),
                _ => false,
            };
            if !same {
                return (false, format!("Z={z}: outputs differ"));
            }
            pairs += 1;
        }
    }
    let (n, z) = (1usize << 12, 32usize);
    let params = derive_params(n, z, ClientMode::ConstClient, 3, None).unwrap();
    let routed = bucket_orp_with(
        &synthetic_input(n, 3),
        &params,
        &OrpOptions {
            record: false,
            ..OrpOptions::default()
        },
    )
    .unwrap();
    let measured = routed.phases.routing.accesses() as f64;
    let predicted = approx_const_routing(n, z);
    let ratio = measured / predicted;
    (
        (ratio - 1.0).abs() <= 0.30,
        format!("{pairs} pairs slot-identical; const-client routing {measured} vs 2n log B log^2(2Z) = {predicted} (ratio {ratio:.3})"),
    )
}

fn locality() -> Outcome {
    let k = 64;
    let mut moves = Vec::new();
    for s in [2usize, 8, 32] {
        let mut mem = Memory::new(
            MemoryConfig::new(32, ClientMode::BucketClient)
                .with_disks(Some(2))
                .counting_only(),
        );
        let mut r = rng(s as u64);
        let a = mem.load(random_keys(s * k, &mut r), 0);
        concurrent_bitonic(&mut mem, a, k, Some(1), |e| e.sort_key).unwrap();
        moves.push(mem.counters().moves);
    }
    let constant = moves.windows(2).all(|w| w[0] == w[1]);

    let options = OrpOptions {
        record: false,
        ..OrpOptions::default()
    };
    let osort_moves = |lg: u32| -> (u64, usize) {
        let n = 1usize << lg;
        let params = derive_params(n, 32, ClientMode::BucketClient, 0x10c, Some(3))
            .unwrap()
            .with_engine(Engine::Bitonic)
            .unwrap();
        // Z = 32 overflows now and then at this size; the moves do not
        // depend on the seed, so retry until a run completes.
        let input = synthetic_input(n, 0x10c);
        let (r, _) = with_retry(&params, 20, |p| bucket_osort_with(&input, p, &options)).unwrap();
        (r.counters.moves, params.levels())
    };
    let (m10, l10) = osort_moves(10);
    let (m14, l14) = osort_moves(14);
    let osort_ratio = m14 as f64 / m10 as f64;
    let level_ratio = l14 as f64 / l10 as f64;
    let osort_ok = (osort_ratio / level_ratio - 1.0).abs() <= 0.25;

    let merge_moves = |lg: u32| {
        merge_sort_baseline_with(&synthetic_input(1 << lg, 9), Some(3), false)
            .unwrap()
            .counters
            .moves
    };
    let (g10, g14) = (merge_moves(10), merge_moves(14));
    let merge_ratio = g14 as f64 / g10 as f64;
    let merge_ok = (merge_ratio / 1.4 - 1.0).abs() <= 0.25;
    (
        constant && osort_ok && merge_ok,
        format!(
            "concurrent bitonic moves {moves:?}; osort moves {m10} -> {m14} (ratio {osort_ratio:.3} vs {level_ratio:.3}); merge moves {g10} -> {g14} (ratio {merge_ratio:.3} vs 1.4)"
        ),
    )
}

fn zero_one() -> Outcome {
    for m in [2usize, 4, 8, 16] {
        let schedule = bitonic_schedule(m).unwrap();
        for bits in 0u32..1 << m {
            let mut v: Vec<u8> = (0..m).map(|i| (bits >> i & 1) as u8).collect();
            schedule.apply(&mut v);
            if v.windows(2).any(|w| w[0] > w[1]) {
                return (false, format!("m={m} input {bits:#b} unsorted"));
            }
        }
    }
    (
        true,
        "all 2^m binary inputs sorted for m in {2, 4, 8, 16}".into(),
    )
}

fn determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_oblisort");
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.txt");
    let keys: String = (0..3000u64)
        .map(|i| format!("{}\n", (i * 7919) % 1000))
        .collect();
    std::fs::write(&input, keys).unwrap();
    let mut outputs = Vec::new();
    for run in 0..2 {
        let sorted = dir.path().join(format!("sorted{run}.txt"));
        let csv = dir.path().join(format!("bench{run}.csv"));
        let s = Command::new(bin)
            .args(["sort", "--z", "64", "--seed", "0x2a"])
            .arg(&input)
            .arg(&sorted)
            .status()
            .unwrap();
        let b = Command::new(bin)
            .args([
                "bench",
                "--z",
                "64",
                "--n",
                "1024,4096",
                "--algos",
                "bucket,bitonic,merge",
                "--seed",
                "42",
                "--output",
            ])
            .arg(&csv)
            .status()
            .unwrap();
        if !s.success() || !b.success() {
            return (false, format!("run {run}: sort {s}, bench {b}"));
        }
        outputs.push((
            std::fs::read(&sorted).unwrap(),
            std::fs::read(&csv).unwrap(),
        ));
    }
    (
        outputs[0] == outputs[1],
        format!(
            "sort output {} bytes, bench CSV {} bytes, byte-identical across runs",
            outputs[0].0.len(),
            outputs[0].1.len()
        ),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("obliviousness", obliviousness),
        ("orp uniformity", orp_uniformity),
        ("overflow lemma", overflow_lemma),
        ("exact cost counts", exact_costs),
        ("headline ratio", headline_ratio),
        ("epsilon at scale", epsilon_at_scale),
        ("const-client equivalence", const_client_equivalence),
        ("locality", locality),
        ("zero-one principle", zero_one),
        ("determinism", determinism),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let (ok, detail) = check();
        failed += usize::from(!ok);
        println!(
            "criterion {:>2} {:<26} {} ({:.1}s): {detail}",
            i + 1,
            name,
            if ok { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
