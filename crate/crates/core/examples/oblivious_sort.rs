//! Bucket oblivious sort of random keys, with per-phase costs against the
//! predicted counts.

use oblisort::analysis::{predict_costs, Algorithm};
use oblisort::cli::synthetic_input;
use oblisort::orp::OrpOptions;
use oblisort::osort::bucket_osort_with;
use oblisort::{derive_params, ClientMode};

fn main() -> oblisort::Result<()> {
    let n = 1 << 14;
    let z = 512;
    let input = synthetic_input(n, 11);
    let params = derive_params(n, z, ClientMode::BucketClient, 11, None)?;
    let options = OrpOptions {
        record: false,
        ..Default::default()
    };
    let res = bucket_osort_with(&input, &params, &options)?;
    assert!(res
        .output
        .windows(2)
        .all(|w| w[0].sort_key <= w[1].sort_key));

    let p = predict_costs(Algorithm::BucketSort, n, z, ClientMode::BucketClient);
    println!("n={n} Z={z} B={}", params.b);
    println!("{:<10}{:>12}{:>12}", "phase", "measured", "predicted");
    for (name, measured, predicted) in [
        ("routing", res.phases.routing.accesses(), p.routing),
        ("emission", res.phases.emission.accesses(), p.emission),
        ("sort", res.phases.sort.accesses(), p.sort),
    ] {
        println!("{name:<10}{measured:>12}{predicted:>12}");
    }
    println!("placement (not in total): {}", res.phases.setup.accesses());
    println!(
        "total {} = {:.2} n log n",
        res.accesses,
        res.accesses as f64 / (n as f64 * (n as f64).log2())
    );
    Ok(())
}
