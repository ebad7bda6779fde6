//! Routes 24 keys into random buckets and prints each level's loads.
//!
//! ```text
//! cargo run --example bin_assignment
//! ```

use oblisort::bin_assign::{bucket_loads, random_bin_assignment_observed};
use oblisort::element::from_keys;
use oblisort::{derive_params, ClientMode, Element};

fn main() -> oblisort::Result<()> {
    let keys: Vec<u64> = (100..124).collect();
    let params = derive_params(keys.len(), 16, ClientMode::BucketClient, 2024, None)?;
    println!(
        "n={} Z={} B={} levels={}",
        params.n,
        params.z,
        params.b,
        params.levels()
    );

    let mut show = |level: usize, slots: &[Element]| {
        println!("level {level}: loads {:?}", bucket_loads(slots, params.z));
    };
    let res = random_bin_assignment_observed(&from_keys(&keys), &params, Some(&mut show))?;

    for b in 0..params.b {
        let reals: Vec<String> = res
            .bucket(b)
            .iter()
            .filter(|e| e.is_real)
            .map(|e| format!("{}(label {})", e.sort_key, e.routing_label))
            .collect();
        println!("bucket {b}: {}", reals.join(" "));
    }
    println!(
        "{} trace events, {} element accesses",
        res.trace.len(),
        res.counters.accesses()
    );
    Ok(())
}
