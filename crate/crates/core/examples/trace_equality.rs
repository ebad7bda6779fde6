//! Access traces depend on the input length, not its contents. Merge sort
//! alone does leak: its trace follows the ranks of the keys.

use oblisort::element::from_keys;
use oblisort::orp::bucket_orp;
use oblisort::osort::trace_rank_isomorphism_check;
use oblisort::trace::{trace_equal, TraceComparison};
use oblisort::{derive_params, ClientMode};

fn main() -> oblisort::Result<()> {
    let x: Vec<u64> = (0..12).collect();
    let y = vec![7; 12];
    for mode in [ClientMode::BucketClient, ClientMode::ConstClient] {
        let params = derive_params(12, 8, mode, 3, None)?;
        let a = bucket_orp(&from_keys(&x), &params)?;
        let b = bucket_orp(&from_keys(&y), &params)?;
        println!(
            "{mode}: {} events, equal = {}",
            a.trace.len(),
            trace_equal(&a.trace, &b.trace).is_equal()
        );
    }

    let params = derive_params(12, 8, ClientMode::BucketClient, 3, None)?;
    let trace = bucket_orp(&from_keys(&x), &params)?.trace;
    println!("first events:");
    for line in trace.to_text().lines().take(6) {
        println!("  {line}");
    }

    let id: Vec<usize> = (0..4).collect();
    match trace_rank_isomorphism_check(&[1, 2, 3, 4], &[4, 3, 2, 1], &id)? {
        TraceComparison::Equal => println!("merge sort: equal"),
        TraceComparison::Diverges(i) => {
            println!("merge sort on different ranks diverges at event {i}")
        }
    }
    Ok(())
}
