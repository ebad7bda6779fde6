//! Element accesses of the bucket sort, bitonic sort and merge sort.

use oblisort::analysis::model_ratio;
use oblisort::cli::synthetic_input;
use oblisort::orp::OrpOptions;
use oblisort::osort::{bitonic_baseline, bucket_osort_with, merge_sort_baseline_with};
use oblisort::{derive_params, ClientMode};

fn main() -> oblisort::Result<()> {
    let z = 512;
    let options = OrpOptions {
        record: false,
        ..Default::default()
    };
    println!(
        "{:>7} {:>11} {:>11} {:>11} {:>7}",
        "n", "bucket", "bitonic", "merge", "ratio"
    );
    for lg in (10..=16).step_by(2) {
        let n = 1usize << lg;
        let input = synthetic_input(n, lg as u64);
        let params = derive_params(n, z, ClientMode::BucketClient, lg as u64, None)?;
        let bucket = bucket_osort_with(&input, &params, &options)?.accesses;
        let bitonic = bitonic_baseline(&input, false)?.accesses;
        let merge = merge_sort_baseline_with(&input, None, false)?.accesses;
        println!(
            "{n:>7} {bucket:>11} {bitonic:>11} {merge:>11} {:>7.2}",
            bitonic as f64 / bucket as f64
        );
    }
    for lg in [20, 25, 30] {
        println!("model bitonic/bucket at 2^{lg}: {:.2}", model_ratio(lg, z));
    }
    Ok(())
}
