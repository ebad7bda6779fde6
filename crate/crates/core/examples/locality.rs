//! Head moves on the disk model.

use oblisort::bitonic::concurrent_bitonic;
use oblisort::cli::synthetic_input;
use oblisort::memory::{Memory, MemoryConfig};
use oblisort::orp::{with_retry, OrpOptions};
use oblisort::osort::{bucket_osort_with, merge_sort_baseline_with};
use oblisort::{derive_params, ClientMode, Engine};

fn main() -> oblisort::Result<()> {
    for s in [2, 8, 32, 128] {
        let mut mem = Memory::new(
            MemoryConfig::new(32, ClientMode::BucketClient)
                .with_disks(Some(2))
                .counting_only(),
        );
        let a = mem.load(synthetic_input(64 * s, 1), 0);
        concurrent_bitonic(&mut mem, a, 64, Some(1), |e| e.sort_key)?;
        println!(
            "concurrent bitonic k=64 s={s}: {} moves",
            mem.counters().moves
        );
    }

    let options = OrpOptions {
        record: false,
        ..Default::default()
    };
    for lg in [10, 12, 14] {
        let n = 1usize << lg;
        let input = synthetic_input(n, 2);
        let params = derive_params(n, 32, ClientMode::BucketClient, 2, Some(3))?
            .with_engine(Engine::Bitonic)?;
        let (sorted, retries) =
            with_retry(&params, 20, |p| bucket_osort_with(&input, p, &options))?;
        let merge = merge_sort_baseline_with(&input, Some(3), false)?;
        println!(
            "n=2^{lg}: bucket sort {} moves over {} levels ({retries} retries), merge sort {} moves",
            sorted.counters.moves,
            params.levels(),
            merge.counters.moves
        );
    }
    Ok(())
}
