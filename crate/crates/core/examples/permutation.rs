//! Oblivious random permutation, plus the retrying wrapper for small buckets.

use oblisort::element::{from_keys, real_keys};
use oblisort::orp::{bucket_orp, bucket_orp_with_retry};
use oblisort::{derive_params, ClientMode};

fn main() -> oblisort::Result<()> {
    let keys: Vec<u64> = (0..20).collect();
    for seed in [1, 2, 3] {
        let params = derive_params(keys.len(), 16, ClientMode::BucketClient, seed, None)?;
        let out = bucket_orp(&from_keys(&keys), &params)?;
        println!(
            "seed {seed}: {:?} loads {:?}",
            real_keys(&out.output),
            out.loads
        );
    }

    // Z = 8 on 64 keys overflows now and then; the wrapper reseeds from the
    // retry stream.
    let keys: Vec<u64> = (0..64).collect();
    let params = derive_params(keys.len(), 8, ClientMode::BucketClient, 9, None)?;
    match bucket_orp_with_retry(&from_keys(&keys), &params, 50) {
        Ok((out, retries)) => println!("Z=8: done after {retries} retries, loads {:?}", out.loads),
        Err(e) => println!("Z=8: gave up: {e}"),
    }
    Ok(())
}
