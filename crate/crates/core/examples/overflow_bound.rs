//! The overflow bound against Monte Carlo overflow rates.

use oblisort::analysis::{epsilon_bound, overflow_monte_carlo, per_bucket_bound};

fn main() -> oblisort::Result<()> {
    println!("{:>8} {:>5} {:>6} {:>12}", "n", "Z", "B", "log2 eps");
    for (n, z) in [
        (1 << 10, 64),
        (1 << 20, 128),
        (1 << 20, 256),
        (1 << 20, 512),
        (1 << 30, 512),
    ] {
        let e = epsilon_bound(n, z);
        println!("{n:>8} {z:>5} {:>6} {:>12.2}", e.b, e.log2_raw);
    }

    for (n, z) in [(96, 12), (1024, 16), (1024, 32)] {
        let s = overflow_monte_carlo(n, z, 20_000, 1)?;
        println!(
            "n={n} Z={z}: any overflow {:.4} (bound {:.4}), worst bucket {:.5} (bound {:.4}), final bucket {:.5}",
            s.any_rate(),
            epsilon_bound(n, z).value,
            s.max_bucket_rate(),
            per_bucket_bound(z),
            s.final_bucket_rate()
        );
    }
    Ok(())
}
