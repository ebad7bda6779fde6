//! The constant-storage client: MergeSplit through a bitonic network and a
//! label-sort bucket permutation, with a client budget of 8 elements.

use oblisort::analysis::{approx_const_routing, predict_costs, Algorithm};
use oblisort::bin_assign::{merge_split, merge_split_bitonic};
use oblisort::cli::synthetic_input;
use oblisort::element::real_keys;
use oblisort::orp::{bucket_orp_with, OrpOptions};
use oblisort::{derive_params, ClientMode, Element};

fn labeled(key: u64, label: u32) -> Element {
    Element {
        routing_label: label,
        ..Element::real(key)
    }
}

fn main() -> oblisort::Result<()> {
    let a0 = vec![
        labeled(1, 0b01),
        Element::dummy(),
        labeled(2, 0b11),
        Element::dummy(),
    ];
    let a1 = vec![
        labeled(3, 0b10),
        labeled(4, 0b00),
        Element::dummy(),
        Element::dummy(),
    ];
    let (d0, d1) = merge_split(&a0, &a1, 0, 2)?;
    let (b0, b1) = merge_split_bitonic(&a0, &a1, 0, 2)?;
    println!("direct:  {:?} | {:?}", real_keys(&d0), real_keys(&d1));
    println!("network: {:?} | {:?}", real_keys(&b0), real_keys(&b1));

    let (n, z) = (1 << 12, 32);
    let params = derive_params(n, z, ClientMode::ConstClient, 5, None)?;
    let options = OrpOptions {
        record: false,
        ..Default::default()
    };
    let out = bucket_orp_with(&synthetic_input(n, 5), &params, &options)?;
    let exact = predict_costs(Algorithm::Orp, n, z, ClientMode::ConstClient);
    println!("n={n} Z={z} B={}", params.b);
    println!(
        "routing  {} (exact {}, 2n log B log^2 2Z = {})",
        out.phases.routing.accesses(),
        exact.routing,
        approx_const_routing(n, z)
    );
    println!(
        "emission {} (exact {})",
        out.phases.emission.accesses(),
        exact.emission
    );
    println!("comparisons {}", out.counters.comparisons);
    Ok(())
}
