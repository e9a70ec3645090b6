#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    // Parsing untrusted chain documents must never panic; when one parses
    // and validates, the level machinery must hold up too.
    let Ok(chain) = driftlab::io::parse_chain_json(text) else {
        return;
    };
    match chain {
        driftlab::io::AnyChain::Rational(chain) => exercise(&chain),
        driftlab::io::AnyChain::Float(chain) => exercise(&chain),
    }
});

fn exercise<S: driftlab::Scalar>(chain: &driftlab::StateChain<S>) {
    if !chain.validate().is_empty() {
        return;
    }
    let Ok(partition) = driftlab::level::build_level_partition(chain) else {
        return;
    };
    if let Ok(stats) = driftlab::level::level_stats(chain, &partition) {
        let _ = driftlab::graph::build_level_graph(&stats);
    }
}
