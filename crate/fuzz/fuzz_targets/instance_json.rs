#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(instance) = driftlab::io::parse_instance_json(text) else {
        return;
    };
    // A parsed instance must evaluate and repair without panicking.
    let empty = driftlab::knapsack::Solution::empty(instance.n);
    let _ = driftlab::knapsack::evaluate(&instance, &empty);
    let full = driftlab::knapsack::Solution(vec![true; instance.n]);
    if let Ok(repaired) = driftlab::knapsack::greedy_repair(&instance, &full) {
        let _ = driftlab::knapsack::classify(&instance, &repaired);
    }
});
