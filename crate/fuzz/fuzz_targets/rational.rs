#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(value) = driftlab::numeric::parse_rational(text) {
        // Canonical form must round-trip.
        let canonical = driftlab::numeric::format_rational(&value);
        let again = driftlab::numeric::parse_rational(&canonical).expect("canonical form parses");
        assert_eq!(value, again);
    }
});
