//! Fuzzes the node-cloud text parser: arbitrary bytes must either parse into
//! a valid cloud or return a structured error — never panic or hang.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = chemogfd::geometry::parse_cloud(text);
    }
});
