//! Fuzzes the TOML configuration parser: arbitrary bytes must either resolve
//! into a simulation config or return a structured error — never panic.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = chemogfd::config::parse_config(data);
});
