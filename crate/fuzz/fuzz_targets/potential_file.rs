#![no_main]

use kdv_actions::format::{parse_potential, write_potential};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(psi) = parse_potential(text) {
        let again = parse_potential(&write_potential(&psi, &[])).expect("written potentials parse");
        assert_eq!(again.coeffs(), psi.coeffs());
    }
});
