#![no_main]

use kdv_actions::format::parse_inline;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(psi) = parse_inline(text) {
        assert!(psi.coeffs().iter().all(|c| !c.re.is_nan() && !c.im.is_nan()));
    }
});
