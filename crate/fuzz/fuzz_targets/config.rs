#![no_main]

use std::path::Path;

use kdv_actions::format::KeyValues;
use kdv_actions_cli::config::RunConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(kv) = KeyValues::parse(text) else { return };
    assert_eq!(KeyValues::parse(&kv.render()).expect("rendered configs parse"), kv);
    if let Ok(cfg) = RunConfig::from_key_values(kv, Path::new(".")) {
        // Only the inline form is read here; files are not opened.
        if cfg.raw.get("potential").is_some() {
            let _ = cfg.potential();
        }
        let _ = cfg.action_options();
    }
});
