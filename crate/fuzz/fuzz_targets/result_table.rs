#![no_main]

use kdv_actions::format::Table;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(table) = Table::parse(text) {
        let again = Table::parse(&table.render()).expect("rendered tables parse");
        assert_eq!(again.columns, table.columns);
        assert_eq!(again.rows.len(), table.rows.len());
    }
});
