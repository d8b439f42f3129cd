#![no_main]
use libfuzzer_sys::fuzz_target;
use pite_bench::output::{parse_csv, to_csv_string, ZoneRow};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(rows) = parse_csv::<ZoneRow>(text) {
        let emitted = to_csv_string(&rows).expect("parsed rows must serialize");
        let reparsed = parse_csv::<ZoneRow>(&emitted).expect("emitted csv must parse");
        assert_eq!(reparsed, rows);
        assert_eq!(to_csv_string(&reparsed).unwrap(), emitted);
    }
});
