#![no_main]

use inftda::model::{contingency, ingest_csv, IngestOptions};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(dataset) = ingest_csv(data, &IngestOptions::default()) {
        let table = contingency(&dataset);
        assert_eq!(table.total(), dataset.len() as u64);
        let again = ingest_csv(dataset.to_csv().as_bytes(), &IngestOptions::default())
            .expect("serialized dataset re-parses");
        assert_eq!(again.len(), dataset.len());
    }
});
