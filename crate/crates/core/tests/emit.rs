use optonoise_core::config::{ConfigMap, OutputFormat};
use optonoise_core::sweep::{emit, render, run_sweep, HEADER};

fn records() -> Vec<optonoise_core::sweep::SweepRecord> {
    let cfg = ConfigMap::parse(
        "correlation_rate_hz = 1e6\nlinewidth_hz = 30\ntemperature = 0.4\naxis1 = detuning_hz 5e6 4e7 6\naxis2 = power 1e-3 0.12 5 log\nworkers = 1",
    )
    .unwrap()
    .build()
    .unwrap();
    run_sweep(&cfg).unwrap()
}

#[test]
fn csv_round_trip_is_bit_exact() {
    let recs = records();
    let text = render(&recs, OutputFormat::Csv);
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(reader.headers().unwrap().iter().collect::<Vec<_>>(), HEADER);
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), recs.len());
    let photon = HEADER.iter().position(|h| *h == "photon_number").unwrap();
    let v44 = HEADER.iter().position(|h| *h == "v44").unwrap();
    for (row, rec) in rows.iter().zip(&recs) {
        let parsed: f64 = row[photon].parse().unwrap();
        assert_eq!(parsed.to_bits(), rec.steady.unwrap().photon_number.to_bits());
        match rec.stationary {
            Some(s) => assert_eq!(row[v44].parse::<f64>().unwrap().to_bits(), s.covariance[9].to_bits()),
            None => assert_eq!(&row[v44], ""),
        }
    }
}

#[test]
fn json_is_an_array_of_flat_objects() {
    let recs = records();
    let text = render(&recs, OutputFormat::Json);
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    let arr = value.as_array().unwrap();
    assert_eq!(arr.len(), recs.len());
    for (obj, rec) in arr.iter().zip(&recs) {
        let obj = obj.as_object().unwrap();
        assert_eq!(obj.len(), HEADER.len());
        let eta = obj["eta"].as_f64().unwrap();
        assert_eq!(eta.to_bits(), rec.steady.unwrap().eta.to_bits());
        assert!(obj.values().all(|v| !v.is_object() && !v.is_array()));
    }
}

#[test]
fn emit_writes_file_and_reports_bad_paths() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    let recs = records();
    emit(&recs, OutputFormat::Csv, Some(&path)).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap(), render(&recs, OutputFormat::Csv));

    let bad = dir.path().join("missing").join("out.csv");
    let err = emit(&recs, OutputFormat::Csv, Some(&bad)).unwrap_err();
    assert!(matches!(err, optonoise_core::Error::Io { .. }));
    assert!(err.to_string().contains("missing"));
}
