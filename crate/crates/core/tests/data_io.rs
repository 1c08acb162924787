use fgscan_core::data::{read_csv, write_csv_to, ColumnRef};
use fgscan_core::{load_csv, write_csv, Cause, CompetingRisksDataset, CsvSchema, Error};
use proptest::prelude::*;

fn cause_of(k: u8) -> Cause {
    match k % 3 {
        0 => Cause::Censored,
        1 => Cause::Cause1,
        _ => Cause::Cause2,
    }
}

proptest! {
    #[test]
    fn csv_round_trip_is_exact(
        rows in prop::collection::vec(
            (0.0f64..1e6, any::<u8>(), prop::collection::vec(-1e9f64..1e9, 3)),
            1..60,
        )
    ) {
        let times: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let causes: Vec<Cause> = rows.iter().map(|r| cause_of(r.1)).collect();
        let covs: Vec<Vec<f64>> = rows.iter().map(|r| r.2.clone()).collect();
        let d = CompetingRisksDataset::from_parts(&times, &causes, &covs).unwrap();
        let mut buf = Vec::new();
        write_csv_to(&d, &mut buf).unwrap();
        let back = read_csv(&buf[..], &CsvSchema::default()).unwrap();
        prop_assert_eq!(back.records(), d.records());
        prop_assert_eq!(back.covariate_names(), d.covariate_names());
    }

    #[test]
    fn tied_times_keep_record_order(times in prop::collection::vec(0u8..4, 1..40)) {
        let t: Vec<f64> = times.iter().map(|&v| v as f64).collect();
        let causes = vec![Cause::Cause1; t.len()];
        let covs = vec![vec![0.0]; t.len()];
        let d = CompetingRisksDataset::from_parts(&t, &causes, &covs).unwrap();
        let idx = d.sorted_index();
        for w in idx.windows(2) {
            prop_assert!(t[w[0]] > t[w[1]] || (t[w[0]] == t[w[1]] && w[0] < w[1]));
        }
    }
}

#[test]
fn file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    let d = CompetingRisksDataset::from_parts(
        &[0.1, 2.0 / 3.0, 5.0],
        &[Cause::Cause1, Cause::Censored, Cause::Cause2],
        &[vec![1e-300, -0.0], vec![std::f64::consts::PI, 7.0], vec![-2.5, 1e300]],
    )
    .unwrap();
    write_csv(&d, &path).unwrap();
    let back = load_csv(&path, &CsvSchema::default()).unwrap();
    assert_eq!(back.records(), d.records());
}

#[test]
fn missing_file_is_io_error() {
    let err = load_csv("/nonexistent/x.csv", &CsvSchema::default()).unwrap_err();
    assert!(matches!(err, Error::Io { .. }));
}

#[test]
fn explicit_column_selection() {
    let text = "id,status,age,time,score\n1,1,50,2.5,0.1\n2,0,61,3.0,0.2\n";
    let schema = CsvSchema {
        covariates: Some(vec![ColumnRef::Name("score".into()), ColumnRef::Index(2)]),
        ..CsvSchema::default()
    };
    let d = read_csv(text.as_bytes(), &schema).unwrap();
    assert_eq!(d.covariate_names(), ["score", "age"]);
    assert_eq!(d.records()[1].covariates, vec![0.2, 61.0]);
    assert_eq!(d.records()[1].time, 3.0);
}

#[test]
fn bad_status_names_the_column() {
    let text = "time,event,x\n1.0,1,0.5\n2.0,7,0.1\n";
    let schema = CsvSchema {
        status: ColumnRef::Name("event".into()),
        ..CsvSchema::default()
    };
    let msg = read_csv(text.as_bytes(), &schema).unwrap_err().to_string();
    assert!(msg.contains("event") && msg.contains("row 3"), "{msg}");
}

#[test]
fn negative_time_rejected() {
    let text = "time,status,x\n-1.0,1,0.5\n";
    assert!(matches!(
        read_csv(text.as_bytes(), &CsvSchema::default()),
        Err(Error::Validation(_))
    ));
}

#[test]
fn standardize_example() {
    let d = CompetingRisksDataset::from_parts(
        &[1.0, 2.0, 3.0],
        &[Cause::Cause1; 3],
        &[vec![1.0], vec![2.0], vec![3.0]],
    )
    .unwrap();
    let (s, centers, scales) = d.standardize_covariates().unwrap();
    assert_eq!(s.column(0), &[-1.0, 0.0, 1.0]);
    assert_eq!((centers[0], scales[0]), (2.0, 1.0));
}

#[test]
fn standardize_is_idempotent() {
    let covs: Vec<Vec<f64>> = (0..30).map(|i| vec![(i as f64).sin() * 4.0 + 1.0, (i * i) as f64]).collect();
    let t: Vec<f64> = (0..30).map(|i| i as f64 + 1.0).collect();
    let d = CompetingRisksDataset::from_parts(&t, &[Cause::Cause1; 30], &covs).unwrap();
    let (once, _, _) = d.standardize_covariates().unwrap();
    let (twice, centers, scales) = once.standardize_covariates().unwrap();
    for j in 0..2 {
        assert!(centers[j].abs() < 1e-12 && (scales[j] - 1.0).abs() < 1e-12);
        for (a, b) in once.column(j).iter().zip(twice.column(j)) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn constant_column_is_degenerate() {
    let d = CompetingRisksDataset::from_parts(
        &[1.0, 2.0],
        &[Cause::Cause1; 2],
        &[vec![5.0, 1.0], vec![5.0, 2.0]],
    )
    .unwrap();
    assert!(matches!(d.standardize_covariates(), Err(Error::DegenerateColumn(_))));
}
