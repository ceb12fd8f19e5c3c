use std::path::Path;

use scgnet::dataset::{ColumnTransform, Manifest};

fn manifest() -> Manifest {
    Manifest::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/wine.manifest")).unwrap()
}

#[test]
fn splits_have_the_expected_sizes() {
    let m = manifest();
    let train = m.split("train").unwrap();
    let holdout = m.split("holdout").unwrap();
    assert_eq!((train.d(), train.n()), (13, 3));
    assert_eq!(train.class_counts(), vec![50, 60, 40]);
    assert_eq!(holdout.class_counts(), vec![9, 11, 8]);
    assert_eq!(holdout.patterns()[0].tag.as_deref(), Some("line51"));
    assert!(m.split("validation").is_err());
}

#[test]
fn standardization_is_fitted_on_training_rows() {
    let m = manifest();
    let train = m.split("train").unwrap();
    for col in 0..13 {
        let values: Vec<f64> = train.patterns().iter().map(|p| p.features[col]).collect();
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / values.len() as f64;
        assert!(mean.abs() < 1e-12, "column {col}");
        assert!((var - 1.0).abs() < 1e-12, "column {col}");
    }
    let record = m.transform_record().unwrap();
    assert!(matches!(record.as_slice(), [ColumnTransform::Standardize { .. }]));

    let raw = m.raw_split("train").unwrap();
    assert_eq!(raw.patterns()[0].features[0], 14.23);
    assert_eq!(raw.patterns()[0].features[12], 1065.0);
}
