use scgnet::dataset::{
    cushing_training_data, cushing_unknown_data, load_csv_path, CsvSchema, Dataset, LabelPosition,
    Manifest,
};

use crate::args::{Builtin, Source};
use crate::CliError;

/// Raw patterns plus, for manifests, the transforms the manifest prescribes
/// (fitted on its `train` split).
pub struct Loaded {
    pub raw: Dataset,
    pub manifest_transforms: Option<Vec<scgnet::dataset::ColumnTransform>>,
}

/// Loads the selected data. `shape` fixes (d, n) for data read on behalf of
/// an existing model, so that empty files load and mismatches are reported.
pub fn load(
    source: &Source,
    default_label: LabelPosition,
    default_split: &str,
    shape: Option<(usize, usize)>,
) -> Result<Loaded, CliError> {
    if let Some(builtin) = source.builtin {
        let raw = match builtin {
            Builtin::Cushing => cushing_training_data(),
            Builtin::CushingUnknown => cushing_unknown_data(),
        };
        return Ok(Loaded {
            raw,
            manifest_transforms: None,
        });
    }
    if let Some(path) = &source.data {
        let label = match &source.schema {
            Some(s) => s.parse().map_err(CliError::Data)?,
            None => default_label,
        };
        if !source.delimiter.is_ascii() {
            return Err(CliError::Usage(format!(
                "delimiter {:?} is not a single-byte character",
                source.delimiter
            )));
        }
        let mut schema = CsvSchema::new(label);
        schema.delimiter = source.delimiter as u8;
        if let Some((d, n)) = shape {
            schema = schema.with_d(d).with_n(n);
        }
        let raw = load_csv_path(path, schema)?;
        return Ok(Loaded {
            raw,
            manifest_transforms: None,
        });
    }
    if let Some(path) = &source.manifest {
        if source.schema.is_some() {
            return Err(CliError::Usage("--schema comes from the manifest".into()));
        }
        let manifest = Manifest::load(path)?;
        let split = source.split.as_deref().unwrap_or(default_split);
        let raw = manifest.raw_split(split)?;
        let transforms = manifest.transform_record()?;
        return Ok(Loaded {
            raw,
            manifest_transforms: Some(transforms),
        });
    }
    Err(CliError::Usage(
        "no data: pass --builtin, --data or --manifest".into(),
    ))
}

/// Display name of pattern `index` (0-based).
pub fn tag(dataset: &Dataset, index: usize) -> String {
    dataset.patterns()[index]
        .tag
        .clone()
        .unwrap_or_else(|| format!("line{}", index + 1))
}
