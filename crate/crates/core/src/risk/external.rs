use std::fs::File;
use std::path::Path;

use crate::error::{Error, Result};
use crate::tabular::{read_csv_extending, Dataset, Schema};

/// Loads synthetic rows produced by an outside generator. The header must
/// match `schema`; categorical levels the schema does not know are appended
/// to the vocabulary with a warning.
pub fn load_external_synth(path: impl AsRef<Path>, schema: &Schema) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let (data, added) = read_csv_extending(file, Some(schema))?;
    for (attr, level) in &added {
        log::warn!(
            "{}: attribute {attr:?} has unseen level {level:?}, appended to vocabulary",
            path.display()
        );
    }
    Ok(data)
}
