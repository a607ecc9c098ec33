//! CSV reading and writing for flow records.

use std::path::Path;

use super::{CsvSchema, Dataset, DatasetError, FlowRecord, Taxonomy};

/// Loads a flow CSV against a schema and taxonomy.
///
/// The file must carry a header row naming every schema column. Feature cells
/// must parse as finite numbers and label cells must name a taxonomy subtype;
/// anything else is an error carrying the 1-based data-row index.
pub fn load_csv(
    path: &Path,
    schema: &CsvSchema,
    taxonomy: &Taxonomy,
) -> Result<Dataset, DatasetError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(DatasetError::Csv)?;
    let headers = reader.headers().map_err(DatasetError::Csv)?.clone();
    let column_index = |name: &str| -> Result<usize, DatasetError> {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| DatasetError::MissingColumn(name.to_string()))
    };
    let label_idx = column_index(&schema.label_column)?;
    let feature_idxs: Vec<usize> = schema
        .feature_columns
        .iter()
        .map(|c| column_index(c))
        .collect::<Result<_, _>>()?;

    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(DatasetError::Csv)?;
        let rowno = i + 1;
        let mut features = Vec::with_capacity(feature_idxs.len());
        for (&idx, column) in feature_idxs.iter().zip(&schema.feature_columns) {
            let cell = row.get(idx).unwrap_or("").trim();
            let value: f64 = cell.parse().map_err(|_| DatasetError::NonNumericFeature {
                row: rowno,
                column: column.clone(),
                value: cell.to_string(),
            })?;
            if !value.is_finite() {
                return Err(DatasetError::NonNumericFeature {
                    row: rowno,
                    column: column.clone(),
                    value: cell.to_string(),
                });
            }
            features.push(value);
        }
        let label_cell = row.get(label_idx).unwrap_or("").trim();
        let label = taxonomy
            .lookup(label_cell)
            .ok_or_else(|| DatasetError::UnknownLabel {
                row: rowno,
                label: label_cell.to_string(),
            })?;
        records.push(FlowRecord { features, label });
    }
    Ok(Dataset {
        taxonomy: taxonomy.clone(),
        feature_names: schema.feature_columns.clone(),
        records,
    })
}

/// Writes a dataset back to CSV with a `Label` column after the features.
///
/// Feature values use the shortest decimal form that parses back to the same
/// double, so a write/load cycle is lossless.
pub fn write_csv(dataset: &Dataset, path: &Path) -> Result<(), DatasetError> {
    let mut writer = csv::Writer::from_path(path).map_err(DatasetError::Csv)?;
    let mut header: Vec<&str> = dataset.feature_names.iter().map(|s| s.as_str()).collect();
    header.push("Label");
    writer.write_record(&header).map_err(DatasetError::Csv)?;
    for record in &dataset.records {
        let mut row: Vec<String> = record.features.iter().map(|v| v.to_string()).collect();
        row.push(dataset.subtype_name(record).to_string());
        writer.write_record(&row).map_err(DatasetError::Csv)?;
    }
    writer
        .flush()
        .map_err(|e| DatasetError::io(path, e))?;
    Ok(())
}

/// The schema matching [`write_csv`] output for this dataset.
pub fn written_schema(dataset: &Dataset) -> CsvSchema {
    CsvSchema::new("Label", dataset.feature_names.clone())
}
