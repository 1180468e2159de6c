//! Hand-rolled JSON fragments so that every float carries 17 significant
//! digits.

use jdiag::numfmt::join_sig17;
use nalgebra::DMatrix;

pub fn array<'a>(values: impl IntoIterator<Item = &'a f64>) -> String {
    format!("[{}]", join_sig17(values))
}

/// Nested array, one inner array per row.
pub fn rows(m: &DMatrix<f64>) -> String {
    let rows: Vec<String> = m.row_iter().map(|r| array(r.iter())).collect();
    format!("[\n    {}\n  ]", rows.join(",\n    "))
}

/// Nested array, one inner array per column.
pub fn columns(m: &DMatrix<f64>) -> String {
    let cols: Vec<String> = m.column_iter().map(|c| array(c.iter())).collect();
    format!("[\n    {}\n  ]", cols.join(",\n    "))
}

/// Object from already rendered `(key, value)` pairs.
pub fn object(fields: &[(&str, String)]) -> String {
    let body: Vec<String> = fields
        .iter()
        .map(|(k, v)| format!("  \"{k}\": {v}"))
        .collect();
    format!("{{\n{}\n}}\n", body.join(",\n"))
}
