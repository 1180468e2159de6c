//! Text formatting of doubles for the JSON and CSV outputs.

/// Scientific notation with 17 significant digits, enough to reproduce
/// every finite double exactly when parsed back. The output is a valid
/// JSON number for finite input.
pub fn sig17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Comma-joined `sig17` values.
pub fn join_sig17<'a>(values: impl IntoIterator<Item = &'a f64>) -> String {
    values
        .into_iter()
        .map(|v| sig17(*v))
        .collect::<Vec<_>>()
        .join(",")
}
