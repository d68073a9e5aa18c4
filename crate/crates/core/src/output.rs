//! Plain-text number formatting shared by CSV and JSON emitters.

/// Twelve significant digits in scientific notation; `inf`, `-inf`, `nan` spelled out.
pub fn format_real(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x:.11e}")
    }
}

/// Inverse of [`format_real`]; also accepts any float literal Rust parses.
pub fn parse_real(s: &str) -> Option<f64> {
    match s.trim() {
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        "nan" => Some(f64::NAN),
        t => t.parse().ok(),
    }
}
