//! Locale-free float formatting for CSV artifacts.

/// Formats `x` with 12 significant digits: plain decimal notation for
/// magnitudes in `[1e-4, 1e15)`, scientific otherwise. Trailing zeros are
/// trimmed so equal values always print identically.
pub fn sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let mag = x.abs();
    if (1e-4..1e15).contains(&mag) {
        let exponent = mag.log10().floor() as i32;
        let decimals = (11 - exponent).max(0) as usize;
        trim(format!("{x:.decimals$}"))
    } else {
        let s = format!("{x:.11e}");
        let (mantissa, exp) = s.split_once('e').expect("scientific format has an exponent");
        format!("{}e{exp}", trim(mantissa.to_string()))
    }
}

fn trim(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    let t = s.trim_end_matches('0').trim_end_matches('.');
    t.to_string()
}
