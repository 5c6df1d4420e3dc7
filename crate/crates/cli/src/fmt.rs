//! Deterministic plain-decimal formatting for CSV and report output.

/// Format with `digits` significant digits, plain decimal, trailing
/// zeros trimmed (so exact integers print bare: `2`, not `2.00000`).
pub fn fmt_sig(v: f64, digits: usize) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let s = format!("{:.*e}", digits - 1, v);
    let (mant, exp) = s.split_once('e').expect("scientific form");
    let exp: i32 = exp.parse().expect("exponent");
    let neg = mant.starts_with('-');
    let mant: String = mant.chars().filter(|c| c.is_ascii_digit()).collect();
    let point = 1 + exp;
    let mut out = String::new();
    if neg {
        out.push('-');
    }
    if point <= 0 {
        out.push_str("0.");
        for _ in 0..(-point) {
            out.push('0');
        }
        out.push_str(&mant);
    } else if (point as usize) >= mant.len() {
        out.push_str(&mant);
        for _ in 0..(point as usize - mant.len()) {
            out.push('0');
        }
    } else {
        out.push_str(&mant[..point as usize]);
        out.push('.');
        out.push_str(&mant[point as usize..]);
    }
    if out.contains('.') {
        while out.ends_with('0') {
            out.pop();
        }
        if out.ends_with('.') {
            out.pop();
        }
    }
    out
}

/// 12 significant digits: the report format of `dim`.
pub fn sig12(v: f64) -> String {
    fmt_sig(v, 12)
}

/// 17 significant digits: the CSV format for reals (round-trips f64).
pub fn sig17(v: f64) -> String {
    fmt_sig(v, 17)
}
