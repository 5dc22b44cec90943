//! Fixed 12-significant-digit number rendering for CSV/JSON outputs.

/// Formats like C's `%.12g`.
pub fn g12(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    if x == 0.0 {
        return "0".into();
    }
    // the e-format applies the rounding, so the exponent is already correct
    let sci = format!("{:.11e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("e-format");
    let exp: i32 = exp.parse().expect("exponent");
    if !(-4..12).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Joins values with commas, each through [`g12`].
pub fn csv_row(values: impl IntoIterator<Item = f64>) -> String {
    values.into_iter().map(g12).collect::<Vec<_>>().join(",")
}

/// Serializes a JSON value with floats re-rendered at 12 significant digits.
pub fn json_pretty(value: &serde_json::Value) -> String {
    let rounded = round_json(value);
    let mut s = serde_json::to_string_pretty(&rounded).expect("json value serializes");
    s.push('\n');
    s
}

fn round_json(value: &serde_json::Value) -> serde_json::Value {
    use serde_json::Value;
    match value {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("f64");
            let r: f64 = g12(x).parse().expect("g12 parses");
            serde_json::Number::from_f64(r).map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.iter().map(round_json).collect()),
        Value::Object(o) => Value::Object(o.iter().map(|(k, v)| (k.clone(), round_json(v))).collect()),
        other => other.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_printf_g() {
        assert_eq!(g12(0.0), "0");
        assert_eq!(g12(1.0), "1");
        assert_eq!(g12(-0.5), "-0.5");
        assert_eq!(g12(1.0 / 3.0), "0.333333333333");
        assert_eq!(g12(2.0 / 3.0), "0.666666666667");
        assert_eq!(g12(123456789012.0), "123456789012");
        assert_eq!(g12(1234567890123.0), "1.23456789012e+12");
        assert_eq!(g12(1e-5), "1e-05");
        assert_eq!(g12(0.0001), "0.0001");
        assert_eq!(g12(9.9999999999999e-5), "0.0001");
        assert_eq!(g12(50.000000000001), "50");
        assert_eq!(g12(f64::NAN), "nan");
    }

    #[test]
    fn json_rounds_floats_only() {
        let v = serde_json::json!({"a": 1.0 / 3.0, "n": 3, "s": "x"});
        let s = json_pretty(&v);
        assert!(s.contains("0.333333333333"));
        assert!(s.contains("\"n\": 3"));
    }
}
