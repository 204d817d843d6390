//! C99 hexadecimal float literals (`0x1.8p+1`), exact for every `f64`.

/// Formats `x` exactly. Infinities and NaN become `inf`, `-inf` and `nan`.
pub fn format_hex(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    let sign = if x.is_sign_negative() { "-" } else { "" };
    if x.is_infinite() {
        return format!("{sign}inf");
    }
    let bits = x.to_bits();
    let exp_bits = ((bits >> 52) & 0x7ff) as i64;
    let mantissa = bits & ((1u64 << 52) - 1);
    if exp_bits == 0 && mantissa == 0 {
        return format!("{sign}0x0p+0");
    }
    let (lead, exp) = if exp_bits == 0 {
        (0, -1022)
    } else {
        (1, exp_bits - 1023)
    };
    let mut frac = format!("{mantissa:013x}");
    while frac.ends_with('0') {
        frac.pop();
    }
    let exp_sign = if exp < 0 { '-' } else { '+' };
    if frac.is_empty() {
        format!("{sign}0x{lead}p{exp_sign}{}", exp.abs())
    } else {
        format!("{sign}0x{lead}.{frac}p{exp_sign}{}", exp.abs())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("malformed hex float `{0}`")]
pub struct HexFloatError(pub String);

/// Parses what [`format_hex`] writes. Also accepts any normalised or
/// denormalised literal whose value is exactly representable.
pub fn parse_hex(text: &str) -> Result<f64, HexFloatError> {
    let err = || HexFloatError(text.to_string());
    let t = text.trim();
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let value = match body {
        "inf" => f64::INFINITY,
        "nan" => return Ok(f64::NAN),
        _ => {
            let body = body
                .strip_prefix("0x")
                .or_else(|| body.strip_prefix("0X"))
                .ok_or_else(err)?;
            let (mant, exp) = body.split_once(['p', 'P']).ok_or_else(err)?;
            let exp: i64 = exp.parse().map_err(|_| err())?;
            let (int_part, frac_part) = mant.split_once('.').unwrap_or((mant, ""));
            if int_part.is_empty() || frac_part.len() > 13 {
                return Err(err());
            }
            let lead = u64::from_str_radix(int_part, 16).map_err(|_| err())?;
            if lead > 1 {
                return Err(err());
            }
            let frac = if frac_part.is_empty() {
                0
            } else {
                u64::from_str_radix(frac_part, 16).map_err(|_| err())? << (4 * (13 - frac_part.len()))
            };
            let scaled = (lead << 52 | frac) as f64;
            // The 53-bit integer is exact; scaling by a power of two is exact
            // as long as the result is representable.
            let v = scaled * pow2(exp - 52);
            if lead == 1 && !(-1022..=1023).contains(&exp) {
                return Err(err());
            }
            if lead == 0 && frac != 0 && exp != -1022 {
                return Err(err());
            }
            v
        }
    };
    Ok(if neg { -value } else { value })
}

fn pow2(e: i64) -> f64 {
    // Split the scaling so intermediate factors stay normal.
    let mut v = 1.0;
    let mut e = e;
    while e > 1000 {
        v *= 2f64.powi(1000);
        e -= 1000;
    }
    while e < -1000 {
        v *= 2f64.powi(-1000);
        e += 1000;
    }
    v * 2f64.powi(e as i32)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_literals() {
        assert_eq!(format_hex(1.0), "0x1p+0");
        assert_eq!(format_hex(3.0), "0x1.8p+1");
        assert_eq!(format_hex(-0.1), "-0x1.999999999999ap-4");
        assert_eq!(format_hex(0.0), "0x0p+0");
        assert_eq!(format_hex(-0.0), "-0x0p+0");
        assert_eq!(format_hex(f64::MIN_POSITIVE / 2.0), "0x0.8p-1022");
        assert_eq!(parse_hex("0x1.8p+1").unwrap(), 3.0);
    }

    #[test]
    fn round_trips_edge_values() {
        for x in [
            1.0,
            -2.5,
            f64::MAX,
            f64::MIN_POSITIVE,
            5e-324,
            std::f64::consts::PI,
            1e-300,
            -0.0,
            f64::INFINITY,
            f64::NEG_INFINITY,
        ] {
            let back = parse_hex(&format_hex(x)).unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{x:e}");
        }
        assert!(parse_hex("nan").unwrap().is_nan());
    }

    #[test]
    fn rejects_garbage() {
        for s in ["", "1.0", "0x", "0x1.zp+0", "0x2p+0", "0x1p", "0x1.0000000000000000p+0"] {
            assert!(parse_hex(s).is_err(), "{s}");
        }
    }
}
