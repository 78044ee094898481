//! Canonical JSON serialization: struct-ordered fields, floats written with
//! 17 significant digits so repeated runs are byte-identical.

use serde::Serialize;
use serde_json::ser::Formatter;

struct CanonicalFormatter;

impl Formatter for CanonicalFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        write!(writer, "{:.16e}", value)
    }

    fn write_f32<W>(&mut self, writer: &mut W, value: f32) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        write!(writer, "{:.16e}", value)
    }
}

/// Serializes to the canonical byte-stable JSON form.
pub fn to_canonical_json<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, CanonicalFormatter);
    value.serialize(&mut ser).expect("in-memory serialization cannot fail");
    String::from_utf8(out).expect("serde_json emits utf-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_carry_17_significant_digits() {
        let json = to_canonical_json(&vec![0.5f64, 1.0 / 3.0]);
        assert_eq!(json, "[5.0000000000000000e-1,3.3333333333333331e-1]");
    }

    #[test]
    fn integers_stay_plain() {
        #[derive(serde::Serialize)]
        struct T {
            n: u64,
            x: f64,
        }
        let json = to_canonical_json(&T { n: 42, x: 2.0 });
        assert_eq!(json, "{\"n\":42,\"x\":2.0000000000000000e0}");
    }
}
