//! Number formatting shared by every CSV writer in the crate.
//!
//! Reals are written in scientific notation with 17 significant digits so
//! that files are byte-stable and round-trip exactly through `f64`.

/// Formats a real with 17 significant digits, e.g. `1.0000000000000000e0`.
pub fn real(x: f64) -> String {
    format!("{x:.16e}")
}

/// Joins already-formatted fields into one LF-terminated line.
pub fn line<I, S>(fields: I) -> String
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut out = String::new();
    for (i, f) in fields.into_iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(f.as_ref());
    }
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        let x = 0.1_f64 + 0.2;
        let s = real(x);
        assert_eq!(s.parse::<f64>().unwrap(), x);
        assert_eq!(real(1.0), "1.0000000000000000e0");
        assert_eq!(real(-0.25), "-2.5000000000000000e-1");
    }

    #[test]
    fn line_is_lf_terminated() {
        assert_eq!(line(["a", "b", "c"]), "a,b,c\n");
    }
}
