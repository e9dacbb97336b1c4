//! Pixel CSV files: header `B1,B2,B3,B4,B5,B6[,label]`, one pixel per row.
//!
//! Rows are numbered like lines, so the header is row 1 and the first pixel
//! is row 2. Values are written in Rust's shortest round-trip notation and
//! therefore reload bit-exactly.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use pixaug_core::data::{Dataset, Label, PixelSample, Role};
use pixaug_core::{BANDS, BAND_NAMES};

use crate::error::{Error, Result};

pub const LABEL_COLUMN: &str = "label";

/// Reads a pixel file; `Role::Train` requires the label column.
pub fn read_pixels(path: &Path, role: Role) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_pixels(file, &path.display().to_string(), role)
}

pub fn parse_pixels<R: Read>(reader: R, source: &str, role: Role) -> Result<Dataset> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let parse_err = |row: u64, message: String| Error::Parse {
        path: source.to_string(),
        row,
        message,
    };
    let mut records = csv.records();
    let header = match records.next() {
        Some(rec) => rec.map_err(|e| parse_err(1, e.to_string()))?,
        None => return Err(parse_err(1, "missing header".to_string())),
    };
    let cols: Vec<&str> = header.iter().collect();
    let labelled = match cols.len() {
        n if n == BANDS => false,
        n if n == BANDS + 1 && cols[BANDS].eq_ignore_ascii_case(LABEL_COLUMN) => true,
        _ => {
            return Err(parse_err(
                1,
                format!("expected header B1,B2,B3,B4,B5,B6[,label], found {}", cols.join(",")),
            ))
        }
    };
    if let Some((i, c)) = cols.iter().take(BANDS).enumerate().find(|(i, c)| !c.eq_ignore_ascii_case(BAND_NAMES[*i])) {
        return Err(parse_err(1, format!("column {} must be {}, found {c:?}", i + 1, BAND_NAMES[i])));
    }
    if role == Role::Train && !labelled {
        return Err(parse_err(1, "training data needs a label column".to_string()));
    }

    let width = cols.len();
    let mut samples = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| {
            let row = e.position().map_or(0, |p| p.line());
            parse_err(row, e.to_string())
        })?;
        let row = rec.position().map_or(0, |p| p.line());
        if rec.len() != width {
            return Err(parse_err(row, format!("expected {width} columns, found {}", rec.len())));
        }
        let mut bands = [0.0; BANDS];
        for (b, v) in bands.iter_mut().enumerate() {
            let cell = &rec[b];
            *v = cell
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| parse_err(row, format!("{} value {cell:?} is not a finite number", BAND_NAMES[b])))?;
        }
        let label = if labelled {
            let cell = &rec[BANDS];
            Some(Label::parse(cell).ok_or_else(|| {
                parse_err(row, format!("unknown label {cell:?} (expected builtup or nonbuiltup)"))
            })?)
        } else {
            None
        };
        samples.push(PixelSample::new(bands, label).map_err(|e| parse_err(row, e.to_string()))?);
    }
    Ok(Dataset::new(samples, role)?)
}

/// Reads an unlabeled (or labeled, labels dropped) file as plain rows.
pub fn read_rows(path: &Path) -> Result<Vec<[f64; BANDS]>> {
    Ok(read_pixels(path, Role::Test)?.rows())
}

/// Writes samples, with the label column only when every sample has one.
pub fn write_pixels<W: Write>(writer: W, samples: &[PixelSample]) -> std::io::Result<()> {
    let labelled = !samples.is_empty() && samples.iter().all(|s| s.label.is_some());
    let mut out = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = BAND_NAMES.to_vec();
    if labelled {
        header.push(LABEL_COLUMN);
    }
    out.write_record(&header)?;
    for s in samples {
        let mut rec: Vec<String> = s.bands.iter().map(|v| v.to_string()).collect();
        if let (true, Some(l)) = (labelled, s.label) {
            rec.push(l.as_str().to_string());
        }
        out.write_record(&rec)?;
    }
    out.flush()
}

pub fn write_rows<W: Write, R: AsRef<[f64]>>(writer: W, rows: &[R]) -> std::io::Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(BAND_NAMES)?;
    for r in rows {
        out.write_record(r.as_ref().iter().map(|v| v.to_string()))?;
    }
    out.flush()
}

pub fn save_pixels(path: &Path, samples: &[PixelSample]) -> Result<()> {
    crate::fsutil::write_with(path, |w| write_pixels(w, samples))
}

pub fn save_rows<R: AsRef<[f64]>>(path: &Path, rows: &[R]) -> Result<()> {
    crate::fsutil::write_with(path, |w| write_rows(w, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str, role: Role) -> Result<Dataset> {
        parse_pixels(text.as_bytes(), "mem", role)
    }

    #[test]
    fn three_valid_rows() {
        let ds = parse(
            "B1,B2,B3,B4,B5,B6,label\n1,2,3,4,5,6,builtup\n1,2,3,4,5,7,nonbuiltup\n0.5,2,3,4,5,6,builtup\n",
            Role::Train,
        )
        .unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.count(Label::BuiltUp), 2);
        assert_eq!(ds.samples[2].bands[0], 0.5);
    }

    #[test]
    fn short_row_names_row_two() {
        let err = parse("B1,B2,B3,B4,B5,B6\n1,2,3,4,5\n", Role::Test).unwrap_err();
        match &err {
            Error::Parse { row, .. } => assert_eq!(*row, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(err.to_string().contains("row 2"), "{err}");
    }

    #[test]
    fn bad_number_and_label_are_reported() {
        let e = parse("B1,B2,B3,B4,B5,B6,label\n1,2,3,4,5,6,builtup\n1,x,3,4,5,6,builtup\n", Role::Train).unwrap_err();
        assert!(e.to_string().contains("row 3") && e.to_string().contains("B2"), "{e}");
        let e = parse("B1,B2,B3,B4,B5,B6,label\n1,2,3,4,5,6,water\n", Role::Train).unwrap_err();
        assert!(e.to_string().contains("unknown label"), "{e}");
        let e = parse("B1,B2,B3,B4,B5,B6\n1,2,3,4,5,NaN\n", Role::Test).unwrap_err();
        assert!(e.to_string().contains("B6"), "{e}");
    }

    #[test]
    fn header_is_checked() {
        assert!(parse("B1,B2,B3,B4,B6,B5\n1,2,3,4,5,6\n", Role::Test).is_err());
        assert!(parse("", Role::Test).is_err());
        let e = parse("B1,B2,B3,B4,B5,B6\n1,2,3,4,5,6\n", Role::Train).unwrap_err();
        assert!(e.to_string().contains("label"), "{e}");
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let vals = [0.1, 1.0 / 3.0, -2.5e-300, 1e300, 123456789.123456789, f64::MIN_POSITIVE];
        let samples = vec![
            PixelSample::new(vals, Some(Label::BuiltUp)).unwrap(),
            PixelSample::new([-0.0, 7.0, 8.0, 9.0, 1e-7, 2.0f64.sqrt()], Some(Label::NonBuiltUp)).unwrap(),
        ];
        let mut buf = Vec::new();
        write_pixels(&mut buf, &samples).unwrap();
        let back = parse(std::str::from_utf8(&buf).unwrap(), Role::Train).unwrap();
        for (a, b) in samples.iter().zip(&back.samples) {
            for (x, y) in a.bands.iter().zip(&b.bands) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
            assert_eq!(a.label, b.label);
        }
    }
}
