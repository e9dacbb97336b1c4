//! Scene files and classified rasters.
//!
//! A scene is one CSV with header `row,col,B1,B2,B3,B4,B5,B6` and one line
//! per pixel, in any order. The grid size is inferred from the largest row
//! and column indices and every cell must appear exactly once. The result is
//! a plain PGM (`P2`, maxval 1; 1 = built-up) plus a JSON sidecar.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use pixaug_core::data::SceneGrid;
use pixaug_core::{BANDS, BAND_NAMES};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SCENE_SCHEMA: &str = "scene.v1";
/// Plain PGM lines should stay under 70 characters.
const VALUES_PER_LINE: usize = 32;

pub fn read_scene(path: &Path) -> Result<SceneGrid> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_scene(file, &path.display().to_string())
}

pub fn parse_scene<R: Read>(reader: R, source: &str) -> Result<SceneGrid> {
    let err = |row: u64, message: String| Error::Parse {
        path: source.to_string(),
        row,
        message,
    };
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut records = csv.records();
    let header = records
        .next()
        .ok_or_else(|| err(1, "missing header".to_string()))?
        .map_err(|e| err(1, e.to_string()))?;
    let expected: Vec<&str> = ["row", "col"].into_iter().chain(BAND_NAMES).collect();
    if header.len() != expected.len()
        || !header.iter().zip(&expected).all(|(a, b)| a.eq_ignore_ascii_case(b))
    {
        return Err(err(1, format!("expected header {}", expected.join(","))));
    }

    let mut cells: Vec<(usize, usize, [f64; BANDS], u64)> = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| err(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != expected.len() {
            return Err(err(line, format!("expected {} columns, found {}", expected.len(), rec.len())));
        }
        let index = |i: usize| {
            rec[i]
                .parse::<usize>()
                .map_err(|_| err(line, format!("{} {:?} is not a non-negative integer", expected[i], &rec[i])))
        };
        let (r, c) = (index(0)?, index(1)?);
        let mut bands = [0.0; BANDS];
        for (b, v) in bands.iter_mut().enumerate() {
            *v = rec[b + 2]
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| err(line, format!("{} value {:?} is not a finite number", BAND_NAMES[b], &rec[b + 2])))?;
        }
        cells.push((r, c, bands, line));
    }
    if cells.is_empty() {
        return Err(err(1, "scene has no pixels".to_string()));
    }
    let height = cells.iter().map(|c| c.0).max().unwrap_or(0) + 1;
    let width = cells.iter().map(|c| c.1).max().unwrap_or(0) + 1;
    let area = width
        .checked_mul(height)
        .filter(|&a| a == cells.len())
        .ok_or_else(|| err(1, format!("{} pixels cannot fill a {height}x{width} grid", cells.len())))?;
    let mut seen = vec![false; area];
    let mut planes: [Vec<f64>; BANDS] = std::array::from_fn(|_| vec![0.0; area]);
    for (r, c, bands, line) in cells {
        let i = r * width + c;
        if std::mem::replace(&mut seen[i], true) {
            return Err(err(line, format!("pixel ({r}, {c}) appears twice")));
        }
        for (plane, v) in planes.iter_mut().zip(bands) {
            plane[i] = v;
        }
    }
    Ok(SceneGrid::new(width, height, planes)?)
}

/// Writes a scene in the CSV layout read by [`parse_scene`], row-major.
pub fn write_scene<W: Write>(writer: W, grid: &SceneGrid) -> std::io::Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    let header: Vec<&str> = ["row", "col"].into_iter().chain(BAND_NAMES).collect();
    out.write_record(&header)?;
    for i in 0..grid.width * grid.height {
        let mut rec = vec![(i / grid.width).to_string(), (i % grid.width).to_string()];
        rec.extend(grid.pixel(i).iter().map(|v| v.to_string()));
        out.write_record(&rec)?;
    }
    out.flush()
}

/// Plain PGM with maxval 1.
pub fn write_pgm<W: Write>(mut w: W, width: usize, height: usize, labels: &[u8]) -> std::io::Result<()> {
    assert_eq!(labels.len(), width * height, "raster size");
    writeln!(w, "P2\n{width} {height}\n1")?;
    for row in labels.chunks(width.max(1)) {
        for chunk in row.chunks(VALUES_PER_LINE) {
            let line: Vec<String> = chunk.iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
    }
    Ok(())
}

/// Reads back a raster written by [`write_pgm`].
pub fn parse_pgm(text: &str) -> Option<(usize, usize, Vec<u8>)> {
    let mut tokens = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(str::split_whitespace);
    if tokens.next()? != "P2" {
        return None;
    }
    let mut num = || tokens.next()?.parse::<usize>().ok();
    let (w, h, max) = (num()?, num()?, num()?);
    if max != 1 {
        return None;
    }
    let px: Option<Vec<u8>> = (0..w * h).map(|_| num().filter(|&v| v <= 1).map(|v| v as u8)).collect();
    Some((w, h, px?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSidecar {
    pub schema_version: String,
    pub width: usize,
    pub height: usize,
    pub threshold: f64,
    pub builtup_pixels: usize,
    pub nonbuiltup_pixels: usize,
    pub raster: String,
}

impl SceneSidecar {
    pub fn new(width: usize, height: usize, threshold: f64, labels: &[u8], raster: &str) -> Self {
        let built = labels.iter().filter(|&&v| v == 1).count();
        SceneSidecar {
            schema_version: SCENE_SCHEMA.to_string(),
            width,
            height,
            threshold,
            builtup_pixels: built,
            nonbuiltup_pixels: labels.len() - built,
            raster: raster.to_string(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scene_round_trip_any_order() {
        let text = "row,col,B1,B2,B3,B4,B5,B6\n1,0,5,5,5,5,5,5\n0,1,2,2,2,2,2,2\n0,0,1,1,1,1,1,1\n1,1,7,7,7,7,7,8\n";
        let g = parse_scene(text.as_bytes(), "mem").unwrap();
        assert_eq!((g.width, g.height), (2, 2));
        assert_eq!(g.pixel(0), [1.0; 6]);
        assert_eq!(g.pixel(2), [5.0; 6]);
        assert_eq!(g.pixel(3)[5], 8.0);
        let mut buf = Vec::new();
        write_scene(&mut buf, &g).unwrap();
        assert_eq!(parse_scene(&buf[..], "mem").unwrap(), g);
    }

    #[test]
    fn scene_errors() {
        let dup = "row,col,B1,B2,B3,B4,B5,B6\n0,0,1,1,1,1,1,1\n0,0,1,1,1,1,1,1\n";
        assert!(parse_scene(dup.as_bytes(), "m").is_err());
        let hole = "row,col,B1,B2,B3,B4,B5,B6\n0,0,1,1,1,1,1,1\n1,1,1,1,1,1,1,1\n";
        assert!(parse_scene(hole.as_bytes(), "m").is_err());
        let e = parse_scene("row,col,B1,B2,B3,B4,B5,B6\n0,x,1,1,1,1,1,1\n".as_bytes(), "m").unwrap_err();
        assert!(e.to_string().contains("row 2"), "{e}");
        assert!(parse_scene("row,col,B1\n".as_bytes(), "m").is_err());
    }

    #[test]
    fn pgm_round_trip_and_line_length() {
        let labels: Vec<u8> = (0..100 * 3).map(|i| (i % 3 == 0) as u8).collect();
        let mut buf = Vec::new();
        write_pgm(&mut buf, 100, 3, &labels).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("P2\n100 3\n1\n"));
        assert!(text.lines().all(|l| l.len() <= 70));
        assert_eq!(parse_pgm(&text), Some((100, 3, labels)));
    }
}
