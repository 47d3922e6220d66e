//! Plain-text map files: an ASCII PGM (`P2`) image plus a small key/value
//! sidecar.
//!
//! Image pixels: `0` is occupied, `255` is free; on read any value below 128
//! counts as occupied. The first image row is the top of the map (largest
//! y), matching the usual image orientation.
//!
//! Sidecar (one `key: value` per line, `#` starts a comment):
//!
//! ```text
//! image: room.pgm
//! resolution: 0.05
//! origin: [-1.0, -2.5]
//! ```
//!
//! `image` is resolved relative to the sidecar's directory; `origin` is the
//! map coordinate of the lower-left corner of the bottom-left pixel.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::grid::OccupancyGrid;
use crate::error::{Error, Result};

pub const OCCUPIED_BELOW: u32 = 128;

/// Contents of the sidecar file.
#[derive(Debug, Clone, PartialEq)]
pub struct MapMeta {
    pub image: PathBuf,
    pub resolution: f64,
    pub origin: [f64; 2],
}

fn strip_comment(line: &str) -> &str {
    line.split('#').next().unwrap_or("").trim()
}

pub fn parse_meta(text: &str) -> Result<MapMeta> {
    let ctx = |line: usize| format!("map sidecar line {line}");
    let (mut image, mut resolution, mut origin) = (None, None, None);
    for (i, raw) in text.lines().enumerate() {
        let line = strip_comment(raw);
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once(':')
            .ok_or_else(|| Error::format(ctx(i + 1), "expected `key: value`"))?;
        let value = value.trim();
        match key.trim() {
            "image" => image = Some(PathBuf::from(value.trim_matches('"'))),
            "resolution" => {
                resolution = Some(
                    value
                        .parse::<f64>()
                        .map_err(|e| Error::format(ctx(i + 1), format!("resolution: {e}")))?,
                )
            }
            "origin" => {
                let inner = value
                    .strip_prefix('[')
                    .and_then(|v| v.strip_suffix(']'))
                    .ok_or_else(|| Error::format(ctx(i + 1), "origin must look like `[x, y]`"))?;
                let parts: Vec<f64> = inner
                    .split(',')
                    .map(|p| p.trim().parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| Error::format(ctx(i + 1), format!("origin: {e}")))?;
                // A third (yaw) component is tolerated when it is zero.
                match parts[..] {
                    [x, y] => origin = Some([x, y]),
                    [x, y, yaw] if yaw == 0.0 => origin = Some([x, y]),
                    _ => return Err(Error::format(ctx(i + 1), "origin must have two components")),
                }
            }
            other => return Err(Error::format(ctx(i + 1), format!("unknown key `{other}`"))),
        }
    }
    let missing = |k: &str| Error::format("map sidecar", format!("missing key `{k}`"));
    let resolution = resolution.ok_or_else(|| missing("resolution"))?;
    if !(resolution > 0.0) || !resolution.is_finite() {
        return Err(Error::format("map sidecar", "resolution must be positive"));
    }
    Ok(MapMeta {
        image: image.ok_or_else(|| missing("image"))?,
        resolution,
        origin: origin.ok_or_else(|| missing("origin"))?,
    })
}

/// Parses a `P2` image into `(width, height, occupied)` with row 0 at the
/// bottom.
pub fn parse_pgm(text: &str) -> Result<(usize, usize, Vec<bool>)> {
    let mut tokens = text.lines().flat_map(|l| strip_comment(l).split_whitespace());
    let mut next = |what: &str| {
        tokens
            .next()
            .ok_or_else(|| Error::format("pgm", format!("unexpected end of file reading {what}")))
    };
    if next("magic")? != "P2" {
        return Err(Error::format("pgm", "expected plain `P2` magic"));
    }
    let mut num = |what: &str| -> Result<u32> {
        let tok = next(what)?;
        tok.parse::<u32>()
            .map_err(|_| Error::format("pgm", format!("{what}: `{tok}` is not a non-negative integer")))
    };
    let width = num("width")? as usize;
    let height = num("height")? as usize;
    let maxval = num("maxval")?;
    if width == 0 || height == 0 || maxval == 0 {
        return Err(Error::format("pgm", "width, height and maxval must be positive"));
    }
    let mut occupied = vec![false; width * height];
    for row in 0..height {
        for col in 0..width {
            let v = num(&format!("pixel (row {row}, col {col})"))?;
            if v > maxval {
                return Err(Error::format("pgm", format!("pixel (row {row}, col {col}) exceeds maxval")));
            }
            let iy = height - 1 - row;
            occupied[iy * width + col] = v < OCCUPIED_BELOW;
        }
    }
    if let Some(extra) = tokens.next() {
        return Err(Error::format("pgm", format!("trailing data `{extra}` after pixels")));
    }
    Ok((width, height, occupied))
}

/// Loads a grid from a sidecar path.
pub fn load_map(sidecar: &Path) -> Result<OccupancyGrid> {
    let text = std::fs::read_to_string(sidecar).map_err(|e| Error::io(sidecar, e))?;
    let meta = parse_meta(&text)?;
    let image = sidecar.parent().unwrap_or(Path::new(".")).join(&meta.image);
    let pgm = std::fs::read_to_string(&image).map_err(|e| Error::io(&image, e))?;
    let (w, h, occupied) = parse_pgm(&pgm)?;
    OccupancyGrid::from_cells(w, h, meta.resolution, meta.origin, occupied)
}

pub fn format_pgm(grid: &OccupancyGrid) -> String {
    let mut out = format!("P2\n{} {}\n255\n", grid.width(), grid.height());
    for iy in (0..grid.height()).rev() {
        let row: Vec<&str> = (0..grid.width())
            .map(|ix| if grid.is_occupied(ix, iy) { "0" } else { "255" })
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn format_meta(meta: &MapMeta) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "image: {}", meta.image.display());
    let _ = writeln!(out, "resolution: {}", meta.resolution);
    let _ = writeln!(out, "origin: [{}, {}]", meta.origin[0], meta.origin[1]);
    out
}

/// Writes `<stem>.pgm` and `<stem>.yaml` into `dir` and returns the sidecar path.
pub fn save_map(grid: &OccupancyGrid, dir: &Path, stem: &str) -> Result<PathBuf> {
    let image = PathBuf::from(format!("{stem}.pgm"));
    let sidecar = dir.join(format!("{stem}.yaml"));
    let meta = MapMeta {
        image: image.clone(),
        resolution: grid.resolution(),
        origin: grid.origin(),
    };
    let image_path = dir.join(&image);
    std::fs::write(&image_path, format_pgm(grid)).map_err(|e| Error::io(&image_path, e))?;
    std::fs::write(&sidecar, format_meta(&meta)).map_err(|e| Error::io(&sidecar, e))?;
    Ok(sidecar)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_top_row_is_max_y() {
        let (w, h, occ) = parse_pgm("P2\n# demo\n3 2\n255\n0 255 255\n255 255 10\n").unwrap();
        assert_eq!((w, h), (3, 2));
        // Bottom row first in memory.
        assert_eq!(occ, vec![false, false, true, true, false, false]);
    }

    #[test]
    fn pgm_errors_are_specific() {
        assert!(parse_pgm("P5\n1 1\n255\n0\n").is_err());
        assert!(parse_pgm("P2\n2 1\n255\n0\n").is_err());
        assert!(parse_pgm("P2\n1 1\n255\n300\n").is_err());
        assert!(parse_pgm("P2\n1 1\n255\n0 0\n").is_err());
    }

    #[test]
    fn meta_parsing() {
        let m = parse_meta("image: a.pgm\nresolution: 0.05 # m\norigin: [-1.5, 2, 0]\n").unwrap();
        assert_eq!(m.image, PathBuf::from("a.pgm"));
        assert_eq!(m.resolution, 0.05);
        assert_eq!(m.origin, [-1.5, 2.0]);
        assert!(parse_meta("image: a.pgm\norigin: [0, 0]\n").is_err());
        assert!(parse_meta("image: a.pgm\nresolution: 1\norigin: [0, 0]\nfoo: 1\n").is_err());
    }

    #[test]
    fn save_and_load_round_trip() {
        let mut g = OccupancyGrid::new(12, 7, 0.25, [-1.0, 0.5]).unwrap();
        g.fill_rect(0.0, 1.0, 0.6, 1.4);
        let dir = tempfile::tempdir().unwrap();
        let sidecar = save_map(&g, dir.path(), "room").unwrap();
        let back = load_map(&sidecar).unwrap();
        assert_eq!(back.width(), 12);
        assert_eq!(back.origin(), [-1.0, 0.5]);
        assert_eq!(back.occupied_cells().collect::<Vec<_>>(), g.occupied_cells().collect::<Vec<_>>());
    }
}
