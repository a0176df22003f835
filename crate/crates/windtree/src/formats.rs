//! Netpbm rasters, sidecar metadata, CSV polylines and the record catalog.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{ExtendedColorType, ImageEncoder};
use windtree_core::billiard::Trajectory;
use windtree_core::render::{InvariantRaster, Pixel, RenderMode};

use crate::error::CliError;

const PALETTE: &str = include_str!("palette.txt");

/// Cyclic hue table, 256 RGB entries.
pub fn palette() -> Vec<[u8; 3]> {
    PALETTE
        .lines()
        .map(|l| {
            let v: Vec<u8> = l.split_whitespace().map(|x| x.parse().expect("palette entry")).collect();
            [v[0], v[1], v[2]]
        })
        .collect()
}

pub const MARKED: u8 = 0;
pub const UNMARKED: u8 = 255;
pub const OBSTACLE: u8 = 96;
pub const UNDETERMINED: u8 = 176;

/// Gray levels for a level-set mask, or RGB triples for torus colors.
pub fn raster_bytes(r: &InvariantRaster) -> (Vec<u8>, bool) {
    match r.settings.mode {
        RenderMode::LevelSet { .. } => {
            let px = r
                .pixels
                .iter()
                .map(|p| match p {
                    Pixel::Level(true) => MARKED,
                    Pixel::Obstacle => OBSTACLE,
                    Pixel::Undetermined => UNDETERMINED,
                    _ => UNMARKED,
                })
                .collect();
            (px, false)
        }
        RenderMode::TorusColor => {
            let pal = palette();
            let mut out = Vec::with_capacity(3 * r.pixels.len());
            for p in &r.pixels {
                let rgb = match p {
                    Pixel::Torus(c, _) => {
                        let base = pal[((c[0] * 256.0) as usize).min(255)];
                        // A second coordinate sets the brightness.
                        let v = c.get(1).map_or(1.0, |y| 0.35 + 0.65 * y);
                        base.map(|x| (x as f64 * v).round() as u8)
                    }
                    Pixel::Obstacle => [OBSTACLE; 3],
                    _ => [UNMARKED; 3],
                };
                out.extend_from_slice(&rgb);
            }
            (out, true)
        }
    }
}

pub fn write_raster(path: &Path, r: &InvariantRaster) -> Result<(), CliError> {
    let (bytes, color) = raster_bytes(r);
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    let (sub, ct) = if color {
        (PnmSubtype::Pixmap(SampleEncoding::Binary), ExtendedColorType::Rgb8)
    } else {
        (PnmSubtype::Graymap(SampleEncoding::Binary), ExtendedColorType::L8)
    };
    PnmEncoder::new(file)
        .with_subtype(sub)
        .write_image(&bytes, r.width as u32, r.height as u32, ct)
        .map_err(|e| CliError::Io(std::io::Error::other(e)))
}

pub fn raster_metadata(r: &InvariantRaster, provenance: &str) -> String {
    let s = &r.settings;
    let w = &s.window;
    let mut out = String::new();
    let _ = writeln!(out, "window = {} {} {} {}", w.x0, w.y0, w.x1, w.y1);
    let _ = writeln!(out, "resolution = {}", s.resolution);
    let _ = writeln!(out, "size = {} {}", r.width, r.height);
    let _ = writeln!(out, "depth = {}", s.depth);
    let _ = writeln!(out, "signs = {} {}", s.signs.0, s.signs.1);
    match &s.mode {
        RenderMode::LevelSet { z, tol } => {
            let zs: Vec<String> = z.iter().map(|v| format!("{v:e}")).collect();
            let _ = writeln!(out, "mode = level");
            let _ = writeln!(out, "z = {}", zs.join(" "));
            let _ = writeln!(out, "tol = {tol:e}");
            let _ = writeln!(out, "rule = marked when the enclosure of h_hat meets z + Lambda widened by tol (superset of the level set)");
            let _ = writeln!(out, "marked = {}", r.count(|p| *p == Pixel::Level(true)));
        }
        RenderMode::TorusColor => {
            let _ = writeln!(out, "mode = torus");
        }
    }
    let _ = writeln!(out, "max_enclosure_width = {:e}", r.max_width);
    let _ = writeln!(out, "obstacle = {}", r.count(|p| *p == Pixel::Obstacle));
    let _ = writeln!(out, "undetermined = {}", r.count(|p| *p == Pixel::Undetermined));
    let _ = writeln!(out, "supersample = {}", s.supersample);
    let _ = writeln!(out, "record = {provenance}");
    out
}

/// Polyline with arc length, position and outgoing velocity per vertex.
pub fn write_trajectory_csv<W: Write>(w: W, t: &Trajectory) -> Result<(), CliError> {
    let mut wr = csv::Writer::from_writer(w);
    let csv_err = |e: csv::Error| CliError::Io(std::io::Error::other(e));
    wr.write_record(["s", "x", "y", "vx", "vy"]).map_err(csv_err)?;
    for (k, p) in t.points.iter().enumerate() {
        let v = t.velocities.get(k).or(t.velocities.last()).copied().unwrap_or((0.0, 0.0));
        wr.write_record([t.times[k], p.0, p.1, v.0, v.1].map(|x| format!("{x:e}"))).map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

/// Cover intervals as CSV rows `k,lo,hi`.
pub fn write_cover_csv<W: Write>(w: W, rows: &[(usize, f64, f64)]) -> Result<(), CliError> {
    let mut wr = csv::Writer::from_writer(w);
    let csv_err = |e: csv::Error| CliError::Io(std::io::Error::other(e));
    wr.write_record(["k", "lo", "hi"]).map_err(csv_err)?;
    for (k, lo, hi) in rows {
        wr.write_record([k.to_string(), format!("{lo:e}"), format!("{hi:e}")]).map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

/// One catalog line: a Rauzy loop at a permutation, optionally from a wind-tree record.
#[derive(Clone, Debug, PartialEq)]
pub struct CatalogEntry {
    pub top: Vec<usize>,
    pub bot: Vec<usize>,
    pub word: String,
    pub rho: f64,
    pub record: Option<String>,
}

fn join(v: &[usize]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl CatalogEntry {
    pub fn to_line(&self) -> String {
        let mut s = format!("top={} bot={} word={} rho={:.15e}", join(&self.top), join(&self.bot), self.word, self.rho);
        if let Some(r) = &self.record {
            let _ = write!(s, " record={r}");
        }
        s
    }

    pub fn parse(line: &str) -> Result<Self, CliError> {
        let bad = || CliError::Config(format!("bad catalog line: {line}"));
        let mut e = CatalogEntry { top: vec![], bot: vec![], word: String::new(), rho: f64::NAN, record: None };
        for tok in line.split_whitespace() {
            let (k, v) = tok.split_once('=').ok_or_else(bad)?;
            let ints = || v.split(',').map(|x| x.parse::<usize>().map_err(|_| bad())).collect::<Result<Vec<_>, _>>();
            match k {
                "top" => e.top = ints()?,
                "bot" => e.bot = ints()?,
                "word" => e.word = v.to_string(),
                "rho" => e.rho = v.parse().map_err(|_| bad())?,
                "record" => e.record = Some(v.to_string()),
                _ => return Err(bad()),
            }
        }
        if e.top.is_empty() || e.word.is_empty() || !e.rho.is_finite() {
            return Err(bad());
        }
        Ok(e)
    }
}
