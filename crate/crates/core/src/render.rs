//! Rasters of the invariant function over a window of the billiard table.

use alloc::vec::Vec;

use nalgebra::DVector;

use crate::billiard::{SectionLift, Table};
use crate::interval::Interval;
use crate::invariant::{InvariantFunction, TorusPoint};

/// Axis-aligned rectangle in table coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlaneWindow {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl PlaneWindow {
    /// Pixel grid size at `resolution` pixels per unit.
    pub fn size(&self, resolution: f64) -> (usize, usize) {
        let w = libm::round((self.x1 - self.x0) * resolution).max(1.0) as usize;
        let h = libm::round((self.y1 - self.y0) * resolution).max(1.0) as usize;
        (w, h)
    }

    /// Center of pixel `(col, row)`; row 0 is the top of the window.
    pub fn center(&self, resolution: f64, col: usize, row: usize) -> (f64, f64) {
        let x = self.x0 + (2 * col + 1) as f64 / (2.0 * resolution);
        let y = self.y1 - (2 * row + 1) as f64 / (2.0 * resolution);
        (x, y)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum RenderMode {
    /// Coordinates of `h_hat` in the fundamental domain, for a cyclic palette.
    TorusColor,
    /// Marks pixels whose enclosure meets `z + Lambda`, with `z` widened by `tol`.
    LevelSet { z: Vec<f64>, tol: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Pixel {
    Obstacle,
    Undetermined,
    Level(bool),
    /// Lattice coordinates in `[0, 1)^d` and the enclosure width.
    Torus(Vec<f64>, f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RenderSettings {
    pub window: PlaneWindow,
    pub resolution: f64,
    pub depth: usize,
    /// Sign pattern of the table direction `(+-slope, +-1)`.
    pub signs: (i8, i8),
    pub mode: RenderMode,
    /// Retry undetermined pixels at four sub-pixel points.
    pub supersample: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InvariantRaster {
    pub settings: RenderSettings,
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<Pixel>,
    pub max_width: f64,
}

impl InvariantRaster {
    pub fn count(&self, pred: impl Fn(&Pixel) -> bool) -> usize {
        self.pixels.iter().filter(|p| pred(p)).count()
    }

    pub fn marked_fraction(&self) -> f64 {
        self.count(|p| *p == Pixel::Level(true)) as f64 / self.pixels.len() as f64
    }
}

/// Read-only state shared by all rows of a render.
pub struct Renderer<'a> {
    pub lift: &'a SectionLift<'a>,
    pub f: &'a InvariantFunction,
    pub table: Table,
    pub settings: RenderSettings,
}

impl<'a> Renderer<'a> {
    pub fn size(&self) -> (usize, usize) {
        self.settings.window.size(self.settings.resolution)
    }

    /// Torus value of `h_hat` at a plane point, or `None` when the lift fails.
    pub fn value(&self, p: (f64, f64)) -> Option<TorusPoint> {
        let hit = self.lift.trace_fast(p, self.settings.signs).ok()?;
        let m = self.f.b.ncols();
        self.f.hat_h(hit.x, &hit.a[..m], self.settings.depth).ok()
    }

    pub fn classify(&self, p: (f64, f64)) -> Pixel {
        if self.table.margin(p.0, p.1) <= 0.0 {
            return Pixel::Obstacle;
        }
        match self.value(p) {
            None => Pixel::Undetermined,
            Some(tp) => self.paint(&tp),
        }
    }

    fn paint(&self, tp: &TorusPoint) -> Pixel {
        match &self.settings.mode {
            RenderMode::LevelSet { z, tol } => {
                let zp = TorusPoint { coords: z.iter().map(|v| Interval::around(*v, *tol)).collect() };
                Pixel::Level(self.f.same_class(tp, &zp))
            }
            RenderMode::TorusColor => {
                let inv = self.f.c.clone().try_inverse().expect("checked on construction");
                let mid = DVector::from_iterator(tp.coords.len(), tp.coords.iter().map(|c| c.mid()));
                let g = inv * mid;
                Pixel::Torus(g.iter().map(|x| x - libm::floor(*x)).collect(), tp.width())
            }
        }
    }

    pub fn row(&self, row: usize) -> Vec<Pixel> {
        let (w, _) = self.size();
        let s = &self.settings;
        (0..w)
            .map(|col| {
                let c = s.window.center(s.resolution, col, row);
                let px = self.classify(c);
                if px != Pixel::Undetermined || !s.supersample {
                    return px;
                }
                let d = 0.25 / s.resolution;
                [(-d, -d), (d, -d), (-d, d), (d, d)]
                    .into_iter()
                    .map(|(dx, dy)| self.classify((c.0 + dx, c.1 + dy)))
                    .find(|p| !matches!(p, Pixel::Undetermined | Pixel::Obstacle))
                    .unwrap_or(Pixel::Undetermined)
            })
            .collect()
    }

    /// Assembles rows rendered in any order into a raster.
    pub fn assemble(&self, rows: Vec<Vec<Pixel>>) -> InvariantRaster {
        let (width, height) = self.size();
        let pixels: Vec<Pixel> = rows.into_iter().flatten().collect();
        let max_width = pixels.iter().filter_map(|p| if let Pixel::Torus(_, w) = p { Some(*w) } else { None }).fold(0.0, f64::max);
        InvariantRaster { settings: self.settings.clone(), width, height, pixels, max_width }
    }

    pub fn render(&self) -> InvariantRaster {
        let (_, h) = self.size();
        self.assemble((0..h).map(|r| self.row(r)).collect())
    }
}
