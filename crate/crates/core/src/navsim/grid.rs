use crate::error::{Error, Result};

/// Occupancy grid with a precomputed inflated layer.
///
/// Cell `(ix, iy)` covers `[origin + ix * res, origin + (ix + 1) * res)` along
/// x (same for y). A cell is inflated when its centre lies within
/// `inflation_radius` of an occupied cell centre.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    width: usize,
    height: usize,
    resolution: f64,
    origin: [f64; 2],
    occupied: Vec<bool>,
    inflation_radius: f64,
    inflated: Vec<bool>,
}

impl OccupancyGrid {
    pub fn new(width: usize, height: usize, resolution: f64, origin: [f64; 2]) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("grid dimensions must be positive"));
        }
        if !(resolution > 0.0) || !resolution.is_finite() {
            return Err(Error::invalid(format!("grid resolution must be positive, got {resolution}")));
        }
        Ok(Self {
            width,
            height,
            resolution,
            origin,
            occupied: vec![false; width * height],
            inflation_radius: 0.0,
            inflated: vec![false; width * height],
        })
    }

    /// Builds a grid from a row-major occupancy mask (row 0 is the lowest y).
    pub fn from_cells(
        width: usize,
        height: usize,
        resolution: f64,
        origin: [f64; 2],
        occupied: Vec<bool>,
    ) -> Result<Self> {
        let mut g = Self::new(width, height, resolution, origin)?;
        if occupied.len() != width * height {
            return Err(Error::dim("grid cells", width * height, occupied.len()));
        }
        g.occupied = occupied;
        g.refresh_inflation();
        Ok(g)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }

    pub fn inflation_radius(&self) -> f64 {
        self.inflation_radius
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.width + ix
    }

    pub fn world_to_cell(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let fx = ((x - self.origin[0]) / self.resolution).floor();
        let fy = ((y - self.origin[1]) / self.resolution).floor();
        if fx < 0.0 || fy < 0.0 || fx >= self.width as f64 || fy >= self.height as f64 {
            return None;
        }
        Some((fx as usize, fy as usize))
    }

    pub fn cell_center(&self, ix: usize, iy: usize) -> [f64; 2] {
        [
            self.origin[0] + (ix as f64 + 0.5) * self.resolution,
            self.origin[1] + (iy as f64 + 0.5) * self.resolution,
        ]
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        self.world_to_cell(x, y).is_some()
    }

    pub fn is_occupied(&self, ix: usize, iy: usize) -> bool {
        self.occupied[self.index(ix, iy)]
    }

    /// Occupied or inflated.
    pub fn is_blocked(&self, ix: usize, iy: usize) -> bool {
        self.inflated[self.index(ix, iy)]
    }

    /// True when the world point falls in an occupied cell; outside counts as occupied.
    pub fn occupied_at(&self, x: f64, y: f64) -> bool {
        self.world_to_cell(x, y).is_none_or(|(ix, iy)| self.is_occupied(ix, iy))
    }

    pub fn blocked_at(&self, x: f64, y: f64) -> bool {
        self.world_to_cell(x, y).is_none_or(|(ix, iy)| self.is_blocked(ix, iy))
    }

    pub fn occupied_cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.occupied
            .iter()
            .enumerate()
            .filter(|(_, &o)| o)
            .map(|(i, _)| (i % self.width, i / self.width))
    }

    pub fn set_occupied(&mut self, ix: usize, iy: usize, value: bool) {
        let i = self.index(ix, iy);
        self.occupied[i] = value;
        self.refresh_inflation();
    }

    /// Marks every cell whose centre lies in the axis-aligned rectangle.
    pub fn fill_rect(&mut self, x0: f64, y0: f64, x1: f64, y1: f64) {
        let (lo_x, hi_x) = (x0.min(x1), x0.max(x1));
        let (lo_y, hi_y) = (y0.min(y1), y0.max(y1));
        for iy in 0..self.height {
            for ix in 0..self.width {
                let c = self.cell_center(ix, iy);
                if c[0] >= lo_x && c[0] <= hi_x && c[1] >= lo_y && c[1] <= hi_y {
                    let i = self.index(ix, iy);
                    self.occupied[i] = true;
                }
            }
        }
        self.refresh_inflation();
    }

    /// Marks every cell whose centre lies within `r` of `(cx, cy)`.
    pub fn fill_circle(&mut self, cx: f64, cy: f64, r: f64) {
        self.for_cells_near(cx, cy, r, |grid, i| grid.occupied[i] = true);
        self.refresh_inflation();
    }

    pub fn set_inflation(&mut self, radius: f64) {
        self.inflation_radius = radius.max(0.0);
        self.refresh_inflation();
    }

    fn for_cells_near(&mut self, cx: f64, cy: f64, r: f64, mut f: impl FnMut(&mut Self, usize)) {
        let res = self.resolution;
        let lo_x = (((cx - r - self.origin[0]) / res).floor().max(0.0)) as usize;
        let lo_y = (((cy - r - self.origin[1]) / res).floor().max(0.0)) as usize;
        let hi_x = (((cx + r - self.origin[0]) / res).ceil().max(0.0) as usize).min(self.width);
        let hi_y = (((cy + r - self.origin[1]) / res).ceil().max(0.0) as usize).min(self.height);
        for iy in lo_y..hi_y {
            for ix in lo_x..hi_x {
                let c = self.cell_center(ix, iy);
                if (c[0] - cx).hypot(c[1] - cy) <= r {
                    let i = self.index(ix, iy);
                    f(self, i);
                }
            }
        }
    }

    fn refresh_inflation(&mut self) {
        self.inflated.clone_from(&self.occupied);
        let r_cells = (self.inflation_radius / self.resolution).floor() as isize;
        if r_cells == 0 {
            return;
        }
        let offsets: Vec<(isize, isize)> = (-r_cells..=r_cells)
            .flat_map(|dy| (-r_cells..=r_cells).map(move |dx| (dx, dy)))
            .filter(|&(dx, dy)| ((dx * dx + dy * dy) as f64).sqrt() * self.resolution <= self.inflation_radius)
            .collect();
        let (w, h) = (self.width as isize, self.height as isize);
        for (ix, iy) in self.occupied_cells().collect::<Vec<_>>() {
            for &(dx, dy) in &offsets {
                let (x, y) = (ix as isize + dx, iy as isize + dy);
                if x >= 0 && y >= 0 && x < w && y < h {
                    self.inflated[(y * w + x) as usize] = true;
                }
            }
        }
    }

    /// Copy with circular obstacles blocked in the inflated layer only.
    /// Each disk is grown by the inflation radius.
    pub fn with_dynamic_obstacles(&self, obstacles: &[(f64, f64, f64)]) -> Self {
        let mut g = self.clone();
        for &(x, y, r) in obstacles {
            let reach = r + g.inflation_radius;
            g.for_cells_near(x, y, reach, |grid, i| grid.inflated[i] = true);
        }
        g
    }

    /// Euclidean distance from a point to the nearest occupied cell square.
    /// Returns `f64::INFINITY` when nothing is occupied within `search_radius`.
    pub fn distance_to_occupied(&self, x: f64, y: f64, search_radius: f64) -> f64 {
        let res = self.resolution;
        let lo_x = (((x - search_radius - self.origin[0]) / res).floor().max(0.0)) as usize;
        let lo_y = (((y - search_radius - self.origin[1]) / res).floor().max(0.0)) as usize;
        let hi_x = (((x + search_radius - self.origin[0]) / res).ceil().max(0.0) as usize).min(self.width);
        let hi_y = (((y + search_radius - self.origin[1]) / res).ceil().max(0.0) as usize).min(self.height);
        let mut best = f64::INFINITY;
        for iy in lo_y..hi_y {
            for ix in lo_x..hi_x {
                if !self.is_occupied(ix, iy) {
                    continue;
                }
                let min_x = self.origin[0] + ix as f64 * res;
                let min_y = self.origin[1] + iy as f64 * res;
                let dx = (min_x - x).max(0.0).max(x - (min_x + res));
                let dy = (min_y - y).max(0.0).max(y - (min_y + res));
                best = best.min(dx.hypot(dy));
            }
        }
        best
    }

    /// True when the straight segment crosses an occupied cell.
    pub fn segment_hits_occupied(&self, a: [f64; 2], b: [f64; 2]) -> bool {
        let len = (b[0] - a[0]).hypot(b[1] - a[1]);
        let steps = ((len / (self.resolution * 0.25)).ceil() as usize).max(1);
        (1..steps).any(|k| {
            let s = k as f64 / steps as f64;
            self.occupied_at(a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1]))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_dimensions() {
        assert!(OccupancyGrid::new(0, 4, 0.1, [0.0, 0.0]).is_err());
        assert!(OccupancyGrid::new(4, 4, 0.0, [0.0, 0.0]).is_err());
    }

    #[test]
    fn cell_mapping() {
        let g = OccupancyGrid::new(10, 5, 0.5, [-1.0, 2.0]).unwrap();
        assert_eq!(g.world_to_cell(-1.0, 2.0), Some((0, 0)));
        assert_eq!(g.world_to_cell(3.99, 4.49), Some((9, 4)));
        assert_eq!(g.world_to_cell(4.0, 3.0), None);
        assert_eq!(g.cell_center(1, 1), [-0.25, 2.75]);
    }

    #[test]
    fn inflation_contains_occupied() {
        let mut g = OccupancyGrid::new(20, 20, 0.1, [0.0, 0.0]).unwrap();
        g.set_occupied(10, 10, true);
        g.set_inflation(0.25);
        for iy in 0..20 {
            for ix in 0..20 {
                if g.is_occupied(ix, iy) {
                    assert!(g.is_blocked(ix, iy));
                }
            }
        }
        assert!(g.is_blocked(12, 10));
        assert!(!g.is_blocked(13, 10));
        assert!(g.is_blocked(11, 11));
        assert!(!g.is_blocked(12, 12));
    }

    #[test]
    fn clearance_to_cell_square() {
        let mut g = OccupancyGrid::new(20, 20, 0.1, [0.0, 0.0]).unwrap();
        g.set_occupied(10, 10, true);
        let d = g.distance_to_occupied(0.5, 1.05, 5.0);
        assert!((d - 0.5).abs() < 1e-12);
        assert_eq!(g.distance_to_occupied(0.05, 0.05, 0.2), f64::INFINITY);
    }

    #[test]
    fn dynamic_obstacles_do_not_touch_static_layer() {
        let mut g = OccupancyGrid::new(20, 20, 0.1, [0.0, 0.0]).unwrap();
        g.set_inflation(0.2);
        let d = g.with_dynamic_obstacles(&[(1.0, 1.0, 0.3)]);
        assert!(d.blocked_at(1.0, 1.0));
        assert!(d.blocked_at(1.45, 1.0));
        assert!(!d.occupied_at(1.0, 1.0));
        assert!(!g.blocked_at(1.0, 1.0));
    }
}
