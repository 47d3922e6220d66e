use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::grid::OccupancyGrid;
use crate::error::{Error, Result};

/// Circular obstacle `(x, y, radius)` in meters, e.g. a non-target person.
pub type DynamicObstacle = (f64, f64, f64);
/// Waypoints in map coordinates, starting at the query start and ending at the goal.
pub type Path = Vec<[f64; 2]>;

const NEIGHBORS: [(isize, isize); 8] = [
    (1, 0),
    (-1, 0),
    (0, 1),
    (0, -1),
    (1, 1),
    (1, -1),
    (-1, 1),
    (-1, -1),
];

#[derive(Debug, Clone, Copy, PartialEq)]
struct Node {
    f: f64,
    g: f64,
    index: usize,
}

impl Eq for Node {}

impl Ord for Node {
    // Min-heap on f, then on g (deeper first), then on index.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then_with(|| self.g.total_cmp(&other.g))
            .then_with(|| other.index.cmp(&self.index))
    }
}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn octile(a: (usize, usize), b: (usize, usize)) -> f64 {
    let dx = a.0.abs_diff(b.0) as f64;
    let dy = a.1.abs_diff(b.1) as f64;
    dx.max(dy) + (std::f64::consts::SQRT_2 - 1.0) * dx.min(dy)
}

/// Successors of a free cell with their step cost in cells. Diagonal moves
/// require both adjacent orthogonal cells to be free.
pub(crate) fn neighbors(grid: &OccupancyGrid, ix: usize, iy: usize) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
    let (w, h) = (grid.width() as isize, grid.height() as isize);
    NEIGHBORS.iter().filter_map(move |&(dx, dy)| {
        let (x, y) = (ix as isize + dx, iy as isize + dy);
        if x < 0 || y < 0 || x >= w || y >= h {
            return None;
        }
        let (x, y) = (x as usize, y as usize);
        if grid.is_blocked(x, y) {
            return None;
        }
        if dx != 0 && dy != 0 && (grid.is_blocked(x, iy) || grid.is_blocked(ix, y)) {
            return None;
        }
        let cost = if dx != 0 && dy != 0 { std::f64::consts::SQRT_2 } else { 1.0 };
        Some(((x, y), cost))
    })
}

/// 8-connected A* over the inflated grid with dynamic obstacles rasterized.
///
/// Returns `Ok(None)` when the goal is unreachable (including a goal in a
/// blocked cell) and an error when the start itself is blocked.
pub fn plan(
    grid: &OccupancyGrid,
    from: [f64; 2],
    to: [f64; 2],
    dynamic_obstacles: &[DynamicObstacle],
) -> Result<Option<Path>> {
    let g = if dynamic_obstacles.is_empty() {
        std::borrow::Cow::Borrowed(grid)
    } else {
        std::borrow::Cow::Owned(grid.with_dynamic_obstacles(dynamic_obstacles))
    };
    let start = g
        .world_to_cell(from[0], from[1])
        .ok_or_else(|| Error::invalid(format!("plan start ({:.3}, {:.3}) is outside the grid", from[0], from[1])))?;
    let goal = g
        .world_to_cell(to[0], to[1])
        .ok_or_else(|| Error::invalid(format!("plan goal ({:.3}, {:.3}) is outside the grid", to[0], to[1])))?;
    if g.is_blocked(start.0, start.1) {
        return Err(Error::StartBlocked { x: from[0], y: from[1] });
    }
    if g.is_blocked(goal.0, goal.1) {
        return Ok(None);
    }
    Ok(astar_cells(&g, start, goal).map(|cells| {
        let mut path = Vec::with_capacity(cells.len() + 2);
        path.push(from);
        // Interior cells only; the exact start and goal points bracket them.
        if cells.len() > 2 {
            path.extend(cells[1..cells.len() - 1].iter().map(|&(x, y)| g.cell_center(x, y)));
        }
        path.push(to);
        path
    }))
}

/// Cell sequence from start to goal inclusive.
pub(crate) fn astar_cells(g: &OccupancyGrid, start: (usize, usize), goal: (usize, usize)) -> Option<Vec<(usize, usize)>> {
    let n = g.width() * g.height();
    let mut best = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    let mut closed = vec![false; n];
    let mut open = BinaryHeap::new();

    let s = g.index(start.0, start.1);
    let t = g.index(goal.0, goal.1);
    best[s] = 0.0;
    open.push(Node { f: octile(start, goal), g: 0.0, index: s });

    while let Some(Node { g: cost, index, .. }) = open.pop() {
        if closed[index] {
            continue;
        }
        closed[index] = true;
        if index == t {
            let mut cells = vec![(index % g.width(), index / g.width())];
            let mut cur = index;
            while parent[cur] != usize::MAX {
                cur = parent[cur];
                cells.push((cur % g.width(), cur / g.width()));
            }
            cells.reverse();
            return Some(cells);
        }
        let cell = (index % g.width(), index / g.width());
        for (next, step) in neighbors(g, cell.0, cell.1) {
            let ni = g.index(next.0, next.1);
            let tentative = cost + step;
            if !closed[ni] && tentative < best[ni] {
                best[ni] = tentative;
                parent[ni] = index;
                open.push(Node { f: tentative + octile(next, goal), g: tentative, index: ni });
            }
        }
    }
    None
}

/// True when every point of the segment lies in a free cell.
pub fn segment_free(grid: &OccupancyGrid, a: [f64; 2], b: [f64; 2]) -> bool {
    let len = (b[0] - a[0]).hypot(b[1] - a[1]);
    let steps = ((len / (grid.resolution() * 0.25)).ceil() as usize).max(1);
    (0..=steps).all(|k| {
        let s = k as f64 / steps as f64;
        !grid.blocked_at(a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1]))
    })
}

/// Greedy line-of-sight shortcutting: from each kept waypoint, jump to the
/// farthest later waypoint reachable by a free straight segment.
///
/// Endpoints are kept; the first segment is not checked because the start
/// may sit on a cell border.
pub fn shortcut(grid: &OccupancyGrid, path: &[[f64; 2]]) -> Path {
    if path.len() <= 2 {
        return path.to_vec();
    }
    let mut out = vec![path[0]];
    let mut i = 0;
    while i < path.len() - 1 {
        let mut j = path.len() - 1;
        while j > i + 1 && !segment_free(grid, path[i], path[j]) {
            j -= 1;
        }
        out.push(path[j]);
        i = j;
    }
    out
}

pub fn path_length(path: &[[f64; 2]]) -> f64 {
    path.windows(2)
        .map(|w| (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]))
        .sum()
}
