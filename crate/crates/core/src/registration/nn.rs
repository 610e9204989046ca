//! Uniform-grid nearest-neighbour index for dense 2D point sets.

use crate::geometry::Point2;

pub struct GridIndex {
    points: Vec<Point2>,
    origin: Point2,
    cell: f64,
    nx: i64,
    ny: i64,
    /// cell -> range into `order`
    starts: Vec<usize>,
    order: Vec<usize>,
}

impl GridIndex {
    pub fn new(points: &[Point2], cell: f64) -> Self {
        assert!(!points.is_empty(), "index needs at least one point");
        let min_x = points.iter().map(|p| p.x).fold(f64::INFINITY, f64::min);
        let min_y = points.iter().map(|p| p.y).fold(f64::INFINITY, f64::min);
        let max_x = points.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max);
        let max_y = points.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max);
        let origin = Point2::new(min_x, min_y);
        let nx = ((max_x - min_x) / cell).floor() as i64 + 1;
        let ny = ((max_y - min_y) / cell).floor() as i64 + 1;
        let cell_of = |p: &Point2| {
            let cx = ((p.x - origin.x) / cell).floor() as i64;
            let cy = ((p.y - origin.y) / cell).floor() as i64;
            (cy.clamp(0, ny - 1) * nx + cx.clamp(0, nx - 1)) as usize
        };
        let ncells = (nx * ny) as usize;
        let mut counts = vec![0usize; ncells + 1];
        for p in points {
            counts[cell_of(p) + 1] += 1;
        }
        for i in 0..ncells {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut order = vec![0usize; points.len()];
        for (i, p) in points.iter().enumerate() {
            let c = cell_of(p);
            order[fill[c]] = i;
            fill[c] += 1;
        }
        Self {
            points: points.to_vec(),
            origin,
            cell,
            nx,
            ny,
            starts: counts,
            order,
        }
    }

    pub fn point(&self, i: usize) -> Point2 {
        self.points[i]
    }

    /// Index and squared distance of the closest point; ties go to the
    /// lowest index.
    pub fn nearest(&self, q: Point2) -> (usize, f64) {
        let qx = ((q.x - self.origin.x) / self.cell).floor() as i64;
        let qy = ((q.y - self.origin.y) / self.cell).floor() as i64;
        let mut best = (usize::MAX, f64::INFINITY);
        let max_ring = (qx.max(self.nx - 1 - qx).max(qy.max(self.ny - 1 - qy))).max(0);
        let consider = |cx: i64, cy: i64, best: &mut (usize, f64)| {
            if cx < 0 || cy < 0 || cx >= self.nx || cy >= self.ny {
                return;
            }
            let c = (cy * self.nx + cx) as usize;
            for &i in &self.order[self.starts[c]..self.starts[c + 1]] {
                let d = (self.points[i] - q).norm_squared();
                if d < best.1 || (d == best.1 && i < best.0) {
                    *best = (i, d);
                }
            }
        };
        for r in 0..=max_ring {
            if r == 0 {
                consider(qx, qy, &mut best);
            } else {
                for cx in (qx - r)..=(qx + r) {
                    consider(cx, qy - r, &mut best);
                    consider(cx, qy + r, &mut best);
                }
                for cy in (qy - r + 1)..=(qy + r - 1) {
                    consider(qx - r, cy, &mut best);
                    consider(qx + r, cy, &mut best);
                }
            }
            // anything beyond ring r is at least r cells away
            let reach = r as f64 * self.cell;
            if best.0 != usize::MAX && best.1 <= reach * reach {
                break;
            }
        }
        best
    }
}
