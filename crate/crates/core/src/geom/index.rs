use super::{Point, Window};

/// Uniform bucket grid over a point set, stored in CSR form.
#[derive(Debug, Clone)]
pub struct GridIndex {
    x0: f64,
    y0: f64,
    cell: f64,
    nx: usize,
    ny: usize,
    starts: Vec<u32>,
    items: Vec<u32>,
}

impl GridIndex {
    /// Builds an index with roughly `per_cell` points per occupied cell.
    pub fn new(points: &[Point], window: &Window, per_cell: f64) -> Self {
        let n = points.len().max(1) as f64;
        let mut cell = (window.area() * per_cell / n).sqrt();
        if !(cell.is_finite() && cell > 0.0) {
            cell = window.width().max(window.height()).max(1e-9);
        }
        let nx = ((window.width() / cell).ceil() as usize).clamp(1, 1 << 14);
        let ny = ((window.height() / cell).ceil() as usize).clamp(1, 1 << 14);
        let cell = (window.width() / nx as f64).max(window.height() / ny as f64);

        let mut idx = GridIndex {
            x0: window.x0,
            y0: window.y0,
            cell,
            nx,
            ny,
            starts: vec![0; nx * ny + 1],
            items: vec![0; points.len()],
        };
        let cells: Vec<usize> = points.iter().map(|&p| idx.cell_of(p)).collect();
        for &c in &cells {
            idx.starts[c + 1] += 1;
        }
        for i in 0..nx * ny {
            idx.starts[i + 1] += idx.starts[i];
        }
        let mut fill = idx.starts.clone();
        for (i, &c) in cells.iter().enumerate() {
            idx.items[fill[c] as usize] = i as u32;
            fill[c] += 1;
        }
        idx
    }

    fn col(&self, x: f64) -> usize {
        (((x - self.x0) / self.cell).floor().max(0.0) as usize).min(self.nx - 1)
    }

    fn row(&self, y: f64) -> usize {
        (((y - self.y0) / self.cell).floor().max(0.0) as usize).min(self.ny - 1)
    }

    fn cell_of(&self, p: Point) -> usize {
        self.row(p.y) * self.nx + self.col(p.x)
    }

    /// Calls `f` on every indexed point whose cell meets the rectangle; stops
    /// early and returns `true` as soon as `f` does.
    pub fn any_in_rect(
        &self,
        min_x: f64,
        min_y: f64,
        max_x: f64,
        max_y: f64,
        mut f: impl FnMut(usize) -> bool,
    ) -> bool {
        let (c0, c1) = (self.col(min_x), self.col(max_x));
        let (r0, r1) = (self.row(min_y), self.row(max_y));
        for r in r0..=r1 {
            let base = r * self.nx;
            let lo = self.starts[base + c0] as usize;
            let hi = self.starts[base + c1 + 1] as usize;
            for &i in &self.items[lo..hi] {
                if f(i as usize) {
                    return true;
                }
            }
        }
        false
    }

    pub fn for_each_in_rect(&self, min_x: f64, min_y: f64, max_x: f64, max_y: f64, mut f: impl FnMut(usize)) {
        self.any_in_rect(min_x, min_y, max_x, max_y, |i| {
            f(i);
            false
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::sample_ppp;

    #[test]
    fn rect_query_matches_scan() {
        let w = Window::square(20.0).unwrap();
        let c = sample_ppp(w, 2.0, 4).unwrap();
        let idx = GridIndex::new(&c.points, &w, 2.0);
        let (a, b, cx, d) = (3.3, 7.1, 9.9, 12.4);
        let mut got = Vec::new();
        idx.for_each_in_rect(a, b, cx, d, |i| {
            let p = c.points[i];
            if p.x >= a && p.x <= cx && p.y >= b && p.y <= d {
                got.push(i);
            }
        });
        got.sort();
        let want: Vec<usize> = (0..c.len())
            .filter(|&i| {
                let p = c.points[i];
                p.x >= a && p.x <= cx && p.y >= b && p.y <= d
            })
            .collect();
        assert_eq!(got, want);
    }
}
