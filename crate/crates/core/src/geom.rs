//! Small 2D geometry helpers shared by the vectorization stages.
//!
//! Coordinates are plain `(x, y)` pairs in `f64`. Polygon rings are open
//! vertex lists (the closing edge from last to first is implicit).

/// Twice the signed area of triangle `abc` (positive = counter-clockwise).
pub fn cross(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> f64 {
    (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
}

/// Signed area of a polygon ring (positive = counter-clockwise).
pub fn ring_area(ring: &[(f64, f64)]) -> f64 {
    let n = ring.len();
    if n < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..n {
        let a = ring[i];
        let b = ring[(i + 1) % n];
        acc += a.0 * b.1 - b.0 * a.1;
    }
    acc * 0.5
}

/// Where a point sits relative to a polygon ring.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointLocation {
    Inside,
    Boundary,
    Outside,
}

/// Ray-casting point-in-polygon with explicit boundary detection.
pub fn locate_point(p: (f64, f64), ring: &[(f64, f64)]) -> PointLocation {
    let n = ring.len();
    let eps = 1e-9;
    let mut inside = false;
    for i in 0..n {
        let a = ring[i];
        let b = ring[(i + 1) % n];
        if point_on_segment(p, a, b, eps) {
            return PointLocation::Boundary;
        }
        // Crossing test for a ray going in +x direction.
        if (a.1 > p.1) != (b.1 > p.1) {
            let t = (p.1 - a.1) / (b.1 - a.1);
            let x = a.0 + t * (b.0 - a.0);
            if x > p.0 {
                inside = !inside;
            }
        }
    }
    if inside {
        PointLocation::Inside
    } else {
        PointLocation::Outside
    }
}

/// True if `p` lies on segment `ab` within tolerance `eps`.
pub fn point_on_segment(p: (f64, f64), a: (f64, f64), b: (f64, f64), eps: f64) -> bool {
    let ab = (b.0 - a.0, b.1 - a.1);
    let len2 = ab.0 * ab.0 + ab.1 * ab.1;
    if len2 == 0.0 {
        return (p.0 - a.0).hypot(p.1 - a.1) <= eps;
    }
    let t = ((p.0 - a.0) * ab.0 + (p.1 - a.1) * ab.1) / len2;
    if !(-eps..=1.0 + eps).contains(&t) {
        return false;
    }
    let proj = (a.0 + t * ab.0, a.1 + t * ab.1);
    (p.0 - proj.0).hypot(p.1 - proj.1) <= eps
}

/// True if open segments `ab` and `cd` cross at a single interior point.
///
/// Shared endpoints and mere touching do not count; collinear overlap does
/// (it is just as fatal for a straight-line embedding as a proper crossing).
pub fn segments_cross(a: (f64, f64), b: (f64, f64), c: (f64, f64), d: (f64, f64)) -> bool {
    let d1 = cross(c, d, a);
    let d2 = cross(c, d, b);
    let d3 = cross(a, b, c);
    let d4 = cross(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    // Collinear overlap beyond a single shared endpoint.
    let eps = 1e-12;
    if d1.abs() < eps && d2.abs() < eps && d3.abs() < eps && d4.abs() < eps {
        let overlap_1d = |a: f64, b: f64, c: f64, d: f64| {
            let (lo1, hi1) = if a < b { (a, b) } else { (b, a) };
            let (lo2, hi2) = if c < d { (c, d) } else { (d, c) };
            lo1.max(lo2) < hi1.min(hi2) - 1e-9
        };
        let horizontal = (b.0 - a.0).abs() >= (b.1 - a.1).abs();
        return if horizontal {
            overlap_1d(a.0, b.0, c.0, d.0)
        } else {
            overlap_1d(a.1, b.1, c.1, d.1)
        };
    }
    false
}

/// True if the ring is a simple polygon (no repeated vertices, no
/// edge crossings, no zero-length edges).
pub fn ring_is_simple(ring: &[(f64, f64)]) -> bool {
    let n = ring.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        let a = ring[i];
        let b = ring[(i + 1) % n];
        if a == b {
            return false;
        }
        for j in i + 1..n {
            let c = ring[j];
            let d = ring[(j + 1) % n];
            if segments_cross(a, b, c, d) {
                return false;
            }
            // Non-adjacent edges must not touch at all.
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if !adjacent
                && (point_on_segment(c, a, b, 1e-9)
                    || point_on_segment(d, a, b, 1e-9)
                    || point_on_segment(a, c, d, 1e-9)
                    || point_on_segment(b, c, d, 1e-9))
            {
                return false;
            }
        }
    }
    true
}

/// A point strictly inside a simple polygon, via the centroid of an ear.
pub fn interior_point(ring: &[(f64, f64)]) -> (f64, f64) {
    let n = ring.len();
    debug_assert!(n >= 3);
    let ccw = ring_area(ring) > 0.0;
    for i in 0..n {
        let prev = ring[(i + n - 1) % n];
        let cur = ring[i];
        let next = ring[(i + 1) % n];
        let turn = cross(prev, cur, next);
        let convex = if ccw { turn > 1e-12 } else { turn < -1e-12 };
        if !convex {
            continue;
        }
        // Shrink the ear triangle towards `cur` until it is empty of
        // other ring vertices.
        let mut a = prev;
        let mut b = next;
        loop {
            let centroid = (
                (a.0 + cur.0 + b.0) / 3.0,
                (a.1 + cur.1 + b.1) / 3.0,
            );
            let blocked = ring.iter().any(|&v| {
                v != prev
                    && v != cur
                    && v != next
                    && point_in_triangle(v, a, cur, b)
            });
            if !blocked && locate_point(centroid, ring) == PointLocation::Inside {
                return centroid;
            }
            a = ((a.0 + cur.0) / 2.0, (a.1 + cur.1) / 2.0);
            b = ((b.0 + cur.0) / 2.0, (b.1 + cur.1) / 2.0);
            if (a.0 - cur.0).hypot(a.1 - cur.1) < 1e-9 {
                break;
            }
        }
    }
    // Fallback: vertex average (valid for convex rings).
    let (sx, sy) = ring
        .iter()
        .fold((0.0, 0.0), |(sx, sy), v| (sx + v.0, sy + v.1));
    (sx / n as f64, sy / n as f64)
}

fn point_in_triangle(p: (f64, f64), a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> bool {
    let d1 = cross(a, b, p);
    let d2 = cross(b, c, p);
    let d3 = cross(c, a, p);
    let has_neg = d1 < 0.0 || d2 < 0.0 || d3 < 0.0;
    let has_pos = d1 > 0.0 || d2 > 0.0 || d3 > 0.0;
    !(has_neg && has_pos)
}

/// Perpendicular distance from `p` to the infinite line through `a`, `b`,
/// plus the projection parameter `t` in units of |ab| (0 at `a`, 1 at `b`).
pub fn project_on_segment(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    let ab = (b.0 - a.0, b.1 - a.1);
    let len = ab.0.hypot(ab.1);
    debug_assert!(len > 0.0);
    let u = (ab.0 / len, ab.1 / len);
    let ap = (p.0 - a.0, p.1 - a.1);
    let along = ap.0 * u.0 + ap.1 * u.1;
    let perp = (ap.0 * u.1 - ap.1 * u.0).abs();
    (perp, along / len)
}

/// All grid cells the segment between two integer cell centers passes
/// through (supercover traversal, 8-connected and deterministic).
pub fn supercover_line(a: (i64, i64), b: (i64, i64)) -> Vec<(i64, i64)> {
    let dx = (b.0 - a.0).abs();
    let dy = (b.1 - a.1).abs();
    let sx = (b.0 - a.0).signum();
    let sy = (b.1 - a.1).signum();
    let (mut x, mut y) = (a.0, a.1);
    let mut cells = Vec::with_capacity((dx + dy + 1) as usize);
    cells.push((x, y));
    let (mut ix, mut iy) = (0i64, 0i64);
    while ix < dx || iy < dy {
        // Compare the next vertical boundary crossing (x = ix + 0.5) with
        // the next horizontal one (y = iy + 0.5), exactly in integers:
        // (ix + 0.5)/dx vs (iy + 0.5)/dy.
        let tx = (2 * ix + 1) * dy;
        let ty = (2 * iy + 1) * dx;
        if iy == dy || (ix < dx && tx < ty) {
            x += sx;
            ix += 1;
        } else if ix == dx || tx > ty {
            y += sy;
            iy += 1;
        } else {
            // Exact corner crossing: cover both side cells, step diagonally.
            cells.push((x + sx, y));
            cells.push((x, y + sy));
            x += sx;
            y += sy;
            ix += 1;
            iy += 1;
        }
        cells.push((x, y));
    }
    cells
}
