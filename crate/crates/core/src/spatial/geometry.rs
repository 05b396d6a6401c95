//! Planar geometry in (lat, lon) degree space.

pub type Point = (f64, f64);

const EPS: f64 = 1e-9;

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

pub fn distance(a: Point, b: Point) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

/// Convex hull (counter-clockwise, no repeated closing vertex). Collinear
/// input yields its two extreme points; a single point yields itself.
pub fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.dedup();
    if pts.len() <= 2 {
        return pts;
    }
    let mut lower: Vec<Point> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Point> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Area centroid of a hull; the vertex mean for degenerate hulls.
pub fn centroid(hull: &[Point]) -> Point {
    if hull.len() >= 3 {
        let mut a = 0.0;
        let (mut cx, mut cy) = (0.0, 0.0);
        for i in 0..hull.len() {
            let p = hull[i];
            let q = hull[(i + 1) % hull.len()];
            let c = p.0 * q.1 - q.0 * p.1;
            a += c;
            cx += (p.0 + q.0) * c;
            cy += (p.1 + q.1) * c;
        }
        if a.abs() > EPS {
            return (cx / (3.0 * a), cy / (3.0 * a));
        }
    }
    let n = hull.len().max(1) as f64;
    (
        hull.iter().map(|p| p.0).sum::<f64>() / n,
        hull.iter().map(|p| p.1).sum::<f64>() / n,
    )
}

pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return distance(p, a);
    }
    let t = (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0);
    distance(p, (a.0 + t * dx, a.1 + t * dy))
}

/// Distance from `p` to the hull boundary (to the point/segment for
/// degenerate hulls).
pub fn boundary_distance(p: Point, hull: &[Point]) -> f64 {
    match hull.len() {
        0 => f64::INFINITY,
        1 => distance(p, hull[0]),
        n => (0..n)
            .map(|i| point_segment_distance(p, hull[i], hull[(i + 1) % n]))
            .fold(f64::INFINITY, f64::min),
    }
}

/// Inside or on the boundary of a counter-clockwise convex hull.
pub fn contains(hull: &[Point], p: Point) -> bool {
    match hull.len() {
        0 => false,
        1 | 2 => boundary_distance(p, hull) <= EPS,
        n => (0..n).all(|i| cross(hull[i], hull[(i + 1) % n], p) >= -EPS),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_hull() {
        let pts = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0), (0.5, 0.5)];
        let hull = convex_hull(&pts);
        assert_eq!(hull.len(), 4);
        assert_eq!(centroid(&hull), (0.5, 0.5));
        assert!(contains(&hull, (0.5, 0.5)));
        assert!(contains(&hull, (1.0, 0.5)));
        assert!(!contains(&hull, (1.5, 0.5)));
        assert!((boundary_distance((1.5, 0.5), &hull) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn degenerate_hulls() {
        let line = convex_hull(&[(0.0, 0.0), (0.0, 1.0), (0.0, 2.0)]);
        assert_eq!(line, vec![(0.0, 0.0), (0.0, 2.0)]);
        assert!(contains(&line, (0.0, 1.0)));
        assert_eq!(centroid(&line), (0.0, 1.0));
        let single = convex_hull(&[(3.0, 3.0), (3.0, 3.0)]);
        assert_eq!(single, vec![(3.0, 3.0)]);
    }
}
