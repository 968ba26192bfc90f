//! 2D polygon predicates, ear-clipping triangulation and simplification.

use crate::error::{Error, Result};
use crate::math::Vec2;
use crate::num::{cast, Real};

/// Shoelace signed area; positive for counter-clockwise rings.
pub fn signed_area<S: Real>(ring: &[Vec2<S>]) -> S {
    let mut acc = S::zero();
    for i in 0..ring.len() {
        let a = ring[i];
        let b = ring[(i + 1) % ring.len()];
        acc += a.cross(b);
    }
    acc * cast(0.5)
}

pub fn is_ccw<S: Real>(ring: &[Vec2<S>]) -> bool {
    signed_area(ring) > S::zero()
}

/// Reverse the ring in place if it winds clockwise.
pub fn ensure_ccw<S: Real>(ring: &mut [Vec2<S>]) {
    if !ring.is_empty() && !is_ccw(ring) {
        ring.reverse();
    }
}

/// Drop consecutive points closer than `tol`, and a trailing point equal to
/// the first (closed rings arrive both open and explicitly closed).
pub fn dedup_ring<S: Real>(points: &[Vec2<S>], tol: S) -> Vec<Vec2<S>> {
    let mut out: Vec<Vec2<S>> = Vec::with_capacity(points.len());
    for &p in points {
        if out.last().is_none_or(|&q| p.distance(q) > tol) {
            out.push(p);
        }
    }
    while out.len() > 1 && out[0].distance(*out.last().unwrap()) <= tol {
        out.pop();
    }
    out
}

fn orient<S: Real>(a: Vec2<S>, b: Vec2<S>, c: Vec2<S>) -> S {
    (b - a).cross(c - a)
}

fn on_segment<S: Real>(a: Vec2<S>, b: Vec2<S>, p: Vec2<S>) -> bool {
    orient(a, b, p) == S::zero()
        && p.x >= a.x.min(b.x)
        && p.x <= a.x.max(b.x)
        && p.y >= a.y.min(b.y)
        && p.y <= a.y.max(b.y)
}

/// Whether segments `ab` and `cd` intersect, endpoints included.
pub fn segments_intersect<S: Real>(a: Vec2<S>, b: Vec2<S>, c: Vec2<S>, d: Vec2<S>) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > S::zero() && d2 < S::zero()) || (d1 < S::zero() && d2 > S::zero()))
        && ((d3 > S::zero() && d4 < S::zero()) || (d3 < S::zero() && d4 > S::zero()))
    {
        return true;
    }
    on_segment(c, d, a) || on_segment(c, d, b) || on_segment(a, b, c) || on_segment(a, b, d)
}

/// Simple-polygon check: no two non-adjacent edges intersect, adjacent
/// edges meet only at their shared vertex.
pub fn is_simple<S: Real>(ring: &[Vec2<S>]) -> bool {
    let n = ring.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        let (a, b) = (ring[i], ring[(i + 1) % n]);
        if a.distance(b) == S::zero() {
            return false;
        }
        for j in (i + 1)..n {
            let (c, d) = (ring[j], ring[(j + 1) % n]);
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                // Shared endpoint is fine; anything more means a spike or overlap.
                let shared = if j == i + 1 { b } else { a };
                let (e, f) = if j == i + 1 { (a, d) } else { (b, c) };
                if on_segment(c, d, e) && e.distance(shared) > S::zero()
                    || on_segment(a, b, f) && f.distance(shared) > S::zero()
                {
                    return false;
                }
            } else if segments_intersect(a, b, c, d) {
                return false;
            }
        }
    }
    true
}

/// Point-in-polygon by ray crossing; boundary points count as inside.
pub fn point_in_polygon<S: Real>(p: Vec2<S>, ring: &[Vec2<S>]) -> bool {
    let n = ring.len();
    let mut inside = false;
    for i in 0..n {
        let a = ring[i];
        let b = ring[(i + 1) % n];
        if on_segment(a, b, p) {
            return true;
        }
        if (a.y > p.y) != (b.y > p.y) {
            let t = (p.y - a.y) / (b.y - a.y);
            let x = a.x + t * (b.x - a.x);
            if x > p.x {
                inside = !inside;
            }
        }
    }
    inside
}

/// Ear-clipping triangulation of a simple CCW polygon. Returns index triples
/// into the input ring, each wound counter-clockwise.
pub fn triangulate_ear_clip<S: Real>(ring: &[Vec2<S>]) -> Result<Vec<[u32; 3]>> {
    let n = ring.len();
    if n < 3 {
        return Err(Error::DegenerateGeometry(format!(
            "polygon needs >= 3 vertices, got {n}"
        )));
    }
    if n == 3 {
        return Ok(vec![[0, 1, 2]]);
    }
    let mut indices: Vec<u32> = (0..n as u32).collect();
    let mut triangles = Vec::with_capacity(n - 2);

    let is_ear = |idx: &[u32], i: usize| -> bool {
        let m = idx.len();
        let prev = ring[idx[(i + m - 1) % m] as usize];
        let cur = ring[idx[i] as usize];
        let next = ring[idx[(i + 1) % m] as usize];
        if orient(prev, cur, next) <= S::zero() {
            return false; // reflex or collinear corner
        }
        for &other in idx {
            let p = ring[other as usize];
            if p == prev || p == cur || p == next {
                continue;
            }
            if orient(prev, cur, p) >= S::zero()
                && orient(cur, next, p) >= S::zero()
                && orient(next, prev, p) >= S::zero()
            {
                return false;
            }
        }
        true
    };

    while indices.len() > 3 {
        let m = indices.len();
        let mut clipped = false;
        for i in 0..m {
            if is_ear(&indices, i) {
                let prev = indices[(i + m - 1) % m];
                let next = indices[(i + 1) % m];
                triangles.push([prev, indices[i], next]);
                indices.remove(i);
                clipped = true;
                break;
            }
        }
        if !clipped {
            // Collinear runs can leave no strict ear; clip the first convex
            // corner to make progress rather than abort.
            let mut fallback = None;
            for i in 0..m {
                let prev = ring[indices[(i + m - 1) % m] as usize];
                let cur = ring[indices[i] as usize];
                let next = ring[indices[(i + 1) % m] as usize];
                if orient(prev, cur, next) >= S::zero() {
                    fallback = Some(i);
                    break;
                }
            }
            let i = fallback.ok_or_else(|| {
                Error::DegenerateGeometry("unable to triangulate polygon".into())
            })?;
            let prev = indices[(i + m - 1) % m];
            let next = indices[(i + 1) % m];
            triangles.push([prev, indices[i], next]);
            indices.remove(i);
        }
    }
    triangles.push([indices[0], indices[1], indices[2]]);
    Ok(triangles)
}

fn point_segment_distance<S: Real>(p: Vec2<S>, a: Vec2<S>, b: Vec2<S>) -> S {
    let ab = b - a;
    let len2 = ab.length_squared();
    if len2 == S::zero() {
        return p.distance(a);
    }
    let t = ((p - a).dot(ab) / len2).max(S::zero()).min(S::one());
    p.distance(a + ab * t)
}

fn douglas_peucker_rec<S: Real>(pts: &[Vec2<S>], tol: S, keep: &mut [bool], lo: usize, hi: usize) {
    if hi <= lo + 1 {
        return;
    }
    let (a, b) = (pts[lo], pts[hi]);
    let mut worst = (S::zero(), lo);
    for i in (lo + 1)..hi {
        let d = point_segment_distance(pts[i], a, b);
        if d > worst.0 {
            worst = (d, i);
        }
    }
    if worst.0 > tol {
        keep[worst.1] = true;
        douglas_peucker_rec(pts, tol, keep, lo, worst.1);
        douglas_peucker_rec(pts, tol, keep, worst.1, hi);
    }
}

/// Douglas-Peucker simplification of an open polyline (endpoints kept).
pub fn douglas_peucker<S: Real>(pts: &[Vec2<S>], tol: S) -> Vec<Vec2<S>> {
    if pts.len() <= 2 {
        return pts.to_vec();
    }
    let mut keep = vec![false; pts.len()];
    keep[0] = true;
    *keep.last_mut().unwrap() = true;
    douglas_peucker_rec(pts, tol, &mut keep, 0, pts.len() - 1);
    pts.iter().zip(&keep).filter(|(_, &k)| k).map(|(p, _)| *p).collect()
}

/// Simplify a closed ring: anchor at the two mutually-farthest extremes so
/// the split halves keep shape, then simplify each half.
pub fn douglas_peucker_ring<S: Real>(ring: &[Vec2<S>], tol: S) -> Vec<Vec2<S>> {
    let n = ring.len();
    if n <= 4 {
        return ring.to_vec();
    }
    let mut far = (S::zero(), 0usize);
    for i in 1..n {
        let d = ring[i].distance(ring[0]);
        if d > far.0 {
            far = (d, i);
        }
    }
    let split = far.1;
    let mut first: Vec<Vec2<S>> = ring[0..=split].to_vec();
    let mut second: Vec<Vec2<S>> = ring[split..n].to_vec();
    second.push(ring[0]);
    first = douglas_peucker(&first, tol);
    second = douglas_peucker(&second, tol);
    first.pop();
    second.pop();
    let mut out = first;
    out.extend(second);
    if out.len() < 3 {
        ring.to_vec()
    } else {
        out
    }
}

pub fn polyline_length<S: Real>(pts: &[Vec2<S>]) -> S {
    pts.windows(2).map(|w| w[0].distance(w[1])).sum()
}
