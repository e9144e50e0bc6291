//! Independent reference implementations shared by the test targets.
#![allow(dead_code)]

use scatterforge::geometry::Point;
use scatterforge::shapes::ConvexPolygon;
use scatterforge::SceneConfig;

fn strictly_inside(poly: &[Point], p: Point) -> bool {
    (0..poly.len()).all(|i| {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x) > 0.0
    })
}

/// Clips segment `a`–`b` to the closed box and reports whether the clipped
/// piece's midpoint lies strictly inside the open box.
fn edge_crosses(a: Point, b: Point, lo: Point, hi: Point) -> bool {
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    let d = Point::new(b.x - a.x, b.y - a.y);
    for (p, q) in [
        (-d.x, a.x - lo.x),
        (d.x, hi.x - a.x),
        (-d.y, a.y - lo.y),
        (d.y, hi.y - a.y),
    ] {
        if p == 0.0 {
            if q < 0.0 {
                return false;
            }
        } else {
            let r = q / p;
            if p < 0.0 {
                t0 = t0.max(r);
            } else {
                t1 = t1.min(r);
            }
        }
    }
    if t0 >= t1 {
        return false;
    }
    let t = 0.5 * (t0 + t1);
    let m = Point::new(a.x + t * d.x, a.y + t * d.y);
    m.x > lo.x && m.x < hi.x && m.y > lo.y && m.y < hi.y
}

/// 32×32 supersampling plus edge crossings, cell by cell.
pub fn oracle(poly: &ConvexPolygon, cfg: &SceneConfig) -> Vec<u8> {
    let n = cfg.inaccessible_dim();
    let h = cfg.cell_size;
    let origin = -0.5 * cfg.inaccessible_side;
    let v = poly.vertices();
    let mut out = vec![0u8; n * n];
    for row in 0..n {
        for col in 0..n {
            let lo = Point::new(origin + col as f64 * h, origin + row as f64 * h);
            let hi = Point::new(lo.x + h, lo.y + h);
            let mut hit = false;
            'samples: for sy in 0..32 {
                for sx in 0..32 {
                    let p = Point::new(lo.x + (sx as f64 + 0.5) * h / 32.0, lo.y + (sy as f64 + 0.5) * h / 32.0);
                    if strictly_inside(v, p) {
                        hit = true;
                        break 'samples;
                    }
                }
            }
            if !hit {
                hit = (0..v.len()).any(|i| edge_crosses(v[i], v[(i + 1) % v.len()], lo, hi));
            }
            out[row * n + col] = hit as u8;
        }
    }
    out
}

/// Σ_uv G_uv d_u d_v straight from the definition.
pub fn double_sum(a: &[f64], b: &[f64], h: usize, w: usize, sigma: f64) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mut total = 0.0;
    for u in 0..h * w {
        for v in 0..h * w {
            let dr = (u / w) as f64 - (v / w) as f64;
            let dc = (u % w) as f64 - (v % w) as f64;
            let g = (-(dr * dr + dc * dc) / (2.0 * sigma * sigma)).exp()
                / (2.0 * std::f64::consts::PI * sigma * sigma);
            total += g * d[u] * d[v];
        }
    }
    total.max(0.0).sqrt()
}

