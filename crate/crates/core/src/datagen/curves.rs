use std::f64::consts::TAU;
use std::path::Path;

use crate::deeponet::FieldSample;
use crate::error::{Error, Result};
use crate::tensor::Mat;

/// An ordered point set describing a boundary, `m x 2`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryCurve {
    pub points: Mat,
    pub closed: bool,
}

impl BoundaryCurve {
    pub fn m(&self) -> usize {
        self.points.rows()
    }

    pub fn to_sample(&self, id: u64) -> FieldSample {
        FieldSample::curve(id, &self.points).expect("curve points are m x 2")
    }
}

/// Signed distance to the circle of radius `r` about the origin.
pub fn sdf_circle(r: f64, x: f64, y: f64) -> f64 {
    x.hypot(y) - r
}

/// `m` points `(r cos θ_j, r sin θ_j)` with `θ_j = 2πj / m`.
pub fn circle_sensors(r: f64, m: usize) -> Result<BoundaryCurve> {
    if m < 3 || !(r > 0.0) {
        return Err(Error::invalid("circle sensors need m >= 3 and r > 0"));
    }
    let points = Mat::from_fn(m, 2, |j, c| {
        // Exact values at quarter turns keep symmetric layouts exact.
        let (s, co) = match (4 * j) % m {
            0 => match 4 * j / m {
                0 => (0.0, 1.0),
                1 => (1.0, 0.0),
                2 => (0.0, -1.0),
                _ => (-1.0, 0.0),
            },
            _ => (TAU * j as f64 / m as f64).sin_cos(),
        };
        r * if c == 0 { co } else { s }
    });
    Ok(BoundaryCurve { points, closed: true })
}

fn seg_len(p: &Mat, i: usize, j: usize) -> f64 {
    (p.get(j, 0) - p.get(i, 0)).hypot(p.get(j, 1) - p.get(i, 1))
}

/// Resamples a closed polyline (last point joined to the first) to `m`
/// points evenly spaced in arclength, starting at the first vertex.
pub fn resample_closed(points: &Mat, m: usize) -> Result<Mat> {
    let n = points.rows();
    if n < 3 || points.cols() != 2 {
        return Err(Error::invalid("a closed curve needs at least 3 points in 2-D"));
    }
    let mut cum = vec![0.0; n + 1];
    for i in 0..n {
        cum[i + 1] = cum[i] + seg_len(points, i, (i + 1) % n);
    }
    let total = cum[n];
    if !(total > 0.0) {
        return Err(Error::invalid("curve has zero length"));
    }
    let mut out = Mat::zeros(m, 2);
    let mut seg = 0;
    for j in 0..m {
        let s = total * j as f64 / m as f64;
        while seg + 1 < n && cum[seg + 1] <= s {
            seg += 1;
        }
        let len = cum[seg + 1] - cum[seg];
        let w = if len > 0.0 { (s - cum[seg]) / len } else { 0.0 };
        let next = (seg + 1) % n;
        for c in 0..2 {
            out.set(j, c, points.get(seg, c) + w * (points.get(next, c) - points.get(seg, c)));
        }
    }
    Ok(out)
}

/// Shifts and scales each coordinate to zero mean and unit (population) variance.
pub fn normalize_points(points: &mut Mat) -> Result<()> {
    let m = points.rows() as f64;
    for c in 0..points.cols() {
        let mean = (0..points.rows()).map(|i| points.get(i, c)).sum::<f64>() / m;
        let var = (0..points.rows()).map(|i| (points.get(i, c) - mean).powi(2)).sum::<f64>() / m;
        if !(var > 0.0) {
            return Err(Error::invalid(format!("coordinate {c} has zero variance")));
        }
        let sd = var.sqrt();
        for i in 0..points.rows() {
            points.set(i, c, (points.get(i, c) - mean) / sd);
        }
    }
    Ok(())
}

/// Parses whitespace-separated `x y` lines; a non-numeric first line is a name header.
pub fn parse_airfoil(text: &str, path: &Path) -> Result<Mat> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let nums: Vec<std::result::Result<f64, _>> = line.split_whitespace().map(str::parse::<f64>).collect();
        let parsed: Option<Vec<f64>> = nums.iter().map(|r| r.as_ref().ok().copied()).collect();
        match parsed {
            Some(v) if v.len() == 2 => rows.push(v),
            None if rows.is_empty() && i == 0 => continue,
            _ => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: i + 1,
                    msg: format!("expected two numbers, got `{line}`"),
                })
            }
        }
    }
    if rows.len() < 3 {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            msg: format!("need at least 3 points, found {}", rows.len()),
        });
    }
    Ok(Mat::from_rows(&rows))
}

/// Reads an airfoil file, resamples it to `m` points by arclength and normalizes it.
pub fn load_airfoil(path: &Path, m: usize) -> Result<BoundaryCurve> {
    let text = std::fs::read_to_string(path)?;
    airfoil_from_str(&text, path, m)
}

pub fn airfoil_from_str(text: &str, path: &Path, m: usize) -> Result<BoundaryCurve> {
    let raw = parse_airfoil(text, path)?;
    let mut points = resample_closed(&raw, m)?;
    normalize_points(&mut points)?;
    Ok(BoundaryCurve { points, closed: true })
}

/// Signed distance to a closed polygon: negative inside (even–odd rule).
pub fn sdf_polygon(points: &Mat, x: f64, y: f64) -> f64 {
    let n = points.rows();
    let mut best = f64::INFINITY;
    let mut inside = false;
    for i in 0..n {
        let j = (i + 1) % n;
        let (ax, ay) = (points.get(i, 0), points.get(i, 1));
        let (bx, by) = (points.get(j, 0), points.get(j, 1));
        let (ex, ey) = (bx - ax, by - ay);
        let len2 = ex * ex + ey * ey;
        let t = if len2 > 0.0 { (((x - ax) * ex + (y - ay) * ey) / len2).clamp(0.0, 1.0) } else { 0.0 };
        best = best.min((x - ax - t * ex).hypot(y - ay - t * ey));
        if (ay > y) != (by > y) && x < ax + (y - ay) * ex / ey {
            inside = !inside;
        }
    }
    if inside {
        -best
    } else {
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_sdf_values() {
        assert_eq!(sdf_circle(1.0, 0.0, 0.0), -1.0);
        assert_eq!(sdf_circle(1.0, 2.0, 0.0), 1.0);
    }

    #[test]
    fn four_sensors_on_the_unit_circle() {
        let c = circle_sensors(1.0, 4).unwrap();
        let want = [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]];
        for (j, w) in want.iter().enumerate() {
            assert_eq!(c.points.row_slice(j), w);
        }
        assert!(circle_sensors(1.0, 2).is_err());
    }

    #[test]
    fn polygon_sdf_of_a_square() {
        let sq = Mat::from_rows(&[vec![-1.0, -1.0], vec![1.0, -1.0], vec![1.0, 1.0], vec![-1.0, 1.0]]);
        assert!((sdf_polygon(&sq, 0.0, 0.0) + 1.0).abs() < 1e-15);
        assert!((sdf_polygon(&sq, 3.0, 0.0) - 2.0).abs() < 1e-15);
        assert!((sdf_polygon(&sq, 0.5, 0.2) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn malformed_lines_report_their_number() {
        let err = parse_airfoil("NACA 0012\n1 0\n0.5 x\n0 0\n", Path::new("f.dat")).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            e => panic!("unexpected {e}"),
        }
        assert!(parse_airfoil("1 0\n0 1\n", Path::new("f.dat")).is_err());
    }
}
