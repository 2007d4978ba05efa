//! Field values on grids, written as CSV.

use std::fmt::Write as _;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;

use crate::beams::Point;
use crate::error::{Error, Result};
use crate::gauge_fields::{magnetic_field, scalar_potential_numeric, ConnectionField};
use crate::linalg::CMatrix;
use crate::scenarios::Scenario;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisRange {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl AxisRange {
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.min];
        }
        (0..self.count)
            .map(|i| self.min + (self.max - self.min) * i as f64 / (self.count - 1) as f64)
            .collect()
    }
}

impl FromStr for AxisRange {
    type Err = Error;

    /// `min:max:count`, or a single value.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad number '{}' in '{}'", t, s)));
        let range = match parts.as_slice() {
            [v] => {
                let v = num(v)?;
                AxisRange { min: v, max: v, count: 1 }
            }
            [a, b, n] => AxisRange {
                min: num(a)?,
                max: num(b)?,
                count: n.trim().parse().map_err(|_| Error::Parse(format!("bad count '{}' in '{}'", n, s)))?,
            },
            _ => return Err(Error::Parse(format!("axis range '{}' is not min:max:count", s))),
        };
        if range.count == 0 || range.max.partial_cmp(&range.min).is_none_or(|o| o.is_lt()) {
            return Err(Error::Parse(format!("axis range '{}' needs count ≥ 1 and max ≥ min", s)));
        }
        Ok(range)
    }
}

/// Points to sample, in raster order.
#[derive(Debug, Clone, PartialEq)]
pub enum GridSpec {
    /// A fixed generic point, `(0.3, 0.4, 0.5)·R`.
    SinglePoint,
    Point(Point),
    /// Cartesian product; `x` varies slowest.
    Cartesian { x: AxisRange, y: AxisRange, z: AxisRange },
    /// Fixed radius, cell-centred polar angles, evenly spaced azimuths.
    Sphere { radius: f64, n_theta: usize, n_phi: usize },
}

impl GridSpec {
    pub fn points(&self, beam_scale: f64) -> Vec<Point> {
        match self {
            GridSpec::SinglePoint => vec![Point::new(0.3 * beam_scale, 0.4 * beam_scale, 0.5 * beam_scale)],
            GridSpec::Point(p) => vec![*p],
            GridSpec::Cartesian { x, y, z } => {
                let (xs, ys, zs) = (x.values(), y.values(), z.values());
                let mut out = Vec::with_capacity(xs.len() * ys.len() * zs.len());
                for &a in &xs {
                    for &b in &ys {
                        for &c in &zs {
                            out.push(Point::new(a, b, c));
                        }
                    }
                }
                out
            }
            GridSpec::Sphere { radius, n_theta, n_phi } => {
                let mut out = Vec::with_capacity(n_theta * n_phi);
                for i in 0..*n_theta {
                    let theta = std::f64::consts::PI * (i as f64 + 0.5) / *n_theta as f64;
                    for j in 0..*n_phi {
                        let phi = std::f64::consts::TAU * j as f64 / *n_phi as f64;
                        out.push(Point::from_spherical(*radius, theta, phi));
                    }
                }
                out
            }
        }
    }
}

fn key_values(s: &str) -> Result<Vec<(&str, &str)>> {
    s.split(',')
        .map(|kv| kv.split_once('=').map(|(k, v)| (k.trim(), v.trim())))
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| Error::Parse(format!("expected key=value pairs in '{}'", s)))
}

impl FromStr for GridSpec {
    type Err = Error;

    /// `single-point`, `point=x,y,z`, `x=a:b:n,y=a:b:n,z=a:b:n` or `sphere:r=..,ntheta=..,nphi=..`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "single-point" {
            return Ok(GridSpec::SinglePoint);
        }
        if let Some(rest) = s.strip_prefix("point=") {
            let v: Vec<f64> = rest
                .split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::Parse(format!("bad point '{}'", rest)))?;
            return match v.as_slice() {
                [x, y, z] => Ok(GridSpec::Point(Point::new(*x, *y, *z))),
                _ => Err(Error::Parse(format!("point needs three coordinates, got '{}'", rest))),
            };
        }
        if let Some(rest) = s.strip_prefix("sphere:") {
            let (mut radius, mut n_theta, mut n_phi) = (None, None, None);
            for (k, v) in key_values(rest)? {
                let bad = || Error::Parse(format!("bad value '{}' for '{}'", v, k));
                match k {
                    "r" => radius = Some(v.parse::<f64>().map_err(|_| bad())?),
                    "ntheta" => n_theta = Some(v.parse::<usize>().map_err(|_| bad())?),
                    "nphi" => n_phi = Some(v.parse::<usize>().map_err(|_| bad())?),
                    _ => return Err(Error::Parse(format!("unknown sphere key '{}'", k))),
                }
            }
            let radius = radius.ok_or_else(|| Error::Parse("sphere grid needs r".into()))?;
            let (n_theta, n_phi) = (n_theta.unwrap_or(8), n_phi.unwrap_or(8));
            if radius.is_nan() || radius <= 0.0 || n_theta == 0 || n_phi == 0 {
                return Err(Error::Parse("sphere grid needs r > 0 and positive counts".into()));
            }
            return Ok(GridSpec::Sphere { radius, n_theta, n_phi });
        }
        let zero = AxisRange { min: 0.0, max: 0.0, count: 1 };
        let (mut x, mut y, mut z) = (zero, zero, zero);
        for (k, v) in key_values(s)? {
            let range: AxisRange = v.parse()?;
            match k {
                "x" => x = range,
                "y" => y = range,
                "z" => z = range,
                _ => return Err(Error::Parse(format!("unknown grid axis '{}'", k))),
            }
        }
        Ok(GridSpec::Cartesian { x, y, z })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Connection,
    Magnetic,
    Scalar,
}

impl FieldKind {
    pub fn symbol(self) -> &'static str {
        match self {
            FieldKind::Connection => "A",
            FieldKind::Magnetic => "B",
            FieldKind::Scalar => "Phi",
        }
    }
}

impl FromStr for FieldKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" => Ok(FieldKind::Connection),
            "B" => Ok(FieldKind::Magnetic),
            "Phi" => Ok(FieldKind::Scalar),
            _ => Err(Error::Parse(format!("unknown field '{}', expected A, B or Phi", s))),
        }
    }
}

/// What `sample` evaluates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleRequest {
    pub field: FieldKind,
    pub gauge: usize,
    pub transformed: bool,
}

/// Outcome of a sweep: the CSV text and how many points failed.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleOutput {
    pub csv: String,
    pub points: usize,
    pub errors: usize,
    pub guard_errors: usize,
}

fn header(field: FieldKind, dim: usize) -> String {
    let mut h = String::from("x,y,z");
    let comps: &[&str] = match field {
        FieldKind::Scalar => &[""],
        _ => &["_x", "_y", "_z"],
    };
    for part in ["re", "im"] {
        for c in comps {
            for i in 1..=dim {
                for j in 1..=dim {
                    let _ = write!(h, ",{}_{}_{}{}{}", part, field.symbol(), i, j, c);
                }
            }
        }
    }
    h.push_str(",error");
    h
}

fn push_number(line: &mut String, v: f64) {
    let _ = write!(line, ",{:.16e}", v);
}

fn row(p: &Point, values: &Result<Vec<CMatrix>>, n_values: usize) -> String {
    let mut line = String::new();
    let _ = write!(line, "{:.16e},{:.16e},{:.16e}", p.x, p.y, p.z);
    match values {
        Ok(ms) => {
            for part in 0..2 {
                for m in ms {
                    for i in 0..m.nrows() {
                        for j in 0..m.ncols() {
                            let z = m[(i, j)];
                            push_number(&mut line, if part == 0 { z.re } else { z.im });
                        }
                    }
                }
            }
            line.push(',');
        }
        Err(e) => {
            for _ in 0..n_values {
                line.push(',');
            }
            let msg = e.to_string().replace([',', '\n'], ";");
            let _ = write!(line, ",{}", msg);
        }
    }
    line
}

pub fn sample_csv(s: &Scenario, grid: &GridSpec, request: &SampleRequest) -> Result<SampleOutput> {
    let hbar = s.hbar();
    let u = s.overrides.units;
    let connection: Arc<dyn ConnectionField> = if request.transformed {
        s.transformed_connection()?
            .ok_or_else(|| Error::InvalidParameter(format!("{} has no bundled transformation", s.id)))?
    } else {
        s.numeric_connection(request.gauge)?
    };
    if request.transformed && request.field == FieldKind::Scalar {
        return Err(Error::InvalidParameter("Phi is only sampled in the analytic dark bases".into()));
    }
    let frames = s.numeric_frames(request.gauge)?;
    let dim = connection.dim();
    let h_a = s.connection_step();
    let h_b = s.curvature_step();
    let points = grid.points(u.beam_scale);
    let values: Vec<Result<Vec<CMatrix>>> = points
        .par_iter()
        .map(|p| match request.field {
            FieldKind::Connection => connection.connection(p).map(|a| a.components.to_vec()),
            FieldKind::Magnetic => magnetic_field(connection.as_ref(), p, h_b.step(p), hbar).map(|b| b.value.components.to_vec()),
            FieldKind::Scalar => {
                scalar_potential_numeric(frames.as_ref(), p, h_a.step(p), hbar, u.mass).map(|phi| vec![phi.value])
            }
        })
        .collect();
    let n_values = 2 * dim * dim * if request.field == FieldKind::Scalar { 1 } else { 3 };
    let mut csv = header(request.field, dim);
    csv.push('\n');
    let mut errors = 0;
    let mut guard_errors = 0;
    for (p, v) in points.iter().zip(&values) {
        if let Err(e) = v {
            errors += 1;
            if matches!(e, Error::NearSingularity { .. }) {
                guard_errors += 1;
            }
        }
        csv.push_str(&row(p, v, n_values));
        csv.push('\n');
    }
    Ok(SampleOutput { csv, points: points.len(), errors, guard_errors })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_grids() {
        assert_eq!("single-point".parse::<GridSpec>().unwrap(), GridSpec::SinglePoint);
        assert_eq!("point=1,2,3".parse::<GridSpec>().unwrap(), GridSpec::Point(Point::new(1.0, 2.0, 3.0)));
        let g: GridSpec = "x=0:1:3,z=0.5".parse().unwrap();
        assert_eq!(g.points(1.0).len(), 3);
        assert_eq!(g.points(1.0)[2], Point::new(1.0, 0.0, 0.5));
        let s: GridSpec = "sphere:r=1,ntheta=4,nphi=6".parse().unwrap();
        assert_eq!(s.points(1.0).len(), 24);
        assert!("x=1:0:3".parse::<GridSpec>().is_err());
        assert!("x=0:1:0".parse::<GridSpec>().is_err());
        assert!("w=0:1:2".parse::<GridSpec>().is_err());
        assert!("sphere:ntheta=3".parse::<GridSpec>().is_err());
    }

    #[test]
    fn raster_order_has_x_slowest() {
        let g: GridSpec = "x=0:1:2,y=0:1:2".parse().unwrap();
        let pts = g.points(1.0);
        assert_eq!(pts[1], Point::new(0.0, 1.0, 0.0));
        assert_eq!(pts[2], Point::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn header_layout() {
        let h = header(FieldKind::Scalar, 2);
        assert_eq!(h, "x,y,z,re_Phi_11,re_Phi_12,re_Phi_21,re_Phi_22,im_Phi_11,im_Phi_12,im_Phi_21,im_Phi_22,error");
        assert!(header(FieldKind::Connection, 3).contains("im_A_23_z"));
    }
}
