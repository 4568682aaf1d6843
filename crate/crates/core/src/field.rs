//! Uniform cell-centred grid, spinor snapshots and initial-data profiles.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::{Error, Result, C64};

/// Boundary treatment. Incoming characteristics carry zero into the domain.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    #[default]
    ZeroInflow,
}

/// `n_cells` uniform cells on `[x_min, x_max]`. The time step always equals `dx`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridSpec {
    x_min: f64,
    x_max: f64,
    n_cells: usize,
    boundary: Boundary,
}

impl GridSpec {
    pub fn new(x_min: f64, x_max: f64, n_cells: usize) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite()) || x_max <= x_min {
            return Err(Error::InvalidGrid(format!(
                "need finite x_min < x_max, got [{x_min}, {x_max}]"
            )));
        }
        if n_cells < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 cells, got {n_cells}"
            )));
        }
        Ok(Self {
            x_min,
            x_max,
            n_cells,
            boundary: Boundary::ZeroInflow,
        })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.n_cells as f64
    }

    /// Time step, locked to the cell width.
    pub fn dt(&self) -> f64 {
        self.dx()
    }

    /// Centre of cell `i`.
    pub fn x(&self, i: usize) -> f64 {
        self.x_min + (i as f64 + 0.5) * self.dx()
    }

    pub fn centers(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_cells).map(move |i| self.x(i))
    }

    /// Cells whose centres lie in `[a, b]` (both ends inclusive up to `1e-9 dx`).
    pub fn cells_in(&self, a: f64, b: f64) -> std::ops::Range<usize> {
        let dx = self.dx();
        let eps = 1e-9;
        // centre i >= a  <=>  i >= (a - x_min)/dx - 1/2
        let lo = ((a - self.x_min) / dx - 0.5 - eps).ceil();
        let hi = ((b - self.x_min) / dx - 0.5 + eps).floor();
        let lo = lo.max(0.0);
        let hi = hi.min(self.n_cells as f64 - 1.0);
        if hi < lo {
            return 0..0;
        }
        lo as usize..hi as usize + 1
    }

    /// Same grid with a different resolution.
    pub fn with_cells(&self, n_cells: usize) -> Result<Self> {
        Self::new(self.x_min, self.x_max, n_cells)
    }
}

/// Which spinor component a profile feeds; selects the file columns for `FromFile`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Component {
    U,
    V,
}

/// Initial-data shapes.
#[derive(Clone, Debug, PartialEq)]
pub enum Profile {
    /// `amplitude * exp(-((x - center)/width)^2)`.
    Gaussian {
        amplitude: C64,
        center: f64,
        width: f64,
    },
    /// `amplitude * exp(1 - 1/(1 - z^2))` for `|z| < 1`, `z = (x - center)/radius`,
    /// identically zero otherwise. Peak value is `amplitude`.
    Bump {
        amplitude: C64,
        center: f64,
        radius: f64,
    },
    Zero,
    /// Snapshot CSV (`x,re_u,im_u,re_v,im_v`), linearly interpolated to cell centres.
    FromFile {
        path: PathBuf,
    },
}

impl Profile {
    pub fn bump(amplitude: C64, center: f64, radius: f64) -> Self {
        Self::Bump {
            amplitude,
            center,
            radius,
        }
    }

    pub fn gaussian(amplitude: C64, center: f64, width: f64) -> Self {
        Self::Gaussian {
            amplitude,
            center,
            width,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let check = |amp: &C64, center: f64, scale: f64, what: &str| {
            if !(amp.re.is_finite() && amp.im.is_finite() && center.is_finite()) {
                return Err(Error::InvalidProfile(format!(
                    "non-finite {what} parameters"
                )));
            }
            if !(scale.is_finite() && scale > 0.0) {
                return Err(Error::InvalidProfile(format!(
                    "{what} scale must be positive, got {scale}"
                )));
            }
            Ok(())
        };
        match self {
            Self::Gaussian {
                amplitude,
                center,
                width,
            } => check(amplitude, *center, *width, "gaussian"),
            Self::Bump {
                amplitude,
                center,
                radius,
            } => check(amplitude, *center, *radius, "bump"),
            Self::Zero | Self::FromFile { .. } => Ok(()),
        }
    }

    /// Pointwise value for the analytic profiles; `None` for `FromFile`.
    pub fn value_at(&self, x: f64) -> Option<C64> {
        match *self {
            Self::Gaussian {
                amplitude,
                center,
                width,
            } => {
                let z = (x - center) / width;
                Some(amplitude * (-z * z).exp())
            }
            Self::Bump {
                amplitude,
                center,
                radius,
            } => {
                let z = (x - center) / radius;
                let q = 1.0 - z * z;
                if q <= 0.0 {
                    Some(C64::new(0.0, 0.0))
                } else {
                    Some(amplitude * (1.0 - 1.0 / q).exp())
                }
            }
            Self::Zero => Some(C64::new(0.0, 0.0)),
            Self::FromFile { .. } => None,
        }
    }

    /// Closed interval outside which the profile vanishes identically, if any.
    pub fn support(&self) -> Option<(f64, f64)> {
        match *self {
            Self::Bump { center, radius, .. } => Some((center - radius, center + radius)),
            _ => None,
        }
    }

    /// Samples the profile at the cell centres of `grid`.
    pub fn sample(&self, grid: &GridSpec, component: Component) -> Result<Vec<C64>> {
        self.validate()?;
        if let Self::FromFile { path } = self {
            let rows = read_snapshot_file(path)?;
            return Ok(resample(&rows, grid, component));
        }
        if let Some((lo, hi)) = self.support() {
            if lo < grid.x_min() || hi > grid.x_max() {
                log::warn!(
                    "bump support [{lo}, {hi}] exceeds domain [{}, {}]",
                    grid.x_min(),
                    grid.x_max()
                );
            }
        }
        Ok(grid
            .centers()
            .map(|x| self.value_at(x).expect("analytic profile"))
            .collect())
    }
}

/// One row of a snapshot file.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SnapshotRow {
    pub x: f64,
    pub u: C64,
    pub v: C64,
}

/// Spinor pair on the grid at time `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinorField {
    pub grid: GridSpec,
    pub u: Vec<C64>,
    pub v: Vec<C64>,
    pub t: f64,
}

/// Inclusive cell-index range `[lo, hi]`.
pub type CellRange = (usize, usize);

impl SpinorField {
    pub fn zeros(grid: GridSpec) -> Self {
        let n = grid.n_cells();
        Self {
            grid,
            u: vec![C64::new(0.0, 0.0); n],
            v: vec![C64::new(0.0, 0.0); n],
            t: 0.0,
        }
    }

    pub fn from_parts(grid: GridSpec, u: Vec<C64>, v: Vec<C64>, t: f64) -> Result<Self> {
        let n = grid.n_cells();
        if u.len() != n || v.len() != n {
            return Err(Error::InvalidArgument(format!(
                "component lengths {} / {} do not match {n} cells",
                u.len(),
                v.len()
            )));
        }
        let f = Self { grid, u, v, t };
        if !f.is_finite() {
            return Err(Error::InvalidArgument("non-finite field entries".into()));
        }
        Ok(f)
    }

    pub fn is_finite(&self) -> bool {
        self.u
            .iter()
            .chain(&self.v)
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Pointwise density `|u_i|^2 + |v_i|^2`.
    pub fn density(&self) -> impl Iterator<Item = f64> + '_ {
        self.u
            .iter()
            .zip(&self.v)
            .map(|(u, v)| u.norm_sqr() + v.norm_sqr())
    }

    /// `max_i (|u_i|^2 + |v_i|^2)`.
    pub fn linf_norm(&self) -> f64 {
        self.density().fold(0.0, f64::max)
    }

    /// Smallest cell range holding every cell with density above `threshold`.
    pub fn support_cells(&self, threshold: f64) -> Option<CellRange> {
        range_above(self.density(), threshold)
    }

    pub fn support_cells_u(&self, threshold: f64) -> Option<CellRange> {
        range_above(self.u.iter().map(|z| z.norm_sqr()), threshold)
    }

    pub fn support_cells_v(&self, threshold: f64) -> Option<CellRange> {
        range_above(self.v.iter().map(|z| z.norm_sqr()), threshold)
    }

    /// Support as cell-centre coordinates; `None` when no cell exceeds `threshold`.
    pub fn support_bounds(&self, threshold: f64) -> Option<(f64, f64)> {
        self.support_cells(threshold)
            .map(|(lo, hi)| (self.grid.x(lo), self.grid.x(hi)))
    }

    /// `sqrt(dx * sum |u - u'|^2 + |v - v'|^2)`.
    pub fn l2_distance(&self, other: &SpinorField) -> f64 {
        let s: f64 = self
            .u
            .iter()
            .zip(&other.u)
            .chain(self.v.iter().zip(&other.v))
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        (self.grid.dx() * s).sqrt()
    }

    /// Writes the snapshot CSV with header `x,re_u,im_u,re_v,im_v`.
    pub fn write_csv<W: Write>(&self, writer: W) -> std::result::Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["x", "re_u", "im_u", "re_v", "im_v"])?;
        for (i, (u, v)) in self.u.iter().zip(&self.v).enumerate() {
            w.write_record(&[
                self.grid.x(i).to_string(),
                u.re.to_string(),
                u.im.to_string(),
                v.re.to_string(),
                v.im.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn range_above(values: impl Iterator<Item = f64>, threshold: f64) -> Option<CellRange> {
    let mut range: Option<CellRange> = None;
    for (i, d) in values.enumerate() {
        if d > threshold {
            range = Some(match range {
                None => (i, i),
                Some((lo, _)) => (lo, i),
            });
        }
    }
    range
}

/// Samples both profiles at the cell centres; `t = 0`.
pub fn init_field(grid: GridSpec, pu: &Profile, pv: &Profile) -> Result<SpinorField> {
    let u = pu.sample(&grid, Component::U)?;
    let v = pv.sample(&grid, Component::V)?;
    SpinorField::from_parts(grid, u, v, 0.0)
}

/// Parses a snapshot CSV. Rows must be sorted by strictly increasing `x`.
pub fn read_snapshot<R: Read>(reader: R, path: &Path) -> Result<Vec<SnapshotRow>> {
    let malformed = |msg: String| Error::MalformedData {
        path: path.to_path_buf(),
        msg,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers().map_err(|e| malformed(e.to_string()))?.clone();
    let expected = ["x", "re_u", "im_u", "re_v", "im_v"];
    if headers.iter().ne(expected.iter().copied()) {
        return Err(malformed(format!(
            "expected header x,re_u,im_u,re_v,im_v, got {}",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut rows = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| malformed(e.to_string()))?;
        let vals: Vec<f64> = rec
            .iter()
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| malformed(format!("line {}: {e}", line + 2)))?;
        if vals.len() != 5 || vals.iter().any(|x| !x.is_finite()) {
            return Err(malformed(format!(
                "line {}: expected 5 finite numbers",
                line + 2
            )));
        }
        if let Some(prev) = rows.last() {
            let prev: &SnapshotRow = prev;
            if vals[0] <= prev.x {
                return Err(malformed(format!(
                    "line {}: x must be strictly increasing",
                    line + 2
                )));
            }
        }
        rows.push(SnapshotRow {
            x: vals[0],
            u: C64::new(vals[1], vals[2]),
            v: C64::new(vals[3], vals[4]),
        });
    }
    if rows.is_empty() {
        return Err(malformed("no data rows".into()));
    }
    Ok(rows)
}

pub fn read_snapshot_file(path: &Path) -> Result<Vec<SnapshotRow>> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_snapshot(std::io::BufReader::new(file), path)
}

/// Linear interpolation to cell centres; zero outside the sampled range.
fn resample(rows: &[SnapshotRow], grid: &GridSpec, component: Component) -> Vec<C64> {
    let pick = |r: &SnapshotRow| match component {
        Component::U => r.u,
        Component::V => r.v,
    };
    let first = rows[0].x;
    let last = rows[rows.len() - 1].x;
    grid.centers()
        .map(|x| {
            if x < first || x > last {
                return C64::new(0.0, 0.0);
            }
            let j = rows.partition_point(|r| r.x <= x);
            if j == 0 {
                return pick(&rows[0]);
            }
            if j == rows.len() {
                return pick(&rows[rows.len() - 1]);
            }
            let (a, b) = (&rows[j - 1], &rows[j]);
            let w = (x - a.x) / (b.x - a.x);
            pick(a) * (1.0 - w) + pick(b) * w
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> GridSpec {
        GridSpec::new(-10.0, 10.0, 200).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(GridSpec::new(1.0, 0.0, 10).is_err());
        assert!(GridSpec::new(0.0, 1.0, 1).is_err());
        assert!(GridSpec::new(0.0, f64::NAN, 10).is_err());
        let g = GridSpec::new(0.0, 1.0, 4).unwrap();
        assert_eq!(g.dx(), 0.25);
        assert_eq!(g.dt(), g.dx());
        assert_eq!(g.x(0), 0.125);
        assert_eq!(g.x(3), 0.875);
    }

    #[test]
    fn cells_in_is_inclusive() {
        let g = GridSpec::new(0.0, 1.0, 4).unwrap();
        assert_eq!(g.cells_in(0.125, 0.875), 0..4);
        assert_eq!(g.cells_in(0.2, 0.8), 1..3);
        assert_eq!(g.cells_in(-5.0, 5.0), 0..4);
        assert_eq!(g.cells_in(0.3, 0.32), 0..0);
        assert_eq!(g.cells_in(2.0, 3.0), 0..0);
    }

    #[test]
    fn zero_profiles_give_zero_field() {
        let f = init_field(grid(), &Profile::Zero, &Profile::Zero).unwrap();
        assert_eq!(f.linf_norm(), 0.0);
        assert_eq!(f.support_bounds(0.0), None);
        assert_eq!(f.t, 0.0);
    }

    #[test]
    fn bump_is_compactly_supported() {
        let g = grid();
        let pu = Profile::bump(C64::new(1.0, 0.0), 0.0, 1.0);
        let f = init_field(g, &pu, &Profile::Zero).unwrap();
        for (i, x) in g.centers().enumerate() {
            if x.abs() >= 1.0 {
                assert_eq!(f.u[i], C64::new(0.0, 0.0), "x = {x}");
            }
        }
        let (lo, hi) = f.support_bounds(0.0).unwrap();
        assert!(lo >= -1.0 - g.dx() && hi <= 1.0 + g.dx());
        assert!((pu.value_at(0.0).unwrap().re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn linf_examples() {
        let g = grid();
        let mut f = SpinorField::zeros(g);
        f.u.iter_mut().for_each(|z| *z = C64::new(2.0, 0.0));
        assert_eq!(f.linf_norm(), 4.0);
        f.v[17] = C64::new(0.0, 1.0);
        assert_eq!(f.linf_norm(), 5.0);
        assert_eq!(f.support_cells_v(0.0), Some((17, 17)));
    }

    #[test]
    fn invalid_profiles_rejected() {
        let g = grid();
        let bad = Profile::bump(C64::new(1.0, 0.0), 0.0, 0.0);
        assert!(init_field(g, &bad, &Profile::Zero).is_err());
        let bad = Profile::gaussian(C64::new(1.0, 0.0), 0.0, -1.0);
        assert!(init_field(g, &Profile::Zero, &bad).is_err());
        let missing = Profile::FromFile {
            path: "/nonexistent/field.csv".into(),
        };
        assert!(matches!(
            init_field(g, &missing, &Profile::Zero),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn snapshot_csv_reloads_exactly_on_same_grid() {
        let g = GridSpec::new(-4.0, 4.0, 64).unwrap();
        let pu = Profile::gaussian(C64::new(0.3, -0.2), 0.5, 1.0);
        let pv = Profile::bump(C64::new(0.0, 0.7), -1.0, 1.5);
        let f = init_field(g, &pu, &pv).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x,re_u,im_u,re_v,im_v\n"));

        let dir = std::env::temp_dir().join(format!("dirac1d-field-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("snap.csv");
        std::fs::write(&path, &buf).unwrap();
        let file = Profile::FromFile { path: path.clone() };
        let g2 = init_field(g, &file, &file).unwrap();
        assert_eq!(g2.u, f.u);
        assert_eq!(g2.v, f.v);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn malformed_snapshot_reports_line() {
        let p = Path::new("inline.csv");
        let err = read_snapshot(
            "x,re_u,im_u,re_v,im_v\n0,1,2,3,4\n1,1,oops,3,4\n".as_bytes(),
            p,
        )
        .unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        let err = read_snapshot("x,a,b\n0,1,2\n".as_bytes(), p).unwrap_err();
        assert!(err.to_string().contains("header"), "{err}");
        let err = read_snapshot(
            "x,re_u,im_u,re_v,im_v\n1,0,0,0,0\n0,0,0,0,0\n".as_bytes(),
            p,
        )
        .unwrap_err();
        assert!(err.to_string().contains("increasing"), "{err}");
    }

    #[test]
    fn resample_interpolates_linearly() {
        let rows = vec![
            SnapshotRow {
                x: 0.0,
                u: C64::new(0.0, 0.0),
                v: C64::new(1.0, 0.0),
            },
            SnapshotRow {
                x: 1.0,
                u: C64::new(2.0, 0.0),
                v: C64::new(1.0, 0.0),
            },
        ];
        let g = GridSpec::new(0.0, 1.0, 4).unwrap();
        let u = resample(&rows, &g, Component::U);
        assert_eq!(u[0], C64::new(0.25, 0.0));
        assert_eq!(u[3], C64::new(1.75, 0.0));
        let g = GridSpec::new(-1.0, 2.0, 3).unwrap();
        let v = resample(&rows, &g, Component::V);
        assert_eq!(
            v,
            vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0)]
        );
    }

    #[test]
    fn init_is_deterministic() {
        let g = grid();
        let p = Profile::gaussian(C64::new(0.4, 0.1), 1.0, 2.0);
        assert_eq!(
            init_field(g, &p, &p).unwrap(),
            init_field(g, &p, &p).unwrap()
        );
    }

    #[test]
    fn sampling_converges_in_l2() {
        // Cell-centre sampling vs a fine reference sampled at the same points.
        let p = Profile::gaussian(C64::new(1.0, 0.0), 0.3, 1.0);
        let err = |n: usize| {
            let g = GridSpec::new(-8.0, 8.0, n).unwrap();
            let f = init_field(g, &p, &Profile::Zero).unwrap();
            // Piecewise-constant reconstruction error against the profile, midpoint quadrature
            // on a 16x finer partition of each cell.
            let dx = g.dx();
            let mut s = 0.0;
            for (i, ui) in f.u.iter().enumerate() {
                for k in 0..16 {
                    let x = g.x_min() + (i as f64 + (k as f64 + 0.5) / 16.0) * dx;
                    s += (ui - p.value_at(x).unwrap()).norm_sqr() * dx / 16.0;
                }
            }
            s.sqrt()
        };
        let (e1, e2) = (err(128), err(256));
        assert!(e1 / e2 > 1.9, "ratio {}", e1 / e2);
    }
}
