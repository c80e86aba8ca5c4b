//! Plain-text gridded inputs.
//!
//! `OECS-GRID 1` files hold velocities:
//!
//! ```text
//! OECS-GRID 1
//! nx ny nt
//! x0 dx y0 dy t0 dt
//! u v            (nx·ny·nt lines, x fastest, then y, then t)
//! ```
//!
//! `OECS-SSH 1` files share the layout with a single `h` column of sea-surface
//! height in metres on a longitude/latitude grid in degrees, time in days.
//!
//! Blank lines and lines starting with `#` are ignored after the magic line.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use oecs_core::field::{GridAxis, GriddedField};
use oecs_core::math::Vec2;

use crate::error::{OecsError, Result};

pub const GRID_MAGIC: &str = "OECS-GRID 1";
pub const SSH_MAGIC: &str = "OECS-SSH 1";

/// Sea-surface height on a longitude × latitude × time lattice.
#[derive(Clone, Debug, PartialEq)]
pub struct SshGrid {
    pub lon: GridAxis,
    pub lat: GridAxis,
    pub t0: f64,
    pub dt: f64,
    pub nt: usize,
    /// Metres; longitude fastest, then latitude, then time.
    pub h: Vec<f64>,
}

impl SshGrid {
    pub fn new(lon: GridAxis, lat: GridAxis, t0: f64, dt: f64, nt: usize, h: Vec<f64>) -> Result<Self> {
        if nt == 0 || h.len() != lon.count * lat.count * nt {
            return Err(OecsError::Data("SSH sample count does not match nx*ny*nt".into()));
        }
        if h.iter().any(|v| !v.is_finite()) {
            return Err(OecsError::Data("non-finite SSH sample".into()));
        }
        Ok(SshGrid { lon, lat, t0, dt, nt, h })
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize, k: usize) -> f64 {
        self.h[i + self.lon.count * (j + self.lat.count * k)]
    }
}

struct Header {
    nx: usize,
    ny: usize,
    nt: usize,
    x: GridAxis,
    y: GridAxis,
    t0: f64,
    dt: f64,
}

struct Lines<'a> {
    path: PathBuf,
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn new(path: &Path, text: &'a str) -> Self {
        Lines { path: path.to_path_buf(), inner: text.lines().enumerate() }
    }

    fn error(&self, line: usize, message: impl Into<String>) -> OecsError {
        OecsError::Parse { path: self.path.clone(), line, message: message.into() }
    }

    /// Next line that is neither blank nor a `#` comment, with its 1-based number.
    fn next(&mut self) -> Result<(usize, &'a str)> {
        for (k, l) in self.inner.by_ref() {
            let l = l.trim();
            if !l.is_empty() && !l.starts_with('#') {
                return Ok((k + 1, l));
            }
        }
        Err(OecsError::Parse { path: self.path.clone(), line: 0, message: "unexpected end of file".into() })
    }

    fn numbers<T: std::str::FromStr>(&mut self, n: usize) -> Result<(usize, Vec<T>)> {
        let (k, l) = self.next()?;
        let vals: Vec<T> = l
            .split_whitespace()
            .map(|w| w.parse::<T>().map_err(|_| self.error(k, format!("cannot parse `{w}`"))))
            .collect::<Result<_>>()?;
        if vals.len() != n {
            return Err(self.error(k, format!("expected {n} values, found {}", vals.len())));
        }
        Ok((k, vals))
    }
}

fn header(lines: &mut Lines<'_>, magic: &str) -> Result<Header> {
    let (k, first) = lines.next()?;
    if k != 1 || first != magic {
        return Err(lines.error(k, format!("expected `{magic}`")));
    }
    let (k, dims) = lines.numbers::<usize>(3)?;
    let (nx, ny, nt) = (dims[0], dims[1], dims[2]);
    let (k2, geo) = lines.numbers::<f64>(6)?;
    let axis = |start, step, count, what: &str| {
        GridAxis::new(start, step, count).map_err(|e| lines.error(k2, format!("{what} axis: {e}")))
    };
    let x = axis(geo[0], geo[1], nx, "x")?;
    let y = axis(geo[2], geo[3], ny, "y")?;
    if nt == 0 {
        return Err(lines.error(k, "nt must be at least 1"));
    }
    if nt > 1 && (geo[5].is_nan() || geo[5] <= 0.0) {
        return Err(lines.error(k2, "dt must be positive"));
    }
    Ok(Header { nx, ny, nt, x, y, t0: geo[4], dt: geo[5] })
}

pub fn parse_grid(path: &Path, text: &str) -> Result<GriddedField> {
    let mut lines = Lines::new(path, text);
    let h = header(&mut lines, GRID_MAGIC)?;
    let n = h.nx * h.ny * h.nt;
    let mut samples = Vec::with_capacity(n);
    for _ in 0..n {
        let (k, v) = lines.numbers::<f64>(2)?;
        if !v.iter().all(|x| x.is_finite()) {
            return Err(lines.error(k, "non-finite velocity"));
        }
        samples.push(Vec2::new(v[0], v[1]));
    }
    GriddedField::new(h.x, h.y, h.t0, h.dt, h.nt, samples).map_err(|e| OecsError::Data(e.to_string()))
}

pub fn parse_ssh(path: &Path, text: &str) -> Result<SshGrid> {
    let mut lines = Lines::new(path, text);
    let h = header(&mut lines, SSH_MAGIC)?;
    let n = h.nx * h.ny * h.nt;
    let mut vals = Vec::with_capacity(n);
    for _ in 0..n {
        let (k, v) = lines.numbers::<f64>(1)?;
        if !v[0].is_finite() {
            return Err(lines.error(k, "non-finite height"));
        }
        vals.push(v[0]);
    }
    SshGrid::new(h.x, h.y, h.t0, h.dt, h.nt, vals)
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| OecsError::io(path, e))
}

pub fn read_grid(path: &Path) -> Result<GriddedField> {
    parse_grid(path, &read(path)?)
}

pub fn read_ssh(path: &Path) -> Result<SshGrid> {
    parse_ssh(path, &read(path)?)
}

/// Shortest round-trip representation, so written files reload bit-exactly.
fn header_text(magic: &str, x: GridAxis, y: GridAxis, t0: f64, dt: f64, nt: usize) -> String {
    format!(
        "{magic}\n{} {} {nt}\n{:?} {:?} {:?} {:?} {t0:?} {dt:?}\n",
        x.count, y.count, x.start, x.step, y.start, y.step
    )
}

pub fn format_grid(field: &GriddedField) -> String {
    format_grid_with_comments(field, &[])
}

/// Like [`format_grid`], with `# ` comment lines after the magic line.
pub fn format_grid_with_comments(field: &GriddedField, comments: &[&str]) -> String {
    let (t0, dt, nt) = field.time_axis();
    let mut s = header_text(GRID_MAGIC, field.x_axis(), field.y_axis(), t0, dt, nt);
    if !comments.is_empty() {
        let body = s.split_off(GRID_MAGIC.len() + 1);
        for c in comments {
            let _ = writeln!(s, "# {c}");
        }
        s.push_str(&body);
    }
    for v in field.samples() {
        let _ = writeln!(s, "{:?} {:?}", v.x, v.y);
    }
    s
}

pub fn format_ssh(ssh: &SshGrid) -> String {
    let mut s = header_text(SSH_MAGIC, ssh.lon, ssh.lat, ssh.t0, ssh.dt, ssh.nt);
    for h in &ssh.h {
        let _ = writeln!(s, "{h:?}");
    }
    s
}

pub fn write_grid(path: &Path, field: &GriddedField) -> Result<()> {
    fs::write(path, format_grid(field)).map_err(|e| OecsError::io(path, e))
}

pub fn write_ssh(path: &Path, ssh: &SshGrid) -> Result<()> {
    fs::write(path, format_ssh(ssh)).map_err(|e| OecsError::io(path, e))
}
