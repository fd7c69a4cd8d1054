//! Time grids and the decay-curve exchange format.

use std::io::{self, BufRead, Write};

use crate::error::{Error, Result};
use crate::Real;

/// Output times of a run. Always starts at `0` and is strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid<T> {
    times: Vec<T>,
}

impl<T: Real> TimeGrid<T> {
    /// `points` equally spaced times on `[0, t_max]`.
    pub fn uniform(t_max: T, points: usize) -> Result<Self> {
        if !(t_max.is_finite() && t_max >= T::zero()) {
            return Err(Error::InvalidGrid(format!("t_max must be finite and >= 0, got {t_max}")));
        }
        if points == 0 {
            return Err(Error::InvalidGrid("at least one point is required".into()));
        }
        if points == 1 {
            if t_max > T::zero() {
                return Err(Error::InvalidGrid("a single point cannot span a positive t_max".into()));
            }
            return Ok(Self { times: vec![T::zero()] });
        }
        if t_max == T::zero() {
            return Err(Error::InvalidGrid("several points need a positive t_max".into()));
        }
        let n = T::from_usize(points - 1).unwrap();
        let times = (0..points)
            .map(|k| t_max * T::from_usize(k).unwrap() / n)
            .collect();
        Ok(Self { times })
    }

    /// Uniform grid with spacing `step` from 0 up to and including `t_max`
    /// (rounded to the nearest whole number of steps).
    pub fn with_step(t_max: T, step: T) -> Result<Self> {
        if !(step > T::zero()) {
            return Err(Error::InvalidGrid(format!("step must be positive, got {step}")));
        }
        let intervals = (t_max / step).round().to_usize().unwrap_or(0);
        Self::uniform(step * T::from_usize(intervals).unwrap(), intervals + 1)
    }

    pub fn from_times(times: Vec<T>) -> Result<Self> {
        match times.first() {
            None => return Err(Error::InvalidGrid("empty grid".into())),
            Some(t0) if *t0 != T::zero() => {
                return Err(Error::InvalidGrid(format!("grid must start at 0, starts at {t0}")))
            }
            _ => {}
        }
        check_increasing(&times)?;
        Ok(Self { times })
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn t_max(&self) -> T {
        *self.times.last().unwrap()
    }

    /// Spacing if the grid is uniform to within rounding.
    pub fn uniform_spacing(&self) -> Option<T> {
        if self.times.len() < 2 {
            return None;
        }
        let h = self.t_max() / T::from_usize(self.times.len() - 1).unwrap();
        let tol = T::lit(1e3) * T::epsilon() * self.t_max();
        self.times
            .iter()
            .enumerate()
            .all(|(k, &t)| (t - h * T::from_usize(k).unwrap()).abs() <= tol)
            .then_some(h)
    }
}

fn check_increasing<T: Real>(times: &[T]) -> Result<()> {
    if let Some(bad) = times.iter().find(|t| !t.is_finite()) {
        return Err(Error::InvalidGrid(format!("non-finite time {bad}")));
    }
    if let Some(w) = times.windows(2).find(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid(format!("times not strictly increasing at {} -> {}", w[0], w[1])));
    }
    Ok(())
}

/// Survival probability sampled on a time grid, optionally with a standard
/// error per point (trajectory ensembles).
#[derive(Debug, Clone, PartialEq)]
pub struct DecayCurve<T> {
    times: Vec<T>,
    ps: Vec<T>,
    stderr: Option<Vec<T>>,
}

impl<T: Real> DecayCurve<T> {
    pub fn new(times: Vec<T>, ps: Vec<T>) -> Result<Self> {
        Self::build(times, ps, None)
    }

    pub fn with_stderr(times: Vec<T>, ps: Vec<T>, stderr: Vec<T>) -> Result<Self> {
        Self::build(times, ps, Some(stderr))
    }

    fn build(times: Vec<T>, ps: Vec<T>, stderr: Option<Vec<T>>) -> Result<Self> {
        if times.len() != ps.len() || stderr.as_ref().is_some_and(|s| s.len() != times.len()) {
            return Err(Error::InvalidGrid(format!(
                "column lengths differ: {} times, {} values",
                times.len(),
                ps.len()
            )));
        }
        check_increasing(&times)?;
        Ok(Self { times, ps, stderr })
    }

    /// Samples `f(t)` on a grid.
    pub fn from_fn(grid: &TimeGrid<T>, f: impl Fn(T) -> T) -> Self {
        let ps = grid.times().iter().map(|&t| f(t)).collect();
        Self { times: grid.times().to_vec(), ps, stderr: None }
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn ps(&self) -> &[T] {
        &self.ps
    }

    pub fn stderr(&self) -> Option<&[T]> {
        self.stderr.as_deref()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (T, T)> + '_ {
        self.times.iter().copied().zip(self.ps.iter().copied())
    }

    /// Points with `lo <= t <= hi`.
    pub fn window(&self, lo: T, hi: T) -> impl Iterator<Item = (T, T)> + '_ {
        self.iter().filter(move |&(t, _)| t >= lo && t <= hi)
    }

    /// Keeps the points at the given (increasing) indices.
    pub fn select(&self, indices: &[usize]) -> Self {
        let pick = |v: &[T]| indices.iter().map(|&i| v[i]).collect::<Vec<_>>();
        Self {
            times: pick(&self.times),
            ps: pick(&self.ps),
            stderr: self.stderr.as_deref().map(pick),
        }
    }

    /// Multiplies every probability (and standard error) by `factor`.
    pub fn scaled(&self, factor: T) -> Self {
        let scale = |v: &[T]| v.iter().map(|&x| x * factor).collect::<Vec<_>>();
        Self { times: self.times.clone(), ps: scale(&self.ps), stderr: self.stderr.as_deref().map(scale) }
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.ps
            .iter()
            .zip(&other.ps)
            .map(|(a, b)| (*a - *b).abs())
            .fold(T::zero(), T::max)
    }

    /// Writes `t,ps[,stderr]` rows with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        match &self.stderr {
            Some(se) => {
                writeln!(out, "t,ps,stderr")?;
                for ((t, p), s) in self.times.iter().zip(&self.ps).zip(se) {
                    writeln!(out, "{},{},{}", fmt17(*t), fmt17(*p), fmt17(*s))?;
                }
            }
            None => {
                writeln!(out, "t,ps")?;
                for (t, p) in self.iter() {
                    writeln!(out, "{},{}", fmt17(t), fmt17(p))?;
                }
            }
        }
        out.flush()
    }

    /// Reads the format produced by [`DecayCurve::write_csv`].
    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = match lines.next() {
            Some(Ok(h)) => h,
            _ => return Err(Error::InvalidGrid("missing CSV header".into())),
        };
        let with_err = match header.trim() {
            "t,ps" => false,
            "t,ps,stderr" => true,
            other => return Err(Error::InvalidGrid(format!("unexpected CSV header `{other}`"))),
        };
        let (mut times, mut ps, mut se) = (Vec::new(), Vec::new(), Vec::new());
        for (row, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::InvalidGrid(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<T> = line
                .split(',')
                .map(|f| f.trim().parse::<f64>().map(T::lit))
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::InvalidGrid(format!("row {}: {e}", row + 2)))?;
            if fields.len() != if with_err { 3 } else { 2 } {
                return Err(Error::InvalidGrid(format!("row {}: wrong column count", row + 2)));
            }
            times.push(fields[0]);
            ps.push(fields[1]);
            if with_err {
                se.push(fields[2]);
            }
        }
        Self::build(times, ps, with_err.then_some(se))
    }
}

/// Formats a value with 17 significant digits, enough to round-trip an `f64`.
pub fn fmt17<T: Real>(x: T) -> String {
    format!("{:.16e}", x.to_f64_lossy())
}
