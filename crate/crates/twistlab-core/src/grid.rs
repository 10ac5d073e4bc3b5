//! Discretization of C^n ≅ R^{2n}: uniform cell-centered grids, midpoint
//! quadrature, cube geometry, finite-difference vector fields, the twisted
//! Laplacian, and twisted translation.
//!
//! Coordinates are ordered `(x_1 … x_n, y_1 … y_n)`; samples are stored
//! row-major with the last axis fastest. The lattice is cell-centered,
//! `x = -L/2 + (i + 1/2) h` per axis, so no sample sits on a cube boundary.

use crate::{Result, TwistError};
use num_complex::Complex64;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

/// Uniform lattice on `[-L/2, L/2]^{2n}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    n: usize,
    m: usize,
    l: f64,
}

impl Grid {
    /// Build a grid with `m` points per axis (power of two, ≥ 8) and physical
    /// extent `l` per axis.
    pub fn new(n: usize, m: usize, l: f64) -> Result<Self> {
        if n < 1 {
            return Err(TwistError::InvalidGrid("complex dimension n must be ≥ 1".into()));
        }
        if m < 8 {
            return Err(TwistError::InvalidGrid(format!("M = {m} < 8")));
        }
        if !m.is_power_of_two() {
            return Err(TwistError::InvalidGrid(format!("M = {m} is not a power of two")));
        }
        if !l.is_finite() || l <= 0.0 {
            return Err(TwistError::InvalidGrid(format!("L = {l} must be finite and positive")));
        }
        Ok(Grid { n, m, l })
    }

    /// Complex dimension.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Points per axis.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Physical extent per axis.
    pub fn l(&self) -> f64 {
        self.l
    }

    /// Lattice spacing `h = L/M`.
    pub fn h(&self) -> f64 {
        self.l / self.m as f64
    }

    /// Number of real axes, `2n`.
    pub fn axes(&self) -> usize {
        2 * self.n
    }

    /// Total point count `M^{2n}`.
    pub fn points(&self) -> usize {
        self.m.pow(self.axes() as u32)
    }

    /// Quadrature cell volume `h^{2n}`.
    pub fn cell_volume(&self) -> f64 {
        self.h().powi(self.axes() as i32)
    }

    /// Coordinate of lattice index `i` along any axis.
    pub fn coord(&self, i: usize) -> f64 {
        -0.5 * self.l + (i as f64 + 0.5) * self.h()
    }

    /// Stride of `axis` in the row-major layout (last axis fastest).
    pub fn stride(&self, axis: usize) -> usize {
        self.m.pow((self.axes() - 1 - axis) as u32)
    }

    /// Decompose a flat index into per-axis lattice indices.
    pub fn unravel(&self, mut idx: usize, out: &mut [usize]) {
        for axis in (0..self.axes()).rev() {
            out[axis] = idx % self.m;
            idx /= self.m;
        }
    }

    /// Visit every lattice point in storage order with its coordinates.
    pub fn for_each_point(&self, mut visit: impl FnMut(usize, &[f64])) {
        let axes = self.axes();
        let mut iidx = vec![0usize; axes];
        let mut coords = vec![self.coord(0); axes];
        let total = self.points();
        for idx in 0..total {
            visit(idx, &coords);
            // Increment the mixed-radix counter, updating coordinates in place.
            for axis in (0..axes).rev() {
                iidx[axis] += 1;
                if iidx[axis] < self.m {
                    coords[axis] = self.coord(iidx[axis]);
                    break;
                }
                iidx[axis] = 0;
                coords[axis] = self.coord(0);
            }
        }
    }
}

/// Complex samples on a [`Grid`], indexed in row-major lattice order.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub grid: Grid,
    pub values: Vec<Complex64>,
}

impl GridFunction {
    /// The zero function.
    pub fn zeros(grid: Grid) -> Self {
        GridFunction {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.points()],
        }
    }

    /// Sample a function of the point coordinates `(x_1…x_n, y_1…y_n)`.
    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let mut values = vec![Complex64::new(0.0, 0.0); grid.points()];
        grid.for_each_point(|idx, coords| values[idx] = f(coords));
        GridFunction { grid, values }
    }

    /// All samples finite?
    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub fn scale(&self, c: Complex64) -> GridFunction {
        GridFunction {
            grid: self.grid,
            values: self.values.iter().map(|&v| v * c).collect(),
        }
    }

    pub fn add(&self, other: &GridFunction) -> GridFunction {
        assert_eq!(self.grid, other.grid, "grid mismatch in add");
        GridFunction {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &GridFunction) -> GridFunction {
        assert_eq!(self.grid, other.grid, "grid mismatch in sub");
        GridFunction {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| a - b)
                .collect(),
        }
    }

    /// In-place `self += c * other`.
    pub fn axpy(&mut self, c: Complex64, other: &GridFunction) {
        assert_eq!(self.grid, other.grid, "grid mismatch in axpy");
        for (a, &b) in self.values.iter_mut().zip(&other.values) {
            *a += c * b;
        }
    }

    /// Largest sample magnitude.
    pub fn linf(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Midpoint-rule L2 inner product `∫ f conj(g)`.
    pub fn inner(&self, other: &GridFunction) -> Complex64 {
        assert_eq!(self.grid, other.grid, "grid mismatch in inner");
        let mut acc = Complex64::new(0.0, 0.0);
        for (&a, &b) in self.values.iter().zip(&other.values) {
            acc += a * b.conj();
        }
        acc * Complex64::new(self.grid.cell_volume(), 0.0)
    }

    /// Midpoint-rule L2 norm.
    pub fn l2(&self) -> f64 {
        lp_norm(self, 2.0)
    }

    /// Relative L2 distance `‖self - other‖ / ‖other‖`.
    pub fn rel_l2_error(&self, reference: &GridFunction) -> f64 {
        let denom = reference.l2();
        if denom == 0.0 {
            return self.l2();
        }
        self.sub(reference).l2() / denom
    }
}

/// Axis-aligned cube `Q(z0, r) = z0 + [-r/2, r/2]^{2n}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cube {
    /// Center, as real coordinates `(x_1…x_n, y_1…y_n)`.
    pub center: Vec<f64>,
    /// Side length.
    pub side: f64,
}

impl Cube {
    pub fn new(center: Vec<f64>, side: f64) -> Result<Self> {
        if side <= 0.0 || !side.is_finite() {
            return Err(TwistError::InvalidArgument(format!("cube side {side} must be positive")));
        }
        Ok(Cube { center, side })
    }

    /// Closed-box membership test.
    pub fn contains(&self, point: &[f64]) -> bool {
        point
            .iter()
            .zip(&self.center)
            .all(|(&p, &c)| (p - c).abs() <= 0.5 * self.side)
    }
}

/// Midpoint-rule p-"norm" `(Σ |f|^p h^{2n})^{1/p}`, valid for any `p > 0`.
pub fn lp_norm(f: &GridFunction, p: f64) -> f64 {
    assert!(p > 0.0, "lp_norm requires p > 0");
    let vol = f.grid.cell_volume();
    if (p - 2.0).abs() < 1e-15 {
        let s: f64 = f.values.iter().map(|v| v.norm_sqr()).sum();
        return (s * vol).sqrt();
    }
    let s: f64 = f.values.iter().map(|v| v.norm().powf(p)).sum();
    (s * vol).powf(1.0 / p)
}

/// Which vector field to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    /// `X_j(λ) = ∂/∂x_j + (iλ/2) y_j`
    X,
    /// `Y_j(λ) = ∂/∂y_j - (iλ/2) x_j`
    Y,
}

/// 6th-order centered first-difference stencil weights for offsets 1, 2, 3.
const D1_W: [f64; 3] = [3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0];

/// First derivative along `axis` (6th-order centered stencil, zero extension
/// outside the box).
pub fn derivative_axis(f: &GridFunction, axis: usize) -> GridFunction {
    let grid = f.grid;
    let m = grid.m();
    let stride = grid.stride(axis);
    let inv_h = 1.0 / grid.h();
    let mut out = vec![Complex64::new(0.0, 0.0); f.values.len()];
    let vals = &f.values;
    for (idx, slot) in out.iter_mut().enumerate() {
        let ai = (idx / stride) % m;
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, &w) in D1_W.iter().enumerate() {
            let off = k + 1;
            if ai + off < m {
                acc += w * vals[idx + off * stride];
            }
            if ai >= off {
                acc -= w * vals[idx - off * stride];
            }
        }
        *slot = acc * inv_h;
    }
    GridFunction { grid, values: out }
}

/// Apply `X_j(λ)` or `Y_j(λ)` (1-based `j`, `λ = ±1`).
pub fn apply_vector_field(f: &GridFunction, j: usize, kind: FieldKind, lambda: f64) -> Result<GridFunction> {
    let n = f.grid.n();
    if j < 1 || j > n {
        return Err(TwistError::InvalidArgument(format!("axis index j = {j} outside 1..={n}")));
    }
    let (deriv_axis, mult_axis, sign) = match kind {
        FieldKind::X => (j - 1, n + j - 1, 1.0),
        FieldKind::Y => (n + j - 1, j - 1, -1.0),
    };
    let mut out = derivative_axis(f, deriv_axis);
    let grid = f.grid;
    let m = grid.m();
    let stride = grid.stride(mult_axis);
    let half_lambda = 0.5 * lambda * sign;
    for (idx, v) in out.values.iter_mut().enumerate() {
        let c = grid.coord((idx / stride) % m);
        *v += Complex64::new(0.0, half_lambda * c) * f.values[idx];
    }
    Ok(out)
}

/// The twisted Laplacian `L f = -Σ_j (X_j(1)^2 + Y_j(1)^2) f`, built by
/// composing [`apply_vector_field`].
pub fn apply_twisted_laplacian(f: &GridFunction) -> Result<GridFunction> {
    let mut out = GridFunction::zeros(f.grid);
    for j in 1..=f.grid.n() {
        for kind in [FieldKind::X, FieldKind::Y] {
            let once = apply_vector_field(f, j, kind, 1.0)?;
            let twice = apply_vector_field(&once, j, kind, 1.0)?;
            out.axpy(Complex64::new(-1.0, 0.0), &twice);
        }
    }
    Ok(out)
}

/// `Im(z · conj(w))` with both arguments as real coordinate vectors.
pub fn im_z_wbar(z: &[f64], w: &[f64]) -> f64 {
    let n = z.len() / 2;
    let mut s = 0.0;
    for j in 0..n {
        // Im(z_j conj(w_j)) = y_j v_j - x_j v'_j
        s += z[n + j] * w[j] - z[j] * w[n + j];
    }
    s
}

/// Twisted translation `τ_w f(z) = f(z - w) e^{(i/2) Im(z·conj(w))}`.
///
/// `w` is resolved to the nearest lattice vector (integer multiples of `h`);
/// a rounding beyond `h/2` or `|w| > L/4` is logged as a warning.
pub fn twisted_translate(f: &GridFunction, w: &[f64]) -> Result<GridFunction> {
    let grid = f.grid;
    let axes = grid.axes();
    if w.len() != axes {
        return Err(TwistError::InvalidArgument(format!(
            "translation vector has {} components, expected {axes}",
            w.len()
        )));
    }
    if w.iter().any(|c| !c.is_finite()) {
        return Err(TwistError::InvalidArgument("translation vector must be finite".into()));
    }
    let h = grid.h();
    let mut shift = vec![0isize; axes];
    let mut w_lat = vec![0.0; axes];
    for a in 0..axes {
        let s = (w[a] / h).round();
        if (w[a] - s * h).abs() > 0.5 * h * (1.0 + 1e-12) {
            log::warn!("twisted_translate: component {a} rounded by more than h/2");
        }
        shift[a] = s as isize;
        w_lat[a] = s * h;
    }
    let norm: f64 = w_lat.iter().map(|c| c * c).sum::<f64>().sqrt();
    if norm > grid.l() / 4.0 {
        log::warn!("twisted_translate: |w| = {norm:.3} exceeds L/4; support loss likely");
    }

    let m = grid.m() as isize;
    let mut out = GridFunction::zeros(grid);
    let mut iidx = vec![0usize; axes];
    let mut src_idx = vec![0isize; axes];
    grid.for_each_point(|idx, coords| {
        grid.unravel(idx, &mut iidx);
        let mut inside = true;
        for a in 0..axes {
            let s = iidx[a] as isize - shift[a];
            if s < 0 || s >= m {
                inside = false;
                break;
            }
            src_idx[a] = s;
        }
        if inside {
            let mut src = 0usize;
            for a in 0..axes {
                src = src * grid.m() + src_idx[a] as usize;
            }
            let phase = 0.5 * im_z_wbar(coords, &w_lat);
            out.values[idx] = f.values[src] * Complex64::new(phase.cos(), phase.sin());
        }
    });
    Ok(out)
}

// ---------------------------------------------------------------------------
// twgf v1 on-disk format
// ---------------------------------------------------------------------------

/// Write a grid function in the `twgf v1` format: a UTF-8 header
/// `twgf 1 <n> <M> <L>` followed by one `re im` line per sample in row-major
/// lattice order, 17 significant digits.
pub fn write_twgf(f: &GridFunction, path: &Path) -> Result<()> {
    let io_err = |source| TwistError::Io { path: path.display().to_string(), source };
    let file = std::fs::File::create(path).map_err(io_err)?;
    let mut out = std::io::BufWriter::new(file);
    writeln!(out, "twgf 1 {} {} {:.16e}", f.grid.n(), f.grid.m(), f.grid.l()).map_err(io_err)?;
    for v in &f.values {
        writeln!(out, "{:.16e} {:.16e}", v.re, v.im).map_err(io_err)?;
    }
    out.flush().map_err(io_err)?;
    Ok(())
}

/// Read a `twgf v1` file.
pub fn read_twgf(path: &Path) -> Result<GridFunction> {
    let p = path.display().to_string();
    let io_err = |source| TwistError::Io { path: p.clone(), source };
    let parse_err = |msg: String| TwistError::Parse { path: p.clone(), msg };
    let file = std::fs::File::open(path).map_err(io_err)?;
    let mut lines = BufReader::new(file).lines();
    let header = lines
        .next()
        .ok_or_else(|| parse_err("empty file".into()))?
        .map_err(io_err)?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 5 || fields[0] != "twgf" || fields[1] != "1" {
        return Err(parse_err(format!("bad header: {header:?}")));
    }
    let n: usize = fields[2].parse().map_err(|_| parse_err("bad n".into()))?;
    let m: usize = fields[3].parse().map_err(|_| parse_err("bad M".into()))?;
    let l: f64 = fields[4].parse().map_err(|_| parse_err("bad L".into()))?;
    let grid = Grid::new(n, m, l)?;
    let mut values = Vec::with_capacity(grid.points());
    for line in lines {
        let line = line.map_err(io_err)?;
        if line.trim().is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let re: f64 = it
            .next()
            .ok_or_else(|| parse_err("missing re".into()))?
            .parse()
            .map_err(|_| parse_err("bad re".into()))?;
        let im: f64 = it
            .next()
            .ok_or_else(|| parse_err("missing im".into()))?
            .parse()
            .map_err(|_| parse_err("bad im".into()))?;
        values.push(Complex64::new(re, im));
    }
    if values.len() != grid.points() {
        return Err(parse_err(format!(
            "expected {} samples, found {}",
            grid.points(),
            values.len()
        )));
    }
    Ok(GridFunction { grid, values })
}
