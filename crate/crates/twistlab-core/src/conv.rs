//! Twisted convolution `(f × g)(z) = ∫ f(w) g(z-w) e^{(i/2) Im(z·conj(w))} dw`.
//!
//! Two interchangeable realizations of the same discrete object:
//!
//! * a reference midpoint-rule quadrature, `O(P^2)` in the point count, and
//! * a chirp-factorized fast path for `n = 1` that splits the symplectic
//!   phase as `e^{(i/2) Im(z·conj(w))} = e^{(i/2) y v} e^{-(i/2) x v'}`
//!   (`z = x + iy`, `w = v + iv'`) and runs the inner `v`-sum as a cyclic
//!   convolution on zero-padded length-2M transforms, `O(M^3 log M)`.
//!
//! The lattice is cell-centered, so the differences `z - w` fall halfway
//! between samples; both paths evaluate `g` there through the same fixed
//! half-sample resampling filter (6-tap midpoint Lagrange per axis, zero
//! extension), which keeps the two modes bit-comparable and the quadrature
//! accurate to `O(h^6)` for smooth decaying integrands.

use crate::grid::{Grid, GridFunction};
use crate::laguerre::{laguerre_weighted_sum, phi_norm_sq, LaguerreBasis};
use crate::propagators::MultiplierSpec;
use crate::{Result, TwistError};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Which convolution algorithm a [`ConvPlan`] runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvMode {
    Direct,
    Fast,
}

/// Midpoint 6-tap Lagrange weights for sources `k0-2 … k0+3`.
const W6: [f64; 6] = [
    3.0 / 256.0,
    -25.0 / 256.0,
    150.0 / 256.0,
    150.0 / 256.0,
    -25.0 / 256.0,
    3.0 / 256.0,
];

/// Reusable workspace for twisted convolutions on one grid.
pub struct ConvPlan {
    pub grid: Grid,
    pub mode: ConvMode,
    /// `T[a·M + b] = e^{(i/2) c_a c_b}` (symmetric chirp table, n = 1 only).
    phase: Vec<Complex64>,
    fft_fwd: Option<Arc<dyn Fft<f64>>>,
    fft_inv: Option<Arc<dyn Fft<f64>>>,
}

impl std::fmt::Debug for ConvPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ConvPlan")
            .field("grid", &self.grid)
            .field("mode", &self.mode)
            .finish()
    }
}

impl ConvPlan {
    pub fn new(grid: Grid, mode: ConvMode) -> Self {
        let m = grid.m();
        let mut phase = Vec::new();
        if grid.n() == 1 {
            phase.reserve(m * m);
            for a in 0..m {
                let ca = grid.coord(a);
                for b in 0..m {
                    phase.push(Complex64::from_polar(1.0, 0.5 * ca * grid.coord(b)));
                }
            }
        }
        let (fft_fwd, fft_inv) = if mode == ConvMode::Fast && grid.n() == 1 {
            let mut planner = FftPlanner::new();
            (
                Some(planner.plan_fft_forward(2 * m)),
                Some(planner.plan_fft_inverse(2 * m)),
            )
        } else {
            (None, None)
        };
        ConvPlan { grid, mode, phase, fft_fwd, fft_inv }
    }

    fn check(&self, f: &GridFunction, g: &GridFunction) -> Result<()> {
        if f.grid != self.grid || g.grid != self.grid {
            return Err(TwistError::GridMismatch(
                "convolution operands must share the plan's grid".into(),
            ));
        }
        Ok(())
    }
}

/// Resample `g` onto the difference lattice `{d·h}` (extent `2M-1` per axis),
/// zero extension outside the box.
fn resample_to_difference_lattice(g: &GridFunction) -> Vec<Complex64> {
    let grid = g.grid;
    let m = grid.m();
    let ext = 2 * m - 1;
    let axes = grid.axes();
    let mut cur = g.values.clone();
    let mut extents = vec![m; axes];
    for axis in 0..axes {
        let mut out_extents = extents.clone();
        out_extents[axis] = ext;
        let out_len: usize = out_extents.iter().product();
        let mut out = vec![Complex64::new(0.0, 0.0); out_len];
        let in_stride: usize = extents[axis + 1..].iter().product();
        let out_stride: usize = out_extents[axis + 1..].iter().product();
        let outer: usize = extents[..axis].iter().product();
        let in_block = extents[axis] * in_stride;
        let out_block = ext * out_stride;
        for o in 0..outer {
            for t in 0..ext {
                let d = t as isize - (m as isize - 1);
                let k0 = d + m as isize / 2 - 1;
                for inner in 0..out_stride {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (s, &w) in W6.iter().enumerate() {
                        let k = k0 + s as isize - 2;
                        if k >= 0 && (k as usize) < extents[axis] {
                            acc += w * cur[o * in_block + k as usize * in_stride + inner];
                        }
                    }
                    out[o * out_block + t * out_stride + inner] = acc;
                }
            }
        }
        cur = out;
        extents = out_extents;
    }
    cur
}

/// Twisted convolution through a plan: dispatches on the plan mode, with the
/// fast path falling back to direct (with a log notice) off its `n = 1`
/// precondition.
pub fn twisted_conv(plan: &ConvPlan, f: &GridFunction, g: &GridFunction) -> Result<GridFunction> {
    plan.check(f, g)?;
    match plan.mode {
        ConvMode::Direct => twisted_conv_direct(plan, f, g),
        ConvMode::Fast => twisted_conv_fast(plan, f, g),
    }
}

/// Reference quadrature of the defining integral at every lattice point.
pub fn twisted_conv_direct(plan: &ConvPlan, f: &GridFunction, g: &GridFunction) -> Result<GridFunction> {
    plan.check(f, g)?;
    let grid = plan.grid;
    let g_diff = resample_to_difference_lattice(g);
    if grid.n() == 1 {
        Ok(direct_n1(plan, f, &g_diff))
    } else {
        Ok(direct_generic(plan, f, &g_diff))
    }
}

fn direct_n1(plan: &ConvPlan, f: &GridFunction, g_diff: &[Complex64]) -> GridFunction {
    let grid = plan.grid;
    let m = grid.m();
    let ext = 2 * m - 1;
    let vol = grid.cell_volume();
    let t = &plan.phase;
    let mut out = GridFunction::zeros(grid);
    for ix in 0..m {
        let tx_row = &t[ix * m..(ix + 1) * m];
        for iy in 0..m {
            let ty_row = &t[iy * m..(iy + 1) * m];
            let mut acc = Complex64::new(0.0, 0.0);
            for jx in 0..m {
                // e^{(i/2) y v} with v the x-coordinate of w.
                let ty = ty_row[jx];
                let g_row = &g_diff[(ix + m - 1 - jx) * ext..];
                let f_row = &f.values[jx * m..(jx + 1) * m];
                let mut inner = Complex64::new(0.0, 0.0);
                for jy in 0..m {
                    // e^{-(i/2) x v'} with v' the y-coordinate of w.
                    inner += f_row[jy] * g_row[iy + m - 1 - jy] * tx_row[jy].conj();
                }
                acc += inner * ty;
            }
            out.values[ix * m + iy] = acc * vol;
        }
    }
    out
}

fn direct_generic(plan: &ConvPlan, f: &GridFunction, g_diff: &[Complex64]) -> GridFunction {
    let grid = plan.grid;
    let m = grid.m();
    let ext = 2 * m - 1;
    let axes = grid.axes();
    let n = grid.n();
    let vol = grid.cell_volume();
    let mut out = GridFunction::zeros(grid);
    let mut zi = vec![0usize; axes];
    let mut wi = vec![0usize; axes];
    let total = grid.points();
    for idx in 0..total {
        grid.unravel(idx, &mut zi);
        let mut acc = Complex64::new(0.0, 0.0);
        for (widx, &fw) in f.values.iter().enumerate() {
            if fw == Complex64::new(0.0, 0.0) {
                continue;
            }
            grid.unravel(widx, &mut wi);
            let mut g_idx = 0usize;
            for a in 0..axes {
                g_idx = g_idx * ext + (zi[a] + m - 1 - wi[a]);
            }
            let mut phase = 0.0;
            for j in 0..n {
                phase += 0.5
                    * (grid.coord(zi[n + j]) * grid.coord(wi[j])
                        - grid.coord(zi[j]) * grid.coord(wi[n + j]));
            }
            acc += fw * g_diff[g_idx] * Complex64::from_polar(1.0, phase);
        }
        out.values[idx] = acc * vol;
    }
    out
}

/// Evaluate the direct quadrature at a single output lattice point.
pub fn twisted_conv_direct_at(f: &GridFunction, g: &GridFunction, out_idx: usize) -> Result<Complex64> {
    if f.grid != g.grid {
        return Err(TwistError::GridMismatch("operands on different grids".into()));
    }
    let grid = f.grid;
    let g_diff = resample_to_difference_lattice(g);
    let m = grid.m();
    let ext = 2 * m - 1;
    let axes = grid.axes();
    let n = grid.n();
    let mut zi = vec![0usize; axes];
    let mut wi = vec![0usize; axes];
    grid.unravel(out_idx, &mut zi);
    let mut acc = Complex64::new(0.0, 0.0);
    for (widx, &fw) in f.values.iter().enumerate() {
        if fw == Complex64::new(0.0, 0.0) {
            continue;
        }
        grid.unravel(widx, &mut wi);
        let mut g_idx = 0usize;
        for a in 0..axes {
            g_idx = g_idx * ext + (zi[a] + m - 1 - wi[a]);
        }
        let mut phase = 0.0;
        for j in 0..n {
            phase += 0.5
                * (grid.coord(zi[n + j]) * grid.coord(wi[j])
                    - grid.coord(zi[j]) * grid.coord(wi[n + j]));
        }
        acc += fw * g_diff[g_idx] * Complex64::from_polar(1.0, phase);
    }
    Ok(acc * Complex64::new(grid.cell_volume(), 0.0))
}

/// Spectra of the wrapped difference-lattice rows, one per y-difference.
fn kernel_row_spectra(plan: &ConvPlan, g: &GridFunction) -> Vec<Complex64> {
    let m = plan.grid.m();
    let ext = 2 * m - 1;
    let width = 2 * m;
    let g_diff = resample_to_difference_lattice(g);
    let fft = plan.fft_fwd.as_ref().expect("fast plan");
    let mut spectra = vec![Complex64::new(0.0, 0.0); ext * width];
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    for dy in 0..ext {
        let row = &mut spectra[dy * width..(dy + 1) * width];
        // Cyclic embedding: positive x-differences in [0, M), negative wrap
        // to the top slots; slot M stays zero.
        for t in 0..m {
            row[t] = g_diff[(t + m - 1) * ext + dy];
        }
        for u in 1..m {
            row[width - u] = g_diff[(m - 1 - u) * ext + dy];
        }
        fft.process_with_scratch(row, &mut scratch);
    }
    spectra
}

/// Chirp-factorized fast twisted convolution (`n = 1`); other dimensions fall
/// back to the direct path with a logged notice.
pub fn twisted_conv_fast(plan: &ConvPlan, f: &GridFunction, g: &GridFunction) -> Result<GridFunction> {
    plan.check(f, g)?;
    if plan.grid.n() != 1 || plan.fft_fwd.is_none() {
        log::info!("twisted_conv_fast: preconditions not met (n = {}), using direct", plan.grid.n());
        return twisted_conv_direct(plan, f, g);
    }
    Ok(fast_many(plan, f, std::slice::from_ref(g)).pop().expect("one kernel"))
}

/// Fast path for one `f` against a batch of kernels; the modulated-row
/// transforms of `f` are shared across the batch.
pub fn twisted_conv_fast_many(plan: &ConvPlan, f: &GridFunction, kernels: &[&GridFunction]) -> Result<Vec<GridFunction>> {
    for g in kernels {
        plan.check(f, g)?;
    }
    if plan.grid.n() != 1 || plan.fft_fwd.is_none() {
        log::info!("twisted_conv_fast: preconditions not met (n = {}), using direct", plan.grid.n());
        return kernels.iter().map(|g| twisted_conv_direct(plan, f, g)).collect();
    }
    let owned: Vec<GridFunction> = Vec::new();
    let _ = owned;
    let spectra: Vec<Vec<Complex64>> = kernels.iter().map(|g| kernel_row_spectra(plan, g)).collect();
    Ok(fast_rows(plan, f, &spectra))
}

fn fast_many(plan: &ConvPlan, f: &GridFunction, kernels: &[GridFunction]) -> Vec<GridFunction> {
    let spectra: Vec<Vec<Complex64>> = kernels.iter().map(|g| kernel_row_spectra(plan, g)).collect();
    fast_rows(plan, f, &spectra)
}

fn fast_rows(plan: &ConvPlan, f: &GridFunction, spectra: &[Vec<Complex64>]) -> Vec<GridFunction> {
    let grid = plan.grid;
    let m = grid.m();
    let width = 2 * m;
    let n_k = spectra.len();
    let fft_fwd = plan.fft_fwd.as_ref().expect("fast plan");
    let fft_inv = plan.fft_inv.as_ref().expect("fast plan");
    let t = &plan.phase;
    // y-major copy of f so the inner v-sums read contiguous rows.
    let mut f_t = vec![Complex64::new(0.0, 0.0); m * m];
    for jx in 0..m {
        for jy in 0..m {
            f_t[jy * m + jx] = f.values[jx * m + jy];
        }
    }
    // Normalization: cell volume and the unnormalized inverse FFT.
    let scale = grid.cell_volume() / width as f64;

    // One task per output row iy; rows are independent and internally
    // sequential, so the result is identical for any worker count.
    let rows: Vec<Vec<Complex64>> = (0..m)
        .into_par_iter()
        .map(|iy| {
            let mut acc = vec![Complex64::new(0.0, 0.0); n_k * m];
            let mut buf = vec![Complex64::new(0.0, 0.0); width];
            let mut prod = vec![Complex64::new(0.0, 0.0); width];
            let mut scratch =
                vec![
                    Complex64::new(0.0, 0.0);
                    fft_fwd.get_inplace_scratch_len().max(fft_inv.get_inplace_scratch_len())
                ];
            let ty_row = &t[iy * m..(iy + 1) * m];
            let mut fhat = vec![Complex64::new(0.0, 0.0); width];
            for jvp in 0..m {
                // Modulate the f-row by e^{(i/2) y v} and transform once.
                let f_row = &f_t[jvp * m..(jvp + 1) * m];
                for v in 0..m {
                    buf[v] = f_row[v] * ty_row[v];
                }
                buf[m..].fill(Complex64::new(0.0, 0.0));
                fft_fwd.process_with_scratch(&mut buf, &mut scratch);
                fhat.copy_from_slice(&buf);
                let dy = iy + m - 1 - jvp;
                let tvp_row = &t[jvp * m..(jvp + 1) * m];
                for (k, spec) in spectra.iter().enumerate() {
                    let ghat = &spec[dy * width..(dy + 1) * width];
                    for tt in 0..width {
                        prod[tt] = fhat[tt] * ghat[tt];
                    }
                    fft_inv.process_with_scratch(&mut prod, &mut scratch);
                    let acc_k = &mut acc[k * m..(k + 1) * m];
                    for ix in 0..m {
                        // e^{-(i/2) x v'} carried by the outer v' sum.
                        acc_k[ix] += tvp_row[ix].conj() * prod[ix];
                    }
                }
            }
            for v in acc.iter_mut() {
                *v *= scale;
            }
            acc
        })
        .collect();

    let mut outs: Vec<GridFunction> = (0..n_k).map(|_| GridFunction::zeros(grid)).collect();
    for iy in 0..m {
        for (k, out) in outs.iter_mut().enumerate() {
            for ix in 0..m {
                out.values[ix * m + iy] = rows[iy][k * m + ix];
            }
        }
    }
    outs
}

/// Spectral-multiplier kernel with a tail report.
#[derive(Debug, Clone)]
pub struct MultiplierKernel {
    /// `K_m = (2π)^{-n} Σ_{k ≤ K} m(2k+n) φ_k`, so that `m(L) f = f × K_m`.
    pub field: GridFunction,
    /// Heuristic truncation-tail bound `Σ_{k > K} |m(2k+n)| ‖φ_k‖_2 h^{-n}`
    /// over the 64 orders past the cutoff.
    pub tail_bound: f64,
}

/// Kernel of `m(L)` truncated at the basis order.
pub fn multiplier_kernel(m: &MultiplierSpec, basis: &LaguerreBasis) -> MultiplierKernel {
    multiplier_kernel_with_order(m, basis.grid, basis.k_max)
}

/// Kernel of `m(L)` truncated at an explicit order (radial assembly, no
/// stored basis needed).
pub fn multiplier_kernel_with_order(m: &MultiplierSpec, grid: Grid, k_max: usize) -> MultiplierKernel {
    let n = grid.n();
    let two_pi_n = (2.0 * std::f64::consts::PI).powi(n as i32);
    let weights: Vec<Complex64> = (0..=k_max)
        .map(|k| m.eval((2 * k + n) as f64) / two_pi_n)
        .collect();
    let field = radial_kernel_field(grid, &weights);

    let h_inv_n = grid.h().powi(-(n as i32));
    let mut tail_bound = 0.0;
    for k in (k_max + 1)..=(k_max + 64) {
        tail_bound += m.eval((2 * k + n) as f64).norm() * phi_norm_sq(n, k).sqrt() * h_inv_n;
    }
    let partial = field.l2();
    if partial > 0.0 && tail_bound > 1e-6 * partial {
        log::warn!(
            "multiplier_kernel: tail bound {tail_bound:.3e} exceeds 1e-6 of partial-sum norm {partial:.3e}"
        );
    }
    MultiplierKernel { field, tail_bound }
}

/// `Σ_k w_k φ_k` sampled on the grid (the weights already carry any
/// normalization). Exploits radial symmetry for `n = 1`.
pub fn radial_kernel_field(grid: Grid, weights: &[Complex64]) -> GridFunction {
    let n = grid.n();
    let alpha = n as f64 - 1.0;
    if n == 1 {
        let m = grid.m();
        let half = m / 2;
        // |coord| takes m/2 distinct values; evaluate one octant of (a, b)
        // pairs and mirror.
        let mut table = vec![Complex64::new(0.0, 0.0); half * half];
        let pairs: Vec<(usize, usize)> = (0..half)
            .flat_map(|a| (a..half).map(move |b| (a, b)))
            .collect();
        let entries: Vec<((usize, usize), Complex64)> = pairs
            .into_par_iter()
            .map(|(a, b)| {
                let ca = grid.coord(half + a);
                let cb = grid.coord(half + b);
                let x = 0.5 * (ca * ca + cb * cb);
                let v = laguerre_weighted_sum(alpha, x, weights) * (-0.5 * x).exp();
                ((a, b), v)
            })
            .collect();
        for ((a, b), v) in entries {
            table[a * half + b] = v;
            table[b * half + a] = v;
        }
        let mut out = GridFunction::zeros(grid);
        for ix in 0..m {
            let a = if ix >= half { ix - half } else { half - 1 - ix };
            for iy in 0..m {
                let b = if iy >= half { iy - half } else { half - 1 - iy };
                out.values[ix * m + iy] = table[a * half + b];
            }
        }
        out
    } else {
        GridFunction::from_fn(grid, |z| {
            let r2: f64 = z.iter().map(|c| c * c).sum();
            let x = 0.5 * r2;
            laguerre_weighted_sum(alpha, x, weights) * (-0.5 * x).exp()
        })
    }
}

/// Radial profile of `Σ_k w_k φ_k` at the given radii.
pub fn radial_kernel_profile(n: usize, weights: &[Complex64], radii: &[f64]) -> Vec<Complex64> {
    let alpha = n as f64 - 1.0;
    radii
        .iter()
        .map(|&r| {
            let x = 0.5 * r * r;
            laguerre_weighted_sum(alpha, x, weights) * (-0.5 * x).exp()
        })
        .collect()
}
