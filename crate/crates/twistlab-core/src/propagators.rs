//! Heat and Schrödinger propagators in closed form, general spectral
//! multipliers `m(L) f = (2π)^{-n} Σ_k m(2k+n) f × φ_k`, the wave operator
//! `L^{-δ/2} e^{it√L}`, and the dyadic decomposition of a multiplier.
//!
//! Time conventions: every operation here takes plain `t` (`e^{-tL}`,
//! `e^{isL}`); the `t^2` convention of the maximal-function layer is applied
//! by its callers.

use crate::conv::{twisted_conv, twisted_conv_fast_many, ConvPlan};
use crate::grid::{Grid, GridFunction};
use crate::laguerre::LaguerreBasis;
use crate::{Result, TwistError};
use num_complex::Complex64;
use std::sync::Arc;

/// A scalar symbol `λ ↦ m(λ)` on `[n, ∞)`, optionally tagged with the dyadic
/// band index it is localized to (support `2^{j-2} ≤ √λ ≤ 2^{j+2}`).
#[derive(Clone)]
pub struct MultiplierSpec {
    symbol: Arc<dyn Fn(f64) -> Complex64 + Send + Sync>,
    pub band: Option<u32>,
}

impl std::fmt::Debug for MultiplierSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MultiplierSpec").field("band", &self.band).finish()
    }
}

impl MultiplierSpec {
    pub fn new(symbol: impl Fn(f64) -> Complex64 + Send + Sync + 'static) -> Self {
        MultiplierSpec { symbol: Arc::new(symbol), band: None }
    }

    pub fn eval(&self, lambda: f64) -> Complex64 {
        (self.symbol)(lambda)
    }

    /// Identity multiplier.
    pub fn one() -> Self {
        Self::new(|_| Complex64::new(1.0, 0.0))
    }

    /// Heat symbol `e^{-tλ}`.
    pub fn heat(t: f64) -> Self {
        Self::new(move |lam| Complex64::new((-t * lam).exp(), 0.0))
    }

    /// Wave symbol `λ^{-δ/2} e^{it√λ}`.
    pub fn wave(delta: f64, t: f64) -> Self {
        Self::new(move |lam| Complex64::from_polar(lam.powf(-delta / 2.0), t * lam.sqrt()))
    }
}

/// Critical wave regularity `δ(n, p) = (2n-1)(1/p - 1/2)`.
pub fn delta_np(n: usize, p: f64) -> f64 {
    (2.0 * n as f64 - 1.0) * (1.0 / p - 0.5)
}

// ---------------------------------------------------------------------------
// Dyadic partition of unity in √λ
// ---------------------------------------------------------------------------

/// Transition width of the dyadic bump, in log2 units.
const BUMP_TRANSITION: f64 = 0.4;

fn smoothstep(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / t).exp();
        let b = (-1.0 / (1.0 - t)).exp();
        a / (a + b)
    }
}

/// Smooth bump supported on `u ∈ [1/2, 2]`, ≡ 1 on the central plateau,
/// symmetric in `log2 u`.
pub fn dyadic_bump_raw(u: f64) -> f64 {
    if u <= 0.5 || u >= 2.0 {
        return 0.0;
    }
    let l = u.log2();
    smoothstep((l + 1.0) / BUMP_TRANSITION) * smoothstep((1.0 - l) / BUMP_TRANSITION)
}

/// Normalized dyadic bump `φ = ψ / Σ_m ψ(2^{-m}·)`: exact partition
/// `Σ_{m ∈ Z} φ(2^{-m} u) = 1` for every `u > 0`.
pub fn dyadic_bump(u: f64) -> f64 {
    if u <= 0.5 || u >= 2.0 {
        return 0.0;
    }
    let num = dyadic_bump_raw(u);
    let l = u.log2();
    let mut den = 0.0;
    // Only shifts with |log2 u - m| < 1 contribute.
    let m_lo = (l - 1.0).ceil() as i64;
    let m_hi = (l + 1.0).floor() as i64;
    for m in m_lo..=m_hi {
        den += dyadic_bump_raw(u * 2f64.powi(-m as i32));
    }
    num / den
}

/// The j-th dyadic factor in `√λ`: `φ(2^{-j}·)` for `j ≥ 1`, and for `j = 0`
/// the low-pass tail `1 - Σ_{m ≥ 1} φ(2^{-m}·)` so the pieces still sum to 1
/// on the spectrum.
pub fn dyadic_factor(j: u32, y: f64) -> f64 {
    if j >= 1 {
        return dyadic_bump(y * 2f64.powi(-(j as i32)));
    }
    if y <= 0.0 {
        return 0.0;
    }
    let mut tail = 0.0;
    let mut m = 1u32;
    // φ(2^{-m} y) vanishes once 2^{-m} y ≤ 1/2.
    while 2f64.powi(-(m as i32)) * y > 0.5 {
        tail += dyadic_bump(y * 2f64.powi(-(m as i32)));
        m += 1;
    }
    1.0 - tail
}

/// Dyadic piece `m_j(λ) = m(λ) · φ(2^{-j} √λ)`.
///
/// `k_max` is the truncation order of the spectral sums the piece will feed;
/// a piece whose band lies entirely above the truncated spectrum is
/// identically zero there and is flagged with a warning.
pub fn dyadic_piece(m: &MultiplierSpec, j: u32, n: usize, k_max: usize) -> MultiplierSpec {
    let lam_max = (2 * k_max + n) as f64;
    if j >= 1 && 2f64.powi(j as i32 - 1) > lam_max.sqrt() {
        log::warn!("dyadic_piece: band j = {j} lies above the truncated spectrum (K_max = {k_max}); piece is identically 0 there");
    }
    let inner = m.clone();
    let mut out = MultiplierSpec::new(move |lam| inner.eval(lam) * dyadic_factor(j, lam.sqrt()));
    out.band = Some(j);
    out
}

// ---------------------------------------------------------------------------
// Heat semigroup
// ---------------------------------------------------------------------------

/// Closed-form heat kernel `p_t(z) = (4π)^{-n} (sinh t)^{-n}
/// e^{-(coth t)|z|^2/4}`, so that `e^{-tL} f = f × p_t`.
pub fn heat_kernel(t: f64, grid: Grid) -> Result<GridFunction> {
    if !(t.is_finite()) || t < 1e-6 {
        return Err(TwistError::InvalidArgument(format!(
            "heat time t = {t} below 1e-6: kernel concentrates under the grid resolution"
        )));
    }
    let n = grid.n() as i32;
    // (sinh t)^{-n} through exponentials; safe for large t.
    let sinh_inv = if t > 30.0 {
        2.0 * (-t).exp() / (1.0 - (-2.0 * t).exp())
    } else {
        1.0 / t.sinh()
    };
    let coth = 1.0 / t.tanh();
    let amp = (4.0 * std::f64::consts::PI).powi(-n) * sinh_inv.powi(n);
    Ok(GridFunction::from_fn(grid, |z| {
        let r2: f64 = z.iter().map(|c| c * c).sum();
        Complex64::new(amp * (-0.25 * coth * r2).exp(), 0.0)
    }))
}

/// Which realization of a semigroup application to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApplyRoute {
    /// Twisted convolution with the closed-form kernel.
    Kernel,
    /// Truncated spectral sum through the Laguerre resolution.
    Spectral,
}

/// `e^{-tL} f` by either route.
pub fn heat_apply(
    f: &GridFunction,
    t: f64,
    route: ApplyRoute,
    basis: &LaguerreBasis,
    plan: &ConvPlan,
) -> Result<GridFunction> {
    match route {
        ApplyRoute::Kernel => {
            let p = heat_kernel(t, f.grid)?;
            twisted_conv(plan, f, &p)
        }
        ApplyRoute::Spectral => multiplier_apply(f, &MultiplierSpec::heat(t), basis, plan),
    }
}

// ---------------------------------------------------------------------------
// Schrödinger group
// ---------------------------------------------------------------------------

/// Closed-form Schrödinger kernel for `e^{isL}`:
///
/// ```text
/// k_s(z) = (2π)^{-n} (-2i sin s)^{-n} e^{-(i/4) cot(s) |z|^2}
/// ```
///
/// The oscillatory factor matches the usual Fresnel form; the constant
/// `(-2i)^{-n}` is pinned by requiring `f × k_s` to agree with the spectral
/// action `φ_k ↦ e^{is(2k+n)} φ_k`, which also fixes the sign convention to
/// `e^{+isL}` once and for all (validated in tests at k = 0).
pub fn schrodinger_kernel(s: f64, grid: Grid) -> Result<GridFunction> {
    if s.sin().abs() <= 1e-8 {
        return Err(TwistError::InvalidArgument(format!(
            "schrodinger time s = {s} too close to a singular time (|sin s| ≤ 1e-8)"
        )));
    }
    let n = grid.n() as i32;
    let amp = (Complex64::new(0.0, -2.0 * s.sin()))
        .powi(-n)
        .scale((2.0 * std::f64::consts::PI).powi(-n));
    let cot = s.cos() / s.sin();
    Ok(GridFunction::from_fn(grid, |z| {
        let r2: f64 = z.iter().map(|c| c * c).sum();
        amp * Complex64::from_polar(1.0, -0.25 * cot * r2)
    }))
}

/// `e^{isL} f = f × k_s`.
pub fn schrodinger_apply(f: &GridFunction, s: f64, plan: &ConvPlan) -> Result<GridFunction> {
    let k = schrodinger_kernel(s, f.grid)?;
    twisted_conv(plan, f, &k)
}

// ---------------------------------------------------------------------------
// General multipliers and the wave operator
// ---------------------------------------------------------------------------

/// Truncated spectral sum `m(L) f = (2π)^{-n} Σ_{k ≤ K_max} m(2k+n) f × φ_k`.
pub fn multiplier_apply(
    f: &GridFunction,
    m: &MultiplierSpec,
    basis: &LaguerreBasis,
    plan: &ConvPlan,
) -> Result<GridFunction> {
    let n = basis.grid.n();
    let two_pi_n = (2.0 * std::f64::consts::PI).powi(n as i32);
    let mut out = GridFunction::zeros(f.grid);
    // Batch the projections in small groups to bound kernel-spectrum memory.
    for chunk in (0..=basis.k_max).collect::<Vec<_>>().chunks(8) {
        let kernels: Vec<&GridFunction> = chunk.iter().map(|&k| &basis.phi[k]).collect();
        let projs = twisted_conv_fast_many(plan, f, &kernels)?;
        for (&k, proj) in chunk.iter().zip(&projs) {
            let w = m.eval(basis.eigenvalue(k)) / two_pi_n;
            out.axpy(w, proj);
        }
    }
    Ok(out)
}

/// `m(L) f = f × K_m` through the assembled multiplier kernel; the spectral
/// sum is truncated at `k_order`, which may exceed the stored-basis range.
pub fn multiplier_apply_kernel(
    f: &GridFunction,
    m: &MultiplierSpec,
    k_order: usize,
    plan: &ConvPlan,
) -> Result<GridFunction> {
    let kernel = crate::conv::multiplier_kernel_with_order(m, f.grid, k_order);
    twisted_conv(plan, f, &kernel.field)
}

/// Wave operator `L^{-δ/2} e^{it√L} f` as a spectral multiplier.
pub fn wave_apply(
    f: &GridFunction,
    delta: f64,
    t: f64,
    basis: &LaguerreBasis,
    plan: &ConvPlan,
) -> Result<GridFunction> {
    if delta < 0.0 {
        return Err(TwistError::InvalidArgument(format!("wave exponent δ = {delta} must be ≥ 0")));
    }
    multiplier_apply(f, &MultiplierSpec::wave(delta, t), basis, plan)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conv::ConvMode;
    use crate::laguerre::phi_k;
    use std::f64::consts::PI;

    fn setup(m: usize, k_max: usize) -> (Grid, LaguerreBasis, ConvPlan) {
        let grid = Grid::new(1, m, 16.0).unwrap();
        let basis = LaguerreBasis::new(grid, k_max).unwrap();
        let plan = ConvPlan::new(grid, ConvMode::Fast);
        (grid, basis, plan)
    }

    #[test]
    fn heat_kernel_closed_form_values() {
        let grid = Grid::new(1, 64, 16.0).unwrap();
        let p1 = heat_kernel(1.0, grid).unwrap();
        // p_1(0) = 1/(4π sinh 1) ≈ 0.06774; nearest sample sits h√2/2 from 0.
        let m = grid.m();
        let near = p1.values[(m / 2 - 1) * m + (m / 2 - 1)].re;
        let h2 = grid.h() * 0.5;
        let r2 = 2.0 * h2 * h2;
        let expect = 1.0 / (4.0 * PI * 1f64.sinh()) * (-0.25 * r2 / 1f64.tanh()).exp();
        assert!((near - expect).abs() < 1e-12);
        assert!((1.0 / (4.0 * PI * 1f64.sinh()) - 0.06774).abs() < 1e-5);
        assert!(heat_kernel(1e-7, grid).is_err());
    }

    #[test]
    fn heat_kernel_sup_decays_in_t() {
        let grid = Grid::new(1, 32, 16.0).unwrap();
        let mut prev = f64::INFINITY;
        for &t in &[1.0, 2.0, 4.0, 8.0, 16.0, 64.0] {
            let sup = heat_kernel(t, grid).unwrap().linf();
            assert!(sup < prev, "sup p_t not decreasing at t = {t}");
            prev = sup;
        }
    }

    #[test]
    fn heat_on_eigenfunction() {
        let (_, basis, plan) = setup(128, 3);
        let t = 0.3;
        for k in [0usize, 2] {
            let got = heat_apply(&basis.phi[k], t, ApplyRoute::Kernel, &basis, &plan).unwrap();
            let expect = basis.phi[k].scale(Complex64::new((-t * basis.eigenvalue(k)).exp(), 0.0));
            let rel = got.rel_l2_error(&expect);
            assert!(rel < 1e-3, "k = {k}: {rel}");
        }
    }

    #[test]
    fn heat_routes_agree() {
        let (_, basis, plan) = setup(128, 8);
        let f = basis.phi[0].add(&basis.phi[1]);
        let a = heat_apply(&f, 0.5, ApplyRoute::Kernel, &basis, &plan).unwrap();
        let b = heat_apply(&f, 0.5, ApplyRoute::Spectral, &basis, &plan).unwrap();
        let rel = a.rel_l2_error(&b);
        assert!(rel < 1e-3, "route disagreement {rel}");
    }

    #[test]
    fn heat_semigroup_law() {
        let (_, basis, plan) = setup(128, 2);
        let f = basis.phi[0].add(&basis.phi[2].scale(Complex64::new(0.5, 0.0)));
        let st = heat_apply(
            &heat_apply(&f, 0.3, ApplyRoute::Kernel, &basis, &plan).unwrap(),
            0.45,
            ApplyRoute::Kernel,
            &basis,
            &plan,
        )
        .unwrap();
        let direct = heat_apply(&f, 0.75, ApplyRoute::Kernel, &basis, &plan).unwrap();
        assert!(st.rel_l2_error(&direct) < 1e-3);
    }

    #[test]
    fn schrodinger_kernel_modulus_constant() {
        let grid = Grid::new(1, 32, 16.0).unwrap();
        let s = 0.7;
        let k = schrodinger_kernel(s, grid).unwrap();
        let expect = 1.0 / (4.0 * PI * s.sin().abs());
        for v in &k.values {
            assert!((v.norm() - expect).abs() < 1e-13);
        }
        assert!(schrodinger_kernel(PI, grid).is_err());
    }

    #[test]
    fn schrodinger_sign_convention_is_plus() {
        // f × k_s = e^{+is(2k+n)} f on eigenfunctions; pinned at k = 0, n = 1,
        // s = 0.1 and asserted thereafter.
        let (_, basis, plan) = setup(128, 2);
        let s = 0.1;
        let got = schrodinger_apply(&basis.phi[0], s, &plan).unwrap();
        let plus = basis.phi[0].scale(Complex64::from_polar(1.0, s));
        let minus = basis.phi[0].scale(Complex64::from_polar(1.0, -s));
        let err_plus = got.rel_l2_error(&plus);
        let err_minus = got.rel_l2_error(&minus);
        assert!(err_plus < 1e-2, "e^{{+isL}} convention broken: {err_plus}");
        assert!(err_plus < err_minus);
        // Higher eigenvalue keeps the same convention.
        let got2 = schrodinger_apply(&basis.phi[2], s, &plan).unwrap();
        let expect2 = basis.phi[2].scale(Complex64::from_polar(1.0, 5.0 * s));
        assert!(got2.rel_l2_error(&expect2) < 1e-2);
    }

    #[test]
    fn schrodinger_unitary_on_band_limited() {
        let (_, basis, plan) = setup(128, 3);
        let f = basis.phi[1].add(&basis.phi[3].scale(Complex64::new(0.3, 0.4)));
        let g = schrodinger_apply(&f, 0.6, &plan).unwrap();
        assert!((g.l2() / f.l2() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn multiplier_identity_and_projection() {
        let (_, basis, plan) = setup(128, 8);
        let f = basis.phi[0].add(&basis.phi[3].scale(Complex64::new(0.5, 0.0)));
        let id = multiplier_apply(&f, &MultiplierSpec::one(), &basis, &plan).unwrap();
        assert!(id.rel_l2_error(&f) < 1e-3);

        // Indicator of the bottom eigenvalue reproduces spectral_project(·, 0).
        let bottom = MultiplierSpec::new(|lam| {
            if (lam - 1.0).abs() < 1e-9 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let proj = multiplier_apply(&f, &bottom, &basis, &plan).unwrap();
        let direct = crate::laguerre::spectral_project(&f, 0, &basis, &plan).unwrap();
        assert!(proj.sub(&direct).linf() < 1e-12 * proj.linf().max(1.0));
    }

    #[test]
    fn multiplier_lambda_matches_laplacian() {
        let (_, basis, plan) = setup(128, 6);
        let f = basis.phi[1].add(&basis.phi[4].scale(Complex64::new(-0.7, 0.2)));
        let via_mult = multiplier_apply(&f, &MultiplierSpec::new(|lam| Complex64::new(lam, 0.0)), &basis, &plan).unwrap();
        let via_fd = crate::grid::apply_twisted_laplacian(&f).unwrap();
        assert!(via_mult.rel_l2_error(&via_fd) < 1e-2);
    }

    #[test]
    fn wave_on_eigenfunction_and_isometry() {
        let (_, basis, plan) = setup(128, 4);
        // λ = 1 at k = 0: L^{-δ/2} e^{i√L} φ_0 = e^{i} φ_0 regardless of δ.
        let got = wave_apply(&basis.phi[0], 0.5, 1.0, &basis, &plan).unwrap();
        let expect = basis.phi[0].scale(Complex64::from_polar(1.0, 1.0));
        assert!(got.rel_l2_error(&expect) < 1e-2);

        // δ = 0 is unimodular: L2 norm preserved on band-limited data.
        let f = basis.phi[1].add(&basis.phi[4].scale(Complex64::new(0.6, -0.1)));
        let w = wave_apply(&f, 0.0, 1.0, &basis, &plan).unwrap();
        assert!((w.l2() / f.l2() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn delta_np_values() {
        assert!((delta_np(1, 1.0) - 0.5).abs() < 1e-15);
        assert!((delta_np(1, 2.0 / 3.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn dyadic_partition_sums_to_one() {
        // Σ_{j ≤ J} φ_j = 1 on √λ ∈ [1/2, 2^J] (exactly, by the ψ/Σψ trick
        // plus the absorbing j = 0 piece).
        let j_top = 5u32;
        let mut y = 0.5;
        while y <= 2f64.powi(j_top as i32) {
            let sum: f64 = (0..=j_top).map(|j| dyadic_factor(j, y)).sum();
            assert!((sum - 1.0).abs() < 1e-12, "partition fails at y = {y}: {sum}");
            y *= 1.0371;
        }
    }

    #[test]
    fn dyadic_band_support() {
        let (_, _, _) = setup(16, 0);
        let m = MultiplierSpec::one();
        let piece = dyadic_piece(&m, 3, 1, 32);
        assert_eq!(piece.band, Some(3));
        for k in 0..=32usize {
            let lam = (2 * k + 1) as f64;
            let root = lam.sqrt();
            if !(2f64.powi(1) <= root && root <= 2f64.powi(5)) {
                assert_eq!(piece.eval(lam), Complex64::new(0.0, 0.0), "leak at λ = {lam}");
            }
        }
    }
}
