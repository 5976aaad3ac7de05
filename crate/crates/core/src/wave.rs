//! c-number mode functions: slit patterns, Weyl packets, completeness and
//! basis overlaps on uniform 1-D grids. Units have hbar = c = 1.

use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::csvout::Table;
use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;

/// Normalization tolerance every produced mode satisfies.
pub const NORM_TOL: f64 = 1e-9;

/// Orthonormality tolerance demanded of overlap inputs.
pub const ORTHONORMAL_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid1D {
    pub x_min: f64,
    pub x_max: f64,
    pub points: usize,
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, points: usize) -> Result<Self> {
        if points < 2 {
            return Err(Error::param("grid needs at least two points"));
        }
        if !(x_max > x_min) || !x_min.is_finite() || !x_max.is_finite() {
            return Err(Error::param(format!("bad grid range [{x_min}, {x_max}]")));
        }
        Ok(Self {
            x_min,
            x_max,
            points,
        })
    }

    /// Grid with spacing `dx` covering `[-half_width, half_width]`.
    pub fn symmetric(half_width: f64, dx: f64) -> Result<Self> {
        let n = (2.0 * half_width / dx).round() as usize + 1;
        Self::new(-half_width, half_width, n)
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.points - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx()
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.points).map(|i| self.x(i)).collect()
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.x_min && x <= self.x_max
    }

    /// Nearest grid index, or an error when `x` is off the grid.
    pub fn nearest(&self, x: f64) -> Result<usize> {
        if !self.contains(x) {
            return Err(Error::OutsideGrid {
                x,
                min: self.x_min,
                max: self.x_max,
            });
        }
        let i = ((x - self.x_min) / self.dx()).round() as usize;
        Ok(i.min(self.points - 1))
    }
}

/// L2-normalized complex mode function sampled on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveMode {
    grid: Grid1D,
    values: Vec<Complex64>,
    label: String,
}

impl WaveMode {
    /// Normalizes `values` so that `sum |v|^2 dx = 1`.
    pub fn normalized(grid: Grid1D, values: Vec<Complex64>, label: impl Into<String>) -> Result<Self> {
        if values.len() != grid.points {
            return Err(Error::DimensionMismatch {
                expected: grid.points,
                found: values.len(),
            });
        }
        let norm = (values.iter().map(|v| v.norm_sqr()).sum::<f64>() * grid.dx()).sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::param("mode function has zero or non-finite norm"));
        }
        let values = values.into_iter().map(|v| v / norm).collect();
        Ok(Self {
            grid,
            values,
            label: label.into(),
        })
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn value(&self, i: usize) -> Complex64 {
        self.values[i]
    }

    /// Value at the grid point nearest to `x`.
    pub fn value_at(&self, x: f64) -> Result<Complex64> {
        Ok(self.values[self.grid.nearest(x)?])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.dx()
    }

    pub fn intensity(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }

    pub fn to_table(&self) -> Table {
        snapshot_table(&self.grid, &self.values)
    }
}

/// `x, re, im, abs2` rows for any sampled amplitude.
pub fn snapshot_table(grid: &Grid1D, values: &[Complex64]) -> Table {
    let mut t = Table::new(["x", "re", "im", "abs2"]);
    for (i, v) in values.iter().enumerate() {
        t.push(vec![grid.x(i).into(), v.re.into(), v.im.into(), v.norm_sqr().into()]);
    }
    t
}

/// Far-field two-slit geometry.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlitGeometry {
    /// Centre-to-centre slit separation `d`.
    pub separation: f64,
    /// Slit width `a`.
    pub width: f64,
    /// Wavenumber `p`.
    pub wavenumber: f64,
    /// Distance `L` from slits to screen.
    pub screen_distance: f64,
}

impl SlitGeometry {
    pub fn new(separation: f64, width: f64, wavenumber: f64, screen_distance: f64) -> Result<Self> {
        if !(width > 0.0 && separation > width) {
            return Err(Error::param("slit geometry needs d > a > 0"));
        }
        if !(wavenumber > 0.0 && screen_distance > 0.0) {
            return Err(Error::param("wavenumber and screen distance must be positive"));
        }
        Ok(Self {
            separation,
            width,
            wavenumber,
            screen_distance,
        })
    }

    /// `p d^2 / (2 pi L)`; the Fraunhofer closed forms assume this is small.
    pub fn fresnel_number(&self) -> f64 {
        self.wavenumber * self.separation * self.separation / (2.0 * PI * self.screen_distance)
    }

    pub fn far_field_valid(&self) -> bool {
        self.fresnel_number() < 1.0
    }

    /// Angle of the first zero of the two-slit cosine factor.
    pub fn first_fringe_zero(&self) -> f64 {
        (PI / (self.wavenumber * self.separation)).asin()
    }

    /// Positions of the slit centres for the two-slit arrangement.
    pub fn slit_centres(&self) -> [f64; 2] {
        [-0.5 * self.separation, 0.5 * self.separation]
    }
}

/// Which slits are open.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Slits {
    /// Both slits, centred at `+-d/2`.
    Two,
    /// A single slit centred at the given position.
    One { centre: f64 },
}

impl Slits {
    pub fn count(&self) -> usize {
        match self {
            Slits::Two => 2,
            Slits::One { .. } => 1,
        }
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Unnormalized Fraunhofer amplitude at screen angle `theta`.
///
/// Two slits: `cos(p d sin(theta) / 2) sinc(p a sin(theta) / 2)`;
/// one slit at `c`: `sinc(p a sin(theta) / 2) exp(-i p c sin(theta))`.
pub fn slit_amplitude(geom: &SlitGeometry, slits: Slits, theta: f64) -> Complex64 {
    let s = theta.sin();
    let envelope = sinc(0.5 * geom.wavenumber * geom.width * s);
    match slits {
        Slits::Two => Complex64::new((0.5 * geom.wavenumber * geom.separation * s).cos() * envelope, 0.0),
        Slits::One { centre } => Complex64::from_polar(envelope, -geom.wavenumber * centre * s),
    }
}

/// Screen mode function `f^(k)` on an angle grid.
pub fn slit_pattern(geom: &SlitGeometry, slits: Slits, screen: &Grid1D) -> Result<WaveMode> {
    let values = screen
        .xs()
        .into_iter()
        .map(|theta| slit_amplitude(geom, slits, theta))
        .collect();
    let label = match slits {
        Slits::Two => "k=2".to_owned(),
        Slits::One { centre } => format!("k=1,c={centre}"),
    };
    WaveMode::normalized(*screen, values, label)
}

/// Slit-plane profile: flat inside each open slit, zero elsewhere.
pub fn aperture_profile(geom: &SlitGeometry, slits: Slits, plane: &Grid1D) -> Result<WaveMode> {
    let centres: Vec<f64> = match slits {
        Slits::Two => geom.slit_centres().to_vec(),
        Slits::One { centre } => vec![centre],
    };
    let half = 0.5 * geom.width;
    let values = plane
        .xs()
        .into_iter()
        .map(|x| {
            let inside = centres.iter().any(|c| (x - c).abs() <= half + 1e-12);
            Complex64::new(if inside { 1.0 } else { 0.0 }, 0.0)
        })
        .collect();
    WaveMode::normalized(*plane, values, format!("aperture,k={}", slits.count()))
}

/// Fringe visibility `(I_max - I_min) / (I_max + I_min)`.
pub fn visibility(i_max: f64, i_min: f64) -> f64 {
    if i_max + i_min == 0.0 {
        0.0
    } else {
        (i_max - i_min) / (i_max + i_min)
    }
}

/// Weyl packet: uniform superposition of energies in `[E_k - Delta, E_k + Delta]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeylPacket {
    pub energy: f64,
    pub half_width: f64,
    pub mass: f64,
    pub t0: f64,
    /// `+1` moves towards larger x, `-1` towards smaller.
    pub direction: f64,
    /// Gauss-Legendre nodes per panel.
    pub quadrature_points: usize,
}

/// Phase excursion allowed within one quadrature panel, in radians.
const PHASE_PER_PANEL: f64 = 20.0;

impl WeylPacket {
    pub fn new(energy: f64, half_width: f64, mass: f64) -> Result<Self> {
        let p = Self {
            energy,
            half_width,
            mass,
            t0: 0.0,
            direction: 1.0,
            quadrature_points: 64,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.half_width > 0.0) {
            return Err(Error::param("packet half-width must be positive"));
        }
        if !(self.mass >= 0.0) {
            return Err(Error::param("mass must be non-negative"));
        }
        if !(self.energy - self.half_width > self.mass) {
            return Err(Error::param("energy window must lie above the mass"));
        }
        if self.direction != 1.0 && self.direction != -1.0 {
            return Err(Error::param("direction must be +1 or -1"));
        }
        if self.quadrature_points < 3 {
            return Err(Error::param("quadrature needs at least 3 points"));
        }
        Ok(())
    }

    pub fn momentum(&self, e: f64) -> f64 {
        self.direction * (e * e - self.mass * self.mass).sqrt()
    }

    /// Central momentum `p(E_k)`.
    pub fn central_momentum(&self) -> f64 {
        self.momentum(self.energy)
    }

    /// Group velocity `dE/dp = p/E` at the central energy.
    pub fn group_velocity(&self) -> f64 {
        self.central_momentum() / self.energy
    }

    /// Phase velocity `E/p` at the central energy.
    pub fn phase_velocity(&self) -> f64 {
        self.energy / self.central_momentum()
    }

    fn rule(&self, max_abs_x: f64, dt: f64) -> Vec<(f64, f64, f64)> {
        let lo = self.energy - self.half_width;
        let hi = self.energy + self.half_width;
        let dp = (self.momentum(hi) - self.momentum(lo)).abs();
        let span = dp * max_abs_x + 2.0 * self.half_width * dt.abs();
        let panels = ((span / PHASE_PER_PANEL).ceil() as usize).max(1);
        let (nodes, weights) = base_rule(self.quadrature_points);
        let h = (hi - lo) / panels as f64;
        let mut out = Vec::with_capacity(panels * nodes.len());
        for k in 0..panels {
            let mid = lo + (k as f64 + 0.5) * h;
            for (x, w) in nodes.iter().zip(weights.iter()) {
                let e = mid + 0.5 * h * x;
                out.push((e, self.momentum(e), 0.5 * h * w));
            }
        }
        out
    }

    fn raw(&self, rule: &[(f64, f64, f64)], x: f64, t: f64) -> Complex64 {
        rule.iter()
            .map(|&(e, p, w)| Complex64::from_polar(w, p * x - e * (t - self.t0)))
            .sum()
    }

    /// Fixes the normalization constant on `grid` at `t = t0`.
    pub fn normalize_on(&self, grid: &Grid1D) -> Result<NormalizedWeyl> {
        self.validate()?;
        let unit = NormalizedWeyl {
            packet: *self,
            grid: *grid,
            norm: 1.0,
        };
        let total = unit.total_probability(self.t0);
        if !(total > 0.0) {
            return Err(Error::param("packet vanishes on the grid"));
        }
        Ok(NormalizedWeyl {
            norm: 1.0 / total.sqrt(),
            ..unit
        })
    }
}

fn base_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    static RULE64: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    if n == 64 {
        RULE64.get_or_init(|| gauss_legendre(64)).clone()
    } else {
        gauss_legendre(n)
    }
}

/// Weyl packet with its normalization fixed on a reference grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormalizedWeyl {
    packet: WeylPacket,
    grid: Grid1D,
    norm: f64,
}

impl NormalizedWeyl {
    pub fn packet(&self) -> &WeylPacket {
        &self.packet
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn normalization(&self) -> f64 {
        self.norm
    }

    /// `w(E_k; x, t)`.
    pub fn evaluate(&self, x: f64, t: f64) -> Complex64 {
        let rule = self.packet.rule(x.abs(), t - self.packet.t0);
        self.packet.raw(&rule, x, t) * self.norm
    }

    /// Packet sampled on its reference grid at time `t`.
    pub fn sample(&self, t: f64) -> Vec<Complex64> {
        let reach = self.grid.x_min.abs().max(self.grid.x_max.abs());
        let rule = self.packet.rule(reach, t - self.packet.t0);
        (0..self.grid.points)
            .into_par_iter()
            .map(|i| self.packet.raw(&rule, self.grid.x(i), t) * self.norm)
            .collect()
    }

    /// `sum |w|^2 dx` on the reference grid.
    pub fn total_probability(&self, t: f64) -> f64 {
        self.sample(t).iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.dx()
    }

    /// Location of the maximum of `|w|` at time `t`, refined off-grid.
    pub fn peak_position(&self, t: f64) -> f64 {
        let values = self.sample(t);
        let (imax, _) = values
            .iter()
            .enumerate()
            .map(|(i, v)| (i, v.norm_sqr()))
            .fold((0, f64::MIN), |best, cur| if cur.1 > best.1 { cur } else { best });
        let dx = self.grid.dx();
        let centre = self.grid.x(imax);
        golden_max(|x| self.evaluate(x, t).norm_sqr(), centre - dx, centre + dx, 1e-9)
    }
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Orthonormal discrete plane waves `exp(2 pi i n j / N) / sqrt(N dx)`.
pub fn plane_wave_basis(grid: &Grid1D, count: usize) -> Result<Vec<WaveMode>> {
    let n = grid.points;
    if count > n {
        return Err(Error::param("more plane waves than grid points"));
    }
    (0..count)
        .map(|k| {
            let values = (0..n)
                .map(|j| Complex64::from_polar(1.0, 2.0 * PI * (k * j % n) as f64 / n as f64))
                .collect();
            WaveMode::normalized(*grid, values, format!("plane,n={k}"))
        })
        .collect()
}

fn shared_grid(modes: &[WaveMode]) -> Result<Grid1D> {
    let grid = *modes
        .first()
        .ok_or_else(|| Error::param("empty mode list"))?
        .grid();
    if modes.iter().any(|m| *m.grid() != grid) {
        return Err(Error::param("modes live on different grids"));
    }
    Ok(grid)
}

/// Largest entry of `|sum_n conj(psi_n(x)) psi_n(y) - delta_xy / dx|`.
pub fn completeness_check(modes: &[WaveMode]) -> Result<f64> {
    let grid = shared_grid(modes)?;
    if modes.len() > grid.points {
        return Err(Error::param("more modes than grid points"));
    }
    let n = grid.points;
    let inv_dx = 1.0 / grid.dx();
    let worst = (0..n)
        .into_par_iter()
        .map(|x| {
            let mut row_worst = 0.0_f64;
            for y in 0..n {
                let k: Complex64 = modes.iter().map(|m| m.value(x).conj() * m.value(y)).sum();
                let target = if x == y { inv_dx } else { 0.0 };
                row_worst = row_worst.max((k - target).norm());
            }
            row_worst
        })
        .reduce(|| 0.0, f64::max);
    Ok(worst)
}

fn grid_inner(a: &WaveMode, b: &WaveMode) -> Complex64 {
    a.values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| x.conj() * y)
        .sum::<Complex64>()
        * a.grid.dx()
}

fn check_orthonormal(basis: &[WaveMode]) -> Result<()> {
    for (i, a) in basis.iter().enumerate() {
        for (j, b) in basis.iter().enumerate().skip(i) {
            let target = if i == j { 1.0 } else { 0.0 };
            let dev = (grid_inner(a, b) - target).norm();
            if dev > ORTHONORMAL_TOL {
                return Err(Error::NotOrthonormal {
                    i,
                    j,
                    overlap: grid_inner(a, b).norm(),
                });
            }
        }
    }
    Ok(())
}

/// `C_ab = sum_x conj(psi_a(x)) phi_b(x) dx` between two orthonormal bases.
#[derive(Clone, Debug, PartialEq)]
pub struct OverlapMatrix {
    pub c: DMatrix<Complex64>,
}

impl OverlapMatrix {
    pub fn row_norms(&self) -> Vec<f64> {
        self.c
            .row_iter()
            .map(|r| r.iter().map(|v| v.norm_sqr()).sum())
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.c.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

pub fn overlap_matrix(basis_a: &[WaveMode], basis_b: &[WaveMode]) -> Result<OverlapMatrix> {
    let ga = shared_grid(basis_a)?;
    let gb = shared_grid(basis_b)?;
    if ga != gb {
        return Err(Error::param("bases live on different grids"));
    }
    check_orthonormal(basis_a)?;
    check_orthonormal(basis_b)?;
    let c = DMatrix::from_fn(basis_a.len(), basis_b.len(), |i, j| {
        grid_inner(&basis_a[i], &basis_b[j])
    });
    let out = OverlapMatrix { c };
    let worst = out.max_abs();
    if worst > 1.0 + NORM_TOL {
        return Err(Error::invariant(format!("overlap magnitude {worst} exceeds 1")));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geom() -> SlitGeometry {
        SlitGeometry::new(5.0, 1.0, 4.0 * PI, 1e4).unwrap()
    }

    fn screen() -> Grid1D {
        Grid1D::new(-0.3, 0.3, 1201).unwrap()
    }

    #[test]
    fn grid_basics() {
        let g = Grid1D::new(0.0, 1.0, 11).unwrap();
        assert!((g.dx() - 0.1).abs() < 1e-15);
        assert_eq!(g.nearest(0.26).unwrap(), 3);
        assert!(matches!(g.nearest(1.5), Err(Error::OutsideGrid { .. })));
        assert!(Grid1D::new(0.0, 1.0, 1).is_err());
    }

    #[test]
    fn geometry_validation() {
        assert!(SlitGeometry::new(1.0, 1.0, 1.0, 1.0).is_err());
        assert!(SlitGeometry::new(1.0, 0.0, 1.0, 1.0).is_err());
        assert!(geom().far_field_valid());
    }

    #[test]
    fn central_fringe_is_global_maximum() {
        let m = slit_pattern(&geom(), Slits::Two, &screen()).unwrap();
        let i = m.intensity();
        let centre = screen().nearest(0.0).unwrap();
        let max = i.iter().cloned().fold(0.0, f64::max);
        assert_eq!(i[centre], max);
        assert!((m.norm_sqr() - 1.0).abs() < NORM_TOL);
    }

    #[test]
    fn first_zero_of_cos_factor() {
        // bisection on the closed form, independent of first_fringe_zero
        let g = geom();
        let f = |t: f64| slit_amplitude(&g, Slits::Two, t).re;
        let (mut a, mut b) = (1e-6, 0.07);
        assert!(f(a) * f(b) < 0.0);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if f(a) * f(m) <= 0.0 {
                b = m;
            } else {
                a = m;
            }
        }
        let root = 0.5 * (a + b);
        assert!((root.sin() - PI / (g.wavenumber * g.separation)).abs() < 1e-12);
        assert!((root - g.first_fringe_zero()).abs() < 1e-12);
    }

    #[test]
    fn one_slit_lacks_fringe_modulation() {
        let g = geom();
        let theta = g.first_fringe_zero();
        let two = slit_amplitude(&g, Slits::Two, theta).norm_sqr();
        let one = slit_amplitude(&g, Slits::One { centre: 0.0 }, theta).norm_sqr();
        assert!(two / one < 1e-28);
        assert!(one > 0.5);
    }

    #[test]
    fn weyl_peak_starts_at_origin() {
        let p = WeylPacket::new(1.25, 0.1, 1.0).unwrap();
        let grid = Grid1D::symmetric(400.0, 1.0).unwrap();
        let w = p.normalize_on(&grid).unwrap();
        assert!(w.peak_position(0.0).abs() < 1e-6);
        assert!((w.total_probability(0.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn weyl_rejects_bad_packets() {
        assert!(WeylPacket::new(1.0, 0.1, 1.0).is_err());
        assert!(WeylPacket::new(2.0, 0.0, 1.0).is_err());
        let mut p = WeylPacket::new(2.0, 0.1, 1.0).unwrap();
        p.quadrature_points = 2;
        let grid = Grid1D::symmetric(10.0, 1.0).unwrap();
        assert!(p.normalize_on(&grid).is_err());
    }

    #[test]
    fn massless_packet_moves_at_light_speed() {
        let p = WeylPacket::new(1.0, 0.5, 0.0).unwrap();
        let grid = Grid1D::symmetric(200.0, 0.5).unwrap();
        let w = p.normalize_on(&grid).unwrap();
        assert!((w.peak_position(10.0) - 10.0).abs() < 1e-6);
        assert!((p.phase_velocity() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn plane_waves_are_complete() {
        let g = Grid1D::new(0.0, 6.3, 64).unwrap();
        let full = plane_wave_basis(&g, 64).unwrap();
        assert!(completeness_check(&full).unwrap() < 1e-9);
        let half = plane_wave_basis(&g, 32).unwrap();
        assert!(completeness_check(&half).unwrap() > 0.1);
    }

    #[test]
    fn two_point_grid_completes_with_partner() {
        let g = Grid1D::new(0.0, 1.0, 2).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let a = WaveMode::normalized(g, vec![Complex64::new(s, 0.0), Complex64::new(s, 0.0)], "a").unwrap();
        let b = WaveMode::normalized(g, vec![Complex64::new(s, 0.0), Complex64::new(-s, 0.0)], "b").unwrap();
        assert!(completeness_check(&[a, b]).unwrap() < 1e-12);
    }

    #[test]
    fn completeness_rejects_mixed_grids() {
        let g1 = Grid1D::new(0.0, 1.0, 4).unwrap();
        let g2 = Grid1D::new(0.0, 2.0, 4).unwrap();
        let a = plane_wave_basis(&g1, 1).unwrap().remove(0);
        let b = plane_wave_basis(&g2, 1).unwrap().remove(0);
        assert!(completeness_check(&[a, b]).is_err());
    }

    #[test]
    fn overlap_of_identical_bases() {
        let g = Grid1D::new(0.0, 1.0, 16).unwrap();
        let b = plane_wave_basis(&g, 16).unwrap();
        let c = overlap_matrix(&b, &b).unwrap();
        let id = DMatrix::<Complex64>::identity(16, 16);
        assert!((c.c - id).iter().all(|v| v.norm() < 1e-12));
    }

    #[test]
    fn overlap_of_rotated_bases() {
        let g = Grid1D::new(0.0, 1.0, 2).unwrap();
        let e = |a: f64, b: f64| {
            WaveMode::normalized(g, vec![Complex64::new(a, 0.0), Complex64::new(b, 0.0)], "e").unwrap()
        };
        let chi: f64 = 0.4;
        let base = [e(1.0, 0.0), e(0.0, 1.0)];
        let rot = [
            e(chi.cos(), chi.sin()),
            e(-chi.sin(), chi.cos()),
        ];
        let c = overlap_matrix(&base, &rot).unwrap();
        let expected = [[chi.cos(), -chi.sin()], [chi.sin(), chi.cos()]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((c.c[(i, j)].re - expected[i][j]).abs() < 1e-12);
            }
        }
        assert!(c.max_abs() <= 1.0);
    }

    #[test]
    fn overlap_rejects_non_orthonormal() {
        let g = Grid1D::new(0.0, 1.0, 2).unwrap();
        let a = WaveMode::normalized(g, vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)], "a").unwrap();
        let b = WaveMode::normalized(g, vec![Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)], "b").unwrap();
        let err = overlap_matrix(&[a.clone(), b], &[a]).unwrap_err();
        assert!(matches!(err, Error::NotOrthonormal { i: 0, j: 1, .. }));
    }

    #[test]
    fn snapshot_csv_columns() {
        let g = Grid1D::new(0.0, 1.0, 3).unwrap();
        let m = plane_wave_basis(&g, 1).unwrap().remove(0);
        let t = m.to_table();
        assert_eq!(t.header(), ["x", "re", "im", "abs2"]);
        assert_eq!(t.rows().len(), 3);
    }
}
