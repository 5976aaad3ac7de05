//! Density matrices, thermal states, entropies, Fock-dressed density state
//! vectors and the pure-versus-mixed probability density.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::csvout::Table;
use crate::error::{Error, Result};
use crate::fock::{inner, Ket, ModeSet, OpSum};
use crate::wave::WaveMode;

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-12;
pub const EIGEN_FLOOR: f64 = -1e-10;

/// Hermitian, unit-trace, positive semidefinite matrix over labelled basis states.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    labels: Vec<String>,
    rho: DMatrix<Complex64>,
}

impl DensityMatrix {
    /// Validates all invariants; the trace must already be 1.
    pub fn new(labels: Vec<String>, rho: DMatrix<Complex64>) -> Result<Self> {
        let n = labels.len();
        if rho.nrows() != n || rho.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: rho.nrows(),
            });
        }
        let dm = Self { labels, rho };
        dm.validate()?;
        Ok(dm)
    }

    /// Divides by the trace, then validates.
    pub fn from_unnormalized(labels: Vec<String>, rho: DMatrix<Complex64>) -> Result<Self> {
        let tr = rho.trace().re;
        if !(tr > 0.0) {
            return Err(Error::invariant(format!("density matrix trace {tr} is not positive")));
        }
        Self::new(labels, rho.map(|z| z / tr))
    }

    /// `|psi><psi|` from (not necessarily normalized) amplitudes.
    pub fn pure(labels: Vec<String>, amplitudes: &[Complex64]) -> Result<Self> {
        let v = DVector::from_column_slice(amplitudes);
        Self::from_unnormalized(labels, &v * v.adjoint())
    }

    pub fn diagonal(labels: Vec<String>, weights: &[f64]) -> Result<Self> {
        let d = DVector::from_iterator(weights.len(), weights.iter().map(|&w| Complex64::new(w, 0.0)));
        Self::from_unnormalized(labels, DMatrix::from_diagonal(&d))
    }

    pub fn validate(&self) -> Result<()> {
        let herm = (&self.rho - self.rho.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm > HERMITIAN_TOL {
            return Err(Error::invariant(format!("density matrix not Hermitian (deviation {herm:e})")));
        }
        let tr = self.rho.trace();
        if (tr - 1.0).norm() > TRACE_TOL {
            return Err(Error::invariant(format!("density matrix trace {tr} differs from 1")));
        }
        let min = self.eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min);
        if min < EIGEN_FLOOR {
            return Err(Error::invariant(format!("density matrix eigenvalue {min:e} is negative")));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.rho
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.rho[(i, j)]
    }

    pub fn diagonal_weights(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.rho[(i, i)].re).collect()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let h = (&self.rho + self.rho.adjoint()).map(|z| z * 0.5);
        h.symmetric_eigenvalues().iter().copied().collect()
    }

    /// `Tr rho^2`.
    pub fn purity(&self) -> f64 {
        (&self.rho * &self.rho).trace().re
    }

    pub fn max_offdiagonal(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    worst = worst.max(self.rho[(i, j)].norm());
                }
            }
        }
        worst
    }

    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        (&self.rho - &other.rho).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `self (x) other` with labels joined by `|`.
    pub fn kron(&self, other: &DensityMatrix) -> Result<DensityMatrix> {
        let labels = self
            .labels
            .iter()
            .flat_map(|a| other.labels.iter().map(move |b| format!("{a}|{b}")))
            .collect();
        DensityMatrix::new(labels, self.rho.kronecker(&other.rho))
    }

    /// Rows `row,col,label_row,label_col,re,im`.
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["row", "col", "label_row", "label_col", "re", "im"]);
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                let z = self.rho[(i, j)];
                t.push(vec![
                    i.into(),
                    j.into(),
                    self.labels[i].clone().into(),
                    self.labels[j].clone().into(),
                    z.re.into(),
                    z.im.into(),
                ]);
            }
        }
        t
    }
}

/// Labels `"0", "1", ...`.
pub fn index_labels(n: usize) -> Vec<String> {
    (0..n).map(|i| i.to_string()).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThermalConfig {
    pub temperature: f64,
    pub energies: Vec<f64>,
    pub labels: Vec<String>,
}

impl ThermalConfig {
    pub fn new(temperature: f64, energies: Vec<f64>) -> Self {
        let labels = index_labels(energies.len());
        Self {
            temperature,
            energies,
            labels,
        }
    }
}

/// `omega_ij = Z delta_ij exp(-E_i / T)`.
pub fn thermal_density(cfg: &ThermalConfig) -> Result<DensityMatrix> {
    if !(cfg.temperature > 0.0) || !cfg.temperature.is_finite() {
        return Err(Error::param(format!("temperature must be positive, got {}", cfg.temperature)));
    }
    if cfg.energies.is_empty() || cfg.energies.len() != cfg.labels.len() {
        return Err(Error::param("need one label per energy level"));
    }
    let e0 = cfg.energies.iter().cloned().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = cfg
        .energies
        .iter()
        .map(|e| (-(e - e0) / cfg.temperature).exp())
        .collect();
    DensityMatrix::diagonal(cfg.labels.clone(), &w)
}

fn entropy_of(weights: impl IntoIterator<Item = f64>) -> f64 {
    let s: f64 = weights
        .into_iter()
        .filter(|&w| w > 0.0)
        .map(|w| -w * w.ln())
        .sum();
    s.max(0.0)
}

/// `-sum_j omega_jj ln omega_jj` over the diagonal only.
pub fn boltzmann_entropy(rho: &DensityMatrix) -> f64 {
    entropy_of(rho.diagonal_weights())
}

/// `-Tr rho ln rho`.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    entropy_of(rho.eigenvalues())
}

/// Energy eigenmodes `psi_j(x)` with energies `E_j`.
#[derive(Clone, Debug)]
pub struct StationaryModes {
    modes: Vec<WaveMode>,
    energies: Vec<f64>,
}

impl StationaryModes {
    pub fn new(modes: Vec<WaveMode>, energies: Vec<f64>) -> Result<Self> {
        if modes.len() != energies.len() {
            return Err(Error::param(format!(
                "{} modes but {} energies",
                modes.len(),
                energies.len()
            )));
        }
        Ok(Self { modes, energies })
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// `psi_j(x_i) exp(-i E_j t)`.
    pub fn evolved(&self, j: usize, i: usize, t: f64) -> Complex64 {
        self.modes[j].value(i) * Complex64::from_polar(1.0, -self.energies[j] * t)
    }
}

#[derive(Clone, Debug)]
pub enum SystemState {
    Pure(Vec<Complex64>),
    Mixed(DensityMatrix),
}

/// Probability density at grid index `i` and time `t`.
pub fn probability_density(modes: &StationaryModes, state: &SystemState, i: usize, t: f64) -> Result<f64> {
    let n = modes.len();
    let psi: Vec<Complex64> = (0..n).map(|j| modes.evolved(j, i, t)).collect();
    match state {
        SystemState::Pure(c) => {
            if c.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: c.len() });
            }
            Ok(c.iter().zip(&psi).map(|(c, p)| c * p).sum::<Complex64>().norm_sqr())
        }
        SystemState::Mixed(rho) => {
            if rho.dim() != n {
                return Err(Error::DimensionMismatch { expected: n, found: rho.dim() });
            }
            let mut p = Complex64::default();
            for j in 0..n {
                for k in 0..n {
                    p += rho.get(j, k) * psi[k].conj() * psi[j];
                }
            }
            Ok(p.re)
        }
    }
}

/// Mean spacing of upward mean-crossings of a uniformly sampled signal,
/// or `None` with fewer than two crossings.
pub fn oscillation_period(times: &[f64], values: &[f64]) -> Option<f64> {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let mut crossings = Vec::new();
    for k in 1..values.len() {
        let (a, b) = (values[k - 1] - mean, values[k] - mean);
        if a < 0.0 && b >= 0.0 {
            let f = a / (a - b);
            crossings.push(times[k - 1] + f * (times[k] - times[k - 1]));
        }
    }
    if crossings.len() < 2 {
        return None;
    }
    Some((crossings[crossings.len() - 1] - crossings[0]) / (crossings.len() - 1) as f64)
}

/// `rho = sum_ij omega_ij |i><j|` with `|i> = L_i |V>` built from Fock operators.
#[derive(Clone, Debug)]
pub struct DensityStateVector {
    modes: Arc<ModeSet>,
    states: Vec<Ket>,
    weights: DMatrix<Complex64>,
}

impl DensityStateVector {
    pub fn new(modes: &Arc<ModeSet>, dressings: &[OpSum], weights: DMatrix<Complex64>) -> Result<Self> {
        let n = dressings.len();
        if weights.nrows() != n || weights.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: weights.nrows() });
        }
        let vacuum = Ket::vacuum(modes);
        let states = dressings.iter().map(|l| l.apply(&vacuum)).collect::<Result<_>>()?;
        Ok(Self {
            modes: Arc::clone(modes),
            states,
            weights,
        })
    }

    pub fn from_density(modes: &Arc<ModeSet>, dressings: &[OpSum], rho: &DensityMatrix) -> Result<Self> {
        Self::new(modes, dressings, rho.matrix().clone())
    }

    pub fn modes(&self) -> &Arc<ModeSet> {
        &self.modes
    }

    pub fn states(&self) -> &[Ket] {
        &self.states
    }

    pub fn weights(&self) -> &DMatrix<Complex64> {
        &self.weights
    }

    /// `Tr(rho O) = sum_ij omega_ij <V| R_j O L_i |V>`, reordering cyclically
    /// with no exchange phases.
    pub fn expectation(&self, op: &OpSum) -> Result<Complex64> {
        let images: Vec<Ket> = self.states.iter().map(|s| op.apply(s)).collect::<Result<_>>()?;
        let mut total = Complex64::default();
        for (i, img) in images.iter().enumerate() {
            for (j, bra) in self.states.iter().enumerate() {
                let w = self.weights[(i, j)];
                if w != Complex64::default() {
                    total += w * inner(bra, img)?;
                }
            }
        }
        Ok(total)
    }

    /// `Tr(omega K)` for a kernel given directly over the dressing index.
    pub fn expectation_kernel(&self, kernel: &DMatrix<Complex64>) -> Result<Complex64> {
        let n = self.states.len();
        if kernel.nrows() != n || kernel.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: kernel.nrows() });
        }
        Ok((&self.weights * kernel).trace())
    }

    /// Matrix elements `<a|rho|b>` over the given basis kets.
    pub fn reduce(&self, basis: &[Ket], labels: Vec<String>) -> Result<DensityMatrix> {
        let n = basis.len();
        let overlaps: Vec<Vec<Complex64>> = basis
            .iter()
            .map(|a| self.states.iter().map(|s| inner(a, s)).collect::<Result<_>>())
            .collect::<Result<_>>()?;
        let mut rho = DMatrix::zeros(n, n);
        for a in 0..n {
            for b in 0..n {
                let mut z = Complex64::default();
                for i in 0..self.states.len() {
                    for j in 0..self.states.len() {
                        z += overlaps[a][i] * self.weights[(i, j)] * overlaps[b][j].conj();
                    }
                }
                rho[(a, b)] = z;
            }
        }
        DensityMatrix::new(labels, rho)
    }
}

/// Pure-state density matrix of `ket` projected onto the given basis kets.
pub fn density_of_ket(ket: &Ket, basis: &[Ket], labels: Vec<String>) -> Result<DensityMatrix> {
    let amps: Vec<Complex64> = basis.iter().map(|b| inner(b, ket)).collect::<Result<_>>()?;
    DensityMatrix::pure(labels, &amps)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Keep {
    First,
    Second,
}

/// Partial trace of `rho` over a product basis of sizes `(d_a, d_b)`.
pub fn partial_trace(rho: &DensityMatrix, dims: (usize, usize), keep: Keep) -> Result<DensityMatrix> {
    let (da, db) = dims;
    if da * db != rho.dim() || da == 0 || db == 0 {
        return Err(Error::param(format!(
            "basis of size {} is not a {da} x {db} product",
            rho.dim()
        )));
    }
    let m = rho.matrix();
    let (n, out) = match keep {
        Keep::First => {
            let mut out = DMatrix::zeros(da, da);
            for i in 0..da {
                for j in 0..da {
                    out[(i, j)] = (0..db).map(|k| m[(i * db + k, j * db + k)]).sum();
                }
            }
            (da, out)
        }
        Keep::Second => {
            let mut out = DMatrix::zeros(db, db);
            for i in 0..db {
                for j in 0..db {
                    out[(i, j)] = (0..da).map(|k| m[(k * db + i, k * db + j)]).sum();
                }
            }
            (db, out)
        }
    };
    let labels = (0..n)
        .map(|i| {
            let full = match keep {
                Keep::First => &rho.labels()[i * db],
                Keep::Second => &rho.labels()[i],
            };
            let mut parts = full.splitn(2, '|');
            let (a, b) = (parts.next(), parts.next());
            match (keep, a, b) {
                (Keep::First, Some(a), Some(_)) => a.to_owned(),
                (Keep::Second, Some(_), Some(b)) => b.to_owned(),
                _ => i.to_string(),
            }
        })
        .collect();
    DensityMatrix::new(labels, out)
}

/// Conversion constants used by [`argon_localization`].
pub mod units {
    /// `hbar c` in eV nm.
    pub const HBAR_C_EV_NM: f64 = 197.326_980_4;
    /// Boltzmann constant in eV/K.
    pub const K_B_EV_PER_K: f64 = 8.617_333_262e-5;
    /// Atomic mass unit in eV.
    pub const AMU_EV: f64 = 931.494_102_42e6;
    /// Argon atomic mass in u.
    pub const ARGON_MASS_U: f64 = 39.948;
    /// Atomic dimension used as the localization threshold, in nm.
    pub const ATOMIC_SIZE_NM: f64 = 0.1;
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Localization {
    /// `sqrt(2 pi / (m T))` in eV^-1.
    pub lambda_natural: f64,
    pub lambda_nm: f64,
    /// Atomic size in eV^-1.
    pub threshold_natural: f64,
    pub below_atomic_size: bool,
}

/// Thermal de Broglie length for temperature in kelvin and mass in atomic mass units.
pub fn argon_localization(temperature_k: f64, mass_u: f64) -> Result<Localization> {
    if !(temperature_k > 0.0) || !(mass_u > 0.0) {
        return Err(Error::param("temperature and mass must be positive"));
    }
    let t = temperature_k * units::K_B_EV_PER_K;
    let m = mass_u * units::AMU_EV;
    let lambda_natural = (2.0 * std::f64::consts::PI / (m * t)).sqrt();
    let threshold_natural = units::ATOMIC_SIZE_NM / units::HBAR_C_EV_NM;
    Ok(Localization {
        lambda_natural,
        lambda_nm: lambda_natural * units::HBAR_C_EV_NM,
        threshold_natural,
        below_atomic_size: lambda_natural < threshold_natural,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detectors::EprState;
    use crate::fock::{FockState, OpString};
    use crate::wave::Grid1D;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn thermal_examples() {
        let d = thermal_density(&ThermalConfig::new(1.0, vec![0.0, 0.0])).unwrap();
        assert!((d.get(0, 0).re - 0.5).abs() < 1e-15);
        let t = 0.7;
        let d = thermal_density(&ThermalConfig::new(t, vec![0.0, t * 2f64.ln()])).unwrap();
        assert!((d.get(0, 0).re - 2.0 / 3.0).abs() < 1e-12);
        assert!((d.get(1, 1).re - 1.0 / 3.0).abs() < 1e-12);
        let hot = thermal_density(&ThermalConfig::new(1e9, vec![0.0, 1.0, 2.5])).unwrap();
        assert!(hot.diagonal_weights().iter().all(|w| (w - 1.0 / 3.0).abs() < 1e-6));
        assert!(thermal_density(&ThermalConfig::new(0.0, vec![0.0])).is_err());
    }

    #[test]
    fn entropy_examples() {
        let pure = DensityMatrix::diagonal(index_labels(3), &[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(boltzmann_entropy(&pure), 0.0);
        let uni = DensityMatrix::diagonal(index_labels(5), &[1.0; 5]).unwrap();
        assert!((boltzmann_entropy(&uni) - 5f64.ln()).abs() < 1e-12);
        let d = DensityMatrix::diagonal(index_labels(2), &[2.0, 1.0]).unwrap();
        let expected = 2.0 / 3.0 * 1.5f64.ln() + 3f64.ln() / 3.0;
        assert!((boltzmann_entropy(&d) - expected).abs() < 1e-12);
        assert!((expected - 0.6365).abs() < 1e-4);
    }

    #[test]
    fn validation_rejects_bad_matrices() {
        let bad = DMatrix::from_row_slice(2, 2, &[c(0.5), c(0.1), c(0.0), c(0.5)]);
        assert!(DensityMatrix::new(index_labels(2), bad).is_err());
        let neg = DMatrix::from_row_slice(2, 2, &[c(1.5), c(0.0), c(0.0), c(-0.5)]);
        assert!(DensityMatrix::new(index_labels(2), neg).is_err());
    }

    #[test]
    fn partial_traces() {
        let a = DensityMatrix::diagonal(index_labels(2), &[0.3, 0.7]).unwrap();
        let b = DensityMatrix::pure(index_labels(3), &[c(1.0), c(1.0), Complex64::new(0.0, 1.0)]).unwrap();
        let ab = a.kron(&b).unwrap();
        assert!(partial_trace(&ab, (2, 3), Keep::First).unwrap().max_abs_diff(&a) < 1e-15);
        assert!(partial_trace(&ab, (2, 3), Keep::Second).unwrap().max_abs_diff(&b) < 1e-15);
        let bell = DensityMatrix::pure(index_labels(4), &[c(1.0), c(0.0), c(0.0), c(1.0)]).unwrap();
        let r = partial_trace(&bell, (2, 2), Keep::First).unwrap();
        assert!((r.get(0, 0).re - 0.5).abs() < 1e-15 && r.get(0, 1).norm() == 0.0);
        assert!(partial_trace(&bell, (3, 2), Keep::First).is_err());
    }

    #[test]
    fn singlet_reduced_state() {
        let s = EprState::singlet();
        let mut basis = Vec::new();
        let mut labels = Vec::new();
        for (a, la) in [(s.arm1.up, "up"), (s.arm1.down, "down")] {
            for (b, lb) in [(s.arm2.up, "up"), (s.arm2.down, "down")] {
                let op: OpSum = OpString::create(a).times(&OpString::create(b)).into();
                basis.push(op.apply(&Ket::vacuum(s.ket.modes())).unwrap());
                labels.push(format!("{la}|{lb}"));
            }
        }
        let rho = density_of_ket(&s.ket, &basis, labels).unwrap();
        let r = partial_trace(&rho, (2, 2), Keep::First).unwrap();
        assert!((r.get(0, 0).re - 0.5).abs() < 1e-15);
        assert!((r.get(1, 1).re - 0.5).abs() < 1e-15);
        assert!(r.get(0, 1).norm() < 1e-15);
        assert_eq!(r.labels(), ["up", "down"]);
    }

    #[test]
    fn density_state_vector_expectations() {
        let modes = ModeSet::fermionic(["1", "2"]);
        let dress: Vec<OpSum> = vec![OpString::create(0).into(), OpString::create(1).into()];
        let pure = DensityMatrix::diagonal(index_labels(2), &[1.0, 0.0]).unwrap();
        let dsv = DensityStateVector::from_density(&modes, &dress, &pure).unwrap();
        assert!((dsv.expectation(&OpString::number(0).into()).unwrap() - 1.0).norm() < 1e-15);
        let t = 1.3;
        let th = thermal_density(&ThermalConfig::new(t, vec![0.0, 0.4])).unwrap();
        let dsv = DensityStateVector::from_density(&modes, &dress, &th).unwrap();
        let n1 = dsv.expectation(&OpString::number(1).into()).unwrap();
        assert!((n1.re - th.get(1, 1).re).abs() < 1e-15);
        let id: DMatrix<Complex64> = DMatrix::identity(2, 2);
        assert!((dsv.expectation_kernel(&id).unwrap() - 1.0).norm() < 1e-15);
        let basis: Vec<Ket> = [0usize, 1]
            .iter()
            .map(|&m| Ket::basis_state(&modes, FockState::from_occupations([(m, 1)])))
            .collect();
        assert!(dsv.reduce(&basis, index_labels(2)).unwrap().max_abs_diff(&th) < 1e-15);
    }

    #[test]
    fn mixed_density_is_stationary() {
        let grid = Grid1D::new(0.0, 1.0, 3).unwrap();
        let v = vec![c(1.0); 3];
        let m1 = WaveMode::normalized(grid, v.clone(), "1").unwrap();
        let m2 = WaveMode::normalized(grid, v, "2").unwrap();
        let modes = StationaryModes::new(vec![m1, m2], vec![1.0, 1.5]).unwrap();
        let mixed = SystemState::Mixed(DensityMatrix::diagonal(index_labels(2), &[1.0, 1.0]).unwrap());
        let pure = SystemState::Pure(vec![c(FRAC), c(FRAC)]);
        let p0 = probability_density(&modes, &mixed, 1, 0.0).unwrap();
        let mut ts = Vec::new();
        let mut ps = Vec::new();
        for k in 0..400 {
            let t = 0.1 * k as f64;
            assert!((probability_density(&modes, &mixed, 1, t).unwrap() - p0).abs() < 1e-14);
            ts.push(t);
            ps.push(probability_density(&modes, &pure, 1, t).unwrap());
        }
        let period = oscillation_period(&ts, &ps).unwrap();
        assert!((period - 2.0 * std::f64::consts::PI / 0.5).abs() < 1e-3);
        assert!(StationaryModes::new(vec![], vec![1.0]).is_err());
    }

    const FRAC: f64 = std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn argon() {
        let l = argon_localization(300.0, units::ARGON_MASS_U).unwrap();
        assert!((l.lambda_nm - 0.016).abs() < 5e-4);
        assert!(l.below_atomic_size);
        let heavy = argon_localization(300.0, 4.0 * units::ARGON_MASS_U).unwrap();
        assert!((heavy.lambda_nm / l.lambda_nm - 0.5).abs() < 1e-12);
        let hot = argon_localization(1200.0, units::ARGON_MASS_U).unwrap();
        assert!((hot.lambda_nm / l.lambda_nm - 0.5).abs() < 1e-12);
    }
}
