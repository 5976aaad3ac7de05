//! The cat as a two-position pointer: final-state density matrix of a
//! polarization-dependent transition, the directional measurement operator,
//! and the classical verdict after decoherence.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::csvout::Table;
use crate::decoherence::MeasurementOutcome;
use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;

/// Off-diagonal magnitude below which the pointer counts as classical.
pub const CLASSICAL_TOL: f64 = 1e-9;

/// Index sizes: recoil classes `n`, emission channels `l`, polarizations `p`,
/// initial recoil components `k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TransitionDims {
    pub classes: usize,
    pub channels: usize,
    pub polarizations: usize,
    pub recoil: usize,
}

impl Default for TransitionDims {
    fn default() -> Self {
        Self {
            classes: 2,
            channels: 2,
            polarizations: 2,
            recoil: 2,
        }
    }
}

impl TransitionDims {
    pub fn out_dim(&self) -> usize {
        self.classes * self.channels
    }

    pub fn in_dim(&self) -> usize {
        self.polarizations * self.recoil
    }
}

/// Matrix elements `<n l | T | p k>`, rows `n * channels + l`, columns `p * recoil + k`.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionModel {
    pub dims: TransitionDims,
    t: DMatrix<Complex64>,
}

impl TransitionModel {
    pub fn new(dims: TransitionDims, t: DMatrix<Complex64>) -> Result<Self> {
        if t.nrows() != dims.out_dim() || t.ncols() != dims.in_dim() {
            return Err(Error::DimensionMismatch {
                expected: dims.out_dim() * dims.in_dim(),
                found: t.nrows() * t.ncols(),
            });
        }
        Ok(Self { dims, t })
    }

    pub fn from_fn(dims: TransitionDims, f: impl Fn(usize, usize, usize, usize) -> Complex64) -> Self {
        let t = DMatrix::from_fn(dims.out_dim(), dims.in_dim(), |r, c| {
            f(r / dims.channels, r % dims.channels, c / dims.recoil, c % dims.recoil)
        });
        Self { dims, t }
    }

    /// Polarization `p` drives the recoil into class `n = p`; each class emits
    /// into every channel with amplitudes depending on `l` and `k`.
    pub fn polarization_split(dims: TransitionDims) -> Result<Self> {
        if dims.classes != dims.polarizations {
            return Err(Error::param("polarization split needs one recoil class per polarization"));
        }
        Ok(Self::from_fn(dims, |n, l, p, k| {
            if n != p {
                return Complex64::default();
            }
            let phase = 0.7 * (l as f64 + 1.0) * (k as f64 + 1.0) + 0.3 * n as f64;
            Complex64::from_polar(1.0 / (1.0 + l as f64 + 0.5 * k as f64), phase)
        }))
    }

    /// Uniformly random entries in the unit square, for property tests.
    pub fn random<R: Rng>(dims: TransitionDims, rng: &mut R) -> Self {
        let t = DMatrix::from_fn(dims.out_dim(), dims.in_dim(), |_, _| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        Self { dims, t }
    }

    /// Random entries restricted to `n == p`: polarization `p` only ever
    /// leaves recoil class `p` behind.
    pub fn random_split<R: Rng>(dims: TransitionDims, rng: &mut R) -> Result<Self> {
        if dims.classes != dims.polarizations {
            return Err(Error::param("polarization split needs one recoil class per polarization"));
        }
        let mut m = Self::random(dims, rng);
        for r in 0..dims.out_dim() {
            for c in 0..dims.in_dim() {
                if r / dims.channels != c / dims.recoil {
                    m.t[(r, c)] = Complex64::default();
                }
            }
        }
        Ok(m)
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.t
    }

    pub fn labels(&self) -> Vec<String> {
        (0..self.dims.out_dim())
            .map(|r| {
                let (n, l) = (r / self.dims.channels, r % self.dims.channels);
                format!("{},l{l}", class_name(n))
            })
            .collect()
    }
}

fn class_name(n: usize) -> String {
    match n {
        0 => "u".into(),
        1 => "d".into(),
        _ => format!("n{n}"),
    }
}

/// Unnormalized `T (sigma (x) beta) T^dag`.
pub fn final_state_matrix(
    t: &TransitionModel,
    sigma: &DensityMatrix,
    beta: &DensityMatrix,
) -> Result<DMatrix<Complex64>> {
    if sigma.dim() != t.dims.polarizations {
        return Err(Error::DimensionMismatch {
            expected: t.dims.polarizations,
            found: sigma.dim(),
        });
    }
    if beta.dim() != t.dims.recoil {
        return Err(Error::DimensionMismatch {
            expected: t.dims.recoil,
            found: beta.dim(),
        });
    }
    let input = sigma.matrix().kronecker(beta.matrix());
    Ok(&t.t * input * t.t.adjoint())
}

/// Final-state density matrix over `(n, l)`, normalized.
pub fn final_state_density(t: &TransitionModel, sigma: &DensityMatrix, beta: &DensityMatrix) -> Result<DensityMatrix> {
    DensityMatrix::from_unnormalized(t.labels(), final_state_matrix(t, sigma, beta)?)
}

/// Largest `|rho_{n'l', n''l''}|` with `n' != n''`.
pub fn class_offblock(rho: &DMatrix<Complex64>, dims: TransitionDims) -> f64 {
    let mut worst = 0.0_f64;
    for r in 0..dims.out_dim() {
        for c in 0..dims.out_dim() {
            if r / dims.channels != c / dims.channels {
                worst = worst.max(rho[(r, c)].norm());
            }
        }
    }
    worst
}

/// Emission directions: Gauss-Legendre nodes in `cos theta`, with orthonormal
/// Legendre channel functions `phi_l` sampled at each node.
#[derive(Clone, Debug, PartialEq)]
pub struct DirectionGrid {
    pub cos_theta: Vec<f64>,
    /// Solid-angle weights, summing to `4 pi`.
    pub weights: Vec<f64>,
    values: Vec<Vec<f64>>,
}

impl DirectionGrid {
    pub fn gauss_legendre(points: usize, channels: usize) -> Result<Self> {
        if channels == 0 || points < channels {
            return Err(Error::param(format!(
                "{points} directions cannot resolve {channels} channels"
            )));
        }
        let (mu, w) = gauss_legendre(points);
        let two_pi = 2.0 * std::f64::consts::PI;
        let values = mu
            .iter()
            .map(|&x| {
                let mut p = Vec::with_capacity(channels);
                let (mut p0, mut p1) = (1.0, x);
                for l in 0..channels {
                    let pl = match l {
                        0 => 1.0,
                        1 => x,
                        _ => {
                            let lf = l as f64;
                            let p2 = ((2.0 * lf - 1.0) * x * p1 - (lf - 1.0) * p0) / lf;
                            p0 = p1;
                            p1 = p2;
                            p2
                        }
                    };
                    p.push(pl * ((2.0 * l as f64 + 1.0) / (2.0 * two_pi)).sqrt());
                }
                p
            })
            .collect();
        Ok(Self {
            cos_theta: mu,
            weights: w.iter().map(|w| w * two_pi).collect(),
            values,
        })
    }

    pub fn len(&self) -> usize {
        self.cos_theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cos_theta.is_empty()
    }

    pub fn channels(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    /// `phi_l` at direction `i`.
    pub fn phi(&self, i: usize, l: usize) -> f64 {
        self.values[i][l]
    }
}

/// `M = kappa tau delta(direction)`, with `kappa` and `tau` both acting on
/// the recoil-class index.
#[derive(Clone, Debug, PartialEq)]
pub struct PointerMeasurement {
    pub kappa: DMatrix<Complex64>,
    pub tau: DMatrix<Complex64>,
}

impl PointerMeasurement {
    /// `kappa` all ones, `tau = delta`.
    pub fn polarization_blind(classes: usize) -> Self {
        Self {
            kappa: DMatrix::from_element(classes, classes, Complex64::new(1.0, 0.0)),
            tau: DMatrix::identity(classes, classes),
        }
    }

    pub fn with_tau(self, tau: DMatrix<Complex64>) -> Result<Self> {
        let dev = (&tau - tau.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if dev > 1e-12 {
            return Err(Error::param("tau must be Hermitian"));
        }
        Ok(Self { tau, ..self })
    }

    /// Elementwise `kappa * tau`.
    pub fn kernel(&self) -> DMatrix<Complex64> {
        self.kappa.component_mul(&self.tau)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PointerResult {
    /// `P` at every direction of the grid.
    pub probability: Vec<f64>,
    /// `rho` with the class kernel applied.
    pub reduced: DensityMatrix,
}

impl PointerResult {
    /// `sum_i P_i w_i`.
    pub fn total(&self, grid: &DirectionGrid) -> f64 {
        self.probability.iter().zip(&grid.weights).map(|(p, w)| p * w).sum()
    }

    pub fn to_table(&self, grid: &DirectionGrid) -> Table {
        let mut t = Table::new(["cos_theta", "weight", "probability"]);
        for i in 0..grid.len() {
            t.push(vec![grid.cos_theta[i].into(), grid.weights[i].into(), self.probability[i].into()]);
        }
        t
    }
}

/// `P(theta) = sum K_{n'n''} phi_l'^* phi_l'' rho_{n'l', n''l''}`.
pub fn measure_pointer(
    rho: &DensityMatrix,
    dims: TransitionDims,
    m: &PointerMeasurement,
    grid: &DirectionGrid,
) -> Result<PointerResult> {
    if rho.dim() != dims.out_dim() {
        return Err(Error::DimensionMismatch {
            expected: dims.out_dim(),
            found: rho.dim(),
        });
    }
    let k = m.kernel();
    if k.nrows() != dims.classes || k.ncols() != dims.classes {
        return Err(Error::DimensionMismatch {
            expected: dims.classes,
            found: k.nrows(),
        });
    }
    if grid.channels() != dims.channels {
        return Err(Error::DimensionMismatch {
            expected: dims.channels,
            found: grid.channels(),
        });
    }
    let n = dims.out_dim();
    let reduced_m = DMatrix::from_fn(n, n, |r, c| k[(r / dims.channels, c / dims.channels)] * rho.get(r, c));
    let probability = (0..grid.len())
        .map(|i| {
            let mut p = Complex64::default();
            for r in 0..n {
                for c in 0..n {
                    let z = reduced_m[(r, c)];
                    if z != Complex64::default() {
                        p += grid.phi(i, r % dims.channels) * grid.phi(i, c % dims.channels) * z;
                    }
                }
            }
            p.re
        })
        .collect();
    Ok(PointerResult {
        probability,
        reduced: DensityMatrix::new(rho.labels().to_vec(), reduced_m)?,
    })
}

/// Pointer density matrix over `{live, dead}` and the reading it supports.
#[derive(Clone, Debug, PartialEq)]
pub struct CatVerdict {
    pub density: DensityMatrix,
    pub p_live: f64,
    pub p_dead: f64,
    pub offdiagonal: f64,
    pub bound: f64,
    pub classical: bool,
}

impl CatVerdict {
    pub fn describe(&self) -> &'static str {
        if self.classical {
            "classical mixture"
        } else {
            "not yet classical"
        }
    }
}

/// Branch 1 of the chain is the live cat, branch 2 the dead one.
pub fn cat_verdict(outcome: &MeasurementOutcome) -> Result<CatVerdict> {
    let density = DensityMatrix::new(vec!["live".into(), "dead".into()], outcome.reduced.matrix().clone())?;
    let offdiagonal = density.get(0, 1).norm();
    Ok(CatVerdict {
        p_live: density.get(0, 0).re,
        p_dead: density.get(1, 1).re,
        offdiagonal,
        bound: outcome.bound,
        classical: offdiagonal <= CLASSICAL_TOL,
        density,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decoherence::{measure_with_chain, EnvironmentModel};
    use crate::density::index_labels;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn diag(w: &[f64]) -> DensityMatrix {
        DensityMatrix::diagonal(index_labels(w.len()), w).unwrap()
    }

    fn coherent() -> DensityMatrix {
        DensityMatrix::pure(index_labels(2), &[c(0.8), Complex64::new(0.0, 0.6)]).unwrap()
    }

    #[test]
    fn structural_zero_with_diagonal_inputs() {
        let t = TransitionModel::polarization_split(TransitionDims::default()).unwrap();
        let rho = final_state_matrix(&t, &diag(&[0.4, 0.6]), &diag(&[0.3, 0.7])).unwrap();
        assert_eq!(class_offblock(&rho, t.dims), 0.0);
        let rho = final_state_matrix(&t, &coherent(), &diag(&[0.3, 0.7])).unwrap();
        assert!(class_offblock(&rho, t.dims) > 1e-3);
    }

    #[test]
    fn pure_inputs_through_isometry() {
        let dims = TransitionDims::default();
        let t = TransitionModel::new(dims, DMatrix::identity(4, 4)).unwrap();
        let beta = DensityMatrix::pure(index_labels(2), &[c(1.0), c(1.0)]).unwrap();
        let rho = final_state_density(&t, &coherent(), &beta).unwrap();
        assert!((rho.purity() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn blind_measurement_kills_class_interference() {
        let t = TransitionModel::polarization_split(TransitionDims::default()).unwrap();
        let rho = final_state_density(&t, &coherent(), &diag(&[0.5, 0.5])).unwrap();
        let grid = DirectionGrid::gauss_legendre(16, 2).unwrap();
        let m = PointerMeasurement::polarization_blind(2);
        let r = measure_pointer(&rho, t.dims, &m, &grid).unwrap();
        assert_eq!(class_offblock(r.reduced.matrix(), t.dims), 0.0);
        assert!(r.probability.iter().all(|&p| p >= -1e-15));
        assert!((r.total(&grid) - 1.0).abs() < 1e-12);

        let mixed = final_state_density(&t, &diag(&[0.8 * 0.8, 0.6 * 0.6]), &diag(&[0.5, 0.5])).unwrap();
        let r_mixed = measure_pointer(&mixed, t.dims, &m, &grid).unwrap();
        let diff: f64 = r
            .probability
            .iter()
            .zip(&r_mixed.probability)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(diff < 1e-12);
    }

    #[test]
    fn single_channel_probability() {
        let dims = TransitionDims {
            classes: 1,
            channels: 1,
            polarizations: 1,
            recoil: 1,
        };
        let rho = diag(&[1.0]);
        let grid = DirectionGrid::gauss_legendre(4, 1).unwrap();
        let r = measure_pointer(&rho, dims, &PointerMeasurement::polarization_blind(1), &grid).unwrap();
        for i in 0..grid.len() {
            assert!((r.probability[i] - grid.phi(i, 0).powi(2)).abs() < 1e-15);
        }
    }

    #[test]
    fn verdicts() {
        let plus = DensityMatrix::pure(index_labels(2), &[c(1.0), c(1.0)]).unwrap();
        let out = measure_with_chain(&plus, &EnvironmentModel::Uniform { n: 30, c: 0.5 }, [1.0, 1.0]).unwrap();
        let v = cat_verdict(&out).unwrap();
        assert!(v.offdiagonal <= 4.7e-10 && v.classical);
        let out = measure_with_chain(&plus, &EnvironmentModel::Uniform { n: 0, c: 0.5 }, [1.0, 1.0]).unwrap();
        let v = cat_verdict(&out).unwrap();
        assert!((v.offdiagonal - 0.5).abs() < 1e-15);
        assert_eq!(v.describe(), "not yet classical");
        let alive = diag(&[1.0, 0.0]);
        let out = measure_with_chain(&alive, &EnvironmentModel::Uniform { n: 5, c: 0.5 }, [1.0, 1.0]).unwrap();
        let v = cat_verdict(&out).unwrap();
        assert_eq!((v.p_live, v.p_dead), (1.0, 0.0));
    }
}
