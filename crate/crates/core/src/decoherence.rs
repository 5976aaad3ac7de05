//! Amplification chains, branch truncation and the environment-overlap
//! decoherence bound.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::csvout::Table;
use crate::density::{boltzmann_entropy, index_labels, von_neumann_entropy, DensityMatrix};
use crate::error::{Error, Result};

pub const UNITARY_TOL: f64 = 1e-10;

/// One link of the chain: `rho -> U rho U^dag`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainStep {
    u: DMatrix<Complex64>,
}

impl ChainStep {
    pub fn new(u: DMatrix<Complex64>) -> Result<Self> {
        if !u.is_square() {
            return Err(Error::DimensionMismatch {
                expected: u.nrows(),
                found: u.ncols(),
            });
        }
        let dev = (u.adjoint() * &u - DMatrix::identity(u.nrows(), u.ncols()))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if dev > UNITARY_TOL {
            return Err(Error::NotUnitary(dev));
        }
        Ok(Self { u })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            u: DMatrix::identity(dim, dim),
        }
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.u
    }

    pub fn dim(&self) -> usize {
        self.u.nrows()
    }

    /// `self` followed by `next`, i.e. `U_next U_self`.
    pub fn then(&self, next: &ChainStep) -> Result<ChainStep> {
        check_dim(self.dim(), next.dim())?;
        Ok(ChainStep { u: &next.u * &self.u })
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        check_dim(self.dim(), rho.dim())?;
        let out = &self.u * rho.matrix() * self.u.adjoint();
        DensityMatrix::new(rho.labels().to_vec(), out)
    }
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

pub fn evolve_chain(rho0: &DensityMatrix, steps: &[ChainStep]) -> Result<DensityMatrix> {
    steps.iter().try_fold(rho0.clone(), |rho, s| s.apply(&rho))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChainRecord {
    pub step: usize,
    pub purity: f64,
    pub boltzmann_entropy: f64,
    pub von_neumann_entropy: f64,
}

/// Purity and entropies after every step, starting with step 0 = `rho0`.
pub fn chain_trace(rho0: &DensityMatrix, steps: &[ChainStep]) -> Result<Vec<ChainRecord>> {
    let mut out = Vec::with_capacity(steps.len() + 1);
    let mut rho = rho0.clone();
    let record = |k: usize, r: &DensityMatrix| ChainRecord {
        step: k,
        purity: r.purity(),
        boltzmann_entropy: boltzmann_entropy(r),
        von_neumann_entropy: von_neumann_entropy(r),
    };
    out.push(record(0, &rho));
    for (k, s) in steps.iter().enumerate() {
        rho = s.apply(&rho)?;
        out.push(record(k + 1, &rho));
    }
    Ok(out)
}

pub fn chain_table(records: &[ChainRecord]) -> Table {
    let mut t = Table::new(["step", "purity", "boltzmann_entropy", "von_neumann_entropy"]);
    for r in records {
        t.push(vec![
            r.step.into(),
            r.purity.into(),
            r.boltzmann_entropy.into(),
            r.von_neumann_entropy.into(),
        ]);
    }
    t
}

/// Decouples level `j0`: its off-diagonal elements vanish, its population stays.
pub fn branch_truncate(rho: &DensityMatrix, j0: usize) -> Result<DensityMatrix> {
    if j0 >= rho.dim() {
        return Err(Error::param(format!("level {j0} outside a basis of size {}", rho.dim())));
    }
    let mut m = rho.matrix().clone();
    for k in 0..rho.dim() {
        if k != j0 {
            m[(j0, k)] = Complex64::default();
            m[(k, j0)] = Complex64::default();
        }
    }
    DensityMatrix::new(rho.labels().to_vec(), m)
}

/// Same result as [`branch_truncate`] obtained the long way: couple a
/// two-state side chain that flips only when the system is in `j0`, then
/// trace the side chain out.
pub fn branch_truncate_by_side_chain(rho: &DensityMatrix, j0: usize) -> Result<DensityMatrix> {
    let n = rho.dim();
    if j0 >= n {
        return Err(Error::param(format!("level {j0} outside a basis of size {n}")));
    }
    let one = Complex64::new(1.0, 0.0);
    let mut env0 = DMatrix::zeros(2, 2);
    env0[(0, 0)] = one;
    let joint = rho.matrix().kronecker(&env0);
    let mut u = DMatrix::<Complex64>::zeros(2 * n, 2 * n);
    for s in 0..n {
        if s == j0 {
            u[(2 * s + 1, 2 * s)] = one;
            u[(2 * s, 2 * s + 1)] = one;
        } else {
            u[(2 * s, 2 * s)] = one;
            u[(2 * s + 1, 2 * s + 1)] = one;
        }
    }
    let out = &u * joint * u.adjoint();
    let mut reduced = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            reduced[(i, j)] = out[(2 * i, 2 * j)] + out[(2 * i + 1, 2 * j + 1)];
        }
    }
    DensityMatrix::new(rho.labels().to_vec(), reduced)
}

/// Largest entry deviation between truncation and explicit side-chain tracing.
pub fn truncation_exactness(rho: &DensityMatrix, j0: usize) -> Result<f64> {
    Ok(branch_truncate(rho, j0)?.max_abs_diff(&branch_truncate_by_side_chain(rho, j0)?))
}

/// Overlaps `<d_m^(j) d_m^(i) dag>` between the two branches' environment states.
#[derive(Clone, Debug, PartialEq)]
pub enum EnvironmentModel {
    Uniform { n: usize, c: f64 },
    Explicit(Vec<Complex64>),
}

impl EnvironmentModel {
    pub fn validate(&self) -> Result<()> {
        match self {
            EnvironmentModel::Uniform { c, .. } => {
                if !(0.0..1.0).contains(c) {
                    return Err(Error::invariant(format!(
                        "environment overlap {c} must lie in [0, 1) between distinct branches"
                    )));
                }
            }
            EnvironmentModel::Explicit(cs) => {
                if let Some(z) = cs.iter().find(|z| !(z.norm() < 1.0)) {
                    return Err(Error::invariant(format!(
                        "environment overlap |{z}| must be below 1 between distinct branches"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        match self {
            EnvironmentModel::Uniform { n, .. } => *n,
            EnvironmentModel::Explicit(cs) => cs.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn factors(&self) -> Vec<Complex64> {
        match self {
            EnvironmentModel::Uniform { n, c } => vec![Complex64::new(*c, 0.0); *n],
            EnvironmentModel::Explicit(cs) => cs.clone(),
        }
    }

    /// `prod_m c_m`.
    pub fn overlap_product(&self) -> Complex64 {
        match self {
            EnvironmentModel::Uniform { n, c } => Complex64::new(c.powi(*n as i32), 0.0),
            EnvironmentModel::Explicit(cs) => cs.iter().product(),
        }
    }

    /// `c_max^N`.
    pub fn bound(&self) -> f64 {
        match self {
            EnvironmentModel::Uniform { n, c } => c.powi(*n as i32),
            EnvironmentModel::Explicit(cs) => {
                let cmax = cs.iter().map(|z| z.norm()).fold(0.0, f64::max);
                if cs.is_empty() {
                    1.0
                } else {
                    cmax.powi(cs.len() as i32)
                }
            }
        }
    }

    /// Both interactions in sequence.
    pub fn compose(&self, other: &EnvironmentModel) -> EnvironmentModel {
        match (self, other) {
            (EnvironmentModel::Uniform { n: n1, c: c1 }, EnvironmentModel::Uniform { n: n2, c: c2 })
                if c1 == c2 =>
            {
                EnvironmentModel::Uniform { n: n1 + n2, c: *c1 }
            }
            _ => {
                let mut f = self.factors();
                f.extend(other.factors());
                EnvironmentModel::Explicit(f)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BranchPair {
    Same,
    Different,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OffDiagonal {
    pub realized: f64,
    pub bound: f64,
}

/// Magnitude of `Tr'(eta_i rho eta_j^dag)` under the leading-product model.
pub fn appendix_b_offdiagonal(env: &EnvironmentModel, pair: BranchPair) -> Result<OffDiagonal> {
    match pair {
        BranchPair::Same => Ok(OffDiagonal {
            realized: 1.0,
            bound: 1.0,
        }),
        BranchPair::Different => {
            env.validate()?;
            Ok(OffDiagonal {
                realized: env.overlap_product().norm(),
                bound: env.bound(),
            })
        }
    }
}

/// Pointer state after the effective detector `D = eta_1 B_1^dag b_1 + eta_2 B_2^dag b_2`.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementOutcome {
    /// Pointer matrix before renormalization; its trace is `sum E_i P_i`.
    pub pointer: DMatrix<Complex64>,
    /// Pointer density matrix over `(1, 2)`, normalized.
    pub reduced: DensityMatrix,
    pub efficiencies: [f64; 2],
    pub probabilities: [f64; 2],
    /// `prod_m c_m`.
    pub overlap: Complex64,
    pub bound: f64,
}

impl MeasurementOutcome {
    pub fn detected_fraction(&self) -> f64 {
        self.efficiencies[0] * self.probabilities[0] + self.efficiencies[1] * self.probabilities[1]
    }

    pub fn offdiagonal(&self) -> f64 {
        self.pointer[(0, 1)].norm()
    }
}

pub fn measure_with_chain(
    system: &DensityMatrix,
    env: &EnvironmentModel,
    efficiencies: [f64; 2],
) -> Result<MeasurementOutcome> {
    if system.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: system.dim(),
        });
    }
    if efficiencies.iter().any(|e| !(0.0..=1.0).contains(e)) {
        return Err(Error::param("efficiencies must lie in [0, 1]"));
    }
    env.validate()?;
    let p = [system.get(0, 0).re, system.get(1, 1).re];
    let overlap = env.overlap_product();
    let off = system.get(0, 1) * (efficiencies[0] * efficiencies[1]).sqrt() * overlap;
    let pointer = DMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(efficiencies[0] * p[0], 0.0),
            off,
            off.conj(),
            Complex64::new(efficiencies[1] * p[1], 0.0),
        ],
    );
    let labels = if system.labels().len() == 2 {
        system.labels().to_vec()
    } else {
        index_labels(2)
    };
    let reduced = DensityMatrix::from_unnormalized(labels, pointer.clone())?;
    Ok(MeasurementOutcome {
        pointer,
        reduced,
        efficiencies,
        probabilities: p,
        overlap,
        bound: env.bound(),
    })
}

/// `(N, offdiagonal, bound)` for `N = 0..=n_max` with the equal-weight pure input.
pub fn decay_curve(c: f64, n_max: usize) -> Result<Table> {
    let half = Complex64::new(0.5, 0.0);
    let system = DensityMatrix::new(index_labels(2), DMatrix::from_element(2, 2, half))?;
    let mut t = Table::new(["n", "offdiagonal", "bound"]);
    for n in 0..=n_max {
        let out = measure_with_chain(&system, &EnvironmentModel::Uniform { n, c }, [1.0, 1.0])?;
        t.push(vec![n.into(), out.offdiagonal().into(), out.bound.into()]);
    }
    Ok(t)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EntropyCheck {
    pub initial: f64,
    pub final_: f64,
    pub delta: f64,
    pub increased: bool,
}

/// Boltzmann entropy before and after the measurement. The initial matrix is
/// read in its own eigenbasis, so a pure input starts at zero.
pub fn entropy_increase_check(initial: &DensityMatrix, outcome: &MeasurementOutcome) -> EntropyCheck {
    let s0 = von_neumann_entropy(initial);
    let s1 = boltzmann_entropy(&outcome.reduced);
    EntropyCheck {
        initial: s0,
        final_: s1,
        delta: s1 - s0,
        increased: s1 - s0 >= -1e-12,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn rotation(theta: f64, phase: f64) -> ChainStep {
        let (s, co) = theta.sin_cos();
        ChainStep::new(DMatrix::from_row_slice(
            2,
            2,
            &[c(co), -Complex64::from_polar(s, phase), Complex64::from_polar(s, -phase), c(co)],
        ))
        .unwrap()
    }

    fn plus_state() -> DensityMatrix {
        DensityMatrix::pure(index_labels(2), &[c(1.0), c(1.0)]).unwrap()
    }

    #[test]
    fn chain_group_property() {
        let rho = DensityMatrix::pure(index_labels(2), &[c(0.6), Complex64::new(0.0, 0.8)]).unwrap();
        assert_eq!(evolve_chain(&rho, &[ChainStep::identity(2)]).unwrap(), rho);
        let (u1, u2) = (rotation(0.3, 0.2), rotation(1.1, -0.7));
        let two = evolve_chain(&rho, &[u1.clone(), u2.clone()]).unwrap();
        let one = evolve_chain(&rho, &[u1.then(&u2).unwrap()]).unwrap();
        assert!(two.max_abs_diff(&one) < 1e-12);
        assert!((two.purity() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn non_unitary_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[c(1.0), c(0.1), c(0.0), c(1.0)]);
        assert!(matches!(ChainStep::new(m), Err(Error::NotUnitary(_))));
    }

    #[test]
    fn truncation() {
        let rho = DensityMatrix::pure(index_labels(3), &[c(1.0), c(1.0), c(1.0)]).unwrap();
        let t = branch_truncate(&rho, 2).unwrap();
        assert_eq!(t.get(0, 2), c(0.0));
        assert_eq!(t.get(1, 2), c(0.0));
        assert_eq!(t.get(0, 1), rho.get(0, 1));
        assert!(truncation_exactness(&rho, 2).unwrap() < 1e-15);
        let mut all = rho.clone();
        for j in 0..3 {
            all = branch_truncate(&all, j).unwrap();
        }
        assert_eq!(all.max_offdiagonal(), 0.0);
        let empty = DensityMatrix::pure(index_labels(3), &[c(1.0), c(1.0), c(0.0)]).unwrap();
        assert_eq!(branch_truncate(&empty, 2).unwrap(), empty);
        assert!(branch_truncate(&rho, 3).is_err());
    }

    #[test]
    fn offdiagonal_examples() {
        let r = appendix_b_offdiagonal(&EnvironmentModel::Uniform { n: 100, c: 0.9 }, BranchPair::Different).unwrap();
        assert!((r.bound - 2.656e-5).abs() < 1e-8);
        assert!(r.realized <= r.bound);
        let r = appendix_b_offdiagonal(&EnvironmentModel::Uniform { n: 1, c: 0.0 }, BranchPair::Different).unwrap();
        assert_eq!(r.realized, 0.0);
        let r = appendix_b_offdiagonal(&EnvironmentModel::Uniform { n: 50, c: 0.5 }, BranchPair::Same).unwrap();
        assert_eq!(r.realized, 1.0);
        assert!(appendix_b_offdiagonal(&EnvironmentModel::Uniform { n: 3, c: 1.0 }, BranchPair::Different).is_err());
    }

    #[test]
    fn composition_multiplies() {
        let a = EnvironmentModel::Explicit(vec![Complex64::new(0.3, 0.4), c(0.9)]);
        let b = EnvironmentModel::Uniform { n: 4, c: 0.7 };
        let ab = a.compose(&b);
        let diff = ab.overlap_product() - a.overlap_product() * b.overlap_product();
        assert!(diff.norm() < 1e-12);
    }

    #[test]
    fn measurement_examples() {
        let out = measure_with_chain(&plus_state(), &EnvironmentModel::Uniform { n: 30, c: 0.5 }, [1.0, 1.0]).unwrap();
        assert!(out.offdiagonal() <= 4.66e-10);
        assert!((out.reduced.get(0, 0).re - 0.5).abs() < 1e-15);
        let diag = DensityMatrix::diagonal(index_labels(2), &[0.3, 0.7]).unwrap();
        let out = measure_with_chain(&diag, &EnvironmentModel::Uniform { n: 0, c: 0.5 }, [1.0, 1.0]).unwrap();
        assert_eq!(out.offdiagonal(), 0.0);
    }

    #[test]
    fn entropy_examples() {
        let env = EnvironmentModel::Uniform { n: 200, c: 0.5 };
        let out = measure_with_chain(&plus_state(), &env, [1.0, 1.0]).unwrap();
        let e = entropy_increase_check(&plus_state(), &out);
        assert!(e.initial.abs() < 1e-12);
        assert!((e.final_ - LN_2).abs() < 1e-12);
        let up = DensityMatrix::diagonal(index_labels(2), &[1.0, 0.0]).unwrap();
        let out = measure_with_chain(&up, &env, [1.0, 1.0]).unwrap();
        let e = entropy_increase_check(&up, &out);
        assert_eq!(e.delta, 0.0);
        assert!(e.increased);
    }

    #[test]
    fn decay_table_last_row() {
        let t = decay_curve(0.9, 100).unwrap();
        assert_eq!(t.rows().len(), 101);
        let crate::csvout::Cell::Num(bound) = t.rows()[100][2] else { panic!() };
        assert!((bound - 2.656e-5).abs() < 1e-8);
    }
}
