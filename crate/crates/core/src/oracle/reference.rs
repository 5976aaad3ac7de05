//! Slow, independent reference evaluations. Nothing here calls the sparse
//! algebra, the detector assemblies or the density-matrix code; only domain
//! types and the dense Fock matrices are shared.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::dense::{DenseFock, OracleMatrix};
use crate::error::Result;
use crate::fock::{ModeSet, OpKind};

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Filter acting on arm 1 before detection, quantized along z.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DenseFilter {
    None,
    /// Number operator of the `+` mode.
    Projection,
    /// Exchanges the `+` and `-` modes.
    SpinFlip,
}

/// Four-mode singlet space `(a+, a-, b+, b-)` as explicit 16-dim matrices.
pub struct DenseSinglet {
    fock: DenseFock,
    state: DVector<Complex64>,
    ann: [OracleMatrix; 4],
}

impl DenseSinglet {
    pub fn new() -> Result<Self> {
        let modes = ModeSet::fermionic(["a+", "a-", "b+", "b-"]);
        let fock = DenseFock::new(&modes)?;
        let cr = |m| fock.single(m, OpKind::Create);
        let vac = fock.vacuum();
        let t1 = cr(0)?.mul(&cr(3)?).apply(&vac);
        let t2 = cr(1)?.mul(&cr(2)?).apply(&vac);
        let state = (t1 - t2) * c(FRAC_1_SQRT_2);
        let ann = [
            fock.single(0, OpKind::Annihilate)?,
            fock.single(1, OpKind::Annihilate)?,
            fock.single(2, OpKind::Annihilate)?,
            fock.single(3, OpKind::Annihilate)?,
        ];
        Ok(Self { fock, state, ann })
    }

    pub fn state(&self) -> &DVector<Complex64> {
        &self.state
    }

    /// Annihilator for outcome `up` on one arm, analyzer at `theta` in the x-z plane.
    fn analyzer(&self, arm: usize, theta: f64, up: bool) -> OracleMatrix {
        let (s, co) = (0.5 * theta).sin_cos();
        let (u, d) = (&self.ann[2 * arm], &self.ann[2 * arm + 1]);
        if up {
            u.scaled(c(co)).add(&d.scaled(c(s)))
        } else {
            u.scaled(c(-s)).add(&d.scaled(c(co)))
        }
    }

    /// Branch-normalized `P(s1, s2)` for outcomes `[++, +-, -+, --]`.
    pub fn table(&self, alpha: f64, beta: f64) -> [f64; 4] {
        table_of(self, &self.state, alpha, beta)
    }

    pub fn filtered_table(&self, filter: DenseFilter, alpha: f64, beta: f64) -> Result<[f64; 4]> {
        let cr = |m| self.fock.single(m, OpKind::Create);
        let state = match filter {
            DenseFilter::None => self.state.clone(),
            DenseFilter::Projection => cr(0)?.mul(&self.ann[0]).apply(&self.state),
            DenseFilter::SpinFlip => cr(0)?
                .mul(&self.ann[1])
                .add(&cr(1)?.mul(&self.ann[0]))
                .apply(&self.state),
        };
        Ok(table_of(self, &state, alpha, beta))
    }

    pub fn correlation(&self, alpha: f64, beta: f64) -> f64 {
        let [pp, pm, mp, mm] = self.table(alpha, beta);
        pp + mm - pm - mp
    }

    /// Reduced 2x2 density matrix of arm 1 over `(up, down)`.
    pub fn reduced_arm1(&self) -> DMatrix<Complex64> {
        let mut amp = DMatrix::<Complex64>::zeros(2, 2);
        for code in 0..self.fock.dim() {
            let z = self.state[code];
            if z.norm() == 0.0 {
                continue;
            }
            let s = self.fock.state_of(code);
            let one = |m| s.occupation(m) == 1;
            if (one(0) ^ one(1)) && (one(2) ^ one(3)) {
                let i = if one(0) { 0 } else { 1 };
                let j = if one(2) { 0 } else { 1 };
                // sign of a_i^dag b_j^dag |V> in the enumerated basis is +1
                amp[(i, j)] = z;
            }
        }
        &amp * amp.adjoint()
    }
}

/// `-cos(alpha - beta)`.
pub fn singlet_correlation_closed_form(alpha: f64, beta: f64) -> f64 {
    -(alpha - beta).cos()
}

/// Pointer matrix from the explicit system-plus-environment state.
///
/// Site `m` of branch 1 sits in `|0>`, of branch 2 in `conj(c_m)|0> + s_m|1>`,
/// so `<e_2|e_1> = prod c_m`. The full vector over `2 x 2^N` entries is built
/// by Kronecker products and the environment is traced out entry by entry.
pub fn environment_trace_exact(
    system: &DMatrix<Complex64>,
    factors: &[Complex64],
    efficiencies: [f64; 2],
) -> DMatrix<Complex64> {
    let mut e1 = DVector::from_element(1, c(1.0));
    let mut e2 = DVector::from_element(1, c(1.0));
    for z in factors {
        let s = (1.0 - z.norm_sqr()).max(0.0).sqrt();
        e1 = e1.kronecker(&DVector::from_vec(vec![c(1.0), c(0.0)]));
        e2 = e2.kronecker(&DVector::from_vec(vec![z.conj(), c(s)]));
    }
    let herm = (system + system.adjoint()).map(|z| z * 0.5);
    let eig = herm.symmetric_eigen();
    let dim_env = e1.len();
    let mut out = DMatrix::<Complex64>::zeros(2, 2);
    for (k, &w) in eig.eigenvalues.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        let v = eig.eigenvectors.column(k);
        let branch0 = DVector::from_element(1, v[0] * efficiencies[0].sqrt());
        let branch1 = DVector::from_element(1, v[1] * efficiencies[1].sqrt());
        let psi = DVector::from_vec(vec![c(1.0), c(0.0)]).kronecker(&branch0.kronecker(&e1))
            + DVector::from_vec(vec![c(0.0), c(1.0)]).kronecker(&branch1.kronecker(&e2));
        for i in 0..2 {
            for j in 0..2 {
                let mut acc = Complex64::default();
                for e in 0..dim_env {
                    acc += psi[i * dim_env + e] * psi[j * dim_env + e].conj();
                }
                out[(i, j)] += acc * w;
            }
        }
    }
    out
}

/// `sin(theta)` of the first zero of the two-slit amplitude, located by
/// bisection on a midpoint-rule integral across both apertures.
pub fn slit_first_zero_bisection(separation: f64, width: f64, wavenumber: f64) -> f64 {
    let amplitude = |s: f64| -> f64 {
        let n = 2000;
        let h = width / n as f64;
        let mut acc = 0.0;
        for centre in [-0.5 * separation, 0.5 * separation] {
            for k in 0..n {
                let x = centre - 0.5 * width + (k as f64 + 0.5) * h;
                acc += (wavenumber * x * s).cos() * h;
            }
        }
        acc
    };
    let (mut lo, mut hi) = (0.0, 1.5 * PI / (wavenumber * separation));
    let mut flo = amplitude(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = amplitude(mid);
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// `exp(-(E_2 - E_1) / T)`.
pub fn boltzmann_ratio(e1: f64, e2: f64, temperature: f64) -> f64 {
    (-(e2 - e1) / temperature).exp()
}

/// Peak velocity of a flat-window Weyl packet between `t1` and `t2`.
///
/// The energy integral uses the plain trapezoid rule and the peak is found on
/// a fine local window with a parabolic fit around the best sample.
pub fn weyl_peak_velocity(energy: f64, half_width: f64, mass: f64, t1: f64, t2: f64) -> f64 {
    let nodes = 4001;
    let lo = energy - half_width;
    let h = 2.0 * half_width / (nodes - 1) as f64;
    let rule: Vec<(f64, f64, f64)> = (0..nodes)
        .map(|k| {
            let e = lo + k as f64 * h;
            let w = if k == 0 || k == nodes - 1 { 0.5 * h } else { h };
            (e, (e * e - mass * mass).sqrt(), w)
        })
        .collect();
    let density = |x: f64, t: f64| -> f64 {
        rule.iter()
            .map(|&(e, p, w)| Complex64::from_polar(w, p * x - e * t))
            .sum::<Complex64>()
            .norm_sqr()
    };
    let v_guess = (energy * energy - mass * mass).sqrt() / energy;
    let peak = |t: f64| -> f64 {
        let centre = v_guess * t;
        let dx = 0.01;
        let samples: Vec<(f64, f64)> = (-1500..=1500)
            .map(|k| {
                let x = centre + k as f64 * dx;
                (x, density(x, t))
            })
            .collect();
        let best = (1..samples.len() - 1)
            .max_by(|&a, &b| samples[a].1.total_cmp(&samples[b].1))
            .unwrap();
        let (y0, y1, y2) = (samples[best - 1].1, samples[best].1, samples[best + 1].1);
        let denom = y0 - 2.0 * y1 + y2;
        let shift = if denom != 0.0 { 0.5 * (y0 - y2) / denom } else { 0.0 };
        samples[best].0 + shift * dx
    };
    (peak(t2) - peak(t1)) / (t2 - t1)
}

fn table_of(o: &DenseSinglet, state: &DVector<Complex64>, alpha: f64, beta: f64) -> [f64; 4] {
    let vac = o.fock.vacuum();
    let mut p = [0.0; 4];
    for (k, (u1, u2)) in [(true, true), (true, false), (false, true), (false, false)]
        .into_iter()
        .enumerate()
    {
        let v = o
            .analyzer(0, alpha, u1)
            .apply(&o.analyzer(1, beta, u2).apply(state));
        p[k] = vac.dotc(&v).norm_sqr();
    }
    let total: f64 = p.iter().sum();
    if total == 0.0 {
        return [0.0; 4];
    }
    p.map(|x| x / total)
}
