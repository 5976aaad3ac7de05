//! Registered comparisons between the primary code paths and the references.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::dense::DenseFock;
use super::reference::{
    boltzmann_ratio, environment_trace_exact, singlet_correlation_closed_form, slit_first_zero_bisection,
    weyl_peak_velocity, DenseFilter, DenseSinglet,
};
use crate::csvout::Table;
use crate::decoherence::{measure_with_chain, EnvironmentModel};
use crate::density::{density_of_ket, index_labels, partial_trace, thermal_density, DensityMatrix, Keep, ThermalConfig};
use crate::detectors::{
    bell_correlation, chsh, epr_coincidence_table, BellConfig, ChshSettings, EprState, FilterSpec, Spin,
};
use crate::error::{Error, Result};
use crate::fock::{Ket, ModeSet, OpString, OpSum};
use crate::wave::{Grid1D, SlitGeometry, WeylPacket};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Skipped => "skipped",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleReport {
    pub id: String,
    pub primary: f64,
    pub oracle: f64,
    pub abs_deviation: f64,
    pub rel_deviation: f64,
    pub tolerance: f64,
    pub status: Status,
}

impl OracleReport {
    fn compare(id: &str, primary: f64, oracle: f64, tolerance: f64) -> Self {
        let abs_deviation = (primary - oracle).abs();
        let rel_deviation = if oracle != 0.0 { abs_deviation / oracle.abs() } else { abs_deviation };
        let status = if abs_deviation <= tolerance { Status::Pass } else { Status::Fail };
        Self {
            id: id.to_owned(),
            primary,
            oracle,
            abs_deviation,
            rel_deviation,
            tolerance,
            status,
        }
    }

    fn skipped(id: &str) -> Self {
        Self {
            id: id.to_owned(),
            primary: f64::NAN,
            oracle: f64::NAN,
            abs_deviation: f64::NAN,
            rel_deviation: f64::NAN,
            tolerance: f64::NAN,
            status: Status::Skipped,
        }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

/// `(primary, oracle)` pair with the largest deviation.
type Comparison = (f64, f64);

struct Case {
    id: &'static str,
    tolerance: f64,
    run: fn() -> Result<Comparison>,
}

fn worst(pairs: impl IntoIterator<Item = (f64, f64)>) -> Comparison {
    pairs
        .into_iter()
        .fold((0.0, 0.0), |best, cur| if (cur.0 - cur.1).abs() > (best.0 - best.1).abs() { cur } else { best })
}

fn angle_grid() -> Vec<f64> {
    (0..19).map(|k| k as f64 * PI / 18.0).collect()
}

fn bell_grid() -> Result<Comparison> {
    let s = EprState::singlet();
    let dense = DenseSinglet::new()?;
    let mut pairs = Vec::new();
    for &a in &angle_grid() {
        for &b in &angle_grid() {
            pairs.push((bell_correlation(&s, a, b)?, dense.correlation(a, b)));
        }
    }
    Ok(worst(pairs))
}

fn bell_closed_form() -> Result<Comparison> {
    let dense = DenseSinglet::new()?;
    let mut pairs = Vec::new();
    for &a in &angle_grid() {
        for &b in &angle_grid() {
            pairs.push((dense.correlation(a, b), singlet_correlation_closed_form(a, b)));
        }
    }
    Ok(worst(pairs))
}

fn chsh_canonical() -> Result<Comparison> {
    let set = ChshSettings::canonical();
    let primary = chsh(&EprState::singlet(), &set)?.magnitude();
    let d = DenseSinglet::new()?;
    let s = d.correlation(set.alpha1, set.beta1) - d.correlation(set.alpha1, set.beta2)
        + d.correlation(set.alpha2, set.beta1)
        + d.correlation(set.alpha2, set.beta2);
    Ok((primary, s.abs()))
}

fn epr_filtered() -> Result<Comparison> {
    let s = EprState::singlet();
    let dense = DenseSinglet::new()?;
    let filters = [
        (None, DenseFilter::None),
        (Some(FilterSpec::projection(s.arm1)), DenseFilter::Projection),
        (Some(FilterSpec::spin_flip(s.arm1)), DenseFilter::SpinFlip),
    ];
    let mut pairs = Vec::new();
    for (spec, dense_filter) in &filters {
        for &a in &angle_grid() {
            for b in [a, a + 0.4] {
                let t = epr_coincidence_table(&s, spec.as_ref(), &BellConfig::new(a, b))?;
                let d = dense.filtered_table(*dense_filter, a, b)?;
                let flat = [
                    t.get(Spin::Up, Spin::Up),
                    t.get(Spin::Up, Spin::Down),
                    t.get(Spin::Down, Spin::Up),
                    t.get(Spin::Down, Spin::Down),
                ];
                pairs.extend(flat.into_iter().zip(d));
            }
        }
    }
    Ok(worst(pairs))
}

fn singlet_partial_trace() -> Result<Comparison> {
    let s = EprState::singlet();
    let vac = Ket::vacuum(s.ket.modes());
    let mut basis = Vec::new();
    for a in [s.arm1.up, s.arm1.down] {
        for b in [s.arm2.up, s.arm2.down] {
            let op: OpSum = OpString::create(a).times(&OpString::create(b)).into();
            basis.push(op.apply(&vac)?);
        }
    }
    let rho = density_of_ket(&s.ket, &basis, index_labels(4))?;
    let reduced = partial_trace(&rho, (2, 2), Keep::First)?;
    let dense = DenseSinglet::new()?.reduced_arm1();
    let mut pairs = Vec::new();
    for i in 0..2 {
        for j in 0..2 {
            let (p, o) = (reduced.get(i, j), dense[(i, j)]);
            pairs.push((p.re, o.re));
            pairs.push((p.im, o.im));
        }
    }
    Ok(worst(pairs))
}

fn environment_cases() -> Result<Comparison> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut pairs = Vec::new();
    let systems = [
        DensityMatrix::pure(index_labels(2), &[Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)])?,
        DensityMatrix::pure(index_labels(2), &[Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)])?,
        DensityMatrix::new(
            index_labels(2),
            DMatrix::from_row_slice(
                2,
                2,
                &[
                    Complex64::new(0.7, 0.0),
                    Complex64::new(0.1, 0.2),
                    Complex64::new(0.1, -0.2),
                    Complex64::new(0.3, 0.0),
                ],
            ),
        )?,
    ];
    for n in 1..=10 {
        for (k, sys) in systems.iter().enumerate() {
            let env = if k == 0 {
                EnvironmentModel::Uniform { n, c: 0.9 }
            } else {
                EnvironmentModel::Explicit(
                    (0..n)
                        .map(|_| Complex64::from_polar(rng.gen_range(0.0..0.99), rng.gen_range(0.0..2.0 * PI)))
                        .collect(),
                )
            };
            let eff = if k == 2 { [0.9, 0.6] } else { [1.0, 1.0] };
            let out = measure_with_chain(sys, &env, eff)?;
            let exact = environment_trace_exact(sys.matrix(), &env.factors(), eff);
            for i in 0..2 {
                for j in 0..2 {
                    pairs.push((out.pointer[(i, j)].re, exact[(i, j)].re));
                    pairs.push((out.pointer[(i, j)].im, exact[(i, j)].im));
                }
            }
        }
    }
    Ok(worst(pairs))
}

fn weyl_velocity(mass: f64, energy: f64, half_width: f64) -> Result<Comparison> {
    let packet = WeylPacket::new(energy, half_width, mass)?;
    let grid = Grid1D::symmetric(400.0, 1.0)?;
    let w = packet.normalize_on(&grid)?;
    let (t1, t2) = (0.0, 10.0);
    let primary = (w.peak_position(t2) - w.peak_position(t1)) / (t2 - t1);
    Ok((primary, weyl_peak_velocity(energy, half_width, mass, t1, t2)))
}

fn weyl_massive() -> Result<Comparison> {
    weyl_velocity(1.0, 1.25, 0.1)
}

fn weyl_massless() -> Result<Comparison> {
    weyl_velocity(0.0, 1.0, 0.5)
}

fn slit_zero() -> Result<Comparison> {
    let mut pairs = Vec::new();
    for (d, a, p) in [(5.0, 1.0, 4.0 * PI), (3.0, 0.4, 10.0), (12.0, 2.5, 1.3)] {
        let g = SlitGeometry::new(d, a, p, 1e4)?;
        pairs.push((g.first_fringe_zero().sin(), slit_first_zero_bisection(d, a, p)));
    }
    Ok(worst(pairs))
}

fn thermal_ratio() -> Result<Comparison> {
    let mut pairs = Vec::new();
    for (t, e) in [(1.0, vec![0.0, 2f64.ln()]), (0.3, vec![1.0, 1.7]), (25.0, vec![-3.0, 4.0])] {
        let rho = thermal_density(&ThermalConfig::new(t, e.clone()))?;
        pairs.push((rho.get(1, 1).re / rho.get(0, 0).re, boltzmann_ratio(e[0], e[1], t)));
    }
    Ok(worst(pairs))
}

fn fock_dense_agreement() -> Result<Comparison> {
    let mut pairs = Vec::new();
    let sets = [
        ModeSet::fermionic(["1", "2", "3", "4", "5"]),
        ModeSet::bosonic(["a", "b", "c"], 4)?,
    ];
    let ops: Vec<OpString> = vec![
        OpString::create(0).times(&OpString::annihilate(2)),
        OpString::create(1).times(&OpString::create(0)).scaled(Complex64::new(0.3, -0.7)),
        OpString::number(2).times(&OpString::annihilate(1)),
    ];
    for modes in &sets {
        let fock = DenseFock::new(modes)?;
        for op in &ops {
            let m = fock.string(op)?;
            for code in 0..fock.dim() {
                let ket = Ket::basis_state(modes, fock.state_of(code));
                let image = match op.apply(&ket) {
                    Err(Error::CutoffOverflow { .. }) => continue,
                    other => other?,
                };
                let sparse = fock.vector_of(&image)?;
                let dense = m.apply(&fock.vector_of(&ket)?);
                for (s, d) in sparse.iter().zip(dense.iter()) {
                    pairs.push((s.re, d.re));
                    pairs.push((s.im, d.im));
                }
            }
        }
    }
    Ok(worst(pairs))
}

const CASES: &[Case] = &[
    Case { id: "bell.closed_form", tolerance: 1e-12, run: bell_closed_form },
    Case { id: "bell.grid", tolerance: 1e-12, run: bell_grid },
    Case { id: "chsh.canonical", tolerance: 1e-12, run: chsh_canonical },
    Case { id: "epr.filtered", tolerance: 1e-12, run: epr_filtered },
    Case { id: "decoherence.exact_trace", tolerance: 1e-10, run: environment_cases },
    Case { id: "fock.dense_agreement", tolerance: 1e-12, run: fock_dense_agreement },
    Case { id: "singlet.partial_trace", tolerance: 1e-12, run: singlet_partial_trace },
    Case { id: "slit.first_zero", tolerance: 1e-9, run: slit_zero },
    Case { id: "thermal.boltzmann_ratio", tolerance: 1e-12, run: thermal_ratio },
    Case { id: "weyl.velocity.massive", tolerance: 1e-4, run: weyl_massive },
    Case { id: "weyl.velocity.massless", tolerance: 1e-4, run: weyl_massless },
];

pub fn case_ids() -> Vec<&'static str> {
    CASES.iter().map(|c| c.id).collect()
}

fn glob_match(pattern: &str, id: &str) -> bool {
    match pattern.split_once('*') {
        None => pattern == id,
        Some((head, tail)) => id.strip_prefix(head).is_some_and(|rest| {
            (0..=rest.len()).any(|k| rest.is_char_boundary(k) && glob_match(tail, &rest[k..]))
        }),
    }
}

#[derive(Clone, Debug, Default)]
pub struct SuiteOptions {
    /// Case ids or `*` globs; empty runs everything.
    pub patterns: Vec<String>,
    /// Replaces every case tolerance when set.
    pub tolerance_override: Option<f64>,
}

/// Runs the matching cases, ordered by id. A literal id that names no case
/// is reported as skipped; a glob that matches nothing contributes nothing.
pub fn run_oracle_suite(options: &SuiteOptions) -> Result<Vec<OracleReport>> {
    let selected: Vec<&Case> = CASES
        .iter()
        .filter(|c| options.patterns.is_empty() || options.patterns.iter().any(|p| glob_match(p, c.id)))
        .collect();
    let mut reports: Vec<OracleReport> = selected
        .iter()
        .map(|case| {
            let (p, o) = (case.run)()?;
            Ok(OracleReport::compare(
                case.id,
                p,
                o,
                options.tolerance_override.unwrap_or(case.tolerance),
            ))
        })
        .collect::<Result<_>>()?;
    for p in &options.patterns {
        if !p.contains('*') && !CASES.iter().any(|c| c.id == p) {
            reports.push(OracleReport::skipped(p));
        }
    }
    reports.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(reports)
}

pub fn report_table(reports: &[OracleReport]) -> Table {
    let mut t = Table::new([
        "case",
        "primary",
        "oracle",
        "abs_deviation",
        "rel_deviation",
        "tolerance",
        "status",
    ]);
    for r in reports {
        t.push(vec![
            r.id.clone().into(),
            r.primary.into(),
            r.oracle.into(),
            r.abs_deviation.into(),
            r.rel_deviation.into(),
            r.tolerance.into(),
            r.status.as_str().into(),
        ]);
    }
    t
}

/// Fixed-width text rendering for terminals.
pub fn render_reports(reports: &[OracleReport]) -> String {
    let mut out = format!("{:<28} {:>12} {:>10} {}\n", "case", "deviation", "tolerance", "status");
    for r in reports {
        out.push_str(&format!(
            "{:<28} {:>12.3e} {:>10.1e} {}\n",
            r.id,
            r.abs_deviation,
            r.tolerance,
            r.status.as_str()
        ));
    }
    out
}
