//! Detector functions and the experiment assemblies built from them:
//! two-slit coincidences, the which-path (Compton) channel, and the EPR
//! pair with filters and rotated analyzers.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::Arc;

use num_complex::Complex64;

use crate::csvout::Table;
use crate::error::{Error, Result};
use crate::fock::{
    field_operator, interrogate, FockState, Ket, ModeSet, OpKind, OpString, OpSum,
    DEFAULT_BOSON_CUTOFF,
};
use crate::wave::{aperture_profile, slit_pattern, visibility, Grid1D, SlitGeometry, Slits, WaveMode};

const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Mode functions keyed by Fock mode index, all on one grid.
#[derive(Clone, Debug, Default)]
pub struct ModeFunctions {
    map: BTreeMap<usize, WaveMode>,
}

impl ModeFunctions {
    pub fn new(pairs: impl IntoIterator<Item = (usize, WaveMode)>) -> Result<Self> {
        let map: BTreeMap<usize, WaveMode> = pairs.into_iter().collect();
        let mut grids = map.values().map(|m| *m.grid());
        if let Some(first) = grids.next() {
            if grids.any(|g| g != first) {
                return Err(Error::param("mode functions must share one grid"));
            }
        }
        Ok(Self { map })
    }

    pub fn get(&self, mode: usize) -> Option<&WaveMode> {
        self.map.get(&mode)
    }

    pub fn grid(&self) -> Option<Grid1D> {
        self.map.values().next().map(|m| *m.grid())
    }

    /// `Psi(x_i) = sum_n f_n(x_i) a_n` at grid index `i`.
    pub fn field_at(&self, i: usize) -> OpSum {
        field_operator(self.map.iter().map(|(&n, m)| (n, m.value(i))))
    }
}

/// Point detector with per-mode response `eta`.
#[derive(Clone, Debug, PartialEq)]
pub struct DetectorSpec {
    /// Grid index of the detector position.
    pub position: usize,
    efficiencies: BTreeMap<usize, Complex64>,
}

impl DetectorSpec {
    /// Unit efficiency on every accepted mode.
    pub fn new(position: usize, accepted: impl IntoIterator<Item = usize>) -> Result<Self> {
        Self::with_efficiencies(position, accepted.into_iter().map(|m| (m, ONE)))
    }

    pub fn with_efficiencies(
        position: usize,
        efficiencies: impl IntoIterator<Item = (usize, Complex64)>,
    ) -> Result<Self> {
        let efficiencies: BTreeMap<usize, Complex64> = efficiencies.into_iter().collect();
        if efficiencies.is_empty() {
            return Err(Error::param("detector must accept at least one mode"));
        }
        if let Some((m, eta)) = efficiencies.iter().find(|(_, e)| e.norm() > 1.0 + 1e-12) {
            return Err(Error::param(format!("efficiency |{eta}| > 1 on mode {m}")));
        }
        Ok(Self {
            position,
            efficiencies,
        })
    }

    /// Same detector with one efficiency on every accepted mode.
    pub fn uniform(&self, eta: Complex64) -> Result<Self> {
        Self::with_efficiencies(self.position, self.efficiencies.keys().map(|&m| (m, eta)))
    }

    pub fn accepted(&self) -> impl Iterator<Item = usize> + '_ {
        self.efficiencies.keys().copied()
    }

    /// `D_m = sum_n eta_n f_n(x_m) a_n` over accepted modes with a known function.
    pub fn operator(&self, functions: &ModeFunctions) -> Result<OpSum> {
        if let Some(g) = functions.grid() {
            if self.position >= g.points {
                return Err(Error::OutsideGrid {
                    x: self.position as f64,
                    min: 0.0,
                    max: (g.points - 1) as f64,
                });
            }
        }
        Ok(field_operator(self.efficiencies.iter().filter_map(|(&n, &eta)| {
            functions.get(n).map(|f| (n, eta * f.value(self.position)))
        })))
    }
}

/// `<V| D_m |state>`.
pub fn detector_amplitude(det: &DetectorSpec, functions: &ModeFunctions, state: &Ket) -> Result<Complex64> {
    interrogate(&det.operator(functions)?, state)
}

/// `<V| D_B D_A |state>`; identically zero on the one-particle sector.
pub fn coincidence_amplitude(
    det_a: &DetectorSpec,
    det_b: &DetectorSpec,
    functions: &ModeFunctions,
    state: &Ket,
) -> Result<Complex64> {
    let after_a = det_a.operator(functions)?.apply(state)?;
    let after_b = det_b.operator(functions)?.apply(&after_a)?;
    Ok(after_b.amplitude(&FockState::vacuum()))
}

/// Quantization axis given by polar angle `theta` and azimuth `phi`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Axis {
    pub theta: f64,
    pub phi: f64,
}

impl Axis {
    pub fn z() -> Self {
        Self::default()
    }

    /// Axis in the x-z plane at angle `theta` from z.
    pub fn planar(theta: f64) -> Self {
        Self { theta, phi: 0.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    pub const BOTH: [Spin; 2] = [Spin::Up, Spin::Down];

    pub fn sign(self) -> f64 {
        match self {
            Spin::Up => 1.0,
            Spin::Down => -1.0,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Spin::Up => "+",
            Spin::Down => "-",
        }
    }

    fn slot(self) -> usize {
        match self {
            Spin::Up => 0,
            Spin::Down => 1,
        }
    }
}

/// A pair of spin modes `(a_+, a_-)` quantized along z.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SpinPair {
    pub up: usize,
    pub down: usize,
}

impl SpinPair {
    /// Annihilator for spin `s` along `axis`:
    /// `a'_+ = cos(t/2) a_+ + e^{i phi} sin(t/2) a_-`,
    /// `a'_- = -e^{-i phi} sin(t/2) a_+ + cos(t/2) a_-`.
    pub fn rotated_annihilator(&self, axis: Axis, s: Spin) -> OpSum {
        let (c, sn) = ((0.5 * axis.theta).cos(), (0.5 * axis.theta).sin());
        let (cu, cd) = match s {
            Spin::Up => (Complex64::new(c, 0.0), Complex64::from_polar(sn, axis.phi)),
            Spin::Down => (Complex64::from_polar(-sn, -axis.phi), Complex64::new(c, 0.0)),
        };
        field_operator([(self.up, cu), (self.down, cd)])
    }

    pub fn rotated_creator(&self, axis: Axis, s: Spin) -> OpSum {
        self.rotated_annihilator(axis, s).adjoint()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FilterKind {
    /// `F = a'_+^dag a'_+`.
    Projection,
    /// `T = a'_+^dag a'_- + a'_-^dag a'_+`.
    SpinFlip,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FilterSpec {
    pub kind: FilterKind,
    pub axis: Axis,
    pub modes: SpinPair,
}

impl FilterSpec {
    pub fn projection(modes: SpinPair) -> Self {
        Self {
            kind: FilterKind::Projection,
            axis: Axis::z(),
            modes,
        }
    }

    pub fn spin_flip(modes: SpinPair) -> Self {
        Self {
            kind: FilterKind::SpinFlip,
            axis: Axis::z(),
            modes,
        }
    }

    pub fn along(self, axis: Axis) -> Self {
        Self { axis, ..self }
    }

    pub fn operator(&self) -> OpSum {
        let up = self.modes.rotated_annihilator(self.axis, Spin::Up);
        let down = self.modes.rotated_annihilator(self.axis, Spin::Down);
        match self.kind {
            FilterKind::Projection => up.adjoint().times(&up),
            FilterKind::SpinFlip => up.adjoint().times(&down).plus(&down.adjoint().times(&up)),
        }
    }
}

pub fn apply_filter(filter: &FilterSpec, state: &Ket) -> Result<Ket> {
    filter.operator().apply(state)
}

/// Multiplies every Fock component by `exp(-i sum_n E_n n_n dt)`.
pub fn free_evolution(state: &Ket, energies: &BTreeMap<usize, f64>, dt: f64) -> Result<Ket> {
    let terms = state
        .terms()
        .map(|(s, a)| {
            let mut e = 0.0;
            for (m, n) in s.occupations() {
                e += energies.get(&m).ok_or(Error::UnknownMode(m))? * n as f64;
            }
            Ok((s.clone(), a * Complex64::from_polar(1.0, -e * dt)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ket::from_terms(state.modes(), terms)
}

/// Two spin-1/2 particles emitted back to back, coupled to total spin zero.
#[derive(Clone, Debug)]
pub struct EprState {
    pub ket: Ket,
    /// Particle moving towards `+X` (detector 1).
    pub arm1: SpinPair,
    /// Particle moving towards `-X` (detector 2).
    pub arm2: SpinPair,
    pub normalization: f64,
}

impl EprState {
    /// `(a_+^dag b_-^dag - a_-^dag b_+^dag)|V> / sqrt 2` over modes `a+, a-, b+, b-`.
    pub fn singlet() -> Self {
        let modes = ModeSet::fermionic(["a+", "a-", "b+", "b-"]);
        let arm1 = SpinPair { up: 0, down: 1 };
        let arm2 = SpinPair { up: 2, down: 3 };
        let n = FRAC_1_SQRT_2;
        let op: OpSum = [
            OpString::create(arm1.up).times(&OpString::create(arm2.down)).scaled(Complex64::new(n, 0.0)),
            OpString::create(arm1.down).times(&OpString::create(arm2.up)).scaled(Complex64::new(-n, 0.0)),
        ]
        .into_iter()
        .collect();
        let ket = op.apply(&Ket::vacuum(&modes)).expect("modes exist");
        Self {
            ket,
            arm1,
            arm2,
            normalization: n,
        }
    }

    /// Total spin projection along z of every component.
    pub fn spin_z_values(&self) -> Vec<i32> {
        let z = |s: &FockState| -> i32 {
            let up = s.occupation(self.arm1.up) + s.occupation(self.arm2.up);
            let down = s.occupation(self.arm1.down) + s.occupation(self.arm2.down);
            up as i32 - down as i32
        };
        self.ket.terms().map(|(s, _)| z(s)).collect()
    }

    pub fn with_ket(&self, ket: Ket) -> Self {
        Self { ket, ..self.clone() }
    }
}

/// Analyzer angles (radians, reduced to `[0, 2 pi)`) for the two arms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BellConfig {
    pub alpha: f64,
    pub beta: f64,
}

impl BellConfig {
    pub fn new(alpha: f64, beta: f64) -> Self {
        let tau = 2.0 * std::f64::consts::PI;
        Self {
            alpha: alpha.rem_euclid(tau),
            beta: beta.rem_euclid(tau),
        }
    }

    pub fn same_axis(angle: f64) -> Self {
        Self::new(angle, angle)
    }
}

/// Spatial factors `w(X, t)` and `v(-X, t)` multiplying the detector operators.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DetectionWeights {
    pub arm1: Complex64,
    pub arm2: Complex64,
}

impl Default for DetectionWeights {
    fn default() -> Self {
        Self { arm1: ONE, arm2: ONE }
    }
}

/// Branch-normalized coincidence probabilities `P(s at X, s' at -X)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoincidenceTable {
    probabilities: [[f64; 2]; 2],
    /// Sum of `|A|^2` before normalization.
    pub raw_total: f64,
}

impl CoincidenceTable {
    pub fn get(&self, at_x: Spin, at_minus_x: Spin) -> f64 {
        self.probabilities[at_x.slot()][at_minus_x.slot()]
    }

    /// `P(++) + P(--) - P(+-) - P(-+)`.
    pub fn correlation(&self) -> f64 {
        let mut e = 0.0;
        for s1 in Spin::BOTH {
            for s2 in Spin::BOTH {
                e += s1.sign() * s2.sign() * self.get(s1, s2);
            }
        }
        e
    }

    pub fn total(&self) -> f64 {
        self.probabilities.iter().flatten().sum()
    }

    pub fn max_abs_diff(&self, other: &CoincidenceTable) -> f64 {
        let mut worst = 0.0_f64;
        for s1 in Spin::BOTH {
            for s2 in Spin::BOTH {
                worst = worst.max((self.get(s1, s2) - other.get(s1, s2)).abs());
            }
        }
        worst
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["spin_at_x", "spin_at_minus_x", "probability"]);
        for s1 in Spin::BOTH {
            for s2 in Spin::BOTH {
                t.push(vec![s1.symbol().into(), s2.symbol().into(), self.get(s1, s2).into()]);
            }
        }
        t
    }
}

/// Coincidence amplitude `<V| D_1(s1) D_2(s2) |state>` with rotated analyzers.
pub fn epr_amplitude(
    state: &EprState,
    config: &BellConfig,
    weights: DetectionWeights,
    s1: Spin,
    s2: Spin,
) -> Result<Complex64> {
    let d1 = state
        .arm1
        .rotated_annihilator(Axis::planar(config.alpha), s1)
        .scaled(weights.arm1);
    let d2 = state
        .arm2
        .rotated_annihilator(Axis::planar(config.beta), s2)
        .scaled(weights.arm2);
    let out = d1.apply(&d2.apply(&state.ket)?)?;
    Ok(out.amplitude(&FockState::vacuum()))
}

pub fn epr_coincidence_table(
    state: &EprState,
    filter: Option<&FilterSpec>,
    config: &BellConfig,
) -> Result<CoincidenceTable> {
    epr_coincidence_table_weighted(state, filter, config, DetectionWeights::default())
}

pub fn epr_coincidence_table_weighted(
    state: &EprState,
    filter: Option<&FilterSpec>,
    config: &BellConfig,
    weights: DetectionWeights,
) -> Result<CoincidenceTable> {
    let filtered = match filter {
        Some(f) => state.with_ket(apply_filter(f, &state.ket)?),
        None => state.clone(),
    };
    table_from_state(&filtered, config, weights)
}

fn table_from_state(
    state: &EprState,
    config: &BellConfig,
    weights: DetectionWeights,
) -> Result<CoincidenceTable> {
    let mut raw = [[0.0; 2]; 2];
    for s1 in Spin::BOTH {
        for s2 in Spin::BOTH {
            raw[s1.slot()][s2.slot()] = epr_amplitude(state, config, weights, s1, s2)?.norm_sqr();
        }
    }
    let total: f64 = raw.iter().flatten().sum();
    let probabilities = if total > 0.0 {
        raw.map(|row| row.map(|p| p / total))
    } else {
        [[0.0; 2]; 2]
    };
    Ok(CoincidenceTable {
        probabilities,
        raw_total: total,
    })
}

/// `E(alpha, beta)` from the unfiltered coincidence table.
pub fn bell_correlation(state: &EprState, alpha: f64, beta: f64) -> Result<f64> {
    Ok(epr_coincidence_table(state, None, &BellConfig::new(alpha, beta))?.correlation())
}

/// Four analyzer settings for the CHSH combination.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChshSettings {
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta1: f64,
    pub beta2: f64,
}

impl ChshSettings {
    /// `alpha1 = 0, beta1 = pi/4, alpha2 = pi/2, beta2 = 3 pi/4`.
    pub fn canonical() -> Self {
        use std::f64::consts::PI;
        Self {
            alpha1: 0.0,
            beta1: 0.25 * PI,
            alpha2: 0.5 * PI,
            beta2: 0.75 * PI,
        }
    }

    pub fn pairs(&self) -> [(f64, f64); 4] {
        [
            (self.alpha1, self.beta1),
            (self.alpha1, self.beta2),
            (self.alpha2, self.beta1),
            (self.alpha2, self.beta2),
        ]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChshResult {
    /// Correlations in the order of [`ChshSettings::pairs`].
    pub correlations: [f64; 4],
    /// `E(a1,b1) - E(a1,b2) + E(a2,b1) + E(a2,b2)`.
    pub s: f64,
}

impl ChshResult {
    pub fn magnitude(&self) -> f64 {
        self.s.abs()
    }
}

pub fn chsh(state: &EprState, settings: &ChshSettings) -> Result<ChshResult> {
    let mut correlations = [0.0; 4];
    for (e, (a, b)) in correlations.iter_mut().zip(settings.pairs()) {
        *e = bell_correlation(state, a, b)?;
    }
    let [e11, e12, e21, e22] = correlations;
    Ok(ChshResult {
        correlations,
        s: e11 - e12 + e21 + e22,
    })
}

/// A one-particle ket that passed the filter, renormalized.
#[derive(Clone, Debug)]
pub struct Transmitted {
    pub ket: Ket,
    pub survival: f64,
}

#[derive(Clone, Debug, Default)]
pub struct Prepared {
    pub transmitted: Vec<Transmitted>,
    pub rejected: usize,
}

/// Keeps the filter-passing part of every ensemble member, discards the rest.
pub fn prepare_by_filter(beam: &[Ket], filter: &FilterSpec) -> Result<Prepared> {
    let op = filter.operator();
    let mut out = Prepared::default();
    for ket in beam {
        let norm = ket.norm_sqr();
        let passed = op.apply(ket)?;
        let kept = if norm > 0.0 { passed.norm_sqr() / norm } else { 0.0 };
        if kept <= 1e-12 {
            out.rejected += 1;
        } else {
            out.transmitted.push(Transmitted {
                ket: passed.normalized(),
                survival: kept,
            });
        }
    }
    Ok(out)
}

/// A photon mode known both in the slit plane and on the screen.
#[derive(Clone, Debug)]
pub struct SlitMode {
    pub aperture: WaveMode,
    pub screen: WaveMode,
}

impl SlitMode {
    pub fn new(geom: &SlitGeometry, slits: Slits, plane: &Grid1D, screen: &Grid1D) -> Result<Self> {
        Ok(Self {
            aperture: aperture_profile(geom, slits, plane)?,
            screen: slit_pattern(geom, slits, screen)?,
        })
    }
}

/// Mode bookkeeping for the which-path experiment.
#[derive(Clone, Debug)]
pub struct WhichPathSetup {
    pub geometry: SlitGeometry,
    pub modes: Arc<ModeSet>,
    /// Two-slit photon modes `a_n`.
    pub incoming: Vec<(usize, SlitMode)>,
    /// One-slit photon modes `c_m` available after re-emission.
    pub outgoing: Vec<(usize, SlitMode)>,
    /// Environment recoil mode excited by the scattering.
    pub recoil: usize,
    /// Slit detector response `eta_s`.
    pub efficiency: Complex64,
}

impl WhichPathSetup {
    /// One two-slit mode, one one-slit mode centred on the slit at `x_s`, one recoil mode.
    pub fn standard(geometry: SlitGeometry, plane: Grid1D, screen: Grid1D, x_s: f64) -> Result<Self> {
        plane.nearest(x_s)?;
        let modes = ModeSet::bosonic(["photon,k=2", "photon,k=1", "recoil"], DEFAULT_BOSON_CUTOFF)?;
        Ok(Self {
            geometry,
            modes,
            incoming: vec![(0, SlitMode::new(&geometry, Slits::Two, &plane, &screen)?)],
            outgoing: vec![(1, SlitMode::new(&geometry, Slits::One { centre: x_s }, &plane, &screen)?)],
            recoil: 2,
            efficiency: ONE,
        })
    }

    /// `a_0^dag |V>`.
    pub fn photon(&self) -> Ket {
        let n = self.incoming[0].0;
        Ket::basis_state(&self.modes, FockState::from_occupations([(n, 1)]))
    }

    pub fn screen_grid(&self) -> Grid1D {
        *self.incoming[0].1.screen.grid()
    }

    fn screen_field(&self, i: usize) -> OpSum {
        field_operator(
            self.incoming
                .iter()
                .chain(&self.outgoing)
                .map(|(n, m)| (*n, m.screen.value(i))),
        )
    }

    /// Detection density `|| Psi(theta_i) |state> ||^2` across the screen.
    pub fn screen_intensity(&self, state: &Ket) -> Result<Vec<f64>> {
        (0..self.screen_grid().points)
            .map(|i| Ok(self.screen_field(i).apply(state)?.norm_sqr()))
            .collect()
    }

    /// Visibility between the central fringe and the first two-slit zero.
    pub fn fringe_visibility(&self, intensity: &[f64]) -> Result<f64> {
        let grid = self.screen_grid();
        let i0 = grid.nearest(0.0)?;
        let i1 = grid.nearest(self.geometry.first_fringe_zero())?;
        Ok(visibility(intensity[i0], intensity[i1]))
    }
}

/// Absorbs the photon at slit position `x_s` and re-emits it into the
/// one-slit modes, leaving the recoil mode excited.
///
/// Components without an incoming photon pass through unchanged.
pub fn compton_channel(state: &Ket, x_s: f64, setup: &WhichPathSetup) -> Result<Ket> {
    if **state.modes() != *setup.modes {
        return Err(Error::ModeSetMismatch);
    }
    let mut scatter = OpSum::zero();
    for (n, inc) in &setup.incoming {
        let f = inc.aperture.value_at(x_s)?;
        for (m, out) in &setup.outgoing {
            let g = out.aperture.value_at(x_s)?;
            scatter.push(OpString::new(
                setup.efficiency * g.conj() * f,
                vec![
                    (setup.recoil, OpKind::Create),
                    (*m, OpKind::Create),
                    (*n, OpKind::Annihilate),
                ],
            ));
        }
    }
    let mut out = scatter.apply(state)?;
    let untouched = state.terms().filter(|(s, _)| {
        setup.incoming.iter().all(|(n, _)| s.occupation(*n) == 0)
    });
    let passthrough = Ket::from_terms(state.modes(), untouched.map(|(s, a)| (s.clone(), *a)))?;
    out.add_scaled(ONE, &passthrough)?;
    Ok(out)
}

/// Norm of the part of `state` with exactly one particle.
pub fn one_particle_weight(state: &Ket) -> f64 {
    state.terms().filter(|(s, _)| s.total() == 1).map(|(_, a)| a.norm_sqr()).sum()
}

/// Exhaustive zero-coincidence sweep: every one-particle basis ket against
/// every ordered detector pair. Returns `(cases, max |amplitude|)`.
pub fn coincidence_sweep(
    modes: &Arc<ModeSet>,
    functions: &ModeFunctions,
    detectors: &[DetectorSpec],
) -> Result<(usize, f64)> {
    let mut cases = 0;
    let mut worst = 0.0_f64;
    let ops: Vec<OpSum> = detectors
        .iter()
        .map(|d| d.operator(functions))
        .collect::<Result<_>>()?;
    for mode in modes.modes() {
        let ket = Ket::basis_state(modes, FockState::from_occupations([(mode.index, 1)]));
        let singles: Vec<Ket> = ops.iter().map(|d| d.apply(&ket)).collect::<Result<_>>()?;
        for after_a in &singles {
            for d_b in &ops {
                let amp = d_b.apply(after_a)?.amplitude(&FockState::vacuum());
                worst = worst.max(amp.norm());
                cases += 1;
            }
        }
    }
    Ok((cases, worst))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn slit_setup() -> (Arc<ModeSet>, ModeFunctions) {
        let geom = SlitGeometry::new(5.0, 1.0, 4.0 * PI, 1e4).unwrap();
        let screen = Grid1D::new(-0.3, 0.3, 61).unwrap();
        let modes = ModeSet::fermionic(["k=2", "k=1"]);
        let f = ModeFunctions::new([
            (0, slit_pattern(&geom, Slits::Two, &screen).unwrap()),
            (1, slit_pattern(&geom, Slits::One { centre: 0.0 }, &screen).unwrap()),
        ])
        .unwrap();
        (modes, f)
    }

    #[test]
    fn detector_reads_mode_function() {
        let (modes, f) = slit_setup();
        let det = DetectorSpec::new(17, [0, 1]).unwrap();
        let k = Ket::basis_state(&modes, FockState::from_occupations([(0, 1)]));
        assert_eq!(detector_amplitude(&det, &f, &k).unwrap(), f.get(0).unwrap().value(17));
        assert_eq!(detector_amplitude(&det, &f, &Ket::vacuum(&modes)).unwrap(), c(0.0));
        let dead = det.uniform(c(0.0)).unwrap();
        assert_eq!(detector_amplitude(&dead, &f, &k).unwrap(), c(0.0));
    }

    #[test]
    fn detector_validation() {
        assert!(DetectorSpec::new(0, []).is_err());
        assert!(DetectorSpec::with_efficiencies(0, [(0, c(1.5))]).is_err());
        let (modes, f) = slit_setup();
        let far = DetectorSpec::new(1000, [0]).unwrap();
        assert!(detector_amplitude(&far, &f, &Ket::vacuum(&modes)).is_err());
    }

    #[test]
    fn no_coincidence_for_one_particle() {
        let (modes, f) = slit_setup();
        let a = DetectorSpec::new(10, [0, 1]).unwrap();
        let b = DetectorSpec::new(40, [0, 1]).unwrap();
        let k = Ket::basis_state(&modes, FockState::from_occupations([(0, 1)]));
        assert_eq!(coincidence_amplitude(&a, &b, &f, &k).unwrap(), c(0.0));
        let two = Ket::basis_state(&modes, FockState::from_occupations([(0, 1), (1, 1)]));
        assert!(coincidence_amplitude(&a, &b, &f, &two).unwrap().norm() > 0.0);
    }

    #[test]
    fn filters_on_one_particle_states() {
        let modes = ModeSet::fermionic(["a+", "a-"]);
        let pair = SpinPair { up: 0, down: 1 };
        let up = Ket::basis_state(&modes, FockState::from_occupations([(0, 1)]));
        let down = Ket::basis_state(&modes, FockState::from_occupations([(1, 1)]));
        let f = FilterSpec::projection(pair);
        let t = FilterSpec::spin_flip(pair);
        assert_eq!(apply_filter(&f, &up).unwrap(), up);
        assert!(apply_filter(&f, &down).unwrap().is_zero());
        assert_eq!(apply_filter(&t, &down).unwrap(), up);
        assert_eq!(apply_filter(&t, &up).unwrap(), down);
    }

    #[test]
    fn singlet_structure() {
        let s = EprState::singlet();
        assert!(s.spin_z_values().iter().all(|&z| z == 0));
        assert!((s.ket.norm_sqr() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn same_axis_table() {
        let s = EprState::singlet();
        let t = epr_coincidence_table(&s, None, &BellConfig::same_axis(0.0)).unwrap();
        assert!((t.get(Spin::Up, Spin::Down) - 0.5).abs() < 1e-12);
        assert!((t.get(Spin::Down, Spin::Up) - 0.5).abs() < 1e-12);
        assert_eq!(t.get(Spin::Up, Spin::Up), 0.0);
        assert_eq!(t.get(Spin::Down, Spin::Down), 0.0);
        assert!((t.correlation() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn filtered_tables() {
        let s = EprState::singlet();
        let cfg = BellConfig::same_axis(0.0);
        let f = FilterSpec::projection(s.arm1);
        let t = epr_coincidence_table(&s, Some(&f), &cfg).unwrap();
        assert!((t.get(Spin::Up, Spin::Down) - 1.0).abs() < 1e-12);
        assert!((t.total() - 1.0).abs() < 1e-12);
        let flip = FilterSpec::spin_flip(s.arm1);
        let t = epr_coincidence_table(&s, Some(&flip), &cfg).unwrap();
        assert_eq!(t.get(Spin::Up, Spin::Down), 0.0);
        assert_eq!(t.get(Spin::Down, Spin::Up), 0.0);
        assert!((t.get(Spin::Up, Spin::Up) - 0.5).abs() < 1e-12);
        assert!((t.get(Spin::Down, Spin::Down) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn chsh_at_canonical_angles() {
        let r = chsh(&EprState::singlet(), &ChshSettings::canonical()).unwrap();
        assert!((r.magnitude() - 2.0 * 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn rotated_filter_is_idempotent_on_one_particle_sector() {
        let modes = ModeSet::fermionic(["a+", "a-"]);
        let pair = SpinPair { up: 0, down: 1 };
        let f = FilterSpec::projection(pair).along(Axis { theta: 0.7, phi: 1.1 });
        let k = Ket::from_terms(
            &modes,
            [
                (FockState::from_occupations([(0, 1)]), Complex64::new(0.6, 0.1)),
                (FockState::from_occupations([(1, 1)]), Complex64::new(-0.2, 0.77)),
            ],
        )
        .unwrap();
        let once = apply_filter(&f, &k).unwrap();
        let twice = apply_filter(&f, &once).unwrap();
        let diff = twice.minus(&once).unwrap();
        assert!(diff.norm_sqr() < 1e-24);
    }

    #[test]
    fn preparation() {
        let modes = ModeSet::fermionic(["a+", "a-"]);
        let pair = SpinPair { up: 0, down: 1 };
        let f = FilterSpec::projection(pair);
        let up = Ket::basis_state(&modes, FockState::from_occupations([(0, 1)]));
        let down = Ket::basis_state(&modes, FockState::from_occupations([(1, 1)]));
        let p = prepare_by_filter(&[up.clone(), down.clone()], &f).unwrap();
        assert_eq!(p.rejected, 1);
        assert_eq!(p.transmitted.len(), 1);
        assert_eq!(p.transmitted[0].ket, up);
        assert_eq!(p.transmitted[0].survival, 1.0);

        let empty = prepare_by_filter(&[], &f).unwrap();
        assert!(empty.transmitted.is_empty() && empty.rejected == 0);

        let sup = up.plus(&down).unwrap().normalized();
        let p = prepare_by_filter(&[sup], &f).unwrap();
        assert!((p.transmitted[0].survival - 0.5).abs() < 1e-15);
        assert!((p.transmitted[0].ket.norm_sqr() - 1.0).abs() < 1e-15);
    }

    fn which_path() -> WhichPathSetup {
        let geom = SlitGeometry::new(5.0, 1.0, 4.0 * PI, 1e4).unwrap();
        let plane = Grid1D::new(-5.0, 5.0, 401).unwrap();
        let screen = Grid1D::new(-0.3, 0.3, 601).unwrap();
        WhichPathSetup::standard(geom, plane, screen, 2.5).unwrap()
    }

    #[test]
    fn compton_channel_bookkeeping() {
        let setup = which_path();
        let out = compton_channel(&setup.photon(), 2.5, &setup).unwrap();
        assert!(out.terms().all(|(s, _)| s.occupation(setup.recoil) == 1));
        let v = Ket::vacuum(&setup.modes);
        assert_eq!(compton_channel(&v, 2.5, &setup).unwrap(), v);
        assert!(matches!(
            compton_channel(&setup.photon(), 9.0, &setup),
            Err(Error::OutsideGrid { .. })
        ));
    }

    #[test]
    fn compton_channel_erases_fringes() {
        let setup = which_path();
        let before = setup.screen_intensity(&setup.photon()).unwrap();
        assert!(setup.fringe_visibility(&before).unwrap() > 0.99);
        let out = compton_channel(&setup.photon(), 2.5, &setup).unwrap();
        let after = setup.screen_intensity(&out).unwrap();
        let one_slit = setup.outgoing[0].1.screen.intensity();
        let v_after = setup.fringe_visibility(&after).unwrap();
        let v_one = setup.fringe_visibility(&one_slit).unwrap();
        assert!((v_after - v_one).abs() < 1e-6);
    }

    #[test]
    fn free_evolution_phases() {
        let s = EprState::singlet();
        let energies: BTreeMap<usize, f64> = [(0, 1.0), (1, 1.0), (2, 2.0), (3, 2.0)].into();
        let out = free_evolution(&s.ket, &energies, 0.5).unwrap();
        for (st, a) in out.terms() {
            let expected = s.ket.amplitude(st) * Complex64::from_polar(1.0, -1.5);
            assert!((a - expected).norm() < 1e-15);
        }
    }
}
