//! Sparse Fock-space algebra.
//!
//! States are occupation patterns over an ordered, finite [`ModeSet`]. Kets are
//! sparse superpositions of such patterns and operators are products of
//! creation/annihilation factors applied right-to-left.
//!
//! Fermionic sign convention: creating or annihilating mode `n` picks up
//! `(-1)^k` where `k` is the number of occupied modes with index strictly
//! smaller than `n`. With this choice `{b_n, b_m^dag} = delta_nm` and
//! `{b_n^dag, b_m^dag} = 0` hold exactly in integer arithmetic.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub use crate::oracle::dense::{dense_oracle, DenseFock};

/// Amplitudes below this magnitude are dropped after every operator application.
pub const PRUNE_THRESHOLD: f64 = 1e-14;

/// Default per-mode occupation cutoff for bosonic modes.
pub const DEFAULT_BOSON_CUTOFF: u32 = 8;

/// Largest basis the enumerating checks will touch.
pub const MAX_BASIS_DIM: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Statistics {
    Fermionic,
    Bosonic,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ModeId {
    pub index: usize,
    pub label: String,
}

impl ModeId {
    pub fn new(index: usize, label: impl Into<String>) -> Self {
        Self {
            index,
            label: label.into(),
        }
    }
}

/// An ordered set of modes sharing one statistics.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModeSet {
    statistics: Statistics,
    modes: Vec<ModeId>,
    cutoff: u32,
}

impl ModeSet {
    pub fn new(statistics: Statistics, mut modes: Vec<ModeId>, cutoff: u32) -> Result<Arc<Self>> {
        modes.sort_by_key(|m| m.index);
        for pair in modes.windows(2) {
            if pair[0].index == pair[1].index {
                return Err(Error::DuplicateMode(pair[0].index));
            }
        }
        if statistics == Statistics::Bosonic && cutoff == 0 {
            return Err(Error::param("bosonic cutoff must be at least 1"));
        }
        let cutoff = match statistics {
            Statistics::Fermionic => 1,
            Statistics::Bosonic => cutoff,
        };
        Ok(Arc::new(Self {
            statistics,
            modes,
            cutoff,
        }))
    }

    /// Fermionic modes with indices `0..labels.len()`.
    pub fn fermionic<I, S>(labels: I) -> Arc<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let modes = labels
            .into_iter()
            .enumerate()
            .map(|(i, l)| ModeId::new(i, l))
            .collect();
        Self::new(Statistics::Fermionic, modes, 1).expect("sequential indices are unique")
    }

    /// Bosonic modes with indices `0..labels.len()` and a shared cutoff.
    pub fn bosonic<I, S>(labels: I, cutoff: u32) -> Result<Arc<Self>>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let modes = labels
            .into_iter()
            .enumerate()
            .map(|(i, l)| ModeId::new(i, l))
            .collect();
        Self::new(Statistics::Bosonic, modes, cutoff)
    }

    pub fn statistics(&self) -> Statistics {
        self.statistics
    }

    pub fn modes(&self) -> &[ModeId] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// Maximum occupation per mode (1 for fermions).
    pub fn cutoff(&self) -> u32 {
        self.cutoff
    }

    /// Position of a mode index within the ordered set.
    pub fn position(&self, index: usize) -> Option<usize> {
        self.modes.binary_search_by_key(&index, |m| m.index).ok()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.position(index).is_some()
    }

    pub fn index_of_label(&self, label: &str) -> Option<usize> {
        self.modes.iter().find(|m| m.label == label).map(|m| m.index)
    }

    pub fn label(&self, index: usize) -> Option<&str> {
        self.position(index).map(|p| self.modes[p].label.as_str())
    }

    fn check(&self, index: usize) -> Result<()> {
        if self.contains(index) {
            Ok(())
        } else {
            Err(Error::UnknownMode(index))
        }
    }

    /// Number of basis states, `(cutoff + 1)^len`, without overflow.
    pub fn basis_dimension(&self) -> u128 {
        let radix = self.cutoff as u128 + 1;
        let mut dim: u128 = 1;
        for _ in 0..self.modes.len() {
            dim = dim.saturating_mul(radix);
        }
        dim
    }

    /// Enumerates every occupation pattern, fails beyond [`MAX_BASIS_DIM`].
    ///
    /// Ordering is mixed-radix with the lowest-index mode as least significant
    /// digit, which for fermions is the usual bit-string order.
    pub fn basis(&self) -> Result<Vec<FockState>> {
        let dim = self.basis_dimension();
        if dim > MAX_BASIS_DIM as u128 {
            return Err(Error::BasisTooLarge {
                dimension: dim,
                limit: MAX_BASIS_DIM,
            });
        }
        let radix = self.cutoff as usize + 1;
        let states = (0..dim as usize)
            .map(|mut code| {
                let mut occ = BTreeMap::new();
                for mode in &self.modes {
                    let n = (code % radix) as u32;
                    code /= radix;
                    if n > 0 {
                        occ.insert(mode.index, n);
                    }
                }
                FockState { occ }
            })
            .collect();
        Ok(states)
    }
}

/// Canonical occupation pattern: only non-zero counts are stored.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FockState {
    occ: BTreeMap<usize, u32>,
}

impl FockState {
    pub fn vacuum() -> Self {
        Self::default()
    }

    /// Builds a state from `(mode index, count)` pairs, dropping zero counts.
    pub fn from_occupations(pairs: impl IntoIterator<Item = (usize, u32)>) -> Self {
        let occ = pairs.into_iter().filter(|&(_, n)| n > 0).collect();
        Self { occ }
    }

    pub fn occupation(&self, mode: usize) -> u32 {
        self.occ.get(&mode).copied().unwrap_or(0)
    }

    pub fn occupations(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.occ.iter().map(|(&m, &n)| (m, n))
    }

    pub fn total(&self) -> u32 {
        self.occ.values().sum()
    }

    pub fn is_vacuum(&self) -> bool {
        self.occ.is_empty()
    }

    fn occupied_below(&self, mode: usize) -> u32 {
        self.occ.range(..mode).map(|(_, &n)| n).sum()
    }

    fn with_count(&self, mode: usize, n: u32) -> Self {
        let mut occ = self.occ.clone();
        if n == 0 {
            occ.remove(&mode);
        } else {
            occ.insert(mode, n);
        }
        Self { occ }
    }
}

impl fmt::Display for FockState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.occ.is_empty() {
            return write!(f, "|V>");
        }
        write!(f, "|")?;
        for (i, (m, n)) in self.occ.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            if *n == 1 {
                write!(f, "{m}")?;
            } else {
                write!(f, "{m}^{n}")?;
            }
        }
        write!(f, ">")
    }
}

/// `b_mode^dag |state>`; `None` when the result vanishes.
pub fn apply_create(
    modes: &ModeSet,
    mode: usize,
    state: &FockState,
) -> Result<Option<(f64, FockState)>> {
    modes.check(mode)?;
    let n = state.occupation(mode);
    match modes.statistics {
        Statistics::Fermionic => {
            if n > 0 {
                return Ok(None);
            }
            let sign = if state.occupied_below(mode) % 2 == 0 { 1.0 } else { -1.0 };
            Ok(Some((sign, state.with_count(mode, 1))))
        }
        Statistics::Bosonic => {
            if n + 1 > modes.cutoff {
                return Err(Error::CutoffOverflow {
                    mode,
                    cutoff: modes.cutoff,
                });
            }
            Ok(Some((((n + 1) as f64).sqrt(), state.with_count(mode, n + 1))))
        }
    }
}

/// `b_mode |state>`; `None` when the result vanishes.
pub fn apply_annihilate(
    modes: &ModeSet,
    mode: usize,
    state: &FockState,
) -> Result<Option<(f64, FockState)>> {
    modes.check(mode)?;
    let n = state.occupation(mode);
    if n == 0 {
        return Ok(None);
    }
    match modes.statistics {
        Statistics::Fermionic => {
            let sign = if state.occupied_below(mode) % 2 == 0 { 1.0 } else { -1.0 };
            Ok(Some((sign, state.with_count(mode, 0))))
        }
        Statistics::Bosonic => Ok(Some(((n as f64).sqrt(), state.with_count(mode, n - 1)))),
    }
}

/// Sparse superposition of Fock states over one mode set.
#[derive(Clone, Debug)]
pub struct Ket {
    modes: Arc<ModeSet>,
    terms: BTreeMap<FockState, Complex64>,
}

impl PartialEq for Ket {
    fn eq(&self, other: &Self) -> bool {
        same_modes(&self.modes, &other.modes) && self.terms == other.terms
    }
}

fn same_modes(a: &Arc<ModeSet>, b: &Arc<ModeSet>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

impl Ket {
    pub fn zero(modes: &Arc<ModeSet>) -> Self {
        Self {
            modes: Arc::clone(modes),
            terms: BTreeMap::new(),
        }
    }

    pub fn vacuum(modes: &Arc<ModeSet>) -> Self {
        Self::basis_state(modes, FockState::vacuum())
    }

    pub fn basis_state(modes: &Arc<ModeSet>, state: FockState) -> Self {
        let mut ket = Self::zero(modes);
        ket.terms.insert(state, Complex64::new(1.0, 0.0));
        ket
    }

    /// Builds a ket from explicit terms; every mode must belong to `modes`.
    pub fn from_terms(
        modes: &Arc<ModeSet>,
        terms: impl IntoIterator<Item = (FockState, Complex64)>,
    ) -> Result<Self> {
        let mut ket = Self::zero(modes);
        for (state, amp) in terms {
            for (m, n) in state.occupations() {
                modes.check(m)?;
                if n > modes.cutoff {
                    return Err(Error::CutoffOverflow {
                        mode: m,
                        cutoff: modes.cutoff,
                    });
                }
            }
            *ket.terms.entry(state).or_default() += amp;
        }
        ket.prune();
        Ok(ket)
    }

    pub fn modes(&self) -> &Arc<ModeSet> {
        &self.modes
    }

    pub fn terms(&self) -> impl Iterator<Item = (&FockState, &Complex64)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn amplitude(&self, state: &FockState) -> Complex64 {
        self.terms.get(state).copied().unwrap_or_default()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.terms.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        let mut out = self.clone();
        for amp in out.terms.values_mut() {
            *amp *= factor;
        }
        out.prune();
        out
    }

    /// Unit-norm copy; the zero ket is returned unchanged.
    pub fn normalized(&self) -> Self {
        let n = self.norm_sqr().sqrt();
        if n == 0.0 {
            return self.clone();
        }
        self.scaled(Complex64::new(1.0 / n, 0.0))
    }

    /// `self += factor * other`.
    pub fn add_scaled(&mut self, factor: Complex64, other: &Ket) -> Result<()> {
        if !same_modes(&self.modes, &other.modes) {
            return Err(Error::ModeSetMismatch);
        }
        for (s, a) in &other.terms {
            *self.terms.entry(s.clone()).or_default() += factor * a;
        }
        self.prune();
        Ok(())
    }

    pub fn plus(&self, other: &Ket) -> Result<Ket> {
        let mut out = self.clone();
        out.add_scaled(Complex64::new(1.0, 0.0), other)?;
        Ok(out)
    }

    pub fn minus(&self, other: &Ket) -> Result<Ket> {
        let mut out = self.clone();
        out.add_scaled(Complex64::new(-1.0, 0.0), other)?;
        Ok(out)
    }

    /// Total particle-number distribution: every term must share one count.
    pub fn particle_number(&self) -> Option<u32> {
        let mut counts = self.terms.keys().map(FockState::total);
        let first = counts.next()?;
        counts.all(|c| c == first).then_some(first)
    }

    pub fn apply(&self, op: &OpSum) -> Result<Ket> {
        op.apply(self)
    }

    fn prune(&mut self) {
        self.terms.retain(|_, a| a.norm() >= PRUNE_THRESHOLD);
    }
}

impl fmt::Display for Ket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (s, a)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({:.6}{:+.6}i){}", a.re, a.im, s)?;
        }
        Ok(())
    }
}

/// `<bra|ket>`, conjugate-linear in `bra`.
pub fn inner(bra: &Ket, ket: &Ket) -> Result<Complex64> {
    if !same_modes(&bra.modes, &ket.modes) {
        return Err(Error::ModeSetMismatch);
    }
    let (small, large, conj_small) = if bra.terms.len() <= ket.terms.len() {
        (bra, ket, true)
    } else {
        (ket, bra, false)
    };
    let mut acc = Complex64::default();
    for (s, a) in &small.terms {
        if let Some(b) = large.terms.get(s) {
            acc += if conj_small { a.conj() * b } else { b.conj() * a };
        }
    }
    Ok(acc)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OpKind {
    Create,
    Annihilate,
}

impl OpKind {
    fn dagger(self) -> Self {
        match self {
            OpKind::Create => OpKind::Annihilate,
            OpKind::Annihilate => OpKind::Create,
        }
    }
}

/// Product `scalar * f_1 f_2 ... f_k`; `f_k` acts first.
#[derive(Clone, Debug, PartialEq)]
pub struct OpString {
    pub factors: Vec<(usize, OpKind)>,
    pub scalar: Complex64,
}

impl Default for OpString {
    fn default() -> Self {
        Self::identity()
    }
}

impl OpString {
    pub fn identity() -> Self {
        Self {
            factors: Vec::new(),
            scalar: Complex64::new(1.0, 0.0),
        }
    }

    pub fn new(scalar: Complex64, factors: Vec<(usize, OpKind)>) -> Self {
        Self { factors, scalar }
    }

    pub fn create(mode: usize) -> Self {
        Self::new(Complex64::new(1.0, 0.0), vec![(mode, OpKind::Create)])
    }

    pub fn annihilate(mode: usize) -> Self {
        Self::new(Complex64::new(1.0, 0.0), vec![(mode, OpKind::Annihilate)])
    }

    /// `b^dag b` on one mode.
    pub fn number(mode: usize) -> Self {
        Self::new(
            Complex64::new(1.0, 0.0),
            vec![(mode, OpKind::Create), (mode, OpKind::Annihilate)],
        )
    }

    pub fn scaled(mut self, factor: Complex64) -> Self {
        self.scalar *= factor;
        self
    }

    /// Operator product `self * rhs`.
    pub fn times(&self, rhs: &OpString) -> OpString {
        let mut factors = self.factors.clone();
        factors.extend_from_slice(&rhs.factors);
        OpString::new(self.scalar * rhs.scalar, factors)
    }

    pub fn adjoint(&self) -> OpString {
        let factors = self
            .factors
            .iter()
            .rev()
            .map(|&(m, k)| (m, k.dagger()))
            .collect();
        OpString::new(self.scalar.conj(), factors)
    }

    fn apply_to_state(
        &self,
        modes: &ModeSet,
        state: &FockState,
    ) -> Result<Option<(Complex64, FockState)>> {
        let mut factor = self.scalar;
        let mut current = state.clone();
        for &(mode, kind) in self.factors.iter().rev() {
            let step = match kind {
                OpKind::Create => apply_create(modes, mode, &current)?,
                OpKind::Annihilate => apply_annihilate(modes, mode, &current)?,
            };
            match step {
                Some((f, next)) => {
                    factor *= f;
                    current = next;
                }
                None => return Ok(None),
            }
        }
        Ok(Some((factor, current)))
    }

    pub fn apply(&self, ket: &Ket) -> Result<Ket> {
        apply_opstring(self, ket)
    }
}

/// Applies an operator string to a ket, right-to-left.
pub fn apply_opstring(op: &OpString, ket: &Ket) -> Result<Ket> {
    let mut out = Ket::zero(&ket.modes);
    accumulate(op, ket, &mut out)?;
    out.prune();
    Ok(out)
}

fn accumulate(op: &OpString, ket: &Ket, out: &mut Ket) -> Result<()> {
    for &(mode, _) in &op.factors {
        ket.modes.check(mode)?;
    }
    for (state, amp) in &ket.terms {
        if let Some((f, next)) = op.apply_to_state(&ket.modes, state)? {
            *out.terms.entry(next).or_default() += f * amp;
        }
    }
    Ok(())
}

/// Linear combination of operator strings.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct OpSum {
    pub terms: Vec<OpString>,
}

impl From<OpString> for OpSum {
    fn from(op: OpString) -> Self {
        Self { terms: vec![op] }
    }
}

impl FromIterator<OpString> for OpSum {
    fn from_iter<I: IntoIterator<Item = OpString>>(iter: I) -> Self {
        Self {
            terms: iter.into_iter().collect(),
        }
    }
}

impl OpSum {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn identity() -> Self {
        OpString::identity().into()
    }

    pub fn push(&mut self, op: OpString) {
        self.terms.push(op);
    }

    pub fn plus(&self, other: &OpSum) -> OpSum {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        OpSum { terms }
    }

    pub fn scaled(&self, factor: Complex64) -> OpSum {
        self.terms.iter().map(|t| t.clone().scaled(factor)).collect()
    }

    /// Distributive product `self * rhs`.
    pub fn times(&self, rhs: &OpSum) -> OpSum {
        self.terms
            .iter()
            .flat_map(|a| rhs.terms.iter().map(move |b| a.times(b)))
            .collect()
    }

    pub fn adjoint(&self) -> OpSum {
        self.terms.iter().map(OpString::adjoint).collect()
    }

    /// `{A, B} = AB + BA`.
    pub fn anticommutator(a: &OpSum, b: &OpSum) -> OpSum {
        a.times(b).plus(&b.times(a))
    }

    pub fn apply(&self, ket: &Ket) -> Result<Ket> {
        let mut out = Ket::zero(&ket.modes);
        for term in &self.terms {
            accumulate(term, ket, &mut out)?;
        }
        out.prune();
        Ok(out)
    }

    pub fn modes_used(&self) -> impl Iterator<Item = usize> + '_ {
        self.terms.iter().flat_map(|t| t.factors.iter().map(|&(m, _)| m))
    }
}

/// Field operator `Psi = sum_n psi_n b_n` at one space-time point.
pub fn field_operator(values: impl IntoIterator<Item = (usize, Complex64)>) -> OpSum {
    values
        .into_iter()
        .map(|(mode, psi)| OpString::annihilate(mode).scaled(psi))
        .collect()
}

/// `<V| Psi |state>` for a pure annihilation field.
///
/// Evaluated by direct contraction so that `interrogate(Psi, b_n^dag|V>)`
/// returns the stored mode value exactly, with no pruning in between.
pub fn interrogate(field: &OpSum, state: &Ket) -> Result<Complex64> {
    for term in &field.terms {
        if term.factors.len() != 1 || term.factors[0].1 != OpKind::Annihilate {
            return Err(Error::param(
                "interrogation field must be a sum of single annihilation operators",
            ));
        }
        state.modes.check(term.factors[0].0)?;
    }
    let mut acc = Complex64::default();
    for (s, amp) in &state.terms {
        if s.total() != 1 {
            continue;
        }
        for term in &field.terms {
            if let Some((f, rest)) = term.apply_to_state(&state.modes, s)? {
                if rest.is_vacuum() {
                    acc += f * amp;
                }
            }
        }
    }
    Ok(acc)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Anticommutator {
    /// `{b_a, b_b^dag}`, expected `delta_ab`.
    AnnihilateCreate,
    /// `{b_a^dag, b_b^dag}`, expected 0.
    CreateCreate,
    /// `{b_a, b_b}`, expected 0.
    AnnihilateAnnihilate,
}

/// Largest fermionic mode set the anticommutator check will enumerate.
pub const MAX_CHECK_MODES: usize = 12;

/// Evaluates an anticommutator on every basis state and returns the largest
/// deviation from its canonical value.
pub fn anticommutator_check(
    modes: &Arc<ModeSet>,
    a: usize,
    b: usize,
    kind: Anticommutator,
) -> Result<f64> {
    if modes.statistics() != Statistics::Fermionic {
        return Err(Error::param("anticommutator check needs fermionic modes"));
    }
    if modes.len() > MAX_CHECK_MODES {
        return Err(Error::BasisTooLarge {
            dimension: modes.basis_dimension(),
            limit: 1 << MAX_CHECK_MODES,
        });
    }
    modes.check(a)?;
    modes.check(b)?;
    let (x, y) = match kind {
        Anticommutator::AnnihilateCreate => (OpString::annihilate(a), OpString::create(b)),
        Anticommutator::CreateCreate => (OpString::create(a), OpString::create(b)),
        Anticommutator::AnnihilateAnnihilate => {
            (OpString::annihilate(a), OpString::annihilate(b))
        }
    };
    let expected = if kind == Anticommutator::AnnihilateCreate && a == b {
        1.0
    } else {
        0.0
    };
    let anti = OpSum::anticommutator(&x.into(), &y.into());
    let mut worst = 0.0_f64;
    for state in modes.basis()? {
        let ket = Ket::basis_state(modes, state.clone());
        let out = anti.apply(&ket)?;
        let diag = (out.amplitude(&state) - expected).norm();
        let off = out
            .terms()
            .filter(|(s, _)| **s != state)
            .map(|(_, a)| a.norm())
            .fold(0.0, f64::max);
        worst = worst.max(diag).max(off);
    }
    Ok(worst)
}
