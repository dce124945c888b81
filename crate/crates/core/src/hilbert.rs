//! Excitation-number-truncated Hilbert space for `N` two-level atoms.
//!
//! Basis states are subsets of excited sites with at most `n_max` excitations,
//! ordered by excitation number and then lexicographically by site list. This
//! makes every fixed-excitation sector a contiguous index range, so
//! number-conserving operators are block diagonal.
//!
//! Site indices run from 1 to `N`; the atom at site `m` sits at `z_m = m·d`.

use std::collections::HashMap;
use std::sync::Arc;

use ndarray::prelude::*;

use crate::error::{Error, Result};
use crate::C64;

/// Geometry of the regular 1D array.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    /// Number of atoms `N`.
    pub n_atoms: usize,
    /// Dimensionless product `k0·d` of resonance wavenumber and spacing.
    pub kd: f64,
    /// Unit vector of all transition dipoles.
    pub dipole: [f64; 3],
}

impl ArrayGeometry {
    pub fn new(n_atoms: usize, kd: f64, dipole: [f64; 3]) -> Result<Self> {
        if n_atoms < 1 {
            return Err(Error::InvalidArgument("n_atoms must be >= 1".into()));
        }
        if !(kd > 0.0) {
            return Err(Error::InvalidArgument(format!("kd must be > 0, got {kd}")));
        }
        let norm = (dipole[0].powi(2) + dipole[1].powi(2) + dipole[2].powi(2)).sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "dipole must be a unit vector, |d| = {norm}"
            )));
        }
        Ok(Self { n_atoms, kd, dipole })
    }

    /// Array with the transition dipoles parallel to the array axis (z).
    pub fn parallel_dipoles(n_atoms: usize, kd: f64) -> Result<Self> {
        Self::new(n_atoms, kd, [0.0, 0.0, 1.0])
    }

    /// Coordinate of site `m` (1-based) in units of `d`.
    #[inline]
    pub fn z(&self, site: usize) -> f64 {
        site as f64
    }
}

/// A basis state: the set of excited sites, stored as a bit mask.
///
/// Bit `m-1` is set iff site `m` is excited. Supports arrays up to 64 sites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BasisState(pub u64);

impl BasisState {
    pub const GROUND: BasisState = BasisState(0);

    /// Build from a strictly increasing list of 1-based site indices.
    pub fn from_sites(sites: &[usize]) -> Result<Self> {
        let mut mask = 0u64;
        let mut prev = 0;
        for &s in sites {
            if s == 0 || s > 64 {
                return Err(Error::InvalidArgument(format!("site {s} out of range")));
            }
            if s <= prev {
                return Err(Error::InvalidArgument(
                    "site list must be strictly increasing".into(),
                ));
            }
            mask |= 1u64 << (s - 1);
            prev = s;
        }
        Ok(BasisState(mask))
    }

    /// Excited sites in increasing order (1-based).
    pub fn sites(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.n_excited());
        let mut m = self.0;
        while m != 0 {
            let b = m.trailing_zeros() as usize;
            out.push(b + 1);
            m &= m - 1;
        }
        out
    }

    #[inline]
    pub fn n_excited(&self) -> usize {
        self.0.count_ones() as usize
    }

    #[inline]
    pub fn contains(&self, site: usize) -> bool {
        self.0 >> (site - 1) & 1 == 1
    }

    #[inline]
    pub fn without(&self, site: usize) -> BasisState {
        BasisState(self.0 & !(1u64 << (site - 1)))
    }

    #[inline]
    pub fn with(&self, site: usize) -> BasisState {
        BasisState(self.0 | 1u64 << (site - 1))
    }
}

/// Ordered basis of all excitation subsets with `n_e <= n_max`.
#[derive(Debug)]
pub struct ExcitationBasis {
    pub geometry: ArrayGeometry,
    pub n_max: usize,
    states: Vec<BasisState>,
    index: HashMap<u64, usize>,
    /// `sector_offsets[n]..sector_offsets[n+1]` is the index range of the
    /// `n`-excitation sector; length `n_max + 2`.
    sector_offsets: Vec<usize>,
}

/// Enumerate `n`-subsets of `1..=n_sites` in lexicographic order of site lists.
fn enumerate_sector(n_sites: usize, n: usize, out: &mut Vec<BasisState>) {
    let mut comb: Vec<usize> = (1..=n).collect();
    if n == 0 {
        out.push(BasisState::GROUND);
        return;
    }
    if n > n_sites {
        return;
    }
    loop {
        out.push(BasisState::from_sites(&comb).expect("valid combination"));
        // next combination in lexicographic order
        let mut i = n;
        while i > 0 && comb[i - 1] == n_sites - (n - i) {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        comb[i - 1] += 1;
        for j in i..n {
            comb[j] = comb[j - 1] + 1;
        }
    }
}

impl ExcitationBasis {
    /// Build the canonical basis with excitation truncation `n_max`.
    pub fn build(geometry: ArrayGeometry, n_max: usize) -> Result<Arc<Self>> {
        let n_sites = geometry.n_atoms;
        if n_max > n_sites {
            return Err(Error::InvalidArgument(format!(
                "n_max = {n_max} exceeds N = {n_sites}"
            )));
        }
        if n_sites > 64 {
            return Err(Error::InvalidArgument("at most 64 sites supported".into()));
        }
        let mut states = Vec::new();
        let mut sector_offsets = Vec::with_capacity(n_max + 2);
        for n in 0..=n_max {
            sector_offsets.push(states.len());
            enumerate_sector(n_sites, n, &mut states);
        }
        sector_offsets.push(states.len());
        let index = states.iter().enumerate().map(|(i, s)| (s.0, i)).collect();
        Ok(Arc::new(Self { geometry, n_max, states, index, sector_offsets }))
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.states.len()
    }

    #[inline]
    pub fn n_atoms(&self) -> usize {
        self.geometry.n_atoms
    }

    #[inline]
    pub fn state(&self, i: usize) -> BasisState {
        self.states[i]
    }

    pub fn states(&self) -> &[BasisState] {
        &self.states
    }

    /// Dense index of a basis state, if within the truncation.
    #[inline]
    pub fn index_of(&self, s: BasisState) -> Option<usize> {
        self.index.get(&s.0).copied()
    }

    /// Index range of the `n`-excitation sector.
    pub fn sector_range(&self, n: usize) -> std::ops::Range<usize> {
        assert!(n <= self.n_max, "sector {n} beyond truncation {}", self.n_max);
        self.sector_offsets[n]..self.sector_offsets[n + 1]
    }

    /// Number of states in the `n`-excitation sector.
    pub fn sector_size(&self, n: usize) -> usize {
        let r = self.sector_range(n);
        r.end - r.start
    }

    /// Same geometry and truncation (operators/states interoperate).
    pub fn compatible(&self, other: &ExcitationBasis) -> bool {
        self.geometry == other.geometry && self.n_max == other.n_max
    }

    /// Zero state vector over this basis.
    pub fn zero_vector(self: &Arc<Self>) -> StateVector {
        StateVector {
            basis: Arc::clone(self),
            amplitudes: Array1::zeros(self.size()),
            normalized: false,
        }
    }

    /// The atomic ground state `|G>`.
    pub fn ground_state(self: &Arc<Self>) -> StateVector {
        let mut v = self.zero_vector();
        v.amplitudes[0] = C64::new(1.0, 0.0);
        v.normalized = true;
        v
    }
}

/// Complex amplitude vector over an [`ExcitationBasis`].
#[derive(Debug, Clone)]
pub struct StateVector {
    pub basis: Arc<ExcitationBasis>,
    pub amplitudes: Array1<C64>,
    pub normalized: bool,
}

impl StateVector {
    pub fn from_amplitudes(basis: Arc<ExcitationBasis>, amplitudes: Array1<C64>) -> Result<Self> {
        if amplitudes.len() != basis.size() {
            return Err(Error::InvalidArgument(format!(
                "amplitude length {} does not match basis size {}",
                amplitudes.len(),
                basis.size()
            )));
        }
        if amplitudes.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::InvalidArgument("non-finite amplitude".into()));
        }
        Ok(Self { basis, amplitudes, normalized: false })
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Rescale to unit norm and set the normalized flag.
    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm();
        if n < 1e-300 {
            return Err(Error::Precision("cannot normalize zero vector".into()));
        }
        self.amplitudes.mapv_inplace(|a| a / n);
        self.normalized = true;
        Ok(())
    }

    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if !self.basis.compatible(&other.basis) {
            return Err(Error::BasisMismatch("inner product".into()));
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Amplitudes of the `n`-excitation sector (contiguous slice).
    pub fn sector(&self, n: usize) -> ArrayView1<'_, C64> {
        self.amplitudes.slice(s![self.basis.sector_range(n)])
    }

    /// Project onto the `n`-excitation sector and renormalize.
    pub fn sector_component(&self, n: usize) -> Result<StateVector> {
        let mut v = self.basis.zero_vector();
        let r = self.basis.sector_range(n);
        v.amplitudes
            .slice_mut(s![r.clone()])
            .assign(&self.amplitudes.slice(s![r]));
        v.normalize().map_err(|_| {
            Error::UndefinedFidelity(format!("zero-norm component in sector {n}"))
        })?;
        Ok(v)
    }

    /// Mean excitation number `<N_e>` (state need not be normalized).
    pub fn mean_excitation(&self) -> f64 {
        let n2 = self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>();
        if n2 == 0.0 {
            return 0.0;
        }
        let mut acc = 0.0;
        for n in 0..=self.basis.n_max {
            let w: f64 = self.sector(n).iter().map(|a| a.norm_sqr()).sum();
            acc += n as f64 * w;
        }
        acc / n2
    }
}

enum Storage {
    Dense(Array2<C64>),
    /// COO triplets (row, col, value); at most one entry per (row, col).
    Sparse(Vec<(usize, usize, C64)>),
}

/// Linear operator over an [`ExcitationBasis`].
pub struct OperatorMatrix {
    pub basis: Arc<ExcitationBasis>,
    storage: Storage,
}

impl OperatorMatrix {
    pub fn dense(basis: Arc<ExcitationBasis>, m: Array2<C64>) -> Result<Self> {
        if m.nrows() != basis.size() || m.ncols() != basis.size() {
            return Err(Error::InvalidArgument("matrix dimension mismatch".into()));
        }
        if m.iter().any(|a| a.re.is_nan() || a.im.is_nan()) {
            return Err(Error::InvalidArgument("NaN entry in operator".into()));
        }
        Ok(Self { basis, storage: Storage::Dense(m) })
    }

    pub fn sparse(basis: Arc<ExcitationBasis>, triplets: Vec<(usize, usize, C64)>) -> Self {
        Self { basis, storage: Storage::Sparse(triplets) }
    }

    pub fn identity(basis: Arc<ExcitationBasis>) -> Self {
        let n = basis.size();
        let one = C64::new(1.0, 0.0);
        Self::sparse(basis, (0..n).map(|i| (i, i, one)).collect())
    }

    pub fn apply(&self, v: &StateVector) -> Result<StateVector> {
        if !self.basis.compatible(&v.basis) {
            return Err(Error::BasisMismatch("operator application".into()));
        }
        let amplitudes = match &self.storage {
            Storage::Dense(m) => m.dot(&v.amplitudes),
            Storage::Sparse(t) => {
                let mut out = Array1::zeros(v.amplitudes.len());
                for &(r, c, val) in t {
                    out[r] += val * v.amplitudes[c];
                }
                out
            }
        };
        Ok(StateVector { basis: Arc::clone(&v.basis), amplitudes, normalized: false })
    }

    pub fn to_dense(&self) -> Array2<C64> {
        match &self.storage {
            Storage::Dense(m) => m.clone(),
            Storage::Sparse(t) => {
                let n = self.basis.size();
                let mut m = Array2::zeros((n, n));
                for &(r, c, v) in t {
                    m[[r, c]] += v;
                }
                m
            }
        }
    }

    pub fn dagger(&self) -> Self {
        let storage = match &self.storage {
            Storage::Dense(m) => Storage::Dense(m.t().mapv(|a| a.conj())),
            Storage::Sparse(t) => {
                Storage::Sparse(t.iter().map(|&(r, c, v)| (c, r, v.conj())).collect())
            }
        };
        Self { basis: Arc::clone(&self.basis), storage }
    }

    /// Dense product `self · rhs`.
    pub fn matmul(&self, rhs: &OperatorMatrix) -> Result<OperatorMatrix> {
        if !self.basis.compatible(&rhs.basis) {
            return Err(Error::BasisMismatch("operator product".into()));
        }
        let m = self.to_dense().dot(&rhs.to_dense());
        OperatorMatrix::dense(Arc::clone(&self.basis), m)
    }
}

/// Lowering operator `σ_site` within the truncated space.
///
/// Maps each basis state containing `site` to the state with `site` removed,
/// amplitude +1; annihilates states not containing `site`. The position-ordered
/// basis carries no fermionic sign.
pub fn lowering_op(basis: &Arc<ExcitationBasis>, site: usize) -> Result<OperatorMatrix> {
    if site == 0 || site > basis.n_atoms() {
        return Err(Error::InvalidArgument(format!("site {site} out of 1..={}", basis.n_atoms())));
    }
    let one = C64::new(1.0, 0.0);
    let mut triplets = Vec::new();
    for (i, s) in basis.states().iter().enumerate() {
        if s.contains(site) {
            let target = basis.index_of(s.without(site)).expect("lowered state in basis");
            triplets.push((target, i, one));
        }
    }
    Ok(OperatorMatrix::sparse(Arc::clone(basis), triplets))
}

/// Spin-wave lowering operator `σ_k = (1/√N) Σ_m e^{-ik z_m} σ_m`.
///
/// `k_d` is the wavenumber in units of `1/d` (interpreted modulo 2π).
pub fn spin_wave_op(basis: &Arc<ExcitationBasis>, k_d: f64) -> OperatorMatrix {
    let n = basis.n_atoms();
    let coeffs: Vec<C64> = (1..=n)
        .map(|m| C64::from_polar(1.0 / (n as f64).sqrt(), -k_d * basis.geometry.z(m)))
        .collect();
    let mut triplets = Vec::new();
    for (i, s) in basis.states().iter().enumerate() {
        for m in s.sites() {
            let target = basis.index_of(s.without(m)).expect("lowered state in basis");
            triplets.push((target, i, coeffs[m - 1]));
        }
    }
    OperatorMatrix::sparse(Arc::clone(basis), triplets)
}

/// Apply the number-conserving one-body operator `Σ_{m,n} K[m-1][n-1] σ_m† σ_n`
/// directly from its `N×N` coupling kernel.
pub fn apply_one_body(
    basis: &ExcitationBasis,
    kernel: &ArrayView2<C64>,
    v: &ArrayView1<C64>,
    out: &mut Array1<C64>,
) {
    out.fill(C64::new(0.0, 0.0));
    let n_sites = basis.n_atoms();
    for (i, s) in basis.states().iter().enumerate() {
        let a = v[i];
        if a == C64::new(0.0, 0.0) {
            continue;
        }
        let sites = s.sites();
        for &src in &sites {
            // diagonal term m = n
            out[i] += kernel[[src - 1, src - 1]] * a;
            // hop src -> dst for every empty dst
            let removed = s.without(src);
            for dst in 1..=n_sites {
                if dst != src && !s.contains(dst) {
                    let j = basis.index_of(removed.with(dst)).expect("hopped state");
                    out[j] += kernel[[dst - 1, src - 1]] * a;
                }
            }
        }
    }
}

/// Dense matrix of a one-body operator restricted to the `n_e` sector,
/// indexed relative to the sector offset.
pub fn one_body_sector_matrix(
    basis: &ExcitationBasis,
    kernel: &ArrayView2<C64>,
    n_e: usize,
) -> Array2<C64> {
    let range = basis.sector_range(n_e);
    let offset = range.start;
    let dim = range.end - range.start;
    let n_sites = basis.n_atoms();
    let mut m = Array2::zeros((dim, dim));
    for i in range.clone() {
        let s = basis.state(i);
        let sites = s.sites();
        for &src in &sites {
            m[[i - offset, i - offset]] += kernel[[src - 1, src - 1]];
            let removed = s.without(src);
            for dst in 1..=n_sites {
                if dst != src && !s.contains(dst) {
                    let j = basis.index_of(removed.with(dst)).expect("hopped state");
                    m[[j - offset, i - offset]] += kernel[[dst - 1, src - 1]];
                }
            }
        }
    }
    m
}

/// Block-diagonal dense matrix of a one-body operator on the whole basis.
pub fn one_body_full_matrix(basis: &ExcitationBasis, kernel: &ArrayView2<C64>) -> Array2<C64> {
    let size = basis.size();
    let mut m = Array2::zeros((size, size));
    for n in 0..=basis.n_max {
        let range = basis.sector_range(n);
        let block = one_body_sector_matrix(basis, kernel, n);
        m.slice_mut(s![range.clone(), range]).assign(&block);
    }
    m
}

/// Apply the collective lowering `Σ_j c_j σ_j`.
pub fn apply_collective_lowering(
    basis: &ExcitationBasis,
    coeffs: &[C64],
    v: &ArrayView1<C64>,
    out: &mut Array1<C64>,
) {
    out.fill(C64::new(0.0, 0.0));
    for (i, s) in basis.states().iter().enumerate() {
        let a = v[i];
        if a == C64::new(0.0, 0.0) {
            continue;
        }
        for m in s.sites() {
            let j = basis.index_of(s.without(m)).expect("lowered state");
            out[j] += coeffs[m - 1] * a;
        }
    }
}

/// Apply the collective raising `Σ_j c_j σ_j†`, projecting out components that
/// would exceed the truncation. Returns the squared norm of the projected-out
/// part so truncation error stays observable.
pub fn apply_collective_raising(
    basis: &ExcitationBasis,
    coeffs: &[C64],
    v: &ArrayView1<C64>,
    out: &mut Array1<C64>,
) -> f64 {
    out.fill(C64::new(0.0, 0.0));
    let mut leaked = 0.0;
    let top = basis.sector_range(basis.n_max);
    for (i, s) in basis.states().iter().enumerate() {
        let a = v[i];
        if a == C64::new(0.0, 0.0) {
            continue;
        }
        if top.contains(&i) {
            // every raising out of the top sector is projected out
            let w: f64 = (1..=basis.n_atoms())
                .filter(|&m| !s.contains(m))
                .map(|m| coeffs[m - 1].norm_sqr())
                .sum();
            leaked += w * a.norm_sqr();
            continue;
        }
        for m in 1..=basis.n_atoms() {
            if !s.contains(m) {
                let j = basis.index_of(s.with(m)).expect("raised state");
                out[j] += coeffs[m - 1] * a;
            }
        }
    }
    leaked
}

/// Diagonal of the excitation-number operator `N_e`.
pub fn excitation_number_diagonal(basis: &ExcitationBasis) -> Array1<f64> {
    basis.states().iter().map(|s| s.n_excited() as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn basis(n: usize, kd: f64, n_max: usize) -> Arc<ExcitationBasis> {
        let g = ArrayGeometry::parallel_dipoles(n, kd).unwrap();
        ExcitationBasis::build(g, n_max).unwrap()
    }

    #[test]
    fn two_atom_full_enumeration() {
        let b = basis(2, 1.0, 2);
        assert_eq!(b.size(), 4);
        let lists: Vec<Vec<usize>> = b.states().iter().map(|s| s.sites()).collect();
        assert_eq!(lists, vec![vec![], vec![1], vec![2], vec![1, 2]]);
    }

    #[test]
    fn sector_sizes_n20() {
        let b = basis(20, std::f64::consts::FRAC_PI_2, 4);
        assert_eq!(b.sector_size(2), 190);
        assert_eq!(b.sector_size(3), 1140);
        assert_eq!(b.sector_size(4), 4845);
        assert_eq!(b.size(), 1 + 20 + 190 + 1140 + 4845);
    }

    #[test]
    fn n_max_exceeds_n_is_error() {
        let g = ArrayGeometry::parallel_dipoles(3, 1.0).unwrap();
        assert!(ExcitationBasis::build(g, 4).is_err());
    }

    #[test]
    fn build_is_deterministic() {
        let a = basis(9, 1.2, 3);
        let b = basis(9, 1.2, 3);
        assert_eq!(a.states(), b.states());
    }

    #[test]
    fn lowering_on_single_excitation() {
        let b = basis(2, 1.0, 2);
        let s1 = lowering_op(&b, 1).unwrap();
        let mut v = b.zero_vector();
        let i = b.index_of(BasisState::from_sites(&[1]).unwrap()).unwrap();
        v.amplitudes[i] = C64::new(1.0, 0.0);
        let w = s1.apply(&v).unwrap();
        assert_abs_diff_eq!(w.amplitudes[0].re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(w.norm(), 1.0, epsilon = 1e-15);

        let s2 = lowering_op(&b, 2).unwrap();
        let z = s2.apply(&v).unwrap();
        assert_abs_diff_eq!(z.norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn lowering_out_of_range() {
        let b = basis(2, 1.0, 2);
        assert!(lowering_op(&b, 0).is_err());
        assert!(lowering_op(&b, 3).is_err());
    }

    #[test]
    fn number_operator_from_lowering_sum() {
        // Σ_j σ_j†σ_j equals the diagonal excitation-count operator.
        let b = basis(5, 1.0, 3);
        let mut acc = Array2::<C64>::zeros((b.size(), b.size()));
        for j in 1..=5 {
            let s = lowering_op(&b, j).unwrap();
            acc = acc + s.dagger().matmul(&s).unwrap().to_dense();
        }
        let counts = excitation_number_diagonal(&b);
        for i in 0..b.size() {
            for j in 0..b.size() {
                let expect = if i == j { counts[i] } else { 0.0 };
                assert_abs_diff_eq!(acc[[i, j]].re, expect, epsilon = 1e-12);
                assert_abs_diff_eq!(acc[[i, j]].im, 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn sigma_squared_is_zero_and_anticommutator_is_identity() {
        let b = basis(4, 1.0, 4);
        for j in 1..=4 {
            let s = lowering_op(&b, j).unwrap();
            let s2 = s.matmul(&s).unwrap().to_dense();
            assert!(s2.iter().all(|a| a.norm() < 1e-14));
            let anti =
                s.dagger().matmul(&s).unwrap().to_dense() + s.matmul(&s.dagger()).unwrap().to_dense();
            // full (untruncated) space: anticommutator is the identity
            for i in 0..b.size() {
                for k in 0..b.size() {
                    let expect = if i == k { 1.0 } else { 0.0 };
                    assert_abs_diff_eq!(anti[[i, k]].re, expect, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn spin_wave_uniform_state() {
        let b = basis(6, 1.0, 2);
        let g = b.ground_state();
        let w = spin_wave_op(&b, 0.0).dagger().apply(&g).unwrap();
        assert_abs_diff_eq!(w.norm(), 1.0, epsilon = 1e-14);
        for m in 1..=6 {
            let i = b.index_of(BasisState::from_sites(&[m]).unwrap()).unwrap();
            assert_abs_diff_eq!(w.amplitudes[i].re, 1.0 / 6f64.sqrt(), epsilon = 1e-14);
        }
    }

    #[test]
    fn spin_wave_orthogonality_on_commensurate_grid() {
        let n = 7;
        let b = basis(n, 1.0, 1);
        let g = b.ground_state();
        let tau = 2.0 * std::f64::consts::PI / n as f64;
        for a in 0..n {
            for c in 0..n {
                let ka = spin_wave_op(&b, tau * a as f64).dagger().apply(&g).unwrap();
                let kc = spin_wave_op(&b, tau * c as f64).dagger().apply(&g).unwrap();
                let ov = ka.inner(&kc).unwrap().norm();
                let expect = if a == c { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(ov, expect, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn spin_wave_periodicity() {
        let b = basis(5, 1.3, 2);
        let k = 0.7;
        let m1 = spin_wave_op(&b, k).to_dense();
        let m2 = spin_wave_op(&b, k + 2.0 * std::f64::consts::PI).to_dense();
        let diff = (&m1 - &m2).iter().map(|a| a.norm()).fold(0.0, f64::max);
        assert!(diff < 1e-12);
    }

    #[test]
    fn single_excitation_spin_wave_matrix_elements() {
        // N σ_k† σ_k on the 1-excitation sector has elements e^{ik(z_m - z_n)}.
        let n = 20;
        let b = basis(n, std::f64::consts::FRAC_PI_2, 1);
        let k = 0.37;
        let sk = spin_wave_op(&b, k);
        let m = sk.dagger().matmul(&sk).unwrap().to_dense();
        for mm in 1..=n {
            for nn in 1..=n {
                let i = b.index_of(BasisState::from_sites(&[mm]).unwrap()).unwrap();
                let j = b.index_of(BasisState::from_sites(&[nn]).unwrap()).unwrap();
                let got = m[[i, j]] * n as f64;
                let expect = C64::from_polar(1.0, k * (mm as f64 - nn as f64));
                assert!((got - expect).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn apply_identity_and_composition() {
        let b = basis(4, 1.0, 2);
        let mut v = b.zero_vector();
        for (i, a) in v.amplitudes.iter_mut().enumerate() {
            *a = C64::new(0.3 + i as f64, 0.1 * i as f64);
        }
        let id = OperatorMatrix::identity(Arc::clone(&b));
        let w = id.apply(&v).unwrap();
        assert!(w
            .amplitudes
            .iter()
            .zip(v.amplitudes.iter())
            .all(|(a, b)| (a - b).norm() < 1e-15));

        let s1 = lowering_op(&b, 1).unwrap();
        let s3 = lowering_op(&b, 3).unwrap();
        let ab = s1.matmul(&s3).unwrap().apply(&v).unwrap();
        let a_b = s1.apply(&s3.apply(&v).unwrap()).unwrap();
        let diff: f64 = ab
            .amplitudes
            .iter()
            .zip(a_b.amplitudes.iter())
            .map(|(x, y)| (x - y).norm())
            .sum();
        assert!(diff < 1e-12);
    }

    #[test]
    fn one_body_apply_matches_dense_assembly() {
        let b = basis(5, 1.0, 3);
        let n = 5;
        let mut kernel = Array2::<C64>::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                kernel[[i, j]] = C64::new(0.1 * (i + 1) as f64, 0.05 * j as f64 - 0.1);
            }
        }
        let dense = one_body_full_matrix(&b, &kernel.view());
        let mut v = Array1::<C64>::zeros(b.size());
        for (i, a) in v.iter_mut().enumerate() {
            *a = C64::new((i as f64).sin(), (i as f64).cos());
        }
        let mut out = Array1::zeros(b.size());
        apply_one_body(&b, &kernel.view(), &v.view(), &mut out);
        let want = dense.dot(&v);
        let diff: f64 = out.iter().zip(want.iter()).map(|(x, y)| (x - y).norm()).sum();
        assert!(diff < 1e-10);
    }

    #[test]
    fn raising_truncation_reports_leak() {
        let b = basis(3, 1.0, 1);
        let coeffs: Vec<C64> = (0..3).map(|_| C64::new(1.0, 0.0)).collect();
        let mut v = b.zero_vector();
        let i = b.index_of(BasisState::from_sites(&[2]).unwrap()).unwrap();
        v.amplitudes[i] = C64::new(1.0, 0.0);
        let mut out = Array1::zeros(b.size());
        let leak = apply_collective_raising(&b, &coeffs, &v.amplitudes.view(), &mut out);
        // both raisings out of the 1-excitation top sector are projected out
        assert_abs_diff_eq!(leak, 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(out.iter().map(|a| a.norm_sqr()).sum::<f64>(), 0.0, epsilon = 1e-30);
    }
}
