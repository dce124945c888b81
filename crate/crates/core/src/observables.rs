//! Measured and certified quantities: the emission distribution `P_k`, the
//! two-photon correlation map `G(k1,k2)`, fidelities and fidelity scans of
//! sector eigenstates against the free-fermion family, the `σ_k` norm
//! inequality and its scaling laws, `ΔH` matrix elements, the collective-spin
//! spectrum, and the visibility ratio `r_β`.

use std::sync::Arc;

use ndarray::prelude::*;
use ndarray_linalg::{Eig, Eigh, UPLO};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ansatz::{fermion_state, q_grid, quadratic_model_kernel, sine_mode, FermionString};
use crate::dynamics::TrajectoryData;
use crate::error::{Error, Result};
use crate::hilbert::{apply_collective_lowering, apply_one_body, ExcitationBasis, StateVector};
use crate::lightfield::{BandEdge, EdgeKind, EffectiveHamiltonian};
use crate::C64;

use std::f64::consts::PI;

// ---------------------------------------------------------------------------
// momentum grid
// ---------------------------------------------------------------------------

/// Sorted axial momenta `k·d` within the Brillouin zone, with the light-cone
/// boundary `k0·d` recorded so detectable points (`|k| <= k0`) are flagged.
#[derive(Debug, Clone)]
pub struct MomentumGrid {
    pub k_d: Vec<f64>,
    pub kd_light: f64,
}

impl MomentumGrid {
    pub fn new(k_d: Vec<f64>, kd_light: f64) -> Result<Self> {
        if k_d.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument("grid must be strictly increasing".into()));
        }
        if k_d.iter().any(|&k| k < -PI - 1e-12 || k > PI + 1e-12) {
            return Err(Error::InvalidArgument("grid outside the Brillouin zone".into()));
        }
        Ok(Self { k_d, kd_light })
    }

    /// `n` uniform points spanning `[-π, π]`.
    pub fn uniform(n: usize, kd_light: f64) -> Result<Self> {
        let k_d = (0..n)
            .map(|i| -PI + 2.0 * PI * i as f64 / (n - 1) as f64)
            .collect();
        Self::new(k_d, kd_light)
    }

    pub fn in_lightcone(&self, i: usize) -> bool {
        self.k_d[i].abs() <= self.kd_light
    }

    pub fn len(&self) -> usize {
        self.k_d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k_d.is_empty()
    }
}

// ---------------------------------------------------------------------------
// P_k emission distribution
// ---------------------------------------------------------------------------

/// One-body coherence matrix `C_mn = ⟨ψ|σ_m†σ_n|ψ⟩`.
pub fn coherence_matrix(psi: &StateVector) -> Array2<C64> {
    let basis = &psi.basis;
    let n = basis.n_atoms();
    // D[:, m] = σ_{m+1} ψ; then C = D† D
    let mut d: Array2<C64> = Array2::zeros((basis.size(), n));
    for (i, s) in basis.states().iter().enumerate() {
        let a = psi.amplitudes[i];
        if a == C64::new(0.0, 0.0) {
            continue;
        }
        for m in s.sites() {
            let j = basis.index_of(s.without(m)).expect("lowered state");
            d[[j, m - 1]] += a;
        }
    }
    let dh = d.t().mapv(|x| x.conj());
    dh.dot(&d)
}

/// Instantaneous `⟨σ_k†σ_k⟩ = (1/N) u_k† C u_k` over a grid.
pub fn pk_instant(c: &Array2<C64>, grid: &MomentumGrid) -> Array1<f64> {
    let n = c.nrows();
    let mut out = Array1::zeros(grid.len());
    for (gi, &k) in grid.k_d.iter().enumerate() {
        let u: Array1<C64> =
            Array1::from_iter((1..=n).map(|m| C64::from_polar(1.0, -k * m as f64)));
        let cu = c.dot(&u);
        let val: C64 = u.iter().zip(cu.iter()).map(|(a, b)| a.conj() * b).sum();
        out[gi] = val.re / n as f64;
    }
    out
}

/// Per-trajectory time-integrated emission profile
/// `P_k = ∫ dτ ⟨σ_k†σ_k⟩(τ)` by the trapezoid rule, together with the
/// emitted excitation fraction `⟨N_e⟩(0) - ⟨N_e⟩(t_end)`.
pub fn pk_integrated(traj: &TrajectoryData, grid: &MomentumGrid) -> (Array1<f64>, f64) {
    let mut acc = Array1::zeros(grid.len());
    let mut prev: Option<(f64, Array1<f64>)> = None;
    for (t, st) in traj.times.iter().zip(traj.states.iter()) {
        let pk = pk_instant(&coherence_matrix(st), grid);
        if let Some((tp, pkp)) = prev {
            let w = 0.5 * (t - tp);
            acc = acc + (&pk + &pkp).mapv(|x| x * w);
        }
        prev = Some((*t, pk));
    }
    let emitted = traj.states.first().map_or(0.0, |s| s.mean_excitation())
        - traj.states.last().map_or(0.0, |s| s.mean_excitation());
    (acc, emitted)
}

/// Rescale an averaged `P_k` profile so `Σ_k P_k Δk` over the light cone
/// equals the ensemble-mean emitted excitation fraction. Only `|k| ≤ k0`
/// corresponds to a detector angle (`k = k0·cosθ`), and occupation parked in
/// dark modes outside the cone grows with the integration horizon without
/// ever reaching a detector, so it must not dilute the detected profile.
pub fn renormalize_pk(pk: &Array1<f64>, grid: &MomentumGrid, emitted: f64) -> Array1<f64> {
    let dk = if grid.len() > 1 {
        grid.k_d[1] - grid.k_d[0]
    } else {
        1.0
    };
    let total: f64 = (0..grid.len())
        .filter(|&i| grid.in_lightcone(i))
        .map(|i| pk[i])
        .sum::<f64>()
        * dk;
    if total <= 0.0 {
        return pk.clone();
    }
    pk.mapv(|x| x * emitted / total)
}

/// Bootstrap mean and standard error over per-trajectory vectors, resampling
/// trajectories with replacement. Deterministic in `seed`.
pub fn bootstrap_mean_se(
    samples: &[Array1<f64>],
    n_boot: usize,
    seed: u64,
) -> Result<(Array1<f64>, Array1<f64>)> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("no samples to bootstrap".into()));
    }
    let n = samples.len();
    let dim = samples[0].len();
    let mut mean = Array1::zeros(dim);
    for s in samples {
        mean = mean + s;
    }
    mean.mapv_inplace(|x| x / n as f64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc: Array1<f64> = Array1::zeros(dim);
    let mut acc2: Array1<f64> = Array1::zeros(dim);
    for _ in 0..n_boot {
        let mut bm: Array1<f64> = Array1::zeros(dim);
        for _ in 0..n {
            bm = bm + &samples[rng.gen_range(0..n)];
        }
        bm.mapv_inplace(|x| x / n as f64);
        acc = acc + &bm;
        acc2 = acc2 + &bm.mapv(|x| x * x);
    }
    let nb = n_boot as f64;
    let se = Array1::from_shape_fn(dim, |i| {
        ((acc2[i] / nb - (acc[i] / nb) * (acc[i] / nb)).max(0.0)).sqrt()
    });
    Ok((mean, se))
}

// ---------------------------------------------------------------------------
// two-photon correlation G(k1,k2)
// ---------------------------------------------------------------------------

/// Pair-lowering Gram matrix `Γ_{pq} = ⟨W_p|W_q⟩` with `W_p = σ_n σ_m |ψ⟩`
/// for site pairs `p = (m < n)`, ensemble-averaged. `G(k1,k2)` is a quadratic
/// form in this matrix, so the ensemble enters only once.
pub struct PairGram {
    pub n_atoms: usize,
    pub pairs: Vec<(usize, usize)>,
    pub gram: Array2<C64>,
}

/// Build the ensemble-averaged pair Gram matrix.
pub fn pair_gram(states: &[StateVector]) -> Result<PairGram> {
    let basis = &states
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty ensemble".into()))?
        .basis;
    let n = basis.n_atoms();
    let pairs: Vec<(usize, usize)> = (1..=n)
        .flat_map(|m| ((m + 1)..=n).map(move |l| (m, l)))
        .collect();
    let np = pairs.len();
    let pair_index: std::collections::HashMap<(usize, usize), usize> =
        pairs.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();
    let mut gram: Array2<C64> = Array2::zeros((np, np));
    let mut w = Array2::zeros((basis.size(), np));
    for psi in states {
        if !basis.compatible(&psi.basis) {
            return Err(Error::BasisMismatch("pair_gram ensemble".into()));
        }
        w.fill(C64::new(0.0, 0.0));
        for (i, s) in basis.states().iter().enumerate() {
            let a = psi.amplitudes[i];
            if a == C64::new(0.0, 0.0) || s.n_excited() < 2 {
                continue;
            }
            let sites = s.sites();
            for x in 0..sites.len() {
                for y in (x + 1)..sites.len() {
                    let target = s.without(sites[x]).without(sites[y]);
                    let j = basis.index_of(target).expect("pair-lowered state");
                    let p = pair_index[&(sites[x], sites[y])];
                    w[[j, p]] += a;
                }
            }
        }
        let wh = w.t().mapv(|x| x.conj());
        gram = gram + wh.dot(&w);
    }
    gram.mapv_inplace(|x| x / states.len() as f64);
    Ok(PairGram { n_atoms: n, pairs, gram })
}

/// `G(k1,k2) = N²⟨σ†_{k1}σ†_{k2}σ_{k2}σ_{k1}⟩` from the pair Gram matrix.
pub fn g2_value(gram: &PairGram, k1_d: f64, k2_d: f64) -> f64 {
    let n = gram.n_atoms;
    let c = |k: f64, m: usize| C64::from_polar(1.0 / (n as f64).sqrt(), -k * m as f64);
    let w: Array1<C64> = gram
        .pairs
        .iter()
        .map(|&(m, l)| c(k1_d, m) * c(k2_d, l) + c(k1_d, l) * c(k2_d, m))
        .collect();
    let gw = gram.gram.dot(&w);
    let val: C64 = w.iter().zip(gw.iter()).map(|(a, b)| a.conj() * b).sum();
    (n as f64).powi(2) * val.re
}

/// Symmetric map of `G` over a square grid.
#[derive(Debug, Clone)]
pub struct CorrelationMap {
    pub k_d: Vec<f64>,
    pub values: Array2<f64>,
}

impl CorrelationMap {
    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(0.0f64, f64::max)
    }
}

/// Evaluate `G(k1,k2)` over `grid × grid` for a state ensemble (a single pure
/// state is an ensemble of one).
pub fn g2_map(states: &[StateVector], grid_k_d: &[f64]) -> Result<CorrelationMap> {
    let gram = pair_gram(states)?;
    let n = grid_k_d.len();
    let mut values = Array2::zeros((n, n));
    for i in 0..n {
        for j in i..n {
            let v = g2_value(&gram, grid_k_d[i], grid_k_d[j]);
            values[[i, j]] = v;
            values[[j, i]] = v;
        }
    }
    if values.iter().any(|&v| v < -1e-12) {
        return Err(Error::NumericalInconsistency(
            "negative two-photon correlation beyond tolerance".into(),
        ));
    }
    Ok(CorrelationMap { k_d: grid_k_d.to_vec(), values })
}

// ---------------------------------------------------------------------------
// fidelities
// ---------------------------------------------------------------------------

/// `|⟨a|b⟩|²` for normalized states.
pub fn fidelity(a: &StateVector, b: &StateVector) -> Result<f64> {
    if !a.normalized || !b.normalized {
        return Err(Error::InvalidArgument("fidelity needs normalized states".into()));
    }
    Ok(a.inner(b)?.norm_sqr())
}

/// Fidelity between the renormalized `n_e`-sector components of two states.
pub fn sector_fidelity(a: &StateVector, b: &StateVector, n_e: usize) -> Result<f64> {
    let pa = a.sector_component(n_e)?;
    let pb = b.sector_component(n_e)?;
    Ok(pa.inner(&pb)?.norm_sqr())
}

// ---------------------------------------------------------------------------
// fermion overlap transform and fidelity scan
// ---------------------------------------------------------------------------

fn for_each_permutation(n: usize, f: &mut impl FnMut(&[usize], f64)) {
    // Heap's algorithm, tracking parity through swap count
    let mut idx: Vec<usize> = (0..n).collect();
    let mut c = vec![0usize; n];
    let mut sign = 1.0;
    f(&idx, sign);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                idx.swap(0, i);
            } else {
                idx.swap(c[i], i);
            }
            sign = -sign;
            f(&idx, sign);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

/// All overlaps `⟨F_ξ⃗|ψ⟩` of an `n_e`-sector amplitude vector with the full
/// free-fermion family at one band edge, via an exact antisymmetric-tensor
/// leg transform. The returned tensor is indexed by the flat row-major index
/// of `(ξ1-1, ..., ξn-1)`; ordered strings `ξ1 < ... < ξn` carry the
/// overlaps, and their squared magnitudes sum to `‖ψ‖²`.
pub fn fermion_overlap_tensor(
    basis: &ExcitationBasis,
    n_e: usize,
    psi_sector: &ArrayView1<C64>,
    edge: EdgeKind,
) -> Result<Array1<C64>> {
    let n = basis.n_atoms();
    if n_e == 0 || n_e > 5 {
        return Err(Error::InvalidArgument("overlap transform supports 1 <= n_e <= 5".into()));
    }
    let range = basis.sector_range(n_e);
    if psi_sector.len() != range.len() {
        return Err(Error::InvalidArgument("sector amplitude length mismatch".into()));
    }
    let full = n.pow(n_e as u32);
    // antisymmetric extension: Ã(t) = sign(sort) ψ(sorted t)
    let mut flat: Array1<C64> = Array1::zeros(full);
    let strides: Vec<usize> = (0..n_e).rev().map(|j| n.pow(j as u32)).collect();
    for (local, i) in range.clone().enumerate() {
        let a = psi_sector[local];
        if a == C64::new(0.0, 0.0) {
            continue;
        }
        let sites = basis.state(i).sites();
        for_each_permutation(n_e, &mut |perm, sign| {
            let mut idx = 0usize;
            for (pos, &p) in perm.iter().enumerate() {
                idx += (sites[p] - 1) * strides[pos];
            }
            flat[idx] = sign * a;
        });
    }
    // leg matrix Φ[m, ξ] = φ_ξ(m); contract each leg with Φ*
    let mut phi_conj = Array2::zeros((n, n));
    for xi in 1..=n {
        let mode = sine_mode(n, xi, edge)?;
        for m in 0..n {
            phi_conj[[m, xi - 1]] = mode[m].conj();
        }
    }
    let rest = full / n;
    for _ in 0..n_e {
        // out[rest..., ξ] = Σ_m A[m, rest...] Φ*[m, ξ]; axis order rotates by
        // one each pass, so after n_e passes every leg is transformed once
        let m = flat.into_shape((n, rest)).expect("reshape");
        let out = m.t().dot(&phi_conj); // (rest, n)
        flat = out.into_shape(full).expect("reshape back");
    }
    Ok(flat)
}

/// Best free-fermion match of a sector state over both band edges: returns
/// `(string, fidelity)` maximizing `|⟨F_ξ⃗|ψ⟩|²`.
pub fn best_fermion_match(
    basis: &ExcitationBasis,
    n_e: usize,
    psi_sector: &ArrayView1<C64>,
) -> Result<(FermionString, f64)> {
    let n = basis.n_atoms();
    let strides: Vec<usize> = (0..n_e).rev().map(|j| n.pow(j as u32)).collect();
    let mut best: Option<(FermionString, f64)> = None;
    for edge in [EdgeKind::Zero, EdgeKind::Pi] {
        let t = fermion_overlap_tensor(basis, n_e, psi_sector, edge)?;
        let mut xis: Vec<usize> = (1..=n_e).collect();
        loop {
            let idx: usize = xis
                .iter()
                .enumerate()
                .map(|(pos, &xi)| (xi - 1) * strides[pos])
                .sum();
            let f = t[idx].norm_sqr();
            if best.as_ref().map_or(true, |(_, bf)| f > *bf) {
                best = Some((FermionString { edge, xis: xis.clone() }, f));
            }
            // next ordered combination
            let mut j = n_e;
            loop {
                if j == 0 {
                    break;
                }
                j -= 1;
                if xis[j] < n - (n_e - 1 - j) {
                    xis[j] += 1;
                    for l in (j + 1)..n_e {
                        xis[l] = xis[l - 1] + 1;
                    }
                    break;
                }
                if j == 0 {
                    xis.clear();
                    break;
                }
            }
            if xis.is_empty() {
                break;
            }
        }
    }
    best.ok_or_else(|| Error::InvalidArgument("empty string family".into()))
}

/// One row of a fidelity scan: a sector eigenstate of `H_eff` and its best
/// free-fermion match.
#[derive(Debug, Clone)]
pub struct ScanRow {
    pub eigenvalue: C64,
    /// `-2 Im λ` in γ0
    pub decay_rate: f64,
    pub string: FermionString,
    pub fidelity: f64,
}

/// Diagonalize the `n_e` sector of `H_eff` and match each eigenstate against
/// the free-fermion family. Rows are sorted by increasing decay rate
/// (ties broken by ascending real part). With `top_m` set, only the `top_m`
/// most subradiant and `top_m` most superradiant eigenstates are matched.
pub fn fidelity_scan(
    h: &EffectiveHamiltonian,
    n_e: usize,
    top_m: Option<usize>,
) -> Result<Vec<ScanRow>> {
    let basis = &h.basis;
    let m = h.sector_matrix(n_e);
    let (evals, evecs) = m.eig()?;
    let mut order: Vec<usize> = (0..evals.len()).collect();
    let rate = |i: usize| -2.0 * evals[i].im;
    order.sort_by(|&a, &b| {
        rate(a)
            .total_cmp(&rate(b))
            .then(evals[a].re.total_cmp(&evals[b].re))
    });
    let selected: Vec<usize> = match top_m {
        Some(m_top) if 2 * m_top < order.len() => {
            let mut v: Vec<usize> = order[..m_top].to_vec();
            v.extend_from_slice(&order[order.len() - m_top..]);
            v
        }
        _ => order,
    };
    let mut rows = Vec::with_capacity(selected.len());
    for &i in &selected {
        let col = evecs.column(i).to_owned();
        let norm = col.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        let normalized = col.mapv(|x| x / norm);
        let (string, fid) = best_fermion_match(basis, n_e, &normalized.view())?;
        rows.push(ScanRow {
            eigenvalue: evals[i],
            decay_rate: -2.0 * evals[i].im,
            string,
            fidelity: fid,
        });
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// σ_k norm inequality and scaling laws
// ---------------------------------------------------------------------------

/// `‖σ_k|F_ξ⃗⟩‖` by direct application of the collective lowering operator.
pub fn sigma_k_applied_norm(
    basis: &Arc<ExcitationBasis>,
    string: &FermionString,
    k_d: f64,
) -> Result<f64> {
    let psi = fermion_state(basis, string)?;
    let n = basis.n_atoms();
    let coeffs: Vec<C64> = (1..=n)
        .map(|m| C64::from_polar(1.0 / (n as f64).sqrt(), -k_d * m as f64))
        .collect();
    let mut out = Array1::zeros(basis.size());
    apply_collective_lowering(basis, &coeffs, &psi.amplitudes.view(), &mut out);
    Ok(out.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt())
}

fn cot(x: f64) -> f64 {
    x.cos() / x.sin()
}

/// `h_k(q1,q2) = cot[(k - k_ex - q1)d/2] - cot[(k - k_ex - q2)d/2]`.
fn h_k(k_rel_d: f64, q1: f64, q2: f64) -> f64 {
    cot((k_rel_d - q1) / 2.0) - cot((k_rel_d - q2) / 2.0)
}

/// Right-hand side of the cotangent bound on `‖σ_k|F_ξ⃗⟩‖`:
/// `(1/N)Σ_α |h_k(-q_α, q_α)| + (2√n_e/N) Σ_{α<β,ε1,ε2} |h_k(ε1 q_α, ε2 q_β)|`.
pub fn sigma_k_bound_rhs(n_atoms: usize, string: &FermionString, k_d: f64) -> Result<f64> {
    let q = q_grid(n_atoms);
    let k_rel = k_d - string.edge.k_ex_d();
    let qs: Vec<f64> = string.xis.iter().map(|&xi| q[xi - 1]).collect();
    for &qa in &qs {
        for sgn in [1.0, -1.0] {
            let arg = (k_rel - sgn * qa) / 2.0;
            if (arg - PI * (arg / PI).round()).abs() < 1e-8 {
                return Err(Error::SingularInput(format!(
                    "k within 1e-8 of a cotangent pole at q = {qa}"
                )));
            }
        }
    }
    let nf = n_atoms as f64;
    let n_e = qs.len() as f64;
    let mut rhs = 0.0;
    for &qa in &qs {
        rhs += h_k(k_rel, -qa, qa).abs() / nf;
    }
    for a in 0..qs.len() {
        for b in (a + 1)..qs.len() {
            for e1 in [1.0, -1.0] {
                for e2 in [1.0, -1.0] {
                    rhs += 2.0 * n_e.sqrt() / nf * h_k(k_rel, e1 * qs[a], e2 * qs[b]).abs();
                }
            }
        }
    }
    Ok(rhs)
}

/// Both sides of the inequality for one `(string, k)` pair.
pub fn sigma_k_norm_bound(
    basis: &Arc<ExcitationBasis>,
    string: &FermionString,
    k_d: f64,
) -> Result<(f64, f64)> {
    let rhs = sigma_k_bound_rhs(basis.n_atoms(), string, k_d)?;
    let lhs = sigma_k_applied_norm(basis, string, k_d)?;
    Ok((lhs, rhs))
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InvalidArgument("need >= 2 points for a slope".into()));
    }
    if xs.iter().chain(ys.iter()).any(|&v| v <= 0.0) {
        return Err(Error::InvalidArgument("log-log fit needs positive data".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let cov: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(cov / var)
}

// ---------------------------------------------------------------------------
// ΔH matrix elements
// ---------------------------------------------------------------------------

/// Matrix of `⟨F_ζ⃗|(H_eff - H₁)|F_ξ⃗⟩` over a list of fermion strings, by
/// direct application of the one-body kernel difference.
pub fn delta_h_elements(
    h: &EffectiveHamiltonian,
    edge: &BandEdge,
    strings: &[FermionString],
) -> Result<Array2<C64>> {
    let basis = &h.basis;
    let n = basis.n_atoms();
    let delta = &h.kernel_nonh() - &quadratic_model_kernel(n, edge);
    let states: Vec<StateVector> = strings
        .iter()
        .map(|s| fermion_state(basis, s))
        .collect::<Result<_>>()?;
    let mut out = Array2::zeros((strings.len(), strings.len()));
    let mut applied = Array1::zeros(basis.size());
    for (j, ket) in states.iter().enumerate() {
        apply_one_body(basis, &delta.view(), &ket.amplitudes.view(), &mut applied);
        for (i, bra) in states.iter().enumerate() {
            out[[i, j]] = bra
                .amplitudes
                .iter()
                .zip(applied.iter())
                .map(|(b, a)| b.conj() * a)
                .sum();
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// collective-spin spectrum
// ---------------------------------------------------------------------------

/// Comparison of the numeric `S†S` spectrum (for `S = σ_{k=0}`, i.e. the
/// `1/√N`-normalized collective lowering) in the `n_e` sector against the
/// analytic family `x(N - 2n_e + x + 1)`, `0 <= x <= n_e`, up to one fitted
/// global prefactor.
#[derive(Debug, Clone)]
pub struct SpinSpectrum {
    /// shape family `x(N - 2n_e + x + 1)` in ascending order
    pub family: Vec<f64>,
    /// distinct numeric eigenvalues, ascending
    pub numeric: Vec<f64>,
    /// fitted prefactor `c` minimizing `‖c·family - numeric‖`
    pub prefactor: f64,
    /// max residual of the fit relative to the largest eigenvalue
    pub residual: f64,
}

pub fn collective_spin_spectrum(n_atoms: usize, n_e: usize) -> Result<SpinSpectrum> {
    use crate::hilbert::{spin_wave_op, ArrayGeometry};
    let g = ArrayGeometry::parallel_dipoles(n_atoms, PI / 2.0)?;
    let basis = ExcitationBasis::build(g, n_e)?;
    let s_op = spin_wave_op(&basis, 0.0);
    let sds = s_op.dagger().matmul(&s_op)?.to_dense();
    let range = basis.sector_range(n_e);
    let block = sds.slice(s![range.clone(), range]).to_owned();
    // S†S is Hermitian; take the real symmetric part for eigh
    let sym = block.mapv(|x| x.re);
    let (evals, _) = sym.eigh(UPLO::Lower)?;
    // cluster into distinct values
    let mut numeric: Vec<f64> = Vec::new();
    for &e in evals.iter() {
        if numeric.last().map_or(true, |&l| (e - l).abs() > 1e-8 * (1.0 + e.abs())) {
            numeric.push(e);
        }
    }
    let family: Vec<f64> = (0..=n_e.min((n_atoms + 1) / 2))
        .map(|x| {
            let xf = x as f64;
            xf * (n_atoms as f64 - 2.0 * n_e as f64 + xf + 1.0)
        })
        .collect();
    if numeric.len() != family.len() {
        return Err(Error::NumericalInconsistency(format!(
            "found {} distinct eigenvalues, family predicts {}",
            numeric.len(),
            family.len()
        )));
    }
    let num: f64 = family.iter().zip(&numeric).map(|(f, n)| f * n).sum();
    let den: f64 = family.iter().map(|f| f * f).sum();
    let prefactor = num / den;
    let scale = numeric.iter().cloned().fold(0.0f64, f64::max).max(1e-300);
    let residual = family
        .iter()
        .zip(&numeric)
        .map(|(f, n)| (prefactor * f - n).abs())
        .fold(0.0f64, f64::max)
        / scale;
    Ok(SpinSpectrum { family, numeric, prefactor, residual })
}

// ---------------------------------------------------------------------------
// r_β
// ---------------------------------------------------------------------------

/// Visibility ratio `r_β = Δω/(βγ_ex)` with `Δω = Re a₂/(Nd)²`.
pub fn rbeta(edge: &BandEdge, n_atoms: usize, beta: f64) -> Result<f64> {
    let gamma_ex = edge.gamma_ex();
    if gamma_ex <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "edge decay rate {gamma_ex} is not positive"
        )));
    }
    if !(beta > 0.0) {
        return Err(Error::InvalidArgument("beta must be positive".into()));
    }
    Ok(edge.a2.re / (n_atoms as f64).powi(2) / (beta * gamma_ex))
}
