//! Free-fermion (Slater-determinant) and free-boson (permanent) ansatz states
//! for the multiply-excited band-edge eigenstates, together with the solvable
//! quadratic nearest-neighbor models they diagonalize exactly.
//!
//! Both families live near a quadratic band edge `k_ex ∈ {0, π/d}` and are
//! built from the open-chain standing-wave modes
//! `φ_ξ(m) = √(2/(N+1)) e^{i k_ex m d} sin(ξπm/(N+1))`, with relative momenta
//! `q_ξ = ξπ/((N+1)d)`.

use std::sync::Arc;

use ndarray::prelude::*;

use crate::error::{Error, Result};
use crate::hilbert::{ExcitationBasis, OperatorMatrix, StateVector};
use crate::lightfield::{BandEdge, EdgeKind};
use crate::C64;

use std::f64::consts::PI;

/// Relative momenta `q_ξ·d = ξπ/(N+1)` for `ξ = 1..=n`.
pub fn q_grid(n: usize) -> Vec<f64> {
    (1..=n).map(|xi| xi as f64 * PI / (n as f64 + 1.0)).collect()
}

/// Standing-wave mode `φ_ξ(m) = √(2/(N+1)) e^{i k_ex m d} sin(ξπm/(N+1))`,
/// orthonormal over `m = 1..=N` for fixed `k_ex`.
pub fn sine_mode(n: usize, xi: usize, edge: EdgeKind) -> Result<Array1<C64>> {
    if xi == 0 || xi > n {
        return Err(Error::InvalidArgument(format!("mode index {xi} out of 1..={n}")));
    }
    let k_ex = edge.k_ex_d();
    let norm = (2.0 / (n as f64 + 1.0)).sqrt();
    Ok(Array1::from_iter((1..=n).map(|m| {
        let s = (xi as f64 * PI * m as f64 / (n as f64 + 1.0)).sin();
        C64::from_polar(norm * s, k_ex * m as f64)
    })))
}

/// Spin-wave mode `φ_0(m) = e^{i k_ex m d}/√N` (the plane wave at the edge).
pub fn plane_wave_mode(n: usize, edge: EdgeKind) -> Array1<C64> {
    let k_ex = edge.k_ex_d();
    let norm = 1.0 / (n as f64).sqrt();
    Array1::from_iter((1..=n).map(|m| C64::from_polar(norm, k_ex * m as f64)))
}

/// Label of a free-fermion ansatz state: a band edge plus a set of distinct
/// standing-wave mode indices, one per excitation.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct FermionString {
    pub edge: EdgeKind,
    pub xis: Vec<usize>,
}

impl FermionString {
    pub fn new(edge: EdgeKind, mut xis: Vec<usize>) -> Result<Self> {
        xis.sort_unstable();
        if xis.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument(
                "fermionic mode indices must be distinct".into(),
            ));
        }
        Ok(Self { edge, xis })
    }
}

fn det_small(m: &Array2<C64>) -> C64 {
    // Laplace expansion is fine and exact-ish at the sizes that occur (<= 5);
    // fall back to LU for anything bigger.
    let n = m.nrows();
    match n {
        0 => C64::new(1.0, 0.0),
        1 => m[[0, 0]],
        2 => m[[0, 0]] * m[[1, 1]] - m[[0, 1]] * m[[1, 0]],
        3 => {
            m[[0, 0]] * (m[[1, 1]] * m[[2, 2]] - m[[1, 2]] * m[[2, 1]])
                - m[[0, 1]] * (m[[1, 0]] * m[[2, 2]] - m[[1, 2]] * m[[2, 0]])
                + m[[0, 2]] * (m[[1, 0]] * m[[2, 1]] - m[[1, 1]] * m[[2, 0]])
        }
        _ => {
            let mut acc = C64::new(0.0, 0.0);
            let mut sign = 1.0;
            for j in 0..n {
                let minor = minor_matrix(m, 0, j);
                acc += sign * m[[0, j]] * det_small(&minor);
                sign = -sign;
            }
            acc
        }
    }
}

fn minor_matrix(m: &Array2<C64>, row: usize, col: usize) -> Array2<C64> {
    let n = m.nrows();
    Array2::from_shape_fn((n - 1, n - 1), |(i, j)| {
        m[[i + if i >= row { 1 } else { 0 }, j + if j >= col { 1 } else { 0 }]]
    })
}

fn permanent_small(m: &Array2<C64>) -> C64 {
    let n = m.nrows();
    match n {
        0 => C64::new(1.0, 0.0),
        1 => m[[0, 0]],
        _ => {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..n {
                acc += m[[0, j]] * permanent_small(&minor_matrix(m, 0, j));
            }
            acc
        }
    }
}

/// Free-fermion ansatz state `|F^{k_ex}_{ξ1...ξn}⟩`: within the `n`-excitation
/// sector, the amplitude on the ordered site configuration `m_1 < ... < m_n`
/// is the Slater determinant `det[φ_{ξα}(m_β)]`. Orthonormal mode vectors make
/// the state normalized as written.
pub fn fermion_state(basis: &Arc<ExcitationBasis>, string: &FermionString) -> Result<StateVector> {
    let n_e = string.xis.len();
    if n_e > basis.n_max {
        return Err(Error::InvalidArgument(format!(
            "{n_e} excitations exceed the basis truncation n_max = {}",
            basis.n_max
        )));
    }
    let n = basis.n_atoms();
    let modes: Vec<Array1<C64>> = string
        .xis
        .iter()
        .map(|&xi| sine_mode(n, xi, string.edge))
        .collect::<Result<_>>()?;
    let mut v = basis.zero_vector();
    for i in basis.sector_range(n_e) {
        let sites = basis.state(i).sites(); // ascending
        let slater = Array2::from_shape_fn((n_e, n_e), |(a, b)| modes[a][sites[b] - 1]);
        v.amplitudes[i] = det_small(&slater);
    }
    v.normalized = true;
    Ok(v)
}

/// Free-boson ansatz state: hard-core-projected, renormalized permanent state
/// of the listed modes (index 0 is the plane wave `σ†_{k_ex}/√N`, indices
/// `ξ >= 1` the standing-wave modes), e.g. `modes = [0, 0, 0]` for
/// `|B_{000}⟩ ∝ P (σ†_{k_ex})³ |g⟩`.
pub fn boson_state(
    basis: &Arc<ExcitationBasis>,
    edge: EdgeKind,
    modes: &[usize],
) -> Result<StateVector> {
    let n_e = modes.len();
    if n_e > basis.n_max {
        return Err(Error::InvalidArgument(format!(
            "{n_e} excitations exceed the basis truncation n_max = {}",
            basis.n_max
        )));
    }
    let n = basis.n_atoms();
    let vecs: Vec<Array1<C64>> = modes
        .iter()
        .map(|&xi| {
            if xi == 0 {
                Ok(plane_wave_mode(n, edge))
            } else {
                sine_mode(n, xi, edge)
            }
        })
        .collect::<Result<_>>()?;
    let mut v = basis.zero_vector();
    for i in basis.sector_range(n_e) {
        let sites = basis.state(i).sites();
        let mat = Array2::from_shape_fn((n_e, n_e), |(a, b)| vecs[a][sites[b] - 1]);
        v.amplitudes[i] = permanent_small(&mat);
    }
    v.normalize().map_err(|_| {
        Error::UndefinedFidelity("boson state annihilated by the hard-core projection".into())
    })?;
    Ok(v)
}

/// Diagonal momentum-shift unitary `U_π = Π_m (-1)^{m n̂_m}`, which maps the
/// band edge `k = 0` onto `k = π/d`: `U_π σ_k U_π† = σ_{k+π/d}`.
pub fn u_pi(basis: &Arc<ExcitationBasis>) -> OperatorMatrix {
    let triplets = basis
        .states()
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let site_sum: usize = s.sites().iter().sum();
            let sign = if site_sum % 2 == 0 { 1.0 } else { -1.0 };
            (i, i, C64::new(sign, 0.0))
        })
        .collect();
    OperatorMatrix::sparse(Arc::clone(basis), triplets)
}

/// One-body kernel of the solvable quadratic model `H_1`: a nearest-neighbor
/// chain whose dispersion reproduces the band edge to quadratic order,
///
/// diagonal `ω_ex + 2a_2`, hops `-(a_2) e^{∓i k_ex d}` (units γ0, d = 1).
///
/// Its single-particle eigenmodes are exactly [`sine_mode`], with eigenvalues
/// `ω_ex + 2a_2 (1 - cos q_ξ d) ≈ ω_ex + a_2 q_ξ²`.
pub fn quadratic_model_kernel(n: usize, edge: &BandEdge) -> Array2<C64> {
    let mut k = Array2::zeros((n, n));
    let diag = edge.omega_ex + 2.0 * edge.a2;
    let hop_up = -edge.a2 * C64::from_polar(1.0, -edge.k_ex_d); // (m+1, m)
    for m in 0..n {
        k[[m, m]] = diag;
        if m + 1 < n {
            k[[m + 1, m]] = hop_up;
            k[[m, m + 1]] = -edge.a2 * C64::from_polar(1.0, edge.k_ex_d);
        }
    }
    k
}

/// Exact eigenvalue of the quadratic model for a fermion string:
/// `Σ_α [ω_ex + 2a_2 (1 - cos q_{ξα})]`.
pub fn quadratic_model_eigenvalue(n: usize, edge: &BandEdge, xis: &[usize]) -> C64 {
    xis.iter()
        .map(|&xi| {
            let q = xi as f64 * PI / (n as f64 + 1.0);
            edge.omega_ex + 2.0 * edge.a2 * (1.0 - q.cos())
        })
        .sum()
}

/// Real kernels `(H_re, H_im)` of the minimal dissipative model
/// `ℍ_1 = H_re - iβ H_im`: coherent nearest-neighbor hopping `-Re a_2`
/// (gauged to the band edge, diagonal `2 Re a_2`) and uniform single-atom
/// decay at the collective edge rate, `H_im` diagonal `γ_ex/2`.
pub fn minimal_dissipative_kernels(
    n: usize,
    edge: &BandEdge,
) -> (Array2<f64>, Array2<f64>) {
    let t = edge.a2.re;
    let mut h_re = Array2::zeros((n, n));
    let mut h_im = Array2::zeros((n, n));
    for m in 0..n {
        h_re[[m, m]] = 2.0 * t;
        h_im[[m, m]] = edge.gamma_ex() / 2.0;
        if m + 1 < n {
            let phase = edge.k_ex_d;
            // Re a2 hop with the same edge gauge as the full quadratic model
            h_re[[m + 1, m]] = -t * (phase).cos();
            h_re[[m, m + 1]] = -t * (phase).cos();
        }
    }
    (h_re, h_im)
}
