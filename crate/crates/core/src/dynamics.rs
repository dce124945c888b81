//! Trajectory dynamics for the radiative master equation: jump-operator
//! derivation, deterministic no-jump evolution, and a Monte Carlo
//! wave-function (MCWF) engine with an exact-propagator stepper.
//!
//! The stepper caches `e^{-iH_nh τ}` at a dyadic ladder of substep sizes
//! `τ = Δt/2^l`. Between jumps a whole record step costs one matrix-vector
//! product; when the survival probability crosses the jump threshold inside a
//! step, the crossing is located by walking down the ladder, so jump times are
//! resolved to the finest level without paying for fine stepping everywhere.
//! Without a drive the dynamics never raises the excitation number, so states
//! stay in a single sector and only sector-sized propagators are touched.

use std::sync::Arc;

use ndarray::prelude::*;
use ndarray_linalg::{Eigh, UPLO};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::expm::expm;
use crate::hilbert::{
    apply_collective_lowering, apply_collective_raising, one_body_sector_matrix, ExcitationBasis,
    StateVector,
};
use crate::lightfield::EffectiveHamiltonian;
use crate::C64;

/// A collective decay channel `L_ν = √γ_ν Σ_j φ_ν(j) σ_j`.
#[derive(Debug, Clone)]
pub struct JumpOp {
    /// rate `γ_ν` in units of γ0 (β included)
    pub rate: f64,
    /// orthonormal single-excitation mode `φ_ν`
    pub coeffs: Array1<C64>,
}

/// The complete set of decay channels, sorted by descending rate.
#[derive(Debug, Clone)]
pub struct JumpSet {
    pub ops: Vec<JumpOp>,
}

impl JumpSet {
    /// Total rate `Σ_ν γ_ν` (= trace of `2βH_im` on the one-excitation sector).
    pub fn total_rate(&self) -> f64 {
        self.ops.iter().map(|op| op.rate).sum()
    }

    pub fn max_rate(&self) -> f64 {
        self.ops.first().map_or(0.0, |op| op.rate)
    }
}

/// Decay channels of `H_eff`: eigenpairs of `2β H_im` on the one-excitation
/// sector. Channels below `1e-12 γ0` are dropped (outside-light-cone modes are
/// numerically zero and only add noise to channel selection).
pub fn derive_jumps(h: &EffectiveHamiltonian) -> Result<JumpSet> {
    let gamma_matrix = h.kernel_im().mapv(|x| 2.0 * h.beta * x);
    let (rates, modes) = gamma_matrix.eigh(UPLO::Lower)?;
    let floor = -1e-6 * h.beta.max(1e-12);
    if let Some(&worst) = rates.iter().find(|&&r| r < floor) {
        return Err(Error::ModelInconsistency(format!(
            "dissipative kernel has negative eigenvalue {worst}"
        )));
    }
    let mut ops: Vec<JumpOp> = rates
        .iter()
        .zip(modes.columns())
        .filter(|(&r, _)| r > 1e-12)
        .map(|(&r, v)| JumpOp {
            rate: r.max(0.0),
            coeffs: v.mapv(|x| C64::new(x, 0.0)),
        })
        .collect();
    ops.sort_by(|a, b| b.rate.total_cmp(&a.rate));
    Ok(JumpSet { ops })
}

/// Independent single-site decay at a uniform rate (the minimal-model channel
/// structure: the collective eigenmodes all share the same magnitude, so the
/// jumps are equivalent to individual atomic decays).
pub fn uniform_jumps(n_atoms: usize, rate: f64) -> JumpSet {
    let ops = (0..n_atoms)
        .map(|j| {
            let mut c = Array1::zeros(n_atoms);
            c[j] = C64::new(1.0, 0.0);
            JumpOp { rate, coeffs: c }
        })
        .collect();
    JumpSet { ops }
}

/// Coherent drive `Ω(σ†_k + σ_k)` in the rotating frame of the laser.
///
/// `frame_shift` is the per-excitation energy removed by the frame change
/// (`δ_L - ω0`, i.e. `Re ω_eff(k_ex)` when driving a band edge of the full
/// model), applied as `-frame_shift · N̂_e`.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct DriveSpec {
    pub rabi: f64,
    pub k_drive_d: f64,
    pub frame_shift: f64,
}

/// Spin-wave mode coefficients `e^{-ik z_j}/√N` of the driven mode.
fn drive_coeffs(n: usize, k_d: f64) -> Array1<C64> {
    let norm = 1.0 / (n as f64).sqrt();
    Array1::from_iter((1..=n).map(|m| C64::from_polar(norm, -k_d * m as f64)))
}

/// Full dense non-Hermitian generator on the truncated basis: one-body kernel
/// (with the rotating-frame shift on its diagonal) plus the drive, which is
/// the only term coupling different sectors. Raising past `n_max` is
/// projected out.
pub fn assemble_h_nh(
    basis: &Arc<ExcitationBasis>,
    kernel_nonh: &Array2<C64>,
    drive: Option<&DriveSpec>,
) -> Array2<C64> {
    let size = basis.size();
    let mut h = crate::hilbert::one_body_full_matrix(basis, &kernel_nonh.view());
    if let Some(d) = drive {
        let n = basis.n_atoms();
        let coeffs = drive_coeffs(n, d.k_drive_d);
        let mut col = Array1::zeros(size);
        let mut out = Array1::zeros(size);
        for i in 0..size {
            col.fill(C64::new(0.0, 0.0));
            col[i] = C64::new(1.0, 0.0);
            // lowering part Ω σ_k
            apply_collective_lowering(basis, coeffs.as_slice().unwrap(), &col.view(), &mut out);
            for r in 0..size {
                h[[r, i]] += d.rabi * out[r];
            }
            // raising part Ω σ_k†
            apply_collective_raising(basis, coeffs.as_slice().unwrap(), &col.view(), &mut out);
            for r in 0..size {
                h[[r, i]] += d.rabi * out[r];
            }
        }
        for (i, s) in basis.states().iter().enumerate() {
            h[[i, i]] -= C64::new(d.frame_shift * s.n_excited() as f64, 0.0);
        }
    }
    h
}

enum PropMode {
    /// `props[sector][level]` — block propagators, undriven dynamics only
    Sector(Vec<Vec<Array2<C64>>>),
    /// `props[level]` over the whole basis, plus the generator itself
    Full(Vec<Array2<C64>>, Array2<C64>),
}

/// MCWF propagation engine over a fixed basis, Hamiltonian and channel set.
pub struct McwfEngine {
    pub basis: Arc<ExcitationBasis>,
    pub jumps: JumpSet,
    pub drive: Option<DriveSpec>,
    pub record_dt: f64,
    levels: usize,
    mode: PropMode,
}

/// Propagation parameters of an ensemble run.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct McwfConfig {
    pub t_end: f64,
    pub n_traj: usize,
    pub seed: u64,
}

/// One recorded trajectory: normalized states on the record grid plus the
/// jump log. `top_leak` is the time-integrated norm² estimate of drive
/// components projected out at the truncation boundary.
pub struct TrajectoryData {
    pub stream: u64,
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
    pub jumps: Vec<(f64, usize)>,
    pub top_leak: f64,
}

/// Build an engine. The one-body `kernel_nonh` must already contain the full
/// non-Hermitian generator `H_re - iβH_im` consistent with `jumps` (so that
/// norm loss equals the total jump probability). `record_dt` sets the
/// observable grid; jump times are resolved to
/// `record_dt/2^L ≤ 0.01/(n_max·γ_max)`.
pub fn build_engine(
    basis: &Arc<ExcitationBasis>,
    kernel_nonh: &Array2<C64>,
    jumps: JumpSet,
    drive: Option<DriveSpec>,
    record_dt: f64,
) -> Result<McwfEngine> {
    if !(record_dt > 0.0) {
        return Err(Error::InvalidArgument("record_dt must be positive".into()));
    }
    let n = basis.n_atoms();
    if kernel_nonh.nrows() != n || kernel_nonh.ncols() != n {
        return Err(Error::InvalidArgument("one-body kernel must be N×N".into()));
    }
    for op in &jumps.ops {
        if op.coeffs.len() != n {
            return Err(Error::InvalidArgument("jump mode length must be N".into()));
        }
    }
    let loss_scale = jumps.max_rate() * basis.n_max as f64;
    let levels = if loss_scale > 0.0 {
        ((record_dt * loss_scale / 0.01).log2().ceil().max(0.0)) as usize
    } else {
        0
    };
    let minus_i = C64::new(0.0, -1.0);
    let fine_dt = record_dt / 2f64.powi(levels as i32);
    let ladder = |h: &Array2<C64>| -> Result<Vec<Array2<C64>>> {
        let mut props = vec![Array2::zeros((0, 0)); levels + 1];
        props[levels] = expm(&h.mapv(|x| minus_i * x * fine_dt))?;
        for l in (0..levels).rev() {
            props[l] = props[l + 1].dot(&props[l + 1]);
        }
        Ok(props)
    };
    let mode = if drive.is_none() {
        let mut per_sector = Vec::with_capacity(basis.n_max + 1);
        for s in 0..=basis.n_max {
            let h = one_body_sector_matrix(basis, &kernel_nonh.view(), s);
            per_sector.push(ladder(&h)?);
        }
        PropMode::Sector(per_sector)
    } else {
        let h = assemble_h_nh(basis, kernel_nonh, drive.as_ref());
        PropMode::Full(ladder(&h)?, h)
    };
    Ok(McwfEngine {
        basis: Arc::clone(basis),
        jumps,
        drive,
        record_dt,
        levels,
        mode,
    })
}

impl McwfEngine {
    /// Jump-time resolution `record_dt / 2^L`.
    pub fn fine_dt(&self) -> f64 {
        self.record_dt / 2f64.powi(self.levels as i32)
    }

    /// The dense non-Hermitian generator (full mode only).
    pub fn generator(&self) -> Option<&Array2<C64>> {
        match &self.mode {
            PropMode::Full(_, h) => Some(h),
            PropMode::Sector(_) => None,
        }
    }

    /// Dense jump operator `L_ν` over the whole basis (for oracles).
    pub fn dense_jump_op(&self, nu: usize) -> Array2<C64> {
        let size = self.basis.size();
        let op = &self.jumps.ops[nu];
        let scale = op.rate.sqrt();
        let mut m = Array2::zeros((size, size));
        let mut col = Array1::zeros(size);
        let mut out = Array1::zeros(size);
        for i in 0..size {
            col.fill(C64::new(0.0, 0.0));
            col[i] = C64::new(1.0, 0.0);
            apply_collective_lowering(
                &self.basis,
                op.coeffs.as_slice().unwrap(),
                &col.view(),
                &mut out,
            );
            for r in 0..size {
                m[[r, i]] = scale * out[r];
            }
        }
        m
    }
}

struct TrajState {
    /// full-basis amplitudes, kept normalized; zero outside `sector` when the
    /// engine runs sector-blocked
    amp: Array1<C64>,
    sector: usize,
}

impl McwfEngine {
    fn apply_prop(&self, st: &mut TrajState, level: usize) -> f64 {
        match &self.mode {
            PropMode::Sector(props) => {
                let range = self.basis.sector_range(st.sector);
                let u = &props[st.sector][level];
                let new = u.dot(&st.amp.slice(s![range.clone()]));
                st.amp.slice_mut(s![range]).assign(&new);
            }
            PropMode::Full(props, _) => {
                let new = props[level].dot(&st.amp);
                st.amp.assign(&new);
            }
        }
        let n2: f64 = st.amp.iter().map(|a| a.norm_sqr()).sum();
        let inv = 1.0 / n2.sqrt();
        st.amp.mapv_inplace(|a| a * inv);
        n2
    }

    fn do_jump(&self, st: &mut TrajState, rng: &mut ChaCha8Rng) -> Option<usize> {
        let mut weights = Vec::with_capacity(self.jumps.ops.len());
        let mut lowered: Vec<Array1<C64>> = Vec::with_capacity(self.jumps.ops.len());
        let mut out = Array1::zeros(st.amp.len());
        let mut total = 0.0;
        for op in &self.jumps.ops {
            apply_collective_lowering(
                &self.basis,
                op.coeffs.as_slice().unwrap(),
                &st.amp.view(),
                &mut out,
            );
            let w = op.rate * out.iter().map(|a| a.norm_sqr()).sum::<f64>();
            total += w;
            weights.push(w);
            lowered.push(out.clone());
        }
        if total <= 0.0 {
            return None;
        }
        let mut pick = rng.gen_range(0.0..total);
        let mut chosen = weights.len() - 1;
        for (nu, &w) in weights.iter().enumerate() {
            if pick < w {
                chosen = nu;
                break;
            }
            pick -= w;
        }
        st.amp.assign(&lowered[chosen]);
        let inv = 1.0 / st.amp.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        st.amp.mapv_inplace(|a| a * inv);
        if st.sector > 0 {
            st.sector -= 1;
        }
        Some(chosen)
    }

    /// Advance by `record_dt/2^level`, locating any survival crossing by
    /// descending the dyadic ladder. `t0` is the absolute time at entry.
    #[allow(clippy::too_many_arguments)]
    fn advance(
        &self,
        st: &mut TrajState,
        level: usize,
        t0: f64,
        surv: &mut f64,
        r: &mut f64,
        rng: &mut ChaCha8Rng,
        jump_log: &mut Vec<(f64, usize)>,
    ) -> Result<()> {
        let saved = st.amp.clone();
        let saved_sector = st.sector;
        let factor = self.apply_prop(st, level);
        let s_new = *surv * factor;
        let dt_l = self.record_dt / 2f64.powi(level as i32);
        if s_new >= *r {
            *surv = s_new;
            return Ok(());
        }
        if level == self.levels {
            if factor < 0.8 {
                return Err(Error::DtTooLarge(format!(
                    "norm² loss {:.2} in one fine step {dt_l}",
                    1.0 - factor
                )));
            }
            if let Some(nu) = self.do_jump(st, rng) {
                jump_log.push((t0 + dt_l, nu));
                *surv = 1.0;
                *r = rng.gen_range(0.0..1.0);
            } else {
                *surv = s_new;
            }
            return Ok(());
        }
        // crossing inside this interval: rewind and take it in two halves
        st.amp.assign(&saved);
        st.sector = saved_sector;
        self.advance(st, level + 1, t0, surv, r, rng, jump_log)?;
        self.advance(st, level + 1, t0 + dt_l / 2.0, surv, r, rng, jump_log)
    }
}

/// Run one trajectory. `stream` indexes the RNG stream so trajectories are
/// reproducible independently of scheduling.
pub fn mcwf_run(
    engine: &McwfEngine,
    psi0: &StateVector,
    t_end: f64,
    master_seed: u64,
    stream: u64,
) -> Result<TrajectoryData> {
    if !engine.basis.compatible(&psi0.basis) {
        return Err(Error::BasisMismatch("mcwf initial state".into()));
    }
    if !psi0.normalized {
        return Err(Error::InvalidArgument("initial state must be normalized".into()));
    }
    let sector = initial_sector(engine, psi0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream.wrapping_add(1));
    let mut st = TrajState { amp: psi0.amplitudes.clone(), sector };
    let n_steps = (t_end / engine.record_dt).round().max(1.0) as usize;
    let mut times = Vec::with_capacity(n_steps + 1);
    let mut states = Vec::with_capacity(n_steps + 1);
    let mut jump_log = Vec::new();
    let mut top_leak = 0.0;
    let mut surv = 1.0;
    let mut r = rng.gen_range(0.0..1.0);
    let snapshot = |amp: &Array1<C64>| StateVector {
        basis: Arc::clone(&engine.basis),
        amplitudes: amp.clone(),
        normalized: true,
    };
    times.push(0.0);
    states.push(snapshot(&st.amp));
    let leak_probe = engine.drive.map(|d| {
        (d.rabi, drive_coeffs(engine.basis.n_atoms(), d.k_drive_d))
    });
    let mut scratch = Array1::zeros(st.amp.len());
    for step in 0..n_steps {
        let t0 = step as f64 * engine.record_dt;
        engine.advance(&mut st, 0, t0, &mut surv, &mut r, &mut rng, &mut jump_log)?;
        if let Some((rabi, coeffs)) = &leak_probe {
            let leaked = apply_collective_raising(
                &engine.basis,
                coeffs.as_slice().unwrap(),
                &st.amp.view(),
                &mut scratch,
            );
            top_leak += engine.record_dt * rabi * rabi * leaked;
        }
        times.push(t0 + engine.record_dt);
        states.push(snapshot(&st.amp));
    }
    Ok(TrajectoryData { stream, times, states, jumps: jump_log, top_leak })
}

fn initial_sector(engine: &McwfEngine, psi0: &StateVector) -> Result<usize> {
    match &engine.mode {
        PropMode::Full(..) => Ok(0), // unused
        PropMode::Sector(_) => {
            let mut found = None;
            for n in 0..=engine.basis.n_max {
                let w: f64 = psi0.sector(n).iter().map(|a| a.norm_sqr()).sum();
                if w > 1e-24 {
                    if found.is_some() {
                        return Err(Error::InvalidArgument(
                            "undriven engine needs an initial state in a single \
                             excitation sector"
                                .into(),
                        ));
                    }
                    found = Some(n);
                }
            }
            Ok(found.unwrap_or(0))
        }
    }
}

/// Run `n_traj` trajectories in parallel, reducing each with `per_traj`;
/// results are collected in trajectory order regardless of scheduling.
pub fn mcwf_ensemble<O, F>(
    engine: &McwfEngine,
    psi0: &StateVector,
    cfg: &McwfConfig,
    per_traj: F,
) -> Result<Vec<O>>
where
    O: Send,
    F: Fn(&TrajectoryData) -> O + Sync,
{
    (0..cfg.n_traj as u64)
        .into_par_iter()
        .map(|stream| {
            let data = mcwf_run(engine, psi0, cfg.t_end, cfg.seed, stream)?;
            Ok(per_traj(&data))
        })
        .collect()
}

/// Deterministic conditional evolution `e^{-iKt}|ψ0⟩` on a uniform grid.
pub struct NoJumpPath {
    pub times: Vec<f64>,
    /// renormalized states
    pub states: Vec<StateVector>,
    /// cumulative `ln ‖e^{-iKt}ψ0‖²` (the survival exponent)
    pub log_norm2: Vec<f64>,
}

/// No-jump trajectory under the one-body generator `kernel_nonh`, renormalized
/// at each step with the survival weight tracked in log space so deeply
/// subradiant evolution cannot underflow.
pub fn no_jump_evolve(
    basis: &Arc<ExcitationBasis>,
    kernel_nonh: &Array2<C64>,
    psi0: &StateVector,
    dt: f64,
    n_steps: usize,
) -> Result<NoJumpPath> {
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument("dt must be positive".into()));
    }
    if !psi0.normalized {
        return Err(Error::InvalidArgument("initial state must be normalized".into()));
    }
    let minus_i = C64::new(0.0, -1.0);
    let h = crate::hilbert::one_body_full_matrix(basis, &kernel_nonh.view());
    let u = expm(&h.mapv(|x| minus_i * x * dt))?;
    let mut amp = psi0.amplitudes.clone();
    let mut log_n2 = 0.0;
    let mut path = NoJumpPath {
        times: vec![0.0],
        states: vec![psi0.clone()],
        log_norm2: vec![0.0],
    };
    for step in 1..=n_steps {
        amp = u.dot(&amp);
        let n2: f64 = amp.iter().map(|a| a.norm_sqr()).sum();
        if n2 < 1e-280 {
            return Err(Error::Precision("no-jump norm underflow".into()));
        }
        log_n2 += n2.ln();
        let inv = 1.0 / n2.sqrt();
        amp.mapv_inplace(|a| a * inv);
        path.times.push(step as f64 * dt);
        path.states.push(StateVector {
            basis: Arc::clone(basis),
            amplitudes: amp.clone(),
            normalized: true,
        });
        path.log_norm2.push(log_n2);
    }
    Ok(path)
}

/// Fixed-step RK4 integration of the Lindblad master equation
/// `ρ' = -i(H_nh ρ - ρ H_nh†) + Σ_ν L_ν ρ L_ν†` with dense matrices; the
/// independent oracle for the MCWF engine.
pub fn lindblad_rk4(
    h_nh: &Array2<C64>,
    jump_ops: &[Array2<C64>],
    rho0: &Array2<C64>,
    dt: f64,
    n_steps: usize,
    record_every: usize,
) -> Result<Vec<(f64, Array2<C64>)>> {
    if record_every == 0 {
        return Err(Error::InvalidArgument("record_every must be >= 1".into()));
    }
    let minus_i = C64::new(0.0, -1.0);
    let h_dag = h_nh.t().mapv(|x| x.conj());
    let l_dags: Vec<Array2<C64>> =
        jump_ops.iter().map(|l| l.t().mapv(|x| x.conj())).collect();
    let deriv = |rho: &Array2<C64>| -> Array2<C64> {
        let mut d = (h_nh.dot(rho) - rho.dot(&h_dag)).mapv(|x| minus_i * x);
        for (l, ld) in jump_ops.iter().zip(&l_dags) {
            d = d + l.dot(rho).dot(ld);
        }
        d
    };
    let mut rho = rho0.clone();
    let mut out = vec![(0.0, rho.clone())];
    for step in 1..=n_steps {
        let k1 = deriv(&rho);
        let k2 = deriv(&(&rho + &k1.mapv(|x| x * (dt / 2.0))));
        let k3 = deriv(&(&rho + &k2.mapv(|x| x * (dt / 2.0))));
        let k4 = deriv(&(&rho + &k3.mapv(|x| x * dt)));
        rho = &rho
            + &(k1 + k2.mapv(|x| x * 2.0) + k3.mapv(|x| x * 2.0) + k4)
                .mapv(|x| x * (dt / 6.0));
        if step % record_every == 0 {
            out.push((step as f64 * dt, rho.clone()));
        }
    }
    Ok(out)
}

/// Steady-state collection parameters.
#[derive(Debug, Clone, Copy)]
pub struct SteadyStateConfig {
    pub n_traj: usize,
    pub t_settle: f64,
    pub t_window: f64,
    pub samples_per_traj: usize,
    pub seed: u64,
}

/// Late-time state samples across trajectories, with per-trajectory streams
/// logged and a stationarity audit over the sampling window.
pub struct SteadyStateEnsemble {
    pub states: Vec<StateVector>,
    pub streams: Vec<u64>,
    /// mean excitation over the first / second half of the window
    pub halves: (f64, f64),
    pub mean_top_leak: f64,
}

/// Propagate to a settled window and sample states from it. Fails with
/// `NotConverged` when the mean excitation of the two window halves disagrees
/// beyond 4 standard errors (the window is then too early or too short).
pub fn steady_state_ensemble(
    engine: &McwfEngine,
    psi0: &StateVector,
    cfg: &SteadyStateConfig,
) -> Result<SteadyStateEnsemble> {
    if cfg.samples_per_traj < 2 {
        return Err(Error::InvalidArgument("need at least 2 samples per trajectory".into()));
    }
    let t_end = cfg.t_settle + cfg.t_window;
    let run_cfg = McwfConfig { t_end, n_traj: cfg.n_traj, seed: cfg.seed };
    let per: Vec<(Vec<StateVector>, f64, f64, f64)> =
        mcwf_ensemble(engine, psi0, &run_cfg, |data| {
            let n = data.times.len();
            let start = data
                .times
                .iter()
                .position(|&t| t >= cfg.t_settle)
                .unwrap_or(n - 1);
            let span = n - start;
            let mut samples = Vec::with_capacity(cfg.samples_per_traj);
            for j in 0..cfg.samples_per_traj {
                let idx = start + (j * (span - 1)) / (cfg.samples_per_traj - 1).max(1);
                samples.push(data.states[idx].clone());
            }
            let half = start + span / 2;
            let mean_exc = |range: std::ops::Range<usize>| {
                let len = range.len().max(1) as f64;
                range.map(|i| data.states[i].mean_excitation()).sum::<f64>() / len
            };
            (samples, mean_exc(start..half), mean_exc(half..n), data.top_leak)
        })?;
    let n_traj = per.len() as f64;
    let h1: Vec<f64> = per.iter().map(|p| p.1).collect();
    let h2: Vec<f64> = per.iter().map(|p| p.2).collect();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / n_traj;
    let (m1, m2) = (mean(&h1), mean(&h2));
    let var = |v: &[f64], m: f64| {
        v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n_traj - 1.0).max(1.0)
    };
    let se = ((var(&h1, m1) + var(&h2, m2)) / n_traj).sqrt();
    if (m1 - m2).abs() > 4.0 * se.max(1e-12) && (m1 - m2).abs() > 1e-6 {
        return Err(Error::NotConverged(format!(
            "window halves disagree: <N_e> = {m1:.6} vs {m2:.6} (se {se:.2e}); \
             increase t_settle or t_window"
        )));
    }
    let mean_top_leak = per.iter().map(|p| p.3).sum::<f64>() / n_traj;
    let mut states = Vec::new();
    let mut streams = Vec::new();
    for (i, p) in per.into_iter().enumerate() {
        streams.push(i as u64);
        states.extend(p.0);
    }
    Ok(SteadyStateEnsemble { states, streams, halves: (m1, m2), mean_top_leak })
}
