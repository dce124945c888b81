//! `subwave` — batch front end for the chain-of-atoms simulator.
//!
//! Each subcommand runs one experiment and writes CSV (and, for trajectory
//! ensembles, line-oriented JSON) into the output directory, then prints a
//! manifest with the resolved-config hash, master seed and file list.
//! Identical config + seed reproduces byte-identical data files; only the
//! timestamp manifest comment differs between runs.

mod config;

use std::path::PathBuf;
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use ndarray::prelude::*;
use ndarray_linalg::Eig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use subwave_core::ansatz::{
    boson_state, fermion_state, minimal_dissipative_kernels, q_grid, u_pi, FermionString,
};
use subwave_core::dynamics::{
    build_engine, derive_jumps, mcwf_ensemble, no_jump_evolve, uniform_jumps, DriveSpec,
    McwfConfig, TrajectoryData,
};
use subwave_core::export::{fmt, write_csv, write_jsonl, write_matrix_csv, TrajectoryRecord};
use subwave_core::hilbert::{ArrayGeometry, ExcitationBasis, StateVector};
use subwave_core::lightfield::{
    band_edge, build_h_eff, dispersion_scan, BandEdge, EdgeKind,
};
use subwave_core::observables::{
    bootstrap_mean_se, delta_h_elements, fidelity, fidelity_scan, g2_value, loglog_slope,
    pair_gram, pk_integrated, rbeta, renormalize_pk, sigma_k_norm_bound,
    collective_spin_spectrum, MomentumGrid,
};
use subwave_core::C64;

use config::ExperimentConfig;

const PI: f64 = std::f64::consts::PI;

#[derive(Parser)]
#[command(name = "subwave", version, about = "Simulator for multiply-excited states of 1D subwavelength atom arrays")]
struct Cli {
    /// TOML configuration file; flags override its values
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Overrides {
    /// number of atoms
    #[arg(long, global = true)]
    n: Option<usize>,
    /// lattice constant k0·d
    #[arg(long, global = true)]
    kd: Option<f64>,
    /// excitation-number truncation
    #[arg(long, global = true)]
    n_max: Option<usize>,
    /// dissipative scale β
    #[arg(long, global = true)]
    beta: Option<f64>,
    /// Rabi frequency Ω in γ0
    #[arg(long, global = true)]
    omega: Option<f64>,
    /// number of trajectories
    #[arg(long, global = true)]
    traj: Option<usize>,
    /// record step in 1/γ0
    #[arg(long, global = true)]
    dt: Option<f64>,
    /// trajectory horizon in 1/γ0
    #[arg(long, global = true)]
    t_end: Option<f64>,
    /// settling time in 1/γ0 (0 = auto)
    #[arg(long, global = true)]
    settle: Option<f64>,
    /// sampling window in 1/γ0 (0 = auto)
    #[arg(long, global = true)]
    window: Option<f64>,
    /// master RNG seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// grid size (dispersion points)
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// P_k grid size
    #[arg(long, global = true)]
    k_points: Option<usize>,
    /// G-map per-axis grid size
    #[arg(long, global = true)]
    g_points: Option<usize>,
    /// band-edge family: zero | pi
    #[arg(long, global = true)]
    edge: Option<String>,
    /// dissipation model: full | minimal
    #[arg(long, global = true)]
    model: Option<String>,
    /// excitation number (0 = all up to n_max)
    #[arg(long, global = true)]
    ne: Option<usize>,
    /// match only the top_m most sub-/superradiant eigenstates (0 = all)
    #[arg(long, global = true)]
    top_m: Option<usize>,
    /// scheme-1 arrest time in 1/γ0 (negative = auto)
    #[arg(long, global = true)]
    arrest_time: Option<f64>,
    /// random samples for the bounds check
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// chain lengths for the scaling experiment
    #[arg(long, global = true, value_delimiter = ',')]
    n_list: Option<Vec<usize>>,
    /// output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Single-excitation band structure ω_eff(k)
    Dispersion,
    /// Complex eigenvalue spectrum of the excitation sectors
    Spectrum,
    /// Detection scheme 1: dissipative preparation + momentum-resolved emission
    Scheme1,
    /// Detection scheme 2: weak-drive steady state + two-photon correlations
    Scheme2,
    /// Randomized check of the spin-wave occupation bound
    Bounds,
    /// Finite-size scaling of ΔH elements and off-edge occupations
    Scaling,
    /// Eigenstate fidelities against the free-fermion family
    FidelityScan,
    /// Spectrum of the collective-spin operator S†S
    SpinSpectrum,
    /// Dry-run report: basis/memory estimates, dt bound, r_β
    Validate,
}

impl Cmd {
    fn name(&self) -> &'static str {
        match self {
            Cmd::Dispersion => "dispersion",
            Cmd::Spectrum => "spectrum",
            Cmd::Scheme1 => "scheme1",
            Cmd::Scheme2 => "scheme2",
            Cmd::Bounds => "bounds",
            Cmd::Scaling => "scaling",
            Cmd::FidelityScan => "fidelity-scan",
            Cmd::SpinSpectrum => "spin-spectrum",
            Cmd::Validate => "validate",
        }
    }
}

fn apply_overrides(cfg: &mut ExperimentConfig, ov: &Overrides) {
    macro_rules! set {
        ($($field:ident),*) => {
            $(if let Some(v) = &ov.$field { cfg.$field = v.clone(); })*
        };
    }
    set!(
        n, kd, n_max, beta, omega, traj, dt, t_end, settle, window, seed, grid, k_points,
        g_points, edge, model, ne, top_m, arrest_time, samples, n_list, out
    );
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let mut cfg = config::load(cli.config.as_ref())?;
    apply_overrides(&mut cfg, &cli.overrides);
    cfg.experiment = cfg.experiment.clone(); // name from the file is informational
    cfg.validate().context("invalid configuration")?;

    let mut run = Run::new(cfg, cli.cmd.name());
    match cli.cmd {
        Cmd::Dispersion => run.dispersion()?,
        Cmd::Spectrum => run.spectrum()?,
        Cmd::Scheme1 => run.scheme1()?,
        Cmd::Scheme2 => run.scheme2()?,
        Cmd::Bounds => run.bounds()?,
        Cmd::Scaling => run.scaling()?,
        Cmd::FidelityScan => run.fidelity_scan()?,
        Cmd::SpinSpectrum => run.spin_spectrum()?,
        Cmd::Validate => run.validate_report()?,
    }
    run.print_manifest();
    Ok(())
}

struct Run {
    cfg: ExperimentConfig,
    experiment: &'static str,
    hash: String,
    files: Vec<PathBuf>,
    notes: Vec<(String, String)>,
}

impl Run {
    fn new(cfg: ExperimentConfig, experiment: &'static str) -> Self {
        let hash = cfg.hash();
        Run { cfg, experiment, hash, files: Vec::new(), notes: Vec::new() }
    }

    fn note(&mut self, key: &str, value: String) {
        self.notes.push((key.to_string(), value));
    }

    /// Manifest comment lines for output files. The timestamp line is the
    /// only one that varies between identical runs.
    fn manifest(&self) -> Vec<(String, String)> {
        let ts = SystemTime::now().duration_since(UNIX_EPOCH).unwrap().as_secs();
        let mut m = vec![
            ("timestamp_unix".to_string(), ts.to_string()),
            ("experiment".to_string(), self.experiment.to_string()),
            ("config_hash".to_string(), self.hash.clone()),
            ("seed".to_string(), self.cfg.seed.to_string()),
            ("units".to_string(), "rates in gamma0, lengths in d, times in 1/gamma0".to_string()),
        ];
        m.extend(self.notes.iter().cloned());
        m
    }

    fn out_path(&mut self, name: &str) -> Result<PathBuf> {
        std::fs::create_dir_all(&self.cfg.out)?;
        let p = self.cfg.out.join(name);
        self.files.push(p.clone());
        Ok(p)
    }

    fn print_manifest(&self) {
        println!("experiment: {}", self.experiment);
        println!("config_hash: {}", self.hash);
        println!("seed: {}", self.cfg.seed);
        for (k, v) in &self.notes {
            println!("{k}: {v}");
        }
        if self.files.is_empty() {
            println!("files: none");
        } else {
            println!("files:");
            for f in &self.files {
                println!("  {}", f.display());
            }
        }
    }

    fn basis(&self) -> Result<Arc<ExcitationBasis>> {
        self.basis_for(self.cfg.n, self.cfg.n_max)
    }

    fn basis_for(&self, n: usize, n_max: usize) -> Result<Arc<ExcitationBasis>> {
        let g = ArrayGeometry::parallel_dipoles(n, self.cfg.kd)?;
        Ok(ExcitationBasis::build(g, n_max)?)
    }

    fn edge_kind(&self) -> EdgeKind {
        if self.cfg.edge == "pi" { EdgeKind::Pi } else { EdgeKind::Zero }
    }

    fn band(&self) -> Result<BandEdge> {
        Ok(band_edge(self.cfg.kd, self.edge_kind())?)
    }

    // ------------------------------------------------------------------
    fn dispersion(&mut self) -> Result<()> {
        let scan = dispersion_scan(self.cfg.kd, self.cfg.grid);
        for kind in [EdgeKind::Zero, EdgeKind::Pi] {
            let e = band_edge(self.cfg.kd, kind)?;
            self.note(
                &format!("band_edge_{kind:?}").to_lowercase(),
                format!(
                    "k_ex_d={:.6} re_omega={:.6} gamma={:.6} re_a2={:.6}",
                    e.k_ex_d,
                    e.omega_ex.re,
                    e.gamma_ex(),
                    e.a2.re
                ),
            );
        }
        let path = self.out_path("dispersion.csv")?;
        write_csv(
            &path,
            &self.manifest(),
            &["k_d_over_pi", "re_omega_eff_gamma0", "gamma_gamma0"],
            scan.iter().map(|&(k, re, g)| vec![fmt(k / PI), fmt(re), fmt(g)]),
        )?;
        Ok(())
    }

    // ------------------------------------------------------------------
    fn spectrum(&mut self) -> Result<()> {
        let b = self.basis()?;
        let h = build_h_eff(&b, self.cfg.beta)?;
        let sectors: Vec<usize> = if self.cfg.ne > 0 {
            vec![self.cfg.ne]
        } else {
            (1..=self.cfg.n_max).collect()
        };
        let mut rows = Vec::new();
        for &n_e in &sectors {
            let m = h.sector_matrix(n_e);
            let (evals, _) = m.eig()?;
            let mut lams: Vec<C64> = evals.to_vec();
            lams.sort_by(|a, b| {
                (-2.0 * a.im).total_cmp(&(-2.0 * b.im)).then(a.re.total_cmp(&b.re))
            });
            for (i, lam) in lams.iter().enumerate() {
                rows.push(vec![
                    n_e.to_string(),
                    i.to_string(),
                    fmt(lam.re),
                    fmt(-2.0 * lam.im),
                ]);
            }
        }
        let path = self.out_path("spectrum.csv")?;
        write_csv(
            &path,
            &self.manifest(),
            &["n_e", "index_by_decay", "re_omega_gamma0", "gamma_gamma0"],
            rows,
        )?;
        Ok(())
    }

    // ------------------------------------------------------------------
    fn scheme1(&mut self) -> Result<()> {
        if self.cfg.n_max < 3 {
            bail!("scheme1 needs n_max >= 3 (triply excited initial state)");
        }
        let b = self.basis()?;
        let h = build_h_eff(&b, self.cfg.beta)?;
        let b000 = boson_state(&b, EdgeKind::Zero, &[0, 0, 0])?;
        let shift = u_pi(&b);
        let mut psi0 = shift.apply(&b000)?;
        psi0.normalize()?;
        let f_pi = fermion_state(&b, &FermionString::new(EdgeKind::Pi, vec![1, 2, 3])?)?;
        let f_zero = fermion_state(&b, &FermionString::new(EdgeKind::Zero, vec![1, 2, 3])?)?;

        // conditional no-jump evolution and the F_b = F_f arrest point
        let fid_dt = 0.5;
        let horizon = if self.cfg.arrest_time >= 0.0 {
            (1.2 * self.cfg.arrest_time + 10.0).max(100.0)
        } else {
            2000.0
        };
        let n_steps = (horizon / fid_dt).ceil() as usize;
        let path_nj = no_jump_evolve(&b, &h.kernel_nonh(), &psi0, fid_dt, n_steps)?;
        let fb: Vec<f64> =
            path_nj.states.iter().map(|s| fidelity(&psi0, s)).collect::<Result<_, _>>()?;
        let ff: Vec<f64> =
            path_nj.states.iter().map(|s| fidelity(&f_pi, s)).collect::<Result<_, _>>()?;
        let arrest_idx = if self.cfg.arrest_time >= 0.0 {
            ((self.cfg.arrest_time / fid_dt).round() as usize).min(n_steps)
        } else {
            (1..fb.len())
                .find(|&i| fb[i] <= ff[i])
                .context("no F_b = F_f crossing within the no-jump horizon")?
        };
        let arrest_time = path_nj.times[arrest_idx];
        self.note("arrest_time_gamma0", format!("{arrest_time:.4}"));
        let fid_path = self.out_path("scheme1_fidelities.csv")?;
        write_csv(
            &fid_path,
            &self.manifest(),
            &["t_gamma0", "f_boson", "f_fermion", "log_survival"],
            path_nj.times.iter().enumerate().map(|(i, &t)| {
                vec![fmt(t), fmt(fb[i]), fmt(ff[i]), fmt(path_nj.log_norm2[i])]
            }),
        )?;
        let mut psi_inter = shift.apply(&path_nj.states[arrest_idx])?;
        psi_inter.normalize()?;

        // momentum-resolved emission of the three preparations
        let jumps = derive_jumps(&h)?;
        let engine = build_engine(&b, &h.kernel_nonh(), jumps, None, self.cfg.dt)?;
        let grid = MomentumGrid::uniform(self.cfg.k_points, self.cfg.kd)?;
        let mut profiles = Vec::new();
        let mut first_records: Option<Vec<TrajectoryRecord>> = None;
        for (label, state, seed_off) in [
            ("b000", &b000, 0u64),
            ("inter", &psi_inter, 1),
            ("f123", &f_zero, 2),
        ] {
            let mcfg = McwfConfig {
                t_end: self.cfg.t_end,
                n_traj: self.cfg.traj,
                seed: self.cfg.seed.wrapping_add(seed_off),
            };
            let grid_ref = &grid;
            let per: Vec<(Array1<f64>, f64, Vec<f64>, Vec<f64>, Vec<(f64, usize)>, u64)> =
                mcwf_ensemble(&engine, state, &mcfg, move |d: &TrajectoryData| {
                    let (pk, emitted) = pk_integrated(d, grid_ref);
                    let nexc: Vec<f64> =
                        d.states.iter().map(|s| s.mean_excitation()).collect();
                    (pk, emitted, nexc, d.times.clone(), d.jumps.clone(), d.stream)
                })?;
            let samples: Vec<Array1<f64>> = per.iter().map(|p| p.0.clone()).collect();
            let emitted = per.iter().map(|p| p.1).sum::<f64>() / per.len() as f64;
            let (mean, se) = bootstrap_mean_se(&samples, 100, mcfg.seed)?;
            let norm = renormalize_pk(&mean, &grid, emitted);
            let scale = if mean.sum() > 0.0 { norm.sum() / mean.sum() } else { 1.0 };
            profiles.push((label, norm, se.mapv(|s| s * scale)));
            self.note(&format!("emitted_{label}"), format!("{emitted:.5}"));
            if first_records.is_none() {
                first_records = Some(
                    per.iter()
                        .map(|(_, _, nexc, times, jumps, stream)| TrajectoryRecord {
                            stream: *stream,
                            master_seed: mcfg.seed,
                            times: times.clone(),
                            observables: nexc.iter().map(|&x| vec![x]).collect(),
                            jumps: jumps.clone(),
                            top_leak: 0.0,
                        })
                        .collect(),
                );
            }
        }
        let pk_path = self.out_path("scheme1_pk.csv")?;
        write_csv(
            &pk_path,
            &self.manifest(),
            &[
                "k_d_over_pi",
                "pk_b000",
                "se_b000",
                "pk_inter",
                "se_inter",
                "pk_f123",
                "se_f123",
            ],
            (0..grid.len()).map(|i| {
                let mut row = vec![fmt(grid.k_d[i] / PI)];
                for (_, mean, se) in &profiles {
                    row.push(fmt(mean[i]));
                    row.push(fmt(se[i]));
                }
                row
            }),
        )?;
        let jsonl_path = self.out_path("scheme1_trajectories.jsonl")?;
        write_jsonl(&jsonl_path, &first_records.unwrap())?;
        Ok(())
    }

    // ------------------------------------------------------------------
    fn scheme2(&mut self) -> Result<()> {
        if self.cfg.n_max < 2 {
            bail!("scheme2 needs n_max >= 2 (two-photon correlations)");
        }
        let b = self.basis()?;
        let n = self.cfg.n;
        let beta = self.cfg.beta;
        let edge = self.band()?;
        let (kernel, jumps, frame_shift) = if self.cfg.model == "minimal" {
            let (h_re, h_im) = minimal_dissipative_kernels(n, &edge);
            let kernel = Array2::from_shape_fn((n, n), |(i, j)| {
                C64::new(h_re[[i, j]], -beta * h_im[[i, j]])
            });
            (kernel, uniform_jumps(n, beta * edge.gamma_ex()), 0.0)
        } else {
            let h = build_h_eff(&b, beta)?;
            let jumps = derive_jumps(&h)?;
            let shift = if self.cfg.resonance == "band-edge" { edge.omega_ex.re } else { 0.0 };
            (h.kernel_nonh(), jumps, shift)
        };
        let drive = DriveSpec {
            rabi: self.cfg.omega,
            k_drive_d: self.cfg.k_drive_over_pi * PI + edge.k_ex_d,
            frame_shift,
        };
        let engine = build_engine(&b, &kernel, jumps, Some(drive), self.cfg.dt)?;
        self.note("r_beta", format!("{:.6}", rbeta(&edge, n, beta)?));

        let relax = 1.0 / (beta * edge.gamma_ex());
        let settle = if self.cfg.settle > 0.0 { self.cfg.settle } else { 30.0 * relax };
        let window = if self.cfg.window > 0.0 { self.cfg.window } else { 10.0 * relax };
        let t_end = settle + window;
        self.note("t_settle_gamma0", format!("{settle:.2}"));
        self.note("t_window_gamma0", format!("{window:.2}"));
        let records = (t_end / self.cfg.dt).ceil() as usize;
        let win_start = ((settle / self.cfg.dt).ceil() as usize).min(records);
        let samples_per_traj = 5usize;

        let f12 = fermion_state(&b, &FermionString::new(edge.kind, vec![1, 2])?)?;
        let b00 = boson_state(&b, edge.kind, &[0, 0])?;
        let mcfg = McwfConfig { t_end, n_traj: self.cfg.traj, seed: self.cfg.seed };
        let f12_ref = &f12;
        let b00_ref = &b00;
        type Trace = Vec<[f64; 3]>;
        let per: Vec<(Trace, Vec<StateVector>)> =
            mcwf_ensemble(&engine, &b.ground_state(), &mcfg, move |d: &TrajectoryData| {
                let trace: Trace = d
                    .states
                    .iter()
                    .map(|s| {
                        let p2: f64 = s.sector(2).iter().map(|a| a.norm_sqr()).sum();
                        let ipf: C64 = f12_ref
                            .sector(2)
                            .iter()
                            .zip(s.sector(2).iter())
                            .map(|(a, c)| a.conj() * c)
                            .sum();
                        let ipb: C64 = b00_ref
                            .sector(2)
                            .iter()
                            .zip(s.sector(2).iter())
                            .map(|(a, c)| a.conj() * c)
                            .sum();
                        [p2, ipf.norm_sqr(), ipb.norm_sqr()]
                    })
                    .collect();
                let n_rec = d.states.len();
                let picks: Vec<StateVector> = (0..samples_per_traj)
                    .map(|j| {
                        let idx = win_start
                            + (n_rec - 1 - win_start) * j / (samples_per_traj - 1).max(1);
                        d.states[idx].clone()
                    })
                    .collect();
                (trace, picks)
            })?;

        // ensemble-averaged fidelity traces of the two-excitation component
        let n_traj = per.len() as f64;
        let n_rec = per[0].0.len();
        let mut mean = vec![[0.0f64; 3]; n_rec];
        for (trace, _) in &per {
            for (i, row) in trace.iter().enumerate() {
                for j in 0..3 {
                    mean[i][j] += row[j] / n_traj;
                }
            }
        }
        let trace_path = self.out_path("scheme2_fidelity.csv")?;
        write_csv(
            &trace_path,
            &self.manifest(),
            &["t_gamma0", "p2", "f12_fidelity", "b00_fidelity"],
            mean.iter().enumerate().map(|(i, row)| {
                let p2 = row[0].max(1e-300);
                vec![
                    fmt(i as f64 * self.cfg.dt),
                    fmt(row[0]),
                    fmt(row[1] / p2),
                    fmt(row[2] / p2),
                ]
            }),
        )?;

        // steady-state fidelities and stationarity audit over the window
        let wlen = n_rec - win_start;
        let half = |range: std::ops::Range<usize>| -> f64 {
            range.clone().map(|i| mean[i][0]).sum::<f64>() / range.len().max(1) as f64
        };
        let h1 = half(win_start..win_start + wlen / 2);
        let h2 = half(win_start + wlen / 2..n_rec);
        self.note("window_halves_p2", format!("{h1:.3e} {h2:.3e}"));
        let (sw, sf, sb) = mean[win_start..].iter().fold((0.0, 0.0, 0.0), |acc, r| {
            (acc.0 + r[0], acc.1 + r[1], acc.2 + r[2])
        });
        self.note("steady_f12_fidelity", format!("{:.4}", sf / sw.max(1e-300)));
        self.note("steady_b00_fidelity", format!("{:.4}", sb / sw.max(1e-300)));

        // two-photon correlation map from the window samples
        let states: Vec<StateVector> =
            per.iter().flat_map(|(_, s)| s.iter().cloned()).collect();
        let gram = pair_gram(&states)?;
        let g_grid: Vec<f64> = (0..self.cfg.g_points)
            .map(|i| self.cfg.g_max_over_pi * PI * i as f64 / (self.cfg.g_points - 1) as f64)
            .collect();
        let mut gmap: Array2<f64> = Array2::zeros((g_grid.len(), g_grid.len()));
        for (i, &k1) in g_grid.iter().enumerate() {
            for (j, &k2) in g_grid.iter().enumerate() {
                gmap[[i, j]] = g2_value(&gram, k1, k2);
            }
        }
        let gmap_path = self.out_path("scheme2_gmap.csv")?;
        let grid_over_pi: Vec<f64> = g_grid.iter().map(|k| k / PI).collect();
        write_matrix_csv(&gmap_path, &self.manifest(), "k_d_over_pi", &grid_over_pi, &gmap)?;
        let cuts_path = self.out_path("scheme2_gcuts.csv")?;
        write_csv(
            &cuts_path,
            &self.manifest(),
            &["k_d_over_pi", "g_diagonal", "g_antidiagonal"],
            g_grid.iter().map(|&k| {
                vec![fmt(k / PI), fmt(g2_value(&gram, k, k)), fmt(g2_value(&gram, k, -k))]
            }),
        )?;
        Ok(())
    }

    // ------------------------------------------------------------------
    fn bounds(&mut self) -> Result<()> {
        let n = self.cfg.n;
        let b = self.basis_for(n, 3)?;
        let q = q_grid(n);
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        let mut rows = Vec::new();
        let mut violations = 0usize;
        while rows.len() < self.cfg.samples {
            let n_e = rng.gen_range(1..=3usize);
            let mut xis: Vec<usize> = Vec::new();
            while xis.len() < n_e {
                let xi = rng.gen_range(1..=(n / 4).max(1));
                if !xis.contains(&xi) {
                    xis.push(xi);
                }
            }
            let edge = if rng.gen_bool(0.5) { EdgeKind::Zero } else { EdgeKind::Pi };
            let string = FermionString::new(edge, xis)?;
            let k_d: f64 = rng.gen_range(-PI..PI);
            let k_rel = k_d - string.edge.k_ex_d();
            let near_pole = string.xis.iter().any(|&xi| {
                [1.0f64, -1.0].iter().any(|s| {
                    let arg = (k_rel - s * q[xi - 1]) / 2.0;
                    (arg - PI * (arg / PI).round()).abs() < 1e-3
                })
            });
            if near_pole {
                continue;
            }
            let (lhs, rhs) = sigma_k_norm_bound(&b, &string, k_d)?;
            if lhs >= rhs {
                violations += 1;
            }
            let xis_str =
                string.xis.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";");
            rows.push(vec![
                format!("{:?}", string.edge).to_lowercase(),
                xis_str,
                fmt(k_d / PI),
                fmt(lhs),
                fmt(rhs),
                (lhs < rhs).to_string(),
            ]);
        }
        self.note("violations", violations.to_string());
        let path = self.out_path("bounds.csv")?;
        write_csv(
            &path,
            &self.manifest(),
            &["edge", "xis", "k_d_over_pi", "lhs_norm", "rhs_bound", "holds"],
            rows,
        )?;
        if violations > 0 {
            bail!("{violations} bound violations detected");
        }
        Ok(())
    }

    // ------------------------------------------------------------------
    fn scaling(&mut self) -> Result<()> {
        let edge_pi = band_edge(self.cfg.kd, EdgeKind::Pi)?;
        let mut xs = Vec::new();
        let mut dh = Vec::new();
        let mut occ = Vec::new();
        let mut rows = Vec::new();
        for &n in &self.cfg.n_list.clone() {
            let b = self.basis_for(n, 2)?;
            let h = build_h_eff(&b, self.cfg.beta)?;
            let strings = vec![FermionString::new(EdgeKind::Pi, vec![1, 2])?];
            let m = delta_h_elements(&h, &edge_pi, &strings)?;
            let s0 = FermionString::new(EdgeKind::Zero, vec![1, 2])?;
            let (lhs, _) = sigma_k_norm_bound(&b, &s0, PI / 2.0)?;
            xs.push(n as f64);
            dh.push(m[[0, 0]].norm());
            occ.push(lhs * lhs);
            rows.push(vec![n.to_string(), fmt(m[[0, 0]].norm()), fmt(lhs * lhs)]);
        }
        self.note("delta_h_slope", format!("{:.4}", loglog_slope(&xs, &dh)?));
        self.note("occupation_slope", format!("{:.4}", loglog_slope(&xs, &occ)?));
        let path = self.out_path("scaling.csv")?;
        write_csv(
            &path,
            &self.manifest(),
            &["n_atoms", "delta_h_abs_gamma0", "occupation_at_half_pi"],
            rows,
        )?;
        Ok(())
    }

    // ------------------------------------------------------------------
    fn fidelity_scan(&mut self) -> Result<()> {
        let b = self.basis()?;
        let h = build_h_eff(&b, self.cfg.beta)?;
        let sectors: Vec<usize> = if self.cfg.ne > 0 {
            vec![self.cfg.ne]
        } else {
            (1..=self.cfg.n_max).collect()
        };
        let top_m = if self.cfg.top_m > 0 { Some(self.cfg.top_m) } else { None };
        let mut rows = Vec::new();
        for &n_e in &sectors {
            let scan = fidelity_scan(&h, n_e, top_m)?;
            for r in &scan {
                let xis_str =
                    r.string.xis.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";");
                rows.push(vec![
                    n_e.to_string(),
                    fmt(r.eigenvalue.re),
                    fmt(r.decay_rate),
                    format!("{:?}", r.string.edge).to_lowercase(),
                    xis_str,
                    fmt(r.fidelity),
                ]);
            }
        }
        let path = self.out_path("fidelity_scan.csv")?;
        write_csv(
            &path,
            &self.manifest(),
            &["n_e", "re_omega_gamma0", "gamma_gamma0", "best_edge", "best_xis", "fidelity"],
            rows,
        )?;
        Ok(())
    }

    // ------------------------------------------------------------------
    fn spin_spectrum(&mut self) -> Result<()> {
        if self.cfg.n > 14 {
            bail!("spin-spectrum uses the full 2^N space; use n <= 14");
        }
        let sectors: Vec<usize> = if self.cfg.ne > 0 {
            vec![self.cfg.ne]
        } else {
            (1..=self.cfg.n_max.min(self.cfg.n / 2)).collect()
        };
        let mut rows = Vec::new();
        for &n_e in &sectors {
            let s = collective_spin_spectrum(self.cfg.n, n_e)?;
            self.note(
                &format!("ne{n_e}"),
                format!("prefactor={:.8} residual={:.3e}", s.prefactor, s.residual),
            );
            for (i, (&num, &fam)) in s.numeric.iter().zip(s.family.iter()).enumerate() {
                rows.push(vec![
                    n_e.to_string(),
                    i.to_string(),
                    fmt(num),
                    fmt(s.prefactor * fam),
                    fmt(fam),
                ]);
            }
        }
        let path = self.out_path("spin_spectrum.csv")?;
        write_csv(
            &path,
            &self.manifest(),
            &["n_e", "index", "numeric_eigenvalue", "fitted_family", "family_shape"],
            rows,
        )?;
        Ok(())
    }

    // ------------------------------------------------------------------
    fn validate_report(&mut self) -> Result<()> {
        let cfg = self.cfg.clone();
        println!("validate: N = {}, k0·d = {:.6}, n_max = {}", cfg.n, cfg.kd, cfg.n_max);
        let b = self.basis()?;
        let mut total = 0usize;
        for n_e in 0..=cfg.n_max {
            let s = b.sector_size(n_e);
            total += s;
            println!("  sector n_e = {n_e}: {s} states");
        }
        println!("  total basis size: {total}");
        let full_mb = (total * total * 16) as f64 / 1e6;
        println!("  dense generator: {full_mb:.1} MB");
        let h = build_h_eff(&b, cfg.beta)?;
        let jumps = derive_jumps(&h)?;
        let gmax = jumps.max_rate();
        let fine_bound = 0.01 / (cfg.n_max as f64 * gmax);
        let levels = (cfg.dt / fine_bound).log2().ceil().max(0.0) as usize;
        println!(
            "  fastest jump rate: {gmax:.4} gamma0; jump-resolution step <= {fine_bound:.3e}/gamma0 \
             ({levels} halvings below dt = {})",
            cfg.dt
        );
        let ladder_mb: f64 = (0..=cfg.n_max)
            .map(|s| ((levels + 1) * b.sector_size(s) * b.sector_size(s) * 16) as f64 / 1e6)
            .sum();
        println!("  propagator cache (sector mode): {ladder_mb:.1} MB");
        if cfg.dt * gmax * cfg.n_max as f64 > 1.0 {
            println!(
                "  warning: record step dt = {} is coarser than the fastest decay time \
                 {:.3e}/gamma0; observables will alias fast transients",
                cfg.dt,
                1.0 / (gmax * cfg.n_max as f64)
            );
        }
        for kind in [EdgeKind::Zero, EdgeKind::Pi] {
            let e = band_edge(cfg.kd, kind)?;
            let rb = if e.gamma_ex() > 1e-9 {
                format!("{:.5}", rbeta(&e, cfg.n, cfg.beta)?)
            } else {
                "n/a (edge outside the light cone)".to_string()
            };
            println!(
                "  band edge {kind:?}: re_omega = {:.4} gamma0, gamma_ex = {:.4} gamma0, \
                 re_a2 = {:.4} gamma0 d^2, r_beta = {rb}",
                e.omega_ex.re,
                e.gamma_ex(),
                e.a2.re,
            );
        }
        Ok(())
    }
}
