//! Scenario configuration, random channel realizations, and precoder state.
//!
//! A scenario has `dl_cells` downlink cells and `ul_cells` uplink cells, each
//! with `users_per_cell` users. Base stations carry `bs_antennas` antennas,
//! users carry `user_antennas`, and every user moves `streams_per_user` data
//! streams. Intra-cell channel entries are unit-variance complex Gaussians;
//! cross-cell entries have variance `10^(rho_db/10)`. Noise covariance is the
//! identity everywhere, so `power` doubles as the downlink SNR.

use nalgebra::{Complex, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};
use crate::linalg::{random_semi_unitary, CMatrix};

/// All scenario scalars.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    /// Number of downlink-operated cells (L_d).
    pub dl_cells: usize,
    /// Number of uplink-operated cells (L_u).
    pub ul_cells: usize,
    /// Users per cell (K).
    pub users_per_cell: usize,
    /// Antennas per base station (N_b).
    pub bs_antennas: usize,
    /// Antennas per user terminal (N_m).
    pub user_antennas: usize,
    /// Data streams per user (s).
    pub streams_per_user: usize,
    /// Total transmit power per downlink BS, linear scale. Equals the SNR
    /// because the noise covariance is the identity.
    pub power: f64,
    /// Inter-cell interference power gain in dB; `-inf` isolates the cells.
    pub rho_db: f64,
    /// Weight on the own-signal leakage term; 0 reduces the objective to
    /// pure interference leakage.
    pub leakage_weight: f64,
}

impl NetworkConfig {
    /// Total streams per cell, `K * s`.
    pub fn cell_streams(&self) -> usize {
        self.users_per_cell * self.streams_per_user
    }

    /// Cross-cell channel entry variance, `10^(rho_db/10)`.
    pub fn rho_sq(&self) -> f64 {
        10f64.powf(self.rho_db / 10.0)
    }

    /// Per-stream uplink transmit power, `P / (K s)`.
    pub fn per_stream_power(&self) -> f64 {
        self.power / self.cell_streams() as f64
    }

    /// Convenience constructor taking the SNR in dB.
    pub fn with_snr_db(mut self, snr_db: f64) -> Self {
        self.power = 10f64.powf(snr_db / 10.0);
        self
    }
}

/// Check every configuration invariant, reporting all violations together.
pub fn validate_config(cfg: &NetworkConfig) -> Result<()> {
    let mut problems = Vec::new();
    if cfg.dl_cells + cfg.ul_cells < 1 {
        problems.push("at least one cell is required".to_string());
    }
    if cfg.users_per_cell < 1 {
        problems.push("users_per_cell must be at least 1".to_string());
    }
    if cfg.bs_antennas < 1 || cfg.user_antennas < 1 {
        problems.push("antenna counts must be at least 1".to_string());
    }
    if cfg.streams_per_user < 1 {
        problems.push("streams_per_user must be at least 1".to_string());
    }
    if cfg.streams_per_user > cfg.user_antennas {
        problems.push(format!(
            "s exceeds N_m ({} > {})",
            cfg.streams_per_user, cfg.user_antennas
        ));
    }
    if cfg.users_per_cell * cfg.streams_per_user > cfg.bs_antennas {
        problems.push(format!(
            "Ks exceeds N_b ({} > {})",
            cfg.users_per_cell * cfg.streams_per_user,
            cfg.bs_antennas
        ));
    }
    if !(cfg.power > 0.0) {
        problems.push("power must be positive".to_string());
    }
    if cfg.rho_db.is_nan() || cfg.rho_db == f64::INFINITY {
        problems.push("rho_db must be finite or -inf".to_string());
    }
    if !(cfg.leakage_weight >= 0.0) {
        problems.push("leakage weight must be non-negative".to_string());
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(Error::Config(problems))
    }
}

/// One realization of every channel matrix in the scenario.
///
/// Index convention: superscripts in the link names run source → destination.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    /// `[from_bs][to_cell][to_user]`, each `N_m x N_b`.
    dl_bs_to_dl_user: Vec<Vec<Vec<CMatrix>>>,
    /// `[from_cell][from_user][to_cell][to_user]`, each `N_m x N_m`.
    ul_user_to_dl_user: Vec<Vec<Vec<Vec<CMatrix>>>>,
    /// `[from_cell][from_user][to_bs]`, each `N_b x N_m`.
    ul_user_to_ul_bs: Vec<Vec<Vec<CMatrix>>>,
    /// `[from_bs][to_bs]`, each `N_b x N_b`.
    dl_bs_to_ul_bs: Vec<Vec<CMatrix>>,
}

impl ChannelSet {
    /// Channel from downlink BS `from_bs` to user `to_user` in downlink cell
    /// `to_cell`.
    pub fn dl_to_dl(&self, from_bs: usize, to_cell: usize, to_user: usize) -> &CMatrix {
        &self.dl_bs_to_dl_user[from_bs][to_cell][to_user]
    }

    /// Channel from user `from_user` in uplink cell `from_cell` to user
    /// `to_user` in downlink cell `to_cell`.
    pub fn ul_to_dl(
        &self,
        from_cell: usize,
        from_user: usize,
        to_cell: usize,
        to_user: usize,
    ) -> &CMatrix {
        &self.ul_user_to_dl_user[from_cell][from_user][to_cell][to_user]
    }

    /// Channel from user `from_user` in uplink cell `from_cell` to the BS of
    /// uplink cell `to_bs`.
    pub fn ul_to_ul(&self, from_cell: usize, from_user: usize, to_bs: usize) -> &CMatrix {
        &self.ul_user_to_ul_bs[from_cell][from_user][to_bs]
    }

    /// Channel from downlink BS `from_bs` to the BS of uplink cell `to_bs`.
    pub fn dl_to_ul(&self, from_bs: usize, to_bs: usize) -> &CMatrix {
        &self.dl_bs_to_ul_bs[from_bs][to_bs]
    }

    /// Build a channel set from explicit matrices, validating the dimension
    /// table against `cfg`. Intended for tests and custom scenarios.
    pub fn from_parts(
        cfg: &NetworkConfig,
        dl_bs_to_dl_user: Vec<Vec<Vec<CMatrix>>>,
        ul_user_to_dl_user: Vec<Vec<Vec<Vec<CMatrix>>>>,
        ul_user_to_ul_bs: Vec<Vec<Vec<CMatrix>>>,
        dl_bs_to_ul_bs: Vec<Vec<CMatrix>>,
    ) -> Result<Self> {
        let set = ChannelSet {
            dl_bs_to_dl_user,
            ul_user_to_dl_user,
            ul_user_to_ul_bs,
            dl_bs_to_ul_bs,
        };
        set.check_dims(cfg)?;
        Ok(set)
    }

    /// Channel set with every matrix zero. Useful for degenerate-case tests.
    pub fn zeros(cfg: &NetworkConfig) -> Self {
        let (ld, lu, k) = (cfg.dl_cells, cfg.ul_cells, cfg.users_per_cell);
        let (nb, nm) = (cfg.bs_antennas, cfg.user_antennas);
        ChannelSet {
            dl_bs_to_dl_user: vec![vec![vec![CMatrix::zeros(nm, nb); k]; ld]; ld],
            ul_user_to_dl_user: vec![vec![vec![vec![CMatrix::zeros(nm, nm); k]; ld]; k]; lu],
            ul_user_to_ul_bs: vec![vec![vec![CMatrix::zeros(nb, nm); lu]; k]; lu],
            dl_bs_to_ul_bs: vec![vec![CMatrix::zeros(nb, nb); lu]; ld],
        }
    }

    /// Replace a downlink BS → downlink user channel (test scaffolding).
    pub fn set_dl_to_dl(&mut self, from_bs: usize, to_cell: usize, to_user: usize, h: CMatrix) {
        self.dl_bs_to_dl_user[from_bs][to_cell][to_user] = h;
    }

    /// Replace an uplink user → uplink BS channel (test scaffolding).
    pub fn set_ul_to_ul(&mut self, from_cell: usize, from_user: usize, to_bs: usize, h: CMatrix) {
        self.ul_user_to_ul_bs[from_cell][from_user][to_bs] = h;
    }

    fn check_dims(&self, cfg: &NetworkConfig) -> Result<()> {
        let (ld, lu, k) = (cfg.dl_cells, cfg.ul_cells, cfg.users_per_cell);
        let (nb, nm) = (cfg.bs_antennas, cfg.user_antennas);
        let shape_err = |what: &str| Err(Error::Dimension(format!("channel set: bad {what} block")));

        if self.dl_bs_to_dl_user.len() != ld {
            return shape_err("dl->dl");
        }
        for per_bs in &self.dl_bs_to_dl_user {
            if per_bs.len() != ld {
                return shape_err("dl->dl");
            }
            for per_cell in per_bs {
                if per_cell.len() != k || per_cell.iter().any(|h| h.shape() != (nm, nb)) {
                    return shape_err("dl->dl");
                }
            }
        }
        if self.ul_user_to_dl_user.len() != lu {
            return shape_err("ul->dl");
        }
        for per_cell in &self.ul_user_to_dl_user {
            if per_cell.len() != k {
                return shape_err("ul->dl");
            }
            for per_user in per_cell {
                if per_user.len() != ld {
                    return shape_err("ul->dl");
                }
                for per_dst in per_user {
                    if per_dst.len() != k || per_dst.iter().any(|h| h.shape() != (nm, nm)) {
                        return shape_err("ul->dl");
                    }
                }
            }
        }
        if self.ul_user_to_ul_bs.len() != lu {
            return shape_err("ul->ul");
        }
        for per_cell in &self.ul_user_to_ul_bs {
            if per_cell.len() != k {
                return shape_err("ul->ul");
            }
            for per_user in per_cell {
                if per_user.len() != lu || per_user.iter().any(|h| h.shape() != (nb, nm)) {
                    return shape_err("ul->ul");
                }
            }
        }
        if self.dl_bs_to_ul_bs.len() != ld {
            return shape_err("dl->ul");
        }
        for per_bs in &self.dl_bs_to_ul_bs {
            if per_bs.len() != lu || per_bs.iter().any(|h| h.shape() != (nb, nb)) {
                return shape_err("dl->ul");
            }
        }
        Ok(())
    }
}

/// All unitary design variables plus the downlink intra-cell precoders.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderState {
    /// Per downlink cell: inter-cell precoder V', `N_b x Ks`, semi-unitary.
    pub dl_inter_precoder: Vec<CMatrix>,
    /// Per downlink cell: intra-cell precoder V'', `Ks x Ks`. Initialized to
    /// a scaled identity with trace(V'' V''^H) = P; replaced by the MMSE/ZF
    /// design at the end of a solve.
    pub dl_intra_precoder: Vec<CMatrix>,
    /// Per downlink (cell, user): receive subspace basis, `N_m x s`.
    pub dl_receive_basis: Vec<Vec<CMatrix>>,
    /// Per downlink (cell, user): interference subspace basis, `N_m x (N_m - s)`.
    pub dl_interference_basis: Vec<Vec<CMatrix>>,
    /// Per uplink cell: BS receive subspace, `N_b x Ks`, semi-unitary.
    pub ul_receive_basis: Vec<CMatrix>,
    /// Per uplink (cell, user): transmit precoder basis, `N_m x s`.
    pub ul_transmit_basis: Vec<Vec<CMatrix>>,
    /// Per uplink (cell, user): interference subspace basis, `N_m x (N_m - s)`.
    pub ul_interference_basis: Vec<Vec<CMatrix>>,
}

impl PrecoderState {
    /// Largest orthonormality defect across every subspace block.
    pub fn max_subspace_defect(&self) -> f64 {
        let defect = |m: &CMatrix| -> f64 {
            if m.ncols() == 0 {
                0.0
            } else {
                (m.adjoint() * m - CMatrix::identity(m.ncols(), m.ncols())).norm()
            }
        };
        let mut worst: f64 = 0.0;
        for v in &self.dl_inter_precoder {
            worst = worst.max(defect(v));
        }
        for v in &self.ul_receive_basis {
            worst = worst.max(defect(v));
        }
        for per_cell in [&self.dl_receive_basis, &self.dl_interference_basis] {
            for row in per_cell {
                for m in row {
                    worst = worst.max(defect(m));
                }
            }
        }
        for per_cell in [&self.ul_transmit_basis, &self.ul_interference_basis] {
            for row in per_cell {
                for m in row {
                    worst = worst.max(defect(m));
                }
            }
        }
        worst
    }

    /// trace(V'' V''^H) for one downlink cell.
    pub fn intra_precoder_power(&self, cell: usize) -> f64 {
        let v = &self.dl_intra_precoder[cell];
        (v * v.adjoint()).trace().re
    }
}

/// Deterministic per-trial generator derived from a master seed.
///
/// Streams with distinct trial indices are statistically independent, so
/// trials can run in any order or in parallel.
pub fn trial_rng(master_seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial);
    rng
}

fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, std: f64, rng: &mut R) -> CMatrix {
    // per-entry variance std^2, split evenly between real and imaginary parts
    let comp = std * FRAC_1_SQRT_2;
    let mut m = CMatrix::zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            m[(i, j)] = Complex::new(comp * re, comp * im);
        }
    }
    m
}

/// Draw one i.i.d. Rayleigh-fading realization of every channel.
pub fn draw_channels<R: Rng + ?Sized>(cfg: &NetworkConfig, rng: &mut R) -> Result<ChannelSet> {
    validate_config(cfg)?;
    let (ld, lu, k) = (cfg.dl_cells, cfg.ul_cells, cfg.users_per_cell);
    let (nb, nm) = (cfg.bs_antennas, cfg.user_antennas);
    let rho = cfg.rho_sq().sqrt();

    let dl_bs_to_dl_user = (0..ld)
        .map(|from_bs| {
            (0..ld)
                .map(|to_cell| {
                    let std = if from_bs == to_cell { 1.0 } else { rho };
                    (0..k).map(|_| gaussian_matrix(nm, nb, std, rng)).collect()
                })
                .collect()
        })
        .collect();
    let ul_user_to_dl_user = (0..lu)
        .map(|_| {
            (0..k)
                .map(|_| {
                    (0..ld)
                        .map(|_| (0..k).map(|_| gaussian_matrix(nm, nm, rho, rng)).collect())
                        .collect()
                })
                .collect()
        })
        .collect();
    let ul_user_to_ul_bs = (0..lu)
        .map(|from_cell| {
            (0..k)
                .map(|_| {
                    (0..lu)
                        .map(|to_bs| {
                            let std = if from_cell == to_bs { 1.0 } else { rho };
                            gaussian_matrix(nb, nm, std, rng)
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let dl_bs_to_ul_bs = (0..ld)
        .map(|_| (0..lu).map(|_| gaussian_matrix(nb, nb, rho, rng)).collect())
        .collect();

    Ok(ChannelSet {
        dl_bs_to_dl_user,
        ul_user_to_dl_user,
        ul_user_to_ul_bs,
        dl_bs_to_ul_bs,
    })
}

/// Draw the arbitrary unitary starting point of the alternating solve.
///
/// Receive/interference bases for one user come from a single random unitary
/// split by column, so each stacked pair is exactly unitary.
pub fn init_precoders<R: Rng + ?Sized>(cfg: &NetworkConfig, rng: &mut R) -> Result<PrecoderState> {
    validate_config(cfg)?;
    let (ld, lu, k) = (cfg.dl_cells, cfg.ul_cells, cfg.users_per_cell);
    let (nb, nm, s) = (cfg.bs_antennas, cfg.user_antennas, cfg.streams_per_user);
    let ks = cfg.cell_streams();

    let mut dl_inter_precoder = Vec::with_capacity(ld);
    let mut dl_receive_basis = Vec::with_capacity(ld);
    let mut dl_interference_basis = Vec::with_capacity(ld);
    for _ in 0..ld {
        dl_inter_precoder.push(random_semi_unitary(nb, ks, rng)?);
        let mut receive = Vec::with_capacity(k);
        let mut interference = Vec::with_capacity(k);
        for _ in 0..k {
            let full = random_semi_unitary(nm, nm, rng)?;
            receive.push(full.columns(0, s).into_owned());
            interference.push(full.columns(s, nm - s).into_owned());
        }
        dl_receive_basis.push(receive);
        dl_interference_basis.push(interference);
    }

    let mut ul_receive_basis = Vec::with_capacity(lu);
    let mut ul_transmit_basis = Vec::with_capacity(lu);
    let mut ul_interference_basis = Vec::with_capacity(lu);
    for _ in 0..lu {
        ul_receive_basis.push(random_semi_unitary(nb, ks, rng)?);
        let mut transmit = Vec::with_capacity(k);
        let mut interference = Vec::with_capacity(k);
        for _ in 0..k {
            let full = random_semi_unitary(nm, nm, rng)?;
            transmit.push(full.columns(0, s).into_owned());
            interference.push(full.columns(s, nm - s).into_owned());
        }
        ul_transmit_basis.push(transmit);
        ul_interference_basis.push(interference);
    }

    let scale = (cfg.power / ks as f64).sqrt();
    let dl_intra_precoder = vec![CMatrix::identity(ks, ks).scale(scale); ld];

    Ok(PrecoderState {
        dl_inter_precoder,
        dl_intra_precoder,
        dl_receive_basis,
        dl_interference_basis,
        ul_receive_basis,
        ul_transmit_basis,
        ul_interference_basis,
    })
}

/// Empirical covariance of each receiver's antenna-domain signal.
#[derive(Debug, Clone)]
pub struct ReceiverCovariances {
    /// Per downlink (cell, user): `N_m x N_m`.
    pub dl_users: Vec<Vec<CMatrix>>,
    /// Per uplink BS: `N_b x N_b`.
    pub ul_bs: Vec<CMatrix>,
}

fn gaussian_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DVector<Complex<f64>> {
    DVector::from_fn(n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex::new(FRAC_1_SQRT_2 * re, FRAC_1_SQRT_2 * im)
    })
}

/// Monte Carlo estimate of every receiver's signal covariance.
///
/// Generates unit-variance symbols per stream, applies the configured
/// precoders and uplink power scaling, pushes the transmissions through the
/// channels, adds unit-variance noise, and averages the outer products. This
/// is a test oracle for the analytic rate expressions, not a solver path.
pub fn simulate_received_signal<R: Rng + ?Sized>(
    cfg: &NetworkConfig,
    ch: &ChannelSet,
    st: &PrecoderState,
    n_samples: usize,
    rng: &mut R,
) -> Result<ReceiverCovariances> {
    if n_samples < 100 {
        return Err(Error::Validation(format!(
            "simulate_received_signal: need at least 100 samples, got {n_samples}"
        )));
    }
    let (ld, lu, k) = (cfg.dl_cells, cfg.ul_cells, cfg.users_per_cell);
    let (nb, nm) = (cfg.bs_antennas, cfg.user_antennas);
    let ks = cfg.cell_streams();
    let ul_scale = cfg.per_stream_power().sqrt();

    // per downlink cell: full precoder V' V''
    let dl_precoder: Vec<CMatrix> = (0..ld)
        .map(|c| &st.dl_inter_precoder[c] * &st.dl_intra_precoder[c])
        .collect();

    let mut acc_dl = vec![vec![CMatrix::zeros(nm, nm); k]; ld];
    let mut acc_ul = vec![CMatrix::zeros(nb, nb); lu];
    let one = Complex::new(1.0, 0.0);

    for _ in 0..n_samples {
        let dl_tx: Vec<DVector<Complex<f64>>> = (0..ld)
            .map(|c| &dl_precoder[c] * gaussian_vector(ks, rng))
            .collect();
        let ul_tx: Vec<Vec<DVector<Complex<f64>>>> = (0..lu)
            .map(|c| {
                (0..k)
                    .map(|u| {
                        (&st.ul_transmit_basis[c][u] * gaussian_vector(cfg.streams_per_user, rng))
                            .scale(ul_scale)
                    })
                    .collect()
            })
            .collect();

        for cell in 0..ld {
            for user in 0..k {
                let mut y = gaussian_vector(nm, rng);
                for from_bs in 0..ld {
                    y += ch.dl_to_dl(from_bs, cell, user) * &dl_tx[from_bs];
                }
                for from_cell in 0..lu {
                    for from_user in 0..k {
                        y += ch.ul_to_dl(from_cell, from_user, cell, user)
                            * &ul_tx[from_cell][from_user];
                    }
                }
                acc_dl[cell][user].gerc(one, &y, &y, one);
            }
        }
        for bs in 0..lu {
            let mut y = gaussian_vector(nb, rng);
            for from_cell in 0..lu {
                for from_user in 0..k {
                    y += ch.ul_to_ul(from_cell, from_user, bs) * &ul_tx[from_cell][from_user];
                }
            }
            for from_bs in 0..ld {
                y += ch.dl_to_ul(from_bs, bs) * &dl_tx[from_bs];
            }
            acc_ul[bs].gerc(one, &y, &y, one);
        }
    }

    let inv_n = 1.0 / n_samples as f64;
    for per_cell in &mut acc_dl {
        for m in per_cell {
            *m *= Complex::new(inv_n, 0.0);
        }
    }
    for m in &mut acc_ul {
        *m *= Complex::new(inv_n, 0.0);
    }
    Ok(ReceiverCovariances { dl_users: acc_dl, ul_bs: acc_ul })
}
