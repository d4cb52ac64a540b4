//! Alternating minimization over the unitary design blocks.
//!
//! One iteration is two half-steps. The receive half-step replaces every
//! downlink user subspace pair and every uplink BS receive subspace with the
//! extreme eigenvectors of its covariance; the transmit half-step does the
//! same for the downlink inter-cell precoders and the uplink user precoders.
//! All blocks within a half-step are computed from the pre-update state, and
//! because the objective is separable across the blocks of a half-step this
//! joint update is still an exact minimization, so the objective can never
//! increase.
//!
//! After convergence the downlink intra-cell precoders are fit on the
//! effective channel with an MMSE (power-constrained regularized inverse) or
//! ZF design.

use rand::Rng;

use crate::error::{Error, Result};
use crate::leakage::{cov_dl_bs, cov_dl_user, cov_ul_bs, cov_ul_user, total_objective};
use crate::linalg::{hermitian_eig, identity, solve_hpd, CMatrix};
use crate::network::{init_precoders, validate_config, ChannelSet, NetworkConfig, PrecoderState};

/// Intra-cell precoder design used in the final step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrecoderKind {
    /// Regularized inverse with the regularizer set to meet the power budget.
    Mmse,
    /// Plain channel inverse, scaled to the power budget.
    Zf,
}

/// Iteration controls.
#[derive(Debug, Clone)]
pub struct SolverParams {
    /// Upper bound on full iterations.
    pub max_iters: usize,
    /// Convergence threshold on |dJ| / (1 + J) across one full iteration.
    pub rel_tol: f64,
    /// Intra-cell precoder design.
    pub precoder_kind: PrecoderKind,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams { max_iters: 100, rel_tol: 1e-6, precoder_kind: PrecoderKind::Mmse }
    }
}

/// Outcome of one solve.
#[derive(Debug, Clone)]
pub struct SolverReport {
    /// Objective value at the start and after every half-step.
    pub objective_trace: Vec<f64>,
    /// Full iterations executed.
    pub iterations_run: usize,
    /// Whether the relative-change criterion fired before `max_iters`.
    pub converged: bool,
    /// State after the final half-step and the intra-cell precoding pass.
    pub final_state: PrecoderState,
}

/// Effective intra-cell channel of one downlink cell, `Ks x Ks`, with user
/// `k`'s rows in block `k`.
#[derive(Debug, Clone)]
pub struct EffectiveChannel {
    pub matrix: CMatrix,
    pub streams_per_user: usize,
}

impl EffectiveChannel {
    /// Rows of user `k`.
    pub fn user_block(&self, user: usize) -> CMatrix {
        self.matrix
            .rows(user * self.streams_per_user, self.streams_per_user)
            .into_owned()
    }
}

/// Split the eigenbasis of `q` into (bottom `keep` columns, remaining top
/// columns). Both slices come from one decomposition, so stacking them gives
/// a unitary matrix.
fn eigen_split(q: &CMatrix, keep: usize) -> Result<(CMatrix, CMatrix)> {
    let n = q.nrows();
    let eig = hermitian_eig(q)?;
    let bottom = eig.eigenvectors.columns(0, keep).into_owned();
    let top = eig.eigenvectors.columns(keep, n - keep).into_owned();
    Ok((bottom, top))
}

/// Receive half-step: update every downlink user subspace pair and every
/// uplink BS receive subspace from the current transmit-side state.
///
/// A block whose covariance is exactly zero (isolated cells with zero weight)
/// keeps its previous value, so degenerate runs stay deterministic.
pub fn step2_receive_update(
    cfg: &NetworkConfig,
    ch: &ChannelSet,
    st: &PrecoderState,
) -> Result<PrecoderState> {
    let mut next = st.clone();
    for cell in 0..cfg.dl_cells {
        for user in 0..cfg.users_per_cell {
            let q = cov_dl_user(cfg, ch, st, cell, user);
            if q.norm() == 0.0 {
                continue;
            }
            let (receive, interference) = eigen_split(&q, cfg.streams_per_user)?;
            next.dl_receive_basis[cell][user] = receive;
            next.dl_interference_basis[cell][user] = interference;
        }
    }
    for cell in 0..cfg.ul_cells {
        let q = cov_ul_bs(cfg, ch, st, cell);
        if q.norm() == 0.0 {
            continue;
        }
        let (receive, _) = eigen_split(&q, cfg.cell_streams())?;
        next.ul_receive_basis[cell] = receive;
    }
    Ok(next)
}

/// Transmit half-step: update every downlink inter-cell precoder and every
/// uplink user precoder pair from the current receive-side state.
pub fn step3_transmit_update(
    cfg: &NetworkConfig,
    ch: &ChannelSet,
    st: &PrecoderState,
) -> Result<PrecoderState> {
    let mut next = st.clone();
    for cell in 0..cfg.dl_cells {
        let q = cov_dl_bs(cfg, ch, st, cell);
        if q.norm() == 0.0 {
            continue;
        }
        let (precoder, _) = eigen_split(&q, cfg.cell_streams())?;
        next.dl_inter_precoder[cell] = precoder;
    }
    for cell in 0..cfg.ul_cells {
        for user in 0..cfg.users_per_cell {
            let q = cov_ul_user(cfg, ch, st, cell, user);
            if q.norm() == 0.0 {
                continue;
            }
            let (transmit, interference) = eigen_split(&q, cfg.streams_per_user)?;
            next.ul_transmit_basis[cell][user] = transmit;
            next.ul_interference_basis[cell][user] = interference;
        }
    }
    Ok(next)
}

/// Effective channel of downlink cell `cell`: user block `k` is
/// `(receive_k)^H H_k V'`.
pub fn effective_channel(
    cfg: &NetworkConfig,
    ch: &ChannelSet,
    st: &PrecoderState,
    cell: usize,
) -> EffectiveChannel {
    assert!(cell < cfg.dl_cells, "downlink cell index {cell} out of range");
    let s = cfg.streams_per_user;
    let ks = cfg.cell_streams();
    let mut matrix = CMatrix::zeros(ks, ks);
    for user in 0..cfg.users_per_cell {
        let block = st.dl_receive_basis[cell][user].adjoint()
            * ch.dl_to_dl(cell, cell, user)
            * &st.dl_inter_precoder[cell];
        matrix.rows_mut(user * s, s).copy_from(&block);
    }
    EffectiveChannel { matrix, streams_per_user: s }
}

fn precoder_trace(eigenvalues: &[f64], mu: f64) -> f64 {
    eigenvalues
        .iter()
        .map(|&l| {
            let l = l.max(0.0);
            if l == 0.0 {
                0.0
            } else {
                let d = mu + l;
                l / (d * d)
            }
        })
        .sum()
}

/// Fit the intra-cell precoder on a square effective channel.
///
/// MMSE: `V'' = H^H (mu I + H H^H)^{-1}` with `mu >= 0` chosen by bisection
/// so that `trace(V'' V''^H) = power` within 1e-9 relative. If even `mu = 0`
/// undershoots the budget the precoder is scaled up instead. ZF is the
/// `mu = 0` special case with a global power scale, and requires an
/// invertible channel.
///
/// Returns the precoder and the regularizer `mu` that was used.
pub fn intra_cell_precoder(
    h_eff: &CMatrix,
    power: f64,
    kind: PrecoderKind,
) -> Result<(CMatrix, f64)> {
    let n = h_eff.nrows();
    if h_eff.ncols() != n {
        return Err(Error::Dimension(format!(
            "intra_cell_precoder: effective channel must be square, got {}x{}",
            n,
            h_eff.ncols()
        )));
    }
    if !(power > 0.0) {
        return Err(Error::Validation("intra_cell_precoder: power must be positive".into()));
    }

    let gram = h_eff * h_eff.adjoint();
    let eig = hermitian_eig(&gram)?;
    let max_eig = eig.eigenvalues.last().copied().unwrap_or(0.0);
    let min_eig = eig.eigenvalues.first().copied().unwrap_or(0.0);
    let invertible = min_eig > 1e-12 * max_eig.max(1.0);

    let rescaled = |raw: &CMatrix| -> CMatrix {
        let t = raw.norm_squared();
        raw.scale((power / t).sqrt())
    };

    match kind {
        PrecoderKind::Zf => {
            if !invertible {
                return Err(Error::SingularEffectiveChannel);
            }
            let raw = solve_hpd(&gram, h_eff)?.adjoint();
            Ok((rescaled(&raw), 0.0))
        }
        PrecoderKind::Mmse => {
            let trace_at_zero = precoder_trace(&eig.eigenvalues, 0.0);
            if trace_at_zero == 0.0 {
                // zero effective channel; fall back to a power-true identity
                return Ok((identity(n).scale((power / n as f64).sqrt()), 0.0));
            }
            if trace_at_zero <= power {
                // the unregularized inverse undershoots the budget: scale up
                let raw = if invertible {
                    solve_hpd(&gram, h_eff)?.adjoint()
                } else {
                    // pseudo-inverse limit of mu -> 0 for the singular case
                    let u = &eig.eigenvectors;
                    let g = CMatrix::from_fn(n, n, |i, j| {
                        if i == j && eig.eigenvalues[i] > 1e-12 * max_eig.max(1.0) {
                            nalgebra::Complex::new(1.0 / eig.eigenvalues[i], 0.0)
                        } else {
                            nalgebra::Complex::new(0.0, 0.0)
                        }
                    });
                    (u * g * u.adjoint() * h_eff).adjoint()
                };
                return Ok((rescaled(&raw), 0.0));
            }
            // bracket then bisect the strictly decreasing trace
            let mut hi = 1.0f64;
            while precoder_trace(&eig.eigenvalues, hi) > power {
                hi *= 2.0;
            }
            let mut lo = 0.0f64;
            let mut mu = hi;
            for _ in 0..200 {
                mu = 0.5 * (lo + hi);
                let t = precoder_trace(&eig.eigenvalues, mu);
                if (t - power).abs() <= 1e-9 * power {
                    break;
                }
                if t > power {
                    lo = mu;
                } else {
                    hi = mu;
                }
            }
            let shifted = &gram + identity(n).scale(mu);
            let precoder = solve_hpd(&shifted, h_eff)?.adjoint();
            Ok((precoder, mu))
        }
    }
}

/// Per-user downlink precoders `V' * V''_k`; their traces sum to the cell's
/// power budget because `V'` has orthonormal columns.
pub fn assemble_downlink_precoders(st: &PrecoderState, cell: usize) -> Vec<CMatrix> {
    let users = st.dl_receive_basis[cell].len();
    let intra = &st.dl_intra_precoder[cell];
    let s = intra.ncols() / users;
    (0..users)
        .map(|u| &st.dl_inter_precoder[cell] * intra.columns(u * s, s))
        .collect()
}

/// Run the full alternating solve from an explicit starting state.
pub fn run_silm_from(
    cfg: &NetworkConfig,
    ch: &ChannelSet,
    params: &SolverParams,
    initial: PrecoderState,
) -> Result<SolverReport> {
    validate_config(cfg)?;
    if params.max_iters < 1 {
        return Err(Error::Validation("max_iters must be at least 1".into()));
    }
    if !(params.rel_tol > 0.0) {
        return Err(Error::Validation("rel_tol must be positive".into()));
    }

    let mut st = initial;
    let mut trace = Vec::with_capacity(1 + 2 * params.max_iters);
    let mut prev = total_objective(cfg, ch, &st).total;
    trace.push(prev);
    let mut converged = false;
    let mut iterations_run = 0;

    for _ in 0..params.max_iters {
        st = step2_receive_update(cfg, ch, &st)?;
        trace.push(total_objective(cfg, ch, &st).total);
        st = step3_transmit_update(cfg, ch, &st)?;
        let current = total_objective(cfg, ch, &st).total;
        trace.push(current);
        iterations_run += 1;
        if (prev - current).abs() <= params.rel_tol * (1.0 + current.abs()) {
            converged = true;
            break;
        }
        prev = current;
    }

    for cell in 0..cfg.dl_cells {
        let h_eff = effective_channel(cfg, ch, &st, cell);
        let (intra, _mu) = intra_cell_precoder(&h_eff.matrix, cfg.power, params.precoder_kind)?;
        st.dl_intra_precoder[cell] = intra;
    }

    Ok(SolverReport { objective_trace: trace, iterations_run, converged, final_state: st })
}

/// Run the full alternating solve from a random unitary starting point.
pub fn run_silm<R: Rng + ?Sized>(
    cfg: &NetworkConfig,
    ch: &ChannelSet,
    params: &SolverParams,
    rng: &mut R,
) -> Result<SolverReport> {
    let initial = init_precoders(cfg, rng)?;
    run_silm_from(cfg, ch, params, initial)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{draw_channels, trial_rng};
    use nalgebra::Complex;

    fn config(dl: usize, ul: usize, users: usize, nb: usize, nm: usize, s: usize) -> NetworkConfig {
        NetworkConfig {
            dl_cells: dl,
            ul_cells: ul,
            users_per_cell: users,
            bs_antennas: nb,
            user_antennas: nm,
            streams_per_user: s,
            power: 10.0,
            rho_db: -20.0,
            leakage_weight: 0.01,
        }
    }

    #[test]
    fn isolated_downlink_cell_converges_immediately() {
        let cfg = NetworkConfig {
            rho_db: f64::NEG_INFINITY,
            leakage_weight: 0.0,
            ..config(1, 0, 2, 5, 3, 1)
        };
        let mut rng = trial_rng(1, 0);
        let ch = draw_channels(&cfg, &mut rng).unwrap();
        let report = run_silm(&cfg, &ch, &SolverParams::default(), &mut rng).unwrap();
        assert!(report.converged);
        assert_eq!(report.iterations_run, 1);
        assert!(report.objective_trace.iter().all(|&j| j == 0.0));
    }

    #[test]
    fn solver_is_seed_deterministic() {
        let cfg = config(2, 1, 2, 5, 3, 1);
        let ch = draw_channels(&cfg, &mut trial_rng(2, 1)).unwrap();
        let a = run_silm(&cfg, &ch, &SolverParams::default(), &mut trial_rng(2, 2)).unwrap();
        let b = run_silm(&cfg, &ch, &SolverParams::default(), &mut trial_rng(2, 2)).unwrap();
        assert_eq!(a.objective_trace, b.objective_trace);
        assert_eq!(a.final_state, b.final_state);
        assert_eq!(a.iterations_run, b.iterations_run);
    }

    #[test]
    fn empty_uplink_leaves_uplink_blocks_alone() {
        let cfg = config(2, 0, 2, 5, 3, 1);
        let mut rng = trial_rng(3, 0);
        let ch = draw_channels(&cfg, &mut rng).unwrap();
        let st = init_precoders(&cfg, &mut rng).unwrap();
        let next = step2_receive_update(&cfg, &ch, &st).unwrap();
        assert!(next.ul_receive_basis.is_empty());
        assert_ne!(next.dl_receive_basis, st.dl_receive_basis);
        let next = step3_transmit_update(&cfg, &ch, &st).unwrap();
        assert!(next.ul_transmit_basis.is_empty());
        assert_ne!(next.dl_inter_precoder, st.dl_inter_precoder);
    }

    #[test]
    fn effective_channel_matches_direct_product() {
        let cfg = config(1, 0, 2, 4, 3, 2);
        let mut rng = trial_rng(4, 0);
        let ch = draw_channels(&cfg, &mut rng).unwrap();
        let st = init_precoders(&cfg, &mut rng).unwrap();
        let h_eff = effective_channel(&cfg, &ch, &st, 0);
        assert_eq!(h_eff.matrix.shape(), (4, 4));
        for user in 0..2 {
            let direct = st.dl_receive_basis[0][user].adjoint()
                * ch.dl_to_dl(0, 0, user)
                * &st.dl_inter_precoder[0];
            assert!((h_eff.user_block(user) - direct).norm() <= 1e-13);
        }
    }

    #[test]
    fn effective_channel_of_zero_channels_is_zero() {
        let cfg = config(1, 0, 2, 4, 3, 2);
        let ch = ChannelSet::zeros(&cfg);
        let st = init_precoders(&cfg, &mut trial_rng(5, 0)).unwrap();
        assert_eq!(effective_channel(&cfg, &ch, &st, 0).matrix.norm(), 0.0);
    }

    #[test]
    fn mmse_identity_channel_closed_form() {
        // trace(V'' V''^H) = 2 / (1 + mu)^2 for H = I_2
        let h = identity(2);
        let (v, mu) = intra_cell_precoder(&h, 0.5, PrecoderKind::Mmse).unwrap();
        assert!((mu - 1.0).abs() <= 1e-7, "mu = {mu}");
        assert!((v.clone() - identity(2).scale(0.5)).norm() <= 1e-7);
        assert!((v.norm_squared() - 0.5).abs() <= 1e-9 * 0.5);

        let (v, mu) = intra_cell_precoder(&h, 2.0, PrecoderKind::Mmse).unwrap();
        assert_eq!(mu, 0.0);
        assert!((v - identity(2)).norm() <= 1e-12);
    }

    #[test]
    fn zf_inverts_the_channel() {
        let mut rng = trial_rng(6, 0);
        let h = CMatrix::from_fn(3, 3, |_, _| {
            Complex::new(
                rng.sample(rand_distr::StandardNormal),
                rng.sample(rand_distr::StandardNormal),
            )
        });
        let (v, mu) = intra_cell_precoder(&h, 4.0, PrecoderKind::Zf).unwrap();
        assert_eq!(mu, 0.0);
        let product = &h * &v;
        let c = product[(0, 0)];
        assert!(c.re > 0.0 && c.im.abs() <= 1e-10 * c.re);
        let mut off = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    off += product[(i, j)].norm_sqr();
                }
            }
        }
        assert!(off.sqrt() <= 1e-8 * product.norm());
        assert!((v.norm_squared() - 4.0).abs() <= 1e-9 * 4.0);
    }

    #[test]
    fn zf_rejects_singular_channel() {
        let h = CMatrix::zeros(2, 2);
        assert!(matches!(
            intra_cell_precoder(&h, 1.0, PrecoderKind::Zf),
            Err(Error::SingularEffectiveChannel)
        ));
    }

    #[test]
    fn mmse_tends_to_matched_filter_at_vanishing_power() {
        let mut rng = trial_rng(7, 0);
        let h = CMatrix::from_fn(3, 3, |_, _| {
            Complex::new(
                rng.sample(rand_distr::StandardNormal),
                rng.sample(rand_distr::StandardNormal),
            )
        });
        let (v, _) = intra_cell_precoder(&h, 1e-10, PrecoderKind::Mmse).unwrap();
        let target = h.adjoint();
        let inner = (target.adjoint() * &v).trace().norm();
        let cos = inner / (v.norm() * target.norm());
        assert!(cos >= 1.0 - 1e-4, "cos angle = {cos}");
    }

    #[test]
    fn assembled_precoders_carry_the_power_budget() {
        let cfg = config(2, 0, 2, 5, 3, 1);
        let mut rng = trial_rng(8, 0);
        let ch = draw_channels(&cfg, &mut rng).unwrap();
        let report = run_silm(&cfg, &ch, &SolverParams::default(), &mut rng).unwrap();
        for cell in 0..cfg.dl_cells {
            let per_user = assemble_downlink_precoders(&report.final_state, cell);
            let total: f64 = per_user.iter().map(|v| v.norm_squared()).sum();
            assert!((total - cfg.power).abs() <= 1e-6 * cfg.power);
            // the product with a scaled-identity intra precoder picks column blocks
        }
    }

    #[test]
    fn scaled_identity_intra_precoder_selects_column_blocks() {
        let cfg = config(1, 0, 2, 5, 3, 1);
        let mut rng = trial_rng(9, 0);
        let st = init_precoders(&cfg, &mut rng).unwrap();
        let per_user = assemble_downlink_precoders(&st, 0);
        let scale = (cfg.power / cfg.cell_streams() as f64).sqrt();
        for (u, v) in per_user.iter().enumerate() {
            let expect = st.dl_inter_precoder[0].columns(u, 1).scale(scale);
            assert!((v - expect).norm() <= 1e-12);
        }
    }
}
