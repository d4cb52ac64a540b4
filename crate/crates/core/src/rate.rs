//! Achievable sum-rates with interference treated as Gaussian noise.
//!
//! Downlink users project onto their receive subspace and decode their own
//! streams against everything else; uplink BSs jointly decode their own
//! cell's users inside the receive subspace. Rates are base-2 logs, so they
//! read in bits per channel use. Uplink transmissions carry an explicit
//! `P/(Ks)` per-stream power because the uplink precoders are unit-norm
//! subspace bases, while downlink power rides inside the intra-cell precoder.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{identity, logdet_hpd, CMatrix};
use crate::network::{
    simulate_received_signal, ChannelSet, NetworkConfig, PrecoderState, ReceiverCovariances,
};
use crate::solver::assemble_downlink_precoders;

/// Per-receiver and total rates of one scenario instance.
#[derive(Debug, Clone)]
pub struct RateReport {
    /// Rate of each downlink (cell, user), bits per channel use.
    pub per_dl_user: Vec<Vec<f64>>,
    /// Joint-decoding rate of each uplink cell.
    pub per_ul_cell: Vec<f64>,
    pub r_dl: f64,
    pub r_ul: f64,
    pub r_total: f64,
}

/// log2 det(I + C^{-1} S) for Hermitian positive definite C and PSD S,
/// computed as a difference of log-determinants. Clamped at zero against
/// rounding on vanishing signal.
fn capacity_increment(c: &CMatrix, s: &CMatrix) -> Result<f64> {
    let total = logdet_hpd(&(c + s))?;
    let base = logdet_hpd(c)?;
    Ok((total - base).max(0.0))
}

/// Downlink rates. Requires the intra-cell precoding pass to have run so the
/// per-cell power budget is in place.
pub fn downlink_sum_rate(
    cfg: &NetworkConfig,
    ch: &ChannelSet,
    st: &PrecoderState,
) -> Result<(Vec<Vec<f64>>, f64)> {
    let per_stream = cfg.per_stream_power();
    let full_precoder: Vec<CMatrix> = (0..cfg.dl_cells)
        .map(|c| &st.dl_inter_precoder[c] * &st.dl_intra_precoder[c])
        .collect();
    let per_user_precoder: Vec<Vec<CMatrix>> =
        (0..cfg.dl_cells).map(|c| assemble_downlink_precoders(st, c)).collect();

    let mut rates = vec![vec![0.0; cfg.users_per_cell]; cfg.dl_cells];
    let mut total = 0.0;
    for cell in 0..cfg.dl_cells {
        for user in 0..cfg.users_per_cell {
            let receive = &st.dl_receive_basis[cell][user];
            let h_own = ch.dl_to_dl(cell, cell, user);
            let nm = cfg.user_antennas;

            let mut interference = CMatrix::zeros(nm, nm);
            for (i, v) in per_user_precoder[cell].iter().enumerate() {
                if i == user {
                    continue;
                }
                let a = h_own * v;
                interference += &a * a.adjoint();
            }
            for other in 0..cfg.dl_cells {
                if other == cell {
                    continue;
                }
                let a = ch.dl_to_dl(other, cell, user) * &full_precoder[other];
                interference += &a * a.adjoint();
            }
            for (from_cell, per_user) in st.ul_transmit_basis.iter().enumerate() {
                for (from_user, tx) in per_user.iter().enumerate() {
                    let a = ch.ul_to_dl(from_cell, from_user, cell, user) * tx;
                    interference += (&a * a.adjoint()).scale(per_stream);
                }
            }

            let c = identity(cfg.streams_per_user)
                + receive.adjoint() * &interference * receive;
            let m = receive.adjoint() * (h_own * &per_user_precoder[cell][user]);
            let s = &m * m.adjoint();
            let rate = capacity_increment(&c, &s)?;
            rates[cell][user] = rate;
            total += rate;
        }
    }
    Ok((rates, total))
}

/// Uplink rates with per-cell joint decoding.
pub fn uplink_sum_rate(
    cfg: &NetworkConfig,
    ch: &ChannelSet,
    st: &PrecoderState,
) -> Result<(Vec<f64>, f64)> {
    let per_stream = cfg.per_stream_power();
    let full_precoder: Vec<CMatrix> = (0..cfg.dl_cells)
        .map(|c| &st.dl_inter_precoder[c] * &st.dl_intra_precoder[c])
        .collect();

    let mut rates = vec![0.0; cfg.ul_cells];
    let mut total = 0.0;
    for cell in 0..cfg.ul_cells {
        let receive = &st.ul_receive_basis[cell];
        let nb = cfg.bs_antennas;

        let mut interference = CMatrix::zeros(nb, nb);
        for other in 0..cfg.ul_cells {
            if other == cell {
                continue;
            }
            for (from_user, tx) in st.ul_transmit_basis[other].iter().enumerate() {
                let a = ch.ul_to_ul(other, from_user, cell) * tx;
                interference += (&a * a.adjoint()).scale(per_stream);
            }
        }
        for from_bs in 0..cfg.dl_cells {
            let a = ch.dl_to_ul(from_bs, cell) * &full_precoder[from_bs];
            interference += &a * a.adjoint();
        }

        let ks = cfg.cell_streams();
        let c = identity(ks) + receive.adjoint() * &interference * receive;
        let mut s = CMatrix::zeros(ks, ks);
        for (user, tx) in st.ul_transmit_basis[cell].iter().enumerate() {
            let m = receive.adjoint() * (ch.ul_to_ul(cell, user, cell) * tx);
            s += (&m * m.adjoint()).scale(per_stream);
        }
        let rate = capacity_increment(&c, &s)?;
        rates[cell] = rate;
        total += rate;
    }
    Ok((rates, total))
}

/// Evaluate every rate of one instance.
pub fn evaluate_rates(cfg: &NetworkConfig, ch: &ChannelSet, st: &PrecoderState) -> Result<RateReport> {
    let (per_dl_user, r_dl) = downlink_sum_rate(cfg, ch, st)?;
    let (per_ul_cell, r_ul) = uplink_sum_rate(cfg, ch, st)?;
    Ok(RateReport { per_dl_user, per_ul_cell, r_dl, r_ul, r_total: r_dl + r_ul })
}

/// Analytic covariance of each receiver's antenna-domain signal, including
/// desired signal, all interference, and unit noise. This is the quantity the
/// rate expressions decompose, and what `simulate_received_signal` estimates.
pub fn receiver_covariances(
    cfg: &NetworkConfig,
    ch: &ChannelSet,
    st: &PrecoderState,
) -> ReceiverCovariances {
    let per_stream = cfg.per_stream_power();
    let full_precoder: Vec<CMatrix> = (0..cfg.dl_cells)
        .map(|c| &st.dl_inter_precoder[c] * &st.dl_intra_precoder[c])
        .collect();

    let dl_users = (0..cfg.dl_cells)
        .map(|cell| {
            (0..cfg.users_per_cell)
                .map(|user| {
                    let mut cov = identity(cfg.user_antennas);
                    for from_bs in 0..cfg.dl_cells {
                        let a = ch.dl_to_dl(from_bs, cell, user) * &full_precoder[from_bs];
                        cov += &a * a.adjoint();
                    }
                    for (from_cell, per_user) in st.ul_transmit_basis.iter().enumerate() {
                        for (from_user, tx) in per_user.iter().enumerate() {
                            let a = ch.ul_to_dl(from_cell, from_user, cell, user) * tx;
                            cov += (&a * a.adjoint()).scale(per_stream);
                        }
                    }
                    cov
                })
                .collect()
        })
        .collect();

    let ul_bs = (0..cfg.ul_cells)
        .map(|bs| {
            let mut cov = identity(cfg.bs_antennas);
            for (from_cell, per_user) in st.ul_transmit_basis.iter().enumerate() {
                for (from_user, tx) in per_user.iter().enumerate() {
                    let a = ch.ul_to_ul(from_cell, from_user, bs) * tx;
                    cov += (&a * a.adjoint()).scale(per_stream);
                }
            }
            for from_bs in 0..cfg.dl_cells {
                let a = ch.dl_to_ul(from_bs, bs) * &full_precoder[from_bs];
                cov += &a * a.adjoint();
            }
            cov
        })
        .collect();

    ReceiverCovariances { dl_users, ul_bs }
}

/// Largest relative Frobenius deviation between the analytic receiver
/// covariances and their Monte Carlo estimates.
pub fn covariance_consistency_check<R: Rng + ?Sized>(
    cfg: &NetworkConfig,
    ch: &ChannelSet,
    st: &PrecoderState,
    n_samples: usize,
    rng: &mut R,
) -> Result<f64> {
    if n_samples < 10_000 {
        return Err(Error::Validation(format!(
            "covariance_consistency_check: need at least 10^4 samples, got {n_samples}"
        )));
    }
    let empirical = simulate_received_signal(cfg, ch, st, n_samples, rng)?;
    let analytic = receiver_covariances(cfg, ch, st);

    let mut worst: f64 = 0.0;
    for cell in 0..cfg.dl_cells {
        for user in 0..cfg.users_per_cell {
            let a = &analytic.dl_users[cell][user];
            let e = &empirical.dl_users[cell][user];
            worst = worst.max((e - a).norm() / a.norm());
        }
    }
    for bs in 0..cfg.ul_cells {
        let a = &analytic.ul_bs[bs];
        let e = &empirical.ul_bs[bs];
        worst = worst.max((e - a).norm() / a.norm());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{draw_channels, init_precoders, trial_rng, validate_config};
    use crate::solver::{run_silm, PrecoderKind, SolverParams};

    fn config(dl: usize, ul: usize, users: usize, nb: usize, nm: usize, s: usize) -> NetworkConfig {
        let cfg = NetworkConfig {
            dl_cells: dl,
            ul_cells: ul,
            users_per_cell: users,
            bs_antennas: nb,
            user_antennas: nm,
            streams_per_user: s,
            power: 10.0,
            rho_db: -20.0,
            leakage_weight: 0.01,
        };
        validate_config(&cfg).unwrap();
        cfg
    }

    /// Independent log2-determinant through LU, avoiding the Cholesky path.
    fn logdet2_via_lu(m: &CMatrix) -> f64 {
        let det = m.clone().lu().determinant();
        det.re.log2()
    }

    #[test]
    fn zero_channels_give_zero_rates() {
        let cfg = config(2, 1, 2, 5, 3, 1);
        let ch = ChannelSet::zeros(&cfg);
        let st = init_precoders(&cfg, &mut trial_rng(1, 0)).unwrap();
        let report = evaluate_rates(&cfg, &ch, &st).unwrap();
        assert_eq!(report.r_dl, 0.0);
        assert_eq!(report.r_ul, 0.0);
        assert_eq!(report.r_total, 0.0);
    }

    #[test]
    fn single_user_full_subspace_matches_direct_capacity() {
        // one cell, one user, s = N_m: the receive basis is square unitary and
        // the rate must equal log2 det(I + H V V^H H^H)
        let cfg = config(1, 0, 1, 4, 3, 3);
        let mut rng = trial_rng(2, 0);
        let ch = draw_channels(&cfg, &mut rng).unwrap();
        let st = init_precoders(&cfg, &mut rng).unwrap();
        let (rates, r_dl) = downlink_sum_rate(&cfg, &ch, &st).unwrap();

        let v = &st.dl_inter_precoder[0] * &st.dl_intra_precoder[0];
        let a = ch.dl_to_dl(0, 0, 0) * v;
        let direct = logdet2_via_lu(&(identity(3) + &a * a.adjoint()));
        assert!((rates[0][0] - direct).abs() <= 1e-9 * (1.0 + direct));
        assert!((r_dl - direct).abs() <= 1e-9 * (1.0 + direct));
    }

    #[test]
    fn isolated_uplink_cell_matches_direct_capacity() {
        // K = 1, s = N_m = N_b = Ks: square unitary receive subspace
        let cfg = config(0, 1, 1, 3, 3, 3);
        let mut rng = trial_rng(3, 0);
        let ch = draw_channels(&cfg, &mut rng).unwrap();
        let st = init_precoders(&cfg, &mut rng).unwrap();
        let (rates, r_ul) = uplink_sum_rate(&cfg, &ch, &st).unwrap();

        let p_s = cfg.per_stream_power();
        let a = ch.ul_to_ul(0, 0, 0) * &st.ul_transmit_basis[0][0];
        let direct = logdet2_via_lu(&(identity(3) + (&a * a.adjoint()).scale(p_s)));
        assert!((rates[0] - direct).abs() <= 1e-9 * (1.0 + direct));
        assert!((r_ul - direct).abs() <= 1e-9 * (1.0 + direct));
    }

    #[test]
    fn totals_are_sums_and_rates_are_nonnegative() {
        let cfg = config(2, 2, 2, 4, 4, 1);
        let mut rng = trial_rng(4, 0);
        let ch = draw_channels(&cfg, &mut rng).unwrap();
        let report = run_silm(&cfg, &ch, &SolverParams::default(), &mut rng).unwrap();
        let rates = evaluate_rates(&cfg, &ch, &report.final_state).unwrap();
        let dl_sum: f64 = rates.per_dl_user.iter().flatten().sum();
        let ul_sum: f64 = rates.per_ul_cell.iter().sum();
        assert!((rates.r_dl - dl_sum).abs() <= 1e-12 * (1.0 + dl_sum));
        assert!((rates.r_ul - ul_sum).abs() <= 1e-12 * (1.0 + ul_sum));
        assert!((rates.r_total - (dl_sum + ul_sum)).abs() <= 1e-12 * (1.0 + dl_sum + ul_sum));
        for r in rates.per_dl_user.iter().flatten().chain(rates.per_ul_cell.iter()) {
            assert!(r.is_finite() && *r >= 0.0);
        }
    }

    #[test]
    fn rate_is_monotone_in_power_for_fixed_isolated_state() {
        let base = NetworkConfig { rho_db: f64::NEG_INFINITY, ..config(1, 0, 1, 4, 3, 1) };
        let mut rng = trial_rng(5, 0);
        let ch = draw_channels(&base, &mut rng).unwrap();
        let st = init_precoders(&base, &mut rng).unwrap();

        let mut last = 0.0;
        for snr_db in [0.0, 5.0, 10.0, 15.0, 20.0] {
            let cfg = base.clone().with_snr_db(snr_db);
            // rescale the intra precoder so the fixed subspaces carry power P
            let mut scaled = st.clone();
            let ratio = (cfg.power / base.power).sqrt();
            scaled.dl_intra_precoder[0] = st.dl_intra_precoder[0].scale(ratio);
            let (_, r_dl) = downlink_sum_rate(&cfg, &ch, &scaled).unwrap();
            assert!(r_dl > last, "rate {r_dl} not above {last} at {snr_db} dB");
            last = r_dl;
        }
    }

    #[test]
    fn doubling_signal_power_adds_one_bit_at_high_snr() {
        // unit scalar channel, no interference, so the received SNR is P
        let cfg = NetworkConfig {
            rho_db: f64::NEG_INFINITY,
            power: 1000.0, // 30 dB
            ..config(1, 0, 1, 1, 1, 1)
        };
        let mut rng = trial_rng(6, 0);
        let mut ch = ChannelSet::zeros(&cfg);
        ch.set_dl_to_dl(0, 0, 0, identity(1));
        let st = init_precoders(&cfg, &mut rng).unwrap();
        let (_, r1) = downlink_sum_rate(&cfg, &ch, &st).unwrap();

        let mut doubled = st.clone();
        doubled.dl_intra_precoder[0] = st.dl_intra_precoder[0].scale(2f64.sqrt());
        let cfg2 = NetworkConfig { power: 2000.0, ..cfg };
        let (_, r2) = downlink_sum_rate(&cfg2, &ch, &doubled).unwrap();
        assert!(((r2 - r1) - 1.0).abs() <= 0.01, "gain = {}", r2 - r1);
    }

    #[test]
    fn zf_nulls_intra_cell_interference_in_isolated_cell() {
        let cfg = NetworkConfig {
            rho_db: f64::NEG_INFINITY,
            leakage_weight: 1.0,
            ..config(1, 0, 3, 5, 3, 1)
        };
        let mut rng = trial_rng(7, 0);
        let ch = draw_channels(&cfg, &mut rng).unwrap();
        let params = SolverParams { precoder_kind: PrecoderKind::Zf, ..Default::default() };
        let report = run_silm(&cfg, &ch, &params, &mut rng).unwrap();
        let st = &report.final_state;
        let (rates, _) = downlink_sum_rate(&cfg, &ch, st).unwrap();

        // recompute each user's rate with the intra-cell term dropped
        let per_user = assemble_downlink_precoders(st, 0);
        for user in 0..cfg.users_per_cell {
            let receive = &st.dl_receive_basis[0][user];
            let h_own = ch.dl_to_dl(0, 0, user);
            let m = receive.adjoint() * (h_own * &per_user[user]);
            let s = &m * m.adjoint();
            let clean = logdet_hpd(&(identity(1) + s)).unwrap();
            assert!(
                (rates[0][user] - clean).abs() <= 1e-6 * (1.0 + clean),
                "user {user}: {} vs {clean}",
                rates[0][user]
            );
        }
    }

    #[test]
    fn consistency_check_requires_enough_samples() {
        let cfg = config(1, 0, 1, 2, 2, 1);
        let mut rng = trial_rng(8, 0);
        let ch = draw_channels(&cfg, &mut rng).unwrap();
        let st = init_precoders(&cfg, &mut rng).unwrap();
        assert!(covariance_consistency_check(&cfg, &ch, &st, 5000, &mut rng).is_err());
    }
}
