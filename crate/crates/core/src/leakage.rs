//! The leakage objective and the covariance matrices that minimize it.
//!
//! The objective is a sum over all receivers of (a) inter-cell interference
//! power landing inside the receive subspace and (b) `w` times the desired
//! signal power leaking outside it. For each design block the objective is a
//! Rayleigh quotient `tr(X^H Q X)` in that block, so the exact per-block
//! minimizer is a set of extreme eigenvectors of the assembled `Q`. With the
//! other blocks held fixed the objective is separable across the blocks of a
//! half-step, which is what makes the parallel updates monotone.
//!
//! Uplink signal leakage is accounted through the orthogonal complement of
//! the BS receive subspace, so every objective summand is a squared norm and
//! the total is non-negative by construction.

use crate::linalg::{orthonormal_complement, symmetrize, CMatrix};
use crate::network::{ChannelSet, NetworkConfig, PrecoderState};

/// Per-user objective terms and their total.
#[derive(Debug, Clone)]
pub struct ObjectiveBreakdown {
    /// Term of each downlink (cell, user).
    pub dl_user_terms: Vec<Vec<f64>>,
    /// Term of each uplink (cell, user).
    pub ul_user_terms: Vec<Vec<f64>>,
    /// Sum of every term.
    pub total: f64,
}

fn check_dl_index(cfg: &NetworkConfig, cell: usize, user: usize) {
    assert!(cell < cfg.dl_cells, "downlink cell index {cell} out of range");
    assert!(user < cfg.users_per_cell, "user index {user} out of range");
}

fn check_ul_index(cfg: &NetworkConfig, cell: usize, user: usize) {
    assert!(cell < cfg.ul_cells, "uplink cell index {cell} out of range");
    assert!(user < cfg.users_per_cell, "user index {user} out of range");
}

/// Leakage term of one downlink user: inter-cell downlink interference in the
/// receive subspace, uplink interference in the receive subspace, and `w`
/// times the own-cell signal power caught by the interference subspace.
pub fn dl_user_term(
    cfg: &NetworkConfig,
    ch: &ChannelSet,
    st: &PrecoderState,
    cell: usize,
    user: usize,
) -> f64 {
    check_dl_index(cfg, cell, user);
    let receive = &st.dl_receive_basis[cell][user];
    let mut total = 0.0;

    for other in 0..cfg.dl_cells {
        if other == cell {
            continue;
        }
        total += (receive.adjoint() * ch.dl_to_dl(other, cell, user) * &st.dl_inter_precoder[other])
            .norm_squared();
    }
    for (from_cell, per_user) in st.ul_transmit_basis.iter().enumerate() {
        for (from_user, tx) in per_user.iter().enumerate() {
            total += (receive.adjoint() * ch.ul_to_dl(from_cell, from_user, cell, user) * tx)
                .norm_squared();
        }
    }
    let w = cfg.leakage_weight;
    if w > 0.0 {
        let interference = &st.dl_interference_basis[cell][user];
        total += w
            * (interference.adjoint() * ch.dl_to_dl(cell, cell, user) * &st.dl_inter_precoder[cell])
                .norm_squared();
    }
    total
}

/// Leakage term of one uplink user: this user's interference into other BS
/// receive subspaces is accounted at those BSs; here we take the interference
/// other-cell user `k` and the downlink BSs push into this BS's subspace,
/// plus `w` times this user's signal power missing the subspace.
pub fn ul_user_term(
    cfg: &NetworkConfig,
    ch: &ChannelSet,
    st: &PrecoderState,
    cell: usize,
    user: usize,
) -> f64 {
    check_ul_index(cfg, cell, user);
    let receive = &st.ul_receive_basis[cell];
    let mut total = 0.0;

    for other in 0..cfg.ul_cells {
        if other == cell {
            continue;
        }
        total += (receive.adjoint()
            * ch.ul_to_ul(other, user, cell)
            * &st.ul_transmit_basis[other][user])
            .norm_squared();
    }
    for from_bs in 0..cfg.dl_cells {
        total += (receive.adjoint() * ch.dl_to_ul(from_bs, cell) * &st.dl_inter_precoder[from_bs])
            .norm_squared();
    }
    let w = cfg.leakage_weight;
    if w > 0.0 && cfg.cell_streams() < cfg.bs_antennas {
        let complement = orthonormal_complement(receive)
            .expect("uplink receive subspace must stay semi-unitary");
        total += w
            * (complement.adjoint()
                * ch.ul_to_ul(cell, user, cell)
                * &st.ul_transmit_basis[cell][user])
                .norm_squared();
    }
    total
}

/// Evaluate the full objective.
pub fn total_objective(cfg: &NetworkConfig, ch: &ChannelSet, st: &PrecoderState) -> ObjectiveBreakdown {
    let dl_user_terms: Vec<Vec<f64>> = (0..cfg.dl_cells)
        .map(|cell| {
            (0..cfg.users_per_cell)
                .map(|user| dl_user_term(cfg, ch, st, cell, user))
                .collect()
        })
        .collect();
    let ul_user_terms: Vec<Vec<f64>> = (0..cfg.ul_cells)
        .map(|cell| {
            (0..cfg.users_per_cell)
                .map(|user| ul_user_term(cfg, ch, st, cell, user))
                .collect()
        })
        .collect();
    let total = dl_user_terms.iter().flatten().sum::<f64>()
        + ul_user_terms.iter().flatten().sum::<f64>();
    ObjectiveBreakdown { dl_user_terms, ul_user_terms, total }
}

/// Covariance whose top eigenvectors give a downlink user's interference
/// subspace: downlink plus uplink inter-cell interference seen by the user,
/// minus `w` times the own-cell signal covariance.
pub fn cov_dl_user(
    cfg: &NetworkConfig,
    ch: &ChannelSet,
    st: &PrecoderState,
    cell: usize,
    user: usize,
) -> CMatrix {
    check_dl_index(cfg, cell, user);
    let nm = cfg.user_antennas;
    let mut q = CMatrix::zeros(nm, nm);

    for other in 0..cfg.dl_cells {
        if other == cell {
            continue;
        }
        let a = ch.dl_to_dl(other, cell, user) * &st.dl_inter_precoder[other];
        q += &a * a.adjoint();
    }
    for (from_cell, per_user) in st.ul_transmit_basis.iter().enumerate() {
        for (from_user, tx) in per_user.iter().enumerate() {
            let a = ch.ul_to_dl(from_cell, from_user, cell, user) * tx;
            q += &a * a.adjoint();
        }
    }
    let w = cfg.leakage_weight;
    if w > 0.0 {
        let a = ch.dl_to_dl(cell, cell, user) * &st.dl_inter_precoder[cell];
        q -= (&a * a.adjoint()).scale(w);
    }
    symmetrize(&q)
}

/// Covariance whose bottom eigenvectors give an uplink BS receive subspace.
///
/// The downlink-BS term carries a factor K because it appears once in each of
/// the cell's K user terms.
pub fn cov_ul_bs(cfg: &NetworkConfig, ch: &ChannelSet, st: &PrecoderState, cell: usize) -> CMatrix {
    assert!(cell < cfg.ul_cells, "uplink cell index {cell} out of range");
    let nb = cfg.bs_antennas;
    let k = cfg.users_per_cell as f64;
    let mut q = CMatrix::zeros(nb, nb);

    for other in 0..cfg.ul_cells {
        if other == cell {
            continue;
        }
        for (from_user, tx) in st.ul_transmit_basis[other].iter().enumerate() {
            let a = ch.ul_to_ul(other, from_user, cell) * tx;
            q += &a * a.adjoint();
        }
    }
    for from_bs in 0..cfg.dl_cells {
        let a = ch.dl_to_ul(from_bs, cell) * &st.dl_inter_precoder[from_bs];
        q += (&a * a.adjoint()).scale(k);
    }
    let w = cfg.leakage_weight;
    if w > 0.0 {
        for (user, tx) in st.ul_transmit_basis[cell].iter().enumerate() {
            let a = ch.ul_to_ul(cell, user, cell) * tx;
            q -= (&a * a.adjoint()).scale(w);
        }
    }
    symmetrize(&q)
}

/// Covariance whose bottom eigenvectors give a downlink BS inter-cell
/// precoder: interference this BS causes to other downlink users and to
/// uplink BS subspaces, plus `w` times its own signal lost to the users'
/// interference subspaces.
pub fn cov_dl_bs(cfg: &NetworkConfig, ch: &ChannelSet, st: &PrecoderState, cell: usize) -> CMatrix {
    assert!(cell < cfg.dl_cells, "downlink cell index {cell} out of range");
    let nb = cfg.bs_antennas;
    let k = cfg.users_per_cell as f64;
    let mut q = CMatrix::zeros(nb, nb);

    for other in 0..cfg.dl_cells {
        if other == cell {
            continue;
        }
        for (user, receive) in st.dl_receive_basis[other].iter().enumerate() {
            let m = receive.adjoint() * ch.dl_to_dl(cell, other, user);
            q += m.adjoint() * m;
        }
    }
    for (to_bs, receive) in st.ul_receive_basis.iter().enumerate() {
        let m = receive.adjoint() * ch.dl_to_ul(cell, to_bs);
        q += (m.adjoint() * m).scale(k);
    }
    let w = cfg.leakage_weight;
    if w > 0.0 {
        for (user, interference) in st.dl_interference_basis[cell].iter().enumerate() {
            if interference.ncols() == 0 {
                continue;
            }
            let m = interference.adjoint() * ch.dl_to_dl(cell, cell, user);
            q += (m.adjoint() * m).scale(w);
        }
    }
    symmetrize(&q)
}

/// Covariance whose bottom eigenvectors give an uplink user's transmit
/// precoder (equivalently, top eigenvectors give its interference subspace).
pub fn cov_ul_user(
    cfg: &NetworkConfig,
    ch: &ChannelSet,
    st: &PrecoderState,
    cell: usize,
    user: usize,
) -> CMatrix {
    check_ul_index(cfg, cell, user);
    let nm = cfg.user_antennas;
    let mut q = CMatrix::zeros(nm, nm);

    for to_cell in 0..cfg.dl_cells {
        for (to_user, receive) in st.dl_receive_basis[to_cell].iter().enumerate() {
            let m = receive.adjoint() * ch.ul_to_dl(cell, user, to_cell, to_user);
            q += m.adjoint() * m;
        }
    }
    for other in 0..cfg.ul_cells {
        if other == cell {
            continue;
        }
        let m = st.ul_receive_basis[other].adjoint() * ch.ul_to_ul(cell, user, other);
        q += m.adjoint() * m;
    }
    let w = cfg.leakage_weight;
    // with Ks = N_b the receive subspace is the whole space and nothing leaks
    if w > 0.0 && cfg.cell_streams() < cfg.bs_antennas {
        let h = ch.ul_to_ul(cell, user, cell);
        let m = st.ul_receive_basis[cell].adjoint() * h;
        q += (h.adjoint() * h - m.adjoint() * m).scale(w);
    }
    symmetrize(&q)
}
