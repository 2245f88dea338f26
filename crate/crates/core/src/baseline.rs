//! Zero-forcing baseline: each downlink beam points along the part of its
//! user's channel orthogonal to every other user, and only the beam powers,
//! the artificial noise and the uplink powers are optimized.

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::hermitian::{CMatrix, CVector, C64};
use crate::moop::{solve_point, sweep, Frontier, ParetoPoint};
use crate::scenario::{ChannelRealization, SystemConfig};
use crate::sdp::{ConicBackend, Problem};

/// Smallest residual norm, relative to `‖h_k‖`, accepted as a direction.
const DEGENERATE: f64 = 1e-8;

/// Unit directions `ŵ_k ∝ (I − Π_k) h_k`, with `Π_k` the orthogonal
/// projector onto the span of the other users' channels.
pub fn zf_directions(h: &[CVector]) -> Result<Vec<CVector>> {
    let k = h.len();
    let Some(n) = h.first().map(|v| v.len()) else {
        return Ok(Vec::new());
    };
    if k > n {
        return Err(Error::DegenerateChannel(format!("{k} users cannot be separated with {n} antennas")));
    }
    (0..k)
        .map(|i| {
            let others: Vec<&CVector> = h.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, v)| v).collect();
            let residual = match orthonormal_basis(&others, n)? {
                Some(q) => &h[i] - &q * (q.adjoint() * &h[i]),
                None => h[i].clone(),
            };
            let norm = residual.norm();
            if !(norm > DEGENERATE * h[i].norm()) {
                return Err(Error::DegenerateChannel(format!("user {i} lies in the span of the others")));
            }
            Ok(residual.unscale(norm))
        })
        .collect()
}

/// Orthonormal basis of the span of `vs` via thin QR, or `None` for an
/// empty list. Rank deficiency is an error.
fn orthonormal_basis(vs: &[&CVector], n: usize) -> Result<Option<CMatrix>> {
    if vs.is_empty() {
        return Ok(None);
    }
    let a = CMatrix::from_columns(&vs.iter().map(|v| (*v).clone()).collect::<Vec<_>>());
    let qr = a.qr();
    let r = qr.r();
    let scale = vs.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if (0..r.nrows().min(r.ncols())).any(|i| r[(i, i)].norm() <= DEGENERATE * scale) {
        return Err(Error::DegenerateChannel("other users' channels are linearly dependent".into()));
    }
    let q = qr.q();
    debug_assert_eq!(q.nrows(), n);
    Ok(Some(q))
}

/// Largest `|ŵ_kᴴ h_i|` over `i ≠ k`.
pub fn leakage_residual(directions: &[CVector], h: &[CVector]) -> f64 {
    let mut worst = 0.0f64;
    for (k, w) in directions.iter().enumerate() {
        for (i, hi) in h.iter().enumerate() {
            if i != k {
                let z: C64 = w.dotc(hi);
                worst = worst.max(z.norm());
            }
        }
    }
    worst
}

/// One baseline point for this drop, using the estimated user channels.
pub fn solve_baseline(
    problem: &Problem,
    realization: &ChannelRealization,
    config: &SystemConfig,
    backend: &dyn ConicBackend,
) -> Result<ParetoPoint> {
    let dirs = zf_directions(&realization.h)?;
    solve_point(problem, realization, config, Some(&dirs), backend).map(|(p, _)| p)
}

/// The baseline frontier with its own anchors.
pub fn baseline_sweep(
    realization: &ChannelRealization,
    config: &SystemConfig,
    lambda_step: f64,
    backend: &dyn ConicBackend,
    exec: Execution,
) -> Result<Frontier> {
    let dirs = zf_directions(&realization.h)?;
    sweep(realization, config, lambda_step, Some(&dirs), backend, exec)
}
