"""Exact piecewise propagation and model-independent consistency checks.

Propagators are exact per piece (Hermitian eigendecomposition, no Trotter
error): in the original frame a piece of value u evolves by expm(t (A + u B)),
in the reparametrized frame by expm(t (u A + B)).  Norm and spectrum drift are
measured and reported, never silently repaired.
"""

from __future__ import annotations

import math
import os
import tempfile
from dataclasses import dataclass

import numpy as np

from .linalg import skew_eigensystem

__all__ = [
    "Trajectory",
    "ModulusDriftReport",
    "as_state",
    "as_density",
    "fidelity",
    "propagate",
    "propagate_density",
    "steering_time_lower_bound",
    "modulus_margins",
    "modulus_drift_check",
    "write_trajectory_csv",
]

STATE_ATOL = 1e-10
DENSITY_HERM_ATOL = 1e-12
DENSITY_EIG_ATOL = 1e-10


def as_state(x, atol=STATE_ATOL):
    """Validate a unit-norm state vector."""
    x = np.asarray(x, dtype=complex).ravel()
    if x.size < 2:
        raise ValueError("state must have dimension >= 2")
    nrm = float(np.linalg.norm(x))
    if abs(nrm - 1.0) > atol:
        raise ValueError(f"state norm deviates from 1 by {abs(nrm - 1):.3e}")
    return x


def as_density(R, herm_atol=DENSITY_HERM_ATOL, eig_atol=DENSITY_EIG_ATOL,
               trace_atol=STATE_ATOL):
    """Validate a density matrix: Hermitian, unit trace, PSD within tolerance."""
    R = np.asarray(R, dtype=complex)
    if R.ndim != 2 or R.shape[0] != R.shape[1]:
        raise ValueError(f"density matrix must be square, got {R.shape}")
    herm = float(np.max(np.abs(R - R.conj().T)))
    if herm > herm_atol:
        raise ValueError(f"density matrix not Hermitian within {herm_atol:g} "
                         f"(defect {herm:.3e})")
    tr = complex(np.trace(R))
    if abs(tr - 1.0) > trace_atol:
        raise ValueError(f"density trace deviates from 1 by {abs(tr - 1):.3e}")
    evals = np.linalg.eigvalsh((R + R.conj().T) / 2.0)
    if float(evals.min()) < -eig_atol:
        raise ValueError(f"density matrix has eigenvalue {evals.min():.3e} < "
                         f"-{eig_atol:g}")
    return R


def fidelity(psi, phi):
    """|<phi, psi>|^2 for state vectors."""
    psi = np.asarray(psi, dtype=complex).ravel()
    phi = np.asarray(phi, dtype=complex).ravel()
    if psi.shape != phi.shape:
        raise ValueError(f"dimension mismatch {psi.shape} vs {phi.shape}")
    return float(abs(np.vdot(phi, psi)) ** 2)


@dataclass(frozen=True)
class Trajectory:
    """Sampled evolution: states are (S, n) vectors or (S, n, n) densities."""

    times: np.ndarray
    states: np.ndarray
    populations: np.ndarray
    kind: str  # "state" | "density"
    norm_drift: float  # max deviation of ||psi|| (or tr rho) from 1
    spectrum_drift: float = 0.0  # densities: max drift of sorted eigenvalues

    @property
    def final(self):
        return self.states[-1]


def _piece_generator(g, u, frame):
    if frame == "original":
        return g.A + u * g.B
    if frame == "reparametrized":
        return u * g.A + g.B
    raise ValueError(f"unknown frame {frame!r}")


def _sample_plan(c, samples_per_piece):
    s = int(samples_per_piece)
    if s < 1:
        raise ValueError("samples_per_piece must be >= 1")
    return s


def propagate(g, c, psi0, samples_per_piece=16):
    """Evolve a state under a control, sampling inside every piece.

    Exact propagators per piece; the sample grid contains t = 0 and
    `samples_per_piece` equispaced points per piece (piece ends included).
    The returned norm drift is reported, not corrected.
    """
    psi = as_state(psi0)
    n = g.order
    if psi.shape != (n,):
        raise ValueError(f"state dimension {psi.shape[0]} != order {n}")
    s = _sample_plan(c, samples_per_piece)

    times = [0.0]
    states = [psi]
    t0 = 0.0
    for dur, val in zip(c.durations, c.values):
        w, V = skew_eigensystem(_piece_generator(g, val, c.frame),
                                validate=False)
        Ustep = (V * np.exp(-1j * w * dur / s)) @ V.conj().T
        for j in range(1, s + 1):
            psi = Ustep @ psi
            times.append(t0 + dur * j / s)
            states.append(psi)
        t0 += dur
    states = np.array(states)
    times = np.array(times)
    pops = np.abs(states) ** 2
    drift = float(np.max(np.abs(np.linalg.norm(states, axis=1) - 1.0)))
    return Trajectory(times, states, pops, "state", drift)


def propagate_density(g, c, rho0, samples_per_piece=16):
    """Evolve a density matrix by conjugation with the exact propagators.

    The motion is isospectral; the drift of the sorted eigenvalues across the
    trajectory is measured and reported.
    """
    rho0 = as_density(rho0)
    n = g.order
    if rho0.shape != (n, n):
        raise ValueError(f"density dimension {rho0.shape} != order {n}")
    s = _sample_plan(c, samples_per_piece)

    ref = np.sort(np.linalg.eigvalsh(rho0))
    times = [0.0]
    mats = [rho0]
    U = np.eye(n, dtype=complex)
    t0 = 0.0
    for dur, val in zip(c.durations, c.values):
        w, V = skew_eigensystem(_piece_generator(g, val, c.frame),
                                validate=False)
        Ustep = (V * np.exp(-1j * w * dur / s)) @ V.conj().T
        for j in range(1, s + 1):
            U = Ustep @ U
            mats.append(U @ rho0 @ U.conj().T)
            times.append(t0 + dur * j / s)
        t0 += dur
    mats = np.array(mats)
    times = np.array(times)
    pops = np.real(np.einsum("tkk->tk", mats))
    traces = np.real(np.einsum("tkk->t", mats))
    drift = float(np.max(np.abs(traces - 1.0)))
    spec = np.sort(np.linalg.eigvalsh(mats), axis=1)
    spec_drift = float(np.max(np.abs(spec - ref[None, :])))
    return Trajectory(times, mats, pops, "density", drift, spec_drift)


# ---------------------------------------------------------------------------
# steering-time bound and coordinatewise drift
# ---------------------------------------------------------------------------


def _column_norms(W, dim):
    W = np.asarray(W)
    return np.linalg.norm(W[:, :dim], axis=0)


def steering_time_lower_bound(sys, psi0, psi1, eps, delta):
    """Lower bound on the time any admissible control needs for the transfer.

    For values in (0, delta), reaching within eps of psi1 from psi0 takes at
    least (1/delta) * sup_k (| |psi0_k| - |psi1_k| | - eps) / ||B phi_k||.
    Column norms use the stored rows of W only (a truncation surrogate: more
    stored rows can only increase them and so lower the bound).  A column
    with zero norm but positive numerator makes the bound +inf: that
    coordinate's modulus cannot move at all.
    """
    psi0 = as_state(psi0)
    psi1 = as_state(psi1)
    if psi0.shape != psi1.shape:
        raise ValueError("psi0 and psi1 must have equal dimension")
    dim = psi0.shape[0]
    if dim > sys.levels:
        raise ValueError(f"state dimension {dim} exceeds stored levels")
    eps = float(eps)
    delta = float(delta)
    if eps < 0.0 or delta <= 0.0:
        raise ValueError("need eps >= 0 and delta > 0")

    cols = _column_norms(sys.W, dim)
    best = 0.0
    for k in range(dim):
        num = abs(abs(psi0[k]) - abs(psi1[k])) - eps
        if num <= 0.0:
            continue
        if cols[k] == 0.0:
            return math.inf
        best = max(best, num / cols[k])
    return best / delta


def modulus_margins(psi_start, psi_end, duration, column_norms):
    """Margins duration * ||B phi_k|| - | |psi_start_k| - |psi_end_k| |."""
    a = np.abs(np.asarray(psi_start, dtype=complex))
    b = np.abs(np.asarray(psi_end, dtype=complex))
    return float(duration) * np.asarray(column_norms, dtype=float) - np.abs(
        a - b
    )


@dataclass(frozen=True)
class ModulusDriftReport:
    ok: bool
    worst_margin: float
    margins: tuple

    def to_json(self):
        return {
            "ok": self.ok,
            "worst_margin": self.worst_margin,
            "margins": list(self.margins),
        }


def modulus_drift_check(g, c, psi0, slack=1e-8):
    """Verify the coordinatewise modulus inequality along a propagation.

    In the reparametrized frame each coordinate's modulus moves at most
    duration * ||B phi_k||; in the original frame the budget is the
    integrated control value instead of the duration (the coupling enters
    scaled by u there).  Passes when every margin is >= -slack.
    """
    psi0 = as_state(psi0)
    traj = propagate(g, c, psi0, samples_per_piece=1)
    cols = np.linalg.norm(np.abs(g.B), axis=0)
    budget = (c.total_duration if c.frame == "reparametrized"
              else c.integrated_value)
    margins = modulus_margins(psi0, traj.final, budget, cols)
    worst = float(margins.min()) if margins.size else 0.0
    return ModulusDriftReport(
        ok=worst >= -slack,
        worst_margin=worst,
        margins=tuple(float(v) for v in margins),
    )


# ---------------------------------------------------------------------------
# CSV export
# ---------------------------------------------------------------------------


def _fmt(x):
    return format(float(x), ".17g")


def write_trajectory_csv(traj, path):
    """Write a trajectory as CSV with 17 significant digits per number.

    State trajectories: t, re_0, im_0, ..., pop_0, ...
    Density trajectories: t, eig_0, ..., purity.
    """
    rows = []
    if traj.kind == "state":
        n = traj.states.shape[1]
        header = (
            ["t"]
            + [f"{p}_{k}" for k in range(n) for p in ("re", "im")]
            + [f"pop_{k}" for k in range(n)]
        )
        for t, psi, pop in zip(traj.times, traj.states, traj.populations):
            row = [_fmt(t)]
            for k in range(n):
                row += [_fmt(psi[k].real), _fmt(psi[k].imag)]
            row += [_fmt(v) for v in pop]
            rows.append(row)
    elif traj.kind == "density":
        n = traj.states.shape[1]
        header = ["t"] + [f"eig_{k}" for k in range(n)] + ["purity"]
        for t, rho in zip(traj.times, traj.states):
            evals = np.sort(np.linalg.eigvalsh(rho))
            purity = float(np.real(np.trace(rho @ rho)))
            rows.append([_fmt(t)] + [_fmt(v) for v in evals] + [_fmt(purity)])
    else:
        raise ValueError(f"unknown trajectory kind {traj.kind!r}")

    payload = ",".join(header) + "\n"
    payload += "".join(",".join(r) + "\n" for r in rows)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
