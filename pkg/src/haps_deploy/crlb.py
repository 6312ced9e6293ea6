"""Fisher information assembly and the receiver-averaged 3D position bound.

Each ranging link contributes a rank-one term psi * h^T h to a 4x4
information matrix over [x, y, z, clock]. The position bound for one
receiver is sqrt of the trace of the top-left 3x3 block of the inverse;
receivers whose information matrix is singular or near-singular count as
infeasible and contribute a large fixed penalty to the average.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

import numpy as np

from . import citymodel, geodesy
from .geodesy import EcefPosition, GeodeticPosition

if TYPE_CHECKING:
    from .scenario import Scenario

INFEASIBLE = float("inf")
CONDITION_LIMIT = 1e12
INFEASIBLE_PENALTY = 1e6  # meters charged per unsolvable receiver


def design_row(receiver: EcefPosition, source: EcefPosition) -> np.ndarray:
    """Linearized pseudorange gradient [-u, 1] for one link."""
    delta = source.as_array() - receiver.as_array()
    norm = float(np.linalg.norm(delta))
    if norm == 0.0:
        raise ValueError("receiver and source coincide")
    u = delta / norm
    return np.array([-u[0], -u[1], -u[2], 1.0])


def fim(receiver: EcefPosition, sources: Sequence[tuple[EcefPosition, float]]) -> np.ndarray:
    """Aggregate the weighted rank-one contributions of all links."""
    if len(sources) == 0:
        raise ValueError("at least one ranging source is required")
    matrix = np.zeros((4, 4))
    for source, weight in sources:
        row = design_row(receiver, source)
        matrix += weight * np.outer(row, row)
    return matrix


def crlb_from_fims(fims: np.ndarray) -> np.ndarray:
    """Batched position bound; INFEASIBLE where the matrix is ill-conditioned."""
    fims = np.asarray(fims, dtype=np.float64).reshape(-1, 4, 4)
    eigenvalues = np.linalg.eigvalsh(fims)
    smallest = eigenvalues[:, 0]
    largest = eigenvalues[:, -1]
    feasible = (smallest > 0.0) & (largest <= CONDITION_LIMIT * smallest)
    out = np.full(len(fims), INFEASIBLE)
    if feasible.any():
        inverses = np.linalg.inv(fims[feasible])
        out[feasible] = np.sqrt(
            inverses[:, 0, 0] + inverses[:, 1, 1] + inverses[:, 2, 2]
        )
    return out


def crlb_3d(fim_matrix: np.ndarray) -> float:
    """Position bound of one 4x4 information matrix (meters or INFEASIBLE)."""
    return float(crlb_from_fims(np.asarray(fim_matrix)[None, :, :])[0])


@dataclass
class ConfigurationReport:
    """Per-receiver breakdown of one platform configuration."""

    per_receiver_crlb: np.ndarray  # (R,), INFEASIBLE where unsolvable
    avg_crlb: float  # penalized mean over receivers
    sat_los: np.ndarray  # (R,) int counts
    sat_nlos: np.ndarray
    haps_los: np.ndarray
    haps_nlos: np.ndarray
    n_haps_used: int  # platforms passing the center elevation screen


def evaluate_configuration(scenario: "Scenario", haps_lla: np.ndarray) -> ConfigurationReport:
    """Evaluate a platform configuration given as an (H, 3) lat/lon/alt array.

    Satellite contributions are cached on the scenario; platforms are
    screened by elevation at the region center, classified LOS/NLOS per
    receiver through the mesh, and added on top.
    """
    n_recv = len(scenario.receivers_ecef)
    if n_recv == 0:
        raise ValueError("scenario has no receivers")
    haps_lla = np.asarray(haps_lla, dtype=np.float64).reshape(-1, 3)

    fims = scenario.sat_fim_base.copy()
    haps_los = np.zeros(n_recv, dtype=np.int64)
    haps_nlos = np.zeros(n_recv, dtype=np.int64)
    n_used = 0

    if len(haps_lla):
        haps_ecef = geodesy.lla_to_ecef_array(haps_lla)
        rel = (haps_ecef - scenario.center_ecef) @ scenario.center_rot.T
        dist = np.linalg.norm(rel, axis=1)
        with np.errstate(invalid="ignore"):
            sin_elev = np.where(dist > 0.0, rel[:, 2] / np.where(dist > 0.0, dist, 1.0), -1.0)
        keep = sin_elev >= np.sin(np.deg2rad(scenario.theta_min))
        haps_ecef = haps_ecef[keep]
        n_used = int(keep.sum())

        if n_used:
            haps_enu = (haps_ecef - scenario.mesh_anchor_ecef) @ scenario.mesh_rot.T
            recv_rep = np.repeat(scenario.receivers_enu_mesh, n_used, axis=0)
            haps_rep = np.tile(haps_enu, (n_recv, 1))
            nlos = citymodel.classify_links_batch(
                scenario.index, recv_rep, haps_rep
            ).reshape(n_recv, n_used)
            haps_los = (~nlos).sum(axis=1)
            haps_nlos = nlos.sum(axis=1)

            psi = np.where(
                nlos,
                scenario.psi[("haps", citymodel.LinkState.NLOS)],
                scenario.psi[("haps", citymodel.LinkState.LOS)],
            )
            delta = haps_ecef[None, :, :] - scenario.receivers_ecef[:, None, :]
            dist = np.linalg.norm(delta, axis=2, keepdims=True)
            u = delta / dist
            rows = np.concatenate([-u, np.ones((n_recv, n_used, 1))], axis=2)
            fims += np.einsum("rki,rkj,rk->rij", rows, rows, psi)

    per_recv = crlb_from_fims(fims)
    penalized = np.where(np.isinf(per_recv), INFEASIBLE_PENALTY, per_recv)
    return ConfigurationReport(
        per_receiver_crlb=per_recv,
        avg_crlb=float(penalized.mean()),
        sat_los=scenario.sat_los_count,
        sat_nlos=scenario.sat_nlos_count,
        haps_los=haps_los,
        haps_nlos=haps_nlos,
        n_haps_used=n_used,
    )


def average_crlb(haps: Sequence[GeodeticPosition], scenario: "Scenario") -> float:
    """Mean position bound over all receivers for the given platforms."""
    lla = np.array([[p.lat, p.lon, p.alt] for p in haps], dtype=np.float64).reshape(-1, 3)
    return evaluate_configuration(scenario, lla).avg_crlb
