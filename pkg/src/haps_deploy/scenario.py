"""Scenario configuration, fixture ingestion, and derived caches.

A scenario bundles the region of interest, receivers, a single-epoch
satellite snapshot, the city mesh, residual models, and GA parameters.
Loading resolves everything immutable up front: the spatial index, the
per-receiver visible-satellite lists and their LOS/NLOS states, the four
link weights, and the satellite-only information matrix per receiver.
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field, replace

import numpy as np

from . import citymodel, geodesy
from .citymodel import LinkState, TriangleMesh
from .errormodel import ErrorModelSet, GaussianModel, GmmModel, build_psi_table
from .geodesy import ConicalRegion, GeodeticPosition
from .optimizer import GaParams

logger = logging.getLogger("haps_deploy")


class ScenarioError(ValueError):
    """Raised for unreadable or invalid scenario configuration."""


@dataclass
class ScenarioConfig:
    region_center: GeodeticPosition
    cone: ConicalRegion
    receivers: np.ndarray  # (R, 3) lat/lon/alt before antenna offset
    satellites_ecef: np.ndarray  # (S, 3)
    mesh_path: str | None
    mesh_anchor: GeodeticPosition
    error_models: ErrorModelSet = field(default_factory=ErrorModelSet)
    nlos_fisher_mode: str = "mixture"
    ga: GaParams = field(default_factory=GaParams)
    theta_min: float = 10.0
    tau: float = 20.0
    antenna_height: float = 1.5
    seed: int = 0


@dataclass
class Scenario:
    """Resolved, immutable runtime view of a configuration."""

    config: ScenarioConfig
    mesh: TriangleMesh
    index: citymodel.SpatialIndex
    psi: dict
    receivers_lla: np.ndarray  # (R, 3) with antenna height applied
    receivers_ecef: np.ndarray
    receivers_enu_mesh: np.ndarray
    visible_sats: list  # per receiver: np.ndarray of satellite indices
    sat_nlos_mask: list  # per receiver: bool array aligned with visible_sats
    sat_fim_base: np.ndarray  # (R, 4, 4)
    sat_los_count: np.ndarray
    sat_nlos_count: np.ndarray
    center_ecef: np.ndarray
    center_rot: np.ndarray
    mesh_anchor_ecef: np.ndarray
    mesh_rot: np.ndarray

    @property
    def region(self) -> ConicalRegion:
        return self.config.cone

    @property
    def theta_min(self) -> float:
        return self.config.theta_min

    @property
    def tau(self) -> float:
        return self.config.tau

    @property
    def ga(self) -> GaParams:
        return self.config.ga

    @property
    def n_receivers(self) -> int:
        return len(self.receivers_lla)


def _elevations_deg(origin_lla: np.ndarray, targets_ecef: np.ndarray) -> np.ndarray:
    rot = geodesy.enu_rotation(float(origin_lla[0]), float(origin_lla[1]))
    origin_ecef = geodesy.lla_to_ecef_array(origin_lla)
    rel = (np.asarray(targets_ecef) - origin_ecef) @ rot.T
    rng = np.linalg.norm(rel, axis=1)
    ratio = np.clip(rel[:, 2] / np.where(rng > 0.0, rng, 1.0), -1.0, 1.0)
    return np.rad2deg(np.arcsin(ratio))


def filter_satellites(receiver: GeodeticPosition, satellites: np.ndarray, theta_min: float) -> np.ndarray:
    """Indices of satellites at or above the elevation mask at the receiver."""
    origin = np.array([receiver.lat, receiver.lon, receiver.alt])
    elev = _elevations_deg(origin, np.asarray(satellites, dtype=np.float64).reshape(-1, 3))
    return np.nonzero(elev >= theta_min)[0]


def build_scenario(config: ScenarioConfig, mesh: TriangleMesh | None = None) -> Scenario:
    """Resolve a config into a Scenario with all derived caches."""
    if len(config.receivers) < 1:
        raise ScenarioError("scenario needs at least one receiver")
    n_sats = len(config.satellites_ecef)
    if n_sats < 4:
        logger.warning(
            "only %d satellites in the snapshot; 4 or more are recommended", n_sats
        )

    if mesh is None:
        if config.mesh_path is None:
            mesh = TriangleMesh(
                np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64), config.mesh_anchor
            )
        else:
            mesh = citymodel.load_mesh(config.mesh_path, config.mesh_anchor)
    index = citymodel.build_index(mesh)

    receivers_lla = np.array(config.receivers, dtype=np.float64).reshape(-1, 3).copy()
    receivers_lla[:, 2] += config.antenna_height
    receivers_ecef = geodesy.lla_to_ecef_array(receivers_lla)

    anchor = mesh.anchor
    mesh_rot = geodesy.enu_rotation(anchor.lat, anchor.lon)
    mesh_anchor_ecef = geodesy.lla_to_ecef_array(
        np.array([anchor.lat, anchor.lon, anchor.alt])
    )
    receivers_enu_mesh = (receivers_ecef - mesh_anchor_ecef) @ mesh_rot.T

    center = config.region_center
    center_rot = geodesy.enu_rotation(center.lat, center.lon)
    center_ecef = geodesy.lla_to_ecef_array(np.array([center.lat, center.lon, center.alt]))

    psi = build_psi_table(config.error_models, nlos_mode=config.nlos_fisher_mode)

    sats = np.asarray(config.satellites_ecef, dtype=np.float64).reshape(-1, 3)
    sats_enu_mesh = (sats - mesh_anchor_ecef) @ mesh_rot.T

    n_recv = len(receivers_lla)
    visible_sats = []
    sat_nlos_mask = []
    sat_fim_base = np.zeros((n_recv, 4, 4))
    sat_los_count = np.zeros(n_recv, dtype=np.int64)
    sat_nlos_count = np.zeros(n_recv, dtype=np.int64)

    for r in range(n_recv):
        elev = _elevations_deg(receivers_lla[r], sats)
        vis = np.nonzero(elev >= config.theta_min)[0]
        visible_sats.append(vis)
        if len(vis) == 0:
            sat_nlos_mask.append(np.zeros(0, dtype=bool))
            continue
        recv_rep = np.repeat(receivers_enu_mesh[r][None, :], len(vis), axis=0)
        nlos = citymodel.classify_links_batch(index, recv_rep, sats_enu_mesh[vis])
        sat_nlos_mask.append(nlos)
        sat_los_count[r] = int((~nlos).sum())
        sat_nlos_count[r] = int(nlos.sum())

        weights = np.where(
            nlos,
            psi[("satellite", LinkState.NLOS)],
            psi[("satellite", LinkState.LOS)],
        )
        delta = sats[vis] - receivers_ecef[r]
        dist = np.linalg.norm(delta, axis=1, keepdims=True)
        u = delta / dist
        rows = np.concatenate([-u, np.ones((len(vis), 1))], axis=1)
        sat_fim_base[r] = np.einsum("ki,kj,k->ij", rows, rows, weights)

    return Scenario(
        config=config,
        mesh=mesh,
        index=index,
        psi=psi,
        receivers_lla=receivers_lla,
        receivers_ecef=receivers_ecef,
        receivers_enu_mesh=receivers_enu_mesh,
        visible_sats=visible_sats,
        sat_nlos_mask=sat_nlos_mask,
        sat_fim_base=sat_fim_base,
        sat_los_count=sat_los_count,
        sat_nlos_count=sat_nlos_count,
        center_ecef=center_ecef,
        center_rot=center_rot,
        mesh_anchor_ecef=mesh_anchor_ecef,
        mesh_rot=mesh_rot,
    )


def _require(data: dict, key: str, where: str):
    if key not in data:
        raise ScenarioError(f"{where}: missing required key '{key}'")
    return data[key]


def _triple(value, what: str) -> GeodeticPosition:
    try:
        lat, lon, alt = (float(v) for v in value)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"{what} must be a [lat, lon, alt] triple: {exc}") from exc
    try:
        return GeodeticPosition(lat, lon, alt)
    except ValueError as exc:
        raise ScenarioError(f"{what}: {exc}") from exc


def _parse_gaussian(data: dict, where: str) -> GaussianModel:
    try:
        return GaussianModel(float(_require(data, "sigma", where)))
    except ValueError as exc:
        raise ScenarioError(f"{where}: {exc}") from exc


def _parse_gmm(data: dict, where: str) -> GmmModel:
    try:
        return GmmModel.from_arrays(
            _require(data, "means", where),
            _require(data, "sigmas", where),
            _require(data, "weights", where),
        )
    except ValueError as exc:
        raise ScenarioError(f"{where}: {exc}") from exc


def _parse_error_models(data: dict | None) -> ErrorModelSet:
    if not data:
        return ErrorModelSet()
    defaults = ErrorModelSet()
    return ErrorModelSet(
        satellite_los=_parse_gaussian(data["satellite_los"], "error_models.satellite_los")
        if "satellite_los" in data else defaults.satellite_los,
        satellite_nlos=_parse_gmm(data["satellite_nlos"], "error_models.satellite_nlos")
        if "satellite_nlos" in data else defaults.satellite_nlos,
        haps_los=_parse_gaussian(data["haps_los"], "error_models.haps_los")
        if "haps_los" in data else defaults.haps_los,
        haps_nlos=_parse_gmm(data["haps_nlos"], "error_models.haps_nlos")
        if "haps_nlos" in data else defaults.haps_nlos,
    )


_GA_KEYS = {
    "p_c", "p_m", "eta_c", "eta_m", "blx_alpha", "n_pop", "n_gen",
    "n_min", "n_max", "d_dec_th", "d_obj_th", "crossover_requires_both",
}


def _parse_ga(data: dict | None, where: str = "ga") -> GaParams:
    params = GaParams()
    if not data:
        return params
    unknown = set(data) - _GA_KEYS
    if unknown:
        raise ScenarioError(f"{where}: unknown key(s) {sorted(unknown)}")
    try:
        return replace(params, **data)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"{where}: {exc}") from exc


def parse_config(data: dict, base_dir: str = ".", where: str = "config") -> ScenarioConfig:
    if not isinstance(data, dict):
        raise ScenarioError(f"{where}: top level must be a JSON object")

    center = _triple(_require(data, "region_center", where), "region_center")

    cone_data = data.get("cone", {})
    try:
        cone = ConicalRegion(
            center=center,
            min_elevation=float(cone_data.get("min_elevation_deg", 10.0)),
            min_alt=float(cone_data.get("min_alt_m", 18_000.0)),
            max_alt=float(cone_data.get("max_alt_m", 22_000.0)),
        )
    except ValueError as exc:
        raise ScenarioError(f"cone: {exc}") from exc

    receivers_raw = _require(data, "receivers", where)
    receivers = np.array(
        [[p.lat, p.lon, p.alt] for p in
         (_triple(row, f"receivers[{i}]") for i, row in enumerate(receivers_raw))],
        dtype=np.float64,
    ).reshape(-1, 3)

    sats_raw = _require(data, "satellites_ecef", where)
    try:
        satellites = np.array(sats_raw, dtype=np.float64).reshape(-1, 3)
    except ValueError as exc:
        raise ScenarioError(f"satellites_ecef must be [x, y, z] rows: {exc}") from exc
    for i, row in enumerate(satellites):
        norm = float(np.linalg.norm(row))
        if not (geodesy.ECEF_NORM_MIN <= norm <= geodesy.ECEF_NORM_MAX):
            raise ScenarioError(
                f"satellites_ecef[{i}]: norm {norm:.3e} m outside sanity range"
            )

    mesh_path = None
    mesh_anchor = center
    if "mesh" in data and data["mesh"] is not None:
        mesh_data = data["mesh"]
        mesh_path = os.path.join(base_dir, str(_require(mesh_data, "path", "mesh")))
        if not os.path.exists(mesh_path):
            raise ScenarioError(f"mesh.path: file not found: {mesh_path}")
        mesh_anchor = _triple(_require(mesh_data, "anchor", "mesh"), "mesh.anchor")

    mode = str(data.get("nlos_fisher_mode", "mixture"))
    if mode not in ("mixture", "component"):
        raise ScenarioError(f"nlos_fisher_mode must be 'mixture' or 'component', got {mode!r}")

    ga = _parse_ga(data.get("ga"))
    tau = float(data.get("tau_m", 20.0))
    theta_min = float(data.get("theta_min_deg", 10.0))
    if not (0.0 <= theta_min < 90.0):
        raise ScenarioError(f"theta_min_deg {theta_min} outside [0, 90)")
    seed = int(data.get("seed", 0))
    ga = replace(ga, tau=tau, seed=seed)

    return ScenarioConfig(
        region_center=center,
        cone=cone,
        receivers=receivers,
        satellites_ecef=satellites,
        mesh_path=mesh_path,
        mesh_anchor=mesh_anchor,
        error_models=_parse_error_models(data.get("error_models")),
        nlos_fisher_mode=mode,
        ga=ga,
        theta_min=theta_min,
        tau=tau,
        antenna_height=float(data.get("antenna_height_m", 1.5)),
        seed=seed,
    )


def apply_overrides(config: ScenarioConfig, overrides: dict | None) -> ScenarioConfig:
    """Apply CLI-style overrides (seed, generations, population, tau, theta_min)."""
    if not overrides:
        return config
    ga = config.ga
    updates = {}
    if overrides.get("seed") is not None:
        seed = int(overrides["seed"])
        updates["seed"] = seed
        ga = replace(ga, seed=seed)
    if overrides.get("generations") is not None:
        ga = replace(ga, n_gen=int(overrides["generations"]))
    if overrides.get("population") is not None:
        ga = replace(ga, n_pop=int(overrides["population"]))
    if overrides.get("tau") is not None:
        tau = float(overrides["tau"])
        updates["tau"] = tau
        ga = replace(ga, tau=tau)
    if overrides.get("theta_min") is not None:
        updates["theta_min"] = float(overrides["theta_min"])
    return replace(config, ga=ga, **updates)


def load_scenario(path, overrides: dict | None = None) -> Scenario:
    """Parse a JSON config file and resolve it into a Scenario."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ScenarioError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: invalid JSON: {exc}") from exc
    config = parse_config(data, base_dir=os.path.dirname(os.path.abspath(path)), where=str(path))
    config = apply_overrides(config, overrides)
    return build_scenario(config)


def generate_synthetic_city(
    blocks,
    building,
    street_width: float,
    anchor: GeodeticPosition,
) -> TriangleMesh:
    """Deterministic grid of closed box buildings centered on the anchor.

    ``blocks`` is an (nx, ny) pair or a single int; ``building`` is the
    (width, depth, height) of every box in meters.
    """
    if isinstance(blocks, int):
        blocks = (blocks, blocks)
    nx, ny = int(blocks[0]), int(blocks[1])
    width, depth, height = (float(v) for v in building)
    if nx < 0 or ny < 0:
        raise ValueError("block counts must be non-negative")
    if min(width, depth, height) <= 0 or street_width < 0:
        raise ValueError("building dimensions must be positive")

    pitch_x = width + street_width
    pitch_y = depth + street_width
    vertices = []
    triangles = []
    quads = (
        (0, 1, 2, 3),  # bottom
        (4, 5, 6, 7),  # top
        (0, 1, 5, 4),
        (1, 2, 6, 5),
        (2, 3, 7, 6),
        (3, 0, 4, 7),
    )
    for i in range(nx):
        for j in range(ny):
            cx = (i - (nx - 1) / 2.0) * pitch_x
            cy = (j - (ny - 1) / 2.0) * pitch_y
            x0, x1 = cx - width / 2.0, cx + width / 2.0
            y0, y1 = cy - depth / 2.0, cy + depth / 2.0
            base = len(vertices)
            vertices.extend([
                (x0, y0, 0.0), (x1, y0, 0.0), (x1, y1, 0.0), (x0, y1, 0.0),
                (x0, y0, height), (x1, y0, height), (x1, y1, height), (x0, y1, height),
            ])
            for a, b, c, d in quads:
                triangles.append((base + a, base + b, base + c))
                triangles.append((base + a, base + c, base + d))

    verts = np.array(vertices, dtype=np.float64).reshape(-1, 3)
    tris = np.array(triangles, dtype=np.int64).reshape(-1, 3)
    return TriangleMesh(verts, tris, anchor)
