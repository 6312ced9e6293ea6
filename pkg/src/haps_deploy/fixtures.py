"""Self-contained demo scenarios: synthetic city, receivers, satellites.

The satellite snapshot is synthetic: plausible single-epoch ECEF positions
at GNSS orbit radius placed on fixed azimuth/elevation rays from the
region center. Receiver layouts are deterministic street positions inside
the synthetic city grid.
"""

from __future__ import annotations

import json
import math
import os

import numpy as np

from . import citymodel, geodesy, scenario
from .geodesy import GeodeticPosition

GNSS_ORBIT_RADIUS = 26_560_000.0  # meters from Earth center

# Fixed sky distribution (azimuth, elevation) in degrees for the synthetic
# 10-satellite snapshot: two high, the rest spread to mid and low angles.
_SAT_DIRECTIONS = (
    (10.0, 75.0),
    (120.0, 62.0),
    (200.0, 55.0),
    (305.0, 48.0),
    (45.0, 40.0),
    (160.0, 34.0),
    (250.0, 28.0),
    (340.0, 24.0),
    (80.0, 18.0),
    (275.0, 15.0),
)

DEMO_CENTER = GeodeticPosition(40.706, -74.009, 0.0)


def satellite_snapshot(center: GeodeticPosition, directions=_SAT_DIRECTIONS) -> np.ndarray:
    """ECEF positions at GNSS orbit radius along fixed sky directions."""
    rot = geodesy.enu_rotation(center.lat, center.lon)
    c = geodesy.lla_to_ecef(center).as_array()
    c_norm2 = float(c @ c)
    out = np.empty((len(directions), 3))
    for k, (az_deg, el_deg) in enumerate(directions):
        az = math.radians(az_deg)
        el = math.radians(el_deg)
        enu_dir = np.array(
            [math.cos(el) * math.sin(az), math.cos(el) * math.cos(az), math.sin(el)]
        )
        w = rot.T @ enu_dir
        b = float(c @ w)
        t = -b + math.sqrt(b * b - (c_norm2 - GNSS_ORBIT_RADIUS**2))
        out[k] = c + t * w
    return out


def street_receivers(
    center: GeodeticPosition,
    blocks: int,
    building: tuple[float, float, float],
    street_width: float,
    n_receivers: int,
) -> np.ndarray:
    """Deterministic ground receivers: street intersections first, then
    mid-block canyon points, all at altitude 0."""
    width, depth, _ = building
    pitch_x = width + street_width
    pitch_y = depth + street_width
    centers_x = [(i - (blocks - 1) / 2.0) * pitch_x for i in range(blocks)]
    centers_y = [(j - (blocks - 1) / 2.0) * pitch_y for j in range(blocks)]
    streets_x = [(a + b) / 2.0 for a, b in zip(centers_x[:-1], centers_x[1:])]
    streets_y = [(a + b) / 2.0 for a, b in zip(centers_y[:-1], centers_y[1:])]

    spots = []
    for sx in streets_x:
        for sy in streets_y:
            spots.append((sx, sy))  # intersections: open along both axes
    for sx in streets_x:
        for cy in centers_y:
            spots.append((sx, cy))  # north-south canyon mid-block
    for cx in centers_x:
        for sy in streets_y:
            spots.append((cx, sy))  # east-west canyon mid-block
    if n_receivers > len(spots):
        raise ValueError(f"grid offers only {len(spots)} street positions")

    rot = geodesy.enu_rotation(center.lat, center.lon)
    c_ecef = geodesy.lla_to_ecef(center).as_array()
    out = np.empty((n_receivers, 3))
    for r, (x, y) in enumerate(spots[:n_receivers]):
        lla = geodesy.ecef_to_lla_array(c_ecef + rot.T @ np.array([x, y, 0.0]))
        out[r] = (lla[0], lla[1], 0.0)
    return out


def write_demo_scenario(
    out_dir,
    *,
    blocks: int = 5,
    building: tuple[float, float, float] = (40.0, 40.0, 60.0),
    street_width: float = 30.0,
    n_receivers: int = 20,
    center: GeodeticPosition = DEMO_CENTER,
    tau: float = 20.0,
    n_pop: int = 50,
    n_gen: int = 100,
    seed: int = 1,
) -> str:
    """Write city.obj plus config.json into ``out_dir``; returns the config path."""
    os.makedirs(out_dir, exist_ok=True)
    mesh = scenario.generate_synthetic_city(blocks, building, street_width, center)
    mesh_path = os.path.join(out_dir, "city.obj")
    citymodel.save_mesh(mesh, mesh_path)

    receivers = street_receivers(center, blocks, building, street_width, n_receivers)
    sats = satellite_snapshot(center)

    config = {
        "region_center": [center.lat, center.lon, center.alt],
        "cone": {"min_elevation_deg": 10.0, "min_alt_m": 18000.0, "max_alt_m": 22000.0},
        "receivers": receivers.tolist(),
        "satellites_ecef": sats.tolist(),
        "mesh": {"path": "city.obj", "anchor": [center.lat, center.lon, center.alt]},
        "ga": {"n_pop": n_pop, "n_gen": n_gen},
        "tau_m": tau,
        "theta_min_deg": 10.0,
        "antenna_height_m": 1.5,
        "seed": seed,
    }
    config_path = os.path.join(out_dir, "config.json")
    with open(config_path, "w", encoding="utf-8") as fh:
        json.dump(config, fh, indent=2)
        fh.write("\n")
    return config_path


def write_open_sky_scenario(
    out_dir,
    *,
    n_receivers: int = 4,
    center: GeodeticPosition = DEMO_CENTER,
    seed: int = 1,
    n_pop: int = 12,
    n_gen: int = 5,
) -> str:
    """No-building variant: every visible link is clear. Returns config path."""
    os.makedirs(out_dir, exist_ok=True)
    spread = 100.0
    rot = geodesy.enu_rotation(center.lat, center.lon)
    c_ecef = geodesy.lla_to_ecef(center).as_array()
    receivers = []
    for r in range(n_receivers):
        x = spread * (r % 2) - spread / 2.0
        y = spread * (r // 2) - spread / 2.0
        lla = geodesy.ecef_to_lla_array(c_ecef + rot.T @ np.array([x, y, 0.0]))
        receivers.append([float(lla[0]), float(lla[1]), 0.0])

    config = {
        "region_center": [center.lat, center.lon, center.alt],
        "receivers": receivers,
        "satellites_ecef": satellite_snapshot(center, _SAT_DIRECTIONS[:8]).tolist(),
        "ga": {"n_pop": n_pop, "n_gen": n_gen},
        "seed": seed,
    }
    config_path = os.path.join(out_dir, "config.json")
    with open(config_path, "w", encoding="utf-8") as fh:
        json.dump(config, fh, indent=2)
        fh.write("\n")
    return config_path
