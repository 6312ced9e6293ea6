"""WGS-84 geodesy, local tangent frames, and the conical deployment region.

Latitude/longitude are degrees, altitudes are meters above the ellipsoid,
ECEF and ENU coordinates are meters. Azimuth is measured clockwise from
north, elevation up from the local horizontal plane.

Scalar transforms use plain float math (they sit inside projection and
sampling loops); the *_array variants serve the vectorized callers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

WGS84_A = 6378137.0
WGS84_F = 1.0 / 298.257223563
WGS84_B = WGS84_A * (1.0 - WGS84_F)
WGS84_E2 = WGS84_F * (2.0 - WGS84_F)

# Sanity envelope for every ECEF position handled here: ground level up to
# GNSS orbit altitudes.
ECEF_NORM_MIN = 6.2e6
ECEF_NORM_MAX = 4.5e7

# Angular safety margin (radians) used when projecting onto the elevation
# cone so the exact containment check cannot fail by one rounding step.
_CONE_MARGIN_RAD = 1e-10


@dataclass(frozen=True)
class GeodeticPosition:
    """A point in geodetic coordinates (degrees, degrees, meters)."""

    lat: float
    lon: float
    alt: float

    def __post_init__(self):
        if not (-90.0 <= self.lat <= 90.0):
            raise ValueError(f"latitude {self.lat} outside [-90, 90]")
        if not (-180.0 <= self.lon <= 180.0):
            raise ValueError(f"longitude {self.lon} outside [-180, 180]")
        if not math.isfinite(self.alt):
            raise ValueError(f"altitude {self.alt} is not finite")


@dataclass(frozen=True)
class EcefPosition:
    """A point in the Earth-centered Earth-fixed frame (meters)."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        norm = math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)
        if not math.isfinite(norm):
            raise ValueError("ECEF coordinates must be finite")
        if not (ECEF_NORM_MIN <= norm <= ECEF_NORM_MAX):
            raise ValueError(
                f"ECEF norm {norm:.3e} m outside sanity range "
                f"[{ECEF_NORM_MIN:.1e}, {ECEF_NORM_MAX:.1e}]"
            )

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=np.float64)


@dataclass(frozen=True)
class ConicalRegion:
    """Feasible deployment volume: minimum elevation seen from the region
    center plus an altitude band."""

    center: GeodeticPosition
    min_elevation: float = 10.0
    min_alt: float = 18_000.0
    max_alt: float = 22_000.0

    def __post_init__(self):
        if not (0.0 < self.min_elevation < 90.0):
            raise ValueError(f"min_elevation {self.min_elevation} outside (0, 90)")
        if self.min_alt > self.max_alt:
            raise ValueError(f"min_alt {self.min_alt} exceeds max_alt {self.max_alt}")


def _lla_to_ecef_scalar(lat_deg: float, lon_deg: float, alt: float):
    lat = math.radians(lat_deg)
    lon = math.radians(lon_deg)
    sin_lat = math.sin(lat)
    cos_lat = math.cos(lat)
    n = WGS84_A / math.sqrt(1.0 - WGS84_E2 * sin_lat * sin_lat)
    return (
        (n + alt) * cos_lat * math.cos(lon),
        (n + alt) * cos_lat * math.sin(lon),
        (n * (1.0 - WGS84_E2) + alt) * sin_lat,
    )


def _ecef_to_lla_scalar(x: float, y: float, z: float):
    p = math.hypot(x, y)
    lon = math.atan2(y, x)
    lat = math.atan2(z, p * (1.0 - WGS84_E2))
    h = 0.0
    for _ in range(8):
        sin_lat = math.sin(lat)
        cos_lat = math.cos(lat)
        n = WGS84_A / math.sqrt(1.0 - WGS84_E2 * sin_lat * sin_lat)
        # Stable altitude: horizontal form away from the poles, vertical near.
        if abs(cos_lat) > 1e-8:
            h = p / cos_lat - n
        else:
            h = z / sin_lat - n * (1.0 - WGS84_E2)
        lat = math.atan2(z, p * (1.0 - WGS84_E2 * n / (n + h)))
    return math.degrees(lat), math.degrees(lon), h


def lla_to_ecef_array(lla: np.ndarray) -> np.ndarray:
    """Vectorized geodetic -> ECEF for an (..., 3) array of [lat, lon, alt]."""
    lla = np.asarray(lla, dtype=np.float64)
    lat = np.deg2rad(lla[..., 0])
    lon = np.deg2rad(lla[..., 1])
    alt = lla[..., 2]
    sin_lat = np.sin(lat)
    cos_lat = np.cos(lat)
    n = WGS84_A / np.sqrt(1.0 - WGS84_E2 * sin_lat * sin_lat)
    x = (n + alt) * cos_lat * np.cos(lon)
    y = (n + alt) * cos_lat * np.sin(lon)
    z = (n * (1.0 - WGS84_E2) + alt) * sin_lat
    return np.stack([x, y, z], axis=-1)


def ecef_to_lla_array(xyz: np.ndarray) -> np.ndarray:
    """Vectorized ECEF -> geodetic, iterated to sub-micrometer convergence."""
    xyz = np.asarray(xyz, dtype=np.float64)
    x, y, z = xyz[..., 0], xyz[..., 1], xyz[..., 2]
    p = np.hypot(x, y)
    lon = np.arctan2(y, x)
    lat = np.arctan2(z, p * (1.0 - WGS84_E2))
    h = np.zeros_like(p)
    for _ in range(8):
        sin_lat = np.sin(lat)
        cos_lat = np.cos(lat)
        n = WGS84_A / np.sqrt(1.0 - WGS84_E2 * sin_lat * sin_lat)
        h = np.where(
            np.abs(cos_lat) > 1e-8,
            p / np.where(np.abs(cos_lat) > 1e-8, cos_lat, 1.0) - n,
            z / np.where(np.abs(sin_lat) > 1e-8, sin_lat, 1.0) - n * (1.0 - WGS84_E2),
        )
        lat = np.arctan2(z, p * (1.0 - WGS84_E2 * n / (n + h)))
    return np.stack([np.rad2deg(lat), np.rad2deg(lon), h], axis=-1)


def enu_rotation(lat_deg: float, lon_deg: float) -> np.ndarray:
    """Rotation matrix taking ECEF deltas to ENU at the given origin."""
    lat = math.radians(lat_deg)
    lon = math.radians(lon_deg)
    sin_lat, cos_lat = math.sin(lat), math.cos(lat)
    sin_lon, cos_lon = math.sin(lon), math.cos(lon)
    return np.array(
        [
            [-sin_lon, cos_lon, 0.0],
            [-sin_lat * cos_lon, -sin_lat * sin_lon, cos_lat],
            [cos_lat * cos_lon, cos_lat * sin_lon, sin_lat],
        ],
        dtype=np.float64,
    )


def lla_to_ecef(p: GeodeticPosition) -> EcefPosition:
    """Convert a geodetic position to ECEF on the WGS-84 ellipsoid."""
    x, y, z = _lla_to_ecef_scalar(p.lat, p.lon, p.alt)
    return EcefPosition(x, y, z)


def ecef_to_lla(p: EcefPosition) -> GeodeticPosition:
    """Convert an ECEF position to geodetic coordinates."""
    lat, lon, alt = _ecef_to_lla_scalar(p.x, p.y, p.z)
    return GeodeticPosition(lat, lon, alt)


def ecef_to_enu(point: EcefPosition, origin: GeodeticPosition) -> np.ndarray:
    """Express an ECEF point in the east/north/up frame at ``origin``."""
    frame = _TangentFrame(origin)
    return np.array(frame.enu_of_ecef(point.x, point.y, point.z))


def enu_to_ecef(enu: np.ndarray, origin: GeodeticPosition) -> EcefPosition:
    """Inverse of :func:`ecef_to_enu`."""
    frame = _TangentFrame(origin)
    x, y, z = frame.ecef_of_enu(float(enu[0]), float(enu[1]), float(enu[2]))
    return EcefPosition(x, y, z)


class _TangentFrame:
    """Scalar ENU frame at a geodetic origin (hot-loop friendly)."""

    __slots__ = ("origin", "ox", "oy", "oz", "r")

    def __init__(self, origin: GeodeticPosition):
        self.origin = origin
        self.ox, self.oy, self.oz = _lla_to_ecef_scalar(origin.lat, origin.lon, origin.alt)
        lat = math.radians(origin.lat)
        lon = math.radians(origin.lon)
        sin_lat, cos_lat = math.sin(lat), math.cos(lat)
        sin_lon, cos_lon = math.sin(lon), math.cos(lon)
        self.r = (
            (-sin_lon, cos_lon, 0.0),
            (-sin_lat * cos_lon, -sin_lat * sin_lon, cos_lat),
            (cos_lat * cos_lon, cos_lat * sin_lon, sin_lat),
        )

    def enu_of_ecef(self, x: float, y: float, z: float):
        dx, dy, dz = x - self.ox, y - self.oy, z - self.oz
        r = self.r
        return (
            r[0][0] * dx + r[0][1] * dy + r[0][2] * dz,
            r[1][0] * dx + r[1][1] * dy + r[1][2] * dz,
            r[2][0] * dx + r[2][1] * dy + r[2][2] * dz,
        )

    def ecef_of_enu(self, e: float, n: float, u: float):
        r = self.r
        return (
            self.ox + r[0][0] * e + r[1][0] * n + r[2][0] * u,
            self.oy + r[0][1] * e + r[1][1] * n + r[2][1] * u,
            self.oz + r[0][2] * e + r[1][2] * n + r[2][2] * u,
        )

    def enu_of_lla(self, lat: float, lon: float, alt: float):
        x, y, z = _lla_to_ecef_scalar(lat, lon, alt)
        return self.enu_of_ecef(x, y, z)

    def lla_of_enu(self, e: float, n: float, u: float):
        return _ecef_to_lla_scalar(*self.ecef_of_enu(e, n, u))


def _elevation_deg(east: float, north: float, up: float) -> float:
    rng = math.sqrt(east * east + north * north + up * up)
    if rng == 0.0:
        raise ValueError("zero range; elevation undefined")
    return math.degrees(math.asin(max(-1.0, min(1.0, up / rng))))


def elevation_azimuth(origin: GeodeticPosition, target: EcefPosition) -> tuple[float, float]:
    """Elevation and azimuth (degrees) of ``target`` seen from ``origin``.

    Azimuth is clockwise from north in [0, 360). Raises for zero range.
    """
    frame = _TangentFrame(origin)
    east, north, up = frame.enu_of_ecef(target.x, target.y, target.z)
    elevation = _elevation_deg(east, north, up)
    azimuth = math.degrees(math.atan2(east, north)) % 360.0
    return elevation, azimuth


def contains(region: ConicalRegion, p: GeodeticPosition) -> bool:
    """True iff ``p`` lies in the altitude band and meets the minimum
    elevation seen from the region center."""
    if not (region.min_alt <= p.alt <= region.max_alt):
        return False
    frame = _TangentFrame(region.center)
    return _frame_contains(frame, region, p.lat, p.lon, p.alt)


def _frame_contains(frame: _TangentFrame, region: ConicalRegion,
                    lat: float, lon: float, alt: float) -> bool:
    if not (region.min_alt <= alt <= region.max_alt):
        return False
    east, north, up = frame.enu_of_lla(lat, lon, alt)
    rng = math.sqrt(east * east + north * north + up * up)
    if rng == 0.0:
        return False  # coincides with the center: no elevation defined
    elevation = math.degrees(math.asin(max(-1.0, min(1.0, up / rng))))
    return elevation >= region.min_elevation


def _project_onto_cone_surface(e: float, n: float, u: float, min_elev_rad: float):
    """Euclidean projection of an ENU point onto the second-order cone
    {up >= tan(min_elev) * horizontal_distance} with apex at the origin."""
    horiz = math.hypot(e, n)
    tan_e = math.tan(min_elev_rad)
    if u >= horiz * tan_e:
        return e, n, u
    if horiz == 0.0 or u <= -horiz / tan_e:
        return 0.0, 0.0, 0.0  # inside the polar cone: nearest point is the apex
    cos_e = math.cos(min_elev_rad)
    sin_e = math.sin(min_elev_rad)
    t = horiz * cos_e + u * sin_e
    scale = t * cos_e / horiz
    return e * scale, n * scale, t * sin_e


def project_to_cone(p: GeodeticPosition, region: ConicalRegion) -> GeodeticPosition:
    """Nearest feasible point to ``p`` in the region, distance measured in
    the ENU frame at the region center.

    Alternates exact cone projection with altitude clamping until the point
    passes :func:`contains`; a bisection fallback onto the active altitude
    bound guarantees termination with exact containment.
    """
    if contains(region, p):
        return p
    frame = _TangentFrame(region.center)
    min_elev_rad = math.radians(region.min_elevation) + _CONE_MARGIN_RAD
    e, n, u = frame.enu_of_lla(p.lat, p.lon, p.alt)
    lat = lon = alt = 0.0
    for _ in range(10):
        e, n, u = _project_onto_cone_surface(e, n, u, min_elev_rad)
        lat, lon, alt = frame.lla_of_enu(e, n, u)
        alt = min(max(alt, region.min_alt), region.max_alt)
        if _frame_contains(frame, region, lat, lon, alt):
            return GeodeticPosition(lat, lon, alt)
        e, n, u = frame.enu_of_lla(lat, lon, alt)

    # Altitude is pinned to a bound but the elevation check still fails by
    # a sliver: shrink the horizontal offset at fixed altitude. The zenith
    # point (scale 0) is always feasible, so bisection terminates contained.
    lo, hi = 0.0, 1.0
    base_e, base_n = e, n
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        cand_lat, cand_lon, _ = frame.lla_of_enu(base_e * mid, base_n * mid, u)
        if _frame_contains(frame, region, cand_lat, cand_lon, alt):
            lo = mid
        else:
            hi = mid
    final_lat, final_lon, _ = frame.lla_of_enu(base_e * lo, base_n * lo, u)
    return GeodeticPosition(final_lat, final_lon, alt)


def sample_in_cone(region: ConicalRegion, rng: np.random.Generator) -> GeodeticPosition:
    """Draw a point uniformly (ENU volume measure) over the feasible region.

    Rejection sampling from the bounding cylinder of the truncated cone.
    """
    frame = _TangentFrame(region.center)
    c_alt = region.center.alt
    if region.max_alt <= c_alt:
        raise ValueError("region altitude band lies at or below the center altitude")
    tan_e = math.tan(math.radians(region.min_elevation))
    band = region.max_alt - region.min_alt

    if band == 0.0:
        # Degenerate slice: uniform over the disc at the single altitude.
        radius = max(region.min_alt - c_alt, 0.0) / tan_e
        u = region.min_alt - c_alt
        while True:
            az = rng.uniform(0.0, 2.0 * math.pi)
            r = radius * math.sqrt(rng.uniform())
            lat, lon, _ = frame.lla_of_enu(r * math.sin(az), r * math.cos(az), u)
            if _frame_contains(frame, region, lat, lon, region.min_alt):
                return GeodeticPosition(lat, lon, region.min_alt)

    # Cylinder inflated for the ellipsoid falling away from the tangent
    # plane, so it covers the geodetic altitude band everywhere.
    u_hi = region.max_alt - c_alt
    radius0 = max(u_hi, 0.0) / tan_e
    sag = 1.5 * radius0 * radius0 / (2.0 * 6.3e6)
    radius = (max(u_hi, 0.0) + sag) / tan_e
    u_lo = region.min_alt - c_alt - sag
    u_hi = u_hi + sag
    while True:
        az = rng.uniform(0.0, 2.0 * math.pi)
        r = radius * math.sqrt(rng.uniform())
        u = rng.uniform(u_lo, u_hi)
        lat, lon, alt = frame.lla_of_enu(r * math.sin(az), r * math.cos(az), u)
        if _frame_contains(frame, region, lat, lon, alt):
            return GeodeticPosition(lat, lon, alt)
