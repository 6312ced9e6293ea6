import math

import numpy as np
import pytest

from haps_deploy import geodesy
from haps_deploy.geodesy import (
    ConicalRegion,
    EcefPosition,
    GeodeticPosition,
    contains,
    ecef_to_enu,
    ecef_to_lla,
    elevation_azimuth,
    enu_to_ecef,
    lla_to_ecef,
    project_to_cone,
    sample_in_cone,
)


def reference_lla_to_ecef(lat_deg, lon_deg, h):
    """Independent forward transform via the reduced (parametric) latitude."""
    a = 6378137.0
    f = 1.0 / 298.257223563
    b = a * (1.0 - f)
    lat = math.radians(lat_deg)
    lon = math.radians(lon_deg)
    beta = math.atan((1.0 - f) * math.tan(lat))
    surface = np.array([
        a * math.cos(beta) * math.cos(lon),
        a * math.cos(beta) * math.sin(lon),
        b * math.sin(beta),
    ])
    normal = np.array([
        math.cos(lat) * math.cos(lon),
        math.cos(lat) * math.sin(lon),
        math.sin(lat),
    ])
    return surface + h * normal


class TestLlaToEcef:
    def test_equator_prime_meridian(self):
        p = lla_to_ecef(GeodeticPosition(0.0, 0.0, 0.0))
        assert p.x == pytest.approx(6378137.0, abs=1e-9)
        assert p.y == pytest.approx(0.0, abs=1e-9)
        assert p.z == pytest.approx(0.0, abs=1e-9)

    def test_pole_semi_minor_axis(self):
        p = lla_to_ecef(GeodeticPosition(90.0, 0.0, 0.0))
        assert abs(p.x) < 1e-8
        assert abs(p.y) < 1e-8
        assert p.z == pytest.approx(6356752.3142, abs=1e-3)

    def test_against_independent_reference(self):
        p = lla_to_ecef(GeodeticPosition(40.706, -74.009, 20_000.0))
        expected = reference_lla_to_ecef(40.706, -74.009, 20_000.0)
        assert np.linalg.norm(p.as_array() - expected) < 1e-6

    def test_round_trip_over_scenario_box(self, rng):
        for _ in range(300):
            lla = np.array([
                rng.uniform(40.0, 41.5),
                rng.uniform(-75.0, -73.0),
                rng.uniform(0.0, 22_000.0),
            ])
            ecef = geodesy.lla_to_ecef_array(lla)
            back = geodesy.ecef_to_lla_array(ecef)
            again = geodesy.lla_to_ecef_array(back)
            assert np.linalg.norm(again - ecef) < 1e-6

    def test_scalar_matches_array(self, rng):
        lla = np.array([40.7, -74.0, 20_000.0])
        scalar = lla_to_ecef(GeodeticPosition(*lla)).as_array()
        assert np.allclose(scalar, geodesy.lla_to_ecef_array(lla), rtol=0, atol=1e-9)

    def test_validation(self):
        with pytest.raises(ValueError):
            GeodeticPosition(91.0, 0.0, 0.0)
        with pytest.raises(ValueError):
            GeodeticPosition(0.0, 181.0, 0.0)
        with pytest.raises(ValueError):
            GeodeticPosition(0.0, 0.0, float("nan"))
        with pytest.raises(ValueError):
            EcefPosition(1000.0, 0.0, 0.0)  # below sanity floor


class TestEnu:
    def test_identity_at_origin(self):
        origin = GeodeticPosition(40.0, -74.0, 100.0)
        enu = ecef_to_enu(lla_to_ecef(origin), origin)
        assert np.linalg.norm(enu) < 1e-9

    def test_point_above_origin(self):
        origin = GeodeticPosition(40.0, -74.0, 100.0)
        above = lla_to_ecef(GeodeticPosition(40.0, -74.0, 200.0))
        enu = ecef_to_enu(above, origin)
        assert abs(enu[0]) < 1e-6
        assert abs(enu[1]) < 1e-6
        assert enu[2] == pytest.approx(100.0, abs=1e-6)

    def test_round_trip(self, rng):
        origin = GeodeticPosition(40.706, -74.009, 0.0)
        # 2e-9 is the double-precision floor here: the intermediate ECEF
        # coordinates are ~6.4e6 m, whose half-ulp alone is ~4.7e-10 m.
        for _ in range(50):
            enu = rng.uniform(-5e4, 5e4, size=3)
            back = ecef_to_enu(enu_to_ecef(enu, origin), origin)
            assert np.linalg.norm(back - enu) < 2e-9


class TestElevationAzimuth:
    def test_zenith(self):
        origin = GeodeticPosition(40.0, -74.0, 0.0)
        target = lla_to_ecef(GeodeticPosition(40.0, -74.0, 1000.0))
        elev, _ = elevation_azimuth(origin, target)
        assert elev == pytest.approx(90.0, abs=1e-6)

    def test_due_north_horizon(self):
        origin = GeodeticPosition(40.0, -74.0, 0.0)
        # ~1 km due north at equal geodetic altitude
        target = lla_to_ecef(GeodeticPosition(40.009, -74.0, 0.0))
        elev, az = elevation_azimuth(origin, target)
        assert abs(elev) < 0.01
        assert az == pytest.approx(0.0, abs=0.01) or az == pytest.approx(360.0, abs=0.01)

    def test_forty_five_east(self):
        origin = GeodeticPosition(40.0, -74.0, 0.0)
        target = enu_to_ecef(np.array([1000.0, 0.0, 1000.0]), origin)
        elev, az = elevation_azimuth(origin, target)
        assert elev == pytest.approx(45.0, abs=1e-9)
        assert az == pytest.approx(90.0, abs=1e-9)

    def test_zero_range_rejected(self):
        origin = GeodeticPosition(40.0, -74.0, 0.0)
        with pytest.raises(ValueError):
            elevation_azimuth(origin, lla_to_ecef(origin))


class TestContains:
    def test_zenith_point(self, demo_region):
        p = GeodeticPosition(
            demo_region.center.lat, demo_region.center.lon, 20_000.0
        )
        assert contains(demo_region, p)

    def test_low_elevation_excluded(self, demo_region):
        # 200 km north at 20 km altitude: elevation well under the mask.
        frame = geodesy._TangentFrame(demo_region.center)
        lat, lon, _ = frame.lla_of_enu(0.0, 200_000.0, 20_000.0)
        p = GeodeticPosition(lat, lon, 20_000.0)
        elev, _ = elevation_azimuth(demo_region.center, lla_to_ecef(p))
        assert elev < demo_region.min_elevation
        assert not contains(demo_region, p)

    def test_altitude_bound(self, demo_region):
        p = GeodeticPosition(
            demo_region.center.lat, demo_region.center.lon, 17_999.0
        )
        assert not contains(demo_region, p)


def _enu_distance(region, a: GeodeticPosition, b: GeodeticPosition) -> float:
    frame = geodesy._TangentFrame(region.center)
    return math.dist(frame.enu_of_lla(a.lat, a.lon, a.alt),
                     frame.enu_of_lla(b.lat, b.lon, b.alt))


def grid_projection_oracle(p: GeodeticPosition, region: ConicalRegion) -> float:
    """Coarse-to-fine grid search for the nearest feasible point; returns
    the best distance found (an upper bound on the true minimum)."""
    frame = geodesy._TangentFrame(region.center)
    pe, pn, pu = frame.enu_of_lla(p.lat, p.lon, p.alt)
    azimuth = math.atan2(pe, pn) if (pe, pn) != (0.0, 0.0) else 0.0
    sin_az, cos_az = math.sin(azimuth), math.cos(azimuth)

    r_hi = (region.max_alt - region.center.alt) / math.tan(
        math.radians(region.min_elevation)
    ) * 1.3
    lo_r, hi_r = 0.0, r_hi
    lo_u = region.min_alt - region.center.alt - 5000.0
    hi_u = region.max_alt - region.center.alt + 5000.0
    best = (math.inf, 0.0, 0.0)
    for _ in range(6):
        rs = np.linspace(lo_r, hi_r, 81)
        us = np.linspace(lo_u, hi_u, 81)
        for r in rs:
            e, n = r * sin_az, r * cos_az
            for u in us:
                lat, lon, alt = frame.lla_of_enu(e, n, u)
                if not (region.min_alt <= alt <= region.max_alt):
                    continue
                if not contains(region, GeodeticPosition(lat, lon, alt)):
                    continue
                d = math.dist((e, n, u), (pe, pn, pu))
                if d < best[0]:
                    best = (d, r, u)
        if not math.isfinite(best[0]):
            lo_u -= 5000.0
            hi_u += 5000.0
            continue
        dr = (hi_r - lo_r) / 80 * 2.0
        du = (hi_u - lo_u) / 80 * 2.0
        lo_r, hi_r = max(0.0, best[1] - dr), best[1] + dr
        lo_u, hi_u = best[2] - du, best[2] + du
    return best[0]


class TestProjectToCone:
    def test_feasible_point_unchanged(self, demo_region):
        p = GeodeticPosition(demo_region.center.lat, demo_region.center.lon, 20_000.0)
        assert project_to_cone(p, demo_region) == p

    def test_above_max_alt_clamps_altitude_only(self, demo_region):
        p = GeodeticPosition(demo_region.center.lat, demo_region.center.lon, 30_000.0)
        q = project_to_cone(p, demo_region)
        assert q.alt == demo_region.max_alt
        assert q.lat == pytest.approx(p.lat, abs=1e-9)
        assert q.lon == pytest.approx(p.lon, abs=1e-9)

    @pytest.mark.parametrize("offset_km,alt", [(120.0, 20_000.0), (60.0, 26_000.0), (150.0, 12_000.0)])
    def test_against_grid_oracle(self, demo_region, offset_km, alt):
        frame = geodesy._TangentFrame(demo_region.center)
        lat, lon, _ = frame.lla_of_enu(offset_km * 400.0, offset_km * 1000.0, alt)
        p = GeodeticPosition(lat, lon, alt)
        q = project_to_cone(p, demo_region)
        assert contains(demo_region, q)
        d_impl = _enu_distance(demo_region, p, q)
        d_oracle = grid_projection_oracle(p, demo_region)
        # The oracle distance upper-bounds the true minimum; the projection
        # must be at least as close, up to the stated meter-level slack.
        assert d_impl <= d_oracle + 1.0

    def test_low_elevation_case_against_oracle(self, demo_region):
        # 20 km altitude at 5 degrees elevation from the center: bisect the
        # north offset until the elevation lands on target.
        frame = geodesy._TangentFrame(demo_region.center)
        lo, hi = 1e3, 6e5
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            lat, lon, _ = frame.lla_of_enu(0.0, mid, 0.0)
            g = GeodeticPosition(lat, lon, 20_000.0)
            elev, _ = elevation_azimuth(demo_region.center, lla_to_ecef(g))
            if elev > 5.0:
                lo = mid
            else:
                hi = mid
        lat, lon, _ = frame.lla_of_enu(0.0, lo, 0.0)
        p = GeodeticPosition(lat, lon, 20_000.0)
        elev, _ = elevation_azimuth(demo_region.center, lla_to_ecef(p))
        assert 4.9 < elev < 5.1
        q = project_to_cone(p, demo_region)
        assert contains(demo_region, q)
        assert _enu_distance(demo_region, p, q) <= grid_projection_oracle(p, demo_region) + 1.0

    def test_random_points_contained_and_idempotent(self, demo_region, rng):
        for _ in range(2000):
            p = GeodeticPosition(
                float(rng.uniform(38.0, 43.0)),
                float(rng.uniform(-77.0, -71.0)),
                float(rng.uniform(-5000.0, 60_000.0)),
            )
            q = project_to_cone(p, demo_region)
            assert contains(demo_region, q)
            assert project_to_cone(q, demo_region) == q

    def test_extreme_points_still_project_inside(self, demo_region):
        extremes = [
            GeodeticPosition(90.0, 0.0, 0.0),
            GeodeticPosition(-90.0, 0.0, 50_000.0),
            GeodeticPosition(-40.706, 105.991, 20_000.0),  # near the antipode
            GeodeticPosition(0.0, -180.0, 0.0),
            GeodeticPosition(40.706, -74.009, -10_000.0),  # straight below
        ]
        for p in extremes:
            q = project_to_cone(p, demo_region)
            assert contains(demo_region, q)
            assert project_to_cone(q, demo_region) == q


class TestSampleInCone:
    def test_all_samples_contained(self, demo_region, rng):
        for _ in range(5000):
            assert contains(demo_region, sample_in_cone(demo_region, rng))

    def test_mean_altitude_matches_cone_volume_law(self, demo_region, rng):
        # Uniform density over the cone volume weights altitude h by the
        # disc area at h, i.e. by (h - apex)^2; the mean follows directly.
        h1, h2 = demo_region.min_alt, demo_region.max_alt
        apex = demo_region.center.alt
        mean_expected = apex + 0.75 * ((h2 - apex) ** 4 - (h1 - apex) ** 4) / (
            (h2 - apex) ** 3 - (h1 - apex) ** 3
        )
        alts = np.array([sample_in_cone(demo_region, rng).alt for _ in range(8000)])
        se = alts.std(ddof=1) / math.sqrt(len(alts))
        assert abs(alts.mean() - mean_expected) < 3.0 * se

    def test_sample_elevation_meets_mask(self, demo_region, rng):
        for _ in range(500):
            s = sample_in_cone(demo_region, rng)
            elev, _ = elevation_azimuth(demo_region.center, lla_to_ecef(s))
            assert elev >= demo_region.min_elevation - 1e-9

    def test_degenerate_band(self, rng):
        region = ConicalRegion(
            GeodeticPosition(40.706, -74.009, 0.0),
            min_elevation=10.0,
            min_alt=20_000.0,
            max_alt=20_000.0,
        )
        for _ in range(200):
            s = sample_in_cone(region, rng)
            assert s.alt == 20_000.0
            assert contains(region, s)


class TestRegionValidation:
    def test_bad_elevation(self):
        with pytest.raises(ValueError):
            ConicalRegion(GeodeticPosition(0.0, 0.0, 0.0), min_elevation=0.0)

    def test_inverted_band(self):
        with pytest.raises(ValueError):
            ConicalRegion(
                GeodeticPosition(0.0, 0.0, 0.0), min_alt=22_000.0, max_alt=18_000.0
            )
