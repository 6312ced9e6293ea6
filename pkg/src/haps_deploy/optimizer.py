"""Bi-objective evolutionary search over platform count and placement.

Minimizes (platform count, receiver-averaged position bound) with a
fixed-capacity real-coded genome: every individual carries n_max position
slots as normalized genes plus one real count gene; round(count_gene)
selects the active prefix. Variation uses adaptive SBX/BLX-alpha crossover
and polynomial mutation over all genes including the count, followed by
rounding and projection of every slot back into the deployment cone.

Diversity handling follows the special-crowding-distance family: the
decision-space distance between two individuals is the aggregated
nearest-neighbor distance (ANND) between their active position sets, the
objective-space distance is standard crowding, and the per-member special
distance switches between max and min of the two depending on the front
averages. Tournament selection is rank-first with the special distance as
tie-break. Survival admits whole Pareto fronts, splits the last one by
special distance, and force-retains the elite.

Elite selection is lexicographic: among individuals meeting the bound
threshold tau, fewest platforms first, then lowest bound; if none qualify,
the lowest bound overall.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional

import numpy as np

from . import crlb, geodesy
from .geodesy import ConicalRegion, GeodeticPosition

if TYPE_CHECKING:
    from .scenario import Scenario

SBX = "SBX"
BLX = "BLX"


@dataclass(frozen=True)
class GaParams:
    """Search parameters; defaults follow the reference configuration."""

    p_c: float = 0.9
    p_m: float = 0.01
    eta_c: float = 20.0
    eta_m: float = 20.0
    blx_alpha: float = 0.5
    n_pop: int = 50
    n_gen: int = 100
    n_min: int = 1
    n_max: int = 8
    d_dec_th: float = 0.5
    d_obj_th: float = 0.5
    tau: float = 20.0
    seed: int = 0
    # When True both parents of a pair must qualify for SBX, not just the first.
    crossover_requires_both: bool = False

    def __post_init__(self):
        if not (0.0 <= self.p_c <= 1.0 and 0.0 <= self.p_m <= 1.0):
            raise ValueError("crossover/mutation probabilities must be in [0, 1]")
        if not (1 <= self.n_min <= self.n_max):
            raise ValueError("need 1 <= n_min <= n_max")
        if self.n_pop < 1 or self.n_gen < 1:
            raise ValueError("population and generation counts must be positive")

    @property
    def n_genes(self) -> int:
        return 3 * self.n_max + 1


@dataclass
class Individual:
    """Fixed-capacity genome: (n_max, 3) slot genes in [0,1] plus count gene."""

    slots: np.ndarray
    count_gene: float

    def n_active(self, params: GaParams) -> int:
        return decode_count(self.count_gene, params)

    def to_genes(self) -> np.ndarray:
        return np.concatenate([self.slots.ravel(), [self.count_gene]])

    @classmethod
    def from_genes(cls, genes: np.ndarray, n_max: int) -> "Individual":
        return cls(
            slots=np.asarray(genes[:-1], dtype=np.float64).reshape(n_max, 3).copy(),
            count_gene=float(genes[-1]),
        )

    def copy(self) -> "Individual":
        return Individual(self.slots.copy(), self.count_gene)


def decode_count(count_gene: float, params: GaParams) -> int:
    """Half-up rounding of the count gene, clamped to [n_min, n_max]."""
    n = int(math.floor(count_gene + 0.5))
    return max(params.n_min, min(params.n_max, n))


@dataclass(frozen=True)
class GeneBox:
    """Affine map between normalized slot genes and lat/lon/alt."""

    lat_min: float
    lat_max: float
    lon_min: float
    lon_max: float
    alt_min: float
    alt_max: float

    @classmethod
    def from_region(cls, region: ConicalRegion) -> "GeneBox":
        # Bounding box of the cone's horizontal extent at the top altitude,
        # padded 10% so projected points always re-encode inside [0, 1].
        center = region.center
        reach = (region.max_alt - center.alt) / math.tan(math.radians(region.min_elevation))
        reach = max(reach, 1.0) * 1.10
        lat_rad = math.radians(center.lat)
        sin2 = math.sin(lat_rad) ** 2
        m_per_deg_lat = (
            math.pi / 180.0
            * geodesy.WGS84_A * (1.0 - geodesy.WGS84_E2)
            / (1.0 - geodesy.WGS84_E2 * sin2) ** 1.5
        )
        m_per_deg_lon = (
            math.pi / 180.0
            * geodesy.WGS84_A / math.sqrt(1.0 - geodesy.WGS84_E2 * sin2)
            * math.cos(lat_rad)
        )
        dlat = reach / m_per_deg_lat
        dlon = reach / max(m_per_deg_lon, 1e-9)
        return cls(
            lat_min=max(center.lat - dlat, -90.0),
            lat_max=min(center.lat + dlat, 90.0),
            lon_min=max(center.lon - dlon, -180.0),
            lon_max=min(center.lon + dlon, 180.0),
            alt_min=region.min_alt,
            alt_max=region.max_alt,
        )

    def decode(self, slots: np.ndarray) -> np.ndarray:
        """Slot genes (N, 3) in [0,1] to lat/lon/alt rows."""
        slots = np.asarray(slots, dtype=np.float64).reshape(-1, 3)
        out = np.empty_like(slots)
        out[:, 0] = self.lat_min + slots[:, 0] * (self.lat_max - self.lat_min)
        out[:, 1] = self.lon_min + slots[:, 1] * (self.lon_max - self.lon_min)
        out[:, 2] = self.alt_min + slots[:, 2] * max(self.alt_max - self.alt_min, 0.0)
        return out

    def encode(self, lla: np.ndarray) -> np.ndarray:
        lla = np.asarray(lla, dtype=np.float64).reshape(-1, 3)
        out = np.empty_like(lla)
        out[:, 0] = (lla[:, 0] - self.lat_min) / (self.lat_max - self.lat_min)
        out[:, 1] = (lla[:, 1] - self.lon_min) / (self.lon_max - self.lon_min)
        band = self.alt_max - self.alt_min
        out[:, 2] = (lla[:, 2] - self.alt_min) / band if band > 0 else 0.0
        return np.clip(out, 0.0, 1.0)


def decode_active_positions(ind: Individual, box: GeneBox, params: GaParams) -> np.ndarray:
    """Lat/lon/alt rows of the active slots."""
    return box.decode(ind.slots[: ind.n_active(params)])


def initialize_population(
    params: GaParams, region: ConicalRegion, rng: np.random.Generator,
    box: Optional[GeneBox] = None,
) -> list[Individual]:
    """Count genes uniform on [n_min, n_max]; every slot an independent
    uniform draw from the cone (inactive slots included)."""
    box = box or GeneBox.from_region(region)
    population = []
    for _ in range(params.n_pop):
        count_gene = float(rng.uniform(params.n_min, params.n_max))
        lla = np.empty((params.n_max, 3))
        for k in range(params.n_max):
            p = geodesy.sample_in_cone(region, rng)
            lla[k] = (p.lat, p.lon, p.alt)
        population.append(Individual(box.encode(lla), count_gene))
    return population


def _evaluate_one(ind: Individual, scenario: "Scenario", box: GeneBox, params: GaParams):
    positions = decode_active_positions(ind, box, params)
    report = crlb.evaluate_configuration(scenario, positions)
    return float(ind.n_active(params)), report.avg_crlb


def evaluate(
    population: list[Individual], scenario: "Scenario", params: GaParams,
    box: Optional[GeneBox] = None, threads: int = 1,
) -> np.ndarray:
    """Objective matrix: rows (active count, average position bound)."""
    box = box or GeneBox.from_region(scenario.region)
    if threads > 1 and len(population) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(lambda i: _evaluate_one(i, scenario, box, params), population))
    else:
        rows = [_evaluate_one(ind, scenario, box, params) for ind in population]
    return np.array(rows, dtype=np.float64).reshape(-1, 2)


def fast_nondominated_sort(F: np.ndarray) -> tuple[list[list[int]], np.ndarray]:
    """Pareto fronts (1-based ranks) under minimization of both columns."""
    F = np.asarray(F, dtype=np.float64)
    n = len(F)
    le = (F[:, None, :] <= F[None, :, :]).all(axis=2)
    lt = (F[:, None, :] < F[None, :, :]).any(axis=2)
    dominates = le & lt
    dominated_by = dominates.sum(axis=0)
    ranks = np.zeros(n, dtype=np.int64)
    fronts: list[list[int]] = []
    remaining = dominated_by.copy()
    current = np.nonzero(remaining == 0)[0]
    rank = 1
    assigned = 0
    while len(current):
        fronts.append([int(i) for i in current])
        ranks[current] = rank
        assigned += len(current)
        remaining[current] = -1
        for i in current:
            remaining[dominates[i]] -= 1
        current = np.nonzero(remaining == 0)[0]
        rank += 1
    assert assigned == n
    return fronts, ranks


def annd(a: Individual, b: Individual, params: GaParams) -> float:
    """Aggregated nearest-neighbor distance between two active gene sets.

    The set with fewer active platforms (ties: ``a``) is matched against
    the other; the per-point minimum distances are averaged.
    """
    na, nb = a.n_active(params), b.n_active(params)
    if na <= nb:
        small, large = a.slots[:na], b.slots[:nb]
    else:
        small, large = b.slots[:nb], a.slots[:na]
    diff = small[:, None, :] - large[None, :, :]
    dists = np.sqrt((diff * diff).sum(axis=2))
    return float(dists.min(axis=1).mean())


def crowding_distances(
    front: list[int], population: list[Individual], F: np.ndarray, params: GaParams,
) -> tuple[np.ndarray, np.ndarray]:
    """Decision-space (ANND to two nearest neighbors) and objective-space
    (standard crowding) distances, each normalized to [0,1] per front."""
    m = len(front)
    if m == 1:
        return np.array([math.inf]), np.array([math.inf])

    d_obj = np.zeros(m)
    sub = F[front]
    for col in range(2):
        order = np.argsort(sub[:, col], kind="stable")
        vals = sub[order, col]
        span = vals[-1] - vals[0]
        d_obj[order[0]] = math.inf
        d_obj[order[-1]] = math.inf
        if span > 0:
            for k in range(1, m - 1):
                if math.isfinite(d_obj[order[k]]):
                    d_obj[order[k]] += (vals[k + 1] - vals[k - 1]) / span

    pairwise = np.zeros((m, m))
    for i in range(m):
        for j in range(m):
            if i != j:
                pairwise[i, j] = annd(population[front[i]], population[front[j]], params)
    d_dec = np.empty(m)
    for i in range(m):
        others = np.delete(pairwise[i], i)
        others.sort()
        take = min(2, len(others))
        d_dec[i] = others[:take].mean()

    return _normalize_per_front(d_dec), _normalize_per_front(d_obj)


def _normalize_per_front(d: np.ndarray) -> np.ndarray:
    finite = np.isfinite(d)
    if finite.any():
        top = d[finite].max()
        if top > 0:
            d = d.copy()
            d[finite] = d[finite] / top
    return d


def special_crowding_distance(d_dec: np.ndarray, d_obj: np.ndarray) -> np.ndarray:
    """Max of the two distances for members above either front average,
    min for the rest."""
    fin_dec = d_dec[np.isfinite(d_dec)]
    fin_obj = d_obj[np.isfinite(d_obj)]
    avg_dec = fin_dec.mean() if len(fin_dec) else 0.0
    avg_obj = fin_obj.mean() if len(fin_obj) else 0.0
    out = np.empty(len(d_dec))
    for i in range(len(d_dec)):
        if d_dec[i] > avg_dec or d_obj[i] > avg_obj:
            out[i] = max(d_dec[i], d_obj[i])
        else:
            out[i] = min(d_dec[i], d_obj[i])
    return out


def compute_diversity(
    population: list[Individual], F: np.ndarray, fronts: list[list[int]], params: GaParams,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-individual (d_dec, d_obj, d_scd) across all fronts."""
    n = len(population)
    d_dec = np.empty(n)
    d_obj = np.empty(n)
    d_scd = np.empty(n)
    for front in fronts:
        dd, do = crowding_distances(front, population, F, params)
        ds = special_crowding_distance(dd, do)
        for k, idx in enumerate(front):
            d_dec[idx] = dd[k]
            d_obj[idx] = do[k]
            d_scd[idx] = ds[k]
    return d_dec, d_obj, d_scd


def elite_select(F: np.ndarray, tau: float) -> int:
    """Index of the best individual: fewest platforms among those meeting
    tau (ties: lower bound, then lower index); otherwise lowest bound."""
    F = np.asarray(F, dtype=np.float64)
    feasible = np.nonzero(F[:, 1] <= tau)[0]
    if len(feasible):
        keys = [(F[i, 0], F[i, 1], i) for i in feasible]
    else:
        keys = [(F[i, 1], F[i, 0], i) for i in range(len(F))]
    return int(min(keys)[2])


def tournament_select(
    ranks: np.ndarray, d_scd: np.ndarray, rng: np.random.Generator, n_parents: int,
) -> np.ndarray:
    """Binary tournaments on uniform pairs: lower rank wins, then higher
    special distance, then a coin flip."""
    n = len(ranks)
    winners = np.empty(n_parents, dtype=np.int64)
    for t in range(n_parents):
        i = int(rng.integers(n))
        j = int(rng.integers(n))
        if ranks[i] < ranks[j]:
            winners[t] = i
        elif ranks[j] < ranks[i]:
            winners[t] = j
        elif d_scd[i] > d_scd[j]:
            winners[t] = i
        elif d_scd[j] > d_scd[i]:
            winners[t] = j
        else:
            winners[t] = i if rng.random() < 0.5 else j
    return winners


def assign_crossover_type(rank: int, d_dec: float, d_obj: float, params: GaParams) -> str:
    """SBX only for rank-1 members spread out in both spaces; BLX otherwise."""
    if rank == 1 and d_dec > params.d_dec_th and d_obj > params.d_obj_th:
        return SBX
    return BLX


def pair_crossover_type(
    ia: int, ib: int, ranks: np.ndarray, d_dec: np.ndarray, d_obj: np.ndarray,
    params: GaParams,
) -> str:
    """Crossover type for a parent pair: decided by the first parent, or by
    both when ``crossover_requires_both`` is set."""
    kind = assign_crossover_type(int(ranks[ia]), float(d_dec[ia]), float(d_obj[ia]), params)
    if kind == SBX and params.crossover_requires_both:
        kind_b = assign_crossover_type(
            int(ranks[ib]), float(d_dec[ib]), float(d_obj[ib]), params
        )
        if kind_b != SBX:
            return BLX
    return kind


def _gene_bounds(params: GaParams) -> tuple[np.ndarray, np.ndarray]:
    lo = np.zeros(params.n_genes)
    hi = np.ones(params.n_genes)
    lo[-1] = params.n_min
    hi[-1] = params.n_max
    return lo, hi


def sbx_crossover(
    p1: Individual, p2: Individual, eta_c: float, rng: np.random.Generator, params: GaParams,
) -> tuple[Individual, Individual]:
    """Simulated binary crossover over all genes with per-gene 0.5 swap."""
    x1 = p1.to_genes()
    x2 = p2.to_genes()
    lo, hi = _gene_bounds(params)
    u = rng.random(params.n_genes)
    u_swap = rng.random(params.n_genes)
    beta = np.where(
        u <= 0.5,
        (2.0 * u) ** (1.0 / (eta_c + 1.0)),
        (1.0 / (2.0 * (1.0 - u))) ** (1.0 / (eta_c + 1.0)),
    )
    c1 = 0.5 * ((1.0 + beta) * x1 + (1.0 - beta) * x2)
    c2 = 0.5 * ((1.0 - beta) * x1 + (1.0 + beta) * x2)
    swap = u_swap < 0.5
    c1_final = np.where(swap, c2, c1)
    c2_final = np.where(swap, c1, c2)
    c1_final = np.clip(c1_final, lo, hi)
    c2_final = np.clip(c2_final, lo, hi)
    return (
        Individual.from_genes(c1_final, params.n_max),
        Individual.from_genes(c2_final, params.n_max),
    )


def blx_crossover(
    p1: Individual, p2: Individual, alpha: float, rng: np.random.Generator, params: GaParams,
) -> tuple[Individual, Individual]:
    """Blend crossover: children uniform on the alpha-expanded gene interval."""
    x1 = p1.to_genes()
    x2 = p2.to_genes()
    lo_b, hi_b = _gene_bounds(params)
    low = np.minimum(x1, x2)
    high = np.maximum(x1, x2)
    spread = high - low
    lo = low - alpha * spread
    hi = high + alpha * spread
    u1 = rng.random(params.n_genes)
    u2 = rng.random(params.n_genes)
    c1 = np.clip(lo + u1 * (hi - lo), lo_b, hi_b)
    c2 = np.clip(lo + u2 * (hi - lo), lo_b, hi_b)
    return (
        Individual.from_genes(c1, params.n_max),
        Individual.from_genes(c2, params.n_max),
    )


def polynomial_mutation(
    ind: Individual, eta_m: float, rng: np.random.Generator, params: GaParams,
) -> Individual:
    """Bounded polynomial mutation, per-gene probability 1/n_genes."""
    x = ind.to_genes()
    lo, hi = _gene_bounds(params)
    span = np.where(hi > lo, hi - lo, 1.0)  # degenerate count range: clip pins it
    d = params.n_genes
    u_fire = rng.random(d)
    u = rng.random(d)
    fire = u_fire < (1.0 / d)

    delta_l = (x - lo) / span
    delta_r = (hi - x) / span
    exp = 1.0 / (eta_m + 1.0)
    low_branch = u < 0.5
    val_low = 2.0 * u + (1.0 - 2.0 * u) * (1.0 - delta_l) ** (eta_m + 1.0)
    val_high = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * (1.0 - delta_r) ** (eta_m + 1.0)
    delta_q = np.where(low_branch, val_low ** exp - 1.0, 1.0 - val_high ** exp)

    mutated = np.where(fire, np.clip(x + delta_q * span, lo, hi), x)
    return Individual.from_genes(mutated, params.n_max)


def repair(ind: Individual, region: ConicalRegion, box: GeneBox, params: GaParams) -> Individual:
    """Clamp the count gene and project every slot into the cone.

    Slots already feasible keep their exact genes; violating slots are
    projected to the nearest feasible point and re-encoded.
    """
    count_gene = min(max(ind.count_gene, float(params.n_min)), float(params.n_max))
    slots = np.clip(ind.slots, 0.0, 1.0)
    lla = box.decode(slots)
    out = slots.copy()
    for k in range(len(slots)):
        p = GeodeticPosition(float(lla[k, 0]), float(lla[k, 1]), float(lla[k, 2]))
        if geodesy.contains(region, p):
            out[k] = slots[k]
        else:
            fixed = geodesy.project_to_cone(p, region)
            out[k] = box.encode(np.array([[fixed.lat, fixed.lon, fixed.alt]]))[0]
    return Individual(out, count_gene)


def environmental_selection(
    population: list[Individual], F: np.ndarray, params: GaParams,
) -> tuple[list[Individual], np.ndarray]:
    """Survival of n_pop from the parent+offspring pool: whole fronts while
    they fit, the splitting front by special distance (ties: lower pool
    index), with the pool's elite force-retained."""
    fronts, _ = fast_nondominated_sort(F)
    selected: list[int] = []
    for front in fronts:
        remaining = params.n_pop - len(selected)
        if remaining <= 0:
            break
        if len(front) <= remaining:
            selected.extend(front)
            continue
        dd, do = crowding_distances(front, population, F, params)
        ds = special_crowding_distance(dd, do)
        order = sorted(range(len(front)), key=lambda k: (-ds[k], front[k]))
        selected.extend(front[k] for k in order[:remaining])
        break

    # The elite is rank 1, so it can only have been lost to a split of the
    # first front; the last admitted member is that front's weakest survivor.
    elite = elite_select(F, params.tau)
    if elite not in selected:
        selected[-1] = elite

    new_pop = [population[i] for i in selected]
    new_f = F[selected].copy()
    return new_pop, new_f


@dataclass
class GenerationTrace:
    """Per-generation record; bests are cumulative so traces never regress."""

    generation: int
    best_count: int
    best_crlb: float
    best_positions: np.ndarray  # (count, 3) lat/lon/alt
    per_count_best: dict
    objectives: np.ndarray  # population objective rows at generation start


@dataclass
class RunResult:
    best_count: int
    best_crlb: float
    best_positions: np.ndarray
    tau_satisfied: bool
    trace: list
    final_objectives: np.ndarray
    final_population: list = field(repr=False, default_factory=list)


def _best_key(count: float, value: float, tau: float):
    # Threshold-feasible solutions order by (count, value); the rest by value.
    if value <= tau:
        return (0, count, value)
    return (1, value, count)


def run(
    scenario: "Scenario",
    params: Optional[GaParams] = None,
    rng: Optional[np.random.Generator] = None,
    threads: int = 1,
) -> RunResult:
    """Full generational loop; deterministic for a fixed seed.

    Random draws happen only on the sequential path (initialization, then
    per generation: tournament, crossover, mutation), so evaluation
    parallelism cannot change results.
    """
    params = params or scenario.ga
    if rng is None:
        rng = np.random.Generator(np.random.Philox(params.seed))
    region = scenario.region
    box = GeneBox.from_region(region)

    population = initialize_population(params, region, rng, box)
    F = evaluate(population, scenario, params, box, threads)

    per_count_best: dict[int, float] = {}
    best = None  # (key, count, value, positions)

    def absorb(pop, objectives):
        nonlocal best
        for ind, row in zip(pop, objectives):
            count = int(row[0])
            value = float(row[1])
            prev = per_count_best.get(count)
            if prev is None or value < prev:
                per_count_best[count] = value
            key = _best_key(count, value, params.tau)
            if best is None or key < best[0]:
                best = (key, count, value, decode_active_positions(ind, box, params))

    absorb(population, F)
    trace: list[GenerationTrace] = []

    for generation in range(1, params.n_gen + 1):
        fronts, ranks = fast_nondominated_sort(F)
        # Explicit elitism in survival keeps the population elite equal to
        # the global best, so the trace reports that directly.
        trace.append(
            GenerationTrace(
                generation=generation,
                best_count=best[1],
                best_crlb=best[2],
                best_positions=best[3].copy(),
                per_count_best=dict(per_count_best),
                objectives=F.copy(),
            )
        )
        d_dec_all, d_obj_all, d_scd = compute_diversity(population, F, fronts, params)
        parents = tournament_select(ranks, d_scd, rng, params.n_pop)

        offspring: list[Individual] = []
        i = 0
        while len(offspring) < params.n_pop:
            ia = int(parents[i % params.n_pop])
            ib = int(parents[(i + 1) % params.n_pop])
            a = population[ia]
            b = population[ib]
            i += 2
            if rng.random() <= params.p_c:
                kind = pair_crossover_type(ia, ib, ranks, d_dec_all, d_obj_all, params)
                if kind == SBX:
                    c1, c2 = sbx_crossover(a, b, params.eta_c, rng, params)
                else:
                    c1, c2 = blx_crossover(a, b, params.blx_alpha, rng, params)
            else:
                c1, c2 = a.copy(), b.copy()
            if rng.random() <= params.p_m:
                c1 = polynomial_mutation(c1, params.eta_m, rng, params)
                c2 = polynomial_mutation(c2, params.eta_m, rng, params)
            offspring.append(repair(c1, region, box, params))
            if len(offspring) < params.n_pop:
                offspring.append(repair(c2, region, box, params))

        F_off = evaluate(offspring, scenario, params, box, threads)
        absorb(offspring, F_off)
        population, F = environmental_selection(
            population + offspring, np.vstack([F, F_off]), params
        )

    return RunResult(
        best_count=best[1],
        best_crlb=best[2],
        best_positions=best[3],
        tau_satisfied=best[2] <= params.tau,
        trace=trace,
        final_objectives=F.copy(),
        final_population=population,
    )
