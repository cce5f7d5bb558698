"""Synthetic ledgers with planted topology-to-price coupling.

Every week has ``edges_per_week`` undirected wallet pairs:

* the cheapest 40% (amounts in ``[1, 2)``) form a forest of ``c_t`` trees,
  so ``beta0`` at the 40th-percentile scale is exactly ``c_t``;
* ``m_t`` vertex-disjoint whale triads ``a <-> b, b -> c, c -> a`` carry
  amounts above ``1e4`` and are the only arcs surviving the top-1% filter
  together with a few ordinary arcs, so the motif-2 count is exactly ``m_t``;
* the remaining pairs are single arcs with amounts in ``[10, 1000)``.

Price increments follow the topology one week later:

    y[t+1] = scale * (coupling * dc_t / sd(dc) + coupling * dm_t / sd(dm) + noise * e)
"""

import json
import math
from dataclasses import asdict, dataclass
from datetime import timedelta
from typing import Any

import numpy as np
import pandas as pd

from ledgertopo.config import (
    ISSUANCE_HEADER,
    PRICE_HEADER,
    TRANSACTION_HEADER,
    TRENDS_HEADER,
)
from ledgertopo.ingest import format_instant, parse_anchor
from ledgertopo.utils.exceptions import InputValidationError
from ledgertopo.utils.logging import get_logger
from ledgertopo.utils.paths import RunPaths

logger = get_logger(__name__)

LOW_SHARE_TENTHS = 4
WHALE_FLOOR = 1e4


@dataclass(frozen=True)
class SyntheticScenario:
    """Parameters of one synthetic data set; regenerable from these alone."""

    seed: int = 0
    weeks: int = 208
    edges_per_week: int = 1200
    coupling: float = 0.9
    noise: float = 0.1
    base_components: int = 40
    component_swing: float = 8.0
    wallets: int = 3000
    whale_pool: int = 60
    top_fraction: float = 0.01
    initial_price: float = 5.0
    price_scale: float = 0.1
    anchor: str = "2020-01-06T00:00:00Z"
    terms: tuple[str, ...] = ("democrats", "republicans")
    history_days: int = 365

    def __post_init__(self) -> None:
        checks = [
            (self.weeks >= 2, "weeks", "int >= 2"),
            (self.edges_per_week >= 50, "edges_per_week", "int >= 50"),
            (self.noise >= 0, "noise", "float >= 0"),
            (self.coupling >= 0, "coupling", "float >= 0"),
            (self.base_components >= 1, "base_components", "int >= 1"),
            (self.component_swing >= 0, "component_swing", "float >= 0"),
            (0 < self.top_fraction < 1, "top_fraction", "float in (0, 1)"),
            (self.price_scale > 0, "price_scale", "float > 0"),
        ]
        for ok, name, expected in checks:
            if not ok:
                raise InputValidationError(
                    f"Invalid scenario parameter {name}={getattr(self, name)}",
                    field=name,
                    value=getattr(self, name),
                    expected_type=expected,
                )
        low_trees = self.base_components - math.ceil(3 * self.component_swing)
        if low_trees < 1 or self.max_components > self.low_edges:
            raise InputValidationError(
                f"Component counts {low_trees}..{self.max_components} do not fit "
                f"a forest of {self.low_edges} low-weight pairs",
                field="component_swing",
                value=self.component_swing,
            )
        if self.max_components + self.low_edges > self.wallets:
            raise InputValidationError(
                "Wallet pool too small for the low-weight forest",
                field="wallets",
                value=self.wallets,
            )
        if 3 * self.max_triads > self.whale_pool:
            raise InputValidationError(
                f"Whale pool must hold {3 * self.max_triads} wallets",
                field="whale_pool",
                value=self.whale_pool,
            )

    @property
    def low_edges(self) -> int:
        """Pairs at or below the 40th-percentile scale."""
        return (LOW_SHARE_TENTHS * self.edges_per_week + 9) // 10

    @property
    def max_components(self) -> int:
        return self.base_components + math.ceil(3 * self.component_swing)

    @property
    def max_triads(self) -> int:
        """Most whale triads whose 4 arcs all fit in the top-fraction filter."""
        m = 0
        while True:
            arcs = self.edges_per_week + m + 1
            if 4 * (m + 1) > math.ceil(round(self.top_fraction * arcs, 9)):
                return m
            m += 1

    def to_dict(self) -> dict[str, Any]:
        data = asdict(self)
        data["terms"] = list(self.terms)
        return data

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SyntheticScenario":
        data = dict(data)
        if "terms" in data:
            data["terms"] = tuple(data["terms"])
        return cls(**data)


@dataclass
class SyntheticData:
    """Generated tables plus the planted schedules they were built from."""

    transactions: pd.DataFrame
    price: pd.DataFrame
    issuance: pd.DataFrame
    trends: pd.DataFrame
    components: np.ndarray
    triads: np.ndarray
    increments: np.ndarray


def _forest(
    rng: np.random.Generator, vertices: np.ndarray, trees: int
) -> list[tuple[int, int]]:
    """Random spanning forest with ``trees`` trees of at least 2 vertices each."""
    size = np.full(trees, 2)
    extra = len(vertices) - 2 * trees
    if extra:
        size += np.bincount(rng.integers(0, trees, size=extra), minlength=trees)
    edges = []
    start = 0
    for s in size:
        members = vertices[start : start + s]
        for i in range(1, s):
            edges.append((int(members[rng.integers(0, i)]), int(members[i])))
        start += s
    return edges


def _split_amount(rng: np.random.Generator, total: float) -> list[float]:
    if rng.random() < 0.5:
        return [total]
    first = total * rng.uniform(0.3, 0.7)
    return [first, total - first]


def synth_generate(scenario: SyntheticScenario) -> SyntheticData:
    """Generate transactions and auxiliary series for ``scenario``.

    The same scenario always yields identical tables.
    """
    rng = np.random.default_rng(scenario.seed)
    anchor = parse_anchor(scenario.anchor)
    n_weeks = scenario.weeks
    total = scenario.edges_per_week
    n_low = scenario.low_edges

    z = np.clip(rng.standard_normal(n_weeks), -3.0, 3.0)
    swing = np.rint(scenario.component_swing * z).astype(int)
    components = scenario.base_components + swing
    m_max = scenario.max_triads
    triads = rng.integers(0, m_max + 1, size=n_weeks)

    wallet_ids = [f"r{i:05d}" for i in range(scenario.wallets)]
    whale_ids = [f"x{i:03d}" for i in range(scenario.whale_pool)]

    rows: list[tuple[str, str, str, str]] = []
    for t in range(n_weeks):
        week_start = anchor + timedelta(weeks=t)
        arcs: list[tuple[str, str, float]] = []

        c_t = int(components[t])
        members = rng.permutation(scenario.wallets)[: n_low + c_t]
        used = set()
        for u, v in _forest(rng, members, c_t):
            used.add((min(u, v), max(u, v)))
            a, b = (u, v) if rng.random() < 0.5 else (v, u)
            arcs.append((wallet_ids[a], wallet_ids[b], float(rng.uniform(1.0, 2.0))))

        m_t = int(triads[t])
        whales = rng.permutation(scenario.whale_pool)[: 3 * m_t]
        for k in range(m_t):
            a, b, c = (whale_ids[int(i)] for i in whales[3 * k : 3 * k + 3])
            for src, dst in ((a, b), (b, a), (b, c), (c, a)):
                arcs.append((src, dst, float(WHALE_FLOOR * rng.uniform(1.0, 10.0))))

        remaining = total - n_low - 3 * m_t
        while remaining:
            u, v = (int(x) for x in rng.integers(0, scenario.wallets, size=2))
            key = (min(u, v), max(u, v))
            if u == v or key in used:
                continue
            used.add(key)
            amount = float(rng.uniform(10.0, 1000.0))
            arcs.append((wallet_ids[u], wallet_ids[v], amount))
            remaining -= 1

        for sender, receiver, amount in arcs:
            for part in _split_amount(rng, amount):
                offset = int(rng.integers(0, 7 * 86400))
                stamp = week_start + timedelta(seconds=offset)
                rows.append((format_instant(stamp), sender, receiver, repr(part)))

    rows.sort(key=lambda r: (r[0], r[1], r[2], r[3]))
    transactions = pd.DataFrame(rows, columns=list(TRANSACTION_HEADER))

    dc = np.diff(components).astype(float)
    dm = np.diff(triads).astype(float)
    sd_c = scenario.component_swing * math.sqrt(2) or 1.0
    sd_m = math.sqrt(2 * ((m_max + 1) ** 2 - 1) / 12) or 1.0
    noise = rng.standard_normal(n_weeks)
    increments = np.zeros(n_weeks)
    # increments[t] is y[t]; week t >= 2 reacts to the change from t-2 to t-1
    increments[1] = scenario.price_scale * scenario.noise * noise[1]
    for t in range(2, n_weeks):
        increments[t] = scenario.price_scale * (
            scenario.coupling * dc[t - 2] / sd_c
            + scenario.coupling * dm[t - 2] / sd_m
            + scenario.noise * noise[t]
        )
    prices = scenario.initial_price + np.cumsum(increments)
    week_ends = [(anchor + timedelta(weeks=t, days=6)).date() for t in range(n_weeks)]
    price = pd.DataFrame(
        {
            "date": [d.isoformat() for d in week_ends],
            "price": [repr(float(p)) for p in prices],
        },
        columns=list(PRICE_HEADER),
    )

    first_day = anchor.date() - timedelta(days=scenario.history_days)
    n_days = scenario.history_days + 7 * n_weeks
    walk = np.cumsum(0.02 * rng.standard_normal(n_days))
    issuance = pd.DataFrame(
        {
            "date": [
                (first_day + timedelta(days=i)).isoformat() for i in range(n_days)
            ],
            "issuance_usd": [repr(float(v)) for v in 1e7 * np.exp(walk)],
        },
        columns=list(ISSUANCE_HEADER),
    )

    trend_rows = []
    for term in scenario.terms:
        steps = rng.normal(0.0, 3.0, size=n_weeks)
        level = np.clip(50.0 + np.cumsum(steps), 0.0, 100.0)
        for t in range(n_weeks):
            day = (anchor + timedelta(weeks=t)).date()
            trend_rows.append((day.isoformat(), term, repr(float(level[t]))))
    trends = pd.DataFrame(trend_rows, columns=list(TRENDS_HEADER))

    logger.info(
        f"Generated {len(transactions)} transactions over {n_weeks} weeks "
        f"(seed {scenario.seed}, coupling {scenario.coupling})"
    )
    return SyntheticData(
        transactions, price, issuance, trends, components, triads, increments
    )


def write_scenario(scenario: SyntheticScenario, paths: RunPaths) -> SyntheticData:
    """Generate ``scenario`` and write its CSVs and ``scenario.json``."""
    data = synth_generate(scenario)
    paths.ensure_directory(paths.data_dir)
    for frame, target in (
        (data.transactions, paths.transactions),
        (data.price, paths.price),
        (data.issuance, paths.issuance),
        (data.trends, paths.trends),
    ):
        frame.to_csv(target, index=False, lineterminator="\n")
    paths.scenario.write_text(
        json.dumps(scenario.to_dict(), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    return data
