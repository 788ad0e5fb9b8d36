"""Domain types for the cutting stock problem and pattern arithmetic."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np
from scipy.stats import norm

FEAS_RTOL = 1e-9


class ContractError(ValueError):
    """Raised when an operation is called with arguments violating its contract."""


class InfeasibleInstanceError(ValueError):
    """Raised when some item does not fit into an empty roll/node."""

    def __init__(self, message: str, item: int | None = None):
        super().__init__(message)
        self.item = item


@dataclass(frozen=True)
class Item:
    demand: int
    size: float | None = None
    mean: float | None = None
    std: float | None = None

    def __post_init__(self):
        if int(self.demand) != self.demand or self.demand < 1:
            raise ContractError(f"demand must be a positive integer, got {self.demand!r}")
        if self.size is not None:
            if self.mean is not None or self.std is not None:
                raise ContractError("an item is either deterministic or gaussian, not both")
            if not self.size > 0:
                raise ContractError(f"size must be positive, got {self.size!r}")
        else:
            if self.mean is None or self.std is None:
                raise ContractError("gaussian item needs both mean and std")
            if not self.mean > 0 or self.std < 0:
                raise ContractError(f"invalid gaussian item mean={self.mean} std={self.std}")

    @property
    def gaussian(self) -> bool:
        return self.size is None


def safety_factor(alpha: float) -> float:
    """Standard normal quantile used as the chance-constraint safety factor."""
    if not 0.5 < alpha < 1.0:
        raise ContractError(f"alpha must lie in (0.5, 1), got {alpha}")
    return float(norm.ppf(alpha))


class Instance:
    """A one-dimensional cutting stock instance.

    Items are homogeneous: either every item has a deterministic ``size``
    or every item has a gaussian ``(mean, std)``. For the gaussian kind a
    pattern ``a`` is feasible iff
    ``sum(mean*a) + D * sqrt(sum(std**2 * a)) <= capacity``.

    ``safety`` overrides the factor derived from ``alpha``; it exists for
    callers who want to pin ``D`` directly (e.g. ``D = 2.33``).
    """

    def __init__(
        self,
        items: Sequence[Item],
        capacity: float,
        alpha: float | None = None,
        safety: float | None = None,
        name: str = "",
    ):
        if len(items) == 0:
            raise ContractError("instance needs at least one item")
        kinds = {it.gaussian for it in items}
        if len(kinds) != 1:
            raise ContractError("mixing deterministic and gaussian items is not supported")
        if not capacity > 0:
            raise ContractError(f"capacity must be positive, got {capacity}")
        self.items = tuple(items)
        self.capacity = float(capacity)
        self.name = name
        self.gaussian = kinds.pop()
        if self.gaussian:
            if safety is None:
                alpha = 0.99 if alpha is None else float(alpha)
                safety = safety_factor(alpha)
            elif safety < 0:
                raise ContractError("safety factor must be nonnegative")
            self.alpha = alpha
            self.safety = float(safety)
            self.sizes = np.array([it.mean for it in items], dtype=float)
            self.variances = np.array([it.std**2 for it in items], dtype=float)
        else:
            if alpha is not None or safety is not None:
                raise ContractError("alpha only applies to gaussian instances")
            self.alpha = None
            self.safety = 0.0
            self.sizes = np.array([it.size for it in items], dtype=float)
            self.variances = np.zeros(len(items))
        self.demands = np.array([it.demand for it in items], dtype=np.int64)
        self.multiplicities = np.array(
            [_max_multiplicity(self, k) for k in range(self.K)], dtype=np.int64
        )
        bad = np.flatnonzero(self.multiplicities < 1)
        if bad.size:
            k = int(bad[0])
            raise InfeasibleInstanceError(
                f"item {k} does not fit into capacity {self.capacity:g} on its own", item=k
            )

    @property
    def K(self) -> int:
        return len(self.items)

    @property
    def kind(self) -> str:
        return "chance" if self.gaussian else "linear"

    def __repr__(self) -> str:
        return f"Instance(kind={self.kind}, K={self.K}, capacity={self.capacity:g})"

    # -- serialization -------------------------------------------------
    def to_dict(self) -> dict:
        d: dict = {"kind": self.kind, "capacity": self.capacity}
        if self.gaussian:
            if self.alpha is not None:
                d["alpha"] = self.alpha
            else:
                d["safety"] = self.safety
            d["items"] = [
                {"mean": it.mean, "std": it.std, "demand": it.demand} for it in self.items
            ]
        else:
            d["items"] = [{"size": it.size, "demand": it.demand} for it in self.items]
        return d

    @classmethod
    def from_dict(cls, d: dict, name: str = "") -> "Instance":
        try:
            kind = d["kind"]
            raw = d["items"]
            capacity = float(d["capacity"])
        except (KeyError, TypeError) as exc:
            raise ContractError(f"malformed instance: missing {exc}") from None
        if kind not in ("linear", "chance"):
            raise ContractError(f"unknown instance kind {kind!r}")
        items = []
        for r in raw:
            if kind == "linear":
                if "size" not in r:
                    raise ContractError("linear instance items need a 'size'")
                items.append(Item(demand=int(r["demand"]), size=float(r["size"])))
            else:
                if "mean" not in r or "std" not in r:
                    raise ContractError("chance instance items need 'mean' and 'std'")
                items.append(
                    Item(demand=int(r["demand"]), mean=float(r["mean"]), std=float(r["std"]))
                )
        if kind == "linear":
            return cls(items, capacity, name=name)
        alpha = d.get("alpha")
        safety = d.get("safety")
        if alpha is None and safety is None:
            alpha = 0.99
        return cls(items, capacity, alpha=alpha, safety=safety, name=name)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def load(cls, path: str | Path) -> "Instance":
        path = Path(path)
        with open(path) as fh:
            return cls.from_dict(json.load(fh), name=path.stem)


def _fits(instance: Instance, lin: float, var: float) -> bool:
    cap = instance.capacity
    if instance.gaussian:
        lin = lin + instance.safety * math.sqrt(var)
    return lin <= cap + FEAS_RTOL * cap


def pattern_feasible(instance: Instance, counts: Sequence[int] | np.ndarray) -> bool:
    a = np.asarray(counts)
    if a.shape != (instance.K,):
        raise ContractError(f"pattern has length {a.shape}, instance has K={instance.K}")
    if np.any(a < 0):
        raise ContractError("pattern counts must be nonnegative")
    return _fits(instance, float(a @ instance.sizes), float(a @ instance.variances))


def _max_multiplicity(instance: Instance, k: int) -> int:
    size, var = instance.sizes[k], instance.variances[k]
    hi = int(math.floor(instance.capacity * (1 + FEAS_RTOL) / size)) + 1
    lo = 0
    # largest m with fits(m); fits is monotone in m
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if _fits(instance, mid * size, mid * var):
            lo = mid
        else:
            hi = mid
    return lo


@dataclass(frozen=True)
class Pattern:
    counts: tuple[int, ...]

    def __post_init__(self):
        if not any(self.counts):
            raise ContractError("a pattern must contain at least one item")
        if any(c < 0 for c in self.counts):
            raise ContractError("pattern counts must be nonnegative")

    @classmethod
    def of(cls, counts: Iterable[int]) -> "Pattern":
        return cls(tuple(int(c) for c in counts))

    def __len__(self) -> int:
        return len(self.counts)

    def as_array(self) -> np.ndarray:
        return np.array(self.counts, dtype=np.int64)


def reduced_cost(pattern: Pattern, duals: "DualVector | Sequence[float]") -> float:
    values = duals.values if isinstance(duals, DualVector) else np.asarray(duals, dtype=float)
    if len(values) != len(pattern.counts):
        raise ContractError("pattern and dual vector dimensions differ")
    return 1.0 - float(np.dot(values, pattern.counts))


def singleton_pattern(instance: Instance, k: int) -> Pattern:
    if not 0 <= k < instance.K:
        raise ContractError(f"item index {k} out of range")
    counts = [0] * instance.K
    counts[k] = int(instance.multiplicities[k])
    return Pattern(tuple(counts))


class ColumnPool:
    """Insertion-ordered set of distinct patterns."""

    def __init__(self, K: int, patterns: Iterable[Pattern] = ()):
        self.K = K
        self._patterns: list[Pattern] = []
        self._index: dict[tuple[int, ...], int] = {}
        for p in patterns:
            self.add(p)

    def add(self, pattern: Pattern) -> bool:
        """Append ``pattern``; return False if it was already pooled."""
        if len(pattern.counts) != self.K:
            raise ContractError(f"pattern length {len(pattern.counts)} != K={self.K}")
        if pattern.counts in self._index:
            return False
        self._index[pattern.counts] = len(self._patterns)
        self._patterns.append(pattern)
        return True

    def __contains__(self, pattern: object) -> bool:
        return isinstance(pattern, Pattern) and pattern.counts in self._index

    def __len__(self) -> int:
        return len(self._patterns)

    def __iter__(self) -> Iterator[Pattern]:
        return iter(self._patterns)

    def __getitem__(self, i: int) -> Pattern:
        return self._patterns[i]

    def copy(self) -> "ColumnPool":
        return ColumnPool(self.K, self._patterns)

    def matrix(self) -> np.ndarray:
        """Pattern counts as a K x |pool| float matrix (one column per pattern)."""
        if not self._patterns:
            return np.zeros((self.K, 0))
        return np.array([p.counts for p in self._patterns], dtype=float).T

    def covered(self) -> np.ndarray:
        """Boolean mask of items appearing in some pooled pattern."""
        mask = np.zeros(self.K, dtype=bool)
        for p in self._patterns:
            mask |= np.asarray(p.counts) > 0
        return mask


class DualVector:
    """Covering-constraint duals, clamped to be nonnegative."""

    def __init__(self, values: Sequence[float] | np.ndarray, tol: float = 1e-7):
        v = np.asarray(values, dtype=float).copy()
        if np.any(v < -tol):
            raise ContractError(f"dual value {v.min():.3g} is negative beyond tolerance")
        v[v < 0] = 0.0
        self.values = v

    def __len__(self) -> int:
        return len(self.values)

    def __repr__(self) -> str:
        return f"DualVector({self.values.tolist()})"


@dataclass
class CgConfig:
    """Hyperparameters of the column generation run.

    ``num_path`` and ``depth`` default to ``None`` which resolves per
    instance: 10 paths for linear and 4 for chance instances, depth K.
    """

    num_column: int = 3
    num_path: int | None = None
    depth: int | None = None
    selection_times: int = 6
    dual_objective_threshold: float = 0.05
    dual_throttles: int = 4
    sub_time_limit: float = 60.0
    sub_throttles: int = 3
    csp_time_limit: float = 60.0
    csp_node_limit: int = 20000
    convergence: bool = True
    sample_fraction: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.num_column < 1:
            raise ContractError("num_column must be >= 1")
        if self.num_path is not None and self.num_path < 0:
            raise ContractError("num_path must be >= 0")
        if self.depth is not None and self.depth < 1:
            raise ContractError("depth must be >= 1")
        if self.selection_times < 0:
            raise ContractError("selection_times must be >= 0")
        if self.dual_objective_threshold < 0:
            raise ContractError("dual_objective_threshold must be >= 0")
        if self.dual_throttles < 1 or self.sub_throttles < 1:
            raise ContractError("throttles must be >= 1")
        if self.sub_time_limit < 0 or self.csp_time_limit < 0 or self.csp_node_limit < 1:
            raise ContractError("limits must be nonnegative")
        if not 0 < self.sample_fraction <= 1:
            raise ContractError("sample_fraction must lie in (0, 1]")
        if not 0 <= self.seed < 2**64:
            raise ContractError("seed must be a 64-bit unsigned integer")

    def paths_for(self, instance: Instance) -> int:
        if self.num_path is not None:
            return self.num_path
        return 4 if instance.gaussian else 10

    def depth_for(self, instance: Instance) -> int:
        return self.depth if self.depth is not None else instance.K

    @classmethod
    def field_names(cls) -> list[str]:
        return list(cls.__dataclass_fields__)

    def replace(self, **changes) -> "CgConfig":
        d = asdict(self)
        unknown = set(changes) - set(d)
        if unknown:
            raise ContractError(f"unknown config fields: {sorted(unknown)}")
        d.update(changes)
        return CgConfig(**d)


@dataclass
class CgReport:
    z_rmp: float
    z_irmp: int
    farley_lb: float
    abs_gap: float
    proven_optimal: bool
    iterations: int
    columns_generated: int
    columns_selected: int
    early_stopped: bool
    converged: bool
    pricing_calls: int
    irmp_proven: bool
    # z_irmp <= ceil(lower bound): the bound is z_rmp after convergence and
    # farley_lb otherwise, so this stays sound under early stopping
    certified_optimal: bool = False
    timings: dict[str, float] = field(default_factory=dict)
    dual_objective_trace: list[float] = field(default_factory=list)
    solution: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        # JSON has no infinities; a vacuous bound is reported as null
        if not math.isfinite(self.farley_lb):
            d["farley_lb"] = None
        d["farley_vacuous"] = not math.isfinite(self.farley_lb)
        return d
