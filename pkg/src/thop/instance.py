"""Instance model for the thief orienteering problem.

An instance is a set of cities on the plane (city 1 = start, city n = end),
CEIL_2D integer distances, a set of profit/weight items located at the
intermediate cities, a knapsack capacity W, a travel-time limit T, and the
speed range [vmin, vmax] of the thief. Carried weight reduces speed linearly:
v(w) = vmax - nu * w with nu = (vmax - vmin) / W.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

KNAPSACK_TYPES = ("unc", "usw", "bsc")

# Header keys the parser interprets; unknown keys are preserved verbatim.
_KEY_DIMENSION = "DIMENSION"
_KEY_NUM_ITEMS = "NUMBER OF ITEMS"
_KEY_CAPACITY = "CAPACITY OF KNAPSACK"
_KEY_MAX_TIME = "MAX TIME"
_KEY_MIN_SPEED = "MIN SPEED"
_KEY_MAX_SPEED = "MAX SPEED"
_KEY_NAME = "PROBLEM NAME"

_ID_PATTERN = re.compile(
    r"^(?P<base>.+)_(?P<ipc>\d{2})_(?P<ktype>[a-z]{3})_(?P<wclass>\d{2}|inf)_(?P<tclass>\d{2})$"
)


class InstanceParseError(ValueError):
    """Raised for malformed instance files; carries the offending line number."""

    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


@dataclass(frozen=True)
class Item:
    """One stealable item: located at a single intermediate city."""

    id: int
    profit: float
    weight: float
    city: int


@dataclass(frozen=True)
class InstanceId:
    """Structured form of the XXX_YY_ZZZ_WW_TT naming scheme."""

    tsp_base: str
    items_per_city: int
    knapsack_type: str
    knapsack_size: str  # two-digit class label, or "inf" for OP-mode ids
    time_class: str

    @classmethod
    def from_name(cls, name: str) -> "InstanceId":
        mo = _ID_PATTERN.match(name)
        if mo is None:
            raise ValueError(f"not a XXX_YY_ZZZ_WW_TT identifier: {name!r}")
        return cls(
            tsp_base=mo.group("base"),
            items_per_city=int(mo.group("ipc")),
            knapsack_type=mo.group("ktype"),
            knapsack_size=mo.group("wclass"),
            time_class=mo.group("tclass"),
        )

    @property
    def group(self) -> str:
        """Tuning-group key: base + items-per-city + knapsack type."""
        return f"{self.tsp_base}_{self.items_per_city:02d}_{self.knapsack_type}"

    def __str__(self) -> str:
        return (
            f"{self.tsp_base}_{self.items_per_city:02d}_{self.knapsack_type}"
            f"_{self.knapsack_size}_{self.time_class}"
        )


def _format_number(x: float) -> str:
    """Write integral values without a trailing .0 so files round-trip cleanly."""
    xf = float(x)
    if xf.is_integer() and abs(xf) < 1e15:
        return str(int(xf))
    return repr(xf)


class Instance:
    """Immutable problem instance.

    Construction validates all structural invariants; the distance matrix and
    the per-city item index are built once and shared read-only afterwards
    (safe across threads).
    """

    def __init__(
        self,
        name: str,
        coords: Sequence[Tuple[float, float]],
        items: Sequence[Item],
        W: float,
        T: float,
        vmax: float,
        vmin: float,
        extras: Optional[Dict[str, str]] = None,
    ):
        coords_arr = np.asarray(coords, dtype=np.float64)
        if coords_arr.ndim != 2 or coords_arr.shape[1] != 2 or coords_arr.shape[0] < 2:
            raise ValueError("coords must be an (n, 2) array with n >= 2")
        n = coords_arr.shape[0]
        if W <= 0:
            raise ValueError(f"knapsack capacity must be positive, got {W}")
        if T <= 0:
            raise ValueError(f"time limit must be positive, got {T}")
        if vmin <= 0 or vmax < vmin:
            raise ValueError(f"speeds must satisfy vmax >= vmin > 0, got vmax={vmax} vmin={vmin}")

        items = tuple(sorted(items, key=lambda it: it.id))
        for k, it in enumerate(items, start=1):
            if it.id != k:
                raise ValueError(f"item ids must be exactly 1..m, missing or duplicate id near {it.id}")
            if it.weight <= 0:
                raise ValueError(f"item {it.id}: weight must be positive, got {it.weight}")
            if it.profit < 0:
                raise ValueError(f"item {it.id}: profit must be non-negative, got {it.profit}")
            if not (2 <= it.city <= n - 1):
                raise ValueError(f"item {it.id}: city {it.city} outside 2..{n - 1}")

        self.name = name
        self.coords = coords_arr
        self.coords.setflags(write=False)
        self.items = items
        self.W = W
        self.T = T
        self.vmax = vmax
        self.vmin = vmin
        self.extras = dict(extras) if extras else {}

        self._dist = _ceil2d_matrix(coords_arr)
        self._dist.setflags(write=False)
        self.triangle_ok = _triangle_holds(self._dist)

        # Per-item columns and a per-city item index, used by the hot paths.
        self._item_profit = np.array([it.profit for it in items], dtype=np.float64)
        self._item_weight = np.array([it.weight for it in items], dtype=np.float64)
        self._item_city = np.array([it.city for it in items], dtype=np.int64)
        by_city: List[List[int]] = [[] for _ in range(n + 1)]
        for it in items:
            by_city[it.city].append(it.id)
        self._items_by_city = tuple(np.array(ids, dtype=np.int64) for ids in by_city)
        for arr in self._items_by_city:
            arr.setflags(write=False)

    # ---- basic accessors -------------------------------------------------

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def m(self) -> int:
        return len(self.items)

    @property
    def nu(self) -> float:
        """Speed decay per unit of carried weight."""
        return (self.vmax - self.vmin) / self.W

    @property
    def dist_matrix(self) -> np.ndarray:
        """Read-only (n, n) CEIL_2D distance matrix, 0 on the diagonal."""
        return self._dist

    @property
    def id(self) -> Optional[InstanceId]:
        """Structured identifier when the name follows the naming scheme."""
        try:
            return InstanceId.from_name(self.name)
        except ValueError:
            return None

    def distance(self, i: int, j: int) -> int:
        """CEIL_2D distance between two distinct cities (1-based indices)."""
        if not (1 <= i <= self.n and 1 <= j <= self.n):
            raise IndexError(f"city index out of range: ({i}, {j})")
        if i == j:
            raise ValueError(f"distance requires two distinct cities, got i == j == {i}")
        return int(self._dist[i - 1, j - 1])

    def items_at(self, city: int) -> np.ndarray:
        """Item ids located at a city (ascending, possibly empty)."""
        return self._items_by_city[city]

    def item_columns(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(profit, weight, city) arrays indexed by item id - 1."""
        return self._item_profit, self._item_weight, self._item_city

    def total_item_weight(self) -> float:
        return float(self._item_weight.sum())

    def total_item_profit(self) -> float:
        return float(self._item_profit.sum())

    # ---- equality: semantic fields only ----------------------------------

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Instance):
            return NotImplemented
        return (
            self.name == other.name
            and self.coords.shape == other.coords.shape
            and bool(np.array_equal(self.coords, other.coords))
            and self.items == other.items
            and self.W == other.W
            and self.T == other.T
            and self.vmax == other.vmax
            and self.vmin == other.vmin
        )

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"Instance({self.name!r}, n={self.n}, m={self.m}, W={self.W}, T={self.T})"


def _ceil2d_matrix(coords: np.ndarray) -> np.ndarray:
    dx = coords[:, 0][:, None] - coords[:, 0][None, :]
    dy = coords[:, 1][:, None] - coords[:, 1][None, :]
    return np.ceil(np.hypot(dx, dy))


def _triangle_holds(dist: np.ndarray, samples: int = 100_000) -> bool:
    """Check d(i,j) <= d(i,k) + d(k,j); exhaustive for n <= 300, sampled above."""
    n = dist.shape[0]
    if n <= 300:
        for k in range(n):
            if np.any(dist > dist[:, k][:, None] + dist[k, :][None, :] + 1e-9):
                return False
        return True
    gen = np.random.default_rng(0)
    idx = gen.integers(0, n, size=(samples, 3))
    i, j, k = idx[:, 0], idx[:, 1], idx[:, 2]
    return not bool(np.any(dist[i, j] > dist[i, k] + dist[k, j] + 1e-9))


# ---- parsing / serialization ----------------------------------------------


def parse_instance(text: str, name: str = "") -> Instance:
    """Parse the key/value header + NODE_COORD_SECTION + ITEMS SECTION format.

    Raises InstanceParseError with the 1-based offending line number for any
    malformed content.
    """
    lines = text.splitlines()
    header: Dict[str, Tuple[str, int]] = {}
    coords: List[Tuple[float, float]] = []
    items: List[Item] = []

    pos = 0
    nlines = len(lines)

    # -- header -------------------------------------------------------------
    coord_header_line = 0
    while pos < nlines:
        raw = lines[pos]
        pos += 1
        stripped = raw.strip()
        if not stripped:
            continue
        if stripped.startswith("NODE_COORD_SECTION"):
            coord_header_line = pos
            break
        if ":" not in stripped:
            raise InstanceParseError(pos, f"malformed header line (expected KEY: VALUE): {stripped!r}")
        key, value = stripped.split(":", 1)
        header[key.strip().upper()] = (value.strip(), pos)
    else:
        raise InstanceParseError(nlines or 1, "missing NODE_COORD_SECTION")

    def header_number(key: str, kind=float):
        if key not in header:
            raise InstanceParseError(coord_header_line, f"missing required header key {key!r}")
        value, line_no = header[key]
        try:
            return kind(value), line_no
        except ValueError:
            raise InstanceParseError(line_no, f"header {key!r}: not a number: {value!r}") from None

    n, n_line = header_number(_KEY_DIMENSION, int)
    m_decl, m_line = header_number(_KEY_NUM_ITEMS, int)
    W, w_line = header_number(_KEY_CAPACITY)
    T, t_line = header_number(_KEY_MAX_TIME)
    vmin, vmin_line = header_number(_KEY_MIN_SPEED)
    vmax, vmax_line = header_number(_KEY_MAX_SPEED)
    if n < 2:
        raise InstanceParseError(n_line, f"DIMENSION must be at least 2, got {n}")
    if m_decl < 0:
        raise InstanceParseError(m_line, f"NUMBER OF ITEMS must be non-negative, got {m_decl}")
    if W <= 0:
        raise InstanceParseError(w_line, f"knapsack capacity must be positive, got {W}")
    if T <= 0:
        raise InstanceParseError(t_line, f"max time must be positive, got {T}")
    if vmin <= 0:
        raise InstanceParseError(vmin_line, f"min speed must be positive, got {vmin}")
    if vmax < vmin:
        raise InstanceParseError(vmax_line, f"max speed {vmax} below min speed {vmin}")

    # -- coordinates ----------------------------------------------------------
    while pos < nlines and len(coords) < n:
        raw = lines[pos]
        pos += 1
        stripped = raw.strip()
        if not stripped:
            continue
        if stripped.startswith("ITEMS SECTION") or stripped == "EOF":
            raise InstanceParseError(pos, f"expected {n} coordinate lines, found {len(coords)}")
        parts = stripped.split()
        if len(parts) != 3:
            raise InstanceParseError(pos, f"malformed coordinate line: {stripped!r}")
        try:
            idx = int(parts[0])
            x, y = float(parts[1]), float(parts[2])
        except ValueError:
            raise InstanceParseError(pos, f"malformed coordinate line: {stripped!r}") from None
        if idx != len(coords) + 1:
            raise InstanceParseError(pos, f"coordinate index {idx} out of order (expected {len(coords) + 1})")
        coords.append((x, y))
    if len(coords) < n:
        raise InstanceParseError(nlines, f"expected {n} coordinate lines, found {len(coords)}")

    # -- items ----------------------------------------------------------------
    items_header_line = 0
    while pos < nlines:
        raw = lines[pos]
        pos += 1
        stripped = raw.strip()
        if not stripped:
            continue
        if stripped.startswith("ITEMS SECTION"):
            items_header_line = pos
            break
        if stripped == "EOF" and m_decl == 0:
            break
        raise InstanceParseError(pos, f"expected ITEMS SECTION, found: {stripped!r}")
    else:
        if m_decl > 0:
            raise InstanceParseError(nlines or 1, "missing ITEMS SECTION")

    while pos < nlines and len(items) < m_decl:
        raw = lines[pos]
        pos += 1
        stripped = raw.strip()
        if not stripped:
            continue
        if stripped == "EOF":
            raise InstanceParseError(pos, f"expected {m_decl} item lines, found {len(items)}")
        parts = stripped.split()
        if len(parts) != 4:
            raise InstanceParseError(pos, f"malformed item line: {stripped!r}")
        try:
            idx = int(parts[0])
            profit = _parse_exact(parts[1])
            weight = _parse_exact(parts[2])
            city = int(parts[3])
        except ValueError:
            raise InstanceParseError(pos, f"malformed item line: {stripped!r}") from None
        if idx != len(items) + 1:
            raise InstanceParseError(pos, f"item index {idx} out of order (expected {len(items) + 1})")
        if city == 1:
            raise InstanceParseError(pos, f"item at depot city: item {idx} assigned to city 1")
        if city == n:
            raise InstanceParseError(pos, f"item at terminal city: item {idx} assigned to city {n}")
        if not (2 <= city <= n - 1):
            raise InstanceParseError(pos, f"item {idx}: city {city} outside 2..{n - 1}")
        if weight <= 0:
            raise InstanceParseError(pos, f"item {idx}: weight must be positive, got {weight}")
        if profit < 0:
            raise InstanceParseError(pos, f"item {idx}: profit must be non-negative, got {profit}")
        items.append(Item(id=idx, profit=profit, weight=weight, city=city))
    if len(items) < m_decl:
        raise InstanceParseError(nlines, f"expected {m_decl} item lines, found {len(items)}")

    for extra_pos in range(pos, nlines):
        stripped = lines[extra_pos].strip()
        if stripped and stripped != "EOF":
            raise InstanceParseError(extra_pos + 1, f"unexpected trailing content: {stripped!r}")

    known = {_KEY_DIMENSION, _KEY_NUM_ITEMS, _KEY_CAPACITY, _KEY_MAX_TIME, _KEY_MIN_SPEED, _KEY_MAX_SPEED, _KEY_NAME}
    extras = {k: v for k, (v, _) in header.items() if k not in known}
    inst_name = header.get(_KEY_NAME, (name, 0))[0] or name
    return Instance(inst_name, coords, items, W=W, T=T, vmax=vmax, vmin=vmin, extras=extras)


def _parse_exact(token: str) -> float:
    """Parse a number keeping integral values exact (int) when possible."""
    try:
        return int(token)
    except ValueError:
        return float(token)


def serialize_instance(inst: Instance) -> str:
    """Canonical writer; parse_instance(serialize_instance(x)) == x."""
    out = [
        f"{_KEY_NAME}: {inst.name}",
        f"{_KEY_DIMENSION}: {inst.n}",
        f"{_KEY_NUM_ITEMS}: {inst.m}",
        f"{_KEY_CAPACITY}: {_format_number(inst.W)}",
        f"{_KEY_MAX_TIME}: {_format_number(inst.T)}",
        f"{_KEY_MIN_SPEED}: {_format_number(inst.vmin)}",
        f"{_KEY_MAX_SPEED}: {_format_number(inst.vmax)}",
    ]
    out.extend(f"{key}: {value}" for key, value in inst.extras.items())
    out.append("NODE_COORD_SECTION")
    for i, (x, y) in enumerate(inst.coords, start=1):
        out.append(f"{i} {_format_number(x)} {_format_number(y)}")
    out.append("ITEMS SECTION")
    for it in inst.items:
        out.append(f"{it.id} {_format_number(it.profit)} {_format_number(it.weight)} {it.city}")
    out.append("")
    return "\n".join(out)


def load_instance(path) -> Instance:
    """Read an instance file; the filename stem names the instance if the header doesn't."""
    p = Path(path)
    return parse_instance(p.read_text(), name=p.stem)


def save_instance(inst: Instance, path) -> None:
    Path(path).write_text(serialize_instance(inst))


def to_op_instance(inst: Instance) -> Instance:
    """Constant-speed, unbounded-knapsack reduction: vmax = vmin = 1, W = Σw + 1.

    Travel time then no longer depends on the packing plan (nu = 0) and
    capacity never binds. Idempotent.
    """
    total_w = inst.total_item_weight()
    W_new = total_w + 1 if total_w == int(total_w) else math.ceil(total_w) + 1
    if inst.vmax == 1 and inst.vmin == 1 and inst.W == W_new:
        return inst
    return Instance(
        inst.name,
        inst.coords.copy(),
        inst.items,
        W=W_new,
        T=inst.T,
        vmax=1,
        vmin=1,
        extras=inst.extras,
    )
