"""Physical road network, OD demand, and BPR link performance.

Networks are read from TNTP ``_net.tntp`` / ``_trips.tntp`` files; charging
station candidates come from a separate ``node_id,cost`` CSV.
"""
from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np


class TntpParseError(ValueError):
    """Base class for TNTP/CSV input errors; carries the offending line."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        where = f"line {line}: " if line is not None else ""
        super().__init__(where + message)


class MalformedHeaderError(TntpParseError):
    pass


class RowArityError(TntpParseError):
    pass


class NonNumericFieldError(TntpParseError):
    pass


class NodeRangeError(TntpParseError):
    pass


class InvalidValueError(TntpParseError):
    pass


@dataclass(frozen=True)
class Link:
    tail: int
    head: int
    free_flow_time: float
    capacity: float
    length: float
    alpha: float = 0.15
    beta: float = 4.0

    def __post_init__(self):
        if not self.free_flow_time > 0:
            raise ValueError(f"free-flow time must be positive, got {self.free_flow_time}")
        if not self.capacity > 0:
            raise ValueError(f"capacity must be positive, got {self.capacity}")
        if self.length < 0 or self.alpha < 0:
            raise ValueError("length and alpha must be nonnegative")
        if self.beta < 1:
            raise ValueError(f"beta must be >= 1, got {self.beta}")

    @property
    def energy(self) -> float:
        # battery consumption proxy
        return self.length


@dataclass(frozen=True)
class PhysicalNetwork:
    nodes: tuple[int, ...]
    links: tuple[Link, ...]
    zones: tuple[int, ...]
    candidates: tuple[tuple[int, float], ...] = ()
    first_thru_node: int = 1

    def __post_init__(self):
        nodeset = set(self.nodes)
        if not set(self.zones) <= nodeset:
            raise ValueError("zones must be a subset of nodes")
        ids = [c for c, _ in self.candidates]
        if len(set(ids)) != len(ids):
            raise ValueError("candidate node ids must be distinct")
        if not set(ids) <= nodeset:
            raise ValueError("candidate node ids must be network nodes")
        if any(cost < 0 for _, cost in self.candidates):
            raise ValueError("installation costs must be nonnegative")
        for link in self.links:
            if link.tail not in nodeset or link.head not in nodeset:
                raise ValueError(f"link {link.tail}->{link.head} references unknown node")

    def with_candidates(self, candidates: Iterable[tuple[int, float]]) -> "PhysicalNetwork":
        return PhysicalNetwork(self.nodes, self.links, self.zones,
                               tuple((int(n), float(c)) for n, c in candidates),
                               self.first_thru_node)

    @property
    def candidate_nodes(self) -> tuple[int, ...]:
        return tuple(n for n, _ in self.candidates)

    @property
    def candidate_costs(self) -> np.ndarray:
        return np.array([c for _, c in self.candidates], dtype=float)

    def link_arrays(self) -> dict[str, np.ndarray]:
        """Column arrays of the link table, indexed by link id."""
        return {
            "t0": np.array([l.free_flow_time for l in self.links], dtype=float),
            "cap": np.array([l.capacity for l in self.links], dtype=float),
            "alpha": np.array([l.alpha for l in self.links], dtype=float),
            "beta": np.array([l.beta for l in self.links], dtype=float),
            "energy": np.array([l.energy for l in self.links], dtype=float),
        }


@dataclass(frozen=True)
class DemandTable:
    entries: dict[tuple[int, int], float] = field(default_factory=dict)

    def __post_init__(self):
        for od, d in self.entries.items():
            if d < 0:
                raise ValueError(f"negative demand {d} for OD {od}")

    def get(self, r: int, s: int) -> float:
        return self.entries.get((r, s), 0.0)

    @property
    def total(self) -> float:
        return float(sum(self.entries.values()))

    def positive(self) -> list[tuple[tuple[int, int], float]]:
        return sorted((od, d) for od, d in self.entries.items() if d > 0)


# ---------------------------------------------------------------- link functions

def bpr_time(link: Link, x: float) -> float:
    if x < 0:
        raise ValueError(f"negative flow {x}")
    return link.free_flow_time * (1.0 + link.alpha * (x / link.capacity) ** link.beta)


def beckmann_integral_link(link: Link, x: float) -> float:
    """Closed-form integral of the BPR curve from 0 to ``x``."""
    if x < 0:
        raise ValueError(f"negative flow {x}")
    b = link.beta
    return (link.free_flow_time * x
            + link.free_flow_time * link.alpha * x ** (b + 1) / ((b + 1) * link.capacity ** b))


def bpr_times(arrays: dict[str, np.ndarray], x: np.ndarray) -> np.ndarray:
    return arrays["t0"] * (1.0 + arrays["alpha"] * (x / arrays["cap"]) ** arrays["beta"])


def beckmann_integrals(arrays: dict[str, np.ndarray], x: np.ndarray) -> np.ndarray:
    b = arrays["beta"]
    return arrays["t0"] * x + arrays["t0"] * arrays["alpha"] * x ** (b + 1) / ((b + 1) * arrays["cap"] ** b)


# ---------------------------------------------------------------- TNTP parsing

_META = re.compile(r"^<([^>]+)>\s*(.*)$")
_NET_COLUMNS = ("init_node", "term_node", "capacity", "length", "free_flow_time", "b", "power")


def _strip(line: str) -> str:
    return line.strip().rstrip(";").strip()


def _parse_metadata(lines: Sequence[str]) -> tuple[dict[str, str], int]:
    meta: dict[str, str] = {}
    for i, raw in enumerate(lines):
        text = raw.strip()
        if not text or text.startswith("~"):
            continue
        m = _META.match(text)
        if m is None:
            raise MalformedHeaderError(f"expected <KEY> value metadata, got {text!r}", i + 1)
        key = m.group(1).strip().upper()
        if key == "END OF METADATA":
            return meta, i + 1
        meta[key] = m.group(2).strip()
    raise MalformedHeaderError("missing <END OF METADATA>", len(lines))


def _meta_int(meta: dict[str, str], key: str, line: int) -> int:
    if key not in meta:
        raise MalformedHeaderError(f"missing <{key}>", line)
    try:
        return int(float(meta[key]))
    except ValueError:
        raise MalformedHeaderError(f"<{key}> is not a number: {meta[key]!r}", line) from None


def parse_tntp_net(text: str) -> PhysicalNetwork:
    """Parse a TNTP network file. Candidates are left empty."""
    lines = text.splitlines()
    meta, start = _parse_metadata(lines)
    n_nodes = _meta_int(meta, "NUMBER OF NODES", start)
    n_zones = _meta_int(meta, "NUMBER OF ZONES", start)
    n_links = _meta_int(meta, "NUMBER OF LINKS", start)
    first_thru = int(float(meta.get("FIRST THRU NODE", "1")))
    if n_zones > n_nodes:
        raise MalformedHeaderError("more zones than nodes", start)

    arity: int | None = None
    links: list[Link] = []
    for i in range(start, len(lines)):
        raw = lines[i].strip()
        if not raw:
            continue
        if raw.startswith("~"):
            cols = _strip(raw[1:]).split()
            if cols:
                arity = len(cols)
            continue
        fields = _strip(raw).split()
        lineno = i + 1
        if arity is not None and len(fields) != arity:
            raise RowArityError(f"expected {arity} fields, got {len(fields)}", lineno)
        if len(fields) < len(_NET_COLUMNS):
            raise RowArityError(f"expected at least {len(_NET_COLUMNS)} fields, got {len(fields)}", lineno)
        try:
            vals = [float(f) for f in fields[:len(_NET_COLUMNS)]]
        except ValueError:
            bad = next(f for f in fields if not _is_number(f))
            raise NonNumericFieldError(f"non-numeric field {bad!r}", lineno) from None
        tail, head = int(vals[0]), int(vals[1])
        for node in (tail, head):
            if not 1 <= node <= n_nodes:
                raise NodeRangeError(f"node {node} outside 1..{n_nodes}", lineno)
        try:
            links.append(Link(tail=tail, head=head, capacity=vals[2], length=vals[3],
                              free_flow_time=vals[4], alpha=vals[5], beta=vals[6]))
        except ValueError as exc:
            raise InvalidValueError(str(exc), lineno) from None
    if len(links) != n_links:
        raise MalformedHeaderError(f"<NUMBER OF LINKS> says {n_links}, file has {len(links)}", start)
    return PhysicalNetwork(nodes=tuple(range(1, n_nodes + 1)), links=tuple(links),
                           zones=tuple(range(1, n_zones + 1)), first_thru_node=first_thru)


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


_PAIR = re.compile(r"^\s*(\S+)\s*:\s*(\S+)\s*$")


def parse_tntp_trips(text: str) -> DemandTable:
    """Parse a TNTP trips file into a demand table (omitted pairs are zero)."""
    lines = text.splitlines()
    if not any(l.strip() for l in lines):
        return DemandTable({})
    meta, start = _parse_metadata(lines)
    n_zones = _meta_int(meta, "NUMBER OF ZONES", start)
    entries: dict[tuple[int, int], float] = {}
    origin: int | None = None
    for i in range(start, len(lines)):
        raw = lines[i].strip()
        lineno = i + 1
        if not raw or raw.startswith("~"):
            continue
        if raw.lower().startswith("origin"):
            parts = raw.split()
            if len(parts) != 2 or not parts[1].isdigit():
                raise MalformedHeaderError(f"bad origin line {raw!r}", lineno)
            origin = int(parts[1])
            if not 1 <= origin <= n_zones:
                raise NodeRangeError(f"origin {origin} is not a zone (1..{n_zones})", lineno)
            continue
        if origin is None:
            raise MalformedHeaderError("destination entries before any Origin line", lineno)
        for chunk in raw.split(";"):
            if not chunk.strip():
                continue
            m = _PAIR.match(chunk)
            if m is None:
                raise TntpParseError(f"malformed pair {chunk.strip()!r}", lineno)
            try:
                dest = int(float(m.group(1)))
                d = float(m.group(2))
            except ValueError:
                raise NonNumericFieldError(f"malformed pair {chunk.strip()!r}", lineno) from None
            if not 1 <= dest <= n_zones:
                raise NodeRangeError(f"destination {dest} is not a zone (1..{n_zones})", lineno)
            if d < 0:
                raise InvalidValueError(f"negative demand {d}", lineno)
            entries[(origin, dest)] = entries.get((origin, dest), 0.0) + d
    return DemandTable(entries)


def parse_candidates_csv(text: str, net: PhysicalNetwork | None = None) -> list[tuple[int, float]]:
    reader = csv.reader(io.StringIO(text))
    rows = [r for r in reader if r and any(c.strip() for c in r)]
    if not rows or [c.strip() for c in rows[0]] != ["node_id", "cost"]:
        raise MalformedHeaderError("candidate CSV must start with header 'node_id,cost'", 1)
    out = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != 2:
            raise RowArityError(f"expected 2 fields, got {len(row)}", lineno)
        try:
            node, cost = int(row[0]), float(row[1])
        except ValueError:
            raise NonNumericFieldError(f"bad candidate row {row!r}", lineno) from None
        if cost < 0:
            raise InvalidValueError(f"negative cost {cost}", lineno)
        if net is not None and node not in set(net.nodes):
            raise NodeRangeError(f"candidate node {node} not in network", lineno)
        out.append((node, cost))
    return out


def _fmt(v: float) -> str:
    return repr(float(v))


def format_tntp_net(net: PhysicalNetwork) -> str:
    out = [
        f"<NUMBER OF ZONES> {len(net.zones)}",
        f"<NUMBER OF NODES> {len(net.nodes)}",
        f"<FIRST THRU NODE> {net.first_thru_node}",
        f"<NUMBER OF LINKS> {len(net.links)}",
        "<END OF METADATA>",
        "",
        "~ init_node term_node capacity length free_flow_time b power speed toll link_type ;",
    ]
    for l in net.links:
        vals = [str(l.tail), str(l.head), _fmt(l.capacity), _fmt(l.length), _fmt(l.free_flow_time),
                _fmt(l.alpha), _fmt(l.beta), "0", "0", "1"]
        out.append("\t" + "\t".join(vals) + "\t;")
    return "\n".join(out) + "\n"


def format_tntp_trips(demand: DemandTable, n_zones: int) -> str:
    out = [f"<NUMBER OF ZONES> {n_zones}", f"<TOTAL OD FLOW> {demand.total!r}", "<END OF METADATA>", ""]
    by_origin: dict[int, list[tuple[int, float]]] = {}
    for (r, s), d in sorted(demand.entries.items()):
        by_origin.setdefault(r, []).append((s, d))
    for r, pairs in by_origin.items():
        out.append(f"Origin {r}")
        out.append("    " + " ".join(f"{s} : {d!r};" for s, d in pairs))
        out.append("")
    return "\n".join(out) + "\n"


def format_candidates_csv(candidates: Sequence[tuple[int, float]]) -> str:
    return "node_id,cost\n" + "".join(f"{n},{c!r}\n" for n, c in candidates)


def load_instance(net_path, trips_path, candidates_path=None) -> tuple[PhysicalNetwork, DemandTable]:
    with open(net_path) as fh:
        net = parse_tntp_net(fh.read())
    with open(trips_path) as fh:
        demand = parse_tntp_trips(fh.read())
    zones = set(net.zones)
    for r, s in demand.entries:
        if r not in zones or s not in zones:
            raise NodeRangeError(f"OD pair {(r, s)} references a node that is not a zone")
    if candidates_path is not None:
        with open(candidates_path) as fh:
            net = net.with_candidates(parse_candidates_csv(fh.read(), net))
    return net, demand

