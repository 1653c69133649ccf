"""Configuration schema: YAML in, validated dataclasses out.

Validation collects every problem it can find and reports them all at
once with their locations, instead of bailing at the first one.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import yaml

from .arbiter import POLICIES, ROUND_ROBIN
from .errors import ConfigError
from .monitor import ACTIONS, ACTION_THROTTLE, MODES, MODE_HW_STALL, QuotaConfig
from .workload import SyntheticProfile, TraceRecord, parse_trace, lint_trace

SCHEMA_VERSION = 1


@dataclass
class PortSpec:
    name: str
    base: int
    size: int
    width: int = 8
    occupancy: dict[str, int] | None = None     # overrides ceil(size/width)
    device_read_latency: int = 10               # non-memory ports only
    device_write_latency: int = 10


@dataclass
class WorkloadSpec:
    master: int
    profile: SyntheticProfile
    outstanding: int = 1


@dataclass
class L2Spec:
    enabled: bool = True
    sets: int = 64
    ways: int = 8
    line_size: int = 64
    hit_latency: int = 2
    partitions: dict[int, list[int]] = field(default_factory=dict)
    cacheable: list[tuple[int, int]] | None = None   # None: the memory port range


@dataclass
class Config:
    cycles: int = 10000
    seed: int = 1
    cores: int = 4
    accelerators: int = 0
    id_bits: int = 4
    bus_policy: str = ROUND_ROBIN
    bus_ranks: dict[int, int] = field(default_factory=dict)
    bus_read: int = 5
    bus_write: int = 3
    bus_sizes: dict[str, dict[int, int]] = field(default_factory=dict)
    l2: L2Spec = field(default_factory=L2Spec)
    noc_policy: str = ROUND_ROBIN
    routing_latency: int = 1
    response_latency: int = 1
    ports: list[PortSpec] = field(default_factory=list)
    memory_port: str = "mem"
    mem_read_latency: int = 40
    mem_write_latency: int = 30
    fifo_capacity: int = 8
    period: int = 10000
    guard_window: int = 100
    monitored: list[str] | None = None          # None: every resource
    quotas: list[QuotaConfig] = field(default_factory=list)
    workloads: list[WorkloadSpec] = field(default_factory=list)
    trace_records: list[TraceRecord] = field(default_factory=list)
    starvation_window: int | None = None        # None: 10x max occupancy
    deadlines: dict[int, int] = field(default_factory=dict)

    @property
    def n_masters(self) -> int:
        return self.cores + self.accelerators

    def resource_names(self) -> list[str]:
        return ["bus"] + [f"noc.{p.name}" for p in self.ports] + ["mem"]


class _Check:
    """Accumulates problems while pulling typed values out of the tree."""

    def __init__(self):
        self.problems: list[str] = []

    def fail(self, where: str, msg: str) -> None:
        self.problems.append(f"{where}: {msg}")

    def section(self, node: dict, key: str, where: str) -> dict:
        sub = node.get(key)
        if sub is None:
            return {}
        if not isinstance(sub, dict):
            self.fail(f"{where}.{key}", f"expected a mapping, got {type(sub).__name__}")
            return {}
        return sub

    def num(self, node: dict, key: str, where: str, default=None,
            minimum=None, required=False):
        if key not in node:
            if required:
                self.fail(f"{where}.{key}", "is required")
            return default
        raw = node[key]
        val = _as_int(raw)
        if val is None:
            self.fail(f"{where}.{key}", f"expected an integer, got {raw!r}")
            return default
        if minimum is not None and val < minimum:
            self.fail(f"{where}.{key}", f"must be >= {minimum}, got {val}")
            return default
        return val

    def choice(self, node: dict, key: str, where: str, options, default):
        val = node.get(key, default)
        if val not in options:
            self.fail(f"{where}.{key}",
                      f"unknown value {val!r}, expected one of {', '.join(options)}")
            return default
        return val

    def no_extras(self, node: dict, where: str, allowed: set[str]) -> None:
        for key in node:
            if key not in allowed:
                self.fail(f"{where}.{key}", "unknown key")


def _as_int(raw):
    if isinstance(raw, bool):
        return None
    if isinstance(raw, int):
        return raw
    if isinstance(raw, str):
        try:
            return int(raw, 0)
        except ValueError:
            return None
    return None


def parse_config(tree: dict, base_dir: str = ".", source: str = "<config>") -> Config:
    if not isinstance(tree, dict):
        raise ConfigError([f"{source}: top level must be a mapping"])
    c = _Check()
    cfg = Config()

    c.no_extras(tree, source, {
        "schema_version", "sim", "masters", "bus", "l2", "noc", "memory",
        "qos", "workloads", "trace", "verify"})

    version = c.num(tree, "schema_version", source, required=True)
    if version is not None and version != SCHEMA_VERSION:
        c.fail(f"{source}.schema_version",
               f"unsupported version {version}, this build reads {SCHEMA_VERSION}")

    sim = c.section(tree, "sim", source)
    c.no_extras(sim, f"{source}.sim", {"cycles", "seed"})
    cfg.cycles = c.num(sim, "cycles", f"{source}.sim", cfg.cycles, minimum=1)
    cfg.seed = c.num(sim, "seed", f"{source}.sim", cfg.seed, minimum=0)

    masters = c.section(tree, "masters", source)
    c.no_extras(masters, f"{source}.masters", {"cores", "accelerators", "id_bits"})
    cfg.cores = c.num(masters, "cores", f"{source}.masters", cfg.cores, minimum=1)
    cfg.accelerators = c.num(masters, "accelerators", f"{source}.masters",
                             cfg.accelerators, minimum=0)
    cfg.id_bits = c.num(masters, "id_bits", f"{source}.masters",
                        cfg.id_bits, minimum=1)
    if cfg.n_masters > (1 << cfg.id_bits):
        c.fail(f"{source}.masters.id_bits",
               f"{cfg.n_masters} masters do not fit in {cfg.id_bits} id bits")

    _parse_bus(c, tree, cfg, source)
    _parse_l2(c, tree, cfg, source)
    _parse_noc(c, tree, cfg, source)
    _parse_memory(c, tree, cfg, source)
    _parse_qos(c, tree, cfg, source)
    _parse_workloads(c, tree, cfg, source)
    _parse_verify(c, tree, cfg, source)
    _parse_trace(c, tree, cfg, base_dir, source)

    if cfg.l2.cacheable is None:
        mem = next((p for p in cfg.ports if p.name == cfg.memory_port), None)
        cfg.l2.cacheable = [(mem.base, mem.size)] if mem else []

    if c.problems:
        raise ConfigError(c.problems)
    return cfg


def _parse_bus(c: _Check, tree: dict, cfg: Config, source: str) -> None:
    bus = c.section(tree, "bus", source)
    where = f"{source}.bus"
    c.no_extras(bus, where, {"policy", "priority", "occupancy"})
    cfg.bus_policy = c.choice(bus, "policy", where, POLICIES, cfg.bus_policy)
    prio = bus.get("priority", {})
    if not isinstance(prio, dict):
        c.fail(f"{where}.priority", "expected a mapping of master to rank")
    else:
        for k, v in prio.items():
            m, r = _as_int(k), _as_int(v)
            if m is None or r is None:
                c.fail(f"{where}.priority", f"bad entry {k!r}: {v!r}")
            elif not 0 <= m < cfg.cores:
                c.fail(f"{where}.priority", f"master {m} is not a core")
            else:
                cfg.bus_ranks[m] = r
    occ = c.section(bus, "occupancy", where)
    c.no_extras(occ, f"{where}.occupancy", {"read", "write", "sizes"})
    cfg.bus_read = c.num(occ, "read", f"{where}.occupancy", cfg.bus_read, minimum=1)
    cfg.bus_write = c.num(occ, "write", f"{where}.occupancy", cfg.bus_write, minimum=1)
    sizes = c.section(occ, "sizes", f"{where}.occupancy")
    for kind in sizes:
        if kind not in ("read", "write"):
            c.fail(f"{where}.occupancy.sizes.{kind}", "unknown kind")
            continue
        table = sizes[kind]
        if not isinstance(table, dict):
            c.fail(f"{where}.occupancy.sizes.{kind}", "expected a mapping")
            continue
        out = {}
        for k, v in table.items():
            size, cyc = _as_int(k), _as_int(v)
            if size is None or cyc is None or size < 1 or cyc < 1:
                c.fail(f"{where}.occupancy.sizes.{kind}", f"bad entry {k!r}: {v!r}")
            else:
                out[size] = cyc
        cfg.bus_sizes[kind] = out


def _parse_l2(c: _Check, tree: dict, cfg: Config, source: str) -> None:
    l2 = c.section(tree, "l2", source)
    where = f"{source}.l2"
    c.no_extras(l2, where, {"enabled", "sets", "ways", "line_size",
                            "hit_latency", "partitions", "cacheable"})
    enabled = l2.get("enabled", cfg.l2.enabled)
    if not isinstance(enabled, bool):
        c.fail(f"{where}.enabled", f"expected true or false, got {enabled!r}")
        enabled = True
    cfg.l2.enabled = enabled
    cfg.l2.sets = c.num(l2, "sets", where, cfg.l2.sets, minimum=1)
    cfg.l2.ways = c.num(l2, "ways", where, cfg.l2.ways, minimum=1)
    cfg.l2.line_size = c.num(l2, "line_size", where, cfg.l2.line_size, minimum=1)
    cfg.l2.hit_latency = c.num(l2, "hit_latency", where, cfg.l2.hit_latency,
                               minimum=0)
    parts = l2.get("partitions")
    if parts is not None:
        if not isinstance(parts, dict):
            c.fail(f"{where}.partitions", "expected a mapping of owner to way list")
        else:
            for k, ways in parts.items():
                owner = _as_int(k)
                if owner is None or not 0 <= owner < cfg.cores:
                    c.fail(f"{where}.partitions", f"owner {k!r} is not a core")
                    continue
                if (not isinstance(ways, list) or not ways
                        or any(_as_int(w) is None for w in ways)):
                    c.fail(f"{where}.partitions.{owner}",
                           "expected a non-empty list of way indices")
                    continue
                way_idx = [_as_int(w) for w in ways]
                bad = [w for w in way_idx if not 0 <= w < cfg.l2.ways]
                if bad:
                    c.fail(f"{where}.partitions.{owner}",
                           f"way indices out of range: {bad}")
                    continue
                cfg.l2.partitions[owner] = way_idx
    if cfg.l2.enabled:
        if parts is None:
            # default: split the ways evenly across the cores
            share = max(1, cfg.l2.ways // cfg.cores)
            for core in range(cfg.cores):
                lo = core * share
                if lo >= cfg.l2.ways:
                    c.fail(f"{where}.partitions",
                           f"{cfg.l2.ways} ways cannot cover {cfg.cores} cores; "
                           "assign partitions explicitly")
                    break
                hi = cfg.l2.ways if core == cfg.cores - 1 else lo + share
                cfg.l2.partitions[core] = list(range(lo, hi))
        else:
            for core in range(cfg.cores):
                if core not in cfg.l2.partitions:
                    c.fail(f"{where}.partitions", f"core {core} has no ways")
    ranges = l2.get("cacheable")
    if ranges is not None:
        parsed = _parse_ranges(c, ranges, f"{where}.cacheable")
        if parsed is not None:
            cfg.l2.cacheable = parsed


def _parse_ranges(c: _Check, raw, where: str):
    if not isinstance(raw, list):
        c.fail(where, "expected a list of {base, size} entries")
        return None
    out = []
    for i, entry in enumerate(raw):
        if not isinstance(entry, dict):
            c.fail(f"{where}[{i}]", "expected a mapping with base and size")
            continue
        base = c.num(entry, "base", f"{where}[{i}]", required=True, minimum=0)
        size = c.num(entry, "size", f"{where}[{i}]", required=True, minimum=1)
        if base is not None and size is not None:
            out.append((base, size))
    return out


def _parse_noc(c: _Check, tree: dict, cfg: Config, source: str) -> None:
    noc = c.section(tree, "noc", source)
    where = f"{source}.noc"
    c.no_extras(noc, where, {"policy", "routing_latency", "response_latency",
                             "ports"})
    cfg.noc_policy = c.choice(noc, "policy", where, POLICIES, cfg.noc_policy)
    cfg.routing_latency = c.num(noc, "routing_latency", where,
                                cfg.routing_latency, minimum=0)
    cfg.response_latency = c.num(noc, "response_latency", where,
                                 cfg.response_latency, minimum=0)
    ports = noc.get("ports")
    if ports is None:
        cfg.ports = [PortSpec("mem", 0x0000_0000, 0x1000_0000)]
        return
    if not isinstance(ports, list) or not ports:
        c.fail(f"{where}.ports", "expected a non-empty list")
        return
    seen = set()
    for i, entry in enumerate(ports):
        pw = f"{where}.ports[{i}]"
        if not isinstance(entry, dict):
            c.fail(pw, "expected a mapping")
            continue
        c.no_extras(entry, pw, {"name", "base", "size", "width", "occupancy",
                                "device_read_latency", "device_write_latency"})
        name = entry.get("name")
        if not isinstance(name, str) or not name:
            c.fail(f"{pw}.name", "expected a non-empty string")
            continue
        if name in seen:
            c.fail(f"{pw}.name", f"duplicate port name {name!r}")
            continue
        seen.add(name)
        base = c.num(entry, "base", pw, required=True, minimum=0)
        size = c.num(entry, "size", pw, required=True, minimum=1)
        width = c.num(entry, "width", pw, 8, minimum=1)
        spec = PortSpec(name, base or 0, size or 1, width)
        occ = entry.get("occupancy")
        if occ is not None:
            if not isinstance(occ, dict) or any(
                    k not in ("read", "write") or _as_int(v) is None or _as_int(v) < 1
                    for k, v in occ.items()):
                c.fail(f"{pw}.occupancy",
                       "expected read/write to positive cycle counts")
            else:
                spec.occupancy = {k: _as_int(v) for k, v in occ.items()}
        spec.device_read_latency = c.num(entry, "device_read_latency", pw,
                                         spec.device_read_latency, minimum=0)
        spec.device_write_latency = c.num(entry, "device_write_latency", pw,
                                          spec.device_write_latency, minimum=0)
        cfg.ports.append(spec)
    for a in range(len(cfg.ports)):
        for b in range(a + 1, len(cfg.ports)):
            pa, pb = cfg.ports[a], cfg.ports[b]
            if pa.base < pb.base + pb.size and pb.base < pa.base + pa.size:
                c.fail(f"{where}.ports",
                       f"ports {pa.name!r} and {pb.name!r} overlap")


def _parse_memory(c: _Check, tree: dict, cfg: Config, source: str) -> None:
    mem = c.section(tree, "memory", source)
    where = f"{source}.memory"
    c.no_extras(mem, where, {"port", "read_latency", "write_latency",
                             "fifo_capacity"})
    port = mem.get("port", cfg.memory_port)
    if not isinstance(port, str):
        c.fail(f"{where}.port", f"expected a port name, got {port!r}")
    else:
        cfg.memory_port = port
    if cfg.ports and cfg.memory_port not in {p.name for p in cfg.ports}:
        c.fail(f"{where}.port", f"no crossbar port named {cfg.memory_port!r}")
    cfg.mem_read_latency = c.num(mem, "read_latency", where,
                                 cfg.mem_read_latency, minimum=1)
    cfg.mem_write_latency = c.num(mem, "write_latency", where,
                                  cfg.mem_write_latency, minimum=1)
    cfg.fifo_capacity = c.num(mem, "fifo_capacity", where,
                              cfg.fifo_capacity, minimum=1)


def _parse_qos(c: _Check, tree: dict, cfg: Config, source: str) -> None:
    qos = c.section(tree, "qos", source)
    where = f"{source}.qos"
    c.no_extras(qos, where, {"period", "guard_window", "monitored", "quotas"})
    cfg.period = c.num(qos, "period", where, cfg.period, minimum=1)
    cfg.guard_window = c.num(qos, "guard_window", where,
                             cfg.guard_window, minimum=1)
    monitored = qos.get("monitored")
    if monitored is not None:
        valid = set(cfg.resource_names())
        if not isinstance(monitored, list):
            c.fail(f"{where}.monitored", "expected a list of resource names")
        else:
            bad = [m for m in monitored if m not in valid]
            if bad:
                c.fail(f"{where}.monitored",
                       f"unknown resources {bad}, valid: {sorted(valid)}")
            else:
                cfg.monitored = list(monitored)
    quotas = qos.get("quotas", [])
    if not isinstance(quotas, list):
        c.fail(f"{where}.quotas", "expected a list")
        return
    seen = set()
    for i, entry in enumerate(quotas):
        qw = f"{where}.quotas[{i}]"
        if not isinstance(entry, dict):
            c.fail(qw, "expected a mapping")
            continue
        c.no_extras(entry, qw, {"master", "limit", "mode", "action",
                                "handler_latency"})
        master = c.num(entry, "master", qw, required=True, minimum=0)
        limit = c.num(entry, "limit", qw, required=True, minimum=0)
        mode = c.choice(entry, "mode", qw, MODES, MODE_HW_STALL)
        action = c.choice(entry, "action", qw, ACTIONS, ACTION_THROTTLE)
        latency = c.num(entry, "handler_latency", qw, 200, minimum=0)
        if master is None or limit is None:
            continue
        if master >= cfg.n_masters:
            c.fail(f"{qw}.master", f"master {master} does not exist")
            continue
        if master in seen:
            c.fail(f"{qw}.master", f"duplicate quota for master {master}")
            continue
        seen.add(master)
        cfg.quotas.append(QuotaConfig(master, limit, mode, action, latency))


def _parse_workloads(c: _Check, tree: dict, cfg: Config, source: str) -> None:
    loads = tree.get("workloads", [])
    where = f"{source}.workloads"
    if not isinstance(loads, list):
        c.fail(where, "expected a list")
        return
    seen = set()
    for i, entry in enumerate(loads):
        lw = f"{where}[{i}]"
        if not isinstance(entry, dict):
            c.fail(lw, "expected a mapping")
            continue
        c.no_extras(entry, lw, {"master", "profile", "outstanding"})
        master = c.num(entry, "master", lw, required=True, minimum=0)
        outstanding = c.num(entry, "outstanding", lw, 1, minimum=1)
        profile_node = entry.get("profile")
        if master is None:
            continue
        if master >= cfg.n_masters:
            c.fail(f"{lw}.master", f"master {master} does not exist")
            continue
        if master in seen:
            c.fail(f"{lw}.master", f"duplicate workload for master {master}")
            continue
        seen.add(master)
        if not isinstance(profile_node, dict):
            c.fail(f"{lw}.profile", "expected a mapping")
            continue
        c.no_extras(profile_node, f"{lw}.profile",
                    {"pattern", "kind_mix", "base", "footprint", "stride",
                     "size", "count", "period", "burst_len", "phase"})
        kwargs = {}
        for key in ("base", "footprint", "stride", "size", "period",
                    "burst_len", "phase"):
            if key in profile_node:
                val = _as_int(profile_node[key])
                if val is None:
                    c.fail(f"{lw}.profile.{key}",
                           f"expected an integer, got {profile_node[key]!r}")
                else:
                    kwargs[key] = val
        if "pattern" in profile_node:
            kwargs["pattern"] = profile_node["pattern"]
        if "kind_mix" in profile_node:
            mix = profile_node["kind_mix"]
            if not isinstance(mix, (int, float)) or isinstance(mix, bool):
                c.fail(f"{lw}.profile.kind_mix",
                       f"expected a number, got {mix!r}")
            else:
                kwargs["kind_mix"] = float(mix)
        if "count" in profile_node and profile_node["count"] is not None:
            count = _as_int(profile_node["count"])
            if count is None:
                c.fail(f"{lw}.profile.count",
                       f"expected an integer, got {profile_node['count']!r}")
            else:
                kwargs["count"] = count
        profile = SyntheticProfile(**kwargs)
        for problem in profile.validate(f"{lw}.profile"):
            c.problems.append(problem)
        cfg.workloads.append(WorkloadSpec(master, profile, outstanding))


def _parse_verify(c: _Check, tree: dict, cfg: Config, source: str) -> None:
    ver = c.section(tree, "verify", source)
    where = f"{source}.verify"
    c.no_extras(ver, where, {"starvation_window", "deadlines"})
    if "starvation_window" in ver and ver["starvation_window"] is not None:
        cfg.starvation_window = c.num(ver, "starvation_window", where, minimum=1)
    deadlines = ver.get("deadlines", {})
    if not isinstance(deadlines, dict):
        c.fail(f"{where}.deadlines", "expected a mapping of master to cycles")
        return
    for k, v in deadlines.items():
        master, cycles = _as_int(k), _as_int(v)
        if master is None or cycles is None or cycles < 1:
            c.fail(f"{where}.deadlines", f"bad entry {k!r}: {v!r}")
        elif master >= cfg.n_masters:
            c.fail(f"{where}.deadlines", f"master {master} does not exist")
        else:
            cfg.deadlines[master] = cycles


def _parse_trace(c: _Check, tree: dict, cfg: Config, base_dir: str,
                 source: str) -> None:
    path = tree.get("trace")
    if path is None:
        return
    if not isinstance(path, str):
        c.fail(f"{source}.trace", f"expected a file path, got {path!r}")
        return
    full = path if os.path.isabs(path) else os.path.join(base_dir, path)
    try:
        with open(full, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        c.fail(f"{source}.trace", f"cannot read {full}: {exc}")
        return
    problems = lint_trace(text, source=path)
    if problems:
        c.problems.extend(problems)
        return
    cfg.trace_records = parse_trace(text, source=path)
    for rec in cfg.trace_records:
        if rec.master >= cfg.n_masters:
            c.fail(f"{source}.trace",
                   f"trace references master {rec.master}, "
                   f"platform has {cfg.n_masters}")
            break


def load_config(path: str) -> Config:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            tree = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError([f"cannot read {path}: {exc}"]) from exc
    except yaml.YAMLError as exc:
        raise ConfigError([f"{path}: not valid YAML: {exc}"]) from exc
    if tree is None:
        raise ConfigError([f"{path}: file is empty"])
    return parse_config(tree, base_dir=os.path.dirname(path) or ".",
                        source=os.path.basename(path))
