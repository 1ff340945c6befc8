"""Case files, tightness scaling and result serialization.

Native cases are JSON documents.  ``null`` in a line limit or ramp field
means unlimited, since JSON has no infinity literal.
"""

from __future__ import annotations

import csv
import io
import json
import math
import re
from dataclasses import dataclass, fields, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

from .model import (GeneratingUnit, LoadProfile, Schedule, TransmissionLine, UcInstance,
                    validate_instance)

UNIT_FIELDS = [f.name for f in fields(GeneratingUnit)]
INF_FIELDS = {"limit", "ramp_up", "ramp_down", "startup_ramp", "shutdown_ramp"}
TOP_FIELDS = {"horizon", "slack_bus", "buses", "lines", "units", "loads"}
LINE_FIELDS = {"id", "from", "to", "reactance", "limit"}
LOAD_FIELDS = {"bus", "demand"}

SCHEDULE_SUMMARY = ("total_cost", "startup_cost", "fuel_cost", "iterations", "violation")
BENCH_COLUMNS = ["case", "s_d", "s_M", "s_F", "s_R", "c0", "iterations", "feasible", "cost",
                 "normalized_cost", "wall_ms"]


class CaseSyntaxError(ValueError):
    """Malformed document or schema breach; carries the position when known."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line, self.column = line, column
        where = f" at line {line}, column {column}" if line is not None else ""
        super().__init__(message + where)


class CaseSemanticError(ValueError):
    def __init__(self, problems: Sequence[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


# --- native format ----------------------------------------------------------

def _finite_or_none(x: float):
    return None if math.isinf(x) else x


def _from_json_number(x, name):
    if x is None:
        if name in INF_FIELDS:
            return math.inf
        raise CaseSyntaxError(f"field '{name}' must not be null")
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise CaseSyntaxError(f"field '{name}' must be a number")
    return float(x)


def _check_keys(obj, allowed: set, required: Iterable[str], where: str):
    if not isinstance(obj, dict):
        raise CaseSyntaxError(f"{where} must be an object")
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise CaseSyntaxError(f"{where}: unknown field '{unknown[0]}'")
    for name in required:
        if name not in obj:
            raise CaseSyntaxError(f"{where}: missing field '{name}'")


def _int_field(x, name):
    if isinstance(x, bool) or not isinstance(x, int):
        raise CaseSyntaxError(f"field '{name}' must be an integer")
    return x


def case_to_dict(instance: UcInstance) -> dict:
    units = []
    for u in instance.units:
        row = {}
        for name in UNIT_FIELDS:
            v = getattr(u, name)
            row[name] = _finite_or_none(v) if name in INF_FIELDS else v
        units.append(row)
    return {
        "horizon": instance.horizon,
        "slack_bus": instance.slack_bus,
        "buses": list(instance.buses),
        "lines": [{"id": ln.id, "from": ln.from_bus, "to": ln.to_bus, "reactance": ln.reactance,
                   "limit": _finite_or_none(ln.limit)} for ln in instance.lines],
        "units": units,
        "loads": [{"bus": ld.bus, "demand": list(ld.demand)} for ld in instance.loads],
    }


def write_native_case(instance: UcInstance) -> str:
    return json.dumps(case_to_dict(instance), indent=1, allow_nan=False) + "\n"


def parse_native_case(text: str) -> UcInstance:
    """Parse a native JSON case.

    Raises
    ------
    CaseSyntaxError
        Malformed JSON (with line and column), missing or unknown fields,
        wrongly typed values.
    CaseSemanticError
        The document parses but the instance breaks a model invariant.
    """
    try:
        doc = json.loads(text, parse_constant=lambda c: _reject_constant(c))
    except json.JSONDecodeError as exc:
        raise CaseSyntaxError(exc.msg, exc.lineno, exc.colno) from None
    _check_keys(doc, TOP_FIELDS, ["horizon", "buses", "lines", "units", "loads"], "case")
    T = _int_field(doc["horizon"], "horizon")
    buses = [str(b) for b in _list(doc["buses"], "buses")]

    lines = []
    for k, ln in enumerate(_list(doc["lines"], "lines")):
        _check_keys(ln, LINE_FIELDS, LINE_FIELDS, f"lines[{k}]")
        lines.append(TransmissionLine(str(ln["id"]), str(ln["from"]), str(ln["to"]),
                                      _from_json_number(ln["reactance"], "reactance"),
                                      _from_json_number(ln["limit"], "limit")))
    units = []
    required = [n for n in UNIT_FIELDS if n != "init_power"]
    for k, u in enumerate(_list(doc["units"], "units")):
        _check_keys(u, set(UNIT_FIELDS), required, f"units[{k}]")
        kw = {}
        for name in UNIT_FIELDS:
            if name not in u:
                continue
            v = u[name]
            if name in ("id", "bus"):
                kw[name] = str(v)
            elif name in ("min_up", "min_down", "init_duration"):
                kw[name] = _int_field(v, name)
            elif name == "init_on":
                if not isinstance(v, bool):
                    raise CaseSyntaxError("field 'init_on' must be a boolean")
                kw[name] = v
            else:
                kw[name] = _from_json_number(v, name)
        units.append(GeneratingUnit(**kw))
    loads = []
    for k, ld in enumerate(_list(doc["loads"], "loads")):
        _check_keys(ld, LOAD_FIELDS, LOAD_FIELDS, f"loads[{k}]")
        demand = tuple(_from_json_number(x, "demand") for x in _list(ld["demand"], "demand"))
        loads.append(LoadProfile(str(ld["bus"]), demand))
    slack = doc.get("slack_bus")
    instance = UcInstance(units, lines, buses, loads, T, None if slack is None else str(slack))
    problems = validate_instance(instance)
    if problems:
        raise CaseSemanticError(problems)
    return instance


def _reject_constant(name):
    raise CaseSyntaxError(f"non-standard constant {name}; use null for unlimited")


def _list(x, name):
    if not isinstance(x, list):
        raise CaseSyntaxError(f"field '{name}' must be an array")
    return x


def load_case(path) -> UcInstance:
    with open(path, encoding="utf-8") as fh:
        return parse_native_case(fh.read())


# --- MATPOWER subset --------------------------------------------------------

_TABLE = re.compile(r"mpc\.(\w+)\s*=\s*\[(.*?)\]\s*;", re.S)
EXTRA_FIELDS = ["cost_a", "cost_b", "startup_cost", "ramp_up", "ramp_down", "startup_ramp",
                "shutdown_ramp", "min_up", "min_down", "init_on", "init_duration", "init_power"]


def _matpower_tables(text: str) -> dict[str, np.ndarray]:
    text = re.sub(r"%[^\n]*", "", text)
    out = {}
    for name, body in _TABLE.findall(text):
        rows = [r.split() for r in re.split(r"[;\n]", body) if r.strip()]
        try:
            out[name] = np.array([[float(v) for v in r] for r in rows], dtype=float)
        except ValueError:
            continue  # string tables such as gentype are outside the subset
    return out


def _extra_value(row: Mapping, name: str):
    v = row[name]
    if name in ("min_up", "min_down", "init_duration"):
        return int(float(v))
    if name == "init_on":
        return v if isinstance(v, bool) else str(v).strip().lower() in ("1", "true", "yes")
    if v is None or (isinstance(v, str) and v.strip().lower() in ("", "inf", "none")):
        return math.inf
    return float(v)


def parse_matpower_subset(text: str, generator_extras: Sequence[Mapping], profile: Sequence[float] = (1.0,)
                          ) -> UcInstance:
    """Build an instance from the bus, branch and gen tables of a MATPOWER case.

    Bus ``Pd`` times each ``profile`` entry gives the demand, so the horizon
    is ``len(profile)``.  ``generator_extras`` has one mapping per gen row
    with the fields in ``EXTRA_FIELDS`` (and optionally ``id``).  Out-of-service
    branches are dropped; ``rateA = 0`` means unlimited.
    """
    tables = _matpower_tables(text)
    for name in ("bus", "branch", "gen"):
        if name not in tables:
            raise CaseSyntaxError(f"missing table mpc.{name}")
    bus_t, br_t, gen_t = tables["bus"], tables["branch"], tables["gen"]
    if len(generator_extras) != len(gen_t):
        raise CaseSemanticError([f"{len(generator_extras)} generator extras for {len(gen_t)} gen rows"])
    buses = [str(int(b)) for b in bus_t[:, 0]]
    slack_rows = [k for k in range(len(bus_t)) if int(bus_t[k, 1]) == 3]
    slack = buses[slack_rows[0]] if slack_rows else buses[0]
    T = len(profile)

    lines = []
    for k, r in enumerate(br_t):
        if r.shape[0] > 10 and r[10] == 0:
            continue
        if r[3] == 0:
            raise CaseSemanticError([f"branch {k + 1}: zero reactance"])
        limit = math.inf if r[5] == 0 else float(r[5])
        lines.append(TransmissionLine(str(k + 1), str(int(r[0])), str(int(r[1])), float(r[3]), limit))

    units = []
    for k, (r, extra) in enumerate(zip(gen_t, generator_extras)):
        kw = {name: _extra_value(extra, name) for name in EXTRA_FIELDS if name in extra}
        missing = [n for n in EXTRA_FIELDS if n not in kw and n != "init_power"]
        if missing:
            raise CaseSyntaxError(f"generator extras row {k + 1}: missing field '{missing[0]}'")
        uid = str(extra.get("id", f"G{k + 1}"))
        units.append(GeneratingUnit(uid, str(int(r[0])), float(r[9]), float(r[8]), **kw))

    loads = []
    for r in bus_t:
        if r[2] > 0:
            loads.append(LoadProfile(str(int(r[0])), tuple(float(r[2]) * float(f) for f in profile)))
    return UcInstance(units, lines, buses, loads, T, slack)


# --- tightness scaling ------------------------------------------------------

@dataclass(frozen=True)
class ScalingFactors:
    s_d: float = 1.0
    s_M: float = 1.0
    s_F: float = 1.0
    s_R: float = 1.0

    def __post_init__(self):
        for name in ("s_d", "s_M", "s_F", "s_R"):
            if not getattr(self, name) > 0:
                raise ValueError(f"scaling factor {name} must be > 0")


def _scaled_duration(value: int, s: float, T: int) -> int:
    # guard against 10 * 1.1 = 11.000000000000002 rounding up to 12
    return int(max(1, min(T, math.ceil(value * s - 1e-9))))


def apply_scaling(instance: UcInstance, factors: ScalingFactors) -> UcInstance:
    """Scale loads, min up/down times, line limits and ramps.

    Scaled durations are rounded up and capped at the horizon.  Start-up and
    shut-down ramps are kept at or above ``p_min`` so that units can still
    switch.
    """
    if factors == ScalingFactors():
        return instance
    T = instance.horizon
    units = []
    for u in instance.units:
        units.append(replace(
            u,
            min_up=_scaled_duration(u.min_up, factors.s_M, T) if factors.s_M != 1 else u.min_up,
            min_down=_scaled_duration(u.min_down, factors.s_M, T) if factors.s_M != 1 else u.min_down,
            ramp_up=u.ramp_up * factors.s_R,
            ramp_down=u.ramp_down * factors.s_R,
            startup_ramp=max(u.p_min, u.startup_ramp * factors.s_R),
            shutdown_ramp=max(u.p_min, u.shutdown_ramp * factors.s_R),
        ))
    lines = [replace(ln, limit=ln.limit * factors.s_F) for ln in instance.lines]
    loads = [replace(ld, demand=tuple(d * factors.s_d for d in ld.demand)) for ld in instance.loads]
    return replace(instance, units=units, lines=lines, loads=loads)


# --- schedules and benchmark tables -----------------------------------------

def write_schedule(schedule: Schedule, report=None, unit_ids: Sequence[str] | None = None,
                   iterations: int | None = None, violation: float | None = None) -> str:
    """CSV with one ``unit,t,z,p`` row per unit and period, then ``# key=value``
    summary lines.  Reals are written with ``repr`` so they round-trip."""
    z = np.asarray(schedule.z)
    p = np.asarray(schedule.p, dtype=float)
    N = z.shape[0] if z.ndim == 2 else 0
    ids = list(unit_ids) if unit_ids is not None else [f"G{i + 1}" for i in range(N)]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["unit", "t", "z", "p"])
    for i in range(N):
        for t in range(z.shape[1]):
            w.writerow([ids[i], t + 1, int(z[i, t]), repr(float(p[i, t])) if z[i, t] else "0.0"])
    summary = {}
    if report is not None:
        summary.update(total_cost=report.total_cost, startup_cost=report.startup_cost, fuel_cost=report.fuel_cost)
    if iterations is not None:
        summary["iterations"] = iterations
    if violation is not None:
        summary["violation"] = violation
    for key in SCHEDULE_SUMMARY:
        if key in summary:
            v = summary[key]
            buf.write(f"# {key}={v if isinstance(v, int) else repr(float(v))}\n")
    return buf.getvalue()


def read_schedule(text: str) -> tuple[Schedule, list[str], dict[str, float]]:
    """Inverse of ``write_schedule``: ``(schedule, unit_ids, summary)``."""
    rows, summary = [], {}
    for line in text.splitlines():
        if line.startswith("#"):
            key, _, val = line[1:].strip().partition("=")
            summary[key] = int(val) if key == "iterations" else float(val)
        elif line.strip():
            rows.append(line)
    reader = csv.DictReader(rows)
    ids: list[str] = []
    cells = {}
    for r in reader:
        if r["unit"] not in ids:
            ids.append(r["unit"])
        cells[(r["unit"], int(r["t"]))] = (int(r["z"]), float(r["p"]))
    T = max((t for _, t in cells), default=0)
    z = np.zeros((len(ids), T), dtype=int)
    p = np.zeros((len(ids), T))
    for (uid, t), (zz, pp) in cells.items():
        z[ids.index(uid), t - 1] = zz
        p[ids.index(uid), t - 1] = pp
    return Schedule(z, p), ids, summary


def write_benchmark(rows: Iterable[Mapping], c0_star: float | None = None) -> str:
    """Benchmark table; the optimized initial step, when known, goes in a
    leading comment so the column set stays fixed."""
    buf = io.StringIO()
    if c0_star is not None:
        buf.write(f"# c0_star={c0_star!r}\n")
    w = csv.DictWriter(buf, BENCH_COLUMNS, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


BUNDLED = {"rts24": "rts24.json"}


def bundled_case(name: str) -> UcInstance:
    """Load one of the cases shipped in ``dplr/data``."""
    from importlib.resources import files

    if name not in BUNDLED:
        raise KeyError(f"unknown bundled case {name!r}; choose from {sorted(BUNDLED)}")
    return parse_native_case(files("dplr").joinpath("data").joinpath(BUNDLED[name]).read_text(encoding="utf-8"))
