"""Command-line orchestration: config-driven experiments with JSON/CSV reports.

Exit codes: 0 = computed and all assertions passed; 2 = computed but an
assertion failed (the report is still written); 1 = usage, config, or data
error, reported as a single machine-parsable line on stderr.  Reports echo
the resolved config and library version and are byte-identical across reruns
with the same config and seed; timestamps live in a sidecar file.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__, kernels
from . import dynsys
from .besicovitch import (
    besicovitch_estimate,
    dbar_estimate,
    equivalence_audit,
    tilde_besicovitch,
)
from .bfree import GeneratorSet, davenport_erdos_trace, mirsky_spectrum_experiment
from .dynsys import (
    OrbitWindow,
    Rotation,
    RotationState,
    SystemSpec,
    eval_series,
    generate_orbit,
    orbit_from_labels,
)
from .errors import ErgolabError
from .measures import block_entropy, empirical_measure, periodic_from_word, text_to_word
from .rhobar import (
    dbar_periodic_exact,
    rhobar_bracket,
    rhobar_periodic_exact,
    rhobar_sequence_audit,
)
from .schedule import CheckpointSchedule
from .wiener_wintner import frequency_scan, regularity_check

COMMANDS = ("scan", "regularity", "besicovitch", "dbar", "rhobar", "bfree", "entropy", "audit")


class UsageError(Exception):
    """Maps to exit code 1 with a single-line message."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(message)


# ---------------------------------------------------------------------------
# config schemas

_SCHEDULE = {
    "type": "object",
    "required": ["checkpoints"],
    "properties": {
        "checkpoints": {
            "type": "array",
            "minItems": 2,
            "items": {"type": "integer", "exclusiveMinimum": 0},
        }
    },
}
_SOURCE = {"type": "object", "minProperties": 1}
_POSITIVE = {"type": "number", "exclusiveMinimum": 0}

_SCHEMAS: dict[str, dict] = {
    "scan": {
        "type": "object",
        "required": ["series", "schedule"],
        "properties": {
            "series": _SOURCE,
            "schedule": _SCHEDULE,
            "grid_size": {"type": "integer", "exclusiveMinimum": 0},
            "refine_passes": {"type": "integer", "minimum": 0},
            "tau_det": _POSITIVE,
            "q_max": {"type": "integer", "minimum": 1},
            "assert": {"type": "object"},
            "seed": {"type": "integer", "minimum": 0},
        },
        "additionalProperties": False,
    },
    "regularity": {
        "type": "object",
        "required": ["series", "schedule"],
        "properties": {
            "series": _SOURCE,
            "schedule": _SCHEDULE,
            "grid_size": {"type": "integer", "exclusiveMinimum": 0},
            "refine_passes": {"type": "integer", "minimum": 0},
            "tau_det": _POSITIVE,
            "tau_reg": _POSITIVE,
            "q_max": {"type": "integer", "minimum": 1},
            "assert": {"type": "object"},
            "seed": {"type": "integer", "minimum": 0},
        },
        "additionalProperties": False,
    },
    "besicovitch": {
        "type": "object",
        "required": ["x", "y", "schedule"],
        "properties": {
            "x": _SOURCE,
            "y": _SOURCE,
            "schedule": _SCHEDULE,
            "lookahead": {"type": "integer", "minimum": 1},
            "tilde": {"type": "boolean"},
            "delta_grid": {"type": "array", "items": _POSITIVE},
            "seed": {"type": "integer", "minimum": 0},
        },
        "additionalProperties": False,
    },
    "dbar": {
        "type": "object",
        "required": ["x", "y", "schedule"],
        "properties": {
            "x": _SOURCE,
            "y": _SOURCE,
            "schedule": _SCHEDULE,
            "seed": {"type": "integer", "minimum": 0},
        },
        "additionalProperties": False,
    },
    "rhobar": {
        "type": "object",
        "properties": {
            "mode": {"enum": ["exact", "bracket", "sequence"]},
            "a": _SOURCE,
            "b": _SOURCE,
            "x": _SOURCE,
            "y": _SOURCE,
            "k": {"type": "integer", "minimum": 1},
            "cost": {"enum": ["hamming0", "first_diff", "d0", "rho2k"]},
            "measures": {"type": "array", "minItems": 1, "items": {"type": "string"}},
            "target": _SOURCE,
            "schedule": _SCHEDULE,
            "seed": {"type": "integer", "minimum": 0},
        },
        "additionalProperties": False,
    },
    "bfree": {
        "type": "object",
        "required": ["generators"],
        "properties": {
            "generators": {"type": "object"},
            "mode": {"enum": ["mirsky", "davenport_erdos"]},
            "truncations": {
                "oneOf": [
                    {"type": "integer", "minimum": 1},
                    {"type": "array", "minItems": 1, "items": {"type": "integer", "minimum": 1}},
                ]
            },
            "N": {"type": "integer", "exclusiveMinimum": 0},
            "schedule": _SCHEDULE,
            "tau_det": _POSITIVE,
            "tau_reg": _POSITIVE,
            "refine_passes": {"type": "integer", "minimum": 0},
            "full_scan": {"type": "boolean"},
            "full_tau_det": _POSITIVE,
            "containment_min_k": {"type": "integer", "minimum": 1},
            "gate": {"type": "boolean"},
            "seed": {"type": "integer", "minimum": 0},
        },
        "additionalProperties": False,
    },
    "entropy": {
        "type": "object",
        "required": ["source", "k"],
        "properties": {
            "source": _SOURCE,
            "k": {
                "oneOf": [
                    {"type": "integer", "minimum": 1},
                    {"type": "array", "minItems": 1, "items": {"type": "integer", "minimum": 1}},
                ]
            },
            "length": {"type": "integer", "exclusiveMinimum": 0},
            "assert": {"type": "object"},
            "seed": {"type": "integer", "minimum": 0},
        },
        "additionalProperties": False,
    },
    "audit": {
        "type": "object",
        "required": ["pairs", "schedule"],
        "properties": {
            "pairs": {
                "type": "array",
                "minItems": 1,
                "items": {
                    "type": "object",
                    "required": ["x", "y"],
                    "properties": {"x": _SOURCE, "y": _SOURCE, "label": {"type": "string"}},
                },
            },
            "schedule": _SCHEDULE,
            "lookahead": {"type": "integer", "minimum": 1},
            "gate": {"type": "boolean"},
            "seed": {"type": "integer", "minimum": 0},
        },
        "additionalProperties": False,
    },
}


# ---------------------------------------------------------------------------
# data loading


def _load_label_text(path: str, alphabet_size: int) -> np.ndarray:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read sequence file {path}: {exc}") from exc
    stripped = "".join(text.split())
    if not stripped:
        raise UsageError(f"sequence file {path} is empty")
    try:
        word = text_to_word(stripped)
    except ErgolabError as exc:
        raise UsageError(f"sequence file {path}: {exc}") from exc
    labels = np.array(word, dtype=np.int64)
    if labels.max() >= alphabet_size:
        raise UsageError(
            f"sequence file {path} contains symbols outside the declared alphabet"
        )
    return labels


def _surrogate_bits(src: dict, rng: np.random.Generator | None) -> np.ndarray:
    if src.get("surrogate") != "pm_one_iid":
        raise UsageError(f"unknown surrogate {src.get('surrogate')!r}")
    if rng is None:
        raise UsageError("a seed is required for surrogate-data commands")
    length = int(src.get("length", 0))
    if length <= 0:
        raise UsageError("surrogate sources need a positive length")
    return rng.integers(0, 2, size=length, dtype=np.int64)


def _load_orbit(src: dict, rng: np.random.Generator | None) -> OrbitWindow:
    """An orbit window from a file, an explicit word, a system spec, or a surrogate."""
    if "file" in src:
        alphabet = int(src.get("alphabet", 2))
        labels = _load_label_text(src["file"], alphabet)
        if "length" in src:
            n = int(src["length"])
            if n > labels.size:
                raise UsageError(f"file has {labels.size} symbols, config asks for {n}")
            labels = labels[:n]
        return orbit_from_labels(labels, alphabet, periodic=bool(src.get("periodic", False)))
    if "word" in src:
        if "length" not in src:
            raise UsageError("word sources need a length")
        measure = periodic_from_word(src["word"])
        return measure.orbit_window(int(src["length"]), phase=int(src.get("phase", 0)))
    if "surrogate" in src:
        return orbit_from_labels(_surrogate_bits(src, rng), 2)
    if "system" in src:
        try:
            spec = SystemSpec.from_json(src["system"])
        except (ErgolabError, KeyError, TypeError) as exc:
            raise UsageError(f"bad system spec: {exc}") from exc
        if "length" not in src:
            raise UsageError("system sources need a length")
        length = int(src["length"])
        if isinstance(spec, Rotation):
            origin = RotationState(float(src.get("angle", 0.0)))
        elif spec.kind == "periodic_orbit":
            origin = spec.origin(int(src.get("phase", 0)))
        elif spec.kind == "bfree":
            trunc = src.get("truncation")
            from .bfree import eta_origin

            origin = eta_origin(spec.generators, None if trunc is None else int(trunc))
        else:
            raise UsageError(f"{spec.kind} sources need explicit data; use a file")
        return generate_orbit(spec, origin, length)
    raise UsageError(f"unrecognized source {sorted(src)!r}")


def _make_observable(spec: dict | None, orbit: OrbitWindow):
    if spec is None:
        spec = {"name": "character"} if orbit.angles is not None else {"name": "labels"}
    name = spec.get("name")
    if name == "labels":
        return None  # shortcut: the symbol values themselves
    if name == "indicator":
        return dynsys.indicator(int(spec.get("symbol", 0)))
    if name == "pm_one":
        return dynsys.pm_one()
    if name == "character":
        return dynsys.character(int(spec.get("m", 1)))
    if name == "constant":
        value = spec.get("value", 1.0)
        if isinstance(value, list):
            value = complex(value[0], value[1])
        return dynsys.constant(value)
    raise UsageError(f"unknown observable {name!r}")


def _load_series(src: dict, rng: np.random.Generator | None) -> np.ndarray:
    if "surrogate" in src:
        return (1 - 2 * _surrogate_bits(src, rng)).astype(np.complex128)
    orbit = _load_orbit(src, rng)
    observable = _make_observable(src.get("observable"), orbit)
    if observable is None:
        if orbit.labels is None:
            raise UsageError("the labels observable needs symbolic data")
        return orbit.labels.astype(np.complex128)
    return eval_series(observable, orbit)


def _uses_surrogate(obj) -> bool:
    if isinstance(obj, dict):
        return "surrogate" in obj or any(_uses_surrogate(v) for v in obj.values())
    if isinstance(obj, list):
        return any(_uses_surrogate(v) for v in obj)
    return False


def _schedule_of(config: dict) -> CheckpointSchedule:
    return CheckpointSchedule(tuple(config["schedule"]["checkpoints"]))


# ---------------------------------------------------------------------------
# commands: each returns (report body, csv table, assertion failures)

Rows = list[list[object]]


def _scan_common(config: dict, rng) -> tuple[dict, np.ndarray]:
    series = _load_series(config["series"], rng)
    schedule = _schedule_of(config)
    spectrum = frequency_scan(
        series,
        grid_size=config.get("grid_size"),
        refine_passes=int(config.get("refine_passes", 2)),
        schedule=schedule,
        tau_det=config.get("tau_det"),
        q_max=int(config.get("q_max", 128)),
    )
    return {"spectrum": spectrum}, series


def _entries_table(spectrum_json: dict) -> tuple[list[str], Rows]:
    head = ["theta", "p", "q", "re_av", "im_av", "amplitude", "verdict"]
    rows = [[e[c] for c in head] for e in spectrum_json["entries"]]
    return head, rows


def _cmd_scan(config: dict, rng) -> tuple[dict, tuple[list[str], Rows], list[str]]:
    result, _ = _scan_common(config, rng)
    spectrum = result["spectrum"]
    body = {"spectrum": spectrum.to_json()}
    failures = []
    checks = config.get("assert", {})
    n_entries = len(spectrum.entries)
    if "max_entries" in checks and n_entries > checks["max_entries"]:
        failures.append(f"entries {n_entries} > max_entries {checks['max_entries']}")
    if "min_entries" in checks and n_entries < checks["min_entries"]:
        failures.append(f"entries {n_entries} < min_entries {checks['min_entries']}")
    if "residual_below" in checks and not spectrum.residual_max < checks["residual_below"]:
        failures.append(
            f"residual_max {spectrum.residual_max} >= {checks['residual_below']}"
        )
    if "contains" in checks:
        tol = 0.5 / spectrum.grid_meta["n_last"]
        detected = [e.probe.theta for e in spectrum.entries]
        for want in checks["contains"]:
            if not any(min(abs(t - want), 1 - abs(t - want)) <= tol for t in detected):
                failures.append(f"no detected frequency within {tol} of {want}")
    return body, _entries_table(body["spectrum"]), failures


def _cmd_regularity(config: dict, rng) -> tuple[dict, tuple[list[str], Rows], list[str]]:
    result, series = _scan_common(config, rng)
    spectrum = result["spectrum"]
    report = regularity_check(
        series, spectrum, tau_reg=float(config.get("tau_reg", 0.02))
    )
    body = {"regularity": report.to_json(), "spectrum": spectrum.to_json()}
    failures = []
    checks = config.get("assert", {})
    if "classification" in checks and report.classification != checks["classification"]:
        failures.append(
            f"classification {report.classification!r} != {checks['classification']!r}"
        )
    if "defect_below" in checks and not abs(report.defect) < checks["defect_below"]:
        failures.append(f"|defect| {abs(report.defect)} >= {checks['defect_below']}")
    head, rows = _entries_table(body["spectrum"])
    return body, (head, rows), failures


def _trace_table(trace_json: dict) -> tuple[list[str], Rows]:
    cps = trace_json["schedule"]["checkpoints"]
    rows = [[n, a] for n, a in zip(cps, trace_json["averages"])]
    return ["checkpoint", "average"], rows


def _cmd_besicovitch(config: dict, rng) -> tuple[dict, tuple[list[str], Rows], list[str]]:
    x = _load_orbit(config["x"], rng)
    y = _load_orbit(config["y"], rng)
    schedule = _schedule_of(config)
    lookahead = int(config.get("lookahead", 32))
    trace = besicovitch_estimate(x, y, schedule, lookahead=lookahead)
    body = {"trace": trace.to_json()}
    if config.get("tilde"):
        grid = config.get("delta_grid")
        body["tilde"] = tilde_besicovitch(
            x, y, schedule, delta_grid=grid, lookahead=lookahead
        ).to_json()
    return body, _trace_table(body["trace"]), []


def _cmd_dbar(config: dict, rng) -> tuple[dict, tuple[list[str], Rows], list[str]]:
    x = _load_orbit(config["x"], rng)
    y = _load_orbit(config["y"], rng)
    trace = dbar_estimate(x, y, _schedule_of(config))
    body = {"trace": trace.to_json()}
    return body, _trace_table(body["trace"]), []


def _load_periodic(src: dict, rng):
    """For exact joining distances: a bare word means its periodic measure."""
    if "word" in src and "length" not in src:
        return periodic_from_word(src["word"])
    return _load_orbit(src, rng)


def _cmd_rhobar(config: dict, rng) -> tuple[dict, tuple[list[str], Rows], list[str]]:
    mode = config.get("mode")
    if mode is None:
        mode = "exact" if "a" in config else "bracket"
    if mode == "exact":
        if "a" not in config or "b" not in config:
            raise UsageError("exact mode needs sources a and b")
        a, b = _load_periodic(config["a"], rng), _load_periodic(config["b"], rng)
        cost = config.get("cost", "hamming0")
        if cost == "hamming0":
            result = dbar_periodic_exact(a, b)
        elif cost == "first_diff":
            result = rhobar_periodic_exact(a, b)
        else:
            raise UsageError(f"exact mode cost must be hamming0 or first_diff, not {cost!r}")
        body = {"exact": result.to_json(), "value": result.value, "regime": result.regime}
        rows = [[result.cost, result.value, result.offset]]
        return body, (["cost", "value", "offset"], rows), []
    if mode == "bracket":
        for key in ("x", "y", "k", "schedule"):
            if key not in config:
                raise UsageError(f"bracket mode needs {key!r}")
        x, y = _load_orbit(config["x"], rng), _load_orbit(config["y"], rng)
        bracket = rhobar_bracket(
            x, y, int(config["k"]), _schedule_of(config), cost=config.get("cost", "rho2k")
        )
        body = {"bracket": bracket.to_json(), "regime": bracket.regime}
        rows = [[bracket.cost, bracket.k, bracket.lower, bracket.upper]]
        return body, (["cost", "k", "lower", "upper"], rows), []
    if "measures" not in config or "target" not in config or "schedule" not in config:
        raise UsageError("sequence mode needs measures, target, and schedule")
    ms = [periodic_from_word(w) for w in config["measures"]]
    target = _load_orbit(config["target"], rng)
    report = rhobar_sequence_audit(ms, target, _schedule_of(config))
    body = {"sequence": report.to_json()}
    rows = [
        [r["word"], r["estimate"], r["certified_upper"]] for r in body["sequence"]["rows"]
    ]
    return body, (["word", "estimate", "certified_upper"], rows), []


def _cmd_bfree(config: dict, rng) -> tuple[dict, tuple[list[str], Rows], list[str]]:
    try:
        generators = GeneratorSet.from_json(config["generators"])
    except (ErgolabError, KeyError, TypeError) as exc:
        raise UsageError(f"bad generator set: {exc}") from exc
    mode = config.get("mode", "mirsky")
    failures: list[str] = []
    if mode == "davenport_erdos":
        if "truncations" not in config or "schedule" not in config:
            raise UsageError("davenport_erdos mode needs truncations and schedule")
        ks = config["truncations"]
        ks = [ks] if isinstance(ks, int) else list(ks)
        report = davenport_erdos_trace(generators, ks, _schedule_of(config))
        body = {"davenport_erdos": report.to_json()}
        if config.get("gate", True) and not report.nonincreasing:
            failures.append("davenport-erdos tails are not nonincreasing")
        rows = [[k, t] for k, t in zip(report.truncations, report.tails)]
        return body, (["truncation", "tail"], rows), failures
    if "truncations" not in config or "N" not in config:
        raise UsageError("mirsky mode needs truncations and N")
    kwargs = {}
    for key in ("tau_det", "tau_reg", "full_tau_det"):
        if key in config:
            kwargs[key] = float(config[key])
    for key in ("refine_passes", "containment_min_k"):
        if key in config:
            kwargs[key] = int(config[key])
    if "full_scan" in config:
        kwargs["full_scan"] = bool(config["full_scan"])
    report = mirsky_spectrum_experiment(
        generators, config["truncations"], int(config["N"]), **kwargs
    )
    body = {"mirsky": report.to_json()}
    if config.get("gate", True) and not report.passed:
        bad = [r.k for r in report.per_k if not r.passed]
        if bad:
            failures.append(f"spectrum certification failed for k in {bad}")
        if report.containment_ok is False:
            failures.append("liminf containment failed")
    rows = []
    for r in report.per_k:
        for e in r.spectrum.entries:
            p, q = e.probe.exact_rational or (None, None)
            rows.append([r.k, e.probe.theta, p, q, e.amplitude, e.trace.verdict])
    return body, (["k", "theta", "p", "q", "amplitude", "verdict"], rows), failures


def _cmd_entropy(config: dict, rng) -> tuple[dict, tuple[list[str], Rows], list[str]]:
    orbit = _load_orbit(config["source"], rng)
    if orbit.labels is None:
        raise UsageError("entropy needs symbolic data")
    labels = orbit.labels
    if "length" in config:
        n = int(config["length"])
        if n > labels.size:
            raise UsageError(f"source has {labels.size} symbols, config asks for {n}")
        labels = labels[:n]
    ks = config["k"]
    ks = [ks] if isinstance(ks, int) else sorted(int(k) for k in ks)
    alphabet = getattr(orbit.spec, "alphabet_size", 2)
    values = {}
    for k in ks:
        em = empirical_measure(labels, int(k), alphabet)
        values[int(k)] = block_entropy(em)
    body = {
        "entropy": {
            "length": int(labels.size),
            "alphabet": int(alphabet),
            "bits_per_symbol": {str(k): v for k, v in values.items()},
        }
    }
    failures = []
    checks = config.get("assert", {})
    if "max_bits" in checks:
        for k, v in values.items():
            if not v <= checks["max_bits"]:
                failures.append(f"entropy at k={k} is {v} > {checks['max_bits']}")
    if "min_bits" in checks:
        for k, v in values.items():
            if not v >= checks["min_bits"]:
                failures.append(f"entropy at k={k} is {v} < {checks['min_bits']}")
    rows = [[k, v] for k, v in values.items()]
    return body, (["k", "bits_per_symbol"], rows), failures


def _cmd_audit(config: dict, rng) -> tuple[dict, tuple[list[str], Rows], list[str]]:
    pairs, labels = [], []
    for i, pair in enumerate(config["pairs"]):
        pairs.append((_load_orbit(pair["x"], rng), _load_orbit(pair["y"], rng)))
        labels.append(pair.get("label", f"pair{i}"))
    report = equivalence_audit(
        pairs, _schedule_of(config), labels=labels, lookahead=int(config.get("lookahead", 32))
    )
    body = {"audit": report.to_json()}
    failures = []
    if config.get("gate", True) and not report.all_ok:
        bad = [r.label for r in report.rows if not r.ok]
        failures.append(f"equivalence envelope violated for {bad}")
    rows = [
        [r.label, r.dbar.estimate, r.besicovitch.estimate, r.tilde.value, r.ok]
        for r in report.rows
    ]
    return body, (["label", "dbar", "besicovitch", "tilde", "ok"], rows), failures


_RUNNERS = {
    "scan": _cmd_scan,
    "regularity": _cmd_regularity,
    "besicovitch": _cmd_besicovitch,
    "dbar": _cmd_dbar,
    "rhobar": _cmd_rhobar,
    "bfree": _cmd_bfree,
    "entropy": _cmd_entropy,
    "audit": _cmd_audit,
}


# ---------------------------------------------------------------------------
# report plumbing


def _np_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)!r}")


def _dump_json(data: dict) -> str:
    return json.dumps(data, sort_keys=True, indent=2, default=_np_default) + "\n"


def _dump_csv(head: list[str], rows: Rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(head)
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def _fail(code: str, message: str) -> int:
    line = " ".join(str(message).split()) or "unknown"
    print(f"error: {code}: {line}", file=sys.stderr)
    return 1


def main(argv=None) -> int:
    parser = _Parser(prog="ergolab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="path to the JSON config")
        p.add_argument("--out", default=".", help="output directory for reports")
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--seed", type=int, default=None, help="overrides config seed")
        p.add_argument("--format", choices=("json", "csv", "both"), default="both")
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        return _fail("usage", str(exc))

    started = time.time()
    try:
        try:
            raw = Path(args.config).read_text(encoding="utf-8")
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from exc
        try:
            config = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise UsageError(f"config is not valid JSON: {exc}") from exc
        try:
            jsonschema.validate(config, _SCHEMAS[args.command])
        except jsonschema.ValidationError as exc:
            return _fail("schema", f"{'/'.join(str(p) for p in exc.absolute_path)}: {exc.message}")

        seed = args.seed if args.seed is not None else config.get("seed")
        if _uses_surrogate(config) and seed is None:
            raise UsageError("this config uses surrogate data; a seed is required")
        rng = None if seed is None else np.random.default_rng(int(seed))
        threads = args.threads
        if threads is None:
            env = os.environ.get("ERGOLAB_THREADS", "").strip()
            threads = int(env) if env else 1
        if threads < 1:
            raise UsageError("threads must be at least 1")

        body, (head, rows), failures = _RUNNERS[args.command](config, rng)
    except UsageError as exc:
        return _fail("config", str(exc))
    except ErgolabError as exc:
        return _fail(type(exc).__name__.removesuffix("Error").lower(), str(exc))

    report = {
        "command": args.command,
        "version": __version__,
        "config": config,
        "seed": seed,
        "threads": threads,
        "assertions": {"failures": failures, "passed": not failures},
        **body,
    }
    out_dir = Path(args.out)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        if args.format in ("json", "both"):
            (out_dir / f"{args.command}_report.json").write_text(
                _dump_json(report), encoding="utf-8"
            )
        if args.format in ("csv", "both"):
            (out_dir / f"{args.command}_report.csv").write_text(
                _dump_csv(head, rows), encoding="utf-8"
            )
        sidecar = {
            "written_at": datetime.now(timezone.utc).isoformat(),
            "duration_seconds": time.time() - started,
            "backend": kernels.backend_name,
            "command": args.command,
        }
        (out_dir / f"{args.command}_meta.json").write_text(
            json.dumps(sidecar, sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )
    except OSError as exc:
        return _fail("io", f"cannot write reports: {exc}")

    return 0 if not failures else 2


if __name__ == "__main__":
    sys.exit(main())
