"""Command-line sweeps over distance producing rate/fidelity tables.

Examples::

    dicke-network sweep --scenario fixed_fidelity_curve --n 3 --fidelity 0.95 --dmax-km 300
    dicke-network --scenario gaussian_w --n 2 --squeezing-db 0.87,1.3 --format json --out w2.json
    dicke-network reproduce fig3 --out fig3.csv

Flags may also come from a flat JSON object (``--config``) whose keys mirror
the flag names; flags given on the command line win.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field, fields
from typing import Any, Sequence

import numpy as np

from . import benchmarks, gaussian_cv, protocol
from ._errors import DomainError
from .fock_engine import FockReference
from .linear_optics import LossChannel, fiber_transmittance

SCENARIOS = (
    "ideal_w",
    "ideal_dicke",
    "gaussian_w",
    "benchmark_direct",
    "benchmark_squashed",
    "fixed_fidelity_curve",
)
FIGURES = ("fig3", "fig5", "fig6", "fig7", "fig8", "fig9", "fig10", "fig11", "fig12", "fig13")
FIG8_SQUEEZING_DB = (0.87, 1.3, 1.74, 2.17, 2.61, 3.04, 3.47)


class UsageError(Exception):
    """Invalid combination of sweep parameters."""


@dataclass(frozen=True)
class SweepConfig:
    scenario: str
    n_parties: int = 2
    herald_photons: int = 1
    b: tuple[float, ...] | None = None
    fidelity: tuple[float, ...] | None = None
    squeezing_db: tuple[float, ...] | None = None
    dmin_km: float = 0.0
    dmax_km: float = 300.0
    step_km: float = 10.0
    gamma_db_per_km: float = 0.2
    dark_count: float = 1e-7
    det_efficiency: float = 0.8
    cutoff: int | None = None

    def distances(self) -> np.ndarray:
        count = int(math.floor((self.dmax_km - self.dmin_km) / self.step_km + 1e-9)) + 1
        return self.dmin_km + self.step_km * np.arange(count)

    @property
    def detector(self) -> gaussian_cv.DetectorModel:
        return gaussian_cv.DetectorModel(self.dark_count, self.det_efficiency)


@dataclass
class Dataset:
    columns: list[str]
    rows: list[dict[str, Any]] = field(default_factory=list)

    def extend(self, other: "Dataset") -> None:
        for c in other.columns:
            if c not in self.columns:
                self.columns.append(c)
        self.rows.extend(other.rows)


# ---------------------------------------------------------------------------
# validation


def validate(config: SweepConfig) -> SweepConfig:
    if config.scenario not in SCENARIOS:
        raise UsageError(f"scenario: unknown value {config.scenario!r}; choose from {', '.join(SCENARIOS)}")
    if not config.step_km > 0:
        raise UsageError("step-km: must be positive")
    if config.dmin_km < 0:
        raise UsageError("dmin-km: must be non-negative")
    if config.dmax_km < config.dmin_km:
        raise UsageError("dmax-km: must not be below dmin-km")
    if config.n_parties < 1:
        raise UsageError("n: must be at least 1")
    if not 0 <= config.dark_count <= 1:
        raise UsageError("dark-count: must lie in [0, 1]")
    if not 0 <= config.det_efficiency <= 1:
        raise UsageError("det-efficiency: must lie in [0, 1]")
    supplied = {k for k in ("b", "fidelity", "squeezing_db") if getattr(config, k) is not None}
    allowed = {
        "ideal_w": {"b", "fidelity"},
        "ideal_dicke": {"b", "fidelity"},
        "gaussian_w": {"squeezing_db", "fidelity"},
        "fixed_fidelity_curve": {"fidelity"},
        "benchmark_direct": set(),
        "benchmark_squashed": set(),
    }[config.scenario]
    extra = supplied - allowed
    if extra:
        key = sorted(extra)[0].replace("_", "-")
        raise UsageError(f"{key}: not accepted by scenario {config.scenario}")
    if allowed and len(supplied) != 1:
        names = " or ".join("--" + k.replace("_", "-") for k in sorted(allowed))
        raise UsageError(f"{names}: scenario {config.scenario} needs exactly one of these")
    if config.fidelity is not None and any(not 0 < f < 1 for f in config.fidelity):
        raise UsageError("fidelity: values must lie in (0, 1)")
    if config.b is not None and any(not 0 <= b <= 1 for b in config.b):
        raise UsageError("b: values must lie in [0, 1]")
    if config.squeezing_db is not None and any(db < 0 for db in config.squeezing_db):
        raise UsageError("squeezing-db: values must be non-negative")
    if config.scenario == "gaussian_w" and config.n_parties not in (2, 3, 4):
        raise UsageError("n: gaussian_w supports 2, 3 or 4 parties")
    if config.scenario == "benchmark_squashed" and config.n_parties != 3:
        raise UsageError("n: the squashed-entanglement bound is available for 3 parties only")
    if config.scenario in ("ideal_w", "fixed_fidelity_curve") and config.n_parties < 2:
        raise UsageError("n: need at least 2 parties")
    if config.scenario == "ideal_w" and config.herald_photons != 1:
        raise UsageError("m: ideal_w heralds a single photon; use ideal_dicke for m > 1")
    if config.scenario in ("ideal_dicke", "fixed_fidelity_curve") and not 1 <= config.herald_photons < config.n_parties:
        raise UsageError("m: need 1 <= m < n")
    return config


# ---------------------------------------------------------------------------
# sweeps

BASE_COLUMNS = ["scenario", "series", "n_parties", "distance_km", "arm_transmittance", "rate", "fidelity"]


def _ideal(config: SweepConfig) -> Dataset:
    m = 1 if config.scenario == "ideal_w" else config.herald_photons
    data = Dataset(BASE_COLUMNS + ["herald_photons", "b", "rate_leading"])
    if config.b is not None:
        series = [(f"b={b:g}", b) for b in config.b]
    else:
        series = [(f"F={f:g}", protocol.b_for_fidelity(config.n_parties, f, m)) for f in config.fidelity]
    for label, b in series:
        for d in config.distances():
            t = fiber_transmittance(d, config.gamma_db_per_km)
            params = protocol.ProtocolParams(config.n_parties, m, b, LossChannel(t))
            patterns = protocol.single_detector_patterns(params.width, m)
            probs = [protocol.herald_probability_exact(params, p) for p in patterns]
            rate = math.fsum(probs)
            fid = (
                math.fsum(p * protocol.conditional_fidelity(params, s) for p, s in zip(probs, patterns)) / rate
                if rate > 0
                else float("nan")
            )
            data.rows.append(
                _row(config, label, d, t, rate, fid, herald_photons=m, b=b,
                     rate_leading=params.width * protocol.herald_probability_leading(params))
            )
    return data


def _fixed_fidelity(config: SweepConfig) -> Dataset:
    m = config.herald_photons
    data = Dataset(BASE_COLUMNS + ["herald_photons", "b", "rate_asymptote"])
    for f in config.fidelity:
        b = protocol.b_for_fidelity(config.n_parties, f, m)
        for d in config.distances():
            t = fiber_transmittance(d, config.gamma_db_per_km)
            if m == 1:
                rate = protocol.rate_at_fixed_fidelity(config.n_parties, f, t)
            else:
                rate = protocol.dicke_rate_at_fixed_fidelity(config.n_parties, m, f, t)
            asym = protocol.rate_asymptote(f, t) if m == 1 else float("nan")
            data.rows.append(_row(config, f"F={f:g}", d, t, rate, f, herald_photons=m, b=b, rate_asymptote=asym))
    return data


def _gaussian(config: SweepConfig) -> Dataset:
    columns = BASE_COLUMNS + ["squeezing_db", "r"]
    if config.cutoff is not None:
        columns += ["rate_fock", "fidelity_fock"]
    data = Dataset(columns)
    det = config.detector
    n = config.n_parties
    targets = (
        [(f"{db:g}dB", gaussian_cv.SqueezingSpec.from_db(db), None) for db in config.squeezing_db]
        if config.squeezing_db is not None
        else [(f"F={f:g}", None, f) for f in config.fidelity]
    )
    for label, spec, target in targets:
        for d in config.distances():
            t = fiber_transmittance(d, config.gamma_db_per_km)
            sq = spec
            if target is not None:
                try:
                    sq = gaussian_cv.solve_squeezing_for_fidelity(n, target, t, det)
                except DomainError:
                    sq = None
            if sq is None:
                extras = {"squeezing_db": float("nan"), "r": float("nan")}
                if config.cutoff is not None:
                    extras.update(rate_fock=float("nan"), fidelity_fock=float("nan"))
                data.rows.append(_row(config, label, d, t, float("nan"), float("nan"), **extras))
                continue
            rate, fid = gaussian_cv.rate_and_fidelity(n, sq, t, det)
            extras = {"squeezing_db": sq.db, "r": sq.r}
            if config.cutoff is not None:
                ref = FockReference(n, sq, t, det, cutoff=config.cutoff)
                extras.update(rate_fock=ref.click_probability(), fidelity_fock=ref.w_fidelity())
            data.rows.append(_row(config, label, d, t, rate, fid, **extras))
    return data


def _direct(config: SweepConfig) -> Dataset:
    data = Dataset(list(BASE_COLUMNS))
    for d in config.distances():
        t = fiber_transmittance(d, config.gamma_db_per_km)
        data.rows.append(_row(config, "direct", d, t, benchmarks.direct_rate(config.n_parties, t), 1.0))
    return data


def _squashed(config: SweepConfig) -> Dataset:
    data = Dataset(list(BASE_COLUMNS))
    for d in config.distances():
        t = fiber_transmittance(d, config.gamma_db_per_km)
        data.rows.append(_row(config, "squashed", d, t, benchmarks.squashed_bound_w3(t), float("nan")))
    return data


def _row(config: SweepConfig, series: str, d: float, t: float, rate: float, fid: float, **extras) -> dict:
    row = {
        "scenario": config.scenario,
        "series": series,
        "n_parties": config.n_parties,
        "distance_km": float(d),
        "arm_transmittance": float(t),
        "rate": float(rate),
        "fidelity": float(fid),
    }
    row.update({k: (float(v) if isinstance(v, (float, np.floating)) else v) for k, v in extras.items()})
    return row


_RUNNERS = {
    "ideal_w": _ideal,
    "ideal_dicke": _ideal,
    "gaussian_w": _gaussian,
    "benchmark_direct": _direct,
    "benchmark_squashed": _squashed,
    "fixed_fidelity_curve": _fixed_fidelity,
}


def run_sweep(config: SweepConfig) -> Dataset:
    """One row per (series, distance), series outermost, distances in grid order."""
    validate(config)
    return _RUNNERS[config.scenario](config)


# ---------------------------------------------------------------------------
# figure presets


def _rate_vs_parties(fidelities=(0.9, 0.95, 0.99), transmittance=0.01, n_max=64) -> Dataset:
    data = Dataset(["scenario", "series", "n_parties", "arm_transmittance", "fidelity", "rate", "rate_asymptote"])
    for f in fidelities:
        for n in range(2, n_max + 1):
            data.rows.append(
                {
                    "scenario": "fixed_fidelity_curve",
                    "series": f"F={f:g}",
                    "n_parties": n,
                    "arm_transmittance": transmittance,
                    "fidelity": f,
                    "rate": protocol.rate_at_fixed_fidelity(n, f, transmittance),
                    "rate_asymptote": protocol.rate_asymptote(f, transmittance),
                }
            )
    return data


def _combine(configs: Sequence[SweepConfig]) -> Dataset:
    out = Dataset(list(BASE_COLUMNS))
    for cfg in configs:
        out.extend(run_sweep(cfg))
    return out


def reproduce(figure: str, overrides: dict | None = None) -> Dataset:
    """Data behind one of the figure presets (see README for the parameter choices)."""
    base = dict(overrides or {})

    def cfg(**kw):
        merged = {**kw, **{k: v for k, v in base.items() if k not in kw}}
        return SweepConfig(**merged)

    grid = dict(dmin_km=0.0, dmax_km=300.0, step_km=2.0)
    ggrid = dict(dmin_km=0.0, dmax_km=300.0, step_km=10.0)
    if figure == "fig3":
        return _combine([
            cfg(scenario="fixed_fidelity_curve", n_parties=3, fidelity=(0.95,), **grid),
            cfg(scenario="benchmark_direct", n_parties=3, **grid),
            cfg(scenario="benchmark_squashed", n_parties=3, **grid),
        ])
    if figure == "fig5":
        return _rate_vs_parties()
    if figure == "fig6":
        runs = []
        for n in (2, 3, 4):
            runs.append(cfg(scenario="fixed_fidelity_curve", n_parties=n, fidelity=(0.95,), **grid))
            runs.append(cfg(scenario="benchmark_direct", n_parties=n, **grid))
        return _combine(runs)
    if figure == "fig7":
        return _combine([
            cfg(scenario="fixed_fidelity_curve", n_parties=4, herald_photons=1, fidelity=(0.95, 0.99), **grid),
            cfg(scenario="fixed_fidelity_curve", n_parties=4, herald_photons=2, fidelity=(0.95, 0.99), **grid),
            cfg(scenario="benchmark_direct", n_parties=4, **grid),
        ])
    if figure in ("fig8", "fig9"):
        wide = dict(dmin_km=0.0, dmax_km=400.0, step_km=5.0)
        runs = [cfg(scenario="gaussian_w", n_parties=2, squeezing_db=FIG8_SQUEEZING_DB, **wide)]
        if figure == "fig8":
            # single-photon-source reference curve at fidelity 0.99
            runs.append(cfg(scenario="fixed_fidelity_curve", n_parties=2, fidelity=(0.99,), **wide))
        return _combine(runs)
    fixed = {
        "fig10": (2, (0.9, 0.93, 0.95, 0.97)),
        "fig11": (3, (0.9, 0.95, 0.97, 0.99)),
        "fig12": (4, (0.9, 0.95, 0.97, 0.99)),
    }
    if figure in fixed:
        n, fids = fixed[figure]
        return _combine([
            cfg(scenario="gaussian_w", n_parties=n, fidelity=fids, **ggrid),
            cfg(scenario="benchmark_direct", n_parties=n, **ggrid),
        ])
    if figure == "fig13":
        return _combine([cfg(scenario="gaussian_w", n_parties=n, fidelity=(0.99,), **ggrid) for n in (2, 3, 4)])
    raise UsageError(f"figure: unknown preset {figure!r}; choose from {', '.join(FIGURES)}")


# ---------------------------------------------------------------------------
# output


def _format_value(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        if math.isnan(value):
            return "nan"
        return format(float(value), ".17g")
    if value is None:
        return ""
    return str(value)


def _json_value(value):
    if isinstance(value, (float, np.floating)):
        return None if not math.isfinite(value) else float(value)
    if isinstance(value, np.integer):
        return int(value)
    return value


def render(dataset: Dataset, fmt: str) -> str:
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\r\n")
        writer.writerow(dataset.columns)
        for row in dataset.rows:
            writer.writerow([_format_value(row.get(c)) for c in dataset.columns])
        return buf.getvalue()
    if fmt == "json":
        rows = [{c: _json_value(row.get(c)) for c in dataset.columns} for row in dataset.rows]
        return json.dumps(rows, indent=1) + "\n"
    raise UsageError(f"format: unknown value {fmt!r}; choose csv or json")


def emit(dataset: Dataset, fmt: str = "csv", path: str | None = None) -> None:
    """Write ``dataset`` as CSV (RFC 4180, header row) or a JSON array of row objects."""
    text = render(dataset, fmt)
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


# ---------------------------------------------------------------------------
# argument handling

FLAG_TO_FIELD = {
    "scenario": "scenario",
    "n": "n_parties",
    "m": "herald_photons",
    "b": "b",
    "fidelity": "fidelity",
    "squeezing_db": "squeezing_db",
    "dmin_km": "dmin_km",
    "dmax_km": "dmax_km",
    "step_km": "step_km",
    "gamma_db_per_km": "gamma_db_per_km",
    "dark_count": "dark_count",
    "det_efficiency": "det_efficiency",
    "cutoff": "cutoff",
}
LIST_FIELDS = {"b", "fidelity", "squeezing_db"}
OUTPUT_KEYS = {"format", "out"}


def _float_list(text) -> tuple[float, ...]:
    if isinstance(text, (int, float)):
        return (float(text),)
    if isinstance(text, (list, tuple)):
        return tuple(float(x) for x in text)
    return tuple(float(x) for x in str(text).split(",") if x.strip())


def _coerce(fname: str, value):
    types = {f.name: f.type for f in fields(SweepConfig)}
    try:
        if fname in LIST_FIELDS:
            return _float_list(value)
        if fname == "scenario":
            return str(value)
        if fname in ("n_parties", "herald_photons", "cutoff"):
            if isinstance(value, float) and not value.is_integer():
                raise ValueError(value)
            return int(value)
        return float(value)
    except (TypeError, ValueError):
        raise UsageError(f"{fname}: cannot parse {value!r} as {types.get(fname)}") from None


def _load_config(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise UsageError(f"config: cannot read {path}: {exc.strerror or exc}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"config: {path} is not valid JSON ({exc.msg})") from None
    if not isinstance(raw, dict):
        raise UsageError("config: top level must be a JSON object")
    return raw


def _settings_from(args: argparse.Namespace) -> tuple[dict, dict]:
    """Merge config-file values with explicit flags; returns (sweep fields, output options)."""
    merged: dict = {}
    output = {"format": "csv", "out": None}
    if getattr(args, "config", None):
        for key, value in _load_config(args.config).items():
            norm = key.replace("-", "_")
            if norm in OUTPUT_KEYS:
                output[norm] = value
            elif norm in FLAG_TO_FIELD:
                merged[FLAG_TO_FIELD[norm]] = value
            elif norm in FLAG_TO_FIELD.values():
                merged[norm] = value
            else:
                raise UsageError(f"{key}: unknown configuration key")
    for flag, fname in FLAG_TO_FIELD.items():
        value = getattr(args, flag, None)
        if value is not None:
            merged[fname] = value
    for key in OUTPUT_KEYS:
        if getattr(args, key, None) is not None:
            output[key] = getattr(args, key)
    return {k: _coerce(k, v) for k, v in merged.items()}, output


def _add_common(p: argparse.ArgumentParser, with_scenario: bool) -> None:
    if with_scenario:
        p.add_argument("--scenario", help=f"one of {', '.join(SCENARIOS)}")
    p.add_argument("--n", help="number of parties N")
    p.add_argument("--m", help="herald photon number M")
    p.add_argument("--b", help="source amplitude(s) b, comma separated")
    p.add_argument("--fidelity", help="target fidelity value(s), comma separated")
    p.add_argument("--squeezing-db", dest="squeezing_db", help="squeezing in dB, comma separated")
    p.add_argument("--dmin-km", dest="dmin_km")
    p.add_argument("--dmax-km", dest="dmax_km")
    p.add_argument("--step-km", dest="step_km")
    p.add_argument("--gamma-db-per-km", dest="gamma_db_per_km", help="fibre loss (default 0.2)")
    p.add_argument("--dark-count", dest="dark_count", help="dark-count probability per gate (default 1e-7)")
    p.add_argument("--det-efficiency", dest="det_efficiency", help="detector efficiency (default 0.8)")
    p.add_argument("--cutoff", help="per-source Fock cutoff; adds truncated-Fock cross-check columns")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--out", help="output path (default stdout)")
    p.add_argument("--config", help="flat JSON file with the same keys as the flags")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dicke-network", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command")
    sweep = sub.add_parser("sweep", help="run a parameter sweep over distance")
    _add_common(sweep, with_scenario=True)
    rep = sub.add_parser("reproduce", help="emit the data behind a figure preset")
    rep.add_argument("figure", choices=FIGURES)
    _add_common(rep, with_scenario=False)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and argv[0].startswith("--") and argv[0] not in ("--help",):
        argv.insert(0, "sweep")
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help(sys.stderr)
        return 2
    try:
        settings, output = _settings_from(args)
        if output["format"] not in ("csv", "json"):
            raise UsageError(f"format: unknown value {output['format']!r}; choose csv or json")
        if args.command == "sweep":
            if "scenario" not in settings:
                raise UsageError("scenario: required (flag --scenario or config key)")
            dataset = run_sweep(SweepConfig(**settings))
        else:
            settings.pop("scenario", None)
            dataset = reproduce(args.figure, settings)
        emit(dataset, output["format"], output["out"])
    except UsageError as exc:
        print(f"dicke-network: error: {exc}", file=sys.stderr)
        return 2
    except BrokenPipeError:
        # reader went away (e.g. piped into head); silence the flush at exit
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return 1
    except (DomainError, OSError, ArithmeticError) as exc:
        print(f"dicke-network: runtime error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
