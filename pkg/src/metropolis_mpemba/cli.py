"""Command-line front end.

Scenario files are JSON objects::

    {
      "energies": [0, 0.5, 2],
      "beta_bath": 0.5,
      "blocked_edges": [[2, 3]],
      "grid": {"beta_min": 0.01, "beta_max": 25, "points": 400}
    }

``blocked_edges`` (1-based state pairs) and ``grid`` are optional.  Exit
codes: 0 success, 2 invalid scenario or arguments, 3 disconnected graph,
4 eigensolver failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .exceptions import ConvergenceError, DisconnectedGraphError
from .markov import AdjacencyGraph, EnergySpectrum, boltzmann, build_metropolis
from .mpemba import GridSpec, MpembaReport, a2_scan, analyze
from .numeric import numeric_spectrum
from .spectral import closed_form_spectrum, residual

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_DISCONNECTED = 3
EXIT_SOLVER = 4

FIG1_SCENARIO = {
    "energies": [0.0, 0.5, 2.0],
    "beta_bath": 0.5,
    "blocked_edges": [[2, 3]],
}


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class Scenario:
    energies: tuple[float, ...]
    beta_bath: float
    blocked_edges: tuple[tuple[int, int], ...] = ()
    grid: GridSpec | None = None

    @property
    def spectrum(self) -> EnergySpectrum:
        return EnergySpectrum(self.energies)

    @property
    def graph(self) -> AdjacencyGraph:
        return AdjacencyGraph.from_blocked_edges(len(self.energies), self.blocked_edges)

    @classmethod
    def from_dict(cls, doc) -> "Scenario":
        if not isinstance(doc, dict):
            raise ScenarioError("scenario must be a JSON object")
        unknown = set(doc) - {"energies", "beta_bath", "blocked_edges", "grid"}
        if unknown:
            raise ScenarioError(f"unknown scenario fields: {sorted(unknown)}")
        try:
            energies = tuple(float(x) for x in doc["energies"])
            beta_bath = float(doc["beta_bath"])
        except KeyError as exc:
            raise ScenarioError(f"missing field {exc.args[0]!r}") from None
        except (TypeError, ValueError) as exc:
            raise ScenarioError(f"bad numeric field: {exc}") from None
        n = len(energies)
        if n < 2:
            raise ScenarioError(f"need at least 2 energies, got {n}")
        if not all(math.isfinite(e) for e in energies):
            raise ScenarioError("energies must be finite")
        if not (math.isfinite(beta_bath) and beta_bath > 0):
            raise ScenarioError(f"beta_bath must be a positive finite number, got {beta_bath}")

        edges = []
        for pair in doc.get("blocked_edges", []) or []:
            if (
                not isinstance(pair, (list, tuple))
                or len(pair) != 2
                or not all(isinstance(x, int) and not isinstance(x, bool) for x in pair)
            ):
                raise ScenarioError(f"blocked edge {pair!r} is not a pair of integers")
            i, j = pair
            if not (1 <= i <= n and 1 <= j <= n):
                raise ScenarioError(f"blocked edge {pair!r} out of range 1..{n}")
            if i == j:
                raise ScenarioError(f"blocked edge {pair!r} is a self-pair")
            key = (min(i, j), max(i, j))
            if key in edges:
                raise ScenarioError(f"blocked edge {pair!r} listed twice")
            edges.append(key)

        grid = doc.get("grid")
        if grid is not None:
            grid = _grid_from(grid)
        return cls(energies, beta_bath, tuple(edges), grid)


def _grid_from(obj) -> GridSpec:
    try:
        if isinstance(obj, dict):
            lo, hi, pts = obj["beta_min"], obj["beta_max"], obj.get("points", 400)
        else:
            lo, hi, pts = obj
        if isinstance(pts, float) and pts.is_integer():
            pts = int(pts)
        if not isinstance(pts, int):
            raise ValueError(f"points must be an integer, got {pts!r}")
        return GridSpec(float(lo), float(hi), pts)
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioError(f"bad grid: {exc}") from None


def parse_grid_flag(text: str) -> GridSpec:
    parts = text.split(":")
    if len(parts) != 3:
        raise ScenarioError(f"--grid expects min:max:points, got {text!r}")
    try:
        return _grid_from([float(parts[0]), float(parts[1]), int(parts[2])])
    except ValueError as exc:
        raise ScenarioError(f"bad --grid value {text!r}: {exc}") from None


def load_scenario(path: str | os.PathLike) -> Scenario:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"scenario is not valid JSON: {exc}") from None
    return Scenario.from_dict(doc)


def fmt(x: float) -> str:
    return "%.17g" % x


def _json_float(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(x) if isinstance(x, float) else x for x in row])
    return buf.getvalue()


def _json_text(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def spectrum_artifact(scenario: Scenario):
    """Eigensystem of the bath generator: closed form if complete, else Jacobi."""
    spectrum, graph = scenario.spectrum, scenario.graph
    R = build_metropolis(spectrum, scenario.beta_bath, graph)
    if graph.is_complete:
        dec = closed_form_spectrum(spectrum, scenario.beta_bath)
    else:
        dec = numeric_spectrum(R, boltzmann(spectrum, scenario.beta_bath))
    return R, dec, residual(R, dec)


def _spectrum_outputs(scenario: Scenario, fmt_name: str) -> tuple[dict[str, str], str]:
    R, dec, res = spectrum_artifact(scenario)
    n = dec.n
    if fmt_name == "csv":
        rows = [
            [k + 1, float(dec.eigenvalues[k])]
            + [float(x) for x in dec.eigenvectors[:, k]]
            + [dec.source]
            for k in range(n)
        ]
        header = ["k", "eigenvalue"] + [f"v{i + 1}" for i in range(n)] + ["source"]
        body = _csv_text(header, rows)
        name = "spectrum.csv"
    else:
        body = _json_text(
            {
                "source": dec.source,
                "residual": float(res),
                "modes": [
                    {
                        "k": k + 1,
                        "eigenvalue": float(dec.eigenvalues[k]),
                        "vector": [float(x) for x in dec.eigenvectors[:, k]],
                    }
                    for k in range(n)
                ],
                "tool": _tool(),
            }
        )
        name = "spectrum.json"
    summary = f"source={dec.source} n={n} residual={fmt(res)}"
    return {name: body}, summary


def _tool() -> dict:
    return {"name": "metropolis-mpemba", "version": __version__}


def report_document(scenario: Scenario, curve, report: MpembaReport) -> dict:
    gap = report.gap
    return {
        "scenario": {
            "energies": list(scenario.energies),
            "beta_bath": scenario.beta_bath,
            "blocked_edges": [list(p) for p in scenario.blocked_edges],
        },
        "grid": {
            "beta_min": float(curve.beta_grid[0]),
            "beta_max": float(curve.beta_grid[-1]),
            "points": int(curve.beta_grid.size),
            "bath_exterior": bool(curve.bath_exterior),
        },
        "source": curve.source,
        "convention": curve.convention,
        "classification": report.classification,
        "strong_roots": [
            {"beta": r, "side": s} for r, s in zip(report.strong_roots, report.strong_sides)
        ],
        "weak_intervals": [
            {"beta_lo": lo, "beta_hi": hi, "side": s}
            for (lo, hi), s in zip(report.weak_intervals, report.weak_sides)
        ],
        "tangential_candidates": list(report.tangential_candidates),
        "gap_check": None
        if gap is None
        else {
            "lambda2": _json_float(gap.lambda2),
            "lambda3": _json_float(gap.lambda3),
            "ratio": _json_float(gap.ratio),
            "ok": gap.ok,
        },
        "warnings": list(report.warnings),
        "tool": _tool(),
    }


def _scan_outputs(scenario: Scenario, fmt_name: str, grid: GridSpec | None):
    curve = a2_scan(scenario.spectrum, scenario.beta_bath, scenario.graph, grid or scenario.grid)
    report = analyze(curve)
    pairs = list(zip(curve.beta_grid.tolist(), curve.values.tolist()))
    if fmt_name == "csv":
        table = {"a2.csv": _csv_text(["beta", "a2"], pairs)}
    else:
        table = {"a2.json": _json_text({"beta": [p[0] for p in pairs], "a2": [p[1] for p in pairs]})}
    table["report.json"] = _json_text(report_document(scenario, curve, report))
    summary = f"classification={report.classification} source={curve.source} points={len(pairs)}"
    for w in report.warnings:
        summary += f"\nwarning: {w}"
    return table, summary


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="metropolis-mpemba",
        description="Metropolis spectra and Mpemba-effect scans for small energy-level systems.",
    )
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, scenario_required=True):
        if scenario_required:
            sp.add_argument("--scenario", required=True, help="scenario JSON file")
        sp.add_argument("--out", default=".", help="output directory (default: current)")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")

    sp = sub.add_parser("spectrum", help="eigenvalues and eigenvectors of the bath generator")
    common(sp)
    sp = sub.add_parser("scan", help="a2 curve and Mpemba classification")
    common(sp)
    sp.add_argument("--grid", help="beta_min:beta_max:points (log-spaced)")
    sp = sub.add_parser("demo-fig1", help="three-level example with edge (2,3) blocked")
    common(sp, scenario_required=False)
    sp.add_argument("--grid", help="beta_min:beta_max:points (log-spaced)")
    return p


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "demo-fig1":
            scenario = Scenario.from_dict(FIG1_SCENARIO)
        else:
            scenario = load_scenario(args.scenario)
        grid = parse_grid_flag(args.grid) if getattr(args, "grid", None) else None
        if args.command == "spectrum":
            outputs, summary = _spectrum_outputs(scenario, args.format)
        else:
            outputs, summary = _scan_outputs(scenario, args.format, grid)
    except DisconnectedGraphError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DISCONNECTED
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID

    out = Path(args.out)
    for name, text in outputs.items():
        write_atomic(out / name, text)
    print(summary)
    return EXIT_OK


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
