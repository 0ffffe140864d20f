"""File formats: dataset wire format, report CSVs, and schema validation.

Dataset wire format (UTF-8, LF):

    # logit-dataset v1 d=<d> n=<n>
    <y> <x_1> ... <x_d>

with y in {-1, 1} and coordinates as shortest round-trip decimal floats, so
write-then-read reproduces the doubles bit for bit.

CSV schemas (fixed column order):

    sweep.csv:  estimator,criterion,d,beta,epsilon,n_star,status,
                trials_per_probe,probes,master_seed,wall_ms
    bounds_report.csv: name,beta,rho,q,lhs,rhs,relation,margin,method,
                tolerance,pass

``beta`` prints the literal token ``inf`` for the noiseless case.  The
``probes`` column packs the probe transcript as ``n:successes/trials``
entries joined by ``;``.
"""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np

from .bounds import BoundReport
from .model import Dataset
from .sweep import SweepCell

__all__ = [
    "ParseError",
    "write_dataset",
    "read_dataset",
    "SWEEP_COLUMNS",
    "BOUNDS_COLUMNS",
    "sweep_csv_text",
    "bounds_csv_text",
    "validate_sweep_csv",
    "validate_bounds_csv",
]

SWEEP_COLUMNS = (
    "estimator",
    "criterion",
    "d",
    "beta",
    "epsilon",
    "n_star",
    "status",
    "trials_per_probe",
    "probes",
    "master_seed",
    "wall_ms",
)

BOUNDS_COLUMNS = (
    "name",
    "beta",
    "rho",
    "q",
    "lhs",
    "rhs",
    "relation",
    "margin",
    "method",
    "tolerance",
    "pass",
)


class ParseError(ValueError):
    """Malformed input file; the message names the offending line."""


# ---------------------------------------------------------------------------
# dataset wire format

_DATASET_HEADER_RE = re.compile(r"^# logit-dataset v1 d=(\d+) n=(\d+)$")


def write_dataset(dataset: Dataset, path: str | Path) -> None:
    lines = [f"# logit-dataset v1 d={dataset.dim} n={dataset.n}"]
    for i in range(dataset.n):
        y = int(dataset.y[i])
        coords = " ".join(repr(float(v)) for v in dataset.x[i])
        lines.append(f"{y} {coords}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def read_dataset(path: str | Path) -> Dataset:
    text = Path(path).read_text(encoding="utf-8").splitlines()
    if not text:
        raise ParseError(f"{path}: line 1: empty file, expected dataset header")
    m = _DATASET_HEADER_RE.match(text[0])
    if m is None:
        raise ParseError(f"{path}: line 1: bad header {text[0]!r}")
    d = int(m.group(1))
    n = int(m.group(2))
    if len(text) - 1 < n:
        raise ParseError(f"{path}: line {len(text)}: expected {n} sample lines, found {len(text) - 1}")
    x = np.empty((n, d))
    y = np.empty(n)
    for i in range(n):
        lineno = i + 2
        parts = text[i + 1].split()
        if len(parts) != d + 1:
            raise ParseError(
                f"{path}: line {lineno}: expected {d + 1} fields, found {len(parts)}"
            )
        if parts[0] not in ("-1", "1", "+1"):
            raise ParseError(f"{path}: line {lineno}: label must be -1 or 1, got {parts[0]!r}")
        y[i] = float(parts[0])
        try:
            x[i] = [float(p) for p in parts[1:]]
        except ValueError as exc:
            raise ParseError(f"{path}: line {lineno}: bad float ({exc})") from None
    return Dataset(x, y)


# ---------------------------------------------------------------------------
# CSV emission


def _fmt_opt_float(v) -> str:
    return "" if v is None else repr(float(v))


def _fmt_opt_int(v) -> str:
    return "" if v is None else str(int(v))


def _probe_transcript(cell: SweepCell) -> str:
    return ";".join(f"{p.n}:{p.successes}/{p.trials}" for p in cell.probes)


def sweep_csv_text(cells: list[SweepCell], with_timings: bool = False) -> str:
    """Deterministic CSV for sweep cells (sorted by cell coordinates).

    Wall-clock times are real measurements only when ``with_timings`` is
    set; by default the column holds 0 so repeated runs are byte-identical.
    """
    rows = [",".join(SWEEP_COLUMNS)]
    ordered = sorted(
        cells,
        key=lambda c: (
            c.spec.estimator,
            c.spec.criterion.mode,
            c.spec.d,
            str(c.spec.beta),
            c.spec.epsilon,
        ),
    )
    for cell in ordered:
        s = cell.spec
        rows.append(
            ",".join(
                [
                    s.estimator,
                    s.criterion.mode,
                    str(s.d),
                    str(s.beta),
                    repr(float(s.epsilon)),
                    _fmt_opt_int(cell.n_star),
                    cell.status,
                    str(s.trials),
                    _probe_transcript(cell),
                    str(cell.master_seed),
                    str(int(round(cell.wall_ms))) if with_timings else "0",
                ]
            )
        )
    return "\n".join(rows) + "\n"


def bounds_csv_text(reports: list[BoundReport]) -> str:
    rows = [",".join(BOUNDS_COLUMNS)]
    for r in reports:
        rows.append(
            ",".join(
                [
                    r.name,
                    _fmt_opt_float(r.beta),
                    _fmt_opt_float(r.rho),
                    _fmt_opt_int(r.q),
                    repr(float(r.lhs)),
                    repr(float(r.rhs)),
                    r.relation,
                    repr(float(r.margin)),
                    r.method,
                    repr(float(r.tolerance)),
                    "true" if r.passed else "false",
                ]
            )
        )
    return "\n".join(rows) + "\n"


# ---------------------------------------------------------------------------
# schema validation

_BETA_TOKEN_RE = re.compile(r"^(inf|[0-9.eE+-]+)$")
_PROBES_RE = re.compile(r"^(\d+:\d+/\d+)(;\d+:\d+/\d+)*$")


def _check_float(token: str) -> bool:
    try:
        float(token)
        return True
    except ValueError:
        return False


def validate_sweep_csv(text: str) -> list[str]:
    """Schema errors for sweep.csv content (empty list means valid)."""
    errors: list[str] = []
    lines = text.splitlines()
    if not lines or lines[0] != ",".join(SWEEP_COLUMNS):
        return [f"line 1: bad header (expected {','.join(SWEEP_COLUMNS)})"]
    for k, line in enumerate(lines[1:], start=2):
        f = line.split(",")
        if len(f) != len(SWEEP_COLUMNS):
            errors.append(f"line {k}: expected {len(SWEEP_COLUMNS)} columns, found {len(f)}")
            continue
        est, crit, d, beta, eps, n_star, status, trials, probes, seed, wall = f
        if est not in ("linear", "relu", "zero_one", "adaptive"):
            errors.append(f"line {k}: unknown estimator {est!r}")
        if crit not in ("probability_half", "expected_error", "median_error"):
            errors.append(f"line {k}: unknown criterion {crit!r}")
        if not d.isdigit():
            errors.append(f"line {k}: d must be an integer")
        if not (_BETA_TOKEN_RE.match(beta) and (beta == "inf" or _check_float(beta))):
            errors.append(f"line {k}: bad beta token {beta!r}")
        if not _check_float(eps):
            errors.append(f"line {k}: bad epsilon {eps!r}")
        if status not in ("resolved", "unresolved"):
            errors.append(f"line {k}: bad status {status!r}")
        if status == "resolved" and not n_star.isdigit():
            errors.append(f"line {k}: resolved cell requires integer n_star")
        if status == "unresolved" and n_star != "":
            errors.append(f"line {k}: unresolved cell must leave n_star empty")
        if not trials.isdigit():
            errors.append(f"line {k}: trials_per_probe must be an integer")
        if probes and not _PROBES_RE.match(probes):
            errors.append(f"line {k}: bad probes transcript")
        if not seed.isdigit():
            errors.append(f"line {k}: master_seed must be an unsigned integer")
        if not wall.isdigit():
            errors.append(f"line {k}: wall_ms must be an integer")
    return errors


def validate_bounds_csv(text: str) -> list[str]:
    """Schema errors for bounds_report.csv content (empty list means valid)."""
    errors: list[str] = []
    lines = text.splitlines()
    if not lines or lines[0] != ",".join(BOUNDS_COLUMNS):
        return [f"line 1: bad header (expected {','.join(BOUNDS_COLUMNS)})"]
    for k, line in enumerate(lines[1:], start=2):
        f = line.split(",")
        if len(f) != len(BOUNDS_COLUMNS):
            errors.append(f"line {k}: expected {len(BOUNDS_COLUMNS)} columns, found {len(f)}")
            continue
        name, beta, rho, q, lhs, rhs, relation, margin, method, tol, passed = f
        if not name:
            errors.append(f"line {k}: empty name")
        for label, token in (("beta", beta), ("rho", rho)):
            if token and not _check_float(token):
                errors.append(f"line {k}: bad {label} {token!r}")
        if q and not q.isdigit():
            errors.append(f"line {k}: bad q {q!r}")
        for label, token in (("lhs", lhs), ("rhs", rhs), ("margin", margin), ("tolerance", tol)):
            if not _check_float(token):
                errors.append(f"line {k}: bad {label} {token!r}")
        if relation not in ("<=", ">=", "sandwich"):
            errors.append(f"line {k}: bad relation {relation!r}")
        if method not in ("Quadrature", "ClosedForm", "MonteCarlo"):
            errors.append(f"line {k}: bad method {method!r}")
        if passed not in ("true", "false"):
            errors.append(f"line {k}: bad pass flag {passed!r}")
    return errors
