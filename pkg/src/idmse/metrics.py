"""Scale-invariant SDR-family metrics and the initial-error report.

An estimate s_hat is split by orthogonal projection into

    target       = projection onto span{s}
    interference = projection onto span{s, n} minus the target
    artifact     = s_hat minus its projection onto span{s, n}

which are mutually orthogonal. Ratios whose denominator vanishes (up to
round-off) are reported as ``inf``; CSV writers replace that by
``INF_SENTINEL_DB`` and set an exact flag.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, ShapeMismatchError
from .sampler import initial_error
from .schedule import Schedule

INF_SENTINEL_DB = 300.0
# energies below this fraction of ||s_hat||^2 are round-off
_ZERO_REL = 1e-24


def _vectors(*signals) -> list[np.ndarray]:
    out = []
    for s in signals:
        s = getattr(s, "samples", s)
        out.append(np.asarray(s, dtype=float).ravel())
    if len({v.size for v in out}) > 1:
        raise ShapeMismatchError(f"length mismatch: {[v.size for v in out]}")
    return out


def _ratio_db(num: float, den: float, scale: float) -> float:
    if den <= _ZERO_REL * scale:
        return math.inf
    if num <= _ZERO_REL * scale:
        return -math.inf
    return 10.0 * math.log10(num / den)


@dataclass(frozen=True)
class Decomposition:
    target: np.ndarray
    interference: np.ndarray
    artifact: np.ndarray


def decompose(estimate, reference, interference=None) -> Decomposition:
    est, ref, *rest = _vectors(estimate, reference, *([interference] if interference is not None else []))
    ref_energy = ref @ ref
    if ref_energy == 0.0:
        raise DomainError("reference signal is all zeros")
    target = (est @ ref) / ref_energy * ref
    if not rest:
        return Decomposition(target, np.zeros_like(est), est - target)
    basis = np.stack([ref, rest[0]], axis=1)
    gram = basis.T @ basis
    if abs(np.linalg.det(gram)) <= 1e-12 * gram[0, 0] * gram[1, 1]:
        raise DomainError("reference and interference are linearly dependent")
    coeffs = np.linalg.solve(gram, basis.T @ est)
    in_span = basis @ coeffs
    return Decomposition(target, in_span - target, est - in_span)


def si_sdr(estimate, reference) -> float:
    d = decompose(estimate, reference)
    scale = float(np.sum(_vectors(estimate)[0] ** 2))
    return _ratio_db(float(d.target @ d.target), float(d.artifact @ d.artifact), scale)


def si_sir(estimate, reference, interference) -> float:
    d = decompose(estimate, reference, interference)
    scale = float(np.sum(_vectors(estimate)[0] ** 2))
    return _ratio_db(float(d.target @ d.target), float(d.interference @ d.interference), scale)


def si_sar(estimate, reference, interference) -> float:
    d = decompose(estimate, reference, interference)
    scale = float(np.sum(_vectors(estimate)[0] ** 2))
    wanted = d.target + d.interference
    return _ratio_db(float(wanted @ wanted), float(d.artifact @ d.artifact), scale)


@dataclass(frozen=True)
class MetricRow:
    utterance_id: str
    si_sdr: float
    si_sir: float
    si_sar: float


def evaluate(utterance_id: str, estimate, reference, interference) -> MetricRow:
    return MetricRow(
        utterance_id,
        si_sdr(estimate, reference),
        si_sir(estimate, reference, interference),
        si_sar(estimate, reference, interference),
    )


def _finite(v: float) -> tuple[float, int]:
    if math.isinf(v):
        return math.copysign(INF_SENTINEL_DB, v), 1
    return v, 0


def write_metric_csv(path: str | Path, rows: Sequence[MetricRow]) -> None:
    """Per-utterance rows plus a ``corpus_mean`` summary row.

    Infinite values become +-300 dB with the matching ``*_exact`` flag set;
    the corpus mean is taken over the capped values.
    """
    names = ("si_sdr", "si_sir", "si_sar")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["utterance_id", *names, *(f"{n}_exact" for n in names)])
        capped = []
        for row in rows:
            vals = [_finite(getattr(row, n)) for n in names]
            capped.append([v for v, _ in vals])
            w.writerow([row.utterance_id, *(repr(v) for v, _ in vals), *(f for _, f in vals)])
        if rows:
            means = np.mean(np.asarray(capped), axis=0)
            w.writerow(["corpus_mean", *(repr(float(m)) for m in means), 0, 0, 0])


def ie_report(x0, y, schedules: Iterable[tuple[str, Schedule]]) -> list[dict]:
    """L2 norm of the initial error per schedule, plus its ratio to the first row.

    Against a VE baseline with the same lambda, the VP row's ratio is alpha_1.
    """
    rows = []
    for name, s in schedules:
        rows.append({"schedule": name, "ie_norm": float(np.linalg.norm(initial_error(x0, y, s)))})
    base = rows[0]["ie_norm"] if rows else 0.0
    for row in rows:
        row["ratio_to_first"] = row["ie_norm"] / base if base > 0 else math.nan
    return rows
