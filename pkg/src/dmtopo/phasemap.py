"""Parameter sweeps over ``(u, w)`` and the flat-band threshold ``u_c``."""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import __version__
from .dynamics import InitialStateSpec, initial_state
from .errors import AllImaginaryPartsZero, NoBracket
from .model import DEFAULT_EP_TOL, ChiralFrame, GlobalPT, bloch_blocks, build_ssh_model, chiral_axis, kgrid, pt_classify
from .topology import DEFAULT_GAP_TOL, TopologyTrace, transition_scan

__all__ = [
    "Behavior",
    "RegionLabel",
    "PointResult",
    "SweepResult",
    "scan_point",
    "classify_point",
    "classify_behavior",
    "sweep",
    "find_uc",
    "write_sweep_csv",
    "write_sweep_metadata",
]

CSV_COLUMNS = ("u", "w", "pt_part", "region", "n_transitions", "first_transition_time")


class Behavior(str, Enum):
    AT_LEAST_ONCE = "AtLeastOnce"
    REPEATED = "Repeated"
    NONE = "None"
    MIXED = "Mixed"


@dataclass(frozen=True)
class RegionLabel:
    region: str
    pt_part: GlobalPT
    transition_behavior: Behavior


@dataclass(frozen=True)
class PointResult:
    u: float
    w: float
    label: RegionLabel
    transition_times: tuple

    @property
    def n_transitions(self) -> int:
        return len(self.transition_times)


@dataclass
class SweepResult:
    u_values: np.ndarray
    w_values: np.ndarray
    points: list
    metadata: dict = field(default_factory=dict)

    def grid(self, attr: str = "region") -> np.ndarray:
        """Reshape a per-point attribute to ``(len(w_values), len(u_values))``."""
        vals = [getattr(p.label, attr) if hasattr(p.label, attr) else getattr(p, attr) for p in self.points]
        return np.array(vals, dtype=object).reshape(len(self.w_values), len(self.u_values))


def _frame_for(blocks) -> ChiralFrame:
    try:
        return chiral_axis(blocks)
    except AllImaginaryPartsZero:
        # no coherent hopping: n_C never leaves its initial plane (y-z)
        return ChiralFrame.from_axis([1.0, 0.0, 0.0])


def scan_point(u, w, lam, spec: InitialStateSpec, t_max=20.0, n_k=256, n_samples=2000,
               ep_tol=DEFAULT_EP_TOL, gap_tol=DEFAULT_GAP_TOL):
    """PT classification and winding trace for one SSH parameter set."""
    model = build_ssh_model(u, w, lam, 2)
    blocks = bloch_blocks(model, n_k)
    pt = pt_classify(blocks, ep_tol)
    C0 = initial_state(spec, kgrid(n_k))
    trace = transition_scan(blocks, C0, _frame_for(blocks), t_max, n_samples, gap_tol)
    return pt, trace


def classify_behavior(trace: TopologyTrace, t_max: float) -> Behavior:
    n = len(trace.transitions)
    if n == 0:
        return Behavior.NONE
    tail = trace.times >= 0.75 * t_max
    tail_nu = {nu for nu, keep in zip(trace.nu, tail) if keep and nu is not None}
    if len(tail_nu) <= 1 and all(tr.time < 0.75 * t_max for tr in trace.transitions):
        return Behavior.AT_LEAST_ONCE
    if n >= 3:
        return Behavior.REPEATED
    return Behavior.MIXED


def _region(pt: GlobalPT, behavior: Behavior) -> str:
    if pt is GlobalPT.FULLY_UNBROKEN:
        return "I"
    if pt is GlobalPT.PARTIALLY_BROKEN:
        return "II"
    return "IV" if behavior is Behavior.NONE else "III"


def classify_point(u, w, lam, spec: InitialStateSpec, t_max=20.0, n_k=256, n_samples=2000,
                   ep_tol=DEFAULT_EP_TOL, gap_tol=DEFAULT_GAP_TOL) -> RegionLabel:
    return _point(u, w, lam, spec, t_max, n_k, n_samples, ep_tol, gap_tol).label


def _point(u, w, lam, spec, t_max, n_k, n_samples, ep_tol, gap_tol) -> PointResult:
    pt, trace = scan_point(u, w, lam, spec, t_max, n_k, n_samples, ep_tol, gap_tol)
    behavior = classify_behavior(trace, t_max)
    label = RegionLabel(_region(pt.global_label, behavior), pt.global_label, behavior)
    return PointResult(float(u), float(w), label, tuple(float(t) for t in trace.transition_times))


def _point_star(args):
    return _point(*args)


def _axis(bounds, n):
    lo, hi = map(float, bounds)
    if lo == hi:
        return np.array([lo])
    if n < 2:
        raise ValueError("resolution must be at least 2 along a non-degenerate axis")
    return np.linspace(lo, hi, n)


def sweep(u_range, w_range, resolution, lam, spec: InitialStateSpec, t_max=20.0, n_k=256,
          n_samples=2000, ep_tol=DEFAULT_EP_TOL, gap_tol=DEFAULT_GAP_TOL, workers: int = 1) -> SweepResult:
    """Classify every point of a ``resolution = (n_u, n_w)`` grid.

    Points are ordered with ``u`` varying fastest.  With ``workers > 1`` the
    grid is mapped over a process pool; results keep grid order.  A range
    with equal endpoints yields a single value on that axis.
    """
    n_u, n_w = resolution
    u_vals, w_vals = _axis(u_range, n_u), _axis(w_range, n_w)
    jobs = [(float(u), float(w), lam, spec, t_max, n_k, n_samples, ep_tol, gap_tol) for w in w_vals for u in u_vals]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            points = list(pool.map(_point_star, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        points = [_point_star(j) for j in jobs]
    meta = {
        "lambda": lam, "a": spec.a, "b": spec.b, "t_max": t_max, "n_k": n_k,
        "n_samples": n_samples, "ep_tol": ep_tol, "gap_tol": gap_tol,
        "u_range": list(map(float, u_range)), "w_range": list(map(float, w_range)),
        "resolution": [int(n_u), int(n_w)],
    }
    return SweepResult(u_vals, w_vals, points, meta)


def find_uc(lam, spec: InitialStateSpec, w: float = 0.0, search=(1.0, 2.0), tol: float = 0.005,
            t_max: float = 20.0, n_k: int = 256, n_samples: int = 2000) -> float:
    """Bisect for the hopping ``u`` beyond which no dynamic transition occurs."""
    def has_transition(u):
        _, trace = scan_point(u, w, lam, spec, t_max, n_k, n_samples)
        return len(trace.transitions) > 0

    lo, hi = map(float, search)
    if not has_transition(lo) or has_transition(hi):
        raise NoBracket(f"[{lo}, {hi}] does not bracket the loss of dynamic transitions")
    while hi - lo >= tol:
        mid = 0.5 * (lo + hi)
        if has_transition(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _fmt(x) -> str:
    return format(float(x), ".17g")


def header_lines(payload: dict) -> list[str]:
    digest = hashlib.sha256(json.dumps(payload, sort_keys=True, default=str).encode()).hexdigest()[:16]
    return [f"# dmtopo {__version__} config-sha256:{digest}"]


def write_sweep_csv(result: SweepResult, path, header_payload: dict | None = None) -> None:
    lines = header_lines(header_payload if header_payload is not None else result.metadata)
    lines.append(",".join(CSV_COLUMNS))
    for p in result.points:
        first = _fmt(p.transition_times[0]) if p.transition_times else ""
        lines.append(",".join([_fmt(p.u), _fmt(p.w), p.label.pt_part.value, p.label.region,
                               str(p.n_transitions), first]))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_sweep_metadata(result: SweepResult, path, extra: dict | None = None) -> None:
    meta = dict(result.metadata, version=__version__, n_points=len(result.points))
    if extra:
        meta.update(extra)
    with open(path, "w", newline="\n") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
