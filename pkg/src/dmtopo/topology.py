"""Modular Hamiltonian, chiral checks, winding numbers, and transition scans.

The winding number is evaluated on the discrete k-grid by unwrapping the
in-plane angle of ``n_C`` between neighbouring momenta.  On a grid the
winding can only change when some neighbour increment passes through
``+/- pi`` (the chord between neighbouring directions crosses the origin) or
when the in-plane vector itself vanishes at a grid point.  The *planar gap*
reported alongside ``nu`` is the smaller of

* the minimum distance from the origin to the chords joining neighbouring
  unit in-plane directions, ``min_k cos(|dphi_k| / 2)``, and
* the minimum in-plane amplitude relative to the largest eigenvalue of
  ``C_k``, ``min_k |P n_C(k)| / (alpha_C + |n_C|)``.

Both vanish exactly at a discrete topology change and neither depends on the
overall (decaying) scale of the correlations.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .algebra import pauli_decompose, propagator
from .dynamics import CorrelationField, _Propagation
from .errors import NotHermitian, SpectrumOutOfRange
from .model import BlochBlock, ChiralFrame

__all__ = [
    "DEFAULT_GAP_TOL",
    "ModularField",
    "ChiralReport",
    "WindingResult",
    "TopologyTrace",
    "Transition",
    "modular_from_correlation",
    "correlation_from_modular",
    "check_chiral",
    "winding_number",
    "winding_of_vectors",
    "transition_scan",
    "nk_nc_antiparallel_check",
]

DEFAULT_GAP_TOL = 1e-6
_BISECT_REL = 1e-15
_CHUNK = 128


@dataclass(frozen=True)
class ModularField:
    kgrid: np.ndarray
    blocks: np.ndarray
    alpha_K: np.ndarray
    n_K: np.ndarray

    @classmethod
    def from_blocks(cls, kgrid, blocks) -> "ModularField":
        p = pauli_decompose(blocks)
        return cls(np.asarray(kgrid), np.asarray(blocks), np.real(p.alpha), np.real(p.n))


def modular_from_correlation(C: CorrelationField, margin: float = 1e-12) -> ModularField:
    """Invert ``C_k^T = 1 / (exp(K_k) + 1)`` sector by sector.

    ``K_k = log((1 - C_k^T) (C_k^T)^{-1})``, evaluated in the eigenbasis of
    ``C_k^T`` so that nearly pure sectors keep full relative accuracy.
    """
    blocks = np.asarray(C.blocks)
    herm = np.conj(np.swapaxes(blocks, -1, -2))
    scale = np.maximum(1.0, np.max(np.abs(blocks), axis=(-2, -1)))
    if np.any(np.max(np.abs(blocks - herm), axis=(-2, -1)) > 1e-10 * scale):
        raise NotHermitian("correlation blocks are not Hermitian")
    c, V = np.linalg.eigh(0.5 * (blocks + herm))
    if c.min() <= margin or c.max() >= 1.0 - margin:
        raise SpectrumOutOfRange(f"correlation spectrum [{c.min():.3e}, {c.max():.3e}] not inside (0, 1)")
    kappa = np.log1p(-c) - np.log(c)
    K = (V * kappa[..., None, :]) @ np.conj(np.swapaxes(V, -1, -2))
    return ModularField.from_blocks(C.kgrid, K)


def correlation_from_modular(K: ModularField, time: float = 0.0) -> CorrelationField:
    Kb = np.asarray(K.blocks)
    w, V = np.linalg.eigh(0.5 * (Kb + np.conj(np.swapaxes(Kb, -1, -2))))
    occ = expit(-w)  # 1 / (e^w + 1) without overflow
    C = (V * occ[..., None, :]) @ np.conj(np.swapaxes(V, -1, -2))
    return CorrelationField(np.asarray(K.kgrid), C, time)


@dataclass(frozen=True)
class ChiralReport:
    max_axis_component: float
    ok: bool


def check_chiral(C: CorrelationField, frame: ChiralFrame, tol: float = 1e-8) -> ChiralReport:
    """Largest relative component of ``n_C`` along the chiral axis."""
    _, n = C.pauli()
    norm = np.maximum(np.linalg.norm(n, axis=-1), np.finfo(float).tiny)
    dev = float(np.max(np.abs(n @ frame.n_gamma) / norm))
    return ChiralReport(dev, dev < tol)


@dataclass(frozen=True)
class WindingResult:
    """``nu`` is ``None`` when the planar gap is below ``gap_tol``."""

    nu: int | None
    min_amp: float
    raw: float

    @property
    def defined(self) -> bool:
        return self.nu is not None


def winding_of_vectors(vectors, frame: ChiralFrame, scale=None):
    """Raw winding ``sum dphi / 2 pi`` and planar gap of closed loops of
    3-vectors.

    ``vectors`` has shape ``(..., n_k, 3)`` in grid order; ``scale`` (shape
    ``(..., n_k)``) normalises the in-plane amplitudes and defaults to the
    largest amplitude on each loop.  Returns scalars for a single loop.
    """
    v = np.asarray(vectors, dtype=float)
    x, y = v @ frame.e1, v @ frame.e2
    phi = np.arctan2(y, x)
    d = np.diff(np.concatenate([phi, phi[..., :1]], axis=-1), axis=-1)
    # wrap into (-pi, pi]
    d = np.pi - np.mod(np.pi - d, 2.0 * np.pi)
    raw = np.sum(d, axis=-1) / (2.0 * np.pi)
    amp = np.hypot(x, y)
    if scale is None:
        scale = np.max(amp, axis=-1, keepdims=True)
    rel = amp / np.maximum(scale, np.finfo(float).tiny)
    gap = np.maximum(np.minimum(np.min(np.cos(0.5 * np.abs(d)), axis=-1), np.min(rel, axis=-1)), 0.0)
    if raw.ndim == 0:
        return float(raw), float(gap)
    return raw, gap


def _windings(blocks: np.ndarray, frame: ChiralFrame):
    """Raw winding of ``n_K`` and planar gap for stacked blocks ``(..., n_k, 2, 2)``."""
    p = pauli_decompose(blocks)
    alpha, n = np.real(p.alpha), np.real(p.n)
    scale = np.abs(alpha) + np.linalg.norm(n, axis=-1)
    raw_C, gap = winding_of_vectors(n, frame, scale)
    raw_K, _ = winding_of_vectors(-n, frame, scale)
    assert np.array_equal(np.round(raw_C), np.round(raw_K)), "winding must be invariant under n -> -n"
    return raw_K, gap


def winding_number(C: CorrelationField, frame: ChiralFrame, gap_tol: float = DEFAULT_GAP_TOL) -> WindingResult:
    """Winding of ``n_K`` (anti-parallel to ``n_C``) around the chiral axis."""
    raw, gap = _windings(C.blocks, frame)
    raw, gap = float(raw), float(gap)
    if gap < gap_tol:
        return WindingResult(None, gap, raw)
    return WindingResult(int(round(raw)), gap, raw)


@dataclass(frozen=True)
class Transition:
    time: float
    nu_before: int
    nu_after: int
    gap: float


@dataclass
class TopologyTrace:
    times: np.ndarray
    nu: list
    min_planar_amplitude: np.ndarray
    total_occupation: np.ndarray
    transitions: list = field(default_factory=list)

    @property
    def transition_times(self) -> np.ndarray:
        return np.array([tr.time for tr in self.transitions])


def _locate(prop, frame, gap_tol, lo, hi, nu_lo, t_max) -> Transition:
    """Bisect on the winding number between ``lo`` (``nu_lo``) and ``hi``."""
    nu_hi = None
    while hi - lo > _BISECT_REL * max(1.0, t_max):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        res = winding_number(prop(mid), frame, gap_tol)
        if not res.defined:
            return Transition(mid, nu_lo, winding_number(prop(hi), frame, gap_tol).nu, res.min_amp)
        if res.nu == nu_lo:
            lo = mid
        else:
            hi, nu_hi = mid, res.nu
    mid = 0.5 * (lo + hi)
    if nu_hi is None:
        nu_hi = winding_number(prop(hi), frame, gap_tol).nu
    res = winding_number(prop(mid), frame, gap_tol)
    return Transition(mid, nu_lo, nu_hi, res.min_amp)


def transition_scan(
    blocks: list[BlochBlock],
    C0: CorrelationField,
    frame: ChiralFrame,
    t_max: float = 20.0,
    n_samples: int = 2000,
    gap_tol: float = DEFAULT_GAP_TOL,
) -> TopologyTrace:
    """Sample ``nu(t)`` on ``linspace(0, t_max, n_samples)`` with the exact
    propagator and localise every change by bisection."""
    if t_max <= 0:
        raise ValueError("t_max must be positive")
    if n_samples < 16:
        raise ValueError("n_samples must be at least 16")
    prop = _Propagation(blocks, C0)
    times = np.linspace(0.0, t_max, n_samples)
    nus, gaps, occ = [], np.empty(n_samples), np.empty(n_samples)
    for start in range(0, n_samples, _CHUNK):
        ts = times[start:start + _CHUNK]
        U = propagator(prop.X[None] * ts[:, None, None, None], 1.0)
        Ct = U @ C0.blocks @ np.conj(np.swapaxes(U, -1, -2))
        raw, gap = _windings(Ct, frame)
        nus += [int(round(r)) if g >= gap_tol else None for r, g in zip(raw, gap)]
        gaps[start:start + len(ts)] = gap
        occ[start:start + len(ts)] = np.mean(np.real(np.trace(Ct, axis1=-2, axis2=-1)), axis=-1)
    transitions = []
    for i in range(n_samples - 1):
        a, b = nus[i], nus[i + 1]
        if a is None or b is None or a == b:
            continue
        transitions.append(_locate(prop, frame, gap_tol, times[i], times[i + 1], a, t_max))
    return TopologyTrace(times, nus, gaps, occ, transitions)


def _angle(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.arctan2(np.linalg.norm(np.cross(a, b), axis=-1), np.sum(a * b, axis=-1))


def nk_nc_antiparallel_check(C: CorrelationField, degenerate_tol: float = 1e-14) -> float:
    """Largest angle between ``n_K`` and ``-n_C`` over non-degenerate momenta."""
    K = modular_from_correlation(C)
    alpha, n_C = C.pauli()
    keep = np.linalg.norm(n_C, axis=-1) > degenerate_tol * np.maximum(np.abs(alpha), 1e-300)
    if not keep.any():
        return 0.0
    return float(np.max(_angle(K.n_K[keep], -n_C[keep])))
