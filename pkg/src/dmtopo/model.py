"""Lattice model, Bloch blocks, and PT / chiral classification.

Sites of a chain with ``L`` unit cells and ``n_orb`` orbitals per cell are
indexed ``i = n_orb * x + s``.  Coherent hoppings are stored in cell-relative
form ``(s, s2, d, amp)``: ``H[(x+d, s), (x, s2)] += amp`` for every cell ``x``
(periodic).  Jump operators are stored as explicit sparse coefficients
``(mu, i, D)``, so disordered dissipation can still be fed to the real-space
engine.

With the convention ``|k> = sum_x exp(ikx)|x>`` a translation-invariant matrix
with cell-relative entries ``f(d)`` has Bloch block ``O_k = sum_d f(d) exp(-ikd)``.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .algebra import PauliForm, is_exceptional, pauli_compose, pauli_decompose
from .errors import (
    AllImaginaryPartsZero,
    InvalidParameter,
    NoCommonAxis,
    NotPTForm,
    NotTranslationInvariant,
)

__all__ = [
    "DEFAULT_EP_TOL",
    "LatticeModel",
    "BlochBlock",
    "PTLabel",
    "GlobalPT",
    "PTClassification",
    "PTDecomposition",
    "ChiralFrame",
    "kgrid",
    "build_ssh_model",
    "bloch_blocks",
    "blocks_from_matrices",
    "stack_blocks",
    "real_space_damping",
    "pt_classify",
    "pt_decompose",
    "chiral_axis",
]

DEFAULT_EP_TOL = 1e-8


def kgrid(n_k: int) -> np.ndarray:
    """Uniform grid ``-pi + 2 pi j / n_k``, endpoint excluded."""
    return -np.pi + 2.0 * np.pi * np.arange(n_k) / n_k


@dataclass(frozen=True)
class LatticeModel:
    u: float
    w: float
    lam: float
    L: int
    hoppings: tuple = ()
    jump_coefficients: tuple = ()
    n_orb: int = 2

    def __post_init__(self):
        if self.lam < 0:
            raise InvalidParameter("loss rate must be non-negative")
        if self.L < 2:
            raise InvalidParameter("need at least two unit cells")

    @property
    def n_sites(self) -> int:
        return self.n_orb * self.L

    def hamiltonian(self) -> np.ndarray:
        H = np.zeros((self.n_sites, self.n_sites), dtype=complex)
        for s, s2, d, amp in self.hoppings:
            for x in range(self.L):
                H[self.n_orb * ((x + d) % self.L) + s, self.n_orb * x + s2] += amp
        return H

    def jump_matrix(self) -> np.ndarray:
        """Coefficient matrix ``D[mu, i]``."""
        n_jumps = 1 + max((mu for mu, _, _ in self.jump_coefficients), default=-1)
        D = np.zeros((n_jumps, self.n_sites), dtype=complex)
        for mu, i, c in self.jump_coefficients:
            D[mu, i] += c
        return D

    def loss_matrix(self) -> np.ndarray:
        """``M_ij = sum_mu conj(D_mu i) D_mu j``."""
        D = self.jump_matrix()
        return D.conj().T @ D


def build_ssh_model(u: float, w: float, lam: float, L: int) -> LatticeModel:
    """SSH chain with intra-cell hopping ``u``, symmetric ``w/2`` inter-cell
    hoppings, and loss ``sqrt(2 lam) c_{x,B}`` in every cell."""
    if not np.isfinite([u, w, lam]).all():
        raise InvalidParameter("parameters must be finite")
    if lam < 0:
        raise InvalidParameter("loss rate must be non-negative")
    if L < 2:
        raise InvalidParameter("need at least two unit cells")
    A, B = 0, 1
    hop = [
        (A, B, 0, u), (B, A, 0, u),
        (A, B, 1, 0.5 * w), (B, A, -1, 0.5 * w),
        (A, B, -1, 0.5 * w), (B, A, 1, 0.5 * w),
    ]
    jumps = [(x, 2 * x + B, np.sqrt(2.0 * lam)) for x in range(L)] if lam > 0 else []
    return LatticeModel(float(u), float(w), float(lam), int(L), tuple(hop), tuple(jumps))


@dataclass(frozen=True)
class BlochBlock:
    k: float
    H_k: np.ndarray
    M_k: np.ndarray
    X_tilde_k: np.ndarray = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "X_tilde_k", -1j * self.H_k - self.M_k)


def blocks_from_matrices(ks, H_ks, M_ks) -> list[BlochBlock]:
    return [BlochBlock(float(k), np.asarray(h, complex), np.asarray(m, complex)) for k, h, m in zip(ks, H_ks, M_ks)]


def stack_blocks(blocks: list[BlochBlock]) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(k, X_tilde)`` arrays of shapes ``(n_k,)`` and ``(n_k, 2, 2)``."""
    return np.array([b.k for b in blocks]), np.stack([b.X_tilde_k for b in blocks])


def _min_image(d: int, L: int) -> int:
    d %= L
    return d - L if d > L // 2 else d


def _jump_templates(model: LatticeModel) -> list[dict]:
    """Cell-relative jump templates ``{(d, s): D}``; raises if jumps are not
    identical up to a cell translation."""
    by_mu = defaultdict(dict)
    for mu, i, c in model.jump_coefficients:
        if c != 0:
            by_mu[mu][i] = by_mu[mu].get(i, 0) + c
    if not by_mu:
        return []
    # canonical anchor: the occupied cell giving the smallest relative key,
    # so translated copies of one jump share a key
    shapes = defaultdict(list)
    for mu, coeffs in by_mu.items():
        candidates = []
        for x0 in {i // model.n_orb for i in coeffs}:
            key = tuple(sorted(
                ((_min_image(i // model.n_orb - x0, model.L), i % model.n_orb), (complex(c).real, complex(c).imag))
                for i, c in coeffs.items()
            ))
            candidates.append((key, x0))
        key, x0 = min(candidates)
        shapes[key].append(x0)
    templates = []
    for key, cells in shapes.items():
        counts = np.bincount(cells, minlength=model.L)
        if counts.min() != counts.max():
            raise NotTranslationInvariant("jump operators are not repeated in every cell")
        templates += [{pos: complex(*c) for pos, c in key}] * int(counts[0])
    return templates


def bloch_blocks(model: LatticeModel, n_k: int, ks=None) -> list[BlochBlock]:
    """Bloch blocks on the uniform grid (or on explicit momenta ``ks``)."""
    if ks is None:
        if n_k < 8:
            raise InvalidParameter("n_k must be at least 8")
        ks = kgrid(n_k)
    ks = np.asarray(ks, dtype=float)
    no = model.n_orb
    H = np.zeros((len(ks), no, no), dtype=complex)
    for s, s2, d, amp in model.hoppings:
        H[:, s, s2] += amp * np.exp(-1j * ks * d)
    M = np.zeros_like(H)
    for tpl in _jump_templates(model):
        G = np.zeros((len(ks), no), dtype=complex)
        for (d, s), c in tpl.items():
            G[:, s] += c * np.exp(1j * ks * d)
        M += G.conj()[:, :, None] * G[:, None, :]
    return blocks_from_matrices(ks, H, M)


def real_space_damping(model: LatticeModel) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(X, X_tilde)`` with ``X = i H^T - M^T`` and ``X_tilde = conj(X)``."""
    X = 1j * model.hamiltonian().T - model.loss_matrix().T
    return X, X.conj()


class PTLabel(str, Enum):
    UNBROKEN = "Unbroken"
    BROKEN = "Broken"
    EXCEPTIONAL_POINT = "ExceptionalPoint"


class GlobalPT(str, Enum):
    FULLY_UNBROKEN = "FullyUnbroken"
    PARTIALLY_BROKEN = "PartiallyBroken"
    FULLY_BROKEN = "FullyBroken"


@dataclass(frozen=True)
class PTClassification:
    per_k: tuple
    global_label: GlobalPT
    eps_plus: np.ndarray
    eps_minus: np.ndarray


def pt_classify(blocks: list[BlochBlock], ep_tol: float = DEFAULT_EP_TOL) -> PTClassification:
    if ep_tol <= 0:
        raise ValueError("ep_tol must be positive")
    _, X = stack_blocks(blocks)
    p = pauli_decompose(X)
    disc = np.sum(p.n * p.n, axis=-1)
    mu = np.sqrt(disc)
    eps_p, eps_m = p.alpha + mu, p.alpha - mu
    ep = is_exceptional(p.n, ep_tol)
    labels = []
    for j in range(len(blocks)):
        if ep[j]:
            labels.append(PTLabel.EXCEPTIONAL_POINT)
        elif max(abs(eps_p[j].imag), abs(eps_m[j].imag)) < ep_tol:
            labels.append(PTLabel.UNBROKEN)
        else:
            labels.append(PTLabel.BROKEN)
    if all(lb is PTLabel.UNBROKEN for lb in labels):
        g = GlobalPT.FULLY_UNBROKEN
    elif all(lb is PTLabel.BROKEN for lb in labels):
        g = GlobalPT.FULLY_BROKEN
    else:
        g = GlobalPT.PARTIALLY_BROKEN
    return PTClassification(tuple(labels), g, eps_p, eps_m)


@dataclass(frozen=True)
class PTDecomposition:
    """``n_X = gamma n1 + i rho (sin(theta) n2 + cos(theta) n3)`` with real
    orthonormal ``n1, n2, n3``."""

    alpha_X: float
    gamma: float
    rho: float
    theta: float
    n1: np.ndarray
    n2: np.ndarray
    n3: np.ndarray

    def n_X(self) -> np.ndarray:
        return self.gamma * self.n1 + 1j * self.rho * (np.sin(self.theta) * self.n2 + np.cos(self.theta) * self.n3)

    def matrix(self) -> np.ndarray:
        return pauli_compose(PauliForm(self.alpha_X, self.n_X()))


def _canonical_sign(v: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Flip ``v`` so its first non-negligible component is positive."""
    for c in v:
        if abs(c) > tol:
            return v if c > 0 else -v
    return v


def _unit(v: np.ndarray) -> np.ndarray:
    """Normalise a nonzero vector without underflow in the squared norm."""
    v = v / np.max(np.abs(v))
    return v / np.linalg.norm(v)


def _perpendicular(v: np.ndarray) -> np.ndarray:
    """A unit vector perpendicular to unit ``v``, taken from the standard basis
    vector least aligned with it (x, y, z order on ties)."""
    e = np.eye(3)[int(np.argmin(np.abs(v) + 1e-12 * np.arange(3)))]
    p = e - np.dot(e, v) * v
    return p / np.linalg.norm(p)


def pt_decompose(block: BlochBlock, axis=None, tol: float = 1e-10) -> PTDecomposition:
    """Split the Pauli vector of ``X_tilde_k`` into real and imaginary parts.

    ``n3`` is ``axis`` when given (e.g. the chiral axis), else the direction of
    ``Im n_X`` with canonical sign; ``rho >= 0`` and ``theta`` is measured in the
    ``(n3, n2)`` plane.
    """
    p = pauli_decompose(block.X_tilde_k)
    scale = max(1.0, float(np.max(np.abs(block.X_tilde_k))))
    re, im = np.real(p.n), np.imag(p.n)
    if abs(np.imag(p.alpha)) > tol * scale:
        raise NotPTForm(f"alpha has imaginary part {np.imag(p.alpha):.3e}")
    if abs(np.dot(re, im)) > tol * scale**2:
        raise NotPTForm("real and imaginary parts of n_X are not orthogonal")
    gamma, rho = float(np.linalg.norm(re)), float(np.linalg.norm(im))

    if axis is not None:
        n3 = np.asarray(axis, dtype=float) / np.linalg.norm(axis)
    elif rho > tol * scale:
        n3 = _canonical_sign(_unit(im))
    elif gamma > 0:
        n3 = _perpendicular(_unit(re))
    elif rho > 0:
        n3 = _canonical_sign(_unit(im))
    else:
        n3 = np.array([1.0, 0.0, 0.0])

    n1 = _unit(re) if gamma > 0 else np.zeros(3)
    if gamma > tol * scale and abs(np.dot(n1, n3)) > 1e-8:
        raise NotPTForm("Re n_X is not perpendicular to the requested axis")
    n1 = n1 - np.dot(n1, n3) * n3
    if np.linalg.norm(n1) > 0.5:
        n1 /= np.linalg.norm(n1)
    else:
        # Re n_X negligible (or along the axis at rounding level)
        n1 = _perpendicular(n3)
    n2 = np.cross(n3, n1)
    theta = float(np.arctan2(np.dot(im, n2), np.dot(im, n3)))
    return PTDecomposition(float(np.real(p.alpha)), gamma, rho, theta, n1, n2, n3)


@dataclass(frozen=True)
class ChiralFrame:
    """Chiral axis ``n_gamma`` and right-handed in-plane basis ``(e1, e2)``."""

    n_gamma: np.ndarray
    e1: np.ndarray
    e2: np.ndarray

    @classmethod
    def from_axis(cls, axis) -> "ChiralFrame":
        n = np.asarray(axis, dtype=float)
        n = n / np.linalg.norm(n)
        e1 = _perpendicular(n)
        return cls(n, e1, np.cross(n, e1))


def chiral_axis(blocks: list[BlochBlock], tol: float = 1e-10) -> ChiralFrame:
    """Common direction of ``Im n_X`` over the Brillouin zone.

    The sign is fixed by the first block with a non-negligible imaginary part.
    """
    _, X = stack_blocks(blocks)
    im = np.imag(pauli_decompose(X).n)
    norms = np.linalg.norm(im, axis=-1)
    live = np.flatnonzero(norms > tol)
    if live.size == 0:
        raise AllImaginaryPartsZero("Im n_X vanishes at every k")
    ref = im[live[0]] / norms[live[0]]
    dirs = im[live] / norms[live, None]
    off = np.linalg.norm(np.cross(dirs, ref), axis=-1)
    if np.any(off > tol):
        j = live[int(np.argmax(off))]
        raise NoCommonAxis(f"Im n_X direction at k={blocks[j].k:.4f} deviates by {off.max():.3e}")
    return ChiralFrame.from_axis(ref)
