"""Quantum two-mode Yang-Mills-Higgs Hamiltonian in a harmonic-oscillator basis.

    H = H0 + (g^2 / 2) V,   H0 = omega (n1 + n2 + 1),
    V = (a1 + a1^+)^2 (a2 + a2^+)^2 / (4 omega^2),   omega^2 = 2 g^2 v^2,

with hbar = 1. The potential is even in q1 and q2, so the matrix splits
into four blocks by the parity of (n1, n2). Each block keeps every state of
its parity with n1, n2 <= cutoff (independent per-mode truncation).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.linalg

from .errors import EigensolverError
from .ymh_classical import YmhParams

__all__ = [
    "Parity",
    "BLOCKS",
    "OscillatorBasis",
    "QuantumBlock",
    "ConvergedSpectrum",
    "ladder_factor",
    "h0_element",
    "v_element",
    "assemble_block",
    "diagonalize",
    "converge_spectrum",
]


class Parity(str, Enum):
    ee = "ee"
    oo = "oo"
    eo = "eo"
    oe = "oe"

    @property
    def offsets(self) -> tuple[int, int]:
        return ("eo".index(self.value[0]), "eo".index(self.value[1]))


BLOCKS = (Parity.ee, Parity.oo, Parity.eo, Parity.oe)


def default_omega(params: YmhParams) -> float:
    omega = math.sqrt(params.omega_sq)
    if omega <= 0:
        raise ValueError("oscillator frequency sqrt(2) g v must be positive (g > 0 and v > 0)")
    return omega


@dataclass(frozen=True)
class OscillatorBasis:
    omega: float
    parity_block: Parity
    cutoff: int
    n1: np.ndarray = field(repr=False)
    n2: np.ndarray = field(repr=False)

    @classmethod
    def build(cls, omega: float, block, cutoff: int) -> "OscillatorBasis":
        block = Parity(block)
        if cutoff < 2 or cutoff % 2:
            raise ValueError("cutoff must be an even integer >= 2")
        if not omega > 0:
            raise ValueError("omega must be positive")
        o1, o2 = block.offsets
        a = np.arange(o1, cutoff + 1, 2)
        b = np.arange(o2, cutoff + 1, 2)
        n1, n2 = np.meshgrid(a, b, indexing="ij")
        return cls(omega, block, cutoff, n1.ravel(), n2.ravel())

    @property
    def dimension(self) -> int:
        return self.n1.size

    @property
    def states(self) -> list[tuple[int, int]]:
        return list(zip(self.n1.tolist(), self.n2.tolist()))

    @property
    def _width2(self) -> int:
        return (self.cutoff - self.parity_block.offsets[1]) // 2 + 1

    def index(self, n1, n2):
        """Position of (n1, n2) in the lexicographic ordering; -1 if absent."""
        n1, n2 = np.asarray(n1), np.asarray(n2)
        o1, o2 = self.parity_block.offsets
        ok = (n1 >= 0) & (n2 >= 0) & (n1 <= self.cutoff) & (n2 <= self.cutoff)
        ok &= ((n1 - o1) % 2 == 0) & ((n2 - o2) % 2 == 0)
        idx = ((n1 - o1) // 2) * self._width2 + (n2 - o2) // 2
        return np.where(ok, idx, -1)


def ladder_factor(n_row, n_col):
    """<n_row| (a + a^+)^2 |n_col> for a single oscillator."""
    n_row = np.asarray(n_row, dtype=float)
    n = np.asarray(n_col, dtype=float)
    out = np.where(n_row == n, 2 * n + 1, 0.0)
    out = np.where(n_row == n - 2, np.sqrt(np.maximum(n * (n - 1), 0.0)), out)
    out = np.where(n_row == n + 2, np.sqrt((n + 1) * (n + 2)), out)
    return out


def h0_element(basis: OscillatorBasis, row, col) -> float:
    if tuple(row) != tuple(col):
        return 0.0
    return basis.omega * (row[0] + row[1] + 1)


def v_element(basis: OscillatorBasis, row, col) -> float:
    f1 = ladder_factor(row[0], col[0])
    f2 = ladder_factor(row[1], col[1])
    return float(f1 * f2 / (4.0 * basis.omega**2))


@dataclass(frozen=True)
class QuantumBlock:
    basis: OscillatorBasis
    g: float
    matrix: np.ndarray = field(repr=False)

    @property
    def block(self) -> Parity:
        return self.basis.parity_block


def assemble_block(params: YmhParams, block, cutoff: int, omega: float | None = None) -> QuantumBlock:
    """Dense H0 + (g^2/2) V over one parity block.

    Every entry is evaluated from its own formula; the ladder factors are
    symmetric in (n', n), so the matrix is symmetric by construction.
    ``omega`` overrides the basis frequency (default sqrt(2) g v).
    """
    if omega is None:
        omega = default_omega(params)
    basis = OscillatorBasis.build(omega, block, cutoff)
    n1, n2 = basis.n1, basis.n2
    dim = basis.dimension
    mat = np.zeros((dim, dim))
    mat[np.arange(dim), np.arange(dim)] = omega * (n1 + n2 + 1)
    coupling = 0.5 * params.g**2 / (4.0 * omega**2)
    if coupling:
        cols = np.arange(dim)
        for d1 in (-2, 0, 2):
            for d2 in (-2, 0, 2):
                rows = basis.index(n1 + d1, n2 + d2)
                ok = rows >= 0
                vals = ladder_factor(n1 + d1, n1) * ladder_factor(n2 + d2, n2)
                mat[rows[ok], cols[ok]] += coupling * vals[ok]
    return QuantumBlock(basis, params.g, mat)


def diagonalize(block: QuantumBlock) -> np.ndarray:
    """Full ascending spectrum of a block (LAPACK symmetric solver)."""
    mat = block.matrix
    if not np.all(np.isfinite(mat)):
        raise EigensolverError(f"block {block.block.value}: non-finite matrix entries")
    try:
        return scipy.linalg.eigh(mat, eigvals_only=True, check_finite=False)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise EigensolverError(f"block {block.block.value}: {exc}") from exc


@dataclass(frozen=True)
class ConvergedSpectrum:
    params: YmhParams
    levels: dict  # Parity -> ascending array of the first L levels
    final_cutoffs: dict  # Parity -> cutoff
    dimensions: dict  # Parity -> block dimension at the final cutoff
    L: int
    converged: bool
    changes: dict = field(default_factory=dict)  # Parity -> last max relative change

    def block_levels(self, block) -> np.ndarray:
        return self.levels[Parity(block)]


def _block_dim(block: Parity, cutoff: int) -> int:
    o1, o2 = block.offsets
    return ((cutoff - o1) // 2 + 1) * ((cutoff - o2) // 2 + 1)


def converge_spectrum(
    params: YmhParams,
    L: int = 100,
    rel_tol: float = 1e-8,
    *,
    start: int = 30,
    increment: int = 16,
    max_dim: int = 5000,
    omega: float | None = None,
    blocks=BLOCKS,
) -> ConvergedSpectrum:
    """Raise each block's cutoff until its first L levels stop moving.

    Starting at ``start`` and stepping by ``increment``, a block is done
    when no retained level changes by ``rel_tol`` (relative) between two
    successive cutoffs. Blocks that would exceed ``max_dim`` stop there
    and mark the whole result as not converged.
    """
    if L < 1:
        raise ValueError("L must be >= 1")
    levels, cutoffs, dims, changes = {}, {}, {}, {}
    all_ok = True
    for block in map(Parity, blocks):
        cutoff = start
        prev = None
        ok = False
        change = math.inf
        while _block_dim(block, cutoff) <= max_dim:
            ev = diagonalize(assemble_block(params, block, cutoff, omega))
            if ev.size >= L:
                cur = ev[:L]
                if prev is not None:
                    scale = np.maximum(np.abs(cur), np.finfo(float).tiny)
                    change = float(np.max(np.abs(cur - prev) / scale))
                    if change < rel_tol:
                        ok = True
                        break
                prev = cur
            cutoff += increment
        else:
            cutoff -= increment
        if prev is None:
            raise EigensolverError(f"block {block.value}: fewer than L={L} states below max_dim")
        levels[block] = cur if ok else prev
        cutoffs[block] = cutoff
        dims[block] = _block_dim(block, cutoff)
        changes[block] = change
        all_ok &= ok
    return ConvergedSpectrum(params, levels, cutoffs, dims, L, all_ok, changes)
