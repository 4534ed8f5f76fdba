"""Finite-dimensional C*-algebras: direct sums of matrix blocks.

Elements are lists of square complex blocks; linear functionals are stored by
block densities, phi(x) = sum_k Tr(rho_k x_k), which covers every bounded
functional in finite dimensions and turns positivity and normalization into
eigenvalue checks.  The GNS construction returns the coordinate map onto an
orthonormal basis of the quotient, built by Gram-Schmidt over the matrix-unit
basis in index order so that bases line up canonically across runs.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .linalg import (
    DEFAULT_TOL,
    Superoperator,
    Tolerance,
    as_matrix,
    blocks_dim,
    block_offsets,
    join_vec,
    max_abs,
    split_vec,
    tensor_blocks,
    vec_tensor,
)


class DimensionCapError(RuntimeError):
    """Raised when a construction would exceed the vectorized-dimension cap."""


DEFAULT_DIM_CAP = 4096


@dataclass(frozen=True)
class FiniteCStarAlgebra:
    """A direct sum of full matrix algebras, identified by its block sizes."""

    blocks: tuple[int, ...]

    def __init__(self, blocks: Iterable[int]):
        bl = tuple(int(n) for n in blocks)
        if not bl or any(n < 1 for n in bl):
            raise ValueError(f"block sizes must be positive, got {bl}")
        object.__setattr__(self, "blocks", bl)

    @property
    def dim(self) -> int:
        """Vectorized dimension, sum of squared block sizes."""
        return blocks_dim(self.blocks)

    def zero(self) -> "AlgebraElement":
        return AlgebraElement(self, [np.zeros((n, n), dtype=complex) for n in self.blocks])

    def one(self) -> "AlgebraElement":
        return AlgebraElement(self, [np.eye(n, dtype=complex) for n in self.blocks])

    def matrix_unit(self, block: int, i: int, j: int) -> "AlgebraElement":
        x = self.zero()
        x.block_matrices[block][i, j] = 1.0
        return x

    def from_vec(self, v: np.ndarray) -> "AlgebraElement":
        return AlgebraElement(self, split_vec(self.blocks, v))

    def random_element(self, rng: np.random.Generator, scale: float = 1.0) -> "AlgebraElement":
        mats = [
            scale * (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
            for n in self.blocks
        ]
        return AlgebraElement(self, mats)


@dataclass
class AlgebraElement:
    algebra: FiniteCStarAlgebra
    block_matrices: list[np.ndarray]

    def __post_init__(self):
        mats = [as_matrix(m).astype(complex) for m in self.block_matrices]
        if len(mats) != len(self.algebra.blocks):
            raise ValueError("one matrix per block required")
        for m, n in zip(mats, self.algebra.blocks):
            if m.shape != (n, n):
                raise ValueError(f"block of shape {m.shape} does not fit size {n}")
        self.block_matrices = mats

    def vec(self) -> np.ndarray:
        return join_vec(self.block_matrices)

    def star(self) -> "AlgebraElement":
        return AlgebraElement(self.algebra, [m.conj().T for m in self.block_matrices])

    def norm(self) -> float:
        """Operator norm: the largest singular value over the blocks."""
        return max(float(np.linalg.norm(m, 2)) for m in self.block_matrices)

    def __add__(self, other: "AlgebraElement") -> "AlgebraElement":
        self._same_algebra(other)
        return AlgebraElement(
            self.algebra, [a + b for a, b in zip(self.block_matrices, other.block_matrices)]
        )

    def __sub__(self, other: "AlgebraElement") -> "AlgebraElement":
        self._same_algebra(other)
        return AlgebraElement(
            self.algebra, [a - b for a, b in zip(self.block_matrices, other.block_matrices)]
        )

    def __mul__(self, other):
        if isinstance(other, AlgebraElement):
            self._same_algebra(other)
            return AlgebraElement(
                self.algebra, [a @ b for a, b in zip(self.block_matrices, other.block_matrices)]
            )
        return AlgebraElement(self.algebra, [other * m for m in self.block_matrices])

    __rmul__ = __mul__

    def _same_algebra(self, other: "AlgebraElement"):
        if self.algebra.blocks != other.algebra.blocks:
            raise ValueError(f"algebra mismatch: {self.algebra.blocks} vs {other.algebra.blocks}")

    def distance(self, other: "AlgebraElement") -> float:
        self._same_algebra(other)
        return max_abs(self.vec() - other.vec())

    def is_projection(self, tol: Tolerance = DEFAULT_TOL) -> bool:
        return (
            max_abs(self.vec() - self.star().vec()) <= tol.eps
            and (self * self).distance(self) <= tol.eps
        )

    def is_zero(self, tol: Tolerance = DEFAULT_TOL) -> bool:
        return max_abs(self.vec()) <= tol.eps


def tensor_algebra(a: FiniteCStarAlgebra, b: FiniteCStarAlgebra) -> FiniteCStarAlgebra:
    return FiniteCStarAlgebra(tensor_blocks(a.blocks, b.blocks))


def tensor_element(x: AlgebraElement, y: AlgebraElement) -> AlgebraElement:
    t = tensor_algebra(x.algebra, y.algebra)
    return t.from_vec(vec_tensor(x.algebra.blocks, y.algebra.blocks, x.vec(), y.vec()))


@dataclass
class LinearFunctional:
    """phi(x) = sum_k Tr(rho_k x_k) for one density matrix per block."""

    algebra: FiniteCStarAlgebra
    densities: list[np.ndarray]

    def __post_init__(self):
        rhos = [as_matrix(r).astype(complex) for r in self.densities]
        for r, n in zip(rhos, self.algebra.blocks):
            if r.shape != (n, n):
                raise ValueError(f"density of shape {r.shape} does not fit block size {n}")
        self.densities = rhos

    def __call__(self, x: AlgebraElement) -> complex:
        return complex(
            sum(np.trace(r @ m) for r, m in zip(self.densities, x.block_matrices))
        )

    def row(self) -> np.ndarray:
        """Row vector with phi(x) = row @ vec(x)."""
        return np.concatenate([r.T.reshape(-1) for r in self.densities])

    def state_residuals(self) -> tuple[float, float]:
        """(negativity, normalization error): both ~0 iff this is a state."""
        neg = 0.0
        total = 0.0
        for r in self.densities:
            herm = max_abs(r - r.conj().T)
            eigs = np.linalg.eigvalsh((r + r.conj().T) / 2)
            neg = max(neg, herm, float(max(0.0, -eigs.min(initial=0.0))))
            total += float(np.trace(r).real)
        return neg, abs(total - 1.0)

    def is_state(self, tol: Tolerance = DEFAULT_TOL) -> bool:
        neg, norm_err = self.state_residuals()
        return neg <= tol.eps and norm_err <= tol.eps


def functional_tensor(f: LinearFunctional, g: LinearFunctional) -> LinearFunctional:
    """(f (x) g)(x (x) y) = f(x) g(y); densities tensor blockwise."""
    t = tensor_algebra(f.algebra, g.algebra)
    densities = [np.kron(rf, rg) for rf in f.densities for rg in g.densities]
    return LinearFunctional(t, densities)


def trace_functional(algebra: FiniteCStarAlgebra, normalized: bool = False) -> LinearFunctional:
    total = sum(algebra.blocks)
    scale = 1.0 / total if normalized else 1.0
    return LinearFunctional(algebra, [scale * np.eye(n) for n in algebra.blocks])


def vector_state(algebra: FiniteCStarAlgebra, block: int = 0, index: int = 0) -> LinearFunctional:
    """The state x -> <e_index, x e_index> supported on one block."""
    densities = [np.zeros((n, n), dtype=complex) for n in algebra.blocks]
    densities[block][index, index] = 1.0
    return LinearFunctional(algebra, densities)


# -- GNS construction ---------------------------------------------------------

@dataclass(frozen=True)
class GnsData:
    """Coordinates of the GNS space of (algebra, phi).

    ``eta`` (dim x vec_dim) sends vec(x) to the coordinates of the coset of x
    in an orthonormal basis, so that <eta(x), eta(y)> = phi(y* x).  ``lift``
    (vec_dim x dim) sends coordinates back to the vec of a representative:
    eta @ lift = identity.
    """

    dim: int
    eta: np.ndarray
    lift: np.ndarray
    gram_rank_tol: Tolerance

    def coords(self, x: AlgebraElement) -> np.ndarray:
        return self.eta @ x.vec()


def gram_matrix(algebra: FiniteCStarAlgebra, phi: LinearFunctional) -> np.ndarray:
    """G[b, a] = phi(e_b* e_a) over the matrix-unit basis; Hermitian PSD for states.

    Within block k the closed form is kron(I_n, rho_k^T); cross-block products
    vanish, so G is block diagonal.
    """
    dim = algebra.dim
    g = np.zeros((dim, dim), dtype=complex)
    for n, rho, off in zip(algebra.blocks, phi.densities, block_offsets(algebra.blocks)):
        g[off:off + n * n, off:off + n * n] = np.kron(np.eye(n), rho.T)
    return g


def gns(algebra: FiniteCStarAlgebra, phi: LinearFunctional, tol: Tolerance = DEFAULT_TOL) -> GnsData:
    """GNS coordinates for a state phi.

    The quotient dimension is the numerical rank of the Gram matrix
    (eigenvalues <= eps * lambda_max count as kernel).  The orthonormal basis
    is produced by modified Gram-Schmidt over the matrix-unit basis in index
    order, which keeps the basis canonical under structural degeneracy.
    """
    neg, norm_err = phi.state_residuals()
    if neg > tol.eps or norm_err > tol.eps:
        raise ValueError(
            f"not a state: positivity residual {neg:.3g}, trace error {norm_err:.3g}"
        )
    g = gram_matrix(algebra, phi)
    evals = np.linalg.eigvalsh(g)
    lam_max = float(evals[-1]) if evals.size else 0.0
    threshold = tol.eps * max(lam_max, 0.0)
    rank = int(np.sum(evals > threshold))

    coeffs = []  # rows w_i: the i-th ONB vector is sum_a w_i[a] * coset(e_a)
    dim = algebra.dim
    for a in range(dim):
        u = np.zeros(dim, dtype=complex)
        u[a] = 1.0
        for _ in range(2):  # re-orthogonalize once for stability
            for w in coeffs:
                u = u - w * (w.conj() @ g @ u)
        nrm2 = float((u.conj() @ g @ u).real)
        if nrm2 > threshold:
            coeffs.append(u / np.sqrt(nrm2))
        if len(coeffs) == rank:
            break
    if len(coeffs) != rank:
        raise ArithmeticError(
            f"Gram-Schmidt found {len(coeffs)} vectors but Gram rank is {rank}"
        )
    w = np.array(coeffs).reshape(rank, dim)
    return GnsData(dim=rank, eta=w.conj() @ g, lift=w.T, gram_rank_tol=tol)


def is_idempotent_wrt(
    phi: LinearFunctional, delta: Superoperator, tol: Tolerance = DEFAULT_TOL
) -> bool:
    """(phi (x) phi) o delta == phi on the matrix-unit basis, within eps."""
    if delta.dom != phi.algebra.blocks:
        raise ValueError(f"map domain {delta.dom} does not match algebra {phi.algebra.blocks}")
    if delta.cod != tensor_blocks(phi.algebra.blocks, phi.algebra.blocks):
        raise ValueError("map must land in the tensor square of the algebra")
    pair_row = functional_tensor(phi, phi).row()
    return max_abs(pair_row @ delta.matrix - phi.row()) <= tol.eps
