"""Co-unit dilations, idempotent states on the germ calculus, GNS systems.

A co-multiplicative family of states evaluates consistently on germs: the
value of (I, x) is the product state of the cells applied to x, and pushing
the representative along a connecting map does not change it.  That single
functional is the idempotent state of the system algebra; its marginals
recover the family.

Applying the GNS construction per pair produces a Hilbert-space system whose
isometries mirror the comultiplication; partition-level isometries between
the GNS spaces then carry the dilation of that Hilbert system, and its
agreement with the GNS system of the dilated states reduces to Gram-matrix
preservation along refinements, which is checked here.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Optional, Sequence

import numpy as np

from .algebra import (
    FiniteCStarAlgebra,
    GnsData,
    LinearFunctional,
    functional_tensor,
    gns,
    gram_matrix,
    tensor_algebra,
)
from .linalg import (
    DEFAULT_TOL,
    Tolerance,
    is_isometry,
    max_abs,
    tensor_perm,
)
from .partition_calculus import (
    Germ,
    SpaceTag,
    delta_cross,
    delta_refinement,
    one_param_comultiplication,
    partition_algebra,
    state_on_partition,
    unit_on_partition,
)
from .report import Report
from .systems import (
    FunctionalFamily,
    HilbertSystem,
    TensorialSystem,
    UnitFamily,
    check_comultiplicative,
    enumerate_all_partitions,
)
from .timegrid import Partition, common_refinement

Pair = tuple[Fraction, Fraction]
Triple = tuple[Fraction, Fraction, Fraction]


def counit_dilation_eval(sys: TensorialSystem, fam: FunctionalFamily, g: Germ,
                         tol: Tolerance = DEFAULT_TOL) -> complex:
    """Evaluate the dilated functional on an interval germ: (I, x) -> phi_I(x).

    Well-definedness across representatives is exactly the invariance of the
    product states under the connecting maps, which holds when the family is
    co-multiplicative; the family is validated once per call site.
    """
    comult = check_comultiplicative(sys, fam, tol)
    if not comult.passed:
        raise ValueError(
            f"family is not co-multiplicative (max residual {comult.max_residual:.3g})"
        )
    return state_on_partition(fam, g.partition)(g.element)


@dataclass(frozen=True)
class GermFunctional:
    """The state of the germ calculus induced by a co-unit with phi(p) = 1."""

    family: FunctionalFamily

    def __call__(self, g: Germ) -> complex:
        return state_on_partition(self.family, g.partition)(g.element)


def build_idempotent_state(sys: TensorialSystem, unit: UnitFamily, fam: FunctionalFamily,
                           tol: Tolerance = DEFAULT_TOL,
                           max_interior: int = 2) -> GermFunctional:
    """The unique germ-calculus state whose marginals are the given co-unit.

    Requires the family to be a co-unit with phi(s,t)(p(s,t)) = 1 on every
    grid pair (otherwise padded representatives change the value).  Verifies
    well-definedness along a chain sample and idempotency through the
    one-parameter splitting on generator germs before returning.
    """
    for (s, t), phi in fam.functionals.items():
        if not phi.is_state(tol):
            neg, nrm = phi.state_residuals()
            raise ValueError(
                f"not a state at ({s},{t}): positivity residual {neg:.3g}, "
                f"trace error {nrm:.3g}"
            )
        val = phi(unit.p(s, t))
        if abs(val - 1.0) > tol.eps:
            raise ValueError(
                f"normalization fails at ({s},{t}): phi(p) = {val:.6g}, expected 1"
            )
    comult = check_comultiplicative(sys, fam, tol)
    if not comult.passed:
        raise ValueError(
            f"family is not co-multiplicative (max residual {comult.max_residual:.3g})"
        )
    germ_phi = GermFunctional(fam)
    rep = idempotent_state_report(sys, unit, germ_phi, tol, max_interior)
    if not rep.passed:
        failing = rep.failures()[0]
        raise ValueError(f"germ functional checks failed: {failing.check} {failing.params}")
    return germ_phi


def idempotent_state_report(sys: TensorialSystem, unit: UnitFamily, phi: GermFunctional,
                            tol: Tolerance = DEFAULT_TOL, max_interior: int = 2) -> Report:
    """Well-definedness under padded refinement and idempotency under splitting."""
    report = Report()
    partitions = enumerate_all_partitions(sys.grid, max_points=max_interior + 2)
    for coarse in partitions:
        for fine in partitions:
            if coarse == fine or not set(coarse.points) <= set(fine.points):
                continue
            mapper = delta_cross(sys, unit, coarse, fine)
            row_fine = state_on_partition(phi.family, fine).row()
            row_coarse = state_on_partition(phi.family, coarse).row()
            report.residual_record(
                "germ_state_well_defined",
                "phi_J o (padded connecting map I -> J) = phi_I",
                {"I": coarse, "J": fine},
                max_abs(row_fine @ mapper.matrix - row_coarse), tol.eps,
            )
    interior = sys.grid.points[1:-1]
    for s in interior:
        for coarse in partitions:
            germ = unit_germ_of(sys, unit, coarse)
            split = one_param_comultiplication(sys, unit, germ, s)
            lhs = state_on_partition(phi.family, split.joint_partition)(split.element)
            rhs = phi(germ)
            report.residual_record(
                "germ_state_idempotent_on_units",
                "(phi (x) phi) o D_s = phi",
                {"I": coarse, "s": s}, abs(lhs - rhs), tol.eps,
            )
    return report


def unit_germ_of(sys: TensorialSystem, unit: UnitFamily, partition: Partition) -> Germ:
    return Germ(partition, unit_on_partition(unit, partition), SpaceTag.CROSS)


def idempotency_residual(sys: TensorialSystem, unit: UnitFamily, phi: GermFunctional,
                         g: Germ, s: Fraction) -> float:
    """| (phi (x) phi)(D_s g) - phi(g) | via the joint split representative."""
    split = one_param_comultiplication(sys, unit, g, s)
    lhs = state_on_partition(phi.family, split.joint_partition)(split.element)
    return abs(lhs - phi(g))


def marginal_states(phi: GermFunctional, sys: TensorialSystem) -> FunctionalFamily:
    """Evaluate on trivial-partition germs: the marginals are the original co-unit."""
    out = {}
    for (s, t) in sys.grid.pairs():
        alg = sys.alg(s, t)
        row = np.array([
            phi(Germ(Partition([s, t]), alg.from_vec(_unit_vec(alg.dim, a)), SpaceTag.CROSS))
            for a in range(alg.dim)
        ])
        out[(s, t)] = _functional_from_row(alg, row)
    return FunctionalFamily(out)


def _unit_vec(dim: int, a: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[a] = 1.0
    return v


def _functional_from_row(alg: FiniteCStarAlgebra, row: np.ndarray) -> LinearFunctional:
    densities = [m.T.copy() for m in alg.from_vec(row).block_matrices]
    return LinearFunctional(alg, densities)


# -- GNS systems ---------------------------------------------------------------

@dataclass
class GnsSystem:
    """Per-pair GNS data and per-triple isometries forming a Hilbert system."""

    sys: TensorialSystem
    fam: FunctionalFamily
    gns_data: Mapping[Pair, GnsData]
    isometries: Mapping[Triple, np.ndarray]

    def hilbert_system(self) -> HilbertSystem:
        dims = {pair: data.dim for pair, data in self.gns_data.items()}
        return HilbertSystem(self.sys.grid, dims, dict(self.isometries))


def _tensor_gns_unitary(a: FiniteCStarAlgebra, b: FiniteCStarAlgebra,
                        ga: GnsData, gb: GnsData, gab: GnsData) -> np.ndarray:
    """The unitary H_a (x) H_b -> H_ab sending eta(x) (x) eta(y) to eta(x (x) y)."""
    perm = tensor_perm(a.blocks, b.blocks)
    scatter = np.zeros((a.dim * b.dim, a.dim * b.dim), dtype=complex)
    scatter[perm, np.arange(perm.size)] = 1.0
    lifted = np.kron(ga.lift, gb.lift)  # coords -> representative vec (x) vec
    return gab.eta @ scatter @ lifted


def gns_isometry(sys: TensorialSystem, fam: FunctionalFamily, r, s, t,
                 gns_cache: dict, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """V[r,s,t]: H(r,t) -> H(r,s) (x) H(s,t) induced by the comultiplication."""
    def data(u, v):
        key = (u, v)
        if key not in gns_cache:
            gns_cache[key] = gns(sys.alg(u, v), fam.phi(u, v), tol)
        return gns_cache[key]

    a, b = sys.alg(r, s), sys.alg(s, t)
    prod_alg = tensor_algebra(a, b)
    prod_state = functional_tensor(fam.phi(r, s), fam.phi(s, t))
    gab = gns(prod_alg, prod_state, tol)
    w = _tensor_gns_unitary(a, b, data(r, s), data(s, t), gab)
    v = w.conj().T @ gab.eta @ sys.delta(r, s, t).matrix @ data(r, t).lift
    return v


def gns_system(sys: TensorialSystem, fam: FunctionalFamily,
               tol: Tolerance = DEFAULT_TOL) -> GnsSystem:
    """Assemble the per-pair GNS spaces into a Hilbert-space system.

    Fails if some V is not an isometry within tolerance, which signals a
    family that is not co-multiplicative.
    """
    if not fam.is_counit(tol):
        raise ValueError("the functional family must consist of states")
    cache: dict = {
        (s, t): gns(sys.alg(s, t), fam.phi(s, t), tol) for (s, t) in sys.grid.pairs()
    }
    isometries = {}
    for (r, s, t) in sys.grid.triples():
        v = gns_isometry(sys, fam, r, s, t, cache, tol)
        if not is_isometry(v, Tolerance(max(tol.eps, 1e-7))):
            res = max_abs(v.conj().T @ v - np.eye(v.shape[1]))
            raise ValueError(
                f"V({r},{s},{t}) fails isometry (residual {res:.3g}); "
                "the family is not co-multiplicative"
            )
        isometries[(r, s, t)] = v
    gns_data = {pair: cache[pair] for pair in sys.grid.pairs()}
    return GnsSystem(sys=sys, fam=fam, gns_data=gns_data, isometries=isometries)


def gns_unit_vector_residual(sys: TensorialSystem, gsys: GnsSystem,
                             unit: UnitFamily) -> float:
    """How far the GNS images of a normalized unit are from a unit of the Hilbert system.

    For phi(p) = 1 the cosets xi(s,t) = eta(p(s,t)) are unit vectors with
    V[r,s,t] xi(r,t) = xi(r,s) (x) xi(s,t); the residual covers both facts.
    """
    worst = 0.0
    coords = {}
    for (s, t), data in gsys.gns_data.items():
        xi = data.eta @ unit.p(s, t).vec()
        coords[(s, t)] = xi
        worst = max(worst, abs(float(np.linalg.norm(xi)) - 1.0))
    for (r, s, t), v in gsys.isometries.items():
        worst = max(worst, max_abs(
            v @ coords[(r, t)] - np.kron(coords[(r, s)], coords[(s, t)])))
    return worst


# -- partition isometries of a Hilbert system -----------------------------------

def hs_interval_isometry(hs: HilbertSystem, partition: Partition) -> np.ndarray:
    """H(s,t) -> H_I, splitting off the last cell recursively (mirror of the algebra map)."""
    hs.grid.require(*partition.points)
    pts = partition.points
    if len(pts) == 2:
        return np.eye(hs.dim(*pts), dtype=complex)
    if len(pts) == 3:
        return hs.u(*pts)
    head = hs_interval_isometry(hs, Partition(pts[:-1]))
    return np.kron(head, np.eye(hs.dim(pts[-2], pts[-1]))) @ hs.u(pts[0], pts[-2], pts[-1])


def bm_partition_isometries(hs: HilbertSystem, coarse: Partition, fine: Partition) -> np.ndarray:
    """The connecting isometry H_I -> H_J: cellwise tensor of interval isometries."""
    from .timegrid import inner_decompose

    blocks = inner_decompose(coarse, fine)
    mats = [hs_interval_isometry(hs, b) for b in blocks]
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    return out


@dataclass(frozen=True)
class HilbertGerm:
    """A finite-level representative (partition, vector) of a dilated Hilbert space."""

    partition: Partition
    vector: np.ndarray


def hs_germ_push(hs: HilbertSystem, g: HilbertGerm, target: Partition) -> np.ndarray:
    return bm_partition_isometries(hs, g.partition, target) @ g.vector


def hs_germ_distance(hs: HilbertSystem, g1: HilbertGerm, g2: HilbertGerm) -> float:
    target = common_refinement(g1.partition, g2.partition)
    return max_abs(hs_germ_push(hs, g1, target) - hs_germ_push(hs, g2, target))


def hs_germ_split(hs: HilbertSystem, g: HilbertGerm, s: Fraction
                  ) -> tuple[Partition, Partition, np.ndarray]:
    """Split a Hilbert germ at an interior grid point: pure re-indexing.

    Returns (left partition, right partition, joint vector); the joint space
    H_L (x) H_R has the same coordinates as H_{L u R}.
    """
    lo, hi = g.partition.endpoints
    if not (lo < s < hi):
        raise ValueError(f"cut {s} is not interior to {g.partition}")
    target = common_refinement(g.partition, Partition([lo, s, hi]))
    vec = hs_germ_push(hs, g, target)
    return target.restrict(lo, s), target.restrict(s, hi), vec


# -- dilation agreement (Gram preservation) --------------------------------------

def gram_on_partition(sys: TensorialSystem, fam: FunctionalFamily,
                      partition: Partition) -> np.ndarray:
    alg = partition_algebra(sys, partition)
    return gram_matrix(alg, state_on_partition(fam, partition))


def gram_preservation_residual(sys: TensorialSystem, fam: FunctionalFamily,
                               coarse: Partition, fine: Partition,
                               unit: Optional[UnitFamily] = None,
                               perturbation: float = 0.0) -> float:
    """Residual of G_J(D x, D y) = G_I(x, y) for the connecting map D: A_I -> A_J.

    This is the well-definedness and isometry of the maps between the GNS
    spaces of the product states, i.e. the finite-level content of the
    equivalence between the two Hilbert-space dilations.  A nonzero
    ``perturbation`` is added to the map's first entry as a negative control.
    """
    if coarse.endpoints == fine.endpoints:
        mapper = delta_refinement(sys, coarse, fine)
    else:
        mapper = delta_cross(sys, unit, coarse, fine)
    mat = mapper.matrix
    g_fine = gram_on_partition(sys, fam, fine)
    g_coarse = gram_on_partition(sys, fam, coarse)
    if perturbation:
        # hit the entry with the largest Gram weight so the injected error
        # shows up at full strength regardless of the state's scale
        weighted = g_fine @ mat
        j, c = np.unravel_index(np.argmax(np.abs(weighted)), weighted.shape)
        w = weighted[j, c]
        phase = w / abs(w) if w != 0 else 1.0
        mat = mat.copy()
        mat[j, c] += perturbation * phase
    return max_abs(mat.conj().T @ g_fine @ mat - g_coarse)


def dilation_isomorphism_check(sys: TensorialSystem, fam: FunctionalFamily,
                               chains: Sequence[tuple[Partition, Partition]],
                               tol: Tolerance = DEFAULT_TOL,
                               unit: Optional[UnitFamily] = None,
                               negative_control: bool = False) -> Report:
    """Gram preservation along the given refinement chains, plus a negative control.

    Pass means the maps eta_I(x) -> eta_K(connecting(x)) are well-defined
    isometries, whose limit identifies the dilated GNS system with the GNS
    system of the dilated states.
    """
    report = Report()
    law = "G_K(D[I,K] x, D[I,K] y) = G_I(x, y)"
    for coarse, fine in chains:
        res = gram_preservation_residual(sys, fam, coarse, fine, unit)
        report.residual_record("gns_gram_preservation", law,
                               {"I": coarse, "K": fine}, res, tol.eps)
    if negative_control and chains:
        coarse, fine = chains[0]
        res = gram_preservation_residual(sys, fam, coarse, fine, unit, perturbation=1e-3)
        report.residual_record(
            "gns_gram_preservation_negative_control", law + " (perturbed map must fail)",
            {"I": coarse, "K": fine, "perturbation": 1e-3},
            res, tol.eps, expect_fail=True, fail_floor=1e-4,
        )
    return report
