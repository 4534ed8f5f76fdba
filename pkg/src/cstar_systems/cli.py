"""Config-driven runner: load or generate a system, execute suites, emit reports.

Exit codes: 0 all checks pass, 1 some check fails, 2 invalid configuration
(including a dimension-cap violation, which names the offending partition).
Reports are JSON and byte-identical across reruns of the same config: the
wall clock is printed on stdout only, and all randomness is derived from the
configured seed per suite, so any subset of suites reproduces exactly the
records of the full run.
"""
from __future__ import annotations

import argparse
import json
import sys as _sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .algebra import (
    DimensionCapError,
    FiniteCStarAlgebra,
    LinearFunctional,
    functional_tensor,
    gns,
    tensor_algebra,
    trace_functional,
    vector_state,
)
from .commutative import (
    FiniteMultSystem,
    FiniteSpace,
    MultMap,
    all_ones_unit,
    as_measure,
    check_measure_family,
    check_mult_system,
    chi_cross,
    glue_system,
    indicator_unit,
    measure_family_functionals,
    measure_on_partition,
    measure_projectivity_discrepancy,
    modular_addition_system,
    point_merge,
    point_split,
    space_on_partition,
    split_measure_idempotence,
    superop_from_point_map,
    to_cstar,
)
from .linalg import (
    Superoperator,
    Tolerance,
    max_abs,
    numerical_rank,
    superop_from_conjugation,
    superop_tensor,
)
from .partition_calculus import (
    Germ,
    cross_germ,
    delta_cross,
    delta_refinement,
    delta_interval_to_partition,
    germ_add,
    germ_distance,
    germ_mul,
    interval_map_left_nested,
    interval_map_right_nested,
    lifted_morphism_residual,
    one_param_coassociativity_residual,
    one_param_comultiplication,
    partition_algebra,
    sharp_comultiplication,
    sharp_embedding,
    sharp_germ,
    state_on_partition,
    unit_on_partition,
)
from .report import CheckRecord, Report
from .serialize import (
    element_from_json,
    functional_from_json,
    parse_time_key,
    superop_from_json,
)
from .states_gns import (
    build_idempotent_state,
    counit_dilation_eval,
    dilation_isomorphism_check,
    gns_system,
    gns_unit_vector_residual,
    marginal_states,
)
from .systems import (
    FunctionalFamily,
    Grid,
    HilbertSystem,
    MorphismFamily,
    TensorialSystem,
    UnitFamily,
    check_comultiplicative,
    check_hilbert_axioms,
    check_morphism,
    check_system_axioms,
    check_unit,
    diagonal_system,
    enumerate_all_partitions,
    enumerate_partitions,
    from_one_parameter,
    glue_hilbert_system,
    group_z2_bialgebra,
    standard_unit,
    trivial_from_bialgebra,
    trivial_unit,
)
from .timegrid import Partition, format_timepoint

ALL_SUITES = ("axioms", "partition", "dilation", "algebra", "gns", "commutative", "morphism")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    grid: Grid
    system: dict
    suites: tuple[str, ...]
    unit_spec: Optional[dict] = None
    counit_spec: Optional[dict] = None
    measures: Optional[dict] = None
    tolerance: float = 1e-9
    max_interior_points: int = 4
    dim_cap: int = 4096
    seed: int = 42
    report_path: Optional[str] = None
    perturb_delta: Optional[dict] = None

    @staticmethod
    def from_json(obj: dict) -> "RunConfig":
        try:
            grid = Grid(obj["grid"])
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigError(f"invalid grid: {exc}") from exc
        system = obj.get("system")
        if not isinstance(system, dict) or "kind" not in system:
            raise ConfigError("config needs a system object with a 'kind'")
        if "grid" in system:
            # standalone system objects carry their grid; it must agree
            if Grid(system["grid"]).points != grid.points:
                raise ConfigError("the system object's grid differs from the config grid")
        suites = tuple(obj.get("suites", ()))
        if not suites:
            raise ConfigError("config needs a nonempty list of suites")
        unknown = [s for s in suites if s not in ALL_SUITES]
        if unknown:
            raise ConfigError(f"unknown suites {unknown}; valid: {list(ALL_SUITES)}")
        max_interior = int(obj.get("max_interior_points", 4))
        if max_interior < 0:
            raise ConfigError("max_interior_points must be >= 0")
        return RunConfig(
            grid=grid,
            system=system,
            suites=suites,
            unit_spec=obj.get("unit"),
            counit_spec=obj.get("counit"),
            measures=obj.get("measures"),
            tolerance=float(obj.get("tolerance", 1e-9)),
            max_interior_points=max_interior,
            dim_cap=int(obj.get("dim_cap", 4096)),
            seed=int(obj.get("seed", 42)),
            report_path=obj.get("report_path"),
            perturb_delta=obj.get("perturb_delta"),
        )

    def normalized(self) -> dict:
        return {
            "grid": [format_timepoint(p) for p in self.grid.points],
            "system": self.system,
            "suites": list(self.suites),
            "unit": self.unit_spec,
            "counit": self.counit_spec,
            "measures": self.measures,
            "tolerance": self.tolerance,
            "max_interior_points": self.max_interior_points,
            "dim_cap": self.dim_cap,
            "seed": self.seed,
            "perturb_delta": self.perturb_delta,
        }


@dataclass
class Setup:
    """Everything a suite might need, resolved from the configuration."""

    config: RunConfig
    system: TensorialSystem
    hilbert: Optional[HilbertSystem] = None
    unit: Optional[UnitFamily] = None
    counit: Optional[FunctionalFamily] = None
    mult_system: Optional[FiniteMultSystem] = None
    measures: Optional[dict] = None
    expected_class: Optional[str] = None
    tol: Tolerance = field(default_factory=Tolerance)


def _glue_cell_state(sys: TensorialSystem, cell_dims: list[int]) -> FunctionalFamily:
    """Faithful product state per pair: each cell carries diag(1..d)/sum."""
    grid = sys.grid
    cells = list(zip(grid.points, grid.points[1:]))
    cell_density = {}
    for (a, b), d in zip(cells, cell_dims):
        w = np.arange(1, d + 1, dtype=float)
        cell_density[(a, b)] = np.diag(w / w.sum())
    functionals = {}
    for (s, t) in grid.pairs():
        rho = None
        for (a, b), dens in cell_density.items():
            if s <= a and b <= t:
                rho = dens if rho is None else np.kron(rho, dens)
        functionals[(s, t)] = LinearFunctional(sys.alg(s, t), [rho])
    return FunctionalFamily(functionals)


def build_setup(config: RunConfig) -> Setup:
    kind = config.system["kind"]
    grid = config.grid
    hilbert = None
    mult = None
    measures = None
    expected = None

    try:
        if kind == "diagonal":
            d = int(config.system.get("d", 2))
            hilbert, system = diagonal_system(grid, d, dim_cap=config.dim_cap)
            expected = "product" if d == 1 else "subproduct"
        elif kind == "glue_hilbert":
            dims = [int(x) for x in config.system["cell_dims"]]
            hilbert, system = glue_hilbert_system(grid, dims, dim_cap=config.dim_cap)
            expected = "product"
        elif kind == "trivial_bialgebra":
            model = config.system.get("model", "z2")
            if model == "z2":
                alg, delta = group_z2_bialgebra()
            elif model == "explicit":
                alg = FiniteCStarAlgebra(config.system["blocks"])
                delta = superop_from_json(
                    config.system["delta"], alg.blocks,
                    tensor_algebra(alg, alg).blocks,
                )
            else:
                raise ConfigError(f"unknown bialgebra model {model!r}")
            system = trivial_from_bialgebra(grid, alg, delta, dim_cap=config.dim_cap)
        elif kind == "one_parameter":
            durations = {}
            for key, spec in config.system["durations"].items():
                (d,) = parse_time_key(key)
                durations[d] = FiniteCStarAlgebra(spec["blocks"])
            maps = {}
            for key, spec in config.system["maps"].items():
                d1, d2 = parse_time_key(key)
                dom = durations[d1 + d2].blocks
                cod = tensor_algebra(durations[d1], durations[d2]).blocks
                maps[(d1, d2)] = superop_from_json(spec, dom, cod)
            system = from_one_parameter(grid, durations, maps, dim_cap=config.dim_cap)
        elif kind == "custom":
            algebras = {}
            for key, spec in config.system["algebras"].items():
                s, t = parse_time_key(key)
                algebras[(s, t)] = FiniteCStarAlgebra(spec["blocks"])
            deltas = {}
            for key, spec in config.system["deltas"].items():
                r, s, t = parse_time_key(key)
                dom = algebras[(r, t)].blocks
                cod = tensor_algebra(algebras[(r, s)], algebras[(s, t)]).blocks
                deltas[(r, s, t)] = superop_from_json(spec, dom, cod)
            system = TensorialSystem(grid, algebras, deltas, dim_cap=config.dim_cap,
                                     kind="custom")
        elif kind == "commutative":
            model = config.system.get("model", "explicit")
            if model == "glue":
                mult = glue_system(grid, FiniteSpace(int(config.system.get("base", 2))))
                expected = "product"
            elif model == "z2":
                mult = modular_addition_system(grid, 2)
                expected = "subproduct"
            elif model == "explicit":
                spaces = {}
                for key, n in config.system["spaces"].items():
                    s, t = parse_time_key(key)
                    spaces[(s, t)] = FiniteSpace(int(n))
                chi = {}
                for key, table in config.system["chi"].items():
                    r, s, t = parse_time_key(key)
                    chi[(r, s, t)] = MultMap(np.asarray(table), spaces[(r, t)].size)
                mult = FiniteMultSystem(grid, spaces, chi)
            else:
                raise ConfigError(f"unknown commutative model {model!r}")
            system = to_cstar(mult, dim_cap=config.dim_cap)
        else:
            raise ConfigError(f"unknown system kind {kind!r}")
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid system payload: {exc}") from exc

    if config.perturb_delta:
        eps = float(config.perturb_delta.get("epsilon", 1e-3))
        triples = system.grid.triples()
        key = triples[0]
        if "triple" in config.perturb_delta:
            key = parse_time_key(config.perturb_delta["triple"])
        old = system.deltas[key]
        mat = old.matrix.copy()
        mat[0, 0] += eps
        new_deltas = dict(system.deltas)
        new_deltas[key] = Superoperator(mat, old.dom, old.cod)
        system = TensorialSystem(system.grid, system.algebras, new_deltas,
                                 dim_cap=system.dim_cap, kind=system.kind + "+perturbed",
                                 payload=system.payload)
        expected = None

    if len(grid.points) < 3:
        expected = None  # no triples: the classification is vacuous

    unit = _resolve_unit(config, system)
    counit = _resolve_counit(config, system, mult)
    if config.measures is not None:
        measures = {
            parse_time_key(key): as_measure(vals) for key, vals in config.measures.items()
        }
    return Setup(config=config, system=system, hilbert=hilbert, unit=unit,
                 counit=counit, mult_system=mult, measures=measures,
                 expected_class=expected, tol=Tolerance(config.tolerance))


def _resolve_unit(config: RunConfig, system: TensorialSystem) -> Optional[UnitFamily]:
    spec = config.unit_spec or {"kind": "standard"}
    kind = spec.get("kind", "standard")
    if kind == "none":
        return None
    if kind == "standard":
        # systems whose maps are unital (function algebras, group coproducts)
        # default to the identity; matrix systems to the first basis projection
        if system.kind.startswith(("commutative", "trivial_bialgebra")):
            return trivial_unit(system)
        return standard_unit(system)
    if kind == "trivial":
        return trivial_unit(system)
    if kind == "first_point_indicator":
        return indicator_unit(system, 0)
    if kind == "explicit":
        elements = {}
        for key, obj in spec["elements"].items():
            s, t = parse_time_key(key)
            elements[(s, t)] = element_from_json(system.algebras[(s, t)], obj)
        return UnitFamily(elements)
    raise ConfigError(f"unknown unit kind {kind!r}")


def _resolve_counit(config: RunConfig, system: TensorialSystem,
                    mult: Optional[FiniteMultSystem]) -> Optional[FunctionalFamily]:
    spec = config.counit_spec or {"kind": "standard"}
    kind = spec.get("kind", "standard")
    if kind == "none":
        return None
    if kind == "standard":
        if system.kind == "diagonal":
            kind = "vector_state"
        elif system.kind == "glue_hilbert":
            kind = "faithful_cell_product"
        elif system.kind == "commutative":
            kind = "from_measures" if config.measures else "uniform"
        else:
            kind = "vector_state"
    if kind == "vector_state":
        return FunctionalFamily({pair: vector_state(alg)
                                 for pair, alg in system.algebras.items()})
    if kind == "faithful_cell_product":
        dims = system.payload.get("cell_dims")
        if not dims:
            raise ConfigError("faithful_cell_product needs a glue_hilbert system")
        return _glue_cell_state(system, dims)
    if kind == "from_measures":
        if mult is None or not config.measures:
            raise ConfigError("from_measures needs a commutative system and measures")
        mu = {parse_time_key(k): as_measure(v) for k, v in config.measures.items()}
        return measure_family_functionals(mult, system, mu)
    if kind == "uniform":
        if mult is None:
            raise ConfigError("uniform counit needs a commutative system")
        mu = {pair: as_measure([Fraction(1, sp.size)] * sp.size)
              for pair, sp in mult.spaces.items()}
        return measure_family_functionals(mult, system, mu)
    if kind == "trace_normalized":
        return FunctionalFamily({pair: trace_functional(alg, normalized=True)
                                 for pair, alg in system.algebras.items()})
    if kind == "explicit":
        functionals = {}
        for key, obj in spec["functionals"].items():
            s, t = parse_time_key(key)
            functionals[(s, t)] = functional_from_json(system.algebras[(s, t)], obj)
        return FunctionalFamily(functionals)
    raise ConfigError(f"unknown counit kind {kind!r}")


# -- suites ------------------------------------------------------------------------

def _sharp_partitions(setup: Setup) -> list[Partition]:
    grid = setup.system.grid
    return enumerate_partitions(grid, grid.points[0], grid.points[-1],
                                setup.config.max_interior_points)


def _cross_partitions(setup: Setup) -> list[Partition]:
    return enumerate_all_partitions(setup.system.grid,
                                    setup.config.max_interior_points + 2)


def run_axioms(setup: Setup, rng) -> Report:
    report = check_system_axioms(setup.system, setup.tol)
    if setup.expected_class is not None:
        got = report.records[-1].detail
        report.add(CheckRecord(
            check="expected_classification", law="generator produces the stated class",
            params={"expected": setup.expected_class}, passed=got == setup.expected_class,
            detail=got,
        ))
    if setup.hilbert is not None:
        report.extend(check_hilbert_axioms(setup.hilbert, setup.tol))
    if setup.unit is not None:
        report.extend(check_unit(setup.system, setup.unit, setup.tol))
    if setup.counit is not None:
        report.extend(check_comultiplicative(setup.system, setup.counit, setup.tol))
    return report


def run_partition(setup: Setup, rng) -> Report:
    sys = setup.system
    tol = setup.tol
    report = Report()
    sharp = _sharp_partitions(setup)
    for part in sharp:
        rec = delta_interval_to_partition(sys, part)
        left = interval_map_left_nested(sys, part)
        right = interval_map_right_nested(sys, part)
        report.residual_record(
            "interval_map_oracle_equivalence",
            "recursive interval map = left-nested product = right-nested product",
            {"I": part},
            max(max_abs(rec.matrix - left.matrix), max_abs(rec.matrix - right.matrix)),
            tol.eps,
        )
    pairs = [(i, j) for i in sharp for j in sharp
             if i != j and set(i.points) <= set(j.points)]
    for coarse, fine in pairs:
        lhs = delta_interval_to_partition(sys, fine)
        rhs = delta_refinement(sys, coarse, fine).matrix @ \
            delta_interval_to_partition(sys, coarse).matrix
        report.residual_record(
            "interval_map_factors_through_refinement",
            "D[{s,t},J] = D[I,J] D[{s,t},I]",
            {"I": coarse, "J": fine}, max_abs(lhs.matrix - rhs), tol.eps,
        )
        for cut in coarse.interior:
            lo, hi = coarse.endpoints
            split = superop_tensor(
                delta_refinement(sys, coarse.restrict(lo, cut), fine.restrict(lo, cut)),
                delta_refinement(sys, coarse.restrict(cut, hi), fine.restrict(cut, hi)),
            )
            report.residual_record(
                "refinement_map_splits_at_interior_point",
                "D[I,J] = D[I^[s,u], J^[s,u]] (x) D[I^[u,t], J^[u,t]] for u in I",
                {"I": coarse, "J": fine, "u": cut},
                max_abs(delta_refinement(sys, coarse, fine).matrix - split.matrix),
                tol.eps,
            )
        if setup.unit is not None:
            lhs_p = delta_refinement(sys, coarse, fine).apply(
                unit_on_partition(setup.unit, coarse).vec())
            report.residual_record(
                "unit_coherence_under_refinement", "D[I,J](p_I) = p_J",
                {"I": coarse, "J": fine},
                max_abs(lhs_p - unit_on_partition(setup.unit, fine).vec()), tol.eps,
            )
        if setup.counit is not None:
            row = state_on_partition(setup.counit, fine).row() @ \
                delta_refinement(sys, coarse, fine).matrix
            report.residual_record(
                "state_coherence_under_refinement", "phi_J o D[I,J] = phi_I",
                {"I": coarse, "J": fine},
                max_abs(row - state_on_partition(setup.counit, coarse).row()), tol.eps,
            )
    chains = [(i, j, k) for i in sharp for j in sharp for k in sharp
              if set(i.points) <= set(j.points) <= set(k.points)
              and i != j and j != k]
    for i, j, k in chains:
        lhs = delta_refinement(sys, i, k).matrix
        rhs = delta_refinement(sys, j, k).matrix @ delta_refinement(sys, i, j).matrix
        report.residual_record(
            "refinement_cocycle", "D[I,K] = D[J,K] D[I,J]",
            {"I": i, "J": j, "K": k}, max_abs(lhs - rhs), tol.eps,
        )
    if setup.unit is not None:
        # the padded state-coherence law assumes the states normalize the unit
        normalized = setup.counit is not None and all(
            abs(setup.counit.phi(s, t)(setup.unit.p(s, t)) - 1.0) <= tol.eps
            for (s, t) in sys.grid.pairs()
        )
        cross = _cross_partitions(setup)
        cross_pairs = [(i, j) for i in cross for j in cross
                       if i != j and set(i.points) <= set(j.points)
                       and i.endpoints != j.endpoints]
        for coarse, fine in cross_pairs:
            if normalized:
                row = state_on_partition(setup.counit, fine).row() @ \
                    delta_cross(sys, setup.unit, coarse, fine).matrix
                report.residual_record(
                    "state_coherence_under_padding",
                    "phi_J o padded D[I,J] = phi_I when phi(p) = 1",
                    {"I": coarse, "J": fine},
                    max_abs(row - state_on_partition(setup.counit, coarse).row()),
                    tol.eps,
                )
            lhs_p = delta_cross(sys, setup.unit, coarse, fine).apply(
                unit_on_partition(setup.unit, coarse).vec())
            report.residual_record(
                "unit_coherence_under_padding", "padded D[I,J](p_I) = p_J",
                {"I": coarse, "J": fine},
                max_abs(lhs_p - unit_on_partition(setup.unit, fine).vec()), tol.eps,
            )
        cross_chains = [(i, j, k) for i in cross for j in cross for k in cross
                        if set(i.points) <= set(j.points) <= set(k.points)
                        and i != j and j != k]
        for i, j, k in cross_chains:
            lhs = delta_cross(sys, setup.unit, i, k).matrix
            rhs = delta_cross(sys, setup.unit, j, k).matrix @ \
                delta_cross(sys, setup.unit, i, j).matrix
            report.residual_record(
                "padded_cocycle", "padded D[I,K] = padded D[J,K] padded D[I,J]",
                {"I": i, "J": j, "K": k}, max_abs(lhs - rhs), tol.eps,
            )
    return report


def run_dilation(setup: Setup, rng) -> Report:
    sys = setup.system
    tol = setup.tol
    report = Report()
    grid = sys.grid
    lo, hi = grid.points[0], grid.points[-1]

    def random_sharp(partition: Partition) -> Germ:
        return sharp_germ(sys, partition,
                          partition_algebra(sys, partition).random_element(rng))

    # split-then-merge round trips over the full interval
    base = Partition([lo, hi])
    for cut in grid.points[1:-1]:
        g = random_sharp(base)
        split = sharp_comultiplication(sys, g, cut)
        report.residual_record(
            "interval_split_round_trip",
            "splitting at s then merging reproduces the germ",
            {"I": base, "s": cut},
            germ_distance(sys, split.merged(), g), tol.eps,
        )
    # interval embedding functoriality over strictly nested interval triples
    intervals = grid.pairs()
    nested = [
        (a, b, c) for a in intervals for b in intervals for c in intervals
        if (b[0] <= a[0] and a[1] <= b[1] and (a != b))
        and (c[0] <= b[0] and b[1] <= c[1] and (b != c))
    ]
    if setup.unit is not None:
        for (q, r), (s, t), (u, v) in nested:
            g = random_sharp(Partition([q, r]))
            via = sharp_embedding(sys, setup.unit,
                                  sharp_embedding(sys, setup.unit, g, s, t), u, v)
            direct = sharp_embedding(sys, setup.unit, g, u, v)
            report.residual_record(
                "interval_embedding_functorial",
                "embed[(s,t)->(u,v)] o embed[(q,r)->(s,t)] = embed[(q,r)->(u,v)]",
                {"inner": Partition([q, r]), "mid": Partition([s, t]),
                 "outer": Partition([u, v])},
                germ_distance(sys, via, direct, unit=setup.unit), tol.eps,
            )
        # germ-encoding consistency: direct padded germ vs refine-then-embed route
        for (s, t) in intervals:
            if (s, t) == (lo, hi):
                continue
            part = Partition([s, t])
            x = partition_algebra(sys, part).random_element(rng)
            direct = cross_germ(sys, part, x)
            refined = Partition(sorted({s, t} | {p for p in grid.points if s < p < t}))
            pushed = sharp_germ(
                sys, refined,
                partition_algebra(sys, refined).from_vec(
                    delta_refinement(sys, part, refined).apply(x.vec())),
            )
            embedded = sharp_embedding(sys, setup.unit, pushed, lo, hi)
            route = cross_germ(sys, embedded.partition, embedded.element)
            report.residual_record(
                "germ_encoding_consistency",
                "padded germ of x = refine-then-embed representative of x",
                {"I": part}, germ_distance(sys, direct, route, unit=setup.unit),
                tol.eps,
            )
        # one-parameter comultiplication: deformed co-associativity
        interior = grid.points[1:-1]
        for idx_r, r in enumerate(interior):
            for s in interior[idx_r + 1:]:
                g = cross_germ(sys, Partition([lo, hi]),
                               partition_algebra(sys, Partition([lo, hi]))
                               .random_element(rng))
                res = one_param_coassociativity_residual(sys, setup.unit, g, r, s)
                report.residual_record(
                    "one_param_deformed_coassociativity",
                    "(D_r (x) id) D_s = (id (x) D_s) D_r on germs",
                    {"r": r, "s": s}, res, tol.eps,
                )
        # group-like unit germ
        ref = cross_germ(sys, Partition([lo, grid.points[1]]),
                         unit_on_partition(setup.unit, Partition([lo, grid.points[1]])))
        for (s, t) in intervals:
            part = Partition([s, t])
            pg = cross_germ(sys, part, unit_on_partition(setup.unit, part))
            report.residual_record(
                "unit_germ_interval_independent",
                "the padded germ of p(s,t) does not depend on (s,t)",
                {"I": part}, germ_distance(sys, pg, ref, unit=setup.unit), tol.eps,
            )
        for s in grid.points[1:-1]:
            split = one_param_comultiplication(sys, setup.unit, ref, s)
            expected = unit_on_partition(setup.unit, split.joint_partition)
            report.residual_record(
                "unit_germ_group_like", "D_s(p) = p (x) p",
                {"s": s}, split.element.distance(expected), tol.eps,
            )
        # germ arithmetic is representative independent
        for cut in grid.points[1:-1]:
            part_a = Partition([lo, hi])
            part_b = Partition([lo, cut, hi])
            x = partition_algebra(sys, part_a).random_element(rng)
            g_a = sharp_germ(sys, part_a, x)
            pushed_vec = delta_refinement(sys, part_a, part_b).apply(x.vec())
            g_b = sharp_germ(sys, part_b,
                             partition_algebra(sys, part_b).from_vec(pushed_vec))
            other = random_sharp(part_b)
            for name, op in (("sum", germ_add), ("product", germ_mul)):
                report.residual_record(
                    f"germ_{name}_representative_independent",
                    f"the germ {name} does not depend on the representative",
                    {"I": part_a, "J": part_b, "s": cut},
                    germ_distance(sys, op(sys, g_a, other), op(sys, g_b, other)),
                    tol.eps,
                )
    return report


def run_algebra(setup: Setup, rng) -> Report:
    sys = setup.system
    tol = setup.tol
    report = Report()
    fam = setup.counit
    for (s, t) in sys.grid.pairs():
        alg = sys.alg(s, t)
        phi = fam.phi(s, t) if fam is not None else trace_functional(alg, normalized=True)
        lhs = functional_tensor(functional_tensor(phi, phi), phi).row()
        rhs = functional_tensor(phi, functional_tensor(phi, phi)).row()
        report.residual_record(
            "functional_tensor_associative",
            "(phi (x) phi) (x) phi = phi (x) (phi (x) phi)",
            {"s": s, "t": t}, max_abs(lhs - rhs), tol.eps,
        )
        data = gns(alg, phi, tol)
        # brute-force Gram oracle: products of matrix units, no structure reused
        dim = alg.dim
        brute = np.zeros((dim, dim), dtype=complex)
        for a in range(dim):
            ea = alg.from_vec(np.eye(dim, dtype=complex)[a])
            for b in range(dim):
                eb = alg.from_vec(np.eye(dim, dtype=complex)[b])
                brute[b, a] = phi(eb.star() * ea)
        rank = numerical_rank(brute, tol)
        report.add(CheckRecord(
            check="gns_dimension_matches_brute_force_gram_rank",
            law="dim H_phi = rank of [phi(e_b* e_a)]",
            params={"s": s, "t": t, "dim": data.dim, "oracle_rank": rank},
            passed=data.dim == rank,
        ))
        res = 0.0
        for a in range(dim):
            for b in range(dim):
                ip = np.vdot(data.eta[:, b], data.eta[:, a])
                res = max(res, abs(ip - brute[b, a]))
        report.residual_record(
            "gns_inner_product_reproduction", "<eta(x), eta(y)> = phi(y* x)",
            {"s": s, "t": t}, res, tol.eps,
        )
    # rejection of non-states
    alg0 = sys.alg(*sys.grid.pairs()[0])
    bad = trace_functional(alg0, normalized=False)
    total = sum(alg0.blocks)
    rejected = False
    if total > 1:
        try:
            gns(alg0, bad, tol)
        except ValueError:
            rejected = True
    else:
        rejected = True  # the unnormalized trace is a state only in total dimension 1
    report.add(CheckRecord(
        check="gns_rejects_non_states", law="the GNS construction requires a state",
        params={}, passed=rejected,
    ))
    return report


def run_gns(setup: Setup, rng) -> Report:
    sys = setup.system
    tol = setup.tol
    report = Report()
    if setup.counit is None or not setup.counit.is_counit(tol):
        report.add(CheckRecord(
            check="gns_suite_needs_counit", law="GNS systems are built from co-units",
            params={}, passed=False, detail="no co-unit configured",
        ))
        return report
    fam = setup.counit
    gsys = gns_system(sys, fam, tol)
    hs = gsys.hilbert_system()
    report.extend(check_hilbert_axioms(hs, tol))
    if setup.hilbert is not None and sys.kind == "diagonal":
        for (r, s, t) in sys.grid.triples():
            report.residual_record(
                "gns_isometry_recovers_generator", "V[r,s,t] = U[r,s,t] entrywise",
                {"r": r, "s": s, "t": t},
                max_abs(gsys.isometries[(r, s, t)] - setup.hilbert.u(r, s, t)),
                tol.eps,
            )
    # dilated functional evaluation is representative independent
    sharp = _sharp_partitions(setup)
    base = sharp[0]
    for fine in sharp[1:]:
        if not set(base.points) <= set(fine.points):
            continue
        x = partition_algebra(sys, base).random_element(rng)
        g1 = sharp_germ(sys, base, x)
        pushed = partition_algebra(sys, fine).from_vec(
            delta_refinement(sys, base, fine).apply(x.vec()))
        g2 = sharp_germ(sys, fine, pushed)
        v1 = counit_dilation_eval(sys, fam, g1, tol)
        v2 = counit_dilation_eval(sys, fam, g2, tol)
        report.residual_record(
            "dilated_functional_representative_independent",
            "the dilated functional agrees on equivalent representatives",
            {"I": base, "J": fine}, abs(v1 - v2), tol.eps,
        )
    if setup.unit is not None:
        normalized = all(
            abs(fam.phi(s, t)(setup.unit.p(s, t)) - 1.0) <= tol.eps
            for (s, t) in sys.grid.pairs()
        )
        report.add(CheckRecord(
            check="counit_normalization_on_unit",
            law="the germ state exists iff phi(s,t)(p(s,t)) = 1",
            params={}, passed=True,
            detail="normalized" if normalized else "not normalized; germ state skipped",
        ))
        if normalized:
            report.residual_record(
                "gns_unit_vectors",
                "eta(p) are unit vectors with V eta(p(r,t)) = eta(p(r,s)) (x) eta(p(s,t))",
                {}, gns_unit_vector_residual(sys, gsys, setup.unit), tol.eps,
            )
            phi = build_idempotent_state(sys, setup.unit, fam, tol,
                                         max_interior=min(2, setup.config.max_interior_points))
            marg = marginal_states(phi, sys)
            res = max(
                max_abs(marg.phi(s, t).row() - fam.phi(s, t).row())
                for (s, t) in sys.grid.pairs()
            )
            report.residual_record(
                "idempotent_state_marginal_round_trip",
                "the marginals of the germ state are the original co-unit",
                {}, res, 1e-12,
            )
    chains = [(i, k) for i in sharp for k in sharp
              if i != k and set(i.points) <= set(k.points)]
    report.extend(dilation_isomorphism_check(sys, fam, chains, tol, unit=setup.unit,
                                             negative_control=True))
    return report


def run_commutative(setup: Setup, rng) -> Report:
    tol_eps = setup.tol.eps
    report = Report()

    def exact_model_checks(mult: FiniteMultSystem, mu: dict, label: str,
                           unit_points: bool) -> None:
        rep = check_mult_system(mult)
        report.extend(rep)
        report.extend(check_measure_family(mult, mu, tol_eps))
        cstar = to_cstar(mult)
        ones = all_ones_unit(cstar)
        report.add(CheckRecord(
            check="all_ones_indicator_is_unit",
            law="the indicator of the whole space is a unit",
            params={"model": label}, passed=check_unit(cstar, ones, setup.tol).passed,
        ))
        if unit_points:
            report.add(CheckRecord(
                check="singleton_indicator_is_unit",
                law="the indicator of a compatible point family is a unit",
                params={"model": label},
                passed=check_unit(cstar, indicator_unit(cstar, 0), setup.tol).passed,
            ))
        grid = mult.grid
        parts = enumerate_all_partitions(grid, min(4, setup.config.max_interior_points + 2))
        for coarse in parts:
            for fine in parts:
                if coarse == fine or not set(coarse.points) <= set(fine.points):
                    continue
                point_map = chi_cross(mult, coarse, fine)
                lifted = superop_from_point_map(point_map, space_on_partition(mult, coarse))
                if coarse.endpoints == fine.endpoints:
                    alg_map = delta_refinement(cstar, coarse, fine)
                else:
                    alg_map = delta_cross(cstar, ones, coarse, fine)
                exact = np.array_equal(lifted.matrix, alg_map.matrix)
                report.add(CheckRecord(
                    check="partition_map_duality_exact",
                    law="pullback of the point-level map = algebra-level connecting map",
                    params={"model": label, "I": coarse, "J": fine}, passed=exact,
                    exact_discrepancy="0" if exact else "1",
                ))
        for coarse in parts:
            for fine in parts:
                if coarse == fine or not set(coarse.points) <= set(fine.points):
                    continue
                disc = measure_projectivity_discrepancy(mult, mu, coarse, fine)
                report.add(CheckRecord(
                    check="measure_projectivity_under_point_maps",
                    law="mu_I = pushforward of mu_J along the partition point map",
                    params={"model": label, "I": coarse, "J": fine}, passed=disc == 0,
                    exact_discrepancy=str(disc),
                ))
        full = Partition(list(grid.points))
        joint = measure_on_partition(mu, full)
        for s in full.interior:
            disc = split_measure_idempotence(mult, joint, full, s)
            report.add(CheckRecord(
                check="point_split_measure_idempotence",
                law="the partition-level measure factorizes at every cut",
                params={"model": label, "K": full, "s": s}, passed=disc == 0,
                exact_discrepancy=str(disc),
            ))
            n = space_on_partition(mult, full)
            ok = True
            for x in range(n):
                left, right = point_split(mult, full, x, s)
                ok &= point_merge(mult, left, right) == (full, x)
            report.add(CheckRecord(
                check="point_split_merge_round_trip",
                law="splitting a coordinate tuple at s then gluing is the identity",
                params={"model": label, "K": full, "s": s}, passed=ok,
            ))

    glue_grid = Grid([1, 2, 3, 4, 5])
    glue = glue_system(glue_grid, FiniteSpace(2))
    bern = (Fraction(1, 3), Fraction(2, 3))
    glue_mu = {}
    for (s, t) in glue_grid.pairs():
        m = (Fraction(1),)
        for a, b in zip(glue_grid.points, glue_grid.points[1:]):
            if s <= a and b <= t:
                m = tuple(x * y for x in m for y in bern)
        glue_mu[(s, t)] = m
    exact_model_checks(glue, glue_mu, "glue_base2_bernoulli_1_3", unit_points=True)

    z2_grid = Grid([1, 2, 3, 4])
    z2 = modular_addition_system(z2_grid, 2)
    uniform = {pair: (Fraction(1, 2), Fraction(1, 2)) for pair in z2_grid.pairs()}
    exact_model_checks(z2, uniform, "z2_addition_uniform", unit_points=False)

    # constructed counterexample: point mass against uniform cells
    broken = dict(uniform)
    r0, t0 = z2_grid.points[0], z2_grid.points[2]
    broken[(r0, t0)] = (Fraction(1), Fraction(0))
    rep = check_measure_family(z2, broken, tol_eps)
    worst = max(
        (Fraction(r.exact_discrepancy) for r in rep.records
         if r.exact_discrepancy is not None), default=Fraction(0),
    )
    report.add(CheckRecord(
        check="measure_law_counterexample_detected",
        law="a point mass cannot be the pushforward of uniform cells",
        params={"pair": Partition([r0, t0])},
        passed=(not rep.passed) and worst == Fraction(1, 2),
        exact_discrepancy=str(worst),
    ))

    if setup.mult_system is not None and setup.measures is not None:
        exact_model_checks(setup.mult_system, setup.measures, "configured",
                           unit_points=False)
    elif setup.mult_system is not None:
        report.extend(check_mult_system(setup.mult_system))
    return report


def run_morphism(setup: Setup, rng) -> Report:
    sys = setup.system
    tol = setup.tol
    report = Report()
    identity = MorphismFamily({
        pair: Superoperator(np.eye(alg.dim, dtype=complex), alg.blocks, alg.blocks)
        for pair, alg in sys.algebras.items()
    })
    families = [("identity", identity, True)]
    if sys.kind == "diagonal":
        d = sys.payload["d"]
        if d >= 3:
            perm = np.eye(d, dtype=complex)[[0, 2, 1] + list(range(3, d))]
            theta = MorphismFamily({
                pair: superop_from_conjugation(perm) for pair in sys.algebras
            })
            families.append(("permutation_fixing_the_unit", theta, True))
    for name, fam, preserves_unit in families:
        rep = check_morphism(sys, sys, fam, tol)
        for rec in rep.records:
            rec.params = {"morphism": name, **rec.params}
        report.extend(rep)
        sharp = _sharp_partitions(setup)
        for coarse in sharp:
            for fine in sharp:
                if coarse == fine or not set(coarse.points) <= set(fine.points):
                    continue
                res = lifted_morphism_residual(sys, sys, fam, coarse, fine,
                                               setup.unit, setup.unit)
                report.residual_record(
                    "lifted_morphism_intertwines_refinement",
                    "theta_J D[I,J] = D[I,J] theta_I for the cellwise tensor lift",
                    {"morphism": name, "I": coarse, "J": fine}, res, tol.eps,
                )
        if preserves_unit and setup.unit is not None:
            cross = [p for p in _cross_partitions(setup)
                     if p.endpoints != (sys.grid.points[0], sys.grid.points[-1])][:4]
            full = Partition(list(sys.grid.points))
            for coarse in cross:
                res = lifted_morphism_residual(sys, sys, fam, coarse, full,
                                               setup.unit, setup.unit)
                report.residual_record(
                    "lifted_morphism_intertwines_padding",
                    "theta_J (padded D[I,J]) = (padded D[I,J]) theta_I",
                    {"morphism": name, "I": coarse, "J": full}, res, tol.eps,
                )
    # negative control: a unit-moving automorphism breaks the padded intertwining
    if sys.kind == "diagonal" and sys.payload["d"] >= 2 and setup.unit is not None \
            and len(sys.grid.points) >= 3:
        d = sys.payload["d"]
        swap = np.eye(d, dtype=complex)[[1, 0] + list(range(2, d))]
        theta = MorphismFamily({
            pair: superop_from_conjugation(swap) for pair in sys.algebras
        })
        rep = check_morphism(sys, sys, theta, tol)
        report.add(CheckRecord(
            check="unit_moving_morphism_still_intertwines",
            law="basis permutations intertwine the diagonal comultiplication",
            params={"morphism": "swap_first_two"}, passed=rep.passed,
            residual=rep.max_residual,
        ))
        lo = sys.grid.points[0]
        coarse = Partition([lo, sys.grid.points[1]])
        full = Partition(list(sys.grid.points))
        res = lifted_morphism_residual(sys, sys, theta, coarse, full,
                                       setup.unit, setup.unit)
        report.residual_record(
            "unit_moving_morphism_fails_padding_negative_control",
            "padding intertwines only when the unit is preserved",
            {"morphism": "swap_first_two", "I": coarse, "J": full}, res, tol.eps,
            expect_fail=True, fail_floor=1e-4,
        )
    return report


SUITE_RUNNERS = {
    "axioms": run_axioms,
    "partition": run_partition,
    "dilation": run_dilation,
    "algebra": run_algebra,
    "gns": run_gns,
    "commutative": run_commutative,
    "morphism": run_morphism,
}


def run(config: RunConfig) -> tuple[dict, bool, float]:
    """Execute the selected suites; returns (report json, overall pass, wall seconds)."""
    start = time.perf_counter()
    setup = build_setup(config)
    suites_out = {}
    overall = True
    for suite in ALL_SUITES:
        if suite not in config.suites:
            continue
        rng = np.random.default_rng([config.seed, ALL_SUITES.index(suite)])
        rep = SUITE_RUNNERS[suite](setup, rng)
        suites_out[suite] = rep.to_json()
        overall &= rep.passed
    wall = time.perf_counter() - start
    total = sum(s["summary"]["total"] for s in suites_out.values())
    failed = sum(s["summary"]["failed"] for s in suites_out.values())
    out = {
        "config": config.normalized(),
        "suites": suites_out,
        "summary": {
            "total": total,
            "passed": total - failed,
            "failed": failed,
            "overall_pass": overall,
        },
    }
    return out, overall, wall


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="verify",
        description="Run identity-check suites for two-parameter operator-algebra "
                    "systems over a finite grid.",
    )
    parser.add_argument("--config", required=True, help="path to a JSON run configuration")
    parser.add_argument("--tol", type=float, default=None, help="residual tolerance override")
    parser.add_argument("--max-interior", type=int, default=None,
                        help="max interior points per partition")
    parser.add_argument("--report", default=None, help="path for the JSON report")
    parser.add_argument("--seed", type=int, default=None, help="seed for random elements")
    parser.add_argument("--suites", default=None,
                        help="comma-separated subset of " + ",".join(ALL_SUITES))
    args = parser.parse_args(argv)

    try:
        with open(args.config) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=_sys.stderr)
        return 2

    if args.tol is not None:
        raw["tolerance"] = args.tol
    if args.max_interior is not None:
        raw["max_interior_points"] = args.max_interior
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.report is not None:
        raw["report_path"] = args.report
    if args.suites is not None:
        raw["suites"] = [s.strip() for s in args.suites.split(",") if s.strip()]

    try:
        config = RunConfig.from_json(raw)
        out, overall, wall = run(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=_sys.stderr)
        return 2
    except DimensionCapError as exc:
        print(f"config error: {exc}", file=_sys.stderr)
        return 2

    if config.report_path:
        with open(config.report_path, "w") as fh:
            json.dump(out, fh, indent=2, sort_keys=True)
            fh.write("\n")

    for suite, body in out["suites"].items():
        s = body["summary"]
        residuals = [r.get("residual") for r in body["records"]
                     if "residual" in r and "negative_control" not in r["check"]]
        worst = max(residuals) if residuals else 0.0
        status = "pass" if s["failed"] == 0 else "FAIL"
        print(f"{suite:12s} {status}  checks={s['total']:4d}  max residual={worst:.3e}")
    s = out["summary"]
    print(f"{'overall':12s} {'pass' if overall else 'FAIL'}  "
          f"checks={s['total']}  wall={wall:.2f}s")
    return 0 if overall else 1


if __name__ == "__main__":
    _sys.exit(main())
