"""Spectral quadruple data and residual checks for its axioms.

All slice operators live on one Hilbert space (solutions identified at a
reference time). A slice at time ``t`` holds the transported multiplication
generators, ``E``, ``gamma`` and the evolution generator ``iH`` in that common
frame; ``groupoid.frames[t]`` is the unitary ``W_t`` used to transport them, so
slice operators are ``W_t^dagger O W_t``.

Commutator-type residuals of lattice operators are evaluated on a resolved
Fourier band (``band`` projector) when one is supplied: lattice derivatives
alias at the band edge, and the continuum identities only hold on resolved
modes.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace

import numpy as np

from .opcore import (
    AntilinearOperator,
    anticommutator,
    commutator,
    dagger,
    hs_norm,
    identity,
    matrix_exponential,
    operator_norm,
)

ONE_PARAMETER = "one_parameter"
LIE_SYMMETRIC = "lie_symmetric"


class DegenerateCycleError(ValueError):
    pass


class StructureConstantError(ValueError):
    pass


@dataclass
class TimeSlice:
    t: float
    generators: dict[str, np.ndarray]
    E: np.ndarray
    gamma: np.ndarray
    iH: np.ndarray | None = None
    band: np.ndarray | None = None

    def transported(self, u: np.ndarray) -> "TimeSlice":
        """Conjugate every operator by ``u`` (``O -> u O u^dagger``)."""
        ud = dagger(u)

        def tr(o):
            return None if o is None else u @ o @ ud

        return TimeSlice(self.t, {k: tr(v) for k, v in self.generators.items()},
                         tr(self.E), tr(self.gamma), tr(self.iH), tr(self.band))


@dataclass
class GroupoidSpec:
    """Unitary equivalences between slice algebras.

    ``frames[t]`` transports reference-time data to slice ``t``. For
    ``lie_symmetric`` groupoids ``generators`` are Lie-algebra elements with
    ``[X_i, X_j] = sum_k structure_constants[i, j, k] X_k``; ``compact`` names
    the generators of the maximal compact subalgebra and ``evolution`` the
    designated ``iH``.
    """

    kind: str
    generators: dict[str, np.ndarray] = field(default_factory=dict)
    frames: dict[float, np.ndarray] = field(default_factory=dict)
    structure_constants: np.ndarray | None = None
    compact: tuple[str, ...] = ()
    evolution: str | None = None

    def __post_init__(self):
        if self.kind not in (ONE_PARAMETER, LIE_SYMMETRIC):
            raise ValueError(f"unknown groupoid kind {self.kind!r}")

    def sample_unitaries(self, s: float = 0.3) -> list[tuple[str, np.ndarray]]:
        out = [(f"frame[t={t:g}]", u) for t, u in sorted(self.frames.items())]
        for name, x in self.generators.items():
            out.append((f"exp({s:g}*{name})", matrix_exponential(x, s)))
        return out


@dataclass
class HochschildCycle:
    """Formal sum ``sum_w w * (f_0, ..., f_n)`` of operator tuples."""

    terms: list[tuple[float, tuple[np.ndarray, ...]]]

    @classmethod
    def from_names(cls, slice_: TimeSlice, spec) -> "HochschildCycle":
        terms = []
        for entry in spec:
            *names, w = entry
            ops = tuple(identity(slice_.E.shape[0]) if n == "1" else slice_.generators[n] for n in names)
            terms.append((float(w), ops))
        return cls(terms)


@dataclass
class SpectralQuadruple:
    hilbert_dim: int
    spacetime_dim: int
    slices: dict[float, TimeSlice]
    C: AntilinearOperator
    groupoid: GroupoidSpec
    mass: float | None = None
    cycle: list | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.slices:
            raise ValueError("a quadruple needs at least one slice")
        for t, s in self.slices.items():
            ops = [s.E, s.gamma, *s.generators.values()]
            if s.iH is not None:
                ops.append(s.iH)
            for o in ops:
                if o.shape != (self.hilbert_dim, self.hilbert_dim):
                    raise ValueError(f"slice t={t}: operator shape {o.shape} != hilbert_dim {self.hilbert_dim}")
        if self.C.dim != self.hilbert_dim:
            raise ValueError("C has the wrong dimension")

    @property
    def spatial_dim(self) -> int:
        return self.spacetime_dim - 1

    @property
    def times(self) -> list[float]:
        return sorted(self.slices)


@dataclass
class CheckReport:
    """One named residual. ``advisory`` flags a warning; it never changes ``passed``."""

    name: str
    residual: float
    tol: float
    passed: bool
    meta: dict = field(default_factory=dict)
    advisory: bool = False

    @classmethod
    def make(cls, name, residual, tol, meta=None, advisory=False) -> "CheckReport":
        residual = float(residual)
        return cls(name, residual, float(tol), bool(residual <= tol), dict(meta or {}), advisory)

    def to_dict(self) -> dict:
        return {"name": self.name, "residual": self.residual, "tol": self.tol,
                "pass": self.passed, "advisory": self.advisory, "meta": self.meta}


@dataclass
class ValidationConfig:
    algebraic_tol: float = 1e-10
    unitarity_tol: float = 1e-8
    charge_tol: float = 1e-8
    first_order_tol: float = 1e-8
    hochschild_tol: float = 0.05
    geometry_tol: float = 1e-9
    equivalence_tol: float = 1e-8
    symmetric_tol: float = 1e-10
    noncomm_scale: float = 1e-4
    max_pairs: int | None = None
    seed: int = 0

    def override(self, **kw) -> "ValidationConfig":
        d = dict(self.__dict__)
        for k, v in kw.items():
            if k not in d:
                raise KeyError(f"unknown tolerance {k!r}")
            d[k] = type(d[k])(v) if d[k] is not None else (None if v is None else int(v))
        return ValidationConfig(**d)


# --- helpers -----------------------------------------------------------------

def _compress(a: np.ndarray, band: np.ndarray | None) -> np.ndarray:
    return a if band is None else band @ a @ band


def _normalized_distance(a: np.ndarray, b: np.ndarray) -> float:
    na, nb = hs_norm(a), hs_norm(b)
    if na == 0 or nb == 0:
        return 2.0
    return hs_norm(a / na - b / nb)


def s_exponent(n: int) -> int:
    """``(n-1)(n-2)(n-3)(n-4)/8``, the sign exponent of ``C^2``."""
    if n < 1:
        raise ValueError("spacetime dimension must be positive")
    return (n - 1) * (n - 2) * (n - 3) * (n - 4) // 8


def opposite(c: AntilinearOperator, g: np.ndarray) -> np.ndarray:
    """``g^op = C g^* C``."""
    return c.conjugate_linear(dagger(g))


# --- individual checks -----------------------------------------------------

def check_time_vector(slice_: TimeSlice, tol: float = 1e-10) -> CheckReport:
    e = slice_.E
    one = identity(e.shape[0])
    sq = operator_norm(e @ e + one)
    skew = operator_norm(dagger(e) + e)
    return CheckReport.make(f"time_vector[t={slice_.t:g}]", max(sq, skew), tol,
                            {"E^2+1": sq, "E^*+E": skew})


def check_volume_element(slice_: TimeSlice, spacetime_dim: int, tol: float = 1e-10) -> CheckReport:
    e, g = slice_.E, slice_.gamma
    one = identity(e.shape[0])
    plus, minus = operator_norm(g @ g - one), operator_norm(g @ g + one)
    square = min(plus, minus)
    if spacetime_dim % 2 == 0:
        rel, rel_name = operator_norm(anticommutator(e, g)), "{E,gamma}"
    else:
        rel, rel_name = operator_norm(commutator(e, g)), "[E,gamma]"
    return CheckReport.make(f"volume_element[t={slice_.t:g}]", max(square, rel), tol,
                            {"gamma^2-+1": square, "gamma^2_sign": 1 if plus <= minus else -1, rel_name: rel})


def check_charge_conjugation(q: SpectralQuadruple, tol: float = 1e-8) -> CheckReport:
    s = s_exponent(q.spacetime_dim)
    sign = (-1) ** s
    sq = operator_norm(q.C.square() - sign * identity(q.hilbert_dim))
    worst, worst_name = 0.0, None
    for name, u in q.groupoid.sample_unitaries():
        r = q.C.commutation_residual(u)
        if r >= worst:
            worst, worst_name = r, name
    return CheckReport.make("charge_conjugation", max(sq, worst), tol,
                            {"s(n)": s, "C^2-sign": sq, "[C,G]": worst, "worst_unitary": worst_name})


def check_groupoid(q: SpectralQuadruple, tol: float = 1e-8) -> CheckReport:
    """Unitarity of the groupoid: frames unitary, generators anti-Hermitian."""
    one = identity(q.hilbert_dim)
    parts = {}
    for t, w in sorted(q.groupoid.frames.items()):
        parts[f"frame[t={t:g}]"] = operator_norm(dagger(w) @ w - one)
    for name, x in q.groupoid.generators.items():
        parts[f"antiherm[{name}]"] = operator_norm(x + dagger(x)) / max(1.0, operator_norm(x))
    for t, s in sorted(q.slices.items()):
        if s.iH is not None:
            parts[f"antiherm[iH@t={t:g}]"] = operator_norm(s.iH + dagger(s.iH)) / max(1.0, operator_norm(s.iH))
    residual = max(parts.values(), default=0.0)
    return CheckReport.make("groupoid_unitarity", residual, tol, parts)


def first_order_residual(f, g, iH, c: AntilinearOperator, band=None) -> tuple[float, float]:
    """(band residual, full-space residual) of ``[[f, iH], g^op]``."""
    r = commutator(commutator(f, iH), opposite(c, g))
    full = operator_norm(r)
    return (operator_norm(_compress(r, band)) if band is not None else full), full


def check_first_order(q: SpectralQuadruple, f, g, iH, tol: float = 1e-8, band=None,
                      name: str = "first_order") -> CheckReport:
    res, full = first_order_residual(f, g, iH, q.C, band)
    meta = {"full_space_residual": full, "resolved_band": band is not None,
            "expected_scaling": "O(h)" if q.meta.get("scheme") == "central" else "round-off on band"}
    meta.update({k: q.meta[k] for k in ("grid_size", "scheme") if k in q.meta})
    return CheckReport.make(name, res, tol, meta)


def dtilde(slice_: TimeSlice, iH: np.ndarray, spacetime_dim: int) -> np.ndarray:
    if spacetime_dim % 2 == 0:
        return slice_.gamma @ commutator(iH, slice_.gamma)
    return iH


def hochschild_candidate(slice_: TimeSlice, cycle: HochschildCycle, iH, spacetime_dim: int) -> np.ndarray:
    dt = dtilde(slice_, iH, spacetime_dim)
    total = np.zeros_like(slice_.E)
    for w, ops in cycle.terms:
        term = ops[0]
        for op in ops[1:]:
            term = term @ commutator(dt, op)
        total = total + w * term
    if spacetime_dim % 2 == 0:
        total = slice_.E @ total
    return total


def hochschild_volume(slice_: TimeSlice, cycle: HochschildCycle, iH, spacetime_dim: int,
                      tol: float = 0.05, band=None) -> tuple[np.ndarray, CheckReport]:
    cand = hochschild_candidate(slice_, cycle, iH, spacetime_dim)
    scale = operator_norm(iH) * max(1, len(cycle.terms))
    if operator_norm(cand) <= 1e-12 * max(scale, 1.0):
        raise DegenerateCycleError("Hochschild candidate vanishes")
    band = slice_.band if band is None else band
    res = _normalized_distance(_compress(cand, band), _compress(slice_.gamma, band))
    meta = {"full_space_residual": _normalized_distance(cand, slice_.gamma), "resolved_band": band is not None}
    overlap = np.vdot(_compress(slice_.gamma, band), _compress(cand, band)).real
    meta["positive_multiple"] = bool(overlap > 0)
    return cand, CheckReport.make(f"hochschild_volume[t={slice_.t:g}]", res, tol, meta)


def fit_hochschild_cycle(slice_: TimeSlice, iH, spacetime_dim: int, basis: dict[str, np.ndarray]):
    """Least-squares weights for ``sum w_ab a [D~, b]`` (times ``E``) matching ``gamma``.

    Used when no closed-form cycle is known. Returns ``None`` when every
    candidate term vanishes.
    """
    names = list(basis)
    pairs = [(a, b) for a in names for b in names]
    cols = []
    for a, b in pairs:
        slot = HochschildCycle([(1.0, (basis[a], basis[b]))])
        cols.append(hochschild_candidate(slice_, slot, iH, spacetime_dim).ravel())
    m = np.stack(cols, axis=1)
    if not np.any(np.abs(m) > 1e-12):
        return None
    w, *_ = np.linalg.lstsq(m, slice_.gamma.ravel(), rcond=None)
    keep = [(float(x.real), (basis[a], basis[b])) for x, (a, b) in zip(w, pairs) if abs(x) > 1e-12]
    return HochschildCycle(keep) if keep else None


def spatial_dirac(slice_: TimeSlice, iH: np.ndarray) -> np.ndarray:
    """``D = E [H, E]`` with ``H = -i (iH)``."""
    h = -1j * iH
    return slice_.E @ commutator(h, slice_.E)


def check_geometry_of_space(slice_: TimeSlice, d: np.ndarray, spatial_dim: int,
                            tol: float = 1e-9) -> CheckReport:
    g = slice_.gamma
    parts = {"D-D^*": operator_norm(d - dagger(d))}
    parts["[gamma,A]"] = max((operator_norm(commutator(g, f)) for f in slice_.generators.values()), default=0.0)
    sign = (-1) ** spatial_dim
    parts["D gamma - (-1)^n gamma D"] = operator_norm(d @ g - sign * g @ d)
    meta = dict(parts)
    meta["||[D,f]||"] = {k: operator_norm(commutator(d, f)) for k, f in slice_.generators.items()}
    if (spatial_dim + 1) % 2 == 0:
        one = identity(d.shape[0])
        p_plus = (one - 1j * slice_.E) / 2
        p_minus = (one + 1j * slice_.E) / 2
        meta["eigenspaces_of_E"] = {
            "P+^2-P+": operator_norm(p_plus @ p_plus - p_plus),
            "P-^2-P-": operator_norm(p_minus @ p_minus - p_minus),
            "P++P--1": operator_norm(p_plus + p_minus - one),
            "||P+ D P+||": operator_norm(p_plus @ d @ p_plus),
            "||P- D P-||": operator_norm(p_minus @ d @ p_minus),
            "||P- D P+||": operator_norm(p_minus @ d @ p_plus),
            "||P+ D P-||": operator_norm(p_plus @ d @ p_minus),
        }
    return CheckReport.make(f"geometry_of_space[t={slice_.t:g}]", max(parts.values()), tol, meta)


def noncomm_floor(scale: float, mass: float | None, dt: float, norm_f: float, norm_g: float) -> float:
    m = 1.0 if mass is None else mass
    return scale * norm_f * norm_g * (m * abs(dt)) ** 3


def check_evolution(q: SpectralQuadruple, t0: float, t1: float,
                    config: ValidationConfig | None = None) -> tuple[CheckReport, CheckReport]:
    """Unitary equivalence of two slice algebras and their noncommutativity.

    Returns the equivalence report and the noncommutativity report. The latter
    has residual ``max(0, floor - witness)`` and tolerance 0, so it passes
    exactly when the witness reaches the floor (or the requirement is void).
    """
    config = config or ValidationConfig()
    s0, s1 = q.slices[t0], q.slices[t1]
    tag = f"[t={t0:g}->{t1:g}]"
    frames = q.groupoid.frames
    if t0 in frames and t1 in frames:
        u = dagger(frames[t0]) @ frames[t1]
    else:
        u = identity(q.hilbert_dim)
    defect = operator_norm(dagger(u) @ u - identity(q.hilbert_dim))
    equiv = 0.0
    for k, a0 in s0.generators.items():
        if k in s1.generators:
            equiv = max(equiv, operator_norm(dagger(u) @ a0 @ u - s1.generators[k]))
    equiv_report = CheckReport.make(f"evolution{tag}", max(equiv, defect), config.equivalence_tol,
                                    {"equivalence": equiv, "unitarity_defect": defect})

    band = s0.band
    witness, worst = 0.0, None
    trivial = all(_is_scalar(a) for a in s0.generators.values())
    floor = 0.0
    for (k0, a0), (k1, a1) in itertools.product(s0.generators.items(), s1.generators.items()):
        w = operator_norm(_compress(commutator(a0, a1), band))
        fl = noncomm_floor(config.noncomm_scale, q.mass, t1 - t0, operator_norm(a0), operator_norm(a1))
        if w >= witness:
            witness, worst, floor = w, (k0, k1), fl
    required = (t0 != t1) and not trivial and (q.mass is None or q.mass > 0)
    shortfall = max(0.0, floor - witness) if required else 0.0
    meta = {"witness": witness, "floor": floor, "pair": worst, "required": required,
            "resolved_band": band is not None}
    if trivial:
        meta["note"] = "trivial slice algebra: noncommutativity is vacuous"
    elif q.mass == 0:
        meta["note"] = "massless 1+1: slice functions stay commuting"
    return equiv_report, CheckReport.make(f"noncommutativity{tag}", shortfall, 0.0, meta)


def _is_scalar(a: np.ndarray) -> bool:
    c = np.trace(a) / a.shape[0]
    return operator_norm(a - c * identity(a.shape[0])) <= 1e-12 * max(1.0, abs(c))


def _span_residual(x: np.ndarray, basis: list[np.ndarray]) -> float:
    if not basis:
        return hs_norm(x)
    m = np.stack([b.ravel() for b in basis], axis=1)
    coef, *_ = np.linalg.lstsq(m, x.ravel(), rcond=None)
    return hs_norm(x.ravel() - m @ coef)


def check_symmetric(q: SpectralQuadruple, tol: float = 1e-10, samples=(0.3, 1.1)) -> CheckReport:
    gp = q.groupoid
    if gp.kind != LIE_SYMMETRIC:
        raise ValueError("check_symmetric needs a lie_symmetric groupoid")
    names = list(gp.generators)
    k = len(names)
    sc = np.zeros((k, k, k)) if gp.structure_constants is None else np.asarray(gp.structure_constants)
    if sc.shape != (k, k, k):
        raise StructureConstantError(f"structure constants must have shape {(k, k, k)}, got {sc.shape}")
    if not np.allclose(sc, -np.transpose(sc, (1, 0, 2))):
        raise StructureConstantError("structure constants must be antisymmetric in the first two indices")
    for c in gp.compact:
        if c not in gp.generators:
            raise StructureConstantError(f"compact generator {c!r} not among generators")
    xs = [gp.generators[n] for n in names]
    closure = 0.0
    for i, j in itertools.product(range(k), repeat=2):
        rhs = sum(sc[i, j, l] * xs[l] for l in range(k)) if k else 0
        closure = max(closure, operator_norm(commutator(xs[i], xs[j]) - rhs))
    comm_e = comm_g = preserve = 0.0
    for cname in gp.compact:
        x = gp.generators[cname]
        for s in q.slices.values():
            comm_e = max(comm_e, operator_norm(commutator(x, s.E)))
            comm_g = max(comm_g, operator_norm(commutator(x, s.gamma)))
            basis = [_compress(identity(q.hilbert_dim), s.band)] + [_compress(f, s.band) for f in s.generators.values()]
            for sv in samples:
                u = matrix_exponential(x, sv)
                for f in s.generators.values():
                    moved = _compress(u @ f @ dagger(u), s.band)
                    preserve = max(preserve, _span_residual(moved, basis) / max(hs_norm(moved), 1e-300))
    advisory_flag = False
    if gp.evolution is not None and gp.compact:
        ih = gp.generators[gp.evolution]
        res = _span_residual(ih, [gp.generators[c] for c in gp.compact])
        advisory_flag = bool(res <= 1e-9 * max(1.0, hs_norm(ih)))
    parts = {"closure": closure, "[k,E]": comm_e, "[k,gamma]": comm_g, "algebra_preservation": preserve}
    meta = dict(parts)
    meta["iH_in_compact_subalgebra"] = advisory_flag
    if advisory_flag:
        meta["advisory"] = "evolution generator lies in the compact subalgebra; geometry of space may fail"
    return CheckReport.make("symmetric", max(parts.values()), tol, meta, advisory=advisory_flag)


# --- orchestration ---------------------------------------------------------

def _pairs(gens: dict[str, np.ndarray], config: ValidationConfig) -> list[tuple[str, str]]:
    pairs = [(a, b) for a in gens for b in gens]
    if config.max_pairs is not None and len(pairs) > config.max_pairs:
        rng = np.random.default_rng(config.seed)
        idx = sorted(rng.choice(len(pairs), size=config.max_pairs, replace=False))
        pairs = [pairs[i] for i in idx]
    return pairs


def validate_slice(q: SpectralQuadruple, s: TimeSlice, config: ValidationConfig) -> list[CheckReport]:
    reports = [check_time_vector(s, config.algebraic_tol),
               check_volume_element(s, q.spacetime_dim, config.algebraic_tol)]
    tag = f"[t={s.t:g}]"
    if s.iH is None:
        return reports
    worst = None
    for a, b in _pairs(s.generators, config):
        r = check_first_order(q, s.generators[a], s.generators[b], s.iH, config.first_order_tol, s.band,
                              name=f"first_order{tag}")
        r.meta["pair"] = [a, b]
        if worst is None or r.residual >= worst.residual:
            worst = r
    if worst is None:
        worst = CheckReport.make(f"first_order{tag}", 0.0, config.first_order_tol, {"note": "no generators"})
    reports.append(worst)

    name = f"hochschild_volume{tag}"
    try:
        if q.cycle is not None:
            cycle = HochschildCycle.from_names(s, q.cycle)
        else:
            basis = {"1": identity(q.hilbert_dim), **s.generators}
            cycle = fit_hochschild_cycle(s, s.iH, q.spacetime_dim, basis)
            if cycle is None:
                raise DegenerateCycleError("every cycle term vanishes")
        _, rep = hochschild_volume(s, cycle, s.iH, q.spacetime_dim, config.hochschild_tol)
    except DegenerateCycleError as exc:
        rep = CheckReport.make(name, 2.0, config.hochschild_tol, {"error": str(exc)})
    reports.append(rep)

    d = spatial_dirac(s, s.iH)
    reports.append(check_geometry_of_space(s, d, q.spatial_dim, config.geometry_tol))
    return reports


def validate_all(q: SpectralQuadruple, config: ValidationConfig | None = None) -> list[CheckReport]:
    """Every applicable axiom check, in a fixed order."""
    config = config or ValidationConfig()
    reports: list[CheckReport] = []
    for t in q.times:
        reports.extend(validate_slice(q, q.slices[t], config))
    reports.append(check_charge_conjugation(q, config.charge_tol))
    reports.append(check_groupoid(q, config.unitarity_tol))
    times = q.times
    for t0, t1 in zip(times, times[1:]):
        reports.extend(check_evolution(q, t0, t1, config))
    if q.groupoid.kind == LIE_SYMMETRIC:
        reports.append(check_symmetric(q, config.symmetric_tol))
    for r in reports:
        for k in ("grid_size", "scheme"):
            if k in q.meta:
                r.meta.setdefault(k, q.meta[k])
    return reports


FAULTS = ("scaled_E", "broken_C", "nonunitary_U")


def inject_fault(q: SpectralQuadruple, kind: str, amount: float | None = None) -> SpectralQuadruple:
    """Copy of ``q`` with one corrupted axiom input.

    ``scaled_E`` multiplies every slice's ``E`` (default 1.1), ``broken_C``
    scales the matrix part of ``C`` (default 2) and ``nonunitary_U`` scales
    every groupoid frame (default 1.01).
    """
    if kind == "scaled_E":
        a = 1.1 if amount is None else amount
        slices = {t: replace(s, E=a * s.E) for t, s in q.slices.items()}
        return replace(q, slices=slices, meta={**q.meta, "fault": kind})
    if kind == "broken_C":
        a = 2.0 if amount is None else amount
        return replace(q, C=q.C.scaled(a), meta={**q.meta, "fault": kind})
    if kind == "nonunitary_U":
        a = 1.01 if amount is None else amount
        g = replace(q.groupoid, frames={t: a * w for t, w in q.groupoid.frames.items()})
        return replace(q, groupoid=g, meta={**q.meta, "fault": kind})
    raise ValueError(f"unknown fault {kind!r}; expected one of {FAULTS}")


def failed(reports: list[CheckReport]) -> list[str]:
    return [r.name for r in reports if not r.passed]


def all_passed(reports: list[CheckReport]) -> bool:
    return not failed(reports)
