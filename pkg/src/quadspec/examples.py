"""Builders for the de Sitter and flat-cylinder quadruples, and a finite searcher."""
from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass

import numpy as np

from .foliation import (
    SIGMA_0,
    SIGMA_1,
    SIGMA_2,
    SIGMA_3,
    Field,
    FoliationData,
    build_hamiltonian,
    derivative_matrix,
    evolve,
    fourier_band_projector,
    lift,
    multiplication,
    time_vector,
    volume_element,
)
from .opcore import AntilinearOperator, dagger, identity, matrix_exponential
from .quadruple import (
    LIE_SYMMETRIC,
    ONE_PARAMETER,
    GroupoidSpec,
    SpectralQuadruple,
    TimeSlice,
    ValidationConfig,
    all_passed,
    validate_all,
)

DEFAULT_TIMES = (-0.5, 0.0, 0.5)
STEPS_PER_HALF_UNIT = 200
RESOLVED_MODES = 8
FOURIER_CYCLE = [("cos1", "sin1", 1.0), ("sin1", "cos1", -1.0)]


def fourier_generators(theta: np.ndarray, modes: int = 2) -> dict[str, np.ndarray]:
    gens = {}
    for k in range(1, modes + 1):
        gens[f"cos{k}"] = multiplication(np.cos(k * theta))
        gens[f"sin{k}"] = multiplication(np.sin(k * theta))
    return gens


def _lattice_quadruple(fol: FoliationData, frames: dict[float, np.ndarray], *, modes: int,
                       resolved_modes: int | None, groupoid: GroupoidSpec | None = None,
                       label: str) -> SpectralQuadruple:
    n = fol.grid_size
    base_gens = fourier_generators(fol.theta, modes)
    e, gam = time_vector(None, n), volume_element(None, n)
    if resolved_modes is not None:
        # generator products must stay clear of the zeroed Nyquist mode
        resolved_modes = max(1, min(resolved_modes, n // 2 - modes - 1))
    band = fourier_band_projector(n, resolved_modes) if resolved_modes is not None else None
    slices = {}
    ih_gens = {}
    for t, w in sorted(frames.items()):
        ih = 1j * build_hamiltonian(fol, t)
        base = TimeSlice(t, base_gens, e, gam, ih, band)
        s = base.transported(dagger(w))
        s.t = t
        slices[t] = s
        ih_gens[f"iH@t={t:g}"] = s.iH
    if groupoid is None:
        groupoid = GroupoidSpec(ONE_PARAMETER, generators=ih_gens, frames=dict(frames))
    return SpectralQuadruple(
        hilbert_dim=fol.dim,
        spacetime_dim=2,
        slices=slices,
        C=AntilinearOperator(identity(fol.dim)),
        groupoid=groupoid,
        mass=fol.mass,
        cycle=FOURIER_CYCLE,
        meta={"example": label, "grid_size": n, "scheme": fol.scheme, "resolved_modes": resolved_modes},
    )


def desitter_foliation(grid_size: int, m: float = 1.0, scheme: str = "spectral") -> FoliationData:
    return FoliationData(grid_size, Field.constant(1.0), Field.constant(0.0), Field.desitter_metric(),
                         mass=m, scheme=scheme)


def flat_foliation(R: float, m: float, grid_size: int, scheme: str = "spectral",
                   shift: float = 0.0) -> FoliationData:
    if R <= 0:
        raise ValueError("radius must be positive")
    return FoliationData(grid_size, Field.constant(1.0), Field.constant(shift), Field.constant(R * R),
                         mass=m, scheme=scheme)


def build_desitter(grid_size: int = 128, m: float = 1.0, scheme: str = "spectral",
                   times=DEFAULT_TIMES, steps_per_half_unit: int = STEPS_PER_HALF_UNIT,
                   modes: int = 2, resolved_modes: int | None = RESOLVED_MODES):
    """1+1 de Sitter: ``N = 1``, no shift, ``g = cosh(t)^2``; slices transported from ``t = 0``."""
    if grid_size < 8:
        raise ValueError("grid_size must be at least 8")
    fol = desitter_foliation(grid_size, m, scheme)
    frames = {}
    for t in times:
        steps = max(1, int(round(abs(t) * 2 * steps_per_half_unit)))
        frames[float(t)] = evolve(fol, 0.0, float(t), steps)
    return fol, _lattice_quadruple(fol, frames, modes=modes, resolved_modes=resolved_modes, label="desitter")


def build_flat_cylinder(R: float = 1.0, m: float = 0.0, grid_size: int = 128, scheme: str = "spectral",
                        times=DEFAULT_TIMES, modes: int = 2, resolved_modes: int | None = RESOLVED_MODES,
                        shift: float = 0.0, symmetric: bool = False):
    """Static cylinder of radius ``R``; evolution is the exact exponential of ``H``."""
    if grid_size < 4:
        raise ValueError("grid_size must be at least 4")
    fol = flat_foliation(R, m, grid_size, scheme, shift)
    h = build_hamiltonian(fol, 0.0)
    frames = {float(t): matrix_exponential(h, -1j * t) for t in times}
    groupoid = None
    if symmetric:
        rot = lift(SIGMA_0, derivative_matrix(grid_size, scheme))
        groupoid = GroupoidSpec(LIE_SYMMETRIC, generators={"iH": 1j * h, "rotation": rot}, frames=frames,
                                structure_constants=np.zeros((2, 2, 2)), compact=("rotation",),
                                evolution="iH")
    q = _lattice_quadruple(fol, frames, modes=modes, resolved_modes=resolved_modes, groupoid=groupoid,
                           label="flat_cylinder")
    return fol, q


@dataclass
class ExampleSpec:
    name: str = "desitter"
    mass: float = 1.0
    R: float = 1.0
    grid_size: int = 128
    scheme: str = "spectral"
    times: tuple[float, ...] = DEFAULT_TIMES
    shift: float = 0.0
    symmetric: bool = False

    def __post_init__(self):
        if self.name not in ("desitter", "flat_cylinder"):
            raise ValueError(f"unknown example {self.name!r}")
        if self.grid_size < 8 or self.R <= 0 or self.mass < 0:
            raise ValueError("example parameters out of range")
        self.times = tuple(float(t) for t in self.times)

    @classmethod
    def from_dict(cls, d: dict) -> "ExampleSpec":
        d = dict(d)
        if "m" in d:
            d["mass"] = d.pop("m")
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown example fields: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["times"] = list(self.times)
        return d

    def build(self):
        if self.name == "desitter":
            return build_desitter(self.grid_size, self.mass, self.scheme, self.times)
        return build_flat_cylinder(self.R, self.mass, self.grid_size, self.scheme, self.times,
                                   shift=self.shift, symmetric=self.symmetric)


# --- finite search -----------------------------------------------------------

@dataclass
class FiniteSearchConfig:
    hilbert_dim: int = 4
    spacetime_dim: int = 2
    attempts: int = 200
    seed: int = 0
    tolerance: float = 1e-9
    times: tuple[float, ...] = (0.0, 1.0)

    def __post_init__(self):
        if self.attempts < 1:
            raise ValueError("attempts must be >= 1")
        if self.hilbert_dim not in (2, 4, 8):
            raise ValueError("hilbert_dim must be 2, 4 or 8")
        if self.spacetime_dim != 2:
            raise NotImplementedError("the Clifford-block ansatz is implemented for spacetime dimension 2")
        if self.tolerance < 0:
            raise ValueError("tolerance must be nonnegative")
        self.times = tuple(float(t) for t in self.times)

    @classmethod
    def from_dict(cls, d: dict) -> "FiniteSearchConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown search fields: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["times"] = list(self.times)
        return d


_PAULI = {"I": SIGMA_0, "X": SIGMA_1, "Y": SIGMA_2, "Z": SIGMA_3}


def pauli_string(word: str) -> np.ndarray:
    """Kronecker product of Pauli matrices; the first letter is the spin factor."""
    out = np.ones((1, 1), dtype=np.complex128)
    for ch in word:
        out = np.kron(out, _PAULI[ch])
    return out


def _words(r: int) -> list[str]:
    return ["".join(w) for w in itertools.product("IXYZ", repeat=r)]


def _anticommutes(u: str, v: str) -> bool:
    return sum(a != "I" and b != "I" and a != b for a, b in zip(u, v)) % 2 == 1


def _factor_permutation(perm, r: int) -> np.ndarray:
    """Permutation matrix moving tensor factor ``i`` to position ``perm[i]``."""
    dim = 2 ** r
    m = np.zeros((dim, dim))
    for idx in range(dim):
        bits = [(idx >> (r - 1 - i)) & 1 for i in range(r)]
        new = [0] * r
        for i, b in enumerate(bits):
            new[perm[i]] = b
        m[int("".join(map(str, new)), 2), idx] = 1.0
    return m


def _random_factor_involution(rng, r: int) -> tuple[int, ...]:
    perm = list(range(r))
    order = rng.permutation(r)
    for a, b in zip(order[0::2], order[1::2]):
        if rng.random() < 0.5:
            perm[a], perm[b] = b, a
    return tuple(int(p) for p in perm)


def _candidate(cfg: FiniteSearchConfig, attempt: int) -> SpectralQuadruple:
    """One Clifford-block candidate on ``(C^2)^r``, ``r = log2(hilbert_dim)``.

    Factor 0 carries ``E = i sigma_2`` and ``gamma = sigma_1``. ``C`` is a
    random involutive permutation of tensor factors composed with complex
    conjugation, the algebra is generated by joint spectral projectors of
    commuting Pauli strings that commute with ``gamma``, and ``iH`` is a random
    real antisymmetric Pauli combination symmetrised so that ``C`` commutes
    with the evolution.
    """
    rng = np.random.default_rng([cfg.seed, attempt])
    r = int(round(math.log2(cfg.hilbert_dim)))
    words = _words(r)
    ident = "I" * r
    gamma_word = "X" + "I" * (r - 1)

    pool = [w for w in words if w != ident and not _anticommutes(w, gamma_word)]
    chosen: list[str] = []
    for w in rng.permutation(pool)[: int(rng.integers(0, 3))]:
        if all(not _anticommutes(w, c) for c in chosen):
            chosen.append(str(w))
    gens = {}
    if not chosen:
        gens["1"] = identity(cfg.hilbert_dim)
    for signs in itertools.product((1, -1), repeat=len(chosen)):
        if not chosen:
            break
        p = identity(cfg.hilbert_dim)
        for sgn, w in zip(signs, chosen):
            p = p @ (identity(cfg.hilbert_dim) + sgn * pauli_string(w)) / 2
        if np.abs(p).max() > 1e-12:
            label = ",".join(("+" if sgn > 0 else "-") + w for sgn, w in zip(signs, chosen))
            gens[f"P[{label}]"] = p.real.astype(np.complex128)

    perm = _random_factor_involution(rng, r)
    pi = _factor_permutation(perm, r)
    odd_y = [w for w in words if w.count("Y") % 2 == 1]
    a = np.zeros((cfg.hilbert_dim, cfg.hilbert_dim), dtype=np.complex128)
    terms = []
    for w in sorted(rng.choice(odd_y, size=min(len(odd_y), int(rng.integers(1, 4))), replace=False)):
        c = int(rng.choice((-1, 1)))
        a += c * 1j * pauli_string(str(w))
        terms.append((c, str(w)))
    a = (a + pi @ a @ pi.T) / 2

    e = 1j * pauli_string("Y" + "I" * (r - 1))
    gam = pauli_string(gamma_word)
    frames = {t: matrix_exponential(a, -t) for t in cfg.times}
    slices = {}
    for t, w in frames.items():
        s = TimeSlice(t, gens, e, gam, a).transported(dagger(w))
        s.t = t
        slices[t] = s
    groupoid = GroupoidSpec(ONE_PARAMETER, generators={"iH": a}, frames=frames)
    meta = {"example": "finite", "attempt": attempt, "algebra": chosen, "factor_swap": list(perm),
            "iH_terms": [[c, w] for c, w in terms]}
    return SpectralQuadruple(cfg.hilbert_dim, cfg.spacetime_dim, slices, AntilinearOperator(pi), groupoid,
                             mass=None, cycle=None, meta=meta)


def search_config(tolerance: float) -> ValidationConfig:
    tol = float(tolerance)
    return ValidationConfig(algebraic_tol=tol, unitarity_tol=tol, charge_tol=tol, first_order_tol=tol,
                            hochschild_tol=tol, geometry_tol=tol, equivalence_tol=tol, symmetric_tol=tol)


def finite_quadruple_search(cfg: FiniteSearchConfig) -> list[SpectralQuadruple]:
    """Random Clifford-block candidates that pass every check at ``cfg.tolerance``.

    Output is in attempt order and depends only on ``cfg``.
    """
    vcfg = search_config(cfg.tolerance)
    found = []
    for attempt in range(cfg.attempts):
        q = _candidate(cfg, attempt)
        if all_passed(validate_all(q, vcfg)):
            found.append(q)
    return found
