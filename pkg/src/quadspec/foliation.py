"""Lattice Dirac Hamiltonian for a foliated 1+1 spacetime.

Space is a periodic lattice of ``grid_size`` points on the circle and the
state space is ``C^2 (spin) (x) C^grid_size`` with the spin index slowest, so
a spin matrix ``s`` acts as ``np.kron(s, I)``.

ADM conventions used throughout::

    ds^2 = -N^2 dt^2 + g (dtheta - N^theta dt)^2

States carry half-density weight ``chi = g**0.25 * psi`` so the flat lattice
dot product is the inner product and ``H`` is Hermitian. In these variables the
spin connection only contributes the symmetrisation of the first-order terms,
and the Hamiltonian reduces to::

    H = sigma_3 (1/2){c, p} - N m sigma_2 + (1/2){N^theta, p},
    c = N / sqrt(g),  p = -i d/dtheta.
"""
from __future__ import annotations

import functools
import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .opcore import DimensionError, NonFiniteError, dagger, identity, matrix_exponential, operator_norm

SIGMA_0 = np.eye(2, dtype=np.complex128)
SIGMA_1 = np.array([[0, 1], [1, 0]], dtype=np.complex128)
SIGMA_2 = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
SIGMA_3 = np.array([[1, 0], [0, -1]], dtype=np.complex128)

SCHEMES = ("spectral", "central")


@dataclass(frozen=True)
class CliffordRep:
    signature: tuple[float, ...]
    gammas: tuple[np.ndarray, ...]

    @property
    def rotation_generators(self) -> dict[tuple[int, int], np.ndarray]:
        """``Omega_jk = [gamma_j, gamma_k] / 4`` for spatial index pairs."""
        spatial = [i for i, s in enumerate(self.signature) if s > 0]
        out = {}
        for j in spatial:
            for k in spatial:
                gj, gk = self.gammas[j], self.gammas[k]
                out[(j, k)] = (gj @ gk - gk @ gj) / 4
        return out

    @property
    def time_gamma(self) -> np.ndarray:
        return self.gammas[0]

    def boost_generator(self) -> np.ndarray:
        """``gamma_0 gamma_1``, the spin generator of the 1+1 Lorentz algebra."""
        return self.gammas[0] @ self.gammas[1]


def clifford_1plus1() -> CliffordRep:
    g0 = np.array([[0, 1], [-1, 0]], dtype=np.complex128)
    g1 = np.array([[0, 1], [1, 0]], dtype=np.complex128)
    return CliffordRep(signature=(-1.0, 1.0), gammas=(g0, g1))


# --- lattice ---------------------------------------------------------------

def theta_grid(n: int) -> np.ndarray:
    return 2 * np.pi * np.arange(n) / n


@functools.lru_cache(maxsize=32)
def derivative_matrix(n: int, scheme: str = "spectral") -> np.ndarray:
    """Real antisymmetric matrix of d/dtheta on the periodic lattice (read-only).

    The spectral matrix differentiates trigonometric interpolants; the
    Nyquist mode of an even grid is mapped to zero.
    """
    d = _derivative_matrix(n, scheme)
    d.setflags(write=False)
    return d


def _derivative_matrix(n: int, scheme: str) -> np.ndarray:
    if scheme == "spectral":
        k = np.fft.fftfreq(n, d=1.0 / n)
        if n % 2 == 0:
            k[n // 2] = 0.0
        d = np.fft.ifft(1j * k[:, None] * np.fft.fft(np.eye(n), axis=0), axis=0).real
        return (d - d.T) / 2
    if scheme == "central":
        h = 2 * np.pi / n
        s = np.roll(np.eye(n), 1, axis=1)
        return (s - s.T) / (2 * h)
    raise ValueError(f"unknown derivative scheme {scheme!r}")


def lift(spin: np.ndarray, grid: np.ndarray) -> np.ndarray:
    return np.kron(spin, grid).astype(np.complex128)


def multiplication(values, spin: np.ndarray = SIGMA_0) -> np.ndarray:
    """Multiplication by a lattice field, optionally times a spin matrix."""
    return lift(spin, np.diag(np.asarray(values, dtype=np.complex128)))


def spin_operator(spin: np.ndarray, n: int) -> np.ndarray:
    return lift(spin, np.eye(n))


def fourier_band_projector(n: int, modes: int, spin_dim: int = 2) -> np.ndarray:
    """Orthogonal projector onto lattice Fourier modes ``|k| <= modes``."""
    k = np.fft.fftfreq(n, d=1.0 / n)
    keep = np.abs(k) <= modes
    if n % 2 == 0 and modes >= n // 2:
        keep[n // 2] = True
    f = np.fft.fft(np.eye(n), axis=0) / np.sqrt(n)
    p = dagger(f) @ np.diag(keep.astype(float)) @ f
    return np.kron(np.eye(spin_dim), p).astype(np.complex128)


def field_on_states(op: np.ndarray, n: int) -> np.ndarray:
    """Read the spin-matrix field of an operator from its action on constant spinors.

    For a multiplication operator ``M(theta)`` this returns ``M`` exactly, shape
    ``(n, 2, 2)``. Differential parts annihilate constants on the lattice.
    """
    dim = op.shape[0]
    spins = dim // n
    out = np.empty((n, spins, spins), dtype=np.complex128)
    ones = np.ones(n)
    for s in range(spins):
        e = np.zeros(spins)
        e[s] = 1.0
        col = (op @ np.kron(e, ones)).reshape(spins, n)
        out[:, :, s] = col.T
    return out


# --- ADM data ----------------------------------------------------------------

@dataclass(frozen=True)
class Field:
    """A scalar field ``f(t, theta)`` with optional analytic time derivative.

    ``spec`` is the JSON description the field was built from (``None`` for
    fields built from arbitrary callables, which cannot be serialised).
    """

    fn: Callable[[float, np.ndarray], np.ndarray]
    dfn: Callable[[float, np.ndarray], np.ndarray] | None = None
    spec: object = None
    static: bool = False

    def __call__(self, t: float, theta: np.ndarray) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.fn(t, theta), dtype=float), theta.shape).copy()

    def time_derivative(self, t: float, theta: np.ndarray, h: float = 1e-5) -> np.ndarray:
        if self.dfn is not None:
            return np.broadcast_to(np.asarray(self.dfn(t, theta), dtype=float), theta.shape).copy()
        return (self(t + h, theta) - self(t - h, theta)) / (2 * h)

    @classmethod
    def constant(cls, value: float) -> "Field":
        v = float(value)
        return cls(lambda t, th: np.full_like(th, v), lambda t, th: np.zeros_like(th), {"constant": v}, True)

    @classmethod
    def samples(cls, values) -> "Field":
        arr = np.asarray(values, dtype=float)

        def fn(t, th):
            if th.shape != arr.shape:
                raise DimensionError(f"sampled field has {arr.size} values, grid has {th.size}")
            return arr

        return cls(fn, lambda t, th: np.zeros_like(th), {"samples": arr.tolist()}, True)

    @classmethod
    def desitter_metric(cls) -> "Field":
        return cls(
            lambda t, th: np.full_like(th, math.cosh(t) ** 2),
            lambda t, th: np.full_like(th, 2 * math.cosh(t) * math.sinh(t)),
            "desitter",
        )


_ROLE_BUILTINS = {
    "lapse": {"desitter": 1.0, "flat": 1.0},
    "shift": {"desitter": 0.0, "flat": 0.0},
    "g_thth": {"flat": 1.0},
}


def parse_field(value, role: str) -> Field:
    """Parse a field description from config.

    Accepted forms: a number, ``"constant: x"``, ``{"constant": x}``,
    ``{"samples": [...]}``, or a builtin name (``"desitter"``, ``"flat"``).
    """
    if isinstance(value, Field):
        return value
    if isinstance(value, (int, float)):
        return Field.constant(value)
    if isinstance(value, dict):
        if "constant" in value:
            return Field.constant(value["constant"])
        if "samples" in value:
            return Field.samples(value["samples"])
        raise ValueError(f"field {role}: unrecognised description {value!r}")
    if isinstance(value, str):
        text = value.strip()
        if text.startswith("constant:"):
            return Field.constant(float(text.split(":", 1)[1]))
        if text.startswith("samples:"):
            return Field.samples(json.loads(text.split(":", 1)[1]))
        if role == "g_thth" and text == "desitter":
            return Field.desitter_metric()
        builtin = _ROLE_BUILTINS.get(role, {})
        if text in builtin:
            f = Field.constant(builtin[text])
            return Field(f.fn, f.dfn, text, True)
        raise ValueError(f"field {role}: unknown builtin {text!r}")
    raise ValueError(f"field {role}: cannot parse {value!r}")


@dataclass(frozen=True)
class FoliationData:
    grid_size: int
    lapse: Field
    shift: Field
    g_thth: Field
    mass: float = 0.0
    scheme: str = "spectral"

    def __post_init__(self):
        if self.grid_size < 1:
            raise ValueError("grid_size must be positive")
        if self.mass < 0:
            raise ValueError("mass must be nonnegative")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}")

    @property
    def theta(self) -> np.ndarray:
        return theta_grid(self.grid_size)

    @property
    def dim(self) -> int:
        return 2 * self.grid_size

    @property
    def is_static(self) -> bool:
        return self.lapse.static and self.shift.static and self.g_thth.static

    def fields_at(self, t: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        th = self.theta
        n, s, g = self.lapse(t, th), self.shift(t, th), self.g_thth(t, th)
        if not (np.all(np.isfinite(n)) and np.all(np.isfinite(s)) and np.all(np.isfinite(g))):
            raise ValueError(f"non-finite ADM data at t={t}")
        if np.any(n <= 0):
            raise ValueError(f"lapse must be positive (t={t})")
        if np.any(g <= 0):
            raise ValueError(f"spatial metric must be positive (t={t})")
        return n, s, g

    def zweibein(self, t: float) -> dict[str, np.ndarray]:
        """Frame components: ``e_theta^1 = sqrt(g)``, ``e_0`` the unit normal."""
        n, s, g = self.fields_at(t)
        return {"e_theta_1": np.sqrt(g), "e_t_0": n, "e_t_1": -np.sqrt(g) * s}

    def to_dict(self) -> dict:
        specs = {}
        for role in ("lapse", "shift", "g_thth"):
            spec = getattr(self, role).spec
            if spec is None:
                raise ValueError(f"field {role} was built from a callable and has no JSON form")
            specs[role] = spec
        return {"grid_size": self.grid_size, "mass": self.mass, "scheme": self.scheme, "fields": specs}

    @classmethod
    def from_dict(cls, d: dict) -> "FoliationData":
        fields = d.get("fields", {})
        return cls(
            grid_size=int(d["grid_size"]),
            lapse=parse_field(fields.get("lapse", 1.0), "lapse"),
            shift=parse_field(fields.get("shift", 0.0), "shift"),
            g_thth=parse_field(fields.get("g_thth", 1.0), "g_thth"),
            mass=float(d.get("mass", 0.0)),
            scheme=str(d.get("scheme", "spectral")),
        )


@dataclass(frozen=True)
class SpinConnectionData:
    """Torsion-free connection of the adapted zweibein.

    ``omega_t`` and ``omega_theta`` are the coordinate components of the single
    connection one-form ``omega^0_1``; ``omega_normal`` is its component along
    the unit normal. Spin-space parts are ``omega / 2 * gamma_0 gamma_1``.
    """

    omega_t: np.ndarray
    omega_theta: np.ndarray
    omega_normal: np.ndarray
    boost: np.ndarray = field(repr=False)

    @property
    def omega0_spin(self) -> np.ndarray:
        return 0.5 * self.omega_normal[:, None, None] * self.boost

    @property
    def omega_theta_spin(self) -> np.ndarray:
        return 0.5 * self.omega_theta[:, None, None] * self.boost


def spin_connection(fol: FoliationData, t: float, rep: CliffordRep | None = None) -> SpinConnectionData:
    rep = rep or clifford_1plus1()
    th = fol.theta
    n, s, g = fol.fields_at(t)
    a = np.sqrt(g)
    a_dot = fol.g_thth.time_derivative(t, th) / (2 * a)
    d = derivative_matrix(fol.grid_size, fol.scheme)
    # e^0 = N dt, e^1 = a (dtheta - s dt); solve de^a + omega^a_b ^ e^b = 0
    omega_theta = (a_dot + d @ (a * s)) / n
    omega_t = (d @ n) / a - omega_theta * s
    omega_normal = (d @ n) / (a * n)
    return SpinConnectionData(omega_t, omega_theta, omega_normal, rep.boost_generator())


def build_hamiltonian(fol: FoliationData, t: float, rep: CliffordRep | None = None) -> np.ndarray:
    if fol.grid_size < 4:
        raise ValueError("grid_size must be at least 4")
    rep = rep or clifford_1plus1()
    n_pts = fol.grid_size
    lapse, shift, g = fol.fields_at(t)
    d = derivative_matrix(n_pts, fol.scheme)

    def sym_p(coeff):
        # -i (coeff d + d coeff) / 2: Hermitian for real coeff
        m = np.diag(coeff)
        return -0.5j * (m @ d + d @ m)

    g0, g1 = rep.gammas
    spatial = rep.boost_generator()      # gamma_a gamma_b e_0^a e_theta^b g^{theta theta} -> sigma_3 / sqrt(g)
    mass_spin = 1j * g0                  # -i (-m gamma_0) = i m gamma_0 = -m sigma_2
    with np.errstate(over="ignore", invalid="ignore"):
        c = lapse / np.sqrt(g)
        h = lift(spatial, sym_p(c))
        h += lift(mass_spin, np.diag(fol.mass * lapse))
        if np.any(shift != 0):
            h += lift(SIGMA_0, sym_p(shift))
    if not np.all(np.isfinite(h)):
        raise NonFiniteError(f"Hamiltonian has non-finite entries at t={t}")
    return h


def time_vector(rep: CliffordRep | None, n: int) -> np.ndarray:
    """``E = gamma_a e_0^a`` in the adapted frame."""
    rep = rep or clifford_1plus1()
    return spin_operator(rep.time_gamma, n)


def volume_element(rep: CliffordRep | None, n: int) -> np.ndarray:
    """Grading anticommuting with ``E`` and with the spatial Dirac operator."""
    rep = rep or clifford_1plus1()
    return spin_operator(rep.gammas[1], n)


def cayley_step(h: np.ndarray, dt: float) -> np.ndarray:
    """``(I + i H dt/2)^-1 (I - i H dt/2)``, unitary for Hermitian ``H``."""
    one = identity(h.shape[0])
    a = one + 0.5j * dt * h
    b = one - 0.5j * dt * h
    return np.linalg.solve(a, b)


def evolve(fol: FoliationData, t0: float, t1: float, steps: int = 1,
           rep: CliffordRep | None = None, method: str = "cayley",
           static: bool = False) -> np.ndarray:
    """Propagator ``U(t0, t1)`` taking states at ``t0`` to ``t1``.

    Each step freezes ``H`` at the step midpoint and applies either the Cayley
    rule or the exact exponential of the frozen ``H``. With ``static=True`` the
    Hamiltonian is built once (valid for time-independent data only).
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if method not in ("cayley", "expm"):
        raise ValueError(f"unknown method {method!r}")
    if t0 == t1:
        return identity(fol.dim)
    dt = (t1 - t0) / steps

    def step(h):
        if method == "cayley":
            return cayley_step(h, dt)
        return matrix_exponential(h, -1j * dt)

    if static:
        return np.linalg.matrix_power(step(build_hamiltonian(fol, t0, rep)), steps)
    u = identity(fol.dim)
    for k in range(steps):
        u = step(build_hamiltonian(fol, t0 + (k + 0.5) * dt, rep)) @ u
    return u


def unitarity_defect(u: np.ndarray) -> float:
    return operator_norm(dagger(u) @ u - identity(u.shape[0]))


def transport(o: np.ndarray, u: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    """``U O U^dagger``."""
    o, u = np.asarray(o), np.asarray(u)
    if o.shape != u.shape:
        raise DimensionError(f"dimension mismatch: {o.shape} vs {u.shape}")
    defect = unitarity_defect(u)
    if defect > tol:
        raise ValueError(f"transport requires a unitary (defect {defect:.3g} > {tol:.3g})")
    return u @ o @ dagger(u)
