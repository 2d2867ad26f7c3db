"""Recover lapse, shift and spatial metric from commutators of slice functions.

In 1+1 dimensions with Heisenberg transport ``g_t = U^dagger g U``::

    [f, g_{t0+dt}] = THIRD_ORDER * m N^3 g^{theta theta} f' g' E dt^3 + O(dt^4)

(the second-order term carries the rotation generator, which vanishes with a
single spatial index), and::

    i[f, H] = -N sqrt(g^{theta theta}) f' gamma_0 gamma_1 - N^theta f'

Coefficients are read on constant spinors (:func:`field_on_states`), which
returns the multiplication part of a lattice operator exactly.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .foliation import (
    FoliationData,
    build_hamiltonian,
    clifford_1plus1,
    derivative_matrix,
    evolve,
    field_on_states,
    multiplication,
)
from .opcore import commutator, dagger, matrix_exponential

THIRD_ORDER = -2.0 / 3.0
DEFAULT_DTS = (-0.1, -0.08, -0.06, -0.04, -0.02, 0.02, 0.04, 0.06, 0.08, 0.1)
DERIV_FLOOR = 0.1
METHOD_LABEL = "operator projection on constant spinors"


class IllConditionedFit(ValueError):
    pass


def _e_spin() -> np.ndarray:
    return clifford_1plus1().time_gamma


def project_spin(fld: np.ndarray, direction: np.ndarray) -> np.ndarray:
    """Hilbert-Schmidt coefficient of a ``(n, 2, 2)`` field along ``direction``."""
    return np.einsum("ij,nij->n", np.conj(direction), fld) / np.vdot(direction, direction)


def strip_e(op: np.ndarray, n: int) -> np.ndarray:
    """Pointwise coefficient of ``op`` along ``E`` in spin space."""
    return project_spin(field_on_states(op, n), _e_spin()).real


@dataclass
class CommutatorSeries:
    f: np.ndarray
    g: np.ndarray
    t0: float
    dts: np.ndarray
    coefficients: dict[int, np.ndarray]
    fit_residual: float
    probe_fit_residual: float
    grid_size: int

    def probe_field(self, p: int) -> np.ndarray:
        return field_on_states(self.coefficients[p], self.grid_size)

    def probe_norm(self, p: int) -> float:
        """Sup over the lattice of the spin-matrix field of ``c_p``."""
        return float(np.abs(self.probe_field(p)).max())

    @property
    def c2(self):
        return self.coefficients[2]

    @property
    def c3(self):
        return self.coefficients[3]

    @property
    def c4(self):
        return self.coefficients[4]

    def conformal_only(self, rel: float = 1e-6) -> bool:
        """True when ``c2`` is the only nonvanishing low-order coefficient."""
        n2, n3 = self.probe_norm(2), self.probe_norm(3)
        scale = max(n2, n3, 1e-300)
        return n2 > rel * scale and n3 <= rel * scale


def _propagator(fol: FoliationData, t0: float, t1: float, steps: int) -> np.ndarray:
    if fol.is_static:
        return matrix_exponential(build_hamiltonian(fol, t0), -1j * (t1 - t0))
    return evolve(fol, t0, t1, steps, method="expm")


def commutator_series(fol: FoliationData, f, g, t0: float = 0.0, dts=DEFAULT_DTS, *,
                      max_power: int = 8, steps: int = 16) -> CommutatorSeries:
    """Fit ``[f_{t0}, g_{t0+dt}] = sum_{p=2..max_power} c_p dt^p`` entrywise.

    ``g`` is transported back to the ``t0`` slice. Static data use the exact
    exponential; otherwise ``steps`` exponential-midpoint steps per offset, so
    the integration error scales like ``dt^3 / steps^2`` and cannot leak a
    first-order term into the fit.
    """
    dts = np.asarray(dts, dtype=float)
    if dts.size < 4 or np.any(dts == 0) or np.unique(dts).size != dts.size:
        raise IllConditionedFit("need at least 4 distinct nonzero time offsets")
    max_power = min(max_power, dts.size + 1)
    powers = list(range(2, max_power + 1))
    design = np.stack([dts ** p for p in powers], axis=1)
    cond = np.linalg.cond(design)
    if not np.isfinite(cond) or cond > 1e12:
        raise IllConditionedFit(f"design matrix condition number {cond:.3g}")
    n = fol.grid_size
    fo = multiplication(f)
    go = multiplication(g)
    values = []
    for dt in dts:
        u = _propagator(fol, t0, t0 + dt, steps)
        g1 = dagger(u) @ go @ u
        values.append(commutator(fo, g1).ravel())
    values = np.array(values)
    coef, *_ = np.linalg.lstsq(design, values, rcond=None)
    resid = values - design @ coef
    dim = fo.shape[0]
    coefficients = {p: coef[i].reshape(dim, dim) for i, p in enumerate(powers)}
    probe_resid = max(float(np.abs(field_on_states(r.reshape(dim, dim), n)).max()) for r in resid)
    return CommutatorSeries(np.asarray(f, float), np.asarray(g, float), float(t0), dts, coefficients,
                            float(np.abs(resid).max()), probe_resid, n)


def lapse_shift_from_H(iH: np.ndarray, f, scheme: str = "spectral", deriv_floor: float = DERIV_FLOOR):
    """Pointwise ``c = N sqrt(g^{theta theta})`` and ``N^theta`` from ``i[f, H]``.

    Returns two masked arrays; points where ``|f'| <= deriv_floor * max|f'|``
    are masked.
    """
    f = np.asarray(f, dtype=float)
    n = f.size
    fp = derivative_matrix(n, scheme) @ f
    top = np.abs(fp).max()
    if top <= 1e-12 * max(1.0, np.abs(f).max()):
        raise ValueError("probe derivative vanishes everywhere")
    mask = np.abs(fp) <= deriv_floor * top
    # i[f, H] = [f, iH]
    fld = field_on_states(commutator(multiplication(f), iH), n)
    rep = clifford_1plus1()
    scalar = project_spin(fld, np.eye(2)).real
    spinor = project_spin(fld, rep.boost_generator()).real
    safe = np.where(mask, 1.0, fp)
    c = np.ma.masked_array(-spinor / safe, mask=mask)
    shift = np.ma.masked_array(-scalar / safe, mask=mask)
    return c, shift


@dataclass
class ReconstructionResult:
    theta: np.ndarray
    lapse: np.ma.MaskedArray
    ginv: np.ma.MaskedArray
    shift: np.ma.MaskedArray
    lapse_ref: np.ndarray | None = None
    ginv_ref: np.ndarray | None = None
    shift_ref: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def valid(self) -> np.ndarray:
        return ~(np.ma.getmaskarray(self.lapse) | np.ma.getmaskarray(self.ginv) | np.ma.getmaskarray(self.shift))

    def errors(self) -> dict[str, np.ndarray]:
        if self.lapse_ref is None:
            return {}
        return {
            "rel_error_lapse": np.abs(self.lapse.filled(np.nan) - self.lapse_ref) / np.abs(self.lapse_ref),
            "rel_error_ginv": np.abs(self.ginv.filled(np.nan) - self.ginv_ref) / np.abs(self.ginv_ref),
            "abs_error_shift": np.abs(self.shift.filled(np.nan) - self.shift_ref),
        }

    def max_errors(self) -> dict[str, float]:
        return {k: float(np.nanmax(v)) for k, v in self.errors().items()}

    COLUMNS = ("theta", "lapse", "ginv", "shift", "lapse_ref", "ginv_ref", "shift_ref",
               "rel_error_lapse", "rel_error_ginv", "abs_error_shift", "rel_error", "valid")

    def rows(self) -> list[dict]:
        errs = self.errors()
        out = []
        for i, th in enumerate(self.theta):
            ok = bool(self.valid[i])
            row = {"theta": float(th)}
            for k in ("lapse", "ginv", "shift"):
                row[k] = float(getattr(self, k).data[i]) if ok else None
            for k in ("lapse_ref", "ginv_ref", "shift_ref"):
                ref = getattr(self, k)
                row[k] = None if ref is None else float(ref[i])
            for k in ("rel_error_lapse", "rel_error_ginv", "abs_error_shift"):
                row[k] = float(errs[k][i]) if errs and ok else None
            row["rel_error"] = (max(row["rel_error_lapse"], row["rel_error_ginv"])
                                if errs and ok else None)
            row["valid"] = ok
            out.append(row)
        return out

    def to_dict(self) -> dict:
        return {"meta": self.meta, "max_errors": self.max_errors() if self.lapse_ref is not None else None,
                "rows": self.rows()}

    def to_csv(self, fmt=lambda x: format(x, ".17g")) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.COLUMNS)
        for row in self.rows():
            cells = []
            for k in self.COLUMNS:
                v = row[k]
                if v is None:
                    cells.append("")
                elif isinstance(v, bool):
                    cells.append(int(v))
                else:
                    cells.append(fmt(v))
            w.writerow(cells)
        return buf.getvalue()


def solve_lapse_metric(d, c):
    """``(N, g^{theta theta})`` from ``d = N^3 g^{tt}`` and ``c = N sqrt(g^{tt})``."""
    return d / c ** 2, c ** 6 / d ** 2


def _merge(candidates):
    """Pick, pointwise, the value whose probe weight is largest."""
    vals = np.stack([v for v, _ in candidates])
    weights = np.stack([w for _, w in candidates])
    pick = np.argmax(weights, axis=0)
    return np.take_along_axis(vals, pick[None], axis=0)[0], np.max(weights, axis=0)


def reconstruct_metric(fol: FoliationData, t0: float = 0.0, probes=None, dts=DEFAULT_DTS, *,
                       max_power: int = 8, steps: int = 16,
                       deriv_floor: float = DERIV_FLOOR) -> ReconstructionResult:
    """Lapse, inverse spatial metric and shift on the ``t0`` slice.

    ``probes`` is a list of ``(f, g)`` lattice-field pairs for the third-order
    term; each ``f`` is also used for the ``i[f, H]`` read-out. Defaults to
    ``(cos, cos)`` and ``(sin, sin)`` so every point is covered by some probe.
    """
    if fol.mass <= 0:
        raise ValueError("mass-dependent order vanishes for m = 0: only conformal data are accessible")
    th = fol.theta
    if probes is None:
        probes = [(np.cos(th), np.cos(th)), (np.sin(th), np.sin(th))]
    n = fol.grid_size
    dmat = derivative_matrix(n, fol.scheme)
    ih = 1j * build_hamiltonian(fol, t0)

    d_cands, c_cands, s_cands = [], [], []
    c2_rel = []
    for f, g in probes:
        f, g = np.asarray(f, float), np.asarray(g, float)
        fp, gp = dmat @ f, dmat @ g
        series = commutator_series(fol, f, g, t0, dts, max_power=max_power, steps=steps)
        w = np.abs(fp * gp)
        ok = w > deriv_floor * w.max()
        d = strip_e(series.c3, n) / (THIRD_ORDER * fol.mass * np.where(ok, fp * gp, 1.0))
        d_cands.append((np.where(ok, d, np.nan), np.where(ok, w / w.max(), -1.0)))
        c2_rel.append(series.probe_norm(2) / max(series.probe_norm(3), 1e-300))
        c, shift = lapse_shift_from_H(ih, f, fol.scheme, deriv_floor)
        wf = np.abs(fp) / np.abs(fp).max()
        c_cands.append((c.filled(np.nan), np.where(c.mask, -1.0, wf)))
        s_cands.append((shift.filled(np.nan), np.where(shift.mask, -1.0, wf)))

    d, wd = _merge(d_cands)
    c, wc = _merge(c_cands)
    shift, ws = _merge(s_cands)
    bad = (wd < 0) | (wc < 0) | ~np.isfinite(d) | ~np.isfinite(c) | (d <= 0) | (c <= 0)
    if np.all(bad):
        raise ValueError("no lattice point with positive d and c")
    dd, cc = np.where(bad, 1.0, d), np.where(bad, 1.0, c)
    lapse, ginv = solve_lapse_metric(dd, cc)
    lapse_ref, _, g = fol.fields_at(t0)
    shift_ref = fol.shift(t0, th)
    return ReconstructionResult(
        theta=th,
        lapse=np.ma.masked_array(lapse, mask=bad),
        ginv=np.ma.masked_array(ginv, mask=bad),
        shift=np.ma.masked_array(shift, mask=(ws < 0) | bad),
        lapse_ref=lapse_ref, ginv_ref=1.0 / g, shift_ref=shift_ref,
        meta={"method": METHOD_LABEL, "t0": t0, "mass": fol.mass, "grid_size": n, "scheme": fol.scheme,
              "dts": list(map(float, dts)), "max_power": max_power,
              "third_order_coefficient": THIRD_ORDER, "c2_over_c3": max(c2_rel)},
    )
