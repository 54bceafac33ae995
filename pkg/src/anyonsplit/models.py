"""Anyon models: the validated bundle of fusion rules, F-symbols and modular data.

Built-in models are Ising, Fibonacci and SU(2)_k. Twists of the built-ins are
taken from the standard literature values and are inputs, not derived; the
S-matrix is derived from twists and fusion rules with the ribbon formula::

    S_ab = (1/D) sum_c N_{abar b}^c theta_c / (theta_a theta_b) d_c

and the monodromy scalar is ``M_ab = S_ab S_II / (S_Ia S_Ib)``.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from itertools import product
from typing import Mapping, Sequence

import numpy as np

from .errors import AnyonModelError, UnsupportedOperationError
from .fsymbols import (DEFAULT_TOL, FSymbolTable, UnitarityReport, verify_pentagon,
                       verify_unitarity)
from .fusion import (Charge, FusionRules, QuantumDimensions, consistency_residual,
                     quantum_dimensions)

__all__ = [
    'AnyonModel', 'ValidationReport', 'make_ising', 'make_fibonacci', 'make_su2k',
    'derive_s_matrix', 'monodromy_scalar', 'builtin_model', 'BUILTIN_NAMES', 'su2k_label',
]

BUILTIN_NAMES = ('ising', 'fibonacci', 'su2k')


@dataclass
class ValidationReport:
    """Residuals from a full model check; ``failures`` names each failed invariant."""
    pentagon_max_residual: float
    pentagon_violations: int
    unitarity_max_deviation: float
    unitarity_violations: int
    dimension_residual: float
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


@dataclass(frozen=True, eq=False)
class AnyonModel:
    """A unitary fusion category with optional braiding data.

    Use :meth:`build` (or the ``make_*`` constructors) rather than the raw
    constructor; it derives the quantum dimensions and runs the validation.
    ``twists`` and ``s_matrix`` are indexed like ``rules.charges``.
    """
    name: str
    rules: FusionRules
    dims: QuantumDimensions
    f: FSymbolTable = field(repr=False)
    twists: tuple[complex, ...] | None = field(default=None, repr=False)
    s_matrix: np.ndarray | None = field(default=None, repr=False)
    provenance: Mapping[str, str] = field(default_factory=dict, repr=False)

    @classmethod
    def build(cls, name: str, rules: FusionRules, f_entries, *,
              twists: Sequence[complex] | None = None,
              s_matrix=None, dims: Sequence[float] | None = None,
              provenance: Mapping[str, str] | None = None,
              tol: float = DEFAULT_TOL, validate: bool = True) -> 'AnyonModel':
        """Assemble and validate a model.

        Supplied `dims` are only cross-checked against the Perron-Frobenius
        values. With `validate` set, any failed invariant raises
        :class:`AnyonModelError` whose message names it.
        """
        computed = quantum_dimensions(rules)
        if dims is not None:
            dims = np.asarray(dims, dtype=float)
            if dims.shape != (rules.n,):
                raise AnyonModelError('dims must list one value per charge')
            worst = float(np.max(np.abs(dims - computed.as_array())))
            if worst > 1e-8:
                raise AnyonModelError(
                    f'supplied quantum dimensions disagree with fusion rules (max diff {worst:.3e})')
        table = f_entries if isinstance(f_entries, FSymbolTable) \
            else FSymbolTable(rules, f_entries, tol)
        if twists is not None:
            twists = tuple(complex(t) for t in twists)
            if len(twists) != rules.n:
                raise AnyonModelError('twists must list one value per charge')
        if s_matrix is not None:
            s_matrix = np.array(s_matrix, dtype=complex)
            s_matrix.setflags(write=False)
        model = cls(name, rules, computed, table, twists, s_matrix, dict(provenance or {}))
        if validate:
            report = model.validate(tol)
            if not report.ok:
                raise AnyonModelError(f'model {name!r} failed validation: ' + '; '.join(report.failures))
        return model

    @property
    def charges(self) -> tuple[str, ...]:
        return self.rules.charges

    @property
    def vacuum(self) -> int:
        return self.rules.vacuum

    def index(self, charge: Charge) -> int:
        return self.rules.index(charge)

    def d(self, charge: Charge) -> float:
        return self.dims[self.index(charge)]

    @property
    def has_braiding_data(self) -> bool:
        return self.twists is not None or self.s_matrix is not None

    def s(self) -> np.ndarray:
        """The S-matrix: the stored one if present, else derived from the twists."""
        if self.s_matrix is not None:
            return self.s_matrix
        return self._derived_s

    @cached_property
    def _derived_s(self) -> np.ndarray:
        S = derive_s_matrix(self)
        S.setflags(write=False)
        return S

    def is_modular(self, tol: float = 1e-10) -> bool:
        S = self.s()
        return bool(np.max(np.abs(S @ S.conj().T - np.eye(len(S)))) < tol)

    @cached_property
    def unitarity(self) -> UnitarityReport:
        """Unitarity report of the F table at the table's own tolerance (cached)."""
        return verify_unitarity(self.f)

    def validate(self, tol: float = DEFAULT_TOL) -> ValidationReport:
        """Run every invariant check and collect the residuals."""
        pent = verify_pentagon(self.f, tol)
        unit = verify_unitarity(self.f, tol)
        if tol == self.f.tol:
            self.__dict__['unitarity'] = unit
        dres = consistency_residual(self.rules, self.dims.as_array())
        report = ValidationReport(pent.max_residual, len(pent.violations),
                                  unit.max_deviation, len(unit.violations), dres)
        if unit.violations:
            v = unit.violations[0]
            report.failures.append(
                f'unitarity: {len(unit.violations)} block(s) not unitary, first '
                f'[F^{{{v["a"]},{v["b"]},{v["c"]}}}_{v["d"]}] deviation {v["deviation"]:.3e}')
        if pent.violations:
            v = pent.violations[0]
            report.failures.append(
                f'pentagon: {len(pent.violations)} instance(s) fail, first '
                f'(a,b,c,d->x)=({v["a"]},{v["b"]},{v["c"]},{v["d"]}->{v["x"]}) '
                f'residual {v["residual"]:.3e}')
        if dres > 1e-10 * max(1.0, max(self.dims.values) ** 2):
            report.failures.append(f'quantum dimensions: residual {dres:.3e}')
        if self.twists is not None:
            bad = [self.charges[i] for i, t in enumerate(self.twists) if abs(abs(t) - 1) > tol]
            if bad:
                report.failures.append(f'twists: |theta| != 1 for {bad[0]}')
            if abs(self.twists[self.vacuum] - 1) > tol:
                report.failures.append('twists: vacuum twist is not 1')
        if self.s_matrix is not None or self.twists is not None:
            report.failures.extend(_check_s_matrix(self, tol))
        return report


def _check_s_matrix(model: AnyonModel, tol: float) -> list[str]:
    n = model.rules.n
    try:
        S = model.s()
    except (ZeroDivisionError, UnsupportedOperationError) as exc:  # pragma: no cover
        return [f's-matrix: {exc}']
    if S.shape != (n, n):
        return [f's-matrix: shape {S.shape}, expected {(n, n)}']
    out = []
    if np.max(np.abs(S - S.T)) > tol:
        out.append('s-matrix: not symmetric')
    I = model.vacuum
    d = model.dims.as_array()
    if np.max(np.abs(S[I] - d * S[I, I])) > tol:
        out.append('s-matrix: vacuum row is not proportional to quantum dimensions')
    return out


# -- modular data -------------------------------------------------------------

def derive_s_matrix(model: AnyonModel) -> np.ndarray:
    """S-matrix from the twists via the ribbon formula.

    Raises :class:`UnsupportedOperationError` when the model has no twists.
    """
    if model.twists is None:
        raise UnsupportedOperationError(f'model {model.name!r} has no twists; cannot derive S')
    rules = model.rules
    theta = np.array(model.twists)
    d = model.dims.as_array()
    Nbar = rules.N[list(rules.dual)]
    S = np.einsum('abc,c->ab', Nbar, theta * d) / np.outer(theta, theta)
    return S / model.dims.total


def monodromy_scalar(model: AnyonModel, z: Charge, c: Charge) -> complex:
    """``M_zc = S_zc S_II / (S_Iz S_Ic)``."""
    if not model.has_braiding_data:
        raise UnsupportedOperationError(f'model {model.name!r} has no S-matrix or twists')
    S = model.s()
    z, c = model.index(z), model.index(c)
    I = model.vacuum
    denom = S[I, z] * S[I, c]
    if denom == 0:
        raise UnsupportedOperationError('S-matrix has a vanishing vacuum-row entry')
    return complex(S[z, c] * S[I, I] / denom)


# -- F-symbol helpers ------------------------------------------------------------

def _trivial_entries(rules: FusionRules, value=1.0):
    """Every admissible multiplicity-free entry set to `value`."""
    entries = {}
    P = rules.products
    n = rules.n
    for a, b, c in product(range(n), repeat=3):
        for e in P(a, b):
            for d in P(e, c):
                for f in P(b, c):
                    if rules.N[a, f, d]:
                        entries[a, b, c, d, e, 1, 1, f, 1, 1] = value
    return entries


# -- built-in models -------------------------------------------------------------

@lru_cache(maxsize=None)
def make_ising() -> AnyonModel:
    """Ising anyons ``{I, sigma, psi}``: ``sigma x sigma = I + psi``."""
    charges = ('I', 'sigma', 'psi')
    rules = FusionRules.from_entries(
        charges, 'I', {c: c for c in charges},
        [('I', 'I', 'I', 1), ('I', 'sigma', 'sigma', 1), ('I', 'psi', 'psi', 1),
         ('sigma', 'sigma', 'I', 1), ('sigma', 'sigma', 'psi', 1),
         ('sigma', 'psi', 'sigma', 1), ('psi', 'psi', 'I', 1)],
        symmetrize=True)
    I, s, p = 0, 1, 2
    F = _trivial_entries(rules)
    h = 1 / math.sqrt(2)
    for e, f in product((I, p), repeat=2):
        F[s, s, s, s, e, 1, 1, f, 1, 1] = -h if e == p and f == p else h
    F[s, p, s, p, s, 1, 1, s, 1, 1] = -1.0
    F[p, s, p, s, s, 1, 1, s, 1, 1] = -1.0
    twists = (1, cmath.exp(1j * math.pi / 8), -1)
    return AnyonModel.build('ising', rules, F, twists=twists, provenance={
        'f': 'standard real gauge: F^{sss}_s = H/sqrt2, F^{sps}_p = F^{psp}_s = -1',
        'twists': 'literature values theta_sigma = exp(i pi/8), theta_psi = -1',
    })


@lru_cache(maxsize=None)
def make_fibonacci() -> AnyonModel:
    """Fibonacci anyons ``{I, eps}``: ``eps x eps = I + eps``."""
    charges = ('I', 'eps')
    rules = FusionRules.from_entries(
        charges, 'I', {c: c for c in charges},
        [('I', 'I', 'I', 1), ('I', 'eps', 'eps', 1), ('eps', 'eps', 'I', 1), ('eps', 'eps', 'eps', 1)],
        symmetrize=True)
    t = 1
    phi = (1 + math.sqrt(5)) / 2
    F = _trivial_entries(rules)
    F[t, t, t, t, 0, 1, 1, 0, 1, 1] = 1 / phi
    F[t, t, t, t, 0, 1, 1, t, 1, 1] = phi ** -0.5
    F[t, t, t, t, t, 1, 1, 0, 1, 1] = phi ** -0.5
    F[t, t, t, t, t, 1, 1, t, 1, 1] = -1 / phi
    twists = (1, cmath.exp(4j * math.pi / 5))
    return AnyonModel.build('fibonacci', rules, F, twists=twists, provenance={
        'f': 'standard real gauge: F^{eee}_e = [[1/phi, phi^-1/2], [phi^-1/2, -1/phi]]',
        'twists': 'literature value theta_eps = exp(4 pi i/5)',
    })


def su2k_label(jj: int) -> str:
    """Label for spin ``jj/2``: ``'0'``, ``'1/2'``, ``'1'``, ..."""
    return str(jj // 2) if jj % 2 == 0 else f'{jj}/2'


class _QNumbers:
    """Quantum integers ``[n] = sin(n pi/(k+2)) / sin(pi/(k+2))`` and factorials."""

    def __init__(self, k: int):
        self.k = k
        x = math.pi / (k + 2)
        self.q = [math.sin(n * x) / math.sin(x) for n in range(2 * k + 8)]
        fac = [1.0]
        for n in range(1, len(self.q)):
            fac.append(fac[-1] * self.q[n])
        self.fac = fac

    def delta(self, a, b, c):
        # a, b, c are doubled spins
        return math.sqrt(self.fac[(a + b - c) // 2] * self.fac[(a - b + c) // 2]
                         * self.fac[(-a + b + c) // 2] / self.fac[(a + b + c) // 2 + 1])

    def admissible(self, a, b, c):
        return (abs(a - b) <= c <= a + b and (a + b + c) % 2 == 0 and a + b + c <= 2 * self.k)

    def sixj(self, a, b, e, c, d, f):
        """q-deformed 6j symbol ``{a b e; c d f}`` (doubled spins, Racah form)."""
        triads = ((a, b, e), (a, d, f), (c, b, f), (c, d, e))
        if not all(self.admissible(*t) for t in triads):
            return 0.0
        fac = self.fac
        lo = max(sum(t) for t in triads) // 2
        hi = min(a + b + c + d, b + e + d + f, e + a + f + c) // 2
        total = 0.0
        for z in range(lo, hi + 1):
            denom = 1.0
            for t in triads:
                denom *= fac[z - sum(t) // 2]
            denom *= (fac[(a + b + c + d) // 2 - z] * fac[(b + e + d + f) // 2 - z]
                      * fac[(e + a + f + c) // 2 - z])
            total += (-1) ** z * fac[z + 1] / denom
        pref = 1.0
        for t in triads:
            pref *= self.delta(*t)
        return pref * total


@lru_cache(maxsize=None)
def make_su2k(k: int) -> AnyonModel:
    """SU(2)_k anyons, spins ``0, 1/2, ..., k/2``.

    F-symbols are q-deformed 6j symbols at ``q = exp(i pi/(k+2))`` in the
    standard real gauge::

        [F^{j1 j2 j3}_j]_{j12, j23}
            = (-1)^(j1+j2+j3+j) sqrt([2 j12 + 1][2 j23 + 1]) {j1 j2 j12; j3 j j23}_q
    """
    if isinstance(k, bool) or not isinstance(k, (int, np.integer)) or k < 1:
        raise ValueError(f'level k must be an integer >= 1, got {k!r}')
    k = int(k)
    n = k + 1
    charges = tuple(su2k_label(jj) for jj in range(n))
    N = np.zeros((n, n, n), dtype=np.int64)
    for a, b in product(range(n), repeat=2):
        for c in range(abs(a - b), min(a + b, 2 * k - a - b) + 1, 2):
            N[a, b, c] = 1
    rules = FusionRules(charges, 0, tuple(range(n)), N)
    qn = _QNumbers(k)
    F = {}
    P = rules.products
    for a, b, c in product(range(n), repeat=3):
        for e in P(a, b):
            for d in P(e, c):
                for f in P(b, c):
                    if not N[a, f, d]:
                        continue
                    sign = -1.0 if ((a + b + c + d) // 2) % 2 else 1.0
                    val = sign * math.sqrt(qn.q[e + 1] * qn.q[f + 1]) * qn.sixj(a, b, e, c, d, f)
                    F[a, b, c, d, e, 1, 1, f, 1, 1] = val
    twists = tuple(cmath.exp(2j * math.pi * (jj / 2) * (jj / 2 + 1) / (k + 2)) for jj in range(n))
    return AnyonModel.build(f'su2k_{k}', rules, F, twists=twists, provenance={
        'f': 'q-deformed 6j symbols, q = exp(i pi/(k+2)), real gauge with (-1)^(j1+j2+j3+j) sign',
        'twists': 'literature values theta_j = exp(2 pi i j(j+1)/(k+2))',
        'gauge': 'alternative sign conventions for SU(2)_k F-symbols exist; this one '
                 'reproduces [F^{1/2 e 1/2}_c] = [[1, 1], [1, -1/d_1]]',
    })


def builtin_model(name: str, k: int | None = None) -> AnyonModel:
    """Look up a built-in model by CLI name (``ising``, ``fibonacci``, ``su2k``)."""
    name = name.lower()
    if name == 'ising':
        return make_ising()
    if name == 'fibonacci':
        return make_fibonacci()
    if name == 'su2k':
        if k is None:
            raise ValueError('su2k needs a level k')
        return make_su2k(k)
    raise KeyError(f'unknown built-in model {name!r}; choose from {", ".join(BUILTIN_NAMES)}')
