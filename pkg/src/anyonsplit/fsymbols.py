"""F-symbol storage, the F-move and its "horizontal" variant, and coherence checks.

Index convention
----------------
An entry ``(a, b, c, d, e, alpha, beta, f, mu, nu)`` stores
``[F^{abc}_d]_{(e, alpha, beta)(f, mu, nu)}``, the coefficient relating the
left-associated tree ``((a b)_e c)_d`` to the right-associated tree
``(a (b c)_f)_d``::

    |((a b)_e^alpha c)_d^beta> = sum_{f,mu,nu} F[...] |(a (b c)_f^mu)_d^nu>

with vertices ``alpha: a x b -> e``, ``beta: e x c -> d``,
``mu: b x c -> f`` and ``nu: a x f -> d``.

Pentagon identity
-----------------
For four charges ``a, b, c, d`` fusing to ``x`` we compare the two ways of
re-associating ``(((a b)_p c)_q d)_x`` into ``(a (b (c d)_r)_s)_x``::

    sum_{beta2} [F^{pcd}_x]_{(q,a2,a3)(r,b1,beta2)} [F^{abr}_x]_{(p,a1,beta2)(s,g1,g2)}
      = sum_{t,d1,d2,e1} [F^{abc}_q]_{(p,a1,a2)(t,d1,d2)} [F^{atd}_x]_{(q,d2,a3)(s,e1,g2)}
                         [F^{bcd}_s]_{(t,d1,e1)(r,b1,g1)}

The left side is the two-move path, the right side the three-move path;
:func:`verify_pentagon` evaluates both for every admissible labelling.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from types import MappingProxyType
from typing import Iterator, Mapping

import numpy as np

from .errors import AnyonModelError
from .fusion import Charge, FusionRules, QuantumDimensions

__all__ = [
    'DEFAULT_TOL', 'FKey', 'FSymbolTable', 'FBlock', 'PentagonReport', 'UnitarityReport',
    'f_move', 'f_general', 'f_aeb_from_f', 'verify_pentagon', 'verify_unitarity',
]

DEFAULT_TOL = 1e-9

#: (a, b, c, d, e, alpha, beta, f, mu, nu), charges as integer indices
FKey = tuple[int, int, int, int, int, int, int, int, int, int]


@dataclass(frozen=True)
class FBlock:
    """A matrix together with the labels of its row and column basis vectors.

    Each basis label is ``(charge, m1, m2)``: an intermediate charge and the
    two 1-based vertex indices attached to it. An empty block (shape ``(0, 0)``)
    signals that no admissible fusion tree exists.
    """
    matrix: np.ndarray
    rows: tuple[tuple[int, int, int], ...]
    cols: tuple[tuple[int, int, int], ...]

    @property
    def empty(self) -> bool:
        return self.matrix.size == 0

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape


class FSymbolTable:
    """Sparse map from F-symbol keys to complex values.

    Absent keys evaluate to zero. Keys whose vertices violate the fusion rules
    are rejected at construction, so the stored support is always admissible.
    The table is read-only; :meth:`with_entry` and :meth:`scaled` return
    modified copies.
    """

    def __init__(self, rules: FusionRules, entries: Mapping[FKey, complex],
                 tol: float = DEFAULT_TOL):
        self.rules = rules
        self.tol = float(tol)
        clean = {}
        for key, value in entries.items():
            key = tuple(int(k) for k in key)
            if len(key) != 10:
                raise AnyonModelError(f'F-symbol key must have 10 components, got {key}')
            if not self.is_admissible(key):
                raise AnyonModelError(f'F-symbol entry {self.describe(key)} violates the fusion rules')
            clean[key] = complex(value)
        self._entries = MappingProxyType(clean)
        self._scalar = None
        self._lookup = None
        self._blocks6 = None

    # -- basic access ---------------------------------------------------------

    @property
    def entries(self) -> Mapping[FKey, complex]:
        return self._entries

    def __len__(self):
        return len(self._entries)

    def __iter__(self) -> Iterator[FKey]:
        return iter(sorted(self._entries))

    def value(self, *key) -> complex:
        """``[F^{abc}_d]_{(e,alpha,beta)(f,mu,nu)}``, zero when absent."""
        return self._entries.get(tuple(key), 0j)

    def is_admissible(self, key) -> bool:
        a, b, c, d, e, al, be, f, mu, nu = key
        n = self.rules.n
        if not all(0 <= x < n for x in (a, b, c, d, e, f)):
            return False
        N = self.rules.N
        return (1 <= al <= N[a, b, e] and 1 <= be <= N[e, c, d]
                and 1 <= mu <= N[b, c, f] and 1 <= nu <= N[a, f, d])

    def describe(self, key) -> str:
        a, b, c, d, e, al, be, f, mu, nu = key
        lab = self.rules.charges if all(0 <= x < self.rules.n for x in (a, b, c, d, e, f)) \
            else [str(i) for i in range(max(key) + 1)]
        return (f'[F^{{{lab[a]},{lab[b]},{lab[c]}}}_{lab[d]}]'
                f'_({lab[e]},{al},{be})({lab[f]},{mu},{nu})')

    def _copy(self, entries):
        # entries already admissible; skip the per-key checks
        new = object.__new__(FSymbolTable)
        new.rules, new.tol = self.rules, self.tol
        new._entries = MappingProxyType(entries)
        new._scalar = new._lookup = new._blocks6 = None
        return new

    def with_entry(self, key: FKey, value: complex) -> 'FSymbolTable':
        key = tuple(int(k) for k in key)
        if len(key) != 10 or not self.is_admissible(key):
            raise AnyonModelError(f'F-symbol entry {key} violates the fusion rules')
        value = complex(value)
        entries = dict(self._entries)
        entries[key] = value
        new = self._copy(entries)
        if self._scalar is not None and key[5] == key[6] == key[8] == key[9] == 1:
            # patch the derived caches instead of rebuilding them
            k6 = key[:5] + key[7:8]
            new._scalar = dict(self._scalar)
            new._scalar[k6] = value
            if self._lookup is not None:
                new._lookup = self._lookup.updated(k6, value)
        return new

    def scaled(self, factor: complex) -> 'FSymbolTable':
        return self._copy({k: complex(v * factor) for k, v in self._entries.items()})

    # -- bases ----------------------------------------------------------------

    def left_basis(self, a: int, b: int, c: int, d: int) -> list[tuple[int, int, int]]:
        """Basis ``(e, alpha, beta)`` of trees ``((a b)_e c)_d``."""
        N = self.rules.N
        return [(e, al, be) for e in self.rules.products(a, b)
                for al in range(1, N[a, b, e] + 1) for be in range(1, N[e, c, d] + 1)]

    def right_basis(self, a: int, b: int, c: int, d: int) -> list[tuple[int, int, int]]:
        """Basis ``(f, mu, nu)`` of trees ``(a (b c)_f)_d``."""
        N = self.rules.N
        return [(f, mu, nu) for f in self.rules.products(b, c)
                for mu in range(1, N[b, c, f] + 1) for nu in range(1, N[a, f, d] + 1)]

    def _scalar_map(self) -> dict:
        """6-index map for multiplicity-free tables (vertex indices dropped)."""
        if self._scalar is None:
            self._scalar = {(k[0], k[1], k[2], k[3], k[4], k[7]): v for k, v in self._entries.items()}
        return self._scalar

    def _scalar_lookup(self) -> '_Lookup':
        if self._lookup is None:
            self._lookup = _Lookup(self._scalar_map(), self.rules.n)
        return self._lookup

    def _block6(self, a, b, c, d, e, f) -> np.ndarray:
        """Array over ``(alpha, beta, mu, nu)`` for fixed charges (0-based)."""
        if self._blocks6 is None:
            self._blocks6 = {}
        key = (a, b, c, d, e, f)
        arr = self._blocks6.get(key)
        if arr is None:
            N = self.rules.N
            arr = np.zeros((N[a, b, e], N[e, c, d], N[b, c, f], N[a, f, d]), dtype=complex)
            for idx in product(*(range(s) for s in arr.shape)):
                al, be, mu, nu = idx
                arr[idx] = self._entries.get((a, b, c, d, e, al + 1, be + 1, f, mu + 1, nu + 1), 0j)
            self._blocks6[key] = arr
        return arr


def _idx(rules: FusionRules, *charges: Charge) -> list[int]:
    return [rules.index(x) for x in charges]


def f_move(table: FSymbolTable, a: Charge, b: Charge, c: Charge, d: Charge) -> FBlock:
    """The matrix ``[F^{abc}_d]`` over ``(e, alpha, beta) x (f, mu, nu)``.

    Returns an empty block when no fusion tree from ``(a, b, c)`` to ``d`` exists.
    """
    a, b, c, d = _idx(table.rules, a, b, c, d)
    rows = table.left_basis(a, b, c, d)
    cols = table.right_basis(a, b, c, d)
    M = np.zeros((len(rows), len(cols)), dtype=complex)
    for i, (e, al, be) in enumerate(rows):
        for j, (f, mu, nu) in enumerate(cols):
            M[i, j] = table.value(a, b, c, d, e, al, be, f, mu, nu)
    return FBlock(M, tuple(rows), tuple(cols))


def f_general(table: FSymbolTable, dims: QuantumDimensions,
              a: Charge, b: Charge, c: Charge, d: Charge) -> FBlock:
    """The transform ``[F^{ab}_{cd}]`` relating a horizontal ``e`` line to an ``f`` channel.

    ``a, b`` are the upper and ``c, d`` the lower charges of the two vertical
    lines; a charge ``e`` crossing from the ``b`` line to the ``a`` line is
    rewritten in terms of the pair fusing to ``f``::

        [F^{ab}_{cd}]_{(e,alpha,beta)(f,mu,nu)}
            = sqrt(d_e d_f / (d_a d_d)) * conj([F^{ceb}_f]_{(a,alpha,mu)(d,beta,nu)})

    Rows ``(e, alpha, beta)`` have ``alpha: c x e -> a`` and ``beta: e x b -> d``;
    columns ``(f, mu, nu)`` have ``mu: a x b -> f`` and ``nu: c x d -> f``.
    """
    rules = table.rules
    a, b, c, d = _idx(rules, a, b, c, d)
    N = rules.N
    rows = [(e, al, be) for e in range(rules.n)
            for al in range(1, N[c, e, a] + 1) for be in range(1, N[e, b, d] + 1)]
    cols = [(f, mu, nu) for f in range(rules.n)
            for mu in range(1, N[a, b, f] + 1) for nu in range(1, N[c, d, f] + 1)]
    M = np.zeros((len(rows), len(cols)), dtype=complex)
    for i, (e, al, be) in enumerate(rows):
        for j, (f, mu, nu) in enumerate(cols):
            pref = np.sqrt(dims[e] * dims[f] / (dims[a] * dims[d]))
            M[i, j] = pref * np.conj(table.value(c, e, b, f, a, al, mu, d, be, nu))
    return FBlock(M, tuple(rows), tuple(cols))


def f_aeb_from_f(table: FSymbolTable, dims: QuantumDimensions,
                 a: Charge, e: Charge, b: Charge, c: Charge) -> FBlock:
    """``[F^{aeb}_c]`` restricted to rows with intermediate ``a`` and columns with ``b``.

    Computed from the horizontal transform ``[F^{ab}_{ab}]`` rather than read
    off the table::

        [F^{aeb}_c]_{(a,alpha,nu)(b,beta,mu)}
            = sqrt(d_a d_b / (d_c d_e)) * conj([F^{ab}_{ab}]_{(e,alpha,beta)(c,nu,mu)})

    Row labels are ``(a, alpha, nu)`` with ``alpha: a x e -> a`` and
    ``nu: a x b -> c``; column labels are ``(b, beta, mu)`` with
    ``beta: e x b -> b`` and ``mu: a x b -> c``. The block is empty when
    ``e`` cannot tunnel between ``a`` and ``b`` or ``c`` is not a channel.
    """
    rules = table.rules
    a, e, b, c = _idx(rules, a, e, b, c)
    N = rules.N
    rows = tuple((a, al, nu) for al in range(1, N[a, e, a] + 1) for nu in range(1, N[a, b, c] + 1))
    cols = tuple((b, be, mu) for be in range(1, N[e, b, b] + 1) for mu in range(1, N[a, b, c] + 1))
    M = np.zeros((len(rows), len(cols)), dtype=complex)
    if M.size:
        G = f_general(table, dims, a, b, a, b)
        rpos = {lab: i for i, lab in enumerate(G.rows)}
        cpos = {lab: j for j, lab in enumerate(G.cols)}
        pref = np.sqrt(dims[a] * dims[b] / (dims[c] * dims[e]))
        for i, (_, al, nu) in enumerate(rows):
            for j, (_, be, mu) in enumerate(cols):
                M[i, j] = pref * np.conj(G.matrix[rpos[e, al, be], cpos[c, nu, mu]])
    return FBlock(M, rows, cols)


# -- verification ------------------------------------------------------------

@dataclass
class PentagonReport:
    """Outcome of :func:`verify_pentagon`.

    ``violations`` holds one dict per failing labelling with the charge labels
    ``a, b, c, d, x, p, q, r, s`` and the residual.
    """
    max_residual: float
    violations: list[dict] = field(default_factory=list)
    n_checked: int = 0

    @property
    def ok(self) -> bool:
        return not self.violations


@dataclass
class UnitarityReport:
    """Outcome of :func:`verify_unitarity`.

    ``deviations`` maps each nonempty ``(a, b, c, d)`` block (integer indices)
    to ``max |F F^dagger - 1|``; non-square blocks get ``inf``.
    """
    max_deviation: float
    deviations: dict[tuple[int, int, int, int], float] = field(default_factory=dict)
    violations: list[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def verify_unitarity(table: FSymbolTable, tol: float | None = None) -> UnitarityReport:
    """Check every ``[F^{abc}_d]`` block for ``F F^dagger = 1``."""
    tol = table.tol if tol is None else tol
    rules = table.rules
    lab = rules.charges
    report = UnitarityReport(0.0)
    n = rules.n
    for a, b, c, d in product(range(n), repeat=4):
        block = f_move(table, a, b, c, d)
        if block.empty and not block.rows and not block.cols:
            continue
        M = block.matrix
        if M.shape[0] != M.shape[1]:
            dev = float('inf')
        else:
            dev = float(np.max(np.abs(M @ M.conj().T - np.eye(M.shape[0]))))
        report.deviations[a, b, c, d] = dev
        report.max_deviation = max(report.max_deviation, dev)
        if dev > tol:
            report.violations.append(
                {'a': lab[a], 'b': lab[b], 'c': lab[c], 'd': lab[d], 'deviation': dev})
    return report


def verify_pentagon(table: FSymbolTable, tol: float | None = None,
                    max_violations: int | None = None) -> PentagonReport:
    """Evaluate the pentagon identity for every admissible labelling.

    Never raises on failure; inconsistent tables produce a nonempty
    ``violations`` list. ``max_violations`` stops the scan early once that many
    violations were found (``max_residual`` then covers only the scanned part).
    """
    tol = table.tol if tol is None else tol
    rules = table.rules
    if rules.is_multiplicity_free():
        return _pentagon_scalar(table, tol, max_violations)
    return _pentagon_general(table, tol, max_violations)


def _instances(rules: FusionRules):
    n = rules.n
    P = rules.products
    for a in range(n):
        for b in range(n):
            for c in range(n):
                for p in P(a, b):
                    for q in P(p, c):
                        for d in range(n):
                            Pcd = P(c, d)
                            for x in P(q, d):
                                for r in Pcd:
                                    for s in P(b, r):
                                        if rules.N[a, s, x]:
                                            yield a, b, c, d, x, p, q, r, s


def _relation(N: np.ndarray):
    """CSR view of ``{(x, y) -> [z : N_xy^z > 0]}`` keyed by ``x * n + y``."""
    n = N.shape[0]
    x, y, z = np.nonzero(N)
    key = x * n + y
    counts = np.bincount(key, minlength=n * n)
    start = np.concatenate(([0], np.cumsum(counts)[:-1]))
    return start, counts, z


def _join(cols: dict, key: np.ndarray, rel, name: str) -> dict:
    """Extend every row by each ``z`` related to ``key``; the new column is `name`."""
    start, counts, z = rel
    rep = counts[key]
    out = {k: np.repeat(v, rep) for k, v in cols.items()}
    first = np.repeat(start[key], rep)
    offset = np.arange(rep.sum()) - np.repeat(np.cumsum(rep) - rep, rep)
    out[name] = z[first + offset]
    return out


class _Lookup:
    """Vectorized ``F[a, b, c, d, e, f]`` for multiplicity-free tables (zero when absent).

    Small charge sets use a dense flat array; larger ones a sorted code table.
    """
    DENSE_LIMIT = 4_000_000

    def __init__(self, scalar: dict, n: int):
        self.n = n
        self.dense = None
        if n ** 6 <= self.DENSE_LIMIT:
            self.dense = np.zeros(n ** 6, dtype=complex)
            if scalar:
                keys = np.array(list(scalar), dtype=np.int64)
                self.dense[self.encode(*keys.T)] = np.fromiter(scalar.values(), complex, len(scalar))
        elif scalar:
            keys = np.array(list(scalar), dtype=np.int64)
            codes = self.encode(*keys.T)
            order = np.argsort(codes)
            self.codes = codes[order]
            self.values = np.array(list(scalar.values()), dtype=complex)[order]
        else:
            self.codes = np.zeros(0, dtype=np.int64)
            self.values = np.zeros(0, dtype=complex)

    def updated(self, key6, value) -> '_Lookup':
        new = object.__new__(_Lookup)
        new.n = self.n
        code = int(self.encode(*([k] for k in key6))[0])
        if self.dense is not None:
            new.dense = self.dense.copy()
            new.dense[code] = value
            return new
        new.dense = None
        pos = int(np.searchsorted(self.codes, code))
        if pos < len(self.codes) and self.codes[pos] == code:
            new.codes, new.values = self.codes, self.values.copy()
            new.values[pos] = value
        else:
            new.codes = np.insert(self.codes, pos, code)
            new.values = np.insert(self.values, pos, value)
        return new

    def encode(self, *idx):
        code = np.zeros(len(idx[0]), dtype=np.int64)
        for i in idx:
            code = code * self.n + i
        return code

    def __call__(self, *idx):
        code = self.encode(*idx)
        if self.dense is not None:
            return self.dense[code]
        pos = np.searchsorted(self.codes, code)
        pos = np.minimum(pos, max(len(self.codes) - 1, 0))
        if not len(self.codes):
            return np.zeros(len(code), dtype=complex)
        hit = self.codes[pos] == code
        return np.where(hit, self.values[pos], 0j)


def _pentagon_scalar(table, tol, max_violations):
    rules = table.rules
    lab = rules.charges
    N = rules.N
    n = rules.n
    rel = _relation(N)
    F = table._scalar_lookup()
    worst = 0.0
    count = 0
    violations = []
    for a, b0 in product(range(n), repeat=2):
        # rows (b, p) with p in a x b, then extend along the fusion tree
        p_ = np.nonzero(N[a, b0])[0]
        if not len(p_):
            continue
        cols = {'b': np.full(len(p_) * n, b0), 'p': np.repeat(p_, n),
                'c': np.tile(np.arange(n), len(p_))}
        cols = _join(cols, cols['p'] * n + cols['c'], rel, 'q')
        m = len(cols['q'])
        cols = {k: np.repeat(v, n) for k, v in cols.items()}
        cols['d'] = np.tile(np.arange(n), m)
        cols = _join(cols, cols['q'] * n + cols['d'], rel, 'x')
        cols = _join(cols, cols['c'] * n + cols['d'], rel, 'r')
        cols = _join(cols, cols['b'] * n + cols['r'], rel, 's')
        keep = N[a, cols['s'], cols['x']] > 0
        cols = {k: v[keep] for k, v in cols.items()}
        size = len(cols['s'])
        if not size:
            continue
        b, c, d, x, p, q, r, s = (cols[k] for k in 'bcdxpqrs')
        A = np.full(size, a)
        lhs = F(p, c, d, x, q, r) * F(A, b, r, x, p, s)
        # three-move side: sum over t in b x c
        ext = _join({'i': np.arange(size)}, b * n + c, rel, 't')
        i, t = ext['i'], ext['t']
        terms = (F(A[i], b[i], c[i], q[i], p[i], t) * F(A[i], t, d[i], x[i], q[i], s[i])
                 * F(b[i], c[i], d[i], s[i], t, r[i]))
        rhs = (np.bincount(i, weights=terms.real, minlength=size)
               + 1j * np.bincount(i, weights=terms.imag, minlength=size))
        res = np.abs(lhs - rhs)
        bad = np.nonzero(res > tol)[0]
        if max_violations and len(violations) + len(bad) >= max_violations:
            bad = bad[:max_violations - len(violations)]
            count += int(bad[-1]) + 1
            worst = max(worst, float(res[:bad[-1] + 1].max()))
        else:
            count += size
            worst = max(worst, float(res.max()))
        for k in bad:
            violations.append(dict(a=lab[a], b=lab[b[k]], c=lab[c[k]], d=lab[d[k]], x=lab[x[k]],
                                   p=lab[p[k]], q=lab[q[k]], r=lab[r[k]], s=lab[s[k]],
                                   residual=float(res[k])))
        if max_violations and len(violations) >= max_violations:
            break
    return PentagonReport(worst, violations, count)


def _pentagon_general(table, tol, max_violations):
    rules = table.rules
    lab = rules.charges
    B = table._block6
    worst = 0.0
    count = 0
    violations = []
    for a, b, c, d, x, p, q, r, s in _instances(rules):
        # alpha1=m alpha2=i alpha3=n beta1=P gamma1=Q gamma2=o beta2=z
        lhs = np.einsum('inPz,mzQo->minPQo', B(p, c, d, x, q, r), B(a, b, r, x, p, s))
        rhs = np.zeros_like(lhs)
        for t in rules.products(b, c):
            if not rules.N[a, t, q] or not rules.N[t, d, s]:
                continue
            # delta1=j delta2=k eps1=l
            rhs += np.einsum('mijk,knlo,jlPQ->minPQo',
                             B(a, b, c, q, p, t), B(a, t, d, x, q, s), B(b, c, d, s, t, r))
        res = float(np.max(np.abs(lhs - rhs))) if lhs.size else 0.0
        count += 1
        worst = max(worst, res)
        if res > tol:
            violations.append(dict(a=lab[a], b=lab[b], c=lab[c], d=lab[d], x=lab[x],
                                   p=lab[p], q=lab[q], r=lab[r], s=lab[s], residual=res))
            if max_violations and len(violations) >= max_violations:
                break
    return PentagonReport(worst, violations, count)
