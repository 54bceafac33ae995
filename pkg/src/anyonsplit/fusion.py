"""Topological charges, fusion rules and quantum dimensions.

Charges are ordered; every tensor in the package is indexed by the integer
position of a charge in :attr:`FusionRules.charges`. Labels only appear at
the public API boundary, where functions accept either a label or an index.
Fusion multiplicity indices (``alpha``, ``mu``, ``nu``, ...) are 1-based and
run over ``1..N_ab^c``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Union

import numpy as np

from .errors import AnyonModelError, UnknownChargeError

__all__ = [
    'MAX_MULTIPLICITY', 'Charge', 'FusionRules', 'QuantumDimensions', 'TunnelingCharge',
    'fuse', 'quantum_dimensions', 'tunneling_charges', 'check_tunneling_count',
]

#: largest fusion multiplicity accepted when building rules from data
MAX_MULTIPLICITY = 255

Charge = Union[str, int]

# separators used by the model file and command line syntax
_RESERVED = ',=:#[]'


@dataclass(frozen=True)
class FusionRules:
    """Fusion algebra ``a x b = sum_c N_ab^c c`` over an ordered set of charges.

    Parameters
    ----------
    charges : sequence of str
        Unique, nonempty charge labels. Their order fixes the integer indices.
    vacuum : int
        Index of the vacuum charge.
    dual : sequence of int
        ``dual[a]`` is the index of the antiparticle of ``a``.
    N : array of int, shape (n, n, n)
        ``N[a, b, c]`` is the multiplicity ``N_ab^c``.

    The constructor checks all structural invariants (vacuum, duals,
    commutativity, associativity) and raises :class:`AnyonModelError` naming the
    first one that fails.
    """
    charges: tuple[str, ...]
    vacuum: int
    dual: tuple[int, ...]
    N: np.ndarray = field(repr=False)

    def __post_init__(self):
        charges = tuple(str(c) for c in self.charges)
        object.__setattr__(self, 'charges', charges)
        object.__setattr__(self, 'dual', tuple(int(x) for x in self.dual))
        N = np.array(self.N, dtype=np.int64, copy=True)
        N.setflags(write=False)
        object.__setattr__(self, 'N', N)
        self._validate()
        index = {c: i for i, c in enumerate(charges)}
        object.__setattr__(self, '_index', index)
        products = {}
        for a in range(len(charges)):
            for b in range(len(charges)):
                products[a, b] = tuple(int(c) for c in np.nonzero(N[a, b])[0])
        object.__setattr__(self, '_products', products)

    def _validate(self):
        n = len(self.charges)
        if n == 0:
            raise AnyonModelError('charge list is empty')
        for c in self.charges:
            if not c or any(ch.isspace() or ch in _RESERVED for ch in c):
                raise AnyonModelError(
                    f'charge label {c!r} must be nonempty, without whitespace or any of {_RESERVED!r}')
        if len(set(self.charges)) != n:
            raise AnyonModelError('charge labels are not unique')
        if not 0 <= self.vacuum < n:
            raise AnyonModelError(f'vacuum index {self.vacuum} out of range')
        if len(self.dual) != n or any(not 0 <= x < n for x in self.dual):
            raise AnyonModelError('dual map must assign a charge to every charge')
        N = self.N
        if N.shape != (n, n, n):
            raise AnyonModelError(f'fusion tensor has shape {N.shape}, expected {(n, n, n)}')
        if (N < 0).any():
            raise AnyonModelError('fusion multiplicities must be non-negative')
        if (N > MAX_MULTIPLICITY).any():
            raise AnyonModelError(f'fusion multiplicity exceeds cap of {MAX_MULTIPLICITY}')
        name = self.charges
        for a in range(n):
            if self.dual[self.dual[a]] != a:
                raise AnyonModelError(f'dual map is not an involution at {name[a]}')
        if not np.array_equal(N, N.transpose(1, 0, 2)):
            a, b, c = np.argwhere(N != N.transpose(1, 0, 2))[0]
            raise AnyonModelError(
                f'fusion is not commutative: N[{name[a]},{name[b]}->{name[c]}] != '
                f'N[{name[b]},{name[a]}->{name[c]}]')
        eye = np.eye(n, dtype=np.int64)
        I = self.vacuum
        if not np.array_equal(N[:, I, :], eye):
            a = int(np.argwhere((N[:, I, :] != eye).any(axis=1))[0, 0])
            raise AnyonModelError(f'vacuum fusion is not trivial for charge {name[a]}')
        for a in range(n):
            for b in range(n):
                expected = 1 if b == self.dual[a] else 0
                if N[a, b, I] != expected:
                    raise AnyonModelError(
                        f'N[{name[a]},{name[b]}->{name[I]}] = {N[a, b, I]}, expected {expected} '
                        f'(dual of {name[a]} is {name[self.dual[a]]})')
        # sum_e N_ab^e N_ec^d == sum_f N_af^d N_bc^f
        left = np.einsum('abe,ecd->abcd', N, N)
        right = np.einsum('afd,bcf->abcd', N, N)
        if not np.array_equal(left, right):
            a, b, c, d = np.argwhere(left != right)[0]
            raise AnyonModelError(
                f'fusion is not associative for ({name[a]},{name[b]},{name[c]})->{name[d]}')

    @property
    def n(self) -> int:
        return len(self.charges)

    def index(self, charge: Charge) -> int:
        """Integer index of a charge given by label or index."""
        if isinstance(charge, (int, np.integer)) and not isinstance(charge, bool):
            if 0 <= charge < self.n:
                return int(charge)
            raise UnknownChargeError(charge)
        try:
            return self._index[charge]
        except KeyError:
            raise UnknownChargeError(charge) from None

    def label(self, index: int) -> str:
        return self.charges[index]

    def products(self, a: int, b: int) -> tuple[int, ...]:
        """Indices ``c`` with ``N_ab^c > 0`` (integer indices, no validation)."""
        return self._products[a, b]

    def is_multiplicity_free(self) -> bool:
        return int(self.N.max()) <= 1

    @classmethod
    def from_entries(cls, charges: Iterable[str], vacuum: str,
                     dual: Mapping[str, str],
                     entries: Iterable[tuple[str, str, str, int]],
                     symmetrize: bool = False) -> 'FusionRules':
        """Build rules from labelled ``(a, b, c, N)`` quadruples.

        Entries not listed are zero. With ``symmetrize=True`` each entry also
        sets ``N_ba^c``; otherwise commutativity must be explicit in the data.
        """
        charges = tuple(charges)
        index = {c: i for i, c in enumerate(charges)}
        if len(index) != len(charges):
            raise AnyonModelError('charge labels are not unique')
        n = len(charges)

        def idx(label):
            try:
                return index[label]
            except KeyError:
                raise UnknownChargeError(label) from None

        N = np.zeros((n, n, n), dtype=np.int64)
        for a, b, c, mult in entries:
            mult = int(mult)
            if not 0 <= mult <= MAX_MULTIPLICITY:
                raise AnyonModelError(
                    f'multiplicity {mult} for ({a},{b},{c}) outside 0..{MAX_MULTIPLICITY}')
            N[idx(a), idx(b), idx(c)] = mult
            if symmetrize:
                N[idx(b), idx(a), idx(c)] = mult
        dual_idx = []
        for c in charges:
            if c not in dual:
                raise AnyonModelError(f'dual map has no entry for {c}')
            dual_idx.append(idx(dual[c]))
        return cls(charges=charges, vacuum=idx(vacuum), dual=tuple(dual_idx), N=N)


@dataclass(frozen=True)
class QuantumDimensions:
    """Quantum dimensions ``d_a``, indexed like the charges of the rules."""
    values: tuple[float, ...]

    def __getitem__(self, a: int) -> float:
        return self.values[a]

    def __len__(self):
        return len(self.values)

    def as_array(self) -> np.ndarray:
        return np.array(self.values)

    @property
    def total(self) -> float:
        """Total quantum dimension ``D = sqrt(sum_a d_a^2)``."""
        return float(np.sqrt(sum(d * d for d in self.values)))


@dataclass(frozen=True)
class TunnelingCharge:
    """A charge ``e`` that can hop between ``a`` and ``b``, with vertex ranges.

    ``alphas`` runs over the ``(a, e -> a)`` vertices and ``betas`` over the
    ``(e, b -> b)`` vertices, both 1-based.
    """
    charge: int
    label: str
    alphas: range
    betas: range


def fuse(rules: FusionRules, a: Charge, b: Charge) -> dict[str, int]:
    """Fusion outcomes of ``a x b`` as ``{label: N_ab^c}``, in charge order."""
    ia, ib = rules.index(a), rules.index(b)
    return {rules.charges[c]: int(rules.N[ia, ib, c]) for c in rules.products(ia, ib)}


def quantum_dimensions(rules: FusionRules, tol: float = 1e-10) -> QuantumDimensions:
    """Quantum dimensions from the Perron-Frobenius eigenvalue of each fusion matrix.

    ``d_a`` is the spectral radius of ``(N_a)_{bc} = N_ab^c``. The result is
    checked against ``d_a d_b = sum_c N_ab^c d_c``; a mismatch larger than `tol`
    (relative to the size of the entries) means the rules are malformed.
    """
    N = rules.N.astype(float)
    d = np.empty(rules.n)
    for a in range(rules.n):
        d[a] = np.max(np.abs(np.linalg.eigvals(N[a])))
    d[rules.vacuum] = 1.0
    residual = consistency_residual(rules, d)
    if residual > tol * max(1.0, float(d.max()) ** 2):
        raise AnyonModelError(
            f'fusion matrices have no consistent Perron-Frobenius dimensions '
            f'(residual {residual:.3e})')
    if (d < 1 - tol).any():
        a = int(np.argmin(d))
        raise AnyonModelError(f'quantum dimension of {rules.charges[a]} is {d[a]} < 1')
    return QuantumDimensions(tuple(float(x) for x in d))


def consistency_residual(rules: FusionRules, d) -> float:
    """``max_ab |d_a d_b - sum_c N_ab^c d_c|``."""
    d = np.asarray(d, dtype=float)
    lhs = np.outer(d, d)
    rhs = np.einsum('abc,c->ab', rules.N.astype(float), d)
    return float(np.max(np.abs(lhs - rhs)))


def tunneling_charges(rules: FusionRules, a: Charge, b: Charge) -> list[TunnelingCharge]:
    """All charges ``e`` with ``N_ae^a N_be^b != 0``, vacuum included, in charge order."""
    ia, ib = rules.index(a), rules.index(b)
    N = rules.N
    out = []
    for e in range(rules.n):
        na, nb = int(N[ia, e, ia]), int(N[ib, e, ib])
        if na and nb:
            out.append(TunnelingCharge(e, rules.charges[e], range(1, na + 1), range(1, nb + 1)))
    return out


def check_tunneling_count(rules: FusionRules, a: Charge, b: Charge) -> tuple[int, int]:
    """Both sides of ``sum_e N_ae^a N_be^b = sum_c (N_ab^c)^2``."""
    ia, ib = rules.index(a), rules.index(b)
    N = rules.N
    left = int(np.sum(N[ia, :, ia] * N[ib, :, ib]))
    right = int(np.sum(N[ia, ib, :] ** 2))
    return left, right
