"""Degeneracy splitting of an anyon pair by topological-charge tunneling.

For anyons ``a`` and ``b`` the tunneling of charge ``e`` shifts the energy of
fusion channel ``c`` (vertex indices ``mu, nu``) through the Hermitian blocks::

    V_c[mu, nu] = sum_{e,alpha,beta} Gamma_{e,alpha,beta} T[(e,alpha,beta), (c,mu,nu)]
                  + conj(Gamma_{e,alpha,beta}) conj(T[(e,alpha,beta), (c,nu,mu)])

with ``T[(e,alpha,beta), (c,mu,nu)] = [F^{aeb}_c]_{(a,alpha,nu)(b,beta,mu)}``.
``T`` is inverted in closed form::

    Tinv[(c,mu,nu), (e,alpha,beta)] = d_c d_e / (d_a d_b) * conj(T[(e,alpha,beta), (c,mu,nu)])

A general Hermitian interaction ``V_c`` is mapped back onto amplitudes with
``Gamma_eff = 1/2 * V . Tinv``. The factor 1/2 is kept as is: for a real ``T``
this recovers only ``Re Gamma``, which is all the spectrum depends on, so
round trips are checked on spectra, not on amplitudes. The vacuum component
of ``Gamma_eff`` is a uniform shift ``2 Re Gamma_eff[I]`` and is returned as
a separate ``offset``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Mapping

import numpy as np

from .errors import AnyonModelError, UnsupportedOperationError
from .fsymbols import f_aeb_from_f
from .fusion import Charge, tunneling_charges
from .models import AnyonModel, monodromy_scalar

__all__ = [
    'DEGENERACY_TOL', 'HERMITIAN_TOL', 'TunnelingSpec', 'MonodromySpec', 'GeneralInteraction',
    'ChannelSpectrum', 'Level', 'SplittingResult', 'TMatrix', 'EffectiveAmplitudes',
    'NonHermitianError', 'build_t_matrix', 'splitting_spectrum', 'v2_spectrum',
    'interaction_spectrum', 'effective_amplitudes', 'v2_to_effective', 'decay_model',
]

DEGENERACY_TOL = 1e-9
HERMITIAN_TOL = 1e-12

TunnelIndex = tuple[int, int, int]  # (e, alpha, beta)
ChannelIndex = tuple[int, int, int]  # (c, mu, nu)


class NonHermitianError(ValueError):
    """An interaction block violates ``V[c, mu, nu] = conj(V[c, nu, mu])``."""

    def __init__(self, channel: str, mu: int, nu: int, deviation: float):
        self.channel, self.mu, self.nu, self.deviation = channel, mu, nu, deviation
        super().__init__(f'interaction is not Hermitian at (c={channel}, mu={mu}, nu={nu}): '
                         f'|V - V^dagger| = {deviation:.3e}')


def _pair(model: AnyonModel, a: Charge, b: Charge) -> tuple[int, int]:
    return model.index(a), model.index(b)


# -- T-matrix -------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TMatrix:
    """The map from tunneling amplitudes to channel energies and its inverse.

    ``forward[i, j]`` is ``T[rows[i], cols[j]]`` with rows ``(e, alpha, beta)``
    and columns ``(c, mu, nu)``; ``inverse`` has the transposed layout.
    """
    pair: tuple[int, int]
    forward: np.ndarray
    inverse: np.ndarray
    rows: tuple[TunnelIndex, ...]
    cols: tuple[ChannelIndex, ...]

    @property
    def row_index(self) -> dict[TunnelIndex, int]:
        return {r: i for i, r in enumerate(self.rows)}

    @property
    def col_index(self) -> dict[ChannelIndex, int]:
        return {c: j for j, c in enumerate(self.cols)}

    def identity_residual(self) -> float:
        """``max(|T Tinv - 1|, |Tinv T - 1|)``."""
        n = len(self.rows)
        one = np.eye(n)
        return float(max(np.max(np.abs(self.forward @ self.inverse - one)),
                         np.max(np.abs(self.inverse @ self.forward - one))))


def build_t_matrix(model: AnyonModel, a: Charge, b: Charge) -> TMatrix:
    """Build ``T`` for the pair ``(a, b)`` and its closed-form inverse.

    Refuses models whose F table is not unitary, since the closed form relies
    on it.
    """
    if model.unitarity.violations:
        v = model.unitarity.violations[0]
        raise AnyonModelError(
            f'model {model.name!r} has non-unitary F-symbols (first: [F^{{{v["a"]},{v["b"]},'
            f'{v["c"]}}}_{v["d"]}], deviation {v["deviation"]:.3e}); T-matrix inverse is undefined')
    return _t_matrix(model, *_pair(model, a, b))


@lru_cache(maxsize=256)
def _t_matrix(model: AnyonModel, a: int, b: int) -> TMatrix:
    rules, dims = model.rules, model.dims
    N = rules.N
    rows = [(t.charge, al, be) for t in tunneling_charges(rules, a, b)
            for al in t.alphas for be in t.betas]
    channels = rules.products(a, b)
    cols = [(c, mu, nu) for c in channels
            for mu in range(1, N[a, b, c] + 1) for nu in range(1, N[a, b, c] + 1)]
    if len(rows) != len(cols):  # pragma: no cover - excluded by fusion associativity
        raise AnyonModelError(f'tunneling count {len(rows)} != channel count {len(cols)}')
    T = np.zeros((len(rows), len(cols)), dtype=complex)
    Tinv = np.zeros((len(cols), len(rows)), dtype=complex)
    rpos = {r: i for i, r in enumerate(rows)}
    cpos = {c: j for j, c in enumerate(cols)}
    for e in sorted({r[0] for r in rows}):
        for c in channels:
            blk = f_aeb_from_f(model.f, dims, a, e, b, c)
            for i, (_, al, nu) in enumerate(blk.rows):
                for j, (_, be, mu) in enumerate(blk.cols):
                    val = blk.matrix[i, j]
                    r, k = rpos[e, al, be], cpos[c, mu, nu]
                    T[r, k] = val
                    Tinv[k, r] = dims[c] * dims[e] / (dims[a] * dims[b]) * np.conj(val)
    for arr in (T, Tinv):
        arr.setflags(write=False)
    return TMatrix((a, b), T, Tinv, tuple(rows), tuple(cols))


@lru_cache(maxsize=256)
def _tunneling_indices(model: AnyonModel, a: int, b: int) -> frozenset:
    return frozenset((t.charge, al, be) for t in tunneling_charges(model.rules, a, b)
                     for al in t.alphas for be in t.betas)


# -- inputs ----------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TunnelingSpec:
    """Tunneling amplitudes ``Gamma_{e,alpha,beta}`` for one anyon pair.

    Build with :meth:`create` or :meth:`symmetric`, which validate every key
    against the model. The vacuum amplitude is always zero.
    """
    pair: tuple[int, int]
    amplitudes: Mapping[TunnelIndex, complex]

    @classmethod
    def create(cls, model: AnyonModel, a: Charge, b: Charge,
               amplitudes: Mapping | None = None) -> 'TunnelingSpec':
        """Keys are ``e`` (meaning ``(e, 1, 1)``) or ``(e, alpha, beta)``; ``e`` by label or index."""
        pair = _pair(model, a, b)
        valid = _tunneling_indices(model, *pair)
        out = {}
        for key, value in (amplitudes or {}).items():
            if isinstance(key, tuple):
                e, al, be = key
            else:
                e, al, be = key, 1, 1
            idx = (model.index(e), int(al), int(be))
            if idx not in valid:
                raise ValueError(
                    f'({model.charges[idx[0]]}, {al}, {be}) is not a tunneling index for pair '
                    f'({model.charges[pair[0]]}, {model.charges[pair[1]]})')
            value = complex(value)
            if idx[0] == model.vacuum:
                if value != 0:
                    raise ValueError('vacuum tunneling amplitude must be zero; a uniform energy '
                                     'shift is not a tunneling process')
                continue
            out[idx] = out.get(idx, 0j) + value
        return cls(pair, out)

    @classmethod
    def symmetric(cls, model: AnyonModel, a: Charge, b: Charge,
                  amplitudes: Mapping[Charge, complex]) -> 'TunnelingSpec':
        """``Gamma_{e,alpha,beta} = Gamma_e`` for every vertex pair ``(alpha, beta)``."""
        pair = _pair(model, a, b)
        by_charge = {t.charge: t for t in tunneling_charges(model.rules, *pair)}
        full = {}
        for e, value in amplitudes.items():
            t = by_charge.get(model.index(e))
            if t is None:
                raise ValueError(f'{e} is not a tunneling charge for this pair')
            for al in t.alphas:
                for be in t.betas:
                    full[t.charge, al, be] = value
        return cls.create(model, *pair, full)

    def get(self, e: int, alpha: int = 1, beta: int = 1) -> complex:
        return self.amplitudes.get((e, alpha, beta), 0j)


@dataclass(frozen=True, eq=False)
class MonodromySpec:
    """Loop amplitudes ``gamma_z`` together with the monodromy scalars ``M[z, c]``."""
    pair: tuple[int, int]
    loop_amplitudes: Mapping[int, complex]
    M: Mapping[tuple[int, int], complex]

    @classmethod
    def from_model(cls, model: AnyonModel, a: Charge, b: Charge,
                   loop_amplitudes: Mapping[Charge, complex]) -> 'MonodromySpec':
        """Take ``M[z, c]`` from the model's S-matrix for every ``z`` and channel ``c``."""
        if not model.has_braiding_data:
            raise UnsupportedOperationError(
                f'model {model.name!r} has no monodromy data (no twists or S-matrix)')
        pair = _pair(model, a, b)
        gam = {}
        for z, g in loop_amplitudes.items():
            zi = model.index(z)
            gam[zi] = gam.get(zi, 0j) + complex(g)
        M = {}
        for z in range(model.rules.n):
            for c in model.rules.products(*pair):
                M[z, c] = monodromy_scalar(model, z, c)
        return cls(pair, gam, M)

    @classmethod
    def create(cls, model: AnyonModel, a: Charge, b: Charge,
               loop_amplitudes: Mapping[Charge, complex],
               M: Mapping[tuple[Charge, Charge], complex], tol: float = 1e-9) -> 'MonodromySpec':
        """Explicit monodromy scalars, checked for ``M[I, c] = M[z, I] = 1`` and ``|M| <= 1``."""
        pair = _pair(model, a, b)
        gam = {model.index(z): complex(g) for z, g in loop_amplitudes.items()}
        Mi = {(model.index(z), model.index(c)): complex(v) for (z, c), v in M.items()}
        I = model.vacuum
        for (z, c), v in Mi.items():
            if (z == I or c == I) and abs(v - 1) > tol:
                raise ValueError(f'M[{model.charges[z]}, {model.charges[c]}] must be 1')
            if abs(v) > 1 + tol:
                raise ValueError(f'|M[{model.charges[z]}, {model.charges[c]}]| > 1')
        return cls(pair, gam, Mi)

    def check_covers(self, model: AnyonModel):
        missing = [(z, c) for z, g in self.loop_amplitudes.items() if g != 0
                   for c in model.rules.products(*self.pair) if (z, c) not in self.M]
        if missing:
            z, c = missing[0]
            raise UnsupportedOperationError(
                f'no monodromy scalar M[{model.charges[z]}, {model.charges[c]}]')


@dataclass(frozen=True, eq=False)
class GeneralInteraction:
    """An arbitrary Hermitian interaction ``V_c`` (``N_ab^c x N_ab^c`` per channel)."""
    pair: tuple[int, int]
    blocks: Mapping[int, np.ndarray]

    @classmethod
    def create(cls, model: AnyonModel, a: Charge, b: Charge,
               blocks: Mapping[Charge, object], tol: float = HERMITIAN_TOL) -> 'GeneralInteraction':
        """Validate shapes against ``N_ab^c`` and Hermiticity; missing channels are zero."""
        pair = _pair(model, a, b)
        N = model.rules.N
        out = {}
        for c in model.rules.products(*pair):
            out[c] = np.zeros((N[pair[0], pair[1], c],) * 2, dtype=complex)
        for c, block in blocks.items():
            ci = model.index(c)
            if ci not in out:
                raise ValueError(f'{model.charges[ci]} is not a fusion channel of the pair')
            arr = np.atleast_2d(np.asarray(block, dtype=complex))
            if arr.shape != out[ci].shape:
                raise ValueError(f'block for channel {model.charges[ci]} has shape {arr.shape}, '
                                 f'expected {out[ci].shape}')
            dev = np.abs(arr - arr.conj().T)
            scale = max(1.0, float(np.max(np.abs(arr))))
            if dev.max() > tol * scale:
                mu, nu = np.unravel_index(int(np.argmax(dev)), dev.shape)
                raise NonHermitianError(model.charges[ci], int(mu) + 1, int(nu) + 1, float(dev.max()))
            out[ci] = arr
        for arr in out.values():
            arr.setflags(write=False)
        return cls(pair, out)

    @classmethod
    def from_tunneling(cls, model: AnyonModel, spec: TunnelingSpec) -> 'GeneralInteraction':
        """The interaction ``V_1`` generated by a tunneling spec."""
        return cls(spec.pair, _v1_blocks(model, spec))

    @classmethod
    def from_monodromy(cls, model: AnyonModel, mono: MonodromySpec) -> 'GeneralInteraction':
        """The interaction ``V_2`` generated by loop amplitudes."""
        return cls(mono.pair, _v2_blocks(model, mono))


# -- results -----------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ChannelSpectrum:
    charge: int
    label: str
    matrix: np.ndarray
    eigenvalues: tuple[float, ...]


@dataclass(frozen=True)
class Level:
    """A distinct energy and how many (channel, eigenvector) states share it."""
    energy: float
    multiplicity: int
    channels: tuple[str, ...]


@dataclass(frozen=True, eq=False)
class SplittingResult:
    """Per-channel Hermitian blocks and their ascending eigenvalues."""
    pair: tuple[int, int]
    per_channel: dict[str, ChannelSpectrum]
    gap_structure: tuple[Level, ...]

    def energies(self) -> dict[str, tuple[float, ...]]:
        return {c: s.eigenvalues for c, s in self.per_channel.items()}

    def all_energies(self) -> np.ndarray:
        return np.array([E for s in self.per_channel.values() for E in s.eigenvalues])

    def shifted(self, offset: float) -> 'SplittingResult':
        """The same blocks with ``offset`` added to every diagonal entry."""
        blocks = {s.charge: s.matrix + offset * np.eye(len(s.matrix))
                  for s in self.per_channel.values()}
        labels = {s.charge: s.label for s in self.per_channel.values()}
        return _result(self.pair, blocks, labels)


@dataclass(frozen=True, eq=False)
class EffectiveAmplitudes:
    """Effective tunneling amplitudes plus the uniform energy shift split off them.

    ``raw`` keeps every component including the vacuum one; ``spec`` has the
    vacuum component removed; ``offset = 2 Re raw[(I, 1, 1)]``.
    """
    spec: TunnelingSpec
    offset: float
    raw: Mapping[TunnelIndex, complex]


def _group_levels(values: list[tuple[float, int, str]], tol: float) -> tuple[Level, ...]:
    """Cluster sorted energies closer than `tol`; channels listed in charge order."""
    values.sort()
    out = []
    start = 0
    for i in range(1, len(values) + 1):
        if i == len(values) or values[i][0] - values[start][0] > tol:
            if i - start == 1:
                E, _, lab = values[start]
                out.append(Level(E, 1, (lab,)))
            else:
                group = values[start:i]
                energy = sum(E for E, _, _ in group) / len(group)
                chans = tuple(dict.fromkeys(lab for _, _, lab in sorted(group, key=_by_charge)))
                out.append(Level(float(energy), len(group), chans))
            start = i
    return tuple(out)


def _by_charge(item):
    return item[1]


def _result(pair, blocks: dict[int, np.ndarray], labels: dict[int, str],
            degeneracy_tol: float = DEGENERACY_TOL) -> SplittingResult:
    # blocks are fresh or already read-only, so they are frozen in place
    per = {}
    flat = []
    for c, M in blocks.items():
        lab = labels[c]
        if M.shape == (1, 1):
            z = complex(M[0, 0])
            dev, scale = 2 * abs(z.imag), max(1.0, abs(z))
            ev = (z.real,)
        else:
            dev = float(np.max(np.abs(M - M.conj().T))) if M.size else 0.0
            scale = max(1.0, float(np.max(np.abs(M)))) if M.size else 1.0
            ev = tuple(np.linalg.eigvalsh(M).tolist())
        if dev > HERMITIAN_TOL * scale:  # pragma: no cover - guards the assembly formulas
            raise AssertionError(f'assembled block for channel {lab} is not Hermitian ({dev:.2e})')
        M.flags.writeable = False
        per[lab] = ChannelSpectrum(c, lab, M, ev)
        flat.extend((E, c, lab) for E in ev)
    return SplittingResult(pair, per, _group_levels(flat, degeneracy_tol))


def _labels(model, pair):
    return {c: model.charges[c] for c in model.rules.products(*pair)}


# -- operations ---------------------------------------------------------------------------

def _v1_blocks(model: AnyonModel, spec: TunnelingSpec) -> dict[int, np.ndarray]:
    a, b = spec.pair
    T = build_t_matrix(model, a, b)
    N = model.rules.N
    gamma = np.array([spec.get(*r) for r in T.rows])
    # W[(c,mu,nu)] = sum_i Gamma_i T[i, (c,mu,nu)]
    W = gamma @ T.forward
    blocks = {}
    if len(T.cols) == len(model.rules.products(a, b)):
        # multiplicity free: one 1x1 block per channel
        for (c, _, _), w in zip(T.cols, W):
            blocks[c] = np.array([[2 * w.real]], dtype=complex)
        return blocks
    cpos = T.col_index
    for c in model.rules.products(a, b):
        m = N[a, b, c]
        V = np.zeros((m, m), dtype=complex)
        for mu in range(1, m + 1):
            for nu in range(1, m + 1):
                V[mu - 1, nu - 1] = W[cpos[c, mu, nu]] + np.conj(W[cpos[c, nu, mu]])
        blocks[c] = V
    return blocks


def splitting_spectrum(model: AnyonModel, spec: TunnelingSpec,
                       degeneracy_tol: float = DEGENERACY_TOL) -> SplittingResult:
    """Energy corrections from tunneling: assemble ``V_c`` per channel and diagonalize.

    For multiplicity-free pairs every block is 1x1 and equals
    ``sum_e (Gamma_e T_ec + conj(Gamma_e T_ec))``.
    """
    return _result(spec.pair, _v1_blocks(model, spec), _labels(model, spec.pair), degeneracy_tol)


def _v2_blocks(model: AnyonModel, mono: MonodromySpec) -> dict[int, np.ndarray]:
    mono.check_covers(model)
    a, b = mono.pair
    N = model.rules.N
    blocks = {}
    for c in model.rules.products(a, b):
        E = 0.0
        for z, g in mono.loop_amplitudes.items():
            if g == 0:
                continue
            w = g * mono.M[z, c]
            E += 2 * w.real
        blocks[c] = E * np.eye(N[a, b, c], dtype=complex)
    return blocks


def v2_spectrum(model: AnyonModel, mono: MonodromySpec,
                degeneracy_tol: float = DEGENERACY_TOL) -> SplittingResult:
    """Energy shifts ``E_c = sum_z (gamma_z M_zc + c.c.)`` from charge loops around the pair.

    Each channel ``c`` stays ``N_ab^c``-fold degenerate.
    """
    return _result(mono.pair, _v2_blocks(model, mono), _labels(model, mono.pair), degeneracy_tol)


def interaction_spectrum(model: AnyonModel, interaction: GeneralInteraction,
                         degeneracy_tol: float = DEGENERACY_TOL) -> SplittingResult:
    """Diagonalize a general interaction directly."""
    blocks = {c: np.array(M) for c, M in interaction.blocks.items()}
    return _result(interaction.pair, blocks, _labels(model, interaction.pair), degeneracy_tol)


def _split_vacuum(model: AnyonModel, pair, raw: dict[TunnelIndex, complex]) -> EffectiveAmplitudes:
    I = model.vacuum
    vac = raw.get((I, 1, 1), 0j)
    rest = {k: v for k, v in raw.items() if k[0] != I}
    spec = TunnelingSpec.create(model, *pair, rest)
    return EffectiveAmplitudes(spec, 2 * vac.real, dict(raw))


def effective_amplitudes(model: AnyonModel, interaction: GeneralInteraction) -> EffectiveAmplitudes:
    """``Gamma_eff[e,alpha,beta] = 1/2 sum_{c,mu,nu} V[c,mu,nu] Tinv[(c,mu,nu),(e,alpha,beta)]``."""
    a, b = interaction.pair
    T = build_t_matrix(model, a, b)
    v = np.zeros(len(T.cols), dtype=complex)
    for j, (c, mu, nu) in enumerate(T.cols):
        blk = interaction.blocks.get(c)
        if blk is not None:
            v[j] = blk[mu - 1, nu - 1]
    gamma = 0.5 * (v @ T.inverse)
    raw = {r: complex(g) for r, g in zip(T.rows, gamma)}
    return _split_vacuum(model, (a, b), raw)


def v2_to_effective(model: AnyonModel, mono: MonodromySpec) -> EffectiveAmplitudes:
    """``Gamma2[e,alpha,beta] = sum_{z,c,mu} gamma_z M_zc Tinv[(c,mu,mu),(e,alpha,beta)]``."""
    mono.check_covers(model)
    a, b = mono.pair
    T = build_t_matrix(model, a, b)
    w = np.zeros(len(T.cols), dtype=complex)
    for j, (c, mu, nu) in enumerate(T.cols):
        if mu == nu:
            w[j] = sum(g * mono.M[z, c] for z, g in mono.loop_amplitudes.items() if g != 0)
    gamma = w @ T.inverse
    raw = {r: complex(g) for r, g in zip(T.rows, gamma)}
    return _split_vacuum(model, (a, b), raw)


def decay_model(g: complex, L: float, xi: float) -> complex:
    """Amplitude ``g * exp(-L/xi)`` of a tunneling process over distance ``L``."""
    if not xi > 0:
        raise ValueError(f'decay length must be positive, got {xi}')
    if L < 0:
        raise ValueError(f'distance must be non-negative, got {L}')
    return g * math.exp(-L / xi)
