"""Reading and writing anyon models as line-oriented text files.

Layout (``#`` starts a comment, blank lines are ignored)::

    format 1
    name ising
    charges I sigma psi
    vacuum I
    [dual]
    <charge> <dual charge>
    [fusion]
    <a> <b> <c> <N>
    [dims]                                        (optional, cross-checked)
    <charge> <value>
    [fsymbols]
    <a> <b> <c> <d> <e> <alpha> <beta> <f> <mu> <nu> <re> <im>
    [twists]                                      (optional)
    <charge> <re> <im>
    [s_matrix]                                    (optional, one row per line)
    <re> <im> <re> <im> ...

Sections appear in this order on export, rows in charge order, and every real
number is written with 17 significant digits so that export, import and
export again reproduce the same bytes.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import AnyonModelError, UnknownChargeError
from .fusion import MAX_MULTIPLICITY, FusionRules
from .models import AnyonModel

__all__ = ['ModelFileError', 'ModelData', 'parse_model', 'build_model', 'load_model',
           'dump_model', 'save_model', 'fmt']

FORMAT_VERSION = 1
SECTIONS = ('dual', 'fusion', 'dims', 'fsymbols', 'twists', 's_matrix')
_WIDTH = {'dual': 2, 'fusion': 4, 'dims': 2, 'fsymbols': 12, 'twists': 3}


class ModelFileError(ValueError):
    """Syntax error in a model file, with the 1-based line number."""

    def __init__(self, line: int | None, message: str):
        self.line = line
        where = f'line {line}: ' if line is not None else ''
        super().__init__(where + message)


def fmt(x: float) -> str:
    """Shortest-safe lossless decimal: 17 significant digits."""
    return format(float(x), '.17g')


@dataclass
class ModelData:
    """Raw contents of a model file, labels unresolved."""
    name: str | None = None
    charges: list[str] = field(default_factory=list)
    vacuum: str | None = None
    dual: dict[str, str] = field(default_factory=dict)
    fusion: list[tuple[str, str, str, int]] = field(default_factory=list)
    dims: dict[str, float] | None = None
    fsymbols: list[tuple] = field(default_factory=list)
    twists: dict[str, complex] | None = None
    s_matrix: list[list[complex]] | None = None
    lines: dict[str, int] = field(default_factory=dict)


def _number(tok: str, line: int, what: str, kind=float):
    try:
        return kind(tok)
    except ValueError:
        raise ModelFileError(line, f'{what}: cannot parse {tok!r} as {kind.__name__}') from None


def parse_model(text: str) -> ModelData:
    """Parse model file text. Only syntax is checked here; see :func:`build_model`."""
    data = ModelData()
    section = None
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        if line.startswith('['):
            if not line.endswith(']'):
                raise ModelFileError(lineno, f'malformed section header {line!r}')
            section = line[1:-1].strip()
            if section not in SECTIONS:
                raise ModelFileError(lineno, f'unknown section [{section}]')
            if section in seen:
                raise ModelFileError(lineno, f'duplicate section [{section}]')
            seen.add(section)
            data.lines[section] = lineno
            if section == 'dims':
                data.dims = {}
            elif section == 'twists':
                data.twists = {}
            elif section == 's_matrix':
                data.s_matrix = []
            continue
        toks = line.split()
        if section is None:
            key, args = toks[0], toks[1:]
            data.lines[key] = lineno
            if key == 'format':
                if len(args) != 1 or args[0] != str(FORMAT_VERSION):
                    raise ModelFileError(lineno, f'unsupported format {" ".join(args)!r}')
            elif key == 'name':
                if len(args) != 1:
                    raise ModelFileError(lineno, 'name: expected exactly one token')
                data.name = args[0]
            elif key == 'charges':
                if not args:
                    raise ModelFileError(lineno, 'charges: empty charge list')
                data.charges = args
            elif key == 'vacuum':
                if len(args) != 1:
                    raise ModelFileError(lineno, 'vacuum: expected exactly one charge')
                data.vacuum = args[0]
            else:
                raise ModelFileError(lineno, f'unknown header field {key!r}')
            continue
        width = _WIDTH.get(section)
        if width is not None and len(toks) != width:
            raise ModelFileError(lineno, f'[{section}] row needs {width} fields, got {len(toks)}')
        if section == 'dual':
            data.dual[toks[0]] = toks[1]
        elif section == 'fusion':
            mult = _number(toks[3], lineno, 'fusion multiplicity', int)
            if not 0 <= mult <= MAX_MULTIPLICITY:
                raise ModelFileError(lineno, f'fusion multiplicity {mult} outside 0..{MAX_MULTIPLICITY}')
            data.fusion.append((toks[0], toks[1], toks[2], mult))
        elif section == 'dims':
            data.dims[toks[0]] = _number(toks[1], lineno, 'dimension')
        elif section == 'fsymbols':
            labels = toks[:10]
            for pos in (5, 6, 8, 9):
                labels[pos] = _number(labels[pos], lineno, 'vertex index', int)
            re = _number(toks[10], lineno, 'real part')
            im = _number(toks[11], lineno, 'imaginary part')
            data.fsymbols.append((tuple(labels), complex(re, im), lineno))
        elif section == 'twists':
            data.twists[toks[0]] = complex(_number(toks[1], lineno, 'twist real part'),
                                           _number(toks[2], lineno, 'twist imaginary part'))
        elif section == 's_matrix':
            if len(toks) % 2:
                raise ModelFileError(lineno, 's_matrix row needs (re, im) pairs')
            vals = [_number(t, lineno, 's_matrix entry') for t in toks]
            data.s_matrix.append([complex(vals[i], vals[i + 1]) for i in range(0, len(vals), 2)])
    if not data.charges:
        raise ModelFileError(data.lines.get('charges'), 'charges: missing or empty charge list')
    if data.vacuum is None:
        raise ModelFileError(None, 'missing vacuum field')
    if 'fusion' not in seen:
        raise ModelFileError(None, 'missing [fusion] section')
    if 'fsymbols' not in seen:
        raise ModelFileError(None, 'missing [fsymbols] section')
    return data


def build_model(data: ModelData, validate: bool = True) -> AnyonModel:
    """Turn parsed data into a model; invariant failures raise :class:`AnyonModelError`."""
    charges = data.charges
    dual = dict(data.dual)
    for c in charges:
        if c not in dual:
            raise AnyonModelError(f'dual map has no entry for {c}')
    try:
        rules = FusionRules.from_entries(charges, data.vacuum, dual, data.fusion)
    except UnknownChargeError as exc:
        raise AnyonModelError(f'fusion data refers to unknown charge {exc.args[0]!r}') from None
    idx = {c: i for i, c in enumerate(rules.charges)}

    def resolve(label, line):
        try:
            return idx[label]
        except KeyError:
            raise AnyonModelError(f'line {line}: unknown charge {label!r}') from None

    entries = {}
    for labels, value, line in data.fsymbols:
        key = list(labels)
        for pos in (0, 1, 2, 3, 4, 7):
            key[pos] = resolve(key[pos], line)
        key = tuple(key)
        if key in entries:
            raise AnyonModelError(f'line {line}: duplicate F-symbol entry')
        entries[key] = value
    dims = None
    if data.dims is not None:
        missing = [c for c in charges if c not in data.dims]
        if missing:
            raise AnyonModelError(f'[dims] has no value for {missing[0]}')
        for c in data.dims:
            resolve(c, data.lines.get('dims'))
        dims = [data.dims[c] for c in charges]
    twists = None
    if data.twists is not None:
        missing = [c for c in charges if c not in data.twists]
        if missing:
            raise AnyonModelError(f'[twists] has no value for {missing[0]}')
        twists = [data.twists[c] for c in charges]
    s_matrix = None
    if data.s_matrix is not None:
        s_matrix = np.array(data.s_matrix, dtype=complex)
        if s_matrix.shape != (rules.n, rules.n):
            raise AnyonModelError(f's_matrix has shape {s_matrix.shape}, expected {(rules.n,) * 2}')
    return AnyonModel.build(data.name or 'unnamed', rules, entries, twists=twists,
                            s_matrix=s_matrix, dims=dims, validate=validate)


def load_model(path, validate: bool = True) -> AnyonModel:
    return build_model(parse_model(Path(path).read_text()), validate=validate)


def dump_model(model: AnyonModel) -> str:
    """Canonical text form of a model."""
    lab = model.charges
    rules = model.rules
    out = ['# anyon model file', f'format {FORMAT_VERSION}', f'name {model.name}',
           'charges ' + ' '.join(lab), f'vacuum {lab[model.vacuum]}', '[dual]']
    out += [f'{lab[a]} {lab[rules.dual[a]]}' for a in range(rules.n)]
    out.append('[fusion]')
    for a in range(rules.n):
        for b in range(rules.n):
            for c in rules.products(a, b):
                out.append(f'{lab[a]} {lab[b]} {lab[c]} {rules.N[a, b, c]}')
    out.append('[dims]')
    out += [f'{lab[a]} {fmt(model.dims[a])}' for a in range(rules.n)]
    out.append('[fsymbols]')
    for key in model.f:
        a, b, c, d, e, al, be, f, mu, nu = key
        v = model.f.value(*key)
        out.append(f'{lab[a]} {lab[b]} {lab[c]} {lab[d]} {lab[e]} {al} {be} '
                   f'{lab[f]} {mu} {nu} {fmt(v.real)} {fmt(v.imag)}')
    if model.twists is not None:
        out.append('[twists]')
        out += [f'{lab[a]} {fmt(t.real)} {fmt(t.imag)}' for a, t in enumerate(model.twists)]
    if model.s_matrix is not None:
        out.append('[s_matrix]')
        for row in model.s_matrix:
            out.append(' '.join(f'{fmt(x.real)} {fmt(x.imag)}' for x in row))
    return '\n'.join(out) + '\n'


def save_model(model: AnyonModel, path) -> None:
    Path(path).write_text(dump_model(model))
