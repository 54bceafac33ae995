"""Command line interface.

Models are given either as a path to a model file or as a built-in name
(``ising``, ``fibonacci``, ``su2k --k K``). Exit codes: 0 success,
1 validation failure, 2 parse or usage error.

Assignment syntax for amplitudes (repeatable flags)::

    --gamma  E=RE[,IM]          Gamma_{E,1,1}
    --gamma  E:ALPHA:BETA=RE[,IM]
    --decay  E=G_RE,G_IM,L,XI    Gamma_E = g exp(-L/xi)
    --loop   Z=RE[,IM]          loop amplitude gamma_Z
    --v      C=RE               1x1 block of a general interaction
    --v      C:MU:NU=RE[,IM]    one entry of V_C
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import AnyonModelError, UnknownChargeError, UnsupportedOperationError
from .modelfile import ModelFileError, build_model, dump_model, fmt, load_model, parse_model
from .models import BUILTIN_NAMES, builtin_model
from .perturbation import (GeneralInteraction, MonodromySpec, NonHermitianError, SplittingResult,
                           TunnelingSpec, decay_model, effective_amplitudes, interaction_spectrum,
                           splitting_spectrum, v2_to_effective)

EXIT_OK, EXIT_INVALID, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# -- argument helpers ----------------------------------------------------------------

def _complex(text: str, flag: str) -> complex:
    parts = text.split(',')
    if len(parts) not in (1, 2):
        raise UsageError(f'{flag}: expected RE or RE,IM, got {text!r}')
    try:
        vals = [float(p) for p in parts]
    except ValueError:
        raise UsageError(f'{flag}: cannot parse {text!r} as a number') from None
    return complex(vals[0], vals[1] if len(vals) == 2 else 0.0)


def _split_assignment(text: str, flag: str) -> tuple[str, int, int, str]:
    if '=' not in text:
        raise UsageError(f'{flag}: expected KEY=VALUE, got {text!r}')
    key, value = text.split('=', 1)
    parts = key.split(':')
    if len(parts) == 1:
        return parts[0], 1, 1, value
    if len(parts) == 3:
        try:
            return parts[0], int(parts[1]), int(parts[2]), value
        except ValueError:
            raise UsageError(f'{flag}: vertex indices must be integers in {key!r}') from None
    raise UsageError(f'{flag}: expected CHARGE or CHARGE:I:J before "=", got {key!r}')


def _load(args):
    src = args.model
    if src.lower() in BUILTIN_NAMES:
        if src.lower() == 'su2k' and args.k is None:
            raise UsageError('su2k needs --k K')
        try:
            return builtin_model(src, args.k)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    path = Path(src)
    if not path.exists():
        raise UsageError(f'no such model file or built-in model: {src!r}')
    return load_model(path)


def _pair(model, text):
    parts = text.split(',')
    if len(parts) != 2:
        raise UsageError(f'--pair: expected A,B, got {text!r}')
    for p in parts:
        model.index(p)
    return parts[0], parts[1]


def _amplitudes(model, args):
    out = {}
    for item in args.gamma or []:
        e, al, be, value = _split_assignment(item, '--gamma')
        key = (model.index(e), al, be)
        out[key] = out.get(key, 0j) + _complex(value, '--gamma')
    for item in args.decay or []:
        e, al, be, value = _split_assignment(item, '--decay')
        parts = value.split(',')
        if len(parts) != 4:
            raise UsageError(f'--decay: expected G_RE,G_IM,L,XI, got {value!r}')
        try:
            g_re, g_im, L, xi = (float(p) for p in parts)
        except ValueError:
            raise UsageError(f'--decay: cannot parse {value!r}') from None
        if xi <= 0 or L < 0:
            raise UsageError('--decay: need L >= 0 and XI > 0')
        key = (model.index(e), al, be)
        out[key] = out.get(key, 0j) + decay_model(complex(g_re, g_im), L, xi)
    return out


def _tunneling_spec(model, pair, args):
    try:
        return TunnelingSpec.create(model, *pair, _amplitudes(model, args))
    except ValueError as exc:
        raise UsageError(str(exc)) from None


# -- output -------------------------------------------------------------------------------

def _spectrum_records(model, result: SplittingResult, prefix=''):
    lines, js = [], []
    for lab, ch in result.per_channel.items():
        m = len(ch.matrix)
        lines.append(f'{prefix}channel {lab} {m}')
        entries = []
        for mu in range(m):
            for nu in range(m):
                v = ch.matrix[mu, nu]
                lines.append(f'{prefix}matrix {lab} {mu + 1} {nu + 1} {fmt(v.real)} {fmt(v.imag)}')
                entries.append([mu + 1, nu + 1, v.real, v.imag])
        for i, E in enumerate(ch.eigenvalues, start=1):
            lines.append(f'{prefix}eigenvalue {lab} {i} {fmt(E)}')
        js.append({'channel': lab, 'multiplicity': m, 'matrix': entries,
                   'eigenvalues': list(ch.eigenvalues)})
    levels = []
    for lev in result.gap_structure:
        lines.append(f'{prefix}level {fmt(lev.energy)} {lev.multiplicity} {",".join(lev.channels)}')
        levels.append({'energy': lev.energy, 'multiplicity': lev.multiplicity,
                       'channels': list(lev.channels)})
    return lines, {'channels': js, 'levels': levels}


def _emit(args, lines, payload, out):
    if args.format == 'json':
        out.write(json.dumps(payload, indent=2) + '\n')
    else:
        out.write('\n'.join(lines) + '\n')


def _amplitude_records(model, amplitudes: dict, tag: str):
    lab = model.charges
    lines, js = [], []
    for (e, al, be), g in sorted(amplitudes.items()):
        lines.append(f'{tag} {lab[e]} {al} {be} {fmt(g.real)} {fmt(g.imag)}')
        js.append({'charge': lab[e], 'alpha': al, 'beta': be, 're': g.real, 'im': g.imag})
    return lines, js


# -- commands --------------------------------------------------------------------------------

def cmd_validate(args, out) -> int:
    src = args.model
    if src.lower() in BUILTIN_NAMES:
        model = _load(args)
    else:
        path = Path(src)
        if not path.exists():
            raise UsageError(f'no such model file: {src!r}')
        data = parse_model(path.read_text())
        try:
            model = build_model(data, validate=False)
        except AnyonModelError as exc:
            lines = [f'model {data.name or "unnamed"}', 'status fail', f'failure {exc}']
            _emit(args, lines, {'model': data.name, 'status': 'fail', 'failures': [str(exc)]}, out)
            return EXIT_INVALID
    report = model.validate()
    lines = [f'model {model.name}',
             f'charges {len(model.charges)}',
             f'pentagon_max_residual {fmt(report.pentagon_max_residual)}',
             f'pentagon_violations {report.pentagon_violations}',
             f'unitarity_max_deviation {fmt(report.unitarity_max_deviation)}',
             f'unitarity_violations {report.unitarity_violations}',
             f'dimension_residual {fmt(report.dimension_residual)}',
             f'status {"ok" if report.ok else "fail"}']
    lines += [f'failure {f}' for f in report.failures]
    payload = {'model': model.name, 'charges': list(model.charges),
               'pentagon_max_residual': report.pentagon_max_residual,
               'pentagon_violations': report.pentagon_violations,
               'unitarity_max_deviation': report.unitarity_max_deviation,
               'unitarity_violations': report.unitarity_violations,
               'dimension_residual': report.dimension_residual,
               'status': 'ok' if report.ok else 'fail', 'failures': report.failures}
    _emit(args, lines, payload, out)
    return EXIT_OK if report.ok else EXIT_INVALID


def cmd_spectrum(args, out) -> int:
    model = _load(args)
    pair = _pair(model, args.pair)
    spec = _tunneling_spec(model, pair, args)
    result = splitting_spectrum(model, spec, degeneracy_tol=args.degeneracy_tol)
    amp_lines, amp_js = _amplitude_records(model, dict(spec.amplitudes), 'amplitude')
    spec_lines, spec_js = _spectrum_records(model, result)
    lines = [f'model {model.name}', f'pair {pair[0]} {pair[1]}'] + amp_lines + spec_lines
    payload = {'model': model.name, 'pair': list(pair), 'amplitudes': amp_js, **spec_js}
    _emit(args, lines, payload, out)
    return EXIT_OK


def _interaction_blocks(model, pair, args):
    a, b = model.index(pair[0]), model.index(pair[1])
    N = model.rules.N
    blocks = {}
    for item in args.v or []:
        c, mu, nu, value = _split_assignment(item, '--v')
        ci = model.index(c)
        if ci not in model.rules.products(a, b):
            raise UsageError(f'--v: {c} is not a fusion channel of the pair')
        m = N[a, b, ci]
        if not (1 <= mu <= m and 1 <= nu <= m):
            raise UsageError(f'--v: vertex indices ({mu},{nu}) out of range 1..{m} for channel {c}')
        blk = blocks.setdefault(ci, np.zeros((m, m), dtype=complex))
        blk[mu - 1, nu - 1] = _complex(value, '--v')
    return blocks


def cmd_effective(args, out) -> int:
    model = _load(args)
    pair = _pair(model, args.pair)
    sources = sum(bool(x) for x in (args.v, args.loop, args.gamma or args.decay))
    if sources > 1:
        raise UsageError('give only one of --v, --loop, or --gamma/--decay')
    target = None
    if args.loop:
        loops = {}
        for item in args.loop:
            z, al, be, value = _split_assignment(item, '--loop')
            if (al, be) != (1, 1):
                raise UsageError('--loop takes CHARGE=RE[,IM]')
            loops[model.index(z)] = loops.get(model.index(z), 0j) + _complex(value, '--loop')
        mono = MonodromySpec.from_model(model, *pair, loops)
        eff = v2_to_effective(model, mono)
        if args.reconstruct:
            target = interaction_spectrum(model, GeneralInteraction.from_monodromy(model, mono),
                                          args.degeneracy_tol)
    else:
        if args.gamma or args.decay:
            interaction = GeneralInteraction.from_tunneling(model, _tunneling_spec(model, pair, args))
        else:
            interaction = GeneralInteraction.create(model, *pair, _interaction_blocks(model, pair, args))
        eff = effective_amplitudes(model, interaction)
        target = interaction_spectrum(model, interaction, args.degeneracy_tol)
    amp_lines, amp_js = _amplitude_records(model, dict(eff.spec.amplitudes), 'effective')
    lines = [f'model {model.name}', f'pair {pair[0]} {pair[1]}'] + amp_lines
    lines.append(f'offset {fmt(eff.offset)}')
    payload = {'model': model.name, 'pair': list(pair), 'effective': amp_js, 'offset': eff.offset}
    if args.reconstruct:
        rebuilt = splitting_spectrum(model, eff.spec, args.degeneracy_tol).shifted(eff.offset)
        rl, rj = _spectrum_records(model, rebuilt, prefix='reconstructed_')
        lines += rl
        payload['reconstructed'] = rj
        if target is not None:
            tl, tj = _spectrum_records(model, target, prefix='target_')
            lines += tl
            payload['target'] = tj
    _emit(args, lines, payload, out)
    return EXIT_OK


def cmd_export(args, out) -> int:
    model = _load(args)
    text = dump_model(model)
    if args.output:
        Path(args.output).write_text(text)
    else:
        out.write(text)
    return EXIT_OK


def cmd_list_models(args, out) -> int:
    out.write('ising\nfibonacci\nsu2k --k K\n')
    return EXIT_OK


# -- parser -------------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='anyonsplit',
        description='Validate anyon models and compute tunneling-induced degeneracy splitting.')
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    sub = parser.add_subparsers(dest='command', required=True)

    def model_args(p):
        p.add_argument('model', help='model file path or built-in name (ising, fibonacci, su2k)')
        p.add_argument('--k', type=int, help='level for su2k')
        p.add_argument('--format', choices=('text', 'json'), default='text')

    def amp_args(p):
        p.add_argument('--pair', required=True, help='anyon pair A,B')
        p.add_argument('--gamma', action='append', metavar='E[:A:B]=RE[,IM]')
        p.add_argument('--decay', action='append', metavar='E[:A:B]=G_RE,G_IM,L,XI')
        p.add_argument('--degeneracy-tol', type=float, default=1e-9)

    p = sub.add_parser('validate', help='check pentagon, unitarity and dimension consistency')
    model_args(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser('spectrum', help='channel energies from tunneling amplitudes')
    model_args(p)
    amp_args(p)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser('effective', help='effective tunneling amplitudes of an interaction')
    model_args(p)
    amp_args(p)
    p.add_argument('--loop', action='append', metavar='Z=RE[,IM]')
    p.add_argument('--v', action='append', metavar='C[:MU:NU]=RE[,IM]')
    p.add_argument('--reconstruct', action='store_true',
                   help='also print the spectrum rebuilt from the effective amplitudes')
    p.set_defaults(func=cmd_effective)

    p = sub.add_parser('export', help='write a model in the model file format')
    model_args(p)
    p.add_argument('-o', '--output')
    p.set_defaults(func=cmd_export)

    p = sub.add_parser('list-models', help='list built-in models')
    p.set_defaults(func=cmd_list_models)
    return parser


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args, out)
    except (AnyonModelError, NonHermitianError, UnsupportedOperationError) as exc:
        err.write(f'invalid: {exc}\n')
        return EXIT_INVALID
    except (UsageError, ModelFileError, UnknownChargeError, ValueError) as exc:
        err.write(f'error: {exc}\n')
        return EXIT_USAGE


if __name__ == '__main__':  # pragma: no cover
    sys.exit(main())
