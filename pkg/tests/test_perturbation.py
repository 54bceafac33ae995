import itertools
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from anyonsplit import (AnyonModel, AnyonModelError, GeneralInteraction, MonodromySpec,
                        TunnelingSpec, UnsupportedOperationError, build_t_matrix, decay_model,
                        effective_amplitudes, interaction_spectrum, make_su2k, splitting_spectrum,
                        tunneling_charges, v2_spectrum, v2_to_effective)
from anyonsplit.perturbation import NonHermitianError
from oracles import GOLDEN


def random_spec(model, a, b, rng, scale=1.0, real=False):
    """Independent continuous random amplitudes on every non-vacuum tunneling index."""
    amps = {}
    for t in tunneling_charges(model.rules, a, b):
        if t.charge == model.vacuum:
            continue
        for al in t.alphas:
            for be in t.betas:
                z = rng.normal(scale=scale) + (0 if real else 1j * rng.normal(scale=scale))
                amps[t.charge, al, be] = z
    return TunnelingSpec.create(model, a, b, amps)


def random_hermitian(model, a, b, rng):
    blocks = {}
    for c in model.rules.products(model.index(a), model.index(b)):
        m = model.rules.N[model.index(a), model.index(b), c]
        X = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
        blocks[c] = (X + X.conj().T) / 2
    return GeneralInteraction.create(model, a, b, blocks)


def all_pairs(model):
    n = model.rules.n
    return [(a, b) for a in range(n) for b in range(a, n)]


class TestTMatrix:
    def test_ising_forward_and_inverse(self, ising):
        T = build_t_matrix(ising, 'sigma', 'sigma')
        assert T.rows == ((0, 1, 1), (2, 1, 1)) and T.cols == ((0, 1, 1), (2, 1, 1))
        assert np.max(np.abs(T.forward - [[1, 1], [1, -1]])) < 1e-12
        assert np.max(np.abs(T.inverse - 0.5 * np.array([[1, 1], [1, -1]]))) < 1e-12
        assert T.identity_residual() < 1e-12

    def test_fibonacci(self, fibonacci):
        T = build_t_matrix(fibonacci, 'eps', 'eps')
        assert np.max(np.abs(T.forward - [[1, 1], [1, -1 / GOLDEN]])) < 1e-12

    def test_su2k4_spin_one(self):
        T = build_t_matrix(make_su2k(4), '1', '1')
        expected = [[1, 1, 1], [1, 0, -1], [1, -1, 1]]
        assert np.max(np.abs(T.forward - expected)) < 1e-12

    def test_inverse_is_closed_form(self, ising, fibonacci, rep_a4):
        """The stored inverse is the dimension-weighted conjugate and agrees with LAPACK."""
        for model in (ising, fibonacci, rep_a4, make_su2k(5)):
            d = model.dims
            for a, b in all_pairs(model):
                T = build_t_matrix(model, a, b)
                for i, (e, _, _) in enumerate(T.rows):
                    for j, (c, _, _) in enumerate(T.cols):
                        expected = d[c] * d[e] / (d[a] * d[b]) * np.conj(T.forward[i, j])
                        assert T.inverse[j, i] == pytest.approx(expected, abs=1e-15)
                assert np.max(np.abs(T.inverse - np.linalg.inv(T.forward))) < 1e-10

    def test_multiplicity_block(self, rep_a4):
        T = build_t_matrix(rep_a4, '3', '3')
        assert T.forward.shape == (7, 7)
        assert (3, 2, 1) in T.row_index and (3, 1, 2) in T.col_index
        assert T.identity_residual() < 1e-10

    def test_vacuum_row_is_identity_on_diagonal(self, rep_a4, ising):
        for model in (rep_a4, ising):
            for a, b in all_pairs(model):
                T = build_t_matrix(model, a, b)
                row = T.forward[T.row_index[model.vacuum, 1, 1]]
                expected = [1.0 if mu == nu else 0.0 for _, mu, nu in T.cols]
                assert np.max(np.abs(row - expected)) < 1e-12

    def test_trace_identity(self, ising, fibonacci):
        """sum_c d_c T[e, c] = d_a d_b delta_{e,I} for multiplicity-free pairs."""
        for model in (ising, fibonacci, make_su2k(6)):
            d = model.dims.as_array()
            for a, b in all_pairs(model):
                T = build_t_matrix(model, a, b)
                dc = d[[c for c, _, _ in T.cols]]
                expected = [d[a] * d[b] if e == model.vacuum else 0 for e, _, _ in T.rows]
                assert np.max(np.abs(T.forward @ dc - expected)) < 1e-10

    def test_refuses_non_unitary(self, ising):
        bad = AnyonModel.build('scaled', ising.rules, ising.f.scaled(1.1).entries, validate=False)
        with pytest.raises(AnyonModelError, match='non-unitary'):
            build_t_matrix(bad, 'sigma', 'sigma')


class TestSpectrumExamples:
    def test_ising(self, ising):
        r = splitting_spectrum(ising, TunnelingSpec.create(ising, 'sigma', 'sigma', {'psi': 0.1}))
        assert r.energies() == pytest.approx({'I': (0.2,), 'psi': (-0.2,)}, abs=1e-12)
        assert [lvl.energy for lvl in r.gap_structure] == pytest.approx([-0.2, 0.2])

    def test_fibonacci(self, fibonacci):
        r = splitting_spectrum(fibonacci, TunnelingSpec.create(fibonacci, 'eps', 'eps', {'eps': 0.1}))
        e = r.energies()
        assert e['I'][0] == pytest.approx(0.2, abs=1e-12)
        assert e['eps'][0] == pytest.approx(-0.12360679774997896, abs=1e-12)

    def test_su2k4_degenerate_channels(self):
        m = make_su2k(4)
        r = splitting_spectrum(m, TunnelingSpec.create(m, '1', '1', {'1': 0, '2': 0.05}))
        e = r.energies()
        assert e['0'][0] == pytest.approx(0.1, abs=1e-12)
        assert e['1'][0] == pytest.approx(-0.1, abs=1e-12)
        assert e['2'][0] == pytest.approx(0.1, abs=1e-12)
        top = r.gap_structure[-1]
        assert top.multiplicity == 2 and top.channels == ('0', '2')

    def test_zero_amplitudes(self, ising, rep_a4):
        for model, a in ((ising, 'sigma'), (rep_a4, '3')):
            r = splitting_spectrum(model, TunnelingSpec.create(model, a, a, {}))
            assert np.all(r.all_energies() == 0)
            assert len(r.gap_structure) == 1

    def test_abelian_pair_single_channel(self, ising):
        r = splitting_spectrum(ising, TunnelingSpec.create(ising, 'psi', 'psi', {}))
        assert list(r.energies()) == ['I']

    def test_complex_phase_enters_through_real_part(self, ising):
        r = splitting_spectrum(ising, TunnelingSpec.create(ising, 'sigma', 'sigma', {'psi': 0.3 + 0.4j}))
        assert r.energies()['I'][0] == pytest.approx(0.6, abs=1e-12)


class TestSpecValidation:
    def test_invalid_tunneling_charge(self, ising):
        with pytest.raises(ValueError, match='not a tunneling index'):
            TunnelingSpec.create(ising, 'sigma', 'sigma', {'sigma': 0.1})

    def test_invalid_multiplicity_index(self, rep_a4):
        with pytest.raises(ValueError):
            TunnelingSpec.create(rep_a4, '3', '3', {('3', 3, 1): 0.1})

    def test_vacuum_amplitude_rejected(self, ising):
        with pytest.raises(ValueError, match='vacuum'):
            TunnelingSpec.create(ising, 'sigma', 'sigma', {'I': 0.1})
        spec = TunnelingSpec.create(ising, 'sigma', 'sigma', {'I': 0})
        assert spec.amplitudes == {}

    def test_unknown_charge(self, ising):
        with pytest.raises(KeyError):
            TunnelingSpec.create(ising, 'sigma', 'tau', {})

    def test_symmetric_fills_all_vertices(self, rep_a4):
        spec = TunnelingSpec.symmetric(rep_a4, '3', '3', {'3': 0.2})
        assert {k: v for k, v in spec.amplitudes.items()} == {
            (3, al, be): 0.2 for al in (1, 2) for be in (1, 2)}

    def test_symmetric_spectrum_is_hermitian(self, rep_a4):
        spec = TunnelingSpec.symmetric(rep_a4, '3', '3', {'3': 0.2 + 0.1j, '1p': 0.05})
        r = splitting_spectrum(rep_a4, spec)
        assert sum(len(s.eigenvalues) for s in r.per_channel.values()) == 5


class TestHermiticity:
    def test_rejects_non_hermitian(self, rep_a4):
        X = np.array([[0, 1], [0, 0]], dtype=complex)
        with pytest.raises(NonHermitianError) as info:
            GeneralInteraction.create(rep_a4, '3', '3', {'3': X})
        assert info.value.channel == '3' and {info.value.mu, info.value.nu} == {1, 2}

    def test_rejects_complex_diagonal(self, ising):
        with pytest.raises(NonHermitianError):
            GeneralInteraction.create(ising, 'sigma', 'sigma', {'I': [[1j]]})

    def test_shape_mismatch(self, rep_a4):
        with pytest.raises(ValueError, match='shape'):
            GeneralInteraction.create(rep_a4, '3', '3', {'3': np.eye(3)})

    def test_not_a_channel(self, ising):
        with pytest.raises(ValueError, match='channel'):
            GeneralInteraction.create(ising, 'sigma', 'sigma', {'sigma': [[1.0]]})

    def test_multiplicity_blocks_hermitian(self, rep_a4, rng):
        for _ in range(200):
            r = splitting_spectrum(rep_a4, random_spec(rep_a4, '3', '3', rng))
            for s in r.per_channel.values():
                assert np.max(np.abs(s.matrix - s.matrix.conj().T)) <= 1e-12
                assert len(s.eigenvalues) == rep_a4.rules.N[3, 3, s.charge]
                assert list(s.eigenvalues) == sorted(s.eigenvalues)

    def test_multiplicity_lifts_degeneracy(self, rep_a4, rng):
        """With independent vertex-resolved amplitudes the 2x2 block of channel 3 splits."""
        for _ in range(200):
            E = splitting_spectrum(rep_a4, random_spec(rep_a4, '3', '3', rng)).all_energies()
            E = np.sort(E)
            assert np.min(np.diff(E)) > 1e-9


class TestMonodromy:
    def test_ising_sigma_loop(self, ising):
        mono = MonodromySpec.from_model(ising, 'sigma', 'sigma', {'sigma': 0.1})
        e = v2_spectrum(ising, mono).energies()
        assert e['I'][0] == pytest.approx(0.2, abs=1e-12)
        assert e['psi'][0] == pytest.approx(-0.2, abs=1e-12)

    def test_zero_loops(self, ising):
        mono = MonodromySpec.from_model(ising, 'sigma', 'sigma', {})
        assert np.all(v2_spectrum(ising, mono).all_energies() == 0)

    def test_vacuum_loop_uniform_shift(self, fibonacci):
        mono = MonodromySpec.from_model(fibonacci, 'eps', 'eps', {'I': 0.25 + 1j})
        assert v2_spectrum(fibonacci, mono).all_energies() == pytest.approx([0.5, 0.5], abs=1e-12)

    def test_unsupported_without_braiding(self, rep_a4):
        with pytest.raises(UnsupportedOperationError):
            MonodromySpec.from_model(rep_a4, '3', '3', {'3': 0.1})

    def test_explicit_scalars_checked(self, ising):
        with pytest.raises(ValueError):
            MonodromySpec.create(ising, 'sigma', 'sigma', {'psi': 1}, {('I', 'psi'): 0.5})
        with pytest.raises(ValueError):
            MonodromySpec.create(ising, 'sigma', 'sigma', {'psi': 1}, {('psi', 'psi'): 2})

    def test_explicit_scalars_must_cover(self, ising):
        mono = MonodromySpec.create(ising, 'sigma', 'sigma', {'psi': 0.1}, {('psi', 'I'): 1})
        with pytest.raises(UnsupportedOperationError, match='no monodromy scalar'):
            v2_spectrum(ising, mono)

    def test_degeneracy_preserved_with_multiplicity(self, rep_a4):
        # trivial braiding for a symmetric category: every M is 1
        M = {(z, c): 1 for z in rep_a4.charges for c in rep_a4.charges}
        mono = MonodromySpec.create(rep_a4, '3', '3', {'3': 0.3}, M)
        r = v2_spectrum(rep_a4, mono)
        for s in r.per_channel.values():
            assert len(set(s.eigenvalues)) == 1
            assert len(s.eigenvalues) == rep_a4.rules.N[3, 3, s.charge]

    def test_v2_equals_effective(self, ising):
        """Ising: loop amplitude gamma_sigma acts as tunneling Gamma_psi = gamma_sigma."""
        for g in (0.1, -0.37, 1.5):
            eff = v2_to_effective(ising, MonodromySpec.from_model(ising, 'sigma', 'sigma', {'sigma': g}))
            assert eff.spec.get(2) == pytest.approx(g, abs=1e-12)
            assert eff.offset == pytest.approx(0, abs=1e-12)

    def test_psi_loop_equivalence(self, ising):
        mono = MonodromySpec.from_model(ising, 'sigma', 'sigma', {'psi': 0.2})
        eff = v2_to_effective(ising, mono)
        direct = v2_spectrum(ising, mono).all_energies()
        via = splitting_spectrum(ising, eff.spec).shifted(eff.offset).all_energies()
        assert np.max(np.abs(direct - via)) < 1e-12

    def test_zero_loops_effective(self, ising):
        eff = v2_to_effective(ising, MonodromySpec.from_model(ising, 'sigma', 'sigma', {}))
        assert all(v == 0 for v in eff.spec.amplitudes.values()) and eff.offset == 0


class TestEffectiveAmplitudes:
    def test_zero_interaction(self, fibonacci):
        eff = effective_amplitudes(fibonacci, GeneralInteraction.create(fibonacci, 'eps', 'eps', {}))
        assert all(v == 0 for v in eff.spec.amplitudes.values()) and eff.offset == 0

    def test_fibonacci_round_trip(self, fibonacci):
        spec = TunnelingSpec.create(fibonacci, 'eps', 'eps', {'eps': 0.1})
        V = GeneralInteraction.from_tunneling(fibonacci, spec)
        eff = effective_amplitudes(fibonacci, V)
        assert eff.spec.get(1) == pytest.approx(0.1, abs=1e-12)
        assert eff.offset == pytest.approx(0, abs=1e-12)
        a = splitting_spectrum(fibonacci, spec).all_energies()
        b = splitting_spectrum(fibonacci, eff.spec).all_energies()
        assert np.max(np.abs(a - b)) < 1e-12

    def test_half_factor_recovers_real_part(self, fibonacci):
        spec = TunnelingSpec.create(fibonacci, 'eps', 'eps', {'eps': 0.1 + 0.2j})
        eff = effective_amplitudes(fibonacci, GeneralInteraction.from_tunneling(fibonacci, spec))
        assert eff.spec.get(1) == pytest.approx(0.1, abs=1e-12)

    def test_ising_from_v2(self, ising):
        mono = MonodromySpec.from_model(ising, 'sigma', 'sigma', {'sigma': 0.3})
        eff = effective_amplitudes(ising, GeneralInteraction.from_monodromy(ising, mono))
        assert eff.spec.get(2) == pytest.approx(0.3, abs=1e-12)

    def test_offset_reports_trace(self, ising):
        V = GeneralInteraction.create(ising, 'sigma', 'sigma', {'I': [[1.0]], 'psi': [[3.0]]})
        eff = effective_amplitudes(ising, V)
        assert eff.offset == pytest.approx(2.0, abs=1e-12)
        assert eff.raw[0, 1, 1] == pytest.approx(1.0, abs=1e-12)
        assert (0, 1, 1) not in eff.spec.amplitudes

    @pytest.mark.parametrize('which', ['ising', 'fibonacci', 'su2k_4', 'su2k_7', 'rep_a4'])
    def test_round_trip_arbitrary_hermitian(self, which, ising, fibonacci, rep_a4, rng):
        model = {'ising': ising, 'fibonacci': fibonacci, 'rep_a4': rep_a4}.get(which) \
            or make_su2k(int(which[-1]))
        for a, b in all_pairs(model):
            for _ in range(5):
                V = random_hermitian(model, a, b, rng)
                eff = effective_amplitudes(model, V)
                rebuilt = splitting_spectrum(model, eff.spec).shifted(eff.offset)
                direct = interaction_spectrum(model, V)
                for c, s in direct.per_channel.items():
                    assert np.max(np.abs(np.subtract(s.eigenvalues,
                                                     rebuilt.per_channel[c].eigenvalues))) < 1e-10


class TestDecay:
    def test_zero_distance(self):
        assert decay_model(0.3 + 0.1j, 0, 2.0) == 0.3 + 0.1j

    def test_one_length(self):
        assert decay_model(1, 5.0, 5.0) == pytest.approx(0.3678794412, abs=1e-10)

    @pytest.mark.parametrize('xi', [0, -1])
    def test_bad_length(self, xi):
        with pytest.raises(ValueError):
            decay_model(1, 1, xi)

    def test_negative_distance(self):
        with pytest.raises(ValueError):
            decay_model(1, -1, 1)

    @given(st.floats(0, 50), st.floats(0, 50), st.floats(0.1, 10))
    def test_monotone(self, L1, L2, xi):
        assume(L2 - L1 > 1e-6 and math.exp(-L2 / xi) > 1e-300)
        assert abs(decay_model(2.0, L1, xi)) > abs(decay_model(2.0, L2, xi))


amplitude = st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False)


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=2, max_value=7), st.data())
def test_su2k_spectrum_properties(k, data):
    """Eigenvalue count, ordering and the trace identity for random amplitudes."""
    model = make_su2k(k)
    a = data.draw(st.integers(1, k))
    b = data.draw(st.integers(1, k))
    charges = [t.charge for t in tunneling_charges(model.rules, a, b) if t.charge != 0]
    amps = {e: data.draw(amplitude) for e in charges}
    r = splitting_spectrum(model, TunnelingSpec.create(model, a, b, amps))
    assert set(r.per_channel) == {model.charges[c] for c in model.rules.products(a, b)}
    assert all(len(s.eigenvalues) == 1 for s in r.per_channel.values())
    weighted = sum(model.dims[s.charge] * s.eigenvalues[0] for s in r.per_channel.values())
    scale = max([1.0] + [abs(v) for v in amps.values()])
    assert abs(weighted) < 1e-10 * scale * model.dims[a] * model.dims[b]
    assert sum(lvl.multiplicity for lvl in r.gap_structure) == len(r.per_channel)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=3, max_size=3))
def test_ising_v2_paths_agree(gammas):
    from anyonsplit import make_ising
    ising = make_ising()
    loops = dict(zip(('I', 'sigma', 'psi'), gammas))
    mono = MonodromySpec.from_model(ising, 'sigma', 'sigma', loops)
    eff = v2_to_effective(ising, mono)
    via = splitting_spectrum(ising, eff.spec).shifted(eff.offset).all_energies()
    assert np.max(np.abs(v2_spectrum(ising, mono).all_energies() - via)) < 1e-12
    general = effective_amplitudes(ising, GeneralInteraction.from_monodromy(ising, mono))
    for key, value in eff.raw.items():
        assert abs(general.raw[key] - value) < 1e-12


def test_su2k_pairs_generic_lifting_small(rng):
    for k in (2, 3, 4):
        model = make_su2k(k)
        for a, b in itertools.combinations_with_replacement(range(1, k + 1), 2):
            if len(model.rules.products(a, b)) < 2:
                continue
            for _ in range(50):
                E = np.sort(splitting_spectrum(model, random_spec(model, a, b, rng)).all_energies())
                assert np.min(np.diff(E)) > 1e-9
