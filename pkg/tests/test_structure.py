import itertools

import numpy as np
import pytest

from qcalab.dirac import dirac_scattering_unitary
from qcalab.operators import (
    DenseOperator,
    density_from_vector,
    identity_operator,
    partial_trace,
    support_of,
    tensor_state,
    trace_distance,
    unitarity_defect,
)
from qcalab.pqca import Pqca, composed_step_operator, pqca_as_ring_operator, regroup_pairs
from qcalab.state import RingSpace
from qcalab.structure import (
    EMPTY,
    F_SYM,
    T_SYM,
    XorWord,
    build_localization,
    causality_check,
    extend_to_right_subcells,
    lift_classical,
    quiescence_preserving_local,
    signalling_demo,
    single_cell_product,
    subcell_swap,
    xor_ca_step,
    xor_lifted,
    xor_plus,
    xor_window_step,
)


def dirac_block_layer(cells=4, mass=0.6, eps=0.5):
    ring = RingSpace(cells, 2)
    pq = Pqca(dirac_scattering_unitary(mass, eps))
    j = pqca_as_ring_operator(pq, ring, "even")
    blocks = {x: {x - (x % 2), x - (x % 2) + 1} for x in range(cells)}
    return j, blocks


class TestXorRule:
    @pytest.mark.parametrize(
        "a,b,expected",
        [
            (T_SYM, F_SYM, T_SYM),
            (F_SYM, T_SYM, T_SYM),
            (T_SYM, T_SYM, F_SYM),
            (F_SYM, F_SYM, F_SYM),
            (T_SYM, EMPTY, T_SYM),
            (EMPTY, T_SYM, EMPTY),
            (EMPTY, EMPTY, EMPTY),
        ],
    )
    def test_pair_table(self, a, b, expected):
        assert xor_plus(a, b) == expected

    def test_all_f_word_is_fixed(self):
        assert str(xor_ca_step(XorWord.from_string("ffff"))) == "ffff"

    def test_all_t_word_collapses_to_the_f_image(self):
        assert str(xor_ca_step(XorWord.from_string("tttt"))) == "ffft"

    def test_lone_t_survives_in_place(self):
        assert str(xor_ca_step(XorWord.from_string("t"))) == "t"

    def test_word_with_gap(self):
        assert str(xor_ca_step(XorWord.from_string("t0t"))) == "t0t"

    def test_support_never_grows(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            raw = tuple(rng.integers(0, 3, size=rng.integers(1, 9)))
            word = XorWord(raw)
            stepped = xor_ca_step(word)
            occupied = {i for i, s in enumerate(word.symbols) if s != EMPTY}
            occupied_after = {i for i, s in enumerate(stepped.symbols) if s != EMPTY}
            assert occupied_after <= occupied

    def test_window_overflow_rejected(self):
        with pytest.raises(ValueError, match="does not fit"):
            xor_ca_step(XorWord.from_string("tttt"), window=3)

    def test_word_trimming_and_parsing(self):
        assert XorWord.from_string("0tf0").symbols == (T_SYM, F_SYM)
        with pytest.raises(ValueError, match="invalid symbol"):
            XorWord.from_string("txf")


class TestLifting:
    def test_identity_step(self):
        lifted = lift_classical(lambda w: w, 3)
        assert np.array_equal(lifted.matrix, np.eye(27))

    @pytest.mark.parametrize("length", [2, 3, 4, 5])
    def test_xor_lifting_is_a_permutation(self, length):
        lifted = xor_lifted(length)
        m = lifted.matrix
        assert unitarity_defect(m) == 0.0
        assert np.array_equal(np.sort(np.argmax(m, axis=0)), np.arange(3**length))

    def test_left_shift_rejected_with_colliding_pair(self):
        def shift_left(w):
            return w[1:] + (0,)

        with pytest.raises(ValueError, match="not injective") as err:
            lift_classical(shift_left, 3)
        assert "map to" in str(err.value)

    def test_step_leaving_basis_rejected(self):
        with pytest.raises(ValueError, match="leaves the window"):
            lift_classical(lambda w: w + (0,), 2)

    def test_lifting_matches_word_step(self):
        lifted = xor_lifted(4)
        ring = lifted.ring
        rng = np.random.default_rng(1)
        for _ in range(20):
            word = tuple(rng.integers(0, 3, size=4))
            vec = np.zeros(ring.dim)
            vec[ring.index_of(word)] = 1.0
            out = lifted.matrix @ vec
            assert out[ring.index_of(xor_window_step(word))] == 1.0


class TestSignalling:
    @pytest.mark.parametrize("length", [3, 4, 5, 6, 7])
    def test_distance_zero_before_one_after(self, length):
        rep = signalling_demo(length)
        assert rep.before < 1e-12
        assert rep.after == pytest.approx(1.0, abs=1e-10)
        assert rep.phase_flip_defect == 0.0

    def test_short_words_rejected(self):
        with pytest.raises(ValueError, match=">= 3"):
            signalling_demo(2)


class TestCausalityCheck:
    def test_identity_with_trivial_neighbourhood(self):
        rep = causality_check(identity_operator(RingSpace(4, 2)), (0,))
        assert rep.passed and not rep.witnesses

    def test_composed_step_on_supercells(self):
        ring = RingSpace(8, 2)
        pq = Pqca(dirac_scattering_unitary(0.9, 0.4))
        g2 = regroup_pairs(composed_step_operator(pq, ring))
        assert causality_check(g2, (-1, 0, 1)).passed

    def test_lifted_xor_fails_below_full_radius(self):
        f_hat = xor_lifted(4)
        for radius in (0, 1, 2):
            offsets = tuple(range(-radius, radius + 1))
            rep = causality_check(f_hat, offsets, periodic=False)
            assert not rep.passed, f"radius {radius} unexpectedly causal"
            assert any(w.cell == 3 for w in rep.witnesses), "no witness at the last cell"

    def test_block_layer_with_dict_neighbourhood(self):
        j, blocks = dirac_block_layer()
        assert causality_check(j, blocks).passed

    def test_nonunitary_rejected(self):
        ring = RingSpace(2, 2)
        with pytest.raises(ValueError, match="not unitary"):
            causality_check(DenseOperator(ring, 2 * np.eye(4)), (0,))


class TestLocalization:
    def test_identity_gates_are_the_subcell_swaps(self):
        ring = RingSpace(3, 2)
        loc = build_localization(identity_operator(ring), (0,))
        assert loc.he_eg_defect == 0.0
        for x, k in enumerate(loc.k_ops):
            assert np.array_equal(k.matrix, subcell_swap(ring, x).matrix)
        assert loc.k_supports == ((0,), (1,), (2,))

    @pytest.mark.parametrize("cells,seed", [(3, 0), (4, 1)])
    def test_single_cell_products_stay_single_cell(self, cells, seed):
        ring = RingSpace(cells, 2)
        g = single_cell_product(ring, quiescence_preserving_local(2, seed))
        loc = build_localization(g, (0,))
        assert loc.k_supports == tuple((x,) for x in range(cells))
        assert loc.he_eg_defect < 1e-10
        assert loc.commutation_residual < 1e-10

    def test_three_level_product(self):
        ring = RingSpace(3, 3)
        g = single_cell_product(ring, quiescence_preserving_local(3, 5))
        loc = build_localization(g, (0,))
        assert loc.supports_contained()
        assert loc.he_eg_defect < 1e-10

    def test_dirac_block_layer_localizes_within_blocks(self):
        j, blocks = dirac_block_layer()
        loc = build_localization(j, blocks)
        assert loc.supports_contained()
        assert loc.he_eg_defect < 1e-10
        assert loc.commutation_residual < 1e-10
        assert loc.product_defect < 1e-10

    def test_update_gates_commute_exactly_by_construction(self):
        j, blocks = dirac_block_layer()
        loc = build_localization(j, blocks)
        for a, b in itertools.combinations(loc.k_ops, 2):
            comm = a.matrix @ b.matrix - b.matrix @ a.matrix
            assert np.linalg.norm(comm) < 1e-12

    def test_noncausal_operator_refused(self):
        with pytest.raises(ValueError, match="not causal"):
            build_localization(xor_lifted(3), (-1, 0, 1), periodic=False)

    def test_lifted_xor_update_gates_are_nonlocal(self):
        # window of 3: the doubled register stays under the dense cap
        f_hat = xor_lifted(3)
        ghat = extend_to_right_subcells(f_hat)
        nonlocal_cells = []
        for x in range(3):
            s = subcell_swap(f_hat.ring, x)
            k = DenseOperator(ghat.ring, ghat.matrix.conj().T @ s.matrix @ ghat.matrix)
            supp = set(support_of(k))
            radius_one = {c for c in (x - 1, x, x + 1) if 0 <= c < 3}
            if not supp <= radius_one:
                nonlocal_cells.append(x)
        assert nonlocal_cells, "every update gate fit a strictly smaller window"


class TestHeisenbergSchroedingerEquivalence:
    """The reduced-state test and the observable-support test must agree on
    every instance: both pass on causal evolutions, both fail on the lifted
    xor rule."""

    def schrodinger_depends_only_on_neighbourhood(self, g, x, allowed, trials=4, seed=0):
        ring = g.ring
        rng = np.random.default_rng(seed)
        rest = tuple(c for c in range(ring.cell_count) if c not in allowed)
        d = ring.local_dim
        base = rng.normal(size=d ** len(allowed)) + 1j * rng.normal(size=d ** len(allowed))
        base /= np.linalg.norm(base)
        worst = 0.0
        outputs = []
        for _ in range(trials):
            chi = rng.normal(size=d ** len(rest)) + 1j * rng.normal(size=d ** len(rest))
            chi /= np.linalg.norm(chi)
            vec = tensor_state(ring, [(tuple(sorted(allowed)), base), (rest, chi)])
            out = g.matrix @ vec
            outputs.append(partial_trace(density_from_vector(out, ring), (x,)))
        for a, b in itertools.combinations(outputs, 2):
            worst = max(worst, trace_distance(a, b))
        return worst < 1e-10

    def test_causal_instances_agree(self):
        ring = RingSpace(8, 2)
        pq = Pqca(dirac_scattering_unitary(0.5, 0.7))
        g2 = regroup_pairs(composed_step_operator(pq, ring))
        for x in range(4):
            allowed = {(x - 1) % 4, x, (x + 1) % 4}
            heisenberg = causality_check(g2, (-1, 0, 1)).passed
            schrodinger = self.schrodinger_depends_only_on_neighbourhood(g2, x, allowed)
            assert heisenberg and schrodinger

    def test_noncausal_instance_agrees(self):
        # the two ends of the signalling pair share every proper marginal,
        # yet one lifted step maps them to distinguishable receiver states
        f_hat = xor_lifted(4)
        ring = f_hat.ring
        bob = 3
        allowed = (1, 2, 3)
        c_plus = np.zeros(ring.dim, dtype=complex)
        c_minus = np.zeros(ring.dim, dtype=complex)
        c_plus[ring.index_of((F_SYM,) * 4)] = c_plus[ring.index_of((T_SYM,) * 4)] = 2**-0.5
        c_minus[ring.index_of((F_SYM,) * 4)] = 2**-0.5
        c_minus[ring.index_of((T_SYM,) * 4)] = -(2**-0.5)
        in_plus = partial_trace(density_from_vector(c_plus, ring), allowed)
        in_minus = partial_trace(density_from_vector(c_minus, ring), allowed)
        assert trace_distance(in_plus, in_minus) < 1e-12, "inputs distinguishable upstream"
        out_plus = partial_trace(
            density_from_vector(f_hat.matrix @ c_plus, ring), (bob,)
        )
        out_minus = partial_trace(
            density_from_vector(f_hat.matrix @ c_minus, ring), (bob,)
        )
        schrodinger_fails = trace_distance(out_plus, out_minus) > 0.99
        heisenberg_fails = not causality_check(
            f_hat, (-2, -1, 0, 1, 2), periodic=False
        ).passed
        assert schrodinger_fails and heisenberg_fails
