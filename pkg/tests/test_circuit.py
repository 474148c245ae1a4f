"""Binary and amplitude arithmetic circuits."""
import numpy as np
import pytest

from tnflab.circuit import (
    BitVec,
    CircuitBuilder,
    CircuitGraph,
    EvalStats,
    FnnSpec,
    GateKind,
    Node,
    build_adder,
    build_amp_function,
    build_full_adder,
    build_half_adder,
    build_multiplier,
    build_square,
    compile_fnn,
    eval_amp_circuit,
    eval_binary,
    float_decode,
    float_encode,
    function_table,
    gate_tensor,
)
from tnflab.errors import GraphError, RepresentationError, ResourceLimitError


class TestGateTensors:
    def test_xor_entries(self):
        t = gate_tensor(GateKind.XOR)
        hot = {(0, 0, 0), (1, 0, 1), (0, 1, 1), (1, 1, 0)}
        for idx in np.ndindex(2, 2, 2):
            assert t[idx] == (1.0 if idx in hot else 0.0)

    def test_and_entries(self):
        t = gate_tensor(GateKind.AND)
        hot = {(0, 0, 0), (1, 0, 0), (0, 1, 0), (1, 1, 1)}
        for idx in np.ndindex(2, 2, 2):
            assert t[idx] == (1.0 if idx in hot else 0.0)

    def test_or_entries(self):
        t = gate_tensor(GateKind.OR)
        hot = {(0, 0, 0), (1, 0, 1), (0, 1, 1), (1, 1, 1)}
        for idx in np.ndindex(2, 2, 2):
            assert t[idx] == (1.0 if idx in hot else 0.0)

    def test_delta_entries(self):
        t = gate_tensor(GateKind.DELTA)
        for idx in np.ndindex(2, 2, 2):
            assert t[idx] == (1.0 if idx == (0, 0, 0) or idx == (1, 1, 1) else 0.0)

    def test_delta_copy_identity(self):
        # contracting a bit with the copy tensor yields the outer product
        for b in (0, 1):
            x = np.zeros(2)
            x[b] = 1.0
            out = np.tensordot(x, gate_tensor(GateKind.DELTA), axes=([0], [0]))
            assert np.array_equal(out, np.outer(x, x))

    def test_plus_times_semantics(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            x, y = rng.standard_normal(2) * 5
            out = np.einsum("i,j,ijk->k", float_encode(x), float_encode(y), gate_tensor(GateKind.PLUS))
            assert out[0] == 1.0 and abs(out[1] - (x + y)) < 1e-12
            out = np.einsum("i,j,ijk->k", float_encode(x), float_encode(y), gate_tensor(GateKind.TIMES))
            assert out[0] == 1.0 and abs(out[1] - x * y) < 1e-12

    def test_xor_and_via_contraction(self):
        one = np.array([0.0, 1.0])
        out = np.einsum("i,j,ijk->k", one, one, gate_tensor(GateKind.XOR))
        assert np.array_equal(out, [1.0, 0.0])  # 1 xor 1 = 0
        out = np.einsum("i,j,ijk->k", one, one, gate_tensor(GateKind.AND))
        assert np.array_equal(out, [0.0, 1.0])  # 1 and 1 = 1


class TestBitVec:
    def test_round_trip(self):
        for v in (0, 1, 5, 13, 31):
            assert BitVec.from_int(v, 5).to_int() == v

    def test_little_endian(self):
        assert BitVec.from_int(6, 3).bits == (0, 1, 1)

    def test_range_check(self):
        with pytest.raises(ValueError):
            BitVec.from_int(8, 3)


class TestAdders:
    def test_half_adder_truth_table(self):
        g = build_half_adder()
        for x in (0, 1):
            for y in (0, 1):
                s, c = eval_binary(g, [BitVec((x,)), BitVec((y,))])
                assert s.bits[0] == (x + y) % 2
                assert c.bits[0] == (x + y) // 2

    def test_full_adder_truth_table(self):
        g = build_full_adder()
        for cin in (0, 1):
            for x in (0, 1):
                for y in (0, 1):
                    s, c = eval_binary(g, [BitVec((cin,)), BitVec((x,)), BitVec((y,))])
                    assert s.bits[0] == (cin + x + y) % 2
                    assert c.bits[0] == (cin + x + y) // 2

    def test_five_plus_three(self):
        (z,) = eval_binary(build_adder(4), [BitVec.from_int(5, 4), BitVec.from_int(3, 4)])
        assert z.to_int() == 8

    def test_add_zero_is_identity(self):
        g = build_adder(5)
        for x in (0, 7, 21, 31):
            (z,) = eval_binary(g, [BitVec.from_int(x, 5), BitVec.from_int(0, 5)])
            assert z.to_int() == x

    def test_exhaustive_six_bits(self):
        g = build_adder(6)
        for x in range(64):
            for y in range(64):
                (z,) = eval_binary(g, [BitVec.from_int(x, 6), BitVec.from_int(y, 6)])
                assert z.to_int() == x + y


class TestMultiplier:
    def test_thirteen_times_five(self):
        (z,) = eval_binary(build_multiplier(4, 3), [BitVec.from_int(13, 4), BitVec.from_int(5, 3)])
        assert z.to_int() == 65

    def test_times_zero(self):
        g = build_multiplier(4, 4)
        for x in (0, 9, 15):
            (z,) = eval_binary(g, [BitVec.from_int(x, 4), BitVec.from_int(0, 4)])
            assert z.to_int() == 0

    def test_exhaustive_five_by_five(self):
        g = build_multiplier(5, 5)
        for x in range(32):
            for y in range(32):
                (z,) = eval_binary(g, [BitVec.from_int(x, 5), BitVec.from_int(y, 5)])
                assert z.to_int() == x * y

    def test_rectangular(self):
        g = build_multiplier(3, 5)
        for x in range(8):
            for y in range(32):
                (z,) = eval_binary(g, [BitVec.from_int(x, 3), BitVec.from_int(y, 5)])
                assert z.to_int() == x * y


class TestSquare:
    def test_three_squared(self):
        (z,) = eval_binary(build_square(2), [BitVec.from_int(3, 2)])
        assert z.to_int() == 9

    def test_zero_squared(self):
        (z,) = eval_binary(build_square(3), [BitVec.from_int(0, 3)])
        assert z.to_int() == 0

    def test_single_input_group(self):
        g = build_square(4)
        assert len(g.input_groups) == 1
        assert len(g.input_groups[0]) == 4

    def test_exhaustive_five_bits(self):
        g = build_square(5)
        for x in range(32):
            (z,) = eval_binary(g, [BitVec.from_int(x, 5)])
            assert z.to_int() == x * x


class TestBinaryEvaluator:
    def test_identity_wire(self):
        b = CircuitBuilder()
        (w,) = b.input_bits(1)
        g = b.finish([[w]])
        (out,) = eval_binary(g, [BitVec((1,))])
        assert out.bits == (1,)

    def test_bit_fanout_requires_delta(self):
        b = CircuitBuilder()
        (w,) = b.input_bits(1)
        b.xor(w, w)  # consumes the same bit wire twice
        with pytest.raises(GraphError):
            b.finish([[]])

    def test_operand_width_checked(self):
        g = build_adder(3)
        with pytest.raises(GraphError):
            eval_binary(g, [BitVec.from_int(1, 2), BitVec.from_int(1, 3)])

    def test_cycle_detected(self):
        node = Node(GateKind.XOR, (1, 2), (1,))
        graph = CircuitGraph(
            nodes=[node],
            wire_types=["bit", "bit", "bit"],
            input_groups=[[0], [2]],
            output_groups=[[1]],
        )
        with pytest.raises(GraphError):
            graph.validate()


class TestFloatEncoding:
    def test_encode(self):
        assert np.array_equal(float_encode(2.5), [1.0, 2.5])
        assert np.array_equal(float_encode(0.0), [1.0, 0.0])

    def test_decode_round_trip(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            x = float(rng.standard_normal() * 100)
            assert float_decode(float_encode(x)) == x

    def test_decode_rejects_bad_leading_component(self):
        with pytest.raises(RepresentationError):
            float_decode(np.array([1.5, 2.0]))


class TestAmpFunctions:
    def test_plus_zero_is_identity(self):
        grid = np.linspace(-1, 3, 9)
        tab = function_table(lambda x: x**2 - 1, grid)
        g = build_amp_function(("plus", ("func", tab, "x"), ("const", 0.0)), {"x": 9})
        for k in range(9):
            (v,), _ = eval_amp_circuit(g, [k])
            assert abs(v - (grid[k] ** 2 - 1)) < 1e-12

    def test_same_variable_product_squares(self):
        grid = np.linspace(-2, 2, 16)
        tab = function_table(lambda x: x, grid)
        g = build_amp_function(("times", ("func", tab, "x"), ("func", tab, "x")), {"x": 16})
        for k in range(16):
            (v,), _ = eval_amp_circuit(g, [k])
            assert abs(v - grid[k] ** 2) < 1e-12

    def test_polynomial_composition_against_pointwise(self):
        rng = np.random.default_rng(2)
        cf = rng.standard_normal(4)
        cg = rng.standard_normal(4)
        grid = np.linspace(-1.5, 1.5, 12)
        f = lambda x: cf[0] + cf[1] * x + cf[2] * x**2 + cf[3] * x**3
        gfun = lambda x: cg[0] + cg[1] * x + cg[2] * x**2 + cg[3] * x**3
        tf = function_table(f, grid)
        tg = function_table(gfun, grid)
        expr = ("plus", ("times", ("func", tf, "x"), ("func", tg, "x")), ("func", tf, "x"))
        g = build_amp_function(expr, {"x": 12})
        for k in range(12):
            (v,), _ = eval_amp_circuit(g, [k])
            want = f(grid[k]) * gfun(grid[k]) + f(grid[k])
            assert abs(v - want) < 1e-12

    def test_grid_mismatch_rejected(self):
        tab = function_table(lambda x: x, np.linspace(0, 1, 8))
        with pytest.raises(GraphError):
            build_amp_function(("func", tab, "x"), {"x": 16})


class TestFnn:
    def test_single_neuron_square(self):
        spec = FnnSpec([1, 1], [np.array([[2.0]])], [np.array([1.0])], [[0.0, 0.0, 1.0]])
        g = compile_fnn(spec)
        (v,), _ = eval_amp_circuit(g, [3.0])
        assert v == 49.0

    def test_zero_weights_give_activation_of_bias(self):
        coeffs = [1.0, 2.0, 3.0]
        spec = FnnSpec(
            [2, 3],
            [np.zeros((3, 2))],
            [np.array([0.5, -1.0, 2.0])],
            [coeffs],
        )
        g = compile_fnn(spec)
        vals, _ = eval_amp_circuit(g, [0.7, -0.2])
        for v, b in zip(vals, [0.5, -1.0, 2.0]):
            want = coeffs[0] + coeffs[1] * b + coeffs[2] * b * b
            assert abs(v - want) < 1e-12

    def test_random_net_matches_forward_pass(self):
        rng = np.random.default_rng(3)
        spec = FnnSpec(
            [2, 4, 1],
            [rng.standard_normal((4, 2)), rng.standard_normal((1, 4))],
            [rng.standard_normal(4), rng.standard_normal(1)],
            [[0.1, 0.3, 0.0, 0.5], [0.2, 1.0]],
        )
        g = compile_fnn(spec)
        for _ in range(100):
            x = rng.standard_normal(2)
            vals, _ = eval_amp_circuit(g, list(x))
            assert abs(vals[0] - spec.forward(x)[0]) < 1e-12

    def test_degree_zero_activation_unsupported(self):
        with pytest.raises(GraphError):
            FnnSpec([1, 1], [np.array([[1.0]])], [np.array([0.0])], [[1.0]])

    def test_spec_json_round_trip(self):
        rng = np.random.default_rng(4)
        spec = FnnSpec(
            [2, 3, 2],
            [rng.standard_normal((3, 2)), rng.standard_normal((2, 3))],
            [rng.standard_normal(3), rng.standard_normal(2)],
            [[0.0, 1.0, 0.5], [1.0, 2.0]],
        )
        back = FnnSpec.from_json(spec.to_json())
        x = rng.standard_normal(2)
        assert np.allclose(spec.forward(x), back.forward(x))


class TestMemoization:
    def _net(self):
        rng = np.random.default_rng(5)
        spec = FnnSpec(
            [2, 4, 1],
            [rng.standard_normal((4, 2)), rng.standard_normal((1, 4))],
            [rng.standard_normal(4), rng.standard_normal(1)],
            [[0.1, 0.3, 0.0, 0.5], [0.2, 1.0]],
        )
        return compile_fnn(spec)

    def test_memo_and_naive_agree_bitwise(self):
        g = self._net()
        x = [0.37, -1.2]
        on, _ = eval_amp_circuit(g, x, memo=True)
        off, _ = eval_amp_circuit(g, x, memo=False)
        assert on == off

    def test_memo_count_bounded_by_nodes(self):
        g = self._net()
        _, stats = eval_amp_circuit(g, [0.1, 0.2], memo=True)
        assert stats.contractions <= len(g.nodes)
        _, naive = eval_amp_circuit(g, [0.1, 0.2], memo=False)
        assert naive.contractions > stats.contractions

    def test_deep_composition_linear_node_count(self):
        """f applied to itself 20 times; each level references its input
        twice, so naive evaluation would touch ~2^20 paths while the memoized
        count stays linear in the node count."""
        b = CircuitBuilder()
        w = b.input_amp()
        for _ in range(20):
            # f(u) = u * u + u; a small input keeps the iterates finite
            w = b.plus(b.times(w, w), w)
        g = b.finish([[w]])
        (v,), stats = eval_amp_circuit(g, [1e-6], memo=True)
        assert stats.contractions == len(g.nodes) == 40
        assert np.isfinite(v)

    def test_graph_json_round_trip(self):
        g = self._net()
        back = CircuitGraph.from_json(g.to_json())
        x = [0.5, 0.25]
        a, _ = eval_amp_circuit(g, x)
        c, _ = eval_amp_circuit(back, x)
        assert a == c
