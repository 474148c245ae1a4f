#!/usr/bin/env python3
"""Classical computation as tensor network contraction.

Binary circuits: logic gates are (2,2,2) tensors, fan-out is the copy
tensor, and feeding basis vectors through keeps every intermediate a basis
vector, so contraction follows the circuit at linear cost. Amplitude
circuits: a real x rides in the vector (1, x) and (2,2,2) tensors implement
+ and *, which compiles whole feed-forward networks into contractible
graphs.
"""
import numpy as np

from tnflab import (
    BitVec,
    FnnSpec,
    build_adder,
    build_multiplier,
    build_square,
    compile_fnn,
    eval_amp_circuit,
    eval_binary,
)

adder = build_adder(6)
(z,) = eval_binary(adder, [BitVec.from_int(37, 6), BitVec.from_int(25, 6)])
print(f"37 + 25 = {z.to_int()}   ({len(adder.nodes)} gate tensors)")

mult = build_multiplier(5, 5)
(z,) = eval_binary(mult, [BitVec.from_int(13, 5), BitVec.from_int(5, 5)])
print(f"13 * 5  = {z.to_int()}   ({len(mult.nodes)} gate tensors)")

square = build_square(5)
(z,) = eval_binary(square, [BitVec.from_int(23, 5)])
print(f"23^2    = {z.to_int()}   ({len(square.nodes)} gate tensors,"
      f" one copy of the input, fan-out by copy tensors)")

print()
rng = np.random.default_rng(0)
spec = FnnSpec(
    [2, 4, 1],
    [rng.standard_normal((4, 2)), rng.standard_normal((1, 4))],
    [rng.standard_normal(4), rng.standard_normal(1)],
    [[0.1, 0.3, 0.0, 0.5], [0.2, 1.0]],
)
graph = compile_fnn(spec)
print(f"2-4-1 network with cubic activations -> {len(graph.nodes)} arithmetic tensors")
x = rng.standard_normal(2)
(with_memo,), stats = eval_amp_circuit(graph, list(x), memo=True)
(naive,), naive_stats = eval_amp_circuit(graph, list(x), memo=False)
print(f"input {x.round(3)}: network value {with_memo:.10f}")
print(f"direct forward pass:            {spec.forward(x)[0]:.10f}")
print(f"contractions: {stats.contractions} memoized vs {naive_stats.contractions} naive"
      f" (shared subgraphs contracted once)")
