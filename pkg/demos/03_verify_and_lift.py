"""Interval robustness proofs and lifting them back to the original net.

Uses a tiny hand-built pair of networks where every number can be checked
by hand. The abstract net is verified with interval bound propagation;
the lifted recurrence widens those intervals by the recorded epsilons so a
proof on the small net becomes a proof on the big one.

Run:  python3 demos/03_verify_and_lift.py
"""

import numpy as np

from abstractnet import (
    Network,
    RobustnessQuery,
    abstract,
    check_robust,
    falsify,
    ibp_bounds,
    lift_proof,
    lifted_bounds,
)

# Original: two identical hidden neurons in layer 3. Abstracting that layer
# to one neuron is lossless, which makes the lifted bounds easy to follow.
original = Network(
    weights=(np.array([[1.0, 1.0], [1.0, -1.0]]),
             np.array([[1.0, 1.0], [1.0, 1.0]]) / 2,
             np.array([[2.0, 2.0], [1.0, 1.0]]) / 2),
    biases=(np.zeros(2), np.zeros(2), np.array([5.0, 0.0])),
)
x = np.zeros(2)
print(f"original {original.layer_sizes}, f(0,0) = {original.forward(x)}")

record = abstract(original, X=np.array([[0.0, 0.0], [1.0, 1.0]]), k_l={3: 1}, seed=0)
small = record.abstract_net
print(f"abstract {small.layer_sizes}, epsilons all zero: "
      f"{all(np.all(c.epsilons == 0) for c in record.clusterings)}")

# Interval bound propagation on the abstract net, then a margin check:
# label 0 is proven robust when its lower bound beats every other upper.
delta = 1.0
b = ibp_bounds(small, x, delta)
print(f"delta={delta}: abstract output intervals "
      f"[{b.output_lower[0]:.0f}, {b.output_upper[0]:.0f}] vs "
      f"[{b.output_lower[1]:.0f}, {b.output_upper[1]:.0f}] "
      f"-> {check_robust(b, 0).value}")

# The lifted bounds add epsilon slack per merged layer; with zero epsilons
# they reproduce the abstract intervals and the proof transfers for free.
lb = lifted_bounds(record, x, delta)
q = RobustnessQuery(x, delta)
print(f"lifted intervals match: lower {lb.output_lower}, upper {lb.output_upper}")
print(f"lift_proof verdict on the original net: {lift_proof(record, q).value}")

# Larger boxes stop being provable: the intervals overlap and the verdict
# downgrades to unknown rather than claiming anything.
for d in (2.0, 4.0, 8.0):
    verdict = lift_proof(record, RobustnessQuery(x, d)).value
    print(f"delta={d}: {verdict}")

# When a net is actually fragile, sampling finds a concrete counterexample.
fragile = Network(
    weights=(np.array([[1.0, 0.0]]), np.array([[1.0], [-1.0]])),
    biases=(np.zeros(1), np.array([0.0, 0.5])),
)
x0 = np.array([0.4, 0.0])
label = int(fragile.classify(x0))
witness = falsify(fragile, RobustnessQuery(x0, 0.5), samples=500, seed=1)
print(f"fragile net: label {label} at x0, "
      f"flips at x = {witness} (label {int(fragile.classify(witness))})")
