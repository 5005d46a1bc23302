"""
Distance weights and neighborhood geometry
==========================================

Everything rides on the metric: columns are scaled to sd 1 (dummies
included), then per-variable weights rescale how much each variable counts.
Down-weighting the discrete variables keeps them from dominating the metric
as eps shrinks.
"""

import numpy as np

import nbrmask as nm

rng = np.random.default_rng(5)
n = 2000
x = rng.normal(size=n)
group = rng.choice(["a", "b", "c"], n).astype(object)
d = nm.Dataset(
    [nm.ColumnSpec("x", nm.CONTINUOUS),
     nm.ColumnSpec("group", nm.CATEGORICAL, ("a", "b", "c"))],
    [x, group])

m = nm.encode(d)
print("encoded blocks:", [(b.column, b.start, b.stop) for b in m.blocks])
print("column sds after scaling:", m.values.std(axis=0, ddof=1).round(6))

# a weight applies to every encoded column of its variable
for factor in (1.0, 0.3, 0.0):
    w = nm.expand_weights(nm.WeightSpec({"group": factor}), m.blocks)
    ball = nm.eps_ball(m, w, 0, eps=0.25)
    same = sum(group[j] == group[0] for j in ball)
    print(f"weight(group)={factor}: |ball|={len(ball)}, "
          f"{same} of them share record 0's group")
# at weight 1 a category flip costs more than eps, so neighbors all share the
# group; at 0 the group is ignored and the ball triples

# absolute eps values are hard to guess; read them off the pairwise-distance
# distribution instead
w = nm.expand_weights(nm.WeightSpec(), m.blocks)
for q, eps in zip([0.001, 0.01, 0.1],
                  nm.pairwise_distance_quantiles(m, w, [0.001, 0.01, 0.1])):
    sizes = [len(nm.eps_ball(m, w, i, eps)) for i in range(0, n, 100)]
    print(f"quantile {q:5.3f} -> eps {eps:.4f} -> "
          f"ball sizes around {int(np.median(sizes))}")

# the KD-tree index returns exactly the brute-force sets (ties included)
index = nm.build_index(m, w)
probe = [int(i) for i in rng.integers(0, n, size=200)]
assert all(index.eps_ball(i, 0.3) == nm.eps_ball(m, w, i, 0.3) for i in probe)
assert all(index.knn(i, 7) == nm.knn(m, w, i, 7) for i in probe)
print("indexed queries match brute force on", len(probe), "probes")
