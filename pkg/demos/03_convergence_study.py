"""
Why independent coordinate draws preserve joint structure
=========================================================

Each masked record's variables are drawn independently of one another, yet
the released data keeps the multivariate dependence - provided neighborhoods
are small.  Shrink eps and watch the released joint distribution converge to
the original; blow eps up to the whole dataset and the dependence collapses
to the product of the marginals.
"""

import nbrmask as nm

spec = nm.SyntheticSpec(nm.BivariateNormal(rho=0.8), n=20_000, seed=1)

# eps as pairwise-distance quantiles: 50% (huge), down to 0.2% (tight)
rows = nm.run_convergence(spec, eps_quantiles=[0.5, 0.1, 0.02, 0.005, 0.002])

print(f"{'eps':>8} {'quantile':>9} {'med |S|':>8} {'corr err':>9} "
      f"{'cdf dist':>9} {'suppressed':>10}")
for r in rows:
    print(f"{r.eps:8.4f} {r.eps_quantile:9.3f} {r.median_neighbors:8.0f} "
          f"{r.correlation_error:9.4f} {r.cdf_distance:9.4f} "
          f"{r.suppressed_fraction:10.4f}")

# the trade-off in one table: big windows destroy correlation (the rho=0.8
# structure washes out toward independence), tiny windows preserve it but
# start suppressing isolated records.

# the same harness accepts a discrete pair and a mixed 3-column probe:
diag = nm.SyntheticSpec(
    nm.DiscretePair(((0.5, 0.0, 0.0), (0.0, 0.3, 0.0), (0.0, 0.0, 0.2))),
    n=5000, seed=2)
row = nm.run_convergence(diag, eps_list=[1e-9])[0]
print(f"\ndiagonal discrete pair at eps below any inter-category distance: "
      f"joint pmf distance {row.cdf_distance} (support preserved exactly)")

mixed = nm.SyntheticSpec(nm.MixedNormalBinary(rho=0.6), n=10_000, seed=3)
for r in nm.run_convergence(mixed, eps_quantiles=[0.3, 0.005]):
    print(f"mixed probe eps_q={r.eps_quantile}: corr err {r.correlation_error:.4f}, "
          f"cdf dist {r.cdf_distance:.4f}")
