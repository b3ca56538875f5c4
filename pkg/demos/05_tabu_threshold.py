"""Where random graphs stop being 3-colorable in practice.

Runs TabuCol on Erdos-Renyi graphs with 30 nodes over a range of average
degrees. The success rate drops sharply between degree 4 and 6, in line with
the known 3-colorability threshold near 4.69.
"""

from qaoa_coloring.baselines import TabuConfig, threshold_sweep

rows = threshold_sweep(3, [1, 2, 3, 4, 5, 6, 8], n=30, trials=20, tabu=TabuConfig(max_moves=5000))
print(" c    success  mean conflicts  volume")
for r in rows:
    print(f"{r.connectivity:4.1f}  {r.success_rate:6.2f}  {r.mean_conflicts:10.2f}  {r.volume:10.1f}")
