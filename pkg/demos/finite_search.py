"""Randomized search for small finite Lorentzian quadruples."""
from quadspec.examples import FiniteSearchConfig, finite_quadruple_search

for dim in (2, 4, 8):
    cfg = FiniteSearchConfig(hilbert_dim=dim, attempts=200, seed=0)
    found = finite_quadruple_search(cfg)
    print(f"dim {dim}: {len(found)} of {cfg.attempts} candidates pass")
    for q in found[:3]:
        print("   ", q.meta)
