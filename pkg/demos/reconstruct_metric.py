"""Recover lapse, inverse metric and shift from commutators with the evolution."""
import numpy as np

from quadspec.examples import desitter_foliation, flat_foliation
from quadspec.reconstruct import reconstruct_metric

cases = {
    "de Sitter (N=1, g^tt=1 at t=0)": desitter_foliation(64),
    "flat R=2 (g^tt=0.25)": flat_foliation(2.0, 1.0, 64),
    "flat shift 0.3": flat_foliation(1.0, 1.0, 64, shift=0.3),
}
for label, fol in cases.items():
    res = reconstruct_metric(fol, 0.0)
    print(label)
    print(f"  lapse  mean {np.ma.mean(res.lapse):.8f}")
    print(f"  g^tt   mean {np.ma.mean(res.ginv):.8f}")
    print(f"  shift  mean {np.ma.mean(res.shift):.8f}")
    for k, v in res.max_errors().items():
        print(f"  {k:16s} {v:.2e}")
