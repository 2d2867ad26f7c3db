"""Build the de Sitter example on a coarse lattice and print every check."""
import sys

from quadspec import build_desitter, validate_all

n = int(sys.argv[1]) if len(sys.argv) > 1 else 64
fol, q = build_desitter(n, m=1.0)
print(f"de Sitter, grid {n}, Hilbert dim {q.hilbert_dim}, slices {q.times}")
for r in validate_all(q):
    flag = "ok  " if r.passed else "FAIL"
    print(f"  {flag} {r.name:<40s} {r.residual:10.3e}  (tol {r.tol:.1e})")
