"""Break one axiom at a time and show which checks notice."""
from quadspec import build_flat_cylinder, validate_all
from quadspec.quadruple import FAULTS, failed, inject_fault

_, q = build_flat_cylinder(1.0, 1.0, 64, symmetric=True)
print("clean:", failed(validate_all(q)) or "all checks pass")
for kind in FAULTS:
    print(f"{kind}:", failed(validate_all(inject_fault(q, kind))))
