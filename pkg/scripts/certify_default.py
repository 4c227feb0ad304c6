"""Run the invariant suite on the default grid and summarise it by check."""
import sys
from collections import Counter

from beamcap.experiments import certify

rep = certify()
total, failed = Counter(), Counter()
for c in rep.checks:
    total[c["check"]] += 1
    failed[c["check"]] += not c["passed"]
for name in sorted(total):
    print(f"{name:22s} {total[name]:4d} checks  {failed[name]} failed")
print("PASSED" if rep.passed else f"FAILED first: {rep.first_failure}")
sys.exit(0 if rep.passed else 1)
