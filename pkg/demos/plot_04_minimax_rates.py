"""
Minimax rates and regime conditions
===================================

The rates module evaluates the upper and lower rate expressions and the
conditions under which they apply. Constants are left at 1, so only the
shape of each curve is meaningful.
"""

from sparsesubspace.rates import (
    ProblemParams,
    check_conditions,
    lower_rate_row,
    upper_rate_row,
)

for n in (250, 500, 1000, 2000, 4000):
    P = ProblemParams.spiked(p=64, n=n, d=2, q=0.0, R_q=6, b=1.0)
    print(f"n = {n:5d}: lower {lower_rate_row(P):.4f}  upper {upper_rate_row(P):.4f}")

# The spectrum conditions carry a log(n)^{5/2} factor; with unit constants
# they only hold at very large n, which is why they are reported separately.
P = ProblemParams.spiked(p=64, n=500, d=2, q=0.0, R_q=6, b=1.0)
for r in check_conditions(P):
    mark = "ok " if r.satisfied else "NOT"
    print(f"{mark} {r.name:22s} {r.lhs:10.4g} {'<' if r.strict else '<='} {r.rhs:.4g}")
