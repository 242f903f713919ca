"""The four scalar systems separating forward completeness, robust forward
completeness and robustness of the equilibrium, classified empirically.

Expected pattern:
    (i)   x' = |d|(x - x^3)                 RFC yes, REP no
    (ii)  x' = d x                          RFC no,  REP no
    (iii) x' = x/(|d|+1) + d max(|x|-1,0)   RFC no,  REP yes
    (iv)  x' = x/(|d|+1)                    RFC yes, REP yes
"""

from nclyap import build_scalar_example
from nclyap.probes import classify_rep, classify_rfc

for variant in ("i", "ii", "iii", "iv"):
    model = build_scalar_example(variant)
    rfc = classify_rfc(model, budget=4, seed=0, step=2e-2)
    rep = classify_rep(model, budget=4, seed=0, step=2e-2)
    print(f"variant ({variant}): RFC {rfc.verdict:12s} REP {rep.verdict:12s}")
    for tag, report in (("RFC", rfc), ("REP", rep)):
        if report.verdict == "refuted":
            w = report.witnesses[0]
            print(f"    {tag} witness: x = {w.x}, value {w.value:.3g} at t = {w.t:.3g}, "
                  f"signal {w.signal.to_json()}")
