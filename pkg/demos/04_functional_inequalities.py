"""Fractional Sobolev-type inequalities, measured on random fields.

Each inequality has an unknown constant.  We estimate it as the supremum of the
corresponding ratio over a seeded ensemble of band-limited fields, then check
that the estimate is stable when the ensemble is doubled and that it holds on
a fresh ensemble.  Stroock-Varopoulos needs no constant and is checked
directly (with equality at p = 2).

Run:  python demos/04_functional_inequalities.py
"""

from fracpme import EnsembleSpec, FracParams, calibrate_constants, check_constants, make_torus, ultracontractivity_fit

torus = make_torus(3, grid=16, volume_normalized=True)
ens = EnsembleSpec(torus, count=200, seed=7, band=4, mean_scale=0.5)

reports = calibrate_constants(ens, sigma=0.5)
doubled = calibrate_constants(ens.doubled(), sigma=0.5)
print("kind               constant   doubled    change")
for kind in ("sobolev-poincare", "nash", "super-poincare", "log-sobolev"):
    a, b = reports[kind].constant, doubled[kind].constant
    print(f"{kind:18s} {a:9.5f}  {b:9.5f}  {abs(b - a) / a:7.2%}")

fresh = check_constants(ens.fresh(8), 0.5, {k: reports[k].constant for k in ("nash", "sobolev-poincare", "log-sobolev")})
print("\nviolation rate on a fresh ensemble:",
      ", ".join(f"{k} {r.violation_rate:.1%}" for k, r in fresh.items()))

sv = reports["stroock-varopoulos"].extra["per_p"]
print("\nStroock-Varopoulos, smallest relative slack rhs - lhs per p:")
for p, v in sv.items():
    print(f"  p={p}: {v['min_relative_slack']:+.2e}")

uc = ultracontractivity_fit(FracParams(0.5), EnsembleSpec(torus, 50, seed=9, mean_scale=0.5), [0.05, 0.3, 1.0, 10.0])
print(f"\nempirical ultracontractivity constant: {uc.constant:.4f}")

# outside the hypotheses the ratios are still computed, but without a verdict
circle_ens = EnsembleSpec(make_torus(1, grid=64), count=100, seed=1)
low = calibrate_constants(circle_ens, 0.75, kinds=("sobolev-poincare", "nash"))
print("\non the circle with sigma = 3/4:")
for k, r in low.items():
    print(f"  {k}: passed={r.passed}, note: {r.note}")
