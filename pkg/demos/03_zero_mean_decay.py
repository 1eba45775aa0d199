"""Long-time behaviour on a closed torus.

Two regimes, both for m = 2:

* data with a nonzero mean c converge to the constant c;
* zero-mean data decay algebraically, ||u(t)||_inf ~ t^(-1/(m-1)), and stay below
  the one-sided profile (B t + ||u0||^(-(m-1)))^(-1/(m-1)) for a fitted B.

Run:  python demos/03_zero_mean_decay.py     (about half a minute)
"""

from fracpme import (
    FracParams,
    PMEConfig,
    convergence_to_mean,
    evolve,
    fit_decay,
    make_torus,
    random_field,
    smoothing_exponents_closed,
    smoothing_exponents_noncompact,
)

cube = make_torus(3, grid=16)

# -- convergence to the mean ---------------------------------------------------------
u0 = random_field(cube, rng=51, amplitude=0.5, offset=1.0)
traj = evolve(u0, PMEConfig(2.0, FracParams(0.5), horizon=10.0, steps=200))
rep = convergence_to_mean(traj, q=1.0)
print("distance to the mean, ||u(t) - c||_1:")
for t, d in list(zip(rep.times, rep.distances))[::4]:
    print(f"  t={t:6.2f}  {d:.3e}")
print(f"final / initial = {rep.final_ratio:.2e}, monotone: {rep.monotone}")

# -- zero-mean decay -----------------------------------------------------------------------
z0 = random_field(cube, rng=3, band=2, amplitude=5.0)
traj = evolve(z0, PMEConfig(2.0, FracParams(0.5), horizon=50.0, steps=1000))
fit = fit_decay(traj, "linf", window=(5.0, 50.0))
print(f"\nzero-mean data: fitted slope {fit.fitted:.4f} +/- {fit.width:.4f} (predicted {fit.predicted})")
print(f"largest admissible B = {fit.B_fit:.4f}; profile bound holds at every sample: {fit.bound_holds}")
for eps, b in fit.eps_bounds.items():
    print(f"  eps={eps}: decay exponent {b['decay_exponent']:.4f}, fitted prefactor {b['C_fit']:.3f}")

# -- the exponent formulas behind these rates ---------------------------------------------
alpha, gamma = smoothing_exponents_noncompact(2, 0.5, 2, 3)
print(f"\nsmoothing exponents for p=2, sigma=1/2, m=2, n=3: alpha={alpha}, gamma={gamma}, "
      f"closed-manifold gamma={smoothing_exponents_closed(2, 0.5, 2, 3):.6f}")
