"""Removing the zero-order penalty.

Adding a zero-order term, du/dt + (omega + (-Delta)^sigma) Phi(u) = 0, gives a
family of flows; as omega -> 0 they converge, with L1 distances controlled by
(omega_h - omega_l) t ||u0||_m^m.

Run:  python demos/05_penalized_limit.py
"""

from fracpme import FracParams, PMEConfig, make_torus, omega_limit_study, random_field

circle = make_torus(1, grid=64)
u0 = random_field(circle, rng=61, band=4, offset=0.5)
rep = omega_limit_study(u0, PMEConfig(2.0, FracParams(0.5), horizon=1.0, steps=100), [0.1, 0.05, 0.01, 0.0])
print(f"||u0||_m^m = {rep.u0_m_norm_pow:.4f}")
for p in rep.pairs:
    print(f"omega {p['omega_h']:5.2f} -> {p['omega_l']:5.2f}: sup_t ||u_h - u_l||_1 = {p['sup_distance']:.4f}"
          f"  <=  {p['bound']:.4f}   ({'ok' if p['passed'] else 'VIOLATED'})")
