"""Convergence-driven time-step adaptivity.

With a deliberately tight Newton budget the first steps fail, the
controller halves h and restarts them; after five consecutive successful
steps it doubles h again up to the cap.  The accepted steps still sum to
the horizon exactly.
"""

from hbvm import build_semilinear_wave, build_tableau, integrate

prob = build_semilinear_wave(32)
tab = build_tableau(3, 2)

result = integrate(
    prob, tab, prob.initial_state(), T=1.0, h0=1.0 / 8,
    stepper="newton-krylov", max_newton=4, h_min=1e-6, h_max=1.0 / 8,
)

print(f"{'step':>4} {'t':>10} {'h used':>12} {'halvings':>9} {'newton':>7}")
for i, st in enumerate(result.steps):
    marker = "  <- restarted" if st.halvings_this_step else ""
    print(f"{i:4d} {st.time:10.6f} {st.h_used:12.3e} {st.halvings_this_step:9d} {st.newton_iters:7d}{marker}")

print(f"\nsum of accepted steps: {sum(st.h_used for st in result.steps):.15f} (horizon 1.0)")
print(f"total restarts: {sum(st.halvings_this_step for st in result.steps)}")
