"""Lift a control designed on a small truncation to a larger one.

A control synthesized on the first n levels ignores everything above; the
oscillation lift rebuilds it from fast plateaus whose conjugated coupling
averages to a block-diagonal matrix, suppressing leakage into levels n+1..N
while keeping the same action on the first block.

Run:  python3 demos/lift_decoupling.py
"""

import math

from bqcontrol import (
    PiecewiseConstantControl,
    custom_system,
    decoupling_error,
    lift_control,
)

sys3 = custom_system(
    [0.0, 1.0, math.sqrt(2.0)],
    [[0.0, 0.5, 0.3], [0.5, 0.0, 0.4], [0.3, 0.4, 0.0]],
)

raw = PiecewiseConstantControl("reparametrized", [(2.0, 0.25)], delta=0.1)
print("raw control:", raw.npieces, "piece(s), duration", raw.total_duration)

# decoupling_error integrates the off-block coupling seen along the control;
# zero would mean the first 2 levels evolve as if level 3 did not exist
e_raw = decoupling_error(raw, sys3, n=2, N=3)
print("off-block error of the raw control:   ", f"{e_raw:.4f}")

lifted = lift_control(raw, sys3, n=2, N=3, phase_tol=0.05)
e_lift = decoupling_error(lifted, sys3, n=2, N=3)
print("off-block error of the lifted control:", f"{e_lift:.4f}")
print("pieces after lifting:", lifted.npieces,
      "(ramp + hold per subinterval)")
print()

# each subinterval ends on a plateau chosen by a recurrence search on the
# torus of eigenphases: type w aligns the phases, type z flips their sign
print("plateau schedule (first four):")
for p in lifted.meta["plateaus"][:4]:
    print(f"  t = {p['time']:8.4f}  type {p['type']}  target {p['target']:.4f}"
          f"  residual {p['residual']:.3f}")
