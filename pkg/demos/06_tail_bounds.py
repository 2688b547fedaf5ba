"""Checking the probabilistic inequalities behind the thresholds.

Three tail bounds drive the theory: a Gaussian sup bound for random
trigonometric sums, its product-noise extension, and a quadratic-form
deviation bound.  Each printed bound must dominate the Monte Carlo estimate of
its left-hand probability; the single-coordinate quadratic case also has an
exact chi-squared tail to compare against.

Command-line equivalent (exit code 3 on violation):
    shifttest verify-bounds --reps 100000 --seed 1 --out out
"""

from shifttest import ExperimentSpec, run_tail_bounds

spec = ExperimentSpec(kind="tail_bounds", reps=20_000, seed=99)
rows = run_tail_bounds(spec)

print(f"{'case':<34} {'empirical':>10} {'bound':>10} {'holds':>6}")
for row in rows:
    print(f"{row['label']:<34} {row['empirical']:>10.2e} {row['bound']:>10.2e} "
          f"{'yes' if row['ok'] else 'NO':>6}")
