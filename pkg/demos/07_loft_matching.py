"""Rotation-invariant keypoint matching on noisy images.

A keypoint's neighborhood is summarized by four ring profiles (equal-area
annuli, radially integrated) and their first 16 angular Fourier coefficients:
rotating the image turns into a phase shift of the coefficients, so deciding
"same point up to rotation?" is exactly the multidimensional shift test.  A
match is declared when the normalized statistic stays below the 99% normal
quantile.

The bundled texture pair in fixtures/ is the second image rotated by a quarter
turn; noise is added independently to both.
"""

import numpy as np

from shifttest import (
    LoftConfig,
    add_gaussian_noise,
    calibrate_ring_noise,
    descriptor,
    estimate_noise,
    load_pgm,
    make_texture,
    match_decide,
    rotate90,
    rotate_point_90,
)

SIGMA = 30.0

try:
    image = load_pgm("fixtures/texture_a.pgm")
except OSError:
    image = make_texture(300, 450, seed=7)
rotated = rotate90(image)

noisy_a = add_gaussian_noise(image, SIGMA, seed=1)
noisy_b = add_gaussian_noise(rotated, SIGMA, seed=2)

print(f"true noise 30.0, estimated: {estimate_noise(noisy_a):.2f} "
      f"and {estimate_noise(noisy_b):.2f}")

# calibrate the per-ring noise scale of the descriptor once per geometry
cfg = calibrate_ring_noise(LoftConfig(), image_shape=(80, 80), reps=150, seed=3)
print("per-ring coefficient noise per unit image noise:",
      [round(s, 3) for s in cfg.ring_noise_scales])

keypoint = (140.0, 220.0)
mapped = rotate_point_90(*keypoint, image.width)

d_a = descriptor(noisy_a, keypoint, cfg)
d_true = descriptor(noisy_b, mapped, cfg)
d_false = descriptor(noisy_b, (mapped[0] + 10.0, mapped[1] + 10.0), cfg)

truth = match_decide(d_a, d_true, SIGMA, cfg=cfg)
lie = match_decide(d_a, d_false, SIGMA, cfg=cfg)

print(f"\nsame scene point : t = {truth.t_normalized:>8.2f}, "
      f"recovered rotation = {truth.tau_hat:.3f} (pi/2 = {np.pi / 2:.3f}), "
      f"match = {truth.is_match}")
print(f"10 px off        : t = {lie.t_normalized:>8.2f}, match = {lie.is_match}")
