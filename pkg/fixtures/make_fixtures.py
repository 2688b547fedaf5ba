"""Regenerate the checked-in fixtures.

The texture pair is the procedural 300x450 image used by the keypoint
evaluation (seed 7) together with its exact quarter-turn rotation; the golden
CSV freezes a tiny calibration run as a byte-level determinism anchor.

Run from the repository root:  python fixtures/make_fixtures.py
"""

import os

from shifttest import ExperimentSpec, emit_csv, make_texture, rotate90, run_type1_known, save_pgm

HERE = os.path.dirname(os.path.abspath(__file__))


def main():
    texture = make_texture(300, 450, seed=7)
    save_pgm(texture, os.path.join(HERE, "texture_a.pgm"))
    save_pgm(rotate90(texture), os.path.join(HERE, "texture_b.pgm"))

    spec = ExperimentSpec(kind="type1_known", reps=25, n_ladder=(40,), seed=7)
    rows = run_type1_known(spec)
    emit_csv(rows, os.path.join(HERE, "golden_type1_tiny.csv"),
             ["n", "N", "sigma", "family", "reps", "accept", "se"])
    print("fixtures written to", HERE)


if __name__ == "__main__":
    main()
