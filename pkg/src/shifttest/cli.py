"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 data error, 3 failed verification
(verify-bounds only).  Omitting --seed picks one from system entropy and
prints it, so any run can be reproduced after the fact.  No subcommand writes
outside --out.
"""

import argparse
import os
import sys

import numpy as np

from . import adaptive as adaptive_mod
from . import experiments as exp_mod
from . import loft as loft_mod
from . import spectral, testing, weights

USAGE_ERROR = 1
DATA_ERROR = 2
VERIFY_FAILED = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_ERROR)


def _resolve_seed(args) -> int:
    if args.seed is None:
        seed = int(np.random.SeedSequence().generate_state(1)[0])
        print(f"seed={seed}")
        return seed
    return args.seed


def _build_weights(args) -> weights.WeightSequence:
    if args.weights == "custom":
        if not args.weights_file:
            raise ValueError("custom weights need --weights-file")
        return weights.load_weights_csv(args.weights_file)
    if args.N is None:
        raise ValueError("--N is required for the built-in weight families")
    if args.weights == "projection":
        return weights.projection_weights(args.N)
    if args.weights == "tikhonov":
        return weights.tikhonov_weights(args.N, args.kappa, args.mu)
    return weights.pinsker_weights(args.N, args.mu if args.mu != 2.0 else 2.0)


def _print_kv(pairs) -> None:
    for key, value in pairs:
        if isinstance(value, bool):
            value = "true" if value else "false"
        elif isinstance(value, float):
            value = f"{value:.12g}"
        print(f"{key}={value}")


def _load_spec_file(path) -> dict:
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition("=")
            out[key.strip()] = value.strip()
    return out


def _spec_from_args(args, kind: str, seed: int) -> exp_mod.ExperimentSpec:
    fields = {}
    if args.spec:
        raw = _load_spec_file(args.spec)
        parse = {
            "kind": str, "reps": int, "alpha": float, "seed": int, "signal": str,
            "signal_length": int, "with_shift": lambda v: v.lower() in ("1", "true", "yes"),
        }
        for key, value in raw.items():
            if key in parse:
                fields[key] = parse[key](value)
            elif key in ("n_ladder", "gamma_ladder", "sigma_ladder"):
                fields[key] = tuple(float(tok) if "." in tok or "e" in tok.lower() else int(tok)
                                    for tok in value.split(","))
            elif key == "weight_families":
                fields[key] = tuple(tok.strip() for tok in value.split(","))
            else:
                raise ValueError(f"unknown spec key {key!r}")
    fields.setdefault("kind", kind)
    if args.reps is not None:
        fields["reps"] = args.reps
    if getattr(args, "n", None):
        fields["n_ladder"] = tuple(args.n)
    if getattr(args, "gamma", None):
        fields["gamma_ladder"] = tuple(args.gamma)
    if getattr(args, "alpha", None) is not None:
        fields["alpha"] = args.alpha
    fields["seed"] = fields.get("seed", seed)
    return exp_mod.ExperimentSpec(**fields)


def _cmd_test(args) -> int:
    w = _build_weights(args)
    obs_a = spectral.load_observation_csv(args.a)
    obs_b = spectral.load_observation_csv(args.b)
    cfg = testing.TestConfig(w, alpha=args.alpha)
    outcome = testing.multidim_statistic(obs_a, obs_b, w, cfg)
    _print_kv([
        ("delta", outcome.delta), ("t", outcome.t_normalized), ("tau_hat", outcome.tau_hat),
        ("threshold", outcome.threshold), ("p_value", outcome.p_value), ("reject", outcome.reject),
    ])
    return 0


def _cmd_test_adaptive(args) -> int:
    w = _build_weights(args)
    obs_a = spectral.load_observation_csv(args.a)
    obs_b = spectral.load_observation_csv(args.b)
    cfg = adaptive_mod.AdaptiveConfig(w, p=obs_a.length, alpha=args.alpha)
    outcome = adaptive_mod.adaptive_decide(obs_a, obs_b, cfg)
    _print_kv([
        ("delta_tilde", outcome.delta_tilde), ("t", outcome.t_stat),
        ("critical", outcome.critical), ("tau_hat", outcome.tau_hat),
        ("noise_proxy", outcome.noise_proxy), ("reject", outcome.reject),
    ])
    return 0


def _cmd_simulate(args) -> int:
    seed = _resolve_seed(args)
    os.makedirs(args.out, exist_ok=True)
    kind_map = {
        "type1": ("type1_known", exp_mod.run_type1_known,
                  ["n", "N", "sigma", "family", "reps", "accept", "se"], "accept"),
        "type1-adaptive": ("type1_adaptive", exp_mod.run_type1_adaptive,
                           ["n", "N", "p", "family", "reps", "reject", "accept", "se"], "accept"),
        "power": ("power_smooth_cos", exp_mod.run_power,
                  ["n", "N", "gamma", "reps", "power", "se"], "power"),
        "power-adaptive": ("power_adaptive", exp_mod.run_power,
                           ["n", "N", "gamma", "reps", "power", "se"], "power"),
        "tau-rate": ("tau_rate", exp_mod.run_tau_rate,
                     ["sigma", "N", "reps", "median_abs_err"], "median_abs_err"),
    }
    kind, runner, columns, y_key = kind_map[args.what]
    spec = _spec_from_args(args, kind, seed)
    if args.what == "power" and args.perturbation != "cos4":
        spec = exp_mod.ExperimentSpec(**{
            **spec.__dict__,
            "kind": {"rational": "power_smooth_rational", "nonsmooth": "power_nonsmooth"}[args.perturbation],
        })
    rows = runner(spec, workers=args.workers)
    stem = os.path.join(args.out, args.what.replace("-", "_"))
    exp_mod.emit_csv(rows, stem + ".csv", columns)
    if args.what in ("type1", "type1-adaptive"):
        exp_mod.emit_svg_plot(rows, stem + ".svg", "n", y_key, "family",
                              title=args.what, log_x=True)
    elif args.what in ("power", "power-adaptive"):
        exp_mod.emit_svg_plot(rows, stem + ".svg", "gamma", y_key, "n", title=args.what)
    else:
        exp_mod.emit_svg_plot(rows, stem + ".svg", "sigma", y_key, title=args.what, log_x=True)
    print(f"wrote {stem}.csv")
    return 0


def _cmd_loft(args) -> int:
    if args.action == "describe":
        img = loft_mod.load_pgm(args.image)
        cfg = loft_mod.LoftConfig(radius=args.radius, k=args.k)
        desc = loft_mod.descriptor(img, (args.x, args.y), cfg)
        loft_mod.save_descriptor(desc, args.out_file, cfg)
        print(f"wrote {args.out_file}")
        return 0
    if args.action == "match":
        desc_a, cfg_a = loft_mod.load_descriptor(args.a)
        desc_b, cfg_b = loft_mod.load_descriptor(args.b)
        if (cfg_a.radius, cfg_a.k) != (cfg_b.radius, cfg_b.k):
            raise ValueError("descriptor geometries differ")
        decision = loft_mod.match_decide(desc_a, desc_b, args.sigma, args.match_lambda, cfg_a)
        _print_kv([
            ("delta", decision.delta), ("t", decision.t_normalized),
            ("lambda", decision.lam), ("tau_hat", decision.tau_hat),
            ("is_match", decision.is_match),
        ])
        return 0
    # evaluate
    seed = _resolve_seed(args)
    os.makedirs(args.out, exist_ok=True)
    image_a = loft_mod.load_pgm(args.image_a) if args.image_a else None
    image_b = loft_mod.load_pgm(args.image_b) if args.image_b else None
    spec = exp_mod.ExperimentSpec(kind="loft_eval", reps=1, seed=seed,
                                  sigma_ladder=tuple(args.sigma_ladder or ()) or (30.0, 60.0))
    results = exp_mod.run_loft_eval(spec, image_a, image_b, pairs=args.pairs,
                                    lam=args.match_lambda, out_dir=args.out)
    rows = [entry["summary"] for entry in results["sigmas"]]
    columns = sorted(rows[0].keys())
    exp_mod.emit_csv(rows, os.path.join(args.out, "loft_eval_summary.csv"), columns)
    print(f"wrote {os.path.join(args.out, 'loft_eval_summary.csv')}")
    return 0


def _cmd_verify_bounds(args) -> int:
    seed = _resolve_seed(args)
    os.makedirs(args.out, exist_ok=True)
    spec = exp_mod.ExperimentSpec(kind="tail_bounds", reps=args.reps or 100_000, seed=seed)
    rows = exp_mod.run_tail_bounds(spec)
    exp_mod.emit_csv(rows, os.path.join(args.out, "tail_bounds.csv"),
                     ["lemma", "label", "N", "x", "y", "reps", "empirical", "bound", "se", "ok"])
    failures = [row for row in rows if not row["ok"]]
    for row in rows:
        status = "ok" if row["ok"] else "VIOLATED"
        print(f"{row['label']}: empirical={row['empirical']:.3g} bound={row['bound']:.3g} [{status}]")
    return VERIFY_FAILED if failures else 0


def _add_weight_flags(parser):
    parser.add_argument("--weights", choices=("projection", "tikhonov", "pinsker", "custom"),
                        default="projection")
    parser.add_argument("--N", type=int, default=None)
    parser.add_argument("--kappa", type=float, default=0.5)
    parser.add_argument("--mu", type=float, default=2.0)
    parser.add_argument("--weights-file", default=None)
    parser.add_argument("--alpha", type=float, default=0.05)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="shifttest", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_test = sub.add_parser("test", help="shift test on two observation files")
    p_test.add_argument("--a", required=True)
    p_test.add_argument("--b", required=True)
    _add_weight_flags(p_test)
    p_test.set_defaults(fn=_cmd_test)

    p_ta = sub.add_parser("test-adaptive", help="unknown-noise shift test on two observation files")
    p_ta.add_argument("--a", required=True)
    p_ta.add_argument("--b", required=True)
    _add_weight_flags(p_ta)
    p_ta.set_defaults(fn=_cmd_test_adaptive)

    p_sim = sub.add_parser("simulate", help="Monte Carlo experiments")
    p_sim.add_argument("what", choices=("type1", "type1-adaptive", "power", "power-adaptive", "tau-rate"))
    p_sim.add_argument("--reps", type=int, default=None)
    p_sim.add_argument("--n", type=int, action="append", help="ladder point; repeatable")
    p_sim.add_argument("--gamma", type=float, action="append", help="ladder point; repeatable")
    p_sim.add_argument("--alpha", type=float, default=None)
    p_sim.add_argument("--perturbation", choices=("cos4", "rational", "nonsmooth"), default="cos4")
    p_sim.add_argument("--spec", default=None, help="key=value file mirroring ExperimentSpec fields")
    p_sim.add_argument("--seed", type=int, default=None)
    p_sim.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    p_sim.add_argument("--out", default="out")
    p_sim.set_defaults(fn=_cmd_simulate)

    p_loft = sub.add_parser("loft", help="keypoint descriptor operations")
    sub_loft = p_loft.add_subparsers(dest="action", required=True)
    p_desc = sub_loft.add_parser("describe")
    p_desc.add_argument("--image", required=True)
    p_desc.add_argument("--x", type=float, required=True)
    p_desc.add_argument("--y", type=float, required=True)
    p_desc.add_argument("--radius", type=int, default=32)
    p_desc.add_argument("--k", type=int, default=16)
    p_desc.add_argument("--out-file", required=True)
    p_desc.set_defaults(fn=_cmd_loft, action="describe")
    p_match = sub_loft.add_parser("match")
    p_match.add_argument("--a", required=True)
    p_match.add_argument("--b", required=True)
    p_match.add_argument("--sigma", type=float, required=True)
    p_match.add_argument("--lambda", dest="match_lambda", type=float, default=loft_mod.LAMBDA_NORMAL_99)
    p_match.set_defaults(fn=_cmd_loft, action="match")
    p_eval = sub_loft.add_parser("evaluate")
    p_eval.add_argument("--image-a", default=None)
    p_eval.add_argument("--image-b", default=None)
    p_eval.add_argument("--pairs", type=int, default=2000)
    p_eval.add_argument("--sigma-ladder", type=float, action="append")
    p_eval.add_argument("--lambda", dest="match_lambda", type=float, default=loft_mod.LAMBDA_PAPER)
    p_eval.add_argument("--seed", type=int, default=None)
    p_eval.add_argument("--out", default="out")
    p_eval.set_defaults(fn=_cmd_loft, action="evaluate")

    p_vb = sub.add_parser("verify-bounds", help="Monte Carlo check of the tail inequalities")
    p_vb.add_argument("--reps", type=int, default=None)
    p_vb.add_argument("--seed", type=int, default=None)
    p_vb.add_argument("--out", default="out")
    p_vb.set_defaults(fn=_cmd_verify_bounds)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else USAGE_ERROR
    try:
        return args.fn(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DATA_ERROR


if __name__ == "__main__":
    sys.exit(main())
