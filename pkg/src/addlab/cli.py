"""Command-line front end: seeded, reproducible, JSON/CSV-emitting subcommands.

Every run emits a result envelope::

    {"command": ..., "parameters": ..., "seed": ..., "artifact_version": ...,
     "payload": ..., "wall_time_ms": ...}

The payload of a deterministic subcommand is bit-identical across runs with
the same seed; ``wall_time_ms`` is the only envelope field that varies.
Monte Carlo subcommands chunk their work deterministically, so results are
also independent of ``--threads``.

Exit codes: 0 success, 1 a verified inequality failed, 2 usage error,
3 resource cap exceeded.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
import time

import numpy as np

from . import __version__
from .errors import AddlabError, ResourceError
from .rng import RngStream
from . import bound_calculator as bc
from . import channel_core as cc
from . import moe_optimizer as moe
from . import random_state_stats as rss
from .entropy_geometry import BallSpec, TubeSpec

DEFAULT_SEED = 0
SEED_ENV_VAR = "ADDLAB_SEED"

EXIT_OK = 0
EXIT_ASSERTION = 1
EXIT_USAGE = 2
EXIT_RESOURCE = 3


def _jsonable(obj):
    if obj is None or isinstance(obj, (bool, int, str)):
        return obj
    if isinstance(obj, float):
        return obj
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if dataclasses.is_dataclass(obj):
        return _jsonable(dataclasses.asdict(obj))
    if hasattr(obj, "_asdict"):
        return _jsonable(obj._asdict())
    raise TypeError(f"cannot serialize {type(obj)!r}")


def _sanitize(obj):
    """JSON has no inf/nan literals; encode them as strings."""
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    if isinstance(obj, list):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, dict):
        return {k: _sanitize(v) for k, v in obj.items()}
    return obj


def envelope_json(command: str, parameters: dict, seed: int, payload,
                  wall_time_ms: int) -> str:
    doc = {
        "command": command,
        "parameters": _sanitize(_jsonable(parameters)),
        "seed": seed,
        "artifact_version": __version__,
        "payload": _sanitize(_jsonable(payload)),
        "wall_time_ms": wall_time_ms,
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ": "), indent=1)


def _assertion(name: str, passed: bool, **extra) -> dict:
    entry = {"name": name, "passed": bool(passed)}
    entry.update(extra)
    return entry


# ---------------------------------------------------------------------------
# bounds subcommands
# ---------------------------------------------------------------------------

def cmd_bounds_hmin(args, rng):
    gamma_star, h_min_star = bc.minimize_h_min(args.resolution)
    exponent = 2.0 * h_min_star + 1.0
    return {
        "gamma_star": gamma_star,
        "h_min_star": h_min_star,
        "d0_log": exponent,
        "d0_log_reference": 276.0,
        "d0_log_excess_vs_reference": exponent - 276.0,
        "assertions": [],
    }


def cmd_bounds_dmin(args, rng):
    result = bc.dmin_search(args.resolution, args.gamma_lo, args.gamma_hi)
    holds = bc.counterexample_condition(result.d_star, result.gamma_star)
    fails_below = not bc.counterexample_condition(result.d_star - 1, result.gamma_star)
    return {
        "gamma_star": result.gamma_star,
        "d_star": result.d_star,
        "objective": result.objective,
        "grid_resolution": result.grid_resolution,
        "assertions": [
            _assertion("condition_holds_at_d_star", holds),
            _assertion("condition_fails_at_d_star_minus_1", fails_below),
        ],
    }


def cmd_bounds_deltasmax(args, rng):
    report = bc.delta_s_max_bound()
    return {
        "delta_s_max_lower_bound": report.value,
        "d": report.d,
        "h": report.h,
        "gamma": report.gamma,
        "md_value": report.md_value,
        "margin": report.margin,
        "assertions": [
            _assertion("md_inequality_margin_positive", report.margin > 0.0),
            _assertion("value_ge_9.5e-6", report.value >= 9.5e-6),
        ],
    }


def cmd_bounds_certificate(args, rng):
    report = bc.certificate_evaluate(args.n, args.d, args.h, args.gamma,
                                     args.b, args.t)
    payload = dataclasses.asdict(report)
    payload["assertions"] = []
    return payload


# ---------------------------------------------------------------------------
# channel subcommands
# ---------------------------------------------------------------------------

def cmd_channel_sample(args, rng):
    phi = cc.sample_channel(args.d, args.n, rng)
    residual = max(
        float(np.max(np.abs(u @ u.conj().T - np.eye(args.n)))) for u in phi.unitaries)
    return {
        "d": phi.d,
        "n": phi.n,
        "weights": phi.weights,
        "unitaries": phi.unitaries,
        "weight_sum": float(phi.weights.sum()),
        "unitarity_residual_max": residual,
        "assertions": [_assertion("unitarity_residual_lt_1e-10", residual < 1e-10)],
    }


def cmd_channel_minentropy(args, rng):
    phi = cc.sample_channel(args.d, args.n, rng.stream(0))
    result = moe.minimize_output_entropy(phi, restarts=args.restarts,
                                         tol=args.tol, rng=rng.stream(1))
    return {
        "d": phi.d,
        "n": phi.n,
        "entropy_upper_bound": result.entropy_upper_bound,
        "restarts_used": result.restarts_used,
        "converged": result.converged,
        "gradient_norm_at_exit": result.gradient_norm_at_exit,
        "argmin": result.argmin,
        "assertions": [],
    }


def cmd_channel_lemma1(args, rng):
    bound = moe.lemma1_bound(args.d)
    max_entropy = -1.0
    max_excess_lemma1 = -math.inf
    max_excess_hp = -math.inf
    for k in range(args.trials):
        phi = cc.sample_channel(args.d, args.n, rng.stream(k))
        entropy = moe.product_entangled_entropy(phi)
        hp = moe.hp_bound(phi.weights)
        max_entropy = max(max_entropy, entropy)
        max_excess_lemma1 = max(max_excess_lemma1, entropy - bound)
        max_excess_hp = max(max_excess_hp, entropy - hp)
    return {
        "d": args.d,
        "n": args.n,
        "trials": args.trials,
        "lemma1_bound": bound,
        "max_product_entropy": max_entropy,
        "max_excess_vs_lemma1": max_excess_lemma1,
        "max_excess_vs_hp": max_excess_hp,
        "assertions": [
            _assertion("entropy_le_lemma1_bound", max_excess_lemma1 <= 1e-9),
            _assertion("entropy_le_hp_bound", max_excess_hp <= 1e-9),
        ],
    }


def cmd_channel_gap(args, rng):
    phi = cc.sample_channel(args.d, args.n, rng.stream(0))
    report = moe.additivity_gap_report(phi, restarts=args.restarts, rng=rng.stream(1))
    payload = dataclasses.asdict(report)
    payload["note"] = ("gap_lower_bound uses an upper-bound estimate of the "
                       "single-copy minimum entropy; a positive value is a "
                       "search heuristic, not a certified violation")
    payload["assertions"] = [
        _assertion("product_entropy_le_lemma1",
                   report.product_entangled_entropy <= report.lemma1_bound + 1e-9),
    ]
    return payload


# ---------------------------------------------------------------------------
# stats subcommands
# ---------------------------------------------------------------------------

def cmd_stats_eigdist(args, rng):
    spectra = rss.sample_spectrum_mc(args.d, args.n, args.count, rng,
                                     threads=args.threads)
    if args.csv:
        rss.export_spectra_csv(args.csv, spectra)
    if args.hist:
        rss.export_histogram_csv(args.hist, spectra[:, 0], bins=args.bins)
    payload = {
        "d": args.d,
        "n": args.n,
        "count": args.count,
        "mean_sorted_spectrum": spectra.mean(axis=0),
        "csv_path": args.csv,
        "hist_path": args.hist,
        "assertions": [],
    }
    if args.d == 2:
        cdf = rss.top_eigenvalue_cdf_d2(args.n)
        ks = rss.one_sample_ks(spectra[:, 0], cdf)
        payload["ks_vs_analytic"] = ks
        if args.count >= 100_000:
            payload["assertions"].append(_assertion("ks_lt_0.01", ks < 0.01, value=ks))
    return payload


def cmd_stats_overlap(args, rng):
    abs_x, phi_stat = rss.overlap_samples(args.n, args.count, rng,
                                          threads=args.threads)
    ks = rss.one_sample_ks(abs_x ** 2, lambda t: 1.0 - (1.0 - t) ** (args.n - 1))
    tail_points = []
    assertions = []
    for t in (0.1, 0.3, 0.5):
        analytic = rss.overlap_tail(args.n, t)
        empirical = float(np.mean(abs_x > t))
        se = math.sqrt(max(analytic * (1 - analytic), 1.0 / args.count) / args.count)
        ok = abs(empirical - analytic) <= 3.0 * se
        tail_points.append({"t": t, "empirical": empirical, "analytic": analytic,
                            "stderr": se, "within_3se": ok})
        assertions.append(_assertion(f"tail_within_3se_at_t_{t}", ok))
    corr = float(np.corrcoef(abs_x, phi_stat)[0, 1])
    payload = {
        "n": args.n,
        "count": args.count,
        "ks_distance_abs_x_squared": ks,
        "tail_points": tail_points,
        "independence_corr": corr,
        "assertions": assertions,
    }
    if args.count >= 100_000:
        payload["assertions"].append(_assertion("ks_lt_0.01", ks < 0.01, value=ks))
        payload["assertions"].append(
            _assertion("independence_corr_lt_0.01", abs(corr) < 0.01, value=corr))
    return payload


def cmd_stats_lemma34(args, rng):
    result = rss.lemma34_equivalence_test(args.d, args.n, args.count, rng,
                                          threads=args.threads,
                                          calibration_reps=args.reps)
    payload = dataclasses.asdict(result)
    payload["assertions"] = [
        _assertion("ks_below_calibrated_threshold", result.passed,
                   ks=result.ks_stat, threshold=result.threshold),
    ]
    return payload


def cmd_stats_typicality(args, rng):
    phi = cc.sample_channel(args.d, args.n, rng.stream(0))
    ball = BallSpec(args.b, args.n, args.d)
    est = rss.typicality_estimate(phi, ball, args.count, rng.stream(1),
                                  threads=args.threads)
    payload = dataclasses.asdict(est)
    payload.update({"d": args.d, "n": args.n, "b": args.b, "assertions": []})
    return payload


def cmd_stats_tubehit(args, rng):
    phi = cc.sample_channel(args.d, args.n, rng.stream(0))
    psi = cc.sample_unit_vector(args.n, rng.stream(1))
    tube = TubeSpec(args.gamma, args.t, args.n, args.d)
    ball = BallSpec(args.b, args.n, args.d)
    est = rss.tube_hit_estimate(phi, psi, tube, ball, args.count, rng.stream(2),
                                threads=args.threads)
    payload = dataclasses.asdict(est)
    payload.update({
        "d": args.d, "n": args.n, "gamma": args.gamma, "t": args.t, "b": args.b,
        "assertions": [
            _assertion("fraction_ge_floor_minus_3se_when_valid", est.floor_respected,
                       floor_valid=est.floor_valid),
        ],
    })
    return payload


# ---------------------------------------------------------------------------
# Parser and dispatch
# ---------------------------------------------------------------------------

def _default_seed() -> int:
    env = os.environ.get(SEED_ENV_VAR)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            pass
    return DEFAULT_SEED


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None,
                        help=f"master seed (default: ${SEED_ENV_VAR} or {DEFAULT_SEED})")
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                        help="worker threads for Monte Carlo sweeps; results "
                             "do not depend on this")
    common.add_argument("--output", "-o", default=None,
                        help="write the JSON result envelope here (default: stdout)")
    common.add_argument("--format", choices=("json", "csv"), default="json",
                        help="envelope format; csv applies only to bulk-sample "
                             "commands and redirects samples to --output")

    parser = argparse.ArgumentParser(
        prog="addlab",
        description="Random unitary channels, minimum output entropy, and "
                    "the additivity-violation bound pipeline.")
    groups = parser.add_subparsers(dest="group", required=True)

    def leaf(sub, name, help_text):
        return sub.add_parser(name, parents=[common], help=help_text)

    bounds = groups.add_parser("bounds", help="closed-form bound pipeline")
    bsub = bounds.add_subparsers(dest="subcommand", required=True)
    p = leaf(bsub, "hmin", "minimize the h_min curve over gamma")
    p.add_argument("--resolution", type=float, default=1e-3)
    p.set_defaults(func=cmd_bounds_hmin)
    p = leaf(bsub, "dmin", "smallest counterexample dimension search")
    p.add_argument("--resolution", type=float, default=1e-3)
    p.add_argument("--gamma-lo", type=float, default=0.70)
    p.add_argument("--gamma-hi", type=float, default=0.83)
    p.set_defaults(func=cmd_bounds_dmin)
    p = leaf(bsub, "deltasmax", "maximal-violation lower bound")
    p.set_defaults(func=cmd_bounds_deltasmax)
    p = leaf(bsub, "certificate", "evaluate the master certificate")
    p.add_argument("--n", type=float, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--h", type=float, required=True)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--b", type=float, default=2.0)
    p.add_argument("--t", type=float, default=6.0)
    p.set_defaults(func=cmd_bounds_certificate)

    channel = groups.add_parser("channel", help="channel sampling and entropy")
    csub = channel.add_subparsers(dest="subcommand", required=True)
    p = leaf(csub, "sample", "draw one random unitary channel")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.set_defaults(func=cmd_channel_sample)
    p = leaf(csub, "minentropy", "minimum output entropy upper bound")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--restarts", type=int, default=moe.DEFAULT_RESTARTS)
    p.add_argument("--tol", type=float, default=moe.DEFAULT_TOL)
    p.set_defaults(func=cmd_channel_minentropy)
    p = leaf(csub, "lemma1", "Monte Carlo check of the product bound")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--trials", type=int, default=100)
    p.set_defaults(func=cmd_channel_lemma1)
    p = leaf(csub, "gap", "additivity-gap report for one channel")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--restarts", type=int, default=moe.DEFAULT_RESTARTS)
    p.set_defaults(func=cmd_channel_gap)

    stats = groups.add_parser("stats", help="random-state statistics")
    ssub = stats.add_subparsers(dest="subcommand", required=True)
    p = leaf(ssub, "eigdist", "sample induced-state spectra")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--count", type=int, default=10_000)
    p.add_argument("--csv", default=None, help="write sorted spectra rows here")
    p.add_argument("--hist", default=None, help="write top-eigenvalue histogram here")
    p.add_argument("--bins", type=int, default=50)
    p.set_defaults(func=cmd_stats_eigdist)
    p = leaf(ssub, "overlap", "overlap tail law check")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--count", type=int, default=100_000)
    p.set_defaults(func=cmd_stats_overlap)
    p = leaf(ssub, "lemma34", "two-pipeline spectral equivalence test")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--count", type=int, default=20_000)
    p.add_argument("--reps", type=int, default=400)
    p.set_defaults(func=cmd_stats_lemma34)
    p = leaf(ssub, "typicality", "ball-hit fraction estimate")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--b", type=float, default=2.0)
    p.add_argument("--count", type=int, default=10_000)
    p.set_defaults(func=cmd_stats_typicality)
    p = leaf(ssub, "tubehit", "tube-hit fraction estimate")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--gamma", type=float, default=0.5)
    p.add_argument("--t", type=float, default=6.0)
    p.add_argument("--b", type=float, default=2.0)
    p.add_argument("--count", type=int, default=10_000)
    p.set_defaults(func=cmd_stats_tubehit)

    return parser


def _collect_parameters(args) -> dict:
    skip = {"func", "group", "subcommand", "seed", "threads", "output", "format"}
    return {k: v for k, v in vars(args).items() if k not in skip}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    seed = args.seed if args.seed is not None else _default_seed()
    rng = RngStream(seed)
    command = f"{args.group} {args.subcommand}"
    start = time.monotonic()
    try:
        payload = args.func(args, rng)
    except ResourceError as exc:
        print(f"addlab: resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except AddlabError as exc:
        print(f"addlab: {exc}", file=sys.stderr)
        return EXIT_ASSERTION
    wall_ms = int(round((time.monotonic() - start) * 1000.0))
    text = envelope_json(command, _collect_parameters(args), seed, payload, wall_ms)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    failed = [a for a in payload.get("assertions", []) if not a["passed"]]
    if failed:
        names = ", ".join(a["name"] for a in failed)
        print(f"addlab: failed assertions: {names}", file=sys.stderr)
        return EXIT_ASSERTION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
