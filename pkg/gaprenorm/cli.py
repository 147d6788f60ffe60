import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Dict, Optional

import dotenv

from . import serialize
from .config import RunConfig, get_settings, load_run_config
from .diffeo import Diffeo
from .errors import GapRenormError, MalformedInputError
from .gapmap import GapMap, affine_gap_map
from .renorm import Combinatorics, renormalize, renormalize_n
from .search import bisect_b, deep_map, rotation_interval, rotation_number, transversality_check
from .tangent import (
    ConeParams,
    block_report,
    cone_invariance_test,
    jacobian,
    reduced_model_roots,
    spectrum,
    splitting_verdict,
    technical_lemma_check,
)

logger = logging.getLogger(__name__)

COMMANDS = (
    "renormalize",
    "jacobian",
    "spectrum",
    "cone-check",
    "search",
    "affine-demo",
    "deep-map",
    "rotation",
    "transversality",
    "serve",
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gaprenorm",
        description="Renormalization of dissipative gap maps: trajectories, Jacobians, cones and searches in b.",
    )
    parser.add_argument("command", nargs="?", choices=COMMANDS)
    parser.add_argument("--map", help="gap map JSON file")
    parser.add_argument("--depth", type=int, help="renormalization depth")
    parser.add_argument("--m", type=int, help="nonlinearity basis dimension")
    parser.add_argument("--h", type=float, help="finite-difference step")
    parser.add_argument("--r", type=float, help="cone slope parameter")
    parser.add_argument("--delta", type=float, help="cone nonlinearity parameter")
    parser.add_argument("--split-delta", type=float, default=0.5, help="threshold of the splitting verdict")
    parser.add_argument("--samples", type=int, help="Monte Carlo samples")
    parser.add_argument("--seed", type=int, help="Monte Carlo seed")
    parser.add_argument("--target", help='target combinatorics, e.g. "(-,1)(-,1)"')
    parser.add_argument("--tol", type=float, help="bisection tolerance in b")
    parser.add_argument("--alpha", type=float, help="left slope for searches")
    parser.add_argument("--beta", type=float, help="right slope for searches")
    parser.add_argument("--lookahead", type=int, help="levels checked ahead when refining deep maps")
    parser.add_argument("--iterations", type=int, help="orbit length for rotation numbers")
    parser.add_argument("--out-dir", default=".", help="directory for output files")
    parser.add_argument("--config", help="JSON run config (default: $GAPRENORM_CONFIG)")
    parser.add_argument("--print-config", action="store_true", help="print the effective run config and exit")
    parser.add_argument("--log-level", help="logging level (default: $GAPRENORM_LOG_LEVEL)")
    return parser


def _write(args: argparse.Namespace, name: str, text: str) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    path.write_text(text)
    logger.info(f"[CLI] wrote {path}")
    return path


def _require(args: argparse.Namespace, *names: str) -> None:
    for name in names:
        if getattr(args, name) is None:
            raise MalformedInputError(f"--{name.replace('_', '-')} is required for {args.command}")


def _load_map(args: argparse.Namespace) -> GapMap:
    _require(args, "map")
    return serialize.gap_map_from_json(serialize.load_json(args.map))


def _target(args: argparse.Namespace) -> Combinatorics:
    _require(args, "target")
    return Combinatorics.parse(args.target)


def _search_inputs(args: argparse.Namespace, config: RunConfig):
    if args.map:
        f = _load_map(args)
        alpha, beta, phi_L, phi_R = f.alpha, f.beta, f.phi_L, f.phi_R
    else:
        alpha, beta = 0.5, 0.5
        phi_L = phi_R = Diffeo.identity(config.m)
    alpha = args.alpha if args.alpha is not None else alpha
    beta = args.beta if args.beta is not None else beta
    return alpha, beta, phi_L, phi_R


def cmd_renormalize(args: argparse.Namespace, config: RunConfig) -> int:
    _require(args, "depth")
    f = _load_map(args)
    trajectory = renormalize_n(f, args.depth, m=config.m)
    _write(args, "trajectory.json", serialize.dumps(serialize.trajectory_to_json(trajectory)))
    _write(args, "trajectory.csv", serialize.trajectory_csv(trajectory))
    if trajectory.blocked is not None:
        print(f"error: {trajectory.blocked.message}", file=sys.stderr)
        return trajectory.blocked.exit_code
    print(f"gamma={trajectory.gamma}")
    return 0


def _jacobian_report(args: argparse.Namespace, config: RunConfig, with_spectrum: bool):
    f = _load_map(args)
    J = jacobian(f, config.m, config.h)
    report = block_report(J).model_dump()
    mags = spectrum(J)
    roots = reduced_model_roots(report["K3"], report["K4"], report["M1"])
    report.update(
        k=J.k,
        sigma=J.sigma.value,
        m=J.m,
        spectrum=mags.tolist(),
        reduced_roots=[
            str(v) if roots.is_complex else v for v in (roots.lambda_plus, roots.lambda_minus)
        ],
    )
    if with_spectrum:
        report["splitting"] = splitting_verdict(J, args.split_delta).model_dump()
    return J, mags, report


def cmd_jacobian(args: argparse.Namespace, config: RunConfig) -> int:
    J, _, report = _jacobian_report(args, config, with_spectrum=False)
    _write(args, "jacobian.csv", serialize.matrix_csv(J.matrix))
    _write(args, "block_report.json", serialize.dumps(report))
    print(f"K3={report['K3']!r} eps_max={report['eps_max']!r}")
    return 0


def cmd_spectrum(args: argparse.Namespace, config: RunConfig) -> int:
    _, mags, report = _jacobian_report(args, config, with_spectrum=True)
    _write(args, "spectrum.csv", serialize.spectrum_csv(mags))
    _write(args, "block_report.json", serialize.dumps(report))
    print(f"dominant={mags[0]!r} splitting={'pass' if report['splitting']['passes'] else 'fail'}")
    return 0


def cmd_cone_check(args: argparse.Namespace, config: RunConfig) -> int:
    f = _load_map(args)
    J = jacobian(f, config.m, config.h)
    params = ConeParams(r=config.r, delta=config.delta)
    report = cone_invariance_test(J, params, config.samples, config.seed).model_dump()
    report["technical_lemma"] = technical_lemma_check(J, params, config.samples, config.seed).model_dump()
    _write(args, "cone_report.json", serialize.dumps(report))
    print(f"inside={report['inside_fraction']!r} min_expansion={report['min_expansion']!r}")
    return 0


def cmd_search(args: argparse.Namespace, config: RunConfig) -> int:
    target = _target(args)
    depth = args.depth or len(target)
    alpha, beta, phi_L, phi_R = _search_inputs(args, config)
    result = bisect_b(alpha, beta, phi_L, phi_R, target, depth, config.tol, k_cap=config.k_cap)
    _write(args, "search_result.json", serialize.dumps(serialize.search_result_to_json(result, target, depth)))
    print(f"b_star={result.b_star!r} gamma={result.gamma}")
    return 0


def cmd_affine_demo(args: argparse.Namespace, config: RunConfig) -> int:
    f = affine_gap_map(0.5, 0.5, 0.3, m=config.m)
    step = renormalize(f)
    g = step.renormalized
    l, r = step.I_prime
    print(f"k={step.k} sigma={step.sigma.value}")
    print(f"I'=[{l!r}, {r!r}]")
    print(f"b~={g.b!r} (expected 1/3)")
    print(f"alpha~={g.alpha!r} (expected 0.125)")
    print(f"beta~={g.beta!r} (expected 0.25)")
    return 0


def cmd_deep_map(args: argparse.Namespace, config: RunConfig) -> int:
    target = _target(args)
    depth = args.depth or len(target)
    alpha, beta, phi_L, phi_R = _search_inputs(args, config)
    result = deep_map(alpha, beta, phi_L, phi_R, target, depth, lookahead=config.lookahead, tol=config.tol)
    doc = {
        "gamma": str(result.gamma),
        "maps": [serialize.gap_map_to_json(g) for g in result.maps],
        "adjustments": [
            {"level": a.level, "old_b": a.old_b, "new_b": a.new_b, "lookahead": a.lookahead}
            for a in result.adjustments
        ],
    }
    _write(args, "deep_map.json", serialize.dumps(doc))
    for level, g in enumerate(result.maps):
        _write(args, f"map_level{level}.json", serialize.dumps(serialize.gap_map_to_json(g)))
    print(f"gamma={result.gamma} adjustments={len(result.adjustments)}")
    return 0


def cmd_rotation(args: argparse.Namespace, config: RunConfig) -> int:
    f = _load_map(args)
    rho = rotation_number(f, config.iterations)
    doc: Dict[str, Any] = {"rotation_number": rho, "iterations": config.iterations}
    if args.depth:
        gamma = renormalize_n(f, args.depth).gamma
        doc.update(gamma=str(gamma), interval=list(rotation_interval(gamma)))
    _write(args, "rotation.json", serialize.dumps(doc))
    print(f"rho={rho!r}")
    return 0


def cmd_transversality(args: argparse.Namespace, config: RunConfig) -> int:
    _require(args, "depth")
    f = _load_map(args)
    report = transversality_check(f, args.depth, config.h)
    _write(args, "transversality.json", serialize.dumps(report))
    print(f"all_positive={report.all_positive}")
    return 0


def cmd_serve(args: argparse.Namespace, config: RunConfig) -> int:
    import uvicorn

    uvicorn.run("gaprenorm.main:app", host="0.0.0.0", port=get_settings().port)
    return 0


HANDLERS: Dict[str, Callable[[argparse.Namespace, RunConfig], int]] = {
    "renormalize": cmd_renormalize,
    "jacobian": cmd_jacobian,
    "spectrum": cmd_spectrum,
    "cone-check": cmd_cone_check,
    "search": cmd_search,
    "affine-demo": cmd_affine_demo,
    "deep-map": cmd_deep_map,
    "rotation": cmd_rotation,
    "transversality": cmd_transversality,
    "serve": cmd_serve,
}


def main(argv: Optional[list] = None) -> int:
    dotenv.load_dotenv()
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=(args.log_level or get_settings().log_level).upper(),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
    )
    try:
        config = load_run_config(
            args.config,
            {
                "m": args.m,
                "h": args.h,
                "seed": args.seed,
                "r": args.r,
                "delta": args.delta,
                "samples": args.samples,
                "tol": args.tol,
                "lookahead": args.lookahead,
                "iterations": args.iterations,
            },
        )
        if args.print_config:
            print(json.dumps(config.model_dump(), indent=2))
            return 0
        if args.command is None:
            parser.print_usage(sys.stderr)
            return 2
        logger.info(f"[CLI] {args.command}")
        return HANDLERS[args.command](args, config)
    except GapRenormError as e:
        logger.debug(f"[CLI] {type(e).__name__}: {e.details}")
        print(f"error: {type(e).__name__}: {e.message}", file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
