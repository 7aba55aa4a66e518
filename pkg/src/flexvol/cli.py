"""Command line interface.

Every subcommand prints JSON (or CSV for traces) and exits with 0 on
success, 1 when a verification fails, 2 on bad input and 3 when a numerical
method gives up.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import io
from .continuation import (ComplexPath, continue_volume, determinant_linking, init_state,
                           linking_table, path_clearance, verify_theorem_key, verify_theorem_key2)
from .errors import ArgumentError, DomainError, FlexvolError, NumericError
from .flexion import ConstraintSystem, hyperboloid_point, solve_configuration, trace_flexion
from .gram import Space, classify_domain, components, principal_minors, witness_matrix
from .loops import loop_family
from .polyhedra import Configuration, EdgeLengthSet
from .volume import regular_simplex_gram, volume, volume_oracle_quadrature

EXIT_OK, EXIT_FAILED, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3
COMMANDS = ("volume", "oracle", "continue", "link", "flex", "verify-bellows",
            "verify-monodromy", "witness")
ZERO_TOL = 1e-10


@dataclass
class RunConfig:
    command: str
    inputs: list[str] = field(default_factory=list)
    tol: float | None = None
    steps: int = 200
    step_length: float = 0.01
    seed: int = 0
    out: str | None = None
    space: str | None = None
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ArgumentError(f"unknown command {self.command!r}")
        if self.tol is not None and not self.tol > 0:
            raise ArgumentError("--tol must be positive")
        if self.steps < 1 or not self.step_length > 0:
            raise ArgumentError("--steps and --step-length must be positive")
        for p in self.inputs:
            if not Path(p).exists():
                raise ArgumentError(f"no such file: {p}")


def _emit(cfg: RunConfig, text: str, out=None):
    target = out or cfg.out
    if target:
        Path(target).write_text(text)
    else:
        sys.stdout.write(text)


def _gram_input(cfg: RunConfig):
    if cfg.options.get("regular") is not None:
        space = Space.parse(cfg.space or "hyperbolic")
        return regular_simplex_gram(cfg.options["regular"], cfg.options.get("edge", 1.0), space), space
    if not cfg.inputs:
        raise ArgumentError("give a Gram matrix file or --regular N")
    obj = io.load_json(cfg.inputs[0])
    space = Space.parse(cfg.space or (obj.get("space") if isinstance(obj, dict) else None) or "hyperbolic")
    return io.gram_from_json(obj), space


def _cmd_volume(cfg: RunConfig) -> int:
    c, space = _gram_input(cfg)
    res = volume(c, space, cfg.tol or 1e-11)
    _emit(cfg, io.dumps(res.to_json()))
    return EXIT_OK


def _cmd_oracle(cfg: RunConfig) -> int:
    c, space = _gram_input(cfg)
    res = volume_oracle_quadrature(c, space, cfg.tol or 1e-9)
    _emit(cfg, io.dumps(res.to_json()))
    return EXIT_OK


def _paths_input(cfg: RunConfig) -> tuple[list[tuple[str, ComplexPath]], Space, bool]:
    """Paths from a path file, or every loop of a loop file (third item True)."""
    if not cfg.inputs:
        raise ArgumentError("give a path file")
    obj = io.load_json(cfg.inputs[0])
    if isinstance(obj, dict) and "loops" in obj:
        space = Space.parse(cfg.space or obj.get("space", "hyperbolic"))
        items = []
        for i, item in enumerate(obj["loops"]):
            path, _ = io.path_from_json({"space": space.value, **item})
            items.append((item.get("label", f"loop {i}"), path))
        return items, space, True
    path, space = io.path_from_json(obj)
    if cfg.space:
        space = Space.parse(cfg.space)
    return [("path", path)], space, False


def _links(path: ComplexPath) -> dict:
    out = {"clearance": path_clearance(path)}
    if path.is_closed:
        out["lk"] = {c.label(): v for c, v in linking_table(path).items()}
        out["lk_H"] = determinant_linking(path)
    return out


def _per_path(cfg: RunConfig, func) -> int:
    items, space, many = _paths_input(cfg)
    reports = [{"label": label, **func(path, space)} for label, path in items]
    _emit(cfg, io.dumps({"loops": reports} if many else reports[0]))
    return EXIT_OK


def _continue_one(path: ComplexPath, space: Space, tol: float) -> dict:
    start = path.start.entries
    if np.iscomplexobj(start):
        start = start.real
    state = init_state(start, space)
    end = continue_volume(state, path, space, tol)
    return {"start": state.to_json(), "end": end.to_json(), **_links(path)}


def _cmd_continue(cfg: RunConfig) -> int:
    return _per_path(cfg, lambda path, space: _continue_one(path, space, cfg.tol or 1e-10))


def _link_one(path: ComplexPath, space: Space) -> dict:
    if not path.is_closed:
        raise ArgumentError("linking numbers need a closed loop")
    return _links(path)


def _cmd_link(cfg: RunConfig) -> int:
    return _per_path(cfg, _link_one)


def _random_configuration(k, seed: int) -> Configuration:
    rng = np.random.default_rng(seed)
    return Configuration({v: hyperboloid_point(rng.normal(size=k.n) * 0.5) for v in k.vertices})


def _flex_inputs(cfg: RunConfig):
    if len(cfg.inputs) < 2:
        raise ArgumentError("flex needs a complex file and an edge-length file")
    k = io.complex_from_json(io.load_json(cfg.inputs[0]))
    lengths = io.lengths_from_json(io.load_json(cfg.inputs[1]), k)
    system = ConstraintSystem(k, lengths)
    if len(cfg.inputs) > 2:
        p0 = io.configuration_from_json(io.load_json(cfg.inputs[2]), k)
    else:
        p0 = _random_configuration(k, cfg.seed)
    return system, solve_configuration(system, p0, min(cfg.tol or 1e-11, 1e-13))


def _cmd_flex(cfg: RunConfig) -> int:
    system, p0 = _flex_inputs(cfg)
    trace = trace_flexion(system, p0, cfg.steps, cfg.step_length, cfg.tol or 1e-11)
    if cfg.out:
        base = Path(cfg.out)
        base.with_suffix(".csv").write_text(trace.to_csv())
        base.with_suffix(".json").write_text(io.dumps(trace.to_json()))
        summary = {k: v for k, v in trace.to_json().items() if k not in ("configurations", "t")}
        sys.stdout.write(io.dumps(summary))
    else:
        sys.stdout.write(trace.to_csv())
    return EXIT_OK


def bellows_report(steps: int = 200, step_length: float = 0.01, tol: float = 1e-11,
                   drift_tol: float = 1e-8, scene: str = "bricard_octahedron.json") -> dict:
    """Trace the bundled flexible octahedron and check that volume and curvature stay put."""
    obj = io.load_data(scene)
    k = io.complex_from_json(obj["complex"])
    p0 = io.configuration_from_json(obj, k)
    system = ConstraintSystem(k, EdgeLengthSet.from_configuration(k, p0))
    trace = trace_flexion(system, p0, steps, step_length, tol)
    v0 = trace.volumes[0]
    checks = {
        "steps": (trace.steps, trace.steps >= steps),
        "angle_variation": (trace.angle_variation(), trace.angle_variation() >= 0.1),
        "max_residual": (trace.max_residual(), trace.max_residual() <= tol),
        "volume_drift": (trace.volume_drift(), trace.volume_drift() <= drift_tol * (1 + abs(v0))),
        "tmc_drift": (trace.tmc_drift(), trace.tmc_drift() <= drift_tol),
        "combined_drift": (trace.combined_drift(), trace.combined_drift() <= drift_tol),
    }
    return {"scene": scene, "volume": v0, "tmc": trace.tmc[0], "stopped": trace.stopped,
            "checks": {name: {"value": float(v), "ok": bool(ok)} for name, (v, ok) in checks.items()},
            "ok": all(ok for _, ok in checks.values())}


def _cmd_verify_bellows(cfg: RunConfig) -> int:
    report = bellows_report(cfg.steps, cfg.step_length, cfg.tol or 1e-11)
    _emit(cfg, io.dumps(report))
    return EXIT_OK if report["ok"] else EXIT_FAILED


def _loops_for(cfg: RunConfig):
    if cfg.inputs:
        items, space, _ = _paths_input(cfg)
        return space, items
    space = Space.parse(cfg.space or "hyperbolic")
    n = cfg.options.get("n") or 3
    count = cfg.options.get("count") or 20
    fam = loop_family(n, space, count, seed=cfg.seed)
    return space, [(case.label, case.path) for case in fam]


def monodromy_report(space: Space, loops, tol: float = 1e-6) -> dict:
    rows = []
    for label, path in loops:
        if space is Space.HYPERBOLIC and path.n % 2 == 1:
            rep, check = verify_theorem_key(path, space, tol), "real part of V2 - (-1)^lk V1"
        else:
            rep, check = verify_theorem_key2(path, space, tol), "imaginary part of V2"
        rows.append({"label": label, "check": check, **rep.to_json()})
    return {"space": space.value, "loops": rows, "ok": all(r["holds"] for r in rows)}


def _cmd_verify_monodromy(cfg: RunConfig) -> int:
    space, loops = _loops_for(cfg)
    report = monodromy_report(space, loops, cfg.tol or 1e-6)
    _emit(cfg, io.dumps(report))
    return EXIT_OK if report["ok"] else EXIT_FAILED


def witness_report(n: int, k: int, sigma: int) -> dict:
    c = witness_matrix(n, range(k), sigma)
    minors = principal_minors(c, 2)
    comps = components(n)
    table = [{"component": comp.label(), "value": float(comp.value(c)),
              "zero": bool(abs(comp.value(c)) <= ZERO_TOL)} for comp in comps]
    return {"n": n, "k": k, "sigma": sigma, "matrix": np.asarray(c.entries).tolist(),
            "D": float(minors[tuple(range(n + 1))]),
            "minors": {",".join(map(str, s)): float(v) for s, v in minors.items()},
            "components": table,
            "on": [row["component"] for row in table if row["zero"]],
            "classification": classify_domain(c).kind.value}


def _cmd_witness(cfg: RunConfig) -> int:
    opts = cfg.options
    n, k = opts.get("n"), opts.get("k")
    if n is None or k is None:
        raise ArgumentError("witness needs n and k")
    _emit(cfg, io.dumps(witness_report(n, k, opts.get("sigma", 1))))
    return EXIT_OK


_HANDLERS = {
    "volume": _cmd_volume, "oracle": _cmd_oracle, "continue": _cmd_continue, "link": _cmd_link,
    "flex": _cmd_flex, "verify-bellows": _cmd_verify_bellows,
    "verify-monodromy": _cmd_verify_monodromy, "witness": _cmd_witness,
}


def run(cfg: RunConfig) -> int:
    """Execute one command; errors are mapped to exit codes and reported on stderr."""
    try:
        return _HANDLERS[cfg.command](cfg)
    except NumericError as exc:
        msg = f"numeric error: {exc}"
        if exc.history:
            msg += f"\nresidual history: {exc.history}"
        print(msg, file=sys.stderr)
        return EXIT_NUMERIC
    except (ArgumentError, DomainError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except FlexvolError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def _sigma(text: str) -> int:
    t = text.strip()
    if t in ("+", "+1", "1"):
        return 1
    if t in ("-", "-1"):
        return -1
    raise argparse.ArgumentTypeError("sigma must be + or -")


def _keyvals(tokens: Sequence[str], opts: dict):
    """Allow ``n=3 k=2 sigma=+`` style arguments for ``witness``."""
    conv = {"n": int, "k": int, "sigma": _sigma}
    for tok in tokens:
        key, sep, val = tok.partition("=")
        if not sep or key not in conv:
            raise ArgumentError(f"unexpected argument {tok!r}")
        try:
            opts[key] = conv[key](val)
        except (ValueError, argparse.ArgumentTypeError) as exc:
            raise ArgumentError(f"bad value in {tok!r}: {exc}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out")
    common.add_argument("--space", choices=["hyperbolic", "sphere"])

    parser = argparse.ArgumentParser(prog="flexvol", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    for name, helptext in (("volume", "volume of a simplex from its Gram matrix"),
                           ("oracle", "cubature volume (independent check)")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("gram", nargs="?", help='JSON {"n": ..., "entries": [...]}')
        p.add_argument("--regular", type=int, metavar="N", help="regular simplex of dimension N")
        p.add_argument("--edge", type=float, default=1.0)

    p = sub.add_parser("continue", parents=[common], help="continue the volume along a path file")
    p.add_argument("path")
    p = sub.add_parser("link", parents=[common], help="linking numbers of a closed path")
    p.add_argument("path")

    p = sub.add_parser("flex", parents=[common], help="trace a flexion; writes CSV and a JSON sidecar")
    p.add_argument("complex")
    p.add_argument("lengths")
    p.add_argument("configuration", nargs="?")
    p.add_argument("--steps", type=int, default=200)
    p.add_argument("--step-length", type=float, default=0.01)

    p = sub.add_parser("verify-bellows", parents=[common], help="flex the bundled octahedron")
    p.add_argument("--steps", type=int, default=200)
    p.add_argument("--step-length", type=float, default=0.01)

    p = sub.add_parser("verify-monodromy", parents=[common], help="run the loop suites")
    p.add_argument("loops", nargs="?", help="loop file; default: generated family")
    p.add_argument("--n", type=int)
    p.add_argument("--count", type=int)

    p = sub.add_parser("witness", parents=[common], help="witness matrix on H and one H_I")
    p.add_argument("pairs", nargs="*", metavar="KEY=VALUE", help="n=3 k=2 sigma=+")
    p.add_argument("--n", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--sigma", type=_sigma)
    return parser


def config_from_args(argv: Sequence[str] | None = None) -> RunConfig:
    args = build_parser().parse_args(argv)
    inputs = [getattr(args, a) for a in ("gram", "path", "complex", "lengths", "configuration", "loops")
              if getattr(args, a, None)]
    opts = {}
    for key in ("regular", "edge", "n", "count", "k", "sigma"):
        if getattr(args, key, None) is not None:
            opts[key] = getattr(args, key)
    if args.command == "witness":
        _keyvals(args.pairs, opts)
    return RunConfig(args.command, inputs, args.tol, getattr(args, "steps", 200),
                     getattr(args, "step_length", 0.01), args.seed, args.out, args.space, opts)


def main(argv: Sequence[str] | None = None) -> int:
    try:
        cfg = config_from_args(argv)
    except ArgumentError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SystemExit as exc:  # argparse usage errors
        return EXIT_INPUT if exc.code else EXIT_OK
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
