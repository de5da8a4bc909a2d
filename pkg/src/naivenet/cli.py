"""Command-line entry point: ``naivenet {analytic,simulate,experiment,network}``.

Every subcommand writes CSV (header row first, numbers to 6 significant
digits) to stdout or ``--out``.  Exit codes: 0 ok, 2 usage, 3 domain error,
4 internal invariant violation.
"""

from __future__ import annotations

import argparse
import itertools
import json
import math
import sys
import time

import numpy as np

from . import __version__
from . import analytic as an
from . import experiment as ex
from . import network as nw
from . import simulate as sim
from .signals import SignalModel, UnsupportedCombination

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN, EXIT_INTERNAL = 0, 2, 3, 4

DOMAIN_ERRORS = (an.NoSocialLearning, an.DisconnectedGroups, an.DegenerateInput, UnsupportedCombination)


class UsageError(Exception):
    pass


def parse_grid(text: str) -> list[float]:
    """``start:stop:step`` (endpoints inclusive within 1e-9), comma list, or one value."""
    text = text.strip()
    if ":" in text:
        try:
            start, stop, step = (float(x) for x in text.split(":"))
        except ValueError as e:
            raise UsageError(f"bad grid {text!r}") from e
        if step <= 0 or stop < start:
            raise UsageError(f"bad grid {text!r}")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + k * step, 12) for k in range(count)]
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as e:
        raise UsageError(f"bad value list {text!r}") from e


def fmt(x) -> str:
    if isinstance(x, an.NonConvergent):
        return "NONCONVERGENT"
    if isinstance(x, an.MislearningProb):
        x = x.value
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.6g}"


def _csv(header, rows) -> str:
    lines = [",".join(header)]
    lines += [",".join(fmt(v) if not isinstance(v, str) else v for v in row) for row in rows]
    return "\n".join(lines) + "\n"


# analytic -------------------------------------------------------------------

def cmd_analytic(args) -> str:
    sigmas = parse_grid(args.sigma)
    kind = args.family
    rows = []
    if kind == "uniform":
        for q, s in itertools.product(parse_grid(args.q), sigmas):
            rows.append((q, s, an.uniform_mislearning(q, s)))
        return _csv(["q", "sigma", "mislearning"], rows)
    if kind == "two-groups":
        for qs, qd, s in itertools.product(parse_grid(args.qs), parse_grid(args.qd), sigmas):
            out = an.two_groups_mislearning(qs, qd, s)
            rows.append((qs, qd, s, out.extras["xi_plus"], out))
        return _csv(["qs", "qd", "sigma", "xi_plus", "mislearning"], rows)
    if kind == "decay":
        for d, s in itertools.product(parse_grid(args.delta), sigmas):
            rows.append((d, s, an.decay_mislearning(d, s)))
        return _csv(["delta", "sigma", "mislearning"], rows)
    if kind == "decay-two-groups":
        for d, qs, qd, s in itertools.product(parse_grid(args.delta), parse_grid(args.qs),
                                              parse_grid(args.qd), sigmas):
            out = an.decay_two_groups(d, qs, qd, s)
            rows.append((d, qs, qd, s, out.extras["delta0"], out))
        return _csv(["delta", "qs", "qd", "sigma", "delta0", "mislearning"], rows)
    for d, s in itertools.product(parse_grid(args.d), sigmas):
        if d != int(d):
            raise UsageError("--d takes integers")
        rows.append((int(d), s, an.constant_outdegree_mislearning(int(d), s, args.tail_tol)))
    return _csv(["d", "sigma", "mislearning"], rows)


# shared generator flags -------------------------------------------------------

def _generators(args) -> list[nw.NetworkGenerator]:
    fam = args.family
    need = {
        "uniform": ("q",), "er": ("q",), "two-groups": ("qs", "qd"),
        "two-groups-random": ("qs", "qd"), "decay": ("delta",),
        "decay-two-groups": ("delta", "qs", "qd"), "constant-degree": ("d",),
    }
    if fam not in need:
        raise UsageError(f"unknown family {fam!r}")
    grids = []
    for key in need[fam]:
        val = getattr(args, key, None)
        if val is None:
            raise UsageError(f"--{key} is required for family {fam}")
        grids.append(parse_grid(val))
    gens = []
    for values in itertools.product(*grids):
        params = dict(zip(need[fam], values))
        if fam == "constant-degree":
            params["d"] = int(params["d"])
        fam_key = {"constant-degree": nw.CONSTANT_OUT_DEGREE}.get(fam, fam)
        try:
            gen = nw.NetworkGenerator(fam_key, params)
        except ValueError as e:
            raise UsageError(str(e)) from e
        if getattr(args, "autarkic", None):
            n1, n2 = (int(v) for v in args.autarkic.split(","))
            gen = nw.NetworkGenerator.autarkic_mix(gen, n1, n2)
        gens.append(gen)
    return gens


def _signal(args) -> SignalModel:
    try:
        if args.signal == "gaussian":
            return SignalModel.gaussian(args.mu, args.sigma)
        if args.signal == "binary":
            return SignalModel.binary(args.p)
        return SignalModel.triangular()
    except ValueError as e:
        raise UsageError(str(e)) from e


# simulate ---------------------------------------------------------------------

def cmd_simulate(args) -> str:
    model = _signal(args)
    rows = []
    for gen in _generators(args):
        cfg = sim.SimulationConfig(gen, model, args.n, args.R, args.seed, args.actions, args.rule, args.target)
        est = sim.estimate_mislearning(cfg, args.workers)
        rows.append((gen.family, gen.describe(), model.describe(), args.n, args.R, args.seed,
                     est.estimate, est.standard_error))
        if args.trajectory:
            _dump_trajectory(args, gen, model)
    return _csv(["family", "params", "signal", "n", "R", "seed", "estimate", "stderr"], rows)


def _dump_trajectory(args, gen, model):
    rng = np.random.default_rng(args.seed)
    state = int(rng.integers(0, 2))
    net = nw.sample_network(gen, args.n, rng) if gen.is_random else nw.build_weighted(gen, args.n)
    if args.actions == sim.CONTINUOUS:
        tr = sim.run_continuous_trajectory(net, model, state, rng)
    elif args.actions == sim.BINARY_ACTIONS:
        tr = sim.run_binary_trajectory(net, model, state, args.rule, rng)
    else:
        tr = sim.run_mixed_trajectory(net, model, state, rng)
    with open(args.trajectory, "w") as fh:
        fh.write(tr.to_csv())


# experiment -------------------------------------------------------------------

def cmd_experiment(args) -> str:
    specs = []
    for q in parse_grid(args.q):
        try:
            specs.append(ex.ExperimentSpec(q, args.agents, args.mu, args.sigma))
        except ValueError as e:
            raise UsageError(str(e)) from e
    table = ex.accuracy_curves(specs, args.model)
    header = {"model": args.model, "agents": args.agents, "mu": args.mu, "sigma": args.sigma,
              "q": [s.q for s in specs]}
    return table.to_csv(header)


# network ----------------------------------------------------------------------

def _one_network(args, n):
    gens = _generators(args)
    if len(gens) != 1:
        raise UsageError("network commands take a single parameter point")
    gen = gens[0]
    if gen.is_random:
        return gen, nw.sample_network(gen, n, np.random.default_rng(args.seed))
    return gen, nw.build_weighted(gen, n)


def cmd_network(args) -> str:
    if args.action == "paths":
        if not 1 <= args.target <= args.n:
            raise UsageError(f"--target must lie in 1..{args.n}")
        _, net = _one_network(args, args.n)
        b = nw.path_weights(net, args.target).b
        return _csv([f"b_{k + 1}" for k in range(len(b))], [tuple(b)])
    if args.action == "edges":
        _, net = _one_network(args, args.n)
        return nw.to_edge_csv(net)
    horizons = [int(h) for h in parse_grid(args.horizons)]
    gens = _generators(args)
    if gens[0].is_random:
        raise UsageError("influence tables need a deterministic weighted family")
    rows = nw.correct_learning_diagnostic(gens[0], horizons)
    return _csv(["n", "max_influence"], rows)


# parser -----------------------------------------------------------------------

def _add_family_flags(p, families):
    p.add_argument("--family", required=True, choices=families)
    p.add_argument("--q", default="1", help="value, comma list or start:stop:step (default 1)")
    for key in ("qs", "qd", "delta", "d"):
        p.add_argument(f"--{key}", default=None, help="value, comma list or start:stop:step")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="naivenet", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="write CSV here instead of stdout")
    common.add_argument("--manifest", help="write the JSON run manifest here (default: next to --out)")
    sub = parser.add_subparsers(dest="command", required=True)

    pa = sub.add_parser("analytic", parents=[common], help="closed-form mislearning probabilities")
    pa.add_argument("family", choices=["uniform", "two-groups", "decay", "decay-two-groups", "constant-degree"])
    for key, default in (("q", "1"), ("qs", None), ("qd", None), ("delta", None), ("d", None)):
        pa.add_argument(f"--{key}", default=default)
    pa.add_argument("--sigma", default="1")
    pa.add_argument("--tail-tol", type=float, default=1e-12)

    families = ["uniform", "two-groups", "decay", "decay-two-groups", "constant-degree", "er", "two-groups-random"]
    ps = sub.add_parser("simulate", parents=[common], help="Monte Carlo mislearning estimates")
    _add_family_flags(ps, families)
    ps.add_argument("--autarkic", help="n1,n2: alternate n1 naive and n2 autarkic agents")
    ps.add_argument("--signal", choices=["gaussian", "binary", "triangular"], default="gaussian")
    ps.add_argument("--mu", type=float, default=1.0)
    ps.add_argument("--sigma", type=float, default=1.0)
    ps.add_argument("--p", type=float, default=0.75)
    ps.add_argument("--n", type=int, default=150)
    ps.add_argument("--R", type=int, default=100_000)
    ps.add_argument("--seed", type=int, default=0)
    ps.add_argument("--workers", type=int, default=None)
    ps.add_argument("--actions", choices=[sim.CONTINUOUS, sim.BINARY_ACTIONS, sim.MIXED], default=sim.CONTINUOUS)
    ps.add_argument("--rule", choices=[sim.KAPPA, sim.ELL], default=sim.KAPPA)
    ps.add_argument("--target", type=int, default=None)
    ps.add_argument("--trajectory", help="also dump one seeded trajectory as CSV to this path")

    pe = sub.add_parser("experiment", parents=[common], help="per-agent accuracy in the binary-action experiment")
    pe.add_argument("--model", required=True, choices=[ex.NAIVE, ex.RATIONAL_BOUND])
    pe.add_argument("--q", required=True)
    pe.add_argument("--agents", type=int, default=40)
    pe.add_argument("--mu", type=float, default=1.0)
    pe.add_argument("--sigma", type=float, default=2.0)

    pn = sub.add_parser("network", parents=[common], help="path weights and influence")
    pn.add_argument("action", choices=["paths", "influence", "edges"])
    _add_family_flags(pn, families)
    pn.add_argument("--n", type=int, default=10)
    pn.add_argument("--target", type=int, default=None)
    pn.add_argument("--horizons", default="50,100,200")
    pn.add_argument("--seed", type=int, default=0)
    return parser


COMMANDS = {"analytic": cmd_analytic, "simulate": cmd_simulate,
            "experiment": cmd_experiment, "network": cmd_network}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    if args.command == "network" and args.action == "paths" and args.target is None:
        args.target = args.n
    started = time.time()
    try:
        text = COMMANDS[args.command](args)
    except UsageError as e:
        print(f"naivenet: usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except DOMAIN_ERRORS as e:
        print(f"naivenet: domain error: {e}", file=sys.stderr)
        return EXIT_DOMAIN
    except nw.NetworkViolation as e:
        print(f"naivenet: invariant violated: {e}", file=sys.stderr)
        return EXIT_INTERNAL
    except ValueError as e:
        print(f"naivenet: usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as e:  # noqa: BLE001
        print(f"naivenet: internal error: {e!r}", file=sys.stderr)
        return EXIT_INTERNAL
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    manifest_path = args.manifest or (args.out + ".manifest.json" if args.out else None)
    if manifest_path:
        params = {k: v for k, v in vars(args).items() if k not in ("out", "manifest")}
        manifest = {
            "subcommand": args.command,
            "params": params,
            "seed": getattr(args, "seed", None),
            "version": __version__,
            "duration_s": round(time.time() - started, 3),
        }
        with open(manifest_path, "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True, default=str)
    return EXIT_OK


def main_exit():
    sys.exit(main())


if __name__ == "__main__":
    main_exit()
