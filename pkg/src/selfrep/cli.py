"""Command-line front end.

Every report embeds the seed, the full tolerance set and SHA-256 digests of
the inputs, and contains nothing time- or host-dependent, so a rerun with
the same arguments writes byte-identical files.

Exit codes: 0 success, 1 property failure, 2 malformed input, 3 dimension or
backend mismatch.
"""

import argparse
import csv
import hashlib
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import backend as bk
from . import classical as cl
from . import quantum as qm
from .axioms import run_axiom_suite
from .cloning import SearchConfig, clone_search
from .errors import DimensionMismatchError, SelfRepError
from .replication import (
    FAIL,
    BroadcastSetup,
    diag_broadcaster,
    verify_broadcast_inequalities,
    verify_wigner_clone,
)
from .seeding import derive_seed
from .species import SpeciesScenario, species_simulate
from .tolerances import DEFAULT
from .toymodel import (
    ToyStateSpace,
    entangled_fraction,
    entropy_witness,
    separability_search,
)

EXIT_OK, EXIT_PROPERTY, EXIT_INPUT, EXIT_MISMATCH = 0, 1, 2, 3


class InputError(SelfRepError):
    """Unreadable or malformed command-line input."""


def _digest_bytes(data):
    return "sha256:" + hashlib.sha256(data).hexdigest()


def _canonical(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()


class _Inputs:
    """Loads state/channel references and records their digests."""

    def __init__(self):
        self.digests = {}

    def read_json(self, path, label=None):
        p = Path(path)
        try:
            data = p.read_bytes()
        except OSError as exc:
            raise InputError(f"cannot read {path}: {exc.strerror or exc}") from exc
        self.digests[label or str(path)] = _digest_bytes(data)
        try:
            return json.loads(data)
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            raise InputError(f"{path}: invalid JSON ({exc})") from exc

    def object(self, ref, label, base=None):
        """``ref`` is a path (relative to ``base``) or an inline JSON object."""
        if isinstance(ref, str):
            path = Path(ref)
            if base is not None and not path.is_absolute():
                path = base / path
            return bk.from_json(self.read_json(path, label))
        if isinstance(ref, dict):
            self.digests[label] = _digest_bytes(_canonical(ref))
            return bk.from_json(ref)
        raise InputError(f"{label}: expected a file path or an inline object")


def _meta(args, command, inputs, **extra):
    out = {
        "command": command,
        "version": __version__,
        "seed": args.seed_value,
        "tolerances": args.tolerances.as_dict(),
        "inputs": dict(sorted(inputs.digests.items())),
    }
    out.update(extra)
    return out


def _dump(obj):
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def _emit(args, text, suffix=None):
    """Write ``text`` to ``--out`` (with optional suffix before the extension) or stdout."""
    if args.out is None:
        sys.stdout.write(text)
        return
    path = Path(args.out)
    if suffix:
        path = path.with_name(path.stem + suffix + path.suffix)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(text)


def _emit_meta_sidecar(args, meta):
    """CSV outputs carry their provenance in ``<out>.meta.json``."""
    if args.out is not None:
        path = Path(str(args.out) + ".meta.json")
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write(_dump(meta))
    else:
        sys.stdout.write("# " + json.dumps(meta, sort_keys=True) + "\n")


def _csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format(v, ".17g") if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (np.floating, float)):
        v = float(x)
        return v if math.isfinite(v) else None
    return x


# -- subcommands -----------------------------------------------------------


def cmd_overlap(args):
    inputs = _Inputs()
    a = inputs.object(args.state_a, "state_a")
    b = inputs.object(args.state_b, "state_b")
    backend = bk.same_backend(a, b)
    value = bk.overlap(a, b)
    report = _meta(args, "overlap", inputs, backend=backend, overlap=value)
    if args.format == "csv":
        _emit_meta_sidecar(args, report)
        _emit(args, _csv(["backend", "overlap"], [(backend, value)]))
    else:
        _emit(args, _dump(report))
    return EXIT_OK


def cmd_verify_axioms(args):
    inputs = _Inputs()
    channels = [inputs.object(p, f"channel[{i}]") for i, p in enumerate(args.channel)]
    reports = run_axiom_suite(
        backend=args.backend, trials=args.trials, seed=args.seed_value, tol=args.tolerances, channels=channels
    )
    meta = _meta(args, "verify-axioms", inputs, backend=args.backend, trials=args.trials)
    if args.format == "csv":
        rows = [(r.axiom, r.backend, r.trials, r.worst_violation, r.tolerance, r.passed) for r in reports]
        _emit_meta_sidecar(args, meta)
        _emit(args, _csv(["axiom", "backend", "trials", "worst_violation", "tolerance", "passed"], rows))
    else:
        lines = [json.dumps({"record": "meta", **meta})]
        lines += [json.dumps({"record": "axiom", **_jsonable(r.to_json())}) for r in reports]
        _emit(args, "\n".join(lines) + "\n")
    return EXIT_OK if all(r.passed for r in reports) else EXIT_PROPERTY


def cmd_clone_search(args):
    inputs = _Inputs()
    targets = [inputs.object(p, f"target[{i}]") for i, p in enumerate(args.targets)]
    env = inputs.object(args.env, "env") if args.env else None
    cfg = SearchConfig(restarts=args.restarts, max_evals=args.max_evals, quantum=args.quantum)
    result = clone_search(targets, env=env, remainder_dim=args.remainder_dim, config=cfg, seed=args.seed_value)
    report = _meta(args, "clone-search", inputs, config=vars(cfg), **_jsonable(result.to_json()))
    if args.format == "csv":
        _emit_meta_sidecar(args, report)
        _emit(args, _csv(["evaluation", "objective"], [(int(i), float(v)) for i, v in result.trace]))
    else:
        _emit(args, _dump(report))
    return EXIT_OK


def cmd_broadcast_check(args):
    inputs = _Inputs()
    if args.builtin == "diag":
        if args.channel:
            raise InputError("--builtin and --channel are exclusive")
        d = args.dim
        setup = BroadcastSetup.from_channel(diag_broadcaster(d), cl.ProbVec([1.0]), d)
    elif args.channel:
        channel = inputs.object(args.channel, "channel")
        if args.env:
            env = inputs.object(args.env, "env")
        elif bk.backend_of(channel) == "classical":
            env = cl.ProbVec([1.0])
        else:
            env = qm.DensityMatrix([[1.0]])
        d = args.dim or int(round(math.sqrt(channel.out_dim)))
        setup = BroadcastSetup.from_channel(channel, env, d)
    else:
        raise InputError("give --builtin diag or --channel FILE")
    setup2 = None
    if args.env2:
        setup2 = BroadcastSetup.from_channel(setup.channel, inputs.object(args.env2, "env2"), setup.d)
    if args.parents:
        if len(args.parents) != 2:
            raise InputError("--parents takes exactly two state files")
        phi, phi2 = (inputs.object(p, f"parent[{i}]") for i, p in enumerate(args.parents))
    else:
        phi = bk.random_state(setup.backend, setup.d, derive_seed(args.seed_value, "broadcast-parent", 0))
        phi2 = bk.random_state(setup.backend, setup.d, derive_seed(args.seed_value, "broadcast-parent", 1))
    verdict = verify_broadcast_inequalities(setup, phi, phi2, setup2, tol=args.tolerances)
    wigner = verify_wigner_clone(setup, phi, phi2, tol=args.tolerances.clone)
    report = _meta(
        args,
        "broadcast-check",
        inputs,
        builtin=args.builtin,
        dims=setup.dims,
        parents=[phi.to_json(), phi2.to_json()],
        **_jsonable(verdict.to_json()),
        wigner={
            "cloned": list(wigner.cloned),
            "clone_residuals": list(wigner.clone_residuals),
            "dichotomy": wigner.dichotomy,
            "passed": wigner.passed,
        },
    )
    report = _jsonable(report)
    if args.format == "csv":
        _emit_meta_sidecar(args, report)
        rows = [(k, v) for k, v in verdict.checks.items()]
        _emit(args, _csv(["check", "verdict"], rows))
    else:
        _emit(args, _dump(report))
    ok = verdict.passed and wigner.passed and FAIL not in verdict.checks.values()
    return EXIT_OK if ok else EXIT_PROPERTY


def cmd_toy(args):
    inputs = _Inputs()
    space = ToyStateSpace(epsilon=args.epsilon, purity_tol=args.tolerances.purity)
    report = _meta(args, "toy", inputs, space=space.to_json())
    if args.builtin == "diag":
        d = args.dim
        P = cl.JointProb(np.eye(d).ravel() / d, [d, d])
    elif args.state:
        P = inputs.object(args.state, "state")
        report["inputs"] = dict(sorted(inputs.digests.items()))
        if not isinstance(P, cl.JointProb):
            if args.dims is None:
                raise InputError("state has no subsystem structure; pass --dims A B")
            P = cl.JointProb(P.weights, args.dims)
    else:
        P = None
    if P is not None:
        if len(P.dims) != 2:
            raise DimensionMismatchError(f"expected two subsystems, got dims {list(P.dims)}")
        if args.search:
            verdict = separability_search(P, space, k=args.k, seed=args.seed_value, restarts=args.restarts)
        else:
            verdict = entropy_witness(P, space)
        report.update(_jsonable(verdict.to_json()))
        report["certified_separable"] = verdict.certified_separable
    if args.mc_samples:
        dims = args.dims or [2, 2]
        frac = entangled_fraction(dims, space, args.mc_samples, seed=args.seed_value)
        report["monte_carlo"] = {"dims": list(dims), "samples": args.mc_samples, "witness_fraction": frac}
    if P is None and not args.mc_samples:
        raise InputError("nothing to do: give --state, --builtin diag or --mc-samples")
    if args.format == "csv":
        _emit_meta_sidecar(args, report)
        keys = [k for k in ("witness_fired", "entropy", "epsilon", "search_residual", "certified_separable") if k in report]
        _emit(args, _csv(keys, [tuple(report[k] for k in keys)]))
    else:
        _emit(args, _dump(report))
    return EXIT_OK


def _load_scenario(path, inputs):
    cfg = inputs.read_json(path, "config")
    if not isinstance(cfg, dict):
        raise InputError("scenario config must be a JSON object")
    base = Path(path).parent
    try:
        species = [inputs.object(r, f"species[{i}]", base) for i, r in enumerate(cfg["species"])]
        channel = inputs.object(cfg["channel"], "channel", base)
        policy = cfg["env_policy"]
        kind = policy["kind"]
        if kind == "homogeneous":
            envs = [inputs.object(policy["env"], "env", base)]
        elif kind == "map":
            envs = [inputs.object(r, f"env[{i}]", base) for i, r in enumerate(policy["envs"])]
        else:
            raise InputError(f"unknown env_policy kind {kind!r}")
        generations = int(cfg["generations"])
    except KeyError as exc:
        raise InputError(f"scenario config is missing {exc}") from exc
    except TypeError as exc:
        raise InputError(f"malformed scenario config: {exc}") from exc
    return SpeciesScenario(tuple(species), channel, tuple(envs), generations), cfg.get("seed")


def cmd_species(args):
    inputs = _Inputs()
    scenario, cfg_seed = _load_scenario(args.config, inputs)
    if args.seed is None and cfg_seed is not None:
        args.seed_value = int(cfg_seed)
    traj = species_simulate(scenario, seed=args.seed_value)
    meta = _meta(
        args,
        "species",
        inputs,
        generations=scenario.generations,
        species=len(scenario.species),
        homogeneous=scenario.homogeneous,
    )
    if args.format == "csv":
        _emit_meta_sidecar(args, meta)
        _emit(args, traj.overlaps_csv())
        if args.out is not None:
            _emit(args, traj.joint_csv(), suffix="_joint")
    else:
        _emit(args, _dump({**meta, **_jsonable(traj.to_json())}))
    return EXIT_OK


# -- entry point -----------------------------------------------------------


def _tol_override(text):
    name, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected NAME=VALUE, got {text!r}")
    try:
        return name.strip(), float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"tolerance {name!r}: {value!r} is not a number") from None


def _global_flags(parser, suppress):
    """Global flags are accepted before or after the subcommand."""

    def default(value):
        return argparse.SUPPRESS if suppress else value

    parser.add_argument("--seed", type=int, default=default(None), help="master seed (default 0)")
    parser.add_argument("--tol", type=_tol_override, action="append", default=default([]), metavar="NAME=VALUE",
                        help="override one named tolerance; repeatable")
    parser.add_argument("--out", default=default(None), help="output file (default stdout)")
    parser.add_argument("--format", choices=("json", "csv"), default=default("json"))


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)

    parser = argparse.ArgumentParser(prog="selfrep", description="Overlap, replication and toy-model checks.")
    _global_flags(parser, suppress=False)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("overlap", parents=[common], help="overlap of two states")
    p.add_argument("state_a")
    p.add_argument("state_b")
    p.set_defaults(func=cmd_overlap)

    p = sub.add_parser("verify-axioms", parents=[common], help="seeded axiom suite (JSON lines)")
    p.add_argument("--backend", choices=("classical", "quantum", "both"), default="both")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--channel", action="append", default=[], help="extra channel file for A3; repeatable")
    p.set_defaults(func=cmd_verify_axioms)

    p = sub.add_parser("clone-search", parents=[common], help="best approximate cloner of a state set")
    p.add_argument("targets", nargs="+")
    p.add_argument("--env", default=None)
    p.add_argument("--remainder-dim", type=int, default=None)
    p.add_argument("--restarts", type=int, default=SearchConfig.restarts)
    p.add_argument("--max-evals", type=int, default=SearchConfig.max_evals)
    p.add_argument("--quantum", action="store_true", help="allow the qubit search")
    p.set_defaults(func=cmd_clone_search)

    p = sub.add_parser("broadcast-check", parents=[common], help="broadcast overlap inequalities")
    p.add_argument("--builtin", choices=("diag",), default=None)
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--channel", default=None)
    p.add_argument("--env", default=None)
    p.add_argument("--env2", default=None, help="environment for the second parent")
    p.add_argument("--parents", nargs="+", default=None, metavar="STATE")
    p.set_defaults(func=cmd_broadcast_check)

    p = sub.add_parser("toy", parents=[common], help="entropy-floor toy model")
    p.add_argument("--epsilon", type=float, default=math.log(2))
    p.add_argument("--state", default=None, help="joint state file")
    p.add_argument("--builtin", choices=("diag",), default=None, help="P(i,j) = delta_ij / d")
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--dims", type=int, nargs=2, default=None)
    p.add_argument("--search", action="store_true", help="run the decomposition search")
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--restarts", type=int, default=300)
    p.add_argument("--mc-samples", type=int, default=0)
    p.set_defaults(func=cmd_toy)

    p = sub.add_parser("species", parents=[common], help="multi-generation species run")
    p.add_argument("config")
    p.set_defaults(func=cmd_species)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        overrides = dict(args.tol)
        args.tolerances = DEFAULT.override(**overrides) if overrides else DEFAULT
    except KeyError as exc:
        print(f"selfrep: unknown tolerance {exc}", file=sys.stderr)
        return EXIT_INPUT
    args.seed_value = 0 if args.seed is None else args.seed
    if args.command == "broadcast-check" and args.builtin == "diag" and args.dim is None:
        args.dim = 2
    try:
        return args.func(args)
    except DimensionMismatchError as exc:
        print(f"selfrep: dimension/backend mismatch: {exc}", file=sys.stderr)
        return EXIT_MISMATCH
    except (SelfRepError, ValueError) as exc:
        print(f"selfrep: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
