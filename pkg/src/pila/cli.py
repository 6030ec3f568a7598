"""Command-line interface: ``pila <subcommand> ...``.

Exit codes: 0 success, 2 malformed input, 3 argument out of domain,
4 numerical guard tripped or cutoff too small.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor

from . import __version__
from .channels import apply_pila
from .cloning import classical_baseline_fidelity, clone_report
from .entanglement import (
    amplified_pair,
    correlation_vs_entanglement_report,
    lowest_occupation,
    pt_report,
)
from .errors import CutoffTooSmall, InvalidArgument, NumericalGuardError
from .fock import FockState, make_fock, mean_photon, parity
from .io import ParseError, auto_input_cutoff, load_config, load_state, parse_state_spec, save_state
from .phase_space import GridSpec, default_grid, nonclassical_depth, quasi_prob
from .witnesses import critical_gain_scan

EXIT_OK, EXIT_PARSE, EXIT_DOMAIN, EXIT_NUMERIC = 0, 2, 3, 4
TESTS = ("ppt", "witness", "subspace", "correlation")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_PARSE)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.17g}"
    if isinstance(v, complex):
        return f"{v.real:.17g}{v.imag:+.17g}i"
    return str(v)


def _jsonable(v):
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def _header(cfg, cutoffs) -> str:
    return f"pila {__version__} config={cfg.digest()} cutoffs={cutoffs}"


def _emit(columns, rows, cfg, cutoffs, out) -> None:
    if cfg.output_format == "json":
        doc = {
            "version": __version__,
            "config": cfg.digest(),
            "cutoffs": cutoffs,
            "rows": [{c: _jsonable(r.get(c)) for c in columns} for r in rows],
        }
        out.write(json.dumps(doc) + "\n")
        return
    out.write(f"# {_header(cfg, cutoffs)}\n")
    out.write(",".join(columns) + "\n")
    for r in rows:
        out.write(",".join(_fmt(r.get(c)) for c in columns) + "\n")


def _parse_list(text, conv, what):
    items = []
    for part in text.split(","):
        part = part.strip()
        if "-" in part and conv is int:
            lo, _, hi = part.partition("-")
            try:
                items.extend(range(int(lo), int(hi) + 1))
            except ValueError:
                raise ParseError(text, text.find(part), f"a {what} range like 2-6") from None
            continue
        try:
            items.append(conv(part))
        except ValueError:
            raise ParseError(text, text.find(part) if part else 0, f"a {what}") from None
    return items


def _map(fn, items, jobs):
    if jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _input_state(args, cfg) -> FockState:
    if getattr(args, "state_file", None):
        return load_state(args.state_file)
    spec = parse_state_spec(args.state)
    cutoff = cfg.cutoff if cfg.cutoff is not None else auto_input_cutoff(spec)
    return spec.build(cutoff)


def _grid(state, s_ord, cfg):
    if cfg.grid_extent is None:
        return default_grid(state, s_ord, cfg.grid_points)
    return GridSpec.square(cfg.grid_extent, cfg.grid_points)


# subcommands ---------------------------------------------------------------------


def cmd_amplify(args, cfg, out):
    s = _input_state(args, cfg)
    amp = apply_pila(s, args.gain, out_cutoff=args.out_cutoff, deficit_bound=cfg.deficit_bound)
    if args.output:
        save_state(amp, args.output)
    row = {
        "gain": float(args.gain),
        "cutoff": amp.cutoff,
        "mean_photon": mean_photon(amp),
        "parity": parity(amp),
        "trace_deficit": amp.trace_deficit,
    }
    _emit(list(row), [row], cfg, [amp.cutoff], out)


def _scan_one(job):
    s, n, rng, tol = job
    return critical_gain_scan(s, n, rng, tol)


def cmd_critical_gain(args, cfg, out):
    s = _input_state(args, cfg)
    orders = _parse_list(args.orders, int, "integer order")
    rng = (args.g_min, args.g_max)
    results = _map(_scan_one, [(s, n, rng, cfg.tol) for n in orders], cfg.parallelism)
    rows = [
        {"order": r.order, "G_c": r.G_c, "bracket_lo": r.bracket[0], "bracket_hi": r.bracket[1], "status": r.status}
        for r in results
    ]
    _emit(["order", "G_c", "bracket_lo", "bracket_hi", "status"], rows, cfg, [s.cutoff], out)


def cmd_clone(args, cfg, out):
    s = _input_state(args, cfg)
    counts = _parse_list(args.clones, int, "integer clone count")
    baseline = classical_baseline_fidelity(s)
    rows = []
    for G in counts:
        rep = clone_report(s, G, classical=baseline)
        rows.append({"G": rep.clones, "fidelity": rep.fidelity_vs_input, "classical_fidelity": rep.classical_fidelity, "s_effective": rep.s_effective})
    _emit(["G", "fidelity", "classical_fidelity", "s_effective"], rows, cfg, [s.cutoff], out)


def _entangle_one(job):
    s, theta, G, tests, cutoff = job
    row = {"G": float(G)}
    pair = amplified_pair(s, theta, G, cutoff=cutoff)
    N = max(lowest_occupation(s), 1)
    rep = pt_report(pair, N, G if N == 1 else None)
    if "ppt" in tests:
        row["min_pt_eigenvalue"] = rep.min_eigenvalue
        row["negativity"] = rep.negativity
    if "subspace" in tests:
        row["subspace_det"] = rep.subspace_det
    if "witness" in tests:
        row["witness_value"] = rep.witness_value
    if "correlation" in tests:
        corr = correlation_vs_entanglement_report(s, theta, G, cutoff=cutoff)
        row["local_p_min_1"], row["local_p_min_2"] = corr.local_p_min
        row["correlation_only"] = corr.correlation_only
    return row, list(pair.cutoffs)


def cmd_entangle(args, cfg, out):
    s = _input_state(args, cfg)
    gains = _parse_list(args.gains, float, "gain")
    tests = _parse_list(args.tests, str, "test name")
    for t in tests:
        if t not in TESTS:
            raise ParseError(args.tests, args.tests.find(t), f"one of {', '.join(TESTS)}")
    for G in gains:
        if G < 1:
            raise InvalidArgument(f"gain must be >= 1, got {G!r}")
    cutoff = args.pair_cutoff
    results = _map(_entangle_one, [(s, args.theta, G, tests, cutoff) for G in gains], cfg.parallelism)
    columns = ["G"]
    if "ppt" in tests:
        columns += ["min_pt_eigenvalue", "negativity"]
    if "subspace" in tests:
        columns.append("subspace_det")
    if "witness" in tests:
        columns.append("witness_value")
    if "correlation" in tests:
        columns += ["local_p_min_1", "local_p_min_2", "correlation_only"]
    rows = [r for r, _ in results]
    cutoffs = sorted({c for _, cs in results for c in cs})
    _emit(columns, rows, cfg, cutoffs, out)


def _maybe_amplify(s, args, cfg):
    if args.gain is not None and args.gain != 1:
        return apply_pila(s, args.gain, deficit_bound=cfg.deficit_bound)
    return s


def cmd_phase_space(args, cfg, out):
    s = _maybe_amplify(_input_state(args, cfg), args, cfg)
    grid = quasi_prob(s, _grid(s, args.s, cfg), args.s)
    vmin, loc = grid.minimum()
    summary = f"minimum {vmin:.17g} at x={loc.real:.17g} y={loc.imag:.17g}"
    if cfg.output_format == "json":
        doc = {
            "version": __version__,
            "config": cfg.digest(),
            "cutoffs": [s.cutoff],
            "s": args.s,
            "x": grid.x.tolist(),
            "y": grid.y.tolist(),
            "values": grid.values.real.tolist(),
            "minimum": {"value": vmin, "x": loc.real, "y": loc.imag},
        }
        out.write(json.dumps(doc) + "\n")
    else:
        grid.to_csv(out, _header(cfg, [s.cutoff]))
    print(summary, file=sys.stderr)


def cmd_depth(args, cfg, out):
    s = _maybe_amplify(_input_state(args, cfg), args, cfg)
    est = nonclassical_depth(s, tol=args.depth_tol)
    cert = est.certificate
    row = {
        "tau_lower": est.tau_lower,
        "tau_upper": est.tau_upper,
        "conclusive": est.conclusive,
        "method": est.method,
        "certificate_x": None if cert is None else cert.real,
        "certificate_y": None if cert is None else cert.imag,
    }
    _emit(list(row), [row], cfg, [s.cutoff], out)


# argument parsing ----------------------------------------------------------------


def _add_common(p, state=True):
    if state:
        src = p.add_mutually_exclusive_group(required=True)
        src.add_argument("--state", help="state spec, e.g. fock:1, coherent:1+0.5i, cat:2:odd, squeezed:0.5, thermal:0.3")
        src.add_argument("--state-file", help="JSON state written by 'pila amplify --output'")
    p.add_argument("--config", help="flat key=value configuration file")
    p.add_argument("--cutoff", type=int, help="input Fock cutoff (default: automatic)")
    p.add_argument("--deficit-bound", type=float)
    p.add_argument("--grid-points", type=int)
    p.add_argument("--grid-extent", type=float)
    p.add_argument("--tol", type=float)
    p.add_argument("--format", dest="output_format", choices=("csv", "json"))
    p.add_argument("--jobs", dest="parallelism", type=int)
    p.add_argument("-o", "--out", help="write the table here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pila", description="Amplification of nonclassical light in the Fock basis.")
    parser.add_argument("--version", action="version", version=f"pila {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("amplify", help="amplify a state and summarize the output")
    _add_common(p)
    p.add_argument("--gain", type=float, required=True)
    p.add_argument("--out-cutoff", type=int)
    p.add_argument("--output", help="write the amplified state as JSON")
    p.set_defaults(func=cmd_amplify)

    p = sub.add_parser("critical-gain", help="gains where moment determinants change sign")
    _add_common(p)
    p.add_argument("--orders", default="2-8", help="comma list or range, e.g. 2,3 or 2-8")
    p.add_argument("--g-min", type=float, default=1.5)
    p.add_argument("--g-max", type=float, default=50.0)
    p.set_defaults(func=cmd_critical_gain)

    p = sub.add_parser("clone", help="single-clone fidelity for several clone numbers")
    _add_common(p)
    p.add_argument("--clones", required=True, help="comma list or range of clone numbers")
    p.set_defaults(func=cmd_clone)

    p = sub.add_parser("entangle", help="entanglement of an amplified beam-splitter pair")
    _add_common(p, state=False)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", dest="state", help="state spec mixed with vacuum")
    src.add_argument("--state-file")
    p.add_argument("--theta", type=float, default=math.pi / 4)
    p.add_argument("--gains", default="1,2,5,10")
    p.add_argument("--tests", default="ppt,subspace,witness")
    p.add_argument("--pair-cutoff", type=int, help="per-mode cutoff of the amplified pair")
    p.set_defaults(func=cmd_entangle)

    p = sub.add_parser("phase-space", help="s-ordered quasiprobability on a grid")
    _add_common(p)
    p.add_argument("--s", type=float, default=0.0, help="ordering parameter in [-1, 1]")
    p.add_argument("--gain", type=float, help="amplify first")
    p.set_defaults(func=cmd_phase_space)

    p = sub.add_parser("depth", help="bracket the nonclassical depth")
    _add_common(p)
    p.add_argument("--gain", type=float, help="amplify first")
    p.add_argument("--depth-tol", type=float, default=1e-4)
    p.set_defaults(func=cmd_depth)
    return parser


_CONFIG_KEYS = ("cutoff", "deficit_bound", "grid_points", "grid_extent", "tol", "output_format", "parallelism")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = load_config(args.config, {k: getattr(args, k, None) for k in _CONFIG_KEYS})
        out = open(args.out, "w") if args.out else sys.stdout
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("default")
                args.func(args, cfg, out)
        finally:
            if args.out:
                out.close()
    except ParseError as exc:
        print(f"pila: parse error {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (CutoffTooSmall, NumericalGuardError) as exc:
        print(f"pila: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except InvalidArgument as exc:
        print(f"pila: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except OSError as exc:
        print(f"pila: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
