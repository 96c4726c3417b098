"""Command line front end.

Subcommands ``group``, ``covering``, ``metric``, ``norm`` and ``suite``.
Exit codes: 0 pass, 1 criterion failure, 2 usage or configuration error,
3 resource or window error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from ._errors import AlphamodError
from .reports import make_report, write_report, write_text

THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")


class UsageError(Exception):
    pass


def _floats(text, name):
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"--{name} expects comma separated numbers, got {text!r}") from None


def _ints(text, name):
    vals = _floats(text, name)
    if any(v != int(v) for v in vals):
        raise UsageError(f"--{name} expects integers, got {text!r}")
    return [int(v) for v in vals]


# config ----------------------------------------------------------------------

def _group(args):
    from .groups import builtin, group_from_json
    if args.group_file and args.builtin:
        raise UsageError("give either --builtin or --group-file, not both")
    if args.group_file:
        path = Path(args.group_file)
        if not path.exists():
            raise UsageError(f"group file {path} does not exist")
        try:
            return group_from_json(path.read_text())
        except json.JSONDecodeError as e:
            raise UsageError(f"cannot parse {path}: {e}") from None
    return builtin(args.builtin or "heisenberg(1)")


def _norm(args, G):
    from .quasinorm import QuasiNorm
    return QuasiNorm(G, args.norm)


def _lattice(args, G):
    from .lattice import default_lattice, make_lattice
    if args.lattice:
        return make_lattice(G, _floats(args.lattice, "lattice"))
    return default_lattice(G)


def _covering(args, G, nm):
    from . import covering as C
    if args.family == "besov":
        return C.build_besov(G, nm, args.m_max)
    N = _lattice(args, G)
    alpha = args.alpha
    if args.radius is None:
        r = C.covering_threshold(G, N, nm, alpha, window=args.window, seed=args.seed) * 1.05
    else:
        r = args.radius
    if args.family == "uniform" or alpha == 0:
        return C.build_uniform(G, N, nm, r, window=args.window, seed=args.seed)
    return C.build_alpha(G, N, nm, alpha, r, window=args.window, seed=args.seed)


def _grid(args, n):
    from .grid import GridSpec
    L = _floats(args.grid_l, "grid-l")
    M = _ints(args.grid_m, "grid-m")
    if len(L) == 1:
        L = L * n
    if len(M) == 1:
        M = M * n
    if len(L) != n or len(M) != n:
        raise UsageError(f"grid needs 1 or {n} entries per flag")
    return GridSpec(tuple(L), tuple(M))


def _config(args):
    keep = ("builtin", "group_file", "lattice", "norm", "family", "alpha", "radius", "window",
            "m_max", "grid_l", "grid_m", "p", "q", "s", "r1")
    return {k: getattr(args, k) for k in keep if hasattr(args, k)}


def _out(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# commands ----------------------------------------------------------------------

def cmd_group(args):
    from .groups import axiom_residuals
    G = _group(args)
    res = axiom_residuals(G, args.samples, args.seed)
    ok = max(res["associativity"], res["identity"], res["inverse"]) <= 1e-9
    body = {
        "label": G.label, "dimension": G.dim, "Q": G.homogeneous_dim, "rank": G.rank,
        "step": G.step, "growth_vector": [int(v) for v in np.cumsum(G.layer_dims)],
        "residuals": res, "associative": ok, "passed": ok,
    }
    print(f"group {G.label or '(custom)'}: Q={G.homogeneous_dim} rank={G.rank} step={G.step} "
          f"growth vector={body['growth_vector']}")
    print(f"associativity residual {res['associativity']:.3e}, identity {res['identity']:.3e}, "
          f"inverse {res['inverse']:.3e}")
    print("PASS" if ok else "FAIL: the law is not associative to 1e-9")
    if args.out:
        write_report(_out(args) / "group.json", make_report("group", _config(args), body, args.seed))
    return 0 if ok else 1


def cmd_covering(args):
    from . import covering as C
    G = _group(args)
    nm = _norm(args, G)
    cov = _covering(args, G, nm)
    adm = C.admissibility_estimate(cov)
    size = C.verify_size_condition(cov, seed=args.seed)
    K = C.verify_ratio_condition(cov, seed=args.seed)
    if cov.family == "besov":
        weight = C.Dyadic(args.s)
    else:
        weight = C.AlphaPoly(args.s, cov.params.get("alpha", 0.0))
    moderate = C.moderate_weight_check(cov, weight)
    body = {
        "family": cov.family, "params": cov.params, "pieces": len(cov),
        "n_q": adm.n_q, "n_q_label": adm.label, "unknown_pairs": adm.unknown_pairs,
        "interior_pieces": adm.interior_pieces, "size_condition": size, "ratio_K": K,
        "moderate_weight_ratio": moderate,
    }
    print(f"{cov.family} covering: {len(cov)} pieces, n_q={adm.n_q} ({adm.label}), K={K:g}")
    if args.out:
        out = _out(args)
        write_report(out / "covering.json", make_report("covering", _config(args), body, args.seed))
        write_text(out / "pieces.json", cov.to_json() + "\n")
        write_text(out / "verdicts.csv", cov.verdict_csv())
    return 0


def cmd_metric(args):
    from .metric import build_graph, chain_distance
    G = _group(args)
    nm = _norm(args, G)
    cov = _covering(args, G, nm)
    graph = build_graph(cov)
    body = {"family": cov.family, "pieces": len(cov)}
    if args.witnesses:
        rows = []
        for m in range(1, args.witnesses + 1):
            p = np.zeros(G.dim)
            q = np.zeros(G.dim)
            p[0] = 2.0 ** m
            q[-1] = 2.0 ** (2 * m + 1)
            d = chain_distance(graph, p, q)
            rows.append({"m": m, "p": p, "q": q, "distance": d})
            print(f"m={m:2d} d(p, q) = {d}")
        body["witnesses"] = rows
    if args.x is not None:
        if args.y is None:
            raise UsageError("--x needs --y")
        x = np.array(_floats(args.x, "x"))
        y = np.array(_floats(args.y, "y"))
        d = chain_distance(graph, x, y)
        print(f"d(x, y) = {d}")
        body["distance"] = {"x": x, "y": y, "d": d}
    if args.out:
        out = _out(args)
        write_report(out / "metric.json", make_report("metric", _config(args), body, args.seed))
        write_text(out / "adjacency.csv", graph.to_csv())
    return 0


def _load_function(stem, grid):
    from .grid import GridFunction, GridSpec
    stem = Path(stem)
    side = json.loads(stem.with_suffix(".json").read_text())
    g = GridSpec(tuple(side["grid"]["L"]), tuple(side["grid"]["M"]))
    if g != grid:
        raise UsageError(f"input function grid {g.to_dict()} differs from --grid-l/--grid-m")
    return GridFunction(g, np.load(stem.with_suffix(".npy")), side.get("domain", "space"))


def cmd_norm(args):
    from .bapu import build_alpha_bapu, build_besov_bapu
    from .modnorm import NormParams, decomposition_norm, gaussian_packet
    G = _group(args)
    nm = _norm(args, G)
    cov = _covering(args, G, nm)
    grid = _grid(args, G.dim)
    if cov.family == "besov":
        b = build_besov_bapu(cov, grid)
        alpha = 1.0
    else:
        r = cov.params.get("R", cov.params.get("r"))
        b = build_alpha_bapu(cov, grid, args.r1 if args.r1 else 0.97 * r)
        alpha = cov.params.get("alpha", 0.0)
    if args.input:
        f = _load_function(args.input, grid)
    else:
        w0 = _floats(args.omega0, "omega0") if args.omega0 else None
        f = gaussian_packet(grid, w0, args.sigma, domain="frequency")
    params = NormParams(args.p, args.q, args.s, alpha)
    nb = decomposition_norm(f, b, params)
    print(f"norm = {nb.total:.12g} over {len(nb.indices)} members "
          f"(tail {nb.tail:.3e}, spectral leak {nb.leak:.3e})")
    if args.out:
        out = _out(args)
        write_report(out / "norm.json",
                     make_report("norm", _config(args), nb.summary(), args.seed))
        write_text(out / "norm.csv", nb.to_csv())
    return 0


def cmd_suite(args):
    from .acceptance import SUITES, run_suite
    name = args.suite
    if name not in SUITES:
        raise UsageError(f"unknown suite {name!r}; known: {', '.join(SUITES)}")
    if name == "engel-witness":
        _, rep = run_suite(name, args.seed)
        p = rep["paper_law"]
        print(f"paper law blow-up slope {p['slope']:.3f} (needs >= 1.8)")
        print(f"full BCH second difference at n=1: {rep['full_bch']['values'][0]:.6g}")
        print(f"abelian control slope {rep['abelian_control']['slope']:.3g}")
        ok = rep["passed"]
        print("PASS" if ok else "FAIL")
    else:
        results, rep = run_suite(name, args.seed, progress=lambda r: print(r.line(), flush=True))
        ok = all(r.ok for r in results)
        npass = sum(r.ok for r in results)
        print(f"{npass}/{len(results)} criteria pass")
    if args.out:
        write_report(_out(args) / f"suite-{name}.json", rep)
    return 0 if ok else 1


# parser ----------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="alphamod",
                                description="Coverings, partitions and decomposition norms "
                                            "on stratified Lie groups.")
    p.add_argument("--threads", type=int, default=None,
                   help="BLAS/OpenMP thread count (results do not depend on it)")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, covering=False, grid=False):
        sp.add_argument("--builtin", help="builtin group, e.g. heisenberg(1), engel_bch")
        sp.add_argument("--group-file", help="JSON group definition")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", help="output directory for reports")
        if covering:
            sp.add_argument("--norm", default="homogeneous2",
                            choices=("homogeneous2", "cygan_koranyi", "euclidean"))
            sp.add_argument("--lattice", help="comma separated lattice scales")
            sp.add_argument("--family", default="alpha", choices=("uniform", "alpha", "besov"))
            sp.add_argument("--alpha", type=float, default=0.0)
            sp.add_argument("--radius", type=float, default=None,
                            help="piece radius (default 1.05 times the sampled threshold)")
            sp.add_argument("--window", type=float, default=4.0)
            sp.add_argument("--m-max", type=int, default=8)
            sp.add_argument("--s", type=float, default=0.0)
        if grid:
            sp.add_argument("--grid-l", default="4,4,2")
            sp.add_argument("--grid-m", default="64")
            sp.add_argument("--p", type=float, default=2.0)
            sp.add_argument("--q", type=float, default=2.0)
            sp.add_argument("--r1", type=float, default=None)

    g = sub.add_parser("group", help="validate a group and run the axiom checks")
    common(g)
    g.add_argument("--samples", type=int, default=1000)
    g.set_defaults(func=cmd_group)

    c = sub.add_parser("covering", help="build a covering and report its constants")
    common(c, covering=True)
    c.set_defaults(func=cmd_covering)

    m = sub.add_parser("metric", help="chain distances of a covering")
    common(m, covering=True)
    m.add_argument("--x", help="comma separated point")
    m.add_argument("--y", help="comma separated point")
    m.add_argument("--witnesses", type=int, default=0,
                   help="distances of (2^m, 0, .., 0) and (0, .., 2^(2m+1)) for m = 1..N")
    m.set_defaults(func=cmd_metric)

    n = sub.add_parser("norm", help="decomposition norm of a function")
    common(n, covering=True, grid=True)
    n.add_argument("--input", help="function stem (.npy values plus .json grid sidecar)")
    n.add_argument("--omega0", help="center of the default Gaussian packet")
    n.add_argument("--sigma", type=float, default=0.7)
    n.set_defaults(func=cmd_norm)

    s = sub.add_parser("suite", help="run an acceptance suite")
    s.add_argument("--suite", default="acceptance-core")
    s.add_argument("name", nargs="?", help="suite name (alternative to --suite)")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", help="output directory for the suite report")
    s.set_defaults(func=cmd_suite)
    return p


def _pin_threads(n):
    """Re-execute with thread variables set, since BLAS reads them at load time."""
    want = str(n)
    if all(os.environ.get(v) == want for v in THREAD_VARS):
        return
    env = dict(os.environ)
    for v in THREAD_VARS:
        env[v] = want
    os.execve(sys.executable, [sys.executable, "-m", "alphamod", *sys.argv[1:]], env)


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0) and 2
    if args.threads is not None:
        if args.threads < 1:
            print("error: --threads must be positive", file=sys.stderr)
            return 2
        if argv is None:
            _pin_threads(args.threads)
    if getattr(args, "name", None):
        args.suite = args.name
    try:
        return args.func(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except AlphamodError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return e.exit_code
    except MemoryError:
        print("error: out of memory", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
