"""Command-line driver: ``semsub {solve,sweep,ablate,synth,metrics,edit}``.

Settings come from built-in defaults, then an optional flat ``key=value``
file given by ``--config``, then command-line flags. Relative paths inside a
config file resolve against the file's own directory, so a synth manifest can
be fed straight back to ``solve``.

Exit status is 0 on success, 2 for input, shape or usage errors and 3 for
numerical failures.
"""
import argparse
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Optional, Tuple

import numpy as np

from . import io
from .boundary import EditRequest, apply_edit, controllability_check, default_labels, normalize_boundaries
from .errors import ConvergenceError, DivergenceError
from .metrics import EmbeddingPair, identity_score
from .solver import INIT_MODES, VARIANTS, SolverConfig, init_state, solve_variant
from .synth import RESPONSE_SPREAD, SCORER_NOISE, LinearScorer, PlantedModel, edit_correlation, generate

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3

DEFAULT_ALPHAS = (0.1, 0.2, 0.5, 1.0, 2.0, 3.0, 5.0)
DEFAULT_LAMBDAS = (1.0, 2.0, 4.0, 5.0)
DEFAULT_EDIT_BETAS = (-0.3, -0.2, 0.2, 0.3)
ABLATION_VARIANTS = ("full", "no_boundary", "no_nonneg", "no_orthogonality")
# entries of F at or below this count as zeros in the ablation table
SPARSITY_TOL = 1e-6


class UsageError(ValueError):
    """Bad or missing settings; reported with exit status 2."""


def _floats(text):
    return tuple(float(tok) for tok in str(text).split(",") if tok.strip())


def _flag(text):
    value = str(text).strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _path(text):
    return Path(text)


@dataclass(frozen=True)
class RunConfig:
    """Every setting any subcommand reads; unset paths are ``None``."""

    alpha: float = 0.5
    lam: float = 1.0
    iters: int = 30
    tol: float = 1e-6
    k: Optional[int] = None
    init: str = "svd"
    seed: int = 0
    variant: str = "full"
    beta: Optional[Tuple[float, ...]] = None
    format: Optional[str] = None
    alphas: Tuple[float, ...] = DEFAULT_ALPHAS
    lambdas: Tuple[float, ...] = DEFAULT_LAMBDAS
    no_boundary: bool = False
    m: int = 512
    n: int = 10000
    rho: float = 0.0
    noise: float = 0.0
    scorer_noise: float = SCORER_NOISE
    index: int = 0
    latents: Optional[Path] = None
    boundaries: Optional[Path] = None
    weights: Optional[Path] = None
    scorers: Optional[Path] = None
    vector: Optional[Path] = None
    truth: Optional[Path] = None
    embeddings_ori: Optional[Path] = None
    embeddings_edit: Optional[Path] = None
    out: Optional[Path] = None
    trace: Optional[Path] = None
    p_out: Optional[Path] = None
    f_out: Optional[Path] = None
    out_dir: Optional[Path] = None
    distances: Optional[Path] = None
    ids_out: Optional[Path] = None

    def solver_config(self, variant=None):
        return SolverConfig(
            alpha=self.alpha, lam=self.lam, max_iters=self.iters, rel_tol=self.tol,
            init_mode=self.init, seed=self.seed, variant=variant or self.variant,
        )


# config-file / flag key -> (dataclass field, parser)
_KEYS = {
    "alpha": ("alpha", float), "lambda": ("lam", float), "iters": ("iters", int),
    "tol": ("tol", float), "k": ("k", int), "init": ("init", str), "seed": ("seed", int),
    "variant": ("variant", str), "beta": ("beta", _floats), "format": ("format", str),
    "alphas": ("alphas", _floats), "lambdas": ("lambdas", _floats),
    "no_boundary": ("no_boundary", _flag), "m": ("m", int), "n": ("n", int),
    "rho": ("rho", float), "noise": ("noise", float), "index": ("index", int),
    "scorer_noise": ("scorer_noise", float),
}
_PATH_FIELDS = tuple(f.name for f in fields(RunConfig) if f.type == Optional[Path])
_KEYS.update({name: (name, _path) for name in _PATH_FIELDS})


def _parse_pairs(pairs, base_dir=None, origin="flags"):
    out = {}
    for key, raw in pairs.items():
        if key not in _KEYS:
            raise UsageError(f"{origin}: unknown key {key!r}")
        name, parse = _KEYS[key]
        try:
            value = parse(raw)
        except ValueError as exc:
            raise UsageError(f"{origin}: bad value for {key!r}: {exc}") from None
        if parse is _path and base_dir is not None and not value.is_absolute():
            value = base_dir / value
        out[name] = value
    return out


def load_config(config_path=None, flag_pairs=None):
    """Defaults, overridden by the config file, overridden by flags."""
    settings = {}
    if config_path is not None:
        config_path = Path(config_path)
        try:
            text = config_path.read_text()
        except OSError as exc:
            raise UsageError(f"{config_path}: cannot read config: {exc.strerror}") from None
        try:
            pairs = io.parse_key_values(text, str(config_path))
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        settings.update(_parse_pairs(pairs, config_path.parent, str(config_path)))
    settings.update(_parse_pairs(flag_pairs or {}))
    cfg = RunConfig(**settings)
    _validate(cfg)
    return cfg


def _validate(cfg):
    if cfg.init not in INIT_MODES:
        raise UsageError(f"--init must be one of {INIT_MODES}, got {cfg.init!r}")
    if cfg.variant not in VARIANTS:
        raise UsageError(f"--variant must be one of {VARIANTS}, got {cfg.variant!r}")
    if cfg.format is not None and cfg.format not in io.FORMATS:
        raise UsageError(f"--format must be one of {io.FORMATS}, got {cfg.format!r}")
    if cfg.iters < 1 or cfg.tol < 0 or cfg.alpha < 0 or cfg.lam < 0:
        raise UsageError("iters must be positive; tol, alpha and lambda non-negative")
    if not 0 <= cfg.seed < 2**64:
        raise UsageError("seed must fit in 64 unsigned bits")
    if cfg.scorer_noise < 0:
        raise UsageError("scorer noise must be non-negative")


def _require(cfg, *names):
    """Check required inputs exist before any compute starts."""
    for name in names:
        path = getattr(cfg, name)
        if path is None:
            raise UsageError(f"missing required setting --{name.replace('_', '-')}")
        if not path.is_file():
            raise UsageError(f"{path}: no such file")


def _check_outputs(*paths):
    for path in paths:
        if path is not None and not path.parent.is_dir():
            raise UsageError(f"{path}: output directory does not exist")


def _need_out(cfg, name="out"):
    path = getattr(cfg, name)
    if path is None:
        raise UsageError(f"missing required setting --{name.replace('_', '-')}")
    return path


def _worker_count(jobs):
    raw = os.environ.get("SEMSUB_THREADS")
    cap = os.cpu_count() or 1
    if raw is not None:
        try:
            cap = int(raw)
        except ValueError:
            raise UsageError(f"SEMSUB_THREADS must be an integer, got {raw!r}") from None
        if cap < 1:
            raise UsageError("SEMSUB_THREADS must be at least 1")
    return max(1, min(cap, jobs))


def _fmt(x):
    return repr(float(x))


def _single_beta(cfg):
    betas = cfg.beta if cfg.beta is not None else (0.3,)
    if len(betas) != 1:
        raise UsageError("this command takes a single --beta value")
    if betas[0] == 0:
        raise UsageError("--beta must be non-zero")
    return betas[0]


def _load_problem(cfg):
    """Latents and boundary matrix, with shapes checked against each other and ``k``."""
    if cfg.no_boundary:
        _require(cfg, "latents")
        z = io.read_matrix(cfg.latents)
        if cfg.k is None:
            raise UsageError("--no-boundary needs --k")
        return z, np.zeros((z.shape[0], cfg.k))
    _require(cfg, "latents", "boundaries")
    z = io.read_matrix(cfg.latents)
    s = normalize_boundaries(io.read_matrix(cfg.boundaries)).s
    if s.shape[0] != z.shape[0]:
        raise UsageError(f"boundaries have {s.shape[0]} rows, latents have {z.shape[0]}")
    if cfg.k is not None and cfg.k != s.shape[1]:
        raise UsageError(f"--k {cfg.k} disagrees with {s.shape[1]} boundary columns")
    return z, s


def _load_scorers(cfg, s):
    """Scorer file rows are ``[weights..., bias]``; defaults to the boundary normals."""
    if cfg.scorers is None:
        return LinearScorer.from_boundaries(normalize_boundaries(s))
    raw = io.read_matrix(cfg.scorers)
    if raw.shape[1] < 2:
        raise UsageError(f"{cfg.scorers}: scorer rows need weights and a bias")
    return LinearScorer(raw[:, :-1], raw[:, -1], default_labels(raw.shape[0]))


def _scorer_comment(cfg, beta):
    return (f"# scorer_noise={cfg.scorer_noise!r},response_spread={RESPONSE_SPREAD!r},"
            f"beta={beta!r},scorers=linear stand-in\n")


def write_trace(path, trace):
    lines = ["iter,objective,ortho_residual,min_f,rel_drop\n"]
    for rec in trace:
        lines.append(f"{rec.iteration},{_fmt(rec.objective)},{_fmt(rec.ortho_residual)},"
                     f"{_fmt(rec.min_f)},{_fmt(rec.rel_drop)}\n")
    Path(path).write_text("".join(lines))


def cmd_solve(cfg):
    """Learn W from latents and boundaries; optionally write P, F and the trace."""
    out = _need_out(cfg)
    _check_outputs(out, cfg.trace, cfg.p_out, cfg.f_out)
    z, s = _load_problem(cfg)
    scfg = cfg.solver_config()
    if cfg.no_boundary:
        scfg = replace(scfg, lam=0.0)
    result = solve_variant(z, s, scfg)
    for warning in result.trace.warnings:
        print(f"semsub: warning: {warning}", file=sys.stderr)
    io.write_matrix(out, result.state.w, cfg.format)
    if cfg.p_out is not None:
        io.write_matrix(cfg.p_out, result.state.p, cfg.format)
    if cfg.f_out is not None:
        io.write_matrix(cfg.f_out, result.state.f, cfg.format)
    if cfg.trace is not None:
        write_trace(cfg.trace, result.trace)
    final = result.trace.records[-1].objective
    print(f"iterations={result.iterations_run} converged={int(result.converged)} final_J={final!r}")
    return EXIT_OK


def _sweep_cell(z, s, scorers, cfg, beta, initial, alpha, lam):
    try:
        scfg = replace(cfg.solver_config("full"), alpha=alpha, lam=lam)
        result = solve_variant(z, s, scfg, initial=initial)
        report = edit_correlation(z, result.state.w, scorers, beta=beta,
                                  noise=cfg.scorer_noise, seed=cfg.seed)
        return (alpha, lam, result.trace.records[-1].objective, report.overall_avg,
                result.iterations_run, "ok")
    except (DivergenceError, ConvergenceError, ValueError) as exc:
        return (alpha, lam, math.nan, math.nan, 0, type(exc).__name__)


def cmd_sweep(cfg):
    """Run the full method over an (alpha, lambda) grid and tabulate the results."""
    out = _need_out(cfg)
    _check_outputs(out)
    z, s = _load_problem(cfg)
    scorers = _load_scorers(cfg, s)
    beta = _single_beta(cfg)
    cells = [(a, l) for a in cfg.alphas for l in cfg.lambdas]
    if not cells:
        raise UsageError("empty alpha/lambda grid")
    workers = _worker_count(len(cells))
    # the starting point does not depend on alpha or lambda; compute it once
    initial = init_state(z, s, cfg.solver_config("full"))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        rows = list(pool.map(lambda c: _sweep_cell(z, s, scorers, cfg, beta, initial, *c), cells))
    rows.sort(key=lambda r: (r[0], r[1]))
    lines = [_scorer_comment(cfg, beta), "alpha,lambda,final_J,avg_corr,iterations_run,status\n"]
    for a, l, j, corr, its, status in rows:
        lines.append(f"{_fmt(a)},{_fmt(l)},{_fmt(j)},{_fmt(corr)},{its},{status}\n")
    out.write_text("".join(lines))
    ok = sum(r[5] == "ok" for r in rows)
    print(f"cells={len(rows)} ok={ok}")
    return EXIT_OK if ok else EXIT_NUMERIC


def _ablate_row(z, s, scorers, cfg, beta, variant):
    result = solve_variant(z, s, cfg.solver_config(variant))
    report = edit_correlation(z, result.state.w, scorers, beta=beta, noise=cfg.scorer_noise, seed=cfg.seed)
    sparsity = float(np.mean(result.state.f <= SPARSITY_TOL))
    return variant, report.overall_avg, result.trace.records[-1].objective, sparsity


def cmd_ablate(cfg):
    """Compare the full method with its ablated variants on one problem."""
    out = _need_out(cfg)
    _check_outputs(out)
    z, s = _load_problem(cfg)
    scorers = _load_scorers(cfg, s)
    beta = _single_beta(cfg)
    with ThreadPoolExecutor(max_workers=_worker_count(len(ABLATION_VARIANTS))) as pool:
        rows = list(pool.map(lambda v: _ablate_row(z, s, scorers, cfg, beta, v), ABLATION_VARIANTS))
    rows.sort(key=lambda r: ABLATION_VARIANTS.index(r[0]))
    lines = [_scorer_comment(cfg, beta), "variant,avg_corr,final_J,sparsity_fraction\n"]
    lines += [f"{v},{_fmt(c)},{_fmt(j)},{_fmt(sp)}\n" for v, c, j, sp in rows]
    out.write_text("".join(lines))
    best = min(rows, key=lambda r: r[1])[0]
    print(f"lowest avg_corr: {best}")
    return EXIT_OK


def cmd_synth(cfg):
    """Write a planted synthetic problem and a manifest that solve can read."""
    if cfg.out_dir is None:
        raise UsageError("missing required setting --out-dir")
    k = 5 if cfg.k is None else cfg.k
    try:
        model = PlantedModel(rho=cfg.rho, noise_sigma=cfg.noise, seed=cfg.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    data = generate(model, cfg.m, k, cfg.n)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    ext = ".csv" if cfg.format == "csv" else ".ufmx"
    names = {"latents": "z", "boundaries": "s", "scorers": "scorers", "truth": "w_true"}
    files = {key: stem + ext for key, stem in names.items()}
    scorer_rows = np.hstack([data.scorers.weights, data.scorers.bias[:, None]])
    io.write_matrix(cfg.out_dir / files["latents"], data.z, cfg.format)
    io.write_matrix(cfg.out_dir / files["boundaries"], data.boundaries.s, cfg.format)
    io.write_matrix(cfg.out_dir / files["scorers"], scorer_rows, cfg.format)
    io.write_matrix(cfg.out_dir / files["truth"], data.w_true, cfg.format)
    manifest = {"m": cfg.m, "n": cfg.n, "k": k, "rho": repr(cfg.rho), "noise": repr(cfg.noise),
                "seed": cfg.seed, **files}
    header = "# planted model: synthetic construction, not sampled from a generator\n"
    (cfg.out_dir / "manifest.txt").write_text(header + io.format_key_values(manifest))
    return EXIT_OK


def cmd_metrics(cfg):
    """Disentanglement correlation table for learned directions."""
    out = _need_out(cfg)
    _check_outputs(out, cfg.ids_out)
    _require(cfg, "weights", "latents")
    if (cfg.embeddings_ori is None) != (cfg.embeddings_edit is None):
        raise UsageError("--embeddings-ori and --embeddings-edit go together")
    if cfg.embeddings_ori is not None:
        _require(cfg, "embeddings_ori", "embeddings_edit")
    beta = _single_beta(cfg)
    w = io.read_matrix(cfg.weights)
    z = io.read_matrix(cfg.latents)
    if cfg.scorers is None:
        _require(cfg, "boundaries")
        scorers = _load_scorers(cfg, io.read_matrix(cfg.boundaries))
    else:
        _require(cfg, "scorers")
        scorers = _load_scorers(cfg, None)
    report = edit_correlation(z, w, scorers, beta=beta, noise=cfg.scorer_noise, seed=cfg.seed)

    def cell(x):
        return "undefined" if math.isnan(x) else _fmt(x)

    lines = [_scorer_comment(cfg, beta), "," + ",".join(report.names) + "\n"]
    for name, row in zip(report.names, report.matrix):
        lines.append(name + "," + ",".join(cell(x) for x in row) + "\n")
    lines.append("Avg," + ",".join(cell(x) for x in report.column_avg) + "\n")
    out.write_text("".join(lines))
    for name in report.undefined:
        print(f"semsub: warning: correlation undefined for attribute {name!r} "
              "(constant deltas)", file=sys.stderr)
    print(f"avg_corr={cell(report.overall_avg)}")

    if cfg.embeddings_ori is not None:
        ori = io.read_matrix(cfg.embeddings_ori)
        edit = io.read_matrix(cfg.embeddings_edit)
        if ori.shape != edit.shape:
            raise UsageError(f"embedding files differ in shape: {ori.shape} vs {edit.shape}")
        scores = np.array([identity_score(EmbeddingPair(a, b)) for a, b in zip(ori, edit)])
        stats = {"count": len(scores), "mean": _fmt(scores.mean()), "std": _fmt(scores.std()),
                 "min": _fmt(scores.min()), "max": _fmt(scores.max())}
        print("ids " + " ".join(f"{k}={v}" for k, v in stats.items()))
        if cfg.ids_out is not None:
            cfg.ids_out.write_text("statistic,value\n" + "".join(f"{k},{v}\n" for k, v in stats.items()))
    return EXIT_OK


def cmd_edit(cfg):
    """Move a latent vector along one learned direction for several strengths."""
    out = _need_out(cfg)
    _check_outputs(out, cfg.distances)
    _require(cfg, "weights", "vector")
    w = io.read_matrix(cfg.weights)
    vec = io.read_matrix(cfg.vector)
    if 1 not in vec.shape:
        raise UsageError(f"{cfg.vector}: expected a single row or column, got {vec.shape}")
    vec = vec.reshape(-1)
    betas = cfg.beta if cfg.beta is not None else DEFAULT_EDIT_BETAS
    try:
        cols = [apply_edit(EditRequest(vec, cfg.index, b), w) for b in betas]
    except IndexError as exc:
        raise UsageError(str(exc)) from None
    io.write_matrix(out, np.column_stack(cols), cfg.format)
    if cfg.distances is not None:
        _require(cfg, "boundaries")
        s = normalize_boundaries(io.read_matrix(cfg.boundaries)).s
        if s.shape != w.shape:
            raise UsageError(f"boundaries {s.shape} do not match directions {w.shape}")
        rows = controllability_check(w[:, cfg.index], s[:, cfg.index], betas)
        cfg.distances.write_text("beta,distance\n" + "".join(f"{_fmt(b)},{_fmt(d)}\n" for b, d in rows))
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve, "sweep": cmd_sweep, "ablate": cmd_ablate,
    "synth": cmd_synth, "metrics": cmd_metrics, "edit": cmd_edit,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", help="flat key=value settings file")
    common.add_argument("--alpha", help="non-negativity coupling (default 0.5)")
    common.add_argument("--lambda", dest="lambda", help="boundary repulsion (default 1.0)")
    common.add_argument("--iters", help="iteration budget (default 30)")
    common.add_argument("--tol", help="relative objective-drop tolerance (default 1e-6)")
    common.add_argument("--k", help="number of directions")
    common.add_argument("--init", choices=INIT_MODES)
    common.add_argument("--seed")
    common.add_argument("--variant", choices=VARIANTS)
    common.add_argument("--beta", help="comma-separated edit strengths")
    common.add_argument("--format", choices=io.FORMATS, help="matrix output format")
    common.add_argument("--alphas", help="sweep grid for alpha")
    common.add_argument("--lambdas", help="sweep grid for lambda")
    common.add_argument("--no-boundary", dest="no_boundary", action="store_const", const="1")
    common.add_argument("--scorer-noise", dest="scorer_noise",
                        help="per-evaluation scorer noise (default 1e-3)")
    for name in ("m", "n", "rho", "noise", "index"):
        common.add_argument(f"--{name}")
    for name in _PATH_FIELDS:
        common.add_argument(f"--{name.replace('_', '-')}", dest=name, metavar="PATH")

    parser = argparse.ArgumentParser(prog="semsub", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=fn.__doc__, description=fn.__doc__)
    return parser


def main(argv=None):
    args = vars(build_parser().parse_args(argv))
    command = args.pop("command")
    config_path = args.pop("config", None)
    try:
        cfg = load_config(config_path, args)
        return COMMANDS[command](cfg)
    except (DivergenceError, ConvergenceError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"semsub: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (OSError, ValueError, IndexError) as exc:
        msg = str(exc) if not isinstance(exc, OSError) else f"{exc.filename}: {exc.strerror}"
        print(f"semsub: error: {msg}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
