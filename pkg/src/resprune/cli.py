"""Command-line front end.

Subcommands
-----------
select    run the greedy selector on token files, emit a result JSON
compare   sweep methods x budgets, emit a CSV of reconstruction error/time
oracle    exhaustive-search check on a small instance, emit a JSON report
flops     evaluate the analytic prefill cost model, emit JSON
bench     time the selector on synthetic inputs, emit a CSV

Exit codes: 0 success, 2 usage errors (argparse), 3 missing input file,
4 malformed input file, 5 constraint violations (bad budget, dimension
mismatches, config errors), 1 anything else.

Option precedence for selection parameters: package defaults, then the
TOML --config file, then the --preset alpha, then explicit flags.
``RESPRUNE_THREADS`` caps the worker threads used for compare/bench cells
(default 1; timings are only meaningful serial).
"""

import argparse
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

import numpy as np

from .baselines import (
    select_maxmin_diversity,
    select_random,
    select_top_norm,
    select_top_relevance,
)
from .costmodel import LlmShape, PRESETS, prefill_report, selection_cost
from .npyio import (
    FormatError,
    TextMatrix,
    load_keep_mask,
    load_score_vector,
    load_text_matrix,
    load_token_matrix,
    result_to_json,
)
from .oracle import brute_force_optimal, explicit_residuals, synthetic_tokens
from .relevance import GateConfig, clean_text_tokens, text_relevance
from .seeding import default_strategy, select_seed
from .selector import PruneConfig, greedy_select

_COMPARE_HEADER = "method,budget,recon_error,wall_time"
_BENCH_HEADER = (
    "visual_tokens,text_tokens,embed_dim,budget,wall_time,"
    "relevance_macs,greedy_macs,basis_macs"
)


def _diag(message):
    print(f"resprune: {message}", file=sys.stderr)


def _parse_grid(text):
    parts = text.lower().split("x")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"grid must look like ROWSxCOLS, got {text!r}")
    try:
        rows, cols = int(parts[0]), int(parts[1])
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must look like ROWSxCOLS, got {text!r}") from None
    if rows < 1 or cols < 1:
        raise argparse.ArgumentTypeError(f"grid extents must be positive, got {text!r}")
    return rows, cols


def _parse_int_list(text):
    try:
        values = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("expected at least one integer")
    return values


def _worker_count():
    raw = os.environ.get("RESPRUNE_THREADS", "1")
    try:
        count = int(raw)
    except ValueError:
        raise ValueError(f"RESPRUNE_THREADS must be an integer, got {raw!r}") from None
    return max(1, count)


def render_mask(indices, grid):
    """ASCII keep map: '#' for retained cells, '.' for pruned, row-major."""
    rows, cols = grid
    kept = set(int(i) for i in indices)
    lines = []
    for r in range(rows):
        lines.append("".join("#" if r * cols + c in kept else "." for c in range(cols)))
    return "\n".join(lines) + "\n"


def pgm_bytes(indices, grid):
    """Binary PGM (P5, maxval 255): retained cells 255, pruned 0."""
    rows, cols = grid
    kept = set(int(i) for i in indices)
    header = f"P5\n{cols} {rows}\n255\n".encode("ascii")
    body = bytes(255 if r * cols + c in kept else 0 for r in range(rows) for c in range(cols))
    return header + body


def _load_toml(path):
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise FormatError(f"{path}: not valid TOML: {exc}") from exc


def _selection_flags(parser, with_budget=True):
    if with_budget:
        parser.add_argument("--budget", "-k", type=int, default=None, help="tokens to keep")
    parser.add_argument("--alpha", type=float, default=None, help="gate exponent")
    parser.add_argument("--epsilon", type=float, default=None, help="gate offset")
    parser.add_argument(
        "--relevance", choices=["max", "mean", "pooled"], default=None,
        help="relevance formulation",
    )
    parser.add_argument(
        "--seed-strategy", choices=["scores", "norm", "relevance", "mean", "center"],
        default=None, help="first-pick strategy (default: scores if given, else norm)",
    )
    parser.add_argument("--span-tol", type=float, default=None, help="span rejection tolerance")
    parser.add_argument(
        "--exhaust-fallback", choices=["weight", "norm"], default=None,
        help="ranking used to fill budget once energy is exhausted",
    )
    parser.add_argument(
        "--preset", choices=sorted(PRESETS), default=None,
        help="model family preset (sets the default gate alpha)",
    )
    parser.add_argument("--config", default=None, help="TOML file with selection parameters")


def _merged_config(args, budget):
    mapping = {}
    if args.config is not None:
        mapping.update(_load_toml(args.config))
    if args.preset is not None:
        mapping["alpha"] = PRESETS[args.preset].alpha
    flag_values = {
        "alpha": args.alpha,
        "epsilon": args.epsilon,
        "relevance": args.relevance,
        "seed_strategy": args.seed_strategy,
        "span_tol": args.span_tol,
        "exhaust_fallback": args.exhaust_fallback,
    }
    for key, value in flag_values.items():
        if value is not None:
            mapping[key] = value
    if budget is not None:
        mapping["budget"] = budget
    return PruneConfig.from_mapping(mapping)


def _load_select_inputs(args):
    grid = getattr(args, "grid", None)
    tokens = load_token_matrix(args.visual, grid=grid)
    text = None
    if args.text is not None:
        keep_mask = None
        if args.keep_mask is not None:
            keep_mask = load_keep_mask(args.keep_mask)
        elif args.clean_text is not None:
            with open(args.clean_text, "r", encoding="utf-8") as fh:
                strings = [line.rstrip("\n") for line in fh if line.strip()]
            keep_mask = clean_text_tokens(strings)
        text = load_text_matrix(args.text, keep_mask=keep_mask)
        if text.count > 0 and text.dim != tokens.dim:
            raise ValueError(
                f"dimension mismatch: visual is {tokens.dim}-dim, text is {text.dim}-dim"
            )
    scores = None
    if getattr(args, "scores", None) is not None:
        scores = load_score_vector(args.scores)
        if scores.count != tokens.count:
            raise ValueError(
                f"score vector has {scores.count} entries for {tokens.count} tokens"
            )
    return tokens, text, scores


def _cmd_select(args):
    tokens, text, scores = _load_select_inputs(args)
    config = _merged_config(args, args.budget)
    result = greedy_select(tokens, text=text, config=config, scores=scores)
    payload = result_to_json(result)
    if args.out is not None:
        with open(args.out, "w", encoding="ascii") as fh:
            fh.write(payload)
    else:
        sys.stdout.write(payload)
    if args.mask is not None or args.mask_pgm is not None:
        if tokens.grid is None:
            raise ValueError("mask rendering needs --grid ROWSxCOLS")
        if args.mask is not None:
            with open(args.mask, "w", encoding="ascii") as fh:
                fh.write(render_mask(result.indices, tokens.grid))
        if args.mask_pgm is not None:
            with open(args.mask_pgm, "wb") as fh:
                fh.write(pgm_bytes(result.indices, tokens.grid))
    return 0


def _compare_cell(tokens, text, scores, args, method, budget):
    total = tokens.count
    has_text = text is not None and text.effective_rows().shape[0] > 0

    def run():
        if method == "resprune":
            cfg = _merged_config(args, budget)
            return greedy_select(tokens, text=text, config=cfg, scores=scores).indices
        if method == "resprune-α0":
            cfg = _merged_config(args, budget)
            cfg = replace(cfg, gate=GateConfig(alpha=0.0, epsilon=cfg.gate.epsilon))
            return greedy_select(tokens, text=text, config=cfg, scores=scores).indices
        if method == "random":
            return select_random(total, budget, args.rand_seed)
        if method == "top-norm":
            return select_top_norm(tokens, budget)
        if method == "top-relevance":
            return select_top_relevance(tokens, text, budget)
        if method == "maxmin":
            cfg = _merged_config(args, budget)
            strategy = cfg.seed if cfg.seed is not None else default_strategy(scores)
            rel = text_relevance(tokens, text, cfg.formulation) if has_text else None
            seed_index = select_seed(tokens, strategy, relevance=rel, scores=scores)
            return select_maxmin_diversity(tokens, budget, seed_index=seed_index)
        raise ValueError(f"unknown method {method!r}")

    start = time.perf_counter()
    indices = run()
    elapsed = time.perf_counter() - start
    error = float(explicit_residuals(tokens, indices).sum())
    return method, budget, error, elapsed


def _cmd_compare(args):
    tokens, text, scores = _load_select_inputs(args)
    has_text = text is not None and text.effective_rows().shape[0] > 0
    methods = ["resprune", "resprune-α0", "random", "top-norm", "maxmin"]
    if has_text:
        methods.append("top-relevance")
    cells = [(m, k) for m in methods for k in args.budgets]
    workers = _worker_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(
                pool.map(lambda cell: _compare_cell(tokens, text, scores, args, *cell), cells)
            )
    else:
        rows = [_compare_cell(tokens, text, scores, args, *cell) for cell in cells]
    rows.sort(key=lambda row: (row[0], row[1]))
    lines = [_COMPARE_HEADER]
    for method, budget, error, elapsed in rows:
        lines.append(f"{method},{budget},{error:.12g},{elapsed:.6f}")
    payload = "\n".join(lines) + "\n"
    if args.out is not None:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(payload)
    else:
        sys.stdout.write(payload)
    return 0


def _cmd_oracle(args):
    tokens = load_token_matrix(args.visual)
    greedy = greedy_select(tokens, config=PruneConfig(budget=args.budget))
    report = brute_force_optimal(
        tokens, args.budget, greedy=greedy, max_subsets=args.max_subsets
    )
    payload = json.dumps(
        {
            "greedy_error": report.greedy_error,
            "optimal_error": report.optimal_error,
            "optimal_subset": list(report.optimal_subset),
            "greedy_subset": list(report.greedy_subset),
            "ratio": report.ratio,
        },
        indent=2,
    ) + "\n"
    if args.out is not None:
        with open(args.out, "w", encoding="ascii") as fh:
            fh.write(payload)
    else:
        sys.stdout.write(payload)
    return 0


def _cmd_flops(args):
    if args.preset is not None:
        preset = PRESETS[args.preset]
        shape = preset.shape(
            budget=args.budget,
            text_tokens=args.text_tokens,
            visual_tokens=args.visual_tokens,
        )
    else:
        needed = {"hidden_dim": args.hidden_dim, "mlp_dim": args.mlp_dim, "layers": args.layers,
                  "visual_tokens": args.visual_tokens}
        missing = [name for name, value in needed.items() if value is None]
        if missing:
            raise ValueError(f"without --preset these are required: {missing}")
        shape = LlmShape(
            hidden_dim=args.hidden_dim,
            mlp_dim=args.mlp_dim,
            layers=args.layers,
            visual_tokens=args.visual_tokens,
            text_tokens=args.text_tokens,
            budget=args.budget,
        )
    report = prefill_report(shape)
    cost = selection_cost(shape.visual_tokens, shape.text_tokens, shape.hidden_dim, shape.budget)
    payload = json.dumps(
        {
            "shape": {
                "hidden_dim": shape.hidden_dim,
                "mlp_dim": shape.mlp_dim,
                "layers": shape.layers,
                "visual_tokens": shape.visual_tokens,
                "text_tokens": shape.text_tokens,
                "budget": shape.budget,
            },
            "full_flops": report["full_flops"],
            "pruned_flops": report["pruned_flops"],
            "reduction_percent": report["reduction_percent"],
            "kv_cache_reduction_percent": report["kv_cache_reduction_percent"],
            "selection": {
                "relevance_macs": cost.relevance_macs,
                "greedy_macs": cost.greedy_macs,
                "basis_macs": cost.basis_macs,
                "total_macs": cost.total(),
            },
        },
        indent=2,
    ) + "\n"
    if args.out is not None:
        with open(args.out, "w", encoding="ascii") as fh:
            fh.write(payload)
    else:
        sys.stdout.write(payload)
    return 0


def _bench_cell(count, dim, budget, text_len, repeat, seed):
    tokens = synthetic_tokens(count, dim, seed=seed)
    text = None
    if text_len > 0:
        rng = np.random.default_rng(seed + 1)
        text = TextMatrix(rng.standard_normal((text_len, dim)).astype(np.float32))
    config = PruneConfig(budget=budget)
    best = None
    for _ in range(max(1, repeat)):
        start = time.perf_counter()
        greedy_select(tokens, text=text, config=config)
        elapsed = time.perf_counter() - start
        best = elapsed if best is None else min(best, elapsed)
    cost = selection_cost(count, text_len, dim, budget)
    return (count, text_len, dim, budget, best, cost)


def _cmd_bench(args):
    cells = [
        (count, dim, budget)
        for count in sorted(args.tokens)
        for dim in sorted(args.dims)
        for budget in sorted(args.budgets)
    ]
    for count, dim, budget in cells:
        if budget > count:
            raise ValueError(f"budget {budget} exceeds token count {count}")
    workers = _worker_count()

    def runner(cell):
        return _bench_cell(cell[0], cell[1], cell[2], args.text_len, args.repeat, args.seed)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(runner, cells))
    else:
        results = [runner(cell) for cell in cells]
    lines = [_BENCH_HEADER]
    for count, text_len, dim, budget, elapsed, cost in results:
        lines.append(
            f"{count},{text_len},{dim},{budget},{elapsed:.6f},"
            f"{cost.relevance_macs},{cost.greedy_macs},{cost.basis_macs}"
        )
    payload = "\n".join(lines) + "\n"
    if args.out is not None:
        with open(args.out, "w", encoding="ascii") as fh:
            fh.write(payload)
    else:
        sys.stdout.write(payload)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="resprune",
        description="Greedy subspace selection of visual token subsets",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_select = sub.add_parser("select", help="select tokens and write a result JSON")
    p_select.add_argument("--visual", required=True, help="2-D NPY of token embeddings")
    p_select.add_argument("--text", default=None, help="2-D NPY of text embeddings")
    p_select.add_argument("--scores", default=None, help="1-D NPY of external seed scores")
    p_select.add_argument("--grid", type=_parse_grid, default=None, help="token layout ROWSxCOLS")
    mask_group = p_select.add_mutually_exclusive_group()
    mask_group.add_argument("--keep-mask", default=None, help="0/1 lines masking text rows")
    mask_group.add_argument(
        "--clean-text", default=None,
        help="text token strings (one per line) run through the boilerplate filter",
    )
    _selection_flags(p_select)
    p_select.add_argument("--out", default=None, help="result JSON path (default stdout)")
    p_select.add_argument("--mask", default=None, help="write an ASCII keep map here")
    p_select.add_argument("--mask-pgm", default=None, help="write a binary PGM keep map here")
    p_select.set_defaults(func=_cmd_select)

    p_compare = sub.add_parser("compare", help="methods x budgets sweep to CSV")
    p_compare.add_argument("--visual", required=True)
    p_compare.add_argument("--text", default=None)
    p_compare.add_argument("--scores", default=None)
    mask_group = p_compare.add_mutually_exclusive_group()
    mask_group.add_argument("--keep-mask", default=None)
    mask_group.add_argument("--clean-text", default=None)
    p_compare.add_argument("--budgets", type=_parse_int_list, required=True,
                           help="comma-separated budgets, e.g. 64,128,192")
    p_compare.add_argument("--rand-seed", type=int, default=0,
                           help="generator seed for the random baseline")
    _selection_flags(p_compare, with_budget=False)
    p_compare.add_argument("--out", default=None, help="CSV path (default stdout)")
    p_compare.set_defaults(func=_cmd_compare)

    p_oracle = sub.add_parser("oracle", help="exhaustive-search check on a small instance")
    p_oracle.add_argument("--visual", required=True)
    p_oracle.add_argument("--budget", "-k", type=int, required=True)
    p_oracle.add_argument("--max-subsets", type=int, default=1_000_000)
    p_oracle.add_argument("--out", default=None, help="report JSON path (default stdout)")
    p_oracle.set_defaults(func=_cmd_oracle)

    p_flops = sub.add_parser("flops", help="evaluate the prefill cost model")
    p_flops.add_argument("--preset", choices=sorted(PRESETS), default=None)
    p_flops.add_argument("--hidden-dim", type=int, default=None)
    p_flops.add_argument("--mlp-dim", type=int, default=None)
    p_flops.add_argument("--layers", type=int, default=None)
    p_flops.add_argument("--visual-tokens", type=int, default=None)
    p_flops.add_argument("--text-tokens", type=int, default=0)
    p_flops.add_argument("--budget", "-k", type=int, required=True)
    p_flops.add_argument("--out", default=None)
    p_flops.set_defaults(func=_cmd_flops)

    p_bench = sub.add_parser("bench", help="time the selector on synthetic inputs")
    p_bench.add_argument("--tokens", type=_parse_int_list, required=True)
    p_bench.add_argument("--dims", type=_parse_int_list, required=True)
    p_bench.add_argument("--budgets", type=_parse_int_list, required=True)
    p_bench.add_argument("--text-len", type=int, default=0)
    p_bench.add_argument("--repeat", type=int, default=3)
    p_bench.add_argument("--seed", type=int, default=0)
    p_bench.add_argument("--out", default=None, help="CSV path (default stdout)")
    p_bench.set_defaults(func=_cmd_bench)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        _diag(exc)
        return 3
    except FormatError as exc:
        _diag(exc)
        return 4
    except ValueError as exc:
        _diag(exc)
        return 5
    except OSError as exc:
        _diag(exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
