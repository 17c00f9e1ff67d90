"""Command-line interface: capacity, noise, timing, recall, selftest.

Exit codes: 0 success, 1 runtime failure (I/O, numerics, failed self-checks),
2 usage error (argparse).  Flag values can also come from a ``--config`` file
of ``key=value`` lines (one per line, ``#`` comments allowed); explicit flags
override the file, which overrides built-in defaults.  When ``--seed`` is
absent the ``KERNMEM_SEED`` environment variable supplies the root seed.
"""

from __future__ import annotations

import argparse
import os
import sys
import tempfile

import numpy as np
from threadpoolctl import threadpool_limits

from . import experiments, kernel, learning, patterns, recall

__all__ = ["main", "build_parser", "run_selftest"]

_EXPERIMENTS = ("capacity", "noise", "timing")


def _parse_rules(text, allowed=learning.RULES):
    names = tuple(part.strip() for part in text.split(",") if part.strip())
    if not names:
        raise argparse.ArgumentTypeError("rule list is empty")
    for name in names:
        if name not in allowed:
            raise argparse.ArgumentTypeError(
                f"unknown rule {name!r}; choose from {', '.join(allowed)}"
            )
    return names


def _parse_grid(text):
    """Float grid: either 'a,b,c' or an inclusive 'start:stop:step' range."""
    text = text.strip()
    try:
        if ":" in text:
            pieces = text.split(":")
            if len(pieces) != 3:
                raise ValueError("range must be start:stop:step")
            start, stop, step = (float(t) for t in pieces)
            if step <= 0:
                raise ValueError("step must be > 0")
            count = int(round((stop - start) / step))
            values = [round(start + k * step, 10) for k in range(count + 1)]
            return tuple(v for v in values if v <= stop + 1e-9)
        return tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}: {exc}") from None


def _parse_seed(text):
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if not 0 <= value < patterns.MAX_SEED:
        raise argparse.ArgumentTypeError(f"seed must be in [0, 2**64), got {value}")
    return value


def _positive(kind, what):
    def convert(text):
        try:
            value = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{what} must be a number, got {text!r}") from None
        if value <= 0:
            raise argparse.ArgumentTypeError(f"{what} must be > 0, got {text}")
        return value

    return convert


def _threshold(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"threshold must be a number, got {text!r}") from None
    if not 0.0 < value <= 1.0:
        raise argparse.ArgumentTypeError(f"threshold must be in (0, 1], got {text}")
    return value


def _add_train_flags(parser):
    parser.add_argument(
        "--lambda",
        dest="lam",
        type=_positive(float, "lambda"),
        default=0.01,
        help="L2 regularization strength",
    )
    parser.add_argument(
        "--eta",
        type=_positive(float, "eta"),
        default=0.1,
        help="gradient step size for the iterative rules",
    )
    parser.add_argument(
        "--llr-iters",
        type=_positive(int, "llr-iters"),
        default=100,
        help="gradient steps per neuron for the llr rule",
    )
    parser.add_argument(
        "--klr-iters",
        type=_positive(int, "klr-iters"),
        default=200,
        help="matrix-recurrence sweeps for the klr rule",
    )
    parser.add_argument(
        "--gamma-scale",
        type=_positive(float, "gamma-scale"),
        default=1.0,
        help="multiplier on the default kernel width 1/N",
    )


def _add_common_flags(parser, default_rules):
    parser.add_argument("--n", type=_positive(int, "n"), default=500, help="neurons per pattern")
    parser.add_argument(
        "--rules",
        type=lambda t: _parse_rules(t),
        default=default_rules,
        help="comma-separated rule list",
    )
    parser.add_argument("--seed", type=_parse_seed, default=None, help="root seed (default: $KERNMEM_SEED or 0)")
    parser.add_argument(
        "--t-max", type=_positive(int, "t-max"), default=25, help="recall step budget"
    )
    parser.add_argument(
        "--threshold",
        type=_threshold,
        default=0.95,
        help="success threshold on the final overlap (strict)",
    )
    parser.add_argument(
        "--threads",
        type=_positive(int, "threads"),
        default=None,
        help="cap the BLAS thread pool (timing default: 1)",
    )
    parser.add_argument("--config", default=None, help="key=value file of flag defaults")
    _add_train_flags(parser)


def _add_output_flags(parser, default_out):
    parser.add_argument("--out", default=default_out, help="CSV output path")
    parser.add_argument("--plot", default=None, help="optional plot path (.svg/.png/.pdf)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="kernmem",
        description="Associative-memory learning-rule benchmark",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    cap = sub.add_parser(
        "capacity",
        help="recall success rate across storage loads",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    _add_common_flags(cap, default_rules=learning.RULES)
    _add_output_flags(cap, "capacity.csv")
    cap.add_argument("--betas", type=_parse_grid, default=experiments.DEFAULT_BETA_GRID, help="load grid")
    cap.add_argument(
        "--trials", type=_positive(int, "trials"), default=1, help="pattern-set draws per cell"
    )
    cap.add_argument(
        "--shared-patterns",
        action="store_true",
        help="use identical pattern draws for every rule",
    )

    noise = sub.add_parser(
        "noise",
        help="basin profile: final overlap vs initial overlap",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    _add_common_flags(noise, default_rules=learning.RULES)
    _add_output_flags(noise, "noise.csv")
    noise.add_argument("--beta", type=_positive(float, "beta"), default=0.2, help="storage load")
    noise.add_argument(
        "--m0-grid", type=_parse_grid, default=experiments.DEFAULT_NOISE_GRID, help="initial overlaps"
    )
    noise.add_argument(
        "--noise-trials",
        type=_positive(int, "noise-trials"),
        default=10,
        help="corrupted starts per stored pattern",
    )
    noise.add_argument(
        "--shared-patterns",
        action="store_true",
        help="use identical pattern draws for every rule",
    )

    timing = sub.add_parser(
        "timing",
        help="wall-clock training time per rule and load",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    _add_common_flags(timing, default_rules=("llr", "klr", "krr"))
    _add_output_flags(timing, "timing.csv")
    timing.add_argument(
        "--betas", type=_parse_grid, default=experiments.DEFAULT_TIMING_GRID, help="load grid"
    )
    timing.add_argument(
        "--trials", type=_positive(int, "trials"), default=3, help="timed runs per cell"
    )

    rec = sub.add_parser(
        "recall",
        help="single recall run with the overlap trajectory printed",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    rec.add_argument("--rule", required=True, choices=learning.RULES, help="learning rule")
    rec.add_argument("--patterns", required=True, help="pattern file (header 'N P')")
    rec.add_argument("--pattern-index", type=int, default=0, help="which stored pattern to cue")
    rec.add_argument(
        "--m0",
        type=float,
        default=1.0,
        help="initial overlap of the corrupted cue (1.0 = clean)",
    )
    rec.add_argument("--seed", type=_parse_seed, default=None, help="corruption seed (default: $KERNMEM_SEED or 0)")
    rec.add_argument("--t-max", type=_positive(int, "t-max"), default=25, help="recall step budget")
    rec.add_argument(
        "--threshold",
        type=_threshold,
        default=0.95,
        help="success threshold on the final overlap (strict)",
    )
    rec.add_argument("--config", default=None, help="key=value file of flag defaults")
    _add_train_flags(rec)

    sub.add_parser("selftest", help="run the built-in invariant checks")

    return parser


def _load_config_args(path):
    """Turn a key=value config file into a flag list for argparse."""
    flags = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if not key:
                raise ValueError(f"{path}:{lineno}: empty key")
            flag = "--" + key.replace("_", "-")
            if value.lower() in ("true", "yes", "on") and key in ("shared-patterns", "shared_patterns"):
                flags.append(flag)
            else:
                flags.extend([flag, value])
    return flags


def _apply_config(argv, parser):
    """Splice config-file flags in after the subcommand, before explicit flags."""
    path = None
    consumed = set()
    for i, token in enumerate(argv):
        if token == "--config":
            if i + 1 >= len(argv):
                parser.error("--config needs a file path")
            path = argv[i + 1]
            consumed.update((i, i + 1))
        elif token.startswith("--config="):
            path = token.split("=", 1)[1]
            consumed.add(i)
    if path is None:
        return argv
    try:
        injected = _load_config_args(path)
    except (OSError, ValueError) as exc:
        parser.error(f"bad config file: {exc}")
    head = argv[:1]
    tail = [a for i, a in enumerate(argv) if i not in consumed and i >= 1]
    return head + injected + tail


def _resolve_seed(args, parser):
    if getattr(args, "seed", None) is not None:
        return args.seed
    raw = os.environ.get("KERNMEM_SEED", "").strip()
    if not raw:
        return 0
    try:
        return _parse_seed(raw)
    except argparse.ArgumentTypeError as exc:
        parser.error(f"KERNMEM_SEED: {exc}")


def _train_config(args):
    return learning.TrainConfig(
        lam=args.lam,
        eta=args.eta,
        llr_iters=args.llr_iters,
        klr_iters=args.klr_iters,
        gamma=args.gamma_scale / args.n if hasattr(args, "n") else None,
    )


def _sweep_config(args, seed, **overrides):
    base = dict(
        n=args.n,
        rules=args.rules,
        t_max=args.t_max,
        success_threshold=args.threshold,
        train=_train_config(args),
        seed=seed,
        threads=args.threads,
        shared_patterns=getattr(args, "shared_patterns", False),
    )
    base.update(overrides)
    return experiments.SweepConfig(**base)


def _finish_experiment(rows, args, experiment):
    experiments.write_rows(rows, args.out, experiment=experiment)
    print(f"wrote {args.out} ({len(rows)} rows)")
    if args.plot:
        experiments.render_plot(rows, args.plot)
        print(f"wrote {args.plot}")


def _cmd_capacity(args, parser):
    seed = _resolve_seed(args, parser)
    cfg = _sweep_config(args, seed, beta_grid=args.betas, trials=args.trials)
    if args.threads is not None:
        with threadpool_limits(limits=args.threads):
            rows = experiments.capacity_sweep(cfg)
    else:
        rows = experiments.capacity_sweep(cfg)
    _finish_experiment(rows, args, "capacity")
    for rule in learning.RULES:
        rates = [r.success_rate for r in rows if r.rule == rule]
        if rates:
            print(
                f"capacity {rule}: mean success {np.mean(rates):.3f} "
                f"over {len(rates)} cells"
            )
    return 0


def _cmd_noise(args, parser):
    seed = _resolve_seed(args, parser)
    for m0 in args.m0_grid:
        if not 0.0 <= m0 <= 1.0:
            parser.error(f"--m0-grid values must be in [0, 1], got {m0}")
    cfg = _sweep_config(
        args,
        seed,
        beta_grid=(args.beta,),
        noise_grid=args.m0_grid,
        noise_trials_per_pattern=args.noise_trials,
    )
    if args.threads is not None:
        with threadpool_limits(limits=args.threads):
            rows = experiments.noise_sweep(cfg)
    else:
        rows = experiments.noise_sweep(cfg)
    _finish_experiment(rows, args, "noise")
    for rule in learning.RULES:
        cells = sorted((r.m0, r.mean_final_overlap) for r in rows if r.rule == rule)
        if cells:
            solid = next((m0 for m0, mean in cells if mean >= 0.99), None)
            basin = f"m(T) >= 0.99 from m0 = {solid}" if solid is not None else "m(T) < 0.99 everywhere"
            print(f"noise {rule}: {basin}")
    return 0


def _cmd_timing(args, parser):
    seed = _resolve_seed(args, parser)
    cfg = _sweep_config(
        args,
        seed,
        beta_grid=args.betas,
        trials=args.trials,
        threads=args.threads if args.threads is not None else 1,
    )
    rows = experiments.timing_benchmark(cfg)
    _finish_experiment(rows, args, "timing")
    top = max(cfg.beta_grid)
    for rule in learning.RULES:
        means = [
            r.learn_seconds
            for r in rows
            if r.rule == rule and r.trial == "mean" and r.beta == top
        ]
        if means:
            print(f"timing {rule}: mean {means[0]:.4f} s at beta={top}")
    return 0


def _cmd_recall(args, parser):
    seed = _resolve_seed(args, parser)
    if not -1.0 <= args.m0 <= 1.0:
        parser.error(f"--m0 must be in [-1, 1], got {args.m0}")
    pats = patterns.load_patterns(args.patterns)
    if not 0 <= args.pattern_index < pats.p:
        parser.error(
            f"--pattern-index must be in [0, {pats.p - 1}], got {args.pattern_index}"
        )
    cfg = learning.TrainConfig(
        lam=args.lam,
        eta=args.eta,
        llr_iters=args.llr_iters,
        klr_iters=args.klr_iters,
        gamma=args.gamma_scale / pats.n,
    )
    model = learning.train_rule(args.rule, pats, cfg)
    target = pats.data[args.pattern_index]
    start = patterns.corrupt(
        target, args.m0, patterns.derive_seed(seed, "recall", args.pattern_index)
    )
    trace = recall.run(model, start, target, args.t_max)
    for step_index, value in enumerate(trace.overlaps):
        print(f"step {step_index}: overlap {value:+.4f}")
    status = "success" if recall.is_success(trace, args.threshold) else "failure"
    stop = "fixed point" if trace.reached_fixed_point else "step budget"
    print(
        f"{status}: final overlap {trace.final_overlap:+.4f} "
        f"after {trace.steps_run} steps ({stop})"
    )
    return 0


# ---------------------------------------------------------------------------
# Self-test suite


def _check(condition, message):
    if not condition:
        raise AssertionError(message)


def _selftest_gram():
    pats = patterns.generate_patterns(40, 20, seed=7)
    cfg = kernel.KernelConfig(gamma=1.0 / 40)
    k = kernel.gram_matrix(pats, cfg)
    kernel.check_kernel_matrix(k)
    x = pats.data.astype(np.float64)
    for i in range(pats.p):
        for j in range(pats.p):
            want = np.exp(-cfg.gamma * float(np.sum((x[i] - x[j]) ** 2)))
            _check(abs(k[i, j] - want) <= 1e-12, f"gram[{i},{j}] off by {k[i, j] - want}")


def _selftest_rbf():
    n = 60
    base = patterns.generate_patterns(n, 1, seed=3).data[0]
    cfg = kernel.KernelConfig(gamma=1.0 / n)
    for d in (0, 1, 5, n):
        other = base.copy()
        other[:d] = -other[:d]
        got = kernel.rbf(base, other, cfg)
        want = float(np.exp(-4.0 * cfg.gamma * d))
        _check(abs(got - want) <= 1e-12, f"rbf at distance {d}: {got} vs {want}")


def _selftest_overlap():
    vec = patterns.generate_patterns(64, 1, seed=11).data[0]
    _check(patterns.overlap(vec, vec) == 1.0, "self overlap must be 1")
    _check(patterns.overlap(vec, -vec) == -1.0, "negation overlap must be -1")
    half = vec.copy()
    half[: len(vec) // 2] *= -1
    _check(patterns.overlap(vec, half) == 0.0, "half-flip overlap must be 0")


def _selftest_corrupt():
    vec = patterns.generate_patterns(50, 1, seed=5).data[0]
    n = len(vec)
    for idx, m0 in enumerate(np.linspace(0.0, 1.0, 11)):
        flips = int(round(n * (1.0 - m0) / 2.0))
        noisy = patterns.corrupt(vec, float(m0), seed=100 + idx)
        _check(
            patterns.overlap(noisy, vec) == (n - 2 * flips) / n,
            f"corrupt overlap mismatch at m0={m0}",
        )


def _selftest_sign_convention():
    model = learning.WeightModel(w=np.zeros((8, 8)), rule="llr")
    state = -np.ones(8, dtype=np.int8)
    _check(
        np.all(recall.step(model, state) == 1),
        "zero local field must resolve to +1",
    )


def _selftest_fixed_point_stop():
    pats = patterns.generate_patterns(80, 3, seed=21)
    model = learning.train_hebbian(pats)
    trace = recall.run(model, pats.data[0], pats.data[0], max_steps=25)
    _check(trace.reached_fixed_point, "low-load clean start should hit a fixed point")
    again = recall.step(model, trace.final)
    _check(np.array_equal(again, trace.final), "reported fixed point is not fixed")


def _selftest_krr_residual():
    pats = patterns.generate_patterns(30, 10, seed=13)
    cfg = learning.TrainConfig()
    model = learning.train_krr(pats, cfg)
    k = kernel.gram_matrix(pats, model.kernel)
    x = pats.data.astype(np.float64)
    lhs = (k + cfg.lam * np.eye(pats.p)) @ model.alpha
    rel = np.linalg.norm(lhs - x) / np.linalg.norm(x)
    _check(rel <= 1e-8, f"solve residual {rel} above 1e-8")


def _selftest_hebbian_oracle():
    pats = patterns.generate_patterns(10, 3, seed=17)
    model = learning.train_hebbian(pats)
    x = pats.data.astype(np.float64)
    n = pats.n
    for i in range(n):
        for j in range(n):
            want = 0.0 if i == j else float(np.sum(x[:, i] * x[:, j])) / n
            _check(
                abs(model.w[i, j] - want) <= 1e-12,
                f"hebbian weight [{i},{j}] mismatch",
            )


def _selftest_csv_roundtrip():
    rows = [
        experiments.ExperimentRow(
            experiment="capacity",
            rule=rule,
            n=100,
            beta=0.3,
            p=30,
            success_rate=rate,
            seed=99,
        )
        for rule, rate in (("hebbian", 0.5), ("krr", 1.0))
    ]
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "rows.csv")
        experiments.write_rows(rows, path)
        back = experiments.read_rows(path)
    _check(back == sorted(rows, key=lambda r: learning.RULES.index(r.rule)), "CSV round-trip changed rows")


def _selftest_pattern_roundtrip():
    pats = patterns.generate_patterns(23, 7, seed=29)
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "pats.txt")
        patterns.save_patterns(pats, path)
        back = patterns.load_patterns(path)
    _check(np.array_equal(back.data, pats.data), "pattern round-trip changed data")


_SELFTEST_CHECKS = (
    ("gram matrix invariants and oracle", _selftest_gram),
    ("rbf distance identity", _selftest_rbf),
    ("overlap identities", _selftest_overlap),
    ("corrupt exact overlap grid", _selftest_corrupt),
    ("sign(0) = +1 convention", _selftest_sign_convention),
    ("fixed-point early stop soundness", _selftest_fixed_point_stop),
    ("krr solve residual", _selftest_krr_residual),
    ("hebbian oracle agreement", _selftest_hebbian_oracle),
    ("csv round-trip", _selftest_csv_roundtrip),
    ("pattern file round-trip", _selftest_pattern_roundtrip),
)


def run_selftest(stream=None):
    """Run every invariant check; returns the number of failures."""
    stream = stream if stream is not None else sys.stdout
    failures = 0
    for name, check in _SELFTEST_CHECKS:
        try:
            check()
        except Exception as exc:  # noqa: BLE001 - report any failure uniformly
            failures += 1
            print(f"FAIL {name}: {exc}", file=stream)
        else:
            print(f"ok   {name}", file=stream)
    total = len(_SELFTEST_CHECKS)
    print(f"{total - failures}/{total} checks passed", file=stream)
    return failures


def _cmd_selftest(_args, _parser):
    return 1 if run_selftest() else 0


_COMMANDS = {
    "capacity": _cmd_capacity,
    "noise": _cmd_noise,
    "timing": _cmd_timing,
    "recall": _cmd_recall,
    "selftest": _cmd_selftest,
}


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    argv = _apply_config(argv, parser)
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args, parser)
    except (
        ValueError,
        OSError,
        TypeError,
        kernel.FactorizationError,
        learning.NonFiniteLossError,
    ) as exc:
        print(f"kernmem: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
