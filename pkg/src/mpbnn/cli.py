"""Command-line experiment runner, microbenchmark, and self-check.

Subcommands:

  toy        train both architectures on the heteroscedastic toy problem
             and dump prediction-band CSVs over [-1, 1]
  uci        run the 20-split benchmark protocol (grid-searched dropout,
             standardized metrics, timed test pass) on one dataset
  benchmark  time single-example forward passes of matched architectures
             and report transcendental call counters
  check      run the MC-oracle and finite-difference self-check suites

All outputs are UTF-8 CSV (comma, '.' decimal, LF) or JSON, deterministic
given --seed except wall-clock timing fields.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import time
from dataclasses import dataclass

import numpy as np

from . import data, mc_oracle, moments, network, objective, training
from .moments import DIAG, FULL
from .network import (
    ARCH_MP_GELU,
    ARCH_RELU,
    HEAD_HETEROSCEDASTIC,
    HEAD_HOMOSCEDASTIC,
    LayerSpec,
)

HEAD_BY_FLAG = {"2": HEAD_HETEROSCEDASTIC, "1": HEAD_HOMOSCEDASTIC}

TOY_DEFAULTS = {"lr": 0.1, "epochs": 1000, "batch": 100, "dropout": 0.001}
UCI_DEFAULTS = {"lr": 0.001, "epochs": 500, "batch": 256}
BENCH_WIDTHS = (20, 64, 256, 1024)


def _fmt(x) -> str:
    return repr(float(x))


def _write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(str(c) if isinstance(c, (str, int)) else _fmt(c) for c in row))
            fh.write("\n")
    return path


@dataclass
class ExperimentResult:
    """One dataset × architecture × configuration protocol run."""

    dataset: str
    n: int
    q: int
    arch: str
    covariance_mode: str
    head: str
    dropout_rate: float
    seed: int
    nll: list
    rmse: list
    runtime_s: float
    nll_mean: float = 0.0
    nll_se: float = 0.0
    rmse_mean: float = 0.0
    rmse_se: float = 0.0

    def __post_init__(self):
        if len(self.nll) != len(self.rmse) or not self.nll:
            raise ValueError("per-split metric lists must align and be non-empty")
        if not self.runtime_s > 0:
            raise ValueError("runtime must be positive")
        k = len(self.nll)
        self.nll_mean = float(np.mean(self.nll))
        self.rmse_mean = float(np.mean(self.rmse))
        self.nll_se = float(np.std(self.nll, ddof=1) / np.sqrt(k)) if k > 1 else 0.0
        self.rmse_se = float(np.std(self.rmse, ddof=1) / np.sqrt(k)) if k > 1 else 0.0

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=1)

    def csv_row(self):
        return [
            self.dataset, self.n, self.q,
            self.nll_mean, self.nll_se, self.rmse_mean, self.rmse_se, self.runtime_s,
        ]


RESULT_CSV_HEADER = [
    "dataset", "n", "q", "nll_mean", "nll_se", "rmse_mean", "rmse_se", "runtime_s",
]


# ---------------------------------------------------------------------------
# toy
# ---------------------------------------------------------------------------


def cmd_toy(out_dir, seed: int = 0, epochs: int = None, lr: float = None,
            batch: int = None, dropout: float = None, n_train: int = 100,
            grid_points: int = 200):
    """Train both architectures on the toy set and write Figure-1-style CSVs."""
    hp = dict(TOY_DEFAULTS)
    if epochs is not None:
        hp["epochs"] = epochs
    if lr is not None:
        hp["lr"] = lr
    if batch is not None:
        hp["batch"] = batch
    if dropout is not None:
        hp["dropout"] = dropout
    os.makedirs(out_dir, exist_ok=True)
    ds = data.toy_generate(n_train, seed=seed)
    written = [
        _write_csv(
            os.path.join(out_dir, "toy_train.csv"),
            ["x", "y"],
            list(zip(ds.features[:, 0], ds.labels)),
        )
    ]
    grid = np.linspace(-1.0, 1.0, grid_points)
    tc = training.TrainConfig(hp["lr"], hp["epochs"], hp["batch"], seed)
    for arch in (ARCH_MP_GELU, ARCH_RELU):
        config = network.build_model(arch, 1, 20, hp["dropout"], FULL, HEAD_HETEROSCEDASTIC)
        params, _ = training.train(config, tc, ds.features, ds.labels)
        with training.single_thread_blas():
            mean, cov = network.forward_batch(config, params, grid[:, None])
        pred_mean, pred_var = objective._predictive_batch(mean, cov, config.head, FULL)
        epi_std = np.sqrt(cov[:, 0, 0])
        alea_std = np.sqrt(np.exp(mean[:, 1] + 0.5 * cov[:, 1, 1]))
        rows = list(zip(grid, pred_mean, np.sqrt(pred_var), epi_std, alea_std))
        written.append(
            _write_csv(
                os.path.join(out_dir, f"toy_{arch}.csv"),
                ["x", "pred_mean", "pred_std", "epistemic_std", "aleatoric_std"],
                rows,
            )
        )
    return written


# ---------------------------------------------------------------------------
# uci
# ---------------------------------------------------------------------------


def load_manifest(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    base = os.path.dirname(os.path.abspath(path))
    for name, entry in manifest.items():
        entry["path"] = os.path.join(base, entry["path"])
    return manifest


def load_manifest_dataset(manifest: dict, name: str) -> data.Dataset:
    """Load one manifest entry and verify its shape against the declared N, Q."""
    if name not in manifest:
        raise ValueError(f"dataset {name!r} not in manifest ({sorted(manifest)})")
    entry = manifest[name]
    ds = data.load_csv(
        entry["path"],
        label_col=entry.get("label_col", -1),
        drop_cols=entry.get("drop_cols", ()),
    )
    ds = data.Dataset(ds.features, ds.labels, name)
    if ds.n != entry["n"] or ds.q != entry["q"]:
        raise ValueError(
            f"{name}: manifest declares N={entry['n']}, Q={entry['q']}, "
            f"file has N={ds.n}, Q={ds.q}"
        )
    return ds


def _final_split_worker(args):
    """Train on one split's full training data, return (test NLL, test RMSE)."""
    (features, labels, train_idx, test_idx, std_fields, arch, mode, head, width,
     rate, tc_fields, run_seed) = args
    std = data.Standardizer(*std_fields)
    x_tr = std.transform_features(features[train_idx])
    y_tr = std.transform_labels(labels[train_idx])
    x_te = std.transform_features(features[test_idx])
    y_te = std.transform_labels(labels[test_idx])
    config = network.build_model(arch, x_tr.shape[1], width, rate, mode, head)
    tc = training.TrainConfig(**{**tc_fields, "seed": run_seed})
    params, _ = training.train(config, tc, x_tr, y_tr)
    res = training.evaluate_model(config, params, x_te, y_te)
    return res["nll"], res["rmse"], [w.tolist() for w in params.weights], [
        b.tolist() for b in params.biases
    ]


def _time_test_pass(config, params, x_test, repetitions: int = 5) -> float:
    """Median wall time of the full test-set forward + predictive pass.

    Public per-example path, single-threaded, one warmup pass."""

    def one_pass():
        for row in x_test:
            mv = network.forward(config, params, row)
            objective.predictive_moments(mv, config.head)

    with training.single_thread_blas():
        one_pass()
        times = []
        for _ in range(repetitions):
            t0 = time.perf_counter()
            one_pass()
            times.append(time.perf_counter() - t0)
    return float(np.median(times))


def run_uci_protocol(ds: data.Dataset, arch: str, mode: str, head: str, seed: int = 0,
                     jobs: int = 1, repeats: int = 20, width: int = 20,
                     epochs: int = None, lr: float = None, batch: int = None,
                     dropout: float = None) -> ExperimentResult:
    """Grid-search the dropout rate, then run the 20-split train/test protocol."""
    tc = training.TrainConfig(
        lr if lr is not None else UCI_DEFAULTS["lr"],
        epochs if epochs is not None else UCI_DEFAULTS["epochs"],
        batch if batch is not None else UCI_DEFAULTS["batch"],
        seed,
    )
    tc_fields = dataclasses.asdict(tc)
    if dropout is None:
        rate = data.grid_search_dropout(
            ds, arch, mode, head, tc, repeats=repeats, seed=seed, jobs=jobs, width=width
        )
    else:
        rate = dropout
    splits = data.make_splits(ds, repeats=repeats, seed=seed)
    tasks = []
    for si, split in enumerate(splits):
        std = split.standardizer
        tasks.append(
            (
                ds.features, ds.labels, split.train_val_idx, split.test_idx,
                (std.feature_mean, std.feature_std, std.label_mean, std.label_std),
                arch, mode, head, width, rate, tc_fields,
                data.derived_seed(seed, 2, si),
            )
        )
    outcomes = data.run_tasks(_final_split_worker, tasks, jobs)
    nll = [o[0] for o in outcomes]
    rmse = [o[1] for o in outcomes]

    # Timing on the first split's trained model; --jobs is irrelevant here
    # (single-threaded by construction).
    config = network.build_model(arch, ds.q, width, rate, mode, head)
    params = network.ParameterSet(
        [np.asarray(w) for w in outcomes[0][2]], [np.asarray(b) for b in outcomes[0][3]]
    )
    std0 = splits[0].standardizer
    x_test = std0.transform_features(ds.features[splits[0].test_idx])
    runtime = _time_test_pass(config, params, x_test)
    return ExperimentResult(
        ds.name, ds.n, ds.q, arch, mode, head, rate, seed, nll, rmse, runtime
    )


def cmd_uci(manifest_path, dataset: str, arch: str, mode: str, head: str, out_dir,
            seed: int = 0, jobs: int = 1, repeats: int = 20, epochs=None, lr=None,
            batch=None, dropout=None) -> ExperimentResult:
    manifest = load_manifest(manifest_path)
    ds = load_manifest_dataset(manifest, dataset)
    result = run_uci_protocol(
        ds, arch, mode, head, seed=seed, jobs=jobs, repeats=repeats,
        epochs=epochs, lr=lr, batch=batch, dropout=dropout,
    )
    os.makedirs(out_dir, exist_ok=True)
    tag = f"{dataset}_{arch}_{mode}_{result.head}"
    with open(os.path.join(out_dir, f"uci_{tag}.json"), "w", encoding="utf-8") as fh:
        fh.write(result.to_json())
    _write_csv(
        os.path.join(out_dir, f"uci_{tag}.csv"), RESULT_CSV_HEADER, [result.csv_row()]
    )
    return result


# ---------------------------------------------------------------------------
# benchmark
# ---------------------------------------------------------------------------


def cmd_benchmark(widths=BENCH_WIDTHS, mode: str = FULL, repetitions: int = 50,
                  seed: int = 0, out_path=None):
    """Time matched single-example forward passes; count erf/exp/sqrt calls.

    Returns one row per width: median ns/pass for both architectures, the
    speedup relu/mp_gelu, and per-pass transcendental counters."""
    rows = []
    rng = np.random.default_rng(seed)
    with training.single_thread_blas():
        for width in widths:
            x = rng.standard_normal(width)
            built = {}
            counts_by_arch = {}
            for arch in (ARCH_MP_GELU, ARCH_RELU):
                config = network.build_model(arch, width, width, 0.05, mode,
                                             HEAD_HETEROSCEDASTIC)
                params = network.init_parameters(config, seed)
                built[arch] = (config, params)
                for _ in range(3):  # warm caches and the allocator
                    network.forward(config, params, x)
                moments.counters.reset()
                network.forward(config, params, x)
                counts_by_arch[arch] = moments.counters.snapshot()
            # interleave timed passes so drift hits both architectures alike
            times = {arch: [] for arch in built}
            for _ in range(repetitions):
                for arch, (config, params) in built.items():
                    t0 = time.perf_counter_ns()
                    network.forward(config, params, x)
                    times[arch].append(time.perf_counter_ns() - t0)
            mp_ns = float(np.median(times[ARCH_MP_GELU]))
            relu_ns = float(np.median(times[ARCH_RELU]))
            mp_counts = counts_by_arch[ARCH_MP_GELU]
            relu_counts = counts_by_arch[ARCH_RELU]
            rows.append(
                {
                    "width": width,
                    "mode": mode,
                    "mp_gelu_ns": mp_ns,
                    "relu_ns": relu_ns,
                    "speedup": relu_ns / mp_ns,
                    "mp_gelu_erf": mp_counts["erf"],
                    "mp_gelu_exp": mp_counts["exp"],
                    "mp_gelu_sqrt": mp_counts["sqrt"],
                    "relu_erf": relu_counts["erf"],
                    "relu_exp": relu_counts["exp"],
                    "relu_sqrt": relu_counts["sqrt"],
                }
            )
    if out_path:
        header = list(rows[0].keys())
        _write_csv(out_path, header, [[r[k] for k in header] for r in rows])
    return rows


# ---------------------------------------------------------------------------
# check
# ---------------------------------------------------------------------------


def _random_case(n, mode, rng, corr=0.45):
    """Well-conditioned random input: |μ/σ| ≤ 2.2 keeps gate rates away from
    0/1 (so the MC oracle stays informative) and the first-order rectifier
    cross-covariance within its documented tolerance."""
    sigma = rng.uniform(0.5, 1.5, n)
    mean = rng.uniform(-2.2, 2.2, n) * sigma
    if mode == FULL:
        a = rng.standard_normal((n, n))
        r0 = a @ a.T
        d = np.sqrt(np.diag(r0))
        r0 = r0 / np.outer(d, d)
        r = corr * r0 + (1.0 - corr) * np.eye(n)
        return moments.MomentVector(mean, r * np.outer(sigma, sigma), FULL)
    return moments.MomentVector(mean, sigma * sigma, DIAG)


def _check_layer_oracle(samples: int, cases: int, seed: int):
    """Compare every layer op against the MC oracle; yields (name, ok, detail)."""
    kinds = (network.DENSE, network.DROPOUT, network.MP_GELU, network.RELU)
    for mode in (FULL, DIAG):
        for kind in kinds:
            rng = np.random.default_rng(
                np.random.SeedSequence((seed, int(mode == FULL), kinds.index(kind)))
            )
            worst = 0.0
            ok = True
            for case in range(cases):
                n = 4
                mv = _random_case(n, mode, rng)
                if kind == network.DENSE:
                    w = rng.standard_normal((3, n))
                    b = rng.standard_normal(3)
                    layer = LayerSpec(kind, in_dim=n, out_dim=3)
                    out = moments.dense_propagate(mv, w, b)
                    est = mc_oracle.mc_layer_moments(
                        layer, mv, samples, data.derived_seed(seed, case), weights=w, bias=b
                    )
                else:
                    layer = LayerSpec(kind, rate=0.13) if kind == network.DROPOUT else LayerSpec(kind)
                    if kind == network.DROPOUT:
                        out = moments.dropout_propagate(mv, 0.13)
                    elif kind == network.MP_GELU:
                        out = moments.mp_gelu_propagate(mv)
                    else:
                        out = moments.relu_propagate(mv)
                    est = mc_oracle.mc_layer_moments(
                        layer, mv, samples, data.derived_seed(seed, case)
                    )
                dev = np.abs(out.mean - est.mean) / np.maximum(est.standard_error_mean, 1e-12)
                worst = max(worst, float(dev.max()))
                if mode == FULL:
                    ac = np.asarray(out.cov)
                    dev_c = np.abs(ac - est.cov) / np.maximum(est.standard_error_cov, 1e-12)
                    eye = np.eye(out.dim, dtype=bool)
                    if kind == network.RELU:
                        sd = np.sqrt(out.variances)
                        scale_ok = np.abs(ac - est.cov) <= 0.15 * np.outer(sd, sd)
                        if not np.all((dev_c <= 4.0) | scale_ok | eye):
                            ok = False
                        worst = max(worst, float(dev_c[eye].max()))
                    else:
                        worst = max(worst, float(dev_c.max()))
                else:
                    dev_v = np.abs(out.variances - np.diag(est.cov)) / np.maximum(
                        np.diagonal(est.standard_error_cov), 1e-12
                    )
                    worst = max(worst, float(dev_v.max()))
            ok = ok and worst <= 4.0
            yield f"moment_oracle {kind} {mode}", ok, f"worst dev {worst:.3f} se"


def _check_objective_oracle(samples: int, cases: int, seed: int):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for case in range(cases):
        mean = rng.uniform(-2.0, 2.0, 2)
        a = rng.standard_normal((2, 2))
        cov = a @ a.T * 0.4 + np.eye(2) * 0.05
        mv = moments.MomentVector(mean, cov, FULL)
        y = rng.uniform(-2.0, 2.0)
        ell = objective.expected_log_likelihood(mv, y)
        est, se = mc_oracle.mc_expected_ll(mv, y, samples, data.derived_seed(seed, 7, case))
        worst = max(worst, abs(ell - est) / max(se, 1e-12))
    yield "objective_oracle eq_ll", worst <= 4.0, f"worst dev {worst:.3f} se"


def _check_gradients(seed: int):
    # Dropout 0.2 keeps head variances well away from the floor, where the
    # objective's curvature would put the FD oracle inside its own noise.
    rng = np.random.default_rng(seed)
    for arch in (ARCH_MP_GELU, ARCH_RELU):
        for mode in (FULL, DIAG):
            for head in (HEAD_HETEROSCEDASTIC, HEAD_HOMOSCEDASTIC):
                config = network.build_model(arch, 4, 6, 0.2, mode, head)
                params = network.init_parameters(config, seed)
                x = rng.standard_normal((3, 4))
                y = rng.standard_normal(3)
                _, grads = training.loss_and_gradients(config, params, x, y)
                worst = 0.0
                ok = True
                h = 1e-5
                for arrs, garrs in ((params.weights, grads.weights),
                                    (params.biases, grads.biases)):
                    for li, w in enumerate(arrs):
                        it = np.nditer(w, flags=["multi_index"])
                        for _ in it:
                            idx = it.multi_index
                            orig = w[idx]
                            w[idx] = orig + h
                            lp, _ = training.loss_and_gradients(config, params, x, y)
                            w[idx] = orig - h
                            lm, _ = training.loss_and_gradients(config, params, x, y)
                            w[idx] = orig
                            fd = (lp - lm) / (2.0 * h)
                            an = garrs[li][idx]
                            if abs(an) < 1e-3:
                                ok = ok and abs(an - fd) < 1e-7
                            else:
                                rel = abs(an - fd) / abs(an)
                                worst = max(worst, rel)
                                ok = ok and rel < 1e-4
                yield f"gradient_fd {arch} {mode} {head}", ok, f"worst rel {worst:.2e}"


def run_self_checks(level: str = "quick", seed: int = 0):
    """All self-check properties as (name, ok, detail) tuples."""
    if level == "quick":
        samples, cases, obj_cases = 10**4, 3, 12
    elif level == "full":
        samples, cases, obj_cases = 10**6, 8, 40
    else:
        raise ValueError(f"unknown check level {level!r}")
    results = []
    results.extend(_check_layer_oracle(samples, cases, seed))
    results.extend(_check_objective_oracle(samples, obj_cases, seed))
    results.extend(_check_gradients(seed))
    return results


def cmd_check(level: str = "quick", seed: int = 0) -> int:
    results = run_self_checks(level, seed)
    failures = 0
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
        failures += 0 if ok else 1
    print(f"{len(results) - failures}/{len(results)} checks passed (level={level})")
    return 0 if failures == 0 else 1


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _resolve(args, config_file: dict, key: str, default):
    """Precedence: CLI flag > config file > default."""
    val = getattr(args, key, None)
    if val is not None:
        return val
    if key in config_file:
        return config_file[key]
    return default


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mpbnn",
        description="Moment-propagation BNN experiments (deterministic, CPU).",
    )
    parser.add_argument("--config", help="JSON file with default option values")
    sub = parser.add_subparsers(dest="command", required=True)

    toy = sub.add_parser("toy", help="toy-data experiment (Figure-1 CSVs)")
    toy.add_argument("--out", required=True)
    toy.add_argument("--seed", type=int)
    toy.add_argument("--epochs", type=int)
    toy.add_argument("--lr", type=float)
    toy.add_argument("--batch", type=int)
    toy.add_argument("--dropout", type=float)

    uci = sub.add_parser("uci", help="20-split benchmark protocol on one dataset")
    uci.add_argument("--manifest", required=True)
    uci.add_argument("--dataset", required=True)
    uci.add_argument("--arch", choices=[ARCH_MP_GELU, ARCH_RELU], required=True)
    uci.add_argument("--cov", choices=[FULL, DIAG])
    uci.add_argument("--head", choices=["2", "1"])
    uci.add_argument("--out", required=True)
    uci.add_argument("--seed", type=int)
    uci.add_argument("--jobs", type=int)
    uci.add_argument("--repeats", type=int)
    uci.add_argument("--epochs", type=int)
    uci.add_argument("--lr", type=float)
    uci.add_argument("--batch", type=int)
    uci.add_argument("--dropout", type=float, help="skip grid search, use this rate")

    bench = sub.add_parser("benchmark", help="forward-pass timing + op counters")
    bench.add_argument("--widths", help="comma-separated, default 20,64,256,1024")
    bench.add_argument("--cov", choices=[FULL, DIAG])
    bench.add_argument("--reps", type=int)
    bench.add_argument("--seed", type=int)
    bench.add_argument("--out", help="CSV output path (default: print)")

    check = sub.add_parser("check", help="MC-oracle + gradient self-check")
    check.add_argument("--level", choices=["quick", "full"])
    check.add_argument("--seed", type=int)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = {}
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    try:
        if args.command == "toy":
            written = cmd_toy(
                args.out,
                seed=_resolve(args, cfg, "seed", 0),
                epochs=_resolve(args, cfg, "epochs", None),
                lr=_resolve(args, cfg, "lr", None),
                batch=_resolve(args, cfg, "batch", None),
                dropout=_resolve(args, cfg, "dropout", None),
            )
            for path in written:
                print(path)
            return 0
        if args.command == "uci":
            result = cmd_uci(
                args.manifest,
                args.dataset,
                args.arch,
                _resolve(args, cfg, "cov", FULL),
                HEAD_BY_FLAG[_resolve(args, cfg, "head", "2")],
                args.out,
                seed=_resolve(args, cfg, "seed", 0),
                jobs=_resolve(args, cfg, "jobs", os.cpu_count() or 1),
                repeats=_resolve(args, cfg, "repeats", 20),
                epochs=_resolve(args, cfg, "epochs", None),
                lr=_resolve(args, cfg, "lr", None),
                batch=_resolve(args, cfg, "batch", None),
                dropout=_resolve(args, cfg, "dropout", None),
            )
            print(
                f"{result.dataset} {result.arch} {result.covariance_mode} "
                f"head={result.head} rate={result.dropout_rate}: "
                f"NLL {result.nll_mean:.3f} ± {result.nll_se:.3f}, "
                f"RMSE {result.rmse_mean:.3f} ± {result.rmse_se:.3f}, "
                f"runtime {result.runtime_s:.4f}s"
            )
            return 0
        if args.command == "benchmark":
            widths = _resolve(args, cfg, "widths", None)
            widths = (
                tuple(int(w) for w in widths.split(","))
                if isinstance(widths, str)
                else (tuple(widths) if widths else BENCH_WIDTHS)
            )
            rows = cmd_benchmark(
                widths=widths,
                mode=_resolve(args, cfg, "cov", FULL),
                repetitions=_resolve(args, cfg, "reps", 50),
                seed=_resolve(args, cfg, "seed", 0),
                out_path=args.out,
            )
            header = list(rows[0].keys())
            print(",".join(header))
            for row in rows:
                print(",".join(str(row[k]) for k in header))
            return 0
        if args.command == "check":
            return cmd_check(
                level=_resolve(args, cfg, "level", "quick"),
                seed=_resolve(args, cfg, "seed", 0),
            )
    except (ValueError, FloatingPointError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    sys.exit(main())
