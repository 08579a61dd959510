"""Command-line entry point.

Four subcommands: ``generate`` (synthetic dataset -> CSV), ``estimate``
(train once, print one error estimate), ``benchmark`` (repeated-trial
bias/variance/RMS and timing tables), and ``calibrate`` (kappa sweep).

Each run reads one flat key-value config file (``key = value`` lines,
``#`` comments); unknown keys are rejected.  Flags override config values
(--seed, --workers, and repeatable --set KEY=VALUE).  The config text is
echoed verbatim into ``manifest.txt`` next to the outputs.

Exit codes: 0 ok, 2 configuration problem, 3 I/O problem, 4 numeric or
estimation failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .calibration import CalibrationSpec, calibrate_kappa
from .classifiers import TrainingConfig, train
from .dataset import generate_synthetic, load_csv, model_from_config, save_csv
from .estimators import (
    BolsteringSpec,
    PosteriorSpec,
    ResamplingSpec,
    bolstered_posterior_resub,
    bolstered_resub,
    bootstrap_zero,
    cross_validation,
    knn_posterior_resub,
    resubstitution,
    semi_bolstered_resub,
    test_set,
)
from .exceptions import InvalidSpecError
from .harness import ESTIMATOR_IDS, EstimatorConfig, ExperimentSpec, run_experiment
from .seeding import derive_seed

_MODEL_KEYS = {"d", "d_noise", "blocks", "rho", "delta", "sigma2", "priors"}
_CLASSIFIER_KEYS = {"rule", "C", "gamma", "min_leaf", "knn_k"}
_ESTIMATOR_KEYS = {"estimator", "kernel", "k", "folds", "B", "M", "kappa"}

_ALLOWED_KEYS = {
    "generate": _MODEL_KEYS | {"n", "seed"},
    "estimate": {"dataset", "test_dataset", "seed"} | _CLASSIFIER_KEYS | _ESTIMATOR_KEYS,
    "benchmark": _MODEL_KEYS
    | _CLASSIFIER_KEYS
    | (_ESTIMATOR_KEYS - {"estimator"})
    | {"estimators", "sample_sizes", "trials", "test_size", "seed", "workers"},
    "calibrate": {
        "dataset",
        "seed",
        "kernel",
        "M",
        "r",
        "holdout_fraction",
        "step",
        "patience",
        "kappa_cap",
        "allow_downward",
    }
    | _CLASSIFIER_KEYS,
}


def _parse_config_text(text: str) -> dict[str, str]:
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidSpecError(f"config line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        value = value.strip()
        if not key or key in values:
            raise InvalidSpecError(f"config line {lineno}: bad or duplicate key {key!r}")
        values[key] = value
    return values


def _check_keys(command: str, cfg: dict[str, str]) -> None:
    unknown = sorted(set(cfg) - _ALLOWED_KEYS[command])
    if unknown:
        raise InvalidSpecError(
            f"unknown config key(s) for {command}: {', '.join(unknown)}"
        )


def _bool(value: str) -> bool:
    lowered = value.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise InvalidSpecError(f"expected a boolean, got {value!r}")


def _training_config(cfg: dict[str, str], seed: int) -> TrainingConfig:
    if "rule" not in cfg:
        raise InvalidSpecError("config key 'rule' is required")
    return TrainingConfig(
        rule=cfg["rule"],
        C=float(cfg.get("C", "1.0")),
        gamma=float(cfg["gamma"]) if "gamma" in cfg else None,
        min_leaf=int(cfg.get("min_leaf", "5")),
        k=int(cfg.get("knn_k", "3")),
        seed=seed,
    )


def _bolstering_spec(cfg: dict[str, str]) -> BolsteringSpec:
    return BolsteringSpec(
        family=cfg.get("kernel", "spherical"),
        kappa=float(cfg.get("kappa", "1.0")),
        mc_samples=int(cfg.get("M", "100")),
    )


def _write_manifest(out_dir: Path, command: str, config_text: str, overrides: dict) -> None:
    lines = [f"command = {command}"]
    for key, value in overrides.items():
        lines.append(f"override {key} = {value}")
    body = "\n".join(lines) + "\n\n# --- config file (verbatim) ---\n" + config_text
    (out_dir / "manifest.txt").write_text(body, encoding="utf-8")


# ---------------------------------------------------------------------------
# subcommands


def _cmd_generate(cfg: dict[str, str], out_dir: Path, seed: int) -> int:
    model = model_from_config({k: v for k, v in cfg.items() if k in _MODEL_KEYS})
    if "n" not in cfg:
        raise InvalidSpecError("config key 'n' is required")
    ds = generate_synthetic(model, int(cfg["n"]), seed)
    save_csv(ds, out_dir / "dataset.csv")
    print(f"wrote {out_dir / 'dataset.csv'} ({ds.n} rows, {ds.d} features)")
    return 0


def _cmd_estimate(cfg: dict[str, str], out_dir: Path, seed: int) -> int:
    if "dataset" not in cfg:
        raise InvalidSpecError("config key 'dataset' is required")
    if "estimator" not in cfg:
        raise InvalidSpecError("config key 'estimator' is required")
    name = cfg["estimator"]
    if name not in ESTIMATOR_IDS:
        raise InvalidSpecError(f"unknown estimator {name!r}; expected one of {ESTIMATOR_IDS}")
    ds = load_csv(cfg["dataset"])
    config = _training_config(cfg, seed)
    clf = train(config, ds)
    if name == "resub":
        est = resubstitution(clf, ds)
    elif name == "bolster":
        est = bolstered_resub(clf, ds, _bolstering_spec(cfg), derive_seed(seed, "mc"))
    elif name == "semi_bolster":
        est = semi_bolstered_resub(clf, ds, _bolstering_spec(cfg), derive_seed(seed, "mc"))
    elif name == "knnpp":
        est = knn_posterior_resub(clf, ds, PosteriorSpec(int(cfg.get("k", "3"))))
    elif name == "bolster_knnpp":
        est = bolstered_posterior_resub(
            clf,
            ds,
            _bolstering_spec(cfg),
            PosteriorSpec(int(cfg.get("k", "3"))),
            derive_seed(seed, "mc"),
        )
    elif name == "cv":
        est = cross_validation(
            config,
            ds,
            ResamplingSpec(folds=int(cfg.get("folds", "10")), seed=derive_seed(seed, "cv")),
        )
    elif name == "boot0":
        est = bootstrap_zero(
            config,
            ds,
            ResamplingSpec(replicates=int(cfg.get("B", "100")), seed=derive_seed(seed, "boot")),
        )
    else:  # testset
        if "test_dataset" not in cfg:
            raise InvalidSpecError("estimator=testset needs config key 'test_dataset'")
        est = test_set(clf, load_csv(cfg["test_dataset"]))
    line = f"estimator={est.estimator_id} value={est.value!r} seed={seed}"
    print(line)
    for warning in est.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    (out_dir / "estimate.txt").write_text(line + "\n", encoding="utf-8")
    return 0


def _cmd_benchmark(cfg: dict[str, str], out_dir: Path, seed: int, workers: int) -> int:
    model = model_from_config({k: v for k, v in cfg.items() if k in _MODEL_KEYS})
    config = _training_config(cfg, seed)
    if "estimators" not in cfg or "sample_sizes" not in cfg:
        raise InvalidSpecError("config keys 'estimators' and 'sample_sizes' are required")
    test_size = int(cfg.get("test_size", "5000"))
    estimators = []
    for name in (s.strip() for s in cfg["estimators"].split(",")):
        estimators.append(
            EstimatorConfig(
                name=name,
                kernel=cfg.get("kernel", "spherical"),
                kappa=float(cfg.get("kappa", "1.0")),
                mc_samples=int(cfg.get("M", "100")),
                k=int(cfg.get("k", "3")),
                folds=int(cfg.get("folds", "10")),
                replicates=int(cfg.get("B", "100")),
                test_size=test_size,
            )
        )
    spec = ExperimentSpec(
        model=model,
        config=config,
        estimators=tuple(estimators),
        sample_sizes=tuple(int(s) for s in cfg["sample_sizes"].split(",")),
        trials=int(cfg.get("trials", "200")),
        test_size=test_size,
        seed=seed,
    )
    result = run_experiment(spec, workers=workers)
    result.write_stats_csv(out_dir / "stats.csv")
    result.write_timing_csv(out_dir / "timing.csv")
    print(f"wrote {out_dir / 'stats.csv'} and {out_dir / 'timing.csv'}")
    # informational only: hardware-dependent, never asserted
    for n in spec.sample_sizes:
        rows = sorted(
            (rec.median_ms(), name) for (name, size), rec in result.records.items() if size == n
        )
        ordering = " < ".join(f"{name}({ms:.2f}ms)" for ms, name in rows)
        print(f"timing n={n}: {ordering}")
    return 0


def _cmd_calibrate(cfg: dict[str, str], out_dir: Path, seed: int) -> int:
    if "dataset" not in cfg:
        raise InvalidSpecError("config key 'dataset' is required")
    ds = load_csv(cfg["dataset"])
    config = _training_config(cfg, seed)
    bspec = BolsteringSpec(
        family=cfg.get("kernel", "spherical"), mc_samples=int(cfg.get("M", "100"))
    )
    cspec = CalibrationSpec(
        repetitions=int(cfg.get("r", "1")),
        holdout_fraction=float(cfg.get("holdout_fraction", "0.2")),
        step=float(cfg.get("step", "0.1")),
        patience=int(cfg.get("patience", "2")),
        kappa_cap=float(cfg.get("kappa_cap", "10.0")),
        allow_downward=_bool(cfg.get("allow_downward", "false")),
        seed=seed,
    )
    result = calibrate_kappa(config, ds, bspec, cspec)
    with open(out_dir / "calibration.csv", "w", encoding="utf-8") as fh:
        fh.write("kappa,rough_bias\n")
        for kappa, bias in result.visited:
            fh.write(f"{kappa!r},{bias!r}\n")
    print(f"kappa_star={result.kappa!r}")
    if result.truncated:
        print("warning: search hit the kappa grid boundary", file=sys.stderr)
    return 0


# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="errest", description="classification error estimation toolkit"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for command, blurb in (
        ("generate", "draw a synthetic dataset and write dataset.csv"),
        ("estimate", "train once and print a single error estimate"),
        ("benchmark", "repeated-trial bias/variance/RMS and timing tables"),
        ("calibrate", "sweep the kernel width multiplier kappa"),
    ):
        p = sub.add_parser(command, help=blurb)
        p.add_argument("--config", required=True, help="flat key = value config file")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument(
            "--set",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="override any config key (repeatable)",
        )
        if command == "benchmark":
            p.add_argument("--workers", type=int, default=None, help="parallel trial workers")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)

    try:
        config_text = Path(args.config).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 3

    overrides: dict[str, str] = {}
    try:
        cfg = _parse_config_text(config_text)
        for item in args.set:
            if "=" not in item:
                raise InvalidSpecError(f"--set expects KEY=VALUE, got {item!r}")
            key, value = item.split("=", 1)
            cfg[key.strip()] = value.strip()
            overrides[key.strip()] = value.strip()
        if args.seed is not None:
            cfg["seed"] = str(args.seed)
            overrides["seed"] = str(args.seed)
        _check_keys(args.command, cfg)
        seed = int(cfg.get("seed", "0"))
        workers = 1
        if args.command == "benchmark":
            workers = args.workers if args.workers is not None else int(cfg.get("workers", "1"))
            if args.workers is not None:
                overrides["workers"] = str(args.workers)
    except (InvalidSpecError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    try:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        _write_manifest(out_dir, args.command, config_text, overrides)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3

    try:
        if args.command == "generate":
            return _cmd_generate(cfg, out_dir, seed)
        if args.command == "estimate":
            return _cmd_estimate(cfg, out_dir, seed)
        if args.command == "benchmark":
            return _cmd_benchmark(cfg, out_dir, seed, workers)
        return _cmd_calibrate(cfg, out_dir, seed)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except InvalidSpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
