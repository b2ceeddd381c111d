"""Experiment runner.

Every verb reads a sectioned INI file (``--config``). Unknown sections or keys
are rejected before any work starts. Output bundles are directories of CSV
files plus ``manifest.json``; wall-clock times and timestamps appear only in
the manifest, so reruns with the same config and seed give identical CSVs.

Exit codes: 0 success, 2 configuration or data error, 3 oracle budget
exhausted, 4 remote oracle unreachable.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import logging
import shutil
import signal
import sys
import time
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import analysis, craft, defense
from .data import DataFormatError, LabeledDataset, load_csv, load_mnist, split, synth_blobs, take_seed_set
from .models import LogisticRegression, TrainingConfig, get_architecture, load_model, mlp, save_model, train_sgd
from .ndcore import SeededRng
from .oracle import BudgetExhausted, OracleError, OracleHandle, RemoteUnreachable, serve
from .substitute import SubstituteBudgetExhausted, SubstituteConfig, train_substitute

log = logging.getLogger("blackbox_attack")

EXIT_OK, EXIT_CONFIG, EXIT_BUDGET, EXIT_REMOTE = 0, 2, 3, 4


class ConfigError(ValueError):
    pass


def _floats(s):
    return [float(v) for v in s.replace(",", " ").split()]


def _opt_int(s):
    return None if s.strip().lower() in ("", "none") else int(s)


def _opt_float(s):
    return None if s.strip().lower() in ("", "none") else float(s)


# section -> key -> (parser, default)
SCHEMA = {
    "run": {
        "seed": (int, 0),
        "out": (str, "run"),
        "budget": (_opt_int, None),
        "oracle_url": (str, ""),
    },
    "data": {
        "source": (str, "mnist"),  # mnist | csv | synthetic
        "mnist_dir": (str, ""),
        "train_csv": (str, ""),
        "test_csv": (str, ""),
        "train_size": (_opt_int, None),
        "classes": (int, 10),
        "dims": (int, 16),
        "per_class": (int, 200),
        "spread": (float, 0.1),
        "test_fraction": (float, 0.25),
    },
    "oracle": {
        "kind": (str, "A"),
        "model": (str, ""),
        "epochs": (int, 6),
        "learning_rate": (float, 1e-2),
        "momentum": (float, 0.9),
        "batch_size": (int, 32),
    },
    "substitute": {
        "arch": (str, "A"),
        "seeds": (int, 150),
        "lambda": (float, 0.1),
        "tau": (_opt_int, None),
        "sigma": (_opt_int, None),
        "kappa": (_opt_int, None),
        "max_rho": (int, 6),
        "epochs": (int, 10),
        "learning_rate": (float, 1e-2),
        "momentum": (float, 0.9),
        "batch_size": (int, 32),
        "holdout": (_opt_int, None),
    },
    "craft": {
        "method": (str, "fgsm"),  # fgsm | jsma | both
        "fgsm_eps": (_floats, [0.05, 0.1, 0.2, 0.25, 0.3, 0.5, 0.7, 0.9]),
        "jsma_upsilon": (_floats, [0.07, 0.14, 0.29]),
        "jsma_epsilon": (float, 1.0),
        "samples": (_opt_int, None),
        "jsma_samples": (int, 200),
    },
    "defense": {
        "mode": (str, "both"),  # adversarial | distillation | both
        "train_eps": (_floats, [0.15, 0.3]),
        "temperatures": (_floats, [5.0, 10.0, 100.0]),
        "attack_eps": (_floats, [0.3, 0.4]),
        "distill_learning_rate": (_opt_float, None),
        "samples": (_opt_int, 2000),
    },
    "analyze": {
        "samples": (_opt_int, None),
        "baseline_seed": (int, 0),
    },
}

CHOICES = {
    ("data", "source"): {"mnist", "csv", "synthetic"},
    ("craft", "method"): {"fgsm", "jsma", "both"},
    ("defense", "mode"): {"adversarial", "distillation", "both"},
}


@dataclass
class Settings:
    values: dict
    text: str  # canonical echo of the effective configuration

    def __getitem__(self, section):
        return self.values[section]


def load_config(path=None, overrides=None) -> Settings:
    """Parse and fully validate an INI file; ``overrides`` maps
    ``(section, key)`` to a raw string value."""
    cp = configparser.ConfigParser(interpolation=None)
    if path is not None:
        try:
            with open(path) as f:
                cp.read_file(f)
        except (OSError, configparser.Error) as e:
            raise ConfigError(f"cannot read config {path}: {e}") from e
    for (section, key), raw in (overrides or {}).items():
        if not cp.has_section(section):
            cp.add_section(section)
        cp.set(section, key, str(raw))
    values = {}
    for section in cp.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        for key in cp[section]:
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
    for section, keys in SCHEMA.items():
        values[section] = {}
        for key, (parse, default) in keys.items():
            if cp.has_option(section, key):
                raw = cp.get(section, key)
                try:
                    v = parse(raw)
                except ValueError as e:
                    raise ConfigError(f"[{section}] {key} = {raw!r}: {e}") from e
            else:
                v = default
            allowed = CHOICES.get((section, key))
            if allowed and v not in allowed:
                raise ConfigError(f"[{section}] {key} must be one of {sorted(allowed)}")
            values[section][key] = v
    _check_ranges(values)
    echo = configparser.ConfigParser(interpolation=None)
    for section, keys in values.items():
        echo[section] = {k: _fmt(v) for k, v in keys.items()}
    buf = io.StringIO()
    echo.write(buf)
    return Settings(values, buf.getvalue())


def _fmt(v):
    if v is None:
        return "none"
    if isinstance(v, list):
        return ", ".join(repr(x) for x in v)
    return str(v)


def _check_ranges(v):
    s = v["substitute"]
    if s["lambda"] <= 0 or s["max_rho"] < 0 or s["seeds"] < 1:
        raise ConfigError("[substitute] needs lambda > 0, max_rho >= 0, seeds >= 1")
    if (s["sigma"] is None) != (s["kappa"] is None):
        raise ConfigError("[substitute] sigma and kappa must be given together")
    for e in v["craft"]["fgsm_eps"] + v["defense"]["train_eps"] + v["defense"]["attack_eps"]:
        if not 0 < e <= 1:
            raise ConfigError(f"epsilon {e} outside (0, 1]")
    for u in v["craft"]["jsma_upsilon"]:
        if not 0 < u <= 1:
            raise ConfigError(f"upsilon {u} outside (0, 1]")
    if any(t < 1 for t in v["defense"]["temperatures"]):
        raise ConfigError("temperatures must be >= 1")
    if v["run"]["budget"] is not None and v["run"]["budget"] < 1:
        raise ConfigError("[run] budget must be positive")


# -- helpers -----------------------------------------------------------------


def load_data(settings: Settings, rng: SeededRng) -> tuple[LabeledDataset, LabeledDataset]:
    d = settings["data"]
    if d["source"] == "mnist":
        directory = d["mnist_dir"] or None
        train, test = load_mnist("train", directory), load_mnist("test", directory)
    elif d["source"] == "csv":
        if not d["train_csv"] or not d["test_csv"]:
            raise ConfigError("[data] csv source needs train_csv and test_csv")
        train = load_csv(d["train_csv"], classes=d["classes"])
        test = load_csv(d["test_csv"], classes=d["classes"], image_shape=train.image_shape)
    else:
        full = synth_blobs(d["classes"], d["dims"], d["per_class"], d["spread"], rng.child(0))
        test, train = split(full, [d["test_fraction"], 1 - d["test_fraction"]], rng.child(1))
    if d["train_size"] is not None:
        train = train.head(d["train_size"])
    return train, test


def _training(section: dict, rng: SeededRng) -> TrainingConfig:
    return TrainingConfig(epochs=section["epochs"], learning_rate=section["learning_rate"],
                          momentum=section["momentum"], batch_size=section["batch_size"], rng=rng)


def _oracle_kind(kind: str):
    aliases = {"lr": "logistic_regression", "svm": "linear_svm", "dt": "decision_tree"}
    return aliases.get(kind.lower(), kind)


def _network_arch(kind: str, data: LabeledDataset):
    """Registry id, ``lr``, or ``mlp-<width>-<width>...`` sized to ``data``."""
    k = kind.lower()
    if k in ("lr", "logistic_regression"):
        return LogisticRegression.architecture(data.dim, data.classes)
    if k.startswith("mlp"):
        try:
            hidden = tuple(int(h) for h in k.split("-")[1:]) or (200, 200)
        except ValueError as e:
            raise ConfigError(f"bad mlp spec {kind!r}: use mlp-<width>-<width>") from e
        return mlp(data.dim, data.classes, hidden, id=k)
    try:
        return get_architecture(kind)
    except KeyError as e:
        raise ConfigError(str(e)) from e


def train_oracle(settings: Settings, train: LabeledDataset, rng: SeededRng):
    o = settings["oracle"]
    kind = _oracle_kind(o["kind"])
    if kind not in ("logistic_regression", "linear_svm", "decision_tree", "knn"):
        kind = _network_arch(kind, train)
    return train_sgd(kind, train, _training(o, rng))


def _substitute_config(settings: Settings, rng: SeededRng, data: LabeledDataset) -> SubstituteConfig:
    s = settings["substitute"]
    arch = "LR" if s["arch"].lower() == "lr" else _network_arch(s["arch"], data)
    return SubstituteConfig(
        arch=arch, lam=s["lambda"], tau=s["tau"], sigma=s["sigma"], kappa=s["kappa"],
        max_rho=s["max_rho"], inner_train=_training(s, rng.child(0)), rng=rng.child(1),
    )


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in row])


def _write_manifest(out: Path, settings: Settings, started: float, **extra):
    data = {
        "config": settings.values,
        "seed": settings["run"]["seed"],
        "started": time.strftime("%Y-%m-%dT%H:%M:%S", time.localtime(started)),
        "wall_time_s": round(time.time() - started, 3),
    }
    data.update(extra)
    (out / "manifest.json").write_text(json.dumps(data, indent=2, sort_keys=True, default=str))


def _prepare_out(settings: Settings) -> Path:
    out = Path(settings["run"]["out"])
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.ini").write_text(settings.text)
    return out


def _open_oracle(settings: Settings, out: Path | None = None) -> OracleHandle:
    url = settings["run"]["oracle_url"]
    budget = settings["run"]["budget"]
    if url:
        return OracleHandle.remote(url, budget)
    path = settings["oracle"]["model"]
    if not path:
        raise ConfigError("no oracle: set [oracle] model or --oracle-url")
    try:
        model = load_model(path)
    except FileNotFoundError as e:
        raise ConfigError(f"oracle model not found: {path}") from e
    if out is not None:
        shutil.copyfile(path, out / "oracle.model")
    return OracleHandle.local(model, budget)


# -- verbs ---------------------------------------------------------------------


def cmd_train_oracle(settings: Settings) -> int:
    started = time.time()
    out = _prepare_out(settings)
    rng = SeededRng(settings["run"]["seed"])
    train, test = load_data(settings, rng.child(0))
    model = train_oracle(settings, train, rng.child(1))
    save_model(model, out / "oracle.model")
    acc = float(np.mean(model.predict(test.inputs) == test.labels))
    _write_csv(out / "metrics.csv", ["kind", "train_samples", "test_samples", "test_accuracy"],
               [[settings["oracle"]["kind"], len(train), len(test), acc]])
    _write_manifest(out, settings, started, test_accuracy=acc, train=train.manifest(), test=test.manifest())
    print(f"oracle {settings['oracle']['kind']}: test accuracy {acc:.4f} -> {out / 'oracle.model'}")
    return EXIT_OK


def cmd_serve_oracle(model_path, bind: str, budget, ledger_path) -> int:
    try:
        model = load_model(model_path)
    except FileNotFoundError as e:
        raise ConfigError(f"model not found: {model_path}") from e
    try:
        service = serve(model, bind, budget, ledger_path)
    except OSError as e:
        raise ConfigError(f"cannot bind {bind}: {e}") from e

    def stop(signum, frame):
        raise KeyboardInterrupt

    signal.signal(signal.SIGTERM, stop)
    print(f"serving {model_path} at {service.url}", flush=True)
    try:
        while True:
            time.sleep(3600)
    except KeyboardInterrupt:
        pass
    finally:
        service.shutdown()
        log.info("served %d queries", service.total_queries)
    return EXIT_OK


def cmd_attack(settings: Settings) -> int:
    started = time.time()
    out = _prepare_out(settings)
    rng = SeededRng(settings["run"]["seed"])
    _, test = load_data(settings, rng.child(0))
    oracle = _open_oracle(settings, out)
    evaluation = oracle.evaluation_view()
    s = settings["substitute"]
    seeds, eval_set = take_seed_set(test, rng.child(2), n_total=s["seeds"])
    holdout = eval_set.inputs if s["holdout"] is None else eval_set.inputs[: s["holdout"]]
    cfg = _substitute_config(settings, rng.child(3), test)
    failed = None
    try:
        run = train_substitute(oracle, seeds, cfg, holdout=holdout, eval_oracle=evaluation)
    except SubstituteBudgetExhausted as e:
        run, failed = e.run, str(e)
    _write_csv(out / "substitute.csv",
               ["rho", "set_size", "new_queries", "cumulative_queries", "step", "augmented_from", "agreement"],
               [[r.rho, r.set_size, r.new_queries, r.cumulative_queries,
                 "" if r.step is None else float(r.step), r.augmented_from,
                 "" if r.agreement is None else float(r.agreement)] for r in run.history])
    ledgers = {"attack": oracle.ledger.to_dict(), "evaluation": evaluation.ledger.to_dict()}
    if failed is not None or run.model is None:
        (out / "FAILED").write_text((failed or "no substitute") + "\n")
        _write_manifest(out, settings, started, failed=True, reason=failed, ledgers=ledgers)
        print(f"attack failed: {failed}", file=sys.stderr)
        return EXIT_BUDGET
    F = run.model
    save_model(F, out / "substitute.model")

    c = settings["craft"]
    X = eval_set.inputs if c["samples"] is None else eval_set.inputs[: c["samples"]]
    y_true = eval_set.labels[: len(X)]
    # crafting labels: oracle's cached label when known, else the substitute's
    sub_pred = F.predict(X)
    y_craft = np.array([lab if (lab := oracle.cached_label(x)) is not None else p for x, p in zip(X, sub_pred)])

    if c["method"] in ("fgsm", "both"):
        rows = []
        for eps in c["fgsm_eps"]:
            batch = craft.fgsm_batch(F, X, y_craft, eps, source_labels=y_true)
            succ = analysis.success_rate(F, batch)
            trans = analysis.transferability(evaluation, batch)
            rows.append([eps, len(batch), succ, trans])
            cm = analysis.confusion(evaluation, batch, classes=oracle.classes, tag=f"fgsm eps={eps}")
            (out / f"confusion_fgsm_{eps:g}.csv").write_text(cm.to_csv())
        _write_csv(out / "fgsm.csv", ["epsilon", "samples", "success_rate", "transferability"], rows)

    if c["method"] in ("jsma", "both"):
        n = min(c["jsma_samples"], len(X))
        targets = craft.random_targets(y_true[:n], oracle.classes, rng.child(4))
        batches = craft.jsma_sweep(F, X[:n], targets, c["jsma_upsilon"], c["jsma_epsilon"], source_labels=y_true[:n])
        rows = []
        for u, batch in zip(c["jsma_upsilon"], batches):
            rows.append([u, c["jsma_epsilon"], len(batch), analysis.success_rate(F, batch),
                         analysis.transferability(evaluation, batch),
                         float(batch.components_changed.mean()), int(batch.exhausted.sum()),
                         craft.l1_budget(c["jsma_epsilon"], u)])
        _write_csv(out / "jsma.csv", ["upsilon", "epsilon", "samples", "success_rate", "transferability",
                                      "mean_components_changed", "exhausted", "l1_budget"], rows)

    ledgers = {"attack": oracle.ledger.to_dict(), "evaluation": evaluation.ledger.to_dict()}
    _write_csv(out / "ledger.csv", ["ledger", "total_queries", "budget"],
               [[k, v["total_queries"], "" if v["budget"] is None else v["budget"]] for k, v in ledgers.items()])
    _write_manifest(out, settings, started, failed=False, ledgers=ledgers,
                    substitute=run.manifest(), eval_samples=len(X))
    print(f"attack bundle written to {out} ({oracle.ledger.total_queries} oracle queries)")
    return EXIT_OK


def cmd_defense(settings: Settings) -> int:
    started = time.time()
    out = _prepare_out(settings)
    rng = SeededRng(settings["run"]["seed"])
    train, test = load_data(settings, rng.child(0))
    s, d = settings["substitute"], settings["defense"]
    seeds, eval_set = take_seed_set(test, rng.child(2), n_total=s["seeds"])
    n = len(eval_set) if d["samples"] is None else min(d["samples"], len(eval_set))
    X, y = eval_set.inputs[:n], eval_set.labels[:n]
    o = settings["oracle"]
    arch = _network_arch(o["kind"], train)
    queries = {}

    def attack(model, tag, stream):
        handle = OracleHandle.local(model, settings["run"]["budget"])
        F = train_substitute(handle, seeds, _substitute_config(settings, rng.child(stream), test)).model
        queries[tag] = handle.ledger.total_queries
        return F

    base_cfg = _training(o, rng.child(1))
    baseline = train_sgd(arch, train, base_cfg)
    # a softmax at temperature T shrinks parameter gradients by 1/T
    distill_cfg = base_cfg if d["distill_learning_rate"] is None else replace(
        base_cfg, learning_rate=d["distill_learning_rate"])
    base_reports = defense.evaluate_defense(baseline, attack(baseline, "baseline", 10), X, y,
                                            d["attack_eps"], "undefended")
    if d["mode"] in ("adversarial", "both"):
        reports = list(base_reports)
        for i, e in enumerate(d["train_eps"]):
            model = defense.adversarial_train(arch, train, defense.AdvTrainConfig(e, base_cfg))
            tag = f"{e!r}"
            reports += defense.evaluate_defense(model, attack(model, f"adv_{tag}", 20 + i), X, y,
                                                d["attack_eps"], tag)
        (out / "adversarial_training.csv").write_text(defense.reports_csv(reports, "eps_train"))
    if d["mode"] in ("distillation", "both"):
        reports = list(base_reports)
        for i, T in enumerate(d["temperatures"]):
            model = defense.distill_train(arch, train, defense.DistillConfig(T, distill_cfg))
            tag = f"{T!r}"
            reports += defense.evaluate_defense(model, attack(model, f"distill_{tag}", 40 + i), X, y,
                                                d["attack_eps"], tag)
        (out / "distillation.csv").write_text(defense.reports_csv(reports, "temperature"))
    _write_manifest(out, settings, started, substitute_queries=queries, eval_samples=n)
    print(f"defense bundle written to {out}")
    return EXIT_OK


def cmd_analyze(settings: Settings, run_dirs, out=None) -> int:
    """Sign-matrix study for each attack bundle; ``out`` defaults to
    ``<first run dir>/analysis``."""
    started = time.time()
    a = settings["analyze"]
    rows, per_dir = [], []
    for i, rd in enumerate(run_dirs):
        rd = Path(rd)
        sub_path, orc_path = rd / "substitute.model", rd / "oracle.model"
        for p in (sub_path, orc_path):
            if not p.exists():
                raise ConfigError(f"{rd}: missing {p.name}")
        run_settings = load_config(rd / "config.ini") if (rd / "config.ini").exists() else settings
        rng = SeededRng(run_settings["run"]["seed"])
        _, test = load_data(run_settings, rng.child(0))
        _, eval_set = take_seed_set(test, rng.child(2), n_total=run_settings["substitute"]["seeds"])
        if a["samples"] is not None:
            eval_set = eval_set.head(a["samples"])
        F, O = load_model(sub_path), load_model(orc_path)
        shape = eval_set.image_shape
        s1 = analysis.sign_sequence(F, eval_set.inputs, eval_set.labels, shape, "substitute")
        s2 = analysis.sign_sequence(O, eval_set.inputs, eval_set.labels, shape, "oracle")
        freq = analysis.frequencies(s1, s2)
        rows.append((f"{rd.name}/substitute", f"{rd.name}/oracle", analysis.chi_square(freq)))
        base_rng = SeededRng(a["baseline_seed"], stream_id=i)
        r1 = analysis.random_sign_sequence(len(s1), s1.dims, base_rng.child(0))
        r2 = analysis.random_sign_sequence(len(s1), s1.dims, base_rng.child(1))
        rows.append((f"{rd.name}/random_a", f"{rd.name}/random_b", analysis.chi_square(analysis.frequencies(r1, r2))))
        per_dir.append((rd, s1, s2, freq, eval_set.labels))
    out = Path(out) if out else Path(run_dirs[0]) / "analysis"
    out.mkdir(parents=True, exist_ok=True)
    for rd, s1, s2, freq, labels in per_dir:
        agree = np.mean(s1.matrices == s2.matrices, axis=0)
        _write_grid(out / f"{rd.name}_agreement.csv", agree)
        for name in ("p", "q", "r"):
            (out / f"{rd.name}_freq_{name}.csv").write_text(freq.to_csv(name))
        for c, triple in enumerate(analysis.per_class_frequencies(s1, s2, labels)):
            mask = labels == c
            if triple.empty:
                continue
            _write_grid(out / f"{rd.name}_agreement_class{c}.csv", np.mean(s1.matrices[mask] == s2.matrices[mask], axis=0))
    (out / "chi_square.csv").write_text(analysis.chi_square_csv(rows))
    _write_manifest(out, settings, started, run_dirs=[str(r) for r in run_dirs])
    for a_, b_, res in rows:
        print(f"{a_} vs {b_}: chi2={res.stat:.1f} dof={res.dof} p={res.p_value:.3g}")
    return EXIT_OK


def _write_grid(path, M):
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        for row in M:
            w.writerow([repr(float(v)) for v in row])


# -- entry point -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="blackbox-attack", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="verb", required=True)

    def common(sp):
        sp.add_argument("--config", help="INI experiment file")
        sp.add_argument("--seed", type=int, help="master seed (overrides [run] seed)")
        sp.add_argument("--out", help="output directory (overrides [run] out)")
        sp.add_argument("--oracle-url", help="remote oracle; overrides the local model")
        sp.add_argument("--budget", type=int, help="oracle query budget")

    common(sub.add_parser("train-oracle", help="train an oracle and record its test accuracy"))
    sp = sub.add_parser("serve-oracle", help="serve a model file over HTTP")
    common(sp)
    sp.add_argument("--model", required=True)
    sp.add_argument("--bind", default="127.0.0.1:8080")
    sp.add_argument("--ledger", help="write the query total here on shutdown")
    common(sub.add_parser("attack", help="train a substitute and craft adversarial examples"))
    common(sub.add_parser("defense", help="evaluate adversarial training and distillation"))
    sp = sub.add_parser("analyze", help="gradient-sign correlation between substitute and oracle")
    common(sp)
    sp.add_argument("run_dirs", nargs="+", help="attack bundles holding substitute.model and oracle.model")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = {}
    for flag, key in (("seed", ("run", "seed")), ("out", ("run", "out")),
                      ("oracle_url", ("run", "oracle_url")), ("budget", ("run", "budget"))):
        if getattr(args, flag) is not None:
            overrides[key] = getattr(args, flag)
    try:
        if args.verb == "serve-oracle":
            return cmd_serve_oracle(args.model, args.bind, args.budget, args.ledger)
        settings = load_config(args.config, overrides)
        if args.verb == "train-oracle":
            return cmd_train_oracle(settings)
        if args.verb == "attack":
            return cmd_attack(settings)
        if args.verb == "defense":
            return cmd_defense(settings)
        return cmd_analyze(settings, args.run_dirs, args.out)
    except (ConfigError, DataFormatError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except BudgetExhausted as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except RemoteUnreachable as e:
        print(f"error: oracle unreachable: {e}", file=sys.stderr)
        return EXIT_REMOTE
    except OracleError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_REMOTE


if __name__ == "__main__":
    sys.exit(main())
