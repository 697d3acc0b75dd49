"""``sentibench`` command line.

Subcommands: preprocess, train-ml, train-dl, tune, predict, benchmark.
Exit codes: 0 success, 1 internal error, 2 bad input or usage.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from .corpus_io import SchemaError, StratificationError, stratified_indices
from .evaluation import (CvResult, cross_validate, evaluate, format_benchmark_table,
                         format_class_report, format_cv_table)
from .neural.checkpoint import is_checkpoint, load_checkpoint
from .neural.estimator import BiLSTMAttentionClassifier
from .neural.model import HyperParams
from .neural.training import HISTORY_FIELDS, SearchSpace, random_search
from .pipelines import (DISPLAY_NAMES, EMPTY_FLAG, ML_MODELS, MlPredictor,
                        bundled_corpus_path, load_docs, make_featurizer, make_trainer,
                        save_ml_bundle)
from .preprocess import SlangParseError, preprocess_text, resolve_slang

log = logging.getLogger("sentibench")

HP_FLAGS = ("embed_dim", "hidden_dim1", "hidden_dim2", "head_dim", "dropout", "lr",
            "weight_decay", "label_smoothing", "batch_size", "max_len", "max_epochs",
            "patience", "vocab_cap")


class UserError(Exception):
    """Bad input from the caller; reported with exit code 2."""


# helpers ---------------------------------------------------------------------

def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _slang(args):
    if args.slang is not None and not Path(args.slang).is_file():
        raise UserError(f"slang dictionary not found: {args.slang}")
    return resolve_slang(args.slang)


def _docs(args, slang):
    path = Path(args.data) if args.data else bundled_corpus_path()
    if not path.is_file():
        raise UserError(f"corpus not found: {path}")
    return load_docs(path, slang, args.text_field, args.label_field, args.format)


def _split(docs, args):
    y = np.array([d.label for d in docs])
    train_idx, test_idx = stratified_indices(y, args.train_fraction, args.seed)
    return [docs[i] for i in train_idx], [docs[i] for i in test_idx]


def _hyperparams(args) -> HyperParams:
    hp = HyperParams()
    if getattr(args, "hp_file", None):
        with open(args.hp_file, encoding="utf-8") as fh:
            stored = json.load(fh)
        hp = replace(hp, **{k: v for k, v in stored.items() if k in HP_FLAGS})
    overrides = {k: getattr(args, k) for k in HP_FLAGS if getattr(args, k, None) is not None}
    return replace(hp, **overrides)


def _run_cv(names, train_docs, args) -> list[tuple[str, CvResult]]:
    results = []
    for name in names:
        log.info("cross-validating %s", name)
        cv = cross_validate(make_trainer(name, args.seed), make_featurizer(not args.no_minmax),
                            train_docs, k=args.folds, seed=args.seed, n_jobs=args.threads)
        results.append((name, cv))
    # stable sort keeps the requested order among equal F1 scores
    results.sort(key=lambda item: -item[1].mean.f1)
    return results


def _write_cv_reports(results, out: Path, timing: bool) -> str:
    rows = [(DISPLAY_NAMES[n], cv.mean) for n, cv in results]
    table = format_cv_table(rows, include_time=timing)
    (out / "cv_table.txt").write_text(table, encoding="utf-8")
    _write_json(out / "cv_report.json",
                {n: cv.to_dict(include_time=timing) for n, cv in results})
    return table


def _fit_final_ml(name, train_docs, slang, args, out: Path) -> None:
    featurizer = make_featurizer(not args.no_minmax)
    trainer = make_trainer(name, args.seed)
    X = featurizer.fit_transform(train_docs)
    trainer.fit(X, np.array([d.label for d in train_docs]))
    save_ml_bundle(out / f"model_{name}.json", name, featurizer, trainer, slang)


def _train_dl(train_docs, test_docs, hp, slang, args, out: Path):
    est = BiLSTMAttentionClassifier(**{k: getattr(hp, k) for k in HP_FLAGS}, seed=args.seed)
    start = time.perf_counter()
    est.fit([d.tokens for d in train_docs], [d.label for d in train_docs])
    elapsed = time.perf_counter() - start
    test_tokens = [d.tokens for d in test_docs]
    y_test = np.array([d.label for d in test_docs])
    report = evaluate(y_test, est.predict(test_tokens), est.predict_proba(test_tokens)[:, 1],
                      wall_time_s=elapsed)
    est.save(out / "model_dl.bin", extra={"slang": dict(slang)})
    with open(out / "history.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=HISTORY_FIELDS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(est.history_)
    _write_json(out / "test_report.json",
                {**report.to_dict(include_time=args.timing), "best_epoch": est.best_epoch_,
                 "best_val_loss": est.best_val_loss_})
    (out / "test_report.txt").write_text(format_class_report(report), encoding="utf-8")
    return est, report


# subcommands -----------------------------------------------------------------

def cmd_preprocess(args) -> int:
    slang = _slang(args)
    if not Path(args.input).is_file():
        raise UserError(f"input not found: {args.input}")
    docs = load_docs(args.input, slang, args.text_field, args.label_field, args.format)
    output = Path(args.output)
    output.parent.mkdir(parents=True, exist_ok=True)
    with open(output, "w", encoding="utf-8") as fh:
        for d in docs:
            fh.write(json.dumps({"tokens": list(d.tokens), "label": d.label},
                                ensure_ascii=False) + "\n")
    log.info("wrote %d documents to %s", len(docs), output)
    return 0


def cmd_train_ml(args) -> int:
    if not args.all and args.model is None:
        raise UserError("choose --model {lr,svm,gbdt} or --all")
    slang = _slang(args)
    train_docs, _ = _split(_docs(args, slang), args)
    out = _out_dir(args)
    names = list(ML_MODELS) if args.all else [args.model]
    results = _run_cv(names, train_docs, args)
    table = _write_cv_reports(results, out, args.timing)
    if not args.no_save_model:
        for name in names:
            _fit_final_ml(name, train_docs, slang, args, out)
    sys.stdout.write(table)
    return 0


def cmd_train_dl(args) -> int:
    slang = _slang(args)
    train_docs, test_docs = _split(_docs(args, slang), args)
    out = _out_dir(args)
    _, report = _train_dl(train_docs, test_docs, _hyperparams(args), slang, args, out)
    sys.stdout.write(format_class_report(report))
    sys.stdout.write(f"accuracy {report.accuracy:.4f}\n")
    return 0


def cmd_tune(args) -> int:
    slang = _slang(args)
    train_docs, _ = _split(_docs(args, slang), args)
    fit_idx, val_idx = stratified_indices([d.label for d in train_docs], 0.9, args.seed)
    tok = [d.tokens for d in train_docs]
    y = np.array([d.label for d in train_docs])
    result = random_search([tok[i] for i in fit_idx], y[fit_idx], [tok[i] for i in val_idx],
                           y[val_idx], SearchSpace(), n_trials=args.trials, seed=args.seed,
                           budget=args.budget, base_hp=_hyperparams(args))
    out = _out_dir(args)
    fields = list(result.table[0])
    with open(out / "trials.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        writer.writerows(result.table)
    _write_json(out / "best_config.json",
                {**{k: getattr(result.best_hp, k) for k in HP_FLAGS},
                 "trial": result.best_trial})
    best = result.table[result.best_trial]
    sys.stdout.write(f"best trial {result.best_trial}: val_loss {best['val_loss']:.4f}\n")
    return 0


def _read_lines(args) -> list[str]:
    if args.text is not None:
        return [args.text]
    if args.input:
        with open(args.input, encoding="utf-8") as fh:
            return fh.read().splitlines()
    return sys.stdin.read().splitlines()


def cmd_predict(args) -> int:
    model_path = Path(args.model)
    if not model_path.is_file():
        raise UserError(f"model not found: {model_path}")
    lines = _read_lines(args)
    if is_checkpoint(model_path):
        header = load_checkpoint(model_path, with_header=True)[3]
        est = BiLSTMAttentionClassifier.load(model_path)
        slang = resolve_slang(args.slang) if args.slang else header.get("slang") or resolve_slang(None)
        tokens = [preprocess_text(line, slang) for line in lines]
        probs = est.predict_proba(tokens)[:, 1] if tokens else np.zeros(0)
        labels = est.predict(tokens) if tokens else np.zeros(0, dtype=int)
    else:
        predictor = MlPredictor.load(model_path)
        slang = resolve_slang(args.slang) if args.slang else predictor.slang
        tokens = [preprocess_text(line, slang) for line in lines]
        probs = predictor.scores(tokens) if tokens else np.zeros(0)
        labels = predictor.predict(tokens) if tokens else np.zeros(0, dtype=int)
    for toks, label, prob in zip(tokens, labels, probs):
        fields = ["Positive" if label == 1 and toks else "Negative", f"{prob:.6f}"]
        if not toks:
            fields.append(EMPTY_FLAG)
        sys.stdout.write("\t".join(fields) + "\n")
    return 0


def cmd_benchmark(args) -> int:
    slang = _slang(args)
    train_docs, test_docs = _split(_docs(args, slang), args)
    out = _out_dir(args)
    results = _run_cv(list(ML_MODELS), train_docs, args)
    _write_cv_reports(results, out, args.timing)
    best_name, best_cv = results[0]
    _, dl_report = _train_dl(train_docs, test_docs, _hyperparams(args), slang, args, out)
    rows = [("Machine Learning", DISPLAY_NAMES[best_name], best_cv.mean.accuracy, best_cv.mean.f1),
            ("Deep Learning", DISPLAY_NAMES["dl"], dl_report.accuracy, dl_report.f1)]
    table = format_benchmark_table(rows)
    (out / "benchmark.txt").write_text(table, encoding="utf-8")
    _write_json(out / "benchmark.json", [
        {"approach": a, "model": m, "accuracy": acc, "f1": f1} for a, m, acc, f1 in rows])
    sys.stdout.write(table)
    return 0


# parser ----------------------------------------------------------------------

def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("global options")
    g.add_argument("--seed", type=int, default=42)
    g.add_argument("--threads", type=int, default=1, help="worker cap for CV folds")
    g.add_argument("--out-dir", default="runs")
    g.add_argument("--config", help="JSON file or key=value lines; flags win over it")
    g.add_argument("-v", "--verbose", action="store_true")
    return common


def _data_args(p, data_flag="--data"):
    p.add_argument(data_flag, default=None,
                   help="CSV/JSONL corpus (default: bundled synthetic corpus)")
    p.add_argument("--format", choices=("csv", "jsonl"), default=None)
    p.add_argument("--text-field", default="text")
    p.add_argument("--label-field", default="label")
    p.add_argument("--slang", default=None, help="TSV slang dictionary (default: bundled)")


def _split_args(p):
    p.add_argument("--train-fraction", type=float, default=0.8)
    p.add_argument("--timing", action="store_true",
                   help="include wall times in report files (breaks byte determinism)")


def _ml_args(p):
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--no-minmax", action="store_true")


def _hp_args(p):
    hp = HyperParams()
    g = p.add_argument_group("network hyperparameters")
    for name in HP_FLAGS:
        default = getattr(hp, name)
        g.add_argument("--" + name.replace("_", "-"), type=type(default), default=None,
                       help=f"default {default}")
    g.add_argument("--hp-file", default=None, help="JSON of hyperparameters, e.g. best_config.json")


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(prog="sentibench", parents=[common],
                                     description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", parents=[common], help="clean a corpus into token JSONL")
    _data_args(p, "--input")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("train-ml", parents=[common], help="cross-validate TF-IDF classifiers")
    _data_args(p)
    _split_args(p)
    _ml_args(p)
    p.add_argument("--model", choices=ML_MODELS)
    p.add_argument("--all", action="store_true", help="benchmark lr, svm and gbdt")
    p.add_argument("--no-save-model", action="store_true")
    p.set_defaults(func=cmd_train_ml)

    p = sub.add_parser("train-dl", parents=[common], help="train the BiLSTM + attention model")
    _data_args(p)
    _split_args(p)
    _hp_args(p)
    p.set_defaults(func=cmd_train_dl)

    p = sub.add_parser("tune", parents=[common], help="random hyperparameter search")
    _data_args(p)
    _split_args(p)
    _hp_args(p)
    p.add_argument("--trials", type=int, default=13)
    p.add_argument("--budget", type=int, default=3, help="max epochs per trial")
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("predict", parents=[common], help="label raw text with a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--text", default=None)
    p.add_argument("--input", default=None, help="file with one review per line (default: stdin)")
    p.add_argument("--slang", default=None)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("benchmark", parents=[common], help="best ML (by CV F1) vs the network")
    _data_args(p)
    _split_args(p)
    _ml_args(p)
    _hp_args(p)
    p.set_defaults(func=cmd_benchmark)
    return parser


def load_config(path) -> dict:
    """Read ``--config``: a JSON object, or ``key = value`` lines (``#`` comments)."""
    text = Path(path).read_text(encoding="utf-8")
    if text.lstrip().startswith("{"):
        raw = json.loads(text)
    else:
        raw = {}
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UserError(f"{path}:{lineno}: expected key=value")
            key, value = (part.strip() for part in line.split("=", 1))
            raw[key] = value
    return {k.replace("-", "_"): v for k, v in raw.items()}


def parse_args(argv=None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        if not Path(args.config).is_file():
            parser.error(f"config file not found: {args.config}")
        try:
            config = load_config(args.config)
        except (UserError, ValueError) as exc:
            parser.error(str(exc))
        subparser = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest: a for a in subparser._actions}
        defaults = {}
        for key, value in config.items():
            if key not in known:
                parser.error(f"unknown config key {key!r}")
            action = known[key]
            if isinstance(value, str) and action.type is not None:
                value = action.type(value)
            elif isinstance(value, str) and action.const is True:
                value = value.lower() in ("1", "true", "yes", "on")
            defaults[key] = value
        subparser.set_defaults(**defaults)
        args = parser.parse_args(argv)
    return args


def main(argv=None) -> int:
    args = parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UserError, FileNotFoundError, SchemaError, SlangParseError,
            StratificationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - top-level guard maps to exit code 1
        log.exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
