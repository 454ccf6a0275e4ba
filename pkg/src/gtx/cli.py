"""Command line entry points.

    gtx gen-grammar   synthesize a grammar to a text file
    gtx gen-dataset   sample a labeled dataset from a grammar file
    gtx verify        check a dataset's explanation masks
    gtx train-eval    train the forest, write predictions and attributions
    gtx score         k-accuracy of an attribution file against a dataset
    gtx experiment    full sweep from a TOML config
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .dataset import (
    StopConfig,
    file_sha256,
    generate_dataset,
    read_dataset,
    write_dataset,
)
from .derive import NEG, POS
from .experiment import (
    EngineParams,
    ExperimentConfig,
    derive_seed,
    load_config,
    resolve_master_seed,
    run_experiment,
)
from .explainers import (
    AttributionFile,
    AttributionRecord,
    ExplainerConfig,
    exact_shapley,
    lime_local,
    read_attributions,
    shapley_mc,
    write_attributions,
)
from .forest import ForestConfig, train_forest
from .grammar import (
    check_theorem1_preconditions,
    g_complexity,
    parse_grammar_text,
    validate_egrammar,
)
from .metrics import auc, score_attributions
from .oracle import verify_dataset
from .report import report
from .synth import GrammarSpec, synth_egrammar


def _cmd_gen_grammar(args) -> int:
    spec = GrammarSpec(
        num_nonterminals=args.nonterminals,
        target_g_complexity=args.complexity,
        alphabet_size=args.alphabet_size,
        terminal_rhs_length=args.rhs_length,
        seed=args.seed,
    )
    g = synth_egrammar(spec)
    text = g.to_text()
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
        print(f"wrote {args.output} (complexity {g_complexity(g)}, sha {g.sha256()[:12]})")
    else:
        sys.stdout.write(text)
    return 0


def _read_grammar_file(path: str):
    g = parse_grammar_text(Path(path).read_text(encoding="utf-8"))
    rep = validate_egrammar(g)
    if not rep.ok:
        for v in rep.violations:
            print(f"error: {v}", file=sys.stderr)
        raise SystemExit(2)
    return g


def _cmd_gen_dataset(args) -> int:
    g = _read_grammar_file(args.grammar)
    lo, hi = (float(p) for p in args.ratio.split(":"))
    ds = generate_dataset(
        g, args.length, args.threshold,
        StopConfig(args.size, (lo, hi)),
        seed=args.seed,
        enforce_preconditions=not args.allow_ambiguous_emissions,
    )
    write_dataset(ds, args.output)
    print(f"wrote {args.output}: {len(ds.instances)} instances "
          f"({ds.pos_count} positive), sha {ds.sha256()[:12]}")
    return 0


def _cmd_verify(args) -> int:
    ds = read_dataset(args.dataset)
    rep = verify_dataset(ds)
    print(rep.summary())
    if args.json:
        Path(args.json).write_text(json.dumps(rep.to_dict(), indent=2) + "\n",
                                   encoding="utf-8")
    return 0 if rep.ok else 1


def _cmd_score(args) -> int:
    ds = read_dataset(args.dataset)
    attr = read_attributions(args.attributions)
    summary = score_attributions(
        ds, attr, args.k,
        dataset_sha256=file_sha256(args.dataset),
        by_magnitude=args.by_magnitude,
    )
    mean = "n/a" if summary.mean is None else f"{summary.mean:.4f}"
    print(f"{attr.explainer}: mean top-{args.k} accuracy {mean} "
          f"({summary.num_scored} scored, {summary.num_skipped} skipped)")
    if args.json:
        Path(args.json).write_text(json.dumps(summary.to_dict(), indent=2) + "\n",
                                   encoding="utf-8")
    return 0


def _cmd_train_eval(args) -> int:
    ds = read_dataset(args.dataset)
    X, y = ds.encode()
    rng = np.random.default_rng(derive_seed(args.seed, "split"))
    explainers = [e.strip() for e in args.explainers.split(",") if e.strip()]

    idx = rng.permutation(len(y))
    cut = max(1, min(len(y) - 1, int(round(args.train_fraction * len(y)))))
    train_idx, test_idx = np.sort(idx[:cut]), np.sort(idx[cut:])
    model = train_forest(
        X[train_idx], y[train_idx],
        ForestConfig(num_trees=args.trees), seed=derive_seed(args.seed, "forest"))
    test_probs = model.predict_batch(X[test_idx])

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lines = ["index,predicted_label,score"]
    for di, p in zip(test_idx, test_probs):
        lines.append(f"{int(di)},{POS if p >= 0.5 else NEG},{p:.6f}")
    (out / "predictions.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    try:
        test_auc = auc(test_probs, y[test_idx])
        print(f"test AUC {test_auc:.4f} on {len(test_idx)} instances")
    except Exception as exc:
        print(f"test AUC unavailable: {exc}")

    bg_rng = np.random.default_rng(derive_seed(args.seed, "background"))
    bg = X[train_idx][bg_rng.choice(len(train_idx), min(64, len(train_idx)), replace=False)]
    dataset_hash = file_sha256(args.dataset)
    candidates = [int(di) for di, p in zip(test_idx, test_probs)
                  if p >= 0.5 and y[di] == 1][:args.explain_cap]
    for explainer in explainers:
        records = []
        for di in candidates:
            seed_i = derive_seed(args.seed, explainer, di)
            if explainer == "shapley":
                av = shapley_mc(model, X[di], bg, args.shapley_samples, seed_i)
            elif explainer == "shapley-exact":
                av = exact_shapley(model, X[di], bg)
            elif explainer == "lime":
                av = lime_local(model, X[di], len(ds.alphabet),
                                ExplainerConfig(), seed_i)
            else:
                print(f"error: unknown explainer {explainer!r}", file=sys.stderr)
                return 2
            records.append(AttributionRecord(di, POS, av.scores))
        path = out / f"attr_{explainer}.json"
        write_attributions(path, dataset_hash, explainer,
                           f"forest(trees={args.trees},seed={model.seed})", records)
        print(f"wrote {path} ({len(records)} instances)")
    return 0


def _cmd_experiment(args) -> int:
    cfg = load_config(args.config)
    master = resolve_master_seed(cfg.master_seed)
    if master != cfg.master_seed:
        cfg = ExperimentConfig(**{
            **{k: getattr(cfg, k) for k in cfg.__dataclass_fields__},
            "master_seed": master})
    artifacts = Path(args.out) / "artifacts" if args.artifacts else None
    result = run_experiment(
        cfg, artifacts_dir=artifacts,
        log=(lambda s: print(s, file=sys.stderr)) if not args.quiet else None)
    written = report(result, args.out, figures=not args.no_figures)
    for path in written:
        print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gtx",
        description="grammar-based ground truth for feature-attribution explainers")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-grammar", help="synthesize a grammar")
    p.add_argument("--nonterminals", type=int, default=8)
    p.add_argument("--complexity", type=int, required=True,
                   help="exact number of non-epsilon rules")
    p.add_argument("--alphabet-size", type=int, default=2)
    p.add_argument("--rhs-length", type=int, default=2,
                   help="length of every emitted block")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", help="write here instead of stdout")
    p.set_defaults(func=_cmd_gen_grammar)

    p = sub.add_parser("gen-dataset", help="sample a labeled dataset")
    p.add_argument("--grammar", required=True, help="grammar text file")
    p.add_argument("--length", type=int, required=True)
    p.add_argument("--threshold", type=int, required=True,
                   help="rule-usage threshold for the positive label")
    p.add_argument("--size", type=int, required=True)
    p.add_argument("--ratio", default="0.4:0.6", help="positive ratio band lo:hi")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--allow-ambiguous-emissions", action="store_true",
                   help="skip the unique-decomposition precondition check")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=_cmd_gen_dataset)

    p = sub.add_parser("verify", help="check explanation masks against the dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--json", help="also write the report as JSON")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("train-eval", help="train a forest and write attributions")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--explainers", default="shapley,lime",
                   help="comma list: shapley, lime, shapley-exact")
    p.add_argument("--trees", type=int, default=100)
    p.add_argument("--train-fraction", type=float, default=0.8)
    p.add_argument("--shapley-samples", type=int, default=2000)
    p.add_argument("--explain-cap", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_train_eval)

    p = sub.add_parser("score", help="k-accuracy of attributions vs ground truth")
    p.add_argument("--dataset", required=True)
    p.add_argument("--attributions", required=True)
    p.add_argument("-k", type=int, required=True)
    p.add_argument("--by-magnitude", action="store_true",
                   help="rank positions by |score| instead of signed score")
    p.add_argument("--json", help="also write the summary as JSON")
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("experiment", help="run a sweep from a TOML config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--no-figures", action="store_true")
    p.add_argument("--artifacts", action="store_true",
                   help="keep per-grammar datasets, predictions, attributions")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=_cmd_experiment)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
