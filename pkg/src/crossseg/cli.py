"""Command line front end.

Subcommands cover the full pipeline: mine a lexicon from raw text,
distantly annotate a target corpus, train the baseline or the adversarial
model, segment, score, and verify gradients. Exit codes: 0 on success, 1
for usage problems or invalid parameter values, 2 for unreadable or
malformed data files.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .annotator import build_target_dataset, save_provenance
from .corpus import (_decode_lines, dataset_from_segmented, load_raw,
                     load_segmented, save_segmented, tags_to_words)
from .errors import DataError
from .evaluate import prf, report_json, write_report
from .gradcheck import run_suite
from .miner import MinerConfig, load_lexicon, mine, save_lexicon
from .train import (TrainConfig, adversarial_train, load_config, load_model,
                    segment, train_base)


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on bad usage; the contract here is 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _train_flags(p: argparse.ArgumentParser, with_disc: bool) -> None:
    p.add_argument("--config", help="key=value file of training settings")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch", type=int, dest="batch_size")
    p.add_argument("--lr", type=float)
    p.add_argument("--dropout", type=float)
    p.add_argument("--char-emb", type=int, dest="char_emb")
    p.add_argument("--gcnn-dim", type=int, dest="gcnn_dim")
    p.add_argument("--gcnn-layers", type=int, dest="gcnn_layers")
    p.add_argument("--window", type=int)
    if with_disc:
        p.add_argument("--textcnn-filters", type=int, dest="textcnn_filters")
        p.add_argument("--filter-sizes", dest="filter_sizes",
                       help="comma separated window widths, e.g. 3,4,5")


def _resolve_config(args: argparse.Namespace) -> TrainConfig:
    cfg = load_config(args.config) if args.config else TrainConfig()
    overrides: dict = {}
    for name in ("epochs", "batch_size", "lr", "dropout", "char_emb",
                 "gcnn_dim", "gcnn_layers", "window", "textcnn_filters"):
        v = getattr(args, name, None)
        if v is not None:
            overrides[name] = v
    fs = getattr(args, "filter_sizes", None)
    if fs is not None:
        try:
            overrides["filter_sizes"] = tuple(int(x) for x in fs.split(","))
        except ValueError:
            raise ValueError(f"bad --filter-sizes value {fs!r}") from None
    if args.seed is not None:
        overrides["seed"] = args.seed
    return replace(cfg, **overrides)


def _cmd_mine(args: argparse.Namespace) -> int:
    corpus = load_raw(args.input)
    stop = frozenset()
    if args.stopwords:
        stop = frozenset(w.strip() for w in _decode_lines(args.stopwords)
                         if w.strip())
    cfg = MinerConfig(n_min=args.nmin, n_max=args.nmax,
                      p_val_threshold=args.pval,
                      min_frequency=args.min_freq, stop_words=stop)
    collection = mine(corpus, cfg)
    save_lexicon(args.out, collection)
    print(f"mined {len(collection)} words from {len(corpus)} sentences")
    return 0


def _cmd_annotate(args: argparse.Namespace) -> int:
    raw = load_raw(args.input)
    collection = load_lexicon(args.lexicon)
    base = load_model(args.model)
    ds, prov = build_target_dataset(raw, collection, base,
                                    threads=max(1, args.threads))
    save_segmented(args.out, [tags_to_words(s, t) for s, t in ds.items])
    save_provenance(args.out + ".prov", prov)
    lex_chars = sum(p.count("L") for p in prov)
    total = sum(len(p) for p in prov)
    share = lex_chars / total if total else 0.0
    print(f"annotated {len(ds)} sentences; lexicon covered "
          f"{share:.1%} of characters")
    return 0


def _cmd_train_base(args: argparse.Namespace) -> int:
    ds = dataset_from_segmented(load_segmented(args.train), "source")
    cfg = _resolve_config(args)
    model = train_base(ds, cfg)
    model.save(args.out_model)
    print(f"trained on {len(ds)} sentences for {cfg.epochs} epochs; "
          f"final epoch loss {model.loss_history[-1]:.4f}")
    return 0


def _cmd_train_daat(args: argparse.Namespace) -> int:
    src = dataset_from_segmented(load_segmented(args.source), "source")
    if args.mode == "daat":
        target = dataset_from_segmented(load_segmented(args.target),
                                        "target", provenance="distant")
        n_tgt = len(target)
    else:
        raw = load_raw(args.target)
        target = raw
        n_tgt = len(raw)
    cfg = _resolve_config(args)
    model = adversarial_train(src, target, cfg, mode=args.mode)
    model.save(args.out_model)
    print(f"adversarially trained ({args.mode}) on {len(src)} source and "
          f"{n_tgt} target sentences")
    return 0


def _cmd_segment(args: argparse.Namespace) -> int:
    model = load_model(args.model)
    raw = load_raw(args.input)
    save_segmented(args.out, [segment(s, model, args.domain) for s in raw])
    print(f"segmented {len(raw)} sentences")
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    gold = load_segmented(args.gold)
    pred = load_segmented(args.pred)
    ev = prf(gold, pred)
    if args.out:
        write_report(args.out, ev)
    sys.stdout.write(report_json(ev).decode("ascii"))
    return 0


def _cmd_gradcheck(args: argparse.Namespace) -> int:
    seed = args.seed if args.seed is not None else 42
    results = run_suite(args.trials, args.tolerance, seed)
    failed = False
    for r in results:
        status = "ok" if r.ok else "FAIL"
        failed = failed or not r.ok
        print(f"{r.name}: max_rel_error={r.max_rel_error:.3e} {status}")
    return 2 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None,
                        help="random seed (default 42)")
    common.add_argument("--threads", type=int, default=1,
                        help="worker threads for annotation")

    parser = _Parser(prog="crossseg",
                     description="cross-domain Chinese word segmentation")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mine", parents=[common],
                       help="mine domain words from raw text")
    p.add_argument("--input", required=True, help="raw corpus, one "
                   "sentence per line")
    p.add_argument("--out", required=True, help="lexicon TSV to write")
    p.add_argument("--pval", type=float, default=0.95)
    p.add_argument("--min-freq", type=int, default=10, dest="min_freq")
    p.add_argument("--nmin", type=int, default=2)
    p.add_argument("--nmax", type=int, default=6)
    p.add_argument("--stopwords", help="file with one stop-word per line")
    p.set_defaults(func=_cmd_mine)

    p = sub.add_parser("annotate", parents=[common],
                       help="distantly annotate raw target text")
    p.add_argument("--input", required=True)
    p.add_argument("--lexicon", required=True)
    p.add_argument("--model", required=True, help="base segmenter container")
    p.add_argument("--out", required=True,
                   help="segmented output; provenance goes to <out>.prov")
    p.set_defaults(func=_cmd_annotate)

    p = sub.add_parser("train-base", parents=[common],
                       help="train the single-domain segmenter")
    p.add_argument("--train", required=True, help="segmented training file")
    p.add_argument("--out-model", required=True, dest="out_model")
    _train_flags(p, with_disc=False)
    p.set_defaults(func=_cmd_train_base)

    p = sub.add_parser("train-daat", parents=[common],
                       help="train the adversarial cross-domain model")
    p.add_argument("--source", required=True, help="segmented source file")
    p.add_argument("--target", required=True,
                   help="segmented target file (daat) or raw text (at)")
    p.add_argument("--out-model", required=True, dest="out_model")
    p.add_argument("--mode", choices=("daat", "at"), default="daat")
    _train_flags(p, with_disc=True)
    p.set_defaults(func=_cmd_train_daat)

    p = sub.add_parser("segment", parents=[common],
                       help="segment raw text with a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--domain", choices=("source", "target"),
                   default="target")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_segment)

    p = sub.add_parser("eval", parents=[common],
                       help="score a segmentation against gold")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--out", help="also write the JSON report here")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("gradcheck", parents=[common],
                       help="verify gradients by finite differences")
    p.add_argument("--trials", type=int, default=2)
    p.add_argument("--tolerance", type=float, default=1e-4)
    p.set_defaults(func=_cmd_gradcheck)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DataError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
