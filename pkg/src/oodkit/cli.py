"""Command-line front end.

Subcommands map onto pipeline stages; each stage requires its predecessor's
artifacts under the model directory. Exit codes: 0 success, 2 configuration
error, 3 missing/invalid artifact, 4 numeric failure.
"""

import argparse
import sys

from . import persist, pipeline
from .corpus import SyntheticSpec, parse_kv_file
from .mathcore import NumericError
from .pipeline import ConfigError, MissingArtifact, PipelineConfig

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ARTIFACT = 3
EXIT_NUMERIC = 4


def build_parser():
    parser = argparse.ArgumentParser(
        prog="oodkit",
        description="Out-of-domain sentence detection trained on in-domain data only.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text, needs_pipeline_cfg=True):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="flat key=value config file")
        p.add_argument("--seed", type=int, help="override the config seed")
        if needs_pipeline_cfg:
            p.add_argument("--out", help="override the report directory")
        return p

    p = add("synth", "generate the synthetic benchmark corpora", needs_pipeline_cfg=False)
    p.add_argument("--out", required=True, help="directory for the corpus files")

    add("pretrain", "pre-train skip-gram word vectors on unlabeled text")

    p = add("train-embed", "train the domain-category sentence embedder")
    p.add_argument("--mode", choices=("random", "static", "non-static", "two-channel"))
    p.add_argument("--cell", choices=("lstm", "rnn"))
    p.add_argument("--hidden", type=int, choices=(100, 150))
    p.add_argument("--optimizer", choices=("adam", "adadelta", "rmsprop"))

    p = add("embed", "export sentence representations for a corpus slice")
    p.add_argument("--which", choices=("train", "test-id", "ood"), default="train")

    p = add("train-detect", "train the reconstruction-error autoencoder")
    p.add_argument("--optimizer", choices=("adam", "adadelta", "rmsprop"),
                   help="override the detector-stage optimizer")

    p = add("eval", "score the test sets and report EER curves")
    p.add_argument("--baseline",
                   help="representation+classifier pair, e.g. neural-bow+nn-d; "
                        "bow/tfidf without :N sweep n-grams 1..3")
    p.add_argument("--domain-sweep", metavar="SYNTH_CONFIG",
                   help="re-run the pipeline for 2..max ID domains of this benchmark")

    p = add("grid", "EER table over representation x classifier combinations")
    p.add_argument("--reps", required=True,
                   help=f"comma-separated representations: {pipeline.REP_CHOICES_HELP}")
    p.add_argument("--classifiers", required=True,
                   help="comma-separated: " + ", ".join(pipeline.CLASSIFIER_CHOICES))
    return parser


def _pipeline_config(args, **extra_overrides):
    kv = parse_kv_file(args.config)
    overrides = {"seed": getattr(args, "seed", None)}
    if getattr(args, "out", None):
        overrides["report_dir"] = args.out
    overrides.update(extra_overrides)
    return PipelineConfig.from_kv(kv, overrides)


def _run(args):
    log = print
    if args.command == "synth":
        kv = parse_kv_file(args.config)
        if args.seed is not None:
            kv["seed"] = str(args.seed)
        spec = SyntheticSpec.from_kv(kv)
        paths = pipeline.stage_synth(spec, args.out, log=log)
        for key, value in paths.items():
            log(f"{key}={value}")
        return EXIT_OK

    if args.command == "pretrain":
        pipeline.stage_pretrain(_pipeline_config(args), log=log)
        return EXIT_OK

    if args.command == "train-embed":
        cfg = _pipeline_config(args, mode=args.mode, cell=args.cell,
                               hidden=args.hidden, optimizer=args.optimizer)
        pipeline.stage_train_embed(cfg, log=log)
        return EXIT_OK

    if args.command == "embed":
        pipeline.stage_embed(_pipeline_config(args), which=args.which, log=log)
        return EXIT_OK

    if args.command == "train-detect":
        cfg = _pipeline_config(args, detect_optimizer=args.optimizer)
        pipeline.stage_train_detect(cfg, log=log)
        return EXIT_OK

    if args.command == "eval":
        cfg = _pipeline_config(args)
        if args.domain_sweep:
            spec = SyntheticSpec.from_kv(parse_kv_file(args.domain_sweep))
            path, rows = pipeline.stage_domain_sweep(cfg, spec, log=log)
            log(f"domain sweep -> {path}")
            return EXIT_OK
        if args.baseline and args.baseline.split("+", 1)[0] in ("bow", "tfidf"):
            # bare bow/tfidf sweeps n-grams 1..3 and reports every n plus the best
            rep, clf = args.baseline.split("+", 1)
            best = None
            for n in (1, 2, 3):
                _, summary_path = pipeline.stage_eval(
                    cfg, log=log, baseline=f"{rep}:{n}+{clf}")
                eer = _read_eer(summary_path)
                if best is None or eer < best[0]:
                    best = (eer, n)
            log(f"best n={best[1]} (eer={best[0]:.4f})")
            return EXIT_OK
        pipeline.stage_eval(cfg, log=log, baseline=args.baseline)
        return EXIT_OK

    if args.command == "grid":
        cfg = _pipeline_config(args)
        reps = [r.strip() for r in args.reps.split(",") if r.strip()]
        classifiers = [c.strip() for c in args.classifiers.split(",") if c.strip()]
        if not reps or not classifiers:
            raise ConfigError("grid needs at least one representation and one classifier")
        path, _ = pipeline.stage_grid(cfg, reps, classifiers, log=log)
        log(f"grid -> {path}")
        return EXIT_OK

    raise ConfigError(f"unknown command {args.command!r}")


def _read_eer(summary_path):
    with open(summary_path, encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("eer="):
                return float(line.strip().split("=", 1)[1])
    raise RuntimeError(f"no eer line in {summary_path}")


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return _run(args)
    except (ConfigError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (MissingArtifact, persist.ArchiveError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ARTIFACT
    except (NumericError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
