"""
Ferroscope Main Entry Point
===========================

Command-line surface for the pipeline:

    python -m ferroscope.main <stage> [--config user.yaml] [--set key=value ...] [flags]

Stages: synth, tile, train-cls, train-gan, features, fit-svm, score, map,
montage, hist, eval. Exit codes: 0 success, 1 usage or configuration error,
2 data/format error, 3 numerical failure.
"""

import argparse
import sys
from typing import Any, List, Optional, Sequence

from ferroscope.engine import PipelineEngine
from ferroscope.utils.config_loader import ConfigLoader
from ferroscope.utils.errors import ConfigError, FerroscopeError
from ferroscope.utils.logger import logger

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INTERRUPTED = 130

STAGES = ("synth", "tile", "train-cls", "train-gan", "features", "fit-svm", "score", "map", "montage", "hist", "eval")

# flag dest -> config key; epochs and batch size follow the stage being run
FLAG_KEYS = {
    "seed": "seed",
    "tile_side": "imgrid.tile_side",
    "policy": "imgrid.policy",
    "nu": "ocsvm.nu",
    "gamma": "ocsvm.gamma",
    "lambda_rec": "train.gan.lambda_rec",
    "lambda_adv": "train.gan.lambda_adv",
    "anomalous_classes": "anomap.anomalous_classes",
}
TRAIN_SECTIONS = {"train-cls": ("classifier",), "train-gan": ("gan",)}


class CliParser(argparse.ArgumentParser):
    """ArgumentParser that reports usage errors with exit code 1."""

    def error(self, message: str) -> None:
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _class_list(value: str) -> List[str]:
    names = [v.strip() for v in value.split(",") if v.strip()]
    if not names:
        raise argparse.ArgumentTypeError("expected a comma-separated list of class names")
    return names


def build_parser() -> CliParser:
    common = CliParser(add_help=False)
    common.add_argument("--config", help="user YAML merged over config/pipeline.yaml")
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override any configuration key (repeatable)")
    common.add_argument("--seed", type=int)
    common.add_argument("--tile-side", type=int)
    common.add_argument("--policy", choices=["scaleup", "droppartial"])
    common.add_argument("--nu", type=float)
    common.add_argument("--gamma", type=float)
    common.add_argument("--epochs", type=int)
    common.add_argument("--batch-size", type=int)
    common.add_argument("--lambda-rec", type=float)
    common.add_argument("--lambda-adv", type=float)
    common.add_argument("--anomalous-classes", type=_class_list, metavar="A,B,C")
    common.add_argument("--recalibrate", action="store_true", default=None,
                        help="take min/max v from each scored batch instead of the model")
    common.add_argument("--dry-run", action="store_true", help="print the resolved configuration and exit")

    parser = CliParser(prog="ferroscope", description="One-class steel surface anomaly pipeline")
    sub = parser.add_subparsers(dest="stage", metavar="stage")
    sub.required = True
    for stage in STAGES:
        sub.add_parser(stage, parents=[common])
    return parser


def configure(args: argparse.Namespace) -> ConfigLoader:
    """Defaults < .env < --config < --set < dedicated flags; paths made absolute."""
    loader = ConfigLoader(user_file=args.config)
    for assignment in args.overrides:
        loader.set_from_string(assignment)

    for dest, key in FLAG_KEYS.items():
        value: Any = getattr(args, dest, None)
        if value is not None:
            loader.set(key, value)
    if args.recalibrate:
        loader.set("ocsvm.recalibrate", True)
    for section in TRAIN_SECTIONS.get(args.stage, ("classifier", "gan")):
        if args.epochs is not None:
            loader.set(f"train.{section}.epochs", args.epochs)
        if args.batch_size is not None:
            loader.set(f"train.{section}.batch_size", args.batch_size)

    loader.resolve_paths()
    logger.set_level(loader.get("logging.level", "INFO"))
    return loader


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run one stage and return its exit code."""
    args = build_parser().parse_args(argv)
    try:
        loader = configure(args)
        engine = PipelineEngine(loader)
        if args.dry_run:
            print(loader.dump(), end="")
            return EXIT_OK
        if loader.get("logging.file_enabled", True):
            logger.enable_file(loader.get("logging.dir", "logs"))
        engine.run(args.stage)
    except ConfigError as e:
        logger.error("Configuration rejected", stage=args.stage, error=str(e))
        return e.exit_code
    except FerroscopeError as e:
        logger.error("Stage failed", stage=args.stage, error=str(e), kind=type(e).__name__)
        return e.exit_code
    except KeyboardInterrupt:
        logger.info("Interrupted; outputs already committed are complete", stage=args.stage)
        return EXIT_INTERRUPTED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
