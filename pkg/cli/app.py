"""Argument parsing and dispatch for the cwssnet command"""

import argparse
import logging
import sys
from typing import Any, Dict, List, Optional, Sequence

from config.logging_config import setup_logging
from config.run_config import RunConfig
from config.settings import settings
from cli.commands import CommandHandlers, print_summary
from utils.errors import ConfigError, CwssnetError
from utils.validators import ArgumentParser, KernelSet, WaveletName

logger = logging.getLogger(__name__)

COMMANDS = ("synth", "train", "eval", "predict", "analyze-params", "ablate")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cwssnet", description=f"{settings.APP_NAME} {settings.APP_VERSION}")
    parser.add_argument("--print-schema", action="store_true", help="print the JSON schema of --config files and exit")
    parser.add_argument("--log-level", default=None, help="override LOG_LEVEL")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration file")
    common.add_argument("--seed", type=int, help="random seed")
    common.add_argument("--out", help="output directory")

    model = argparse.ArgumentParser(add_help=False)
    model.add_argument("--epochs", type=int)
    model.add_argument("--lr", type=float, dest="learning_rate")
    model.add_argument("--batch-size", type=int)
    model.add_argument("--patch-size", type=int)
    model.add_argument("--stride", type=int)
    model.add_argument("--pca-bands", type=int)
    model.add_argument("--l2", type=float, dest="l2_lambda")
    model.add_argument("--wavelet", choices=[w.value for w in WaveletName])
    model.add_argument("--kernels", choices=[k.value for k in KernelSet], dest="kernel_set")
    model.add_argument("--levels", type=int, dest="wtbc_levels")
    model.add_argument("--no-mca", action="store_true")
    model.add_argument("--no-wtbc", action="store_true")
    model.add_argument("--no-fusion", action="store_true")

    cube = argparse.ArgumentParser(add_help=False)
    cube.add_argument("--cube", help="cube container; the configured synthetic scene when omitted")

    sub = parser.add_subparsers(dest="command")
    synth = sub.add_parser("synth", parents=[common], help="write a synthetic labelled cube")
    synth.add_argument("--rows", type=int)
    synth.add_argument("--cols", type=int)
    synth.add_argument("--bands", type=int)
    synth.add_argument("--classes", type=int)
    synth.add_argument("--noise", type=float, dest="noise_sigma")

    sub.add_parser("train", parents=[common, model, cube], help="train and write checkpoint plus trace")
    for name, text in (("eval", "score a checkpoint on a labelled cube"), ("predict", "write a label map")):
        command = sub.add_parser(name, parents=[common, cube], help=text)
        command.add_argument("--checkpoint", required=True, help="checkpoint directory")
        if name == "predict":
            command.add_argument("--palette", help="palette JSON {class_id: [r, g, b]}")

    analyze = sub.add_parser("analyze-params", parents=[common], help="WTBC parameter-count report")
    analyze.add_argument("--R-list", default="8,16,32", dest="R_list")
    analyze.add_argument("--L-list", default="1,2,3,4", dest="L_list")
    analyze.add_argument("--c-in", type=int, default=1, dest="C_in")

    ablate = sub.add_parser("ablate", parents=[common, model, cube], help="module and kernel ablation grids")
    ablate.add_argument("--seeds", help="comma-separated seeds (default: seed, seed+1, seed+2)")
    ablate.add_argument("--train-fractions", help="comma-separated training shares, e.g. 0.3,0.5,0.7,0.9")
    return parser


def overrides_from_args(args: argparse.Namespace) -> Dict[str, Any]:
    """Dotted RunConfig overrides for every flag that was given"""
    mapping = {
        "seed": "seed",
        "out": "out_dir",
        "cube": "cube_path",
        "checkpoint": "checkpoint_path",
        "palette": "palette_path",
        "epochs": "train.epochs",
        "learning_rate": "train.learning_rate",
        "batch_size": "train.batch_size",
        "patch_size": "train.patch_size",
        "stride": "train.stride",
        "pca_bands": "train.pca_bands",
        "l2_lambda": "train.l2_lambda",
        "wavelet": "model.wavelet",
        "kernel_set": "model.kernel_set",
        "wtbc_levels": "model.wtbc_levels",
        "rows": "synth.rows",
        "cols": "synth.cols",
        "bands": "synth.bands",
        "classes": "synth.classes",
        "noise_sigma": "synth.noise_sigma",
    }
    overrides: Dict[str, Any] = {}
    for attr, dotted in mapping.items():
        value = getattr(args, attr, None)
        if value is not None:
            overrides[dotted] = value
    for flag, dotted in (("no_mca", "model.use_mca"), ("no_wtbc", "model.use_wtbc"), ("no_fusion", "model.use_fusion")):
        if getattr(args, flag, False):
            overrides[dotted] = False
    return overrides


def load_config(args: argparse.Namespace) -> RunConfig:
    """Config file (if any), then command-line overrides"""
    base = RunConfig.from_json_file(args.config) if getattr(args, "config", None) else RunConfig()
    return base.with_overrides(overrides_from_args(args))


def _required(values, flag: str, text: str):
    if values is None:
        raise ConfigError(f"{flag}: cannot parse {text!r} as a comma-separated list")
    return values


def run_command(args: argparse.Namespace, config: RunConfig) -> List:
    handlers = CommandHandlers(config)
    if args.command == "synth":
        return handlers.cmd_synth()
    if args.command == "train":
        return handlers.cmd_train()
    if args.command == "eval":
        return handlers.cmd_eval()
    if args.command == "predict":
        return handlers.cmd_predict()
    if args.command == "analyze-params":
        R_list = _required(ArgumentParser.parse_int_list(args.R_list), "--R-list", args.R_list)
        L_list = _required(ArgumentParser.parse_int_list(args.L_list), "--L-list", args.L_list)
        if args.C_in < 1:
            raise ConfigError(f"--c-in must be positive, got {args.C_in}")
        return handlers.cmd_analyze_params(R_list, L_list, args.C_in)
    if args.command == "ablate":
        seeds = _required(ArgumentParser.parse_int_list(args.seeds), "--seeds", args.seeds) if args.seeds else None
        fractions = None
        if args.train_fractions:
            fractions = _required(
                ArgumentParser.parse_float_list(args.train_fractions), "--train-fractions", args.train_fractions
            )
        return handlers.cmd_ablate(fractions, seeds)
    raise ConfigError(f"unknown command {args.command!r}")


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Process entry point; returns the exit code"""
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.print_schema:
        print(RunConfig.json_schema_text())
        return 0
    if args.command not in COMMANDS:
        parser.print_help()
        return ConfigError.exit_code

    setup_logging(args.log_level)
    try:
        config = load_config(args)
        logger.info(f"Running {args.command} with seed {config.seed}, output {config.out_dir}")
        print_summary(run_command(args, config))
        return 0
    except CwssnetError as e:
        logger.error(f"{args.command} failed: {e}")
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except Exception as e:
        logger.error(f"{args.command} failed unexpectedly: {e}", exc_info=True)
        print(f"error: {e}", file=sys.stderr)
        return 1
