#!/usr/bin/env python3
"""
Command-line entry point: generate, extract, sweep and probe.

Exit codes: 0 success, 1 usage error, 2 data/validation error, 3 internal error.
"""

import argparse
import logging
import sys
import time
import traceback
from concurrent.futures import ThreadPoolExecutor, as_completed
from pathlib import Path
from typing import List, Optional, Sequence

import pandas as pd
from pydantic import ValidationError

sys.path.append(str(Path(__file__).resolve().parent))

from bench import (
    complexity_probe,
    emit_report,
    feature_cost_frame,
    feature_cost_probe,
    prepare_dataset,
    probe_frame,
    sweep,
)
from config import RunConfig, configure_logging, load_run_config, log_effective_config
from errors import CellError, DataError, GlcmLabError, UsageError
from glcm import ANGLES, FEATURE_NAMES, FeatureCombo, extract_features, feature_column_names
from shapegen import export_dataset_dir, generate_dataset, load_dataset_dir, split_dataset

log = logging.getLogger("CLI")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3

# datasets go to disk at 8 bits; `levels` applies when they are read back
DISK_LEVELS = 256

HELP_EPILOG = (
    f"features: {', '.join(FEATURE_NAMES)}\n"
    f"angles (fixed): {', '.join(f'{a} deg' for a in ANGLES)}\n"
    "combinations are written name+name or name+name+name, e.g. energy+homogeneity"
)


class CliParser(argparse.ArgumentParser):
    """argparse that reports bad input as a UsageError instead of exiting"""

    def error(self, message):
        raise UsageError(message)


def _seed_list(text: str) -> List[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument("--config", type=Path, help="key=value config file")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--output-dir", type=Path)
    parser.add_argument("--jobs", type=int, help="worker threads; keep 1 when the *_ms timings matter")
    parser.add_argument("--verbose", "-v", action="store_true")


def _add_pipeline(parser: argparse.ArgumentParser):
    parser.add_argument("--side", type=int, help="image side after resizing (default 64)")
    parser.add_argument("--levels", type=int, help="gray levels L before GLCM (default 8)")
    parser.add_argument("--distance", type=int, help="GLCM pixel distance (default 1)")


def build_parser() -> CliParser:
    parser = CliParser(
        prog="glcmlab",
        description="GLCM texture features, K-NN / linear SVM, and the 20-combination sweep.",
        epilog=HELP_EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    commands = parser.add_subparsers(dest="command", metavar="{generate,extract,sweep,probe}")
    commands.required = True

    generate = commands.add_parser("generate", help="render the synthetic shape dataset",
                                   epilog=HELP_EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    generate.add_argument("dataset_dir", nargs="?", type=Path,
                          help="target directory (default <output-dir>/dataset)")
    generate.add_argument("--images-per-class", type=int)
    generate.add_argument("--side", type=int, help="rendered image side (default 64)")
    generate.add_argument("--levels", type=int, help="gray levels the noise sigma is measured in (default 8)")
    generate.add_argument("--noise-sigma", type=float)
    generate.add_argument("--train-fraction", type=float)
    _add_common(generate)

    extract = commands.add_parser("extract", help="write per-sample feature vectors as CSV",
                                  epilog=HELP_EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    extract.add_argument("dataset_dir", type=Path)
    extract.add_argument("--combo", required=True, help="e.g. energy+homogeneity")
    extract.add_argument("--output", type=Path, help="CSV path (default <output-dir>/features_<combo>.csv)")
    _add_pipeline(extract)
    _add_common(extract)

    sweep_cmd = commands.add_parser("sweep", help="run all 20 combinations with K-NN and SVM",
                                    epilog=HELP_EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    sweep_cmd.add_argument("dataset_dir", type=Path)
    _add_pipeline(sweep_cmd)
    sweep_cmd.add_argument("--train-fraction", type=float)
    sweep_cmd.add_argument("--knn-k", type=int)
    sweep_cmd.add_argument("--svm-lambda", type=float)
    sweep_cmd.add_argument("--svm-epochs", type=int)
    sweep_cmd.add_argument("--seeds", type=_seed_list, help="extra sweep seeds, e.g. 43,44")
    sweep_cmd.add_argument("--save-models", action="store_true", default=None)
    _add_common(sweep_cmd)

    probe = commands.add_parser("probe", help="time GLCM construction against image side",
                                epilog=HELP_EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    probe.add_argument("--sides", type=_seed_list, help="at least 3 side lengths, e.g. 64,128,256")
    probe.add_argument("--levels", type=int)
    probe.add_argument("--trials", type=int, default=5)
    probe.add_argument("--kernel", choices=["loops", "vectorized"], default="loops")
    probe.add_argument("--features", action="store_true", help="also time each feature function")
    _add_common(probe)

    return parser


def _run_config(args: argparse.Namespace) -> RunConfig:
    overrides = {
        name: getattr(args, name)
        for name in RunConfig.model_fields
        if getattr(args, name, None) is not None
    }
    return load_run_config(args.config, overrides)


def _load_prepared(dataset_dir: Path, config: RunConfig):
    dataset = load_dataset_dir(dataset_dir, jobs=config.jobs)
    return prepare_dataset(dataset, config.side, config.levels)


def cmd_generate(args: argparse.Namespace, config: RunConfig) -> int:
    dataset_dir = args.dataset_dir or config.output_dir / "dataset"
    render_sigma = config.noise_sigma * DISK_LEVELS / config.levels

    dataset = generate_dataset(config.images_per_class, config.side, DISK_LEVELS,
                               render_sigma, config.seed, jobs=config.jobs)
    dataset = split_dataset(dataset, config.train_fraction, config.seed)
    export_dataset_dir(dataset, dataset_dir)

    print(f"✅ Generated {len(dataset)} images "
          f"({len(dataset.split.train)} train / {len(dataset.split.test)} test)")
    print(f"📁 Dataset directory: {dataset_dir}")
    return EXIT_OK


def extract_frame(dataset, combo: FeatureCombo, distance: int, jobs: int = 1) -> pd.DataFrame:
    images = dataset.images
    vectors = [None] * len(images)
    with ThreadPoolExecutor(max_workers=max(1, jobs)) as executor:
        future_to_index = {
            executor.submit(extract_features, image, combo, distance): index
            for index, image in enumerate(images)
        }
        for future in as_completed(future_to_index):
            vectors[future_to_index[future]] = future.result()

    frame = pd.DataFrame([v.values for v in vectors], columns=feature_column_names(combo))
    frame.insert(0, "label", dataset.labels)
    frame.insert(0, "sample_index", range(len(images)))
    return frame


def cmd_extract(args: argparse.Namespace, config: RunConfig) -> int:
    combo = FeatureCombo.parse(args.combo)
    dataset = _load_prepared(args.dataset_dir, config)
    frame = extract_frame(dataset, combo, config.distance, config.jobs)

    output = args.output or config.output_dir / f"features_{combo.name}.csv"
    output.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(output, index=False, float_format="%.17g")

    print(f"✅ Extracted {combo.name} for {len(frame)} samples ({frame.shape[1] - 2} feature columns)")
    print(f"📁 Features: {output}")
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace, config: RunConfig) -> int:
    dataset = _load_prepared(args.dataset_dir, config)
    started = time.time()
    summary = sweep(dataset, config)
    paths = emit_report(summary, config.output_dir / "report")

    print(f"✅ Sweep finished: {len(summary.results)} cells in {time.time() - started:.1f}s")
    for row in summary.rows:
        print(f"   {row.classifier.value} {row.combo_size}-feature mean accuracy: {row.mean_accuracy:.4f}")
    for path in paths.values():
        print(f"📁 {path}")
    return EXIT_OK


def cmd_probe(args: argparse.Namespace, config: RunConfig) -> int:
    if not args.sides or len(args.sides) < 3:
        raise UsageError("probe needs --sides with at least 3 side lengths, e.g. --sides 64,128,256")

    rows = complexity_probe(args.sides, config.levels, args.trials, config.seed, args.kernel, config.distance)
    config.output_dir.mkdir(parents=True, exist_ok=True)
    probe_path = config.output_dir / "probe.csv"
    probe_frame(rows).to_csv(probe_path, index=False)
    print(f"✅ Probed {len(rows)} side lengths with the {args.kernel} kernel")
    for previous, row in zip(rows, rows[1:]):
        print(f"   {previous.side} -> {row.side}: time x{row.median_ms / previous.median_ms:.2f}, "
              f"ops x{row.cell_ops / previous.cell_ops:.2f}")
    print(f"📁 Probe: {probe_path}")

    if args.features:
        cost_path = config.output_dir / "feature_costs.csv"
        feature_cost_frame(feature_cost_probe(config.levels, seed=config.seed)).to_csv(cost_path, index=False)
        print(f"📁 Feature costs: {cost_path}")
    return EXIT_OK


COMMANDS = {
    "generate": cmd_generate,
    "extract": cmd_extract,
    "sweep": cmd_sweep,
    "probe": cmd_probe,
}


def _exit_code(error: BaseException) -> int:
    if isinstance(error, UsageError):
        return EXIT_USAGE
    if isinstance(error, (DataError, ValidationError, OSError)):
        return EXIT_DATA
    if isinstance(error, CellError):
        return _exit_code(error.cause) if error.cause is not None else EXIT_INTERNAL
    return EXIT_INTERNAL


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        configure_logging(args.verbose)
        config = _run_config(args)
        log_effective_config(config)
        return COMMANDS[args.command](args, config)
    except GlcmLabError as e:
        code = _exit_code(e)
        log.error(str(e))
        print(f"❌ {e}")
        return code
    except (ValidationError, OSError) as e:
        log.error(str(e))
        print(f"❌ {e}")
        return EXIT_DATA
    except Exception as e:
        log.error(traceback.format_exc())
        print(f"❌ Internal error: {e}")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
