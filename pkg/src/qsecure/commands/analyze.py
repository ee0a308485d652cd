"""analyze subcommand: regenerate the evaluation tables and histogram renders."""

import argparse
import json
import logging
from pathlib import Path
from typing import Dict

from ..config import get_config
from ..models.schemas import ChannelConfig
from ..services.aes import as_key, derive_iv
from ..services.e91 import key_rate_table
from ..services.image_processor import TEST_IMAGE_KINDS, generate_test_image, write_image
from ..services.metrics_service import (
    REFERENCE_KEY_BITS,
    ciphertext_as_image,
    differential_table,
    encrypt_image,
    entropy_table,
    evaluate_sizes,
    histogram,
    key_sensitivity_experiment,
    render_histogram,
    timing_rows,
    timing_table,
    write_histogram_csv,
)
from ..services.sha256 import derive_key
from .options import add_key_arguments, int_list, load_key_bits

logger = logging.getLogger(__name__)
config = get_config()

KEY_RATE_SINGLETS = [25, 100, 250, 500]


def register(subparsers: argparse._SubParsersAction) -> None:
    analyze = subparsers.add_parser("analyze", help="Write entropy, NPCR/UACI, timing, key-rate and histogram reports")
    analyze.add_argument("--sizes", type=int_list, default=config.analyze_sizes, help="Image sizes, e.g. 64,128,256,512")
    analyze.add_argument("--kind", choices=TEST_IMAGE_KINDS, default="blocks", help="Generated test image kind")
    analyze.add_argument("--seed", type=int, default=config.seed, help="Seed for test images and the E91 runs")
    analyze.add_argument("--iv-seed", type=int, default=0, help="Seed for the IV")
    analyze.add_argument("--singlets", type=int_list, default=KEY_RATE_SINGLETS, help="Singlet counts for the key-rate table")
    analyze.add_argument("--flip-index", type=int, default=0, help="Key bit flipped in the sensitivity run")
    analyze.add_argument("--output", "-o", type=Path, help="Report directory (default: <output-dir>/analysis)")
    add_key_arguments(analyze, required=False)
    analyze.set_defaults(handler=cmd_analyze)


def cmd_analyze(args: argparse.Namespace) -> int:
    out = Path(args.output) if args.output else Path(args.output_dir) / "analysis"
    out.mkdir(parents=True, exist_ok=True)

    if args.key_file is None and args.key_bits is None:
        key_bits = REFERENCE_KEY_BITS
    else:
        key_bits = load_key_bits(args.key_file, args.key_bits)
    key = as_key(derive_key(key_bits))
    iv = derive_iv(args.iv_seed)

    written: Dict[str, str] = {}

    def save_csv(name: str, frame) -> None:
        path = out / name
        frame.to_csv(path, index=False)
        written[name] = str(path)

    reports = evaluate_sizes(args.sizes, kind=args.kind, seed=args.seed, key=key, iv=iv)
    save_csv("entropy.csv", entropy_table(reports))
    save_csv("differential.csv", differential_table(reports))
    save_csv("timing.csv", timing_table(timing_rows(reports)))
    save_csv("key_rate.csv", key_rate_table(args.singlets, ChannelConfig(), seed=args.seed))

    histograms = out / "histograms"
    for size in args.sizes:
        img = generate_test_image(size, kind=args.kind, seed=args.seed)
        encrypted = ciphertext_as_image(encrypt_image(img, key, iv), img)
        for label, view in (("original", img), ("encrypted", encrypted)):
            hist = histogram(view)
            stem = f"{size}_{label}"
            write_histogram_csv(hist, histograms / f"{stem}.csv")
            write_image(render_histogram(hist), histograms / f"{stem}.pgm")
        write_image(encrypted, histograms / f"{size}_encrypted_image.ppm")
    written["histograms"] = str(histograms)

    # Largest requested size keeps the sensitivity run comparable with the tables.
    sensitivity_image = generate_test_image(max(args.sizes), kind=args.kind, seed=args.seed)
    sensitivity = key_sensitivity_experiment(sensitivity_image, key_bits, args.flip_index, iv)
    sensitivity_path = out / "sensitivity.json"
    sensitivity_path.write_text(json.dumps(sensitivity.model_dump(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    written["sensitivity.json"] = str(sensitivity_path)

    logger.info(f"Analysis written to {out}")
    print(json.dumps(written, indent=2))
    return 0
