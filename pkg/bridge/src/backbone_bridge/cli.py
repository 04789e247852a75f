"""Command line for the backbone bridge.

Inputs come either from repeated --in/--out pairs or from a JSON config
file with the same keys as BridgeConfig; explicit flags win over config
values. A manifest mode mirrors the core pipeline layout: it reads a
frames manifest (path,label,subject_id,config_id) and writes one feature
file per clip plus an output manifest.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .backbones import BackboneError
from .extract import CHANNEL_RULES, BridgeConfig, extract
from .formats import FrameFileError


def build_parser():
    parser = argparse.ArgumentParser(
        prog="evact-bridge",
        description="run a frozen vision backbone over frame files and emit "
                    "feature interchange files")
    parser.add_argument("--config", help="JSON file of BridgeConfig fields")
    parser.add_argument("--backbone", default=None,
                        help="toy-cnn or torchvision:<model> "
                             "(default torchvision:resnet18)")
    parser.add_argument("--in", dest="inputs", action="append", default=[],
                        help="frame file (repeatable, pairs with --out)")
    parser.add_argument("--out", dest="outputs", action="append", default=[],
                        help="feature file (repeatable)")
    parser.add_argument("--manifest", help="frames manifest to convert wholesale")
    parser.add_argument("--out-dir", help="output directory for manifest mode")
    parser.add_argument("--batch-size", type=int, default=None)
    parser.add_argument("--channel-rule", choices=CHANNEL_RULES, default=None)
    parser.add_argument("--gray", dest="gray_files", action="append", default=[],
                        help="gray frame file per input (gray-file rule)")
    parser.add_argument("--resize", default=None, help="HxW, e.g. 224x224")
    parser.add_argument("--normalize-mean", default=None, help="m1,m2,m3")
    parser.add_argument("--normalize-std", default=None, help="s1,s2,s3")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--weights", dest="weights_path", default=None,
                        help="state-dict file for the backbone")
    return parser


def _parse_triplet(text):
    vals = tuple(float(v) for v in text.split(","))
    if len(vals) != 3:
        raise ValueError(f"expected three comma-separated values, got {text!r}")
    return vals


def _config_from_args(args):
    fields = {}
    if args.config:
        fields.update(json.loads(Path(args.config).read_text()))
    overrides = {
        "backbone": args.backbone,
        "batch_size": args.batch_size,
        "channel_rule": args.channel_rule,
        "seed": args.seed,
        "weights_path": args.weights_path,
    }
    if args.inputs:
        overrides["inputs"] = args.inputs
    if args.outputs:
        overrides["outputs"] = args.outputs
    if args.gray_files:
        overrides["gray_files"] = args.gray_files
    if args.resize:
        h, w = args.resize.lower().split("x")
        overrides["resize"] = (int(h), int(w))
    if args.normalize_mean:
        overrides["normalize_mean"] = _parse_triplet(args.normalize_mean)
    if args.normalize_std:
        overrides["normalize_std"] = _parse_triplet(args.normalize_std)
    fields.update({k: v for k, v in overrides.items() if v is not None})
    labels = fields.pop("labels", None)
    return fields, labels


def _manifest_rows(path):
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        return list(reader)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        fields, labels = _config_from_args(args)
        manifest_rows = None
        if args.manifest:
            if not args.out_dir:
                print("error: --manifest requires --out-dir", file=sys.stderr)
                return 3
            manifest_dir = Path(args.manifest).parent
            out_dir = Path(args.out_dir)
            out_dir.mkdir(parents=True, exist_ok=True)
            manifest_rows = _manifest_rows(args.manifest)
            fields["inputs"] = [str(manifest_dir / r["path"]) for r in manifest_rows]
            fields["outputs"] = [str(out_dir / (Path(r["path"]).stem + ".ftr"))
                                 for r in manifest_rows]
            labels = [int(r["label"]) for r in manifest_rows]
        cfg = BridgeConfig(labels=labels, **fields)
        if not cfg.inputs:
            print("error: nothing to extract (use --in/--out, --manifest, "
                  "or a config file)", file=sys.stderr)
            return 3
        written = extract(cfg)
        if manifest_rows is not None:
            with open(Path(args.out_dir) / "manifest.csv", "w", newline="") as f:
                writer = csv.writer(f)
                writer.writerow(["path", "label", "subject_id", "config_id"])
                for row, dst in zip(manifest_rows, written):
                    writer.writerow([Path(dst).name, row["label"],
                                     row["subject_id"], row["config_id"]])
        print(f"wrote {len(written)} feature file(s) with backbone {cfg.backbone}")
        return 0
    except FileNotFoundError as exc:
        print(f"error: missing file: {exc}", file=sys.stderr)
        return 4
    except (ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (FrameFileError, BackboneError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 5


if __name__ == "__main__":
    sys.exit(main())
