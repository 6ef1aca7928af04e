"""Entry point: `python -m segtrainer <manifest>`."""

import argparse
import sys

from segtrainer.manifest import ManifestError, read_manifest
from segtrainer.train import TrainerError, predict, train


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="segtrainer",
        description="train or predict according to a run manifest",
    )
    parser.add_argument("manifest", help="path to a run manifest file")
    args = parser.parse_args(argv)
    try:
        manifest = read_manifest(args.manifest)
        if manifest.mode == "train":
            train(manifest)
        else:
            predict(manifest)
    except (ManifestError, TrainerError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
