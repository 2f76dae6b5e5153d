#!/usr/bin/env python3
"""Regenerate the golden PNGs under tests/goldens/.

Run only when the rasterizer's output is intentionally changed, inspect the
images, and commit the result. The test suite compares fresh renders against
these files byte for byte.

    python3 scripts/gen_goldens.py
"""

from pathlib import Path

from megascatter.png import write_png

import sys

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))
from golden_scenes import GOLDEN_SCENES  # noqa: E402

OUT_DIR = Path(__file__).resolve().parent.parent / "tests" / "goldens"


def main():
    OUT_DIR.mkdir(parents=True, exist_ok=True)
    for name, render in GOLDEN_SCENES.items():
        image = render()
        path = OUT_DIR / f"{name}.png"
        write_png(path, image)
        lit = int((image[:, :, :3].sum(axis=2) > 0).sum())
        print(f"wrote {path} shape={image.shape} lit_pixels={lit}")


if __name__ == "__main__":
    main()
