#!/usr/bin/env python3
"""Regenerate the bundled 256-entry RGBA colormap assets.

Samples matplotlib's lookup tables (matplotlib is only needed to run this
script, not to use the package) and writes them as raw 256x4 byte files under
src/megascatter/assets/. Run from the repository root:

    python3 scripts/gen_colormaps.py
"""

from pathlib import Path

import numpy as np
from matplotlib import colormaps

ASSET_DIR = Path(__file__).resolve().parent.parent / "src" / "megascatter" / "assets"
NAMES = ("viridis", "magma")
ENTRIES = 256


def main():
    ASSET_DIR.mkdir(parents=True, exist_ok=True)
    for name in NAMES:
        cmap = colormaps[name]
        # Round half-up so entries match the palettes' published hex values.
        floats = cmap(np.linspace(0.0, 1.0, ENTRIES))
        table = np.floor(floats * 255.0 + 0.5).astype(np.uint8)
        assert table.shape == (ENTRIES, 4) and table.dtype == np.uint8
        out = ASSET_DIR / f"{name}.rgba"
        out.write_bytes(table.tobytes())
        print(f"wrote {out} ({table.shape[0]} entries, "
              f"ends {tuple(table[0][:3])} -> {tuple(table[-1][:3])})")


if __name__ == "__main__":
    main()
