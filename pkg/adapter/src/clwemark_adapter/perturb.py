"""Image perturbations applied between rendering and inversion.

Perturbation semantics are deliberately explicit since "level" conventions
vary between libraries: levels here are recorded in run metadata by the eval
driver rather than assumed to match anyone else's parameterization.
"""

from __future__ import annotations

import io
import shutil
from pathlib import Path

import numpy as np
from PIL import Image, ImageEnhance

KINDS = ("none", "jpeg", "brightness", "crop", "rotate")


def perturb(image_path, kind: str, level: float, out_path, seed: int = 0) -> Path:
    """Apply one perturbation and write the result.

    kind:
      none        byte-identical copy (level ignored)
      jpeg        re-encode at quality round(level * 100)
      brightness  multiply luminance by ``level`` (1.0 is identity)
      crop        keep a level-fraction window per axis at a seeded random
                  offset, then resize back to the original size
      rotate      rotate by ``level`` degrees about the center, same canvas
    """
    out_path = Path(out_path)
    if kind == "none":
        shutil.copyfile(image_path, out_path)
        return out_path

    image = Image.open(image_path)
    image.load()
    if kind == "jpeg":
        if not 0.0 < level <= 1.0:
            raise ValueError(f"jpeg level must be in (0, 1], got {level}")
        buf = io.BytesIO()
        image.convert("RGB").save(buf, format="JPEG", quality=int(round(level * 100)))
        buf.seek(0)
        Image.open(buf).save(out_path)
    elif kind == "brightness":
        if level < 0:
            raise ValueError(f"brightness level must be >= 0, got {level}")
        ImageEnhance.Brightness(image.convert("RGB")).enhance(level).save(out_path)
    elif kind == "crop":
        if not 0.0 < level <= 1.0:
            raise ValueError(f"crop level must be in (0, 1], got {level}")
        w, h = image.size
        cw, ch = max(1, int(round(w * level))), max(1, int(round(h * level)))
        rng = np.random.default_rng(seed)
        left = int(rng.integers(0, w - cw + 1))
        top = int(rng.integers(0, h - ch + 1))
        image.crop((left, top, left + cw, top + ch)).resize((w, h), Image.BILINEAR).save(out_path)
    elif kind == "rotate":
        image.rotate(level, resample=Image.BILINEAR, expand=False).save(out_path)
    else:
        raise ValueError(f"unsupported perturbation kind {kind!r} (choose from {KINDS})")
    return out_path
