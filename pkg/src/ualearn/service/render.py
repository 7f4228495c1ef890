"""Server-side PNG rendering of samples for the annotation UI.

Image samples render as upscaled grayscale/RGB; tabular samples render as
a horizontal bar chart of feature values, so every task has one format.
"""

import io

import numpy as np
from PIL import Image, ImageDraw

TARGET_SIZE = 256
BAR_HEIGHT = 22
BAR_GAP = 6
MARGIN = 12


def render_sample_png(features):
    arr = np.asarray(features, dtype=np.float64)
    if arr.ndim == 3:
        return _render_image(arr)
    return _render_bars(arr.reshape(-1))


def _render_image(arr):
    h, w, c = arr.shape
    data = np.clip(arr * 255.0, 0, 255).astype(np.uint8)
    if c == 1:
        img = Image.fromarray(data[:, :, 0], mode="L")
    elif c == 3:
        img = Image.fromarray(data, mode="RGB")
    else:
        raise ValueError(f"cannot render {c}-channel image")
    scale = max(1, TARGET_SIZE // max(h, w))
    if scale > 1:
        img = img.resize((w * scale, h * scale), Image.NEAREST)
    return _to_png(img)


def _render_bars(values):
    n = len(values)
    height = MARGIN * 2 + n * (BAR_HEIGHT + BAR_GAP)
    width = TARGET_SIZE + 2 * MARGIN
    img = Image.new("RGB", (width, height), "white")
    draw = ImageDraw.Draw(img)
    span = max(1e-9, float(np.abs(values).max()))
    mid = width // 2
    for i, v in enumerate(values):
        y0 = MARGIN + i * (BAR_HEIGHT + BAR_GAP)
        y1 = y0 + BAR_HEIGHT
        extent = int((abs(v) / span) * (TARGET_SIZE // 2 - MARGIN))
        if v >= 0:
            draw.rectangle([mid, y0, mid + extent, y1], fill=(70, 120, 200))
        else:
            draw.rectangle([mid - extent, y0, mid, y1], fill=(200, 90, 70))
        draw.text((4, y0 + 4), f"f{i}={v:.3g}", fill="black")
    draw.line([mid, MARGIN // 2, mid, height - MARGIN // 2], fill="gray")
    return _to_png(img)


def _to_png(img):
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()
