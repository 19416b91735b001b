"""Render a 30-candle window to a PPM chart, then recover the numbers.

Because the renderer is pixel-deterministic (no anti-aliasing, fixed
palette, pinned rounding), the inverse parser gets every OHLC field back
within one pixel-quantum of the truth and every candle direction exactly.
"""

from pathlib import Path

from candlekit import (
    inverse_parse,
    pixel_quantum,
    render_window,
    synth_series,
    window,
    write_ppm,
)
from candlekit.raster import RenderSpec

out = Path("demo_out")
out.mkdir(exist_ok=True)

spec = RenderSpec()
w = window(synth_series(seed=3, n=60), end_index=45, w=30)
img = render_window(w, spec)
path = out / "chart.ppm"
path.write_bytes(write_ppm(img))
print(f"rendered {img.width_px}x{img.height_px} chart -> {path}")

axis = (min(c.low for c in w.candles), max(c.high for c in w.candles))
parsed = inverse_parse(img, spec, axis)
q = pixel_quantum(axis, spec)

worst = 0.0
for got, truth in zip(parsed, w.candles):
    for f in ("open", "high", "low", "close"):
        worst = max(worst, abs(getattr(got, f) - getattr(truth, f)))
print(f"parsed {len(parsed)} candles back")
print(f"pixel quantum {q:.5f}; worst field error {worst:.5f} ({worst / q:.2f} quanta)")

directions_ok = all(
    (got.direction.value == "up") == (truth.close >= truth.open)
    for got, truth in zip(parsed, w.candles)
)
print(f"directions exact: {directions_ok}")
