"""Cut a rendered chart into overlapping 3-candle sub-charts.

A 30-candle chart yields exactly (30 - 3) / 1 + 1 = 28 crops; each crop
keeps the parent's vertical scale and re-segments into exactly 3 candles.
"""

from pathlib import Path

from candlekit import render_window, segment_columns, subcharts, synth_series, window, write_ppm

out = Path("demo_out")
out.mkdir(exist_ok=True)

w = window(synth_series(seed=9, n=40), end_index=35, w=30)
img = render_window(w)
crops = subcharts(img, k=3, stride=1)
print(f"{len(segment_columns(img))} candles -> {len(crops)} sub-charts")

for i, crop in enumerate(crops[:4]):
    path = out / f"sub{i:02d}.ppm"
    path.write_bytes(write_ppm(crop))
    print(f"  {path} {crop.width_px}x{crop.height_px}, candles={len(segment_columns(crop))}")
print("  ...")
