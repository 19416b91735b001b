"""Scan a synthetic series for the ten catalog patterns and summarize.

All rules are ratio-based (body vs range, wick vs body), so the same
matches come back if every price is multiplied by a constant.
"""

from collections import Counter

from candlekit import Candle, Series, detect_all, synth_series

series = synth_series(seed=21, n=400)
matches = detect_all(series)

print(f"{len(matches)} matches over {len(series)} candles\n")
counts = Counter(m.kind.value for m in matches)
for kind, count in counts.most_common():
    print(f"  {kind:<22} {count:>4}")

print("\nfirst five matches:")
for m in matches[:5]:
    print(f"  t={m.end_index:<4} {m.kind.value:<22} span={m.span} {m.direction.value}")

scaled = Series(
    symbol="SCALED",
    candles=tuple(
        Candle(c.timestamp, c.open * 1000, c.high * 1000, c.low * 1000, c.close * 1000)
        for c in series.candles
    ),
)
same = [(m.end_index, m.kind) for m in detect_all(scaled)] == [
    (m.end_index, m.kind) for m in matches
]
print(f"\nscale invariance at c=1000: {'holds' if same else 'BROKEN'}")
