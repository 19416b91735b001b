import pytest

from candlekit import (
    Candle,
    LabelerParams,
    Series,
    StrengthLabel,
    SynthParams,
    atr,
    build_samples,
    detect_all,
    synth_series,
    trend_strength,
    true_range,
)
from candlekit.errors import BadParams, OutOfRange

from conftest import make_series


class TestAtr:
    def test_constant_series_zero(self, constant_series):
        for i in (14, 30, 50):
            assert atr(constant_series, i, 14) == 0.0

    def test_two_candle_toy(self):
        # true_range(1) = max(106-101, |106-100|, |101-100|) = 6
        s = make_series([(100.0, 100.5, 99.5, 100.0), (105.0, 106.0, 101.0, 105.0)])
        assert true_range(s, 1) == 6.0
        assert atr(s, 1, 1) == 6.0

    def test_out_of_range(self):
        s = synth_series(1, 20)
        with pytest.raises(OutOfRange):
            atr(s, 10, 14)
        with pytest.raises(OutOfRange):
            atr(s, 25, 5)

    def test_nonnegative(self, walk_series):
        assert all(atr(walk_series, i, 14) >= 0 for i in range(14, 60))


class TestTrendStrength:
    def test_strong_when_move_beats_atr(self):
        # flat history (atr small), then a jump of 5 within the horizon
        rows = [(100.0, 101.0, 99.0, 100.0)] * 20 + [(100.0, 106.0, 99.9, 105.0)] * 5
        s = make_series(rows)
        p = LabelerParams(horizon=5, atr_period=14, strength_mult=1.0)
        assert trend_strength(s, 19, p) is StrengthLabel.STRONG

    def test_weak_on_zero_move(self):
        rows = [(100.0, 101.0, 99.0, 100.0)] * 25
        s = make_series(rows)
        assert trend_strength(s, 19) is StrengthLabel.WEAK

    def test_flat_boundary_is_strong(self, constant_series):
        # 0 >= 0 convention
        assert trend_strength(constant_series, 20) is StrengthLabel.STRONG

    def test_out_of_range(self, constant_series):
        with pytest.raises(OutOfRange):
            trend_strength(constant_series, 58)  # no 5-candle future
        with pytest.raises(OutOfRange):
            trend_strength(constant_series, 10)  # no ATR history

    def test_scale_invariance(self, walk_series):
        scaled = Series(
            symbol="S",
            candles=tuple(
                Candle(c.timestamp, c.open * 250, c.high * 250, c.low * 250, c.close * 250)
                for c in walk_series.candles
            ),
        )
        for i in range(20, 150, 7):
            assert trend_strength(walk_series, i) is trend_strength(scaled, i)

    def test_params_validation(self):
        with pytest.raises(BadParams):
            LabelerParams(horizon=0)
        with pytest.raises(BadParams):
            LabelerParams(strength_mult=0.0)


class TestBuildSamples:
    def test_constant_60_candles_gives_26_strong_dojis(self, constant_series):
        samples = build_samples(constant_series)
        assert len(samples) == 26
        assert [s.match.end_index for s in samples] == list(range(29, 55))
        assert all(s.strength is StrengthLabel.STRONG for s in samples)
        assert all(len(s.history) == 30 for s in samples)

    def test_window_tail_is_the_pattern(self, walk_series):
        for s in build_samples(walk_series):
            tail = s.history.candles[-s.match.span :]
            src = walk_series.candles[s.match.end_index - s.match.span + 1 : s.match.end_index + 1]
            assert tail == src
            assert s.history.source_end_index == s.match.end_index

    def test_excluded_count_reported(self, walk_series, caplog):
        with caplog.at_level("INFO", logger="candlekit.labeling"):
            samples = build_samples(walk_series)
        matches = detect_all(walk_series)
        excluded = len(matches) - len(samples)
        assert f"({excluded} excluded)" in caplog.text
        admissible = [
            m for m in matches if m.end_index >= 29 and m.end_index + 5 < len(walk_series)
        ]
        assert len(samples) == len(admissible)

    def test_sample_ids_deterministic(self, walk_series):
        a = [s.sample_id for s in build_samples(walk_series)]
        b = [s.sample_id for s in build_samples(walk_series)]
        assert a == b
        assert a[0] == f"{walk_series.symbol}:{build_samples(walk_series)[0].match.end_index}:" + \
            build_samples(walk_series)[0].match.kind.value

    def test_no_matches_no_samples(self):
        # too short for any admissible sample
        s = synth_series(3, 20, SynthParams(volatility=0.02))
        assert build_samples(s) == []

    def test_future_horizon_exists(self, walk_series):
        lp = LabelerParams()
        for s in build_samples(walk_series, labeler_params=lp):
            assert s.match.end_index + lp.horizon < len(walk_series)
