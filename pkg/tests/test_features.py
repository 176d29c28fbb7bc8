from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from advsearch.features import (CsvError, EncodingError, FeatureEncoder, Schema, decode, encode,
                                fit_buckets, fit_encoder, infer_schema, load_csv, split_rows)


def hand_encoder():
    return FeatureEncoder(("tweets", "likes"), {"tweets": [5.0, 8.0], "likes": [0.5]},
                          {"tweets": (1.0, 20.0), "likes": (0.0, 3.0)}, ("browser", "mobile"))


def test_fit_buckets_examples():
    assert np.allclose(fit_buckets(np.arange(1, 101), 4), [25.75, 50.5, 75.25], rtol=0, atol=1e-12)
    assert fit_buckets([0.0, 10.0], 2).tolist() == [5.0]
    assert fit_buckets([3.0] * 50, 20).size == 0


def test_constant_column_gives_one_bucket():
    rows = [{"a": 7.0, "b": float(i)} for i in range(30)]
    enc = fit_encoder(rows, ["a", "b"], 5)
    assert enc.buckets_of("a") == 1
    assert enc.buckets_of("b") == 5
    assert enc.width == 6


def test_ties_collapse():
    col = [0.0] * 60 + [1.0] * 40
    b = fit_buckets(col, 10)
    # quantile k/10 sits at sorted position 9.9k: k <= 5 give 0 (dropped, at the
    # minimum), k = 6 interpolates 0.4 of the way from index 59 to 60, k >= 7 give 1
    assert np.allclose(b, [0.4, 1.0], rtol=0, atol=1e-12)


def test_fit_buckets_errors():
    with pytest.raises(ValueError):
        fit_buckets([], 4)
    with pytest.raises(ValueError):
        fit_buckets([1.0, float("nan")], 4)
    with pytest.raises(ValueError):
        fit_buckets([1.0, 2.0], 1)


def test_boundary_membership():
    enc = hand_encoder()
    assert enc.bucket("tweets", 1.0) == 0
    assert enc.bucket("tweets", 4.999) == 0
    assert enc.bucket("tweets", 5.0) == 1        # on a cut point: goes up
    assert enc.bucket("tweets", 8.0) == 2
    assert enc.bucket("tweets", 1e9) == 2
    assert enc.interval("tweets", 1).contains(5.0)
    assert not enc.interval("tweets", 0).contains(5.0)


def test_encode_onehot_and_apps():
    enc = hand_encoder()
    x, vec = encode(enc, {"tweets": 6.0, "likes": 0.1, "apps": {"mobile"}})
    assert x.buckets == (1, 0) and x.app_bits == (False, True)
    names = enc.onehot_names()
    assert names == ["tweets[0]", "tweets[1]", "tweets[2]", "likes[0]", "likes[1]",
                     "app:browser:used", "app:browser:unused", "app:mobile:used",
                     "app:mobile:unused"]
    assert [n for n, v in zip(names, vec) if v] == ["tweets[1]", "likes[0]",
                                                     "app:browser:unused", "app:mobile:used"]
    assert vec.sum() == len(enc.features) + len(enc.apps)


def test_encode_errors():
    enc = hand_encoder()
    with pytest.raises(EncodingError, match="likes"):
        enc.encode({"tweets": 1.0})
    with pytest.raises(EncodingError, match="unknown apps"):
        enc.encode({"tweets": 1.0, "likes": 1.0, "apps": {"fax"}})


def test_decode_rendering():
    enc = hand_encoder()
    x = enc.encode({"tweets": 2.0, "likes": 2.0, "apps": {"browser"}})
    assert enc.describe(x) == {"tweets": "[1.0, 5.0]", "likes": "(0.5, 3.0]", "apps": ["browser"]}
    x = enc.encode({"tweets": 6.0, "likes": 0.0, "apps": set()})
    assert enc.describe(x) == {"tweets": "(5.0, 8.0]", "likes": "[0.0, 0.5]", "apps": []}
    raw = decode(enc, x)
    assert raw["tweets"].low == 5.0 and raw["tweets"].high == 8.0
    assert math.isinf(decode(enc, enc.encode({"tweets": 0, "likes": 0}))["tweets"].low)
    with pytest.raises(EncodingError):
        enc.interval("tweets", 3)


def test_encoder_roundtrip(tmp_path):
    enc = hand_encoder()
    enc.save(tmp_path / "e.json")
    back = FeatureEncoder.load(tmp_path / "e.json")
    assert back.to_dict() == enc.to_dict()


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=1, max_size=200),
       st.integers(2, 25), st.floats(-1e6, 1e6), st.floats(-1e6, 1e6))
def test_bucket_monotone(col, n, v1, v2):
    enc = fit_encoder([{"a": v} for v in col], ["a"], n)
    lo, hi = sorted((v1, v2))
    assert enc.bucket("a", lo) <= enc.bucket("a", hi)
    assert 0 <= enc.bucket("a", hi) < enc.buckets_of("a")


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 30), min_size=5, max_size=300), st.integers(2, 20))
def test_equal_mass(values, n):
    col = np.array(values, dtype=float)
    cuts = fit_buckets(col, n)
    idx = np.searchsorted(cuts, col, side="right")
    counts = np.bincount(idx, minlength=cuts.size + 1)
    N = col.size
    # every bucket starts at a cut point; ties at that point can add mass
    for k, c in enumerate(counts):
        ties = int(np.sum(col == cuts[k - 1])) if k > 0 else int(np.sum(col == col.min()))
        assert c <= math.ceil(N / n) + ties
    # merged buckets hold the mass of several quantile slots
    assert counts.sum() == N


def test_equal_mass_distinct_values():
    col = np.random.default_rng(0).permutation(1000).astype(float)
    cuts = fit_buckets(col, 20)
    counts = np.bincount(np.searchsorted(cuts, col, side="right"))
    assert counts.size == 20 and counts.min() >= 49 and counts.max() <= 51


CSV = "id,tweets,likes,apps\na,1,0.5,browser|mobile\nb,7,1.25,\nc,30,0,mobile\n"


def test_load_csv(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text(CSV)
    schema = infer_schema(p)
    assert schema.numeric == ("tweets", "likes") and schema.id_column == "id"
    rows = load_csv(p, schema)
    assert len(rows) == 3
    assert rows[0]["apps"] == {"browser", "mobile"} and rows[1]["apps"] == frozenset()
    assert rows[1]["likes"] == 1.25 and rows[2]["id"] == "c"


def test_load_csv_errors(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text(CSV)
    with pytest.raises(CsvError, match="'retweets'"):
        load_csv(p, Schema(("tweets", "retweets")))
    p.write_text("id,tweets,apps\na,lots,\n")
    with pytest.raises(CsvError, match="line 2"):
        load_csv(p, Schema(("tweets",), "apps", "id"))


def test_split_rows_deterministic():
    rows = list(range(100))
    a = split_rows(rows, 0.2, seed=3)
    assert a == split_rows(rows, 0.2, seed=3)
    assert len(a[1]) == 20 and sorted(a[0] + a[1]) == rows
