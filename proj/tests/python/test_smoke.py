import math

import pytest

import nanprop


def matvec(x):
    return [x[0], x[0] + x[1]]


def test_trace_methods_agree_on_matvec():
    expected = nanprop.Pattern(["10", "11"])
    for method in ("onehot", "payload", "fd"):
        r = nanprop.trace(matvec, [1.0, 1.0], 2, method=method)
        assert r["pattern"] == expected, method
    chunked = nanprop.trace(matvec, [1.0, 1.0], 2, method="chunked", chunk=2)
    assert chunked["pattern"].covers(expected)
    assert chunked["eval_count"] == 1


def test_coincidental_zero():
    sq = lambda x: [x[0] * x[0]]
    assert nanprop.trace(sq, [0.0], 1)["pattern"].rows() == ["1"]
    fd = nanprop.trace(sq, [0.0], 1, method="fd", scheme="central")
    assert fd["pattern"].rows() == ["0"]


def test_python_exception_is_nan_incompatible():
    def reject(x):
        if any(math.isnan(v) for v in x):
            raise ValueError("nan input")
        return [x[0]]

    with pytest.raises(nanprop.NanIncompatible):
        nanprop.trace(reject, [1.0], 1)
    assert nanprop.trace(reject, [1.0], 1, method="fd")["pattern"].rows() == ["1"]


def test_fixtures_and_compare():
    assert "surrogate38" in nanprop.fixture_names()
    nan = nanprop.trace_fixture("surrogate38")["pattern"]
    fd = nanprop.trace_fixture("surrogate38", method="fd")["pattern"]
    diff = nanprop.compare(nan, fd)
    assert len(diff["false_negatives"]) == 10
    assert diff["extra_deps"] == []


def test_color_and_compress():
    p = nanprop.Pattern(["100", "010", "001"])
    color_of, k = nanprop.color(p)
    assert k == 1 and color_of == [0, 0, 0]
    assert nanprop.speedup(38, 25) == pytest.approx(1.52)
    f = lambda x: [2.0 * x[0], 3.0 * x[1], math.sin(x[2])]
    values, evals = nanprop.compressed_jacobian(f, [1.0, 1.0, 0.5], p)
    assert evals == 2
    assert values[(0, 0)] == pytest.approx(2.0, rel=1e-6)
    assert values[(2, 2)] == pytest.approx(math.cos(0.5), rel=1e-6)


def test_payload_codec_and_text():
    for k in (0, 1, 12345, 2**51 - 1):
        v = nanprop.payload_encode(k)
        assert math.isnan(v)
        assert nanprop.payload_decode(v) == k
    assert nanprop.payload_decode(1.0) is None
    p = nanprop.Pattern(["1?", "01"])
    assert nanprop.Pattern.from_text(p.to_text()) == p
    with pytest.raises(nanprop.ParseError):
        nanprop.Pattern.from_text("garbage")
