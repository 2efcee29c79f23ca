import re
import xml.etree.ElementTree as ET

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from resonance.svg import HEIGHT, WIDTH, nice_ticks, polyline_svg, write_svg

NS = "{http://www.w3.org/2000/svg}"


def test_nice_ticks():
    assert nice_ticks(-1, 1) == [-1.0, -0.5, 0.0, 0.5, 1.0]
    ticks = nice_ticks(0.0, 37.0)
    assert ticks[0] == 0 and ticks[-1] <= 37
    assert nice_ticks(3.0, 3.0)  # degenerate range still yields ticks
    assert nice_ticks(0.0, 5e-324)


def test_document_structure(tmp_path):
    x = np.linspace(-1, 1, 50)
    path = write_svg(tmp_path / "p.svg", x, x ** 3, "nu", "xi", "title & more")
    root = ET.parse(path).getroot()
    assert root.tag == NS + "svg"
    assert root.get("width") == str(WIDTH) and root.get("height") == str(HEIGHT)
    polylines = root.findall(f".//{NS}polyline")
    assert len(polylines) == 1
    assert len(polylines[0].get("points").split()) == 50


def test_deterministic_output():
    x = np.linspace(0, 3, 20)
    assert polyline_svg(x, np.sin(x), "a", "b") == polyline_svg(x.copy(), np.sin(x), "a", "b")


def test_rejects_bad_input():
    with pytest.raises(ValueError):
        polyline_svg([], [])
    with pytest.raises(ValueError):
        polyline_svg([0, 1], [0, np.nan])


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=30))
def test_points_stay_inside_viewport(ys):
    svg = polyline_svg(np.arange(len(ys), dtype=float), ys)
    points = re.search(r'points="([^"]*)"', svg).group(1).split()
    for p in points:
        px, py = map(float, p.split(","))
        assert 0 <= px <= WIDTH and 0 <= py <= HEIGHT
