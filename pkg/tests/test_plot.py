"""SVG overlay rendering: structure, highlight geometry, well-formedness."""

import xml.etree.ElementTree as ET

import numpy as np
import pytest

from cfx import ShapeError, TimeSeries
from cfx.plot import render_svg, save_svg

SVG_NS = "{http://www.w3.org/2000/svg}"


def ts(vals):
    return TimeSeries(np.asarray(vals, dtype=np.float64))


def parse(svg_text):
    return ET.fromstring(svg_text)


def polylines(root):
    return root.findall(f".//{SVG_NS}polyline")


def shade_rects(root):
    return [r for r in root.findall(f".//{SVG_NS}rect") if r.get("fill-opacity")]


def panel_rects(root):
    return [
        r
        for r in root.findall(f".//{SVG_NS}rect")
        if r.get("fill") == "none" and r.get("stroke")
    ]


class TestRenderSvg:
    def test_well_formed_xml(self, rng):
        x = ts(rng.normal(size=(2, 30)))
        cf = ts(x.values + rng.normal(size=(2, 30)) * 0.2)
        root = parse(render_svg(x, cf))
        assert root.tag == f"{SVG_NS}svg"
        assert root.get("version") == "1.1"

    def test_identical_series_no_highlights(self, rng):
        x = ts(rng.normal(size=(1, 25)))
        root = parse(render_svg(x, ts(x.values.copy())))
        assert shade_rects(root) == []
        lines = polylines(root)
        assert len(lines) == 2
        # coincident curves: identical point strings
        assert lines[0].get("points") == lines[1].get("points")

    def test_polyline_point_count_equals_length(self, rng):
        for t in (2, 9, 40):
            x = ts(rng.normal(size=(1, t)))
            cf = ts(rng.normal(size=(1, t)))
            for line in polylines(parse(render_svg(x, cf))):
                assert len(line.get("points").split()) == t

    def test_single_segment_one_rect_with_matching_extent(self):
        t = 21
        x = ts(np.zeros((1, t)))
        vals = np.zeros((1, t))
        vals[0, 6:10] = 1.0  # one changed run, steps 6..9
        cf = ts(vals)
        root = parse(render_svg(x, cf))
        rects = shade_rects(root)
        assert len(rects) == 1
        left, right, width = 56, 18, 900
        plot_w = width - left - right

        def x_px(step):
            return left + plot_w * step / (t - 1)

        assert float(rects[0].get("x")) == pytest.approx(x_px(5.5), abs=0.01)
        assert float(rects[0].get("width")) == pytest.approx(x_px(9.5) - x_px(5.5), abs=0.02)

    def test_two_segments_two_rects(self):
        x = ts(np.zeros((1, 30)))
        vals = np.zeros((1, 30))
        vals[0, 3] = 1.0
        vals[0, 20:23] = -1.0
        root = parse(render_svg(x, ts(vals)))
        assert len(shade_rects(root)) == 2

    def test_three_channels_three_panels(self, rng):
        x = ts(rng.normal(size=(3, 20)))
        cf = ts(x.values + 0.3)
        root = parse(render_svg(x, cf))
        assert len(panel_rects(root)) == 3
        assert len(polylines(root)) == 6
        labels = [e.text for e in root.findall(f".//{SVG_NS}text")]
        for c in range(3):
            assert f"channel {c}" in labels

    def test_channel_label_absent_for_univariate(self, rng):
        x = ts(rng.normal(size=(1, 20)))
        root = parse(render_svg(x, ts(x.values + 1.0)))
        labels = [e.text for e in root.findall(f".//{SVG_NS}text")]
        assert all(not (t or "").startswith("channel") for t in labels)

    def test_segment_confined_to_its_channel_panel(self):
        x = ts(np.zeros((2, 16)))
        vals = np.zeros((2, 16))
        vals[1, 4:8] = 2.0  # only channel 1 changes
        root = parse(render_svg(x, ts(vals)))
        rects = shade_rects(root)
        assert len(rects) == 1
        panels = panel_rects(root)
        y = float(rects[0].get("y"))
        assert y == pytest.approx(float(panels[1].get("y")))

    def test_flat_series_renders(self):
        x = ts(np.full((1, 10), 2.0))
        root = parse(render_svg(x, ts(np.full((1, 10), 2.0))))
        assert len(polylines(root)) == 2

    def test_length_one_series(self):
        root = parse(render_svg(ts([[1.0]]), ts([[2.0]])))
        assert len(polylines(root)) == 2
        for line in polylines(root):
            assert len(line.get("points").split()) == 1

    def test_title_escaped(self, rng):
        x = ts(rng.normal(size=(1, 8)))
        svg = render_svg(x, ts(x.values), title="a<b & c")
        assert "a&lt;b &amp; c" in svg
        assert "a<b" not in svg
        parse(svg)

    def test_tau_controls_sensitivity(self):
        x = ts(np.zeros((1, 12)))
        vals = np.zeros((1, 12))
        vals[0, 5] = 1e-8
        assert len(shade_rects(parse(render_svg(x, ts(vals))))) == 0
        assert len(shade_rects(parse(render_svg(x, ts(vals), tau=1e-9)))) == 1

    def test_shape_mismatch(self, rng):
        with pytest.raises(ShapeError):
            render_svg(ts(rng.normal(size=(1, 10))), ts(rng.normal(size=(1, 11))))
        with pytest.raises(ShapeError):
            render_svg(ts(rng.normal(size=(1, 10))), ts(rng.normal(size=(2, 10))))

    def test_legend_present(self, rng):
        x = ts(rng.normal(size=(1, 10)))
        texts = [e.text for e in parse(render_svg(x, x)).findall(f".//{SVG_NS}text")]
        assert "original" in texts
        assert "counterfactual" in texts


class TestSaveSvg:
    def test_writes_file(self, tmp_path, rng):
        x = ts(rng.normal(size=(1, 15)))
        cf = ts(x.values + 0.5)
        out = tmp_path / "plot.svg"
        save_svg(out, x, cf, title="demo")
        content = out.read_text()
        assert content == render_svg(x, cf, title="demo")
        parse(content)
