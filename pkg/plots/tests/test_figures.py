"""Tests for schema-checked readers and deterministic figure rendering.

Golden hashes were frozen from an oracle run that rendered each
fixture twice in separate processes and confirmed identical bytes;
they pin the rendering stack (matplotlib and its bundled fonts), so a
stack upgrade is expected to refresh them.
"""

import hashlib
import os
import re
from collections import Counter

import pytest

from heightlab_plot import (
    FIGURE_KINDS,
    SCAN_COLUMNS,
    VARIANCE_COLUMNS,
    FigureSpec,
    SchemaMismatch,
    read_scan,
    read_variance,
    render,
    spec_from_dict,
    wrap_frequency_series,
)

FIXTURES = os.path.join(os.path.dirname(os.path.abspath(__file__)),
                        "fixtures")
VARIANCE_CSV = os.path.join(FIXTURES, "variance_fixture.csv")
SCAN_CSV = os.path.join(FIXTURES, "scan_fixture.csv")

GOLDEN_PNG_HASHES = {
    "variance_growth":
        "0f37a59307b363013156ce93a1123837ccdbe42d159d4a2365715acc36b02c2c",
    "percolation_scan":
        "4f645574046c3091add9340a34bc61df565959cdd6509b4e5020de07438f45f1",
}


def sha256_of(path):
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def spec(kind, output, inputs=None, **extra):
    entry = {"kind": kind, "inputs": inputs or [VARIANCE_CSV],
             "output": str(output)}
    entry.update(extra)
    return spec_from_dict(entry)


# ---------------------------------------------------------------------------
# Spec parsing
# ---------------------------------------------------------------------------

class TestSpec:
    def test_single_input_string(self):
        parsed = spec_from_dict({"kind": "variance_growth",
                                 "input": VARIANCE_CSV,
                                 "output": "out.svg"})
        assert parsed.inputs == (VARIANCE_CSV,)
        assert parsed.kind == "variance_growth"
        assert parsed.title == ""

    def test_input_list_and_labels(self):
        parsed = spec_from_dict({"kind": "percolation_scan",
                                 "inputs": [SCAN_CSV, SCAN_CSV],
                                 "output": "out.png",
                                 "title": "t", "xlabel": "x",
                                 "ylabel": "y"})
        assert parsed.inputs == (SCAN_CSV, SCAN_CSV)
        assert (parsed.title, parsed.xlabel, parsed.ylabel) == \
            ("t", "x", "y")

    def test_rejects_unknown_kind(self):
        with pytest.raises(ValueError, match="unknown figure kind"):
            spec_from_dict({"kind": "pie", "input": VARIANCE_CSV,
                            "output": "out.svg"})

    def test_rejects_missing_pieces(self):
        with pytest.raises(ValueError, match="input"):
            spec_from_dict({"kind": "variance_growth",
                            "output": "out.svg"})
        with pytest.raises(ValueError, match="output"):
            spec_from_dict({"kind": "variance_growth",
                            "input": VARIANCE_CSV})
        with pytest.raises(ValueError, match="no input files"):
            spec_from_dict({"kind": "variance_growth", "inputs": [],
                            "output": "out.svg"})
        with pytest.raises(ValueError, match="mapping"):
            spec_from_dict(["not", "a", "dict"])

    def test_rejects_unknown_extension(self):
        with pytest.raises(ValueError, match=".svg or .png"):
            spec_from_dict({"kind": "variance_growth",
                            "input": VARIANCE_CSV, "output": "out.pdf"})

    def test_kind_enum_is_frozen(self):
        assert FIGURE_KINDS == ("variance_growth", "percolation_scan",
                                "cluster_histogram")


# ---------------------------------------------------------------------------
# Readers
# ---------------------------------------------------------------------------

class TestReaders:
    def test_variance_fixture_values(self):
        radii, variances, stderrs = read_variance(VARIANCE_CSV)
        assert radii.tolist() == [4.0, 8.0, 16.0, 32.0]
        assert variances[0] == pytest.approx(1.1683027343750001)
        assert stderrs[-1] == pytest.approx(0.027236223444595561)

    def test_scan_fixture_shape(self):
        rows = read_scan(SCAN_CSV)
        assert len(rows) == 20
        assert set(SCAN_COLUMNS) <= set(rows[0])

    def test_missing_column_named(self, tmp_path):
        broken = tmp_path / "broken.csv"
        broken.write_text("n,var_root\n4,1.0\n")
        with pytest.raises(SchemaMismatch, match="'stderr'"):
            read_variance(str(broken))

    def test_no_data_rows(self, tmp_path):
        empty = tmp_path / "empty.csv"
        empty.write_text(",".join(VARIANCE_COLUMNS) + "\n")
        with pytest.raises(SchemaMismatch, match="no data rows"):
            read_variance(str(empty))

    def test_headerless_file(self, tmp_path):
        blank = tmp_path / "blank.csv"
        blank.write_text("")
        with pytest.raises(SchemaMismatch, match="no header"):
            read_variance(str(blank))

    def test_missing_file(self, tmp_path):
        with pytest.raises(SchemaMismatch):
            read_variance(str(tmp_path / "nope.csv"))

    def test_non_numeric_value_named(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("n,var_root,stderr\n4,oops,0.1\n")
        with pytest.raises(SchemaMismatch, match="'var_root'"):
            read_variance(str(bad))

    def test_extra_columns_tolerated(self, tmp_path):
        extra = tmp_path / "extra.csv"
        extra.write_text("note,n,var_root,stderr,junk\n"
                         "hi,4,1.0,0.1,x\n")
        radii, variances, _ = read_variance(str(extra))
        assert radii.tolist() == [4.0]
        assert variances.tolist() == [1.0]


class TestWrapSeries:
    def test_fixture_aggregation(self):
        series = wrap_frequency_series(read_scan(SCAN_CSV))
        assert series[("vertices", "geq")] == ([0.0, 1.0], [0.75, 0.5])
        assert series[("vertices", "leq")] == ([-1.0], [0.25])
        assert series[("odd_vertices", "geq")] == ([1.0], [0.75])
        assert series[("odd_vertices", "leq")] == ([-1.0], [0.25])

    def test_keys_sorted(self):
        series = wrap_frequency_series(read_scan(SCAN_CSV))
        assert list(series) == sorted(series)

    def test_bad_flag_named(self):
        rows = [{"carrier": "vertices", "direction": "geq",
                 "level": "0", "wraps_h": "maybe", "wraps_v": "0"}]
        with pytest.raises(SchemaMismatch, match="'wraps_h'"):
            wrap_frequency_series(rows)


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------

class TestVarianceFigure:
    def test_svg_has_four_points_and_error_bars(self, tmp_path):
        out = tmp_path / "variance.svg"
        render(spec("variance_growth", out))
        svg = out.read_text()
        # Data markers are circle defs (arc paths, containing cubic
        # curves); axis ticks are straight-line defs.
        defs = dict(re.findall(r'<path id="([A-Za-z0-9_]+)" d="([^"]+)"',
                               svg))
        uses = Counter(re.findall(r'<use [^>]*href="#([A-Za-z0-9_]+)"',
                                  svg))
        circle_ids = [i for i, d in defs.items() if "C" in d]
        assert any(uses[i] == 4 for i in circle_ids)
        bars = re.search(r'<g id="LineCollection_1">(.*?)</g>', svg, re.S)
        assert bars is not None
        assert bars.group(1).count("<path") == 4

    def test_rerender_is_byte_identical(self, tmp_path):
        first = tmp_path / "a.png"
        second = tmp_path / "b.png"
        render(spec("variance_growth", first))
        render(spec("variance_growth", second))
        assert first.read_bytes() == second.read_bytes()
        svg_a = tmp_path / "a.svg"
        svg_b = tmp_path / "b.svg"
        render(spec("variance_growth", svg_a))
        render(spec("variance_growth", svg_b))
        assert svg_a.read_bytes() == svg_b.read_bytes()

    def test_extra_columns_do_not_change_pixels(self, tmp_path):
        with open(VARIANCE_CSV) as fh:
            lines = fh.read().splitlines()
        widened = tmp_path / "widened.csv"
        widened.write_text("\n".join(
            [lines[0] + ",comment"] +
            [line + ",extra" for line in lines[1:]]) + "\n")
        base = tmp_path / "base.png"
        wide = tmp_path / "wide.png"
        render(spec("variance_growth", base))
        render(spec("variance_growth", wide, inputs=[str(widened)]))
        assert base.read_bytes() == wide.read_bytes()

    def test_empty_csv_raises(self, tmp_path):
        empty = tmp_path / "empty.csv"
        empty.write_text(",".join(VARIANCE_COLUMNS) + "\n")
        with pytest.raises(SchemaMismatch, match="no data rows"):
            render(spec("variance_growth", tmp_path / "x.svg",
                        inputs=[str(empty)]))

    def test_two_inputs_two_series(self, tmp_path):
        out = tmp_path / "two.svg"
        render(spec("variance_growth", out,
                    inputs=[VARIANCE_CSV, VARIANCE_CSV]))
        svg = out.read_text()
        bars = set(re.findall(r'<g id="(LineCollection_\d+)">', svg))
        assert len(bars) >= 2
        assert 'id="legend_1"' in svg


class TestScanFigure:
    def test_renders_four_series(self, tmp_path):
        out = tmp_path / "scan.svg"
        render(spec("percolation_scan", out, inputs=[SCAN_CSV]))
        svg = out.read_text()
        # Each series draws circle markers from its own def (an arc
        # path); the fixture holds four (carrier, direction) series
        # with five data points total, plus one legend marker apiece.
        defs = dict(re.findall(r'<path id="([A-Za-z0-9_]+)" d="([^"]+)"',
                               svg))
        uses = Counter(re.findall(r'<use [^>]*href="#([A-Za-z0-9_]+)"',
                                  svg))
        circle_ids = [i for i, d in defs.items() if "C" in d]
        assert len(circle_ids) == 4
        assert sum(uses[i] for i in circle_ids) == 9
        assert 'id="legend_1"' in svg

    def test_rerender_is_byte_identical(self, tmp_path):
        first = tmp_path / "a.png"
        second = tmp_path / "b.png"
        render(spec("percolation_scan", first, inputs=[SCAN_CSV]))
        render(spec("percolation_scan", second, inputs=[SCAN_CSV]))
        assert first.read_bytes() == second.read_bytes()

    def test_scan_schema_enforced(self, tmp_path):
        broken = tmp_path / "broken.csv"
        broken.write_text("sample,level,direction,carrier\n0,0,geq,v\n")
        with pytest.raises(SchemaMismatch, match="'clusters'"):
            render(spec("percolation_scan", tmp_path / "x.png",
                        inputs=[str(broken)]))


class TestHistogramFigure:
    def test_renders_and_is_deterministic(self, tmp_path):
        first = tmp_path / "a.png"
        second = tmp_path / "b.png"
        render(spec("cluster_histogram", first, inputs=[SCAN_CSV]))
        render(spec("cluster_histogram", second, inputs=[SCAN_CSV]))
        assert first.stat().st_size > 1000
        assert first.read_bytes() == second.read_bytes()


class TestGoldenHashes:
    def test_variance_png_matches_frozen_hash(self, tmp_path):
        out = tmp_path / "variance.png"
        render(spec("variance_growth", out))
        assert sha256_of(out) == GOLDEN_PNG_HASHES["variance_growth"]

    def test_scan_png_matches_frozen_hash(self, tmp_path):
        out = tmp_path / "scan.png"
        render(spec("percolation_scan", out, inputs=[SCAN_CSV]))
        assert sha256_of(out) == GOLDEN_PNG_HASHES["percolation_scan"]
