import shutil
from pathlib import Path

import pytest

from plots_report import FIGURE_KINDS, FigureError, FigureSpec, render

FIXTURES = Path(__file__).parent / "fixtures" / "demo"


@pytest.mark.parametrize("kind", FIGURE_KINDS)
def test_each_kind_renders(tmp_path, kind):
    out = render(FigureSpec(FIXTURES, kind, tmp_path / f"{kind}.png"))
    assert out.exists()
    assert out.stat().st_size > 5000  # an actual figure, not a stub


@pytest.mark.parametrize("kind", FIGURE_KINDS)
def test_rendering_is_pixel_identical(tmp_path, kind):
    a = render(FigureSpec(FIXTURES, kind, tmp_path / "a.png"))
    b = render(FigureSpec(FIXTURES, kind, tmp_path / "b.png"))
    assert a.read_bytes() == b.read_bytes()


def test_unknown_kind_rejected(tmp_path):
    with pytest.raises(FigureError, match="kind"):
        FigureSpec(FIXTURES, "sparkline", tmp_path / "x.png")


def test_empty_sample_is_an_error_not_an_empty_image(tmp_path):
    exp = tmp_path / "exp"
    exp.mkdir()
    (exp / "harmonic.csv").write_text("x,y,z,weight\n", encoding="utf-8")
    with pytest.raises(FigureError, match="no data rows"):
        render(FigureSpec(exp, "scatter", tmp_path / "s.png"))
    assert not (tmp_path / "s.png").exists()


def test_schema_drift_names_columns(tmp_path):
    exp = tmp_path / "exp"
    exp.mkdir()
    (exp / "gap.csv").write_text("n,gap\n1,0.5\n", encoding="utf-8")
    with pytest.raises(FigureError, match="hyp_dist"):
        render(FigureSpec(exp, "gap", tmp_path / "g.png"))


def test_missing_inputs_named(tmp_path):
    exp = tmp_path / "empty"
    exp.mkdir()
    with pytest.raises(FigureError, match="growth.csv"):
        render(FigureSpec(exp, "growth", tmp_path / "g.png"))


def test_gap_figure_marks_threshold_crossing(tmp_path):
    # fixture gap series crosses -10; the renderer must succeed and the series
    # must actually cross, otherwise the reference-line annotation is vacuous
    rows = (FIXTURES / "gap.csv").read_text().strip().splitlines()[1:]
    gaps = [float(r.split(",")[-1]) for r in rows]
    assert min(gaps) < -10.0
    render(FigureSpec(FIXTURES, "gap", tmp_path / "gap.png"))


def test_growth_annotates_fit(tmp_path):
    meta = (FIXTURES / "diagnose.meta.json").read_text()
    assert "delta_hat" in meta
    render(FigureSpec(FIXTURES, "growth", tmp_path / "growth.png"))


def test_scatter_single_sample_directory(tmp_path):
    exp = tmp_path / "exp"
    exp.mkdir()
    shutil.copy(FIXTURES / "ps.csv", exp / "ps.csv")
    shutil.copy(FIXTURES / "ps.meta.json", exp / "ps.meta.json")
    out = render(FigureSpec(exp, "scatter", tmp_path / "one.png"))
    assert out.exists()


def test_cli_renders_all_kinds(tmp_path):
    from plots_report.cli import main

    rc = main([str(FIXTURES), "--out", str(tmp_path / "figs")])
    assert rc == 0
    for kind in FIGURE_KINDS:
        assert (tmp_path / "figs" / f"{kind}.png").exists()


def test_cli_reports_failures(tmp_path):
    exp = tmp_path / "broken"
    exp.mkdir()
    from plots_report.cli import main

    assert main([str(exp), "--kinds", "growth"]) == 1
