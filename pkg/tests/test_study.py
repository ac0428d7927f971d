import json

import pytest

from stokes_oss.study import (CSV_HEADER, StudyConfig, StudyError, StudyReport, StudyRow,
                              config_to_dict, emit_report, fit_slope, is_monotone, load_config,
                              make_report, report_slope, run_convergence_study, write_report)
from stokes_oss.verify import load_fixture


def config(**kw):
    base = dict(domain="square", formulation="two_field", order=1, sizes=[4, 8], reference=52.3447)
    base.update(kw)
    return StudyConfig(**base)


def test_fit_slope_examples():
    assert fit_slope([(10, 1e-2), (20, 2.5e-3)]) == pytest.approx(2.0, abs=1e-12)
    assert fit_slope([(10, 0.0673), (20, 0.0173)]) == pytest.approx(1.96, abs=0.005)
    assert fit_slope([(10, 1.0), (20, 1.0)]) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("points", [[], [(10, 0.1)], [(10, 0.1), (20, 0.0)], [(10, 0.1), (20, -1e-3)]])
def test_fit_slope_rejects(points):
    with pytest.raises(ValueError):
        fit_slope(points)


def fixture_errors(name):
    fx = load_fixture(name)
    return [(r["size"], (r["lambda_h"] - fx["reference"]) / fx["reference"]) for r in fx["rows"]]


def test_slope_from_p1_reference_rows():
    pts = [p for p in fixture_errors("square_two_field_P1") if p[0] >= 20]
    assert 1.9 <= fit_slope(pts) <= 2.1


def test_slope_from_p2_reference_rows():
    pts = fixture_errors("square_two_field_P2")
    assert 3.6 <= fit_slope(pts[len(pts) // 2:]) <= 4.4


def test_config_validation():
    with pytest.raises(ValueError):
        config(sizes=[8, 4])
    with pytest.raises(ValueError):
        config(sizes=[4, 4])
    with pytest.raises(ValueError):
        config(reference=0.0)
    with pytest.raises(ValueError):
        config(formulation="four_field")
    with pytest.raises(ValueError):
        config(domain="disk")
    with pytest.raises(ValueError):
        config(order=3)
    with pytest.raises(ValueError):
        config(eigen_index=4, k=2)
    with pytest.raises(TypeError):
        config(params={"c9": 1.0})
    assert config(eigen_index=4).k == 4
    assert config().basename == "square_two_field_P1"


def test_load_config_ignores_fixture_extras(tmp_path):
    fx = load_fixture("lshape_two_field_P1")
    path = tmp_path / "c.json"
    path.write_text(json.dumps(fx))
    cfg = load_config(path)
    assert cfg.eigen_index == 4 and cfg.sizes == (5, 10, 15, 20, 25, 30)
    assert StudyConfig.from_dict(config_to_dict(cfg)) == cfg


def rows(values, ref=50.0):
    return [StudyRow(n, 1.0 / n, v, (v - ref) / ref) for n, v in values]


def test_monotone_flag():
    assert is_monotone(rows([(10, 52.0), (20, 51.0), (40, 50.5)]))
    assert not is_monotone(rows([(10, 52.0), (20, 52.5)]))
    assert not is_monotone(rows([(10, 51.0), (20, 49.0)]))
    assert is_monotone([])


def test_slope_over_finest_half():
    cfg = config(sizes=[10, 20, 40, 80])
    r = rows([(10, 60.0), (20, 50.0 + 0.8), (40, 50.0 + 0.2), (80, 50.0 + 0.05)])
    assert report_slope(cfg, r) == pytest.approx(2.0)
    assert report_slope(cfg, r[:1]) is None


def test_csv_example_and_header():
    cfg = config(sizes=[10])
    report = StudyReport(cfg, (StudyRow(10, 0.1414, 55.8688, 0.0673),), None, True)
    lines = emit_report(report, "csv").splitlines()
    assert lines == [",".join(CSV_HEADER), "10,0.1414,55.8688,0.0673"]
    empty = StudyReport(cfg, (), None, True)
    assert emit_report(empty, "csv") == "size,h_max,lambda_h,rel_error\n"


def test_markdown_rows_and_purity():
    report = make_report(config(sizes=[10, 20, 40]), rows([(10, 52.0), (20, 51.0), (40, 50.5)]))
    md = emit_report(report, "markdown")
    table = [ln for ln in md.splitlines() if ln.startswith("| ") and not ln.startswith("| N")]
    assert len(table) == 3
    assert md == emit_report(report, "markdown")
    assert emit_report(report) == emit_report(report, "csv")
    with pytest.raises(ValueError):
        emit_report(report, "html")


def test_single_size_study(tmp_path):
    report = run_convergence_study(config(sizes=[6]))
    assert len(report.rows) == 1 and report.slope is None
    csv_path, md_path = write_report(report, tmp_path)
    assert csv_path.name == "square_two_field_P1.csv" and md_path.exists()


def test_small_study_rows():
    seen = []
    report = run_convergence_study(config(sizes=[4, 8, 16]), progress=seen.append)
    assert [r.size for r in report.rows] == [4, 8, 16] == [r.size for r in seen]
    assert report.monotone and report.slope is not None
    assert all(r.lambda_h > 52.3447 for r in report.rows)


def test_lshape_index(tmp_path):
    report = run_convergence_study(config(domain="lshape", sizes=[5], reference=48.9844, eigen_index=4))
    assert report.rows[0].lambda_h == pytest.approx(58.6756, rel=0.01)


def test_cracked_records_vertex_count():
    report = run_convergence_study(config(domain="cracked", sizes=[136], reference=31.2444))
    assert report.rows[0].size == 125


def test_partial_failure_keeps_rows(monkeypatch):
    import stokes_oss.study as study

    real = study.solve_row

    def flaky(cfg, size):
        if size == 8:
            raise RuntimeError("boom")
        return real(cfg, size)

    monkeypatch.setattr(study, "solve_row", flaky)
    with pytest.raises(StudyError) as info:
        run_convergence_study(config(sizes=[4, 8, 16]))
    assert [r.size for r in info.value.report.rows] == [4]
