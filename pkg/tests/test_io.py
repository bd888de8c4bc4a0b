import json

import numpy as np
import pytest

from bulgekit.core_model import CoefficientSource, PressureDeflectionCurve
from bulgekit.errors import (ConfigError, MonotonicityError, ParseError, UnitError,
                             UnknownLabel)
from bulgekit.fitting import fit_curve
from bulgekit.io import (LATERAL_ASSUMPTION, bundled_dataset, load_bundled_geometry,
                         load_config, parse_config, parse_curve, read_provenance,
                         read_report, write_curve, write_report)
from bulgekit.mixture import MixtureResult
from bulgekit.poisson import PoissonSolveReport

from conftest import bundled_case, synthetic_curve


def write(tmp_path, text, name="c.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def test_parse_minimal(tmp_path):
    c = parse_curve(write(tmp_path, "pressure,deflection\n1000,1e-6\n"))
    assert c.samples == [(1000.0, 1e-6)]
    assert c.label == "c"


def test_parse_units(tmp_path):
    c = parse_curve(write(tmp_path, "pressure,deflection\n#units: mbar,um\n2,3\n5,7\n"))
    assert c.samples == [(200.0, 3e-6), (500.0, 7e-6)]


def test_parse_errors(tmp_path):
    with pytest.raises(ParseError, match="line 3"):
        parse_curve(write(tmp_path, "pressure,deflection\n1,1e-6\n2,-1e-6\n"))
    with pytest.raises(ParseError, match="line 2"):
        parse_curve(write(tmp_path, "pressure,deflection\n1;2\n"))
    with pytest.raises(ParseError):
        parse_curve(write(tmp_path, "p,h\n1,2\n"))
    with pytest.raises(UnitError):
        parse_curve(write(tmp_path, "pressure,deflection\n#units: psi,um\n1,2\n"))
    with pytest.raises(MonotonicityError):
        parse_curve(write(tmp_path, "pressure,deflection\n1,1e-6\n1,2e-6\n"))


def test_parse_resorts_with_warning(tmp_path):
    with pytest.warns(UserWarning, match="re-sorted"):
        c = parse_curve(write(tmp_path, "pressure,deflection\n2,2e-6\n1,1e-6\n3,3e-6\n"))
    assert list(c.pressure) == [1.0, 2.0, 3.0]


def test_curve_round_trip(tmp_path):
    g, m = bundled_case("1M")
    curve = synthetic_curve(g, m, label="x")
    for units in (("Pa", "m"), ("mbar", "um"), ("kPa", "nm")):
        path = tmp_path / f"{units[0]}.csv"
        write_curve(curve, path, *units)
        back = parse_curve(path, label="x")
        np.testing.assert_allclose(back.pressure, curve.pressure, rtol=1e-15)
        np.testing.assert_allclose(back.deflection, curve.deflection, rtol=1e-15)


def test_bundled_labels():
    g = load_bundled_geometry("1M")
    assert 2 * g.half_width_a == pytest.approx(3.104e-3)
    assert 2 * g.half_length_b == pytest.approx(3.104e-3)
    assert g.thickness_t == pytest.approx(104e-9)
    g = load_bundled_geometry("4B")
    assert (2 * g.half_width_a, 2 * g.half_length_b) == pytest.approx((1.39e-3, 7.80e-3))
    assert g.thickness_t == pytest.approx(188e-9)
    assert bundled_dataset()["4B"].aspect_ratio == 5.6
    m = bundled_dataset()["5B"]
    assert (m.width_2a, m.length_2b, m.aspect_ratio) == pytest.approx((0.27e-3, 3.28e-3, 12.1))
    assert len(bundled_dataset()) == 10
    with pytest.raises(UnknownLabel):
        load_bundled_geometry("9Z")


def test_default_lateral_uncertainty():
    g = load_bundled_geometry("2M")
    assert g.sigma_a == pytest.approx(0.005 * g.half_width_a)


def test_config_explicit(tmp_path):
    doc = {"geometry": {"width_2a": 3.104, "length_2b": 3.104, "thickness_t": 104,
                        "units": {"lateral": "mm", "thickness": "nm"},
                        "uncertainties": {"width_2a": 0.01, "length_2b": 0.01}},
           "analysis": {"nu_assumed": 0.25, "coefficient_source": "Bonnotte"},
           "uncertainty": {"n_samples": 500, "seed": 7}}
    cfg = parse_config(doc)
    assert cfg.geometry.half_width_a == pytest.approx(1.552e-3)
    assert cfg.geometry.sigma_a == pytest.approx(0.005e-3)
    assert cfg.geometry.thickness_t == pytest.approx(104e-9)
    assert cfg.nu_assumed == 0.25 and cfg.coefficient_source is CoefficientSource.BONNOTTE
    assert (cfg.uncertainty.n_samples, cfg.uncertainty.seed) == (500, 7)
    assert cfg.assumptions == ()
    path = tmp_path / "c.json"
    path.write_text(json.dumps(doc))
    assert load_config(path) == cfg


def test_config_bundled_records_assumption():
    cfg = parse_config({"geometry": {"bundled": "5B"}})
    assert cfg.assumptions == (LATERAL_ASSUMPTION,)
    assert cfg.min_deflection == pytest.approx(10 * 188e-9)


def test_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        parse_config({})
    with pytest.raises(ConfigError):
        parse_config({"geometry": {"width_2a": 1, "length_2b": 1, "thickness_t": 1}})
    with pytest.raises(ConfigError):
        parse_config({"geometry": {"bundled": "1M"}, "extra": 1})
    with pytest.raises(UnitError):
        parse_config({"geometry": {"width_2a": 1, "length_2b": 1, "thickness_t": 1,
                                   "units": "furlong"}})
    with pytest.raises(UnknownLabel):
        parse_config({"geometry": {"bundled": "9Z"}})
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    with pytest.raises(ConfigError):
        load_config(bad)


def _fit():
    g, m = bundled_case("1M")
    return fit_curve(synthetic_curve(g, m), g, 0.3)


def test_json_report_round_trip(tmp_path):
    fit = _fit()
    poisson = PoissonSolveReport(0.2512345678901234, 0.07, 3.1, (0.25, 0.2513), 34,
                                 ("2M", "5M"), "VlassakNix", 0.01, 10000, 42, 0)
    mix = MixtureResult("biaxial_modulus", 8.7e10, 1e9, "SiO2", "", 10000, 42)
    path = tmp_path / "r.json"
    write_report([fit, poisson, mix], path, provenance={"seed": 42})
    back = read_report(path)
    assert back == [fit, poisson, mix]
    prov = read_provenance(path)
    assert prov["tool"] == "bulgekit" and prov["seed"] == 42 and "version" in prov


def test_empty_report(tmp_path):
    path = tmp_path / "e.json"
    write_report([], path)
    assert read_report(path) == []
    text = tmp_path / "e.txt"
    write_report([], text, "text")
    assert text.read_text().startswith("# bulgekit")


def test_text_report_echoes_nu(tmp_path):
    path = tmp_path / "r.txt"
    write_report([_fit()], path, "text")
    lines = path.read_text(encoding="utf-8").splitlines()
    assert "nu_assumed = 0.3" in lines


def test_report_write_error_has_path(tmp_path):
    target = tmp_path / "missing" / "r.json"
    with pytest.raises(OSError, match="missing"):
        write_report([], target)
    with pytest.raises(ValueError):
        write_report([], tmp_path / "x", "yaml")
