import csv
import io
import json

import pytest

import dhac


def test_units_and_truncation():
    assert dhac.add16("LOA", 4, 0x000F, 0x0001) == 0x000F
    assert dhac.add16("exact", 0, 0x7FFF, 1) == -0x8000
    assert dhac.mul16("BA", 2, 3, 3) == 4
    assert dhac.trunc_mantissa(1.0 + 2.0**-52, 20) == 1.0


def test_graph_round_trip_and_census():
    g = dhac.builtin_program("fir")
    assert g.census() == {"add_sub": 10, "mul": 11, "div": 0, "total": 21}
    back = dhac.Graph.from_json(g.to_json())
    assert back.to_json() == g.to_json()
    assert json.loads(g.to_json())["name"] == "fir"
    assert g.type == "int16"


def test_rcc_detects_forged_output():
    g = dhac.builtin_program("fir")
    x = dhac.sample_inputs("fir", seed=4, index=0)
    (exact,), _ = dhac.evaluate(g, x)
    assert dhac.rcc_check(g, x, exact) == ("Negative", None)
    assert dhac.rcc_check(g, x, exact + 1) == ("Positive", 0)
    assert dhac.rcc_check(g, x, exact + 15, moduli=[3, 5]) == ("Negative", None)
    assert dhac.evaluate_mod(g, x, 7) == exact % 7


def test_fbc_on_conv_layer():
    g = dhac.builtin_program("conv_layer:channels=2,size=6")
    x = dhac.sample_inputs("conv_layer:channels=2,size=6", seed=1)
    sites = dhac.auto_sites(g)[:3]
    kinds = ["add", "mul", "tan"]
    verdict, dist = dhac.fbc_check(g, x, dhac.Backend.exact(), kinds, sites)
    assert verdict == "Negative" and max(dist) < 1e-13
    verdict, dist = dhac.fbc_check(g, x, dhac.Backend.fp_truncation(20), kinds, sites)
    assert verdict == "Positive"


def test_errors_carry_codes():
    g = dhac.builtin_program("fir")
    with pytest.raises(dhac.Error, match="arity"):
        dhac.evaluate(g, [1, 2])
    with pytest.raises(dhac.Error):
        dhac.Backend.approximate(adder="wallace", adder_k=2)


def test_bench_report():
    cfg = {"trials": 20, "strategy": {"W": 0, "T": 0},
           "rcc": {"programs": ["conv2x2"], "moduli": [3, 5, 7]},
           "fbc": {"programs": ["conv_layer:channels=2,size=6"], "truncated_bits": [20]}}
    text = dhac.bench(json.dumps(cfg))
    assert text.startswith("dhac-report-v1\n")
    body = "\n".join(l for l in text.splitlines()[1:] if not l.startswith("#"))
    rows = list(csv.DictReader(io.StringIO(body)))
    assert len(rows) == 9 * 3 + 4
    assert all(r["fp"] == "0" for r in rows)
    assert text == dhac.bench(json.dumps(cfg))
