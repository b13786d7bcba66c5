"""Smoke tests for the partypes Python module.

They exercise the bound operations end to end on the bundled corpus and
validate the dict shapes against the shipped JSON schemas.
"""

import json
import os
from pathlib import Path

import pytest

import partypes

ROOT = Path(os.environ.get("PARTYPES_ROOT", Path(__file__).resolve().parents[2]))
CORPUS = ROOT / "corpus"
SCHEMAS = ROOT / "schemas"


def load_protocol(name):
    return partypes.parse_protocol((CORPUS / name).read_text(), name)


def load_program(name):
    return partypes.parse_program((CORPUS / name).read_text(), name)


def load_bindings(name):
    return json.loads((CORPUS / name).read_text())


def validate(doc, schema_name):
    jsonschema = pytest.importorskip("jsonschema")
    schema = json.loads((SCHEMAS / schema_name).read_text())
    jsonschema.validate(doc, schema)


def test_parse_and_pretty_round_trip():
    proto = load_protocol("fdiff.pt")
    assert proto.name == "fdiff"
    again = partypes.parse_protocol(str(proto))
    assert str(again) == str(proto)


def test_parse_errors_raise_value_error():
    with pytest.raises(ValueError, match="unbound-variable"):
        partypes.parse_protocol("protocol P (true) { message x, 1 float }")


def test_check_protocol_report():
    report = partypes.check_protocol(load_protocol("fdiff.pt"), 1, 8)
    validate(report, "wellformedness_report.schema.json")
    by_size = {entry["size"]: entry["status"] for entry in report["sizes"]}
    assert by_size[1] == "excluded"
    assert all(by_size[s] == "ok" for s in range(2, 9))
    assert report["inferredMinSize"] == 2
    assert partypes.infer_min_size(load_protocol("fdiff.pt")) == 2


def test_projection_matches_ring_pattern():
    table = partypes.action_table(load_protocol("fdiff.pt"), 5)
    assert len(table) == 5
    p2p = [line for line in table[0] if line.startswith(("send", "recv"))]
    assert p2p == ["send 4 : float", "send 1 : float", "recv 1 : float", "recv 4 : float"]
    validate(partypes.project(load_protocol("fdiff.pt"), 5), "projection.schema.json")


def test_conformance_pass_and_fail():
    proto = load_protocol("fdiff.pt")
    bindings = load_bindings("fdiff.bindings.json")

    good = partypes.check_conformance(load_program("fdiff.mpp"), proto, 3, bindings)
    assert good["verdict"] == "pass"

    bad = partypes.check_conformance(load_program("fdiff_naive.mpp"), proto, 3, bindings)
    assert bad["verdict"] == "fail"
    assert bad["failure"]["rank"] == 1
    assert bad["failure"]["kind"] == "protocol mismatch"
    assert bad["failure"]["expected"].startswith("recv 0")

    reports = partypes.check_all_sizes(load_program("fdiff.mpp"), proto, bindings, 1, 6)
    validate(reports, "verify_reports.schema.json")
    assert reports[0]["verdict"] == "excluded"
    assert all(r["verdict"] == "pass" for r in reports[1:])


def test_simulation_reports_the_cycle():
    prog = load_program("fdiff_naive.mpp")
    report = partypes.simulate(prog, 3, load_bindings("fdiff.bindings.json"))
    validate(report, "simulation_report.schema.json")
    assert report["deadlocked"]
    cycle = [(entry["rank"], entry["pending"]) for entry in report["waitForCycle"]]
    assert cycle == [(0, "send to 2"), (2, "send to 1"), (1, "send to 0")]


def test_simulation_trace():
    prog = load_program("pi.mpp")
    report = partypes.simulate(prog, 2, load_bindings("pi.bindings.json"), collect_trace=True)
    assert not report["deadlocked"]
    assert report["trace"][0] == "step 1: collective broadcast root 0"


def test_synthesize_passes_conformance():
    proto = load_protocol("pdot.pt")
    prog = partypes.synthesize(proto, 4)
    report = partypes.check_conformance(prog, proto, 4)
    assert report["verdict"] == "pass"
    sim = partypes.simulate(prog, 4)
    assert not sim["deadlocked"]


def test_precondition_errors_are_value_errors():
    proto = load_protocol("fdiff.pt")
    prog = load_program("fdiff.mpp")
    with pytest.raises(ValueError, match="missing binding"):
        partypes.check_conformance(prog, proto, 3, {})
