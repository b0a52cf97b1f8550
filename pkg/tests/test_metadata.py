import copy

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from primadkit.errors import MetadataConflict, YamlSyntax
from primadkit.metadata import (
    COMPONENTS,
    MetadataRecord,
    dump_yaml,
    load_yaml,
    parse_metadata,
    read_metadata,
    serialize_metadata,
    validate,
)


@pytest.fixture
def full(example_yaml):
    return parse_metadata(example_yaml)


def test_example_has_all_components(full):
    assert full.present_components() == list(COMPONENTS)
    assert full.platform.hardware.cpu.number_of_cores == 16
    assert full.platform.software.libraries["python"] == ["scikit-learn==0.20.1", "numpy==1.15.4"]
    assert full.method.automatic is True
    assert full.method.score_ties == "reverse alphabetical order"
    assert full.method.retrieval[0].params == {"b": 0.4, "k1": 0.9}
    assert full.method.retrieval[2].interpolates == ["lr reranker", "bm25"]
    assert full.data.test_collection.ir_datasets == "nyt/trec-core-2017"
    assert full.research_goal.evaluation.significance_test[0].correction_method == "bonferroni"
    assert full.schema_version == "0.1"


def test_example_is_valid(full):
    report = validate(full)
    assert report.level == "valid"
    assert report.missing == () and report.malformed == ()


def test_example_round_trip(full):
    again = parse_metadata(serialize_metadata(full))
    assert again == full
    assert serialize_metadata(again) == serialize_metadata(full)


def test_serialization_order(full):
    text = serialize_metadata(full)
    keys = [line.split(":")[0] for line in text.splitlines() if line and not line.startswith(" ")]
    assert keys == ["platform", "research goal", "implementation", "method", "actor", "data", "schema_version"]


def test_empty_inputs():
    assert parse_metadata("{}").present_components() == []
    assert parse_metadata("").present_components() == []
    assert serialize_metadata(MetadataRecord()) == ""


def test_partial_platform():
    rec = parse_metadata("platform:\n  hardware:\n    ram: '64 GB'")
    assert rec.present_components() == ["platform"]
    assert rec.platform.hardware.ram == "64 GB"
    assert rec.platform.hardware.cpu is None
    assert rec.platform.operating_system is None


def test_extensions_preserved_verbatim(full):
    full.extensions["my_lab_notes"] = "abc"
    full.extensions["lab"] = {"room": 12, "tags": ["x", "y"]}
    text = serialize_metadata(full)
    assert "\nmy_lab_notes: abc\n" in text
    again = parse_metadata(text)
    assert again.extensions == full.extensions


def test_unknown_nested_keys_survive(example_yaml):
    rec = parse_metadata(example_yaml.replace("  executable:", "  container: 'docker.io/x:1'\n  executable:"))
    assert rec.implementation.extra == {"container": "docker.io/x:1"}
    assert "container: docker.io/x:1" in serialize_metadata(rec)


def test_missing_test_collection(full):
    full.data.test_collection = None
    assert "data.test_collection" in validate(full).missing


def test_missing_method_paths(full):
    full.method = None
    report = validate(full)
    assert report.level == "warnings"
    assert {p for p in report.missing if p.startswith("method.")} == {"method.retrieval", "method.score_ties"}


def test_either_or_fields(full):
    full.implementation.executable = None
    assert validate(full).is_valid
    full.implementation.source.repository = None
    assert validate(full).missing == ("implementation.executable|implementation.source.repository",)


def test_actor_role_enum(full):
    full.actor.role = "observer"
    report = validate(full)
    assert report.level == "invalid"
    (bad,) = report.malformed
    assert bad.path == "actor.role" and "enum violation" in bad.reason


def test_reproducer_needs_baseline(full):
    full.actor.role = "reproducer"
    assert validate(full).is_valid
    full.research_goal.evaluation.baseline = None
    assert [m.path for m in validate(full).malformed] == ["research_goal.evaluation.baseline"]


@pytest.mark.parametrize(
    "mutate, path",
    [
        (lambda r: setattr(r.platform.hardware.cpu, "number_of_cores", 0), "platform.hardware.cpu.number_of_cores"),
        (lambda r: setattr(r.implementation.source, "commit", "xyz"), "implementation.source.commit"),
        (lambda r: r.platform.software.libraries["python"].append("a==1==2"), "platform.software.libraries.python[2]"),
        (lambda r: setattr(r.method.retrieval[1], "reranks", "later"), "method.retrieval[1].reranks"),
        (lambda r: setattr(r.method.retrieval[2], "name", "bm25"), "method.retrieval[2].name"),
        (lambda r: r.research_goal.evaluation.reported_measures.append("two words"), "research_goal.evaluation.reported_measures[3]"),
    ],
)
def test_invariant_violations(full, mutate, path):
    mutate(full)
    assert path in [m.path for m in validate(full).malformed]


def test_type_mismatch_is_recorded_not_fatal():
    rec = parse_metadata("platform:\n  hardware:\n    cpu:\n      number of cores: many\n")
    assert rec.platform.hardware.cpu.number_of_cores is None
    assert rec.platform.hardware.cpu.extra == {"number of cores": "many"}
    assert [m.path for m in validate(rec).malformed] == ["platform.hardware.cpu.number_of_cores"]


def test_validate_is_deterministic(full):
    full.method = None
    full.actor.role = "x"
    assert validate(full) == validate(copy.deepcopy(full))
    assert list(validate(full).missing) == sorted(validate(full).missing)


def test_yaml_syntax_line():
    with pytest.raises(YamlSyntax) as exc:
        parse_metadata("platform:\n  hardware: [unclosed\nmethod: {}\n")
    assert exc.value.line is not None and exc.value.line >= 2


@pytest.mark.parametrize("text", ["a: &x 1\nb: *x\n", "- 1\n- 2\n", "a: 1\n---\nb: 2\n"])
def test_yaml_dialect_rejections(text):
    with pytest.raises(YamlSyntax):
        load_yaml(text)


def test_yaml_12_scalars():
    data = load_yaml("a: yes\nb: 2020-01-01\nc: true\nd: 0.6\n")
    assert data == {"a": "yes", "b": "2020-01-01", "c": True, "d": 0.6}


def test_sidecar_and_conflict(tmp_path, example_yaml):
    run = tmp_path / "run.txt"
    run.write_text("1 Q0 d1 0 1.0 r\n")
    assert read_metadata(run) is None
    (tmp_path / "run.txt.yaml").write_text(example_yaml)
    assert read_metadata(run) == parse_metadata(example_yaml)
    run.write_text("# actor:\n#   name: someone else\n1 Q0 d1 0 1.0 r\n")
    with pytest.raises(MetadataConflict):
        read_metadata(run)


scalars = st.one_of(
    st.text(max_size=12),
    st.integers(-10**6, 10**6),
    st.floats(allow_nan=False, allow_infinity=False, width=64),
    st.booleans(),
    st.none(),
)
trees = st.recursive(
    scalars,
    lambda inner: st.one_of(st.lists(inner, max_size=4), st.dictionaries(st.text(min_size=1, max_size=8), inner, max_size=4)),
    max_leaves=12,
)


@settings(max_examples=200)
@given(st.dictionaries(st.text(min_size=1, max_size=10).filter(lambda k: k not in {"platform", "research goal", "implementation", "method", "actor", "data", "schema_version"}), trees, min_size=1, max_size=3))
def test_extension_round_trip_property(extensions):
    rec = MetadataRecord(extensions=extensions)
    again = parse_metadata(serialize_metadata(rec))
    assert again.extensions == extensions
    assert dump_yaml(again.extensions) == dump_yaml(extensions)
