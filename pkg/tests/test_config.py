import pytest
from hypothesis import given
from hypothesis import strategies as st
from pathlib import Path

from qlee.config import ConfigError, ExperimentConfig, load_config, parse_config, serialize_config, with_overrides

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def test_defaults_round_trip():
    cfg = ExperimentConfig()
    text = serialize_config(cfg)
    assert parse_config(text) == cfg
    assert serialize_config(parse_config(text)) == text


@given(
    n_x=st.integers(1, 9),
    n_y=st.integers(1, 9),
    l=st.floats(1e-3, 10),
    u_bar=st.floats(-5, 5),
    tau=st.floats(1e-4, 1),
    steps=st.integers(0, 1000),
    scheme=st.sampled_from(["central", "updown"]),
    oracle=st.booleans(),
    sources=st.lists(st.tuples(st.integers(0, 64), st.integers(0, 64), st.sampled_from([1, 2, 4]),
                               st.floats(-2, 2)), min_size=1, max_size=3),
)
def test_serialize_parse_idempotent(**kw):
    cfg = ExperimentConfig(**{**kw, "sources": tuple(kw["sources"])})
    text = serialize_config(cfg)
    again = parse_config(text)
    assert again == cfg
    assert serialize_config(again) == text


def test_comments_and_blank_lines():
    cfg = parse_config("# header\n\nn_x = 3  \n  tau = 0.1\n")
    assert cfg.n_x == 3 and cfg.tau == 0.1 and cfg.n_y == 5


@pytest.mark.parametrize(
    "text,line,key",
    [
        ("n_x = 3\nbogus = 1\n", 2, "bogus"),
        ("n_x = 3\nn_x = 4\n", 2, "n_x"),
        ("tau = fast\n", 1, "tau"),
        ("n_x = 2.5\n", 1, "n_x"),
        ("bc = \"neumann\"\n", 1, "bc"),
        ("sources = [[1, 2, 3]]\n", 1, "sources"),
        ("oracle = 1\n", 1, "oracle"),
        ("just words\n", 1, None),
    ],
)
def test_parse_errors_locate(text, line, key):
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert exc.value.line == line and exc.value.key == key
    assert f"line {line}" in str(exc.value)


@pytest.mark.parametrize("text", ["tau = -0.1\n", "n_x = 0\n", "config_version = 2\n", "steps = -1\n",
                                  "obstacle_mask = \"a\"\nobstacle_builtin = \"airfoil\"\n", "l = NaN\n"])
def test_validation_errors(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "nope.cfg")


def test_overrides():
    cfg = with_overrides(ExperimentConfig(), tau=0.01, steps=None, scheme="updown")
    assert cfg.tau == 0.01 and cfg.steps == 40 and cfg.scheme == "updown"
    with pytest.raises(ConfigError):
        with_overrides(ExperimentConfig(), tau=0.0)


@pytest.mark.parametrize("name", ["point_source.cfg", "airfoil.cfg", "pipe.cfg"])
def test_shipped_configs_load(name):
    cfg = load_config(CONFIGS / name)
    assert cfg.resolve(cfg.output_dir).parent.name == "out"
    assert cfg.params().conservative


def test_relative_paths_follow_config(tmp_path):
    (tmp_path / "m.txt").write_text("01\n00\n")
    (tmp_path / "c.cfg").write_text('n_x = 1\nn_y = 1\nobstacle_mask = "m.txt"\nsources = [[0, 0, 1, 1.0]]\n')
    ob = load_config(tmp_path / "c.cfg").obstacle()
    assert [c.to_text() for c in ob.cells] == ["1,0"]
