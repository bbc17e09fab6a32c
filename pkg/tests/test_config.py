import pytest
from hypothesis import given, strategies as st

from gpliouville.config import ConfigError, RunConfig, load_config, parse_config

BASE = "c0 = 0.5\nc_frame = 0.5\ndelta = 0.01\nt_end = 1\n"


def test_parse_minimal():
    cfg = parse_config(BASE + "# comment\n\nshape = gaussian  # trailing\n")
    assert cfg.c0 == 0.5 and cfg.t_end == 1.0 and cfg.shape == "gaussian"
    assert cfg.n_points == 3001 and cfg.dt == 5e-4 and cfg.project is True
    assert cfg.gamma_eff == pytest.approx(cfg.beta / 4)


@pytest.mark.parametrize("key", ["c0", "c_frame", "delta", "t_end"])
def test_missing_key_is_named(key):
    text = "\n".join(l for l in BASE.splitlines() if not l.startswith(key + " "))
    with pytest.raises(ConfigError, match=f"missing required key '{key}'"):
        parse_config(text)


@pytest.mark.parametrize("extra, match", [
    ("colour = red", "unknown key"),
    ("c0 = 0.4", "duplicate key"),
    ("dt = fast", "cannot parse"),
    ("project = maybe", "cannot parse"),
    ("just words", "expected 'key = value'"),
    ("shape = square", "shape"),
    ("format = hdf5", "format"),
    ("gamma = 2.0", "gamma"),
    ("half_length = 5", "tail_tol"),
    ("n_points = 3000", "n_points"),
])
def test_rejections(extra, match):
    with pytest.raises(ConfigError, match=match):
        parse_config(BASE + extra + "\n")


def test_admissibility_gates():
    with pytest.raises(ConfigError):
        parse_config(BASE.replace("c0 = 0.5", "c0 = 1.5"))
    with pytest.raises(ConfigError, match="delta"):
        parse_config(BASE.replace("delta = 0.01", "delta = 0.2"))
    with pytest.raises(ConfigError, match="c_frame"):
        parse_config(BASE.replace("c0 = 0.5", "c0 = 0.4"))
    # delta = 0 may use any admissible c0 only if it equals c_frame for the boundary data
    assert parse_config(BASE.replace("delta = 0.01", "delta = 0")).delta == 0.0


def test_overrides_and_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(BASE, encoding="utf-8")
    cfg = load_config(path, {"t_end": 2.0, "shape": "gaussian", "dt": None})
    assert cfg.t_end == 2.0 and cfg.shape == "gaussian" and cfg.dt == 5e-4
    with pytest.raises(ConfigError):
        load_config(path, {"bogus": 1})


@given(delta=st.floats(0, 0.05), t_end=st.floats(0.01, 100), seed=st.integers(0, 10**6),
       shape=st.sampled_from(["sech_bump", "gaussian", "random_smooth"]))
def test_text_round_trip_and_hash(delta, t_end, seed, shape):
    cfg = RunConfig(0.5, 0.5, delta, t_end, shape=shape, seed=seed)
    back = parse_config(cfg.to_text())
    assert back == cfg
    assert back.hash() == cfg.hash() and len(cfg.hash()) == 16
    if delta != 0.01:
        assert cfg.replace(delta=0.01).hash() != cfg.hash()
