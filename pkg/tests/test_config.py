"""Run-file parsing: defaults, error messages and the model round trip."""

import textwrap

import pytest

from oscgmrf import ConfigError, load_config, model_section
from oscgmrf.models import NoiseSpec

from conftest import table1_model

GOOD = """\
[mesh]
nx = 6
ny = 5
extent = 0 3 0 2.5
padding = 1

[model]
variant = L1
b11 = 0.5
b21 = 0.25
b22 = 1.0
h11 = 0.25
h22 = 0.36
noise1 = matern
kappa_n1 = 0.5
noise2 = oscillating
kappa_n2 = 0.6
omega2 = 0.95
lock1 = true

[observations]
file = obs.csv
noise_precision = 1e4

[run]
seed = 42
count = 10
"""


@pytest.fixture
def write_config(tmp_path):
    def _write(text, obs="field_index,x,y,value\n1,0.5,0.5,1.0\n", name="run.ini"):
        (tmp_path / "obs.csv").write_text(obs)
        path = tmp_path / name
        path.write_text(textwrap.dedent(text))
        return str(path)

    return _write


def test_good_config_parses(write_config):
    cfg = load_config(write_config(GOOD))
    mp = cfg.mesh_params()
    assert mp == {"nx": 6, "ny": 5, "extent": (0.0, 3.0, 0.0, 2.5), "padding": 1.0}
    mesh = cfg.mesh()
    assert mesh.inner_extent == (0.0, 3.0, 0.0, 2.5)
    model = cfg.model()
    assert model == table1_model()
    assert cfg.seed() == 42
    assert cfg.draw_count() == 10
    assert cfg.noise_precision() == (1e4, 1e4)
    assert cfg.observation_file().endswith("obs.csv")
    assert cfg.target_file() is None


def test_defaults(write_config):
    cfg = load_config(write_config("""\
        [model]
        b11 = 1.0
        b22 = 1.0
        h11 = 1.0
        """))
    assert cfg.seed() == 0
    assert cfg.draw_count() == 1
    assert cfg.ordering() == "mindeg"
    assert cfg.noise_precision() == (1e4, 1e4)
    model = cfg.model()
    assert model.noise1.kind == "white" and model.noise2.kind == "white"
    assert model.lock1 and not model.lock2
    opts = cfg.fit_options()
    assert opts.maxiter == 200 and opts.ordering == "mindeg"
    assert cfg.spectra_params() == (3.0, 200)
    assert cfg.correlation_params() == {}


def test_missing_file():
    with pytest.raises(ConfigError, match="not found"):
        load_config("/nonexistent/run.ini")


def test_unparseable_file(write_config):
    with pytest.raises(ConfigError, match="cannot parse"):
        load_config(write_config("this is not ini\n"))


def test_inline_comments_stripped(write_config):
    cfg = load_config(write_config("""\
        [run]
        seed = 7  # lucky
        count = 3 ; three draws
        """))
    assert cfg.seed() == 7
    assert cfg.draw_count() == 3


@pytest.mark.parametrize("snippet,message", [
    ("[mesh]\nny = 5\nextent = 0 1 0 1\n", r"\[mesh\] is missing required option 'nx'"),
    ("[mesh]\nnx = one\nny = 5\nextent = 0 1 0 1\n", "expected an integer"),
    ("[mesh]\nnx = 1\nny = 5\nextent = 0 1 0 1\n", "at least 2"),
    ("[mesh]\nnx = 4\nny = 5\nextent = 0 1 0\n", "expected 4 numbers"),
    ("[mesh]\nnx = 4\nny = 5\nextent = 1 0 0 1\n", "x1>x0"),
    ("[mesh]\nnx = 4\nny = 5\nextent = 0 1 0 1\npadding = -1\n", "nonnegative"),
    ("[model]\nvariant = L9\nb11 = 1\nb22 = 1\nh11 = 1\n", "variant"),
    ("[model]\nb11 = 1\nb22 = 1\nh11 = 1\nnoise1 = pink\n", "noise1"),
    ("[model]\nb11 = -1\nb22 = 1\nh11 = 1\n", r"\[model\] invalid"),
    ("[model]\nb11 = 1\nb22 = 1\nh11 = 1\nlock1 = maybe\n", "boolean"),
    ("[model]\nb11 = 1\nb22 = 1\nh11 = 1\nnoise2 = oscillating\nkappa_n2 = 1\nomega2 = 1.5\n",
     r"\[model\] invalid"),
    ("[priors]\nzeta = flat\n", "unknown parameter"),
    ("[priors]\nb21 = cauchy 0 1\n", "family"),
    ("[priors]\nb21 = normal 0\n", "expected 'normal"),
    ("[priors]\nb21 = normal 0 x\n", "expected 'normal"),
    ("[priors]\nb21 = flat 3\n", "no arguments"),
    ("[priors]\nomega2 = beta 0 1\n", r"\[priors\] omega2"),
    ("[run]\ncount = 0\n", "at least 1"),
    ("[spectra]\nk_max = -1\n", "k_max"),
])
def test_config_errors_name_the_option(write_config, snippet, message):
    path = write_config(snippet)
    with pytest.raises(ConfigError, match=message):
        cfg = load_config(path)
        # sections that are only read on demand
        cfg.draw_count()
        cfg.spectra_params()


def test_observation_file_checked_at_load(write_config, tmp_path):
    path = tmp_path / "run.ini"
    path.write_text("[observations]\nfile = missing.csv\n")
    with pytest.raises(ConfigError, match="missing.csv"):
        load_config(str(path))


def test_paths_resolve_relative_to_config(tmp_path):
    sub = tmp_path / "cfgdir"
    sub.mkdir()
    (sub / "obs.csv").write_text("field_index,x,y,value\n")
    path = sub / "run.ini"
    path.write_text("[observations]\nfile = obs.csv\n")
    cfg = load_config(str(path))
    assert cfg.observation_file() == str(sub / "obs.csv")


def test_noise_precision_forms(write_config):
    cfg = load_config(write_config("[observations]\nfile = obs.csv\nnoise_precision = 100 400\n"))
    assert cfg.noise_precision() == (100.0, 400.0)
    for bad in ("0", "1 2 3", "abc"):
        cfg = load_config(write_config(f"[observations]\nfile = obs.csv\nnoise_precision = {bad}\n"))
        with pytest.raises(ConfigError, match="noise_precision"):
            cfg.noise_precision()


def test_priors_parse(write_config):
    cfg = load_config(write_config("""\
        [priors]
        b21 = normal 0 1
        omega2 = beta 2 2
        kappa_n2 = flat
        """))
    priors = cfg.priors()
    assert priors.get("b21").b == 1.0
    assert priors.get("omega2").family == "beta"
    assert priors.get("kappa_n2").family == "flat"
    assert priors.get("b11").family == "lognormal"  # default untouched


def test_correlation_params(write_config):
    cfg = load_config(write_config("""\
        [correlation]
        reference = center
        max_distance = 8
        bin_width = 0.5
        """))
    assert cfg.correlation_params() == {"max_distance": 8.0, "bin_width": 0.5}
    cfg = load_config(write_config("[correlation]\nreference = 17\n"))
    assert cfg.correlation_params() == {"reference": 17}


def test_model_section_roundtrip(tmp_path):
    model = table1_model()
    text = model_section(model)
    path = tmp_path / "model.ini"
    path.write_text(text)
    back = load_config(str(path)).model()
    assert back.operator == model.operator
    assert back.lock1 == model.lock1 and back.lock2 == model.lock2
    assert back.noise1.kind == model.noise1.kind
    assert back.noise2 == model.noise2
    # the lock writes the effective (tied) range back out explicitly
    assert back.effective_noise1.kappa_sq == pytest.approx(
        model.effective_noise1.kappa_sq, rel=1e-15
    )


def test_model_section_roundtrip_variants(tmp_path):
    for model in [
        table1_model(variant="L2", h21=0.4),
        table1_model(variant="L3", noise2=NoiseSpec(kind="white")),
    ]:
        path = tmp_path / "model.ini"
        path.write_text(model_section(model))
        back = load_config(str(path)).model()
        assert back.operator.variant == model.operator.variant
        assert back.noise2.kind == model.noise2.kind
