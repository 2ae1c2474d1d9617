"""Model specification validation and field classification."""

import pytest

from oscgmrf import (
    FIELD_NON_OSCILLATING,
    FIELD_OSCILLATING,
    FIELD_POSSIBLY_OSCILLATING,
    InvalidInputError,
    ModelSpec,
    NoiseSpec,
    OperatorSpec,
    classify_fields,
)

from conftest import table1_model


def test_table1_model_is_valid():
    table1_model().validate()


@pytest.mark.parametrize("bad", [
    dict(variant="L9"),
    dict(b11=0.0),
    dict(b11=-1.0),
    dict(b22=0.0),
    dict(h11=-0.2),
    dict(h22=0.0),
    dict(b21=float("nan")),
])
def test_operator_validation_rejects(bad):
    spec = dict(variant="L1", b11=0.5, b21=0.25, b22=1.0, h11=0.25, h22=0.36)
    spec.update(bad)
    with pytest.raises(InvalidInputError):
        OperatorSpec(**spec).validate()


def test_variant_l2_requires_h21():
    op = OperatorSpec(variant="L2", b11=1.0, b21=0.5, b22=1.0, h11=1.0, h22=1.0)
    with pytest.raises(InvalidInputError, match="h21"):
        op.validate()
    OperatorSpec(variant="L2", b11=1.0, b21=0.5, b22=1.0,
                 h11=1.0, h22=1.0, h21=0.3).validate()


@pytest.mark.parametrize("bad", [
    dict(kind="pink"),
    dict(kind="matern", kappa_n=0.0),
    dict(kind="oscillating", kappa_n=0.5, omega=1.0),
    dict(kind="oscillating", kappa_n=0.5, omega=-0.1),
])
def test_noise_validation_rejects(bad):
    with pytest.raises(InvalidInputError):
        NoiseSpec(**bad).validate()


def test_omega_zero_is_allowed():
    NoiseSpec(kind="oscillating", kappa_n=0.5, omega=0.0).validate()


def test_kappa_sq_exact_takes_precedence():
    n = NoiseSpec(kind="matern", kappa_n=0.5, kappa_sq_exact=0.3)
    assert n.kappa_sq == 0.3
    assert NoiseSpec(kind="matern", kappa_n=0.5).kappa_sq == 0.25


def test_lock_substitutes_exact_value():
    model = table1_model(h11=0.3137)
    eff = model.effective_noise1
    # the locked range parameter is h11 itself, not a sqrt/square round trip
    assert eff.kappa_sq == 0.3137
    assert model.noise1.kappa_n == 0.5  # original spec untouched


def test_lock_ignored_for_non_matern_noise():
    model = table1_model(
        noise1=NoiseSpec(kind="oscillating", kappa_n=0.7, omega=0.3), lock1=True
    )
    assert model.effective_noise1.kappa_sq == pytest.approx(0.49)


def test_lock2_ties_noise2_to_h22():
    model = table1_model(
        noise2=NoiseSpec(kind="matern", kappa_n=0.9), lock2=True
    )
    assert model.effective_noise2.kappa_sq == 0.36


@pytest.mark.parametrize("kinds,expected", [
    (("matern", "oscillating"), (FIELD_NON_OSCILLATING, FIELD_OSCILLATING)),
    (("oscillating", "matern"), (FIELD_OSCILLATING, FIELD_POSSIBLY_OSCILLATING)),
    (("white", "white"), (FIELD_NON_OSCILLATING, FIELD_NON_OSCILLATING)),
    (("oscillating", "oscillating"), (FIELD_OSCILLATING, FIELD_OSCILLATING)),
    (("white", "matern"), (FIELD_NON_OSCILLATING, FIELD_NON_OSCILLATING)),
])
def test_classification_follows_noise_kinds(kinds, expected):
    model = ModelSpec(
        operator=OperatorSpec(variant="L1", b11=1.0, b21=0.5, b22=1.0, h11=1.0, h22=1.0),
        noise1=NoiseSpec(kind=kinds[0], kappa_n=0.5, omega=0.4),
        noise2=NoiseSpec(kind=kinds[1], kappa_n=0.5, omega=0.4),
    )
    assert classify_fields(model) == expected
