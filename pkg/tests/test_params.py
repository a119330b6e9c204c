import math
import warnings

import pytest
from hypothesis import given
from hypothesis import strategies as st

from volswap.params import (
    EXAMPLE_MERTON,
    SPX_BATES,
    SPX_HESTON,
    BatesParams,
    Contract,
    FellerWarning,
    HestonParams,
    JumpParams,
    LevyHestonParams,
    MertonParams,
    ParameterError,
    StableParams,
    build_model,
    load_config,
    validate,
    with_updates,
)


def test_spx_heston_is_valid():
    assert validate(SPX_HESTON) is SPX_HESTON


@pytest.mark.parametrize(
    "changes, message",
    [
        ({"rho": -1.2}, "rho out of range"),
        ({"kappa": 0.0}, "kappa must be > 0"),
        ({"theta": -0.1}, "theta must be > 0"),
        ({"sigma": -0.1}, "sigma must be >= 0"),
        ({"v0": -1e-9}, "v0 must be >= 0"),
        ({"kappa": math.nan}, "kappa must be finite"),
    ],
)
def test_heston_invariants(changes, message):
    with pytest.raises(ParameterError, match=message):
        with_updates(SPX_HESTON, **changes)


def test_v0_zero_allowed():
    assert with_updates(SPX_HESTON, v0=0.0).v0 == 0.0


def test_jump_m():
    j = JumpParams(lam=0.1, a=-0.0001, b2=0.05)
    assert j.m == pytest.approx(math.exp(-0.0001 + 0.025) - 1.0, rel=1e-14)
    assert j.m == pytest.approx(0.02521, abs=1e-5)


def test_jump_moments():
    j = JumpParams(lam=1.0, a=0.1, b2=0.04)
    assert j.second_moment == pytest.approx(0.01 + 0.04)
    assert j.fourth_moment == pytest.approx(0.1**4 + 6 * 0.01 * 0.04 + 3 * 0.04**2)


@pytest.mark.parametrize(
    "kwargs, message",
    [({"lam": -1.0, "a": 0.0, "b2": 0.1}, "lambda"), ({"lam": 1.0, "a": 0.0, "b2": 0.0}, "b2")],
)
def test_jump_invariants(kwargs, message):
    with pytest.raises(ParameterError, match=message):
        JumpParams(**kwargs)


@given(
    a=st.floats(-1.0, 1.0),
    b2=st.floats(1e-4, 1.0),
    da=st.floats(1e-3, 0.5),
    db=st.floats(1e-3, 0.5),
)
def test_m_increasing_in_a_and_b2(a, b2, da, db):
    base = JumpParams(0.1, a, b2).m
    assert JumpParams(0.1, a + da, b2).m > base
    assert JumpParams(0.1, a, b2 + db).m > base


def test_m_zero_iff_drift_cancels():
    assert JumpParams(0.1, -0.05, 0.1).m == 0.0
    assert JumpParams(0.1, -0.05, 0.11).m != 0.0


def test_merton_requires_positive_sigma():
    with pytest.raises(ParameterError, match="sigma must be > 0"):
        MertonParams(sigma=0.0, jumps=EXAMPLE_MERTON.jumps)


def test_stable_invariants():
    assert StableParams(alpha=2.0).symmetric
    assert not StableParams(alpha=1.5, delta=0.1).symmetric
    assert StableParams(alpha=1.5, sigma_s=8.0).scale == pytest.approx(4.0)
    for kwargs in ({"alpha": 0.0}, {"alpha": 2.1}, {"alpha": 1.5, "sigma_s": 0.0}, {"alpha": 1.5, "beta": 1.5}):
        with pytest.raises(ParameterError):
            StableParams(**kwargs)


def test_contract_invariants():
    assert Contract(1.0).tau == pytest.approx(30 / 365)
    with pytest.raises(ParameterError, match="maturity_T"):
        Contract(0.0)
    with pytest.raises(ParameterError, match="tau"):
        Contract(1.0, tau=0.0)


@pytest.mark.parametrize(
    "params",
    [SPX_HESTON, SPX_BATES, EXAMPLE_MERTON, LevyHestonParams(SPX_HESTON, StableParams(1.5)), Contract(1.0)],
)
def test_validate_idempotent(params):
    assert validate(validate(params)) == params


def test_validate_rejects_unknown_type():
    with pytest.raises(ParameterError, match="unsupported"):
        validate(object())


def test_feller_warning_not_error():
    p = HestonParams(kappa=0.5, theta=0.01, sigma=0.5, rho=0.0, v0=0.01)
    with pytest.warns(FellerWarning):
        assert validate(p) is p
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        validate(SPX_HESTON)


def test_frozen():
    with pytest.raises(AttributeError):
        SPX_HESTON.kappa = 1.0


def test_config_round_trip(tmp_path):
    path = tmp_path / "bates.toml"
    path.write_text(
        'model = "bates"\nkappa = 0.8269\ntheta = 0.1793\nsigma = 0.2916\nrho = -0.8734\n'
        "v0 = 0.0103\nr = -0.0044\nlambda = 0.0038\na = -0.0001\nb2 = 0.05\nT = 1.0\n"
    )
    values = load_config(path)
    assert values["model"] == "bates"
    model = build_model(values.pop("model"), {k: v for k, v in values.items() if k != "T"})
    assert model == SPX_BATES


def test_config_rejects_nested_tables(tmp_path):
    path = tmp_path / "bad.toml"
    path.write_text("[heston]\nkappa = 1.0\n")
    with pytest.raises(ValueError):
        load_config(path)


def test_build_model_kinds():
    h = build_model("heston", {"kappa": 1, "theta": 0.04, "sigma": 0.3, "rho": -0.5, "v0": 0.04})
    assert isinstance(h, HestonParams) and h.r == 0.0
    m = build_model("merton", {"sigma": 0.1, "lam": 0.1, "a": 0.0, "b2": 0.01})
    assert isinstance(m, MertonParams)
    lh = build_model(
        "levy-heston", {"kappa": 1, "theta": 0.04, "sigma": 0.3, "v0": 0.04, "alpha": 1.5, "sigma_s": 0.5}
    )
    assert isinstance(lh, LevyHestonParams) and lh.stable.alpha == 1.5
    assert isinstance(
        build_model("bates", {"kappa": 1, "theta": 0.04, "sigma": 0.3, "v0": 0.04, "lambda": 1, "a": 0, "b2": 0.01}),
        BatesParams,
    )


def test_build_model_errors():
    with pytest.raises(ValueError, match="kappa"):
        build_model("heston", {"theta": 0.04, "sigma": 0.3})
    with pytest.raises(ValueError):
        build_model("garch", {})
    with pytest.raises(ValueError):
        build_model("heston", {"kappa": 1, "theta": 0.04, "sigma": 0.3, "v0": 0.0, "bogus": 1.0})
