import math

import numpy as np
import pytest

from d2dsched.model import (RBC, ClusteringScheme, SystemParams, cgbc,
                            db_to_linear, dbm_to_mw, derive, rbc,
                            reference_params)


def test_db_to_linear_values():
    assert db_to_linear(0.0) == 1.0
    assert db_to_linear(10.0) == 10.0
    # 10^(-0.7), arbitrary-precision reference
    assert db_to_linear(-7.0) == pytest.approx(0.19952623149688797, abs=1e-15)


def test_dbm_to_mw_values():
    assert dbm_to_mw(0.0) == 1.0
    assert dbm_to_mw(-90.0) == pytest.approx(1e-9, rel=1e-12)
    assert dbm_to_mw(-80.0) == pytest.approx(1e-8, rel=1e-12)


@pytest.mark.parametrize("bad", [math.inf, -math.inf, math.nan])
def test_conversions_reject_nonfinite(bad):
    with pytest.raises(ValueError):
        db_to_linear(bad)
    with pytest.raises(ValueError):
        dbm_to_mw(bad)


def test_conversion_round_trip():
    # dbm_to_mw(x) * db_to_linear(-x) == 1 mW across a wide grid
    for x in np.linspace(-150, 60, 211):
        assert dbm_to_mw(x) * db_to_linear(-x) == pytest.approx(1.0, rel=1e-12)


def test_reference_params_table_values():
    p = reference_params(640.0)
    assert (p.mu, p.lam, p.n_z, p.k, p.eta) == (640.0, 10.0, 64, 3, 4.0)
    assert (p.sigma2_dbm, p.rho_l_dbm, p.rho_c_dbm) == (-90.0, -100.0, -80.0)
    assert (p.theta_ra_db, p.theta_c_db) == (-7.0, -7.0)
    assert p.alpha == 64.0


@pytest.mark.parametrize("field,value", [
    ("mu", 0.0), ("lam", -1.0), ("eta", 2.0), ("n_z", 0), ("k", 0),
])
def test_params_invariants(field, value):
    kwargs = dict(mu=640.0, lam=10.0, n_z=64, k=3, eta=4.0, sigma2_dbm=-90.0,
                  rho_l_dbm=-100.0, rho_c_dbm=-80.0, theta_ra_db=-7.0,
                  theta_c_db=-7.0)
    kwargs[field] = value
    with pytest.raises(ValueError):
        SystemParams(**kwargs)


def test_scheme_invariants():
    with pytest.raises(ValueError):
        ClusteringScheme(RBC, 0.0)
    with pytest.raises(ValueError):
        ClusteringScheme(RBC, 1.2)
    with pytest.raises(ValueError):
        ClusteringScheme("other", 0.5)
    with pytest.raises(ValueError):
        rbc(0.5).tau  # threshold undefined for random-based election


def test_tau_delta_consistency():
    for delta in np.linspace(0.001, 1.0, 97):
        s = cgbc(float(delta))
        assert math.exp(-s.tau) == pytest.approx(delta, abs=1e-12)
    assert cgbc(1.0).tau == 0.0


def test_derive():
    p = reference_params(640.0)
    d = derive(p, rbc(0.25))
    assert d.alpha == 64.0
    assert d.delta_tilde == pytest.approx(3.0)
    assert d.c == 3.575
    # direct arithmetic: 0.25 * 160 / (10 * 64)
    d2 = derive(reference_params(160.0), rbc(0.25))
    assert d2.alpha_tilde == pytest.approx(0.0625, rel=1e-12)
    assert derive(p, rbc(1.0)).delta_tilde == 0.0


def test_derive_is_pure():
    p = reference_params(640.0)
    s = cgbc(0.4)
    assert derive(p, s) == derive(p, s)
