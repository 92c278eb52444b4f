import math

import numpy as np
import pytest
import yaml
from hypothesis import given, settings
from hypothesis import strategies as st

from xduce.constants import TWO_PI, hz_to_rad, rad_to_hz
from xduce.params import (
    InvariantError,
    SchemaError,
    TransducerParams,
    dump_params,
    kappa_e_at_power,
    load_params,
    params_to_dict,
    table1_preset,
)


def test_preset_values(fig2, fig3):
    assert fig2.omega_m / TWO_PI == pytest.approx(1.451e6, rel=1e-15)
    assert fig2.eps_cl == 0.91
    assert fig3.eps_cl == 0.79
    assert fig2.gamma_m / TWO_PI == pytest.approx(0.113, rel=1e-15)
    assert fig2.eps_pc == 0.86 and fig3.eps_pc == 0.80


def test_unknown_dataset_rejected():
    with pytest.raises(ValueError):
        table1_preset("fig4")


def _numbers(doc, prefix=""):
    out = {}
    for k, v in doc.items():
        if isinstance(v, dict):
            out.update(_numbers(v, f"{prefix}{k}."))
        elif isinstance(v, list):
            for i, row in enumerate(v):
                out.update(_numbers(row, f"{prefix}{k}[{i}]."))
        elif isinstance(v, float):
            out[prefix + k] = v
    return out


def test_document_round_trip_exact(fig2):
    # file -> params -> file is bit-exact
    text = dump_params(fig2)
    assert dump_params(load_params(text)) == text


def test_params_round_trip_full_precision(fig2):
    back = load_params(dump_params(fig2))
    a, b = _numbers(params_to_dict(fig2)), _numbers(params_to_dict(back))
    assert a.keys() == b.keys()
    for k in a:
        assert b[k] == pytest.approx(a[k], rel=2e-16, abs=0), k


def test_round_trip_dict_is_stable(fig3):
    doc = params_to_dict(fig3)
    assert params_to_dict(load_params(doc)) == doc


def test_eps_stored_exactly(fig2):
    doc = params_to_dict(fig2)
    doc["eps_pc"] = 0.86
    assert load_params(doc).eps_pc == 0.86


def test_hz_keys_scaled_once(fig2):
    doc = params_to_dict(fig2)
    assert doc["omega_m_hz"] == pytest.approx(1.451e6, rel=1e-15)
    assert load_params(doc).omega_m == pytest.approx(TWO_PI * 1.451e6, rel=1e-15)


def test_negative_rate_is_invariant_error(fig2):
    doc = params_to_dict(fig2)
    doc["kappa_o_ext_hz"] = -1.0
    with pytest.raises(InvariantError, match="rates >= 0"):
        load_params(doc)


def test_unknown_key_names_key(fig2):
    doc = params_to_dict(fig2)
    doc["kappa_o_extra_hz"] = 1.0
    with pytest.raises(SchemaError, match="kappa_o_extra_hz"):
        load_params(doc)


def test_nested_unknown_key(fig2):
    doc = params_to_dict(fig2)
    doc["tech_noise"]["a_x"] = 1.0
    with pytest.raises(SchemaError, match="tech_noise.a_x"):
        load_params(doc)


def test_missing_schema_version(fig2):
    doc = params_to_dict(fig2)
    del doc["schema_version"]
    with pytest.raises(SchemaError, match="schema_version"):
        load_params(doc)


def test_load_from_yaml_text(fig2):
    text = yaml.safe_dump(params_to_dict(fig2))
    assert params_to_dict(load_params(text)) == params_to_dict(load_params(params_to_dict(fig2)))


def test_load_from_file(tmp_path, fig3):
    path = tmp_path / "p.yaml"
    dump_params(fig3, path)
    assert load_params(str(path)) == load_params(dump_params(fig3))


def test_modematching_range(fig2):
    with pytest.raises(InvariantError):
        fig2.replace(eps_cl=1.2)


def test_tech_noise_cross_constraint():
    from xduce.params import TechNoiseCoeffs

    with pytest.raises(InvariantError):
        TechNoiseCoeffs(c_xx=1.0, c_yy=1.0, c_xy=1.5)
    TechNoiseCoeffs(c_xx=1.0, c_yy=4.0, c_xy=2.0)


def test_lock_product_overrides_pair():
    from xduce.params import LockBeamSpec

    assert LockBeamSpec(gamma_lock=2.0, n_min_lock=3.0).product == 6.0
    assert LockBeamSpec(gamma_lock=2.0, n_min_lock=3.0, gamma_lock_nmin=5.0).product == 5.0


def test_kappa_e_table_endpoints(fig2):
    ns = [n for n, _ in fig2.kappa_e_int_table]
    assert kappa_e_at_power(fig2, ns[0]) / TWO_PI == pytest.approx(1.64e6, rel=1e-9)
    assert kappa_e_at_power(fig2, ns[-1]) / TWO_PI == pytest.approx(2.31e6, rel=1e-9)
    # clamped outside the table
    assert kappa_e_at_power(fig2, 0.0) == kappa_e_at_power(fig2, ns[0])
    assert kappa_e_at_power(fig2, 10 * ns[-1]) == kappa_e_at_power(fig2, ns[-1])


def test_single_entry_table(fig2):
    p = fig2.replace(kappa_e_int_table=((5.0, 1234.0),))
    assert kappa_e_at_power(p, 0.0) == p.kappa_e_ext + 1234.0


def test_empty_table_errors(fig2):
    p = fig2.replace(kappa_e_int_table=())
    with pytest.raises(ValueError):
        kappa_e_at_power(p, 1.0)


def test_negative_photon_number(fig2):
    with pytest.raises(ValueError):
        kappa_e_at_power(fig2, -1.0)


@settings(max_examples=50, deadline=None)
@given(
    ns=st.lists(st.floats(0, 1e12), min_size=2, max_size=8, unique=True),
    ks=st.lists(st.floats(0, 1e7), min_size=8, max_size=8),
    a=st.floats(0, 2e12),
    b=st.floats(0, 2e12),
)
def test_kappa_e_monotone(ns, ks, a, b, fig2):
    ns = sorted(ns)
    ks = sorted(ks[: len(ns)])
    p = fig2.replace(kappa_e_int_table=tuple(zip(ns, ks)))
    lo, hi = sorted((a, b))
    assert kappa_e_at_power(p, lo) <= kappa_e_at_power(p, hi)


@given(st.floats(-1e15, 1e15, allow_nan=False))
def test_two_pi_both_ways(f):
    assert hz_to_rad(f) == f * 2 * math.pi
    assert rad_to_hz(hz_to_rad(f)) == pytest.approx(f, rel=1e-15, abs=1e-300)


def test_resolved_sideband_flag(fig2):
    assert fig2.resolved_sideband_ok()
    assert not fig2.resolved_sideband_ok(kappa_e=float("nan"))


def test_chain_consistency_check():
    from xduce.params import DetectionChain

    with pytest.raises(InvariantError):
        DetectionChain(xi_e=0.5, n_xi_e=8.5)
    DetectionChain(xi_e=1 / 9.0, n_xi_e=8.5)
