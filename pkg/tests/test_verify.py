import pytest

from pfgt.verify import TARGETS, Check, observed_order


def test_check_kinds():
    assert Check("a", 1e-12, 1e-10).passed
    assert not Check("a", 1e-9, 1e-10).passed
    assert Check("o", 2.1, 0.3, "order", 2.0).passed
    assert not Check("o", 1.6, 0.3, "order", 2.0).passed
    assert Check("m", 2.5, 0.0, "min_order", 1.9).passed
    assert not Check("m", 1.8, 0.0, "min_order", 1.9).passed
    assert Check("a", 1e-12, 1e-10).describe().endswith("PASS")


def test_observed_order_of_exact_power_law():
    hs = [0.1, 0.05, 0.025]
    assert observed_order([3 * h**2 for h in hs], hs) == pytest.approx(2.0)


def test_every_cli_target_is_registered():
    assert set(TARGETS) == {"coleman-noll", "power", "configurational", "identities", "surplus", "microtractions"}
