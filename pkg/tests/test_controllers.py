"""Unit tests for the policy interface and the analytic basic controller."""

import numpy as np
import pytest

from qfclab.controllers import (
    ControlAction,
    FullState,
    ObservationKindError,
    OpenLoop,
    OutcomePair,
    basic_policy,
    believed_outcome,
    derive_basic_gains,
    policy_act,
    transfer_probability,
)
from qfclab.qcore import basis_state, maximally_mixed


class TestBasicPolicy:
    def test_outcome_two_holds_still(self):
        action, _ = policy_act(basic_policy(), OutcomePair(2, 0.0))
        assert action.beta == 0.0
        assert action.stop is False

    def test_outcome_zero_drives_full_pulse(self):
        action, _ = policy_act(basic_policy(), OutcomePair(0, 0.0))
        assert action.beta == 1.0

    def test_outcome_one_drives_full_pulse(self):
        action, _ = policy_act(basic_policy(), OutcomePair(1, 0.0))
        assert action.beta == 1.0

    def test_memoryless_in_history(self):
        # only the most recent outcome matters; the carried beta is ignored
        p = basic_policy()
        for last_beta in (-1.0, 0.0, 0.5):
            for outcome in range(3):
                action, _ = policy_act(p, OutcomePair(outcome, last_beta))
                assert action.beta == p.beta_by_outcome[outcome]

    def test_full_state_observation_rejected(self):
        with pytest.raises(ObservationKindError, match="OutcomePair"):
            policy_act(basic_policy(), FullState(maximally_mixed()))


class TestDeriveBasicGains:
    def test_argmax_is_one_one(self):
        assert derive_basic_gains(201) == (1.0, 1.0)

    def test_argmax_stable_across_grid_densities(self):
        for points in (21, 41, 101, 501):
            assert derive_basic_gains(points) == (1.0, 1.0)

    def test_objective_values_at_optimum(self):
        # ((1 - cos sqrt(2))/2)^2 and (sin(sqrt 2)/sqrt 2)^2 from the Taylor oracle
        s = np.sqrt(2.0)
        assert transfer_probability(1.0, 0) == pytest.approx(((1 - np.cos(s)) / 2) ** 2, abs=1e-9)
        assert transfer_probability(1.0, 0) == pytest.approx(0.17811, abs=1e-5)
        assert transfer_probability(1.0, 1) == pytest.approx(np.sin(s) ** 2 / 2.0, abs=1e-9)
        assert transfer_probability(1.0, 1) == pytest.approx(0.48784, abs=1e-5)

    def test_degenerate_grid_raises(self):
        with pytest.raises(ValueError, match="grid"):
            derive_basic_gains(2)


class TestControlAction:
    def test_out_of_range_beta_rejected(self):
        with pytest.raises(ValueError, match="beta"):
            ControlAction(beta=1.0001)

    def test_stop_defaults_false(self):
        assert ControlAction(beta=0.3).stop is False


class TestOpenLoop:
    def test_sequence_indexing_and_hold(self):
        p = OpenLoop(betas=(1.0, -0.5))
        a0, _ = policy_act(p, OutcomePair(0, 0.0), step=0)
        a1, _ = policy_act(p, OutcomePair(1, 0.0), step=1)
        a5, _ = policy_act(p, OutcomePair(2, 0.0), step=5)
        assert (a0.beta, a1.beta, a5.beta) == (1.0, -0.5, -0.5)


class TestBelievedOutcome:
    def test_basis_states(self):
        for k in range(3):
            assert believed_outcome(basis_state(k)) == k

    def test_dominant_level_of_mixture(self):
        assert believed_outcome(np.diag([0.2, 0.7, 0.1]).astype(complex)) == 1
