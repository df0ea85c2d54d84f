import dataclasses
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qkdlab.core import (
    Basis,
    ConfigError,
    DetectorModel,
    DoubleClickPolicy,
    E_MIS_X_DEFAULT,
    E_MIS_Z_DEFAULT,
    Intensity,
    InvalidIntensityOrder,
    LinkModel,
    NonPositivePulseCount,
    ObservedCounts,
    ParamError,
    ProbabilityOutOfRange,
    ProtocolParams,
    SimulationSettings,
    calibrate_misalignment,
    load_config,
    resolved_config_dict,
    save_config,
    validate_params,
)


class TestEnums:
    def test_basis_has_exactly_two_variants(self):
        assert {b.name for b in Basis} == {"Z", "X"}

    def test_intensity_has_exactly_two_variants(self):
        assert {k.name for k in Intensity} == {"SIGNAL", "DECOY"}

    def test_double_click_policy(self):
        assert list(DoubleClickPolicy) == [DoubleClickPolicy.RANDOM_BIT]


class TestValidateParams:
    def test_reference_parameters_valid(self):
        p = ProtocolParams(mu=0.56, nu=0.14, p_mu=0.66, p_z_alice=0.9,
                           p_z_bob=0.9, n_pulses=10**10)
        assert validate_params(p) is p

    def test_equal_intensities_rejected(self):
        with pytest.raises(InvalidIntensityOrder):
            validate_params(ProtocolParams(mu=0.5, nu=0.5))

    def test_probability_out_of_range(self):
        with pytest.raises(ProbabilityOutOfRange):
            validate_params(ProtocolParams(p_mu=1.2))

    def test_nonpositive_pulse_count(self):
        with pytest.raises(NonPositivePulseCount):
            validate_params(ProtocolParams(n_pulses=0))

    def test_f_ec_below_one_rejected(self):
        with pytest.raises(ParamError):
            validate_params(ProtocolParams(f_ec=0.9))

    def test_mu_above_one_warns_but_passes(self):
        with pytest.warns(UserWarning):
            validate_params(ProtocolParams(mu=1.2, nu=0.14))

    def test_validation_idempotent(self):
        p = ProtocolParams()
        assert validate_params(validate_params(p)) == p


class TestDetectorAndLink:
    def test_n_detectors_fixed_at_four(self):
        with pytest.raises(ParamError):
            DetectorModel(n_detectors=2)

    def test_negative_loss_rejected(self):
        with pytest.raises(ParamError):
            LinkModel(channel_loss_db=-1.0)

    def test_misalignment_above_half_rejected(self):
        with pytest.raises(ParamError):
            LinkModel(e_mis_z=0.6)

    def test_eta_sys_75km(self):
        link = LinkModel(channel_loss_db=14.6, receiver_loss_db=1.4)
        assert link.eta_sys == pytest.approx(10 ** (-1.6) * 0.1, rel=1e-12)

    def test_with_channel_loss_preserves_rest(self):
        link = LinkModel()
        other = link.with_channel_loss(4.8)
        assert other.channel_loss_db == 4.8
        assert other.receiver_loss_db == link.receiver_loss_db
        assert other.detector == link.detector


class TestObservedCounts:
    def test_errors_cannot_exceed_detections(self):
        with pytest.raises(ParamError):
            ObservedCounts(n_z_mu=5, m_z_mu=6)

    def test_negative_counts_rejected(self):
        with pytest.raises(ParamError):
            ObservedCounts(n_z_mu=-1)

    def test_accessors_and_totals(self):
        c = ObservedCounts(n_z_mu=10, n_z_nu=4, n_x_mu=2, n_x_nu=1,
                           m_z_mu=3, m_z_nu=1, m_x_mu=1, m_x_nu=0)
        assert c.n(Basis.Z, Intensity.SIGNAL) == 10
        assert c.m(Basis.Z, Intensity.DECOY) == 1
        assert c.n_total(Basis.Z) == 14
        assert c.m_total(Basis.X) == 1
        assert c.total_sifted() == 17

    def test_immutable(self):
        c = ObservedCounts()
        with pytest.raises(dataclasses.FrozenInstanceError):
            c.n_z_mu = 1


class TestCalibration:
    def test_defaults_reproduce_back_to_back_qbers(self):
        link = LinkModel(channel_loss_db=0.0)
        p = ProtocolParams()
        ez = calibrate_misalignment(0.0061, Basis.Z, link, p)
        ex = calibrate_misalignment(0.0087, Basis.X, link, p)
        assert ez == pytest.approx(E_MIS_Z_DEFAULT, abs=5e-7)
        assert ex == pytest.approx(E_MIS_X_DEFAULT, abs=5e-7)


_prob = st.floats(min_value=1e-6, max_value=1.0 - 1e-6, allow_nan=False)


class TestConfigRoundTrip:
    @settings(max_examples=30, deadline=None)
    @given(
        mu=st.floats(min_value=0.2, max_value=1.0),
        nu=st.floats(min_value=0.001, max_value=0.19),
        p_mu=_prob,
        loss=st.floats(min_value=0.0, max_value=60.0),
        eff=_prob,
    )
    def test_every_field_round_trips_bit_exactly(self, tmp_path_factory, mu, nu, p_mu, loss, eff):
        path = str(tmp_path_factory.mktemp("cfg") / "qkd.conf")
        p = ProtocolParams(mu=mu, nu=nu, p_mu=p_mu)
        link = LinkModel(channel_loss_db=loss, detector=DetectorModel(efficiency=eff))
        sim = SimulationSettings(seed=3, sigma=0.25)
        save_config(path, p, link, sim)
        p2, link2, sim2 = load_config(path)
        assert p2 == p
        assert link2 == link
        assert sim2 == sim

    def test_missing_file_raises_with_path(self, tmp_path):
        path = str(tmp_path / "nope.conf")
        with pytest.raises(ConfigError, match="nope.conf"):
            load_config(path)

    def test_bad_value_names_field(self, tmp_path):
        path = tmp_path / "bad.conf"
        path.write_text("[protocol]\nmu = banana\n")
        with pytest.raises(ConfigError, match="mu"):
            load_config(str(path))

    def test_defaults_fill_missing_sections(self, tmp_path):
        path = tmp_path / "partial.conf"
        path.write_text("[link]\nchannel_loss_db = 4.8\n")
        p, link, sim = load_config(str(path))
        assert p == ProtocolParams()
        assert link.channel_loss_db == 4.8

    def test_scientific_notation_counts(self, tmp_path):
        path = tmp_path / "sci.conf"
        path.write_text("[protocol]\nn_pulses = 1e7\n")
        p, _, _ = load_config(str(path))
        assert p.n_pulses == 10**7

    def test_resolved_config_dict_covers_all_sections(self):
        d = resolved_config_dict(ProtocolParams(), LinkModel(), SimulationSettings())
        assert set(d) == {"protocol", "link", "detector", "simulation"}
        assert d["protocol"]["mu"] == 0.56
        assert d["detector"]["n_detectors"] == 4
