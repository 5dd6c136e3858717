import json

import pytest

from harqgp.scenario import (
    FadingModel,
    HarqType,
    ParseError,
    PowerSchedule,
    Receiver,
    ScenarioConfig,
    ValidationError,
    dumps,
    load_scenario,
    reference_scenario,
)

MINIMAL = {"n_blocks": 2, "block_lengths": [1, 1], "snr": 4.0, "max_power": 1.0,
           "message_bits": 2.0, "outage_target": 0.01, "latency_target": 3.0,
           "feedback_delay_mean": 0.0, "harq_type": "incremental_redundancy",
           "fading": {"family": "rayleigh"}, "grid_points": 1024}


class TestParsing:
    def test_minimal_config(self):
        cfg = load_scenario(json.dumps(MINIMAL))
        assert cfg.n_blocks == 2
        assert cfg.harq_type is HarqType.INCREMENTAL_REDUNDANCY
        assert cfg.fading == FadingModel.rayleigh()
        assert not cfg.is_broadcast

    def test_bad_outage_target_names_field(self):
        with pytest.raises(ValidationError) as exc:
            load_scenario(json.dumps(dict(MINIMAL, outage_target=1.5)))
        assert exc.value.field == "outage_target"

    def test_missing_key_is_parse_error(self):
        d = dict(MINIMAL)
        del d["harq_type"]
        with pytest.raises(ParseError):
            load_scenario(json.dumps(d))

    def test_unknown_key_is_parse_error(self):
        with pytest.raises(ParseError):
            load_scenario(json.dumps(dict(MINIMAL, colour="blue")))

    def test_malformed_json(self):
        with pytest.raises(ParseError):
            load_scenario(b"{not json")

    def test_block_count_mismatch(self):
        with pytest.raises(ValidationError):
            load_scenario(json.dumps(dict(MINIMAL, block_lengths=[1, 1, 1])))

    def test_round_trip(self):
        cfg = reference_scenario(12.0, receivers=3, antennas=2)
        again = load_scenario(dumps(cfg))
        assert again == cfg
        assert again.digest() == cfg.digest()


class TestInvariants:
    def test_chase_combining_needs_equal_blocks(self):
        with pytest.raises(ValidationError):
            ScenarioConfig(2, [1.0, 0.5], 2.0, 1.0, 1.0, 0.1, 3.0, harq_type=HarqType.CHASE_COMBINING)

    def test_single_receiver_list_rejected(self):
        with pytest.raises(ValidationError):
            ScenarioConfig(2, [1.0, 1.0], 2.0, 1.0, 1.0, 0.1, 3.0, receivers=(Receiver(2.0, FadingModel.rayleigh()),))

    def test_power_schedule_check(self):
        cfg = reference_scenario(10.0)
        PowerSchedule.uniform(1.0, 5).check(cfg)
        with pytest.raises(ValidationError):
            PowerSchedule((1.0, 1.2, 1.0, 1.0, 1.0)).check(cfg)
        with pytest.raises(ValidationError):
            PowerSchedule((1.0,)).check(cfg)


class TestDefaults:
    def test_reference_scenario(self):
        cfg = reference_scenario(8.0)
        assert cfg.n_blocks == 5 and cfg.message_bits == 4.0
        assert cfg.outage_target == 1e-5 and cfg.latency_target == 3.0
        assert cfg.max_power == 1.0 and cfg.block_lengths == (1.0,) * 5

    def test_nonpositive_snr_rejected(self):
        with pytest.raises(ValueError):
            reference_scenario(0.0)

    def test_snr_change_reaches_receivers(self):
        cfg = reference_scenario(10.0, receivers=3).with_(snr=20.0)
        assert all(r.snr == 20.0 for r in cfg.links)


class TestFadingModel:
    def test_shapes(self):
        assert (FadingModel.rayleigh().shape, FadingModel.rayleigh().rate) == (1.0, 1.0)
        assert (FadingModel.nakagami(2.5).shape, FadingModel.nakagami(2.5).rate) == (2.5, 2.5)
        assert (FadingModel.diversity(4).shape, FadingModel.diversity(4).rate) == (4.0, 1.0)
        k = (3.0 + 1.0) ** 2 / (2 * 3.0 + 1.0)
        assert FadingModel.rician(3.0).shape == pytest.approx(k)

    def test_nakagami_below_half_rejected(self):
        with pytest.raises(ValidationError):
            FadingModel.nakagami(0.4)
