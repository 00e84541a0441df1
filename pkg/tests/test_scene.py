import json
from pathlib import Path

import numpy as np
import pytest

from odmr_scanscope import (SceneInvariantError, SceneSyntaxError,
                            SceneUnknownKeyError, parse_scene)
from odmr_scanscope.scene import DEFAULT_MOMENT_BOHR, SceneConfig

SCENES_DIR = Path(__file__).resolve().parent.parent / "scenes"

MINIMAL = '{"sample": {"spins": [{"position_nm": [0, 0, 0]}]}}'


class TestParsing:
    def test_minimal_scene_gets_documented_defaults(self):
        config = parse_scene(MINIMAL)
        assert len(config.sample.spins) == 1
        spin = config.sample.spins[0]
        assert spin.moment_direction == (0.0, 0.0, 1.0)
        assert spin.moment_magnitude_bohr == DEFAULT_MOMENT_BOHR
        assert config.sample.bias_field_T == (0.0, 0.0, 0.2)
        assert config.geometry.diameter_nm == 1.0
        assert config.geometry.standoff_nm == 0.5
        assert config.geometry.sensing_kind == "edge"
        assert config.scheme.pump_rate == 1e6
        assert config.line.linewidth_T == 0.002
        # rf defaults to resonance with the bias field
        assert config.line.rf_frequency_hz == pytest.approx(0.2 * 2.8025e10, rel=1e-4)
        assert config.sweep.mode == "field"
        assert config.noise.enabled is True
        assert config.modality.kind == "afm_nsom"

    def test_empty_scene_is_valid(self):
        config = parse_scene("{}")
        assert config.sample.spins == ()

    def test_branching_mismatch_names_the_path(self):
        scene = ('{"probe": {"scheme": {"branching_bright": 0.7, '
                 '"branching_dark": 0.5}}}')
        with pytest.raises(SceneInvariantError) as err:
            parse_scene(scene)
        assert err.value.path == "probe.scheme.branching"

    def test_reference_scenario_file(self):
        config = parse_scene(SCENES_DIR / "single_spin_reference.json")
        probe = config.build_probe()
        assert probe.geometry.diameter == 1e-9
        assert probe.geometry.standoff == 5e-10
        assert probe.geometry.sensing_point.kind == "edge"
        assert probe.line.linewidth_fwhm == 2e-3
        sample = config.build_sample()
        assert len(sample.spins) == 1
        moment = sample.spins[0].moment
        assert np.linalg.norm(moment) == pytest.approx(9.28e-24, rel=1e-3)
        assert moment[2] > 0 and moment[0] == moment[1] == 0.0

    def test_moment_units_are_bohr_magnetons(self):
        scene = ('{"sample": {"spins": [{"moment_magnitude_bohr": 2.0,'
                 ' "moment_direction": [1, 0, 0]}]}}')
        sample = parse_scene(scene).build_sample()
        assert np.linalg.norm(sample.spins[0].moment) == pytest.approx(
            2.0 * 9.274e-24, rel=1e-12)

    def test_linewidth_presets_by_name(self):
        for name, value in (("dye_molecule", 1e-3),
                            ("quantum_dot_narrow", 0.002),
                            ("quantum_dot_broad", 0.1)):
            scene = json.dumps({"probe": {"line": {"linewidth_T": name}}})
            assert parse_scene(scene).line.linewidth_T == value
        with pytest.raises(SceneInvariantError):
            parse_scene('{"probe": {"line": {"linewidth_T": "atomic"}}}')

    def test_volume_average_sensing_point(self):
        scene = ('{"probe": {"geometry": {"sensing_point":'
                 ' {"volume_average": 32}}}}')
        config = parse_scene(scene)
        assert config.geometry.sensing_kind == "volume_average"
        assert config.geometry.sensing_n_points == 32

    def test_fiber_modality_default_jitter(self):
        config = parse_scene('{"modality": {"kind": "fiber"}}')
        assert config.modality.positioning_jitter_rms_nm == 20.0
        assert config.build_modality().positioning_jitter_rms == pytest.approx(2e-8)

    def test_sweep_tip_is_converted_to_meters(self):
        config = parse_scene('{"sweep": {"tip_nm": [3.0, -1.5]}}')
        assert config.sweep_tip_m() == pytest.approx((3e-9, -1.5e-9), rel=1e-15)


class TestStrictness:
    @pytest.mark.parametrize("scene,fragment", [
        ('{"unknown_section": {}}', "unknown_section"),
        ('{"sample": {"spin": []}}', "sample.spin"),
        ('{"probe": {"geometry": {"diamter_nm": 1.0}}}', "probe.geometry.diamter_nm"),
        ('{"sweep": {"form": "field"}}', "sweep.form"),
        ('{"sample": {"spins": [{"pos_nm": [0,0,0]}]}}', "sample.spins[0].pos_nm"),
    ])
    def test_unknown_keys_are_rejected_with_path(self, scene, fragment):
        with pytest.raises(SceneUnknownKeyError) as err:
            parse_scene(scene)
        assert err.value.path == fragment

    def test_syntax_error(self):
        with pytest.raises(SceneSyntaxError):
            parse_scene('{"sample": ')

    @pytest.mark.parametrize("scene", [
        '{"sweep": {"start": 0.2, "stop": 0.1}}',
        '{"sweep": {"points": 2}}',
        '{"sweep": {"dwell_time_s": 0.0}}',
        '{"sweep": {"mode": "wavelength"}}',
        '{"sample": {"spins": [{"moment_direction": [0, 0, 0]}]}}',
        '{"sample": {"spins": [{"moment_magnitude_bohr": 0.0}]}}',
        '{"sample": {"bias_field_T": [0, 0]}}',
        '{"probe": {"geometry": {"diameter_nm": 500.0}}}',
        '{"probe": {"geometry": {"standoff_nm": 0.0}}}',
        '{"probe": {"line": {"linewidth_T": -0.1}}}',
        '{"probe": {"scheme": {"radiative_rate": 0.0}}}',
        '{"scan": {"nx": 0}}',
        '{"scan": {"observable": "phase"}}',
        '{"noise": {"rng_seed": -4}}',
        '{"noise": {"photon_rate_scale": 0.0}}',
        '{"modality": {"kind": "drone"}}',
        '{"modality": {"positioning_jitter_rms_nm": -1.0}}',
        '{"sample": {"spins": [{"position_nm": [0,0,0]},'
        ' {"position_nm": [0,0,0]}]}}',
        '{"noise": {"enabled": "yes"}}',
        '{"scan": {"nx": 3.5}}',
    ])
    def test_invariant_violations_raise_scene_errors(self, scene):
        with pytest.raises(SceneInvariantError):
            parse_scene(scene)

    def test_type_errors_carry_paths(self):
        with pytest.raises(SceneInvariantError) as err:
            parse_scene('{"sweep": {"points": "many"}}')
        assert "sweep.points" in str(err.value)


class TestRoundTrip:
    @pytest.mark.parametrize("scene", [
        MINIMAL,
        "{}",
        '{"probe": {"line": {"linewidth_T": "dye_molecule"}},'
        ' "modality": {"kind": "fiber"}}',
        None,  # placeholder: the shipped reference scene, loaded below
    ])
    def test_serialize_then_parse_is_identity(self, scene):
        if scene is None:
            scene = (SCENES_DIR / "single_spin_reference.json").read_text()
        config = parse_scene(scene)
        again = parse_scene(config.to_json())
        assert again == config

    def test_default_construction_round_trips(self):
        config = SceneConfig()
        assert parse_scene(config.to_json()) == config
