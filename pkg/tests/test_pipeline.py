import json
import warnings

import numpy as np
import pytest

from evshape.errors import BatchError, ConfigError
from evshape.eventgen import InitMode
from evshape.geometry import ShapeTemplate
from evshape.noise import NoiseConfig
from evshape.pipeline import (
    EVENTS_DTYPE,
    Recording,
    RenderParameters,
    TransformParams,
    generate,
    generate_batch,
)


def moving(seed=0, **over):
    base = dict(
        width=48,
        height=48,
        length=24,
        upsample=4,
        warmup=4,
        seed=seed,
        translate=TransformParams(
            enabled=True, start=(20.0, 24.0), velocity_start=(0.6, 0.2), velocity_delta=0.0
        ),
    )
    base.update(over)
    return RenderParameters(**base)


def test_generate_is_deterministic():
    p = moving(seed=11, noise=NoiseConfig(p_background=0.01, p_shape=0.02, p_event=0.1))
    assert generate(p) == generate(p)


def test_different_seeds_differ():
    a = generate(moving(seed=1, translate=TransformParams(enabled=True)))
    b = generate(moving(seed=2, translate=TransformParams(enabled=True)))
    assert not np.array_equal(a.events, b.events) or a.labels != b.labels


def test_events_table_shape_and_bounds():
    rec = generate(moving())
    assert rec.events.dtype == EVENTS_DTYPE
    if len(rec.events):
        assert rec.events["x"].max() < 48
        assert rec.events["y"].max() < 48
        assert rec.events["t"].max() < 24
        assert set(np.unique(rec.events["p"]).tolist()) <= {-1, 1}


def test_events_sorted_canonically():
    rec = generate(moving(noise=NoiseConfig(p_background=0.05)))
    e = rec.events
    order = np.lexsort((e["p"], e["x"], e["y"], e["t"]))
    assert np.array_equal(order, np.arange(len(e)))


def test_labels_cover_every_frame():
    rec = generate(moving(length=17))
    assert [l.t for l in rec.labels] == list(range(17))
    assert all(l.shape == "square" for l in rec.labels)


def test_labels_track_constant_velocity():
    # semi-implicit with zero acceleration: tx_n = start + v * (warmup + n + 1)
    rec = generate(moving(warmup=3))
    for i, lab in enumerate(rec.labels):
        assert lab.tx == pytest.approx(20.0 + 0.6 * (3 + i + 1))
        assert lab.vtx == pytest.approx(0.6)


def test_explicit_start_is_respected_even_when_disabled():
    p = RenderParameters(
        width=32, height=32, length=2, warmup=0, upsample=2,
        translate=TransformParams(enabled=False, start=(10.0, 12.0)),
        noise=NoiseConfig(p_background=0.01),
    )
    rec = generate(p)
    assert rec.labels[0].tx == 10.0
    assert rec.labels[0].ty == 12.0


def test_unset_start_samples_central_half():
    for seed in range(12):
        p = RenderParameters(
            width=64, height=32, length=1, warmup=0, upsample=1, seed=seed,
            noise=NoiseConfig(p_background=0.01),
        )
        rec = generate(p)
        assert 16.0 <= rec.labels[0].tx < 48.0
        assert 8.0 <= rec.labels[0].ty < 24.0


def test_static_scene_has_no_events():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for mode in (InitMode.ZEROS, InitMode.UNIFORM):
            rec = generate(
                RenderParameters(width=32, height=32, length=8, warmup=0,
                                 seed=5, integrator_init=mode)
            )
            assert rec.event_count == 0


def test_static_config_warns():
    with pytest.warns(UserWarning):
        generate(RenderParameters(width=32, height=32, length=1, warmup=0))


def test_custom_acceleration_callable():
    p = RenderParameters(
        width=64, height=64, length=8, warmup=0, upsample=2, seed=0,
        translate=TransformParams(
            enabled=True, start=(10.0, 30.0), velocity_delta=lambda t, rng: (0.1, 0.0)
        ),
    )
    rec = generate(p)
    for i, lab in enumerate(rec.labels):
        n = i + 1
        assert lab.tx == pytest.approx(10.0 + 0.1 * n * (n + 1) / 2)
        assert lab.ty == pytest.approx(30.0)


def test_resolved_threshold_default():
    assert RenderParameters(upsample=8).resolved_threshold == 64.0
    assert RenderParameters(upsample=8, threshold=5.0).resolved_threshold == 5.0


# --- validation ---


@pytest.mark.parametrize(
    "over",
    [
        dict(width=4),
        dict(height=7),
        dict(length=0),
        dict(upsample=0),
        dict(warmup=-1),
        dict(threshold=0.0),
        dict(threshold=-3.0),
        dict(base_size=0.0),
        dict(seed=-1),
        dict(seed=2**64),
        dict(translate=TransformParams(start=3.0)),
        dict(rotate=TransformParams(start=(1.0, 2.0))),
        dict(scale=TransformParams(start=(0.0, 1.0))),
        dict(shear=TransformParams(velocity_delta=-0.5)),
        dict(rotate=TransformParams(velocity_delta="fast")),
    ],
)
def test_validate_rejects(over):
    p = RenderParameters(**over)
    assert p.validate()
    with pytest.raises(ConfigError):
        generate(p)


def test_validate_clean_config():
    assert moving().validate() == []


def test_validate_reports_all_problems_at_once():
    p = RenderParameters(width=2, length=0, upsample=0)
    msgs = p.validate()
    assert len(msgs) >= 3


# --- serialization ---


def test_dict_round_trip():
    p = moving(
        seed=99,
        shape=ShapeTemplate.TRIANGLE,
        threshold=12.5,
        noise=NoiseConfig(p_background=0.01, p_shape=0.05, p_event=0.2),
        integrator_init=InitMode.ZEROS,
        rotate=TransformParams(enabled=True, start=0.3, velocity_start=0.01),
    )
    doc = json.loads(json.dumps(p.to_dict()))
    assert RenderParameters.from_dict(doc) == p


def test_from_dict_defaults():
    p = RenderParameters.from_dict({})
    assert p == RenderParameters()


def test_from_dict_rejects_unknown_top_level_key():
    with pytest.raises(ConfigError, match="wdith"):
        RenderParameters.from_dict({"wdith": 32})


def test_from_dict_rejects_unknown_block_key():
    with pytest.raises(ConfigError, match="velocty"):
        RenderParameters.from_dict({"translate": {"enabled": True, "velocty": 1}})


def test_from_dict_rejects_unknown_noise_key():
    with pytest.raises(ConfigError, match="p_bg"):
        RenderParameters.from_dict({"noise": {"p_bg": 0.1}})


def test_from_dict_rejects_bad_enum():
    with pytest.raises(ConfigError, match="pentagon"):
        RenderParameters.from_dict({"shape": "pentagon"})
    with pytest.raises(ConfigError, match="integrator_init"):
        RenderParameters.from_dict({"integrator_init": "gauss"})


def test_to_dict_marks_callables_as_custom():
    p = RenderParameters(
        translate=TransformParams(enabled=True, velocity_delta=lambda t, r: (0, 0))
    )
    assert p.to_dict()["translate"]["velocity_delta"] == "custom"


def test_custom_marker_cannot_be_rehydrated():
    doc = {"translate": {"enabled": True, "velocity_delta": "custom"}}
    p = RenderParameters.from_dict(doc)
    with pytest.raises(ConfigError):
        generate(p)


# --- batch ---


def test_batch_order_and_equivalence():
    configs = [moving(seed=s) for s in (3, 4, 5)]
    seq = generate_batch(configs, parallelism=1)
    par = generate_batch(configs, parallelism=8)
    assert seq == par
    for rec, cfg in zip(seq, configs):
        assert rec.params.seed == cfg.seed
        assert rec == generate(cfg)


def test_batch_empty():
    assert generate_batch([]) == []


def test_batch_collects_failures():
    configs = [moving(seed=1), moving(width=3), moving(seed=2)]
    with pytest.raises(BatchError) as exc_info:
        generate_batch(configs, parallelism=4)
    err = exc_info.value
    assert set(err.failures) == {1}
    assert isinstance(err.failures[1], ConfigError)
    assert set(err.results) == {0, 2}
    assert err.results[0] == generate(configs[0])


def test_recording_equality_notices_event_changes():
    rec = generate(moving())
    other = Recording(rec.params, rec.events.copy(), list(rec.labels))
    assert rec == other
    if len(other.events):
        other.events["x"][0] += 1
        assert rec != other


def test_frame_events_helper():
    rec = generate(moving())
    sliced = rec.frame_events(0)
    assert np.array_equal(sliced, rec.events[rec.events["t"] == 0])
