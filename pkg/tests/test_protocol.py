import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trocardock.protocol import (
    PROTOCOL_VERSION,
    ErrorMessage,
    PedalFrame,
    ProtocolError,
    SceneInfo,
    StateSnapshot,
    TrialControl,
    decode,
    encode,
)

finite = st.floats(allow_nan=False, allow_infinity=False, width=32)


def snapshot_strategy():
    return st.builds(
        StateSnapshot,
        session_id=st.text(min_size=1, max_size=12, alphabet="abcdef0123456789"),
        tick=st.integers(0, 10**6),
        time=finite,
        q=st.lists(finite, min_size=7, max_size=7),
        link_points=st.lists(st.lists(finite, min_size=3, max_size=3), max_size=9),
        tip_pose=st.fixed_dictionaries(
            {
                "rotation": st.just([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]),
                "translation": st.lists(finite, min_size=3, max_size=3),
            }
        ),
        mode=st.sampled_from(["hold", "co_manipulation", "teleop_translational", "teleop_rotational"]),
        tep=st.fixed_dictionaries({"lateral": finite, "axial": finite, "angle": finite}),
        docking=st.sampled_from(["away", "aligned", "docked"]),
        extrusion=finite,
        events=st.lists(
            st.fixed_dictionaries({"tick": st.integers(0, 100), "time": finite, "type": st.just("limit")}),
            max_size=3,
        ),
        camera_overlay=st.one_of(
            st.none(),
            st.fixed_dictionaries({"tep": st.one_of(st.none(), st.lists(finite, min_size=2, max_size=2)),
                                   "tool": st.one_of(st.none(), st.lists(finite, min_size=2, max_size=2))}),
        ),
        trial=st.one_of(
            st.none(),
            st.fixed_dictionaries({"task_id": st.sampled_from([1, 2, 3]), "seed": st.integers(0, 99),
                                   "running": st.booleans(), "participant_id": st.just("p")}),
        ),
        record=st.none(),
    )


def pedal_strategy():
    return st.builds(
        PedalFrame,
        session_id=st.text(min_size=1, max_size=12, alphabet="abcdef0123456789"),
        t_client=finite,
        buttons=st.lists(st.booleans(), min_size=4, max_size=4),
        joystick=st.lists(st.floats(-1, 1, allow_nan=False, width=32), min_size=2, max_size=2),
        rocker=st.floats(-1, 1, allow_nan=False, width=32),
    )


def control_strategy():
    start = st.builds(
        TrialControl,
        session_id=st.just("s"),
        action=st.just("start"),
        task_id=st.sampled_from([1, 2, 3]),
        seed=st.integers(0, 1000),
        participant_id=st.one_of(st.none(), st.just("p1")),
    )
    abort = st.builds(TrialControl, session_id=st.just("s"), action=st.sampled_from(["abort", "reset"]))
    tlx = st.builds(
        TrialControl,
        session_id=st.just("s"),
        action=st.just("submit_tlx"),
        tlx=st.fixed_dictionaries(
            {
                "participant_id": st.just("p"),
                "task_id": st.sampled_from([1, 2, 3]),
                "mental": st.floats(0, 100, allow_nan=False),
                "physical": st.floats(0, 100, allow_nan=False),
                "temporal": st.floats(0, 100, allow_nan=False),
                "performance": st.floats(0, 100, allow_nan=False),
                "effort": st.floats(0, 100, allow_nan=False),
                "frustration": st.floats(0, 100, allow_nan=False),
            }
        ),
    )
    inset = st.builds(
        TrialControl,
        session_id=st.just("s"),
        action=st.just("camera_inset"),
        visible=st.booleans(),
        at_time=st.one_of(st.none(), st.floats(0, 120, allow_nan=False)),
    )
    return st.one_of(start, abort, tlx, inset)


@settings(max_examples=200, deadline=None)
@given(msg=st.one_of(snapshot_strategy(), pedal_strategy(), control_strategy()))
def test_wire_round_trip(msg):
    assert decode(encode(msg)) == msg


def test_error_round_trip():
    e = ErrorMessage(session_id="abc", code="busy", message="another session is active")
    assert decode(encode(e)) == e


def test_scene_info_round_trip():
    s = SceneInfo(
        session_id="abc",
        globe_center=[0.9, 0.0, 0.35],
        globe_radius=0.012,
        cornea_axis=[0.0, 0.0, 1.0],
        cornea_half_angle=0.5,
        tep_pose={"rotation": [[1, 0, 0], [0, 1, 0], [0, 0, 1]], "translation": [0, 0, 0]},
        lumen_inner_diameter=0.001,
        lumen_length=0.004,
        rod_diameter=0.0005,
        shaft_length=0.04,
        image_size=[320, 240],
    )
    assert decode(encode(s)) == s


def test_decode_rejects_bad_json():
    with pytest.raises(ProtocolError):
        decode("{not json")


def test_decode_rejects_unknown_type():
    with pytest.raises(ProtocolError):
        decode('{"type": "nope", "protocol_version": "1", "session_id": "x"}')


def test_decode_rejects_wrong_version():
    with pytest.raises(ProtocolError):
        decode('{"type": "pedal_frame", "protocol_version": "0", "session_id": "x", '
               '"t_client": 0, "buttons": [false,false,false,false], "joystick": [0,0], "rocker": 0}')


def test_pedal_frame_needs_four_buttons():
    with pytest.raises(ProtocolError):
        PedalFrame(session_id="x", t_client=0.0, buttons=[True], joystick=[0, 0], rocker=0.0)


def test_start_requires_task_and_seed():
    with pytest.raises(ProtocolError):
        TrialControl(session_id="x", action="start")


def test_version_constant():
    assert PROTOCOL_VERSION == "1"
