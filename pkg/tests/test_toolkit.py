from __future__ import annotations

import base64
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import PNG_PATH, caps, rule, script, scripted_session
from xarp import BoundSession, ErrorCode, HeadPose, ImageFrame, ToolCallError
from xarp.toolkit import CANONICAL_DESCRIPTIONS, canonical_descriptors

pytestmark = pytest.mark.anyio

IDENTITY_POSE = {"position": [0, 0, 0], "orientation": [0, 0, 0, 1]}


class TestWrite:
    async def test_write_acknowledged(self):
        async with scripted_session(script(caps(), rule("write", value=True))) as h:
            ack = await BoundSession(h.session).write("I am listening")
            assert ack is True

    async def test_empty_text_rejected_before_any_frame(self):
        async with scripted_session(script(caps())) as h:
            with pytest.raises(ValueError):
                await BoundSession(h.session).write("")
            sent = [e for e in h.session.transcript.entries if e.direction == "sent"]
            assert all(e.envelope["kind"] != "tool_call" for e in sent if e.envelope)

    async def test_write_without_capability(self):
        async with scripted_session(script(caps("read"))) as h:
            with pytest.raises(ToolCallError) as err:
                await BoundSession(h.session).write("hi")
            assert err.value.code is ErrorCode.TOOL_NOT_SUPPORTED


class TestRead:
    async def test_scripted_answer(self):
        async with scripted_session(script(caps(), rule("read", value="hello"))) as h:
            assert await BoundSession(h.session).read() == "hello"

    async def test_prompt_is_forwarded(self):
        async with scripted_session(script(caps(), rule("read", value="{prompt}"))) as h:
            assert await BoundSession(h.session).read("say hi") == "say hi"
            calls = [
                e.envelope
                for e in h.session.transcript.entries
                if e.envelope and e.envelope["kind"] == "tool_call"
            ]
            assert calls[0]["payload"]["args"] == {"prompt": "say hi"}

    async def test_cancelled_read(self):
        async with scripted_session(script(caps(), rule("read", "cancel"))) as h:
            with pytest.raises(ToolCallError) as err:
                await BoundSession(h.session).read()
            assert err.value.code is ErrorCode.USER_CANCELLED

    async def test_non_string_result_is_client_error(self):
        async with scripted_session(script(caps(), rule("read", value=42))) as h:
            with pytest.raises(ToolCallError) as err:
                await BoundSession(h.session).read()
            assert err.value.code is ErrorCode.CLIENT_ERROR


class TestSee:
    async def test_png_fixture_round_trip(self):
        async with scripted_session(script(caps(), rule("see", value="tiny.png"))) as h:
            frame = await BoundSession(h.session).see()
            assert (frame.mime, frame.width, frame.height) == ("image/png", 2, 2)
            assert frame.decoded_bytes() == PNG_PATH.read_bytes()
            assert frame.decoded_bytes()[:4] == b"\x89PNG"

    async def test_mime_magic_mismatch_is_client_error(self, jpg_b64):
        lying = {
            "mime": "image/png",
            "width": 3,
            "height": 2,
            "data": jpg_b64,
            "captured_at": 1,
        }
        async with scripted_session(script(caps(), rule("see", value=lying))) as h:
            with pytest.raises(ToolCallError) as err:
                await BoundSession(h.session).see()
            assert err.value.code is ErrorCode.CLIENT_ERROR
            assert "magic" in err.value.message

    async def test_see_without_capability(self):
        async with scripted_session(script(caps("read", "write"))) as h:
            with pytest.raises(ToolCallError) as err:
                await BoundSession(h.session).see()
            assert err.value.code is ErrorCode.TOOL_NOT_SUPPORTED


class TestHeadPose:
    async def test_identity_pose(self):
        async with scripted_session(
            script(caps(), rule("head_pose", value=IDENTITY_POSE))
        ) as h:
            pose = await BoundSession(h.session).head_pose()
            assert pose.position == (0, 0, 0)
            assert pose.orientation == (0, 0, 0, 1)

    async def test_norm_two_rejected(self):
        bad = {"position": [0, 0, 0], "orientation": [0, 0, 0, 2]}
        async with scripted_session(script(caps(), rule("head_pose", value=bad))) as h:
            with pytest.raises(ToolCallError) as err:
                await BoundSession(h.session).head_pose()
            assert err.value.code is ErrorCode.CLIENT_ERROR
            assert "norm" in err.value.message

    async def test_quarter_turn_accepted(self):
        # independent arithmetic check of the example quaternion's norm
        q = [0.0, 0.7071068, 0.0, 0.7071068]
        norm = math.sqrt(q[0] ** 2 + q[1] ** 2 + q[2] ** 2 + q[3] ** 2)
        assert abs(norm - 1.0) <= 1e-6
        value = {"position": [1, 1.6, -2], "orientation": q}
        async with scripted_session(script(caps(), rule("head_pose", value=value))) as h:
            pose = await BoundSession(h.session).head_pose()
            assert pose.position == (1, 1.6, -2)


class TestDescriptors:
    async def test_exactly_the_declared_descriptors_in_order(self):
        async with scripted_session(script(caps())) as h:
            descriptors = BoundSession(h.session).as_tool_descriptors()
            assert [d.name for d in descriptors] == ["read", "write", "see", "head_pose"]
            assert [d.description for d in descriptors] == [
                CANONICAL_DESCRIPTIONS[n] for n in ("read", "write", "see", "head_pose")
            ]
            assert descriptors == h.session.capabilities.tools

    async def test_subset_declaration(self):
        async with scripted_session(script(caps("write"))) as h:
            descriptors = BoundSession(h.session).as_tool_descriptors()
            assert [d.name for d in descriptors] == ["write"]

    async def test_stable_across_calls(self):
        async with scripted_session(script(caps())) as h:
            b = BoundSession(h.session)
            assert b.as_tool_descriptors() == b.as_tool_descriptors()


# --- validation-layer properties (no session needed) ---

def test_image_frame_requires_nonempty_base64():
    with pytest.raises(ValueError):
        ImageFrame.from_value(
            {"mime": "image/png", "width": 1, "height": 1, "data": "", "captured_at": 0}
        )
    with pytest.raises(ValueError, match="base64"):
        ImageFrame.from_value(
            {"mime": "image/png", "width": 1, "height": 1, "data": "!!", "captured_at": 0}
        )


def test_image_frame_dimension_bounds(png_b64):
    with pytest.raises(ValueError):
        ImageFrame.from_value(
            {"mime": "image/png", "width": 0, "height": 2, "data": png_b64, "captured_at": 0}
        )


def test_jpeg_magic_accepted(jpg_b64):
    frame = ImageFrame.from_value(
        {"mime": "image/jpeg", "width": 3, "height": 2, "data": jpg_b64, "captured_at": 5}
    )
    assert frame.decoded_bytes()[:2] == b"\xff\xd8"


@given(
    st.lists(
        st.floats(-1.5, 1.5, allow_nan=False, allow_infinity=False), min_size=4, max_size=4
    )
)
@settings(max_examples=300)
def test_pose_accepted_iff_unit_norm(q):
    norm = math.sqrt(sum(c * c for c in q))
    value = {"position": [0.0, 1.0, 2.0], "orientation": q}
    if abs(norm - 1.0) <= 1e-6:
        HeadPose.from_value(value)
    else:
        with pytest.raises(ValueError):
            HeadPose.from_value(value)


@given(st.sampled_from([float("nan"), float("inf"), float("-inf")]), st.integers(0, 2))
def test_pose_rejects_non_finite_positions(bad, index):
    position = [0.0, 0.0, 0.0]
    position[index] = bad
    with pytest.raises(ValueError):
        HeadPose.from_value({"position": position, "orientation": [0, 0, 0, 1]})


def test_canonical_descriptor_schemas():
    by_name = {d.name: d for d in canonical_descriptors()}
    assert by_name["write"].params["text"].required is True
    assert by_name["read"].params["prompt"].required is False
    assert by_name["see"].params == {}
    assert by_name["head_pose"].params == {}
