"""High-level typed tool API over a Ready session.

Four wrappers — read, write, see, head_pose — validate results before
returning them, plus descriptor export for agent frameworks.  Wire pose
convention: right-handed, +Y up, -Z forward, meters, quaternion order
[qx, qy, qz, qw].
"""

from __future__ import annotations

import base64
import binascii
import math
from dataclasses import dataclass
from typing import Any

from .protocol import Capabilities, ErrorCode, ParamSpec, ReturnSpec, ToolDescriptor
from .session import CallOutcome, Session

PNG_MAGIC = b"\x89PNG"
JPEG_MAGIC = b"\xff\xd8"
_MAGIC_BY_MIME = {"image/png": PNG_MAGIC, "image/jpeg": JPEG_MAGIC}

POSE_NORM_TOLERANCE = 1e-6

CANONICAL_DESCRIPTIONS = {
    "read": "Requests a text input from the user.",
    "write": "Displays text to the user.",
    "see": "Captures an RGB frame from the XR device.",
    "head_pose": "Provides the position and orientation of the XR device.",
}


def canonical_descriptors(
    names: tuple[str, ...] = ("read", "write", "see", "head_pose"),
) -> list[ToolDescriptor]:
    """The stock tool schemas used verbatim by the sim and web clients."""
    catalogue = {
        "read": ToolDescriptor(
            name="read",
            description=CANONICAL_DESCRIPTIONS["read"],
            params={
                "prompt": ParamSpec(
                    type="string",
                    description="Optional prompt shown next to the input affordance.",
                    required=False,
                )
            },
            returns=ReturnSpec(type="string", description="The user-entered text, verbatim."),
        ),
        "write": ToolDescriptor(
            name="write",
            description=CANONICAL_DESCRIPTIONS["write"],
            params={
                "text": ParamSpec(
                    type="string",
                    description="The text to display.",
                    required=True,
                )
            },
            returns=ReturnSpec(type="boolean", description="True once the text is displayed."),
        ),
        "see": ToolDescriptor(
            name="see",
            description=CANONICAL_DESCRIPTIONS["see"],
            returns=ReturnSpec(
                type="object",
                description="Captured frame: mime, width, height, base64 data, captured_at.",
            ),
        ),
        "head_pose": ToolDescriptor(
            name="head_pose",
            description=CANONICAL_DESCRIPTIONS["head_pose"],
            returns=ReturnSpec(
                type="object",
                description="position [x,y,z] in meters and orientation [qx,qy,qz,qw].",
            ),
        ),
    }
    return [catalogue[n] for n in names]


def canonical_capabilities(
    client_id: str,
    platform: str,
    names: tuple[str, ...] = ("read", "write", "see", "head_pose"),
) -> Capabilities:
    from .protocol import PROTOCOL_VERSION

    return Capabilities(
        protocol_version=PROTOCOL_VERSION,
        client_id=client_id,
        platform=platform,
        tools=canonical_descriptors(names),
    )


class ToolCallError(Exception):
    """A tool call failed; carries the wire-level error code."""

    def __init__(self, code: ErrorCode, message: str):
        super().__init__(f"{code.value}: {message}")
        self.code = code
        self.message = message


@dataclass
class ImageFrame:
    """One captured RGB frame with encoding metadata."""

    mime: str
    width: int
    height: int
    data: str
    captured_at: int = 0

    def decoded_bytes(self) -> bytes:
        return base64.b64decode(self.data, validate=True)

    @classmethod
    def from_value(cls, value: Any) -> "ImageFrame":
        """Build and validate a frame from a tool-result value.

        Raises ValueError on any invariant violation (bad mime, empty data,
        magic-number mismatch).
        """
        if not isinstance(value, dict):
            raise ValueError("image result must be an object")
        mime = value.get("mime")
        if mime not in _MAGIC_BY_MIME:
            raise ValueError(f"unsupported mime {mime!r}")
        width, height = value.get("width"), value.get("height")
        if not isinstance(width, int) or not isinstance(height, int):
            raise ValueError("width and height must be integers")
        if width < 1 or height < 1:
            raise ValueError("width and height must be >= 1")
        data = value.get("data")
        if not isinstance(data, str):
            raise ValueError("data must be a base64 string")
        try:
            raw = base64.b64decode(data, validate=True)
        except (binascii.Error, ValueError) as exc:
            raise ValueError(f"data is not valid base64: {exc}") from exc
        if not raw:
            raise ValueError("data decodes to an empty byte sequence")
        magic = _MAGIC_BY_MIME[mime]
        if not raw.startswith(magic):
            raise ValueError(f"decoded bytes do not match {mime} magic number")
        captured_at = value.get("captured_at", 0)
        if not isinstance(captured_at, int):
            raise ValueError("captured_at must be unix milliseconds")
        return cls(mime=mime, width=width, height=height, data=data, captured_at=captured_at)

    def to_value(self) -> dict[str, Any]:
        return {
            "mime": self.mime,
            "width": self.width,
            "height": self.height,
            "data": self.data,
            "captured_at": self.captured_at,
        }


@dataclass
class HeadPose:
    """HMD position in meters plus a unit quaternion [qx, qy, qz, qw]."""

    position: tuple[float, float, float]
    orientation: tuple[float, float, float, float]

    @classmethod
    def from_value(cls, value: Any) -> "HeadPose":
        if not isinstance(value, dict):
            raise ValueError("pose result must be an object")
        position = value.get("position")
        orientation = value.get("orientation")
        if not _is_number_seq(position, 3):
            raise ValueError("position must be [x, y, z]")
        if not _is_number_seq(orientation, 4):
            raise ValueError("orientation must be [qx, qy, qz, qw]")
        pos = tuple(float(v) for v in position)
        quat = tuple(float(v) for v in orientation)
        if not all(math.isfinite(v) for v in pos + quat):
            raise ValueError("pose components must be finite")
        norm = math.sqrt(sum(c * c for c in quat))
        if abs(norm - 1.0) > POSE_NORM_TOLERANCE:
            raise ValueError(f"quaternion norm {norm} deviates from 1 by more than 1e-6")
        return cls(position=pos, orientation=quat)  # type: ignore[arg-type]

    def to_value(self) -> dict[str, Any]:
        return {
            "position": list(self.position),
            "orientation": list(self.orientation),
        }


def _is_number_seq(value: Any, length: int) -> bool:
    return (
        isinstance(value, (list, tuple))
        and len(value) == length
        and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)
    )


class BoundSession:
    """Per-tool defaults bound to a Ready session; all wrappers fail fast
    with TOOL_NOT_SUPPORTED when the capability is absent."""

    def __init__(
        self,
        session: Session,
        *,
        read_timeout_s: float | None = None,
        tool_timeout_s: float | None = None,
    ):
        self.session = session
        self.read_timeout_s = (
            read_timeout_s if read_timeout_s is not None else session.config.read_timeout_s
        )
        self.tool_timeout_s = (
            tool_timeout_s if tool_timeout_s is not None else session.config.default_timeout_s
        )

    def _unwrap(self, outcome: CallOutcome) -> Any:
        if not outcome.ok:
            assert outcome.code is not None
            raise ToolCallError(outcome.code, outcome.message)
        return outcome.value

    async def write(self, text: str, *, timeout: float | None = None) -> Any:
        """Display text to the user; returns the client's acknowledgment."""
        if not text:
            raise ValueError("write text must be non-empty")
        outcome = await self.session.call_tool(
            "write", {"text": text}, timeout=timeout or self.tool_timeout_s
        )
        return self._unwrap(outcome)

    async def read(
        self, prompt: str | None = None, *, timeout: float | None = None
    ) -> str:
        """Request text input from the user; empty submissions come back as ""."""
        args: dict[str, Any] = {}
        if prompt is not None:
            args["prompt"] = prompt
        outcome = await self.session.call_tool(
            "read", args, timeout=timeout or self.read_timeout_s
        )
        value = self._unwrap(outcome)
        if not isinstance(value, str):
            raise ToolCallError(
                ErrorCode.CLIENT_ERROR, f"read result must be a string, got {type(value).__name__}"
            )
        return value

    async def see(self, *, timeout: float | None = None) -> ImageFrame:
        """Capture one RGB frame; the frame is validated before it is returned."""
        outcome = await self.session.call_tool(
            "see", {}, timeout=timeout or self.tool_timeout_s
        )
        value = self._unwrap(outcome)
        try:
            return ImageFrame.from_value(value)
        except ValueError as exc:
            raise ToolCallError(ErrorCode.CLIENT_ERROR, f"invalid image frame: {exc}") from exc

    async def head_pose(self, *, timeout: float | None = None) -> HeadPose:
        """Current HMD pose; rejects non-unit quaternions and non-finite values."""
        outcome = await self.session.call_tool(
            "head_pose", {}, timeout=timeout or self.tool_timeout_s
        )
        value = self._unwrap(outcome)
        try:
            return HeadPose.from_value(value)
        except ValueError as exc:
            raise ToolCallError(ErrorCode.CLIENT_ERROR, f"invalid head pose: {exc}") from exc

    def as_tool_descriptors(self) -> list[ToolDescriptor]:
        """Exactly the descriptors the client declared, in declaration order."""
        if self.session.capabilities is None:
            return []
        return list(self.session.capabilities.tools)
