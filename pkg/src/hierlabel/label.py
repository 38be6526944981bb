"""Hierarchical labels and their pseudo-MAC encoding.

A label is the ordered list of node IDs on a path from a gateway root to the
node that owns it.  Labels are written in dotted notation (``1.2.4.3``).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

MAC_OCTETS = 6
MIN_ID = 1
MAX_ID = 255


class LabelError(ValueError):
    pass


class DuplicateHop(LabelError):
    """Appending the ID would revisit a node already on the label."""


class LabelOverflow(LabelError):
    """Label is deeper than the six octets of a MAC address field."""


class MalformedField(LabelError):
    pass


def check_node_id(value: int) -> int:
    # IDs above MAX_ID are legal in simulation; they just cannot go into a MAC field
    if isinstance(value, bool) or not isinstance(value, int):
        raise LabelError(f"node id must be an int, got {value!r}")
    if value < MIN_ID:
        raise LabelError(f"node id {value} below {MIN_ID}")
    return value


def fits_mac(hops: Sequence[int]) -> bool:
    return len(hops) <= MAC_OCTETS and all(h <= MAX_ID for h in hops)


@dataclass(frozen=True, order=True)
class Label:
    hops: tuple[int, ...]

    def __post_init__(self):
        hops = tuple(self.hops)
        if not hops:
            raise LabelError("label must contain at least one hop")
        for h in hops:
            check_node_id(h)
        if len(set(hops)) != len(hops):
            raise DuplicateHop(f"repeated node id in {'.'.join(map(str, hops))}")
        object.__setattr__(self, "hops", hops)

    @classmethod
    def of(cls, *hops: int) -> "Label":
        return cls(tuple(hops))

    @classmethod
    def parse(cls, text: str) -> "Label":
        try:
            return cls(tuple(int(part) for part in text.strip().split(".")))
        except ValueError as exc:
            if isinstance(exc, LabelError):
                raise
            raise LabelError(f"cannot parse label {text!r}") from None

    @property
    def root(self) -> int:
        return self.hops[0]

    @property
    def owner(self) -> int:
        return self.hops[-1]

    def __len__(self) -> int:
        return len(self.hops)

    def __contains__(self, node_id: object) -> bool:
        return node_id in self.hops

    def __iter__(self):
        return iter(self.hops)

    def __str__(self) -> str:
        return ".".join(str(h) for h in self.hops)

    def __repr__(self) -> str:
        return f"Label({self})"


def append_hop(label: Label, node_id: int) -> Label:
    """Return ``label`` extended by ``node_id``.

    Raises DuplicateHop when the ID is already on the label; callers treat
    that as a discard.
    """
    check_node_id(node_id)
    if node_id in label.hops:
        raise DuplicateHop(f"{node_id} already on {label}")
    return Label(label.hops + (node_id,))


def is_prefix(a: Label | Sequence[int], b: Label | Sequence[int]) -> bool:
    # equality counts as a prefix, so re-deliveries are caught by the same rule
    a_hops = a.hops if isinstance(a, Label) else tuple(a)
    b_hops = b.hops if isinstance(b, Label) else tuple(b)
    return len(a_hops) <= len(b_hops) and b_hops[: len(a_hops)] == a_hops


def hop_count(label: Label) -> int:
    return len(label.hops) - 1


def links(label: Label) -> list[tuple[int, int]]:
    """Consecutive (upstream, downstream) pairs along the label."""
    return list(zip(label.hops, label.hops[1:]))


def encode_mac(label: Label) -> bytes:
    if len(label.hops) > MAC_OCTETS:
        raise LabelOverflow(
            f"label {label} has {len(label.hops)} hops, field holds {MAC_OCTETS}"
        )
    if any(h > MAX_ID for h in label.hops):
        raise LabelOverflow(f"label {label} has a node id above {MAX_ID}")
    return bytes(label.hops) + bytes(MAC_OCTETS - len(label.hops))


def decode_mac(field: bytes | Iterable[int]) -> Label:
    raw = bytes(field)
    if len(raw) != MAC_OCTETS:
        raise MalformedField(f"expected {MAC_OCTETS} octets, got {len(raw)}")
    hops = []
    padding = False
    for octet in raw:
        if octet == 0:
            padding = True
        elif padding:
            raise MalformedField(f"non-zero octet after padding in {format_mac(raw)}")
        else:
            hops.append(octet)
    if not hops:
        raise MalformedField("empty field encodes no label")
    try:
        return Label(tuple(hops))
    except DuplicateHop as exc:
        raise MalformedField(str(exc)) from None


def format_mac(field: bytes) -> str:
    return ":".join(f"{b:02x}" for b in field)


def parse_mac(text: str) -> bytes:
    try:
        raw = bytes(int(part, 16) for part in text.split(":"))
    except ValueError:
        raise MalformedField(f"cannot parse MAC field {text!r}") from None
    if len(raw) != MAC_OCTETS:
        raise MalformedField(f"expected {MAC_OCTETS} octets in {text!r}")
    return raw
