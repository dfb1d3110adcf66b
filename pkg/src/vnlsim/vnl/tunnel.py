"""ILCTR/OLCTR encapsulation for transit between NetInf and non-NetInf realms."""
from __future__ import annotations

from dataclasses import dataclass

from ..naming import Locator, PathLocator, decode_path_locator, encode_path_locator


class MalformedPacket(ValueError):
    pass


@dataclass(frozen=True)
class NetInfRequest:
    object_id: str
    payload_ref: str = ""


@dataclass(frozen=True)
class TunneledPacket:
    outer_locator: Locator
    inner: NetInfRequest

    def encode(self) -> bytes:
        outer = self.outer_locator
        if isinstance(outer, PathLocator):
            head = "P " + encode_path_locator(outer.core_prefix, outer.edge_ids)
        else:
            head = "F " + outer
        return "\n".join([head, self.inner.object_id, self.inner.payload_ref]).encode()

    @classmethod
    def decode(cls, data: bytes) -> "TunneledPacket":
        try:
            head, oid, payload = data.decode().split("\n")
        except (UnicodeDecodeError, ValueError):
            raise MalformedPacket("truncated or corrupt tunnel packet") from None
        tag, _, loc = head.partition(" ")
        if not oid or not loc or tag not in ("P", "F"):
            raise MalformedPacket(f"bad tunnel header {head!r}")
        if tag == "P":
            try:
                outer: Locator = decode_path_locator(loc)
            except ValueError as exc:
                raise MalformedPacket(str(exc)) from None
        else:
            outer = loc
        return cls(outer, NetInfRequest(oid, payload))


def ilctr_wrap(request: NetInfRequest, outer: Locator) -> TunneledPacket:
    if not outer:
        raise ValueError("outer locator must be non-empty")
    return TunneledPacket(outer, request)


def olctr_unwrap(pkt: TunneledPacket | bytes) -> NetInfRequest:
    if isinstance(pkt, (bytes, bytearray)):
        pkt = TunneledPacket.decode(bytes(pkt))
    if not isinstance(pkt, TunneledPacket) or not isinstance(pkt.inner, NetInfRequest):
        raise MalformedPacket(f"not a tunneled packet: {pkt!r}")
    if not pkt.inner.object_id:
        raise MalformedPacket("inner request lacks an object id")
    return pkt.inner
