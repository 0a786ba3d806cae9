"""Protocol registry."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Any, Callable

from ..errors import ConfigError
from .baseline import BaselineClient, BaselineServer
from .harary import ClientGraph, HararyGraph, harary, harary_neighbors
from .masking import BellServer, BonawitzServer, MaskingClient, MaskingParams
from .secret_sharing import SecretSharingClient, SecretSharingParams, SecretSharingServer
from .stevens import StevensClient, StevensParams, StevensServer


@dataclass(frozen=True)
class Protocol:
    name: str
    client: type
    server: type
    params: Callable[..., Any] | None = None
    defaults: dict = dataclasses.field(default_factory=dict)

    @property
    def param_names(self) -> set[str]:
        if self.params is None:
            return set()
        return {f.name for f in dataclasses.fields(self.params)}

    def make_params(self, delta: float = 0.0, **overrides):
        """Build the parameter object, ignoring keys this protocol does not take."""
        if self.params is None:
            return None
        names = self.param_names
        kwargs = dict(self.defaults)
        kwargs.update({k: v for k, v in overrides.items() if k in names and v is not None})
        if "delta" in names:
            kwargs["delta"] = delta
        return self.params(**kwargs)


PROTOCOLS: dict[str, Protocol] = {
    "baseline": Protocol("baseline", BaselineClient, BaselineServer),
    "secret_sharing": Protocol("secret_sharing", SecretSharingClient, SecretSharingServer, SecretSharingParams),
    "stevens": Protocol("stevens", StevensClient, StevensServer, StevensParams, {"pack_k": 16}),
    "stevens_unpacked": Protocol("stevens_unpacked", StevensClient, StevensServer, StevensParams, {"pack_k": 1}),
    "bonawitz": Protocol("bonawitz", MaskingClient, BonawitzServer, MaskingParams),
    "bell": Protocol("bell", MaskingClient, BellServer, MaskingParams),
}


def get_protocol(name: str) -> Protocol:
    try:
        return PROTOCOLS[name]
    except KeyError:
        raise ConfigError(f"unknown protocol {name!r}; choose from {sorted(PROTOCOLS)}") from None


def known_param_names() -> set[str]:
    return set().union(*(p.param_names for p in PROTOCOLS.values())) - {"delta"}


__all__ = [
    "PROTOCOLS",
    "Protocol",
    "get_protocol",
    "known_param_names",
    "ClientGraph",
    "HararyGraph",
    "harary",
    "harary_neighbors",
    "MaskingParams",
    "SecretSharingParams",
    "StevensParams",
]
