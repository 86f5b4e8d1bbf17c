"""Embedded services the fuzzer can be pointed at, by name."""

from typing import Callable

from ..harness import SutDescriptor
from . import appsession, clockwork, collections, hiddenparams, stringops, validbeans

REGISTRY: dict[str, Callable[[], SutDescriptor]] = {
    "validbeans": validbeans.descriptor,
    "hiddenparams": hiddenparams.descriptor,
    "appsession": appsession.descriptor,
    "stringops": stringops.descriptor,
    "clockwork": clockwork.descriptor,
    "collections": collections.descriptor,
}


class UnknownSutError(LookupError):
    pass


def get_sut(name: str) -> SutDescriptor:
    try:
        return REGISTRY[name]()
    except KeyError:
        raise UnknownSutError(f"unknown SUT {name!r}; available: {', '.join(REGISTRY)}") from None
