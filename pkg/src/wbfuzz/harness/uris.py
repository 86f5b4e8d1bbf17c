"""Strict RFC 3986 URI recognizer used by the tracked uri/url parse ops."""

from __future__ import annotations

import re
from urllib.parse import SplitResult, urlsplit

_UNRESERVED = r"A-Za-z0-9\-._~"
_SUB_DELIMS = r"!$&'()*+,;="
_PCT = r"%[0-9A-Fa-f]{2}"
_PCHAR = rf"(?:[{_UNRESERVED}{_SUB_DELIMS}:@]|{_PCT})"
_DEC_OCTET = r"(?:25[0-5]|2[0-4][0-9]|1[0-9]{2}|[1-9]?[0-9])"
_IPV4 = rf"{_DEC_OCTET}\.{_DEC_OCTET}\.{_DEC_OCTET}\.{_DEC_OCTET}"
_REG_NAME = rf"(?:[{_UNRESERVED}{_SUB_DELIMS}]|{_PCT})*"
_HOST = rf"(?:\[[0-9A-Fa-f:.]+\]|{_IPV4}|{_REG_NAME})"
_USERINFO = rf"(?:[{_UNRESERVED}{_SUB_DELIMS}:]|{_PCT})*"
_AUTHORITY = rf"(?:{_USERINFO}@)?{_HOST}(?::[0-9]*)?"
_SEGMENT = rf"{_PCHAR}*"
_SEGMENT_NZ = rf"{_PCHAR}+"
_PATH_ABEMPTY = rf"(?:/{_SEGMENT})*"
_PATH_ABSOLUTE = rf"/(?:{_SEGMENT_NZ}(?:/{_SEGMENT})*)?"
_PATH_ROOTLESS = rf"{_SEGMENT_NZ}(?:/{_SEGMENT})*"
_HIER = rf"(?://{_AUTHORITY}{_PATH_ABEMPTY}|{_PATH_ABSOLUTE}|{_PATH_ROOTLESS}|)"
_QF = rf"(?:{_PCHAR}|[/?])*"
URI_RE = re.compile(rf"[A-Za-z][A-Za-z0-9+\-.]*:{_HIER}(?:\?{_QF})?(?:#{_QF})?")

URL_SCHEMES = ("http", "https", "ftp", "file")


class UriSyntaxError(ValueError):
    pass


def parse_uri(s: str) -> SplitResult:
    if not isinstance(s, str) or URI_RE.fullmatch(s) is None:
        raise UriSyntaxError(f"invalid URI: {s!r}")
    return urlsplit(s)


def parse_url(s: str) -> SplitResult:
    parts = parse_uri(s)
    if parts.scheme.lower() not in URL_SCHEMES:
        raise UriSyntaxError(f"unknown protocol: {parts.scheme}")
    if parts.scheme.lower() != "file" and not parts.hostname:
        raise UriSyntaxError(f"missing host: {s!r}")
    return parts


def uri_distance(s: str) -> float:
    """Rough distance to a syntactically valid URI: count of offending chars."""
    if not isinstance(s, str):
        return 1.0
    if URI_RE.fullmatch(s):
        return 0.0
    d = 0.0
    m = re.match(r"[A-Za-z][A-Za-z0-9+\-.]*:", s)
    if not m:
        d += 1.0
    allowed = set(_UNRESERVED.replace("\\", "") + _SUB_DELIMS + ":@/?#%") | set(
        "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789")
    d += sum(1 for c in s if c not in allowed)
    return max(d, 1.0)
