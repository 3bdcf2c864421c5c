"""Query builder and response parser for the GDELT Doc 2.0 article-list API.

The HTTP transport is injected so tests (and CI) run entirely against
recorded fixtures; :class:`RequestsTransport` is the real-network default.
A shared token-bucket limiter throttles live calls (default 1 request/s).
"""
from __future__ import annotations

import calendar
import json
import threading
import time
from dataclasses import dataclass, field
from datetime import date, datetime
from pathlib import Path
from typing import Callable, Protocol

from .catalog import Company

__all__ = [
    "GDELT_ENDPOINT",
    "DEFAULT_COMBINATION",
    "GdeltQuery",
    "GdeltHit",
    "TransportError",
    "RateLimitedError",
    "MalformedResponseError",
    "TokenBucket",
    "RequestsTransport",
    "build_company_query",
    "query_string",
    "query_params",
    "fetch",
]

GDELT_ENDPOINT = "https://api.gdeltproject.org/api/v2/doc/doc"
MAX_RECORDS_LIMIT = 250

# How the five keywords are combined into one search expression.  The tokens
# name_short / name_long / environmental / social / governance are substituted
# with the (quoted) keyword values; OR survives verbatim, AND renders as the
# API's implicit-AND space.
DEFAULT_COMBINATION = "(name_short OR name_long) AND (environmental OR social OR governance)"

_KEYWORD_ROLES = ("name_short", "name_long", "environmental", "social", "governance")


class TransportError(RuntimeError):
    """Network-level failure; retried with exponential backoff."""


class RateLimitedError(RuntimeError):
    """Server signalled rate limiting (HTTP 429); caller should back off."""


class MalformedResponseError(ValueError):
    """Response body is not the expected article-list JSON."""


@dataclass(frozen=True)
class GdeltQuery:
    start_date: date
    end_date: date
    keywords: tuple[str, ...]
    repeat: tuple[str, int] | None = None
    domain: str | None = None
    country: str | None = None
    theme: str | None = None
    near: str | None = None
    max_records: int = MAX_RECORDS_LIMIT

    def __post_init__(self) -> None:
        if self.start_date > self.end_date:
            raise ValueError("start_date must not be after end_date")
        if self.repeat is not None:
            token, count = self.repeat
            if any(c.isspace() for c in token):
                raise ValueError(f"repeat token must be whitespace-free: {token!r}")
            if count < 1:
                raise ValueError("repeat count must be positive")
        if not 1 <= self.max_records <= MAX_RECORDS_LIMIT:
            raise ValueError(f"max_records must be in [1, {MAX_RECORDS_LIMIT}]")


@dataclass(frozen=True)
class GdeltHit:
    url: str
    title: str
    seen_date: datetime
    domain: str
    language: str
    source_country: str


def build_company_query(company: Company, month: date, max_records: int = MAX_RECORDS_LIMIT) -> GdeltQuery:
    """One calendar month of news for one company.

    Keywords are the company's short and long names plus the three ESG terms;
    the one-word name must appear at least twice in a matching article.
    """
    last_day = calendar.monthrange(month.year, month.month)[1]
    return GdeltQuery(
        start_date=date(month.year, month.month, 1),
        end_date=date(month.year, month.month, last_day),
        keywords=(company.name_short, company.name_long, "environmental", "social", "governance"),
        repeat=(company.name_oneword, 2),
        max_records=max_records,
    )


def _quote(term: str) -> str:
    return f'"{term}"' if " " in term else term


def query_string(query: GdeltQuery, combination: str = DEFAULT_COMBINATION) -> str:
    """Render the full search expression sent as the `query` parameter."""
    if len(query.keywords) != len(_KEYWORD_ROLES):
        raise ValueError(f"expected {len(_KEYWORD_ROLES)} keywords, got {len(query.keywords)}")
    expr = combination
    for role, value in zip(_KEYWORD_ROLES, query.keywords):
        expr = expr.replace(role, _quote(value))
    expr = expr.replace(" AND ", " ")
    parts = [expr]
    if query.repeat is not None:
        token, count = query.repeat
        parts.append(f'repeat{count}:"{token}"')
    if query.domain:
        parts.append(f"domain:{query.domain}")
    if query.country:
        parts.append(f"sourcecountry:{query.country}")
    if query.theme:
        parts.append(f"theme:{query.theme}")
    if query.near:
        # caller supplies e.g. '15:"solar power"' -> near15:"solar power"
        parts.append(f"near{query.near}")
    return " ".join(parts)


def query_params(query: GdeltQuery, combination: str = DEFAULT_COMBINATION) -> dict[str, str]:
    """HTTP query parameters for the article-list endpoint."""
    return {
        "query": query_string(query, combination),
        "mode": "ArtList",
        "format": "JSON",
        "maxrecords": str(query.max_records),
        "startdatetime": query.start_date.strftime("%Y%m%d") + "000000",
        "enddatetime": query.end_date.strftime("%Y%m%d") + "235959",
    }


class Transport(Protocol):
    def __call__(self, url: str, params: dict[str, str]) -> tuple[int, str]: ...


class RequestsTransport:
    """Default live transport; kept import-lazy so fixture-only use never
    needs the dependency at runtime."""

    def __init__(self, timeout: float = 30.0) -> None:
        self.timeout = timeout

    def __call__(self, url: str, params: dict[str, str]) -> tuple[int, str]:
        import requests

        try:
            resp = requests.get(url, params=params, timeout=self.timeout)
        except requests.RequestException as exc:  # pragma: no cover - network
            raise TransportError(str(exc)) from exc
        return resp.status_code, resp.text


class TokenBucket:
    """Blocking token bucket; thread-safe.  ``rate`` tokens/second refill."""

    def __init__(
        self,
        rate: float = 1.0,
        capacity: float = 1.0,
        clock: Callable[[], float] = time.monotonic,
        sleep: Callable[[float], None] = time.sleep,
    ) -> None:
        if rate <= 0 or capacity <= 0:
            raise ValueError("rate and capacity must be positive")
        self.rate = rate
        self.capacity = capacity
        self._clock = clock
        self._sleep = sleep
        self._tokens = capacity
        self._last = clock()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = self._clock()
                self._tokens = min(self.capacity, self._tokens + (now - self._last) * self.rate)
                self._last = now
                if self._tokens >= 1.0:
                    self._tokens -= 1.0
                    return
                wait = (1.0 - self._tokens) / self.rate
            self._sleep(wait)


def _parse_seen_date(raw: str) -> datetime:
    for fmt in ("%Y%m%dT%H%M%SZ", "%Y%m%d%H%M%S"):
        try:
            return datetime.strptime(raw, fmt)
        except ValueError:
            pass
    try:
        return datetime.fromisoformat(raw.replace("Z", "+00:00")).replace(tzinfo=None)
    except ValueError as exc:
        raise MalformedResponseError(f"unparseable seendate {raw!r}") from exc


def _parse_hits(body: str, max_records: int) -> list[GdeltHit]:
    try:
        payload = json.loads(body)
    except json.JSONDecodeError as exc:
        raise MalformedResponseError(f"response is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise MalformedResponseError("expected a JSON object at top level")
    articles = payload.get("articles", [])
    if not isinstance(articles, list):
        raise MalformedResponseError("'articles' is not a list")
    hits: list[GdeltHit] = []
    for i, art in enumerate(articles[:max_records]):
        url = art.get("url", "")
        if not url:
            raise MalformedResponseError(f"article #{i} has no url")
        hits.append(
            GdeltHit(
                url=url,
                title=art.get("title", ""),
                seen_date=_parse_seen_date(art.get("seendate", "19700101T000000Z")),
                domain=art.get("domain", ""),
                language=art.get("language", ""),
                source_country=art.get("sourcecountry", ""),
            )
        )
    return hits


def fetch(
    query: GdeltQuery,
    transport: Transport,
    *,
    combination: str = DEFAULT_COMBINATION,
    limiter: TokenBucket | None = None,
    retries: int = 3,
    backoff: float = 0.5,
    sleep: Callable[[float], None] = time.sleep,
    archive_dir: str | Path | None = None,
    company_id: str | None = None,
) -> list[GdeltHit]:
    """Run one query and parse the article list.

    Transport failures are retried ``retries`` times with exponential
    backoff; HTTP 429 raises :class:`RateLimitedError` immediately so the
    caller can slow down the whole batch.
    """
    params = query_params(query, combination)
    last_exc: Exception | None = None
    for attempt in range(retries):
        if limiter is not None:
            limiter.acquire()
        try:
            status, body = transport(GDELT_ENDPOINT, params)
        except TransportError as exc:
            last_exc = exc
            if attempt + 1 < retries:
                sleep(backoff * (2**attempt))
            continue
        if status == 429:
            raise RateLimitedError("rate limited by server")
        if status != 200:
            last_exc = TransportError(f"HTTP {status}")
            if attempt + 1 < retries:
                sleep(backoff * (2**attempt))
            continue
        if archive_dir is not None and company_id is not None:
            target = Path(archive_dir) / company_id
            target.mkdir(parents=True, exist_ok=True)
            name = query.start_date.strftime("%Y-%m") + ".json"
            (target / name).write_text(body, encoding="utf-8")
        return _parse_hits(body, query.max_records)
    raise last_exc if last_exc is not None else TransportError("fetch failed")
