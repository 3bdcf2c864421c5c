"""Article text cleaning, summarization, pruning, and JSONL persistence.

The cleaning contract, in order:

1. An article is dropped when its total text (title + paragraphs) is shorter
   than 200 characters or contains a known error phrase (case-insensitive) —
   these are failed downloads, not news.
2. Only paragraphs that mention one of the company's three name variants
   (case-sensitive) survive; zero surviving paragraphs drops the article.
3. Surviving text is scrubbed of links, e-mail addresses, date/time strings,
   Unicode control characters, and newline markers.
4. The length floor is re-applied to the scrubbed text, which makes ``clean``
   idempotent: running it on its own output returns that output unchanged.
"""
from __future__ import annotations

import enum
import hashlib
import json
import re
import unicodedata
from dataclasses import dataclass, replace
from datetime import date
from pathlib import Path
from typing import Iterable, Sequence

from .catalog import Company, RatingRecord

__all__ = [
    "MIN_ARTICLE_CHARS",
    "MIN_ARTICLES_PER_YEAR",
    "DEFAULT_ERROR_PHRASES",
    "DEFAULT_SCRUB_PATTERNS",
    "Relevance",
    "Sentiment",
    "RawArticle",
    "ArticleRecord",
    "article_id",
    "scrub_text",
    "split_sentences",
    "clean",
    "summarize",
    "make_record",
    "prune_companies",
    "extract_paragraphs",
    "write_raw_articles",
    "read_raw_articles",
    "write_records",
    "read_records",
    "parse_month",
    "format_month",
]

MIN_ARTICLE_CHARS = 200
MIN_ARTICLES_PER_YEAR = 5

DEFAULT_ERROR_PHRASES: tuple[str, ...] = (
    "404 not found",
    "403 forbidden",
    "500 internal server error",
    "page not found",
    "access denied",
    "access to this page has been denied",
    "please enable javascript",
    "enable cookies",
    "are you a robot",
    "captcha",
    "subscribe to continue reading",
    "this content is not available in your region",
)

_MONTHS = (
    r"Jan(?:uary)?|Feb(?:ruary)?|Mar(?:ch)?|Apr(?:il)?|May|Jun(?:e)?|"
    r"Jul(?:y)?|Aug(?:ust)?|Sep(?:t(?:ember)?)?|Oct(?:ober)?|Nov(?:ember)?|Dec(?:ember)?"
)

# Order matters: composite date/time shapes go before bare clock times.
DEFAULT_SCRUB_PATTERNS: tuple[str, ...] = (
    r"(?:https?://|www\.)\S+",                                   # links
    r"[\w.+-]+@[\w-]+\.[\w.-]+",                                 # e-mail
    r"\b\d{4}-\d{2}-\d{2}(?:[T ]\d{2}:\d{2}(?::\d{2})?Z?)?\b",   # ISO date(/time)
    r"\b\d{1,2}[/.]\d{1,2}[/.]\d{2,4}\b",                        # 31/01/2020, 31.1.20
    rf"\b(?:{_MONTHS})\.?\s+\d{{1,2}}(?:st|nd|rd|th)?(?:,?\s*\d{{4}})?\b",  # January 3, 2020
    rf"\b\d{{1,2}}(?:st|nd|rd|th)?\s+(?:{_MONTHS})\.?(?:,?\s*\d{{4}})?\b",  # 3 Jan 2020
    r"\b\d{1,2}:\d{2}(?::\d{2})?\s*(?:[ap]\.?m\.?)?(?:\s*(?:UTC|GMT|EST|EDT|CET|CEST|PST|PDT))?\b",
    r"\\[nrt]",                                                  # literal escape markers
)

_WHITESPACE_RE = re.compile(r"\s+")
_SENTENCE_SPLIT_RE = re.compile(r"(?<=[.!?])\s+(?=[A-Z0-9])")


class Relevance(enum.Enum):
    RELEVANT = "relevant"
    NOISE = "noise"


class Sentiment(enum.Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"


@dataclass(frozen=True)
class RawArticle:
    company_id: str
    month: date  # first day of the article's month
    url: str
    title: str
    paragraphs: tuple[str, ...]


@dataclass(frozen=True)
class ArticleRecord:
    article_id: str
    company_id: str
    month: date
    summary: str
    relevance_prob: float | None = None
    relevance_label: Relevance | None = None
    sentiment_label: Sentiment | None = None
    cluster_id: int | None = None

    def __post_init__(self) -> None:
        if not self.summary:
            raise ValueError(f"article {self.article_id!r}: empty summary")
        if self.relevance_prob is not None and not 0.0 <= self.relevance_prob <= 1.0:
            raise ValueError(f"article {self.article_id!r}: relevance_prob outside [0,1]")

    def with_labels(self, **kwargs) -> "ArticleRecord":
        return replace(self, **kwargs)


def article_id(url: str, company_id: str) -> str:
    """Stable 16-hex-char id so re-ingesting the same article is idempotent."""
    digest = hashlib.sha256(f"{url}\x00{company_id}".encode("utf-8")).hexdigest()
    return digest[:16]


def _total_text(title: str, paragraphs: Sequence[str]) -> str:
    return " ".join([title, *paragraphs]).strip()


def _is_control(ch: str) -> bool:
    return unicodedata.category(ch) in ("Cc", "Cf")


def scrub_text(text: str, patterns: Sequence[str] = DEFAULT_SCRUB_PATTERNS) -> str:
    """Remove links, e-mails, date/time strings, control chars, newline markers."""
    for pat in patterns:
        text = re.sub(pat, " ", text, flags=re.IGNORECASE)
    text = "".join(" " if _is_control(ch) else ch for ch in text)
    return _WHITESPACE_RE.sub(" ", text).strip()


def split_sentences(text: str) -> list[str]:
    """Split after ./!/? followed by whitespace and an uppercase letter or
    digit.  Deliberately no abbreviation handling: deterministic beats clever
    here, and summaries only ever take a prefix."""
    return [s for s in (_SENTENCE_SPLIT_RE.split(text.strip())) if s]


def _mentions(text: str, company: Company) -> bool:
    return any(variant and variant in text for variant in company.name_variants)


def clean(
    raw: RawArticle,
    company: Company,
    error_phrases: Sequence[str] = DEFAULT_ERROR_PHRASES,
    scrub_patterns: Sequence[str] = DEFAULT_SCRUB_PATTERNS,
) -> RawArticle | None:
    """Apply the four-step cleaning contract; None means "discard"."""
    total = _total_text(raw.title, raw.paragraphs)
    if len(total) < MIN_ARTICLE_CHARS:
        return None
    lowered = total.lower()
    if any(phrase.lower() in lowered for phrase in error_phrases):
        return None

    kept = [p for p in raw.paragraphs if _mentions(p, company)]
    scrubbed = [scrub_text(p, scrub_patterns) for p in kept]
    # scrubbing may eat a name variant embedded in a link; re-filter so a
    # second clean() pass sees exactly the same paragraphs
    scrubbed = [p for p in scrubbed if _mentions(p, company)]
    if not scrubbed:
        return None

    title = scrub_text(raw.title, scrub_patterns)
    if len(_total_text(title, scrubbed)) < MIN_ARTICLE_CHARS:
        return None
    return replace(raw, title=title, paragraphs=tuple(scrubbed))


def summarize(raw: RawArticle, max_sentences: int = 5) -> str:
    """Title plus the first ``max_sentences`` sentences of the body."""
    body = " ".join(raw.paragraphs)
    sentences = split_sentences(body)[:max_sentences]
    parts = [p for p in [raw.title.strip(), *sentences] if p]
    return " ".join(parts)


def make_record(raw: RawArticle) -> ArticleRecord:
    """Summarize a cleaned article into its pipeline record."""
    return ArticleRecord(
        article_id=article_id(raw.url, raw.company_id),
        company_id=raw.company_id,
        month=raw.month,
        summary=summarize(raw),
    )


def prune_companies(
    records: Iterable[ArticleRecord],
    ratings: Iterable[RatingRecord],
    year: int,
    min_articles: int = MIN_ARTICLES_PER_YEAR,
) -> list[ArticleRecord]:
    """Drop every record of companies with < ``min_articles`` articles in
    ``year`` or without a rating for ``year``."""
    records = list(records)
    rated = {r.company_id for r in ratings if r.year == year}
    counts: dict[str, int] = {}
    for rec in records:
        if rec.month.year == year:
            counts[rec.company_id] = counts.get(rec.company_id, 0) + 1
    keep = {cid for cid, n in counts.items() if n >= min_articles and cid in rated}
    return [rec for rec in records if rec.company_id in keep]


# --- HTML paragraph extraction -------------------------------------------

def extract_paragraphs(html: str) -> list[str]:
    """Collect the text content of every <p> element.  The real crawler is
    swappable; cleaning accepts pre-extracted paragraph lists either way."""
    from html.parser import HTMLParser

    class _PCollector(HTMLParser):
        def __init__(self) -> None:
            super().__init__(convert_charrefs=True)
            self.depth = 0
            self.chunks: list[list[str]] = []

        def handle_starttag(self, tag: str, attrs) -> None:
            if tag == "p":
                self.depth += 1
                self.chunks.append([])

        def handle_endtag(self, tag: str) -> None:
            if tag == "p" and self.depth > 0:
                self.depth -= 1

        def handle_data(self, data: str) -> None:
            if self.depth > 0 and self.chunks:
                self.chunks[-1].append(data)

    collector = _PCollector()
    collector.feed(html)
    paragraphs = [_WHITESPACE_RE.sub(" ", "".join(c)).strip() for c in collector.chunks]
    return [p for p in paragraphs if p]


# --- persistence ----------------------------------------------------------

def parse_month(value: str) -> date:
    year, month = value.split("-")
    return date(int(year), int(month), 1)


def format_month(value: date) -> str:
    return f"{value.year:04d}-{value.month:02d}"


def write_raw_articles(path: str | Path, articles: Iterable[RawArticle]) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for art in articles:
            fh.write(
                json.dumps(
                    {
                        "company_id": art.company_id,
                        "month": format_month(art.month),
                        "url": art.url,
                        "title": art.title,
                        "paragraphs": list(art.paragraphs),
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )


def read_raw_articles(path: str | Path) -> list[RawArticle]:
    articles = []
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            articles.append(
                RawArticle(
                    company_id=obj["company_id"],
                    month=parse_month(obj["month"]),
                    url=obj["url"],
                    title=obj["title"],
                    paragraphs=tuple(obj["paragraphs"]),
                )
            )
    return articles


def write_records(path: str | Path, records: Iterable[ArticleRecord]) -> None:
    """One record per line; field names match the record type exactly."""
    with Path(path).open("w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(
                json.dumps(
                    {
                        "article_id": rec.article_id,
                        "company_id": rec.company_id,
                        "month": format_month(rec.month),
                        "summary": rec.summary,
                        "relevance_prob": rec.relevance_prob,
                        "relevance_label": rec.relevance_label.value if rec.relevance_label else None,
                        "sentiment_label": rec.sentiment_label.value if rec.sentiment_label else None,
                        "cluster_id": rec.cluster_id,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )


def read_records(path: str | Path) -> list[ArticleRecord]:
    records = []
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            records.append(
                ArticleRecord(
                    article_id=obj["article_id"],
                    company_id=obj["company_id"],
                    month=parse_month(obj["month"]),
                    summary=obj["summary"],
                    relevance_prob=obj.get("relevance_prob"),
                    relevance_label=Relevance(obj["relevance_label"]) if obj.get("relevance_label") else None,
                    sentiment_label=Sentiment(obj["sentiment_label"]) if obj.get("sentiment_label") else None,
                    cluster_id=obj.get("cluster_id"),
                )
            )
    return records
