"""Company registry, rating targets, and market-capitalization banding.

The catalog is two CSV files living in one directory:

* ``companies.csv`` — ``company_id,name_long,name_short,name_oneword,market_cap_usd``
* ``ratings.csv``   — ``company_id,year,rating``

An empty ``market_cap_usd`` cell means the capitalization is unknown; such
companies land in the ``Unknown`` band and are kept throughout the pipeline
but left out of band-stratified result tables.
"""
from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from pathlib import Path

__all__ = [
    "CapBand",
    "Company",
    "RatingRecord",
    "CatalogError",
    "band_of",
    "load_catalog",
    "save_catalog",
    "SMALL_CAP_LIMIT",
    "LARGE_CAP_LIMIT",
]

# Band boundaries in USD: below 2B small, above 10B large, both boundaries mid.
SMALL_CAP_LIMIT = 2e9
LARGE_CAP_LIMIT = 1e10

COMPANIES_FILE = "companies.csv"
RATINGS_FILE = "ratings.csv"

_COMPANY_HEADER = ["company_id", "name_long", "name_short", "name_oneword", "market_cap_usd"]
_RATING_HEADER = ["company_id", "year", "rating"]


class CatalogError(ValueError):
    """Raised for malformed catalog files or invariant violations."""


class CapBand(enum.Enum):
    SMALL = "small"
    MID = "mid"
    LARGE = "large"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class Company:
    id: str
    name_long: str
    name_short: str
    name_oneword: str
    market_cap_usd: float | None = None

    def __post_init__(self) -> None:
        if not self.id:
            raise CatalogError("company id must be non-empty")
        if not self.name_oneword or any(c.isspace() for c in self.name_oneword):
            raise CatalogError(
                f"company {self.id!r}: name_oneword must be a single token, "
                f"got {self.name_oneword!r}"
            )
        if self.market_cap_usd is not None and self.market_cap_usd < 0:
            raise CatalogError(f"company {self.id!r}: negative market cap")

    @property
    def name_variants(self) -> tuple[str, str, str]:
        return (self.name_long, self.name_short, self.name_oneword)

    @property
    def cap_band(self) -> CapBand:
        return band_of(self.market_cap_usd)


@dataclass(frozen=True)
class RatingRecord:
    company_id: str
    year: int
    rating: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.rating <= 100.0:
            raise CatalogError(
                f"rating {self.rating} for ({self.company_id!r}, {self.year}) "
                "outside [0, 100]"
            )


def band_of(market_cap_usd: float | None) -> CapBand:
    """Map a market capitalization in USD to its band.

    Absent → Unknown, < $2B → Small, $2B..$10B inclusive → Mid, > $10B → Large.
    """
    if market_cap_usd is None:
        return CapBand.UNKNOWN
    if market_cap_usd < 0:
        raise CatalogError(f"negative market cap: {market_cap_usd}")
    if market_cap_usd < SMALL_CAP_LIMIT:
        return CapBand.SMALL
    if market_cap_usd <= LARGE_CAP_LIMIT:
        return CapBand.MID
    return CapBand.LARGE


def _check_header(actual: list[str] | None, expected: list[str], path: Path) -> None:
    if actual != expected:
        raise CatalogError(f"{path}: expected header {','.join(expected)!r}, got {actual!r}")


def load_catalog(path: str | Path) -> tuple[list[Company], list[RatingRecord]]:
    """Load companies and ratings from a catalog directory.

    Raises :class:`CatalogError` with the file and line number for parse
    errors, duplicate keys, and out-of-range values.
    """
    root = Path(path)
    companies_path = root / COMPANIES_FILE
    ratings_path = root / RATINGS_FILE
    for p in (companies_path, ratings_path):
        if not p.is_file():
            raise CatalogError(f"missing catalog file: {p}")

    companies: list[Company] = []
    seen_ids: set[str] = set()
    with companies_path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        _check_header(reader.fieldnames, _COMPANY_HEADER, companies_path)
        for row in reader:
            line = reader.line_num
            try:
                cap_cell = (row["market_cap_usd"] or "").strip()
                company = Company(
                    id=row["company_id"],
                    name_long=row["name_long"],
                    name_short=row["name_short"],
                    name_oneword=row["name_oneword"],
                    market_cap_usd=float(cap_cell) if cap_cell else None,
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise CatalogError(f"{companies_path}:{line}: {exc}") from exc
            if company.id in seen_ids:
                raise CatalogError(f"{companies_path}:{line}: duplicate company id {company.id!r}")
            seen_ids.add(company.id)
            companies.append(company)

    ratings: list[RatingRecord] = []
    seen_keys: set[tuple[str, int]] = set()
    with ratings_path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        _check_header(reader.fieldnames, _RATING_HEADER, ratings_path)
        for row in reader:
            line = reader.line_num
            try:
                record = RatingRecord(
                    company_id=row["company_id"],
                    year=int(row["year"]),
                    rating=float(row["rating"]),
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise CatalogError(f"{ratings_path}:{line}: {exc}") from exc
            key = (record.company_id, record.year)
            if key in seen_keys:
                raise CatalogError(f"{ratings_path}:{line}: duplicate rating for {key!r}")
            seen_keys.add(key)
            ratings.append(record)

    return companies, ratings


def save_catalog(path: str | Path, companies: list[Company], ratings: list[RatingRecord]) -> None:
    """Write a catalog directory; inverse of :func:`load_catalog`."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    with (root / COMPANIES_FILE).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(_COMPANY_HEADER)
        for c in companies:
            cap = "" if c.market_cap_usd is None else repr(c.market_cap_usd)
            writer.writerow([c.id, c.name_long, c.name_short, c.name_oneword, cap])
    with (root / RATINGS_FILE).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(_RATING_HEADER)
        for r in ratings:
            writer.writerow([r.company_id, r.year, repr(r.rating)])


def ratings_by_company(ratings: list[RatingRecord], year: int) -> dict[str, float]:
    """Index ratings for one year by company id."""
    return {r.company_id: r.rating for r in ratings if r.year == year}
