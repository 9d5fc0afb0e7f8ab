"""Domain types: exact rationals, bidders, instances and bid profiles.

All monetary and unit quantities are `fractions.Fraction` values; nothing in
the core ever rounds. An Instance is *normalized* when its bidders are sorted
by (value desc, budget desc, id asc) and a dummy low-value bidder with budget
``supply * dummy_value`` sits at the end, guaranteeing that the market can
always clear.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction

#: Reserved identifier of the appended dummy bidder. '~' sorts after ASCII
#: alphanumerics, which keeps the dummy last among value ties.
DUMMY_ID = "~dummy"


class NormalizationError(ValueError):
    """Raised when an instance cannot be brought into normalized form."""


def parse_rational(text: str) -> Fraction:
    """Parse an exact rational literal: an integer string or ``p/q``."""
    s = text.strip()
    if "/" in s:
        num_s, _, den_s = s.partition("/")
        try:
            num, den = int(num_s), int(den_s)
        except ValueError:
            raise ValueError(f"malformed rational literal {text!r}") from None
        if den == 0:
            raise ValueError(f"zero denominator in rational literal {text!r}")
        return Fraction(num, den)
    try:
        return Fraction(int(s))
    except ValueError:
        raise ValueError(f"malformed rational literal {text!r}") from None


def format_rational(value: Fraction) -> str:
    """Render a Fraction as ``p/q``, or just ``p`` for integers."""
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def decimal_string(value: Fraction, places: int = 6) -> str:
    """Exact fixed-point decimal rendering (round half away from zero)."""
    scale = 10**places
    scaled = value * scale
    # round half away from zero on the exact rational
    num, den = scaled.numerator, scaled.denominator
    if num >= 0:
        q = (2 * num + den) // (2 * den)
    else:
        q = -((-2 * num + den) // (2 * den))
    sign = "-" if q < 0 else ""
    q = abs(q)
    whole, frac = divmod(q, scale)
    return f"{sign}{whole}.{frac:0{places}d}"


@dataclass(frozen=True)
class Bidder:
    """One bidder: per-unit value and a hard total budget."""

    id: str
    value: Fraction
    budget: Fraction

    def __post_init__(self) -> None:
        if self.value <= 0:
            raise ValueError(f"bidder {self.id!r}: value must be positive")
        if self.budget < 0:
            raise ValueError(f"bidder {self.id!r}: budget must be nonnegative")


@dataclass(frozen=True)
class Instance:
    """A market: supply of identical units, bidders, and the dummy's value."""

    supply: Fraction
    bidders: tuple[Bidder, ...]
    dummy_value: Fraction

    @property
    def dummy_budget(self) -> Fraction:
        return self.supply * self.dummy_value

    @property
    def total_budget(self) -> Fraction:
        return sum((b.budget for b in self.bidders), Fraction(0))

    def real_bidders(self) -> tuple[Bidder, ...]:
        return tuple(b for b in self.bidders if b.id != DUMMY_ID)


def _sort_key(bidder: Bidder):
    return (-bidder.value, -bidder.budget, bidder.id)


def is_normalized(instance: Instance) -> bool:
    """True when bidders are sorted and the trailing dummy is in place."""
    bs = instance.bidders
    if not bs or bs[-1].id != DUMMY_ID:
        return False
    dummy = bs[-1]
    if dummy.value != instance.dummy_value or dummy.budget != instance.dummy_budget:
        return False
    if any(b.id == DUMMY_ID for b in bs[:-1]):
        return False
    keys = [_sort_key(b) for b in bs]
    return keys == sorted(keys)


def normalize(instance: Instance) -> Instance:
    """Sort bidders, validate the instance, and append the dummy bidder.

    Idempotent: normalizing a normalized instance returns an equal one.
    Zero-budget bidders are kept; the clearing machinery never selects them
    as the boundary.
    """
    if instance.supply <= 0:
        raise NormalizationError("supply must be positive")
    if instance.dummy_value <= 0:
        raise NormalizationError("dummy value must be positive")

    real = []
    for b in instance.bidders:
        if b.id == DUMMY_ID:
            if b.value != instance.dummy_value or b.budget != instance.dummy_budget:
                raise NormalizationError(
                    f"bidder id {DUMMY_ID!r} is reserved for the dummy bidder"
                )
            continue
        real.append(b)
    if not real:
        raise NormalizationError("instance has no real bidders")
    if instance.dummy_value >= min(b.value for b in real):
        raise NormalizationError("dummy value must be strictly below every real value")

    # The real bidders' money must absorb the whole supply at the dummy's
    # price, otherwise no clearing point exists.
    dummy_budget = instance.dummy_budget
    absorbable = sum(min(b.budget, dummy_budget) for b in real)
    if absorbable < dummy_budget:
        raise NormalizationError(
            "dummy value too large: bidders cannot absorb the supply at the dummy price"
        )

    ordered = sorted(real, key=_sort_key)
    ordered.append(Bidder(DUMMY_ID, instance.dummy_value, dummy_budget))
    return replace(instance, bidders=tuple(ordered))


@dataclass(frozen=True)
class BidProfile:
    """Stated (value, budget) pairs over a normalized instance.

    ``stated[i]`` aligns with ``instance.bidders[i]``; the instance itself
    holds the true values and budgets. The dummy's entry is always truthful.
    """

    instance: Instance
    stated: tuple[tuple[Fraction, Fraction], ...]

    def __post_init__(self) -> None:
        if len(self.stated) != len(self.instance.bidders):
            raise ValueError("stated bids must align with the instance's bidders")

    @classmethod
    def truthful(cls, instance: Instance) -> "BidProfile":
        return cls(instance, tuple((b.value, b.budget) for b in instance.bidders))

    def with_bid(
        self,
        index: int,
        value: Fraction | None = None,
        budget: Fraction | None = None,
    ) -> "BidProfile":
        """Copy of this profile with bidder ``index``'s stated bid replaced."""
        old_value, old_budget = self.stated[index]
        new = (value if value is not None else old_value,
               budget if budget is not None else old_budget)
        stated = self.stated[:index] + (new,) + self.stated[index + 1:]
        return BidProfile(self.instance, stated)


def validate(profile: BidProfile) -> list[str]:
    """Return all constraint violations of a profile (empty list means ok)."""
    violations = []
    for i, (bidder, (value, budget)) in enumerate(
        zip(profile.instance.bidders, profile.stated)
    ):
        if value <= 0:
            violations.append(f"nonpositive value (bidder {i}: {bidder.id})")
        if budget < 0:
            violations.append(f"negative budget (bidder {i}: {bidder.id})")
        if bidder.id == DUMMY_ID and (value, budget) != (bidder.value, bidder.budget):
            violations.append("dummy must be truthful")
    return violations
