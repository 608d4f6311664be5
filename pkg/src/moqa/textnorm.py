"""Answer-string normalization shared by the rule engine and the evaluator.

The ``mmcoqa`` profile reproduces the stemmed/stopped surface forms used by
the MMCoQA evaluation convention, e.g.::

    UEFA Champions League      ->  uefa champion leagu
    Two songs were written.    ->  2 song
    more than one hundred      ->  more than 1 hundr

Profiles are applied to a fixpoint so that ``normalize`` is idempotent even
though a single Porter pass is not (e.g. "generously" -> "generous" ->
"gener").
"""

from __future__ import annotations

import re
import string
from dataclasses import dataclass

STAGE_NAMES = (
    "lowercase",
    "strip_punctuation",
    "number_words_to_digits",
    "remove_articles",
    "remove_stopwords",
    "porter_stem",
    "collapse_whitespace",
)

# Fixed English function-word list: articles, copulas, auxiliaries,
# non-quantitative prepositions, pronouns, wh-words, and the participles
# common in copular answer sentences ("Two songs were written."). Quantity
# words (more, than, over, about, most...) are deliberately absent so that
# approximate numeric answers like "more than 1 hundr" survive.
STOPWORDS = frozenset(
    """
    a an the
    am is are was were be been being
    do does did done have has had having
    will would shall should may might must can could
    of in on at to from by with for as and or nor but if
    into onto upon during per
    it its this that these those there here
    i me my we us our you your he him his she her hers
    they them their who whom whose which what when where why how
    also just too very then
    written made given taken shown known called named said used
    """.split()
)

_NUMBER_WORDS = {
    "zero": "0",
    "one": "1",
    "two": "2",
    "three": "3",
    "four": "4",
    "five": "5",
    "six": "6",
    "seven": "7",
    "eight": "8",
    "nine": "9",
    "ten": "10",
    "eleven": "11",
    "twelve": "12",
    "thirteen": "13",
    "fourteen": "14",
    "fifteen": "15",
    "sixteen": "16",
    "seventeen": "17",
    "eighteen": "18",
    "nineteen": "19",
    "twenty": "20",
    "thirty": "30",
    "forty": "40",
    "fifty": "50",
    "sixty": "60",
    "seventy": "70",
    "eighty": "80",
    "ninety": "90",
}

_ARTICLE_RE = re.compile(r"\b(a|an|the)\b")
_PUNCT_TABLE = str.maketrans("", "", string.punctuation)


class PorterStemmer:
    """The original Porter (1980) suffix-stripping algorithm.

    Implemented from the published rule tables; no NLTK-style extensions,
    so e.g. "jointly" stems to "jointli" and "league" to "leagu".
    """

    _VOWELS = "aeiou"

    def _cons(self, word: str, i: int) -> bool:
        ch = word[i]
        if ch in self._VOWELS:
            return False
        if ch == "y":
            return True if i == 0 else not self._cons(word, i - 1)
        return True

    def _measure(self, stem: str) -> int:
        # m in [C](VC)^m[V]
        n = len(stem)
        i = 0
        while i < n and self._cons(stem, i):
            i += 1
        m = 0
        while i < n:
            while i < n and not self._cons(stem, i):
                i += 1
            if i == n:
                break
            m += 1
            while i < n and self._cons(stem, i):
                i += 1
        return m

    def _has_vowel(self, stem: str) -> bool:
        return any(not self._cons(stem, i) for i in range(len(stem)))

    def _ends_double_cons(self, word: str) -> bool:
        return (
            len(word) >= 2
            and word[-1] == word[-2]
            and self._cons(word, len(word) - 1)
        )

    def _ends_cvc(self, word: str) -> bool:
        if len(word) < 3:
            return False
        return (
            self._cons(word, len(word) - 3)
            and not self._cons(word, len(word) - 2)
            and self._cons(word, len(word) - 1)
            and word[-1] not in "wxy"
        )

    def _rule_list(self, word: str, rules, cond) -> str:
        # Longest matching suffix decides the rule; if its condition fails
        # no other rule in the list is tried (Porter's semantics).
        for suffix, repl in rules:
            if word.endswith(suffix):
                stem = word[: len(word) - len(suffix)]
                if cond(stem):
                    return stem + repl
                return word
        return word

    def stem(self, word: str) -> str:
        if len(word) <= 2:
            return word
        word = self._step1a(word)
        word = self._step1b(word)
        word = self._step1c(word)
        word = self._step2(word)
        word = self._step3(word)
        word = self._step4(word)
        word = self._step5a(word)
        word = self._step5b(word)
        return word

    def _step1a(self, word: str) -> str:
        if word.endswith("sses"):
            return word[:-2]
        if word.endswith("ies"):
            return word[:-2]
        if word.endswith("ss"):
            return word
        if word.endswith("s"):
            return word[:-1]
        return word

    def _step1b(self, word: str) -> str:
        if word.endswith("eed"):
            stem = word[:-3]
            return stem + "ee" if self._measure(stem) > 0 else word
        fired = None
        if word.endswith("ed") and self._has_vowel(word[:-2]):
            fired = word[:-2]
        elif word.endswith("ing") and self._has_vowel(word[:-3]):
            fired = word[:-3]
        if fired is None:
            return word
        word = fired
        if word.endswith(("at", "bl", "iz")):
            return word + "e"
        if self._ends_double_cons(word) and word[-1] not in "lsz":
            return word[:-1]
        if self._measure(word) == 1 and self._ends_cvc(word):
            return word + "e"
        return word

    def _step1c(self, word: str) -> str:
        if word.endswith("y") and self._has_vowel(word[:-1]):
            return word[:-1] + "i"
        return word

    _STEP2_RULES = (
        ("ational", "ate"),
        ("ization", "ize"),
        ("iveness", "ive"),
        ("fulness", "ful"),
        ("ousness", "ous"),
        ("tional", "tion"),
        ("biliti", "ble"),
        ("entli", "ent"),
        ("ousli", "ous"),
        ("ation", "ate"),
        ("alism", "al"),
        ("aliti", "al"),
        ("iviti", "ive"),
        ("enci", "ence"),
        ("anci", "ance"),
        ("izer", "ize"),
        ("abli", "able"),
        ("alli", "al"),
        ("ator", "ate"),
        ("eli", "e"),
    )

    _STEP3_RULES = (
        ("icate", "ic"),
        ("ative", ""),
        ("alize", "al"),
        ("iciti", "ic"),
        ("ical", "ic"),
        ("ness", ""),
        ("ful", ""),
    )

    _STEP4_SUFFIXES = (
        "ement",
        "ance",
        "ence",
        "able",
        "ible",
        "ment",
        "ant",
        "ent",
        "ion",
        "ism",
        "ate",
        "iti",
        "ous",
        "ive",
        "ize",
        "al",
        "er",
        "ic",
        "ou",
    )

    def _step2(self, word: str) -> str:
        return self._rule_list(
            word, self._STEP2_RULES, lambda stem: self._measure(stem) > 0
        )

    def _step3(self, word: str) -> str:
        return self._rule_list(
            word, self._STEP3_RULES, lambda stem: self._measure(stem) > 0
        )

    def _step4(self, word: str) -> str:
        for suffix in sorted(self._STEP4_SUFFIXES, key=len, reverse=True):
            if word.endswith(suffix):
                stem = word[: len(word) - len(suffix)]
                if self._measure(stem) <= 1:
                    return word
                if suffix == "ion" and not stem.endswith(("s", "t")):
                    return word
                return stem
        return word

    def _step5a(self, word: str) -> str:
        if not word.endswith("e"):
            return word
        stem = word[:-1]
        m = self._measure(stem)
        if m > 1 or (m == 1 and not self._ends_cvc(stem)):
            return stem
        return word

    def _step5b(self, word: str) -> str:
        if (
            self._measure(word) > 1
            and self._ends_double_cons(word)
            and word.endswith("l")
        ):
            return word[:-1]
        return word


_STEMMER = PorterStemmer()


def _stem_token(token: str) -> str:
    if not token.isalpha():
        return token
    return _STEMMER.stem(token)


def _apply_stage(stage: str, text: str) -> str:
    if stage == "lowercase":
        return text.lower()
    if stage == "strip_punctuation":
        return text.translate(_PUNCT_TABLE)
    if stage == "number_words_to_digits":
        return " ".join(_NUMBER_WORDS.get(t, t) for t in text.split())
    if stage == "remove_articles":
        return _ARTICLE_RE.sub(" ", text)
    if stage == "remove_stopwords":
        return " ".join(t for t in text.split() if t not in STOPWORDS)
    if stage == "porter_stem":
        return " ".join(_stem_token(t) for t in text.split())
    if stage == "collapse_whitespace":
        return " ".join(text.split())
    raise ValueError(f"unknown normalization stage: {stage!r}")


@dataclass(frozen=True)
class NormalizationProfile:
    """An ordered pipeline of normalization stages.

    ``collapse_whitespace`` must come last when present.
    """

    name: str
    stages: tuple[str, ...]

    def __post_init__(self):
        for stage in self.stages:
            if stage not in STAGE_NAMES:
                raise ValueError(f"unknown normalization stage: {stage!r}")
        if "collapse_whitespace" in self.stages and self.stages[-1] != "collapse_whitespace":
            raise ValueError("collapse_whitespace must be the last stage")


PROFILES = {
    "squad": NormalizationProfile(
        "squad",
        ("lowercase", "strip_punctuation", "remove_articles", "collapse_whitespace"),
    ),
    "mmcoqa": NormalizationProfile("mmcoqa", STAGE_NAMES),
}


def get_profile(name_or_profile) -> NormalizationProfile:
    if isinstance(name_or_profile, NormalizationProfile):
        return name_or_profile
    try:
        return PROFILES[name_or_profile]
    except KeyError:
        raise ValueError(
            f"unknown normalization profile {name_or_profile!r}; "
            f"known: {', '.join(sorted(PROFILES))}"
        ) from None


def normalize(text: str, profile="mmcoqa") -> str:
    """Apply the profile's stages repeatedly until the text is stable."""
    profile = get_profile(profile)
    current = text
    for _ in range(100):
        result = current
        for stage in profile.stages:
            result = _apply_stage(stage, result)
        if result == current:
            return result
        current = result
    raise RuntimeError("normalization did not converge")  # pragma: no cover


def norm_tokens(text: str, profile="mmcoqa") -> list[str]:
    return normalize(text, profile).split()
