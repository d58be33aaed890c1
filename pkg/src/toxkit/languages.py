"""Registry of the ISO-639-3 language codes handled out of the box.

The registry is seeded with the 30 languages of the benchmark but stays
open: unknown codes are rejected at ingestion unless explicitly allowed.
"""

DEFAULT_LANGUAGES = {
    "arb": "Modern Standard Arabic",
    "ben": "Bengali",
    "bul": "Bulgarian",
    "cat": "Catalan",
    "ces": "Czech",
    "cmn": "Mandarin Chinese",
    "dan": "Danish",
    "deu": "German",
    "ell": "Greek",
    "eng": "English",
    "est": "Estonian",
    "fas": "Western Persian",
    "fin": "Finnish",
    "fra": "French",
    "heb": "Hebrew",
    "hin": "Hindi",
    "hun": "Hungarian",
    "ind": "Indonesian",
    "ita": "Italian",
    "nld": "Dutch",
    "pol": "Polish",
    "por": "Portuguese",
    "rus": "Russian",
    "slk": "Slovak",
    "spa": "Spanish",
    "swh": "Swahili",
    "tgl": "Tagalog",
    "tur": "Turkish",
    "urd": "Urdu",
    "vie": "Vietnamese",
}

# Languages natively supported by the reference trainable text classifier
# (the "avg7" subset).
DETOXIFY_LANGUAGES = frozenset({"eng", "spa", "fra", "ita", "por", "rus", "tur"})


class LanguageRegistry:
    """Set of accepted language codes, extensible at runtime."""

    def __init__(self, codes=None, allow_unregistered=False):
        self._codes = set(DEFAULT_LANGUAGES if codes is None else codes)
        self.allow_unregistered = allow_unregistered

    def register(self, code: str) -> None:
        self._codes.add(code)

    def is_known(self, code: str) -> bool:
        return code in self._codes

    def check(self, code: str) -> bool:
        """True when the code is acceptable under the current policy."""
        return self.allow_unregistered or code in self._codes

    @property
    def codes(self):
        return frozenset(self._codes)
