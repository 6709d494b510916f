"""Translation clients for backtranslation.

The wire protocol is a single POST carrying {source_lang, target_lang,
texts} and returning {translations} aligned index-wise with the input.
An in-process stub with a small fixed English-German dictionary ships
with the package so backtranslation stays deterministic and testable
without a translation service.
"""
from __future__ import annotations

import json
from importlib import resources
from typing import Protocol, Sequence


class TranslationError(Exception):
    pass


class TranslationClient(Protocol):
    def translate(self, texts: Sequence[str], source_lang: str, target_lang: str) -> list[str]:
        ...


class HttpTranslationClient:
    """POSTs translation requests to a local endpoint. Requests are
    issued sequentially; the service owns any internal parallelism."""

    def __init__(self, url: str, timeout: float = 60.0):
        self.url = url.rstrip("/")
        self.timeout = timeout

    def translate(self, texts: Sequence[str], source_lang: str, target_lang: str) -> list[str]:
        import requests

        payload = {"source_lang": source_lang, "target_lang": target_lang, "texts": list(texts)}
        try:
            resp = requests.post(self.url, json=payload, timeout=self.timeout)
        except requests.RequestException as exc:
            raise TranslationError(f"translation endpoint {self.url} unreachable: {exc}") from exc
        if resp.status_code != 200:
            raise TranslationError(f"translation endpoint {self.url} returned {resp.status_code}")
        try:
            translations = resp.json()["translations"]
        except (json.JSONDecodeError, KeyError) as exc:
            raise TranslationError(f"malformed response from {self.url}: {exc}") from exc
        return [str(t) for t in translations]


class IdentityTranslationClient:
    """Returns inputs unchanged; useful for plumbing checks."""

    def translate(self, texts: Sequence[str], source_lang: str, target_lang: str) -> list[str]:
        return list(texts)


class DictionaryTranslationClient:
    """Deterministic token-wise stub backed by a word dictionary.

    Tokens found in the dictionary for the requested direction are
    mapped, everything else passes through, so a round trip through the
    pivot language is lossless exactly where the dictionary is a
    bijection and a no-op elsewhere.
    """

    def __init__(self, forward: dict[str, str], source_lang: str = "en", target_lang: str = "de"):
        self.forward = dict(forward)
        self.backward = {v: k for k, v in forward.items()}
        self.source_lang = source_lang
        self.target_lang = target_lang

    def _mapping_for(self, source_lang: str, target_lang: str) -> dict[str, str]:
        if (source_lang, target_lang) == (self.source_lang, self.target_lang):
            return self.forward
        if (source_lang, target_lang) == (self.target_lang, self.source_lang):
            return self.backward
        raise TranslationError(
            f"stub dictionary only covers {self.source_lang}<->{self.target_lang}, "
            f"got {source_lang}->{target_lang}")

    def _map_token(self, token: str, mapping: dict[str, str]) -> str:
        replacement = mapping.get(token.lower())
        if replacement is None:
            return token
        if token[:1].isupper():
            return replacement.capitalize()
        return replacement

    def translate(self, texts: Sequence[str], source_lang: str, target_lang: str) -> list[str]:
        mapping = self._mapping_for(source_lang, target_lang)
        return [" ".join(self._map_token(t, mapping) for t in text.split()) for text in texts]


def load_stub_translator() -> DictionaryTranslationClient:
    """Stub client over the packaged English-German word list."""
    forward: dict[str, str] = {}
    data = resources.files("selftrain.data").joinpath("stub_translation_en_de.tsv")
    for line in data.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        en, de = line.split("\t")
        forward[en] = de
    return DictionaryTranslationClient(forward)
