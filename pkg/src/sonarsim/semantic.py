"""Query preprocessing and two-stage lexical retrieval.

Scoring is Okapi BM25 with the non-negative IDF form
``ln(1 + (N - n + 0.5) / (n + 0.5))`` and defaults k1 = 1.5, b = 0.75.
Tokenization is lowercase split on non-alphanumerics, no stemming, no
stop words — the simplest reproducible choice, so scores are stable.

Retrieval runs coarse-to-fine: server descriptions filter the pool down to
S candidates, then the union of their tools is ranked by tool-description
score and the top T raw scores are softmax-normalized into a distribution.
"""

from __future__ import annotations

import json
import math
import os
import re
import urllib.error
import urllib.request
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Protocol, Sequence

from .config import ConfigError
from .servers import ServerRecord, ToolRecord

DEFAULT_K1 = 1.5
DEFAULT_B = 0.75

_TOKEN_RE = re.compile(r"[a-z0-9]+")

ENDPOINT_ENV = "SONARSIM_LLM_ENDPOINT"
MODEL_ENV = "SONARSIM_LLM_MODEL"
API_KEY_ENV = "SONARSIM_LLM_API_KEY"


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class CorpusStats:
    """Document-frequency statistics over the collection being ranked."""

    doc_count: int
    avg_doc_len: float
    idf: dict[str, float]


def build_corpus_stats(docs: Sequence[str]) -> CorpusStats:
    if not docs:
        raise ValueError("cannot build corpus statistics over an empty corpus")
    token_lists = [tokenize(d) for d in docs]
    n = len(token_lists)
    df: Counter[str] = Counter()
    for tokens in token_lists:
        df.update(set(tokens))
    idf = {term: math.log(1.0 + (n - count + 0.5) / (count + 0.5)) for term, count in df.items()}
    avg_len = sum(len(t) for t in token_lists) / n
    return CorpusStats(doc_count=n, avg_doc_len=avg_len, idf=idf)


def bm25_score(
    doc: str,
    query: str,
    stats: CorpusStats,
    k1: float = DEFAULT_K1,
    b: float = DEFAULT_B,
) -> float:
    """Okapi score of ``doc`` for ``query``; 0.0 when no query term occurs."""
    doc_tokens = tokenize(doc)
    tf = Counter(doc_tokens)
    doc_len = len(doc_tokens)
    norm = k1 * (1.0 - b + b * doc_len / stats.avg_doc_len) if stats.avg_doc_len > 0 else k1
    score = 0.0
    for term in tokenize(query):
        freq = tf.get(term)
        if not freq:
            continue
        score += stats.idf.get(term, 0.0) * (freq * (k1 + 1.0)) / (freq + norm)
    return score


def softmax(scores: Sequence[float]) -> list[float]:
    """Stabilized softmax; amplifies gaps so clear winners separate cleanly."""
    if not scores:
        return []
    top = max(scores)
    exps = [math.exp(s - top) for s in scores]
    total = sum(exps)
    return [e / total for e in exps]


@dataclass(frozen=True)
class PreprocessedQuery:
    original: str
    canonical: str


class QueryTransformer(Protocol):
    def transform(self, query: str) -> str: ...


def transform_query(query: str, transformer: QueryTransformer) -> PreprocessedQuery:
    """Map a raw query onto a standardized tool-type phrase."""
    return PreprocessedQuery(original=query, canonical=transformer.transform(query))


DEFAULT_FALLBACK_PHRASE = "a general purpose tool"

DEFAULT_RULES: tuple[tuple[str, str], ...] = (
    (
        r"\b(who|what|when|where|which|why|how|search|find|look\s*up|latest|news|"
        r"current|today|price|founded|capital|weather|released?|headquarters|review)\b",
        "a websearch tool",
    ),
)


class RuleStubTransformer:
    """Deterministic keyword-to-tool-type mapper.

    Total: canonical phrases pass through unchanged (idempotence), the
    first matching rule wins, and anything else falls back to the
    configured general-purpose phrase. Rules are regexes; strings that do
    not compile are matched as case-insensitive substrings.
    """

    def __init__(self, rules: Iterable[tuple[str, str]] = DEFAULT_RULES, fallback: str = DEFAULT_FALLBACK_PHRASE):
        if not fallback:
            raise ValueError("fallback phrase must be non-empty")
        self._compiled: list[tuple[re.Pattern | str, str]] = []
        for pattern, canonical in rules:
            try:
                self._compiled.append((re.compile(pattern, re.IGNORECASE), canonical))
            except re.error:
                self._compiled.append((pattern.lower(), canonical))
        self._fallback = fallback
        self._canonical_phrases = {c for _, c in self._compiled} | {fallback}

    @classmethod
    def from_file(cls, path: str | Path) -> "RuleStubTransformer":
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"rule file not found: {p}")
        try:
            data = json.loads(p.read_text(encoding="utf-8"))
        except ValueError as exc:
            raise ConfigError(f"invalid JSON in {p}: {exc}") from None
        patterns = data.get("patterns")
        if not isinstance(patterns, list):
            raise ConfigError("missing 'patterns' array", "patterns")
        rules = []
        for i, entry in enumerate(patterns):
            if not isinstance(entry, dict) or "match" not in entry or "canonical" not in entry:
                raise ConfigError("each pattern needs 'match' and 'canonical'", f"patterns[{i}]")
            rules.append((str(entry["match"]), str(entry["canonical"])))
        return cls(rules=rules, fallback=str(data.get("fallback", DEFAULT_FALLBACK_PHRASE)))

    def transform(self, query: str) -> str:
        text = query.strip()
        if text in self._canonical_phrases:
            return text
        for matcher, canonical in self._compiled:
            if isinstance(matcher, str):
                if matcher in text.lower():
                    return canonical
            elif matcher.search(text):
                return canonical
        return self._fallback


class PassthroughTransformer:
    """Identity transform (translation stub); blank input maps to the fallback."""

    def __init__(self, fallback: str = DEFAULT_FALLBACK_PHRASE):
        self._fallback = fallback

    def transform(self, query: str) -> str:
        text = query.strip()
        return text if text else self._fallback


class TransformerError(RuntimeError):
    """External transformer adapter failed; message carries transport detail."""


class ChatCompletionTransformer:
    """Optional adapter posting a chat-completion request to an external endpoint.

    Endpoint, model, and key come from environment variables
    (SONARSIM_LLM_ENDPOINT / _MODEL / _API_KEY). On any transport failure
    the configured fallback transformer answers instead; with no fallback
    the failure is raised as TransformerError.
    """

    SYSTEM_PROMPT = (
        "Rewrite the user's request as a short tool-type phrase, for example "
        "'a websearch tool'. Reply with the phrase only."
    )

    def __init__(
        self,
        endpoint: str | None = None,
        model: str | None = None,
        api_key: str | None = None,
        timeout_s: float = 10.0,
        fallback: QueryTransformer | None = None,
    ):
        self.endpoint = endpoint or os.environ.get(ENDPOINT_ENV)
        self.model = model or os.environ.get(MODEL_ENV, "")
        self.api_key = api_key or os.environ.get(API_KEY_ENV, "")
        self.timeout_s = timeout_s
        self.fallback = fallback
        if not self.endpoint:
            raise ConfigError(f"external transformer requires {ENDPOINT_ENV} to be set")

    def _post(self, payload: dict) -> dict:
        request = urllib.request.Request(
            self.endpoint,
            data=json.dumps(payload).encode("utf-8"),
            headers={
                "Content-Type": "application/json",
                **({"Authorization": f"Bearer {self.api_key}"} if self.api_key else {}),
            },
            method="POST",
        )
        with urllib.request.urlopen(request, timeout=self.timeout_s) as response:
            return json.loads(response.read().decode("utf-8"))

    def transform(self, query: str) -> str:
        payload = {
            "model": self.model,
            "messages": [
                {"role": "system", "content": self.SYSTEM_PROMPT},
                {"role": "user", "content": query},
            ],
        }
        try:
            body = self._post(payload)
            canonical = body["choices"][0]["message"]["content"].strip()
            if not canonical:
                raise KeyError("empty completion")
            return canonical
        except Exception as exc:  # noqa: BLE001 - every transport fault falls back
            if self.fallback is not None:
                return self.fallback.transform(query)
            raise TransformerError(f"chat-completion request failed: {exc!r}") from exc


@dataclass(frozen=True)
class SemanticCandidate:
    """One tool in the candidate set with raw and softmax-normalized scores."""

    tool_id: str
    server_id: str
    raw_score: float
    normalized: float


def filter_servers(q_pre: str, pool: Sequence[ServerRecord], s: int) -> list[ServerRecord]:
    """Top-S servers by description score; ties break by ascending server_id."""
    if not (1 <= s <= len(pool)):
        raise ValueError(f"server filter size {s} out of range [1, {len(pool)}]")
    stats = build_corpus_stats([srv.description for srv in pool])
    scored = sorted(
        pool,
        key=lambda srv: (-bm25_score(srv.description, q_pre, stats), srv.server_id),
    )
    return scored[:s]


def rank_tools(
    q_pre: str,
    candidate_servers: Sequence[ServerRecord],
    t: int,
) -> list[SemanticCandidate]:
    """Top-T tools over the candidates' union tool set, softmax-normalized.

    T larger than the union clamps down to it; ties break by
    (server_id, tool_id). The softmax runs over exactly the returned raw
    scores, so normalized values sum to 1.
    """
    if not candidate_servers:
        raise ValueError("candidate server set is empty")
    if t < 1:
        raise ValueError(f"tool filter size {t} must be >= 1")
    union: list[tuple[ServerRecord, ToolRecord]] = [
        (server, tool) for server in candidate_servers for tool in server.tools
    ]
    if not union:
        raise ValueError("candidate servers host no tools")
    stats = build_corpus_stats([tool.description for _, tool in union])
    scored = sorted(
        union,
        key=lambda pair: (
            -bm25_score(pair[1].description, q_pre, stats),
            pair[0].server_id,
            pair[1].tool_id,
        ),
    )
    top = scored[: min(t, len(scored))]
    raw = [bm25_score(tool.description, q_pre, stats) for _, tool in top]
    normalized = softmax(raw)
    return [
        SemanticCandidate(
            tool_id=tool.tool_id,
            server_id=server.server_id,
            raw_score=raw_i,
            normalized=norm_i,
        )
        for (server, tool), raw_i, norm_i in zip(top, raw, normalized)
    ]
