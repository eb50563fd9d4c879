"""Routing algorithms: joint semantic/network selection and the baselines.

All four algorithms share the two-stage retrieval pipeline and produce a
``RoutingDecision`` whose candidates carry the semantic score C, the
network score N, and the joint score actually ranked. The selected pair is
always the argmax of the joint score with ties broken by higher C, then
ascending server_id, then ascending tool_id.

* ``sonar``       joint score alpha*C + beta*N over the candidates' hosts
* ``prag``        tool-prediction preprocessing, semantic-only (sonar at alpha=1)
* ``rag``         no preprocessing, semantic-only over the raw query
* ``rerank_rag``  prag candidates re-picked by a reranker
"""

from __future__ import annotations

import re
import time
from dataclasses import dataclass
from typing import Protocol, Sequence

from .config import ConfigError
from .latency import LatencyEnvironment
from .netscore import ScoringParams, score_latency_history
from .semantic import (
    PassthroughTransformer,
    QueryTransformer,
    RuleStubTransformer,
    SemanticCandidate,
    filter_servers,
    rank_tools,
    tokenize,
    transform_query,
)
from .servers import ServerRecord, ToolRecord

ALGORITHMS = ("sonar", "rag", "prag", "rerank_rag")

WEIGHT_SUM_TOLERANCE = 1e-9


@dataclass(frozen=True)
class RoutingParams:
    alpha: float = 0.5
    beta: float = 0.5
    server_filter: int = 5
    tool_filter: int = 10
    algorithm: str = "sonar"

    def __post_init__(self) -> None:
        if self.alpha < 0 or self.beta < 0:
            raise ConfigError("alpha and beta must be non-negative")
        if abs(self.alpha + self.beta - 1.0) > WEIGHT_SUM_TOLERANCE:
            raise ConfigError(f"alpha + beta must equal 1, got {self.alpha + self.beta}")
        if self.server_filter < 1:
            raise ConfigError("server filter size must be >= 1")
        if self.tool_filter < 1:
            raise ConfigError("tool filter size must be >= 1")
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}; choose from {ALGORITHMS}")


@dataclass(frozen=True)
class ScoredCandidate:
    tool_id: str
    server_id: str
    semantic: float
    network: float
    joint: float


@dataclass(frozen=True)
class RoutingDecision:
    selected_server: str
    selected_tool: str
    candidates: tuple[ScoredCandidate, ...]
    selection_wall_time_ms: float
    algorithm: str
    canonical_query: str
    fallback_used: bool = False


def joint_score(c: float, n: float, alpha: float, beta: float) -> float:
    """Linear combination alpha*C + beta*N with validated weights."""
    if abs(alpha + beta - 1.0) > WEIGHT_SUM_TOLERANCE:
        raise ValueError(f"alpha + beta must equal 1, got {alpha + beta}")
    return alpha * c + beta * n


def _pick(candidates: Sequence[ScoredCandidate]) -> ScoredCandidate:
    """Argmax by joint score; ties by higher C, then server_id, then tool_id."""
    return min(candidates, key=lambda c: (-c.joint, -c.semantic, c.server_id, c.tool_id))


def _decision(
    candidates: list[ScoredCandidate],
    started: float,
    algorithm: str,
    canonical: str,
    fallback_used: bool = False,
) -> RoutingDecision:
    if not candidates:
        raise ValueError("routing produced an empty candidate set")
    pick = _pick(candidates)
    return RoutingDecision(
        selected_server=pick.server_id,
        selected_tool=pick.tool_id,
        candidates=tuple(candidates),
        selection_wall_time_ms=(time.perf_counter() - started) * 1000.0,
        algorithm=algorithm,
        canonical_query=canonical,
        fallback_used=fallback_used,
    )


def _semantic_stage(
    canonical: str, pool: Sequence[ServerRecord], params: RoutingParams
) -> list[SemanticCandidate]:
    servers = filter_servers(canonical, pool, min(params.server_filter, len(pool)))
    return rank_tools(canonical, servers, params.tool_filter)


def select_sonar(
    query: str,
    pool: Sequence[ServerRecord],
    env: LatencyEnvironment,
    t: int,
    params: RoutingParams,
    scoring: ScoringParams,
    transformer: QueryTransformer,
) -> RoutingDecision:
    """Joint selection: semantic candidates scored against their hosts' health."""
    started = time.perf_counter()
    if not pool:
        raise ValueError("server pool is empty")
    qp = transform_query(query, transformer)
    semantic = _semantic_stage(qp.canonical, pool, params)
    network: dict[str, float] = {}
    for cand in semantic:
        if cand.server_id not in network:
            history = env.series_for(cand.server_id).history_up_to(t)
            network[cand.server_id] = score_latency_history(history, scoring).final
    candidates = [
        ScoredCandidate(
            tool_id=c.tool_id,
            server_id=c.server_id,
            semantic=c.normalized,
            network=network[c.server_id],
            joint=joint_score(c.normalized, network[c.server_id], params.alpha, params.beta),
        )
        for c in semantic
    ]
    return _decision(candidates, started, "sonar", qp.canonical)


def select_prag(
    query: str,
    pool: Sequence[ServerRecord],
    params: RoutingParams,
    transformer: QueryTransformer,
) -> RoutingDecision:
    """Prediction-enhanced semantic selection; identical to sonar at alpha=1."""
    started = time.perf_counter()
    if not pool:
        raise ValueError("server pool is empty")
    qp = transform_query(query, transformer)
    semantic = _semantic_stage(qp.canonical, pool, params)
    candidates = [
        ScoredCandidate(
            tool_id=c.tool_id,
            server_id=c.server_id,
            semantic=c.normalized,
            network=0.0,
            joint=c.normalized,
        )
        for c in semantic
    ]
    return _decision(candidates, started, "prag", qp.canonical)


def select_rag(
    query: str,
    pool: Sequence[ServerRecord],
    params: RoutingParams,
    translator: QueryTransformer | None = None,
) -> RoutingDecision:
    """Semantic selection over the raw query (pass-through translation only)."""
    started = time.perf_counter()
    if not pool:
        raise ValueError("server pool is empty")
    qp = transform_query(query, translator or PassthroughTransformer())
    semantic = _semantic_stage(qp.canonical, pool, params)
    # selection by raw score; softmax preserves the order, so joint = C
    candidates = [
        ScoredCandidate(
            tool_id=c.tool_id,
            server_id=c.server_id,
            semantic=c.normalized,
            network=0.0,
            joint=c.normalized,
        )
        for c in semantic
    ]
    return _decision(candidates, started, "rag", qp.canonical)


class Reranker(Protocol):
    def rerank(
        self, canonical_query: str, candidates: Sequence[tuple[SemanticCandidate, ToolRecord]]
    ) -> int:
        """Return the index of the preferred candidate."""
        ...


class TokenOverlapReranker:
    """Deterministic reranker stub: most distinct tokens shared with the query.

    Ties keep the incoming (semantic) order, so a tie falls back to the
    prediction-enhanced pick.
    """

    def rerank(
        self, canonical_query: str, candidates: Sequence[tuple[SemanticCandidate, ToolRecord]]
    ) -> int:
        query_tokens = set(tokenize(canonical_query))
        best_index = 0
        best_overlap = -1
        for i, (_, tool) in enumerate(candidates):
            overlap = len(query_tokens & set(tokenize(tool.description)))
            if overlap > best_overlap:
                best_index, best_overlap = i, overlap
        return best_index


class RerankerError(RuntimeError):
    """External reranker adapter failed."""


class ChatCompletionReranker:
    """Optional adapter asking an external chat endpoint to pick a candidate.

    Shares the transformer adapter's environment variables. Any transport
    or parse failure raises; ``select_rerank`` then falls back to the
    semantic pick and flags the decision.
    """

    SYSTEM_PROMPT = (
        "You rank tool candidates. Reply with only the number of the best "
        "candidate for the request."
    )

    def __init__(
        self,
        endpoint: str | None = None,
        model: str | None = None,
        api_key: str | None = None,
        timeout_s: float = 10.0,
    ):
        import os

        from .semantic import API_KEY_ENV, ENDPOINT_ENV, MODEL_ENV

        self.endpoint = endpoint or os.environ.get(ENDPOINT_ENV)
        self.model = model or os.environ.get(MODEL_ENV, "")
        self.api_key = api_key or os.environ.get(API_KEY_ENV, "")
        self.timeout_s = timeout_s
        if not self.endpoint:
            raise ConfigError(f"external reranker requires {ENDPOINT_ENV} to be set")

    def _post(self, payload: dict) -> dict:
        import json as _json
        import urllib.request

        request = urllib.request.Request(
            self.endpoint,
            data=_json.dumps(payload).encode("utf-8"),
            headers={
                "Content-Type": "application/json",
                **({"Authorization": f"Bearer {self.api_key}"} if self.api_key else {}),
            },
            method="POST",
        )
        with urllib.request.urlopen(request, timeout=self.timeout_s) as response:
            return _json.loads(response.read().decode("utf-8"))

    def rerank(
        self, canonical_query: str, candidates: Sequence[tuple[SemanticCandidate, ToolRecord]]
    ) -> int:
        listing = "\n".join(
            f"{i}: {tool.description}" for i, (_, tool) in enumerate(candidates)
        )
        payload = {
            "model": self.model,
            "messages": [
                {"role": "system", "content": self.SYSTEM_PROMPT},
                {"role": "user", "content": f"Request: {canonical_query}\nCandidates:\n{listing}"},
            ],
        }
        body = self._post(payload)
        content = body["choices"][0]["message"]["content"]
        match = re.search(r"\d+", content)
        if match is None:
            raise RerankerError(f"unparseable reranker reply: {content!r}")
        return int(match.group())


def select_rerank(
    query: str,
    pool: Sequence[ServerRecord],
    params: RoutingParams,
    transformer: QueryTransformer,
    reranker: Reranker | None = None,
) -> RoutingDecision:
    """Rerank the prediction-enhanced candidate set.

    The reranker's choice becomes the joint ranking (choice scored 1,
    everything else 0). If the reranker raises, the semantic pick stands
    and the decision is flagged as a fallback.
    """
    started = time.perf_counter()
    if not pool:
        raise ValueError("server pool is empty")
    qp = transform_query(query, transformer)
    semantic = _semantic_stage(qp.canonical, pool, params)
    tools = {(s.server_id, t.tool_id): t for s in pool for t in s.tools}
    paired = [(c, tools[(c.server_id, c.tool_id)]) for c in semantic]
    fallback_used = False
    try:
        choice = (reranker or TokenOverlapReranker()).rerank(qp.canonical, paired)
        if not (0 <= choice < len(paired)):
            raise RerankerError(f"reranker returned index {choice} for {len(paired)} candidates")
    except Exception:  # noqa: BLE001 - adapter faults fall back to the semantic pick
        choice = None
        fallback_used = True
    candidates = [
        ScoredCandidate(
            tool_id=c.tool_id,
            server_id=c.server_id,
            semantic=c.normalized,
            network=0.0,
            joint=(
                c.normalized
                if choice is None
                else (1.0 if i == choice else 0.0)
            ),
        )
        for i, c in enumerate(semantic)
    ]
    return _decision(candidates, started, "rerank_rag", qp.canonical, fallback_used=fallback_used)


class Router:
    """Pluggable routing interface: bind an algorithm to a pool and environment."""

    def __init__(
        self,
        pool: Sequence[ServerRecord],
        env: LatencyEnvironment,
        params: RoutingParams,
        scoring: ScoringParams | None = None,
        transformer: QueryTransformer | None = None,
        reranker: Reranker | None = None,
    ):
        self.pool = list(pool)
        self.env = env
        self.params = params
        self.scoring = scoring or ScoringParams()
        self.transformer = transformer or RuleStubTransformer()
        self.reranker = reranker
        if params.algorithm == "sonar":
            missing = [s.server_id for s in self.pool if not env.has_series(s.server_id)]
            if missing:
                raise ConfigError(f"no latency series for servers: {', '.join(sorted(missing))}")

    @property
    def name(self) -> str:
        return self.params.algorithm

    def route(self, query: str, t: int) -> RoutingDecision:
        algorithm = self.params.algorithm
        if algorithm == "sonar":
            return select_sonar(
                query, self.pool, self.env, t, self.params, self.scoring, self.transformer
            )
        if algorithm == "prag":
            return select_prag(query, self.pool, self.params, self.transformer)
        if algorithm == "rag":
            return select_rag(query, self.pool, self.params)
        if algorithm == "rerank_rag":
            return select_rerank(query, self.pool, self.params, self.transformer, self.reranker)
        raise ConfigError(f"unknown algorithm {algorithm!r}")


def make_router(
    pool: Sequence[ServerRecord],
    env: LatencyEnvironment,
    params: RoutingParams,
    scoring: ScoringParams | None = None,
    transformer: QueryTransformer | None = None,
    reranker: Reranker | None = None,
) -> Router:
    return Router(pool, env, params, scoring, transformer, reranker)
