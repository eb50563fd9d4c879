"""sonarsim: network-aware tool routing over simulated latency environments.

The package pairs a deterministic latency simulator for virtual MCP-style
tool servers with a routing engine that jointly weighs lexical relevance
and live network health, plus the benchmark harness (metrics, CLI,
scenario/dataset generators) used to compare routing algorithms.
"""

__version__ = "0.1.0"

from .agent import TaskTranscript, TaskTurn, run_task, run_workload, uniform_schedule
from .config import (
    ConfigError,
    FailureConfig,
    LatencyProfileConfig,
    PeriodicityConfig,
    ScenarioConfig,
    format_duration,
    load_scenario,
    parse_duration,
    scenario_from_dict,
)
from .datagen import build_pool, build_scenario, synthesize_tasks
from .experiment import (
    ExperimentConfig,
    ExperimentRun,
    resolve_config,
    run_experiment,
    run_sweep,
)
from .latency import (
    ContractError,
    LatencyEnvironment,
    LatencySeries,
    OutageInterval,
    generate_series,
    sample_outage_intervals,
)
from .metrics import MetricsReport, evaluate, write_report
from .netscore import (
    NetworkScoreBreakdown,
    ScoringParams,
    base_score,
    ewma_predict,
    penalty_high,
    penalty_instability,
    penalty_outage,
    penalty_trend,
    score_latency_history,
)
from .routing import (
    Router,
    RoutingDecision,
    RoutingParams,
    ScoredCandidate,
    TokenOverlapReranker,
    joint_score,
    make_router,
    select_prag,
    select_rag,
    select_rerank,
    select_sonar,
)
from .semantic import (
    ChatCompletionTransformer,
    CorpusStats,
    PassthroughTransformer,
    PreprocessedQuery,
    RuleStubTransformer,
    SemanticCandidate,
    bm25_score,
    build_corpus_stats,
    filter_servers,
    rank_tools,
    softmax,
    transform_query,
)
from .servers import (
    ExecutionResult,
    QueryTask,
    ServerRecord,
    SimulatedExecutor,
    ToolRecord,
    load_pool,
    load_tasks,
    mock_cluster,
    simulate_execution,
)
