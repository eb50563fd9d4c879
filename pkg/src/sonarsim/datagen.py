"""Standard scenario files, server pools, and synthetic web-search workloads.

The stock experiment topology is 15 servers: five websearch-capable
servers (named after the roles they play in the hybrid scenario) and ten
distractors covering unrelated domains. Websearch descriptions carry the
token "websearch" so the coarse filter separates them from distractors;
the first variant is deliberately the most keyword-dense so runs have an
unambiguous semantic front-runner.
"""

from __future__ import annotations

import math

from .rng import RandomStream, derive_seed
from .servers import QueryTask, ServerRecord, ToolRecord, mock_cluster, validate_pool

SCENARIO_KINDS = ("ideal", "hybrid", "fluctuating")

CAPABLE_SERVER_NAMES = (
    "High_Latency_Server",
    "Low_Latency_Server",
    "Intermittent_Outage_Server",
    "Fluctuate_Burst_Server",
    "High_Jitter_Server",
)

# Role profiles of the hybrid scenario, cycled when more capable servers
# are requested. The fluctuating-burst role ships with an hour-scale
# period so a 24 h horizon sees full cycles.
_HYBRID_PROFILES: tuple[dict, ...] = (
    {"base_latency": "350ms", "std_dev": "20ms"},
    {"base_latency": "30ms", "std_dev": "5ms"},
    {
        "base_latency": "30ms",
        "std_dev": "5ms",
        "failure_config": {
            "type": "intermittent",
            "probability": 0.5,
            "duration": ["30min", "100min"],
            "severity": ["1000ms", "1000ms"],
        },
    },
    {
        "base_latency": "150ms",
        "std_dev": "20ms",
        "periodicity": {"amplitude": "200ms", "period": "4h", "phase_shift": 0},
    },
    {"base_latency": "100ms", "std_dev": "70ms"},
)

_IDEAL_PROFILE = {"base_latency": "30ms", "std_dev": "5ms"}

WEBSEARCH_SERVER_DESCRIPTIONS = (
    "A websearch tool server running websearch over the live web: crawls result pages "
    "and returns ranked snippets with source links for any web search request.",
    "Websearch provider backed by a large crawl index, supporting query expansion and "
    "concise snippets from live pages.",
    "Hosted websearch endpoint with a freshness-aware index for retrieving current "
    "information from the internet, including news articles and reference pages.",
    "General websearch service offering a ranked view over web documents and feeds.",
    "Lookup service exposing websearch operations for a broad range of open-domain "
    "questions and fact retrieval.",
)

WEBSEARCH_TOOL_DESCRIPTIONS: tuple[tuple[str, str], ...] = (
    (
        "A websearch tool: run a websearch query over the live web and return the top "
        "ranked result snippets with URLs.",
        "A websearch tool for news: issue a websearch across current news articles and "
        "return headline snippets.",
    ),
    (
        "Execute a websearch over indexed web pages and return matching snippets.",
        "Websearch across recent news feeds, returning dated headline excerpts.",
    ),
    (
        "Perform websearch retrieval for a query string, returning relevant page excerpts.",
        "Query news sources through websearch and collect summary lines.",
    ),
    (
        "Websearch execution returning ranked document snippets.",
        "News-focused websearch returning fresh article excerpts.",
    ),
    (
        "Submit a websearch request and collect result snippets.",
        "Scan news coverage via websearch for a topic phrase.",
    ),
)

# (capability, server description, [(tool_id, tool name, tool description)])
# Some descriptions deliberately share surface tokens with raw user queries
# ("company", "price", "reviews") so unpreprocessed retrieval can be misled.
DISTRACTOR_BLUEPRINTS: tuple[tuple[str, str, tuple[tuple[str, str, str], ...]], ...] = (
    (
        "code_edit",
        "A source code modification server for refactoring and patch generation in large repositories.",
        (("apply_patch", "apply patch", "Apply a unified diff to files in the working tree."),),
    ),
    (
        "product_search",
        "A product catalog server for finding goods, company listings, and price comparisons on Amazon.",
        (("find_product", "find product", "Find a product listing with price and seller company details."),),
    ),
    (
        "database",
        "A SQL database gateway executing read-only analytical queries over warehouse tables.",
        (("run_sql", "run sql", "Execute a SQL SELECT statement and return rows."),),
    ),
    (
        "filesystem",
        "A file management server for reading, writing, and organizing documents in project folders.",
        (("read_file", "read file", "Read a document from the managed folder tree."),),
    ),
    (
        "calendar",
        "A calendar scheduling server that books meetings and checks participant availability.",
        (("book_meeting", "book meeting", "Create a calendar event for the given participants."),),
    ),
    (
        "image_edit",
        "An image processing server for resizing, cropping, and format conversion of a picture batch.",
        (("resize_image", "resize image", "Resize a picture to target dimensions."),),
    ),
    (
        "translation",
        "A document translation server converting text between supported language pairs.",
        (("translate_text", "translate text", "Translate a passage into the requested language."),),
    ),
    (
        "email",
        "An email automation server that drafts, sends, and labels messages in a mailbox.",
        (("send_email", "send email", "Send a drafted message to listed recipients."),),
    ),
    (
        "weather_station",
        "A private weather station server reporting sensor readings from local hardware.",
        (("read_sensors", "read sensors", "Report temperature and humidity from station sensors."),),
    ),
    (
        "reviews_db",
        "A customer reviews archive with ratings lookup for registered products of a company.",
        (("lookup_rating", "lookup rating", "Fetch archived customer reviews and ratings for an item."),),
    ),
)

_QUERY_TEMPLATES = (
    "Who founded the first {noun} company?",
    "What is the latest news about {noun}?",
    "When was the {noun} standard first released?",
    "Where is the headquarters of the largest {noun} company located?",
    "Find the current market price of {noun}.",
    "Look up recent reviews of the most popular {noun}.",
    "What happened today in the {noun} industry?",
    "Search for the capital city with the biggest {noun} market.",
)

_QUERY_NOUNS = (
    "luxury goods",
    "semiconductor",
    "electric vehicle",
    "database software",
    "cloud computing",
    "renewable energy",
    "smartphone",
    "shipping container",
    "pharmaceutical",
    "video game",
    "satellite internet",
    "coffee trading",
)


def capable_server_name(index: int) -> str:
    if index < len(CAPABLE_SERVER_NAMES):
        return CAPABLE_SERVER_NAMES[index]
    return f"Websearch_Server_{index + 1:02d}"


def distractor_server_name(index: int) -> str:
    return f"Distractor_Server_{index + 1:02d}"


def build_scenario(kind: str, n_capable: int = 5, n_distractor: int = 10, seed: int = 0) -> dict:
    """JSON-ready scenario document for the standard topology.

    ``ideal``: every server at 30 +/- 5 ms. ``hybrid``: capable servers
    cycle the five role profiles, distractors stay ideal. ``fluctuating``:
    capable servers ride a 150 +/- 20 ms sinusoid (amplitude 200 ms,
    period 4 h) with evenly spaced phase offsets.
    """
    if kind not in SCENARIO_KINDS:
        raise ValueError(f"unknown scenario kind {kind!r}; choose from {SCENARIO_KINDS}")
    if n_capable < 1 or n_distractor < 0:
        raise ValueError("need at least one capable server and non-negative distractors")
    profiles: dict[str, dict] = {}
    for i in range(n_capable):
        name = capable_server_name(i)
        if kind == "ideal":
            profiles[name] = dict(_IDEAL_PROFILE)
        elif kind == "hybrid":
            profiles[name] = _HYBRID_PROFILES[i % len(_HYBRID_PROFILES)]
        else:
            phase = round(2.0 * math.pi * i / n_capable, 10)
            profiles[name] = {
                "base_latency": "150ms",
                "std_dev": "20ms",
                "periodicity": {"amplitude": "200ms", "period": "4h", "phase_shift": phase},
            }
    for i in range(n_distractor):
        profiles[distractor_server_name(i)] = dict(_IDEAL_PROFILE)
    return {"last_time": "24h", f"{kind}_scenario": profiles}


def build_pool(n_capable: int = 5, n_distractor: int = 10, seed: int = 0) -> list[ServerRecord]:
    """The standard server pool: diversified websearch clones plus distractors."""
    if n_capable < 1:
        raise ValueError("need at least one capable server")
    template = ServerRecord(
        server_id="websearch",
        name="Websearch Server",
        description=WEBSEARCH_SERVER_DESCRIPTIONS[0],
        capability="websearch",
        expertise=0.6,
        tools=(
            ToolRecord("search_web", "search web", WEBSEARCH_TOOL_DESCRIPTIONS[0][0]),
            ToolRecord("news_lookup", "news lookup", WEBSEARCH_TOOL_DESCRIPTIONS[0][1]),
        ),
    )
    clones = mock_cluster(template, n_capable, list(WEBSEARCH_SERVER_DESCRIPTIONS), seed)
    expertise_stream = RandomStream(derive_seed(seed, "expertise"))
    pool: list[ServerRecord] = []
    for i, clone in enumerate(clones):
        name = capable_server_name(i)
        search_desc, news_desc = WEBSEARCH_TOOL_DESCRIPTIONS[i % len(WEBSEARCH_TOOL_DESCRIPTIONS)]
        pool.append(
            ServerRecord(
                server_id=name,
                name=name.replace("_", " "),
                description=clone.description,
                capability="websearch",
                expertise=round(expertise_stream.uniform(0.5, 0.7), 4),
                tools=(
                    ToolRecord("search_web", "search web", search_desc),
                    ToolRecord("news_lookup", "news lookup", news_desc),
                ),
            )
        )
    for i in range(n_distractor):
        capability, description, tools = DISTRACTOR_BLUEPRINTS[i % len(DISTRACTOR_BLUEPRINTS)]
        name = distractor_server_name(i)
        suffix = "" if i < len(DISTRACTOR_BLUEPRINTS) else f" (replica {i // len(DISTRACTOR_BLUEPRINTS) + 1})"
        pool.append(
            ServerRecord(
                server_id=name,
                name=name.replace("_", " "),
                description=description + suffix,
                capability=capability,
                expertise=round(expertise_stream.uniform(0.3, 0.7), 4),
                tools=tuple(ToolRecord(*t) for t in tools),
            )
        )
    validate_pool(pool)
    return pool


def synthesize_tasks(n: int, seed: int = 0) -> list[QueryTask]:
    """Deterministic web-search style workload from question templates."""
    if n < 1:
        raise ValueError("need at least one task")
    stream = RandomStream(derive_seed(seed, "tasks"))
    tasks = []
    for i in range(n):
        template = _QUERY_TEMPLATES[stream.int_below(len(_QUERY_TEMPLATES))]
        noun = _QUERY_NOUNS[stream.int_below(len(_QUERY_NOUNS))]
        tasks.append(
            QueryTask(
                task_id=f"task_{i:04d}",
                query=template.format(noun=noun),
                required_capability="websearch",
            )
        )
    return tasks
