"""fxsentibench: benchmark zero-shot LLM prompts for forex news sentiment."""

__version__ = "0.1.0"

from .corpus import (  # noqa: F401
    Corpus,
    DEFAULT_UNIVERSE,
    HeadlineRecord,
    SentimentLabel,
    TokenStats,
    filter_without_pair_mention,
    group_by_day,
    group_by_ticker_day,
    load_corpus,
    save_corpus,
    token_stats,
)
from .prompts import (  # noqa: F401
    Granularity,
    OutputKind,
    PromptTemplate,
    RenderedPrompt,
    builtin_registry,
    plan_requests,
    render,
)
from .gateway import (  # noqa: F401
    ChatExchange,
    Fixture,
    GenerationParams,
    LiveBackend,
    ReplayBackend,
    RetryPolicy,
    complete,
    record_fixture,
    run_batch,
)
from .parsing import (  # noqa: F401
    ParsedSentiment,
    parse_class,
    parse_json_map,
    parse_numeric,
    parse_response,
)
from .signals import (  # noqa: F401
    DailyReturn,
    DailySentiment,
    JoinedSeries,
    SentimentObservation,
    aggregate_daily,
    compute_return,
    finbert_class,
    finbert_score,
    join_sentiment_returns,
    load_market,
    load_probabilities,
)
from .evaluation import (  # noqa: F401
    ClassificationMetrics,
    ConfusionMatrix,
    CostReport,
    ZeroPolicy,
    classification_metrics,
    correlation_matrix,
    cost_report,
    directional_accuracy,
    filtered_evaluation,
    pearson,
    project_daily_cost,
    s_mae,
)
