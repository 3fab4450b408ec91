"""domaincraft: curate domain-adaptive pretraining data.

Pipeline pieces: JSONL corpus ingestion and token accounting, a hashed
n-gram domain classifier, budgeted selection with an educational-value
filter, task-oriented passage synthesis through a chat-model gateway,
two-stage training-manifest planning with LR schedule utilities, and
evaluation metrics (AUC, debiased judge win rate, rewrite density and
diversity).
"""

from .classifier import (
    ClassifierConfig,
    ClassifierError,
    DomainNgramClassifier,
    train,
)
from .config import ConfigError, PipelineConfig
from .corpus import (
    CorpusError,
    CorpusStats,
    Document,
    JsonlCorpusReader,
    count_tokens,
    ingest,
    stats,
    stats_for_file,
)
from .evaluation import (
    EvaluationError,
    JudgeCase,
    LabeledScore,
    RewriteSet,
    WinRateReport,
    compute_auc,
    compute_density,
    compute_diversity,
    judge_rewrites,
    judge_winrate,
)
from .features import Vocabulary, featurize, fnv1a_32, tokenize
from .gateway import (
    GatewayError,
    GenerationParams,
    HttpChatGateway,
    MockChatGateway,
    ModelGateway,
)
from .mixture import (
    MixtureError,
    ScheduleConfig,
    SourceEntry,
    StagePlan,
    cosine_lr,
    plan_two_stage,
    wsd_lr,
)
from .quality import (
    GatewayEducationalScorer,
    HeuristicEducationalScorer,
    QualityScoreError,
    make_scorer,
)
from .selection import (
    QualityFilterResult,
    ScoredDocument,
    SelectionError,
    SelectionPolicy,
    quality_filter,
    score_documents,
    score_stream,
    select,
)
from .synthesis import (
    GenerationFailure,
    GenerationResult,
    PassageParseError,
    PassageRequest,
    ProblemInstance,
    SyntheticPassage,
    SynthesisError,
    TaskDef,
    build_prompt,
    generate,
    generate_batch,
    parse_passage,
    sample_request,
    validate_passage,
)

__version__ = "0.1.0"

__all__ = [
    "ClassifierConfig",
    "ClassifierError",
    "ConfigError",
    "CorpusError",
    "CorpusStats",
    "Document",
    "DomainNgramClassifier",
    "EvaluationError",
    "GatewayEducationalScorer",
    "GatewayError",
    "GenerationFailure",
    "GenerationParams",
    "GenerationResult",
    "HeuristicEducationalScorer",
    "HttpChatGateway",
    "JsonlCorpusReader",
    "JudgeCase",
    "LabeledScore",
    "MixtureError",
    "MockChatGateway",
    "ModelGateway",
    "PassageParseError",
    "PassageRequest",
    "PipelineConfig",
    "ProblemInstance",
    "QualityFilterResult",
    "QualityScoreError",
    "RewriteSet",
    "ScheduleConfig",
    "ScoredDocument",
    "SelectionError",
    "SelectionPolicy",
    "SourceEntry",
    "StagePlan",
    "SyntheticPassage",
    "SynthesisError",
    "TaskDef",
    "Vocabulary",
    "WinRateReport",
    "build_prompt",
    "compute_auc",
    "compute_density",
    "compute_diversity",
    "cosine_lr",
    "count_tokens",
    "featurize",
    "fnv1a_32",
    "generate",
    "generate_batch",
    "ingest",
    "judge_rewrites",
    "judge_winrate",
    "make_scorer",
    "parse_passage",
    "plan_two_stage",
    "quality_filter",
    "sample_request",
    "score_documents",
    "score_stream",
    "select",
    "stats",
    "stats_for_file",
    "tokenize",
    "train",
    "validate_passage",
    "wsd_lr",
]
