"""Zero-shot multi-modal open-domain QA: per-modality retrieval and answer
extraction, rule-based candidate filtering, and LLM answer fusion."""

from .corpus import (
    Modality,
    QuestionRecord,
    Reference,
    ReferenceStore,
    Table,
    ingest_questions,
    ingest_references,
    linearize_table,
)
from .errors import (
    BackendRefusalError,
    BadMagicError,
    ConfigError,
    DimensionMismatchError,
    DuplicateIdError,
    EvalAlignmentError,
    IndexFormatError,
    MoqaError,
    RaggedTableError,
    ReplayMissError,
    SchemaError,
    TransportError,
    TruncatedIndexError,
    UnboundSlotError,
    VersionMismatchError,
    ZeroQueryError,
    ZeroVectorError,
)
from .extraction import (
    AnswerModality,
    CandidateSet,
    RawAnswer,
    answer_from_references,
    cot_answer,
    direct_answer,
)
from .fusion import FinalAnswer, Provenance, fuse, reextract_if_long
from .gateway import (
    BackendKind,
    BackendParams,
    BackendSpec,
    CallCounters,
    ChatExchange,
    HttpTransport,
    MockTransport,
    ModelGateway,
    ResponseCache,
    compute_fingerprint,
)
from .indexing import (
    EmbeddingIndex,
    Metric,
    RetrievedItem,
    RetrievedSet,
    build_index,
    inspect_index,
    load_index,
    save_index,
)
from .metrics import (
    EvalReport,
    answer_recall_kx3,
    build_eval_report,
    exact_match,
    retrieval_metrics,
    token_f1,
)
from .pipeline import (
    AnswerTrace,
    RunConfig,
    RunResult,
    ablate,
    config_from_dict,
    config_from_yaml,
    evaluate,
    run_pipeline,
)
from .prompts import PromptTemplate, default_templates, load_templates, render_prompt
from .strategy import (
    OutcomeKind,
    RulesEnabled,
    StrategyOutcome,
    ValidCandidateSet,
    apply_strategy,
    filter_invalid,
    select_modal_candidate,
)
from .textnorm import PROFILES, NormalizationProfile, get_profile, norm_tokens, normalize

__version__ = "0.1.0"
