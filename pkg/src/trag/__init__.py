"""Table question answering over a corpus: sparse and dense retrieval,
hard-negative mining, marginalized beam decoding, evaluation metrics, and
a CLI plus HTTP service."""

from .backend import BACKEND, NUMBA_ENABLED
from .bm25 import Bm25Index, ScoredHit
from .corpus import (
    QaExample,
    Segment,
    TableDoc,
    linearize,
    load_corpus,
    load_csv_table,
    load_qa,
    segment,
    segment_corpus,
    segment_prefix,
)
from .dense import (
    DenseIndex,
    EmbeddingProvider,
    HashingEmbedder,
    KnnHit,
    RemoteEmbedder,
    embed_local,
)
from .metrics import (
    MetricReport,
    RankedTables,
    answer_metrics,
    combined_report,
    em_f1,
    normalize_answer,
    rank_metrics,
    token_f1,
)
from .mining import MinedNegative, MinerConfig, mine
from .rag import (
    EOS,
    AnswerResult,
    Bm25Retriever,
    DenseRetriever,
    RemoteGenerator,
    RetrievalPrior,
    RetrievedCandidate,
    SerializingGenerator,
    ToyGenerator,
    answer,
    assemble_prompt,
    beam_decode,
    marginalize_step,
    softmax_priors,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
