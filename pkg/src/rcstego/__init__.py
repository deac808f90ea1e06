"""Range-coding linguistic steganography on exact rational arithmetic.

Two codecs embed bit-strings into token sequences drawn from a language
model's next-token distributions: a vanilla interval narrower (baseline,
measurably distorts the sampling distribution) and the keyed-rotation
variant whose per-step selection law equals the model distribution exactly.
"""

from .codec_rrc import (
    AmbiguousStegotext,
    MessageOutOfRange,
    SessionTrace,
    StepRecord,
    embed_rrc,
    embed_rrc_traced,
    extract_rrc,
    extract_rrc_traced,
    rotate,
    rotate_inverse,
)
from .codec_vanilla import InvalidStegotext, MaxStepsExceeded, embed_vanilla, extract_vanilla
from .errors import CodecError, ProviderError, StegoError
from .exact import (
    AllZero,
    DistributionStep,
    ExactNumber,
    Interval,
    OutOfRange,
    Overflow,
    bits_to_decimal,
    decimal_to_bits,
    locate,
    narrow,
    normalize,
    rescale,
    round_half_down,
    unit_interval,
)
from .keystream import DEFAULT_RESOLUTION, OffsetStream, StegoKey, offset
from .metrics import (
    BenchRecord,
    SessionReport,
    analyze_vanilla_distortion,
    bench,
    rrc_step_kl,
    step_entropy,
)
from .provider import (
    Context,
    EmptyCorpus,
    NgramModel,
    NgramProvider,
    NonDeterministicResponse,
    Provider,
    ProviderDescriptor,
    ProviderExhausted,
    RemoteProvider,
    RemoteUnavailable,
    TableProvider,
    TokenNotInSupport,
    build_provider,
    token_index_of,
    train_ngram,
)
from .stegotext import dump_stegotext, load_stegotext

__version__ = "0.1.0"
