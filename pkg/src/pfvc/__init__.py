"""Progressive-granularity face video coding: tokens, entropy coding, container, synthesis."""

from .bitstream import (BitstreamError, ContainerHeader, InterFrameRecord, measure_bitrate,
                        read_container, write_container)
from .codec import DecodeStats, EncodeConfig, EncodeStats, decode, encode, layer_costs
from .entropy import ContextSet, CorruptBitstreamError, decode_symbols, encode_symbols
from .media import Frame, Sequence, load_raw_sequence, read_sequence, synth_sequence, write_sequence
from .metrics import psnr, sequence_quality, ssim
from .motion import (DenseMotionField, OcclusionMap, Reconstructor, predict_motion,
                     predict_occlusion, reconstruct_frame, warp)
from .rate import BandwidthTrace, CostEstimator, RdPoint, convex_hull_rd, select_granularity, simulate_channel
from .report import RdReport, rd_report
from .schedule import (RngState, TrainingSchedule, aggregate_loss, default_schedule, sample_granularity,
                       validate_schedule)
from .token_codec import PredictorState, QuantConfig, decode_frame, encode_frame, init_state
from .tokenizer import (DEFAULT_LADDER, GranularityLadder, MotionFeature, TokenVector, detokenize,
                        extract_motion_feature, tokenize)

__version__ = "0.1.0"
