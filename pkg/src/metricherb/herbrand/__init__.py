"""Herbrand witness search: classical exact covers, sampled continuous covers and nets."""
from .certificate import AlphaContradiction, AlphaEnvelope, CoverNotFound, HerbrandCertificate, WitnessTerm
from .nets import CompactNet, TailReport, ball_samples, compact_epsilon_net, tail_pieces
from .search import (
    FunctionLeavesBall,
    candidate_family,
    cover_definable_function,
    fit_alpha,
    greedy_cover,
    image_centers,
    lambda_grid,
    sample_points,
    search_classical,
    search_continuous,
)
from .targets import TARGETS, Target
from .verify import VerifyReport, verify_certificate, verify_exact, verify_sampled
