"""Blinded A/B evaluation harness: randomized pair manifests, an HTTP
annotation service, preference/agreement statistics, and model-judge
forced-choice comparisons."""

from .pairs import NameMismatch, PairManifest, PairRecord, make_pairs
from .stats import (
    AgreementMatrix,
    DegenerateMarginals,
    DuplicateResponse,
    NoLikertData,
    PreferenceAggregate,
    Response,
    UnknownPair,
    aggregate_mos,
    aggregate_preferences,
    append_response,
    cohens_kappa,
    load_responses,
)
from .judge import JudgeParseFailure, aggregate_judge, judge_dce, judge_manifest
from .service import AnnotationService, serve_annotation

__all__ = [
    "AgreementMatrix",
    "AnnotationService",
    "DegenerateMarginals",
    "DuplicateResponse",
    "JudgeParseFailure",
    "NameMismatch",
    "NoLikertData",
    "PairManifest",
    "PairRecord",
    "PreferenceAggregate",
    "Response",
    "UnknownPair",
    "aggregate_judge",
    "aggregate_mos",
    "aggregate_preferences",
    "append_response",
    "cohens_kappa",
    "judge_dce",
    "judge_manifest",
    "load_responses",
    "make_pairs",
    "serve_annotation",
]
