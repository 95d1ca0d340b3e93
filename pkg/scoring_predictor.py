"""Goal-scoring probability of a ball state: rows for every non-final chain action."""

from typing import Any, Dict, List, Optional, Sequence

from loguru import logger

try:
    from .chain_builder import Action, PossessionChain, label_chain
    from .errors import ValuationError
    from .ml_core import Dataset, FeatureKind, FeatureSpec, ModelArtifact, PredictionStats, predict_proba
except ImportError:
    from chain_builder import Action, PossessionChain, label_chain
    from errors import ValuationError
    from ml_core import Dataset, FeatureKind, FeatureSpec, ModelArtifact, PredictionStats, predict_proba


# Known only once the chain is over; valuation is retrospective so it stays in.
LEAKAGE_FEATURE = "actions_to_chain_end"
NO_PREVIOUS_ACTION = "none"

SCORER_SCHEMA = [
    FeatureSpec("action_type", FeatureKind.CATEGORICAL),
    FeatureSpec("under_pressure", FeatureKind.CATEGORICAL),
    FeatureSpec("previous_action_type", FeatureKind.CATEGORICAL),
    FeatureSpec("play_pattern", FeatureKind.CATEGORICAL),
    FeatureSpec("x", FeatureKind.DISCRETE),
    FeatureSpec("y", FeatureKind.DISCRETE),
    FeatureSpec(LEAKAGE_FEATURE, FeatureKind.DISCRETE),
    FeatureSpec("action_number", FeatureKind.DISCRETE),
    FeatureSpec("timestamp", FeatureKind.CONTINUOUS),
    FeatureSpec("duration", FeatureKind.CONTINUOUS),
    FeatureSpec("cumulative_duration_before", FeatureKind.CONTINUOUS),
]
ABLATED_SCHEMA = [f for f in SCORER_SCHEMA if f.name != LEAKAGE_FEATURE]


def state_features(chain: PossessionChain, k: int) -> Dict[str, Any]:
    """Features of action k (1-based, non-final) of `chain`."""
    if not 1 <= k < chain.length:
        raise ValuationError(
            f"action {k} of chain {chain.key} is not a non-final action (K={chain.length})",
            {"chain": chain.key, "k": k},
        )
    action = chain.actions[k - 1]
    event = action.event
    previous = chain.actions[k - 2].event.event_type.value if k > 1 else NO_PREVIOUS_ACTION
    return {
        "action_type": event.event_type.value,
        "under_pressure": str(bool(event.under_pressure)),
        "previous_action_type": previous,
        "play_pattern": event.play_pattern,
        "x": int(round(action.start_state.x)),
        "y": int(round(action.start_state.y)),
        LEAKAGE_FEATURE: chain.length - k,
        "action_number": k,
        "timestamp": event.timestamp,
        "duration": event.duration,
        "cumulative_duration_before": sum(a.event.duration for a in chain.actions[:k - 1]),
    }


def _chain_records(chain: PossessionChain, ablate: bool) -> List[Dict[str, Any]]:
    records = []
    label = label_chain(chain)
    for k in range(1, chain.length):
        record = state_features(chain, k)
        if ablate:
            del record[LEAKAGE_FEATURE]
        record["row_id"] = f"{chain.key}:{k}"
        record["label"] = label
        records.append(record)
    return records


def build_scorer_dataset(chains: Sequence[PossessionChain], ablate: bool = False) -> Dataset:
    """One row per non-final action; the label is the chain's outcome."""
    records = [r for chain in chains for r in _chain_records(chain, ablate)]
    dataset = Dataset.from_records(ABLATED_SCHEMA if ablate else SCORER_SCHEMA, records)
    logger.info(f"📈 Scorer dataset: {len(dataset)} actions from {len(chains)} chains, "
                f"prevalence {dataset.prevalence:.3f}" + (" (chain-length feature ablated)" if ablate else ""))
    return dataset


def _uses_leakage_feature(m: ModelArtifact) -> bool:
    return any(f.name == LEAKAGE_FEATURE for f in m.schema)


def score_chain_states(m: ModelArtifact, chains: Sequence[PossessionChain],
                       stats: Optional[PredictionStats] = None) -> Dict[str, List[float]]:
    """P(score | s_k) for k = 1..K-1 of every chain, keyed by chain key."""
    ablate = not _uses_leakage_feature(m)
    records = [r for chain in chains for r in _chain_records(chain, ablate)]
    if not records:
        return {chain.key: [] for chain in chains}
    dataset = Dataset.from_records(ABLATED_SCHEMA if ablate else SCORER_SCHEMA, records)
    probabilities = predict_proba(m, dataset, stats).tolist()

    scores: Dict[str, List[float]] = {}
    position = 0
    for chain in chains:
        count = chain.length - 1
        scores[chain.key] = probabilities[position:position + count]
        position += count
    return scores


def score_state(m: ModelArtifact, action: Action, chain: PossessionChain) -> float:
    """P(score | s_k) for one non-final action of `chain`."""
    record = state_features(chain, action.k)
    if not _uses_leakage_feature(m):
        del record[LEAKAGE_FEATURE]
    record["row_id"] = f"{chain.key}:{action.k}"
    record["label"] = 0
    schema = SCORER_SCHEMA if _uses_leakage_feature(m) else ABLATED_SCHEMA
    return float(predict_proba(m, Dataset.from_records(schema, [record]))[0])
