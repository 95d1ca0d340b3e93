"""Command-line pipeline: one subcommand per stage, all outputs under --out-dir.

Stages and the files they hand to each other:

    ingest          matches.json events.jsonl players.jsonl links.json valuations.jsonl player_meta.jsonl
    chains          chains.jsonl
    train-xg        xg_model.json (+ dataset, report, PR curve, comparison)
    train-scorer    scorer_model.json (+ dataset, report, PR curve, comparison)
    score-players   player_scores.jsonl player_scores.csv credits.jsonl
    train-transfer  transfer_model.json transfer_dataset.csv (+ report, comparison)
    predict         player_report.csv player_report.md
    team            symbolic_team.json symbolic_team.md
    report-all      every stage above in order
"""

import argparse
import json
import sys
from datetime import date
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

import pandas as pd
from loguru import logger

try:
    from .applications import check_team_allowlist, player_report, report_markdown, select_symbolic_team
    from .artifact_store import StageStore, files_hash, read_json, read_jsonl, write_csv, write_json, write_jsonl
    from .chain_builder import ChainReport, PossessionChain, extract_all_chains
    from .config import PipelineConfig, load_config
    from .data_ingest import (
        Event, IngestReport, LinkReport, MatchInfo, PlayerMeta, PlayerProfile, ValuationRecord,
        build_player_directory, link_players, load_all_events, load_link_overrides, load_match_index,
        load_player_meta, load_valuations, position_group_for,
    )
    from .errors import ConfigError, PipelineError
    from .estimators import CLASSIFIERS, REGRESSORS, Algorithm
    from .ml_core import (
        ModelArtifact, compare_classifiers, compare_regressors, evaluate_classifier, stratified_split,
        train_classifier,
    )
    from .scoring_predictor import LEAKAGE_FEATURE, build_scorer_dataset
    from .transfer_model import (
        TransferExclusions, TransferRow, build_transfer_rows, rows_to_dataset, split_transfer_dataset,
        tournament_window, transfer_report,
    )
    from .valuation_engine import PlayerScore, aggregate_scores, score_chains
    from .xg_model import XgDatasetReport, build_xg_dataset
except ImportError:
    from applications import check_team_allowlist, player_report, report_markdown, select_symbolic_team
    from artifact_store import StageStore, files_hash, read_json, read_jsonl, write_csv, write_json, write_jsonl
    from chain_builder import ChainReport, PossessionChain, extract_all_chains
    from config import PipelineConfig, load_config
    from data_ingest import (
        Event, IngestReport, LinkReport, MatchInfo, PlayerMeta, PlayerProfile, ValuationRecord,
        build_player_directory, link_players, load_all_events, load_link_overrides, load_match_index,
        load_player_meta, load_valuations, position_group_for,
    )
    from errors import ConfigError, PipelineError
    from estimators import CLASSIFIERS, REGRESSORS, Algorithm
    from ml_core import (
        ModelArtifact, compare_classifiers, compare_regressors, evaluate_classifier, stratified_split,
        train_classifier,
    )
    from scoring_predictor import LEAKAGE_FEATURE, build_scorer_dataset
    from transfer_model import (
        TransferExclusions, TransferRow, build_transfer_rows, rows_to_dataset, split_transfer_dataset,
        tournament_window, transfer_report,
    )
    from valuation_engine import PlayerScore, aggregate_scores, score_chains
    from xg_model import XgDatasetReport, build_xg_dataset


PR_CURVE_COLUMNS = ["threshold", "precision", "recall"]
PLAYER_SCORE_COLUMNS = ["player_id", "name", "role", "N_i", "J_i", "C_i", "C_norm"]
PLAYER_REPORT_COLUMNS = ["requested", "name", "team", "position", "score", "predicted_change",
                         "realized_change", "status"]


def _pr_curve_records(report) -> List[Dict[str, float]]:
    return [{"threshold": t, "precision": p, "recall": r} for r, p, t in report.pr_curve]


def _score_record(score: PlayerScore) -> Dict[str, Any]:
    record = score.to_record()
    record["per_chain"] = score.per_chain
    record["per_match"] = {str(m): v for m, v in score.per_match.items()}
    return record


def _score_from_record(record: Dict[str, Any]) -> PlayerScore:
    return PlayerScore(
        player_id=record["player_id"],
        games_played=record["games_played"],
        chains_participated=record["chains_participated"],
        per_chain=dict(record.get("per_chain", {})),
        per_match={int(m): v for m, v in record.get("per_match", {}).items()},
        total=record["total"],
    )


class PipelineRunner:
    """Runs pipeline stages against one resolved configuration and output directory."""

    def __init__(self, config: PipelineConfig):
        self.config = config
        self.store = StageStore(config.out_dir)
        self.store.root.mkdir(parents=True, exist_ok=True)
        self.config_hash = config.config_hash()

    # -- loaders for upstream outputs ---------------------------------------------------------

    def _matches(self) -> List[MatchInfo]:
        return [
            MatchInfo(
                match_id=m["match_id"], competition_id=m["competition_id"], season_id=m["season_id"],
                match_date=date.fromisoformat(m["match_date"]), home_team=m["home_team"],
                away_team=m["away_team"], competition_stage=m["competition_stage"],
            )
            for m in read_json(self.store.path("matches.json"))
        ]

    def _players(self) -> Dict[int, PlayerProfile]:
        return {r["player_id"]: PlayerProfile.from_record(r) for r in read_jsonl(self.store.path("players.jsonl"))}

    def _chains(self) -> List[PossessionChain]:
        return [PossessionChain.from_record(r) for r in read_jsonl(self.store.path("chains.jsonl"))]

    def _scores(self) -> List[PlayerScore]:
        return [_score_from_record(r) for r in read_jsonl(self.store.path("player_scores.jsonl"))]

    def _transfer_rows(self) -> List[TransferRow]:
        frame = pd.read_csv(self.store.path("transfer_dataset.csv"))
        return [TransferRow.from_record(r) for r in frame.to_dict("records")]

    # -- stages --------------------------------------------------------------------------------

    def ingest(self):
        config = self.config
        data_root = Path(config.data.statsbomb_root)
        logger.info(f"📥 Ingesting open data from {data_root}")
        report = IngestReport()

        matches = load_match_index(data_root, config.competitions)
        match_ids = [m.match_id for m in matches]
        events = load_all_events(data_root, match_ids, report, jobs=config.run.jobs)
        players = build_player_directory(data_root, match_ids)

        meta = load_player_meta(config.data.players_path, report)
        valuations = load_valuations(config.data.valuations_path, report)
        overrides = load_link_overrides(config.data.link_overrides) if config.data.link_overrides else {}
        link_report = LinkReport()
        links = link_players(
            {pid: [p.name, p.nickname] for pid, p in players.items()}, meta, overrides, link_report)
        linked = set(links.values())

        write_json(self.store.path("matches.json"), [
            {"match_id": m.match_id, "competition_id": m.competition_id, "season_id": m.season_id,
             "match_date": m.match_date.isoformat(), "home_team": m.home_team, "away_team": m.away_team,
             "competition_stage": m.competition_stage}
            for m in matches
        ])
        write_jsonl(self.store.path("events.jsonl"),
                    (e.to_record() for match_id in sorted(events) for e in events[match_id]))
        write_jsonl(self.store.path("players.jsonl"), (p.to_record() for p in players.values()))
        write_json(self.store.path("links.json"), {str(k): v for k, v in sorted(links.items())})
        write_jsonl(self.store.path("valuations.jsonl"), (
            {"player_id": r.player_id, "date": r.date.isoformat(), "market_value_eur": r.market_value_eur}
            for pid in sorted(linked) for r in valuations.get(pid, [])
        ))
        write_jsonl(self.store.path("player_meta.jsonl"), (
            {"player_id": m.player_id, "name": m.name,
             "birth_date": m.birth_date.isoformat() if m.birth_date else None,
             "raw_position": m.raw_position}
            for pid in sorted(linked) for m in [meta[pid]]
        ))
        write_json(self.store.path("ingest_report.json"),
                   {"ingest": report.to_dict(), "links": link_report.to_dict()})

        outputs = ["matches.json", "events.jsonl", "players.jsonl", "links.json", "valuations.jsonl",
                   "player_meta.jsonl", "ingest_report.json"]
        inputs = {
            "statsbomb": files_hash(
                [data_root / "matches" / str(c) / f"{s}.json" for c, s in config.competitions]
                + [data_root / sub / f"{m}.json" for sub in ("events", "lineups") for m in match_ids],
                root=data_root),
            "valuations_csv": files_hash([config.data.valuations_path]),
            "players_csv": files_hash([config.data.players_path]),
        }
        self.store.write_manifest("ingest", self.config_hash, None, inputs, outputs)
        logger.success(f"✅ Ingest complete: {len(match_ids)} matches, {len(players)} players, {len(links)} linked")

    def chains(self):
        self.store.require({"events.jsonl": "ingest"})
        events: Dict[int, List[Event]] = {}
        for record in read_jsonl(self.store.path("events.jsonl")):
            event = Event.from_record(record)
            events.setdefault(event.match_id, []).append(event)

        report = ChainReport()
        chains = extract_all_chains(events, report)
        write_jsonl(self.store.path("chains.jsonl"), (c.to_record() for c in chains))
        write_json(self.store.path("chain_report.json"), report.to_dict())
        self.store.write_manifest("chains", self.config_hash, None,
                                  self.store.input_hashes(["events.jsonl"]), ["chains.jsonl", "chain_report.json"])
        logger.success(f"✅ Chains complete: {len(chains)} chains")

    def _train_classification_stage(self, stage: str, dataset, extra_report: Dict[str, Any],
                                    ablated_dataset=None) -> ModelArtifact:
        config = self.config
        primary = Algorithm(getattr(config.models, f"{stage}_primary"))
        train, test = stratified_split(dataset, config.run.test_fraction, config.stage_seed(f"{stage}_split"))
        seed = config.stage_seed(f"{stage}_train")
        comparison = compare_classifiers(
            CLASSIFIERS, primary, train, test, config.grids, config.class0_weight(stage), seed,
            config.models.classification_metric, config.run.jobs)

        model = comparison.primary_model
        primary_report = comparison.reports[primary.value]
        report = {
            "dataset": extra_report,
            "primary": primary.value,
            "split": {"train_rows": len(train), "test_rows": len(test), "test_fraction": config.run.test_fraction},
            "test": primary_report.to_dict(),
        }

        if ablated_dataset is not None:
            ablated_train, ablated_test = stratified_split(
                ablated_dataset, config.run.test_fraction, config.stage_seed(f"{stage}_split"))
            ablated = train_classifier(primary, ablated_train, config.class0_weight(stage),
                                       config.grids.get(primary.value), seed,
                                       config.models.classification_metric, config.run.jobs)
            ablated_report = evaluate_classifier(ablated, ablated_test)
            report["ablated"] = {"feature": LEAKAGE_FEATURE, "test": ablated_report.to_dict()}
            report["persisted"] = "ablated" if config.flags.ablate_leakage_feature else "full"
            if config.flags.ablate_leakage_feature:
                model, primary_report = ablated, ablated_report

        model.save(self.store.path(f"{stage}_model.json"))
        write_json(self.store.path(f"{stage}_report.json"), report)
        write_json(self.store.path(f"{stage}_comparison.json"), comparison.to_dict())
        write_csv(self.store.path(f"{stage}_pr_curve.csv"), _pr_curve_records(primary_report), PR_CURVE_COLUMNS)
        return model

    def train_xg(self):
        self.store.require({"chains.jsonl": "chains"})
        xg_report = XgDatasetReport()
        dataset = build_xg_dataset(self._chains(), self.config.pitch, self.config.flags.exclude_penalties, xg_report)
        write_jsonl(self.store.path("xg_dataset.jsonl"), dataset.to_records())
        self._train_classification_stage("xg", dataset, xg_report.to_dict())
        outputs = ["xg_dataset.jsonl", "xg_model.json", "xg_report.json", "xg_comparison.json", "xg_pr_curve.csv"]
        self.store.write_manifest("train-xg", self.config_hash, self.config.stage_seed("xg_train"),
                                  self.store.input_hashes(["chains.jsonl"]), outputs)
        logger.success("✅ xG model trained")

    def train_scorer(self):
        self.store.require({"chains.jsonl": "chains"})
        chains = self._chains()
        dataset = build_scorer_dataset(chains)
        write_jsonl(self.store.path("scorer_dataset.jsonl"), dataset.to_records())
        summary = {"rows": len(dataset), "chains": len(chains), "prevalence": dataset.prevalence}
        self._train_classification_stage("scorer", dataset, summary, ablated_dataset=dataset.without([LEAKAGE_FEATURE]))
        outputs = ["scorer_dataset.jsonl", "scorer_model.json", "scorer_report.json", "scorer_comparison.json",
                   "scorer_pr_curve.csv"]
        self.store.write_manifest("train-scorer", self.config_hash, self.config.stage_seed("scorer_train"),
                                  self.store.input_hashes(["chains.jsonl"]), outputs)
        logger.success("✅ Goal-scoring predictor trained")

    def score_players(self):
        self.store.require({"chains.jsonl": "chains", "players.jsonl": "ingest",
                            "xg_model.json": "train-xg", "scorer_model.json": "train-scorer"})
        chains = self._chains()
        players = self._players()
        xg = ModelArtifact.load(self.store.path("xg_model.json"))
        scorer = ModelArtifact.load(self.store.path("scorer_model.json"))
        roles = {pid: p.position_group for pid, p in players.items() if p.position_group}
        appearances = {pid: p.games_played for pid, p in players.items()}

        variants = {}
        for suppress in (False, True):
            credits = score_chains(chains, scorer, xg, roles, spec=self.config.pitch, suppress_shooter_delta=suppress)
            variants[suppress] = (credits, aggregate_scores(credits, appearances))
        credits, scores = variants[self.config.flags.suppress_shooter_delta]

        write_jsonl(self.store.path("credits.jsonl"), (c.to_record() for c in credits))
        write_jsonl(self.store.path("player_scores.jsonl"), (_score_record(s) for s in scores))
        write_csv(self.store.path("player_scores.csv"), [
            {"player_id": s.player_id, "name": players[s.player_id].display_name,
             "role": players[s.player_id].position_group.value, "N_i": s.games_played,
             "J_i": s.chains_participated, "C_i": s.total, "C_norm": s.normalized}
            for s in scores
        ], PLAYER_SCORE_COLUMNS)
        suppressed = {s.player_id: s.normalized for s in variants[True][1]}
        write_csv(self.store.path("player_score_variants.csv"), [
            {"player_id": s.player_id, "name": players[s.player_id].display_name,
             "C_norm_shooter_delta_kept": s.normalized, "C_norm_shooter_delta_suppressed": suppressed[s.player_id]}
            for s in variants[False][1]
        ], ["player_id", "name", "C_norm_shooter_delta_kept", "C_norm_shooter_delta_suppressed"])

        outputs = ["credits.jsonl", "player_scores.jsonl", "player_scores.csv", "player_score_variants.csv"]
        inputs = self.store.input_hashes(["chains.jsonl", "players.jsonl", "xg_model.json", "scorer_model.json"])
        self.store.write_manifest("score-players", self.config_hash, None, inputs, outputs)
        logger.success(f"✅ Scored {len(scores)} players")

    def _window(self):
        start, end = self.config.window_dates()
        if start is None or end is None:
            first, last = tournament_window(self._matches())
            start, end = start or first, end or last
        return start, end

    def _transfer_inputs(self):
        valuations: Dict[int, List[ValuationRecord]] = {}
        for r in read_jsonl(self.store.path("valuations.jsonl")):
            valuations.setdefault(r["player_id"], []).append(
                ValuationRecord(r["player_id"], date.fromisoformat(r["date"]), r["market_value_eur"]))
        meta = {}
        for r in read_jsonl(self.store.path("player_meta.jsonl")):
            meta[r["player_id"]] = PlayerMeta(
                player_id=r["player_id"], name=r["name"],
                birth_date=date.fromisoformat(r["birth_date"]) if r["birth_date"] else None,
                position_group=position_group_for(r["raw_position"]), raw_position=r["raw_position"])
        links = {int(k): v for k, v in read_json(self.store.path("links.json")).items()}
        return valuations, meta, links

    def train_transfer(self):
        upstream = {"player_scores.jsonl": "score-players", "players.jsonl": "ingest", "links.json": "ingest",
                    "valuations.jsonl": "ingest", "player_meta.jsonl": "ingest", "matches.json": "ingest"}
        self.store.require(upstream)
        config = self.config
        valuations, meta, links = self._transfer_inputs()
        positions = {pid: p.position_group for pid, p in self._players().items() if p.position_group}
        window = self._window()
        logger.info(f"💶 Evaluation window {window[0]} .. {window[1]}")

        exclusions = TransferExclusions()
        rows = build_transfer_rows(self._scores(), valuations, meta, links, window, positions, exclusions)
        dataset = rows_to_dataset(rows)
        train, test = split_transfer_dataset(dataset, config.run.test_fraction, config.stage_seed("transfer_split"))
        primary = Algorithm(config.models.transfer_primary)
        comparison = compare_regressors(REGRESSORS, primary, train, test, config.grids,
                                        config.stage_seed("transfer_train"), config.models.regression_metric,
                                        config.run.jobs)

        comparison.primary_model.save(self.store.path("transfer_model.json"))
        write_csv(self.store.path("transfer_dataset.csv"), [r.to_record() for r in rows],
                  list(rows[0].to_record()) if rows else ["player_id"])
        write_json(self.store.path("transfer_report.json"), {
            "primary": primary.value,
            "window": [window[0].isoformat(), window[1].isoformat()],
            "split": {"train_rows": len(train), "test_rows": len(test)},
            "test": transfer_report(comparison.reports[primary.value], dataset),
        })
        write_json(self.store.path("transfer_comparison.json"), {
            "primary": primary.value,
            "models": {name: transfer_report(report, dataset) for name, report in comparison.reports.items()},
        })
        write_json(self.store.path("transfer_exclusions.json"), exclusions.to_dict())

        outputs = ["transfer_model.json", "transfer_dataset.csv", "transfer_report.json",
                   "transfer_comparison.json", "transfer_exclusions.json"]
        self.store.write_manifest("train-transfer", self.config_hash, config.stage_seed("transfer_train"),
                                  self.store.input_hashes(upstream), outputs)
        logger.success(f"✅ Transfer model trained on {len(train)} players")

    def predict(self, requested: Optional[Sequence[str]] = None):
        upstream = {"transfer_model.json": "train-transfer", "transfer_dataset.csv": "train-transfer",
                    "player_scores.jsonl": "score-players", "players.jsonl": "ingest", "links.json": "ingest"}
        self.store.require(upstream)
        requested = list(requested) if requested else list(self.config.report.players)
        model = ModelArtifact.load(self.store.path("transfer_model.json"))
        links = {int(k): v for k, v in read_json(self.store.path("links.json")).items()}
        rows = player_report(requested, self._scores(), self._players(), model, self._transfer_rows(), links)

        write_csv(self.store.path("player_report.csv"), [r.to_record() for r in rows], PLAYER_REPORT_COLUMNS)
        markdown = report_markdown(rows)
        self.store.path("player_report.md").write_text(markdown, encoding="utf-8", newline="\n")
        self.store.write_manifest("predict", self.config_hash, None, self.store.input_hashes(upstream),
                                  ["player_report.csv", "player_report.md"], {"requested": requested})
        print(markdown)

    def team(self):
        upstream = {"player_scores.jsonl": "score-players", "players.jsonl": "ingest", "matches.json": "ingest"}
        self.store.require(upstream)
        check_team_allowlist(self.config.team.allowlist,
                             {name for m in self._matches() for name in (m.home_team, m.away_team)})
        team = select_symbolic_team(self._scores(), self._players(), self.config.team.min_games,
                                    self.config.team.allowlist)
        write_json(self.store.path("symbolic_team.json"), team.to_dict())
        markdown = team.to_markdown()
        self.store.path("symbolic_team.md").write_text(markdown, encoding="utf-8", newline="\n")
        self.store.write_manifest("team", self.config_hash, None, self.store.input_hashes(upstream),
                                  ["symbolic_team.json", "symbolic_team.md"])
        print(markdown)

    def report_all(self):
        for stage in (self.ingest, self.chains, self.train_xg, self.train_scorer, self.score_players,
                      self.train_transfer, self.predict, self.team):
            stage()


COMMANDS: Dict[str, Callable[[PipelineRunner, argparse.Namespace], None]] = {
    "ingest": lambda runner, args: runner.ingest(),
    "chains": lambda runner, args: runner.chains(),
    "train-xg": lambda runner, args: runner.train_xg(),
    "train-scorer": lambda runner, args: runner.train_scorer(),
    "score-players": lambda runner, args: runner.score_players(),
    "train-transfer": lambda runner, args: runner.train_transfer(),
    "predict": lambda runner, args: runner.predict(args.player),
    "team": lambda runner, args: runner.team(),
    "report-all": lambda runner, args: runner.report_all(),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML or JSON file overriding the shipped defaults")
    common.add_argument("--out-dir", help="directory for every stage output")
    common.add_argument("--data-root", help="StatsBomb open-data root (contains matches/, events/, lineups/)")
    common.add_argument("--kaggle-dir", help="directory with player_valuations.csv and players.csv")
    common.add_argument("--seed", type=int)
    common.add_argument("--jobs", type=int, help="worker cap for parallel sections")
    common.add_argument("--log-level")
    common.add_argument("--test-fraction", type=float)
    common.add_argument("--class0-weight-xg", type=float, help="class-0 sample weight for the xG model")
    common.add_argument("--class0-weight-scorer", type=float, help="class-0 sample weight for the scorer")
    common.add_argument("--window-start", help="evaluation window start (YYYY-MM-DD)")
    common.add_argument("--window-end", help="evaluation window end (YYYY-MM-DD)")
    common.add_argument("--min-games", type=int)
    common.add_argument("--legacy-distance-formula", "--paper-distance-formula", dest="legacy_distance_formula",
                        action="store_const", const=True, default=None,
                        help="use the literal distance expression instead of the Euclidean distance")
    for flag in ("ablate-leakage-feature", "suppress-shooter-delta", "exclude-penalties"):
        common.add_argument(f"--{flag}", action="store_const", const=True, default=None)

    parser = argparse.ArgumentParser(
        prog="possession-value",
        description="Possession-chain player valuation and transfer-value pipeline.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub = subparsers.add_parser(name, parents=[common])
        if name == "predict":
            sub.add_argument("--player", action="append", help="player name or StatsBomb id (repeatable)")
    return parser


def _overrides(args: argparse.Namespace) -> Dict[str, Dict[str, Any]]:
    mapping = {
        "out_dir": ("run", "out_dir"),
        "data_root": ("data", "statsbomb_root"),
        "kaggle_dir": ("data", "kaggle_dir"),
        "seed": ("run", "seed"),
        "jobs": ("run", "jobs"),
        "log_level": ("run", "log_level"),
        "test_fraction": ("run", "test_fraction"),
        "class0_weight_xg": ("models", "xg_class0_weight"),
        "class0_weight_scorer": ("models", "scorer_class0_weight"),
        "window_start": ("window", "start"),
        "window_end": ("window", "end"),
        "min_games": ("team", "min_games"),
        "legacy_distance_formula": ("flags", "legacy_distance_formula"),
        "ablate_leakage_feature": ("flags", "ablate_leakage_feature"),
        "suppress_shooter_delta": ("flags", "suppress_shooter_delta"),
        "exclude_penalties": ("flags", "exclude_penalties"),
    }
    overrides: Dict[str, Dict[str, Any]] = {}
    for attribute, (section, key) in mapping.items():
        value = getattr(args, attribute, None)
        if value is not None:
            overrides.setdefault(section, {})[key] = value
    return overrides


def configure_logging(level: str, out_dir: Optional[Path] = None):
    logger.remove()
    logger.add(sys.stderr, level=level)
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        logger.add(out_dir / "run.log", level="DEBUG", serialize=False)


def _fail(error: Dict[str, Any], code: int) -> int:
    sys.stderr.write(json.dumps(error, sort_keys=True, ensure_ascii=False) + "\n")
    return code


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run one subcommand; returns the process exit code."""
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config, _overrides(args))
    except ConfigError as e:
        configure_logging("INFO")
        logger.error(f"❌ {e.message}")
        for problem in e.details.get("problems", []):
            logger.error(f"   ✗ {problem}")
        return _fail(e.to_dict(), 2)

    configure_logging(config.run.log_level, config.out_dir)
    logger.info("=" * 60)
    logger.info(f"⚽ possession-value {args.command}")
    logger.info(f"   Config: {', '.join(config.source_files)} (hash {config.config_hash()[:12]})")
    logger.info(f"   Output: {config.out_dir}")
    logger.info("=" * 60)

    try:
        COMMANDS[args.command](PipelineRunner(config), args)
    except PipelineError as e:
        logger.error(f"❌ {args.command} failed: {e.message}")
        return _fail(e.to_dict(), 2 if isinstance(e, ConfigError) else 1)
    except Exception as e:
        logger.exception(f"❌ {args.command} crashed: {e}")
        return _fail({"error": type(e).__name__, "message": str(e), "details": {}}, 1)
    return 0
