#!/usr/bin/env python3

"""Main entry point for the possession-value pipeline.

Stages, in order (each reads the previous stage's files from --out-dir):

1. ingest         - StatsBomb events, lineups and market valuations, player linking
2. chains         - shot-terminated possession chains
3. train-xg       - expected-goals classifier on chain-ending shots
4. train-scorer   - goal-scoring probability of every earlier ball state
5. score-players  - per-action credits and per-game player scores
6. train-transfer - market-value change regressor with the player score as a feature
7. predict / team - player valuation report and the 4-3-3 symbolic team

Environment:
- STATSBOMB_DATA_ROOT, KAGGLE_DATA_DIR (input data)
- PIPELINE_OUT_DIR, PIPELINE_SEED, LOG_LEVEL (see .env.example)
"""

import sys

from dotenv import load_dotenv

# Load environment variables FIRST so configuration defaults can see them
load_dotenv()

try:
    from cli_app import main as cli_main
except ImportError:
    from .cli_app import main as cli_main


def main():
    """Run the pipeline command line."""
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
