"""Move the analyzable spine of a Flask/Express monolith onto an AWS SAM layout.

The pipeline is deterministic end to end:

    analyze     -> analysis_report.json, symbol_table.json
    plan        -> blueprint.json
    synthesize  -> template.yaml, lambdas/<name>/..., layers/shared/...
    validate    -> validation_report.json (11 cross-artifact checks)
    score       -> scorecard.json
"""

__version__ = "0.1.0"
