"""Integer-sequence benchmark toolkit: formula grammars, OEIS ingestion,
annotation heuristics, task builders, metrics and reference baselines."""

__version__ = "0.1.0"
