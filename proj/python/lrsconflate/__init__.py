"""Python access to the LRS/OSM conflation core."""

from ._lrsconflate import (
    ConflationError,
    Network,
    Route,
    Run,
    RunConfig,
    conflate,
    conflation_key,
    haversine_m,
    load_config,
    load_network,
    load_routes,
    nearest_rank_percentile,
    parse_config,
    quality_report,
    regenerate_quality,
    write_results,
)

__all__ = [
    "ConflationError",
    "Network",
    "Route",
    "Run",
    "RunConfig",
    "conflate",
    "conflation_key",
    "haversine_m",
    "load_config",
    "load_network",
    "load_routes",
    "nearest_rank_percentile",
    "parse_config",
    "quality_report",
    "regenerate_quality",
    "write_results",
]
