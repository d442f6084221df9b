"""VM migration over named content: python surface for the C++ core."""

import json as _json

from ._ccnmig import (  # noqa: F401
    ContentObject,
    Name,
    decode_object,
    default_scenario,
    encode_object,
    enumerate_names,
    make_nameless,
    object_hash_hex,
)
from ._ccnmig import object_count as _object_count
from ._ccnmig import run_scenario as _run_scenario


def object_count(config):
    """Object-count breakdown for a VM config (dict or JSON string)."""
    if not isinstance(config, str):
        config = _json.dumps(config)
    return _object_count(config)


def run_scenario(scenario):
    """Run a migration scenario (dict or JSON string); returns the report dict."""
    if not isinstance(scenario, str):
        scenario = _json.dumps(scenario)
    return _json.loads(_run_scenario(scenario))
