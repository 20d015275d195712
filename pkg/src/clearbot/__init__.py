"""clearbot: a desk-scale 2D robot whose sensing, belief, and plans are
streamed as visualization markers over a JSON/WebSocket topic bridge."""

from importlib import resources

__version__ = "0.1.0"

BUILTIN_MAPS = ("hallway", "hallway_known", "intent")


def builtin_map_text(name: str) -> str:
    """Text of a map fixture shipped with the package."""
    if name not in BUILTIN_MAPS:
        raise KeyError(f"unknown built-in map {name!r}; have {BUILTIN_MAPS}")
    return resources.files(__name__).joinpath(f"maps/{name}.txt").read_text("utf-8")
