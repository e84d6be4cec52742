"""Data-driven ISS certificates and small-gain composition for infinite networks."""

from . import cli, composition, datagen, network, pipeline, polycore, presets, sdpsolve, synthesis

__all__ = ["cli", "composition", "datagen", "network", "pipeline", "polycore", "presets", "sdpsolve", "synthesis"]
