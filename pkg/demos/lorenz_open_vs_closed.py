"""Open-loop Lorenz subsystems stay away from the origin.

The short data window leaves the margin slightly negative, so the design is not
certified, but the best iterate still drives the simulated network to zero.
"""

from infnet import pipeline
from infnet.presets import preset

cfg = preset("lorenz-unknownD")
opened = pipeline.simulate(cfg, None, size=10, horizon=5.0, ic=10.0)
print("open loop:   min |x| = %.3g" % opened.min_norm)

run = pipeline.run_pipeline(cfg, decrease_check=False)
print("verdict:", run.report["verdict"], "margin %.2e" % run.report["stages"]["solver"]["margin"])
closed = pipeline.simulate(cfg, run.synthesis.result, size=10, horizon=5.0, ic=10.0)
print("closed loop: |x(T)|/|x(0)| = %.2e" % closed.ratio)
