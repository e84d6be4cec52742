"""Collect data from one spacecraft, synthesize a controller, compose the network and simulate it."""

import numpy as np

from infnet import pipeline
from infnet.presets import preset

cfg = preset("spacecraft-unknownD")
run = pipeline.run_pipeline(cfg)
rep = run.report

print("verdict:", rep["verdict"])
print("margin: %.3e" % rep["stages"]["solver"]["margin"])
res = run.synthesis.result
print("P =\n", np.array2string(res.P.to_array(), precision=4))
for law in res.controller_strings():
    print(law)
print("alpha bounds: %.4g %.4g, rho %.4g" % (res.alpha_lo, res.alpha_hi, res.rho))
print("norm11 = %.4f, network decay rate %.4g" % (run.composed.norm11, run.composed.kappa_inf))

# closed loop on a 50-spacecraft forward band
sim = pipeline.simulate(cfg, res, size=50, horizon=10.0, ic=cfg.sim_ic)
print("simulated %d subsystems: |x(T)|/|x(0)| = %.2e" % (sim.states.shape[1], sim.ratio))
