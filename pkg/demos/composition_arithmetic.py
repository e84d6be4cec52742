"""Small-gain arithmetic for a homogeneous forward-band network, without any data."""

from infnet import composition

# decay rate, eigenvalue bounds of P, coupling gain, neighbours per node
# the gain is picked so that the normalized entry rho / (alpha_lo * kappa) is 0.0537
kappa, alpha_lo, alpha_hi = 0.1, 5.0876e3, 9.4701e5
model = composition.GainModel.homogeneous(kappa, alpha_lo, alpha_hi, 0.0537 * alpha_lo * kappa, 1)
res = composition.compose(model)
print("norm11 = %.4f passed = %s" % (res.norm11, res.passed))
print("network decay rate %.5f" % res.kappa_inf)

# adding neighbours eventually breaks the small-gain condition
for card in (1, 5, 10, 20, 50):
    m = composition.GainModel.homogeneous(0.1, 1.0, 1.0, 0.01, card)
    ok, bound = composition.small_gain(m)
    print("card %3d  norm11 %.3f  %s" % (card, bound, "ok" if ok else "fails"))
