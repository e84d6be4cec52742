"""The bundled interior-point solver on a tiny problem: smallest eigenvalue of a symmetric matrix."""

import numpy as np

from infnet.sdpsolve import ProblemBuilder, solve

C = np.array([[2.0, 1.0, 0.0], [1.0, 3.0, 1.0], [0.0, 1.0, 4.0]])

# minimize <C, X> subject to trace(X) = 1, X psd
pb = ProblemBuilder()
k = pb.add_block(3)
coord, scale = pb.block_entry_map(k)
obj = {}
for (i, j), v in np.ndenumerate(C):
    obj[int(coord[i, j])] = obj.get(int(coord[i, j]), 0.0) + v * scale[i, j]
pb.set_objective(obj)
pb.add_equality({pb.entry(k, i, i)[0]: 1.0 for i in range(3)}, 1.0)

sol = solve(pb.build())
print("status", sol.status, "objective %.10f" % sol.objective)
print("smallest eigenvalue %.10f" % np.linalg.eigvalsh(C)[0])
