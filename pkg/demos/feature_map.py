"""Quantum feature map: from an input vector to a fidelity kernel value.

Run with ``python demos/feature_map.py``.
"""
import numpy as np

from ionkernel import hamiltonian as ham
from ionkernel import kernels as kn

# Four ions, fields from a two-feature input, the rest of the chain padded with zeros.
params = ham.IsingParams(N=4, h=2.0, dt=3.0)
x = np.array([0.3, -0.8])
y = np.array([0.1, -0.6])
print("encoded fields:", ham.encode_fields(x, params.N))

# The Hamiltonian is real symmetric: sigma_x sigma_x couplings decay as |i-j|^-alpha.
H = ham.build_hamiltonian(params, ham.encode_fields(x, params.N))
print("Hamiltonian shape:", H.shape, "coupling of sites 0 and 2:", ham.coupling_matrix(4, 1.0, 1.13)[2, 0])

# Evolving |0000> for a time dt gives the feature state; the kernel is the squared overlap.
psi_x = kn.feature_state(params, x)
psi_y = kn.feature_state(params, y)
print("k(x, y) =", abs(np.vdot(psi_y, psi_x)) ** 2)

# A Gram matrix over a few points is symmetric, has a unit diagonal and is PSD.
X = np.random.default_rng(0).uniform(-1, 1, (6, 2))
K = kn.quantum_gram(params, X)
print("Gram diagonal:", np.round(np.diag(K.values), 12))
print("smallest eigenvalue:", np.linalg.eigvalsh(K.values)[0])

# Halving J and h while doubling dt leaves every kernel value unchanged.
K2 = kn.quantum_gram(ham.IsingParams(4, J=0.5, h=1.0, dt=6.0), X)
print("max change under (J, h, dt) -> (J/2, h/2, 2dt):", np.abs(K.values - K2.values).max())

# A single ion only picks up a phase, so its kernel is constant.
print("N=1 Gram:", kn.quantum_gram(ham.IsingParams(1, h=5.0, dt=9.0), X[:, :1]).values[0])
