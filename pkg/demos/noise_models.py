"""Hardware noise on a quantum Gram matrix and the eigenvalue shift that repairs it.

Run with ``python demos/noise_models.py``.
"""
import numpy as np

from ionkernel import hamiltonian as ham
from ionkernel import kernels as kn

X = np.random.default_rng(1).uniform(-1, 1, (200, 2))
clean = kn.quantum_gram(ham.IsingParams(4, h=1.5, dt=4.0), X)

for name, noise in kn.NOISE_PRESETS.items():
    # Depolarizing noise rescales the kernel and adds an offset of p(2-p)/2^N.
    K = kn.depolarize(clean, noise.p, 4)
    # Finite shot counts add symmetric Gaussian noise of width s (about 1/sqrt(shots)).
    K = kn.add_statistical_noise(K, noise.s, seed=7)
    lam_before = np.linalg.eigvalsh(K.values)[0]
    # Subtracting the negative minimum eigenvalue restores a valid (PSD) kernel.
    fixed, lam = kn.shift_regularize(K)
    print(f"{name:7s} p={noise.p:<5} s={noise.s:<5} shots~{noise.shots:7.0f} "
          f"lambda_min={lam_before:+.3f} after shift={np.linalg.eigvalsh(fixed.values)[0]:+.1e} "
          f"kind={fixed.kind}")
