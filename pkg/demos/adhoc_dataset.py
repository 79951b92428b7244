"""The ad hoc task: labels defined by a two-qubit feature map and a random parity observable.

Run with ``python demos/adhoc_dataset.py``.
"""
import numpy as np

from ionkernel import datasets as ds
from ionkernel import kernels as kn
from ionkernel import svm

d = ds.make_adhoc(200, gap=0.3, seed=0)
m = ds.adhoc_margin(d.X, seed=0)
print("points per class:", d.class_counts(), " acceptance rate:", round(d.params["acceptance"], 3))
print("smallest |margin|:", np.abs(m).min().round(3), "(gap 0.3)")

# By construction the data are separable with the kernel of the generating feature map.
S = ds.adhoc_feature_states(d.X)
K = kn.fidelity_from_states(S)
model = svm.train(K, d.y, C=1e4)
print("training accuracy with the generating kernel:", svm.accuracy(svm.predict(model, K), d.y))

# Larger gaps reject more candidates.
for gap in (0.1, 0.3, 0.5):
    print(f"gap {gap}: acceptance {ds.make_adhoc(100, gap=gap, seed=0).params['acceptance']:.3f}")
