"""Train the soft-margin SVM on precomputed kernels and compare the two kernel families.

Run with ``python demos/svm_training.py``.
"""
import numpy as np

from ionkernel import datasets as ds
from ionkernel import hamiltonian as ham
from ionkernel import kernels as kn
from ionkernel import svm

# The smallest worked example: two points on a line with a linear kernel.
model = svm.train(np.array([[0.0, 0.0], [0.0, 4.0]]), [1, -1], C=1e6)
print("two points: alphas", np.round(model.dual_coefs, 6), "bias", round(model.bias, 6))

# Moons, split 333/333/333 and scaled to [-1, 1] with the map fitted on the training part.
data = ds.scale_split(ds.split(ds.make_moons(1000, noise=0.3, seed=0), seed=0))
tr, va, te = data.parts()

kernels = {
    "rbf (gamma=1.4, C=1e5)": (lambda A, B=None: kn.rbf_gram(1.4, A, B), 1e5),
    "quantum N=4 (h=2.3, dt=2.8)": (lambda A, B=None: kn.quantum_gram(ham.IsingParams(4, h=2.3, dt=2.8), A, B), 1.0),
}
for name, (gram, C) in kernels.items():
    m = svm.train(gram(tr.X).values, tr.y, C=C)
    acc_val = svm.accuracy(svm.predict(m, gram(va.X, tr.X).values), va.y)
    acc_test = svm.accuracy(svm.predict(m, gram(te.X, tr.X).values), te.y)
    print(f"{name:28s} support vectors {len(m.support_indices):3d}  val {acc_val:.3f}  test {acc_test:.3f}")
