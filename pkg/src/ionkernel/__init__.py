"""Trapped-ion quantum fidelity kernels for SVM classification."""
