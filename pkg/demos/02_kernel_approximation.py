"""How fast do random-feature inner products converge to the kernel?

For a fixed pair of points, the feature inner product is an unbiased
estimate of the kernel value; its Monte-Carlo error shrinks like 1/sqrt(R).
"""

import numpy as np

from rffmmd import KernelSpec, derive_stream, eval_kernel, feature_map, sample_frequencies

spec = KernelSpec(np.array([1.0]))
x, y = np.array([0.3]), np.array([1.4])
exact = eval_kernel(spec, x, y)
print(f"exact kernel value k(x, y) = {exact:.6f}")

print(f"{'R':>6}   rms error over 200 draws")
for R in (4, 16, 64, 256, 1024):
    errs = []
    for k in range(200):
        freqs = sample_frequencies(spec, R, derive_stream(k, f"demo/approx/{R}"))
        fx = feature_map(x, freqs, spec.kappa0)
        fy = feature_map(y, freqs, spec.kappa0)
        errs.append(float(fx @ fy) - exact)
    rms = float(np.sqrt(np.mean(np.square(errs))))
    print(f"{R:>6}   {rms:.6f}   (~ {rms * np.sqrt(R):.3f} / sqrt(R))")
