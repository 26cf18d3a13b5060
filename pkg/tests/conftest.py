"""Pin BLAS pools to one thread before numpy loads.

Every matrix in this project is small (a few hundred rows at most), where
threaded BLAS only adds spin overhead; the acceptance sweeps parallelize
across processes instead, and oversubscription would thrash the pool.
"""

import os

os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")
os.environ.setdefault("OMP_NUM_THREADS", "1")
os.environ.setdefault("MKL_NUM_THREADS", "1")
