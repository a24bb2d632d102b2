"""Read, modify and write LIBSVM files."""
import io

import numpy as np

from segsens import Modification, apply_modification, augment_bias, parse_libsvm
from segsens.data_io import format_libsvm

text = """+1 1:0.5 3:1.25
-1 2:-1
+1 1:2 2:0.125 3:-3
"""
d = parse_libsvm(text)
print(d.n, "rows,", d.dim, "features")
print(d.X.toarray())

d = augment_bias(d)
m = Modification(added=parse_libsvm("-1 4:1\n").with_dim(d.dim), removed=np.array([1]))
print(format_libsvm(apply_modification(d, m)), end="")
assert parse_libsvm(io.StringIO(format_libsvm(d))).equals(d)
