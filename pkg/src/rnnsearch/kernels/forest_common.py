"""Constants shared by the two forest backends.

Feature subsets per split come from a 63-bit LCG driven Fisher-Yates shuffle.
Both backends run the identical integer recurrence (the numba build wraps at
64 bits before the 63-bit mask, which leaves the low 63 bits unchanged), so
given the same seeds and bootstrap rows they grow bit-identical trees.
"""

LCG_MUL = 6364136223846793005
LCG_INC = 1442695040888963407
LCG_MASK = (1 << 63) - 1

# leaves <= n and internal nodes < leaves, so 2n slots always suffice
MAX_NODES_FACTOR = 2
