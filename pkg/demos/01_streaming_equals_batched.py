"""
A causal attention layer, streamed one token at a time
=======================================================

Build a two-head layer, run it over a short sequence the usual way, then
feed the same tokens one by one through an engine that writes each key and
value to an append-only memory and reads it back by content.
"""

import numpy as np

from sdnc import SdncEngine, causal_self_attention, init_params

rng = np.random.default_rng(42)
params = init_params(d_model=8, d_k=4, d_v=4, heads=2, rng=rng)
X = rng.uniform(-1, 1, (16, 8))

# the whole sequence at once
batched = causal_self_attention(X, params)

# one token at a time
engine = SdncEngine(params)
rows = []
for x in X:
    rows.append(engine.step(x))
streamed = np.stack(rows)

print("memory rows per head:", [m.size() for m in engine.self_memories])
print("max |streamed - batched|:", np.max(np.abs(streamed - batched.Z)))

# the read weights of the last token are the last row of the attention matrix
last = engine.last_reads[0].weights
print("last read weights (head 0):", np.round(last, 3))
print("same as attention row:", np.array_equal(last, batched.per_head_weights[0][-1]))

# earlier rows of memory never change
k0 = engine.self_memories[0].key_row(0)
engine.step(rng.uniform(-1, 1, 8))
print("row 0 untouched after another write:", np.array_equal(k0, engine.self_memories[0].key_row(0)))
