"""
Cross-attention as a read from a sealed encoder memory
======================================================
"""

import numpy as np

from sdnc import SdncEngine, SealedMemory, cross_attention, init_params

rng = np.random.default_rng(7)
self_params = init_params(16, 4, 4, 4, rng)
cross_params = init_params(16, 4, 4, 4, rng)

encoder_states = rng.uniform(-1, 1, (64, 16))
decoder_inputs = rng.uniform(-1, 1, (32, 16))

batched = cross_attention(decoder_inputs, encoder_states, cross_params).Z

engine = SdncEngine(self_params, cross_params=cross_params)
engine.load_encoder_memory(encoder_states)
streamed = np.stack([engine.cross_step(x) for x in decoder_inputs])
print("max |streamed - batched|:", np.max(np.abs(streamed - batched)))

# the encoder memory is fixed once loaded
try:
    engine.enc_memories[0].append(np.zeros(4), np.zeros(4))
except SealedMemory as exc:
    print("append refused:", exc)

# decoder self-memory is a separate, growing store; cross reads ignore it
x = decoder_inputs[0]
before = engine.cross_step(x)
for row in decoder_inputs[:5]:
    engine.step(row)
print("self memory size:", engine.self_memories[0].size())
print("cross read unchanged:", np.array_equal(before, engine.cross_step(x)))
