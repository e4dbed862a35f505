#
# Random number discipline.  Every run has one master seed; each
# consumer (instance generation, a policy's private choices, the noise
# of a policy's environment, a sampling mask) draws from its own
# substream, derived by hashing a label.  Adding a policy to a run
# therefore never perturbs the streams of the others.
#
# For the license of this file, please consult the LICENSE file in the
# root directory of this distribution.
#

import hashlib

import numpy as np


def label_key(*labels):
  """Return a 64-bit integer digest of the given labels."""
  text = "/".join(str(label) for label in labels)
  digest = hashlib.sha256(text.encode("utf-8")).digest()
  return int.from_bytes(digest[:8], "big")

def substream(seed, *labels):
  """Return a numpy Generator for master SEED and the given labels."""
  return np.random.default_rng([int(seed), label_key(*labels)])
