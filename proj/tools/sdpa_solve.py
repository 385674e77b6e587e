#!/usr/bin/env python3
# Copyright 2026 The pies authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Solve an SDPA sparse file with SDPA (sdpa-python) and write the primal matrix.

Usage: sdpa_solve.py IN.dat-s OUT

OUT receives one line "block i j value" (1-based, upper triangle) per entry of the
matrix Y of the SDPA dual form.
"""
import sys

import numpy as np
import sdpap


def block_struct(path):
    with open(path) as f:
        lines = [ln for ln in f if ln.strip() and ln.lstrip()[0] not in '"*']
    nblock = int(lines[1].split()[0])
    return [int(t) for t in lines[2].replace(",", " ").split()[:nblock]]


def main():
    src, dst = sys.argv[1], sys.argv[2]
    A, b, c, K, J = sdpap.importsdpa(src)
    x, _, _, _, _ = sdpap.solve(A, b, c, K, J, {"print": "no"})
    x = np.asarray(x.todense()).ravel() if hasattr(x, "todense") else np.ravel(x)
    blocks = block_struct(src)
    lp_off, sdp_off = 0, sum(-d for d in blocks if d < 0)
    with open(dst, "w") as out:
        for k, d in enumerate(blocks, start=1):
            if d < 0:
                for i in range(-d):
                    out.write(f"{k} {i + 1} {i + 1} {x[lp_off + i]:.17g}\n")
                lp_off += -d
            else:
                Y = x[sdp_off:sdp_off + d * d].reshape(d, d)
                for i in range(d):
                    for j in range(i, d):
                        out.write(f"{k} {i + 1} {j + 1} {0.5 * (Y[i, j] + Y[j, i]):.17g}\n")
                sdp_off += d * d


if __name__ == "__main__":
    main()
