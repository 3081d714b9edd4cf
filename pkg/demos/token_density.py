"""How many tokens per byte does source code cost?

Fits a through-origin line t = k*s.  With tiktoken and a local
cl100k_base rank file (CTXGATE_BPE_FILE) it measures this very package;
otherwise it falls back to a toy ceil(len/4) tokenizer.
"""

import math
import os
from pathlib import Path

from ctxgate import LocalFS, scan_repository
from ctxgate.tokens import TiktokenCounter, fit_token_density, measure_pairs


class QuarterTokenizer:
    name = "ceil4"

    def count_tokens(self, data):
        return math.ceil(len(data) / 4)


try:
    tokenizer = TiktokenCounter("cl100k_base", os.environ.get("CTXGATE_BPE_FILE"))
except Exception as exc:  # no tiktoken, or no rank file and no network
    print("exact tokenizer unavailable:", type(exc).__name__)
    tokenizer = QuarterTokenizer()

root = Path(__file__).resolve().parents[1] / "src"
fs = LocalFS(root)
pairs = measure_pairs(scan_repository(fs), fs, tokenizer, ascii_only=True)
study = fit_token_density([(s, t) for _, s, t in pairs])
print(f"{study.n} files  k={study.k_hat:.4f} tokens/byte  r={study.pearson_r:.4f}  "
      f"mean abs err={study.mean_abs_err_pct:.1f}%")
