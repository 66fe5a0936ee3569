"""Natural-logic fact verification.

Builds a proof for a claim against evidence sentences: the claim is chunked
into a multi-granular span lattice, each span is aligned to evidence and
assigned a natural-logic operator by scoring boolean questions against a
question-answering backend, and the best-scoring operator sequence is
executed on a three-state veracity automaton to produce the verdict.  The
proof itself is the justification: re-running its operators reproduces the
label.
"""

from natproof.natlog import NatOp, VeracityState, dfa_run
from natproof.pipeline import EngineConfig, Verdict, render_proof, run_eval, verify

__all__ = [
    "NatOp",
    "VeracityState",
    "dfa_run",
    "EngineConfig",
    "Verdict",
    "render_proof",
    "run_eval",
    "verify",
]

__version__ = "0.1.0"
